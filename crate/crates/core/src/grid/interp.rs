//! Tensor four-point interpolation in reference coordinates: cubic Lagrange
//! in each rectangle direction and in the polar radius, trigonometric in the
//! polar angle.

use super::{Chart, Field, Lattice, Topology};
use crate::error::Result;
use crate::scalar::{NodeValue, Scalar};

/// Four-point Lagrange weights for nodes at offsets 0..3 evaluated at `s`.
fn lagrange4(s: f64) -> [f64; 4] {
    let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Four-point weights in the angle for nodes at offsets 0..3 with spacing `h`
/// evaluated at `s`, exact for 1, cos, sin and sin 2(θ − centre). Linear
/// Cartesian fields are then interpolated without error on polar charts, and
/// the span still contains all cubics to leading order.
fn trig4(s: f64, h: f64) -> [f64; 4] {
    let u = (s - 1.5) * h;
    let (a1, a2) = (0.5 * h, 1.5 * h);
    // even part: e1 + e2 = 1, e1 cos a1 + e2 cos a2 = cos u
    let e2 = (u.cos() - a1.cos()) / (a2.cos() - a1.cos());
    let e1 = 1.0 - e2;
    // odd part: o1 sin k a1 + o2 sin k a2 = sin k u for k = 1, 2
    let det = a1.sin() * (2.0 * a2).sin() - a2.sin() * (2.0 * a1).sin();
    let o1 = (u.sin() * (2.0 * a2).sin() - a2.sin() * (2.0 * u).sin()) / det;
    let o2 = (a1.sin() * (2.0 * u).sin() - u.sin() * (2.0 * a1).sin()) / det;
    [0.5 * (e2 - o2), 0.5 * (e1 - o1), 0.5 * (e1 + o1), 0.5 * (e2 + o2)]
}

/// First lattice index of the 4-point stencil and the weights.
fn stencil(pos: f64, lo: isize, hi: isize) -> (isize, [f64; 4]) {
    let start = (pos.floor() as isize - 1).clamp(lo, hi - 3);
    (start, lagrange4(pos - start as f64))
}

/// Sixteen (node, weight) pairs of a bicubic interpolation stencil.
#[derive(Clone, Debug)]
pub struct InterpStencil<T> {
    entries: [(usize, T); 16],
}

impl<T: Scalar> InterpStencil<T> {
    pub fn apply<V: NodeValue<T>>(&self, f: &Field<V>) -> V {
        let values = f.values();
        let mut acc = V::zero();
        for &(k, w) in &self.entries {
            acc += values[k] * w;
        }
        acc
    }
}

pub(crate) fn stencil_reference<T: Scalar>(lat: &Lattice, r: [f64; 2]) -> InterpStencil<T> {
    let (iu, wu, ju, wv) = match lat.topology {
        Topology::Rect => {
            let (i0, wu) = stencil(r[0] / lat.du, 0, lat.nu as isize - 1);
            let (j0, wv) = stencil(r[1] / lat.dv, 0, lat.nv as isize - 1);
            (i0, wu, j0, wv)
        }
        Topology::Polar => {
            // ρ_i = (i + ½)du; indices below zero are resolved by reflection
            let (i0, wu) = stencil(r[0] / lat.du - 0.5, -2, lat.nu as isize - 1);
            let t = r[1] / lat.dv;
            let j0 = t.floor() as isize - 1;
            (i0, wu, j0, trig4(t - j0 as f64, lat.dv))
        }
    };
    let mut entries = [(0usize, T::zero()); 16];
    for (a, &wa) in wu.iter().enumerate() {
        for (b, &wb) in wv.iter().enumerate() {
            let k = lat
                .neighbor(iu + a as isize, ju + b as isize)
                .expect("interpolation stencil stays on the lattice");
            entries[4 * a + b] = (k, T::lit(wa * wb));
        }
    }
    InterpStencil { entries }
}

impl<T: Scalar> Chart<T> {
    /// Interpolated value of `field` at a physical point. Points outside the
    /// domain by less than the clamp tolerance are first projected onto it.
    pub fn interp_at<V: NodeValue<T>>(&self, field: &Field<V>, p: [T; 2]) -> Result<V> {
        Ok(self.interp_stencil(p)?.apply(field))
    }

    /// Interpolation stencil at a physical point, reusable across fields.
    pub fn interp_stencil(&self, p: [T; 2]) -> Result<InterpStencil<T>> {
        let r = self.locate(p)?;
        Ok(stencil_reference(&self.lattice, r))
    }

    /// Like `interp_at`, but points slightly outside the domain are
    /// extrapolated by the boundary stencil instead of being projected.
    pub fn interp_near<V: NodeValue<T>>(&self, field: &Field<V>, p: [T; 2]) -> Result<V> {
        let r = self.locate_near(p)?;
        Ok(stencil_reference(&self.lattice, r).apply(field))
    }

    pub fn interp_sample<V: NodeValue<T>>(&self, field: &Field<V>, points: &[[T; 2]]) -> Result<Vec<V>> {
        points.iter().map(|&p| self.interp_at(field, p)).collect()
    }
}
