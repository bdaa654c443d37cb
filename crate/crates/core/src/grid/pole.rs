//! Pole filter for polar charts.
//!
//! Derivatives of fields obtained from elliptic solves or interpolation carry
//! angular noise on the innermost rings that every further derivative
//! amplifies by 1/ρ. A smooth field has angular modes of size O(ρ^|m|) there,
//! so truncating the high modes on those rings removes the noise while
//! changing smooth fields only at high order in ρ.

use std::f64::consts::TAU;

use super::{Chart, Field, Topology};
use crate::scalar::{NodeValue, Scalar};

/// Rings that are filtered, counted from the pole.
const FILTERED_RINGS: usize = 4;
/// Highest angular mode kept on ring i is `BASE_MODES + i`.
const BASE_MODES: usize = 3;

impl<T: Scalar> Chart<T> {
    /// Copy of `f` with angular modes above `BASE_MODES + i` removed on the
    /// innermost rings i. Rectangular charts are returned unchanged.
    pub fn pole_filtered<V: NodeValue<T>>(&self, f: &Field<V>) -> Field<V> {
        let lat = self.lattice();
        if lat.topology != Topology::Polar {
            return f.clone();
        }
        let nv = lat.nv;
        let mut out = f.clone();
        for i in 0..FILTERED_RINGS.min(lat.nu) {
            let modes = (BASE_MODES + i).min((nv - 1) / 2);
            let ring: Vec<V> = (0..nv).map(|j| f.get(lat.idx(i, j))).collect();
            let mut coeffs = Vec::with_capacity(modes + 1);
            for m in 0..=modes {
                let (mut a, mut b) = (V::zero(), V::zero());
                for (j, &v) in ring.iter().enumerate() {
                    let (s, c) = (TAU * (m * j) as f64 / nv as f64).sin_cos();
                    a += v * T::lit(c);
                    b += v * T::lit(s);
                }
                let w = if m == 0 { 1.0 } else { 2.0 } / nv as f64;
                coeffs.push((a * T::lit(w), b * T::lit(w)));
            }
            for j in 0..nv {
                let mut acc = V::zero();
                for (m, &(a, b)) in coeffs.iter().enumerate() {
                    let (s, c) = (TAU * (m * j) as f64 / nv as f64).sin_cos();
                    acc += a * T::lit(c) + b * T::lit(s);
                }
                out.set(lat.idx(i, j), acc);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::grid::{build_chart, Chart, DomainSpec};

    #[test]
    fn low_degree_polynomials_pass_through_unchanged() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 64).unwrap();
        let f = chart.field_from_fn(|p| 1.0 + p[0] - 2.0 * p[1] * p[1] + p[0] * p[0] * p[1]);
        let g = chart.pole_filtered(&f);
        assert!((&g - &f).max_abs::<f64>() < 1e-13);
    }

    #[test]
    fn smooth_fields_change_at_high_order_only() {
        let err = |n| {
            let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), n).unwrap();
            let f = chart.field_from_fn(|p| (2.0 * p[0]).sin() * (3.0 * p[1]).exp());
            (&chart.pole_filtered(&f) - &f).max_abs::<f64>()
        };
        let (coarse, fine) = (err(32), err(64));
        assert!(fine < 1e-6 && fine < coarse / 16.0, "{coarse} then {fine}");
    }

    #[test]
    fn angular_noise_is_removed() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 64).unwrap();
        let smooth = chart.field_from_fn(|p| (2.0 * p[0]).sin() * p[1].exp());
        let mut noisy = smooth.clone();
        let nv = chart.shape().1;
        for j in 0..nv {
            let k = chart.index(0, j);
            let theta = std::f64::consts::TAU * j as f64 / nv as f64;
            noisy.set(k, smooth.get(k) + 0.1 * (17.0 * theta).cos());
        }
        let g = chart.pole_filtered(&noisy);
        let err = (&g - &smooth).max_abs::<f64>();
        assert!(err < 1e-3, "error {err}");
    }

    #[test]
    fn rectangles_are_untouched() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_square(), 32).unwrap();
        let f = chart.field_from_fn(|p| p[0].sin());
        assert_eq!(chart.pole_filtered(&f).values(), f.values());
    }
}
