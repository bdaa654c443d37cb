//! The map state Φ: Ω → Ω₁ and the quantities derived from it.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Chart, ComplexField, ScalarField};
use crate::scalar::{hopf, k_invariant, Scalar};

/// Grid-sampled map: one image point `x + iy` per source node.
#[derive(Clone, Debug)]
pub struct DiffeoMap<T> {
    source: Arc<Chart<T>>,
    target: Arc<Chart<T>>,
    values: ComplexField<T>,
}

impl<T: Scalar> DiffeoMap<T> {
    pub fn new(source: Arc<Chart<T>>, target: Arc<Chart<T>>, values: ComplexField<T>) -> Result<Self> {
        if values.len() != source.len() {
            return Err(Error::BadConfig(format!(
                "map has {} values but the source chart has {} nodes",
                values.len(),
                source.len()
            )));
        }
        if !values.all_finite() {
            return Err(Error::BadConfig("map contains non-finite image points".to_string()));
        }
        Ok(DiffeoMap { source, target, values })
    }

    /// Identity on `chart`, viewed as a map into the same chart.
    pub fn identity(chart: Arc<Chart<T>>) -> Self {
        let values = chart.field_from_fn(|p| Complex::new(p[0], p[1]));
        DiffeoMap { source: chart.clone(), target: chart, values }
    }

    pub fn from_fn(source: Arc<Chart<T>>, target: Arc<Chart<T>>, f: impl Fn([T; 2]) -> [T; 2]) -> Self {
        let values = source.field_from_fn(|p| {
            let q = f(p);
            Complex::new(q[0], q[1])
        });
        DiffeoMap { source, target, values }
    }

    /// Same charts, new image points.
    pub fn with_values(&self, values: ComplexField<T>) -> Result<Self> {
        DiffeoMap::new(self.source.clone(), self.target.clone(), values)
    }

    pub fn source(&self) -> &Arc<Chart<T>> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart<T>> {
        &self.target
    }

    pub fn values(&self) -> &ComplexField<T> {
        &self.values
    }

    pub fn image(&self, k: usize) -> [T; 2] {
        let z = self.values.get(k);
        [z.re, z.im]
    }

    pub fn images(&self) -> Vec<[T; 2]> {
        self.values.values().iter().map(|z| [z.re, z.im]).collect()
    }

    /// Φ∘T sampled at the nodes, where `endpoints[k]` = T(x_k). Boundary
    /// nodes stay on the boundary of both domains; other images are clamped
    /// into the target.
    pub fn compose_traced(&self, endpoints: &[[T; 2]]) -> Result<Self> {
        let chart = &self.source;
        let mut images = Vec::with_capacity(chart.len());
        for (k, &x) in endpoints.iter().enumerate() {
            let on_boundary = chart.is_boundary_node(k);
            let x = if on_boundary { chart.project_to_boundary(x)? } else { x };
            let z = chart.interp_at(&self.values, x)?;
            let q = if on_boundary {
                self.target.project_to_boundary([z.re, z.im])?
            } else {
                self.target.clamp_point([z.re, z.im])?
            };
            images.push(Complex::new(q[0], q[1]));
        }
        self.with_values(ComplexField::from_vec(images))
    }

    /// max_k |Φ(x_k) − Ψ(x_k)|.
    pub fn sup_distance(&self, other: &DiffeoMap<T>) -> T {
        (&self.values - &other.values).max_abs()
    }

    /// Largest distance of an image point from the target domain.
    pub fn max_escape(&self) -> T {
        self.images()
            .into_iter()
            .map(|p| match self.target.clamp_point(p) {
                Ok(q) => (p[0] - q[0]).hypot(p[1] - q[1]),
                Err(_) => T::infinity(),
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Partial derivatives of Φ = (φ₁, φ₂) and the Jacobian determinant.
#[derive(Clone, Debug)]
pub struct JacobianFields<T> {
    pub phi1_x: ScalarField<T>,
    pub phi1_y: ScalarField<T>,
    pub phi2_x: ScalarField<T>,
    pub phi2_y: ScalarField<T>,
    pub det: ScalarField<T>,
}

pub fn jacobian_fields<T: Scalar>(phi: &DiffeoMap<T>) -> JacobianFields<T> {
    let (zx, zy) = phi.source.gradient(&phi.values);
    let det = zx.zip_map(&zy, |a, b| a.re * b.im - b.re * a.im);
    JacobianFields { phi1_x: zx.re(), phi1_y: zy.re(), phi2_x: zx.im(), phi2_y: zy.im(), det }
}

/// Entries of the Gram matrix |DΦ|² = [[g11, g12], [g12, g22]] and the Hopf
/// function f = (g22 − g11) + 2i g12.
#[derive(Clone, Debug)]
pub struct GramHopf<T> {
    pub g11: ScalarField<T>,
    pub g12: ScalarField<T>,
    pub g22: ScalarField<T>,
    pub f: ComplexField<T>,
}

pub fn gram_and_hopf<T: Scalar>(phi: &DiffeoMap<T>) -> GramHopf<T> {
    let (zx, zy) = phi.source.gradient(&phi.values);
    let g11 = zx.map(|a| a.norm_sqr());
    let g22 = zy.map(|b| b.norm_sqr());
    let g12 = zx.zip_map(&zy, |a, b| a.re * b.re + a.im * b.im);
    let f = zx.zip_map(&zy, |a, b| hopf([a.re, a.im], [b.re, b.im]));
    GramHopf { g11, g12, g22, f }
}

/// Hopf function alone.
pub fn hopf_field<T: Scalar>(phi: &DiffeoMap<T>) -> ComplexField<T> {
    gram_and_hopf(phi).f
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// ∫ μ²(Φ) tr |DΦ|², the functional the flow descends.
    pub e_dirichlet: f64,
    /// ∫ μ²(Φ) tr² |DΦ|².
    pub e_quad: f64,
    /// ∫ [μ²(Φ) tr² |DΦ|² − 4η²].
    pub k_integral: f64,
    /// max |μ(Φ) det DΦ − η|.
    pub det_drift: f64,
}

fn weight_at<T: Scalar>(w: Option<&ScalarField<T>>, k: usize) -> T {
    w.map_or(T::one(), |f| f.get(k))
}

/// Energies of Φ. `None` densities select the flat case.
pub fn energies<T: Scalar>(
    phi: &DiffeoMap<T>,
    mu_pullback: Option<&ScalarField<T>>,
    eta: Option<&ScalarField<T>>,
) -> EnergyReport {
    let gram = gram_and_hopf(phi);
    let jac = jacobian_fields(phi);
    let chart = &phi.source;
    let four = T::lit(4.0);
    let (mut e1, mut e2, mut ek, mut drift) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (k, &w) in chart.area_weights().iter().enumerate() {
        let mu = weight_at(mu_pullback, k);
        let et = weight_at(eta, k);
        let tr = gram.g11.get(k) + gram.g22.get(k);
        let mu2 = mu * mu;
        e1 += w * mu2 * tr;
        e2 += w * mu2 * tr * tr;
        ek += w * (mu2 * tr * tr - four * et * et);
        drift = drift.max((mu * jac.det.get(k) - et).abs());
    }
    EnergyReport {
        e_dirichlet: e1.to_f64_lossy(),
        e_quad: e2.to_f64_lossy(),
        k_integral: ek.to_f64_lossy(),
        det_drift: drift.to_f64_lossy(),
    }
}

/// Pointwise μ(Φ) det DΦ − η.
pub fn membership_residual<T: Scalar>(
    phi: &DiffeoMap<T>,
    mu_pullback: Option<&ScalarField<T>>,
    eta: Option<&ScalarField<T>>,
) -> ScalarField<T> {
    let det = jacobian_fields(phi).det;
    let values = (0..det.len())
        .map(|k| weight_at(mu_pullback, k) * det.get(k) - weight_at(eta, k))
        .collect();
    ScalarField::from_vec(values)
}

/// Pointwise k(|DΦ|²) = (g11 − g22)² + 4 g12².
pub fn k_field<T: Scalar>(phi: &DiffeoMap<T>) -> ScalarField<T> {
    let g = gram_and_hopf(phi);
    ScalarField::from_vec((0..g.g11.len()).map(|k| k_invariant(g.g11.get(k), g.g12.get(k), g.g22.get(k))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_chart, DomainSpec};

    fn square() -> Arc<Chart<f64>> {
        Arc::new(build_chart(&DomainSpec::unit_square(), 16).unwrap())
    }

    fn disk(n: usize) -> Arc<Chart<f64>> {
        Arc::new(build_chart(&DomainSpec::unit_disk(), n).unwrap())
    }

    #[test]
    fn identity_jacobian() {
        let phi = DiffeoMap::identity(disk(24));
        let j = jacobian_fields(&phi);
        for k in 0..phi.source().len() {
            assert!((j.det.get(k) - 1.0).abs() < 1e-12);
            assert!((j.phi1_x.get(k) - 1.0).abs() < 1e-12 && j.phi1_y.get(k).abs() < 1e-12);
            assert!(j.phi2_x.get(k).abs() < 1e-12 && (j.phi2_y.get(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shear_partials_and_hopf() {
        let c = square();
        let gamma = 1.0;
        let phi = DiffeoMap::from_fn(c.clone(), c, |p| [p[0] + gamma * p[1], p[1]]);
        let j = jacobian_fields(&phi);
        let g = gram_and_hopf(&phi);
        for k in 0..phi.source().len() {
            assert!((j.phi1_y.get(k) - gamma).abs() < 1e-12);
            assert!(j.phi2_x.get(k).abs() < 1e-12);
            assert!((j.det.get(k) - 1.0).abs() < 1e-12);
            assert!((g.g11.get(k) - 1.0).abs() < 1e-12);
            assert!((g.g12.get(k) - 1.0).abs() < 1e-12);
            assert!((g.g22.get(k) - 2.0).abs() < 1e-12);
            assert!((g.f.get(k) - Complex::new(1.0, 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rigid_motion_has_vanishing_hopf_function() {
        let c = disk(32);
        let (s, co) = 0.7_f64.sin_cos();
        let phi = DiffeoMap::from_fn(c.clone(), c, |p| [co * p[0] - s * p[1] + 0.3, s * p[0] + co * p[1] - 0.1]);
        assert!(hopf_field(&phi).max_abs::<f64>() < 1e-12);
        let det = jacobian_fields(&phi).det;
        assert!(det.values().iter().all(|d| (d - 1.0).abs() < 1e-12));
    }

    #[test]
    fn energies_of_identity_and_shear() {
        let c = square();
        let id = energies(&DiffeoMap::identity(c.clone()), None, None);
        assert!((id.e_dirichlet - 2.0).abs() < 1e-12);
        assert!((id.e_quad - 4.0).abs() < 1e-12);
        assert!(id.k_integral.abs() < 1e-12);
        assert!(id.det_drift < 1e-12);

        let shear = DiffeoMap::from_fn(c.clone(), c, |p| [p[0] + p[1], p[1]]);
        let e = energies(&shear, None, None);
        assert!((e.e_dirichlet - 3.0).abs() < 1e-12);
        assert!((e.e_quad - 9.0).abs() < 1e-12);
        assert!((e.k_integral - 5.0).abs() < 1e-12);
        assert!(e.det_drift < 1e-12);
    }

    #[test]
    fn identity_with_matching_densities() {
        let c = disk(32);
        let mu = c.field_from_fn(|p| 4.0 / (1.0 + p[0] * p[0] + p[1] * p[1]).powi(2));
        let phi = DiffeoMap::identity(c.clone());
        let e = energies(&phi, Some(&mu), Some(&mu));
        assert!(e.det_drift < 1e-12);
        let k_pointwise: f64 = c.integrate_area(&mu.map(|m| m * m * 4.0 - 4.0 * m * m));
        assert!((e.k_integral - k_pointwise).abs() < 1e-10);
        assert!(membership_residual(&phi, Some(&mu), Some(&mu)).max_abs::<f64>() < 1e-12);
    }

    #[test]
    fn membership_of_linear_maps() {
        let c = square();
        let squeeze = DiffeoMap::from_fn(c.clone(), c.clone(), |p| [0.5 * p[0], 2.0 * p[1]]);
        assert!(membership_residual(&squeeze, None, None).max_abs::<f64>() < 1e-12);
        let dilation = DiffeoMap::from_fn(c.clone(), c, |p| [2.0 * p[0], 2.0 * p[1]]);
        let r = membership_residual(&dilation, None, None);
        assert!(r.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn k_field_is_nonnegative_and_zero_for_rotations() {
        let c = disk(24);
        let phi = DiffeoMap::from_fn(c.clone(), c.clone(), |p| [p[0] + 0.3 * p[1] * p[1], p[1] + 0.2 * p[0]]);
        assert!(k_field(&phi).values().iter().all(|&k| k >= -1e-12));
        let rot = DiffeoMap::from_fn(c.clone(), c, |p| [-p[1], p[0]]);
        assert!(k_field(&rot).max_abs::<f64>() < 1e-12);
    }

    #[test]
    fn mismatched_values_are_rejected() {
        let c = square();
        let bad = ComplexField::filled(3, Complex::new(0.0, 0.0));
        assert!(DiffeoMap::new(c.clone(), c, bad).is_err());
    }
}
