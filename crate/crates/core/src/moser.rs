//! Feasible starting maps: a chart-to-chart base map corrected by the
//! Dacorogna–Moser flow so that μ(Φ) det DΦ = η.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;

use crate::deformation::{membership_residual, DiffeoMap};
use crate::density::{density_from_spec, weighted_area, Densities, SurfaceSpec};
use crate::elliptic::NeumannPoisson;
use crate::error::{Error, Result};
use crate::grid::geometry::wrap_angle;
use crate::grid::{build_chart, Chart, DomainSpec, ScalarField, Topology};

/// Chart-coordinate identification of `src` with `tgt`. Charts of the same
/// kind are matched through their reference coordinates; a polar chart and a
/// rectangle are matched radially from their centers.
pub fn base_map(src: Arc<Chart<f64>>, tgt: Arc<Chart<f64>>) -> DiffeoMap<f64> {
    let values = (0..src.len())
        .map(|k| {
            let p = match (src.topology(), tgt.topology()) {
                (a, b) if a == b => tgt.map_reference(src.reference_of(k)),
                (Topology::Polar, _) => {
                    let [rho, theta] = src.reference_of(k);
                    let c = tgt.geometry.local_center();
                    let r = rho * tgt.geometry.extent(theta);
                    tgt.geometry.from_local([c[0] + r * theta.cos(), c[1] + r * theta.sin()])
                }
                (Topology::Rect, _) => {
                    let c = src.geometry.local_center();
                    let q = src.geometry.to_local(src.node(k));
                    let (dx, dy) = (q[0] - c[0], q[1] - c[1]);
                    let alpha = dy.atan2(dx);
                    let s = dx.hypot(dy) / src.geometry.extent(alpha);
                    tgt.map_reference([s.min(1.0), wrap_angle(alpha)])
                }
            };
            Complex::new(p[0], p[1])
        })
        .collect();
    DiffeoMap::new(src, tgt, ScalarField::from_vec(values)).expect("base map has one finite image per node")
}

/// Base map together with the densities it must be corrected to.
#[derive(Clone, Debug)]
pub struct MoserProblem {
    pub base: DiffeoMap<f64>,
    pub densities: Densities<f64>,
}

impl MoserProblem {
    /// ρ = μ(Φ̃) det DΦ̃.
    pub fn pullback_density(&self) -> Result<ScalarField<f64>> {
        pullback_density(&self.base, &self.densities)
    }
}

fn eta_values(chart: &Chart<f64>, densities: &Densities<f64>) -> ScalarField<f64> {
    densities.eta_field().cloned().unwrap_or_else(|| chart.constant(1.0))
}

fn pullback_density(phi: &DiffeoMap<f64>, densities: &Densities<f64>) -> Result<ScalarField<f64>> {
    let mu = densities.mu_pullback(phi)?;
    let det = crate::deformation::jacobian_fields(phi).det;
    Ok(match mu {
        Some(m) => m.zip_map(&det, |a, b| a * b),
        None => det,
    })
}

/// Correction machinery for one source chart; the Poisson factorization is
/// reused across passes and calls.
#[derive(Debug)]
pub struct MoserCorrector {
    poisson: NeumannPoisson,
    chart: Arc<Chart<f64>>,
    pub max_passes: usize,
}

/// Result of a correction: the map and its final max membership residual.
#[derive(Clone, Debug)]
pub struct Corrected {
    pub phi: DiffeoMap<f64>,
    pub residual: f64,
    pub passes: usize,
}

impl MoserCorrector {
    pub fn new(chart: Arc<Chart<f64>>) -> Result<Self> {
        Ok(MoserCorrector { poisson: NeumannPoisson::new(chart.clone())?, chart, max_passes: 12 })
    }

    /// Repeats Moser passes until max |μ(Φ) det DΦ − η| ≤ tol.
    pub fn correct(&self, base: &DiffeoMap<f64>, densities: &Densities<f64>, tol: f64) -> Result<Corrected> {
        let out = self.improve(base, densities, tol)?;
        if out.residual > tol {
            return Err(Error::ToleranceNotMet { achieved: out.residual, tol });
        }
        Ok(out)
    }

    /// Like `correct`, but returns the best map reached when passes stop
    /// reducing the residual before `tol`.
    pub fn improve(&self, base: &DiffeoMap<f64>, densities: &Densities<f64>, tol: f64) -> Result<Corrected> {
        let eta = eta_values(&self.chart, densities);
        let mut phi = base.clone();
        let mut residual = self.residual(&phi, densities)?;
        let mut passes = 0;
        while residual > tol && passes < self.max_passes {
            let next = self.pass(&phi, densities, &eta)?;
            let next_residual = self.residual(&next, densities)?;
            passes += 1;
            if next_residual >= residual {
                break;
            }
            phi = next;
            residual = next_residual;
        }
        Ok(Corrected { phi, residual, passes })
    }

    fn residual(&self, phi: &DiffeoMap<f64>, densities: &Densities<f64>) -> Result<f64> {
        let mu = densities.mu_pullback(phi)?;
        Ok(membership_residual(phi, mu.as_ref(), densities.eta_field()).max_abs())
    }

    /// One Dacorogna–Moser pass on `phi`.
    pub fn single_pass(&self, phi: &DiffeoMap<f64>, densities: &Densities<f64>) -> Result<DiffeoMap<f64>> {
        self.pass(phi, densities, &eta_values(&self.chart, densities))
    }

    /// One Dacorogna–Moser pass: T pushes η forward to ρ, Φ ← Φ∘T.
    fn pass(&self, phi: &DiffeoMap<f64>, densities: &Densities<f64>, eta: &ScalarField<f64>) -> Result<DiffeoMap<f64>> {
        let chart = &self.chart;
        let rho = pullback_density(phi, densities)?;
        if let Some((index, &value)) = rho.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::SolverDiverged(format!(
                "pullback density {value} at node {index} is not positive"
            )));
        }
        let diff = &rho - eta;
        let (u, _) = self.poisson.solve(&diff)?;
        let (ux, uy) = chart.gradient(&u);
        let mut grad = ux.zip_map(&uy, Complex::new);
        // no flux through the boundary: drop the normal component there
        for b in chart.boundary() {
            let g = grad.get(b.node);
            let gn = g.re * b.normal[0] + g.im * b.normal[1];
            let tangential = if b.inward.is_none() {
                Complex::new(0.0, 0.0) // rectangle corners stay put
            } else {
                g - Complex::new(gn * b.normal[0], gn * b.normal[1])
            };
            grad.set(b.node, tangential);
        }

        let min_density = eta.values().iter().chain(rho.values()).fold(f64::INFINITY, |m, &v| m.min(v));
        let max_speed = grad.max_abs::<f64>() / min_density;
        let h = chart.spacing();
        let steps = ((max_speed / (0.5 * h)).ceil() as usize).max(1);
        let ds = 1.0 / steps as f64;

        let velocity = |p: [f64; 2], s: f64| -> Result<[f64; 2]> {
            let st = chart.interp_stencil(p)?;
            let g = st.apply(&grad);
            let e = st.apply(eta);
            let r = st.apply(&rho);
            let rs = (1.0 - s) * e + s * r;
            Ok([-g.re / rs, -g.im / rs])
        };
        let clamp = |p: [f64; 2]| chart.clamp_point(p);

        let mut endpoints = Vec::with_capacity(chart.len());
        for k in 0..chart.len() {
            let mut x = chart.node(k);
            for step in 0..steps {
                let s = step as f64 * ds;
                let k1 = velocity(x, s)?;
                let x2 = clamp([x[0] + 0.5 * ds * k1[0], x[1] + 0.5 * ds * k1[1]])?;
                let k2 = velocity(x2, s + 0.5 * ds)?;
                let x3 = clamp([x[0] + 0.5 * ds * k2[0], x[1] + 0.5 * ds * k2[1]])?;
                let k3 = velocity(x3, s + 0.5 * ds)?;
                let x4 = clamp([x[0] + ds * k3[0], x[1] + ds * k3[1]])?;
                let k4 = velocity(x4, s + ds)?;
                x = clamp([
                    x[0] + ds / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    x[1] + ds / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ])?;
            }
            endpoints.push(x);
        }
        phi.compose_traced(&endpoints)
    }
}

/// One-shot correction of `problem.base`.
pub fn moser_correct(problem: &MoserProblem, tol: f64) -> Result<DiffeoMap<f64>> {
    let corrector = MoserCorrector::new(problem.base.source().clone())?;
    Ok(corrector.correct(&problem.base, &problem.densities, tol)?.phi)
}

/// Charts and densities of a deformation problem.
#[derive(Clone, Debug)]
pub struct Setup {
    pub source: Arc<Chart<f64>>,
    pub target: Arc<Chart<f64>>,
    pub densities: Densities<f64>,
}

/// Builds charts and densities and checks that total masses agree within
/// 1e-6 relative. `None` surfaces are flat.
pub fn setup(
    source: &DomainSpec,
    target: &DomainSpec,
    source_surface: Option<&SurfaceSpec>,
    target_surface: Option<&SurfaceSpec>,
    n: usize,
) -> Result<Setup> {
    let src = Arc::new(build_chart::<f64>(source, n)?);
    let tgt = Arc::new(build_chart::<f64>(target, n)?);
    let eta = source_surface.map(|s| density_from_spec(s, src.clone())).transpose()?;
    let mu = target_surface.map(|s| density_from_spec(s, tgt.clone())).transpose()?;
    let mass = |d: &Option<crate::density::ConformalDensity<f64>>, spec: &DomainSpec| match d {
        Some(d) => d.analytic_area().unwrap_or_else(|| weighted_area(d)),
        None => spec.area(),
    };
    let (ms, mt) = (mass(&eta, source), mass(&mu, target));
    if (ms - mt).abs() > 1e-6 * ms.abs().max(mt.abs()) {
        return Err(Error::AreaMismatch { source_area: ms, target_area: mt });
    }
    Ok(Setup { source: src, target: tgt, densities: Densities { mu, eta } })
}

/// Base map followed by Moser correction to membership residual ≤ `tol`.
pub fn build_initial_map(setup: &Setup, tol: f64) -> Result<DiffeoMap<f64>> {
    let base = base_map(setup.source.clone(), setup.target.clone());
    let corrector = MoserCorrector::new(setup.source.clone())?;
    Ok(corrector.correct(&base, &setup.densities, tol)?.phi)
}

/// Disk spec of the given area, handy for equal-area problems.
pub fn disk_with_area(area: f64) -> DomainSpec {
    DomainSpec::Disk { radius: (area / PI).sqrt(), center: [0.0, 0.0], rotation: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{energies, hopf_field, jacobian_fields};

    fn chart(spec: &DomainSpec, n: usize) -> Arc<Chart<f64>> {
        Arc::new(build_chart(spec, n).unwrap())
    }

    #[test]
    fn base_map_on_identical_disks_is_identity() {
        let c = chart(&DomainSpec::unit_disk(), 24);
        let phi = base_map(c.clone(), c.clone());
        assert!(phi.sup_distance(&DiffeoMap::identity(c)) < 1e-14);
    }

    #[test]
    fn base_map_to_translated_disk_is_translation() {
        let src = chart(&DomainSpec::unit_disk(), 24);
        let tgt = chart(&DomainSpec::Disk { radius: 1.0, center: [0.4, -0.2], rotation: 0.0 }, 24);
        let phi = base_map(src.clone(), tgt);
        for k in 0..src.len() {
            let p = src.node(k);
            let q = phi.image(k);
            assert!((q[0] - p[0] - 0.4).abs() < 1e-14 && (q[1] - p[1] + 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn base_map_between_rectangles_is_affine() {
        let src = chart(&DomainSpec::Rect { w: 2.0, h: 0.5, origin: [0.0, 0.0], rotation: 0.0 }, 16);
        let tgt = chart(&DomainSpec::unit_square(), 16);
        let phi = base_map(src.clone(), tgt);
        for k in 0..src.len() {
            let p = src.node(k);
            let q = phi.image(k);
            assert!((q[0] - p[0] / 2.0).abs() < 1e-14 && (q[1] - 2.0 * p[1]).abs() < 1e-14);
        }
        assert!(jacobian_fields(&phi).det.values().iter().all(|d| (d - 1.0).abs() < 1e-12));
    }

    #[test]
    fn already_feasible_base_is_returned_unchanged() {
        let c = chart(&DomainSpec::unit_disk(), 24);
        let problem = MoserProblem { base: DiffeoMap::identity(c.clone()), densities: Densities::flat() };
        let out = moser_correct(&problem, 1e-10).unwrap();
        assert_eq!(out.values(), problem.base.values());
        let rho = problem.pullback_density().unwrap();
        assert!(rho.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn exponential_stretch_on_square_is_corrected() {
        let c = chart(&DomainSpec::unit_square(), 64);
        let e = std::f64::consts::E;
        let base = DiffeoMap::from_fn(c.clone(), c.clone(), |p| [(p[0].exp() - 1.0) / (e - 1.0), p[1]]);
        let corrector = MoserCorrector::new(c.clone()).unwrap();
        let out = corrector.correct(&base, &Densities::flat(), 1e-3).unwrap();
        assert!(out.residual <= 1e-3, "residual {}", out.residual);
        assert!(jacobian_fields(&out.phi).det.values().iter().all(|&d| d > 0.0));
        // the exact correction is x ↦ ln(1 + (e − 1)x), so Φ becomes the identity
        assert!(out.phi.sup_distance(&DiffeoMap::identity(c)) < 5e-3);
    }

    #[test]
    fn sphere_target_with_flat_source_is_corrected() {
        let sphere = SurfaceSpec::SpherePatch { radius: 1.0, disk_radius: 1.0 };
        let flat = SurfaceSpec::Flat { scale: 2.0 };
        let s = setup(&DomainSpec::unit_disk(), &DomainSpec::unit_disk(), Some(&flat), Some(&sphere), 64).unwrap();
        // radial solution of 2r dr = μ(R) R dR
        let exact = DiffeoMap::from_fn(s.source.clone(), s.target.clone(), |p| {
            let f = 1.0 / (2.0 - p[0] * p[0] - p[1] * p[1]).sqrt();
            [p[0] * f, p[1] * f]
        });
        let residual = |phi: &DiffeoMap<f64>| {
            let mu = s.densities.mu_pullback(phi).unwrap();
            membership_residual(phi, mu.as_ref(), s.densities.eta_field()).max_abs::<f64>()
        };
        // truncation leaves the exact map itself slightly off the constraint
        let floor = residual(&exact);
        assert!(floor < 1e-3, "floor {floor}");
        let phi = build_initial_map(&s, floor).unwrap();
        assert!(residual(&phi) <= floor);
        assert!(phi.sup_distance(&exact) < 2e-3, "distance {}", phi.sup_distance(&exact));
    }

    #[test]
    fn rotated_disk_initial_map_is_rigid() {
        let target = DomainSpec::Disk { radius: 1.0, center: [0.3, 0.1], rotation: 0.8 };
        let s = setup(&DomainSpec::unit_disk(), &target, None, None, 32).unwrap();
        let phi = build_initial_map(&s, 1e-10).unwrap();
        assert!(hopf_field(&phi).max_abs::<f64>() < 1e-12);
        assert!(energies(&phi, None, None).det_drift < 1e-12);
    }

    #[test]
    fn unequal_areas_are_rejected() {
        let err = setup(&DomainSpec::unit_disk(), &DomainSpec::unit_square(), None, None, 16).unwrap_err();
        assert!(matches!(err, Error::AreaMismatch { .. }));
    }

    #[test]
    fn idempotent_on_corrected_maps() {
        let c = chart(&DomainSpec::unit_disk(), 48);
        let base = DiffeoMap::from_fn(c.clone(), c.clone(), |p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let s = 1.0 + 0.1 * (1.0 - r2);
            [p[0] * s, p[1] * s]
        });
        let corrector = MoserCorrector::new(c.clone()).unwrap();
        let first = corrector.correct(&base, &Densities::flat(), 1e-3).unwrap();
        let second = corrector.correct(&first.phi, &Densities::flat(), 1e-3).unwrap();
        assert!(second.phi.sup_distance(&first.phi) <= 1e-3);
    }
}
