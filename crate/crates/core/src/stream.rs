//! Descent stream function ψ = ψ₀ + ψ₁ + ψ₂, its multipliers, the induced
//! velocity and the predicted energy rate.

use std::sync::Arc;

use num_complex::Complex;

use crate::elliptic::{
    combine, inner, l2_norm, orthogonality_multiplier, ClampedBiharmonic, NavierBiharmonic,
};
use crate::error::Result;
use crate::grid::{Chart, ComplexField, ScalarField};

/// Interior weight of the frozen rate decomposition.
pub const RATE_C1: f64 = 2.0;
/// Boundary weight of the frozen rate decomposition.
pub const RATE_C2: f64 = 0.5;

fn scale(f: &ComplexField<f64>, w: Option<&ScalarField<f64>>, power: i32) -> ComplexField<f64> {
    match w {
        Some(w) => f.zip_map(w, |z, s| z * s.powi(power)),
        None => f.clone(),
    }
}

/// ψ₀ = −Im ∂_z̄(∂_z̄(μ²(Φ) f) η⁻¹). With both densities absent this is
/// −Im ∂²_z̄ f.
pub fn psi0_descent(
    chart: &Chart<f64>,
    f: &ComplexField<f64>,
    mu_pullback: Option<&ScalarField<f64>>,
    eta: Option<&ScalarField<f64>>,
) -> ScalarField<f64> {
    let inner = chart.d_zbar(&scale(f, mu_pullback, 2));
    chart.d_zbar(&scale(&inner, eta, -1)).map(|z| -z.im)
}

/// Im(f τ²) at every boundary sample.
pub fn boundary_residual(chart: &Chart<f64>, f: &ComplexField<f64>) -> Vec<f64> {
    chart.boundary().iter().map(|b| (f.get(b.node) * b.tangent * b.tangent).im).collect()
}

/// v = i η⁻¹ ∂_z̄ψ, i.e. ½(−ψ_y, ψ_x)/η.
pub fn velocity_from_stream(
    chart: &Chart<f64>,
    psi: &ScalarField<f64>,
    eta: Option<&ScalarField<f64>>,
) -> ComplexField<f64> {
    let i = Complex::new(0.0, 1.0);
    chart.pole_filtered(&scale(&chart.d_zbar_real(psi).map(|z| i * z), eta, -1))
}

#[derive(Clone, Debug)]
pub struct StreamParts {
    pub psi0: ScalarField<f64>,
    pub psi1: ScalarField<f64>,
    pub psi2: ScalarField<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub psi_total: ScalarField<f64>,
    /// v₁ + i v₂ per node.
    pub velocity: ComplexField<f64>,
}

impl StreamParts {
    /// Largest |∫ψᵢψ₀| / (‖ψ₀‖‖ψᵢ‖) over i = 1, 2; zero when either norm is.
    pub fn orthogonality_defect(&self, chart: &Chart<f64>) -> f64 {
        let n0 = l2_norm(chart, &self.psi0);
        [&self.psi1, &self.psi2]
            .iter()
            .map(|p| {
                let denom = n0 * l2_norm(chart, p);
                if denom == 0.0 {
                    0.0
                } else {
                    inner(chart, p, &self.psi0).abs() / denom
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Clamped biharmonic factorization reused across descent steps.
#[derive(Debug)]
pub struct StreamSolver {
    biharmonic: ClampedBiharmonic,
}

impl StreamSolver {
    pub fn new(chart: Arc<Chart<f64>>) -> Result<Self> {
        Ok(StreamSolver { biharmonic: ClampedBiharmonic::new(chart)? })
    }

    pub fn chart(&self) -> &Arc<Chart<f64>> {
        self.biharmonic.chart()
    }

    pub fn biharmonic(&self) -> &ClampedBiharmonic {
        &self.biharmonic
    }

    /// Builds ψ₁ (matching −ψ₀ and −∂ψ₀/∂n on the boundary) and ψ₂ (zero
    /// trace, ∂ψ₂/∂n = Im fτ²), each made L²-orthogonal to ψ₀ through one
    /// multiplier, and the velocity of ψ = ψ₀ + ψ₁ + ψ₂.
    pub fn assemble(
        &self,
        f: &ComplexField<f64>,
        mu_pullback: Option<&ScalarField<f64>>,
        eta: Option<&ScalarField<f64>>,
    ) -> Result<StreamParts> {
        let chart = self.chart().as_ref();
        let psi0 = psi0_descent(chart, f, mu_pullback, eta);
        let d1: Vec<f64> = chart.boundary_trace(&psi0).iter().map(|v| -v).collect();
        let n1: Vec<f64> = chart.normal_derivative(&psi0).iter().map(|v| -v).collect();
        let n2 = boundary_residual(chart, f);
        let zeros = vec![0.0; n2.len()];
        let mut sols =
            self.biharmonic.solve_many(&[(&d1, &n1, None), (&zeros, &n2, None), (&zeros, &zeros, Some(&psi0))])?;
        let psi_p = sols.pop().expect("three solutions");
        let h2 = sols.pop().expect("three solutions");
        let h1 = sols.pop().expect("three solutions");
        let lambda1 = orthogonality_multiplier(chart, &h1, &psi_p, &psi0)?;
        let lambda2 = orthogonality_multiplier(chart, &h2, &psi_p, &psi0)?;
        let psi1 = combine(&h1, &psi_p, lambda1);
        let psi2 = combine(&h2, &psi_p, lambda2);
        let mut psi_total = ScalarField::from_vec(
            (0..chart.len()).map(|k| psi0.get(k) + psi1.get(k) + psi2.get(k)).collect(),
        );
        // the boundary trace is zero up to solver rounding; make it exact
        for b in chart.boundary() {
            psi_total.set(b.node, 0.0);
        }
        let velocity = velocity_from_stream(chart, &psi_total, eta);
        Ok(StreamParts { psi0, psi1, psi2, lambda1, lambda2, psi_total, velocity })
    }
}

/// One-shot assembly; factors the biharmonic operator of `chart`.
pub fn assemble_stream(
    chart: Arc<Chart<f64>>,
    f: &ComplexField<f64>,
    mu_pullback: Option<&ScalarField<f64>>,
    eta: Option<&ScalarField<f64>>,
) -> Result<StreamParts> {
    StreamSolver::new(chart)?.assemble(f, mu_pullback, eta)
}

/// dE/dt along Φ∘S_t for the flow of ψ: 2 Im ∫ μ²(Φ) f ∂_z̄(η⁻¹ ∂_z̄ψ).
pub fn predicted_rate(
    chart: &Chart<f64>,
    f: &ComplexField<f64>,
    psi: &ScalarField<f64>,
    mu_pullback: Option<&ScalarField<f64>>,
    eta: Option<&ScalarField<f64>>,
) -> f64 {
    let dd = chart.d_zbar(&scale(&chart.d_zbar_real(psi), eta, -1));
    let integrand = scale(f, mu_pullback, 2).zip_map(&dd, |a, b| (a * b).im);
    2.0 * chart.integrate_area(&integrand)
}

/// Steepest descent stream for the H² seminorm. For ψ vanishing on the
/// boundary the rate is −RATE_C1∫ψψ₀ − RATE_C2∮∂ₙψ μ²η⁻¹ Im fτ², so its
/// Riesz representative solves Δ²ψ = RATE_C1 ψ₀, ψ = 0, Δψ = RATE_C2 μ²η⁻¹
/// Im fτ² on the boundary, and then dE/dt = −∫(Δψ)². The velocity is of
/// order zero in Φ, which keeps explicit steps stable.
pub fn sobolev_stream(
    navier: &NavierBiharmonic,
    f: &ComplexField<f64>,
    mu_pullback: Option<&ScalarField<f64>>,
    eta: Option<&ScalarField<f64>>,
) -> Result<ScalarField<f64>> {
    let chart = navier.chart().as_ref();
    let source = psi0_descent(chart, f, mu_pullback, eta).map(|v| RATE_C1 * v);
    let boundary: Vec<f64> = chart
        .boundary()
        .iter()
        .zip(boundary_residual(chart, f))
        .map(|(b, r)| {
            let mu = mu_pullback.map_or(1.0, |m| m.get(b.node));
            let eta = eta.map_or(1.0, |e| e.get(b.node));
            RATE_C2 * mu * mu / eta * r
        })
        .collect();
    navier.solve(&source, &boundary)
}

/// The two nonnegative pieces of the descent rate: ∫ψ₀² and
/// ∮ μ²η⁻¹ (Im fτ²)² |dz|. The rate is −RATE_C1·first − RATE_C2·second.
pub fn rate_terms(
    chart: &Chart<f64>,
    f: &ComplexField<f64>,
    psi0: &ScalarField<f64>,
    mu_pullback: Option<&ScalarField<f64>>,
    eta: Option<&ScalarField<f64>>,
) -> (f64, f64) {
    let interior = chart.integrate_area(&psi0.map(|v| v * v));
    let weights: Vec<f64> = chart
        .boundary()
        .iter()
        .zip(boundary_residual(chart, f))
        .map(|(b, r)| {
            let mu = mu_pullback.map_or(1.0, |m| m.get(b.node));
            let eta = eta.map_or(1.0, |e| e.get(b.node));
            mu * mu / eta * r * r
        })
        .collect();
    (interior, chart.integrate_boundary(&weights))
}

/// −RATE_C1 ∫ψ₀² − RATE_C2 ∮ μ²η⁻¹(Im fτ²)².
pub fn decomposed_rate(
    chart: &Chart<f64>,
    f: &ComplexField<f64>,
    psi0: &ScalarField<f64>,
    mu_pullback: Option<&ScalarField<f64>>,
    eta: Option<&ScalarField<f64>>,
) -> f64 {
    let (a, b) = rate_terms(chart, f, psi0, mu_pullback, eta);
    -RATE_C1 * a - RATE_C2 * b
}

/// max |ψ₀| over nodes off the boundary.
pub fn interior_residual(chart: &Chart<f64>, psi0: &ScalarField<f64>) -> f64 {
    (0..chart.len())
        .filter(|&k| !chart.is_boundary_node(k))
        .map(|k| psi0.get(k).abs())
        .fold(0.0, f64::max)
}

/// max |Im fτ²| over boundary samples.
pub fn boundary_residual_max(chart: &Chart<f64>, f: &ComplexField<f64>) -> f64 {
    boundary_residual(chart, f).into_iter().map(f64::abs).fold(0.0, f64::max)
}
