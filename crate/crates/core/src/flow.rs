//! Semi-Lagrangian descent flow Φ ← Φ∘S_dt with a monotone line search and
//! Moser reprojection.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::deformation::{energies, hopf_field, DiffeoMap, EnergyReport};
use crate::density::Densities;
use crate::error::{Error, Result};
use crate::grid::{Chart, ComplexField};
use crate::moser::MoserCorrector;
use crate::elliptic::NavierBiharmonic;
use crate::stream::{
    boundary_residual_max, interior_residual, psi0_descent, sobolev_stream, velocity_from_stream, StreamParts,
    StreamSolver,
};

/// Which descent stream drives the flow.
/// Safety factor on the rounding estimate of the interior residual.
const ROUNDOFF_GAIN: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// ψ₀ + ψ₁ + ψ₂. Its velocity is fourth order in Φ, so explicit steps
    /// are only stable for dt of order h⁴.
    Assembled,
    /// The H² Riesz representative of the same rate functional: same
    /// stationary points, velocity of order zero in Φ.
    #[default]
    Sobolev,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub direction: Direction,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Largest displacement per step in units of the chart spacing.
    pub cfl_max: f64,
    /// Absolute stopping tolerances; `None` means `rel_tol` times the
    /// initial residual, floored at `tol_floor` and, for the interior, at
    /// the rounding noise of the residual.
    pub tol_interior: Option<f64>,
    pub tol_boundary: Option<f64>,
    pub rel_tol: f64,
    pub tol_floor: f64,
    /// Reprojection starts when det_drift exceeds both this and the initial
    /// drift.
    pub reproject_threshold: f64,
    pub max_steps: usize,
    pub moser_tol: f64,
    pub max_halvings: usize,
    pub growth: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            direction: Direction::default(),
            dt0: 0.1,
            dt_min: 1e-9,
            dt_max: 1.0,
            cfl_max: 0.5,
            tol_interior: None,
            tol_boundary: None,
            rel_tol: 1e-4,
            tol_floor: 1e-8,
            reproject_threshold: 5e-3,
            max_steps: 2000,
            moser_tol: 1e-4,
            max_halvings: 6,
            growth: 1.2,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt0", self.dt0),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("cfl_max", self.cfl_max),
            ("reproject_threshold", self.reproject_threshold),
            ("moser_tol", self.moser_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::BadConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.dt_min <= self.dt0 && self.dt0 <= self.dt_max) {
            return Err(Error::BadConfig("need dt_min <= dt0 <= dt_max".to_string()));
        }
        if self.growth < 1.0 {
            return Err(Error::BadConfig("growth must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// One trace row. Rejected attempts repeat the metrics of the state they
/// failed to improve and carry the attempted dt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub e_dirichlet: f64,
    pub e_quad: f64,
    pub k_integral: f64,
    pub det_drift: f64,
    pub interior_res: f64,
    pub boundary_res: f64,
    pub dt: f64,
    pub accepted: bool,
}

impl TraceRow {
    pub const HEADER: [&'static str; 10] = [
        "step",
        "t",
        "e_dirichlet",
        "e_quad",
        "k_integral",
        "det_drift",
        "interior_res",
        "boundary_res",
        "dt",
        "accepted",
    ];
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
}

impl FlowTrace {
    pub fn accepted(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| r.accepted)
    }

    /// Accepted rows after the initial one.
    pub fn accepted_steps(&self) -> usize {
        self.accepted().filter(|r| r.step > 0).count()
    }
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub phi: DiffeoMap<f64>,
    pub t: f64,
    pub step_index: usize,
    pub energy: EnergyReport,
    pub interior_res: f64,
    pub boundary_res: f64,
    pub dt: f64,
}

impl FlowState {
    fn row(&self, dt: f64, accepted: bool) -> TraceRow {
        TraceRow {
            step: self.step_index,
            t: self.t,
            e_dirichlet: self.energy.e_dirichlet,
            e_quad: self.energy.e_quad,
            k_integral: self.energy.k_integral,
            det_drift: self.energy.det_drift,
            interior_res: self.interior_res,
            boundary_res: self.boundary_res,
            dt,
            accepted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    /// No decrease down to dt_min: stationary within discretization error.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub phi: DiffeoMap<f64>,
    pub trace: FlowTrace,
    pub status: FlowStatus,
    pub tol_interior: f64,
    pub tol_boundary: f64,
}

/// Φ∘S_dt: every node is traced along v by one RK4 step and Φ is sampled
/// at the endpoint. On polar charts the rings at the pole are then filtered.
pub fn advect(phi: &DiffeoMap<f64>, velocity: &ComplexField<f64>, dt: f64, cfl_max: f64) -> Result<DiffeoMap<f64>> {
    let chart = phi.source().as_ref();
    let displacement = dt.abs() * velocity.max_abs::<f64>();
    let limit = cfl_max * chart.spacing();
    // a step sized exactly at the limit may land one rounding above it
    if displacement > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { displacement, limit });
    }
    if displacement == 0.0 {
        return Ok(phi.clone());
    }
    // intermediate stages near the rim may leave the domain by O(dt²); the
    // velocity is extrapolated there so the trace keeps its order
    let v = |p: [f64; 2]| -> Result<Complex<f64>> { chart.interp_near(velocity, p) };
    let stage = |p: [f64; 2], w: Complex<f64>, s: f64| [p[0] + s * w.re, p[1] + s * w.im];
    let mut endpoints = Vec::with_capacity(chart.len());
    for k in 0..chart.len() {
        let x = chart.node(k);
        let k1 = velocity.get(k);
        let k2 = v(stage(x, k1, 0.5 * dt))?;
        let k3 = v(stage(x, k2, 0.5 * dt))?;
        let k4 = v(stage(x, k3, dt))?;
        endpoints.push(stage(x, k1 + k2 * 2.0 + k3 * 2.0 + k4, dt / 6.0));
    }
    // interpolation error near the pole is not smooth in angle and would
    // accumulate in the third derivatives the residual is built from
    let traced = phi.compose_traced(&endpoints)?;
    traced.with_values(chart.pole_filtered(traced.values()))
}

/// Descent engine for one pair of charts: holds the biharmonic and Poisson
/// factorizations and the densities.
#[derive(Debug)]
pub struct FlowEngine {
    stream: StreamSolver,
    navier: NavierBiharmonic,
    moser: MoserCorrector,
    densities: Densities<f64>,
    config: FlowConfig,
}

impl FlowEngine {
    pub fn new(chart: Arc<Chart<f64>>, densities: Densities<f64>, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        Ok(FlowEngine {
            stream: StreamSolver::new(chart.clone())?,
            navier: NavierBiharmonic::new(chart.clone())?,
            moser: MoserCorrector::new(chart)?,
            densities,
            config,
        })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn densities(&self) -> &Densities<f64> {
        &self.densities
    }

    pub fn chart(&self) -> &Chart<f64> {
        self.stream.chart()
    }

    fn energy(&self, phi: &DiffeoMap<f64>) -> Result<EnergyReport> {
        let mu = self.densities.mu_pullback(phi)?;
        Ok(energies(phi, mu.as_ref(), self.densities.eta_field()))
    }

    /// Descent stream of the current map.
    pub fn stream_parts(&self, phi: &DiffeoMap<f64>) -> Result<StreamParts> {
        let mu = self.densities.mu_pullback(phi)?;
        self.stream.assemble(&hopf_field(phi), mu.as_ref(), self.densities.eta_field())
    }

    /// Velocity of the configured descent direction at Φ.
    pub fn descent_velocity(&self, phi: &DiffeoMap<f64>) -> Result<ComplexField<f64>> {
        match self.config.direction {
            Direction::Assembled => Ok(self.stream_parts(phi)?.velocity),
            Direction::Sobolev => {
                let mu = self.densities.mu_pullback(phi)?;
                let eta = self.densities.eta_field();
                let psi = sobolev_stream(&self.navier, &hopf_field(phi), mu.as_ref(), eta)?;
                Ok(velocity_from_stream(self.chart(), &psi, eta))
            }
        }
    }

    /// Size of the interior residual that rounding alone produces for Φ: the
    /// residual takes third differences, so errors of ε|Φ| grow by h_min⁻³.
    pub fn interior_noise(&self, phi: &DiffeoMap<f64>) -> f64 {
        let scale = phi.images().iter().map(|p| p[0].hypot(p[1])).fold(1.0, f64::max);
        ROUNDOFF_GAIN * f64::EPSILON * scale / self.chart().min_spacing().powi(3)
    }

    /// (interior_res, boundary_res) of Φ.
    pub fn residuals(&self, phi: &DiffeoMap<f64>) -> Result<(f64, f64)> {
        let chart = self.chart();
        let mu = self.densities.mu_pullback(phi)?;
        let f = hopf_field(phi);
        let psi0 = psi0_descent(chart, &f, mu.as_ref(), self.densities.eta_field());
        Ok((interior_residual(chart, &psi0), boundary_residual_max(chart, &f)))
    }

    pub fn initial_state(&self, phi: DiffeoMap<f64>) -> Result<FlowState> {
        let energy = self.energy(&phi)?;
        let (interior_res, boundary_res) = self.residuals(&phi)?;
        Ok(FlowState { phi, t: 0.0, step_index: 0, energy, interior_res, boundary_res, dt: self.config.dt0 })
    }

    /// Restores the membership constraint by a Moser correction.
    pub fn reproject(&self, phi: &DiffeoMap<f64>, tol: f64) -> Result<DiffeoMap<f64>> {
        let out = self.moser.improve(phi, &self.densities, tol)?;
        if out.residual > tol {
            return Err(Error::ToleranceNotMet { achieved: out.residual, tol });
        }
        Ok(out.phi)
    }

    /// Advected map, reprojected when its drift exceeds `trigger`.
    fn candidate(
        &self,
        phi: &DiffeoMap<f64>,
        velocity: &ComplexField<f64>,
        dt: f64,
        trigger: f64,
        reproject_tol: f64,
    ) -> Result<(DiffeoMap<f64>, EnergyReport)> {
        let mut candidate = advect(phi, velocity, dt, self.config.cfl_max)?;
        let mut energy = self.energy(&candidate)?;
        if energy.det_drift > trigger {
            candidate = self.reproject(&candidate, reproject_tol)?;
            energy = self.energy(&candidate)?;
        }
        Ok((candidate, energy))
    }

    /// One line-searched descent step. Rejected attempts are passed to
    /// `rejected`; on success the state is advanced in place and the step
    /// size taken is returned.
    pub fn step(
        &self,
        state: &mut FlowState,
        baseline_drift: f64,
        rejected: &mut dyn FnMut(TraceRow) -> Result<()>,
    ) -> Result<f64> {
        let cfg = &self.config;
        let velocity = self.descent_velocity(&state.phi)?;
        let vmax = velocity.max_abs::<f64>();
        let stalled =
            || Error::LineSearchFailed { interior_res: state.interior_res, boundary_res: state.boundary_res };
        if vmax == 0.0 {
            return Err(stalled());
        }
        let mut dt = state.dt.min(cfg.cfl_max * self.chart().spacing() / vmax);
        let trigger = cfg.reproject_threshold.max(baseline_drift);
        let reproject_tol = cfg.moser_tol.max(baseline_drift);
        for _ in 0..=cfg.max_halvings {
            if dt < cfg.dt_min {
                break;
            }
            let attempt = self.candidate(&state.phi, &velocity, dt, trigger, reproject_tol);
            let accepted = match attempt {
                Ok((candidate, energy)) if energy.e_dirichlet < state.energy.e_dirichlet => Some((candidate, energy)),
                Ok(_) | Err(Error::ToleranceNotMet { .. }) | Err(Error::PointOutsideDomain { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some((candidate, energy)) = accepted {
                let (interior_res, boundary_res) = self.residuals(&candidate)?;
                state.phi = candidate;
                state.t += dt;
                state.step_index += 1;
                state.energy = energy;
                state.interior_res = interior_res;
                state.boundary_res = boundary_res;
                state.dt = (dt * cfg.growth).min(cfg.dt_max);
                return Ok(dt);
            }
            rejected(state.row(dt, false))?;
            dt *= 0.5;
        }
        Err(stalled())
    }

    /// Runs the flow from `initial`, streaming every trace row to `sink`.
    pub fn run_with(
        &self,
        initial: DiffeoMap<f64>,
        sink: &mut dyn FnMut(&TraceRow, &FlowState) -> Result<()>,
    ) -> Result<FlowOutcome> {
        let cfg = &self.config;
        let mut state = self.initial_state(initial)?;
        let baseline_drift = state.energy.det_drift;
        let floor = |v: f64| (cfg.rel_tol * v).max(cfg.tol_floor);
        let tol_interior =
            cfg.tol_interior.unwrap_or_else(|| floor(state.interior_res).max(self.interior_noise(&state.phi)));
        let tol_boundary = cfg.tol_boundary.unwrap_or_else(|| floor(state.boundary_res));
        let mut trace = FlowTrace::default();
        let first = state.row(0.0, true);
        sink(&first, &state)?;
        trace.rows.push(first);
        let status = loop {
            if state.interior_res <= tol_interior && state.boundary_res <= tol_boundary {
                break FlowStatus::Converged;
            }
            if state.step_index >= cfg.max_steps {
                break FlowStatus::MaxSteps;
            }
            let mut rejected_rows = Vec::new();
            let result = self.step(&mut state, baseline_drift, &mut |row| {
                rejected_rows.push(row);
                Ok(())
            });
            for row in rejected_rows {
                sink(&row, &state)?;
                trace.rows.push(row);
            }
            match result {
                Ok(dt) => {
                    let row = state.row(dt, true);
                    sink(&row, &state)?;
                    trace.rows.push(row);
                }
                Err(Error::LineSearchFailed { .. }) => break FlowStatus::Stalled,
                Err(e) => return Err(e),
            }
        };
        Ok(FlowOutcome { phi: state.phi, trace, status, tol_interior, tol_boundary })
    }

    pub fn run(&self, initial: DiffeoMap<f64>) -> Result<FlowOutcome> {
        self.run_with(initial, &mut |_, _| Ok(()))
    }
}

/// One-shot flow; factors the solvers for `initial`'s source chart.
pub fn run_flow(initial: DiffeoMap<f64>, densities: Densities<f64>, config: FlowConfig) -> Result<FlowOutcome> {
    FlowEngine::new(initial.source().clone(), densities, config)?.run(initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::membership_residual;
    use crate::grid::{build_chart, DomainSpec};
    use crate::stream::velocity_from_stream;
    use crate::testmaps::random_feasible;

    fn disk(n: usize) -> Arc<Chart<f64>> {
        Arc::new(build_chart(&DomainSpec::unit_disk(), n).unwrap())
    }

    /// v = (y, −x), the velocity of ψ = 1 − r².
    fn rotation_field(c: &Chart<f64>) -> ComplexField<f64> {
        c.field_from_fn(|p| Complex::new(p[1], -p[0]))
    }

    fn engine(c: &Arc<Chart<f64>>, config: FlowConfig) -> FlowEngine {
        FlowEngine::new(c.clone(), Densities::flat(), config).unwrap()
    }

    #[test]
    fn zero_velocity_leaves_the_map_unchanged() {
        let c = disk(32);
        let phi = random_feasible(c.clone(), 2, 0.15, 1e-3).unwrap();
        let out = advect(&phi, &c.constant(Complex::new(0.0, 0.0)), 0.1, 0.5).unwrap();
        assert!(out.sup_distance(&phi) < 1e-6, "{}", out.sup_distance(&phi));
    }

    #[test]
    fn paraboloid_stream_rotates_the_identity_clockwise() {
        let c = disk(32);
        let psi = c.field_from_fn(|p| 1.0 - p[0] * p[0] - p[1] * p[1]);
        let v = velocity_from_stream(&c, &psi, None);
        assert!((&v - &rotation_field(&c)).max_abs::<f64>() < 1e-10);
        let dt = 0.01;
        let out = advect(&DiffeoMap::identity(c.clone()), &v, dt, 0.5).unwrap();
        let (s, co) = dt.sin_cos();
        let exact = DiffeoMap::from_fn(c.clone(), c, |p| [co * p[0] + s * p[1], -s * p[0] + co * p[1]]);
        assert!(out.sup_distance(&exact) < 1e-10, "{}", out.sup_distance(&exact));
    }

    #[test]
    fn repeated_rotation_stays_area_preserving() {
        let c = disk(64);
        let v = rotation_field(&c);
        let dt = 0.5 * c.spacing();
        let mut phi = DiffeoMap::identity(c.clone());
        for _ in 0..100 {
            phi = advect(&phi, &v, dt, 0.5).unwrap();
        }
        let drift = energies(&phi, None, None).det_drift;
        assert!(drift <= 1e-6, "drift {drift}");
    }

    #[test]
    fn oversized_steps_are_refused() {
        let c = disk(24);
        let v = rotation_field(&c);
        let err = advect(&DiffeoMap::identity(c.clone()), &v, c.spacing(), 0.5).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn forward_then_backward_returns_the_map() {
        let c = disk(48);
        let phi = random_feasible(c.clone(), 3, 0.15, 1e-3).unwrap();
        let eng = engine(&c, FlowConfig::default());
        let v = eng.descent_velocity(&phi).unwrap();
        let dt = 0.25 * c.spacing() / v.max_abs::<f64>();
        let back = advect(&advect(&phi, &v, dt, 0.5).unwrap(), &v.map(|z| -z), dt, 0.5).unwrap();
        let moved = advect(&phi, &v, dt, 0.5).unwrap().sup_distance(&phi);
        assert!(back.sup_distance(&phi) < 1e-2 * moved, "{} vs {moved}", back.sup_distance(&phi));
    }

    #[test]
    fn rigid_state_cannot_descend() {
        let c = disk(24);
        let eng = engine(&c, FlowConfig::default());
        let mut state = eng.initial_state(DiffeoMap::identity(c)).unwrap();
        let err = eng.step(&mut state, 0.0, &mut |_| Ok(())).unwrap_err();
        match err {
            Error::LineSearchFailed { interior_res, boundary_res } => {
                assert!(interior_res <= 1e-8 && boundary_res <= 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(state.step_index, 0);
    }

    #[test]
    fn rigid_initial_map_stops_immediately() {
        let c = disk(24);
        let out = engine(&c, FlowConfig::default()).run(DiffeoMap::identity(c)).unwrap();
        assert_eq!(out.status, FlowStatus::Converged);
        assert_eq!(out.trace.accepted_steps(), 0);
        assert_eq!(out.trace.rows.len(), 1);
    }

    #[test]
    fn non_rigid_map_takes_a_descent_step() {
        let c = disk(32);
        let phi = random_feasible(c.clone(), 4, 0.15, 1e-3).unwrap();
        for direction in [Direction::Sobolev, Direction::Assembled] {
            let config = FlowConfig { direction, dt0: 1e-6, dt_max: 1e-6, ..Default::default() };
            let eng = engine(&c, config);
            let mut state = eng.initial_state(phi.clone()).unwrap();
            let before = state.energy.e_dirichlet;
            eng.step(&mut state, 0.0, &mut |_| Ok(())).unwrap();
            assert!(state.energy.e_dirichlet < before, "{direction:?}");
            assert_eq!(state.step_index, 1);
        }
    }

    #[test]
    fn huge_steps_are_halved() {
        let c = disk(32);
        let phi = random_feasible(c.clone(), 5, 0.15, 1e-3).unwrap();
        let config = FlowConfig { dt0: 1e3, dt_max: 1e3, cfl_max: 40.0, ..Default::default() };
        let eng = engine(&c, config);
        let mut state = eng.initial_state(phi).unwrap();
        let mut attempts = Vec::new();
        let dt = eng
            .step(&mut state, 0.0, &mut |row| {
                attempts.push(row.dt);
                Ok(())
            })
            .unwrap();
        assert!(!attempts.is_empty());
        let k = attempts.len() as i32;
        assert!(dt <= attempts[0] / 2f64.powi(k) * (1.0 + 1e-12));
    }

    #[test]
    fn zero_steps_returns_the_initial_map() {
        let c = disk(24);
        let phi = random_feasible(c.clone(), 6, 0.15, 1e-3).unwrap();
        let out = engine(&c, FlowConfig { max_steps: 0, ..Default::default() }).run(phi.clone()).unwrap();
        assert_eq!(out.status, FlowStatus::MaxSteps);
        assert_eq!(out.trace.rows.len(), 1);
        assert_eq!(out.phi.values(), phi.values());
    }

    #[test]
    fn descent_is_monotone_and_reduces_k() {
        let c = disk(32);
        let phi = random_feasible(c.clone(), 7, 0.15, 1e-3).unwrap();
        let mut streamed = 0;
        let out = engine(&c, FlowConfig { max_steps: 40, ..Default::default() })
            .run_with(phi, &mut |_, _| {
                streamed += 1;
                Ok(())
            })
            .unwrap();
        assert_eq!(streamed, out.trace.rows.len());
        let accepted: Vec<&TraceRow> = out.trace.accepted().collect();
        for w in accepted.windows(2) {
            assert!(w[1].e_dirichlet <= w[0].e_dirichlet + 1e-12);
        }
        let (first, last) = (accepted[0], accepted[accepted.len() - 1]);
        assert!(last.k_integral <= 0.01 * first.k_integral, "{} -> {}", first.k_integral, last.k_integral);
        assert!(out.trace.rows.iter().all(|r| r.det_drift <= 5e-3));
    }

    #[test]
    fn reprojection_repairs_injected_drift() {
        let c = disk(48);
        let eng = engine(&c, FlowConfig::default());
        let id = DiffeoMap::identity(c.clone());
        assert!(eng.reproject(&id, 1e-3).unwrap().sup_distance(&id) < 1e-12);
        // radial squeeze r ↦ r(1 + ε(1 − r²)) breaks det ≡ 1 by O(ε)
        let eps = 5e-3;
        let bent = DiffeoMap::from_fn(c.clone(), c.clone(), |p| {
            let s = 1.0 + eps * (1.0 - p[0] * p[0] - p[1] * p[1]);
            [s * p[0], s * p[1]]
        });
        let drift = membership_residual(&bent, None, None).max_abs::<f64>();
        assert!(drift > 5e-3);
        let fixed = eng.reproject(&bent, 1e-3).unwrap();
        assert!(membership_residual(&fixed, None, None).max_abs::<f64>() <= 1e-3);
        let moved = fixed.sup_distance(&bent);
        assert!(moved > 1e-4 && moved < 2e-2, "moved {moved}");
        let again = eng.reproject(&fixed, 1e-3).unwrap();
        assert!(again.sup_distance(&fixed) < 1e-3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            FlowConfig { dt0: 0.0, ..Default::default() },
            FlowConfig { dt_min: 1.0, dt0: 0.1, ..Default::default() },
            FlowConfig { growth: 0.5, ..Default::default() },
        ];
        for config in bad {
            assert!(matches!(config.validate(), Err(Error::BadConfig(_))));
        }
    }
}
