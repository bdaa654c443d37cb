//! Seeded non-rigid area-preserving maps of a disk onto itself, built as
//! time-one flows of random divergence-free fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deformation::DiffeoMap;
use crate::density::Densities;
use crate::moser::MoserCorrector;
use crate::error::{Error, Result};
use crate::grid::{Chart, DomainSpec};

/// Stream function ψ = (R² − |x − c|²)·p(x − c) with a cubic p.
#[derive(Clone, Debug)]
pub struct RandomStream {
    radius: f64,
    center: [f64; 2],
    /// Coefficients of x^a y^b for a + b ≤ 3, in (a, b) order.
    coeffs: Vec<((i32, i32), f64)>,
}

impl RandomStream {
    pub fn new(spec: &DomainSpec, seed: u64, amplitude: f64) -> Result<Self> {
        let DomainSpec::Disk { radius, center, .. } = *spec else {
            return Err(Error::UnsupportedDomain("random test maps need a disk".to_string()));
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = Vec::new();
        for a in 0..=3 {
            for b in 0..=(3 - a) {
                let scale = amplitude / radius.powi(a + b + 2);
                coeffs.push(((a, b), scale * rng.random_range(-1.0..1.0)));
            }
        }
        Ok(RandomStream { radius, center, coeffs })
    }

    fn poly(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (mut p, mut px, mut py) = (0.0, 0.0, 0.0);
        for &((a, b), c) in &self.coeffs {
            p += c * x.powi(a) * y.powi(b);
            if a > 0 {
                px += c * a as f64 * x.powi(a - 1) * y.powi(b);
            }
            if b > 0 {
                py += c * b as f64 * x.powi(a) * y.powi(b - 1);
            }
        }
        (p, px, py)
    }

    pub fn psi(&self, q: [f64; 2]) -> f64 {
        let (x, y) = (q[0] - self.center[0], q[1] - self.center[1]);
        (self.radius * self.radius - x * x - y * y) * self.poly(x, y).0
    }

    /// v = ½(−ψ_y, ψ_x), tangent to the circle since ψ vanishes there.
    pub fn velocity(&self, q: [f64; 2]) -> [f64; 2] {
        let (x, y) = (q[0] - self.center[0], q[1] - self.center[1]);
        let g = self.radius * self.radius - x * x - y * y;
        let (p, px, py) = self.poly(x, y);
        let psi_x = -2.0 * x * p + g * px;
        let psi_y = -2.0 * y * p + g * py;
        [-0.5 * psi_y, 0.5 * psi_x]
    }

    /// Time-one flow of `q` by `steps` RK4 steps.
    pub fn flow(&self, q: [f64; 2], steps: usize) -> [f64; 2] {
        let h = 1.0 / steps as f64;
        let add = |p: [f64; 2], v: [f64; 2], s: f64| [p[0] + s * v[0], p[1] + s * v[1]];
        let mut p = q;
        for _ in 0..steps {
            let k1 = self.velocity(p);
            let k2 = self.velocity(add(p, k1, 0.5 * h));
            let k3 = self.velocity(add(p, k2, 0.5 * h));
            let k4 = self.velocity(add(p, k3, h));
            p = [
                p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
        }
        // keep boundary points exactly on the circle
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let r = dx.hypot(dy);
        if r > self.radius {
            let s = self.radius / r;
            p = [self.center[0] + s * dx, self.center[1] + s * dy];
        }
        p
    }
}

/// Area-preserving self-map of a disk chart: the time-one flow of a seeded
/// random stream. `amplitude` ≈ 0.15 gives visibly non-rigid maps
/// that stay within reach of the Moser correction.
pub fn random_area_preserving(chart: Arc<Chart<f64>>, seed: u64, amplitude: f64) -> Result<DiffeoMap<f64>> {
    let stream = RandomStream::new(chart.spec(), seed, amplitude)?;
    let mut values = Vec::with_capacity(chart.len());
    for k in 0..chart.len() {
        let mut q = stream.flow(chart.node(k), 64);
        if chart.is_boundary_node(k) {
            q = chart.project_to_boundary(q)?;
        }
        values.push(num_complex::Complex::new(q[0], q[1]));
    }
    DiffeoMap::new(chart.clone(), chart, crate::grid::ComplexField::from_vec(values))
}

/// `random_area_preserving` followed by a Moser correction to `tol`, so the
/// discrete constraint holds as well as the continuous one.
pub fn random_feasible(chart: Arc<Chart<f64>>, seed: u64, amplitude: f64, tol: f64) -> Result<DiffeoMap<f64>> {
    let raw = random_area_preserving(chart.clone(), seed, amplitude)?;
    Ok(MoserCorrector::new(chart)?.correct(&raw, &Densities::flat(), tol)?.phi)
}
