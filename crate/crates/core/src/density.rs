//! Conformal densities μ, η describing surfaces over planar parameter domains.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deformation::DiffeoMap;
use crate::error::{Error, Result};
use crate::grid::{Chart, DomainSpec, ScalarField};
use crate::scalar::Scalar;

/// Surface description as accepted in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Flat {
        #[serde(default = "one")]
        scale: f64,
    },
    /// Spherical cap of radius `radius` seen through stereographic projection
    /// of the disk |w| ≤ `disk_radius`, rescaled onto the chart.
    SpherePatch { radius: f64, disk_radius: f64 },
    /// CSV with one row per u-index and one column per v-index.
    GridFile { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Flat,
    SpherePatch,
    GridFile,
}

/// Exact off-node evaluation of a density.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Closure {
    Constant(f64),
    /// μ(z) = 4R² s² / (1 + s²|z − c|²)² with s = ρ / chart radius.
    Sphere { radius: f64, scale: f64, center: [f64; 2] },
}

impl Closure {
    fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            Closure::Constant(c) => c,
            Closure::Sphere { radius, scale, center } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let w2 = scale * scale * (dx * dx + dy * dy);
                4.0 * radius * radius * scale * scale / ((1.0 + w2) * (1.0 + w2))
            }
        }
    }
}

/// Strictly positive scalar on a chart.
#[derive(Clone, Debug)]
pub struct ConformalDensity<T> {
    chart: Arc<Chart<T>>,
    values: ScalarField<T>,
    closure: Option<Closure>,
    kind: DensityKind,
}

/// Center and radius used to place a sphere patch on a chart.
fn chart_disk(spec: &DomainSpec) -> ([f64; 2], f64) {
    match spec {
        DomainSpec::Disk { radius, center, .. } => (*center, *radius),
        DomainSpec::Ellipse { center, .. } | DomainSpec::Star { center, .. } => {
            (*center, (spec.area() / std::f64::consts::PI).sqrt())
        }
        DomainSpec::Rect { w, h, origin, rotation } => {
            let (s, c) = rotation.sin_cos();
            let (hx, hy) = (0.5 * w, 0.5 * h);
            ([origin[0] + c * hx - s * hy, origin[1] + s * hx + c * hy], (spec.area() / std::f64::consts::PI).sqrt())
        }
        DomainSpec::Annulus { outer, .. } => ([0.0, 0.0], *outer),
    }
}

pub fn density_from_spec<T: Scalar>(spec: &SurfaceSpec, chart: Arc<Chart<T>>) -> Result<ConformalDensity<T>> {
    let (closure, kind) = match spec {
        SurfaceSpec::Flat { scale } => (Closure::Constant(*scale), DensityKind::Flat),
        SurfaceSpec::SpherePatch { radius, disk_radius } => {
            if !(*radius > 0.0 && *disk_radius > 0.0) {
                return Err(Error::BadConfig("sphere patch radii must be positive".to_string()));
            }
            let (center, chart_radius) = chart_disk(chart.spec());
            (Closure::Sphere { radius: *radius, scale: disk_radius / chart_radius, center }, DensityKind::SpherePatch)
        }
        SurfaceSpec::GridFile { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::BadGridFile(format!("{}: {e}", path.display())))?;
            let values = parse_grid(&text, chart.shape())?;
            return ConformalDensity::from_values(chart, values, DensityKind::GridFile);
        }
    };
    let values = chart.field_from_fn(|p| T::lit(closure.eval([p[0].to_f64_lossy(), p[1].to_f64_lossy()])));
    let density = ConformalDensity::from_values(chart, values, kind)?;
    Ok(ConformalDensity { closure: Some(closure), ..density })
}

fn parse_grid<T: Scalar>(text: &str, shape: (usize, usize)) -> Result<ScalarField<T>> {
    let mut values = Vec::with_capacity(shape.0 * shape.1);
    let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    if rows.len() != shape.0 {
        return Err(Error::BadGridFile(format!("expected {} rows, found {}", shape.0, rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != shape.1 {
            return Err(Error::BadGridFile(format!(
                "row {i}: expected {} columns, found {}",
                shape.1,
                cells.len()
            )));
        }
        for cell in cells {
            let v: f64 = cell.parse().map_err(|_| Error::BadGridFile(format!("row {i}: cannot parse {cell:?}")))?;
            values.push(T::lit(v));
        }
    }
    Ok(ScalarField::from_vec(values))
}

impl<T: Scalar> ConformalDensity<T> {
    pub fn from_values(chart: Arc<Chart<T>>, values: ScalarField<T>, kind: DensityKind) -> Result<Self> {
        if values.len() != chart.len() {
            return Err(Error::BadGridFile(format!(
                "{} density values for a chart of {} nodes",
                values.len(),
                chart.len()
            )));
        }
        if let Some((index, &value)) = values.values().iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
            return Err(Error::NonPositiveDensity { index, value: value.to_f64_lossy() });
        }
        Ok(ConformalDensity { chart, values, closure: None, kind })
    }

    /// Unit density on `chart`.
    pub fn unit(chart: Arc<Chart<T>>) -> Self {
        let values = chart.constant(T::one());
        ConformalDensity { chart, values, closure: Some(Closure::Constant(1.0)), kind: DensityKind::Flat }
    }

    pub fn chart(&self) -> &Arc<Chart<T>> {
        &self.chart
    }

    pub fn values(&self) -> &ScalarField<T> {
        &self.values
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn has_closure(&self) -> bool {
        self.closure.is_some()
    }

    /// μ at an arbitrary point of the chart's domain.
    pub fn eval(&self, p: [T; 2]) -> Result<T> {
        match &self.closure {
            Some(c) => Ok(T::lit(c.eval([p[0].to_f64_lossy(), p[1].to_f64_lossy()]))),
            None => self.chart.interp_at(&self.values, p),
        }
    }

    /// Exact ∫μ when known in closed form.
    pub fn analytic_area(&self) -> Option<f64> {
        match (self.closure?, self.chart.spec()) {
            (Closure::Constant(c), spec) => Some(c * spec.area()),
            (Closure::Sphere { radius, scale, center }, DomainSpec::Disk { radius: rc, center: cc, .. })
                if center == *cc =>
            {
                let rho = scale * rc;
                Some(4.0 * std::f64::consts::PI * radius * radius * rho * rho / (1.0 + rho * rho))
            }
            _ => None,
        }
    }
}

/// μ∘Φ at every source node.
pub fn pullback<T: Scalar>(mu: &ConformalDensity<T>, phi: &DiffeoMap<T>) -> Result<ScalarField<T>> {
    let values = phi.images().into_iter().map(|p| mu.eval(p)).collect::<Result<Vec<T>>>()?;
    Ok(ScalarField::from_vec(values))
}

/// ∫μ over the chart; the surface area |Σ|.
pub fn weighted_area<T: Scalar>(mu: &ConformalDensity<T>) -> T {
    mu.chart.integrate_area(&mu.values)
}

/// Target density μ and source density η; `None` stands for the unit
/// density and selects the flat formulas.
#[derive(Clone, Debug, Default)]
pub struct Densities<T> {
    pub mu: Option<ConformalDensity<T>>,
    pub eta: Option<ConformalDensity<T>>,
}

impl<T: Scalar> Densities<T> {
    pub fn flat() -> Self {
        Densities { mu: None, eta: None }
    }

    pub fn is_flat(&self) -> bool {
        self.mu.is_none() && self.eta.is_none()
    }

    pub fn eta_field(&self) -> Option<&ScalarField<T>> {
        self.eta.as_ref().map(|d| d.values())
    }

    pub fn mu_pullback(&self, phi: &DiffeoMap<T>) -> Result<Option<ScalarField<T>>> {
        self.mu.as_ref().map(|mu| pullback(mu, phi)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::io::Write;

    use super::*;
    use crate::grid::build_chart;

    fn disk(n: usize) -> Arc<Chart<f64>> {
        Arc::new(build_chart(&DomainSpec::unit_disk(), n).unwrap())
    }

    #[test]
    fn flat_density_is_constant() {
        let mu = density_from_spec(&SurfaceSpec::Flat { scale: 1.0 }, disk(16)).unwrap();
        assert!(mu.values().values().iter().all(|&v| v == 1.0));
        assert_eq!(mu.kind(), DensityKind::Flat);
    }

    #[test]
    fn hemisphere_area_is_two_pi() {
        let spec = SurfaceSpec::SpherePatch { radius: 1.0, disk_radius: 1.0 };
        let mu = density_from_spec(&spec, disk(128)).unwrap();
        assert!((weighted_area(&mu) - 2.0 * PI).abs() < 1e-3);
        assert!((mu.analytic_area().unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn sphere_patch_rescales_to_chart() {
        // disk of radius 2 carrying the same hemisphere
        let chart: Arc<Chart<f64>> = Arc::new(
            build_chart(&DomainSpec::Disk { radius: 2.0, center: [0.5, 0.0], rotation: 0.0 }, 96).unwrap(),
        );
        let mu = density_from_spec(&SurfaceSpec::SpherePatch { radius: 1.0, disk_radius: 1.0 }, chart).unwrap();
        assert!((weighted_area(&mu) - 2.0 * PI).abs() < 3e-3);
    }

    #[test]
    fn grid_file_with_zero_is_rejected() {
        let chart: Arc<Chart<f64>> = Arc::new(build_chart(&DomainSpec::unit_square(), 8).unwrap());
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for i in 0..8 {
            let row: Vec<String> = (0..8).map(|j| if i == 3 && j == 5 { "0".into() } else { "1.5".into() }).collect();
            writeln!(file, "{}", row.join(",")).unwrap();
        }
        let spec = SurfaceSpec::GridFile { path: file.path().to_path_buf() };
        let err = density_from_spec(&spec, chart.clone()).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDensity { index: 29, .. }), "{err:?}");

        let mut short = tempfile::NamedTempFile::new().unwrap();
        writeln!(short, "1,1,1").unwrap();
        let spec = SurfaceSpec::GridFile { path: short.path().to_path_buf() };
        assert!(matches!(density_from_spec(&spec, chart).unwrap_err(), Error::BadGridFile(_)));
    }

    #[test]
    fn pullback_examples() {
        let c = disk(32);
        let mu = density_from_spec(&SurfaceSpec::SpherePatch { radius: 1.0, disk_radius: 1.0 }, c.clone()).unwrap();
        let id = DiffeoMap::identity(c.clone());
        assert_eq!(pullback(&mu, &id).unwrap(), *mu.values());

        let (s, co) = 1.1_f64.sin_cos();
        let rot = DiffeoMap::from_fn(c.clone(), c.clone(), |p| [co * p[0] - s * p[1], s * p[0] + co * p[1]]);
        let diff = (&pullback(&mu, &rot).unwrap() - mu.values()).max_abs::<f64>();
        assert!(diff < 1e-12);

        let flat = density_from_spec(&SurfaceSpec::Flat { scale: 2.5 }, c.clone()).unwrap();
        assert!(pullback(&flat, &rot).unwrap().values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn interpolated_pullback_tracks_closure() {
        let c = disk(64);
        let mu = density_from_spec(&SurfaceSpec::SpherePatch { radius: 1.0, disk_radius: 1.0 }, c.clone()).unwrap();
        let sampled = ConformalDensity::from_values(c.clone(), mu.values().clone(), DensityKind::GridFile).unwrap();
        let phi = DiffeoMap::from_fn(c.clone(), c, |p| [0.8 * p[0] + 0.05, 0.8 * p[1]]);
        let err = (&pullback(&sampled, &phi).unwrap() - &pullback(&mu, &phi).unwrap()).max_abs::<f64>();
        assert!(err < 1e-5, "err {err}");
    }

    #[test]
    fn area_refinement_study() {
        let spec = SurfaceSpec::SpherePatch { radius: 1.0, disk_radius: 0.7 };
        let exact = density_from_spec(&spec, disk(16)).unwrap().analytic_area().unwrap();
        let err = |n| (weighted_area(&density_from_spec(&spec, disk(n)).unwrap()) - exact).abs();
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.0, "ratio {}", a / b);
    }
}
