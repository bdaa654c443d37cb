//! Boundary-fitted structured grids over simply connected domains.
//!
//! A [`Chart`] is a logical tensor grid in reference coordinates (u, v) together
//! with its image in the plane. Rectangles use a plain tensor grid whose
//! boundary is the outer ring of nodes. Disks, ellipses and star-shaped
//! domains use a polar-like grid: u = ρ is sampled at half-integer offsets so
//! no node sits on the pole, v = θ is periodic, and the boundary is the ring
//! ρ = 1. Across the pole a value at (−ρ, θ) is read from (ρ, θ + π).
//!
//! The chart Jacobian is computed with the same difference stencils that are
//! applied to fields, so derivatives of affine functions are exact up to
//! round-off on every chart.

pub(crate) mod calculus;
mod pole;
pub mod field;
pub mod geometry;
mod interp;

use std::f64::consts::PI;

use num_complex::Complex;

pub use calculus::Wirtinger;
pub use interp::InterpStencil;
pub use field::{ComplexField, Field, ScalarField};
pub use geometry::DomainSpec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use geometry::Geometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Rect,
    Polar,
}

/// Index arithmetic and reference-direction stencils of a chart.
#[derive(Clone, Debug)]
pub(crate) struct Lattice {
    pub topology: Topology,
    pub nu: usize,
    pub nv: usize,
    pub du: f64,
    pub dv: f64,
}

impl Lattice {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    #[inline]
    pub fn pole_partner(&self, j: usize) -> usize {
        (j + self.nv / 2) % self.nv
    }

    /// Node at signed lattice position, resolving periodic wrap and pole
    /// reflection. `None` outside the grid.
    pub fn neighbor(&self, i: isize, j: isize) -> Option<usize> {
        let (nu, nv) = (self.nu as isize, self.nv as isize);
        match self.topology {
            Topology::Rect => {
                if i < 0 || i >= nu || j < 0 || j >= nv {
                    None
                } else {
                    Some(self.idx(i as usize, j as usize))
                }
            }
            Topology::Polar => {
                if i >= nu || i < -nu {
                    return None;
                }
                let jw = j.rem_euclid(nv) as usize;
                if i < 0 {
                    Some(self.idx((-1 - i) as usize, self.pole_partner(jw)))
                } else {
                    Some(self.idx(i as usize, jw))
                }
            }
        }
    }

    pub fn ref_u(&self, i: usize) -> f64 {
        match self.topology {
            Topology::Rect => i as f64 * self.du,
            Topology::Polar => (i as f64 + 0.5) * self.du,
        }
    }

    pub fn ref_v(&self, j: usize) -> f64 {
        j as f64 * self.dv
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }
}

/// One sample of the discretized boundary ring.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySample<T> {
    /// Grid node this sample sits on.
    pub node: usize,
    pub position: [T; 2],
    /// Arclength quadrature weight |dz|.
    pub weight: T,
    /// Unit outward normal.
    pub normal: [T; 2],
    /// Unit tangent, positively oriented; equals i·normal.
    pub tangent: Complex<T>,
    /// Interior neighbor one step inward along the grid line through the
    /// sample; `None` at rectangle corners.
    pub inward: Option<usize>,
}

/// Discretized simply connected domain.
#[derive(Clone, Debug)]
pub struct Chart<T> {
    spec: DomainSpec,
    pub(crate) geometry: Geometry,
    pub(crate) lattice: Lattice,
    nodes: Vec<[T; 2]>,
    /// x_u, x_v, y_u, y_v per node.
    jac: Vec<[T; 4]>,
    /// u_x, u_y, v_x, v_y per node.
    inv: Vec<[T; 4]>,
    area_weights: Vec<T>,
    /// Control volumes of the finite-volume discretization: the second-order
    /// trapezoid weights, which tile the domain.
    cell_volumes: Vec<f64>,
    boundary: Vec<BoundarySample<T>>,
    on_boundary: Vec<bool>,
    clamp_tol: [f64; 2],
}

/// Discretizes `spec` with resolution `n` (nodes per axis for rectangles;
/// polar charts use ⌈n/2⌉ rings of 4⌈n/2⌉ nodes, about n² nodes in total).
pub fn build_chart<T: Scalar>(spec: &DomainSpec, n: usize) -> Result<Chart<T>> {
    Chart::new(spec, n)
}

impl<T: Scalar> Chart<T> {
    pub fn new(spec: &DomainSpec, n: usize) -> Result<Self> {
        let geometry = Geometry::from_spec(spec)?;
        if n < 8 {
            return Err(Error::BadConfig(format!("grid resolution {n} is below the minimum of 8")));
        }
        let lattice = if geometry.is_polar() {
            let nr = n.div_ceil(2);
            let nt = 4 * nr;
            Lattice { topology: Topology::Polar, nu: nr, nv: nt, du: 1.0 / (nr as f64 - 0.5), dv: 2.0 * PI / nt as f64 }
        } else {
            Lattice { topology: Topology::Rect, nu: n, nv: n, du: 1.0 / (n as f64 - 1.0), dv: 1.0 / (n as f64 - 1.0) }
        };
        let len = lattice.len();

        let mut nodes = Vec::with_capacity(len);
        let mut area_weights = Vec::with_capacity(len);
        let mut cell_volumes = Vec::with_capacity(len);
        for i in 0..lattice.nu {
            for j in 0..lattice.nv {
                let (u, v) = (lattice.ref_u(i), lattice.ref_v(j));
                let p = geometry.map(u, v);
                nodes.push([T::lit(p[0]), T::lit(p[1])]);
                let w = geometry.jacobian_det(u, v) * lattice.du * lattice.dv;
                let (volume, quadrature) = match lattice.topology {
                    Topology::Polar => {
                        let half = if i == lattice.nu - 1 { 0.5 } else { 1.0 };
                        (half, polar_radial_weight(i, lattice.nu))
                    }
                    Topology::Rect => {
                        let half = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                        (half(i, lattice.nu) * half(j, lattice.nv), gregory(i, lattice.nu) * gregory(j, lattice.nv))
                    }
                };
                cell_volumes.push(w * volume);
                let w = w * quadrature;
                area_weights.push(T::lit(w));
            }
        }

        let xs: Vec<T> = nodes.iter().map(|p| p[0]).collect();
        let ys: Vec<T> = nodes.iter().map(|p| p[1]).collect();
        let (xu, xv) = (calculus::diff_u(&lattice, &xs), calculus::diff_v(&lattice, &xs));
        let (yu, yv) = (calculus::diff_u(&lattice, &ys), calculus::diff_v(&lattice, &ys));
        let mut jac = Vec::with_capacity(len);
        let mut inv = Vec::with_capacity(len);
        for k in 0..len {
            let det = xu[k] * yv[k] - xv[k] * yu[k];
            if !(det > T::zero()) {
                return Err(Error::DegenerateBoundary(format!(
                    "chart Jacobian determinant {det} at node {k} is not positive"
                )));
            }
            jac.push([xu[k], xv[k], yu[k], yv[k]]);
            inv.push([yv[k] / det, -xv[k] / det, -yu[k] / det, xu[k] / det]);
        }

        let boundary = boundary_ring(&geometry, &lattice);
        let mut on_boundary = vec![false; len];
        for b in &boundary {
            on_boundary[b.node] = true;
        }

        let clamp_tol = match &geometry.shape {
            geometry::Shape::Rect { w, h } => {
                let (hx, hy) = (w * lattice.du, h * lattice.dv);
                let diag = hx.hypot(hy);
                [diag / w, diag / h]
            }
            _ => [2.0 * lattice.du, 0.0],
        };

        Ok(Chart {
            spec: spec.clone(),
            geometry,
            lattice,
            nodes,
            jac,
            inv,
            area_weights,
            cell_volumes,
            boundary: boundary
                .into_iter()
                .map(|b| BoundarySample {
                    node: b.node,
                    position: [T::lit(b.position[0]), T::lit(b.position[1])],
                    weight: T::lit(b.weight),
                    normal: [T::lit(b.normal[0]), T::lit(b.normal[1])],
                    tangent: Complex::new(T::lit(b.tangent.re), T::lit(b.tangent.im)),
                    inward: b.inward,
                })
                .collect(),
            on_boundary,
            clamp_tol,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn topology(&self) -> Topology {
        self.lattice.topology
    }

    /// Grid shape `(nu, nv)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.lattice.nu, self.lattice.nv)
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        self.lattice.idx(i, j)
    }

    /// Lattice position `(i, j)` of node `k`.
    pub fn position_of(&self, k: usize) -> (usize, usize) {
        (k / self.lattice.nv, k % self.lattice.nv)
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> [T; 2] {
        self.nodes[k]
    }

    /// Reference coordinates `(u, v)` of node `k`.
    pub fn reference_of(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.position_of(k);
        [self.lattice.ref_u(i), self.lattice.ref_v(j)]
    }

    /// Discrete chart Jacobian `[x_u, x_v, y_u, y_v]` at node `k`.
    pub fn chart_jacobian(&self, k: usize) -> [T; 4] {
        self.jac[k]
    }

    /// Inverse Jacobian `[u_x, u_y, v_x, v_y]` at node `k`.
    pub fn inverse_jacobian(&self, k: usize) -> [T; 4] {
        self.inv[k]
    }

    pub fn area_weights(&self) -> &[T] {
        &self.area_weights
    }

    pub(crate) fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn area(&self) -> T {
        self.area_weights.iter().copied().sum()
    }

    pub fn boundary(&self) -> &[BoundarySample<T>] {
        &self.boundary
    }

    pub fn is_boundary_node(&self, k: usize) -> bool {
        self.on_boundary[k]
    }

    /// Representative mesh width √(area / nodes).
    pub fn spacing(&self) -> T {
        (self.area() / T::lit(self.len() as f64)).sqrt()
    }

    /// Smallest distance between lattice neighbours.
    pub fn min_spacing(&self) -> T {
        let l = &self.lattice;
        let mut h = f64::INFINITY;
        for i in 0..l.nu {
            for j in 0..l.nv {
                let a = self.nodes[l.idx(i, j)];
                for (di, dj) in [(1, 0), (0, 1), (-1, 0)] {
                    if let Some(b) = l.neighbor(i as isize + di, j as isize + dj) {
                        let b = self.nodes[b];
                        let d = (a[0] - b[0]).to_f64_lossy().hypot((a[1] - b[1]).to_f64_lossy());
                        if d > 0.0 {
                            h = h.min(d);
                        }
                    }
                }
            }
        }
        T::lit(h)
    }

    /// Length of one cell diagonal near the boundary, the clamp tolerance.
    pub fn cell_diagonal(&self) -> T {
        let b = &self.boundary[0];
        let (i, j) = self.position_of(b.node);
        let u = self.lattice.ref_u(i);
        let v = self.lattice.ref_v(j);
        let d = self.geometry.derivatives(u, v);
        let du = self.lattice.du * d[0][0].hypot(d[0][1]);
        let dv = self.lattice.dv * d[1][0].hypot(d[1][1]);
        T::lit(du.hypot(dv))
    }

    pub fn field_from_fn<V: Copy>(&self, f: impl Fn([T; 2]) -> V) -> Field<V> {
        Field::from_vec(self.nodes.iter().map(|&p| f(p)).collect())
    }

    pub fn constant<V: Copy>(&self, value: V) -> Field<V> {
        Field::filled(self.len(), value)
    }

    /// Reference coordinates of `p`, clamped onto the domain when `p` lies
    /// outside by less than the clamp tolerance.
    pub fn locate(&self, p: [T; 2]) -> Result<[f64; 2]> {
        let r = self.locate_near(p)?;
        Ok(match self.lattice.topology {
            Topology::Polar => [r[0].min(1.0), r[1]],
            Topology::Rect => [r[0].clamp(0.0, 1.0), r[1].clamp(0.0, 1.0)],
        })
    }

    /// Reference coordinates of `p` without clamping; points outside the
    /// domain by more than the clamp tolerance are rejected.
    pub fn locate_near(&self, p: [T; 2]) -> Result<[f64; 2]> {
        let pf = [p[0].to_f64_lossy(), p[1].to_f64_lossy()];
        let r = self.geometry.inverse(pf);
        let outside = || Error::PointOutsideDomain { x: pf[0], y: pf[1] };
        if !(r[0].is_finite() && r[1].is_finite()) {
            return Err(outside());
        }
        match self.lattice.topology {
            Topology::Polar => {
                if r[0] > 1.0 + self.clamp_tol[0] {
                    return Err(outside());
                }
            }
            Topology::Rect => {
                let (tu, tv) = (self.clamp_tol[0], self.clamp_tol[1]);
                if r[0] < -tu || r[0] > 1.0 + tu || r[1] < -tv || r[1] > 1.0 + tv {
                    return Err(outside());
                }
            }
        }
        Ok(r)
    }

    /// Physical point for reference coordinates.
    pub fn map_reference(&self, r: [f64; 2]) -> [T; 2] {
        let p = self.geometry.map(r[0], r[1]);
        [T::lit(p[0]), T::lit(p[1])]
    }

    /// Moves a point near the boundary onto the nearest boundary curve in
    /// reference coordinates.
    pub fn project_to_boundary(&self, p: [T; 2]) -> Result<[T; 2]> {
        let mut r = self.locate(p)?;
        match self.lattice.topology {
            Topology::Polar => r[0] = 1.0,
            Topology::Rect => {
                let gap = |x: f64| x.min(1.0 - x);
                let c = if gap(r[0]) <= gap(r[1]) { 0 } else { 1 };
                r[c] = r[c].round();
            }
        }
        Ok(self.map_reference(r))
    }

    /// Projects a point onto the closed domain (identity for interior points).
    pub fn clamp_point(&self, p: [T; 2]) -> Result<[T; 2]> {
        let pf = [p[0].to_f64_lossy(), p[1].to_f64_lossy()];
        let r = self.geometry.inverse(pf);
        let inside = match self.lattice.topology {
            Topology::Polar => r[0] <= 1.0,
            Topology::Rect => (0.0..=1.0).contains(&r[0]) && (0.0..=1.0).contains(&r[1]),
        };
        if inside {
            return Ok(p);
        }
        let c = self.locate(p)?;
        Ok(self.map_reference(c))
    }

    /// Membership test: distance from `p` to its projection onto the domain
    /// is at most `tol`.
    pub fn inside(&self, p: [T; 2], tol: T) -> bool {
        match self.clamp_point(p) {
            Ok(q) => {
                let d = (p[0] - q[0]).hypot(p[1] - q[1]);
                d <= tol
            }
            Err(_) => false,
        }
    }

    /// Reference-space spacing `(du, dv)`.
    pub fn reference_spacing(&self) -> (f64, f64) {
        (self.lattice.du, self.lattice.dv)
    }

    pub(crate) fn lattice(&self) -> &Lattice {
        &self.lattice
    }
}

struct RawSample {
    node: usize,
    position: [f64; 2],
    weight: f64,
    normal: [f64; 2],
    tangent: Complex<f64>,
    inward: Option<usize>,
}

/// Gregory end correction of the trapezoid rule on n uniform nodes; makes it
/// fourth order. Grids too short for it keep the plain trapezoid.
fn gregory(i: usize, n: usize) -> f64 {
    let from_end = i.min(n - 1 - i);
    if n < 6 {
        return if from_end == 0 { 0.5 } else { 1.0 };
    }
    match from_end {
        0 => 3.0 / 8.0,
        1 => 7.0 / 6.0,
        2 => 23.0 / 24.0,
        _ => 1.0,
    }
}

/// Radial weight of ring i in units of du for ∫₀¹ ρF(ρ) dρ with F even:
/// Gregory at the rim, and at the pole the midpoint end correction, which
/// only needs F'(0) = 0.
fn polar_radial_weight(i: usize, nu: usize) -> f64 {
    let from_rim = nu - 1 - i;
    if nu < 4 {
        return if from_rim == 0 { 0.5 } else { 1.0 };
    }
    match (i, from_rim) {
        (0, _) => 11.0 / 12.0,
        (_, 0) => 3.0 / 8.0,
        (_, 1) => 7.0 / 6.0,
        (_, 2) => 23.0 / 24.0,
        _ => 1.0,
    }
}

fn boundary_ring(geometry: &Geometry, lat: &Lattice) -> Vec<RawSample> {
    let mut ring = Vec::new();
    match lat.topology {
        Topology::Polar => {
            let i = lat.nu - 1;
            for j in 0..lat.nv {
                let v = lat.ref_v(j);
                let [_, zv] = geometry.derivatives(1.0, v);
                let len = zv[0].hypot(zv[1]);
                let tangent = Complex::new(zv[0] / len, zv[1] / len);
                ring.push(RawSample {
                    node: lat.idx(i, j),
                    position: geometry.map(1.0, v),
                    weight: len * lat.dv,
                    normal: [tangent.im, -tangent.re],
                    tangent,
                    inward: Some(lat.idx(i - 1, j)),
                });
            }
        }
        Topology::Rect => {
            let (nu, nv) = (lat.nu, lat.nv);
            let [zu, zv] = geometry.derivatives(0.0, 0.0);
            let hx = zu[0].hypot(zu[1]) * lat.du;
            let hy = zv[0].hypot(zv[1]) * lat.dv;
            let ex = [zu[0] / (hx / lat.du), zu[1] / (hx / lat.du)];
            let ey = [zv[0] / (hy / lat.dv), zv[1] / (hy / lat.dv)];
            // counterclockwise walk: bottom, right, top, left
            let mut walk: Vec<(usize, usize)> = Vec::new();
            walk.extend((0..nu).map(|i| (i, 0)));
            walk.extend((1..nv).map(|j| (nu - 1, j)));
            walk.extend((0..nu - 1).rev().map(|i| (i, nv - 1)));
            walk.extend((1..nv - 1).rev().map(|j| (0, j)));
            for (i, j) in walk {
                let bottom = j == 0;
                let top = j == nv - 1;
                let left = i == 0;
                let right = i == nu - 1;
                let mut n = [0.0, 0.0];
                let mut weight = 0.0;
                if bottom {
                    n = [n[0] - ey[0], n[1] - ey[1]];
                }
                if top {
                    n = [n[0] + ey[0], n[1] + ey[1]];
                }
                if left {
                    n = [n[0] - ex[0], n[1] - ex[1]];
                }
                if right {
                    n = [n[0] + ex[0], n[1] + ex[1]];
                }
                if bottom || top {
                    weight += if left || right { 0.5 * hx } else { hx };
                }
                if left || right {
                    weight += if bottom || top { 0.5 * hy } else { hy };
                }
                let len = n[0].hypot(n[1]);
                let normal = [n[0] / len, n[1] / len];
                let corner = (bottom || top) && (left || right);
                let inward = if corner {
                    None
                } else if bottom {
                    Some(lat.idx(i, 1))
                } else if top {
                    Some(lat.idx(i, nv - 2))
                } else if left {
                    Some(lat.idx(1, j))
                } else {
                    Some(lat.idx(nu - 2, j))
                };
                ring.push(RawSample {
                    node: lat.idx(i, j),
                    position: geometry.map(lat.ref_u(i), lat.ref_v(j)),
                    weight,
                    normal,
                    tangent: Complex::new(-normal[1], normal[0]),
                    inward,
                });
            }
        }
    }
    ring
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_area_is_exact() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_square(), 32).unwrap();
        assert!((chart.area() - 1.0).abs() < 1e-13);
        assert_eq!(chart.shape(), (32, 32));
    }

    #[test]
    fn unit_disk_area_and_perimeter() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 64).unwrap();
        assert!((chart.area() - PI).abs() < 1e-12, "area {}", chart.area());
        let perimeter: f64 = chart.boundary().iter().map(|b| b.weight).sum();
        assert!((perimeter - 2.0 * PI).abs() < 1e-3);
    }

    #[test]
    fn annulus_is_unsupported() {
        let err = build_chart::<f64>(&DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 32).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDomain(_)));
    }

    #[test]
    fn tiny_resolution_is_rejected() {
        assert!(build_chart::<f64>(&DomainSpec::unit_disk(), 6).is_err());
    }

    #[test]
    fn boundary_frames_are_orthonormal() {
        for spec in [
            DomainSpec::unit_disk(),
            DomainSpec::unit_square(),
            DomainSpec::Star { coeffs: vec![1.0, 0.1, 0.05, 0.1, 0.0], center: [0.2, 0.1], rotation: 0.3 },
        ] {
            let chart: Chart<f64> = build_chart(&spec, 24).unwrap();
            for b in chart.boundary() {
                let dot = b.tangent.re * b.normal[0] + b.tangent.im * b.normal[1];
                assert!(dot.abs() < 1e-14);
                let rotated = Complex::new(-b.normal[1], b.normal[0]);
                assert!((rotated - b.tangent).norm() < 1e-14);
                assert!((b.tangent.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn disk_normals_point_outward() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 16).unwrap();
        for b in chart.boundary() {
            let radial = b.position[0] * b.normal[0] + b.position[1] * b.normal[1];
            assert!((radial - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_determinant_is_positive_everywhere() {
        let chart: Chart<f64> = build_chart(
            &DomainSpec::Star { coeffs: vec![1.0, 0.2, -0.1, 0.15, 0.05], center: [0.0, 0.0], rotation: 0.0 },
            32,
        )
        .unwrap();
        for k in 0..chart.len() {
            let j = chart.chart_jacobian(k);
            assert!(j[0] * j[3] - j[1] * j[2] > 0.0);
        }
    }

    #[test]
    fn clamping_accepts_marginal_points_only() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 32).unwrap();
        let q = chart.clamp_point([1.01, 0.0]).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-12 && q[1].abs() < 1e-12);
        assert!(chart.clamp_point([1.5, 0.0]).is_err());
        assert!(chart.inside([0.5, 0.5], 0.0));
        assert!(!chart.inside([1.2, 0.0], 1e-3));
    }
}
