//! Sparse elliptic solvers on charts: the clamped biharmonic problem and the
//! Neumann Poisson problem, both assembled from mapped finite differences and
//! factored once with a sparse LU.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::grid::calculus::{du_stencil, dv_stencil};
use crate::grid::{Chart, Lattice, ScalarField, Topology};

/// Sparse row: (column, coefficient) pairs, duplicates allowed.
pub(crate) type Stencil = Vec<(usize, f64)>;

fn node(lat: &Lattice, i: isize, j: isize) -> usize {
    lat.neighbor(i, j).expect("stencil stays on the lattice")
}

/// Second-order u-derivative row, used for the tangential parts of face
/// fluxes.
fn du_row(lat: &Lattice, i: usize, j: usize) -> Stencil {
    let h = 0.5 / lat.du;
    let (ii, jj) = (i as isize, j as isize);
    if i == 0 && lat.topology == Topology::Rect {
        vec![(node(lat, 0, jj), -3.0 * h), (node(lat, 1, jj), 4.0 * h), (node(lat, 2, jj), -h)]
    } else if i == lat.nu - 1 {
        vec![(node(lat, ii, jj), 3.0 * h), (node(lat, ii - 1, jj), -4.0 * h), (node(lat, ii - 2, jj), h)]
    } else {
        vec![(node(lat, ii + 1, jj), h), (node(lat, ii - 1, jj), -h)]
    }
}

fn dv_row(lat: &Lattice, i: usize, j: usize) -> Stencil {
    let h = 0.5 / lat.dv;
    let (ii, jj) = (i as isize, j as isize);
    if lat.topology == Topology::Rect && j == 0 {
        vec![(node(lat, ii, 0), -3.0 * h), (node(lat, ii, 1), 4.0 * h), (node(lat, ii, 2), -h)]
    } else if lat.topology == Topology::Rect && j == lat.nv - 1 {
        vec![(node(lat, ii, jj), 3.0 * h), (node(lat, ii, jj - 1), -4.0 * h), (node(lat, ii, jj - 2), h)]
    } else {
        vec![(node(lat, ii, jj + 1), h), (node(lat, ii, jj - 1), -h)]
    }
}

/// Rows of ∂_x and ∂_y at node `k`, identical to the field gradient.
pub(crate) fn gradient_rows(chart: &Chart<f64>, k: usize) -> (Stencil, Stencil) {
    let lat = chart.lattice();
    let (i, j) = chart.position_of(k);
    let [ux, uy, vx, vy] = chart.inverse_jacobian(k);
    let (ru, rv) = (du_stencil(lat, i, j), dv_stencil(lat, i, j));
    let combine = |a: f64, b: f64| -> Stencil {
        ru.iter().map(|&(c, w)| (c, a * w)).chain(rv.iter().map(|&(c, w)| (c, b * w))).collect()
    };
    (combine(ux, vx), combine(uy, vy))
}

/// Row of the outward normal derivative at boundary sample `s`.
pub(crate) fn normal_row(chart: &Chart<f64>, s: usize) -> Stencil {
    let b = &chart.boundary()[s];
    let (gx, gy) = gradient_rows(chart, b.node);
    gx.into_iter()
        .map(|(c, w)| (c, w * b.normal[0]))
        .chain(gy.into_iter().map(|(c, w)| (c, w * b.normal[1])))
        .collect()
}

fn apply(row: &Stencil, f: &[f64]) -> f64 {
    row.iter().map(|&(c, w)| w * f[c]).sum()
}

/// Compact 9-point Laplacian at a non-boundary node. First-order
/// coefficients are fitted so that x and y are annihilated exactly.
pub(crate) fn laplacian_row(chart: &Chart<f64>, k: usize) -> Stencil {
    let lat = chart.lattice();
    let (i, j) = chart.position_of(k);
    let (ii, jj) = (i as isize, j as isize);
    let [ux, uy, vx, vy] = chart.inverse_jacobian(k);
    let a = ux * ux + uy * uy;
    let b = ux * vx + uy * vy;
    let c = vx * vx + vy * vy;
    let (du2, dv2, duv) = (lat.du * lat.du, lat.dv * lat.dv, 4.0 * lat.du * lat.dv);
    let mut second: Stencil = vec![
        (node(lat, ii + 1, jj), a / du2),
        (node(lat, ii - 1, jj), a / du2),
        (node(lat, ii, jj + 1), c / dv2),
        (node(lat, ii, jj - 1), c / dv2),
        (k, -2.0 * a / du2 - 2.0 * c / dv2),
    ];
    for (si, sj, sign) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
        second.push((node(lat, ii + si, jj + sj), sign * 2.0 * b / duv));
    }
    let nodes = chart.nodes();
    let rx: f64 = second.iter().map(|&(c, w)| w * nodes[c][0]).sum();
    let ry: f64 = second.iter().map(|&(c, w)| w * nodes[c][1]).sum();
    let hu = 0.5 / lat.du;
    let hv = 0.5 / lat.dv;
    // centered chart derivatives, matching the correction stencil below
    let diff = |a: usize, b: usize, h: f64, c: usize| (nodes[a][c] - nodes[b][c]) * h;
    let (up, um) = (node(lat, ii + 1, jj), node(lat, ii - 1, jj));
    let (vp, vm) = (node(lat, ii, jj + 1), node(lat, ii, jj - 1));
    let (xu, yu) = (diff(up, um, hu, 0), diff(up, um, hu, 1));
    let (xv, yv) = (diff(vp, vm, hv, 0), diff(vp, vm, hv, 1));
    let det = xu * yv - xv * yu;
    // [x_u x_v; y_u y_v] [d; e] = −[rx; ry]
    let d = -(yv * rx - xv * ry) / det;
    let e = -(-yu * rx + xu * ry) / det;
    second.extend([
        (node(lat, ii + 1, jj), d * hu),
        (node(lat, ii - 1, jj), -d * hu),
        (node(lat, ii, jj + 1), e * hv),
        (node(lat, ii, jj - 1), -e * hv),
    ]);
    second
}

fn factor(n: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<Lu<usize, f64>> {
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, triplets)
        .map_err(|e| Error::SolverDiverged(format!("sparse assembly failed: {e:?}")))?;
    a.sp_lu().map_err(|e| Error::SolverDiverged(format!("sparse LU failed: {e:?}")))
}

fn solve_columns(lu: &Lu<usize, f64>, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rhs[0].len();
    let b = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
    let x = lu.solve(&b);
    let cols: Vec<Vec<f64>> = (0..rhs.len()).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
    if cols.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::SolverDiverged("linear solve produced non-finite values".to_string()));
    }
    Ok(cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Dirichlet,
    Neumann,
    Bilaplacian,
}

/// Factored clamped biharmonic operator: Δ²ψ = s inside, ψ and ∂ψ/∂n given
/// on the boundary. The normal condition of each boundary sample is imposed
/// in the row of its inward neighbor, averaged where two samples share one.
pub struct ClampedBiharmonic {
    chart: Arc<Chart<f64>>,
    lu: Lu<usize, f64>,
    roles: Vec<Role>,
    /// (sample, weight) pairs per Neumann row.
    neumann_sources: Vec<Vec<(usize, f64)>>,
    scale4: f64,
    scale1: f64,
}

impl fmt::Debug for ClampedBiharmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClampedBiharmonic").field("nodes", &self.chart.len()).finish()
    }
}

impl ClampedBiharmonic {
    pub fn new(chart: Arc<Chart<f64>>) -> Result<Self> {
        let n = chart.len();
        let h = chart.spacing();
        let (scale4, scale1) = (h.powi(4), h);
        let mut roles = vec![Role::Bilaplacian; n];
        let mut neumann_sources: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (s, b) in chart.boundary().iter().enumerate() {
            roles[b.node] = Role::Dirichlet;
            if let Some(r) = b.inward {
                neumann_sources[r].push((s, 0.0));
            }
        }
        for (k, sources) in neumann_sources.iter_mut().enumerate() {
            if !sources.is_empty() {
                roles[k] = Role::Neumann;
                let w = 1.0 / sources.len() as f64;
                sources.iter_mut().for_each(|e| e.1 = w);
            }
        }

        let laps: Vec<Option<Stencil>> =
            (0..n).map(|k| (!chart.is_boundary_node(k)).then(|| laplacian_row(&chart, k))).collect();
        let mut triplets = Vec::with_capacity(n * 81);
        for k in 0..n {
            match roles[k] {
                Role::Dirichlet => triplets.push(Triplet::new(k, k, 1.0)),
                Role::Neumann => {
                    for &(s, w) in &neumann_sources[k] {
                        for (c, v) in normal_row(&chart, s) {
                            triplets.push(Triplet::new(k, c, scale1 * w * v));
                        }
                    }
                }
                Role::Bilaplacian => {
                    let outer = laps[k].as_ref().expect("interior node");
                    for &(m, a) in outer {
                        let inner = laps[m].as_ref().ok_or_else(|| {
                            Error::SolverDiverged(format!("bilaplacian at node {k} reaches the boundary"))
                        })?;
                        for &(c, b) in inner {
                            triplets.push(Triplet::new(k, c, scale4 * a * b));
                        }
                    }
                }
            }
        }
        let lu = factor(n, &triplets)?;
        Ok(ClampedBiharmonic { chart, lu, roles, neumann_sources, scale4, scale1 })
    }

    pub fn chart(&self) -> &Arc<Chart<f64>> {
        &self.chart
    }

    fn rhs(&self, dirichlet: &[f64], neumann: &[f64], source: Option<&ScalarField<f64>>) -> Vec<f64> {
        let boundary = self.chart.boundary();
        let mut rhs = vec![0.0; self.chart.len()];
        for (s, b) in boundary.iter().enumerate() {
            rhs[b.node] = dirichlet[s];
        }
        for (k, role) in self.roles.iter().enumerate() {
            match role {
                Role::Dirichlet => {}
                Role::Neumann => {
                    rhs[k] = self.neumann_sources[k].iter().map(|&(s, w)| self.scale1 * w * neumann[s]).sum();
                }
                Role::Bilaplacian => rhs[k] = source.map_or(0.0, |f| self.scale4 * f.get(k)),
            }
        }
        rhs
    }

    /// Solves several clamped problems `(dirichlet, neumann, source)` at once.
    pub fn solve_many(
        &self,
        problems: &[(&[f64], &[f64], Option<&ScalarField<f64>>)],
    ) -> Result<Vec<ScalarField<f64>>> {
        let nb = self.chart.boundary().len();
        for (d, g, _) in problems {
            if d.len() != nb || g.len() != nb {
                return Err(Error::BadConfig("boundary data must have one value per boundary sample".to_string()));
            }
        }
        let rhs: Vec<Vec<f64>> = problems.iter().map(|(d, g, s)| self.rhs(d, g, *s)).collect();
        Ok(solve_columns(&self.lu, &rhs)?.into_iter().map(ScalarField::from_vec).collect())
    }

    /// Single clamped solve.
    pub fn solve(&self, dirichlet: &[f64], neumann: &[f64], source: Option<&ScalarField<f64>>) -> Result<ScalarField<f64>> {
        Ok(self.solve_many(&[(dirichlet, neumann, source)])?.remove(0))
    }

    /// ψ = ψ_h + λψ_p with ∫ψ·constraint = 0, where ψ_h carries the data and
    /// ψ_p solves Δ²ψ_p = constraint with homogeneous data.
    pub fn solve_constrained(
        &self,
        dirichlet: &[f64],
        neumann: &[f64],
        constraint: &ScalarField<f64>,
    ) -> Result<(ScalarField<f64>, f64)> {
        let zeros = vec![0.0; self.chart.boundary().len()];
        let mut sols = self.solve_many(&[(dirichlet, neumann, None), (&zeros, &zeros, Some(constraint))])?;
        let psi_p = sols.pop().expect("two solutions");
        let psi_h = sols.pop().expect("two solutions");
        let lambda = orthogonality_multiplier(&self.chart, &psi_h, &psi_p, constraint)?;
        Ok((combine(&psi_h, &psi_p, lambda), lambda))
    }
}

/// Navier biharmonic problem Δ²ψ = s inside, ψ = 0 and Δψ = g on the
/// boundary, solved as two Dirichlet Poisson problems with one factored
/// Laplacian.
pub struct NavierBiharmonic {
    chart: Arc<Chart<f64>>,
    lu: Lu<usize, f64>,
}

impl fmt::Debug for NavierBiharmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NavierBiharmonic").field("nodes", &self.chart.len()).finish()
    }
}

impl NavierBiharmonic {
    pub fn new(chart: Arc<Chart<f64>>) -> Result<Self> {
        let n = chart.len();
        let mut triplets = Vec::with_capacity(n * 9);
        for k in 0..n {
            if chart.is_boundary_node(k) {
                triplets.push(Triplet::new(k, k, 1.0));
            } else {
                triplets.extend(laplacian_row(&chart, k).into_iter().map(|(c, w)| Triplet::new(k, c, w)));
            }
        }
        let lu = factor(n, &triplets)?;
        Ok(NavierBiharmonic { chart, lu })
    }

    pub fn chart(&self) -> &Arc<Chart<f64>> {
        &self.chart
    }

    /// Δu = s inside, u = g per boundary sample (averaged where samples
    /// share a node).
    pub fn poisson(&self, source: &ScalarField<f64>, boundary: &[f64]) -> Result<ScalarField<f64>> {
        let chart = &self.chart;
        if boundary.len() != chart.boundary().len() {
            return Err(Error::BadConfig("boundary data must have one value per boundary sample".to_string()));
        }
        let mut rhs: Vec<f64> = (0..chart.len()).map(|k| if chart.is_boundary_node(k) { 0.0 } else { source.get(k) }).collect();
        let mut count = vec![0usize; chart.len()];
        for (b, &g) in chart.boundary().iter().zip(boundary) {
            rhs[b.node] += g;
            count[b.node] += 1;
        }
        for (v, &c) in rhs.iter_mut().zip(&count) {
            if c > 1 {
                *v /= c as f64;
            }
        }
        Ok(ScalarField::from_vec(solve_columns(&self.lu, &[rhs])?.remove(0)))
    }

    pub fn solve(&self, source: &ScalarField<f64>, boundary_laplacian: &[f64]) -> Result<ScalarField<f64>> {
        let w = self.poisson(source, boundary_laplacian)?;
        let mut psi = self.poisson(&w, &vec![0.0; boundary_laplacian.len()])?;
        for b in self.chart.boundary() {
            psi.set(b.node, 0.0);
        }
        Ok(psi)
    }
}

pub(crate) fn l2_norm(chart: &Chart<f64>, f: &ScalarField<f64>) -> f64 {
    chart.integrate_area(&f.map(|v| v * v)).max(0.0).sqrt()
}

pub(crate) fn inner(chart: &Chart<f64>, a: &ScalarField<f64>, b: &ScalarField<f64>) -> f64 {
    chart.integrate_area(&a.zip_map(b, |x, y| x * y))
}

/// λ = −∫ψ_h c / ∫ψ_p c, or 0 when the constraint vanishes.
pub(crate) fn orthogonality_multiplier(
    chart: &Chart<f64>,
    psi_h: &ScalarField<f64>,
    psi_p: &ScalarField<f64>,
    constraint: &ScalarField<f64>,
) -> Result<f64> {
    let cn = l2_norm(chart, constraint);
    if cn == 0.0 {
        return Ok(0.0);
    }
    let ih = inner(chart, psi_h, constraint);
    let ip = inner(chart, psi_p, constraint);
    let hn = l2_norm(chart, psi_h);
    let pn = l2_norm(chart, psi_p);
    let tiny = 1e-13;
    if ip.abs() <= tiny * pn * cn || ip == 0.0 {
        if ih.abs() <= tiny * hn * cn {
            return Ok(0.0);
        }
        return Err(Error::DegenerateConstraint { particular: ip.abs(), homogeneous: ih.abs() });
    }
    Ok(-ih / ip)
}

pub(crate) fn combine(psi_h: &ScalarField<f64>, psi_p: &ScalarField<f64>, lambda: f64) -> ScalarField<f64> {
    psi_h.zip_map(psi_p, |h, p| h + lambda * p)
}

/// Conservative finite-volume rows of ∫_cell Δu over the control volume of
/// every node, with zero flux through the boundary. Row sums vanish, so the
/// rows of a column of constants add up to zero as well.
pub(crate) fn finite_volume_rows(chart: &Chart<f64>) -> Vec<Stencil> {
    let lat = chart.lattice();
    let geom = &chart.geometry;
    let (nu, nv) = (lat.nu, lat.nv);
    let polar = lat.topology == Topology::Polar;
    let mut rows: Vec<Stencil> = vec![Vec::new(); chart.len()];
    // metric products J·[a, b, c] at a reference point
    let metric = |u: f64, v: f64| -> [f64; 3] {
        let [zu, zv] = geom.derivatives(u, v);
        let j = zu[0] * zv[1] - zv[0] * zu[1];
        let uu = zu[0] * zu[0] + zu[1] * zu[1];
        let vv = zv[0] * zv[0] + zv[1] * zv[1];
        let uv = zu[0] * zv[0] + zu[1] * zv[1];
        [vv / j, -uv / j, uu / j]
    };
    let u_extent = |i: usize| if (!polar && i == 0) || i == nu - 1 { 0.5 * lat.du } else { lat.du };
    let v_extent = |j: usize| if !polar && (j == 0 || j == nv - 1) { 0.5 * lat.dv } else { lat.dv };
    // J ∇u·∇ξ across a face leaves `from` and enters `to`
    let mut push_flux = |from: usize, to: usize, flux: &Stencil| {
        for &(c, w) in flux {
            rows[from].push((c, w));
            rows[to].push((c, -w));
        }
    };
    // faces between (i, j) and (i + 1, j)
    for i in 0..nu - 1 {
        let uf = lat.ref_u(i) + 0.5 * lat.du;
        for j in 0..nv {
            let [ja, jb, _] = metric(uf, lat.ref_v(j));
            let len = v_extent(j);
            let (k0, k1) = (lat.idx(i, j), lat.idx(i + 1, j));
            let mut flux: Stencil = vec![(k1, ja * len / lat.du), (k0, -ja * len / lat.du)];
            for &(c, w) in dv_row(lat, i, j).iter().chain(dv_row(lat, i + 1, j).iter()) {
                flux.push((c, 0.5 * jb * len * w));
            }
            push_flux(k0, k1, &flux);
        }
    }
    // faces between (i, j) and (i, j + 1)
    let v_faces = if polar { nv } else { nv - 1 };
    for i in 0..nu {
        let len = u_extent(i);
        for j in 0..v_faces {
            let jn = (j + 1) % nv;
            let vf = lat.ref_v(j) + 0.5 * lat.dv;
            let [_, jb, jc] = metric(lat.ref_u(i), vf);
            let (k0, k1) = (lat.idx(i, j), lat.idx(i, jn));
            let mut flux: Stencil = vec![(k1, jc * len / lat.dv), (k0, -jc * len / lat.dv)];
            for &(c, w) in du_row(lat, i, j).iter().chain(du_row(lat, i, jn).iter()) {
                flux.push((c, 0.5 * jb * len * w));
            }
            push_flux(k0, k1, &flux);
        }
    }
    rows
}

/// Factored Neumann Poisson problem Δu = r − λ, ∂u/∂n = 0, Σ w u = 0, in
/// conservative finite-volume form. λ is the mean of r, which makes the
/// data compatible; the singular operator is made invertible by pinning one
/// node, and the mean is removed afterwards.
pub struct NeumannPoisson {
    chart: Arc<Chart<f64>>,
    lu: Lu<usize, f64>,
}

impl fmt::Debug for NeumannPoisson {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NeumannPoisson").field("nodes", &self.chart.len()).finish()
    }
}

/// Node whose value is fixed during the factorization.
const PINNED: usize = 0;

impl NeumannPoisson {
    pub fn new(chart: Arc<Chart<f64>>) -> Result<Self> {
        let n = chart.len();
        let mut triplets = Vec::with_capacity(n * 16);
        for (k, row) in finite_volume_rows(&chart).into_iter().enumerate() {
            if k == PINNED {
                triplets.push(Triplet::new(k, k, 1.0));
                continue;
            }
            triplets.extend(row.into_iter().map(|(c, v)| Triplet::new(k, c, v)));
        }
        let lu = factor(n, &triplets)?;
        Ok(NeumannPoisson { chart, lu })
    }

    /// Zero-mean solution of Δu = r − λ and the absorbed constant λ.
    pub fn solve(&self, r: &ScalarField<f64>) -> Result<(ScalarField<f64>, f64)> {
        let chart = &self.chart;
        // compatibility is exact for the control volumes, not for the
        // higher-order quadrature weights
        let volumes = chart.cell_volumes();
        let lambda = volumes.iter().zip(r.values()).map(|(w, v)| w * v).sum::<f64>() / volumes.iter().sum::<f64>();
        let mut rhs: Vec<f64> = volumes.iter().enumerate().map(|(k, &w)| w * (r.get(k) - lambda)).collect();
        rhs[PINNED] = 0.0;
        let u = ScalarField::from_vec(solve_columns(&self.lu, &[rhs])?.remove(0));
        let mean = chart.integrate_area(&u) / chart.area();
        Ok((u.map(|v| v - mean), lambda))
    }
}

/// Discrete Laplacian of `f` at non-boundary nodes (zero on the boundary).
pub fn laplacian(chart: &Chart<f64>, f: &ScalarField<f64>) -> ScalarField<f64> {
    ScalarField::from_vec(
        (0..chart.len())
            .map(|k| if chart.is_boundary_node(k) { 0.0 } else { apply(&laplacian_row(chart, k), f.values()) })
            .collect(),
    )
}
