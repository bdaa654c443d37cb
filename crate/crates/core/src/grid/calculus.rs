use num_complex::Complex;

use super::{Chart, ComplexField, Field, Lattice, ScalarField, Topology};
use crate::scalar::{NodeValue, Scalar};

/// Which Wirtinger derivative: ∂_z = ½(∂_x − i∂_y) or ∂_z̄ = ½(∂_x + i∂_y).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wirtinger {
    DZ,
    DZBar,
}

/// Fourth-order first-derivative weights, scaled by 12h, with the lattice
/// offset of the first of five points. Ends that are `open` (pole
/// reflection or periodic wrap) keep the centered stencil.
pub(crate) fn d1_weights(i: usize, n: usize, open_low: bool, open_high: bool) -> (isize, [f64; 5]) {
    const CENTERED: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    if !open_low && i == 0 {
        (0, [-25.0, 48.0, -36.0, 16.0, -3.0])
    } else if !open_low && i == 1 {
        (-1, [-3.0, -10.0, 18.0, -6.0, 1.0])
    } else if !open_high && i == n - 1 {
        (-4, [3.0, -16.0, 36.0, -48.0, 25.0])
    } else if !open_high && i == n - 2 {
        (-3, [-1.0, 6.0, -18.0, 10.0, 3.0])
    } else {
        (-2, CENTERED)
    }
}

/// Stencil of ∂_u at lattice node (i, j): (node, weight) pairs.
pub(crate) fn du_stencil(lat: &Lattice, i: usize, j: usize) -> [(usize, f64); 5] {
    let (o, w) = d1_weights(i, lat.nu, lat.topology == Topology::Polar, false);
    let s = 1.0 / (12.0 * lat.du);
    std::array::from_fn(|a| {
        let k = lat.neighbor(i as isize + o + a as isize, j as isize).expect("derivative stencil on lattice");
        (k, w[a] * s)
    })
}

/// Stencil of ∂_v at lattice node (i, j); periodic for polar charts.
pub(crate) fn dv_stencil(lat: &Lattice, i: usize, j: usize) -> [(usize, f64); 5] {
    let periodic = lat.topology == Topology::Polar;
    let (o, w) = d1_weights(j, lat.nv, periodic, periodic);
    let s = 1.0 / (12.0 * lat.dv);
    std::array::from_fn(|a| {
        let k = lat.neighbor(i as isize, j as isize + o + a as isize).expect("derivative stencil on lattice");
        (k, w[a] * s)
    })
}

fn apply_stencils<T: Scalar, V: NodeValue<T>>(
    lat: &Lattice,
    f: &[V],
    stencil: impl Fn(&Lattice, usize, usize) -> [(usize, f64); 5],
) -> Vec<V> {
    let mut out = vec![V::zero(); f.len()];
    for i in 0..lat.nu {
        for j in 0..lat.nv {
            let mut acc = V::zero();
            for (k, w) in stencil(lat, i, j) {
                acc += f[k] * T::lit(w);
            }
            out[lat.idx(i, j)] = acc;
        }
    }
    out
}

/// Fourth-order derivative along u: centered inside and across the pole,
/// one-sided five-point near clamped ends.
pub(crate) fn diff_u<T: Scalar, V: NodeValue<T>>(lat: &Lattice, f: &[V]) -> Vec<V> {
    apply_stencils(lat, f, du_stencil)
}

/// Fourth-order derivative along v (periodic for polar charts).
pub(crate) fn diff_v<T: Scalar, V: NodeValue<T>>(lat: &Lattice, f: &[V]) -> Vec<V> {
    apply_stencils(lat, f, dv_stencil)
}

impl<T: Scalar> Chart<T> {
    pub fn d_u<V: NodeValue<T>>(&self, f: &Field<V>) -> Field<V> {
        Field::from_vec(diff_u(&self.lattice, f.values()))
    }

    pub fn d_v<V: NodeValue<T>>(&self, f: &Field<V>) -> Field<V> {
        Field::from_vec(diff_v(&self.lattice, f.values()))
    }

    /// Physical partials `(∂_x f, ∂_y f)` through the chart Jacobian.
    pub fn gradient<V: NodeValue<T>>(&self, f: &Field<V>) -> (Field<V>, Field<V>) {
        let fu = diff_u(&self.lattice, f.values());
        let fv = diff_v(&self.lattice, f.values());
        let mut fx = Vec::with_capacity(f.len());
        let mut fy = Vec::with_capacity(f.len());
        for k in 0..f.len() {
            let [ux, uy, vx, vy] = self.inv[k];
            fx.push(fu[k] * ux + fv[k] * vx);
            fy.push(fu[k] * uy + fv[k] * vy);
        }
        (Field::from_vec(fx), Field::from_vec(fy))
    }

    pub fn d_x<V: NodeValue<T>>(&self, f: &Field<V>) -> Field<V> {
        self.gradient(f).0
    }

    pub fn d_y<V: NodeValue<T>>(&self, f: &Field<V>) -> Field<V> {
        self.gradient(f).1
    }

    pub fn wirtinger(&self, f: &ComplexField<T>, which: Wirtinger) -> ComplexField<T> {
        let (fx, fy) = self.gradient(f);
        let half = T::lit(0.5);
        let i = Complex::new(T::zero(), T::one());
        fx.zip_map(&fy, |a, b| match which {
            Wirtinger::DZ => (a - i * b) * half,
            Wirtinger::DZBar => (a + i * b) * half,
        })
    }

    pub fn d_zbar(&self, f: &ComplexField<T>) -> ComplexField<T> {
        self.wirtinger(f, Wirtinger::DZBar)
    }

    pub fn d_z(&self, f: &ComplexField<T>) -> ComplexField<T> {
        self.wirtinger(f, Wirtinger::DZ)
    }

    /// ∂_z̄ of a real field: ½(f_x + i f_y).
    pub fn d_zbar_real(&self, f: &ScalarField<T>) -> ComplexField<T> {
        let (fx, fy) = self.gradient(f);
        let half = T::lit(0.5);
        fx.zip_map(&fy, |a, b| Complex::new(a * half, b * half))
    }

    /// Σ f · area_weight.
    pub fn integrate_area(&self, f: &ScalarField<T>) -> T {
        assert_eq!(f.len(), self.len(), "field does not match chart");
        f.values().iter().zip(&self.area_weights).map(|(&v, &w)| v * w).sum()
    }

    /// Σ value · |dz| over the boundary ring.
    pub fn integrate_boundary(&self, values: &[T]) -> T {
        assert_eq!(values.len(), self.boundary.len(), "one value per boundary sample expected");
        values.iter().zip(&self.boundary).map(|(&v, b)| v * b.weight).sum()
    }

    /// dz/dz̄ = τ² at every boundary sample.
    pub fn boundary_tangent_sq(&self) -> Vec<Complex<T>> {
        self.boundary.iter().map(|b| b.tangent * b.tangent).collect()
    }

    /// Outward normal derivative of a real field at every boundary sample.
    pub fn normal_derivative(&self, f: &ScalarField<T>) -> Vec<T> {
        let (fx, fy) = self.gradient(f);
        self.boundary
            .iter()
            .map(|b| fx.get(b.node) * b.normal[0] + fy.get(b.node) * b.normal[1])
            .collect()
    }

    /// Values of a field at the boundary samples.
    pub fn boundary_trace<V: Copy>(&self, f: &Field<V>) -> Vec<V> {
        self.boundary.iter().map(|b| f.get(b.node)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_chart, DomainSpec};

    fn cplx(x: f64, y: f64) -> Complex<f64> {
        Complex::new(x, y)
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        for spec in [DomainSpec::unit_disk(), DomainSpec::unit_square()] {
            let chart: Chart<f64> = build_chart(&spec, 16).unwrap();
            let f = chart.constant(cplx(2.5, -1.0));
            let d = chart.d_zbar(&f);
            assert!(d.max_abs::<f64>() < 1e-12);
        }
    }

    #[test]
    fn affine_fields_are_differentiated_exactly() {
        let spec = DomainSpec::Star { coeffs: vec![1.0, 0.1, 0.0, 0.1, 0.05], center: [0.1, 0.0], rotation: 0.2 };
        let chart: Chart<f64> = build_chart(&spec, 32).unwrap();
        let f = chart.field_from_fn(|p| 3.0 * p[0] - 2.0 * p[1] + 0.5);
        let (fx, fy) = chart.gradient(&f);
        for k in 0..chart.len() {
            assert!((fx.get(k) - 3.0).abs() < 1e-11);
            assert!((fy.get(k) + 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn dzbar_of_modulus_squared_is_z() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 64).unwrap();
        let f = chart.field_from_fn(|p| cplx(p[0] * p[0] + p[1] * p[1], 0.0));
        let d = chart.d_zbar(&f);
        let err = (0..chart.len())
            .filter(|&k| !chart.is_boundary_node(k))
            .map(|k| (d.get(k) - cplx(chart.node(k)[0], chart.node(k)[1])).norm())
            .fold(0.0, f64::max);
        // (x² + y²) is reproduced exactly by second-order differences in ρ,
        // and the θ stencil only sees ρ² which is θ-independent.
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn second_dzbar_of_zbar_squared_is_two() {
        for (n, tol) in [(32usize, 0.05), (64, 0.025)] {
            let chart: Chart<f64> = build_chart(&DomainSpec::unit_square(), n).unwrap();
            let f = chart.field_from_fn(|p| {
                let zb = cplx(p[0], -p[1]);
                zb * zb
            });
            let dd = chart.d_zbar(&chart.d_zbar(&f));
            let err = dd.values().iter().map(|v| (v - cplx(2.0, 0.0)).norm()).fold(0.0, f64::max);
            assert!(err <= tol, "n={n} err={err}");
        }
    }

    #[test]
    fn wirtinger_pair_sums_to_x_derivative() {
        let chart: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 32).unwrap();
        let f = chart.field_from_fn(|p| cplx((2.0 * p[0]).sin() * p[1], p[0] * p[1] * p[1]));
        let sum = &chart.d_z(&f) + &chart.d_zbar(&f);
        let dx = chart.d_x(&f);
        let diff = (&sum - &dx).max_abs::<f64>();
        assert!(diff < 1e-12, "diff {diff}");
    }

    #[test]
    fn refinement_is_second_order() {
        let exact = |p: [f64; 2]| (1.3 * p[0]).cos() * (0.7 * p[1]).exp();
        let dx_exact = |p: [f64; 2]| -1.3 * (1.3 * p[0]).sin() * (0.7 * p[1]).exp();
        let spec = DomainSpec::Ellipse { a: 1.2, b: 0.8, center: [0.0, 0.0], rotation: 0.3 };
        let err = |n: usize| {
            let chart: Chart<f64> = build_chart(&spec, n).unwrap();
            let f = chart.field_from_fn(exact);
            let dx = chart.d_x(&f);
            (0..chart.len()).map(|k| (dx.get(k) - dx_exact(chart.node(k))).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(32), err(64));
        assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
    }

    #[test]
    fn area_quadrature_is_fourth_order() {
        // ∫ e^x cos y over the unit disk is π (mean value property); over
        // [0, 1]² it is (e − 1) sin 1
        let disk_err = |n| {
            let c: Chart<f64> = build_chart(&DomainSpec::unit_disk(), n).unwrap();
            (c.integrate_area(&c.field_from_fn(|p| p[0].exp() * p[1].cos())) - std::f64::consts::PI).abs()
        };
        let square_err = |n| {
            let c: Chart<f64> = build_chart(&DomainSpec::unit_square(), n).unwrap();
            let exact = (std::f64::consts::E - 1.0) * 1f64.sin();
            (c.integrate_area(&c.field_from_fn(|p| p[0].exp() * p[1].cos())) - exact).abs()
        };
        for err in [&disk_err as &dyn Fn(usize) -> f64, &square_err] {
            let (coarse, fine) = (err(24), err(48));
            assert!(fine < 1e-6 && (coarse / fine > 12.0 || coarse < 1e-12), "{coarse} then {fine}");
        }
    }

    #[test]
    fn quadrature_examples() {
        let square: Chart<f64> = build_chart(&DomainSpec::unit_square(), 32).unwrap();
        assert!((square.integrate_area(&square.constant(1.0)) - 1.0).abs() < 1e-13);
        let centered: Chart<f64> = build_chart(
            &DomainSpec::Rect { w: 2.0, h: 2.0, origin: [-1.0, -1.0], rotation: 0.0 },
            32,
        )
        .unwrap();
        let x = centered.field_from_fn(|p| p[0]);
        assert!(centered.integrate_area(&x).abs() < 1e-12);

        let disk: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 64).unwrap();
        assert!((disk.integrate_area(&disk.constant(1.0)) - std::f64::consts::PI).abs() < 1e-12);
        let ones = vec![1.0; disk.boundary().len()];
        assert!((disk.integrate_boundary(&ones) - 2.0 * std::f64::consts::PI).abs() < 1e-3);
        let zeros = vec![0.0; disk.boundary().len()];
        assert_eq!(disk.integrate_boundary(&zeros), 0.0);
        let sines: Vec<f64> = disk.boundary().iter().map(|b| b.position[1]).collect();
        assert!(disk.integrate_boundary(&sines).abs() < 1e-10);
    }

    #[test]
    fn tangent_squared_on_disk_and_square() {
        let disk: Chart<f64> = build_chart(&DomainSpec::unit_disk(), 32).unwrap();
        for (b, t2) in disk.boundary().iter().zip(disk.boundary_tangent_sq()) {
            let theta = b.position[1].atan2(b.position[0]);
            let expected = -Complex::from_polar(1.0, 2.0 * theta);
            assert!((t2 - expected).norm() < 1e-12);
            assert!((t2.norm() - 1.0).abs() < 1e-12);
        }
        let square: Chart<f64> = build_chart(&DomainSpec::unit_square(), 16).unwrap();
        let t2 = square.boundary_tangent_sq();
        // samples 1..n-2 are the bottom edge without corners
        for value in &t2[1..15] {
            assert!((value - cplx(1.0, 0.0)).norm() < 1e-14);
        }
        assert!(t2.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_precision_charts_work() {
        let chart: Chart<f32> = build_chart(&DomainSpec::unit_square(), 16).unwrap();
        let f = chart.field_from_fn(|p| 2.0 * p[0] + p[1]);
        let (fx, fy) = chart.gradient(&f);
        assert!(fx.values().iter().all(|v| (v - 2.0).abs() < 1e-4));
        assert!(fy.values().iter().all(|v| (v - 1.0).abs() < 1e-4));
    }
}
