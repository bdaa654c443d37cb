//! Analytic chart maps from reference coordinates to the plane.
//!
//! Rectangles use u, v ∈ [0, 1]. Star-shaped domains use a polar-like
//! reference (u = ρ ∈ [0, 1], v = θ ∈ [0, 2π)) whose maps satisfy
//! `z(−ρ, θ) = z(ρ, θ + π)`, so grid values across the pole can be read by
//! reflection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain description as accepted in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    Rect {
        w: f64,
        h: f64,
        /// Lower-left corner before rotation.
        #[serde(default)]
        origin: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    /// r(θ) = a0 + Σ (a_k cos kθ + b_k sin kθ), coefficients `[a0, a1, b1, a2, b2, ...]`.
    Star {
        coeffs: Vec<f64>,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    /// Accepted by the parser only so it can be rejected with a precise error.
    Annulus { inner: f64, outer: f64 },
}

impl DomainSpec {
    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0, center: [0.0, 0.0], rotation: 0.0 }
    }

    pub fn unit_square() -> Self {
        DomainSpec::Rect { w: 1.0, h: 1.0, origin: [0.0, 0.0], rotation: 0.0 }
    }

    /// Exact area of the described domain.
    pub fn area(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius, .. } => PI * radius * radius,
            DomainSpec::Rect { w, h, .. } => w * h,
            DomainSpec::Ellipse { a, b, .. } => PI * a * b,
            DomainSpec::Star { coeffs, .. } => {
                // ½∫r² dθ
                let a0 = coeffs.first().copied().unwrap_or(0.0);
                let higher: f64 = coeffs.iter().skip(1).map(|c| c * c).sum();
                PI * a0 * a0 + 0.5 * PI * higher
            }
            DomainSpec::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Shape {
    Rect { w: f64, h: f64 },
    Ellipse { a: f64, b: f64 },
    Star { coeffs: Vec<f64> },
}

/// Analytic chart: shape map followed by a rigid placement.
#[derive(Clone, Debug)]
pub(crate) struct Geometry {
    pub shape: Shape,
    pub offset: [f64; 2],
    pub rotation: f64,
}

impl Geometry {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        let geometry = match spec {
            DomainSpec::Annulus { .. } => {
                return Err(Error::UnsupportedDomain(
                    "annulus is not simply connected".to_string(),
                ))
            }
            DomainSpec::Disk { radius, center, rotation } => {
                positive("radius", *radius)?;
                Geometry {
                    shape: Shape::Ellipse { a: *radius, b: *radius },
                    offset: *center,
                    rotation: *rotation,
                }
            }
            DomainSpec::Ellipse { a, b, center, rotation } => {
                positive("a", *a)?;
                positive("b", *b)?;
                Geometry { shape: Shape::Ellipse { a: *a, b: *b }, offset: *center, rotation: *rotation }
            }
            DomainSpec::Rect { w, h, origin, rotation } => {
                positive("w", *w)?;
                positive("h", *h)?;
                Geometry { shape: Shape::Rect { w: *w, h: *h }, offset: *origin, rotation: *rotation }
            }
            DomainSpec::Star { coeffs, center, rotation } => {
                if coeffs.is_empty() || coeffs.len() % 2 == 0 {
                    return Err(Error::UnsupportedDomain(format!(
                        "star coefficients must be [a0, a1, b1, ...], got {} values",
                        coeffs.len()
                    )));
                }
                let samples = 4096;
                for s in 0..samples {
                    let theta = 2.0 * PI * s as f64 / samples as f64;
                    let r = star_radius(coeffs, theta).0;
                    if r <= 0.0 || !r.is_finite() {
                        return Err(Error::DegenerateBoundary(format!(
                            "r({theta:.4}) = {r} is not positive"
                        )));
                    }
                }
                Geometry { shape: Shape::Star { coeffs: coeffs.clone() }, offset: *center, rotation: *rotation }
            }
        };
        Ok(geometry)
    }

    pub fn is_polar(&self) -> bool {
        !matches!(self.shape, Shape::Rect { .. })
    }

    fn place(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        [self.offset[0] + c * p[0] - s * p[1], self.offset[1] + s * p[0] + c * p[1]]
    }

    fn rotate(&self, d: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        [c * d[0] - s * d[1], s * d[0] + c * d[1]]
    }

    fn unplace(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        let d = [p[0] - self.offset[0], p[1] - self.offset[1]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1]]
    }

    /// Physical point of a point given in the unrotated, unshifted frame.
    pub fn from_local(&self, p: [f64; 2]) -> [f64; 2] {
        self.place(p)
    }

    pub fn to_local(&self, p: [f64; 2]) -> [f64; 2] {
        self.unplace(p)
    }

    /// Center of the shape in the local frame.
    pub fn local_center(&self) -> [f64; 2] {
        match &self.shape {
            Shape::Rect { w, h } => [0.5 * w, 0.5 * h],
            _ => [0.0, 0.0],
        }
    }

    /// Distance from the local center to the boundary along direction `alpha`
    /// (local frame).
    pub fn extent(&self, alpha: f64) -> f64 {
        let (s, c) = alpha.sin_cos();
        match &self.shape {
            Shape::Rect { w, h } => {
                let tx = if c.abs() > 1e-300 { 0.5 * w / c.abs() } else { f64::INFINITY };
                let ty = if s.abs() > 1e-300 { 0.5 * h / s.abs() } else { f64::INFINITY };
                tx.min(ty)
            }
            Shape::Ellipse { a, b } => a * b / (b * c).hypot(a * s),
            Shape::Star { coeffs } => star_radius(coeffs, alpha).0,
        }
    }

    /// Physical point for reference coordinates.
    pub fn map(&self, u: f64, v: f64) -> [f64; 2] {
        let local = match &self.shape {
            Shape::Rect { w, h } => [u * w, v * h],
            Shape::Ellipse { a, b } => [a * u * v.cos(), b * u * v.sin()],
            Shape::Star { coeffs } => {
                let (big_r, _, _) = blended_radius(coeffs, u, v);
                [u * big_r * v.cos(), u * big_r * v.sin()]
            }
        };
        self.place(local)
    }

    /// Analytic partials `[∂_u z, ∂_v z]` of the placed map.
    pub fn derivatives(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        let (zu, zv) = match &self.shape {
            Shape::Rect { w, h } => ([*w, 0.0], [0.0, *h]),
            Shape::Ellipse { a, b } => {
                let (s, c) = v.sin_cos();
                ([a * c, b * s], [-a * u * s, b * u * c])
            }
            Shape::Star { coeffs } => {
                let (big_r, r_rho, r_theta) = blended_radius(coeffs, u, v);
                let (s, c) = v.sin_cos();
                let radial = big_r + u * r_rho;
                ([radial * c, radial * s], [u * (r_theta * c - big_r * s), u * (r_theta * s + big_r * c)])
            }
        };
        [self.rotate(zu), self.rotate(zv)]
    }

    pub fn jacobian_det(&self, u: f64, v: f64) -> f64 {
        let [zu, zv] = self.derivatives(u, v);
        zu[0] * zv[1] - zv[0] * zu[1]
    }

    /// Reference coordinates of a physical point (unclamped).
    pub fn inverse(&self, p: [f64; 2]) -> [f64; 2] {
        let q = self.unplace(p);
        match &self.shape {
            Shape::Rect { w, h } => [q[0] / w, q[1] / h],
            Shape::Ellipse { a, b } => {
                let (x, y) = (q[0] / a, q[1] / b);
                [x.hypot(y), wrap_angle(y.atan2(x))]
            }
            Shape::Star { coeffs } => star_inverse(coeffs, q),
        }
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateBoundary(format!("{name} = {value} must be positive")))
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Boundary radius split into (full, even harmonics incl. a0, odd harmonics)
/// together with θ-derivatives of the even and odd parts.
fn star_parts(coeffs: &[f64], theta: f64) -> (f64, f64, f64, f64) {
    let a0 = coeffs[0];
    let (mut even, mut odd, mut d_even, mut d_odd) = (a0, 0.0, 0.0, 0.0);
    for (idx, pair) in coeffs[1..].chunks(2).enumerate() {
        let k = (idx + 1) as f64;
        let (s, c) = (k * theta).sin_cos();
        let value = pair[0] * c + pair[1] * s;
        let deriv = k * (-pair[0] * s + pair[1] * c);
        if (idx + 1) % 2 == 0 {
            even += value;
            d_even += deriv;
        } else {
            odd += value;
            d_odd += deriv;
        }
    }
    (even, odd, d_even, d_odd)
}

fn star_radius(coeffs: &[f64], theta: f64) -> (f64, f64) {
    let (even, odd, d_even, d_odd) = star_parts(coeffs, theta);
    (even + odd, d_even + d_odd)
}

/// R(ρ, θ) = a0 + ρ²(r_even − a0) + ρ r_odd, with ∂_ρR and ∂_θR. Equals r(θ)
/// at ρ = 1 and keeps the pole reflection symmetry.
fn blended_radius(coeffs: &[f64], rho: f64, theta: f64) -> (f64, f64, f64) {
    let a0 = coeffs[0];
    let (even, odd, d_even, d_odd) = star_parts(coeffs, theta);
    let big_r = a0 + rho * rho * (even - a0) + rho * odd;
    let r_rho = 2.0 * rho * (even - a0) + odd;
    let r_theta = rho * rho * d_even + rho * d_odd;
    (big_r, r_rho, r_theta)
}

fn star_inverse(coeffs: &[f64], q: [f64; 2]) -> [f64; 2] {
    let dist = q[0].hypot(q[1]);
    if dist < 1e-300 {
        return [0.0, 0.0];
    }
    let mut theta = q[1].atan2(q[0]);
    let mut rho = dist / star_radius(coeffs, theta).0;
    for _ in 0..50 {
        let (big_r, r_rho, r_theta) = blended_radius(coeffs, rho, theta);
        let (s, c) = theta.sin_cos();
        let z = [rho * big_r * c, rho * big_r * s];
        let res = [z[0] - q[0], z[1] - q[1]];
        let radial = big_r + rho * r_rho;
        let zu = [radial * c, radial * s];
        let zv = [rho * (r_theta * c - big_r * s), rho * (r_theta * s + big_r * c)];
        let det = zu[0] * zv[1] - zv[0] * zu[1];
        if det.abs() < 1e-300 {
            break;
        }
        let d_rho = (zv[1] * res[0] - zv[0] * res[1]) / det;
        let d_theta = (-zu[1] * res[0] + zu[0] * res[1]) / det;
        rho -= d_rho;
        theta -= d_theta;
        if d_rho.abs() + d_theta.abs() < 1e-15 {
            break;
        }
    }
    if rho < 0.0 {
        rho = -rho;
        theta += PI;
    }
    [rho, wrap_angle(theta)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_map_is_reflection_symmetric_and_invertible() {
        let g = Geometry::from_spec(&DomainSpec::Star {
            coeffs: vec![1.0, 0.1, -0.05, 0.15, 0.0, 0.0, 0.04],
            center: [0.3, -0.2],
            rotation: 0.4,
        })
        .unwrap();
        for &(rho, theta) in &[(0.1, 0.3), (0.5, 2.0), (0.95, 5.5)] {
            let a = g.map(-rho, theta);
            let b = g.map(rho, theta + PI);
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
            let p = g.map(rho, theta);
            let back = g.inverse(p);
            assert!((back[0] - rho).abs() < 1e-12, "{back:?}");
            assert!((back[1] - theta).abs() < 1e-12, "{back:?}");
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let g = Geometry::from_spec(&DomainSpec::Star {
            coeffs: vec![1.0, 0.0, 0.1, 0.2, 0.0],
            center: [0.0, 0.0],
            rotation: 0.0,
        })
        .unwrap();
        let (u, v, eps) = (0.6, 1.1, 1e-6);
        let d = g.derivatives(u, v);
        let pu = g.map(u + eps, v);
        let mu = g.map(u - eps, v);
        let pv = g.map(u, v + eps);
        let mv = g.map(u, v - eps);
        for c in 0..2 {
            assert!(((pu[c] - mu[c]) / (2.0 * eps) - d[0][c]).abs() < 1e-8);
            assert!(((pv[c] - mv[c]) / (2.0 * eps) - d[1][c]).abs() < 1e-8);
        }
    }

    #[test]
    fn annulus_is_rejected() {
        let err = Geometry::from_spec(&DomainSpec::Annulus { inner: 0.5, outer: 1.0 }).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDomain(_)));
    }

    #[test]
    fn nonpositive_radius_is_degenerate() {
        let err = Geometry::from_spec(&DomainSpec::Star {
            coeffs: vec![0.5, 0.8, 0.0],
            center: [0.0, 0.0],
            rotation: 0.0,
        })
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateBoundary(_)));
    }

    #[test]
    fn star_area_matches_fourier_formula() {
        let spec = DomainSpec::Star { coeffs: vec![1.0, 0.2, 0.0], center: [0.0, 0.0], rotation: 0.0 };
        // ½∫(1 + 0.2 cos θ)² dθ = π(1 + 0.02)
        assert!((spec.area() - PI * 1.02).abs() < 1e-14);
    }
}
