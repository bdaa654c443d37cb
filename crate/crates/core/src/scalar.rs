use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex;

/// Floating point scalar the grid calculus is written against: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumCast
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 literal fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Values a linear stencil can be applied to: real or complex node samples.
pub trait NodeValue<T: Scalar>:
    Copy
    + Debug
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<T, Output = Self>
    + AddAssign
    + Send
    + Sync
{
    fn zero() -> Self {
        Self::default()
    }

    fn magnitude(self) -> T;

    fn is_finite_value(self) -> bool;
}

impl<T: Scalar> NodeValue<T> for T {
    fn magnitude(self) -> T {
        self.abs()
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl<T: Scalar> NodeValue<T> for Complex<T> {
    fn magnitude(self) -> T {
        self.norm()
    }

    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Pointwise invariant k(A) = tr²(A) − 4 det(A) of a symmetric 2×2 matrix
/// `[[a, b], [b, c]]`; equals (λ₁ − λ₂)² and is zero exactly at multiples of
/// the identity.
pub fn k_invariant<T: Scalar>(a: T, b: T, c: T) -> T {
    let diff = a - c;
    // (a + c)² − 4(ac − b²) = (a − c)² + 4b²
    diff * diff + T::lit(4.0) * b * b
}

/// Hopf function of a map with partial derivative vectors `phi_x`, `phi_y`:
/// (|Φ_y|² − |Φ_x|²) + 2i (Φ_x · Φ_y).
pub fn hopf<T: Scalar>(phi_x: [T; 2], phi_y: [T; 2]) -> Complex<T> {
    let gxx = phi_x[0] * phi_x[0] + phi_x[1] * phi_x[1];
    let gyy = phi_y[0] * phi_y[0] + phi_y[1] * phi_y[1];
    let gxy = phi_x[0] * phi_y[0] + phi_x[1] * phi_y[1];
    Complex::new(gyy - gxx, T::lit(2.0) * gxy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_invariant_matches_trace_determinant_form() {
        let (a, b, c) = (2.5_f64, -0.75, 1.25);
        let tr = a + c;
        let det = a * c - b * b;
        assert!((k_invariant(a, b, c) - (tr * tr - 4.0 * det)).abs() < 1e-12);
        assert_eq!(k_invariant(1.0_f64, 0.0, 1.0), 0.0);
    }

    #[test]
    fn hopf_of_shear_is_one_plus_two_i() {
        // Φ = (x + y, y): Φ_x = (1, 0), Φ_y = (1, 1)
        let f = hopf([1.0_f64, 0.0], [1.0, 1.0]);
        assert_eq!(f, Complex::new(1.0, 2.0));
        let f32_version = hopf([1.0_f32, 0.0], [1.0, 1.0]);
        assert_eq!(f32_version, Complex::new(1.0_f32, 2.0));
    }
}
