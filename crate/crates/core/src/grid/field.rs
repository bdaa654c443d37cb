use num_complex::Complex;

use crate::scalar::{NodeValue, Scalar};

/// One value per chart node, stored in the chart's (u-major) node order.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<V> {
    values: Vec<V>,
}

pub type ScalarField<T> = Field<T>;
pub type ComplexField<T> = Field<Complex<T>>;

impl<V: Copy> Field<V> {
    pub fn from_vec(values: Vec<V>) -> Self {
        Field { values }
    }

    pub fn filled(len: usize, value: V) -> Self {
        Field { values: vec![value; len] }
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<V> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> V {
        self.values[k]
    }

    pub fn set(&mut self, k: usize, value: V) {
        self.values[k] = value;
    }

    pub fn map<W: Copy>(&self, f: impl Fn(V) -> W) -> Field<W> {
        Field { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Copy, W: Copy>(&self, other: &Field<U>, f: impl Fn(V, U) -> W) -> Field<W> {
        assert_eq!(self.len(), other.len(), "field shapes differ");
        Field { values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }
}

impl<V> Field<V> {
    pub fn max_abs<T: Scalar>(&self) -> T
    where
        V: NodeValue<T>,
    {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.magnitude()))
    }

    pub fn all_finite<T: Scalar>(&self) -> bool
    where
        V: NodeValue<T>,
    {
        self.values.iter().all(|v| v.is_finite_value())
    }
}

impl<V: Copy + std::ops::Add<Output = V>> std::ops::Add for &Field<V> {
    type Output = Field<V>;

    fn add(self, rhs: Self) -> Field<V> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<V: Copy + std::ops::Sub<Output = V>> std::ops::Sub for &Field<V> {
    type Output = Field<V>;

    fn sub(self, rhs: Self) -> Field<V> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Field<T> {
    pub fn to_complex(&self) -> Field<Complex<T>> {
        self.map(|v| Complex::new(v, T::zero()))
    }
}

impl<T: Scalar> Field<Complex<T>> {
    pub fn re(&self) -> Field<T> {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> Field<T> {
        self.map(|v| v.im)
    }
}
