//! Test functions on the gasket: samples on `V_m`, simple functions on
//! `N`-cells, harmonic functions and closures of the Euclidean coordinates.

use crate::decimation::extend_eigenfunction;
use crate::error::{Error, Result};
use crate::scalar::{ipow, Real};
use crate::topology::{quadrature, vertex_count, Gasket};

/// Values on `V_m` in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T: Real> {
    level: usize,
    values: Vec<T>,
    positive: bool,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(level: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != vertex_count(level) {
            return Err(Error::DimensionMismatch {
                expected: vertex_count(level),
                got: values.len(),
            });
        }
        let positive = values.iter().all(|&v| v > T::zero());
        Ok(Self {
            level,
            values,
            positive,
        })
    }

    pub fn constant(gasket: &Gasket<T>, level: usize, c: T) -> Self {
        let _ = gasket;
        Self::new(level, vec![c; vertex_count(level)]).expect("length matches")
    }

    pub fn from_fn(gasket: &Gasket<T>, level: usize, f: impl Fn(T, T) -> T) -> Result<Self> {
        gasket.check_level(level)?;
        let values = gasket
            .positions(level)
            .iter()
            .map(|&[x, y]| f(x, y))
            .collect();
        Self::new(level, values)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Values on `V_m \ V_0`.
    pub fn interior(&self) -> &[T] {
        &self.values[3..]
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn min(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::max_value().expect("bounded"), T::min)
    }

    pub fn max(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::min_value().expect("bounded"), T::max)
    }

    /// The restriction to a coarser `V_k` (a prefix in generation order).
    pub fn restrict(&self, level: usize) -> Result<Self> {
        if level > self.level {
            return Err(Error::ScaleTooLarge {
                scale: level,
                level: self.level,
            });
        }
        Self::new(level, self.values[..vertex_count(level)].to_vec())
    }

    /// Vertex quadrature of `F ∘ f` at this function's level.
    pub fn integrate(&self, transform: impl Fn(T) -> T) -> T {
        let q = quadrature(self.level);
        let mapped: Vec<T> = self.values.iter().map(|&v| transform(v)).collect();
        q.integrate(&mapped).expect("length matches")
    }
}

/// A function that can be sampled at any level of a [`Gasket`] and integrated
/// against `μ`.
pub trait GasketFunction<T: Real> {
    /// Value at `vertex` as seen from inside the `level`-cell of rank `cell`.
    /// Continuous functions ignore `cell`.
    fn value_in_cell(&self, gasket: &Gasket<T>, level: usize, cell: usize, vertex: usize) -> T;

    fn label(&self) -> String;

    /// Samples on `V_level`; a vertex shared by two cells takes the value seen
    /// from the lexicographically smaller one.
    fn sample(&self, gasket: &Gasket<T>, level: usize) -> Result<SampledFunction<T>> {
        gasket.check_level(level)?;
        let values = (0..vertex_count(level))
            .map(|i| {
                let owner = gasket.vertex_id(i, level).cell().rank();
                self.value_in_cell(gasket, level, owner, i)
            })
            .collect();
        SampledFunction::new(level, values)
    }

    /// `∫ F(f) dμ` by cellwise quadrature at `level`.
    fn integral(&self, gasket: &Gasket<T>, level: usize, transform: &dyn Fn(T) -> T) -> Result<T> {
        gasket.check_level(level)?;
        Ok(gasket.integrate_cellwise(level, |cell, v| {
            transform(self.value_in_cell(gasket, level, cell, v))
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant<T>(pub T);

impl<T: Real> GasketFunction<T> for Constant<T> {
    fn value_in_cell(&self, _: &Gasket<T>, _: usize, _: usize, _: usize) -> T {
        self.0
    }

    fn label(&self) -> String {
        format!("constant:{}", self.0)
    }
}

/// `f = Σ_k a_k χ_{C_k}` over the `3^N` cells of scale `N`, coefficients in
/// lexicographic cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction<T: Real> {
    scale: usize,
    coefficients: Vec<T>,
}

impl<T: Real> SimpleFunction<T> {
    pub fn new(scale: usize, coefficients: Vec<T>) -> Result<Self> {
        let expected = ipow(3, scale) as usize;
        if coefficients.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coefficients.len(),
            });
        }
        Ok(Self {
            scale,
            coefficients,
        })
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn is_positive(&self) -> bool {
        self.coefficients.iter().all(|&a| a > T::zero())
    }

    /// `∫ F(f) dμ = 3^{-N} Σ_k F(a_k)`, exact.
    pub fn exact_integral(&self, transform: impl Fn(T) -> T) -> T {
        let w = T::one() / T::from_count(self.coefficients.len());
        self.coefficients
            .iter()
            .fold(T::zero(), |acc, &a| acc + w * transform(a))
    }
}

impl<T: Real> GasketFunction<T> for SimpleFunction<T> {
    fn value_in_cell(&self, _: &Gasket<T>, level: usize, cell: usize, _: usize) -> T {
        let ancestor = if level >= self.scale {
            cell / ipow(3, level - self.scale) as usize
        } else {
            // coarser than the partition: take the first sub-cell
            cell * ipow(3, self.scale - level) as usize
        };
        self.coefficients[ancestor]
    }

    fn label(&self) -> String {
        let coeffs: Vec<String> = self.coefficients.iter().map(|a| a.to_string()).collect();
        format!("simple(N={}):{}", self.scale, coeffs.join(","))
    }

    fn integral(&self, gasket: &Gasket<T>, level: usize, transform: &dyn Fn(T) -> T) -> Result<T> {
        gasket.check_level(level)?;
        Ok(self.exact_integral(transform))
    }
}

/// The harmonic function with prescribed values at the three corners,
/// tabulated on `V_m` for the gasket it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFunction<T: Real> {
    boundary: [T; 3],
    values: Vec<T>,
}

impl<T: Real> HarmonicFunction<T> {
    pub fn new(gasket: &Gasket<T>, boundary: [T; 3]) -> Result<Self> {
        let mut values = boundary.to_vec();
        for k in 1..=gasket.max_level() {
            values = extend_eigenfunction(gasket, k, &values, T::zero())?;
        }
        Ok(Self { boundary, values })
    }

    pub fn boundary(&self) -> [T; 3] {
        self.boundary
    }

    /// `∫ h dμ` is the mean of the boundary values.
    pub fn exact_mean(&self) -> T {
        (self.boundary[0] + self.boundary[1] + self.boundary[2]) / T::lit(3.0)
    }
}

impl<T: Real> GasketFunction<T> for HarmonicFunction<T> {
    fn value_in_cell(&self, _: &Gasket<T>, _: usize, _: usize, vertex: usize) -> T {
        self.values[vertex]
    }

    fn label(&self) -> String {
        let [a, b, c] = self.boundary;
        format!("harmonic:{a},{b},{c}")
    }
}

/// A continuous function of the Euclidean coordinates.
pub struct FnFunction<F> {
    label: String,
    f: F,
}

impl<F> FnFunction<F> {
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<T: Real, F: Fn(T, T) -> T> GasketFunction<T> for FnFunction<F> {
    fn value_in_cell(&self, gasket: &Gasket<T>, _: usize, _: usize, vertex: usize) -> T {
        let [x, y] = gasket.position(vertex);
        (self.f)(x, y)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Pointwise sum of two functions.
pub struct Sum<A, B>(pub A, pub B);

impl<T: Real, A: GasketFunction<T>, B: GasketFunction<T>> GasketFunction<T> for Sum<A, B> {
    fn value_in_cell(&self, gasket: &Gasket<T>, level: usize, cell: usize, vertex: usize) -> T {
        self.0.value_in_cell(gasket, level, cell, vertex)
            + self.1.value_in_cell(gasket, level, cell, vertex)
    }

    fn label(&self) -> String {
        format!("{}+{}", self.0.label(), self.1.label())
    }
}

impl<T: Real, G: GasketFunction<T> + ?Sized> GasketFunction<T> for Box<G> {
    fn value_in_cell(&self, gasket: &Gasket<T>, level: usize, cell: usize, vertex: usize) -> T {
        (**self).value_in_cell(gasket, level, cell, vertex)
    }

    fn label(&self) -> String {
        (**self).label()
    }

    fn sample(&self, gasket: &Gasket<T>, level: usize) -> Result<SampledFunction<T>> {
        (**self).sample(gasket, level)
    }

    fn integral(&self, gasket: &Gasket<T>, level: usize, transform: &dyn Fn(T) -> T) -> Result<T> {
        (**self).integral(gasket, level, transform)
    }
}
