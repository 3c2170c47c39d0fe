//! Truncated power series over the complex numbers.
//!
//! A [`PowerSeries`] stores `a_0..=a_N` together with a reference radius
//! inside which evaluation is considered meaningful. Every operation is a
//! pure function returning a new series; truncation order of a result is
//! the minimum of the orders of its inputs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default truncation order for operation chains.
pub const DEFAULT_ORDER: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("a series needs at least one coefficient")]
    Empty,
    #[error("coefficient a_{index} is not finite")]
    NonFinite { index: usize },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("declared order {declared} does not match {found} coefficients")]
    OrderMismatch { declared: usize, found: usize },
    #[error("inner series has non-zero constant term {0}")]
    NonZeroConstantTerm(Complex64),
    #[error("germ is not invertible (a_0 = {a0}, a_1 = {a1})")]
    NonInvertibleGerm { a0: Complex64, a1: Complex64 },
}

/// Truncated complex power series `a_0 + a_1 z + ... + a_N z^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesDoc", into = "SeriesDoc")]
pub struct PowerSeries {
    coeffs: Vec<Complex64>,
    radius: f64,
}

/// Result of evaluating a series, with the soft radius diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub outside_radius: bool,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<Complex64>, radius: f64) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some(index) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SeriesError::InvalidRadius(radius));
        }
        Ok(Self { coeffs, radius })
    }

    /// Series with real coefficients; convenient for tests and fixtures.
    pub fn from_real(coeffs: &[f64], radius: f64) -> Result<Self, SeriesError> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(), radius)
    }

    /// Polynomial given sparsely as `(degree, coefficient)` pairs, padded to `order`.
    pub fn from_terms(terms: &[(usize, Complex64)], order: usize, radius: f64) -> Result<Self, SeriesError> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        for &(degree, c) in terms {
            if degree <= order {
                coeffs[degree] += c;
            }
        }
        Self::new(coeffs, radius)
    }

    pub fn zero(order: usize, radius: f64) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); order + 1], radius }
    }

    /// The identity series `z`.
    pub fn identity(order: usize, radius: f64) -> Self {
        Self::monomial(Complex64::new(1.0, 0.0), 1, order, radius)
    }

    pub fn monomial(coeff: Complex64, degree: usize, order: usize, radius: f64) -> Self {
        let mut s = Self::zero(order, radius);
        if degree <= order {
            s.coeffs[degree] = coeff;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^j`; zero beyond the truncation order.
    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self, SeriesError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SeriesError::InvalidRadius(radius));
        }
        self.radius = radius;
        Ok(self)
    }

    /// Truncate (or zero-pad) to the given order.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::new(0.0, 0.0));
        Self { coeffs, radius: self.radius }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| c * k).collect(), radius: self.radius }
    }

    /// `f(k z)`. The radius shrinks by `|k|` so that evaluation stays meaningful.
    pub fn precompose_linear(&self, k: Complex64) -> Self {
        let mut p = Complex64::new(1.0, 0.0);
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let out = c * p;
                p *= k;
                out
            })
            .collect();
        let radius = if k.norm() > 0.0 { self.radius / k.norm() } else { self.radius };
        Self { coeffs, radius }
    }

    /// Formal derivative, truncated to one order less (order 0 stays order 0).
    pub fn derivative(&self) -> Self {
        let coeffs: Vec<Complex64> = if self.order() == 0 {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            self.coeffs.iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect()
        };
        Self { coeffs, radius: self.radius }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    /// Evaluate and report whether `z` lies outside the reference radius.
    pub fn evaluate_checked(&self, z: Complex64) -> Evaluation {
        Evaluation { value: self.evaluate(z), outside_radius: z.norm() > self.radius }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|j| self.coeffs[j] + other.coeffs[j]).collect();
        Self { coeffs, radius: self.radius.min(other.radius) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Cauchy product truncated to the smaller order.
    pub fn multiply(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self { coeffs: mul_trunc(&self.coeffs, &other.coeffs, n), radius: self.radius.min(other.radius) }
    }

    /// `self ∘ inner`, truncated to the smaller order. `inner(0)` must be exactly zero.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if inner.coeffs[0] != Complex64::new(0.0, 0.0) {
            return Err(SeriesError::NonZeroConstantTerm(inner.coeffs[0]));
        }
        let n = self.order().min(inner.order());
        Ok(Self { coeffs: compose_trunc(&self.coeffs, &inner.coeffs, n), radius: self.radius.min(inner.radius) })
    }

    /// Compositional inverse `g` with `f ∘ g = g ∘ f = z` up to the truncation order.
    pub fn reverse(&self) -> Result<Self, SeriesError> {
        let a0 = self.coeffs[0];
        let a1 = self.coeff(1);
        if a0 != Complex64::new(0.0, 0.0) || a1 == Complex64::new(0.0, 0.0) {
            return Err(SeriesError::NonInvertibleGerm { a0, a1 });
        }
        let n = self.order();
        let mut g = vec![Complex64::new(0.0, 0.0); n + 1];
        g[1] = a1.inv();
        // The z^m coefficient of f∘g depends on g_m only through a_1 g_m.
        for m in 2..=n {
            let c = compose_trunc(&self.coeffs[..=m], &g[..=m], m)[m];
            g[m] = -c / a1;
        }
        Ok(Self { coeffs: g, radius: self.radius * a1.norm().min(1.0) })
    }

    /// Largest coefficientwise distance, comparing up to the larger order.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let n = self.order().max(other.order());
        (0..=n).map(|j| (self.coeff(j) - other.coeff(j)).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Cauchy product of `a` and `b`, keeping degrees `0..=n`.
pub(crate) fn mul_trunc(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (i, &ai) in a.iter().enumerate().take(n + 1) {
        if ai == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Horner-style composition `f ∘ g` keeping degrees `0..=n`; assumes `g[0] = 0`.
pub(crate) fn compose_trunc(f: &[Complex64], g: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); n + 1];
    for &a in f.iter().rev() {
        acc = mul_trunc(&acc, g, n);
        acc[0] += a;
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct SeriesDoc {
    order: usize,
    radius: f64,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<SeriesDoc> for PowerSeries {
    type Error = SeriesError;

    fn try_from(doc: SeriesDoc) -> Result<Self, Self::Error> {
        if doc.coeffs.len() != doc.order + 1 {
            return Err(SeriesError::OrderMismatch { declared: doc.order, found: doc.coeffs.len() });
        }
        Self::new(doc.coeffs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(), doc.radius)
    }
}

impl From<PowerSeries> for SeriesDoc {
    fn from(s: PowerSeries) -> Self {
        Self { order: s.order(), radius: s.radius, coeffs: s.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}
