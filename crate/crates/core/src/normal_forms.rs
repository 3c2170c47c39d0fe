//! König and Böttcher conjugacies at a fixed point at the origin.
//!
//! Germs are classified by their multiplier, then conjugated to `λz` or
//! `z^n` either by solving the functional equation coefficient by
//! coefficient, or pointwise by the classical iterative limits. The two
//! routes are independent and are cross-checked in the tests.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{compose_trunc, horner, PowerSeries, SeriesError};

/// Angular and radial mesh sizes for the sampled radius checks.
const MESH_ANGULAR: usize = 256;
const MESH_RADIAL: usize = 64;
const MIN_RADIUS: f64 = 1e-8;
const DIVERGENCE_GUARD: f64 = 1e12;
/// Circle samples used for conjugacy residuals.
pub const RESIDUAL_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("origin is not a fixed point (a_0 = {0})")]
    NotAFixedPoint(Complex64),
    #[error("operation requires a {expected} germ, got {found:?}")]
    UnsupportedClass { expected: &'static str, found: GermClass },
    #[error("no valid radius found above {MIN_RADIUS:e}")]
    NoValidRadius,
    #[error("coefficient b_{index} has magnitude {magnitude:e}")]
    DivergentCoefficients { index: usize, magnitude: f64 },
    #[error("iterate {iteration} left the disk of radius {delta} (|z| = {modulus})")]
    EscapedDomain { iteration: usize, modulus: f64, delta: f64 },
    #[error("unit factor left the principal-branch disk at iterate {iteration}")]
    BranchBreakdown { iteration: usize },
    #[error("leading coefficient must be 1, got {0}; rescale first")]
    NotNormalized(Complex64),
    #[error("conjugacies have different normal forms: {0:?} vs {1:?}")]
    IncompatibleNormalForms(NormalForm, NormalForm),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GermClass {
    Attracting,
    Repelling,
    Superattracting,
    Unsupported,
}

/// A power series fixing the origin, together with its classification.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticGerm {
    series: PowerSeries,
    class: GermClass,
    leading_degree: Option<usize>,
}

impl AnalyticGerm {
    pub fn series(&self) -> &PowerSeries {
        &self.series
    }

    pub fn class(&self) -> GermClass {
        self.class
    }

    /// `λ = a_1`, present for attracting and repelling germs.
    pub fn multiplier(&self) -> Option<Complex64> {
        match self.class {
            GermClass::Attracting | GermClass::Repelling => Some(self.series.coeff(1)),
            _ => None,
        }
    }

    /// Local degree `n` of a superattracting germ.
    pub fn degree(&self) -> Option<usize> {
        match self.class {
            GermClass::Superattracting => self.leading_degree,
            _ => None,
        }
    }

    /// `a_n` of a superattracting germ.
    pub fn leading_coefficient(&self) -> Option<Complex64> {
        self.degree().map(|n| self.series.coeff(n))
    }

    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.series.evaluate(z)
    }

    fn require(&self, class: GermClass, expected: &'static str) -> Result<(), NormalFormError> {
        if self.class == class {
            Ok(())
        } else {
            Err(NormalFormError::UnsupportedClass { expected, found: self.class })
        }
    }

    /// Multiplier of an attracting germ, or an error naming the requirement.
    pub(crate) fn attracting_multiplier(&self) -> Result<Complex64, NormalFormError> {
        self.require(GermClass::Attracting, "attracting")?;
        Ok(self.series.coeff(1))
    }

    /// Degree of a superattracting germ whose leading coefficient is exactly 1.
    pub(crate) fn normalized_degree(&self) -> Result<usize, NormalFormError> {
        self.require(GermClass::Superattracting, "superattracting")?;
        let n = self.leading_degree.unwrap_or(0);
        let an = self.series.coeff(n);
        if (an - 1.0).norm() > 1e-14 {
            return Err(NormalFormError::NotNormalized(an));
        }
        Ok(n)
    }

    /// Unit factor `u(z) = f(z) / (a_n z^n)` of a superattracting germ.
    pub fn unit_factor(&self) -> Option<PowerSeries> {
        let n = self.degree()?;
        let an = self.series.coeff(n);
        let coeffs = self.series.coeffs()[n..].iter().map(|&a| a / an).collect();
        PowerSeries::new(coeffs, self.series.radius()).ok()
    }
}

/// Classify the fixed point at the origin.
pub fn classify(f: &PowerSeries) -> Result<AnalyticGerm, NormalFormError> {
    let a0 = f.coeff(0);
    if a0 != Complex64::new(0.0, 0.0) {
        return Err(NormalFormError::NotAFixedPoint(a0));
    }
    let lambda = f.coeff(1);
    let modulus = lambda.norm();
    let leading_degree = f.coeffs().iter().position(|c| c.norm() != 0.0);
    let class = if modulus == 0.0 {
        match leading_degree {
            Some(n) if n >= 2 => GermClass::Superattracting,
            _ => GermClass::Unsupported,
        }
    } else if modulus < 1.0 {
        GermClass::Attracting
    } else if modulus > 1.0 {
        GermClass::Repelling
    } else {
        GermClass::Unsupported
    };
    Ok(AnalyticGerm { series: f.clone(), class, leading_degree })
}

/// Points of a closed disk (origin excluded): `radial` circles × `angular` angles.
pub(crate) fn disk_mesh(radius: f64, inner: f64, radial: usize, angular: usize) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(radial * angular);
    for i in 1..=radial {
        let rho = inner + (radius - inner) * i as f64 / radial as f64;
        for j in 0..angular {
            pts.push(Complex64::from_polar(rho, TAU * j as f64 / angular as f64));
        }
    }
    pts
}

fn halving_search(start: f64, mut accept: impl FnMut(f64) -> bool) -> Result<f64, NormalFormError> {
    let mut delta = start;
    while delta >= MIN_RADIUS {
        if accept(delta) {
            return Ok(delta);
        }
        delta *= 0.5;
    }
    Err(NormalFormError::NoValidRadius)
}

/// Radius `δ` of a disk on which an attracting germ contracts (`|f(z)| < |z|`)
/// and is univalent (`|f'(z) - λ| < |λ|`), checked on a 256×64 mesh.
pub fn domain_radius(germ: &AnalyticGerm) -> Result<f64, NormalFormError> {
    let lambda = germ.attracting_multiplier()?;
    let f = germ.series();
    let df = f.derivative();
    halving_search(0.99 * f.radius(), |delta| {
        disk_mesh(delta, 0.0, MESH_RADIAL, MESH_ANGULAR)
            .iter()
            .all(|&z| f.evaluate(z).norm() < z.norm() && (df.evaluate(z) - lambda).norm() < lambda.norm())
    })
}

/// Validity radius for the König construction: `domain_radius` of the germ,
/// or of its inverse when the germ is repelling.
pub fn koenig_radius(germ: &AnalyticGerm) -> Result<f64, NormalFormError> {
    match germ.class() {
        GermClass::Attracting => domain_radius(germ),
        GermClass::Repelling => domain_radius(&classify(&germ.series().reverse()?)?),
        found => Err(NormalFormError::UnsupportedClass { expected: "attracting or repelling", found }),
    }
}

/// Radii of the Böttcher construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoettcherRadii {
    /// `δ₁`: on the disk of radius `2δ₁` the unit factor is admissible.
    pub inner: f64,
    /// `δ < δ₁` with `f⁻¹(Δ_δ) ⊂ Δ_{δ₁}`.
    pub delta: f64,
}

/// Radii for a superattracting germ.
///
/// On a mesh of the disk of radius `2δ₁` the unit factor `u` must satisfy
/// `u ≠ 0`, `|u|^{-1/n} ≥ 1/2`, `|u - 1| < 1` (so the principal `n`-th root is
/// continuous), and `z u(z)^{1/n}` must have derivative within 1 of 1, which
/// makes it univalent and `f` a degree-`n` covering of the punctured disk.
/// `δ` is then 0.99 times the smaller of `δ₁` and the minimum of `|f|` over
/// the annulus `δ₁ ≤ |z| ≤ 2δ₁`.
pub fn boettcher_radius(germ: &AnalyticGerm) -> Result<BoettcherRadii, NormalFormError> {
    germ.require(GermClass::Superattracting, "superattracting")?;
    let n = germ.degree().unwrap_or(2);
    let nf = n as f64;
    let u = germ.unit_factor().ok_or(NormalFormError::NoValidRadius)?;
    let du = u.derivative();
    let f = germ.series();
    let start = 0.99 * (0.5f64).min(f.radius() / 2.0);
    let inner = halving_search(start, |d1| {
        disk_mesh(2.0 * d1, 0.0, MESH_RADIAL, MESH_ANGULAR).iter().all(|&z| {
            let uz = u.evaluate(z);
            if uz.norm() == 0.0 || uz.norm() > 2f64.powi(n as i32) || (uz - 1.0).norm() >= 1.0 {
                return false;
            }
            let root = uz.powf(1.0 / nf);
            let dg = root * (1.0 + z * du.evaluate(z) / (nf * uz));
            (dg - 1.0).norm() < 1.0
        })
    })?;
    let min_image = disk_mesh(2.0 * inner, inner, MESH_RADIAL, MESH_ANGULAR)
        .iter()
        .chain(std::iter::once(&Complex64::new(inner, 0.0)))
        .map(|&z| f.evaluate(z).norm())
        .fold(f64::INFINITY, f64::min);
    let delta = 0.99 * inner.min(min_image);
    if delta < MIN_RADIUS {
        return Err(NormalFormError::NoValidRadius);
    }
    Ok(BoettcherRadii { inner, delta })
}

/// The model map a germ is conjugated to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalForm {
    /// `z ↦ λz`
    Linear(Complex64),
    /// `z ↦ z^n`
    Power(usize),
}

impl NormalForm {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            NormalForm::Linear(lambda) => lambda * z,
            NormalForm::Power(n) => z.powu(n as u32),
        }
    }

    fn compatible(&self, other: &Self) -> bool {
        match (self, other) {
            (NormalForm::Linear(a), NormalForm::Linear(b)) => (a - b).norm() <= 1e-12 * a.norm().max(1.0),
            (NormalForm::Power(a), NormalForm::Power(b)) => a == b,
            _ => false,
        }
    }
}

/// A local conjugacy `φ` with `f ∘ φ = φ ∘ N` for the normal form `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyResult {
    pub phi: PowerSeries,
    pub phi_inverse: PowerSeries,
    pub normal_form: NormalForm,
    pub delta: f64,
    pub residual: f64,
    /// Böttcher rescale root `b` with `b^{n-1} = a_n` (principal branch); 1 for König.
    pub scale: Complex64,
}

impl ConjugacyResult {
    /// The conjugacy `z ↦ φ(cz)`, which solves the same functional equation
    /// whenever `c` commutes with the normal form.
    pub fn rescaled(&self, germ: &AnalyticGerm, c: Complex64) -> Result<Self, NormalFormError> {
        let phi = self.phi.precompose_linear(c);
        let phi_inverse = self.phi_inverse.scale(c.inv());
        let delta = self.delta / c.norm().max(1.0);
        let residual = conjugacy_residual(germ.series(), &phi, self.normal_form, delta / 4.0);
        Ok(Self { phi, phi_inverse, residual, delta, ..self.clone() })
    }
}

/// `sup |f(φ(z)) - φ(N(z))|` over `RESIDUAL_SAMPLES` points of the circle `|z| = radius`.
pub fn conjugacy_residual(f: &PowerSeries, phi: &PowerSeries, normal_form: NormalForm, radius: f64) -> f64 {
    (0..RESIDUAL_SAMPLES)
        .map(|k| {
            let z = Complex64::from_polar(radius, TAU * k as f64 / RESIDUAL_SAMPLES as f64);
            (f.evaluate(phi.evaluate(z)) - phi.evaluate(normal_form.apply(z))).norm()
        })
        .fold(0.0, f64::max)
}

fn padded(f: &PowerSeries, order: usize) -> Vec<Complex64> {
    (0..=order).map(|j| f.coeff(j)).collect()
}

/// Linearizing coefficients for an attracting germ: `b_1 = 1`,
/// `b_j (λ^j - λ) = [z^j] Σ_{i≥2} a_i φ(z)^i`. The divergence guard looks at
/// `|b_j| scale^{j-1}`, the size of the term on the disk of radius `scale`.
fn koenig_coefficients(f: &PowerSeries, order: usize, scale: f64) -> Result<Vec<Complex64>, NormalFormError> {
    let a = padded(f, order);
    let lambda = a[1];
    let mut b = vec![Complex64::new(0.0, 0.0); order + 1];
    if order >= 1 {
        b[1] = Complex64::new(1.0, 0.0);
    }
    let mut lambda_pow = lambda;
    for j in 2..=order {
        lambda_pow *= lambda;
        // b_j is still zero here, so the i = 1 term drops out.
        let c = compose_trunc(&a[..=j], &b[..=j], j)[j];
        let bj = c / (lambda_pow - lambda);
        let scaled = bj.norm() * scale.powi(j as i32 - 1);
        if scaled.is_nan() || scaled > DIVERGENCE_GUARD {
            return Err(NormalFormError::DivergentCoefficients { index: j, magnitude: bj.norm() });
        }
        b[j] = bj;
    }
    Ok(b)
}

/// König linearization `f(φ(z)) = φ(λz)` with `φ'(0) = 1`.
///
/// Repelling germs are linearized through their inverse: the conjugacy of
/// `f⁻¹` to `z/λ` is also a conjugacy of `f` to `λz`.
///
/// `δ` starts at [`domain_radius`] and is halved until it is at most half the
/// root-test radius of `φ`, so that the truncated series represents `φ` on
/// `Δ_δ`.
pub fn koenig_series(germ: &AnalyticGerm, order: usize) -> Result<ConjugacyResult, NormalFormError> {
    let lambda = match germ.class() {
        GermClass::Attracting | GermClass::Repelling => germ.series().coeff(1),
        found => return Err(NormalFormError::UnsupportedClass { expected: "attracting or repelling", found }),
    };
    let contracting = match germ.class() {
        GermClass::Attracting => germ.series().with_order(order),
        _ => germ.series().with_order(order).reverse()?,
    };
    let mut delta = domain_radius(&classify(&contracting)?)?;
    let b = koenig_coefficients(&contracting, order, delta)?;
    let rho = root_test_radius(&b);
    while delta > rho / 2.0 {
        delta /= 2.0;
    }
    let phi = PowerSeries::new(b, delta)?;
    let phi_inverse = phi.reverse()?.with_radius(delta)?;
    let normal_form = NormalForm::Linear(lambda);
    let residual = conjugacy_residual(germ.series(), &phi, normal_form, delta / 4.0);
    Ok(ConjugacyResult { phi, phi_inverse, normal_form, delta, residual, scale: Complex64::new(1.0, 0.0) })
}

/// Root-test estimate `min |b_j|^{-1/j}` over the upper half of the orders
/// of the convergence radius of a series; infinite for polynomials of
/// degree at most `N/2`.
fn root_test_radius(b: &[Complex64]) -> f64 {
    let order = b.len() - 1;
    (order.div_ceil(2).max(2)..=order)
        .filter_map(|j| {
            let m = b[j].norm();
            (m > 0.0).then(|| m.powf(-1.0 / j as f64))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Pointwise inverse conjugacy `ψ(z) ≈ f^k(z) / λ^k` for an attracting germ.
pub fn koenig_iterative(germ: &AnalyticGerm, z: Complex64, iterations: usize) -> Result<Complex64, NormalFormError> {
    let delta = domain_radius(germ)?;
    koenig_iterative_within(germ, z, iterations, delta)
}

/// [`koenig_iterative`] with a precomputed validity radius.
pub fn koenig_iterative_within(
    germ: &AnalyticGerm,
    z: Complex64,
    iterations: usize,
    delta: f64,
) -> Result<Complex64, NormalFormError> {
    let lambda = germ.attracting_multiplier()?;
    if z.norm() > delta {
        return Err(NormalFormError::EscapedDomain { iteration: 0, modulus: z.norm(), delta });
    }
    let mut orbit = z;
    let mut lambda_pow = Complex64::new(1.0, 0.0);
    let mut estimate = z;
    for k in 1..=iterations {
        orbit = germ.evaluate(orbit);
        if orbit.norm() > delta {
            return Err(NormalFormError::EscapedDomain { iteration: k, modulus: orbit.norm(), delta });
        }
        lambda_pow *= lambda;
        let next = orbit / lambda_pow;
        let step = (next - estimate).norm();
        estimate = next;
        if step < 1e-14 || orbit.norm() == 0.0 {
            break;
        }
    }
    Ok(estimate)
}

/// Coefficients of `φ = z + ...` solving `f(φ(z)) = target(φ)` for a germ with
/// `a_n = 1`. The `z^{n+m-1}` coefficient of `f ∘ φ` is `n b_m` plus terms in
/// lower coefficients, so each `b_m` is determined linearly.
fn leading_power_coefficients(
    f: &PowerSeries,
    n: usize,
    order: usize,
    target: impl Fn(&[Complex64], usize) -> Complex64,
) -> Vec<Complex64> {
    let width = n + order - 1;
    let a = padded(f, width);
    let mut b = vec![Complex64::new(0.0, 0.0); width + 1];
    if order >= 1 {
        b[1] = Complex64::new(1.0, 0.0);
    }
    for m in 2..=order {
        let degree = n + m - 1;
        let lhs = compose_trunc(&a[..=degree], &b[..=degree], degree)[degree];
        b[m] = (target(&b, degree) - lhs) / n as f64;
    }
    b.truncate(order + 1);
    b
}

/// Böttcher conjugacy `f(φ(z)) = φ(z^n)`.
///
/// The germ is first conjugated by `z ↦ bz` with `b^{n-1} = a_n` so that its
/// leading coefficient becomes 1; the returned `φ` is in the original
/// coordinate, so `φ'(0) = 1/b`.
pub fn boettcher_series(germ: &AnalyticGerm, order: usize) -> Result<ConjugacyResult, NormalFormError> {
    germ.require(GermClass::Superattracting, "superattracting")?;
    let n = germ.degree().unwrap_or(2);
    let an = germ.series().coeff(n);
    let scale = an.powf(1.0 / (n as f64 - 1.0));
    let normalized = normalize_leading(germ.series(), scale)?;
    let b = leading_power_coefficients(&normalized, n, order, |b, degree| {
        if degree % n == 0 {
            b[degree / n]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let radii = boettcher_radius(germ)?;
    let phi = PowerSeries::new(b, radii.delta)?.scale(scale.inv());
    let phi_inverse = phi.reverse()?.with_radius(radii.delta)?;
    let normal_form = NormalForm::Power(n);
    let residual = conjugacy_residual(germ.series(), &phi, normal_form, radii.delta / 4.0);
    Ok(ConjugacyResult { phi, phi_inverse, normal_form, delta: radii.delta, residual, scale })
}

/// `w ↦ b f(w / b)`; with `b^{n-1} = a_n` the leading coefficient becomes 1.
pub fn normalize_leading(f: &PowerSeries, b: Complex64) -> Result<PowerSeries, NormalFormError> {
    Ok(f.precompose_linear(b.inv()).scale(b).with_radius(f.radius() * b.norm())?)
}

/// The lift `h(z) = z + ...` with `f(h(z)) = z^n`, for a germ with `a_n = 1`.
pub fn covering_lift(germ: &AnalyticGerm, order: usize) -> Result<PowerSeries, NormalFormError> {
    let n = germ.normalized_degree()?;
    let b = leading_power_coefficients(germ.series(), n, order, |_, degree| {
        if degree == n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(PowerSeries::new(b, germ.series().radius())?)
}

/// Pointwise inverse Böttcher coordinate `ψ(z) = lim (f^k(z))^{1/n^k}` for a
/// germ with `a_n = 1`, tracked through the unit factor so that only
/// principal roots of values near 1 are taken.
pub fn boettcher_iterative(germ: &AnalyticGerm, z: Complex64, iterations: usize) -> Result<Complex64, NormalFormError> {
    germ.normalized_degree()?;
    let delta = boettcher_radius(germ)?.delta;
    boettcher_iterative_within(germ, z, iterations, delta)
}

/// [`boettcher_iterative`] with a precomputed validity radius.
pub fn boettcher_iterative_within(
    germ: &AnalyticGerm,
    z: Complex64,
    iterations: usize,
    delta: f64,
) -> Result<Complex64, NormalFormError> {
    let n = germ.normalized_degree()?;
    if z.norm() == 0.0 {
        return Ok(z);
    }
    if z.norm() > delta {
        return Err(NormalFormError::EscapedDomain { iteration: 0, modulus: z.norm(), delta });
    }
    let unit = &germ.series().coeffs()[n..];
    let mut orbit = z;
    let mut estimate = z;
    let mut exponent = 1.0;
    for k in 0..iterations {
        let u = horner(unit, orbit);
        if (u - 1.0).norm() > 0.5 {
            return Err(NormalFormError::BranchBreakdown { iteration: k });
        }
        exponent /= n as f64;
        let next = estimate * u.powf(exponent);
        orbit = germ.evaluate(orbit);
        if orbit.norm() > delta {
            return Err(NormalFormError::EscapedDomain { iteration: k + 1, modulus: orbit.norm(), delta });
        }
        let step = (next - estimate).norm();
        estimate = next;
        if step < 1e-14 || orbit.norm() == 0.0 {
            break;
        }
    }
    Ok(estimate)
}

/// Outcome of comparing two conjugacies through `Φ = φ₂⁻¹ ∘ φ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    /// `Φ(z) = c z` (linear normal form).
    Constant(Complex64),
    /// `Φ(z) = a z` with `a^{n-1} = 1` (power normal form).
    RootOfUnity(Complex64),
    Mismatch {
        leading: Complex64,
        tail: f64,
    },
}

const UNIQUENESS_TOL: f64 = 1e-8;

/// Compares two conjugacies through `Φ = φ₂⁻¹ ∘ φ₁`.
///
/// Coefficients of `Φ` beyond the linear term are measured on the common
/// validity disk, `|Φ_j| δ^{j-1}`; raw high-order coefficients of a composed
/// series carry roundoff proportional to the growth of `φ`'s coefficients.
pub fn uniqueness_check(r1: &ConjugacyResult, r2: &ConjugacyResult) -> Result<Uniqueness, NormalFormError> {
    if !r1.normal_form.compatible(&r2.normal_form) {
        return Err(NormalFormError::IncompatibleNormalForms(r1.normal_form, r2.normal_form));
    }
    let transition = r2.phi_inverse.compose(&r1.phi)?;
    let leading = transition.coeff(1);
    let scale = r1.delta.min(r2.delta);
    let tail = transition
        .coeffs()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != 1)
        .map(|(j, c)| c.norm() * scale.powi(j as i32 - 1))
        .fold(0.0, f64::max);
    if tail > UNIQUENESS_TOL {
        return Ok(Uniqueness::Mismatch { leading, tail });
    }
    Ok(match r1.normal_form {
        NormalForm::Linear(_) => Uniqueness::Constant(leading),
        NormalForm::Power(n) => {
            if (leading.powu(n as u32 - 1) - 1.0).norm() <= UNIQUENESS_TOL {
                Uniqueness::RootOfUnity(leading)
            } else {
                Uniqueness::Mismatch { leading, tail }
            }
        }
    })
}
