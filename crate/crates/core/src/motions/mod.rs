//! Holomorphic motions of finite sets.
//!
//! A motion is sampled as a table `h[c][z]` over a parameter grid made of
//! the origin plus concentric circles. [`verify_motion`] checks the three
//! axioms quantitatively: identity at `c = 0`, injectivity in `z`, and
//! holomorphy in `c` measured by the negative-frequency energy of `c ↦ h(c,z)`
//! on each parameter circle.
//!
//! [`BoundaryMotion`] is the two-circle motion used by both normal-form
//! constructions: the identity on one circle and `z ψ(s c z)` on the other.

mod beltrami;
mod extension;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal_forms::{covering_lift, AnalyticGerm, NormalFormError};
use crate::series::{PowerSeries, SeriesError};

pub use beltrami::{dilatation_from_k, estimate_dilatation, write_csv, BeltramiEstimate, DEGENERATE_DERIVATIVE};
pub use extension::{extend_motion, BoundaryExtension, ExtensionProfile, GridMap, LogPolarMesh};

/// Minimum samples on a parameter circle for the holomorphy test.
pub const MIN_CIRCLE_SAMPLES: usize = 64;
/// Threshold on the negative-frequency energy fraction.
pub const HOLOMORPHY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("parameter circle {circle} has {found} samples, need at least {MIN_CIRCLE_SAMPLES}")]
    InsufficientSampling { circle: usize, found: usize },
    #[error("parameter grid must contain c = 0 and at least one circle")]
    MissingParameters,
    #[error("motion table shape does not match its grid and base points")]
    ShapeMismatch,
    #[error("invalid radius: {0}")]
    InvalidRadius(String),
    #[error("images cross at c = {c}, z = {z}: |h| = {modulus}, bound {bound}")]
    NonCrossingViolated { c: Complex64, z: Complex64, modulus: f64, bound: f64 },
    #[error("extension folds on mesh cell ({radial}, {angular})")]
    NotInjectiveOnMesh { radial: usize, angular: usize },
    #[error("degenerate annulus: inner {inner}, outer {outer}")]
    DegenerateAnnulus { inner: f64, outer: f64 },
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Parameter samples: the origin followed by `circles.len()` circles of
/// `samples` equally spaced points each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub radius: f64,
    pub circles: Vec<f64>,
    pub samples: usize,
}

impl ParamGrid {
    /// `count` circles at radii `radius * i / (count + 1)`.
    pub fn uniform(radius: f64, count: usize, samples: usize) -> Self {
        let circles = (1..=count).map(|i| radius * i as f64 / (count + 1) as f64).collect();
        Self { radius, circles, samples }
    }

    pub fn len(&self) -> usize {
        1 + self.circles.len() * self.samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(self.len());
        pts.push(Complex64::new(0.0, 0.0));
        for &rho in &self.circles {
            pts.extend((0..self.samples).map(|k| Complex64::from_polar(rho, TAU * k as f64 / self.samples as f64)));
        }
        pts
    }

    /// Index range of circle `i` within [`ParamGrid::points`].
    fn circle_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = 1 + i * self.samples;
        start..start + self.samples
    }
}

/// A holomorphic motion sampled on a finite set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    #[serde(rename = "points")]
    pub base_points: Vec<Complex64>,
    #[serde(rename = "grid")]
    pub param_grid: ParamGrid,
    /// `values[c][z]`, indexed like `param_grid.points()` and `base_points`.
    pub values: Vec<Vec<Complex64>>,
}

impl MotionSample {
    pub fn tabulate<F>(base_points: Vec<Complex64>, param_grid: ParamGrid, h: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        let values = param_grid.points().par_iter().map(|&c| base_points.iter().map(|&z| h(c, z)).collect()).collect();
        Self { base_points, param_grid, values }
    }

    pub fn param_radius(&self) -> f64 {
        self.param_grid.radius
    }
}

/// Quantitative report on the three motion axioms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionReport {
    /// `max |h(0,z) - z|`; must be exactly 0.
    pub identity_defect: f64,
    /// Minimum over `c` of the minimum pairwise distance of `h(c, E)`.
    pub min_separation: f64,
    /// Largest negative-frequency energy fraction over base points and circles.
    pub holomorphy_defect: f64,
    pub identity_ok: bool,
    pub injective_ok: bool,
    pub holomorphic_ok: bool,
}

impl MotionReport {
    pub fn passed(&self) -> bool {
        self.identity_ok && self.injective_ok && self.holomorphic_ok
    }
}

pub fn verify_motion(sample: &MotionSample) -> Result<MotionReport, MotionError> {
    let grid = &sample.param_grid;
    if grid.circles.is_empty() {
        return Err(MotionError::MissingParameters);
    }
    if grid.samples < MIN_CIRCLE_SAMPLES {
        return Err(MotionError::InsufficientSampling { circle: 0, found: grid.samples });
    }
    let npts = sample.base_points.len();
    if sample.values.len() != grid.len() || sample.values.iter().any(|row| row.len() != npts) {
        return Err(MotionError::ShapeMismatch);
    }

    let identity_defect =
        sample.values[0].iter().zip(&sample.base_points).map(|(h, z)| (h - z).norm()).fold(0.0, f64::max);

    let min_separation =
        sample.values.par_iter().map(|row| min_pairwise_distance(row)).reduce(|| f64::INFINITY, f64::min);

    let twiddles = dft_twiddles(grid.samples);
    let holomorphy_defect = (0..npts)
        .into_par_iter()
        .map(|iz| {
            (0..grid.circles.len())
                .map(|ic| {
                    let series: Vec<Complex64> = grid.circle_range(ic).map(|ip| sample.values[ip][iz]).collect();
                    negative_energy_fraction(&series, &twiddles)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    Ok(MotionReport {
        identity_defect,
        min_separation,
        holomorphy_defect,
        identity_ok: identity_defect == 0.0,
        injective_ok: min_separation > 0.0,
        holomorphic_ok: holomorphy_defect <= HOLOMORPHY_TOL,
    })
}

fn min_pairwise_distance(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min((a - b).norm_sqr());
        }
    }
    best.sqrt()
}

fn dft_twiddles(m: usize) -> Vec<Complex64> {
    (0..m).map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / m as f64)).collect()
}

/// Fraction of the discrete Fourier energy carried by negative frequencies
/// `m ∈ (M/2, M)`. Zero when the total energy is zero.
fn negative_energy_fraction(values: &[Complex64], twiddles: &[Complex64]) -> f64 {
    let m = values.len();
    if values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut negative = 0.0;
    for freq in 0..m {
        let coeff: Complex64 = values.iter().enumerate().map(|(k, v)| v * twiddles[(freq * k) % m]).sum();
        let energy = coeff.norm_sqr();
        total += energy;
        if 2 * freq > m {
            negative += energy;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        negative / total
    }
}

/// Which boundary circle of a [`BoundaryMotion`] moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MovingCircle {
    Inner,
    Outer,
}

/// Two-circle motion: identity on one circle, `z ψ(s c z)` on the other.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMotion {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub param_radius: f64,
    pub moving: MovingCircle,
    /// Unit factor `ψ` with `ψ(0) = 1`.
    pub psi: PowerSeries,
    /// `s` in `z ψ(s c z)`.
    pub arg_scale: f64,
}

impl BoundaryMotion {
    /// The König boundary motion: identity on `S_r = {|z| = r}` and
    /// `z ψ_r(δ c z / r)` on `T_r = {|z| = |λ| r}`, where `z ψ_r(z) = f(z/λ)`.
    pub fn koenig(germ: &AnalyticGerm, r: f64, delta: f64) -> Result<Self, MotionError> {
        let lambda = germ
            .multiplier()
            .filter(|l| l.norm() < 1.0)
            .ok_or(NormalFormError::UnsupportedClass { expected: "attracting", found: germ.class() })?;
        if !(r > 0.0 && r <= delta) {
            return Err(MotionError::InvalidRadius(format!("need 0 < r <= delta, got r = {r}, delta = {delta}")));
        }
        let f = germ.series();
        let order = f.order().max(2);
        let mut lambda_pow = Complex64::new(1.0, 0.0);
        let coeffs = (0..order)
            .map(|j| {
                lambda_pow *= lambda;
                f.coeff(j + 1) / lambda_pow
            })
            .collect();
        Ok(Self {
            inner_radius: lambda.norm() * r,
            outer_radius: r,
            param_radius: 1.0,
            moving: MovingCircle::Inner,
            psi: PowerSeries::new(coeffs, delta * lambda.norm())?,
            arg_scale: delta / r,
        })
    }

    /// The Böttcher boundary motion: identity on `S_r = {|z| = r}` and
    /// `z ψ(c z / r^{1/n})` on `T_r = {|z| = r^{1/n}}`, where `z ψ(z)` is the
    /// covering lift with `f(zψ(z)) = z^n`. The lift lives on the disk of
    /// radius `δ^{1/n}`, which is therefore the parameter radius.
    pub fn boettcher(germ: &AnalyticGerm, r: f64, delta: f64, order: usize) -> Result<Self, MotionError> {
        let n = germ.degree().unwrap_or(0);
        let bound = 0.5f64.powf(n as f64 / (n as f64 - 1.0)).min(delta.powi(n as i32));
        if !(r > 0.0 && r <= bound * (1.0 + 1e-12)) {
            return Err(MotionError::InvalidRadius(format!(
                "need 0 < r <= min((1/2)^(n/(n-1)), delta^n) = {bound}, got {r}"
            )));
        }
        Self::boettcher_unchecked(germ, r, delta, order)
    }

    pub(crate) fn boettcher_unchecked(
        germ: &AnalyticGerm,
        r: f64,
        delta: f64,
        order: usize,
    ) -> Result<Self, MotionError> {
        let lift = covering_lift(germ, order)?;
        let n = germ.degree().unwrap_or(2) as f64;
        let root = r.powf(1.0 / n);
        let psi = PowerSeries::new(lift.coeffs()[1..].to_vec(), delta.powf(1.0 / n))?;
        Ok(Self {
            inner_radius: r,
            outer_radius: root,
            param_radius: delta.powf(1.0 / n),
            moving: MovingCircle::Outer,
            psi,
            arg_scale: 1.0 / root,
        })
    }

    /// Value of the motion at parameter `c` on the moving circle.
    pub fn moving_value(&self, c: Complex64, z: Complex64) -> Complex64 {
        z * self.psi.evaluate(c * z * self.arg_scale)
    }

    /// `h(c, z)` for `z` on either boundary circle.
    pub fn eval(&self, c: Complex64, z: Complex64, on_moving: bool) -> Complex64 {
        if on_moving {
            self.moving_value(c, z)
        } else {
            z
        }
    }

    fn moving_radius(&self) -> f64 {
        match self.moving {
            MovingCircle::Inner => self.inner_radius,
            MovingCircle::Outer => self.outer_radius,
        }
    }

    fn fixed_radius(&self) -> f64 {
        match self.moving {
            MovingCircle::Inner => self.outer_radius,
            MovingCircle::Outer => self.inner_radius,
        }
    }

    /// Tabulate over `E = S ∪ T` with `points` samples per circle; the fixed
    /// circle comes first.
    pub fn sample(&self, grid: &ParamGrid, points: usize) -> MotionSample {
        let circle = |rho: f64| (0..points).map(move |k| Complex64::from_polar(rho, TAU * k as f64 / points as f64));
        let base: Vec<Complex64> = circle(self.fixed_radius()).chain(circle(self.moving_radius())).collect();
        let split = points;
        let values = grid
            .points()
            .par_iter()
            .map(|&c| base.iter().enumerate().map(|(i, &z)| self.eval(c, z, i >= split)).collect())
            .collect();
        MotionSample { base_points: base, param_grid: grid.clone(), values }
    }

    /// Separation of the moving circle's image from the fixed circle over a
    /// sample: `r - max|h|` when the inner circle moves, `min|h| - r` when the
    /// outer one does.
    pub fn crossing_margin(&self, sample: &MotionSample) -> CrossingMargin {
        let points = sample.base_points.len() / 2;
        let bound = self.fixed_radius();
        let cs = sample.param_grid.points();
        let mut worst: Option<(f64, Complex64, Complex64, f64)> = None;
        for (ic, row) in sample.values.iter().enumerate() {
            for (iz, h) in row.iter().enumerate().skip(points) {
                let modulus = h.norm();
                let margin = match self.moving {
                    MovingCircle::Inner => bound - modulus,
                    MovingCircle::Outer => modulus - bound,
                };
                if worst.is_none_or(|w| margin < w.0) {
                    worst = Some((margin, cs[ic], sample.base_points[iz], modulus));
                }
            }
        }
        let (margin, c, z, modulus) = worst.unwrap_or((f64::INFINITY, Complex64::default(), Complex64::default(), 0.0));
        CrossingMargin { bound, margin, extreme_modulus: modulus, worst_c: c, worst_z: z }
    }
}

/// Non-crossing diagnostic of a boundary motion sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingMargin {
    /// Radius of the fixed circle.
    pub bound: f64,
    /// Positive when the moving image stays on its own side of the fixed circle.
    pub margin: f64,
    /// `|h|` at the worst sample.
    pub extreme_modulus: f64,
    pub worst_c: Complex64,
    pub worst_z: Complex64,
}

impl CrossingMargin {
    fn check(self) -> Result<Self, MotionError> {
        if self.margin > 0.0 {
            Ok(self)
        } else {
            Err(MotionError::NonCrossingViolated {
                c: self.worst_c,
                z: self.worst_z,
                modulus: self.extreme_modulus,
                bound: self.bound,
            })
        }
    }
}

/// Sample the König motion and check `|h(c,z)| < r` on `T_r`.
pub fn build_koenig_motion(
    germ: &AnalyticGerm,
    r: f64,
    delta: f64,
    grid: &ParamGrid,
    points: usize,
) -> Result<(MotionSample, CrossingMargin), MotionError> {
    let motion = BoundaryMotion::koenig(germ, r, delta)?;
    let sample = motion.sample(grid, points);
    let margin = motion.crossing_margin(&sample).check()?;
    Ok((sample, margin))
}

/// Sample the Böttcher motion and check `|h(c,z)| > r` on `T_r`.
pub fn build_boettcher_motion(
    germ: &AnalyticGerm,
    r: f64,
    delta: f64,
    grid: &ParamGrid,
    points: usize,
    order: usize,
) -> Result<(MotionSample, CrossingMargin), MotionError> {
    let motion = BoundaryMotion::boettcher(germ, r, delta, order)?;
    let sample = motion.sample(grid, points);
    let margin = motion.crossing_margin(&sample).check()?;
    Ok((sample, margin))
}
