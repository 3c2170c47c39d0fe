//! Extension of a two-circle boundary motion across the annulus between the
//! circles, in logarithmic coordinates.
//!
//! With `w = log z` the annulus `{a ≤ |z| ≤ b}` becomes the strip
//! `ln a ≤ Re w ≤ ln b` (periodic in `Im w`). The boundary displacements
//! `D = log(h(z)/z)` on both edges are expanded in Fourier modes and blended
//! across the strip; the extension is `z exp(D)`.
//!
//! [`ExtensionProfile::Linear`] blends every mode linearly in `Re w`.
//! [`ExtensionProfile::ModeOptimal`] blends mode `m` with the profile
//! minimizing `sup |∂_w̄ D|` for that mode, which is `A e^{ms} + B`; mode 0
//! stays linear.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoundaryMotion, MotionError, MotionSample};

/// Logarithmically spaced annulus mesh: `radial` circles from `inner` to
/// `outer` inclusive, `angular` equally spaced rays starting at angle 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPolarMesh {
    pub inner: f64,
    pub outer: f64,
    pub radial: usize,
    pub angular: usize,
}

impl LogPolarMesh {
    pub fn new(inner: f64, outer: f64, radial: usize, angular: usize) -> Result<Self, MotionError> {
        if !(inner > 0.0 && inner.is_finite() && outer.is_finite() && outer > inner) {
            return Err(MotionError::DegenerateAnnulus { inner, outer });
        }
        if radial < 5 || angular < 8 {
            return Err(MotionError::InvalidRadius(format!("mesh {radial}x{angular} is too coarse")));
        }
        Ok(Self { inner, outer, radial, angular })
    }

    pub fn len(&self) -> usize {
        self.radial * self.angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Strip width `ln(outer / inner)`.
    pub fn width(&self) -> f64 {
        (self.outer / self.inner).ln()
    }

    pub fn ds(&self) -> f64 {
        self.width() / (self.radial - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.angular as f64
    }

    /// `ln|z| - ln(inner)` on row `i`.
    pub fn offset(&self, i: usize) -> f64 {
        if i + 1 == self.radial {
            self.width()
        } else {
            i as f64 * self.ds()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let rho = if i == 0 {
            self.inner
        } else if i + 1 == self.radial {
            self.outer
        } else {
            self.inner * self.offset(i).exp()
        };
        Complex64::from_polar(rho, self.theta(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.angular + j
    }
}

/// A map sampled on the nodes of a [`LogPolarMesh`], row-major by radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub mesh: LogPolarMesh,
    pub values: Vec<Complex64>,
}

impl GridMap {
    pub fn from_fn<F>(mesh: LogPolarMesh, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let values =
            (0..mesh.len()).into_par_iter().map(|k| f(mesh.point(k / mesh.angular, k % mesh.angular))).collect();
        Self { mesh, values }
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.mesh.index(i, j)]
    }

    /// First mesh cell whose image triangles are not positively oriented.
    pub fn find_fold(&self) -> Option<(usize, usize)> {
        let m = &self.mesh;
        (0..m.radial - 1).find_map(|i| {
            (0..m.angular).find_map(|j| {
                let jn = (j + 1) % m.angular;
                let (p00, p10, p01, p11) =
                    (self.value(i, j), self.value(i + 1, j), self.value(i, jn), self.value(i + 1, jn));
                (orientation(p00, p10, p01) <= 0.0 || orientation(p11, p01, p10) <= 0.0).then_some((i, j))
            })
        })
    }

    pub fn check_orientation(&self) -> Result<(), MotionError> {
        match self.find_fold() {
            Some((radial, angular)) => Err(MotionError::NotInjectiveOnMesh { radial, angular }),
            None => Ok(()),
        }
    }
}

fn orientation(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    ((b - a).conj() * (c - a)).im
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionProfile {
    Linear,
    #[default]
    ModeOptimal,
}

/// Blend weight of the inner-edge data for mode `m` at offset `s` in a strip
/// of width `l`: 1 at `s = 0`, 0 at `s = l`.
fn blend_weight(profile: ExtensionProfile, m: i64, s: f64, l: f64) -> f64 {
    if m == 0 || profile == ExtensionProfile::Linear {
        return 1.0 - s / l;
    }
    let m = m as f64;
    if m > 0.0 {
        (m * (s - l)).exp_m1() / (-m * l).exp_m1()
    } else {
        (m * s).exp() * (m * (l - s)).exp_m1() / (m * l).exp_m1()
    }
}

/// Fourier data of the boundary displacement on both edges of an annulus.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryExtension {
    pub inner: f64,
    pub outer: f64,
    pub profile: ExtensionProfile,
    /// `(m, inner coefficient, outer coefficient)` for each frequency.
    modes: Vec<(i64, Complex64, Complex64)>,
}

impl BoundaryExtension {
    /// `inner_values[k]` and `outer_values[k]` are the images of the points at
    /// angle `2πk/M` on the inner and outer circles.
    pub fn from_boundary(
        inner: f64,
        outer: f64,
        inner_values: &[Complex64],
        outer_values: &[Complex64],
        profile: ExtensionProfile,
    ) -> Result<Self, MotionError> {
        if !(inner > 0.0 && outer > inner) {
            return Err(MotionError::DegenerateAnnulus { inner, outer });
        }
        let m = inner_values.len();
        if m < 8 || outer_values.len() != m {
            return Err(MotionError::ShapeMismatch);
        }
        let d_in = log_displacement(inner, inner_values)?;
        let d_out = log_displacement(outer, outer_values)?;
        let c_in = dft(&d_in);
        let c_out = dft(&d_out);
        let half = m / 2;
        let mut modes = Vec::with_capacity(m + 1);
        for k in 0..m {
            let freq = if k > half { k as i64 - m as i64 } else { k as i64 };
            if m.is_multiple_of(2) && k == half {
                // Nyquist mode: split evenly between ±M/2.
                let (a, b) = (c_in[k] * 0.5, c_out[k] * 0.5);
                modes.push((freq, a, b));
                modes.push((-freq, a, b));
            } else {
                modes.push((freq, c_in[k], c_out[k]));
            }
        }
        Ok(Self { inner, outer, profile, modes })
    }

    /// Extension of `motion` at parameter `c`, with `samples` boundary points
    /// per circle.
    pub fn from_motion(
        motion: &BoundaryMotion,
        c: Complex64,
        samples: usize,
        profile: ExtensionProfile,
    ) -> Result<Self, MotionError> {
        let circle = |rho: f64, moving: bool| -> Vec<Complex64> {
            (0..samples)
                .map(|k| motion.eval(c, Complex64::from_polar(rho, TAU * k as f64 / samples as f64), moving))
                .collect()
        };
        let inner_moves = motion.moving == super::MovingCircle::Inner;
        Self::from_boundary(
            motion.inner_radius,
            motion.outer_radius,
            &circle(motion.inner_radius, inner_moves),
            &circle(motion.outer_radius, !inner_moves),
            profile,
        )
    }

    fn width(&self) -> f64 {
        (self.outer / self.inner).ln()
    }

    /// Blended mode coefficients at strip offset `s`.
    pub(crate) fn row_coefficients(&self, s: f64) -> Vec<(i64, Complex64)> {
        let l = self.width();
        self.modes.iter().map(|&(m, a, b)| (m, b + (a - b) * blend_weight(self.profile, m, s, l))).collect()
    }

    pub(crate) fn displacement_from(row: &[(i64, Complex64)], theta: f64) -> Complex64 {
        row.iter().map(|&(m, w)| w * Complex64::from_polar(1.0, m as f64 * theta)).sum()
    }

    /// The extended map at `z`, for `inner ≤ |z| ≤ outer`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let s = (z.norm() / self.inner).ln().clamp(0.0, self.width());
        let row = self.row_coefficients(s);
        z * Self::displacement_from(&row, z.arg()).exp()
    }

    /// Sample on `mesh`, whose radii must match the extension's.
    pub fn to_grid(&self, mesh: LogPolarMesh) -> GridMap {
        let values = (0..mesh.radial)
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = self.row_coefficients(mesh.offset(i));
                (0..mesh.angular)
                    .map(|j| mesh.point(i, j) * Self::displacement_from(&row, mesh.theta(j)).exp())
                    .collect::<Vec<_>>()
            })
            .collect();
        GridMap { mesh, values }
    }
}

/// Continuous branch of `log(h_k / z_k)` around a circle of radius `rho`.
fn log_displacement(rho: f64, values: &[Complex64]) -> Result<Vec<Complex64>, MotionError> {
    let m = values.len();
    let mut out: Vec<Complex64> = Vec::with_capacity(m);
    for (k, h) in values.iter().enumerate() {
        let z = Complex64::from_polar(rho, TAU * k as f64 / m as f64);
        let mut d = (h / z).ln();
        if let Some(prev) = out.last() {
            d.im += TAU * ((prev.im - d.im) / TAU).round();
        }
        out.push(d);
    }
    // A boundary map of nonzero winding relative to the identity cannot be
    // written as z exp(D) with periodic D.
    let closing = out[0].im - out[m - 1].im;
    if closing.abs() > PI {
        return Err(MotionError::NotInjectiveOnMesh { radial: 0, angular: m - 1 });
    }
    Ok(out)
}

fn dft(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    let scale = 1.0 / m as f64;
    (0..m)
        .map(|freq| {
            values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -TAU * ((freq * k) % m) as f64 / m as f64))
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Extend the motion in `sample` at parameter `c` across the annulus between
/// its two base circles, sampled on a `radial × angular` log-polar mesh.
///
/// `sample.base_points` must be two circles of equal size, each listed from
/// angle 0 counterclockwise.
pub fn extend_motion(
    sample: &MotionSample,
    c: Complex64,
    radial: usize,
    angular: usize,
    profile: ExtensionProfile,
) -> Result<GridMap, MotionError> {
    let total = sample.base_points.len();
    if total < 16 || !total.is_multiple_of(2) {
        return Err(MotionError::ShapeMismatch);
    }
    let per = total / 2;
    let (first, second) = sample.base_points.split_at(per);
    let (r1, r2) = (first[0].norm(), second[0].norm());
    for (pts, rho) in [(first, r1), (second, r2)] {
        let on_circle = pts
            .iter()
            .enumerate()
            .all(|(k, z)| (z - Complex64::from_polar(rho, TAU * k as f64 / per as f64)).norm() <= 1e-12 * rho);
        if !on_circle {
            return Err(MotionError::ShapeMismatch);
        }
    }
    let ic = sample
        .param_grid
        .points()
        .iter()
        .position(|p| (p - c).norm() <= 1e-14 * sample.param_grid.radius.max(1.0))
        .ok_or_else(|| MotionError::InvalidRadius(format!("c = {c} is not a sampled parameter")))?;
    let row = &sample.values[ic];
    let (inner_vals, outer_vals, inner, outer) =
        if r1 < r2 { (&row[..per], &row[per..], r1, r2) } else { (&row[per..], &row[..per], r2, r1) };
    let mesh = LogPolarMesh::new(inner, outer, radial, angular)?;
    let ext = BoundaryExtension::from_boundary(inner, outer, inner_vals, outer_vals, profile)?;
    let map = ext.to_grid(mesh);
    map.check_orientation()?;
    Ok(map)
}
