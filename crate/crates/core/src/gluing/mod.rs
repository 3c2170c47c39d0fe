//! Global constructions of the normal-form conjugacy from a single
//! quasiconformal piece.
//!
//! The disk of radius `δ` is cut into fundamental annuli. A map on one
//! annulus comes from extending a boundary motion; the functional equation
//! then propagates it to every other annulus, by iterating the germ (König)
//! or by lifting through the degree-`n` covering (Böttcher). The glued map is
//! grid-sampled; its dilatation and functional-equation residual are measured.

mod boettcher;
mod koenig;
mod report;

use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motions::{estimate_dilatation, write_csv, BeltramiEstimate, ExtensionProfile, GridMap, MotionError};
use crate::normal_forms::{boettcher_radius, koenig_series, AnalyticGerm, GermClass, NormalFormError};
use crate::series::{PowerSeries, DEFAULT_ORDER};

pub use boettcher::{boettcher_fundamental, boettcher_glue, boettcher_lift};
pub use koenig::{koenig_fundamental, koenig_glue};
pub use report::{
    convergence_report, series_agreement, ConvergenceReport, ConvergenceRow, SeriesAgreement, DILATATION_RATE,
    MONOTONE_SLACK,
};

/// Adjacent pieces must agree on shared circles to this tolerance.
pub const CONTINUITY_TOL: f64 = 1e-9;
/// Smallest `r_k` accepted.
pub const MIN_BASE_RADIUS: f64 = 1e-300;
/// König inner annuli stop once their outer radius is below this many
/// radial mesh cells of the `δ`-disk.
pub const INNER_CUTOFF_CELLS: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GluingError {
    #[error("{expected:?} construction needs a matching germ, found {found:?}")]
    KindMismatch { expected: GlueKind, found: GermClass },
    #[error("r_k = {r:e} at k = {k} is below double-precision resolution; use a smaller k")]
    RadiusUnderflow { k: usize, r: f64 },
    #[error("invalid radius delta = {0}")]
    InvalidDelta(f64),
    #[error("pieces disagree by {defect:e} on the inner circle of annulus {piece}")]
    BoundaryMismatch { piece: i64, defect: f64 },
    #[error("lift branch is ambiguous in annulus {piece} at node ({radial}, {angular}); refine the mesh")]
    BranchAmbiguity { piece: i64, radial: usize, angular: usize },
    #[error("root finding diverged in annulus {piece} at node ({radial}, {angular})")]
    RootFindingDivergence { piece: i64, radial: usize, angular: usize },
    #[error("lift in annulus {piece} has winding {found}, expected {expected}")]
    DegreeMismatch { piece: i64, found: i64, expected: i64 },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlueKind {
    Koenig,
    Boettcher,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DecompositionKind {
    Koenig { lambda: Complex64 },
    Boettcher { degree: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub index: i64,
    pub inner: f64,
    pub outer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDecomposition {
    #[serde(flatten)]
    pub kind: DecompositionKind,
    /// Base radius `r_k`.
    pub r: f64,
    pub delta: f64,
    pub count: usize,
    /// Annuli in increasing radius.
    pub annuli: Vec<Annulus>,
}

impl AnnulusDecomposition {
    /// Boundary radii in increasing order.
    pub fn radii(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.annuli.iter().map(|a| a.inner).collect();
        out.extend(self.annuli.last().map(|a| a.outer));
        out
    }

    pub fn annulus(&self, index: i64) -> Option<&Annulus> {
        self.annuli.iter().find(|a| a.index == index)
    }

    fn check_coverage(&self) {
        let radii = self.radii();
        debug_assert!(radii.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(radii.last().is_some_and(|&r| r >= self.delta));
    }
}

fn require_kind(germ: &AnalyticGerm, kind: GlueKind) -> Result<(), GluingError> {
    let wanted = match kind {
        GlueKind::Koenig => GermClass::Attracting,
        GlueKind::Boettcher => GermClass::Superattracting,
    };
    if germ.class() == wanted {
        Ok(())
    } else {
        Err(GluingError::KindMismatch { expected: kind, found: germ.class() })
    }
}

/// Decompose the `δ`-disk for `r = r_k`.
///
/// König: `r = δ|λ|^k`, annuli `A_j = {|λ|^{j+1} r ≤ |z| ≤ |λ|^j r}` for
/// `j = -k, …, J`, where `J ≥ 0` is the last index whose outer radius is at
/// least `inner_cutoff`. Böttcher: `r = δ^{n^k}`, annuli
/// `A_j = {r^{1/n^j} ≤ |z| ≤ r^{1/n^{j+1}}}` for `j = 0, …, k-1` (one annulus
/// when `k = 0`), which together with `Δ_r` fill the `δ`-disk.
pub fn decompose(
    kind: GlueKind,
    germ: &AnalyticGerm,
    k: usize,
    delta: f64,
    inner_cutoff: f64,
) -> Result<AnnulusDecomposition, GluingError> {
    require_kind(germ, kind)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GluingError::InvalidDelta(delta));
    }
    let dec = match kind {
        GlueKind::Koenig => {
            let lambda = germ.multiplier().unwrap_or_default();
            let modulus = lambda.norm();
            let contraction = modulus.powi(k as i32);
            let r = delta * contraction;
            if r < MIN_BASE_RADIUS || contraction < f64::EPSILON {
                return Err(GluingError::RadiusUnderflow { k, r });
            }
            // Boundary of A_j at |λ|^j r = δ |λ|^{j+k}.
            let boundary = |j: i64| delta * modulus.powi((j + k as i64) as i32);
            let mut annuli = Vec::new();
            let mut j = -(k as i64);
            while j <= 0 || boundary(j) >= inner_cutoff {
                annuli.push(Annulus { index: j, inner: boundary(j + 1), outer: boundary(j) });
                j += 1;
            }
            annuli.reverse();
            AnnulusDecomposition { kind: DecompositionKind::Koenig { lambda }, r, delta, count: k, annuli }
        }
        GlueKind::Boettcher => {
            let n = germ.degree().unwrap_or(2);
            let nf = n as f64;
            let r = delta.powf(nf.powi(k as i32));
            if r < MIN_BASE_RADIUS || r.powf(1.0 / nf) < f64::EPSILON {
                return Err(GluingError::RadiusUnderflow { k, r });
            }
            let pieces = k.max(1);
            // Boundary r^{1/n^j} = δ^{n^{k-j}}.
            let boundary = |j: usize| {
                if j == k {
                    delta
                } else if j < k {
                    delta.powf(nf.powi((k - j) as i32))
                } else {
                    delta.powf(nf.powi(k as i32 - j as i32))
                }
            };
            let annuli =
                (0..pieces).map(|j| Annulus { index: j as i64, inner: boundary(j), outer: boundary(j + 1) }).collect();
            AnnulusDecomposition { kind: DecompositionKind::Boettcher { degree: n }, r, delta, count: k, annuli }
        }
    };
    dec.check_coverage();
    Ok(dec)
}

/// Radius for the König glue: the validity radius of the series
/// linearizer. Inverse iterates on the outer annuli exist only where the
/// inverse linearizer does.
pub fn koenig_glue_radius(germ: &AnalyticGerm) -> Result<f64, GluingError> {
    require_kind(germ, GlueKind::Koenig)?;
    Ok(koenig_series(germ, DEFAULT_ORDER)?.delta)
}

/// `koenig_glue_radius` for attracting germs, `boettcher_radius` otherwise.
pub fn default_delta(germ: &AnalyticGerm) -> Result<f64, GluingError> {
    match germ.class() {
        GermClass::Superattracting => Ok(boettcher_radius(germ)?.delta),
        _ => koenig_glue_radius(germ),
    }
}

/// Mesh resolution and extension profile for every annulus piece.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueMesh {
    pub radial: usize,
    pub angular: usize,
    pub profile: ExtensionProfile,
}

impl GlueMesh {
    pub fn square(n: usize) -> Self {
        Self { radial: n, angular: n, profile: ExtensionProfile::default() }
    }

    pub fn with_profile(self, profile: ExtensionProfile) -> Self {
        Self { profile, ..self }
    }

    /// Inner cutoff for König decompositions of the `δ`-disk.
    pub fn inner_cutoff(&self, delta: f64) -> f64 {
        INNER_CUTOFF_CELLS * delta / self.radial as f64
    }
}

/// Newton solver for `f(u) = w`.
pub(crate) struct Inverter {
    f: PowerSeries,
    df: PowerSeries,
}

impl Inverter {
    pub(crate) fn new(f: &PowerSeries) -> Self {
        Self { f: f.clone(), df: f.derivative() }
    }

    pub(crate) fn solve(&self, w: Complex64, seed: Complex64) -> Option<Complex64> {
        let mut u = seed;
        for _ in 0..64 {
            let d = self.df.evaluate(u);
            if d.norm() == 0.0 {
                return None;
            }
            let step = (self.f.evaluate(u) - w) / d;
            u -= step;
            if !(u.re.is_finite() && u.im.is_finite()) {
                return None;
            }
            if step.norm() <= 4.0 * f64::EPSILON * u.norm().max(f64::MIN_POSITIVE) {
                return Some(u);
            }
        }
        let defect = (self.f.evaluate(u) - w).norm();
        (defect <= 1e-14 * w.norm().max(f64::MIN_POSITIVE)).then_some(u)
    }
}

/// Winding number about 0 of a closed polygon.
pub fn winding_number(values: &[Complex64]) -> f64 {
    let n = values.len();
    (0..n).map(|k| (values[(k + 1) % n] / values[k]).arg()).sum::<f64>() / TAU
}

/// Lagrange weights for nodes `0..P` evaluated at `t`.
fn lagrange<const P: usize>(t: f64) -> [f64; P] {
    let mut w = [1.0; P];
    for (a, wa) in w.iter_mut().enumerate() {
        for b in 0..P {
            if b != a {
                *wa *= (t - b as f64) / (a as f64 - b as f64);
            }
        }
    }
    w
}

/// Interpolation stencil widths in `ln|z|` and `arg z`.
const RADIAL_STENCIL: usize = 4;
const ANGULAR_STENCIL: usize = 8;

/// One annulus of a glued map.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub index: i64,
    pub map: GridMap,
    pub beltrami: BeltramiEstimate,
    /// `φ(z)/z` at each node, the interpolated quantity.
    ratio: Vec<Complex64>,
}

impl Piece {
    fn new(index: i64, map: GridMap) -> Self {
        let beltrami = estimate_dilatation(&map);
        let mesh = map.mesh;
        let ratio = map
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| v / mesh.point(idx / mesh.angular, idx % mesh.angular))
            .collect();
        Self { index, map, beltrami, ratio }
    }

    /// Lagrange interpolation of `φ(z)/z` in `(ln|z|, arg z)`, times `z`:
    /// cubic in the radius, seventh degree (periodic) in the angle. Radii
    /// outside the annulus are clamped to its edges.
    pub fn interpolate(&self, z: Complex64) -> Complex64 {
        let mesh = self.map.mesh;
        let (n, m) = (mesh.radial, mesh.angular);
        let x = ((z.norm() / mesh.inner).ln() / mesh.ds()).clamp(0.0, (n - 1) as f64);
        let i0 =
            (x.floor() as isize - (RADIAL_STENCIL as isize / 2 - 1)).clamp(0, (n - RADIAL_STENCIL) as isize) as usize;
        let y = z.arg().rem_euclid(TAU) / mesh.dtheta();
        let j0 = y.floor() as isize - (ANGULAR_STENCIL as isize / 2 - 1);
        let wx = lagrange::<RADIAL_STENCIL>(x - i0 as f64);
        let wy = lagrange::<ANGULAR_STENCIL>(y - j0 as f64);
        let mut q = Complex64::new(0.0, 0.0);
        for (a, wa) in wx.iter().enumerate() {
            let row = (i0 + a) * m;
            for (b, wb) in wy.iter().enumerate() {
                let col = (j0 + b as isize).rem_euclid(m as isize) as usize;
                q += self.ratio[row + col] * (wa * wb);
            }
        }
        z * q
    }
}

/// Piecewise grid-sampled map on the `δ`-disk.
#[derive(Clone, Debug, PartialEq)]
pub struct GluedMap {
    pub decomposition: AnnulusDecomposition,
    /// Pieces in increasing radius, matching `decomposition.annuli`.
    pub pieces: Vec<Piece>,
    /// Global `K`: the maximum over pieces.
    pub dilatation: f64,
    pub k_sup: f64,
    /// `sup |f(φ(z)) - φ(N(z))|` over cell centers where both sides are defined.
    pub conjugacy_residual: f64,
    /// Largest disagreement on a shared circle.
    pub boundary_defect: f64,
}

impl GluedMap {
    fn assemble(
        germ: &AnalyticGerm,
        decomposition: AnnulusDecomposition,
        maps: Vec<GridMap>,
    ) -> Result<Self, GluingError> {
        let pieces: Vec<Piece> = maps
            .into_par_iter()
            .zip(decomposition.annuli.par_iter())
            .map(|(map, a)| Piece::new(a.index, map))
            .collect();
        let k_sup = pieces.iter().map(|p| p.beltrami.k_sup).fold(0.0, f64::max);
        let mut glued = Self {
            decomposition,
            pieces,
            dilatation: crate::motions::dilatation_from_k(k_sup),
            k_sup,
            conjugacy_residual: 0.0,
            boundary_defect: 0.0,
        };
        glued.boundary_defect = glued.check_continuity()?;
        glued.conjugacy_residual = glued.residual(germ);
        Ok(glued)
    }

    fn check_continuity(&self) -> Result<f64, GluingError> {
        let mut worst = 0.0f64;
        if let DecompositionKind::Boettcher { .. } = self.decomposition.kind {
            let first = &self.pieces[0].map;
            let defect = (0..first.mesh.angular)
                .map(|l| (first.value(0, l) - first.mesh.point(0, l)).norm())
                .fold(0.0, f64::max);
            if defect > CONTINUITY_TOL {
                return Err(GluingError::BoundaryMismatch { piece: self.pieces[0].index, defect });
            }
            worst = defect;
        }
        for pair in self.pieces.windows(2) {
            let (lower, upper) = (&pair[0].map, &pair[1].map);
            let top = lower.mesh.radial - 1;
            let defect =
                (0..lower.mesh.angular).map(|l| (lower.value(top, l) - upper.value(0, l)).norm()).fold(0.0, f64::max);
            if defect > CONTINUITY_TOL {
                return Err(GluingError::BoundaryMismatch { piece: pair[1].index, defect });
            }
            worst = worst.max(defect);
        }
        Ok(worst)
    }

    pub fn normal_form(&self, z: Complex64) -> Complex64 {
        match self.decomposition.kind {
            DecompositionKind::Koenig { lambda } => lambda * z,
            DecompositionKind::Boettcher { degree } => z.powu(degree as u32),
        }
    }

    /// Index into `pieces` of the annulus containing radius `rho`, if any.
    fn piece_at(&self, rho: f64) -> Option<usize> {
        let first = self.pieces.first()?;
        if rho < first.map.mesh.inner {
            return None;
        }
        let p = self.pieces.partition_point(|p| p.map.mesh.outer < rho);
        Some(p.min(self.pieces.len() - 1))
    }

    /// `φ(z)` by interpolation. Below the innermost annulus the König map
    /// continues the innermost ratio and the Böttcher map is the identity.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        if z.norm() == 0.0 {
            return z;
        }
        match self.piece_at(z.norm()) {
            Some(p) => self.pieces[p].interpolate(z),
            None => match self.decomposition.kind {
                DecompositionKind::Koenig { .. } => self.pieces[0].interpolate(z),
                DecompositionKind::Boettcher { .. } => z,
            },
        }
    }

    /// Whether `φ(N(z))` is sampled data for `z` in the piece at `p`.
    fn residual_defined(&self, p: usize, image: Complex64) -> bool {
        match self.decomposition.kind {
            DecompositionKind::Koenig { .. } => self.piece_at(image.norm()).is_some(),
            DecompositionKind::Boettcher { .. } => self.pieces[p].index >= 1,
        }
    }

    fn residual(&self, germ: &AnalyticGerm) -> f64 {
        (0..self.pieces.len())
            .into_par_iter()
            .map(|p| {
                let mesh = self.pieces[p].map.mesh;
                let mut worst = 0.0f64;
                for i in 0..mesh.radial - 1 {
                    let rho = mesh.inner * ((i as f64 + 0.5) * mesh.ds()).exp();
                    for l in 0..mesh.angular {
                        let z = Complex64::from_polar(rho, (l as f64 + 0.5) * mesh.dtheta());
                        let image = self.normal_form(z);
                        if !self.residual_defined(p, image) {
                            continue;
                        }
                        let lhs = germ.evaluate(self.pieces[p].interpolate(z));
                        worst = worst.max((lhs - self.eval(image)).norm());
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn summary(&self) -> GlueSummary {
        GlueSummary {
            decomposition: self.decomposition.clone(),
            radii: self.decomposition.radii(),
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceSummary {
                    index: p.index,
                    inner: p.map.mesh.inner,
                    outer: p.map.mesh.outer,
                    dilatation: p.beltrami.dilatation,
                    k_sup: p.beltrami.k_sup,
                    degenerate_cells: p.beltrami.degenerate_cells,
                })
                .collect(),
            dilatation: self.dilatation,
            k_sup: self.k_sup,
            conjugacy_residual: self.conjugacy_residual,
            boundary_defect: self.boundary_defect,
        }
    }

    /// CSV of one piece: `x,y,re,im,mu_re,mu_im`.
    pub fn write_piece_csv<W: Write>(&self, piece: usize, out: &mut W) -> io::Result<()> {
        let p = &self.pieces[piece];
        write_csv(&p.map, Some(&p.beltrami), out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub index: i64,
    pub inner: f64,
    pub outer: f64,
    #[serde(rename = "K")]
    pub dilatation: f64,
    pub k_sup: f64,
    pub degenerate_cells: usize,
}

/// JSON summary of a glued map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueSummary {
    pub decomposition: AnnulusDecomposition,
    pub radii: Vec<f64>,
    pub pieces: Vec<PieceSummary>,
    #[serde(rename = "K")]
    pub dilatation: f64,
    pub k_sup: f64,
    pub conjugacy_residual: f64,
    pub boundary_defect: f64,
}

/// Glue with the construction matching the germ's class.
pub fn glue(germ: &AnalyticGerm, k: usize, delta: f64, mesh: GlueMesh) -> Result<GluedMap, GluingError> {
    match germ.class() {
        GermClass::Attracting => {
            let dec = decompose(GlueKind::Koenig, germ, k, delta, mesh.inner_cutoff(delta))?;
            koenig_glue(germ, &dec, mesh)
        }
        GermClass::Superattracting => {
            let dec = decompose(GlueKind::Boettcher, germ, k, delta, 0.0)?;
            boettcher_glue(germ, &dec, mesh)
        }
        found => Err(GluingError::KindMismatch { expected: GlueKind::Koenig, found }),
    }
}
