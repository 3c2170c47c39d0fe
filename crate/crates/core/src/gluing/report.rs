use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{glue, GlueKind, GlueMesh, GluedMap, GluingError};
use crate::normal_forms::{boettcher_series, koenig_series, AnalyticGerm, ConjugacyResult};
use crate::series::DEFAULT_ORDER;

/// Expected rate in `K_k - 1 ≤ DILATATION_RATE · r_k`.
pub const DILATATION_RATE: f64 = 4.0;
/// Slack on `K_{k+1} ≤ K_k` for mesh noise.
pub const MONOTONE_SLACK: f64 = 1e-3;
const AGREEMENT_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub r_k: f64,
    #[serde(rename = "K")]
    pub dilatation: f64,
    pub k_sup: f64,
    pub residual: f64,
    pub boundary_defect: f64,
    /// `K_k ≤ K_{k-1} + MONOTONE_SLACK`; true for the first row.
    pub monotone: bool,
    /// `K_k - 1 ≤ DILATATION_RATE · r_k`.
    pub within_rate: bool,
}

/// Agreement of a glued map with the series conjugacy on `|z| = radius`,
/// after normalizing by `a = mean φ_series⁻¹(φ_glued(z)) / z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesAgreement {
    pub k: usize,
    pub radius: f64,
    pub scale: Complex64,
    pub max_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub kind: GlueKind,
    pub delta: f64,
    pub rows: Vec<ConvergenceRow>,
    pub agreement: Option<SeriesAgreement>,
}

impl ConvergenceReport {
    pub fn non_increasing(&self) -> bool {
        self.rows.iter().all(|r| r.monotone)
    }

    pub fn within_rate(&self) -> bool {
        self.rows.iter().all(|r| r.within_rate)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "k,r_k,K,k_sup,residual,boundary_defect,monotone,within_rate")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{},{}",
                r.k, r.r_k, r.dilatation, r.k_sup, r.residual, r.boundary_defect, r.monotone, r.within_rate
            )?;
        }
        Ok(())
    }
}

/// Compare `glued` with `series` on the circle `|z| = radius`.
pub fn series_agreement(glued: &GluedMap, series: &ConjugacyResult, radius: f64) -> SeriesAgreement {
    let points: Vec<Complex64> = (0..AGREEMENT_SAMPLES)
        .map(|k| Complex64::from_polar(radius, TAU * k as f64 / AGREEMENT_SAMPLES as f64))
        .collect();
    let images: Vec<Complex64> = points.iter().map(|&z| glued.eval(z)).collect();
    let scale = points.iter().zip(&images).map(|(z, g)| series.phi_inverse.evaluate(*g) / z).sum::<Complex64>()
        / AGREEMENT_SAMPLES as f64;
    let max_defect =
        points.iter().zip(&images).map(|(z, g)| (g - series.phi.evaluate(scale * z)).norm()).fold(0.0, f64::max);
    SeriesAgreement { k: glued.decomposition.count, radius, scale, max_defect }
}

/// Glue for each `k` in `k_list` and tabulate `r_k`, `K_k` and residuals.
pub fn convergence_report(
    germ: &AnalyticGerm,
    kind: GlueKind,
    k_list: &[usize],
    delta: f64,
    mesh: GlueMesh,
) -> Result<ConvergenceReport, GluingError> {
    super::require_kind(germ, kind)?;
    let maps = k_list.iter().map(|&k| glue(germ, k, delta, mesh)).collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceReport::from_glued(germ, kind, delta, &maps))
}

impl ConvergenceReport {
    /// Report over already glued maps, in the given order. The map with the
    /// largest `k` is compared with the series conjugacy on the circle of
    /// radius `min(δ, δ_series)/8`.
    pub fn from_glued(germ: &AnalyticGerm, kind: GlueKind, delta: f64, maps: &[GluedMap]) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(maps.len());
        for glued in maps {
            let r_k = glued.decomposition.r;
            let monotone = rows.last().is_none_or(|prev| glued.dilatation <= prev.dilatation + MONOTONE_SLACK);
            rows.push(ConvergenceRow {
                k: glued.decomposition.count,
                r_k,
                dilatation: glued.dilatation,
                k_sup: glued.k_sup,
                residual: glued.conjugacy_residual,
                boundary_defect: glued.boundary_defect,
                monotone,
                within_rate: glued.dilatation - 1.0 <= DILATATION_RATE * r_k,
            });
        }
        let largest = maps.iter().rev().max_by_key(|m| m.decomposition.count);
        let agreement = largest.and_then(|glued| {
            let series = match kind {
                GlueKind::Koenig => koenig_series(germ, DEFAULT_ORDER),
                GlueKind::Boettcher => boettcher_series(germ, DEFAULT_ORDER),
            };
            series.ok().map(|s| series_agreement(glued, &s, delta.min(s.delta) / 8.0))
        });
        Self { kind, delta, rows, agreement }
    }
}
