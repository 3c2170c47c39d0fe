use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    require_kind, winding_number, Annulus, AnnulusDecomposition, DecompositionKind, GlueKind, GlueMesh, GluedMap,
    GluingError, Inverter,
};
use crate::motions::{BoundaryExtension, BoundaryMotion, GridMap, LogPolarMesh};
use crate::normal_forms::AnalyticGerm;
use crate::series::DEFAULT_ORDER;

/// Largest accepted Newton correction, as a fraction of the distance between
/// neighboring preimages.
const BRANCH_MARGIN: f64 = 0.25;

fn degree(germ: &AnalyticGerm, dec: &AnnulusDecomposition) -> Result<usize, GluingError> {
    require_kind(germ, GlueKind::Boettcher)?;
    let DecompositionKind::Boettcher { degree } = dec.kind else {
        return Err(GluingError::KindMismatch { expected: GlueKind::Boettcher, found: germ.class() });
    };
    germ.normalized_degree()?;
    Ok(degree)
}

fn branch_gap(u: Complex64, n: usize) -> f64 {
    BRANCH_MARGIN * u.norm() * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU / n as f64)).norm()
}

/// `φ_r` on `A_{r,0}`: the extension of the Böttcher motion at
/// `c = r^{1/n}`, equal to the identity on `|z| = r` and to the covering
/// lift `h` (with `f(h(z)) = z^n`) on `|z| = r^{1/n}`. Lift values are
/// polished by Newton's method from the series.
pub fn boettcher_fundamental(
    germ: &AnalyticGerm,
    dec: &AnnulusDecomposition,
    mesh: GlueMesh,
) -> Result<GridMap, GluingError> {
    let n = degree(germ, dec)?;
    let motion = if dec.count == 0 {
        BoundaryMotion::boettcher_unchecked(germ, dec.r, dec.delta, DEFAULT_ORDER)?
    } else {
        BoundaryMotion::boettcher(germ, dec.r, dec.delta, DEFAULT_ORDER)?
    };
    let a0 = dec.annuli[0];
    let c = Complex64::new(a0.outer, 0.0);
    let inverter = Inverter::new(germ.series());
    let m = mesh.angular;
    let circle = |rho: f64, k: usize| Complex64::from_polar(rho, TAU * k as f64 / m as f64);
    let inner: Vec<Complex64> = (0..m).map(|k| circle(a0.inner, k)).collect();
    let outer = (0..m)
        .map(|k| {
            let z = circle(a0.outer, k);
            let seed = motion.moving_value(c, z);
            let u = inverter.solve(z.powu(n as u32), seed).ok_or(GluingError::RootFindingDivergence {
                piece: 0,
                radial: mesh.radial - 1,
                angular: k,
            })?;
            if (u - seed).norm() > branch_gap(u, n) {
                return Err(GluingError::BranchAmbiguity { piece: 0, radial: mesh.radial - 1, angular: k });
            }
            Ok(u)
        })
        .collect::<Result<Vec<_>, GluingError>>()?;
    let ext = BoundaryExtension::from_boundary(a0.inner, a0.outer, &inner, &outer, mesh.profile)?;
    let map = ext.to_grid(LogPolarMesh::new(a0.inner, a0.outer, mesh.radial, mesh.angular)?);
    map.check_orientation()?;
    Ok(map)
}

/// The lift `φ_{r,j}` on `annulus` with `f(φ_{r,j}(z)) = φ_{r,j-1}(z^n)`.
///
/// Mesh nodes of `A_{r,j}` map under `z^n` onto nodes of `lower`. The inner
/// circle is pinned to the outer circle of `lower`; each ray is then swept
/// outward, seeding Newton's method with the previous node scaled by the
/// radial step.
pub fn boettcher_lift(
    germ: &AnalyticGerm,
    lower: &GridMap,
    annulus: &Annulus,
    mesh: GlueMesh,
) -> Result<GridMap, GluingError> {
    require_kind(germ, GlueKind::Boettcher)?;
    let n = germ.normalized_degree()?;
    let lm = lower.mesh;
    if lm.radial != mesh.radial
        || lm.angular != mesh.angular
        || (lm.outer - annulus.inner).abs() > 1e-12 * annulus.inner
    {
        return Err(GluingError::BoundaryMismatch { piece: annulus.index, defect: (lm.outer - annulus.inner).abs() });
    }
    let pm = LogPolarMesh::new(annulus.inner, annulus.outer, mesh.radial, mesh.angular)?;
    let (rows, cols) = (pm.radial, pm.angular);
    let inverter = Inverter::new(germ.series());
    let step = pm.ds().exp();
    let columns = (0..cols)
        .into_par_iter()
        .map(|l| {
            let target_col = (n * l) % cols;
            let mut out = Vec::with_capacity(rows);
            let mut seed = lower.value(lm.radial - 1, l);
            for i in 0..rows {
                let w = lower.value(i, target_col);
                let fail = GluingError::RootFindingDivergence { piece: annulus.index, radial: i, angular: l };
                let u = inverter.solve(w, seed).ok_or(fail)?;
                if (u - seed).norm() > branch_gap(u, n) {
                    return Err(GluingError::BranchAmbiguity { piece: annulus.index, radial: i, angular: l });
                }
                out.push(u);
                seed = u * step;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, GluingError>>()?;
    let values = (0..rows * cols).map(|idx| columns[idx % cols][idx / cols]).collect();
    let map = GridMap { mesh: pm, values };

    for row in [0, rows - 1] {
        let circle: Vec<Complex64> = (0..cols).map(|l| map.value(row, l)).collect();
        let image: Vec<Complex64> = circle.iter().map(|&u| germ.evaluate(u)).collect();
        for (found, expected) in [(winding_number(&circle), 1), (winding_number(&image), n as i64)] {
            if (found - expected as f64).abs() > 1e-6 {
                return Err(GluingError::DegreeMismatch {
                    piece: annulus.index,
                    found: found.round() as i64,
                    expected,
                });
            }
        }
    }
    map.check_orientation()?;
    Ok(map)
}

/// Identity on `Δ_r`, the fundamental piece on `A_{r,0}` and the lift tower
/// outward to the `δ`-circle.
pub fn boettcher_glue(
    germ: &AnalyticGerm,
    dec: &AnnulusDecomposition,
    mesh: GlueMesh,
) -> Result<GluedMap, GluingError> {
    let mut maps = vec![boettcher_fundamental(germ, dec, mesh)?];
    for annulus in &dec.annuli[1..] {
        let next = boettcher_lift(germ, maps.last().unwrap_or_else(|| unreachable!()), annulus, mesh)?;
        maps.push(next);
    }
    GluedMap::assemble(germ, dec.clone(), maps)
}
