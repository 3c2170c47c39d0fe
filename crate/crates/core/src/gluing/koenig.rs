use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    require_kind, AnnulusDecomposition, DecompositionKind, GlueKind, GlueMesh, GluedMap, GluingError, Inverter,
};
use crate::motions::{BoundaryExtension, BoundaryMotion, GridMap, LogPolarMesh};
use crate::normal_forms::AnalyticGerm;

/// Boundary samples used for the fundamental extension.
const MIN_BOUNDARY_SAMPLES: usize = 128;

fn fundamental_extension(
    germ: &AnalyticGerm,
    dec: &AnnulusDecomposition,
    mesh: GlueMesh,
) -> Result<(Complex64, BoundaryExtension, LogPolarMesh), GluingError> {
    require_kind(germ, GlueKind::Koenig)?;
    let DecompositionKind::Koenig { lambda } = dec.kind else {
        return Err(GluingError::KindMismatch { expected: GlueKind::Koenig, found: germ.class() });
    };
    let motion = BoundaryMotion::koenig(germ, dec.r, dec.delta)?;
    let c = Complex64::new(dec.r / dec.delta, 0.0);
    let samples = mesh.angular.max(MIN_BOUNDARY_SAMPLES);
    let ext = BoundaryExtension::from_motion(&motion, c, samples, mesh.profile)?;
    let base = LogPolarMesh::new(lambda.norm() * dec.r, dec.r, mesh.radial, mesh.angular)?;
    Ok((lambda, ext, base))
}

/// `φ_r` on `A_{r,0}`: the extension of the König motion at `c_r = r/δ`,
/// equal to the identity on `|z| = r` and to `f(z/λ)` on `|z| = |λ|r`.
pub fn koenig_fundamental(
    germ: &AnalyticGerm,
    dec: &AnnulusDecomposition,
    mesh: GlueMesh,
) -> Result<GridMap, GluingError> {
    let (_, ext, base) = fundamental_extension(germ, dec, mesh)?;
    let map = ext.to_grid(base);
    map.check_orientation()?;
    Ok(map)
}

/// `φ_r(z) = f^j(φ_r(λ^{-j} z))` on `A_{r,j}`; negative `j` iterate the
/// inverse of `f`, solved by Newton's method from `w/λ`.
pub fn koenig_glue(germ: &AnalyticGerm, dec: &AnnulusDecomposition, mesh: GlueMesh) -> Result<GluedMap, GluingError> {
    let (lambda, ext, base) = fundamental_extension(germ, dec, mesh)?;
    let rows: Vec<Vec<(i64, Complex64)>> = (0..base.radial).map(|i| ext.row_coefficients(base.offset(i))).collect();
    let inverter = Inverter::new(germ.series());
    let maps = dec
        .annuli
        .par_iter()
        .map(|a| {
            let pm = LogPolarMesh::new(a.inner, a.outer, mesh.radial, mesh.angular)?;
            let shift = -(a.index as f64) * lambda.arg();
            let mut values = Vec::with_capacity(pm.len());
            for (i, row) in rows.iter().enumerate() {
                for l in 0..pm.angular {
                    // λ^{-j} z lies on row i of A_{r,0}.
                    let u = Complex64::from_polar(base.point(i, 0).re, pm.theta(l) + shift);
                    let mut v = u * BoundaryExtension::displacement_from(row, u.arg()).exp();
                    if a.index > 0 {
                        for _ in 0..a.index {
                            v = germ.evaluate(v);
                        }
                    } else {
                        for _ in 0..-a.index {
                            v = inverter.solve(v, v / lambda).ok_or(GluingError::RootFindingDivergence {
                                piece: a.index,
                                radial: i,
                                angular: l,
                            })?;
                        }
                    }
                    values.push(v);
                }
            }
            let map = GridMap { mesh: pm, values };
            map.check_orientation()?;
            Ok(map)
        })
        .collect::<Result<Vec<_>, GluingError>>()?;
    GluedMap::assemble(germ, dec.clone(), maps)
}

#[cfg(test)]
mod tests {
    use super::super::{decompose, koenig_glue_radius};
    use super::*;
    use crate::normal_forms::{classify, domain_radius};
    use crate::series::PowerSeries;

    fn germ(coeffs: &[f64]) -> AnalyticGerm {
        classify(&PowerSeries::from_real(coeffs, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn linear_map_glues_to_identity() {
        let g = germ(&[0.0, 0.5]);
        let mesh = GlueMesh::square(64);
        let dec = decompose(GlueKind::Koenig, &g, 3, 0.4, mesh.inner_cutoff(0.4)).unwrap();
        let glued = koenig_glue(&g, &dec, mesh).unwrap();
        for p in &glued.pieces {
            for (idx, v) in p.map.values.iter().enumerate() {
                let z = p.map.mesh.point(idx / 64, idx % 64);
                assert!((v - z).norm() <= 1e-15 * z.norm(), "{v} vs {z}");
            }
        }
        assert!(glued.dilatation - 1.0 < 1e-7);
        assert!(glued.conjugacy_residual < 1e-15);
        assert_eq!(glued.eval(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fundamental_piece_matches_boundary_formulas() {
        let g = germ(&[0.0, 0.5, 1.0]);
        let delta = domain_radius(&g).unwrap();
        let mesh = GlueMesh::square(64);
        let dec = decompose(GlueKind::Koenig, &g, 2, delta, mesh.inner_cutoff(delta)).unwrap();
        let map = koenig_fundamental(&g, &dec, mesh).unwrap();
        let top = map.mesh.radial - 1;
        for l in 0..map.mesh.angular {
            let outer = map.mesh.point(top, l);
            assert!((map.value(top, l) - outer).norm() < 1e-12);
            let inner = map.mesh.point(0, l);
            assert!((map.value(0, l) - g.evaluate(inner / 0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn quadratic_glue_satisfies_functional_equation() {
        let g = germ(&[0.0, 0.5, 1.0]);
        let delta = koenig_glue_radius(&g).unwrap();
        let mesh = GlueMesh::square(128);
        let dec = decompose(GlueKind::Koenig, &g, 3, delta, mesh.inner_cutoff(delta)).unwrap();
        let glued = koenig_glue(&g, &dec, mesh).unwrap();
        assert!(glued.conjugacy_residual <= 1e-7, "{}", glued.conjugacy_residual);
        assert!(glued.boundary_defect <= 1e-9);
        assert!(glued.dilatation <= (1.0 + dec.r) / (1.0 - dec.r) + 0.05, "{}", glued.dilatation);
    }

    #[test]
    fn wrong_class_is_rejected() {
        let g = germ(&[0.0, 0.0, 1.0]);
        let att = germ(&[0.0, 0.5, 1.0]);
        let dec = decompose(GlueKind::Koenig, &att, 1, 0.2, 0.1).unwrap();
        assert!(matches!(koenig_glue(&g, &dec, GlueMesh::square(16)), Err(GluingError::KindMismatch { .. })));
    }
}
