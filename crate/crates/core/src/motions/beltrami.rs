//! Beltrami coefficients of grid-sampled maps.
//!
//! On a log-polar mesh the map is read as `G(w) = φ(e^w) = e^w Q(w)` with
//! `w = s + iθ` and `Q = φ(z)/z`. Then `G_w = e^w (Q + Q_w)`,
//! `G_w̄ = e^w Q_w̄`, and since `e^w` is conformal,
//! `μ_φ(z) = Q_w̄ / (Q + Q_w) · e^{2iθ}`. Working with `Q` makes the
//! identity exact and keeps truncation error proportional to the deviation
//! from it.
//! `Q_θ` is a spectral derivative along each periodic row. `Q_s` uses
//! fourth-order differences, central away from the edges and one-sided on
//! the two outer rows at each edge.

use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GridMap, LogPolarMesh};

/// Cells with `|φ_z|` below this are flagged and excluded.
pub const DEGENERATE_DERIVATIVE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltramiEstimate {
    pub mesh: LogPolarMesh,
    /// Per-node `μ`; `None` where the derivative is degenerate.
    pub mu: Vec<Option<Complex64>>,
    pub k_sup: f64,
    /// `(1 + k_sup)/(1 - k_sup)`, infinite when `k_sup ≥ 1`.
    #[serde(rename = "K")]
    pub dilatation: f64,
    pub degenerate_cells: usize,
}

impl BeltramiEstimate {
    pub fn is_valid(&self) -> bool {
        self.k_sup < 1.0
    }
}

pub fn dilatation_from_k(k: f64) -> f64 {
    if k < 1.0 {
        (1.0 + k) / (1.0 - k)
    } else {
        f64::INFINITY
    }
}

fn radial_derivative(col: impl Fn(usize) -> Complex64, i: usize, n: usize, h: f64) -> Complex64 {
    let f = |k: usize| col(k);
    let d = if i == 0 {
        -25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)
    } else if i == 1 {
        -3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)
    } else if i + 2 == n {
        3.0 * f(n - 1) + 10.0 * f(n - 2) - 18.0 * f(n - 3) + 6.0 * f(n - 4) - f(n - 5)
    } else if i + 1 == n {
        25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) - 16.0 * f(n - 4) + 3.0 * f(n - 5)
    } else {
        -f(i + 2) + 8.0 * f(i + 1) - 8.0 * f(i - 1) + f(i - 2)
    };
    d / (12.0 * h)
}

/// Derivative of a periodic sequence sampled at `2πk/M`, through its
/// discrete Fourier series; the Nyquist mode is dropped.
fn spectral_derivative(row: &[Complex64], forward: &[Complex64]) -> Vec<Complex64> {
    let m = row.len();
    let half = m / 2;
    let coeffs: Vec<Complex64> = (0..m)
        .map(|freq| {
            if m.is_multiple_of(2) && freq == half {
                return Complex64::new(0.0, 0.0);
            }
            let c: Complex64 = row.iter().enumerate().map(|(k, v)| v * forward[(freq * k) % m]).sum();
            let signed = if freq > half { freq as f64 - m as f64 } else { freq as f64 };
            c * Complex64::new(0.0, signed / m as f64)
        })
        .collect();
    (0..m).map(|k| coeffs.iter().enumerate().map(|(freq, c)| c * forward[(freq * k) % m].conj()).sum()).collect()
}

pub fn estimate_dilatation(map: &GridMap) -> BeltramiEstimate {
    let mesh = map.mesh;
    let (n, m) = (mesh.radial, mesh.angular);
    let ds = mesh.ds();
    let forward: Vec<Complex64> = (0..m).map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / m as f64)).collect();
    let ratio: Vec<Complex64> = (0..mesh.len()).map(|idx| map.values[idx] / mesh.point(idx / m, idx % m)).collect();
    let q_theta: Vec<Complex64> =
        (0..n).into_par_iter().flat_map_iter(|i| spectral_derivative(&ratio[i * m..(i + 1) * m], &forward)).collect();
    let mu: Vec<Option<Complex64>> = (0..mesh.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            let q_s = radial_derivative(|k| ratio[k * m + j], i, n, ds);
            let q_t = q_theta[idx];
            let i_unit = Complex64::i();
            // φ_z = Q + Q_w.
            let phi_z = ratio[idx] + (q_s - i_unit * q_t) * 0.5;
            let q_wbar = (q_s + i_unit * q_t) * 0.5;
            if phi_z.norm() < DEGENERATE_DERIVATIVE {
                return None;
            }
            Some(q_wbar / phi_z * Complex64::from_polar(1.0, 2.0 * mesh.theta(j)))
        })
        .collect();
    let degenerate_cells = mu.iter().filter(|v| v.is_none()).count();
    let k_sup = mu.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    BeltramiEstimate { mesh, mu, k_sup, dilatation: dilatation_from_k(k_sup), degenerate_cells }
}

/// CSV with columns `x,y,re,im,mu_re,mu_im`, one row per mesh node.
/// Degenerate cells have `nan` Beltrami entries.
pub fn write_csv<W: Write>(map: &GridMap, estimate: Option<&BeltramiEstimate>, out: &mut W) -> io::Result<()> {
    writeln!(out, "x,y,re,im,mu_re,mu_im")?;
    let mesh = map.mesh;
    for i in 0..mesh.radial {
        for j in 0..mesh.angular {
            let z = mesh.point(i, j);
            let v = map.value(i, j);
            let mu = estimate.and_then(|e| e.mu[mesh.index(i, j)]).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e}", z.re, z.im, v.re, v.im, mu.re, mu.im)?;
        }
    }
    Ok(())
}
