//! Independent oracles built from vertex positions only.

#![allow(dead_code)]

use std::collections::HashSet;

use gasket_core::Gasket;
use nalgebra::{DMatrix, DVector};

/// Lattice key of a point: the gasket lives on a triangular lattice, so
/// `(2x, 2y/√3)` scaled by `2^(m+1)` is integral for points of `V_{m+1}`.
fn key(p: [f64; 2], m: usize) -> (i64, i64) {
    let s = f64::from(1u32 << (m + 1));
    (
        (2.0 * p[0] * s).round() as i64,
        (2.0 * p[1] * s / 3f64.sqrt()).round() as i64,
    )
}

/// Edges of the level-`m` graph from geometry: two vertices are adjacent when
/// they sit `2^{-m}` apart and the midpoint of the segment is in `V_{m+1}`.
pub fn geometric_edges(gasket: &Gasket<f64>, m: usize) -> Vec<(usize, usize)> {
    let fine: HashSet<(i64, i64)> = gasket.positions(m + 1).iter().map(|&p| key(p, m)).collect();
    let pts = gasket.positions(m);
    let h = 0.5f64.powi(m as i32);
    let mut edges = Vec::new();
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            let (pa, pb) = (pts[a], pts[b]);
            let dist = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            if (dist - h).abs() > 1e-9 * h {
                continue;
            }
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            if fine.contains(&key(mid, m)) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// `Δ_m` restricted to interior vertices (`u(x) ↦ Σ_{y∼x} u(y) − u(x)`).
pub fn oracle_laplacian(gasket: &Gasket<f64>, m: usize) -> DMatrix<i64> {
    let n = gasket.positions(m).len() - 3;
    let mut l = DMatrix::<i64>::zeros(n, n);
    for (a, b) in geometric_edges(gasket, m) {
        if a >= 3 {
            l[(a - 3, a - 3)] -= 1;
        }
        if b >= 3 {
            l[(b - 3, b - 3)] -= 1;
        }
        if a >= 3 && b >= 3 {
            l[(a - 3, b - 3)] += 1;
            l[(b - 3, a - 3)] += 1;
        }
    }
    l
}

pub fn as_f64(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|x| x as f64)
}

/// Ascending eigenvalues of `−Δ_m` from the geometric Laplacian.
pub fn oracle_spectrum(gasket: &Gasket<f64>, m: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = (-as_f64(&oracle_laplacian(gasket, m)))
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// `‖−Δ u − γ u‖_∞ / ‖u‖_∞` for each column, against the geometric Laplacian.
pub fn eigen_residuals(lap: &DMatrix<f64>, vectors: &DMatrix<f64>, gamma: f64) -> Vec<f64> {
    vectors
        .column_iter()
        .map(|c| {
            let u: DVector<f64> = c.into_owned();
            let r = -(lap * &u) - &u * gamma;
            r.amax() / u.amax()
        })
        .collect()
}

/// Effective resistance on the full level-`m` network with conductance
/// `(5/3)^m` per edge, by grounding `y` and solving for a unit current.
pub fn oracle_resistance(gasket: &Gasket<f64>, m: usize, x: usize, y: usize) -> f64 {
    if x == y {
        return 0.0;
    }
    let n = gasket.positions(m).len();
    let c = (5.0f64 / 3.0).powi(m as i32);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for (a, b) in geometric_edges(gasket, m) {
        l[(a, a)] += c;
        l[(b, b)] += c;
        l[(a, b)] -= c;
        l[(b, a)] -= c;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != y).collect();
    let reduced = l.select_rows(&keep).select_columns(&keep);
    let mut rhs = DVector::<f64>::zeros(n - 1);
    let xi = keep.iter().position(|&i| i == x).unwrap();
    rhs[xi] = 1.0;
    let v = reduced
        .cholesky()
        .expect("grounded Laplacian is SPD")
        .solve(&rhs);
    v[xi]
}
