mod common;

use common::{as_f64, eigen_residuals, oracle_laplacian, oracle_spectrum};
use gasket_core::laplacian::dirichlet_spectrum_at;
use gasket_core::{
    assemble_dirichlet_laplacian, enumerate_spectrum, EigenspaceFactory, EigenvalueDescriptor,
    Gasket, LevelGraph, Series, Sign,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn assembled_laplacian_matches_geometric_graph() {
    let g = Gasket::<f64>::new(6);
    for m in 1..=5 {
        let graph = LevelGraph::new(&g, m).unwrap();
        let lap = assemble_dirichlet_laplacian::<i64>(&graph);
        assert_eq!(lap.matrix(), &oracle_laplacian(&g, m), "level {m}");
    }
}

#[test]
fn decimation_multiset_matches_dense_spectrum() {
    let g = Gasket::<f64>::new(6);
    for m in 1..=5 {
        let table = enumerate_spectrum::<f64>(m).unwrap();
        let gammas = table.gamma_multiset();
        let oracle = oracle_spectrum(&g, m);
        assert_eq!(gammas.len(), (3usize.pow(m as u32 + 1) - 3) / 2);
        assert_eq!(gammas.len(), oracle.len());
        let worst = gammas
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "level {m}: deviation {worst:e}");
    }
}

#[test]
fn library_dense_solver_agrees_with_oracle() {
    let g = Gasket::<f64>::new(5);
    for m in 1..=4 {
        let dense = dirichlet_spectrum_at(&g, m).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(oracle_spectrum(&g, m)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn trace_identity() {
    let g = Gasket::<f64>::new(6);
    for m in 1..=5 {
        let n = (3usize.pow(m as u32 + 1) - 3) / 2;
        let sum: f64 = oracle_spectrum(&g, m).iter().sum();
        let expected = 4.0 * n as f64;
        assert!((sum - expected).abs() / expected < 1e-8);
        let table: f64 = enumerate_spectrum::<f64>(m)
            .unwrap()
            .gamma_multiset()
            .iter()
            .sum();
        assert!((table - expected).abs() / expected < 1e-8);
    }
}

#[test]
fn series_counts_at_level_four() {
    let t = enumerate_spectrum::<f64>(4).unwrap();
    assert_eq!(t.count(Series::Two, 1), 8);
    assert_eq!(t.count(Series::Five, 1), 8);
    assert_eq!(t.count(Series::Five, 4), 1);
    assert_eq!(t.count(Series::Six, 2), 2);
    assert_eq!(t.count(Series::Six, 4), 1);
}

/// A random admissible descriptor born at or below `max_birth`.
pub fn random_descriptor(
    rng: &mut ChaCha8Rng,
    max_birth: usize,
    level: usize,
) -> EigenvalueDescriptor<f64> {
    let series = [Series::Two, Series::Five, Series::Six][rng.random_range(0..3)];
    let birth = match series {
        Series::Two => 1,
        Series::Five => rng.random_range(1..=max_birth),
        Series::Six => rng.random_range(2..=max_birth),
    };
    let free = level.saturating_sub(birth);
    let mut signs: Vec<Sign> = (0..free)
        .map(|_| {
            if rng.random_bool(0.5) {
                Sign::Plus
            } else {
                Sign::Minus
            }
        })
        .collect();
    if series == Series::Six {
        match signs.first_mut() {
            Some(s) => *s = Sign::Plus,
            None => signs.push(Sign::Plus),
        }
    }
    EigenvalueDescriptor::new(series, birth, signs, level).unwrap()
}

#[test]
fn random_extended_eigenfunctions_have_small_residual() {
    let g = Gasket::<f64>::new(6);
    let laps: Vec<_> = (0..=5)
        .map(|m| {
            if m == 0 {
                None
            } else {
                Some(as_f64(&oracle_laplacian(&g, m)))
            }
        })
        .collect();
    let mut factory = EigenspaceFactory::<f64>::new(5);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 200 {
        let m_q = rng.random_range(2..=5);
        let d = random_descriptor(&mut rng, m_q.min(4), m_q);
        let raw = factory.eigenspace_vectors(&d, m_q).unwrap();
        assert_eq!(raw.vectors.ncols(), d.multiplicity());
        let c = rng.random_range(0..raw.vectors.ncols());
        let col = raw.vectors.columns(c, 1).into_owned();
        let res = eigen_residuals(laps[m_q].as_ref().unwrap(), &col, d.gamma_m());
        assert!(res[0] <= 1e-9, "{:?} at {m_q}: {:e}", d.sign_word(), res[0]);
        checked += 1;
    }
}
