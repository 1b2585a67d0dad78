mod common;

use common::{as_f64, eigen_residuals, oracle_laplacian};
use gasket_core::operator::block_structure;
use gasket_core::{
    assemble_compressed, gamma_step, localize_basis, orthonormality_check, CellAddress,
    EigenspaceFactory, EigenvalueDescriptor, Gasket, GasketFunction, Series, Sign, SimpleFunction,
    VertexId,
};
use proptest::prelude::*;

fn corner(c: u8) -> [f64; 2] {
    match c {
        1 => [0.0, 0.0],
        2 => [1.0, 0.0],
        _ => [0.5, 3f64.sqrt() / 2.0],
    }
}

/// `F_w(q_c)` with `F_i(x) = (x + q_i) / 2`.
fn point(word: &[u8], c: u8) -> [f64; 2] {
    word.iter().rev().fold(corner(c), |p, &s| {
        let q = corner(s);
        [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
    })
}

fn close(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
}

fn word(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(1u8..=3, 0..=max)
}

fn signs(len: usize) -> impl Strategy<Value = Vec<Sign>> {
    prop::collection::vec(prop::bool::ANY, len).prop_map(|b| {
        b.into_iter()
            .map(|p| if p { Sign::Plus } else { Sign::Minus })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_ids_name_points(w1 in word(5), c1 in 1u8..=3, w2 in word(5), c2 in 1u8..=3) {
        let m = w1.len().max(w2.len());
        let pad = |w: &[u8], c: u8| { let mut w = w.to_vec(); w.resize(m, c); w };
        let (w1, w2) = (pad(&w1, c1), pad(&w2, c2));
        let a = VertexId::new(CellAddress::new(w1.clone()).unwrap(), c1).unwrap();
        let b = VertexId::new(CellAddress::new(w2.clone()).unwrap(), c2).unwrap();
        prop_assert!(close(a.position(), point(&w1, c1)));
        prop_assert_eq!(a == b, close(point(&w1, c1), point(&w2, c2)));
        prop_assert_eq!(a.lift().at_level(m), Some(a.clone()));
    }

    #[test]
    fn shared_vertex_has_one_id(prefix in word(3), a in 1u8..=3, c in 1u8..=3, run in 0usize..3) {
        prop_assume!(a != c);
        let mut first = prefix.clone();
        first.push(a);
        first.extend(std::iter::repeat_n(c, run));
        let mut second = prefix;
        second.push(c);
        second.extend(std::iter::repeat_n(a, run));
        let x = VertexId::new(CellAddress::new(first).unwrap(), c).unwrap();
        let y = VertexId::new(CellAddress::new(second).unwrap(), a).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn coarse_vertices_are_a_prefix(m in 1usize..=5) {
        let g = Gasket::<f64>::new(5);
        let coarse = g.vertex_ids(m - 1);
        let fine = g.vertex_ids(m);
        for (c, f) in coarse.iter().zip(&fine) {
            prop_assert_eq!(&c.lift(), f);
        }
    }

    #[test]
    fn gamma_step_branches(gamma in 0.0f64..=6.25) {
        let plus = gamma_step(gamma, Sign::Plus).unwrap();
        let minus = gamma_step(gamma, Sign::Minus).unwrap();
        prop_assert!((2.5..=5.0).contains(&plus));
        prop_assert!((0.0..=2.5).contains(&minus));
        for g in [plus, minus] {
            prop_assert!((g * (5.0 - g) - gamma).abs() <= 1e-12 * gamma.max(1.0));
        }
    }

    #[test]
    fn gamma_step_rejects_negative_discriminant(gamma in 6.2501f64..100.0) {
        prop_assert!(gamma_step(gamma, Sign::Plus).is_err());
    }

    #[test]
    fn extension_is_an_eigenfunction(
        series in prop::sample::select(vec![Series::Two, Series::Five, Series::Six]),
        birth in 1usize..=3,
        extra in 0usize..=2,
        s in signs(3),
    ) {
        let birth = birth.max(series.min_birth());
        let birth = if series == Series::Two { 1 } else { birth };
        let level = birth + extra;
        let mut s: Vec<Sign> = s.into_iter().take(extra).collect();
        if series == Series::Six {
            if s.is_empty() { s.push(Sign::Plus) } else { s[0] = Sign::Plus }
        }
        let d = EigenvalueDescriptor::<f64>::new(series, birth, s, level).unwrap();
        let g = Gasket::<f64>::new(level + 1);
        let mut factory = EigenspaceFactory::<f64>::new(level);
        let raw = factory.eigenspace_vectors(&d, level).unwrap();
        let lap = as_f64(&oracle_laplacian(&g, level));
        for r in eigen_residuals(&lap, &raw.vectors, d.gamma_m()) {
            prop_assert!(r <= 1e-9, "residual {r:e}");
        }
    }

    #[test]
    fn localized_bases_are_orthonormal(birth in 2usize..=4, scale in 1usize..=3, m_q in 0usize..=1) {
        prop_assume!(scale < birth);
        let m_q = birth + m_q;
        let mut factory = EigenspaceFactory::<f64>::new(m_q);
        let d = EigenvalueDescriptor::lowest(Series::Six, birth, m_q).unwrap();
        let raw = factory.eigenspace_vectors(&d, m_q).unwrap();
        let basis = localize_basis(&raw, factory.gasket(), scale).unwrap();
        prop_assert_eq!(basis.dimension(), Series::Six.multiplicity(birth));
        prop_assert!(orthonormality_check(&basis) < 1e-10);
    }

    #[test]
    fn compressed_operator_spectrum_lies_in_range(
        coeffs in prop::collection::vec(0.1f64..10.0, 3),
        birth in 2usize..=4,
    ) {
        let f = SimpleFunction::new(1, coeffs.clone()).unwrap();
        let mut factory = EigenspaceFactory::<f64>::new(birth);
        let d = EigenvalueDescriptor::lowest(Series::Six, birth, birth).unwrap();
        let raw = factory.eigenspace_vectors(&d, birth).unwrap();
        let basis = localize_basis(&raw, factory.gasket(), 1).unwrap();
        let sampled = f.sample(factory.gasket(), birth).unwrap();
        let op = assemble_compressed(&basis, &sampled).unwrap();
        let (lo, hi) = (sampled.min(), sampled.max());
        for e in op.eigenvalues() {
            prop_assert!(e >= lo - 1e-10 && e <= hi + 1e-10);
        }
        let chol = op.log_det().unwrap();
        let eig = op.log_det_eigen().unwrap();
        prop_assert!((chol - eig).abs() <= 1e-9 * chol.abs().max(1.0));
        let st = block_structure(&op.blocks[0], &basis, &f).unwrap();
        prop_assert!(st.localized_deviation < 1e-10 && st.coupling < 1e-10);
    }
}
