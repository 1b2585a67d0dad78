use gasket_core::{
    assemble_compressed, enumerate_spectrum, localize_basis, Constant, EigenspaceFactory,
    EigenvalueDescriptor, GasketFunction, Series, SimpleFunction, SweepSpec, SzegoRunner,
};

#[test]
fn localized_columns_reproduce_cell_values() {
    let coeffs = vec![1.0, 2.0, 3.0];
    let f = SimpleFunction::new(1, coeffs.clone()).unwrap();
    let mut factory = EigenspaceFactory::<f64>::new(4);
    let d = EigenvalueDescriptor::lowest(Series::Six, 4, 4).unwrap();
    let raw = factory.eigenspace_vectors(&d, 4).unwrap();
    let basis = localize_basis(&raw, factory.gasket(), 1).unwrap();
    let op = assemble_compressed(&basis, &f.sample(factory.gasket(), 4).unwrap()).unwrap();
    let eig = op.eigenvalues();
    for (cell, &a) in coeffs.iter().enumerate() {
        let hits = eig.iter().filter(|&&e| (e - a).abs() < 1e-10).count();
        assert!(hits >= basis.cell_dimensions[cell], "cell {cell}: {hits}");
    }
    // each 1-cell carries (3^3 − 3)/2 localized functions
    assert_eq!(basis.cell_dimensions, vec![12, 12, 12]);
}

#[test]
fn simple_function_sweep_respects_error_bound() {
    let f = SimpleFunction::new(1, vec![1.0, 2.0, 3.0]).unwrap();
    let exact = 6f64.ln() / 3.0;
    let mut runner = SzegoRunner::<f64>::with_levels(6);
    let spec = SweepSpec {
        f: &f,
        simple: Some(&f),
        scale: 1,
    };
    let out = runner.single_sweep(&spec, Series::Six, 2..=4).unwrap();
    assert_eq!(out.records.len(), 3);
    for r in &out.records {
        assert!((r.integral - exact).abs() < 1e-12);
        assert!(r.error <= r.error_bound.unwrap());
        assert!(r.structure_coupling.unwrap() < 1e-10);
        assert_eq!(r.nonlocalized, Some(3));
    }
    assert!(out.records.windows(2).all(|w| w[1].error < w[0].error));
}

#[test]
fn constant_multiplier_is_exact_in_both_modes() {
    let c = Constant(3.25);
    let mut runner = SzegoRunner::<f64>::with_levels(5);
    let spec = SweepSpec {
        f: &c,
        simple: None,
        scale: 1,
    };
    let single = runner.single_sweep(&spec, Series::Five, 2..=3).unwrap();
    let cutoff = runner.cutoff_sweep(&spec, 2..=3).unwrap();
    for r in single.records.iter().chain(&cutoff.records) {
        assert!((r.logdet_over_d - 3.25f64.ln()).abs() < 1e-9);
    }
}

#[test]
fn single_precision_instantiation() {
    let t = enumerate_spectrum::<f32>(3).unwrap();
    assert_eq!(t.total_multiplicity(), 39);
    let sum: f32 = t.gamma_multiset().iter().sum();
    assert!((sum - 156.0).abs() / 156.0 < 1e-5);
}
