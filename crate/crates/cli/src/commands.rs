//! One function per subcommand. Each returns the artifacts to write and a
//! JSON summary; nothing here touches the filesystem.

use std::time::Instant;

use gasket_core::decimation::{enumerate_spectrum, EigenvalueDescriptor, Series};
use gasket_core::eigenbasis::{
    five_series_nonlocalized_candidates, localize_basis_with, orthonormality_check,
    six_series_counts, subspace_distance, EigenspaceFactory, Tolerances,
};
use gasket_core::experiments::{
    beta, beta_tilde, write_equidistribution_csv, SweepOutcome, SweepSpec, SzegoRunner,
    SAMPLE_LEVEL_CAP,
};
use gasket_core::laplacian::{assemble_dirichlet_laplacian, dirichlet_spectrum_at, LevelGraph};
use gasket_core::resistance::{holder_seminorm, ResistanceComputer};
use gasket_core::topology::{quadrature, write_cells_csv};
use gasket_core::{Gasket, GasketFunction};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{parse_range, ExperimentConfig, ModeKind};
use crate::output::Artifact;
use crate::spec::{FunctionSpec, FunctionalSpec};
use crate::CliError;

pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

fn buffer(f: impl FnOnce(&mut Vec<u8>) -> gasket_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    f(&mut out)?;
    Ok(out)
}

fn tolerances(c: &ExperimentConfig) -> Tolerances {
    Tolerances {
        nullspace: c.tolerances.nullspace,
        cluster: c.tolerances.cluster,
    }
}

fn range(text: &str) -> Result<std::ops::RangeInclusive<usize>, CliError> {
    parse_range(text).map_err(CliError::invalid_field("range"))
}

fn series(c: &ExperimentConfig) -> Result<Series, CliError> {
    c.series.parse().map_err(CliError::invalid_field("series"))
}

fn function(c: &ExperimentConfig) -> Result<FunctionSpec, CliError> {
    FunctionSpec::parse(&c.function).map_err(CliError::invalid_field("function"))
}

pub fn topology(c: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let m = c.m;
    let q = quadrature(m);
    let vertices = buffer(|b| q.write_csv(b))?;
    let cells = buffer(|b| write_cells_csv(m, b))?;
    let mut artifacts = vec![
        Artifact::text("vertices.csv", vertices),
        Artifact::text("cells.csv", cells),
    ];
    if m >= 1 {
        let gasket = Gasket::<f64>::new(m);
        let lap = assemble_dirichlet_laplacian::<i64>(&LevelGraph::new(&gasket, m)?);
        artifacts.push(Artifact::text(
            "laplacian.txt",
            buffer(|b| lap.write_coordinate(b))?,
        ));
    }
    let weight_sum: f64 = q.weights::<f64>().iter().sum();
    Ok(CommandOutput {
        artifacts,
        summary: json!({
            "command": "topology",
            "m": m,
            "vertices": q.vertices().len(),
            "interior_vertices": q.vertices().len() - 3,
            "cells": 3usize.pow(m as u32),
            "weight_sum": weight_sum,
        }),
    })
}

pub fn spectrum(c: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let m = c.m;
    let table = enumerate_spectrum::<f64>(m)?;
    let expected = (3usize.pow(m as u32 + 1) - 3) / 2;
    let mut artifacts = vec![Artifact::text(
        "spectrum.csv",
        buffer(|b| table.write_csv(b))?,
    )];
    let mut summary = json!({
        "command": "spectrum",
        "m": m,
        "distinct_eigenvalues": table.entries().len(),
        "total_multiplicity": table.total_multiplicity(),
        "expected_total": expected,
    });
    if c.dense && m <= 6 {
        let gasket = Gasket::<f64>::new(m);
        let dense = dirichlet_spectrum_at(&gasket, m)?;
        let decimated = table.gamma_multiset();
        let max_diff = decimated
            .iter()
            .zip(&dense.eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let trace: f64 = dense.eigenvalues.iter().sum();
        let trace_target = 4.0 * expected as f64;
        summary["dense_max_deviation"] = json!(max_diff);
        summary["dense_matches"] =
            json!(decimated.len() == dense.eigenvalues.len() && max_diff <= c.tolerances.residual);
        summary["trace_relative_error"] = json!((trace - trace_target).abs() / trace_target);
        artifacts.push(Artifact::text("dense.csv", buffer(|b| dense.write_csv(b))?));
    }
    Ok(CommandOutput { artifacts, summary })
}

pub fn basis(c: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let j = *range(&c.j_range)?.start();
    let series = series(c)?;
    let m_q = c.m_q.unwrap_or(j);
    let mut factory = EigenspaceFactory::<f64>::new(m_q).with_tolerances(tolerances(c));
    let descriptor = EigenvalueDescriptor::lowest(series, j, j)?;
    let raw = factory.eigenspace_vectors(&descriptor, m_q)?;
    let basis = localize_basis_with(&raw, factory.gasket(), c.scale, c.tolerances.nullspace)?;

    let lap = assemble_dirichlet_laplacian::<f64>(&LevelGraph::new(factory.gasket(), m_q)?);
    let gamma = raw.descriptor.gamma_m();
    let residual = |v: DVector<f64>| {
        let v = &v / v.amax();
        lap.eigen_residual(&v, gamma)
    };
    let max_residual = (0..basis.dimension())
        .map(|k| residual(basis.vectors.column(k).into_owned()))
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let random_residual = (0..16)
        .map(|_| {
            let coeffs = DVector::from_fn(basis.dimension(), |_, _| rng.random_range(-1.0..1.0));
            residual(&basis.vectors * coeffs)
        })
        .fold(0.0, f64::max);
    let oracle_distance = if m_q <= 6 {
        let dense = factory.eigenspace_vectors_dense(&descriptor, m_q)?;
        Some(subspace_distance(&raw.vectors, &dense.vectors))
    } else {
        None
    };
    let formula = match series {
        Series::Six if c.scale < j => {
            let f = six_series_counts(j, c.scale);
            json!({"total": f.total, "localized": f.localized, "nonlocalized": f.nonlocalized, "per_cell": f.per_cell})
        }
        Series::Five => {
            let [minus, plus] = five_series_nonlocalized_candidates(c.scale);
            json!({"nonlocalized_candidates": {"(3^N-3)/2": minus, "(3^N+3)/2": plus}})
        }
        _ => Value::Null,
    };
    let csv = buffer(|b| basis.write_csv(factory.gasket(), b))?;
    Ok(CommandOutput {
        artifacts: vec![Artifact::text("basis.csv", csv)],
        summary: json!({
            "command": "basis",
            "series": series.label(),
            "j": j,
            "N": c.scale,
            "sample_level": m_q,
            "dimension": basis.dimension(),
            "localized": basis.localized_count(),
            "nonlocalized": basis.nonlocalized_count(),
            "cell_dimensions": basis.cell_dimensions,
            "unlocalized_warning": basis.unlocalized_warning,
            "orthonormality_deviation": orthonormality_check(&basis),
            "max_eigen_residual": max_residual,
            "random_combination_residual": random_residual,
            "oracle_subspace_distance": oracle_distance,
            "max_null_singular": basis.max_null_singular,
            "min_kept_singular": basis.min_kept_singular,
            "formulas": formula,
        }),
    })
}

fn runner(c: &ExperimentConfig) -> SzegoRunner<f64> {
    let mut r = SzegoRunner::with_tolerances(SAMPLE_LEVEL_CAP + 1, tolerances(c));
    r.set_sample_level(c.m_q);
    r
}

fn sweep_summary(c: &ExperimentConfig, outcome: &SweepOutcome, spec: &FunctionSpec) -> Value {
    let b = beta(c.alpha);
    let bt = beta_tilde(c.alpha);
    let tol = &c.tolerances;
    let records = &outcome.records;
    let bound_holds = records
        .iter()
        .all(|r| r.error_bound.is_none_or(|bound| r.error <= bound));
    let structure_ok = records
        .iter()
        .all(|r| r.structure_coupling.is_none_or(|s| s <= tol.structure));
    let blocks_ok = records
        .iter()
        .all(|r| r.block_consistency.is_none_or(|s| s <= 1e-8));
    let eigen_ok = records.iter().all(|r| r.eigen_gap <= 1e-8);
    let decreasing = records.windows(2).all(|w| w[1].error < w[0].error);
    json!({
        "command": "szego",
        "mode": match c.mode { ModeKind::Single => "single", ModeKind::Cutoff => "cutoff" },
        "function": c.function,
        "N": c.scale,
        "records": records,
        "fit": outcome.fit,
        "beta": b,
        "beta_threshold": 0.8 * b,
        "beta_tilde": bt,
        "d_error_ratio": outcome.d_error_ratio(),
        "error_bound_holds": bound_holds,
        "structure_ok": structure_ok,
        "block_consistency_ok": blocks_ok,
        "logdet_matches_eigenvalues": eigen_ok,
        "errors_decreasing": decreasing,
        "constant_exact": matches!(spec, FunctionSpec::Constant(_))
            .then(|| records.iter().all(|r| r.error <= tol.exact)),
        "warnings": outcome.warnings,
        "timestamp_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

pub fn szego(c: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let spec = function(c)?;
    let mut runner = runner(c);
    let f = spec
        .build(runner.gasket())
        .map_err(CliError::invalid_field("function"))?;
    let simple = spec.simple();
    let sweep = SweepSpec {
        f: &*f,
        simple: simple.as_ref(),
        scale: c.scale,
    };
    let start = Instant::now();
    let outcome = match c.mode {
        ModeKind::Single => runner.single_sweep(&sweep, series(c)?, range(&c.j_range)?)?,
        ModeKind::Cutoff => runner.cutoff_sweep(&sweep, range(&c.m_range)?)?,
    };
    let mut summary = sweep_summary(c, &outcome, &spec);
    summary["runtime_s"] = json!(start.elapsed().as_secs_f64());
    Ok(CommandOutput {
        artifacts: vec![
            Artifact::text("sweep.csv", buffer(|b| outcome.write_csv(b))?),
            Artifact::text("plot.dat", buffer(|b| outcome.write_plot_data(b))?),
        ],
        summary,
    })
}

pub fn equidist(c: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let spec = function(c)?;
    let functional =
        FunctionalSpec::parse(&c.functional).map_err(CliError::invalid_field("functional"))?;
    let big_f = functional
        .build()
        .map_err(CliError::invalid_field("functional"))?;
    let mut runner = runner(c);
    let f = spec
        .build(runner.gasket())
        .map_err(CliError::invalid_field("function"))?;
    let sweep = SweepSpec {
        f: &*f,
        simple: None,
        scale: c.scale,
    };
    let label = functional.label();
    let records = match c.mode {
        ModeKind::Single => runner.single_equidistribution(
            &sweep,
            series(c)?,
            range(&c.j_range)?,
            &*big_f,
            &label,
        )?,
        ModeKind::Cutoff => {
            runner.cutoff_equidistribution(&sweep, range(&c.m_range)?, &*big_f, &label)?
        }
    };
    let decreasing = records
        .windows(2)
        .all(|w| w[1].integral_gap <= w[0].integral_gap);
    let last = records.last();
    Ok(CommandOutput {
        artifacts: vec![Artifact::text(
            "equidist.csv",
            buffer(|b| write_equidistribution_csv(&records, b))?,
        )],
        summary: json!({
            "command": "equidist",
            "functional": label,
            "function": c.function,
            "records": records,
            "last_integral_gap": last.map(|r| r.integral_gap),
            "last_riemann_gap": last.map(|r| r.riemann_gap),
            "integral_gap_decreasing": decreasing,
        }),
    })
}

pub fn resistance(c: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let m = c.m;
    let gasket = Gasket::<f64>::new(m);
    let rc = ResistanceComputer::new(&gasket, m)?;
    let mut csv = b"x,y,resistance\n".to_vec();
    let mut boundary = Vec::new();
    for (x, y) in [(0, 1), (0, 2), (1, 2)] {
        let r = rc.between(x, y);
        boundary.push(r);
        csv.extend(
            format!(
                "{},{},{}\n",
                gasket.vertex_id(x, m),
                gasket.vertex_id(y, m),
                r
            )
            .into_bytes(),
        );
    }
    let n = gasket.vertex_count(m);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (a, b, d) = (
            rng.random_range(0..n),
            rng.random_range(0..n),
            rng.random_range(0..n),
        );
        worst = worst.max(rc.between(a, d) - rc.between(a, b) - rc.between(b, d));
    }
    let spec = function(c)?;
    let f = spec
        .build(&gasket)
        .map_err(CliError::invalid_field("function"))?;
    let sampled = f.sample(&gasket, m)?;
    let seminorm = holder_seminorm(&sampled, &rc, c.alpha)?;
    Ok(CommandOutput {
        artifacts: vec![Artifact::text("resistance.csv", csv)],
        summary: json!({
            "command": "resistance",
            "m": m,
            "boundary_resistances": boundary,
            "max_boundary_deviation": boundary.iter().map(|r| (r - 2.0 / 3.0).abs()).fold(0.0, f64::max),
            "triangle_inequality_worst_excess": worst,
            "triangle_inequality_holds": worst <= 1e-12,
            "function": c.function,
            "alpha": c.alpha,
            "holder_seminorm": seminorm,
        }),
    })
}
