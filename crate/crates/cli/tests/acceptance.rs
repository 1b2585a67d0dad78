//! Acceptance suite: one PASS/FAIL line per criterion.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gasket_core::eigenbasis::{five_series_nonlocalized_candidates, six_series_counts};
use gasket_core::laplacian::dirichlet_spectrum_at;
use gasket_core::{
    assemble_dirichlet_laplacian, beta, beta_tilde, enumerate_spectrum, Constant,
    EigenvalueDescriptor, Gasket, HarmonicFunction, LevelGraph, ResistanceComputer, Series, Sign,
    SimpleFunction, SweepSpec, SzegoRunner,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaps at or below this are round-off, not signal.
const ROUND_OFF: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0] || w[1] <= ROUND_OFF)
}

fn spectrum_oracle() -> Outcome {
    let start = Instant::now();
    let g = Gasket::<f64>::new(5);
    let mut worst = 0.0f64;
    let mut counts_ok = true;
    for m in 1..=5 {
        let table = enumerate_spectrum::<f64>(m).unwrap().gamma_multiset();
        let dense = dirichlet_spectrum_at(&g, m).unwrap().eigenvalues;
        counts_ok &=
            table.len() == (3usize.pow(m as u32 + 1) - 3) / 2 && table.len() == dense.len();
        for (a, b) in table.iter().zip(&dense) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && counts_ok && secs < 60.0,
        format!("max |γ_table − γ_dense| = {worst:.2e}, counts ok = {counts_ok}, {secs:.2}s"),
    )
}

fn trace_identity() -> Outcome {
    let g = Gasket::<f64>::new(5);
    let mut worst = 0.0f64;
    for m in 1..=5 {
        let sum: f64 = dirichlet_spectrum_at(&g, m)
            .unwrap()
            .eigenvalues
            .iter()
            .sum();
        let expected = 4.0 * ((3usize.pow(m as u32 + 1) - 3) / 2) as f64;
        worst = worst.max((sum - expected).abs() / expected);
    }
    outcome(
        worst < 1e-8,
        format!("max relative trace error = {worst:.2e}"),
    )
}

fn random_descriptor(rng: &mut ChaCha8Rng, level: usize) -> EigenvalueDescriptor<f64> {
    let series = [Series::Two, Series::Five, Series::Six][rng.random_range(0..3)];
    let birth = match series {
        Series::Two => 1,
        Series::Five => rng.random_range(1..=level),
        Series::Six => rng.random_range(2..=level),
    };
    let mut signs: Vec<Sign> = (0..level - birth)
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

fn extension_residuals() -> Outcome {
    let mut runner = SzegoRunner::<f64>::with_levels(6);
    let laps: Vec<_> = (1..=6)
        .map(|m| assemble_dirichlet_laplacian::<f64>(&LevelGraph::new(runner.gasket(), m).unwrap()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let level = rng.random_range(2..=6);
        let d = random_descriptor(&mut rng, level);
        let raw = runner.factory().eigenspace_vectors(&d, level).unwrap();
        let col = rng.random_range(0..raw.vectors.ncols());
        let v: DVector<f64> = raw.vectors.column(col).into_owned();
        let r = laps[level - 1].eigen_residual(&v, d.gamma_m()) / v.amax();
        worst = worst.max(r);
    }
    outcome(
        worst <= 1e-9,
        format!("200 eigenfunctions, max relative residual = {worst:.2e}"),
    )
}

fn six_series_dimensions() -> Outcome {
    let mut runner = SzegoRunner::<f64>::with_levels(6);
    let mut bad = Vec::new();
    let mut checked = 0;
    for j in 2..=6 {
        for n in 1..j {
            let basis = runner.single_basis(Series::Six, j, n, j).unwrap();
            let expected = six_series_counts(j, n);
            let per_cell = (3usize.pow((j - n) as u32) - 3) / 2;
            let ok = basis.localized_count()
                == (3usize.pow(j as u32) - 3usize.pow(n as u32 + 1)) / 2
                && basis.localized_count() == expected.localized
                && basis.cell_dimensions.iter().all(|&c| c == per_cell);
            if !ok {
                bad.push(format!("(j={j}, N={n})"));
            }
            checked += 1;
        }
    }
    outcome(
        bad.is_empty(),
        format!("{checked} (j, N) pairs checked, mismatches: {bad:?}"),
    )
}

fn five_series_alpha() -> Outcome {
    let mut runner = SzegoRunner::<f64>::with_levels(6);
    let mut matches = [true, true];
    let mut seen = Vec::new();
    for j in 2..=6 {
        for n in 1..j {
            let alpha = runner
                .single_basis(Series::Five, j, n, j)
                .unwrap()
                .nonlocalized_count();
            let candidates = five_series_nonlocalized_candidates(n);
            matches[0] &= alpha == candidates[0];
            matches[1] &= alpha == candidates[1];
            seen.push(format!("j={j},N={n}:{alpha}"));
        }
    }
    let which = match matches {
        [true, false] => "(3^N−3)/2",
        [false, true] => "(3^N+3)/2",
        _ => "neither/both",
    };
    outcome(
        matches[0] != matches[1],
        format!("oracle α matches {which}; {}", seen.join(" ")),
    )
}

fn simple_function_bound() -> Outcome {
    let start = Instant::now();
    let f = SimpleFunction::new(1, vec![1.0, 2.0, 3.0]).unwrap();
    let mut runner = SzegoRunner::<f64>::new();
    let spec = SweepSpec {
        f: &f,
        simple: Some(&f),
        scale: 1,
    };
    let out = runner.single_sweep(&spec, Series::Six, 2..=6).unwrap();
    let bound_ok = out
        .records
        .iter()
        .all(|r| r.error <= r.error_bound.unwrap());
    let ratio = out.d_error_ratio().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let errors: Vec<String> = out
        .records
        .iter()
        .map(|r| format!("{:.2e}", r.error))
        .collect();
    outcome(
        bound_ok && ratio < 10.0 && secs < 300.0 && out.records.len() == 5,
        format!(
            "errors [{}], bound holds = {bound_ok}, d·error max/min = {ratio:.3}, {secs:.1}s",
            errors.join(", ")
        ),
    )
}

fn harmonic(g: &Gasket<f64>) -> HarmonicFunction<f64> {
    HarmonicFunction::new(g, [1.0, 1.5, 2.0]).unwrap()
}

fn harmonic_rate() -> Outcome {
    let mut runner = SzegoRunner::<f64>::new();
    let f = harmonic(runner.gasket());
    let spec = SweepSpec {
        f: &f,
        simple: None,
        scale: 1,
    };
    let out = runner.single_sweep(&spec, Series::Six, 2..=6).unwrap();
    let fit = out.fit.unwrap();
    let target = 0.8 * beta(1.0);
    outcome(
        fit.beta >= target,
        format!(
            "fitted β = {:.4} (R² = {:.4}) vs 0.8·β = {target:.4}",
            fit.beta, fit.r_squared
        ),
    )
}

fn cutoff_mode() -> Outcome {
    let mut runner = SzegoRunner::<f64>::new();
    let f = harmonic(runner.gasket());
    let spec = SweepSpec {
        f: &f,
        simple: None,
        scale: 1,
    };
    let out = runner.cutoff_sweep(&spec, 2..=5).unwrap();
    let errors: Vec<f64> = out.records.iter().map(|r| r.error).collect();
    let consistency = out
        .records
        .iter()
        .map(|r| r.block_consistency.unwrap())
        .fold(0.0, f64::max);
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let fit = out.fit.unwrap();
    outcome(
        monotone && consistency <= 1e-8,
        format!(
            "errors {:?}, block consistency = {consistency:.2e}, fitted β = {:.4} (R² = {:.4}) vs β̃ = {:.4}",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            fit.beta,
            fit.r_squared,
            beta_tilde(1.0)
        ),
    )
}

fn equidistribution() -> Outcome {
    let mut runner = SzegoRunner::<f64>::new();
    let f = harmonic(runner.gasket());
    let spec = SweepSpec {
        f: &f,
        simple: None,
        scale: 1,
    };
    let square = |x: f64| x * x;
    let identity = |x: f64| x;
    let mut pass = true;
    let mut notes = Vec::new();
    for (label, functional) in [("x", &identity as &dyn Fn(f64) -> f64), ("x²", &square)] {
        let single = runner
            .single_equidistribution(&spec, Series::Six, 2..=6, functional, label)
            .unwrap();
        let cutoff = runner
            .cutoff_equidistribution(&spec, 2..=5, functional, label)
            .unwrap();
        for (mode, recs) in [("single", single), ("cutoff", cutoff)] {
            let gaps: Vec<f64> = recs.iter().map(|r| r.integral_gap).collect();
            let last = *gaps.last().unwrap();
            let ok = last < 0.02 && decreasing(&gaps);
            pass &= ok;
            notes.push(format!(
                "{mode} F={label}: last gap {last:.2e}, decreasing = {}",
                decreasing(&gaps)
            ));
        }
    }
    let c = Constant(1.7);
    let cspec = SweepSpec {
        f: &c,
        simple: None,
        scale: 1,
    };
    let mut worst = 0.0f64;
    for functional in [&identity as &dyn Fn(f64) -> f64, &square] {
        for r in runner
            .single_equidistribution(&cspec, Series::Six, 2..=4, functional, "c")
            .unwrap()
        {
            worst = worst.max(r.integral_gap);
        }
        for r in runner
            .cutoff_equidistribution(&cspec, 2..=4, functional, "c")
            .unwrap()
        {
            worst = worst.max(r.integral_gap);
        }
    }
    pass &= worst <= 1e-9;
    notes.push(format!("constant f max gap {worst:.2e}"));
    outcome(pass, notes.join("; "))
}

fn resistance() -> Outcome {
    let g = Gasket::<f64>::new(5);
    let mut worst = 0.0f64;
    for m in 0..=5 {
        let rc = ResistanceComputer::new(&g, m).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            worst = worst.max((rc.between(a, b) - 2.0 / 3.0).abs());
        }
    }
    let rc = ResistanceComputer::new(&g, 4).unwrap();
    let n = g.positions(4).len();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut violations = 0;
    for _ in 0..1000 {
        let (x, y, z) = (
            rng.random_range(0..n),
            rng.random_range(0..n),
            rng.random_range(0..n),
        );
        if rc.between(x, z) > rc.between(x, y) + rc.between(y, z) + 1e-12 {
            violations += 1;
        }
    }
    outcome(
        worst <= 1e-9 && violations == 0,
        format!("max |R(q_i,q_j) − 2/3| = {worst:.2e}, triangle violations = {violations}/1000"),
    )
}

fn run_cli(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_gasket"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x == "csv" || x == "dat" || x == "txt")
        })
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["spectrum", "--m", "3"],
        &[
            "basis", "--series", "six", "--j", "4", "--N", "1", "--seed", "9",
        ],
        &[
            "szego",
            "--mode",
            "single",
            "--j",
            "2..4",
            "--N",
            "1",
            "--f",
            "simple:1,2,3",
        ],
        &[
            "equidist",
            "--mode",
            "cutoff",
            "--m-range",
            "2..3",
            "--f",
            "harmonic:1,1.5,2",
            "--F",
            "power:2",
        ],
    ];
    let mut pass = true;
    let mut compared = 0;
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        if !(run_cli(a.path(), args) && run_cli(b.path(), args)) {
            pass = false;
            continue;
        }
        let (x, y) = (csv_bodies(a.path()), csv_bodies(b.path()));
        pass &= !x.is_empty() && x == y;
        compared += x.len();
    }
    outcome(
        pass,
        format!("{compared} files byte-identical across reruns"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("spectrum oracle equivalence", spectrum_oracle),
        ("trace identity", trace_identity),
        ("eigenfunction extension", extension_residuals),
        ("6-series dimension formulas", six_series_dimensions),
        ("5-series non-localized count", five_series_alpha),
        ("simple-function error bound", simple_function_bound),
        ("harmonic decay rate", harmonic_rate),
        ("cutoff mode", cutoff_mode),
        ("equidistribution", equidistribution),
        ("resistance metric", resistance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
