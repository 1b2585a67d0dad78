//! Experiment configuration: a JSON document whose fields can be overridden
//! from the command line, plus validation.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use gasket_core::experiments::SAMPLE_LEVEL_CAP;
use gasket_core::Series;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::spec::{FunctionSpec, FunctionalSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Topology,
    Spectrum,
    Basis,
    Szego,
    Equidist,
    Resistance,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Topology => "topology",
            CommandKind::Spectrum => "spectrum",
            CommandKind::Basis => "basis",
            CommandKind::Szego => "szego",
            CommandKind::Equidist => "equidist",
            CommandKind::Resistance => "resistance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Single,
    Cutoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Outside singular values treated as zero.
    pub nullspace: f64,
    /// Eigenvalue clustering on dense solves.
    pub cluster: f64,
    /// Eigen-residuals and spectrum comparisons.
    pub residual: f64,
    /// Block structure of compressed operators.
    pub structure: f64,
    /// Constant-function exactness.
    pub exact: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            nullspace: 1e-8,
            cluster: 1e-8,
            residual: 1e-9,
            structure: 1e-10,
            exact: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<CommandKind>,
    pub mode: ModeKind,
    pub series: String,
    pub m: usize,
    #[serde(rename = "N")]
    pub scale: usize,
    /// `"a..b"` (inclusive) or `"a"`.
    pub j_range: String,
    pub m_range: String,
    pub m_q: Option<usize>,
    /// `constant:c`, `simple:a1,…,a_{3^N}`, `harmonic:a,b,c` or `expr:<x, y>`.
    pub function: String,
    /// `log`, `power:p` or `expr:<x>`.
    pub functional: String,
    /// Hölder exponent used for `β` and for the resistance seminorm.
    pub alpha: f64,
    pub dense: bool,
    pub output_dir: PathBuf,
    pub tolerances: ToleranceConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            mode: ModeKind::Single,
            series: "six".into(),
            m: 3,
            scale: 1,
            j_range: "2..4".into(),
            m_range: "2..4".into(),
            m_q: None,
            function: "constant:1".into(),
            functional: "log".into(),
            alpha: 1.0,
            dense: true,
            output_dir: PathBuf::from("out"),
            tolerances: ToleranceConfig::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output directory
    /// is not part of the experiment, so it is left out.
    pub fn hash(&self) -> String {
        let mut identity = self.clone();
        identity.output_dir = PathBuf::new();
        let canonical = serde_json::to_string(&identity).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// `"a..b"` → `a..=b`; `"a"` → `a..=a`.
pub fn parse_range(text: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{text}' is not a level range (expected a..b)"))
    };
    match text.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            Ok(parse(a)?..=parse(b)?)
        }
        None => {
            let a = parse(text)?;
            Ok(a..=a)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn violation(field: &str, message: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        message: message.into(),
    }
}

const DESK_CAP: &str = "desk-scale cap exceeded";

/// Empty iff the configuration is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(command) = config.command else {
        out.push(violation("command", "a command is required"));
        return out;
    };
    for (name, tol) in [
        ("tolerances.nullspace", config.tolerances.nullspace),
        ("tolerances.cluster", config.tolerances.cluster),
        ("tolerances.residual", config.tolerances.residual),
        ("tolerances.structure", config.tolerances.structure),
        ("tolerances.exact", config.tolerances.exact),
    ] {
        if !(tol > 0.0 && tol.is_finite()) {
            out.push(violation(name, "tolerance must be positive"));
        }
    }
    if let Some(m_q) = config.m_q {
        if m_q > SAMPLE_LEVEL_CAP {
            out.push(violation(
                "m_q",
                format!("{DESK_CAP} (m_q ≤ {SAMPLE_LEVEL_CAP})"),
            ));
        }
    }
    match command {
        CommandKind::Topology => {
            if config.m > SAMPLE_LEVEL_CAP + 1 {
                out.push(violation(
                    "m",
                    format!("{DESK_CAP} (m ≤ {})", SAMPLE_LEVEL_CAP + 1),
                ));
            }
        }
        CommandKind::Spectrum => {
            if config.m == 0 {
                out.push(violation("m", "m must be at least 1"));
            }
            if config.m > SAMPLE_LEVEL_CAP {
                out.push(violation(
                    "m",
                    format!("{DESK_CAP} (m ≤ {SAMPLE_LEVEL_CAP})"),
                ));
            }
        }
        CommandKind::Resistance => {
            if config.m > 6 {
                out.push(violation("m", format!("{DESK_CAP} (m ≤ 6)")));
            }
            if config.alpha <= 0.0 {
                out.push(violation("alpha", "Hölder exponent must be positive"));
            }
            check_function(config, false, &mut out);
        }
        CommandKind::Basis => {
            let series = check_series(config, &mut out);
            match parse_range(&config.j_range) {
                Ok(r) if r.start() != r.end() => {
                    out.push(violation("j_range", "basis needs a single j"));
                }
                Ok(r) => check_single(config, series, *r.start()..=*r.end(), &mut out),
                Err(e) => out.push(violation("j_range", e)),
            }
        }
        CommandKind::Szego | CommandKind::Equidist => {
            let needs_log = command == CommandKind::Szego
                || FunctionalSpec::parse(&config.functional).is_ok_and(|f| f.needs_positive());
            check_function(config, needs_log, &mut out);
            if command == CommandKind::Equidist {
                if let Err(e) = FunctionalSpec::parse(&config.functional) {
                    out.push(violation("functional", e));
                }
            }
            match config.mode {
                ModeKind::Single => {
                    let series = check_series(config, &mut out);
                    match parse_range(&config.j_range) {
                        Ok(r) => check_single(config, series, r, &mut out),
                        Err(e) => out.push(violation("j_range", e)),
                    }
                }
                ModeKind::Cutoff => match parse_range(&config.m_range) {
                    Ok(r) if r.is_empty() => {
                        out.push(violation("m_range", "range must be nonempty"))
                    }
                    Ok(r) => {
                        if *r.start() == 0 {
                            out.push(violation("m_range", "m must be at least 1"));
                        }
                        check_sample_level(config, *r.end(), "m_range", &mut out);
                    }
                    Err(e) => out.push(violation("m_range", e)),
                },
            }
        }
    }
    out
}

fn check_series(config: &ExperimentConfig, out: &mut Vec<Violation>) -> Option<Series> {
    match config.series.parse::<Series>() {
        Ok(s) => Some(s),
        Err(_) => {
            out.push(violation("series", "expected two, five or six"));
            None
        }
    }
}

fn check_single(
    config: &ExperimentConfig,
    series: Option<Series>,
    range: RangeInclusive<usize>,
    out: &mut Vec<Violation>,
) {
    if range.is_empty() {
        out.push(violation("j_range", "range must be nonempty"));
        return;
    }
    if config.scale >= *range.start() {
        out.push(violation("N", "N must be < birth j"));
    }
    if let Some(series) = series {
        if series == Series::Two {
            out.push(violation(
                "series",
                "single-eigenspace mode needs the 5- or 6-series",
            ));
        } else if *range.start() < series.min_birth() {
            out.push(violation(
                "j_range",
                format!(
                    "{} series starts at j = {}",
                    series.label(),
                    series.min_birth()
                ),
            ));
        }
    }
    check_sample_level(config, *range.end(), "j_range", out);
}

fn check_sample_level(
    config: &ExperimentConfig,
    top: usize,
    field: &str,
    out: &mut Vec<Violation>,
) {
    if top > SAMPLE_LEVEL_CAP {
        out.push(violation(
            field,
            format!("{DESK_CAP} (level ≤ {SAMPLE_LEVEL_CAP})"),
        ));
    }
    if let Some(m_q) = config.m_q {
        if m_q < top {
            out.push(violation("m_q", format!("m_q must be ≥ {top}")));
        }
    }
}

fn check_function(config: &ExperimentConfig, needs_positive: bool, out: &mut Vec<Violation>) {
    match FunctionSpec::parse(&config.function) {
        Ok(spec) => {
            if needs_positive && spec.known_positive() == Some(false) {
                out.push(violation("function", "positivity required"));
            }
            if let FunctionSpec::Simple(c) = &spec {
                if FunctionSpec::simple_scale(c.len()).is_none() {
                    out.push(violation(
                        "function",
                        "simple functions need 3^N coefficients",
                    ));
                }
            }
        }
        Err(e) => out.push(violation("function", e)),
    }
}
