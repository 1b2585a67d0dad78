//! Command-line parsing: subcommand plus flags that override a JSON config.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{CommandKind, ExperimentConfig, ModeKind};
use crate::{output, CliError, Violation};

#[derive(Debug, Parser)]
#[command(
    name = "gasket",
    version,
    about = "Spectral experiments on the Sierpinski gasket"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cells, vertices, quadrature weights and the Laplacian at level m.
    Topology(Flags),
    /// Decimation spectrum at level m, checked against a dense solve.
    Spectrum(Flags),
    /// Localized eigenspace basis for one eigenvalue.
    Basis(Flags),
    /// Log-determinant sweeps.
    Szego(Flags),
    /// Spectral averages against integrals and Riemann sums.
    Equidist(Flags),
    /// Effective resistances and a Hölder seminorm.
    Resistance(Flags),
}

impl Command {
    fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Topology(f) => (CommandKind::Topology, f),
            Command::Spectrum(f) => (CommandKind::Spectrum, f),
            Command::Basis(f) => (CommandKind::Basis, f),
            Command::Szego(f) => (CommandKind::Szego, f),
            Command::Equidist(f) => (CommandKind::Equidist, f),
            Command::Resistance(f) => (CommandKind::Resistance, f),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// single or cutoff.
    #[arg(long)]
    pub mode: Option<String>,
    /// two, five or six.
    #[arg(long)]
    pub series: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Localization scale.
    #[arg(long = "N")]
    pub scale: Option<usize>,
    /// Birth generations, `a..b` or `a`.
    #[arg(long)]
    pub j: Option<String>,
    /// Cutoff levels, `a..b` or `a`.
    #[arg(long = "m-range")]
    pub m_range: Option<String>,
    #[arg(long = "m-q")]
    pub m_q: Option<usize>,
    /// constant:c, simple:a1,..., harmonic:a,b,c or expr:<x,y>.
    #[arg(long = "f")]
    pub function: Option<String>,
    /// log, power:p or expr:<x>.
    #[arg(long = "F")]
    pub functional: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Skip the dense comparison in `spectrum`.
    #[arg(long)]
    pub no_dense: bool,
    #[arg(long = "out")]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Flags {
    pub fn apply(self, config: &mut ExperimentConfig) -> Result<(), Violation> {
        if let Some(mode) = self.mode {
            config.mode = match mode.as_str() {
                "single" => ModeKind::Single,
                "cutoff" => ModeKind::Cutoff,
                other => {
                    return Err(Violation {
                        field: "mode".into(),
                        message: format!("unknown mode '{other}' (single or cutoff)"),
                    })
                }
            };
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { config.$field = v; })*
            };
        }
        set!(series => series, m => m, scale => scale, j => j_range, m_range => m_range,
             function => function, functional => functional, alpha => alpha,
             output_dir => output_dir, seed => seed);
        if self.m_q.is_some() {
            config.m_q = self.m_q;
        }
        if self.no_dense {
            config.dense = false;
        }
        Ok(())
    }
}

/// Builds the effective configuration for a parsed command line.
pub fn resolve(command: Command) -> Result<ExperimentConfig, CliError> {
    let (kind, flags) = command.split();
    let invalid = |field: &str, message: String| {
        CliError::Invalid(vec![Violation {
            field: field.into(),
            message,
        }])
    };
    let mut config = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text).map_err(|e| invalid("config", e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    config.command = Some(kind);
    flags
        .apply(&mut config)
        .map_err(|v| CliError::Invalid(vec![v]))?;
    Ok(config)
}

/// Runs a full invocation and returns the process exit code. Errors are
/// reported on stderr as JSON and, when possible, as `error.json`.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match resolve(cli.command) {
        Ok(c) => c,
        Err(e) => return report(&e, None),
    };
    match crate::run(&config) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => report(&e, Some(&config)),
    }
}

fn report(err: &CliError, config: Option<&ExperimentConfig>) -> i32 {
    let record = err.to_json();
    eprintln!("{record}");
    if let Some(c) = config {
        let artifact = output::Artifact::json("error.json", &record);
        let _ = output::write_artifacts(&c.output_dir, &[artifact], &c.hash(), c.seed);
    }
    err.exit_code()
}
