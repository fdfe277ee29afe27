//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 for numeric
//! failures (non-convergence).

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bloch::{BipartiteState, BlochDecomposition, StateJson};
use crate::constructions::{
    equiangular_family, equiangular_state, mub_prime, mub_state, pad_sic, qubit_trio, Construction,
    IdentityCheck,
};
use crate::criteria::{detect_generalized, detect_schmidt};
use crate::error::Error;
use crate::landscape::{classify, emit_curves, Classification};
use crate::moments::{normalized_point, MomentPoint};
use crate::observables::{spectrum_full, spectrum_rank4};
use crate::par::Exec;
use crate::simulate::{isotropic_state, run_budget_study, SimulationConfig};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_numeric() {
            EXIT_NUMERIC
        } else {
            EXIT_INPUT
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "corrgeom",
    version,
    about = "Correlation-matrix geometry of bipartite quantum states"
)]
pub struct Cli {
    /// Master seed for randomized commands; overrides the config file seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstructionKind {
    /// |0>, |+>, |+i> in d = 2.
    Trio,
    /// SIC-POVM of dimension d-1 padded to dimension d (d = 3, 4).
    Sicpad,
    /// First m mutually unbiased bases.
    Mub,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spectrum of the moment-matching observable as JSON.
    Observable {
        #[arg(long)]
        d: usize,
        /// Rank-4 observable matching the second and fourth moments.
        #[arg(long)]
        rank4: bool,
    },
    /// Orthogonal moments and normalized landscape coordinates of a state.
    Moments {
        /// State JSON file, or one of `product`, `bell`, `iso`.
        #[arg(long)]
        state: String,
        /// Local dimension of builtin states.
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Noise parameter of the `iso` builtin.
        #[arg(long, default_value_t = 0.0)]
        p: f64,
    },
    /// Boundary curves of the Schmidt-number-k region as CSV.
    Landscape {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Points of the uniform grid (kink abscissae are added).
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Separable kink state with its verification report as JSON.
    Construct {
        #[arg(long, value_enum)]
        kind: ConstructionKind,
        #[arg(long)]
        d: usize,
        /// Vectors (trio, sicpad) or bases (mub) to use; all when omitted.
        #[arg(long)]
        m: Option<usize>,
        /// Interpolate between kinks with the last vector as the extra vector.
        #[arg(long)]
        p: Option<f64>,
    },
    /// Trace-norm Schmidt-number test on a state.
    Detect {
        /// State JSON file, or one of `product`, `bell`, `iso`.
        #[arg(long)]
        state: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        /// Scale of the local Bloch vector of the first party.
        #[arg(long, requires = "y")]
        x: Option<f64>,
        /// Scale of the local Bloch vector of the second party.
        #[arg(long, requires = "x")]
        y: Option<f64>,
    },
    /// Randomized-measurement budget study from a TOML config, as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Run without the thread pool.
        #[arg(long)]
        sequential: bool,
    },
}

fn load_state(source: &str, d: usize, p: f64) -> CliResult<BipartiteState> {
    let state = match source {
        "product" => BipartiteState::product_zero(d, d)?,
        "bell" => BipartiteState::phi_plus(d)?,
        "iso" => isotropic_state(d, p)?,
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| input_error(format!("cannot read state file {path}: {e}")))?;
            let json: StateJson = serde_json::from_str(&text)
                .map_err(|e| input_error(format!("malformed state file {path}: {e}")))?;
            BipartiteState::from_json(&json)?
        }
    };
    Ok(state)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| input_error(format!("cannot write to stdout: {e}"))),
    }
}

/// Extra JSON next to `out` (`<out>.<suffix>.json`), or standard error.
fn write_sidecar(out: Option<&Path>, suffix: &str, value: &impl Serialize) -> CliResult<()> {
    let text = to_json(value)?;
    match out {
        Some(path) => {
            let mut name = path.as_os_str().to_owned();
            name.push(format!(".{suffix}.json"));
            fs::write(&name, text).map_err(|e| input_error(format!("cannot write sidecar: {e}")))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &impl Serialize) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| input_error(format!("serialization failed: {e}")))
}

#[derive(Serialize)]
struct MomentsReport {
    point: MomentPoint,
    classification: Classification,
}

#[derive(Serialize)]
struct ConstructReport<'a> {
    kind: &'static str,
    state: StateJson,
    point: MomentPoint,
    report: &'a [IdentityCheck],
    pass: bool,
}

fn construct(
    kind: ConstructionKind,
    d: usize,
    m: Option<usize>,
    p: Option<f64>,
) -> CliResult<Construction> {
    if kind == ConstructionKind::Mub {
        if p.is_some() {
            return Err(input_error("--p applies to trio and sicpad only"));
        }
        let mubs = mub_prime(d)?;
        return Ok(mub_state(&mubs, m.unwrap_or(mubs.len()))?);
    }
    let set = match kind {
        ConstructionKind::Trio if d == 2 => qubit_trio(),
        ConstructionKind::Trio => return Err(input_error("the trio lives in d = 2")),
        _ => pad_sic(d)?,
    };
    let set = set.prefix(m.unwrap_or(set.len()))?;
    Ok(match p {
        Some(p) => equiangular_family(&set, p)?,
        None => equiangular_state(&set)?,
    })
}

pub fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Observable { d, rank4 } => {
            let spectrum = if rank4 {
                spectrum_rank4(d)?
            } else {
                spectrum_full(d)?
            };
            write_output(out, to_json(&spectrum.to_json_value())?.as_bytes())
        }
        Command::Moments { state, d, p } => {
            let s = load_state(&state, d, p)?;
            let point = normalized_point(&BlochDecomposition::of(&s)?);
            let report = MomentsReport {
                point,
                classification: classify(&point),
            };
            write_output(out, to_json(&report)?.as_bytes())
        }
        Command::Landscape { d1, d2, k, samples } => {
            let curves = emit_curves(d1, d2, k, samples)?;
            let mut buf = Vec::new();
            curves
                .write_csv(&mut buf)
                .map_err(|e| input_error(format!("csv: {e}")))?;
            write_output(out, &buf)?;
            write_sidecar(out, "meta", &curves.metadata())
        }
        Command::Construct { kind, d, m, p } => {
            let c = construct(kind, d, m, p)?;
            let report = ConstructReport {
                kind: match kind {
                    ConstructionKind::Trio => "trio",
                    ConstructionKind::Sicpad => "sicpad",
                    ConstructionKind::Mub => "mub",
                },
                state: c.state.to_json(),
                point: normalized_point(&BlochDecomposition::of(&c.state)?),
                report: &c.checks,
                pass: c.pass(),
            };
            write_output(out, to_json(&report)?.as_bytes())
        }
        Command::Detect {
            state,
            k,
            d,
            p,
            x,
            y,
        } => {
            let s = load_state(&state, d, p)?;
            let verdict = match (x, y) {
                (Some(x), Some(y)) => detect_generalized(&s, k, x, y)?,
                _ => detect_schmidt(&BlochDecomposition::of(&s)?, k)?,
            };
            write_output(out, to_json(&verdict)?.as_bytes())
        }
        Command::Simulate { config, sequential } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| input_error(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg: SimulationConfig = toml::from_str(&text)
                .map_err(|e| input_error(format!("invalid config {}: {e}", config.display())))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let exec = if sequential {
                Exec::Sequential
            } else {
                Exec::Parallel
            };
            let study = run_budget_study(&cfg, exec)?;
            let mut buf = Vec::new();
            study
                .write_csv(&mut buf)
                .map_err(|e| input_error(format!("csv: {e}")))?;
            write_output(out, &buf)?;
            write_sidecar(out, "fits", &study.fits)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
