//! Command-line driver. Data goes to standard output or `--out`, diagnostics
//! to standard error.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical
//! non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use crossing_core::actions::{action_table, bohr_sommerfeld, ActionError};
use crossing_core::asymptotics::{predict, width_power, AsymptoticOptions, Regime, WidthPrefactor};
use crossing_core::cap::{default_etas, CapSpec};
use crossing_core::problem::{validate, ValidatedProblem};
use crossing_core::shooting::{find_resonance, OracleError, ResonanceMeasurement, ShootingConfig};
use crossing_core::stationary_phase::{
    remainder_order, MuInterpretation, OddBracket, SpError, SpFamily,
};
use crossing_core::sweep::{choose_h_grid, SweepError};
use serde_json::{json, Value};

use crate::problem_file::{self, ProblemFile, ProblemFileError};
use crate::{meta, parallel, svg, tables};

#[derive(Debug, Parser)]
#[command(
    name = "crossing",
    version,
    about = "Resonance widths at a tangential crossing of classical trajectories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MuArg {
    Shifted,
    Verbatim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrefactorArg {
    ScaleInvariant,
    Verbatim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Shooting,
    Cap,
}

#[derive(Debug, clap::Args)]
pub struct FormulaArgs {
    /// μ-factor of the odd-regime leading term
    #[arg(long = "mu-interpretation", value_enum, default_value = "shifted")]
    pub mu: MuArg,
    /// Width prefactor convention
    #[arg(long, value_enum, default_value = "scale-invariant")]
    pub prefactor: PrefactorArg,
}

impl FormulaArgs {
    fn options(&self) -> AsymptoticOptions {
        AsymptoticOptions {
            mu: match self.mu {
                MuArg::Shifted => MuInterpretation::Shifted,
                MuArg::Verbatim => MuInterpretation::Verbatim,
            },
            prefactor: match self.prefactor {
                PrefactorArg::ScaleInvariant => WidthPrefactor::ScaleInvariant,
                PrefactorArg::Verbatim => WidthPrefactor::Verbatim,
            },
            ..Default::default()
        }
    }

    fn json(&self) -> Value {
        json!({
            "mu_interpretation": format!("{:?}", self.mu).to_lowercase(),
            "prefactor": format!("{:?}", self.prefactor).to_lowercase(),
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the assumptions and print the crossing data as JSON
    Validate { problem: PathBuf },
    /// Turning points and actions A, A', S at an energy
    Actions {
        #[arg(long = "E")]
        e: f64,
        problem: PathBuf,
    },
    /// Bohr-Sommerfeld energies in the window around E0
    Bs {
        #[arg(long)]
        h: f64,
        problem: PathBuf,
    },
    /// Predicted resonances for every Bohr-Sommerfeld energy
    Predict {
        #[arg(long)]
        h: f64,
        #[command(flatten)]
        formula: FormulaArgs,
        problem: PathBuf,
    },
    /// Measured resonances near each Bohr-Sommerfeld energy (or near --E)
    Oracle {
        #[arg(long)]
        h: f64,
        #[arg(long = "E")]
        e: Option<f64>,
        #[arg(long, value_enum, default_value = "shooting")]
        method: MethodArg,
        /// Grid points per channel for the absorbing-potential solver
        #[arg(long = "grid-n", default_value_t = 1600)]
        grid_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        problem: PathBuf,
    },
    /// h-sweep of predicted against measured widths
    Sweep {
        #[arg(long = "h-min", default_value_t = 0.02)]
        h_min: f64,
        #[arg(long = "h-max", default_value_t = 0.05)]
        h_max: f64,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        formula: FormulaArgs,
        problem: PathBuf,
    },
    /// Brute-force oscillatory integrals against the leading stationary-phase term
    SpCheck {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: u32,
        /// Comma-separated list of h values
        #[arg(long = "h-grid", value_delimiter = ',', required = true)]
        h_grid: Vec<f64>,
        #[arg(long = "mu-interpretation", value_enum, default_value = "shifted")]
        mu: MuArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(m: impl ToString) -> Self {
        Failure {
            code: 1,
            message: m.to_string(),
        }
    }
    fn validation(m: impl ToString) -> Self {
        Failure {
            code: 2,
            message: m.to_string(),
        }
    }
    fn numerical(m: impl ToString) -> Self {
        Failure {
            code: 3,
            message: m.to_string(),
        }
    }
}

impl From<ProblemFileError> for Failure {
    fn from(e: ProblemFileError) -> Self {
        match e {
            ProblemFileError::Io { .. } => Failure::usage(e),
            _ => Failure::validation(e),
        }
    }
}

impl From<ActionError> for Failure {
    fn from(e: ActionError) -> Self {
        match e {
            ActionError::OutsideWindow { .. } => Failure::usage(e),
            ActionError::AssumptionViolated(_) => Failure::validation(e),
            ActionError::Quadrature(_) => Failure::numerical(e),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BadConfig(_) => Failure::usage(e),
            _ => Failure::numerical(e),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::BadRange(..) | SweepError::TooFewPoints(_) => Failure::usage(e),
            SweepError::EmptyFeasibleSet => Failure::numerical(e),
            SweepError::Action(a) => a.into(),
        }
    }
}

impl From<SpError> for Failure {
    fn from(e: SpError) -> Self {
        match e {
            SpError::HTooSmall { .. } | SpError::DegenerateFit { .. } => Failure::usage(e),
            _ => Failure::numerical(e),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("cannot write {}: {e}", path.display()))
}

fn load(path: &Path) -> Result<(ProblemFile, ValidatedProblem), Failure> {
    let (file, spec) = problem_file::load(path)?;
    let p = validate(&spec).map_err(Failure::validation)?;
    Ok((file, p))
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

/// Writes `data` to `out` (with a provenance sidecar) or to `stdout`.
fn emit(
    data: &str,
    out: Option<&Path>,
    command: &str,
    config: &Value,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, data).map_err(|e| io_failure(path, e))?;
            meta::write_meta(path, command, config).map_err(|e| io_failure(path, e))?;
            Ok(())
        }
        None => stdout
            .write_all(data.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write output: {e}"))),
    }
}

fn summary(p: &ValidatedProblem) -> Value {
    let c = &p.crossing;
    let regime = Regime::of(c);
    json!({
        "m": c.m,
        "k": c.k,
        "a": p.a,
        "b": p.b,
        "a_prime": p.a_prime,
        "v_m": c.v_m,
        "v_m1": c.v_m1,
        "r_k": c.r_k,
        "r_k1": c.r_k1,
        "r1_k": c.r1_k,
        "r1_k1": c.r1_k1,
        "dV1_0": c.dv1_0,
        "dV2_0": c.dv2_0,
        "E0": c.e0,
        "coupled": c.coupled,
        "regime": regime.name(),
        "power_total": width_power(c, regime),
    })
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let json_line = |v: &Value, out: &mut dyn Write| {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(v).expect("json values serialize")
        )
        .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
    };
    match cli.command {
        Command::Validate { problem } => {
            let (_, p) = load(&problem)?;
            json_line(&summary(&p), stdout)
        }
        Command::Actions { e, problem } => {
            let (_, p) = load(&problem)?;
            let t = action_table(&p, e)?;
            json_line(&tables::actions_json(&t), stdout)
        }
        Command::Bs { h, problem } => {
            positive("h", h)?;
            let (_, p) = load(&problem)?;
            let bs = bohr_sommerfeld(&p, h)?;
            emit(&tables::bs_csv(&bs), None, "bs", &Value::Null, stdout)
        }
        Command::Predict {
            h,
            formula,
            problem,
        } => {
            positive("h", h)?;
            let (_, p) = load(&problem)?;
            let opts = formula.options();
            let rows = bohr_sommerfeld(&p, h)?
                .into_iter()
                .map(|(_, e)| predict(&p, e, h, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            emit(
                &tables::prediction_csv(&rows),
                None,
                "predict",
                &Value::Null,
                stdout,
            )
        }
        Command::Oracle {
            h,
            e,
            method,
            grid_n,
            out,
            problem,
        } => {
            positive("h", h)?;
            let (file, p) = load(&problem)?;
            let starts: Vec<f64> = match e {
                Some(e) => vec![e],
                None => bohr_sommerfeld(&p, h)?
                    .into_iter()
                    .map(|(_, e)| e)
                    .collect(),
            };
            if starts.is_empty() {
                return Err(Failure::numerical(format!(
                    "no Bohr-Sommerfeld energy within h·delta0 of E0 at h = {h}; pass --E to start elsewhere"
                )));
            }
            let cfg = ShootingConfig::default();
            let mut rows: Vec<ResonanceMeasurement> = Vec::new();
            for s in starts {
                let m = match method {
                    MethodArg::Shooting => find_resonance(&p, h, s, &cfg)?,
                    MethodArg::Cap => parallel::cap_stabilized(
                        &p,
                        h,
                        grid_n,
                        &default_etas(),
                        &CapSpec::default(),
                        s,
                    )?,
                };
                rows.push(m);
            }
            let config = json!({
                "problem": serde_json::to_value(&file).expect("problem files serialize"),
                "h": h,
                "E": e,
                "method": format!("{method:?}").to_lowercase(),
                "grid_n": grid_n,
            });
            emit(
                &tables::measurement_csv(&rows),
                out.as_deref(),
                "oracle",
                &config,
                stdout,
            )
        }
        Command::Sweep {
            h_min,
            h_max,
            n,
            svg: svg_path,
            out,
            formula,
            problem,
        } => {
            let (file, p) = load(&problem)?;
            let opts = formula.options();
            let grid = choose_h_grid(&p, n, (h_min, h_max), &opts)?;
            let report = parallel::run_sweep(&p, &grid, &ShootingConfig::default(), &opts);
            match (&report.fit, &report.fit_error) {
                (Some(f), _) => writeln!(
                    stderr,
                    "fit: p_hat = {:.6} ± {:.6}, C_hat = {:.6} (predicted exponent {})",
                    f.p_hat,
                    f.p_sigma,
                    f.c_hat,
                    width_power(&p.crossing, report.regime)
                ),
                (None, Some(e)) => writeln!(stderr, "fit: not available ({e})"),
                _ => Ok(()),
            }
            .ok();
            let config = json!({
                "problem": serde_json::to_value(&file).expect("problem files serialize"),
                "h_min": h_min,
                "h_max": h_max,
                "n": n,
                "formula": formula.json(),
            });
            if let Some(path) = &svg_path {
                let title = format!("{} regime: |Im E| against h", report.regime.name());
                std::fs::write(path, svg::width_plot(&report, &title))
                    .map_err(|e| io_failure(path, e))?;
            }
            emit(
                &tables::sweep_csv(&report),
                out.as_deref(),
                "sweep",
                &config,
                stdout,
            )
        }
        Command::SpCheck {
            k,
            m,
            h_grid,
            mu,
            out,
        } => {
            if m == 0 {
                return Err(Failure::usage("--m must be at least 1"));
            }
            for &h in &h_grid {
                positive("h-grid", h)?;
            }
            let interp = match mu {
                MuArg::Shifted => MuInterpretation::Shifted,
                MuArg::Verbatim => MuInterpretation::Verbatim,
            };
            let fam = SpFamily::standard(k, m);
            let rep = remainder_order(&fam, &h_grid, interp, OddBracket::default())?;
            writeln!(
                stderr,
                "remainder slope {:.6} (leading power {}, remainder power {})",
                rep.slope,
                fam.leading_power(),
                fam.remainder_power()
            )
            .ok();
            let config = json!({
                "k": k,
                "m": m,
                "h_grid": h_grid,
                "mu_interpretation": format!("{mu:?}").to_lowercase(),
            });
            emit(
                &tables::sp_csv(&rep.rows),
                out.as_deref(),
                "sp-check",
                &config,
                stdout,
            )
        }
    }
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(stdout, "{e}").ok();
                    0
                }
                _ => {
                    write!(stderr, "{e}").ok();
                    1
                }
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(f) => {
            writeln!(stderr, "error: {}", f.message).ok();
            f.code
        }
    }
}
