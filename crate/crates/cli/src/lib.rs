//! `catmet` command-line driver: config merging, dispatch, output files and
//! the summary table.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use catmet_core::sweep::{self, GridSpec, OptimalTheta, PrecisionRecord, SweepConfig, SweepKind};
use catmet_core::validate::{self, ValidationPlan};
use catmet_core::{heisenberg_limit, sql, Error, ObservableKind};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "catmet", version, about = "Phase estimation with spin cat states under particle loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// QCRB versus input angle for each survival fraction.
    ThetaScan(ScanArgs),
    /// QCRB versus accumulation time at a fixed damping rate.
    TimeScan(ScanArgs),
    /// QCRB against the best parity and Jz readouts.
    Compare(ScanArgs),
    /// Husimi Q fields of the input states.
    Husimi(ScanArgs),
    /// QCRB-optimal input angle for each survival fraction.
    OptimalTheta(ScanArgs),
    /// Run the oracle suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Default, Args)]
struct ScanArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Particle number N.
    #[arg(long)]
    n: Option<usize>,
    /// Level splitting δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Damping rate for the time scan.
    #[arg(long)]
    gamma: Option<f64>,
    /// Survival fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Lower end of the 2θ grid, in units of π.
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    #[arg(long)]
    theta_step: Option<f64>,
    /// Accumulation-time grid for the time scan.
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_step: Option<f64>,
    /// Individual input states for time-scan and husimi, 2θ in units of π.
    #[arg(long, value_delimiter = ',')]
    two_theta: Option<Vec<f64>>,
    /// Number of repetitions N_m.
    #[arg(long)]
    nm: Option<u32>,
    /// Readout observables: parity, jz.
    #[arg(long, value_delimiter = ',')]
    obs: Option<Vec<ObservableKind>>,
    /// Output CSV; a `.json` sidecar is written next to it. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: hardware parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Survival fraction applied before the Husimi fields.
    #[arg(long)]
    husimi_eta: Option<f64>,
    #[arg(long)]
    husimi_n_theta: Option<usize>,
    #[arg(long)]
    husimi_n_varphi: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

/// A list entry in the config file: either an array or a comma-separated string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ListValue<T> {
    Items(Vec<T>),
    Text(String),
}

impl<T: std::str::FromStr> ListValue<T>
where
    T::Err: std::fmt::Display,
{
    fn into_vec(self, key: &str) -> Result<Vec<T>, Error> {
        match self {
            ListValue::Items(v) => Ok(v),
            ListValue::Text(s) => s
                .split(',')
                .map(|p| p.trim())
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse::<T>().map_err(|e| {
                        Error::InvalidArgument(format!("config key `{key}`: cannot parse `{p}`: {e}"))
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    delta: Option<f64>,
    gamma: Option<f64>,
    eta: Option<ListValue<f64>>,
    theta_min: Option<f64>,
    theta_max: Option<f64>,
    theta_step: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    t_step: Option<f64>,
    two_theta: Option<ListValue<f64>>,
    nm: Option<u32>,
    obs: Option<ListValue<ObservableKind>>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    husimi_eta: Option<f64>,
    husimi_n_theta: Option<usize>,
    husimi_n_varphi: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
    }

    /// Overlays the command-line flags, which win over file entries.
    fn into_args(self, flags: ScanArgs) -> Result<ScanArgs, Error> {
        Ok(ScanArgs {
            config: flags.config,
            n: flags.n.or(self.n),
            delta: flags.delta.or(self.delta),
            gamma: flags.gamma.or(self.gamma),
            eta: match flags.eta {
                Some(v) => Some(v),
                None => self.eta.map(|l| l.into_vec("eta")).transpose()?,
            },
            theta_min: flags.theta_min.or(self.theta_min),
            theta_max: flags.theta_max.or(self.theta_max),
            theta_step: flags.theta_step.or(self.theta_step),
            t_min: flags.t_min.or(self.t_min),
            t_max: flags.t_max.or(self.t_max),
            t_step: flags.t_step.or(self.t_step),
            two_theta: match flags.two_theta {
                Some(v) => Some(v),
                None => self.two_theta.map(|l| l.into_vec("two_theta")).transpose()?,
            },
            nm: flags.nm.or(self.nm),
            obs: match flags.obs {
                Some(v) => Some(v),
                None => self.obs.map(|l| l.into_vec("obs")).transpose()?,
            },
            out: flags.out.or(self.out),
            threads: flags.threads.or(self.threads),
            husimi_eta: flags.husimi_eta.or(self.husimi_eta),
            husimi_n_theta: flags.husimi_n_theta.or(self.husimi_n_theta),
            husimi_n_varphi: flags.husimi_n_varphi.or(self.husimi_n_varphi),
        })
    }
}

fn build_config(kind: SweepKind, flags: ScanArgs) -> Result<SweepConfig, Error> {
    let args = match &flags.config {
        Some(path) => FileConfig::load(path)?.into_args(flags)?,
        None => flags,
    };
    let d = SweepConfig::default();
    let config = SweepConfig {
        kind,
        n: args.n.unwrap_or(d.n),
        delta: args.delta.unwrap_or(d.delta),
        eta: args.eta.unwrap_or(d.eta),
        gamma: args.gamma.unwrap_or(d.gamma),
        time: GridSpec {
            min: args.t_min.unwrap_or(d.time.min),
            max: args.t_max.unwrap_or(d.time.max),
            step: args.t_step.unwrap_or(d.time.step),
        },
        theta: GridSpec {
            min: args.theta_min.unwrap_or(d.theta.min),
            max: args.theta_max.unwrap_or(d.theta.max),
            step: args.theta_step.unwrap_or(d.theta.step),
        },
        two_theta: args.two_theta.unwrap_or(d.two_theta),
        observables: args.obs,
        n_m: args.nm.unwrap_or(d.n_m),
        out: args.out,
        threads: args.threads,
        husimi_grid: (
            args.husimi_n_theta.unwrap_or(d.husimi_grid.0),
            args.husimi_n_varphi.unwrap_or(d.husimi_grid.1),
        ),
        husimi_eta: args.husimi_eta.unwrap_or(d.husimi_eta),
    };
    config.validate()?;
    Ok(config)
}

/// Failure of one command, mapped onto an exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("cannot write {}: {e}", path.display()))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Data goes to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let (kind, args) = match cmd {
        Command::Validate(v) => return run_validate(v, stdout),
        Command::ThetaScan(a) => (SweepKind::ThetaScan, a),
        Command::TimeScan(a) => (SweepKind::TimeScan, a),
        Command::Compare(a) => (SweepKind::MeasurementCompare, a),
        Command::Husimi(a) => (SweepKind::Husimi, a),
        Command::OptimalTheta(a) => (SweepKind::OptimalTheta, a),
    };
    let config = build_config(kind, args)?;
    let threads = config.threads;
    match kind {
        SweepKind::ThetaScan | SweepKind::TimeScan | SweepKind::MeasurementCompare => {
            let records = sweep::with_threads(threads, || match kind {
                SweepKind::ThetaScan => sweep::theta_scan(&config),
                SweepKind::TimeScan => sweep::time_scan(&config),
                _ => sweep::measurement_compare(&config),
            })??;
            emit_records(&config, &records, stdout, stderr)
        }
        SweepKind::OptimalTheta => {
            let rows = sweep::with_threads(threads, || sweep::optimal_theta(&config))??;
            emit_optimal(&config, &rows, stdout)?;
            Ok(EXIT_OK)
        }
        SweepKind::Husimi => emit_husimi(&config, stdout, stderr),
    }
}

/// Writes the CSV (to `--out` or stdout) and the summary. A missing QCRB at
/// any point is a numerical failure; a readout without a usable working point
/// is only reported in the status column.
fn emit_records(
    config: &SweepConfig,
    records: &[PrecisionRecord],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let summary = records_summary(config, records);
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_failure(path))?);
            sweep::write_records_csv(&mut w, records, config.n)
                .and_then(|_| w.flush())
                .map_err(io_failure(path))?;
            sweep::write_sidecar(path, config, &sweep::RECORD_COLUMNS, records.len())
                .map_err(io_failure(path))?;
            let _ = write!(stdout, "{summary}");
        }
        None => {
            sweep::write_records_csv(&mut *stdout, records, config.n)
                .map_err(|e| Failure::Config(format!("cannot write to stdout: {e}")))?;
            let _ = write!(stderr, "{summary}");
        }
    }
    let marked = records.iter().filter(|r| !r.is_ok()).count();
    let failed = records.iter().filter(|r| r.f_q.is_none()).count();
    if marked > 0 {
        let _ = writeln!(stderr, "{marked} of {} points carry an error marker", records.len());
    }
    Ok(if failed > 0 { EXIT_NUMERICAL } else { EXIT_OK })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

fn records_summary(config: &SweepConfig, records: &[PrecisionRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "N = {}   SQL = {:.6}   HL = {:.6}", config.n, sql(config.n), heisenberg_limit(config.n));
    let best = |rs: &[&PrecisionRecord], f: fn(&PrecisionRecord) -> Option<f64>| {
        rs.iter()
            .filter_map(|r| f(r).map(|v| (r.two_theta_over_pi(), v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let cell = |b: Option<(f64, f64)>| b.map_or("-".to_string(), |(t, v)| format!("{v:.6} @ {t:.2}π"));
    if config.kind == SweepKind::TimeScan {
        let _ = writeln!(s, "{:>8} {:>12} {:>12} {:>12}", "2θ/π", "Δφ(T min)", "Δφ(T max)", "T<SQL until");
        let mut thetas: Vec<f64> = records.iter().map(|r| r.theta).collect();
        thetas.dedup();
        for th in thetas {
            let rs: Vec<_> = records.iter().filter(|r| r.theta == th).collect();
            let first = rs.first().and_then(|r| r.delta_phi_qcrb);
            let last = rs.last().and_then(|r| r.delta_phi_qcrb);
            let below = rs
                .iter()
                .take_while(|r| r.delta_phi_qcrb.is_some_and(|d| d < sql(config.n)))
                .last()
                .and_then(|r| r.t);
            let _ = writeln!(
                s,
                "{:>8.4} {:>12} {:>12} {:>12}",
                rs[0].two_theta_over_pi(),
                fmt_opt(first),
                fmt_opt(last),
                fmt_opt(below)
            );
        }
        return s;
    }
    let _ = writeln!(s, "{:>8} {:>22} {:>22} {:>22}", "η", "best QCRB", "best parity", "best Jz");
    let mut etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
    etas.dedup();
    for eta in etas.into_iter().rev() {
        let rs: Vec<_> = records.iter().filter(|r| r.eta == eta).collect();
        let _ = writeln!(
            s,
            "{:>8.4} {:>22} {:>22} {:>22}",
            eta,
            cell(best(&rs, |r| r.delta_phi_qcrb)),
            cell(best(&rs, |r| r.delta_phi_parity)),
            cell(best(&rs, |r| r.delta_phi_jz))
        );
    }
    s
}

fn emit_optimal(
    config: &SweepConfig,
    rows: &[OptimalTheta],
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let mut table = String::new();
    let _ = writeln!(table, "N = {}   SQL = {:.6}   HL = {:.6}", config.n, sql(config.n), heisenberg_limit(config.n));
    for r in rows {
        let _ = writeln!(
            table,
            "eta = {:<6}  2theta_opt ≈ {:.2}π  ({:.5}π)  delta_phi_opt = {:.6}",
            r.eta,
            r.two_theta_over_pi(),
            r.two_theta_over_pi(),
            r.delta_phi_opt
        );
    }
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_failure(path))?);
            sweep::write_optimal_csv(&mut w, rows, config.n)
                .and_then(|_| w.flush())
                .map_err(io_failure(path))?;
            sweep::write_sidecar(path, config, &sweep::OPTIMAL_COLUMNS, rows.len()).map_err(io_failure(path))?;
            let _ = write!(stdout, "{table}");
        }
        None => {
            let _ = write!(stdout, "{table}");
        }
    }
    Ok(())
}

fn emit_husimi(config: &SweepConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let fields = sweep::with_threads(config.threads, || sweep::husimi_scan(config))??;
    let multiple = fields.len() > 1;
    for (two_theta, grid, q) in &fields {
        let (qmax, at) = q
            .iter()
            .zip(grid)
            .fold((f64::NEG_INFINITY, (0.0, 0.0)), |acc, (&v, &p)| if v > acc.0 { (v, p) } else { acc });
        match &config.out {
            Some(out) => {
                let path = sweep::husimi_path(out, *two_theta, multiple);
                sweep::write_husimi(&path, grid, q).map_err(io_failure(&path))?;
                let columns = ["theta_s", "varphi_s", "Q"];
                sweep::write_sidecar(&path, config, &columns, q.len()).map_err(io_failure(&path))?;
                let _ = writeln!(
                    stdout,
                    "2θ = {two_theta}π → {}  max Q = {qmax:.6} at (θ_s, φ_s) = ({:.4}, {:.4})",
                    path.display(),
                    at.0,
                    at.1
                );
            }
            None => {
                catmet_core::states::write_husimi_csv(&mut *stdout, grid, q)
                    .map_err(|e| Failure::Config(format!("cannot write to stdout: {e}")))?;
                let _ = writeln!(stderr, "2θ = {two_theta}π  max Q = {qmax:.6}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn run_validate(args: ValidateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if args.threads == Some(0) {
        return Err(Failure::Config("threads must be >= 1".into()));
    }
    let mut plan = ValidationPlan::default();
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    let reports = sweep::with_threads(args.threads, || validate::run_all(&plan))?;
    let mut all = true;
    for r in &reports {
        all &= r.passed();
        let _ = writeln!(stdout, "{r}");
    }
    let _ = writeln!(stdout, "{}", if all { "all oracle suites passed" } else { "oracle suites FAILED" });
    Ok(if all { EXIT_OK } else { EXIT_NUMERICAL })
}
