//! Parameter scans over input angle, survival fraction and accumulation time.
//!
//! Every scan evaluates a fixed, index-built grid in parallel and returns the
//! records sorted deterministically; a point whose evaluation fails is kept
//! with its error message rather than dropped.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{lossy_state, LossModel, Pi2Pulse};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::fisher::{qfi, rho_derivative};
use crate::measure::{golden_section, Observable, ObservableKind, PhaseResponse};
use crate::states::{cat, fmt12, husimi_q, write_husimi_csv, CatParams, HusimiGrid};
use crate::{heisenberg_limit, sql};

/// Column order of every precision CSV.
pub const RECORD_COLUMNS: [&str; 13] = [
    "theta",
    "eta",
    "delta_phi_qcrb",
    "f_q",
    "delta_phi_parity",
    "phi_star_parity",
    "delta_phi_jz",
    "phi_star_jz",
    "two_theta_over_pi",
    "t",
    "sql",
    "hl",
    "status",
];

pub const OPTIMAL_COLUMNS: [&str; 6] = [
    "eta",
    "theta_opt",
    "two_theta_opt_over_pi",
    "delta_phi_opt",
    "sql",
    "hl",
];

/// Resolution of the optimal-angle refinement, in units of π for 2θ.
pub const THETA_RESOLUTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    ThetaScan,
    TimeScan,
    MeasurementCompare,
    Husimi,
    OptimalTheta,
}

/// Inclusive `[min, max]` grid with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let ok = [self.min, self.max, self.step].iter().all(|x| x.is_finite());
        if !ok || self.step <= 0.0 {
            return Err(Error::invalid("grid needs finite bounds and step > 0"));
        }
        if self.max < self.min {
            return Err(Error::invalid(format!(
                "grid max {} below min {}",
                self.max, self.min
            )));
        }
        // Round so that e.g. 1.0 / 0.01 lands on 100 points past the start.
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| self.min + i as f64 * self.step)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub n: usize,
    pub delta: f64,
    /// Survival fractions for θ-scans and the measurement comparison.
    pub eta: Vec<f64>,
    /// Damping rate for the time scan.
    pub gamma: f64,
    /// Accumulation times for the time scan.
    pub time: GridSpec,
    /// 2θ grid, in units of π.
    pub theta: GridSpec,
    /// Individual input states (2θ in units of π) for the time scan and Husimi output.
    pub two_theta: Vec<f64>,
    /// `None` means the scan's default: none for θ/T scans, both for the comparison.
    pub observables: Option<Vec<ObservableKind>>,
    pub n_m: u32,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub husimi_grid: (usize, usize),
    /// Loss applied before computing Husimi fields.
    pub husimi_eta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::ThetaScan,
            n: 40,
            delta: 1.0,
            eta: vec![1.0, 0.975, 0.95, 0.925, 0.9, 0.8],
            gamma: 0.05,
            time: GridSpec {
                min: 0.0,
                max: 3.0,
                step: 0.05,
            },
            theta: GridSpec {
                min: 0.0,
                max: 1.0,
                step: 0.01,
            },
            two_theta: vec![0.0, 0.5, 0.625, 1.0],
            observables: None,
            n_m: 1,
            out: None,
            threads: None,
            husimi_grid: (181, 361),
            husimi_eta: 1.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("particle number must be >= 1"));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta must be finite"));
        }
        if self.n_m < 1 {
            return Err(Error::invalid("nm must be >= 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be >= 1"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma must be >= 0"));
        }
        if !(self.husimi_eta > 0.0 && self.husimi_eta <= 1.0) {
            return Err(Error::invalid("husimi eta must lie in (0, 1]"));
        }
        let needs_eta = matches!(
            self.kind,
            SweepKind::ThetaScan | SweepKind::MeasurementCompare | SweepKind::OptimalTheta
        );
        if needs_eta && self.eta.is_empty() {
            return Err(Error::invalid("eta list is empty"));
        }
        for &e in &self.eta {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::invalid(format!("eta {e} outside (0, 1]")));
            }
        }
        let thetas = self.theta_values()?;
        if thetas.iter().any(|t| !(0.0..=1.0 + 1e-12).contains(t)) {
            return Err(Error::invalid("2theta grid must stay inside [0, 1] (units of pi)"));
        }
        let needs_states = matches!(self.kind, SweepKind::TimeScan | SweepKind::Husimi);
        if needs_states && self.two_theta.is_empty() {
            return Err(Error::invalid("list of input states (2theta) is empty"));
        }
        if self.two_theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::invalid("2theta values must lie in [0, 1] (units of pi)"));
        }
        if self.kind == SweepKind::TimeScan {
            let times = self.time.values()?;
            if times.iter().any(|&t| t < 0.0) {
                return Err(Error::invalid("times must be >= 0"));
            }
        }
        if self.husimi_grid.0 < 2 || self.husimi_grid.1 < 2 {
            return Err(Error::invalid("Husimi grid needs at least 2x2 samples"));
        }
        Ok(())
    }

    /// 2θ values of the θ grid, in units of π, clamped onto `[0, 1]`.
    pub fn theta_values(&self) -> Result<Vec<f64>> {
        Ok(self
            .theta
            .values()?
            .into_iter()
            .map(|v| if (v - 1.0).abs() < 1e-12 { 1.0 } else { v })
            .collect())
    }

    fn observables_or(&self, default: &[ObservableKind]) -> Vec<ObservableKind> {
        self.observables.clone().unwrap_or_else(|| default.to_vec())
    }
}

/// One scan point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecord {
    /// Polar angle θ of the cat branches (radians).
    pub theta: f64,
    pub eta: f64,
    pub t: Option<f64>,
    pub f_q: Option<f64>,
    pub delta_phi_qcrb: Option<f64>,
    pub delta_phi_parity: Option<f64>,
    pub phi_star_parity: Option<f64>,
    pub delta_phi_jz: Option<f64>,
    pub phi_star_jz: Option<f64>,
    /// Messages for anything that failed at this point; empty when all succeeded.
    pub errors: Vec<String>,
}

impl PrecisionRecord {
    fn empty(theta: f64, eta: f64, t: Option<f64>) -> Self {
        Self {
            theta,
            eta,
            t,
            f_q: None,
            delta_phi_qcrb: None,
            delta_phi_parity: None,
            phi_star_parity: None,
            delta_phi_jz: None,
            phi_star_jz: None,
            errors: vec![],
        }
    }

    pub fn two_theta_over_pi(&self) -> f64 {
        2.0 * self.theta / PI
    }

    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn delta_phi(&self, obs: ObservableKind) -> Option<f64> {
        match obs {
            ObservableKind::ParityB => self.delta_phi_parity,
            ObservableKind::Jz => self.delta_phi_jz,
        }
    }

    pub fn status(&self) -> String {
        if self.errors.is_empty() {
            "ok".to_string()
        } else {
            format!("error: {}", self.errors.join("; "))
        }
    }
}

fn theta_from_units(two_theta_pi: f64) -> f64 {
    (0.5 * two_theta_pi * PI).clamp(0.0, FRAC_PI_2)
}

/// QCRB plus the requested measurement precisions for one input and model.
fn evaluate_point(
    theta: f64,
    model: &LossModel,
    n: usize,
    n_m: u32,
    observables: &[ObservableKind],
    pulse: &Pi2Pulse,
    t: Option<f64>,
) -> PrecisionRecord {
    let eta = model.eta_a();
    let mut rec = PrecisionRecord::empty(theta, eta, t);
    let lossy = match CatParams::new(theta, n)
        .and_then(|p| cat(&p))
        .and_then(|s| lossy_state(&s, model))
    {
        Ok(l) => l,
        Err(e) => {
            rec.errors.push(e.to_string());
            return rec;
        }
    };
    record_qfi(&mut rec, &lossy, n_m);
    for &kind in observables {
        let outcome = Observable::new(kind, n_m)
            .and_then(|obs| PhaseResponse::new(&lossy, pulse, obs))
            .and_then(|resp| resp.best());
        match (kind, outcome) {
            (ObservableKind::ParityB, Ok(w)) => {
                rec.delta_phi_parity = Some(w.delta_phi);
                rec.phi_star_parity = Some(w.phi_star);
            }
            (ObservableKind::Jz, Ok(w)) => {
                rec.delta_phi_jz = Some(w.delta_phi);
                rec.phi_star_jz = Some(w.phi_star);
            }
            (kind, Err(e)) => rec.errors.push(format!("{kind}: {e}")),
        }
    }
    rec
}

fn record_qfi(rec: &mut PrecisionRecord, lossy: &DensityMatrix, n_m: u32) {
    match qfi(lossy, &rho_derivative(lossy), n_m) {
        Ok(q) => {
            rec.f_q = Some(q.f_q);
            rec.delta_phi_qcrb = Some(q.delta_phi_min);
        }
        Err(e) => rec.errors.push(format!("qfi: {e}")),
    }
}

fn sort_records(records: &mut [PrecisionRecord]) {
    records.sort_by(|a, b| {
        a.eta
            .total_cmp(&b.eta)
            .then(a.t.unwrap_or(0.0).total_cmp(&b.t.unwrap_or(0.0)))
            .then(a.theta.total_cmp(&b.theta))
    });
}

fn eta_theta_scan(config: &SweepConfig, observables: &[ObservableKind]) -> Result<Vec<PrecisionRecord>> {
    config.validate()?;
    let pulse = Pi2Pulse::new(config.n)?;
    let thetas = config.theta_values()?;
    let models = config
        .eta
        .iter()
        .map(|&eta| LossModel::from_eta(eta, config.delta))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(LossModel, f64)> = models
        .iter()
        .flat_map(|m| thetas.iter().map(move |&t| (*m, theta_from_units(t))))
        .collect();
    let mut records: Vec<PrecisionRecord> = points
        .par_iter()
        .map(|(model, theta)| {
            evaluate_point(*theta, model, config.n, config.n_m, observables, &pulse, None)
        })
        .collect();
    sort_records(&mut records);
    Ok(records)
}

/// QCRB over the θ grid for each η; measurement precisions only when
/// observables are requested explicitly.
pub fn theta_scan(config: &SweepConfig) -> Result<Vec<PrecisionRecord>> {
    eta_theta_scan(config, &config.observables_or(&[]))
}

/// QCRB together with the best parity and `Ĵz` working points.
pub fn measurement_compare(config: &SweepConfig) -> Result<Vec<PrecisionRecord>> {
    eta_theta_scan(
        config,
        &config.observables_or(&[ObservableKind::ParityB, ObservableKind::Jz]),
    )
}

/// QCRB versus accumulation time at rate `config.gamma` for each input in
/// `config.two_theta`.
pub fn time_scan(config: &SweepConfig) -> Result<Vec<PrecisionRecord>> {
    config.validate()?;
    let pulse = Pi2Pulse::new(config.n)?;
    let observables = config.observables_or(&[]);
    let times = config.time.values()?;
    let points: Vec<(f64, f64)> = config
        .two_theta
        .iter()
        .flat_map(|&tt| times.iter().map(move |&t| (theta_from_units(tt), t)))
        .collect();
    let mut records = points
        .par_iter()
        .map(|&(theta, t)| {
            let model = LossModel::new(config.gamma, config.gamma, config.delta, t)?;
            Ok(evaluate_point(theta, &model, config.n, config.n_m, &observables, &pulse, Some(t)))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.theta
            .total_cmp(&b.theta)
            .then(a.t.unwrap_or(0.0).total_cmp(&b.t.unwrap_or(0.0)))
    });
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTheta {
    pub eta: f64,
    pub theta_opt: f64,
    pub delta_phi_opt: f64,
}

impl OptimalTheta {
    pub fn two_theta_over_pi(&self) -> f64 {
        2.0 * self.theta_opt / PI
    }
}

fn qcrb_at(theta: f64, n: usize, model: &LossModel, n_m: u32) -> f64 {
    CatParams::new(theta, n)
        .and_then(|p| cat(&p))
        .and_then(|s| lossy_state(&s, model))
        .and_then(|l| qfi(&l, &rho_derivative(&l), n_m))
        .map_or(f64::INFINITY, |q| q.delta_phi_min)
}

/// QCRB-optimal θ for each η: best grid point, then golden-section
/// refinement over the neighbouring grid cells to `Δ(2θ) < 1e−4 π`.
pub fn optimal_theta(config: &SweepConfig) -> Result<Vec<OptimalTheta>> {
    let qcrb_only = SweepConfig {
        observables: Some(vec![]),
        ..config.clone()
    };
    let records = theta_scan(&qcrb_only)?;
    optimal_theta_from(config, &records)
}

/// Same as [`optimal_theta`] but starting from existing θ-scan records.
pub fn optimal_theta_from(config: &SweepConfig, records: &[PrecisionRecord]) -> Result<Vec<OptimalTheta>> {
    let step = 0.5 * config.theta.step * PI;
    let tol = 0.5 * THETA_RESOLUTION * PI;
    let mut etas: Vec<f64> = records.iter().map(|r| r.eta).collect();
    etas.sort_by(|a, b| b.total_cmp(a));
    etas.dedup();
    etas.par_iter()
        .map(|&eta| {
            let best = records
                .iter()
                .filter(|r| r.eta == eta)
                .filter_map(|r| r.delta_phi_qcrb.map(|d| (r.theta, d)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or(Error::NumericalFailure(format!(
                    "no valid QCRB point at eta = {eta}"
                )))?;
            let model = LossModel::from_eta(eta, config.delta)?;
            let f = |th: f64| qcrb_at(th, config.n, &model, config.n_m);
            let lo = (best.0 - step).max(0.0);
            let hi = (best.0 + step).min(FRAC_PI_2);
            let refined = golden_section(f, lo, hi, tol);
            let refined_val = f(refined);
            let (theta_opt, delta_phi_opt) = if refined_val < best.1 {
                (refined, refined_val)
            } else {
                best
            };
            Ok(OptimalTheta {
                eta,
                theta_opt,
                delta_phi_opt,
            })
        })
        .collect()
}

/// `(2θ/π, grid, Q)` for one input state.
pub type HusimiField = (f64, Vec<(f64, f64)>, Vec<f64>);

/// Husimi fields for every input in `config.two_theta`, after loss
/// `config.husimi_eta`.
pub fn husimi_scan(config: &SweepConfig) -> Result<Vec<HusimiField>> {
    config.validate()?;
    let grid = HusimiGrid {
        n_theta: config.husimi_grid.0,
        n_varphi: config.husimi_grid.1,
    }
    .points()?;
    let model = LossModel::from_eta(config.husimi_eta, config.delta)?;
    config
        .two_theta
        .iter()
        .map(|&tt| {
            let state = cat(&CatParams::new(theta_from_units(tt), config.n)?)?;
            let q = if config.husimi_eta == 1.0 {
                husimi_q(&state, &grid)?
            } else {
                husimi_q(&lossy_state(&state, &model)?, &grid)?
            };
            Ok((tt, grid.clone(), q))
        })
        .collect()
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

/// Precision CSV with the fixed [`RECORD_COLUMNS`] order.
pub fn write_records_csv<W: Write>(mut out: W, records: &[PrecisionRecord], n: usize) -> io::Result<()> {
    writeln!(out, "{}", RECORD_COLUMNS.join(","))?;
    let (s, h) = (fmt12(sql(n)), fmt12(heisenberg_limit(n)));
    for r in records {
        let status = r.status().replace([',', '\n'], " ");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt12(r.theta),
            fmt12(r.eta),
            opt(r.delta_phi_qcrb),
            opt(r.f_q),
            opt(r.delta_phi_parity),
            opt(r.phi_star_parity),
            opt(r.delta_phi_jz),
            opt(r.phi_star_jz),
            fmt12(r.two_theta_over_pi()),
            opt(r.t),
            s,
            h,
            status
        )?;
    }
    Ok(())
}

pub fn write_optimal_csv<W: Write>(mut out: W, rows: &[OptimalTheta], n: usize) -> io::Result<()> {
    writeln!(out, "{}", OPTIMAL_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt12(r.eta),
            fmt12(r.theta_opt),
            fmt12(r.two_theta_over_pi()),
            fmt12(r.delta_phi_opt),
            fmt12(sql(n)),
            fmt12(heisenberg_limit(n))
        )?;
    }
    Ok(())
}

/// Sidecar JSON describing how a dataset was produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub generator: String,
    pub config: SweepConfig,
    pub columns: Vec<String>,
    pub rows: usize,
    pub sql: f64,
    pub hl: f64,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_sidecar(out: &Path, config: &SweepConfig, columns: &[&str], rows: usize) -> io::Result<()> {
    let sidecar = Sidecar {
        generator: format!("catmet {}", env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
        sql: sql(config.n),
        hl: heisenberg_limit(config.n),
    };
    let file = BufWriter::new(File::create(sidecar_path(out))?);
    serde_json::to_writer_pretty(file, &sidecar).map_err(io::Error::other)
}

/// Husimi output path for one of several states: `fig.csv` → `fig_2theta0.5.csv`.
pub fn husimi_path(out: &Path, two_theta: f64, multiple: bool) -> PathBuf {
    if !multiple {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("husimi");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_2theta{two_theta}.{ext}"))
}

pub fn write_husimi(out: &Path, grid: &[(f64, f64)], q: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(out)?);
    write_husimi_csv(&mut w, grid, q)?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small(kind: SweepKind) -> SweepConfig {
        SweepConfig {
            kind,
            n: 8,
            eta: vec![1.0, 0.9],
            theta: GridSpec {
                min: 0.0,
                max: 1.0,
                step: 0.25,
            },
            time: GridSpec {
                min: 0.0,
                max: 1.0,
                step: 0.5,
            },
            ..SweepConfig::default()
        }
    }

    #[test]
    fn grid_counts() {
        let g = GridSpec {
            min: 0.0,
            max: 1.0,
            step: 0.01,
        };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 101);
        assert_abs_diff_eq!(*v.last().unwrap(), 1.0, epsilon = 1e-12);
        assert!(GridSpec { min: 0.0, max: 1.0, step: 0.0 }.values().is_err());
        assert!(GridSpec { min: 1.0, max: 0.0, step: 0.1 }.values().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = small(SweepKind::ThetaScan);
        assert!(c.validate().is_ok());
        c.eta = vec![];
        assert!(c.validate().is_err());
        c.eta = vec![1.2];
        assert!(c.validate().is_err());
        let mut c = small(SweepKind::ThetaScan);
        c.theta.max = 1.5;
        assert!(c.validate().is_err());
        let mut c = small(SweepKind::TimeScan);
        c.two_theta.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn theta_scan_is_total_and_sorted() {
        let c = small(SweepKind::ThetaScan);
        let recs = theta_scan(&c).unwrap();
        assert_eq!(recs.len(), 2 * 5);
        assert!(recs.windows(2).all(|w| (w[0].eta, w[0].theta) <= (w[1].eta, w[1].theta)));
        assert!(recs.iter().all(|r| r.delta_phi_parity.is_none() && r.is_ok()));
        // lossless row: GHZ is best, at the Heisenberg limit
        let lossless: Vec<_> = recs.iter().filter(|r| r.eta == 1.0).collect();
        let best = lossless
            .iter()
            .min_by(|a, b| a.delta_phi_qcrb.unwrap().total_cmp(&b.delta_phi_qcrb.unwrap()))
            .unwrap();
        assert_eq!(best.theta, 0.0);
        assert_abs_diff_eq!(best.delta_phi_qcrb.unwrap(), 1.0 / 8.0, epsilon = 1e-10);
        for r in recs.iter().filter(|r| r.theta == FRAC_PI_2) {
            assert!(r.delta_phi_qcrb.unwrap() >= sql(8) - 1e-9);
        }
    }

    #[test]
    fn failed_observable_is_marked_not_dropped() {
        let c = small(SweepKind::MeasurementCompare);
        let recs = measurement_compare(&c).unwrap();
        assert_eq!(recs.len(), 10);
        // Ĵz carries no phase information for the GHZ state.
        let ghz = recs.iter().find(|r| r.theta == 0.0 && r.eta == 1.0).unwrap();
        assert!(ghz.delta_phi_jz.is_none());
        assert!(ghz.status().contains("jz"));
        assert!(ghz.delta_phi_parity.is_some());
        for r in &recs {
            if let (Some(p), Some(q)) = (r.delta_phi_parity, r.delta_phi_qcrb) {
                assert!(p >= q - 1e-9);
            }
        }
    }

    #[test]
    fn time_scan_starts_lossless() {
        let c = small(SweepKind::TimeScan);
        let recs = time_scan(&c).unwrap();
        assert_eq!(recs.len(), 4 * 3);
        let first = &recs[0];
        assert_eq!(first.theta, 0.0);
        assert_eq!(first.t, Some(0.0));
        assert_abs_diff_eq!(first.delta_phi_qcrb.unwrap(), 1.0 / 8.0, epsilon = 1e-10);
    }

    #[test]
    fn optimal_theta_lossless_is_ghz() {
        let mut c = small(SweepKind::OptimalTheta);
        c.eta = vec![1.0];
        let opt = optimal_theta(&c).unwrap();
        assert_eq!(opt.len(), 1);
        assert_eq!(opt[0].theta_opt, 0.0);
        assert_abs_diff_eq!(opt[0].delta_phi_opt, 1.0 / 8.0, epsilon = 1e-10);
    }

    #[test]
    fn csv_is_deterministic() {
        let c = small(SweepKind::ThetaScan);
        let render = || {
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &theta_scan(&c).unwrap(), c.n).unwrap();
            buf
        };
        let a = render();
        assert_eq!(a, render());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("theta,eta,delta_phi_qcrb,f_q,"));
        let header_cols = text.lines().next().unwrap().split(',').count();
        assert!(text.lines().all(|l| l.split(',').count() == header_cols));
    }

    #[test]
    fn husimi_paths() {
        let p = Path::new("/tmp/fig.csv");
        assert_eq!(husimi_path(p, 0.5, false), p);
        assert_eq!(husimi_path(p, 0.5, true), Path::new("/tmp/fig_2theta0.5.csv"));
        assert_eq!(sidecar_path(p), Path::new("/tmp/fig.csv.json"));
    }

    #[test]
    fn husimi_scan_shapes() {
        let mut c = small(SweepKind::Husimi);
        c.two_theta = vec![0.0];
        c.husimi_grid = (5, 9);
        let out = husimi_scan(&c).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].2.len(), 45);
        c.husimi_eta = 0.9;
        let lossy = husimi_scan(&c).unwrap();
        assert!(lossy[0].2.iter().all(|q| (0.0..=1.0).contains(q)));
    }
}
