//! Oracle suites: independent cross-checks of the pipeline that the CLI's
//! `validate` subcommand and the acceptance tests run.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::{evolve_exact, lindblad_evolve, lossy_state, phase_rotation, LossModel, Pi2Pulse};
use crate::density::DensityMatrix;
use crate::error::Result;
use crate::fisher::{pure_qfi, qfi, rho_derivative};
use crate::measure::{Observable, ObservableKind, PhaseResponse};
use crate::states::{cat, CatParams, PureState};

/// Outcome of one suite: the worst observed deviation against its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            checks: 0,
            worst: 0.0,
            tolerance,
            failures: vec![],
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Records one deviation; anything above tolerance (or NaN) is a failure.
    fn check(&mut self, deviation: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        if deviation.is_nan() || deviation > self.worst {
            self.worst = deviation;
        }
        if deviation.is_nan() || deviation > self.tolerance {
            self.failures.push(format!("{}: deviation {deviation:e}", what()));
        }
    }

    fn error(&mut self, what: String) {
        self.checks += 1;
        self.failures.push(what);
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} checks={:<5} worst={:.3e} tol={:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.worst,
            self.tolerance
        )?;
        for line in self.failures.iter().take(5) {
            write!(f, "\n    {line}")?;
        }
        if self.failures.len() > 5 {
            write!(f, "\n    ... {} more", self.failures.len() - 5)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationPlan {
    pub seed: u64,
    pub integrator_n: Vec<usize>,
    pub gamma_t: Vec<f64>,
    pub delta_t: Vec<f64>,
    pub pure_qfi_samples: usize,
    pub pure_qfi_max_n: usize,
    pub physical_samples: usize,
    pub physical_max_n: usize,
    pub monotone_n: usize,
    pub monotone_thetas: Vec<f64>,
    pub monotone_etas: Vec<f64>,
}

impl Default for ValidationPlan {
    fn default() -> Self {
        Self {
            seed: 20240917,
            integrator_n: vec![1, 2, 4, 8, 12],
            gamma_t: vec![0.05, 0.1, 0.2],
            delta_t: vec![0.3, 1.0],
            pure_qfi_samples: 20,
            pure_qfi_max_n: 40,
            physical_samples: 50,
            physical_max_n: 24,
            monotone_n: 20,
            monotone_thetas: (0..=10).map(|i| i as f64 * FRAC_PI_2 / 10.0).collect(),
            monotone_etas: vec![1.0, 0.99, 0.975, 0.95, 0.925, 0.9, 0.85, 0.8, 0.7, 0.5],
        }
    }
}

fn random_cat(rng: &mut ChaCha8Rng, max_n: usize) -> Result<(CatParams, PureState)> {
    let n = rng.random_range(1..=max_n);
    let theta = rng.random_range(0.0..=FRAC_PI_2);
    let varphi = rng.random_range(0.0..2.0 * PI);
    let p = CatParams::with_varphi(theta, varphi, n)?;
    Ok((p, cat(&p)?))
}

/// Kraus channel plus rotation against RK4 on the master equation.
pub fn channel_vs_integrator(plan: &ValidationPlan) -> SuiteReport {
    let mut rep = SuiteReport::new("channel-vs-integrator", 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    for &n in &plan.integrator_n {
        for &gt in &plan.gamma_t {
            for &dt_total in &plan.delta_t {
                // δ = 1, so δT fixes T; the second rate makes mode b leak faster.
                let t = dt_total;
                let ga = gt / t;
                let theta = rng.random_range(0.0..=FRAC_PI_2);
                let varphi = rng.random_range(0.0..2.0 * PI);
                for gb in [ga, 2.0 * ga] {
                    let label = || format!("N={n} gammaT={gt} deltaT={dt_total} gamma_b/gamma_a={}", gb / ga);
                    let outcome = (|| {
                        let input = cat(&CatParams::with_varphi(theta, varphi, n)?)?.density();
                        let model = LossModel::new(ga, gb, 1.0, t)?;
                        let exact = evolve_exact(&input, &model)?;
                        let rk4 = lindblad_evolve(&input, &model, model.default_step(n))?;
                        exact.trace_distance(&rk4)
                    })();
                    match outcome {
                        Ok(d) => rep.check(d, label),
                        Err(e) => rep.error(format!("{}: {e}", label())),
                    }
                }
            }
        }
    }
    rep
}

/// Mixed-state QFI on rank-1 inputs against `4 Var(Ĵz)` from the amplitudes.
pub fn pure_qfi_oracle(plan: &ValidationPlan) -> SuiteReport {
    let mut rep = SuiteReport::new("pure-qfi", 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x5eed);
    for _ in 0..plan.pure_qfi_samples {
        let outcome = random_cat(&mut rng, plan.pure_qfi_max_n).and_then(|(p, s)| {
            let rho = s.density();
            let f = qfi(&rho, &rho_derivative(&rho), 1)?.f_q;
            Ok((p, f, pure_qfi(&s)))
        });
        match outcome {
            Ok((p, mixed, pure)) => rep.check((mixed - pure).abs(), || {
                format!("N={} theta={} varphi={}: {mixed} vs {pure}", p.n, p.theta, p.varphi)
            }),
            Err(e) => rep.error(e.to_string()),
        }
    }
    rep
}

fn check_stage(rep: &mut SuiteReport, rho: &DensityMatrix, stage: &str, label: &str) {
    match rho.check_physical() {
        Ok(()) => rep.check(0.0, String::new),
        Err(e) => rep.error(format!("{label} after {stage}: {e}")),
    }
}

/// Trace, Hermiticity, positivity and `⟨n̂⟩ = Nη` after every stage.
pub fn physicality(plan: &ValidationPlan) -> SuiteReport {
    let mut rep = SuiteReport::new("physicality", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0xface);
    let mut pulses: Vec<Option<Pi2Pulse>> = vec![None; plan.physical_max_n + 1];
    for _ in 0..plan.physical_samples {
        let eta = rng.random_range(0.5..=1.0);
        let phi = rng.random_range(-PI..PI);
        let (p, state) = match random_cat(&mut rng, plan.physical_max_n) {
            Ok(v) => v,
            Err(e) => {
                rep.error(e.to_string());
                continue;
            }
        };
        let label = format!("N={} theta={:.4} eta={eta:.4}", p.n, p.theta);
        let outcome = (|| {
            let input = state.density();
            check_stage(&mut rep, &input, "preparation", &label);
            let lossy = lossy_state(&state, &LossModel::from_eta(eta, 0.0)?)?;
            check_stage(&mut rep, &lossy, "loss", &label);
            let n_eta = p.n as f64 * eta;
            rep.check((lossy.mean_number() - n_eta).abs(), || format!("{label}: mean number"));
            let rotated = phase_rotation(&lossy, phi);
            check_stage(&mut rep, &rotated, "rotation", &label);
            let pulse = pulses[p.n].get_or_insert_with(|| Pi2Pulse::new(p.n).expect("n >= 1"));
            let out = pulse.apply(&rotated)?;
            check_stage(&mut rep, &out, "pulse", &label);
            // Neither the rotation nor the pulse changes the particle number.
            rep.check((out.mean_number() - n_eta).abs(), || format!("{label}: mean number after pulse"));
            Ok::<(), crate::Error>(())
        })();
        if let Err(e) = outcome {
            rep.error(format!("{label}: {e}"));
        }
    }
    rep
}

/// `F_Q` non-increasing as η decreases, and parity never below the QCRB.
pub fn monotonicity(plan: &ValidationPlan) -> SuiteReport {
    let mut rep = SuiteReport::new("monotonicity", 1e-9);
    let n = plan.monotone_n;
    let pulse = match Pi2Pulse::new(n) {
        Ok(p) => p,
        Err(e) => {
            rep.error(e.to_string());
            return rep;
        }
    };
    let mut etas = plan.monotone_etas.clone();
    etas.sort_by(|a, b| b.total_cmp(a));
    for &theta in &plan.monotone_thetas {
        let mut previous: Option<(f64, f64)> = None;
        for &eta in &etas {
            let label = format!("N={n} theta={theta:.4} eta={eta}");
            let outcome = (|| {
                let state = cat(&CatParams::new(theta, n)?)?;
                let lossy = lossy_state(&state, &LossModel::from_eta(eta, 1.0)?)?;
                let q = qfi(&lossy, &rho_derivative(&lossy), 1)?;
                let w = PhaseResponse::new(&lossy, &pulse, Observable::single_shot(ObservableKind::ParityB))?
                    .best()?;
                Ok::<_, crate::Error>((q, w))
            })();
            match outcome {
                Ok((q, w)) => {
                    if let Some((eta_prev, f_prev)) = previous {
                        // relative growth of F_Q when η drops from eta_prev to eta
                        rep.check((q.f_q - f_prev) / f_prev.max(1.0), || {
                            format!("{label}: F_Q {} above {f_prev} at eta={eta_prev}", q.f_q)
                        });
                    }
                    previous = Some((eta, q.f_q));
                    rep.check(q.delta_phi_min - w.delta_phi, || {
                        format!("{label}: parity {} below QCRB {}", w.delta_phi, q.delta_phi_min)
                    });
                }
                Err(e) => rep.error(format!("{label}: {e}")),
            }
        }
    }
    rep
}

pub fn run_all(plan: &ValidationPlan) -> Vec<SuiteReport> {
    vec![
        channel_vs_integrator(plan),
        pure_qfi_oracle(plan),
        physicality(plan),
        monotonicity(plan),
    ]
}
