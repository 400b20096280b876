//! Outer alternating optimization over the BS beamformer and RIS phases.
//!
//! Each outer iteration runs the WMMSE subproblem for `w` with `θ` fixed and
//! then the SDR subproblem for `θ` with `w` fixed. A subproblem's output is
//! adopted only if the true secrecy rate does not drop, so the recorded
//! secrecy-rate trace is non-decreasing.
//!
//! Besides the `θ = 0` start, a few screened random-phase starts are run and
//! the best final point is kept, since the joint problem has local optima.

use std::f64::consts::PI;
use std::time::Instant;

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::active_bf::{active_bcd, closed_form_beamformer, mrt, ActiveConfig};
use crate::channel::{ChannelSet, Scenario};
use crate::error::{Error, Result};
use crate::numerics::{standard_complex_normal, CVector};
use crate::passive_bf::{passive_bcd, PassiveConfig, SdpConfig};
use crate::rates::EffectiveChannels;
use crate::rates::{
    effective_channels, evaluate, secrecy_rate, BeamformingState, ReflectionCoefficients,
    SecrecyRate,
};
use crate::rng::substream;

const JAMMER_STREAM: u64 = 0x7A33;
const RANDOMIZATION_STREAM: u64 = 0x5D2;
const RESTART_STREAM: u64 = 0x2E57;

/// How the eavesdropper's jamming beamformer `v` is chosen. It stays fixed
/// during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerPolicy {
    /// Maximum-ratio transmission toward the user's direct channel.
    #[default]
    Mrt,
    /// Isotropic random direction at full power.
    Random,
    /// No jamming.
    Zero,
}

/// Jamming beamformer with `‖v‖² = p_jam` (or `v = 0` for [`JammerPolicy::Zero`]).
pub fn jammer_beamformer<R: Rng + ?Sized>(
    ch: &ChannelSet,
    p_jam: f64,
    policy: JammerPolicy,
    rng: &mut R,
) -> CVector {
    let nt = ch.eve_tx_antennas();
    match policy {
        JammerPolicy::Zero => CVector::zeros(nt),
        JammerPolicy::Mrt if ch.g_eu.norm() > 0.0 => mrt(&ch.g_eu, p_jam),
        JammerPolicy::Mrt | JammerPolicy::Random => {
            if policy == JammerPolicy::Mrt {
                warn!("jammer-user channel is zero; using a random jamming direction");
            }
            let mut v = CVector::from_fn(nt, |_, _| standard_complex_normal(rng));
            let n = v.norm();
            if n == 0.0 {
                return mrt(&CVector::zeros(nt), p_jam);
            }
            v *= Complex64::new(p_jam.sqrt() / n, 0.0);
            v
        }
    }
}

/// Starting point of each active (WMMSE) subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveWarmStart {
    /// The current beamformer.
    Incumbent,
    /// The better, by true secrecy rate, of the current beamformer and the
    /// closed-form fixed-`θ` maximizer.
    #[default]
    ClosedForm,
}

/// Outer-loop and subproblem settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// Relative secrecy-rate change that ends the outer loop.
    pub epsilon_stop: f64,
    pub max_outer_iterations: usize,
    pub active_tol: f64,
    pub active_max_iter: usize,
    pub passive_tol: f64,
    pub passive_max_iter: usize,
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
    pub n_randomization_draws: usize,
    /// Extra runs besides the `θ = 0` start; the best final run is kept.
    pub restarts: usize,
    /// Random phase vectors screened to pick the restart points.
    pub screening_draws: usize,
    /// One BCD pass per subproblem per outer iteration instead of running
    /// each to its own tolerance.
    pub one_pass: bool,
    pub jammer: JammerPolicy,
    pub active_warm_start: ActiveWarmStart,
    /// Stop at the first subproblem failure instead of keeping the incumbent.
    pub abort_on_failure: bool,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            epsilon_stop: 1e-3,
            max_outer_iterations: 100,
            active_tol: 1e-4,
            active_max_iter: 100,
            passive_tol: 1e-4,
            passive_max_iter: 50,
            sdp_tol: 1e-6,
            sdp_max_iter: 5000,
            n_randomization_draws: 200,
            restarts: 1,
            screening_draws: 1024,
            one_pass: false,
            jammer: JammerPolicy::Mrt,
            active_warm_start: ActiveWarmStart::ClosedForm,
            abort_on_failure: false,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon_stop", self.epsilon_stop),
            ("active_tol", self.active_tol),
            ("passive_tol", self.passive_tol),
            ("sdp_tol", self.sdp_tol),
        ];
        for (key, value) in positive {
            if value.is_nan() || value <= 0.0 {
                return Err(Error::invalid(key, format!("must be > 0, got {value}")));
            }
        }
        let counts = [
            ("max_outer_iterations", self.max_outer_iterations),
            ("active_max_iter", self.active_max_iter),
            ("passive_max_iter", self.passive_max_iter),
            ("sdp_max_iter", self.sdp_max_iter),
            ("n_randomization_draws", self.n_randomization_draws),
        ];
        for (key, value) in counts {
            if value == 0 {
                return Err(Error::invalid(key, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn active(&self) -> ActiveConfig {
        ActiveConfig {
            tol: self.active_tol,
            max_iter: if self.one_pass {
                1
            } else {
                self.active_max_iter
            },
        }
    }

    pub fn passive(&self) -> PassiveConfig {
        PassiveConfig {
            tol: self.passive_tol,
            max_iter: if self.one_pass {
                1
            } else {
                self.passive_max_iter
            },
            sdp: SdpConfig {
                tol: self.sdp_tol,
                max_iter: self.sdp_max_iter,
            },
            n_draws: self.n_randomization_draws,
        }
    }
}

/// State after one outer iteration (iteration 0 is the initialization).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub user_rate: f64,
    pub eve_rate: f64,
    /// Raw (unclipped) secrecy rate, bit/s/Hz.
    pub secrecy_rate: f64,
    pub active_cycles: usize,
    pub passive_iterations: usize,
    pub sdp_iterations: usize,
    pub active_accepted: bool,
    pub passive_accepted: bool,
    pub failure: Option<String>,
    pub wall_ms: f64,
}

impl IterationRecord {
    fn initial(rates: &SecrecyRate) -> Self {
        Self {
            iteration: 0,
            user_rate: rates.user,
            eve_rate: rates.eve,
            secrecy_rate: rates.raw,
            active_cycles: 0,
            passive_iterations: 0,
            sdp_iterations: 0,
            active_accepted: false,
            passive_accepted: false,
            failure: None,
            wall_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    /// Initialization followed by one record per outer iteration.
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Which start produced this run: 0 is `θ = 0`, later ones are seeded
    /// random phases.
    pub start: usize,
}

impl OptimizationTrace {
    pub fn secrecy_rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.secrecy_rate).collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub w: CVector,
    pub theta: ReflectionCoefficients,
    pub v: CVector,
    pub rates: SecrecyRate,
    pub trace: OptimizationTrace,
}

fn relative_change(current: f64, previous: f64) -> f64 {
    (current - previous).abs() / previous.abs().max(1e-12)
}

/// Starting beamformer for an active subproblem.
fn active_start(
    eff: &EffectiveChannels,
    v: &CVector,
    w: &CVector,
    p_bs: f64,
    mode: ActiveWarmStart,
) -> Result<CVector> {
    if mode == ActiveWarmStart::Incumbent {
        return Ok(w.clone());
    }
    let candidate = closed_form_beamformer(eff, v, p_bs)?;
    let rate = |w: &CVector| -> Result<f64> {
        Ok(secrecy_rate(eff, &BeamformingState::new(w.clone(), v.clone()))?.raw)
    };
    Ok(if rate(&candidate)? > rate(w)? {
        candidate
    } else {
        w.clone()
    })
}

fn mrt_on_effective(
    ch: &ChannelSet,
    theta: &ReflectionCoefficients,
    s: &Scenario,
) -> Result<CVector> {
    let eff = effective_channels(ch, theta, s.sigma_u2, s.sigma_e2)?;
    let h = eff.h_bu.adjoint().column(0).into_owned();
    Ok(mrt(&h, s.p_bs))
}

/// Alternating optimization from `θ = 0` and MRT `w`, plus `cfg.restarts`
/// screened random-phase starts, with the jammer chosen by `cfg.jammer`.
/// Returns the best final run.
pub fn optimize(
    ch: &ChannelSet,
    s: &Scenario,
    cfg: &AlgorithmConfig,
) -> Result<OptimizationResult> {
    let v = jammer_beamformer(
        ch,
        s.p_jam,
        cfg.jammer,
        &mut substream(s.seed, &[JAMMER_STREAM]),
    );
    optimize_with_jammer(ch, s, cfg, v)
}

/// As [`optimize`] with a given jamming beamformer.
pub fn optimize_with_jammer(
    ch: &ChannelSet,
    s: &Scenario,
    cfg: &AlgorithmConfig,
    v: CVector,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    ch.validate()?;
    if v.len() != ch.eve_tx_antennas() {
        return Err(Error::dims("optimize: v", ch.eve_tx_antennas(), v.len()));
    }
    let mut starts = vec![ReflectionCoefficients::zeros(ch.ris_elements())];
    starts.extend(screened_starts(ch, s, cfg, &v)?);
    let mut best: Option<OptimizationResult> = None;
    for (index, theta0) in starts.into_iter().enumerate() {
        let mut run = run_from(ch, s, cfg, &v, theta0, index)?;
        run.trace.start = index;
        if best.as_ref().is_none_or(|b| run.rates.raw > b.rates.raw) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

/// The `cfg.restarts` best of `cfg.screening_draws` seeded random phase
/// vectors, ranked by the secrecy rate of their exact fixed-`θ` beamformer.
fn screened_starts(
    ch: &ChannelSet,
    s: &Scenario,
    cfg: &AlgorithmConfig,
    v: &CVector,
) -> Result<Vec<ReflectionCoefficients>> {
    if cfg.restarts == 0 {
        return Ok(Vec::new());
    }
    let draws = cfg.screening_draws.max(cfg.restarts);
    let mut rng = substream(s.seed, &[RESTART_STREAM]);
    let mut scored = Vec::with_capacity(draws);
    for _ in 0..draws {
        let theta = ReflectionCoefficients::from_phases(
            (0..ch.ris_elements()).map(|_| rng.random_range(0.0..2.0 * PI)),
        );
        let eff = effective_channels(ch, &theta, s.sigma_u2, s.sigma_e2)?;
        let w = closed_form_beamformer(&eff, v, s.p_bs)?;
        let rate = secrecy_rate(&eff, &BeamformingState::new(w, v.clone()))?.raw;
        scored.push((rate, theta));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(scored
        .into_iter()
        .take(cfg.restarts)
        .map(|(_, t)| t)
        .collect())
}

/// One alternating-optimization run from `theta0` and MRT `w`.
fn run_from(
    ch: &ChannelSet,
    s: &Scenario,
    cfg: &AlgorithmConfig,
    v: &CVector,
    theta0: ReflectionCoefficients,
    start_index: usize,
) -> Result<OptimizationResult> {
    let v = v.clone();
    let (su, se) = (s.sigma_u2, s.sigma_e2);
    let active_cfg = cfg.active();
    let passive_cfg = cfg.passive();

    let mut theta = theta0;
    let mut w = mrt_on_effective(ch, &theta, s)?;
    let mut rates = evaluate(
        ch,
        &theta,
        &BeamformingState::new(w.clone(), v.clone()),
        su,
        se,
    )?;
    let mut records = vec![IterationRecord::initial(&rates)];
    let mut converged = false;

    for t in 1..=cfg.max_outer_iterations {
        let start = Instant::now();
        let previous = rates.raw;
        let mut record = IterationRecord::initial(&rates);
        record.iteration = t;
        let mut failures = Vec::new();

        let eff = effective_channels(ch, &theta, su, se)?;
        let outcome = active_start(&eff, &v, &w, s.p_bs, cfg.active_warm_start)
            .and_then(|start| active_bcd(&eff, &v, &start, s.p_bs, &active_cfg));
        match outcome {
            Ok(out) => {
                record.active_cycles = out.cycles.len();
                if out.secrecy_rate >= rates.raw {
                    w = out.w;
                    record.active_accepted = true;
                    rates = evaluate(
                        ch,
                        &theta,
                        &BeamformingState::new(w.clone(), v.clone()),
                        su,
                        se,
                    )?;
                }
            }
            Err(e) if cfg.abort_on_failure => return Err(e),
            Err(e) => failures.push(format!("active: {e}")),
        }

        let bf = BeamformingState::new(w.clone(), v.clone());
        let mut rng = substream(
            s.seed,
            &[RANDOMIZATION_STREAM, start_index as u64, t as u64],
        );
        match passive_bcd(ch, &bf, &theta, su, se, &passive_cfg, &mut rng) {
            Ok(out) => {
                record.passive_iterations = out.iterations;
                record.sdp_iterations = out.sdp_iterations;
                if out.improved && out.secrecy_rate >= rates.raw {
                    theta = out.theta;
                    record.passive_accepted = true;
                    rates = evaluate(ch, &theta, &bf, su, se)?;
                }
            }
            Err(e) if cfg.abort_on_failure => return Err(e),
            Err(e) => failures.push(format!("passive: {e}")),
        }

        record.user_rate = rates.user;
        record.eve_rate = rates.eve;
        record.secrecy_rate = rates.raw;
        record.failure = (!failures.is_empty()).then(|| failures.join("; "));
        record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        records.push(record);

        if relative_change(rates.raw, previous) <= cfg.epsilon_stop {
            converged = true;
            break;
        }
    }
    let iterations_used = records.len() - 1;
    Ok(OptimizationResult {
        w,
        theta,
        v,
        rates,
        trace: OptimizationTrace {
            records,
            converged,
            iterations_used,
            start: 0,
        },
    })
}

/// Benchmark without the RIS: every RIS-composite channel is removed and only
/// `w` is optimized.
pub fn optimize_without_ris(
    ch: &ChannelSet,
    s: &Scenario,
    cfg: &AlgorithmConfig,
) -> Result<OptimizationResult> {
    let v = jammer_beamformer(
        ch,
        s.p_jam,
        cfg.jammer,
        &mut substream(s.seed, &[JAMMER_STREAM]),
    );
    optimize_without_ris_with_jammer(ch, s, cfg, v)
}

pub fn optimize_without_ris_with_jammer(
    ch: &ChannelSet,
    s: &Scenario,
    cfg: &AlgorithmConfig,
    v: CVector,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let reduced = ch.without_ris();
    let (su, se) = (s.sigma_u2, s.sigma_e2);
    let theta = ReflectionCoefficients::zeros(ch.ris_elements());
    let eff = effective_channels(&reduced, &theta, su, se)?;
    let w0 = mrt(&ch.h_bu, s.p_bs);
    let initial = evaluate(
        &reduced,
        &theta,
        &BeamformingState::new(w0.clone(), v.clone()),
        su,
        se,
    )?;

    let start = Instant::now();
    let mut record = IterationRecord::initial(&initial);
    record.iteration = 1;
    let mut w = w0;
    let mut converged = false;
    let outcome = active_start(&eff, &v, &w, s.p_bs, cfg.active_warm_start)
        .and_then(|start| active_bcd(&eff, &v, &start, s.p_bs, &cfg.active()));
    match outcome {
        Ok(out) => {
            record.active_cycles = out.cycles.len();
            converged = out.converged;
            if out.secrecy_rate >= initial.raw {
                w = out.w;
                record.active_accepted = true;
            }
        }
        Err(e) if cfg.abort_on_failure => return Err(e),
        Err(e) => record.failure = Some(format!("active: {e}")),
    }
    let rates = evaluate(
        &reduced,
        &theta,
        &BeamformingState::new(w.clone(), v.clone()),
        su,
        se,
    )?;
    record.user_rate = rates.user;
    record.eve_rate = rates.eve;
    record.secrecy_rate = rates.raw;
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(OptimizationResult {
        w,
        theta,
        v,
        rates,
        trace: OptimizationTrace {
            records: vec![IterationRecord::initial(&initial), record],
            converged,
            iterations_used: 1,
            start: 0,
        },
    })
}

/// Operation-count estimate `T2 ((K² + 2 N_r³) + T1 (L + 1)^4.5) ln(1/ε)`.
pub fn complexity_estimate(s: &Scenario, t1: usize, t2: usize, epsilon: f64) -> Result<f64> {
    if t1 == 0 || t2 == 0 {
        return Err(Error::invalid("iterations", "T1 and T2 must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    let k = s.bs_antennas as f64;
    let nr = s.eve_rx_antennas as f64;
    let l = s.ris_elements as f64;
    Ok(t2 as f64
        * ((k * k + 2.0 * nr.powi(3)) + t1 as f64 * (l + 1.0).powf(4.5))
        * (1.0 / epsilon).ln())
}
