//! Monte Carlo for the dual process under a barrier and for the reflected
//! classical process until it first passes a level.
//!
//! The deterministic flow is advanced exactly via [`FlowClock`]; the only
//! error left is sampling error plus the horizon cut, which is bounded and
//! reported.

mod clock;

pub use clock::{time_to_zero, FlowClock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical_exit::ClassicalModel;
use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::model::{JumpLaw, ModelParams};

/// Monte Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Time cap; `40 / q` if absent.
    pub horizon: Option<f64>,
    /// Cells in the tabulated travel-time function.
    pub clock_cells: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_paths: 10_000, seed: 0, horizon: None, clock_cells: 4096 }
    }
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, ..Self::default() }
    }

    pub fn resolved_horizon(&self, q: f64) -> Result<f64> {
        match self.horizon {
            Some(t) if t > 0.0 => Ok(t),
            Some(t) => Err(Error::Argument(format!("horizon must be positive, got {t}"))),
            None if q > 0.0 => Ok(40.0 / q),
            None => Err(Error::Argument("a horizon is required when q = 0".into())),
        }
    }
}

/// The random stream of path `index`: one ChaCha generator per seed, one stream per path.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// Dual: a gain arrived.
    Gain,
    /// Dual: a dividend was paid.
    Dividend,
    /// Dual: the surplus reached zero.
    Ruin,
    /// Classical: a loss arrived.
    Loss,
    /// Classical: capital was injected.
    Injection,
    /// Classical: the level was passed from below.
    Exit,
    Censored,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Gain => "gain",
            EventKind::Dividend => "dividend",
            EventKind::Ruin => "ruin",
            EventKind::Loss => "loss",
            EventKind::Injection => "injection",
            EventKind::Exit => "exit",
            EventKind::Censored => "censored",
        }
    }
}

/// One entry of a path log. `level` is the state right after the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub amount: f64,
    pub level: f64,
}

/// Outcome of one dual path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    /// `∫ e^{-qt} dL_t` up to ruin or the horizon.
    pub dividends: f64,
    pub ruin_time: Option<f64>,
    pub censored: bool,
    pub events: Vec<Event>,
}

impl PathResult {
    /// Discounted dividends recomputed from the event log.
    pub fn replay_total(&self, q: f64) -> f64 {
        self.events.iter().filter(|e| e.kind == EventKind::Dividend).map(|e| e.amount * (-q * e.t).exp()).sum()
    }
}

/// Outcome of one classical path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalPath {
    /// `e^{-q T_a⁺}`, zero if censored.
    pub discount_at_exit: f64,
    /// `∫ e^{-qs} dL̃⁰_s` up to exit or the horizon.
    pub injections: f64,
    pub exit_time: Option<f64>,
    pub censored: bool,
    pub events: Vec<Event>,
}

/// `(t, event, amount, level)` rows.
pub fn path_log_csv(events: &[Event]) -> String {
    let mut out = String::from("t,event,amount,level\n");
    for e in events {
        out.push_str(&format!("{},{},{},{}\n", fmt_num(e.t), e.kind.name(), fmt_num(e.amount), fmt_num(e.level)));
    }
    out
}

/// Sample mean with a normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_paths: usize,
    pub censored_fraction: f64,
    /// Upper bound on what the horizon cut can hide.
    pub bias_bound: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl SimEstimate {
    pub fn from_samples(samples: &[f64], censored: usize, bias_bound: f64) -> Self {
        let n = samples.len();
        let mean = if n == 0 { 0.0 } else { compensated_sum(samples.iter().copied()) / n as f64 };
        let var = if n < 2 { 0.0 } else { compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64 };
        let stderr = (var / n.max(1) as f64).sqrt();
        Self {
            mean,
            stderr,
            ci_low: mean - 1.96 * stderr,
            ci_high: mean + 1.96 * stderr,
            n_paths: n,
            censored_fraction: if n == 0 { 0.0 } else { censored as f64 / n as f64 },
            bias_bound,
        }
    }

    /// `|mean - value| ≤ k · stderr`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

fn interarrival<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda > 0.0 {
        let e: f64 = rng.sample(Exp1);
        e / lambda
    } else {
        f64::INFINITY
    }
}

/// The dual process under the barrier at `β`, ready to run many paths.
#[derive(Debug)]
pub struct DualSimulator {
    lambda: f64,
    q: f64,
    jumps: JumpLaw,
    beta: f64,
    horizon: f64,
    clock: FlowClock,
}

impl DualSimulator {
    pub fn new(params: &ModelParams, beta: f64, cfg: &SimConfig) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Argument(format!("barrier must be finite and nonnegative, got {beta}")));
        }
        let cost = params.cost.clone();
        let clock = FlowClock::new(move |y| cost.rate(y), beta, cfg.clock_cells)?;
        Ok(Self {
            lambda: params.lambda,
            q: params.q,
            jumps: params.jumps.clone(),
            beta,
            horizon: cfg.resolved_horizon(params.q)?,
            clock,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// One path from `x0`. Each cycle draws the waiting time, then the gain.
    pub fn run<R: Rng + ?Sized>(&self, x0: f64, rng: &mut R, record: bool) -> PathResult {
        let beta = self.beta;
        let mut events = Vec::new();
        let mut log = |e: Event| {
            if record {
                events.push(e)
            }
        };
        let mut total = 0.0;
        let mut t = 0.0;
        let mut level = x0.max(0.0);
        if level > beta {
            let amount = level - beta;
            total += amount;
            level = beta;
            log(Event { t, kind: EventKind::Dividend, amount, level });
        }
        let (ruin_time, censored) = loop {
            if level <= 0.0 {
                log(Event { t, kind: EventKind::Ruin, amount: 0.0, level: 0.0 });
                break (Some(t), false);
            }
            let to_ruin = self.clock.time(level);
            let gap = interarrival(self.lambda, rng);
            if to_ruin <= gap {
                let at = t + to_ruin;
                if at > self.horizon {
                    log(Event { t: self.horizon, kind: EventKind::Censored, amount: 0.0, level: f64::NAN });
                    break (None, true);
                }
                log(Event { t: at, kind: EventKind::Ruin, amount: 0.0, level: 0.0 });
                break (Some(at), false);
            }
            t += gap;
            if t > self.horizon {
                log(Event { t: self.horizon, kind: EventKind::Censored, amount: 0.0, level: f64::NAN });
                break (None, true);
            }
            let gain = self.jumps.sample(rng);
            level = self.clock.level_at(to_ruin - gap) + gain;
            log(Event { t, kind: EventKind::Gain, amount: gain, level: level.min(beta) });
            if level > beta {
                let amount = level - beta;
                total += amount * (-self.q * t).exp();
                level = beta;
                log(Event { t, kind: EventKind::Dividend, amount, level });
            }
        };
        PathResult { dividends: total, ruin_time, censored, events }
    }

    /// `e^{-qT} (β + λ E C₁ / q)`: what a path alive at the horizon can still earn.
    pub fn bias_bound(&self) -> f64 {
        if self.q > 0.0 {
            (-self.q * self.horizon).exp() * (self.beta + self.lambda * self.jumps.mean() / self.q)
        } else {
            f64::INFINITY
        }
    }
}

/// One recorded dual path under the barrier at `β`.
pub fn simulate_path<R: Rng + ?Sized>(params: &ModelParams, beta: f64, x0: f64, rng: &mut R, cfg: &SimConfig) -> Result<PathResult> {
    if !(x0 >= 0.0) {
        return Err(Error::Domain { what: "initial surplus", x: x0 });
    }
    Ok(DualSimulator::new(params, beta, cfg)?.run(x0, rng, true))
}

/// `E_x[∫_0^σ e^{-qt} dL_t]` under the barrier at `β`.
pub fn estimate_value(params: &ModelParams, beta: f64, x0: f64, cfg: &SimConfig) -> Result<SimEstimate> {
    params.require_positive_q()?;
    if !(x0 >= 0.0) {
        return Err(Error::Domain { what: "initial surplus", x: x0 });
    }
    let sim = DualSimulator::new(params, beta, cfg)?;
    let paths: Vec<(f64, bool)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let r = sim.run(x0, &mut path_rng(cfg.seed, i), false);
            (r.dividends, r.censored)
        })
        .collect();
    let samples: Vec<f64> = paths.iter().map(|p| p.0).collect();
    let censored = paths.iter().filter(|p| p.1).count();
    Ok(SimEstimate::from_samples(&samples, censored, sim.bias_bound()))
}

/// The classical process reflected at zero, stopped on passing `a`.
#[derive(Debug)]
pub struct ClassicalSimulator {
    lambda: f64,
    q: f64,
    jumps: JumpLaw,
    a: f64,
    horizon: f64,
    clock: FlowClock,
}

impl ClassicalSimulator {
    pub fn new(cm: &ClassicalModel, a: f64, cfg: &SimConfig) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Argument(format!("exit level must be finite and nonnegative, got {a}")));
        }
        let premium = cm.premium.clone();
        let clock = FlowClock::new(move |u| premium.rate(u), a, cfg.clock_cells)?;
        Ok(Self {
            lambda: cm.lambda,
            q: cm.q,
            jumps: cm.jumps.clone(),
            a,
            horizon: cfg.resolved_horizon(cm.q)?,
            clock,
        })
    }

    /// One path from `x0`; a negative `x0` is lifted to zero by an injection at time zero.
    pub fn run<R: Rng + ?Sized>(&self, x0: f64, rng: &mut R, record: bool) -> ClassicalPath {
        let mut events = Vec::new();
        let mut log = |e: Event| {
            if record {
                events.push(e)
            }
        };
        let mut injections = 0.0;
        let mut t = 0.0;
        let mut u = x0;
        if u < 0.0 {
            injections += -u;
            log(Event { t, kind: EventKind::Injection, amount: -u, level: 0.0 });
            u = 0.0;
        }
        let total = self.clock.total();
        let (exit_time, censored) = loop {
            if u >= self.a {
                log(Event { t, kind: EventKind::Exit, amount: 0.0, level: self.a });
                break (Some(t), false);
            }
            let clock_u = self.clock.time(u);
            let to_exit = total - clock_u;
            let gap = interarrival(self.lambda, rng);
            if to_exit <= gap {
                let at = t + to_exit;
                if at > self.horizon {
                    log(Event { t: self.horizon, kind: EventKind::Censored, amount: 0.0, level: f64::NAN });
                    break (None, true);
                }
                log(Event { t: at, kind: EventKind::Exit, amount: 0.0, level: self.a });
                break (Some(at), false);
            }
            t += gap;
            if t > self.horizon {
                log(Event { t: self.horizon, kind: EventKind::Censored, amount: 0.0, level: f64::NAN });
                break (None, true);
            }
            let loss = self.jumps.sample(rng);
            u = self.clock.level_at(clock_u + gap) - loss;
            log(Event { t, kind: EventKind::Loss, amount: loss, level: u.max(0.0) });
            if u < 0.0 {
                let amount = -u;
                injections += amount * (-self.q * t).exp();
                u = 0.0;
                log(Event { t, kind: EventKind::Injection, amount, level: 0.0 });
            }
        };
        let discount_at_exit = exit_time.map_or(0.0, |s| (-self.q * s).exp());
        ClassicalPath { discount_at_exit, injections, exit_time, censored, events }
    }
}

/// Monte Carlo estimates of `E_x[e^{-q T_a⁺}]` and `E_x[∫_0^{T_a⁺} e^{-qs} dL̃⁰_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalExitEstimate {
    pub laplace: SimEstimate,
    pub injections: SimEstimate,
}

pub fn simulate_classical_exit(cm: &ClassicalModel, x0: f64, a: f64, cfg: &SimConfig) -> Result<ClassicalExitEstimate> {
    if !(0.0 <= x0 && x0 <= a) {
        return Err(Error::Argument(format!("need 0 <= x0 <= a, got x0 = {x0}, a = {a}")));
    }
    let sim = ClassicalSimulator::new(cm, a, cfg)?;
    let paths: Vec<ClassicalPath> =
        (0..cfg.n_paths as u64).into_par_iter().map(|i| sim.run(x0, &mut path_rng(cfg.seed, i), false)).collect();
    let censored = paths.iter().filter(|p| p.censored).count();
    let tail = (-cm.q * sim.horizon).exp();
    let laplace: Vec<f64> = paths.iter().map(|p| p.discount_at_exit).collect();
    let injections: Vec<f64> = paths.iter().map(|p| p.injections).collect();
    let injection_bound = if cm.q > 0.0 { tail * cm.lambda * cm.jumps.mean() / cm.q } else { f64::INFINITY };
    Ok(ClassicalExitEstimate {
        laplace: SimEstimate::from_samples(&laplace, censored, tail),
        injections: SimEstimate::from_samples(&injections, censored, injection_bound),
    })
}

/// Runs path `index` of the dual process from `x0` and, on the same random
/// stream, the mirrored classical process from `β - x0` stopped at `β`.
pub fn duality_replay(params: &ModelParams, beta: f64, x0: f64, cfg: &SimConfig, index: u64) -> Result<(PathResult, ClassicalPath)> {
    let dual = DualSimulator::new(params, beta, cfg)?;
    let cm = ClassicalModel::mirrored(params, beta, crate::classical_exit::PremiumExtension::Constant);
    let classical = ClassicalSimulator::new(&cm, beta, cfg)?;
    let d = dual.run(x0, &mut path_rng(cfg.seed, index), true);
    let c = classical.run(beta - x0, &mut path_rng(cfg.seed, index), true);
    Ok((d, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostFunction;

    fn table_one() -> ModelParams {
        ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, 0.01)
    }

    #[test]
    fn ruined_at_start() {
        let r = simulate_path(&table_one(), 30.0, 0.0, &mut path_rng(1, 0), &SimConfig::default()).unwrap();
        assert_eq!(r.dividends, 0.0);
        assert_eq!(r.ruin_time, Some(0.0));
    }

    #[test]
    fn no_gains_pays_the_excess_once() {
        let params = ModelParams::exponential(CostFunction::p1(2.0), 0.0, 0.1, 0.01);
        let r = simulate_path(&params, 10.0, 14.0, &mut path_rng(1, 0), &SimConfig::default()).unwrap();
        assert_eq!(r.dividends, 4.0);
        let expected = time_to_zero(&params.cost, 10.0).unwrap();
        assert!((r.ruin_time.unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn same_stream_same_path() {
        let cfg = SimConfig::default();
        let a = simulate_path(&table_one(), 30.0, 15.0, &mut path_rng(7, 3), &cfg).unwrap();
        let b = simulate_path(&table_one(), 30.0, 15.0, &mut path_rng(7, 3), &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&table_one(), 30.0, 15.0, &mut path_rng(7, 4), &cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn event_log_replays_to_the_total() {
        let cfg = SimConfig::default();
        for i in 0..50 {
            let r = simulate_path(&table_one(), 30.0, 40.0, &mut path_rng(11, i), &cfg).unwrap();
            assert!(r.events.iter().filter(|e| e.kind == EventKind::Dividend).all(|e| e.amount >= 0.0));
            assert!((r.replay_total(0.1) - r.dividends).abs() <= 1e-12 * r.dividends.max(1.0));
        }
    }

    #[test]
    fn estimate_is_deterministic_and_sane() {
        let cfg = SimConfig::new(2000, 5);
        let a = estimate_value(&table_one(), 30.0, 15.0, &cfg).unwrap();
        let b = estimate_value(&table_one(), 30.0, 15.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 0.0 && a.stderr > 0.0);
        assert!((a.ci_high - a.mean - 1.96 * a.stderr).abs() < 1e-12);
    }

    #[test]
    fn immediate_exit_from_the_level() {
        let cm = ClassicalModel::mirrored(&table_one(), 20.0, crate::classical_exit::PremiumExtension::Constant);
        let e = simulate_classical_exit(&cm, 20.0, 20.0, &SimConfig::new(100, 1)).unwrap();
        assert_eq!(e.laplace.mean, 1.0);
        assert_eq!(e.injections.mean, 0.0);
    }

    #[test]
    fn path_log_has_a_header_and_one_row_per_event() {
        let r = simulate_path(&table_one(), 30.0, 35.0, &mut path_rng(2, 0), &SimConfig::default()).unwrap();
        let csv = path_log_csv(&r.events);
        assert!(csv.starts_with("t,event,amount,level\n"));
        assert_eq!(csv.lines().count(), r.events.len() + 1);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,dividend,5.0000000000000000e0,"));
    }
}
