//! `γ(β) = v_β'(β-)`, the optimal barrier `β* = inf{β ≥ 0 : γ(β) = 1}`, and
//! the sufficient conditions for existence and optimality.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier_value::{ode_basis, solve_vb_fredholm, Method, OdeScheme, DEFAULT_FREDHOLM_NODES};
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::model::ModelParams;

/// `γ(β)`: ODE shooting for exponential gains, the Nyström system otherwise.
pub fn gamma(params: &ModelParams, beta: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!("barrier must be finite and nonnegative, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(params.mean_gain_rate() / params.cost.eval(0.0)?);
    }
    match params.jumps.exponential_rate() {
        Some(mu) => {
            let basis = ode_basis(params, beta, beta, OdeScheme::default())?;
            let tail = (-mu * beta).exp();
            let p0 = params.cost.eval(0.0)?;
            let lam = params.lambda;
            let denominator = p0 - lam * mu * basis.weighted_integral - lam * tail * basis.w.last();
            if !(denominator > 1e-12 * p0) {
                return Err(Error::DegenerateBarrier { beta, denominator });
            }
            Ok(lam * tail / mu / denominator * basis.dw.last())
        }
        None => Ok(solve_vb_fredholm(params, beta, DEFAULT_FREDHOLM_NODES)?.gamma),
    }
}

/// The solver behind [`gamma`] for these parameters.
pub fn gamma_method(params: &ModelParams) -> Method {
    if params.jumps.exponential_rate().is_some() {
        Method::Ode
    } else {
        Method::Fredholm
    }
}

/// Probe grid for the pointwise sufficient conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    /// Right end of the grid; `λ E C₁ / q` (or 100 mean gains if `q = 0`) if absent.
    pub x_max: Option<f64>,
    pub n: usize,
}

impl Default for Probe {
    fn default() -> Self {
        Self { x_max: None, n: 20_001 }
    }
}

impl Probe {
    fn grid(&self, params: &ModelParams) -> Vec<f64> {
        let scale = if params.q > 0.0 { params.mean_gain_rate() / params.q } else { 100.0 * params.jumps.mean() };
        let x_max = self.x_max.unwrap_or(scale).max(1e-12);
        let n = self.n.max(2);
        let mut xs: Vec<f64> = (0..n).map(|i| x_max * i as f64 / (n - 1) as f64).collect();
        xs.extend(params.cost.probe_knots().into_iter().filter(|&k| k <= x_max));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

/// Whether `-p(x) + λ E C₁ - q x ≤ 0` for every `x ≥ 0`, in which case the
/// barrier at zero is optimal.
///
/// With `q > 0` the inequality holds automatically for `x ≥ λ E C₁ / q`, so
/// only `[0, λ E C₁ / q]` is probed. With `q = 0` it reduces to `inf p ≥ λ E C₁`.
pub fn check_zero_barrier(params: &ModelParams, probe: &Probe) -> bool {
    let m = params.mean_gain_rate();
    let slack = 1e-12 * m.abs().max(1.0);
    let holds = |x: f64| -params.cost.rate(x) + m - params.q * x <= slack;
    if params.q > 0.0 {
        let tail_start = m / params.q;
        let mut probe = *probe;
        probe.x_max = Some(probe.x_max.map_or(tail_start, |x| x.max(tail_start)));
        probe.grid(params).into_iter().all(holds)
    } else {
        params.cost.infimum() >= m - slack && probe.grid(params).into_iter().all(holds)
    }
}

/// Hypotheses of the existence theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    /// `λ E C₁ > p(0) > 0`.
    pub p0_condition: bool,
    /// Smallest probe level with `p(x̂) > λ E C₁ - q x̂`.
    pub xhat: Option<f64>,
    pub holds: bool,
    /// `(0, x̂)` when both hypotheses hold.
    pub bracket: Option<(f64, f64)>,
}

pub fn check_existence(params: &ModelParams, probe: &Probe) -> ExistenceReport {
    let m = params.mean_gain_rate();
    let p0 = params.cost.rate(0.0);
    let p0_condition = m > p0 && p0 > 0.0;
    let xhat = probe.grid(params).into_iter().find(|&x| params.cost.rate(x) > m - params.q * x);
    let holds = p0_condition && xhat.is_some();
    ExistenceReport { p0_condition, xhat, holds, bracket: if holds { xhat.map(|x| (0.0, x)) } else { None } }
}

/// Hypothesis `-p'(x) - q < 0` on `(0, β*]` of the optimality theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub derivative_condition: bool,
    /// `min (p'(x) + q)` over the grid; positive iff the condition holds there.
    pub margin: Option<f64>,
    pub worst_x: Option<f64>,
}

const OPTIMALITY_NODES: usize = 4000;

pub fn check_optimality(params: &ModelParams, beta_star: f64) -> Result<SufficiencyReport> {
    if !(beta_star >= 0.0 && beta_star.is_finite()) {
        return Err(Error::Argument(format!("β* must be finite and nonnegative, got {beta_star}")));
    }
    if beta_star == 0.0 {
        return Ok(SufficiencyReport { derivative_condition: true, margin: None, worst_x: None });
    }
    let mut xs: Vec<f64> = (1..=OPTIMALITY_NODES).map(|i| beta_star * i as f64 / OPTIMALITY_NODES as f64).collect();
    // The derivative of a tabulated cost is extremal near knots; include them.
    xs.extend(params.cost.probe_knots().into_iter().filter(|&k| k > 0.0 && k <= beta_star));
    let (worst_x, margin) = xs
        .into_iter()
        .map(|x| (x, params.cost.slope(x) + params.q))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    Ok(SufficiencyReport { derivative_condition: margin > 0.0, margin: Some(margin), worst_x: Some(worst_x) })
}

/// Controls for [`find_beta_star`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Upper end of the scan; `5 λ E C₁ / q` if absent.
    pub beta_max: Option<f64>,
    pub root_tol: f64,
    pub probe: Probe,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { beta_max: None, root_tol: 1e-6, probe: Probe::default() }
    }
}

impl SearchOptions {
    pub fn resolved_beta_max(&self, params: &ModelParams) -> Result<f64> {
        match self.beta_max {
            Some(b) if b > 0.0 && b.is_finite() => Ok(b),
            Some(b) => Err(Error::Argument(format!("β_max must be positive, got {b}"))),
            None if params.q > 0.0 => Ok(5.0 * params.mean_gain_rate() / params.q),
            None => Err(Error::Argument("β_max is required when q = 0".into())),
        }
    }
}

/// Sign-change witness around an interior root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCertificate {
    pub delta: f64,
    pub gamma_below: f64,
    pub gamma_above: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalBarrierReport {
    pub beta_star: f64,
    pub zero_barrier: bool,
    pub gamma_at_star: f64,
    pub method: Method,
    pub beta_max: f64,
    pub root_tol: f64,
    pub gamma_curve: Vec<(f64, f64)>,
    pub existence: ExistenceReport,
    pub sufficiency: SufficiencyReport,
    pub certificate: Option<RootCertificate>,
}

impl OptimalBarrierReport {
    pub fn gamma_curve_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["beta", "gamma"]);
        for &(b, g) in &self.gamma_curve {
            t.push([b, g]);
        }
        t
    }
}

/// Scan levels: a geometric approach to the first uniform step, then uniform.
pub fn scan_levels(beta_max: f64) -> Vec<f64> {
    let step = (beta_max / 200.0).max(0.5).min(beta_max);
    let mut out = vec![0.0];
    out.extend((1..=10).rev().map(|k| step * 0.5f64.powi(k)));
    let n = (beta_max / step).ceil() as usize;
    out.extend((1..=n).map(|i| (i as f64 * step).min(beta_max)));
    out.dedup();
    out
}

/// First crossing of `γ = 1` by scan and bisection, unless the barrier at zero is optimal.
pub fn find_beta_star(params: &ModelParams, opts: &SearchOptions) -> Result<OptimalBarrierReport> {
    let beta_max = opts.resolved_beta_max(params)?;
    if !(opts.root_tol > 0.0) {
        return Err(Error::Argument(format!("root tolerance must be positive, got {}", opts.root_tol)));
    }
    let existence = check_existence(params, &opts.probe);
    let method = gamma_method(params);
    let g0 = gamma(params, 0.0)?;
    if check_zero_barrier(params, &opts.probe) {
        return Ok(OptimalBarrierReport {
            beta_star: 0.0,
            zero_barrier: true,
            gamma_at_star: g0,
            method,
            beta_max,
            root_tol: opts.root_tol,
            gamma_curve: vec![(0.0, g0)],
            existence,
            sufficiency: check_optimality(params, 0.0)?,
            certificate: None,
        });
    }

    let levels = scan_levels(beta_max);
    let side = |g: f64| (g - 1.0).signum();
    let start = side(g0);
    let mut curve = vec![(0.0, g0)];
    let chunk = 2 * rayon::current_num_threads().max(1);
    let mut crossing = None;
    if start == 0.0 {
        crossing = Some(0);
    }
    let mut next = 1;
    while crossing.is_none() && next < levels.len() {
        let end = (next + chunk).min(levels.len());
        let values: Vec<Result<f64>> = levels[next..end].par_iter().map(|&b| gamma(params, b)).collect();
        for (k, g) in values.into_iter().enumerate() {
            let g = g?;
            curve.push((levels[next + k], g));
            if side(g) != start {
                crossing = Some(curve.len() - 1);
                break;
            }
        }
        next = end;
    }
    let Some(hit) = crossing else {
        return Err(Error::ExistenceNotEstablished { beta_max, curve });
    };

    let (beta_star, gamma_at_star) = if hit == 0 {
        (0.0, g0)
    } else {
        let (mut lo, mut hi) = (curve[hit - 1].0, curve[hit].0);
        if side(curve[hit].1) == 0.0 {
            // Exact hit: still search the left for the infimum.
            hi = curve[hit].0;
        }
        while hi - lo > opts.root_tol {
            let mid = 0.5 * (lo + hi);
            if side(gamma(params, mid)?) == start {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = 0.5 * (lo + hi);
        (b, gamma(params, b)?)
    };

    let certificate = if beta_star > 0.0 {
        let delta = 10.0 * opts.root_tol;
        let below = gamma(params, (beta_star - delta).max(0.0))?;
        let above = gamma(params, beta_star + delta)?;
        Some(RootCertificate {
            delta,
            gamma_below: below,
            gamma_above: above,
            holds: side(below) == start && side(above) == -start,
        })
    } else {
        None
    };

    Ok(OptimalBarrierReport {
        beta_star,
        zero_barrier: false,
        gamma_at_star,
        method,
        beta_max,
        root_tol: opts.root_tol,
        gamma_curve: curve,
        existence,
        sufficiency: check_optimality(params, beta_star)?,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostFunction;

    fn table_one(c: f64) -> ModelParams {
        ModelParams::exponential(CostFunction::p1(c), 0.1, 0.1, 0.01)
    }

    #[test]
    fn gamma_at_zero_is_mean_gain_over_cost() {
        assert!((gamma(&table_one(2.0), 0.0).unwrap() - 5.0).abs() < 1e-12);
        // Continuity from the right.
        assert!((gamma(&table_one(2.0), 1e-6).unwrap() - 5.0).abs() < 1e-4);
    }

    #[test]
    fn fredholm_and_ode_gamma_agree() {
        let params = table_one(2.0);
        let ode = gamma(&params, 25.0).unwrap();
        let fred = solve_vb_fredholm(&params, 25.0, 400).unwrap().gamma;
        assert!((ode - fred).abs() < 1e-3 * ode, "{ode} vs {fred}");
    }

    #[test]
    fn optimal_barrier_for_the_reference_setting() {
        // Two-route oracle (shooting and Nyström) puts the crossing at 31.966.
        let report = find_beta_star(&table_one(2.0), &SearchOptions::default()).unwrap();
        assert!(!report.zero_barrier);
        assert!((report.beta_star - 31.966).abs() < 0.01, "{}", report.beta_star);
        assert!((report.gamma_at_star - 1.0).abs() < 1e-4);
        assert!(report.certificate.as_ref().unwrap().holds);
        let (_, xhat) = report.existence.bracket.unwrap();
        assert!(report.beta_star < xhat);
        assert!(report.sufficiency.derivative_condition);
    }

    #[test]
    fn gamma_at_existence_witness_is_at_most_one() {
        let params = table_one(2.0);
        let report = check_existence(&params, &Probe::default());
        assert!(report.holds);
        let xhat = report.xhat.unwrap();
        assert!(gamma(&params, xhat).unwrap() <= 1.0);
    }

    #[test]
    fn zero_barrier_cases() {
        let probe = Probe::default();
        let constant = |c: f64, q: f64| ModelParams::exponential(CostFunction::constant(c), 0.1, q, 0.01);
        assert!(check_zero_barrier(&constant(10.0, 0.1), &probe));
        assert!(!check_zero_barrier(&table_one(2.0), &probe));
        assert!(!check_zero_barrier(&constant(9.99, 0.0), &probe));
        let report = find_beta_star(&constant(10.0, 0.1), &SearchOptions::default()).unwrap();
        assert!(report.zero_barrier);
        assert_eq!(report.beta_star, 0.0);
    }

    #[test]
    fn existence_hypotheses() {
        let probe = Probe::default();
        let twelve = ModelParams::exponential(CostFunction::constant(12.0), 0.1, 0.1, 0.01);
        assert!(!check_existence(&twelve, &probe).p0_condition);
        let flat = ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.0, 0.01);
        let r = check_existence(&flat, &probe);
        assert!(r.p0_condition);
        assert_eq!(r.xhat, None);
    }

    #[test]
    fn optimality_hypothesis() {
        let p3 = |q: f64| ModelParams::exponential(CostFunction::p3(2.0), 0.1, q, 0.01);
        let inc = check_optimality(&table_one(2.0), 30.0).unwrap();
        assert!(inc.derivative_condition && inc.margin.unwrap() > 0.1);
        assert!(check_optimality(&p3(0.15), 30.0).unwrap().derivative_condition);
        let fails = check_optimality(&p3(0.05), 30.0).unwrap();
        assert!(!fails.derivative_condition);
        assert!(fails.worst_x.unwrap() < 1.0);
    }

    #[test]
    fn scan_starts_geometric_then_uniform() {
        let levels = scan_levels(500.0);
        assert_eq!(levels[0], 0.0);
        assert!((levels[1] - 2.5 / 1024.0).abs() < 1e-15);
        assert_eq!(*levels.last().unwrap(), 500.0);
        assert!(levels.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn missing_crossing_is_reported_with_the_curve() {
        let params = table_one(2.0);
        let opts = SearchOptions { beta_max: Some(10.0), ..SearchOptions::default() };
        match find_beta_star(&params, &opts) {
            Err(Error::ExistenceNotEstablished { beta_max, curve }) => {
                assert_eq!(beta_max, 10.0);
                assert!(curve.len() > 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
