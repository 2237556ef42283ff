//! Exit functions of the classical (premium-income, downward-jump) model.
//!
//! `W` solves `(Ã - q) W = 0` on `x ≥ 0` with `W(0) = 1` and `W = 0` below zero.
//! `G_w` solves the same equation with `G = w(|x|)` below zero. Both are
//! marched forward as Volterra integro-differential equations
//!
//! ```text
//! p̃(x) y'(x) = (q + λ) y(x) - λ ∫_0^x y(x - z) f(z) dz - λ S(x)
//! ```
//!
//! where `S` carries the below-zero boundary (`S ≡ 0` for `W`,
//! `S(x) = ∫_x^∞ w(z - x) f(z) dz` for `G_w`). The march is the implicit
//! trapezoid rule with a trapezoid convolution, second order in the step.
//!
//! `G_w` has a free multiple of `W`: we march a particular solution `P` with
//! `P(0) = 0` and fix `G_w = P + c W` by requiring decay at a truncation level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::io::CsvTable;
use crate::model::{CostFunction, JumpLaw, ModelParams};

/// How the mirrored premium `p(β - x)` continues above `x = β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PremiumExtension {
    /// `p̃(x) = p(0)` for `x > β`.
    Constant,
    /// `p̃(x) = p(0) + slope (x - β)` for `x > β`.
    Linear { slope: f64 },
}

impl PremiumExtension {
    /// The C¹ continuation, `slope = -p'(0)`. Only positive on the whole
    /// truncated domain when `p` is not increasing at zero.
    pub fn tangent(cost: &CostFunction) -> Self {
        PremiumExtension::Linear { slope: -cost.slope(0.0) }
    }
}

/// Premium income rate of the classical model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Premium {
    /// `p̃(x) = p(β - x)` on `[0, β]`, the dual cost seen from the barrier.
    Mirrored { cost: CostFunction, beta: f64, extension: PremiumExtension },
    Direct { cost: CostFunction },
}

impl Premium {
    #[inline]
    pub fn rate(&self, x: f64) -> f64 {
        match self {
            Premium::Mirrored { cost, beta, extension } => {
                if x <= *beta {
                    cost.rate((beta - x).max(0.0))
                } else {
                    match *extension {
                        PremiumExtension::Constant => cost.rate(0.0),
                        PremiumExtension::Linear { slope } => cost.rate(0.0) + slope * (x - beta),
                    }
                }
            }
            Premium::Direct { cost } => cost.rate(x),
        }
    }
}

/// The classical model on the levels `[0, range]` that callers care about.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalModel {
    pub premium: Premium,
    pub lambda: f64,
    pub q: f64,
    pub jumps: JumpLaw,
    /// Upper end of the reported grid.
    pub range: f64,
    /// Initial truncation level for shooting; `range + 10 × gain scale` if absent.
    pub x_max: Option<f64>,
}

impl ClassicalModel {
    /// The classical model dual to `params` under a barrier at `beta`.
    pub fn mirrored(params: &ModelParams, beta: f64, extension: PremiumExtension) -> Self {
        Self {
            premium: Premium::Mirrored { cost: params.cost.clone(), beta, extension },
            lambda: params.lambda,
            q: params.q,
            jumps: params.jumps.clone(),
            range: beta,
            x_max: None,
        }
    }

    pub fn direct(cost: CostFunction, lambda: f64, q: f64, jumps: JumpLaw, range: f64) -> Self {
        Self { premium: Premium::Direct { cost }, lambda, q, jumps, range, x_max: None }
    }

    fn default_truncation(&self) -> f64 {
        self.x_max.unwrap_or(self.range + 10.0 * self.jumps.tail_scale()).max(self.range)
    }

    fn check(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::Argument(format!("classical range must be positive, got {}", self.range)));
        }
        if !(self.lambda >= 0.0) || !(self.q >= 0.0) {
            return Err(Error::InvalidModel("λ and q must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Penalty applied to the deficit at ruin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    /// `w ≡ 1`: the Laplace transform of the ruin time.
    One,
    /// `w(y) = y`: the discounted deficit.
    Overshoot,
}

impl Penalty {
    fn source(self, jumps: &JumpLaw, x: f64) -> f64 {
        match self {
            Penalty::One => jumps.tail(x),
            Penalty::Overshoot => jumps.excess(x),
        }
    }
}

/// Values and slopes of one marched solution.
#[derive(Debug, Clone)]
pub(crate) struct Marched {
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

/// Past this magnitude the march stops; the decaying combination is long converged.
const OVERFLOW_GUARD: f64 = 1e250;

fn march(cm: &ClassicalModel, step: f64, steps: usize, initial: f64, penalty: Option<Penalty>) -> Result<Marched> {
    let lam = cm.lambda;
    let q = cm.q;
    let h = step;
    let source = |x: f64| penalty.map_or(0.0, |w| w.source(&cm.jumps, x));
    let rate = |k: usize| -> Result<f64> {
        let x = k as f64 * h;
        let p = cm.premium.rate(x);
        if !(p > 0.0) {
            return Err(Error::NonPositiveRate { x, value: p });
        }
        Ok(p)
    };
    // Density samples f(k h), cut at the end of a bounded support.
    let support = cm.jumps.support_end().map_or(steps + 1, |z| ((z / h).ceil() as usize + 1).min(steps + 1));
    let exp_rate = cm.jumps.exponential_rate();
    let f: Vec<f64> = match exp_rate {
        Some(_) => vec![cm.jumps.density(0.0), cm.jumps.density(h)],
        None => (0..support).map(|k| cm.jumps.density(k as f64 * h)).collect(),
    };
    let decay = exp_rate.map(|mu| (-mu * h).exp());

    let mut values = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    let p0 = rate(0)?;
    values.push(initial);
    slopes.push(((q + lam) * initial - lam * source(0.0)) / p0);
    let mut conv = 0.0;
    for k in 0..steps {
        let y = values[k];
        let partial = match decay {
            Some(e) => e * conv + 0.5 * h * y * f[1],
            None => {
                let m = k + 1;
                let mut acc = if m < support { 0.5 * values[0] * f[m] } else { 0.0 };
                let lo = (m + 1).saturating_sub(support).max(1);
                for j in lo..=k {
                    acc += values[j] * f[m - j];
                }
                h * acc
            }
        };
        let p = rate(k + 1)?;
        let x = (k + 1) as f64 * h;
        let a = (q + lam - lam * 0.5 * h * f[0]) / p;
        let b = -lam * (partial + source(x)) / p;
        let denom = 1.0 - 0.5 * h * a;
        if !(denom > 0.0) {
            return Err(Error::Argument(format!("march step {h} is too coarse for the implicit update")));
        }
        let next = (y + 0.5 * h * (slopes[k] + b)) / denom;
        conv = partial + 0.5 * h * f[0] * next;
        values.push(next);
        slopes.push(a * next + b);
        if !next.is_finite() || next.abs() > OVERFLOW_GUARD {
            break;
        }
    }
    Ok(Marched { values, slopes })
}

fn grid_for(cm: &ClassicalModel, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("step must be positive, got {h}")));
    }
    let n = ((cm.range / h).ceil() as usize).max(1);
    Ok((n, cm.range / n as f64))
}

/// `W̃_q` on `[0, range]` with step at most `h`.
pub fn compute_w(cm: &ClassicalModel, h: f64) -> Result<GridFunction> {
    cm.check()?;
    let (n, step) = grid_for(cm, h)?;
    let m = march(cm, step, n, 1.0, None)?;
    if m.values.len() != n + 1 {
        return Err(Error::Argument("W overflowed inside the requested range".into()));
    }
    GridFunction::new(0.0, step, m.values)
}

/// A shooting-to-infinity solve of `G_w`.
#[derive(Debug, Clone)]
pub(crate) struct Shot {
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub constant: f64,
    pub truncation: f64,
    pub doublings: usize,
}

const SHOOT_TOLERANCE: f64 = 1e-4;
const MAX_DOUBLINGS: usize = 8;

fn shoot_once(cm: &ClassicalModel, step: f64, n: usize, x_max: f64, penalty: Penalty) -> Result<(Marched, Marched, f64, f64)> {
    let steps = ((x_max / step).ceil() as usize).max(n);
    let w = march(cm, step, steps, 1.0, None)?;
    let p = march(cm, step, steps, 0.0, Some(penalty))?;
    let last = w.values.len().min(p.values.len()) - 1;
    if last < n {
        return Err(Error::Argument("exit functions overflowed inside the requested range".into()));
    }
    let c = -p.values[last] / w.values[last];
    Ok((w, p, c, last as f64 * step))
}

pub(crate) fn shoot(cm: &ClassicalModel, step: f64, n: usize, penalty: Penalty) -> Result<Shot> {
    let mut x_max = cm.default_truncation();
    let (mut w, mut p, mut c, mut reached) = shoot_once(cm, step, n, x_max, penalty)?;
    let mut doublings = 0;
    loop {
        if doublings == MAX_DOUBLINGS {
            let (.., c2, _) = shoot_once(cm, step, n, 2.0 * x_max, penalty)?;
            return Err(Error::Truncation { change: (c2 - c).abs(), doublings });
        }
        // Once the march hits the overflow guard, doubling cannot move anything.
        if reached + step < x_max {
            break;
        }
        x_max *= 2.0;
        doublings += 1;
        let (w2, p2, c2, r2) = shoot_once(cm, step, n, x_max, penalty)?;
        let change = (c2 - c).abs();
        (w, p, c, reached) = (w2, p2, c2, r2);
        if change < SHOOT_TOLERANCE {
            break;
        }
    }
    let values = (0..=n).map(|k| p.values[k] + c * w.values[k]).collect();
    let slopes = (0..=n).map(|k| p.slopes[k] + c * w.slopes[k]).collect();
    Ok(Shot { values, slopes, constant: c, truncation: reached, doublings })
}

/// `G̃_{q,w}` on `[0, range]`.
pub fn compute_g(cm: &ClassicalModel, penalty: Penalty, h: f64) -> Result<GridFunction> {
    cm.check()?;
    let (n, step) = grid_for(cm, h)?;
    let shot = shoot(cm, step, n, penalty)?;
    GridFunction::new(0.0, step, shot.values)
}

/// `Z̃ = (1 - G̃_{q,1}(0)) W̃_q + G̃_{q,1}`.
pub fn compute_z(w: &GridFunction, g1: &GridFunction) -> Result<GridFunction> {
    if !w.same_grid(g1) {
        return Err(Error::GridMismatch("W and G_q,1 must share a grid".into()));
    }
    let k = 1.0 - g1.first();
    let values = w.values().iter().zip(g1.values()).map(|(w, g)| k * w + g).collect();
    GridFunction::new(w.start(), w.step(), values)
}

/// `g̃ = G̃_{q,|x|} + G̃_{q,1} g̃(0)` with `g̃(0) = G̃_{q,|x|}(0) / (1 - G̃_{q,1}(0))`.
pub fn compute_gtilde(gid: &GridFunction, g1: &GridFunction) -> Result<GridFunction> {
    if !gid.same_grid(g1) {
        return Err(Error::GridMismatch("G_q,|x| and G_q,1 must share a grid".into()));
    }
    let g0 = g1.first();
    if !(g0 < 1.0) {
        return Err(Error::DegenerateDiscounting { g0 });
    }
    let at_zero = gid.first() / (1.0 - g0);
    let values = gid.values().iter().zip(g1.values()).map(|(a, b)| a + b * at_zero).collect();
    GridFunction::new(gid.start(), gid.step(), values)
}

/// Shooting diagnostics kept alongside the exit functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootingReport {
    pub truncation: f64,
    pub doublings: usize,
    pub constant: f64,
}

/// All exit functions on one grid, plus their slopes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExitFunctions {
    pub w: GridFunction,
    pub g1: GridFunction,
    pub gid: GridFunction,
    pub z: GridFunction,
    pub gtilde: GridFunction,
    pub step: f64,
    pub dw: GridFunction,
    pub dg1: GridFunction,
    pub dgid: GridFunction,
    pub shooting_one: ShootingReport,
    pub shooting_overshoot: ShootingReport,
}

impl ExitFunctions {
    /// Requires `q > 0` (for `g̃` to be finite).
    pub fn compute(cm: &ClassicalModel, h: f64) -> Result<Self> {
        cm.check()?;
        if !(cm.q > 0.0) {
            return Err(Error::InvalidModel("expected injections need a positive discount rate".into()));
        }
        let (n, step) = grid_for(cm, h)?;
        let w = march(cm, step, n, 1.0, None)?;
        if w.values.len() != n + 1 {
            return Err(Error::Argument("W overflowed inside the requested range".into()));
        }
        let one = shoot(cm, step, n, Penalty::One)?;
        let over = shoot(cm, step, n, Penalty::Overshoot)?;
        let grid = |v: Vec<f64>| GridFunction::new(0.0, step, v);
        let wg = grid(w.values)?;
        let g1 = grid(one.values)?;
        let gid = grid(over.values)?;
        let z = compute_z(&wg, &g1)?;
        let gtilde = compute_gtilde(&gid, &g1)?;
        Ok(Self {
            z,
            gtilde,
            step,
            dw: grid(w.slopes)?,
            dg1: grid(one.slopes)?,
            dgid: grid(over.slopes)?,
            shooting_one: ShootingReport { truncation: one.truncation, doublings: one.doublings, constant: one.constant },
            shooting_overshoot: ShootingReport {
                truncation: over.truncation,
                doublings: over.doublings,
                constant: over.constant,
            },
            w: wg,
            g1,
            gid,
        })
    }

    pub fn gtilde_at_zero(&self) -> f64 {
        self.gtilde.first()
    }

    /// Slope of `Z̃` at node `k`.
    pub fn z_slope(&self, k: usize) -> f64 {
        (1.0 - self.g1.first()) * self.dw.values()[k] + self.dg1.values()[k]
    }

    /// Slope of `g̃` at node `k`.
    pub fn gtilde_slope(&self, k: usize) -> f64 {
        self.dgid.values()[k] + self.dg1.values()[k] * self.gtilde_at_zero()
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["x", "W", "G1", "Gid", "Z", "gtilde"]);
        for i in 0..self.w.len() {
            t.push([
                self.w.x(i),
                self.w.values()[i],
                self.g1.values()[i],
                self.gid.values()[i],
                self.z.values()[i],
                self.gtilde.values()[i],
            ]);
        }
        t
    }
}

/// `E_x[∫_0^{T_a⁺} e^{-qs} dL̃⁰_s] = g̃(x) - Z̃(x) g̃(a) / Z̃(a)`.
pub fn injections_until_exit(ef: &ExitFunctions, x: f64, a: f64) -> Result<f64> {
    if !(0.0 <= x && x <= a) {
        return Err(Error::Argument(format!("need 0 <= x <= a, got x = {x}, a = {a}")));
    }
    let za = ef.z.interpolate(a)?;
    if za == 0.0 {
        return Err(Error::Argument(format!("Z vanishes at a = {a}")));
    }
    if x == a {
        return Ok(0.0);
    }
    Ok(ef.gtilde.interpolate(x)? - ef.z.interpolate(x)? * ef.gtilde.interpolate(a)? / za)
}

/// `E_x[e^{-q T_a⁺}] = Z̃(x) / Z̃(a)` for the process reflected at zero.
pub fn laplace_exit_reflected(ef: &ExitFunctions, x: f64, a: f64) -> Result<f64> {
    if !(0.0 <= x && x <= a) {
        return Err(Error::Argument(format!("need 0 <= x <= a, got x = {x}, a = {a}")));
    }
    if x == a {
        return Ok(1.0);
    }
    Ok(ef.z.interpolate(x)? / ef.z.interpolate(a)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_one() -> ModelParams {
        ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, 0.01)
    }

    fn constant_model(lambda: f64, range: f64) -> ClassicalModel {
        ClassicalModel::direct(CostFunction::constant(2.0), lambda, 0.1, JumpLaw::exponential(0.01), range)
    }

    #[test]
    fn w_starts_at_one_and_increases() {
        let w = compute_w(&constant_model(0.1, 50.0), 0.05).unwrap();
        assert_eq!(w.first(), 1.0);
        assert!(w.values().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn w_without_jumps_is_an_exponential() {
        let cm = constant_model(0.0, 20.0);
        let w = compute_w(&cm, 0.01).unwrap();
        for (x, v) in w.xs().zip(w.values()) {
            let exact = (0.1 * x / 2.0).exp();
            assert!((v - exact).abs() < 1e-6 * exact, "x={x}: {v} vs {exact}");
        }
    }

    #[test]
    fn w_march_is_second_order() {
        // Richardson self-consistency: successive differences shrink by ~4.
        let cm = constant_model(0.1, 40.0);
        let end = |h: f64| compute_w(&cm, h).unwrap().last();
        let (a, b, c) = (end(0.4), end(0.2), end(0.1));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order > 1.8, "observed order {order}");
    }

    #[test]
    fn exponential_fast_path_matches_direct_convolution() {
        // Same law, once as Exp(μ) and once as a fine table: W must agree.
        let mu = 0.5;
        let knots: Vec<(f64, f64)> = (0..=8000).map(|i| {
            let z = i as f64 * 0.005;
            (z, mu * (-mu * z).exp())
        }).collect();
        let tab = JumpLaw::Tabulated(crate::model::TabulatedDensity::new(knots).unwrap());
        let exp = ClassicalModel::direct(CostFunction::constant(1.0), 0.4, 0.05, JumpLaw::exponential(mu), 10.0);
        let mut tabm = exp.clone();
        tabm.jumps = tab;
        let a = compute_w(&exp, 0.01).unwrap();
        let b = compute_w(&tabm, 0.01).unwrap();
        assert!(a.relative_sup_distance(&b).unwrap() < 1e-5);
    }

    #[test]
    fn ruin_transform_is_a_probability_and_decays() {
        let cm = ClassicalModel::direct(CostFunction::constant(2.0), 0.1, 0.1, JumpLaw::exponential(0.1), 100.0);
        let g = compute_g(&cm, Penalty::One, 0.1).unwrap();
        assert!(g.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(g.values().windows(2).all(|p| p[1] <= p[0] + 1e-12));
        assert!(g.last() < 0.05 * g.first());
    }

    #[test]
    fn undiscounted_ruin_probability_lies_in_unit_interval() {
        // q = 0 and premium above the claim rate: G_{0,1} is a ruin probability.
        let cm = ClassicalModel::direct(CostFunction::constant(12.0), 0.1, 0.0, JumpLaw::exponential(0.01), 200.0);
        let g = compute_g(&cm, Penalty::One, 0.1).unwrap();
        // Cramér–Lundberg: ψ(x) = (λ/(μ c)) e^{-(μ - λ/c) x} for exponential claims.
        let exact = |x: f64| (0.1 / (0.01 * 12.0)) * (-(0.01 - 0.1 / 12.0) * x).exp();
        for (x, v) in g.xs().zip(g.values()).step_by(100) {
            assert!((0.0..=1.0).contains(v));
            assert!((v - exact(x)).abs() < 1e-3, "x={x}: {v} vs {}", exact(x));
        }
    }

    #[test]
    fn shooting_constant_is_stable_under_truncation() {
        let params = table_one();
        let mut cm = ClassicalModel::mirrored(&params, 37.1, PremiumExtension::Constant);
        let base = compute_g(&cm, Penalty::One, 37.1 / 2000.0).unwrap().first();
        cm.x_max = Some(2.0 * (37.1 + 1000.0));
        let doubled = compute_g(&cm, Penalty::One, 37.1 / 2000.0).unwrap().first();
        assert!((base - doubled).abs() < 1e-4, "{base} vs {doubled}");
    }

    #[test]
    fn z_and_gtilde_identities() {
        let params = table_one();
        let cm = ClassicalModel::mirrored(&params, 30.0, PremiumExtension::Constant);
        let ef = ExitFunctions::compute(&cm, 0.015).unwrap();
        assert!((ef.z.first() - 1.0).abs() < 1e-15);
        assert!(ef.z.values().windows(2).all(|p| p[1] > p[0]));
        assert!(ef.gtilde.values().iter().all(|&g| g >= 0.0));
        let g0 = ef.gid.first() + ef.g1.first() * ef.gtilde_at_zero();
        assert!((g0 - ef.gtilde_at_zero()).abs() <= 1e-12 * g0);
        for (x, a) in [(0.0, 10.0), (5.0, 30.0), (29.0, 30.0)] {
            let l = laplace_exit_reflected(&ef, x, a).unwrap();
            assert!(l > 0.0 && l <= 1.0);
            assert!(injections_until_exit(&ef, x, a).unwrap() >= 0.0);
        }
        assert_eq!(laplace_exit_reflected(&ef, 30.0, 30.0).unwrap(), 1.0);
        assert!(injections_until_exit(&ef, 30.0 - 1e-9, 30.0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn injections_nonnegative_on_grid_pairs() {
        let cm = ClassicalModel::mirrored(&table_one(), 20.0, PremiumExtension::Constant);
        let ef = ExitFunctions::compute(&cm, 0.05).unwrap();
        for i in (0..ef.z.len()).step_by(20) {
            for j in (i + 1..ef.z.len()).step_by(20) {
                let v = injections_until_exit(&ef, ef.z.x(i), ef.z.x(j)).unwrap();
                assert!(v >= -1e-12, "({i},{j}) -> {v}");
            }
        }
        let laplace: Vec<f64> = (0..ef.z.len()).map(|i| laplace_exit_reflected(&ef, ef.z.x(i), 20.0).unwrap()).collect();
        assert!(laplace.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn extension_does_not_reach_the_pre_exit_process() {
        let params = ModelParams::exponential(CostFunction::p3(2.0), 0.1, 0.1, 0.01);
        let beta = 25.0;
        let flat = ExitFunctions::compute(&ClassicalModel::mirrored(&params, beta, PremiumExtension::Constant), 0.02).unwrap();
        let tangent = PremiumExtension::tangent(&params.cost);
        let lin = ExitFunctions::compute(&ClassicalModel::mirrored(&params, beta, tangent), 0.02).unwrap();
        // The individual G's do see the extension...
        assert!((flat.g1.first() - lin.g1.first()).abs() > 1e-8);
        // ...but the exit combinations do not.
        for x in [0.0, 5.0, 12.5, 24.0] {
            let a = injections_until_exit(&flat, x, beta).unwrap();
            let b = injections_until_exit(&lin, x, beta).unwrap();
            assert!((a - b).abs() <= 1e-4 * a.abs().max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn grid_mismatch_and_degenerate_discounting() {
        let a = GridFunction::sample(0.0, 1.0, 10, |_| 0.5).unwrap();
        let b = GridFunction::sample(0.0, 1.0, 11, |_| 0.5).unwrap();
        assert!(matches!(compute_z(&a, &b), Err(Error::GridMismatch(_))));
        let one = GridFunction::sample(0.0, 1.0, 10, |_| 1.0).unwrap();
        assert!(matches!(compute_gtilde(&a, &one), Err(Error::DegenerateDiscounting { .. })));
    }

    #[test]
    fn nonpositive_extension_is_reported() {
        // p1 increases at zero, so its tangent continuation turns negative above β.
        let params = table_one();
        let cm = ClassicalModel::mirrored(&params, 10.0, PremiumExtension::tangent(&params.cost));
        assert!(matches!(ExitFunctions::compute(&cm, 0.05), Err(Error::NonPositiveRate { .. })));
    }
}
