//! The generator of the controlled dual process and a pointwise check of
//! `max{(A - q) m, 1 - m'} = 0` for a candidate value `m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier_value::BarrierSolution;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::io::CsvTable;
use crate::model::ModelParams;

/// `m` on `[0, β]` from grid values and derivatives, zero below `0`,
/// affine with slope `extension_slope` above `β`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateValue {
    pub beta: f64,
    pub values: GridFunction,
    pub derivative: GridFunction,
    pub extension_slope: f64,
}

impl CandidateValue {
    pub fn new(values: GridFunction, derivative: GridFunction) -> Result<Self> {
        if !values.same_grid(&derivative) {
            return Err(Error::GridMismatch("candidate values and derivative".into()));
        }
        if values.start() != 0.0 {
            return Err(Error::Argument("candidate grid must start at zero".into()));
        }
        Ok(Self { beta: values.end(), values, derivative, extension_slope: 1.0 })
    }

    pub fn from_solution(sol: &BarrierSolution) -> Self {
        Self { beta: sol.beta, values: sol.v.clone(), derivative: sol.dv.clone(), extension_slope: 1.0 }
    }

    /// `m(x) = x`, the barrier at zero.
    pub fn identity() -> Self {
        let single = |v| GridFunction::new(0.0, 1.0, vec![v]).expect("single node");
        Self { beta: 0.0, values: single(0.0), derivative: single(1.0), extension_slope: 1.0 }
    }

    /// `m ≡ 0`.
    pub fn zero() -> Self {
        let single = || GridFunction::new(0.0, 1.0, vec![0.0]).expect("single node");
        Self { beta: 0.0, values: single(), derivative: single(), extension_slope: 0.0 }
    }

    fn at_barrier(&self) -> f64 {
        self.values.last()
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            Ok(0.0)
        } else if x > self.beta {
            Ok(self.at_barrier() + self.extension_slope * (x - self.beta))
        } else {
            self.values.interpolate(x)
        }
    }

    /// `m'(x)` for `x > 0`; the left derivative at `β`.
    pub fn slope(&self, x: f64) -> Result<f64> {
        if x > self.beta {
            Ok(self.extension_slope)
        } else {
            self.derivative.interpolate(x)
        }
    }
}

/// `∫_0^{β-x} m(x + y) f(y) dy` by the trapezoid rule on the candidate's nodes.
fn lower_integral(params: &ModelParams, m: &CandidateValue, x: f64) -> Result<f64> {
    let grid = &m.values;
    let beta = m.beta;
    if x >= beta || grid.len() < 2 {
        return Ok(0.0);
    }
    let h = grid.step();
    let f = |z: f64| params.jumps.density(z);
    // First node strictly above x (nodes within a hair of x count as x itself).
    let s = x / h;
    let mut j = s.floor() as usize + 1;
    if (j as f64 - s) < 1e-9 {
        j += 1;
    }
    let last = grid.len() - 1;
    let mut prev_x = x;
    let mut prev = m.value(x)? * f(0.0);
    let mut acc = 0.0;
    while j <= last {
        let xj = grid.x(j).min(beta);
        let cur = grid.values()[j] * f(xj - x);
        acc += 0.5 * (xj - prev_x) * (prev + cur);
        prev_x = xj;
        prev = cur;
        j += 1;
    }
    Ok(acc)
}

/// `A m(x) = -p(x) m'(x) + λ ∫_0^∞ (m(x + y) - m(x)) f(y) dy`, split at `y = β - x`.
pub fn apply_generator(params: &ModelParams, m: &CandidateValue, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Argument(format!("generator is applied on x > 0, got {x}")));
    }
    let p = params.cost.eval(x)?;
    let lam = params.lambda;
    let s = m.extension_slope;
    let mx = m.value(x)?;
    let jump_part = if x >= m.beta {
        s * params.jumps.mean()
    } else {
        let gap = m.beta - x;
        lower_integral(params, m, x)? + m.at_barrier() * params.jumps.tail(gap) + s * params.jumps.partial_expectation(gap)?
            - mx
    };
    Ok(-p * m.slope(x)? + lam * jump_part)
}

/// Residuals at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HjbNode {
    pub x: f64,
    /// `(A - q) m(x)`.
    pub r1: f64,
    /// `1 - m'(x)`.
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Residual {
    R1,
    R2,
}

/// The level where the supersolution inequality is most violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: f64,
    pub residual: Residual,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbReport {
    pub beta: f64,
    pub tol: f64,
    /// `max(1, sup |m|)` over the candidate grid.
    pub scale: f64,
    pub r1_tolerance: f64,
    pub r2_tolerance: f64,
    pub max_r1: f64,
    pub max_r2: f64,
    /// `max_x min(|r1|, |r2|)`.
    pub complementarity_gap: f64,
    /// Both residuals at most their tolerance everywhere.
    pub supersolution: bool,
    /// At every node at least one residual is at least minus its tolerance.
    pub complementarity: bool,
    pub witness: Option<Witness>,
    pub nodes: Vec<HjbNode>,
}

impl HjbReport {
    pub fn passed(&self) -> bool {
        self.supersolution && self.complementarity
    }

    pub fn residual_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["x", "r1", "r2"]);
        for n in &self.nodes {
            t.push([n.x, n.r1, n.r2]);
        }
        t
    }
}

const EXTENSION_NODES: usize = 400;

/// Check levels: the candidate's nodes in `(0, β]`, then a uniform grid above
/// `β` reaching `β + max(β, λ E C₁ / q)`.
pub fn check_levels(params: &ModelParams, m: &CandidateValue) -> Vec<f64> {
    let mut xs: Vec<f64> = (1..m.values.len()).map(|i| m.values.x(i).min(m.beta)).collect();
    let reach = if params.q > 0.0 { params.mean_gain_rate() / params.q } else { 10.0 * params.jumps.mean() };
    let span = m.beta.max(reach).max(1.0);
    xs.extend((1..=EXTENSION_NODES).map(|k| m.beta + span * k as f64 / EXTENSION_NODES as f64));
    xs
}

/// `r1` tolerance is `tol · max(1, sup |m|)`; `r2` is dimensionless and uses `tol`.
pub fn verify_hjb(params: &ModelParams, m: &CandidateValue, tol: f64) -> Result<HjbReport> {
    let scale = m.values.sup_norm().max(1.0);
    let r1_tolerance = tol * scale;
    let r2_tolerance = tol;
    let nodes = check_levels(params, m)
        .into_par_iter()
        .map(|x| {
            let r1 = apply_generator(params, m, x)? - params.q * m.value(x)?;
            Ok(HjbNode { x, r1, r2: 1.0 - m.slope(x)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_r1 = nodes.iter().map(|n| n.r1).fold(f64::NEG_INFINITY, f64::max);
    let max_r2 = nodes.iter().map(|n| n.r2).fold(f64::NEG_INFINITY, f64::max);
    let complementarity_gap = nodes.iter().map(|n| n.r1.abs().min(n.r2.abs())).fold(0.0, f64::max);
    let complementarity = nodes.iter().all(|n| n.r1 >= -r1_tolerance || n.r2 >= -r2_tolerance);
    let witness = nodes
        .iter()
        .flat_map(|n| {
            [
                (n.r1 / r1_tolerance, Witness { x: n.x, residual: Residual::R1, value: n.r1 }),
                (n.r2 / r2_tolerance, Witness { x: n.x, residual: Residual::R2, value: n.r2 }),
            ]
        })
        .filter(|(excess, _)| *excess > 1.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, w)| w);
    Ok(HjbReport {
        beta: m.beta,
        tol,
        scale,
        r1_tolerance,
        r2_tolerance,
        max_r1,
        max_r2,
        complementarity_gap,
        supersolution: witness.is_none(),
        complementarity,
        witness,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier_value::{solve, Method};
    use crate::model::CostFunction;

    fn table_one() -> ModelParams {
        ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, 0.01)
    }

    #[test]
    fn identity_candidate_has_the_closed_form_residual() {
        let params = table_one();
        let m = CandidateValue::identity();
        for x in [0.5, 3.0, 40.0] {
            let r1 = apply_generator(&params, &m, x).unwrap() - params.q * x;
            let exact = -params.cost.eval(x).unwrap() + params.mean_gain_rate() - params.q * x;
            assert!((r1 - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_candidate_is_annihilated() {
        let m = CandidateValue::zero();
        for x in [0.1, 1.0, 100.0] {
            assert_eq!(apply_generator(&table_one(), &m, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn barrier_value_solves_its_equation_below_the_barrier() {
        let params = table_one();
        let sol = solve(&params, 31.966, Method::Ode).unwrap();
        let m = CandidateValue::from_solution(&sol);
        let scale = sol.v.sup_norm().max(1.0);
        for i in (1..sol.v.len() - 1).step_by(97) {
            let x = sol.v.x(i);
            let r1 = apply_generator(&params, &m, x).unwrap() - params.q * m.value(x).unwrap();
            assert!(r1.abs() <= 1e-4 * scale, "x={x}: {r1}");
        }
    }

    #[test]
    fn generator_residual_is_second_order() {
        let params = table_one();
        let x = 10.0;
        let resid = |n: usize| {
            let sol = crate::barrier_value::solve_vb_ode(&params, 20.0, 20.0 / n as f64).unwrap();
            let m = CandidateValue::from_solution(&sol);
            (apply_generator(&params, &m, x).unwrap() - params.q * m.value(x).unwrap()).abs()
        };
        let order = (resid(100) / resid(200)).log2();
        assert!(order > 1.8, "observed order {order}");
    }

    #[test]
    fn left_derivative_is_used_at_the_barrier() {
        let sol = solve(&table_one(), 20.0, Method::Ode).unwrap();
        let m = CandidateValue::from_solution(&sol);
        assert_eq!(m.slope(20.0).unwrap(), sol.gamma);
        assert_eq!(m.slope(20.0 + 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn identity_passes_under_the_zero_barrier_condition() {
        let params = ModelParams::exponential(CostFunction::constant(10.0), 0.1, 0.1, 0.01);
        let report = verify_hjb(&params, &CandidateValue::identity(), 1e-3).unwrap();
        assert!(report.passed());
        assert!(report.nodes.iter().all(|n| n.r2 == 0.0 && n.r1 <= 0.0));
    }
}
