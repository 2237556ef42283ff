//! The value `v_β` of the barrier strategy at `β`, by three routes:
//!
//! * ODE shooting, for exponential gains;
//! * a Nyström discretisation of the Fredholm equation for `u_β = v_β'`;
//! * the classical-model exit functions under the mirror map `x ↦ β - x`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classical_exit::{ClassicalModel, ExitFunctions, PremiumExtension};
use crate::error::{Error, Result};
use crate::grid::{cumulative_trapezoid, GridFunction};
use crate::io::CsvTable;
use crate::model::ModelParams;
use crate::numerics::ode::{rk4_step, Dopri5, Tolerance};

/// Which solver produced a [`BarrierSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ode,
    Fredholm,
    Duality,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ode => "ode",
            Method::Fredholm => "fredholm",
            Method::Duality => "duality",
        }
    }
}

/// Solver-specific diagnostics. Fields that do not apply stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step: f64,
    pub nodes: usize,
    /// ODE: accepted integrator steps.
    pub integrator_steps: Option<usize>,
    /// ODE: denominator of the shooting constant.
    pub shooting_denominator: Option<f64>,
    /// ODE: residual of the nonlocal boundary condition at zero.
    pub boundary_residual: Option<f64>,
    /// Fredholm: `‖(I - KW)u - G‖∞`.
    pub linear_residual: Option<f64>,
    /// Fredholm: 1-norm condition number of `I - KW`.
    pub condition: Option<f64>,
    /// Duality: truncation levels reached while shooting `G_q,1` and `G_q,|x|`.
    pub truncation: Option<(f64, f64)>,
}

/// `v_β` and `v_β'` on a uniform grid over `[0, β]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSolution {
    pub beta: f64,
    pub v: GridFunction,
    pub dv: GridFunction,
    /// `v_β'(β-)`.
    pub gamma: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl BarrierSolution {
    /// The barrier at zero pays out everything: `v_0(x) = x`.
    fn zero_barrier(params: &ModelParams, method: Method) -> Result<Self> {
        Ok(Self {
            beta: 0.0,
            v: GridFunction::new(0.0, 1.0, vec![0.0])?,
            dv: GridFunction::new(0.0, 1.0, vec![1.0])?,
            gamma: params.mean_gain_rate() / params.cost.eval(0.0)?,
            method,
            diagnostics: Diagnostics { nodes: 1, ..Diagnostics::default() },
        })
    }

    /// `v_β(x)` for any real `x`: zero at or below ruin, affine above `β`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            Ok(0.0)
        } else if x > self.beta {
            extend_above_barrier(self, x)
        } else {
            self.v.interpolate(x)
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["x", "v", "dv"]);
        for i in 0..self.v.len() {
            t.push([self.v.x(i), self.v.values()[i], self.dv.values()[i]]);
        }
        t
    }
}

/// `x - β + v_β(β)` for `x > β`.
pub fn extend_above_barrier(sol: &BarrierSolution, x: f64) -> Result<f64> {
    if !(x > sol.beta) {
        return Err(Error::Argument(format!("extension needs x > β = {}, got {x}", sol.beta)));
    }
    Ok(x - sol.beta + sol.v.last())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!("barrier must be finite and nonnegative, got {beta}")));
    }
    Ok(())
}

fn partition(beta: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("step must be positive, got {h}")));
    }
    let n = ((beta / h).ceil() as usize).max(1);
    Ok((n, beta / n as f64))
}

fn exponential_rate(params: &ModelParams) -> Result<f64> {
    params
        .jumps
        .exponential_rate()
        .ok_or_else(|| Error::Argument("the ODE route needs exponential gains".into()))
}

/// How the basis solution is integrated between output nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeScheme {
    /// Dormand–Prince with the given tolerance.
    Adaptive { tol: f64 },
    /// One classical RK4 step per output interval.
    FixedRk4,
}

impl Default for OdeScheme {
    fn default() -> Self {
        OdeScheme::Adaptive { tol: 1e-10 }
    }
}

/// The homogeneous basis solution `w` with `w(0) = 0`, `w'(0) = 1`.
#[derive(Debug, Clone)]
pub struct OdeBasis {
    pub w: GridFunction,
    pub dw: GridFunction,
    /// `∫_0^β w(z) e^{-μz} dz`.
    pub weighted_integral: f64,
    pub steps: usize,
}

fn ode_rhs(params: &ModelParams, mu: f64) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] + '_ {
    let lq = params.lambda + params.q;
    let q = params.q;
    move |x, y| {
        let p = params.cost.rate(x);
        let dp = params.cost.slope(x);
        let ddw = ((mu * p - dp - lq) * y[1] + mu * q * y[0]) / p;
        [y[1], ddw, y[0] * (-mu * x).exp()]
    }
}

/// Integrates `-p w'' + (μp - p' - λ - q) w' + μ q w = 0` from `w(0) = 0`, `w'(0) = 1`
/// together with `I' = w e^{-μx}`.
pub fn ode_basis(params: &ModelParams, beta: f64, h: f64, scheme: OdeScheme) -> Result<OdeBasis> {
    let mu = exponential_rate(params)?;
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("basis needs β > 0, got {beta}")));
    }
    let (n, step) = partition(beta, h)?;
    let f = ode_rhs(params, mu);
    let mut y = [0.0, 1.0, 0.0];
    let mut w = Vec::with_capacity(n + 1);
    let mut dw = Vec::with_capacity(n + 1);
    w.push(0.0);
    dw.push(1.0);
    let mut steps = 0;
    let mut solver = match scheme {
        OdeScheme::Adaptive { tol } => Some(Dopri5::new(Tolerance::new(tol), step.min(1.0))),
        OdeScheme::FixedRk4 => None,
    };
    for i in 0..n {
        let x0 = i as f64 * step;
        let x1 = if i + 1 == n { beta } else { (i + 1) as f64 * step };
        match solver.as_mut() {
            Some(s) => s.advance(&f, x0, &mut y, x1)?,
            None => {
                y = rk4_step(&f, x0, &y, x1 - x0);
                steps += 1;
            }
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration { x: x1, reason: "basis solution overflowed".into() });
        }
        w.push(y[0]);
        dw.push(y[1]);
    }
    if let Some(s) = solver {
        steps = s.steps;
    }
    Ok(OdeBasis { w: GridFunction::new(0.0, step, w)?, dw: GridFunction::new(0.0, step, dw)?, weighted_integral: y[2], steps })
}

/// ODE route with the default adaptive tolerance.
pub fn solve_vb_ode(params: &ModelParams, beta: f64, h: f64) -> Result<BarrierSolution> {
    solve_vb_ode_with(params, beta, h, OdeScheme::default())
}

/// `v_β = α w` where `α` enforces the nonlocal condition
/// `p(0) v'(0) = λμ ∫_0^β v e^{-μz} dz + λ e^{-μβ} (1/μ + v(β))`.
pub fn solve_vb_ode_with(params: &ModelParams, beta: f64, h: f64, scheme: OdeScheme) -> Result<BarrierSolution> {
    check_beta(beta)?;
    let mu = exponential_rate(params)?;
    if beta == 0.0 {
        return BarrierSolution::zero_barrier(params, Method::Ode);
    }
    let basis = ode_basis(params, beta, h, scheme)?;
    let lam = params.lambda;
    let tail = (-mu * beta).exp();
    let p0 = params.cost.eval(0.0)?;
    let denominator = p0 - lam * mu * basis.weighted_integral - lam * tail * basis.w.last();
    if !(denominator > 1e-12 * p0) {
        return Err(Error::DegenerateBarrier { beta, denominator });
    }
    let alpha = lam * tail / mu / denominator;
    let v = basis.w.map(|_, w| alpha * w);
    let dv = basis.dw.map(|_, w| alpha * w);
    let gamma = dv.last();
    let mut sol = BarrierSolution {
        beta,
        gamma,
        method: Method::Ode,
        diagnostics: Diagnostics {
            step: v.step(),
            nodes: v.len(),
            integrator_steps: Some(basis.steps),
            shooting_denominator: Some(denominator),
            ..Diagnostics::default()
        },
        v,
        dv,
    };
    sol.diagnostics.boundary_residual = Some(nonlocal_bc_residual(params, &sol.v, sol.dv.first())?);
    Ok(sol)
}

/// `p(0) v'(0) - λμ ∫_0^β v e^{-μz} dz - λ e^{-μβ} (1/μ + v(β))`, with the
/// integral by composite Simpson (trapezoid on an odd interval count).
pub fn nonlocal_bc_residual(params: &ModelParams, v: &GridFunction, dv0: f64) -> Result<f64> {
    let mu = exponential_rate(params)?;
    let lam = params.lambda;
    let beta = v.end();
    let vals = v.values();
    let n = vals.len() - 1;
    let h = v.step();
    let g = |i: usize| vals[i] * (-mu * v.x(i)).exp();
    let integral = if n == 0 {
        0.0
    } else if n % 2 == 0 {
        let mut s = g(0) + g(n);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i);
        }
        s * h / 3.0
    } else {
        let mut s = 0.5 * (g(0) + g(n));
        for i in 1..n {
            s += g(i);
        }
        s * h
    };
    let p0 = params.cost.eval(0.0)?;
    Ok(p0 * dv0 - lam * mu * integral - lam * (-mu * beta).exp() * (1.0 / mu + v.last()))
}

/// The Nyström system `(I - KW) u = G_β` on `n + 1` equispaced nodes.
#[derive(Debug, Clone)]
pub struct FredholmSystem {
    pub nodes: Vec<f64>,
    pub step: f64,
    /// `KW`: kernel times quadrature weights, each row split at the diagonal.
    pub weighted_kernel: DMatrix<f64>,
    pub source: DVector<f64>,
}

/// `K(x, y)`: `-q/p(x)` for `y ≤ x`, `λ F̄(y - x) / p(x)` for `y > x`.
pub fn kernel(params: &ModelParams, x: f64, y: f64) -> f64 {
    let p = params.cost.rate(x);
    if y <= x {
        -params.q / p
    } else {
        params.lambda * params.jumps.tail(y - x) / p
    }
}

/// Assembles the Nyström system for `u_β = v_β'`.
pub fn fredholm_system(params: &ModelParams, beta: f64, n: usize) -> Result<FredholmSystem> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!("Fredholm route needs β > 0, got {beta}")));
    }
    if n < 2 {
        return Err(Error::Argument("Fredholm route needs at least two intervals".into()));
    }
    let h = beta / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|i| if i == n { beta } else { i as f64 * h }).collect();
    let lam = params.lambda;
    let q = params.q;
    let m = n + 1;
    let mut a = DMatrix::zeros(m, m);
    let mut g = DVector::zeros(m);
    let tails: Vec<f64> = (0..=n).map(|k| params.jumps.tail(k as f64 * h)).collect();
    for i in 0..m {
        let p = params.cost.rate(nodes[i]);
        if !(p > 0.0) {
            return Err(Error::NonPositiveRate { x: nodes[i], value: p });
        }
        let lower = -q / p;
        let upper = lam / p;
        // [0, x_i]: trapezoid on nodes 0..=i.
        if i > 0 {
            for j in 0..=i {
                let w = if j == 0 || j == i { 0.5 * h } else { h };
                a[(i, j)] += w * lower;
            }
        }
        // [x_i, β]: trapezoid on nodes i..=n.
        if i < n {
            for j in i..=n {
                let w = if j == i || j == n { 0.5 * h } else { h };
                a[(i, j)] += w * upper * tails[j - i];
            }
        }
        g[i] = lam / p * params.jumps.partial_expectation(beta - nodes[i])?;
    }
    Ok(FredholmSystem { nodes, step: h, weighted_kernel: a, source: g })
}

const MAX_CONDITION: f64 = 1e13;

/// Solves the Nyström system; returns `u` on the nodes and `(residual, condition)`.
fn solve_fredholm_system(sys: &FredholmSystem) -> Result<(Vec<f64>, f64, f64)> {
    let m = sys.nodes.len();
    let a = DMatrix::identity(m, m) - &sys.weighted_kernel;
    let lu = a.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    let norm1 = |mat: &DMatrix<f64>| mat.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let condition = norm1(&a) * norm1(&inverse);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let u = &inverse * &sys.source;
    let u = {
        // One step of iterative refinement.
        let r = &sys.source - &a * &u;
        u + &inverse * r
    };
    let residual = (&a * &u - &sys.source).amax();
    Ok((u.iter().copied().collect(), residual, condition))
}

/// `u_β = v_β'` on `n + 1` nodes.
pub fn solve_ub_fredholm(params: &ModelParams, beta: f64, n: usize) -> Result<GridFunction> {
    let sys = fredholm_system(params, beta, n)?;
    let (u, ..) = solve_fredholm_system(&sys)?;
    GridFunction::new(0.0, sys.step, u)
}

/// `v(x) = ∫_0^x u` by the composite trapezoid rule.
pub fn vb_from_fredholm(u: &GridFunction) -> GridFunction {
    cumulative_trapezoid(u)
}

/// Fredholm route as a full [`BarrierSolution`].
pub fn solve_vb_fredholm(params: &ModelParams, beta: f64, n: usize) -> Result<BarrierSolution> {
    check_beta(beta)?;
    if beta == 0.0 {
        return BarrierSolution::zero_barrier(params, Method::Fredholm);
    }
    let sys = fredholm_system(params, beta, n)?;
    let (u, residual, condition) = solve_fredholm_system(&sys)?;
    let dv = GridFunction::new(0.0, sys.step, u)?;
    let v = vb_from_fredholm(&dv);
    Ok(BarrierSolution {
        beta,
        gamma: dv.last(),
        method: Method::Fredholm,
        diagnostics: Diagnostics {
            step: sys.step,
            nodes: dv.len(),
            linear_residual: Some(residual),
            condition: Some(condition),
            ..Diagnostics::default()
        },
        v,
        dv,
    })
}

/// Duality route with the constant premium extension above `β`.
pub fn vb_via_duality(params: &ModelParams, beta: f64, h: f64) -> Result<BarrierSolution> {
    vb_via_duality_with(params, beta, h, PremiumExtension::Constant)
}

/// `v_β(x) = g̃(β - x) - Z̃(β - x) g̃(β) / Z̃(β)` in the classical model with `p̃(y) = p(β - y)`.
pub fn vb_via_duality_with(params: &ModelParams, beta: f64, h: f64, extension: PremiumExtension) -> Result<BarrierSolution> {
    check_beta(beta)?;
    params.require_positive_q()?;
    if beta == 0.0 {
        return BarrierSolution::zero_barrier(params, Method::Duality);
    }
    let cm = ClassicalModel::mirrored(params, beta, extension);
    let ef = ExitFunctions::compute(&cm, h)?;
    dual_value(&ef, beta)
}

/// Mirrors the classical exit functions back to `v_β` on the same grid.
pub fn dual_value(ef: &ExitFunctions, beta: f64) -> Result<BarrierSolution> {
    let n = ef.z.len() - 1;
    let z = ef.z.values();
    let g = ef.gtilde.values();
    let ratio = g[n] / z[n];
    let mut v: Vec<f64> = (0..=n).map(|i| g[n - i] - z[n - i] * ratio).collect();
    v[0] = 0.0;
    let dv: Vec<f64> = (0..=n).map(|i| -(ef.gtilde_slope(n - i) - ef.z_slope(n - i) * ratio)).collect();
    let step = ef.step;
    let v = GridFunction::new(0.0, step, v)?;
    let dv = GridFunction::new(0.0, step, dv)?;
    Ok(BarrierSolution {
        beta,
        gamma: dv.last(),
        method: Method::Duality,
        diagnostics: Diagnostics {
            step,
            nodes: n + 1,
            truncation: Some((ef.shooting_one.truncation, ef.shooting_overshoot.truncation)),
            ..Diagnostics::default()
        },
        v,
        dv,
    })
}

/// Default grids: ODE step `β/2000`, Fredholm `400` intervals, duality step `β/2000`.
pub const DEFAULT_FREDHOLM_NODES: usize = 400;
pub const DEFAULT_GRID_INTERVALS: usize = 2000;

/// Solves by `method` with the default grid for that method.
pub fn solve(params: &ModelParams, beta: f64, method: Method) -> Result<BarrierSolution> {
    let h = if beta > 0.0 { beta / DEFAULT_GRID_INTERVALS as f64 } else { 1.0 };
    match method {
        Method::Ode => solve_vb_ode(params, beta, h),
        Method::Fredholm => solve_vb_fredholm(params, beta, DEFAULT_FREDHOLM_NODES),
        Method::Duality => vb_via_duality(params, beta, h),
    }
}

/// Methods that apply to `params`: the ODE route needs exponential gains and
/// the duality route a positive discount rate.
pub fn applicable_methods(params: &ModelParams) -> Vec<Method> {
    let mut out = Vec::new();
    if params.jumps.exponential_rate().is_some() {
        out.push(Method::Ode);
    }
    out.push(Method::Fredholm);
    if params.q > 0.0 {
        out.push(Method::Duality);
    }
    out
}

/// Samples `sol.v` on the `n + 1` nodes of `[0, β]`.
pub fn resample(sol: &BarrierSolution, n: usize) -> Result<GridFunction> {
    let beta = sol.beta;
    let h = beta / n as f64;
    let values = (0..=n).map(|i| sol.v.interpolate(if i == n { beta } else { i as f64 * h })).collect::<Result<_>>()?;
    GridFunction::new(0.0, h, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CostFunction;

    fn table_one() -> ModelParams {
        ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, 0.01)
    }

    #[test]
    fn value_vanishes_at_zero_and_extends_affinely() {
        let sol = solve(&table_one(), 30.0, Method::Ode).unwrap();
        assert_eq!(sol.v.first(), 0.0);
        assert!(sol.v.values().iter().all(|&v| v >= 0.0));
        let vb = sol.v.last();
        assert_eq!(extend_above_barrier(&sol, 31.0).unwrap(), vb + 1.0);
        assert!(extend_above_barrier(&sol, 30.0).is_err());
        assert!((sol.value_at(30.0 + 1e-9).unwrap() - vb).abs() < 1e-8);
        assert_eq!(sol.value_at(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn three_routes_agree() {
        let params = table_one();
        let beta = 31.966;
        let ode = solve_vb_ode(&params, beta, beta / 400.0).unwrap();
        let fred = solve_vb_fredholm(&params, beta, 400).unwrap();
        let dual = vb_via_duality(&params, beta, beta / 2000.0).unwrap();
        let dual = GridFunction::new(0.0, beta / 400.0, resample(&dual, 400).unwrap().into_values()).unwrap();
        assert!(fred.v.relative_sup_distance(&ode.v).unwrap() < 1e-3);
        assert!(dual.relative_sup_distance(&ode.v).unwrap() < 1e-3);
        assert!(fred.dv.relative_sup_distance(&ode.dv).unwrap() < 1e-3);
    }

    #[test]
    fn gamma_is_the_fredholm_equation_at_the_barrier() {
        let params = table_one();
        let beta = 20.0;
        let fred = solve_vb_fredholm(&params, beta, 400).unwrap();
        let p = params.cost.eval(beta).unwrap();
        let rhs = params.mean_gain_rate() / p - params.q / p * fred.v.last();
        assert!((fred.gamma - rhs).abs() < 1e-6);
    }

    #[test]
    fn kernel_rows_split_at_the_diagonal() {
        let params = table_one();
        let sys = fredholm_system(&params, 10.0, 20).unwrap();
        let h = sys.step;
        let i = 7;
        for j in 0..sys.nodes.len() {
            if j == i {
                continue;
            }
            let w = if j == 0 || j == 20 { 0.5 * h } else { h };
            let expected = w * kernel(&params, sys.nodes[i], sys.nodes[j]);
            assert!((sys.weighted_kernel[(i, j)] - expected).abs() < 1e-15);
        }
        let p = params.cost.rate(sys.nodes[i]);
        let diag = 0.5 * h * (-params.q / p) + 0.5 * h * params.lambda / p;
        assert!((sys.weighted_kernel[(i, i)] - diag).abs() < 1e-15);
    }

    #[test]
    fn zero_intensity_gives_zero_value() {
        let params = ModelParams::exponential(CostFunction::p1(2.0), 0.0, 0.1, 0.01);
        for m in [Method::Ode, Method::Fredholm, Method::Duality] {
            let sol = solve(&params, 10.0, m).unwrap();
            assert!(sol.v.sup_norm() <= 1e-10, "{m:?}");
        }
        assert_eq!(solve(&params, 10.0, Method::Ode).unwrap().v.sup_norm(), 0.0);
    }

    #[test]
    fn zero_barrier_convention() {
        let sol = solve(&table_one(), 0.0, Method::Fredholm).unwrap();
        assert_eq!(sol.gamma, 5.0);
        assert_eq!(sol.value_at(3.0).unwrap(), 3.0);
    }

    #[test]
    fn rk4_basis_is_fourth_order() {
        let params = table_one();
        let exact = ode_basis(&params, 20.0, 0.01, OdeScheme::Adaptive { tol: 1e-13 }).unwrap().w.last();
        let err = |h: f64| (ode_basis(&params, 20.0, h, OdeScheme::FixedRk4).unwrap().w.last() - exact).abs();
        let order = (err(0.4) / err(0.2)).log2();
        assert!(order > 3.7, "observed order {order}");
    }

    #[test]
    fn perturbed_solutions_break_a_boundary_condition() {
        let params = table_one();
        let beta = 31.966;
        let sol = solve_vb_ode(&params, beta, beta / 2000.0).unwrap();
        let base = sol.diagnostics.boundary_residual.unwrap();
        let basis = ode_basis(&params, beta, beta / 2000.0, OdeScheme::default()).unwrap();
        let eps = 1e-3 * sol.dv.first();
        let v = GridFunction::new(0.0, sol.v.step(), sol.v.values().iter().zip(basis.w.values()).map(|(a, b)| a + eps * b).collect()).unwrap();
        let perturbed = nonlocal_bc_residual(&params, &v, sol.dv.first() + eps).unwrap();
        assert!(base.abs() < 1e-8, "{base}");
        assert!(perturbed.abs() > 1e3 * base.abs().max(1e-12), "{perturbed}");
    }
}
