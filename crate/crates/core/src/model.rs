//! Dual risk model: cost rates, gain-size laws and their validity checks.
//!
//! Between gains the surplus decreases at the deterministic rate `p(x)`; gains
//! arrive at Poisson rate `λ` with i.i.d. sizes drawn from a [`JumpLaw`].

use std::path::Path;

use rand::Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_two_column_csv;
use crate::numerics::interp::MonotoneCubic;

/// Surplus-dependent cost rate `p(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostFunction {
    /// `c (2 - 1/(1+x))`, increasing from `c` to `2c`.
    Rational { c: f64 },
    /// `2c / (1 + e^{-x})`, increasing from `c` to `2c`.
    Logistic { c: f64 },
    /// `c + 0.1/(1+x)`, decreasing from `c + 0.1` to `c`.
    Decreasing { c: f64 },
    Constant { c: f64 },
    Tabulated(TabulatedCost),
}

impl CostFunction {
    pub fn p1(c: f64) -> Self {
        CostFunction::Rational { c }
    }

    pub fn p2(c: f64) -> Self {
        CostFunction::Logistic { c }
    }

    pub fn p3(c: f64) -> Self {
        CostFunction::Decreasing { c }
    }

    pub fn constant(c: f64) -> Self {
        CostFunction::Constant { c }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostFunction::Rational { .. } => "p1",
            CostFunction::Logistic { .. } => "p2",
            CostFunction::Decreasing { .. } => "p3",
            CostFunction::Constant { .. } => "constant",
            CostFunction::Tabulated(_) => "tabulated",
        }
    }

    /// `p(x)` for `x ≥ 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.rate(x))
    }

    /// `p'(x)` for `x ≥ 0` (right derivative at zero).
    pub fn eval_derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.slope(x))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !(x >= 0.0) {
            return Err(Error::Domain { what: "cost function", x });
        }
        if let CostFunction::Tabulated(t) = self {
            if !t.constant_extension && x > t.curve.last_x() {
                return Err(Error::Extrapolation { x, last: t.curve.last_x() });
            }
        }
        Ok(())
    }

    /// Unchecked evaluation for solver inner loops; callers stay in `[0, ∞)`.
    #[inline]
    pub(crate) fn rate(&self, x: f64) -> f64 {
        match *self {
            CostFunction::Rational { c } => c * (2.0 - 1.0 / (1.0 + x)),
            CostFunction::Logistic { c } => 2.0 * c / (1.0 + (-x).exp()),
            CostFunction::Decreasing { c } => c + 0.1 / (1.0 + x),
            CostFunction::Constant { c } => c,
            CostFunction::Tabulated(ref t) => t.curve.eval(x).0,
        }
    }

    #[inline]
    pub(crate) fn slope(&self, x: f64) -> f64 {
        match *self {
            CostFunction::Rational { c } => c / ((1.0 + x) * (1.0 + x)),
            CostFunction::Logistic { c } => {
                let e = (-x).exp();
                2.0 * c * e / ((1.0 + e) * (1.0 + e))
            }
            CostFunction::Decreasing { .. } => -0.1 / ((1.0 + x) * (1.0 + x)),
            CostFunction::Constant { .. } => 0.0,
            CostFunction::Tabulated(ref t) => t.curve.eval(x).1,
        }
    }

    /// `inf_{x ≥ 0} p(x)` (over the table's domain for tabulated costs).
    pub fn infimum(&self) -> f64 {
        match *self {
            CostFunction::Rational { c } | CostFunction::Logistic { c } => c,
            CostFunction::Decreasing { c } => c,
            CostFunction::Constant { c } => c,
            CostFunction::Tabulated(ref t) => t.curve.min_value(),
        }
    }

    /// `sup_{x ≥ 0} p(x)`.
    pub fn supremum(&self) -> f64 {
        match *self {
            CostFunction::Rational { c } | CostFunction::Logistic { c } => 2.0 * c,
            CostFunction::Decreasing { c } => c + 0.1,
            CostFunction::Constant { c } => c,
            CostFunction::Tabulated(ref t) => t.curve.max_value(),
        }
    }

    /// `lim sup_{x → ∞} p(x)`, the rate that decides long-run drift.
    pub fn asymptotic(&self) -> f64 {
        match *self {
            CostFunction::Rational { c } | CostFunction::Logistic { c } => 2.0 * c,
            CostFunction::Decreasing { c } | CostFunction::Constant { c } => c,
            CostFunction::Tabulated(ref t) => t.curve.eval(t.curve.last_x()).0,
        }
    }

    fn scale(&self) -> Option<f64> {
        match *self {
            CostFunction::Rational { c }
            | CostFunction::Logistic { c }
            | CostFunction::Decreasing { c }
            | CostFunction::Constant { c } => Some(c),
            CostFunction::Tabulated(_) => None,
        }
    }

    pub(crate) fn probe_knots(&self) -> Vec<f64> {
        match self {
            CostFunction::Tabulated(t) => t.curve.knots().map(|(x, _)| x).collect(),
            _ => Vec::new(),
        }
    }

    /// Domain end for tabulated costs without constant extension.
    pub fn domain_end(&self) -> Option<f64> {
        match self {
            CostFunction::Tabulated(t) if !t.constant_extension => Some(t.curve.last_x()),
            _ => None,
        }
    }
}

/// Cost rate given by knots and a C¹ monotone cubic interpolant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TabulatedSpec", into = "TabulatedSpec")]
pub struct TabulatedCost {
    curve: MonotoneCubic,
    constant_extension: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TabulatedSpec {
    knots: Vec<(f64, f64)>,
    #[serde(default = "yes")]
    constant_extension: bool,
}

fn yes() -> bool {
    true
}

impl TryFrom<TabulatedSpec> for TabulatedCost {
    type Error = Error;
    fn try_from(spec: TabulatedSpec) -> Result<Self> {
        TabulatedCost::new(spec.knots, spec.constant_extension)
    }
}

impl From<TabulatedCost> for TabulatedSpec {
    fn from(t: TabulatedCost) -> Self {
        TabulatedSpec { knots: t.curve.knots().collect(), constant_extension: t.constant_extension }
    }
}

impl TabulatedCost {
    /// Knots must start at `x = 0` and be strictly increasing. Positivity is
    /// left to [`validate`], which reports it as a hard failure.
    pub fn new(knots: Vec<(f64, f64)>, constant_extension: bool) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        if xs.first().copied() != Some(0.0) {
            return Err(Error::Table("cost table must start at x = 0".into()));
        }
        let mut curve = MonotoneCubic::new(xs, ys)?;
        if constant_extension {
            curve = curve.with_flat_end();
        }
        Ok(Self { curve, constant_extension })
    }

    pub fn from_csv(path: impl AsRef<Path>, constant_extension: bool) -> Result<Self> {
        Self::new(read_two_column_csv(path)?, constant_extension)
    }
}

/// Gain-size distribution `F` with density `f`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JumpLaw {
    Exponential { mu: f64 },
    Tabulated(TabulatedDensity),
}

impl JumpLaw {
    pub fn exponential(mu: f64) -> Self {
        JumpLaw::Exponential { mu }
    }

    pub fn exponential_rate(&self) -> Option<f64> {
        match *self {
            JumpLaw::Exponential { mu } => Some(mu),
            JumpLaw::Tabulated(_) => None,
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        match *self {
            JumpLaw::Exponential { mu } => mu * (-mu * z).exp(),
            JumpLaw::Tabulated(ref t) => t.density(z),
        }
    }

    /// `P(C > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            JumpLaw::Exponential { mu } => (-mu * t).exp(),
            JumpLaw::Tabulated(ref tab) => tab.tail(t),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { mu } => 1.0 / mu,
            JumpLaw::Tabulated(ref t) => t.mean,
        }
    }

    /// `∫_t^∞ (z - t) f(z) dz`.
    pub fn partial_expectation(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain { what: "partial expectation", x: t });
        }
        Ok(self.excess(t))
    }

    #[inline]
    pub(crate) fn excess(&self, t: f64) -> f64 {
        match *self {
            JumpLaw::Exponential { mu } => (-mu * t.max(0.0)).exp() / mu,
            JumpLaw::Tabulated(ref tab) => tab.partial_expectation(t.max(0.0)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Exponential { mu } => {
                let e: f64 = rng.sample(Exp1);
                e / mu
            }
            JumpLaw::Tabulated(ref t) => {
                let u: f64 = rng.sample(Open01);
                t.quantile(u)
            }
        }
    }

    /// Upper end of the support, if bounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            JumpLaw::Exponential { .. } => None,
            JumpLaw::Tabulated(t) => Some(*t.zs.last().unwrap()),
        }
    }

    /// A length beyond which the gain tail is negligible for truncation purposes.
    pub fn tail_scale(&self) -> f64 {
        match self {
            JumpLaw::Exponential { mu } => 1.0 / mu,
            JumpLaw::Tabulated(t) => t.mean.max(*t.zs.last().unwrap() / 10.0),
        }
    }
}

/// Piecewise-linear density on knots `0 = z_0 < … < z_m`, zero beyond `z_m`.
///
/// The density is renormalised to unit mass; the raw mass is kept so that
/// [`validate`] can reject tables that are far from a probability density.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DensitySpec", into = "DensitySpec")]
pub struct TabulatedDensity {
    zs: Vec<f64>,
    fs: Vec<f64>,
    raw_mass: f64,
    mass_below: Vec<f64>,
    moment_below: Vec<f64>,
    mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DensitySpec {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<DensitySpec> for TabulatedDensity {
    type Error = Error;
    fn try_from(spec: DensitySpec) -> Result<Self> {
        TabulatedDensity::new(spec.knots)
    }
}

impl From<TabulatedDensity> for DensitySpec {
    fn from(t: TabulatedDensity) -> Self {
        let s = t.raw_mass;
        DensitySpec { knots: t.zs.iter().copied().zip(t.fs.iter().map(|f| f * s)).collect() }
    }
}

impl TabulatedDensity {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let (zs, raw): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        if zs.len() < 2 {
            return Err(Error::Table("density table needs at least two knots".into()));
        }
        if zs[0] != 0.0 {
            return Err(Error::Table("density table must start at z = 0".into()));
        }
        if zs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Table("density knots must be strictly increasing".into()));
        }
        if raw.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::Table("density values must be finite and nonnegative".into()));
        }
        let raw_mass: f64 = zs.windows(2).zip(raw.windows(2)).map(|(z, f)| 0.5 * (z[1] - z[0]) * (f[0] + f[1])).sum();
        if !(raw_mass > 0.0) {
            return Err(Error::Table("density has zero mass".into()));
        }
        let fs: Vec<f64> = raw.iter().map(|f| f / raw_mass).collect();
        let mut mass_below = vec![0.0];
        let mut moment_below = vec![0.0];
        for k in 0..zs.len() - 1 {
            let d = zs[k + 1] - zs[k];
            let (m, s) = segment_integrals(zs[k], fs[k], (fs[k + 1] - fs[k]) / d, d);
            mass_below.push(mass_below[k] + m);
            moment_below.push(moment_below[k] + s);
        }
        let mean = *moment_below.last().unwrap() / *mass_below.last().unwrap();
        Ok(Self { zs, fs, raw_mass, mass_below, moment_below, mean })
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(read_two_column_csv(path)?)
    }

    /// Mass of the table before renormalisation.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    fn segment(&self, z: f64) -> Option<usize> {
        if z < 0.0 || z >= *self.zs.last().unwrap() {
            return None;
        }
        Some(self.zs.partition_point(|&v| v <= z) - 1)
    }

    fn density(&self, z: f64) -> f64 {
        match self.segment(z) {
            Some(k) => {
                let t = (z - self.zs[k]) / (self.zs[k + 1] - self.zs[k]);
                self.fs[k] * (1.0 - t) + self.fs[k + 1] * t
            }
            None if z == *self.zs.last().unwrap() => *self.fs.last().unwrap(),
            None => 0.0,
        }
    }

    fn below(&self, t: f64) -> (f64, f64) {
        match self.segment(t) {
            Some(k) => {
                let d = self.zs[k + 1] - self.zs[k];
                let (m, s) = segment_integrals(self.zs[k], self.fs[k], (self.fs[k + 1] - self.fs[k]) / d, t - self.zs[k]);
                (self.mass_below[k] + m, self.moment_below[k] + s)
            }
            None if t <= 0.0 => (0.0, 0.0),
            None => (*self.mass_below.last().unwrap(), *self.moment_below.last().unwrap()),
        }
    }

    fn tail(&self, t: f64) -> f64 {
        (1.0 - self.below(t).0).max(0.0)
    }

    fn partial_expectation(&self, t: f64) -> f64 {
        let (m, s) = self.below(t);
        let total_moment = *self.moment_below.last().unwrap();
        ((total_moment - s) - t * (1.0 - m)).max(0.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        let total = *self.mass_below.last().unwrap();
        let target = u * total;
        let k = (self.mass_below.partition_point(|&m| m <= target)).clamp(1, self.zs.len() - 1) - 1;
        let d = self.zs[k + 1] - self.zs[k];
        let a = self.fs[k];
        let b = (self.fs[k + 1] - a) / d;
        let r = target - self.mass_below[k];
        // Solve a s + b s²/2 = r on [0, d].
        let s = if b.abs() < 1e-300 {
            if a > 0.0 { r / a } else { 0.0 }
        } else {
            let disc = (a * a + 2.0 * b * r).max(0.0);
            2.0 * r / (a + disc.sqrt())
        };
        self.zs[k] + s.clamp(0.0, d)
    }
}

/// `(∫_0^d f, ∫_0^d (z0+s) f)` for `f(s) = a + b s`.
fn segment_integrals(z0: f64, a: f64, b: f64, d: f64) -> (f64, f64) {
    let mass = a * d + 0.5 * b * d * d;
    let moment = z0 * mass + 0.5 * a * d * d + b * d * d * d / 3.0;
    (mass, moment)
}

/// Parameters of the dual model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub q: f64,
    pub cost: CostFunction,
    pub jumps: JumpLaw,
}

impl ModelParams {
    pub fn new(lambda: f64, q: f64, cost: CostFunction, jumps: JumpLaw) -> Self {
        Self { lambda, q, cost, jumps }
    }

    /// The exponential-gain example family: cost `kind(c)`, `Exp(μ)` gains.
    pub fn exponential(cost: CostFunction, lambda: f64, q: f64, mu: f64) -> Self {
        Self::new(lambda, q, cost, JumpLaw::exponential(mu))
    }

    /// `λ E C₁`, the mean gain per unit time.
    pub fn mean_gain_rate(&self) -> f64 {
        self.lambda * self.jumps.mean()
    }

    pub(crate) fn require_positive_q(&self) -> Result<()> {
        if self.q > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("discount rate must be positive here, got {}", self.q)))
        }
    }
}

/// Outcome of [`validate`] when no hard failure occurred.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub probe_points: usize,
    pub min_cost: f64,
    pub mean_gain_rate: f64,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

const MASS_TOLERANCE: f64 = 1e-3;

/// Hard failures: `p ≤ 0` on the probe grid, `λ ≤ 0`, `q < 0`, or a gain law
/// without finite positive mean. A missing upward drift only warns.
pub fn validate(params: &ModelParams) -> Result<ValidationReport> {
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::InvalidModel(format!("jump intensity must be positive, got {}", params.lambda)));
    }
    if !(params.q >= 0.0 && params.q.is_finite()) {
        return Err(Error::InvalidModel(format!("discount rate must be nonnegative, got {}", params.q)));
    }
    match &params.jumps {
        JumpLaw::Exponential { mu } => {
            if !(*mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidModel(format!("exponential rate must be positive, got {mu}")));
            }
        }
        JumpLaw::Tabulated(t) => {
            if (t.raw_mass() - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::InvalidModel(format!("gain density integrates to {}, not 1", t.raw_mass())));
            }
        }
    }
    let mean = params.jumps.mean();
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidModel(format!("gain mean must be finite and positive, got {mean}")));
    }
    if let Some(c) = params.cost.scale() {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidModel(format!("cost scale must be positive, got {c}")));
        }
    }

    let upper = params.cost.domain_end().unwrap_or_else(|| (20.0 * mean).max(100.0));
    let n = 2000;
    let mut probes: Vec<f64> = (0..=n).map(|i| upper * i as f64 / n as f64).collect();
    probes.extend(params.cost.probe_knots());
    let mut min_cost = f64::INFINITY;
    for &x in &probes {
        let p = params.cost.eval(x)?;
        if !(p > 0.0) {
            return Err(Error::NonPositiveRate { x, value: p });
        }
        min_cost = min_cost.min(p);
    }

    let gain = params.mean_gain_rate();
    let mut warnings = Vec::new();
    if gain <= params.cost.asymptotic() {
        warnings.push(format!(
            "mean gain rate {gain} does not exceed the long-run cost rate {}; the surplus need not drift to infinity",
            params.cost.asymptotic()
        ));
    }
    Ok(ValidationReport { probe_points: probes.len(), min_cost, mean_gain_rate: gain, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad;
    use proptest::prelude::*;

    #[test]
    fn builtin_values_at_zero_and_infinity() {
        assert_eq!(CostFunction::p1(2.0).eval(0.0).unwrap(), 2.0);
        assert_eq!(CostFunction::p2(2.0).eval(0.0).unwrap(), 2.0);
        assert!((CostFunction::p1(2.0).eval(1e15).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn builtin_derivatives_at_zero() {
        assert_eq!(CostFunction::p1(2.0).eval_derivative(0.0).unwrap(), 2.0);
        assert!((CostFunction::p3(2.0).eval_derivative(0.0).unwrap() + 0.1).abs() < 1e-15);
        assert!((CostFunction::p2(2.0).eval_derivative(0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_level_is_a_domain_error() {
        assert!(matches!(CostFunction::p1(1.0).eval(-0.5), Err(Error::Domain { .. })));
        assert!(JumpLaw::exponential(1.0).partial_expectation(-1.0).is_err());
    }

    #[test]
    fn tabulated_extrapolation_policy() {
        let knots = vec![(0.0, 1.0), (1.0, 2.0), (2.0, 2.5)];
        let strict = TabulatedCost::new(knots.clone(), false).unwrap();
        let cost = CostFunction::Tabulated(strict);
        assert!(matches!(cost.eval(3.0), Err(Error::Extrapolation { .. })));
        let extended = CostFunction::Tabulated(TabulatedCost::new(knots, true).unwrap());
        assert_eq!(extended.eval(30.0).unwrap(), 2.5);
        assert_eq!(extended.eval_derivative(2.0).unwrap(), 0.0);
    }

    #[test]
    fn exponential_partial_expectation_closed_form() {
        let j = JumpLaw::exponential(0.01);
        assert!((j.partial_expectation(0.0).unwrap() - 100.0).abs() < 1e-12);
        assert!((j.partial_expectation(100.0).unwrap() - 100.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    fn tabulated_exponential(mu: f64, spacing: f64, z_max: f64) -> JumpLaw {
        let n = (z_max / spacing).round() as usize;
        let knots = (0..=n).map(|i| {
            let z = i as f64 * spacing;
            (z, mu * (-mu * z).exp())
        });
        JumpLaw::Tabulated(TabulatedDensity::new(knots.collect()).unwrap())
    }

    #[test]
    fn tabulated_density_tracks_exponential() {
        let mu = 0.01;
        let law = tabulated_exponential(mu, 0.1, 3000.0);
        let closed = (-mu * 50.0f64).exp() / mu;
        let got = law.partial_expectation(50.0).unwrap();
        assert!((got - closed).abs() <= 1e-4 * closed, "{got} vs {closed}");
        // Independent route: adaptive quadrature of the tabulated density.
        let oracle = quad::adaptive(|z| (z - 50.0) * law.density(z), 50.0, 3000.0, 1e-9);
        assert!((got - oracle).abs() <= 1e-6 * closed, "{got} vs {oracle}");
        assert!((law.mean() - 100.0).abs() < 1e-3);
    }

    #[test]
    fn tabulated_sampling_matches_mean() {
        use rand::SeedableRng;
        let law = tabulated_exponential(0.5, 0.01, 40.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| law.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn validate_accepts_table_one_setting() {
        let params = ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, 0.01);
        let report = validate(&params).unwrap();
        assert!(report.is_clean(), "{:?}", report.warnings);
        assert!((report.mean_gain_rate - 10.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_zero_intensity() {
        let params = ModelParams::exponential(CostFunction::p1(2.0), 0.0, 0.1, 0.01);
        assert!(matches!(validate(&params), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn validate_rejects_negative_knot() {
        let cost = TabulatedCost::new(vec![(0.0, 1.0), (1.0, -0.5), (2.0, 1.0)], true).unwrap();
        let params = ModelParams::new(0.1, 0.1, CostFunction::Tabulated(cost), JumpLaw::exponential(0.01));
        assert!(matches!(validate(&params), Err(Error::NonPositiveRate { .. })));
    }

    #[test]
    fn validate_warns_without_upward_drift() {
        let params = ModelParams::exponential(CostFunction::constant(10.0), 0.1, 0.1, 0.01);
        let report = validate(&params).unwrap();
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn validate_rejects_unnormalised_density() {
        let d = TabulatedDensity::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(TabulatedDensity::new(vec![(0.0, 2.0), (1.0, 2.0)]).is_ok());
        let bad = TabulatedDensity::new(vec![(0.0, 2.0), (1.0, 2.0)]).unwrap();
        let ok = ModelParams::new(1.0, 0.1, CostFunction::constant(0.1), JumpLaw::Tabulated(d));
        assert!(validate(&ok).is_ok());
        let params = ModelParams::new(1.0, 0.1, CostFunction::constant(0.1), JumpLaw::Tabulated(bad));
        assert!(validate(&params).is_err());
    }

    proptest! {
        #[test]
        fn builtins_are_monotone(c in 0.1f64..10.0, x in 0.0f64..1e6, dx in 1e-6f64..1e3) {
            let y = x + dx;
            prop_assert!(CostFunction::p1(c).rate(x) <= CostFunction::p1(c).rate(y));
            prop_assert!(CostFunction::p2(c).rate(x) <= CostFunction::p2(c).rate(y));
            prop_assert!(CostFunction::p3(c).rate(x) >= CostFunction::p3(c).rate(y));
        }

        #[test]
        fn derivatives_match_central_differences(c in 0.5f64..5.0, x in 0.01f64..100.0) {
            let h = 1e-5;
            for cost in [CostFunction::p1(c), CostFunction::p2(c), CostFunction::p3(c)] {
                let fd = (cost.rate(x + h) - cost.rate(x - h)) / (2.0 * h);
                prop_assert!((fd - cost.eval_derivative(x).unwrap()).abs() < 1e-6);
            }
        }

        #[test]
        fn partial_expectation_is_nonincreasing(mu in 0.001f64..2.0, t in 0.0f64..500.0, dt in 0.0f64..50.0) {
            let j = JumpLaw::exponential(mu);
            prop_assert!(j.excess(t + dt) <= j.excess(t));
            prop_assert!((j.excess(0.0) - j.mean()).abs() <= 1e-12 * j.mean());
        }
    }
}
