//! Uniform-grid function samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of a scalar function on `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("grid function needs at least one value".into()));
        }
        if !(step > 0.0) && values.len() > 1 {
            return Err(Error::Argument(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { start, step, values })
    }

    /// Samples `f` on `n + 1` equispaced nodes covering `[a, b]`.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = n.max(1);
        let step = (b - a) / n as f64;
        let values = (0..=n).map(|i| f(node(a, b, step, n, i))).collect();
        Self::new(a, step, values)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.x(self.len() - 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.len() - 1]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.len() == other.len()
            && (self.start - other.start).abs() <= 1e-12 * (1.0 + self.start.abs())
            && (self.step - other.step).abs() <= 1e-12 * self.step.abs().max(1e-300)
    }

    /// Piecewise-linear interpolation. Levels within a hair of the ends are clamped.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        if t == 0.0 {
            return Ok(self.values[i]);
        }
        Ok(self.values[i] * (1.0 - t) + self.values[i + 1] * t)
    }

    /// Second-order finite-difference derivative at node `i`.
    pub fn derivative_at_node(&self, i: usize) -> f64 {
        let v = &self.values;
        let n = v.len();
        let h = self.step;
        match n {
            0 | 1 => 0.0,
            2 => (v[1] - v[0]) / h,
            _ if i == 0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
            _ if i == n - 1 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
            _ => (v[i + 1] - v[i - 1]) / (2.0 * h),
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(self.x(i), v)).collect();
        GridFunction { start: self.start, step: self.step, values }
    }

    /// Restricts to the first `len` nodes.
    pub fn truncate(&self, len: usize) -> GridFunction {
        GridFunction {
            start: self.start,
            step: self.step,
            values: self.values[..len.min(self.len())].to_vec(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max(max |other|, tiny)` over shared nodes.
    pub fn relative_sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch(format!(
                "{} nodes step {} vs {} nodes step {}",
                self.len(),
                self.step,
                other.len(),
                other.step
            )));
        }
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(diff / other.sup_norm().max(f64::MIN_POSITIVE))
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let n = self.len();
        if n == 1 {
            if (x - self.start).abs() <= 1e-12 * (1.0 + x.abs()) {
                return Ok((0, 0.0));
            }
            return Err(Error::Domain { what: "grid function", x });
        }
        let slack = 1e-9 * self.step;
        let end = self.end();
        if x < self.start - slack || x > end + slack || x.is_nan() {
            return Err(Error::Domain { what: "grid function", x });
        }
        let s = ((x - self.start) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        if t >= 1.0 {
            return Ok((n - 1, 0.0));
        }
        Ok((i, t))
    }
}

/// Node `i` of an `n`-interval partition of `[a, b]`, landing exactly on `b` at `i == n`.
pub(crate) fn node(a: f64, b: f64, step: f64, n: usize, i: usize) -> f64 {
    if i == n {
        b
    } else {
        a + i as f64 * step
    }
}

/// Cumulative trapezoid antiderivative starting from zero.
pub fn cumulative_trapezoid(f: &GridFunction) -> GridFunction {
    let h = f.step();
    let v = f.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    GridFunction { start: f.start(), step: h, values: out }
}
