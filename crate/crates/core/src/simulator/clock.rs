//! Travel times of the deterministic flow `dy/dt = ±r(y)`.

use crate::error::{Error, Result};
use crate::numerics::quad::{adaptive, gauss_legendre8};

type Rate = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// `C(y) = ∫_0^y dz / r(z)` on `[0, length]`, tabulated at cell ends and
/// completed inside a cell by eight-point Gauss–Legendre.
pub struct FlowClock {
    rate: Rate,
    length: f64,
    cell: f64,
    cumulative: Vec<f64>,
}

impl std::fmt::Debug for FlowClock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowClock").field("length", &self.length).field("cells", &(self.cumulative.len() - 1)).finish()
    }
}

impl FlowClock {
    pub fn new(rate: impl Fn(f64) -> f64 + Send + Sync + 'static, length: f64, cells: usize) -> Result<Self> {
        if !(length >= 0.0 && length.is_finite()) {
            return Err(Error::Argument(format!("clock length must be finite and nonnegative, got {length}")));
        }
        let cells = if length == 0.0 { 1 } else { cells.max(1) };
        let cell = if length == 0.0 { 1.0 } else { length / cells as f64 };
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        if length > 0.0 {
            let mut acc = 0.0;
            for k in 0..cells {
                let (a, b) = (k as f64 * cell, ((k + 1) as f64 * cell).min(length));
                for z in [a, 0.5 * (a + b), b] {
                    let r = rate(z);
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(Error::NonPositiveRate { x: z, value: r });
                    }
                }
                acc += gauss_legendre8(|z| 1.0 / rate(z), a, b);
                cumulative.push(acc);
            }
        }
        Ok(Self { rate: Box::new(rate), length, cell, cumulative })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn rate(&self, y: f64) -> f64 {
        (self.rate)(y)
    }

    /// `C(length)`.
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn cell_of(&self, y: f64) -> usize {
        ((y / self.cell).floor() as usize).min(self.cumulative.len() - 2)
    }

    /// `C(y)` for `0 ≤ y ≤ length`.
    pub fn time(&self, y: f64) -> f64 {
        if y <= 0.0 || self.length == 0.0 {
            return 0.0;
        }
        if y >= self.length {
            return self.total();
        }
        let k = self.cell_of(y);
        let a = k as f64 * self.cell;
        if y == a {
            return self.cumulative[k];
        }
        self.cumulative[k] + gauss_legendre8(|z| 1.0 / self.rate(z), a, y)
    }

    /// The `y` with `C(y) = t`, for `0 ≤ t ≤ total`. Newton inside the
    /// bracketing cell with a bisection fallback.
    pub fn level_at(&self, t: f64) -> f64 {
        if t <= 0.0 || self.length == 0.0 {
            return 0.0;
        }
        if t >= self.total() {
            return self.length;
        }
        let k = self.cumulative.partition_point(|&c| c <= t).saturating_sub(1).min(self.cumulative.len() - 2);
        let (mut lo, mut hi) = (k as f64 * self.cell, ((k + 1) as f64 * self.cell).min(self.length));
        let (c_lo, c_hi) = (self.cumulative[k], self.cumulative[k + 1]);
        let mut y = lo + (hi - lo) * (t - c_lo) / (c_hi - c_lo);
        let tiny = 4.0 * f64::EPSILON * self.length.max(1.0);
        for _ in 0..60 {
            let f = self.time(y) - t;
            if f > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let mut next = y - f * self.rate(y);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= tiny || hi - lo <= tiny {
                return next;
            }
            y = next;
        }
        y
    }
}

/// `∫_0^x dz / p(z)`: how long the flow `dy/dt = -p(y)` takes from `x` to `0`.
pub fn time_to_zero(cost: &crate::model::CostFunction, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain { what: "time to zero", x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let bad = std::cell::Cell::new(None);
    let t = adaptive(
        |z| {
            let p = cost.rate(z);
            if !(p > 0.0) {
                bad.set(Some((z, p)));
                return 0.0;
            }
            1.0 / p
        },
        0.0,
        x,
        1e-13,
    );
    match bad.get() {
        Some((x, value)) => Err(Error::NonPositiveRate { x, value }),
        None => Ok(t),
    }
}
