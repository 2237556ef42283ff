//! Explicit Runge–Kutta integrators for small fixed-size systems.

use crate::error::{Error, Result};

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize>(f: &impl Fn(f64, &[f64; N]) -> [f64; N], x: f64, y: &[f64; N], h: f64) -> [f64; N] {
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(x + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(x + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Error-control settings for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 1_000_000 }
    }
}

/// Dormand–Prince 5(4) with a persistent step-size guess, so that a caller can
/// march through output nodes without restarting the controller each time.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerance,
    h: f64,
    pub steps: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    pub fn new(tol: Tolerance, initial_step: f64) -> Self {
        Self { tol, h: initial_step.abs().max(1e-12), steps: 0, rejected: 0 }
    }

    /// Advances `y` from `x0` to exactly `x1`.
    pub fn advance<const N: usize>(
        &mut self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        x0: f64,
        y: &mut [f64; N],
        x1: f64,
    ) -> Result<()> {
        let mut x = x0;
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut k1 = f(x, y);
        loop {
            let remaining = x1 - x;
            if remaining * dir <= 1e-14 * span.abs() {
                return Ok(());
            }
            let last = self.h >= remaining.abs();
            let h = if last { remaining } else { self.h * dir };
            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            let stage = |coef: &[(usize, f64)], k: &[[f64; N]; 7]| {
                let mut out = *y;
                for &(j, a) in coef {
                    for i in 0..N {
                        out[i] += h * a * k[j][i];
                    }
                }
                out
            };
            k[1] = f(x + C2 * h, &stage(&[(0, A21)], &k));
            k[2] = f(x + C3 * h, &stage(&[(0, A31), (1, A32)], &k));
            k[3] = f(x + C4 * h, &stage(&[(0, A41), (1, A42), (2, A43)], &k));
            k[4] = f(x + C5 * h, &stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k));
            k[5] = f(x + h, &stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k));
            let ynew = stage(&[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k);
            k[6] = f(x + h, &ynew);
            let mut err = 0.0_f64;
            for i in 0..N {
                let e = h
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(ynew[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                return Err(Error::Integration { x, reason: "non-finite error estimate".into() });
            }
            self.steps += 1;
            if self.steps > self.tol.max_steps {
                return Err(Error::Integration { x, reason: "step budget exhausted".into() });
            }
            if err <= 1.0 {
                x = if last { x1 } else { x + h };
                *y = ynew;
                k1 = k[6];
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    self.h = h.abs() * grow;
                } else {
                    self.h = self.h.max(h.abs() * grow.min(1.0));
                }
            } else {
                self.rejected += 1;
                self.h = h.abs() * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if self.h < 1e-14 * (1.0 + x.abs()) {
                    return Err(Error::Integration { x, reason: "step size underflow".into() });
                }
            }
        }
    }
}
