//! Dormand–Prince 5(4) with embedded error control.

use crate::error::{LabError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are the last row of A; these are the 4th-order ones.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub(crate) struct Dp45<F: Fn(f64, &[f64; 2]) -> [f64; 2]> {
    f: F,
    pub t: f64,
    pub y: [f64; 2],
    h: f64,
    rtol: f64,
    atol: f64,
}

impl<F: Fn(f64, &[f64; 2]) -> [f64; 2]> Dp45<F> {
    pub fn new(f: F, t0: f64, y0: [f64; 2], h0: f64, rtol: f64, atol: f64) -> Self {
        Self { f, t: t0, y: y0, h: h0, rtol, atol }
    }

    /// One accepted step, never past `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<()> {
        for _ in 0..200 {
            let h = self.h.min(t_stop - self.t);
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(LabError::Integration { r: self.t, reason: "step size underflow".into() });
            }
            let mut k = [[0.0; 2]; 7];
            k[0] = (self.f)(self.t, &self.y);
            for s in 1..7 {
                let mut ys = self.y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    ys[0] += h * A[s][j] * kj[0];
                    ys[1] += h * A[s][j] * kj[1];
                }
                k[s] = (self.f)(self.t + C[s] * h, &ys);
            }
            let mut y5 = self.y;
            let mut err: f64 = 0.0;
            for d in 0..2 {
                let (mut s5, mut s4) = (0.0, 0.0);
                for s in 0..7 {
                    let b5 = if s < 6 { A[6][s] } else { 0.0 };
                    s5 += b5 * k[s][d];
                    s4 += B4[s] * k[s][d];
                }
                y5[d] += h * s5;
                let scale = self.atol + self.rtol * self.y[d].abs().max(y5[d].abs());
                err = err.max((h * (s5 - s4)).abs() / scale);
            }
            if !y5.iter().all(|v| v.is_finite()) {
                self.h = 0.25 * h;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t += h;
                self.y = y5;
                // Do not let a clipped final step shrink the next one.
                if h == self.h || factor < 1.0 {
                    self.h = h * factor;
                }
                return Ok(());
            }
            self.h = h * factor;
        }
        Err(LabError::Integration { r: self.t, reason: "too many rejected steps".into() })
    }

    /// Advance exactly to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end {
            self.step(t_end)?;
        }
        self.t = t_end;
        Ok(())
    }
}
