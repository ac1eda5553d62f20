//! Adaptive Dormand–Prince 5(4) integrator with first-same-as-last stages.

use crate::error::{Error, Result};

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
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 1_000_000;

/// States at the requested output times plus the number of attempted steps.
#[derive(Debug, Clone)]
pub struct Samples<const N: usize> {
    pub states: Vec<[f64; N]>,
    pub steps: usize,
}

/// Tolerances and limits for one integration.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self::with_tol(1e-10)
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        let c = h * coef;
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

impl Dopri5 {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    pub fn integrate<const N: usize, F>(&self, f: &F, t0: f64, y0: [f64; N], t1: f64) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut out = self.integrate_to_times(f, t0, y0, &[t1])?;
        Ok(out.states.pop().unwrap())
    }

    /// Integrates and reports the state at each of `times`, which must be
    /// monotone in the direction of integration starting from `t0`.
    pub fn integrate_to_times<const N: usize, F>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; N],
        times: &[f64],
    ) -> Result<Samples<N>>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut out = Vec::with_capacity(times.len());
        let Some(&last) = times.last() else {
            return Ok(Samples { states: out, steps: 0 });
        };
        let dir = if last >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let span = (last - t0).abs().max(1e-300);
        let mut h = self.initial_step(f, t, &y, &k1, span);
        let mut steps = 0usize;

        for &target in times {
            if (target - t) * dir < 0.0 {
                return Err(Error::Domain("output times must be monotone".into()));
            }
            while (target - t) * dir > 0.0 {
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::Integration(format!("exceeded {MAX_STEPS} steps at t = {t}")));
                }
                let remaining = (target - t).abs();
                let mut hs = h.min(remaining);
                let hit = hs >= remaining * (1.0 - 1e-12);
                if hit {
                    hs = remaining;
                }
                let hh = dir * hs;
                let (y_new, k7, err) = self.step(f, t, &y, &k1, hh);
                if !err.is_finite() {
                    h = hs * 0.2;
                } else if err <= 1.0 {
                    t = if hit { target } else { t + hh };
                    y = y_new;
                    k1 = k7;
                    if y.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Integration(format!("non-finite state at t = {t}")));
                    }
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // Do not let a short final hop shrink the step used afterwards.
                    h = if hit { h.max(hs * fac) } else { hs * fac };
                } else {
                    h = hs * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                }
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
            }
            out.push(y);
        }
        Ok(Samples { states: out, steps })
    }

    fn initial_step<const N: usize, F>(&self, f: &F, t: f64, y: &[f64; N], k1: &[f64; N], span: f64) -> f64
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let scale = |i: usize| self.atol + self.rtol * y[i].abs();
        let d0 = (0..N).map(|i| (y[i] / scale(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
        let d1 = (0..N).map(|i| (k1[i] / scale(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(y, h0, &[(1.0, k1)]);
        let k2 = f(t + h0, &y1);
        let d2 = (0..N).map(|i| ((k2[i] - k1[i]) / scale(i)).powi(2)).sum::<f64>().sqrt()
            / (N as f64).sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    fn step<const N: usize, F>(&self, f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);
        let mut acc = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        (y_new, k7, (acc / N as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y = Dopri5::with_tol(1e-12).integrate(&f, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let y = Dopri5::with_tol(1e-12).integrate(&f, 1.0, [1.0f64.exp()], 0.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn dense_times_match_single_runs() {
        let f = |t: f64, y: &[f64; 1]| [t.cos() * y[0]];
        let ode = Dopri5::with_tol(1e-12);
        let times: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
        let ys = ode.integrate_to_times(&f, 0.0, [1.0], &times).unwrap().states;
        for (t, y) in times.iter().zip(ys) {
            assert!((y[0] - t.sin().exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let f = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        assert!(matches!(Dopri5::default().integrate(&f, 0.0, [1.0], 2.0), Err(Error::Integration(_))));
    }
}
