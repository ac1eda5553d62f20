//! Jacobi fields along closed unit-speed geodesics and Zelditch's invariant
//!
//! `q₀ = (1/8π) ∫₀^{2π} K dt + (1/24π) ∫₀^{2π} 𝒦 f̃² R dt`,
//! `R(t) = f̃(t) ∫₀^t 𝒦 f³ − 3 f(t) ∫₀^t f̃ 𝒦 f²`,
//!
//! where `f̃, f` solve `y'' + K y = 0` with data `(1, 0)` and `(0, 1)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geodesic::{self, TrackPoint};
use crate::geometry::{check_phase_point, hamiltonian_p0, normalize_unit, PhasePoint, ZollSurface, PERIOD};

/// Default number of Jacobi steps per period.
pub const DEFAULT_STEPS: usize = 2048;
/// Orbit tolerance for the curvature samples.
const ORBIT_TOL: f64 = 1e-12;

/// The two normalized Jacobi solutions on `t_k = 2πk/N`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSolution {
    pub t: Vec<f64>,
    pub f_tilde: Vec<f64>,
    pub f_tilde_prime: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
}

impl JacobiSolution {
    /// `max_k |f̃ f' − f̃' f − 1|`.
    pub fn wronskian_defect(&self) -> f64 {
        (0..self.t.len())
            .map(|k| (self.f_tilde[k] * self.f_prime[k] - self.f_tilde_prime[k] * self.f[k] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }
}

fn require_unit(surface: &ZollSurface, rho0: &PhasePoint) -> Result<()> {
    check_phase_point(surface, rho0)?;
    let e = hamiltonian_p0(surface, rho0);
    if (e - 0.5).abs() > 1e-9 {
        return Err(Error::Domain(format!("expected a unit covector (p0 = 1/2), got p0 = {e}")));
    }
    Ok(())
}

/// Orbit samples at the half-step grid `t = πk/N`, `k = 0..=2N`.
fn half_step_track(surface: &ZollSurface, rho0: &PhasePoint, n: usize) -> Result<Vec<TrackPoint>> {
    let times: Vec<f64> = (0..=2 * n).map(|k| PERIOD * k as f64 / (2 * n) as f64).collect();
    geodesic::track(surface, rho0, &times, ORBIT_TOL)
}

/// Classical RK4 on `(y, y')` with `K` sampled at the step ends and midpoint.
fn integrate_jacobi(curv: &[f64], n: usize) -> JacobiSolution {
    let h = PERIOD / n as f64;
    let solve = |y0: f64, d0: f64| {
        let mut y = vec![y0; n + 1];
        let mut d = vec![d0; n + 1];
        for k in 0..n {
            let (k0, km, k1) = (curv[2 * k], curv[2 * k + 1], curv[2 * k + 2]);
            let (y_, d_) = (y[k], d[k]);
            let (a1, b1) = (d_, -k0 * y_);
            let (a2, b2) = (d_ + 0.5 * h * b1, -km * (y_ + 0.5 * h * a1));
            let (a3, b3) = (d_ + 0.5 * h * b2, -km * (y_ + 0.5 * h * a2));
            let (a4, b4) = (d_ + h * b3, -k1 * (y_ + h * a3));
            y[k + 1] = y_ + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            d[k + 1] = d_ + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        (y, d)
    };
    let (f_tilde, f_tilde_prime) = solve(1.0, 0.0);
    let (f, f_prime) = solve(0.0, 1.0);
    JacobiSolution { t: (0..=n).map(|k| h * k as f64).collect(), f_tilde, f_tilde_prime, f, f_prime }
}

/// Both Jacobi solutions along the geodesic of the unit covector `rho0`.
pub fn jacobi_solve(surface: &ZollSurface, rho0: &PhasePoint, n: usize) -> Result<JacobiSolution> {
    if n < 64 {
        return Err(Error::Domain(format!("Jacobi grid needs at least 64 steps, got {n}")));
    }
    require_unit(surface, rho0)?;
    let track = half_step_track(surface, rho0, n)?;
    let curv: Vec<f64> = track.iter().map(|p| p.curvature(surface)).collect();
    Ok(integrate_jacobi(&curv, n))
}

/// Cumulative trapezoid `∫₀^{t_k} g` on a uniform grid.
fn cumulative_trapezoid(g: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for k in 1..g.len() {
        out[k] = out[k - 1] + 0.5 * h * (g[k - 1] + g[k]);
    }
    out
}

fn trapezoid(g: &[f64], h: f64) -> f64 {
    let n = g.len() - 1;
    h * (0.5 * g[0] + g[1..n].iter().sum::<f64>() + 0.5 * g[n])
}

fn r_from_samples(jac: &JacobiSolution, pairing: &[f64]) -> Vec<f64> {
    let h = PERIOD / jac.steps() as f64;
    let (ft, f) = (&jac.f_tilde, &jac.f);
    let a: Vec<f64> = (0..ft.len()).map(|k| pairing[k] * f[k].powi(3)).collect();
    let b: Vec<f64> = (0..ft.len()).map(|k| ft[k] * pairing[k] * f[k] * f[k]).collect();
    let (ca, cb) = (cumulative_trapezoid(&a, h), cumulative_trapezoid(&b, h));
    (0..ft.len()).map(|k| ft[k] * ca[k] - 3.0 * f[k] * cb[k]).collect()
}

/// `R(t)` on the grid of `jacobi`.
pub fn r_factor(surface: &ZollSurface, rho0: &PhasePoint, jacobi: &JacobiSolution) -> Result<Vec<f64>> {
    require_unit(surface, rho0)?;
    let n = jacobi.steps();
    if n < 1 || jacobi.f.len() != n + 1 || jacobi.f_tilde.len() != n + 1 {
        return Err(Error::GridMismatch("Jacobi solution arrays have inconsistent lengths".into()));
    }
    let times: Vec<f64> = (0..=n).map(|k| PERIOD * k as f64 / n as f64).collect();
    let track = geodesic::track(surface, rho0, &times, ORBIT_TOL)?;
    let pairing: Vec<f64> = track.iter().map(|p| p.curvature_pairing(surface)).collect();
    Ok(r_from_samples(jacobi, &pairing))
}

/// Zelditch's `q₀` at `rho0`; the covector is rescaled to unit length first.
pub fn q0(surface: &ZollSurface, rho0: &PhasePoint) -> Result<f64> {
    q0_with_steps(surface, rho0, DEFAULT_STEPS)
}

pub fn q0_with_steps(surface: &ZollSurface, rho0: &PhasePoint, n: usize) -> Result<f64> {
    if n < 64 {
        return Err(Error::Domain(format!("Jacobi grid needs at least 64 steps, got {n}")));
    }
    let rho = normalize_unit(surface, rho0)?;
    let track = half_step_track(surface, &rho, n)?;
    let curv: Vec<f64> = track.iter().map(|p| p.curvature(surface)).collect();
    let jac = integrate_jacobi(&curv, n);
    let pairing: Vec<f64> = track.iter().step_by(2).map(|p| p.curvature_pairing(surface)).collect();
    let r = r_from_samples(&jac, &pairing);
    let h = PERIOD / n as f64;
    let k_grid: Vec<f64> = curv.iter().step_by(2).copied().collect();
    let second: Vec<f64> = (0..=n).map(|k| pairing[k] * jac.f_tilde[k] * jac.f_tilde[k] * r[k]).collect();
    Ok(trapezoid(&k_grid, h) / (8.0 * PI) + trapezoid(&second, h) / (24.0 * PI))
}
