//! The geodesic Radon transform `I_g(V)`, its chart gradient, the Hamiltonian
//! flow it generates, critical geodesics and caustics of invariant tori.
//!
//! Hamiltonian fields use `Ω = dp ∧ dq`, i.e. `X_H = (∂_p H, −∂_q H)` in chart
//! components `(θ, φ, p_θ, p_φ)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::{self, TrackPoint};
use crate::geometry::{
    self, canonical_normal, check_phase_point, covector_norm, wrap_angle, PhasePoint, ZollSurface, PERIOD,
};
use crate::ode::Dopri5;
use crate::potential::Potential;

/// Default number of quadrature samples per orbit.
pub const DEFAULT_SAMPLES: usize = 256;
/// Default finite-difference step of [`radon_grad`].
pub const DEFAULT_GRAD_STEP: f64 = 1e-4;
/// Orbit tolerance used inside finite differences, where integrator noise is
/// amplified by `1/h`.
const GRAD_ORBIT_TOL: f64 = 1e-13;

/// Something that can be averaged along orbits.
pub trait Observable: Sync {
    fn eval(&self, surface: &ZollSurface, point: &TrackPoint) -> Result<f64>;
}

impl Observable for Potential {
    fn eval(&self, _surface: &ZollSurface, point: &TrackPoint) -> Result<f64> {
        Ok(Potential::eval(self, point.position))
    }
}

/// The phase-space function `ρ ↦ I_g(V)(ρ)`.
pub struct RadonOf<'a, O: Observable> {
    pub inner: &'a O,
    pub samples: usize,
}

impl<O: Observable> Observable for RadonOf<'_, O> {
    fn eval(&self, surface: &ZollSurface, point: &TrackPoint) -> Result<f64> {
        radon(surface, self.inner, &point.phase_point()?, self.samples)
    }
}

fn orbit_average<O: Observable>(surface: &ZollSurface, v: &O, rho: &PhasePoint, n: usize, tol: f64) -> Result<f64> {
    let g = geodesic::trajectory_with_tol(surface, rho, n, tol)?;
    let mut acc = 0.0;
    for p in &g.samples {
        acc += v.eval(surface, p)?;
    }
    // Trapezoid on periodic samples: the plain mean.
    Ok(acc / n as f64)
}

/// `I_g(V)(ρ) = (‖ξ‖/l) ∫₀^{l/‖ξ‖} V(π φ^τ ρ) dτ` on `n` samples.
pub fn radon<O: Observable>(surface: &ZollSurface, v: &O, rho: &PhasePoint, n: usize) -> Result<f64> {
    orbit_average(surface, v, rho, n, geodesic::DEFAULT_TOL)
}

/// `|I_g(V)(x, λξ) − I_g(V)(x, ξ)|`.
pub fn radon_homogeneity_defect<O: Observable>(surface: &ZollSurface, v: &O, rho: &PhasePoint, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("scale factor must be positive, got {lambda}")));
    }
    let a = radon(surface, v, rho, DEFAULT_SAMPLES)?;
    let b = radon(surface, v, &rho.scale_covector(lambda), DEFAULT_SAMPLES)?;
    Ok((a - b).abs())
}

/// Chart gradient `(∂_θ, ∂_φ, ∂_{p_θ}, ∂_{p_φ}) I_g(V)` by central differences
/// at steps `h` and `h/2`, combined by one Richardson step.
pub fn radon_grad<O: Observable>(surface: &ZollSurface, v: &O, rho: &PhasePoint, h: f64) -> Result<[f64; 4]> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    check_phase_point(surface, rho)?;
    let base = rho.to_array();
    let eval = |j: usize, delta: f64| -> Result<f64> {
        let mut y = base;
        y[j] += delta;
        orbit_average(surface, v, &PhasePoint::from_array(y), DEFAULT_SAMPLES, GRAD_ORBIT_TOL)
    };
    let mut g = [0.0; 4];
    for (j, gj) in g.iter_mut().enumerate() {
        let d1 = (eval(j, h)? - eval(j, -h)?) / (2.0 * h);
        let d2 = (eval(j, 0.5 * h)? - eval(j, -0.5 * h)?) / h;
        *gj = (4.0 * d2 - d1) / 3.0;
    }
    Ok(g)
}

/// Hamiltonian field of `I_g(V)` at `rho`.
pub fn effective_field<O: Observable>(surface: &ZollSurface, v: &O, rho: &PhasePoint) -> Result<[f64; 4]> {
    let g = radon_grad(surface, v, rho, DEFAULT_GRAD_STEP)?;
    Ok([g[2], g[3], -g[0], -g[1]])
}

/// `φ_V^t(ρ₀)`, the flow of [`effective_field`].
pub fn effective_flow<O: Observable>(surface: &ZollSurface, v: &O, rho0: &PhasePoint, t: f64, tol: f64) -> Result<PhasePoint> {
    Ok(effective_flow_samples(surface, v, rho0, &[t], tol)?[0])
}

/// The effective flow at each of the monotone times `times` (all of one sign).
pub fn effective_flow_samples<O: Observable>(
    surface: &ZollSurface,
    v: &O,
    rho0: &PhasePoint,
    times: &[f64],
    tol: f64,
) -> Result<Vec<PhasePoint>> {
    check_phase_point(surface, rho0)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    // The field is evaluated through fallible orbit integrations; the first
    // failure is latched and reported after the integrator returns.
    let failure = std::sync::Mutex::new(None::<Error>);
    let f = |_t: f64, y: &[f64; 4]| -> [f64; 4] {
        match effective_field(surface, v, &PhasePoint::from_array(*y)) {
            Ok(x) => x,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                [f64::NAN; 4]
            }
        }
    };
    let out = Dopri5::with_tol(tol).integrate_to_times(&f, 0.0, rho0.to_array(), times);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(out?.states.into_iter().map(PhasePoint::from_array).collect())
}

/// Unit normal `x × ẋ / |ẋ|` of the great circle through `rho` (round sphere only).
pub fn geodesic_normal_chart(surface: &ZollSurface, rho: &PhasePoint) -> Result<[f64; 3]> {
    if !surface.is_canonical() {
        return Err(Error::Unsupported("geodesic normals are defined on the round sphere only".into()));
    }
    check_phase_point(surface, rho)?;
    Ok(canonical_normal(rho))
}

/// A unit covector on the round sphere whose geodesic has normal `n`.
pub fn phase_point_for_normal(n: [f64; 3]) -> Result<PhasePoint> {
    let len = geometry::norm3(n);
    if !(len > 0.0) {
        return Err(Error::Domain("normal must be nonzero".into()));
    }
    let n = [n[0] / len, n[1] / len, n[2] / len];
    // Base point: the circle's crossing of the equator (or any point of the
    // equator when the circle is the equator itself).
    let horiz = (n[0] * n[0] + n[1] * n[1]).sqrt();
    let x = if horiz < 1e-12 { [1.0, 0.0, 0.0] } else { [n[1] / horiz, -n[0] / horiz, 0.0] };
    let p = geometry::cross(n, x);
    let theta = (x[0] * x[0] + x[1] * x[1]).sqrt().atan2(x[2]);
    let phi = x[1].atan2(x[0]);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let e_theta = [ct * cp, ct * sp, -st];
    let e_phi = [-sp, cp, 0.0];
    Ok(PhasePoint::new(theta, phi, geometry::dot(p, e_theta), st * geometry::dot(p, e_phi)))
}

/// A critical-geodesic candidate found by [`critical_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCandidate {
    /// Equator crossing `(β, γ)` of the orbit; see [`PhasePoint::equator_crossing`].
    pub crossing: (f64, f64),
    pub rho: PhasePoint,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CriticalScan {
    /// `‖d I_g(V)‖` vanishes on the whole grid: `C(V) = M`.
    Degenerate { max_residual: f64 },
    Candidates(Vec<CriticalCandidate>),
}

fn grad_norm<O: Observable>(surface: &ZollSurface, v: &O, beta: f64, gamma: f64) -> Result<f64> {
    let rho = PhasePoint::equator_crossing(beta, gamma);
    let g = radon_grad(surface, v, &rho, DEFAULT_GRAD_STEP)?;
    Ok(g.iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Scans orbits by their equator crossing `(β, γ)` on a `(2r) × (r + 1)` grid
/// and returns refined local minima of `‖d I_g(V)‖` below `10·(π/r)²`.
pub fn critical_scan<O: Observable>(surface: &ZollSurface, v: &O, resolution: usize) -> Result<CriticalScan> {
    if resolution < 16 {
        return Err(Error::Domain(format!("scan resolution must be at least 16, got {resolution}")));
    }
    let r = resolution;
    let spacing = std::f64::consts::PI / r as f64;
    let threshold = 10.0 * spacing * spacing;
    let nb = 2 * r;
    let ng = r + 1;
    let cells: Vec<(usize, usize)> = (0..ng).flat_map(|i| (0..nb).map(move |j| (i, j))).collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| grad_norm(surface, v, spacing * j as f64, spacing * i as f64))
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize| values[i * nb + j];
    let max_residual = values.iter().copied().fold(0.0, f64::max);
    if max_residual < threshold * 1e-3 {
        return Ok(CriticalScan::Degenerate { max_residual });
    }

    let mut seeds = Vec::new();
    for &(i, j) in &cells {
        let v0 = at(i, j);
        if v0 >= threshold {
            continue;
        }
        let mut is_min = true;
        for di in [-1i64, 0, 1] {
            for dj in [-1i64, 0, 1] {
                let ii = i as i64 + di;
                if (di == 0 && dj == 0) || ii < 0 || ii >= ng as i64 {
                    continue;
                }
                let jj = (j as i64 + dj).rem_euclid(nb as i64) as usize;
                if at(ii as usize, jj) < v0 {
                    is_min = false;
                }
            }
        }
        if is_min {
            seeds.push((spacing * j as f64, spacing * i as f64, v0));
        }
    }

    let refined: Vec<(f64, f64, f64)> = seeds
        .par_iter()
        .map(|&(b, g, v0)| refine(surface, v, b, g, v0, spacing))
        .collect::<Result<_>>()?;

    let mut out: Vec<CriticalCandidate> = Vec::new();
    for (beta, gamma, residual) in refined {
        if residual >= threshold {
            continue;
        }
        let rho = PhasePoint::equator_crossing(beta, gamma);
        let duplicate = out.iter().any(|c| same_orbit(surface, &c.rho, &rho, 0.5 * spacing));
        if !duplicate {
            out.push(CriticalCandidate { crossing: (beta, gamma), rho, residual });
        }
    }
    Ok(CriticalScan::Candidates(out))
}

fn same_orbit(surface: &ZollSurface, a: &PhasePoint, b: &PhasePoint, tol: f64) -> bool {
    if surface.is_canonical() {
        let (na, nb) = (canonical_normal(a), canonical_normal(b));
        let d = [na[0] - nb[0], na[1] - nb[1], na[2] - nb[2]];
        return geometry::norm3(d) < tol;
    }
    // Equatorial orbits share the crossing angle but not the crossing point.
    let equatorial = |p: &PhasePoint| p.p_theta.abs() < 1e-12;
    if equatorial(a) && equatorial(b) {
        return a.p_phi.signum() == b.p_phi.signum();
    }
    wrap_angle(a.phi - b.phi).abs() < tol && (a.p_theta - b.p_theta).abs() < tol && (a.p_phi - b.p_phi).abs() < tol
}

/// On Tannery surfaces, crossings within this `|cos γ|` of a meridian are
/// moved onto it: nearly-meridian orbits enter the pole margin, and so do the
/// finite-difference stencils of [`radon_grad`] around them.
const MERIDIAN_SNAP: f64 = 10.0 * DEFAULT_GRAD_STEP;

fn snap_meridian(surface: &ZollSurface, gamma: f64) -> f64 {
    let half = std::f64::consts::FRAC_PI_2;
    if !surface.is_canonical() && gamma.cos().abs() < MERIDIAN_SNAP {
        half
    } else {
        gamma
    }
}

/// Coordinate descent on `(β, γ)` with halving steps, at most 50 sweeps.
fn refine<O: Observable>(surface: &ZollSurface, v: &O, beta: f64, gamma: f64, v0: f64, spacing: f64) -> Result<(f64, f64, f64)> {
    let (mut b, mut g, mut best) = (beta, gamma, v0);
    let mut step = 0.5 * spacing;
    for _ in 0..50 {
        let mut moved = false;
        for (db, dg) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (nb, ng) = (b + db, snap_meridian(surface, (g + dg).clamp(0.0, std::f64::consts::PI)));
            let val = grad_norm(surface, v, nb, ng)?;
            if val < best {
                (b, g, best) = (nb, ng, val);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
            if step < 1e-6 * spacing {
                break;
            }
        }
    }
    Ok((b.rem_euclid(2.0 * std::f64::consts::PI), g, best))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CausticScan {
    /// `F ≡ 0` along the orbit: the orbit lies in `Crit(I_g(V))` and is invariant.
    InsideCritical { max_abs: f64 },
    /// Flow times in `[0, l/‖ξ‖)` where the projected effective field is tangent to the orbit.
    Zeros(Vec<f64>),
}

/// `F(s) = ξ^⊥(dπ X_{I_g(V)})` at `φ^s(ρ₀)`.
pub fn caustic_pairing<O: Observable>(surface: &ZollSurface, v: &O, rho0: &PhasePoint, s: f64) -> Result<f64> {
    let rho = geodesic::flow(surface, rho0, s, 1e-12)?;
    let x = effective_field(surface, v, &rho)?;
    let (pt, pp) = geometry::perp(surface, &rho)?;
    Ok(pt * x[0] + pp * x[1])
}

/// Zeros of [`caustic_pairing`] over one period, bracketed on `grid` points and
/// bisected to `1e−8`.
pub fn caustic_scan<O: Observable>(surface: &ZollSurface, v: &O, rho0: &PhasePoint, grid: usize) -> Result<CausticScan> {
    if grid < 8 {
        return Err(Error::Domain(format!("caustic grid needs at least 8 points, got {grid}")));
    }
    check_phase_point(surface, rho0)?;
    let period = PERIOD / covector_norm(surface, rho0);
    let times: Vec<f64> = (0..grid).map(|k| period * k as f64 / grid as f64).collect();
    let values: Vec<f64> = times
        .par_iter()
        .map(|&s| caustic_pairing(surface, v, rho0, s))
        .collect::<Result<_>>()?;
    let max_abs = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = covector_norm(surface, rho0);
    if max_abs < 1e-7 * scale * scale {
        return Ok(CausticScan::InsideCritical { max_abs });
    }
    let mut zeros = Vec::new();
    for k in 0..grid {
        let (a, fa) = (times[k], values[k]);
        let (b, fb) = if k + 1 < grid { (times[k + 1], values[k + 1]) } else { (period, values[0]) };
        if fa == 0.0 {
            zeros.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            zeros.push(bisect(surface, v, rho0, a, b, fa)?.rem_euclid(period));
        }
    }
    Ok(CausticScan::Zeros(zeros))
}

fn bisect<O: Observable>(surface: &ZollSurface, v: &O, rho0: &PhasePoint, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while b - a > 1e-8 {
        let m = 0.5 * (a + b);
        let fm = caustic_pairing(surface, v, rho0, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            (a, fa) = (m, fm);
        }
    }
    Ok(0.5 * (a + b))
}
