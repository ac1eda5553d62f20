//! Geodesic flow of `p₀ = ½‖ξ‖²`, uniform orbit sampling and the closure test.
//!
//! Three propagation routes share one interface:
//! * the round sphere is integrated in a cyclically permuted spherical chart
//!   whose polar axis is aligned with the orbit normal, so the whole great
//!   circle stays at least ~35° away from that chart's poles;
//! * Tannery geodesics with `p_φ ≠ 0` stay in the standard chart (Clairaut
//!   keeps them at `sin θ ≥ |p_φ|/‖ξ‖`);
//! * Tannery meridians (`p_φ = 0`) are integrated in the unfolded meridian
//!   coordinate `ψ`, which runs through both poles.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{
    self, canonical_normal, canonical_to_ambient, change_frame, check_phase_point, covector_norm,
    wrap_angle, Frame, PhasePoint, ZollSurface, PERIOD, POLE_MARGIN,
};
use crate::ode::Dopri5;

/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default number of samples per orbit.
pub const DEFAULT_SAMPLES: usize = 256;
/// Tolerance used when certifying closure.
const CLOSURE_TOL: f64 = 1e-12;

/// Representation of a point on a propagated orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Local {
    /// `(θ, φ, p_θ, p_φ)` in the chart `frame`.
    Chart { frame: Frame, state: [f64; 4] },
    /// Unfolded meridian coordinate of a Tannery surface.
    Meridian { phi0: f64, psi: f64, p_psi: f64 },
}

/// One sample of an orbit: arc-time `s`, ambient position on the unit sphere,
/// and the chart data it was computed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub s: f64,
    pub position: [f64; 3],
    pub(crate) local: Local,
}

impl TrackPoint {
    /// The sample in the standard chart. Fails inside the pole margin.
    pub fn phase_point(&self) -> Result<PhasePoint> {
        let state = match self.local {
            Local::Chart { frame, state } => change_frame(state, frame, Frame::STANDARD),
            Local::Meridian { phi0, psi, p_psi } => {
                let psi = wrap_angle(psi);
                if psi >= 0.0 {
                    [psi, phi0, p_psi, 0.0]
                } else {
                    [-psi, phi0 + PI, -p_psi, 0.0]
                }
            }
        };
        let rho = PhasePoint::from_array(state);
        geometry::check_chart(rho.theta)?;
        Ok(rho)
    }

    /// `p₀` at this sample, computed in whichever chart holds it.
    pub fn energy(&self, surface: &ZollSurface) -> f64 {
        match self.local {
            Local::Chart { state, .. } => geometry::hamiltonian_p0(surface, &PhasePoint::from_array(state)),
            Local::Meridian { psi, p_psi, .. } => {
                let d = 1.0 + surface.sigma(psi.cos());
                0.5 * p_psi * p_psi / (d * d)
            }
        }
    }

    /// Gaussian curvature at the base point. Defined through the poles.
    pub fn curvature(&self, surface: &ZollSurface) -> f64 {
        surface.curvature_at_c(self.position[2])
    }

    /// `𝒦 = g*(dK, ξ^⊥)` at this sample.
    pub fn curvature_pairing(&self, surface: &ZollSurface) -> f64 {
        match self.local {
            // Meridians run along dK, so dK ⟂ ξ^⊥ there.
            Local::Meridian { .. } => 0.0,
            Local::Chart { state, .. } => {
                if surface.is_canonical() {
                    0.0
                } else {
                    geometry::curvature_pairing_unchecked(surface, &PhasePoint::from_array(state))
                }
            }
        }
    }
}

/// Uniformly sampled closed orbit.
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub initial: PhasePoint,
    pub energy: f64,
    /// Length of one period in flow time, `l / ‖ξ‖`.
    pub period: f64,
    pub samples: Vec<TrackPoint>,
    pub steps: usize,
    pub tol: f64,
}

impl Geodesic {
    /// CSV rows `(s, θ, φ, p_θ, p_φ, E)`; samples inside the pole margin fail.
    pub fn rows(&self, surface: &ZollSurface) -> Result<Vec<[f64; 6]>> {
        self.samples
            .iter()
            .map(|p| {
                let r = p.phase_point()?;
                Ok([p.s, r.theta, r.phi, r.p_theta, r.p_phi, p.energy(surface)])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Plan {
    Chart { frame: Frame, state: [f64; 4] },
    Meridian { phi0: f64, psi: f64, p_psi: f64 },
}

fn plan(surface: &ZollSurface, rho0: &PhasePoint) -> Result<Plan> {
    check_phase_point(surface, rho0)?;
    match surface {
        ZollSurface::CanonicalSphere => {
            let frame = Frame::for_normal(canonical_normal(rho0));
            Ok(Plan::Chart { frame, state: change_frame(rho0.to_array(), Frame::STANDARD, frame) })
        }
        ZollSurface::Tannery(_) => {
            let norm = covector_norm(surface, rho0);
            let ratio = rho0.p_phi.abs() / norm;
            if ratio <= 1e-14 {
                return Ok(Plan::Meridian { phi0: rho0.phi, psi: rho0.theta, p_psi: rho0.p_theta });
            }
            if ratio.min(1.0).asin() < POLE_MARGIN {
                return Err(Error::Chart(format!(
                    "orbit with |p_phi|/|xi| = {ratio:e} passes inside the pole margin"
                )));
            }
            Ok(Plan::Chart { frame: Frame::STANDARD, state: rho0.to_array() })
        }
    }
}

/// Hamilton's equations of `p₀` in a spherical chart of `surface`.
fn chart_field(surface: &ZollSurface, y: &[f64; 4]) -> [f64; 4] {
    let [theta, _, pt, pp] = *y;
    let (s, c) = theta.sin_cos();
    let d = 1.0 + surface.sigma(c);
    let a = 1.0 / (d * d);
    let b = 1.0 / (s * s);
    let da = 2.0 * s * surface.sigma_prime(c) / (d * d * d);
    let db = -2.0 * c / (s * s * s);
    [a * pt, b * pp, -0.5 * (da * pt * pt + db * pp * pp), 0.0]
}

/// `X_{p₀}` at `rho` in standard chart components.
pub fn hamiltonian_field(surface: &ZollSurface, rho: &PhasePoint) -> Result<[f64; 4]> {
    check_phase_point(surface, rho)?;
    Ok(chart_field(surface, &rho.to_array()))
}

fn meridian_field(surface: &ZollSurface, y: &[f64; 2]) -> [f64; 2] {
    let [psi, p] = *y;
    let (s, c) = psi.sin_cos();
    let d = 1.0 + surface.sigma(c);
    [p / (d * d), -p * p * s * surface.sigma_prime(c) / (d * d * d)]
}

/// `tol` bounds the error per unit time; the step controller gets this
/// fraction of it so that errors accumulated over a few periods stay inside.
const STEP_TOL_FRACTION: f64 = 0.1;

fn propagate(surface: &ZollSurface, plan: Plan, times: &[f64], tol: f64) -> Result<(Vec<TrackPoint>, usize)> {
    let ode = Dopri5::with_tol(tol * STEP_TOL_FRACTION);
    match plan {
        Plan::Chart { frame, state } => {
            let f = |_t: f64, y: &[f64; 4]| chart_field(surface, y);
            let out = run_split(&ode, &f, state, times)?;
            let points = times
                .iter()
                .zip(&out.0)
                .map(|(&s, st)| {
                    let (x, _) = canonical_to_ambient(*st);
                    TrackPoint { s, position: frame.to_ambient(x), local: Local::Chart { frame, state: *st } }
                })
                .collect();
            Ok((points, out.1))
        }
        Plan::Meridian { phi0, psi, p_psi } => {
            let f = |_t: f64, y: &[f64; 2]| meridian_field(surface, y);
            let out = run_split(&ode, &f, [psi, p_psi], times)?;
            let (sp, cp) = phi0.sin_cos();
            let points = times
                .iter()
                .zip(&out.0)
                .map(|(&s, st)| {
                    let (sy, cy) = st[0].sin_cos();
                    TrackPoint {
                        s,
                        position: [sy * cp, sy * sp, cy],
                        local: Local::Meridian { phi0, psi: st[0], p_psi: st[1] },
                    }
                })
                .collect();
            Ok((points, out.1))
        }
    }
}

/// Integrates from time 0 to every requested time; negative times are
/// reached by a separate backward pass.
fn run_split<const N: usize, F>(ode: &Dopri5, f: &F, y0: [f64; N], times: &[f64]) -> Result<(Vec<[f64; N]>, usize)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
    let neg: Vec<usize> = order.iter().copied().filter(|&i| times[i] < 0.0).rev().collect();
    let pos: Vec<usize> = order.iter().copied().filter(|&i| times[i] >= 0.0).collect();
    let mut out = vec![y0; times.len()];
    let mut steps = 0;
    for group in [pos, neg] {
        if group.is_empty() {
            continue;
        }
        let ts: Vec<f64> = group.iter().map(|&i| times[i]).collect();
        let res = ode.integrate_to_times(f, 0.0, y0, &ts)?;
        steps += res.steps;
        for (k, &i) in group.iter().enumerate() {
            out[i] = res.states[k];
        }
    }
    Ok((out, steps))
}

/// Propagates `rho0` to each time in `times` (any order, any sign).
pub fn track(surface: &ZollSurface, rho0: &PhasePoint, times: &[f64], tol: f64) -> Result<Vec<TrackPoint>> {
    check_tol(tol)?;
    Ok(propagate(surface, plan(surface, rho0)?, times, tol)?.0)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// The geodesic flow `φ^s(ρ₀)`.
pub fn flow(surface: &ZollSurface, rho0: &PhasePoint, s: f64, tol: f64) -> Result<PhasePoint> {
    check_tol(tol)?;
    if s == 0.0 {
        check_phase_point(surface, rho0)?;
        return Ok(*rho0);
    }
    track(surface, rho0, &[s], tol)?[0].phase_point()
}

/// `n` equispaced samples over one period, starting at `rho0`.
pub fn trajectory(surface: &ZollSurface, rho0: &PhasePoint, n: usize) -> Result<Geodesic> {
    trajectory_with_tol(surface, rho0, n, DEFAULT_TOL)
}

pub fn trajectory_with_tol(surface: &ZollSurface, rho0: &PhasePoint, n: usize, tol: f64) -> Result<Geodesic> {
    if n < 16 {
        return Err(Error::Domain(format!("trajectory needs at least 16 samples, got {n}")));
    }
    check_tol(tol)?;
    let p = plan(surface, rho0)?;
    let energy = geometry::hamiltonian_p0(surface, rho0);
    let period = PERIOD / covector_norm(surface, rho0);
    let times: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
    let (samples, steps) = propagate(surface, p, &times, tol)?;
    Ok(Geodesic { initial: *rho0, energy, period, samples, steps, tol })
}

/// Chart distance between two phase points, longitude differences wrapped.
pub fn chart_distance(a: &PhasePoint, b: &PhasePoint) -> f64 {
    let d = [a.theta - b.theta, wrap_angle(a.phi - b.phi), a.p_theta - b.p_theta, a.p_phi - b.p_phi];
    d.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `|φ^{2π}(ρ₀) − ρ₀|` for a unit covector `ρ₀`.
pub fn closure_defect(surface: &ZollSurface, rho0: &PhasePoint) -> Result<f64> {
    check_phase_point(surface, rho0)?;
    let e = geometry::hamiltonian_p0(surface, rho0);
    if (e - 0.5).abs() > 1e-9 {
        return Err(Error::Domain(format!("closure_defect expects a unit covector, got p0 = {e}")));
    }
    let end = flow(surface, rho0, PERIOD, CLOSURE_TOL)?;
    Ok(chart_distance(&end, rho0))
}

/// Applies `dφ^s(ρ₀)` to `v0` by integrating the variational equations.
pub fn tangent_flow(surface: &ZollSurface, rho0: &PhasePoint, s: f64, v0: [f64; 4], tol: f64) -> Result<[f64; 4]> {
    check_tol(tol)?;
    let (frame, state) = match plan(surface, rho0)? {
        Plan::Chart { frame, state } => (frame, state),
        Plan::Meridian { .. } => {
            return Err(Error::Chart("tangent flow along a meridian through the poles".into()));
        }
    };
    let v = mat_vec(&frame_jacobian(rho0.to_array(), Frame::STANDARD, frame), v0);
    let mut y = [0.0; 8];
    y[..4].copy_from_slice(&state);
    y[4..].copy_from_slice(&v);
    let f = |_t: f64, y: &[f64; 8]| {
        let base = [y[0], y[1], y[2], y[3]];
        let fx = chart_field(surface, &base);
        let j = chart_field_jacobian(surface, &base);
        let dv = mat_vec(&j, [y[4], y[5], y[6], y[7]]);
        [fx[0], fx[1], fx[2], fx[3], dv[0], dv[1], dv[2], dv[3]]
    };
    let end = Dopri5::with_tol(tol).integrate(&f, 0.0, y, s)?;
    let base = [end[0], end[1], end[2], end[3]];
    geometry::check_chart(change_frame(base, frame, Frame::STANDARD)[0])?;
    Ok(mat_vec(&frame_jacobian(base, frame, Frame::STANDARD), [end[4], end[5], end[6], end[7]]))
}

fn mat_vec(m: &[[f64; 4]; 4], v: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (0..4).map(|j| m[i][j] * v[j]).sum();
    }
    out
}

/// Jacobian of the chart field; row `i` holds `∂F_i/∂(θ, φ, p_θ, p_φ)`.
fn chart_field_jacobian(surface: &ZollSurface, y: &[f64; 4]) -> [[f64; 4]; 4] {
    let [theta, _, pt, pp] = *y;
    let (s, c) = theta.sin_cos();
    let sig1 = surface.sigma_prime(c);
    let sig2 = surface.sigma_second(c);
    let d = 1.0 + surface.sigma(c);
    let a = 1.0 / (d * d);
    let b = 1.0 / (s * s);
    let da = 2.0 * s * sig1 / d.powi(3);
    let dda = 2.0 * c * sig1 / d.powi(3) - 2.0 * s * s * sig2 / d.powi(3) + 6.0 * s * s * sig1 * sig1 / d.powi(4);
    let db = -2.0 * c / s.powi(3);
    let ddb = 2.0 / (s * s) + 6.0 * c * c / s.powi(4);
    [
        [da * pt, 0.0, a, 0.0],
        [db * pp, 0.0, 0.0, b],
        [-0.5 * (dda * pt * pt + ddb * pp * pp), 0.0, -da * pt, -db * pp],
        [0.0; 4],
    ]
}

/// Derivative of the chart change `from → to` at `state`, by central differences.
fn frame_jacobian(state: [f64; 4], from: Frame, to: Frame) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    if from == to {
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        return m;
    }
    let h = 1e-6;
    for j in 0..4 {
        let eval = |delta: f64| {
            let mut st = state;
            st[j] += delta;
            change_frame(st, from, to)
        };
        let (p1, m1, p2, m2) = (eval(h), eval(-h), eval(2.0 * h), eval(-2.0 * h));
        for i in 0..4 {
            let diff = |a: f64, b: f64| if i == 1 { wrap_angle(a - b) } else { a - b };
            m[i][j] = (8.0 * diff(p1[i], m1[i]) - diff(p2[i], m2[i])) / (12.0 * h);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hamiltonian_p0, normalize_unit, RevolutionProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn tannery() -> ZollSurface {
        ZollSurface::tannery_cubic(0.3).unwrap()
    }

    fn random_unit(surface: &ZollSurface, rng: &mut ChaCha8Rng) -> PhasePoint {
        let theta = rng.gen_range(0.3..PI - 0.3);
        let phi = rng.gen_range(0.0..2.0 * PI);
        let a = rng.gen_range(0.0..2.0 * PI);
        normalize_unit(surface, &PhasePoint::new(theta, phi, a.cos(), a.sin())).unwrap()
    }

    #[test]
    fn equator_closes() {
        let s = ZollSurface::CanonicalSphere;
        let rho = PhasePoint::new(FRAC_PI_2, 0.0, 0.0, 1.0);
        let end = flow(&s, &rho, 2.0 * PI, DEFAULT_TOL).unwrap();
        assert!(chart_distance(&end, &rho) < 1e-9);
        assert_eq!(flow(&s, &rho, 0.0, DEFAULT_TOL).unwrap(), rho);
    }

    #[test]
    fn random_orbits_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for surface in [ZollSurface::CanonicalSphere, tannery()] {
            let bound = if surface.is_canonical() { 1e-9 } else { 1e-6 };
            for _ in 0..20 {
                let rho = random_unit(&surface, &mut rng);
                let d = closure_defect(&surface, &rho).unwrap();
                assert!(d < bound, "defect {d:e} for {rho:?}");
            }
        }
    }

    #[test]
    fn non_zoll_fixture_does_not_close() {
        let s = ZollSurface::Tannery(RevolutionProfile::non_zoll_fixture(&[0.0, 0.0, 0.3]).unwrap());
        let rho = normalize_unit(&s, &PhasePoint::new(1.0, 0.0, 0.6, 0.5)).unwrap();
        assert!(closure_defect(&s, &rho).unwrap() > 1e-3);
    }

    #[test]
    fn meridian_passes_the_poles() {
        let s = tannery();
        let rho = normalize_unit(&s, &PhasePoint::new(FRAC_PI_2, 0.4, 1.0, 0.0)).unwrap();
        assert!(closure_defect(&s, &rho).unwrap() < 1e-9);
        // After half a period the orbit has crossed a pole onto the opposite half-meridian.
        let half = flow(&s, &rho, PI, 1e-12).unwrap();
        assert!(wrap_angle(half.phi - rho.phi - PI).abs() < 1e-12);
        assert!((hamiltonian_p0(&s, &half) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn trajectory_samples_equator() {
        let s = ZollSurface::CanonicalSphere;
        let rho = PhasePoint::new(FRAC_PI_2, 0.0, 0.0, 1.0);
        let g = trajectory(&s, &rho, 16).unwrap();
        for (k, p) in g.samples.iter().enumerate() {
            let r = p.phase_point().unwrap();
            assert!(wrap_angle(r.phi - 2.0 * PI * k as f64 / 16.0).abs() < 1e-9);
            assert!((p.energy(&s) - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn decimation_is_consistent() {
        let s = tannery();
        let rho = normalize_unit(&s, &PhasePoint::new(1.0, 0.2, 0.3, 0.6)).unwrap();
        let a = trajectory(&s, &rho, 32).unwrap();
        let b = trajectory(&s, &rho, 64).unwrap();
        for k in 0..32 {
            let d = chart_distance(&a.samples[k].phase_point().unwrap(), &b.samples[2 * k].phase_point().unwrap());
            assert!(d < 1e-8, "sample {k}: {d:e}");
        }
    }

    #[test]
    fn conservation_and_group_property() {
        let s = tannery();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let rho = random_unit(&s, &mut rng);
            let (s1, s2) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let a = flow(&s, &flow(&s, &rho, s1, DEFAULT_TOL).unwrap(), s2, DEFAULT_TOL).unwrap();
            let b = flow(&s, &rho, s1 + s2, DEFAULT_TOL).unwrap();
            assert!(chart_distance(&a, &b) < 1e-8);
            assert!((hamiltonian_p0(&s, &b) - 0.5).abs() < 1e-10 * (1.0 + (s1 + s2).abs()));
            assert!((b.p_phi - rho.p_phi).abs() < 1e-10 * (1.0 + (s1 + s2).abs()));
        }
    }

    #[test]
    fn tangent_flow_matches_finite_differences() {
        for surface in [ZollSurface::CanonicalSphere, tannery()] {
            let rho = normalize_unit(&surface, &PhasePoint::new(1.1, 0.5, 0.4, 0.7)).unwrap();
            let t = 1.3;
            for j in 0..4 {
                let mut v = [0.0; 4];
                v[j] = 1.0;
                let got = tangent_flow(&surface, &rho, t, v, 1e-12).unwrap();
                let h = 1e-5;
                let mut a = rho.to_array();
                let mut b = rho.to_array();
                a[j] += h;
                b[j] -= h;
                let fa = flow(&surface, &PhasePoint::from_array(a), t, 1e-13).unwrap().to_array();
                let fb = flow(&surface, &PhasePoint::from_array(b), t, 1e-13).unwrap().to_array();
                for i in 0..4 {
                    let fd = if i == 1 { wrap_angle(fa[i] - fb[i]) } else { fa[i] - fb[i] } / (2.0 * h);
                    assert!((fd - got[i]).abs() < 1e-5, "dir {j} comp {i}: {fd} vs {}", got[i]);
                }
            }
        }
    }

    #[test]
    fn tangent_flow_carries_the_flow_direction() {
        let s = tannery();
        let rho = normalize_unit(&s, &PhasePoint::new(0.9, 0.0, -0.2, 0.5)).unwrap();
        let v0 = hamiltonian_field(&s, &rho).unwrap();
        let got = tangent_flow(&s, &rho, 2.0, v0, 1e-12).unwrap();
        let want = hamiltonian_field(&s, &flow(&s, &rho, 2.0, 1e-12).unwrap()).unwrap();
        for i in 0..4 {
            assert!((got[i] - want[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn round_sphere_tangent_flow_is_periodic_on_fixed_vectors() {
        let s = ZollSurface::CanonicalSphere;
        let rho = normalize_unit(&s, &PhasePoint::new(1.2, 0.1, 0.5, 0.3)).unwrap();
        // Tangent vectors to the unit cosphere bundle are fixed by dφ^{2π}.
        for v in [[0.0, 1.0, 0.0, 0.0], hamiltonian_field(&s, &rho).unwrap()] {
            let got = tangent_flow(&s, &rho, 2.0 * PI, v, 1e-12).unwrap();
            for i in 0..4 {
                assert!((got[i] - v[i]).abs() < 1e-7);
            }
        }
    }
}
