//! Structural-invariant suite run by `zoll verify` and by the acceptance tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::evolve::{self, EvolutionPlan, Propagator, TimeScale};
use crate::geodesic::{self, chart_distance, closure_defect, flow, DEFAULT_TOL};
use crate::geometry::{hamiltonian_p0, PhasePoint, ZollSurface};
use crate::potential::Potential;
use crate::radon::{self, effective_flow, radon_homogeneity_defect, DEFAULT_SAMPLES};
use crate::spectral::basis::{HarmonicBasis, HarmonicState};
use crate::spectral::operator::{hamiltonian_matrix, quantum_average};
use crate::zelditch;

/// A unit covector with base point away from the poles and uniformly random direction.
pub fn random_unit_covector(surface: &ZollSurface, rng: &mut impl Rng) -> PhasePoint {
    let theta = rng.gen_range(0.2..std::f64::consts::PI - 0.2);
    let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let alpha: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let stretch = 1.0 + surface.sigma(theta.cos());
    PhasePoint::new(theta, phi, stretch * alpha.cos(), theta.sin() * alpha.sin())
}

/// A random unit vector in R³.
pub fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let a: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let r = (1.0 - z * z).sqrt();
    [r * a.cos(), r * a.sin(), z]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// Measured defect (`NaN` when the check itself failed to run).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl CheckOutcome {
    fn from_result(name: &'static str, tolerance: f64, r: Result<f64>) -> Self {
        match r {
            Ok(value) => Self { name, value, tolerance, passed: value <= tolerance, detail: None },
            Err(e) => Self { name, value: f64::NAN, tolerance, passed: false, detail: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random initial conditions per geodesic check.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 7, samples: 12 }
    }
}

/// Integrator tolerance for effective-flow checks.
const EFFECTIVE_TOL: f64 = 1e-9;

fn surfaces() -> Result<Vec<ZollSurface>> {
    Ok(vec![ZollSurface::CanonicalSphere, ZollSurface::tannery_cubic(0.1)?, ZollSurface::tannery_cubic(0.3)?])
}

fn max_over<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64> + Sync + Send) -> Result<f64> {
    let vals: Vec<f64> = items.par_iter().map(f).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

fn random_cases(opts: &VerifyOptions, salt: u64) -> Result<Vec<(ZollSurface, PhasePoint)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut out = Vec::new();
    for s in surfaces()? {
        for _ in 0..opts.samples {
            let rho = random_unit_covector(&s, &mut rng);
            out.push((s.clone(), rho));
        }
    }
    Ok(out)
}

/// Runs every check; individual failures are reported, not returned as errors.
pub fn run_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut push = |name, tol, r| out.push(CheckOutcome::from_result(name, tol, r));

    // Geodesic flow.
    push("geodesic.energy_conservation", 1.0, energy_conservation(opts));
    push("geodesic.clairaut_conservation", 1.0, clairaut_conservation(opts));
    push("geodesic.flow_group_law", 2.0 * DEFAULT_TOL, flow_group_law(opts));
    push(
        "geodesic.zoll_closure",
        1e-6,
        random_cases(opts, 1).and_then(|c| max_over(&c, |(s, rho)| closure_defect(s, rho))),
    );

    // Radon transform and effective flow.
    push("radon.flow_invariance", 1e-9, radon_flow_invariance(opts));
    push("radon.zero_homogeneity", 1e-9, radon_homogeneity(opts));
    push("radon.odd_vanishes", 1e-10, radon_odd(opts));
    push("radon.energy_along_effective_flow", 10.0 * EFFECTIVE_TOL, effective_energy(opts));
    push("radon.commuting_flows", 10.0 * EFFECTIVE_TOL, commuting_flows(opts));

    // Jacobi fields and q0.
    push("zelditch.wronskian", 1e-8, wronskian(opts));
    push("zelditch.q0_flow_invariance", 1e-6, q0_invariance(opts));

    // Harmonic analysis and operators.
    push("spectral.parseval", 1e-11, parseval(opts));
    push("spectral.round_trip", 1e-11, round_trip(opts));
    push("spectral.discrete_orthonormality", 1e-12, orthonormality());
    push("spectral.hermiticity", 1e-12, hermiticity());
    push("spectral.eigen_residual", 1e-9, eigen_residual());
    push("spectral.averaging_commutes", 1e-12, averaging_commutes());
    push("spectral.averaging_idempotent", 0.0, averaging_idempotent());

    // Evolution.
    push("evolve.unitarity", 1e-9, unitarity(opts));
    push("evolve.group_law", 1e-8, group_law(opts));
    push("evolve.density_mass", 1e-9, density_mass(opts));
    push("evolve.echo_bound", 1e-12, echo_bound(opts));
    out
}

/// `max |E(φ^s ρ) − E(ρ)| / (tol·(1+|s|))` over random ρ and `s ∈ [−4π, 4π]`.
fn energy_conservation(opts: &VerifyOptions) -> Result<f64> {
    let cases = random_cases(opts, 2)?;
    let times = [-4.0 * std::f64::consts::PI, -2.3, 1.1, 3.9, 4.0 * std::f64::consts::PI];
    max_over(&cases, |(s, rho)| {
        let e0 = hamiltonian_p0(s, rho);
        let mut worst = 0.0f64;
        for &t in &times {
            let e = hamiltonian_p0(s, &flow(s, rho, t, DEFAULT_TOL)?);
            worst = worst.max((e - e0).abs() / (DEFAULT_TOL * (1.0 + t.abs())));
        }
        Ok(worst)
    })
}

fn clairaut_conservation(opts: &VerifyOptions) -> Result<f64> {
    let cases = random_cases(opts, 3)?;
    let times = [-2.0 * std::f64::consts::PI, 0.9, 5.5];
    max_over(&cases, |(s, rho)| {
        let mut worst = 0.0f64;
        for &t in &times {
            let end = flow(s, rho, t, DEFAULT_TOL)?;
            worst = worst.max((end.p_phi - rho.p_phi).abs() / (DEFAULT_TOL * (1.0 + t.abs())));
        }
        Ok(worst)
    })
}

fn flow_group_law(opts: &VerifyOptions) -> Result<f64> {
    let cases = random_cases(opts, 4)?;
    max_over(&cases, |(s, rho)| {
        let (s1, s2) = (0.8, 1.9);
        let a = flow(s, &flow(s, rho, s1, DEFAULT_TOL)?, s2, DEFAULT_TOL)?;
        let b = flow(s, rho, s1 + s2, DEFAULT_TOL)?;
        Ok(chart_distance(&a, &b))
    })
}

fn test_potential() -> Result<Potential> {
    Potential::parse_polynomial("x3^2 + 0.4*x1*x2 - 0.3*x1^2*x3^2")
}

fn radon_flow_invariance(opts: &VerifyOptions) -> Result<f64> {
    let v = test_potential()?;
    let cases = random_cases(opts, 5)?;
    max_over(&cases, |(s, rho)| {
        let base = radon::radon(s, &v, rho, DEFAULT_SAMPLES)?;
        let mut worst = 0.0f64;
        for t in [0.3, 1.7, std::f64::consts::PI] {
            let moved = radon::radon(s, &v, &flow(s, rho, t, DEFAULT_TOL)?, DEFAULT_SAMPLES)?;
            worst = worst.max((moved - base).abs());
        }
        Ok(worst)
    })
}

fn radon_homogeneity(opts: &VerifyOptions) -> Result<f64> {
    let v = test_potential()?;
    let cases = random_cases(opts, 6)?;
    max_over(&cases, |(s, rho)| {
        let mut worst = 0.0f64;
        for lambda in [0.5, 2.0, 10.0] {
            worst = worst.max(radon_homogeneity_defect(s, &v, rho, lambda)?);
        }
        Ok(worst)
    })
}

fn radon_odd(opts: &VerifyOptions) -> Result<f64> {
    let v = Potential::parse_polynomial("x3 + 0.5*x1*x2*x3 - 2*x2^3")?;
    let cases: Vec<_> = random_cases(opts, 7)?.into_iter().filter(|(s, _)| s.is_canonical()).collect();
    max_over(&cases, |(s, rho)| Ok(radon::radon(s, &v, rho, DEFAULT_SAMPLES)?.abs()))
}

fn effective_cases(opts: &VerifyOptions, salt: u64) -> Result<Vec<(ZollSurface, PhasePoint)>> {
    // The effective field costs eight orbit quadratures per evaluation; a few
    // initial conditions per surface suffice.
    let small = VerifyOptions { samples: opts.samples.min(3), ..*opts };
    random_cases(&small, salt)
}

fn effective_energy(opts: &VerifyOptions) -> Result<f64> {
    let v = test_potential()?;
    let cases = effective_cases(opts, 8)?;
    max_over(&cases, |(s, rho)| {
        let end = effective_flow(s, &v, rho, 0.6, EFFECTIVE_TOL)?;
        Ok((hamiltonian_p0(s, &end) - hamiltonian_p0(s, rho)).abs())
    })
}

fn commuting_flows(opts: &VerifyOptions) -> Result<f64> {
    let v = test_potential()?;
    let cases = effective_cases(opts, 9)?;
    max_over(&cases, |(s, rho)| {
        let (t, sg) = (0.4, 1.3);
        let a = flow(s, &effective_flow(s, &v, rho, t, EFFECTIVE_TOL)?, sg, DEFAULT_TOL)?;
        let b = effective_flow(s, &v, &flow(s, rho, sg, DEFAULT_TOL)?, t, EFFECTIVE_TOL)?;
        Ok(chart_distance(&a, &b))
    })
}

fn wronskian(opts: &VerifyOptions) -> Result<f64> {
    let cases = random_cases(opts, 10)?;
    max_over(&cases, |(s, rho)| Ok(zelditch::jacobi_solve(s, rho, 512)?.wronskian_defect()))
}

fn q0_invariance(opts: &VerifyOptions) -> Result<f64> {
    let cases: Vec<_> = random_cases(opts, 11)?.into_iter().take(opts.samples.max(1) * 3).step_by(2).collect();
    max_over(&cases, |(s, rho)| {
        let base = zelditch::q0(s, rho)?;
        let mut worst = 0.0f64;
        for t in [0.7, 2.1] {
            worst = worst.max((zelditch::q0(s, &geodesic::flow(s, rho, t, DEFAULT_TOL)?)? - base).abs());
        }
        Ok(worst)
    })
}

fn random_state(lmax: usize, rng: &mut impl Rng) -> Result<HarmonicState> {
    let mut s = HarmonicState::zeros(lmax);
    for c in &mut s.coeffs {
        *c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    s.normalized()
}

fn parseval(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 12);
    let b = HarmonicBasis::new(24)?;
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let u = random_state(24, &mut rng)?;
        let g = b.synthesize(&u)?;
        let mass = b.grid().integrate(&g.values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        worst = worst.max((mass - u.norm().powi(2)).abs());
    }
    Ok(worst)
}

fn round_trip(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 13);
    let b = HarmonicBasis::new(24)?;
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let u = random_state(24, &mut rng)?;
        let back = b.analyze(&b.synthesize(&u)?)?;
        worst = worst.max(back.coeffs.iter().zip(&u.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn orthonormality() -> Result<f64> {
    let b = HarmonicBasis::new(12)?;
    let samples: Vec<_> = (0..b.dim())
        .map(|i| {
            let (l, m) = crate::spectral::legendre::degree_order(i);
            b.synthesize(&HarmonicState::basis_vector(12, l, m))
        })
        .collect::<Result<_>>()?;
    let g = b.grid();
    let mut worst = 0.0f64;
    for i in 0..samples.len() {
        for j in i..samples.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..g.n_theta() {
                let w = g.area_weight(a);
                for k in a * g.n_phi..(a + 1) * g.n_phi {
                    acc += samples[i].values[k].conj() * samples[j].values[k] * w;
                }
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    Ok(worst)
}

fn hermiticity() -> Result<f64> {
    let b = HarmonicBasis::new(20)?;
    let h = hamiltonian_matrix(&b, 0.05, 0.2, &test_potential()?)?;
    Ok(h.hermiticity_defect())
}

/// Largest eigen-residual relative to `‖H‖_F`.
fn eigen_residual() -> Result<f64> {
    let b = HarmonicBasis::new(16)?;
    let h = hamiltonian_matrix(&b, 0.06, 0.25, &test_potential()?)?;
    let e = h.eig()?;
    Ok(e.max_residual(&h)? / h.frobenius())
}

fn free_diag(l: usize) -> f64 {
    0.5 * (l * (l + 1)) as f64
}

fn averaging_commutes() -> Result<f64> {
    let b = HarmonicBasis::new(20)?;
    let avg = quantum_average(&b, &test_potential()?)?;
    Ok(avg.commutator_with_diagonal(free_diag) / avg.frobenius())
}

fn averaging_idempotent() -> Result<f64> {
    let b = HarmonicBasis::new(12)?;
    let avg = quantum_average(&b, &test_potential()?)?;
    let twice = avg.cluster_projection();
    Ok(twice.combine(1.0, &avg, -1.0)?.max_abs())
}

fn evolve_setup(opts: &VerifyOptions) -> Result<(Propagator, HarmonicState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 14);
    let l = 8;
    let hbar = crate::spectral::band::cluster_hbar(l)?;
    let p = Propagator::new(2 * l + 6, hbar, hbar.sqrt(), &test_potential()?)?;
    let u = evolve::geodesic_state(&p.basis, random_direction(&mut rng), l)?;
    Ok((p, u))
}

fn unitarity(opts: &VerifyOptions) -> Result<f64> {
    let (p, u) = evolve_setup(opts)?;
    let mut worst = 0.0f64;
    for t in [0.5, 13.0, 170.0] {
        worst = worst.max((p.evolve(&u, t)?.norm() - 1.0).abs());
    }
    Ok(worst)
}

fn group_law(opts: &VerifyOptions) -> Result<f64> {
    let (p, u) = evolve_setup(opts)?;
    let a = p.evolve(&p.evolve(&u, 3.3)?, 11.2)?;
    let b = p.evolve(&u, 14.5)?;
    Ok(a.combine(Complex64::new(1.0, 0.0), &b, Complex64::new(-1.0, 0.0))?.norm())
}

fn density_mass(opts: &VerifyOptions) -> Result<f64> {
    let (p, u) = evolve_setup(opts)?;
    let db = evolve::density_basis(p.basis.lmax())?;
    let mut worst = 0.0f64;
    for t in [0.0, 40.0] {
        let rho = evolve::position_density(&db, &p.evolve(&u, t)?)?;
        worst = worst.max((rho.total_mass() - 1.0).abs());
    }
    Ok(worst)
}

/// `max(|F| − 1, |F(0) − 1|)` for a random geodesic superposition.
fn echo_bound(opts: &VerifyOptions) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 15);
    let l = 8;
    let mut plan = EvolutionPlan::echo(l)?;
    plan.lmax = 2 * l + 6;
    plan.times = evolve::linspace(0.0, 2.0 * std::f64::consts::PI, 17);
    debug_assert_eq!(plan.time_scale, TimeScale::HbarOverEpsSquared);
    let basis = HarmonicBasis::new(plan.lmax)?;
    let u = evolve::geodesic_superposition(&basis, random_direction(&mut rng), random_direction(&mut rng), l)?;
    let f = evolve::loschmidt(&plan, &test_potential()?, &u, l)?;
    let over = f.values.iter().map(|z| z.norm() - 1.0).fold(0.0, f64::max);
    Ok(over.max((f.values[0] - 1.0).norm()))
}
