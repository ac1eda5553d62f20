//! Schrödinger evolution under `P_ε(ħ) = −ħ²Δ/2 + ε²V` on the round sphere,
//! geodesic-localized states, position-density diagnostics, transport along
//! the effective flow and the Loschmidt echo.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ZollSurface;
use crate::potential::Potential;
use crate::radon::{effective_flow_samples, geodesic_normal_chart, phase_point_for_normal};
use crate::spectral::band::cluster_hbar;
use crate::spectral::basis::{GridSamples, HarmonicBasis, HarmonicState};
use crate::spectral::eigen::{jacobi_eigen, CMatrix};
use crate::spectral::legendre::{flat_index, legendre_table, spherical_harmonics, tri_index};
use crate::spectral::operator::{hamiltonian_matrix, Eigensystem, OperatorMatrix};
use crate::spectral::quadrature::legendre_polynomials;

/// Largest weight allowed in the top two shells of an evolved state.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// Tube half-widths scale with the coherent width `√ħ` of a geodesic state.
pub const TUBE_WIDTH_FACTOR: f64 = 1.5;

/// `TUBE_WIDTH_FACTOR · √ħ`.
pub fn semiclassical_tube_width(hbar: f64) -> f64 {
    TUBE_WIDTH_FACTOR * hbar.sqrt()
}

/// How physical time relates to scaled time: `T = t·τ_ħ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "value", rename_all = "snake_case")]
pub enum TimeScale {
    /// `τ = ε⁻²`
    InverseEpsSquared,
    /// `τ = ħ/ε²`
    HbarOverEpsSquared,
    /// `τ = c·ε⁻²`
    ScaledInverseEpsSquared(f64),
    /// `τ = value`
    Fixed(f64),
}

impl TimeScale {
    pub fn tau(&self, hbar: f64, eps: f64) -> Result<f64> {
        let need_eps = || {
            if eps > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("time scale {self:?} needs eps > 0")))
            }
        };
        let tau = match *self {
            TimeScale::InverseEpsSquared => {
                need_eps()?;
                1.0 / (eps * eps)
            }
            TimeScale::HbarOverEpsSquared => {
                need_eps()?;
                hbar / (eps * eps)
            }
            TimeScale::ScaledInverseEpsSquared(c) => {
                need_eps()?;
                c / (eps * eps)
            }
            TimeScale::Fixed(v) => v,
        };
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!("time scale must be positive and finite, got {tau}")));
        }
        Ok(tau)
    }
}

/// Parameters shared by the evolution experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionPlan {
    pub hbar: f64,
    pub eps: f64,
    pub time_scale: TimeScale,
    /// Scaled times `t`.
    pub times: Vec<f64>,
    pub lmax: usize,
}

/// `n` evenly spaced samples on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl EvolutionPlan {
    /// Transport defaults at cluster `l`: `ħ = ħ_l`, `ε = ħ^{1/2}`, `τ = ε⁻²`,
    /// 33 samples on `[0, 1]`, `L_max = 2l + 10`.
    pub fn transport(l: usize) -> Result<Self> {
        let hbar = cluster_hbar(l)?;
        Ok(Self {
            hbar,
            eps: hbar.sqrt(),
            time_scale: TimeScale::InverseEpsSquared,
            times: linspace(0.0, 1.0, 33),
            lmax: crate::spectral::band::default_lmax(l),
        })
    }

    /// Echo defaults at cluster `l`: `ε = ħ^{0.7}`, `τ = ħ/ε²`, 65 samples on `[0, 2π]`.
    pub fn echo(l: usize) -> Result<Self> {
        let hbar = cluster_hbar(l)?;
        Ok(Self {
            hbar,
            eps: hbar.powf(0.7),
            time_scale: TimeScale::HbarOverEpsSquared,
            times: linspace(0.0, 2.0 * std::f64::consts::PI, 65),
            lmax: crate::spectral::band::default_lmax(l),
        })
    }

    pub fn tau(&self) -> Result<f64> {
        self.time_scale.tau(self.hbar, self.eps)
    }

    /// Checks parameters for an initial state in cluster `l`.
    pub fn validate(&self, l: usize) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Domain(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be non-negative, got {}", self.eps)));
        }
        if self.lmax < 2 * l {
            return Err(Error::Domain(format!("lmax {} is below twice the cluster {l}", self.lmax)));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("sample times must be finite".into()));
        }
        self.tau().map(|_| ())
    }

    /// As [`validate`](Self::validate), and additionally requires `ε < √ħ`
    /// when `τ = ħ/ε²`; the echo limit only holds for `ε ≪ √ħ`.
    pub fn validate_echo(&self, l: usize) -> Result<()> {
        if self.eps == 0.0 {
            // Both branches coincide; any finite τ will do.
            self.validate_free(l)
        } else {
            self.validate(l)?;
            if self.time_scale == TimeScale::HbarOverEpsSquared && self.eps >= self.hbar.sqrt() {
                return Err(Error::Domain(format!(
                    "echo scaling needs eps < sqrt(hbar), got eps = {} with hbar = {}",
                    self.eps, self.hbar
                )));
            }
            Ok(())
        }
    }

    fn validate_free(&self, l: usize) -> Result<()> {
        let relaxed = EvolutionPlan { eps: 0.0, time_scale: self.fallback_scale(), ..self.clone() };
        relaxed.validate(l)
    }

    fn fallback_scale(&self) -> TimeScale {
        match self.time_scale {
            TimeScale::Fixed(v) => TimeScale::Fixed(v),
            _ => TimeScale::Fixed(1.0),
        }
    }

    fn physical_times(&self) -> Result<Vec<f64>> {
        let tau = if self.eps == 0.0 { self.fallback_scale().tau(self.hbar, 0.0)? } else { self.tau()? };
        Ok(self.times.iter().map(|t| t * tau).collect())
    }
}

/// `e^{−iTH/ħ}·state`.
pub fn propagate(eig: &Eigensystem, hbar: f64, state: &HarmonicState, t_phys: f64) -> Result<HarmonicState> {
    if !(hbar > 0.0) {
        return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
    }
    if t_phys == 0.0 {
        return Ok(state.clone());
    }
    eig.apply_function(state, |lam| Complex64::from_polar(1.0, -t_phys * lam / hbar))
}

/// Combined weight of the two highest shells.
pub fn truncation_leakage(state: &HarmonicState) -> f64 {
    let w = state.shell_weights();
    w.iter().rev().take(2).sum()
}

fn rotation_from_e3(n: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(len > 0.0) {
        return Err(Error::Domain("normal must be nonzero".into()));
    }
    let n = [n[0] / len, n[1] / len, n[2] / len];
    if n[2] < -1.0 + 1e-12 {
        // Half turn about e1.
        return Ok([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
    }
    // Rodrigues for the rotation taking e3 to n about e3 × n.
    let (kx, ky) = (-n[1], n[0]);
    let c = n[2];
    let f = 1.0 / (1.0 + c);
    Ok([
        [c + kx * kx * f, kx * ky * f, ky],
        [kx * ky * f, c + ky * ky * f, -kx],
        [-ky, kx, c],
    ])
}

/// The highest-weight state `Y_l^l` rotated so that it concentrates on the
/// great circle with unit normal `n` (and rotates positively about `n`).
pub fn geodesic_state(basis: &HarmonicBasis, n: [f64; 3], l: usize) -> Result<HarmonicState> {
    if l > basis.lmax() {
        return Err(Error::Domain(format!("cluster {l} exceeds lmax {}", basis.lmax())));
    }
    let r = rotation_from_e3(n)?;
    // Y_l^l(x) = N_l (x₁ + i x₂)^l; evaluate at Rᵀx on the grid and analyze.
    let norm_l = legendre_table(l, 0.0, 1.0)[tri_index(l, l)];
    let g = basis.grid();
    let values: Vec<Complex64> = (0..g.n_theta())
        .flat_map(|i| (0..g.n_phi).map(move |j| (i, j)))
        .map(|(i, j)| {
            let x = g.point(i, j);
            let xr = [
                r[0][0] * x[0] + r[1][0] * x[1] + r[2][0] * x[2],
                r[0][1] * x[0] + r[1][1] * x[1] + r[2][1] * x[2],
            ];
            norm_l * Complex64::new(xr[0], xr[1]).powu(l as u32)
        })
        .collect();
    let samples = GridSamples { n_theta: g.n_theta(), n_phi: g.n_phi, values };
    let mut state = basis.analyze(&samples)?;
    // Rotation keeps the degree; drop quadrature rounding in other shells.
    for ll in (0..=basis.lmax()).filter(|&ll| ll != l) {
        for m in -(ll as i64)..=ll as i64 {
            state.coeffs[flat_index(ll, m)] = Complex64::new(0.0, 0.0);
        }
    }
    state.normalized()
}

/// `|u|²` stored as real-function harmonic coefficients up to `2·lmax`,
/// together with its samples on the doubled grid.
#[derive(Debug, Clone)]
pub struct PositionDensity {
    pub coeffs: HarmonicState,
    pub samples: Vec<f64>,
    basis: HarmonicBasis,
}

/// Basis able to represent densities of states up to `lmax` exactly.
pub fn density_basis(lmax: usize) -> Result<HarmonicBasis> {
    HarmonicBasis::new(2 * lmax)
}

/// Position density of `state` (which lives on `lmax ≤ dbasis.lmax()/2`).
pub fn position_density(dbasis: &HarmonicBasis, state: &HarmonicState) -> Result<PositionDensity> {
    if 2 * state.lmax > dbasis.lmax() {
        return Err(Error::GridMismatch(format!(
            "density basis lmax {} cannot hold |u|² for state lmax {}",
            dbasis.lmax(),
            state.lmax
        )));
    }
    let mut padded = HarmonicState::zeros(dbasis.lmax());
    padded.coeffs[..state.coeffs.len()].copy_from_slice(&state.coeffs);
    let u = dbasis.synthesize(&padded)?;
    let samples: Vec<f64> = u.values.iter().map(|z| z.norm_sqr()).collect();
    let real = GridSamples {
        n_theta: u.n_theta,
        n_phi: u.n_phi,
        values: samples.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    };
    let coeffs = dbasis.analyze(&real)?;
    Ok(PositionDensity { coeffs, samples, basis: dbasis.clone() })
}

impl PositionDensity {
    pub fn total_mass(&self) -> f64 {
        self.basis.grid().integrate(&self.samples)
    }

    pub fn grid(&self) -> &crate::spectral::basis::Grid {
        self.basis.grid()
    }

    /// `∫ x_i x_j ρ dΩ`.
    pub fn second_moments(&self) -> [[f64; 3]; 3] {
        let g = self.basis.grid();
        let mut m = [[0.0; 3]; 3];
        for i in 0..g.n_theta() {
            let w = g.area_weight(i);
            for j in 0..g.n_phi {
                let x = g.point(i, j);
                let rho = self.samples[i * g.n_phi + j] * w;
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] += x[a] * x[b] * rho;
                    }
                }
            }
        }
        m
    }
}

/// Mass of `density` within angular distance `w` of the great circle with
/// normal `n`, via the Funk–Hecke eigenvalues of the band indicator.
pub fn tube_mass(density: &PositionDensity, n: [f64; 3], w: f64) -> Result<f64> {
    if !(w > 0.0 && w < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!("tube half-width must lie in (0, π/2), got {w}")));
    }
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(len > 0.0) {
        return Err(Error::Domain("normal must be nonzero".into()));
    }
    let kmax = density.coeffs.lmax;
    let a = w.sin();
    // λ_k = 2π ∫_{−a}^{a} P_k, with ∫P_k = (P_{k+1} − P_{k−1})/(2k+1).
    let p = legendre_polynomials(kmax + 1, a);
    let lambda: Vec<f64> = (0..=kmax)
        .map(|k| {
            if k == 0 {
                4.0 * std::f64::consts::PI * a
            } else if k % 2 == 1 {
                0.0
            } else {
                2.0 * 2.0 * std::f64::consts::PI * (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64
            }
        })
        .collect();
    let theta = (n[0] * n[0] + n[1] * n[1]).sqrt().atan2(n[2]);
    let phi = n[1].atan2(n[0]);
    let y = spherical_harmonics(kmax, theta, phi);
    let mut mass = Complex64::new(0.0, 0.0);
    for k in (0..=kmax).step_by(2) {
        for m in -(k as i64)..=k as i64 {
            let idx = flat_index(k, m);
            mass += lambda[k] * density.coeffs.coeffs[idx] * y[idx];
        }
    }
    Ok(mass.re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleFit {
    /// Normal of the dominant great circle, hemisphere-normalized, and the
    /// smallest second moment `∫(n·x)²ρ`.
    Normal { n: [f64; 3], moment: f64 },
    /// The two smallest moments are too close to single out a circle.
    NoDominantCircle,
}

/// Relative separation of the two smallest moments below which the fit is
/// reported as [`CircleFit::NoDominantCircle`].
pub const CIRCLE_FIT_RTOL: f64 = 1e-6;

fn hemisphere(n: [f64; 3]) -> [f64; 3] {
    let key = if n[2].abs() > 1e-12 {
        n[2]
    } else if n[1].abs() > 1e-12 {
        n[1]
    } else {
        n[0]
    };
    if key < 0.0 {
        [-n[0], -n[1], -n[2]]
    } else {
        n
    }
}

/// Minimizer of `∫ (n·x)² ρ` over unit `n`.
pub fn circle_fit(density: &PositionDensity) -> Result<CircleFit> {
    let m = density.second_moments();
    let cm = CMatrix::from_fn(3, 3, |i, j| Complex64::new(m[i][j], 0.0));
    let e = jacobi_eigen(&cm)?;
    let trace = m[0][0] + m[1][1] + m[2][2];
    if e.values[1] - e.values[0] < CIRCLE_FIT_RTOL * trace.abs().max(f64::MIN_POSITIVE) {
        return Ok(CircleFit::NoDominantCircle);
    }
    // Real symmetric input: strip the common phase of the eigenvector.
    let v = [e.vectors[(0, 0)], e.vectors[(1, 0)], e.vectors[(2, 0)]];
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    let phase = pivot.conj() / pivot.norm();
    let n = [(v[0] * phase).re, (v[1] * phase).re, (v[2] * phase).re];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    Ok(CircleFit::Normal { n: hemisphere([n[0] / len, n[1] / len, n[2] / len]), moment: e.values[0] })
}

/// Angle between the lines spanned by two unit normals.
pub fn axis_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs().min(1.0);
    let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt().atan2(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportRow {
    pub t: f64,
    pub fitted: [f64; 3],
    pub predicted: [f64; 3],
    pub angle_error: f64,
    /// Mass within the tube around the predicted circle.
    pub tube_mass: f64,
    /// Mass within the tube around the initial circle.
    pub initial_tube_mass: f64,
    pub norm: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportReport {
    pub l: usize,
    pub tube_width: f64,
    pub rows: Vec<TransportRow>,
}

impl TransportReport {
    pub fn max_angle_error(&self) -> f64 {
        self.rows.iter().map(|r| r.angle_error).fold(0.0, f64::max)
    }

    pub fn min_tube_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.tube_mass).fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal time average of the initial-circle tube mass.
    pub fn mean_initial_tube_mass(&self) -> f64 {
        time_average(&self.rows.iter().map(|r| (r.t, r.initial_tube_mass)).collect::<Vec<_>>())
    }
}

fn time_average(samples: &[(f64, f64)]) -> f64 {
    if samples.len() < 2 {
        return samples.first().map(|s| s.1).unwrap_or(f64::NAN);
    }
    let span = samples[samples.len() - 1].0 - samples[0].0;
    let area: f64 = samples.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    area / span
}

/// Spectral data reused across experiments with the same `(ħ, ε, V, L_max)`.
pub struct Propagator {
    pub basis: HarmonicBasis,
    pub hamiltonian: OperatorMatrix,
    pub eig: Eigensystem,
    pub hbar: f64,
}

impl Propagator {
    pub fn new(lmax: usize, hbar: f64, eps: f64, v: &Potential) -> Result<Self> {
        let basis = HarmonicBasis::new(lmax)?;
        let hamiltonian = hamiltonian_matrix(&basis, hbar, eps, v)?;
        let eig = hamiltonian.eig()?;
        Ok(Self { basis, hamiltonian, eig, hbar })
    }

    pub fn evolve(&self, state: &HarmonicState, t_phys: f64) -> Result<HarmonicState> {
        propagate(&self.eig, self.hbar, state, t_phys)
    }
}

/// Evolves `geodesic_state(n0, l)` under `P_ε(ħ)` and compares the fitted
/// concentration circle with the effective-flow prediction.
pub fn transport_experiment(plan: &EvolutionPlan, v: &Potential, n0: [f64; 3], l: usize, tube_width: f64) -> Result<TransportReport> {
    plan.validate(l)?;
    let prop = Propagator::new(plan.lmax, plan.hbar, plan.eps, v)?;
    let u0 = geodesic_state(&prop.basis, n0, l)?;
    let dbasis = density_basis(plan.lmax)?;
    let sphere = ZollSurface::CanonicalSphere;
    let rho0 = phase_point_for_normal(n0)?;
    let n0_unit = geodesic_normal_chart(&sphere, &rho0)?;

    let predicted = predicted_normals(v, &rho0, &plan.times)?;
    let physical = plan.physical_times()?;

    let rows: Vec<TransportRow> = plan
        .times
        .par_iter()
        .zip(physical.par_iter())
        .zip(predicted.par_iter())
        .map(|((&t, &tp), &pred)| {
            let u = prop.evolve(&u0, tp)?;
            let leakage = truncation_leakage(&u);
            if leakage > TRUNCATION_TOL {
                return Err(Error::Domain(format!("truncation leakage {leakage:.3e} at t = {t}; raise lmax")));
            }
            let rho = position_density(&dbasis, &u)?;
            let fitted = match circle_fit(&rho)? {
                CircleFit::Normal { n, .. } => n,
                CircleFit::NoDominantCircle => [f64::NAN; 3],
            };
            Ok(TransportRow {
                t,
                fitted,
                predicted: pred,
                angle_error: axis_angle(fitted, pred),
                tube_mass: tube_mass(&rho, pred, tube_width)?,
                initial_tube_mass: tube_mass(&rho, n0_unit, tube_width)?,
                norm: u.norm(),
                leakage,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TransportReport { l, tube_width, rows })
}

/// Normals `φ_V^t(Γ₀)` from the effective flow, at arbitrary (possibly
/// unsorted, mixed-sign) scaled times.
fn predicted_normals(v: &Potential, rho0: &crate::geometry::PhasePoint, times: &[f64]) -> Result<Vec<[f64; 3]>> {
    let sphere = ZollSurface::CanonicalSphere;
    let mut out = vec![[0.0; 3]; times.len()];
    for sign in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] * sign > 0.0).collect();
        idx.sort_by(|&a, &b| (times[a] * sign).total_cmp(&(times[b] * sign)));
        if idx.is_empty() {
            continue;
        }
        let ts: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let states = effective_flow_samples(&sphere, v, rho0, &ts, 1e-10)?;
        for (&i, s) in idx.iter().zip(&states) {
            out[i] = geodesic_normal_chart(&sphere, s)?;
        }
    }
    let n0 = geodesic_normal_chart(&sphere, rho0)?;
    for (i, &t) in times.iter().enumerate() {
        if t == 0.0 {
            out[i] = n0;
        }
    }
    Ok(out)
}

/// Echo samples `F(t) = ⟨v_ε(tτ), v₀(tτ)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoSeries {
    pub plan: EvolutionPlan,
    pub values: Vec<Complex64>,
    /// Largest top-shell leakage seen in either branch.
    pub leakage: f64,
}

impl EchoSeries {
    pub fn times(&self) -> &[f64] {
        &self.plan.times
    }
}

/// Loschmidt echo of `state` between `P_ε(ħ)` and `P_0(ħ)`.
pub fn loschmidt(plan: &EvolutionPlan, v: &Potential, state: &HarmonicState, l: usize) -> Result<EchoSeries> {
    plan.validate_echo(l)?;
    if state.lmax != plan.lmax {
        return Err(Error::GridMismatch(format!("state lmax {} vs plan lmax {}", state.lmax, plan.lmax)));
    }
    let free = Propagator::new(plan.lmax, plan.hbar, 0.0, v)?;
    let perturbed = if plan.eps == 0.0 { None } else { Some(Propagator::new(plan.lmax, plan.hbar, plan.eps, v)?) };
    let physical = plan.physical_times()?;
    // Dividing by ‖u‖² makes F(0) = 1 exactly rather than to rounding.
    let norm_sq = state.norm().powi(2);
    let pairs: Vec<(Complex64, f64)> = physical
        .par_iter()
        .map(|&tp| {
            let v0 = free.evolve(state, tp)?;
            let ve = match &perturbed {
                Some(p) => p.evolve(state, tp)?,
                None => v0.clone(),
            };
            Ok((ve.inner(&v0) / norm_sq, truncation_leakage(&v0).max(truncation_leakage(&ve))))
        })
        .collect::<Result<_>>()?;
    let leakage = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    if leakage > TRUNCATION_TOL {
        return Err(Error::Domain(format!("truncation leakage {leakage:.3e}; raise lmax")));
    }
    Ok(EchoSeries { plan: plan.clone(), values: pairs.into_iter().map(|p| p.0).collect(), leakage })
}

/// Normalized equal superposition of two geodesic states.
pub fn geodesic_superposition(basis: &HarmonicBasis, n1: [f64; 3], n2: [f64; 3], l: usize) -> Result<HarmonicState> {
    let a = geodesic_state(basis, n1, l)?;
    let b = geodesic_state(basis, n2, l)?;
    let one = Complex64::new(1.0, 0.0);
    a.combine(one, &b, one)?.normalized()
}
