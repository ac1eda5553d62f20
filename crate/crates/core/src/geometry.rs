//! Metric data for the round sphere and the Tannery surfaces
//! `(1 + σ(cos θ))² dθ² + sin²θ dφ²` in the spherical chart `(θ, φ)`.
//!
//! Covectors are written in chart components `(p_θ, p_φ)`. The fiber rotation
//! `ξ ↦ ξ^⊥` is the positive quarter turn for the area form
//! `(1 + σ(cos θ)) sin θ dθ ∧ dφ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance to the chart poles `θ ∈ {0, π}` below which chart operations fail.
pub const POLE_MARGIN: f64 = 1e-6;

/// Number of Chebyshev points used to certify `1 + σ > 0`.
const ADMISSIBILITY_SAMPLES: usize = 2049;

/// The profile `σ` of a surface of revolution, as a polynomial in `c = cos θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RevolutionProfile {
    /// `coeffs[k]` multiplies `c^k`.
    coeffs: Vec<f64>,
}

impl RevolutionProfile {
    /// Builds `σ(c) = Σ_k odd[k] c^{2k+1}` and checks that it defines a
    /// C_{2π} metric: `σ(1) = 0` and `1 + σ > 0` on `[-1, 1]`.
    pub fn odd(odd: &[f64]) -> Result<Self> {
        let mut coeffs = vec![0.0; 2 * odd.len()];
        for (k, &a) in odd.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::Domain(format!("sigma coefficient {k} is not finite")));
            }
            coeffs[2 * k + 1] = a;
        }
        let sum: f64 = odd.iter().sum();
        let scale = odd.iter().map(|a| a.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-12 * scale {
            return Err(Error::Domain(format!(
                "sigma(1) = {sum:e}; the odd coefficients must sum to zero"
            )));
        }
        let profile = Self { coeffs };
        profile.check_positive()?;
        Ok(profile)
    }

    /// `σ(c) = a·c(1 − c²)`, the one-parameter family used throughout the tests.
    pub fn cubic(a: f64) -> Result<Self> {
        Self::odd(&[a, -a])
    }

    /// A profile with arbitrary powers of `c`. The resulting metric is in
    /// general *not* Zoll; it exists as a negative control for closure tests.
    pub fn non_zoll_fixture(coeffs: &[f64]) -> Result<Self> {
        let profile = Self { coeffs: coeffs.to_vec() };
        profile.check_positive()?;
        Ok(profile)
    }

    fn check_positive(&self) -> Result<()> {
        let n = ADMISSIBILITY_SAMPLES - 1;
        for k in 0..=n {
            let c = (std::f64::consts::PI * k as f64 / n as f64).cos();
            let v = 1.0 + self.value(c);
            if !(v > 0.0) {
                return Err(Error::Domain(format!(
                    "1 + sigma(c) = {v:e} <= 0 at c = {c}; metric is degenerate"
                )));
            }
        }
        Ok(())
    }

    /// Odd coefficients `[a₁, a₃, …]`, or `None` if an even power is present.
    pub fn odd_coefficients(&self) -> Option<Vec<f64>> {
        if self.coeffs.iter().step_by(2).any(|&a| a != 0.0) {
            return None;
        }
        Some(self.coeffs.iter().skip(1).step_by(2).copied().collect())
    }

    pub fn is_odd(&self) -> bool {
        self.odd_coefficients().is_some()
    }

    pub fn value(&self, c: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * c + a)
    }

    pub fn derivative(&self, c: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * c + k as f64 * a)
    }

    pub fn second_derivative(&self, c: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * c + (k * (k - 1)) as f64 * a)
    }
}

/// The metric under study.
#[derive(Debug, Clone, PartialEq)]
pub enum ZollSurface {
    CanonicalSphere,
    Tannery(RevolutionProfile),
}

/// Length of every closed unit-speed geodesic on the implemented surfaces.
pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;

impl ZollSurface {
    pub fn tannery_cubic(a: f64) -> Result<Self> {
        Ok(Self::Tannery(RevolutionProfile::cubic(a)?))
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self, Self::CanonicalSphere)
    }

    /// `σ(c)`; identically zero on the round sphere.
    pub fn sigma(&self, c: f64) -> f64 {
        match self {
            Self::CanonicalSphere => 0.0,
            Self::Tannery(p) => p.value(c),
        }
    }

    pub fn sigma_prime(&self, c: f64) -> f64 {
        match self {
            Self::CanonicalSphere => 0.0,
            Self::Tannery(p) => p.derivative(c),
        }
    }

    pub fn sigma_second(&self, c: f64) -> f64 {
        match self {
            Self::CanonicalSphere => 0.0,
            Self::Tannery(p) => p.second_derivative(c),
        }
    }

    /// Curvature as a function of `c = cos θ`. Valid up to and including the poles.
    pub(crate) fn curvature_at_c(&self, c: f64) -> f64 {
        let d = 1.0 + self.sigma(c);
        (d - c * self.sigma_prime(c)) / (d * d * d)
    }

    /// `dK/dθ` at `θ`.
    pub(crate) fn curvature_theta_derivative(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let d = 1.0 + self.sigma(c);
        let dp = self.sigma_prime(c);
        let n = d - c * dp;
        let np = -c * self.sigma_second(c);
        let dk_dc = (np * d - 3.0 * n * dp) / d.powi(4);
        -s * dk_dc
    }

    pub fn record(&self) -> SurfaceRecord {
        match self {
            Self::CanonicalSphere => SurfaceRecord { kind: "canonical".into(), sigma: vec![] },
            Self::Tannery(p) => SurfaceRecord {
                kind: "tannery".into(),
                sigma: p.odd_coefficients().unwrap_or_default(),
            },
        }
    }
}

/// Text form of a surface: `{kind: "canonical" | "tannery", sigma: [a₁, a₃, …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub kind: String,
    #[serde(default)]
    pub sigma: Vec<f64>,
}

impl TryFrom<SurfaceRecord> for ZollSurface {
    type Error = Error;

    fn try_from(rec: SurfaceRecord) -> Result<Self> {
        match rec.kind.as_str() {
            "canonical" => {
                if rec.sigma.iter().any(|&a| a != 0.0) {
                    return Err(Error::Config(
                        "surface.sigma must be empty or zero for kind = canonical".into(),
                    ));
                }
                Ok(Self::CanonicalSphere)
            }
            "tannery" => {
                if rec.sigma.is_empty() {
                    return Err(Error::Config("surface.sigma is required for kind = tannery".into()));
                }
                Ok(Self::Tannery(
                    RevolutionProfile::odd(&rec.sigma).map_err(|e| Error::Config(format!("surface.sigma: {e}")))?,
                ))
            }
            other => Err(Error::Config(format!(
                "surface.kind must be \"canonical\" or \"tannery\", got {other:?}"
            ))),
        }
    }
}

/// A point `(θ, φ, p_θ, p_φ)` of the punctured cotangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub theta: f64,
    pub phi: f64,
    pub p_theta: f64,
    pub p_phi: f64,
}

impl PhasePoint {
    pub fn new(theta: f64, phi: f64, p_theta: f64, p_phi: f64) -> Self {
        Self { theta, phi, p_theta, p_phi }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta, self.phi, self.p_theta, self.p_phi]
    }

    /// Multiplies the covector by `lambda`.
    pub fn scale_covector(self, lambda: f64) -> Self {
        Self { p_theta: self.p_theta * lambda, p_phi: self.p_phi * lambda, ..self }
    }

    /// Ambient point `(sin θ cos φ, sin θ sin φ, cos θ)` on the unit sphere.
    pub fn position(&self) -> [f64; 3] {
        spherical_to_cartesian(self.theta, self.phi)
    }

    /// Point on the equator `θ = π/2` at longitude `phi` whose unit covector
    /// makes angle `gamma` with the eastward direction, rotating toward north.
    /// `gamma = π/2` is the northbound meridian.
    pub fn equator_crossing(phi: f64, gamma: f64) -> Self {
        Self::new(std::f64::consts::FRAC_PI_2, phi, -gamma.sin(), gamma.cos())
    }
}

pub fn spherical_to_cartesian(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

pub(crate) fn check_chart(theta: f64) -> Result<()> {
    if !theta.is_finite() || !(POLE_MARGIN..=std::f64::consts::PI - POLE_MARGIN).contains(&theta) {
        return Err(Error::Chart(format!(
            "theta = {theta} is within {POLE_MARGIN:e} of a chart pole"
        )));
    }
    Ok(())
}

/// Diagonal inverse metric `(g^{θθ}, g^{φφ})`.
pub fn metric_inverse(surface: &ZollSurface, theta: f64) -> Result<(f64, f64)> {
    check_chart(theta)?;
    Ok(metric_inverse_unchecked(surface, theta))
}

pub(crate) fn metric_inverse_unchecked(surface: &ZollSurface, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let d = 1.0 + surface.sigma(c);
    (1.0 / (d * d), 1.0 / (s * s))
}

/// Gaussian curvature `K(θ) = (1 + σ − cσ') / (1 + σ)³`, `c = cos θ`.
pub fn curvature(surface: &ZollSurface, theta: f64) -> Result<f64> {
    check_chart(theta)?;
    Ok(surface.curvature_at_c(theta.cos()))
}

/// Fiber norm `‖ξ‖` in the cometric.
pub fn covector_norm(surface: &ZollSurface, rho: &PhasePoint) -> f64 {
    (2.0 * hamiltonian_p0(surface, rho)).sqrt()
}

/// Cometric pairing `g*(ξ, η)` at the base point of `rho`.
pub fn cometric(surface: &ZollSurface, theta: f64, xi: (f64, f64), eta: (f64, f64)) -> Result<f64> {
    let (gtt, gpp) = metric_inverse(surface, theta)?;
    Ok(gtt * xi.0 * eta.0 + gpp * xi.1 * eta.1)
}

/// The covector `ξ^⊥`: same norm as `ξ`, orthogonal to it, `(ξ, ξ^⊥)` direct.
pub fn perp(surface: &ZollSurface, rho: &PhasePoint) -> Result<(f64, f64)> {
    check_chart(rho.theta)?;
    if rho.p_theta == 0.0 && rho.p_phi == 0.0 {
        return Err(Error::Domain("perp of the zero covector".into()));
    }
    Ok(perp_unchecked(surface, rho))
}

pub(crate) fn perp_unchecked(surface: &ZollSurface, rho: &PhasePoint) -> (f64, f64) {
    let (s, c) = rho.theta.sin_cos();
    let d = 1.0 + surface.sigma(c);
    // Orthonormal coframe e¹ = d·dθ, e² = sin θ·dφ; rotate (a, b) ↦ (−b, a).
    let a = rho.p_theta / d;
    let b = rho.p_phi / s;
    (-b * d, a * s)
}

/// `𝒦(x, ξ) = g*(dK, ξ^⊥)`.
pub fn curvature_pairing(surface: &ZollSurface, rho: &PhasePoint) -> Result<f64> {
    check_chart(rho.theta)?;
    if rho.p_theta == 0.0 && rho.p_phi == 0.0 {
        return Err(Error::Domain("curvature pairing with the zero covector".into()));
    }
    Ok(curvature_pairing_unchecked(surface, rho))
}

pub(crate) fn curvature_pairing_unchecked(surface: &ZollSurface, rho: &PhasePoint) -> f64 {
    if surface.is_canonical() {
        return 0.0;
    }
    let (gtt, _) = metric_inverse_unchecked(surface, rho.theta);
    let (perp_theta, _) = perp_unchecked(surface, rho);
    gtt * surface.curvature_theta_derivative(rho.theta) * perp_theta
}

/// Kinetic Hamiltonian `p₀ = ½ ‖ξ‖²`.
pub fn hamiltonian_p0(surface: &ZollSurface, rho: &PhasePoint) -> f64 {
    let (gtt, gpp) = metric_inverse_unchecked(surface, rho.theta);
    0.5 * (gtt * rho.p_theta * rho.p_theta + gpp * rho.p_phi * rho.p_phi)
}

/// Validates a phase point: outside the pole margin, nonzero covector.
pub fn check_phase_point(surface: &ZollSurface, rho: &PhasePoint) -> Result<()> {
    check_chart(rho.theta)?;
    if !(rho.phi.is_finite() && rho.p_theta.is_finite() && rho.p_phi.is_finite()) {
        return Err(Error::Domain("phase point has non-finite components".into()));
    }
    if !(hamiltonian_p0(surface, rho) > 0.0) {
        return Err(Error::Domain("covector must be nonzero".into()));
    }
    Ok(())
}

/// Rescales the covector so that `p₀ = ½` (unit speed).
pub fn normalize_unit(surface: &ZollSurface, rho: &PhasePoint) -> Result<PhasePoint> {
    check_phase_point(surface, rho)?;
    Ok(rho.scale_covector(1.0 / covector_norm(surface, rho)))
}

// ---------------------------------------------------------------------------
// Round-sphere ambient picture and rotated charts.

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// One of the three cyclic axis permutations. `Frame(k)` uses ambient axis
/// `(k + 2) mod 3` as the chart's polar axis; `Frame(0)` is the standard chart.
/// Cyclic permutations preserve orientation, so `ξ^⊥` is frame independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Frame(pub usize);

impl Frame {
    pub const STANDARD: Frame = Frame(0);

    /// Ambient → frame-local coordinates.
    pub fn to_local(self, v: [f64; 3]) -> [f64; 3] {
        let k = self.0;
        [v[k % 3], v[(k + 1) % 3], v[(k + 2) % 3]]
    }

    /// Frame-local → ambient coordinates.
    pub fn to_ambient(self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        let k = self.0;
        out[k % 3] = v[0];
        out[(k + 1) % 3] = v[1];
        out[(k + 2) % 3] = v[2];
        out
    }

    /// The frame whose polar axis is best aligned with `normal`, so that the
    /// great circle with that normal stays far from the frame's poles.
    pub fn for_normal(normal: [f64; 3]) -> Frame {
        // Keep the standard chart whenever it is comfortably safe.
        if normal[2].abs() >= 0.5 {
            return Frame::STANDARD;
        }
        let axis = (0..3)
            .max_by(|&i, &j| normal[i].abs().total_cmp(&normal[j].abs()))
            .unwrap();
        Frame((axis + 1) % 3)
    }
}

/// Round sphere: chart state → (position, ambient momentum).
pub(crate) fn canonical_to_ambient(state: [f64; 4]) -> ([f64; 3], [f64; 3]) {
    let [theta, phi, pt, pp] = state;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let x = [st * cp, st * sp, ct];
    let e_theta = [ct * cp, ct * sp, -st];
    let e_phi = [-sp, cp, 0.0];
    let w = pp / st;
    let p = [
        pt * e_theta[0] + w * e_phi[0],
        pt * e_theta[1] + w * e_phi[1],
        pt * e_theta[2] + w * e_phi[2],
    ];
    (x, p)
}

/// Round sphere: (position, tangent momentum) → chart state. `phi` is chosen
/// in `(−π, π]`; the caller unwraps it if continuity matters.
pub(crate) fn canonical_from_ambient(x: [f64; 3], p: [f64; 3]) -> [f64; 4] {
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let theta = rho.atan2(x[2]);
    let phi = x[1].atan2(x[0]);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let e_theta = [ct * cp, ct * sp, -st];
    let e_phi = [-sp, cp, 0.0];
    [theta, phi, dot(p, e_theta), st * dot(p, e_phi)]
}

/// Rewrites a chart state given in frame `from` in frame `to` (round sphere only).
pub(crate) fn change_frame(state: [f64; 4], from: Frame, to: Frame) -> [f64; 4] {
    if from == to {
        return state;
    }
    let (x, p) = canonical_to_ambient(state);
    let (x, p) = (from.to_ambient(x), from.to_ambient(p));
    canonical_from_ambient(to.to_local(x), to.to_local(p))
}

/// Normal `x × v / |v|` of the great circle through `rho` (round sphere).
pub(crate) fn canonical_normal(rho: &PhasePoint) -> [f64; 3] {
    let (x, p) = canonical_to_ambient(rho.to_array());
    let n = cross(x, p);
    let len = norm3(n);
    [n[0] / len, n[1] / len, n[2] / len]
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}
