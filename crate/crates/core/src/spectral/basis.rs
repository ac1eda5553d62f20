//! Truncated spherical-harmonic basis with a Gauss–Legendre × uniform grid,
//! and the forward/inverse discrete transforms.

use num_complex::Complex64;
use rayon::prelude::*;

use super::legendre::{flat_index, legendre_table, tri_index};
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Quadrature grid: `n_theta` Gauss–Legendre nodes in `cos θ` times `n_phi`
/// equispaced longitudes `φ_j = 2πj/n_phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub cos_theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub n_phi: usize,
}

impl Grid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (cos_theta, weights) = gauss_legendre(n_theta);
        Self { cos_theta, weights, n_phi }
    }

    pub fn n_theta(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.n_phi as f64
    }

    /// Area weight of grid point `(i, j)`.
    pub fn area_weight(&self, i: usize) -> f64 {
        self.weights[i] * 2.0 * std::f64::consts::PI / self.n_phi as f64
    }

    /// Unit vector of grid point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 3] {
        let c = self.cos_theta[i];
        let s = (1.0 - c * c).max(0.0).sqrt();
        let (sp, cp) = self.phi(j).sin_cos();
        [s * cp, s * sp, c]
    }

    /// `Σ w·f` over the grid, for real samples in row-major `(θ, φ)` order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let np = self.n_phi;
        (0..self.n_theta()).map(|i| self.area_weight(i) * values[i * np..(i + 1) * np].iter().sum::<f64>()).sum()
    }
}

/// Orthonormal complex harmonics `Y_l^m`, `l ≤ lmax`, flat index `l² + l + m`.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    lmax: usize,
    grid: Grid,
    /// `P̄_l^m(c_i)` for each node, triangular layout.
    legendre: Vec<Vec<f64>>,
}

/// Complex samples on a [`Grid`], row-major `(θ_i, φ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub n_theta: usize,
    pub n_phi: usize,
    pub values: Vec<Complex64>,
}

/// Coefficient vector over a [`HarmonicBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicState {
    pub lmax: usize,
    pub coeffs: Vec<Complex64>,
}

impl HarmonicState {
    pub fn zeros(lmax: usize) -> Self {
        Self { lmax, coeffs: vec![ZERO; (lmax + 1) * (lmax + 1)] }
    }

    pub fn basis_vector(lmax: usize, l: usize, m: i64) -> Self {
        let mut s = Self::zeros(lmax);
        s.coeffs[flat_index(l, m)] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Domain("cannot normalize the zero state".into()));
        }
        for c in &mut self.coeffs {
            *c /= n;
        }
        Ok(self)
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &HarmonicState) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    /// `Σ_m |c_{l,m}|²` for each `l`.
    pub fn shell_weights(&self) -> Vec<f64> {
        (0..=self.lmax)
            .map(|l| (-(l as i64)..=l as i64).map(|m| self.coeffs[flat_index(l, m)].norm_sqr()).sum())
            .collect()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &HarmonicState, b: Complex64) -> Result<HarmonicState> {
        if self.lmax != other.lmax {
            return Err(Error::GridMismatch(format!("states have lmax {} and {}", self.lmax, other.lmax)));
        }
        Ok(HarmonicState {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect(),
        })
    }
}

impl HarmonicBasis {
    /// Basis with the default grid `(lmax + 2) × (2 lmax + 4)`, exact for
    /// `∫ Y* V Y` with `V` of degree ≤ 2 and for second moments of `|u|²`.
    pub fn new(lmax: usize) -> Result<Self> {
        Self::with_grid(lmax, lmax + 2, 2 * lmax + 4)
    }

    pub fn with_grid(lmax: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if lmax < 1 {
            return Err(Error::Domain("basis needs lmax >= 1".into()));
        }
        if n_theta < lmax + 1 || n_phi < 2 * lmax + 2 {
            return Err(Error::GridMismatch(format!(
                "grid {n_theta}×{n_phi} is too small for lmax {lmax}"
            )));
        }
        let grid = Grid::new(n_theta, n_phi);
        let legendre = grid
            .cos_theta
            .par_iter()
            .map(|&c| legendre_table(lmax, c, (1.0 - c * c).max(0.0).sqrt()))
            .collect();
        Ok(Self { lmax, grid, legendre })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn dim(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `P̄_l^{|m|}` with the `(−1)^m` factor for negative `m`, at node `i`.
    pub fn legendre(&self, i: usize, l: usize, m: i64) -> f64 {
        let v = self.legendre[i][tri_index(l, m.unsigned_abs() as usize)];
        if m < 0 && m % 2 != 0 {
            -v
        } else {
            v
        }
    }

    fn check_state(&self, state: &HarmonicState) -> Result<()> {
        if state.lmax != self.lmax || state.coeffs.len() != self.dim() {
            return Err(Error::GridMismatch(format!(
                "state has lmax {} but basis has lmax {}",
                state.lmax, self.lmax
            )));
        }
        Ok(())
    }

    /// Values of `Σ c_{lm} Y_l^m` on the grid.
    pub fn synthesize(&self, state: &HarmonicState) -> Result<GridSamples> {
        self.check_state(state)?;
        let lmax = self.lmax as i64;
        let np = self.grid.n_phi;
        let twiddle = self.twiddles();
        let rows: Vec<Vec<Complex64>> = (0..self.grid.n_theta())
            .into_par_iter()
            .map(|i| {
                // g_m = Σ_l c_{lm} P̄_l^m(c_i)
                let g: Vec<Complex64> = (-lmax..=lmax)
                    .map(|m| {
                        let ma = m.unsigned_abs() as usize;
                        (ma..=self.lmax).map(|l| state.coeffs[flat_index(l, m)] * self.legendre(i, l, m)).sum()
                    })
                    .collect();
                (0..np)
                    .map(|j| {
                        g.iter()
                            .enumerate()
                            .map(|(k, gm)| gm * twiddle[((k as i64 - lmax).rem_euclid(np as i64) as usize * j) % np])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(GridSamples { n_theta: self.grid.n_theta(), n_phi: np, values: rows.concat() })
    }

    /// Quadrature projection of grid samples onto the basis.
    pub fn analyze(&self, samples: &GridSamples) -> Result<HarmonicState> {
        if samples.n_theta != self.grid.n_theta() || samples.n_phi != self.grid.n_phi || samples.values.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "samples are {}×{} but the grid is {}×{}",
                samples.n_theta,
                samples.n_phi,
                self.grid.n_theta(),
                self.grid.n_phi
            )));
        }
        let lmax = self.lmax as i64;
        let np = self.grid.n_phi;
        let twiddle = self.twiddles();
        // F_m(i) = (2π/n_phi) Σ_j u_ij e^{−imφ_j}
        let fourier: Vec<Vec<Complex64>> = (0..self.grid.n_theta())
            .into_par_iter()
            .map(|i| {
                let row = &samples.values[i * np..(i + 1) * np];
                (-lmax..=lmax)
                    .map(|m| {
                        let mm = (-m).rem_euclid(np as i64) as usize;
                        let s: Complex64 = row.iter().enumerate().map(|(j, u)| u * twiddle[(mm * j) % np]).sum();
                        s * self.grid.area_weight(i) / self.grid.weights[i]
                    })
                    .collect()
            })
            .collect();
        let mut out = HarmonicState::zeros(self.lmax);
        for l in 0..=self.lmax {
            for m in -(l as i64)..=(l as i64) {
                let k = (m + lmax) as usize;
                out.coeffs[flat_index(l, m)] = (0..self.grid.n_theta())
                    .map(|i| fourier[i][k] * (self.grid.weights[i] * self.legendre(i, l, m)))
                    .sum();
            }
        }
        Ok(out)
    }

    /// `e^{2πik/n_phi}` for `k < n_phi`.
    fn twiddles(&self) -> Vec<Complex64> {
        let np = self.grid.n_phi;
        (0..np).map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / np as f64)).collect()
    }

    /// `u(x)` at an arbitrary unit vector.
    pub fn evaluate(&self, state: &HarmonicState, x: [f64; 3]) -> Result<Complex64> {
        self.check_state(state)?;
        let theta = (x[0] * x[0] + x[1] * x[1]).sqrt().atan2(x[2]);
        let phi = x[1].atan2(x[0]);
        let y = super::legendre::spherical_harmonics(self.lmax, theta, phi);
        Ok(state.coeffs.iter().zip(&y).map(|(a, b)| a * b).sum())
    }
}
