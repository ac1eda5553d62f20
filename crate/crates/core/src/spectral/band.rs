//! Band invariants of a potential on a single cluster and level spacings of
//! the perturbed Hamiltonian.

use super::basis::HarmonicBasis;
use super::eigen::jacobi_eigen;
use super::operator::potential_matrix;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// `ħ_l = 1/√(l(l+1))`, the value placing cluster `l` at free energy `1/2`.
pub fn cluster_hbar(l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::Domain("cluster 0 has zero free energy".into()));
    }
    Ok(1.0 / ((l * (l + 1)) as f64).sqrt())
}

/// Basis size used by default for experiments at cluster `l`.
pub fn default_lmax(l: usize) -> usize {
    2 * l + 10
}

/// Eigenvalues of the cluster-`l` block of multiplication by `V`, ascending.
pub fn band_invariants(basis: &HarmonicBasis, v: &Potential, l: usize) -> Result<Vec<f64>> {
    if l > basis.lmax() {
        return Err(Error::Domain(format!("cluster {l} exceeds lmax {}", basis.lmax())));
    }
    let block = potential_matrix(basis, v)?.cluster_block(l)?;
    Ok(jacobi_eigen(&block)?.values)
}

/// Energy window `[center − half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub center: f64,
    pub half_width: f64,
}

impl EnergyWindow {
    /// Window half-width used around `E₀ = 1/2`.
    pub const DEFAULT_HALF_WIDTH: f64 = 0.125;

    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() {
            return Err(Error::Domain(format!("invalid window {center} ± {half_width}")));
        }
        Ok(Self { center, half_width })
    }

    pub fn contains(&self, e: f64) -> bool {
        (e - self.center).abs() <= self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapResult {
    /// Smallest distance between distinct eigenvalues, and how many distinct
    /// values the window held.
    Gap { s0: f64, distinct: usize },
    NoGap { distinct: usize },
}

impl GapResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            GapResult::Gap { s0, .. } => Some(*s0),
            GapResult::NoGap { .. } => None,
        }
    }
}

/// Default merge tolerance relative to the spectral radius.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// Minimum spacing between distinct eigenvalues inside `window`.
/// Values closer than `merge_tol` are treated as one level.
pub fn min_gap(values: &[f64], window: EnergyWindow, merge_tol: f64) -> Result<GapResult> {
    let mut inside: Vec<f64> = values.iter().copied().filter(|&e| window.contains(e)).collect();
    if inside.is_empty() {
        return Err(Error::Domain("energy window holds no eigenvalues".into()));
    }
    inside.sort_by(f64::total_cmp);
    let mut levels = vec![inside[0]];
    for &e in &inside[1..] {
        if e - levels[levels.len() - 1] > merge_tol {
            levels.push(e);
        }
    }
    let distinct = levels.len();
    if distinct < 2 {
        return Ok(GapResult::NoGap { distinct });
    }
    let s0 = levels.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(GapResult::Gap { s0, distinct })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Law of `(1 − n₃²)/2` for `n` uniform on the sphere.
pub fn x3_squared_radon_cdf(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= 0.5 {
        1.0
    } else {
        1.0 - (1.0 - 2.0 * y).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::operator::hamiltonian_matrix;
    use crate::spectral::quadrature::gauss_legendre;
    use crate::spectral::legendre::{legendre_table, tri_index};

    #[test]
    fn constant_band() {
        let b = HarmonicBasis::new(5).unwrap();
        let inv = band_invariants(&b, &Potential::constant(2.5), 4).unwrap();
        assert_eq!(inv.len(), 9);
        assert!(inv.iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn x3_squared_first_cluster() {
        let b = HarmonicBasis::new(3).unwrap();
        let inv = band_invariants(&b, &Potential::x3_squared(), 1).unwrap();
        // Independent oracle: 2π ∫ P̄_1^m(c)² c² dc.
        let (x, w) = gauss_legendre(16);
        let mut want: Vec<f64> = [0usize, 1, 1]
            .iter()
            .map(|&m| {
                x.iter()
                    .zip(&w)
                    .map(|(&c, &wt)| {
                        let p = legendre_table(1, c, (1.0 - c * c).sqrt())[tri_index(1, m)];
                        2.0 * std::f64::consts::PI * wt * p * p * c * c
                    })
                    .sum()
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in inv.iter().zip(&want) {
            assert!((g - w).abs() < 1e-13);
        }
        assert!((want[0] - 0.2).abs() < 1e-13 && (want[2] - 0.6).abs() < 1e-13);
    }

    #[test]
    fn x3_squared_band_sits_in_the_radon_range() {
        let l = 30;
        let b = HarmonicBasis::new(l).unwrap();
        let inv = band_invariants(&b, &Potential::x3_squared(), l).unwrap();
        let margin = 1.5 / l as f64;
        assert!(inv.iter().all(|&v| v >= -margin && v <= 0.5 + margin));
        assert!(inv[0] < 0.05 && inv[inv.len() - 1] > 0.45);
        assert!(inv[0] >= -1e-9 && inv[inv.len() - 1] <= 1.0 + 1e-9);
    }

    #[test]
    fn free_gap_between_adjacent_clusters() {
        let l = 6;
        let hbar = 0.2;
        let b = HarmonicBasis::new(10).unwrap();
        let h = hamiltonian_matrix(&b, hbar, 0.0, &Potential::x3_squared()).unwrap();
        let e = h.eig().unwrap();
        let el = 0.5 * hbar * hbar * (l * (l + 1)) as f64;
        let el1 = 0.5 * hbar * hbar * ((l + 1) * (l + 2)) as f64;
        let w = EnergyWindow::new(0.5 * (el + el1), 0.5 * (el1 - el) + 1e-9).unwrap();
        let g = min_gap(&e.values, w, 1e-12).unwrap();
        assert_eq!(g, GapResult::Gap { s0: el1 - el, distinct: 2 });
        let narrow = EnergyWindow::new(el, 1e-6).unwrap();
        assert_eq!(min_gap(&e.values, narrow, 1e-12).unwrap(), GapResult::NoGap { distinct: 1 });
    }

    #[test]
    fn degenerate_pairs_merge() {
        let w = EnergyWindow::new(0.0, 1.0).unwrap();
        let g = min_gap(&[0.1, 0.1, 0.1 + 1e-15, 0.4], w, 1e-12).unwrap();
        assert!(matches!(g, GapResult::Gap { s0, distinct: 2 } if (s0 - 0.3).abs() < 1e-14));
        assert!(min_gap(&[2.0], w, 1e-12).is_err());
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 200;
        let qs: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                (1.0 - (1.0 - u) * (1.0 - u)) / 2.0
            })
            .collect();
        assert!(ks_distance(&qs, x3_squared_radon_cdf) <= 0.5 / n as f64 + 1e-12);
    }
}
