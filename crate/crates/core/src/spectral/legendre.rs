//! Orthonormal associated Legendre functions and complex spherical harmonics
//! `Y_l^m(θ, φ) = P̄_l^m(cos θ) e^{imφ}` with the Condon–Shortley phase.

use num_complex::Complex64;

/// Position of `(l, m)` in the flat basis ordering `l² + l + m`.
pub fn flat_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`flat_index`].
pub fn degree_order(index: usize) -> (usize, i64) {
    let l = (index as f64).sqrt() as usize;
    // Guard against rounding in the square root.
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else if l * l > index { l - 1 } else { l };
    (l, index as i64 - (l * l + l) as i64)
}

/// Position of `(l, m ≥ 0)` in a triangular table.
pub fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Orthonormal `P̄_l^m(c)` for `0 ≤ m ≤ l ≤ lmax`, stored by [`tri_index`].
/// Normalized so that `∫_{S²} |P̄_l^m(cos θ) e^{imφ}|² dΩ = 1`.
pub fn legendre_table(lmax: usize, c: f64, s: f64) -> Vec<f64> {
    let mut p = vec![0.0; tri_index(lmax, lmax) + 1];
    p[0] = 0.5 / std::f64::consts::PI.sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        p[tri_index(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[tri_index(m - 1, m - 1)];
    }
    for m in 0..lmax {
        let mf = m as f64;
        p[tri_index(m + 1, m)] = c * (2.0 * mf + 3.0).sqrt() * p[tri_index(m, m)];
    }
    for m in 0..=lmax {
        let mf = m as f64;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri_index(l, m)] = a * (c * p[tri_index(l - 1, m)] - b * p[tri_index(l - 2, m)]);
        }
    }
    p
}

/// All `Y_l^m(θ, φ)` with `l ≤ lmax`, in flat order.
pub fn spherical_harmonics(lmax: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let (s, c) = theta.sin_cos();
    let p = legendre_table(lmax, c, s);
    let mut out = vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    for l in 0..=lmax {
        for m in 0..=l {
            let e = Complex64::from_polar(1.0, m as f64 * phi);
            let v = p[tri_index(l, m)] * e;
            out[flat_index(l, m as i64)] = v;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[flat_index(l, -(m as i64))] = sign * v.conj();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn index_round_trip() {
        for l in 0..40 {
            for m in -(l as i64)..=(l as i64) {
                assert_eq!(degree_order(flat_index(l, m)), (l, m));
            }
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let (theta, phi) = (0.7, 1.3);
        let y = spherical_harmonics(2, theta, phi);
        let (s, c) = theta.sin_cos();
        let y10 = (3.0 / (4.0 * PI)).sqrt() * c;
        let y11 = -(3.0 / (8.0 * PI)).sqrt() * s * Complex64::from_polar(1.0, phi);
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * c * c - 1.0);
        let y22 = 0.25 * (15.0 / (2.0 * PI)).sqrt() * s * s * Complex64::from_polar(1.0, 2.0 * phi);
        assert!((y[flat_index(1, 0)].re - y10).abs() < 1e-15);
        assert!((y[flat_index(1, 1)] - y11).norm() < 1e-15);
        assert!((y[flat_index(1, -1)] + y11.conj()).norm() < 1e-15);
        assert!((y[flat_index(2, 0)].re - y20).abs() < 1e-15);
        assert!((y[flat_index(2, 2)] - y22).norm() < 1e-15);
    }

    #[test]
    fn addition_theorem() {
        // Σ_m |Y_l^m|² = (2l+1)/(4π) at every point.
        let y = spherical_harmonics(60, 2.1, -0.4);
        for l in 0..=60 {
            let sum: f64 = (-(l as i64)..=l as i64).map(|m| y[flat_index(l, m)].norm_sqr()).sum();
            assert!((sum - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-12, "l = {l}");
        }
    }
}
