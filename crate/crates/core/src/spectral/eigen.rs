//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian input.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (r, b) in row.iter_mut().zip(orow) {
                    *r += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mat_vec shape mismatch");
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A − A*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in ascending order and the unitary whose columns are the
/// matching eigenvectors.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Maximum number of cyclic sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi for a Hermitian matrix. Each rotation first removes the phase
/// of `a_pq` with `diag(1, e^{−iα})`, then applies a real Givens rotation.
/// Stops once the off-diagonal Frobenius norm is below `1e−14·‖A‖_F`.
pub fn jacobi_eigen(a: &CMatrix) -> Result<DenseEigen> {
    if a.rows != a.cols {
        return Err(Error::Domain(format!("eigensolver needs a square matrix, got {}×{}", a.rows, a.cols)));
    }
    let n = a.rows;
    let scale = a.frobenius();
    if a.hermiticity_defect() > 1e-10 * scale.max(1e-300) {
        return Err(Error::Domain("eigensolver input is not Hermitian".into()));
    }
    let mut m = a.clone();
    // Symmetrize so the off-diagonal bookkeeping below is exact.
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let target = 1e-14 * scale;
    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    let mut current = off(&m);
    while current > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off: current });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        current = off(&m);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(DenseEigen { values, vectors })
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = m.rows;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Skip rotations whose effect is below rounding of the diagonal.
    if r < 1e-300 || (app.abs() + aqq.abs() > 0.0 && r < 1e-18 * (app.abs() + aqq.abs())) {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    let phase = apq / r; // e^{iα}
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 { 1.0 } else { -1.0 } / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e_minus = phase.conj();
    // Columns: A ← A U with U = diag(1, e^{−iα}) · [[c, s], [−s, c]].
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * (s * e_minus);
        m[(k, q)] = akp * s + akq * (c * e_minus);
    }
    // Rows: A ← U* A.
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * (s * phase);
        m[(q, k)] = apk * s + aqk * (c * phase);
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(app - t * r, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * r, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * (s * e_minus);
        v[(k, q)] = vkp * s + vkq * (c * e_minus);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_input() {
        let a = CMatrix::from_fn(3, 3, |i, j| if i == j { c([3.0, -1.0, 2.0][i], 0.0) } else { ZERO });
        let e = jacobi_eigen(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        assert_eq!(e.vectors[(1, 0)], c(1.0, 0.0));
    }

    #[test]
    fn pauli_x() {
        let a = CMatrix::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { ZERO });
        let e = jacobi_eigen(&a).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 50;
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        let e = jacobi_eigen(&a).unwrap();
        let lam = CMatrix::from_fn(n, n, |i, j| if i == j { c(e.values[i], 0.0) } else { ZERO });
        let rec = e.vectors.matmul(&lam).matmul(&e.vectors.adjoint());
        let diff = CMatrix::from_fn(n, n, |i, j| rec[(i, j)] - a[(i, j)]);
        assert!(diff.frobenius() < 1e-9 * a.frobenius());
        let gram = e.vectors.adjoint().matmul(&e.vectors);
        let dev = CMatrix::from_fn(n, n, |i, j| gram[(i, j)] - if i == j { c(1.0, 0.0) } else { ZERO });
        assert!(dev.frobenius() < 1e-9);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.0));
        assert!(matches!(jacobi_eigen(&a), Err(Error::Domain(_))));
    }
}
