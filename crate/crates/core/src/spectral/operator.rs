//! Operators on the truncated harmonic space, stored as dense blocks between
//! azimuthal orders `(m', m)`.
//!
//! Multiplication by a degree-`d` potential only couples `|m' − m| ≤ d`, and
//! axisymmetric potentials are block diagonal in `m`, so the block layout
//! keeps `L_max ≈ 90` problems (dimension 8281) in memory and lets the
//! eigensolver work one coupled component at a time.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::{HarmonicBasis, HarmonicState};
use super::eigen::{jacobi_eigen, CMatrix, DenseEigen};
use super::legendre::{flat_index, legendre_table, tri_index};
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::potential::Potential;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse-by-block complex matrix over the flat index `l² + l + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    lmax: usize,
    /// Block `(m', m)`: rows `l' = |m'|..=lmax`, columns `l = |m|..=lmax`.
    blocks: BTreeMap<(i64, i64), CMatrix>,
    hermitian: bool,
}

fn block_len(lmax: usize, m: i64) -> usize {
    lmax + 1 - m.unsigned_abs() as usize
}

impl OperatorMatrix {
    pub fn zeros(lmax: usize, hermitian: bool) -> Self {
        Self { lmax, blocks: BTreeMap::new(), hermitian }
    }

    /// Diagonal operator with entry `f(l)` on every `(l, m)`.
    pub fn diagonal_in_l(lmax: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut op = Self::zeros(lmax, true);
        let l = lmax as i64;
        for m in -l..=l {
            let n = block_len(lmax, m);
            let off = m.unsigned_abs() as usize;
            op.blocks.insert((m, m), CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(f(i + off), 0.0) } else { ZERO }));
        }
        op
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn dim(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    pub fn is_hermitian_tagged(&self) -> bool {
        self.hermitian
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(i64, i64), &CMatrix)> {
        self.blocks.iter()
    }

    /// Entry `⟨Y_{l'm'}, A Y_{lm}⟩`.
    pub fn get(&self, (lp, mp): (usize, i64), (l, m): (usize, i64)) -> Complex64 {
        if lp < mp.unsigned_abs() as usize || l < m.unsigned_abs() as usize || lp > self.lmax || l > self.lmax {
            return ZERO;
        }
        self.blocks
            .get(&(mp, m))
            .map(|b| b[(lp - mp.unsigned_abs() as usize, l - m.unsigned_abs() as usize)])
            .unwrap_or(ZERO)
    }

    /// `max |A − A*|` over stored blocks.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for (&(mp, m), b) in &self.blocks {
            let other = self.blocks.get(&(m, mp));
            for i in 0..b.rows {
                for j in 0..b.cols {
                    let t = other.map(|o| o[(j, i)].conj()).unwrap_or(ZERO);
                    d = d.max((b[(i, j)] - t).norm());
                }
            }
        }
        d
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks.values().map(|b| b.frobenius().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.values().flat_map(|b| b.data.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .filter(|((mp, m), _)| mp == m)
            .map(|(_, b)| (0..b.rows).map(|i| b[(i, i)]).sum::<Complex64>())
            .sum()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &OperatorMatrix, b: f64) -> Result<OperatorMatrix> {
        if self.lmax != other.lmax {
            return Err(Error::GridMismatch(format!("operators have lmax {} and {}", self.lmax, other.lmax)));
        }
        let mut out = OperatorMatrix::zeros(self.lmax, self.hermitian && other.hermitian);
        for key in self.blocks.keys().chain(other.blocks.keys()) {
            if out.blocks.contains_key(key) {
                continue;
            }
            let (mp, m) = *key;
            let (r, c) = (block_len(self.lmax, mp), block_len(self.lmax, m));
            let x = self.blocks.get(key);
            let y = other.blocks.get(key);
            out.blocks.insert(
                *key,
                CMatrix::from_fn(r, c, |i, j| {
                    a * x.map(|x| x[(i, j)]).unwrap_or(ZERO) + b * y.map(|y| y[(i, j)]).unwrap_or(ZERO)
                }),
            );
        }
        Ok(out)
    }

    /// Keeps only the entries with `l' = l` (the harmonic-cluster blocks).
    pub fn cluster_projection(&self) -> OperatorMatrix {
        let mut out = OperatorMatrix::zeros(self.lmax, self.hermitian);
        for (&(mp, m), b) in &self.blocks {
            let (op, o) = (mp.unsigned_abs() as usize, m.unsigned_abs() as usize);
            let nb = CMatrix::from_fn(b.rows, b.cols, |i, j| if i + op == j + o { b[(i, j)] } else { ZERO });
            out.blocks.insert((mp, m), nb);
        }
        out
    }

    /// `‖[A, D]‖_F` for the diagonal `D = diag(d(l))`.
    pub fn commutator_with_diagonal(&self, d: impl Fn(usize) -> f64) -> f64 {
        let mut s = 0.0;
        for (&(mp, m), b) in &self.blocks {
            let (op, o) = (mp.unsigned_abs() as usize, m.unsigned_abs() as usize);
            for i in 0..b.rows {
                for j in 0..b.cols {
                    s += (b[(i, j)] * (d(j + o) - d(i + op))).norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// The `(2l+1) × (2l+1)` block `⟨Y_{lm'}, A Y_{lm}⟩`, rows and columns ordered by `m`.
    pub fn cluster_block(&self, l: usize) -> Result<CMatrix> {
        if l > self.lmax {
            return Err(Error::Domain(format!("cluster {l} exceeds lmax {}", self.lmax)));
        }
        let li = l as i64;
        Ok(CMatrix::from_fn(2 * l + 1, 2 * l + 1, |i, j| self.get((l, i as i64 - li), (l, j as i64 - li))))
    }

    pub fn apply(&self, state: &HarmonicState) -> Result<HarmonicState> {
        if state.lmax != self.lmax {
            return Err(Error::GridMismatch(format!("state lmax {} vs operator lmax {}", state.lmax, self.lmax)));
        }
        let mut out = HarmonicState::zeros(self.lmax);
        for (&(mp, m), b) in &self.blocks {
            let (op, o) = (mp.unsigned_abs() as usize, m.unsigned_abs() as usize);
            for i in 0..b.rows {
                let mut acc = ZERO;
                for j in 0..b.cols {
                    acc += b[(i, j)] * state.coeffs[flat_index(j + o, m)];
                }
                out.coeffs[flat_index(i + op, mp)] += acc;
            }
        }
        Ok(out)
    }

    /// Dense copy; intended for small `lmax`.
    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (&(mp, m), b) in &self.blocks {
            let (op, o) = (mp.unsigned_abs() as usize, m.unsigned_abs() as usize);
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(flat_index(i + op, mp), flat_index(j + o, m))] = b[(i, j)];
                }
            }
        }
        out
    }

    /// Eigendecomposition, split into independently coupled components.
    pub fn eig(&self) -> Result<Eigensystem> {
        if !self.hermitian {
            return Err(Error::Domain("eig requires an operator tagged Hermitian".into()));
        }
        let scale = self.max_abs();
        let drop = 1e-15 * scale;
        let dim = self.dim();
        // Union-find over flat indices, joined by entries above the drop level.
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (&(mp, m), b) in &self.blocks {
            let (op, o) = (mp.unsigned_abs() as usize, m.unsigned_abs() as usize);
            for i in 0..b.rows {
                for j in 0..b.cols {
                    if b[(i, j)].norm() > drop {
                        let (a, c) = (find(&mut parent, flat_index(i + op, mp)), find(&mut parent, flat_index(j + o, m)));
                        if a != c {
                            parent[a.max(c)] = a.min(c);
                        }
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..dim {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let lookup = |idx: usize| {
            let (l, m) = super::legendre::degree_order(idx);
            (l, m)
        };
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let components: Vec<Component> = groups
            .into_par_iter()
            .map(|indices| {
                let sub = CMatrix::from_fn(indices.len(), indices.len(), |i, j| {
                    let v = self.get(lookup(indices[i]), lookup(indices[j]));
                    if v.norm() > drop {
                        v
                    } else {
                        ZERO
                    }
                });
                jacobi_eigen(&sub).map(|eig| Component { indices, eig })
            })
            .collect::<Result<_>>()?;
        let mut values: Vec<f64> = components.iter().flat_map(|c| c.eig.values.iter().copied()).collect();
        values.sort_by(f64::total_cmp);
        Ok(Eigensystem { lmax: self.lmax, values, components })
    }
}

/// One independently coupled set of basis indices and its eigendecomposition.
#[derive(Debug, Clone)]
pub struct Component {
    pub indices: Vec<usize>,
    pub eig: DenseEigen,
}

/// Spectral decomposition of an [`OperatorMatrix`].
#[derive(Debug, Clone)]
pub struct Eigensystem {
    lmax: usize,
    /// All eigenvalues, ascending.
    pub values: Vec<f64>,
    pub components: Vec<Component>,
}

impl Eigensystem {
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `f(H) · state`.
    pub fn apply_function(&self, state: &HarmonicState, f: impl Fn(f64) -> Complex64 + Sync) -> Result<HarmonicState> {
        if state.lmax != self.lmax {
            return Err(Error::GridMismatch(format!("state lmax {} vs operator lmax {}", state.lmax, self.lmax)));
        }
        let parts: Vec<Vec<Complex64>> = self
            .components
            .par_iter()
            .map(|c| {
                let x: Vec<Complex64> = c.indices.iter().map(|&i| state.coeffs[i]).collect();
                if x.iter().all(|z| *z == ZERO) {
                    return x;
                }
                let v = &c.eig.vectors;
                let n = x.len();
                let mut y = vec![ZERO; n];
                for k in 0..n {
                    let mut acc = ZERO;
                    for i in 0..n {
                        acc += v[(i, k)].conj() * x[i];
                    }
                    y[k] = acc * f(c.eig.values[k]);
                }
                (0..n).map(|i| (0..n).map(|k| v[(i, k)] * y[k]).sum()).collect()
            })
            .collect();
        let mut out = HarmonicState::zeros(self.lmax);
        for (c, part) in self.components.iter().zip(parts) {
            for (&i, z) in c.indices.iter().zip(part) {
                out.coeffs[i] = z;
            }
        }
        Ok(out)
    }

    /// `max ‖H v − λ v‖` over all eigenpairs.
    pub fn max_residual(&self, op: &OperatorMatrix) -> Result<f64> {
        let mut worst = 0.0f64;
        for c in &self.components {
            for k in 0..c.indices.len() {
                let mut v = HarmonicState::zeros(self.lmax);
                for (i, &idx) in c.indices.iter().enumerate() {
                    v.coeffs[idx] = c.eig.vectors[(i, k)];
                }
                let hv = op.apply(&v)?;
                let lam = c.eig.values[k];
                let r = hv.coeffs.iter().zip(&v.coeffs).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(r);
            }
        }
        Ok(worst)
    }
}

/// Matrix of multiplication by `V`: `⟨Y_{l'm'}, V Y_{lm}⟩`.
///
/// The `φ` integral is taken exactly through the Fourier modes `V̂_k(cos θ)`
/// of `V` along each latitude; the `cos θ` integral uses enough
/// Gauss–Legendre nodes to be exact for bandlimited `V` of degree `d`.
pub fn potential_matrix(basis: &HarmonicBasis, v: &Potential) -> Result<OperatorMatrix> {
    let lmax = basis.lmax();
    let d = v.degree();
    let n_theta = (lmax + (d + 2) / 2 + 1).max(basis.grid().n_theta());
    let n_phi = 2 * d + 2;
    let (nodes, weights) = gauss_legendre(n_theta);
    let tables: Vec<Vec<f64>> =
        nodes.par_iter().map(|&c| legendre_table(lmax, c, (1.0 - c * c).max(0.0).sqrt())).collect();
    let pbar = |i: usize, l: usize, m: i64| {
        let p = tables[i][tri_index(l, m.unsigned_abs() as usize)];
        if m < 0 && m % 2 != 0 {
            -p
        } else {
            p
        }
    };
    // V̂_k(c_i) = (1/n_phi) Σ_j V(θ_i, φ_j) e^{−ikφ_j}, k = −d..=d.
    let di = d as i64;
    let vhat: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|&c| {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let vals: Vec<f64> = (0..n_phi)
                .map(|j| {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                    v.eval([s * phi.cos(), s * phi.sin(), c])
                })
                .collect();
            (-di..=di)
                .map(|k| {
                    vals.iter()
                        .enumerate()
                        .map(|(j, &x)| {
                            x * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * j as i64) as f64 / n_phi as f64)
                        })
                        .sum::<Complex64>()
                        / n_phi as f64
                })
                .collect()
        })
        .collect();
    let vmax = vhat.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
    let active: Vec<i64> = (-di..=di)
        .filter(|&k| vhat.iter().any(|row| row[(k + di) as usize].norm() > 1e-14 * vmax.max(1e-300)))
        .collect();

    let l = lmax as i64;
    let pairs: Vec<(i64, i64)> = (-l..=l)
        .flat_map(|m| active.iter().map(move |&k| (m + k, m)))
        .filter(|&(mp, m)| mp.abs() <= l && mp >= m)
        .collect();
    let computed: Vec<((i64, i64), CMatrix)> = pairs
        .par_iter()
        .map(|&(mp, m)| {
            let k = mp - m;
            let (r, c) = (block_len(lmax, mp), block_len(lmax, m));
            let (op, o) = (mp.unsigned_abs() as usize, m.unsigned_abs() as usize);
            let mut b = CMatrix::zeros(r, c);
            for i in 0..n_theta {
                let w = 2.0 * std::f64::consts::PI * weights[i] * vhat[i][(k + di) as usize];
                let col: Vec<f64> = (0..c).map(|j| pbar(i, j + o, m)).collect();
                for a in 0..r {
                    let left = w * pbar(i, a + op, mp);
                    let row = &mut b.data[a * c..(a + 1) * c];
                    for (x, &p) in row.iter_mut().zip(&col) {
                        *x += left * p;
                    }
                }
            }
            ((mp, m), b)
        })
        .collect();
    let mut op = OperatorMatrix::zeros(lmax, true);
    for ((mp, m), b) in computed {
        if mp == m {
            let sym = CMatrix::from_fn(b.rows, b.cols, |i, j| 0.5 * (b[(i, j)] + b[(j, i)].conj()));
            op.blocks.insert((m, m), sym);
        } else {
            op.blocks.insert((m, mp), b.adjoint());
            op.blocks.insert((mp, m), b);
        }
    }
    Ok(op)
}

/// Block-diagonal part of the potential matrix across clusters.
pub fn quantum_average(basis: &HarmonicBasis, v: &Potential) -> Result<OperatorMatrix> {
    Ok(potential_matrix(basis, v)?.cluster_projection())
}

/// Free energies `ħ² l(l+1)/2`.
pub fn free_hamiltonian(lmax: usize, hbar: f64) -> OperatorMatrix {
    OperatorMatrix::diagonal_in_l(lmax, |l| 0.5 * hbar * hbar * (l * (l + 1)) as f64)
}

/// `P_ε(ħ) = −ħ²Δ/2 + ε² V`.
pub fn hamiltonian_matrix(basis: &HarmonicBasis, hbar: f64, eps: f64, v: &Potential) -> Result<OperatorMatrix> {
    if !(hbar > 0.0) || !(eps >= 0.0) {
        return Err(Error::Domain(format!("need hbar > 0 and eps >= 0, got hbar = {hbar}, eps = {eps}")));
    }
    let free = free_hamiltonian(basis.lmax(), hbar);
    if eps == 0.0 {
        return Ok(free);
    }
    free.combine(1.0, &potential_matrix(basis, v)?, eps * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_potential_is_the_identity() {
        let b = HarmonicBasis::new(6).unwrap();
        let m = potential_matrix(&b, &Potential::constant(1.0)).unwrap().to_dense();
        let id = CMatrix::identity(b.dim());
        let diff = CMatrix::from_fn(b.dim(), b.dim(), |i, j| m[(i, j)] - id[(i, j)]);
        assert!(diff.frobenius() < 1e-13);
    }

    #[test]
    fn x3_selection_rule() {
        let b = HarmonicBasis::new(8).unwrap();
        let m = potential_matrix(&b, &Potential::x3()).unwrap();
        let big = HarmonicBasis::with_grid(8, 20, 40).unwrap();
        let reference = potential_matrix(&big, &Potential::x3()).unwrap();
        for lp in 0..=8usize {
            for l in 0..=8usize {
                for mp in -(lp as i64)..=lp as i64 {
                    for mm in -(l as i64)..=l as i64 {
                        let v = m.get((lp, mp), (l, mm));
                        assert!((v - reference.get((lp, mp), (l, mm))).norm() < 1e-13);
                        if lp.abs_diff(l) != 1 || mp != mm {
                            assert!(v.norm() < 1e-13);
                        }
                    }
                }
            }
        }
        assert!(quantum_average(&b, &Potential::x3()).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn x3_squared_diagonal_matches_legendre_quadrature() {
        let b = HarmonicBasis::new(12).unwrap();
        let m = potential_matrix(&b, &Potential::x3_squared()).unwrap();
        // Oracle: 2π ∫ P̄_l^m(c)² c² dc by a separate 64-node rule.
        let (x, w) = gauss_legendre(64);
        for l in 0..=12usize {
            for mm in 0..=l {
                let want: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&c, &wt)| {
                        let p = legendre_table(12, c, (1.0 - c * c).sqrt())[tri_index(l, mm)];
                        2.0 * PI * wt * p * p * c * c
                    })
                    .sum();
                let got = m.get((l, mm as i64), (l, mm as i64)).re;
                assert!((got - want).abs() < 1e-12);
                let lf = l as f64;
                let closed = 1.0 / 3.0 + (2.0 / 3.0) * (lf * (lf + 1.0) - 3.0 * (mm * mm) as f64) / ((2.0 * lf - 1.0) * (2.0 * lf + 3.0));
                assert!((got - closed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_potential_is_hermitian_and_matches_dense_quadrature() {
        let b = HarmonicBasis::new(6).unwrap();
        let v = Potential::parse_polynomial("x1*x2 + 0.3*x1^3 - x2*x3^2 + 0.5*x3").unwrap();
        let m = potential_matrix(&b, &v).unwrap();
        assert!(m.hermiticity_defect() < 1e-13);
        // Brute force ⟨Y_a, V Y_b⟩ on a generous grid.
        let big = HarmonicBasis::with_grid(6, 24, 48).unwrap();
        let g = big.grid();
        for (a, bb) in [(3usize, 7usize), (10, 20), (5, 5), (30, 12)] {
            let ya = big.synthesize(&HarmonicState::basis_vector(6, super::super::legendre::degree_order(a).0, super::super::legendre::degree_order(a).1)).unwrap();
            let (lb, mb) = super::super::legendre::degree_order(bb);
            let yb = big.synthesize(&HarmonicState::basis_vector(6, lb, mb)).unwrap();
            let mut acc = ZERO;
            for i in 0..g.n_theta() {
                for j in 0..g.n_phi {
                    let k = i * g.n_phi + j;
                    acc += ya.values[k].conj() * v.eval(g.point(i, j)) * yb.values[k] * g.area_weight(i);
                }
            }
            let (la, ma) = super::super::legendre::degree_order(a);
            assert!((m.get((la, ma), (lb, mb)) - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn averaging_commutes_with_the_free_hamiltonian() {
        let b = HarmonicBasis::new(10).unwrap();
        let v = Potential::parse_polynomial("x3^2 + x1*x2").unwrap();
        let avg = quantum_average(&b, &v).unwrap();
        assert!(avg.commutator_with_diagonal(|l| (l * (l + 1)) as f64 / 2.0) < 1e-14);
        assert_eq!(avg.cluster_projection(), avg);
        let full = potential_matrix(&b, &v).unwrap();
        assert!(full.commutator_with_diagonal(|l| (l * (l + 1)) as f64 / 2.0) > 1e-3);
    }

    #[test]
    fn hamiltonian_trace_and_spectrum() {
        let b = HarmonicBasis::new(8).unwrap();
        let hbar = 0.1;
        let h0 = hamiltonian_matrix(&b, hbar, 0.0, &Potential::x3_squared()).unwrap();
        let e = h0.eig().unwrap();
        let mut expected: Vec<f64> = (0..=8usize).flat_map(|l| std::iter::repeat_n(0.5 * hbar * hbar * (l * (l + 1)) as f64, 2 * l + 1)).collect();
        expected.sort_by(f64::total_cmp);
        assert!(e.values.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-15));
        let eps = 0.3;
        let v = Potential::parse_polynomial("x3^2 + 0.2*x1").unwrap();
        let h = hamiltonian_matrix(&b, hbar, eps, &v).unwrap();
        let tv = potential_matrix(&b, &v).unwrap().trace();
        assert!((h.trace() - (h0.trace() + eps * eps * tv)).norm() < 1e-12);
        assert!(h.hermiticity_defect() < 1e-12);
        let es = h.eig().unwrap();
        assert!(es.max_residual(&h).unwrap() < 1e-9 * h.frobenius());
    }
}
