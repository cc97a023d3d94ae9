//! Small dense complex matrices: the verification oracle behind every
//! encoding and Trotter claim in this crate.
//!
//! Dimensions stay modest (≤ 2^14), so plain row-major storage, cubic
//! multiplies, and a cyclic Jacobi eigensolver are simpler and more than fast
//! enough; no external linear-algebra backend is worth the dependency.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const I1: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self, c: Complex64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn add_assign_scaled(&mut self, other: &CMatrix, c: Complex64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * c;
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &other.data[l * n..(l + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |A[i][j] − conj(A[j][i])|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    /// Keep only rows/columns in `idx` (computational-basis subspace).
    pub fn restrict_indices(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Full eigensystem of a Hermitian matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues ascending and the unitary whose columns are the
    /// matching eigenvectors.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, CMatrix) {
        let n = self.dim;
        let mut a = self.clone();
        // Symmetrize roundoff so the rotation angles stay well-defined.
        for i in 0..n {
            for j in 0..n {
                let avg = 0.5 * (a.data[i * n + j] + a.data[j * n + i].conj());
                a.data[i * n + j] = avg;
                a.data[j * n + i] = avg.conj();
            }
        }
        let mut v = Self::identity(n);
        let scale = self.frobenius_norm().max(1e-300);
        for _sweep in 0..60 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a.data[i * n + j].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-14 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.data[p * n + q];
                    let mag = apq.norm();
                    if mag <= 1e-300 {
                        continue;
                    }
                    let phase = apq / mag;
                    let app = a.data[p * n + p].re;
                    let aqq = a.data[q * n + q].re;
                    let theta = 0.5 * (2.0 * mag).atan2(app - aqq);
                    let c = theta.cos();
                    let s = theta.sin();
                    let sp = s * phase; // s·e^{iφ}
                    // Columns: col_p ← c·col_p + s e^{−iφ}·col_q,
                    //          col_q ← −s e^{iφ}·col_p + c·col_q.
                    for r in 0..n {
                        let arp = a.data[r * n + p];
                        let arq = a.data[r * n + q];
                        a.data[r * n + p] = c * arp + sp.conj() * arq;
                        a.data[r * n + q] = -sp * arp + c * arq;
                        let vrp = v.data[r * n + p];
                        let vrq = v.data[r * n + q];
                        v.data[r * n + p] = c * vrp + sp.conj() * vrq;
                        v.data[r * n + q] = -sp * vrp + c * vrq;
                    }
                    // Rows: row_p ← c·row_p + s e^{iφ}·row_q, etc.
                    for col in 0..n {
                        let apc = a.data[p * n + col];
                        let aqc = a.data[q * n + col];
                        a.data[p * n + col] = c * apc + sp * aqc;
                        a.data[q * n + col] = -sp.conj() * apc + c * aqc;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let eigs: Vec<f64> = (0..n).map(|i| a.data[i * n + i].re).collect();
        order.sort_by(|&i, &j| eigs[i].partial_cmp(&eigs[j]).unwrap());
        let sorted_eigs: Vec<f64> = order.iter().map(|&i| eigs[i]).collect();
        let mut vecs = Self::zeros(n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                vecs[(r, new_col)] = v[(r, old_col)];
            }
        }
        (sorted_eigs, vecs)
    }

    /// V·f(Λ)·V† for Hermitian self.
    pub fn hermitian_func(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let (eigs, vecs) = self.hermitian_eigen();
        let n = self.dim;
        let mut out = Self::zeros(n);
        for (q, &lam) in eigs.iter().enumerate() {
            let fq = f(lam);
            if fq.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = vecs[(i, q)] * fq;
                for j in 0..n {
                    out[(i, j)] += vi * vecs[(j, q)].conj();
                }
            }
        }
        out
    }

    /// e^{−i·t·H} for Hermitian self.
    pub fn expi(&self, t: f64) -> CMatrix {
        self.hermitian_func(|lam| (-I1 * lam * t).exp())
    }

    /// Spectral norm. Hermitian inputs use max |eigenvalue| directly;
    /// anything else goes through A†A.
    pub fn spectral_norm(&self) -> f64 {
        if self.hermiticity_defect() <= 1e-12 * self.frobenius_norm().max(1.0) {
            let (eigs, _) = self.hermitian_eigen();
            eigs.iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
        } else {
            let gram = self.dagger().matmul(self);
            let (eigs, _) = gram.hermitian_eigen();
            eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// ‖AB − BA‖ (spectral).
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    a.matmul(b).sub(&b.matmul(a)).spectral_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pauli_x() -> CMatrix {
        CMatrix::from_fn(2, |i, j| {
            if i != j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn random_hermitian(n: usize, rng: &mut StdRng) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn eigen_pauli_x() {
        let (eigs, vecs) = pauli_x().hermitian_eigen();
        assert_relative_eq!(eigs[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(eigs[1], 1.0, max_relative = 1e-12);
        // Columns are unit eigenvectors.
        for q in 0..2 {
            let v: Vec<Complex64> = (0..2).map(|i| vecs[(i, q)]).collect();
            let av = pauli_x().apply(&v);
            for i in 0..2 {
                assert!((av[i] - eigs[q] * v[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_residuals_random() {
        let mut rng = StdRng::seed_from_u64(7);
        for &n in &[3usize, 8, 16] {
            let h = random_hermitian(n, &mut rng);
            let (eigs, vecs) = h.hermitian_eigen();
            for q in 0..n {
                let v: Vec<Complex64> = (0..n).map(|i| vecs[(i, q)]).collect();
                let hv = h.apply(&v);
                let resid: f64 = hv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - eigs[q] * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(resid < 1e-11, "residual {resid} at n={n}, q={q}");
            }
            // Unitarity of the eigenvector matrix.
            let gram = vecs.dagger().matmul(&vecs);
            assert!(gram.sub(&CMatrix::identity(n)).max_abs_entry() < 1e-11);
        }
    }

    #[test]
    fn expi_matches_closed_form_for_pauli_x() {
        let t = 0.37;
        let u = pauli_x().expi(t);
        // e^{−iXt} = cos t·I − i sin t·X
        let expect = CMatrix::identity(2)
            .scale(Complex64::new(t.cos(), 0.0))
            .add(&pauli_x().scale(-I1 * t.sin()));
        assert!(u.sub(&expect).max_abs_entry() < 1e-13);
    }

    #[test]
    fn expi_is_unitary() {
        let mut rng = StdRng::seed_from_u64(11);
        let h = random_hermitian(6, &mut rng);
        let u = h.expi(0.83);
        let gram = u.dagger().matmul(&u);
        assert!(gram.sub(&CMatrix::identity(6)).max_abs_entry() < 1e-12);
    }

    #[test]
    fn spectral_norm_hermitian_and_general() {
        let diag = CMatrix::from_real_diag(&[1.0, -3.0, 2.0]);
        assert_relative_eq!(diag.spectral_norm(), 3.0, max_relative = 1e-12);
        // Non-hermitian: single Jordan-ish block [[0,2],[0,0]] has norm 2.
        let mut n = CMatrix::zeros(2);
        n[(0, 1)] = Complex64::new(2.0, 0.0);
        assert_relative_eq!(n.spectral_norm(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn kron_and_restrict() {
        let z = CMatrix::from_real_diag(&[1.0, -1.0]);
        let zz = z.kron(&z);
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        let sub = zz.restrict_indices(&[1, 2]);
        assert_eq!(sub.dim(), 2);
        assert_relative_eq!(sub[(0, 0)].re, -1.0);
    }

    #[test]
    fn commutator_of_commuting_is_zero() {
        let a = CMatrix::from_real_diag(&[1.0, 2.0, 3.0]);
        let b = CMatrix::from_real_diag(&[5.0, -1.0, 0.5]);
        assert!(commutator_norm(&a, &b) < 1e-14);
    }
}
