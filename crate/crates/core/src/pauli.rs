//! Weighted Pauli strings with an exact dense realization.
//!
//! Every Hamiltonian this crate builds is a [`PauliSum`]; every claim about
//! one (norms, commutators, encodings, Trotter errors) is checked by turning
//! it into a [`CMatrix`]. The dense cap of 14 qubits keeps that honest and
//! fast; larger requests fail loudly instead of silently degrading.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::dense::{CMatrix, I1};
use crate::error::{Error, Result};

pub const DENSE_QUBIT_CAP: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliOp {
    X,
    Y,
    Z,
}

impl PauliOp {
    fn symbol(self) -> char {
        match self {
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// One product of Pauli factors with a real weight. Factors are sorted by
/// qubit index with no repeats; an empty factor list is a scalar multiple of
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub factors: Vec<(usize, PauliOp)>,
}

/// Real-weighted sum of Pauli strings on `n_qubits` qubits, duplicates merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<Vec<(usize, PauliOp)>, f64>,
}

/// Which part of the Hilbert space a norm is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    Full,
    /// Basis states with Hamming weight exactly 1 in each consecutive block
    /// of `mode_width` qubits (the one-hot unary encoding).
    Unary { mode_width: usize },
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(factors, &coeff)| PauliTerm {
            coeff,
            factors: factors.clone(),
        })
    }

    /// Add `coeff · Π factors`, merging with an existing identical string.
    pub fn push(&mut self, coeff: f64, factors: Vec<(usize, PauliOp)>) -> Result<()> {
        for pair in factors.windows(2) {
            if pair[0].0 >= pair[1].0 {
                return Err(Error::UnsortedTerm);
            }
        }
        if let Some(&(q, _)) = factors.last() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange(q, self.n_qubits));
            }
        }
        let slot = self.terms.entry(factors.clone()).or_insert(0.0);
        *slot += coeff;
        // Drop exact cancellations so term counts stay meaningful.
        if *slot == 0.0 {
            self.terms.remove(&factors);
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &PauliSum) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::QubitOutOfRange(other.n_qubits - 1, self.n_qubits));
        }
        for t in other.terms() {
            self.push(t.coeff, t.factors)?;
        }
        Ok(())
    }

    pub fn scaled(&self, f: f64) -> PauliSum {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= f;
        }
        out
    }

    /// Σ |coeff| over stored strings (identity included).
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Exact dense matrix Σ coeff·(⊗ factors), qubit q ↔ bit q of the index.
    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(Error::TooManyQubits(self.n_qubits, DENSE_QUBIT_CAP));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = CMatrix::zeros(dim);
        for (factors, &coeff) in &self.terms {
            for b in 0..dim {
                let mut target = b;
                let mut phase = Complex64::new(coeff, 0.0);
                for &(q, op) in factors {
                    let bit = (b >> q) & 1;
                    match op {
                        PauliOp::X => target ^= 1 << q,
                        PauliOp::Y => {
                            target ^= 1 << q;
                            phase *= if bit == 0 { I1 } else { -I1 };
                        }
                        PauliOp::Z => {
                            if bit == 1 {
                                phase = -phase;
                            }
                        }
                    }
                }
                m[(target, b)] += phase;
            }
        }
        Ok(m)
    }

    pub fn spectral_norm(&self, subspace: Subspace) -> Result<f64> {
        Ok(self.realize(subspace)?.spectral_norm())
    }

    /// Dense matrix restricted to the requested subspace.
    pub fn realize(&self, subspace: Subspace) -> Result<CMatrix> {
        let dense = self.to_dense()?;
        match subspace {
            Subspace::Full => Ok(dense),
            Subspace::Unary { mode_width } => {
                let idx = unary_basis_indices(self.n_qubits, mode_width);
                Ok(dense.restrict_indices(&idx))
            }
        }
    }

    /// One line per term: `coeff q:P q:P …`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (factors, coeff) in &self.terms {
            let _ = write!(out, "{coeff}");
            for &(q, op) in factors {
                let _ = write!(out, " {q}:{}", op.symbol());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, n_qubits: usize) -> Result<Self> {
        let mut sum = PauliSum::new(n_qubits);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let coeff: f64 = parts
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::PauliParse(format!("bad coefficient on line {lineno}")))?;
            let mut factors = Vec::new();
            for tok in parts {
                let (q, p) = tok
                    .split_once(':')
                    .ok_or_else(|| Error::PauliParse(format!("bad factor `{tok}`")))?;
                let q: usize = q
                    .parse()
                    .map_err(|_| Error::PauliParse(format!("bad qubit `{q}`")))?;
                let op = match p {
                    "X" => PauliOp::X,
                    "Y" => PauliOp::Y,
                    "Z" => PauliOp::Z,
                    _ => return Err(Error::PauliParse(format!("bad pauli `{p}`"))),
                };
                factors.push((q, op));
            }
            factors.sort_by_key(|&(q, _)| q);
            sum.push(coeff, factors)?;
        }
        Ok(sum)
    }
}

/// ‖[A, B]‖ on the chosen subspace. For the unary case both operators must
/// preserve the subspace (true of every occupation-basis Hamiltonian here),
/// so restriction before multiplication is exact.
pub fn commutator_norm(a: &PauliSum, b: &PauliSum, subspace: Subspace) -> Result<f64> {
    let da = a.realize(subspace)?;
    let db = b.realize(subspace)?;
    Ok(crate::dense::commutator_norm(&da, &db))
}

/// Basis indices with exactly one set bit per `mode_width`-qubit block,
/// enumerated with the first block's level as the most significant digit
/// (matching row-major tensor products of per-mode matrices).
pub fn unary_basis_indices(n_qubits: usize, mode_width: usize) -> Vec<usize> {
    assert!(mode_width >= 1 && n_qubits.is_multiple_of(mode_width));
    let n_modes = n_qubits / mode_width;
    let mut idx = vec![0usize];
    for mode in 0..n_modes {
        let mut next = Vec::with_capacity(idx.len() * mode_width);
        for &base in &idx {
            for level in 0..mode_width {
                next.push(base | (1usize << (mode * mode_width + level)));
            }
        }
        idx = next;
    }
    idx
}
