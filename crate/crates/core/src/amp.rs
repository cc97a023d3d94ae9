//! Amplitude-basis Hamiltonian: each site carries a 2k-point field register,
//! the conjugate momentum is defined by Fourier conjugation, and the full
//! operator is assembled densely from site-local blocks plus nearest-neighbor
//! hop terms on the periodic lattice (a single site is its own neighbor).
//!
//! The centered DFT here is F̃ = S·F·S† with S the cyclic shift aligning
//! field value 0 with row 0. Unlike the vanilla DFT, F̃² equals the
//! field-negation permutation exactly, which makes Π² commute with that
//! permutation and keeps the even/odd sector split exact on the symmetric
//! grid subset.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::lattice::{AmplitudeCutoffs, LatticeParams};
use crate::pauli::DENSE_QUBIT_CAP;

/// Magic prefix of the binary dense-operator file format.
pub const DENSE_MAGIC: &[u8; 8] = b"AMPDNS01";

/// Coefficients of the four structural pieces: c_pi·Π² + c_phi2·Φ² +
/// c_phi4·Φ⁴ per site, −c_hop·Φ(x)Φ(y) per directed edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpCoefficients {
    pub pi2: f64,
    pub phi2: f64,
    pub phi4: f64,
    pub hop: f64,
}

impl AmpCoefficients {
    /// The scaled-variable Hamiltonian: ½Π² + ½(M²+d+1)Φ² + (Λ/4!)Φ⁴ with
    /// unit-weight hops.
    pub fn physical(params: &LatticeParams) -> Self {
        let m2 = params.scaled_mass * params.scaled_mass;
        AmpCoefficients {
            pi2: 0.5,
            phi2: 0.5 * (m2 + params.d as f64 + 1.0),
            phi4: params.scaled_coupling / 24.0,
            hop: 1.0,
        }
    }
}

/// Single-site operator blocks on the 2k-point field register.
#[derive(Debug, Clone)]
pub struct SiteBlocks {
    pub phi: CMatrix,
    pub phi2: CMatrix,
    pub phi4: CMatrix,
    pub pi: CMatrix,
    pub pi2: CMatrix,
    /// The value-centered DFT used to define `pi` and `pi2`.
    pub dft: CMatrix,
}

impl SiteBlocks {
    pub fn new(cutoffs: &AmplitudeCutoffs) -> Self {
        let w = 2 * cutoffs.k;
        let vals: Vec<f64> = (0..w).map(|b| cutoffs.field_value(b)).collect();
        let phi = CMatrix::from_real_diag(&vals);
        let phi2 = CMatrix::from_real_diag(&vals.iter().map(|v| v * v).collect::<Vec<_>>());
        let phi4 =
            CMatrix::from_real_diag(&vals.iter().map(|v| v.powi(4)).collect::<Vec<_>>());
        let dft = value_centered_dft(cutoffs.k);
        // Conjugate grid spacing: Δφ·Δπ = 2π/(2k). At the self-dual width
        // Δφ = sqrt(π/k) the two grids coincide.
        let dpi = std::f64::consts::PI / (cutoffs.k as f64 * cutoffs.delta_phi);
        let ratio = dpi / cutoffs.delta_phi;
        let pvals: Vec<f64> = vals.iter().map(|v| v * ratio).collect();
        let dftd = dft.dagger();
        let pi = dftd.matmul(&CMatrix::from_real_diag(&pvals)).matmul(&dft);
        let pi2 = dftd
            .matmul(&CMatrix::from_real_diag(
                &pvals.iter().map(|p| p * p).collect::<Vec<_>>(),
            ))
            .matmul(&dft);
        SiteBlocks {
            phi,
            phi2,
            phi4,
            pi,
            pi2,
            dft,
        }
    }
}

/// Unitary 2k-point DFT recentered on the field-value grid: F̃ = S·F·S†,
/// where S|b⟩ = |(b−k+1) mod 2k⟩ moves the value-0 bin to row 0 and F is the
/// forward transform with kernel e^{−2πi·jl/(2k)}/sqrt(2k).
pub fn value_centered_dft(k: usize) -> CMatrix {
    let n = 2 * k;
    let norm = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, |r, c| {
        // With S a permutation, (S†·F·S)[r][c] = F[σ(r)][σ(c)]; the shifted
        // index layout is the standard frequency ordering 0, 1, …, k, −k+1,
        // …, −1 of the field values.
        let (j, l) = (to_frequency_order(r, k, n), to_frequency_order(c, k, n));
        let angle = -2.0 * std::f64::consts::PI * (j * l) as f64 / n as f64;
        Complex64::new(angle.cos(), angle.sin()) * norm
    })
}

fn to_frequency_order(r: usize, k: usize, n: usize) -> usize {
    (r + n - (k - 1)) % n
}

/// The assembled dense Hamiltonian with its reusable building blocks.
#[derive(Debug, Clone)]
pub struct AmpHamiltonian {
    pub dense: CMatrix,
    pub site_blocks: SiteBlocks,
    pub coeffs: AmpCoefficients,
    /// Directed nearest-neighbor edges, d·|Ω| of them.
    pub edges: Vec<(usize, usize)>,
    pub cutoffs: AmplitudeCutoffs,
    pub params: LatticeParams,
    /// Coefficient 1-norm of the equal-weight LCU costing model:
    /// |Ω|·[k⁴Δφ⁴Λ/4! + k²Δφ²(M²+3d+3/2)].
    pub coeff_1norm: f64,
}

impl AmpHamiltonian {
    pub fn n_qubits(&self) -> usize {
        self.params.omega * self.cutoffs.qubits_per_site()
    }
}

/// Directed edges (x, x+aî) of the periodic lattice, site indices row-major
/// with coordinate 0 slowest. At P = 1 each site pairs with itself.
pub fn directed_edges(d: usize, p_sites: usize) -> Vec<(usize, usize)> {
    let n_sites = p_sites.pow(d as u32);
    let mut edges = Vec::with_capacity(d * n_sites);
    for s in 0..n_sites {
        for axis in 0..d {
            let stride = p_sites.pow((d - 1 - axis) as u32);
            let coord = (s / stride) % p_sites;
            let t = s - coord * stride + ((coord + 1) % p_sites) * stride;
            edges.push((s, t));
        }
    }
    edges
}

pub(crate) fn embed(op: &CMatrix, site: usize, n_sites: usize) -> CMatrix {
    let mut out = CMatrix::identity(1);
    for s in 0..n_sites {
        if s == site {
            out = out.kron(op);
        } else {
            out = out.kron(&CMatrix::identity(op.dim()));
        }
    }
    out
}

/// Base-2k digit of basis index `i` at `site` (site 0 slowest).
pub(crate) fn site_digit(i: usize, site: usize, n_sites: usize, width: usize) -> usize {
    (i / width.pow((n_sites - 1 - site) as u32)) % width
}

/// Assemble the dense operator for arbitrary structural coefficients.
pub fn assemble_dense(
    coeffs: &AmpCoefficients,
    d: usize,
    p_sites: usize,
    cutoffs: &AmplitudeCutoffs,
) -> Result<(CMatrix, SiteBlocks)> {
    let n_sites = p_sites.pow(d as u32);
    let qubits = n_sites * cutoffs.qubits_per_site();
    if qubits > DENSE_QUBIT_CAP {
        return Err(Error::TooManyQubits(qubits, DENSE_QUBIT_CAP));
    }
    let blocks = SiteBlocks::new(cutoffs);
    let width = 2 * cutoffs.k;
    let dim = width.pow(n_sites as u32);

    let mut site_op = blocks.pi2.scale(Complex64::new(coeffs.pi2, 0.0));
    site_op.add_assign_scaled(&blocks.phi2, Complex64::new(coeffs.phi2, 0.0));
    site_op.add_assign_scaled(&blocks.phi4, Complex64::new(coeffs.phi4, 0.0));

    let mut h = CMatrix::zeros(dim);
    for s in 0..n_sites {
        h.add_assign_scaled(&embed(&site_op, s, n_sites), Complex64::new(1.0, 0.0));
    }
    if coeffs.hop != 0.0 {
        for (x, y) in directed_edges(d, p_sites) {
            for i in 0..dim {
                let vx = cutoffs.field_value(site_digit(i, x, n_sites, width));
                let vy = cutoffs.field_value(site_digit(i, y, n_sites, width));
                h[(i, i)] -= Complex64::new(coeffs.hop * vx * vy, 0.0);
            }
        }
    }
    Ok((h, blocks))
}

/// Build the physical amplitude-basis Hamiltonian for the given lattice.
pub fn build_amp_hamiltonian(
    params: &LatticeParams,
    cutoffs: &AmplitudeCutoffs,
) -> Result<AmpHamiltonian> {
    let coeffs = AmpCoefficients::physical(params);
    let (dense, site_blocks) = assemble_dense(&coeffs, params.d, params.p_sites, cutoffs)?;
    let edges = directed_edges(params.d, params.p_sites);
    Ok(AmpHamiltonian {
        dense,
        site_blocks,
        coeffs,
        edges,
        cutoffs: *cutoffs,
        params: *params,
        coeff_1norm: equal_weight_coeff_1norm(params, cutoffs),
    })
}

/// Coefficient 1-norm of the equal-weight LCU decomposition of the full
/// Hamiltonian: |Ω|·[k⁴Δφ⁴Λ/4! + k²Δφ²(M²+3d+3/2)].
pub fn equal_weight_coeff_1norm(params: &LatticeParams, cutoffs: &AmplitudeCutoffs) -> f64 {
    let m2 = params.scaled_mass * params.scaled_mass;
    let kd = cutoffs.k as f64 * cutoffs.delta_phi;
    let kd2 = kd * kd;
    params.omega as f64
        * (kd2 * kd2 * params.scaled_coupling / 24.0
            + kd2 * (m2 + 3.0 * params.d as f64 + 1.5))
}

/// Largest field value an energy-E_max state can reach with tail probability
/// below ε: (ε·E_max / (C·|Ω|))^{1/4} with C = M² + 3d + Λ/4! + 3/2.
pub fn phi_max_for_energy(
    e_max: f64,
    tail_prob: f64,
    params: &LatticeParams,
) -> Result<f64> {
    if e_max <= 0.0 {
        return Err(Error::NonPositiveEnergy(e_max));
    }
    if !(0.0..1.0).contains(&tail_prob) || tail_prob == 0.0 {
        return Err(Error::BadTailProbability(tail_prob));
    }
    let m2 = params.scaled_mass * params.scaled_mass;
    let c = m2 + 3.0 * params.d as f64 + params.scaled_coupling / 24.0 + 1.5;
    Ok((tail_prob * e_max / (c * params.omega as f64)).powf(0.25))
}

/// Parity of a Z₂ sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Field-negation machinery: the per-site permutation b ↦ 2k−2−b (fixing the
/// partnerless top bin b = 2k−1) and the sector sign.
#[derive(Debug, Clone)]
pub struct SectorProjector {
    permutation: Vec<usize>,
    sign: f64,
}

impl SectorProjector {
    pub fn new(cutoffs: &AmplitudeCutoffs, parity: Parity) -> Self {
        let w = 2 * cutoffs.k;
        let permutation = (0..w).map(|b| if b == w - 1 { b } else { w - 2 - b }).collect();
        SectorProjector {
            permutation,
            sign: match parity {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
            },
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    /// The single-site negation permutation as a dense matrix.
    pub fn site_matrix(&self) -> CMatrix {
        let w = self.permutation.len();
        CMatrix::from_fn(w, |r, c| {
            if r == self.permutation[c] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// U ⊗ … ⊗ U over all sites.
    pub fn global_matrix(&self, n_sites: usize) -> CMatrix {
        let u = self.site_matrix();
        let mut out = CMatrix::identity(1);
        for _ in 0..n_sites {
            out = out.kron(&u);
        }
        out
    }

    /// (I + sign·U^{⊗Ω})/2.
    pub fn projector(&self, n_sites: usize) -> CMatrix {
        let mut p = self.global_matrix(n_sites).scale(Complex64::new(0.5 * self.sign, 0.0));
        let dim = p.dim();
        p.add_assign_scaled(&CMatrix::identity(dim), Complex64::new(0.5, 0.0));
        p
    }
}

/// Even and odd eigenvalues of the Hamiltonian compressed onto the symmetric
/// grid subset (every site below the partnerless top bin), each sorted
/// ascending. Their union is the full spectrum of that compression.
pub fn sector_split(h: &AmpHamiltonian) -> Result<(Vec<f64>, Vec<f64>)> {
    sector_split_dense(&h.dense, &h.cutoffs, h.params.omega)
}

pub fn sector_split_dense(
    dense: &CMatrix,
    cutoffs: &AmplitudeCutoffs,
    n_sites: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let width = 2 * cutoffs.k;
    let dim = dense.dim();

    // Symmetric subset: indices whose every site digit has a negation
    // partner on the grid.
    let keep: Vec<usize> = (0..dim)
        .filter(|&i| (0..n_sites).all(|s| site_digit(i, s, n_sites, width) != width - 1))
        .collect();
    let hs = dense.restrict_indices(&keep);
    let ds = keep.len();

    let flip = |i: usize| -> usize {
        (0..n_sites).fold(0, |acc, s| {
            let b = site_digit(i, s, n_sites, width);
            acc * width + (width - 2 - b)
        })
    };
    let pos_of: std::collections::BTreeMap<usize, usize> =
        keep.iter().enumerate().map(|(p, &i)| (i, p)).collect();

    // Orthogonal change of basis: even combinations first, odd after.
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mut even_cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut odd_cols: Vec<Vec<(usize, f64)>> = Vec::new();
    for (p, &i) in keep.iter().enumerate() {
        let q = pos_of[&flip(i)];
        match q.cmp(&p) {
            std::cmp::Ordering::Equal => even_cols.push(vec![(p, 1.0)]),
            std::cmp::Ordering::Greater => {
                even_cols.push(vec![(p, inv), (q, inv)]);
                odd_cols.push(vec![(p, inv), (q, -inv)]);
            }
            std::cmp::Ordering::Less => {}
        }
    }
    let n_even = even_cols.len();
    let mut w = CMatrix::zeros(ds);
    for (col, entries) in even_cols.iter().chain(odd_cols.iter()).enumerate() {
        for &(row, v) in entries {
            w[(row, col)] = Complex64::new(v, 0.0);
        }
    }

    let t = w.dagger().matmul(&hs).matmul(&w);
    let even_idx: Vec<usize> = (0..n_even).collect();
    let odd_idx: Vec<usize> = (n_even..ds).collect();
    let (mut even, _) = t.restrict_indices(&even_idx).hermitian_eigen();
    let (mut odd, _) = t.restrict_indices(&odd_idx).hermitian_eigen();
    even.sort_by(f64::total_cmp);
    odd.sort_by(f64::total_cmp);
    Ok((even, odd))
}

/// T and ancilla cost of one controlled field negation across the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlledNegationCost {
    pub t_per_site: u64,
    pub t_total: u64,
    /// Ancillas with serial reuse across sites: (m² + m − 4)/2, m = log₂(2k).
    pub ancilla_reused: u64,
    /// Ancillas for fully parallel execution; meaningful for k ≥ 4.
    pub ancilla_parallel: i64,
}

pub fn controlled_negation_cost(cutoffs: &AmplitudeCutoffs, omega: usize) -> ControlledNegationCost {
    let m = cutoffs.qubits_per_site() as u64;
    let t_per_site = 2 * m * (m + 1) - 8;
    let l = (m - 1) as i64;
    ControlledNegationCost {
        t_per_site,
        t_total: omega as u64 * t_per_site,
        ancilla_reused: (m * m + m - 4) / 2,
        ancilla_parallel: omega as i64 * (l * l + l - 6) / 2 + 1,
    }
}

/// Write a dense operator as 16-byte header (magic, dim as u64 LE) followed
/// by column-major complex doubles (re, im), little-endian.
pub fn export_dense(m: &CMatrix, mut w: impl Write) -> io::Result<()> {
    w.write_all(DENSE_MAGIC)?;
    w.write_all(&(m.dim() as u64).to_le_bytes())?;
    for col in 0..m.dim() {
        for row in 0..m.dim() {
            let z = m[(row, col)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn import_dense(mut r: impl Read) -> io::Result<CMatrix> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != DENSE_MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "bad dense-operator magic",
        ));
    }
    let dim = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; dim * dim * 16];
    r.read_exact(&mut buf)?;
    let mut m = CMatrix::zeros(dim);
    for col in 0..dim {
        for row in 0..dim {
            let off = (col * dim + row) * 16;
            let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
            m[(row, col)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(lambda: f64, p_sites: usize) -> LatticeParams {
        LatticeParams::new(1.0, lambda, 1.0, 1, p_sites).unwrap()
    }

    #[test]
    fn centered_dft_is_unitary_and_squares_to_negation() {
        for k in [2usize, 4, 8] {
            let f = value_centered_dft(k);
            let dim = 2 * k;
            let id_defect = f.matmul(&f.dagger()).sub(&CMatrix::identity(dim)).max_abs_entry();
            assert!(id_defect < 1e-12, "k={k}: unitarity defect {id_defect:.2e}");
            // F̃² is the field-negation permutation, fixing the top bin.
            let u = SectorProjector::new(&AmplitudeCutoffs::harmonic(k).unwrap(), Parity::Even)
                .site_matrix();
            let sq_defect = f.matmul(&f).sub(&u).max_abs_entry();
            assert!(sq_defect < 1e-12, "k={k}: F̃² defect {sq_defect:.2e}");
        }
    }

    #[test]
    fn momentum_square_is_fourier_conjugate_of_field_square() {
        let cut = AmplitudeCutoffs::harmonic(8).unwrap();
        let b = SiteBlocks::new(&cut);
        // At the self-dual width the conjugate grid equals the field grid.
        let want = b.dft.dagger().matmul(&b.phi2).matmul(&b.dft);
        assert!(b.pi2.sub(&want).max_abs_entry() < 1e-12);
        let pi_sq = b.pi.matmul(&b.pi);
        assert!(b.pi2.sub(&pi_sq).max_abs_entry() < 1e-12);
        // Π and Φ share a spectrum (unitary conjugates of the same diagonal).
        let (mut pe, _) = b.pi.hermitian_eigen();
        let (mut fe, _) = b.phi.hermitian_eigen();
        pe.sort_by(f64::total_cmp);
        fe.sort_by(f64::total_cmp);
        for (a, bb) in pe.iter().zip(&fe) {
            assert_abs_diff_eq!(a, bb, epsilon = 1e-10);
        }
    }

    #[test]
    fn free_single_site_is_harmonic_ladder() {
        // One periodic site in d=1 hops onto itself, so the quadratic
        // coefficient collapses to ½M² and the spectrum is the M=1 ladder.
        let h = build_amp_hamiltonian(&params(0.0, 1), &AmplitudeCutoffs::harmonic(8).unwrap())
            .unwrap();
        let (mut e, _) = h.dense.hermitian_eigen();
        e.sort_by(f64::total_cmp);
        let gaps: Vec<f64> = (0..3).map(|i| e[i + 1] - e[i]).collect();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (gaps[i] / gaps[j] - 1.0).abs() < 0.05,
                    "gaps {gaps:?} not uniform within 5%"
                );
            }
        }
        assert!((gaps[1] / gaps[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn self_dual_hamiltonian_is_fourier_invariant() {
        // H = ½Π² + ½Φ² maps to itself under the centered DFT.
        let cut = AmplitudeCutoffs::harmonic(2).unwrap();
        let coeffs = AmpCoefficients {
            pi2: 0.5,
            phi2: 0.5,
            phi4: 0.0,
            hop: 0.0,
        };
        let (h, blocks) = assemble_dense(&coeffs, 1, 1, &cut).unwrap();
        let conj = blocks.dft.matmul(&h).matmul(&blocks.dft.dagger());
        assert!(conj.sub(&h).max_abs_entry() < 1e-12);
    }

    #[test]
    fn dense_matches_digitwise_oracle() {
        // Independent assembly: matrix elements from base-2k digit
        // decomposition, no tensor products.
        let pr = params(1.0, 2);
        let cut = AmplitudeCutoffs::harmonic(2).unwrap();
        let h = build_amp_hamiltonian(&pr, &cut).unwrap();
        let blocks = SiteBlocks::new(&cut);
        let coeffs = AmpCoefficients::physical(&pr);
        let mut site_op = blocks.pi2.scale(Complex64::new(coeffs.pi2, 0.0));
        site_op.add_assign_scaled(&blocks.phi2, Complex64::new(coeffs.phi2, 0.0));
        site_op.add_assign_scaled(&blocks.phi4, Complex64::new(coeffs.phi4, 0.0));
        let w = 2 * cut.k;
        let n_sites = pr.omega;
        let edges = directed_edges(pr.d, pr.p_sites);
        let oracle = CMatrix::from_fn(w.pow(n_sites as u32), |r, c| {
            let rd: Vec<usize> = (0..n_sites).map(|s| site_digit(r, s, n_sites, w)).collect();
            let cd: Vec<usize> = (0..n_sites).map(|s| site_digit(c, s, n_sites, w)).collect();
            let mut out = Complex64::new(0.0, 0.0);
            for s in 0..n_sites {
                if (0..n_sites).all(|s2| s2 == s || rd[s2] == cd[s2]) {
                    out += site_op[(rd[s], cd[s])];
                }
            }
            if r == c {
                for &(x, y) in &edges {
                    out -= Complex64::new(
                        coeffs.hop * cut.field_value(rd[x]) * cut.field_value(rd[y]),
                        0.0,
                    );
                }
            }
            out
        });
        assert!(h.dense.sub(&oracle).max_abs_entry() < 1e-12);
        assert!(h.dense.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn oversized_lattice_is_rejected() {
        let pr = params(1.0, 4);
        match build_amp_hamiltonian(&pr, &AmplitudeCutoffs::harmonic(16).unwrap()) {
            Err(Error::TooManyQubits(20, cap)) => assert_eq!(cap, DENSE_QUBIT_CAP),
            other => panic!("expected qubit-cap error, got {other:?}"),
        }
    }

    #[test]
    fn coeff_1norm_closed_form() {
        let pr = params(1.0, 4);
        let cut = AmplitudeCutoffs::harmonic(4).unwrap();
        let h = build_amp_hamiltonian(&pr, &cut).unwrap();
        // 4·[(4π)²/24 + 4π·5.5] with kΔφ = sqrt(4π).
        let kd2 = 4.0 * std::f64::consts::PI;
        let want = 4.0 * (kd2 * kd2 / 24.0 + kd2 * 5.5);
        assert_abs_diff_eq!(h.coeff_1norm, want, epsilon = 1e-12);
        assert_abs_diff_eq!(h.coeff_1norm, 302.78, epsilon = 0.01);
    }

    #[test]
    fn field_bound_examples() {
        let pr = LatticeParams::new(1.0, 0.0, 1.0, 1, 4).unwrap();
        let got = phi_max_for_energy(10.0, 0.01, &pr).unwrap();
        assert_abs_diff_eq!(got, (0.1f64 / 22.0).powf(0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.2596, epsilon = 5e-4);
        // Unit ratio: ε·E_max = C·|Ω| gives exactly 1.
        let c = 5.5;
        let unit = phi_max_for_energy(c * 4.0, 0.5, &pr).unwrap();
        assert_abs_diff_eq!(unit, 0.5f64.powf(0.25), epsilon = 1e-15);
        let exact = phi_max_for_energy(c * 4.0 / 0.5, 0.5, &pr).unwrap();
        assert_abs_diff_eq!(exact, 1.0, epsilon = 1e-12);
        assert!(matches!(
            phi_max_for_energy(-1.0, 0.1, &pr),
            Err(Error::NonPositiveEnergy(_))
        ));
        assert!(matches!(
            phi_max_for_energy(1.0, 1.0, &pr),
            Err(Error::BadTailProbability(_))
        ));
    }

    #[test]
    fn sector_projector_invariants() {
        let cut = AmplitudeCutoffs::harmonic(4).unwrap();
        let even = SectorProjector::new(&cut, Parity::Even);
        let odd = SectorProjector::new(&cut, Parity::Odd);
        let u = even.site_matrix();
        let dim = 2 * cut.k;
        assert!(u.matmul(&u).sub(&CMatrix::identity(dim)).max_abs_entry() < 1e-14);
        for proj in [even.projector(2), odd.projector(2)] {
            assert!(proj.matmul(&proj).sub(&proj).max_abs_entry() < 1e-12);
            assert!(proj.hermiticity_defect() < 1e-14);
        }
        // The two projectors are orthogonal complements.
        let sum = even.projector(2).add(&odd.projector(2));
        assert!(sum.sub(&CMatrix::identity(dim * dim)).max_abs_entry() < 1e-14);
        assert!(
            even.projector(2).matmul(&odd.projector(2)).max_abs_entry() < 1e-12
        );
    }

    #[test]
    fn free_sectors_interleave() {
        let h = build_amp_hamiltonian(&params(0.0, 1), &AmplitudeCutoffs::harmonic(8).unwrap())
            .unwrap();
        let (even, odd) = sector_split(&h).unwrap();
        // Harmonic parity: ground state even, first excitation odd, the
        // next even level 2ω above the ground state.
        assert!(even[0] < odd[0]);
        let omega = odd[0] - even[0];
        assert!((omega - 1.0).abs() < 0.05);
        assert!(((even[1] - even[0]) / (2.0 * omega) - 1.0).abs() < 0.05);
    }

    #[test]
    fn sectors_partition_symmetric_spectrum() {
        let pr = params(1.0, 2);
        let cut = AmplitudeCutoffs::harmonic(4).unwrap();
        let h = build_amp_hamiltonian(&pr, &cut).unwrap();
        let (even, odd) = sector_split(&h).unwrap();
        let mut merged: Vec<f64> = even.iter().chain(odd.iter()).copied().collect();
        merged.sort_by(f64::total_cmp);
        // Reference: the full spectrum of the symmetric-subset compression.
        let width = 2 * cut.k;
        let keep: Vec<usize> = (0..h.dense.dim())
            .filter(|&i| (0..2).all(|s| site_digit(i, s, 2, width) != width - 1))
            .collect();
        let hs = h.dense.restrict_indices(&keep);
        let (mut full, _) = hs.hermitian_eigen();
        full.sort_by(f64::total_cmp);
        assert_eq!(merged.len(), full.len());
        for (a, b) in merged.iter().zip(&full) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn parity_commutes_on_symmetric_subset() {
        let pr = params(1.0, 2);
        let cut = AmplitudeCutoffs::harmonic(4).unwrap();
        let h = build_amp_hamiltonian(&pr, &cut).unwrap();
        let width = 2 * cut.k;
        let keep: Vec<usize> = (0..h.dense.dim())
            .filter(|&i| (0..2).all(|s| site_digit(i, s, 2, width) != width - 1))
            .collect();
        let hs = h.dense.restrict_indices(&keep);
        let us = SectorProjector::new(&cut, Parity::Even)
            .global_matrix(2)
            .restrict_indices(&keep);
        let comm = hs.matmul(&us).sub(&us.matmul(&hs));
        assert!(comm.spectral_norm() < 1e-10);
    }

    #[test]
    fn double_well_near_degeneracy() {
        // Strong-hop analog of the broken phase: net quadratic coefficient
        // ½(M²+d+1) − 1 = −0.95 (i.e. M²+d+1 = 0.1) with a weak quartic
        // keeps two wells at ±sqrt(9.5)·≈3.1 inside the k=16 grid reach of
        // 7.09. Measured parity splitting 7.5e−5 vs next gap 1.76.
        let cut = AmplitudeCutoffs::harmonic(16).unwrap();
        let coeffs = AmpCoefficients {
            pi2: 0.5,
            phi2: -0.95,
            phi4: 0.05,
            hop: 0.0,
        };
        let (dense, _) = assemble_dense(&coeffs, 1, 1, &cut).unwrap();
        let (even, odd) = sector_split_dense(&dense, &cut, 1).unwrap();
        let split = odd[0] - even[0];
        let next = even[1] - odd[0];
        assert!(split > 0.0 && next > 0.0);
        assert!(
            split < 1e-2 * next,
            "splitting {split:.3e} not small against next gap {next:.3e}"
        );
    }

    #[test]
    fn negation_costs() {
        let one = |k: usize| {
            controlled_negation_cost(&AmplitudeCutoffs::harmonic(k).unwrap(), 1)
        };
        assert_eq!(one(4).t_per_site, 16);
        assert_eq!(one(2).t_per_site, 4);
        let ten = controlled_negation_cost(&AmplitudeCutoffs::harmonic(4).unwrap(), 10);
        assert_eq!(ten.t_total, 160);
        // m = 3: (9 + 3 − 4)/2 ancillas reused; parallel with L = 2.
        assert_eq!(one(4).ancilla_reused, 4);
        assert_eq!(ten.ancilla_parallel, 1);
        assert_eq!(one(8).ancilla_reused, 8);
    }

    #[test]
    fn dense_export_round_trip() {
        let cut = AmplitudeCutoffs::harmonic(2).unwrap();
        let b = SiteBlocks::new(&cut);
        let mut buf = Vec::new();
        export_dense(&b.pi, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 4 * 4 * 16);
        let back = import_dense(buf.as_slice()).unwrap();
        assert!(back.sub(&b.pi).max_abs_entry() == 0.0);
        let mut bad = buf.clone();
        bad[0] ^= 0xff;
        assert!(import_dense(bad.as_slice()).is_err());
    }

    #[test]
    fn edge_enumeration() {
        assert_eq!(directed_edges(1, 1), vec![(0, 0)]);
        assert_eq!(directed_edges(1, 2), vec![(0, 1), (1, 0)]);
        assert_eq!(directed_edges(1, 4), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        // d=2, P=2: row-major sites, axis 0 slowest.
        let e = directed_edges(2, 2);
        assert_eq!(e.len(), 8);
        assert!(e.contains(&(0, 2)) && e.contains(&(0, 1)));
        assert!(e.contains(&(3, 1)) && e.contains(&(3, 2)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn field_bound_monotonicity(
            e1 in 0.1f64..50.0,
            factor in 1.0f64..4.0,
            eps in 0.01f64..0.5,
            lam in 0.0f64..4.0,
        ) {
            let pr = LatticeParams::new(1.0, lam, 1.0, 1, 2).unwrap();
            let base = phi_max_for_energy(e1, eps, &pr).unwrap();
            prop_assert!(phi_max_for_energy(e1 * factor, eps, &pr).unwrap() >= base);
            prop_assert!(phi_max_for_energy(e1, (eps * factor).min(0.99), &pr).unwrap() >= base);
            let stiffer = LatticeParams::new(1.0, lam + 1.0, 1.0, 1, 2).unwrap();
            prop_assert!(phi_max_for_energy(e1, eps, &stiffer).unwrap() <= base);
            let bigger = LatticeParams::new(1.0, lam, 1.0, 1, 4).unwrap();
            prop_assert!(phi_max_for_energy(e1, eps, &bigger).unwrap() <= base);
        }

        #[test]
        fn assembled_hamiltonian_hermitian(
            k_pow in 1usize..=3,
            lam in 0.0f64..2.0,
            mass in 0.5f64..2.0,
        ) {
            let k = 1usize << k_pow;
            let pr = LatticeParams::new(mass, lam, 1.0, 1, 2).unwrap();
            let h = build_amp_hamiltonian(&pr, &AmplitudeCutoffs::harmonic(k).unwrap()).unwrap();
            prop_assert!(h.dense.hermiticity_defect() < 1e-12);
        }
    }
}
