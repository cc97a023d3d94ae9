//! Dense time evolution: exact propagators, second-order product formulas,
//! measured Trotter error against closed-form commutator bounds, and
//! parity-resolved spectra feeding the scattering analysis.
//!
//! Exponentials go through Hermitian eigendecomposition, so every result here
//! is exact at oracle sizes up to floating-point roundoff; there is no series
//! truncation to tune.

use crate::amp::{embed, sector_split, AmpHamiltonian, Parity};
use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::lattice::{AmplitudeCutoffs, LatticeParams};
use crate::occ::OccHamiltonian;
use crate::pauli::{Subspace, DENSE_QUBIT_CAP};
use num_complex::Complex64;

/// Absolute error below which a measured product-formula residual is treated
/// as numerical noise rather than genuine Trotter error.
pub const NOISE_FLOOR: f64 = 1e-12;

const HERMITICITY_TOL: f64 = 1e-9;

/// One symmetric (second-order) product-formula step over an ordered list of
/// Hermitian fragments.
#[derive(Debug, Clone)]
pub struct TrotterStep {
    fragments: Vec<CMatrix>,
    tau: f64,
}

impl TrotterStep {
    /// The composition below is fixed at second order.
    pub const ORDER: u32 = 2;

    /// Validates the fragment list: non-empty, matching dimensions within the
    /// dense cap, each fragment Hermitian, step size positive.
    pub fn new(fragments: Vec<CMatrix>, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::NonPositiveStep(tau));
        }
        let dim = match fragments.first() {
            Some(f) => f.dim(),
            None => {
                return Err(Error::InvalidPartition(
                    "product formula needs at least one fragment".into(),
                ))
            }
        };
        if dim > (1usize << DENSE_QUBIT_CAP) {
            let qubits = dim.next_power_of_two().trailing_zeros() as usize;
            return Err(Error::TooManyQubits(qubits, DENSE_QUBIT_CAP));
        }
        for f in &fragments {
            if f.dim() != dim {
                return Err(Error::InvalidPartition(format!(
                    "fragment dimensions disagree: {} vs {}",
                    dim,
                    f.dim()
                )));
            }
            f.check_hermitian(HERMITICITY_TOL)?;
        }
        Ok(TrotterStep { fragments, tau })
    }

    pub fn fragments(&self) -> &[CMatrix] {
        &self.fragments
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn order(&self) -> u32 {
        Self::ORDER
    }

    /// S2(tau) = prod_g e^{-iH_g tau/2} * prod_{g reversed} e^{-iH_g tau/2}.
    pub fn matrix(&self) -> CMatrix {
        let halves: Vec<CMatrix> =
            self.fragments.iter().map(|h| h.expi(self.tau / 2.0)).collect();
        let mut s = CMatrix::identity(self.fragments[0].dim());
        for half in &halves {
            s = s.matmul(half);
        }
        for half in halves.iter().rev() {
            s = s.matmul(half);
        }
        s
    }

    /// The exact propagator e^{-iH tau} for H = sum of fragments.
    pub fn exact(&self) -> CMatrix {
        let mut total = CMatrix::zeros(self.fragments[0].dim());
        for f in &self.fragments {
            total.add_assign_scaled(f, Complex64::new(1.0, 0.0));
        }
        total.expi(self.tau)
    }

    /// Spectral norm of S2(tau) - e^{-iH tau}.
    pub fn error_norm(&self) -> f64 {
        self.matrix().sub(&self.exact()).spectral_norm()
    }
}

/// Second-order product formula for the given fragment list.
pub fn trotter_s2(fragments: &[CMatrix], tau: f64) -> Result<CMatrix> {
    Ok(TrotterStep::new(fragments.to_vec(), tau)?.matrix())
}

/// Outcome of a step-size sweep. Commuting fragment lists sit at the noise
/// floor, where a log-log fit would measure roundoff instead of the formula,
/// so that case is reported explicitly instead of as a slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFit {
    /// Least-squares log-log slope of error against step size.
    Slope(f64),
    /// Every measured error fell below [`NOISE_FLOOR`]; no slope reported.
    NoiseFloor,
}

/// Measured product-formula error across a step-size sweep.
#[derive(Debug, Clone)]
pub struct ErrorScaling {
    /// Step sizes, ascending.
    pub taus: Vec<f64>,
    /// Spectral-norm errors aligned with `taus`.
    pub errors: Vec<f64>,
    pub fit: ScalingFit,
}

impl ErrorScaling {
    pub fn slope(&self) -> Option<f64> {
        match self.fit {
            ScalingFit::Slope(s) => Some(s),
            ScalingFit::NoiseFloor => None,
        }
    }
}

/// Sweeps the step size and fits the log-log error slope; a second-order
/// formula should come out near 3. Requires at least four step sizes spanning
/// a decade so the fit window is meaningful.
pub fn trotter_error_scaling(fragments: &[CMatrix], taus: &[f64]) -> Result<ErrorScaling> {
    if taus.len() < 4 {
        return Err(Error::Fit(format!(
            "degenerate fit: need at least 4 step sizes, got {}",
            taus.len()
        )));
    }
    let mut taus = taus.to_vec();
    taus.sort_by(f64::total_cmp);
    if !taus[0].is_finite() || taus[0] <= 0.0 {
        return Err(Error::NonPositiveStep(taus[0]));
    }
    if taus[taus.len() - 1] / taus[0] < 10.0 - 1e-9 {
        return Err(Error::Fit(
            "degenerate fit: step sizes must span at least a decade".into(),
        ));
    }
    let errors: Vec<f64> = taus
        .iter()
        .map(|&tau| Ok(TrotterStep::new(fragments.to_vec(), tau)?.error_norm()))
        .collect::<Result<_>>()?;

    let points: Vec<(f64, f64)> = taus
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > NOISE_FLOOR)
        .map(|(&t, &e)| (t.ln(), e.ln()))
        .collect();
    // A fit through fewer than half the sweep says nothing about scaling.
    if points.len() < taus.len().div_ceil(2) {
        return Ok(ErrorScaling {
            taus,
            errors,
            fit: ScalingFit::NoiseFloor,
        });
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (mx / n, my / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    if sxx < 1e-12 {
        return Err(Error::Fit("degenerate fit: step sizes coincide".into()));
    }
    Ok(ErrorScaling {
        taus,
        errors,
        fit: ScalingFit::Slope(sxy / sxx),
    })
}

/// Kinetic/potential split of the amplitude-basis Hamiltonian: the Fourier
/// conjugated momentum part on one side, everything field-diagonal (mass,
/// quartic, hops) on the other. These are the only two non-commuting pieces.
pub fn amp_fragments(h: &AmpHamiltonian) -> Vec<CMatrix> {
    let n_sites = h.params.omega;
    let mut kinetic = CMatrix::zeros(h.dense.dim());
    for site in 0..n_sites {
        kinetic.add_assign_scaled(
            &embed(&h.site_blocks.pi2, site, n_sites),
            Complex64::new(h.coeffs.pi2, 0.0),
        );
    }
    let potential = h.dense.sub(&kinetic);
    vec![kinetic, potential]
}

/// The five-part occupation split {free, all-distinct, one-repeat,
/// pair-repeat, single-mode} realized on the one-hot unary subspace. Every
/// part preserves per-register excitation number, so the restriction commutes
/// with both exponentiation and the product formula.
pub fn occ_five_fragments(h: &OccHamiltonian) -> Result<Vec<CMatrix>> {
    let sub = Subspace::Unary {
        mode_width: h.cutoffs.n_max + 1,
    };
    [&h.h0, &h.h1, &h.h2, &h.h3, &h.h4]
        .into_iter()
        .map(|part| part.realize(sub))
        .collect()
}

/// The fourteen-fragment mutually-commuting grouping (the split the circuit
/// counts are priced for), realized on the one-hot unary subspace.
pub fn occ_commuting_fragments(h: &OccHamiltonian) -> Result<Vec<CMatrix>> {
    let sub = Subspace::Unary {
        mode_width: h.cutoffs.n_max + 1,
    };
    h.fragments()
        .iter()
        .map(|(_, part)| part.realize(sub))
        .collect()
}

/// Closed-form bound on the nested-commutator sum for the kinetic/potential
/// split: the measured second-order error obeys error <= bound * tau^3. Grows
/// like k^5 at the self-dual width, so it is loose but cheap.
pub fn alpha_comm_amp(params: &LatticeParams, cutoffs: &AmplitudeCutoffs) -> f64 {
    let m2 = params.scaled_mass * params.scaled_mass;
    let lam = params.scaled_coupling;
    let d = params.d as f64;
    // (k * delta_phi)^2 bounds both |Phi|^2 and |Pi|^2 on the grid.
    let kd2 = (cutoffs.k as f64 * cutoffs.delta_phi).powi(2);
    let c6 = 0.25 * (m2 + d + 1.0) * (m2 + d + 2.0) + d * d * (2.0 * m2 + 2.0 * d + 11.0);
    let c8 = lam / 48.0 * (2.0 * m2 + 8.0 * d * d + 2.0 * d + 3.0);
    let c10 = lam * lam / 576.0;
    params.omega as f64 * (c10 * kd2.powi(5) + c8 * kd2.powi(4) + c6 * kd2.powi(3))
}

/// Eigenvalues of the field-negation-symmetric compression, labeled by
/// parity sector.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// All eigenvalues ascending.
    pub eigenvalues: Vec<f64>,
    /// Parity label of each eigenvalue, aligned with `eigenvalues`.
    pub sectors: Vec<Parity>,
    pub ground_energy: f64,
    /// Consecutive differences of `eigenvalues`.
    pub gaps: Vec<f64>,
    /// Lowest odd level above the ground state: the single-particle
    /// (renormalized mass) proxy.
    pub odd_gap: f64,
    /// First excited even level above the ground state: the two-particle
    /// proxy.
    pub even_gap: f64,
}

impl SpectrumResult {
    /// CSV export, one row per level: `index,eigenvalue,sector`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue,sector\n");
        for (i, (e, s)) in self.eigenvalues.iter().zip(&self.sectors).enumerate() {
            let label = match s {
                Parity::Even => "even",
                Parity::Odd => "odd",
            };
            out.push_str(&format!("{i},{e:.12e},{label}\n"));
        }
        out
    }
}

/// Diagonalizes the Hamiltonian on the symmetric grid subset, split by field
/// negation parity. The even sector carries the ground state and the
/// two-particle proxy gap; the odd sector carries the mass proxy gap.
pub fn sector_spectrum(h: &AmpHamiltonian) -> Result<SpectrumResult> {
    let (even, odd) = sector_split(h)?;
    if even.len() < 2 || odd.is_empty() {
        return Err(Error::CutoffTooSmall {
            n: h.cutoffs.k,
            what: "parity-resolved gaps".into(),
        });
    }
    let mut eigenvalues = Vec::with_capacity(even.len() + odd.len());
    let mut sectors = Vec::with_capacity(even.len() + odd.len());
    let (mut i, mut j) = (0, 0);
    while i < even.len() || j < odd.len() {
        let take_even = match (even.get(i), odd.get(j)) {
            (Some(&e), Some(&o)) => e <= o,
            (Some(_), None) => true,
            _ => false,
        };
        if take_even {
            eigenvalues.push(even[i]);
            sectors.push(Parity::Even);
            i += 1;
        } else {
            eigenvalues.push(odd[j]);
            sectors.push(Parity::Odd);
            j += 1;
        }
    }
    let ground_energy = eigenvalues[0];
    let gaps = eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(SpectrumResult {
        odd_gap: odd[0] - ground_energy,
        even_gap: even[1] - ground_energy,
        eigenvalues,
        sectors,
        ground_energy,
        gaps,
    })
}
