//! Phase-estimation error budgeting and end-to-end cost assembly.
//!
//! The chain is: pick a target energy error, split it across the systematic
//! sources (finite phase register, Trotter residual, rotation synthesis,
//! exact and approximate QFTs), then price the resulting circuit as
//! repetitions x (rotations + AQFTs + direct T gates). A configurable
//! surface-code overlay translates logical totals into physical qubits and
//! wallclock; its constants are explicit model inputs, not derived results.

use crate::dynamics::alpha_comm_amp;
use crate::encoding::{build_block_encoding, Algorithm, EncodingOptions};
use crate::error::{Error, Result};
use crate::lattice::{AmplitudeCutoffs, LatticeParams, OccupationCutoffs};
use crate::occ::{alpha_comm_occ, ceil_count, gate_counts_occ};
use serde_json::json;
use std::fmt;
use std::str::FromStr;

const SQRT2: f64 = std::f64::consts::SQRT_2;
const PI: f64 = std::f64::consts::PI;

fn require_positive(what: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::OutOfRange {
            what: what.into(),
            value,
        });
    }
    Ok(())
}

fn require_unit_interval(what: &str, value: f64) -> Result<()> {
    require_positive(what, value)?;
    if value >= 1.0 {
        return Err(Error::OutOfRange {
            what: what.into(),
            value,
        });
    }
    Ok(())
}

/// Expected T cost of synthesizing one Rz rotation to tolerance `epsilon_r`
/// with the repeat-until-success fit 3.067 log2(2/eps) - 4.327.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthCost {
    pub t: f64,
    /// The linear-log fit turns negative once the tolerance nears 1. The
    /// value is clamped to zero and the regime flagged instead of erroring,
    /// because the fit's validity floor is not documented anywhere.
    pub invalid_regime: bool,
}

pub fn rz_synthesis_t(epsilon_r: f64) -> Result<SynthCost> {
    require_positive("rotation synthesis tolerance", epsilon_r)?;
    let raw = 3.067 * (2.0 / epsilon_r).log2() - 4.327;
    Ok(SynthCost {
        t: raw.max(0.0),
        invalid_regime: raw < 0.0,
    })
}

/// T cost of one n-qubit approximate QFT to accuracy `epsilon_f`:
/// 8n lg(n/eps) + lg(n/eps) lg(lg(n/eps)/eps).
pub fn aqft_t(n: u64, epsilon_f: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "AQFT register width".into(),
            value: 0.0,
        });
    }
    require_unit_interval("AQFT tolerance", epsilon_f)?;
    let lg = (n as f64 / epsilon_f).log2();
    Ok(8.0 * n as f64 * lg + lg * (lg / epsilon_f).log2())
}

/// Walk-operator queries for QSVT time evolution to time `t` within `epsilon`:
/// alpha t + ln(1/eps) / ln(e + ln(1/eps)/(alpha t)).
pub fn qsvt_queries(alpha: f64, t: f64, epsilon: f64) -> Result<f64> {
    require_positive("block-encoding normalization", alpha)?;
    require_positive("evolution time", t)?;
    require_unit_interval("evolution tolerance", epsilon)?;
    let at = alpha * t;
    let l = (1.0 / epsilon).ln();
    Ok(at + l / (std::f64::consts::E + l / at).ln())
}

/// How the phase-estimation budget was split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    /// Trotter step with exact QFTs inside it: three-way split.
    Trotter,
    /// Trotter step that itself calls approximate QFTs: four-way split.
    TrotterAqft,
    /// Qubitized walk; the phase encodes E/alpha directly.
    Qubitized,
}

/// A feasible split of the target energy error across every systematic
/// source, plus the phase-register size it forces.
///
/// `epsilon_synth` and `epsilon_aqft` are totals over all calls; the
/// per-call tolerances are `epsilon_r` and `epsilon_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub kind: BudgetKind,
    pub epsilon_e: f64,
    /// Target phase error; [`ErrorBudget::phase_error`] must stay below it.
    pub epsilon_theta: f64,
    pub epsilon_trotter: f64,
    pub epsilon_synth: f64,
    pub epsilon_qft: f64,
    pub epsilon_aqft: f64,
    pub epsilon_r: f64,
    pub epsilon_f: f64,
    /// Phase-register bits.
    pub m: u32,
    /// 2^m applications of the step or walk operator.
    pub repetitions: u128,
    /// Step size; `None` for qubitized budgets.
    pub tau: Option<f64>,
}

impl ErrorBudget {
    /// Back-substituted systematic phase error,
    /// sqrt((pi/2^{m+1})^2 + (pi e_QFT + e_Trotter + e_synth + e_AQFT)^2).
    pub fn phase_error(&self) -> f64 {
        let register = PI / 2f64.powi(self.m as i32 + 1);
        let systematic =
            PI * self.epsilon_qft + self.epsilon_trotter + self.epsilon_synth + self.epsilon_aqft;
        (register * register + systematic * systematic).sqrt()
    }

    pub fn feasible(&self) -> bool {
        self.phase_error() <= self.epsilon_theta * (1.0 + 1e-12)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": match self.kind {
                BudgetKind::Trotter => "trotter",
                BudgetKind::TrotterAqft => "trotter_aqft",
                BudgetKind::Qubitized => "qubitized",
            },
            "epsilon_e": self.epsilon_e,
            "epsilon_theta": self.epsilon_theta,
            "epsilon_trotter": self.epsilon_trotter,
            "epsilon_synth": self.epsilon_synth,
            "epsilon_qft": self.epsilon_qft,
            "epsilon_aqft": self.epsilon_aqft,
            "epsilon_r": self.epsilon_r,
            "epsilon_f": self.epsilon_f,
            "m": self.m,
            "repetitions": self.repetitions.to_string(),
            "tau": self.tau,
        })
    }
}

// 2^m with m chosen so the register term stays inside its share of the
// budget. Floor keeps 2^m <= value, ceil forces 2^m >= value; the small
// nudge absorbs roundoff when value lands on an exact power of two.
fn register_bits_floor(value: f64) -> Result<u32> {
    bits_guard((value.log2() + 1e-9).floor().max(0.0))
}

fn register_bits_ceil(value: f64) -> Result<u32> {
    bits_guard((value.log2() - 1e-9).ceil().max(0.0))
}

fn bits_guard(m: f64) -> Result<u32> {
    if !m.is_finite() || m > 120.0 {
        return Err(Error::OutOfRange {
            what: "phase-register bits".into(),
            value: m,
        });
    }
    Ok(m as u32)
}

fn per_call(total: f64, calls: u64) -> f64 {
    if calls == 0 {
        0.0
    } else {
        total / calls as f64
    }
}

/// Error budget for phase estimation over a second-order product-formula
/// step with commutator bound `alpha_comm`.
///
/// With `n_f = 0` the step uses exact QFTs and the budget splits three ways
/// (Trotter sqrt2/4, synthesis sqrt2/8, readout QFT sqrt2/(8 pi)); the step
/// size tau = sqrt(eps_E / (2^{3/2} alpha_comm)) saturates the Trotter share
/// and the register obeys 2^m <= pi^2 sqrt(alpha_comm) / eps_E^{3/2}.
///
/// With `n_f > 0` the step also calls approximate QFTs, the budget splits
/// four equal ways, tau = sqrt(eps_E / (2^{5/2} alpha_comm)), and
/// 2^m >= pi 2^{3/4} sqrt(alpha_comm) / eps_E^{3/2}.
pub fn budget_trotter(alpha_comm: f64, epsilon_e: f64, n_r: u64, n_f: u64) -> Result<ErrorBudget> {
    if alpha_comm == 0.0 {
        return Err(Error::ZeroAlphaComm);
    }
    require_positive("commutator bound", alpha_comm)?;
    require_positive("target energy error", epsilon_e)?;
    let e32 = epsilon_e.powf(1.5);
    let sqrt_alpha = alpha_comm.sqrt();
    if n_f == 0 {
        let tau = (epsilon_e / (2f64.powf(1.5) * alpha_comm)).sqrt();
        let epsilon_theta = epsilon_e * tau;
        let epsilon_trotter = SQRT2 * epsilon_theta / 4.0;
        let epsilon_synth = SQRT2 * epsilon_theta / 8.0;
        let epsilon_qft = SQRT2 * epsilon_theta / (8.0 * PI);
        let m = register_bits_floor(PI * PI * sqrt_alpha / e32)?;
        Ok(ErrorBudget {
            kind: BudgetKind::Trotter,
            epsilon_e,
            epsilon_theta,
            epsilon_trotter,
            epsilon_synth,
            epsilon_qft,
            epsilon_aqft: 0.0,
            epsilon_r: per_call(epsilon_synth, n_r),
            epsilon_f: 0.0,
            m,
            repetitions: 1u128 << m,
            tau: Some(tau),
        })
    } else {
        let tau = (epsilon_e / (2f64.powf(2.5) * alpha_comm)).sqrt();
        let epsilon_theta = epsilon_e * tau;
        let quarter = epsilon_theta / (4.0 * SQRT2);
        let m = register_bits_ceil(PI * 2f64.powf(0.75) * sqrt_alpha / e32)?;
        Ok(ErrorBudget {
            kind: BudgetKind::TrotterAqft,
            epsilon_e,
            epsilon_theta,
            epsilon_trotter: quarter,
            epsilon_synth: quarter,
            epsilon_qft: quarter / PI,
            epsilon_aqft: quarter,
            epsilon_r: per_call(quarter, n_r),
            epsilon_f: per_call(quarter, n_f),
            m,
            repetitions: 1u128 << m,
            tau: Some(tau),
        })
    }
}

/// Error budget for phase estimation of a qubitized walk with normalization
/// `alpha`. The phase error target is eps_E / alpha, split equally between
/// readout QFT, rotation synthesis, and approximate QFTs (each eps_theta /
/// (3 sqrt2)), with 2^m >= pi alpha / (sqrt2 eps_E).
pub fn budget_qubitization(alpha: f64, epsilon_e: f64, n_r: u64, n_f: u64) -> Result<ErrorBudget> {
    require_positive("block-encoding normalization", alpha)?;
    require_positive("target energy error", epsilon_e)?;
    let epsilon_theta = epsilon_e / alpha;
    let third = epsilon_theta / (3.0 * SQRT2);
    let m = register_bits_ceil(PI * alpha / (SQRT2 * epsilon_e))?;
    Ok(ErrorBudget {
        kind: BudgetKind::Qubitized,
        epsilon_e,
        epsilon_theta,
        epsilon_trotter: 0.0,
        epsilon_synth: third,
        epsilon_qft: third / PI,
        epsilon_aqft: third,
        epsilon_r: per_call(third, n_r),
        epsilon_f: per_call(third, n_f),
        m,
        repetitions: 1u128 << m,
        tau: None,
    })
}

/// The five costed algorithms, in report-table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostAlgorithm {
    /// Trotterized occupation-basis evolution.
    OccTrotter,
    /// Trotterized amplitude-basis evolution (diagonal + DFT-conjugated
    /// diagonal fragments, approximate QFTs per step).
    AmpTrotter,
    /// Qubitized walk over one of the block-encoding families.
    Qubitized(Algorithm),
}

pub const COST_ALGORITHMS: [CostAlgorithm; 5] = [
    CostAlgorithm::OccTrotter,
    CostAlgorithm::AmpTrotter,
    CostAlgorithm::Qubitized(Algorithm::IEqualWeight),
    CostAlgorithm::Qubitized(Algorithm::IIIaZLcu),
    CostAlgorithm::Qubitized(Algorithm::IIIbSignature),
];

impl fmt::Display for CostAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CostAlgorithm::OccTrotter => "occ_trotter",
            CostAlgorithm::AmpTrotter => "amp_trotter",
            CostAlgorithm::Qubitized(Algorithm::IEqualWeight) => "I_equal_weight",
            CostAlgorithm::Qubitized(Algorithm::IIIaZLcu) => "IIIa_z_lcu",
            CostAlgorithm::Qubitized(Algorithm::IIIbSignature) => "IIIb_signature",
        };
        f.write_str(name)
    }
}

impl FromStr for CostAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "occ_trotter" => Ok(CostAlgorithm::OccTrotter),
            "amp_trotter" => Ok(CostAlgorithm::AmpTrotter),
            "I_equal_weight" => Ok(CostAlgorithm::Qubitized(Algorithm::IEqualWeight)),
            "IIIa_z_lcu" => Ok(CostAlgorithm::Qubitized(Algorithm::IIIaZLcu)),
            "IIIb_signature" => Ok(CostAlgorithm::Qubitized(Algorithm::IIIbSignature)),
            other => Err(Error::MissingKey(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// T-gate totals by source, each already multiplied by the repetition count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostComponents {
    /// Synthesized arbitrary-angle rotations.
    pub rotations: f64,
    /// Approximate QFTs.
    pub aqft: f64,
    /// Direct T gates (Toffoli ladders, comparators, selection logic).
    pub other: f64,
}

/// Physical-resource figures from the surface-code overlay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOverlay {
    pub code_distance: u32,
    pub physical_qubits: u64,
    pub wallclock_seconds: f64,
}

/// Single-shot phase-estimation cost for one algorithm at one working point.
/// Success amplification beyond the bare run is left to the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub algorithm: CostAlgorithm,
    pub total_t: f64,
    /// Everything: system register, workspace, phase register.
    pub logical_qubits: u64,
    /// Workspace plus phase register only.
    pub ancilla_qubits: u64,
    pub components: CostComponents,
    pub budget: ErrorBudget,
    /// True when any rotation tolerance fell outside the synthesis fit's
    /// trustworthy range and its cost was clamped to zero.
    pub invalid_regime: bool,
    pub surface_overlay: Option<SurfaceOverlay>,
}

impl CostReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "schema": "cost-report/v1",
            "algorithm": self.algorithm.to_string(),
            "total_t": self.total_t,
            "logical_qubits": self.logical_qubits,
            "ancilla_qubits": self.ancilla_qubits,
            "components": {
                "rotations": self.components.rotations,
                "aqft": self.components.aqft,
                "other": self.components.other,
            },
            "budget": self.budget.to_json(),
            "invalid_regime": self.invalid_regime,
            "surface_overlay": self.surface_overlay.map(|s| json!({
                "code_distance": s.code_distance,
                "physical_qubits": s.physical_qubits,
                "wallclock_seconds": s.wallclock_seconds,
            })),
        })
    }
}

fn choose(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc = 1u64;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn count_to_u64(what: &str, c: i128) -> Result<u64> {
    u64::try_from(c).map_err(|_| Error::OutOfRange {
        what: what.into(),
        value: c as f64,
    })
}

struct StepCost {
    n_r: u64,
    n_f: u64,
    n_plus: u64,
    /// Width of each register the AQFTs act on.
    aqft_width: u64,
    budget: ErrorBudget,
    system_qubits: u64,
    workspace_qubits: u64,
}

/// Assemble the full phase-estimation cost report for `algorithm`.
///
/// Occupation-basis input sizes come from `occ_cutoffs`; all amplitude-basis
/// algorithms read `amp_cutoffs`. The total is
/// 2^m (N_r T_synth(eps_r) + N_f T_aqft(eps_f) + N_plus), and qubits are
/// system + workspace + phase register.
pub fn total_cost(
    algorithm: CostAlgorithm,
    params: &LatticeParams,
    amp_cutoffs: &AmplitudeCutoffs,
    occ_cutoffs: &OccupationCutoffs,
    epsilon_e: f64,
    allow_conjecture: bool,
) -> Result<CostReport> {
    let omega = params.omega as u64;
    let step = match algorithm {
        CostAlgorithm::OccTrotter => {
            let counts = gate_counts_occ(occ_cutoffs, params);
            let n_r = count_to_u64("rotation count", ceil_count(counts.rotations()))?;
            let n_plus = count_to_u64("direct T count", ceil_count(counts.t_direct()))?;
            let alpha = alpha_comm_occ(params, occ_cutoffs, 1.0);
            let budget = budget_trotter(alpha, epsilon_e, n_r, 0)?;
            StepCost {
                n_r,
                n_f: 0,
                n_plus,
                aqft_width: 0,
                budget,
                system_qubits: (occ_cutoffs.n_max as u64 + 1) * omega,
                workspace_qubits: 0,
            }
        }
        CostAlgorithm::AmpTrotter => {
            let width = amp_cutoffs.qubits_per_site() as u64;
            let per_site: u64 = (1..=4).map(|p| choose(width, p)).sum();
            let n_r = omega * per_site + params.e_d as u64 * width * width;
            let n_f = 2 * omega;
            let alpha = alpha_comm_amp(params, amp_cutoffs);
            let budget = budget_trotter(alpha, epsilon_e, n_r, n_f)?;
            StepCost {
                n_r,
                n_f,
                n_plus: 0,
                aqft_width: width,
                budget,
                system_qubits: omega * width,
                workspace_qubits: 0,
            }
        }
        CostAlgorithm::Qubitized(family) => {
            let be = build_block_encoding(
                family,
                params,
                amp_cutoffs,
                EncodingOptions {
                    dense: false,
                    allow_conjecture,
                    ..EncodingOptions::default()
                },
            )?;
            let n_plus = be.t_count + be.conjectured_t.unwrap_or(0);
            let budget = budget_qubitization(be.alpha, epsilon_e, be.rz_count, be.aqft_count)?;
            StepCost {
                n_r: be.rz_count,
                n_f: be.aqft_count,
                n_plus,
                aqft_width: amp_cutoffs.qubits_per_site() as u64,
                budget,
                system_qubits: omega * amp_cutoffs.qubits_per_site() as u64,
                workspace_qubits: be.ancilla_qubits,
            }
        }
    };

    let reps = step.budget.repetitions as f64;
    let mut invalid_regime = false;
    let rotations = if step.n_r > 0 {
        let synth = rz_synthesis_t(step.budget.epsilon_r)?;
        invalid_regime |= synth.invalid_regime;
        reps * step.n_r as f64 * synth.t
    } else {
        0.0
    };
    let aqft = if step.n_f > 0 {
        reps * step.n_f as f64 * aqft_t(step.aqft_width, step.budget.epsilon_f)?
    } else {
        0.0
    };
    let other = reps * step.n_plus as f64;
    Ok(CostReport {
        algorithm,
        total_t: rotations + aqft + other,
        logical_qubits: step.system_qubits + step.workspace_qubits + step.budget.m as u64,
        ancilla_qubits: step.workspace_qubits + step.budget.m as u64,
        components: CostComponents {
            rotations,
            aqft,
            other,
        },
        budget: step.budget,
        invalid_regime,
        surface_overlay: None,
    })
}

/// One row per report, fixed column order, `{:.6e}` for T totals. Output is
/// byte-stable for identical inputs.
pub fn cost_table_csv(reports: &[CostReport]) -> String {
    let mut out = String::from(
        "algorithm,logical_qubits,ancilla_qubits,phase_bits,repetitions,rotation_t,aqft_t,direct_t,total_t\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            r.algorithm,
            r.logical_qubits,
            r.ancilla_qubits,
            r.budget.m,
            r.budget.repetitions,
            r.components.rotations,
            r.components.aqft,
            r.components.other,
            r.total_t,
        ));
    }
    out
}

/// Surface-code cost model. Every constant here is configuration, chosen to
/// sit in the commonly quoted regime for superconducting hardware; none is a
/// derived result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceModel {
    /// One stabilizer round, in nanoseconds.
    pub cycle_ns: f64,
    /// Rounds consumed per sequential T gate (lattice-surgery depth).
    pub cycles_per_t: f64,
    /// Physical qubits per logical patch = phys_coeff * d^2.
    pub phys_coeff: f64,
    pub p_phys: f64,
    pub p_threshold: f64,
    /// Prefactor in p_L(d) = error_coeff * (p_phys/p_threshold)^((d+1)/2).
    pub error_coeff: f64,
    /// Magic-state factory footprint as a multiple of the data block.
    pub distillation_factor: f64,
    /// Acceptable total logical-failure probability for the whole run.
    pub failure_budget: f64,
    pub max_distance: u32,
}

impl Default for SurfaceModel {
    fn default() -> Self {
        SurfaceModel {
            cycle_ns: 1000.0,
            cycles_per_t: 10.0,
            phys_coeff: 2.0,
            p_phys: 1e-3,
            p_threshold: 1e-2,
            error_coeff: 0.1,
            distillation_factor: 4.0,
            failure_budget: 0.01,
            max_distance: 201,
        }
    }
}

impl SurfaceModel {
    pub fn phys_per_logical(&self, d: u32) -> f64 {
        self.phys_coeff * (d as f64) * (d as f64)
    }

    pub fn logical_error(&self, d: u32) -> f64 {
        self.error_coeff * (self.p_phys / self.p_threshold).powf((d as f64 + 1.0) / 2.0)
    }

    fn validate(&self) -> Result<()> {
        require_positive("cycle time", self.cycle_ns)?;
        require_positive("cycles per T", self.cycles_per_t)?;
        require_positive("patch size coefficient", self.phys_coeff)?;
        require_positive("physical error rate", self.p_phys)?;
        require_positive("threshold error rate", self.p_threshold)?;
        require_positive("logical error prefactor", self.error_coeff)?;
        if self.distillation_factor < 0.0 || !self.distillation_factor.is_finite() {
            return Err(Error::OutOfRange {
                what: "distillation factor".into(),
                value: self.distillation_factor,
            });
        }
        require_unit_interval("failure budget", self.failure_budget)
    }
}

/// Pick the smallest odd code distance whose total logical failure over
/// `logical_qubits x total_t` error opportunities stays inside the model's
/// budget, then report physical qubits (data block plus distillation
/// factories) and serial wallclock.
pub fn surface_overlay(report: &CostReport, model: &SurfaceModel) -> Result<CostReport> {
    model.validate()?;
    let volume = report.logical_qubits as f64 * report.total_t.max(1.0);
    let mut distance = None;
    let mut d = 3u32;
    while d <= model.max_distance {
        if model.logical_error(d) * volume < model.failure_budget {
            distance = Some(d);
            break;
        }
        d += 2;
    }
    let d = distance.ok_or(Error::InfeasibleDistance(model.max_distance as usize))?;
    let data = report.logical_qubits as f64 * model.phys_per_logical(d);
    let factories = if report.total_t > 0.0 {
        model.distillation_factor * data
    } else {
        0.0
    };
    let mut out = *report;
    out.surface_overlay = Some(SurfaceOverlay {
        code_distance: d,
        physical_qubits: (data + factories).ceil() as u64,
        wallclock_seconds: report.total_t * model.cycles_per_t * model.cycle_ns * 1e-9,
    });
    Ok(out)
}
