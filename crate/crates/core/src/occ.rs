//! Occupation-basis Hamiltonian on the momentum grid: the free dispersion
//! part plus the four normal-ordered groups of the quartic interaction,
//! encoded as Pauli sums over one-hot unary mode registers.
//!
//! Also houses the per-group rotation/T/CNOT/H count formulas (exact
//! rationals) and the closed-form nested-commutator bound that controls the
//! second-order product-formula error.
//!
//! Register layout: mode `p` (in dispersion-table order) owns qubits
//! `p·(N+1) .. (p+1)·(N+1)`, and occupation `n` is the one-hot state with
//! qubit `p·(N+1)+n` set. Hopping pairs `(X_nX_{n+m}+Y_nY_{n+m})/2` move the
//! hot bit and annihilate every state outside the code space, so all
//! operators built here preserve the unary encoding by construction.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::lattice::{dispersion_table, LatticeParams, OccupationCutoffs};
use crate::pauli::{PauliOp, PauliSum};

/// How momentum sums in the interaction groups are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OccNormalization {
    /// Divide each group by the site-count power matching its free momentum
    /// sums (|Ω|³ for the all-distinct group, |Ω|² for the two three-index
    /// groups, |Ω| for the single-mode group); free part unscaled. This is
    /// the convention the gate-count and commutator formulas assume.
    #[default]
    Volume,
    /// Divide every part, free part included, by (2π)^d.
    MomentumDensity,
}

/// Exact rational gate count (denominators arise from tuple-set sizes).
pub type Count = Ratio<i128>;

/// Per-group circuit cost of one product-formula step. `crz` counts rotation
/// gates: controlled ones for the three multi-mode groups, plain ones for the
/// single-mode group and the free part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateCountOcc {
    pub crz: Count,
    pub t: Count,
    pub cnot: Count,
    pub h: Count,
}

impl GateCountOcc {
    fn zero() -> Self {
        let z = Ratio::from_integer(0);
        GateCountOcc {
            crz: z,
            t: z,
            cnot: z,
            h: z,
        }
    }

    fn sum(parts: &[GateCountOcc]) -> Self {
        parts.iter().fold(Self::zero(), |acc, p| GateCountOcc {
            crz: acc.crz + p.crz,
            t: acc.t + p.t,
            cnot: acc.cnot + p.cnot,
            h: acc.h + p.h,
        })
    }
}

/// Round a rational count up to the integer actually paid for.
pub fn ceil_count(c: Count) -> i128 {
    c.ceil().to_integer()
}

/// Gate counts for the free part, the four interaction groups, and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccGateCounts {
    pub free: GateCountOcc,
    pub group1: GateCountOcc,
    pub group2: GateCountOcc,
    pub group3: GateCountOcc,
    pub group4: GateCountOcc,
    pub total: GateCountOcc,
}

impl OccGateCounts {
    /// Rotations needing synthesis (controlled and plain alike).
    pub fn rotations(&self) -> Count {
        self.total.crz
    }

    /// T gates paid directly (outside rotation synthesis).
    pub fn t_direct(&self) -> Count {
        self.total.t
    }

    /// Per-group record with exact rationals as `[numer, denom]` pairs plus
    /// their ceiled integer values.
    pub fn to_json(&self) -> serde_json::Value {
        fn gate(c: Count) -> serde_json::Value {
            serde_json::json!({
                "exact": [c.numer().to_string(), c.denom().to_string()],
                "ceil": ceil_count(c) as i64,
            })
        }
        fn group(g: &GateCountOcc) -> serde_json::Value {
            serde_json::json!({
                "crz": gate(g.crz),
                "t": gate(g.t),
                "cnot": gate(g.cnot),
                "h": gate(g.h),
            })
        }
        serde_json::json!({
            "free": group(&self.free),
            "group1": group(&self.group1),
            "group2": group(&self.group2),
            "group3": group(&self.group3),
            "group4": group(&self.group4),
            "total": group(&self.total),
        })
    }
}

/// The assembled Hamiltonian with its product-formula fragment split.
#[derive(Debug, Clone)]
pub struct OccHamiltonian {
    pub params: LatticeParams,
    pub cutoffs: OccupationCutoffs,
    pub normalization: OccNormalization,
    /// Free part Σ_p ω_p n̂_p.
    pub h0: PauliSum,
    /// All four momentum modes pairwise distinct.
    pub h1: PauliSum,
    /// Exactly one repeated mode: pattern (p, p, p+q, p−q).
    pub h2: PauliSum,
    /// Two distinct modes, each repeated: pattern (p₁, p₂, p₁, p₂).
    pub h3: PauliSum,
    /// Single mode: pattern (p, p, p, p).
    pub h4: PauliSum,
    pub total: PauliSum,
    fragments: Vec<(&'static str, PauliSum)>,
}

/// Fixed fragment order used by the second-order product formula. The last
/// fragment absorbs both the single-mode group and the free part, which are
/// diagonal-heavy and exponentiated together.
pub const FRAGMENT_NAMES: [&str; 14] = [
    "h11", "h12", "h21", "h22", "h23", "h24", "h31", "h32", "h33", "h34", "h35", "h36", "h37",
    "h4p",
];

impl OccHamiltonian {
    pub fn n_qubits(&self) -> usize {
        self.total.n_qubits()
    }

    /// Mutually exclusive fragments in `FRAGMENT_NAMES` order; they sum to
    /// `total` exactly.
    pub fn fragments(&self) -> &[(&'static str, PauliSum)] {
        &self.fragments
    }
}

/// Momentum grid with wrap-around label arithmetic. Labels live in
/// {−(P−1)/2, …, P/2} per axis; sums and differences re-center into that
/// window before index lookup.
struct ModeGrid {
    p_sites: i64,
    labels: Vec<Vec<i64>>,
    omegas: Vec<f64>,
    index: BTreeMap<Vec<i64>, usize>,
}

impl ModeGrid {
    fn new(params: &LatticeParams) -> Self {
        let disp = dispersion_table(params);
        let labels: Vec<Vec<i64>> = disp.modes.iter().map(|m| m.n.clone()).collect();
        let omegas: Vec<f64> = disp.modes.iter().map(|m| m.omega).collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        ModeGrid {
            p_sites: params.p_sites as i64,
            labels,
            omegas,
            index,
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn recenter(&self, c: i64) -> i64 {
        let lo = -(self.p_sites - 1) / 2;
        (c - lo).rem_euclid(self.p_sites) + lo
    }

    fn combine(&self, a: usize, b: usize, sign: i64) -> usize {
        let label: Vec<i64> = self.labels[a]
            .iter()
            .zip(&self.labels[b])
            .map(|(&x, &y)| self.recenter(x + sign * y))
            .collect();
        self.index[&label]
    }

    fn add(&self, a: usize, b: usize) -> usize {
        self.combine(a, b, 1)
    }

    fn sub(&self, a: usize, b: usize) -> usize {
        self.combine(a, b, -1)
    }

    fn zero(&self) -> usize {
        let label = vec![0i64; self.labels[0].len()];
        self.index[&label]
    }
}

/// One ladder-expression factor, kept as raw (coefficient, string) pairs so
/// multi-mode products can be expanded without intermediate allocations.
type FactorTerms = Vec<(f64, Vec<(usize, PauliOp)>)>;

fn hop_factor(base: usize, n: usize, gap: usize) -> FactorTerms {
    let (q1, q2) = (base + n, base + n + gap);
    vec![
        (1.0, vec![(q1, PauliOp::X), (q2, PauliOp::X)]),
        (1.0, vec![(q1, PauliOp::Y), (q2, PauliOp::Y)]),
    ]
}

fn iz_factor(base: usize, n: usize) -> FactorTerms {
    vec![(1.0, vec![]), (-1.0, vec![(base + n, PauliOp::Z)])]
}

/// Push `scale · Π factors` expanded into Pauli strings. Factors must act on
/// disjoint qubit sets (distinct mode registers), which `push` re-checks via
/// its strictly-increasing-index invariant.
fn push_product(target: &mut PauliSum, scale: f64, factors: &[&FactorTerms]) -> Result<()> {
    let mut idx = vec![0usize; factors.len()];
    loop {
        let mut coeff = scale;
        let mut ops: Vec<(usize, PauliOp)> = Vec::new();
        for (f, &i) in factors.iter().zip(&idx) {
            coeff *= f[i].0;
            ops.extend_from_slice(&f[i].1);
        }
        ops.sort_unstable_by_key(|&(q, _)| q);
        target.push(coeff, ops)?;
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < factors[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == factors.len() {
                return Ok(());
            }
        }
    }
}

/// Ladder pair sum without the cutoff precondition: empty when N < m.
fn ladder_terms(
    mode: usize,
    m: usize,
    r: usize,
    n_max: usize,
    n_modes: usize,
) -> Result<PauliSum> {
    let width = n_max + 1;
    let base = mode * width;
    let mut out = PauliSum::new(width * n_modes);
    if m > n_max {
        return Ok(out);
    }
    for n in 0..=(n_max - m) {
        // ((n+m)!/n!)^{1/2} · n^r, halved by the two-string hop expansion.
        let ratio: f64 = (1..=m).map(|j| (n + j) as f64).product();
        let coeff = 0.5 * ratio.sqrt() * (n as f64).powi(r as i32);
        if coeff == 0.0 {
            continue;
        }
        let (q1, q2) = (base + n, base + n + m);
        out.push(coeff, vec![(q1, PauliOp::X), (q2, PauliOp::X)])?;
        out.push(coeff, vec![(q1, PauliOp::Y), (q2, PauliOp::Y)])?;
    }
    Ok(out)
}

/// Unary image of (a†)^m n̂^r + n̂^r a^m on one mode register:
/// ½ Σ_n ((n+m)!/n!)^{1/2} n^r (X_nX_{n+m} + Y_nY_{n+m}).
pub fn map_ladder(
    mode: usize,
    m: usize,
    r: usize,
    n_max: usize,
    n_modes: usize,
) -> Result<PauliSum> {
    assert!(m >= 1, "ladder power m must be at least 1");
    assert!(mode < n_modes, "mode index out of range");
    if n_max < m {
        return Err(Error::CutoffTooSmall {
            n: n_max,
            what: format!("ladder power m={m}"),
        });
    }
    ladder_terms(mode, m, r, n_max, n_modes)
}

/// Unary image of n̂^r on one mode register: Σ_n (n^r/2)(I − Z_n).
pub fn map_number_power(mode: usize, r: usize, n_max: usize, n_modes: usize) -> Result<PauliSum> {
    assert!(mode < n_modes, "mode index out of range");
    let width = n_max + 1;
    let base = mode * width;
    let mut out = PauliSum::new(width * n_modes);
    for n in 0..=n_max {
        let c = 0.5 * (n as f64).powi(r as i32);
        if c == 0.0 {
            continue;
        }
        out.push(c, vec![])?;
        out.push(-c, vec![(base + n, PauliOp::Z)])?;
    }
    Ok(out)
}

fn in_gap2_low_class(n: usize) -> bool {
    matches!(n % 4, 1 | 2)
}

/// Build the full occupation-basis Hamiltonian.
///
/// Quartic momentum tuples are enumerated as (p₁, p₂, p₁+q, p₂−q) over all
/// (p₁, p₂, q); each tuple is routed to the group matching its coincidence
/// pattern, and tuples matching none of the four patterns (e.g. two repeated
/// pairs across the conservation split) are discarded.
pub fn build_occ_hamiltonian(
    params: &LatticeParams,
    cutoffs: &OccupationCutoffs,
    normalization: OccNormalization,
) -> Result<OccHamiltonian> {
    let grid = ModeGrid::new(params);
    let n_modes = grid.len();
    debug_assert_eq!(n_modes, params.omega);
    let n_max = cutoffs.n_max;
    let width = n_max + 1;
    let nq = width * n_modes;
    let lam = params.scaled_coupling;

    let vol = n_modes as f64;
    let two_pi_d = (2.0 * std::f64::consts::PI).powi(params.d as i32);
    let (div3, div2, div1, div0) = match normalization {
        OccNormalization::Volume => (vol * vol * vol, vol * vol, vol, 1.0),
        OccNormalization::MomentumDensity => (two_pi_d, two_pi_d, two_pi_d, two_pi_d),
    };

    let mut frags: BTreeMap<&'static str, PauliSum> = FRAGMENT_NAMES
        .iter()
        .map(|&name| (name, PauliSum::new(nq)))
        .collect();

    let mut h0 = PauliSum::new(nq);
    for p in 0..n_modes {
        h0.extend(&map_number_power(p, 1, n_max, n_modes)?.scaled(grid.omegas[p] / div0))?;
    }

    let mut h4 = PauliSum::new(nq);
    let zero = grid.zero();

    if lam != 0.0 {
        for p1 in 0..n_modes {
            for p2 in 0..n_modes {
                for q in 0..n_modes {
                    let p3 = grid.add(p1, q);
                    let p4 = grid.sub(p2, q);
                    let (w1, w2, w3, w4) = (
                        grid.omegas[p1],
                        grid.omegas[p2],
                        grid.omegas[p3],
                        grid.omegas[p4],
                    );

                    if p1 == p2 && q == zero {
                        // Single-mode pattern: (a†+a)⁴ normal-ordered on p₁.
                        let c4 = lam / (96.0 * div1 * w1 * w1);
                        let mut part = ladder_terms(p1, 4, 0, n_max, n_modes)?.scaled(c4);
                        part.extend(&ladder_terms(p1, 2, 1, n_max, n_modes)?.scaled(4.0 * c4))?;
                        part.extend(&map_number_power(p1, 2, n_max, n_modes)?.scaled(6.0 * c4))?;
                        part.extend(&map_number_power(p1, 1, n_max, n_modes)?.scaled(-6.0 * c4))?;
                        h4.extend(&part)?;
                    } else if q == zero {
                        // Pattern (p₁, p₂, p₁, p₂): product of two squared
                        // ladder factors a†² + a² + 2n̂ on distinct modes.
                        let c3 = lam / (96.0 * div2 * w1 * w2);
                        for n1 in 0..n_max.saturating_sub(1) {
                            for n2 in 0..n_max.saturating_sub(1) {
                                let c = c3
                                    * (((n1 + 2) * (n1 + 1) * (n2 + 2) * (n2 + 1)) as f64).sqrt()
                                    / 4.0;
                                let name = if in_gap2_low_class(n1) != in_gap2_low_class(n2) {
                                    "h31"
                                } else {
                                    "h32"
                                };
                                push_product(
                                    frags.get_mut(name).unwrap(),
                                    c,
                                    &[&hop_factor(p1 * width, n1, 2), &hop_factor(p2 * width, n2, 2)],
                                )?;
                            }
                        }
                        for n1 in 0..n_max.saturating_sub(1) {
                            for n2 in 1..=n_max {
                                let c = c3 * n2 as f64 * (((n1 + 2) * (n1 + 1)) as f64).sqrt()
                                    / 2.0;
                                let name = if in_gap2_low_class(n1) { "h33" } else { "h34" };
                                push_product(
                                    frags.get_mut(name).unwrap(),
                                    c,
                                    &[&hop_factor(p1 * width, n1, 2), &iz_factor(p2 * width, n2)],
                                )?;
                            }
                        }
                        for n2 in 0..n_max.saturating_sub(1) {
                            for n1 in 1..=n_max {
                                let c = c3 * n1 as f64 * (((n2 + 2) * (n2 + 1)) as f64).sqrt()
                                    / 2.0;
                                let name = if in_gap2_low_class(n2) { "h35" } else { "h36" };
                                push_product(
                                    frags.get_mut(name).unwrap(),
                                    c,
                                    &[&hop_factor(p2 * width, n2, 2), &iz_factor(p1 * width, n1)],
                                )?;
                            }
                        }
                        for n1 in 1..=n_max {
                            for n2 in 1..=n_max {
                                let c = c3 * (n1 * n2) as f64;
                                push_product(
                                    frags.get_mut("h37").unwrap(),
                                    c,
                                    &[&iz_factor(p1 * width, n1), &iz_factor(p2 * width, n2)],
                                )?;
                            }
                        }
                    } else if p1 == p2 && p3 != p4 && p3 != p1 && p4 != p1 {
                        // Pattern (p, p, p+q, p−q): squared ladder on p times
                        // single hops on the two sideband modes.
                        let c2 = lam / (96.0 * div2 * w1 * (w3 * w4).sqrt());
                        for n2 in 0..n_max {
                            for n3 in 0..n_max {
                                let hop3 = hop_factor(p3 * width, n2, 1);
                                let hop4 = hop_factor(p4 * width, n3, 1);
                                let side = (((n2 + 1) * (n3 + 1)) as f64).sqrt();
                                let same_parity = n2 % 2 == n3 % 2;
                                for n1 in 0..n_max.saturating_sub(1) {
                                    let c = c2
                                        * (((n1 + 2) * (n1 + 1)) as f64).sqrt()
                                        * side
                                        / 8.0;
                                    let name = if same_parity != in_gap2_low_class(n1) {
                                        "h21"
                                    } else {
                                        "h22"
                                    };
                                    push_product(
                                        frags.get_mut(name).unwrap(),
                                        c,
                                        &[&hop_factor(p1 * width, n1, 2), &hop3, &hop4],
                                    )?;
                                }
                                for n1 in 1..=n_max {
                                    let c = c2 * n1 as f64 * side / 4.0;
                                    let name = if same_parity { "h24" } else { "h23" };
                                    push_product(
                                        frags.get_mut(name).unwrap(),
                                        c,
                                        &[&iz_factor(p1 * width, n1), &hop3, &hop4],
                                    )?;
                                }
                            }
                        }
                    } else if p1 != p2
                        && p1 != p3
                        && p1 != p4
                        && p2 != p3
                        && p2 != p4
                        && p3 != p4
                    {
                        // All four modes distinct: product of four single hops.
                        let c1 = lam / (1536.0 * div3 * (w1 * w2 * w3 * w4).sqrt());
                        for n1 in 0..n_max {
                            let f1 = hop_factor(p1 * width, n1, 1);
                            for n2 in 0..n_max {
                                let f2 = hop_factor(p2 * width, n2, 1);
                                for n3 in 0..n_max {
                                    let f3 = hop_factor(p3 * width, n3, 1);
                                    for n4 in 0..n_max {
                                        let f4 = hop_factor(p4 * width, n4, 1);
                                        let c = c1
                                            * (((n1 + 1) * (n2 + 1) * (n3 + 1) * (n4 + 1)) as f64)
                                                .sqrt();
                                        let evens = [n1, n2, n3, n4]
                                            .iter()
                                            .filter(|&&n| n % 2 == 0)
                                            .count();
                                        let name = if evens % 2 == 0 { "h11" } else { "h12" };
                                        push_product(
                                            frags.get_mut(name).unwrap(),
                                            c,
                                            &[&f1, &f2, &f3, &f4],
                                        )?;
                                    }
                                }
                            }
                        }
                    }
                    // Remaining coincidence patterns (repeated pairs across the
                    // conservation split) are excluded from all four groups.
                }
            }
        }
    }

    let collect = |names: &[&str]| -> Result<PauliSum> {
        let mut out = PauliSum::new(nq);
        for name in names {
            out.extend(&frags[name])?;
        }
        Ok(out)
    };
    let h1 = collect(&["h11", "h12"])?;
    let h2 = collect(&["h21", "h22", "h23", "h24"])?;
    let h3 = collect(&["h31", "h32", "h33", "h34", "h35", "h36", "h37"])?;

    let mut merged = h4.clone();
    merged.extend(&h0)?;
    *frags.get_mut("h4p").unwrap() = merged;

    let mut total = h0.clone();
    total.extend(&h1)?;
    total.extend(&h2)?;
    total.extend(&h3)?;
    total.extend(&h4)?;

    let fragments = FRAGMENT_NAMES
        .iter()
        .map(|&name| (name, frags.remove(name).unwrap()))
        .collect();

    Ok(OccHamiltonian {
        params: *params,
        cutoffs: *cutoffs,
        normalization,
        h0,
        h1,
        h2,
        h3,
        h4,
        total,
        fragments,
    })
}

/// Per-step gate counts for exponentiating each group, from the diagonalized
/// hopping-network constructions.
pub fn gate_counts_occ(cutoffs: &OccupationCutoffs, params: &LatticeParams) -> OccGateCounts {
    let n = cutoffs.n_max as i128;
    let v = params.omega as i128;
    let r = Ratio::from_integer;

    let base1 = r(n.pow(4) * v * v * (v - 1));
    let group1 = GateCountOcc {
        crz: base1 / r(48),
        t: base1 / r(4),
        cnot: base1 * r(11) / r(16),
        h: base1 / r(24),
    };
    let base2 = r(n.pow(3) * v * v);
    let group2 = GateCountOcc {
        crz: base2 / r(3),
        t: base2 * r(8) / r(3),
        cnot: base2 * r(20) / r(3),
        h: base2 * r(2) / r(3),
    };
    let base3 = r(n * n * v * (v - 1));
    let group3 = GateCountOcc {
        crz: base3 * r(2),
        t: base3 * r(8),
        cnot: base3 * r(16),
        h: base3 * r(3),
    };
    let group4 = GateCountOcc {
        crz: r(3 * n * v),
        t: r(0),
        cnot: r(4 * n * v),
        h: r(4 * n * v),
    };
    let free = GateCountOcc {
        crz: r(n * v),
        t: r(0),
        cnot: r(0),
        h: r(0),
    };
    let total = GateCountOcc::sum(&[free, group1, group2, group3, group4]);
    OccGateCounts {
        free,
        group1,
        group2,
        group3,
        group4,
        total,
    }
}

/// Closed-form bound on the nested-commutator sum governing the second-order
/// product-formula error (error ≤ bound · τ³).
///
/// `beta` ∈ [0, 1] locates the occupation n = βN maximizing the diagonal
/// fragment's per-term weight; β = 1 is the worst case.
pub fn alpha_comm_occ(params: &LatticeParams, cutoffs: &OccupationCutoffs, beta: f64) -> f64 {
    assert!((0.0..=1.0).contains(&beta), "beta must lie in [0, 1]");
    let lam = params.scaled_coupling;
    if lam == 0.0 {
        return 0.0;
    }
    let disp = dispersion_table(params);
    let (wmin, wmax) = (disp.omega_min, disp.omega_max);
    let n = cutoffs.n_max as f64;

    let q = lam / (96.0 * wmin * wmin);
    // Peak diagonal weight over occupations, attained at n = βN.
    let b = beta * wmax + lam * beta * (n * beta - 1.0) / (16.0 * wmin * wmin);

    let s12 = ((n + 1.0) * (n + 2.0)).sqrt();
    let s34 = ((n + 3.0) * (n + 4.0)).sqrt();
    let g4 = s12 * s34;

    // Pairwise commutator bounds: within each group, then across groups.
    let c_h1 = (lam / (wmin * wmin)).powi(2) * (n + 1.0).powi(4) / 6144.0;
    let c_h2 = q * q
        * 3.0
        * (4.0 * n * n * (n + 1.0).powi(2) + 8.0 * n * (n + 1.0).powf(2.5) * (n + 2.0).sqrt());
    let c_h3 = q * q
        * (2.0 * n * n * (n + 1.0) * (n + 2.0) + 16.0 * n.powi(3) * s12);
    let c_h4 = q * q
        * (n + 1.0)
        * (n + 2.0)
        * ((n + 3.0) * (n + 4.0) + 16.0 * n * s34 + 16.0 * n * n)
        + lam / (48.0 * wmin * wmin) * s12 * (s34 + 4.0 * n) * b;
    let c_12 = q * q * 16.0 * n * (n + 1.0).powi(3) * (s12 + 2.0 * n);
    let c_13 = q * q
        * 64.0
        * (n + 1.0).powi(2)
        * ((n + 1.0) * (n + 2.0) + 4.0 * n * s12 + 3.0 * n * n);
    let c_14 = q * q * 32.0 * (n + 1.0).powf(2.5) * (n + 2.0).sqrt() * (s34 + 4.0 * n)
        + q * 16.0 * n * (n + 1.0).powi(2) * b;
    let c_23 = q * q
        * (48.0 * n * n * (n + 1.0).powf(1.5) * (n + 2.0).sqrt() + 288.0 * n.powi(3) * (n + 1.0));
    let c_24 = q * q
        * 24.0
        * n
        * (n + 1.0).powf(1.5)
        * (n + 2.0).sqrt()
        * (s12 + 2.0 * n)
        * (s34 + 4.0 * n)
        + q * 12.0 * n * n * (n + 1.0) * (s12 + 2.0 * n) * b;
    let c_34 = q * q * 16.0 * s12 * (s12 + n) * (s12 + 3.0 * n) * (s12 + 4.0 * n)
        + q * 4.0 * n * (2.0 * (n + 1.0) * (n + 2.0) + 8.0 * n * s12 + 3.0 * n * n) * b;
    let comm = c_h1 + c_h2 + c_h3 + c_h4 + c_12 + c_13 + c_14 + c_23 + c_24 + c_34;

    // Triangle-inequality norms of the five parts.
    let n0 = wmax * n / 2.0;
    let n1 = lam * (n + 1.0).powi(2) / (192.0 * wmin * wmin);
    let n2 = lam * (n + 1.0) * (s12 + 2.0 * n) / (96.0 * wmin * wmin);
    let n3 = lam * (s12 + 2.0 * n).powi(2) / (96.0 * wmin * wmin);
    let n4 = lam * (g4 + 4.0 * n * s12 + 6.0 * n * n) / (96.0 * wmin * wmin);
    let norms = n0 + n1 + n2 + n3 + n4;

    // Second-order formula: 2^{p−p′−1} = 1 with p = 2, p′ = 1.
    comm * norms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::CMatrix;
    use crate::pauli::{unary_basis_indices, Subspace};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn params(lambda: f64, p_sites: usize) -> LatticeParams {
        LatticeParams::new(1.0, lambda, 1.0, 1, p_sites).unwrap()
    }

    fn term_map(sum: &PauliSum) -> BTreeMap<Vec<(usize, PauliOp)>, f64> {
        sum.terms().map(|t| (t.factors, t.coeff)).collect()
    }

    fn assert_sums_close(a: &PauliSum, b: &PauliSum, tol: f64) {
        let (ma, mb) = (term_map(a), term_map(b));
        let keys: std::collections::BTreeSet<_> = ma.keys().chain(mb.keys()).collect();
        for k in keys {
            let (ca, cb) = (
                ma.get(k).copied().unwrap_or(0.0),
                mb.get(k).copied().unwrap_or(0.0),
            );
            assert!(
                (ca - cb).abs() <= tol,
                "coefficient mismatch on {k:?}: {ca} vs {cb}"
            );
        }
    }

    // Truncated ladder matrices for the dense oracle.
    fn lower(width: usize) -> CMatrix {
        CMatrix::from_fn(width, |i, j| {
            if j == i + 1 {
                Complex64::new((j as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn embed(op: &CMatrix, mode: usize, n_modes: usize) -> CMatrix {
        let mut out = CMatrix::identity(1);
        for p in 0..n_modes {
            let factor = if p == mode {
                op.clone()
            } else {
                CMatrix::identity(op.dim())
            };
            out = out.kron(&factor);
        }
        out
    }

    fn num_op(width: usize) -> CMatrix {
        CMatrix::from_real_diag(&(0..width).map(|n| n as f64).collect::<Vec<_>>())
    }

    /// a†² + a² + 2n̂ on one mode, truncated.
    fn squared_ladder(width: usize) -> CMatrix {
        let a = lower(width);
        let ad = a.dagger();
        ad.matmul(&ad)
            .add(&a.matmul(&a))
            .add(&num_op(width).scale(Complex64::new(2.0, 0.0)))
    }

    /// Dense normal-ordered oracle for every part, same tuple sweep as the
    /// builder but assembled from truncated ladder matrices.
    fn dense_oracle(params: &LatticeParams, n_max: usize) -> [CMatrix; 5] {
        let grid = ModeGrid::new(params);
        let n_modes = grid.len();
        let width = n_max + 1;
        let dim = width.pow(n_modes as u32);
        let lam = params.scaled_coupling;
        let vol = n_modes as f64;

        let a = lower(width);
        let ad = a.dagger();
        let nh = num_op(width);
        let a1 = a.add(&ad);
        let a2 = squared_ladder(width);

        let mut h0 = CMatrix::zeros(dim);
        for p in 0..n_modes {
            h0.add_assign_scaled(
                &embed(&nh, p, n_modes),
                Complex64::new(grid.omegas[p], 0.0),
            );
        }

        let mut groups = [
            CMatrix::zeros(dim),
            CMatrix::zeros(dim),
            CMatrix::zeros(dim),
            CMatrix::zeros(dim),
        ];
        let zero = grid.zero();
        for p1 in 0..n_modes {
            for p2 in 0..n_modes {
                for q in 0..n_modes {
                    let p3 = grid.add(p1, q);
                    let p4 = grid.sub(p2, q);
                    let (w1, w2, w3, w4) = (
                        grid.omegas[p1],
                        grid.omegas[p2],
                        grid.omegas[p3],
                        grid.omegas[p4],
                    );
                    if p1 == p2 && q == zero {
                        let c = lam / (96.0 * vol * w1 * w1);
                        let a4 = ad
                            .matmul(&ad)
                            .matmul(&ad)
                            .matmul(&ad)
                            .add(&a.matmul(&a).matmul(&a).matmul(&a));
                        let cross = ad.matmul(&ad).matmul(&nh).add(&nh.matmul(&a).matmul(&a));
                        let diag = nh.matmul(&nh).sub(&nh);
                        let op = a4
                            .add(&cross.scale(Complex64::new(4.0, 0.0)))
                            .add(&diag.scale(Complex64::new(6.0, 0.0)));
                        groups[3].add_assign_scaled(&embed(&op, p1, n_modes), Complex64::new(c, 0.0));
                    } else if q == zero {
                        if p1 == p2 {
                            continue;
                        }
                        let c = lam / (96.0 * vol * vol * w1 * w2);
                        let op = embed(&a2, p1, n_modes).matmul(&embed(&a2, p2, n_modes));
                        groups[2].add_assign_scaled(&op, Complex64::new(c, 0.0));
                    } else if p1 == p2 && p3 != p4 && p3 != p1 && p4 != p1 {
                        let c = lam / (96.0 * vol * vol * w1 * (w3 * w4).sqrt());
                        let op = embed(&a2, p1, n_modes)
                            .matmul(&embed(&a1, p3, n_modes))
                            .matmul(&embed(&a1, p4, n_modes));
                        groups[1].add_assign_scaled(&op, Complex64::new(c, 0.0));
                    } else if p1 != p2
                        && p1 != p3
                        && p1 != p4
                        && p2 != p3
                        && p2 != p4
                        && p3 != p4
                    {
                        // λ/(24|Ω|³) with /√(2ω) per mode: the 2⁴ under the
                        // root contributes 1/4, leaving λ/(96|Ω|³√(Πω)).
                        let c = lam / (96.0 * vol * vol * vol * (w1 * w2 * w3 * w4).sqrt());
                        let op = embed(&a1, p1, n_modes)
                            .matmul(&embed(&a1, p2, n_modes))
                            .matmul(&embed(&a1, p3, n_modes))
                            .matmul(&embed(&a1, p4, n_modes));
                        groups[0].add_assign_scaled(&op, Complex64::new(c, 0.0));
                    }
                }
            }
        }
        let [g1, g2, g3, g4] = groups;
        [h0, g1, g2, g3, g4]
    }

    fn restrict_unary(sum: &PauliSum, width: usize) -> CMatrix {
        let dense = sum.to_dense().unwrap();
        let idx = unary_basis_indices(sum.n_qubits(), width);
        dense.restrict_indices(&idx)
    }

    #[test]
    fn ladder_single_hop_weights() {
        let s = map_ladder(0, 1, 0, 1, 1).unwrap();
        let m = term_map(&s);
        assert_eq!(m.len(), 2);
        assert_abs_diff_eq!(m[&vec![(0, PauliOp::X), (1, PauliOp::X)]], 0.5);
        assert_abs_diff_eq!(m[&vec![(0, PauliOp::Y), (1, PauliOp::Y)]], 0.5);
    }

    #[test]
    fn ladder_double_hop_weights() {
        let s = map_ladder(0, 2, 0, 2, 1).unwrap();
        let m = term_map(&s);
        assert_eq!(m.len(), 2);
        let c = 0.5 * 2.0f64.sqrt();
        assert_abs_diff_eq!(m[&vec![(0, PauliOp::X), (2, PauliOp::X)]], c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[&vec![(0, PauliOp::Y), (2, PauliOp::Y)]], c, epsilon = 1e-15);
    }

    #[test]
    fn ladder_number_weighted_drops_ground_term() {
        let s = map_ladder(0, 1, 1, 2, 1).unwrap();
        let m = term_map(&s);
        // The n = 0 pair carries weight n^1 = 0; only the (1,2) hop survives.
        assert_eq!(m.len(), 2);
        let c = 0.5 * 2.0f64.sqrt();
        assert_abs_diff_eq!(m[&vec![(1, PauliOp::X), (2, PauliOp::X)]], c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[&vec![(1, PauliOp::Y), (2, PauliOp::Y)]], c, epsilon = 1e-15);
    }

    #[test]
    fn ladder_rejects_cutoff_below_power() {
        assert!(matches!(
            map_ladder(0, 3, 0, 2, 1),
            Err(Error::CutoffTooSmall { n: 2, .. })
        ));
    }

    #[test]
    fn ladder_matches_dense_truncation() {
        // ½Σ√((n+m)!/n!) n^r hops == (a†)^m n̂^r + n̂^r a^m on the code space.
        for (m, r, n_max) in [(1, 0, 3), (2, 0, 3), (1, 1, 3), (2, 1, 4), (4, 0, 5)] {
            let sum = map_ladder(0, m, r, n_max, 1).unwrap();
            let width = n_max + 1;
            let got = restrict_unary(&sum, width);
            let a = lower(width);
            let ad = a.dagger();
            let mut up = CMatrix::identity(width);
            let mut down = CMatrix::identity(width);
            for _ in 0..m {
                up = up.matmul(&ad);
                down = down.matmul(&a);
            }
            let nr = CMatrix::from_real_diag(
                &(0..width).map(|n| (n as f64).powi(r as i32)).collect::<Vec<_>>(),
            );
            let want = up.matmul(&nr).add(&nr.matmul(&down));
            assert!(got.sub(&want).max_abs_entry() < 1e-12);
        }
    }

    #[test]
    fn free_theory_collapses_to_dispersion_term() {
        let h = build_occ_hamiltonian(
            &params(0.0, 2),
            &OccupationCutoffs::new(2).unwrap(),
            OccNormalization::Volume,
        )
        .unwrap();
        assert!(h.h1.is_empty() && h.h2.is_empty() && h.h3.is_empty() && h.h4.is_empty());
        assert_sums_close(&h.total, &h.h0, 0.0);
        // Σ_p ω_p n̂_p term by term.
        let grid = ModeGrid::new(&params(0.0, 2));
        let mut expect = PauliSum::new(h.n_qubits());
        for p in 0..2 {
            expect
                .extend(&map_number_power(p, 1, 2, 2).unwrap().scaled(grid.omegas[p]))
                .unwrap();
        }
        assert_sums_close(&h.h0, &expect, 0.0);
    }

    #[test]
    fn free_spectrum_is_sum_of_mode_frequencies() {
        let pr = params(1.0, 2);
        let cut = OccupationCutoffs::new(2).unwrap();
        let h = build_occ_hamiltonian(&pr, &cut, OccNormalization::Volume).unwrap();
        let dense = restrict_unary(&h.h0, 3);
        let (mut eigs, _) = dense.hermitian_eigen();
        let grid = ModeGrid::new(&pr);
        let (w0, w1) = (grid.omegas[0], grid.omegas[1]);
        let mut expect: Vec<f64> = (0..3)
            .flat_map(|n0| (0..3).map(move |n1| n0 as f64 * w0 + n1 as f64 * w1))
            .collect();
        expect.sort_by(f64::total_cmp);
        eigs.sort_by(f64::total_cmp);
        for (a, b) in eigs.iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn groups_match_dense_ladder_oracle() {
        // Every group equals its normal-ordered ladder construction on the
        // code space, for all cutoff/volume combinations the oracle covers.
        for (n_max, p_sites) in [(1, 1), (2, 1), (1, 2), (2, 2), (2, 3), (1, 4)] {
            let pr = params(1.0, p_sites);
            let cut = OccupationCutoffs::new(n_max).unwrap();
            let h = build_occ_hamiltonian(&pr, &cut, OccNormalization::Volume).unwrap();
            let oracle = dense_oracle(&pr, n_max);
            let parts = [&h.h0, &h.h1, &h.h2, &h.h3, &h.h4];
            for (i, part) in parts.iter().enumerate() {
                let got = restrict_unary(part, n_max + 1);
                let diff = got.sub(&oracle[i]).max_abs_entry();
                assert!(
                    diff < 1e-12,
                    "part {i} deviates from ladder oracle by {diff:.2e} at N={n_max}, P={p_sites}"
                );
            }
        }
    }

    #[test]
    fn quartic_single_mode_matches_spec_matrix() {
        // N=2, single mode: only the diagonal 6(n̂²−n̂) piece survives the
        // truncation, with prefactor λ/(96ω²).
        let pr = params(1.0, 1);
        let h = build_occ_hamiltonian(
            &pr,
            &OccupationCutoffs::new(2).unwrap(),
            OccNormalization::Volume,
        )
        .unwrap();
        let got = restrict_unary(&h.h4, 3);
        let c = 1.0 / 96.0; // ω = M = 1
        let want = CMatrix::from_real_diag(&[0.0, 0.0, 12.0 * c]);
        assert!(got.sub(&want).max_abs_entry() < 1e-14);
    }

    #[test]
    fn two_mode_pair_group_is_pure_number_number_at_unit_cutoff() {
        // N=1, |Ω|=2: hops with gap 2 cannot fit, so the (p₁,p₂,p₁,p₂) group
        // reduces to its n̂₁n̂₂ diagonal with weight λ/(96|Ω|²ω₁ω₂) per
        // ordered pair.
        let pr = params(1.0, 2);
        let h = build_occ_hamiltonian(
            &pr,
            &OccupationCutoffs::new(1).unwrap(),
            OccNormalization::Volume,
        )
        .unwrap();
        assert!(h.h1.is_empty() && h.h2.is_empty() && h.h4.is_empty());
        let grid = ModeGrid::new(&pr);
        let c = 2.0 / (96.0 * 4.0 * grid.omegas[0] * grid.omegas[1]);
        let m = term_map(&h.h3);
        assert_eq!(m.len(), 4);
        assert_abs_diff_eq!(m[&vec![]], c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[&vec![(1, PauliOp::Z)]], -c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[&vec![(3, PauliOp::Z)]], -c, epsilon = 1e-15);
        assert_abs_diff_eq!(
            m[&vec![(1, PauliOp::Z), (3, PauliOp::Z)]],
            c,
            epsilon = 1e-15
        );
        // Only the diagonal fragment of that group is populated.
        for (name, frag) in h.fragments() {
            match *name {
                "h37" | "h4p" => assert!(!frag.is_empty()),
                _ => assert!(frag.is_empty(), "unexpected terms in {name}"),
            }
        }
    }

    #[test]
    fn fragments_partition_total() {
        let h = build_occ_hamiltonian(
            &params(1.0, 2),
            &OccupationCutoffs::new(2).unwrap(),
            OccNormalization::Volume,
        )
        .unwrap();
        let mut sum = PauliSum::new(h.n_qubits());
        for (_, frag) in h.fragments() {
            sum.extend(frag).unwrap();
        }
        assert_sums_close(&sum, &h.total, 1e-12);
        assert_eq!(h.fragments().len(), FRAGMENT_NAMES.len());
    }

    #[test]
    fn momentum_density_rescales_every_part() {
        let pr = params(1.0, 2);
        let cut = OccupationCutoffs::new(2).unwrap();
        let vol_mode = build_occ_hamiltonian(&pr, &cut, OccNormalization::Volume).unwrap();
        let dens_mode =
            build_occ_hamiltonian(&pr, &cut, OccNormalization::MomentumDensity).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_sums_close(&vol_mode.h0.scaled(1.0 / two_pi), &dens_mode.h0, 1e-15);
        // |Ω|=2 groups carry |Ω|² in volume mode, (2π)^d in density mode.
        assert_sums_close(&vol_mode.h3.scaled(4.0 / two_pi), &dens_mode.h3, 1e-15);
        assert_sums_close(&vol_mode.h4.scaled(2.0 / two_pi), &dens_mode.h4, 1e-15);
    }

    #[test]
    fn unary_code_space_is_preserved() {
        for (n_max, p_sites) in [(2, 2), (3, 2), (3, 1)] {
            let h = build_occ_hamiltonian(
                &params(1.0, p_sites),
                &OccupationCutoffs::new(n_max).unwrap(),
                OccNormalization::Volume,
            )
            .unwrap();
            let dense = h.total.to_dense().unwrap();
            let idx = unary_basis_indices(h.n_qubits(), n_max + 1);
            let inside: std::collections::BTreeSet<usize> = idx.iter().copied().collect();
            for &col in &idx {
                for row in 0..dense.dim() {
                    if !inside.contains(&row) {
                        assert!(
                            dense[(row, col)].norm() < 1e-14,
                            "leakage out of the code space at ({row}, {col})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gate_count_examples() {
        let c4 = gate_counts_occ(
            &OccupationCutoffs::new(4).unwrap(),
            &params(1.0, 4),
        );
        assert_eq!(c4.group1.crz, Ratio::from_integer(256));
        assert_eq!(c4.group1.t, Ratio::from_integer(3072));
        assert_eq!(c4.group1.cnot, Ratio::from_integer(8448));
        assert_eq!(c4.group1.h, Ratio::from_integer(512));

        let c2 = gate_counts_occ(
            &OccupationCutoffs::new(2).unwrap(),
            &params(1.0, 2),
        );
        assert_eq!(c2.group3.crz, Ratio::from_integer(16));
        assert_eq!(c2.group3.t, Ratio::from_integer(64));
        assert_eq!(c2.group3.cnot, Ratio::from_integer(128));
        assert_eq!(c2.group3.h, Ratio::from_integer(24));
        // Fractional counts stay exact until explicitly ceiled.
        assert_eq!(c2.group2.crz, Ratio::new(32, 3));
        assert_eq!(ceil_count(c2.group2.crz), 11);

        let pr3 = LatticeParams::new(1.0, 1.0, 1.0, 1, 3).unwrap();
        let c3 = gate_counts_occ(&OccupationCutoffs::new(2).unwrap(), &pr3);
        assert_eq!(c3.group4.crz, Ratio::from_integer(18));
        assert_eq!(c3.group4.cnot, Ratio::from_integer(24));
        assert_eq!(c3.group4.h, Ratio::from_integer(24));
        assert_eq!(c3.group4.t, Ratio::from_integer(0));

        let t = GateCountOcc::sum(&[c3.free, c3.group1, c3.group2, c3.group3, c3.group4]);
        assert_eq!(t.crz, c3.total.crz);
        assert_eq!(c3.rotations(), c3.total.crz);
        assert_eq!(c3.t_direct(), c3.total.t);
    }

    #[test]
    fn commutator_bound_vanishes_without_coupling() {
        assert_eq!(
            alpha_comm_occ(
                &params(0.0, 2),
                &OccupationCutoffs::new(4).unwrap(),
                1.0
            ),
            0.0
        );
    }

    /// Nested-commutator witness for the second-order formula: the exact
    /// dense value the closed-form bound must dominate.
    fn nested_witness(h: &OccHamiltonian) -> f64 {
        let width = h.cutoffs.n_max + 1;
        let frags: Vec<CMatrix> = h
            .fragments()
            .iter()
            .filter(|(_, f)| !f.is_empty())
            .map(|(_, f)| restrict_unary(f, width))
            .collect();
        let dim = frags[0].dim();
        let mut w = 0.0;
        for g1 in 0..frags.len() {
            let mut tail = CMatrix::zeros(dim);
            for f in frags.iter().skip(g1 + 1) {
                tail.add_assign_scaled(f, Complex64::new(1.0, 0.0));
            }
            let inner = tail.matmul(&frags[g1]).sub(&frags[g1].matmul(&tail));
            let outer1 = tail.matmul(&inner).sub(&inner.matmul(&tail));
            let outer2 = frags[g1].matmul(&inner).sub(&inner.matmul(&frags[g1]));
            w += outer1.spectral_norm() / 12.0 + outer2.spectral_norm() / 24.0;
        }
        w
    }

    #[test]
    fn commutator_bound_dominates_dense_witness() {
        let pr = params(1.0, 2);
        let cut = OccupationCutoffs::new(2).unwrap();
        let h = build_occ_hamiltonian(&pr, &cut, OccNormalization::Volume).unwrap();
        let bound = alpha_comm_occ(&pr, &cut, 1.0);
        let witness = nested_witness(&h);
        assert!(bound > 0.0);
        assert!(
            witness <= bound,
            "closed-form bound {bound:.3e} below dense witness {witness:.3e}"
        );
    }

    #[test]
    fn commutator_bound_doubling_ratio() {
        // The headline N⁶ scaling holds where the pure double-commutator
        // terms dominate; doubling the cutoff there scales the bound by
        // about 2⁶. Measured ratios at λ=M=1, |Ω|=2: 50.9 (8→16), 69.5
        // (16→32), 88.0 (32→64): the β-weighted diagonal cross terms push
        // the eventual asymptote to 2⁷, so the 2⁶ window is the 16→32
        // doubling.
        let pr = params(1.0, 2);
        let a1 = alpha_comm_occ(&pr, &OccupationCutoffs::new(16).unwrap(), 1.0);
        let a2 = alpha_comm_occ(&pr, &OccupationCutoffs::new(32).unwrap(), 1.0);
        let ratio = a2 / a1;
        assert!(
            (51.2..=76.8).contains(&ratio),
            "doubling ratio {ratio} outside 64 ± 20%"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn total_is_hermitian_and_unary_norms_finite(
            n_max in 1usize..=3,
            p_sites in 1usize..=2,
            lambda in 0.0f64..2.0,
            mass in 0.5f64..2.0,
        ) {
            let pr = LatticeParams::new(mass, lambda, 1.0, 1, p_sites).unwrap();
            let cut = OccupationCutoffs::new(n_max).unwrap();
            let h = build_occ_hamiltonian(&pr, &cut, OccNormalization::Volume).unwrap();
            let dense = h.total.to_dense().unwrap();
            prop_assert!(dense.hermiticity_defect() < 1e-12);
            let norm = h.total.spectral_norm(Subspace::Unary { mode_width: n_max + 1 }).unwrap();
            prop_assert!(norm.is_finite());
        }

        #[test]
        fn commutator_bound_monotone_in_coupling(
            n_max in 1usize..=6,
            lambda in 0.01f64..2.0,
            beta in 0.0f64..=1.0,
        ) {
            let cut = OccupationCutoffs::new(n_max).unwrap();
            let lo = alpha_comm_occ(&params(lambda, 2), &cut, beta);
            let hi = alpha_comm_occ(&params(2.0 * lambda, 2), &cut, beta);
            prop_assert!(lo >= 0.0);
            prop_assert!(hi >= lo);
        }
    }
}
