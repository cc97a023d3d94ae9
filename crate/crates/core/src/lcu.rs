//! LCU decompositions of the single-site field powers Φ/Δφ, (Φ/Δφ)² and
//! (Φ/Δφ)⁴ into ±1 diagonal unitaries, in three families: equal-weight
//! comparator thresholds, Pauli-Z binary expansions, and bit-plane signature
//! matrices. Π² needs no family of its own, it is the Φ² family conjugated
//! by the centered DFT from [`crate::amp`].
//!
//! Every target diagonal is integer-valued in units of Δφ^power, and every
//! coefficient produced here is a dyadic rational, so construction runs in
//! exact arithmetic and reconstruction tests can demand equality rather than
//! a tolerance. Scaling by physical Δφ powers happens last, at the caller.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use crate::amp;
use crate::error::{Error, Result};
use crate::lattice::{AmplitudeCutoffs, LatticeParams};

/// Which construction produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LcuFamily {
    EqualWeight,
    ZBinary,
    Signature,
}

/// A ±1 diagonal unitary on the 2k-point field register, described by the
/// rule that generates its diagonal rather than by the diagonal itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum UnitaryDescriptor {
    /// +1 on rows b with index < k^p + (b−k+1)^p, −1 elsewhere: the output
    /// of a comparator against the shifted-power threshold.
    SignatureThreshold { index: u64 },
    /// Tensor product of Pauli Z on the listed register qubits (LSB = qubit
    /// 0). An empty list is the identity.
    PauliZProduct { qubits: Vec<usize> },
    /// Bit plane `bit` (1-indexed from the LSB) of (b−k+1)^power, with bit
    /// value 0 ↦ +1 and 1 ↦ −1.
    SignatureBits { bit: u32, power: u32 },
}

impl UnitaryDescriptor {
    /// Diagonal entries over rows 0..2k. `power` supplies the context a
    /// threshold descriptor needs; the other kinds carry their own.
    pub fn diagonal(&self, k: usize, power: u32) -> Vec<i64> {
        let dim = 2 * k;
        match self {
            UnitaryDescriptor::SignatureThreshold { index } => {
                let kp = (k as i128).pow(power);
                (0..dim)
                    .map(|b| {
                        let v = b as i128 - k as i128 + 1;
                        if (*index as i128) < kp + v.pow(power) {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect()
            }
            UnitaryDescriptor::PauliZProduct { qubits } => (0..dim)
                .map(|b| {
                    let parity = qubits.iter().filter(|&&q| b >> q & 1 == 1).count();
                    if parity % 2 == 0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
            UnitaryDescriptor::SignatureBits { bit, power } => (0..dim)
                .map(|b| {
                    let v = b as i128 - k as i128 + 1;
                    let m = v.pow(*power) as u128;
                    if m >> (bit - 1) & 1 == 0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        }
    }
}

/// A finished decomposition Σ cᵢ·Uᵢ of one field power on one site.
#[derive(Debug, Clone)]
pub struct LcuDecomposition {
    pub family: LcuFamily,
    /// Field power: 1, 2 or 4.
    pub power: u32,
    pub terms: Vec<(f64, UnitaryDescriptor)>,
    /// Σ|cᵢ| over all terms, identity included.
    pub l1: f64,
    /// Register dimension 2k.
    pub target_dim: usize,
}

impl LcuDecomposition {
    pub fn k(&self) -> usize {
        self.target_dim / 2
    }

    /// The integer diagonal this decomposition must reproduce:
    /// (b−k+1)^power at row b.
    pub fn target_diagonal(&self) -> Vec<i128> {
        let k = self.k() as i128;
        (0..self.target_dim as i128)
            .map(|b| (b - k + 1).pow(self.power))
            .collect()
    }

    /// Σ cᵢ·diag(Uᵢ). All coefficients are dyadic, so the float sum is
    /// exact and equals [`Self::target_diagonal`] entrywise.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.target_dim];
        for (c, u) in &self.terms {
            for (slot, s) in acc.iter_mut().zip(u.diagonal(self.k(), self.power)) {
                *slot += c * s as f64;
            }
        }
        acc
    }

    /// JSON array of `{coeff, kind, payload}` records.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(c, u)| {
                    let mut obj = serde_json::to_value(u).expect("descriptor serializes");
                    obj.as_object_mut()
                        .expect("tagged enum is an object")
                        .insert("coeff".into(), json!(c));
                    obj
                })
                .collect(),
        )
    }
}

/// Equal-weight LCU of Φ/Δφ: 2k comparator thresholds, coefficient ½ each.
pub fn lcu_equal_weight_phi(k: usize) -> LcuDecomposition {
    equal_weight(k, 1)
}

/// Equal-weight LCU of (Φ/Δφ)²: 2k² thresholds, coefficient ½ each.
pub fn lcu_equal_weight_phi2(k: usize) -> LcuDecomposition {
    equal_weight(k, 2)
}

/// Equal-weight LCU of (Φ/Δφ)⁴: 2k⁴ thresholds, coefficient ½ each.
pub fn lcu_equal_weight_phi4(k: usize) -> LcuDecomposition {
    equal_weight(k, 4)
}

fn equal_weight(k: usize, power: u32) -> LcuDecomposition {
    assert!(k >= 2, "field cutoff k must be at least 2");
    // Row b holds k^p + (b−k+1)^p many +1 thresholds, so the half-weighted
    // sum telescopes to (b−k+1)^p exactly.
    let count = 2 * (k as u64).pow(power);
    let terms: Vec<(f64, UnitaryDescriptor)> = (0..count)
        .map(|index| (0.5, UnitaryDescriptor::SignatureThreshold { index }))
        .collect();
    LcuDecomposition {
        family: LcuFamily::EqualWeight,
        power,
        l1: count as f64 / 2.0,
        target_dim: 2 * k,
        terms,
    }
}

type ZStringMap = BTreeMap<u32, Ratio<i128>>;

/// Pauli-Z binary expansion of (Φ/Δφ)^power for power ∈ {1, 2, 4}.
///
/// Starts from Φ/Δφ = ½·I − ½·Σⱼ 2ʲ Zⱼ on the log₂(2k) register qubits and
/// squares symbolically, merging like Z-strings, so the power-4 term list is
/// the fully reduced one rather than the raw product.
pub fn lcu_z_binary(k: usize, power: u32) -> Result<LcuDecomposition> {
    assert!(
        matches!(power, 1 | 2 | 4),
        "z-binary family covers powers 1, 2, 4"
    );
    let m = field_qubits(k)?;
    let phi = z_binary_phi(m);
    let map = match power {
        1 => phi,
        2 => z_square(&phi),
        _ => {
            let sq = z_square(&phi);
            z_square(&sq)
        }
    };
    let mut l1 = Ratio::from_integer(0);
    let mut terms = Vec::with_capacity(map.len());
    for (mask, c) in map {
        l1 += if c < Ratio::from_integer(0) { -c } else { c };
        terms.push((dyadic_to_f64(c), mask_to_descriptor(mask)));
    }
    Ok(LcuDecomposition {
        family: LcuFamily::ZBinary,
        power,
        terms,
        l1: dyadic_to_f64(l1),
        target_dim: 2 * k,
    })
}

fn z_binary_phi(m: u32) -> ZStringMap {
    let mut map = ZStringMap::new();
    map.insert(0, Ratio::new(1, 2));
    for j in 0..m {
        map.insert(1 << j, Ratio::new(-(1i128 << j), 2));
    }
    map
}

// Z² = I, so a product of two strings is the symmetric difference of their
// qubit sets; like strings merge and exact cancellations drop out.
fn z_square(a: &ZStringMap) -> ZStringMap {
    let mut out = ZStringMap::new();
    for (&ma, &ca) in a {
        for (&mb, &cb) in a {
            *out.entry(ma ^ mb).or_insert_with(|| Ratio::from_integer(0)) += ca * cb;
        }
    }
    out.retain(|_, c| *c != Ratio::from_integer(0));
    out
}

fn mask_to_descriptor(mask: u32) -> UnitaryDescriptor {
    let qubits = (0..32).filter(|j| mask >> j & 1 == 1).collect();
    UnitaryDescriptor::PauliZProduct { qubits }
}

fn dyadic_to_f64(c: Ratio<i128>) -> f64 {
    // All coefficients here have power-of-two denominators, so the quotient
    // is exact in f64.
    debug_assert!(c.denom().count_ones() == 1);
    *c.numer() as f64 / *c.denom() as f64
}

fn field_qubits(k: usize) -> Result<u32> {
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::BadFieldCutoff(k));
    }
    Ok((2 * k).trailing_zeros())
}

/// Signature-matrix LCU of (Φ/Δφ)^power for power ∈ {2, 4}: one ±1 matrix
/// per non-zero bit plane of the integer diagonal, weighted 2^{bit−2}, plus
/// an identity offset, M = c₀·I − Σ 2^{bit−2}·U_bit.
pub fn lcu_signature(k: usize, power: u32) -> Result<LcuDecomposition> {
    assert!(
        matches!(power, 2 | 4),
        "signature family covers even powers 2, 4"
    );
    field_qubits(k)?;
    let dim = 2 * k;
    let values: Vec<u128> = (0..dim)
        .map(|b| (b as i128 - k as i128 + 1).pow(power) as u128)
        .collect();
    // k^power is the largest diagonal entry; its bit length caps the planes.
    let bits = 128 - (k as u128).pow(power).leading_zeros();
    let mut c0 = Ratio::from_integer(0);
    let mut planes = Vec::new();
    for bit in 1..=bits {
        if values.iter().any(|&v| v >> (bit - 1) & 1 == 1) {
            let w = pow2_ratio(bit as i32 - 2);
            c0 += w;
            planes.push((bit, w));
        }
        // All-zero planes contribute nothing and are dropped; an all-one
        // plane cannot occur because row k−1 holds the value 0.
    }
    let mut terms = vec![(
        dyadic_to_f64(c0),
        UnitaryDescriptor::PauliZProduct { qubits: vec![] },
    )];
    for (bit, w) in &planes {
        terms.push((
            dyadic_to_f64(-w),
            UnitaryDescriptor::SignatureBits { bit: *bit, power },
        ));
    }
    Ok(LcuDecomposition {
        family: LcuFamily::Signature,
        power,
        terms,
        l1: dyadic_to_f64(c0 + c0),
        target_dim: dim,
    })
}

fn pow2_ratio(e: i32) -> Ratio<i128> {
    if e >= 0 {
        Ratio::from_integer(1i128 << e)
    } else {
        Ratio::new(1, 1i128 << -e)
    }
}

/// How many register qubits the ±1 pattern of one signature plane actually
/// depends on, by brute force. The periodicity of n^power mod 2^bit keeps
/// this at min(log₂2k, bit−1) for squares and min(log₂2k, bit−2) for fourth
/// powers, which is what makes the plane circuits shallow.
pub fn signature_plane_support(k: usize, power: u32, bit: u32) -> usize {
    let desc = UnitaryDescriptor::SignatureBits { bit, power };
    let diag = desc.diagonal(k, power);
    let m = (2 * k).trailing_zeros() as usize;
    (0..m)
        .filter(|&q| (0..2 * k).any(|b| diag[b] != diag[b ^ (1 << q)]))
        .count()
}

/// All n in 1..=n_max whose power-th power has bit `bit` (1-indexed from
/// the LSB) set, by brute force.
pub fn bit_pattern_census(power: u32, n_max: u64, bit: u32) -> Vec<u64> {
    assert!(matches!(power, 2 | 4));
    assert!(n_max <= 1 << 20, "census is a brute-force enumeration");
    assert!(bit >= 1);
    (1..=n_max)
        .filter(|&n| (n as u128).pow(power) >> (bit - 1) & 1 == 1)
        .collect()
}

/// Closed-form replacement for the census membership test: bit `bit` of
/// n^power depends only on n mod 2^{bit−1} (squares) or n mod 2^{bit−2}
/// (fourth powers), because the discarded high part of n contributes only
/// multiples of 2^bit to the power.
pub fn bit_pattern_predicate(power: u32, bit: u32, n: u64) -> bool {
    assert!(matches!(power, 2 | 4));
    assert!(bit >= 1);
    if bit == 1 {
        return n % 2 == 1;
    }
    if power == 4 && bit == 2 {
        // Fourth powers are 0 or 1 mod 16; planes 2..4 are empty.
        return false;
    }
    let dropped = if power == 2 { 1 } else { 2 };
    let modulus = 1u128 << bit;
    let r = (n as u128) % (1u128 << (bit - dropped));
    let mut acc = r * r % modulus;
    if power == 4 {
        acc = acc * acc % modulus;
    }
    acc >= modulus / 2
}

/// Census table as CSV: one row per bit plane with the matching integers
/// and their count.
pub fn census_csv(power: u32, n_max: u64, max_bit: u32) -> String {
    let mut out = String::from("bit,integers,count\n");
    for bit in 1..=max_bit {
        let hits = bit_pattern_census(power, n_max, bit);
        let list = hits
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(out, "b{bit},\"{list}\",{}", hits.len());
    }
    out
}

/// Which closed-form coefficient 1-norm of the amplitude-basis Hamiltonian
/// to evaluate; each matches one decomposition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HampL1Variant {
    EqualWeight,
    ZBinaryDecomposition,
    SignatureDecomposition,
}

/// Coefficient 1-norm of the full amplitude-basis Hamiltonian under the
/// chosen decomposition family. The z-binary and signature forms bound the
/// norm of the traceless part only (the identity shift is a global phase);
/// the equal-weight form counts every term.
pub fn l1_norm_hamp(
    params: &LatticeParams,
    cutoffs: &AmplitudeCutoffs,
    variant: HampL1Variant,
) -> f64 {
    let k = cutoffs.k as f64;
    let d2 = cutoffs.delta_phi * cutoffs.delta_phi;
    let d4 = d2 * d2;
    let m2 = params.scaled_mass * params.scaled_mass;
    let lam = params.scaled_coupling;
    let d = params.d as f64;
    let omega = params.omega as f64;
    match variant {
        HampL1Variant::EqualWeight => amp::equal_weight_coeff_1norm(params, cutoffs),
        HampL1Variant::ZBinaryDecomposition => {
            omega
                * (lam * d4 * k.powi(4) / 27.0
                    + k * k * ((m2 + 7.0 * d + 1.0) / 3.0 * d2 - 0.048611 * lam * d4)
                    + k * (-3.0 * d * d2 + 0.03125 * lam * d4)
                    + d2 * (-m2 + 8.0 * d - 4.0) / 6.0
                    - 0.0081019 * lam * d4)
        }
        HampL1Variant::SignatureDecomposition => {
            omega / 4.0 * (k * k * d2 * (2.0 + m2 + d) + lam / 12.0 * k.powi(4) * d4)
                + 0.75 * params.e_d as f64 * d2 * k * k
        }
    }
}
