//! Physical and discretization parameters plus the momentum grid shared by
//! every downstream module.
//!
//! All formulas downstream work in lattice units: the scaled mass M = a·m and
//! scaled coupling Λ = a^{4−d}·λ absorb the spacing, momenta are dimensionless
//! (components 2πn/P), and energies come out in units of 1/a.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice geometry and couplings, with the scaled quantities precomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Bare mass m (energy units).
    pub m: f64,
    /// Bare quartic coupling λ ≥ 0.
    pub lambda: f64,
    /// Lattice spacing a > 0.
    pub a: f64,
    /// Spatial dimension d ≥ 1.
    pub d: usize,
    /// Sites per dimension P ≥ 1.
    pub p_sites: usize,
    /// Total site count |Ω| = P^d.
    pub omega: usize,
    /// Nearest-neighbor edge count under periodic boundaries, d·|Ω|.
    pub e_d: usize,
    /// Scaled mass M = a·m.
    pub scaled_mass: f64,
    /// Scaled coupling Λ = a^{4−d}·λ.
    pub scaled_coupling: f64,
}

impl LatticeParams {
    pub fn new(m: f64, lambda: f64, a: f64, d: usize, p_sites: usize) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::NonPositiveSpacing(a));
        }
        if m <= 0.0 {
            return Err(Error::NonPositiveMass(m));
        }
        if lambda < 0.0 || d == 0 || p_sites == 0 {
            return Err(Error::MissingKey(
                "lambda >= 0, d >= 1, P >= 1 required".into(),
            ));
        }
        let omega = p_sites.pow(d as u32);
        Ok(LatticeParams {
            m,
            lambda,
            a,
            d,
            p_sites,
            omega,
            e_d: d * omega,
            scaled_mass: a * m,
            scaled_coupling: a.powi(4 - d as i32) * lambda,
        })
    }

    /// Amplitude-basis constructions index sites with log2(P) bits per axis.
    pub fn require_power_of_two_sites(&self) -> Result<()> {
        if !self.p_sites.is_power_of_two() {
            return Err(Error::NonPowerOfTwoSites(self.p_sites));
        }
        Ok(())
    }

    /// Linear site index for a d-dimensional coordinate (row-major, periodic).
    pub fn site_index(&self, coord: &[usize]) -> usize {
        coord
            .iter()
            .fold(0, |acc, &c| acc * self.p_sites + (c % self.p_sites))
    }

    /// All directed nearest-neighbor pairs (x, x+e_i), one per edge.
    /// At P = 1 each edge is a self-loop (x, x).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut coords = vec![vec![0usize; self.d]];
        for axis in 0..self.d {
            let mut next = Vec::with_capacity(coords.len() * self.p_sites);
            for c in &coords {
                for v in 0..self.p_sites {
                    let mut c2 = c.clone();
                    c2[axis] = v;
                    next.push(c2);
                }
            }
            coords = next;
        }
        let mut out = Vec::with_capacity(self.e_d);
        for c in &coords {
            for axis in 0..self.d {
                let mut shifted = c.clone();
                shifted[axis] = (shifted[axis] + 1) % self.p_sites;
                out.push((self.site_index(c), self.site_index(&shifted)));
            }
        }
        out
    }
}

/// Parse parameters from a flat key/value map (`m`, `lambda`, `a`, `d`, `P`).
pub fn build_params(raw: &BTreeMap<String, f64>) -> Result<LatticeParams> {
    let get = |key: &str| -> Result<f64> {
        raw.get(key)
            .copied()
            .ok_or_else(|| Error::MissingKey(key.to_string()))
    };
    LatticeParams::new(
        get("m")?,
        get("lambda")?,
        get("a")?,
        get("d")? as usize,
        get("P")? as usize,
    )
}

/// Truncation of the per-mode occupation number in the unary basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationCutoffs {
    /// Maximum occupation N per momentum mode.
    pub n_max: usize,
}

impl OccupationCutoffs {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::CutoffTooSmall {
                n: 0,
                what: "occupation basis needs N >= 1".into(),
            });
        }
        Ok(OccupationCutoffs { n_max })
    }

    /// Unary register width: (N+1) qubits per mode.
    pub fn qubits(&self, omega: usize) -> usize {
        (self.n_max + 1) * omega
    }
}

/// Field discretization for the amplitude basis: 2k bins of width Δφ
/// covering the grid {−k+1, …, k}·Δφ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeCutoffs {
    pub k: usize,
    pub delta_phi: f64,
}

impl AmplitudeCutoffs {
    /// Δφ = sqrt(π/k), the self-dual width for which the field and conjugate
    /// momentum grids have equal reach.
    pub fn harmonic(k: usize) -> Result<Self> {
        Self::with_width(k, (std::f64::consts::PI / k as f64).sqrt())
    }

    pub fn with_width(k: usize, delta_phi: f64) -> Result<Self> {
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::BadFieldCutoff(k));
        }
        if delta_phi <= 0.0 {
            return Err(Error::NonPositiveSpacing(delta_phi));
        }
        Ok(AmplitudeCutoffs { k, delta_phi })
    }

    pub fn phi_max(&self) -> f64 {
        self.k as f64 * self.delta_phi
    }

    pub fn qubits_per_site(&self) -> usize {
        (2 * self.k).trailing_zeros() as usize
    }

    /// Field value at bin b ∈ [0, 2k): (b − k + 1)·Δφ.
    pub fn field_value(&self, b: usize) -> f64 {
        (b as f64 - self.k as f64 + 1.0) * self.delta_phi
    }
}

/// One momentum mode: integer labels n, scaled components 2πn/P, frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumMode {
    pub n: Vec<i64>,
    pub p: Vec<f64>,
    pub omega: f64,
}

/// Momentum grid with per-mode frequencies ω_p = sqrt(M² + |p|²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub modes: Vec<MomentumMode>,
    pub omega_min: f64,
    pub omega_max: f64,
}

/// ω = sqrt(M² + |p|²) for a single scaled momentum magnitude.
pub fn omega(scaled_mass: f64, p_norm: f64) -> f64 {
    (scaled_mass * scaled_mass + p_norm * p_norm).sqrt()
}

/// Enumerate the momentum grid n ∈ {−P/2+1, …, P/2}^d (integer labels),
/// p = 2πn/P per component, in row-major order over the label ranges.
pub fn dispersion_table(params: &LatticeParams) -> Dispersion {
    let p_sites = params.p_sites as i64;
    let lo = -(p_sites - 1) / 2;
    let hi = p_sites / 2;
    let mut modes: Vec<MomentumMode> = vec![MomentumMode {
        n: Vec::new(),
        p: Vec::new(),
        omega: 0.0,
    }];
    for _ in 0..params.d {
        let mut next = Vec::with_capacity(modes.len() * params.p_sites);
        for mode in &modes {
            for n in lo..=hi {
                let mut m2 = mode.clone();
                m2.n.push(n);
                m2.p
                    .push(2.0 * std::f64::consts::PI * n as f64 / p_sites as f64);
                next.push(m2);
            }
        }
        modes = next;
    }
    for mode in &mut modes {
        let p2: f64 = mode.p.iter().map(|p| p * p).sum();
        mode.omega = (params.scaled_mass * params.scaled_mass + p2).sqrt();
    }
    let omega_min = modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min);
    let omega_max = modes.iter().map(|m| m.omega).fold(0.0, f64::max);
    Dispersion {
        modes,
        omega_min,
        omega_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(m: f64, lambda: f64, a: f64, d: usize, p: usize) -> LatticeParams {
        LatticeParams::new(m, lambda, a, d, p).unwrap()
    }

    #[test]
    fn identity_rescaling_at_unit_spacing() {
        let lp = params(1.0, 0.0, 1.0, 1, 4);
        assert_eq!(lp.omega, 4);
        assert_eq!(lp.e_d, 4);
        assert_eq!(lp.scaled_mass, 1.0);
        assert_eq!(lp.scaled_coupling, 0.0);
    }

    #[test]
    fn scaled_quantities_substitute_directly() {
        let lp = params(0.5, 2.0, 2.0, 1, 2);
        assert_eq!(lp.scaled_mass, 1.0);
        assert_eq!(lp.scaled_coupling, 16.0);
        assert_eq!(lp.omega, 2);
    }

    #[test]
    fn edge_count_is_d_times_volume() {
        let lp = params(1.0, 1.0, 1.0, 2, 3);
        assert_eq!(lp.omega, 9);
        assert_eq!(lp.e_d, 18);
        assert_eq!(lp.edges().len(), 18);
    }

    #[test]
    fn build_params_reports_missing_keys() {
        let mut raw = BTreeMap::new();
        raw.insert("m".to_string(), 1.0);
        raw.insert("lambda".to_string(), 0.0);
        raw.insert("a".to_string(), 1.0);
        raw.insert("d".to_string(), 1.0);
        match build_params(&raw) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "P"),
            other => panic!("expected MissingKey, got {other:?}"),
        }
        raw.insert("P".to_string(), 4.0);
        assert_eq!(build_params(&raw).unwrap(), params(1.0, 0.0, 1.0, 1, 4));
    }

    #[test]
    fn single_mode_frequency_is_the_mass() {
        let lp = params(1.0, 0.0, 1.0, 1, 1);
        let disp = dispersion_table(&lp);
        assert_eq!(disp.modes.len(), 1);
        assert_relative_eq!(disp.modes[0].omega, 1.0);
    }

    #[test]
    fn three_four_five_triple() {
        assert_relative_eq!(omega(3.0, 4.0), 5.0);
    }

    #[test]
    fn four_site_grid_frequencies() {
        let lp = params(1.0, 0.0, 1.0, 1, 4);
        let disp = dispersion_table(&lp);
        let labels: Vec<i64> = disp.modes.iter().map(|m| m.n[0]).collect();
        assert_eq!(labels, vec![-1, 0, 1, 2]);
        for mode in &disp.modes {
            let expect =
                (1.0 + (std::f64::consts::FRAC_PI_2 * mode.n[0] as f64).powi(2)).sqrt();
            assert_relative_eq!(mode.omega, expect, max_relative = 1e-14);
        }
        assert_relative_eq!(disp.omega_min, 1.0);
        assert_relative_eq!(
            disp.omega_max,
            (1.0 + std::f64::consts::PI.powi(2)).sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn self_loops_at_single_site() {
        let lp = params(1.0, 1.0, 1.0, 2, 1);
        assert_eq!(lp.edges(), vec![(0, 0), (0, 0)]);
    }

    #[test]
    fn amplitude_cutoffs_validate_k() {
        assert!(AmplitudeCutoffs::harmonic(3).is_err());
        assert!(AmplitudeCutoffs::harmonic(1).is_err());
        let c = AmplitudeCutoffs::harmonic(4).unwrap();
        assert_eq!(c.qubits_per_site(), 3);
        assert_relative_eq!(c.phi_max(), 4.0 * (std::f64::consts::PI / 4.0).sqrt());
        assert_relative_eq!(c.field_value(0), -3.0 * c.delta_phi);
        assert_relative_eq!(c.field_value(7), 4.0 * c.delta_phi);
    }

    proptest! {
        #[test]
        fn rescaling_round_trip(
            m in 1e-3..10.0f64,
            lambda in 0.0..10.0f64,
            a in 1e-3..10.0f64,
            d in 1usize..4,
            p in 1usize..6,
        ) {
            let lp = params(m, lambda, a, d, p);
            prop_assert!((lp.scaled_mass / lp.a - m).abs() <= 1e-12 * m.max(1.0));
            let back = lp.scaled_coupling * lp.a.powi(d as i32 - 4);
            prop_assert!((back - lambda).abs() <= 1e-9 * lambda.max(1.0));
        }

        #[test]
        fn omega_monotone_and_bounded(
            mass in 1e-3..10.0f64,
            p1 in 0.0..50.0f64,
            p2 in 0.0..50.0f64,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(omega(mass, lo) <= omega(mass, hi));
            prop_assert!(omega(mass, lo) >= mass);
        }
    }
}
