//! Fault-tolerant integer arithmetic: circuit IR, a phase-tracking basis-state
//! simulator, and Clifford+T resource counts for the adder family.
//!
//! Every primitive comes in two halves that are tested against each other:
//! a concrete gate list (`CircuitIR`) whose action is checked exhaustively by
//! permutation simulation, and a closed-form `ResourceCount` taken from the
//! standard temporary-AND constructions. The gate lists favour clarity and a
//! mod-2^n register discipline, so their raw gate censuses can differ from the
//! quoted closed forms by boundary terms; the counts are the contract, the IR
//! is the semantic witness.

use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};

/// Gate set for the arithmetic IR.
///
/// `AndCompute`/`AndUncompute` are the temporary logical AND: compute costs
/// 4 T, uncompute is measurement-based and T-free. The uncompute here is
/// modelled as the deterministic inverse (valid on the states these circuits
/// produce, where the target provably holds the product of its controls).
/// Control polarity `false` means the gate fires when that qubit is |0>.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    X(usize),
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
    Mcx { controls: Vec<(usize, bool)>, target: usize },
    Z(usize),
    Cz(usize, usize),
    Mcz { controls: Vec<(usize, bool)>, target: usize },
    AndCompute { c1: usize, c2: usize, target: usize },
    AndUncompute { c1: usize, c2: usize, target: usize },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X(q) | Gate::Z(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::Toffoli { c1, c2, target }
            | Gate::AndCompute { c1, c2, target }
            | Gate::AndUncompute { c1, c2, target } => vec![*c1, *c2, *target],
            Gate::Mcx { controls, target } | Gate::Mcz { controls, target } => {
                let mut qs: Vec<usize> = controls.iter().map(|(q, _)| *q).collect();
                qs.push(*target);
                qs
            }
        }
    }

    fn inverted(&self) -> Gate {
        match self {
            Gate::AndCompute { c1, c2, target } => Gate::AndUncompute {
                c1: *c1,
                c2: *c2,
                target: *target,
            },
            Gate::AndUncompute { c1, c2, target } => Gate::AndCompute {
                c1: *c1,
                c2: *c2,
                target: *target,
            },
            // everything else in this gate set is an involution
            other => other.clone(),
        }
    }
}

/// A gate list over `n_qubits` wires.
///
/// `ancillas` are the wires the circuit requires to start in |0>; they are
/// excluded from exhaustive input sweeps. Whether a given ancilla also ends
/// in |0> is part of each builder's documented contract (the comparator's
/// scratch stays entangled until the inverse circuit is applied).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitIR {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub ancillas: Vec<usize>,
}

impl CircuitIR {
    /// Reverse the gate list, swapping AND compute/uncompute roles.
    pub fn inverted(&self) -> CircuitIR {
        CircuitIR {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverted).collect(),
            ancillas: self.ancillas.clone(),
        }
    }

    /// Concatenate two circuits over the same wire set.
    pub fn then(mut self, other: &CircuitIR) -> CircuitIR {
        assert_eq!(self.n_qubits, other.n_qubits, "wire sets must match");
        self.gates.extend(other.gates.iter().cloned());
        for &a in &other.ancillas {
            if !self.ancillas.contains(&a) {
                self.ancillas.push(a);
            }
        }
        self
    }

    /// One gate per line, `NAME q[,q...]`, `!` marking a control on |0>.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for gate in &self.gates {
            match gate {
                Gate::X(q) => writeln!(out, "X {q}").unwrap(),
                Gate::Z(q) => writeln!(out, "Z {q}").unwrap(),
                Gate::Cnot { control, target } => {
                    writeln!(out, "CNOT {control},{target}").unwrap()
                }
                Gate::Cz(a, b) => writeln!(out, "CZ {a},{b}").unwrap(),
                Gate::Toffoli { c1, c2, target } => {
                    writeln!(out, "TOFFOLI {c1},{c2},{target}").unwrap()
                }
                Gate::AndCompute { c1, c2, target } => {
                    writeln!(out, "AND {c1},{c2},{target}").unwrap()
                }
                Gate::AndUncompute { c1, c2, target } => {
                    writeln!(out, "ANDU {c1},{c2},{target}").unwrap()
                }
                Gate::Mcx { controls, target } | Gate::Mcz { controls, target } => {
                    let name = if matches!(gate, Gate::Mcx { .. }) {
                        "MCX"
                    } else {
                        "MCZ"
                    };
                    let mut parts: Vec<String> = controls
                        .iter()
                        .map(|(q, pol)| {
                            if *pol {
                                q.to_string()
                            } else {
                                format!("{q}!")
                            }
                        })
                        .collect();
                    parts.push(target.to_string());
                    writeln!(out, "{name} {}", parts.join(",")).unwrap();
                }
            }
        }
        out
    }
}

/// Apply the circuit to a computational basis state.
///
/// Returns the output basis index and the accumulated sign (Z-type gates are
/// diagonal, so basis states pick up at most a global +/-1 here). Errors with
/// `DirtyAncilla` if an AND fires on a target that breaks its contract:
/// compute needs the target in |0>, uncompute needs it to hold the product.
pub fn simulate(ir: &CircuitIR, input: u64) -> Result<(u64, i32)> {
    assert!(ir.n_qubits <= 63, "basis index must fit in u64");
    for gate in &ir.gates {
        for q in gate.qubits() {
            if q >= ir.n_qubits {
                return Err(Error::QubitOutOfRange(q, ir.n_qubits));
            }
        }
    }
    for &a in &ir.ancillas {
        debug_assert_eq!(input >> a & 1, 0, "ancilla {a} must start in |0>");
    }
    let bit = |s: u64, q: usize| s >> q & 1;
    let mut state = input;
    let mut sign = 1i32;
    for gate in &ir.gates {
        match gate {
            Gate::X(q) => state ^= 1 << q,
            Gate::Cnot { control, target } => state ^= bit(state, *control) << target,
            Gate::Toffoli { c1, c2, target } => {
                state ^= (bit(state, *c1) & bit(state, *c2)) << target
            }
            Gate::Mcx { controls, target } => {
                if controls.iter().all(|(q, pol)| bit(state, *q) == *pol as u64) {
                    state ^= 1 << target;
                }
            }
            Gate::Z(q) => {
                if bit(state, *q) == 1 {
                    sign = -sign;
                }
            }
            Gate::Cz(a, b) => {
                if bit(state, *a) & bit(state, *b) == 1 {
                    sign = -sign;
                }
            }
            Gate::Mcz { controls, target } => {
                let fire = controls.iter().all(|(q, pol)| bit(state, *q) == *pol as u64)
                    && bit(state, *target) == 1;
                if fire {
                    sign = -sign;
                }
            }
            Gate::AndCompute { c1, c2, target } => {
                if bit(state, *target) != 0 {
                    return Err(Error::DirtyAncilla(*target));
                }
                state ^= (bit(state, *c1) & bit(state, *c2)) << target;
            }
            Gate::AndUncompute { c1, c2, target } => {
                if bit(state, *target) != bit(state, *c1) & bit(state, *c2) {
                    return Err(Error::DirtyAncilla(*target));
                }
                state &= !(1 << target);
            }
        }
    }
    Ok((state, sign))
}

/// Sweep every assignment of the non-ancilla wires (ancillas held at |0>)
/// and hand each result to `check`.
pub fn exhaustive_check(
    ir: &CircuitIR,
    mut check: impl FnMut(u64, u64, i32),
) -> Result<()> {
    const SWEEP_CAP: usize = 20;
    let free: Vec<usize> = (0..ir.n_qubits)
        .filter(|q| !ir.ancillas.contains(q))
        .collect();
    if free.len() > SWEEP_CAP {
        return Err(Error::SimulationTooWide(free.len(), SWEEP_CAP));
    }
    for pattern in 0..1u64 << free.len() {
        let mut input = 0u64;
        for (i, &q) in free.iter().enumerate() {
            input |= (pattern >> i & 1) << q;
        }
        let (output, sign) = simulate(ir, input)?;
        check(input, output, sign);
    }
    Ok(())
}

/// Clifford+T resource tally. `measurement_depth` counts rounds of the
/// measurement-based AND uncomputation on the critical path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ResourceCount {
    pub t: u64,
    pub cnot: u64,
    pub cz: u64,
    pub s: u64,
    pub h: u64,
    pub x: u64,
    pub rz: u64,
    pub ancilla: u64,
    pub measurement_depth: u64,
}

impl Add for ResourceCount {
    type Output = ResourceCount;
    fn add(self, rhs: ResourceCount) -> ResourceCount {
        ResourceCount {
            t: self.t + rhs.t,
            cnot: self.cnot + rhs.cnot,
            cz: self.cz + rhs.cz,
            s: self.s + rhs.s,
            h: self.h + rhs.h,
            x: self.x + rhs.x,
            rz: self.rz + rhs.rz,
            ancilla: self.ancilla + rhs.ancilla,
            measurement_depth: self.measurement_depth + rhs.measurement_depth,
        }
    }
}

impl AddAssign for ResourceCount {
    fn add_assign(&mut self, rhs: ResourceCount) {
        *self = *self + rhs;
    }
}

impl ResourceCount {
    /// Cost of running the circuit `reps` times in sequence.
    pub fn repeat(self, reps: u64) -> ResourceCount {
        ResourceCount {
            t: self.t * reps,
            cnot: self.cnot * reps,
            cz: self.cz * reps,
            s: self.s * reps,
            h: self.h * reps,
            x: self.x * reps,
            rz: self.rz * reps,
            ancilla: self.ancilla * reps,
            measurement_depth: self.measurement_depth * reps,
        }
    }
}

// Wire layout shared by the ripple builders: |a> on 0..n (overwritten with the
// result), |b> on n..2n (preserved), carry scratch above. Bit 0 is the LSB.

fn carry_wire(n: usize, i: usize) -> usize {
    debug_assert!((1..n).contains(&i));
    2 * n + (i - 1)
}

/// In-place modular adder: |a>|b>|0> -> |a+b mod 2^n>|b>|0>.
///
/// Ripple ladder with temporary ANDs, carries c_1..c_{n-1} computed on the way
/// up and uncomputed on the way down; the top carry never needs to exist in
/// mod-2^n arithmetic. Counts: 4n T, 12n-3 CNOT, n CZ, n S, 2n H, n ancillas,
/// measurement depth n.
pub fn adder(n: usize) -> (CircuitIR, ResourceCount) {
    assert!(n >= 1, "register width must be positive");
    let mut gates = Vec::new();
    let a = |i: usize| i;
    let b = |i: usize| n + i;
    if n == 1 {
        gates.push(Gate::Cnot {
            control: b(0),
            target: a(0),
        });
    } else {
        let c = |i: usize| carry_wire(n, i);
        gates.push(Gate::AndCompute {
            c1: a(0),
            c2: b(0),
            target: c(1),
        });
        for i in 1..=n - 2 {
            // c_{i+1} = (a_i xor c_i)(b_i xor c_i) xor c_i
            gates.push(Gate::Cnot {
                control: c(i),
                target: a(i),
            });
            gates.push(Gate::Cnot {
                control: c(i),
                target: b(i),
            });
            gates.push(Gate::AndCompute {
                c1: a(i),
                c2: b(i),
                target: c(i + 1),
            });
            gates.push(Gate::Cnot {
                control: c(i),
                target: c(i + 1),
            });
        }
        gates.push(Gate::Cnot {
            control: b(n - 1),
            target: a(n - 1),
        });
        gates.push(Gate::Cnot {
            control: c(n - 1),
            target: a(n - 1),
        });
        for i in (1..=n - 2).rev() {
            gates.push(Gate::Cnot {
                control: c(i),
                target: c(i + 1),
            });
            gates.push(Gate::AndUncompute {
                c1: a(i),
                c2: b(i),
                target: c(i + 1),
            });
            gates.push(Gate::Cnot {
                control: b(i),
                target: a(i),
            });
            gates.push(Gate::Cnot {
                control: c(i),
                target: a(i),
            });
            gates.push(Gate::Cnot {
                control: c(i),
                target: b(i),
            });
        }
        gates.push(Gate::AndUncompute {
            c1: a(0),
            c2: b(0),
            target: c(1),
        });
        gates.push(Gate::Cnot {
            control: b(0),
            target: a(0),
        });
    }
    let ir = CircuitIR {
        n_qubits: 3 * n - 1,
        gates,
        ancillas: (2 * n..3 * n - 1).collect(),
    };
    let n = n as u64;
    let count = ResourceCount {
        t: 4 * n,
        cnot: 12 * n - 3,
        cz: n,
        s: n,
        h: 2 * n,
        x: 0,
        rz: 0,
        ancilla: n,
        measurement_depth: n,
    };
    (ir, count)
}

/// In-place modular subtractor: |a>|b>|0> -> |a-b mod 2^n>|b>|0>.
///
/// Ones'-complement reduction to addition, a - b = ~(~a + b), which costs the
/// adder plus 2n X gates.
pub fn subtractor(n: usize) -> (CircuitIR, ResourceCount) {
    let (add_ir, add_count) = adder(n);
    let mut gates: Vec<Gate> = (0..n).map(Gate::X).collect();
    gates.extend(add_ir.gates);
    gates.extend((0..n).map(Gate::X));
    let ir = CircuitIR {
        n_qubits: add_ir.n_qubits,
        gates,
        ancillas: add_ir.ancillas,
    };
    let count = add_count
        + ResourceCount {
            x: 2 * n as u64,
            ..ResourceCount::default()
        };
    (ir, count)
}

/// Incrementer: |a>|0> -> |a+1 mod 2^n>|carry out>, carry set only on wrap.
///
/// Wires: |a> on 0..n, the surviving carry on wire n, scratch products on
/// n+1..2n-1. The carry into bit i is the AND of all lower bits, built as a
/// running product; the product over all n bits stays behind on wire n as the
/// (n+1)-th sum bit, everything else is uncomputed. Counts follow the n-1
/// temporary ANDs: 4(n-1) T, 7(n-1) CNOT, n-1 CZ, n S, 2(n-1) H, one X,
/// n-1 ancillas.
pub fn incrementer(n: usize) -> (CircuitIR, ResourceCount) {
    assert!(n >= 2, "incrementer needs at least two bits");
    let carry_out = n;
    // scratch d_i holds the product a_0..a_{i-1} for i in 2..n
    let d = |i: usize| {
        debug_assert!((2..n).contains(&i));
        n + 1 + (i - 2)
    };
    let mut gates = Vec::new();
    if n == 2 {
        gates.push(Gate::AndCompute {
            c1: 1,
            c2: 0,
            target: carry_out,
        });
    } else {
        gates.push(Gate::AndCompute {
            c1: 1,
            c2: 0,
            target: d(2),
        });
        for i in 2..n - 1 {
            gates.push(Gate::AndCompute {
                c1: i,
                c2: d(i),
                target: d(i + 1),
            });
        }
        gates.push(Gate::AndCompute {
            c1: n - 1,
            c2: d(n - 1),
            target: carry_out,
        });
        // flip top down so every uncompute still sees original controls
        for i in (2..n).rev() {
            gates.push(Gate::Cnot {
                control: d(i),
                target: i,
            });
            if i > 2 {
                gates.push(Gate::AndUncompute {
                    c1: i - 1,
                    c2: d(i - 1),
                    target: d(i),
                });
            } else {
                gates.push(Gate::AndUncompute {
                    c1: 1,
                    c2: 0,
                    target: d(2),
                });
            }
        }
    }
    gates.push(Gate::Cnot {
        control: 0,
        target: 1,
    });
    gates.push(Gate::X(0));
    let ir = CircuitIR {
        n_qubits: 2 * n - 1,
        gates,
        ancillas: (n..2 * n - 1).collect(),
    };
    let n = n as u64;
    let count = ResourceCount {
        t: 4 * (n - 1),
        cnot: 7 * (n - 1),
        cz: n - 1,
        s: n,
        h: 2 * (n - 1),
        x: 1,
        rz: 0,
        ancilla: n - 1,
        measurement_depth: n - 1,
    };
    (ir, count)
}

/// Which comparator circuit to build.
///
/// `Cmp` cleans up after itself. `CmpPrime` stops after extracting the borrow,
/// leaving its carry scratch correlated with the inputs; it is meant to be
/// conjugated, as in CMP' then a phase then the inverse of CMP', and its
/// quoted count already covers that round trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparatorVariant {
    Cmp,
    CmpPrime,
}

/// Comparator: |i>|j>|0> -> |i>|j>|j < i>.
///
/// Wires: |i> on 0..n, |j> on n..2n, the result on 2n, carries on 2n+1..3n+1.
/// The borrow of j - i is the carry out of ~j + i, so the ladder runs over
/// the complemented j register and the result is a single CNOT off the top
/// carry. `CmpPrime` costs 4n T for the full conjugated use (n temporary
/// ANDs); `Cmp` re-runs the ladder to restore scratch, 8n T.
pub fn comparator(n: usize, variant: ComparatorVariant) -> (CircuitIR, ResourceCount) {
    assert!(n >= 1, "register width must be positive");
    let i_reg = |q: usize| q;
    let j_reg = |q: usize| n + q;
    let result = 2 * n;
    let c = |k: usize| {
        debug_assert!((1..=n).contains(&k));
        2 * n + 1 + (k - 1)
    };
    // forward half: complement j, ripple the carries of ~j + i
    let mut fwd = Vec::new();
    for q in 0..n {
        fwd.push(Gate::X(j_reg(q)));
    }
    fwd.push(Gate::AndCompute {
        c1: j_reg(0),
        c2: i_reg(0),
        target: c(1),
    });
    for k in 1..n {
        fwd.push(Gate::Cnot {
            control: c(k),
            target: j_reg(k),
        });
        fwd.push(Gate::Cnot {
            control: c(k),
            target: i_reg(k),
        });
        fwd.push(Gate::AndCompute {
            c1: j_reg(k),
            c2: i_reg(k),
            target: c(k + 1),
        });
        fwd.push(Gate::Cnot {
            control: c(k),
            target: c(k + 1),
        });
    }
    let forward = CircuitIR {
        n_qubits: 3 * n + 1,
        gates: fwd,
        ancillas: (2 * n..=3 * n).collect(),
    };
    let extract = CircuitIR {
        n_qubits: 3 * n + 1,
        gates: vec![Gate::Cnot {
            control: c(n),
            target: result,
        }],
        ancillas: Vec::new(),
    };
    let n64 = n as u64;
    match variant {
        ComparatorVariant::CmpPrime => {
            let mut ir = forward.then(&extract);
            // scratch is deliberately left holding the carries
            ir.ancillas = (2 * n..=3 * n).collect();
            let count = ResourceCount {
                t: 4 * n64,
                cnot: 12 * n64 - 3,
                cz: n64,
                s: n64,
                h: 2 * n64,
                x: 2 * n64,
                rz: 0,
                ancilla: n64,
                measurement_depth: n64,
            };
            (ir, count)
        }
        ComparatorVariant::Cmp => {
            let ir = forward.clone().then(&extract).then(&forward.inverted());
            let count = ResourceCount {
                t: 8 * n64,
                cnot: 24 * n64 - 5,
                cz: 2 * n64,
                s: 2 * n64,
                h: 4 * n64,
                x: 4 * n64,
                rz: 0,
                ancilla: n64,
                measurement_depth: 2 * n64,
            };
            (ir, count)
        }
    }
}

/// The diagonal phase circuit CMP'^dag . Z . CMP' used by threshold LCU terms:
/// on |i>|j> it applies the sign 2 Theta(j - i) - 1 and restores all scratch.
pub fn threshold_phase_circuit(n: usize) -> CircuitIR {
    let (cmp, _) = comparator(n, ComparatorVariant::CmpPrime);
    let z = CircuitIR {
        n_qubits: cmp.n_qubits,
        gates: vec![Gate::Z(2 * n)],
        ancillas: Vec::new(),
    };
    cmp.clone().then(&z).then(&cmp.inverted())
}

/// Out-of-place schoolbook multiplier: |x>|y>|0> -> |x>|y>|x y>.
///
/// Wires: |x> on 0..n, |y> on n..2n, the 2n-bit product accumulator on
/// 2n..4n, a partial-product row on 4n..6n, adder carries above. Each row
/// x * y_j is built with temporary ANDs, added into the accumulator with the
/// ripple adder, and uncomputed. Counts for the 2n^2 - 1 temporary ANDs:
/// 8n^2 - 4 T, 12n^2 - 6 CNOT, (n+1)(2n-1) + 1 ancillas.
pub fn multiplier(n: usize) -> (CircuitIR, ResourceCount) {
    assert!(n >= 1, "register width must be positive");
    let x = |i: usize| i;
    let y = |j: usize| n + j;
    let acc = |i: usize| 2 * n + i;
    let row = |i: usize| 4 * n + i;
    let w = 2 * n; // accumulator width
    let (add_ir, _) = adder(w);
    // adder wires: a on 0..w, b on w..2w, carries 2w..3w-1
    let map: Vec<usize> = (0..w)
        .map(acc)
        .chain((0..w).map(row))
        .chain((0..w - 1).map(|i| 6 * n + i))
        .collect();
    let mut gates = Vec::new();
    for j in 0..n {
        for i in 0..n {
            gates.push(Gate::AndCompute {
                c1: x(i),
                c2: y(j),
                target: row(i + j),
            });
        }
        gates.extend(add_ir.gates.iter().map(|g| remap(g, &map)));
        for i in 0..n {
            gates.push(Gate::AndUncompute {
                c1: x(i),
                c2: y(j),
                target: row(i + j),
            });
        }
    }
    let ir = CircuitIR {
        n_qubits: 8 * n - 1,
        gates,
        ancillas: (2 * n..8 * n - 1).collect(),
    };
    let n = n as u64;
    let count = ResourceCount {
        t: 8 * n * n - 4,
        cnot: 12 * n * n - 6,
        cz: 2 * n * n - 1,
        s: 2 * n * n - 1,
        h: 4 * n * n - 2,
        x: 0,
        rz: 0,
        ancilla: (n + 1) * (2 * n - 1) + 1,
        measurement_depth: 2 * n * n - 1,
    };
    (ir, count)
}

fn remap(gate: &Gate, map: &[usize]) -> Gate {
    let m = |q: usize| map[q];
    match gate {
        Gate::X(q) => Gate::X(m(*q)),
        Gate::Z(q) => Gate::Z(m(*q)),
        Gate::Cnot { control, target } => Gate::Cnot {
            control: m(*control),
            target: m(*target),
        },
        Gate::Cz(a, b) => Gate::Cz(m(*a), m(*b)),
        Gate::Toffoli { c1, c2, target } => Gate::Toffoli {
            c1: m(*c1),
            c2: m(*c2),
            target: m(*target),
        },
        Gate::AndCompute { c1, c2, target } => Gate::AndCompute {
            c1: m(*c1),
            c2: m(*c2),
            target: m(*target),
        },
        Gate::AndUncompute { c1, c2, target } => Gate::AndUncompute {
            c1: m(*c1),
            c2: m(*c2),
            target: m(*target),
        },
        Gate::Mcx { controls, target } => Gate::Mcx {
            controls: controls.iter().map(|(q, p)| (m(*q), *p)).collect(),
            target: m(*target),
        },
        Gate::Mcz { controls, target } => Gate::Mcz {
            controls: controls.iter().map(|(q, p)| (m(*q), *p)).collect(),
            target: m(*target),
        },
    }
}

/// T cost of a batch of `m`-fold controlled-X gates whose controls are split
/// into groups of `log2(m)/r_i` bits each.
///
/// The group products are computed once with temporary ANDs and shared across
/// all `m` gates, leaving each individual gate a cheaper multi-control over
/// one bit per group. `fractions` are the r_i; they must satisfy
/// sum(1/r_i) = 1 with every group size log2(m)/r_i a whole number of bits,
/// and `m` must be a power of two.
pub fn grouped_mcx_cost(m: u64, fractions: &[f64]) -> Result<ResourceCount> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidPartition(format!(
            "gate count {m} is not a power of two"
        )));
    }
    if fractions.is_empty() {
        return Err(Error::InvalidPartition("no control groups given".into()));
    }
    let log2m = m.trailing_zeros() as f64;
    let mut inv_sum = 0.0;
    let mut group_bits = Vec::new();
    for &r in fractions {
        if r < 1.0 {
            return Err(Error::InvalidPartition(format!(
                "group fraction {r} is below one"
            )));
        }
        inv_sum += 1.0 / r;
        let g = log2m / r;
        if (g - g.round()).abs() > 1e-9 || g.round() < 1.0 {
            return Err(Error::InvalidPartition(format!(
                "group size log2({m})/{r} is not a whole number of bits"
            )));
        }
        group_bits.push(g.round() as u32);
    }
    if (inv_sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidPartition(format!(
            "group fractions cover {inv_sum} of the controls, need exactly 1"
        )));
    }
    let n_groups = fractions.len() as u64;
    let mut t = m * (4 * n_groups - 4);
    let mut ancilla = 0;
    for &g in &group_bits {
        let block = 1u64 << g; // 2^(g) = m^(1/r) group products
        t += block * (4 * g as u64 - 4);
        ancilla += block;
    }
    Ok(ResourceCount {
        t,
        ancilla,
        ..ResourceCount::default()
    })
}

/// T cost of unary iteration over `l` consecutive control values.
pub fn unary_iteration_cost(l: u64) -> ResourceCount {
    assert!(l >= 1, "need at least one branch");
    ResourceCount {
        t: 4 * l - 4,
        ..ResourceCount::default()
    }
}
