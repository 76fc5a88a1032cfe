//! Gate circuits, logical-unitary extraction and truth tables.
//!
//! Every builder returns a compiled circuit with logical ports attached;
//! the matching `*_graph` function returns the uncompiled netlist so it can
//! be embedded in larger devices or printed as a netlist.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{CircuitError, CompiledCircuit, LogicalPorts, PortGraph, PortRef, RailPair};
use crate::components::{
    beam_splitter, circulator, grover_four_port, mirror, phase_shifter, polarizing_beam_splitter, DotSide, Side,
    DEFAULT_MIRROR_PHASE,
};
use crate::linalg::{c, max_abs_diff, unitarity_error, CMatrix, CVector, C64, GATE_TOL, TOL};
use crate::modespace::{LogicalBasis, RailLabel};
use crate::photon_state::{logical_frames, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("not a classical gate (column {column} has no dominant entry)")]
    NotClassical { column: usize },
    #[error("logical matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("unknown gate '{0}'")]
    UnknownGate(String),
    #[error("gate '{gate}' expects {expected} phase(s), got {got}")]
    BadPhases { gate: String, expected: usize, got: usize },
}

/// Ideal gate matrices built directly from their definitions. Two-qubit
/// matrices use the index `2S + D`; three-qubit ones `4P + 2S + D`.
pub mod reference {
    use super::*;

    pub fn identity(n: usize) -> CMatrix {
        CMatrix::identity(n, n)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    pub fn hadamard() -> CMatrix {
        let h = crate::linalg::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    /// `diag(1, e^{i phi})`.
    pub fn phase(phi: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), crate::linalg::cis(phi)])
    }

    /// `n x n` permutation matrix with `|f(k)><k|` columns.
    pub fn permutation(n: usize, f: impl Fn(usize) -> usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            m[(f(k), k)] = c(1.0, 0.0);
        }
        m
    }

    /// Gate on the symmetry qubit, identity on direction.
    pub fn on_s(g: &CMatrix) -> CMatrix {
        crate::linalg::kron(g, &identity(2))
    }

    /// Gate on the direction qubit, identity on symmetry.
    pub fn on_d(g: &CMatrix) -> CMatrix {
        crate::linalg::kron(&identity(2), g)
    }

    /// CNOT with `S` as control and `D` as target.
    pub fn cnot_sd() -> CMatrix {
        permutation(4, |k| {
            let (s, d) = (k >> 1, k & 1);
            (s << 1) | (d ^ s)
        })
    }

    pub fn swap_sd() -> CMatrix {
        permutation(4, |k| {
            let (s, d) = (k >> 1, k & 1);
            (d << 1) | s
        })
    }

    /// Flips `D` exactly when `P = S = 1`.
    pub fn toffoli() -> CMatrix {
        permutation(8, |k| {
            let (p, s, d) = (k >> 2, (k >> 1) & 1, k & 1);
            (p << 2) | (s << 1) | (d ^ (p & s))
        })
    }

    /// Swaps `S` and `D` exactly when `P = 1`.
    pub fn fredkin() -> CMatrix {
        permutation(8, |k| {
            let (p, s, d) = (k >> 2, (k >> 1) & 1, k & 1);
            if p == 1 {
                (p << 2) | (d << 1) | s
            } else {
                k
            }
        })
    }

    /// Flips `D` exactly when `P = 1`.
    pub fn cnot_pd() -> CMatrix {
        permutation(8, |k| k ^ (k >> 2))
    }

    fn rows8(entries: &[(usize, usize, f64)]) -> CMatrix {
        let mut m = CMatrix::zeros(8, 8);
        for &(i, j, v) in entries {
            m[(i, j)] = c(v, 0.0);
        }
        m
    }

    /// The three printed matrices of the programmable device, in the
    /// `(HSR, HSL, HAR, HAL, VSR, VSL, VAR, VAL)` ordering, entries exactly
    /// as printed.
    pub fn printed_programmable(setting: PrintedSetting) -> CMatrix {
        match setting {
            PrintedSetting::PiPiZeroZero => rows8(&[
                (0, 0, 1.0),
                (1, 1, 1.0),
                (2, 2, 1.0),
                (3, 3, 1.0),
                (4, 5, -1.0),
                (5, 4, -1.0),
                (6, 6, 1.0),
                (7, 7, 1.0),
            ]),
            PrintedSetting::PiZeroZeroPi => rows8(&[
                (0, 2, 1.0),
                (1, 3, 1.0),
                (2, 0, 1.0),
                (3, 1, 1.0),
                (4, 5, -1.0),
                (5, 4, -1.0),
                (6, 6, 1.0),
                (7, 7, 1.0),
            ]),
            PrintedSetting::PiZeroPiZero => rows8(&[
                (0, 2, 1.0),
                (1, 3, 1.0),
                (2, 0, 1.0),
                (3, 1, 1.0),
                (4, 4, 1.0),
                (5, 5, 1.0),
                (6, 7, -1.0),
                (7, 6, -1.0),
            ]),
        }
    }

    /// Phase settings with a printed logical matrix.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum PrintedSetting {
        PiPiZeroZero,
        PiZeroZeroPi,
        PiZeroPiZero,
    }

    impl PrintedSetting {
        pub const ALL: [PrintedSetting; 3] =
            [PrintedSetting::PiPiZeroZero, PrintedSetting::PiZeroZeroPi, PrintedSetting::PiZeroPiZero];

        pub fn phases(self) -> [f64; 4] {
            match self {
                PrintedSetting::PiPiZeroZero => [PI, PI, 0.0, 0.0],
                PrintedSetting::PiZeroZeroPi => [PI, 0.0, 0.0, PI],
                PrintedSetting::PiZeroPiZero => [PI, 0.0, PI, 0.0],
            }
        }

        /// Matches phases that are exactly one of the printed settings.
        pub fn from_phases(q: [f64; 4]) -> Option<Self> {
            Self::ALL.into_iter().find(|s| s.phases() == q)
        }
    }
}

/// Whether `u = e^{i theta} v` for some `theta`, within `tol` entrywise.
/// `theta` is read off the largest-magnitude entry of `v`.
pub fn equal_up_to_global_phase(u: &CMatrix, v: &CMatrix, tol: f64) -> Result<(bool, f64), GateError> {
    if u.shape() != v.shape() {
        return Err(GateError::DimensionMismatch(u.shape(), v.shape()));
    }
    let (k, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .ok_or(GateError::DimensionMismatch(u.shape(), v.shape()))?;
    let (vk, uk) = (v.as_slice()[k], u.as_slice()[k]);
    if vk.norm() == 0.0 {
        return Ok((crate::linalg::max_abs(u) < tol, 0.0));
    }
    let ratio = uk / vk;
    let theta = if ratio.norm() == 0.0 { 0.0 } else { ratio.arg() };
    let err = max_abs_diff(u, &v.scale(1.0).map(|z| z * crate::linalg::cis(theta)));
    Ok((err < tol, theta))
}

/// Maximum entry error after removing the optimal global phase.
pub fn global_phase_error(u: &CMatrix, v: &CMatrix) -> Result<(f64, f64), GateError> {
    let (_, theta) = equal_up_to_global_phase(u, v, f64::INFINITY)?;
    Ok((max_abs_diff(u, &v.map(|z| z * crate::linalg::cis(theta))), theta))
}

/// Per-row phases `d_i` with `u = diag(d) v`, read from the largest entry
/// of each row of `v`, and the residual error.
pub fn row_phases(u: &CMatrix, v: &CMatrix) -> Result<(Vec<C64>, f64), GateError> {
    if u.shape() != v.shape() {
        return Err(GateError::DimensionMismatch(u.shape(), v.shape()));
    }
    let mut phases = Vec::with_capacity(u.nrows());
    let mut fixed = v.clone();
    for i in 0..u.nrows() {
        let j = (0..v.ncols()).max_by(|&a, &b| v[(i, a)].norm().total_cmp(&v[(i, b)].norm())).unwrap_or(0);
        let r = if v[(i, j)].norm() > 0.0 { u[(i, j)] / v[(i, j)] } else { c(1.0, 0.0) };
        let d = if r.norm() > 0.0 { r / r.norm() } else { c(1.0, 0.0) };
        phases.push(d);
        for k in 0..v.ncols() {
            fixed[(i, k)] = v[(i, k)] * d;
        }
    }
    Ok((phases, max_abs_diff(u, &fixed)))
}

/// Logical unitary: column `k` is the decoded output for logical input `k`.
pub fn extract_logical_unitary(circuit: &CompiledCircuit) -> Result<CMatrix, GateError> {
    let (fin, fout) = logical_frames(circuit)?;
    let dim = fin.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let phys = circuit.apply_vector(&fin.iso.column(k).into_owned())?;
        let l = fout.decode(&phys, TOL)?;
        m.set_column(k, &l);
    }
    let err = unitarity_error(&m);
    if err >= TOL {
        return Err(GateError::NotUnitary(err));
    }
    Ok(m)
}

/// The `D = 0 -> D = 0` block of a two-qubit `(S, D)` logical matrix, after
/// checking that direction is preserved.
pub fn forward_block(m: &CMatrix) -> Result<CMatrix, GateError> {
    if m.shape() != (4, 4) {
        return Err(GateError::DimensionMismatch(m.shape(), (4, 4)));
    }
    for i in 0..4 {
        for j in 0..4 {
            if (i & 1) != (j & 1) && m[(i, j)].norm() > GATE_TOL {
                return Err(GateError::NotClassical { column: j });
            }
        }
    }
    Ok(CMatrix::from_fn(2, 2, |i, j| m[(2 * i, 2 * j)]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub input: Vec<u8>,
    pub output: Vec<u8>,
    /// `[re, im]` of the unit phase on the output.
    pub phase: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTable {
    /// Qubit names, most significant first: `["S", "D"]` or `["P", "S", "D"]`.
    pub qubits: Vec<String>,
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    /// `(input, output)` bit strings such as `("10", "11")`.
    pub fn bit_rows(&self) -> Vec<(String, String)> {
        let s = |v: &[u8]| v.iter().map(|b| char::from(b'0' + b)).collect::<String>();
        self.rows.iter().map(|r| (s(&r.input), s(&r.output))).collect()
    }

    pub fn is_permutation(&self) -> bool {
        let mut outs: Vec<&Vec<u8>> = self.rows.iter().map(|r| &r.output).collect();
        outs.sort();
        outs.dedup();
        outs.len() == self.rows.len()
    }
}

fn bits_of(k: usize, n: usize) -> Vec<u8> {
    (0..n).rev().map(|b| ((k >> b) & 1) as u8).collect()
}

/// Truth table of a logical matrix whose columns each have one entry of
/// modulus at least `1 - 1e-8`.
pub fn truth_table_from_matrix(m: &CMatrix) -> Result<TruthTable, GateError> {
    let n = m.ncols();
    let nbits = n.trailing_zeros() as usize;
    let qubits: Vec<String> = match nbits {
        2 => vec!["S".into(), "D".into()],
        3 => vec!["P".into(), "S".into(), "D".into()],
        _ => (0..nbits).map(|i| format!("q{i}")).collect(),
    };
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let hits: Vec<usize> = (0..m.nrows()).filter(|&i| m[(i, k)].norm() >= 1.0 - GATE_TOL).collect();
        let [out] = hits.as_slice() else {
            return Err(GateError::NotClassical { column: k });
        };
        let z = m[(*out, k)] / m[(*out, k)].norm();
        rows.push(TruthRow { input: bits_of(k, nbits), output: bits_of(*out, nbits), phase: [z.re, z.im] });
    }
    Ok(TruthTable { qubits, rows })
}

pub fn truth_table(circuit: &CompiledCircuit) -> Result<TruthTable, GateError> {
    truth_table_from_matrix(&extract_logical_unitary(circuit)?)
}

// ---------------------------------------------------------------------------
// Netlists

fn pr(inst: &str, port: &str) -> PortRef {
    PortRef::new(inst, port)
}

fn pair(inst: &str, a: &str, b: &str) -> RailPair {
    [pr(inst, a), pr(inst, b)]
}

fn pair2(inst_a: &str, inst_b: &str, port: &str) -> RailPair {
    [pr(inst_a, port), pr(inst_b, port)]
}

fn ok<T>(r: Result<T, CircuitError>) -> T {
    // Builder netlists are fixed; a failure here is a programming error.
    r.unwrap_or_else(|e| panic!("gate netlist is malformed: {e}"))
}

/// Single Grover four-port: CNOT with `S` control and `D` target.
pub fn cnot_sd_graph() -> PortGraph {
    let mut g = PortGraph::new("cnot_sd");
    ok(g.add_element("g", grover_four_port()));
    ok(g.set_logical(LogicalPorts::two_sided(pair("g", "a", "b"), pair("g", "c", "d"))));
    g
}

/// A pi phase on one rail: NOT on `S`.
pub fn not_s_graph() -> PortGraph {
    let mut g = PortGraph::new("not_s");
    ok(g.add_element("p", phase_shifter(PI, RailLabel::B)));
    ok(g.set_logical(LogicalPorts::two_sided(pair("p", "a", "b"), pair("p", "c", "d"))));
    g
}

/// Grover, pi phase on one rail, Grover: NOT on `D`.
pub fn not_d_graph() -> PortGraph {
    let mut g = PortGraph::new("not_d");
    ok(g.add_element("g1", grover_four_port()));
    ok(g.add_element("p", phase_shifter(PI, RailLabel::B)));
    ok(g.add_element("g2", grover_four_port()));
    ok(g.connect_pair(&pair("g1", "c", "d"), &pair("p", "a", "b")));
    ok(g.connect_pair(&pair("p", "c", "d"), &pair("g2", "a", "b")));
    ok(g.set_logical(LogicalPorts::two_sided(pair("g1", "a", "b"), pair("g2", "c", "d"))));
    g
}

/// One beam splitter between two dual-rail lines: Hadamard on `S`.
pub fn hadamard_s_graph() -> PortGraph {
    let mut g = PortGraph::new("hadamard_s");
    ok(g.add_element("bs", beam_splitter(DotSide::First)));
    ok(g.set_logical(LogicalPorts::two_sided(pair("bs", "a", "b"), pair("bs", "c", "d"))));
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::X => reference::pauli_x(),
            Pauli::Y => reference::pauli_y(),
            Pauli::Z => reference::pauli_z(),
        }
    }
}

/// First beam splitter sends `S` to rail `c` and `A` to rail `d`; the arms
/// are optionally crossed and phase shifted, then recombined.
fn bs_sandwich(name: &str, crossed: bool, arm_phase: Option<f64>) -> PortGraph {
    let mut g = PortGraph::new(name);
    ok(g.add_element("bs1", beam_splitter(DotSide::First)));
    ok(g.add_element("bs2", beam_splitter(DotSide::First)));
    let arms = match arm_phase {
        Some(phi) => {
            ok(g.add_element("p", phase_shifter(phi, RailLabel::B)));
            ok(g.connect_pair(&pair("bs1", "c", "d"), &pair("p", "a", "b")));
            pair("p", "c", "d")
        }
        None => pair("bs1", "c", "d"),
    };
    let into = if crossed { pair("bs2", "b", "a") } else { pair("bs2", "a", "b") };
    ok(g.connect_pair(&arms, &into));
    ok(g.set_logical(LogicalPorts::two_sided(pair("bs1", "a", "b"), pair("bs2", "c", "d"))));
    g
}

/// Pauli gates on `S`: separate, operate on the single rails, recombine.
pub fn pauli_s_graph(which: Pauli) -> PortGraph {
    match which {
        Pauli::X => bs_sandwich("pauli_sx", true, None),
        Pauli::Y => bs_sandwich("pauli_sy", true, Some(PI)),
        Pauli::Z => bs_sandwich("pauli_sz", false, Some(PI)),
    }
}

/// `|S> -> |S>`, `|A> -> e^{i phi}|A>`.
pub fn phase_gate_s_graph(phi: f64) -> PortGraph {
    bs_sandwich("phase_s", false, Some(phi))
}

fn add_mirror_pair(g: &mut PortGraph, prefix: &str, side: Side) -> RailPair {
    let (ma, mb) = (format!("{prefix}a"), format!("{prefix}b"));
    ok(g.add_element(ma.clone(), mirror(DEFAULT_MIRROR_PHASE).with_side(side)));
    ok(g.add_element(mb.clone(), mirror(DEFAULT_MIRROR_PHASE).with_side(side)));
    [pr(&ma, "a"), pr(&mb, "a")]
}

/// Pauli gates on `D`. `X`: mirrors on both sides. `Y`: the right-hand
/// mirrors sit behind a pi/2 phase on each rail. `Z`: circulators route the
/// two directions along separate paths, the leftward one carrying pi.
pub fn pauli_d_graph(which: Pauli) -> PortGraph {
    let mut g = PortGraph::new(match which {
        Pauli::X => "pauli_dx",
        Pauli::Y => "pauli_dy",
        Pauli::Z => "pauli_dz",
    });
    match which {
        Pauli::X => {
            let left = add_mirror_pair(&mut g, "ml", Side::Left);
            let right = add_mirror_pair(&mut g, "mr", Side::Right);
            ok(g.set_logical(LogicalPorts::two_sided(left, right)));
        }
        Pauli::Y => {
            let left = add_mirror_pair(&mut g, "ml", Side::Left);
            let right = add_mirror_pair(&mut g, "mr", Side::Right);
            ok(g.add_element("qa", phase_shifter(FRAC_PI_2, RailLabel::A)));
            ok(g.add_element("qb", phase_shifter(FRAC_PI_2, RailLabel::B)));
            ok(g.connect_pair(&pair("qa", "a", "b"), &right));
            ok(g.connect_pair(&pair("qa", "c", "d"), &pair("qb", "a", "b")));
            ok(g.set_logical(LogicalPorts::two_sided(left, pair("qb", "c", "d"))));
        }
        Pauli::Z => {
            for (id, side) in [("cla", Side::Left), ("clb", Side::Left), ("cra", Side::Right), ("crb", Side::Right)] {
                ok(g.add_element(id, circulator().with_side(side)));
            }
            ok(g.add_element("za", phase_shifter(PI, RailLabel::A)));
            ok(g.add_element("zb", phase_shifter(PI, RailLabel::B)));
            ok(g.connect_pair(&pair2("cla", "clb", "b"), &pair2("cra", "crb", "a")));
            ok(g.connect_pair(&pair2("cra", "crb", "c"), &pair("zb", "c", "d")));
            ok(g.connect_pair(&pair("zb", "a", "b"), &pair("za", "c", "d")));
            ok(g.connect_pair(&pair("za", "a", "b"), &pair2("cla", "clb", "c")));
            ok(g.set_logical(LogicalPorts::two_sided(pair2("cla", "clb", "a"), pair2("cra", "crb", "b"))));
        }
    }
    g
}

/// SWAP of `S` and `D`. Circulators split each side into an input and an
/// output line; beam splitters turn each input line into single rails
/// carrying `S` and `A`, which are routed to the output beam splitters:
///
/// * left input `S` -> right output `S`
/// * left input `A` -> left output `S`
/// * right input `S` -> right output `A`
/// * right input `A` -> left output `A`
pub fn swap_sd_graph() -> PortGraph {
    let mut g = PortGraph::new("swap_sd");
    for (id, side) in [("cla", Side::Left), ("clb", Side::Left), ("cra", Side::Right), ("crb", Side::Right)] {
        ok(g.add_element(id, circulator().with_side(side)));
    }
    for id in ["bin_l", "bin_r", "bout_r", "bout_l"] {
        ok(g.add_element(id, beam_splitter(DotSide::First)));
    }
    ok(g.connect_pair(&pair2("cla", "clb", "b"), &pair("bin_l", "a", "b")));
    ok(g.connect_pair(&pair2("cra", "crb", "c"), &pair("bin_r", "a", "b")));
    ok(g.connect_pair(&pair("bout_r", "c", "d"), &pair2("cra", "crb", "a")));
    ok(g.connect_pair(&pair("bout_l", "c", "d"), &pair2("cla", "clb", "c")));
    ok(g.connect(pr("bin_l", "c"), pr("bout_r", "a")));
    ok(g.connect(pr("bin_l", "d"), pr("bout_l", "a")));
    ok(g.connect(pr("bin_r", "c"), pr("bout_r", "b")));
    ok(g.connect(pr("bin_r", "d"), pr("bout_l", "b")));
    ok(g.set_logical(LogicalPorts::two_sided(pair2("cla", "clb", "a"), pair2("cra", "crb", "b"))));
    g
}

/// Chains gates so that gate `k`'s outputs feed gate `k + 1`'s inputs:
/// right outputs (`D = 0`) enter the next gate from the left, left outputs
/// (`D = 1`) enter it from the right. Bidirectional logical ports are split
/// with circulators. The logical matrix of the result is the product of the
/// gates' logical matrices, last gate leftmost.
pub fn series_graph(name: &str, gates: &[PortGraph]) -> Result<PortGraph, CircuitError> {
    let mut g = PortGraph::new(name);
    let mut ends: Option<(RailPair, RailPair)> = None; // (D = 0 out, D = 1 out) of previous stage
    let mut first_in: Option<(RailPair, RailPair)> = None;
    for (k, gate) in gates.iter().enumerate() {
        let prefix = format!("s{k}_");
        let emb = g.embed(&prefix, gate)?;
        let ports = emb
            .logical
            .clone()
            .ok_or_else(|| CircuitError::Logical(format!("gate {} has no logical ports", gate.name)))?;
        let (aux_in, aux_out) = emb.auxiliary();
        for p in aux_in {
            g.add_input(p)?;
        }
        for p in aux_out {
            g.add_output(p)?;
        }
        let mut split = |side: &str, inp: &RailPair, out: &RailPair, s: Side| -> Result<(RailPair, RailPair), CircuitError> {
            if inp != out {
                return Ok((inp.clone(), out.clone()));
            }
            let (ca, cb) = (format!("{prefix}io{side}a"), format!("{prefix}io{side}b"));
            g.add_element(ca.clone(), circulator().with_side(s))?;
            g.add_element(cb.clone(), circulator().with_side(s))?;
            g.connect_pair(&pair2(&ca, &cb, "b"), inp)?;
            Ok((pair2(&ca, &cb, "a"), pair2(&ca, &cb, "c")))
        };
        let (l_in, l_out) = split("l", &ports.left_in, &ports.left_out, Side::Left)?;
        let (r_in, r_out) = split("r", &ports.right_in, &ports.right_out, Side::Right)?;
        match ends.take() {
            None => first_in = Some((l_in, r_in)),
            Some((prev_d0, prev_d1)) => {
                g.connect_pair(&prev_d0, &l_in)?;
                g.connect_pair(&prev_d1, &r_in)?;
            }
        }
        ends = Some((r_out, l_out));
    }
    let (Some((left_in, right_in)), Some((right_out, left_out))) = (first_in, ends) else {
        return Err(CircuitError::Logical("series of zero gates".into()));
    };
    g.set_logical(LogicalPorts { left_in, right_in, right_out, left_out })?;
    Ok(g)
}

/// SWAP followed by NOT on `S`.
pub fn swap_then_not_graph() -> PortGraph {
    ok(series_graph("swap_then_not", &[swap_sd_graph(), not_s_graph()]))
}

/// CNOT, SWAP, CNOT in sequence.
pub fn double_cnot_graph() -> PortGraph {
    ok(series_graph("double_cnot", &[cnot_sd_graph(), swap_sd_graph(), cnot_sd_graph()]))
}

/// Polarizing beam splitters on each rail send `V` through a side branch
/// holding `inner` while `H` goes straight through. Optional phase
/// shifters on rail `b`: `phases[2]` on the shared input line,
/// `phases[0]` and `phases[1]` before and after `inner`, `phases[3]` on the
/// shared output line.
fn polarization_split_graph(name: &str, inner: &PortGraph, phases: Option<[f64; 4]>) -> PortGraph {
    let mut g = PortGraph::new(name);
    for id in ["pbs1a", "pbs1b", "pbs2a", "pbs2b"] {
        ok(g.add_element(id, polarizing_beam_splitter()));
    }
    let emb = ok(g.embed("v_", inner));
    let ports = emb.logical.clone().expect("inner gate has logical ports");
    assert!(ports.left_in == ports.left_out && ports.right_in == ports.right_out, "inner gate must be two-sided");
    let (aux_in, aux_out) = emb.auxiliary();
    for p in aux_in {
        ok(g.add_input(p));
    }
    for p in aux_out {
        ok(g.add_output(p));
    }

    // H path.
    ok(g.connect_pair(&pair2("pbs1a", "pbs1b", "b"), &pair2("pbs2a", "pbs2b", "a")));

    let (left, right, v_left, v_right) = match phases {
        Some([p1, p2, p3, p4]) => {
            ok(g.add_element("phi3", phase_shifter(p3, RailLabel::B)));
            ok(g.add_element("phi1", phase_shifter(p1, RailLabel::B)));
            ok(g.add_element("phi2", phase_shifter(p2, RailLabel::B)));
            ok(g.add_element("phi4", phase_shifter(p4, RailLabel::B)));
            ok(g.connect_pair(&pair("phi3", "c", "d"), &pair2("pbs1a", "pbs1b", "a")));
            ok(g.connect_pair(&pair2("pbs2a", "pbs2b", "b"), &pair("phi4", "a", "b")));
            ok(g.connect_pair(&pair2("pbs1a", "pbs1b", "c"), &pair("phi1", "a", "b")));
            ok(g.connect_pair(&pair("phi2", "c", "d"), &pair2("pbs2a", "pbs2b", "d")));
            (pair("phi3", "a", "b"), pair("phi4", "c", "d"), pair("phi1", "c", "d"), pair("phi2", "a", "b"))
        }
        None => (
            pair2("pbs1a", "pbs1b", "a"),
            pair2("pbs2a", "pbs2b", "b"),
            pair2("pbs1a", "pbs1b", "c"),
            pair2("pbs2a", "pbs2b", "d"),
        ),
    };
    ok(g.connect_pair(&v_left, &ports.left_in));
    ok(g.connect_pair(&ports.right_in, &v_right));
    // Side ports that only ever see vacuum.
    for p in [pr("pbs1a", "d"), pr("pbs1b", "d"), pr("pbs2a", "c"), pr("pbs2b", "c")] {
        ok(g.add_external(p));
    }
    ok(g.set_logical(LogicalPorts::two_sided(left, right)));
    g
}

/// Toffoli: `P` and `S` control, `D` target.
pub fn toffoli_graph() -> PortGraph {
    polarization_split_graph("toffoli", &cnot_sd_graph(), None)
}

/// Fredkin: `P` controls a SWAP of `S` and `D`.
pub fn fredkin_graph() -> PortGraph {
    polarization_split_graph("fredkin", &swap_sd_graph(), None)
}

/// The four-phase programmable three-qubit device.
pub fn programmable_graph(phases: [f64; 4]) -> PortGraph {
    polarization_split_graph("programmable", &cnot_sd_graph(), Some(phases))
}

/// Polarizing beam splitter on each rail with mirrors on the reflected
/// ports: `V` reverses direction, `H` passes. CNOT with `P` control and
/// `D` target.
pub fn cnot_pd_graph() -> PortGraph {
    let mut g = PortGraph::new("cnot_pd");
    ok(g.add_element("pa", polarizing_beam_splitter()));
    ok(g.add_element("pb", polarizing_beam_splitter()));
    let ml = add_mirror_pair(&mut g, "ml", Side::Left);
    let mr = add_mirror_pair(&mut g, "mr", Side::Right);
    ok(g.connect_pair(&pair2("pa", "pb", "c"), &ml));
    ok(g.connect_pair(&pair2("pa", "pb", "d"), &mr));
    ok(g.set_logical(LogicalPorts::two_sided(pair2("pa", "pb", "a"), pair2("pa", "pb", "b"))));
    g
}

fn compiled(g: PortGraph) -> CompiledCircuit {
    g.compile().unwrap_or_else(|e| panic!("gate netlist '{}' failed to compile: {e}", g.name))
}

pub fn build_cnot_sd() -> CompiledCircuit {
    compiled(cnot_sd_graph())
}

pub fn build_not_s() -> CompiledCircuit {
    compiled(not_s_graph())
}

pub fn build_not_d() -> CompiledCircuit {
    compiled(not_d_graph())
}

pub fn build_hadamard_s() -> CompiledCircuit {
    compiled(hadamard_s_graph())
}

pub fn build_pauli_s(which: Pauli) -> CompiledCircuit {
    compiled(pauli_s_graph(which))
}

pub fn build_pauli_d(which: Pauli) -> CompiledCircuit {
    compiled(pauli_d_graph(which))
}

pub fn build_phase_gate_s(phi: f64) -> CompiledCircuit {
    compiled(phase_gate_s_graph(phi))
}

pub fn build_swap_sd() -> CompiledCircuit {
    compiled(swap_sd_graph())
}

pub fn build_swap_then_not() -> CompiledCircuit {
    compiled(swap_then_not_graph())
}

pub fn build_double_cnot_circuit() -> CompiledCircuit {
    compiled(double_cnot_graph())
}

pub fn build_toffoli() -> CompiledCircuit {
    compiled(toffoli_graph())
}

pub fn build_fredkin() -> CompiledCircuit {
    compiled(fredkin_graph())
}

pub fn build_programmable(phi1: f64, phi2: f64, phi3: f64, phi4: f64) -> CompiledCircuit {
    compiled(programmable_graph([phi1, phi2, phi3, phi4]))
}

pub fn build_cnot_pd() -> CompiledCircuit {
    compiled(cnot_pd_graph())
}

// ---------------------------------------------------------------------------
// Verification

/// How a circuit's logical matrix is compared with its reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Equal up to one global phase.
    GlobalPhase,
    /// Equal up to a phase per row (classical gates with reflection signs).
    RowPhases,
    /// The `D`-preserving forward 2x2 block equals the reference up to a
    /// global phase.
    ForwardBlock,
    /// Equal entry by entry, signs included.
    Exact,
}

#[derive(Debug, Clone)]
pub struct GateSpec {
    pub name: String,
    pub qubits: Vec<char>,
    pub reference: CMatrix,
    pub comparison: Comparison,
}

/// Outcome of checking one gate.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub gate: String,
    pub pass: bool,
    pub max_error: f64,
    /// Global phase `theta` with `logical = e^{i theta} reference`, when
    /// the comparison has one.
    pub phase: Option<f64>,
    /// Per-row phases `[re, im]` for row-phase comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_phases: Option<Vec<[f64; 2]>>,
    pub comparison: Comparison,
}

pub const GATE_NAMES: [&str; 18] = [
    "cnot_sd",
    "not_s",
    "not_d",
    "hadamard_s",
    "pauli_sx",
    "pauli_sy",
    "pauli_sz",
    "pauli_dx",
    "pauli_dy",
    "pauli_dz",
    "phase_s",
    "swap_sd",
    "swap_then_not",
    "double_cnot",
    "toffoli",
    "fredkin",
    "programmable",
    "cnot_pd",
];

fn expect_phases(gate: &str, phases: &[f64], n: usize) -> Result<(), GateError> {
    if phases.len() == n {
        Ok(())
    } else {
        Err(GateError::BadPhases { gate: gate.into(), expected: n, got: phases.len() })
    }
}

/// The netlist and reference for a named gate.
pub fn gate_by_name(name: &str, phases: &[f64]) -> Result<(PortGraph, GateSpec), GateError> {
    use reference as r;
    let sd = vec!['S', 'D'];
    let psd = vec!['P', 'S', 'D'];
    let spec = |reference: CMatrix, comparison: Comparison, qubits: &Vec<char>| GateSpec {
        name: name.to_string(),
        qubits: qubits.clone(),
        reference,
        comparison,
    };
    let no_phases = |g: PortGraph| -> Result<PortGraph, GateError> {
        expect_phases(name, phases, 0)?;
        Ok(g)
    };
    Ok(match name {
        "cnot_sd" => (no_phases(cnot_sd_graph())?, spec(r::cnot_sd(), Comparison::RowPhases, &sd)),
        "not_s" => (no_phases(not_s_graph())?, spec(r::on_s(&r::pauli_x()), Comparison::GlobalPhase, &sd)),
        "not_d" => (no_phases(not_d_graph())?, spec(r::on_d(&r::pauli_x()), Comparison::GlobalPhase, &sd)),
        "hadamard_s" => (no_phases(hadamard_s_graph())?, spec(r::on_s(&r::hadamard()), Comparison::GlobalPhase, &sd)),
        "pauli_sx" => (no_phases(pauli_s_graph(Pauli::X))?, spec(r::pauli_x(), Comparison::ForwardBlock, &sd)),
        "pauli_sy" => (no_phases(pauli_s_graph(Pauli::Y))?, spec(r::pauli_y(), Comparison::ForwardBlock, &sd)),
        "pauli_sz" => (no_phases(pauli_s_graph(Pauli::Z))?, spec(r::pauli_z(), Comparison::ForwardBlock, &sd)),
        "pauli_dx" => (no_phases(pauli_d_graph(Pauli::X))?, spec(r::on_d(&r::pauli_x()), Comparison::GlobalPhase, &sd)),
        "pauli_dy" => (no_phases(pauli_d_graph(Pauli::Y))?, spec(r::on_d(&r::pauli_y()), Comparison::GlobalPhase, &sd)),
        "pauli_dz" => (no_phases(pauli_d_graph(Pauli::Z))?, spec(r::on_d(&r::pauli_z()), Comparison::GlobalPhase, &sd)),
        "phase_s" => {
            expect_phases(name, phases, 1)?;
            (phase_gate_s_graph(phases[0]), spec(r::phase(phases[0]), Comparison::ForwardBlock, &sd))
        }
        "swap_sd" => (no_phases(swap_sd_graph())?, spec(r::swap_sd(), Comparison::GlobalPhase, &sd)),
        "swap_then_not" => (
            no_phases(swap_then_not_graph())?,
            spec(r::on_s(&r::pauli_x()) * r::swap_sd(), Comparison::GlobalPhase, &sd),
        ),
        "double_cnot" => (
            no_phases(double_cnot_graph())?,
            spec(r::cnot_sd() * r::swap_sd() * r::cnot_sd(), Comparison::RowPhases, &sd),
        ),
        "toffoli" => (no_phases(toffoli_graph())?, spec(r::toffoli(), Comparison::RowPhases, &psd)),
        "fredkin" => (no_phases(fredkin_graph())?, spec(r::fredkin(), Comparison::RowPhases, &psd)),
        "cnot_pd" => (no_phases(cnot_pd_graph())?, spec(r::cnot_pd(), Comparison::RowPhases, &psd)),
        "programmable" => {
            expect_phases(name, phases, 4)?;
            let q = [phases[0], phases[1], phases[2], phases[3]];
            let (reference, comparison) = match r::PrintedSetting::from_phases(q) {
                Some(setting) => (r::printed_programmable(setting), Comparison::Exact),
                None => (crate::closedform::programmable_closed_form(&q.into()), Comparison::GlobalPhase),
            };
            (programmable_graph(q), spec(reference, comparison, &psd))
        }
        other => return Err(GateError::UnknownGate(other.to_string())),
    })
}

/// Compares a logical matrix with a gate spec.
pub fn check_against(logical: &CMatrix, spec: &GateSpec, tol: f64) -> Result<Verdict, GateError> {
    let (max_error, phase, row) = match spec.comparison {
        Comparison::GlobalPhase => {
            let (e, th) = global_phase_error(logical, &spec.reference)?;
            (e, Some(th), None)
        }
        Comparison::ForwardBlock => {
            let block = forward_block(logical)?;
            let (e, th) = global_phase_error(&block, &spec.reference)?;
            (e, Some(th), None)
        }
        Comparison::RowPhases => {
            let (ph, e) = row_phases(logical, &spec.reference)?;
            (e, None, Some(ph.iter().map(|z| [z.re, z.im]).collect()))
        }
        Comparison::Exact => {
            if logical.shape() != spec.reference.shape() {
                return Err(GateError::DimensionMismatch(logical.shape(), spec.reference.shape()));
            }
            (max_abs_diff(logical, &spec.reference), Some(0.0), None)
        }
    };
    Ok(Verdict {
        gate: spec.name.clone(),
        pass: max_error < tol,
        max_error,
        phase,
        row_phases: row,
        comparison: spec.comparison,
    })
}

/// Builds, compiles and checks a named gate.
pub fn verify(name: &str, phases: &[f64], tol: f64) -> Result<(Verdict, CMatrix), GateError> {
    let (graph, spec) = gate_by_name(name, phases)?;
    let circuit = graph.compile()?;
    let logical = extract_logical_unitary(&circuit)?;
    let verdict = check_against(&logical, &spec, tol)?;
    Ok((verdict, logical))
}

/// Runs [`verify`] for every named gate that takes no phases, plus the
/// phase gate at `pi/2` and the programmable device at its printed settings.
pub fn verify_all(tol: f64) -> Vec<Result<Verdict, GateError>> {
    let mut jobs: Vec<(&str, Vec<f64>)> =
        GATE_NAMES.iter().filter(|n| !matches!(**n, "phase_s" | "programmable")).map(|n| (*n, vec![])).collect();
    jobs.push(("phase_s", vec![FRAC_PI_2]));
    for s in reference::PrintedSetting::ALL {
        jobs.push(("programmable", s.phases().to_vec()));
    }
    crate::par::map(&jobs, |(n, p)| verify(n, p, tol).map(|(v, _)| v))
}

/// Logical basis labels for a logical matrix dimension.
pub fn logical_labels(dim: usize) -> Vec<String> {
    LogicalBasis::labels(dim == 8)
}

/// Applies a logical matrix to a logical basis state.
pub fn apply_logical(m: &CMatrix, k: usize) -> CVector {
    m.column(k).into_owned()
}
