//! Netlists of scattering elements and their compilation to a single
//! input-to-output matrix.
//!
//! Every element port carries two modes, one flowing in and one flowing
//! out. A wire between ports `p` and `q` identifies `out(p)` with `in(q)` and
//! `out(q)` with `in(p)`; an unwired port must be declared as an external
//! input and/or output. Compilation builds the directed graph of internal
//! modes (an edge wherever an element matrix entry is nonzero), orders it
//! topologically and propagates the external inputs through it.
//!
//! Unbiased devices such as the Grover four-port couple every port to every
//! other one, so a chain of them has structural loops even when no amplitude
//! ever circulates. Those loops are accepted when the loop operator of the
//! strongly connected component is nilpotent and summed exactly; a loop with
//! a non-nilpotent operator is a resonator and is rejected.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::{ScatteringElement, Side};
use crate::linalg::{max_abs, unitarity_error, CMatrix, CVector, C64, TOL};
use crate::modespace::{DirectedMode, Direction, Polarization, RailLabel};
use crate::photon_state::SinglePhotonState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("duplicate element id '{0}'")]
    DuplicateId(String),
    #[error("unknown element '{0}'")]
    UnknownElement(String),
    #[error("element '{instance}' has no port '{port}'")]
    UnknownPort { instance: String, port: String },
    #[error("port {0} is already wired")]
    AlreadyWired(PortRef),
    #[error("port {0} cannot be wired to itself")]
    SelfWire(PortRef),
    #[error("port {0} is wired and cannot also be external")]
    WiredExternal(PortRef),
    #[error("port {0} is already declared as an external {1}")]
    DuplicateExternal(PortRef, &'static str),
    #[error("port {0} is neither wired nor declared external")]
    DanglingPort(PortRef),
    #[error("resonant loop through modes [{}]", .0.join(", "))]
    CycleDetected(Vec<String>),
    #[error("total matrix is not unitary (max deviation {0:.3e}); amplitude leaks to undeclared modes")]
    NonUnitary(f64),
    #[error("state has {got} amplitudes but the circuit has {expected} input modes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("logical ports: {0}")]
    Logical(String),
}

/// `instance.port`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub instance: String,
    pub port: String,
}

impl PortRef {
    pub fn new(instance: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef { instance: instance.into(), port: port.into() }
    }

    /// Parses `inst.port`.
    pub fn parse(s: &str) -> Option<Self> {
        let (i, p) = s.split_once('.')?;
        (!i.is_empty() && !p.is_empty()).then(|| PortRef::new(i, p))
    }

    fn prefixed(&self, prefix: &str) -> Self {
        PortRef::new(format!("{prefix}{}", self.instance), self.port.clone())
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

/// A pair of ports acting as rails `a` and `b` of one dual-rail line.
pub type RailPair = [PortRef; 2];

/// The ports that carry the logical qubits. Inputs on the left travel
/// right (`D = 0`), inputs on the right travel left (`D = 1`); outputs on
/// the right travel right, outputs on the left travel left.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalPorts {
    pub left_in: RailPair,
    pub right_in: RailPair,
    pub right_out: RailPair,
    pub left_out: RailPair,
}

impl LogicalPorts {
    /// One bidirectional line on each side.
    pub fn two_sided(left: RailPair, right: RailPair) -> Self {
        LogicalPorts { left_in: left.clone(), right_in: right.clone(), right_out: right, left_out: left }
    }

    /// Input pair for logical direction bit `d`.
    pub fn input_pair(&self, d: u8) -> &RailPair {
        if d == 0 {
            &self.left_in
        } else {
            &self.right_in
        }
    }

    pub fn output_pair(&self, d: u8) -> &RailPair {
        if d == 0 {
            &self.right_out
        } else {
            &self.left_out
        }
    }

    fn prefixed(&self, prefix: &str) -> Self {
        let p = |pair: &RailPair| [pair[0].prefixed(prefix), pair[1].prefixed(prefix)];
        LogicalPorts {
            left_in: p(&self.left_in),
            right_in: p(&self.right_in),
            right_out: p(&self.right_out),
            left_out: p(&self.left_out),
        }
    }
}

/// A netlist under construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PortGraph {
    pub name: String,
    elements: Vec<(String, ScatteringElement)>,
    index: HashMap<String, usize>,
    wires: Vec<(PortRef, PortRef)>,
    inputs: Vec<PortRef>,
    outputs: Vec<PortRef>,
    logical: Option<LogicalPorts>,
}

/// Ports of an embedded sub-circuit, renamed into the parent.
#[derive(Debug, Clone)]
pub struct Embedded {
    pub logical: Option<LogicalPorts>,
    pub inputs: Vec<PortRef>,
    pub outputs: Vec<PortRef>,
}

impl Embedded {
    /// Declared externals of the sub-circuit that are not logical ports.
    pub fn auxiliary(&self) -> (Vec<PortRef>, Vec<PortRef>) {
        let logical: BTreeSet<&PortRef> = match &self.logical {
            Some(l) => l.left_in.iter().chain(&l.right_in).chain(&l.right_out).chain(&l.left_out).collect(),
            None => BTreeSet::new(),
        };
        let keep = |v: &[PortRef]| v.iter().filter(|p| !logical.contains(p)).cloned().collect();
        (keep(&self.inputs), keep(&self.outputs))
    }
}

impl PortGraph {
    pub fn new(name: impl Into<String>) -> Self {
        PortGraph { name: name.into(), ..Default::default() }
    }

    pub fn elements(&self) -> impl Iterator<Item = (&str, &ScatteringElement)> {
        self.elements.iter().map(|(id, e)| (id.as_str(), e))
    }

    pub fn element(&self, id: &str) -> Option<&ScatteringElement> {
        self.index.get(id).map(|&i| &self.elements[i].1)
    }

    pub fn wires(&self) -> &[(PortRef, PortRef)] {
        &self.wires
    }

    pub fn inputs(&self) -> &[PortRef] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PortRef] {
        &self.outputs
    }

    pub fn logical(&self) -> Option<&LogicalPorts> {
        self.logical.as_ref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn add_element(&mut self, id: impl Into<String>, element: ScatteringElement) -> Result<&mut Self, CircuitError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(CircuitError::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.elements.len());
        self.elements.push((id, element));
        Ok(self)
    }

    fn check_port(&self, p: &PortRef) -> Result<(), CircuitError> {
        let el = self.element(&p.instance).ok_or_else(|| CircuitError::UnknownElement(p.instance.clone()))?;
        el.port_index(&p.port)
            .map(|_| ())
            .ok_or_else(|| CircuitError::UnknownPort { instance: p.instance.clone(), port: p.port.clone() })
    }

    fn side_of(&self, p: &PortRef) -> Side {
        let el = self.element(&p.instance).expect("checked port");
        el.ports[el.port_index(&p.port).expect("checked port")].side
    }

    pub fn is_wired(&self, p: &PortRef) -> bool {
        self.wires.iter().any(|(x, y)| x == p || y == p)
    }

    fn is_external(&self, p: &PortRef) -> bool {
        self.inputs.contains(p) || self.outputs.contains(p)
    }

    pub fn connect(&mut self, a: PortRef, b: PortRef) -> Result<&mut Self, CircuitError> {
        self.check_port(&a)?;
        self.check_port(&b)?;
        if a == b {
            return Err(CircuitError::SelfWire(a));
        }
        for p in [&a, &b] {
            if self.is_wired(p) {
                return Err(CircuitError::AlreadyWired(p.clone()));
            }
            if self.is_external(p) {
                return Err(CircuitError::WiredExternal(p.clone()));
            }
        }
        self.wires.push((a, b));
        Ok(self)
    }

    /// Wires rail `a` to rail `a` and rail `b` to rail `b`.
    pub fn connect_pair(&mut self, a: &RailPair, b: &RailPair) -> Result<&mut Self, CircuitError> {
        self.connect(a[0].clone(), b[0].clone())?;
        self.connect(a[1].clone(), b[1].clone())
    }

    pub fn add_input(&mut self, p: PortRef) -> Result<&mut Self, CircuitError> {
        self.check_port(&p)?;
        if self.is_wired(&p) {
            return Err(CircuitError::WiredExternal(p));
        }
        if self.inputs.contains(&p) {
            return Err(CircuitError::DuplicateExternal(p, "input"));
        }
        self.inputs.push(p);
        Ok(self)
    }

    pub fn add_output(&mut self, p: PortRef) -> Result<&mut Self, CircuitError> {
        self.check_port(&p)?;
        if self.is_wired(&p) {
            return Err(CircuitError::WiredExternal(p));
        }
        if self.outputs.contains(&p) {
            return Err(CircuitError::DuplicateExternal(p, "output"));
        }
        self.outputs.push(p);
        Ok(self)
    }

    /// Declares `p` as both an input and an output.
    pub fn add_external(&mut self, p: PortRef) -> Result<&mut Self, CircuitError> {
        self.add_input(p.clone())?;
        self.add_output(p)
    }

    /// Declares every unwired, undeclared port as a bidirectional external.
    pub fn declare_remaining_external(&mut self) -> Result<&mut Self, CircuitError> {
        let mut todo = Vec::new();
        for (id, el) in &self.elements {
            for port in &el.ports {
                let p = PortRef::new(id.clone(), port.name.clone());
                if !self.is_wired(&p) && !self.is_external(&p) {
                    todo.push(p);
                }
            }
        }
        for p in todo {
            self.add_external(p)?;
        }
        Ok(self)
    }

    /// Sets the logical ports, declaring any that are not yet external.
    pub fn set_logical(&mut self, ports: LogicalPorts) -> Result<&mut Self, CircuitError> {
        for p in ports.left_in.iter().chain(&ports.right_in) {
            if !self.inputs.contains(p) {
                self.add_input(p.clone())?;
            }
        }
        for p in ports.right_out.iter().chain(&ports.left_out) {
            if !self.outputs.contains(p) {
                self.add_output(p.clone())?;
            }
        }
        self.logical = Some(ports);
        Ok(self)
    }

    /// Logical ports from the declared externals: on each side, the first
    /// two declared inputs (outputs) are rails `a` and `b`; further
    /// declarations are auxiliary ports.
    pub fn infer_logical(&self) -> Result<LogicalPorts, CircuitError> {
        let pick = |decl: &[PortRef], side: Side, what: &str| -> Result<RailPair, CircuitError> {
            let v: Vec<&PortRef> = decl.iter().filter(|p| self.side_of(p) == side).take(2).collect();
            match v.as_slice() {
                [a, b] => Ok([(*a).clone(), (*b).clone()]),
                _ => Err(CircuitError::Logical(format!("need two {what} ports on the {side:?} side"))),
            }
        };
        Ok(LogicalPorts {
            left_in: pick(&self.inputs, Side::Left, "input")?,
            right_in: pick(&self.inputs, Side::Right, "input")?,
            right_out: pick(&self.outputs, Side::Right, "output")?,
            left_out: pick(&self.outputs, Side::Left, "output")?,
        })
    }

    /// Copies `sub`'s elements and wires into `self` with ids prefixed by
    /// `prefix`. External declarations are not copied; they are returned
    /// renamed so the caller can wire or declare them.
    pub fn embed(&mut self, prefix: &str, sub: &PortGraph) -> Result<Embedded, CircuitError> {
        for (id, el) in &sub.elements {
            self.add_element(format!("{prefix}{id}"), el.clone())?;
        }
        for (a, b) in &sub.wires {
            self.connect(a.prefixed(prefix), b.prefixed(prefix))?;
        }
        Ok(Embedded {
            logical: sub.logical.as_ref().map(|l| l.prefixed(prefix)),
            inputs: sub.inputs.iter().map(|p| p.prefixed(prefix)).collect(),
            outputs: sub.outputs.iter().map(|p| p.prefixed(prefix)).collect(),
        })
    }

    pub fn polarized(&self) -> bool {
        self.elements.iter().any(|(_, e)| e.polarized)
    }

    pub fn compile(&self) -> Result<CompiledCircuit, CircuitError> {
        compile(self)
    }
}

/// One external mode of a compiled circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalMode {
    pub port: PortRef,
    pub mode: DirectedMode,
}

/// The compiled form of a [`PortGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    pub name: String,
    pub polarized: bool,
    pub inputs: Vec<ExternalMode>,
    pub outputs: Vec<ExternalMode>,
    /// Internal modes in evaluation order (a topological order when the
    /// structural graph is acyclic).
    pub mode_order: Vec<DirectedMode>,
    /// Whether the structural mode graph was acyclic.
    pub feed_forward: bool,
    pub total_unitary: CMatrix,
    pub logical: Option<LogicalPorts>,
}

impl CompiledCircuit {
    pub fn input_index(&self, port: &PortRef, pol: Option<Polarization>) -> Option<usize> {
        self.inputs.iter().position(|m| &m.port == port && m.mode.polarization == pol)
    }

    pub fn output_index(&self, port: &PortRef, pol: Option<Polarization>) -> Option<usize> {
        self.outputs.iter().position(|m| &m.port == port && m.mode.polarization == pol)
    }

    pub fn input_labels(&self) -> Vec<String> {
        self.inputs.iter().map(|m| m.mode.to_string()).collect()
    }

    pub fn output_labels(&self) -> Vec<String> {
        self.outputs.iter().map(|m| m.mode.to_string()).collect()
    }

    pub fn input_basis(&self) -> Vec<DirectedMode> {
        self.inputs.iter().map(|m| m.mode.clone()).collect()
    }

    pub fn output_basis(&self) -> Vec<DirectedMode> {
        self.outputs.iter().map(|m| m.mode.clone()).collect()
    }

    pub fn apply_vector(&self, amps: &CVector) -> Result<CVector, CircuitError> {
        if amps.len() != self.inputs.len() {
            return Err(CircuitError::DimensionMismatch { expected: self.inputs.len(), got: amps.len() });
        }
        Ok(&self.total_unitary * amps)
    }

    /// Evolves a single-photon state over the input modes to the output
    /// modes.
    pub fn apply(&self, state: &SinglePhotonState) -> Result<SinglePhotonState, CircuitError> {
        let out = self.apply_vector(state.amplitudes())?;
        Ok(SinglePhotonState::from_parts_unchecked(self.output_basis(), out))
    }

    /// Logical ports attached at build time, or inferred from the
    /// external declarations.
    pub fn logical_ports(&self) -> Option<&LogicalPorts> {
        self.logical.as_ref()
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.total_unitary)
    }
}

fn external_mode(port: &PortRef, side: Side, input: bool, pol: Option<Polarization>) -> DirectedMode {
    let direction = match (side, input) {
        (Side::Left, true) | (Side::Right, false) => Direction::R,
        _ => Direction::L,
    };
    DirectedMode::new(port.to_string(), direction).with_polarization(pol)
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Internal(usize),
    External(usize),
    /// Undeclared input direction of an external port (vacuum) or
    /// undeclared output direction (lost amplitude).
    None,
}

/// Nonzero test for structural edges. Element entries are exact products of
/// `+-1`, `+-1/2`, `1/sqrt2` and unit phases, so roundoff zeros are tiny.
const EDGE_EPS: f64 = 1e-14;

pub fn compile(graph: &PortGraph) -> Result<CompiledCircuit, CircuitError> {
    let polarized = graph.polarized();
    let npol = if polarized { 2 } else { 1 };
    let pols: Vec<Option<Polarization>> =
        if polarized { Polarization::BOTH.iter().copied().map(Some).collect() } else { vec![None] };

    for (id, el) in &graph.elements {
        for port in &el.ports {
            let p = PortRef::new(id.clone(), port.name.clone());
            if !graph.is_wired(&p) && !graph.is_external(&p) {
                return Err(CircuitError::DanglingPort(p));
            }
        }
    }

    // Internal modes: one per wire direction and polarization, keyed by the
    // sending port for deterministic tie-breaking.
    let mut internal: Vec<(PortRef, PortRef, usize)> = Vec::new();
    for (a, b) in &graph.wires {
        for (from, to) in [(a, b), (b, a)] {
            for pol in 0..npol {
                internal.push((from.clone(), to.clone(), pol));
            }
        }
    }
    internal.sort();
    let internal_index: HashMap<(PortRef, usize), usize> =
        internal.iter().enumerate().map(|(i, (from, _, pol))| ((from.clone(), *pol), i)).collect();
    let internal_in: HashMap<(PortRef, usize), usize> =
        internal.iter().enumerate().map(|(i, (_, to, pol))| ((to.clone(), *pol), i)).collect();

    let mut inputs = Vec::new();
    let mut input_index = HashMap::new();
    for p in &graph.inputs {
        let side = graph.side_of(p);
        for (k, pol) in pols.iter().enumerate() {
            input_index.insert((p.clone(), k), inputs.len());
            inputs.push(ExternalMode { port: p.clone(), mode: external_mode(p, side, true, *pol) });
        }
    }
    let mut outputs = Vec::new();
    let mut output_index = HashMap::new();
    for p in &graph.outputs {
        let side = graph.side_of(p);
        for (k, pol) in pols.iter().enumerate() {
            output_index.insert((p.clone(), k), outputs.len());
            outputs.push(ExternalMode { port: p.clone(), mode: external_mode(p, side, false, *pol) });
        }
    }

    let nx = internal.len();
    let (nu, ny) = (inputs.len(), outputs.len());
    let mut s_xx = CMatrix::zeros(nx, nx);
    let mut s_xu = CMatrix::zeros(nx, nu);
    let mut s_yx = CMatrix::zeros(ny, nx);
    let mut s_yu = CMatrix::zeros(ny, nu);

    for (id, el) in &graph.elements {
        let m = el.resolved_matrix(polarized);
        let slots = |incoming: bool| -> Vec<Slot> {
            let mut v = Vec::with_capacity(m.nrows());
            for port in &el.ports {
                let p = PortRef::new(id.clone(), port.name.clone());
                for pol in 0..npol {
                    let key = (p.clone(), pol);
                    let slot = if incoming {
                        internal_in.get(&key).map(|&i| Slot::Internal(i)).or_else(|| input_index.get(&key).map(|&i| Slot::External(i)))
                    } else {
                        internal_index.get(&key).map(|&i| Slot::Internal(i)).or_else(|| output_index.get(&key).map(|&i| Slot::External(i)))
                    };
                    v.push(slot.unwrap_or(Slot::None));
                }
            }
            v
        };
        let ins = slots(true);
        let outs = slots(false);
        for (r, out) in outs.iter().enumerate() {
            for (k, inp) in ins.iter().enumerate() {
                let v = m[(r, k)];
                if v.norm() <= EDGE_EPS {
                    continue;
                }
                match (*out, *inp) {
                    (Slot::Internal(i), Slot::Internal(j)) => s_xx[(i, j)] += v,
                    (Slot::Internal(i), Slot::External(j)) => s_xu[(i, j)] += v,
                    (Slot::External(i), Slot::Internal(j)) => s_yx[(i, j)] += v,
                    (Slot::External(i), Slot::External(j)) => s_yu[(i, j)] += v,
                    _ => {}
                }
            }
        }
    }

    // Modes no input can reach carry no amplitude; dropping them also drops
    // closed resonators that light never enters.
    let live = reachable_from_inputs(&s_xx, &s_xu);
    let s_xx = s_xx.select_rows(&live).select_columns(&live);
    let s_xu = s_xu.select_rows(&live);
    let s_yx = s_yx.select_columns(&live);
    let nx = live.len();
    let internal: Vec<_> = live.iter().map(|&i| internal[i].clone()).collect();

    let labels: Vec<DirectedMode> = internal
        .iter()
        .map(|(from, to, pol)| {
            let dir = match graph.side_of(from) {
                Side::Right => Direction::R,
                Side::Left => Direction::L,
            };
            DirectedMode::new(format!("{from}>{to}"), dir).with_polarization(pols[*pol])
        })
        .collect();

    let (order, feed_forward) = match topological_order(&s_xx) {
        Some(order) => (order, true),
        None => {
            check_loops_nilpotent(&s_xx, &labels)?;
            ((0..nx).collect(), false)
        }
    };

    let x = if feed_forward {
        forward_substitute(&s_xx, &s_xu, &order)
    } else {
        neumann_solve(&s_xx, &s_xu)
    };
    let total = &s_yu + &s_yx * &x;

    let err = unitarity_error(&total);
    if err >= TOL {
        return Err(CircuitError::NonUnitary(err));
    }

    Ok(CompiledCircuit {
        name: graph.name.clone(),
        polarized,
        inputs,
        outputs,
        mode_order: order.iter().map(|&i| labels[i].clone()).collect(),
        feed_forward,
        total_unitary: total,
        logical: match &graph.logical {
            Some(l) => Some(l.clone()),
            None => graph.infer_logical().ok(),
        },
    })
}

fn reachable_from_inputs(s_xx: &CMatrix, s_xu: &CMatrix) -> Vec<usize> {
    let n = s_xx.nrows();
    let succ = edges(s_xx);
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> =
        (0..n).filter(|&i| s_xu.row(i).iter().any(|v| v.norm() > EDGE_EPS)).collect();
    for &i in &stack {
        seen[i] = true;
    }
    while let Some(j) = stack.pop() {
        for &i in &succ[j] {
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

fn edges(s_xx: &CMatrix) -> Vec<Vec<usize>> {
    let n = s_xx.nrows();
    let mut succ = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..n {
            if s_xx[(i, j)].norm() > EDGE_EPS {
                succ[j].push(i);
            }
        }
    }
    succ
}

/// Kahn's algorithm; among ready modes the lowest index (lexicographic
/// sending port) goes first. `None` when the graph has a cycle.
fn topological_order(s_xx: &CMatrix) -> Option<Vec<usize>> {
    let n = s_xx.nrows();
    let succ = edges(s_xx);
    let mut indeg = vec![0usize; n];
    for list in &succ {
        for &i in list {
            indeg[i] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(j) = ready.pop_first() {
        order.push(j);
        for &i in &succ[j] {
            indeg[i] -= 1;
            if indeg[i] == 0 {
                ready.insert(i);
            }
        }
    }
    (order.len() == n).then_some(order)
}

fn forward_substitute(s_xx: &CMatrix, s_xu: &CMatrix, order: &[usize]) -> CMatrix {
    let mut x = s_xu.clone();
    for &j in order {
        let row = x.row(j).into_owned();
        for i in 0..s_xx.nrows() {
            let w = s_xx[(i, j)];
            if w != C64::new(0.0, 0.0) {
                for (k, r) in row.iter().enumerate() {
                    x[(i, k)] += w * r;
                }
            }
        }
    }
    x
}

/// `(I - S)^{-1} B` for nilpotent `S`, summed until the terms vanish.
fn neumann_solve(s_xx: &CMatrix, s_xu: &CMatrix) -> CMatrix {
    let mut term = s_xu.clone();
    let mut acc = s_xu.clone();
    for _ in 0..=s_xx.nrows() {
        term = s_xx * &term;
        if max_abs(&term) < 1e-15 {
            break;
        }
        acc += &term;
    }
    acc
}

/// Tarjan's strongly connected components.
fn strongly_connected(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for k in 0..s.succ[v].len() {
            let w = s.succ[v][k];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = succ.len();
    let mut s = State {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

fn check_loops_nilpotent(s_xx: &CMatrix, labels: &[DirectedMode]) -> Result<(), CircuitError> {
    let succ = edges(s_xx);
    for comp in strongly_connected(&succ) {
        let k = comp.len();
        let self_loop = k == 1 && succ[comp[0]].contains(&comp[0]);
        if k == 1 && !self_loop {
            continue;
        }
        let sub = CMatrix::from_fn(k, k, |i, j| s_xx[(comp[i], comp[j])]);
        let mut power = sub.clone();
        for _ in 1..k {
            power = &sub * &power;
        }
        if max_abs(&power) > 1e-9 {
            return Err(CircuitError::CycleDetected(find_cycle(&succ, &comp, labels)));
        }
    }
    Ok(())
}

fn find_cycle(succ: &[Vec<usize>], comp: &[usize], labels: &[DirectedMode]) -> Vec<String> {
    let members: BTreeSet<usize> = comp.iter().copied().collect();
    let start = comp[0];
    // Breadth-first search back to `start` inside the component.
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &succ[v] {
            if !members.contains(&w) {
                continue;
            }
            if w == start {
                let mut path = vec![v];
                let mut cur = v;
                while cur != start {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.reverse();
                return path.iter().map(|&i| labels[i].to_string()).collect();
            }
            if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(w) {
                e.insert(v);
                queue.push_back(w);
            }
        }
    }
    comp.iter().map(|&i| labels[i].to_string()).collect()
}

/// Rail label of an external port under the given logical ports.
pub fn rail_of(ports: &LogicalPorts, p: &PortRef) -> Option<RailLabel> {
    for pair in [&ports.left_in, &ports.right_in, &ports.right_out, &ports.left_out] {
        if &pair[0] == p {
            return Some(RailLabel::A);
        }
        if &pair[1] == p {
            return Some(RailLabel::B);
        }
    }
    None
}
