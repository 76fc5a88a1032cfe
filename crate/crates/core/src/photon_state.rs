//! Single- and two-photon states and the logical `(P, S, D)` encoding.
//!
//! A two-photon state is `sum_ij M_ij a_i^dag a_j^dag |0>` with `M`
//! symmetric; its norm is `2 sum |M_ij|^2`. A linear-optical circuit with
//! single-photon matrix `U` maps `M` to `U M U^T`.

use thiserror::Error;

use crate::circuit::{CircuitError, CompiledCircuit, LogicalPorts};
use crate::linalg::{c, norm_sqr, CMatrix, CVector, C64, FRAC_1_SQRT_2, TOL};
use crate::modespace::{mod2_total, DirectedMode, LogicalBasis, Polarization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("amplitude matrix is not symmetric (max deviation {0:.3e})")]
    NotSymmetric(f64),
    #[error("basis has {basis} modes but {got} amplitudes were given")]
    DimensionMismatch { basis: usize, got: usize },
    #[error("circuit has no logical ports")]
    NoLogicalPorts,
    #[error("logical mode {port} is not an external mode of the circuit")]
    MissingMode { port: String },
    #[error("polarization bit required for a polarization-resolved circuit")]
    MissingPolarization,
    #[error("polarization-blind circuit cannot encode a polarization bit")]
    UnexpectedPolarization,
    #[error("{0:.3e} of the probability lies outside the logical modes")]
    OutsideLogicalModes(f64),
    #[error("bit value {0} is not 0 or 1")]
    NotABit(u8),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonState {
    basis: Vec<DirectedMode>,
    amplitudes: CVector,
}

impl SinglePhotonState {
    pub fn new(basis: Vec<DirectedMode>, amplitudes: CVector) -> Result<Self, StateError> {
        if basis.len() != amplitudes.len() {
            return Err(StateError::DimensionMismatch { basis: basis.len(), got: amplitudes.len() });
        }
        let n = norm_sqr(&amplitudes);
        if (n - 1.0).abs() > TOL {
            return Err(StateError::NotNormalized(n));
        }
        Ok(SinglePhotonState { basis, amplitudes })
    }

    pub(crate) fn from_parts_unchecked(basis: Vec<DirectedMode>, amplitudes: CVector) -> Self {
        SinglePhotonState { basis, amplitudes }
    }

    pub fn basis(&self) -> &[DirectedMode] {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    basis: Vec<DirectedMode>,
    m: CMatrix,
}

impl TwoPhotonState {
    pub fn new(basis: Vec<DirectedMode>, m: CMatrix) -> Result<Self, StateError> {
        if !m.is_square() || m.nrows() != basis.len() {
            return Err(StateError::DimensionMismatch { basis: basis.len(), got: m.nrows() });
        }
        let asym = (&m - m.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > TOL {
            return Err(StateError::NotSymmetric(asym));
        }
        let n = two_photon_norm(&m);
        if (n - 1.0).abs() > TOL {
            return Err(StateError::NotNormalized(n));
        }
        Ok(TwoPhotonState { basis, m })
    }

    /// Normalized state of one photon in `psi` and one in `phi`.
    pub fn product(basis: Vec<DirectedMode>, psi: &CVector, phi: &CVector) -> Result<Self, StateError> {
        if psi.len() != basis.len() || phi.len() != basis.len() {
            return Err(StateError::DimensionMismatch { basis: basis.len(), got: psi.len().max(phi.len()) });
        }
        let m = symmetrized_product(psi, phi);
        let n = two_photon_norm(&m);
        if n < TOL {
            return Err(StateError::NotNormalized(n));
        }
        TwoPhotonState::new(basis, m.scale(1.0 / n.sqrt()))
    }

    pub fn basis(&self) -> &[DirectedMode] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn norm(&self) -> f64 {
        two_photon_norm(&self.m)
    }

    /// Probability of one photon in mode `i` and one in mode `j`
    /// (both in `i` when `i == j`).
    pub fn occupation_probability(&self, i: usize, j: usize) -> f64 {
        if i == j {
            2.0 * self.m[(i, i)].norm_sqr()
        } else {
            4.0 * self.m[(i, j)].norm_sqr()
        }
    }
}

/// `(psi phi^T + phi psi^T) / 2`.
pub fn symmetrized_product(psi: &CVector, phi: &CVector) -> CMatrix {
    (psi * phi.transpose() + phi * psi.transpose()).scale(0.5)
}

pub fn two_photon_norm(m: &CMatrix) -> f64 {
    2.0 * m.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `M -> U M U^T`.
pub fn evolve_two_photon(circuit: &CompiledCircuit, state: &TwoPhotonState) -> Result<TwoPhotonState, StateError> {
    let u = &circuit.total_unitary;
    if state.m.nrows() != u.ncols() {
        return Err(StateError::DimensionMismatch { basis: u.ncols(), got: state.m.nrows() });
    }
    let m = u * &state.m * u.transpose();
    Ok(TwoPhotonState { basis: circuit.output_basis(), m })
}

/// Amplitudes over the logical basis: `(P, S, D)` when polarized, `(S, D)`
/// otherwise, ordered by [`LogicalBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalState {
    pub polarized: bool,
    pub amplitudes: CVector,
}

impl LogicalState {
    pub fn basis_state(polarized: bool, index: usize) -> Self {
        let mut v = CVector::zeros(LogicalBasis::dim(polarized));
        v[index] = c(1.0, 0.0);
        LogicalState { polarized, amplitudes: v }
    }

    pub fn labels(&self) -> Vec<String> {
        LogicalBasis::labels(self.polarized)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Isometry from the logical basis into a set of physical modes: column
/// `k` is the physical state of logical basis state `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalFrame {
    pub polarized: bool,
    pub iso: CMatrix,
}

impl LogicalFrame {
    pub fn dim(&self) -> usize {
        self.iso.ncols()
    }

    pub fn encode(&self, logical: &CVector) -> CVector {
        &self.iso * logical
    }

    /// Projects onto the logical modes, failing when more than `tol` of the
    /// probability lies elsewhere.
    pub fn decode(&self, phys: &CVector, tol: f64) -> Result<CVector, StateError> {
        let l = self.iso.adjoint() * phys;
        let outside = (norm_sqr(phys) - norm_sqr(&l)).max(0.0);
        if outside > tol {
            return Err(StateError::OutsideLogicalModes(outside));
        }
        Ok(l)
    }

    /// `M_L = E^dag M conj(E)` for a two-photon amplitude matrix.
    pub fn decode_pair(&self, m: &CMatrix, tol: f64) -> Result<CMatrix, StateError> {
        let ml = self.iso.adjoint() * m * self.iso.conjugate();
        let outside = (two_photon_norm(m) - two_photon_norm(&ml)).max(0.0);
        if outside > tol {
            return Err(StateError::OutsideLogicalModes(outside));
        }
        Ok(ml)
    }
}

/// Frames for the input and output modes of a circuit with logical ports.
pub fn logical_frames(circuit: &CompiledCircuit) -> Result<(LogicalFrame, LogicalFrame), StateError> {
    let ports = circuit.logical_ports().ok_or(StateError::NoLogicalPorts)?;
    let input = build_frame(circuit, ports, true)?;
    let output = build_frame(circuit, ports, false)?;
    Ok((input, output))
}

fn build_frame(circuit: &CompiledCircuit, ports: &LogicalPorts, input: bool) -> Result<LogicalFrame, StateError> {
    let polarized = circuit.polarized;
    let dim = LogicalBasis::dim(polarized);
    let n = if input { circuit.inputs.len() } else { circuit.outputs.len() };
    let mut iso = CMatrix::zeros(n, dim);
    let h = FRAC_1_SQRT_2;
    for k in 0..dim {
        let (p, s, d) = LogicalBasis::bits(k);
        let pol = polarized.then(|| Polarization::from_bit(p));
        let pair = if input { ports.input_pair(d) } else { ports.output_pair(d) };
        for (rail, port) in pair.iter().enumerate() {
            let idx = if input { circuit.input_index(port, pol) } else { circuit.output_index(port, pol) };
            let idx = idx.ok_or_else(|| StateError::MissingMode { port: port.to_string() })?;
            let sign = if rail == 1 && s == 1 { -h } else { h };
            iso[(idx, k)] += c(sign, 0.0);
        }
    }
    Ok(LogicalFrame { polarized, iso })
}

fn check_bit(b: u8) -> Result<u8, StateError> {
    if b <= 1 {
        Ok(b)
    } else {
        Err(StateError::NotABit(b))
    }
}

fn logical_position(polarized: bool, p: Option<u8>, s: u8, d: u8) -> Result<usize, StateError> {
    let (s, d) = (check_bit(s)?, check_bit(d)?);
    let p = match (polarized, p) {
        (true, Some(p)) => check_bit(p)?,
        (true, None) => return Err(StateError::MissingPolarization),
        (false, None) => 0,
        (false, Some(_)) => return Err(StateError::UnexpectedPolarization),
    };
    Ok(4 * p as usize + 2 * s as usize + d as usize)
}

/// Physical input state for logical bits `(p, s, d)`: the dual-rail state
/// `(a + (-1)^s b)/sqrt2` on the input pair for direction `d`.
pub fn from_logical(p: Option<u8>, s: u8, d: u8, circuit: &CompiledCircuit) -> Result<SinglePhotonState, StateError> {
    let (frame, _) = logical_frames(circuit)?;
    let k = logical_position(circuit.polarized, p, s, d)?;
    let v = frame.iso.column(k).into_owned();
    SinglePhotonState::new(circuit.input_basis(), v)
}

/// Decodes a state over the circuit's output modes.
pub fn to_logical(state: &SinglePhotonState, circuit: &CompiledCircuit) -> Result<LogicalState, StateError> {
    let (_, frame) = logical_frames(circuit)?;
    if state.amplitudes.len() != frame.iso.nrows() {
        return Err(StateError::DimensionMismatch { basis: frame.iso.nrows(), got: state.amplitudes.len() });
    }
    let l = frame.decode(&state.amplitudes, TOL)?;
    Ok(LogicalState { polarized: frame.polarized, amplitudes: l })
}

/// Decodes a state over the circuit's input modes.
pub fn to_logical_input(state: &SinglePhotonState, circuit: &CompiledCircuit) -> Result<LogicalState, StateError> {
    let (frame, _) = logical_frames(circuit)?;
    if state.amplitudes.len() != frame.iso.nrows() {
        return Err(StateError::DimensionMismatch { basis: frame.iso.nrows(), got: state.amplitudes.len() });
    }
    let l = frame.decode(&state.amplitudes, TOL)?;
    Ok(LogicalState { polarized: frame.polarized, amplitudes: l })
}

/// Two-photon input state with one photon in logical state `(s1, d1)` and
/// the other in `(s2, d2)` (polarization-blind circuits), or with explicit
/// polarization bits for resolved circuits.
pub fn two_photon_from_logical(
    circuit: &CompiledCircuit,
    first: (Option<u8>, u8, u8),
    second: (Option<u8>, u8, u8),
) -> Result<TwoPhotonState, StateError> {
    let (frame, _) = logical_frames(circuit)?;
    let k1 = logical_position(circuit.polarized, first.0, first.1, first.2)?;
    let k2 = logical_position(circuit.polarized, second.0, second.1, second.2)?;
    let psi = frame.iso.column(k1).into_owned();
    let phi = frame.iso.column(k2).into_owned();
    TwoPhotonState::product(circuit.input_basis(), &psi, &phi)
}

/// One nonzero component of a two-photon state in the logical product
/// basis, with the distributed totals it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComponent {
    pub first: usize,
    pub second: usize,
    pub probability: f64,
    pub s_total: u8,
    pub d_total: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TotalBits {
    Definite { s_total: u8, d_total: u8 },
    Indeterminate(Vec<PairComponent>),
}

/// Logical pair components of a two-photon amplitude matrix already
/// expressed in the logical basis (`first <= second`).
pub fn pair_components(ml: &CMatrix, tol: f64) -> Vec<PairComponent> {
    let n = ml.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let prob = if i == j { 2.0 * ml[(i, i)].norm_sqr() } else { 4.0 * ml[(i, j)].norm_sqr() };
            if prob <= tol {
                continue;
            }
            let (_, s1, d1) = LogicalBasis::bits(i);
            let (_, s2, d2) = LogicalBasis::bits(j);
            out.push(PairComponent {
                first: i,
                second: j,
                probability: prob,
                s_total: mod2_total(&[s1, s2]).expect("bits"),
                d_total: mod2_total(&[d1, d2]).expect("bits"),
            });
        }
    }
    out
}

fn totals_from_components(comps: Vec<PairComponent>) -> TotalBits {
    match comps.first() {
        Some(first) if comps.iter().all(|c| c.s_total == first.s_total && c.d_total == first.d_total) => {
            TotalBits::Definite { s_total: first.s_total, d_total: first.d_total }
        }
        _ => TotalBits::Indeterminate(comps),
    }
}

/// `(S_total, D_total)` of an output two-photon state, or the component
/// breakdown when the components disagree.
pub fn total_logical_bits(state: &TwoPhotonState, circuit: &CompiledCircuit) -> Result<TotalBits, StateError> {
    let (_, frame) = logical_frames(circuit)?;
    let ml = frame.decode_pair(&state.m, TOL)?;
    Ok(totals_from_components(pair_components(&ml, TOL)))
}

/// Same as [`total_logical_bits`] for a state over the circuit's inputs.
pub fn total_logical_bits_input(state: &TwoPhotonState, circuit: &CompiledCircuit) -> Result<TotalBits, StateError> {
    let (frame, _) = logical_frames(circuit)?;
    let ml = frame.decode_pair(&state.m, TOL)?;
    Ok(totals_from_components(pair_components(&ml, TOL)))
}

/// Phase of the largest amplitude of a vector.
pub fn dominant_phase(v: &CVector) -> C64 {
    let best = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(c(1.0, 0.0));
    if best.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        best / best.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{LogicalPorts, PortGraph, PortRef};
    use crate::components::grover_four_port;
    use crate::linalg::max_abs_diff;

    fn pr(s: &str) -> PortRef {
        PortRef::parse(s).unwrap()
    }

    fn grover() -> CompiledCircuit {
        let mut g = PortGraph::new("g");
        g.add_element("g", grover_four_port()).unwrap();
        g.set_logical(LogicalPorts::two_sided([pr("g.a"), pr("g.b")], [pr("g.c"), pr("g.d")])).unwrap();
        g.compile().unwrap()
    }

    fn identity() -> CompiledCircuit {
        let mut g = PortGraph::new("id");
        g.add_element("p", crate::components::phase_shifter(0.0, crate::modespace::RailLabel::B)).unwrap();
        g.set_logical(LogicalPorts::two_sided([pr("p.a"), pr("p.b")], [pr("p.c"), pr("p.d")])).unwrap();
        g.compile().unwrap()
    }

    #[test]
    fn from_logical_examples() {
        let g = grover();
        let h = FRAC_1_SQRT_2;
        let s = from_logical(None, 0, 0, &g).unwrap();
        let a = s.amplitudes();
        assert!((a[0] - c(h, 0.0)).norm() < 1e-15 && (a[1] - c(h, 0.0)).norm() < 1e-15);
        let s = from_logical(None, 1, 1, &g).unwrap();
        let a = s.amplitudes();
        assert!((a[2] - c(h, 0.0)).norm() < 1e-15 && (a[3] - c(-h, 0.0)).norm() < 1e-15);
        assert_eq!(from_logical(Some(0), 0, 0, &g).unwrap_err(), StateError::UnexpectedPolarization);
        assert_eq!(from_logical(None, 2, 0, &g).unwrap_err(), StateError::NotABit(2));
    }

    #[test]
    fn encode_decode_round_trip() {
        let g = grover();
        for s in 0..2 {
            for d in 0..2 {
                let st = from_logical(None, s, d, &g).unwrap();
                let l = to_logical_input(&st, &g).unwrap();
                let k = 2 * s as usize + d as usize;
                assert!((l.amplitudes[k] - c(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_grover_on_s_and_a() {
        let g = grover();
        let out = g.apply(&from_logical(None, 0, 0, &g).unwrap()).unwrap();
        let l = to_logical(&out, &g).unwrap();
        assert!((l.amplitudes[0] - c(1.0, 0.0)).norm() < 1e-12);
        let out = g.apply(&from_logical(None, 1, 0, &g).unwrap()).unwrap();
        let l = to_logical(&out, &g).unwrap();
        assert!((l.amplitudes[3] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn equal_superposition_probabilities() {
        let l = LogicalState { polarized: true, amplitudes: CVector::from_element(8, c(8f64.sqrt().recip(), 0.0)) };
        assert!(l.probabilities().iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn two_photon_identity_keeps_m() {
        let id = identity();
        let st = two_photon_from_logical(&id, (None, 0, 0), (None, 1, 0)).unwrap();
        let out = evolve_two_photon(&id, &st).unwrap();
        assert!(max_abs_diff(out.matrix(), st.matrix()) < 1e-15);
    }

    #[test]
    fn two_photon_grover_examples() {
        let g = grover();
        // S_R A_R -> S_R A_L: totals (1, 0) -> (1, 1).
        let st = two_photon_from_logical(&g, (None, 0, 0), (None, 1, 0)).unwrap();
        assert_eq!(total_logical_bits_input(&st, &g).unwrap(), TotalBits::Definite { s_total: 1, d_total: 0 });
        let out = evolve_two_photon(&g, &st).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        assert_eq!(total_logical_bits(&out, &g).unwrap(), TotalBits::Definite { s_total: 1, d_total: 1 });
        // S_R S_R stays.
        let st = two_photon_from_logical(&g, (None, 0, 0), (None, 0, 0)).unwrap();
        let out = evolve_two_photon(&g, &st).unwrap();
        assert_eq!(total_logical_bits(&out, &g).unwrap(), TotalBits::Definite { s_total: 0, d_total: 0 });
    }

    #[test]
    fn totals_examples() {
        let g = grover();
        let st = two_photon_from_logical(&g, (None, 1, 0), (None, 1, 0)).unwrap();
        assert_eq!(total_logical_bits_input(&st, &g).unwrap(), TotalBits::Definite { s_total: 0, d_total: 0 });
        let st = two_photon_from_logical(&g, (None, 0, 0), (None, 1, 0)).unwrap();
        assert_eq!(total_logical_bits_input(&st, &g).unwrap(), TotalBits::Definite { s_total: 1, d_total: 0 });
        // (|S,S> + |S,A>)/sqrt2 mixes S_total.
        let ss = two_photon_from_logical(&g, (None, 0, 0), (None, 0, 0)).unwrap();
        let sa = two_photon_from_logical(&g, (None, 0, 0), (None, 1, 0)).unwrap();
        let m = (ss.matrix() + sa.matrix()).scale(FRAC_1_SQRT_2);
        let mixed = TwoPhotonState::new(g.input_basis(), m).unwrap();
        assert!(matches!(total_logical_bits_input(&mixed, &g).unwrap(), TotalBits::Indeterminate(v) if v.len() == 2));
    }

    #[test]
    fn two_photon_rejects_bad_matrices() {
        let basis: Vec<DirectedMode> = grover().input_basis();
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(TwoPhotonState::new(basis.clone(), m), Err(StateError::NotSymmetric(_))));
        let m = CMatrix::identity(4, 4);
        assert!(matches!(TwoPhotonState::new(basis, m), Err(StateError::NotNormalized(_))));
    }
}
