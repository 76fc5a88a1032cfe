//! Optical scattering elements.
//!
//! Every element owns a list of named ports and a unitary matrix mapping the
//! amplitudes flowing *into* its ports to the amplitudes flowing *out of*
//! them; entry `(out, in)`. Each port therefore carries one incoming and one
//! outgoing mode, which is the feed-forward unfolding of a directionally
//! unbiased device. Polarization-resolved elements index their local modes
//! as `2 * port + pol` with `H = 0`, `V = 1`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, cis, kron, unitarity_error, CMatrix, EXACT_TOL, FRAC_1_SQRT_2};
use crate::modespace::RailLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("unknown kind '{0}'")]
    UnknownKind(String),
    #[error("unknown parameter '{param}' for {kind}")]
    UnknownParam { kind: &'static str, param: String },
    #[error("parameter '{param}' of {kind} must be {expected}, got {value}")]
    BadParam { kind: &'static str, param: String, expected: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Grover4,
    BeamSplitter,
    Pbs,
    PhaseShifter,
    Mirror,
    Circulator,
    PolRotator,
}

impl ElementKind {
    pub const ALL: [ElementKind; 7] = [
        ElementKind::Grover4,
        ElementKind::BeamSplitter,
        ElementKind::Pbs,
        ElementKind::PhaseShifter,
        ElementKind::Mirror,
        ElementKind::Circulator,
        ElementKind::PolRotator,
    ];

    /// Keyword used by the netlist language.
    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Grover4 => "grover4",
            ElementKind::BeamSplitter => "bs",
            ElementKind::Pbs => "pbs",
            ElementKind::PhaseShifter => "phase",
            ElementKind::Mirror => "mirror",
            ElementKind::Circulator => "circ",
            ElementKind::PolRotator => "rot",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            ElementKind::Grover4 | ElementKind::Pbs | ElementKind::Circulator => &["side"],
            ElementKind::BeamSplitter => &["dot", "side"],
            ElementKind::PhaseShifter => &["phi", "rail", "side"],
            ElementKind::Mirror => &["phase", "side"],
            ElementKind::PolRotator => &["theta", "side"],
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Geometric side of a port. An external input on the left side travels
/// right (`D = 0`); an external output on the left side travels left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub side: Side,
}

fn ports(spec: &[(&str, Side)]) -> Vec<Port> {
    spec.iter().map(|(n, s)| Port { name: n.to_string(), side: *s }).collect()
}

/// Which output of a beam splitter receives the symmetric input combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DotSide {
    /// Symmetric input exits on port `c`.
    First,
    /// Symmetric input exits on port `d`.
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringElement {
    pub kind: ElementKind,
    pub ports: Vec<Port>,
    pub matrix: CMatrix,
    pub params: BTreeMap<String, f64>,
    pub polarized: bool,
}

impl ScatteringElement {
    fn new(kind: ElementKind, ports: Vec<Port>, matrix: CMatrix, polarized: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), ports.len() * if polarized { 2 } else { 1 });
        ScatteringElement { kind, ports, matrix, params: BTreeMap::new(), polarized }
    }

    fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == name)
    }

    /// Moves every port to `side`. Used for mirrors and circulators placed
    /// on the right-hand edge of a device.
    pub fn with_side(mut self, side: Side) -> Self {
        for p in &mut self.ports {
            p.side = side;
        }
        self.params.insert("side".into(), if side == Side::Left { 0.0 } else { 1.0 });
        self
    }

    /// The scattering matrix in a circuit whose modes are (or are not)
    /// polarization-resolved. Blind elements act as `S (x) I_2`.
    pub fn resolved_matrix(&self, polarized: bool) -> CMatrix {
        match (self.polarized, polarized) {
            (false, true) => kron(&self.matrix, &CMatrix::identity(2, 2)),
            _ => self.matrix.clone(),
        }
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.matrix)
    }

    /// Entry `(out_port, in_port)` of a polarization-blind element.
    pub fn amplitude(&self, out_port: &str, in_port: &str) -> Option<crate::linalg::C64> {
        if self.polarized {
            return None;
        }
        Some(self.matrix[(self.port_index(out_port)?, self.port_index(in_port)?)])
    }

    /// Builds an element from its netlist keyword and parameters.
    pub fn from_keyword(kind: &str, params: &[(String, f64)]) -> Result<Self, ComponentError> {
        let kind = ElementKind::from_keyword(kind).ok_or_else(|| ComponentError::UnknownKind(kind.into()))?;
        let get = |name: &str| params.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v);
        for (name, _) in params {
            if !kind.allowed_params().contains(&name.as_str()) {
                return Err(ComponentError::UnknownParam { kind: kind.keyword(), param: name.clone() });
            }
        }
        let bit = |name: &str| -> Result<Option<bool>, ComponentError> {
            match get(name) {
                None => Ok(None),
                Some(0.0) => Ok(Some(false)),
                Some(1.0) => Ok(Some(true)),
                Some(v) => Err(ComponentError::BadParam {
                    kind: kind.keyword(),
                    param: name.into(),
                    expected: "0 or 1",
                    value: v,
                }),
            }
        };
        let finite = |name: &str, default: f64| -> Result<f64, ComponentError> {
            let v = get(name).unwrap_or(default);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ComponentError::BadParam { kind: kind.keyword(), param: name.into(), expected: "finite", value: v })
            }
        };
        let el = match kind {
            ElementKind::Grover4 => grover_four_port(),
            ElementKind::BeamSplitter => {
                beam_splitter(if bit("dot")?.unwrap_or(false) { DotSide::Second } else { DotSide::First })
            }
            ElementKind::Pbs => polarizing_beam_splitter(),
            ElementKind::PhaseShifter => {
                let rail = if bit("rail")?.unwrap_or(true) { RailLabel::B } else { RailLabel::A };
                phase_shifter(finite("phi", 0.0)?, rail)
            }
            ElementKind::Mirror => mirror(finite("phase", std::f64::consts::PI)?),
            ElementKind::Circulator => circulator(),
            ElementKind::PolRotator => polarization_rotator(finite("theta", 0.0)?),
        };
        Ok(match bit("side")? {
            Some(true) => el.with_side(Side::Right),
            Some(false) => el.with_side(Side::Left),
            None => el,
        })
    }
}

/// Directionally unbiased Grover four-port: `(1/2)(J - 2I)` over ports
/// `a, b` (left) and `c, d` (right). Rail `a` pairs with `c`, `b` with `d`.
pub fn grover_four_port() -> ScatteringElement {
    let m = CMatrix::from_fn(4, 4, |i, j| if i == j { c(-0.5, 0.0) } else { c(0.5, 0.0) });
    ScatteringElement::new(
        ElementKind::Grover4,
        ports(&[("a", Side::Left), ("b", Side::Left), ("c", Side::Right), ("d", Side::Right)]),
        m,
        false,
    )
}

/// 50/50 beam splitter `(1/sqrt2)[[1, 1], [1, -1]]` from inputs `a, b` to
/// outputs `c, d`; reciprocal, so the same matrix applies right to left.
pub fn beam_splitter(dot_side: DotSide) -> ScatteringElement {
    let h = FRAC_1_SQRT_2;
    let (sym, anti) = match dot_side {
        DotSide::First => (2, 3),
        DotSide::Second => (3, 2),
    };
    let mut m = CMatrix::zeros(4, 4);
    // a -> (sym + anti)/sqrt2, b -> (sym - anti)/sqrt2, and the transpose.
    for (i, j, v) in [(sym, 0, h), (anti, 0, h), (sym, 1, h), (anti, 1, -h)] {
        m[(i, j)] = c(v, 0.0);
        m[(j, i)] = c(v, 0.0);
    }
    ScatteringElement::new(
        ElementKind::BeamSplitter,
        ports(&[("a", Side::Left), ("b", Side::Left), ("c", Side::Right), ("d", Side::Right)]),
        m,
        false,
    )
    .param("dot", if dot_side == DotSide::First { 0.0 } else { 1.0 })
}

/// Single-rail polarizing beam splitter. `H` transmits `a <-> b` and
/// `c <-> d`; `V` reflects `a <-> c` and `b <-> d`, with no extra phase.
pub fn polarizing_beam_splitter() -> ScatteringElement {
    let mut m = CMatrix::zeros(8, 8);
    let idx = |port: usize, pol: usize| 2 * port + pol;
    for (x, y) in [(0, 1), (2, 3)] {
        m[(idx(x, 0), idx(y, 0))] = c(1.0, 0.0);
        m[(idx(y, 0), idx(x, 0))] = c(1.0, 0.0);
    }
    for (x, y) in [(0, 2), (1, 3)] {
        m[(idx(x, 1), idx(y, 1))] = c(1.0, 0.0);
        m[(idx(y, 1), idx(x, 1))] = c(1.0, 0.0);
    }
    ScatteringElement::new(
        ElementKind::Pbs,
        ports(&[("a", Side::Left), ("b", Side::Right), ("c", Side::Left), ("d", Side::Right)]),
        m,
        true,
    )
}

/// Dual-rail phase shifter: `e^{i phi}` on `rail`, identity on the other,
/// in either direction. Ports `a, b` (left) pass to `c, d` (right).
pub fn phase_shifter(phi: f64, rail: RailLabel) -> ScatteringElement {
    let mut m = CMatrix::zeros(4, 4);
    let (pa, pb) = match rail {
        RailLabel::A => (cis(phi), c(1.0, 0.0)),
        RailLabel::B => (c(1.0, 0.0), cis(phi)),
    };
    m[(2, 0)] = pa;
    m[(0, 2)] = pa;
    m[(3, 1)] = pb;
    m[(1, 3)] = pb;
    ScatteringElement::new(
        ElementKind::PhaseShifter,
        ports(&[("a", Side::Left), ("b", Side::Left), ("c", Side::Right), ("d", Side::Right)]),
        m,
        false,
    )
    .param("phi", phi)
    .param("rail", rail.index() as f64)
}

/// One-port mirror; reverses direction with phase `e^{i reflection_phase}`.
pub fn mirror(reflection_phase: f64) -> ScatteringElement {
    let m = CMatrix::from_element(1, 1, cis(reflection_phase));
    ScatteringElement::new(ElementKind::Mirror, ports(&[("a", Side::Left)]), m, false)
        .param("phase", reflection_phase)
}

pub const DEFAULT_MIRROR_PHASE: f64 = std::f64::consts::PI;

/// Ideal three-port circulator routing `a -> b -> c -> a`.
pub fn circulator() -> ScatteringElement {
    let mut m = CMatrix::zeros(3, 3);
    m[(1, 0)] = c(1.0, 0.0);
    m[(2, 1)] = c(1.0, 0.0);
    m[(0, 2)] = c(1.0, 0.0);
    ScatteringElement::new(
        ElementKind::Circulator,
        ports(&[("a", Side::Left), ("b", Side::Right), ("c", Side::Left)]),
        m,
        false,
    )
}

/// Single-rail polarization rotator. Light going `a -> b` sees
/// `[[cos, -sin], [sin, cos]]` on `(H, V)`; the reverse pass sees the
/// transpose, as for a reciprocal element.
pub fn polarization_rotator(theta: f64) -> ScatteringElement {
    let (s, co) = theta.sin_cos();
    let mut m = CMatrix::zeros(4, 4);
    let rot = [[co, -s], [s, co]];
    for i in 0..2 {
        for j in 0..2 {
            m[(2 + i, j)] = c(rot[i][j], 0.0);
            m[(i, 2 + j)] = c(rot[j][i], 0.0);
        }
    }
    ScatteringElement::new(ElementKind::PolRotator, ports(&[("a", Side::Left), ("b", Side::Right)]), m, true)
        .param("theta", theta)
}

/// True when the element matrix is unitary at the exact-entry tolerance.
pub fn is_exactly_unitary(el: &ScatteringElement) -> bool {
    el.unitarity_error() < EXACT_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::reference;
    use crate::linalg::{max_abs_diff, CVector, C64};
    use crate::modespace::rail_to_symmetry_block;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn all_elements() -> Vec<ScatteringElement> {
        vec![
            grover_four_port(),
            beam_splitter(DotSide::First),
            beam_splitter(DotSide::Second),
            polarizing_beam_splitter(),
            phase_shifter(0.3, RailLabel::A),
            phase_shifter(-2.0, RailLabel::B),
            mirror(DEFAULT_MIRROR_PHASE),
            circulator(),
            polarization_rotator(0.7),
        ]
    }

    /// Forward 2x2 block `(c, d) <- (a, b)` of a two-sided dual-rail element.
    fn forward(el: &ScatteringElement) -> CMatrix {
        el.matrix.view((2, 0), (2, 2)).into_owned()
    }

    fn to_sym(m: &CMatrix) -> CMatrix {
        let t = rail_to_symmetry_block();
        &t * m * &t
    }

    #[test]
    fn every_element_is_unitary() {
        for el in all_elements() {
            assert!(is_exactly_unitary(&el), "{:?}", el.kind);
        }
    }

    #[test]
    fn grover_unit_input_at_a() {
        let g = grover_four_port();
        let col: Vec<C64> = (0..4).map(|i| g.matrix[(i, 0)]).collect();
        assert_eq!(col, vec![c(-0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
    }

    #[test]
    fn grover_transmits_symmetric_and_reflects_antisymmetric() {
        let g = grover_four_port();
        let h = FRAC_1_SQRT_2;
        let s_in = CVector::from_vec(vec![c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let out = &g.matrix * s_in;
        let want = [0.0, 0.0, h, h];
        for i in 0..4 {
            assert!((out[i] - c(want[i], 0.0)).norm() < 1e-12);
        }
        let a_in = CVector::from_vec(vec![c(h, 0.0), c(-h, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let out = &g.matrix * a_in;
        let want = [-h, h, 0.0, 0.0];
        for i in 0..4 {
            assert!((out[i] - c(want[i], 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn beam_splitter_sends_s_to_c_and_a_to_d() {
        let bs = beam_splitter(DotSide::First);
        let f = forward(&bs);
        let h = FRAC_1_SQRT_2;
        let s = &f * CVector::from_vec(vec![c(h, 0.0), c(h, 0.0)]);
        assert!((s[0] - c(1.0, 0.0)).norm() < 1e-12 && s[1].norm() < 1e-12);
        let a = &f * CVector::from_vec(vec![c(h, 0.0), c(-h, 0.0)]);
        assert!(a[0].norm() < 1e-12 && (a[1] - c(1.0, 0.0)).norm() < 1e-12);
        // Single-rail input on c comes back out of (a, b) as the symmetric state.
        let back = bs.matrix.view((0, 2), (2, 2)).into_owned();
        let e = rail_to_symmetry_block() * (&back * CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert!((e[0] - c(1.0, 0.0)).norm() < 1e-12 && e[1].norm() < 1e-12);

        let other = beam_splitter(DotSide::Second);
        let s2 = forward(&other) * CVector::from_vec(vec![c(h, 0.0), c(h, 0.0)]);
        assert!((s2[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn beam_splitter_twice_is_identity() {
        let f = forward(&beam_splitter(DotSide::First));
        assert!(max_abs_diff(&(&f * &f), &CMatrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn pbs_transmits_h_and_reflects_v() {
        let p = polarizing_beam_splitter();
        // H into a exits b; V into a exits c.
        assert_eq!(p.matrix[(2, 0)], c(1.0, 0.0));
        assert_eq!(p.matrix[(5, 1)], c(1.0, 0.0));
        let h = FRAC_1_SQRT_2;
        let mut v = CVector::zeros(8);
        v[0] = c(h, 0.0);
        v[1] = c(h, 0.0);
        let out = &p.matrix * v;
        assert!((out[2].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((out[5].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((crate::linalg::norm_sqr(&out) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_pi_on_rail_b_is_symmetry_flip() {
        let f = forward(&phase_shifter(PI, RailLabel::B));
        let (eq, _) = crate::gates::equal_up_to_global_phase(&to_sym(&f), &reference::pauli_x(), 1e-12).unwrap();
        assert!(eq);
        let f = forward(&phase_shifter(PI, RailLabel::A));
        assert!(crate::gates::equal_up_to_global_phase(&to_sym(&f), &reference::pauli_x(), 1e-12).unwrap().0);
        assert!(max_abs_diff(&forward(&phase_shifter(0.0, RailLabel::A)), &CMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn phase_half_pi_on_rail_a_applied_to_s() {
        // Oracle: diag(e^{i pi/2}, 1) in the rail basis, conjugated by the
        // change of basis and applied to S = (1, 0).
        let h = FRAC_1_SQRT_2;
        let rail_state = [c(h, 0.0) * c(0.0, 1.0), c(h, 0.0)];
        let s_amp = (rail_state[0] + rail_state[1]) * h;
        let a_amp = (rail_state[0] - rail_state[1]) * h;
        let f = to_sym(&forward(&phase_shifter(FRAC_PI_2, RailLabel::A)));
        assert!((f[(0, 0)] - s_amp).norm() < 1e-12);
        assert!((f[(1, 0)] - a_amp).norm() < 1e-12);
        assert!((s_amp - c(0.5, 0.5)).norm() < 1e-12);
        assert!((a_amp - c(-0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn mirror_examples() {
        assert!((mirror(0.0).matrix[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((mirror(PI).matrix[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
        let round_trip = mirror(PI).matrix[(0, 0)] * mirror(PI).matrix[(0, 0)];
        assert!((round_trip - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn circulator_is_cyclic_permutation() {
        let m = circulator();
        assert_eq!(m.amplitude("b", "a"), Some(c(1.0, 0.0)));
        assert_eq!(m.amplitude("c", "b"), Some(c(1.0, 0.0)));
        assert_eq!(m.amplitude("a", "c"), Some(c(1.0, 0.0)));
        assert_eq!(m.amplitude("a", "a"), Some(c(0.0, 0.0)));
    }

    #[test]
    fn rotator_examples() {
        let r0 = polarization_rotator(0.0);
        assert_eq!(r0.matrix.view((2, 0), (2, 2)).into_owned(), CMatrix::identity(2, 2));
        let r = polarization_rotator(FRAC_PI_2);
        assert!((r.matrix[(3, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let r = polarization_rotator(FRAC_PI_4);
        assert!((r.matrix[(2, 0)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((r.matrix[(3, 0)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn blind_elements_lift_as_identity_on_polarization() {
        let g = grover_four_port();
        let lifted = g.resolved_matrix(true);
        assert_eq!(lifted.shape(), (8, 8));
        assert_eq!(lifted[(2, 0)], c(0.5, 0.0));
        assert_eq!(lifted[(3, 0)], c(0.0, 0.0));
    }

    #[test]
    fn keyword_construction() {
        let p = ScatteringElement::from_keyword("phase", &[("phi".into(), PI)]).unwrap();
        assert_eq!(p.params["phi"], PI);
        assert!(matches!(
            ScatteringElement::from_keyword("bogus", &[]),
            Err(ComponentError::UnknownKind(_))
        ));
        assert!(matches!(
            ScatteringElement::from_keyword("grover4", &[("phi".into(), 1.0)]),
            Err(ComponentError::UnknownParam { .. })
        ));
        let m = ScatteringElement::from_keyword("mirror", &[("side".into(), 1.0)]).unwrap();
        assert_eq!(m.ports[0].side, Side::Right);
    }
}
