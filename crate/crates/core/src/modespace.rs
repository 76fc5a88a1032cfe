//! Mode labels, basis orderings and the rail/symmetry change of basis.
//!
//! Rail basis: amplitudes on the upper rail `a` and lower rail `b` of a
//! dual-rail pair. Symmetry basis: amplitudes on `S = (a + b)/sqrt2` and
//! `A = (a - b)/sqrt2`. Logical basis: `(P, S, D)` with index `4P + 2S + D`,
//! i.e. `HSR, HSL, HAR, HAL, VSR, VSL, VAR, VAL`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, CMatrix, FRAC_1_SQRT_2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModeError {
    #[error("bit value {0} is not 0 or 1")]
    NotABit(u8),
    #[error("mod-2 total of an empty list is undefined")]
    EmptyTotal,
    #[error("need at least one rail pair")]
    NoRailPairs,
}

/// Propagation direction. Logical bit `D`: right-moving is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    R,
    L,
}

impl Direction {
    pub fn bit(self) -> u8 {
        match self {
            Direction::R => 0,
            Direction::L => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Direction::R
        } else {
            Direction::L
        }
    }

    pub fn flipped(self) -> Self {
        Self::from_bit(self.bit() ^ 1)
    }
}

/// Polarization. Logical bit `P`: horizontal is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn bit(self) -> u8 {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }
}

/// Upper (`A`) or lower (`B`) rail of a dual-rail pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RailLabel {
    A,
    B,
}

impl RailLabel {
    pub fn index(self) -> usize {
        match self {
            RailLabel::A => 0,
            RailLabel::B => 1,
        }
    }
}

/// A single optical mode: where it lives, which way it travels and, for
/// polarization-resolved circuits, its polarization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedMode {
    pub wire_id: String,
    pub rail: Option<RailLabel>,
    pub direction: Direction,
    pub polarization: Option<Polarization>,
}

impl DirectedMode {
    pub fn new(wire_id: impl Into<String>, direction: Direction) -> Self {
        DirectedMode { wire_id: wire_id.into(), rail: None, direction, polarization: None }
    }

    pub fn with_rail(mut self, rail: RailLabel) -> Self {
        self.rail = Some(rail);
        self
    }

    pub fn with_polarization(mut self, pol: Option<Polarization>) -> Self {
        self.polarization = pol;
        self
    }
}

impl fmt::Display for DirectedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.wire_id)?;
        if let Some(r) = self.rail {
            write!(f, "[{}]", if r == RailLabel::A { "a" } else { "b" })?;
        }
        write!(f, ":{:?}", self.direction)?;
        if let Some(p) = self.polarization {
            write!(f, ":{p:?}")?;
        }
        Ok(())
    }
}

/// Fixed ordering of the three-qubit logical basis.
pub struct LogicalBasis;

impl LogicalBasis {
    pub const LABELS: [&'static str; 8] = ["HSR", "HSL", "HAR", "HAL", "VSR", "VSL", "VAR", "VAL"];

    /// Labels for the polarization-blind `(S, D)` space: `SR, SL, AR, AL`.
    pub const LABELS_SD: [&'static str; 4] = ["SR", "SL", "AR", "AL"];

    pub fn dim(polarized: bool) -> usize {
        if polarized {
            8
        } else {
            4
        }
    }

    pub fn labels(polarized: bool) -> Vec<String> {
        if polarized {
            Self::LABELS.iter().map(|s| s.to_string()).collect()
        } else {
            Self::LABELS_SD.iter().map(|s| s.to_string()).collect()
        }
    }

    /// `(p, s, d)` for a basis index; `p` is 0 in the blind space.
    pub fn bits(index: usize) -> (u8, u8, u8) {
        (((index >> 2) & 1) as u8, ((index >> 1) & 1) as u8, (index & 1) as u8)
    }
}

fn check_bit(b: u8) -> Result<u8, ModeError> {
    if b <= 1 {
        Ok(b)
    } else {
        Err(ModeError::NotABit(b))
    }
}

/// `4p + 2s + d`.
pub fn logical_index(p: u8, s: u8, d: u8) -> Result<usize, ModeError> {
    Ok(4 * check_bit(p)? as usize + 2 * check_bit(s)? as usize + check_bit(d)? as usize)
}

/// XOR of all bits; the distributed-qubit value of a multi-photon state.
pub fn mod2_total(bits: &[u8]) -> Result<u8, ModeError> {
    if bits.is_empty() {
        return Err(ModeError::EmptyTotal);
    }
    bits.iter().try_fold(0u8, |acc, &b| Ok(acc ^ check_bit(b)?))
}

/// The 2x2 block `(1/sqrt2) [[1, 1], [1, -1]]` taking `(a, b)` to `(S, A)`.
pub fn rail_to_symmetry_block() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

/// Block-diagonal change of basis for `n_rail_pairs` consecutive `(a, b)`
/// pairs. The matrix is real, symmetric and its own inverse.
pub fn symmetry_change_of_basis(n_rail_pairs: usize) -> Result<CMatrix, ModeError> {
    if n_rail_pairs == 0 {
        return Err(ModeError::NoRailPairs);
    }
    let block = rail_to_symmetry_block();
    let n = 2 * n_rail_pairs;
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n_rail_pairs {
        m.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&block);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_error, CVector};

    fn vec2(a: f64, b: f64) -> CVector {
        CVector::from_vec(vec![c(a, 0.0), c(b, 0.0)])
    }

    #[test]
    fn symmetric_pair_maps_to_s() {
        let t = symmetry_change_of_basis(1).unwrap();
        let h = FRAC_1_SQRT_2;
        let out = &t * vec2(h, h);
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(out[1].norm() < 1e-12);
    }

    #[test]
    fn antisymmetric_pair_maps_to_a() {
        let t = symmetry_change_of_basis(1).unwrap();
        let h = FRAC_1_SQRT_2;
        let out = &t * vec2(h, -h);
        assert!(out[0].norm() < 1e-12);
        assert!((out[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn change_of_basis_is_self_inverse_and_unitary() {
        for n in 1..=8 {
            let t = symmetry_change_of_basis(n).unwrap();
            assert!(unitarity_error(&t) < 1e-12, "n = {n}");
            let tt = &t * &t;
            assert!(max_abs_diff(&tt, &CMatrix::identity(2 * n, 2 * n)) < 1e-12);
        }
        assert_eq!(symmetry_change_of_basis(0), Err(ModeError::NoRailPairs));
    }

    #[test]
    fn logical_index_examples() {
        assert_eq!(logical_index(0, 0, 0), Ok(0));
        assert_eq!(logical_index(1, 0, 1), Ok(5));
        assert_eq!(logical_index(1, 1, 1), Ok(7));
        assert_eq!(logical_index(2, 0, 0), Err(ModeError::NotABit(2)));
        assert_eq!(LogicalBasis::LABELS[5], "VSL");
    }

    #[test]
    fn logical_index_is_a_bijection() {
        let mut seen = [false; 8];
        for p in 0..2 {
            for s in 0..2 {
                for d in 0..2 {
                    let i = logical_index(p, s, d).unwrap();
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(LogicalBasis::bits(i), (p, s, d));
                }
            }
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn mod2_total_examples() {
        assert_eq!(mod2_total(&[0, 0]), Ok(0));
        assert_eq!(mod2_total(&[1, 0]), Ok(1));
        assert_eq!(mod2_total(&[1, 1, 1]), Ok(1));
        assert_eq!(mod2_total(&[]), Err(ModeError::EmptyTotal));
    }
}
