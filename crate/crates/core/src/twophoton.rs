//! Two-photon behaviour: the distributed CNOT, symmetry separation at a
//! beam splitter and the comparator reading of the Grover element.
//!
//! There is deliberately no way to build a physical state from
//! `(S_total, D_total)` alone: many two-photon states share the same totals.

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{CompiledCircuit, PortGraph, PortRef};
use crate::components::{beam_splitter, DotSide};
use crate::gates::{build_cnot_sd, build_swap_sd, GateError, TruthRow, TruthTable};
use crate::linalg::{CMatrix, CVector, C64, FRAC_1_SQRT_2, TOL};
use crate::photon_state::{
    evolve_two_photon, logical_frames, total_logical_bits, total_logical_bits_input, two_photon_from_logical, StateError,
    TotalBits, TwoPhotonState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoPhotonError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error("product {input} has no definite (S_total, D_total) {stage}")]
    Indeterminate { input: String, stage: &'static str },
    #[error("input totals {input:?} map to both {first:?} and {second:?}")]
    Inconsistent { input: (u8, u8), first: (u8, u8), second: (u8, u8) },
}

/// Label such as `S_R` for a single photon with bits `(s, d)`.
pub fn photon_label(s: u8, d: u8) -> String {
    format!("{}_{}", if s == 0 { 'S' } else { 'A' }, if d == 0 { 'R' } else { 'L' })
}

/// One two-photon product evolved through a circuit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductRow {
    pub first: String,
    pub second: String,
    pub totals_in: (u8, u8),
    pub totals_out: (u8, u8),
    /// Phase `[re, im]` of the dominant output pair amplitude relative to
    /// the input one.
    pub phase: [f64; 2],
}

fn definite(t: TotalBits, input: &str, stage: &'static str) -> Result<(u8, u8), TwoPhotonError> {
    match t {
        TotalBits::Definite { s_total, d_total } => Ok((s_total, d_total)),
        TotalBits::Indeterminate(_) => Err(TwoPhotonError::Indeterminate { input: input.to_string(), stage }),
    }
}

fn dominant(m: &CMatrix) -> C64 {
    m.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0))
}

/// Evolves every product of single-photon logical basis states
/// `{S, A} x {R, L}` (16 ordered pairs) through a two-qubit circuit.
pub fn product_rows(circuit: &CompiledCircuit) -> Result<Vec<ProductRow>, TwoPhotonError> {
    let (fin, fout) = logical_frames(circuit)?;
    let mut pairs = Vec::with_capacity(16);
    for k1 in 0..4u8 {
        for k2 in 0..4u8 {
            pairs.push(((k1 >> 1, k1 & 1), (k2 >> 1, k2 & 1)));
        }
    }
    let rows = crate::par::map(&pairs, |&((s1, d1), (s2, d2))| -> Result<ProductRow, TwoPhotonError> {
        let (first, second) = (photon_label(s1, d1), photon_label(s2, d2));
        let name = format!("{first}{second}");
        let input = two_photon_from_logical(circuit, (None, s1, d1), (None, s2, d2))?;
        let output = evolve_two_photon(circuit, &input)?;
        let totals_in = definite(total_logical_bits_input(&input, circuit)?, &name, "at the input")?;
        let totals_out = definite(total_logical_bits(&output, circuit)?, &name, "at the output")?;
        let a_in = dominant(&fin.decode_pair(input.matrix(), TOL)?);
        let a_out = dominant(&fout.decode_pair(output.matrix(), TOL)?);
        let z = a_out / a_in;
        let z = z / z.norm();
        Ok(ProductRow { first, second, totals_in, totals_out, phase: [z.re, z.im] })
    });
    rows.into_iter().collect()
}

/// Collapses product rows onto a table over `(S_total, D_total)`, checking
/// that equal input totals always give equal output totals.
pub fn collapse(rows: &[ProductRow]) -> Result<TruthTable, TwoPhotonError> {
    type Entry = ((u8, u8), [f64; 2]);
    let mut table: [Option<Entry>; 4] = [None; 4];
    for r in rows {
        let k = (2 * r.totals_in.0 + r.totals_in.1) as usize;
        match table[k] {
            None => table[k] = Some((r.totals_out, r.phase)),
            Some((out, _)) if out == r.totals_out => {}
            Some((out, _)) => {
                return Err(TwoPhotonError::Inconsistent { input: r.totals_in, first: out, second: r.totals_out })
            }
        }
    }
    let rows = table
        .iter()
        .enumerate()
        .filter_map(|(k, e)| {
            e.map(|((s, d), phase)| TruthRow { input: vec![(k >> 1) as u8, (k & 1) as u8], output: vec![s, d], phase })
        })
        .collect();
    Ok(TruthTable { qubits: vec!["S_total".into(), "D_total".into()], rows })
}

/// The two-photon CNOT table of the Grover element, with all 16 product
/// rows behind it.
pub fn grover_two_photon_table() -> Result<(TruthTable, Vec<ProductRow>), TwoPhotonError> {
    let rows = product_rows(&build_cnot_sd())?;
    Ok((collapse(&rows)?, rows))
}

/// Checks that the SWAP circuit exchanges `S_total` and `D_total` for every
/// product input. Returns the rows that fail (empty on success).
pub fn two_photon_swap_check() -> Result<Vec<ProductRow>, TwoPhotonError> {
    let rows = product_rows(&build_swap_sd())?;
    Ok(rows.into_iter().filter(|r| r.totals_out != (r.totals_in.1, r.totals_in.0)).collect())
}

/// Detection statistics behind one beam splitter with outputs `e`, `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomOutcome {
    pub p_coincidence: f64,
    pub p_bunched_e: f64,
    pub p_bunched_f: f64,
}

impl HomOutcome {
    pub fn total(&self) -> f64 {
        self.p_coincidence + self.p_bunched_e + self.p_bunched_f
    }
}

fn splitter() -> CompiledCircuit {
    let mut g = PortGraph::new("splitter");
    g.add_element("bs", beam_splitter(DotSide::First)).expect("fresh graph");
    for p in ["a", "b"] {
        g.add_input(PortRef::new("bs", p)).expect("fresh port");
    }
    for p in ["c", "d"] {
        g.add_output(PortRef::new("bs", p)).expect("fresh port");
    }
    g.compile().expect("single beam splitter compiles")
}

fn dual_rail(s: u8) -> CVector {
    let h = FRAC_1_SQRT_2;
    CVector::from_vec(vec![C64::new(h, 0.0), C64::new(if s == 0 { h } else { -h }, 0.0)])
}

/// Two photons on the same dual-rail pair, with symmetry bits `s1`, `s2`,
/// pass one beam splitter. Output `e` is port `c`, `f` is port `d`.
pub fn hom_separation(s1: u8, s2: u8) -> Result<HomOutcome, TwoPhotonError> {
    let bs = splitter();
    let input = TwoPhotonState::product(bs.input_basis(), &dual_rail(s1), &dual_rail(s2))?;
    let out = evolve_two_photon(&bs, &input)?;
    Ok(HomOutcome {
        p_coincidence: out.occupation_probability(0, 1),
        p_bunched_e: out.occupation_probability(0, 0),
        p_bunched_f: out.occupation_probability(1, 1),
    })
}

/// Three beam splitters: the first separates a dual-rail pair into single
/// rails `e` (symmetric) and `f` (antisymmetric); the other two turn `e`
/// back into a symmetric dual-rail state on outputs `se.a`, `se.b` and `f`
/// into an antisymmetric one on `sf.a`, `sf.b`.
pub fn symmetry_router_graph() -> PortGraph {
    let mut g = PortGraph::new("symmetry_router");
    let pr = PortRef::new;
    let r = (|| -> Result<(), crate::circuit::CircuitError> {
        g.add_element("split", beam_splitter(DotSide::First))?;
        g.add_element("se", beam_splitter(DotSide::First))?;
        g.add_element("sf", beam_splitter(DotSide::First))?;
        g.connect(pr("split", "c"), pr("se", "c"))?;
        g.connect(pr("split", "d"), pr("sf", "d"))?;
        g.add_input(pr("split", "a"))?;
        g.add_input(pr("split", "b"))?;
        for p in [pr("se", "a"), pr("se", "b"), pr("sf", "a"), pr("sf", "b")] {
            g.add_output(p)?;
        }
        // The unused single-rail ports of the output splitters stay dark.
        g.add_external(pr("se", "d"))?;
        g.add_external(pr("sf", "c"))?;
        Ok(())
    })();
    r.expect("router netlist is well formed");
    g
}

pub fn symmetry_router() -> CompiledCircuit {
    symmetry_router_graph().compile().expect("router compiles")
}

/// Probability in the symmetric arm (`se.a`, `se.b`) and the
/// antisymmetric arm (`sf.a`, `sf.b`) for a single photon
/// `alpha |S> + beta |A>` on the router input.
pub fn router_arm_probabilities(alpha: C64, beta: C64) -> Result<(f64, f64), TwoPhotonError> {
    let router = symmetry_router();
    let v = dual_rail(0) * alpha + dual_rail(1) * beta;
    let input_dim = router.inputs.len();
    let mut amps = CVector::zeros(input_dim);
    amps[0] = v[0];
    amps[1] = v[1];
    let out = router.apply_vector(&amps).map_err(StateError::from)?;
    let idx = |inst: &str, port: &str| router.output_index(&PortRef::new(inst, port), None).expect("declared output");
    let p = |i: usize| out[i].norm_sqr();
    Ok((p(idx("se", "a")) + p(idx("se", "b")), p(idx("sf", "a")) + p(idx("sf", "b"))))
}

/// Whether two photons agree on a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Same,
    Different,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComparatorVerdict {
    pub symmetry: Relation,
    pub direction: Relation,
}

/// Reads the totals as comparisons: a zero total means the two photons
/// agree on that property.
pub fn comparator_verdict(totals: &TotalBits) -> ComparatorVerdict {
    let rel = |b: u8| if b == 0 { Relation::Same } else { Relation::Different };
    match totals {
        TotalBits::Definite { s_total, d_total } => {
            ComparatorVerdict { symmetry: rel(*s_total), direction: rel(*d_total) }
        }
        TotalBits::Indeterminate(comps) => {
            let agree = |f: fn(&crate::photon_state::PairComponent) -> u8| {
                let first = comps.first().map(f);
                match first {
                    Some(b) if comps.iter().all(|c| f(c) == b) => rel(b),
                    _ => Relation::Indeterminate,
                }
            };
            ComparatorVerdict { symmetry: agree(|c| c.s_total), direction: agree(|c| c.d_total) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn grover_table_is_cnot() {
        let (table, rows) = grover_two_photon_table().unwrap();
        assert_eq!(rows.len(), 16);
        let want = [("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")];
        let got = table.bit_rows();
        assert_eq!(got.len(), 4);
        for (g, w) in got.iter().zip(want) {
            assert_eq!((g.0.as_str(), g.1.as_str()), w);
        }
    }

    #[test]
    fn grover_rows_from_the_text() {
        let (_, rows) = grover_two_photon_table().unwrap();
        let find = |a: &str, b: &str| rows.iter().find(|r| r.first == a && r.second == b).unwrap().clone();
        let r = find("S_R", "A_R");
        assert_eq!((r.totals_in, r.totals_out), ((1, 0), (1, 1)));
        let r = find("S_R", "S_L");
        assert_eq!((r.totals_in, r.totals_out), ((0, 1), (0, 1)));
        // The first photon in A reproduces the same table.
        let r = find("A_R", "S_R");
        assert_eq!((r.totals_in, r.totals_out), ((1, 0), (1, 1)));
    }

    #[test]
    fn hom_examples() {
        let ss = hom_separation(0, 0).unwrap();
        assert!(ss.p_coincidence.abs() < 1e-12 && (ss.p_bunched_e - 1.0).abs() < 1e-12);
        let sa = hom_separation(0, 1).unwrap();
        assert!((sa.p_coincidence - 1.0).abs() < 1e-12);
        let aa = hom_separation(1, 1).unwrap();
        assert!(aa.p_coincidence.abs() < 1e-12 && (aa.p_bunched_f - 1.0).abs() < 1e-12);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((hom_separation(a, b).unwrap().total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn router_arms() {
        let (s, a) = router_arm_probabilities(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((s - 1.0).abs() < 1e-12 && a.abs() < 1e-12);
        let (s, a) = router_arm_probabilities(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(s.abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
        let h = FRAC_1_SQRT_2;
        let (s, a) = router_arm_probabilities(c(h, 0.0), c(h, 0.0)).unwrap();
        assert!((s - 0.5).abs() < 1e-12 && (a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn router_outputs_are_dual_rail_states() {
        let router = symmetry_router();
        let out = router.apply_vector(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        let idx = |i: &str, p: &str| router.output_index(&PortRef::new(i, p), None).unwrap();
        // Rail a alone is (S + A)/sqrt2: S exits (se.a + se.b)/2, A exits (sf.a - sf.b)/2.
        assert!((out[idx("se", "a")] - out[idx("se", "b")]).norm() < 1e-12);
        assert!((out[idx("sf", "a")] + out[idx("sf", "b")]).norm() < 1e-12);
    }

    #[test]
    fn comparator_examples() {
        let cnot = build_cnot_sd();
        let totals = |a: (u8, u8), b: (u8, u8)| {
            let st = two_photon_from_logical(&cnot, (None, a.0, a.1), (None, b.0, b.1)).unwrap();
            total_logical_bits_input(&st, &cnot).unwrap()
        };
        let v = comparator_verdict(&totals((0, 0), (0, 0)));
        assert_eq!(v, ComparatorVerdict { symmetry: Relation::Same, direction: Relation::Same });
        let v = comparator_verdict(&totals((0, 0), (1, 1)));
        assert_eq!(v, ComparatorVerdict { symmetry: Relation::Different, direction: Relation::Different });
        // A superposition of S_R and A_R with S_R: symmetry total undetermined.
        let (frame, _) = logical_frames(&cnot).unwrap();
        let h = FRAC_1_SQRT_2;
        let psi = frame.encode(&CVector::from_vec(vec![c(h, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, 0.0)]));
        let phi = frame.encode(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        let st = TwoPhotonState::product(cnot.input_basis(), &psi, &phi).unwrap();
        let v = comparator_verdict(&total_logical_bits_input(&st, &cnot).unwrap());
        assert_eq!(v.symmetry, Relation::Indeterminate);
        assert_eq!(v.direction, Relation::Same);
    }

    #[test]
    fn swap_exchanges_totals() {
        assert!(two_photon_swap_check().unwrap().is_empty());
    }
}
