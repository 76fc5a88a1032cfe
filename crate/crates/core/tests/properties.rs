//! Property tests: parser totality, norm preservation, closed-form
//! invariants.

use std::f64::consts::PI;

use proptest::prelude::*;
use symqc::closedform::{self, PhaseQuad};
use symqc::dsl;
use symqc::gates;
use symqc::linalg::{c, max_abs_diff, norm_sqr, unitarity_error, CVector};
use symqc::photon_state::{evolve_two_photon, symmetrized_product, TwoPhotonState};

fn angle() -> impl Strategy<Value = f64> {
    -2.0 * PI..2.0 * PI
}

fn quad() -> impl Strategy<Value = PhaseQuad> {
    (angle(), angle(), angle(), angle()).prop_map(|(a, b, c, d)| PhaseQuad::from([a, b, c, d]))
}

fn amplitudes(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("nonzero", |v| v.iter().any(|(re, im)| re.abs() + im.abs() > 1e-3))
        .prop_map(|v| {
            let raw = CVector::from_iterator(v.len(), v.iter().map(|(re, im)| c(*re, *im)));
            let n = norm_sqr(&raw).sqrt();
            raw.map(|z| z / n)
        })
}

/// Token soup close enough to the grammar to reach deep parser states.
fn near_source() -> impl Strategy<Value = String> {
    let tok = prop::sample::select(vec![
        "circuit", "c", "{", "}", "grover4", "bs", "pbs", "phase", "mirror", "circ", "rot", "g", "p", "(", ")", "=",
        "phi", "pi", "pi/2", "3pi/4", "-1.5", "1e9", ",", ";", ".", "--", "input", "output", "a", "b", "//x\n", "\n",
        "@", "\"",
    ]);
    prop::collection::vec(tok, 0..40).prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parser_is_total_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        match dsl::parse_bytes(&bytes) {
            Ok(_) => {}
            Err(diags) => {
                prop_assert!(!diags.is_empty());
                for d in diags {
                    prop_assert!(d.line >= 1 && d.column >= 1);
                }
            }
        }
    }

    #[test]
    fn parser_is_total_on_token_soup(src in near_source()) {
        let lines = src.split('\n').count();
        if let Err(diags) = dsl::compile_source(&src) {
            prop_assert!(!diags.is_empty());
            for d in diags {
                prop_assert!(d.line >= 1 && d.line <= lines, "{d}");
                prop_assert!(d.column >= 1);
            }
        }
    }

    #[test]
    fn numbers_round_trip(k in -16i32..=16, n in prop::sample::select(vec![1, 2, 3, 4, 6, 8]), x in -1e6f64..1e6) {
        for v in [k as f64 * PI / n as f64, x] {
            let text = dsl::format_number(v);
            prop_assert_eq!(dsl::parse_number(&text).unwrap(), v, "{}", text);
        }
    }

    #[test]
    fn single_photon_norm_is_preserved(v in amplitudes(8)) {
        for circuit in [gates::build_toffoli(), gates::build_fredkin(), gates::build_programmable(0.3, -1.1, 2.0, 0.7)] {
            let n = circuit.inputs.len();
            let mut psi = CVector::zeros(n);
            psi.rows_mut(0, v.len().min(n)).copy_from(&v.rows(0, v.len().min(n)));
            let before = norm_sqr(&psi);
            let after = norm_sqr(&circuit.apply_vector(&psi).unwrap());
            prop_assert!((before - after).abs() < 1e-10);
        }
    }

    #[test]
    fn two_photon_norm_is_preserved(u in amplitudes(8), v in amplitudes(8)) {
        let circuit = gates::build_cnot_sd();
        let psi = u.rows(0, circuit.inputs.len()).into_owned();
        let phi = v.rows(0, circuit.inputs.len()).into_owned();
        prop_assume!(norm_sqr(&psi) > 1e-3 && norm_sqr(&phi) > 1e-3);
        let m = symmetrized_product(&psi, &phi);
        let scale = symqc::photon_state::two_photon_norm(&m).sqrt();
        let state = TwoPhotonState::new(circuit.input_basis(), m.map(|z| z / scale)).unwrap();
        let out = evolve_two_photon(&circuit, &state).unwrap();
        prop_assert!((out.norm() - state.norm()).abs() < 1e-10);
    }

    #[test]
    fn closed_form_is_unitary(q in quad()) {
        let m = closedform::programmable_closed_form(&q);
        prop_assert!(unitarity_error(&m) < 1e-10);
        prop_assert!(unitarity_error(&closedform::printed_total_resolved(&q)) < 1e-10);
    }

    #[test]
    fn closed_form_matches_compiled(q in quad()) {
        prop_assert!(closedform::oracle_deviation(&q).unwrap() < 1e-8);
    }

    #[test]
    fn horizontal_block_depends_on_the_sum_only(q in quad(), shift in angle()) {
        let [a, b, c3, c4] = q.as_array();
        let moved = PhaseQuad::from([a, b, c3 + shift, c4 - shift]);
        let h = |q: &PhaseQuad| {
            let [p1, p2, p3, p4] = q.as_array();
            let m = gates::extract_logical_unitary(&gates::build_programmable(p1, p2, p3, p4)).unwrap();
            m.view((0, 0), (4, 4)).into_owned()
        };
        prop_assert!(max_abs_diff(&h(&q), &h(&moved)) < 1e-10);
        prop_assert!(max_abs_diff(&closedform::horizontal_block(&q), &closedform::horizontal_block(&moved)) < 1e-10);
    }
}
