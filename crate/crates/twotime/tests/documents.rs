use std::path::PathBuf;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use twotime::{parse_document, serialize, to_value, Document, Kind};
use twotime_core::bipartite::BipartiteOperator;
use twotime_core::states::density_from_ensemble;
use twotime_core::{CMatrix, Complex64, Ensemble, KrausOperator, Measurement, Outcome, TwoTimeState};

fn samples() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("samples");
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn samples_round_trip_field_for_field() {
    let mut kinds = Vec::new();
    for (name, text) in samples() {
        if name == "bad_weights.json" {
            continue;
        }
        let doc = parse_document(&text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        let original: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(to_value(&doc), original, "{name}");
        assert_eq!(parse_document(&serialize(&doc)).unwrap(), doc, "{name}");
        kinds.push(doc.kind());
    }
    for k in Kind::ALL {
        assert!(kinds.contains(&k), "no sample of kind {}", k.name());
    }
}

#[test]
fn choice_demo_measurement_document_is_complete() {
    let (_, text) = samples().into_iter().find(|(n, _)| n == "m1.json").unwrap();
    match parse_document(&text).unwrap() {
        Document::Measurement(m) => assert!(m.is_complete()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ensemble_weight_error_names_the_field() {
    let (_, text) = samples().into_iter().find(|(n, _)| n == "bad_weights.json").unwrap();
    let e = parse_document(&text).unwrap_err();
    assert_eq!(e.code, "not_normalized");
    assert_eq!(e.field.as_deref(), Some("payload.members[*].weight"));
}

#[test]
fn field_paths_point_at_the_problem() {
    let cases = [
        (r#"{"format_version": "1", "kind": "two_time_state", "dim": 1, "payload": {"coefficients": [[[1, 0, 3]]]}}"#, "payload.coefficients[0][0]", "schema_violation"),
        (r#"{"format_version": "1", "kind": "two_time_state", "dim": 1, "payload": {"coefficients": [[[2, 0]]]}}"#, "payload.coefficients", "not_normalized"),
        (r#"{"format_version": "1", "kind": "two_time_state", "dim": 1, "payload": {"coeffs": [[[1, 0]]]}}"#, "payload.coeffs", "schema_violation"),
        (r#"{"format_version": "1", "kind": "ensemble", "dim": 1, "payload": {"members": [{"weight": -1, "coefficients": [[[1, 0]]]}]}}"#, "payload.members[0].weight", "invalid_weight"),
        (r#"{"format_version": "1", "kind": "measurement", "dim": 1, "payload": {"outcomes": [{"kraus": [[["x", 0]]]}]}}"#, "payload.outcomes[0].kraus[0][0]", "schema_violation"),
        (r#"{"format_version": "1", "kind": "density_vector", "dim": 1, "payload": {"matrix": [[[0.5, 0]]]}}"#, "payload.matrix", "not_normalized"),
        (r#"{"format_version": "1", "kind": "operator_set", "dim": 1, "payload": {"operators": [[[[-1, 0]]]]}}"#, "payload.operators[0]", "not_positive"),
        (r#"{"format_version": "1", "kind": "state", "dim": 1, "payload": {}}"#, "kind", "schema_violation"),
        (r#"{"format_version": "1", "kind": "observable", "dim": 0, "payload": {}}"#, "dim", "schema_violation"),
        (r#"{"format_version": 1, "kind": "observable", "dim": 1, "payload": {}}"#, "format_version", "schema_violation"),
        (r#"{"format_version": "1", "kind": "observer_policy", "dim": 1, "payload": {"choices": [{"probability": 0.5, "outcomes": [{"kraus": [[[[1, 0]]]]}]}]}}"#, "payload.choices[*].probability", "not_normalized"),
    ];
    for (text, field, code) in cases {
        let e = parse_document(text).unwrap_err();
        assert_eq!((e.field.as_deref(), e.code), (Some(field), code), "{text}");
    }
}

fn random_matrix(r: &mut StdRng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
}

fn random_document(seed: u64) -> Document {
    let mut r = StdRng::seed_from_u64(seed);
    let d = r.random_range(1..=3);
    let state = |r: &mut StdRng| TwoTimeState::new(random_matrix(r, d)).unwrap();
    match r.random_range(0..6) {
        0 => Document::TwoTimeState(state(&mut r)),
        1 | 2 => {
            let k = r.random_range(1..=3);
            let e = Ensemble::normalized((0..k).map(|_| (r.random::<f64>() + 0.1, state(&mut r))).collect()).unwrap();
            if seed.is_multiple_of(2) {
                Document::Ensemble(e)
            } else {
                Document::DensityVector(density_from_ensemble(&e))
            }
        }
        3 => {
            let outcomes = (0..r.random_range(1..=3))
                .map(|mu| Outcome::new(format!("o{mu}"), (0..r.random_range(1..=2)).map(|_| KrausOperator::new(random_matrix(&mut r, d)).unwrap()).collect()))
                .collect();
            Document::Measurement(Measurement::new(outcomes).unwrap())
        }
        4 => Document::Observable(KrausOperator::new(random_matrix(&mut r, d)).unwrap()),
        _ => {
            let g = random_matrix(&mut r, d * d);
            Document::OperatorSet(vec![BipartiteOperator::from_matrix(g.matmul(&g.adjoint())).unwrap()])
        }
    }
}

proptest! {
    #[test]
    fn serialize_parse_is_identity(seed in any::<u64>()) {
        let doc = random_document(seed);
        let text = serialize(&doc);
        let back = parse_document(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize(&back), text);
    }
}
