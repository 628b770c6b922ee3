//! JSON documents for every domain object.
//!
//! ```json
//! {"format_version": "1", "kind": "two_time_state", "dim": 2,
//!  "payload": {"coefficients": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}}
//! ```
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested arrays. Unknown fields
//! are rejected. Invariants of the loaded object are checked on load and failures name the
//! offending field.

use serde_json::{json, Map, Value};
use twotime_core::bipartite::{BipartiteDensity, BipartiteOperator};
use twotime_core::{CMatrix, Complex64, DensityVector, Dim, Ensemble, KrausOperator, Measurement, Outcome, TwoTimeState};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    TwoTimeState,
    Ensemble,
    DensityVector,
    Measurement,
    Observable,
    BipartiteDensity,
    OperatorSet,
    ObserverPolicy,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::TwoTimeState,
        Kind::Ensemble,
        Kind::DensityVector,
        Kind::Measurement,
        Kind::Observable,
        Kind::BipartiteDensity,
        Kind::OperatorSet,
        Kind::ObserverPolicy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::TwoTimeState => "two_time_state",
            Kind::Ensemble => "ensemble",
            Kind::DensityVector => "density_vector",
            Kind::Measurement => "measurement",
            Kind::Observable => "observable",
            Kind::BipartiteDensity => "bipartite_density",
            Kind::OperatorSet => "operator_set",
            Kind::ObserverPolicy => "observer_policy",
        }
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    TwoTimeState(TwoTimeState),
    Ensemble(Ensemble),
    DensityVector(DensityVector),
    Measurement(Measurement),
    /// Any square operator; Hermiticity is checked where the observable is used.
    Observable(KrausOperator),
    BipartiteDensity(BipartiteDensity),
    OperatorSet(Vec<BipartiteOperator>),
    /// `(choice probability, measurement)` pairs.
    ObserverPolicy(Vec<(f64, Measurement)>),
}

impl Document {
    pub fn kind(&self) -> Kind {
        match self {
            Document::TwoTimeState(_) => Kind::TwoTimeState,
            Document::Ensemble(_) => Kind::Ensemble,
            Document::DensityVector(_) => Kind::DensityVector,
            Document::Measurement(_) => Kind::Measurement,
            Document::Observable(_) => Kind::Observable,
            Document::BipartiteDensity(_) => Kind::BipartiteDensity,
            Document::OperatorSet(_) => Kind::OperatorSet,
            Document::ObserverPolicy(_) => Kind::ObserverPolicy,
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            Document::TwoTimeState(x) => x.dim(),
            Document::Ensemble(x) => x.dim(),
            Document::DensityVector(x) => x.dim(),
            Document::Measurement(x) => x.dim(),
            Document::Observable(x) => x.dim(),
            Document::BipartiteDensity(x) => x.dim(),
            Document::OperatorSet(x) => x[0].dim(),
            Document::ObserverPolicy(x) => x[0].1.dim(),
        }
    }
}

fn schema(field: &str, message: impl Into<String>) -> CliError {
    CliError::validation("schema_violation", message).at(field)
}

fn invariant(field: &str, e: twotime_core::Error) -> CliError {
    CliError::from(e).at(field)
}

/// Rejects any key of `obj` not in `allowed`.
fn only_fields(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), CliError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(&join(path, k), format!("unknown field `{k}`"))),
        None => Ok(()),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, CliError> {
    obj.get(key).ok_or_else(|| schema(&join(path, key), "missing field"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn number(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn complex(v: &Value, path: &str) -> Result<Complex64, CliError> {
    let a = array(v, path)?;
    if a.len() != 2 {
        return Err(schema(path, "expected a complex number [re, im]"));
    }
    Ok(Complex64::new(number(&a[0], &format!("{path}[0]"))?, number(&a[1], &format!("{path}[1]"))?))
}

/// A `rows × cols` matrix of `[re, im]` entries.
pub fn matrix(v: &Value, path: &str, rows: usize, cols: usize) -> Result<CMatrix, CliError> {
    let rs = array(v, path)?;
    if rs.len() != rows {
        return Err(schema(path, format!("expected {rows} rows, found {}", rs.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in rs.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let cs = array(row, &rp)?;
        if cs.len() != cols {
            return Err(schema(&rp, format!("expected {cols} columns, found {}", cs.len())));
        }
        for (j, x) in cs.iter().enumerate() {
            data.push(complex(x, &format!("{rp}[{j}]"))?);
        }
    }
    Ok(CMatrix::from_row_major(rows, cols, data).expect("shape checked"))
}

pub fn complex_value(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_value(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| complex_value(m[(i, j)])).collect()))
            .collect(),
    )
}

/// The checked envelope: kind, dimension and payload object.
pub struct Envelope<'a> {
    pub kind: Kind,
    pub dim: usize,
    pub payload: &'a Map<String, Value>,
}

pub fn envelope(v: &Value) -> Result<Envelope<'_>, CliError> {
    let top = object(v, "")?;
    only_fields(top, &["format_version", "kind", "dim", "payload"], "")?;
    let version = field(top, "format_version", "")?;
    match version.as_str() {
        Some(FORMAT_VERSION) => {}
        Some(other) => {
            return Err(CliError::validation(
                "version_mismatch",
                format!("unsupported format_version \"{other}\", expected \"{FORMAT_VERSION}\""),
            )
            .at("format_version"))
        }
        None => return Err(schema("format_version", "expected a string")),
    }
    let kind_name = field(top, "kind", "")?.as_str().ok_or_else(|| schema("kind", "expected a string"))?;
    let kind = Kind::from_name(kind_name).ok_or_else(|| schema("kind", format!("unknown kind `{kind_name}`")))?;
    let dim = field(top, "dim", "")?
        .as_u64()
        .filter(|&d| d >= 1)
        .ok_or_else(|| schema("dim", "expected a positive integer"))? as usize;
    let payload = object(field(top, "payload", "")?, "payload")?;
    Ok(Envelope { kind, dim, payload })
}

pub fn parse_json(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::validation("json_syntax", format!("{e}")).at(&format!("line {}, column {}", e.line(), e.column()))
    })
}

/// Parses and validates a document of any kind.
pub fn parse_document(text: &str) -> Result<Document, CliError> {
    parse_value(&parse_json(text)?)
}

pub fn parse_value(v: &Value) -> Result<Document, CliError> {
    let env = envelope(v)?;
    let (d, p) = (env.dim, env.payload);
    let n = d * d;
    let doc = match env.kind {
        Kind::TwoTimeState => {
            only_fields(p, &["coefficients"], "payload")?;
            let m = matrix(field(p, "coefficients", "payload")?, "payload.coefficients", d, d)?;
            Document::TwoTimeState(TwoTimeState::from_normalized(m).map_err(|e| invariant("payload.coefficients", e))?)
        }
        Kind::Ensemble => {
            only_fields(p, &["members"], "payload")?;
            let ms = array(field(p, "members", "payload")?, "payload.members")?;
            let mut members = Vec::with_capacity(ms.len());
            for (i, m) in ms.iter().enumerate() {
                let path = format!("payload.members[{i}]");
                let o = object(m, &path)?;
                only_fields(o, &["weight", "coefficients"], &path)?;
                let w = number(field(o, "weight", &path)?, &join(&path, "weight"))?;
                let cpath = join(&path, "coefficients");
                let c = matrix(field(o, "coefficients", &path)?, &cpath, d, d)?;
                let psi = TwoTimeState::from_normalized(c).map_err(|e| invariant(&cpath, e))?;
                members.push((w, psi));
            }
            let e = Ensemble::new(members).map_err(|e| match e {
                twotime_core::Error::InvalidWeight { index, .. } => invariant(&format!("payload.members[{index}].weight"), e),
                twotime_core::Error::NotNormalized { .. } => invariant("payload.members[*].weight", e),
                other => invariant("payload.members", other),
            })?;
            Document::Ensemble(e)
        }
        Kind::DensityVector => {
            only_fields(p, &["matrix"], "payload")?;
            let m = matrix(field(p, "matrix", "payload")?, "payload.matrix", n, n)?;
            Document::DensityVector(DensityVector::from_matrix(m).map_err(|e| invariant("payload.matrix", e))?)
        }
        Kind::BipartiteDensity => {
            only_fields(p, &["matrix"], "payload")?;
            let m = matrix(field(p, "matrix", "payload")?, "payload.matrix", n, n)?;
            Document::BipartiteDensity(BipartiteDensity::from_matrix(m).map_err(|e| invariant("payload.matrix", e))?)
        }
        Kind::Measurement => {
            only_fields(p, &["outcomes"], "payload")?;
            Document::Measurement(measurement(p, "payload", d)?)
        }
        Kind::Observable => {
            only_fields(p, &["matrix"], "payload")?;
            let m = matrix(field(p, "matrix", "payload")?, "payload.matrix", d, d)?;
            Document::Observable(KrausOperator::new(m).map_err(|e| invariant("payload.matrix", e))?)
        }
        Kind::OperatorSet => {
            only_fields(p, &["operators"], "payload")?;
            let ops = array(field(p, "operators", "payload")?, "payload.operators")?;
            if ops.is_empty() {
                return Err(schema("payload.operators", "expected at least one operator"));
            }
            let mut out = Vec::with_capacity(ops.len());
            for (i, o) in ops.iter().enumerate() {
                let path = format!("payload.operators[{i}]");
                let m = matrix(o, &path, n, n)?;
                out.push(BipartiteOperator::from_matrix(m).map_err(|e| invariant(&path, e))?);
            }
            Document::OperatorSet(out)
        }
        Kind::ObserverPolicy => {
            only_fields(p, &["choices"], "payload")?;
            let cs = array(field(p, "choices", "payload")?, "payload.choices")?;
            if cs.is_empty() {
                return Err(schema("payload.choices", "expected at least one choice"));
            }
            let mut out = Vec::with_capacity(cs.len());
            let mut total = 0.0;
            for (i, c) in cs.iter().enumerate() {
                let path = format!("payload.choices[{i}]");
                let o = object(c, &path)?;
                only_fields(o, &["probability", "outcomes"], &path)?;
                let q = number(field(o, "probability", &path)?, &join(&path, "probability"))?;
                if !(q > 0.0 && q <= 1.0) {
                    return Err(invariant(
                        &join(&path, "probability"),
                        twotime_core::Error::InvalidWeight { index: i, weight: q },
                    ));
                }
                total += q;
                out.push((q, measurement(o, &path, d)?));
            }
            if (total - 1.0).abs() > twotime_core::vectors::EQ_TOL {
                return Err(invariant(
                    "payload.choices[*].probability",
                    twotime_core::Error::NotNormalized { what: "choice probabilities", value: total },
                ));
            }
            Document::ObserverPolicy(out)
        }
    };
    Ok(doc)
}

fn measurement(p: &Map<String, Value>, path: &str, d: usize) -> Result<Measurement, CliError> {
    let opath = join(path, "outcomes");
    let os = array(field(p, "outcomes", path)?, &opath)?;
    if os.is_empty() {
        return Err(schema(&opath, "expected at least one outcome"));
    }
    let mut outcomes = Vec::with_capacity(os.len());
    for (mu, o) in os.iter().enumerate() {
        let path = format!("{opath}[{mu}]");
        let obj = object(o, &path)?;
        only_fields(obj, &["label", "kraus"], &path)?;
        let label = match obj.get("label") {
            Some(l) => l.as_str().ok_or_else(|| schema(&join(&path, "label"), "expected a string"))?.to_string(),
            None => mu.to_string(),
        };
        let kpath = join(&path, "kraus");
        let ks = array(field(obj, "kraus", &path)?, &kpath)?;
        if ks.is_empty() {
            return Err(schema(&kpath, "expected at least one Kraus operator"));
        }
        let mut kraus = Vec::with_capacity(ks.len());
        for (chi, k) in ks.iter().enumerate() {
            let kp = format!("{kpath}[{chi}]");
            kraus.push(KrausOperator::new(matrix(k, &kp, d, d)?).map_err(|e| invariant(&kp, e))?);
        }
        outcomes.push(Outcome::new(label, kraus));
    }
    Measurement::new(outcomes).map_err(|e| invariant(&opath, e))
}

fn outcomes_value(m: &Measurement) -> Value {
    Value::Array(
        m.outcomes()
            .iter()
            .map(|o| {
                json!({
                    "label": o.label,
                    "kraus": o.kraus.iter().map(|k| matrix_value(k.entries())).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

pub fn to_value(doc: &Document) -> Value {
    let payload = match doc {
        Document::TwoTimeState(psi) => json!({ "coefficients": matrix_value(psi.coeffs()) }),
        Document::Ensemble(e) => json!({
            "members": e
                .members()
                .iter()
                .map(|(w, psi)| json!({ "weight": w, "coefficients": matrix_value(psi.coeffs()) }))
                .collect::<Vec<_>>(),
        }),
        Document::DensityVector(eta) => json!({ "matrix": matrix_value(eta.matrix()) }),
        Document::BipartiteDensity(rho) => json!({ "matrix": matrix_value(rho.matrix()) }),
        Document::Measurement(m) => json!({ "outcomes": outcomes_value(m) }),
        Document::Observable(a) => json!({ "matrix": matrix_value(a.entries()) }),
        Document::OperatorSet(ops) => json!({
            "operators": ops.iter().map(|o| matrix_value(o.matrix())).collect::<Vec<_>>(),
        }),
        Document::ObserverPolicy(cs) => json!({
            "choices": cs
                .iter()
                .map(|(q, m)| json!({ "probability": q, "outcomes": outcomes_value(m) }))
                .collect::<Vec<_>>(),
        }),
    };
    json!({
        "format_version": FORMAT_VERSION,
        "kind": doc.kind().name(),
        "dim": doc.dim().get(),
        "payload": payload,
    })
}

pub fn serialize(doc: &Document) -> String {
    serde_json::to_string_pretty(&to_value(doc)).expect("documents contain only finite numbers")
}

/// Envelope and shape checks only; used to report on matrices that fail validation.
pub fn parse_unchecked_matrix(text: &str, kind: Kind) -> Result<(Dim, CMatrix), CliError> {
    let v = parse_json(text)?;
    let env = envelope(&v)?;
    if env.kind != kind {
        return Err(schema("kind", format!("expected `{}`, found `{}`", kind.name(), env.kind.name())));
    }
    only_fields(env.payload, &["matrix"], "payload")?;
    let n = env.dim * env.dim;
    let m = matrix(field(env.payload, "matrix", "payload")?, "payload.matrix", n, n)?;
    Ok((Dim::new(env.dim).map_err(|e| invariant("dim", e))?, m))
}
