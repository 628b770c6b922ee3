//! The `twotime` command-line tool.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use twotime_core::bipartite::{
    density_to_bipartite, measurement_images, measurement_partial_trace_defect, operator_sum, povm_to_twotime,
};
use twotime_core::linalg::hermitian_eigen;
use twotime_core::measurements::complete_operator_set;
use twotime_core::probability::{prob_coarse, prob_density, prob_ensemble, prob_pure};
use twotime_core::sim::{ensemble_from_density, simulate_choice_demo, ObserverPolicy, SimConfig, Simulator, StateProportions};
use twotime_core::states::density_from_ensemble;
use twotime_core::tomography::{build_tomography_set, predict_probabilities, reconstruct, reconstruct_noisy};
use twotime_core::weak::{weak_equivalent_pure, weak_value_ensemble, weak_value_pure, weak_value_vector, ObservablePolicy};
use twotime_core::{CMatrix, DensityVector, Dim, Ensemble, Error, KrausOperator, Measurement};

use crate::document::{complex_value, matrix_value, parse_document, parse_json, parse_unchecked_matrix, Document, Kind};
use crate::error::{CliError, EXIT_VALIDATION};
use crate::parallel::{default_threads, run_parallel};

#[derive(Parser, Debug)]
#[command(name = "twotime", version, about = "Statistics, tomography, weak values and simulation of 2-time quantum states")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Outcome probabilities conditioned on successful post-selection.
    Prob(ProbArgs),
    /// Reconstruct a density vector from tomography statistics.
    Tomography(TomographyArgs),
    /// Shot-based simulation of preparation, measurement and post-selection.
    Simulate(SimulateArgs),
    /// Weak value of an observable.
    Weak(WeakArgs),
    /// Positivity or completeness report.
    Check(CheckArgs),
    /// Bipartite images and normalization defects.
    Iso(IsoArgs),
    /// Scripted scenarios.
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["state", "ensemble", "eta"])))]
struct ProbArgs {
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long)]
    eta: Option<PathBuf>,
    #[arg(long)]
    measurement: PathBuf,
    /// Allow coarse-grained outcomes (several Kraus operators per outcome).
    #[arg(long)]
    coarse: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["eta", "probs"])))]
struct TomographyArgs {
    #[arg(long)]
    dim: usize,
    /// Density vector whose exact or simulated statistics are inverted.
    #[arg(long)]
    eta: Option<PathBuf>,
    /// Probability list of length 4d⁴: a JSON array or an object with a `probabilities` array.
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Simulate this many attempts instead of using exact probabilities (with --eta).
    #[arg(long, requires = "eta")]
    shots: Option<u64>,
    #[arg(long, env = "TWOTIME_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Least-squares inversion with positivity repair, for noisy frequencies.
    #[arg(long)]
    least_squares: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("observer").required(true).args(["measurement", "policy"])))]
struct SimulateArgs {
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long)]
    measurement: Option<PathBuf>,
    /// Random choice between measurements (an `observer_policy` document).
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    shots: u64,
    #[arg(long, env = "TWOTIME_SEED")]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["state", "eta"])))]
struct WeakArgs {
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    eta: Option<PathBuf>,
    #[arg(long)]
    observable: PathBuf,
    /// Accept non-Hermitian observables.
    #[arg(long)]
    any_operator: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["eta", "measurement"])))]
struct CheckArgs {
    #[arg(long)]
    eta: Option<PathBuf>,
    #[arg(long)]
    measurement: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["eta", "measurement", "operators"])))]
struct IsoArgs {
    #[arg(long)]
    eta: Option<PathBuf>,
    #[arg(long)]
    measurement: Option<PathBuf>,
    /// Positive bipartite operators (an `operator_set` document) to complete or pull back.
    #[arg(long)]
    operators: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Demo {
    /// Two-state ensemble under a random choice of two measurements.
    MeasurementChoice {
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, env = "TWOTIME_SEED")]
        seed: u64,
    },
}

/// A command's result in both output formats.
struct Report {
    json: Value,
    csv: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    x.to_string()
}

fn matrix_rows(m: &CMatrix, prefix: &[String]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let mut r = prefix.to_vec();
            r.extend([i.to_string(), j.to_string(), num(m[(i, j)].re), num(m[(i, j)].im)]);
            rows.push(r);
        }
    }
    rows
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("io_error", format!("cannot read {}: {e}", path.display())).at(&path.display().to_string()))
}

fn in_file(path: &Path) -> impl Fn(CliError) -> CliError + '_ {
    move |mut e| {
        e.field = Some(match e.field {
            Some(f) => format!("{}: {f}", path.display()),
            None => path.display().to_string(),
        });
        e
    }
}

fn load(path: &Path, expected: Kind) -> Result<Document, CliError> {
    let doc = parse_document(&read(path)?).map_err(in_file(path))?;
    if doc.kind() != expected {
        return Err(in_file(path)(
            CliError::validation("wrong_kind", format!("expected a `{}` document, found `{}`", expected.name(), doc.kind().name()))
                .at("kind"),
        ));
    }
    Ok(doc)
}

fn load_state(path: &Path) -> Result<twotime_core::TwoTimeState, CliError> {
    match load(path, Kind::TwoTimeState)? {
        Document::TwoTimeState(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn load_ensemble(path: &Path) -> Result<Ensemble, CliError> {
    match load(path, Kind::Ensemble)? {
        Document::Ensemble(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn load_eta(path: &Path) -> Result<DensityVector, CliError> {
    match load(path, Kind::DensityVector)? {
        Document::DensityVector(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn load_measurement(path: &Path) -> Result<Measurement, CliError> {
    match load(path, Kind::Measurement)? {
        Document::Measurement(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn load_observable(path: &Path) -> Result<KrausOperator, CliError> {
    match load(path, Kind::Observable)? {
        Document::Observable(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn load_policy(path: &Path) -> Result<Vec<(f64, Measurement)>, CliError> {
    match load(path, Kind::ObserverPolicy)? {
        Document::ObserverPolicy(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn load_operators(path: &Path) -> Result<Vec<twotime_core::bipartite::BipartiteOperator>, CliError> {
    match load(path, Kind::OperatorSet)? {
        Document::OperatorSet(x) => Ok(x),
        _ => unreachable!(),
    }
}

fn probability_report(p: Vec<f64>) -> Report {
    let mut csv = vec![header(&["outcome_index", "probability"])];
    csv.extend(p.iter().enumerate().map(|(i, x)| vec![i.to_string(), num(*x)]));
    Report {
        json: json!({ "probabilities": p }),
        csv,
    }
}

fn prob(a: &ProbArgs) -> Result<Report, CliError> {
    let m = load_measurement(&a.measurement)?;
    let p = if let Some(path) = &a.state {
        let psi = load_state(path)?;
        if a.coarse {
            prob_coarse(&DensityVector::pure(&psi), &m)?
        } else {
            prob_pure(&psi, &m)?
        }
    } else if let Some(path) = &a.ensemble {
        let e = load_ensemble(path)?;
        if a.coarse {
            prob_coarse(&density_from_ensemble(&e), &m)?
        } else {
            prob_ensemble(&e, &m)?
        }
    } else {
        let eta = load_eta(a.eta.as_deref().expect("group requires a source"))?;
        if a.coarse {
            prob_coarse(&eta, &m)?
        } else {
            prob_density(&eta, &m)?
        }
    };
    Ok(probability_report(p))
}

fn read_probabilities(path: &Path) -> Result<Vec<f64>, CliError> {
    let v = parse_json(&read(path)?).map_err(in_file(path))?;
    let list = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("probabilities")
            .and_then(Value::as_array)
            .ok_or_else(|| in_file(path)(CliError::validation("schema_violation", "expected a `probabilities` array").at("probabilities")))?,
        _ => return Err(in_file(path)(CliError::validation("schema_violation", "expected an array of probabilities"))),
    };
    list.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .ok_or_else(|| in_file(path)(CliError::validation("schema_violation", "expected a number").at(&format!("probabilities[{i}]"))))
        })
        .collect()
}

fn tomography(a: &TomographyArgs) -> Result<Report, CliError> {
    let dim = Dim::new(a.dim)?;
    let mut json = json!({ "dim": a.dim });
    let (method, eta_hat, truth) = if let Some(path) = &a.eta {
        let eta = load_eta(path)?;
        if eta.dim() != dim {
            return Err(Error::DimensionMismatch { expected: a.dim, found: eta.dim().get() }.into());
        }
        let ts = build_tomography_set(dim);
        match a.shots {
            None => {
                let p = predict_probabilities(&eta, &ts)?;
                let hat = if a.least_squares { reconstruct_noisy(&p, dim)? } else { reconstruct(&p, dim)? };
                (if a.least_squares { "least_squares" } else { "polarization" }, hat, Some(eta))
            }
            Some(shots) => {
                let seed = a.seed.ok_or_else(|| {
                    CliError::validation("invalid_arguments", "--shots needs --seed or TWOTIME_SEED").at("--seed")
                })?;
                let sim = Simulator::new(SimConfig {
                    shots,
                    seed,
                    ensemble: ensemble_from_density(&eta)?,
                    policy: ObserverPolicy::Fixed(ts.measurement().clone()),
                })?;
                let res = run_parallel(&sim, a.threads.unwrap_or_else(default_threads));
                if res.successes == 0 {
                    return Err(Error::PostSelectionImpossible { success: 0.0 }.into());
                }
                json["attempts"] = json!(res.attempts);
                json["successes"] = json!(res.successes);
                json["seed"] = json!(seed);
                ("least_squares", reconstruct_noisy(&res.frequencies(), dim)?, Some(eta))
            }
        }
    } else {
        let p = read_probabilities(a.probs.as_deref().expect("group requires a source"))?;
        let hat = if a.least_squares { reconstruct_noisy(&p, dim)? } else { reconstruct(&p, dim)? };
        (if a.least_squares { "least_squares" } else { "polarization" }, hat, None)
    };
    json["method"] = json!(method);
    json["density_vector"] = matrix_value(eta_hat.matrix());
    if let Some(eta) = truth {
        json["round_trip_error"] = json!(eta_hat.matrix().sub(eta.matrix()).frobenius_norm());
    }
    let mut csv = vec![header(&["row", "col", "re", "im"])];
    csv.extend(matrix_rows(eta_hat.matrix(), &[]));
    Ok(Report { json, csv })
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn simulate(a: &SimulateArgs) -> Result<Report, CliError> {
    let ensemble = load_ensemble(&a.ensemble)?;
    let policy = match (&a.measurement, &a.policy) {
        (Some(m), _) => ObserverPolicy::Fixed(load_measurement(m)?),
        (None, Some(p)) => ObserverPolicy::RandomChoice(load_policy(p)?),
        (None, None) => unreachable!("group requires an observer"),
    };
    let sim = Simulator::new(SimConfig {
        shots: a.shots,
        seed: a.seed,
        ensemble,
        policy,
    })?;
    let res = run_parallel(&sim, a.threads.unwrap_or_else(default_threads));
    let stats = sim.summarize(&res);
    let mut json = json!({
        "shots": a.shots,
        "seed": a.seed,
        "attempts": res.attempts,
        "successes": res.successes,
        "success_rate_analytic": sim.analytic_success_rate(),
        "counts": res.counts,
        "frequencies": stats.iter().map(|s| s.frequency).collect::<Vec<_>>(),
        "analytic": stats.iter().map(|s| s.analytic).collect::<Vec<_>>(),
        "z": stats.iter().map(|s| finite(s.z)).collect::<Vec<_>>(),
    });
    if let ObserverPolicy::RandomChoice(list) = &sim.config().policy {
        json["choices"] = Value::Array(
            list.iter()
                .enumerate()
                .map(|(c, (q, _))| {
                    json!({
                        "probability": q,
                        "counts": res.choice_counts[c],
                        "analytic": sim.analytic_for_choice(c),
                    })
                })
                .collect(),
        );
    }
    let mut csv = vec![header(&["outcome_index", "count", "frequency", "analytic", "z"])];
    csv.extend(
        stats
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), s.count.to_string(), num(s.frequency), num(s.analytic), num(s.z)]),
    );
    Ok(Report { json, csv })
}

fn weak(a: &WeakArgs) -> Result<Report, CliError> {
    let obs = load_observable(&a.observable)?;
    let policy = if a.any_operator { ObservablePolicy::AnyOperator } else { ObservablePolicy::HermitianOnly };
    let mut json;
    let w = if let Some(path) = &a.state {
        let w = weak_value_pure(&obs, &load_state(path)?, policy)?;
        json = json!({ "weak_value": complex_value(w) });
        w
    } else {
        let eta = load_eta(a.eta.as_deref().expect("group requires a source"))?;
        let w = weak_value_ensemble(&obs, &eta, policy)?;
        json = json!({
            "weak_value": complex_value(w),
            "weak_value_vector": matrix_value(weak_value_vector(&eta).coeffs()),
            "equivalent_state": matrix_value(weak_equivalent_pure(&eta)?.coeffs()),
        });
        w
    };
    let csv = vec![header(&["quantity", "re", "im"]), vec!["weak_value".into(), num(w.re), num(w.im)]];
    json["observable_hermitian"] = json!(obs.is_hermitian());
    Ok(Report { json, csv })
}

fn kv_csv(json: &Value) -> Vec<Vec<String>> {
    let mut csv = vec![header(&["property", "value"])];
    if let Value::Object(o) = json {
        for (k, v) in o {
            csv.push(vec![k.clone(), v.to_string()]);
        }
    }
    csv
}

fn check(a: &CheckArgs) -> Result<Report, CliError> {
    let json = if let Some(path) = &a.eta {
        let (dim, m) = parse_unchecked_matrix(&read(path)?, Kind::DensityVector).map_err(in_file(path))?;
        let min = hermitian_eigen(&m.hermitian_part()).min();
        let validation = DensityVector::from_matrix(m.clone());
        json!({
            "kind": "density_vector",
            "dim": dim.get(),
            "hermitian_defect": m.hermitian_defect(),
            "min_eigenvalue": min,
            "trace": complex_value(m.trace()),
            "positive": min >= -twotime_core::vectors::PSD_TOL,
            "valid": validation.is_ok(),
            "violation": validation.err().map(|e| e.code()),
        })
    } else {
        let path = a.measurement.as_deref().expect("group requires a source");
        let m = load_measurement(path)?;
        json!({
            "kind": "measurement",
            "dim": m.dim().get(),
            "outcomes": m.len(),
            "detailed": m.is_detailed(),
            "complete": m.is_complete(),
            "completeness_defect": m.completeness_defect(),
            "partial_trace_defect": measurement_partial_trace_defect(&measurement_images(&m))?,
        })
    };
    let csv = kv_csv(&json);
    Ok(Report { json, csv })
}

fn iso(a: &IsoArgs) -> Result<Report, CliError> {
    if let Some(path) = &a.eta {
        let eta = load_eta(path)?;
        let rho = density_to_bipartite(&eta);
        let mut csv = vec![header(&["row", "col", "re", "im"])];
        csv.extend(matrix_rows(rho.matrix(), &[]));
        return Ok(Report {
            json: json!({
                "rho_ab": matrix_value(rho.matrix()),
                "array_defect": rho.matrix().max_abs_diff(eta.matrix()),
            }),
            csv,
        });
    }
    if let Some(path) = &a.measurement {
        let m = load_measurement(path)?;
        let images = measurement_images(&m);
        let sum = operator_sum(&images)?;
        let n = m.dim().squared();
        let mut csv = vec![header(&["operator", "row", "col", "re", "im"])];
        for (mu, e) in images.iter().enumerate() {
            csv.extend(matrix_rows(e.matrix(), &[mu.to_string()]));
        }
        return Ok(Report {
            json: json!({
                "operators": images.iter().map(|e| matrix_value(e.matrix())).collect::<Vec<_>>(),
                "operator_sum": matrix_value(&sum),
                "identity_defect": sum.max_abs_diff(&CMatrix::identity(n)),
                "partial_trace_defect": measurement_partial_trace_defect(&images)?,
                "complete": m.is_complete(),
            }),
            csv,
        });
    }
    let path = a.operators.as_deref().expect("group requires a source");
    let ops = load_operators(path)?;
    let raw: Vec<CMatrix> = ops.iter().map(|o| o.matrix().clone()).collect();
    let completion = complete_operator_set(&raw)?;
    let sum = operator_sum(&ops)?;
    let n = ops[0].dim().squared();
    let mut json = json!({
        "operator_sum": matrix_value(&sum),
        "identity_defect": sum.max_abs_diff(&CMatrix::identity(n)),
        "completion_scale": completion.scale,
        "remainder": matrix_value(&completion.remainder),
        "completed_outcomes": completion.completed.len(),
    });
    if let Ok(pull) = povm_to_twotime(&ops) {
        json["povm_factor"] = json!(pull.factor);
        json["povm_factor_defect"] = json!(pull.factor_defect);
    }
    let mut csv = vec![header(&["row", "col", "re", "im"])];
    csv.extend(matrix_rows(&completion.remainder, &[]));
    Ok(Report { json, csv })
}

fn proportions_json(p: &StateProportions) -> Value {
    json!({
        "successes": p.successes,
        "proportions": p.proportions,
        "expected": p.expected,
        "z": finite(p.z),
    })
}

fn demo(d: &Demo) -> Result<Report, CliError> {
    let Demo::MeasurementChoice { shots, seed } = d;
    let r = simulate_choice_demo(*shots, *seed)?;
    let json = json!({
        "shots": r.shots,
        "seed": r.seed,
        "attempts": r.attempts,
        "successes": r.successes,
        "under_m1": proportions_json(&r.under_m1),
        "under_m2": proportions_json(&r.under_m2),
        "overall": proportions_json(&r.overall),
        "difference_z": finite(r.difference_z),
        "overall_equal": r.overall_equal,
        "conditional_differ": r.conditional_differ,
        "discard_demo": {
            "before": proportions_json(&r.discard.before),
            "after": proportions_json(&r.discard.after),
        },
        "passes": r.passes(),
    });
    let mut csv = vec![header(&["scenario", "state", "successes", "proportion", "expected"])];
    for (name, p) in [
        ("m1", &r.under_m1),
        ("m2", &r.under_m2),
        ("overall", &r.overall),
        ("m1_before_discard", &r.discard.before),
        ("m1_after_discard", &r.discard.after),
    ] {
        for s in 0..2 {
            csv.push(vec![
                name.into(),
                (s + 1).to_string(),
                p.successes[s].to_string(),
                num(p.proportions[s]),
                num(p.expected[s]),
            ]);
        }
    }
    Ok(Report { json, csv })
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Prob(a) => prob(a),
        Command::Tomography(a) => tomography(a),
        Command::Simulate(a) => simulate(a),
        Command::Weak(a) => weak(a),
        Command::Check(a) => check(a),
        Command::Iso(a) => iso(a),
        Command::Demo(d) => demo(d),
    }
}

fn emit_error(err: &mut dyn Write, e: &CliError) -> i32 {
    let _ = writeln!(err, "{}", e.to_json());
    e.exit
}

/// Runs the tool on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_VALIDATION } else { 0 };
            }
            let msg = e.render().to_string();
            let text = msg
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .collect::<Vec<_>>()
                .join(" ");
            return emit_error(err, &CliError::validation("invalid_arguments", text.trim_start_matches("error: ")));
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            let written = match cli.format {
                Format::Json => writeln!(out, "{}", report.json),
                Format::Csv => report.csv.iter().try_for_each(|row| writeln!(out, "{}", row.join(","))),
            };
            match written {
                Ok(()) => 0,
                Err(e) => emit_error(err, &CliError::validation("io_error", e.to_string())),
            }
        }
        Err(e) => emit_error(err, &e),
    }
}
