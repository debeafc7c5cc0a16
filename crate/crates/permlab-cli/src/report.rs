//! Report payloads and the three output encodings.
//!
//! JSON is the stable machine format: every payload round-trips through
//! serde. CSV has fixed, documented columns per verb. Text is for humans
//! and carries no stability guarantee.

use serde::{Deserialize, Serialize};

use permlab::bounds::{BoundReport, ConjectureValues};
use permlab::cycles::CycleDecomposition;
use permlab::matrix::{ClassificationReport, Matrix, Rational};
use permlab::search::{EvidenceReport, SearchResult};
use permlab::strategy::PermanentValue;
use permlab::transforms::TransformStep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermanentReport {
    pub method: String,
    pub complement: bool,
    pub n: usize,
    pub result: PermanentValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformReport {
    pub op: String,
    pub steps: Vec<TransformStep>,
    pub result: Matrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub decomposition: CycleDecomposition,
    #[serde(with = "permlab::serde_util::rat")]
    pub complement_permanent: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
}

pub enum Report {
    Permanent(PermanentReport),
    Classify(ClassificationReport),
    Bound(BoundReport),
    Conjecture(ConjectureValues),
    Construct(Matrix),
    Transform(TransformReport),
    Decompose(DecomposeReport),
    Search(SearchResult),
    Evidence(EvidenceReport),
    Verify(VerifyReport),
}

pub fn emit(report: &Report, format: OutputFormat) -> Result<String, String> {
    match format {
        OutputFormat::Json => json(report),
        OutputFormat::Csv => csv_text(report),
        OutputFormat::Text => Ok(text(report)),
    }
}

fn json(report: &Report) -> Result<String, String> {
    let body = match report {
        Report::Permanent(r) => serde_json::to_string_pretty(r),
        Report::Classify(r) => serde_json::to_string_pretty(r),
        Report::Bound(r) => serde_json::to_string_pretty(r),
        Report::Conjecture(r) => serde_json::to_string_pretty(r),
        Report::Construct(r) => serde_json::to_string_pretty(r),
        Report::Transform(r) => serde_json::to_string_pretty(r),
        Report::Decompose(r) => serde_json::to_string_pretty(r),
        Report::Search(r) => serde_json::to_string_pretty(r),
        Report::Evidence(r) => serde_json::to_string_pretty(r),
        Report::Verify(r) => serde_json::to_string_pretty(r),
    };
    body.map(|mut s| {
        s.push('\n');
        s
    })
    .map_err(|e| format!("cannot encode report: {e}"))
}

fn float(v: f64) -> String {
    // Shortest representation that parses back to the same bits.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn opt_rat(v: &Option<Rational>) -> String {
    v.as_ref().map(|r| r.to_string()).unwrap_or_default()
}

fn csv_rows(rows: Vec<Vec<String>>) -> Result<String, String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .write_record(&row)
            .map_err(|e| format!("cannot encode csv: {e}"))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| format!("cannot encode csv: {e}"))?;
    String::from_utf8(bytes).map_err(|e| format!("csv is not utf-8: {e}"))
}

fn owned(fields: &[&str]) -> Vec<String> {
    fields.iter().map(|s| s.to_string()).collect()
}

fn bound_csv_row(r: &BoundReport, source_label: String) -> Vec<String> {
    vec![
        source_label,
        r.n.to_string(),
        r.s.to_string(),
        r.e.to_string(),
        r.value.to_string(),
        r.hypotheses_met.to_string(),
        r.supremum.to_string(),
        r.reading
            .map(|m| format!("{m:?}").to_lowercase())
            .unwrap_or_default(),
    ]
}

fn csv_text(report: &Report) -> Result<String, String> {
    match report {
        Report::Permanent(r) => {
            let (kind, value) = match &r.result {
                PermanentValue::Exact(v) => ("exact", v.to_string()),
                PermanentValue::Approximate(v) => ("approximate", float(*v)),
            };
            csv_rows(vec![
                owned(&["method", "complement", "n", "kind", "value"]),
                vec![
                    r.method.clone(),
                    r.complement.to_string(),
                    r.n.to_string(),
                    kind.to_string(),
                    value,
                ],
            ])
        }
        Report::Classify(r) => csv_rows(vec![
            owned(&[
                "n",
                "sigma",
                "nonnegative",
                "row_substochastic",
                "doubly_substochastic",
                "doubly_stochastic",
                "zero_diagonal",
                "at_most_one_positive_per_row",
                "sub_defect",
            ]),
            vec![
                r.n.to_string(),
                r.sigma.to_string(),
                r.nonnegative.to_string(),
                r.row_substochastic.to_string(),
                r.doubly_substochastic.to_string(),
                r.doubly_stochastic.to_string(),
                r.zero_diagonal.to_string(),
                r.at_most_one_positive_per_row.to_string(),
                r.sub_defect.map(|k| k.to_string()).unwrap_or_default(),
            ],
        ]),
        Report::Bound(r) => {
            let label = serde_json::to_value(&r.source)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_else(|| format!("{:?}", r.source));
            csv_rows(vec![
                owned(&[
                    "source",
                    "n",
                    "s",
                    "e",
                    "value",
                    "hypotheses_met",
                    "supremum",
                    "reading",
                ]),
                bound_csv_row(r, label),
            ])
        }
        Report::Conjecture(r) => {
            let kind = serde_json::to_value(&r.kind)
                .ok()
                .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
                .unwrap_or_else(|| format!("{:?}", r.kind));
            let flags: Vec<String> = r
                .flags
                .iter()
                .map(|f| format!("{:?}", f.code))
                .collect();
            let flags = flags.join(";");
            let mut literal = bound_csv_row(&r.literal, kind.clone());
            literal.push(flags.clone());
            let mut consistent = bound_csv_row(&r.consistent, kind);
            consistent.push(flags);
            csv_rows(vec![
                owned(&[
                    "kind",
                    "n",
                    "s",
                    "e",
                    "value",
                    "hypotheses_met",
                    "supremum",
                    "reading",
                    "flags",
                ]),
                literal,
                consistent,
            ])
        }
        Report::Construct(m) => {
            let mut rows = vec![owned(&["i", "j", "value"])];
            for (i, j, v) in m.entries() {
                rows.push(vec![i.to_string(), j.to_string(), v.to_string()]);
            }
            csv_rows(rows)
        }
        Report::Transform(r) => {
            let mut rows = vec![owned(&[
                "kind",
                "row",
                "col",
                "epsilon",
                "per_before",
                "per_after",
            ])];
            for step in &r.steps {
                let (row, col) = step.indices.last().copied().unwrap_or((0, 0));
                rows.push(vec![
                    format!("{:?}", step.kind).to_lowercase(),
                    row.to_string(),
                    col.to_string(),
                    step.epsilon.to_string(),
                    opt_rat(&step.per_before),
                    opt_rat(&step.per_after),
                ]);
            }
            csv_rows(rows)
        }
        Report::Decompose(r) => {
            let mut rows = vec![owned(&["cycle", "length", "vertices", "weight_product"])];
            for (idx, cycle) in r.decomposition.cycles.iter().enumerate() {
                let vertices: Vec<String> =
                    cycle.vertices.iter().map(|v| v.to_string()).collect();
                rows.push(vec![
                    idx.to_string(),
                    cycle.length.to_string(),
                    vertices.join(" "),
                    cycle.weight_product.to_string(),
                ]);
            }
            csv_rows(rows)
        }
        Report::Search(r) => csv_rows(vec![
            owned(&[
                "n",
                "s",
                "class",
                "restarts",
                "steps_per_restart",
                "initial_step",
                "step_decay",
                "tolerance",
                "seed",
                "best_restart",
                "best_value",
                "formula_value",
                "gap",
                "evaluations",
                "rationalized_value",
            ]),
            vec![
                r.config.n.to_string(),
                float(r.config.s),
                serde_json::to_value(r.config.class)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                r.config.restarts.to_string(),
                r.config.steps_per_restart.to_string(),
                float(r.config.initial_step),
                float(r.config.step_decay),
                float(r.config.tolerance),
                r.config.seed.to_string(),
                r.best_restart.to_string(),
                float(r.best_value),
                opt_float(r.formula_value),
                opt_float(r.gap),
                r.evaluations.to_string(),
                opt_rat(&r.rationalized_value),
            ],
        ]),
        Report::Evidence(r) => {
            let mut rows = vec![owned(&[
                "n",
                "grid_step",
                "s",
                "observed",
                "c_value",
                "conjectured_consistent",
                "conjectured_literal",
                "observed_minus_consistent",
            ])];
            for row in &r.rows {
                rows.push(vec![
                    r.n.to_string(),
                    float(r.grid_step),
                    float(row.s),
                    float(row.observed),
                    float(row.c_value),
                    float(row.conjectured_consistent),
                    float(row.conjectured_literal),
                    float(row.observed_minus_consistent),
                ]);
            }
            csv_rows(rows)
        }
        Report::Verify(r) => {
            let mut rows = vec![owned(&["check", "status", "detail"])];
            for check in &r.checks {
                rows.push(vec![
                    check.name.clone(),
                    if check.ok { "ok" } else { "fail" }.to_string(),
                    check.detail.clone(),
                ]);
            }
            csv_rows(rows)
        }
    }
}

fn bound_text(r: &BoundReport, out: &mut String) {
    let label = serde_json::to_value(&r.source)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| format!("{:?}", r.source));
    out.push_str(&format!("source: {label}\n"));
    out.push_str(&format!("n: {}\ns: {}\ne: {}\n", r.n, r.s, r.e));
    out.push_str(&format!("value: {}\n", r.value));
    out.push_str(&format!("hypotheses_met: {}\n", r.hypotheses_met));
    out.push_str(&format!("supremum: {}\n", r.supremum));
    if let Some(reading) = r.reading {
        out.push_str(&format!("reading: {:?}\n", reading).to_lowercase());
    }
    if let Some(witness) = &r.witness {
        out.push_str("witness:\n");
        out.push_str(&witness.to_text());
    }
}

fn text(report: &Report) -> String {
    match report {
        Report::Permanent(r) => match &r.result {
            PermanentValue::Exact(v) => format!("{v}\n"),
            PermanentValue::Approximate(v) => format!("{}\n", float(*v)),
        },
        Report::Classify(r) => {
            let mut out = String::new();
            out.push_str(&format!("n: {}\nsigma: {}\n", r.n, r.sigma));
            out.push_str(&format!("nonnegative: {}\n", r.nonnegative));
            out.push_str(&format!("row_substochastic: {}\n", r.row_substochastic));
            out.push_str(&format!("doubly_substochastic: {}\n", r.doubly_substochastic));
            out.push_str(&format!("doubly_stochastic: {}\n", r.doubly_stochastic));
            out.push_str(&format!("zero_diagonal: {}\n", r.zero_diagonal));
            out.push_str(&format!(
                "at_most_one_positive_per_row: {}\n",
                r.at_most_one_positive_per_row
            ));
            match r.sub_defect {
                Some(k) => out.push_str(&format!("sub_defect: {k}\n")),
                None => out.push_str("sub_defect: n/a\n"),
            }
            out
        }
        Report::Bound(r) => {
            let mut out = String::new();
            bound_text(r, &mut out);
            out
        }
        Report::Conjecture(r) => {
            let mut out = String::new();
            out.push_str("literal reading:\n");
            bound_text(&r.literal, &mut out);
            out.push_str("consistent reading:\n");
            bound_text(&r.consistent, &mut out);
            if r.flags.is_empty() {
                out.push_str("flags: none\n");
            } else {
                for flag in &r.flags {
                    out.push_str(&format!("flag {:?}: {}\n", flag.code, flag.detail));
                }
            }
            out
        }
        Report::Construct(m) => m.to_text(),
        Report::Transform(r) => {
            let mut out = format!("op: {}\nsteps: {}\n", r.op, r.steps.len());
            for step in &r.steps {
                let (row, col) = step.indices.last().copied().unwrap_or((0, 0));
                out.push_str(&format!(
                    "  {:?} at ({row}, {col}) epsilon {}",
                    step.kind, step.epsilon
                ));
                if let (Some(before), Some(after)) = (&step.per_before, &step.per_after) {
                    out.push_str(&format!(" per {before} -> {after}"));
                }
                out.push('\n');
            }
            out.push_str("result:\n");
            out.push_str(&r.result.to_text());
            out
        }
        Report::Decompose(r) => {
            let mut out = format!("cycles: {}\n", r.decomposition.cycles.len());
            for cycle in &r.decomposition.cycles {
                let vertices: Vec<String> =
                    cycle.vertices.iter().map(|v| v.to_string()).collect();
                out.push_str(&format!(
                    "  length {} vertices [{}] weight {}\n",
                    cycle.length,
                    vertices.join(" "),
                    cycle.weight_product
                ));
            }
            out.push_str(&format!("per_i_minus: {}\n", r.complement_permanent));
            out
        }
        Report::Search(r) => {
            let mut out = String::new();
            out.push_str(&format!(
                "n: {}\ns: {}\nrestarts: {}\nsteps_per_restart: {}\nseed: {}\n",
                r.config.n, r.config.s, r.config.restarts, r.config.steps_per_restart, r.config.seed
            ));
            out.push_str(&format!("best_value: {}\n", float(r.best_value)));
            out.push_str(&format!("best_restart: {}\n", r.best_restart));
            if let Some(formula) = r.formula_value {
                out.push_str(&format!("formula_value: {}\n", float(formula)));
            }
            if let Some(gap) = r.gap {
                out.push_str(&format!("gap: {}\n", float(gap)));
            }
            if let Some(exact) = &r.rationalized_value {
                out.push_str(&format!("rationalized_value: {exact}\n"));
            }
            out.push_str(&format!("evaluations: {}\n", r.evaluations));
            out.push_str("best_matrix:\n");
            let n = r.best_matrix.order();
            for i in 0..n {
                let row: Vec<String> =
                    (0..n).map(|j| float(r.best_matrix.get(i, j))).collect();
                out.push_str(&format!("  {}\n", row.join(" ")));
            }
            out
        }
        Report::Evidence(r) => {
            let mut out = format!("n: {}\ngrid_step: {}\n", r.n, float(r.grid_step));
            for row in &r.rows {
                out.push_str(&format!(
                    "s {}: observed {} c {} consistent {} literal {} excess {}\n",
                    float(row.s),
                    float(row.observed),
                    float(row.c_value),
                    float(row.conjectured_consistent),
                    float(row.conjectured_literal),
                    float(row.observed_minus_consistent),
                ));
            }
            out
        }
        Report::Verify(r) => {
            let mut out = String::new();
            for check in &r.checks {
                if check.ok {
                    out.push_str(&format!("ok {}\n", check.name));
                } else {
                    out.push_str(&format!("FAIL {}: {}\n", check.name, check.detail));
                }
            }
            out.push_str(&format!("passed {} failed {}\n", r.passed, r.failed));
            out
        }
    }
}
