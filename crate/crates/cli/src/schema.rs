//! Column and key contracts for every file a command writes.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FileSchema {
    /// Path relative to the output directory. `{gamma}` stands for the
    /// shortest round-trip decimal of each swept value.
    pub file: &'static str,
    pub schema: &'static str,
    pub format: Format,
    /// CSV header, or the top-level keys of a JSON object.
    pub columns: &'static [&'static str],
    #[serde(skip_serializing_if = "is_false")]
    pub optional: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

const fn csv(file: &'static str, schema: &'static str, columns: &'static [&'static str]) -> FileSchema {
    FileSchema { file, schema, format: Format::Csv, columns, optional: false }
}

const fn json(file: &'static str, schema: &'static str, columns: &'static [&'static str]) -> FileSchema {
    FileSchema { file, schema, format: Format::Json, columns, optional: false }
}

const fn opt(mut f: FileSchema) -> FileSchema {
    f.optional = true;
    f
}

pub const MANIFEST: FileSchema = json("manifest.json", "gerryopt.manifest/1", &["schema", "command", "files"]);

pub const PLAN_KEYS: &[&str] = &["schema", "instance", "plan"];
pub const ASSIGNMENT_COLUMNS: &[&str] = &["s", "r", "mass"];
pub const DUAL_COLUMNS: &[&str] = &["r", "lambda"];
pub const SUMMARY_KEYS: &[&str] = &[
    "schema",
    "instance",
    "thresholds",
    "objective",
    "dual_objective",
    "duality_gap",
    "regime",
    "r_b",
    "districts",
    "iterations",
];
pub const SWEEP_COLUMNS: &[&str] = &["gamma", "objective", "regime", "r_b", "duality_gap", "iterations", "error"];
pub const BENCHMARK_KEYS: &[&str] = &[
    "schema",
    "instance",
    "traditional_pack_and_crack",
    "pack_opponents_and_pool",
    "best_no_aggregate",
    "no_idiosyncratic",
    "matching_slices_step",
    "lp",
];
pub const VERIFY_KEYS: &[&str] = &["schema", "instance", "passed", "checks", "structure", "single_dip", "duals", "pap"];
pub const ESTIMATE_COLUMNS: &[&str] = &["state", "gamma_hat", "ci_low", "ci_high", "T", "n_precincts"];
pub const ESTIMATE_SUMMARY_KEYS: &[&str] = &["schema", "input", "alpha", "filters", "f_moments", "pooled"];
pub const HISTOGRAM_COLUMNS: &[&str] = &["bin_low", "bin_high", "share"];
pub const QQ_COLUMNS: &[&str] = &["year", "p", "v_base", "v_year"];
pub const RETURNS_COLUMNS: &[&str] = &gerryopt::estimation::CSV_HEADER;
pub const SIMULATE_SUMMARY_KEYS: &[&str] = &["schema", "spec", "records", "coverage"];

pub fn files(command: &str) -> Vec<FileSchema> {
    let mut out = match command {
        "solve" => vec![
            json("plan.json", "gerryopt.plan/1", PLAN_KEYS),
            csv("assignment.csv", "gerryopt.assignment/1", ASSIGNMENT_COLUMNS),
            csv("duals.csv", "gerryopt.duals/1", DUAL_COLUMNS),
            json("summary.json", "gerryopt.summary/1", SUMMARY_KEYS),
        ],
        "sweep" => vec![
            csv("sweep.csv", "gerryopt.sweep/1", SWEEP_COLUMNS),
            json("gamma_{gamma}/plan.json", "gerryopt.plan/1", PLAN_KEYS),
            csv("gamma_{gamma}/assignment.csv", "gerryopt.assignment/1", ASSIGNMENT_COLUMNS),
            csv("gamma_{gamma}/duals.csv", "gerryopt.duals/1", DUAL_COLUMNS),
            json("gamma_{gamma}/summary.json", "gerryopt.summary/1", SUMMARY_KEYS),
        ],
        "benchmark" => vec![json("benchmarks.json", "gerryopt.benchmarks/1", BENCHMARK_KEYS)],
        "verify" => vec![json("verify.json", "gerryopt.verify/1", VERIFY_KEYS)],
        "estimate" => vec![
            csv("estimates.csv", "gerryopt.estimates/1", ESTIMATE_COLUMNS),
            json("estimate_summary.json", "gerryopt.estimate-summary/1", ESTIMATE_SUMMARY_KEYS),
            opt(csv("share_histogram.csv", "gerryopt.histogram/1", HISTOGRAM_COLUMNS)),
            opt(csv("swing_histogram.csv", "gerryopt.histogram/1", HISTOGRAM_COLUMNS)),
            opt(csv("qq.csv", "gerryopt.qq/1", QQ_COLUMNS)),
        ],
        "simulate" => vec![
            csv("returns.csv", "gerryopt.returns/1", RETURNS_COLUMNS),
            json("simulate_summary.json", "gerryopt.simulate-summary/1", SIMULATE_SUMMARY_KEYS),
        ],
        _ => Vec::new(),
    };
    out.push(MANIFEST);
    out
}

pub fn schema_of(command: &str, file: &str) -> &'static str {
    files(command)
        .into_iter()
        .find(|f| f.file == file)
        .map(|f| f.schema)
        .unwrap_or("gerryopt.unknown/0")
}

/// The contract printed by `--schema`.
pub fn contract(command: &str) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "files": files(command),
    })
}
