use crate::config::RunConfig;
use crate::error::{CliError, ErrorKind};
use crate::schema::{self, FileSchema};
use gerryopt::benchmarks::{self, PlanFamily, TypeDistribution};
use gerryopt::estimation::{self, IngestMode, SimulationSpec, TypeSpec};
use gerryopt::lp::{self, format_float, AssignmentMatrix, DualCertificate, LpSolution};
use gerryopt::verification::{self, RegimeLabel};
use gerryopt::{ProblemInstance, TasteShock};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const TYPE_LO: f64 = -1.0;
pub const TYPE_HI: f64 = 1.0;

/// Records each file written so the manifest lists exactly what exists.
pub struct Outputs {
    command: &'static str,
    dir: PathBuf,
    written: Vec<(String, FileSchema)>,
}

impl Outputs {
    pub fn new(command: &'static str, dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Outputs { command, dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn register(&mut self, rel: &str, template: &str) -> Result<PathBuf, CliError> {
        let entry = schema::files(self.command)
            .into_iter()
            .find(|f| f.file == template)
            .expect("file is declared in the schema table");
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.written.push((rel.to_string(), entry));
        Ok(path)
    }

    fn json(&mut self, rel: &str, template: &str, value: &Value) -> Result<(), CliError> {
        let path = self.register(rel, template)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    fn csv(
        &mut self,
        rel: &str,
        template: &str,
        write: impl FnOnce(BufWriter<File>) -> gerryopt::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.register(rel, template)?;
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write(BufWriter::new(file))?;
        Ok(())
    }

    pub fn finish(self) -> Result<(), CliError> {
        let files: Vec<Value> = self
            .written
            .iter()
            .map(|(rel, f)| json!({"file": rel, "schema": f.schema, "format": f.format, "columns": f.columns}))
            .collect();
        let manifest = json!({
            "schema": schema::MANIFEST.schema,
            "command": self.command,
            "files": files,
        });
        let path = self.dir.join(schema::MANIFEST.file);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

pub fn print_json(value: &Value) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?).ok();
    Ok(())
}

pub fn instance(cfg: &RunConfig, gamma: f64) -> Result<ProblemInstance, CliError> {
    Ok(ProblemInstance::uniform(cfg.grid, TYPE_LO, TYPE_HI, cfg.taste, gamma)?)
}

fn instance_json(cfg: &RunConfig, gamma: f64) -> Value {
    json!({
        "gamma": gamma,
        "grid": cfg.grid,
        "lo": TYPE_LO,
        "hi": TYPE_HI,
        "taste": cfg.taste,
        "refine": cfg.refine,
    })
}

fn must_exist(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!("input file {} does not exist", path.display())))
    }
}

// ---------------------------------------------------------------------------
// solve and sweep

fn solution_summary(cfg: &RunConfig, inst: &ProblemInstance, sol: &LpSolution) -> Value {
    let decomposition = verification::decompose_pack_and_pair(&sol.assignment);
    let regime = verification::classify_regime(&decomposition, &sol.assignment);
    json!({
        "schema": schema::schema_of("solve", "summary.json"),
        "instance": instance_json(cfg, inst.gamma()),
        "thresholds": sol.assignment.n_thresholds(),
        "objective": sol.objective,
        "dual_objective": sol.certificate.dual_objective(inst),
        "duality_gap": sol.duality_gap(inst),
        "regime": regime,
        "r_b": decomposition.as_ref().ok().map(|d| d.r_b),
        "districts": sol.assignment.active_columns(lp::SUPPORT_TOL).len(),
        "iterations": sol.iterations,
    })
}

fn write_solution(
    out: &mut Outputs,
    prefix: &str,
    cfg: &RunConfig,
    inst: &ProblemInstance,
    sol: &LpSolution,
) -> Result<Value, CliError> {
    let template = |f: &str| if prefix.is_empty() { f.to_string() } else { format!("gamma_{{gamma}}/{f}") };
    let rel = |f: &str| format!("{prefix}{f}");
    let plan = lp::extract_plan(&sol.assignment);
    let plan_json = json!({
        "schema": schema::schema_of("solve", "plan.json"),
        "instance": instance_json(cfg, inst.gamma()),
        "plan": plan,
    });
    out.json(&rel("plan.json"), &template("plan.json"), &plan_json)?;
    out.csv(&rel("assignment.csv"), &template("assignment.csv"), |w| sol.assignment.write_csv(w))?;
    out.csv(&rel("duals.csv"), &template("duals.csv"), |w| sol.certificate.write_csv(w))?;
    let summary = solution_summary(cfg, inst, sol);
    out.json(&rel("summary.json"), &template("summary.json"), &summary)?;
    Ok(summary)
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let inst = instance(cfg, cfg.gamma)?;
    let thresholds = lp::refined_thresholds(&inst, cfg.refine);
    let sol = lp::solve_lp(&lp::build_lp(&inst, &thresholds)?)?;
    let mut out = Outputs::new("solve", &cfg.out)?;
    let summary = write_solution(&mut out, "", cfg, &inst, &sol)?;
    out.finish()?;
    print_json(&summary)
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.gammas.is_empty() {
        return Err(CliError::config("nothing to do: the gamma list is empty"));
    }
    let template = instance(cfg, cfg.gamma)?;
    let rows = lp::sweep_gamma(&template, &cfg.gammas, cfg.refine);
    let mut out = Outputs::new("sweep", &cfg.out)?;
    let mut table = Vec::with_capacity(rows.len());
    for row in &rows {
        let regime = row.regime.map(|r| r.as_str().to_string());
        if let Some(sol) = &row.solution {
            let inst = template.with_gamma(row.gamma)?;
            let prefix = format!("gamma_{}/", format_float(row.gamma));
            write_solution(&mut out, &prefix, cfg, &inst, sol)?;
        }
        table.push(json!({
            "gamma": row.gamma,
            "objective": row.objective,
            "regime": regime,
            "r_b": row.bifurcation,
            "duality_gap": row.duality_gap,
            "iterations": row.iterations,
            "error": row.error,
        }));
    }
    out.csv("sweep.csv", "sweep.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(schema::SWEEP_COLUMNS)?;
        let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
        for row in &rows {
            w.write_record([
                format_float(row.gamma),
                opt(row.objective),
                row.regime.map(|r| r.as_str().to_string()).unwrap_or_default(),
                opt(row.bifurcation),
                opt(row.duality_gap),
                row.iterations.map(|i| i.to_string()).unwrap_or_default(),
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.finish()?;
    print_json(&json!({ "rows": table }))
}

// ---------------------------------------------------------------------------
// benchmark

pub fn benchmark(cfg: &RunConfig, with_lp: bool) -> Result<(), CliError> {
    let inst = instance(cfg, cfg.gamma)?;
    let g_cdf = |r: f64| inst.aggregate_cdf(r);
    let traditional = benchmarks::optimize_cutoff(&inst, PlanFamily::TraditionalPackAndCrack)?;
    let pool = benchmarks::optimize_cutoff(&inst, PlanFamily::PackOpponentsAndPool)?;
    let targets: Vec<f64> = (-300..=300).map(|i| i as f64 / 1000.0).collect();
    let no_aggregate = benchmarks::best_no_aggregate_plan(&inst, &targets)?;
    let no_idiosyncratic = benchmarks::no_idiosyncratic_value(&TypeDistribution::of_instance(&inst), g_cdf);
    let slices = benchmarks::matching_slices_plan(&inst)?;
    let slices_value = benchmarks::step_vote_value(&slices, g_cdf);
    let lp_part = if with_lp {
        let sol = lp::solve_instance(&inst)?;
        json!({
            "objective": sol.objective,
            "gap_traditional_pack_and_crack": sol.objective - traditional.value,
            "gap_pack_opponents_and_pool": sol.objective - pool.value,
        })
    } else {
        Value::Null
    };
    let report = json!({
        "schema": schema::schema_of("benchmark", "benchmarks.json"),
        "instance": instance_json(cfg, cfg.gamma),
        "traditional_pack_and_crack": traditional,
        "pack_opponents_and_pool": pool,
        "best_no_aggregate": no_aggregate,
        "no_idiosyncratic": no_idiosyncratic,
        "matching_slices_step": { "value": slices_value, "plan": slices },
        "lp": lp_part,
    });
    let mut out = Outputs::new("benchmark", &cfg.out)?;
    out.json("benchmarks.json", "benchmarks.json", &report)?;
    out.finish()?;
    print_json(&json!({
        "traditional_pack_and_crack": traditional.value,
        "pack_opponents_and_pool": pool.value,
        "best_no_aggregate": no_aggregate.value,
        "no_idiosyncratic": no_idiosyncratic,
        "matching_slices_step": slices_value,
        "lp": report["lp"],
    }))
}

// ---------------------------------------------------------------------------
// verify

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    /// Unenforced checks are reported but do not affect the exit code.
    enforced: bool,
    detail: String,
}

pub struct VerifyArgs {
    pub assignment: Option<PathBuf>,
    pub duals: Option<PathBuf>,
    pub pap: bool,
    pub strict_envelope: bool,
}

fn worst_row(a: &AssignmentMatrix, weights: &[f64]) -> (usize, f64) {
    (0..a.n_types())
        .map(|i| (i, (a.row_sum(i) - weights[i]).abs()))
        .fold((0, 0.0), |best, x| if x.1 > best.1 { x } else { best })
}

fn worst_column(a: &AssignmentMatrix, inst: &ProblemInstance) -> (usize, f64) {
    (0..a.n_thresholds())
        .map(|k| {
            let r = a.threshold_grid[k];
            let excess: f64 = (0..a.n_types()).map(|i| a.get(i, k) * (inst.vote_share(a.type_grid[i], r) - 0.5)).sum();
            (k, excess.abs())
        })
        .fold((0, 0.0), |best, x| if x.1 > best.1 { x } else { best })
}

pub fn verify(cfg: &RunConfig, args: &VerifyArgs) -> Result<(), CliError> {
    if args.assignment.is_none() && !args.pap {
        return Err(CliError::config("nothing to verify: pass --assignment and/or --pap"));
    }
    if args.duals.is_some() && args.assignment.is_none() {
        return Err(CliError::config("--duals needs --assignment"));
    }
    for p in [&args.assignment, &args.duals].into_iter().flatten() {
        must_exist(p)?;
    }
    let inst = instance(cfg, cfg.gamma)?;
    let mut checks = Vec::new();
    let mut report = json!({
        "schema": schema::schema_of("verify", "verify.json"),
        "instance": instance_json(cfg, cfg.gamma),
        "structure": Value::Null,
        "single_dip": Value::Null,
        "duals": Value::Null,
        "pap": Value::Null,
    });

    if let Some(path) = &args.assignment {
        let cert = match &args.duals {
            Some(d) => Some(DualCertificate::read_csv(&inst, File::open(d).map_err(|e| CliError::io(d, e))?)?),
            None => None,
        };
        let thresholds = match &cert {
            Some(c) => c.threshold_grid.clone(),
            None => lp::refined_thresholds(&inst, cfg.refine),
        };
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let a = AssignmentMatrix::read_csv(file, inst.type_grid(), &thresholds, 1e-9)?;

        let (i, dev) = worst_row(&a, inst.type_weights());
        checks.push(Check {
            name: "type_masses",
            passed: dev <= cfg.tol.feasibility,
            enforced: true,
            detail: format!(
                "worst at s = {:?}: assigned {:?} vs population {:?} (deviation {dev:e})",
                a.type_grid[i],
                a.row_sum(i),
                inst.type_weights()[i]
            ),
        });
        let (k, dev) = worst_column(&a, &inst);
        checks.push(Check {
            name: "district_thresholds",
            passed: dev <= cfg.tol.feasibility,
            enforced: true,
            detail: format!("worst at r = {:?}: mean vote-share excess {dev:e}", a.threshold_grid[k]),
        });

        let dip = verification::check_single_dipped(&a, cfg.tol.mass, 0.0);
        checks.push(Check {
            name: "single_dipped",
            passed: dip.single_dipped,
            enforced: true,
            detail: match dip.violations.first() {
                None => "no violating triple".into(),
                Some(v) => format!(
                    "{} violating triples; first: types {:?} < {:?} < {:?} at r = {:?} < r' = {:?}",
                    dip.violations.len(),
                    v.s,
                    v.s_mid,
                    v.s_high,
                    v.r,
                    v.r_mid
                ),
            },
        });

        let structure = verification::StructureReport::build(&a);
        checks.push(Check {
            name: "pack_and_pair",
            passed: structure.regime != RegimeLabel::NotPackAndPair,
            enforced: true,
            detail: format!("regime {}; r_b {:?}", structure.regime, structure.r_b),
        });
        report["structure"] = serde_json::to_value(&structure)?;
        report["single_dip"] = serde_json::to_value(&dip)?;

        if let Some(cert) = &cert {
            let primal = a.objective(&inst);
            let gap = (cert.dual_objective(&inst) - primal).abs();
            checks.push(Check {
                name: "duality_gap",
                passed: gap <= cfg.tol.gap,
                enforced: true,
                detail: format!("primal {primal}, dual {}, gap {gap:e}", cert.dual_objective(&inst)),
            });
            let duals = verification::check_dual_support_optimality(&inst, &a, cert, cfg.tol.dual);
            checks.push(Check {
                name: "dual_support_optimality",
                passed: duals.part1_holds,
                enforced: true,
                detail: format!("worst slack {:e} at {:?}", duals.part1_worst_slack, duals.part1_worst_at),
            });
            checks.push(Check {
                name: "dual_envelope",
                passed: duals.part2_holds,
                enforced: args.strict_envelope,
                detail: format!(
                    "worst |lambda - envelope| {:e} at r = {:?}",
                    duals.part2_worst_deviation, duals.part2_worst_at
                ),
            });
            report["duals"] = serde_json::to_value(&duals)?;
        }
    }

    if args.pap {
        let grid = verification::default_pap_grid();
        let taste = inst.taste();
        let violations = verification::check_pap_condition_with(
            &taste,
            |r| inst.aggregate_cdf(r),
            |r| inst.aggregate_pdf(r),
            &grid,
        );
        checks.push(Check {
            name: "pap_condition",
            passed: violations.is_empty(),
            enforced: true,
            detail: format!("{} violating quadruples on {} grid points", violations.len(), grid.len()),
        });
        report["pap"] = json!({
            "gamma": cfg.gamma,
            "taste": taste,
            "grid": { "lo": grid[0], "hi": grid[grid.len() - 1], "points": grid.len() },
            "taste_pdf_at_zero": taste.pdf(0.0),
            "violations": violations,
        });
    }

    let failed: Vec<&Check> = checks.iter().filter(|c| c.enforced && !c.passed).collect();
    let passed = failed.is_empty();
    let details: Vec<String> = failed.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    report["passed"] = json!(passed);
    report["checks"] = serde_json::to_value(&checks)?;
    let mut out = Outputs::new("verify", &cfg.out)?;
    out.json("verify.json", "verify.json", &report)?;
    out.finish()?;
    print_json(&json!({ "passed": passed, "checks": checks }))?;
    if passed {
        Ok(())
    } else {
        let mut err = CliError::new(ErrorKind::Verification, format!("{} verification check(s) failed", failed.len()));
        err.details = details;
        Err(err)
    }
}

// ---------------------------------------------------------------------------
// estimate

pub struct EstimateArgs {
    pub input: Option<PathBuf>,
    pub permissive: bool,
    pub describe: bool,
    pub base_year: Option<i32>,
}

pub fn estimate(cfg: &RunConfig, args: &EstimateArgs) -> Result<(), CliError> {
    let input = args.input.as_ref().ok_or_else(|| CliError::config("estimate needs --input"))?;
    must_exist(input)?;
    let mode = if args.permissive { IngestMode::Permissive } else { IngestMode::Strict };
    let (records, filters) = estimation::ingest_path(input, mode)?;
    if records.is_empty() {
        return Err(CliError::from(gerryopt::Error::NoData));
    }
    let rows = estimation::estimate_by_state(&records, cfg.alpha)?;
    let pooled = estimation::estimate_gamma(&records, cfg.alpha)?;
    let moments = estimation::estimate_f_moments(&records)?;

    let mut out = Outputs::new("estimate", &cfg.out)?;
    out.csv("estimates.csv", "estimates.csv", |w| estimation::write_estimates(w, &rows))?;
    if args.describe {
        out.csv("share_histogram.csv", "share_histogram.csv", |w| estimation::share_histogram(&records).write_csv(w))?;
        out.csv("swing_histogram.csv", "swing_histogram.csv", |w| estimation::swing_histogram(&records).write_csv(w))?;
        let base = args.base_year.unwrap_or_else(|| records.iter().map(|r| r.year).min().unwrap_or_default());
        let qq = estimation::qq_curves(&records, base, &estimation::default_levels())?;
        out.csv("qq.csv", "qq.csv", |w| estimation::write_qq(w, &qq))?;
    }
    let summary = json!({
        "schema": schema::schema_of("estimate", "estimate_summary.json"),
        "input": input.display().to_string(),
        "alpha": cfg.alpha,
        "filters": filters,
        "f_moments": moments,
        "pooled": pooled,
    });
    out.json("estimate_summary.json", "estimate_summary.json", &summary)?;
    out.finish()?;
    print_json(&json!({
        "gamma_hat": pooled.gamma_hat,
        "ci_low": pooled.ci_low,
        "ci_high": pooled.ci_high,
        "elections": pooled.elections,
        "kept": filters.kept,
        "dropped": filters.dropped(),
    }))
}

// ---------------------------------------------------------------------------
// simulate

pub struct SimulateArgs {
    pub types: TypeSpec,
    pub elections: usize,
    pub precincts: usize,
    pub votes: u64,
    pub districts: usize,
    pub state: String,
    pub first_year: i32,
    pub coverage: Option<usize>,
}

/// Parses `uniform:LO,HI` or `normal:MEAN,SD`.
pub fn parse_types(text: &str) -> Result<TypeSpec, String> {
    let (kind, params) = text.split_once(':').ok_or("expected uniform:LO,HI or normal:MEAN,SD")?;
    let nums: Vec<f64> = params
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [a, b] = nums[..] else {
        return Err("expected two parameters".into());
    };
    match kind {
        "uniform" if a < b => Ok(TypeSpec::Uniform { lo: a, hi: b }),
        "uniform" => Err("uniform needs LO < HI".into()),
        "normal" if b > 0.0 => Ok(TypeSpec::Normal { mean: a, sd: b }),
        "normal" => Err("normal needs SD > 0".into()),
        other => Err(format!("unknown type distribution `{other}`")),
    }
}

pub fn simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<(), CliError> {
    if args.elections == 0 || args.precincts == 0 || args.votes == 0 || args.districts == 0 {
        return Err(CliError::config("elections, precincts, votes and districts must be positive"));
    }
    let spec = SimulationSpec {
        types: args.types,
        gamma: cfg.gamma,
        elections: args.elections,
        n_precincts: args.precincts,
        votes_per_precinct: args.votes,
        n_districts: args.districts,
        seed: cfg.seed,
        state: args.state.clone(),
        first_year: args.first_year,
    };
    let records = estimation::simulate_returns(&spec)?;
    let coverage = match args.coverage {
        Some(reps) => Some(estimation::interval_coverage(&spec, reps, cfg.alpha)?),
        None => None,
    };
    let mut out = Outputs::new("simulate", &cfg.out)?;
    out.csv("returns.csv", "returns.csv", |w| estimation::write_records(w, &records))?;
    let summary = json!({
        "schema": schema::schema_of("simulate", "simulate_summary.json"),
        "spec": spec,
        "records": records.len(),
        "coverage": coverage.map(|c| json!({
            "replications": args.coverage,
            "alpha": cfg.alpha,
            "share_covering": c,
        })),
    });
    out.json("simulate_summary.json", "simulate_summary.json", &summary)?;
    out.finish()?;
    print_json(&summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_specs_parse() {
        assert_eq!(parse_types("uniform:-1,1").unwrap(), TypeSpec::Uniform { lo: -1.0, hi: 1.0 });
        assert_eq!(parse_types("normal:0, 0.6").unwrap(), TypeSpec::Normal { mean: 0.0, sd: 0.6 });
        for bad in ["uniform", "uniform:1,-1", "normal:0,0", "beta:1,2", "uniform:1", "uniform:a,b"] {
            assert!(parse_types(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn every_written_file_is_declared() {
        for cmd in ["solve", "sweep", "benchmark", "verify", "estimate", "simulate"] {
            let files = schema::files(cmd);
            assert!(files.len() >= 2, "{cmd}");
            assert!(files.iter().all(|f| f.schema.starts_with("gerryopt.")));
        }
    }
}
