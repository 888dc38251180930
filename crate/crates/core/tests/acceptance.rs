//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion,
//! with indented measurements, and exits nonzero if any criterion fails.

mod common;

use common::*;
use gerryopt::benchmarks::{self, PlanFamily};
use gerryopt::estimation::{self, SimulationSpec};
use gerryopt::lp::{self, LpSolution};
use gerryopt::verification::{self, RegimeLabel};
use gerryopt::{ProblemInstance, Taste};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

const FIG2: [(f64, RegimeLabel); 9] = [
    (0.2, RegimeLabel::PMP),
    (0.5, RegimeLabel::PMP),
    (1.0, RegimeLabel::PMP),
    (1.2, RegimeLabel::MixedPMP),
    (1.4, RegimeLabel::MixedPMP),
    (1.6, RegimeLabel::MixedPOP),
    (1.7, RegimeLabel::POP),
    (3.0, RegimeLabel::POP),
    (6.0, RegimeLabel::POP),
];

/// Gammas beyond the regime grid used for the gap and duality criteria.
const EXTRA: [f64; 6] = [2.0, 5.0, 8.0, 10.0, 15.0, 30.0];

const GRID_STEP: f64 = 0.01;

struct Solved {
    inst: ProblemInstance,
    sol: LpSolution,
    elapsed: Duration,
}

#[derive(Default)]
struct Solves(BTreeMap<u64, Solved>);

impl Solves {
    fn get(&mut self, gamma: f64) -> &Solved {
        self.0.entry(gamma.to_bits()).or_insert_with(|| {
            let inst = ProblemInstance::default_with_gamma(gamma).expect("valid gamma");
            let t = Instant::now();
            let sol = lp::solve_instance(&inst).expect("LP solves");
            Solved { inst, sol, elapsed: t.elapsed() }
        })
    }

    fn sweep(&mut self) -> Vec<f64> {
        let mut gammas: Vec<f64> = FIG2.iter().map(|g| g.0).chain(EXTRA).collect();
        gammas.sort_by(f64::total_cmp);
        for &g in &gammas {
            self.get(g);
        }
        gammas
    }
}

struct Outcome {
    passed: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { passed: true, lines: Vec::new() }
    }

    /// Records one measurement and folds it into the verdict.
    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1_seat_shares(solves: &mut Solves) -> Outcome {
    let mut o = Outcome::new();
    for (gamma, lp_target, pc_target) in [(6.0, 0.7087, 0.7082), (2.0, 0.5392, 0.5357), (15.0, 0.8488, 0.8485)] {
        let s = solves.get(gamma);
        let pc = benchmarks::optimize_cutoff(&s.inst, PlanFamily::TraditionalPackAndCrack).unwrap();
        o.check(
            within(s.sol.objective, lp_target, 0.002),
            format!("gamma {gamma}: LP {:.5} vs {lp_target} +- 0.002", s.sol.objective),
        );
        o.check(
            within(pc.value, pc_target, 0.002),
            format!("gamma {gamma}: traditional pack-and-crack {:.5} (cutoff {}) vs {pc_target} +- 0.002", pc.value, pc.cutoff),
        );
        o.check(
            s.elapsed < Duration::from_secs(60),
            format!("gamma {gamma}: LP solve {:.2} s < 60 s", s.elapsed.as_secs_f64()),
        );
    }
    o
}

fn c2_regimes(solves: &mut Solves) -> Outcome {
    let mut o = Outcome::new();
    let mut total = Duration::ZERO;
    for (gamma, want) in FIG2 {
        let s = solves.get(gamma);
        total += s.elapsed;
        let d = verification::decompose_pack_and_pair(&s.sol.assignment);
        let got = verification::classify_regime(&d, &s.sol.assignment);
        o.check(got == want, format!("gamma {gamma}: {got} (expected {want})"));
    }
    o.check(total < Duration::from_secs(600), format!("nine solves {:.1} s < 600 s", total.as_secs_f64()));
    o
}

fn c3_bifurcation(solves: &mut Solves) -> Outcome {
    let mut o = Outcome::new();
    let mut mixed = 0;
    for g in solves.sweep() {
        let s = solves.get(g);
        let d = verification::decompose_pack_and_pair(&s.sol.assignment);
        let label = verification::classify_regime(&d, &s.sol.assignment);
        if !label.is_y() {
            continue;
        }
        mixed += 1;
        match d {
            Ok(d) => o.check(
                d.r_b.abs() <= GRID_STEP + 1e-12,
                format!("gamma {g}: {label}, r_b = {} within {GRID_STEP} of 0", d.r_b),
            ),
            Err(e) => o.check(false, format!("gamma {g}: {label} but no decomposition ({e})")),
        }
    }
    o.check(mixed > 0, format!("{mixed} mixed regimes in the sweep"));
    o
}

fn c4_gap(solves: &mut Solves) -> Outcome {
    let mut o = Outcome::new();
    for g in solves.sweep() {
        let s = solves.get(g);
        let pc = benchmarks::optimize_cutoff(&s.inst, PlanFamily::TraditionalPackAndCrack).unwrap();
        let gap = s.sol.objective - pc.value;
        let bound = if g >= 5.0 { 0.001 } else { 0.014 };
        // a negative gap means the continuous cutoff beats the threshold grid
        o.check(
            gap <= bound + 0.002,
            format!("gamma {g}: LP {:.5} - pack-and-crack {:.5} = {gap:.5} <= {bound} + 0.002", s.sol.objective, pc.value),
        );
    }
    o
}

fn c5_pap() -> Outcome {
    let mut o = Outcome::new();
    let grid = verification::default_pap_grid();
    let t = Instant::now();
    for g in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 50.0, 100.0] {
        let v = verification::check_pap_condition(g, &grid);
        o.check(
            v.is_empty(),
            format!("gamma {g}: {} violating quadruples on {} points", v.len(), grid.len()),
        );
    }
    let elapsed = t.elapsed();
    o.check(elapsed < Duration::from_secs(1800), format!("scan {:.2} s < 1800 s", elapsed.as_secs_f64()));
    o
}

fn c6_y_conditions() -> Outcome {
    let mut o = Outcome::new();
    let bound = (1.0 + 3f64.sqrt()).sqrt();
    let y = verification::y_necessary_conditions(bound).unwrap();
    o.check(
        y.admissible && (y.beta1 - y.beta2 - 1.0).abs() <= 1e-12,
        format!("boundary sqrt(1 + sqrt 3) = {bound:.12}: beta1 - beta2 - 1 = {:e}, admissible", y.beta1 - y.beta2 - 1.0),
    );
    let above = verification::y_necessary_conditions(bound + 1e-9).unwrap();
    o.check(!above.admissible, "gamma just above the boundary is not admissible".into());
    let y = verification::y_necessary_conditions(1.6).unwrap();
    o.check(
        y.admissible && within(y.beta1, 2.4615, 1e-4) && within(y.beta2, 1.28, 1e-12),
        format!("gamma 1.6: beta1 {:.4}, beta2 {}, admissible {}", y.beta1, y.beta2, y.admissible),
    );
    let y = verification::y_necessary_conditions(1.7).unwrap();
    o.check(
        !y.admissible && within(y.beta1, 2.2937, 1e-4) && within(y.beta2, 1.445, 1e-12),
        format!("gamma 1.7: beta1 {:.4}, beta2 {}, admissible {}", y.beta1, y.beta2, y.admissible),
    );
    o.check(verification::y_necessary_conditions(1.0).is_err(), "gamma 1 is rejected".into());
    let mut mismatches = 0;
    for i in 1..=4000 {
        let g = i as f64 * 0.001;
        if (g - 1.0).abs() < 1e-12 {
            continue;
        }
        let expected = g > 1.0 && g <= bound;
        if verification::y_necessary_conditions(g).unwrap().admissible != expected {
            mismatches += 1;
        }
    }
    o.check(mismatches == 0, format!("admissible set on (0, 4] step 0.001 equals (1, {bound:.6}]: {mismatches} mismatches"));
    o
}

fn c7_duality(solves: &mut Solves) -> Outcome {
    let mut o = Outcome::new();
    let mut worst_gap = (0.0f64, 0.0);
    let mut worst_p1 = (f64::NEG_INFINITY, 0.0);
    let mut worst_p2 = (0.0f64, 0.0);
    let gammas = solves.sweep();
    for &g in &gammas {
        let s = solves.get(g);
        let gap = s.sol.duality_gap(&s.inst);
        if gap >= worst_gap.0 {
            worst_gap = (gap, g);
        }
        let cert = verification::align_certificate(&s.inst, &s.sol.assignment, &s.sol.certificate);
        let r = verification::check_dual_support_optimality(&s.inst, &s.sol.assignment, &cert, 1e-6);
        if r.part1_worst_slack > worst_p1.0 {
            worst_p1 = (r.part1_worst_slack, g);
        }
        if r.part2_worst_deviation >= worst_p2.0 {
            worst_p2 = (r.part2_worst_deviation, g);
        }
        o.note(format!(
            "gamma {g}: gap {gap:.1e}, part 1 slack {:.1e}, part 2 deviation {:.1e} at r = {:?}",
            r.part1_worst_slack, r.part2_worst_deviation, r.part2_worst_at
        ));
    }
    o.check(worst_gap.0 <= 1e-7, format!("primal-dual gap {:.1e} (gamma {}) <= 1e-7", worst_gap.0, worst_gap.1));
    o.check(worst_p1.0 <= 1e-6, format!("part 1 worst slack {:.1e} (gamma {}) <= 1e-6", worst_p1.0, worst_p1.1));
    o.check(
        worst_p2.0 <= 1e-6,
        format!("part 2 worst |lambda - envelope| {:.1e} (gamma {}) <= 1e-6", worst_p2.0, worst_p2.1),
    );
    o
}

fn c8_oracles(solves: &mut Solves) -> Outcome {
    let mut o = Outcome::new();
    let cases: [(&[f64], &[f64], f64); 5] = [
        (&[-1.0, 0.0, 1.0], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 6.0),
        (&[-1.0, 0.0, 1.0], &[0.3, 0.4, 0.3], 2.0),
        (&[-1.0, 0.2, 0.8], &[0.5, 0.2, 0.3], 1.0),
        (&[-0.5, 0.0, 0.5], &[0.2, 0.2, 0.6], 0.5),
        (&[-2.0, -0.5, 1.5], &[0.6, 0.1, 0.3], 15.0),
    ];
    for (types, weights, gamma) in cases {
        let inst = ProblemInstance::new(types.to_vec(), weights.to_vec(), Taste::Normal, gamma).unwrap();
        let lp_value = lp::solve_instance(&inst).unwrap().objective;
        let (a, b, c) = dense_designer_lp(types, weights, gamma);
        let oracle = vertex_oracle(&a, &b, &c).unwrap();
        o.check(
            within(lp_value, oracle, 1e-9),
            format!("3 types {types:?}, gamma {gamma}: LP {lp_value:.12} vs enumeration {oracle:.12}"),
        );
    }

    let s = solves.get(30.0);
    let targets: Vec<f64> = (-300..=300).map(|i| i as f64 / 1000.0).collect();
    let closed = benchmarks::best_no_aggregate_plan(&s.inst, &targets).unwrap();
    o.check(
        within(s.sol.objective, closed.value, 0.01),
        format!("gamma 30: LP {:.5} vs no-aggregate closed form {:.5} (r0 cutoff {})", s.sol.objective, closed.value, closed.cutoff),
    );

    let inst = ProblemInstance::default_with_gamma(1.0).unwrap();
    let plan = benchmarks::matching_slices_plan(&inst).unwrap();
    let value = benchmarks::step_vote_value(&plan, |r| inst.aggregate_cdf(r));
    let quad = matching_slices_quadrature();
    o.check(
        within(value, quad, 0.01),
        format!("matching slices under step votes {value:.5} vs quadrature {quad:.5}"),
    );
    o
}

fn c9_estimator() -> Outcome {
    let mut o = Outcome::new();
    let (lo, hi) = estimation::gamma_interval(14.75, 3, 0.1).unwrap();
    o.check(within(lo, 3.34, 0.01), format!("CI low {lo:.4} vs 3.34 +- 0.01"));
    o.check(within(hi, 25.54, 0.01), format!("CI high {hi:.4} vs 25.54 +- 0.01"));
    let t = Instant::now();
    let spec = SimulationSpec::default();
    let cover = estimation::interval_coverage(&spec, 5000, 0.1).unwrap();
    let elapsed = t.elapsed();
    o.check(within(cover, 0.90, 0.02), format!("coverage over 5000 replications {cover:.4} vs 0.90 +- 0.02"));
    o.check(elapsed < Duration::from_secs(300), format!("coverage run {:.1} s < 300 s", elapsed.as_secs_f64()));
    o
}

fn run_property<S: Strategy>(
    o: &mut Outcome,
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    match runner.run(&strategy, test) {
        Ok(()) => o.check(true, format!("{name}: {cases} cases")),
        Err(e) => o.check(false, format!("{name}: {e}")),
    }
}

fn c10_properties() -> Outcome {
    let mut o = Outcome::new();
    run_property(
        &mut o,
        "vote share monotone in s and r",
        512,
        (taste_strategy(), 0.1f64..50.0, (-5.0f64..5.0, -5.0f64..5.0), (-5.0f64..5.0, -5.0f64..5.0)),
        |(t, g, s, r)| vote_share_monotone(t, g, s, r),
    );
    run_property(
        &mut o,
        "threshold of a point district is its type",
        512,
        (taste_strategy(), 0.1f64..50.0, -3.0f64..3.0),
        |(t, g, s)| threshold_identity(t, g, s),
    );
    run_property(&mut o, "plan feasibility round trips", 256, (plan_input_strategy(), 0.2f64..20.0), |(p, g)| {
        plan_round_trip(&p, g)
    });
    run_property(&mut o, "LP solutions single-dipped", 48, (2usize..15, 0.1f64..12.0), |(h, g)| {
        lp_single_dipped(2 * h + 1, g)
    });
    run_property(
        &mut o,
        "filters idempotent",
        256,
        prop::collection::vec(record_strategy(), 0..80),
        filter_idempotent,
    );
    run_property(&mut o, "probit round trip", 2048, 1e-9f64..(1.0 - 1e-9), probit_round_trip);
    o
}

fn main() {
    let start = Instant::now();
    let mut solves = Solves::default();
    let criteria: Vec<(&str, Outcome)> = vec![
        ("seat-share regression", c1_seat_shares(&mut solves)),
        ("regime reproduction", c2_regimes(&mut solves)),
        ("Y-regime bifurcation at zero", c3_bifurcation(&mut solves)),
        ("gap to traditional pack-and-crack", c4_gap(&mut solves)),
        ("pack-and-pair grid condition", c5_pap()),
        ("closed-form beta conditions", c6_y_conditions()),
        ("duality and support conditions", c7_duality(&mut solves)),
        ("benchmark oracle equivalence", c8_oracles(&mut solves)),
        ("estimator interval and coverage", c9_estimator()),
        ("property suites", c10_properties()),
    ];
    println!();
    let mut failed = 0;
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        println!("{} criterion {:>2}: {name}", if outcome.passed { "PASS" } else { "FAIL" }, i + 1);
        for line in &outcome.lines {
            println!("        {line}");
        }
        failed += usize::from(!outcome.passed);
    }
    println!(
        "\nacceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
