//! Oracles and property bodies shared by the property and acceptance suites.
#![allow(dead_code)]

use gerryopt::estimation::{self, PrecinctRecord};
use gerryopt::lp::{self, AssignmentMatrix};
use gerryopt::model::uniform_grid;
use gerryopt::taste::normal_cdf;
use gerryopt::verification;
use gerryopt::{District, Plan, ProblemInstance, Taste};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Max of `c'x` over `Ax = b, x >= 0` by enumerating every column subset of
/// size at most `rows(A)` with linearly independent columns and a
/// nonnegative exact solution.
pub fn vertex_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let k = cols.len();
        if k > m {
            continue;
        }
        let mut mat = vec![vec![0.0; k + 1]; k];
        for p in 0..k {
            for q in 0..k {
                mat[p][q] = (0..m).map(|i| a[i][cols[p]] * a[i][cols[q]]).sum();
            }
            mat[p][k] = (0..m).map(|i| a[i][cols[p]] * b[i]).sum();
        }
        let mut singular = false;
        for p in 0..k {
            let piv = (p..k).max_by(|&x, &y| mat[x][p].abs().total_cmp(&mat[y][p].abs())).unwrap();
            if mat[piv][p].abs() < 1e-12 {
                singular = true;
                break;
            }
            mat.swap(p, piv);
            for row in 0..k {
                if row != p {
                    let f = mat[row][p] / mat[p][p];
                    for col in p..=k {
                        mat[row][col] -= f * mat[p][col];
                    }
                }
            }
        }
        if singular {
            continue;
        }
        let x: Vec<f64> = (0..k).map(|p| mat[p][k] / mat[p][p]).collect();
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let resid = (0..m)
            .map(|i| ((0..k).map(|p| a[i][cols[p]] * x[p]).sum::<f64>() - b[i]).abs())
            .fold(0.0, f64::max);
        if resid > 1e-10 {
            continue;
        }
        let val: f64 = (0..k).map(|p| c[cols[p]] * x[p]).sum();
        best = Some(best.map_or(val, |bv: f64| bv.max(val)));
    }
    best
}

/// Dense designer LP with normal vote shares and thresholds on the types.
pub fn dense_designer_lp(types: &[f64], weights: &[f64], gamma: f64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = types.len();
    let mut a = vec![vec![0.0; n * n]; 2 * n];
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let j = i * n + k;
            a[i][j] = 1.0;
            a[n + k][j] = normal_cdf(types[i] - types[k]) - 0.5;
            c[j] = normal_cdf(gamma * types[k]);
        }
    }
    let mut b = weights.to_vec();
    b.extend(std::iter::repeat_n(0.0, n));
    (a, b, c)
}

/// `int_0^inf (1 - H*(r)) dG` for F uniform on [-1, 1] and G standard
/// normal, where `1 - H*(r) = 1` below the median and `1 - r` on [0, 1].
/// Composite Simpson on [0, 1] plus the exact mass below zero.
pub fn matching_slices_quadrature() -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let phi = |r: f64| (-0.5 * r * r).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |r: f64| (1.0 - r) * phi(r);
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    0.5 + acc * h / 3.0
}

// ---------------------------------------------------------------------------
// property bodies

pub fn taste_strategy() -> impl Strategy<Value = Taste> {
    prop_oneof![Just(Taste::Normal), Just(Taste::Logistic)]
}

/// `v(s, r)` is nondecreasing in `s` and nonincreasing in `r`.
pub fn vote_share_monotone(taste: Taste, gamma: f64, s: (f64, f64), r: (f64, f64)) -> Result<(), TestCaseError> {
    let inst = ProblemInstance::new(vec![0.0], vec![1.0], taste, gamma).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let (s_lo, s_hi) = if s.0 <= s.1 { s } else { (s.1, s.0) };
    let (r_lo, r_hi) = if r.0 <= r.1 { r } else { (r.1, r.0) };
    prop_assert!(inst.vote_share(s_lo, r_lo) <= inst.vote_share(s_hi, r_lo));
    prop_assert!(inst.vote_share(s_lo, r_hi) <= inst.vote_share(s_lo, r_lo));
    Ok(())
}

/// `r*(delta_s) = s`.
pub fn threshold_identity(taste: Taste, gamma: f64, s: f64) -> Result<(), TestCaseError> {
    let inst = ProblemInstance::new(vec![0.0], vec![1.0], taste, gamma).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let r = inst.district_threshold(&District::point(s)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((r - s).abs() <= 1e-10, "r* = {r} for s = {s}");
    Ok(())
}

/// A random plan input: per type a weight, a pair of district labels and a
/// split fraction between them.
pub fn plan_input_strategy() -> impl Strategy<Value = Vec<(f64, usize, usize, f64)>> {
    (3usize..10).prop_flat_map(|n| prop::collection::vec((0.05f64..1.0, 0usize..4, 0usize..4, 0.0f64..=1.0), n))
}

/// Builds the plan, checks feasibility, JSON round trip, and that the
/// assignment view reproduces the plan's value and is feasible.
pub fn plan_round_trip(input: &[(f64, usize, usize, f64)], gamma: f64) -> Result<(), TestCaseError> {
    let n = input.len();
    let total: f64 = input.iter().map(|t| t.0).sum();
    let types = uniform_grid(n, -1.0, 1.0);
    let weights: Vec<f64> = input.iter().map(|t| t.0 / total).collect();
    let inst = ProblemInstance::new(types.clone(), weights.clone(), Taste::Normal, gamma)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 4];
    for (i, &(_, a, b, frac)) in input.iter().enumerate() {
        groups[a].push((types[i], weights[i] * frac));
        groups[b].push((types[i], weights[i] * (1.0 - frac)));
    }
    let mut plan = Plan::default();
    for g in groups {
        let g: Vec<(f64, f64)> = g.into_iter().filter(|&(_, m)| m > 0.0).collect();
        if g.is_empty() {
            continue;
        }
        let mass: f64 = g.iter().map(|&(_, m)| m).sum();
        plan.push(District::from_masses(g).map_err(|e| TestCaseError::fail(e.to_string()))?, mass);
    }
    prop_assert!(inst.check_feasibility(&plan, 1e-12).feasible);
    let back = Plan::from_json(&plan.to_json().unwrap()).unwrap();
    prop_assert_eq!(&back, &plan);

    let mut thresholds: Vec<f64> = plan
        .districts
        .iter()
        .map(|d| inst.district_threshold(&d.district).unwrap())
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let a = AssignmentMatrix::from_plan(&inst, &plan, &thresholds, 0.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(a.feasibility_residual(&weights) <= 1e-12);
    prop_assert!(a.threshold_residual(&inst) <= 1e-9);
    let value = inst.expected_seat_share(&plan).unwrap();
    prop_assert!((a.objective(&inst) - value).abs() <= 1e-9);
    let rebuilt = lp::extract_plan(&a);
    prop_assert!(inst.check_feasibility(&rebuilt, 1e-12).feasible);
    prop_assert!((inst.expected_seat_share(&rebuilt).unwrap() - value).abs() <= 1e-9);
    Ok(())
}

/// Every LP solution under normal shocks is strictly single-dipped.
pub fn lp_single_dipped(n: usize, gamma: f64) -> Result<(), TestCaseError> {
    let inst = ProblemInstance::uniform(n, -1.0, 1.0, Taste::Normal, gamma).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let sol = lp::solve_instance(&inst).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let report = verification::check_single_dipped(&sol.assignment, lp::SUPPORT_TOL, 0.0);
    prop_assert!(report.single_dipped, "gamma {gamma}, n {n}: {:?}", report.violations.first());
    Ok(())
}

pub fn record_strategy() -> impl Strategy<Value = PrecinctRecord> {
    (
        prop_oneof![Just("NY"), Just("PA")],
        prop_oneof![Just(2016), Just(2018), Just(2020)],
        0u32..30,
        0u32..5,
        prop_oneof![0u64..120, 50u64..5000],
        prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0],
        prop::bool::weighted(0.9),
    )
        .prop_map(|(state, year, p, d, votes, share, contested)| PrecinctRecord {
            state: state.into(),
            year,
            precinct_id: format!("p{p}"),
            district_id: format!("d{d}"),
            total_votes: votes,
            rep_share: share,
            contested,
        })
}

/// Filtering the filtered sample drops nothing.
pub fn filter_idempotent(records: Vec<PrecinctRecord>) -> Result<(), TestCaseError> {
    let (once, first) = estimation::apply_filters(records);
    prop_assert_eq!(first.kept, once.len());
    let (twice, report) = estimation::apply_filters(once.clone());
    prop_assert_eq!(report.dropped(), 0);
    prop_assert_eq!(twice, once);
    Ok(())
}

/// `Phi(probit(v)) = v` within 1e-10.
pub fn probit_round_trip(v: f64) -> Result<(), TestCaseError> {
    let w = estimation::probit(v).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(w.is_finite());
    prop_assert!((normal_cdf(w) - v).abs() <= 1e-10, "v = {v}, w = {w}");
    Ok(())
}
