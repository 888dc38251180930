//! Benchmark solutions and heuristic plan families: perfect information, no
//! aggregate uncertainty, no idiosyncratic uncertainty (matching slices), the
//! linear-swing pack-opponents-and-pool first-order condition, and the
//! traditional pack-and-crack and pool plans with scanned cutoffs.

use crate::error::{Error, Result};
use crate::model::{District, Plan, ProblemInstance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Seat share with perfect information when a share `m` of voters supports
/// the designer: crack supporters into bare majorities in `2m` of districts.
pub fn perfect_info_value(m: f64) -> f64 {
    (2.0 * m).clamp(0.0, 1.0)
}

/// A benchmark plan with its cutoff type, the mean type of its top pool and
/// its seat share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub cutoff: f64,
    pub pool_mean: f64,
    pub value: f64,
    pub plan: Option<Plan>,
}

// ---------------------------------------------------------------------------
// no aggregate uncertainty

/// Cutoff of the segregate-below, pool-above plan for known vote shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolCut {
    /// Index of the marginal type, part of whose mass joins the pool.
    pub index: usize,
    /// Share of the marginal type's mass placed in the pool.
    pub fraction: f64,
    /// Pooled mass, which is also the seat share.
    pub value: f64,
}

/// Pools types from the top down for as long as the pool's mean vote share
/// stays at or above one half. `shares` must be nondecreasing in the type
/// order. Returns `None` when the whole population already has a majority.
pub fn pool_cut(weights: &[f64], shares: &[f64]) -> Option<PoolCut> {
    // summed in the loop's order so the loop below reaches the same total
    let total = (0..weights.len()).rev().fold(0.0, |acc, i| acc + weights[i] * (shares[i] - 0.5));
    if total >= 0.0 {
        return None;
    }
    let mut excess = 0.0;
    let mut mass = 0.0;
    for i in (0..weights.len()).rev() {
        let step = weights[i] * (shares[i] - 0.5);
        if excess + step < 0.0 {
            let fraction = (excess / -step).clamp(0.0, 1.0);
            return Some(PoolCut {
                index: i,
                fraction,
                value: mass + fraction * weights[i],
            });
        }
        excess += step;
        mass += weights[i];
    }
    unreachable!("total excess is negative")
}

/// Optimal plan when the aggregate shock is known to equal `r0`: segregate
/// types below a cutoff and pool the rest so that the pool is won by a tie.
pub fn no_aggregate_solution(inst: &ProblemInstance, r0: f64) -> Result<BenchmarkResult> {
    let types = inst.type_grid();
    let weights = inst.type_weights();
    let shares: Vec<f64> = types.iter().map(|&s| inst.vote_share(s, r0)).collect();
    let Some(cut) = pool_cut(weights, &shares) else {
        let plan = Plan::uniform(inst);
        let pool_mean = types.iter().zip(weights).map(|(s, w)| s * w).sum();
        return Ok(BenchmarkResult { cutoff: types[0], pool_mean, value: 1.0, plan: Some(plan) });
    };
    let plan = cut_plan(types, weights, cut)?;
    let pool_mean = plan.districts.last().map(|d| d.district.mean_type()).unwrap_or(types[cut.index]);
    Ok(BenchmarkResult {
        cutoff: types[cut.index],
        pool_mean,
        value: cut.value,
        plan: Some(plan),
    })
}

fn cut_plan(types: &[f64], weights: &[f64], cut: PoolCut) -> Result<Plan> {
    let mut plan = Plan::default();
    for i in 0..cut.index {
        plan.push(District::point(types[i]), weights[i]);
    }
    plan.push(District::point(types[cut.index]), (1.0 - cut.fraction) * weights[cut.index]);
    let mut pool = vec![(types[cut.index], cut.fraction * weights[cut.index])];
    pool.extend((cut.index + 1..types.len()).map(|i| (types[i], weights[i])));
    pool.retain(|&(_, w)| w > 0.0);
    let mass: f64 = pool.iter().map(|&(_, w)| w).sum();
    if mass > 0.0 {
        plan.push(District::from_masses(pool)?, mass);
    }
    Ok(plan)
}

/// Best plan among the no-aggregate-uncertainty solutions for targets
/// `r0` in `targets`, valued under the instance's own shock distribution.
///
/// Segregated types win with probability `G(s)` and the pool with
/// probability `G(r0)`. As the aggregate shock vanishes this family
/// attains the optimum.
pub fn best_no_aggregate_plan(inst: &ProblemInstance, targets: &[f64]) -> Result<BenchmarkResult> {
    let candidates: Vec<Result<BenchmarkResult>> = targets
        .par_iter()
        .map(|&r0| {
            let mut res = no_aggregate_solution(inst, r0)?;
            res.value = inst.plan_value_unchecked(res.plan.as_ref().expect("plan"))?;
            Ok(res)
        })
        .collect();
    let mut best: Option<BenchmarkResult> = None;
    for c in candidates {
        let c = c?;
        if best.as_ref().is_none_or(|b| c.value > b.value) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| Error::InvalidInstance("no targets".into()))
}

// ---------------------------------------------------------------------------
// type distributions for the closed forms

/// Population distribution of types for the continuous benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TypeDistribution {
    Uniform { lo: f64, hi: f64 },
    Discrete { types: Vec<f64>, weights: Vec<f64> },
}

impl TypeDistribution {
    pub fn of_instance(inst: &ProblemInstance) -> Self {
        TypeDistribution::Discrete {
            types: inst.type_grid().to_vec(),
            weights: inst.type_weights().to_vec(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            TypeDistribution::Uniform { lo, hi } => (*lo, *hi),
            TypeDistribution::Discrete { types, .. } => (types[0], types[types.len() - 1]),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            TypeDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            TypeDistribution::Discrete { types, weights } => types.iter().zip(weights).map(|(s, w)| s * w).sum(),
        }
    }

    /// Value of the pool-above-`c` plan under district value `u`:
    /// `int_{s < c} U(s) dF + U(E[s | s >= c]) (1 - F(c))`. For discrete
    /// distributions `c` is matched to the nearest type at or above it.
    pub fn pool_value(&self, u: &dyn Fn(f64) -> f64, c: f64) -> (f64, f64) {
        match self {
            TypeDistribution::Uniform { lo, hi } => {
                let c = c.clamp(*lo, *hi);
                let width = hi - lo;
                let below = simpson(u, *lo, c, 2000) / width;
                let above = (hi - c) / width;
                let x = 0.5 * (c + hi);
                (below + if above > 0.0 { u(x) * above } else { 0.0 }, x)
            }
            TypeDistribution::Discrete { types, weights } => {
                let mut below = 0.0;
                let (mut mass, mut first) = (0.0, 0.0);
                for (&s, &w) in types.iter().zip(weights) {
                    if s < c - 1e-12 {
                        below += w * u(s);
                    } else {
                        mass += w;
                        first += w * s;
                    }
                }
                if mass > 0.0 {
                    let x = first / mass;
                    (below + u(x) * mass, x)
                } else {
                    (below, types[types.len() - 1])
                }
            }
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

// ---------------------------------------------------------------------------
// no idiosyncratic uncertainty

/// Seat share of matching slices when vote shares are deterministic:
/// `int (1 - H*(r)) dG(r)`, where `H*` is the distribution of district
/// thresholds (the upper types above the median). Written as
/// `int_{1/2}^1 2 G(F^-1(u)) du`, which only needs the CDF of `G` and so
/// also covers degenerate shock distributions.
pub fn no_idiosyncratic_value(f: &TypeDistribution, g_cdf: impl Fn(f64) -> f64) -> f64 {
    match f {
        TypeDistribution::Uniform { lo, hi } => {
            let n = 20_000;
            let du = 0.5 / n as f64;
            (0..n)
                .map(|j| {
                    let u = 0.5 + (j as f64 + 0.5) * du;
                    2.0 * g_cdf(lo + u * (hi - lo)) * du
                })
                .sum()
        }
        TypeDistribution::Discrete { types, weights } => {
            let mut remaining = 0.5 * weights.iter().sum::<f64>();
            let mut value = 0.0;
            for (&s, &w) in types.iter().zip(weights).rev() {
                let take = w.min(remaining);
                value += 2.0 * take * g_cdf(s);
                remaining -= take;
                if remaining <= 0.0 {
                    break;
                }
            }
            value
        }
    }
}

/// Pairs quantile `u` with quantile `1 - u` in equal proportions; the median
/// type meeting itself forms a point district.
pub fn matching_slices_plan(inst: &ProblemInstance) -> Result<Plan> {
    let types = inst.type_grid();
    let mut left = inst.type_weights().to_vec();
    let mut plan = Plan::default();
    let (mut lo, mut hi) = (0usize, types.len() - 1);
    while lo < hi {
        let m = left[lo].min(left[hi]);
        if m > 0.0 {
            plan.push(District::new(vec![(types[lo], 0.5), (types[hi], 0.5)])?, 2.0 * m);
        }
        left[lo] -= m;
        left[hi] -= m;
        if left[lo] <= 1e-15 {
            lo += 1;
        }
        if left[hi] <= 1e-15 && hi > lo {
            hi -= 1;
        }
    }
    if lo == hi && left[lo] > 1e-15 {
        plan.push(District::point(types[lo]), left[lo]);
    }
    Ok(plan)
}

/// Seat share of a plan when every voter of type `s` votes for the designer
/// iff `s >= r` (no idiosyncratic shock). A district's threshold is then its
/// highest type whose upper tail holds at least half the district; ties are
/// won.
pub fn step_vote_value(plan: &Plan, g_cdf: impl Fn(f64) -> f64) -> f64 {
    plan.districts
        .iter()
        .map(|d| {
            let mut tail = 0.0;
            let mut r = d.district.type_range().0;
            for &(s, w) in d.district.support().iter().rev() {
                tail += w;
                if tail >= 0.5 - 1e-12 {
                    r = s;
                    break;
                }
            }
            d.mass * g_cdf(r)
        })
        .sum()
}

// ---------------------------------------------------------------------------
// pack-and-crack families

/// Types below `s_star` segregated, the rest pooled into one district.
pub fn pop_pool_plan(inst: &ProblemInstance, s_star: f64) -> Result<Plan> {
    let mut plan = Plan::default();
    let mut pool = Vec::new();
    for (&s, &w) in inst.type_grid().iter().zip(inst.type_weights()) {
        if s < s_star - 1e-12 {
            plan.push(District::point(s), w);
        } else {
            pool.push((s, w));
        }
    }
    push_pool(&mut plan, pool)?;
    Ok(plan)
}

/// Two pools: types below `s_star` and types at or above it.
pub fn traditional_pc_plan(inst: &ProblemInstance, s_star: f64) -> Result<Plan> {
    let mut plan = Plan::default();
    let (below, above): (Vec<(f64, f64)>, Vec<(f64, f64)>) = inst
        .type_grid()
        .iter()
        .copied()
        .zip(inst.type_weights().iter().copied())
        .partition(|&(s, _)| s < s_star - 1e-12);
    push_pool(&mut plan, below)?;
    push_pool(&mut plan, above)?;
    Ok(plan)
}

fn push_pool(plan: &mut Plan, pool: Vec<(f64, f64)>) -> Result<()> {
    let pool: Vec<(f64, f64)> = pool.into_iter().filter(|&(_, w)| w > 0.0).collect();
    let mass: f64 = pool.iter().map(|&(_, w)| w).sum();
    if mass > 0.0 {
        plan.push(District::from_masses(pool)?, mass);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanFamily {
    TraditionalPackAndCrack,
    PackOpponentsAndPool,
}

impl PlanFamily {
    pub fn plan(self, inst: &ProblemInstance, s_star: f64) -> Result<Plan> {
        match self {
            PlanFamily::TraditionalPackAndCrack => traditional_pc_plan(inst, s_star),
            PlanFamily::PackOpponentsAndPool => pop_pool_plan(inst, s_star),
        }
    }
}

/// Scans every grid type as the cutoff and keeps the best plan of the family.
pub fn optimize_cutoff(inst: &ProblemInstance, family: PlanFamily) -> Result<BenchmarkResult> {
    let scored: Vec<Result<(f64, f64, Plan)>> = inst
        .type_grid()
        .par_iter()
        .map(|&c| {
            let plan = family.plan(inst, c)?;
            let value = inst.plan_value_unchecked(&plan)?;
            Ok((c, value, plan))
        })
        .collect();
    let mut best: Option<(f64, f64, Plan)> = None;
    for s in scored {
        let s = s?;
        if best.as_ref().is_none_or(|b| s.1 > b.1) {
            best = Some(s);
        }
    }
    let (cutoff, value, plan) = best.ok_or_else(|| Error::InvalidInstance("empty type grid".into()))?;
    let pool_mean = plan.districts.last().map(|d| d.district.mean_type()).unwrap_or(cutoff);
    Ok(BenchmarkResult { cutoff, pool_mean, value, plan: Some(plan) })
}

// ---------------------------------------------------------------------------
// linear swing

/// Curvature pattern of a district value function `U(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape {
    Linear,
    Convex,
    Concave,
    /// Convex below the inflection point, concave above.
    SShaped { inflection: f64 },
    Other,
}

/// Value `U(x) = G(r*(x))` of a district as a function of its mean when
/// swings are linear in type.
#[derive(Clone)]
pub struct SShapeProfile {
    u: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
    shape: Shape,
}

impl std::fmt::Debug for SShapeProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SShapeProfile")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("shape", &self.shape)
            .finish()
    }
}

const SHAPE_POINTS: usize = 2001;

impl SShapeProfile {
    /// Checks that `u` is increasing on `[lo, hi]` and reads its curvature
    /// from second differences.
    pub fn new(u: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidInstance(format!("empty profile domain [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (SHAPE_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..SHAPE_POINTS).map(|i| lo + i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| u(x)).collect();
        if ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInstance("district value profile is not increasing".into()));
        }
        let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1e-300);
        let eps = 1e-10 * scale;
        let curv: Vec<i8> = ys
            .windows(3)
            .map(|w| {
                let d2 = w[0] - 2.0 * w[1] + w[2];
                if d2 > eps {
                    1
                } else if d2 < -eps {
                    -1
                } else {
                    0
                }
            })
            .collect();
        let shape = classify_curvature(&curv, &xs[1..xs.len() - 1]);
        Ok(SShapeProfile { u: Arc::new(u), lo, hi, shape })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn inflection(&self) -> Option<f64> {
        match self.shape {
            Shape::SShaped { inflection } => Some(inflection),
            _ => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.u)(x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        let h = 1e-6 * (self.hi - self.lo);
        ((self.u)(x + h) - (self.u)(x - h)) / (2.0 * h)
    }
}

fn classify_curvature(curv: &[i8], xs: &[f64]) -> Shape {
    let has_pos = curv.contains(&1);
    let has_neg = curv.contains(&-1);
    match (has_pos, has_neg) {
        (false, false) => Shape::Linear,
        (true, false) => Shape::Convex,
        (false, true) => Shape::Concave,
        (true, true) => {
            let last_pos = curv.iter().rposition(|&c| c == 1).unwrap();
            let first_neg = curv.iter().position(|&c| c == -1).unwrap();
            if last_pos < first_neg {
                Shape::SShaped { inflection: 0.5 * (xs[last_pos] + xs[first_neg]) }
            } else {
                Shape::Other
            }
        }
    }
}

/// Optimal pack-opponents-and-pool cutoff under linear swings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopFoc {
    pub s_star: f64,
    pub x_star: f64,
    pub value: f64,
    /// False when the best cutoff is a boundary (uniform districting or full
    /// segregation) rather than a root of the first-order condition.
    pub interior: bool,
}

/// Solves `u(x*)(x* - s*) = U(x*) - U(s*)` with `x* = E[s | s >= s*]` and
/// returns the best of its roots and the two boundary plans.
pub fn linear_pop_foc(profile: &SShapeProfile, f: &TypeDistribution) -> PopFoc {
    let u = |x: f64| profile.value(x);
    let (lo, hi) = f.support();
    let evaluate = |c: f64| {
        let (v, x) = f.pool_value(&u, c);
        (v, x)
    };
    let (v_lo, x_lo) = evaluate(lo);
    let seg = evaluate(hi + 1.0);
    let mut best = PopFoc { s_star: lo, x_star: x_lo, value: v_lo, interior: false };
    if seg.0 > best.value {
        best = PopFoc { s_star: hi, x_star: hi, value: seg.0, interior: false };
    }
    let candidates: Vec<f64> = match f {
        TypeDistribution::Uniform { .. } => {
            let foc = |c: f64| {
                let x = 0.5 * (c + hi);
                u(x) - u(c) - profile.slope(x) * (x - c)
            };
            let n = 1000;
            let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
            let mut roots = Vec::new();
            for w in grid.windows(2) {
                let (a, b) = (foc(w[0]), foc(w[1]));
                if a == 0.0 {
                    roots.push(w[0]);
                } else if a * b < 0.0 {
                    roots.push(bisect(&foc, w[0], w[1]));
                }
            }
            roots
        }
        TypeDistribution::Discrete { types, .. } => types[1..].to_vec(),
    };
    for c in candidates {
        let (v, x) = evaluate(c);
        if v > best.value + 1e-15 {
            best = PopFoc { s_star: c, x_star: x, value: v, interior: true };
        }
    }
    best
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) < 1e-13 {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// True iff `v(s, r)` is affine in `s` on the grid for every `r`, judged
/// against the interpolation between the extreme types within 1e-9.
pub fn check_linearity(v: impl Fn(f64, f64) -> f64, s_grid: &[f64], r_grid: &[f64]) -> bool {
    let (Some(&lo), Some(&hi)) = (s_grid.first(), s_grid.last()) else {
        return true;
    };
    if hi <= lo {
        return true;
    }
    r_grid.iter().all(|&r| {
        let (a, b) = (v(lo, r), v(hi, r));
        s_grid.iter().all(|&s| {
            let t = (s - lo) / (hi - lo);
            (v(s, r) - (a + t * (b - a))).abs() <= 1e-9
        })
    })
}

/// [`check_linearity`] for an instance's vote shares, with thresholds at the
/// type grid.
pub fn check_instance_linearity(inst: &ProblemInstance) -> bool {
    check_linearity(|s, r| inst.vote_share(s, r), inst.type_grid(), inst.type_grid())
}
