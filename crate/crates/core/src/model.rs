//! The electoral model: voter types, vote shares, district thresholds and
//! plan evaluation.
//!
//! A voter of type `s` votes for the designer with probability
//! `v(s, r) = Q(s - r)` when the aggregate shock is `r`. A district `P` (a
//! distribution over types) is won iff `r <= r*(P)`, where `r*(P)` solves
//! `sum_s P(s) v(s, r) = 1/2`. Ties at exactly one half count as wins. The
//! aggregate shock has CDF `G(r) = Q(gamma * r)`.

use crate::error::{Error, Result};
use crate::taste::{Taste, TasteShock};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Tolerance on the mean vote share at a computed threshold.
pub const ROOT_TOL: f64 = 1e-10;
/// Default tolerance on per-type mass when checking plan feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Tolerance on probability masses summing to one.
pub const MASS_SUM_TOL: f64 = 1e-12;
/// Half-width added beyond the support when bracketing `r*(P)`.
pub const BRACKET_PAD: f64 = 40.0;
const MAX_BISECTION_ITERS: usize = 400;
/// Tolerance used to match a plan's support points to grid types.
const GRID_MATCH_TOL: f64 = 1e-9;

/// One designer problem: a discretized type distribution `F`, the taste law
/// `Q` and the uncertainty ratio `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceSpec", into = "InstanceSpec")]
pub struct ProblemInstance {
    type_grid: Vec<f64>,
    type_weights: Vec<f64>,
    taste: Taste,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceSpec {
    type_grid: Vec<f64>,
    type_weights: Vec<f64>,
    #[serde(default)]
    taste: Taste,
    gamma: f64,
}

impl TryFrom<InstanceSpec> for ProblemInstance {
    type Error = Error;

    fn try_from(spec: InstanceSpec) -> Result<Self> {
        ProblemInstance::new(spec.type_grid, spec.type_weights, spec.taste, spec.gamma)
    }
}

impl From<ProblemInstance> for InstanceSpec {
    fn from(inst: ProblemInstance) -> Self {
        InstanceSpec {
            type_grid: inst.type_grid,
            type_weights: inst.type_weights,
            taste: inst.taste,
            gamma: inst.gamma,
        }
    }
}

impl ProblemInstance {
    pub fn new(type_grid: Vec<f64>, type_weights: Vec<f64>, taste: Taste, gamma: f64) -> Result<Self> {
        if type_grid.is_empty() {
            return Err(Error::InvalidInstance("type grid is empty".into()));
        }
        if type_grid.len() != type_weights.len() {
            return Err(Error::InvalidInstance(format!(
                "grid has {} points but {} weights",
                type_grid.len(),
                type_weights.len()
            )));
        }
        if type_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInstance("non-finite voter type".into()));
        }
        if type_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInstance("type grid must be strictly increasing".into()));
        }
        if type_weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInstance("type weights must be nonnegative".into()));
        }
        let total: f64 = type_weights.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidInstance(format!("type weights sum to {total}, not 1")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInstance(format!("gamma must be positive, got {gamma}")));
        }
        Ok(ProblemInstance { type_grid, type_weights, taste, gamma })
    }

    /// `n` equally weighted types spaced uniformly on `[lo, hi]`.
    pub fn uniform(n: usize, lo: f64, hi: f64, taste: Taste, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("grid needs at least one point".into()));
        }
        let grid = uniform_grid(n, lo, hi);
        let weights = vec![1.0 / n as f64; n];
        Self::new(grid, weights, taste, gamma)
    }

    /// The default instance: 201 types uniform on `[-1, 1]`, normal taste shocks.
    pub fn default_with_gamma(gamma: f64) -> Result<Self> {
        Self::uniform(201, -1.0, 1.0, Taste::Normal, gamma)
    }

    pub fn type_grid(&self) -> &[f64] {
        &self.type_grid
    }

    pub fn type_weights(&self) -> &[f64] {
        &self.type_weights
    }

    pub fn taste(&self) -> Taste {
        self.taste
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.type_grid.clone(), self.type_weights.clone(), self.taste, gamma)
    }

    pub fn len(&self) -> usize {
        self.type_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.type_grid.is_empty()
    }

    pub fn lowest_type(&self) -> f64 {
        self.type_grid[0]
    }

    pub fn highest_type(&self) -> f64 {
        self.type_grid[self.type_grid.len() - 1]
    }

    /// `v(s, r) = Q(s - r)`.
    pub fn vote_share(&self, s: f64, r: f64) -> f64 {
        self.taste.cdf(s - r)
    }

    /// `dv/dr = -q(s - r)`.
    pub fn vote_share_dr(&self, s: f64, r: f64) -> f64 {
        -self.taste.pdf(s - r)
    }

    /// `G(r) = Q(gamma r)`.
    pub fn aggregate_cdf(&self, r: f64) -> f64 {
        self.taste.cdf(self.gamma * r)
    }

    /// `g(r) = gamma q(gamma r)`.
    pub fn aggregate_pdf(&self, r: f64) -> f64 {
        self.gamma * self.taste.pdf(self.gamma * r)
    }

    /// Index of the grid type equal to `s`, if any.
    pub fn grid_index(&self, s: f64) -> Option<usize> {
        let idx = self.type_grid.partition_point(|&t| t < s - GRID_MATCH_TOL);
        (idx < self.type_grid.len() && (self.type_grid[idx] - s).abs() <= GRID_MATCH_TOL).then_some(idx)
    }

    /// Mean vote share of district `p` at shock `r`.
    pub fn mean_vote_share(&self, p: &District, r: f64) -> f64 {
        p.support.iter().map(|&(s, w)| w * self.vote_share(s, r)).sum()
    }

    /// The winning threshold `r*(P)`.
    pub fn district_threshold(&self, p: &District) -> Result<f64> {
        district_threshold_with(p, |s, r| self.vote_share(s, r))
    }

    /// Expected seat share `sum_P mass(P) G(r*(P))` of a feasible plan.
    pub fn expected_seat_share(&self, plan: &Plan) -> Result<f64> {
        let report = self.check_feasibility(plan, FEASIBILITY_TOL);
        if !report.feasible {
            return Err(Error::InfeasiblePlan {
                deviation: report.max_deviation,
                tolerance: FEASIBILITY_TOL,
            });
        }
        self.plan_value_unchecked(plan)
    }

    /// Seat share without the feasibility check. Useful for plans over a
    /// different type distribution than this instance's grid.
    pub fn plan_value_unchecked(&self, plan: &Plan) -> Result<f64> {
        let terms: Vec<f64> = plan
            .districts
            .par_iter()
            .map(|d| self.district_threshold(&d.district).map(|r| d.mass * self.aggregate_cdf(r)))
            .collect::<Result<_>>()?;
        Ok(terms.iter().sum::<f64>().clamp(0.0, 1.0))
    }

    /// Per-type deviation between the plan's aggregated type mass and `F`.
    pub fn check_feasibility(&self, plan: &Plan, tolerance: f64) -> FeasibilityReport {
        let mut aggregated = vec![0.0; self.len()];
        let mut off_grid_mass = 0.0;
        for d in &plan.districts {
            for &(s, w) in &d.district.support {
                match self.grid_index(s) {
                    Some(i) => aggregated[i] += d.mass * w,
                    None => off_grid_mass += d.mass * w,
                }
            }
        }
        let deviations: Vec<f64> = aggregated
            .iter()
            .zip(&self.type_weights)
            .map(|(a, f)| a - f)
            .collect();
        let max_deviation = deviations
            .iter()
            .map(|d| d.abs())
            .fold(off_grid_mass, f64::max);
        FeasibilityReport {
            feasible: max_deviation <= tolerance,
            deviations,
            off_grid_mass,
            max_deviation,
        }
    }

    /// Assumption-1 diagnostics for this instance's taste law.
    pub fn check_assumption1(&self, s_grid: &[f64], r_grid: &[f64]) -> Assumption1Report {
        check_assumption1(&self.taste, s_grid, r_grid)
    }
}

/// `n` points spaced uniformly on `[lo, hi]` (both ends included).
pub fn uniform_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let m = (n - 1) as f64;
    // weighted endpoints rather than lo + i * step: each point is the
    // nearest double to its exact value when lo and hi are integers
    (0..n)
        .map(|i| {
            let t = i as f64;
            (lo * (m - t) + hi * t) / m
        })
        .collect()
}

/// Threshold for an arbitrary vote-share function decreasing in `r`.
pub fn district_threshold_with<V>(p: &District, v: V) -> Result<f64>
where
    V: Fn(f64, f64) -> f64,
{
    if let [(s, _)] = p.support.as_slice() {
        return Ok(*s);
    }
    let (lo_s, hi_s) = p.type_range();
    let mean = |r: f64| p.support.iter().map(|&(s, w)| w * v(s, r)).sum::<f64>() - 0.5;
    let mut lo = lo_s - BRACKET_PAD;
    let mut hi = hi_s + BRACKET_PAD;
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let m = mean(mid);
        if m == 0.0 {
            return Ok(mid);
        }
        if m > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
            let r = 0.5 * (lo + hi);
            if mean(r).abs() <= ROOT_TOL {
                return Ok(r);
            }
        }
    }
    let r = 0.5 * (lo + hi);
    if mean(r).abs() <= ROOT_TOL {
        Ok(r)
    } else {
        Err(Error::NoConvergence { iterations: MAX_BISECTION_ITERS })
    }
}

/// A district: a finite distribution over voter types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct District {
    support: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for District {
    type Error = Error;

    fn try_from(support: Vec<(f64, f64)>) -> Result<Self> {
        District::new(support)
    }
}

impl From<District> for Vec<(f64, f64)> {
    fn from(d: District) -> Self {
        d.support
    }
}

impl District {
    /// Builds a district from `(type, weight)` pairs. Weights must be
    /// positive and sum to one; entries are sorted by type and duplicate
    /// types merged.
    pub fn new(mut support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistrict("empty support".into()));
        }
        if support.iter().any(|&(s, w)| !s.is_finite() || !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidDistrict("weights must be positive and types finite".into()));
        }
        let total: f64 = support.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidDistrict(format!("weights sum to {total}, not 1")));
        }
        support.sort_by(|a, b| a.0.total_cmp(&b.0));
        support.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(District { support })
    }

    /// Normalizes arbitrary positive masses into a district.
    pub fn from_masses(masses: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = masses.iter().map(|&(_, m)| m).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistrict("total mass must be positive".into()));
        }
        District::new(masses.into_iter().map(|(s, m)| (s, m / total)).collect())
    }

    /// The degenerate district `delta_s`.
    pub fn point(s: f64) -> Self {
        District { support: vec![(s, 1.0)] }
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn is_degenerate(&self) -> bool {
        self.support.len() == 1
    }

    pub fn type_range(&self) -> (f64, f64) {
        (self.support[0].0, self.support[self.support.len() - 1].0)
    }

    pub fn mean_type(&self) -> f64 {
        self.support.iter().map(|&(s, w)| s * w).sum()
    }
}

/// A district together with the measure of districts of that composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDistrict {
    #[serde(rename = "support")]
    pub district: District,
    pub mass: f64,
}

/// A districting plan: a finite distribution over districts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub districts: Vec<PlanDistrict>,
}

impl Plan {
    pub fn new(districts: Vec<PlanDistrict>) -> Self {
        Plan { districts }
    }

    pub fn push(&mut self, district: District, mass: f64) {
        if mass > 0.0 {
            self.districts.push(PlanDistrict { district, mass });
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.districts.iter().map(|d| d.mass).sum()
    }

    pub fn len(&self) -> usize {
        self.districts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.districts.is_empty()
    }

    /// Uniform districting: every district replicates `F`.
    pub fn uniform(inst: &ProblemInstance) -> Self {
        let masses = inst
            .type_grid()
            .iter()
            .zip(inst.type_weights())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&s, &w)| (s, w))
            .collect();
        let district = District::from_masses(masses).expect("instance weights are valid");
        Plan::new(vec![PlanDistrict { district, mass: 1.0 }])
    }

    /// Full segregation: one homogeneous district per type.
    pub fn segregation(inst: &ProblemInstance) -> Self {
        let mut plan = Plan::default();
        for (&s, &w) in inst.type_grid().iter().zip(inst.type_weights()) {
            plan.push(District::point(s), w);
        }
        plan
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Outcome of a plan feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Aggregated minus population mass, per grid type.
    pub deviations: Vec<f64>,
    /// Mass placed on types that are not on the instance grid.
    pub off_grid_mass: f64,
    pub max_deviation: f64,
}

/// Result of the swingy-moderates check on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumption1Report {
    /// `(ln q)'' < 0` at every evaluated taste-shock value.
    pub holds: bool,
    /// Largest `(ln q)''` seen; negative iff `holds`.
    pub worst_margin: f64,
    pub worst_at: f64,
    /// `dv/dr` is single-dipped in `s` for every grid shock.
    pub dv_dr_single_dipped: bool,
}

/// Checks strict log-concavity of `q` on all differences `s - r` of the grids,
/// and single-dippedness of `s -> dv(s, r)/dr` for each `r`.
pub fn check_assumption1<T: TasteShock + ?Sized>(taste: &T, s_grid: &[f64], r_grid: &[f64]) -> Assumption1Report {
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_at = f64::NAN;
    for &s in s_grid {
        for &r in r_grid {
            let t = s - r;
            let c = taste.log_pdf_second_derivative(t);
            if c > worst_margin || c.is_nan() {
                worst_margin = if c.is_nan() { f64::INFINITY } else { c };
                worst_at = t;
            }
        }
    }
    let dv_dr_single_dipped = r_grid.iter().all(|&r| {
        let slope: Vec<f64> = s_grid.iter().map(|&s| -taste.pdf(s - r)).collect();
        is_single_dipped(&slope)
    });
    Assumption1Report {
        holds: worst_margin < 0.0,
        worst_margin,
        worst_at,
        dv_dr_single_dipped,
    }
}

/// Weakly decreasing then weakly increasing, with no flat plateau at the
/// dip other than a single tie.
fn is_single_dipped(values: &[f64]) -> bool {
    let mut rising = false;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            rising = true;
        } else if d < 0.0 && rising {
            return false;
        }
    }
    true
}
