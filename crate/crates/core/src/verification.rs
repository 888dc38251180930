//! Structural checks on solved plans and on the characterization results:
//! single-dippedness, the pack-and-pair decomposition and regime labels,
//! dual-certificate optimality conditions, the pack-and-pair grid
//! condition, the Y-districting necessary conditions, and the
//! pool-versus-separate comparisons behind segregation and negative
//! assortative districting.

use crate::lp::{assignment_gain, AssignmentMatrix, DualCertificate, SUPPORT_TOL};
use crate::model::{District, ProblemInstance};
use crate::taste::{Taste, TasteShock};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A type is "split" when both its segregated and paired shares exceed this
/// fraction of its population mass.
pub const SPLIT_FRACTION: f64 = 0.01;
/// A plan counts as mixed when split types make up at least this share of the
/// types that are ever segregated. Isolated splits at the edge of a block are
/// vertex artifacts of the grid LP; a mixing region splits a recurring share.
pub const MIXED_REGION_SHARE: f64 = 0.10;
/// Largest index gap allowed between consecutive types of one block of a
/// paired column.
const MAX_BLOCK_GAP: usize = 2;

/// Regime of a pack-and-pair plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    Segregation,
    NegativeAssortative,
    PMP,
    MixedPMP,
    MixedPOP,
    POP,
    OtherY,
    NotPackAndPair,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::Segregation => "Segregation",
            RegimeLabel::NegativeAssortative => "NegativeAssortative",
            RegimeLabel::PMP => "PMP",
            RegimeLabel::MixedPMP => "MixedPMP",
            RegimeLabel::MixedPOP => "MixedPOP",
            RegimeLabel::POP => "POP",
            RegimeLabel::OtherY => "OtherY",
            RegimeLabel::NotPackAndPair => "NotPackAndPair",
        }
    }

    /// Mixed pack-and-pair regimes (Y-districting).
    pub fn is_y(&self) -> bool {
        matches!(self, RegimeLabel::MixedPMP | RegimeLabel::MixedPOP | RegimeLabel::OtherY)
    }
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegimeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = [
            RegimeLabel::Segregation,
            RegimeLabel::NegativeAssortative,
            RegimeLabel::PMP,
            RegimeLabel::MixedPMP,
            RegimeLabel::MixedPOP,
            RegimeLabel::POP,
            RegimeLabel::OtherY,
            RegimeLabel::NotPackAndPair,
        ];
        all.into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown regime `{s}`"))
    }
}

// ---------------------------------------------------------------------------
// single-dippedness

/// A triple `s < s' < s''` where `s, s''` share a district with threshold `r`
/// while `s'` sits in a stronger district `r' > r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleDipViolation {
    pub s: f64,
    pub s_mid: f64,
    pub s_high: f64,
    pub r: f64,
    pub r_mid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleDipReport {
    pub single_dipped: bool,
    pub violations: Vec<SingleDipViolation>,
}

/// Checks strict single-dippedness of an assignment. Entries at or below
/// `tol_mass` are ignored; `r' > r + tol_rank` is required for a violation.
pub fn check_single_dipped(a: &AssignmentMatrix, tol_mass: f64, tol_rank: f64) -> SingleDipReport {
    let ns = a.n_types();
    let nr = a.n_thresholds();
    // strongest threshold each type is assigned to
    let strongest: Vec<Option<usize>> = (0..ns)
        .map(|i| (0..nr).rev().find(|&k| a.get(i, k) > tol_mass))
        .collect();
    let mut violations = Vec::new();
    for k in 0..nr {
        let members: Vec<usize> = (0..ns).filter(|&i| a.get(i, k) > tol_mass).collect();
        let (Some(&lo), Some(&hi)) = (members.first(), members.last()) else {
            continue;
        };
        let r = a.threshold_grid[k];
        for j in lo + 1..hi {
            if let Some(kj) = strongest[j] {
                let r_mid = a.threshold_grid[kj];
                if r_mid > r + tol_rank {
                    violations.push(SingleDipViolation {
                        s: a.type_grid[lo],
                        s_mid: a.type_grid[j],
                        s_high: a.type_grid[hi],
                        r,
                        r_mid,
                    });
                }
            }
        }
    }
    SingleDipReport {
        single_dipped: violations.is_empty(),
        violations,
    }
}

// ---------------------------------------------------------------------------
// pack-and-pair decomposition

/// Bifurcation point and pairing maps of a pack-and-pair assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackAndPairDecomposition {
    /// Largest grid threshold below every paired district.
    pub r_b: f64,
    /// `(r, s1(r))`: mass-weighted lower member of each paired column.
    pub s1: Vec<(f64, f64)>,
    /// `(r, s2(r))`: mass-weighted upper member of each paired column.
    pub s2: Vec<(f64, f64)>,
    /// Thresholds of segregated (single-type) districts.
    pub segregated: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NotPackAndPair {
    pub reason: String,
    /// Offending threshold column, when there is one.
    pub threshold: Option<f64>,
}

impl std::fmt::Display for NotPackAndPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.threshold {
            Some(r) => write!(f, "{} (threshold {r})", self.reason),
            None => f.write_str(&self.reason),
        }
    }
}

fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

/// Active type indices of column `k`.
fn column_members(a: &AssignmentMatrix, k: usize) -> Vec<usize> {
    (0..a.n_types()).filter(|&i| a.get(i, k) > SUPPORT_TOL).collect()
}

fn is_degenerate_column(a: &AssignmentMatrix, k: usize, members: &[usize]) -> bool {
    members.iter().all(|&i| same_point(a.type_grid[i], a.threshold_grid[k]))
}

fn grid_step(grid: &[f64]) -> f64 {
    grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Reads the bifurcation point and the pairing maps off an assignment.
///
/// Columns holding only their own type are segregated districts. Every other
/// active column must split into one block of types below its threshold and
/// one block above; on the grid a block may cover several adjacent types,
/// which stand in for the continuum partner `s1(r)` or `s2(r)`.
pub fn decompose_pack_and_pair(a: &AssignmentMatrix) -> Result<PackAndPairDecomposition, NotPackAndPair> {
    let nr = a.n_thresholds();
    let type_step = grid_step(&a.type_grid);
    let thr_step = grid_step(&a.threshold_grid);
    let mut segregated = Vec::new();
    let mut paired = Vec::new();
    for k in 0..nr {
        let members = column_members(a, k);
        if members.is_empty() || a.column_mass(k) <= SUPPORT_TOL {
            continue;
        }
        if is_degenerate_column(a, k, &members) {
            segregated.push(k);
        } else {
            paired.push((k, members));
        }
    }
    let r_b = match paired.first() {
        None => a.threshold_grid[nr - 1],
        Some(&(k0, _)) if k0 > 0 => a.threshold_grid[k0 - 1],
        Some(_) => a.type_grid[0],
    };
    if let Some(&k) = segregated.iter().find(|&&k| a.threshold_grid[k] > r_b + thr_step * 1.000_001) {
        return Err(NotPackAndPair {
            reason: "segregated district stronger than a paired district".into(),
            threshold: Some(a.threshold_grid[k]),
        });
    }
    let mut s1 = Vec::with_capacity(paired.len());
    let mut s2 = Vec::with_capacity(paired.len());
    for (k, members) in &paired {
        let r = a.threshold_grid[*k];
        let lower: Vec<usize> = members.iter().copied().filter(|&i| a.type_grid[i] < r - 1e-9).collect();
        let upper: Vec<usize> = members.iter().copied().filter(|&i| a.type_grid[i] > r + 1e-9).collect();
        if lower.is_empty() || upper.is_empty() {
            return Err(NotPackAndPair {
                reason: "paired column lacks types on both sides of its threshold".into(),
                threshold: Some(r),
            });
        }
        for block in [&lower, &upper] {
            if block.windows(2).any(|w| w[1] - w[0] > MAX_BLOCK_GAP) {
                return Err(NotPackAndPair {
                    reason: "column pools more than two separated groups of types".into(),
                    threshold: Some(r),
                });
            }
        }
        let mean = |block: &[usize]| {
            let m: f64 = block.iter().map(|&i| a.get(i, *k)).sum();
            block.iter().map(|&i| a.get(i, *k) * a.type_grid[i]).sum::<f64>() / m
        };
        s1.push((r, mean(&lower)));
        s2.push((r, mean(&upper)));
    }
    let slack = type_step * 1.000_001;
    for w in s1.windows(2) {
        if w[1].1 > w[0].1 + slack {
            return Err(NotPackAndPair {
                reason: "lower pairing map is not decreasing".into(),
                threshold: Some(w[1].0),
            });
        }
    }
    for w in s2.windows(2) {
        if w[1].1 < w[0].1 - slack {
            return Err(NotPackAndPair {
                reason: "upper pairing map is not increasing".into(),
                threshold: Some(w[1].0),
            });
        }
    }
    Ok(PackAndPairDecomposition {
        r_b,
        s1,
        s2,
        segregated: segregated.iter().map(|&k| a.threshold_grid[k]).collect(),
    })
}

/// Share of each type's mass placed in segregated districts and in paired
/// districts.
pub fn segregation_shares(a: &AssignmentMatrix) -> Vec<(f64, f64)> {
    let degenerate: Vec<bool> = (0..a.n_thresholds())
        .map(|k| {
            let members = column_members(a, k);
            !members.is_empty() && is_degenerate_column(a, k, &members)
        })
        .collect();
    (0..a.n_types())
        .map(|i| {
            let total = a.row_sum(i);
            if total <= 0.0 {
                return (0.0, 0.0);
            }
            let seg: f64 = (0..a.n_thresholds()).filter(|&k| degenerate[k]).map(|k| a.get(i, k)).sum();
            (seg / total, (total - seg) / total)
        })
        .collect()
}

/// Labels a pack-and-pair assignment.
///
/// Pure plans send (almost) every type to one kind of district: POP when the
/// segregated types form a bottom interval, PMP when they form an interior
/// interval, negative assortative when at most one type is segregated. Mixed
/// plans split a recurring share of types between segregation and pairing;
/// they are mixed POP when the lowest types are always segregated and mixed
/// PMP when the lowest types are always paired.
pub fn classify_regime(
    decomposition: &Result<PackAndPairDecomposition, NotPackAndPair>,
    a: &AssignmentMatrix,
) -> RegimeLabel {
    if decomposition.is_err() {
        return RegimeLabel::NotPackAndPair;
    }
    let shares = segregation_shares(a);
    let n = shares.len();
    if shares.iter().all(|&(_, p)| p <= SPLIT_FRACTION) {
        return RegimeLabel::Segregation;
    }
    let split = shares
        .iter()
        .filter(|&&(s, p)| s > SPLIT_FRACTION && p > SPLIT_FRACTION)
        .count();
    let ever_segregated = shares.iter().filter(|&&(s, _)| s > SPLIT_FRACTION).count();
    let mixed = split >= 3 && split as f64 >= MIXED_REGION_SHARE * ever_segregated as f64;
    if mixed {
        let (bottom_seg, bottom_pair) = shares[0];
        return if bottom_seg > 1.0 - SPLIT_FRACTION {
            RegimeLabel::MixedPOP
        } else if bottom_pair > 1.0 - SPLIT_FRACTION {
            RegimeLabel::MixedPMP
        } else {
            RegimeLabel::OtherY
        };
    }
    let segregated: Vec<usize> = (0..n).filter(|&i| shares[i].0 >= 0.5).collect();
    let (Some(&first), Some(&last)) = (segregated.first(), segregated.last()) else {
        return RegimeLabel::NegativeAssortative;
    };
    if last - first + 1 != segregated.len() {
        return RegimeLabel::OtherY;
    }
    match (first == 0, last == n - 1) {
        (true, true) => RegimeLabel::Segregation,
        (true, false) => RegimeLabel::POP,
        (false, false) if segregated.len() == 1 => RegimeLabel::NegativeAssortative,
        (false, false) => RegimeLabel::PMP,
        (false, true) => RegimeLabel::OtherY,
    }
}

/// JSON report shape for structural verification.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub regime: RegimeLabel,
    pub r_b: Option<f64>,
    pub s1: Vec<(f64, f64)>,
    pub s2: Vec<(f64, f64)>,
    pub violations: Vec<String>,
}

impl StructureReport {
    pub fn build(a: &AssignmentMatrix) -> Self {
        let dip = check_single_dipped(a, SUPPORT_TOL, 0.0);
        let decomposition = decompose_pack_and_pair(a);
        let regime = classify_regime(&decomposition, a);
        let mut violations: Vec<String> = dip
            .violations
            .iter()
            .map(|v| {
                format!(
                    "single-dip: types {} < {} < {} with r = {} < r' = {}",
                    v.s, v.s_mid, v.s_high, v.r, v.r_mid
                )
            })
            .collect();
        let (r_b, s1, s2) = match decomposition {
            Ok(d) => (Some(d.r_b), d.s1, d.s2),
            Err(e) => {
                violations.push(format!("pack-and-pair: {e}"));
                (None, Vec::new(), Vec::new())
            }
        };
        StructureReport { regime, r_b, s1, s2, violations }
    }
}

// ---------------------------------------------------------------------------
// dual certificates

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCheckReport {
    /// Largest `gain(s, r') - gain(s, r)` over active `(s, r)` and all `r'`.
    pub part1_worst_slack: f64,
    pub part1_worst_at: Option<(f64, f64, f64)>,
    /// Largest `|lambda(r) - g(r) / int q(s - r) dP|` over active columns.
    pub part2_worst_deviation: f64,
    pub part2_worst_at: Option<f64>,
    pub part1_holds: bool,
    pub part2_holds: bool,
}

impl DualCheckReport {
    pub fn holds(&self) -> bool {
        self.part1_holds && self.part2_holds
    }
}

/// The multiplier that the first-order condition in `r` assigns to a district:
/// `g(r) / int q(s - r) dP(s)`.
pub fn envelope_lambda(inst: &ProblemInstance, p: &District, r: f64) -> f64 {
    let slope: f64 = p.support().iter().map(|&(s, w)| -w * inst.vote_share_dr(s, r)).sum();
    inst.aggregate_pdf(r) / slope
}

/// Checks the two support conditions of a dual certificate.
///
/// Part 1: every active `(s, r)` maximizes `G(r') + lambda(r')(v(s, r') - 1/2)`
/// over the threshold grid. Part 2: `lambda(r)` equals the envelope value
/// `g(r) / int q(s - r) dP` for every active column.
pub fn check_dual_support_optimality(
    inst: &ProblemInstance,
    a: &AssignmentMatrix,
    cert: &DualCertificate,
    tol: f64,
) -> DualCheckReport {
    let nr = a.n_thresholds();
    let mut part1_worst_slack = f64::NEG_INFINITY;
    let mut part1_worst_at = None;
    for i in 0..a.n_types() {
        let s = a.type_grid[i];
        let gains: Vec<f64> = (0..nr)
            .map(|k| assignment_gain(inst, s, a.threshold_grid[k], cert.lambda[k]))
            .collect();
        let best = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let best_k = gains.iter().position(|&g| g == best).unwrap_or(0);
        for k in 0..nr {
            if a.get(i, k) > SUPPORT_TOL {
                let slack = best - gains[k];
                if slack > part1_worst_slack {
                    part1_worst_slack = slack;
                    part1_worst_at = Some((s, a.threshold_grid[k], a.threshold_grid[best_k]));
                }
            }
        }
    }
    let mut part2_worst_deviation: f64 = 0.0;
    let mut part2_worst_at = None;
    for k in a.active_columns(SUPPORT_TOL) {
        let masses: Vec<(f64, f64)> = (0..a.n_types())
            .filter(|&i| a.get(i, k) > 0.0)
            .map(|i| (a.type_grid[i], a.get(i, k)))
            .collect();
        let Ok(p) = District::from_masses(masses) else { continue };
        let r = a.threshold_grid[k];
        let dev = (cert.lambda[k] - envelope_lambda(inst, &p, r)).abs();
        if dev > part2_worst_deviation {
            part2_worst_deviation = dev;
            part2_worst_at = Some(r);
        }
    }
    let part1_worst_slack = part1_worst_slack.max(0.0);
    DualCheckReport {
        part1_holds: part1_worst_slack <= tol,
        part1_worst_slack,
        part1_worst_at,
        part2_holds: part2_worst_deviation <= tol,
        part2_worst_deviation,
        part2_worst_at,
    }
}

/// Moves each threshold price to the point of its feasible interval closest to
/// the envelope value, keeping `phi` and therefore the dual objective fixed.
///
/// Prices of columns whose active types sit on both sides of the threshold
/// are pinned by complementary slackness and do not move; the freedom lies in
/// segregated and inactive columns.
pub fn align_certificate(inst: &ProblemInstance, a: &AssignmentMatrix, cert: &DualCertificate) -> DualCertificate {
    let mut lambda = cert.lambda.clone();
    for k in 0..a.n_thresholds() {
        let r = a.threshold_grid[k];
        let gain = inst.aggregate_cdf(r);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (i, &s) in a.type_grid.iter().enumerate() {
            if s == r {
                continue;
            }
            let excess = inst.vote_share(s, r) - 0.5;
            let room = cert.phi[i] - gain;
            if excess > 0.0 {
                hi = hi.min(room / excess);
            } else if excess < 0.0 {
                lo = lo.max(room / excess);
            }
        }
        if !(lo <= hi) {
            continue;
        }
        let target = if a.column_mass(k) > SUPPORT_TOL {
            let masses: Vec<(f64, f64)> = (0..a.n_types())
                .filter(|&i| a.get(i, k) > 0.0)
                .map(|i| (a.type_grid[i], a.get(i, k)))
                .collect();
            match District::from_masses(masses) {
                Ok(p) => envelope_lambda(inst, &p, r),
                Err(_) => continue,
            }
        } else {
            envelope_lambda(inst, &District::point(r), r)
        };
        // stay strictly inside to absorb rounding in phi
        let margin = 1e-12 * (1.0 + target.abs());
        if hi - lo > 2.0 * margin {
            lambda[k] = target.clamp(lo + margin, hi - margin);
        }
    }
    DualCertificate {
        threshold_grid: cert.threshold_grid.clone(),
        lambda,
        phi: cert.phi.clone(),
    }
}

// ---------------------------------------------------------------------------
// pack-and-pair grid condition

/// Evaluation of the pack-and-pair inequalities at one quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PapQuadruple {
    pub s: f64,
    pub r: f64,
    pub s_pair: f64,
    pub s_seg: f64,
    pub lambda_r: f64,
    pub lambda_seg: f64,
    /// `G(r) + lambda(r)(Q(s - r) - 1/2) - G(s)`.
    pub keep_vs_segregate: f64,
    /// `G(r) + lambda(r)(Q(s - r) - 1/2) - [G(s'') + lambda(s'')(Q(s - s'') - 1/2)]`.
    pub keep_vs_move: f64,
    pub violates: bool,
}

/// Both inequalities must hold by more than this margin to count as a
/// violation. Far in the tails both sides underflow to the same double and
/// the comparison degenerates to `0 >= 0`.
pub const PAP_MARGIN: f64 = 1e-12;

/// Evaluates the pack-and-pair condition at `s < r < s' <= s''` with normal
/// `Q` and `G(r) = Q(gamma r)`.
pub fn pap_quadruple(gamma: f64, s: f64, r: f64, s_pair: f64, s_seg: f64) -> PapQuadruple {
    let q = Taste::Normal;
    pap_quadruple_with(
        &q,
        |x| q.cdf(gamma * x),
        |x| gamma * q.pdf(gamma * x),
        (s, r, s_pair, s_seg),
    )
}

/// Same as [`pap_quadruple`] for an arbitrary taste shock and aggregate shock
/// distribution `G` with density `g`.
pub fn pap_quadruple_with<T, G, D>(taste: &T, g_cdf: G, g_pdf: D, at: (f64, f64, f64, f64)) -> PapQuadruple
where
    T: TasteShock + ?Sized,
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (s, r, s_pair, s_seg) = at;
    let q = taste;
    let lambda_r = pap_lambda(g_pdf(r), q.cdf(s - r), q.pdf(s - r), q.cdf(s_pair - r), q.pdf(s_pair - r));
    let lambda_seg = g_pdf(s_seg) / q.pdf(0.0);
    let keep = g_cdf(r) + lambda_r * (q.cdf(s - r) - 0.5);
    let keep_vs_segregate = keep - g_cdf(s);
    let keep_vs_move = keep - (g_cdf(s_seg) + lambda_seg * (q.cdf(s - s_seg) - 0.5));
    PapQuadruple {
        s,
        r,
        s_pair,
        s_seg,
        lambda_r,
        lambda_seg,
        keep_vs_segregate,
        keep_vs_move,
        violates: keep_vs_segregate > PAP_MARGIN && keep_vs_move > PAP_MARGIN,
    }
}

fn pap_lambda(g_r: f64, q_low: f64, d_low: f64, q_high: f64, d_high: f64) -> f64 {
    g_r * (q_high - q_low) / ((q_high - 0.5) * d_low - (q_low - 0.5) * d_high)
}

/// Scans every grid quadruple `s < r < s' <= s''` for violations of the
/// pack-and-pair condition under normal `Q` and `G(r) = Q(gamma r)`. An empty
/// result certifies that every optimal plan is pack-and-pair. Violations are
/// sorted by grid position.
pub fn check_pap_condition(gamma: f64, grid: &[f64]) -> Vec<PapQuadruple> {
    let q = Taste::Normal;
    check_pap_condition_with(&q, |x| q.cdf(gamma * x), |x| gamma * q.pdf(gamma * x), grid)
}

/// [`check_pap_condition`] for an arbitrary taste shock and `G`.
pub fn check_pap_condition_with<T, G, D>(taste: &T, g_cdf: G, g_pdf: D, grid: &[f64]) -> Vec<PapQuadruple>
where
    T: TasteShock + Sync + ?Sized,
    G: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    let n = grid.len();
    let q = taste;
    let big_g: Vec<f64> = grid.iter().map(|&x| g_cdf(x)).collect();
    let small_g: Vec<f64> = grid.iter().map(|&x| g_pdf(x)).collect();
    let lambda_seg: Vec<f64> = small_g.iter().map(|g| g / q.pdf(0.0)).collect();
    let mut found: Vec<(usize, usize, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut local = Vec::new();
            let s = grid[i];
            for j in i + 1..n {
                let r = grid[j];
                let (q_low, d_low) = (q.cdf(s - r), q.pdf(s - r));
                for k in j + 1..n {
                    let sp = grid[k];
                    let lam = pap_lambda(small_g[j], q_low, d_low, q.cdf(sp - r), q.pdf(sp - r));
                    let keep = big_g[j] + lam * (q_low - 0.5);
                    if keep - big_g[i] <= PAP_MARGIN {
                        continue;
                    }
                    for l in k..n {
                        let moved = big_g[l] + lambda_seg[l] * (q.cdf(s - grid[l]) - 0.5);
                        if keep - moved > PAP_MARGIN {
                            local.push((i, j, k, l));
                        }
                    }
                }
            }
            local
        })
        .collect();
    found.sort_unstable();
    found
        .into_iter()
        .map(|(i, j, k, l)| pap_quadruple_with(q, &g_cdf, &g_pdf, (grid[i], grid[j], grid[k], grid[l])))
        .collect()
}

/// The grid `{-5, -4.9, ..., 5}`.
pub fn default_pap_grid() -> Vec<f64> {
    (0..=100).map(|i| (i as f64 - 50.0) / 10.0).collect()
}

// ---------------------------------------------------------------------------
// Y-districting necessary conditions

/// `sqrt(1 + sqrt(3))`, the largest gamma admitting Y-districting.
pub fn y_gamma_upper_bound() -> f64 {
    (1.0 + 3f64.sqrt()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YConditions {
    /// Bifurcation point forced by the conditions.
    pub r_b: f64,
    /// Limits `1 - s1'(0+)` and `s2'(0+) - 1` of the candidate solution.
    pub beta1: f64,
    pub beta2: f64,
    /// The other root of the two slope equations, `(1, (2 gamma^2 + 1) / 3)`,
    /// which never satisfies `beta1 >= beta2 + 1`.
    pub discarded: (f64, f64),
    pub admissible: bool,
}

/// Slope limits of the pairing maps at the bifurcation point and whether they
/// are consistent with optimal Y-districting.
pub fn y_necessary_conditions(gamma: f64) -> crate::Result<YConditions> {
    if !(gamma > 0.0) || (gamma - 1.0).abs() < 1e-15 {
        return Err(crate::Error::DegenerateGamma(gamma));
    }
    let g2 = gamma * gamma;
    let beta1 = 3.0 * g2 / (2.0 * (g2 - 1.0));
    let beta2 = g2 / 2.0;
    let admissible = gamma > 1.0 && beta1 >= 1.0 && beta1 >= beta2 + 1.0 - 1e-12;
    Ok(YConditions {
        r_b: 0.0,
        beta1,
        beta2,
        discarded: (1.0, (2.0 * g2 + 1.0) / 3.0),
        admissible,
    })
}

// ---------------------------------------------------------------------------
// pooling versus separation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoolDirection {
    /// Pooling `s, s'` into a district with threshold `r` beats separating them.
    Pool,
    /// Separating into `delta_s, delta_s'` beats pooling.
    Separate,
    Indifferent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegNadReport {
    pub evaluations: Vec<(f64, f64, f64, PoolDirection)>,
    pub pool_count: usize,
    pub separate_count: usize,
}

impl SegNadReport {
    pub fn pooling_everywhere(&self) -> bool {
        self.separate_count == 0 && self.pool_count > 0
    }

    pub fn separation_everywhere(&self) -> bool {
        self.pool_count == 0 && self.separate_count > 0
    }

    /// Both directions occur, so neither segregation nor negative assortative
    /// districting is optimal.
    pub fn mixed(&self) -> bool {
        self.pool_count > 0 && self.separate_count > 0
    }
}

/// For each sampled `s < r < s'`, compares `G(r)` with the value of splitting
/// the district `rho delta_s + (1 - rho) delta_s'` with threshold `r` into its
/// two segregated parts.
pub fn check_seg_nad_conditions<T, G>(taste: &T, g_cdf: G, triples: &[(f64, f64, f64)]) -> SegNadReport
where
    T: TasteShock + ?Sized,
    G: Fn(f64) -> f64,
{
    let mut evaluations = Vec::with_capacity(triples.len());
    let (mut pool_count, mut separate_count) = (0, 0);
    for &(s, r, s2) in triples {
        if !(s < r && r < s2) {
            continue;
        }
        let hi = taste.cdf(s2 - r) - 0.5;
        let lo = 0.5 - taste.cdf(s - r);
        let split = (hi * g_cdf(s) + lo * g_cdf(s2)) / (hi + lo);
        let pooled = g_cdf(r);
        let dir = if pooled > split + 1e-15 {
            pool_count += 1;
            PoolDirection::Pool
        } else if pooled < split - 1e-15 {
            separate_count += 1;
            PoolDirection::Separate
        } else {
            PoolDirection::Indifferent
        };
        evaluations.push((s, r, s2, dir));
    }
    SegNadReport { evaluations, pool_count, separate_count }
}

/// All grid triples `s < r < s'` drawn from `points`.
pub fn grid_triples(points: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            for k in j + 1..points.len() {
                out.push((points[i], points[j], points[k]));
            }
        }
    }
    out
}
