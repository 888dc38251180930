//! The discretized designer problem as a linear program.
//!
//! Variables are the masses `pi(s, r)` of type-`s` voters placed in districts
//! whose winning threshold is the grid shock `r`. Constraints:
//!
//! * `sum_r pi(s, r) = f(s)` for every type (the plan reproduces `F`);
//! * `sum_s pi(s, r) (v(s, r) - 1/2) = 0` for every threshold (districts in
//!   column `r` are won exactly when the shock is at most `r`).
//!
//! The objective is `sum pi(s, r) G(r)`. The multipliers of the two row
//! families give the voter values `phi(s)` and the threshold prices
//! `lambda(r)` of the dual certificate.

use crate::error::{Error, Result};
use crate::model::{District, Plan, ProblemInstance};
use crate::simplex::{self, SimplexOptions, StandardFormLp};
use crate::verification::{self, RegimeLabel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Assignments at or below this mass are treated as numerically zero.
pub const SUPPORT_TOL: f64 = 1e-9;

/// The designer LP for one instance and threshold grid.
#[derive(Debug, Clone)]
pub struct DesignerLp {
    instance: ProblemInstance,
    thresholds: Vec<f64>,
    lp: StandardFormLp,
}

impl DesignerLp {
    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn n_variables(&self) -> usize {
        self.lp.n_cols()
    }

    pub fn n_constraints(&self) -> usize {
        self.lp.n_rows()
    }

    pub fn standard_form(&self) -> &StandardFormLp {
        &self.lp
    }

    fn var(&self, i: usize, k: usize) -> usize {
        i * self.thresholds.len() + k
    }
}

/// Builds the LP over `threshold_grid`. Columns are ordered type-major.
pub fn build_lp(inst: &ProblemInstance, threshold_grid: &[f64]) -> Result<DesignerLp> {
    if threshold_grid.is_empty() {
        return Err(Error::InvalidInstance("threshold grid is empty".into()));
    }
    if threshold_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInstance("threshold grid must be strictly increasing".into()));
    }
    let ns = inst.len();
    let nr = threshold_grid.len();
    let mut rhs = inst.type_weights().to_vec();
    rhs.extend(std::iter::repeat_n(0.0, nr));
    let mut lp = StandardFormLp::new(rhs);
    let gains: Vec<f64> = threshold_grid.iter().map(|&r| inst.aggregate_cdf(r)).collect();
    for (i, &s) in inst.type_grid().iter().enumerate() {
        for (k, &r) in threshold_grid.iter().enumerate() {
            let excess = if s == r { 0.0 } else { inst.vote_share(s, r) - 0.5 };
            lp.add_column(gains[k], &[(i, 1.0), (ns + k, excess)]);
        }
    }
    Ok(DesignerLp {
        instance: inst.clone(),
        thresholds: threshold_grid.to_vec(),
        lp,
    })
}

/// The type grid refined by an integer factor: `factor - 1` extra points in
/// each gap. A factor of 1 returns the type grid itself.
pub fn refined_thresholds(inst: &ProblemInstance, factor: usize) -> Vec<f64> {
    let grid = inst.type_grid();
    let factor = factor.max(1);
    let mut out = Vec::with_capacity((grid.len() - 1) * factor + 1);
    for w in grid.windows(2) {
        for j in 0..factor {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / factor as f64);
        }
    }
    out.push(grid[grid.len() - 1]);
    out
}

/// Joint assignment `pi(s, r)` of types to district thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    pub type_grid: Vec<f64>,
    pub threshold_grid: Vec<f64>,
    /// Row-major `type x threshold` masses.
    pub pi: Vec<f64>,
}

impl AssignmentMatrix {
    pub fn new(type_grid: Vec<f64>, threshold_grid: Vec<f64>, pi: Vec<f64>) -> Self {
        assert_eq!(pi.len(), type_grid.len() * threshold_grid.len());
        AssignmentMatrix { type_grid, threshold_grid, pi }
    }

    pub fn n_types(&self) -> usize {
        self.type_grid.len()
    }

    pub fn n_thresholds(&self) -> usize {
        self.threshold_grid.len()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.pi[i * self.threshold_grid.len() + k]
    }

    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        let nr = self.threshold_grid.len();
        self.pi[i * nr + k] = value;
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let nr = self.threshold_grid.len();
        self.pi[i * nr..(i + 1) * nr].iter().sum()
    }

    pub fn column_mass(&self, k: usize) -> f64 {
        (0..self.n_types()).map(|i| self.get(i, k)).sum()
    }

    /// Threshold columns carrying more than `tol` mass.
    pub fn active_columns(&self, tol: f64) -> Vec<usize> {
        (0..self.n_thresholds()).filter(|&k| self.column_mass(k) > tol).collect()
    }

    /// Max over types of `|sum_r pi(s, r) - f(s)|`.
    pub fn feasibility_residual(&self, weights: &[f64]) -> f64 {
        (0..self.n_types())
            .map(|i| (self.row_sum(i) - weights[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Max over active columns of `|sum_s pi(s, r)(v(s, r) - 1/2)|`.
    pub fn threshold_residual(&self, inst: &ProblemInstance) -> f64 {
        (0..self.n_thresholds())
            .filter(|&k| self.column_mass(k) > SUPPORT_TOL)
            .map(|k| {
                let r = self.threshold_grid[k];
                (0..self.n_types())
                    .map(|i| self.get(i, k) * (inst.vote_share(self.type_grid[i], r) - 0.5))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// `sum pi(s, r) G(r)`.
    pub fn objective(&self, inst: &ProblemInstance) -> f64 {
        let mut total = 0.0;
        for k in 0..self.n_thresholds() {
            total += self.column_mass(k) * inst.aggregate_cdf(self.threshold_grid[k]);
        }
        total
    }

    /// The assignment induced by a plan whose district thresholds lie on
    /// `threshold_grid` (within `tol`).
    pub fn from_plan(inst: &ProblemInstance, plan: &Plan, threshold_grid: &[f64], tol: f64) -> Result<Self> {
        let nr = threshold_grid.len();
        let mut pi = vec![0.0; inst.len() * nr];
        for d in &plan.districts {
            let r = inst.district_threshold(&d.district)?;
            let k = threshold_grid
                .iter()
                .position(|&t| (t - r).abs() <= tol)
                .ok_or_else(|| Error::InvalidDistrict(format!("threshold {r} is not on the grid")))?;
            for &(s, w) in d.district.support() {
                let i = inst
                    .grid_index(s)
                    .ok_or_else(|| Error::InvalidDistrict(format!("type {s} is not on the grid")))?;
                pi[i * nr + k] += d.mass * w;
            }
        }
        Ok(AssignmentMatrix::new(inst.type_grid().to_vec(), threshold_grid.to_vec(), pi))
    }

    /// Reads an `s,r,mass` file onto the given grids. Each listed point must
    /// sit within `tol` of a grid value; absent pairs carry zero mass.
    pub fn read_csv<R: Read>(input: R, type_grid: &[f64], threshold_grid: &[f64], tol: f64) -> Result<Self> {
        let nr = threshold_grid.len();
        let mut pi = vec![0.0; type_grid.len() * nr];
        let mut rdr = csv::Reader::from_reader(input);
        for (row, rec) in rdr.deserialize::<(f64, f64, f64)>().enumerate() {
            let line = row as u64 + 2;
            let (s, r, m) = rec?;
            let locate = |grid: &[f64], x: f64, what: &str| {
                grid.iter().position(|&g| (g - x).abs() <= tol).ok_or_else(|| Error::Malformed {
                    line,
                    message: format!("{what} {x} is not on the grid"),
                })
            };
            let i = locate(type_grid, s, "type")?;
            let k = locate(threshold_grid, r, "threshold")?;
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::Malformed { line, message: format!("mass {m} is not a nonnegative number") });
            }
            pi[i * nr + k] += m;
        }
        Ok(AssignmentMatrix::new(type_grid.to_vec(), threshold_grid.to_vec(), pi))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "r", "mass"])?;
        for i in 0..self.n_types() {
            for k in 0..self.n_thresholds() {
                let m = self.get(i, k);
                if m > 0.0 {
                    w.write_record([
                        format_float(self.type_grid[i]),
                        format_float(self.threshold_grid[k]),
                        format_float(m),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Multipliers certifying optimality of an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub threshold_grid: Vec<f64>,
    /// Price `lambda(r)` of the threshold constraint at each grid shock.
    pub lambda: Vec<f64>,
    /// Voter values `phi(s) = max_r G(r) + lambda(r)(v(s, r) - 1/2)`.
    pub phi: Vec<f64>,
}

impl DualCertificate {
    /// Recomputes `phi` from `lambda` by maximizing over the threshold grid.
    pub fn from_lambda(inst: &ProblemInstance, threshold_grid: &[f64], lambda: Vec<f64>) -> Self {
        let phi = inst
            .type_grid()
            .iter()
            .map(|&s| {
                threshold_grid
                    .iter()
                    .zip(&lambda)
                    .map(|(&r, &l)| assignment_gain(inst, s, r, l))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        DualCertificate {
            threshold_grid: threshold_grid.to_vec(),
            lambda,
            phi,
        }
    }

    /// Dual objective `sum_s f(s) phi(s)`.
    pub fn dual_objective(&self, inst: &ProblemInstance) -> f64 {
        self.phi.iter().zip(inst.type_weights()).map(|(p, f)| p * f).sum()
    }

    /// Reads an `r,lambda` file and recomputes `phi` for `inst`.
    pub fn read_csv<R: Read>(inst: &ProblemInstance, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut grid = Vec::new();
        let mut lambda = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (r, l) = rec?;
            grid.push(r);
            lambda.push(l);
        }
        if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Malformed {
                line: 1,
                message: "dual thresholds must be nonempty and strictly increasing".into(),
            });
        }
        Ok(DualCertificate::from_lambda(inst, &grid, lambda))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "lambda"])?;
        for (r, l) in self.threshold_grid.iter().zip(&self.lambda) {
            w.write_record([format_float(*r), format_float(*l)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `G(r) + lambda (v(s, r) - 1/2)`: the value to a type-`s` voter of a
/// district with threshold `r` under price `lambda`.
pub fn assignment_gain(inst: &ProblemInstance, s: f64, r: f64, lambda: f64) -> f64 {
    let excess = if s == r { 0.0 } else { inst.vote_share(s, r) - 0.5 };
    inst.aggregate_cdf(r) + lambda * excess
}

/// A solved designer LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub assignment: AssignmentMatrix,
    pub objective: f64,
    pub certificate: DualCertificate,
    pub iterations: usize,
}

impl LpSolution {
    /// Primal objective minus dual objective.
    pub fn duality_gap(&self, inst: &ProblemInstance) -> f64 {
        (self.certificate.dual_objective(inst) - self.objective).abs()
    }
}

pub fn solve_lp(lp: &DesignerLp) -> Result<LpSolution> {
    solve_lp_with(lp, SimplexOptions::default())
}

pub fn solve_lp_with(lp: &DesignerLp, opts: SimplexOptions) -> Result<LpSolution> {
    let sol = simplex::solve(&lp.lp, opts)?;
    let ns = lp.instance.len();
    let nr = lp.thresholds.len();
    let mut pi = vec![0.0; ns * nr];
    for i in 0..ns {
        for k in 0..nr {
            pi[i * nr + k] = sol.x[lp.var(i, k)];
        }
    }
    let assignment = AssignmentMatrix::new(lp.instance.type_grid().to_vec(), lp.thresholds.clone(), pi);
    let lambda: Vec<f64> = sol.duals[ns..].iter().map(|y| -y).collect();
    let certificate = DualCertificate::from_lambda(&lp.instance, &lp.thresholds, lambda);
    Ok(LpSolution {
        objective: sol.objective,
        assignment,
        certificate,
        iterations: sol.iterations,
    })
}

/// Solves the default LP for `inst`, with thresholds equal to the type grid.
pub fn solve_instance(inst: &ProblemInstance) -> Result<LpSolution> {
    solve_lp(&build_lp(inst, inst.type_grid())?)
}

/// One district per active threshold column, weights proportional to the
/// column's assignment.
pub fn extract_plan(assignment: &AssignmentMatrix) -> Plan {
    let mut plan = Plan::default();
    for k in 0..assignment.n_thresholds() {
        let mass = assignment.column_mass(k);
        if mass <= SUPPORT_TOL {
            continue;
        }
        let members: Vec<(f64, f64)> = (0..assignment.n_types())
            .map(|i| (assignment.type_grid[i], assignment.get(i, k)))
            .filter(|&(_, m)| m > 0.0)
            .collect();
        let total: f64 = members.iter().map(|&(_, m)| m).sum();
        if let Ok(district) = District::from_masses(members) {
            plan.push(district, total);
        }
    }
    plan
}

/// One row of a gamma sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub objective: Option<f64>,
    pub regime: Option<RegimeLabel>,
    pub bifurcation: Option<f64>,
    pub duality_gap: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
    #[serde(skip)]
    pub solution: Option<LpSolution>,
}

/// Solves the template instance at every gamma. Rows come back in input
/// order; a failed row records its error and the sweep continues.
pub fn sweep_gamma(template: &ProblemInstance, gammas: &[f64], refine: usize) -> Vec<SweepRow> {
    gammas.par_iter().map(|&g| sweep_row(template, g, refine)).collect()
}

fn sweep_row(template: &ProblemInstance, gamma: f64, refine: usize) -> SweepRow {
    let attempt = || -> Result<(LpSolution, ProblemInstance)> {
        let inst = template.with_gamma(gamma)?;
        let lp = build_lp(&inst, &refined_thresholds(&inst, refine))?;
        Ok((solve_lp(&lp)?, inst))
    };
    match attempt() {
        Ok((sol, inst)) => {
            let decomposition = verification::decompose_pack_and_pair(&sol.assignment);
            let regime = verification::classify_regime(&decomposition, &sol.assignment);
            SweepRow {
                gamma,
                objective: Some(sol.objective),
                regime: Some(regime),
                bifurcation: decomposition.as_ref().ok().map(|d| d.r_b),
                duality_gap: Some(sol.duality_gap(&inst)),
                iterations: Some(sol.iterations),
                error: None,
                solution: Some(sol),
            }
        }
        Err(e) => SweepRow {
            gamma,
            objective: None,
            regime: None,
            bifurcation: None,
            duality_gap: None,
            iterations: None,
            error: Some(e.to_string()),
            solution: None,
        },
    }
}

/// Shortest decimal form that round-trips.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taste::normal_cdf;
    use crate::Taste;

    /// Max of `c'x` over `Ax = b, x >= 0` by enumerating every column subset
    /// of size at most `m`, keeping those with linearly independent columns
    /// and a nonnegative exact solution.
    pub(crate) fn vertex_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
        let m = a.len();
        let n = c.len();
        let mut best: Option<f64> = None;
        for mask in 1u32..(1 << n) {
            let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            if cols.len() > m {
                continue;
            }
            let k = cols.len();
            // normal equations A_S' A_S x = A_S' b
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

    /// Dense LP data written out directly from normal vote shares.
    fn dense_lp(types: &[f64], weights: &[f64], thresholds: &[f64], gamma: f64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let (ns, nr) = (types.len(), thresholds.len());
        let mut a = vec![vec![0.0; ns * nr]; ns + nr];
        let mut c = vec![0.0; ns * nr];
        for i in 0..ns {
            for k in 0..nr {
                let j = i * nr + k;
                a[i][j] = 1.0;
                a[ns + k][j] = normal_cdf(types[i] - thresholds[k]) - 0.5;
                c[j] = normal_cdf(gamma * thresholds[k]);
            }
        }
        let mut b = weights.to_vec();
        b.extend(std::iter::repeat_n(0.0, nr));
        (a, b, c)
    }

    #[test]
    fn default_lp_dimensions() {
        let inst = ProblemInstance::default_with_gamma(6.0).unwrap();
        let lp = build_lp(&inst, inst.type_grid()).unwrap();
        assert_eq!(lp.n_variables(), 40_401);
        assert_eq!(lp.n_constraints(), 402);
    }

    #[test]
    fn single_type_is_segregated() {
        let inst = ProblemInstance::new(vec![0.3], vec![1.0], Taste::Normal, 2.0).unwrap();
        let sol = solve_instance(&inst).unwrap();
        assert!((sol.objective - normal_cdf(0.6)).abs() < 1e-12);
    }

    #[test]
    fn three_type_lp_matches_vertex_enumeration() {
        let cases: [(&[f64], &[f64], f64); 4] = [
            (&[-1.0, 0.0, 1.0], &[0.3, 0.4, 0.3], 2.0),
            (&[-1.0, 0.2, 0.8], &[0.5, 0.2, 0.3], 6.0),
            (&[-0.5, 0.0, 0.5], &[0.2, 0.2, 0.6], 0.5),
            (&[-2.0, -0.5, 1.5], &[0.6, 0.1, 0.3], 15.0),
        ];
        for (types, weights, gamma) in cases {
            let inst = ProblemInstance::new(types.to_vec(), weights.to_vec(), Taste::Normal, gamma).unwrap();
            let sol = solve_instance(&inst).unwrap();
            let (a, b, c) = dense_lp(types, weights, types, gamma);
            let oracle = vertex_oracle(&a, &b, &c).unwrap();
            assert!((sol.objective - oracle).abs() < 1e-9, "{gamma}: {} vs {oracle}", sol.objective);
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let inst = ProblemInstance::uniform(31, -1.0, 1.0, Taste::Normal, 1.5).unwrap();
        let a = solve_instance(&inst).unwrap();
        let b = solve_instance(&inst).unwrap();
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.certificate, b.certificate);
    }

    #[test]
    fn dropping_thresholds_never_helps() {
        let inst = ProblemInstance::uniform(21, -1.0, 1.0, Taste::Normal, 3.0).unwrap();
        let full = solve_instance(&inst).unwrap().objective;
        let coarse: Vec<f64> = inst.type_grid().iter().copied().step_by(2).collect();
        let restricted = solve_lp(&build_lp(&inst, &coarse).unwrap()).unwrap().objective;
        assert!(restricted <= full + 1e-12);
        let fine = solve_lp(&build_lp(&inst, &refined_thresholds(&inst, 2)).unwrap()).unwrap().objective;
        assert!(fine >= full - 1e-12);
    }

    #[test]
    fn extracted_plan_reproduces_objective() {
        let inst = ProblemInstance::uniform(41, -1.0, 1.0, Taste::Normal, 1.4).unwrap();
        let sol = solve_instance(&inst).unwrap();
        let plan = extract_plan(&sol.assignment);
        assert!((plan.total_mass() - 1.0).abs() < 1e-9);
        let value = inst.expected_seat_share(&plan).unwrap();
        assert!((value - sol.objective).abs() < 1e-7, "{value} vs {}", sol.objective);
        assert!(sol.assignment.feasibility_residual(inst.type_weights()) < 1e-9);
        assert!(sol.assignment.threshold_residual(&inst) < 1e-9);
        assert!(sol.duality_gap(&inst) < 1e-9);
    }

    #[test]
    fn near_perfect_information_reaches_envelope() {
        let inst = ProblemInstance::new(vec![-50.0, 50.0], vec![0.7, 0.3], Taste::Normal, 30.0).unwrap();
        let lp = build_lp(&inst, &[-50.0, 1.0, 50.0]).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 0.6).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn csv_round_trip() {
        let inst = ProblemInstance::uniform(11, -1.0, 1.0, Taste::Normal, 2.0).unwrap();
        let sol = solve_instance(&inst).unwrap();
        let mut buf = Vec::new();
        sol.assignment.write_csv(&mut buf).unwrap();
        let back = AssignmentMatrix::read_csv(&buf[..], inst.type_grid(), inst.type_grid(), 1e-12).unwrap();
        assert_eq!(back, sol.assignment);
        let mut buf = Vec::new();
        sol.certificate.write_csv(&mut buf).unwrap();
        let cert = DualCertificate::read_csv(&inst, &buf[..]).unwrap();
        assert_eq!(cert, sol.certificate);

        let bad = "s,r,mass\n0.05,0.0,0.1\n";
        let err = AssignmentMatrix::read_csv(bad.as_bytes(), inst.type_grid(), inst.type_grid(), 1e-12).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_threshold_grids() {
        let inst = ProblemInstance::uniform(5, -1.0, 1.0, Taste::Normal, 2.0).unwrap();
        assert!(build_lp(&inst, &[]).is_err());
        assert!(build_lp(&inst, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn refined_grid_contains_type_grid() {
        let inst = ProblemInstance::uniform(5, -1.0, 1.0, Taste::Normal, 2.0).unwrap();
        let r = refined_thresholds(&inst, 3);
        assert_eq!(r.len(), 13);
        for (i, &s) in inst.type_grid().iter().enumerate() {
            assert_eq!(r[3 * i], s);
        }
    }
}
