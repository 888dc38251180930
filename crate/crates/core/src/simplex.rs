//! Revised primal simplex for `max c'x  s.t.  Ax = b, x >= 0`.
//!
//! Columns are stored sparse; the basis inverse is kept dense (column-major)
//! and rebuilt from scratch by Gauss-Jordan elimination every
//! `refactor_every` pivots. Phase one starts from an all-artificial basis.
//! Artificials that are still basic at zero after phase one are held at zero
//! in phase two: any pivot that would move them makes them leave.
//!
//! Pricing is Dantzig's rule (largest reduced cost, lowest index on ties).
//! After `degenerate_switch` consecutive degenerate pivots the solver falls
//! back to Bland's rule until the objective moves again, which rules out
//! cycling. Every choice is made in a fixed order, so a solve is
//! deterministic bit for bit.

use crate::error::{Error, Result};

/// A linear program in equality standard form with sparse columns.
#[derive(Debug, Clone)]
pub struct StandardFormLp {
    n_rows: usize,
    col_start: Vec<usize>,
    row_index: Vec<usize>,
    values: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
}

impl StandardFormLp {
    pub fn new(rhs: Vec<f64>) -> Self {
        StandardFormLp {
            n_rows: rhs.len(),
            col_start: vec![0],
            row_index: Vec::new(),
            values: Vec::new(),
            cost: Vec::new(),
            rhs,
        }
    }

    /// Appends a column; returns its index. Zero entries are dropped.
    pub fn add_column(&mut self, cost: f64, entries: &[(usize, f64)]) -> usize {
        for &(row, value) in entries {
            assert!(row < self.n_rows, "row {row} out of range");
            if value != 0.0 {
                self.row_index.push(row);
                self.values.push(value);
            }
        }
        self.col_start.push(self.row_index.len());
        self.cost.push(cost);
        self.cost.len() - 1
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_start[j]..self.col_start[j + 1];
        self.row_index[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// `max_i |(Ax - b)_i|`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (i, a) in self.column(j) {
                    ax[i] += a * xj;
                }
            }
        }
        ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Largest positive reduced cost `c_j - y'A_j` (zero when dual feasible).
    pub fn dual_infeasibility(&self, y: &[f64]) -> f64 {
        (0..self.n_cols())
            .map(|j| self.cost[j] - self.column(j).map(|(i, a)| y[i] * a).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub refactor_every: usize,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Reduced costs at or below this are treated as nonpositive.
    pub optimality_tol: f64,
    /// Phase-one objective above this means infeasible.
    pub feasibility_tol: f64,
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 500_000,
            refactor_every: 64,
            pivot_tol: 1e-9,
            optimality_tol: 1e-12,
            feasibility_tol: 1e-9,
            degenerate_switch: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    /// Row multipliers `y` with `c_j <= y'A_j`, equality on basic columns.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau<'a> {
    lp: &'a StandardFormLp,
    opts: SimplexOptions,
    m: usize,
    n: usize,
    /// Row sign flips making `b >= 0`.
    sign: Vec<f64>,
    b: Vec<f64>,
    /// Basic variable of each row; indices `>= n` are artificials.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Column-major `B^{-1}`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a StandardFormLp, opts: SimplexOptions) -> Self {
        let m = lp.n_rows;
        let n = lp.n_cols();
        let sign: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = lp.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut in_basis = vec![false; n + m];
        for flag in in_basis.iter_mut().skip(n) {
            *flag = true;
        }
        Tableau {
            lp,
            opts,
            m,
            n,
            sign,
            xb: b.clone(),
            b,
            basis: (n..n + m).collect(),
            in_basis,
            binv,
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.n
    }

    fn cost_of(&self, var: usize, phase: Phase) -> f64 {
        match (phase, self.is_artificial(var)) {
            (Phase::One, true) => -1.0,
            (Phase::One, false) => 0.0,
            (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.lp.cost[var],
        }
    }

    /// Entries of column `var` with row signs applied.
    fn signed_column(&self, var: usize) -> Vec<(usize, f64)> {
        if self.is_artificial(var) {
            vec![(var - self.n, 1.0)]
        } else {
            self.lp.column(var).map(|(i, a)| (i, a * self.sign[i])).collect()
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let cb: Vec<f64> = self.basis.iter().map(|&v| self.cost_of(v, phase)).collect();
        (0..m)
            .map(|j| {
                let col = &self.binv[j * m..(j + 1) * m];
                col.iter().zip(&cb).map(|(a, c)| a * c).sum()
            })
            .collect()
    }

    fn reduced_cost(&self, var: usize, y: &[f64], phase: Phase) -> f64 {
        let c = self.cost_of(var, phase);
        c - self.lp.column(var).map(|(i, a)| y[i] * a * self.sign[i]).sum::<f64>()
    }

    fn ftran(&self, var: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (r, v) in self.signed_column(var) {
            let col = &self.binv[r * m..(r + 1) * m];
            for (a, c) in alpha.iter_mut().zip(col) {
                *a += v * c;
            }
        }
        alpha
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Dense B, row-major, augmented Gauss-Jordan to get B^{-1}.
        let mut a = vec![0.0; m * m];
        for (k, &var) in self.basis.iter().enumerate() {
            for (i, v) in self.signed_column(var) {
                a[i * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for row in col + 1..m {
                let v = a[row * m + col].abs();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best < 1e-13 {
                return Err(Error::SingularBasis);
            }
            if piv != col {
                for k in 0..m {
                    a.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for row in 0..m {
                if row != col {
                    let f = a[row * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[row * m + k] -= f * a[col * m + k];
                            inv[row * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        // inv is row-major B^{-1}; store column-major.
        for i in 0..m {
            for j in 0..m {
                self.binv[j * m + i] = inv[i * m + j];
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            for j in 0..m {
                s += self.binv[j * m + i] * self.b[j];
            }
            self.xb[i] = if s < 0.0 && s > -1e-12 { 0.0 } else { s };
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, row: usize, var: usize, alpha: &[f64], step: f64) {
        let m = self.m;
        for (x, a) in self.xb.iter_mut().zip(alpha) {
            *x -= step * a;
        }
        self.xb[row] = step;
        let ap = alpha[row];
        for j in 0..m {
            let col = &mut self.binv[j * m..(j + 1) * m];
            let p = col[row] / ap;
            if p != 0.0 {
                for (c, a) in col.iter_mut().zip(alpha) {
                    *c -= a * p;
                }
            }
            col[row] = p;
        }
        for x in self.xb.iter_mut() {
            if *x < 0.0 && *x > -1e-12 {
                *x = 0.0;
            }
        }
        let leaving = self.basis[row];
        self.in_basis[leaving] = false;
        self.in_basis[var] = true;
        self.basis[row] = var;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn run(&mut self, phase: Phase) -> Result<()> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(Error::IterationLimit(self.opts.max_iterations));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let bland = degenerate_run >= self.opts.degenerate_switch;
            let y = self.duals(phase);
            let mut entering: Option<(usize, f64)> = None;
            for var in 0..self.n {
                if self.in_basis[var] {
                    continue;
                }
                let d = self.reduced_cost(var, &y, phase);
                if d > self.opts.optimality_tol {
                    match entering {
                        None => entering = Some((var, d)),
                        Some((_, best)) if !bland && d > best => entering = Some((var, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((var, _)) = entering else {
                if self.since_refactor > 0 {
                    // confirm optimality against a fresh factorization
                    self.refactor()?;
                    continue;
                }
                return Ok(());
            };
            let alpha = self.ftran(var);
            let mut leave: Option<(usize, f64)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                let basic = self.basis[i];
                let ratio = if phase == Phase::Two && self.is_artificial(basic) {
                    if a.abs() > self.opts.pivot_tol {
                        0.0
                    } else {
                        continue;
                    }
                } else if a > self.opts.pivot_tol {
                    self.xb[i].max(0.0) / a
                } else {
                    continue;
                };
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                        let better = if tie {
                            if bland {
                                basic < self.basis[li]
                            } else {
                                a.abs() > alpha[li].abs()
                            }
                        } else {
                            ratio < lr
                        };
                        if better {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            let Some((row, step)) = leave else {
                return Err(Error::LpUnbounded(var));
            };
            if step <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, var, &alpha, step);
        }
    }
}

/// Solves `lp` with the two-phase revised simplex method.
pub fn solve(lp: &StandardFormLp, opts: SimplexOptions) -> Result<SimplexSolution> {
    let mut t = Tableau::new(lp, opts);
    t.run(Phase::One)?;
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(&v, _)| t.is_artificial(v))
        .map(|(_, &x)| x)
        .sum();
    if infeasibility > opts.feasibility_tol {
        return Err(Error::LpInfeasible(infeasibility));
    }
    t.run(Phase::Two)?;
    let mut x = vec![0.0; t.n];
    for (&var, &val) in t.basis.iter().zip(&t.xb) {
        if !t.is_artificial(var) {
            x[var] = val.max(0.0);
        }
    }
    let y_signed = t.duals(Phase::Two);
    let duals: Vec<f64> = y_signed.iter().zip(&t.sign).map(|(y, s)| y * s).collect();
    let objective = x.iter().zip(&lp.cost).map(|(x, c)| x * c).sum();
    Ok(SimplexSolution {
        x,
        duals,
        objective,
        iterations: t.iterations,
    })
}
