//! Dense-tableau primal simplex for `maximize cᵀx s.t. A x {≤,=,≥} b, x ≥ 0`.
//!
//! Two phases: artificial variables are driven to zero first, then the real
//! objective is optimized. Pricing is Dantzig (most negative reduced cost)
//! until a run of degenerate pivots exceeds a threshold, after which Bland's
//! smallest-index rule takes over for the rest of the solve.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program over non-negative variables, always maximized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, ..Default::default() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { pivot_tol: 1e-9, max_iterations: 200_000, bland_after: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    /// Gave up; carries the phase (1 or 2) that hit the cap.
    IterationLimit { phase: u8 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: usize,
    pub degenerate_pivots: usize,
    pub used_bland: bool,
}

struct Tableau {
    rows: usize,
    /// Columns excluding the right-hand side.
    cols: usize,
    data: Vec<f64>,
    /// Reduced-cost row; last entry is the current objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may never enter (artificials after phase 1).
    blocked: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        eliminate(&mut self.cost);
        self.basis[pr] = pc;
    }

    /// Sets the cost row for maximizing `c` and prices out the basis.
    fn load_objective(&mut self, c: &[f64]) {
        let w = self.width();
        self.cost = vec![0.0; w];
        for (j, &v) in c.iter().enumerate() {
            self.cost[j] = -v;
        }
        for r in 0..self.rows {
            let b = self.basis[r];
            let f = self.cost[b];
            if f != 0.0 {
                for j in 0..w {
                    self.cost[j] -= f * self.data[r * w + j];
                }
                self.cost[b] = 0.0;
            }
        }
    }

    fn entering(&self, tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.blocked[j] {
                continue;
            }
            let d = self.cost[j];
            if d < -tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Minimum-ratio row; ties go to the row whose basic variable has the
    /// smallest index.
    fn leaving(&self, pc: usize, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > tol {
                let ratio = self.rhs(r).max(0.0) / a;
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        let slack = tol * bv.abs().max(1.0);
                        let tie = ratio <= bv + slack && self.basis[r] < self.basis[br];
                        if ratio < bv - slack || tie {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
        }
        best.map(|(r, _)| r)
    }

    fn run(
        &mut self,
        opts: &SimplexOptions,
        stats: &mut SolveStats,
        budget: usize,
    ) -> Result<bool, ()> {
        let mut degenerate_run = 0usize;
        let mut spent = 0usize;
        loop {
            let bland = stats.used_bland;
            let Some(pc) = self.entering(opts.pivot_tol, bland) else {
                return Ok(true);
            };
            let Some(pr) = self.leaving(pc, opts.pivot_tol) else {
                return Ok(false);
            };
            if spent >= budget {
                return Err(());
            }
            if self.rhs(pr).abs() <= opts.pivot_tol {
                stats.degenerate_pivots += 1;
                degenerate_run += 1;
                if degenerate_run > opts.bland_after {
                    stats.used_bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
            spent += 1;
            stats.iterations += 1;
        }
    }
}

/// Sparse coefficients, relation and right-hand side.
type Row = (Vec<(usize, f64)>, Relation, f64);

/// Solves `lp`. The returned `x` has exactly `lp.num_vars` entries.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> (Outcome, SolveStats) {
    let mut stats = SolveStats::default();
    let m = lp.constraints.len();
    let n = lp.num_vars;

    // Normalize to non-negative right-hand sides.
    let rows: Vec<Row> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|&(j, v)| (j, -v)).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + slack_count + art_count;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; m * w],
        cost: Vec::new(),
        basis: vec![0; m],
        blocked: vec![false; cols],
    };
    let mut next_slack = n;
    let mut next_art = n + slack_count;
    let mut artificial = Vec::with_capacity(art_count);
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        for &(j, v) in coeffs {
            t.data[r * w + j] += v;
        }
        t.data[r * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                t.data[r * w + next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                t.data[r * w + next_slack] = -1.0;
                next_slack += 1;
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                artificial.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                artificial.push(next_art);
                next_art += 1;
            }
        }
    }

    if !artificial.is_empty() {
        let mut phase1 = vec![0.0; cols];
        for &a in &artificial {
            phase1[a] = -1.0;
        }
        t.load_objective(&phase1);
        // Phase 1 is bounded by construction.
        if t.run(opts, &mut stats, opts.max_iterations).is_err() {
            return (Outcome::IterationLimit { phase: 1 }, stats);
        }
        let scale = rows.iter().map(|r| r.2.abs()).fold(1.0, f64::max);
        if t.cost[cols] < -opts.pivot_tol * scale * (m as f64).max(1.0) {
            return (Outcome::Infeasible, stats);
        }
        for &a in &artificial {
            t.blocked[a] = true;
        }
        // Pivot zero-level artificials out of the basis where possible.
        for r in 0..m {
            if !t.blocked[t.basis[r]] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n + slack_count {
                let a = t.at(r, j).abs();
                if a > opts.pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                t.pivot(r, j);
                stats.iterations += 1;
            }
            // Otherwise the row is redundant; its artificial stays basic at 0
            // and can never move because its column is blocked.
        }
    }

    let mut c = vec![0.0; cols];
    for &(j, v) in &lp.objective {
        c[j] += v;
    }
    t.load_objective(&c);
    let remaining = opts.max_iterations.saturating_sub(stats.iterations);
    match t.run(opts, &mut stats, remaining) {
        Err(()) => (Outcome::IterationLimit { phase: 2 }, stats),
        Ok(false) => (Outcome::Unbounded, stats),
        Ok(true) => {
            let mut x = vec![0.0; n];
            for r in 0..m {
                let b = t.basis[r];
                if b < n {
                    x[b] = t.rhs(r).max(0.0);
                }
            }
            let objective = lp.objective.iter().map(|&(j, v)| v * x[j]).sum();
            (Outcome::Optimal { x, objective }, stats)
        }
    }
}
