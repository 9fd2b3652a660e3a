//! Dense two-phase simplex with Bland's rule.
//!
//! Programs here have a handful of rows and columns, so the solver keeps a
//! full tableau and recomputes reduced costs at every pivot. Degenerate
//! cycling is ruled out by Bland's smallest-index rule on both the entering
//! and the leaving variable.

use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

static TRACE: AtomicBool = AtomicBool::new(false);

/// Dumps every pivot to standard error.
pub fn set_trace(on: bool) {
    TRACE.store(on, Ordering::Relaxed);
}

fn tracing() -> bool {
    TRACE.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Row {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row::new(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row::new(coeffs, Relation::Eq, rhs)
    }

    fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, x)| a * x).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    /// `ray` keeps every row feasible when added to a feasible point with any
    /// positive weight and strictly improves the objective.
    Unbounded { ray: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub lp_tol: f64,
    pub pivot_tol: f64,
    pub max_pivots: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            lp_tol: 1e-9,
            pivot_tol: 1e-11,
            max_pivots: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical breakdown at pivot {step}: {detail}")]
    NumericBreakdown { step: usize, detail: String },
    #[error("strict system optimum sigma = {sigma} is neither 0 nor 1")]
    MidRangeOptimum { sigma: f64 },
    #[error("no optimum after {0} pivots")]
    IterationLimit(usize),
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>, bounds: Vec<VarBound>) -> Self {
        LinearProgram {
            sense,
            objective,
            rows: Vec::new(),
            bounds,
        }
    }

    pub fn push(&mut self, row: Row) -> &mut Self {
        self.rows.push(row);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if row.coeffs.iter().any(|a| !a.is_finite()) || !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} is not finite")));
            }
        }
        Ok(())
    }

    /// Whether `x` satisfies every row within `tol` (scaled by row size) and
    /// the sign bounds.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let rows_ok = self.rows.iter().all(|r| {
            let size: f64 = r.coeffs.iter().zip(x).map(|(a, x)| (a * x).abs()).sum();
            r.violation(x) <= tol * size.max(r.rhs.abs()).max(1.0)
        });
        let bounds_ok = self
            .bounds
            .iter()
            .zip(x)
            .all(|(b, &x)| *b == VarBound::Free || x >= -tol);
        rows_ok && bounds_ok
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Textbook dual. Its optimal value equals the primal one whenever
    /// either is finite.
    pub fn dual(&self) -> LinearProgram {
        let n = self.num_vars();
        let m = self.rows.len();
        // Dual multiplier y_i sign: min-form wants y ≥ 0 on ≥ rows and y ≤ 0
        // on ≤ rows; max-form the reverse. Negative multipliers are
        // substituted by y = -y' so every dual variable is free or ≥ 0.
        let flip: Vec<f64> = self
            .rows
            .iter()
            .map(|r| match (self.sense, r.relation) {
                (Sense::Minimize, Relation::Le) | (Sense::Maximize, Relation::Ge) => -1.0,
                _ => 1.0,
            })
            .collect();
        let bounds = self
            .rows
            .iter()
            .map(|r| match r.relation {
                Relation::Eq => VarBound::Free,
                _ => VarBound::NonNegative,
            })
            .collect();
        let objective = (0..m).map(|i| flip[i] * self.rows[i].rhs).collect();
        let (sense, inequality) = match self.sense {
            Sense::Minimize => (Sense::Maximize, Relation::Le),
            Sense::Maximize => (Sense::Minimize, Relation::Ge),
        };
        let rows = (0..n)
            .map(|j| {
                let coeffs = (0..m).map(|i| flip[i] * self.rows[i].coeffs[j]).collect();
                let relation = match self.bounds[j] {
                    VarBound::Free => Relation::Eq,
                    VarBound::NonNegative => inequality,
                };
                Row::new(coeffs, relation, self.objective[j])
            })
            .collect();
        LinearProgram {
            sense,
            objective,
            rows,
            bounds,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    Simplex::build(lp, opts).run(lp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    /// Original variable `j`, with sign +1 or -1 for split free variables.
    Orig(usize, i8),
    Slack,
    Artificial,
}

struct Simplex<'o> {
    opts: &'o SolverOptions,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    cols: Vec<ColKind>,
    /// Minimisation costs over standard-form columns.
    cost: Vec<f64>,
    pivots: usize,
}

impl<'o> Simplex<'o> {
    fn build(lp: &LinearProgram, opts: &'o SolverOptions) -> Self {
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cols = Vec::new();
        let mut cost = Vec::new();
        for (j, b) in lp.bounds.iter().enumerate() {
            cols.push(ColKind::Orig(j, 1));
            cost.push(sign * lp.objective[j]);
            if *b == VarBound::Free {
                cols.push(ColKind::Orig(j, -1));
                cost.push(-sign * lp.objective[j]);
            }
        }
        let n_struct = cols.len();
        let m = lp.rows.len();
        let mut a = vec![vec![0.0; n_struct]; m];
        let mut b = vec![0.0; m];
        let mut relations = Vec::with_capacity(m);
        for (i, row) in lp.rows.iter().enumerate() {
            let flip = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            for (c, kind) in cols.iter().enumerate() {
                if let ColKind::Orig(j, s) = *kind {
                    a[i][c] = flip * f64::from(s) * row.coeffs[j];
                }
            }
            b[i] = flip * row.rhs;
            relations.push(match (row.relation, flip < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            });
        }
        let mut basis = vec![usize::MAX; m];
        let mut push_col = |a: &mut Vec<Vec<f64>>, row: usize, v: f64, kind: ColKind| {
            for (i, r) in a.iter_mut().enumerate() {
                r.push(if i == row { v } else { 0.0 });
            }
            cols.push(kind);
            cost.push(0.0);
            cols.len() - 1
        };
        for (i, rel) in relations.iter().enumerate() {
            match rel {
                Relation::Le => basis[i] = push_col(&mut a, i, 1.0, ColKind::Slack),
                Relation::Ge => {
                    push_col(&mut a, i, -1.0, ColKind::Slack);
                }
                Relation::Eq => {}
            }
        }
        for (i, rel) in relations.iter().enumerate() {
            if *rel != Relation::Le {
                basis[i] = push_col(&mut a, i, 1.0, ColKind::Artificial);
            }
        }
        Simplex {
            opts,
            a,
            b,
            basis,
            cols,
            cost,
            pivots: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.cols.len()
    }

    fn reduced_cost(&self, c: &[f64], j: usize) -> f64 {
        let z: f64 = self
            .basis
            .iter()
            .enumerate()
            .map(|(i, &bi)| c[bi] * self.a[i][j])
            .sum();
        c[j] - z
    }

    fn pivot(&mut self, r: usize, e: usize, phase: u8) -> Result<(), LpError> {
        let p = self.a[r][e];
        if p.abs() < self.opts.pivot_tol || !p.is_finite() {
            return Err(LpError::NumericBreakdown {
                step: self.pivots,
                detail: format!("pivot element {p:e} in row {r}, column {e}"),
            });
        }
        if tracing() {
            eprintln!(
                "lp pivot {}: phase {phase}, column {e} enters, column {} leaves (row {r}, element {p:e})",
                self.pivots, self.basis[r]
            );
        }
        let n = self.ncols();
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        self.b[r] /= p;
        self.a[r][e] = 1.0;
        let prow = self.a[r].clone();
        let pb = self.b[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][e];
            if f == 0.0 {
                continue;
            }
            for (a, p) in self.a[i].iter_mut().zip(&prow).take(n) {
                *a -= f * p;
            }
            self.a[i][e] = 0.0;
            self.b[i] -= f * pb;
            if self.b[i] < 0.0 && self.b[i] > -self.opts.lp_tol {
                self.b[i] = 0.0;
            }
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NumericBreakdown {
                step: self.pivots,
                detail: "non-finite tableau entry".into(),
            });
        }
        self.basis[r] = e;
        self.pivots += 1;
        if self.pivots > self.opts.max_pivots {
            return Err(LpError::IterationLimit(self.opts.max_pivots));
        }
        Ok(())
    }

    /// Minimises `c` over the current tableau. Returns the entering column of
    /// an improving ray when unbounded.
    fn optimize(&mut self, c: &[f64], allowed: &[bool], phase: u8) -> Result<Option<usize>, LpError> {
        let tol = self.opts.lp_tol;
        loop {
            let entering = (0..self.ncols())
                .find(|&j| allowed[j] && !self.basis.contains(&j) && self.reduced_cost(c, j) < -tol);
            let Some(e) = entering else {
                return Ok(None);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aie = self.a[i][e];
                if aie > tol {
                    let ratio = self.b[i] / aie;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            let tie = (ratio - best).abs() <= tol * best.abs().max(1.0);
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, e, phase)?,
                None => return Ok(Some(e)),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        let n = self.ncols();
        let is_art: Vec<bool> = self.cols.iter().map(|k| *k == ColKind::Artificial).collect();
        if is_art.iter().any(|&x| x) {
            let c1: Vec<f64> = is_art.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect();
            let all = vec![true; n];
            self.optimize(&c1, &all, 1)?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.b)
                .filter(|(bi, _)| is_art[**bi])
                .map(|(_, v)| *v)
                .sum();
            let scale = self.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if infeas > self.opts.lp_tol * scale {
                return Ok(LpOutcome {
                    status: LpStatus::Infeasible,
                    pivots: self.pivots,
                });
            }
            self.drive_out_artificials(&is_art)?;
        }
        let allowed: Vec<bool> = is_art.iter().map(|x| !x).collect();
        let cost = self.cost.clone();
        if let Some(e) = self.optimize(&cost, &allowed, 2)? {
            let mut ray_std = vec![0.0; n];
            ray_std[e] = 1.0;
            for (i, &bi) in self.basis.iter().enumerate() {
                ray_std[bi] = -self.a[i][e];
            }
            return Ok(LpOutcome {
                status: LpStatus::Unbounded {
                    ray: self.to_original(&ray_std, lp.num_vars()),
                },
                pivots: self.pivots,
            });
        }
        let mut xs = vec![0.0; n];
        for (i, &bi) in self.basis.iter().enumerate() {
            xs[bi] = self.b[i].max(0.0);
        }
        let x = self.to_original(&xs, lp.num_vars());
        if !lp.is_feasible(&x, self.opts.lp_tol) {
            let worst = lp
                .rows
                .iter()
                .map(|r| r.violation(&x))
                .fold(0.0f64, f64::max);
            return Err(LpError::NumericBreakdown {
                step: self.pivots,
                detail: format!("optimal point violates a row by {worst:e}"),
            });
        }
        Ok(LpOutcome {
            status: LpStatus::Optimal {
                value: lp.objective_value(&x),
                x,
            },
            pivots: self.pivots,
        })
    }

    /// After a feasible phase 1, pivots remaining basic artificials (at zero
    /// level) out of the basis, or drops their rows when redundant.
    fn drive_out_artificials(&mut self, is_art: &[bool]) -> Result<(), LpError> {
        let mut i = 0;
        while i < self.a.len() {
            if !is_art[self.basis[i]] {
                i += 1;
                continue;
            }
            let best = (0..self.ncols())
                .filter(|&j| !is_art[j] && !self.basis.contains(&j))
                .map(|j| (j, self.a[i][j].abs()))
                .filter(|&(_, v)| v > self.opts.pivot_tol.max(self.opts.lp_tol))
                .fold(None::<(usize, f64)>, |acc, (j, v)| match acc {
                    Some((_, bv)) if bv >= v => acc,
                    _ => Some((j, v)),
                });
            match best {
                Some((j, _)) => {
                    self.pivot(i, j, 1)?;
                    i += 1;
                }
                None => {
                    self.a.remove(i);
                    self.b.remove(i);
                    self.basis.remove(i);
                }
            }
        }
        Ok(())
    }

    fn to_original(&self, xs: &[f64], n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (c, kind) in self.cols.iter().enumerate() {
            if let ColKind::Orig(j, s) = *kind {
                x[j] += f64::from(s) * xs[c];
            }
        }
        x
    }
}

/// Homogeneous system `S w < 0`, `W w ≤ 0`, `w_v > 0` for `v` in
/// `strict_vars`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrictSystem {
    pub dim: usize,
    pub strict_rows: Vec<Vec<f64>>,
    pub weak_rows: Vec<Vec<f64>>,
    pub strict_vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrictSolve {
    Solvable { witness: Vec<f64> },
    Unsolvable,
}

impl StrictSolve {
    pub fn is_solvable(&self) -> bool {
        matches!(self, StrictSolve::Solvable { .. })
    }
}

/// Decides a homogeneous strict system through
/// `max σ  s.t.  S w + σ ≤ 0,  W w ≤ 0,  w_v ≥ σ,  σ ≤ 1`.
/// By homogeneity the optimum is 0 (unsolvable) or 1 (solvable).
pub fn strict_system_solvable(
    sys: &StrictSystem,
    opts: &SolverOptions,
) -> Result<StrictSolve, LpError> {
    if sys.strict_rows.is_empty() && sys.strict_vars.is_empty() {
        return Err(LpError::Malformed(
            "strict system without strict rows or strict variables".into(),
        ));
    }
    let k = sys.dim;
    if let Some(v) = sys.strict_vars.iter().find(|&&v| v >= k) {
        return Err(LpError::Malformed(format!("strict variable {v} out of range")));
    }
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective, vec![VarBound::Free; k + 1]);
    for r in &sys.strict_rows {
        let mut c = r.clone();
        c.push(1.0);
        lp.push(Row::le(c, 0.0));
    }
    for r in &sys.weak_rows {
        let mut c = r.clone();
        c.push(0.0);
        lp.push(Row::le(c, 0.0));
    }
    for &v in &sys.strict_vars {
        let mut c = vec![0.0; k + 1];
        c[v] = -1.0;
        c[k] = 1.0;
        lp.push(Row::le(c, 0.0));
    }
    let mut cap = vec![0.0; k + 1];
    cap[k] = 1.0;
    lp.push(Row::le(cap, 1.0));

    match solve_with(&lp, opts)?.status {
        LpStatus::Optimal { value, mut x } => {
            if value >= 1.0 - opts.lp_tol {
                x.truncate(k);
                Ok(StrictSolve::Solvable { witness: x })
            } else if value <= opts.lp_tol {
                Ok(StrictSolve::Unsolvable)
            } else {
                Err(LpError::MidRangeOptimum { sigma: value })
            }
        }
        LpStatus::Infeasible => Err(LpError::NumericBreakdown {
            step: 0,
            detail: "strict-system LP reported infeasible although w = 0 is feasible".into(),
        }),
        LpStatus::Unbounded { .. } => Err(LpError::NumericBreakdown {
            step: 0,
            detail: "strict-system LP reported unbounded despite the cap".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: &LpOutcome) -> (f64, &[f64]) {
        match &o.status {
            LpStatus::Optimal { value, x } => (*value, x),
            s => panic!("expected optimum, got {s:?}"),
        }
    }

    #[test]
    fn feasibility_program_has_zero_value() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![0.0], vec![VarBound::Free]);
        lp.push(Row::le(vec![1.0], -1.0));
        let out = solve(&lp).unwrap();
        let (v, x) = optimal(&out);
        assert_eq!(v, 0.0);
        assert!(x[0] <= -1.0 + 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![0.0], vec![VarBound::Free]);
        lp.push(Row::le(vec![1.0], -1.0));
        lp.push(Row::le(vec![-1.0], 0.0));
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_reports_ray() {
        let lp = LinearProgram::new(Sense::Minimize, vec![-1.0], vec![VarBound::NonNegative]);
        assert_eq!(
            solve(&lp).unwrap().status,
            LpStatus::Unbounded { ray: vec![1.0] }
        );
    }

    #[test]
    fn small_textbook_program() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36
        let mut lp = LinearProgram::new(
            Sense::Maximize,
            vec![3.0, 5.0],
            vec![VarBound::NonNegative; 2],
        );
        lp.push(Row::le(vec![1.0, 0.0], 4.0))
            .push(Row::le(vec![0.0, 2.0], 12.0))
            .push(Row::le(vec![3.0, 2.0], 18.0));
        let out = solve(&lp).unwrap();
        let (v, x) = optimal(&out);
        assert!((v - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        let dual = solve(&lp.dual()).unwrap();
        assert!((optimal(&dual).0 - 36.0).abs() < 1e-8);
    }

    #[test]
    fn equalities_and_redundant_rows() {
        // x + y = 1 twice, x - y ≥ -3, min 2x + y over free vars with x ≥ -1
        let mut lp = LinearProgram::new(Sense::Minimize, vec![2.0, 1.0], vec![VarBound::Free; 2]);
        lp.push(Row::eq(vec![1.0, 1.0], 1.0))
            .push(Row::eq(vec![2.0, 2.0], 2.0))
            .push(Row::ge(vec![1.0, 0.0], -1.0));
        let out = solve(&lp).unwrap();
        let (v, x) = optimal(&out);
        assert!((v - 0.0).abs() < 1e-12, "{v}");
        assert!((x[0] + 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        let dual = solve(&lp.dual()).unwrap();
        assert!((optimal(&dual).0 - v).abs() < 1e-8);
    }

    #[test]
    fn degenerate_program_terminates() {
        // Beale's cycling example under the textbook rule.
        let mut lp = LinearProgram::new(
            Sense::Minimize,
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![VarBound::NonNegative; 4],
        );
        lp.push(Row::le(vec![0.25, -60.0, -0.04, 9.0], 0.0))
            .push(Row::le(vec![0.5, -90.0, -0.02, 3.0], 0.0))
            .push(Row::le(vec![0.0, 0.0, 1.0, 0.0], 1.0));
        let out = solve(&lp).unwrap();
        let (v, _) = optimal(&out);
        assert!((v + 0.05).abs() < 1e-12);
    }

    #[test]
    fn ray_improves_and_stays_feasible() {
        // min -x - y s.t. x - y ≤ 1, x, y ≥ 0
        let mut lp = LinearProgram::new(
            Sense::Minimize,
            vec![-1.0, -1.0],
            vec![VarBound::NonNegative; 2],
        );
        lp.push(Row::le(vec![1.0, -1.0], 1.0));
        let LpStatus::Unbounded { ray } = solve(&lp).unwrap().status else {
            panic!("expected unbounded");
        };
        assert!(lp.objective_value(&ray) < 0.0);
        assert!(ray.iter().all(|&r| r >= 0.0));
        assert!(ray[0] - ray[1] <= 1e-12);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0], vec![VarBound::Free]);
        lp.push(Row::le(vec![1.0, 2.0], 0.0));
        assert!(matches!(solve(&lp), Err(LpError::Malformed(_))));
    }

    fn sys(strict: &[&[f64]], weak: &[&[f64]], vars: &[usize], dim: usize) -> StrictSystem {
        StrictSystem {
            dim,
            strict_rows: strict.iter().map(|r| r.to_vec()).collect(),
            weak_rows: weak.iter().map(|r| r.to_vec()).collect(),
            strict_vars: vars.to_vec(),
        }
    }

    #[test]
    fn strict_system_examples() {
        let o = SolverOptions::default();
        let s = sys(&[&[0.0, 1.0]], &[&[0.0, -1.0]], &[], 2);
        assert_eq!(strict_system_solvable(&s, &o).unwrap(), StrictSolve::Unsolvable);

        let s = sys(&[&[1.0]], &[], &[], 1);
        let StrictSolve::Solvable { witness } = strict_system_solvable(&s, &o).unwrap() else {
            panic!()
        };
        assert!(witness[0] <= -1.0 + 1e-9);

        // (u1, u2, v): (0,1)·u - 2v < 0, (0,-1)·u ≤ 0, v > 0
        let s = sys(&[&[0.0, 1.0, -2.0]], &[&[0.0, -1.0, 0.0]], &[2], 3);
        let StrictSolve::Solvable { witness } = strict_system_solvable(&s, &o).unwrap() else {
            panic!()
        };
        assert!(witness[1] - 2.0 * witness[2] < 0.0);
        assert!(-witness[1] <= 1e-9);
        assert!(witness[2] > 0.0);
    }

    #[test]
    fn strict_system_needs_a_strict_part() {
        let s = sys(&[], &[&[1.0]], &[], 1);
        assert!(matches!(
            strict_system_solvable(&s, &SolverOptions::default()),
            Err(LpError::Malformed(_))
        ));
    }

    #[test]
    fn strict_system_is_scale_invariant() {
        let o = SolverOptions::default();
        let base = sys(&[&[1.0, 2.0], &[-1.0, 0.5]], &[&[0.0, -1.0]], &[], 2);
        let mut scaled = base.clone();
        for r in scaled.strict_rows.iter_mut().chain(scaled.weak_rows.iter_mut()) {
            for v in r.iter_mut() {
                *v *= 3.0;
            }
        }
        assert_eq!(
            strict_system_solvable(&base, &o).unwrap().is_solvable(),
            strict_system_solvable(&scaled, &o).unwrap().is_solvable()
        );
    }
}
