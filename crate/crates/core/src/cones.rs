//! Active sets, critical directions and membership tests for the cones
//! around a feasible point: the linearizing cone `L`, the cone of feasible
//! directions `Z`, the second-order sets `A(x̄,d)` and `B(x̄,d)`, the
//! Bouligand tangent cone `T` and the pseudotangent cone `PT`.
//!
//! `A`, `B` and `Z` membership is decided on a grid with an exact sign test.
//! `T` and `PT` are only ever probed, so their verdicts are relative to a
//! search budget or a sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::deriv::{second_dir_deriv, SecondDirDeriv, StepGrid};
use crate::expr::EvalError;
use crate::lp::{solve_with, LinearProgram, LpStatus, Row, Sense, SolverOptions, VarBound};
use crate::problem::{Function, Problem};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Values, gradients and the active set at a candidate point.
#[derive(Debug, Clone)]
pub struct PointContext<'p> {
    pub problem: &'p Problem,
    pub tol: Tolerances,
    pub x: Vec<f64>,
    pub f_values: Vec<f64>,
    pub g_values: Vec<f64>,
    /// `I(x̄)`, ascending constraint indices.
    pub active: Vec<usize>,
    pub grad_f: Vec<Vec<f64>>,
    /// Gradients of the active constraints, aligned with `active`.
    pub grad_g: Vec<Vec<f64>>,
    pub feasible: bool,
}

impl<'p> PointContext<'p> {
    pub fn new(problem: &'p Problem, x: &[f64], tol: &Tolerances) -> Result<Self, EvalError> {
        assert_eq!(x.len(), problem.dim(), "point dimension");
        let f_values = problem
            .objectives
            .iter()
            .map(|f| f.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        let g_values = problem
            .constraints
            .iter()
            .map(|g| g.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        let active: Vec<usize> = g_values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() <= tol.active_tol)
            .map(|(i, _)| i)
            .collect();
        let grad_f = problem
            .objectives
            .iter()
            .map(|f| f.grad(x))
            .collect::<Result<Vec<_>, _>>()?;
        let grad_g = active
            .iter()
            .map(|&i| problem.constraints[i].grad(x))
            .collect::<Result<Vec<_>, _>>()?;
        let feasible = g_values.iter().all(|&v| v <= tol.feas_tol);
        Ok(PointContext {
            problem,
            tol: *tol,
            x: x.to_vec(),
            f_values,
            g_values,
            active,
            grad_f,
            grad_g,
            feasible,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Position of constraint `i` within `active`.
    pub fn active_pos(&self, i: usize) -> Option<usize> {
        self.active.iter().position(|&a| a == i)
    }

    pub fn label_g(&self, i: usize) -> String {
        self.problem.constraints[i].label.clone()
    }

    /// Rows `∇g_i(x̄)`, `i ∈ I(x̄)`, describing `L(x̄) = {d : rows·d ≤ 0}`.
    pub fn linearizing_rows(&self) -> Vec<Vec<f64>> {
        self.grad_g.clone()
    }

    /// Rows describing the critical cone: objective gradients and active
    /// constraint gradients.
    pub fn critical_rows(&self) -> Vec<Vec<f64>> {
        self.grad_f.iter().chain(&self.grad_g).cloned().collect()
    }
}

/// Shorthand for [`PointContext::new`].
pub fn point_context<'p>(
    problem: &'p Problem,
    x: &[f64],
    tol: &Tolerances,
) -> Result<PointContext<'p>, EvalError> {
    PointContext::new(problem, x, tol)
}

/// A second directional derivative, or the evaluation error that prevented
/// computing it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum SecondOrder {
    Computed(SecondDirDeriv),
    Failed { error: String },
}

impl SecondOrder {
    pub fn value(&self) -> Option<f64> {
        match self {
            SecondOrder::Computed(d) => d.converged(),
            SecondOrder::Failed { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SecondOrder::Computed(d) => format!("{:?}", d.status).to_lowercase(),
            SecondOrder::Failed { error } => format!("error: {error}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionAnalysis {
    pub d: Vec<f64>,
    /// `∇f_j(x̄)d` for every objective.
    pub f_slopes: Vec<f64>,
    /// `∇g_i(x̄)d`, aligned with `PointContext::active`.
    pub g_slopes: Vec<f64>,
    pub critical: bool,
    /// `J(x̄,d)`: objectives with a vanishing first-order term.
    pub j_set: Vec<usize>,
    /// `K(x̄,d)`: active constraints with a vanishing first-order term.
    pub k_set: Vec<usize>,
    /// `f''_j(x̄,d)` for every objective.
    pub f_second: Vec<SecondOrder>,
    /// `g''_i(x̄,d)`, aligned with `PointContext::active`.
    pub g_second: Vec<SecondOrder>,
}

impl DirectionAnalysis {
    pub fn f_second_value(&self, j: usize) -> Option<f64> {
        self.f_second[j].value()
    }

    pub fn g_second_value(&self, ctx: &PointContext<'_>, i: usize) -> Option<f64> {
        ctx.active_pos(i).and_then(|p| self.g_second[p].value())
    }
}

pub fn analyze_direction(ctx: &PointContext<'_>, d: &[f64], grid: &StepGrid) -> DirectionAnalysis {
    assert_eq!(d.len(), ctx.dim(), "direction dimension");
    let tol = ctx.tol.crit_tol;
    let f_slopes: Vec<f64> = ctx.grad_f.iter().map(|g| dot(g, d)).collect();
    let g_slopes: Vec<f64> = ctx.grad_g.iter().map(|g| dot(g, d)).collect();
    let critical = f_slopes.iter().chain(&g_slopes).all(|&s| s <= tol);
    let j_set = (0..f_slopes.len()).filter(|&j| f_slopes[j].abs() <= tol).collect();
    let k_set = ctx
        .active
        .iter()
        .zip(&g_slopes)
        .filter(|(_, s)| s.abs() <= tol)
        .map(|(&i, _)| i)
        .collect();
    let second = |f: &crate::problem::Function| {
        match second_dir_deriv(&f.expr, &f.gradient, &ctx.x, d, grid) {
            Ok(r) => SecondOrder::Computed(r),
            Err(e) => SecondOrder::Failed {
                error: e.to_string(),
            },
        }
    };
    let f_second = ctx.problem.objectives.iter().map(second).collect();
    let g_second = ctx
        .active
        .iter()
        .map(|&i| second(&ctx.problem.constraints[i]))
        .collect();
    DirectionAnalysis {
        d: d.to_vec(),
        f_slopes,
        g_slopes,
        critical,
        j_set,
        k_set,
        f_second,
        g_second,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Member {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridViolation {
    pub constraint: String,
    pub t: f64,
    /// `None` when the constraint could not be evaluated there.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRow {
    pub constraint: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TangentStepStatus {
    /// A feasible `x̄ + t u` with `|u - d| ≤ √t` was found.
    Supporting,
    /// No feasible `x̄ + t u` within the outer radius of `d` was found.
    Separated,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentStep {
    pub t: f64,
    pub status: TangentStepStatus,
    /// Distance from `d` to the nearest feasible `u` found.
    pub nearest: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Sign test on a grid. For members, `threshold` is the largest grid
    /// step below which every tested value is non-positive.
    Grid {
        threshold: Option<f64>,
        violations: Vec<GridViolation>,
    },
    Linear {
        rows: Vec<LinearRow>,
    },
    Tangent {
        steps: Vec<TangentStep>,
    },
    Conic {
        alpha: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeMembership {
    pub member: Member,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConeMembership {
    fn yes(witness: Option<Witness>) -> Self {
        ConeMembership {
            member: Member::Yes,
            witness,
            note: None,
        }
    }

    fn no(witness: Witness) -> Self {
        ConeMembership {
            member: Member::No,
            witness: Some(witness),
            note: None,
        }
    }

    fn inconclusive(note: String) -> Self {
        ConeMembership {
            member: Member::Inconclusive,
            witness: None,
            note: Some(note),
        }
    }

    pub fn is_yes(&self) -> bool {
        self.member == Member::Yes
    }

    pub fn is_no(&self) -> bool {
        self.member == Member::No
    }
}

/// `z ∈ B(x̄,d)`: `∇g_i(x̄)z + g''_i(x̄,d) ≤ b_tol` for all `i ∈ K(x̄,d)`.
pub fn in_b(ctx: &PointContext<'_>, da: &DirectionAnalysis, z: &[f64]) -> ConeMembership {
    let mut bad = Vec::new();
    for &i in &da.k_set {
        let p = ctx.active_pos(i).expect("K is a subset of I");
        let Some(second) = da.g_second[p].value() else {
            return ConeMembership::inconclusive(format!(
                "{}''(x,d) unavailable ({})",
                ctx.label_g(i),
                da.g_second[p].describe()
            ));
        };
        let value = dot(&ctx.grad_g[p], z) + second;
        if value > ctx.tol.b_tol {
            bad.push(LinearRow {
                constraint: ctx.label_g(i),
                value,
            });
        }
    }
    if bad.is_empty() {
        ConeMembership::yes(None)
    } else {
        ConeMembership::no(Witness::Linear { rows: bad })
    }
}

/// Shared sign test: member iff every listed constraint is non-positive at
/// `point_at(t)` for all grid steps from some index on.
/// Rounding noise of `g` near `x`: values of smaller magnitude along a curve
/// through `x` carry no sign information.
fn rounding_noise(g: &Function, x: &[f64]) -> f64 {
    let scale = g.eval(x).map_or(0.0, f64::abs)
        + g.grad(x).map_or(0.0, |gr| {
            gr.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>()
        });
    16.0 * f64::EPSILON * scale
}

/// Sign test over a decreasing grid. Trailing steps whose values all lie
/// within rounding noise are dropped; the deepest remaining step decides.
fn grid_sign_test(
    problem: &Problem,
    indices: &[usize],
    x: &[f64],
    ts: &[f64],
    point_at: impl Fn(f64) -> Vec<f64>,
) -> ConeMembership {
    if indices.is_empty() {
        return ConeMembership::yes(None);
    }
    let noise: Vec<f64> = indices
        .iter()
        .map(|&i| rounding_noise(&problem.constraints[i], x))
        .collect();
    let mut violations = Vec::new();
    let mut positive = vec![false; ts.len()];
    let mut last_resolved = None;
    for (k, &t) in ts.iter().enumerate() {
        let p = point_at(t);
        for (&i, &floor) in indices.iter().zip(&noise) {
            let g = &problem.constraints[i];
            let value = g.eval(&p).ok();
            let resolved = floor == 0.0 || value.is_none_or(|v| v.abs() > floor);
            if resolved {
                last_resolved = Some(k);
            }
            if value.is_none_or(|v| v > floor) {
                violations.push(GridViolation {
                    constraint: g.label.clone(),
                    t,
                    value,
                });
                positive[k] = true;
            }
        }
    }
    let Some(last) = last_resolved else {
        return ConeMembership::yes(None);
    };
    if positive[last] {
        return ConeMembership::no(Witness::Grid {
            threshold: None,
            violations,
        });
    }
    let k0 = positive[..last]
        .iter()
        .rposition(|&p| p)
        .map_or(0, |k| k + 1);
    violations.retain(|v| v.t >= ts[last]);
    ConeMembership::yes(Some(Witness::Grid {
        threshold: Some(ts[k0]),
        violations,
    }))
}

/// `z ∈ A(x̄,d)`: `g_i(x̄ + td + t²z/2) ≤ 0` for all `i ∈ K(x̄,d)` and all
/// grid steps below a threshold. Sign test without tolerance beyond rounding noise.
pub fn in_a(
    ctx: &PointContext<'_>,
    da: &DirectionAnalysis,
    z: &[f64],
    grid: &StepGrid,
) -> ConeMembership {
    let ts: Vec<f64> = grid.points().collect();
    grid_sign_test(ctx.problem, &da.k_set, &ctx.x, &ts, |t| {
        let h = 0.5 * t * t;
        ctx.x
            .iter()
            .zip(&da.d)
            .zip(z)
            .map(|((x, d), z)| x + t * d + h * z)
            .collect()
    })
}

/// `d ∈ L(x̄)`: `∇g_i(x̄)d ≤ crit_tol` for all `i ∈ I(x̄)`.
pub fn in_linearizing_cone(ctx: &PointContext<'_>, d: &[f64]) -> ConeMembership {
    let bad: Vec<LinearRow> = ctx
        .active
        .iter()
        .zip(&ctx.grad_g)
        .map(|(&i, g)| (i, dot(g, d)))
        .filter(|&(_, v)| v > ctx.tol.crit_tol)
        .map(|(i, value)| LinearRow {
            constraint: ctx.label_g(i),
            value,
        })
        .collect();
    if bad.is_empty() {
        ConeMembership::yes(None)
    } else {
        ConeMembership::no(Witness::Linear { rows: bad })
    }
}

/// `d ∈ Z(x̄)`: `x̄ + td` satisfies every constraint for all grid steps below
/// a threshold.
pub fn in_feasible_direction_cone(
    ctx: &PointContext<'_>,
    d: &[f64],
    grid: &StepGrid,
) -> ConeMembership {
    let ts: Vec<f64> = grid.points().collect();
    let all: Vec<usize> = (0..ctx.problem.constraints.len()).collect();
    grid_sign_test(ctx.problem, &all, &ctx.x, &ts, |t| {
        ctx.x.iter().zip(d).map(|(x, d)| x + t * d).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TangentBudget {
    pub steps: usize,
    pub t0: f64,
    pub rho: f64,
    /// Candidate evaluations per grid step.
    pub search_evals: usize,
    /// Radius around `d` beyond which feasible points do not count as
    /// evidence either way.
    pub outer_radius: f64,
}

impl Default for TangentBudget {
    fn default() -> Self {
        TangentBudget {
            steps: 12,
            t0: 0.1,
            rho: 0.5,
            search_evals: 200,
            outer_radius: 0.25,
        }
    }
}

fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let dim = center.len();
    let w: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm(&w);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    center
        .iter()
        .zip(&w)
        .map(|(c, w)| if n > 0.0 { c + r * w / n } else { *c })
        .collect()
}

/// Probes `d ∈ T(S, x̄)` by searching, for each `t_k`, feasible points
/// `x̄ + t_k u` with `u` near `d`. Member when every step of the second half
/// of the grid finds one within `√t_k`; non-member when none of those steps
/// finds any within the outer radius. Seeded and deterministic.
pub fn tangent_probe(
    ctx: &PointContext<'_>,
    d: &[f64],
    budget: &TangentBudget,
    seed: u64,
) -> ConeMembership {
    let len = norm(d);
    if len == 0.0 {
        return ConeMembership::yes(None);
    }
    let d: Vec<f64> = d.iter().map(|v| v / len).collect();
    let dim = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = budget.outer_radius;
    let mut steps = Vec::with_capacity(budget.steps);
    for k in 0..budget.steps {
        let t = budget.t0 * budget.rho.powi(k as i32);
        let inner = t.sqrt().min(outer);
        let feasible = |u: &[f64]| {
            let p: Vec<f64> = ctx.x.iter().zip(u).map(|(x, u)| x + t * u).collect();
            ctx.problem.is_feasible(&p)
        };

        let mut candidates: Vec<Vec<f64>> = vec![d.clone()];
        let mut radii: Vec<f64> = (0..6).map(|j| outer * 0.5f64.powi(j)).collect();
        radii.extend((0..6).map(|j| inner * 0.5f64.powi(j)));
        for &r in &radii {
            for axis in 0..dim {
                for sign in [1.0, -1.0] {
                    let mut u = d.clone();
                    u[axis] += sign * r;
                    candidates.push(u);
                }
            }
        }
        let mut nearest: Option<f64> = None;
        let mut evals = 0;
        let mut idx = 0;
        while evals < budget.search_evals {
            let u = if idx < candidates.len() {
                idx += 1;
                candidates[idx - 1].clone()
            } else if evals % 2 == 0 {
                ball_point(&mut rng, &d, inner)
            } else {
                ball_point(&mut rng, &d, outer)
            };
            evals += 1;
            if feasible(&u) {
                let dist = norm(&u.iter().zip(&d).map(|(a, b)| a - b).collect::<Vec<_>>());
                if dist <= outer {
                    nearest = Some(nearest.map_or(dist, |n: f64| n.min(dist)));
                    if dist <= inner {
                        break;
                    }
                }
            }
        }
        let status = match nearest {
            Some(n) if n <= inner => TangentStepStatus::Supporting,
            Some(_) => TangentStepStatus::Ambiguous,
            None => TangentStepStatus::Separated,
        };
        steps.push(TangentStep { t, status, nearest });
    }
    let tail = &steps[budget.steps / 2..];
    let all = |s: TangentStepStatus| !tail.is_empty() && tail.iter().all(|st| st.status == s);
    let member = if all(TangentStepStatus::Supporting) {
        Member::Yes
    } else if all(TangentStepStatus::Separated) {
        Member::No
    } else {
        Member::Inconclusive
    };
    ConeMembership {
        member,
        witness: Some(Witness::Tangent { steps }),
        note: None,
    }
}

/// `d ∈ PT`, relative to a sample of tangent directions: whether `d` is a
/// conic combination of the sample.
pub fn in_pseudotangent(
    sampled_t: &[Vec<f64>],
    d: &[f64],
    opts: &SolverOptions,
) -> ConeMembership {
    let n = sampled_t.len();
    if d.iter().all(|&v| v == 0.0) {
        return ConeMembership::yes(Some(Witness::Conic { alpha: vec![0.0; n] }));
    }
    if n == 0 {
        return ConeMembership::no(Witness::Conic { alpha: Vec::new() });
    }
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; n], vec![VarBound::NonNegative; n]);
    for (k, &dk) in d.iter().enumerate() {
        lp.push(Row::eq(sampled_t.iter().map(|u| u[k]).collect(), dk));
    }
    match solve_with(&lp, opts) {
        Ok(out) => match out.status {
            LpStatus::Optimal { x, .. } => ConeMembership::yes(Some(Witness::Conic { alpha: x })),
            _ => ConeMembership::no(Witness::Conic { alpha: Vec::new() }),
        },
        Err(e) => ConeMembership::inconclusive(e.to_string()),
    }
}

/// Unit directions in the polyhedral cone `{d : rows·d ≤ tol}`: first the
/// signed coordinate axes that lie in it, then Gaussian samples projected
/// onto it in the 1-norm. At most `n` directions, duplicates removed.
pub fn sample_cone(
    rows: &[Vec<f64>],
    dim: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
    tol: f64,
    opts: &SolverOptions,
) -> Vec<Vec<f64>> {
    let inside = |d: &[f64]| rows.iter().all(|r| dot(r, d) <= tol);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |out: &mut Vec<Vec<f64>>, d: Vec<f64>| {
        if out.len() < n && !out.iter().any(|e| distance(e, &d) < 1e-9) {
            out.push(d);
        }
    };
    for k in 0..dim {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[k] = sign;
            if inside(&e) {
                push(&mut out, e);
            }
        }
    }
    let mut attempts = 0;
    while out.len() < n && attempts < 4 * n.max(1) {
        attempts += 1;
        let w: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(d) = project_onto_cone(rows, &w, opts) {
            if inside(&d) {
                push(&mut out, d);
            }
        }
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// 1-norm projection of `w` onto `{d : rows·d ≤ 0}`, normalised; `None`
/// when the projection vanishes.
pub fn project_onto_cone(rows: &[Vec<f64>], w: &[f64], opts: &SolverOptions) -> Option<Vec<f64>> {
    let dim = w.len();
    if rows.is_empty() {
        return normalize(w.to_vec());
    }
    // variables: d (free), e (≥ 0); minimise Σe with |d - w| ≤ e
    let mut objective = vec![0.0; dim];
    objective.extend(std::iter::repeat_n(1.0, dim));
    let mut bounds = vec![VarBound::Free; dim];
    bounds.extend(std::iter::repeat_n(VarBound::NonNegative, dim));
    let mut lp = LinearProgram::new(Sense::Minimize, objective, bounds);
    for k in 0..dim {
        let mut up = vec![0.0; 2 * dim];
        up[k] = 1.0;
        up[dim + k] = -1.0;
        lp.push(Row::le(up, w[k]));
        let mut down = vec![0.0; 2 * dim];
        down[k] = -1.0;
        down[dim + k] = -1.0;
        lp.push(Row::le(down, -w[k]));
    }
    for r in rows {
        let mut c = r.clone();
        c.extend(std::iter::repeat_n(0.0, dim));
        lp.push(Row::le(c, 0.0));
    }
    match solve_with(&lp, opts).ok()?.status {
        LpStatus::Optimal { mut x, .. } => {
            x.truncate(dim);
            normalize(x)
        }
        _ => None,
    }
}

fn normalize(mut d: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&d);
    if n < 1e-9 {
        return None;
    }
    for v in d.iter_mut() {
        *v /= n;
        if v.abs() < 1e-12 {
            *v = 0.0;
        }
    }
    Some(d)
}
