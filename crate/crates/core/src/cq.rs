//! Constraint-qualification falsifiers: Zangwill (`cl Z = L`), second-order
//! Zangwill (`cl A(x̄,d) = B(x̄,d)`), Abadie (`L = T`) and Guignard
//! (`L = PT`).
//!
//! Each check samples candidates from the larger set and looks for one that
//! robustly avoids the smaller set. A failure carries the offending vector
//! and the membership evidence; absence of failure is reported as "no
//! counterexample found" with the sample count and seed, never as the CQ
//! holding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cones::{
    dot, in_a, in_b, in_feasible_direction_cone, in_pseudotangent, norm, project_onto_cone,
    sample_cone, tangent_probe, ConeMembership, DirectionAnalysis, PointContext, TangentBudget,
};
use crate::deriv::StepGrid;
use crate::kkt::CqStatus;
use crate::lp::{
    solve_with, strict_system_solvable, LinearProgram, LpStatus, Row, Sense, SolverOptions,
    StrictSolve, StrictSystem, VarBound,
};

/// Half-width of the box the interior point of `B(x̄,d)` is searched in.
const INTERIOR_BOX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqWitness {
    /// The direction `d` (first-order checks) or curvature vector `z`.
    pub vector: Vec<f64>,
    /// Index of the sample within the run.
    pub sample: usize,
    /// Seed of the per-sample generator (jitters, tangent search).
    pub sample_seed: u64,
    /// Perturbations of `vector` that were also rejected.
    pub jitters: usize,
    pub evidence: ConeMembership,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CqVerdict {
    NoCounterexampleFound,
    Fails { witness: Box<CqWitness> },
    /// The check's preconditions are not met (infeasible point, missing
    /// second derivatives, non-critical direction, LP failure).
    Unavailable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqEntry {
    pub name: String,
    pub verdict: CqVerdict,
    pub samples: usize,
    pub seed: u64,
    pub failures: usize,
    /// Whether the sample was doubled because the first verdict rested on
    /// a single witness or a single rescuing perturbation.
    pub doubled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CqEntry {
    fn unavailable(name: &str, samples: usize, seed: u64, reason: String) -> Self {
        CqEntry {
            name: name.into(),
            verdict: CqVerdict::Unavailable { reason },
            samples,
            seed,
            failures: 0,
            doubled: false,
            note: None,
        }
    }

    pub fn status(&self) -> CqStatus {
        match self.verdict {
            CqVerdict::NoCounterexampleFound => CqStatus::Clean,
            CqVerdict::Fails { .. } => CqStatus::Failed,
            CqVerdict::Unavailable { .. } => CqStatus::NotChecked,
        }
    }

    pub fn witness(&self) -> Option<&CqWitness> {
        match &self.verdict {
            CqVerdict::Fails { witness } => Some(witness),
            _ => None,
        }
    }
}

/// Seed of the generator owned by sample `k`.
pub fn sample_seed(seed: u64, k: usize) -> u64 {
    // splitmix64 finaliser over seed and index
    let mut z = seed ^ (k as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&w);
        if n > 1e-12 {
            return w.into_iter().map(|v| v / n).collect();
        }
    }
}

fn nonzero_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.into_iter().filter(|r| norm(r) > 0.0).collect()
}

/// Outcome of testing one sample and its perturbations.
struct SampleResult {
    accepted: usize,
    evidence: ConeMembership,
}

struct Tally {
    failures: usize,
    near_misses: usize,
    first: Option<CqWitness>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            failures: 0,
            near_misses: 0,
            first: None,
        }
    }

    fn add(&mut self, k: usize, seed: u64, vector: &[f64], jitters: usize, r: SampleResult) {
        match r.accepted {
            0 => {
                self.failures += 1;
                if self.first.is_none() {
                    self.first = Some(CqWitness {
                        vector: vector.to_vec(),
                        sample: k,
                        sample_seed: sample_seed(seed, k),
                        jitters,
                        evidence: r.evidence,
                    });
                }
            }
            1 => self.near_misses += 1,
            _ => {}
        }
    }

    fn wobbly(&self) -> bool {
        self.failures == 1 || self.near_misses > 0
    }

    fn into_entry(self, name: &str, samples: usize, seed: u64, doubled: bool) -> CqEntry {
        CqEntry {
            name: name.into(),
            verdict: match self.first {
                Some(w) => CqVerdict::Fails {
                    witness: Box::new(w),
                },
                None => CqVerdict::NoCounterexampleFound,
            },
            samples,
            seed,
            failures: self.failures,
            doubled,
            note: None,
        }
    }
}

/// Runs `once(n)` and, when its verdict is fragile, once more with `2n`.
fn with_doubling(
    name: &str,
    n: usize,
    seed: u64,
    mut once: impl FnMut(usize) -> Tally,
) -> CqEntry {
    let first = once(n);
    if first.wobbly() {
        once(2 * n).into_entry(name, 2 * n, seed, true)
    } else {
        first.into_entry(name, n, seed, false)
    }
}

/// Strictly interior direction of `{d : rows·d ≤ 0}`, if there is one.
fn interior_direction(rows: &[Vec<f64>], dim: usize, opts: &SolverOptions) -> Option<Vec<f64>> {
    if rows.is_empty() {
        return None;
    }
    let sys = StrictSystem {
        dim,
        strict_rows: rows.to_vec(),
        weak_rows: Vec::new(),
        strict_vars: Vec::new(),
    };
    match strict_system_solvable(&sys, opts).ok()? {
        StrictSolve::Solvable { witness } => {
            let n = norm(&witness);
            Some(witness.into_iter().map(|v| v / n).collect())
        }
        StrictSolve::Unsolvable => None,
    }
}

/// Searches `d ∈ L(x̄)` whose whole perturbation neighbourhood lies outside
/// the cone of feasible directions.
pub fn check_zangwill(ctx: &PointContext<'_>, n_samples: usize, seed: u64, grid: &StepGrid) -> CqEntry {
    const NAME: &str = "zangwill";
    if !ctx.feasible {
        return CqEntry::unavailable(NAME, n_samples, seed, "point is infeasible".into());
    }
    let opts = ctx.tol.lp_options();
    let dim = ctx.dim();
    let rows = nonzero_rows(ctx.linearizing_rows());
    let interior = interior_direction(&rows, dim, &opts);
    let q = ctx.tol.jitter_count;
    let eta = ctx.tol.jitter_radius;
    with_doubling(NAME, n_samples, seed, |n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dirs = sample_cone(&rows, dim, n, &mut rng, ctx.tol.crit_tol, &opts);
        let mut tally = Tally::new();
        for (k, d) in dirs.iter().enumerate() {
            let evidence = in_feasible_direction_cone(ctx, d, grid);
            let mut accepted = usize::from(evidence.is_yes());
            if accepted == 0 {
                let mut jr = ChaCha8Rng::seed_from_u64(sample_seed(seed, k));
                for _ in 0..q {
                    let w = gaussian_unit(&mut jr, dim);
                    let pert: Vec<f64> = (0..dim)
                        .map(|i| d[i] + eta * (interior.as_ref().map_or(0.0, |c| c[i]) + w[i]))
                        .collect();
                    let Some(pert) = project_onto_cone(&rows, &pert, &opts) else {
                        continue;
                    };
                    if in_feasible_direction_cone(ctx, &pert, grid).is_yes() {
                        accepted += 1;
                    }
                }
            }
            tally.add(k, seed, d, q, SampleResult { accepted, evidence });
        }
        tally
    })
}

/// The polyhedron `B(x̄,d) = {z : G z + h ≤ 0}` over `K(x̄,d)`.
struct Polyhedron {
    g: Vec<Vec<f64>>,
    h: Vec<f64>,
}

enum Shape {
    Empty,
    Whole,
    /// A point of `B` with the largest normalised slack (capped at 1).
    Point { center: Vec<f64>, slack: f64 },
}

impl Polyhedron {
    fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.g.iter().zip(&self.h).all(|(g, h)| dot(g, z) + h <= tol)
    }

    fn shape(&self, dim: usize, opts: &SolverOptions) -> Result<Shape, String> {
        if self.g.is_empty() {
            return Ok(Shape::Whole);
        }
        // max τ s.t. (g z + h)/|g| + τ ≤ 0, τ ≤ 1, |z_k| ≤ box
        let mut objective = vec![0.0; dim + 1];
        objective[dim] = 1.0;
        let mut lp = LinearProgram::new(Sense::Maximize, objective, vec![VarBound::Free; dim + 1]);
        for (g, h) in self.g.iter().zip(&self.h) {
            let ng = norm(g);
            let mut c: Vec<f64> = g.iter().map(|v| v / ng).collect();
            c.push(1.0);
            lp.push(Row::le(c, -h / ng));
        }
        let mut cap = vec![0.0; dim + 1];
        cap[dim] = 1.0;
        lp.push(Row::le(cap, 1.0));
        for k in 0..dim {
            let mut e = vec![0.0; dim + 1];
            e[k] = 1.0;
            lp.push(Row::le(e.clone(), INTERIOR_BOX));
            e[k] = -1.0;
            lp.push(Row::le(e, INTERIOR_BOX));
        }
        match solve_with(&lp, opts).map_err(|e| e.to_string())?.status {
            LpStatus::Optimal { mut x, .. } => {
                let slack = x.pop().unwrap_or(0.0);
                if slack < -opts.lp_tol {
                    Ok(Shape::Empty)
                } else {
                    Ok(Shape::Point { center: x, slack })
                }
            }
            LpStatus::Infeasible => Ok(Shape::Empty),
            LpStatus::Unbounded { .. } => Err("interior-point LP unbounded".into()),
        }
    }

    /// 1-norm projection of `p` onto `B`, optionally forcing the rows in
    /// `tight` to hold with equality.
    fn project(&self, p: &[f64], tight: &[usize], opts: &SolverOptions) -> Option<Vec<f64>> {
        let dim = p.len();
        let mut objective = vec![0.0; dim];
        objective.extend(std::iter::repeat_n(1.0, dim));
        let mut bounds = vec![VarBound::Free; dim];
        bounds.extend(std::iter::repeat_n(VarBound::NonNegative, dim));
        let mut lp = LinearProgram::new(Sense::Minimize, objective, bounds);
        for k in 0..dim {
            let mut up = vec![0.0; 2 * dim];
            up[k] = 1.0;
            up[dim + k] = -1.0;
            lp.push(Row::le(up, p[k]));
            let mut down = vec![0.0; 2 * dim];
            down[k] = -1.0;
            down[dim + k] = -1.0;
            lp.push(Row::le(down, -p[k]));
        }
        for (i, (g, h)) in self.g.iter().zip(&self.h).enumerate() {
            let mut c = g.clone();
            c.extend(std::iter::repeat_n(0.0, dim));
            if tight.contains(&i) {
                lp.push(Row::eq(c, -h));
            } else {
                lp.push(Row::le(c, -h));
            }
        }
        match solve_with(&lp, opts).ok()?.status {
            LpStatus::Optimal { mut x, .. } => {
                x.truncate(dim);
                Some(x)
            }
            _ => None,
        }
    }
}

/// Curvature vectors spread over `B`: projected axes, points on single faces
/// and on intersections of random face subsets, and projected Gaussian
/// points around the center.
fn sample_b(
    b: &Polyhedron,
    center: &[f64],
    n: usize,
    rng: &mut ChaCha8Rng,
    opts: &SolverOptions,
) -> Vec<Vec<f64>> {
    let dim = center.len();
    let rows = b.g.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |out: &mut Vec<Vec<f64>>, z: Option<Vec<f64>>| {
        if let Some(z) = z {
            let fresh = out
                .iter()
                .all(|e| e.iter().zip(&z).map(|(a, b)| (a - b).abs()).sum::<f64>() > 1e-9);
            if out.len() < n && fresh {
                out.push(z);
            }
        }
    };
    for k in 0..dim {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[k] = sign;
            push(&mut out, b.project(&e, &[], opts));
        }
    }
    let mut attempts = 0;
    while out.len() < n && attempts < 4 * n.max(1) {
        let anchor: Vec<f64> = center
            .iter()
            .map(|c| c + 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let z = match attempts % 3 {
            0 if rows > 0 => b.project(&anchor, &[attempts / 3 % rows], opts),
            1 if rows > 1 => {
                let tight: Vec<usize> = (0..rows).filter(|_| rng.random::<bool>()).collect();
                b.project(&anchor, &tight, opts)
            }
            _ => b.project(&anchor, &[], opts),
        };
        push(&mut out, z);
        attempts += 1;
    }
    out
}

/// Searches `z ∈ B(x̄,d)` whose perturbations inside `B` all miss
/// `A(x̄,d)`. Members of `A` met along the way are also checked against `B`.
pub fn check_so_zangwill(
    ctx: &PointContext<'_>,
    da: &DirectionAnalysis,
    n_samples: usize,
    seed: u64,
    grid: &StepGrid,
) -> CqEntry {
    const NAME: &str = "second_order_zangwill";
    let unavailable = |reason: String| CqEntry::unavailable(NAME, n_samples, seed, reason);
    if !ctx.feasible {
        return unavailable("point is infeasible".into());
    }
    if !da.critical {
        return unavailable("direction is not critical".into());
    }
    let vacuous = |note: &str| CqEntry {
        name: NAME.into(),
        verdict: CqVerdict::NoCounterexampleFound,
        samples: 0,
        seed,
        failures: 0,
        doubled: false,
        note: Some(note.into()),
    };
    if da.k_set.is_empty() {
        return vacuous("K(x,d) is empty, so A = B = R^s");
    }
    let mut b = Polyhedron {
        g: Vec::new(),
        h: Vec::new(),
    };
    for &i in &da.k_set {
        let p = ctx.active_pos(i).expect("K is a subset of I");
        let Some(h) = da.g_second[p].value() else {
            return unavailable(format!(
                "{}''(x,d) unavailable ({})",
                ctx.label_g(i),
                da.g_second[p].describe()
            ));
        };
        let g = ctx.grad_g[p].clone();
        if norm(&g) == 0.0 {
            if h > ctx.tol.b_tol {
                return vacuous("B(x,d) is empty");
            }
            continue;
        }
        b.g.push(g);
        b.h.push(h);
    }
    let opts = ctx.tol.lp_options();
    let dim = ctx.dim();
    let (center, slack) = match b.shape(dim, &opts) {
        Ok(Shape::Empty) => return vacuous("B(x,d) is empty"),
        Ok(Shape::Whole) => (vec![0.0; dim], 1.0),
        Ok(Shape::Point { center, slack }) => (center, slack),
        Err(e) => return unavailable(e),
    };
    let q = ctx.tol.jitter_count;
    let eta = ctx.tol.jitter_radius;
    let mut outside_b = 0usize;
    let mut entry = with_doubling(NAME, n_samples, seed, |n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zs = sample_b(&b, &center, n, &mut rng, &opts);
        let mut tally = Tally::new();
        for (k, z) in zs.iter().enumerate() {
            let evidence = in_a(ctx, da, z, grid);
            let mut accepted = 0;
            if evidence.is_yes() {
                accepted += 1;
                if !in_b(ctx, da, z).is_yes() {
                    outside_b += 1;
                }
            } else {
                let mut jr = ChaCha8Rng::seed_from_u64(sample_seed(seed, k));
                for _ in 0..q {
                    let w = gaussian_unit(&mut jr, dim);
                    // Pulled toward the center: strictly inside B whenever B
                    // has interior.
                    let mut zj: Vec<f64> = (0..dim)
                        .map(|i| z[i] + eta * (center[i] - z[i]) + 0.5 * eta * slack.min(1.0) * w[i])
                        .collect();
                    if !b.contains(&zj, 0.0) {
                        match b.project(&zj, &[], &opts) {
                            Some(p) => zj = p,
                            None => continue,
                        }
                    }
                    if in_a(ctx, da, &zj, grid).is_yes() {
                        accepted += 1;
                        if !in_b(ctx, da, &zj).is_yes() {
                            outside_b += 1;
                        }
                    }
                }
            }
            tally.add(k, seed, z, q, SampleResult { accepted, evidence });
        }
        tally
    });
    if outside_b > 0 {
        entry.note = Some(format!(
            "{outside_b} members of A(x,d) were found outside B(x,d)"
        ));
    }
    entry
}

/// One tangent probe per sampled direction of `L(x̄)`; prefix-stable in `n`.
pub struct TangentSample {
    pub d: Vec<f64>,
    pub seed: u64,
    pub probe: ConeMembership,
}

pub fn tangent_samples(
    ctx: &PointContext<'_>,
    n: usize,
    seed: u64,
    budget: &TangentBudget,
) -> Vec<TangentSample> {
    let opts = ctx.tol.lp_options();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = nonzero_rows(ctx.linearizing_rows());
    sample_cone(&rows, ctx.dim(), n, &mut rng, ctx.tol.crit_tol, &opts)
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let s = sample_seed(seed, k);
            let probe = tangent_probe(ctx, &d, budget, s);
            TangentSample { d, seed: s, probe }
        })
        .collect()
}

fn abadie_from(samples: &[TangentSample], n: usize, seed: u64) -> Tally {
    let mut tally = Tally::new();
    for (k, s) in samples.iter().take(n).enumerate() {
        let accepted = usize::from(!s.probe.is_no());
        tally.add(k, seed, &s.d, 0, SampleResult {
            accepted,
            evidence: s.probe.clone(),
        });
    }
    tally
}

/// Searches `d ∈ L(x̄)` that the tangent probe separates from `S`.
pub fn check_abadie(
    ctx: &PointContext<'_>,
    n_samples: usize,
    seed: u64,
    budget: &TangentBudget,
) -> CqEntry {
    if !ctx.feasible {
        return CqEntry::unavailable("abadie", n_samples, seed, "point is infeasible".into());
    }
    let samples = tangent_samples(ctx, 2 * n_samples, seed, budget);
    abadie_entry(&samples, n_samples, seed)
}

fn abadie_entry(samples: &[TangentSample], n: usize, seed: u64) -> CqEntry {
    let first = abadie_from(samples, n, seed);
    let fragile = first.failures == 1;
    let tally = if fragile { abadie_from(samples, 2 * n, seed) } else { first };
    let used = if fragile { 2 * n } else { n };
    tally.into_entry("abadie", used.min(samples.len()), seed, fragile)
}

/// Searches `d ∈ L(x̄)`, separated from `S` by the tangent probe, that is no
/// conic combination of the tangent directions found in a doubled sample.
pub fn check_guignard(
    ctx: &PointContext<'_>,
    n_samples: usize,
    seed: u64,
    budget: &TangentBudget,
) -> CqEntry {
    if !ctx.feasible {
        return CqEntry::unavailable("guignard", n_samples, seed, "point is infeasible".into());
    }
    let samples = tangent_samples(ctx, 2 * n_samples, seed, budget);
    guignard_entry(&samples, n_samples, seed, &ctx.tol.lp_options())
}

fn guignard_entry(
    samples: &[TangentSample],
    n: usize,
    seed: u64,
    opts: &SolverOptions,
) -> CqEntry {
    let tangent: Vec<Vec<f64>> = samples
        .iter()
        .filter(|s| s.probe.is_yes())
        .map(|s| s.d.clone())
        .collect();
    let mut tally = Tally::new();
    for (k, s) in samples.iter().take(n).enumerate() {
        if !s.probe.is_no() {
            continue;
        }
        let evidence = in_pseudotangent(&tangent, &s.d, opts);
        let accepted = usize::from(!evidence.is_no());
        if accepted == 0 {
            tally.add(k, seed, &s.d, 0, SampleResult { accepted, evidence });
        }
    }
    let mut entry = tally.into_entry("guignard", n.min(samples.len()), seed, false);
    entry.note = Some(format!(
        "pseudotangent cone spanned by {} accepted tangent directions out of {}",
        tangent.len(),
        samples.len()
    ));
    entry
}

/// Zangwill, Abadie and Guignard at one point, sharing the tangent probes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCq {
    pub zangwill: CqEntry,
    pub abadie: CqEntry,
    pub guignard: CqEntry,
}

pub fn check_point(
    ctx: &PointContext<'_>,
    n_samples: usize,
    seed: u64,
    grid: &StepGrid,
    budget: &TangentBudget,
) -> PointCq {
    let zangwill = check_zangwill(ctx, n_samples, seed, grid);
    if !ctx.feasible {
        let un = |name: &str| CqEntry::unavailable(name, n_samples, seed, "point is infeasible".into());
        return PointCq {
            zangwill,
            abadie: un("abadie"),
            guignard: un("guignard"),
        };
    }
    let samples = tangent_samples(ctx, 2 * n_samples, seed, budget);
    PointCq {
        zangwill,
        abadie: abadie_entry(&samples, n_samples, seed),
        guignard: guignard_entry(&samples, n_samples, seed, &ctx.tol.lp_options()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::analyze_direction;
    use crate::config::Tolerances;
    use crate::problem::Problem;

    fn problem(obj: &[&str], cons: &[&str], s: usize) -> Problem {
        let vars: Vec<String> = (1..=s).map(|k| format!("x{k}")).collect();
        let obj: Vec<String> = obj.iter().map(|x| x.to_string()).collect();
        let cons: Vec<String> = cons.iter().map(|x| x.to_string()).collect();
        Problem::new("t", &vars, &obj, &cons).unwrap()
    }

    fn ctx<'p>(p: &'p Problem, x: &[f64]) -> PointContext<'p> {
        PointContext::new(p, x, &Tolerances::default()).unwrap()
    }

    fn g() -> StepGrid {
        StepGrid::default()
    }

    #[test]
    fn zangwill_examples() {
        let half = problem(&["x2"], &["x1"], 2);
        let c = ctx(&half, &[0.0, 0.0]);
        assert_eq!(check_zangwill(&c, 32, 1, &g()).status(), CqStatus::Clean);

        let cube = problem(&["x2"], &["x1^3"], 2);
        let c = ctx(&cube, &[0.0, 0.0]);
        let e = check_zangwill(&c, 32, 1, &g());
        assert_eq!(e.witness().unwrap().vector, vec![1.0, 0.0]);
        let replay = in_feasible_direction_cone(&c, &[1.0, 0.0], &g());
        assert_eq!(replay, e.witness().unwrap().evidence);

        let interior = ctx(&cube, &[-1.0, 0.0]);
        assert_eq!(check_zangwill(&interior, 32, 1, &g()).status(), CqStatus::Clean);
    }

    #[test]
    fn so_zangwill_examples() {
        let p1 = problem(&["x2"], &["x1^3"], 2);
        let c = ctx(&p1, &[0.0, 0.0]);
        let da = analyze_direction(&c, &[1.0, 0.0], &g());
        let e = check_so_zangwill(&c, &da, 64, 0, &g());
        let w = e.witness().expect("fails");
        assert_eq!(w.vector, vec![1.0, 0.0]);
        assert!(in_a(&c, &da, &w.vector, &g()).is_no());
        assert!(in_b(&c, &da, &w.vector).is_yes());

        let p2 = problem(&["x1^2 + x2^2"], &["x1^2 - x2"], 2);
        let c = ctx(&p2, &[0.0, 0.0]);
        let da = analyze_direction(&c, &[0.0, 0.0], &g());
        let e = check_so_zangwill(&c, &da, 64, 0, &g());
        assert_eq!(e.status(), CqStatus::Clean, "{e:?}");
        assert!(e.note.is_none());

        let d1 = problem(&["x2"], &["x1^2 - x2"], 2);
        let c = ctx(&d1, &[0.0, 0.0]);
        let da = analyze_direction(&c, &[1.0, 0.0], &g());
        assert_eq!(check_so_zangwill(&c, &da, 64, 0, &g()).status(), CqStatus::Clean);
    }

    #[test]
    fn abadie_and_guignard_examples() {
        let b = TangentBudget::default();
        let p2 = problem(&["x1^2 + x2^2"], &["x1^2 - x2"], 2);
        let c = ctx(&p2, &[0.0, 0.0]);
        assert_eq!(check_abadie(&c, 16, 0, &b).status(), CqStatus::Clean);

        let cube = problem(&["x2"], &["x1^3"], 2);
        let c = ctx(&cube, &[0.0, 0.0]);
        let e = check_abadie(&c, 16, 0, &b);
        assert_eq!(e.witness().unwrap().vector, vec![1.0, 0.0]);
        let e = check_guignard(&c, 16, 0, &b);
        assert_eq!(e.witness().unwrap().vector, vec![1.0, 0.0]);

        let axes = problem(&["x1 + x2"], &["-x1", "-x2", "x1*x2"], 2);
        let c = ctx(&axes, &[0.0, 0.0]);
        let all = check_point(&c, 16, 0, &g(), &b);
        assert_eq!(all.abadie.status(), CqStatus::Failed);
        assert_eq!(all.guignard.status(), CqStatus::Clean, "{:?}", all.guignard);

        let interior = ctx(&cube, &[-1.0, 0.0]);
        let all = check_point(&interior, 16, 0, &g(), &b);
        assert_eq!(all.abadie.status(), CqStatus::Clean);
        assert_eq!(all.guignard.status(), CqStatus::Clean);
    }

    #[test]
    fn sample_seeds_differ() {
        assert_ne!(sample_seed(0, 0), sample_seed(0, 1));
        assert_ne!(sample_seed(0, 0), sample_seed(1, 0));
    }
}
