//! Problem files, command runners and the JSON reports they produce.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{analyze_direction, norm, sample_cone, DirectionAnalysis, PointContext, SecondOrder};
use crate::config::{Settings, Tolerances};
use crate::cq::{check_point, check_so_zangwill, sample_seed, CqEntry, PointCq};
use crate::deriv::{curve_second_deriv, second_dir_deriv, CurveProbe, GridError, SecondDirDeriv};
use crate::expr::{EvalError, Gradient};
use crate::gencvx::{
    probe_pseudoconvex, probe_so_pseudoconvex, probe_solpc_right, ConvexityVerdict, SampleBox,
};
use crate::kkt::{certify_direction, CqContext, DirectionVerdict, KktError, Verdict};
use crate::problem::{Function, Problem, ProblemError};

pub const TOOL: &str = "sockkt";

/// Salt separating the critical-direction sampler from the CQ samplers.
const DIRECTION_STREAM: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub variables: Vec<String>,
    pub objectives: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<String>,
    pub points: Vec<Vec<f64>>,
    /// Directions per point, aligned with `points`; may be shorter.
    #[serde(default)]
    pub directions: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invalid step grid: {0}")]
    Grid(#[from] GridError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("numerical breakdown: {0}")]
    Numerics(#[from] KktError),
}

impl RunError {
    /// 2 for input errors, 3 for numerical breakdown.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerics(_) => 3,
            _ => 2,
        }
    }
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), RunError> {
        let s = self.variables.len();
        let bad = |what: String| Err(RunError::Invalid(what));
        if self.points.is_empty() {
            return bad("at least one point is required".into());
        }
        if self.directions.len() > self.points.len() {
            return bad(format!(
                "{} direction lists for {} points",
                self.directions.len(),
                self.points.len()
            ));
        }
        for (p, x) in self.points.iter().enumerate() {
            if x.len() != s {
                return bad(format!("point {p} has length {}, expected {s}", x.len()));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return bad(format!("point {p} is not finite"));
            }
        }
        for (p, dirs) in self.directions.iter().enumerate() {
            for (j, d) in dirs.iter().enumerate() {
                if d.len() != s || d.iter().any(|v| !v.is_finite()) {
                    return bad(format!("direction {j} of point {p} must be {s} finite numbers"));
                }
            }
        }
        if let Some(t) = &self.tolerances {
            let positive = [
                t.active_tol,
                t.feas_tol,
                t.crit_tol,
                t.b_tol,
                t.cert_tol,
                t.cert_margin,
                t.lp_tol,
                t.jitter_radius,
                t.convexity_margin,
                t.slope_tol,
            ];
            if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("tolerances must be positive and finite".into());
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem, RunError> {
        Ok(Problem::new(
            &self.name,
            &self.variables,
            &self.objectives,
            &self.constraints,
        )?)
    }

    pub fn directions_of(&self, point: usize) -> &[Vec<f64>] {
        self.directions.get(point).map_or(&[], |d| d.as_slice())
    }
}

/// Selection and probe inputs shared by the commands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub point: Option<usize>,
    /// Index into the file's directions for the selected point.
    pub direction: Option<usize>,
    /// Literal direction, overriding `direction`.
    pub d: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub function: Option<String>,
    /// Probe `-h` instead of `h`.
    pub concave: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemEcho {
    pub name: String,
    pub variables: Vec<String>,
    pub objectives: Vec<String>,
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<B> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub problem: ProblemEcho,
    pub settings: Settings,
    #[serde(flatten)]
    pub body: B,
    pub timing_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSource {
    User,
    Zero,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondSummary {
    pub function: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionReport {
    pub source: DirectionSource,
    pub d: Vec<f64>,
    pub critical: bool,
    pub j_set: Vec<String>,
    pub k_set: Vec<String>,
    pub second_derivatives: Vec<SecondSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_order_zangwill: Option<CqEntry>,
    /// Absent for non-critical directions, which impose no condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<DirectionVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub index: usize,
    pub x: Vec<f64>,
    pub seed: u64,
    pub feasible: bool,
    pub max_violation: Option<f64>,
    pub objective_values: Vec<f64>,
    pub constraint_values: Vec<f64>,
    pub active: Vec<String>,
    pub objective_gradients: Vec<Vec<f64>>,
    pub active_gradients: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    #[serde(flatten)]
    pub summary: PointSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cq: Option<PointCq>,
    pub directions: Vec<DirectionReport>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<String>,
    pub timing_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckBody {
    pub points: Vec<PointReport>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqPointReport {
    #[serde(flatten)]
    pub summary: PointSummary,
    pub zangwill: CqEntry,
    pub abadie: CqEntry,
    pub guignard: CqEntry,
    pub second_order_zangwill: Vec<CqDirection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqDirection {
    pub d: Vec<f64>,
    pub entry: CqEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CqBody {
    pub points: Vec<CqPointReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityBody {
    pub function: String,
    pub negated: bool,
    pub point: Vec<f64>,
    pub probes: Vec<ConvexityVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivBody {
    pub function: String,
    pub point: Vec<f64>,
    pub d: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
    pub result: SecondDirDeriv,
}

fn echo(file: &ProblemFile) -> ProblemEcho {
    ProblemEcho {
        name: file.name.clone(),
        variables: file.variables.clone(),
        objectives: file.objectives.clone(),
        constraints: file.constraints.clone(),
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn effective_settings(file: &ProblemFile, settings: &Settings) -> Result<Settings, RunError> {
    settings.grid.validate()?;
    let mut s = settings.clone();
    if let Some(t) = file.tolerances {
        s.tolerances = t;
    }
    Ok(s)
}

fn selected_points(file: &ProblemFile, opts: &RunOptions) -> Result<Vec<usize>, RunError> {
    match opts.point {
        Some(p) if p >= file.points.len() => Err(RunError::Invalid(format!(
            "point {p} out of range ({} points)",
            file.points.len()
        ))),
        Some(p) => Ok(vec![p]),
        None => Ok((0..file.points.len()).collect()),
    }
}

fn check_vector(what: &str, v: &[f64], s: usize) -> Result<(), RunError> {
    if v.len() != s || v.iter().any(|x| !x.is_finite()) {
        return Err(RunError::Invalid(format!("{what} must be {s} finite numbers")));
    }
    Ok(())
}

/// Explicitly requested direction for `point`, if any.
fn requested_direction(
    file: &ProblemFile,
    point: usize,
    opts: &RunOptions,
) -> Result<Option<Vec<f64>>, RunError> {
    if let Some(d) = &opts.d {
        check_vector("direction", d, file.variables.len())?;
        return Ok(Some(d.clone()));
    }
    match opts.direction {
        None => Ok(None),
        Some(j) => file
            .directions_of(point)
            .get(j)
            .cloned()
            .map(Some)
            .ok_or_else(|| RunError::Invalid(format!("point {point} has no direction {j}"))),
    }
}

fn summarize(ctx: &PointContext<'_>, index: usize, seed: u64) -> PointSummary {
    PointSummary {
        index,
        x: ctx.x.clone(),
        seed,
        feasible: ctx.feasible,
        max_violation: ctx.problem.max_violation(&ctx.x),
        objective_values: ctx.f_values.clone(),
        constraint_values: ctx.g_values.clone(),
        active: ctx.active.iter().map(|&i| ctx.label_g(i)).collect(),
        objective_gradients: ctx.grad_f.clone(),
        active_gradients: ctx.grad_g.clone(),
    }
}

fn second_summaries(ctx: &PointContext<'_>, da: &DirectionAnalysis) -> Vec<SecondSummary> {
    let one = |label: String, s: &SecondOrder| SecondSummary {
        function: label,
        status: s.describe(),
        value: match s {
            SecondOrder::Computed(d) => d.value,
            SecondOrder::Failed { .. } => None,
        },
    };
    let f = da
        .f_second
        .iter()
        .enumerate()
        .map(|(j, s)| one(format!("f{}", j + 1), s));
    let g = ctx
        .active
        .iter()
        .zip(&da.g_second)
        .map(|(&i, s)| one(ctx.label_g(i), s));
    f.chain(g).collect()
}

fn same_direction(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// User directions, then `d = 0`, then sampled unit critical directions.
fn direction_set(
    ctx: &PointContext<'_>,
    user: Vec<Vec<f64>>,
    n_dir: usize,
    seed: u64,
) -> Vec<(DirectionSource, Vec<f64>)> {
    let mut out: Vec<(DirectionSource, Vec<f64>)> =
        user.into_iter().map(|d| (DirectionSource::User, d)).collect();
    let zero = vec![0.0; ctx.dim()];
    if !out.iter().any(|(_, d)| same_direction(d, &zero)) {
        out.push((DirectionSource::Zero, zero));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, DIRECTION_STREAM));
    let rows = ctx.critical_rows();
    for d in sample_cone(&rows, ctx.dim(), n_dir, &mut rng, ctx.tol.crit_tol, &ctx.tol.lp_options()) {
        let unit = norm(&d);
        let d: Vec<f64> = d.iter().map(|v| v / unit).collect();
        if !out.iter().any(|(_, e)| same_direction(e, &d)) {
            out.push((DirectionSource::Sampled, d));
        }
    }
    out
}

fn aggregate(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut all_certified = true;
    for v in verdicts {
        match v {
            Verdict::Refuted => return Verdict::Refuted,
            Verdict::Undecided => all_certified = false,
            Verdict::Certified => {}
        }
    }
    if all_certified {
        Verdict::Certified
    } else {
        Verdict::Undecided
    }
}

fn cq_context(point: Option<&PointCq>, so: Option<&CqEntry>) -> CqContext {
    let mut cq = CqContext::unchecked();
    if let Some(p) = point {
        cq.abadie = p.abadie.status();
        cq.guignard = p.guignard.status();
    }
    if let Some(e) = so {
        cq.so_zangwill = e.status();
    }
    cq
}

fn check_one_point(
    file: &ProblemFile,
    problem: &Problem,
    p: usize,
    settings: &Settings,
    opts: &RunOptions,
) -> Result<PointReport, RunError> {
    let start = Instant::now();
    let seed = sample_seed(settings.seed, p);
    let ctx = PointContext::new(problem, &file.points[p], &settings.tolerances)?;
    let summary = summarize(&ctx, p, seed);
    if !ctx.feasible {
        return Ok(PointReport {
            summary,
            cq: None,
            directions: Vec::new(),
            verdict: Verdict::Undecided,
            reasons: vec!["point is infeasible".into()],
            timing_ms: elapsed_ms(start),
        });
    }
    let cq = (!settings.skip_cq)
        .then(|| check_point(&ctx, settings.samples, seed, &settings.grid, &settings.tangent));
    let dirs = match requested_direction(file, p, opts)? {
        Some(d) => vec![(DirectionSource::User, d)],
        None => direction_set(&ctx, file.directions_of(p).to_vec(), settings.n_dir, seed),
    };
    let mut directions = Vec::with_capacity(dirs.len());
    for (source, d) in dirs {
        let da = analyze_direction(&ctx, &d, &settings.grid);
        let label = |ks: &[usize]| ks.iter().map(|&i| ctx.label_g(i)).collect::<Vec<_>>();
        let (so, result) = if da.critical {
            let so = (!settings.skip_cq)
                .then(|| check_so_zangwill(&ctx, &da, settings.samples, seed, &settings.grid));
            let verdict = certify_direction(&ctx, &da, &cq_context(cq.as_ref(), so.as_ref()))?;
            (so, Some(verdict))
        } else {
            (None, None)
        };
        directions.push(DirectionReport {
            source,
            critical: da.critical,
            j_set: da.j_set.iter().map(|j| format!("f{}", j + 1)).collect(),
            k_set: label(&da.k_set),
            second_derivatives: second_summaries(&ctx, &da),
            second_order_zangwill: so,
            result,
            d,
        });
    }
    let verdict = aggregate(directions.iter().filter_map(|d| d.result.as_ref().map(|r| r.verdict)));
    let reasons = if settings.skip_cq && verdict == Verdict::Undecided {
        vec!["constraint qualifications not checked".into()]
    } else {
        Vec::new()
    };
    Ok(PointReport {
        summary,
        cq,
        directions,
        verdict,
        reasons,
        timing_ms: elapsed_ms(start),
    })
}

pub fn run_check(
    file: &ProblemFile,
    settings: &Settings,
    opts: &RunOptions,
) -> Result<Report<CheckBody>, RunError> {
    let start = Instant::now();
    let settings = effective_settings(file, settings)?;
    let problem = file.problem()?;
    let points = selected_points(file, opts)?
        .into_iter()
        .map(|p| check_one_point(file, &problem, p, &settings, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = aggregate(points.iter().map(|p| p.verdict));
    Ok(Report {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command: "check",
        problem: echo(file),
        settings,
        body: CheckBody { points, verdict },
        timing_ms: elapsed_ms(start),
    })
}

pub fn run_cq(
    file: &ProblemFile,
    settings: &Settings,
    opts: &RunOptions,
) -> Result<Report<CqBody>, RunError> {
    let start = Instant::now();
    let settings = effective_settings(file, settings)?;
    let problem = file.problem()?;
    let mut points = Vec::new();
    for p in selected_points(file, opts)? {
        let seed = sample_seed(settings.seed, p);
        let ctx = PointContext::new(&problem, &file.points[p], &settings.tolerances)?;
        let pc = check_point(&ctx, settings.samples, seed, &settings.grid, &settings.tangent);
        let dirs = match requested_direction(file, p, opts)? {
            Some(d) => vec![d],
            None if file.directions_of(p).is_empty() => vec![vec![0.0; ctx.dim()]],
            None => file.directions_of(p).to_vec(),
        };
        let second_order_zangwill = dirs
            .into_iter()
            .map(|d| {
                let da = analyze_direction(&ctx, &d, &settings.grid);
                let entry = check_so_zangwill(&ctx, &da, settings.samples, seed, &settings.grid);
                CqDirection { d, entry }
            })
            .collect();
        points.push(CqPointReport {
            summary: summarize(&ctx, p, seed),
            zangwill: pc.zangwill,
            abadie: pc.abadie,
            guignard: pc.guignard,
            second_order_zangwill,
        });
    }
    Ok(Report {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command: "cq",
        problem: echo(file),
        settings,
        body: CqBody { points },
        timing_ms: elapsed_ms(start),
    })
}

fn pick_function<'p>(problem: &'p Problem, opts: &RunOptions) -> Result<&'p Function, RunError> {
    let label = opts.function.as_deref().unwrap_or("f1");
    problem
        .function(label)
        .ok_or_else(|| RunError::Invalid(format!("no function labelled `{label}`")))
}

fn single_point(file: &ProblemFile, opts: &RunOptions) -> Result<usize, RunError> {
    Ok(selected_points(file, opts)?[0])
}

/// Pseudoconvexity probes of one function at one point, or the
/// right-pseudoconcavity probe of its curve when `z` is given.
pub fn run_convexity(
    file: &ProblemFile,
    settings: &Settings,
    opts: &RunOptions,
) -> Result<Report<ConvexityBody>, RunError> {
    let start = Instant::now();
    let settings = effective_settings(file, settings)?;
    let problem = file.problem()?;
    let f = pick_function(&problem, opts)?;
    let p = single_point(file, opts)?;
    let x = file.points[p].clone();
    let s = problem.dim();
    let (expr, grad) = if opts.concave {
        let e = f.expr.negated();
        let g = Gradient::of(&e, s);
        (e, g)
    } else {
        (f.expr.clone(), f.gradient.clone())
    };
    let tol = &settings.tolerances;
    let probes = match &opts.z {
        Some(z) => {
            check_vector("z", z, s)?;
            let d = requested_direction(file, p, opts)?.unwrap_or_else(|| vec![0.0; s]);
            let probe = CurveProbe::new(x.clone(), d, z.clone());
            vec![probe_solpc_right(&probe, &expr, &grad, &settings.grid, tol)?]
        }
        None => {
            let region = SampleBox::cube(s, 1.0);
            let n = settings.convexity_samples;
            let seed = settings.seed;
            vec![
                probe_pseudoconvex(&expr, &grad, &x, &region, n, seed, tol)?,
                probe_so_pseudoconvex(&expr, &grad, &x, &region, n, seed, &settings.grid, tol)?,
            ]
        }
    };
    Ok(Report {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command: "convexity",
        problem: echo(file),
        settings,
        body: ConvexityBody {
            function: f.label.clone(),
            negated: opts.concave,
            point: x,
            probes,
        },
        timing_ms: elapsed_ms(start),
    })
}

/// `h''(x, d)`, or `φ''(0, 1)` along `x + t d + t²z/2` when `z` is given.
pub fn run_derivative(
    file: &ProblemFile,
    settings: &Settings,
    opts: &RunOptions,
) -> Result<Report<DerivBody>, RunError> {
    let start = Instant::now();
    let settings = effective_settings(file, settings)?;
    let problem = file.problem()?;
    let f = pick_function(&problem, opts)?;
    let p = single_point(file, opts)?;
    let x = file.points[p].clone();
    let s = problem.dim();
    let d = requested_direction(file, p, opts)?
        .or_else(|| file.directions_of(p).first().cloned())
        .ok_or_else(|| RunError::Invalid("no direction given".into()))?;
    let result = match &opts.z {
        Some(z) => {
            check_vector("z", z, s)?;
            let probe = CurveProbe::new(x.clone(), d.clone(), z.clone());
            curve_second_deriv(&probe, &f.expr, &f.gradient, &settings.grid)?
        }
        None => second_dir_deriv(&f.expr, &f.gradient, &x, &d, &settings.grid)?,
    };
    Ok(Report {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command: "deriv",
        problem: echo(file),
        settings,
        body: DerivBody {
            function: f.label.clone(),
            point: x,
            d,
            z: opts.z.clone(),
            result,
        },
        timing_ms: elapsed_ms(start),
    })
}

/// One line per point and direction.
pub fn check_summary(report: &Report<CheckBody>) -> String {
    let mut out = format!("{} [{}]: {:?}\n", report.problem.name, report.command, report.body.verdict);
    for p in &report.body.points {
        out.push_str(&format!(
            "  point {} {:?}: {:?} (active: {})\n",
            p.summary.index,
            p.summary.x,
            p.verdict,
            p.summary.active.join(", ")
        ));
        for r in &p.reasons {
            out.push_str(&format!("    {r}\n"));
        }
        for d in &p.directions {
            let line = match &d.result {
                Some(v) => {
                    let mut s = format!("{:?}", v.verdict);
                    if let Some(m) = &v.multipliers {
                        s.push_str(&format!(" lambda={:?} mu={:?}", m.lambda, m.mu));
                    }
                    if let Some(k) = v.refuted_by {
                        s.push_str(&format!(" by {k:?}"));
                    }
                    for r in &v.reasons {
                        s.push_str(&format!("; {r}"));
                    }
                    s
                }
                None => "not critical".into(),
            };
            out.push_str(&format!("    d={:?} ({:?}): {line}\n", d.d, d.source));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const D1: &str = r#"{
        "name": "D1",
        "variables": ["x1", "x2"],
        "objectives": ["x2"],
        "constraints": ["x1^2 - x2"],
        "points": [[0, 0]],
        "directions": [[[1, 0]]]
    }"#;

    #[test]
    fn rejects_malformed_files() {
        assert!(ProblemFile::from_json(r#"{"name": "x"}"#).is_err());
        let extra = D1.replace("\"name\"", "\"extra\": 1, \"name\"");
        assert!(matches!(ProblemFile::from_json(&extra), Err(RunError::Json(_))));
        let short = D1.replace("[[0, 0]]", "[[0]]");
        assert!(matches!(ProblemFile::from_json(&short), Err(RunError::Invalid(_))));
        let f = ProblemFile::from_json(&D1.replace("x1^2", "x1^^2")).unwrap();
        let e = f.problem().unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn check_d1_certified() {
        let f = ProblemFile::from_json(D1).unwrap();
        let opts = RunOptions {
            direction: Some(0),
            ..RunOptions::default()
        };
        let r = run_check(&f, &Settings::default(), &opts).unwrap();
        assert_eq!(r.body.verdict, Verdict::Certified);
        let m = r.body.points[0].directions[0].result.as_ref().unwrap();
        let m = m.multipliers.as_ref().unwrap();
        assert!((m.lambda[0] - 1.0).abs() < 1e-8 && (m.mu[0] - 1.0).abs() < 1e-8);

        let full = run_check(&f, &Settings::default(), &RunOptions::default()).unwrap();
        assert_eq!(full.body.verdict, Verdict::Certified);
        let sources: Vec<_> = full.body.points[0].directions.iter().map(|d| d.source).collect();
        assert_eq!(sources[..2], [DirectionSource::User, DirectionSource::Zero]);
    }

    #[test]
    fn infeasible_point_undecided() {
        let f = ProblemFile::from_json(&D1.replace("[[0, 0]]", "[[1, 0]]")).unwrap();
        let r = run_check(&f, &Settings::default(), &RunOptions::default()).unwrap();
        assert_eq!(r.body.verdict, Verdict::Undecided);
        assert!(r.body.points[0].directions.is_empty());
    }

    #[test]
    fn derivative_command() {
        let f = ProblemFile::from_json(D1).unwrap();
        let opts = RunOptions {
            function: Some("g1".into()),
            ..RunOptions::default()
        };
        let r = run_derivative(&f, &Settings::default(), &opts).unwrap();
        assert_eq!(r.body.result.converged(), Some(2.0));
        let opts = RunOptions {
            function: Some("g9".into()),
            ..RunOptions::default()
        };
        assert!(run_derivative(&f, &Settings::default(), &opts).is_err());
    }
}
