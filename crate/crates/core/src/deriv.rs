//! Second-order directional derivatives by their limit definition.
//!
//! `h''(x, u)` is estimated from the difference quotients
//! `q_k = 2 t_k^-2 [h(x + t_k u) - h(x) - t_k ∇h(x)u]` on a geometric grid
//! `t_k = t0 ρ^k` and classified as converged, diverged, oscillating or
//! inconclusive. The same machinery evaluates `φ''(0, 1)` for curves
//! `φ(t) = h(x + t d + t²z/2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr, Gradient};

/// Quotients whose magnitude exceeds this are eligible for `Diverged`.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

/// Extra grid steps taken while a divergent pattern is still below the
/// threshold.
const MAX_EXTENSION: usize = 64;

/// Rounding budget per function evaluation, in units of machine epsilon.
const EVAL_ROUNDING_ULPS: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepGrid {
    pub t0: f64,
    pub rho: f64,
    pub steps: usize,
    pub tol_rel: f64,
    /// Two-level Richardson extrapolation of the quotients. Only sound when
    /// `h` has a Taylor expansion of order four along the ray.
    pub richardson: bool,
}

impl Default for StepGrid {
    fn default() -> Self {
        StepGrid {
            t0: 1e-2,
            rho: 0.5,
            steps: 24,
            tol_rel: 1e-6,
            richardson: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("t0 must be positive and finite, got {0}")]
    T0(f64),
    #[error("rho must lie in (0, 1), got {0}")]
    Rho(f64),
    #[error("a grid needs at least 3 steps, got {0}")]
    Steps(usize),
    #[error("tol_rel must be positive, got {0}")]
    Tol(f64),
}

impl StepGrid {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(GridError::T0(self.t0));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(GridError::Rho(self.rho));
        }
        if self.steps < 3 {
            return Err(GridError::Steps(self.steps));
        }
        if self.tol_rel.is_nan() || self.tol_rel <= 0.0 {
            return Err(GridError::Tol(self.tol_rel));
        }
        Ok(())
    }

    /// `t_k = t0 ρ^k`.
    pub fn t(&self, k: usize) -> f64 {
        self.t0 * self.rho.powi(k as i32)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|k| self.t(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivStatus {
    Converged,
    Diverged,
    Oscillating,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientStep {
    pub t: f64,
    pub q: f64,
    /// False when rounding in `h(x + tu) - h(x)` could move `q` by more than
    /// a tenth of the tolerance; such steps never enter the tail.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondDirDeriv {
    /// Last value of the tail when converged; reported as exactly zero when
    /// smaller in magnitude than the spread of the final three tail values.
    pub value: Option<f64>,
    pub status: DerivStatus,
    /// First-order term `∇h(x)u` (or `φ'(0)` for curves).
    pub slope: f64,
    pub trace: Vec<QuotientStep>,
    /// Sequence the classification was made on: the included tail of the
    /// quotients, or its extrapolation when Richardson is enabled.
    pub tail: Vec<f64>,
}

impl SecondDirDeriv {
    pub fn converged(&self) -> Option<f64> {
        match self.status {
            DerivStatus::Converged => self.value,
            _ => None,
        }
    }

    fn exact_zero(slope: f64, grid: &StepGrid) -> Self {
        let trace: Vec<_> = grid
            .points()
            .map(|t| QuotientStep {
                t,
                q: 0.0,
                included: true,
            })
            .collect();
        SecondDirDeriv {
            value: Some(0.0),
            status: DerivStatus::Converged,
            slope,
            tail: vec![0.0; trace.len()],
            trace,
        }
    }
}

/// The curve `t ↦ x + t d + t²z/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveProbe {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub z: Vec<f64>,
}

impl CurveProbe {
    pub fn new(x: Vec<f64>, d: Vec<f64>, z: Vec<f64>) -> Self {
        assert!(
            x.len() == d.len() && d.len() == z.len(),
            "curve vectors must share one dimension"
        );
        CurveProbe { x, d, z }
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        let half_t2 = 0.5 * t * t;
        self.x
            .iter()
            .zip(&self.d)
            .zip(&self.z)
            .map(|((x, d), z)| x + t * d + half_t2 * z)
            .collect()
    }
}

fn along(x: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(u).map(|(x, u)| x + t * u).collect()
}

/// Whether `h` ignores every coordinate where one of `dirs` is nonzero, in
/// which case `h` is constant along the probe and every quotient is zero.
fn independent_of(h: &Expr, dirs: &[&[f64]]) -> bool {
    let vars = h.variables();
    dirs.iter()
        .all(|u| u.iter().enumerate().all(|(k, &uk)| uk == 0.0 || !vars.contains(&k)))
}

/// Size of the rounding error committed when forming the perturbed point,
/// propagated through the gradient.
fn input_scale(grad_x: &[f64], x: &[f64]) -> f64 {
    grad_x.iter().zip(x).map(|(g, x)| (g * x).abs()).sum()
}

/// `h''(x, u)` by the limit of difference quotients.
pub fn second_dir_deriv(
    h: &Expr,
    grad: &Gradient,
    x: &[f64],
    u: &[f64],
    grid: &StepGrid,
) -> Result<SecondDirDeriv, EvalError> {
    let grad_x = grad.eval(x)?;
    let slope: f64 = grad_x.iter().zip(u).map(|(g, u)| g * u).sum();
    if independent_of(h, &[u]) {
        return Ok(SecondDirDeriv::exact_zero(slope, grid));
    }
    let h0 = h.eval(x)?;
    let floor = input_scale(&grad_x, x);
    quotient_limit(|t| h.eval(&along(x, u, t)), h0, slope, floor, grid)
}

/// `φ''(0, 1)` for `φ(t) = h(x + t d + t²z/2)`.
pub fn curve_second_deriv(
    probe: &CurveProbe,
    h: &Expr,
    grad: &Gradient,
    grid: &StepGrid,
) -> Result<SecondDirDeriv, EvalError> {
    let grad_x = grad.eval(&probe.x)?;
    let slope: f64 = grad_x.iter().zip(&probe.d).map(|(g, d)| g * d).sum();
    if independent_of(h, &[&probe.d, &probe.z]) {
        return Ok(SecondDirDeriv::exact_zero(slope, grid));
    }
    let h0 = h.eval(&probe.x)?;
    let floor = input_scale(&grad_x, &probe.x);
    quotient_limit(|t| h.eval(&probe.point(t)), h0, slope, floor, grid)
}

/// Classifies `2 t^-2 [ψ(t) - ψ(0) - t ψ'(0)]` on the grid, where `eval_at`
/// computes `ψ(t)`. `floor` is an additional absolute error scale for the
/// evaluations (rounding of the perturbed argument).
pub fn quotient_limit<F>(
    mut eval_at: F,
    h0: f64,
    slope: f64,
    floor: f64,
    grid: &StepGrid,
) -> Result<SecondDirDeriv, EvalError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    let mut step = |t: f64| -> Result<QuotientStep, EvalError> {
        let ht = eval_at(t)?;
        let q = 2.0 * ((ht - h0) - t * slope) / (t * t);
        let scale = ht.abs().max(h0.abs()).max((t * slope).abs()) + floor;
        let rounding = 2.0 * EVAL_ROUNDING_ULPS * f64::EPSILON * scale / (t * t);
        let included = q.is_finite() && rounding <= 0.1 * grid.tol_rel * q.abs().max(1.0);
        Ok(QuotientStep { t, q, included })
    };

    let mut trace = Vec::with_capacity(grid.steps);
    for t in grid.points() {
        trace.push(step(t)?);
    }

    let mut tail = tail_of(&trace, grid);
    let mut status = classify(&tail, grid.tol_rel);

    // A quotient blowing up like t^-α may need more steps than the grid has
    // to cross the threshold; keep halving while the pattern persists.
    let mut extra = 0;
    while status == Some(DerivStatus::Diverged)
        && tail.last().is_some_and(|q| q.abs() <= DIVERGENCE_THRESHOLD)
        && extra < MAX_EXTENSION
        && trace.last().is_some_and(|s| s.included)
    {
        trace.push(step(grid.t(trace.len()))?);
        extra += 1;
        tail = tail_of(&trace, grid);
        status = classify(&tail, grid.tol_rel);
    }

    let status = match status {
        Some(DerivStatus::Diverged)
            if tail.last().is_some_and(|q| q.abs() > DIVERGENCE_THRESHOLD) =>
        {
            DerivStatus::Diverged
        }
        Some(DerivStatus::Diverged) | None => DerivStatus::Inconclusive,
        Some(s) => s,
    };
    let value = match status {
        DerivStatus::Converged => tail.last().map(|&v| {
            // The tail cannot tell apart values smaller than its own spread.
            let last3 = &tail[tail.len() - 3..];
            let spread = last3
                .iter()
                .flat_map(|a| last3.iter().map(move |b| (a - b).abs()))
                .fold(0.0, f64::max);
            if v.abs() <= spread {
                0.0
            } else {
                v
            }
        }),
        _ => None,
    };
    Ok(SecondDirDeriv {
        value,
        status,
        slope,
        trace,
        tail,
    })
}

/// Contiguous run of included quotients ending at the last included step,
/// extrapolated when requested.
fn tail_of(trace: &[QuotientStep], grid: &StepGrid) -> Vec<f64> {
    let Some(end) = trace.iter().rposition(|s| s.included) else {
        return Vec::new();
    };
    let start = trace[..end]
        .iter()
        .rposition(|s| !s.included)
        .map_or(0, |k| k + 1);
    let q: Vec<f64> = trace[start..=end].iter().map(|s| s.q).collect();
    if grid.richardson {
        richardson(&q, grid.rho)
    } else {
        q
    }
}

/// Eliminates the `t` and `t²` terms of `q(t) = c0 + c1 t + c2 t² + ...`.
fn richardson(q: &[f64], rho: f64) -> Vec<f64> {
    let r1: Vec<f64> = q
        .windows(2)
        .map(|w| (w[1] - rho * w[0]) / (1.0 - rho))
        .collect();
    let rho2 = rho * rho;
    r1.windows(2)
        .map(|w| (w[1] - rho2 * w[0]) / (1.0 - rho2))
        .collect()
}

/// `None` means too little data. `Diverged` here only reports the growth
/// pattern; the caller checks the magnitude threshold.
fn classify(tail: &[f64], tol_rel: f64) -> Option<DerivStatus> {
    let n = tail.len();
    if n < 3 {
        return None;
    }
    let last3 = &tail[n - 3..];
    let anchor = last3[2].abs().max(1.0);
    let close = |a: f64, b: f64| (a - b).abs() < tol_rel * anchor;
    if close(last3[0], last3[1]) && close(last3[1], last3[2]) && close(last3[0], last3[2]) {
        return Some(DerivStatus::Converged);
    }
    if n >= 5 {
        let last5 = &tail[n - 5..];
        let same_sign = last5.iter().all(|q| q.signum() == last5[0].signum());
        let mags: Vec<f64> = last5.iter().map(|q| q.abs()).collect();
        let increasing = mags.windows(2).all(|w| w[1] > w[0]);
        let incs: Vec<f64> = mags.windows(2).map(|w| w[1] - w[0]).collect();
        let accelerating = incs.windows(2).all(|w| w[1] >= w[0]);
        if same_sign && increasing && accelerating {
            return Some(DerivStatus::Diverged);
        }
    }
    if n >= 6 {
        let last6 = &tail[n - 6..];
        let changes = last6
            .windows(2)
            .filter(|w| w[0] * w[1] < 0.0)
            .count();
        let amp = |s: &[f64]| s.iter().fold(0.0f64, |m, q| m.max(q.abs()));
        if changes >= 2 && amp(&last6[3..]) >= 0.5 * amp(&last6[..3]) {
            return Some(DerivStatus::Oscillating);
        }
    }
    Some(DerivStatus::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn vars(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    fn dd(src: &str, x: &[f64], u: &[f64], grid: &StepGrid) -> SecondDirDeriv {
        let e = parse(src, &vars(x.len())).unwrap();
        let g = Gradient::of(&e, x.len());
        second_dir_deriv(&e, &g, x, u, grid).unwrap()
    }

    #[test]
    fn cube_at_origin_converges_to_zero() {
        let r = dd("x1^3", &[0.0, 0.0], &[1.0, 0.0], &StepGrid::default());
        assert_eq!(r.status, DerivStatus::Converged);
        assert_eq!(r.value, Some(0.0));
        assert_eq!(r.slope, 0.0);
        assert!(r.tail.last().unwrap().abs() < 1e-8);
    }

    #[test]
    fn square_is_exact_at_every_step() {
        let r = dd("x1^2", &[0.0, 0.0], &[1.0, 0.0], &StepGrid::default());
        assert_eq!(r.status, DerivStatus::Converged);
        assert_eq!(r.value, Some(2.0));
        assert!(r.trace.iter().all(|s| s.q == 2.0 && s.included));
        assert_eq!(r.trace.len(), 24);
    }

    #[test]
    fn spow_diverges() {
        let r = dd("spow(x1, 1.5)", &[0.0, 0.0], &[1.0, 0.0], &StepGrid::default());
        assert_eq!(r.status, DerivStatus::Diverged);
        assert_eq!(r.value, None);
        let last = r.trace.last().unwrap();
        assert!(last.q > DIVERGENCE_THRESHOLD);
        // q_k = 2 t^-1/2 exactly
        for s in &r.trace {
            assert!((s.q - 2.0 / s.t.sqrt()).abs() <= 1e-12 * s.q);
        }
        let tail = &r.tail[r.tail.len() - 5..];
        assert!(tail.windows(2).all(|w| w[1].abs() > w[0].abs()));
    }

    #[test]
    fn flat_direction_at_offset_level() {
        // h(x̄) ≠ 0 and Δh = 0 along u: the quotient is exactly zero.
        let r = dd("x1 + x2 + 3", &[0.0, 0.0], &[1.0, -1.0], &StepGrid::default());
        assert_eq!(r.status, DerivStatus::Converged);
        assert_eq!(r.value, Some(0.0));
    }

    #[test]
    fn unrelated_direction_is_exactly_zero() {
        let r = dd("1e12 + x2^2", &[0.0, 0.0], &[1.0, 0.0], &StepGrid::default());
        assert_eq!(r.converged(), Some(0.0));
        let r = dd("x1^2", &[0.0, 0.0], &[0.0, 0.0], &StepGrid::default());
        assert_eq!(r.converged(), Some(0.0));
    }

    #[test]
    fn homogeneous_of_degree_two() {
        let g = StepGrid::default();
        let base = dd("x1^2 - x2 + x1*x2^3", &[0.0, 0.0], &[0.6, -0.8], &g)
            .converged()
            .unwrap();
        for c in [2.0, 0.5] {
            let scaled = dd("x1^2 - x2 + x1*x2^3", &[0.0, 0.0], &[0.6 * c, -0.8 * c], &g)
                .converged()
                .unwrap();
            assert!((scaled - c * c * base).abs() <= 1e-6 * scaled.abs().max(1e-300));
        }
    }

    #[test]
    fn oscillating_quotients_are_flagged() {
        let tail = [1.0, -1.0, 1.2, -1.1, 1.0, -1.3];
        assert_eq!(classify(&tail, 1e-6), Some(DerivStatus::Oscillating));
        let shrinking = [1.0, -0.5, 0.25, -0.125, 0.06, -0.03];
        assert_eq!(classify(&shrinking, 1e-6), Some(DerivStatus::Inconclusive));
    }

    #[test]
    fn richardson_recovers_generic_quartic() {
        let grid = StepGrid {
            t0: 0.1,
            richardson: true,
            ..StepGrid::default()
        };
        // h(x + tu) along u=(1,1) from x=(0.3,-0.7):
        // h = x1^4 + 2 x1^2 x2 - x2^3; analytic second derivative below.
        let x = [0.3, -0.7];
        let u = [1.0, 1.0];
        let r = dd("x1^4 + 2*x1^2*x2 - x2^3", &x, &u, &grid);
        let (a, b) = (x[0], x[1]);
        let hxx = 12.0 * a * a + 4.0 * b;
        let hxy = 4.0 * a;
        let hyy = -6.0 * b;
        let exact = hxx + 2.0 * hxy + hyy;
        assert_eq!(r.status, DerivStatus::Converged);
        assert!((r.value.unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn curve_examples() {
        let g = StepGrid::default();
        let v = vars(2);
        let run = |src: &str, d: [f64; 2], z: [f64; 2]| {
            let e = parse(src, &v).unwrap();
            let gr = Gradient::of(&e, 2);
            let probe = CurveProbe::new(vec![0.0, 0.0], d.to_vec(), z.to_vec());
            curve_second_deriv(&probe, &e, &gr, &g).unwrap()
        };
        assert_eq!(run("x1^2", [1.0, 0.0], [0.0, 0.0]).converged(), Some(2.0));
        let r = run("x1^3", [1.0, 0.0], [1.0, 0.0]);
        assert!(r.converged().unwrap().abs() < 1e-8);
        let r = run("x1^2 - x2", [0.0, 0.0], [1.0, 0.0]);
        assert!(r.converged().unwrap().abs() < 1e-8);
    }

    #[test]
    fn grid_validation() {
        assert!(StepGrid::default().validate().is_ok());
        let bad = StepGrid {
            rho: 1.0,
            ..StepGrid::default()
        };
        assert_eq!(bad.validate(), Err(GridError::Rho(1.0)));
    }

    #[test]
    fn evaluation_errors_propagate() {
        let e = parse("log(x1)", &vars(1)).unwrap();
        let g = Gradient::of(&e, 1);
        assert!(second_dir_deriv(&e, &g, &[0.0], &[1.0], &StepGrid::default()).is_err());
    }
}
