//! Sampling falsifiers for pseudoconvexity, second-order pseudoconvexity and
//! second-order local pseudoconcavity at `t = 0` on the right.
//!
//! Pseudoconcave variants are obtained by probing `-h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Tolerances;
use crate::deriv::{curve_second_deriv, second_dir_deriv, CurveProbe, StepGrid};
use crate::expr::{EvalError, Expr, Gradient};

/// Axis-aligned box the comparison points `y` are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        SampleBox {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect()
    }
}

/// `φ(t) - φ(0)` at one grid step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rise {
    pub t: f64,
    pub rise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexityWitness {
    /// `h(y) < h(x) - margin` with the derivative condition failing.
    Pair {
        y: Vec<f64>,
        h_x: f64,
        h_y: f64,
        slope: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        second: Option<f64>,
    },
    /// `φ(t) > φ(0)` on the grid tail with the derivative condition failing.
    Curve {
        tail: Vec<Rise>,
        slope: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        second: Option<f64>,
    },
}

impl ConvexityWitness {
    /// Re-evaluates a pair witness: the premise and the failed conclusion.
    pub fn replay_pair(&self, h: &Expr, grad: &Gradient, x: &[f64], tol: &Tolerances) -> bool {
        let ConvexityWitness::Pair { y, second, .. } = self else {
            return false;
        };
        let (Ok(hx), Ok(hy)) = (h.eval(x), h.eval(y)) else {
            return false;
        };
        let u: Vec<f64> = y.iter().zip(x).map(|(y, x)| y - x).collect();
        let Ok(slope) = grad.directional(x, &u) else {
            return false;
        };
        if hy >= hx - tol.convexity_margin {
            return false;
        }
        match second {
            None => slope >= -tol.slope_tol,
            Some(v) => slope > tol.slope_tol || (slope.abs() <= tol.slope_tol && *v >= 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConvexityOutcome {
    NoCounterexampleFound,
    Fails { witness: ConvexityWitness },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityVerdict {
    pub property: String,
    pub outcome: ConvexityOutcome,
    pub samples: usize,
    pub seed: u64,
    /// Points where the premise held but the check could not be completed
    /// (outside the domain, or no converged second derivative).
    pub excluded: usize,
    pub failures: usize,
}

impl ConvexityVerdict {
    pub fn fails(&self) -> bool {
        matches!(self.outcome, ConvexityOutcome::Fails { .. })
    }

    pub fn witness(&self) -> Option<&ConvexityWitness> {
        match &self.outcome {
            ConvexityOutcome::Fails { witness } => Some(witness),
            _ => None,
        }
    }
}

fn direction(x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y - x).collect()
}

/// Shared sampling loop; `check` returns the witness for `y` when the
/// defining implication fails there, `Err(())` when `y` must be excluded.
#[allow(clippy::too_many_arguments)]
fn sweep(
    property: &str,
    h: &Expr,
    x: &[f64],
    region: &SampleBox,
    n: usize,
    seed: u64,
    tol: &Tolerances,
    mut check: impl FnMut(&[f64], f64, f64) -> Result<Option<ConvexityWitness>, ()>,
) -> Result<ConvexityVerdict, EvalError> {
    let hx = h.eval(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = None;
    let mut failures = 0;
    let mut excluded = 0;
    for _ in 0..n {
        let y = region.sample(&mut rng);
        let Ok(hy) = h.eval(&y) else {
            excluded += 1;
            continue;
        };
        if hy >= hx - tol.convexity_margin {
            continue;
        }
        match check(&y, hx, hy) {
            Ok(Some(w)) => {
                failures += 1;
                first.get_or_insert(w);
            }
            Ok(None) => {}
            Err(()) => excluded += 1,
        }
    }
    Ok(ConvexityVerdict {
        property: property.into(),
        outcome: match first {
            Some(witness) => ConvexityOutcome::Fails { witness },
            None => ConvexityOutcome::NoCounterexampleFound,
        },
        samples: n,
        seed,
        excluded,
        failures,
    })
}

/// Looks for `y` with `h(y) < h(x)` and `∇h(x)(y - x) ≥ 0`. Slopes within
/// `slope_tol` of zero count as nonnegative.
pub fn probe_pseudoconvex(
    h: &Expr,
    grad: &Gradient,
    x: &[f64],
    region: &SampleBox,
    n: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConvexityVerdict, EvalError> {
    let gx = grad.eval(x)?;
    sweep("pseudoconvex", h, x, region, n, seed, tol, |y, h_x, h_y| {
        let slope: f64 = gx.iter().zip(direction(x, y)).map(|(g, u)| g * u).sum();
        Ok((slope >= -tol.slope_tol).then(|| ConvexityWitness::Pair {
            y: y.to_vec(),
            h_x,
            h_y,
            slope,
            second: None,
        }))
    })
}

/// Looks for `y` with `h(y) < h(x)` and either `∇h(x)(y - x) > 0`, or a
/// zero slope with converged `h''(x, y - x) ≥ 0`.
#[allow(clippy::too_many_arguments)]
pub fn probe_so_pseudoconvex(
    h: &Expr,
    grad: &Gradient,
    x: &[f64],
    region: &SampleBox,
    n: usize,
    seed: u64,
    grid: &StepGrid,
    tol: &Tolerances,
) -> Result<ConvexityVerdict, EvalError> {
    let gx = grad.eval(x)?;
    sweep("second_order_pseudoconvex", h, x, region, n, seed, tol, |y, h_x, h_y| {
        let u = direction(x, y);
        let slope: f64 = gx.iter().zip(&u).map(|(g, u)| g * u).sum();
        let pair = |second| ConvexityWitness::Pair {
            y: y.to_vec(),
            h_x,
            h_y,
            slope,
            second,
        };
        if slope > tol.slope_tol {
            return Ok(Some(pair(None)));
        }
        if slope < -tol.slope_tol {
            return Ok(None);
        }
        let v = second_dir_deriv(h, grad, x, &u, grid)
            .ok()
            .and_then(|s| s.converged())
            .ok_or(())?;
        Ok((v >= 0.0).then(|| pair(Some(v))))
    })
}

/// Tests the implication defining second-order local pseudoconcavity of
/// `φ(t) = g(x + t d + t²z/2)` at `t = 0` on the right. The premise
/// `φ(t) > φ(0)` on `(0, δ)` is read off the grid: after dropping the
/// deepest steps whose rise is lost in rounding, at least three consecutive
/// positive rises must end the grid.
pub fn probe_solpc_right(
    probe: &CurveProbe,
    g: &Expr,
    grad: &Gradient,
    grid: &StepGrid,
    tol: &Tolerances,
) -> Result<ConvexityVerdict, EvalError> {
    const MIN_TAIL: usize = 3;
    let phi0 = g.eval(&probe.x)?;
    let slope = grad.directional(&probe.x, &probe.d)?;
    let rounding = 16.0 * f64::EPSILON * phi0.abs().max(f64::MIN_POSITIVE);
    let mut rises = Vec::with_capacity(grid.steps);
    for t in grid.points() {
        rises.push(Rise {
            t,
            rise: g.eval(&probe.point(t))? - phi0,
        });
    }
    let resolved = rises
        .iter()
        .rposition(|r| r.rise.abs() > rounding)
        .map_or(0, |k| k + 1);
    let start = rises[..resolved]
        .iter()
        .rposition(|r| r.rise <= 0.0)
        .map_or(0, |k| k + 1);
    let tail = rises[start..resolved].to_vec();
    let verdict = |outcome: ConvexityOutcome| ConvexityVerdict {
        property: "second_order_locally_pseudoconcave_right".into(),
        failures: usize::from(matches!(outcome, ConvexityOutcome::Fails { .. })),
        outcome,
        samples: grid.steps,
        seed: 0,
        excluded: 0,
    };
    if tail.len() < MIN_TAIL {
        return Ok(verdict(ConvexityOutcome::NoCounterexampleFound));
    }
    if slope < -tol.slope_tol {
        return Ok(verdict(ConvexityOutcome::Fails {
            witness: ConvexityWitness::Curve {
                tail,
                slope,
                second: None,
            },
        }));
    }
    if slope > tol.slope_tol {
        return Ok(verdict(ConvexityOutcome::NoCounterexampleFound));
    }
    let sd = curve_second_deriv(probe, g, grad, grid)?;
    Ok(verdict(match sd.converged() {
        Some(v) if v <= 0.0 => ConvexityOutcome::Fails {
            witness: ConvexityWitness::Curve {
                tail,
                slope,
                second: Some(v),
            },
        },
        Some(_) => ConvexityOutcome::NoCounterexampleFound,
        None => ConvexityOutcome::Inconclusive {
            reason: format!("phi''(0,1) is {:?}", sd.status).to_lowercase(),
        },
    }))
}
