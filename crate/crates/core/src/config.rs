//! Tolerances and run settings.

use serde::{Deserialize, Serialize};

use crate::cones::TangentBudget;
use crate::deriv::StepGrid;
use crate::lp::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `i ∈ I(x̄)` iff `|g_i(x̄)| ≤ active_tol`.
    pub active_tol: f64,
    /// `x̄` is feasible iff `g_i(x̄) ≤ feas_tol` for all `i`.
    pub feas_tol: f64,
    /// Slack allowed in `∇f_j d ≤ 0`, `∇g_i d ≤ 0` and in the `J`, `K` tests.
    pub crit_tol: f64,
    /// Slack allowed in `∇g_i z + g''_i ≤ 0`.
    pub b_tol: f64,
    /// Residual bound for multiplier certificates and weak rows.
    pub cert_tol: f64,
    /// Strict rows of violation certificates must be at most `-cert_margin`.
    pub cert_margin: f64,
    pub lp_tol: f64,
    /// Jitter perturbations per sample in the constraint-qualification
    /// falsifiers.
    pub jitter_count: usize,
    pub jitter_radius: f64,
    /// Descent margin in the generalized-convexity probes.
    pub convexity_margin: f64,
    /// Band treated as a zero first-order term in the generalized-convexity
    /// probes.
    pub slope_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            active_tol: 1e-9,
            feas_tol: 1e-9,
            crit_tol: 1e-9,
            b_tol: 1e-9,
            cert_tol: 1e-8,
            cert_margin: 1e-8,
            lp_tol: 1e-9,
            jitter_count: 8,
            jitter_radius: 1e-3,
            convexity_margin: 1e-8,
            slope_tol: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn lp_options(&self) -> SolverOptions {
        SolverOptions {
            lp_tol: self.lp_tol,
            ..SolverOptions::default()
        }
    }
}

/// Everything besides the problem that determines a run's verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub tolerances: Tolerances,
    pub grid: StepGrid,
    pub tangent: TangentBudget,
    /// Samples per constraint-qualification falsifier.
    pub samples: usize,
    /// Sampled critical directions per point.
    pub n_dir: usize,
    /// Sample points per generalized-convexity probe.
    pub convexity_samples: usize,
    pub seed: u64,
    pub skip_cq: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tolerances: Tolerances::default(),
            grid: StepGrid::default(),
            tangent: TangentBudget::default(),
            samples: 64,
            n_dir: 32,
            convexity_samples: 256,
            seed: 0,
            skip_cq: false,
        }
    }
}
