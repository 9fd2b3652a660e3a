//! Second-order KKT certification along a critical direction.
//!
//! A direction is certified by multipliers `λ ≥ 0`, `Σλ = 1`, `μ ≥ 0` with
//! `Σλ_j∇f_j + Σμ_i∇g_i = 0` and `Σλ_j f''_j + Σμ_i g''_i ≥ 0`. Their
//! absence is equivalent to solvability of one of two homogeneous strict
//! systems, whose solutions (or a solution `z` of the primal system) serve
//! as violation certificates.

use serde::Serialize;
use thiserror::Error;

use crate::cones::{dot, DirectionAnalysis, PointContext};
use crate::config::Tolerances;
use crate::lp::{
    solve_with, strict_system_solvable, LinearProgram, LpError, LpStatus, Row, Sense,
    StrictSolve, StrictSystem, VarBound,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KktError {
    #[error("direction is not critical")]
    NotCritical,
    #[error("second directional derivatives unavailable for {}", .0.join(", "))]
    MissingSecondDerivative(Vec<String>),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("certificate failed its own check: {0}")]
    CertificateCheck(String),
}

/// First- and second-order data at `(x̄, d)`, detached from the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub dim: usize,
    pub grad_f: Vec<Vec<f64>>,
    /// Active constraint indices `I(x̄)`.
    pub active: Vec<usize>,
    /// Gradients aligned with `active`.
    pub grad_g: Vec<Vec<f64>>,
    /// Values of all `m` constraints at `x̄`.
    pub g_values: Vec<f64>,
    pub f_second: Vec<Option<f64>>,
    /// Aligned with `active`.
    pub g_second: Vec<Option<f64>>,
    pub j_set: Vec<usize>,
    /// Subset of `active`.
    pub k_set: Vec<usize>,
    pub critical: bool,
}

impl LocalModel {
    pub fn new(ctx: &PointContext<'_>, da: &DirectionAnalysis) -> Self {
        LocalModel {
            dim: ctx.dim(),
            grad_f: ctx.grad_f.clone(),
            active: ctx.active.clone(),
            grad_g: ctx.grad_g.clone(),
            g_values: ctx.g_values.clone(),
            f_second: da.f_second.iter().map(|s| s.value()).collect(),
            g_second: da.g_second.iter().map(|s| s.value()).collect(),
            j_set: da.j_set.clone(),
            k_set: da.k_set.clone(),
            critical: da.critical,
        }
    }

    pub fn n(&self) -> usize {
        self.grad_f.len()
    }

    fn pos(&self, i: usize) -> usize {
        self.active
            .iter()
            .position(|&a| a == i)
            .expect("K is a subset of I")
    }

    /// All second derivatives the alternative systems need.
    fn all_second(&self) -> Result<(Vec<f64>, Vec<f64>), KktError> {
        let mut missing = Vec::new();
        for (j, v) in self.f_second.iter().enumerate() {
            if v.is_none() {
                missing.push(format!("f{}", j + 1));
            }
        }
        for (p, v) in self.g_second.iter().enumerate() {
            if v.is_none() {
                missing.push(format!("g{}", self.active[p] + 1));
            }
        }
        if !missing.is_empty() {
            return Err(KktError::MissingSecondDerivative(missing));
        }
        Ok((
            self.f_second.iter().map(|v| v.unwrap()).collect(),
            self.g_second.iter().map(|v| v.unwrap()).collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierCertificate {
    pub lambda: Vec<f64>,
    /// One entry per constraint; zero for inactive ones.
    pub mu: Vec<f64>,
    /// Euclidean norm of `Σλ_j∇f_j + Σμ_i∇g_i`.
    pub residual: f64,
    /// `L''(x̄,d) = Σλ_j f''_j + Σμ_i g''_i`.
    pub curvature: f64,
    /// `max_i |μ_i g_i(x̄)|`.
    pub complementarity: f64,
}

impl MultiplierCertificate {
    pub fn verify(&self, tol: &Tolerances) -> bool {
        let sum: f64 = self.lambda.iter().sum();
        self.residual <= tol.cert_tol
            && self.curvature >= -tol.cert_tol
            && self.complementarity <= tol.cert_tol
            && (sum - 1.0).abs() <= tol.cert_tol
            && self.lambda.iter().chain(&self.mu).all(|&v| v >= -tol.cert_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `z` with `∇f_j z + f''_j < 0` (j ∈ J), `∇g_i z + g''_i ≤ 0` (i ∈ K).
    PrimalZ,
    /// `(u, v)`, `v > 0`, with `∇f_j u + v f''_j < 0` for all j and
    /// `∇g_i u + v g''_i ≤ 0` for i ∈ I.
    System63,
    /// `u` with `∇f_j u < 0` for all j and `∇g_i u ≤ 0` for i ∈ I.
    System64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertRow {
    /// `f1`, `g2`, ... or `v` for the positivity of `v`.
    pub row: String,
    pub strict: bool,
    /// Left-hand side; strict rows need `< 0`, weak rows `≤ 0`. The `v` row
    /// stores `-v`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationCertificate {
    pub kind: ViolationKind,
    /// `z`, `u`, or `u` followed by `v`.
    pub witness: Vec<f64>,
    pub residuals: Vec<CertRow>,
}

impl ViolationCertificate {
    pub fn verify(&self, tol: &Tolerances) -> bool {
        self.residuals.iter().all(|r| {
            if r.strict {
                r.value <= -tol.cert_margin
            } else {
                r.value <= tol.cert_tol
            }
        })
    }

    /// Recomputes the residual rows of `witness` against `model`.
    pub fn build(
        kind: ViolationKind,
        model: &LocalModel,
        witness: Vec<f64>,
    ) -> Result<Self, KktError> {
        let s = model.dim;
        let mut rows = Vec::new();
        match kind {
            ViolationKind::PrimalZ => {
                for &j in &model.j_set {
                    let f2 = model.f_second[j].ok_or_else(|| missing_f(j))?;
                    rows.push(CertRow {
                        row: format!("f{}", j + 1),
                        strict: true,
                        value: dot(&model.grad_f[j], &witness) + f2,
                    });
                }
                for &i in &model.k_set {
                    let p = model.pos(i);
                    let g2 = model.g_second[p].ok_or_else(|| missing_g(i))?;
                    rows.push(CertRow {
                        row: format!("g{}", i + 1),
                        strict: false,
                        value: dot(&model.grad_g[p], &witness) + g2,
                    });
                }
            }
            ViolationKind::System63 => {
                let (f2, g2) = model.all_second()?;
                let (u, v) = (&witness[..s], witness[s]);
                for (j, g) in model.grad_f.iter().enumerate() {
                    rows.push(CertRow {
                        row: format!("f{}", j + 1),
                        strict: true,
                        value: dot(g, u) + v * f2[j],
                    });
                }
                for (p, g) in model.grad_g.iter().enumerate() {
                    rows.push(CertRow {
                        row: format!("g{}", model.active[p] + 1),
                        strict: false,
                        value: dot(g, u) + v * g2[p],
                    });
                }
                rows.push(CertRow {
                    row: "v".into(),
                    strict: true,
                    value: -v,
                });
            }
            ViolationKind::System64 => {
                for (j, g) in model.grad_f.iter().enumerate() {
                    rows.push(CertRow {
                        row: format!("f{}", j + 1),
                        strict: true,
                        value: dot(g, &witness),
                    });
                }
                for (p, g) in model.grad_g.iter().enumerate() {
                    rows.push(CertRow {
                        row: format!("g{}", model.active[p] + 1),
                        strict: false,
                        value: dot(g, &witness),
                    });
                }
            }
        }
        Ok(ViolationCertificate {
            kind,
            witness,
            residuals: rows,
        })
    }
}

fn missing_f(j: usize) -> KktError {
    KktError::MissingSecondDerivative(vec![format!("f{}", j + 1)])
}

fn missing_g(i: usize) -> KktError {
    KktError::MissingSecondDerivative(vec![format!("g{}", i + 1)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PrimalOutcome {
    /// No `z` solves the primal system.
    Holds,
    Violated { certificate: ViolationCertificate },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SystemOutcome {
    Solvable { certificate: ViolationCertificate },
    Unsolvable,
}

impl SystemOutcome {
    pub fn is_solvable(&self) -> bool {
        matches!(self, SystemOutcome::Solvable { .. })
    }
}

fn checked(cert: ViolationCertificate, tol: &Tolerances) -> Result<ViolationCertificate, KktError> {
    if cert.verify(tol) {
        Ok(cert)
    } else {
        Err(KktError::CertificateCheck(format!(
            "{:?} witness {:?} gives rows {:?}",
            cert.kind, cert.witness, cert.residuals
        )))
    }
}

/// Searches `z` with `∇f_j z + f''_j < 0` (j ∈ J) and `∇g_i z + g''_i ≤ 0`
/// (i ∈ K), homogenised as `(w, v)` with `v > 0` and `z = w / v`.
pub fn primal_condition(model: &LocalModel, tol: &Tolerances) -> Result<PrimalOutcome, KktError> {
    if !model.critical {
        return Err(KktError::NotCritical);
    }
    if model.j_set.is_empty() {
        return Ok(PrimalOutcome::Inconclusive {
            reason: "J(x,d) is empty: the primal system has no strict row".into(),
        });
    }
    let mut missing = Vec::new();
    for &j in &model.j_set {
        if model.f_second[j].is_none() {
            missing.push(format!("f{}", j + 1));
        }
    }
    for &i in &model.k_set {
        if model.g_second[model.pos(i)].is_none() {
            missing.push(format!("g{}", i + 1));
        }
    }
    if !missing.is_empty() {
        return Ok(PrimalOutcome::Inconclusive {
            reason: format!("second derivative not converged for {}", missing.join(", ")),
        });
    }
    let s = model.dim;
    let row = |g: &[f64], c: f64| {
        let mut r = g.to_vec();
        r.push(c);
        r
    };
    let sys = StrictSystem {
        dim: s + 1,
        strict_rows: model
            .j_set
            .iter()
            .map(|&j| row(&model.grad_f[j], model.f_second[j].unwrap()))
            .collect(),
        weak_rows: model
            .k_set
            .iter()
            .map(|&i| {
                let p = model.pos(i);
                row(&model.grad_g[p], model.g_second[p].unwrap())
            })
            .collect(),
        strict_vars: vec![s],
    };
    match strict_system_solvable(&sys, &tol.lp_options())? {
        StrictSolve::Unsolvable => Ok(PrimalOutcome::Holds),
        StrictSolve::Solvable { witness } => {
            let v = witness[s];
            let z = witness[..s].iter().map(|w| w / v).collect();
            let cert = ViolationCertificate::build(ViolationKind::PrimalZ, model, z)?;
            Ok(PrimalOutcome::Violated {
                certificate: checked(cert, tol)?,
            })
        }
    }
}

pub fn system_63_solvable(model: &LocalModel, tol: &Tolerances) -> Result<SystemOutcome, KktError> {
    let (f2, g2) = model.all_second()?;
    let s = model.dim;
    let row = |g: &[f64], c: f64| {
        let mut r = g.to_vec();
        r.push(c);
        r
    };
    let sys = StrictSystem {
        dim: s + 1,
        strict_rows: model.grad_f.iter().zip(&f2).map(|(g, &c)| row(g, c)).collect(),
        weak_rows: model.grad_g.iter().zip(&g2).map(|(g, &c)| row(g, c)).collect(),
        strict_vars: vec![s],
    };
    match strict_system_solvable(&sys, &tol.lp_options())? {
        StrictSolve::Unsolvable => Ok(SystemOutcome::Unsolvable),
        StrictSolve::Solvable { witness } => {
            let cert = ViolationCertificate::build(ViolationKind::System63, model, witness)?;
            Ok(SystemOutcome::Solvable {
                certificate: checked(cert, tol)?,
            })
        }
    }
}

pub fn system_64_solvable(model: &LocalModel, tol: &Tolerances) -> Result<SystemOutcome, KktError> {
    let sys = StrictSystem {
        dim: model.dim,
        strict_rows: model.grad_f.clone(),
        weak_rows: model.grad_g.clone(),
        strict_vars: Vec::new(),
    };
    match strict_system_solvable(&sys, &tol.lp_options())? {
        StrictSolve::Unsolvable => Ok(SystemOutcome::Unsolvable),
        StrictSolve::Solvable { witness } => {
            let cert = ViolationCertificate::build(ViolationKind::System64, model, witness)?;
            Ok(SystemOutcome::Solvable {
                certificate: checked(cert, tol)?,
            })
        }
    }
}

/// Feasibility LP for `(λ, μ)`; `None` when infeasible.
pub fn find_multipliers(
    model: &LocalModel,
    tol: &Tolerances,
) -> Result<Option<MultiplierCertificate>, KktError> {
    let (f2, g2) = model.all_second()?;
    let n = model.n();
    let a = model.active.len();
    let nv = n + a;
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; nv], vec![VarBound::NonNegative; nv]);
    for k in 0..model.dim {
        let coeffs = model
            .grad_f
            .iter()
            .chain(&model.grad_g)
            .map(|g| g[k])
            .collect();
        lp.push(Row::eq(coeffs, 0.0));
    }
    lp.push(Row::ge(f2.iter().chain(&g2).copied().collect(), 0.0));
    let mut ones = vec![1.0; n];
    ones.extend(std::iter::repeat_n(0.0, a));
    lp.push(Row::eq(ones, 1.0));

    let x = match solve_with(&lp, &tol.lp_options())?.status {
        LpStatus::Optimal { x, .. } => x,
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded { .. } => {
            return Err(KktError::Lp(LpError::NumericBreakdown {
                step: 0,
                detail: "multiplier feasibility LP reported unbounded".into(),
            }))
        }
    };
    let lambda = x[..n].to_vec();
    let mut mu = vec![0.0; model.g_values.len()];
    for (p, &i) in model.active.iter().enumerate() {
        mu[i] = x[n + p];
    }
    let stationarity: Vec<f64> = (0..model.dim)
        .map(|k| {
            model
                .grad_f
                .iter()
                .chain(&model.grad_g)
                .zip(&x)
                .map(|(g, w)| w * g[k])
                .sum()
        })
        .collect();
    let cert = MultiplierCertificate {
        residual: dot(&stationarity, &stationarity).sqrt(),
        curvature: f2.iter().chain(&g2).zip(&x).map(|(c, w)| c * w).sum(),
        complementarity: mu
            .iter()
            .zip(&model.g_values)
            .map(|(m, g)| (m * g).abs())
            .fold(0.0, f64::max),
        lambda,
        mu,
    };
    if cert.verify(tol) {
        Ok(Some(cert))
    } else {
        Err(KktError::CertificateCheck(format!("{cert:?}")))
    }
}

/// Primal side of the multiplier alternative,
/// `max 0 s.t. ∇f_j u + v f''_j ≤ -1, ∇g_i u + v g''_i ≤ 0 (i ∈ I), v ≥ 0`.
/// Returns whether it is feasible; it is infeasible exactly when multipliers
/// exist.
pub fn primal_lp_feasible(model: &LocalModel, tol: &Tolerances) -> Result<bool, KktError> {
    let (f2, g2) = model.all_second()?;
    let s = model.dim;
    let mut bounds = vec![VarBound::Free; s];
    bounds.push(VarBound::NonNegative);
    let mut lp = LinearProgram::new(Sense::Maximize, vec![0.0; s + 1], bounds);
    for (g, &c) in model.grad_f.iter().zip(&f2) {
        let mut r = g.clone();
        r.push(c);
        lp.push(Row::le(r, -1.0));
    }
    for (g, &c) in model.grad_g.iter().zip(&g2) {
        let mut r = g.clone();
        r.push(c);
        lp.push(Row::le(r, 0.0));
    }
    match solve_with(&lp, &tol.lp_options())?.status {
        LpStatus::Optimal { .. } => Ok(true),
        LpStatus::Infeasible => Ok(false),
        LpStatus::Unbounded { .. } => Err(KktError::Lp(LpError::NumericBreakdown {
            step: 0,
            detail: "zero-objective LP reported unbounded".into(),
        })),
    }
}

/// What the constraint-qualification falsifiers found for this direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CqStatus {
    /// Checked, no counterexample found.
    Clean,
    /// A failure witness was found.
    Failed,
    NotChecked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CqContext {
    pub so_zangwill: CqStatus,
    pub abadie: CqStatus,
    pub guignard: CqStatus,
}

impl CqContext {
    pub fn unchecked() -> Self {
        CqContext {
            so_zangwill: CqStatus::NotChecked,
            abadie: CqStatus::NotChecked,
            guignard: CqStatus::NotChecked,
        }
    }

    pub fn clean() -> Self {
        CqContext {
            so_zangwill: CqStatus::Clean,
            abadie: CqStatus::Clean,
            guignard: CqStatus::Clean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Certified,
    Refuted,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SystemReport {
    Solvable { certificate: ViolationCertificate },
    Unsolvable,
    Unavailable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionVerdict {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub multipliers: Option<MultiplierCertificate>,
    pub primal_condition: PrimalOutcome,
    pub system_63: SystemReport,
    pub system_64: SystemReport,
    /// The certificate the refutation rests on.
    pub refuted_by: Option<ViolationKind>,
}

fn report(r: Result<SystemOutcome, KktError>) -> Result<SystemReport, KktError> {
    match r {
        Ok(SystemOutcome::Solvable { certificate }) => Ok(SystemReport::Solvable { certificate }),
        Ok(SystemOutcome::Unsolvable) => Ok(SystemReport::Unsolvable),
        Err(e @ KktError::MissingSecondDerivative(_)) => Ok(SystemReport::Unavailable {
            reason: e.to_string(),
        }),
        Err(e) => Err(e),
    }
}

fn cq_reason(name: &str, status: CqStatus) -> Option<String> {
    match status {
        CqStatus::Clean => None,
        CqStatus::Failed => Some(format!("{name} CQ failure witness found")),
        CqStatus::NotChecked => Some(format!("{name} CQ not checked")),
    }
}

/// Combines multipliers, the primal condition and both systems into one
/// verdict. A refutation is only issued when the falsifiers found no
/// failure of the qualification the corresponding necessary condition
/// assumes.
pub fn certify_direction(
    ctx: &PointContext<'_>,
    da: &DirectionAnalysis,
    cq: &CqContext,
) -> Result<DirectionVerdict, KktError> {
    certify_model(&LocalModel::new(ctx, da), cq, &ctx.tol)
}

pub fn certify_model(
    model: &LocalModel,
    cq: &CqContext,
    tol: &Tolerances,
) -> Result<DirectionVerdict, KktError> {
    let primal = primal_condition(model, tol)?;
    let s63 = report(system_63_solvable(model, tol))?;
    let s64 = report(system_64_solvable(model, tol))?;
    let mut reasons = Vec::new();
    let multipliers = match find_multipliers(model, tol) {
        Ok(m) => m,
        Err(e @ KktError::MissingSecondDerivative(_)) => {
            reasons.push(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    if multipliers.is_some() {
        return Ok(DirectionVerdict {
            verdict: Verdict::Certified,
            reasons,
            multipliers,
            primal_condition: primal,
            system_63: s63,
            system_64: s64,
            refuted_by: None,
        });
    }

    let so_clean = cq.so_zangwill == CqStatus::Clean;
    let first_order_clean =
        cq.abadie == CqStatus::Clean || (model.n() == 1 && cq.guignard == CqStatus::Clean);
    let mut refuted_by = None;
    if matches!(primal, PrimalOutcome::Violated { .. }) && so_clean {
        refuted_by = Some(ViolationKind::PrimalZ);
    } else if matches!(s63, SystemReport::Solvable { .. }) && so_clean {
        refuted_by = Some(ViolationKind::System63);
    } else if matches!(s64, SystemReport::Solvable { .. }) && first_order_clean {
        refuted_by = Some(ViolationKind::System64);
    }

    if refuted_by.is_none() {
        if let PrimalOutcome::Inconclusive { reason } = &primal {
            reasons.push(format!("primal condition inconclusive: {reason}"));
        }
        let second_order_evidence = matches!(primal, PrimalOutcome::Violated { .. })
            || matches!(s63, SystemReport::Solvable { .. });
        if second_order_evidence {
            reasons.extend(cq_reason("second-order Zangwill", cq.so_zangwill));
        }
        if matches!(s64, SystemReport::Solvable { .. }) {
            if model.n() == 1 {
                if let (Some(a), Some(g)) = (
                    cq_reason("Abadie", cq.abadie),
                    cq_reason("Guignard", cq.guignard),
                ) {
                    reasons.push(format!("{a}; {g}"));
                }
            } else {
                reasons.extend(cq_reason("Abadie", cq.abadie));
            }
        }
        if !second_order_evidence && !matches!(s64, SystemReport::Solvable { .. }) {
            reasons.push("no multipliers and no violation certificate".into());
        }
    }
    Ok(DirectionVerdict {
        verdict: if refuted_by.is_some() {
            Verdict::Refuted
        } else {
            Verdict::Undecided
        },
        reasons,
        multipliers: None,
        primal_condition: primal,
        system_63: s63,
        system_64: s64,
        refuted_by,
    })
}
