//! Inequality-constrained vector programs `min (f_1, ..., f_n)` subject to
//! `g_i(x) ≤ 0`.

use thiserror::Error;

use crate::expr::{parse, EvalError, Expr, Gradient, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    /// `f1`, `f2`, ... for objectives and `g1`, `g2`, ... for constraints.
    pub label: String,
    pub source: String,
    pub expr: Expr,
    pub gradient: Gradient,
}

impl Function {
    fn new(label: String, source: &str, vars: &[String]) -> Result<Self, ProblemError> {
        let expr = parse(source, vars).map_err(|error| ProblemError::Parse {
            label: label.clone(),
            source_text: source.to_string(),
            error,
        })?;
        let gradient = Gradient::of(&expr, vars.len());
        Ok(Function {
            label,
            source: source.to_string(),
            expr,
            gradient,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.expr.eval(x)
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.gradient.eval(x)
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("a problem needs at least one variable")]
    NoVariables,
    #[error("a problem needs at least one objective")]
    NoObjectives,
    #[error("variable name `{0}` is not an identifier")]
    BadVariableName(String),
    #[error("variable `{0}` is declared twice")]
    DuplicateVariable(String),
    #[error("variable name `{0}` clashes with a function name")]
    ReservedVariable(String),
    #[error("{label} = `{source_text}`: {error}")]
    Parse {
        label: String,
        source_text: String,
        error: ParseError,
    },
}

const FUNCTION_NAMES: [&str; 7] = ["sin", "cos", "exp", "log", "sqrt", "abs", "spow"];

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub variables: Vec<String>,
    pub objectives: Vec<Function>,
    pub constraints: Vec<Function>,
}

impl Problem {
    pub fn new<S: AsRef<str>>(
        name: &str,
        variables: &[S],
        objectives: &[S],
        constraints: &[S],
    ) -> Result<Self, ProblemError> {
        let vars: Vec<String> = variables.iter().map(|v| v.as_ref().to_string()).collect();
        if vars.is_empty() {
            return Err(ProblemError::NoVariables);
        }
        for (k, v) in vars.iter().enumerate() {
            let mut chars = v.chars();
            let ok = chars
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(ProblemError::BadVariableName(v.clone()));
            }
            if FUNCTION_NAMES.contains(&v.as_str()) {
                return Err(ProblemError::ReservedVariable(v.clone()));
            }
            if vars[..k].contains(v) {
                return Err(ProblemError::DuplicateVariable(v.clone()));
            }
        }
        if objectives.is_empty() {
            return Err(ProblemError::NoObjectives);
        }
        let objectives = objectives
            .iter()
            .enumerate()
            .map(|(j, src)| Function::new(format!("f{}", j + 1), src.as_ref(), &vars))
            .collect::<Result<_, _>>()?;
        let constraints = constraints
            .iter()
            .enumerate()
            .map(|(i, src)| Function::new(format!("g{}", i + 1), src.as_ref(), &vars))
            .collect::<Result<_, _>>()?;
        Ok(Problem {
            name: name.to_string(),
            variables: vars,
            objectives,
            constraints,
        })
    }

    /// Dimension `s` of the decision space.
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn function(&self, label: &str) -> Option<&Function> {
        self.objectives
            .iter()
            .chain(&self.constraints)
            .find(|f| f.label == label)
    }

    /// Whether `x` satisfies every constraint with a strict sign test.
    /// Points where a constraint cannot be evaluated count as infeasible.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|g| g.eval(x).is_ok_and(|v| v <= 0.0))
    }

    /// `max_i g_i(x)` over all constraints, `None` if some constraint cannot
    /// be evaluated, `-inf` without constraints.
    pub fn max_violation(&self, x: &[f64]) -> Option<f64> {
        self.constraints
            .iter()
            .try_fold(f64::NEG_INFINITY, |m, g| g.eval(x).ok().map(|v| m.max(v)))
    }
}
