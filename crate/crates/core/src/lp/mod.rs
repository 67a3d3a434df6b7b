//! Self-contained bounded-variable linear-program solver.
//!
//! The screening engine generates many small, closely related LPs, so the
//! solver is built for determinism and warm starts rather than raw scale:
//! a primal simplex over bounded variables with a dense basis inverse,
//! a composite phase 1 that minimizes total bound infeasibility, and
//! largest-coefficient pricing with a Bland's-rule fallback once degenerate
//! pivots pile up. Identical models always produce identical outcomes.
//!
//! [`lp_solve`] is the one-shot entry point. [`Simplex`] keeps the factorized
//! basis alive between solves so callers can swap objectives, append rows,
//! and retune the right-hand side cheaply; reusing it never changes results
//! versus solving the grown model from scratch.

mod simplex;

use alloc::format;
use alloc::string::String;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use simplex::Simplex;

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Objective sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// A decision variable with (possibly infinite) bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// A sparse linear row: `sum coef * var  (<= | = | >=)  rhs`.
///
/// Terms index into the owning model's variable list; duplicate indices are
/// allowed and sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A sparse linear objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve.
///
/// `values` (one per variable, in model order) and `objective_value` are
/// meaningful only when the status is [`SolveStatus::Optimal`]; otherwise
/// `values` is empty and the objective is NaN. Optimal points satisfy every
/// constraint to 1e-8 absolute and every bound to 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
}

/// A bounded-variable LP in the shape the screening engine emits.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

impl LpModel {
    /// An empty model with a zero minimization objective.
    pub fn new() -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { terms: Vec::new(), sense: Sense::Minimize },
        }
    }

    /// Appends a variable and returns its index. Names must be unique and
    /// bounds ordered.
    pub fn add_variable(&mut self, name: &str, lower: f64, upper: f64) -> Result<usize> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Model(format!(
                "variable {name}: invalid bounds [{lower}, {upper}]"
            )));
        }
        if self.variables.iter().any(|v| v.name == name) {
            return Err(Error::Model(format!("duplicate variable name {name}")));
        }
        self.variables.push(Variable { name: name.to_string(), lower, upper });
        Ok(self.variables.len() - 1)
    }

    /// Index of a variable by name.
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Builds a constraint from named terms; unknown names are rejected.
    pub fn constraint_by_name(
        &self,
        terms: &[(&str, f64)],
        relation: Relation,
        rhs: f64,
    ) -> Result<Constraint> {
        let mut resolved = Vec::with_capacity(terms.len());
        for (name, coef) in terms {
            let idx = self
                .variable_index(name)
                .ok_or_else(|| Error::Model(format!("unknown variable name {name}")))?;
            resolved.push((idx, *coef));
        }
        Ok(Constraint { terms: resolved, relation, rhs })
    }

    /// Appends one row after validating it against the present variables.
    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<()> {
        self.validate_constraint(&constraint)?;
        self.constraints.push(constraint);
        Ok(())
    }

    /// Replaces the objective after validation.
    pub fn set_objective(&mut self, objective: Objective) -> Result<()> {
        for &(idx, coef) in &objective.terms {
            if idx >= self.variables.len() {
                return Err(Error::Model(format!(
                    "objective references unknown variable {idx}"
                )));
            }
            if !coef.is_finite() {
                return Err(Error::Model("objective has a non-finite coefficient".to_string()));
            }
        }
        self.objective = objective;
        Ok(())
    }

    fn validate_constraint(&self, constraint: &Constraint) -> Result<()> {
        for &(idx, coef) in &constraint.terms {
            if idx >= self.variables.len() {
                return Err(Error::Model(format!(
                    "constraint references unknown variable {idx}"
                )));
            }
            if !coef.is_finite() {
                return Err(Error::Model("constraint has a non-finite coefficient".to_string()));
            }
        }
        if !constraint.rhs.is_finite() {
            return Err(Error::Model("constraint has a non-finite right-hand side".to_string()));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for c in &self.constraints {
            self.validate_constraint(c)?;
        }
        for &(idx, coef) in &self.objective.terms {
            if idx >= self.variables.len() || !coef.is_finite() {
                return Err(Error::Model("invalid objective".to_string()));
            }
        }
        Ok(())
    }

    /// Serializes the model in CPLEX LP text format for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}",
            match self.objective.sense {
                Sense::Maximize => "Maximize",
                Sense::Minimize => "Minimize",
            }
        );
        let _ = write!(out, " obj:");
        if self.objective.terms.is_empty() {
            let _ = write!(out, " 0 {}", self.variables.first().map_or("x", |v| &v.name));
        }
        for &(idx, coef) in &self.objective.terms {
            let _ = write!(out, " {:+} {}", coef, self.variables[idx].name);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Subject To");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            for &(idx, coef) in &c.terms {
                let _ = write!(out, " {:+} {}", coef, self.variables[idx].name);
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " {rel} {}", c.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for v in &self.variables {
            if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
                let _ = writeln!(out, " {} free", v.name);
            } else if v.lower == v.upper {
                let _ = writeln!(out, " {} = {}", v.name, v.lower);
            } else {
                let lo = if v.lower == f64::NEG_INFINITY {
                    "-inf".to_string()
                } else {
                    format!("{}", v.lower)
                };
                let hi = if v.upper == f64::INFINITY {
                    "+inf".to_string()
                } else {
                    format!("{}", v.upper)
                };
                let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}

impl Default for LpModel {
    fn default() -> Self {
        Self::new()
    }
}

/// Solves a model from a cold start.
pub fn lp_solve(model: &LpModel) -> Result<SolveOutcome> {
    Simplex::new(model)?.solve()
}
