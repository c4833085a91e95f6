//! Bounded model-counting oracles.
//!
//! A query asks for `min(cap, |S(F) ∩ R|)` where `R` is the solution set of
//! a parity system. When a formula has a projection set the count is over
//! distinct restrictions of models to that set. Answers that could not be
//! completed within the wall-clock budget are reported as
//! [`BoundedCountResult::TimedOut`] carrying the number of solutions found,
//! which never exceeds the true capped count.

mod cache;
mod encode;
mod enumerate;
mod external;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{CnfFormula, FormulaError};
use crate::xorsys::XorSystem;

pub use cache::SolutionCache;
pub use encode::{chunk_xor, encode_query, xor_to_cnf, EncodedQuery, XorEncoding};
pub use enumerate::InternalEnumerator;
pub use external::{parse_cms_transcript, run_external, ExternalSolver, SolverCommand, SOLVER_ENV};

/// Outcome of one capped counting query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "count", rename_all = "snake_case")]
pub enum BoundedCountResult {
    /// Exactly this many solutions, fewer than the cap.
    Exact(u64),
    /// At least `cap` solutions.
    Saturated(u64),
    /// Budget expired; at least this many solutions exist.
    TimedOut(u64),
}

impl BoundedCountResult {
    /// A value never larger than `min(cap, |S ∩ R|)`.
    pub fn conservative(self, cap: u64) -> u64 {
        match self {
            BoundedCountResult::Exact(k) | BoundedCountResult::TimedOut(k) => k.min(cap),
            BoundedCountResult::Saturated(c) => c.min(cap),
        }
    }

    pub fn timed_out(self) -> bool {
        matches!(self, BoundedCountResult::TimedOut(_))
    }

    pub(crate) fn from_count(count: u64, cap: u64) -> Self {
        if count >= cap {
            BoundedCountResult::Saturated(cap)
        } else {
            BoundedCountResult::Exact(count)
        }
    }
}

/// Per-call limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub cap: u64,
    pub wall_clock: Option<Duration>,
}

impl OracleBudget {
    pub fn new(cap: u64) -> Result<Self, OracleError> {
        if cap == 0 {
            return Err(OracleError::ZeroCap);
        }
        Ok(OracleBudget {
            cap,
            wall_clock: None,
        })
    }

    pub fn with_timeout(mut self, limit: Option<Duration>) -> Self {
        self.wall_clock = limit;
        self
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error("internal enumerator limited to {max} variables, formula has {found}")]
    TooManyVars { max: usize, found: usize },
    #[error("parity system has {found} variables, formula has {expected}")]
    VarMismatch { expected: usize, found: usize },
    #[error("solution cache holds a different formula")]
    CacheMismatch,
    #[error("parity row touches variable {0}, which is outside the projection set")]
    RowOutsideProjection(usize),
    #[error("solution cache would exceed {0} entries")]
    CacheTooLarge(usize),
    #[error("chunk size must be at least 3, got {0}")]
    ChunkTooSmall(usize),
    #[error("solver executable not found: {0}")]
    SolverMissing(String),
    #[error("failed to run solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited with {status} and no usable output: {stderr}")]
    SolverFailed { status: String, stderr: String },
    #[error("unparseable solver output: {0}")]
    Protocol(String),
    #[error("external backend requires a per-call wall-clock limit")]
    NoWallClock,
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Anything that can answer capped counting queries.
pub trait CountingOracle: Send + Sync {
    fn bounded_count(
        &self,
        formula: &CnfFormula,
        xors: &XorSystem,
        budget: &OracleBudget,
    ) -> Result<BoundedCountResult, OracleError>;

    /// Human-readable backend name for reports.
    fn name(&self) -> &str;
}

pub(crate) fn check_vars(formula: &CnfFormula, xors: &XorSystem) -> Result<(), OracleError> {
    if formula.num_vars() != xors.num_vars() {
        return Err(OracleError::VarMismatch {
            expected: formula.num_vars(),
            found: xors.num_vars(),
        });
    }
    Ok(())
}

/// True if some row is empty with right-hand side 1, i.e. `R` is empty.
pub(crate) fn trivially_empty(xors: &XorSystem) -> bool {
    xors.rows().iter().zip(xors.rhs()).any(|(r, &b)| r.is_empty() && b)
}
