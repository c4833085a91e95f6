use std::collections::HashSet;
use std::time::Instant;

use super::{check_vars, trivially_empty, BoundedCountResult, CountingOracle, OracleBudget, OracleError};
use crate::formula::CnfFormula;
use crate::xorsys::XorSystem;

/// Default variable limit for exhaustive enumeration.
pub const DEFAULT_MAX_VARS: usize = 30;

const CLOCK_CHECK_INTERVAL: u64 = 1 << 12;

/// Exhaustive enumerator over all `2^n` assignments.
///
/// Assignments are visited in Gray-code order so that each step flips one
/// variable; clause satisfaction counts and row parities are updated
/// incrementally.
#[derive(Clone, Debug)]
pub struct InternalEnumerator {
    max_vars: usize,
}

impl Default for InternalEnumerator {
    fn default() -> Self {
        InternalEnumerator {
            max_vars: DEFAULT_MAX_VARS,
        }
    }
}

impl InternalEnumerator {
    /// `max_vars` is clamped to 63.
    pub fn with_max_vars(max_vars: usize) -> Self {
        InternalEnumerator {
            max_vars: max_vars.min(63),
        }
    }

    pub fn max_vars(&self) -> usize {
        self.max_vars
    }

    /// Visits models of `F ∧ xors` (projected to distinct keys when a
    /// projection is set) until `visit` returns false or the deadline passes.
    /// Returns the number of distinct keys seen and whether the run finished.
    pub(crate) fn scan(
        &self,
        formula: &CnfFormula,
        xors: &XorSystem,
        deadline: Option<Instant>,
        mut visit: impl FnMut(u64, u64) -> bool,
    ) -> Result<(u64, bool), OracleError> {
        check_vars(formula, xors)?;
        let n = formula.num_vars();
        if n > self.max_vars {
            return Err(OracleError::TooManyVars {
                max: self.max_vars,
                found: n,
            });
        }
        if trivially_empty(xors) {
            return Ok((0, true));
        }

        let clauses = formula.clauses();
        let mut occurrences: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
        let mut true_count: Vec<u32> = Vec::with_capacity(clauses.len());
        let mut unsat = 0usize;
        for (c, clause) in clauses.iter().enumerate() {
            let mut k = 0;
            for lit in clause {
                occurrences[lit.var()].push((c, lit.is_positive()));
                if !lit.is_positive() {
                    k += 1;
                }
            }
            if k == 0 {
                unsat += 1;
            }
            true_count.push(k);
        }

        let words = xors.num_rows().div_ceil(64).max(1);
        let mut var_rows = vec![vec![0u64; words]; n];
        let mut target = vec![0u64; words];
        for (r, (row, &b)) in xors.rows().iter().zip(xors.rhs()).enumerate() {
            for &v in row {
                var_rows[v][r / 64] |= 1 << (r % 64);
            }
            if b {
                target[r / 64] |= 1 << (r % 64);
            }
        }
        let mut parity = vec![0u64; words];

        let proj_mask: Option<u64> = formula
            .projection()
            .map(|p| p.iter().fold(0u64, |m, &v| m | (1 << v)));
        let mut seen: HashSet<u64> = HashSet::new();
        let mut found = 0u64;
        let mut assignment = 0u64;
        let total: u64 = 1u64 << n;

        let mut step: u64 = 0;
        loop {
            if unsat == 0 && parity == target {
                let key = proj_mask.map_or(assignment, |m| assignment & m);
                let fresh = proj_mask.is_none() || seen.insert(key);
                if fresh {
                    found += 1;
                    if !visit(key, found) {
                        return Ok((found, true));
                    }
                }
            }
            step += 1;
            if step == total {
                return Ok((found, true));
            }
            if step.is_multiple_of(CLOCK_CHECK_INTERVAL) {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return Ok((found, false));
                    }
                }
            }
            let v = step.trailing_zeros() as usize;
            assignment ^= 1 << v;
            let value = assignment >> v & 1 == 1;
            for &(c, positive) in &occurrences[v] {
                if positive == value {
                    if true_count[c] == 0 {
                        unsat -= 1;
                    }
                    true_count[c] += 1;
                } else {
                    true_count[c] -= 1;
                    if true_count[c] == 0 {
                        unsat += 1;
                    }
                }
            }
            for (p, m) in parity.iter_mut().zip(&var_rows[v]) {
                *p ^= m;
            }
        }
    }
}

impl CountingOracle for InternalEnumerator {
    fn bounded_count(
        &self,
        formula: &CnfFormula,
        xors: &XorSystem,
        budget: &OracleBudget,
    ) -> Result<BoundedCountResult, OracleError> {
        if budget.cap == 0 {
            return Err(OracleError::ZeroCap);
        }
        let deadline = budget.wall_clock.map(|d| Instant::now() + d);
        let cap = budget.cap;
        let (found, finished) = self.scan(formula, xors, deadline, |_, k| k < cap)?;
        if !finished {
            return Ok(BoundedCountResult::TimedOut(found.min(cap)));
        }
        Ok(BoundedCountResult::from_count(found, cap))
    }

    fn name(&self) -> &str {
        "internal"
    }
}
