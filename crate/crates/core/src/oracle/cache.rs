use super::{check_vars, trivially_empty, BoundedCountResult, CountingOracle, InternalEnumerator, OracleBudget, OracleError};
use crate::formula::CnfFormula;
use crate::xorsys::XorSystem;

/// Largest solution set the cache will hold.
pub const MAX_CACHED: usize = 1 << 24;

/// Enumerates the models of one formula once, then answers parity queries by
/// filtering the stored models.
///
/// With a projection set, the stored keys are the distinct restrictions and
/// every parity row must stay inside the projection set.
#[derive(Clone, Debug)]
pub struct SolutionCache {
    formula: CnfFormula,
    keys: Vec<u64>,
    allowed: u64,
}

impl SolutionCache {
    pub fn build(formula: &CnfFormula, enumerator: &InternalEnumerator) -> Result<Self, OracleError> {
        let mut keys = Vec::new();
        let mut overflow = false;
        let empty = XorSystem::empty(formula.num_vars());
        enumerator.scan(formula, &empty, None, |key, _| {
            if keys.len() >= MAX_CACHED {
                overflow = true;
                return false;
            }
            keys.push(key);
            true
        })?;
        if overflow {
            return Err(OracleError::CacheTooLarge(MAX_CACHED));
        }
        let allowed = formula
            .counting_vars()
            .iter()
            .fold(0u64, |m, &v| m | (1 << v));
        Ok(SolutionCache {
            formula: formula.clone(),
            keys,
            allowed,
        })
    }

    /// Number of (projected) models.
    pub fn model_count(&self) -> u64 {
        self.keys.len() as u64
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    /// Exact `|S ∩ R|` without a cap.
    pub fn count_in(&self, xors: &XorSystem) -> Result<u64, OracleError> {
        self.count_capped(xors, u64::MAX)
    }

    fn count_capped(&self, xors: &XorSystem, cap: u64) -> Result<u64, OracleError> {
        check_vars(&self.formula, xors)?;
        if trivially_empty(xors) {
            return Ok(0);
        }
        let masks = xors.row_masks().ok_or(OracleError::TooManyVars {
            max: 64,
            found: xors.num_vars(),
        })?;
        for m in &masks {
            let outside = m & !self.allowed;
            if outside != 0 {
                return Err(OracleError::RowOutsideProjection(outside.trailing_zeros() as usize));
            }
        }
        let target: Vec<u32> = xors.rhs().iter().map(|&b| b as u32).collect();
        let mut count = 0u64;
        for &key in &self.keys {
            if masks
                .iter()
                .zip(&target)
                .all(|(m, &b)| (m & key).count_ones() & 1 == b)
            {
                count += 1;
                if count >= cap {
                    break;
                }
            }
        }
        Ok(count)
    }
}

impl CountingOracle for SolutionCache {
    fn bounded_count(
        &self,
        formula: &CnfFormula,
        xors: &XorSystem,
        budget: &OracleBudget,
    ) -> Result<BoundedCountResult, OracleError> {
        if budget.cap == 0 {
            return Err(OracleError::ZeroCap);
        }
        if formula != &self.formula {
            return Err(OracleError::CacheMismatch);
        }
        let count = self.count_capped(xors, budget.cap)?;
        Ok(BoundedCountResult::from_count(count, budget.cap))
    }

    fn name(&self) -> &str {
        "internal"
    }
}
