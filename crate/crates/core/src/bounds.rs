//! One-sided lower bounds on the model count.
//!
//! [`LowerBoundTester::decide`] answers "is `|S| >= 2^i`?" with either a
//! confident yes or "don't know". Only yes answers can be wrong, and only
//! with probability at most `theta`, whatever `i`-uniform family is used.
//! [`augment_lower_bound`] improves a known lower bound with a
//! doubling-then-binary search over cheap single-sample probes, confirming
//! the final answer with full-strength tests.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::CnfFormula;
use crate::oracle::{CountingOracle, OracleBudget, OracleError};
use crate::rng::{domain, Seed};
use crate::xorsys::{Family, XorError};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("theta must lie in (0, 1), got {0}")]
    BadTheta(f64),
    #[error("level {i} exceeds the {n} counted variables")]
    LevelAboveN { i: usize, n: usize },
    #[error("invalid constants: need 1 < ratio <= cap, got cap {cap} ratio {ratio}")]
    BadConstants { cap: u64, ratio: f64 },
    #[error("iteration count must be positive")]
    ZeroIterations,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Xor(#[from] XorError),
}

/// The cap on each sample (4) and the yes-threshold on the mean (2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LowerBoundConstants {
    pub cap: u64,
    pub ratio: f64,
}

impl Default for LowerBoundConstants {
    fn default() -> Self {
        LowerBoundConstants { cap: 4, ratio: 2.0 }
    }
}

impl LowerBoundConstants {
    pub fn new(cap: u64, ratio: f64) -> Result<Self, BoundsError> {
        if !(ratio > 1.0 && ratio <= cap as f64) {
            return Err(BoundsError::BadConstants { cap, ratio });
        }
        Ok(LowerBoundConstants { cap, ratio })
    }

    /// Iterations so that a wrong yes has probability at most `theta`.
    ///
    /// When `|S| < 2^i` the mean of the capped samples is below 1, so a yes
    /// needs a deviation of `ratio - 1`; Hoeffding's inequality for values
    /// in `[0, cap]` gives `t >= cap^2 / (2 (ratio - 1)^2) * ln(1/theta)`.
    /// The defaults give `ceil(8 ln(1/theta))`.
    pub fn iterations(&self, theta: f64) -> Result<usize, BoundsError> {
        check_theta(theta)?;
        let c = self.cap as f64;
        let w = self.ratio - 1.0;
        let factor = c * c / (2.0 * w * w);
        Ok((factor * (1.0 / theta).ln()).ceil().max(1.0) as usize)
    }

    /// Whether a running total already guarantees a yes.
    pub fn reached(&self, z: u64, t: usize) -> bool {
        z as f64 >= self.ratio * t as f64
    }
}

fn check_theta(theta: f64) -> Result<(), BoundsError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(BoundsError::BadTheta(theta));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Yes,
    DontKnow,
}

/// Answer plus the per-iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LowerBoundVerdict {
    pub i: usize,
    pub verdict: Verdict,
    /// Capped sample values, in iteration order.
    pub ys: Vec<u64>,
    pub z: u64,
    /// Planned iterations.
    pub t: usize,
    /// Iterations actually run (fewer after an early exit).
    pub iterations: usize,
    /// Some query timed out and contributed only its found-so-far count.
    pub degraded: bool,
    pub seed: Seed,
}

/// Runs the accumulation loop over a stream of capped samples: stops after
/// `t` samples or once the total reaches `ratio * t`.
pub fn accumulate(
    constants: &LowerBoundConstants,
    t: usize,
    mut sample: impl FnMut(usize) -> Result<u64, BoundsError>,
) -> Result<(Verdict, Vec<u64>, u64), BoundsError> {
    let mut ys = Vec::with_capacity(t);
    let mut z = 0u64;
    let mut j = 0;
    while j < t && !constants.reached(z, t) {
        let y = sample(j)?.min(constants.cap);
        ys.push(y);
        z += y;
        j += 1;
    }
    let verdict = if constants.reached(z, t) {
        Verdict::Yes
    } else {
        Verdict::DontKnow
    };
    Ok((verdict, ys, z))
}

/// Bundles everything a lower-bound test needs besides `i` and `theta`.
pub struct LowerBoundTester<'a> {
    pub formula: &'a CnfFormula,
    pub family: Family,
    pub oracle: &'a dyn CountingOracle,
    pub constants: LowerBoundConstants,
    pub per_call_timeout: Option<Duration>,
}

impl<'a> LowerBoundTester<'a> {
    pub fn new(formula: &'a CnfFormula, family: Family, oracle: &'a dyn CountingOracle) -> Self {
        LowerBoundTester {
            formula,
            family,
            oracle,
            constants: LowerBoundConstants::default(),
            per_call_timeout: None,
        }
    }

    /// Number of counted variables (projection size, if any).
    pub fn n(&self) -> usize {
        self.formula.counting_vars().len()
    }

    /// Decides whether `|S| >= 2^i`. Iteration `j` draws its system from
    /// `seed.child(j)`.
    pub fn decide(
        &self,
        i: usize,
        theta: f64,
        iterations_override: Option<usize>,
        seed: Seed,
    ) -> Result<LowerBoundVerdict, BoundsError> {
        check_theta(theta)?;
        let n = self.n();
        if i > n {
            return Err(BoundsError::LevelAboveN { i, n });
        }
        let t = match iterations_override {
            Some(0) => return Err(BoundsError::ZeroIterations),
            Some(t) => t,
            None => self.constants.iterations(theta)?,
        };
        let budget = OracleBudget::new(self.constants.cap)?.with_timeout(self.per_call_timeout);
        let vars = self.formula.counting_vars();
        let mut degraded = false;
        let (verdict, ys, z) = accumulate(&self.constants, t, |j| {
            let mut rng = seed.child(j as u64).rng();
            let xors = crate::xorsys::sample_over(&self.family, self.formula.num_vars(), &vars, i, &mut rng)?;
            let r = self.oracle.bounded_count(self.formula, &xors, &budget)?;
            degraded |= r.timed_out();
            Ok(r.conservative(self.constants.cap))
        })?;
        Ok(LowerBoundVerdict {
            i,
            verdict,
            iterations: ys.len(),
            ys,
            z,
            t,
            degraded,
            seed,
        })
    }
}

/// A single threshold probe used by the search.
pub trait ThresholdProbe {
    /// Runs the test at level `i` with the given number of iterations.
    fn probe(&mut self, i: usize, iterations: usize, probe_index: u64) -> Result<Verdict, BoundsError>;
}

impl ThresholdProbe for (&LowerBoundTester<'_>, Seed) {
    fn probe(&mut self, i: usize, iterations: usize, probe_index: u64) -> Result<Verdict, BoundsError> {
        let seed = self.1.derive(&[domain::AUGMENT, probe_index]);
        Ok(self.0.decide(i, 0.5, Some(iterations), seed)?.verdict)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Probe {
    pub i: usize,
    pub iterations: usize,
    pub verdict: Verdict,
    /// True when the level was above `n` and answered without a test.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AugmentOutcome {
    pub ell: usize,
    pub value: usize,
    pub probes: Vec<Probe>,
    /// Iterations used by each confirming test.
    pub confirm_iterations: usize,
}

/// Iterations of each confirming test: `ceil(8 ln(ceil(log2 n) / theta))`
/// with the default constants (the log term floored at 1).
pub fn confirm_iterations(constants: &LowerBoundConstants, n: usize, theta: f64) -> Result<usize, BoundsError> {
    check_theta(theta)?;
    let logn = (n.max(1) as f64).log2().ceil().max(1.0);
    let c = constants.cap as f64;
    let w = constants.ratio - 1.0;
    Ok((c * c / (2.0 * w * w) * (logn / theta).ln()).ceil().max(1.0) as usize)
}

/// Improves a lower bound `ell <= log2 |S|`. The result exceeds `log2 |S|`
/// with probability at most `theta`. Levels above `n` answer "don't know".
pub fn augment_lower_bound<P: ThresholdProbe>(
    probe: &mut P,
    n: usize,
    ell: usize,
    theta: f64,
    constants: &LowerBoundConstants,
) -> Result<AugmentOutcome, BoundsError> {
    let t_full = confirm_iterations(constants, n, theta)?;
    let mut probes = Vec::new();
    let mut index = 0u64;
    let mut run = |i: usize, iterations: usize, probes: &mut Vec<Probe>| -> Result<Verdict, BoundsError> {
        let (verdict, skipped) = if i > n {
            (Verdict::DontKnow, true)
        } else {
            index += 1;
            (probe.probe(i, iterations, index)?, false)
        };
        probes.push(Probe {
            i,
            iterations,
            verdict,
            skipped,
        });
        Ok(verdict)
    };

    let mut j = 0u32;
    while run(ell + (1usize << j), 1, &mut probes)? == Verdict::Yes {
        j += 1;
    }
    if j == 0 {
        return Ok(AugmentOutcome {
            ell,
            value: ell,
            probes,
            confirm_iterations: t_full,
        });
    }

    let mut hi = ell + (1usize << j) - 1;
    let mut lo = ell + (1usize << (j - 1));
    while lo < hi {
        let m = lo + (hi - lo).div_ceil(2);
        if run(m, 1, &mut probes)? == Verdict::Yes {
            lo = m;
        } else {
            hi = m - 1;
        }
    }

    let mut i = lo as i64;
    let mut step = 1u32;
    loop {
        i -= 1i64 << step;
        step += 1;
        if i <= ell as i64 {
            break;
        }
        if run(i as usize, t_full, &mut probes)? == Verdict::Yes {
            break;
        }
    }
    Ok(AugmentOutcome {
        ell,
        value: (ell as i64).max(i) as usize,
        probes,
        confirm_iterations: t_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_dimacs;
    use crate::oracle::InternalEnumerator;
    use proptest::prelude::*;

    struct Stub<F: FnMut(usize) -> Verdict>(F);

    impl<F: FnMut(usize) -> Verdict> ThresholdProbe for Stub<F> {
        fn probe(&mut self, i: usize, _: usize, _: u64) -> Result<Verdict, BoundsError> {
            Ok((self.0)(i))
        }
    }

    fn yes_if(cond: bool) -> Verdict {
        if cond {
            Verdict::Yes
        } else {
            Verdict::DontKnow
        }
    }

    #[test]
    fn default_iterations() {
        assert_eq!(LowerBoundConstants::default().iterations(0.05).unwrap(), 24);
        assert!(LowerBoundConstants::default().iterations(1.0).is_err());
        assert!(LowerBoundConstants::new(4, 5.0).is_err());
        assert!(LowerBoundConstants::new(4, 1.0).is_err());
        // Doubling the cap at a fixed ratio quadruples the iteration factor.
        let c = LowerBoundConstants::new(8, 2.0).unwrap();
        assert_eq!(c.iterations(0.05).unwrap(), (32.0 * 20f64.ln()).ceil() as usize);
    }

    #[test]
    fn stub_yes_up_to_ten() {
        let mut stub = Stub(|i| yes_if(i <= 10));
        let out = augment_lower_bound(&mut stub, 40, 0, 0.05, &LowerBoundConstants::default()).unwrap();
        assert_eq!(out.value, 8);
        let seq: Vec<usize> = out.probes.iter().map(|p| p.i).collect();
        assert_eq!(seq, vec![1, 2, 4, 8, 16, 12, 10, 11, 8]);
    }

    #[test]
    fn stub_always_dont_know() {
        let mut stub = Stub(|_| Verdict::DontKnow);
        let out = augment_lower_bound(&mut stub, 40, 5, 0.05, &LowerBoundConstants::default()).unwrap();
        assert_eq!(out.value, 5);
        assert_eq!(out.probes.len(), 1);
    }

    #[test]
    fn stub_always_yes_stays_below_n() {
        let mut seen = Vec::new();
        let mut stub = Stub(|i| {
            seen.push(i);
            Verdict::Yes
        });
        let out = augment_lower_bound(&mut stub, 8, 0, 0.05, &LowerBoundConstants::default()).unwrap();
        assert!(out.value <= 8);
        assert!(seen.iter().all(|&i| i <= 8));
        // 1,2,4,8 yes; 16 skipped; binary search in [8,15] only hits skipped levels.
        assert_eq!(out.value, 6);
    }

    #[test]
    fn unsat_never_yes() {
        let f = parse_dimacs("p cnf 3 2\n1 0\n-1 0").unwrap();
        let e = InternalEnumerator::default();
        let tester = LowerBoundTester::new(&f, Family::Dense, &e);
        for i in 0..=3 {
            let v = tester.decide(i, 0.05, None, Seed::new(i as u64)).unwrap();
            assert_eq!(v.verdict, Verdict::DontKnow);
            assert_eq!(v.z, 0);
            assert_eq!(v.t, 24);
        }
    }

    #[test]
    fn level_zero_many_models_yes_early() {
        let f = parse_dimacs("p cnf 4 1\n1 2 0").unwrap();
        let e = InternalEnumerator::default();
        let tester = LowerBoundTester::new(&f, Family::Dense, &e);
        let v = tester.decide(0, 0.05, None, Seed::new(0)).unwrap();
        assert_eq!(v.verdict, Verdict::Yes);
        assert_eq!(v.z, 48);
        assert_eq!(v.iterations, 12);
        assert!(matches!(
            tester.decide(5, 0.05, None, Seed::new(0)),
            Err(BoundsError::LevelAboveN { i: 5, n: 4 })
        ));
    }

    proptest! {
        #[test]
        fn lowering_samples_never_creates_yes(ys in prop::collection::vec(0u64..=4, 1..40), k in 0usize..40, d in 1u64..=4) {
            let c = LowerBoundConstants::default();
            let t = ys.len();
            let (base, _, _) = accumulate(&c, t, |j| Ok(ys[j])).unwrap();
            let mut lowered = ys.clone();
            let k = k % t;
            lowered[k] = lowered[k].saturating_sub(d);
            let (after, _, _) = accumulate(&c, t, |j| Ok(lowered[j])).unwrap();
            if base == Verdict::DontKnow {
                prop_assert_eq!(after, Verdict::DontKnow);
            }
        }

        #[test]
        fn augment_never_below_ell(ell in 0usize..20, cut in 0usize..40, n in 1usize..40) {
            let mut stub = Stub(|i| yes_if(i <= cut));
            let out = augment_lower_bound(&mut stub, n, ell, 0.1, &LowerBoundConstants::default()).unwrap();
            prop_assert!(out.value >= ell);
        }
    }
}
