//! The guaranteed approximate counter and its nested-sample-set variant.
//!
//! Level `i` gets `t` random `i`-row systems. Each contributes
//! `Y = min(b, |S ∩ R|)`, and `A_i` is the mean of those values. The answer
//! is `max(L, A_j 2^j)` for the greatest level `j` whose average reaches
//! `(1 - delta)(4 / delta)`.

use std::collections::BTreeMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boost::{evaluate_boost_bound, BoostError, LdpcEnsemble};
use crate::formula::CnfFormula;
use crate::oracle::{BoundedCountResult, CountingOracle, OracleBudget, OracleError};
use crate::rng::{domain, Seed};
use crate::xorsys::{sample_nested, sample_over, Family, NestedSystem, NestingMode, XorError, XorSystem};

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("delta = {0} outside (0, 1/3]")]
    BadDelta(f64),
    #[error("theta = {0} outside (0, 1)")]
    BadTheta(f64),
    #[error("lower bound L = {0} must be a non-negative integer")]
    BadLowerBound(f64),
    #[error("boost bound B = {0} must be at least 1")]
    BadBoost(f64),
    #[error("s = {0} must be positive")]
    BadS(f64),
    #[error("no counted variables")]
    NoVariables,
    #[error("starting level {ell} exceeds n = {n}; L is larger than 2^n allows")]
    LevelAboveN { ell: usize, n: usize },
    #[error("iteration count must be positive")]
    ZeroIterations,
    #[error("{0} systems give no rigorous guarantee; nest dense rows or allow heuristic nesting")]
    NestingNotRigorous(&'static str),
    #[error("no Boost bound is known for the {0} family; supply one explicitly")]
    NoBoostBound(&'static str),
    #[error("Z increased from level {from} to level {to}")]
    ZNotMonotone { from: usize, to: usize },
    #[error("t = {0} is too large to run")]
    TooManyIterations(f64),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Xor(#[from] XorError),
    #[error(transparent)]
    Boost(#[from] BoostError),
}

const TOL: f64 = 1e-9;

/// Ceiling that ignores floating-point noise just above an integer
/// (`8 / (1/3)` evaluates to `24.000000000000004`).
pub fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= TOL * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Floor with the same tolerance.
pub fn floor_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= TOL * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

fn check_delta(delta: f64) -> Result<(), CounterError> {
    if !(delta > 0.0 && delta <= 1.0 / 3.0 + 1e-12) {
        return Err(CounterError::BadDelta(delta));
    }
    Ok(())
}

/// Derived constants of one counter run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Constants {
    pub ell: usize,
    pub xi: f64,
    pub b: u64,
    /// Iterations per level. Kept as a float so that plans with
    /// astronomically many iterations can still be reported.
    pub t: f64,
}

fn shared_constants(delta: f64, lower_bound: f64, boost: f64) -> Result<(usize, f64, f64), CounterError> {
    check_delta(delta)?;
    if !(lower_bound >= 0.0 && lower_bound.fract() == 0.0 && lower_bound.is_finite()) {
        return Err(CounterError::BadLowerBound(lower_bound));
    }
    if !(boost >= 1.0 && boost.is_finite()) {
        return Err(CounterError::BadBoost(boost));
    }
    let ell = if lower_bound == 0.0 {
        0
    } else {
        floor_tol((delta * lower_bound / 4.0).log2()).max(0.0) as usize
    };
    let xi = 8.0 / delta;
    let b = ceil_tol(xi + 2.0 * (xi + xi * xi * (boost - 1.0)));
    Ok((ell, xi, b))
}

/// Constants for independent sampling at every level.
pub fn compute_constants(delta: f64, theta: f64, lower_bound: f64, boost: f64, n: usize) -> Result<Constants, CounterError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(CounterError::BadTheta(theta));
    }
    if n == 0 {
        return Err(CounterError::NoVariables);
    }
    let (ell, xi, b) = shared_constants(delta, lower_bound, boost)?;
    let t = ceil_tol(2.0 * b * b / 9.0 * (2.0 * n as f64 / theta).ln());
    Ok(Constants { ell, xi, b: b as u64, t })
}

/// Constants for nested sample sets, `t = ceil((2 b^2 / 9) ln(5 s))`.
pub fn compute_nested_constants(delta: f64, lower_bound: f64, boost: f64, s: f64) -> Result<Constants, CounterError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(CounterError::BadS(s));
    }
    let (ell, xi, b) = shared_constants(delta, lower_bound, boost)?;
    let t = ceil_tol(2.0 * b * b / 9.0 * (5.0 * s).ln()).max(1.0);
    Ok(Constants { ell, xi, b: b as u64, t })
}

/// Threshold `(1 - delta)(4 / delta)` a level average must reach.
pub fn level_threshold(delta: f64) -> f64 {
    (1.0 - delta) * (4.0 / delta)
}

fn qualifies(a: f64, delta: f64) -> bool {
    a >= level_threshold(delta) - TOL
}

/// Greatest level whose average reaches the threshold, or `None`.
pub fn choose_level(averages: &BTreeMap<usize, f64>, delta: f64) -> Option<usize> {
    averages
        .iter()
        .rev()
        .find(|(_, &a)| qualifies(a, delta))
        .map(|(&i, _)| i)
}

/// How Boost is obtained for a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "value", rename_all = "lowercase")]
pub enum BoostPolicy {
    /// 1 for dense rows; the exact LDPC bound for LDPC rows.
    Auto,
    /// A value the caller vouches for.
    Value(f64),
    /// A guess, accepted for any family; the run is marked heuristic.
    Assume(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoostSource {
    PairwiseIndependent,
    Supplied,
    LdpcBound,
    Assumed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoostResolution {
    pub value: f64,
    pub source: BoostSource,
    pub rigorous: bool,
    /// Level that attains the maximum, for computed LDPC bounds.
    pub worst_level: Option<usize>,
}

/// Resolves `B >= max_{ell <= i <= n} Boost(D_i, 2^i)`.
///
/// For LDPC rows each level contributes the weight-enumerator bound at
/// `M = 2^i`; levels with fewer than `l` rows are sampled dense and
/// contribute 1. The result is rigorous only for the multigraph ensemble
/// when every level has even uniform degrees and verified monotone density.
pub fn resolve_boost(family: &Family, n: usize, ell: usize, policy: BoostPolicy) -> Result<BoostResolution, CounterError> {
    match policy {
        BoostPolicy::Value(v) | BoostPolicy::Assume(v) if !(v >= 1.0 && v.is_finite()) => Err(CounterError::BadBoost(v)),
        BoostPolicy::Assume(v) => Ok(BoostResolution {
            value: v,
            source: BoostSource::Assumed,
            rigorous: false,
            worst_level: None,
        }),
        BoostPolicy::Value(v) => match family {
            Family::Sparse { .. } | Family::Subcube => Err(CounterError::NoBoostBound(family.name())),
            _ => Ok(BoostResolution {
                value: v,
                source: BoostSource::Supplied,
                rigorous: true,
                worst_level: None,
            }),
        },
        BoostPolicy::Auto => match family {
            Family::Dense => Ok(BoostResolution {
                value: 1.0,
                source: BoostSource::PairwiseIndependent,
                rigorous: true,
                worst_level: None,
            }),
            Family::Ldpc(p) => {
                let l = p.column_degree;
                let levels: Vec<usize> = (ell.max(1)..=n).filter(|&i| !(l > i && !p.multigraph)).collect();
                let reports = levels
                    .par_iter()
                    .map(|&i| evaluate_boost_bound(&LdpcEnsemble::new(n, i, l)?, i as f64))
                    .collect::<Result<Vec<_>, BoostError>>()?;
                let mut value = 1.0;
                let mut worst = None;
                let mut rigorous = p.multigraph;
                for r in &reports {
                    rigorous &= r.monotonicity_verified && !r.approximate;
                    if r.bound > value {
                        value = r.bound;
                        worst = Some(r.i);
                    }
                }
                Ok(BoostResolution {
                    value,
                    source: BoostSource::LdpcBound,
                    rigorous,
                    worst_level: worst,
                })
            }
            _ => Err(CounterError::NoBoostBound(family.name())),
        },
    }
}

/// Settings of one counter run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CounterConfig {
    pub delta: f64,
    pub theta: f64,
    /// Known lower bound `L` on the model count (0 when none).
    pub lower_bound: f64,
    /// Upper bound `B` on Boost.
    pub boost: f64,
    /// Whether `boost` is a proven bound for `family`.
    pub boost_rigorous: bool,
    pub family: Family,
    pub nested: bool,
    pub nesting_mode: NestingMode,
    /// Nested-mode failure parameter; `1 / theta` when absent.
    pub s: Option<f64>,
    pub iterations_override: Option<usize>,
    pub per_call_timeout: Option<Duration>,
}

impl CounterConfig {
    /// Dense rows, `L = 0`, `B = 1`, independent levels.
    pub fn new(delta: f64, theta: f64) -> Self {
        CounterConfig {
            delta,
            theta,
            lower_bound: 0.0,
            boost: 1.0,
            boost_rigorous: true,
            family: Family::Dense,
            nested: false,
            nesting_mode: NestingMode::Rigorous,
            s: None,
            iterations_override: None,
            per_call_timeout: None,
        }
    }

    pub fn constants(&self, n: usize) -> Result<Constants, CounterError> {
        let mut c = if self.nested {
            if !(self.theta > 0.0 && self.theta < 1.0) {
                return Err(CounterError::BadTheta(self.theta));
            }
            compute_nested_constants(self.delta, self.lower_bound, self.boost, self.s.unwrap_or(1.0 / self.theta))?
        } else {
            compute_constants(self.delta, self.theta, self.lower_bound, self.boost, n)?
        };
        if let Some(t) = self.iterations_override {
            if t == 0 {
                return Err(CounterError::ZeroIterations);
            }
            c.t = t as f64;
        }
        Ok(c)
    }

    fn is_heuristic(&self) -> bool {
        !self.boost_rigorous || self.iterations_override.is_some() || (self.nested && self.nesting_mode == NestingMode::Heuristic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CountStatus {
    ExactSmall,
    Estimated,
    Degraded,
    Heuristic,
}

/// One evaluated level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelTrace {
    pub i: usize,
    pub z: u64,
    pub t: u64,
    pub average: f64,
    pub timeouts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CountEstimate {
    pub value: f64,
    pub chosen_level: Option<usize>,
    pub level_average: Option<f64>,
    pub status: CountStatus,
    pub degraded: bool,
    pub heuristic: bool,
    /// No level reached the threshold; the starting level was used.
    pub fallback: bool,
    pub oracle_calls: u64,
    pub seed: Seed,
    pub n: usize,
    pub constants: Option<Constants>,
    pub trace: Vec<LevelTrace>,
}

impl CountEstimate {
    fn status_from(degraded: bool, heuristic: bool) -> CountStatus {
        if degraded {
            CountStatus::Degraded
        } else if heuristic {
            CountStatus::Heuristic
        } else {
            CountStatus::Estimated
        }
    }
}

/// Sum of `min(b, |S ∩ R|)` over a batch of systems.
#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    z: u64,
    calls: u64,
    timeouts: u64,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally {
            z: self.z + o.z,
            calls: self.calls + o.calls,
            timeouts: self.timeouts + o.timeouts,
        }
    }
}

struct Run<'a> {
    formula: &'a CnfFormula,
    oracle: &'a dyn CountingOracle,
    budget: OracleBudget,
    b: u64,
}

impl Run<'_> {
    fn query(&self, xors: &XorSystem) -> Result<Tally, CounterError> {
        let r = self.oracle.bounded_count(self.formula, xors, &self.budget)?;
        Ok(Tally {
            z: r.conservative(self.b),
            calls: 1,
            timeouts: r.timed_out() as u64,
        })
    }

    fn tally<F>(&self, t: u64, system: F) -> Result<Tally, CounterError>
    where
        F: Fn(u64) -> Result<XorSystem, CounterError> + Sync,
    {
        (0..t)
            .into_par_iter()
            .map(|j| self.query(&system(j)?))
            .try_reduce(Tally::default, |a, b| Ok(a.add(b)))
    }
}

fn trace(i: usize, t: u64, tally: Tally) -> LevelTrace {
    LevelTrace {
        i,
        z: tally.z,
        t,
        average: tally.z as f64 / t as f64,
        timeouts: tally.timeouts,
    }
}

/// Largest `t` the counter will actually execute.
pub const MAX_RUNNABLE_T: f64 = 1e12;

/// Runs the counter.
///
/// Every random system is drawn from a stream keyed by the master seed and
/// its position (level and iteration, or nested column), so results do not
/// depend on thread scheduling.
pub fn approx_count(
    formula: &CnfFormula,
    config: &CounterConfig,
    oracle: &dyn CountingOracle,
    seed: Seed,
) -> Result<CountEstimate, CounterError> {
    check_delta(config.delta)?;
    if !(config.theta > 0.0 && config.theta < 1.0) {
        return Err(CounterError::BadTheta(config.theta));
    }
    let vars = formula.counting_vars();
    let n = vars.len();
    if n == 0 {
        return Err(CounterError::NoVariables);
    }
    if config.nested && config.nesting_mode == NestingMode::Rigorous && config.family != Family::Dense {
        return Err(CounterError::NestingNotRigorous(config.family.name()));
    }
    let heuristic = config.is_heuristic();

    let small = 4.0 / config.delta;
    let cap = ceil_tol(small) as u64;
    let first = oracle.bounded_count(
        formula,
        &XorSystem::empty(formula.num_vars()),
        &OracleBudget::new(cap)?.with_timeout(config.per_call_timeout),
    )?;
    let mut degraded = first.timed_out();
    if let BoundedCountResult::Exact(k) = first {
        return Ok(CountEstimate {
            value: k as f64,
            chosen_level: None,
            level_average: None,
            status: CountStatus::ExactSmall,
            degraded: false,
            heuristic: false,
            fallback: false,
            oracle_calls: 1,
            seed,
            n,
            constants: None,
            trace: Vec::new(),
        });
    }

    let constants = config.constants(n)?;
    if constants.ell > n {
        return Err(CounterError::LevelAboveN { ell: constants.ell, n });
    }
    if constants.t > MAX_RUNNABLE_T {
        return Err(CounterError::TooManyIterations(constants.t));
    }
    let t = constants.t as u64;
    let run = Run {
        formula,
        oracle,
        budget: OracleBudget::new(constants.b)?.with_timeout(config.per_call_timeout),
        b: constants.b,
    };

    let mut levels: BTreeMap<usize, LevelTrace> = BTreeMap::new();
    let mut calls = 1u64;
    if config.nested {
        let systems = nested_systems(formula, config, seed, t)?;
        let mut eval = |i: usize| -> Result<f64, CounterError> {
            if let Some(tr) = levels.get(&i) {
                return Ok(tr.average);
            }
            let tally = nested_tally(&run, &systems, i)?;
            calls += tally.calls;
            let tr = trace(i, t, tally);
            log::debug!("nested level {i}: Z = {}, A = {:.4}", tr.z, tr.average);
            levels.insert(i, tr);
            Ok(tr.average)
        };
        lazy_level_search(constants.ell, n, config.delta, &mut eval)?;
    } else {
        let base = seed.child(domain::COUNT);
        for i in constants.ell..=n {
            let tally = run.tally(t, |j| {
                let mut rng = base.derive(&[i as u64, j]).rng();
                Ok(sample_over(&config.family, formula.num_vars(), &vars, i, &mut rng)?)
            })?;
            calls += tally.calls;
            let tr = trace(i, t, tally);
            log::debug!("level {i}: Z = {}, A = {:.4}", tr.z, tr.average);
            levels.insert(i, tr);
        }
    }

    degraded |= levels.values().any(|tr| tr.timeouts > 0);
    if config.nested && !degraded {
        check_monotone(&levels)?;
    }
    let averages: BTreeMap<usize, f64> = levels.iter().map(|(&i, tr)| (i, tr.average)).collect();
    let (j, fallback) = match choose_level(&averages, config.delta) {
        Some(j) => (j, false),
        None => (constants.ell, true),
    };
    degraded |= fallback;
    let a = averages[&j];
    let value = config.lower_bound.max(a * 2f64.powi(j as i32));
    Ok(CountEstimate {
        value,
        chosen_level: Some(j),
        level_average: Some(a),
        status: CountEstimate::status_from(degraded, heuristic),
        degraded,
        heuristic,
        fallback,
        oracle_calls: calls,
        seed,
        n,
        constants: Some(constants),
        trace: levels.into_values().collect(),
    })
}

/// The `t` nested systems of a run, over the formula's variable space.
pub fn nested_systems(formula: &CnfFormula, config: &CounterConfig, seed: Seed, t: u64) -> Result<Vec<NestedSystem>, CounterError> {
    let vars = formula.counting_vars();
    let num_vars = formula.num_vars();
    let identity = vars.len() == num_vars;
    let base = seed.child(domain::NESTED);
    (0..t)
        .into_par_iter()
        .map(|j| {
            let mut rng = base.child(j).rng();
            let sys = sample_nested(&config.family, vars.len(), config.nesting_mode, &mut rng)?;
            Ok(if identity { sys } else { sys.remap(num_vars, &vars)? })
        })
        .collect()
}

fn nested_tally(run: &Run<'_>, systems: &[NestedSystem], i: usize) -> Result<Tally, CounterError> {
    run.tally(systems.len() as u64, |j| Ok(systems[j as usize].prefix(i)))
}

fn check_monotone(levels: &BTreeMap<usize, LevelTrace>) -> Result<(), CounterError> {
    let v: Vec<&LevelTrace> = levels.values().collect();
    for w in v.windows(2) {
        if w[1].z > w[0].z {
            return Err(CounterError::ZNotMonotone { from: w[0].i, to: w[1].i });
        }
    }
    Ok(())
}

/// Finds the greatest qualifying level in `[ell, n]` assuming averages are
/// non-increasing in the level: probes `ell, ell+1, ell+2, ell+4, ...` until
/// one fails, then bisects the last bracket. Returns `None` if `ell`
/// itself fails.
pub fn lazy_level_search<F>(ell: usize, n: usize, delta: f64, eval: &mut F) -> Result<Option<usize>, CounterError>
where
    F: FnMut(usize) -> Result<f64, CounterError>,
{
    if !qualifies(eval(ell)?, delta) {
        return Ok(None);
    }
    let mut lo = ell;
    let mut hi = n + 1;
    let mut step = 1;
    while ell + step <= n {
        let cand = ell + step;
        if qualifies(eval(cand)?, delta) {
            lo = cand;
            step *= 2;
        } else {
            hi = cand;
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if qualifies(eval(mid)?, delta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Every level's trace over the given nested systems (for checking the
/// lazy search against a full scan).
pub fn nested_linear_scan(
    formula: &CnfFormula,
    systems: &[NestedSystem],
    oracle: &dyn CountingOracle,
    b: u64,
    ell: usize,
) -> Result<Vec<LevelTrace>, CounterError> {
    let run = Run {
        formula,
        oracle,
        budget: OracleBudget::new(b)?,
        b,
    };
    let n = formula.counting_vars().len();
    let t = systems.len() as u64;
    (ell..=n).map(|i| Ok(trace(i, t, nested_tally(&run, systems, i)?))).collect()
}
