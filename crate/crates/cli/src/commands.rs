use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::Result;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use xorcount_core::boost::{self, BoostBoundReport};
use xorcount_core::bounds::{augment_lower_bound, LowerBoundTester};
use xorcount_core::counter::{self, BoostPolicy, CountStatus, CounterConfig};
use xorcount_core::oracle::{
    CountingOracle, ExternalSolver, InternalEnumerator, SolutionCache, SolverCommand, XorEncoding,
};
use xorcount_core::rng::{domain, Seed};
use xorcount_core::xorsys::{sample_system, Family, LdpcParams, NestingMode};
use xorcount_core::{parse_dimacs, xor_lines, CnfFormula};

use crate::args::*;

/// Marks errors caused by the command line rather than by a computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// What a command produced.
pub struct Outcome {
    pub result: Value,
    pub human: String,
    pub degraded: bool,
    pub heuristic: bool,
}

/// Wall-clock per phase, in insertion order.
#[derive(Default)]
pub struct Timings(pub Vec<(String, f64)>);

impl Timings {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((phase.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.0.iter().cloned().collect()
    }
}

pub struct Ctx<'a> {
    pub global: &'a GlobalArgs,
    pub seed: Seed,
    pub timings: Timings,
}

fn family_of(a: &FamilyArgs) -> Result<Family> {
    let f = match a.family {
        FamilyKind::Dense => Family::Dense,
        FamilyKind::Sparse => Family::sparse(a.p).map_err(|e| usage(e.to_string()))?,
        FamilyKind::Subcube => Family::Subcube,
        FamilyKind::Ldpc => {
            if a.l == 0 || (a.l < 3 && !a.allow_low_degree) {
                return Err(usage(format!(
                    "ldpc column degree {} is below 3; pass --allow-low-degree to use it anyway",
                    a.l
                )));
            }
            Family::Ldpc(LdpcParams {
                column_degree: a.l,
                allow_low_degree: a.allow_low_degree,
                multigraph: a.multigraph,
            })
        }
    };
    Ok(f)
}

fn read_formula(path: &Path) -> Result<CnfFormula> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_dimacs(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

const DEFAULT_EXTERNAL_TIMEOUT: f64 = 600.0;

fn per_call_timeout(g: &GlobalArgs) -> Result<Option<Duration>> {
    let secs = match (g.per_call_timeout, g.oracle) {
        (Some(s), _) => Some(s),
        (None, OracleKind::External) => Some(DEFAULT_EXTERNAL_TIMEOUT),
        (None, OracleKind::Internal) => None,
    };
    match secs {
        Some(s) if !(s > 0.0 && s.is_finite()) => Err(usage(format!("--per-call-timeout must be positive, got {s}"))),
        Some(s) => Ok(Some(Duration::from_secs_f64(s))),
        None => Ok(None),
    }
}

fn solver_command(spec: Option<&str>) -> SolverCommand {
    match spec {
        None => SolverCommand::from_env(),
        Some(s) => {
            let mut parts = s.split_whitespace();
            let program = parts.next().unwrap_or_default().to_string();
            let args: Vec<String> = parts.map(str::to_string).collect();
            if args.is_empty() {
                SolverCommand::cryptominisat(program)
            } else {
                SolverCommand::new(program, args)
            }
        }
    }
}

/// Builds the oracle. The internal backend enumerates the formula once and
/// answers every parity query from the stored models.
fn build_oracle(g: &GlobalArgs, formula: &CnfFormula) -> Result<Box<dyn CountingOracle>> {
    match g.oracle {
        OracleKind::Internal => {
            if g.per_call_timeout.is_some() {
                // Only the enumerator watches the clock.
                return Ok(Box::new(InternalEnumerator::default()));
            }
            Ok(Box::new(SolutionCache::build(formula, &InternalEnumerator::default())?))
        }
        OracleKind::External => {
            let encoding = match g.xor_encoding {
                EncodingKind::Native => XorEncoding::Native,
                EncodingKind::Chunked => {
                    if g.chunk_size < 3 {
                        return Err(usage(format!("--chunk-size must be at least 3, got {}", g.chunk_size)));
                    }
                    XorEncoding::Chunked {
                        chunk_size: g.chunk_size,
                    }
                }
            };
            Ok(Box::new(ExternalSolver::new(solver_command(g.solver_cmd.as_deref()), encoding)))
        }
    }
}

fn boost_policy(a: &CountArgs, family: &Family) -> Result<BoostPolicy> {
    if let Some(v) = a.assume_boost {
        return Ok(BoostPolicy::Assume(v));
    }
    let policy = if a.boost.eq_ignore_ascii_case("auto") {
        BoostPolicy::Auto
    } else {
        let v: f64 = a
            .boost
            .parse()
            .map_err(|_| usage(format!("--boost expects `auto` or a number, got `{}`", a.boost)))?;
        BoostPolicy::Value(v)
    };
    if matches!(family, Family::Sparse { .. } | Family::Subcube) {
        return Err(usage(format!(
            "no Boost bound is available for the {} family; pass --assume-boost VALUE to run heuristically",
            family.name()
        )));
    }
    Ok(policy)
}

pub fn count(a: &CountArgs, ctx: &mut Ctx<'_>) -> Result<Outcome> {
    let family = family_of(&a.family)?;
    if a.nested && family != Family::Dense && !a.heuristic_nested {
        return Err(usage(format!(
            "--nested with the {} family needs --heuristic-nested",
            family.name()
        )));
    }
    let formula = ctx.timings.time("parse", || read_formula(&a.cnf))?;
    let n = formula.counting_vars().len();
    let policy = boost_policy(a, &family)?;

    let mut config = CounterConfig::new(a.delta, a.theta);
    config.lower_bound = a.lower_bound;
    config.family = family;
    config.nested = a.nested;
    config.nesting_mode = if a.nested && (a.heuristic_nested || family != Family::Dense) {
        NestingMode::Heuristic
    } else {
        NestingMode::Rigorous
    };
    config.s = a.s;
    config.iterations_override = a.iterations;
    config.per_call_timeout = per_call_timeout(ctx.global)?;

    // The starting level does not depend on B.
    let ell = config.constants(n).map_err(|e| usage(e.to_string()))?.ell;
    let resolution = ctx
        .timings
        .time("boost", || counter::resolve_boost(&family, n, ell, policy))
        .map_err(|e| usage(e.to_string()))?;
    config.boost = resolution.value;
    config.boost_rigorous = resolution.rigorous;
    let constants = config.constants(n).map_err(|e| usage(e.to_string()))?;

    if a.plan {
        let result = json!({
            "plan": true,
            "n": n,
            "constants": constants,
            "boost": resolution,
            "threshold": counter::level_threshold(a.delta),
            "levels": n + 1 - constants.ell.min(n + 1),
        });
        let human = format!(
            "plan: n = {n}, B = {} ({:?}), ell = {}, b = {}, t = {}",
            resolution.value, resolution.source, constants.ell, constants.b, constants.t
        );
        return Ok(Outcome {
            result,
            human,
            degraded: false,
            heuristic: !resolution.rigorous,
        });
    }

    let oracle = ctx.timings.time("oracle-setup", || build_oracle(ctx.global, &formula))?;
    let seed = ctx.seed;
    let est = ctx
        .timings
        .time("count", || counter::approx_count(&formula, &config, oracle.as_ref(), seed))?;

    let mut human = match est.status {
        CountStatus::ExactSmall => format!("exact count: {}", est.value),
        _ => format!(
            "estimate: {} (level {}, average {:.4}, {} oracle calls)",
            est.value,
            est.chosen_level.unwrap_or(0),
            est.level_average.unwrap_or(0.0),
            est.oracle_calls
        ),
    };
    let _ = write!(human, "\nstatus: {:?}", est.status);
    if est.fallback {
        human.push_str("\nno level reached the threshold; the starting level was used");
    }
    let result = json!({
        "estimate": est,
        "boost": resolution,
        "threshold": counter::level_threshold(a.delta),
        "oracle": oracle.name(),
    });
    Ok(Outcome {
        result,
        human,
        degraded: est.degraded,
        heuristic: est.heuristic,
    })
}

pub fn lower(a: &LowerArgs, ctx: &mut Ctx<'_>) -> Result<Outcome> {
    let family = family_of(&a.family)?;
    let formula = ctx.timings.time("parse", || read_formula(&a.cnf))?;
    let oracle = build_oracle(ctx.global, &formula)?;
    let mut tester = LowerBoundTester::new(&formula, family, oracle.as_ref());
    tester.per_call_timeout = per_call_timeout(ctx.global)?;
    let seed = ctx.seed;
    if a.augment {
        if a.ell > tester.n() {
            return Err(usage(format!("--ell {} exceeds the {} counted variables", a.ell, tester.n())));
        }
        let n = tester.n();
        let out = ctx.timings.time("augment", || {
            augment_lower_bound(&mut (&tester, seed), n, a.ell, a.theta, &tester.constants)
        })?;
        let human = format!(
            "lower bound: |S| >= 2^{} (from {}, {} probes)",
            out.value,
            out.ell,
            out.probes.iter().filter(|p| !p.skipped).count()
        );
        return Ok(Outcome {
            result: serde_json::to_value(&out)?,
            human,
            degraded: false,
            heuristic: false,
        });
    }
    let i = a.i.expect("clap requires --i without --augment");
    if i > tester.n() {
        return Err(usage(format!("--i {i} exceeds the {} counted variables", tester.n())));
    }
    let v = ctx.timings.time("decide", || {
        tester.decide(i, a.theta, a.iterations, seed.child(domain::LOWER))
    })?;
    let human = format!("|S| >= 2^{}: {:?} (Z = {}, t = {}, {} iterations run)", v.i, v.verdict, v.z, v.t, v.iterations);
    Ok(Outcome {
        degraded: v.degraded,
        heuristic: a.iterations.is_some(),
        result: serde_json::to_value(&v)?,
        human,
    })
}

fn parse_rate(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once('/').ok_or_else(|| usage(format!("--rate expects num/den, got `{s}`")))?;
    let num: usize = a.trim().parse().map_err(|_| usage(format!("bad rate numerator `{a}`")))?;
    let den: usize = b.trim().parse().map_err(|_| usage(format!("bad rate denominator `{b}`")))?;
    if num == 0 || den == 0 || num > den {
        return Err(usage(format!("rate {num}/{den} must lie in (0, 1]")));
    }
    Ok((num, den))
}

/// `N`, `A:B:STEP` (inclusive) or `N1,N2,...`.
pub fn parse_n_values(s: &str) -> Result<Vec<usize>> {
    let bad = || usage(format!("--n expects N, A:B:STEP or a comma list, got `{s}`"));
    if s.contains(':') {
        let parts: Vec<usize> = s.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let [a, b, step] = parts[..] else { return Err(bad()) };
        if step == 0 || a > b {
            return Err(bad());
        }
        return Ok((a..=b).step_by(step).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

pub fn boost_table(a: &BoostTableArgs, ctx: &mut Ctx<'_>) -> Result<Outcome> {
    let (num, den) = parse_rate(&a.rate)?;
    let ns = parse_n_values(&a.n)?;
    if a.l == 0 {
        return Err(usage("--l must be positive"));
    }
    let rows: Vec<BoostBoundReport> = ctx
        .timings
        .time("table", || boost::boost_table(a.l, num, den, &ns))
        .map_err(|e| usage(e.to_string()))?;
    let mut human = format!("{:>5} {:>4} {:>3} {:>3} {:>14} {:>6} {:>9}\n", "n", "i", "r", "z", "2^i B(z)", "ceil", "monotone");
    for r in &rows {
        let _ = writeln!(
            human,
            "{:>5} {:>4} {:>3} {:>3} {:>14.4} {:>6} {:>9}",
            r.n,
            r.i,
            r.r.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
            r.z,
            r.bound,
            r.bound_ceil,
            r.monotonicity_verified
        );
    }
    Ok(Outcome {
        result: json!({ "l": a.l, "rate": format!("{num}/{den}"), "rows": rows }),
        human: human.trim_end().to_string(),
        degraded: false,
        heuristic: rows.iter().any(|r| r.approximate),
    })
}

fn random_witnesses(n: usize, m: usize, seed: Seed) -> Result<Vec<u64>> {
    if n >= 64 || (m as u128) > (1u128 << n) {
        return Err(usage(format!("cannot draw {m} distinct witnesses over {n} variables")));
    }
    let mut rng = seed.child(domain::BOOST_MC).child(u64::MAX).rng();
    let mut seen = std::collections::BTreeSet::new();
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    while seen.len() < m {
        seen.insert(rng.gen::<u64>() & mask);
    }
    Ok(seen.into_iter().collect())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BoostEstimateReport {
    n: usize,
    i: usize,
    family: Family,
    witnesses: Vec<u64>,
    mode: &'static str,
    mean: f64,
    std_error: f64,
    trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_fraction: Option<String>,
}

pub fn estimate_boost(a: &EstimateBoostArgs, ctx: &mut Ctx<'_>) -> Result<Outcome> {
    let family = family_of(&a.family)?;
    let witnesses = match a.random_witnesses {
        Some(m) => random_witnesses(a.n, m, ctx.seed)?,
        None => a.witnesses.clone(),
    };
    let report = if a.exact {
        if family != Family::Dense {
            return Err(usage("--exact enumerates dense systems only"));
        }
        let v = ctx
            .timings
            .time("exact", || boost::exact_dense_boost(a.n, a.i, &witnesses))
            .map_err(|e| usage(e.to_string()))?;
        BoostEstimateReport {
            n: a.n,
            i: a.i,
            family,
            witnesses,
            mode: "exact",
            mean: boost::ratio_to_f64(&v),
            std_error: 0.0,
            trials: 0,
            exact_fraction: Some(format!("{}/{}", v.numer(), v.denom())),
        }
    } else {
        let seed = ctx.seed;
        let e = ctx
            .timings
            .time("sample", || boost::estimate_boost_mc(&family, a.n, a.i, &witnesses, a.trials, seed))
            .map_err(|e| usage(e.to_string()))?;
        BoostEstimateReport {
            n: a.n,
            i: a.i,
            family,
            witnesses,
            mode: "monte-carlo",
            mean: e.mean,
            std_error: e.std_error,
            trials: e.trials,
            exact_fraction: None,
        }
    };
    let human = if a.exact {
        format!("Boost over {} witnesses: {} (exact)", report.witnesses.len(), report.mean)
    } else {
        format!(
            "Boost over {} witnesses: {:.4} +- {:.4} ({} trials)",
            report.witnesses.len(),
            report.mean,
            report.std_error,
            report.trials
        )
    };
    Ok(Outcome {
        result: serde_json::to_value(&report)?,
        human,
        degraded: false,
        heuristic: false,
    })
}

pub fn gen_xor(a: &GenXorArgs, ctx: &mut Ctx<'_>) -> Result<Outcome> {
    let family = family_of(&a.family)?;
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let mut rng = ctx.seed.rng();
    let sys = sample_system(&family.effective(a.i), a.n, a.i, &mut rng).map_err(|e| usage(e.to_string()))?;
    let lines = xor_lines(&sys);
    let rows: Vec<Vec<usize>> = sys.rows().iter().map(|r| r.iter().map(|v| v + 1).collect()).collect();
    let result = json!({
        "n": a.n,
        "i": a.i,
        "family": family,
        "sampledFamily": family.effective(a.i),
        "rows": rows,
        "rhs": sys.rhs(),
        "rowDegrees": sys.row_degrees(),
        "columnDegrees": sys.column_degrees(),
        "lines": lines,
    });
    Ok(Outcome {
        result,
        human: lines.join("\n"),
        degraded: false,
        heuristic: false,
    })
}

/// Exit status for an error: 2 when an oracle failed, 1 otherwise.
pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    use xorcount_core::bounds::BoundsError;
    use xorcount_core::counter::CounterError;
    use xorcount_core::oracle::OracleError;
    for cause in e.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if cause.downcast_ref::<OracleError>().is_some()
            || matches!(cause.downcast_ref::<CounterError>(), Some(CounterError::Oracle(_)))
            || matches!(cause.downcast_ref::<BoundsError>(), Some(BoundsError::Oracle(_)))
        {
            return 2;
        }
    }
    1
}
