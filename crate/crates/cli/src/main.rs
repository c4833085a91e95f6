mod args;
mod commands;

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use xorcount_core::Seed;

use args::{Cli, Command};
use commands::{exit_code_for, Ctx, Outcome, Timings};

/// The JSON document printed by `--json`. Rerunning with the echoed seed and
/// flags reproduces `result` exactly (internal oracle).
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunReport<'a> {
    command: &'a str,
    flags: Value,
    master_seed: u64,
    degraded: bool,
    heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<BTreeMap<String, f64>>,
    result: Value,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Count(_) => "count",
        Command::Lower(_) => "lower",
        Command::BoostTable(_) => "boost-table",
        Command::EstimateBoost(_) => "estimate-boost",
        Command::GenXor(_) => "gen-xor",
    }
}

fn dispatch(cli: &Cli, ctx: &mut Ctx<'_>) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Count(a) => commands::count(a, ctx),
        Command::Lower(a) => commands::lower(a, ctx),
        Command::BoostTable(a) => commands::boost_table(a, ctx),
        Command::EstimateBoost(a) => commands::estimate_boost(a, ctx),
        Command::GenXor(a) => commands::gen_xor(a, ctx),
    }
}

fn run(mut cli: Cli) -> anyhow::Result<u8> {
    let seed = cli.global.seed.map(Seed::new).unwrap_or_else(Seed::from_entropy);
    cli.global.seed = Some(seed.value());
    let global = cli.global.clone();
    let mut ctx = Ctx {
        global: &global,
        seed,
        timings: Timings::default(),
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = global.jobs {
        if j == 0 {
            return Err(commands::UsageError("--jobs must be positive".into()).into());
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    let outcome = pool.install(|| dispatch(&cli, &mut ctx))?;
    log::info!("phases: {:?}", ctx.timings.0);

    if global.json {
        let flags = match serde_json::to_value(&cli.command)? {
            Value::Object(mut m) => m.remove(command_name(&cli.command)).unwrap_or(Value::Null),
            other => other,
        };
        let mut flags = flags;
        if let Value::Object(m) = &mut flags {
            if let Value::Object(g) = serde_json::to_value(&global)? {
                m.extend(g);
            }
        }
        let report = RunReport {
            command: command_name(&cli.command),
            flags,
            master_seed: seed.value(),
            degraded: outcome.degraded,
            heuristic: outcome.heuristic,
            timings: global.timings.then(|| ctx.timings.as_map()),
            result: outcome.result,
        };
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        if !outcome.human.is_empty() {
            println!("{}", outcome.human);
        }
        eprintln!("seed: {}", seed.value());
    }

    Ok(if global.strict && outcome.degraded { 3 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
