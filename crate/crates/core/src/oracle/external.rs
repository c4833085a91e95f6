//! Adapter for an external solution-enumerating SAT solver.
//!
//! The transcript grammar is the one printed by CryptoMiniSat with
//! `--maxsol`: one `s SATISFIABLE` line followed by `v ... 0` lines per
//! solution, and a closing `s UNSATISFIABLE` once no further solution exists.
//! `s INDETERMINATE` marks a solver-side limit. Other solvers need only a
//! different transcript parser.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{encode_query, trivially_empty, BoundedCountResult, CountingOracle, OracleBudget, OracleError, XorEncoding};
use crate::formula::CnfFormula;
use crate::xorsys::XorSystem;

/// Environment variable naming the default solver executable.
pub const SOLVER_ENV: &str = "XORCOUNT_SOLVER";

const DEFAULT_SOLVER: &str = "cryptominisat5";

/// Executable plus argument template. `{cap}` and `{file}` are substituted;
/// when no argument mentions `{file}` the query path is appended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverCommand {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl SolverCommand {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        SolverCommand {
            program: program.into(),
            args,
        }
    }

    /// CryptoMiniSat-style invocation of `program`.
    pub fn cryptominisat(program: impl Into<PathBuf>) -> Self {
        SolverCommand::new(
            program,
            ["--verb", "0", "--maxsol", "{cap}", "{file}"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
    }

    /// Program from the environment, falling back to `cryptominisat5`.
    pub fn from_env() -> Self {
        let program = std::env::var_os(SOLVER_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_SOLVER));
        SolverCommand::cryptominisat(program)
    }

    fn render_args(&self, cap: u64, file: &str) -> Vec<String> {
        let mut has_file = false;
        let mut out: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                if a.contains("{file}") {
                    has_file = true;
                }
                a.replace("{cap}", &cap.to_string()).replace("{file}", file)
            })
            .collect();
        if !has_file {
            out.push(file.to_string());
        }
        out
    }
}

/// Parses a solver transcript into a capped count.
pub fn parse_cms_transcript(
    stdout: &str,
    cap: u64,
    timed_out: bool,
) -> Result<BoundedCountResult, OracleError> {
    let mut sat = 0u64;
    let mut exhausted = false;
    let mut indeterminate = false;
    for line in stdout.lines() {
        let line = line.trim();
        match line {
            "s SATISFIABLE" => sat += 1,
            "s UNSATISFIABLE" => exhausted = true,
            "s INDETERMINATE" => indeterminate = true,
            _ if line.starts_with("s ") => {
                return Err(OracleError::Protocol(format!("unknown status line `{line}`")));
            }
            _ if line.is_empty() || line.starts_with('c') || line.starts_with('v') => {}
            _ => return Err(OracleError::Protocol(format!("unexpected line `{line}`"))),
        }
    }
    if sat >= cap {
        return Ok(BoundedCountResult::Saturated(cap));
    }
    if exhausted && !timed_out {
        return Ok(BoundedCountResult::Exact(sat));
    }
    if timed_out || indeterminate {
        return Ok(BoundedCountResult::TimedOut(sat));
    }
    Err(OracleError::Protocol(format!(
        "{sat} solutions reported without exhaustion or cap"
    )))
}

/// Runs the solver once on `query`.
pub fn run_external(
    query: &str,
    budget: &OracleBudget,
    command: &SolverCommand,
) -> Result<BoundedCountResult, OracleError> {
    let limit = budget.wall_clock.ok_or(OracleError::NoWallClock)?;
    let mut file = tempfile::Builder::new()
        .prefix("xorcount-")
        .suffix(".cnf")
        .tempfile()?;
    file.write_all(query.as_bytes())?;
    file.flush()?;
    let path = file.path().to_string_lossy().into_owned();

    let mut child = Command::new(&command.program)
        .args(command.render_args(budget.cap, &path))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                OracleError::SolverMissing(command.program.display().to_string())
            } else {
                OracleError::Io(e)
            }
        })?;

    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });

    let deadline = Instant::now() + limit;
    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            timed_out = true;
            let _ = child.kill();
            break child.wait()?;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();

    match parse_cms_transcript(&stdout, budget.cap, timed_out) {
        Ok(r) => Ok(r),
        Err(_) if timed_out => Ok(BoundedCountResult::TimedOut(0)),
        Err(e) => {
            let known = matches!(status.code(), Some(0) | Some(10) | Some(20));
            if known {
                Err(e)
            } else {
                Err(OracleError::SolverFailed {
                    status: status.to_string(),
                    stderr: stderr.trim().to_string(),
                })
            }
        }
    }
}

/// Oracle backed by an external solver, one process per query.
#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub command: SolverCommand,
    pub encoding: XorEncoding,
}

impl ExternalSolver {
    pub fn new(command: SolverCommand, encoding: XorEncoding) -> Self {
        ExternalSolver { command, encoding }
    }
}

impl CountingOracle for ExternalSolver {
    fn bounded_count(
        &self,
        formula: &CnfFormula,
        xors: &XorSystem,
        budget: &OracleBudget,
    ) -> Result<BoundedCountResult, OracleError> {
        if trivially_empty(xors) {
            return Ok(BoundedCountResult::Exact(0));
        }
        let query = encode_query(formula, xors, self.encoding)?;
        run_external(&query.text, budget, &self.command)
    }

    fn name(&self) -> &str {
        "external"
    }
}
