//! CNF formulas and the DIMACS text format.
//!
//! Variables are 1-indexed in DIMACS text and 0-indexed everywhere else; the
//! conversion happens only in this module.
//!
//! Besides plain clauses the reader understands two extensions used by
//! counting benchmarks and XOR-aware solvers:
//!
//! * `c ind v1 v2 ... 0` declares (part of) the sampling set. Several such
//!   lines are merged.
//! * `x v1 v2 ... 0` is a parity constraint that is true iff an odd number of
//!   its literals are true. A negated literal flips the right-hand side, so
//!   `x -1 3 0` means `x1 + x3 = 0 (mod 2)`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::xorsys::XorSystem;

/// A literal over a 0-indexed variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lit {
    var: usize,
    positive: bool,
}

impl Lit {
    pub fn new(var: usize, positive: bool) -> Self {
        Lit { var, positive }
    }

    pub fn pos(var: usize) -> Self {
        Lit::new(var, true)
    }

    pub fn neg(var: usize) -> Self {
        Lit::new(var, false)
    }

    /// Builds a literal from a nonzero DIMACS integer.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        Some(Lit::new(value.unsigned_abs() as usize - 1, value > 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> usize {
        self.var
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    pub fn negate(self) -> Self {
        Lit::new(self.var, !self.positive)
    }

    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("line {line}: missing `p cnf` header before data")]
    MissingHeader { line: usize },
    #[error("line {line}: malformed header `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: second `p` header")]
    DuplicateHeader { line: usize },
    #[error("no `p cnf` header found")]
    NoHeader,
    #[error("line {line}: invalid token `{token}`")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal {literal} exceeds the declared {num_vars} variables")]
    LiteralOutOfRange {
        line: usize,
        literal: i64,
        num_vars: usize,
    },
    #[error("clause starting on line {line} is not terminated by 0")]
    UnterminatedClause { line: usize },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("line {line}: tautological clause contains both {var} and -{var}")]
    Tautology { line: usize, var: usize },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("line {line}: malformed parity line")]
    BadXorLine { line: usize },
    #[error("parity constraints are not allowed here; use parse_dimacs_with_xors")]
    UnexpectedXor,
    #[error("projection set is empty")]
    EmptyProjection,
    #[error("formula must have at least one variable")]
    NoVariables,
    #[error("parity system is over {found} variables, formula has {expected}")]
    XorVarMismatch { expected: usize, found: usize },
}

/// A CNF formula with an optional projection (sampling) set.
///
/// Clauses are kept sorted and duplicate-free so that structural equality
/// coincides with equality of the clause lists read from text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    projection: Option<Vec<usize>>,
}

impl CnfFormula {
    /// Builds a formula from DIMACS-style signed integers.
    pub fn from_dimacs_clauses(
        num_vars: usize,
        clauses: &[Vec<i64>],
        projection: Option<&[usize]>,
    ) -> Result<Self, FormulaError> {
        let mut f = CnfFormula::empty(num_vars)?;
        for c in clauses {
            f.add_dimacs_clause(c, 0)?;
        }
        if let Some(p) = projection {
            let vars = p
                .iter()
                .map(|&v| {
                    if v == 0 || v > num_vars {
                        Err(FormulaError::LiteralOutOfRange {
                            line: 0,
                            literal: v as i64,
                            num_vars,
                        })
                    } else {
                        Ok(v - 1)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            f.set_projection(Some(vars))?;
        }
        Ok(f)
    }

    /// A formula with no clauses (every assignment is a model).
    pub fn empty(num_vars: usize) -> Result<Self, FormulaError> {
        if num_vars == 0 {
            return Err(FormulaError::NoVariables);
        }
        Ok(CnfFormula {
            num_vars,
            clauses: Vec::new(),
            projection: None,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// Sampling set as sorted 0-indexed variables.
    pub fn projection(&self) -> Option<&[usize]> {
        self.projection.as_deref()
    }

    /// The variables whose assignments are being counted: the projection if
    /// one is set, otherwise every variable.
    pub fn counting_vars(&self) -> Vec<usize> {
        match &self.projection {
            Some(p) => p.clone(),
            None => (0..self.num_vars).collect(),
        }
    }

    pub fn set_projection(&mut self, vars: Option<Vec<usize>>) -> Result<(), FormulaError> {
        self.projection = match vars {
            None => None,
            Some(v) => {
                let set: BTreeSet<usize> = v.into_iter().collect();
                if set.is_empty() {
                    return Err(FormulaError::EmptyProjection);
                }
                if let Some(&max) = set.iter().next_back() {
                    if max >= self.num_vars {
                        return Err(FormulaError::LiteralOutOfRange {
                            line: 0,
                            literal: max as i64 + 1,
                            num_vars: self.num_vars,
                        });
                    }
                }
                Some(set.into_iter().collect())
            }
        };
        Ok(())
    }

    /// Adds a clause given as literals. Duplicate literals are merged.
    pub fn add_clause(&mut self, lits: &[Lit]) -> Result<(), FormulaError> {
        self.push_clause(lits.to_vec(), 0)
    }

    fn add_dimacs_clause(&mut self, lits: &[i64], line: usize) -> Result<(), FormulaError> {
        let mut out = Vec::with_capacity(lits.len());
        for &l in lits {
            let lit = Lit::from_dimacs(l).ok_or(FormulaError::EmptyClause { line })?;
            if lit.var >= self.num_vars {
                return Err(FormulaError::LiteralOutOfRange {
                    line,
                    literal: l,
                    num_vars: self.num_vars,
                });
            }
            out.push(lit);
        }
        self.push_clause(out, line)
    }

    fn push_clause(&mut self, mut lits: Vec<Lit>, line: usize) -> Result<(), FormulaError> {
        if lits.is_empty() {
            return Err(FormulaError::EmptyClause { line });
        }
        lits.sort();
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].var == w[1].var {
                return Err(FormulaError::Tautology {
                    line,
                    var: w[0].var + 1,
                });
            }
        }
        if let Some(l) = lits.iter().find(|l| l.var >= self.num_vars) {
            return Err(FormulaError::LiteralOutOfRange {
                line,
                literal: l.to_dimacs(),
                num_vars: self.num_vars,
            });
        }
        self.clauses.push(lits);
        Ok(())
    }

    /// True iff `assignment` (indexed by 0-based variable) satisfies every clause.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.num_vars, "assignment length");
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(assignment)))
    }
}

/// A DIMACS document: the formula plus any parity lines it carried.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimacsDocument {
    pub formula: CnfFormula,
    pub xors: XorSystem,
}

/// Parses a DIMACS CNF document that must not contain parity lines.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, FormulaError> {
    let doc = parse_dimacs_with_xors(text)?;
    if doc.xors.num_rows() > 0 {
        return Err(FormulaError::UnexpectedXor);
    }
    Ok(doc.formula)
}

fn parse_int(tok: &str, line: usize) -> Result<i64, FormulaError> {
    tok.parse::<i64>().map_err(|_| FormulaError::BadToken {
        line,
        token: tok.to_string(),
    })
}

/// Parses a DIMACS document, accepting `x` parity lines.
///
/// The header's clause count covers both ordinary clauses and parity lines.
pub fn parse_dimacs_with_xors(text: &str) -> Result<DimacsDocument, FormulaError> {
    let mut header: Option<(usize, usize)> = None;
    let mut formula: Option<CnfFormula> = None;
    let mut projection: Vec<(usize, i64)> = Vec::new();
    let mut saw_projection = false;
    let mut xor_rows: Vec<(Vec<usize>, bool)> = Vec::new();
    let mut pending: Vec<i64> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        let mut tokens = trimmed.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        if trimmed.starts_with('c') {
            if first == "c" && tokens.next() == Some("ind") {
                saw_projection = true;
                for tok in tokens {
                    let v = parse_int(tok, line)?;
                    if v == 0 {
                        break;
                    }
                    projection.push((line, v));
                }
            }
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(FormulaError::DuplicateHeader { line });
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            let malformed = || FormulaError::MalformedHeader {
                line,
                text: trimmed.to_string(),
            };
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(malformed());
            }
            let vars: usize = parts[2].parse().map_err(|_| malformed())?;
            let clauses: usize = parts[3].parse().map_err(|_| malformed())?;
            if vars == 0 {
                return Err(malformed());
            }
            header = Some((vars, clauses));
            formula = Some(CnfFormula::empty(vars)?);
            continue;
        }
        let f = formula
            .as_mut()
            .ok_or(FormulaError::MissingHeader { line })?;
        if let Some(rest) = trimmed.strip_prefix('x') {
            if !pending.is_empty() {
                return Err(FormulaError::UnterminatedClause { line: pending_line });
            }
            let rest = rest.split_whitespace();
            let mut vars = Vec::new();
            let mut rhs = true;
            let mut terminated = false;
            for tok in rest {
                let v = parse_int(tok, line)?;
                if v == 0 {
                    terminated = true;
                    break;
                }
                let lit = Lit::from_dimacs(v).expect("nonzero");
                if lit.var >= f.num_vars {
                    return Err(FormulaError::LiteralOutOfRange {
                        line,
                        literal: v,
                        num_vars: f.num_vars,
                    });
                }
                if !lit.positive {
                    rhs = !rhs;
                }
                vars.push(lit.var);
            }
            if !terminated || vars.is_empty() {
                return Err(FormulaError::BadXorLine { line });
            }
            let distinct: BTreeSet<usize> = vars.iter().copied().collect();
            if distinct.len() != vars.len() {
                return Err(FormulaError::BadXorLine { line });
            }
            xor_rows.push((vars, rhs));
            continue;
        }
        for tok in trimmed.split_whitespace() {
            let v = parse_int(tok, line)?;
            if pending.is_empty() {
                pending_line = line;
            }
            if v == 0 {
                if pending.is_empty() {
                    return Err(FormulaError::EmptyClause { line });
                }
                f.add_dimacs_clause(&pending, pending_line)?;
                pending.clear();
            } else {
                pending.push(v);
            }
        }
    }

    if !pending.is_empty() {
        return Err(FormulaError::UnterminatedClause { line: pending_line });
    }
    let (num_vars, declared) = header.ok_or(FormulaError::NoHeader)?;
    let mut formula = formula.expect("header implies formula");
    let found = formula.num_clauses() + xor_rows.len();
    if found != declared {
        return Err(FormulaError::ClauseCountMismatch { declared, found });
    }
    if saw_projection {
        let mut vars = Vec::with_capacity(projection.len());
        for (line, v) in projection {
            if v < 0 || v as usize > num_vars {
                return Err(FormulaError::LiteralOutOfRange {
                    line,
                    literal: v,
                    num_vars,
                });
            }
            vars.push(v as usize - 1);
        }
        formula.set_projection(Some(vars))?;
    }
    let (rows, rhs): (Vec<_>, Vec<_>) = xor_rows.into_iter().unzip();
    let xors = XorSystem::new(num_vars, rows, rhs).map_err(|_| FormulaError::BadXorLine { line: 0 })?;
    Ok(DimacsDocument { formula, xors })
}

/// Writes a formula (and optionally a parity system) as DIMACS text.
///
/// Parity rows with right-hand side 1 are written with all literals positive;
/// right-hand side 0 negates the first literal. A row with no variables is
/// either trivially true (rhs 0, omitted) or contradictory (rhs 1, written
/// as the pair `x 1 0` / `x -1 0`).
pub fn emit_dimacs(formula: &CnfFormula, xors: Option<&XorSystem>) -> Result<String, FormulaError> {
    let mut xor_lines: Vec<String> = Vec::new();
    if let Some(x) = xors {
        if x.num_vars() != formula.num_vars {
            return Err(FormulaError::XorVarMismatch {
                expected: formula.num_vars,
                found: x.num_vars(),
            });
        }
        xor_lines = self::xor_lines(x);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p cnf {} {}",
        formula.num_vars,
        formula.clauses.len() + xor_lines.len()
    );
    if let Some(p) = &formula.projection {
        out.push_str("c ind");
        for v in p {
            let _ = write!(out, " {}", v + 1);
        }
        out.push_str(" 0\n");
    }
    for c in &formula.clauses {
        for l in c {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    for l in xor_lines {
        out.push_str(&l);
        out.push('\n');
    }
    Ok(out)
}

/// The `x`-lines of a parity system, with the conventions of [`emit_dimacs`].
pub fn xor_lines(xors: &XorSystem) -> Vec<String> {
    let mut out = Vec::new();
    for (row, &rhs) in xors.rows().iter().zip(xors.rhs()) {
        if row.is_empty() {
            if rhs {
                out.push("x 1 0".into());
                out.push("x -1 0".into());
            }
            continue;
        }
        out.push(xor_line(row, rhs));
    }
    out
}

fn xor_line(row: &[usize], rhs: bool) -> String {
    let mut s = String::from("x");
    for (k, v) in row.iter().enumerate() {
        if k == 0 && !rhs {
            let _ = write!(s, " -{}", v + 1);
        } else {
            let _ = write!(s, " {}", v + 1);
        }
    }
    s.push_str(" 0");
    s
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_dimacs(self, None).map_err(|_| fmt::Error)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_clause() {
        let f = parse_dimacs("p cnf 2 1\n1 -2 0").unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.clauses(), &[vec![Lit::pos(0), Lit::neg(1)]]);
        assert!(f.projection().is_none());
    }

    #[test]
    fn parses_projection() {
        let f = parse_dimacs("p cnf 3 1\nc ind 1 3 0\n1 2 3 0").unwrap();
        assert_eq!(f.projection(), Some(&[0usize, 2][..]));
    }

    #[test]
    fn projection_lines_union() {
        let f = parse_dimacs("c ind 3 0\np cnf 4 1\nc ind 1 3 0\nc ind 4 0\n1 2 0").unwrap();
        assert_eq!(f.projection(), Some(&[0usize, 2, 3][..]));
    }

    #[test]
    fn literal_out_of_range() {
        let err = parse_dimacs("p cnf 2 1\n1 5 0").unwrap_err();
        assert!(matches!(
            err,
            FormulaError::LiteralOutOfRange { literal: 5, num_vars: 2, .. }
        ));
    }

    #[test]
    fn error_paths() {
        assert!(matches!(parse_dimacs("1 2 0"), Err(FormulaError::MissingHeader { .. })));
        assert!(matches!(parse_dimacs(""), Err(FormulaError::NoHeader)));
        assert!(matches!(
            parse_dimacs("p cnf x 1\n1 0"),
            Err(FormulaError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\np cnf 2 1\n1 0"),
            Err(FormulaError::DuplicateHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 2"),
            Err(FormulaError::UnterminatedClause { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 -1 0"),
            Err(FormulaError::Tautology { var: 1, .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 2\n1 0"),
            Err(FormulaError::ClauseCountMismatch { declared: 2, found: 1 })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n0"),
            Err(FormulaError::EmptyClause { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 a 0"),
            Err(FormulaError::BadToken { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\nx 1 2 0"),
            Err(FormulaError::UnexpectedXor)
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 0\nc ind 3 0"),
            Err(FormulaError::LiteralOutOfRange { .. })
        ));
    }

    #[test]
    fn clauses_may_span_lines() {
        let f = parse_dimacs("p cnf 3 2\n1 2\n3 0 -1\n0\n").unwrap();
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.clauses()[0].len(), 3);
    }

    #[test]
    fn xor_line_conventions() {
        let xs = XorSystem::new(3, vec![vec![0, 2]], vec![true]).unwrap();
        let f = CnfFormula::empty(3).unwrap();
        let text = emit_dimacs(&f, Some(&xs)).unwrap();
        assert!(text.contains("\nx 1 3 0\n"), "{text}");
        let xs0 = XorSystem::new(3, vec![vec![0, 2]], vec![false]).unwrap();
        let text0 = emit_dimacs(&f, Some(&xs0)).unwrap();
        assert!(text0.contains("\nx -1 3 0\n"), "{text0}");
        let doc = parse_dimacs_with_xors(&text0).unwrap();
        assert_eq!(doc.xors, xs0);
    }

    #[test]
    fn negations_in_xor_lines_flip_rhs() {
        let doc = parse_dimacs_with_xors("p cnf 3 1\nx -1 -2 3 0\n").unwrap();
        assert_eq!(doc.xors.rhs(), &[true]);
        let doc = parse_dimacs_with_xors("p cnf 3 1\nx 1 -2 3 0\n").unwrap();
        assert_eq!(doc.xors.rhs(), &[false]);
        assert!(parse_dimacs_with_xors("p cnf 3 1\nx 1 1 0\n").is_err());
        assert!(parse_dimacs_with_xors("p cnf 3 1\nx 1 2\n").is_err());
    }

    #[test]
    fn round_trip_with_projection() {
        let src = "p cnf 4 2\nc ind 2 4 0\n-1 2 0\n3 4 -2 0\n";
        let f = parse_dimacs(src).unwrap();
        let again = parse_dimacs(&emit_dimacs(&f, None).unwrap()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn evaluation() {
        let f = parse_dimacs("p cnf 2 1\n1 2 0").unwrap();
        assert!(!f.is_satisfied_by(&[false, false]));
        assert!(f.is_satisfied_by(&[true, false]));
    }
}
