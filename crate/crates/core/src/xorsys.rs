//! Random systems of parity constraints `A x = b` over GF(2).
//!
//! Four families are provided, each `i`-uniform: every fixed assignment lies
//! in the solution set with probability exactly `2^-i`, because the
//! right-hand side is uniform and independent of the matrix.
//!
//! * dense: every entry of `A` is an independent fair coin;
//! * sparse: every entry is 1 with probability `p <= 1/2`;
//! * subcube: `i` distinct variables are frozen to random values;
//! * ldpc: bi-regular low-density matrices where every variable appears in
//!   exactly `l` rows and row degrees differ by at most one.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XorError {
    #[error("row {row}: variable {var} out of range for {num_vars} variables")]
    VarOutOfRange { row: usize, var: usize, num_vars: usize },
    #[error("row {row}: variable {var} repeated")]
    RepeatedVar { row: usize, var: usize },
    #[error("{rows} rows but {rhs} right-hand-side bits")]
    ShapeMismatch { rows: usize, rhs: usize },
    #[error("assignment has length {found}, system has {expected} variables")]
    AssignmentLength { expected: usize, found: usize },
    #[error("requested {rows} constraints over only {num_vars} variables")]
    TooManyRows { rows: usize, num_vars: usize },
    #[error("sparse probability {0} outside (0, 1/2]")]
    BadProbability(f64),
    #[error("column degree {0} below 3 (set the low-degree override to allow it)")]
    ColumnDegreeTooLow(usize),
    #[error("ldpc needs column degree {degree} <= rows {rows}")]
    LdpcInfeasible { degree: usize, rows: usize },
    #[error("could not remove repeated variables from ldpc rows")]
    LdpcRepairFailed,
    #[error("rigorous nesting is only defined for the dense family")]
    NestingNotRigorous,
    #[error("system must have at least one variable")]
    NoVariables,
}

/// A system of parity constraints over `num_vars` 0-indexed variables.
///
/// Rows are sorted variable lists. A row may be empty (dense sampling keeps
/// all-zero rows); such a row is satisfied by everything when its
/// right-hand side is 0 and by nothing otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XorSystem {
    num_vars: usize,
    rows: Vec<Vec<usize>>,
    rhs: Vec<bool>,
}

impl XorSystem {
    pub fn new(num_vars: usize, rows: Vec<Vec<usize>>, rhs: Vec<bool>) -> Result<Self, XorError> {
        if rows.len() != rhs.len() {
            return Err(XorError::ShapeMismatch {
                rows: rows.len(),
                rhs: rhs.len(),
            });
        }
        let mut out = Vec::with_capacity(rows.len());
        for (k, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(XorError::RepeatedVar { row: k, var: w[0] });
                }
            }
            if let Some(&v) = row.last() {
                if v >= num_vars {
                    return Err(XorError::VarOutOfRange {
                        row: k,
                        var: v,
                        num_vars,
                    });
                }
            }
            out.push(row);
        }
        Ok(XorSystem {
            num_vars,
            rows: out,
            rhs,
        })
    }

    /// The system with no constraints; its solution set is the whole cube.
    pub fn empty(num_vars: usize) -> Self {
        XorSystem {
            num_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[bool] {
        &self.rhs
    }

    /// Membership of an assignment in the solution set.
    pub fn contains(&self, assignment: &[bool]) -> Result<bool, XorError> {
        if assignment.len() != self.num_vars {
            return Err(XorError::AssignmentLength {
                expected: self.num_vars,
                found: assignment.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.rhs)
            .all(|(row, &b)| row.iter().fold(false, |acc, &v| acc ^ assignment[v]) == b))
    }

    /// The first `k` rows.
    pub fn prefix(&self, k: usize) -> XorSystem {
        let k = k.min(self.rows.len());
        XorSystem {
            num_vars: self.num_vars,
            rows: self.rows[..k].to_vec(),
            rhs: self.rhs[..k].to_vec(),
        }
    }

    /// Rewrites the system into a larger variable space: variable `v` becomes
    /// `var_map[v]`.
    pub fn remap(&self, num_vars: usize, var_map: &[usize]) -> Result<XorSystem, XorError> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| var_map[v]).collect())
            .collect();
        XorSystem::new(num_vars, rows, self.rhs.clone())
    }

    /// Appends the rows of `other` (same variable space).
    pub fn extend(&mut self, other: &XorSystem) {
        assert_eq!(self.num_vars, other.num_vars);
        self.rows.extend(other.rows.iter().cloned());
        self.rhs.extend(other.rhs.iter().copied());
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vars];
        for row in &self.rows {
            for &v in row {
                deg[v] += 1;
            }
        }
        deg
    }

    /// Rows as 64-bit masks (bit `v` set iff variable `v` is in the row), or
    /// `None` when there are more than 64 variables.
    pub fn row_masks(&self) -> Option<Vec<u64>> {
        if self.num_vars > 64 {
            return None;
        }
        Some(
            self.rows
                .iter()
                .map(|r| r.iter().fold(0u64, |m, &v| m | (1u64 << v)))
                .collect(),
        )
    }
}

/// Parameters of the bi-regular LDPC family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdpcParams {
    pub column_degree: usize,
    /// Permit column degree below 3 (tests only; the lumpiness bounds need 3+).
    pub allow_low_degree: bool,
    /// Keep the raw socket configuration, reducing repeated variables mod 2
    /// instead of rejecting them. This is the ensemble whose weight
    /// enumerator is computed in [`crate::boost`].
    pub multigraph: bool,
}

/// Which random-matrix family to draw parity systems from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    Dense,
    Sparse { p: f64 },
    Subcube,
    Ldpc(LdpcParams),
}

impl Family {
    pub fn sparse(p: f64) -> Result<Family, XorError> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(XorError::BadProbability(p));
        }
        Ok(Family::Sparse { p })
    }

    pub fn ldpc(column_degree: usize) -> Result<Family, XorError> {
        if column_degree < 3 {
            return Err(XorError::ColumnDegreeTooLow(column_degree));
        }
        Ok(Family::Ldpc(LdpcParams {
            column_degree,
            allow_low_degree: false,
            multigraph: false,
        }))
    }

    /// LDPC with any positive column degree.
    pub fn ldpc_unchecked(column_degree: usize, multigraph: bool) -> Family {
        Family::Ldpc(LdpcParams {
            column_degree,
            allow_low_degree: true,
            multigraph,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Dense => "dense",
            Family::Sparse { .. } => "sparse",
            Family::Subcube => "subcube",
            Family::Ldpc(_) => "ldpc",
        }
    }

    /// Whether membership is pairwise independent (Boost exactly 1).
    pub fn is_pairwise_independent(&self) -> bool {
        matches!(self, Family::Dense)
    }

    fn validate(&self) -> Result<(), XorError> {
        match *self {
            Family::Sparse { p } if !(p > 0.0 && p <= 0.5) => Err(XorError::BadProbability(p)),
            Family::Ldpc(LdpcParams {
                column_degree,
                allow_low_degree,
                ..
            }) if column_degree == 0 || (column_degree < 3 && !allow_low_degree) => {
                Err(XorError::ColumnDegreeTooLow(column_degree))
            }
            _ => Ok(()),
        }
    }
}

/// Draws an `i`-row system over `n` variables from `family`.
pub fn sample_system<R: Rng + ?Sized>(
    family: &Family,
    n: usize,
    i: usize,
    rng: &mut R,
) -> Result<XorSystem, XorError> {
    family.validate()?;
    if n == 0 {
        return Err(XorError::NoVariables);
    }
    if i == 0 {
        return Ok(XorSystem::empty(n));
    }
    let (rows, rhs) = match *family {
        Family::Dense => bernoulli_rows(n, i, 0.5, rng),
        Family::Sparse { p } => bernoulli_rows(n, i, p, rng),
        Family::Subcube => {
            if i > n {
                return Err(XorError::TooManyRows { rows: i, num_vars: n });
            }
            let frozen = rand::seq::index::sample(rng, n, i);
            let rows = frozen.iter().map(|v| vec![v]).collect();
            let rhs = (0..i).map(|_| rng.gen::<bool>()).collect();
            (rows, rhs)
        }
        Family::Ldpc(params) => {
            if i > n {
                return Err(XorError::TooManyRows { rows: i, num_vars: n });
            }
            let rows = ldpc_rows(&params, n, i, rng)?;
            let rhs = (0..i).map(|_| rng.gen::<bool>()).collect();
            (rows, rhs)
        }
    };
    XorSystem::new(n, rows, rhs)
}

fn bernoulli_rows<R: Rng + ?Sized>(n: usize, i: usize, p: f64, rng: &mut R) -> (Vec<Vec<usize>>, Vec<bool>) {
    let mut rows = Vec::with_capacity(i);
    let mut rhs = Vec::with_capacity(i);
    for _ in 0..i {
        let row = if p == 0.5 {
            (0..n).filter(|_| rng.gen::<bool>()).collect()
        } else {
            (0..n).filter(|_| rng.gen_bool(p)).collect()
        };
        rows.push(row);
        rhs.push(rng.gen::<bool>());
    }
    (rows, rhs)
}

impl Family {
    /// The family actually sampled at level `i` over `n` variables: LDPC
    /// cannot place `l` entries per column in fewer than `l` rows, so such
    /// levels use dense rows (still `i`-uniform, and pairwise independent).
    pub fn effective(&self, i: usize) -> Family {
        match *self {
            Family::Ldpc(p) if !p.multigraph && p.column_degree > i => Family::Dense,
            other => other,
        }
    }
}

/// Samples an `i`-row system over the variables `vars` of a `num_vars`
/// variable space (the counted variables of a projected formula).
pub fn sample_over<R: Rng + ?Sized>(
    family: &Family,
    num_vars: usize,
    vars: &[usize],
    i: usize,
    rng: &mut R,
) -> Result<XorSystem, XorError> {
    let k = vars.len();
    let local = sample_system(&family.effective(i), k, i, rng)?;
    if k == num_vars && vars.iter().enumerate().all(|(a, &b)| a == b) {
        return Ok(local);
    }
    local.remap(num_vars, vars)
}

/// Row degrees for `i` rows sharing `l * n` entries: `l*n mod i` rows get
/// one more than the rest, in shuffled order.
pub fn ldpc_row_degrees<R: Rng + ?Sized>(l: usize, n: usize, i: usize, rng: &mut R) -> Vec<usize> {
    let total = l * n;
    let base = total / i;
    let extra = total % i;
    let mut deg: Vec<usize> = (0..i).map(|k| if k < extra { base + 1 } else { base }).collect();
    deg.shuffle(rng);
    deg
}

const LDPC_RESHUFFLES: usize = 100;

fn ldpc_rows<R: Rng + ?Sized>(
    params: &LdpcParams,
    n: usize,
    i: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, XorError> {
    let l = params.column_degree;
    if !params.multigraph && l > i {
        return Err(XorError::LdpcInfeasible { degree: l, rows: i });
    }
    let degrees = ldpc_row_degrees(l, n, i, rng);
    let mut sockets: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, l)).collect();

    let slice = |sockets: &[usize]| -> Vec<Vec<usize>> {
        let mut rows = Vec::with_capacity(i);
        let mut at = 0;
        for &d in &degrees {
            rows.push(sockets[at..at + d].to_vec());
            at += d;
        }
        rows
    };

    if params.multigraph {
        sockets.shuffle(rng);
        return Ok(slice(&sockets)
            .into_iter()
            .map(|row| {
                let mut odd = BTreeSet::new();
                for v in row {
                    if !odd.remove(&v) {
                        odd.insert(v);
                    }
                }
                odd.into_iter().collect()
            })
            .collect());
    }

    let has_repeat = |row: &[usize]| {
        let mut seen = BTreeSet::new();
        row.iter().any(|v| !seen.insert(*v))
    };

    let mut rows = Vec::new();
    for _ in 0..LDPC_RESHUFFLES {
        sockets.shuffle(rng);
        rows = slice(&sockets);
        if !rows.iter().any(|r| has_repeat(r)) {
            return Ok(rows);
        }
    }
    log::debug!("ldpc n = {n}, i = {i}: reshuffling failed, repairing by swaps");
    repair_rows(&mut rows, rng)?;
    Ok(rows)
}

/// Swaps entries between rows until no row repeats a variable, keeping
/// row and column degrees. Improving swaps are preferred; when none exists a
/// random swap moves the repetition elsewhere so the search cannot stall.
fn repair_rows<R: Rng + ?Sized>(rows: &mut [Vec<usize>], rng: &mut R) -> Result<(), XorError> {
    let nrows = rows.len();
    let mut order: Vec<usize> = (0..nrows).collect();
    let sockets: usize = rows.iter().map(Vec::len).sum();
    let mut budget = 1000 * sockets.max(1);
    loop {
        let conflict = rows.iter().enumerate().find_map(|(r, row)| {
            let mut seen = BTreeSet::new();
            row.iter()
                .position(|v| !seen.insert(*v))
                .map(|p| (r, p))
        });
        let Some((r, p)) = conflict else {
            return Ok(());
        };
        let v = rows[r][p];
        order.shuffle(rng);
        let mut done = false;
        'search: for &r2 in &order {
            if r2 == r || rows[r2].contains(&v) {
                continue;
            }
            let start = rng.gen_range(0..rows[r2].len().max(1));
            for off in 0..rows[r2].len() {
                let q = (start + off) % rows[r2].len();
                let w = rows[r2][q];
                if !rows[r].contains(&w) {
                    rows[r][p] = w;
                    rows[r2][q] = v;
                    done = true;
                    break 'search;
                }
            }
        }
        if !done {
            let open: Vec<usize> = (0..nrows)
                .filter(|&r2| r2 != r && !rows[r2].is_empty() && !rows[r2].contains(&v))
                .collect();
            if open.is_empty() || budget == 0 {
                return Err(XorError::LdpcRepairFailed);
            }
            budget -= 1;
            let r2 = open[rng.gen_range(0..open.len())];
            let q = rng.gen_range(0..rows[r2].len());
            rows[r][p] = rows[r2][q];
            rows[r2][q] = v;
        }
    }
}

/// How strictly nested sequences must follow the analysed construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NestingMode {
    /// Dense rows only; every prefix is exactly a dense `i`-uniform system.
    Rigorous,
    /// Any family; prefixes of one sampled system are used as-is.
    Heuristic,
}

/// `n` rows sampled once; the solution sets of its prefixes decrease.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedSystem {
    full: XorSystem,
    family: Family,
    mode: NestingMode,
}

impl NestedSystem {
    pub fn num_vars(&self) -> usize {
        self.full.num_vars()
    }

    pub fn prefix(&self, i: usize) -> XorSystem {
        self.full.prefix(i)
    }

    pub fn full(&self) -> &XorSystem {
        &self.full
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mode(&self) -> NestingMode {
        self.mode
    }

    /// Moves the rows onto the variables `var_map` of a larger space.
    pub fn remap(&self, num_vars: usize, var_map: &[usize]) -> Result<NestedSystem, XorError> {
        Ok(NestedSystem {
            full: self.full.remap(num_vars, var_map)?,
            family: self.family,
            mode: self.mode,
        })
    }
}

/// Samples a nested sequence of systems over `n` variables.
///
/// In rigorous mode each new row is a fresh dense row with a uniform
/// right-hand side, which halves the previous solution set in the
/// 1-uniform sense. Heuristic mode takes prefixes of a single system from
/// the given family.
pub fn sample_nested<R: Rng + ?Sized>(
    family: &Family,
    n: usize,
    mode: NestingMode,
    rng: &mut R,
) -> Result<NestedSystem, XorError> {
    if mode == NestingMode::Rigorous && *family != Family::Dense {
        return Err(XorError::NestingNotRigorous);
    }
    let full = sample_system(family, n, n, rng)?;
    Ok(NestedSystem {
        full,
        family: *family,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn zero_rows_for_every_family() {
        let mut rng = Seed::new(1).rng();
        for fam in [
            Family::Dense,
            Family::sparse(0.25).unwrap(),
            Family::Subcube,
            Family::ldpc(3).unwrap(),
        ] {
            let s = sample_system(&fam, 10, 0, &mut rng).unwrap();
            assert_eq!(s.num_rows(), 0);
            assert!(s.contains(&[true; 10]).unwrap());
        }
    }

    #[test]
    fn member_check_examples() {
        let empty = XorSystem::empty(2);
        assert!(empty.contains(&[true, false]).unwrap());
        let s = XorSystem::new(2, vec![vec![0, 1]], vec![false]).unwrap();
        assert!(s.contains(&[true, true]).unwrap());
        assert!(!s.contains(&[true, false]).unwrap());
        assert!(matches!(
            s.contains(&[true]),
            Err(XorError::AssignmentLength { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn ldpc_profile_n10_i4_l3() {
        for seed in 0..50 {
            let mut rng = Seed::new(seed).rng();
            let s = sample_system(&Family::ldpc(3).unwrap(), 10, 4, &mut rng).unwrap();
            assert!(s.column_degrees().iter().all(|&d| d == 3));
            let mut rd = s.row_degrees();
            rd.sort_unstable();
            assert_eq!(rd, vec![7, 7, 8, 8]);
        }
    }

    #[test]
    fn ldpc_tight_case_needs_repair() {
        // Every row must hold all 8 variables; random permutations almost never do.
        let mut rng = Seed::new(3).rng();
        let s = sample_system(&Family::ldpc(3).unwrap(), 8, 3, &mut rng).unwrap();
        assert_eq!(s.row_degrees(), vec![8, 8, 8]);
    }

    #[test]
    fn subcube_full_freeze_single_point() {
        let mut rng = Seed::new(9).rng();
        let s = sample_system(&Family::Subcube, 5, 5, &mut rng).unwrap();
        let mut count = 0;
        for bits in 0u32..32 {
            let a: Vec<bool> = (0..5).map(|k| bits >> k & 1 == 1).collect();
            if s.contains(&a).unwrap() {
                count += 1;
            }
        }
        assert_eq!(count, 1);
    }

    #[test]
    fn sampling_errors() {
        let mut rng = Seed::new(0).rng();
        assert!(matches!(
            sample_system(&Family::Subcube, 3, 4, &mut rng),
            Err(XorError::TooManyRows { .. })
        ));
        assert!(matches!(
            sample_system(&Family::ldpc(3).unwrap(), 10, 2, &mut rng),
            Err(XorError::LdpcInfeasible { .. })
        ));
        assert!(Family::sparse(0.7).is_err());
        assert!(Family::sparse(0.0).is_err());
        assert!(Family::ldpc(2).is_err());
        assert!(sample_nested(&Family::Subcube, 4, NestingMode::Rigorous, &mut rng).is_err());
        assert!(sample_nested(&Family::ldpc(3).unwrap(), 6, NestingMode::Heuristic, &mut rng).is_ok());
    }

    #[test]
    fn same_seed_same_system() {
        for fam in [Family::Dense, Family::sparse(0.25).unwrap(), Family::Subcube, Family::ldpc(3).unwrap()] {
            let a = sample_system(&fam, 12, 5, &mut Seed::new(42).rng()).unwrap();
            let b = sample_system(&fam, 12, 5, &mut Seed::new(42).rng()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn multigraph_rows_reduce_mod_two() {
        let mut rng = Seed::new(5).rng();
        let fam = Family::ldpc_unchecked(3, true);
        for _ in 0..20 {
            let s = sample_system(&fam, 6, 3, &mut rng).unwrap();
            assert!(s.column_degrees().iter().all(|&d| d <= 3 && d % 2 == 1));
        }
    }

    #[test]
    fn nested_prefixes_shrink() {
        let mut rng = Seed::new(11).rng();
        let nested = sample_nested(&Family::Dense, 6, NestingMode::Rigorous, &mut rng).unwrap();
        assert_eq!(nested.prefix(0).num_rows(), 0);
        for bits in 0u32..64 {
            let a: Vec<bool> = (0..6).map(|k| bits >> k & 1 == 1).collect();
            for i in 1..=6 {
                if nested.prefix(i).contains(&a).unwrap() {
                    assert!(nested.prefix(i - 1).contains(&a).unwrap());
                }
            }
        }
    }
}
