use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::formula::{emit_dimacs, CnfFormula, Lit};
use crate::xorsys::XorSystem;

/// How parity rows are handed to a solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XorEncoding {
    /// `x`-lines, for solvers with native parity reasoning.
    Native,
    /// Plain CNF. Each row is cut into chained chunks of at most `chunk_size`
    /// terms linked by fresh auxiliary variables.
    Chunked { chunk_size: usize },
}

/// A rendered query plus bookkeeping about what was added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedQuery {
    pub text: String,
    pub aux_vars: usize,
    pub chunks: usize,
}

/// Splits one parity constraint into chained chunks.
///
/// Each chunk takes up to `chunk_size` terms from the running list; every
/// chunk but the last also gets a fresh auxiliary variable equal to the
/// parity of its terms, and that auxiliary becomes the first term of the
/// next chunk. A row of width `w` therefore yields
/// `ceil((w - 1) / (chunk_size - 1))` chunks and one auxiliary fewer.
/// Returned chunks are `(variables, rhs)` with auxiliaries numbered from
/// `next_aux`.
pub fn chunk_xor(
    row: &[usize],
    rhs: bool,
    chunk_size: usize,
    next_aux: &mut usize,
) -> Result<Vec<(Vec<usize>, bool)>, OracleError> {
    if chunk_size < 3 {
        return Err(OracleError::ChunkTooSmall(chunk_size));
    }
    if row.len() <= chunk_size {
        return Ok(vec![(row.to_vec(), rhs)]);
    }
    let mut out = Vec::new();
    let mut carry: Option<usize> = None;
    let mut rest = row;
    loop {
        let take = chunk_size - carry.is_some() as usize;
        let mut vars: Vec<usize> = carry.into_iter().collect();
        if rest.len() <= take {
            vars.extend_from_slice(rest);
            out.push((vars, rhs));
            return Ok(out);
        }
        vars.extend_from_slice(&rest[..take]);
        rest = &rest[take..];
        let aux = *next_aux;
        *next_aux += 1;
        vars.push(aux);
        out.push((vars, false));
        carry = Some(aux);
    }
}

/// The `2^(w-1)` clauses forbidding every assignment of the row's variables
/// with the wrong parity.
pub fn xor_to_cnf(vars: &[usize], rhs: bool) -> Vec<Vec<Lit>> {
    let w = vars.len();
    assert!(w > 0 && w < 31, "xor width {w} out of range for CNF expansion");
    let mut clauses = Vec::with_capacity(1 << (w - 1));
    for bits in 0u32..(1 << w) {
        let parity = bits.count_ones() % 2 == 1;
        if parity == rhs {
            continue;
        }
        clauses.push(
            vars.iter()
                .enumerate()
                .map(|(k, &v)| Lit::new(v, bits >> k & 1 == 0))
                .collect(),
        );
    }
    clauses
}

/// Renders `F ∧ xors` for an external solver.
pub fn encode_query(
    formula: &CnfFormula,
    xors: &XorSystem,
    encoding: XorEncoding,
) -> Result<EncodedQuery, OracleError> {
    super::check_vars(formula, xors)?;
    match encoding {
        XorEncoding::Native => Ok(EncodedQuery {
            text: emit_dimacs(formula, Some(xors))?,
            aux_vars: 0,
            chunks: 0,
        }),
        XorEncoding::Chunked { chunk_size } => {
            if chunk_size < 3 {
                return Err(OracleError::ChunkTooSmall(chunk_size));
            }
            let n = formula.num_vars();
            let mut next_aux = n;
            let mut pieces = Vec::new();
            for (row, &b) in xors.rows().iter().zip(xors.rhs()) {
                if row.is_empty() {
                    if b {
                        pieces.push((vec![0], true));
                        pieces.push((vec![0], false));
                    }
                    continue;
                }
                pieces.extend(chunk_xor(row, b, chunk_size, &mut next_aux)?);
            }
            let aux_vars = next_aux - n;
            let mut out = CnfFormula::empty(next_aux)?;
            for c in formula.clauses() {
                out.add_clause(c)?;
            }
            for (vars, b) in &pieces {
                for c in xor_to_cnf(vars, *b) {
                    out.add_clause(&c)?;
                }
            }
            out.set_projection(Some(formula.counting_vars()))?;
            Ok(EncodedQuery {
                text: emit_dimacs(&out, None)?,
                aux_vars,
                chunks: pieces.len(),
            })
        }
    }
}
