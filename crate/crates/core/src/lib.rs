//! Approximate model counting with random parity constraints.

pub mod boost;
pub mod bounds;
pub mod counter;
pub mod formula;
pub mod oracle;
pub mod rng;
pub mod xorsys;

pub use formula::{emit_dimacs, parse_dimacs, parse_dimacs_with_xors, xor_lines, CnfFormula, Lit};
pub use oracle::{BoundedCountResult, CountingOracle, OracleBudget};
pub use counter::{approx_count, CountEstimate, CounterConfig};
pub use rng::Seed;
pub use xorsys::{Family, XorSystem};
