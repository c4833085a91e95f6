//! Lumpiness ("Boost") of random parity-set distributions.
//!
//! For the socket-permutation LDPC ensemble the expected number of weight-`w`
//! codewords has a closed form: `C(n, w)` times the coefficient of `x^(w l)`
//! in `prod_rows sum_k C(r_row, 2k) x^(2k)`, divided by `C(n l, w l)`.
//! Dividing by `C(n, w)` gives the density `f(w)`, the probability that a
//! point at distance `w` from a member of `R` is itself in `R`. When `f` is
//! non-increasing on `[0, z]`, Boost at scale `M` is at most `2^i B(z)` with
//! `B(z)` the `C(n, d)`-weighted mean of `f` over the Hamming ball of radius
//! `z - 1` and `z = ceil(n h^-1((log2 M - 1) / n))`.
//!
//! Everything up to the final report is exact rational arithmetic.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{domain, Seed};
use crate::xorsys::{sample_system, Family, XorError};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("infeasible ensemble: {0}")]
    Infeasible(String),
    #[error("weight {w} outside [0, {n}]")]
    WeightOutOfRange { w: usize, n: usize },
    #[error("bound needs even column and row degrees (l = {l}, rows {rows:?})")]
    OddDegree { l: usize, rows: Vec<usize> },
    #[error("density increases between distance {d} and {}", d + 1)]
    NotMonotone { d: usize },
    #[error("scale log2 M = {0} below 1")]
    ScaleTooSmall(f64),
    #[error("entropy bracket check failed for z = {z}")]
    EntropySandwich { z: usize },
    #[error("need at least two distinct witnesses")]
    TooFewWitnesses,
    #[error("witness {0} repeated or longer than n bits")]
    BadWitness(u64),
    #[error("exact enumeration over 2^{0} systems is too large")]
    ExactTooLarge(usize),
    #[error("trials must be positive")]
    NoTrials,
    #[error("rate {num}/{den} gives non-integral equations or row degree at n = {n}")]
    BadRate { num: usize, den: usize, n: usize },
    #[error(transparent)]
    Xor(#[from] XorError),
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, BoostError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(BoostError::Domain(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

const BISECTION_TOL: f64 = 1e-12;

/// Smallest `x` in `[0, 1/2]` with `h(x) = y`, by bisection. The returned
/// point is the upper end of the final bracket, so `h(x) >= y` up to
/// rounding.
pub fn entropy_inverse(y: f64) -> Result<f64, BoostError> {
    if !(0.0..=1.0).contains(&y) {
        return Err(BoostError::Domain(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// A socket-permutation LDPC ensemble: `n` variables each in `l` of `i`
/// rows. When `l n / i` is not an integer, `l n mod i` rows carry one
/// extra entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LdpcEnsemble {
    pub n: usize,
    pub i: usize,
    pub l: usize,
}

impl LdpcEnsemble {
    pub fn new(n: usize, i: usize, l: usize) -> Result<Self, BoostError> {
        if n == 0 || i == 0 || l == 0 {
            return Err(BoostError::Infeasible(format!("n = {n}, i = {i}, l = {l}")));
        }
        Ok(LdpcEnsemble { n, i, l })
    }

    /// Uniform ensemble with row degree `r`; requires `l n = r i`.
    pub fn uniform(n: usize, i: usize, l: usize, r: usize) -> Result<Self, BoostError> {
        if l * n != r * i {
            return Err(BoostError::Infeasible(format!("l n = {} but r i = {}", l * n, r * i)));
        }
        LdpcEnsemble::new(n, i, l)
    }

    /// `(degree, number of rows)` pairs.
    pub fn row_profile(&self) -> Vec<(usize, usize)> {
        let total = self.l * self.n;
        let base = total / self.i;
        let extra = total % self.i;
        let mut out = Vec::new();
        if extra > 0 {
            out.push((base + 1, extra));
        }
        if self.i > extra {
            out.push((base, self.i - extra));
        }
        out
    }

    /// Row degree when every row has the same degree.
    pub fn row_degree(&self) -> Option<usize> {
        (self.l * self.n).is_multiple_of(self.i).then_some(self.l * self.n / self.i)
    }

    fn all_even(&self) -> bool {
        self.l.is_multiple_of(2) && self.row_profile().iter().all(|(d, _)| d % 2 == 0)
    }
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= BigUint::from(n - j);
        acc /= BigUint::from(j + 1);
    }
    acc
}

fn poly_mul_truncated(a: &[BigUint], b: &[BigUint], max_deg: usize) -> Vec<BigUint> {
    let len = (a.len() + b.len() - 1).min(max_deg + 1);
    let mut out = vec![BigUint::zero(); len];
    for (p, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (q, cb) in b.iter().enumerate() {
            if p + q >= len {
                break;
            }
            if !cb.is_zero() {
                out[p + q] += ca * cb;
            }
        }
    }
    out
}

/// Exact weight enumerator of an ensemble, tabulated up to a maximum weight.
#[derive(Clone, Debug)]
pub struct WeightEnumerator {
    ensemble: LdpcEnsemble,
    max_weight: usize,
    coeffs: Vec<BigUint>,
}

impl WeightEnumerator {
    pub fn new(ensemble: LdpcEnsemble, max_weight: usize) -> Result<Self, BoostError> {
        if max_weight > ensemble.n {
            return Err(BoostError::WeightOutOfRange {
                w: max_weight,
                n: ensemble.n,
            });
        }
        let max_deg = max_weight * ensemble.l;
        let mut coeffs = vec![BigUint::one()];
        for (degree, rows) in ensemble.row_profile() {
            let even: Vec<BigUint> = (0..=degree.min(max_deg))
                .map(|k| if k % 2 == 0 { binomial(degree, k) } else { BigUint::zero() })
                .collect();
            for _ in 0..rows {
                coeffs = poly_mul_truncated(&coeffs, &even, max_deg);
            }
        }
        coeffs.resize(max_deg + 1, BigUint::zero());
        Ok(WeightEnumerator {
            ensemble,
            max_weight,
            coeffs,
        })
    }

    fn check(&self, w: usize) -> Result<(), BoostError> {
        if w > self.max_weight {
            return Err(BoostError::WeightOutOfRange { w, n: self.max_weight });
        }
        Ok(())
    }

    /// Coefficient of `x^(w l)` in the row polynomial product.
    pub fn coefficient(&self, w: usize) -> Result<&BigUint, BoostError> {
        self.check(w)?;
        Ok(&self.coeffs[w * self.ensemble.l])
    }

    /// `f(d) = coefficient(d) / C(n l, d l)`.
    pub fn density(&self, d: usize) -> Result<BigRational, BoostError> {
        let c = self.coefficient(d)?;
        let denom = binomial(self.ensemble.n * self.ensemble.l, d * self.ensemble.l);
        Ok(BigRational::new(BigInt::from(c.clone()), BigInt::from(denom)))
    }

    /// Expected number of codewords of weight `w`: `C(n, w) f(w)`.
    pub fn codewords(&self, w: usize) -> Result<BigRational, BoostError> {
        Ok(self.density(w)? * BigRational::from_integer(BigInt::from(binomial(self.ensemble.n, w))))
    }
}

pub fn codewords(ensemble: &LdpcEnsemble, w: usize) -> Result<BigRational, BoostError> {
    WeightEnumerator::new(*ensemble, w)?.codewords(w)
}

pub fn density(ensemble: &LdpcEnsemble, d: usize) -> Result<BigRational, BoostError> {
    WeightEnumerator::new(*ensemble, d)?.density(d)
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    // Scale so both parts fit comfortably in f64 before dividing.
    let num = r.numer();
    let den = r.denom();
    let shift = num.bits().max(den.bits()).saturating_sub(900);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Outcome of one Boost bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoostBoundReport {
    pub n: usize,
    pub i: usize,
    pub l: usize,
    /// Row degree, when uniform.
    pub r: Option<usize>,
    pub log2_m: f64,
    pub z: usize,
    /// `B(z)` as an exact fraction `"num/den"`.
    pub bz_exact: String,
    pub bz: f64,
    /// `2^i B(z)`.
    pub bound: f64,
    pub bound_ceil: f64,
    pub monotonicity_verified: bool,
    /// Set when the ensemble has odd or mixed row degrees, where the
    /// symmetry the bound relies on is not available.
    pub approximate: bool,
}

/// Radius parameter `z = max(1, ceil(n h^-1((log2 M - 1) / n) - 1e-9))`.
pub fn radius(n: usize, log2_m: f64) -> Result<usize, BoostError> {
    if log2_m < 1.0 {
        return Err(BoostError::ScaleTooSmall(log2_m));
    }
    let y = ((log2_m - 1.0) / n as f64).min(1.0);
    let x = entropy_inverse(y)?;
    let z = ((n as f64 * x - 1e-9).ceil().max(1.0) as usize).min(n);
    let hz = binary_entropy(z as f64 / n as f64)?;
    if hz < y - 1e-9 {
        return Err(BoostError::EntropySandwich { z });
    }
    if z >= 1 && binary_entropy((z - 1) as f64 / n as f64)? > y + 1e-9 && z > 1 {
        return Err(BoostError::EntropySandwich { z });
    }
    Ok(z)
}

/// Evaluates `2^i B(z)` at scale `M = 2^log2_m` without enforcing the
/// preconditions; the report records whether they hold.
pub fn evaluate_boost_bound(ensemble: &LdpcEnsemble, log2_m: f64) -> Result<BoostBoundReport, BoostError> {
    let n = ensemble.n;
    let z = radius(n, log2_m)?;
    let en = WeightEnumerator::new(*ensemble, z)?;
    let f: Vec<BigRational> = (0..=z).map(|d| en.density(d)).collect::<Result<_, _>>()?;
    let monotone = f.windows(2).all(|w| w[0] >= w[1]);

    let mut num = BigRational::zero();
    let mut den = BigInt::zero();
    for (d, fd) in f.iter().enumerate().take(z) {
        let c = BigInt::from(binomial(n, d));
        num += fd * BigRational::from_integer(c.clone());
        den += c;
    }
    let bz = num / BigRational::from_integer(den);
    let scaled = &bz * BigRational::from_integer(BigInt::one() << ensemble.i);
    let bound = ratio_to_f64(&scaled);
    let ceil = {
        let (q, r) = scaled.numer().div_rem(scaled.denom());
        let q = if r.is_zero() { q } else { q + 1 };
        q.to_f64().unwrap_or(f64::INFINITY)
    };
    Ok(BoostBoundReport {
        n,
        i: ensemble.i,
        l: ensemble.l,
        r: ensemble.row_degree(),
        log2_m,
        z,
        bz_exact: format!("{}/{}", bz.numer(), bz.denom()),
        bz: ratio_to_f64(&bz),
        bound,
        bound_ceil: ceil,
        monotonicity_verified: monotone,
        approximate: !ensemble.all_even() || ensemble.row_degree().is_none(),
    })
}

/// Rigorous upper bound on Boost at scale `M = 2^log2_m` for an ensemble
/// with even column and row degrees, after checking that the density is
/// non-increasing up to the radius.
pub fn boost_upper_bound(ensemble: &LdpcEnsemble, log2_m: f64) -> Result<BoostBoundReport, BoostError> {
    if !ensemble.all_even() || ensemble.row_degree().is_none() {
        return Err(BoostError::OddDegree {
            l: ensemble.l,
            rows: ensemble.row_profile().iter().map(|p| p.0).collect(),
        });
    }
    let report = evaluate_boost_bound(ensemble, log2_m)?;
    if !report.monotonicity_verified {
        let en = WeightEnumerator::new(*ensemble, report.z)?;
        let d = (0..report.z)
            .find(|&d| en.density(d).ok() < en.density(d + 1).ok())
            .unwrap_or(0);
        return Err(BoostError::NotMonotone { d });
    }
    Ok(report)
}

/// One row per `n`: `i = rate n` equations, column degree `l`, scale
/// `M = 2^i`. Both `i` and the row degree `l / rate` must be integers.
pub fn boost_table(
    l: usize,
    rate_num: usize,
    rate_den: usize,
    n_values: &[usize],
) -> Result<Vec<BoostBoundReport>, BoostError> {
    n_values
        .par_iter()
        .map(|&n| {
            let bad = || BoostError::BadRate {
                num: rate_num,
                den: rate_den,
                n,
            };
            if rate_num == 0 || rate_den == 0 || !(n * rate_num).is_multiple_of(rate_den) || !(l * rate_den).is_multiple_of(rate_num) {
                return Err(bad());
            }
            let i = n * rate_num / rate_den;
            let r = l * rate_den / rate_num;
            let ens = LdpcEnsemble::uniform(n, i, l, r).map_err(|_| bad())?;
            boost_upper_bound(&ens, i as f64)
        })
        .collect()
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoostEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

fn check_witnesses(n: usize, witnesses: &[u64]) -> Result<(), BoostError> {
    if witnesses.len() < 2 {
        return Err(BoostError::TooFewWitnesses);
    }
    let mut seen = std::collections::HashSet::new();
    for &w in witnesses {
        if (n < 64 && w >> n != 0) || !seen.insert(w) {
            return Err(BoostError::BadWitness(w));
        }
    }
    Ok(())
}

/// Estimates the pair average
/// `1/(m(m-1)) sum_{s != t} Pr[s, t in R] / (Pr[s in R] Pr[t in R])`
/// over the witness set (bit `v` of a witness is variable `v`).
///
/// Each trial draws one system and scores `2^(2i) X (X - 1) / (m (m - 1))`
/// where `X` is the number of witnesses in `R`; its expectation is the pair
/// average because every family here is `i`-uniform.
pub fn estimate_boost_mc(
    family: &Family,
    n: usize,
    i: usize,
    witnesses: &[u64],
    trials: usize,
    seed: Seed,
) -> Result<BoostEstimate, BoostError> {
    check_witnesses(n, witnesses)?;
    if trials == 0 {
        return Err(BoostError::NoTrials);
    }
    let m = witnesses.len() as f64;
    let scale = 4f64.powi(i as i32) / (m * (m - 1.0));
    let base = seed.child(domain::BOOST_MC);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = base.child(k as u64).rng();
            let sys = sample_system(family, n, i, &mut rng)?;
            let masks = sys.row_masks().ok_or(BoostError::Infeasible("more than 64 variables".into()))?;
            let x = witnesses
                .iter()
                .filter(|&&w| {
                    masks
                        .iter()
                        .zip(sys.rhs())
                        .all(|(mask, &b)| ((mask & w).count_ones() & 1 == 1) == b)
                })
                .count() as f64;
            Ok(scale * x * (x - 1.0))
        })
        .collect::<Result<_, BoostError>>()?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0)
    } else {
        0.0
    };
    Ok(BoostEstimate {
        mean,
        std_error: (var / trials as f64).sqrt(),
        trials,
    })
}

/// Largest `i (n + 1)` for exact dense enumeration.
pub const EXACT_DENSE_LIMIT: usize = 24;

/// Exact `Pr[s, t in R]` for dense systems, by enumerating every matrix and
/// right-hand side.
pub fn exact_dense_pair_probability(n: usize, i: usize, s: u64, t: u64) -> Result<BigRational, BoostError> {
    let bits = i * (n + 1);
    if bits > EXACT_DENSE_LIMIT {
        return Err(BoostError::ExactTooLarge(bits));
    }
    let row_mask = (1u64 << n) - 1;
    let mut both = 0u64;
    for code in 0u64..(1u64 << bits) {
        let ok = (0..i).all(|r| {
            let chunk = code >> (r * (n + 1));
            let row = chunk & row_mask;
            let b = (chunk >> n) & 1 == 1;
            ((row & s).count_ones() & 1 == 1) == b && ((row & t).count_ones() & 1 == 1) == b
        });
        if ok {
            both += 1;
        }
    }
    Ok(BigRational::new(BigInt::from(both), BigInt::one() << bits))
}

/// Exact pair average for the dense family over a witness set.
pub fn exact_dense_boost(n: usize, i: usize, witnesses: &[u64]) -> Result<BigRational, BoostError> {
    check_witnesses(n, witnesses)?;
    let m = witnesses.len();
    let mut total = BigRational::zero();
    let scale = BigRational::from_integer(BigInt::one() << (2 * i));
    for (a, &s) in witnesses.iter().enumerate() {
        for (b, &t) in witnesses.iter().enumerate() {
            if a != b {
                total += exact_dense_pair_probability(n, i, s, t)? * &scale;
            }
        }
    }
    Ok(total / BigRational::from_integer(BigInt::from(m * (m - 1))))
}

/// One system of a finite family with its probability: row masks and
/// right-hand sides.
pub type WeightedSystem = (f64, Vec<u64>, Vec<bool>);

/// Lists every system of a small dense, sparse or subcube family with its
/// probability, for exact moment computations.
pub fn enumerate_family(family: &Family, n: usize, i: usize) -> Result<Vec<WeightedSystem>, BoostError> {
    let bits = match family {
        Family::Subcube => n + i,
        Family::Dense | Family::Sparse { .. } => i * (n + 1),
        Family::Ldpc(_) => return Err(BoostError::Infeasible("ldpc ensembles are not enumerated".into())),
    };
    if bits > EXACT_DENSE_LIMIT || n >= 64 {
        return Err(BoostError::ExactTooLarge(bits));
    }
    let mut out = Vec::new();
    match *family {
        Family::Subcube => {
            if i > n {
                return Err(XorError::TooManyRows { rows: i, num_vars: n }.into());
            }
            let subsets: Vec<u64> = (0u64..1 << n).filter(|m| m.count_ones() as usize == i).collect();
            let w = 1.0 / (subsets.len() as f64 * (1u64 << i) as f64);
            for &set in &subsets {
                let vars: Vec<usize> = (0..n).filter(|v| set >> v & 1 == 1).collect();
                for vals in 0u64..1 << i {
                    let masks = vars.iter().map(|&v| 1u64 << v).collect();
                    let rhs = (0..i).map(|k| vals >> k & 1 == 1).collect();
                    out.push((w, masks, rhs));
                }
            }
        }
        Family::Dense | Family::Sparse { .. } => {
            let p = match *family {
                Family::Sparse { p } => p,
                _ => 0.5,
            };
            let row_mask = (1u64 << n) - 1;
            for code in 0u64..1 << bits {
                let mut w = 1.0;
                let mut masks = Vec::with_capacity(i);
                let mut rhs = Vec::with_capacity(i);
                for r in 0..i {
                    let chunk = code >> (r * (n + 1));
                    let m = chunk & row_mask;
                    let ones = m.count_ones() as i32;
                    w *= p.powi(ones) * (1.0 - p).powi(n as i32 - ones) * 0.5;
                    masks.push(m);
                    rhs.push(chunk >> n & 1 == 1);
                }
                out.push((w, masks, rhs));
            }
        }
        Family::Ldpc(_) => unreachable!(),
    }
    Ok(out)
}

/// Exact moments of `X = |S ∩ R|` for a set `S` of assignments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntersectionMoments {
    pub mean: f64,
    pub variance: f64,
    /// Pair average of Pr[s, t in R] / (Pr[s in R] Pr[t in R]) over
    /// distinct members of `S`; at most Boost at scale `|S|`.
    pub pair_average: f64,
}

pub fn intersection_moments(systems: &[WeightedSystem], set: &[u64]) -> IntersectionMoments {
    let m = set.len();
    let mut single = vec![0.0; m];
    let mut pair = vec![vec![0.0; m]; m];
    let (mut ex, mut ex2) = (0.0, 0.0);
    for (w, masks, rhs) in systems {
        let inside: Vec<bool> = set
            .iter()
            .map(|&s| masks.iter().zip(rhs).all(|(mask, &b)| ((mask & s).count_ones() & 1 == 1) == b))
            .collect();
        let x = inside.iter().filter(|&&b| b).count() as f64;
        ex += w * x;
        ex2 += w * x * x;
        for a in 0..m {
            if inside[a] {
                single[a] += w;
                for b in 0..m {
                    if b != a && inside[b] {
                        pair[a][b] += w;
                    }
                }
            }
        }
    }
    let mut ratio = 0.0;
    for a in 0..m {
        for b in 0..m {
            if a != b && single[a] > 0.0 && single[b] > 0.0 {
                ratio += pair[a][b] / (single[a] * single[b]);
            }
        }
    }
    IntersectionMoments {
        mean: ex,
        variance: ex2 - ex * ex,
        pair_average: if m > 1 { ratio / (m * (m - 1)) as f64 } else { 1.0 },
    }
}

/// A random witness pair at Hamming distance `d` over `n` variables.
pub fn random_pair_at_distance<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> (u64, u64) {
    let s: u64 = rng.gen::<u64>() & ((1u64 << n) - 1);
    let flips = rand::seq::index::sample(rng, n, d);
    let t = flips.iter().fold(s, |acc, v| acc ^ (1 << v));
    (s, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.4999).abs() < 1e-3);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn entropy_inverse_values() {
        assert_eq!(entropy_inverse(1.0).unwrap(), 0.5);
        assert_eq!(entropy_inverse(0.0).unwrap(), 0.0);
        assert!((entropy_inverse(0.4999).unwrap() - 0.11).abs() < 1e-3);
        let x = entropy_inverse(0.3).unwrap();
        assert!((binary_entropy(x).unwrap() - 0.3).abs() < 1e-10);
        assert!(entropy_inverse(1.1).is_err());
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(18, 6), BigUint::from(18564u32));
        assert_eq!(binomial(6, 2), BigUint::from(15u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
    }

    #[test]
    fn weight_two_example() {
        let e = LdpcEnsemble::uniform(6, 3, 3, 6).unwrap();
        let en = WeightEnumerator::new(e, 2).unwrap();
        assert_eq!(en.coefficient(2).unwrap(), &BigUint::from(4728u32));
        assert_eq!(en.codewords(2).unwrap(), frac(70920, 18564));
        assert_eq!(en.density(2).unwrap(), frac(4728, 18564));
        assert_eq!(codewords(&e, 0).unwrap(), frac(1, 1));
        assert_eq!(density(&e, 0).unwrap(), frac(1, 1));
    }

    #[test]
    fn full_weight_codeword_for_even_rows() {
        let e = LdpcEnsemble::uniform(6, 3, 3, 6).unwrap();
        assert_eq!(codewords(&e, 6).unwrap(), frac(1, 1));
        assert_eq!(density(&e, 6).unwrap(), frac(1, 1));
        let e2 = LdpcEnsemble::uniform(10, 4, 2, 5).unwrap();
        assert!(codewords(&e2, 10).unwrap().is_zero());
    }

    #[test]
    fn odd_column_degree_kills_odd_weights() {
        let e = LdpcEnsemble::uniform(12, 6, 3, 6).unwrap();
        let en = WeightEnumerator::new(e, 12).unwrap();
        for w in (1..=12).step_by(2) {
            assert!(en.codewords(w).unwrap().is_zero(), "w = {w}");
        }
        for w in 0..=12 {
            assert!(en.codewords(w).unwrap() >= BigRational::zero());
        }
    }

    #[test]
    fn radius_one_gives_two_to_the_i() {
        let e = LdpcEnsemble::uniform(20, 10, 4, 8).unwrap();
        let r = boost_upper_bound(&e, 1.0).unwrap();
        assert_eq!(r.z, 1);
        assert_eq!(r.bz_exact, "1/1");
        assert_eq!(r.bound, 1024.0);
    }

    #[test]
    fn table_row_n100() {
        let e = LdpcEnsemble::uniform(100, 40, 8, 20).unwrap();
        let r = boost_upper_bound(&e, 40.0).unwrap();
        assert!(r.monotonicity_verified);
        assert_eq!(r.z, 8);
        assert_eq!(r.bound_ceil, 75.0);
    }

    #[test]
    fn odd_degrees_refused() {
        let e = LdpcEnsemble::uniform(6, 3, 3, 6).unwrap();
        assert!(matches!(boost_upper_bound(&e, 3.0), Err(BoostError::OddDegree { .. })));
        assert!(matches!(radius(10, 0.5), Err(BoostError::ScaleTooSmall(_))));
    }

    #[test]
    fn table_errors_and_empty() {
        assert!(boost_table(8, 2, 5, &[]).unwrap().is_empty());
        assert!(matches!(boost_table(8, 2, 5, &[101]), Err(BoostError::BadRate { .. })));
        assert!(matches!(boost_table(8, 3, 5, &[100]), Err(BoostError::BadRate { .. })));
    }

    #[test]
    fn dense_exact_is_pairwise_independent() {
        let b = exact_dense_boost(3, 2, &[0b000, 0b101]).unwrap();
        assert_eq!(b, frac(1, 1));
    }

    #[test]
    fn witness_validation() {
        let s = Seed::new(0);
        assert!(matches!(estimate_boost_mc(&Family::Dense, 3, 1, &[1], 10, s), Err(BoostError::TooFewWitnesses)));
        assert!(matches!(estimate_boost_mc(&Family::Dense, 3, 1, &[1, 1], 10, s), Err(BoostError::BadWitness(1))));
        assert!(matches!(estimate_boost_mc(&Family::Dense, 3, 1, &[1, 8], 10, s), Err(BoostError::BadWitness(8))));
    }
}
