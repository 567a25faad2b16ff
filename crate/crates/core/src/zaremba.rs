//! Continued fractions with restricted digits: the matrix bridge
//! [a_1,...,a_k] <-> products of (0 1; 1 a), and the census of denominators
//! reachable below a bound.

use crate::error::{Error, Result};
use crate::matrix::IntMatrix2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Ordered product (0 1; 1 a_1)(0 1; 1 a_2)...(0 1; 1 a_k).
pub fn cf_to_matrix(digits: &[i64]) -> Result<IntMatrix2> {
    if digits.is_empty() {
        return Err(Error::Config("digit string is empty".into()));
    }
    if digits.iter().any(|&a| a < 1) {
        return Err(Error::Config("digits must be >= 1".into()));
    }
    Ok(digits.iter().fold(IntMatrix2::identity(), |acc, &a| {
        acc.mul(&IntMatrix2::cf_generator(a))
    }))
}

/// Fraction b/d read from the second column of the digit product.
pub fn matrix_to_fraction(m: &IntMatrix2) -> (BigInt, BigInt) {
    let e = m.entries_big();
    (e[1].clone(), e[3].clone())
}

/// <m (0,1)^t, (0,1)^t> = the (2,2) entry.
pub fn inner_product_denominator(m: &IntMatrix2) -> BigInt {
    m.entries_big()[3].clone()
}

/// Exact nested evaluation 1/(a_1 + 1/(a_2 + ...)), the independent oracle
/// for the matrix bridge.
pub fn cf_eval_exact(digits: &[i64]) -> Result<BigRational> {
    if digits.is_empty() {
        return Err(Error::Config("digit string is empty".into()));
    }
    let mut v = BigRational::zero();
    for &a in digits.iter().rev() {
        v = BigRational::one() / (BigRational::from(BigInt::from(a)) + v);
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct DenominatorCensus {
    pub alphabet: Vec<i64>,
    pub n: u64,
    bits: Vec<u64>,
    pub count: u64,
}

impl DenominatorCensus {
    fn new(alphabet: &[i64], n: u64) -> DenominatorCensus {
        DenominatorCensus {
            alphabet: alphabet.to_vec(),
            n,
            bits: vec![0u64; (n as usize + 64) / 64 + 1],
            count: 0,
        }
    }

    fn mark(&mut self, d: u64) {
        debug_assert!(d >= 1 && d <= self.n);
        let w = (d / 64) as usize;
        let b = d % 64;
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
    }

    pub fn contains(&self, d: u64) -> bool {
        if d == 0 || d > self.n {
            return false;
        }
        self.bits[(d / 64) as usize] & (1 << (d % 64)) != 0
    }

    pub fn density(&self) -> f64 {
        self.count as f64 / self.n as f64
    }

    pub fn missing_below(&self, limit: u64) -> Vec<u64> {
        (1..=limit.min(self.n)).filter(|&d| !self.contains(d)).collect()
    }

    pub fn is_subset_of(&self, other: &DenominatorCensus) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn same_set(&self, other: &DenominatorCensus) -> bool {
        self.n == other.n && self.bits == other.bits
    }
}

pub const CENSUS_CAP: u64 = 10_000_000;

/// Census of D_A over [1, N]: breadth-first over bottom rows (c, d), which
/// is all the right-multiplication recurrence d' = a d + c, c' = d needs;
/// states dedupe per level and d only grows, so pruning at d > N is exact.
pub fn denominator_census(alphabet: &[i64], n: u64) -> Result<DenominatorCensus> {
    if n == 0 || n > CENSUS_CAP {
        return Err(Error::Resource(format!(
            "census bound must be in [1, {}]",
            CENSUS_CAP
        )));
    }
    let alpha: Vec<i64> = {
        let mut a = alphabet.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.is_empty() || a[0] < 1 {
            return Err(Error::Config("alphabet must be positive integers".into()));
        }
        a
    };
    let mut census = DenominatorCensus::new(&alpha, n);
    let mut level: Vec<(u64, u64)> = vec![(0, 1)];
    while !level.is_empty() {
        let mut next: Vec<(u64, u64)> = Vec::new();
        for &(c, d) in &level {
            for &a in &alpha {
                let d2 = (a as u64) * d + c;
                if d2 > n {
                    continue;
                }
                next.push((d, d2));
            }
        }
        next.sort_unstable();
        next.dedup();
        for &(_, d) in &next {
            census.mark(d);
        }
        level = next;
    }
    Ok(census)
}

/// Independent census oracle: exhaustive digit-string enumeration with
/// exact rational nested evaluation (no matrices, no column recurrence).
pub fn census_exhaustive_oracle(alphabet: &[i64], n: u64) -> Result<DenominatorCensus> {
    let alpha: Vec<i64> = {
        let mut a = alphabet.to_vec();
        a.sort_unstable();
        a.dedup();
        a
    };
    // maximal string length: the minimal continuant (all digits = min)
    // must stay <= n
    let amin = *alpha.first().ok_or_else(|| Error::Config("empty alphabet".into()))?;
    let mut max_len = 0usize;
    let (mut dprev, mut d) = (0u64, 1u64);
    loop {
        let d2 = amin as u64 * d + dprev;
        if d2 > n {
            break;
        }
        dprev = d;
        d = d2;
        max_len += 1;
    }
    if (alpha.len() as f64).powi(max_len as i32) > 5e7 {
        return Err(Error::Resource("oracle enumeration too large".into()));
    }
    let mut census = DenominatorCensus::new(&alpha, n);
    let mut digits: Vec<i64> = Vec::new();
    fn rec(
        alpha: &[i64],
        digits: &mut Vec<i64>,
        max_len: usize,
        n: u64,
        census: &mut DenominatorCensus,
    ) -> Result<()> {
        if !digits.is_empty() {
            let v = cf_eval_exact(digits)?;
            if let Some(d) = num_traits::ToPrimitive::to_u64(v.denom()) {
                if d >= 1 && d <= n {
                    census.mark(d);
                }
            }
        }
        if digits.len() == max_len {
            return Ok(());
        }
        for &a in alpha {
            digits.push(a);
            rec(alpha, digits, max_len, n, census)?;
            digits.pop();
        }
        Ok(())
    }
    rec(&alpha, &mut digits, max_len, n, &mut census)?;
    Ok(census)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bridge_small_cases() {
        // [2] -> (0 1; 1 2), fraction 1/2
        let m = cf_to_matrix(&[2]).unwrap();
        assert_eq!(m, IntMatrix2::new(0, 1, 1, 2));
        let (b, d) = matrix_to_fraction(&m);
        assert_eq!((b, d), (BigInt::from(1), BigInt::from(2)));
        // [1,2] -> (1 2; 1 3), fraction 2/3
        let m = cf_to_matrix(&[1, 2]).unwrap();
        assert_eq!(m, IntMatrix2::new(1, 2, 1, 3));
        let (b, d) = matrix_to_fraction(&m);
        assert_eq!((b, d), (BigInt::from(2), BigInt::from(3)));
        assert_eq!(inner_product_denominator(&m), BigInt::from(3));
        assert_eq!(
            inner_product_denominator(&IntMatrix2::identity()),
            BigInt::from(1)
        );
    }

    #[test]
    fn bridge_matches_exact_evaluation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let len = rng.gen_range(1..=12);
            let digits: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=5)).collect();
            let m = cf_to_matrix(&digits).unwrap();
            let (b, d) = matrix_to_fraction(&m);
            let v = cf_eval_exact(&digits).unwrap();
            assert_eq!(v, BigRational::new(b.clone(), d.clone()));
            // unimodularity forces coprimality
            assert_eq!(num_integer_gcd(&b, &d), BigInt::one());
        }
    }

    fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
        let (mut x, mut y) = (a.abs(), b.abs());
        while !y.is_zero() {
            let t = &x % &y;
            x = y;
            y = t;
        }
        x
    }

    #[test]
    fn fibonacci_census() {
        let c = denominator_census(&[1], 100).unwrap();
        let expect = [1u64, 2, 3, 5, 8, 13, 21, 34, 55, 89];
        assert_eq!(c.count, expect.len() as u64);
        for d in expect {
            assert!(c.contains(d));
        }
        assert!(!c.contains(4));
        // the exhaustive oracle agrees exactly
        let o = census_exhaustive_oracle(&[1], 100).unwrap();
        assert!(c.same_set(&o));
    }

    #[test]
    fn pruned_census_equals_oracle_12() {
        let c = denominator_census(&[1, 2], 1000).unwrap();
        let o = census_exhaustive_oracle(&[1, 2], 1000).unwrap();
        assert!(c.same_set(&o), "census {} vs oracle {}", c.count, o.count);
    }

    #[test]
    fn census_monotone_in_alphabet() {
        let c12 = denominator_census(&[1, 2], 500).unwrap();
        let c123 = denominator_census(&[1, 2, 3], 500).unwrap();
        assert!(c12.is_subset_of(&c123));
        assert!(c123.count > c12.count);
    }

    #[test]
    fn missing_denominators_reported() {
        let c = denominator_census(&[2, 3], 50).unwrap();
        let missing = c.missing_below(10);
        // 1 = [] is not reachable with digits >= 2 ([2] gives 1/2)
        assert!(missing.contains(&1));
        assert!(!missing.contains(&2));
    }
}
