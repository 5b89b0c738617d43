//! Exact arbitrary-precision combinatorics: signless Hermite coefficients,
//! Hermite polynomials, Stirling numbers of both kinds, generalized factorial
//! coefficients with parameter 2, and the usual factorial-family helpers.
//!
//! Everything in this module is computed with big integers; there is no
//! floating point anywhere. Triangular tables are built eagerly up to a
//! caller-specified `max_n` and are immutable afterward. Lookups in the
//! conventioned-zero regions (e.g. `H[n][k]` with `k > n/2`) return zero,
//! while lookups beyond `max_n` panic: a value that is mathematically zero is
//! distinct from one that was never computed.

use num::bigint::BigInt;
use num::{One, Zero};

/// n! as a big integer.
pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Double factorial n!! = n (n-2) (n-4) ... down to 1 or 2, with 0!! = (-1)!! = 1.
pub fn double_factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = n;
    while i >= 2 {
        acc *= i;
        i -= 2;
    }
    acc
}

/// Falling factorial x(x-1)...(x-n+1); equals 1 for n = 0.
pub fn falling_factorial(x: &BigInt, n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..n {
        acc *= x - BigInt::from(i);
    }
    acc
}

/// Binomial coefficient, zero outside 0 <= l <= n.
pub fn binomial(n: usize, l: i64) -> BigInt {
    if l < 0 || l as usize > n {
        return BigInt::zero();
    }
    let l = l as usize;
    // Pascal-free product form; exact since i! divides any i consecutive integers.
    let mut acc = BigInt::one();
    for i in 0..l.min(n - l) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Signless Hermite coefficient H_{n,k} = n! / (2^k k! (n-2k)!), with the
/// convention H_{n,k} = 0 for k < 0 or 2k > n.
pub fn hermite_coeff(n: usize, k: i64) -> BigInt {
    if k < 0 || 2 * k as usize > n {
        return BigInt::zero();
    }
    let k = k as usize;
    let num = factorial(n);
    let den = (BigInt::one() << k) * factorial(k) * factorial(n - 2 * k);
    num / den
}

/// Coefficients of the probabilist's Hermite polynomial He_n, dense,
/// index = power of x. The coefficient of x^{n-2k} is (-1)^k H_{n,k}.
pub fn hermite_polynomial(n: usize) -> Vec<BigInt> {
    let mut coeffs = vec![BigInt::zero(); n + 1];
    for k in 0..=n / 2 {
        let c = hermite_coeff(n, k as i64);
        coeffs[n - 2 * k] = if k % 2 == 0 { c } else { -c };
    }
    coeffs
}

/// Triangular table of signless Hermite coefficients, built purely from the
/// recurrence H_{n+1,k} = (n - 2k + 2) H_{n,k-1} + H_{n,k} with H_{0,0} = 1.
#[derive(Debug, Clone)]
pub struct HermiteCoeffTable {
    max_n: usize,
    rows: Vec<Vec<BigInt>>,
}

impl HermiteCoeffTable {
    pub fn build(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigInt::one()]);
        for n in 0..max_n {
            let prev = &rows[n];
            let width = (n + 1) / 2 + 1;
            let mut row = Vec::with_capacity(width);
            for k in 0..width {
                let a = if k >= 1 && k - 1 < prev.len() {
                    &prev[k - 1] * BigInt::from(n as i64 - 2 * k as i64 + 2)
                } else {
                    BigInt::zero()
                };
                let b = if k < prev.len() { prev[k].clone() } else { BigInt::zero() };
                row.push(a + b);
            }
            rows.push(row);
        }
        HermiteCoeffTable { max_n, rows }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// H_{n,k}; zero in the conventioned region, panics for n > max_n.
    pub fn get(&self, n: usize, k: i64) -> BigInt {
        assert!(n <= self.max_n, "HermiteCoeffTable: n = {n} exceeds max_n = {}", self.max_n);
        if k < 0 || 2 * k as usize > n {
            return BigInt::zero();
        }
        self.rows[n][k as usize].clone()
    }

    pub fn row(&self, n: usize) -> &[BigInt] {
        assert!(n <= self.max_n, "HermiteCoeffTable: n = {n} exceeds max_n = {}", self.max_n);
        &self.rows[n]
    }
}

/// Stirling numbers of the first (signed) and second kind up to max_n,
/// built from the standard recurrences
/// s(n+1,k) = s(n,k-1) - n s(n,k) and S(n+1,k) = S(n,k-1) + k S(n,k).
#[derive(Debug, Clone)]
pub struct StirlingTables {
    max_n: usize,
    first: Vec<Vec<BigInt>>,
    second: Vec<Vec<BigInt>>,
}

impl StirlingTables {
    pub fn build(max_n: usize) -> Self {
        let mut first: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
        let mut second: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
        for n in 0..max_n {
            let (pf, ps) = (&first[n], &second[n]);
            let mut rf = Vec::with_capacity(n + 2);
            let mut rs = Vec::with_capacity(n + 2);
            for k in 0..=n + 1 {
                let f_prev = if k >= 1 { pf[k - 1].clone() } else { BigInt::zero() };
                let f_same = if k <= n { &pf[k] * BigInt::from(n) } else { BigInt::zero() };
                rf.push(f_prev - f_same);
                let s_prev = if k >= 1 { ps[k - 1].clone() } else { BigInt::zero() };
                let s_same = if k <= n { &ps[k] * BigInt::from(k) } else { BigInt::zero() };
                rs.push(s_prev + s_same);
            }
            first.push(rf);
            second.push(rs);
        }
        StirlingTables { max_n, first, second }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Signed first-kind s(n,k); zero for k > n.
    pub fn first(&self, n: usize, k: usize) -> BigInt {
        assert!(n <= self.max_n, "StirlingTables: n = {n} exceeds max_n = {}", self.max_n);
        if k > n {
            return BigInt::zero();
        }
        self.first[n][k].clone()
    }

    /// Second-kind S(n,k); zero for k > n.
    pub fn second(&self, n: usize, k: usize) -> BigInt {
        assert!(n <= self.max_n, "StirlingTables: n = {n} exceeds max_n = {}", self.max_n);
        if k > n {
            return BigInt::zero();
        }
        self.second[n][k].clone()
    }

    pub fn first_row(&self, n: usize) -> &[BigInt] {
        &self.first[n]
    }

    pub fn second_row(&self, n: usize) -> &[BigInt] {
        &self.second[n]
    }
}

/// s(n,k), building a throwaway table. Prefer [`StirlingTables`] in loops.
pub fn stirling_first(n: usize, k: usize) -> BigInt {
    StirlingTables::build(n).first(n, k)
}

/// S(n,k), building a throwaway table. Prefer [`StirlingTables`] in loops.
pub fn stirling_second(n: usize, k: usize) -> BigInt {
    StirlingTables::build(n).second(n, k)
}

/// Generalized factorial coefficients C(n,l;2), the connection coefficients
/// expanding the falling factorial (2m) falling n in the basis of m falling l.
///
/// Built from the recurrence C(n+1,l;2) = (2l - n) C(n,l;2) + 2 C(n,l-1;2)
/// with C(0,0;2) = 1, C(n,0;2) = 0 for n > 0, and C(n,l;2) = 0 for l > n.
#[derive(Debug, Clone)]
pub struct GenFactorialTable {
    max_n: usize,
    rows: Vec<Vec<BigInt>>,
}

impl GenFactorialTable {
    pub fn build(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
        for n in 0..max_n {
            let prev = &rows[n];
            let mut row = Vec::with_capacity(n + 2);
            for l in 0..=n + 1 {
                let same = if l <= n {
                    &prev[l] * BigInt::from(2 * l as i64 - n as i64)
                } else {
                    BigInt::zero()
                };
                let below = if l >= 1 { &prev[l - 1] * BigInt::from(2) } else { BigInt::zero() };
                row.push(same + below);
            }
            rows.push(row);
        }
        GenFactorialTable { max_n, rows }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// C(n,l;2); zero for l > n or l < 0, panics for n > max_n.
    pub fn get(&self, n: usize, l: i64) -> BigInt {
        assert!(n <= self.max_n, "GenFactorialTable: n = {n} exceeds max_n = {}", self.max_n);
        if l < 0 || l as usize > n {
            return BigInt::zero();
        }
        self.rows[n][l as usize].clone()
    }

    pub fn row(&self, n: usize) -> &[BigInt] {
        assert!(n <= self.max_n, "GenFactorialTable: n = {n} exceeds max_n = {}", self.max_n);
        &self.rows[n]
    }
}

/// C(n,l;2) through its Stirling-number representation,
/// sum over k of 2^k s(n,k) S(k,l).
///
/// Note the exponent: the sum runs with 2^k on the inner index. The variant
/// with 2^l fails already at (n,l) = (2,1), while 2^k reproduces the
/// recurrence table and the falling-factorial expansion everywhere.
pub fn gen_factorial_via_stirling(n: usize, l: usize) -> BigInt {
    let tables = StirlingTables::build(n);
    let mut acc = BigInt::zero();
    for k in l..=n {
        acc += (BigInt::one() << k) * tables.first(n, k) * tables.second(k, l);
    }
    acc
}

/// Checks (2m) falling n == sum over l of C(n,l;2) * (m falling l), exactly.
pub fn verify_falling_identity(n: usize, m: usize) -> bool {
    let table = GenFactorialTable::build(n);
    let lhs = falling_factorial(&BigInt::from(2 * m), n);
    let m_big = BigInt::from(m);
    let mut rhs = BigInt::zero();
    for l in 0..=n {
        rhs += table.get(n, l as i64) * falling_factorial(&m_big, l);
    }
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn factorial_small_and_big() {
        assert_eq!(factorial(0), big(1));
        assert_eq!(factorial(5), big(120));
        // 25! exceeds 64-bit range; oracle below is an independent iterative product
        // over BigInt built digit-by-digit via string parsing.
        let expected: BigInt = "15511210043330985984000000".parse().unwrap();
        assert_eq!(factorial(25), expected);
    }

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(0), big(1));
        assert_eq!(double_factorial(5), big(15));
        assert_eq!(double_factorial(9), big(945));
        // n! = n!! (n-1)!!
        for n in 1..30usize {
            assert_eq!(double_factorial(n) * double_factorial(n - 1), factorial(n));
        }
    }

    #[test]
    fn falling_factorial_values() {
        assert_eq!(falling_factorial(&big(3), 5), big(0));
        assert_eq!(falling_factorial(&big(6), 1), big(6));
        assert_eq!(falling_factorial(&big(6), 3), big(120));
        assert_eq!(falling_factorial(&big(6), 0), big(1));
    }

    #[test]
    fn binomial_against_pascal() {
        assert_eq!(binomial(7, 0), big(1));
        assert_eq!(binomial(4, 2), big(6));
        assert_eq!(binomial(4, 5), big(0));
        assert_eq!(binomial(4, -1), big(0));
        // Pascal recurrence oracle
        let mut row: Vec<BigInt> = vec![BigInt::one()];
        for n in 1..=20usize {
            let mut next = vec![BigInt::one()];
            for k in 1..n {
                next.push(&row[k - 1] + &row[k]);
            }
            next.push(BigInt::one());
            row = next;
            for (k, v) in row.iter().enumerate() {
                assert_eq!(&binomial(n, k as i64), v, "n={n} k={k}");
            }
        }
        assert_eq!(binomial(20, 10), big(184756));
    }

    #[test]
    fn hermite_coeff_values() {
        assert_eq!(hermite_coeff(1, 0), big(1));
        for n in 0..40usize {
            assert_eq!(hermite_coeff(n, 0), big(1));
        }
        assert_eq!(hermite_coeff(4, 2), big(3));
        assert_eq!(hermite_coeff(3, 2), big(0));
        assert_eq!(hermite_coeff(2, -1), big(0));
    }

    #[test]
    fn hermite_table_matches_formula() {
        let table = HermiteCoeffTable::build(60);
        for n in 0..=60usize {
            for k in 0..=(n / 2 + 1) as i64 {
                assert_eq!(table.get(n, k), hermite_coeff(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn hermite_table_row_four() {
        let table = HermiteCoeffTable::build(4);
        let row: Vec<BigInt> = table.row(4).to_vec();
        assert_eq!(row, vec![big(1), big(6), big(3)]);
    }

    #[test]
    fn hermite_odd_boundary() {
        // H_{2l+2, l+1} = H_{2l+1, l}
        let table = HermiteCoeffTable::build(42);
        for l in 0..=20usize {
            assert_eq!(
                table.get(2 * l + 2, (l + 1) as i64),
                table.get(2 * l + 1, l as i64),
                "l={l}"
            );
        }
    }

    #[test]
    fn hermite_polynomials_small() {
        assert_eq!(hermite_polynomial(0), vec![big(1)]);
        // He_3 = x^3 - 3x
        assert_eq!(hermite_polynomial(3), vec![big(0), big(-3), big(0), big(1)]);
        // He_4 = x^4 - 6x^2 + 3
        assert_eq!(hermite_polynomial(4), vec![big(3), big(0), big(-6), big(0), big(1)]);
    }

    #[test]
    fn hermite_polynomial_parity() {
        for n in 0..=25usize {
            let coeffs = hermite_polynomial(n);
            for (p, c) in coeffs.iter().enumerate() {
                if (n - p) % 2 != 0 {
                    assert!(c.is_zero(), "He_{n} has a wrong-parity x^{p} term");
                }
            }
        }
    }

    #[test]
    fn stirling_values() {
        let t = StirlingTables::build(10);
        assert_eq!(t.first(2, 1), big(-1));
        assert_eq!(t.second(2, 1), big(1));
        assert_eq!(t.first(4, 2), big(11));
        assert_eq!(t.second(4, 2), big(7));
        for n in 0..=10usize {
            assert_eq!(t.first(n, n), big(1));
            assert_eq!(t.second(n, n), big(1));
            if n > 0 {
                assert_eq!(t.first(n, 0), big(0));
                assert_eq!(t.second(n, 0), big(0));
            }
        }
    }

    #[test]
    fn stirling_row_sums() {
        // sum_k S(n,k) x falling k = x^n at x = 3, brute force
        let t = StirlingTables::build(8);
        let x = big(3);
        for n in 0..=8usize {
            let mut acc = BigInt::zero();
            for k in 0..=n {
                acc += t.second(n, k) * falling_factorial(&x, k);
            }
            assert_eq!(acc, x.pow(n as u32));
        }
    }

    #[test]
    fn genfact_table_values() {
        let t = GenFactorialTable::build(10);
        assert_eq!(t.get(0, 0), big(1));
        assert_eq!(t.get(3, 2), big(12));
        assert_eq!(t.get(3, 1), big(0));
        for n in 0..=10usize {
            assert_eq!(t.get(n, n as i64), BigInt::one() << n, "C(n,n;2) = 2^n at n={n}");
        }
    }

    #[test]
    fn genfact_vanishing_region() {
        let t = GenFactorialTable::build(60);
        for n in 0..=60usize {
            for l in 0..(n + 1) / 2 {
                assert!(t.get(n, l as i64).is_zero(), "C({n},{l};2) should vanish");
            }
        }
    }

    #[test]
    fn genfact_stirling_representation() {
        let t = GenFactorialTable::build(30);
        for n in 0..=30usize {
            for l in 0..=n {
                assert_eq!(gen_factorial_via_stirling(n, l), t.get(n, l as i64), "n={n} l={l}");
            }
        }
        assert_eq!(gen_factorial_via_stirling(2, 1), big(2));
        assert_eq!(gen_factorial_via_stirling(4, 2), big(12));
    }

    #[test]
    fn falling_identity_spot_checks() {
        assert!(verify_falling_identity(2, 5));
        for m in 0..10usize {
            assert!(verify_falling_identity(0, m));
        }
    }

    #[test]
    fn lemma2_divisibility() {
        // 2^{n-k} divides C(n, n-k; 2)
        let t = GenFactorialTable::build(60);
        for n in 0..=60usize {
            for k in 0..=n / 2 {
                let c = t.get(n, (n - k) as i64);
                let p = BigInt::one() << (n - k);
                assert!((&c % &p).is_zero(), "2^{} does not divide C({n},{};2)", n - k, n - k);
            }
        }
    }

    #[test]
    #[should_panic(expected = "exceeds max_n")]
    fn table_out_of_range_panics() {
        let t = HermiteCoeffTable::build(3);
        let _ = t.get(4, 0);
    }
}
