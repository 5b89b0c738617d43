//! Test-function representations: exact rational-coefficient polynomials and
//! a small catalog of analytic functions (exp, sin, cos with a frequency
//! parameter) that is closed under differentiation and has closed-form
//! Gaussian expectations. The catalog supplies the exact derivative averages
//! the reduction engines consume, and doubles as analytic ground truth.

use num::bigint::BigInt;
use num::{BigRational, One, ToPrimitive, Zero};

use crate::stein_core::{self, GaussianLaw};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FunctionError {
    #[error("catalog parameter must be finite and nonzero, got {0}")]
    BadParameter(f64),
    #[error("cannot parse function spec '{0}'")]
    BadSpec(String),
}

/// Polynomial with exact rational coefficients, index = power. Trailing zero
/// coefficients are stripped; the zero polynomial is the empty list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        RationalPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_integers(&[1])
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect())
    }

    /// x^n
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        Self::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, power: usize) -> BigRational {
        self.coeffs.get(power).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Exact order-th derivative.
    pub fn derivative(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        for _ in 0..order {
            if coeffs.len() <= 1 {
                return Self::zero();
            }
            coeffs = coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, c)| c * BigRational::from_integer(BigInt::from(p)))
                .collect();
        }
        Self::new(coeffs)
    }

    /// Multiply by x^n.
    pub fn shift_up(&self, n: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigRational::zero(); n];
        coeffs.extend(self.coeffs.iter().cloned());
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        // Horner
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64().unwrap())
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// Exact E[p(X)] for rational law parameters, via raw moments.
    pub fn expectation_rational(&self, mu: &BigRational, sigma2: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (j, c) in self.coeffs.iter().enumerate() {
            acc += c * stein_core::raw_moment_rational(j, mu, sigma2);
        }
        acc
    }

    /// Parse "p/q" rationals or integers, comma separated, lowest power first.
    pub fn parse(s: &str) -> Result<Self, FunctionError> {
        let mut coeffs = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let r = if let Some((p, q)) = part.split_once('/') {
                let num: BigInt =
                    p.trim().parse().map_err(|_| FunctionError::BadSpec(s.to_string()))?;
                let den: BigInt =
                    q.trim().parse().map_err(|_| FunctionError::BadSpec(s.to_string()))?;
                if den.is_zero() {
                    return Err(FunctionError::BadSpec(s.to_string()));
                }
                BigRational::new(num, den)
            } else {
                let num: BigInt =
                    part.parse().map_err(|_| FunctionError::BadSpec(s.to_string()))?;
                BigRational::from_integer(num)
            };
            coeffs.push(r);
        }
        Ok(Self::new(coeffs))
    }

    pub fn to_spec_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.coeffs
            .iter()
            .map(|c| {
                if c.denom().is_one() {
                    c.numer().to_string()
                } else {
                    format!("{}/{}", c.numer(), c.denom())
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// A catalog test function g. Exp/Sin/Cos carry a frequency parameter `a` and
/// a scale factor so the catalog stays closed under differentiation
/// (e.g. d/dx sin(ax) = a cos(ax)). Constructors set scale = 1.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticFunction {
    Poly(RationalPolynomial),
    Exp { a: f64, scale: f64 },
    Sin { a: f64, scale: f64 },
    Cos { a: f64, scale: f64 },
}

impl AnalyticFunction {
    pub fn poly(p: RationalPolynomial) -> Self {
        AnalyticFunction::Poly(p)
    }

    pub fn constant_one() -> Self {
        AnalyticFunction::Poly(RationalPolynomial::one())
    }

    pub fn exp(a: f64) -> Result<Self, FunctionError> {
        Self::check_param(a)?;
        Ok(AnalyticFunction::Exp { a, scale: 1.0 })
    }

    pub fn sin(a: f64) -> Result<Self, FunctionError> {
        Self::check_param(a)?;
        Ok(AnalyticFunction::Sin { a, scale: 1.0 })
    }

    pub fn cos(a: f64) -> Result<Self, FunctionError> {
        Self::check_param(a)?;
        Ok(AnalyticFunction::Cos { a, scale: 1.0 })
    }

    fn check_param(a: f64) -> Result<(), FunctionError> {
        if !a.is_finite() || a == 0.0 {
            return Err(FunctionError::BadParameter(a));
        }
        Ok(())
    }

    /// Parse "poly:<coeffs>", "exp:<a>", "sin:<a>", "cos:<a>".
    pub fn parse(spec: &str) -> Result<Self, FunctionError> {
        let (kind, arg) =
            spec.split_once(':').ok_or_else(|| FunctionError::BadSpec(spec.to_string()))?;
        match kind.trim() {
            "poly" => Ok(AnalyticFunction::Poly(RationalPolynomial::parse(arg)?)),
            "exp" | "sin" | "cos" => {
                let a: f64 =
                    arg.trim().parse().map_err(|_| FunctionError::BadSpec(spec.to_string()))?;
                match kind.trim() {
                    "exp" => Self::exp(a),
                    "sin" => Self::sin(a),
                    _ => Self::cos(a),
                }
            }
            _ => Err(FunctionError::BadSpec(spec.to_string())),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            AnalyticFunction::Poly(p) => p.eval_f64(x),
            AnalyticFunction::Exp { a, scale } => scale * (a * x).exp(),
            AnalyticFunction::Sin { a, scale } => scale * (a * x).sin(),
            AnalyticFunction::Cos { a, scale } => scale * (a * x).cos(),
        }
    }

    /// Exact closed-form derivative of the given order, inside the catalog.
    pub fn derivative(&self, order: usize) -> AnalyticFunction {
        match self {
            AnalyticFunction::Poly(p) => AnalyticFunction::Poly(p.derivative(order)),
            AnalyticFunction::Exp { a, scale } => {
                AnalyticFunction::Exp { a: *a, scale: scale * a.powi(order as i32) }
            }
            AnalyticFunction::Sin { a, scale } | AnalyticFunction::Cos { a, scale } => {
                let factor = scale * a.powi(order as i32);
                let starts_with_sin = matches!(self, AnalyticFunction::Sin { .. });
                // sin, cos, -sin, -cos cycle; cos enters the cycle one step ahead
                let phase = if starts_with_sin { order % 4 } else { (order + 1) % 4 };
                match phase {
                    0 => AnalyticFunction::Sin { a: *a, scale: factor },
                    1 => AnalyticFunction::Cos { a: *a, scale: factor },
                    2 => AnalyticFunction::Sin { a: *a, scale: -factor },
                    _ => AnalyticFunction::Cos { a: *a, scale: -factor },
                }
            }
        }
    }

    pub fn derivative_at(&self, order: usize, x: f64) -> f64 {
        self.derivative(order).eval(x)
    }

    /// Closed-form E[f(X)]:
    /// E[exp(aX)] = exp(a mu + a^2 sigma^2 / 2),
    /// E[sin(aX)] = exp(-a^2 sigma^2 / 2) sin(a mu),
    /// E[cos(aX)] = exp(-a^2 sigma^2 / 2) cos(a mu),
    /// polynomials via raw moments.
    pub fn exact_expectation(&self, law: &GaussianLaw) -> f64 {
        let (mu, s2) = (law.mu(), law.sigma2());
        match self {
            AnalyticFunction::Poly(p) => p
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, c)| c.to_f64().unwrap() * stein_core::raw_moment_f64(j, law))
                .sum(),
            AnalyticFunction::Exp { a, scale } => scale * (a * mu + a * a * s2 / 2.0).exp(),
            AnalyticFunction::Sin { a, scale } => {
                scale * (-a * a * s2 / 2.0).exp() * (a * mu).sin()
            }
            AnalyticFunction::Cos { a, scale } => {
                scale * (-a * a * s2 / 2.0).exp() * (a * mu).cos()
            }
        }
    }

    /// E[f^(order)(X)], exactly within the catalog's closed forms.
    pub fn derivative_average(&self, order: usize, law: &GaussianLaw) -> f64 {
        self.derivative(order).exact_expectation(law)
    }
}

/// Exact rational E[p(X) X^n] by expanding p(x) x^n in raw moments. This is
/// the brute-force oracle for polynomial inputs.
pub fn poly_expectation_product(
    p: &RationalPolynomial,
    n: usize,
    mu: &BigRational,
    sigma2: &BigRational,
) -> BigRational {
    p.shift_up(n).expectation_rational(mu, sigma2)
}

/// E[X^n exp(aX)] as the n-th derivative in a of the moment-generating
/// function exp(a mu + a^2 sigma^2 / 2), computed symbolically in the
/// (polynomial x exponential) closed family: repeated differentiation maps a
/// prefactor polynomial P to P' + (mu + a sigma^2) P.
pub fn mgf_product_oracle(n: usize, a: f64, law: &GaussianLaw) -> f64 {
    let (mu, s2) = (law.mu(), law.sigma2());
    // prefactor polynomial in the differentiation variable, index = power
    let mut pre: Vec<f64> = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; pre.len() + 1];
        for (p, c) in pre.iter().enumerate() {
            if p >= 1 {
                next[p - 1] += c * p as f64; // P'
            }
            next[p] += c * mu; // mu P
            next[p + 1] += c * s2; // sigma^2 u P
        }
        pre = next;
    }
    let poly_at_a = pre.iter().rev().fold(0.0, |acc, c| acc * a + c);
    poly_at_a * (a * mu + a * a * s2 / 2.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn poly_normalization() {
        let p = RationalPolynomial::from_integers(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        assert!(RationalPolynomial::from_integers(&[0, 0]).is_zero());
        assert_eq!(RationalPolynomial::zero().degree(), None);
    }

    #[test]
    fn poly_derivatives() {
        let cube = RationalPolynomial::monomial(3);
        assert_eq!(cube.derivative(1), RationalPolynomial::from_integers(&[0, 0, 3]));
        assert!(cube.derivative(4).is_zero());
        // (5x^4 - x^2)'' = 60x^2 - 2
        let p = RationalPolynomial::from_integers(&[0, 0, -1, 0, 5]);
        assert_eq!(p.derivative(2), RationalPolynomial::from_integers(&[-2, 0, 60]));
    }

    #[test]
    fn poly_parse_roundtrip() {
        let p = RationalPolynomial::parse("1, -2/3, 5").unwrap();
        assert_eq!(p.coeff(1), rat(-2, 3));
        assert_eq!(RationalPolynomial::parse(&p.to_spec_string()).unwrap(), p);
        assert!(RationalPolynomial::parse("1,x").is_err());
        assert!(RationalPolynomial::parse("1/0").is_err());
    }

    #[test]
    fn catalog_rejects_bad_parameters() {
        assert!(AnalyticFunction::exp(0.0).is_err());
        assert!(AnalyticFunction::sin(f64::INFINITY).is_err());
        assert!(AnalyticFunction::cos(2.0).is_ok());
    }

    #[test]
    fn catalog_derivatives() {
        let f = AnalyticFunction::exp(3.0).unwrap();
        match f.derivative(4) {
            AnalyticFunction::Exp { a, scale } => {
                assert_eq!(a, 3.0);
                assert_eq!(scale, 81.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        // sin'' = -a^2 sin
        let f = AnalyticFunction::sin(2.0).unwrap();
        match f.derivative(2) {
            AnalyticFunction::Sin { scale, .. } => assert_eq!(scale, -4.0),
            other => panic!("unexpected {other:?}"),
        }
        // cos''' = a^3 sin
        let f = AnalyticFunction::cos(2.0).unwrap();
        match f.derivative(3) {
            AnalyticFunction::Sin { scale, .. } => assert_eq!(scale, 8.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derivative_composes() {
        let fs = [
            AnalyticFunction::exp(0.7).unwrap(),
            AnalyticFunction::sin(1.3).unwrap(),
            AnalyticFunction::cos(-0.4).unwrap(),
            AnalyticFunction::Poly(RationalPolynomial::from_integers(&[1, 0, 2, 5])),
        ];
        for f in &fs {
            for j in 0..4usize {
                for k in 0..4usize {
                    let lhs = f.derivative(j + k);
                    let rhs = f.derivative(j).derivative(k);
                    for &x in &[-1.5, 0.0, 0.3, 2.0] {
                        let (a, b) = (lhs.eval(x), rhs.eval(x));
                        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{f:?} j={j} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_expectations() {
        let law = GaussianLaw::zero_mean(1.0).unwrap();
        let e = AnalyticFunction::exp(1.0).unwrap().exact_expectation(&law);
        assert!((e - (0.5f64).exp()).abs() < 1e-15);
        let s = AnalyticFunction::sin(1.0).unwrap().exact_expectation(&law);
        assert_eq!(s, 0.0);
        // E[X^4] = 3 for standard normal
        let x4 = AnalyticFunction::Poly(RationalPolynomial::monomial(4));
        assert!((x4.exact_expectation(&law) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn poly_expectation_product_values() {
        let zero = BigRational::zero();
        let one = BigRational::one();
        let p1 = RationalPolynomial::one();
        assert_eq!(poly_expectation_product(&p1, 2, &zero, &one), one);
        let px = RationalPolynomial::monomial(1);
        assert_eq!(poly_expectation_product(&px, 1, &zero, &one), one);
        // E[(X^2+1) X^2] = E[X^4] + E[X^2] = 4
        let p = RationalPolynomial::from_integers(&[1, 0, 1]);
        assert_eq!(poly_expectation_product(&p, 2, &zero, &one), rat(4, 1));
    }

    #[test]
    fn mgf_oracle_values() {
        let law = GaussianLaw::zero_mean(1.0).unwrap();
        let a = 0.7;
        let m0 = mgf_product_oracle(0, a, &law);
        assert!((m0 - (a * a / 2.0f64).exp()).abs() < 1e-15);
        // n=1, mu=0: a sigma^2 exp(a^2 sigma^2 / 2)
        let m1 = mgf_product_oracle(1, a, &law);
        assert!((m1 - a * (a * a / 2.0f64).exp()).abs() < 1e-15);
        let m1 = mgf_product_oracle(1, 1.0, &law);
        assert!((m1 - (0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn mgf_oracle_matches_raw_moments() {
        // at a -> 0 the oracle reduces to E[X^n]
        let law = GaussianLaw::new(0.5, 2.0).unwrap();
        for n in 0..=8usize {
            let direct = stein_core::raw_moment_f64(n, &law);
            // evaluate the prefactor construction at a tiny a via the closed form at a=0:
            // mgf_product_oracle with a = 0 is exactly the constant coefficient path
            let via_mgf = {
                // a = 0 is outside the catalog restriction for Exp but fine here:
                // the oracle is a plain function of (n, a, law)
                mgf_product_oracle(n, 0.0, &law)
            };
            assert!(
                (direct - via_mgf).abs() <= 1e-9 * (1.0 + direct.abs()),
                "n={n}: {direct} vs {via_mgf}"
            );
        }
    }
}
