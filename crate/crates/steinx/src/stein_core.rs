//! Symbolic reduction of E[g(X) X^n] into weighted sums of derivative
//! averages E[g^(l)(X)].
//!
//! Two routes produce the same [`Reduction`]: the closed-form engines
//! ([`reduce_zero_mean`], [`reduce_general_mean`]) that write the answer down
//! directly from the Hermite-coefficient formula, and the
//! [`recursive_stein_rewriter`] that applies the classical one-step lemma
//! E[h(X) X] = sigma^2 E[h'(X)] over and over with symbolic product-rule
//! expansion, mirroring the induction mechanics. The rewriter is deliberately
//! independent and serves as the brute-force oracle for the closed forms.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{binomial, double_factorial, hermite_coeff};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SteinError {
    #[error("variance must be strictly positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("no derivative average supplied for order {0}")]
    MissingDerivativeAverage(usize),
    #[error("derivative average for order {0} is not finite")]
    NonFiniteAverage(usize),
}

/// Parameters (mu, sigma^2) of the Gaussian law of X. Degenerate laws with
/// sigma^2 <= 0 are rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw {
    mu: f64,
    sigma2: f64,
}

impl GaussianLaw {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self, SteinError> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() || !mu.is_finite() {
            return Err(SteinError::NonPositiveVariance(sigma2));
        }
        Ok(GaussianLaw { mu, sigma2 })
    }

    pub fn zero_mean(sigma2: f64) -> Result<Self, SteinError> {
        Self::new(0.0, sigma2)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    ZeroMean,
    GeneralMean,
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawKind::ZeroMean => write!(f, "zero_mean"),
            LawKind::GeneralMean => write!(f, "general_mean"),
        }
    }
}

/// One addend of the reduction:
/// coeff * mu^mu_power * (sigma^2)^sigma2_power * E[g^(derivative_order)(X)].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTerm {
    pub derivative_order: usize,
    pub coeff: BigInt,
    pub mu_power: usize,
    pub sigma2_power: usize,
}

impl ReductionTerm {
    fn key(&self) -> (usize, usize, usize) {
        (self.derivative_order, self.mu_power, self.sigma2_power)
    }
}

/// Canonical symbolic value of E[g(X) X^n]: a duplicate-free term list sorted
/// by (derivative_order, mu_power, sigma2_power).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub n: usize,
    pub law_kind: LawKind,
    pub terms: Vec<ReductionTerm>,
}

impl Reduction {
    /// Sorts, merges duplicate keys by coefficient addition, drops zeros.
    pub fn canonicalize(mut terms: Vec<ReductionTerm>, n: usize, law_kind: LawKind) -> Self {
        terms.sort_by_key(|t| t.key());
        let mut merged: Vec<ReductionTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.key() == t.key() => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        Reduction { n, law_kind, terms: merged }
    }

    /// Orders of derivatives appearing in the reduction, ascending.
    pub fn derivative_orders(&self) -> Vec<usize> {
        let mut orders: Vec<usize> = self.terms.iter().map(|t| t.derivative_order).collect();
        orders.dedup();
        orders
    }
}

/// Closed form: E[g(X) X^n] for zero-mean X as
/// sum over k of H_{n,k} sigma^{2(n-k)} E[g^(n-2k)(X)].
pub fn reduce_zero_mean(n: usize) -> Reduction {
    let terms = (0..=n / 2)
        .map(|k| ReductionTerm {
            derivative_order: n - 2 * k,
            coeff: hermite_coeff(n, k as i64),
            mu_power: 0,
            sigma2_power: n - k,
        })
        .collect();
    Reduction::canonicalize(terms, n, LawKind::ZeroMean)
}

/// Closed form for general mean: the double sum
/// sum over l, k of binom(n,l) H_{l,k} mu^{n-l} sigma^{2(l-k)} E[g^(l-2k)(X)],
/// produced in uncollected shape and then canonically merged.
pub fn reduce_general_mean(n: usize) -> Reduction {
    let mut terms = Vec::new();
    for l in 0..=n {
        let b = binomial(n, l as i64);
        for k in 0..=l / 2 {
            terms.push(ReductionTerm {
                derivative_order: l - 2 * k,
                coeff: &b * hermite_coeff(l, k as i64),
                mu_power: n - l,
                sigma2_power: l - k,
            });
        }
    }
    Reduction::canonicalize(terms, n, LawKind::GeneralMean)
}

/// Central moment of a zero-mean Gaussian as `coeff * sigma^sigma_power`:
/// zero for odd n, (n-1)!! sigma^n for even n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralMoment {
    pub coeff: BigInt,
    pub sigma_power: usize,
}

impl CentralMoment {
    pub fn eval(&self, sigma2: f64) -> f64 {
        debug_assert!(self.sigma_power % 2 == 0 || self.coeff.is_zero());
        self.coeff.to_f64().unwrap() * sigma2.powi((self.sigma_power / 2) as i32)
    }
}

pub fn central_moment(n: usize) -> CentralMoment {
    let coeff = if n % 2 == 1 { BigInt::zero() } else { double_factorial(n.saturating_sub(1)) };
    CentralMoment { coeff, sigma_power: n }
}

/// One monomial of a raw moment: coeff * mu^mu_power * (sigma^2)^sigma2_power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTerm {
    pub coeff: BigInt,
    pub mu_power: usize,
    pub sigma2_power: usize,
}

/// E[X^n] as an exact integer-coefficient polynomial in mu and sigma^2,
/// obtained by specializing the general-mean reduction to g = 1 (only the
/// zeroth-derivative terms survive).
pub fn raw_moment(n: usize) -> Vec<MomentTerm> {
    reduce_general_mean(n)
        .terms
        .into_iter()
        .filter(|t| t.derivative_order == 0)
        .map(|t| MomentTerm { coeff: t.coeff, mu_power: t.mu_power, sigma2_power: t.sigma2_power })
        .collect()
}

pub fn raw_moment_f64(n: usize, law: &GaussianLaw) -> f64 {
    raw_moment(n)
        .iter()
        .map(|t| {
            t.coeff.to_f64().unwrap()
                * law.mu().powi(t.mu_power as i32)
                * law.sigma2().powi(t.sigma2_power as i32)
        })
        .sum()
}

/// Exact rational value of E[X^n] for rational mu, sigma^2.
pub fn raw_moment_rational(n: usize, mu: &BigRational, sigma2: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for t in raw_moment(n) {
        let mut term = BigRational::from_integer(t.coeff);
        for _ in 0..t.mu_power {
            term *= mu;
        }
        for _ in 0..t.sigma2_power {
            term *= sigma2;
        }
        acc += term;
    }
    acc
}

/// Instrumentation counters of a reduction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ReductionStats {
    pub final_term_count: usize,
    pub peak_intermediate_term_count: usize,
    pub rewrite_steps: usize,
}

/// Reduction together with its run statistics.
#[derive(Debug, Clone)]
pub struct RewriterRun {
    pub reduction: Reduction,
    pub stats: ReductionStats,
}

// Working term of the rewriter: coeff * mu^mu_power * sigma^{2 sigma2_power}
// * E[g^(order)(X) * Xhat^xpow], with Xhat the zero-mean variable.
#[derive(Debug, Clone)]
struct WorkTerm {
    coeff: BigInt,
    mu_power: usize,
    sigma2_power: usize,
    order: usize,
    xpow: usize,
}

impl WorkTerm {
    fn key(&self) -> (usize, usize, usize, usize) {
        (self.order, self.xpow, self.mu_power, self.sigma2_power)
    }
}

fn merge_work(mut terms: Vec<WorkTerm>) -> Vec<WorkTerm> {
    terms.sort_by_key(|t| t.key());
    let mut merged: Vec<WorkTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        match merged.last_mut() {
            Some(last) if last.key() == t.key() => last.coeff += t.coeff,
            _ => merged.push(t),
        }
    }
    merged.retain(|t| !t.coeff.is_zero());
    merged
}

/// Reduces E[g(X) X^n] by repeated application of the classical one-step
/// lemma, one pass at a time: in each pass every term still carrying a power
/// of X receives a single Stein application (with the Leibniz split of the
/// product derivative), then like terms are collected. This is the
/// brute-force symbolic oracle for the closed forms.
///
/// For a general-mean law the variable is first shifted, X = mu + Xhat with
/// Xhat zero-mean, and (mu + Xhat)^n binomially expanded; derivatives of
/// g(mu + .) are derivatives of g.
pub fn recursive_stein_rewriter(n: usize, law_kind: LawKind) -> RewriterRun {
    let mut work: Vec<WorkTerm> = match law_kind {
        LawKind::ZeroMean => vec![WorkTerm {
            coeff: BigInt::one(),
            mu_power: 0,
            sigma2_power: 0,
            order: 0,
            xpow: n,
        }],
        LawKind::GeneralMean => (0..=n)
            .map(|j| WorkTerm {
                coeff: binomial(n, j as i64),
                mu_power: n - j,
                sigma2_power: 0,
                order: 0,
                xpow: j,
            })
            .collect(),
    };
    let mut steps = 0usize;
    let mut peak = work.len();

    while work.iter().any(|t| t.xpow > 0) {
        let mut next: Vec<WorkTerm> = Vec::with_capacity(2 * work.len());
        for t in work {
            if t.xpow == 0 {
                next.push(t);
                continue;
            }
            // E[h(X) X] = sigma^2 E[h'(X)] with h = g^(order) x^(xpow-1);
            // h' = g^(order+1) x^(xpow-1) + (xpow-1) g^(order) x^(xpow-2).
            steps += 1;
            next.push(WorkTerm {
                coeff: t.coeff.clone(),
                mu_power: t.mu_power,
                sigma2_power: t.sigma2_power + 1,
                order: t.order + 1,
                xpow: t.xpow - 1,
            });
            if t.xpow >= 2 {
                next.push(WorkTerm {
                    coeff: t.coeff * BigInt::from(t.xpow - 1),
                    mu_power: t.mu_power,
                    sigma2_power: t.sigma2_power + 1,
                    order: t.order,
                    xpow: t.xpow - 2,
                });
            }
        }
        peak = peak.max(next.len());
        work = merge_work(next);
        peak = peak.max(work.len());
    }

    let terms: Vec<ReductionTerm> = work
        .into_iter()
        .map(|t| ReductionTerm {
            derivative_order: t.order,
            coeff: t.coeff,
            mu_power: t.mu_power,
            sigma2_power: t.sigma2_power,
        })
        .collect();
    let reduction = Reduction::canonicalize(terms, n, law_kind);
    let final_count = reduction.terms.len();
    RewriterRun {
        reduction,
        stats: ReductionStats {
            final_term_count: final_count,
            peak_intermediate_term_count: peak.max(final_count),
            rewrite_steps: steps,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMethod {
    ClosedForm,
    Recursive,
}

impl fmt::Display for ReductionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionMethod::ClosedForm => write!(f, "closed_form"),
            ReductionMethod::Recursive => write!(f, "recursive"),
        }
    }
}

/// Counters for one method. Closed form always reports zero rewrite steps and
/// peak equal to final.
pub fn reduction_stats(n: usize, method: ReductionMethod, law_kind: LawKind) -> ReductionStats {
    match method {
        ReductionMethod::ClosedForm => {
            let red = match law_kind {
                LawKind::ZeroMean => reduce_zero_mean(n),
                LawKind::GeneralMean => reduce_general_mean(n),
            };
            ReductionStats {
                final_term_count: red.terms.len(),
                peak_intermediate_term_count: red.terms.len(),
                rewrite_steps: 0,
            }
        }
        ReductionMethod::Recursive => recursive_stein_rewriter(n, law_kind).stats,
    }
}

/// Numerically evaluates a reduction given the law and a map from derivative
/// order to E[g^(order)(X)].
pub fn evaluate_reduction(
    red: &Reduction,
    law: &GaussianLaw,
    derivative_averages: &BTreeMap<usize, f64>,
) -> Result<f64, SteinError> {
    let mut acc = 0.0;
    for t in &red.terms {
        let avg = derivative_averages
            .get(&t.derivative_order)
            .copied()
            .ok_or(SteinError::MissingDerivativeAverage(t.derivative_order))?;
        if !avg.is_finite() {
            return Err(SteinError::NonFiniteAverage(t.derivative_order));
        }
        acc += t.coeff.to_f64().unwrap()
            * law.mu().powi(t.mu_power as i32)
            * law.sigma2().powi(t.sigma2_power as i32)
            * avg;
    }
    Ok(acc)
}

/// Exact rational evaluation of a reduction: rational law parameters and
/// rational derivative averages in, exact rational value out.
pub fn evaluate_reduction_rational(
    red: &Reduction,
    mu: &BigRational,
    sigma2: &BigRational,
    derivative_averages: &BTreeMap<usize, BigRational>,
) -> Result<BigRational, SteinError> {
    if !sigma2.is_positive() {
        return Err(SteinError::NonPositiveVariance(sigma2.to_f64().unwrap_or(f64::NAN)));
    }
    let mut acc = BigRational::zero();
    for t in &red.terms {
        let avg = derivative_averages
            .get(&t.derivative_order)
            .ok_or(SteinError::MissingDerivativeAverage(t.derivative_order))?;
        let mut term = BigRational::from_integer(t.coeff.clone()) * avg;
        for _ in 0..t.mu_power {
            term *= mu;
        }
        for _ in 0..t.sigma2_power {
            term *= sigma2;
        }
        acc += term;
    }
    Ok(acc)
}
