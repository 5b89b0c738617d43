//! Integration by differentiation: expectations evaluated as truncated
//! actions of the averaged shift operator exp((sigma^2/2) d^2/dx^2), i.e. the
//! series sum over m of sigma^{2m} / (2^m m!) * f^(2m)(mu).
//!
//! The series is formal; instead of deciding summability, every evaluation
//! returns a [`SeriesEvaluation`] with explicit truncation and convergence
//! diagnostics, and a non-finite term aborts loudly with `converged = false`.

use crate::function_model::AnalyticFunction;
use crate::stein_core::GaussianLaw;

/// Truncation control for the operator series.
#[derive(Debug, Clone, Copy)]
pub struct AveragedShiftConfig {
    /// Cap on the series index m (number of terms computed is at most this).
    pub max_terms: usize,
    pub rel_tolerance: f64,
    /// Number of consecutive relatively-small terms required before stopping;
    /// parity structure makes single-term smallness unreliable.
    pub consecutive_small: usize,
    /// Record the partial-sum trace in the result.
    pub trace: bool,
}

impl Default for AveragedShiftConfig {
    fn default() -> Self {
        AveragedShiftConfig {
            max_terms: 200,
            rel_tolerance: 1e-13,
            consecutive_small: 3,
            trace: false,
        }
    }
}

/// Outcome of a truncated series evaluation.
#[derive(Debug, Clone)]
pub struct SeriesEvaluation {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub last_term_magnitude: f64,
    pub partial_sums: Option<Vec<f64>>,
}

/// Runs a generic term stream under the stopping rule. `exact_last` caps the
/// index for series known to terminate (polynomials); terms past it are
/// structurally zero and never computed.
fn run_series(
    mut term_at: impl FnMut(usize) -> f64,
    cfg: &AveragedShiftConfig,
    exact_last: Option<usize>,
) -> SeriesEvaluation {
    let mut sum = 0.0;
    let mut last = 0.0;
    let mut peak_term = 0.0f64;
    let mut small_streak = 0usize;
    let mut used = 0usize;
    let mut converged = false;
    let mut trace = cfg.trace.then(Vec::new);

    let cap = match exact_last {
        Some(l) => (l + 1).min(cfg.max_terms),
        None => cfg.max_terms,
    };
    for m in 0..cap {
        let t = term_at(m);
        if !t.is_finite() {
            // fail loudly: report what we had, flagged as non-converged
            return SeriesEvaluation {
                value: sum,
                terms_used: used,
                converged: false,
                last_term_magnitude: t.abs(),
                partial_sums: trace,
            };
        }
        sum += t;
        last = t.abs();
        used = m + 1;
        if let Some(tr) = trace.as_mut() {
            tr.push(sum);
        }
        peak_term = peak_term.max(last);
        if exact_last.is_none() {
            // scale against the partial sum or, for cancelling series, the
            // largest term seen so far
            let scale = sum.abs().max(peak_term).max(f64::MIN_POSITIVE);
            if last <= cfg.rel_tolerance * scale {
                small_streak += 1;
                if small_streak >= cfg.consecutive_small {
                    converged = true;
                    break;
                }
            } else {
                small_streak = 0;
            }
        }
    }
    if let Some(l) = exact_last {
        // exact termination: converged iff the cap allowed all terms
        converged = l + 1 <= cfg.max_terms;
    }
    SeriesEvaluation {
        value: sum,
        terms_used: used,
        converged,
        last_term_magnitude: last,
        partial_sums: trace,
    }
}

/// E[f(X)] as the truncated series sum over m of
/// sigma^{2m} / (2^m m!) * f^(2m)(mu).
///
/// For polynomials the series terminates exactly once the derivative order
/// exceeds the degree; for the transcendental catalog the stopping rule of
/// `cfg` decides.
pub fn averaged_shift_expectation(
    f: &AnalyticFunction,
    law: &GaussianLaw,
    cfg: &AveragedShiftConfig,
) -> SeriesEvaluation {
    let s2 = law.sigma2();
    let mu = law.mu();
    let exact_last = poly_series_last(f, 0);
    // ratio of successive weights: sigma^{2m}/(2^m m!) -> multiply by s2/(2m)
    let mut weight = 1.0;
    run_series(
        |m| {
            if m > 0 {
                weight *= s2 / (2.0 * m as f64);
            }
            weight * f.derivative_at(2 * m, mu)
        },
        cfg,
        exact_last,
    )
}

/// E[f(X) X^n] through the same series applied to h(x) = f(x) x^n.
///
/// For mu = 0 the Leibniz expansion collapses to the closed per-term form
/// (2m)!/(2m-n)! / (2^m m!) * sigma^{2m} * f^(2m-n)(0) for m >= ceil(n/2),
/// with every lower term exactly zero. For general mu each term is the full
/// Leibniz sum with derivatives of f taken at mu.
pub fn ibd_product_expectation(
    f: &AnalyticFunction,
    n: usize,
    law: &GaussianLaw,
    cfg: &AveragedShiftConfig,
) -> SeriesEvaluation {
    let s2 = law.sigma2();
    let mu = law.mu();
    let exact_last = poly_series_last(f, n);
    let mut weight = 1.0; // sigma^{2m} / (2^m m!)
    if mu == 0.0 {
        run_series(
            |m| {
                if m > 0 {
                    weight *= s2 / (2.0 * m as f64);
                }
                if 2 * m < n {
                    return 0.0;
                }
                // falling factorial (2m)(2m-1)...(2m-n+1)
                let mut ff = 1.0;
                for i in 0..n {
                    ff *= (2 * m - i) as f64;
                }
                weight * ff * f.derivative_at(2 * m - n, 0.0)
            },
            cfg,
            exact_last,
        )
    } else {
        run_series(
            |m| {
                if m > 0 {
                    weight *= s2 / (2.0 * m as f64);
                }
                // d^{2m}/dx^{2m} [f(x) x^n] at mu via the general Leibniz rule
                let mut leib = 0.0;
                let mut binom_ff = 1.0; // binom(2m, l) * n!/(n-l)!
                for l in 0..=n.min(2 * m) {
                    if l > 0 {
                        binom_ff *= (2 * m - l + 1) as f64 / l as f64; // -> binom(2m, l)
                        binom_ff *= (n - l + 1) as f64; // -> falling factorial of n
                    }
                    leib += binom_ff * mu.powi((n - l) as i32) * f.derivative_at(2 * m - l, mu);
                }
                weight * leib
            },
            cfg,
            exact_last,
        )
    }
}

/// Last possibly-nonzero series index for a polynomial input of the effective
/// product degree; None for transcendental inputs (no structural termination).
fn poly_series_last(f: &AnalyticFunction, n: usize) -> Option<usize> {
    match f {
        AnalyticFunction::Poly(p) => {
            let deg = p.degree().map_or(n, |d| d + n);
            Some(deg / 2)
        }
        _ => None,
    }
}
