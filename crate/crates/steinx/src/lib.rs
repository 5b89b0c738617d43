//! Exact symbolic-numeric engine for Gaussian expectations of the form
//! E[g(X) X^n].
//!
//! The crate reduces such expectations to closed-form weighted sums of
//! derivative averages E[g^(l)(X)] with exact big-integer coefficients, and
//! cross-validates every reduction through independent routes: a recursive
//! symbolic rewriter built on the classical one-step lemma, an
//! integration-by-differentiation series evaluator, Gauss-Hermite quadrature,
//! a moment-generating-function derivative oracle, and seeded Monte Carlo.
//!
//! Modules:
//! - [`combinatorics`]: exact coefficient families (signless Hermite
//!   coefficients, Stirling numbers, generalized factorial coefficients).
//! - [`stein_core`]: the reduction engines and the recursive rewriter.
//! - [`function_model`]: rational polynomials and an analytic catalog with
//!   closed-form derivatives and expectations.
//! - [`ibd`]: the averaged-shift-operator series evaluator.
//! - [`oracle`]: quadrature and Monte Carlo ground truth.
//! - [`cli`]: the `steinx` command-line interface.

pub mod cli;
pub mod combinatorics;
pub mod function_model;
pub mod ibd;
pub mod oracle;
pub mod stein_core;

pub use function_model::{AnalyticFunction, RationalPolynomial};
pub use stein_core::{GaussianLaw, LawKind, Reduction, ReductionTerm};
