//! Independent numerical ground truth for E[g(X) X^n]: Gauss-Hermite
//! quadrature (nodes and weights by Newton iteration on the Hermite
//! recurrence) and a seeded, bit-reproducible Monte Carlo estimator.
//!
//! The quadrature uses the physicists' convention: weight function e^{-t^2},
//! node change of variable x = mu + sqrt(2) sigma t, weights summing to
//! sqrt(pi). The Monte Carlo path is pinned to SplitMix64 uniforms and the
//! polar Box-Muller transform so that estimates are bit-identical for a fixed
//! seed on any platform.

use std::f64::consts::PI;

use crate::stein_core::GaussianLaw;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("quadrature order {0} outside 1..=256")]
    OrderOutOfRange(usize),
    #[error("quadrature did not converge for order {0}")]
    NewtonFailed(usize),
    #[error("integrand not finite at node x = {0}")]
    NonFiniteAtNode(f64),
    #[error("Monte Carlo needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("non-finite Monte Carlo draw at sample {0}")]
    NonFiniteDraw(usize),
}

/// Gauss-Hermite nodes and weights for the weight e^{-t^2}.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const NEWTON_EPS: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 200;

/// Orthonormal Hermite h_n(t) for the weight e^{-t^2} and its derivative,
/// via the three-term recurrence h_j = t sqrt(2/j) h_{j-1} - sqrt((j-1)/j) h_{j-2}
/// starting from h_0 = pi^{-1/4}; h_n' = sqrt(2n) h_{n-1}.
fn hermite_orthonormal(n: usize, t: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = t * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

impl QuadratureRule {
    /// Builds the rule of the given order. The strictly positive roots of the
    /// order-n Hermite polynomial are bracketed by a sign-change scan (the
    /// root spacing is bounded below by ~pi/sqrt(2n+1), so a fraction of that
    /// as scan step cannot skip a pair), then polished by bisection-safeguarded
    /// Newton iteration. Negative nodes are mirrored so symmetry is exact.
    pub fn gauss_hermite(order: usize) -> Result<Self, OracleError> {
        if order == 0 || order > 256 {
            return Err(OracleError::OrderOutOfRange(order));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];

        let limit = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
        let step = 0.2 * PI / (2.0 * n as f64 + 1.0).sqrt();
        let positive_roots = n / 2;

        let mut found = 0usize;
        let mut a = 0.5 * step; // skip the exact root at t = 0 for odd n
        let (mut fa, _) = hermite_orthonormal(n, a);
        while found < positive_roots && a < limit {
            let b = a + step;
            let (fb, _) = hermite_orthonormal(n, b);
            if fa == 0.0 || fa.signum() != fb.signum() {
                let root = refine_root(n, a, b)?;
                // store positive roots descending from the center outward
                let i = positive_roots - 1 - found;
                let (_, dp) = hermite_orthonormal(n, root);
                let w = 2.0 / (dp * dp);
                // mirrored assignment keeps the rule exactly symmetric
                let hi = n - 1 - i;
                nodes[hi] = root;
                nodes[i] = -root;
                weights[hi] = w;
                weights[i] = w;
                found += 1;
            }
            a = b;
            fa = fb;
        }
        if found < positive_roots {
            return Err(OracleError::NewtonFailed(order));
        }
        if n % 2 == 1 {
            let mid = n / 2;
            nodes[mid] = 0.0;
            let (_, dp) = hermite_orthonormal(n, 0.0);
            weights[mid] = 2.0 / (dp * dp);
        }
        Ok(QuadratureRule { order, nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of h(t) e^{-t^2} over the real line.
    pub fn integrate(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * h(t)).sum()
    }

    /// E[g(X) X^n] for the given law: (1/sqrt(pi)) sum of w_i g(x_i) x_i^n
    /// with x_i = mu + sqrt(2) sigma t_i.
    pub fn expectation(
        &self,
        g: impl Fn(f64) -> f64,
        n: usize,
        law: &GaussianLaw,
    ) -> Result<f64, OracleError> {
        let scale = (2.0 * law.sigma2()).sqrt();
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let x = law.mu() + scale * t;
            let gx = g(x);
            if !gx.is_finite() {
                return Err(OracleError::NonFiniteAtNode(x));
            }
            acc += w * gx * x.powi(n as i32);
        }
        Ok(acc / PI.sqrt())
    }
}

/// Newton with a bisection fallback inside a sign-change bracket.
fn refine_root(n: usize, mut a: f64, mut b: f64) -> Result<f64, OracleError> {
    let (mut fa, _) = hermite_orthonormal(n, a);
    let mut z = 0.5 * (a + b);
    for _ in 0..NEWTON_MAX_ITER {
        let (f, df) = hermite_orthonormal(n, z);
        if f == 0.0 {
            return Ok(z);
        }
        // shrink the bracket
        if f.signum() == fa.signum() {
            a = z;
            fa = f;
        } else {
            b = z;
        }
        let dz = f / df;
        let next = z - dz;
        let accepted = if next > a && next < b { next } else { 0.5 * (a + b) };
        if (accepted - z).abs() <= NEWTON_EPS * z.abs().max(1.0) {
            return Ok(accepted);
        }
        z = accepted;
    }
    Err(OracleError::NewtonFailed(n))
}

/// One-shot quadrature expectation with a freshly built rule.
pub fn quadrature_expectation(
    g: impl Fn(f64) -> f64,
    n: usize,
    law: &GaussianLaw,
    order: usize,
) -> Result<f64, OracleError> {
    QuadratureRule::gauss_hermite(order)?.expectation(g, n, law)
}

/// SplitMix64: the reference 64-bit splittable generator. Chosen over a
/// platform RNG so seeded estimates are reproducible bit-for-bit anywhere.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard-normal sampler: polar Box-Muller over SplitMix64 uniforms, with
/// the usual pair caching.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianSampler {
    pub fn new(seed: u64) -> Self {
        GaussianSampler { rng: SplitMix64::new(seed), spare: None }
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.rng.next_f64() - 1.0;
            let v = 2.0 * self.rng.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// Seeded Monte Carlo estimate of E[g(X) X^n].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Sample mean of g(X_i) X_i^n over `samples` Gaussian draws; standard error
/// is the sample standard deviation over sqrt(samples). Single-threaded and
/// deterministic for a fixed (seed, samples).
pub fn monte_carlo_expectation(
    g: impl Fn(f64) -> f64,
    n: usize,
    law: &GaussianLaw,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    if samples < 2 {
        return Err(OracleError::TooFewSamples(samples));
    }
    let mut sampler = GaussianSampler::new(seed);
    let sigma = law.sigma();
    // Welford running mean / M2
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        let x = law.mu() + sigma * sampler.next_standard_normal();
        let y = g(x) * x.powi(n as i32);
        if !y.is_finite() {
            return Err(OracleError::NonFiniteDraw(i));
        }
        let delta = y - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (y - mean);
    }
    let variance = m2 / (samples - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        std_error: (variance / samples as f64).sqrt(),
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::double_factorial;
    use num::ToPrimitive;

    fn std_law() -> GaussianLaw {
        GaussianLaw::zero_mean(1.0).unwrap()
    }

    #[test]
    fn rule_order_bounds() {
        assert!(QuadratureRule::gauss_hermite(0).is_err());
        assert!(QuadratureRule::gauss_hermite(257).is_err());
        assert!(QuadratureRule::gauss_hermite(256).is_ok());
    }

    #[test]
    fn rule_order_one() {
        let r = QuadratureRule::gauss_hermite(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert!((r.weights()[0] - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rule_order_two() {
        let r = QuadratureRule::gauss_hermite(2).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((r.nodes()[0] + inv_sqrt2).abs() < 1e-14);
        assert!((r.nodes()[1] - inv_sqrt2).abs() < 1e-14);
        assert!((r.weights()[0] - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((r.weights()[1] - PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn rule_symmetry_and_weight_sum() {
        for order in [3usize, 8, 17, 64, 129, 256] {
            let r = QuadratureRule::gauss_hermite(order).unwrap();
            for i in 0..order {
                assert_eq!(r.nodes()[i], -r.nodes()[order - 1 - i], "order {order}");
                assert_eq!(r.weights()[i], r.weights()[order - 1 - i]);
                assert!(r.weights()[i] > 0.0);
            }
            let sum: f64 = r.weights().iter().sum();
            assert!((sum - PI.sqrt()).abs() < 1e-12, "order {order}: {sum}");
        }
    }

    #[test]
    fn degree_exactness_even_monomials() {
        // integral of t^{2k} e^{-t^2} = sqrt(pi) (2k-1)!! / 2^k
        let r = QuadratureRule::gauss_hermite(64).unwrap();
        for k in 0..=63usize {
            let dfac =
                (2 * k).checked_sub(1).map_or(1.0, |m| double_factorial(m).to_f64().unwrap());
            let exact = PI.sqrt() * dfac / 2.0f64.powi(k as i32);
            let got = r.integrate(|t| t.powi(2 * k as i32));
            assert!(
                (got - exact).abs() <= 1e-12 * exact.abs(),
                "k={k}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn expectation_moments() {
        let r = QuadratureRule::gauss_hermite(32).unwrap();
        let e2 = r.expectation(|_| 1.0, 2, &std_law()).unwrap();
        assert!((e2 - 1.0).abs() < 1e-13);
        let e4 = r.expectation(|_| 1.0, 4, &std_law()).unwrap();
        assert!((e4 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_exp() {
        let v = quadrature_expectation(|x| x.exp(), 1, &std_law(), 64).unwrap();
        let exact = (0.5f64).exp();
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn expectation_rejects_non_finite() {
        let r = QuadratureRule::gauss_hermite(8).unwrap();
        let err = r.expectation(|_| f64::NAN, 0, &std_law()).unwrap_err();
        assert!(matches!(err, OracleError::NonFiniteAtNode(_)));
    }

    #[test]
    fn splitmix_reference_vector() {
        let mut rng = SplitMix64::new(0);
        let a = rng.next_u64();
        let mut rng2 = SplitMix64::new(0);
        assert_eq!(a, rng2.next_u64());
        // golden value for seed 0, frozen as a cross-platform regression
        assert_eq!(a, 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn monte_carlo_trivial() {
        let est = monte_carlo_expectation(|_| 1.0, 0, &std_law(), 100, 42).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn monte_carlo_deterministic() {
        let a = monte_carlo_expectation(|x| x.exp(), 1, &std_law(), 10_000, 7).unwrap();
        let b = monte_carlo_expectation(|x| x.exp(), 1, &std_law(), 10_000, 7).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let c = monte_carlo_expectation(|x| x.exp(), 1, &std_law(), 10_000, 8).unwrap();
        assert_ne!(a.estimate.to_bits(), c.estimate.to_bits());
    }

    #[test]
    fn monte_carlo_within_band() {
        let est = monte_carlo_expectation(|_| 1.0, 2, &std_law(), 1_000_000, 20240817).unwrap();
        assert!((est.estimate - 1.0).abs() <= 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn monte_carlo_errors() {
        assert_eq!(
            monte_carlo_expectation(|_| 1.0, 0, &std_law(), 1, 0).unwrap_err(),
            OracleError::TooFewSamples(1)
        );
        let err = monte_carlo_expectation(|_| f64::NAN, 0, &std_law(), 10, 0).unwrap_err();
        assert!(matches!(err, OracleError::NonFiniteDraw(_)));
    }
}
