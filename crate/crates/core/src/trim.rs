//! Trimmed classification errors.
//!
//! The empirical trimmed error reweights observations within the polytope of
//! weight vectors capped at `1/(n(1-alpha))` and summing to one; its value has
//! the closed form `(R_n - alpha)_+ / (1 - alpha)`. The same positive-part
//! formula relates the population trimmed error and trimmed Bayes error to
//! their untrimmed counterparts. Both routes are implemented and the
//! equivalence is checked in tests rather than assumed.

use crate::classify::Classifier;
use crate::sample::LabeledSample;
use thiserror::Error;

/// Absolute tolerance on the weight-sum invariant. Weights are built from
/// exact rationals `k/(n(1-alpha))` and only accumulate rounding.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TrimError {
    #[error("trimming level must lie in [0,1): got {0}")]
    LevelOutOfRange(f64),
    #[error("error rate must lie in [0,1]: got {0}")]
    ErrorRateOutOfRange(f64),
    #[error("weight {index} = {weight} violates the cap {cap}")]
    WeightAboveCap { index: usize, weight: f64, cap: f64 },
    #[error("weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOL}")]
    WeightSumOffOne { sum: f64 },
}

/// A trimming level `alpha` in `[0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TrimLevel(f64);

impl TrimLevel {
    pub const ZERO: TrimLevel = TrimLevel(0.0);

    pub fn new(alpha: f64) -> Result<Self, TrimError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(TrimError::LevelOutOfRange(alpha));
        }
        Ok(Self(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1/(n(1-alpha))`, the per-observation weight cap.
    pub fn weight_cap(self, n: usize) -> f64 {
        1.0 / (n as f64 * (1.0 - self.0))
    }
}

/// A weight vector in the trimming polytope: every entry in
/// `[0, 1/(n(1-alpha))]`, entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimWeights {
    weights: Vec<f64>,
    cap: f64,
}

impl TrimWeights {
    pub fn new(weights: Vec<f64>, alpha: TrimLevel) -> Result<Self, TrimError> {
        let cap = alpha.weight_cap(weights.len());
        for (index, &w) in weights.iter().enumerate() {
            if !(0.0..=cap + WEIGHT_SUM_TOL).contains(&w) {
                return Err(TrimError::WeightAboveCap {
                    index,
                    weight: w,
                    cap,
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(TrimError::WeightSumOffOne { sum });
        }
        Ok(Self { weights, cap })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }
}

/// Outcome of the polytope minimization: the optimal value, an achieving
/// weight vector, and the induced outlier report.
#[derive(Debug, Clone)]
pub struct TrimOutcome {
    pub value: f64,
    pub weights: TrimWeights,
    /// Misclassified points whose weight fell strictly below the cap.
    pub trimmed_indices: Vec<usize>,
    /// Subset of `trimmed_indices` that kept a fractional (nonzero) weight.
    pub partially_trimmed: Vec<usize>,
}

/// `(1/n) #{i : g(X_i) != Y_i}`.
pub fn empirical_error<C: Classifier + ?Sized>(s: &LabeledSample, g: &C) -> f64 {
    let miscount = s.iter().filter(|(y, x)| g.decide(x) != *y).count();
    miscount as f64 / s.len() as f64
}

/// `(err - alpha)_+ / (1 - alpha)`, the trimmed version of an error rate.
/// Applies both to population errors and to empirical errors.
pub fn trimmed_error_closed_form(err: f64, alpha: TrimLevel) -> Result<f64, TrimError> {
    if !(0.0..=1.0).contains(&err) {
        return Err(TrimError::ErrorRateOutOfRange(err));
    }
    Ok((err - alpha.value()).max(0.0) / (1.0 - alpha.value()))
}

/// Trimmed Bayes error: same formula as [`trimmed_error_closed_form`].
pub fn trimmed_bayes_error(err_bayes: f64, alpha: TrimLevel) -> Result<f64, TrimError> {
    trimmed_error_closed_form(err_bayes, alpha)
}

/// Perfect separation holds exactly when the error rate is at most the
/// trimming level, i.e. the trimmed error vanishes.
pub fn perfect_separation(err: f64, alpha: TrimLevel) -> bool {
    err <= alpha.value()
}

/// Minimizes `sum_i w_i 1[g(X_i) != Y_i]` over the trimming polytope.
///
/// Greedy fill, deterministic by ascending index: correctly classified points
/// receive the cap first; whatever mass remains goes to misclassified points,
/// again capped and in index order. The value always equals the closed form
/// within `1e-12`; tests check this against an exhaustive LP-style oracle.
pub fn empirical_trimmed_error_polytope<C: Classifier + ?Sized>(
    s: &LabeledSample,
    g: &C,
    alpha: TrimLevel,
) -> TrimOutcome {
    let n = s.len();
    let cap = alpha.weight_cap(n);
    let misclassified: Vec<bool> = s.iter().map(|(y, x)| g.decide(x) != y).collect();

    let mut weights = vec![0.0f64; n];
    let mut remaining = 1.0f64;
    // Correct points first, then misclassified, both in index order.
    for pass_misclassified in [false, true] {
        for i in 0..n {
            if misclassified[i] == pass_misclassified && remaining > 0.0 {
                let w = cap.min(remaining);
                weights[i] = w;
                remaining -= w;
            }
        }
        if remaining <= 0.0 {
            break;
        }
    }

    let value = weights
        .iter()
        .zip(&misclassified)
        .filter(|(_, &m)| m)
        .map(|(w, _)| w)
        .sum::<f64>();

    let trimmed_indices: Vec<usize> = (0..n)
        .filter(|&i| misclassified[i] && weights[i] < cap - WEIGHT_SUM_TOL)
        .collect();
    let partially_trimmed: Vec<usize> = trimmed_indices
        .iter()
        .copied()
        .filter(|&i| weights[i] > 0.0)
        .collect();

    let weights = TrimWeights::new(weights, alpha).expect("greedy fill stays inside the polytope");
    TrimOutcome {
        value,
        weights,
        trimmed_indices,
        partially_trimmed,
    }
}

/// A two-class mixture `P = (p0, P0, P1)` seen through a classifier `g`:
/// only `q00 = P0(g=0)` and `q11 = P1(g=1)` matter for its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    p0: f64,
    q00: f64,
    q11: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("class-0 prior must lie strictly inside (0,1): got {0}")]
    PriorOutOfRange(f64),
    #[error("conditional probability {name} must lie in [0,1]: got {value}")]
    ConditionalOutOfRange { name: &'static str, value: f64 },
}

impl MixtureSpec {
    pub fn new(p0: f64, q00: f64, q11: f64) -> Result<Self, MixtureError> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(MixtureError::PriorOutOfRange(p0));
        }
        for (name, value) in [("q00", q00), ("q11", q11)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(MixtureError::ConditionalOutOfRange { name, value });
            }
        }
        Ok(Self { p0, q00, q11 })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn q00(&self) -> f64 {
        self.q00
    }
    pub fn q11(&self) -> f64 {
        self.q11
    }

    /// `R(g) = p0 (1 - q00) + (1 - p0)(1 - q11)`.
    pub fn classification_error(&self) -> f64 {
        self.p0 * (1.0 - self.q00) + (1.0 - self.p0) * (1.0 - self.q11)
    }
}

/// Trimmed error via the class-conditional decomposition: minimum over the
/// class-0 mass `q0` of
/// `(q0 - p0 q00/(1-alpha))_+ + (1 - q0 - (1-p0) q11/(1-alpha))_+`.
///
/// The objective is piecewise linear in `q0`, so it is evaluated only at the
/// two breakpoints and the feasible-interval endpoints.
pub fn trimmed_error_decomposition_oracle(mix: &MixtureSpec, alpha: TrimLevel) -> f64 {
    let a = alpha.value();
    let scale = 1.0 - a;
    let term0 = mix.p0 * mix.q00 / scale;
    let term1 = (1.0 - mix.p0) * mix.q11 / scale;

    // rounding can push lo a few ulps past hi when the feasible interval
    // degenerates to a point; collapse it instead of panicking downstream
    let hi = (mix.p0 / scale).min(1.0);
    let lo = (1.0 - (1.0 - mix.p0) / scale).clamp(0.0, hi);

    let objective = |q0: f64| (q0 - term0).max(0.0) + (1.0 - q0 - term1).max(0.0);
    [lo, hi, term0.clamp(lo, hi), (1.0 - term1).clamp(lo, hi)]
        .into_iter()
        .map(objective)
        .fold(f64::INFINITY, f64::min)
}

/// Upper bound on the bias of the empirical trimmed error:
/// `sqrt(R(g)) / (sqrt(2n) (1 - alpha))`.
pub fn bias_bound(err_true: f64, n: usize, alpha: TrimLevel) -> Result<f64, TrimError> {
    if !(0.0..=1.0).contains(&err_true) {
        return Err(TrimError::ErrorRateOutOfRange(err_true));
    }
    Ok(err_true.sqrt() / ((2.0 * n as f64).sqrt() * (1.0 - alpha.value())))
}

/// Bound on the drop of the trimmed error between two levels at most `1/n`
/// apart: `1/(n (1 - alpha_max)^2)`.
pub fn lipschitz_alpha_bound(n: usize, alpha_max: TrimLevel) -> f64 {
    1.0 / (n as f64 * (1.0 - alpha_max.value()).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::LinearClassifier;
    use approx::assert_abs_diff_eq;

    fn alpha(a: f64) -> TrimLevel {
        TrimLevel::new(a).unwrap()
    }

    fn sample_1d(rows: &[(i64, f64)]) -> LabeledSample {
        let rows: Vec<(i64, Vec<f64>)> = rows.iter().map(|&(y, x)| (y, vec![x])).collect();
        LabeledSample::validate(&rows).unwrap()
    }

    #[test]
    fn empirical_error_counts() {
        // threshold at 0.5: x >= 0.5 -> 1
        let g = LinearClassifier::new(vec![1.0], -0.5);
        let s = sample_1d(&[(0, 0.0), (0, 0.2), (1, 1.0), (0, 1.0)]);
        assert_eq!(empirical_error(&s, &g), 0.25);

        let perfect = sample_1d(&[(0, 0.0), (1, 1.0)]);
        assert_eq!(empirical_error(&perfect, &g), 0.0);

        let const0 = LinearClassifier::constant(0);
        let balanced = sample_1d(&[(0, 0.0), (1, 1.0), (0, 0.1), (1, 0.9)]);
        assert_eq!(empirical_error(&balanced, &const0), 0.5);
    }

    #[test]
    fn closed_form_values() {
        assert_abs_diff_eq!(
            trimmed_error_closed_form(0.3, alpha(0.1)).unwrap(),
            0.2 / 0.9,
            epsilon = 1e-15
        );
        assert_eq!(trimmed_error_closed_form(0.1, alpha(0.1)).unwrap(), 0.0);
        assert_eq!(trimmed_error_closed_form(0.3, TrimLevel::ZERO).unwrap(), 0.3);
        assert!(trimmed_error_closed_form(1.2, TrimLevel::ZERO).is_err());
    }

    #[test]
    fn trimmed_bayes_and_threshold() {
        assert_eq!(trimmed_bayes_error(0.15, alpha(0.2)).unwrap(), 0.0);
        assert!(perfect_separation(0.15, alpha(0.2)));
        assert_abs_diff_eq!(
            trimmed_bayes_error(0.25, alpha(0.2)).unwrap(),
            0.0625,
            epsilon = 1e-15
        );
        assert!(!perfect_separation(0.25, alpha(0.2)));
        assert_eq!(trimmed_bayes_error(0.0, TrimLevel::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn polytope_spec_instance() {
        // n=10, 3 misclassified, alpha=0.2: cap 0.125, 7 correct points carry
        // 0.875, the misclassified share the remaining 0.125.
        let g = LinearClassifier::new(vec![1.0], -0.5);
        let mut rows = vec![(1i64, 1.0); 7];
        rows.extend([(0, 1.0); 3]);
        let s = sample_1d(&rows);
        assert_eq!(empirical_error(&s, &g), 0.3);
        let out = empirical_trimmed_error_polytope(&s, &g, alpha(0.2));
        assert_abs_diff_eq!(out.value, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(
            out.value,
            trimmed_error_closed_form(0.3, alpha(0.2)).unwrap(),
            epsilon = 1e-12
        );
        // one misclassified point holds the cap, one holds the fractional rest
        assert_eq!(out.weights.as_slice()[7], 0.125);
        assert_eq!(out.trimmed_indices, vec![8, 9]);
        assert_eq!(out.partially_trimmed, Vec::<usize>::new());
    }

    #[test]
    fn polytope_all_correct_and_alpha_zero() {
        let g = LinearClassifier::new(vec![1.0], -0.5);
        let s = sample_1d(&[(0, 0.0), (1, 1.0), (1, 2.0)]);
        let out = empirical_trimmed_error_polytope(&s, &g, alpha(0.3));
        assert_eq!(out.value, 0.0);
        assert!(out.trimmed_indices.is_empty());

        let s2 = sample_1d(&[(0, 0.0), (1, 1.0), (0, 2.0)]);
        let out2 = empirical_trimmed_error_polytope(&s2, &g, TrimLevel::ZERO);
        assert_abs_diff_eq!(out2.value, empirical_error(&s2, &g), epsilon = 1e-15);
        for &w in out2.weights.as_slice() {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fractional_trimming_budget() {
        // n=4, alpha=0.1: n*alpha is fractional, one point gets partial weight.
        let g = LinearClassifier::new(vec![1.0], -0.5);
        let s = sample_1d(&[(0, 0.0), (0, 1.0), (1, 1.0), (1, 2.0)]);
        let out = empirical_trimmed_error_polytope(&s, &g, alpha(0.1));
        assert_abs_diff_eq!(
            out.value,
            trimmed_error_closed_form(0.25, alpha(0.1)).unwrap(),
            epsilon = 1e-12
        );
        assert_eq!(out.trimmed_indices, vec![1]);
        assert_eq!(out.partially_trimmed, vec![1]);
    }

    #[test]
    fn decomposition_matches_closed_form() {
        let mix = MixtureSpec::new(0.5, 0.8, 0.8).unwrap();
        assert_abs_diff_eq!(mix.classification_error(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            trimmed_error_decomposition_oracle(&mix, alpha(0.1)),
            0.1 / 0.9,
            epsilon = 1e-12
        );

        let perfect = MixtureSpec::new(0.5, 1.0, 1.0).unwrap();
        for a in [0.0, 0.3, 0.9] {
            assert_eq!(trimmed_error_decomposition_oracle(&perfect, alpha(a)), 0.0);
        }

        let mix2 = MixtureSpec::new(0.3, 0.9, 0.7).unwrap();
        assert_abs_diff_eq!(mix2.classification_error(), 0.24, epsilon = 1e-15);
        assert_eq!(trimmed_error_decomposition_oracle(&mix2, alpha(0.25)), 0.0);
    }

    #[test]
    fn decomposition_matches_dense_grid_sweep() {
        // Independent oracle: dense grid over q0.
        let mix = MixtureSpec::new(0.37, 0.81, 0.64).unwrap();
        let a = alpha(0.17);
        let scale = 1.0 - a.value();
        let term0 = mix.p0() * mix.q00() / scale;
        let term1 = (1.0 - mix.p0()) * mix.q11() / scale;
        let lo = (1.0 - (1.0 - mix.p0()) / scale).max(0.0);
        let hi = (mix.p0() / scale).min(1.0);
        let grid_min = (0..=100_000)
            .map(|k| lo + (hi - lo) * k as f64 / 100_000.0)
            .map(|q0| (q0 - term0).max(0.0) + (1.0 - q0 - term1).max(0.0))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(
            trimmed_error_decomposition_oracle(&mix, a),
            grid_min,
            epsilon = 1e-9
        );
    }

    #[test]
    fn bias_and_lipschitz_bounds() {
        assert_abs_diff_eq!(
            bias_bound(0.25, 50, TrimLevel::ZERO).unwrap(),
            0.05,
            epsilon = 1e-15
        );
        assert_eq!(bias_bound(0.0, 50, alpha(0.3)).unwrap(), 0.0);
        assert_abs_diff_eq!(bias_bound(0.25, 50, alpha(0.5)).unwrap(), 0.1, epsilon = 1e-15);

        assert_abs_diff_eq!(lipschitz_alpha_bound(100, alpha(0.5)), 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(
            lipschitz_alpha_bound(100, TrimLevel::ZERO),
            0.01,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            lipschitz_alpha_bound(1, alpha(0.9)),
            100.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn trim_weights_constructor_rejects_violations() {
        let a = alpha(0.2);
        // cap for n=2 is 1/(2*0.8) = 0.625
        assert!(TrimWeights::new(vec![0.7, 0.3], a).is_err());
        assert!(TrimWeights::new(vec![0.6, 0.3], a).is_err()); // sums to 0.9
        assert!(TrimWeights::new(vec![0.625, 0.375], a).is_ok());
    }

    #[test]
    fn trim_level_rejects_out_of_range() {
        assert!(TrimLevel::new(1.0).is_err());
        assert!(TrimLevel::new(-0.1).is_err());
        assert!(TrimLevel::new(0.999).is_ok());
    }

    /// Exact LP oracle by vertex enumeration. On the polytope
    /// `{0 <= w_i <= cap, sum w_i = 1}` every vertex puts `k = floor(1/cap)`
    /// coordinates at the cap and the leftover `1 - k*cap` on at most one more
    /// coordinate, so minimizing a linear objective reduces to an exhaustive
    /// scan over those supports. Exponential in `n`; test-only.
    fn lp_vertex_oracle(misclassified: &[bool], cap: f64) -> f64 {
        let n = misclassified.len();
        assert!(n <= 20, "vertex enumeration oracle is for small n only");
        assert!(cap * n as f64 >= 1.0 - 1e-12, "polytope must be nonempty");
        let k = ((1.0 / cap) + 1e-12).floor() as usize;
        let leftover = (1.0 - k as f64 * cap).max(0.0);

        let cost = |i: usize| if misclassified[i] { 1.0 } else { 0.0 };
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let base: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(cost).sum::<f64>() * cap;
            if leftover > 1e-15 {
                for j in (0..n).filter(|&j| mask & (1 << j) == 0) {
                    best = best.min(base + leftover * cost(j));
                }
            } else {
                best = best.min(base);
            }
        }
        best
    }

    fn misclassification_fixture(misclassified: &[bool]) -> (LabeledSample, LinearClassifier) {
        // g predicts 1 at x=1, so label 0 marks the point as misclassified
        let g = LinearClassifier::new(vec![1.0], -0.5);
        let rows: Vec<(i64, f64)> = misclassified
            .iter()
            .map(|&m| (i64::from(!m), 1.0))
            .collect();
        (sample_1d(&rows), g)
    }

    #[test]
    fn polytope_matches_lp_vertex_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7214);
        for _ in 0..50 {
            let n = rng.random_range(1..=10usize);
            let misclassified: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let (s, g) = misclassification_fixture(&misclassified);
            for k in 0..n {
                let a = alpha(k as f64 / n as f64);
                let greedy = empirical_trimmed_error_polytope(&s, &g, a).value;
                let oracle = lp_vertex_oracle(&misclassified, a.weight_cap(n));
                assert_abs_diff_eq!(greedy, oracle, epsilon = 1e-12);
            }
        }

        // the documented 10-point instance: 3 misclassified, alpha = 0.2
        let mis = [[false; 7].as_slice(), [true; 3].as_slice()].concat();
        let (s, g) = misclassification_fixture(&mis);
        let a = alpha(0.2);
        assert_abs_diff_eq!(
            lp_vertex_oracle(&mis, a.weight_cap(10)),
            0.125,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            empirical_trimmed_error_polytope(&s, &g, a).value,
            0.125,
            epsilon = 1e-12
        );
    }

    proptest::proptest! {
        #[test]
        fn polytope_equals_closed_form(
            misclassified in proptest::collection::vec(proptest::bool::ANY, 1..40),
            k in 0usize..40,
        ) {
            let n = misclassified.len();
            let a = alpha((k % n) as f64 / n as f64);
            let (s, g) = misclassification_fixture(&misclassified);
            let err = empirical_error(&s, &g);
            let poly = empirical_trimmed_error_polytope(&s, &g, a);
            let closed = trimmed_error_closed_form(err, a).unwrap();
            proptest::prop_assert!((poly.value - closed).abs() <= 1e-12);
        }

        #[test]
        fn polytope_value_nonincreasing_in_alpha(
            misclassified in proptest::collection::vec(proptest::bool::ANY, 1..40),
        ) {
            let n = misclassified.len();
            let (s, g) = misclassification_fixture(&misclassified);
            let mut prev = f64::INFINITY;
            for k in 0..n {
                let a = alpha(k as f64 / n as f64);
                let v = empirical_trimmed_error_polytope(&s, &g, a).value;
                proptest::prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }

        #[test]
        fn optimal_weights_saturate_correct_points(
            misclassified in proptest::collection::vec(proptest::bool::ANY, 1..40),
            k in 0usize..40,
        ) {
            let n = misclassified.len();
            let a = alpha((k % n) as f64 / n as f64);
            let (s, g) = misclassification_fixture(&misclassified);
            let out = empirical_trimmed_error_polytope(&s, &g, a);
            if out.value > 1e-12 {
                // leftover mass on misclassified points means every correct
                // point must already hold the full cap
                let cap = a.weight_cap(n);
                for (i, &m) in misclassified.iter().enumerate() {
                    if !m {
                        proptest::prop_assert!(out.weights.as_slice()[i] >= cap - 1e-12);
                    }
                }
            }
        }
    }
}
