//! Linear classifier families on coordinate prefixes and their 0-1-loss
//! trainers.
//!
//! The family `G_m` contains halfspace rules reading only the first `m`
//! coordinates; its VC dimension is `m+1`. Exact empirical risk minimization
//! is combinatorial, so exact trainers carry explicit guard rails and a
//! seeded stochastic search covers everything beyond them.

use crate::classify::{Classifier, LinearClassifier};
use crate::sample::LabeledSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Guard rails for [`erm_exact_enum`].
pub const EXACT_ENUM_MAX_DIM: usize = 3;
pub const EXACT_ENUM_MAX_N: usize = 60;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error(
        "instance too large for exact enumeration: m={m}, n={n} (limits m<={EXACT_ENUM_MAX_DIM}, \
         n<={EXACT_ENUM_MAX_N}); use the stochastic trainer instead"
    )]
    InstanceTooLarge { m: usize, n: usize },
    #[error("active dimension m={m} exceeds the sample dimension p={p}")]
    DimensionTooLarge { m: usize, p: usize },
    #[error("1d exact sweep requires m=1, got m={0}")]
    NotOneDimensional(usize),
}

/// How a [`ModelFamily`] fits its classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainerKind {
    /// Threshold sweep over the first coordinate; exact, any `n`, `m=1` only.
    ExactSweep1d,
    /// Hyperplane-arrangement enumeration; exact within the guard rails.
    ExactEnumeration,
    /// Random-restart coordinate descent on the 0-1 loss.
    StochasticSearch {
        seed: u64,
        restarts: usize,
        iters: usize,
    },
    /// Exact wherever the guard rails allow, stochastic beyond them.
    Auto {
        seed: u64,
        restarts: usize,
        iters: usize,
    },
}

impl TrainerKind {
    /// Calibrated to recover the exact optimum on the small regression
    /// instances.
    pub fn stochastic_default(seed: u64) -> Self {
        TrainerKind::StochasticSearch {
            seed,
            restarts: 50,
            iters: 200,
        }
    }

    pub fn auto_default(seed: u64) -> Self {
        TrainerKind::Auto {
            seed,
            restarts: 50,
            iters: 200,
        }
    }
}

/// A classifier class descriptor: index `m`, VC dimension, complexity weight
/// `x_m` and the trainer minimizing the empirical error within the class.
#[derive(Debug, Clone)]
pub struct ModelFamily {
    pub index: usize,
    pub vc_dim: usize,
    pub weight: f64,
    pub trainer: TrainerKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum FamilyError {
    #[error("family {index}: vc_dim must be >= 1")]
    ZeroVcDim { index: usize },
    #[error("family {index}: weight x_m must be nonnegative, got {weight}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("sum of exp(-x_m) = {sum} exceeds the declared constant sigma = {sigma}")]
    WeightBudgetExceeded { sum: f64, sigma: f64 },
    #[error("family list is empty")]
    Empty,
}

/// A family list together with its declared weight budget `sigma`, validated
/// so that `sum_m exp(-x_m) <= sigma`.
#[derive(Debug, Clone)]
pub struct FamilyCollection {
    families: Vec<ModelFamily>,
    sigma: f64,
}

impl FamilyCollection {
    pub fn new(families: Vec<ModelFamily>, sigma: f64) -> Result<Self, FamilyError> {
        if families.is_empty() {
            return Err(FamilyError::Empty);
        }
        for f in &families {
            if f.vc_dim == 0 {
                return Err(FamilyError::ZeroVcDim { index: f.index });
            }
            if f.weight < 0.0 {
                return Err(FamilyError::NegativeWeight {
                    index: f.index,
                    weight: f.weight,
                });
            }
        }
        let sum = families.iter().map(|f| (-f.weight).exp()).sum::<f64>();
        if sum > sigma + 1e-12 {
            return Err(FamilyError::WeightBudgetExceeded { sum, sigma });
        }
        Ok(Self { families, sigma })
    }

    /// Prefix linear families `G_1 .. G_max_m` in ambient dimension `p`, with
    /// `vc_dim = m+1`, weights `x_m = ln p` and `sigma = 1`.
    pub fn linear_prefixes(
        p: usize,
        max_m: usize,
        trainer: TrainerKind,
    ) -> Result<Self, FamilyError> {
        assert!(max_m >= 1 && max_m <= p, "need 1 <= max_m <= p");
        let families = (1..=max_m)
            .map(|m| ModelFamily {
                index: m,
                vc_dim: m + 1,
                weight: (p as f64).ln(),
                trainer,
            })
            .collect();
        Self::new(families, 1.0)
    }

    pub fn families(&self) -> &[ModelFamily] {
        &self.families
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sum_exp_neg_weights(&self) -> f64 {
        self.families.iter().map(|f| (-f.weight).exp()).sum()
    }
}

/// Trains family `fam` on `s`, dispatching on the trainer kind. The active
/// dimension is `fam.index`.
pub fn train(fam: &ModelFamily, s: &LabeledSample) -> Result<LinearClassifier, TrainError> {
    let m = fam.index;
    if m > s.dim() {
        return Err(TrainError::DimensionTooLarge { m, p: s.dim() });
    }
    match fam.trainer {
        TrainerKind::ExactSweep1d => erm_exact_1d(s),
        TrainerKind::ExactEnumeration => erm_exact_enum(s, m),
        TrainerKind::StochasticSearch {
            seed,
            restarts,
            iters,
        } => Ok(erm_stochastic(s, m, seed, restarts, iters)),
        TrainerKind::Auto {
            seed,
            restarts,
            iters,
        } => {
            if m == 1 {
                erm_exact_1d(s)
            } else if m <= EXACT_ENUM_MAX_DIM && s.len() <= EXACT_ENUM_MAX_N {
                erm_exact_enum(s, m)
            } else {
                Ok(erm_stochastic(s, m, seed, restarts, iters))
            }
        }
    }
}

/// Exact 0-1 ERM over 1-d threshold rules: both orientations, thresholds at
/// midpoints of sorted distinct first coordinates plus sentinels beyond the
/// data range. Tie-break: smaller threshold, then positive orientation.
pub fn erm_exact_1d(s: &LabeledSample) -> Result<LinearClassifier, TrainError> {
    let mut values: Vec<f64> = s.iter().map(|(_, x)| x[0]).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let mut thresholds = Vec::with_capacity(values.len() + 1);
    thresholds.push(values[0] - 1.0);
    for pair in values.windows(2) {
        thresholds.push(0.5 * (pair[0] + pair[1]));
    }
    thresholds.push(values[values.len() - 1] + 1.0);

    // (error count, threshold, orientation rank) lexicographic minimum
    let mut best: Option<(usize, f64, u8, LinearClassifier)> = None;
    for &t in &thresholds {
        for (rank, g) in [
            (0u8, LinearClassifier::new(vec![1.0], -t)),
            (1u8, LinearClassifier::new(vec![-1.0], t)),
        ] {
            let errs = s.iter().filter(|(y, x)| g.decide(x) != *y).count();
            let better = match &best {
                None => true,
                Some((be, bt, br, _)) => {
                    (errs, t, rank) < (*be, *bt, *br)
                }
            };
            if better {
                best = Some((errs, t, rank, g));
            }
        }
    }
    Ok(best.expect("threshold list is nonempty").3)
}

/// Exact 0-1 ERM over halfspaces on the first `m` coordinates by enumerating
/// hyperplanes through sample-point subsets. Every subset of size `<= m`
/// contributes the hyperplanes containing it (nullspace of the incidence
/// system); each hyperplane is tried in both orientations and with the
/// boundary points assigned to either strict side. An arrangement argument
/// guarantees some candidate attains the optimum.
pub fn erm_exact_enum(s: &LabeledSample, m: usize) -> Result<LinearClassifier, TrainError> {
    let n = s.len();
    if m > EXACT_ENUM_MAX_DIM || n > EXACT_ENUM_MAX_N {
        return Err(TrainError::InstanceTooLarge { m, n });
    }
    if m > s.dim() {
        return Err(TrainError::DimensionTooLarge { m, p: s.dim() });
    }

    let mut best_err = usize::MAX;
    let mut best: Option<LinearClassifier> = None;
    let consider = |g: LinearClassifier, best_err: &mut usize, best: &mut Option<LinearClassifier>| {
        let errs = s.iter().filter(|(y, x)| g.decide(x) != *y).count();
        if errs < *best_err {
            *best_err = errs;
            *best = Some(g);
        }
    };

    consider(LinearClassifier::constant(0), &mut best_err, &mut best);
    consider(LinearClassifier::constant(1), &mut best_err, &mut best);

    let mut subset = vec![0usize; m];
    for size in 1..=m {
        enumerate_subsets(n, size, &mut subset[..size], 0, 0, &mut |idx| {
            for (a, b) in hyperplanes_through(s, idx, m) {
                for (a, b) in [(a.clone(), b), (a.iter().map(|v| -v).collect(), -b)] {
                    // boundary points on the predicted-1 side
                    consider(
                        LinearClassifier::new(a.clone(), b),
                        &mut best_err,
                        &mut best,
                    );
                    // boundary points on the predicted-0 side: shift by half
                    // the smallest nonzero margin magnitude
                    let cls = LinearClassifier::new(a.clone(), b);
                    let delta = s
                        .iter()
                        .map(|(_, x)| cls.margin(x).abs())
                        .filter(|v| *v > 0.0)
                        .fold(f64::INFINITY, f64::min);
                    if delta.is_finite() {
                        consider(
                            LinearClassifier::new(a, b - 0.5 * delta),
                            &mut best_err,
                            &mut best,
                        );
                    }
                }
            }
        });
    }
    Ok(best.expect("constants are always candidates"))
}

fn enumerate_subsets(
    n: usize,
    size: usize,
    subset: &mut [usize],
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == size {
        visit(subset);
        return;
    }
    for i in start..n {
        subset[depth] = i;
        enumerate_subsets(n, size, subset, depth + 1, i + 1, visit);
    }
}

/// Basis of hyperplanes `(a, b)` with `a . x_i + b = 0` for all chosen points,
/// from the nullspace of the k x (m+1) incidence matrix.
fn hyperplanes_through(s: &LabeledSample, idx: &[usize], m: usize) -> Vec<(Vec<f64>, f64)> {
    let cols = m + 1;
    let mut rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let mut r: Vec<f64> = s.features(i)[..m].to_vec();
            r.push(1.0);
            r
        })
        .collect();

    // reduced row echelon form with partial pivoting
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows.len() {
            break;
        }
        let (pr, pv) = (r..rows.len())
            .map(|i| (i, rows[i][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pv < 1e-12 {
            continue;
        }
        rows.swap(r, pr);
        let inv = 1.0 / rows[r][c];
        for v in rows[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0.0 {
                let f = rows[i][c];
                for c2 in 0..cols {
                    rows[i][c2] -= f * rows[r][c2];
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }

    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![0.0; cols];
        v[free] = 1.0;
        for (row, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -rows[row][free];
        }
        let b = v.pop().unwrap();
        if v.iter().all(|x| *x == 0.0) && b == 0.0 {
            continue;
        }
        basis.push((v, b));
    }
    basis
}

pub(crate) fn mix_seed(base: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random-restart coordinate descent on the 0-1 loss of `(a, b)`.
///
/// Each coordinate update sweeps the piecewise-constant loss over the critical
/// values where some point crosses the boundary, evaluating criticals and
/// midpoints. Never returns a rule worse than the best constant classifier;
/// fully reproducible from the seed.
pub fn erm_stochastic(
    s: &LabeledSample,
    m: usize,
    seed: u64,
    restarts: usize,
    iters: usize,
) -> LinearClassifier {
    let m = m.min(s.dim());
    let mut best = [LinearClassifier::constant(0), LinearClassifier::constant(1)]
        .into_iter()
        .map(|g| (s.iter().filter(|(y, x)| g.decide(x) != *y).count(), g))
        .min_by_key(|(e, _)| *e)
        .unwrap();

    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, restart as u64 + 1));
        let mut coeffs = initial_direction(s, m, restart, &mut rng);
        // Pair the direction with its best intercept right away; a random
        // intercept routinely strands the first sweep in a poor basin.
        let (v, e) = best_coordinate_value(s, &coeffs, 0.0, m, m);
        let mut intercept = v;
        let mut cur_err = e;
        for _ in 0..iters {
            let before = cur_err;
            for coord in 0..=m {
                let (v, errs) = best_coordinate_value(s, &coeffs, intercept, coord, m);
                if errs < cur_err {
                    cur_err = errs;
                    if coord < m {
                        coeffs[coord] = v;
                    } else {
                        intercept = v;
                    }
                }
            }
            if cur_err == before {
                break;
            }
        }
        if cur_err < best.0 {
            best = (cur_err, LinearClassifier::new(coeffs, intercept));
        }
    }
    best.1
}

/// Restart 0 points from the class-0 mean towards the class-1 mean; later
/// restarts use the difference of a random opposite-label pair. Degenerate
/// directions (all-zero, one class absent) fall back to standard Gaussian
/// coefficients.
fn initial_direction(
    s: &LabeledSample,
    m: usize,
    restart: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut idx: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let rows: Vec<&[f64]> = s
        .iter()
        .enumerate()
        .map(|(i, (y, x))| {
            idx[y as usize].push(i);
            x
        })
        .collect();
    if !idx[0].is_empty() && !idx[1].is_empty() {
        let mut dir = vec![0.0; m];
        if restart == 0 {
            for c in 0..m {
                let mean = |ids: &[usize]| {
                    ids.iter().map(|&i| rows[i][c]).sum::<f64>() / ids.len() as f64
                };
                dir[c] = mean(&idx[1]) - mean(&idx[0]);
            }
        } else {
            let i0 = idx[0][rng.random_range(0..idx[0].len())];
            let i1 = idx[1][rng.random_range(0..idx[1].len())];
            for c in 0..m {
                dir[c] = rows[i1][c] - rows[i0][c];
            }
        }
        if dir.iter().any(|&v| v != 0.0) {
            return dir;
        }
    }
    (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Optimal value of one coordinate (`coord == m` means the intercept), holding
/// the others fixed. Returns the smallest minimizing value.
fn best_coordinate_value(
    s: &LabeledSample,
    coeffs: &[f64],
    intercept: f64,
    coord: usize,
    m: usize,
) -> (f64, usize) {
    let n = s.len();
    // margin contribution without the varying coordinate, and its multiplier
    let mut rest = Vec::with_capacity(n);
    let mut mult = Vec::with_capacity(n);
    for (_, x) in s.iter() {
        let full: f64 = coeffs.iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>() + intercept;
        if coord < m {
            rest.push(full - coeffs[coord] * x[coord]);
            mult.push(x[coord]);
        } else {
            rest.push(full - intercept);
            mult.push(1.0);
        }
    }

    let mut criticals: Vec<f64> = (0..n)
        .filter(|&i| mult[i] != 0.0)
        .map(|i| -rest[i] / mult[i])
        .collect();
    criticals.sort_by(f64::total_cmp);
    criticals.dedup();

    let mut candidates = Vec::with_capacity(2 * criticals.len() + 2);
    if criticals.is_empty() {
        candidates.push(0.0);
    } else {
        candidates.push(criticals[0] - 1.0);
        for (k, &c) in criticals.iter().enumerate() {
            candidates.push(c);
            if k + 1 < criticals.len() {
                candidates.push(0.5 * (c + criticals[k + 1]));
            }
        }
        candidates.push(criticals[criticals.len() - 1] + 1.0);
    }

    let mut best_v = candidates[0];
    let mut best_e = usize::MAX;
    for &v in &candidates {
        let mut errs = 0usize;
        for (i, (y, _)) in s.iter().enumerate() {
            let pred = u8::from(rest[i] + v * mult[i] >= 0.0);
            errs += usize::from(pred != y);
        }
        if errs < best_e {
            best_e = errs;
            best_v = v;
        }
    }
    (best_v, best_e)
}

/// Two isotropic Gaussian classes `N(mu0, sigma^2 I)` and `N(mu1, sigma^2 I)`
/// with class-0 prior `p0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGaussianSpec {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma: f64,
    pub p0: f64,
}

impl TwoGaussianSpec {
    pub fn new(mu0: Vec<f64>, mu1: Vec<f64>, sigma: f64, p0: f64) -> Self {
        assert_eq!(mu0.len(), mu1.len(), "means must share a dimension");
        assert!(sigma > 0.0, "sigma must be positive");
        assert!(p0 > 0.0 && p0 < 1.0, "prior must be interior");
        Self { mu0, mu1, sigma, p0 }
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    /// Exact error of an arbitrary linear rule under this mixture: the margin
    /// is Gaussian within each class.
    pub fn linear_rule_error(&self, g: &LinearClassifier) -> f64 {
        let norm = Normal::standard();
        let a_norm: f64 = g.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if a_norm == 0.0 {
            // constant rule
            return if g.intercept >= 0.0 { self.p0 } else { 1.0 - self.p0 };
        }
        let z = |mu: &[f64]| g.margin(mu) / (self.sigma * a_norm);
        // P_k(g=1) = Phi(z_k)
        self.p0 * norm.cdf(z(&self.mu0)) + (1.0 - self.p0) * (1.0 - norm.cdf(z(&self.mu1)))
    }

    /// Bayes rule restricted to the first `m` coordinates, which is the
    /// minimal-error member of the prefix family `G_m` for this mixture.
    pub fn prefix_bayes_rule(&self, m: usize) -> LinearClassifier {
        let (g, _) = bayes_two_gaussians(
            &self.mu0[..m],
            &self.mu1[..m],
            self.sigma,
            self.p0,
        );
        g
    }

    /// Minimal error within the prefix family `G_m`.
    pub fn prefix_bayes_error(&self, m: usize) -> f64 {
        let (_, err) = bayes_two_gaussians(
            &self.mu0[..m],
            &self.mu1[..m],
            self.sigma,
            self.p0,
        );
        err
    }
}

/// Bayes rule and exact Bayes error for the two-Gaussian mixture with shared
/// isotropic covariance. With `d = |mu1 - mu0| / sigma`:
/// `Err(P) = p0 Phi(-d/2 + ln(p0/p1)/d) + p1 Phi(-d/2 - ln(p0/p1)/d)`.
pub fn bayes_two_gaussians(
    mu0: &[f64],
    mu1: &[f64],
    sigma: f64,
    p0: f64,
) -> (LinearClassifier, f64) {
    assert_eq!(mu0.len(), mu1.len());
    assert!(sigma > 0.0 && p0 > 0.0 && p0 < 1.0);
    let p1 = 1.0 - p0;
    let dist: f64 = mu0
        .iter()
        .zip(mu1)
        .map(|(u, v)| (v - u) * (v - u))
        .sum::<f64>()
        .sqrt();
    if dist == 0.0 {
        let majority = u8::from(p1 >= p0);
        return (LinearClassifier::constant(majority), p0.min(p1));
    }
    let s2 = sigma * sigma;
    let coeffs: Vec<f64> = mu0.iter().zip(mu1).map(|(u, v)| (v - u) / s2).collect();
    let sq = |xs: &[f64]| xs.iter().map(|v| v * v).sum::<f64>();
    let intercept = (sq(mu0) - sq(mu1)) / (2.0 * s2) + (p1 / p0).ln();

    let d = dist / sigma;
    let norm = Normal::standard();
    let shift = (p0 / p1).ln() / d;
    let err = p0 * norm.cdf(-d / 2.0 - shift) + p1 * norm.cdf(-d / 2.0 + shift);
    (LinearClassifier::new(coeffs, intercept), err)
}
