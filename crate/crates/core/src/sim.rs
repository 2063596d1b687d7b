//! Seeded generators for contaminated classification data and experiment
//! runners that check the trimming bounds numerically.
//!
//! Contamination follows the Huber mixture `(1-eps) P_clean + eps P_outlier`
//! with two outlier mechanisms: flipped labels and covariate-shifted points
//! labeled against the clean Bayes rule. Every runner is reproducible
//! bit-for-bit from its spec and seed; replication seeds come from a
//! splittable counter so aggregation is order-independent.

use crate::classify::LinearClassifier;
use crate::family::{bayes_two_gaussians, mix_seed, FamilyCollection, TwoGaussianSpec};
use crate::sample::LabeledSample;
use crate::select::{
    oracle_bound_joint, oracle_bound_single, select_alpha, select_alpha_model, SelectError,
    SelectionConfig,
};
use crate::trim::{
    bias_bound, empirical_error, empirical_trimmed_error_polytope, lipschitz_alpha_bound,
    trimmed_error_closed_form, trimmed_error_decomposition_oracle, MixtureSpec, TrimError,
    TrimLevel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// Default Monte Carlo size for true-error estimation when no closed form
/// applies.
pub const DEFAULT_TRUE_ERROR_POINTS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("contamination rate must lie in [0,1): got {0}")]
    EpsOutOfRange(f64),
    #[error("outlier mean dimension {got} does not match the clean spec dimension {expected}")]
    OutlierDimMismatch { expected: usize, got: usize },
    #[error(
        "too few replications for the tail level: need at least {needed} (= 100 e^z), got {got}"
    )]
    InsufficientReps { needed: usize, got: usize },
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Trim(#[from] TrimError),
}

/// Outlier mechanism of the Huber mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum OutlierKind {
    /// Clean draw with its label flipped.
    LabelFlip,
    /// Feature vector from `N(mu_out, sigma_out^2 I)`, labeled against the
    /// clean Bayes rule so the point is an outlier for any sensible rule.
    CovariateShift { mu_out: Vec<f64>, sigma_out: f64 },
}

/// A contaminated two-Gaussian generator, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct ContaminationSpec {
    pub clean: TwoGaussianSpec,
    pub eps: f64,
    pub outlier: OutlierKind,
    pub seed: u64,
}

/// A generated sample plus the ground-truth outlier indices.
#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub sample: LabeledSample,
    pub outlier_indices: Vec<usize>,
}

/// Stream-`k` seed for replication `k` of a run seeded with `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix_seed(base, stream)
}

impl ContaminationSpec {
    pub fn new(
        clean: TwoGaussianSpec,
        eps: f64,
        outlier: OutlierKind,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if !(0.0..1.0).contains(&eps) {
            return Err(HarnessError::EpsOutOfRange(eps));
        }
        if let OutlierKind::CovariateShift { mu_out, .. } = &outlier {
            if mu_out.len() != clean.dim() {
                return Err(HarnessError::OutlierDimMismatch {
                    expected: clean.dim(),
                    got: mu_out.len(),
                });
            }
        }
        Ok(Self {
            clean,
            eps,
            outlier,
            seed,
        })
    }

    /// Draws `n` i.i.d. points from the mixture using the spec's own seed.
    pub fn generate(&self, n: usize) -> GeneratedSample {
        self.generate_with_seed(n, self.seed)
    }

    /// Same generator under an explicit seed (used for replication streams).
    pub fn generate_with_seed(&self, n: usize, seed: u64) -> GeneratedSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.clean.dim();
        let (bayes_rule, _) = bayes_two_gaussians(
            &self.clean.mu0,
            &self.clean.mu1,
            self.clean.sigma,
            self.clean.p0,
        );

        let mut rows = Vec::with_capacity(n);
        let mut outlier_indices = Vec::new();
        for i in 0..n {
            let is_outlier = rng.random::<f64>() < self.eps;
            let (label, x) = if is_outlier {
                outlier_indices.push(i);
                match &self.outlier {
                    OutlierKind::LabelFlip => {
                        let (y, x) = self.draw_clean(&mut rng, dim);
                        (1 - y, x)
                    }
                    OutlierKind::CovariateShift { mu_out, sigma_out } => {
                        let x: Vec<f64> = mu_out
                            .iter()
                            .map(|&m| m + sigma_out * rng.sample::<f64, _>(StandardNormal))
                            .collect();
                        let label = 1 - i64::from(crate::classify::Classifier::decide(
                            &bayes_rule,
                            &x,
                        ));
                        (label, x)
                    }
                }
            } else {
                self.draw_clean(&mut rng, dim)
            };
            rows.push((label, x));
        }
        let sample = LabeledSample::validate(&rows).expect("generator emits valid rows");
        GeneratedSample {
            sample,
            outlier_indices,
        }
    }

    fn draw_clean(&self, rng: &mut ChaCha8Rng, dim: usize) -> (i64, Vec<f64>) {
        let label = i64::from(rng.random::<f64>() >= self.clean.p0);
        let mu = if label == 0 {
            &self.clean.mu0
        } else {
            &self.clean.mu1
        };
        let x = (0..dim)
            .map(|j| mu[j] + self.clean.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (label, x)
    }

    /// True error of a linear rule under the mixture: closed form where the
    /// mixture admits one, otherwise Monte Carlo with the standard error
    /// reported alongside. Returns `(error, std_error)`.
    pub fn true_linear_error(&self, g: &LinearClassifier, mc_points: usize) -> (f64, f64) {
        let clean_err = self.clean.linear_rule_error(g);
        if self.eps == 0.0 {
            return (clean_err, 0.0);
        }
        match &self.outlier {
            OutlierKind::LabelFlip => {
                // flipping the label turns correct into incorrect and back
                ((1.0 - self.eps) * clean_err + self.eps * (1.0 - clean_err), 0.0)
            }
            OutlierKind::CovariateShift { mu_out, sigma_out } => {
                let (bayes_rule, _) = bayes_two_gaussians(
                    &self.clean.mu0,
                    &self.clean.mu1,
                    self.clean.sigma,
                    self.clean.p0,
                );
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, 0x7275_6c65));
                let mut agree = 0usize;
                for _ in 0..mc_points {
                    let x: Vec<f64> = mu_out
                        .iter()
                        .map(|&m| m + sigma_out * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    use crate::classify::Classifier;
                    // outlier labels are 1 - bayes(x): g errs exactly when it
                    // agrees with the bayes rule there
                    agree += usize::from(g.decide(&x) == bayes_rule.decide(&x));
                }
                let f = agree as f64 / mc_points as f64;
                let se = self.eps * (f * (1.0 - f) / mc_points as f64).sqrt();
                (
                    (1.0 - self.eps) * clean_err + self.eps * f,
                    se,
                )
            }
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Measured {
    pub mean: f64,
    pub std_error: f64,
}

/// A single pass/fail check inside a report.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Result of one experiment runner: measurements, the bounds they were held
/// against, and per-assertion verdicts. Monte Carlo assertions carry three
/// standard errors of slack; deterministic ones are exact.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub replications: usize,
    pub measured: BTreeMap<String, Measured>,
    pub bounds: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    fn new(name: &str, replications: usize) -> (Self, Instant) {
        (
            Self {
                name: name.to_string(),
                replications,
                measured: BTreeMap::new(),
                bounds: BTreeMap::new(),
                assertions: Vec::new(),
                runtime_secs: 0.0,
            },
            Instant::now(),
        )
    }

    fn assert_le(&mut self, name: &str, lhs: f64, rhs: f64, slack: f64) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            pass: lhs <= rhs + slack,
            detail: format!("{lhs} <= {rhs} + {slack}"),
        });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// Mean and standard error of a slice.
fn mean_se(values: &[f64]) -> Measured {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Measured {
        mean,
        std_error: (var / n).sqrt(),
    }
}

/// Checks the bias sandwich `0 <= E(R_{n,alpha}) - R_alpha <= bias_bound`
/// by Monte Carlo.
pub fn verify_bias_bound(
    g: &LinearClassifier,
    spec: &ContaminationSpec,
    n: usize,
    alpha: TrimLevel,
    reps: usize,
) -> Result<ExperimentReport, HarnessError> {
    let (mut report, start) = ExperimentReport::new("bias_bound", reps);
    let (err_true, err_se) = spec.true_linear_error(g, DEFAULT_TRUE_ERROR_POINTS);
    let r_alpha_true = trimmed_error_closed_form(err_true, alpha)?;
    let bound = bias_bound(err_true, n, alpha)?;

    let mut values = Vec::with_capacity(reps);
    for rep in 0..reps {
        let generated = spec.generate_with_seed(n, derive_seed(spec.seed, rep as u64 + 1));
        let rn = empirical_error(&generated.sample, g);
        values.push(trimmed_error_closed_form(rn, alpha)?);
    }
    let m = mean_se(&values);
    let bias = m.mean - r_alpha_true;
    // uncertainty in the reference trimmed error inflates the slack
    let slack = 3.0 * (m.std_error + err_se / (1.0 - alpha.value()));

    report.measured.insert("mean_trimmed_empirical_error".into(), m);
    report.measured.insert(
        "bias".into(),
        Measured {
            mean: bias,
            std_error: m.std_error,
        },
    );
    report.bounds.insert("true_error".into(), err_true);
    report.bounds.insert("trimmed_true_error".into(), r_alpha_true);
    report.bounds.insert("bias_upper_bound".into(), bound);
    report.assert_le("bias_nonnegative", -bias, 0.0, slack);
    report.assert_le("bias_below_bound", bias, bound, slack);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Checks the McDiarmid upper tail of `R_{n,alpha}` around its mean:
/// frequency of deviations above `sqrt(z/(2n(1-alpha)^2))` at most `e^-z`.
pub fn verify_concentration(
    g: &LinearClassifier,
    spec: &ContaminationSpec,
    n: usize,
    alpha: TrimLevel,
    reps: usize,
    z: f64,
) -> Result<ExperimentReport, HarnessError> {
    let needed = (100.0 * z.exp()).ceil() as usize;
    if reps < needed {
        return Err(HarnessError::InsufficientReps { needed, got: reps });
    }
    let (mut report, start) = ExperimentReport::new("concentration", reps);

    let mut values = Vec::with_capacity(reps);
    for rep in 0..reps {
        let generated = spec.generate_with_seed(n, derive_seed(spec.seed, rep as u64 + 1));
        let rn = empirical_error(&generated.sample, g);
        values.push(trimmed_error_closed_form(rn, alpha)?);
    }
    let m = mean_se(&values);
    let threshold = (z / (2.0 * n as f64 * (1.0 - alpha.value()).powi(2))).sqrt();
    let tail = values.iter().filter(|&&v| v - m.mean >= threshold).count();
    let freq = tail as f64 / reps as f64;
    let p = (-z).exp();
    let freq_se = (p * (1.0 - p) / reps as f64).sqrt();

    report.measured.insert(
        "tail_frequency".into(),
        Measured {
            mean: freq,
            std_error: freq_se,
        },
    );
    report.measured.insert("mean_trimmed_empirical_error".into(), m);
    report.bounds.insert("mcdiarmid_tail".into(), p);
    report.bounds.insert("deviation_threshold".into(), threshold);
    report.assert_le("tail_below_mcdiarmid", freq, p, 3.0 * freq_se);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Checks the single-classifier oracle inequality: the mean true trimmed
/// error at the selected level stays below the bound.
pub fn verify_oracle_single(
    g: &LinearClassifier,
    spec: &ContaminationSpec,
    n: usize,
    cfg: &SelectionConfig,
    reps: usize,
) -> Result<ExperimentReport, HarnessError> {
    let (mut report, start) = ExperimentReport::new("oracle_single", reps);
    let (err_true, err_se) = spec.true_linear_error(g, DEFAULT_TRUE_ERROR_POINTS);
    let bound = oracle_bound_single(err_true, n, cfg)?;

    let mut values = Vec::with_capacity(reps);
    let mut alpha_hats = Vec::with_capacity(reps);
    for rep in 0..reps {
        let generated = spec.generate_with_seed(n, derive_seed(spec.seed, rep as u64 + 1));
        let res = select_alpha(&generated.sample, g, cfg)?;
        let alpha_hat = TrimLevel::new(res.alpha_hat).expect("selected level is valid");
        values.push(trimmed_error_closed_form(err_true, alpha_hat)?);
        alpha_hats.push(res.alpha_hat);
    }
    let m = mean_se(&values);
    let slack = 3.0 * (m.std_error + err_se / (1.0 - cfg.alpha_max.value()));

    report.measured.insert("mean_trimmed_risk".into(), m);
    report
        .measured
        .insert("alpha_hat".into(), mean_se(&alpha_hats));
    report.bounds.insert("true_error".into(), err_true);
    report.bounds.insert("oracle_bound".into(), bound.value);
    report
        .bounds
        .insert("oracle_bound_grid_infimum".into(), bound.grid_infimum);
    report.assert_le("mean_risk_below_oracle_bound", m.mean, bound.value, slack);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Minimal true errors per prefix family: closed form for a clean spec, a
/// Monte Carlo holdout through the restricted Bayes rule otherwise (an
/// approximation of the population minimizer, reported as such).
pub fn family_true_errors(
    spec: &ContaminationSpec,
    fams: &FamilyCollection,
    mc_points: usize,
) -> Vec<(f64, f64)> {
    fams.families()
        .iter()
        .map(|fam| {
            let rule = spec.clean.prefix_bayes_rule(fam.index);
            if spec.eps == 0.0 {
                (spec.clean.prefix_bayes_error(fam.index), 0.0)
            } else {
                spec.true_linear_error(&rule, mc_points)
            }
        })
        .collect()
}

/// Checks the joint oracle inequality over a family collection and reports
/// the selection histogram.
pub fn verify_oracle_joint(
    fams: &FamilyCollection,
    spec: &ContaminationSpec,
    n: usize,
    cfg: &SelectionConfig,
    reps: usize,
) -> Result<ExperimentReport, HarnessError> {
    let (mut report, start) = ExperimentReport::new("oracle_joint", reps);
    let errs = family_true_errors(spec, fams, DEFAULT_TRUE_ERROR_POINTS);
    let errs_true: Vec<f64> = errs.iter().map(|(e, _)| *e).collect();
    let errs_se: f64 = errs.iter().map(|(_, se)| *se).fold(0.0, f64::max);
    let bound = oracle_bound_joint(fams, &errs_true, n, cfg)?;

    let mut values = Vec::with_capacity(reps);
    let mut alpha_hats = Vec::with_capacity(reps);
    let mut m_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for rep in 0..reps {
        let generated = spec.generate_with_seed(n, derive_seed(spec.seed, rep as u64 + 1));
        let res = select_alpha_model(&generated.sample, fams, cfg)?;
        let m_hat = res.m_hat.expect("joint selection always reports m_hat");
        let pos = fams
            .families()
            .iter()
            .position(|f| f.index == m_hat)
            .expect("selected family comes from the collection");
        let alpha_hat = TrimLevel::new(res.alpha_hat).expect("selected level is valid");
        values.push(trimmed_error_closed_form(errs_true[pos], alpha_hat)?);
        alpha_hats.push(res.alpha_hat);
        *m_counts.entry(m_hat).or_default() += 1;
    }
    let m = mean_se(&values);
    let slack = 3.0 * (m.std_error + errs_se / (1.0 - cfg.alpha_max.value()));

    report.measured.insert("mean_trimmed_risk".into(), m);
    report
        .measured
        .insert("alpha_hat".into(), mean_se(&alpha_hats));
    for (m_hat, count) in &m_counts {
        report.measured.insert(
            format!("selected_m_{m_hat}_fraction"),
            Measured {
                mean: *count as f64 / reps as f64,
                std_error: 0.0,
            },
        );
    }
    for (fam, (e, _)) in fams.families().iter().zip(&errs) {
        report
            .bounds
            .insert(format!("true_error_m_{}", fam.index), *e);
    }
    report.bounds.insert("oracle_bound".into(), bound.value);
    report.assert_le("mean_risk_below_oracle_bound", m.mean, bound.value, slack);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Exhaustive deterministic check of `Err_alpha = 0 <=> Err <= alpha` over
/// the given grids. Admits zero failures.
pub fn verify_threshold_property(
    err_grid: &[f64],
    alpha_grid: &[TrimLevel],
) -> Result<ExperimentReport, HarnessError> {
    let (mut report, start) = ExperimentReport::new("threshold_property", 0);
    let mut failures = 0usize;
    for &err in err_grid {
        for &alpha in alpha_grid {
            let trimmed = trimmed_error_closed_form(err, alpha)?;
            let zero = trimmed == 0.0;
            let below = err <= alpha.value();
            if zero != below {
                failures += 1;
            }
        }
    }
    let total = err_grid.len() * alpha_grid.len();
    report.measured.insert(
        "failures".into(),
        Measured {
            mean: failures as f64,
            std_error: 0.0,
        },
    );
    report.bounds.insert("grid_points".into(), total as f64);
    report.assert_le("threshold_equivalence_exact", failures as f64, 0.0, 0.0);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Exhaustive check that successive trimming levels change both the
/// population and the empirical trimmed error by at most
/// `1/(n(1-alpha_max)^2)`. Zero tolerance.
pub fn verify_lipschitz(
    ns: &[usize],
    alpha_max: TrimLevel,
    spec: &ContaminationSpec,
) -> Result<ExperimentReport, HarnessError> {
    let (mut report, start) = ExperimentReport::new("lipschitz_sweep", 0);
    let mut failures = 0usize;
    let mut max_ratio: f64 = 0.0;
    for &n in ns {
        let bound = lipschitz_alpha_bound(n, alpha_max);
        let cfg = SelectionConfig::new(alpha_max, 1.0);
        let grid = cfg.grid(n);

        // population route over a sweep of error rates
        for k in 0..=20 {
            let err = k as f64 / 20.0;
            for pair in grid.windows(2) {
                let diff = trimmed_error_closed_form(err, pair[0])?
                    - trimmed_error_closed_form(err, pair[1])?;
                if diff > bound {
                    failures += 1;
                }
                max_ratio = max_ratio.max(diff / bound);
            }
        }

        // empirical route on a seeded contaminated sample
        let generated = spec.generate_with_seed(n, derive_seed(spec.seed, n as u64));
        let (g, _) = bayes_two_gaussians(
            &spec.clean.mu0,
            &spec.clean.mu1,
            spec.clean.sigma,
            spec.clean.p0,
        );
        let trimmed: Vec<f64> = grid
            .iter()
            .map(|&a| empirical_trimmed_error_polytope(&generated.sample, &g, a).value)
            .collect();
        for pair in trimmed.windows(2) {
            let diff = pair[0] - pair[1];
            if diff > bound {
                failures += 1;
            }
            max_ratio = max_ratio.max(diff / bound);
        }
    }
    report.measured.insert(
        "failures".into(),
        Measured {
            mean: failures as f64,
            std_error: 0.0,
        },
    );
    report.measured.insert(
        "max_diff_to_bound_ratio".into(),
        Measured {
            mean: max_ratio,
            std_error: 0.0,
        },
    );
    report.assert_le("lipschitz_exact", failures as f64, 0.0, 0.0);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Random-instance equivalence of the polytope solver with the closed form,
/// plus the decomposition-lemma oracle against the closed form on a dense
/// parameter grid.
pub fn verify_equivalence(
    seed: u64,
    instances: usize,
    max_n: usize,
) -> Result<ExperimentReport, HarnessError> {
    let (mut report, start) = ExperimentReport::new("equivalence", instances);

    // polytope vs closed form on random instances
    let mut max_poly_diff: f64 = 0.0;
    for instance in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, instance as u64 + 1));
        let n = rng.random_range(1..=max_n);
        let p = rng.random_range(1..=3);
        let rows: Vec<(i64, Vec<f64>)> = (0..n)
            .map(|_| {
                let y = i64::from(rng.random::<bool>());
                let x = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                (y, x)
            })
            .collect();
        let s = LabeledSample::validate(&rows).expect("generated rows are valid");
        let coeffs: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g = LinearClassifier::new(coeffs, rng.sample(StandardNormal));
        let err = empirical_error(&s, &g);
        let full_grid = (0..n).map(|k| TrimLevel::new(k as f64 / n as f64).unwrap());
        for alpha in full_grid {
            let poly = empirical_trimmed_error_polytope(&s, &g, alpha).value;
            let closed = trimmed_error_closed_form(err, alpha)?;
            max_poly_diff = max_poly_diff.max((poly - closed).abs());
        }
    }

    // decomposition oracle vs closed form on a 20^4 grid
    let mut max_decomp_diff: f64 = 0.0;
    for i in 0..20 {
        let p0 = (2 * i + 1) as f64 / 40.0;
        for j in 0..20 {
            let q00 = j as f64 / 19.0;
            for k in 0..20 {
                let q11 = k as f64 / 19.0;
                let mix = MixtureSpec::new(p0, q00, q11).expect("grid stays in range");
                for l in 0..20 {
                    let alpha = TrimLevel::new(l as f64 / 20.0).expect("grid stays below 1");
                    let decomp = trimmed_error_decomposition_oracle(&mix, alpha);
                    let closed =
                        trimmed_error_closed_form(mix.classification_error(), alpha)?;
                    max_decomp_diff = max_decomp_diff.max((decomp - closed).abs());
                }
            }
        }
    }

    report.measured.insert(
        "max_polytope_closed_form_diff".into(),
        Measured {
            mean: max_poly_diff,
            std_error: 0.0,
        },
    );
    report.measured.insert(
        "max_decomposition_closed_form_diff".into(),
        Measured {
            mean: max_decomp_diff,
            std_error: 0.0,
        },
    );
    report.bounds.insert("polytope_tolerance".into(), 1e-12);
    report.bounds.insert("decomposition_tolerance".into(), 1e-9);
    report.assert_le("polytope_equivalence", max_poly_diff, 1e-12, 0.0);
    report.assert_le("decomposition_equivalence", max_decomp_diff, 1e-9, 0.0);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}
