//! The four subcommands. Every command builds one JSON document embedding the
//! fully resolved configuration and seed, rendered through the deterministic
//! formatter, so identical inputs produce byte-identical outputs.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use trimclass::sim::{
    verify_bias_bound, verify_concentration, verify_equivalence, verify_lipschitz,
    verify_oracle_joint, verify_oracle_single, verify_threshold_property, ExperimentReport,
    GeneratedSample,
};
use trimclass::trim::TrimLevel;
use trimclass::{
    bayes_two_gaussians, empirical_error, empirical_trimmed_error_polytope, train,
    ContaminationSpec, FamilyCollection, LinearClassifier, OutlierKind, SelectionConfig,
    TrainerKind, TwoGaussianSpec,
};

use crate::config::RunConfig;
use crate::data::{read_csv, write_csv, Dataset};
use crate::{jsonfmt, CliError};

const SUITES: [&str; 8] = [
    "bias",
    "concentration",
    "lipschitz",
    "threshold",
    "oracle-single",
    "oracle-joint",
    "equivalence",
    "all",
];

fn provenance(command: &str, cfg: &RunConfig, seed: u64) -> Value {
    json!({
        "command": command,
        "config": cfg.values(),
        "seed": seed,
    })
}

fn trainer_from(cfg: &RunConfig, seed: u64) -> Result<TrainerKind, CliError> {
    let restarts = cfg.parse("restarts", 50usize)?;
    let iters = cfg.parse("iters", 200usize)?;
    match cfg.get("trainer").unwrap_or("auto") {
        "sweep" => Ok(TrainerKind::ExactSweep1d),
        "enum" => Ok(TrainerKind::ExactEnumeration),
        "stochastic" => Ok(TrainerKind::StochasticSearch {
            seed,
            restarts,
            iters,
        }),
        "auto" => Ok(TrainerKind::Auto {
            seed,
            restarts,
            iters,
        }),
        other => Err(CliError::Usage(format!(
            "unknown trainer {other:?}; expected sweep, enum, stochastic, or auto"
        ))),
    }
}

fn alpha_max_from(cfg: &RunConfig) -> Result<TrimLevel, CliError> {
    let raw = cfg.parse("alpha_max", 0.25f64)?;
    TrimLevel::new(raw).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_input(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let input = cfg.require("input")?.to_string();
    let label = cfg.get("label").unwrap_or("label").to_string();
    read_csv(Path::new(&input), &label)
}

fn emit(out: Option<PathBuf>, document: &Value) -> Result<(), CliError> {
    let rendered = jsonfmt::to_string(document);
    match out {
        Some(path) => {
            std::fs::write(&path, rendered)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}

/// `trim-error`: the plain and trimmed empirical errors of a classifier over
/// the whole trimming grid, plus the trimmed-out indices at a requested level.
pub fn cmd_trim_error(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_input(cfg)?;
    let seed = cfg.parse("seed", 0u64)?;
    let alpha_max = alpha_max_from(cfg)?;
    let n = data.sample.len();

    // a fixed linear rule if coefficients are configured, otherwise train
    let classifier = match cfg.get("coeffs") {
        Some(_) => {
            let coeffs = cfg.parse_vec("coeffs", &[])?;
            if coeffs.len() != data.sample.dim() {
                return Err(CliError::Usage(format!(
                    "coeffs has {} entries but the data has {} feature columns",
                    coeffs.len(),
                    data.sample.dim()
                )));
            }
            LinearClassifier::new(coeffs, cfg.parse("intercept", 0.0f64)?)
        }
        None => {
            let fams = FamilyCollection::linear_prefixes(
                data.sample.dim(),
                data.sample.dim(),
                trainer_from(cfg, seed)?,
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let fam = fams.families().last().expect("collection is nonempty");
            train(fam, &data.sample).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };

    let err = empirical_error(&data.sample, &classifier);
    let sel = SelectionConfig::new(alpha_max, cfg.parse("sigma", 1.0f64)?);
    let grid: Vec<Value> = sel
        .grid(n)
        .iter()
        .map(|&a| {
            let out = empirical_trimmed_error_polytope(&data.sample, &classifier, a);
            json!({"alpha": a.value(), "trimmed_error": out.value})
        })
        .collect();

    let requested = TrimLevel::new(cfg.parse("alpha", alpha_max.value())?)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let at_requested = empirical_trimmed_error_polytope(&data.sample, &classifier, requested);

    let document = json!({
        "provenance": provenance("trim-error", cfg, seed),
        "empirical_error": err,
        "grid": grid,
        "requested_alpha": requested.value(),
        "trimmed_error_at_requested_alpha": at_requested.value,
        "trimmed_indices": at_requested.trimmed_indices,
        "partially_trimmed": at_requested.partially_trimmed,
        "classifier": serde_json::to_value(&classifier).expect("classifier serializes"),
        "feature_names": data.feature_names,
    });
    emit(cfg.path("out"), &document)
}

/// `select`: penalized joint selection of the trimming level and the prefix
/// family; reports the fitted rule, the trimmed indices, and the full
/// objective trace.
pub fn cmd_select(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_input(cfg)?;
    let seed = cfg.parse("seed", 0u64)?;
    let alpha_max = alpha_max_from(cfg)?;
    let p = data.sample.dim();
    let max_m = cfg.parse("max_m", p)?;
    if max_m < 1 || max_m > p {
        return Err(CliError::Usage(format!(
            "max_m must lie in 1..={p} for this data, got {max_m}"
        )));
    }

    let fams = FamilyCollection::linear_prefixes(p, max_m, trainer_from(cfg, seed)?)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let sel = SelectionConfig::new(alpha_max, cfg.parse("sigma", 1.0f64)?);
    let result = trimclass::select_alpha_model(&data.sample, &fams, &sel)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let document = json!({
        "provenance": provenance("select", cfg, seed),
        "result": serde_json::to_value(&result).expect("selection result serializes"),
        "feature_names": data.feature_names,
    });
    emit(cfg.path("out"), &document)
}

/// `simulate`: draw a contaminated two-Gaussian sample, write it as CSV, and
/// record the ground truth (outlier indices, Bayes rule and error) in a JSON
/// sidecar next to it.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.parse("seed", 0u64)?;
    let n = cfg.parse("n", 200usize)?;
    let out = cfg
        .path("out")
        .ok_or_else(|| CliError::Usage("simulate requires --out for the CSV".into()))?;

    let mu0 = cfg.parse_vec("mu0", &[-1.0])?;
    let mu1 = cfg.parse_vec("mu1", &[1.0])?;
    let sigma = cfg.parse("sigma_clean", 1.0f64)?;
    let p0 = cfg.parse("p0", 0.5f64)?;
    let clean = TwoGaussianSpec::new(mu0.clone(), mu1.clone(), sigma, p0);

    let eps = cfg.parse("eps", 0.15f64)?;
    let outlier = match cfg.get("outlier").unwrap_or("shift") {
        "flip" => OutlierKind::LabelFlip,
        "shift" => OutlierKind::CovariateShift {
            mu_out: cfg.parse_vec("mu_out", &vec![6.0; mu0.len()])?,
            sigma_out: cfg.parse("sigma_out", 0.5f64)?,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown outlier kind {other:?}; expected flip or shift"
            )))
        }
    };
    let spec = ContaminationSpec::new(clean, eps, outlier, seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let GeneratedSample {
        sample,
        outlier_indices,
    } = spec.generate(n);
    write_csv(&out, &sample)?;

    let (bayes_rule, bayes_err) = bayes_two_gaussians(&mu0, &mu1, sigma, p0);
    let sidecar = out.with_extension("json");
    let document = json!({
        "provenance": provenance("simulate", cfg, seed),
        "n": n,
        "outlier_indices": outlier_indices,
        "clean_bayes_rule": serde_json::to_value(&bayes_rule).expect("rule serializes"),
        "clean_bayes_error": bayes_err,
        "csv": out.display().to_string(),
    });
    std::fs::write(&sidecar, jsonfmt::to_string(&document))
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", sidecar.display())))?;
    println!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}

/// `verify`: run one named verification suite (or all of them) and report
/// every assertion. Exit code 1 if any assertion fails.
pub fn cmd_verify(cfg: &RunConfig) -> Result<(), CliError> {
    let suite = cfg.get("suite").unwrap_or("all");
    if !SUITES.contains(&suite) {
        return Err(CliError::Usage(format!(
            "unknown suite {suite:?}; available: {}",
            SUITES.join(", ")
        )));
    }
    let seed = cfg.parse("seed", 0u64)?;
    let reps = cfg.parse("reps", 20_000usize)?;

    let mut reports = Vec::new();
    let run_all = suite == "all";
    let clean = TwoGaussianSpec::new(vec![-1.0], vec![1.0], 1.0, 0.5);
    let pristine = ContaminationSpec::new(clean.clone(), 0.0, OutlierKind::LabelFlip, seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (bayes_rule, _) = bayes_two_gaussians(&clean.mu0, &clean.mu1, clean.sigma, clean.p0);
    let alpha01 = TrimLevel::new(0.1).expect("0.1 is a valid level");
    let harness = |e: trimclass::sim::HarnessError| CliError::Usage(e.to_string());

    if run_all || suite == "bias" {
        reports.push(verify_bias_bound(&bayes_rule, &pristine, 50, alpha01, reps).map_err(harness)?);
    }
    if run_all || suite == "concentration" {
        reports.push(
            verify_concentration(&bayes_rule, &pristine, 100, alpha01, reps, 1.0)
                .map_err(harness)?,
        );
    }
    if run_all || suite == "lipschitz" {
        let contaminated = ContaminationSpec::new(
            clean.clone(),
            0.1,
            OutlierKind::LabelFlip,
            seed,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let alpha_max = alpha_max_from(cfg)?;
        reports.push(
            verify_lipschitz(&[10, 100, 1000], alpha_max, &contaminated).map_err(harness)?,
        );
    }
    if run_all || suite == "threshold" {
        let errs: Vec<f64> = (0..100).map(|k| k as f64 / 99.0).collect();
        let alphas: Vec<TrimLevel> = (0..100)
            .map(|k| TrimLevel::new(k as f64 / 100.0).expect("below one"))
            .collect();
        reports.push(verify_threshold_property(&errs, &alphas).map_err(harness)?);
    }
    if run_all || suite == "oracle-single" {
        let sel = SelectionConfig::new(alpha_max_from(cfg)?, 1.0);
        let r = reps.min(500);
        reports.push(
            verify_oracle_single(&bayes_rule, &pristine, 200, &sel, r).map_err(harness)?,
        );
    }
    if run_all || suite == "oracle-joint" {
        let p = 5;
        let spread: Vec<f64> = vec![0.8, 0.4, 0.2, 0.1, 0.05];
        let clean5 = TwoGaussianSpec::new(
            spread.iter().map(|v| -v).collect(),
            spread.clone(),
            1.0,
            0.5,
        );
        let spec5 = ContaminationSpec::new(clean5, 0.0, OutlierKind::LabelFlip, seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let trainer = TrainerKind::Auto {
            seed,
            restarts: cfg.parse("restarts", 6usize)?,
            iters: cfg.parse("iters", 40usize)?,
        };
        let fams = FamilyCollection::linear_prefixes(p, p, trainer)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let sel = SelectionConfig::new(alpha_max_from(cfg)?, 1.0);
        let r = reps.min(50);
        reports.push(verify_oracle_joint(&fams, &spec5, 200, &sel, r).map_err(harness)?);
    }
    if run_all || suite == "equivalence" {
        let instances = cfg.parse("instances", 200usize)?;
        reports.push(verify_equivalence(seed, instances, 200).map_err(harness)?);
    }

    let all_passed = reports.iter().all(ExperimentReport::passed);
    for report in &reports {
        let verdict = if report.passed() { "pass" } else { "FAIL" };
        println!("{}: {verdict} ({:.2}s)", report.name, report.runtime_secs);
    }

    // wall-clock time is printed above but kept out of the JSON so identical
    // runs stay byte-identical
    let rendered: Vec<Value> = reports
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("report serializes");
            v.as_object_mut()
                .expect("report is an object")
                .remove("runtime_secs");
            v
        })
        .collect();
    let document = json!({
        "provenance": provenance("verify", cfg, seed),
        "suite": suite,
        "passed": all_passed,
        "reports": rendered,
    });
    emit(cfg.path("out"), &document)?;
    if let Some(out) = cfg.path("out") {
        write_assertion_csv(&out.with_extension("csv"), &reports)?;
    }

    if all_passed {
        Ok(())
    } else {
        Err(CliError::AssertionFailure)
    }
}

/// One summary row per assertion, for spreadsheet-friendly downstream use.
fn write_assertion_csv(path: &Path, reports: &[ExperimentReport]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["suite", "assertion", "pass", "detail"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for report in reports {
        for assertion in &report.assertions {
            writer
                .write_record([
                    report.name.as_str(),
                    assertion.name.as_str(),
                    if assertion.pass { "true" } else { "false" },
                    assertion.detail.as_str(),
                ])
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
