use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use needaudit::bounds::plugin_bound_raw;
use needaudit::inference::{gamma_grid, BenchmarkConfig, IntervalEstimate};
use needaudit::synth::trial_seed;
use needaudit::{
    audit_groups, benchmark_gamma_prime, confidence_interval, covariate_names, generate, load_frame, make_folds,
    onestep_bound, oracle_true_rate, write_frame, AuditConfig, AuditError, Centering, GammaParam, NuisanceConfig,
    Schema, Side, SyntheticConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{provenance, AuditRun, BenchmarkRun, FitSettings, GenerateRun, SimulateRun};
use crate::UsageError;

fn nuisance_config(fit: &FitSettings) -> NuisanceConfig {
    let mut cfg = NuisanceConfig::default();
    cfg.clip_delta = fit.clip;
    cfg.logistic.l2 = fit.l2;
    cfg
}

fn validate_fit(fit: &FitSettings) -> anyhow::Result<()> {
    if fit.folds < 2 {
        return Err(UsageError(format!("--folds must be at least 2, got {}", fit.folds)).into());
    }
    if !(fit.clip > 0.0 && fit.clip < 0.5) {
        return Err(UsageError(format!("--clip must lie in (0, 0.5), got {}", fit.clip)).into());
    }
    if !(fit.l2 > 0.0) {
        return Err(UsageError(format!("--l2 must be positive, got {}", fit.l2)).into());
    }
    if !(fit.level > 0.0 && fit.level < 1.0) {
        return Err(UsageError(format!("--level must lie in (0, 1), got {}", fit.level)).into());
    }
    Ok(())
}

fn schema(covariates: &Option<Vec<String>>) -> Schema {
    Schema { covariates: covariates.clone(), ..Schema::default() }
}

fn prepare_out_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// CSV with a leading `#` comment line that carries the provenance object.
fn write_csv(path: &Path, header: &serde_json::Value, columns: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    writeln!(file, "# {}", serde_json::to_string(header)?)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn audit(run: &AuditRun) -> anyhow::Result<()> {
    validate_fit(&run.fit)?;
    let grid = gamma_grid(run.gamma_min, run.gamma_max, run.gamma_step)
        .map_err(|e| UsageError(e.to_string()))?;
    let frame = load_frame(&run.input, &schema(&run.covariates))?;
    let groups: Vec<u32> = match &run.groups {
        Some(g) => g.clone(),
        None => frame.groups().iter().copied().collect(),
    };
    let config = AuditConfig {
        folds: run.fit.folds,
        seed: run.fit.seed,
        nuisance: nuisance_config(&run.fit),
        level: run.fit.level,
        mode: run.mode,
        centering: Centering::Selected,
    };
    let report = audit_groups(&frame, &groups, &grid, &config)?;
    for f in &report.failures {
        eprintln!("warning: group {} failed: {}", f.group, f.error);
    }

    prepare_out_dir(&run.out_dir)?;
    let header = provenance("audit", run);
    let mut json = header.clone();
    json["report"] = serde_json::to_value(&report)?;
    write_json(&run.out_dir.join("report.json"), &json)?;
    let rows: Vec<Vec<String>> = report
        .curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| {
                let i = &p.interval;
                vec![c.group.to_string(), f6(p.gamma), f6(i.lower_point), f6(i.upper_point), f6(i.ci_lo), f6(i.ci_hi)]
            })
        })
        .collect();
    write_csv(
        &run.out_dir.join("curves.csv"),
        &header,
        &["group", "gamma", "lower", "upper", "ci_lo", "ci_hi"],
        &rows,
    )?;

    if report.curves.is_empty() {
        // Nothing could be estimated: surface the first failure's class.
        let data = report.failures.iter().any(|f| f.data_error);
        let msg = report.failures.iter().map(|f| format!("group {}: {}", f.group, f.error)).collect::<Vec<_>>().join("; ");
        return Err(if data {
            AuditError::Schema(format!("no group could be audited ({msg})")).into()
        } else {
            AuditError::Domain(format!("no group could be audited ({msg})")).into()
        });
    }
    for p in &report.pairwise {
        match p.gamma_star {
            Some(g) => println!("groups {} vs {}: disjoint up to gamma = {g:.2}", p.a, p.b),
            None => println!("groups {} vs {}: overlapping at gamma = {:.2}", p.a, p.b, report.gamma_grid[0]),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct TrialRow {
    n: usize,
    trial: usize,
    method: &'static str,
    interval: IntervalEstimate,
    truth: f64,
    covered: bool,
}

fn simulate_trial(run: &SimulateRun, trial: usize) -> needaudit::Result<Vec<TrialRow>> {
    let seed = trial_seed(run.fit.seed, trial as u64);
    let dgp = SyntheticConfig {
        n_pre: run.n_pre,
        n_post: run.n_post,
        gamma_true: run.gamma_true,
        group_offsets: vec![run.offset],
        seed,
        ..Default::default()
    };
    let (frame, latent) = generate(&dgp)?;
    let truth = oracle_true_rate(&frame, &latent)?;
    let folds = make_folds(&frame, run.fit.folds, seed)?;
    let scored = needaudit::fit_nuisances(&frame, &folds, &nuisance_config(&run.fit))?.score(&frame, &folds)?;
    let gamma = GammaParam::finite(run.gamma)?;
    let lo = onestep_bound(&frame, &scored, Side::Lower, gamma)?;
    let up = onestep_bound(&frame, &scored, Side::Upper, gamma)?;
    let onestep = confidence_interval(&lo, &up, run.fit.level)?;

    let z = needaudit::inference::normal_quantile(1.0 - (1.0 - run.fit.level) / 2.0)?;
    let (pl, pu) = (plugin_bound_raw(&scored, Side::Lower, gamma), plugin_bound_raw(&scored, Side::Upper, gamma));
    let plugin_point = IntervalEstimate {
        lower_point: pl.clamp(0.0, 1.0),
        upper_point: pu.clamp(0.0, 1.0),
        ci_lo: pl.clamp(0.0, 1.0),
        ci_hi: pu.clamp(0.0, 1.0),
        ..onestep
    };
    let plugin_ci = IntervalEstimate {
        ci_lo: (pl - z * lo.std_error()).clamp(0.0, 1.0),
        ci_hi: (pu + z * up.std_error()).clamp(0.0, 1.0),
        ..plugin_point
    };
    let n = run.n_pre + run.n_post;
    Ok([("onestep", onestep), ("plugin_ci", plugin_ci), ("plugin_point", plugin_point)]
        .into_iter()
        .map(|(method, interval)| TrialRow { n, trial, method, interval, truth, covered: interval.contains(truth) })
        .collect())
}

pub fn simulate(run: &SimulateRun) -> anyhow::Result<()> {
    validate_fit(&run.fit)?;
    if run.trials == 0 {
        return Err(UsageError("--trials must be at least 1".into()).into());
    }
    if !(run.gamma >= 1.0) {
        return Err(UsageError(format!("--gamma must be >= 1, got {}", run.gamma)).into());
    }
    let mut rows: Vec<TrialRow> = (0..run.trials)
        .into_par_iter()
        .map(|t| simulate_trial(run, t))
        .collect::<needaudit::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| (a.n, a.trial, a.method).cmp(&(b.n, b.trial, b.method)));

    prepare_out_dir(&run.out_dir)?;
    let header = provenance("simulate", run);
    let trial_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let i = &r.interval;
            vec![
                r.n.to_string(),
                r.trial.to_string(),
                r.method.to_string(),
                f6(i.lower_point),
                f6(i.upper_point),
                f6(i.ci_lo),
                f6(i.ci_hi),
                f6(r.truth),
                u8::from(r.covered).to_string(),
            ]
        })
        .collect();
    write_csv(
        &run.out_dir.join("trials.csv"),
        &header,
        &["n", "trial", "method", "lower", "upper", "ci_lo", "ci_hi", "truth", "covered"],
        &trial_rows,
    )?;

    let mut summary = Vec::new();
    for method in ["onestep", "plugin_ci", "plugin_point"] {
        let hits: Vec<bool> = rows.iter().filter(|r| r.method == method).map(|r| r.covered).collect();
        let rate = hits.iter().filter(|&&c| c).count() as f64 / hits.len() as f64;
        println!("{method:>12}: capture rate {rate:.3} over {} trials", hits.len());
        summary.push(vec![(run.n_pre + run.n_post).to_string(), method.to_string(), hits.len().to_string(), f6(rate)]);
    }
    write_csv(&run.out_dir.join("coverage.csv"), &header, &["n", "method", "trials", "capture_rate"], &summary)?;
    Ok(())
}

pub fn benchmark(run: &BenchmarkRun) -> anyhow::Result<()> {
    validate_fit(&run.fit)?;
    if let Some(q) = run.quantile {
        if !(q > 0.0 && q <= 1.0) {
            return Err(UsageError(format!("--quantile must lie in (0, 1], got {q}")).into());
        }
    }
    let schema = schema(&run.covariates);
    let names = covariate_names(&run.input, &schema)?;
    let z_index = names.iter().position(|n| *n == run.z_column).ok_or_else(|| {
        AuditError::Schema(format!("column '{}' is not a covariate (covariates: {})", run.z_column, names.join(", ")))
    })?;
    let frame = load_frame(&run.input, &schema)?;
    let folds = make_folds(&frame, run.fit.folds, run.fit.seed)?;
    let config = BenchmarkConfig { nuisance: nuisance_config(&run.fit), quantile: run.quantile };
    let bench = benchmark_gamma_prime(&frame, z_index, &folds, &config)?;
    println!("gamma' = {:.4} over {} post-availability rows", bench.gamma_prime, bench.n_eval);

    prepare_out_dir(&run.out_dir)?;
    let mut json = provenance("benchmark", run);
    json["z_column"] = run.z_column.clone().into();
    json["benchmark"] = serde_json::to_value(bench)?;
    write_json(&run.out_dir.join("gamma_prime.json"), &json)
}

pub fn generate_frame(run: &GenerateRun) -> anyhow::Result<()> {
    let dgp = SyntheticConfig {
        n_pre: run.n_pre,
        n_post: run.n_post,
        gamma_true: run.gamma_true,
        group_offsets: run.offsets.clone(),
        seed: run.seed,
        ..Default::default()
    };
    let (frame, latent) = generate(&dgp).map_err(|e| match e {
        AuditError::Config(m) => UsageError(m).into(),
        other => anyhow::Error::from(other),
    })?;
    prepare_out_dir(&run.out_dir)?;
    write_frame(&frame, run.out_dir.join("frame.csv"))?;
    needaudit::synth::write_latent(&latent, run.out_dir.join("latent.csv"))?;
    let mut json = provenance("generate", run);
    json["true_rate"] = oracle_true_rate(&frame, &latent).ok().into();
    write_json(&run.out_dir.join("generate.json"), &json)
}
