use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use pauc_core::data::{generate_synthetic, load_csv, split};
use pauc_core::metrics::{self, PaucReport};
use pauc_core::solver::{self, validation_metric};
use pauc_core::timing::{self, StepKind, TimingConfig};
use pauc_core::verify;
use pauc_core::{Dataset, MetricKind, ObjectiveConfig, ScorerParams};
use serde::Serialize;

use crate::config::{env_seed, Checkpoint, RunConfig};
use crate::plot::roc_svg;
use crate::{BenchArgs, EvaluateArgs, GenerateArgs, SweepArgs, TrainArgs, UsageError, VerifyArgs};

fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn seed_or_env(flag: Option<u64>) -> Result<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

pub fn generate(args: &GenerateArgs) -> Result<ExitCode> {
    let seed = seed_or_env(args.seed)?;
    let ds = generate_synthetic(args.n, args.imbalance, args.dims, args.separation, seed).map_err(usage)?;
    let dir = out_dir(&args.out)?;
    ds.write_csv(create(dir, "data.csv")?, &args.label_col)?;
    println!(
        "wrote {} ({} rows, {} positives)",
        dir.join("data.csv").display(),
        ds.len(),
        ds.n_pos()
    );
    Ok(ExitCode::SUCCESS)
}

/// Data, splits and initial scorer of a run.
struct Prepared {
    train: Dataset,
    val: Dataset,
    test: Dataset,
    scorer: ScorerParams,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let ds = cfg.load_data().map_err(usage)?;
    let (train, val, test) = split(&ds, &cfg.split).map_err(usage)?;
    let scorer = cfg.scorer.build(ds.dims(), cfg.seed).map_err(usage)?;
    Ok(Prepared { train, val, test, scorer })
}

fn report_for(theta: &ScorerParams, ds: &Dataset, kind: MetricKind, alpha: f64, beta: f64) -> Result<PaucReport> {
    let (pos, neg) = theta.score_classes(ds)?;
    Ok(metrics::evaluate(kind, &pos, &neg, alpha, beta)?)
}

#[derive(Serialize)]
struct TrainReport {
    iterations: usize,
    /// Final iterate on the test split.
    test: PaucReport,
    test_auc: PaucReport,
    validation: PaucReport,
    /// Best validation iterate on the test split.
    best_t: Option<usize>,
    best_test: Option<PaucReport>,
}

pub fn train(args: &TrainArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), args.seed)?;
    if let Some(t) = args.iterations {
        cfg.solver.iterations = t;
    }
    let obj = &mut cfg.objective;
    if let Some(m) = args.metric {
        obj.metric_kind = m;
    }
    if let Some(f) = args.formulation {
        obj.formulation = f;
    }
    if let Some(a) = args.alpha {
        obj.alpha = a;
    }
    if let Some(b) = args.beta {
        obj.beta = b;
    }
    if let Some(k) = args.kappa {
        obj.kappa = k;
    }
    if let Some(w) = args.omega {
        obj.omega = w;
    }
    if args.batch_size.is_some() {
        cfg.batch_size = args.batch_size;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let p = prepare(&cfg)?;
    let solver_cfg = cfg.solver_for(&p.train);

    let outcome = solver::train(&p.train, Some(&p.val), &p.scorer, &solver_cfg, &cfg.objective)?;
    let dir = out_dir(&dir)?;
    let obj = cfg.objective.clone();
    let (kind, a, b) = (obj.metric_kind, obj.alpha, obj.beta);
    let theta = &outcome.min_vars.theta;
    let report = TrainReport {
        iterations: solver_cfg.iterations,
        test: report_for(theta, &p.test, kind, a, b)?,
        test_auc: report_for(theta, &p.test, MetricKind::Auc, 1.0, 1.0)?,
        validation: report_for(theta, &p.val, kind, a, b)?,
        best_t: outcome.best.as_ref().map(|x| x.t),
        best_test: outcome
            .best
            .as_ref()
            .map(|x| report_for(&x.theta, &p.test, kind, a, b))
            .transpose()?,
    };
    let checkpoint = Checkpoint {
        objective: obj,
        min_vars: outcome.min_vars,
        gamma: outcome.max_vars.gamma,
        best: outcome.best,
    };
    write_json(dir, "checkpoint.json", &checkpoint)?;
    write_json(dir, "report.json", &report)?;
    write_json(dir, "config.json", &cfg)?;
    outcome.trace.write_csv(create(dir, "trace.csv")?)?;
    println!(
        "{} {} test {:.4} (validation {:.4}) after {} iterations; artifacts in {}",
        kind,
        checkpoint.objective.formulation,
        report.test.value,
        report.validation.value,
        report.iterations,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate(args: &EvaluateArgs) -> Result<ExitCode> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let ds = load_csv(&args.data, &args.label_col).with_context(|| format!("loading {}", args.data.display()))?;
    let theta = if args.best {
        &ck.best
            .as_ref()
            .ok_or_else(|| usage("checkpoint has no best iterate"))?
            .theta
    } else {
        &ck.min_vars.theta
    };
    let (pos, neg) = theta.score_classes(&ds).map_err(usage)?;
    let pairs = if args.pairs.is_empty() {
        vec![(ck.objective.alpha, ck.objective.beta)]
    } else {
        args.pairs.clone()
    };
    let mut reports = Vec::with_capacity(pairs.len());
    for (alpha, beta) in pairs {
        let kind = if alpha == 1.0 { MetricKind::Opauc } else { MetricKind::Tpauc };
        reports.push(metrics::evaluate(kind, &pos, &neg, alpha, beta).map_err(usage)?);
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);

    if let Some(dir) = &args.out {
        let dir = out_dir(dir)?;
        write_json(dir, "report.json", &reports)?;
        let curve = metrics::roc_curve(&pos, &neg)?;
        let mut w = csv::Writer::from_writer(create(dir, "roc.csv")?);
        w.write_record(["fpr", "tpr"])?;
        for (fpr, tpr) in &curve {
            w.write_record([fpr.to_string(), tpr.to_string()])?;
        }
        w.flush()?;
        let auc = metrics::empirical_auc(&pos, &neg)?.value;
        fs::write(dir.join("roc.svg"), roc_svg(&curve, &format!("ROC, AUC = {auc:.4}")))?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let seed = seed_or_env(args.seed)?;
    let reports = verify::run_all(args.trials as usize, seed, args.only.as_deref()).map_err(usage)?;
    println!("{}", serde_json::to_string_pretty(&reports)?);
    if let Some(dir) = &args.out {
        write_json(out_dir(dir)?, "verify.json", &reports)?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}

pub fn bench(args: &BenchArgs) -> Result<ExitCode> {
    let cfg = TimingConfig {
        batch_sizes: args.sizes.clone(),
        samples: args.samples,
        steps_per_sample: args.steps,
        dims: args.dims,
        beta: args.beta,
        seed: seed_or_env(args.seed)?,
    };
    let rows = timing::time_steps(&cfg).map_err(usage)?;
    let dir = out_dir(&args.out)?;
    timing::write_timings_csv(&rows, create(dir, "timings.csv")?)?;
    let inst = timing::doubling_ratios(&rows, StepKind::Instance);
    let pair = timing::doubling_ratios(&rows, StepKind::Pairwise);
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ");
    println!("instance-wise ratios: {}", fmt(&inst));
    println!("pairwise ratios:      {}", fmt(&pair));
    println!("wrote {}", dir.join("timings.csv").display());
    if args.check && !(inst.iter().all(|&r| r <= 2.6) && pair.iter().all(|&r| r >= 3.0)) {
        eprintln!("step-time scaling outside the expected bounds");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SweepRow {
    param: &'static str,
    value: f64,
    formulation: String,
    train_pauc: f64,
    validation_pauc: f64,
    beta_tilde: f64,
    deviation: f64,
}

pub fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::resolve(args.config.as_deref(), args.seed)?;
    if let Some(t) = args.iterations {
        cfg.solver.iterations = t;
    }
    if args.kappas.iter().chain(&args.omegas).any(|v| !v.is_finite()) {
        return Err(usage("sweep values must be finite"));
    }
    let dir = args.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let p = prepare(&cfg)?;
    let solver_cfg = cfg.solver_for(&p.train);
    let base = cfg.objective.clone().with_prior(p.train.prior_p());

    let mut rows = Vec::new();
    let run = |obj: &ObjectiveConfig| -> Result<(f64, f64, f64)> {
        let out = solver::train(&p.train, None, &p.scorer, &solver_cfg, obj)?;
        let beta_tilde = solver::selected_negative_fraction(&out.min_vars, &out.max_vars, &p.train)?;
        Ok((
            validation_metric(&out.min_vars.theta, &p.train, obj)?,
            validation_metric(&out.min_vars.theta, &p.val, obj)?,
            beta_tilde,
        ))
    };
    let mut runs: Vec<(&'static str, f64, ObjectiveConfig)> = Vec::new();
    for &k in &args.kappas {
        let mut o = base.clone().with_kappa(k);
        o.formulation = pauc_core::Formulation::Surrogate;
        runs.push(("kappa", k, o));
    }
    for &w in &args.omegas {
        runs.push(("omega", w, base.clone().with_omega(w)));
    }
    for (param, value, obj) in runs {
        obj.validate().map_err(usage)?;
        let (train_pauc, validation_pauc, beta_tilde) = run(&obj)?;
        rows.push(SweepRow {
            param,
            value,
            formulation: obj.formulation.to_string(),
            train_pauc,
            validation_pauc,
            beta_tilde,
            deviation: (beta_tilde - obj.beta).abs(),
        });
    }

    let dir = out_dir(&dir)?;
    let mut w = csv::Writer::from_writer(create(dir, "sweep.csv")?);
    for r in &rows {
        w.serialize(r)?;
        println!(
            "{}={} {}: validation {:.4}, beta~ {:.4} (|beta~ - beta| = {:.4})",
            r.param, r.value, r.formulation, r.validation_pauc, r.beta_tilde, r.deviation
        );
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}
