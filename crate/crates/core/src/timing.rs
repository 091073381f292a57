//! Per-step wall-clock timing of the instance-wise solver step against a
//! pairwise squared-loss reference step on the same data and scorer.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, Dataset, Minibatch, Sampler};
use crate::error::{PaucError, Result};
use crate::metrics::selection_count;
use crate::objectives::{Formulation, ObjectiveConfig};
use crate::scorer::{ScorerKind, ScorerParams};
use crate::solver::{asgda_step, SolverConfig, SolverState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Instance,
    Pairwise,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Instance => "instance",
            StepKind::Pairwise => "pairwise",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub batch_pos: usize,
    pub batch_neg: usize,
    pub median_ms: f64,
    pub p90_ms: f64,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    /// Per-class batch sizes; each entry is used for both classes.
    pub batch_sizes: Vec<usize>,
    /// Timed samples per (size, kind).
    pub samples: usize,
    /// Steps per timed sample; the sample time is divided by this.
    pub steps_per_sample: usize,
    pub dims: usize,
    pub beta: f64,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            batch_sizes: vec![64, 128, 256, 512],
            samples: 60,
            steps_per_sample: 10,
            dims: 32,
            beta: 1.0,
            seed: 0,
        }
    }
}

/// One SGD step on the mean pairwise loss `(1 − (f(x⁺) − f(x⁻)))²` over all
/// batch positives paired with the top-β batch negatives. Each pair adds its
/// own gradient `ℓ′ · (∇f(x⁺) − ∇f(x⁻))`, so the step costs
/// `O(n_pos · n_neg · P)` for `P` scorer parameters. Returns the loss.
pub fn pairwise_step(
    theta: &mut ScorerParams,
    batch: &Minibatch,
    ds: &Dataset,
    beta: f64,
    lr: f64,
) -> Result<f64> {
    let p = theta.num_params();
    let ids: Vec<usize> = batch.pos_ids.iter().chain(&batch.neg_ids).copied().collect();
    // per-instance score gradients, one row of `p` entries each
    let mut rows = vec![0.0; ids.len() * p];
    let mut scores = Vec::with_capacity(ids.len());
    for (k, &id) in ids.iter().enumerate() {
        scores.push(theta.backprop(ds.row(id), &mut rows[k * p..(k + 1) * p], |f| f * (1.0 - f))?);
    }
    let n_pos = batch.pos_ids.len();
    let mut neg: Vec<usize> = (n_pos..ids.len()).collect();
    let k = selection_count(neg.len(), beta);
    if n_pos == 0 || k == 0 {
        return Err(PaucError::EmptySelection { n: neg.len(), fraction: beta });
    }
    neg.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    neg.truncate(k);

    let scale = 1.0 / (n_pos * k) as f64;
    let mut grad = vec![0.0; p];
    let mut loss = 0.0;
    for i in 0..n_pos {
        let gp = &rows[i * p..(i + 1) * p];
        for &j in &neg {
            let gn = &rows[j * p..(j + 1) * p];
            let m = 1.0 - (scores[i] - scores[j]);
            loss += m * m;
            let c = -2.0 * m * scale;
            for ((g, a), b) in grad.iter_mut().zip(gp).zip(gn) {
                *g += c * (a - b);
            }
        }
    }
    for (w, g) in theta.weights.iter_mut().zip(&grad) {
        *w -= lr * g;
    }
    Ok(loss * scale)
}

fn summarize(mut samples: Vec<f64>) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let at = |q: f64| samples[((samples.len() - 1) as f64 * q).round() as usize];
    (at(0.5), at(0.9))
}

/// A steppable workload at one batch size.
struct Workload<'a> {
    kind: StepKind,
    batch: usize,
    ds: &'a Dataset,
    obj: &'a ObjectiveConfig,
    solver_cfg: SolverConfig,
    state: SolverState,
    sampler: Sampler,
    pair_theta: ScorerParams,
    beta: f64,
}

impl Workload<'_> {
    fn step(&mut self) -> Result<()> {
        match self.kind {
            StepKind::Instance => asgda_step(&mut self.state, &self.solver_cfg, self.obj, self.ds).map(|_| ()),
            StepKind::Pairwise => {
                let batch = self.sampler.sample(self.ds, self.batch, self.batch)?;
                pairwise_step(&mut self.pair_theta, &batch, self.ds, self.beta, self.solver_cfg.nu).map(|_| ())
            }
        }
    }
}

/// Times both step kinds at every batch size. Samples of the different
/// sizes are taken round-robin so background load affects them alike.
/// Rows come out grouped by kind, in the order of `cfg.batch_sizes`.
pub fn time_steps(cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    if cfg.batch_sizes.is_empty() || cfg.samples == 0 || cfg.steps_per_sample == 0 {
        return Err(PaucError::invalid("timing needs batch sizes, samples and steps per sample"));
    }
    let largest = *cfg.batch_sizes.iter().max().expect("nonempty");
    let ds = generate_synthetic(4 * largest, 0.5, cfg.dims, 2.0, cfg.seed)?;
    let theta = ScorerParams::init(ScorerKind::Linear, vec![cfg.dims, 1], cfg.seed)?;
    let obj = ObjectiveConfig::opauc(Formulation::Surrogate, cfg.beta).with_prior(ds.prior_p());

    let mut rows = Vec::new();
    for kind in [StepKind::Instance, StepKind::Pairwise] {
        let mut loads = cfg
            .batch_sizes
            .iter()
            .map(|&b| {
                let solver_cfg = SolverConfig {
                    batch_pos: b,
                    batch_neg: b,
                    seed: cfg.seed,
                    ..SolverConfig::default()
                };
                solver_cfg.validate()?;
                Ok(Workload {
                    kind,
                    batch: b,
                    ds: &ds,
                    obj: &obj,
                    state: SolverState::new(theta.clone(), &ds, &solver_cfg, &obj),
                    solver_cfg,
                    sampler: Sampler::new(cfg.seed),
                    pair_theta: theta.clone(),
                    beta: cfg.beta,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for load in &mut loads {
            for _ in 0..cfg.steps_per_sample * 2 {
                load.step()?;
            }
        }
        let mut samples = vec![Vec::with_capacity(cfg.samples); loads.len()];
        for _ in 0..cfg.samples {
            for (load, out) in loads.iter_mut().zip(&mut samples) {
                let start = Instant::now();
                for _ in 0..cfg.steps_per_sample {
                    load.step()?;
                }
                out.push(start.elapsed().as_secs_f64() * 1e3 / cfg.steps_per_sample as f64);
            }
        }
        for (load, s) in loads.iter().zip(samples) {
            let (median_ms, p90_ms) = summarize(s);
            rows.push(TimingRow {
                batch_pos: load.batch,
                batch_neg: load.batch,
                median_ms,
                p90_ms,
                kind,
            });
        }
    }
    Ok(rows)
}

/// Median-time ratios between consecutive batch sizes of one kind.
pub fn doubling_ratios(rows: &[TimingRow], kind: StepKind) -> Vec<f64> {
    let of_kind: Vec<&TimingRow> = rows.iter().filter(|r| r.kind == kind).collect();
    of_kind.windows(2).map(|w| w[1].median_ms / w[0].median_ms).collect()
}

/// CSV with columns exactly `batch_pos, batch_neg, median_ms, p90_ms, kind`.
pub fn write_timings_csv<W: Write>(rows: &[TimingRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
