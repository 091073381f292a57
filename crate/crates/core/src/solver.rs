//! Accelerated stochastic gradient descent-ascent (ASGDA).
//!
//! Each step moves the min block `τ = (θ, a, b, s, s′, θ_a, θ_b)` and the
//! max block `(γ, c)` by a convex combination with a projected gradient
//! step, then refreshes the momentum estimates `v` (for τ) and `w` (for the
//! max block) with a STORM-style correction using gradients of the same
//! fresh minibatch at the new and the previous iterate:
//!
//! ```text
//! η_t     = k / (m + t)^{1/3}
//! τ_{t+1} = (1 − η_t) τ_t + η_t P(τ_t − ν v_t)
//! γ_{t+1} = (1 − η_t) γ_t + η_t P(γ_t + λ w_t)
//! v_{t+1} = ∇τ(τ_{t+1}, γ_{t+1}; B) + (1 − ι₁η_t²) (v_t − ∇τ(τ_t, γ_t; B))
//! w_{t+1} = ∇γ(τ_{t+1}, γ_{t+1}; B) + (1 − ι₂η_t²) (w_t − ∇γ(τ_t, γ_t; B))
//! ```
//!
//! Selection weights `c` are handled lazily: only the entries of the batch
//! that produced the current `w` are moved, and only the entries of the new
//! batch get their momentum refreshed. Their momentum tracks the
//! per-instance derivative (the batch-mean gradient times the batch size). A step therefore costs
//! `O(n_pos_b + n_neg_b)` scorer evaluations regardless of dataset size.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sampler};
use crate::error::{PaucError, Result};
use crate::metrics::{self, MetricKind};
use crate::objectives::{
    self, project_min_flat, scalar_boxes, MaxVars, MinVars, ObjectiveConfig, C_BOX, GAMMA_BOX,
};
use crate::scorer::{self, ScorerParams};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Min-side step ν.
    pub nu: f64,
    /// Max-side step λ.
    pub lambda: f64,
    pub k_coef: f64,
    pub m_coef: f64,
    pub iota1: f64,
    pub iota2: f64,
    #[serde(rename = "T")]
    pub iterations: usize,
    pub batch_pos: usize,
    pub batch_neg: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub warmup_epochs: usize,
    pub eval_every: usize,
    /// When false the scorer parameters stay fixed and only the scalar
    /// variables are optimised.
    #[serde(default = "default_true")]
    pub train_scorer: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            lambda: 0.5,
            k_coef: 1.0,
            m_coef: 27.0,
            iota1: 1.0,
            iota2: 1.0,
            iterations: 2000,
            batch_pos: 32,
            batch_neg: 224,
            seed: 0,
            warmup_epochs: 0,
            eval_every: 50,
            train_scorer: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !finite_nonneg(self.nu) || !finite_nonneg(self.lambda) {
            return Err(PaucError::invalid("step sizes nu and lambda must be finite and non-negative"));
        }
        if !(self.k_coef > 0.0) || !(self.m_coef >= 2.0) {
            return Err(PaucError::invalid("need k > 0 and m >= 2"));
        }
        if eta_schedule(self, 0) > 1.0 + 1e-12 {
            return Err(PaucError::invalid(format!(
                "eta_0 = k / m^(1/3) = {} exceeds 1 (need m >= k^3)",
                eta_schedule(self, 0)
            )));
        }
        if !(self.iota1 > 0.0) || !(self.iota2 > 0.0) {
            return Err(PaucError::invalid("iota1 and iota2 must be positive"));
        }
        if self.batch_pos == 0 || self.batch_neg == 0 {
            return Err(PaucError::invalid("both minibatch sizes must be positive"));
        }
        if self.eval_every == 0 {
            return Err(PaucError::invalid("eval_every must be positive"));
        }
        Ok(())
    }
}

/// Splits `total` batch slots between classes in proportion to `prior`,
/// keeping at least one of each and never exceeding the class sizes.
pub fn batch_sizes_for_prior(total: usize, ds: &Dataset) -> (usize, usize) {
    let total = total.max(2);
    let pos = ((total as f64 * ds.prior_p()).round() as usize).clamp(1, total - 1);
    (pos.min(ds.n_pos()), (total - pos).min(ds.n_neg()))
}

/// `k / (m + t)^{1/3}`.
pub fn eta_schedule(cfg: &SolverConfig, t: usize) -> f64 {
    cfg.k_coef / (cfg.m_coef + t as f64).cbrt()
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub tau: MinVars,
    pub gamma_block: MaxVars,
    /// Momentum estimate of ∇τ, flat min-side layout.
    pub v: Vec<f64>,
    pub w_gamma: f64,
    /// Momentum estimate of the per-instance ∇c, indexed by dataset id.
    pub w_c: Vec<f64>,
    pub t: usize,
    /// Ids whose `w_c` entries were refreshed by the latest batch.
    pending_c: Vec<usize>,
    sampler: Sampler,
}

impl SolverState {
    /// Initial iterate with zero momenta.
    pub fn new(theta: ScorerParams, ds: &Dataset, cfg: &SolverConfig, obj_cfg: &ObjectiveConfig) -> Self {
        let tau = MinVars::initial(theta);
        let gamma_block = MaxVars::initial(ds.len(), obj_cfg.formulation);
        let v = vec![0.0; tau.flat_len()];
        let w_c = vec![0.0; gamma_block.c.len()];
        Self {
            tau,
            gamma_block,
            v,
            w_gamma: 0.0,
            w_c,
            t: 0,
            pending_c: Vec::new(),
            sampler: Sampler::new(cfg.seed),
        }
    }

    pub fn is_feasible(&self, obj_cfg: &ObjectiveConfig) -> bool {
        self.tau.is_feasible(obj_cfg) && self.gamma_block.is_feasible()
    }
}

fn lerp(x: f64, y: f64, eta: f64) -> f64 {
    if eta >= 1.0 {
        y
    } else {
        x + eta * (y - x)
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub eta: f64,
    /// Objective on the fresh batch at the new iterate.
    pub batch_value: f64,
}

/// One ASGDA iteration; `state` is updated in place.
pub fn asgda_step(
    state: &mut SolverState,
    cfg: &SolverConfig,
    obj_cfg: &ObjectiveConfig,
    ds: &Dataset,
) -> Result<StepInfo> {
    let eta = eta_schedule(cfg, state.t);
    let n_theta = state.tau.theta.num_params();

    // min block
    let old_tau = state.tau.clone();
    let x = old_tau.to_flat();
    let mut y: Vec<f64> = x.iter().zip(&state.v).map(|(xi, vi)| xi - cfg.nu * vi).collect();
    project_min_flat(&mut y, obj_cfg);
    let boxes = scalar_boxes(obj_cfg);
    let next: Vec<f64> = x
        .iter()
        .zip(&y)
        .enumerate()
        .map(|(i, (&xi, &yi))| {
            let z = lerp(xi, yi, eta);
            if i < n_theta {
                z
            } else {
                let (lo, hi) = boxes[i - n_theta];
                z.clamp(lo, hi)
            }
        })
        .collect();
    state.tau.set_flat(&next);

    // max block: γ and the c entries touched by the previous batch
    let old_gamma = state.gamma_block.gamma;
    let target = (old_gamma + cfg.lambda * state.w_gamma).clamp(GAMMA_BOX.0, GAMMA_BOX.1);
    state.gamma_block.gamma = lerp(old_gamma, target, eta).clamp(GAMMA_BOX.0, GAMMA_BOX.1);
    let mut undo = Vec::with_capacity(state.pending_c.len());
    for &id in &state.pending_c {
        let c = state.gamma_block.c[id];
        let target = (c + cfg.lambda * state.w_c[id]).clamp(C_BOX.0, C_BOX.1);
        state.gamma_block.c[id] = lerp(c, target, eta).clamp(C_BOX.0, C_BOX.1);
        undo.push((id, c));
    }

    let rho = cfg.iota1 * eta * eta;
    let xi = cfg.iota2 * eta * eta;
    let batch = state.sampler.sample(ds, cfg.batch_pos, cfg.batch_neg)?;

    let g_new = objectives::evaluate(obj_cfg, &state.tau, &state.gamma_block, &batch, ds)?;
    let g_old = {
        // evaluate at the previous iterate by temporarily restoring it
        let redo: Vec<(usize, f64)> = undo
            .iter()
            .map(|&(id, old)| (id, std::mem::replace(&mut state.gamma_block.c[id], old)))
            .collect();
        let new_gamma = std::mem::replace(&mut state.gamma_block.gamma, old_gamma);
        let g = objectives::evaluate(obj_cfg, &old_tau, &state.gamma_block, &batch, ds);
        state.gamma_block.gamma = new_gamma;
        for (id, val) in redo {
            state.gamma_block.c[id] = val;
        }
        g?
    };

    for (i, v) in state.v.iter_mut().enumerate() {
        *v = if i < n_theta && !cfg.train_scorer {
            0.0
        } else {
            g_new.grad_min[i] + (1.0 - rho) * (*v - g_old.grad_min[i])
        };
    }
    state.w_gamma = g_new.grad_max_gamma + (1.0 - xi) * (state.w_gamma - g_old.grad_max_gamma);
    // c_i only enters through its own instance: its derivative is exact once
    // the instance is drawn, and its previous momentum dates from its last
    // visit, so the entry is refreshed with the per-instance derivative
    let per_instance = batch.len() as f64;
    for (&id, &gn) in &g_new.grad_max_c {
        state.w_c[id] = per_instance * gn;
    }
    state.pending_c = g_new.grad_max_c.keys().copied().collect();
    state.t += 1;
    Ok(StepInfo {
        eta,
        batch_value: g_new.value,
    })
}

/// `(1/ν) ‖τ − P(τ − ν g)‖₂` with `g` the full-data ∇τ at the current iterate.
///
/// For `ν = 0` the limit is returned: gradient components that would push a
/// variable out of its box are dropped.
pub fn grad_mapping_proxy(
    state: &SolverState,
    cfg: &SolverConfig,
    obj_cfg: &ObjectiveConfig,
    ds: &Dataset,
) -> Result<f64> {
    let g = objectives::evaluate(obj_cfg, &state.tau, &state.gamma_block, &ds.full_batch(), ds)?;
    Ok(mapping_norm(&state.tau, &g.grad_min, cfg, obj_cfg))
}

fn mapping_norm(tau: &MinVars, grad: &[f64], cfg: &SolverConfig, obj_cfg: &ObjectiveConfig) -> f64 {
    let n_theta = tau.theta.num_params();
    let x = tau.to_flat();
    let boxes = scalar_boxes(obj_cfg);
    let mut sq = 0.0;
    for (i, (&xi, &gi)) in x.iter().zip(grad).enumerate() {
        let gi = if i < n_theta && !cfg.train_scorer { 0.0 } else { gi };
        let (lo, hi) = if i < n_theta {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            boxes[i - n_theta]
        };
        let comp = if cfg.nu > 0.0 {
            (xi - (xi - cfg.nu * gi).clamp(lo, hi)) / cfg.nu
        } else if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
            0.0
        } else {
            gi
        };
        sq += comp * comp;
    }
    sq.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub eta: f64,
    pub objective: f64,
    pub grad_map_proxy: f64,
    pub val_pauc: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    /// CSV with columns `t, eta, objective, grad_map_proxy, val_pauc, elapsed_ms`;
    /// `val_pauc` is empty when no validation set was given.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "eta", "objective", "grad_map_proxy", "val_pauc", "elapsed_ms"])?;
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                r.eta.to_string(),
                r.objective.to_string(),
                r.grad_map_proxy.to_string(),
                r.val_pauc.map(|v| v.to_string()).unwrap_or_default(),
                format!("{:.3}", r.elapsed_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The recorded iterate with the highest validation metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestIterate {
    pub t: usize,
    pub val_pauc: f64,
    pub theta: ScorerParams,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub min_vars: MinVars,
    pub max_vars: MaxVars,
    pub trace: TrainTrace,
    pub best: Option<BestIterate>,
}

/// Partial AUC of `theta` on `ds` for the metric the objective targets.
pub fn validation_metric(theta: &ScorerParams, ds: &Dataset, obj_cfg: &ObjectiveConfig) -> Result<f64> {
    let (pos, neg) = theta.score_classes(ds)?;
    let kind = if obj_cfg.is_tpauc() { MetricKind::Tpauc } else { MetricKind::Opauc };
    Ok(metrics::evaluate(kind, &pos, &neg, obj_cfg.alpha, obj_cfg.beta)?.value)
}

pub fn train(
    ds_train: &Dataset,
    ds_val: Option<&Dataset>,
    scorer_init: &ScorerParams,
    cfg: &SolverConfig,
    obj_cfg: &ObjectiveConfig,
) -> Result<TrainOutcome> {
    train_with_observer(ds_train, ds_val, scorer_init, cfg, obj_cfg, |_| {})
}

/// As [`train`], calling `observer` on the initial state and after every step.
pub fn train_with_observer(
    ds_train: &Dataset,
    ds_val: Option<&Dataset>,
    scorer_init: &ScorerParams,
    cfg: &SolverConfig,
    obj_cfg: &ObjectiveConfig,
    mut observer: impl FnMut(&SolverState),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let obj_cfg = obj_cfg.clone().with_prior(ds_train.prior_p());
    obj_cfg.validate()?;
    scorer_init.validate()?;
    if scorer_init.input_dims() != ds_train.dims() {
        return Err(PaucError::DimensionMismatch {
            expected: ds_train.dims(),
            got: scorer_init.input_dims(),
        });
    }

    let theta = if cfg.warmup_epochs > 0 && cfg.train_scorer {
        scorer::warmup_logistic(
            scorer_init,
            ds_train,
            cfg.warmup_epochs,
            cfg.nu,
            cfg.batch_pos + cfg.batch_neg,
            cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        )?
    } else {
        scorer_init.clone()
    };

    let start = Instant::now();
    let mut state = SolverState::new(theta, ds_train, cfg, &obj_cfg);
    let mut trace = TrainTrace::default();
    let mut best: Option<BestIterate> = None;
    let full = ds_train.full_batch();

    let record = |state: &SolverState, trace: &mut TrainTrace, best: &mut Option<BestIterate>| -> Result<()> {
        let g = objectives::evaluate(&obj_cfg, &state.tau, &state.gamma_block, &full, ds_train)?;
        let val_pauc = ds_val
            .map(|v| validation_metric(&state.tau.theta, v, &obj_cfg))
            .transpose()?;
        if let Some(v) = val_pauc {
            if best.as_ref().is_none_or(|b| v > b.val_pauc) {
                *best = Some(BestIterate {
                    t: state.t,
                    val_pauc: v,
                    theta: state.tau.theta.clone(),
                });
            }
        }
        trace.records.push(TraceRecord {
            t: state.t,
            eta: eta_schedule(cfg, state.t),
            objective: g.value,
            grad_map_proxy: mapping_norm(&state.tau, &g.grad_min, cfg, &obj_cfg),
            val_pauc,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    };

    observer(&state);
    record(&state, &mut trace, &mut best)?;
    for _ in 0..cfg.iterations {
        asgda_step(&mut state, cfg, &obj_cfg, ds_train)?;
        observer(&state);
        if state.t % cfg.eval_every == 0 || state.t == cfg.iterations {
            record(&state, &mut trace, &mut best)?;
        }
    }

    Ok(TrainOutcome {
        min_vars: state.tau,
        max_vars: state.gamma_block,
        trace,
        best,
    })
}

/// Count of negatives in `ds` whose loss `N` strictly exceeds the learned `s′`,
/// as a fraction of all negatives.
pub fn selected_negative_fraction(min_vars: &MinVars, max_vars: &MaxVars, ds: &Dataset) -> Result<f64> {
    let mut above = 0usize;
    for &id in ds.neg_ids() {
        let f = min_vars.theta.score(ds.row(id))?;
        if objectives::neg_branch_n(f, min_vars.b, max_vars.gamma) > min_vars.s_prime {
            above += 1;
        }
    }
    Ok(above as f64 / ds.n_neg() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use crate::objectives::Formulation;
    use crate::scorer::ScorerKind;

    fn small_setup(formulation: Formulation) -> (Dataset, SolverConfig, ObjectiveConfig, ScorerParams) {
        let ds = generate_synthetic(200, 0.2, 3, 2.0, 1).unwrap();
        let cfg = SolverConfig {
            iterations: 50,
            batch_pos: 8,
            batch_neg: 32,
            eval_every: 10,
            ..SolverConfig::default()
        };
        let obj = ObjectiveConfig::opauc(formulation, 0.3).with_prior(ds.prior_p());
        let theta = ScorerParams::init(ScorerKind::Linear, vec![3, 1], 0).unwrap();
        (ds, cfg, obj, theta)
    }

    #[test]
    fn eta_examples() {
        let cfg = SolverConfig { k_coef: 2.0, m_coef: 8.0, ..SolverConfig::default() };
        assert_eq!(eta_schedule(&cfg, 0), 1.0);
        let cfg = SolverConfig { k_coef: 1.0, m_coef: 27.0, ..SolverConfig::default() };
        assert!((eta_schedule(&cfg, 0) - 1.0 / 3.0).abs() < 1e-15);
        for t in 0..1000 {
            assert!(eta_schedule(&cfg, t + 1) < eta_schedule(&cfg, t));
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { k_coef: 4.0, m_coef: 27.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { batch_neg: 0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unit_eta_collapses_to_projection() {
        let (ds, _, obj, theta) = small_setup(Formulation::Surrogate);
        let cfg = SolverConfig { k_coef: 2.0, m_coef: 8.0, batch_pos: 8, batch_neg: 32, ..SolverConfig::default() };
        let mut state = SolverState::new(theta, &ds, &cfg, &obj);
        state.v = (0..state.v.len()).map(|i| (i as f64 - 3.0) * 0.7).collect();
        let mut expected = state.tau.to_flat();
        for (e, v) in expected.iter_mut().zip(&state.v) {
            *e -= cfg.nu * v;
        }
        project_min_flat(&mut expected, &obj);
        asgda_step(&mut state, &cfg, &obj, &ds).unwrap();
        assert_eq!(state.tau.to_flat(), expected);
    }

    #[test]
    fn zero_steps_freeze_variables() {
        for formulation in [Formulation::Surrogate, Formulation::Unbiased] {
            let (ds, cfg, obj, theta) = small_setup(formulation);
            let cfg = SolverConfig { nu: 0.0, lambda: 0.0, ..cfg };
            let mut state = SolverState::new(theta, &ds, &cfg, &obj);
            let (tau0, max0) = (state.tau.clone(), state.gamma_block.clone());
            for _ in 0..5 {
                asgda_step(&mut state, &cfg, &obj, &ds).unwrap();
            }
            assert_eq!(state.tau, tau0);
            assert_eq!(state.gamma_block, max0);
            assert!(state.v.iter().any(|&v| v != 0.0));
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let (ds, cfg, obj, theta) = small_setup(Formulation::Unbiased);
        let strip = |t: TrainTrace| {
            t.records
                .into_iter()
                .map(|r| (r.t, r.eta, r.objective, r.grad_map_proxy, r.val_pauc))
                .collect::<Vec<_>>()
        };
        let a = train(&ds, Some(&ds), &theta, &cfg, &obj).unwrap();
        let b = train(&ds, Some(&ds), &theta, &cfg, &obj).unwrap();
        assert_eq!(a.min_vars, b.min_vars);
        assert_eq!(a.max_vars, b.max_vars);
        assert_eq!(strip(a.trace), strip(b.trace));
    }

    #[test]
    fn zero_iterations_return_initial_variables() {
        let (ds, cfg, obj, theta) = small_setup(Formulation::Unbiased);
        let cfg = SolverConfig { iterations: 0, ..cfg };
        let out = train(&ds, None, &theta, &cfg, &obj).unwrap();
        assert_eq!(out.min_vars, MinVars::initial(theta));
        assert_eq!(out.max_vars, MaxVars::initial(ds.len(), Formulation::Unbiased));
        assert_eq!(out.trace.records.len(), 1);
        assert!(out.best.is_none());
    }

    #[test]
    fn iterates_stay_feasible() {
        for formulation in [Formulation::Surrogate, Formulation::Unbiased] {
            let (ds, cfg, obj, theta) = small_setup(formulation);
            let cfg = SolverConfig { nu: 0.8, lambda: 0.8, iterations: 200, ..cfg };
            let mut violations = 0;
            train_with_observer(&ds, None, &theta, &cfg, &obj, |s| {
                if !s.is_feasible(&obj) {
                    violations += 1;
                }
            })
            .unwrap();
            assert_eq!(violations, 0);
        }
    }

    #[test]
    fn proxy_examples() {
        let (ds, cfg, obj, theta) = small_setup(Formulation::Surrogate);
        let mut state = SolverState::new(theta, &ds, &cfg, &obj);
        // interior scalars so the projection is inactive for a tiny step
        state.tau.a = 0.6;
        state.tau.b = 0.3;
        state.tau.s_prime = 2.0;
        state.tau.theta_b = 1.0;
        let small = SolverConfig { nu: 1e-9, ..cfg.clone() };
        let proxy = grad_mapping_proxy(&state, &small, &obj, &ds).unwrap();
        let g = objectives::evaluate(&obj, &state.tau, &state.gamma_block, &ds.full_batch(), &ds).unwrap();
        let norm = g.grad_min.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(proxy >= 0.0 && proxy.is_finite());
        assert!((proxy - norm).abs() <= 1e-6 * norm, "{proxy} vs {norm}");
    }

    #[test]
    fn proxy_vanishes_at_stationary_point() {
        let ds = Dataset::new(vec![0.0, 0.0], 1, vec![1, 0]).unwrap();
        let obj = ObjectiveConfig::opauc(Formulation::Surrogate, 1.0).with_prior(0.5);
        let cfg = SolverConfig { train_scorer: false, ..SolverConfig::default() };
        let mut state = SolverState::new(ScorerParams::linear(1).unwrap(), &ds, &cfg, &obj);
        // f = 0.5 for both rows: stationary in a and b at the scores; s′
        // pinned at its lower bound by a positive gradient; θ_b likewise.
        state.tau.a = 0.5;
        state.tau.b = 0.5;
        state.tau.s_prime = 0.0;
        state.tau.theta_b = 0.0;
        let g = objectives::evaluate(&obj, &state.tau, &state.gamma_block, &ds.full_batch(), &ds).unwrap();
        let n_theta = state.tau.theta.num_params();
        assert!(g.grad_min[n_theta].abs() < 1e-15 && g.grad_min[n_theta + 1].abs() < 1e-15);
        assert_eq!(grad_mapping_proxy(&state, &cfg, &obj, &ds).unwrap(), 0.0);
    }

    #[test]
    fn trace_csv_columns() {
        let (ds, cfg, obj, theta) = small_setup(Formulation::Surrogate);
        let out = train(&ds, Some(&ds), &theta, &cfg, &obj).unwrap();
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,eta,objective,grad_map_proxy,val_pauc,elapsed_ms\n"));
        assert_eq!(text.lines().count(), out.trace.records.len() + 1);
        assert!(out.trace.records.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn batch_split_follows_prior() {
        let ds = generate_synthetic(2000, 0.1, 2, 1.0, 0).unwrap();
        assert_eq!(batch_sizes_for_prior(256, &ds), (26, 230));
    }
}
