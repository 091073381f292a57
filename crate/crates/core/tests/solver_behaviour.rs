use pauc_core::data::{generate_synthetic, split};
use pauc_core::objectives::Formulation;
use pauc_core::scorer::warmup_logistic;
use pauc_core::solver::{self, batch_sizes_for_prior, SolverConfig};
use pauc_core::verify::{topk_average, topk_threshold_min};
use pauc_core::{Dataset, ObjectiveConfig, ScorerKind, ScorerParams, SplitSpec};

/// Overlapping classes and a warmed-up scorer that stays fixed, so the
/// remaining problem is over the scalar block only.
fn frozen_setup(seed: u64) -> (Dataset, ScorerParams, SolverConfig) {
    let ds = generate_synthetic(2000, 0.1, 2, 1.0, seed).unwrap();
    let (train, _, _) = split(&ds, &SplitSpec::default()).unwrap();
    let init = ScorerParams::init(ScorerKind::Linear, vec![2, 1], 0).unwrap();
    let scorer = warmup_logistic(&init, &train, 10, 0.5, 256, 0).unwrap();
    let (batch_pos, batch_neg) = batch_sizes_for_prior(256, &train);
    let cfg = SolverConfig {
        batch_pos,
        batch_neg,
        train_scorer: false,
        eval_every: 20,
        ..SolverConfig::default()
    };
    (train, scorer, cfg)
}

#[test]
fn unbiased_selection_matches_beta() {
    let (train, scorer, cfg) = frozen_setup(77);
    for beta in [0.2, 0.3, 0.5] {
        let obj = ObjectiveConfig::opauc(Formulation::Unbiased, beta);
        let out = solver::train(&train, None, &scorer, &cfg, &obj).unwrap();
        let got = solver::selected_negative_fraction(&out.min_vars, &out.max_vars, &train).unwrap();
        let tol = 2.0 / (train.n_neg() as f64).sqrt();
        assert!((got - beta).abs() <= tol, "beta {beta}: selected {got}, tolerance {tol}");
    }
}

#[test]
fn full_beta_selects_every_negative() {
    let (train, scorer, cfg) = frozen_setup(3);
    let obj = ObjectiveConfig::opauc(Formulation::Unbiased, 1.0);
    let out = solver::train(&train, None, &scorer, &cfg, &obj).unwrap();
    // s' is pushed to the bottom of its box, below every N
    let got = solver::selected_negative_fraction(&out.min_vars, &out.max_vars, &train).unwrap();
    assert_eq!(got, 1.0);
}

#[test]
fn frozen_scorer_proxy_decays() {
    let (train, scorer, cfg) = frozen_setup(11);
    for obj in [
        ObjectiveConfig::opauc(Formulation::Surrogate, 0.3),
        ObjectiveConfig::tpauc(Formulation::Surrogate, 0.5, 0.5),
    ] {
        let out = solver::train(&train, None, &scorer, &cfg, &obj).unwrap();
        let recs = &out.trace.records;
        let first = recs[0].grad_map_proxy;
        let tail = &recs[recs.len() * 9 / 10..];
        let tail_mean = tail.iter().map(|r| r.grad_map_proxy).sum::<f64>() / tail.len() as f64;
        assert!(
            tail_mean <= first / 10.0,
            "{} {}: proxy {first} at start, {tail_mean} over the last tenth",
            obj.metric_kind,
            obj.formulation
        );
    }
}

#[test]
fn topk_threshold_with_repeated_losses() {
    // repeated breakpoints once made the ternary search stop on a plateau
    let losses = [1.0, 1.0, 1.0, 1.0, 5.0, 0.0];
    let (_, value) = topk_threshold_min(&losses, 2).unwrap();
    assert_eq!(topk_average(&losses, 2), 3.0);
    assert!((value - 3.0).abs() < 1e-12, "{value}");
}
