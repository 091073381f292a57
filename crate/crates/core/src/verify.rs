//! Executable checks of the reformulation identities.
//!
//! Every check draws its random instances from a seeded ChaCha stream, so a
//! report is reproducible from `(trials, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PaucError, Result};
use crate::metrics::{self, MetricKind};
use crate::objectives::{neg_branch_n, pos_branch_p, softplus, Formulation, ObjectiveConfig, S_PRIME_BOX};
use crate::scorer::ScorerParams;
use crate::solver::{self, SolverConfig};

pub const DEFAULT_KAPPAS: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

pub const CHECK_NAMES: [&str; 5] = [
    "reformulation_equivalence",
    "topk_threshold",
    "softplus_gap",
    "monotone_branches",
    "hinge_weight_identity",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub bound: f64,
    /// Trials that broke an ordering requirement the deviation does not capture.
    pub violations: usize,
    pub pass: bool,
}

impl VerificationReport {
    fn new(name: &str, trials: usize, max_deviation: f64, bound: f64, violations: usize) -> Self {
        Self {
            name: name.to_string(),
            trials,
            max_deviation,
            bound,
            violations,
            // NaN deviations fail
            pass: max_deviation <= bound && violations == 0,
        }
    }
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(PaucError::invalid("trials must be at least 1"));
    }
    Ok(())
}

/// A fraction whose selection count on `n` items is exactly `k`.
fn fraction_for(rng: &mut ChaCha8Rng, n: usize, k: usize) -> f64 {
    let u: f64 = rng.random_range(0.0..0.999);
    ((k as f64 + u) / n as f64).min(1.0)
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            if ties {
                (x * 10.0).round() / 10.0
            } else {
                x
            }
        })
        .collect()
}

/// `|risk − (1 + min_value)|` together with the instance-wise objective
/// evaluated at the closed-form point.
pub fn reformulation_deviation(pos: &[f64], neg: &[f64], alpha: f64, beta: f64, kind: MetricKind) -> Result<f64> {
    let risk = metrics::pairwise_surrogate_risk(pos, neg, alpha, beta, kind)?;
    let opt = metrics::closed_form_optimum(pos, neg, alpha, beta, kind)?;
    let sel_pos = match kind {
        MetricKind::Tpauc => metrics::bottom_positives(pos, alpha)?,
        _ => pos.to_vec(),
    };
    let sel_neg = match kind {
        MetricKind::Auc => neg.to_vec(),
        _ => metrics::top_negatives(neg, beta)?,
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let g = opt.gamma_star;
    let instance = mean(&sel_pos.iter().map(|&f| pos_branch_p(f, opt.a_star, g)).collect::<Vec<_>>())
        + mean(&sel_neg.iter().map(|&f| neg_branch_n(f, opt.b_star, g)).collect::<Vec<_>>())
        - g * g;
    Ok((risk - (1.0 + opt.min_value))
        .abs()
        .max((instance - opt.min_value).abs()))
}

pub fn check_reformulation_equivalence(trials: usize, seed: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n_pos = rng.random_range(1..=25);
        let n_neg = rng.random_range(1..=25);
        let ties = rng.random_bool(0.3);
        let pos = random_scores(&mut rng, n_pos, ties);
        let neg = random_scores(&mut rng, n_neg, ties);
        let k_pos = rng.random_range(1..=n_pos);
        let k_neg = rng.random_range(1..=n_neg);
        let alpha = fraction_for(&mut rng, n_pos, k_pos);
        let beta = fraction_for(&mut rng, n_neg, k_neg);
        for kind in [MetricKind::Opauc, MetricKind::Tpauc] {
            worst = worst.max(reformulation_deviation(&pos, &neg, alpha, beta, kind)?);
        }
    }
    Ok(VerificationReport::new(CHECK_NAMES[0], trials, worst, 1e-10, 0))
}

/// `s + (1/k) Σ [x_i − s]_+`.
pub fn threshold_objective(losses: &[f64], k: usize, s: f64) -> f64 {
    s + losses.iter().map(|&x| (x - s).max(0.0)).sum::<f64>() / k as f64
}

/// Minimises [`threshold_objective`] over `s` by ternary search on the
/// distinct sorted breakpoints (the objective is convex and piecewise
/// linear with kinks at the losses). Returns `(s*, value)`.
pub fn topk_threshold_min(losses: &[f64], k: usize) -> Result<(f64, f64)> {
    if losses.is_empty() || k == 0 || k > losses.len() {
        return Err(PaucError::invalid(format!(
            "need 1 <= k <= n, got k = {k}, n = {}",
            losses.len()
        )));
    }
    let mut pts = losses.to_vec();
    pts.sort_by(f64::total_cmp);
    // repeated losses would create flat stretches away from the minimum
    pts.dedup();
    let g = |i: usize| threshold_objective(losses, k, pts[i]);
    let (mut lo, mut hi) = (0usize, pts.len() - 1);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if g(m1) < g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok((lo..=hi)
        .map(|i| (pts[i], g(i)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty range"))
}

/// Mean of the `k` largest entries.
pub fn topk_average(losses: &[f64], k: usize) -> f64 {
    let mut v = losses.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v[..k].iter().sum::<f64>() / k as f64
}

pub fn check_topk_threshold(trials: usize, seed: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(1..=50);
        let ties = rng.random_bool(0.3);
        let losses: Vec<f64> = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(-5.0..5.0);
                if ties { x.round() } else { x }
            })
            .collect();
        let k = rng.random_range(1..=n);
        let (_, value) = topk_threshold_min(&losses, k)?;
        worst = worst.max((value - topk_average(&losses, k)).abs());
    }
    Ok(VerificationReport::new(CHECK_NAMES[1], trials, worst, 1e-9, 0))
}

/// Minimum over `s′ ∈ [0, 5]` of `β s′ + mean_i [N_i − s′]_+`, exact by
/// breakpoint enumeration.
pub fn hinge_inner_min(losses: &[f64], beta: f64) -> f64 {
    let h = |sp: f64| beta * sp + losses.iter().map(|&n| (n - sp).max(0.0)).sum::<f64>() / losses.len() as f64;
    losses
        .iter()
        .map(|&n| n.clamp(S_PRIME_BOX.0, S_PRIME_BOX.1))
        .chain([S_PRIME_BOX.0, S_PRIME_BOX.1])
        .map(h)
        .fold(f64::INFINITY, f64::min)
}

/// Minimum over `s′ ∈ [0, 5]` of `β s′ + mean_i r_κ(N_i − s′)`: a dense grid
/// followed by golden-section refinement around the best grid point.
pub fn softplus_inner_min(losses: &[f64], beta: f64, kappa: f64) -> f64 {
    let h = |sp: f64| beta * sp + losses.iter().map(|&n| softplus(n - sp, kappa)).sum::<f64>() / losses.len() as f64;
    const GRID: usize = 2000;
    let (lo, hi) = S_PRIME_BOX;
    let step = (hi - lo) / GRID as f64;
    let (best_i, best) = (0..=GRID)
        .map(|i| (i, h(lo + step * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is nonempty");
    let mut a = (lo + step * (best_i as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (best_i as f64 + 1.0)).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = h(x2);
        }
    }
    best.min(f1).min(f2)
}

/// `|min smoothed − min hinge|` of the inner threshold problem.
pub fn softplus_inner_gap(losses: &[f64], beta: f64, kappa: f64) -> f64 {
    (softplus_inner_min(losses, beta, kappa) - hinge_inner_min(losses, beta)).abs()
}

/// Slack on the nonincreasing-in-κ requirement for the golden-section minimum.
const MONOTONE_SLACK: f64 = 1e-12;

/// Gaps are reported scaled by κ, so the bound is `ln 2` for every κ.
/// A trial whose gap sequence increases with κ counts as a violation.
pub fn check_softplus_gap(kappas: &[f64], trials: usize, seed: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    if kappas.is_empty() || kappas.windows(2).any(|w| w[1] <= w[0]) || kappas[0] <= 0.0 {
        return Err(PaucError::invalid("kappas must be nonempty, positive and increasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..trials {
        let n = rng.random_range(5..=40);
        let b: f64 = rng.random();
        let gamma = rng.random_range((b - 1.0)..=1.0);
        let k = rng.random_range(1..=n);
        let beta = fraction_for(&mut rng, n, k);
        let losses: Vec<f64> = (0..n).map(|_| neg_branch_n(rng.random(), b, gamma)).collect();
        let gaps: Vec<f64> = kappas.iter().map(|&k| softplus_inner_gap(&losses, beta, k)).collect();
        for (g, k) in gaps.iter().zip(kappas) {
            worst = worst.max(g * k);
        }
        if gaps.windows(2).any(|w| w[1] > w[0] + MONOTONE_SLACK) {
            violations += 1;
        }
    }
    Ok(VerificationReport::new(CHECK_NAMES[2], trials, worst, std::f64::consts::LN_2, violations))
}

/// Deviation is the largest increase of a branch along its required
/// direction; any positive value is a violation.
pub fn check_monotone_branches(trials: usize, seed: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        let (f1, f2) = (x.min(y), x.max(y));

        let b: f64 = rng.random();
        let gamma = rng.random_range((b - 1.0)..=1.0);
        worst = worst.max(neg_branch_n(f1, b, gamma) - neg_branch_n(f2, b, gamma));

        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let gamma = rng.random_range((-a).max(b - 1.0)..=1.0);
        worst = worst.max(pos_branch_p(f2, a, gamma) - pos_branch_p(f1, a, gamma));
    }
    Ok(VerificationReport::new(CHECK_NAMES[3], trials, worst, 0.0, 0))
}

/// Maximiser of `c·x` over `c ∈ [0, 1]`.
pub fn hinge_weight(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn check_hinge_weight_identity(trials: usize, seed: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut violations = 0;
    let fixed = [-5.0, -3.0, 0.0, 2.0, 5.0];
    let draws = (0..trials).map(|_| rng.random_range(-5.0..=5.0)).collect::<Vec<f64>>();
    for x in fixed.into_iter().chain(draws) {
        let best = hinge_weight(x) * x;
        worst = worst.max((best - x.max(0.0)).abs());
        // no weight on a grid beats the closed-form maximiser
        if (0..=20).any(|i| i as f64 / 20.0 * x > best) {
            violations += 1;
        }
    }
    Ok(VerificationReport::new(CHECK_NAMES[4], trials, worst, 0.0, violations))
}

/// Runs every check, or only the one named by `only`.
pub fn run_all(trials: usize, seed: u64, only: Option<&str>) -> Result<Vec<VerificationReport>> {
    require_trials(trials)?;
    if let Some(name) = only {
        if !CHECK_NAMES.contains(&name) {
            return Err(PaucError::invalid(format!(
                "unknown check '{name}' (expected one of {})",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let mut out = Vec::new();
    for name in CHECK_NAMES {
        if only.is_some_and(|o| o != name) {
            continue;
        }
        out.push(match name {
            "reformulation_equivalence" => check_reformulation_equivalence(trials, seed)?,
            "topk_threshold" => check_topk_threshold(trials, seed)?,
            "softplus_gap" => check_softplus_gap(&DEFAULT_KAPPAS, trials, seed)?,
            "monotone_branches" => check_monotone_branches(trials, seed)?,
            _ => check_hinge_weight_identity(trials, seed)?,
        });
    }
    Ok(out)
}

/// One row of a κ sweep. `kappa` is `None` for the unbiased run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSweepRow {
    pub kappa: Option<f64>,
    pub formulation: Formulation,
    pub pauc: f64,
    /// Fraction of negatives whose loss strictly exceeds the learned `s′`.
    pub beta_tilde: f64,
    pub deviation: f64,
}

/// Trains once per κ with the surrogate objective and once with the
/// unbiased one, all from the same scorer and seed, and reports the
/// effective selected fraction of negatives on `ds`.
pub fn run_bias_sweep(
    ds: &Dataset,
    scorer: &ScorerParams,
    kappas: &[f64],
    obj_cfg_base: &ObjectiveConfig,
    solver_cfg: &SolverConfig,
) -> Result<Vec<BiasSweepRow>> {
    let runs = kappas
        .iter()
        .map(|&k| (Some(k), Formulation::Surrogate))
        .chain([(None, Formulation::Unbiased)]);
    let mut rows = Vec::new();
    for (kappa, formulation) in runs {
        let mut cfg = obj_cfg_base.clone();
        cfg.formulation = formulation;
        if let Some(k) = kappa {
            cfg.kappa = k;
        }
        let out = solver::train(ds, None, scorer, solver_cfg, &cfg)?;
        let beta_tilde = solver::selected_negative_fraction(&out.min_vars, &out.max_vars, ds)?;
        let pauc = solver::validation_metric(&out.min_vars.theta, ds, &cfg)?;
        rows.push(BiasSweepRow {
            kappa,
            formulation,
            pauc,
            beta_tilde,
            deviation: (beta_tilde - cfg.beta).abs(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reformulation_examples() {
        let d = reformulation_deviation(&[0.9, 0.4], &[0.8, 0.3, 0.1], 1.0, 0.4, MetricKind::Opauc).unwrap();
        assert!(d < 1e-15, "{d}");
        let d = reformulation_deviation(&[0.5; 4], &[0.5; 3], 0.5, 0.5, MetricKind::Tpauc).unwrap();
        assert!(d < 1e-15);
        assert!(check_reformulation_equivalence(500, 0).unwrap().pass);
    }

    #[test]
    fn topk_examples() {
        assert_eq!(topk_threshold_min(&[3.0, 2.0, 1.0], 1).unwrap().1, 3.0);
        let losses = [0.5, -1.0, 4.0, 2.5];
        let (_, v) = topk_threshold_min(&losses, 4).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        assert!(topk_threshold_min(&losses, 0).is_err());
        assert!(check_topk_threshold(500, 1).unwrap().pass);
    }

    #[test]
    fn softplus_gap_examples() {
        let r = check_softplus_gap(&[2.0], 20, 0).unwrap();
        assert!(r.pass && r.max_deviation / 2.0 <= 0.34657 + 1e-5);
        let losses = [0.1, 0.7, 1.3, 2.0, 0.0];
        assert!(softplus_inner_gap(&losses, 0.4, 1024.0) <= 7e-4);
        assert!(check_softplus_gap(&DEFAULT_KAPPAS, 30, 2).unwrap().pass);
        assert!(check_softplus_gap(&[4.0, 2.0], 1, 0).is_err());
    }

    #[test]
    fn hinge_inner_min_matches_topk_inside_box() {
        // with every loss in [0, 5] the minimum is β times the top-k average
        let losses = [0.2, 1.5, 3.0, 0.9, 2.2];
        let beta = 0.4;
        let expected = beta * topk_average(&losses, 2);
        assert!((hinge_inner_min(&losses, beta) - expected).abs() < 1e-12);
    }

    #[test]
    fn monotone_examples() {
        assert!((neg_branch_n(0.2, 1.0, 0.0) - 1.04).abs() < 1e-12);
        assert!((neg_branch_n(0.8, 1.0, 0.0) - 1.64).abs() < 1e-12);
        let r = check_monotone_branches(1000, 3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn hinge_weight_examples() {
        assert_eq!(hinge_weight(-3.0) * -3.0, 0.0);
        assert_eq!(hinge_weight(2.0) * 2.0, 2.0);
        assert_eq!(hinge_weight(0.0) * 0.0, 0.0);
        assert!(check_hinge_weight_identity(200, 4).unwrap().pass);
    }

    #[test]
    fn reports_are_reproducible() {
        assert_eq!(run_all(20, 9, None).unwrap(), run_all(20, 9, None).unwrap());
    }

    #[test]
    fn run_all_filters_and_rejects() {
        let one = run_all(5, 0, Some("softplus_gap")).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].name, "softplus_gap");
        assert!(run_all(0, 0, None).is_err());
        assert!(run_all(5, 0, Some("nope")).is_err());
    }

    #[test]
    fn nan_deviation_fails() {
        assert!(!VerificationReport::new("x", 1, f64::NAN, 1.0, 0).pass);
    }
}
