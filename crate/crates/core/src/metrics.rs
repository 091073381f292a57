//! Exact empirical ranking metrics and the squared-loss closed form.
//!
//! Conventions shared by every function here:
//! - the 0-1 loss is `1{t < 0}`, so tied positive/negative pairs count as
//!   correctly ranked;
//! - the top-β negatives are the first `⌊n_neg·β⌋` entries after sorting in
//!   descending order, and the bottom-α positives the first `⌊n_pos·α⌋`
//!   entries after sorting in ascending order. Selection is by rank, so
//!   duplicated boundary scores never enlarge the selected set;
//! - a zero-sized selection is an error.

use serde::{Deserialize, Serialize};

use crate::error::{PaucError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MetricKind {
    Auc,
    Opauc,
    Tpauc,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricKind::Auc => "AUC",
            MetricKind::Opauc => "OPAUC",
            MetricKind::Tpauc => "TPAUC",
        })
    }
}

impl std::str::FromStr for MetricKind {
    type Err = PaucError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auc" => Ok(MetricKind::Auc),
            "opauc" => Ok(MetricKind::Opauc),
            "tpauc" => Ok(MetricKind::Tpauc),
            other => Err(PaucError::invalid(format!(
                "unknown metric `{other}` (expected auc, opauc or tpauc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaucReport {
    pub metric_kind: MetricKind,
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
    pub n_pos_used: usize,
    pub n_neg_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormOptimum {
    pub a_star: f64,
    pub b_star: f64,
    pub gamma_star: f64,
    pub min_value: f64,
}

/// `⌊n · fraction⌋`, tolerant to representation error in `fraction`
/// (e.g. `100 · 0.29` evaluates to `28.999…` in binary floating point).
pub fn selection_count(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction + 1e-9).floor().max(0.0) as usize
}

fn checked_count(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PaucError::invalid(format!(
            "constraint level must lie in (0,1], got {fraction}"
        )));
    }
    match selection_count(n, fraction) {
        0 => Err(PaucError::EmptySelection { n, fraction }),
        k => Ok(k.min(n)),
    }
}

fn sorted_desc(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn sorted_asc(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// The `⌊n·β⌋` largest negative scores, in descending order.
pub fn top_negatives(scores_neg: &[f64], beta: f64) -> Result<Vec<f64>> {
    let k = checked_count(scores_neg.len(), beta)?;
    let mut v = sorted_desc(scores_neg);
    v.truncate(k);
    Ok(v)
}

/// The `⌊n·α⌋` smallest positive scores, in ascending order.
pub fn bottom_positives(scores_pos: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let k = checked_count(scores_pos.len(), alpha)?;
    let mut v = sorted_asc(scores_pos);
    v.truncate(k);
    Ok(v)
}

/// Empirical negative quantile: the `⌊n_neg·β⌋`-th largest negative score.
pub fn neg_quantile_threshold(scores_neg: &[f64], beta: f64) -> Result<f64> {
    Ok(*top_negatives(scores_neg, beta)?.last().unwrap())
}

/// Empirical positive quantile: the `⌊n_pos·α⌋`-th smallest positive score.
pub fn pos_quantile_threshold(scores_pos: &[f64], alpha: f64) -> Result<f64> {
    Ok(*bottom_positives(scores_pos, alpha)?.last().unwrap())
}

/// Fraction of (positive, negative) pairs with `pos < neg`.
///
/// Sort-and-search, `O((p + q) log q)`.
fn inversion_rate(pos: &[f64], neg: &[f64]) -> f64 {
    let neg = sorted_asc(neg);
    let inversions: usize = pos
        .iter()
        .map(|&x| neg.len() - neg.partition_point(|&v| v <= x))
        .sum();
    inversions as f64 / (pos.len() * neg.len()) as f64
}

fn require_nonempty(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() {
        return Err(PaucError::EmptyClass("positive scores"));
    }
    if neg.is_empty() {
        return Err(PaucError::EmptyClass("negative scores"));
    }
    Ok(())
}

/// Full empirical AUC with ties counted as correctly ranked.
pub fn empirical_auc(scores_pos: &[f64], scores_neg: &[f64]) -> Result<PaucReport> {
    require_nonempty(scores_pos, scores_neg)?;
    Ok(PaucReport {
        metric_kind: MetricKind::Auc,
        alpha: 1.0,
        beta: 1.0,
        value: 1.0 - inversion_rate(scores_pos, scores_neg),
        n_pos_used: scores_pos.len(),
        n_neg_used: scores_neg.len(),
    })
}

/// One-way partial AUC over all positives and the top-β negatives.
pub fn empirical_opauc(scores_pos: &[f64], scores_neg: &[f64], beta: f64) -> Result<PaucReport> {
    require_nonempty(scores_pos, scores_neg)?;
    let top = top_negatives(scores_neg, beta)?;
    Ok(PaucReport {
        metric_kind: MetricKind::Opauc,
        alpha: 1.0,
        beta,
        value: 1.0 - inversion_rate(scores_pos, &top),
        n_pos_used: scores_pos.len(),
        n_neg_used: top.len(),
    })
}

/// Two-way partial AUC over the bottom-α positives and the top-β negatives.
pub fn empirical_tpauc(
    scores_pos: &[f64],
    scores_neg: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<PaucReport> {
    require_nonempty(scores_pos, scores_neg)?;
    let bottom = bottom_positives(scores_pos, alpha)?;
    let top = top_negatives(scores_neg, beta)?;
    Ok(PaucReport {
        metric_kind: MetricKind::Tpauc,
        alpha,
        beta,
        value: 1.0 - inversion_rate(&bottom, &top),
        n_pos_used: bottom.len(),
        n_neg_used: top.len(),
    })
}

/// Dispatches on `kind`; `alpha` is ignored for AUC and OPAUC, `beta` for AUC.
pub fn evaluate(
    kind: MetricKind,
    scores_pos: &[f64],
    scores_neg: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<PaucReport> {
    match kind {
        MetricKind::Auc => empirical_auc(scores_pos, scores_neg),
        MetricKind::Opauc => empirical_opauc(scores_pos, scores_neg, beta),
        MetricKind::Tpauc => empirical_tpauc(scores_pos, scores_neg, alpha, beta),
    }
}

/// Positives and negatives entering the constrained pair set.
fn selected(
    scores_pos: &[f64],
    scores_neg: &[f64],
    alpha: f64,
    beta: f64,
    kind: MetricKind,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_nonempty(scores_pos, scores_neg)?;
    let (mut pos, mut neg) = match kind {
        MetricKind::Auc => (scores_pos.to_vec(), scores_neg.to_vec()),
        MetricKind::Opauc => (scores_pos.to_vec(), top_negatives(scores_neg, beta)?),
        MetricKind::Tpauc => (
            bottom_positives(scores_pos, alpha)?,
            top_negatives(scores_neg, beta)?,
        ),
    };
    // canonical order, so sums over equal selections agree to the last bit
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    Ok((pos, neg))
}

/// Mean squared surrogate `(1 − (f(x) − f(x')))²` over the constrained pairs.
pub fn pairwise_surrogate_risk(
    scores_pos: &[f64],
    scores_neg: &[f64],
    alpha: f64,
    beta: f64,
    kind: MetricKind,
) -> Result<f64> {
    let (pos, neg) = selected(scores_pos, scores_neg, alpha, beta, kind)?;
    let mut total = 0.0;
    for &x in &pos {
        for &y in &neg {
            let m = 1.0 - (x - y);
            total += m * m;
        }
    }
    Ok(total / (pos.len() * neg.len()) as f64)
}

fn mean_and_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Closed-form optimum of the instance-wise squared-loss problem.
///
/// `a*` and `b*` are the means of the selected positive and negative scores,
/// `γ* = b* − a*`, and the optimal value is `Var₊ + Var₋ + γ*² + 2γ*`.
/// The pairwise risk equals `1 + min_value`.
pub fn closed_form_optimum(
    scores_pos: &[f64],
    scores_neg: &[f64],
    alpha: f64,
    beta: f64,
    kind: MetricKind,
) -> Result<ClosedFormOptimum> {
    let (pos, neg) = selected(scores_pos, scores_neg, alpha, beta, kind)?;
    let (a_star, var_pos) = mean_and_variance(&pos);
    let (b_star, var_neg) = mean_and_variance(&neg);
    let gap = b_star - a_star;
    Ok(ClosedFormOptimum {
        a_star,
        b_star,
        gamma_star: gap,
        min_value: var_pos + var_neg + gap * gap + 2.0 * gap,
    })
}

/// ROC points `(fpr, tpr)` from a descending threshold sweep.
///
/// Starts at `(0, 0)` and emits one point per instance, so the curve has
/// `n_pos + n_neg + 1` points. Within a run of tied scores negatives are
/// admitted before positives.
pub fn roc_curve(scores_pos: &[f64], scores_neg: &[f64]) -> Result<Vec<(f64, f64)>> {
    require_nonempty(scores_pos, scores_neg)?;
    let mut all: Vec<(f64, bool)> = scores_pos
        .iter()
        .map(|&s| (s, true))
        .chain(scores_neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (np, nn) = (scores_pos.len() as f64, scores_neg.len() as f64);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = Vec::with_capacity(all.len() + 1);
    curve.push((0.0, 0.0));
    for (_, positive) in all {
        if positive {
            tp += 1;
        } else {
            fp += 1;
        }
        curve.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(curve)
}
