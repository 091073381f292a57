//! Instance-wise minimax objectives for one-way and two-way partial AUC.
//!
//! Every positive instance contributes through the branch
//! `P = (f − a)² − 2(1+γ)f` and every negative through
//! `N = (f − b)² + 2(1+γ)f`. Selection of the hard instances is done by a
//! learnable threshold (`s′` for negatives, `s` for positives under TPAUC)
//! wrapped in a hinge. The hinge is either smoothed by a softplus of
//! sharpness κ ([`eval_surrogate`]) or written exactly as `c · (·)` with a
//! per-instance weight `c ∈ [0,1]` on the max side ([`eval_unbiased`]).
//!
//! Per-instance terms are averaged over the batch. The terms that do not
//! depend on data, `−(1+ω)γ²` and the Lagrangian decoupling
//! `−θ_b(b − 1 − γ) − θ_a(−a − γ)`, are added once per evaluation.
//!
//! The flat min-side layout is `θ ‖ a ‖ b ‖ s ‖ s′ ‖ θ_a ‖ θ_b`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Minibatch};
use crate::error::{PaucError, Result};
use crate::metrics::MetricKind;
use crate::scorer::{sigmoid, ScorerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Surrogate,
    Unbiased,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Surrogate => "surrogate",
            Formulation::Unbiased => "unbiased",
        })
    }
}

impl std::str::FromStr for Formulation {
    type Err = PaucError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "surrogate" => Ok(Formulation::Surrogate),
            "unbiased" => Ok(Formulation::Unbiased),
            other => Err(PaucError::invalid(format!(
                "unknown formulation `{other}` (expected surrogate or unbiased)"
            ))),
        }
    }
}

pub const DEFAULT_LAGRANGE_CAP: f64 = 1e9;

fn default_one() -> f64 {
    1.0
}
fn default_kappa() -> f64 {
    4.0
}
fn default_cap() -> f64 {
    DEFAULT_LAGRANGE_CAP
}
fn default_prior() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    #[serde(rename = "metric")]
    pub metric_kind: MetricKind,
    pub formulation: Formulation,
    #[serde(default = "default_one")]
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub beta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default = "default_cap")]
    pub lagrange_cap: f64,
    /// Positive class prior of the training split; set from data, not from config files.
    #[serde(skip, default = "default_prior")]
    pub prior_p: f64,
}

impl ObjectiveConfig {
    pub fn new(metric_kind: MetricKind, formulation: Formulation, alpha: f64, beta: f64) -> Self {
        Self {
            metric_kind,
            formulation,
            alpha,
            beta,
            kappa: default_kappa(),
            omega: 0.0,
            lagrange_cap: DEFAULT_LAGRANGE_CAP,
            prior_p: default_prior(),
        }
    }

    pub fn opauc(formulation: Formulation, beta: f64) -> Self {
        Self::new(MetricKind::Opauc, formulation, 1.0, beta)
    }

    pub fn tpauc(formulation: Formulation, alpha: f64, beta: f64) -> Self {
        Self::new(MetricKind::Tpauc, formulation, alpha, beta)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_prior(mut self, prior_p: f64) -> Self {
        self.prior_p = prior_p;
        self
    }

    pub fn is_tpauc(&self) -> bool {
        self.metric_kind == MetricKind::Tpauc
    }

    pub fn validate(&self) -> Result<()> {
        if self.metric_kind == MetricKind::Auc {
            return Err(PaucError::invalid("objective metric must be OPAUC or TPAUC"));
        }
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.alpha) || !in_unit(self.beta) {
            return Err(PaucError::invalid(format!(
                "alpha and beta must lie in (0,1], got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.formulation == Formulation::Surrogate && !(self.kappa > 0.0 && self.kappa.is_finite())
        {
            return Err(PaucError::invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(PaucError::invalid(format!("omega must be non-negative, got {}", self.omega)));
        }
        if !(self.lagrange_cap > 0.0) {
            return Err(PaucError::invalid("lagrange_cap must be positive"));
        }
        if !(self.prior_p > 0.0 && self.prior_p < 1.0) {
            return Err(PaucError::invalid(format!("prior_p must lie in (0,1), got {}", self.prior_p)));
        }
        Ok(())
    }
}

/// Number of scalar min-side variables after θ: a, b, s, s′, θ_a, θ_b.
pub const NUM_SCALARS: usize = 6;

pub const A_BOX: (f64, f64) = (0.0, 1.0);
pub const B_BOX: (f64, f64) = (0.0, 1.0);
pub const S_BOX: (f64, f64) = (-4.0, 1.0);
pub const S_PRIME_BOX: (f64, f64) = (0.0, 5.0);
pub const GAMMA_BOX: (f64, f64) = (-1.0, 1.0);
pub const C_BOX: (f64, f64) = (0.0, 1.0);

/// Boxes for the scalar block `a, b, s, s′, θ_a, θ_b`. θ_a is pinned to 0 for OPAUC.
pub fn scalar_boxes(cfg: &ObjectiveConfig) -> [(f64, f64); NUM_SCALARS] {
    let theta_a_cap = if cfg.is_tpauc() { cfg.lagrange_cap } else { 0.0 };
    [
        A_BOX,
        B_BOX,
        S_BOX,
        S_PRIME_BOX,
        (0.0, theta_a_cap),
        (0.0, cfg.lagrange_cap),
    ]
}

/// Descent-side variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinVars {
    pub theta: ScorerParams,
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub s_prime: f64,
    pub theta_a: f64,
    pub theta_b: f64,
}

impl MinVars {
    /// `a = 1, b = 0, s = 0, s′ = 1, θ_a = θ_b = 0`.
    pub fn initial(theta: ScorerParams) -> Self {
        Self {
            theta,
            a: 1.0,
            b: 0.0,
            s: 0.0,
            s_prime: 1.0,
            theta_a: 0.0,
            theta_b: 0.0,
        }
    }

    pub fn flat_len(&self) -> usize {
        self.theta.num_params() + NUM_SCALARS
    }

    pub fn scalars(&self) -> [f64; NUM_SCALARS] {
        [self.a, self.b, self.s, self.s_prime, self.theta_a, self.theta_b]
    }

    fn set_scalars(&mut self, v: &[f64]) {
        self.a = v[0];
        self.b = v[1];
        self.s = v[2];
        self.s_prime = v[3];
        self.theta_a = v[4];
        self.theta_b = v[5];
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.theta.weights.clone();
        v.extend_from_slice(&self.scalars());
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let p = self.theta.num_params();
        assert_eq!(v.len(), p + NUM_SCALARS, "flat min-side vector has the wrong length");
        self.theta.weights.copy_from_slice(&v[..p]);
        self.set_scalars(&v[p..]);
    }

    pub fn is_feasible(&self, cfg: &ObjectiveConfig) -> bool {
        self.theta.weights.iter().all(|w| w.is_finite())
            && self
                .scalars()
                .iter()
                .zip(scalar_boxes(cfg))
                .all(|(&v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// Ascent-side variables. `c` is indexed by dataset id and is empty for the
/// surrogate formulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxVars {
    pub gamma: f64,
    pub c: Vec<f64>,
}

impl MaxVars {
    /// `γ = 0` and, for the unbiased formulation, `c_i = 1` for all `n` instances.
    pub fn initial(n: usize, formulation: Formulation) -> Self {
        let c = match formulation {
            Formulation::Surrogate => Vec::new(),
            Formulation::Unbiased => vec![1.0; n],
        };
        Self { gamma: 0.0, c }
    }

    pub fn is_feasible(&self) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(self.gamma, GAMMA_BOX) && self.c.iter().all(|&c| inside(c, C_BOX))
    }
}

/// Objective value with its partial gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    /// Gradient over the flat min-side layout.
    pub grad_min: Vec<f64>,
    pub grad_max_gamma: f64,
    /// Gradient with respect to `c`, one entry per batch instance whose branch uses a weight.
    pub grad_max_c: BTreeMap<usize, f64>,
}

/// `log(1 + exp(κx)) / κ`, evaluated without overflow.
pub fn softplus(x: f64, kappa: f64) -> f64 {
    let t = kappa * x;
    if t > 30.0 {
        x + (-t).exp().ln_1p() / kappa
    } else {
        t.exp().ln_1p() / kappa
    }
}

/// Positive-instance loss `(f − a)² − 2(1+γ)f`.
pub fn pos_branch_p(f: f64, a: f64, gamma: f64) -> f64 {
    (f - a) * (f - a) - 2.0 * (1.0 + gamma) * f
}

/// Negative-instance loss `(f − b)² + 2(1+γ)f`.
pub fn neg_branch_n(f: f64, b: f64, gamma: f64) -> f64 {
    (f - b) * (f - b) + 2.0 * (1.0 + gamma) * f
}

/// How the selection hinge `[x]_+` is realised.
#[derive(Debug, Clone, Copy)]
enum Selection {
    Softplus(f64),
    Hinge,
    Weighted,
}

impl Selection {
    /// Returns `(h(x), dh/dx)` for the non-weighted variants.
    fn apply(self, x: f64) -> (f64, f64) {
        match self {
            Selection::Softplus(kappa) => (softplus(x, kappa), sigmoid(kappa * x)),
            Selection::Hinge => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Selection::Weighted => unreachable!("weighted selection needs a weight"),
        }
    }
}

/// Smoothed objective (softplus hinge with sharpness κ).
pub fn eval_surrogate(
    cfg: &ObjectiveConfig,
    min_vars: &MinVars,
    max_vars: &MaxVars,
    batch: &Minibatch,
    ds: &Dataset,
) -> Result<LossGrad> {
    if cfg.formulation != Formulation::Surrogate {
        return Err(PaucError::invalid("eval_surrogate needs the surrogate formulation"));
    }
    evaluate_with(cfg, min_vars, max_vars, batch, ds, Selection::Softplus(cfg.kappa))
}

/// Exactly unbiased objective with per-instance selection weights `c`.
pub fn eval_unbiased(
    cfg: &ObjectiveConfig,
    min_vars: &MinVars,
    max_vars: &MaxVars,
    batch: &Minibatch,
    ds: &Dataset,
) -> Result<LossGrad> {
    if cfg.formulation != Formulation::Unbiased {
        return Err(PaucError::invalid("eval_unbiased needs the unbiased formulation"));
    }
    evaluate_with(cfg, min_vars, max_vars, batch, ds, Selection::Weighted)
}

/// Non-smooth objective with the exact hinge `[x]_+`; gradients are the
/// subgradient taking `0` at the kink. Used as the reference both smoothing
/// routes are compared against. κ and `c` are ignored.
pub fn eval_hinge(
    cfg: &ObjectiveConfig,
    min_vars: &MinVars,
    max_vars: &MaxVars,
    batch: &Minibatch,
    ds: &Dataset,
) -> Result<LossGrad> {
    evaluate_with(cfg, min_vars, max_vars, batch, ds, Selection::Hinge)
}

/// Dispatches on `cfg.formulation`.
pub fn evaluate(
    cfg: &ObjectiveConfig,
    min_vars: &MinVars,
    max_vars: &MaxVars,
    batch: &Minibatch,
    ds: &Dataset,
) -> Result<LossGrad> {
    match cfg.formulation {
        Formulation::Surrogate => eval_surrogate(cfg, min_vars, max_vars, batch, ds),
        Formulation::Unbiased => eval_unbiased(cfg, min_vars, max_vars, batch, ds),
    }
}

fn evaluate_with(
    cfg: &ObjectiveConfig,
    vars: &MinVars,
    max_vars: &MaxVars,
    batch: &Minibatch,
    ds: &Dataset,
    selection: Selection,
) -> Result<LossGrad> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(PaucError::EmptyClass("minibatch (no instances)"));
    }
    let tpauc = cfg.is_tpauc();
    let (alpha, beta, p, omega) = (cfg.alpha, cfg.beta, cfg.prior_p, cfg.omega);
    let (a, b, s, s_prime) = (vars.a, vars.b, vars.s, vars.s_prime);
    let gamma = max_vars.gamma;
    let theta_a = if tpauc { vars.theta_a } else { 0.0 };
    let theta_b = vars.theta_b;

    let n_theta = vars.theta.num_params();
    let inv_b = 1.0 / batch.len() as f64;
    let pos_scale = if tpauc { 1.0 / (alpha * p) } else { 1.0 / p };
    let neg_scale = 1.0 / (beta * (1.0 - p));

    let mut grad_theta = vec![0.0; n_theta];
    let (mut sum, mut d_a, mut d_b, mut d_s, mut d_sp, mut d_gamma) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut grad_c = BTreeMap::new();

    for id in batch.ids() {
        let weight = |uses_weight: bool| -> Result<Option<f64>> {
            if matches!(selection, Selection::Weighted) && uses_weight {
                max_vars.c.get(id).copied().map(Some).ok_or(PaucError::MissingWeight(id))
            } else {
                Ok(None)
            }
        };
        if ds.label(id) == 1 {
            let c = weight(tpauc)?;
            let mut term = 0.0;
            let mut d_branch = 0.0;
            let mut d_c = None;
            let x = ds.row(id);
            let f = vars.theta.backprop(x, &mut grad_theta, |f| {
                let pb = pos_branch_p(f, a, gamma);
                // dterm/dP, plus the threshold partial for TPAUC
                if !tpauc {
                    term = pb * pos_scale;
                    d_branch = pos_scale;
                } else if let Some(c) = c {
                    term = (alpha * s + c * (pb - s)) * pos_scale;
                    d_branch = c * pos_scale;
                    d_s += (alpha - c) * pos_scale * inv_b;
                    d_c = Some((pb - s) * pos_scale);
                } else {
                    let (h, dh) = selection.apply(pb - s);
                    term = (alpha * s + h) * pos_scale;
                    d_branch = dh * pos_scale;
                    d_s += (alpha - dh) * pos_scale * inv_b;
                }
                let dp_df = 2.0 * (f - a) - 2.0 * (1.0 + gamma);
                d_branch * dp_df * f * (1.0 - f) * inv_b
            })?;
            sum += term;
            d_a += d_branch * (-2.0 * (f - a)) * inv_b;
            d_gamma += d_branch * (-2.0 * f) * inv_b;
            if let (Some(c), Some(dc)) = (c, d_c) {
                sum -= omega * c * c;
                grad_c.insert(id, (dc - 2.0 * omega * c) * inv_b);
            }
        } else {
            let c = weight(true)?;
            let mut term = 0.0;
            let mut d_branch = 0.0;
            let mut d_c = None;
            let x = ds.row(id);
            let f = vars.theta.backprop(x, &mut grad_theta, |f| {
                let nb = neg_branch_n(f, b, gamma);
                if let Some(c) = c {
                    term = (beta * s_prime + c * (nb - s_prime)) * neg_scale;
                    d_branch = c * neg_scale;
                    d_sp += (beta - c) * neg_scale * inv_b;
                    d_c = Some((nb - s_prime) * neg_scale);
                } else {
                    let (h, dh) = selection.apply(nb - s_prime);
                    term = (beta * s_prime + h) * neg_scale;
                    d_branch = dh * neg_scale;
                    d_sp += (beta - dh) * neg_scale * inv_b;
                }
                let dn_df = 2.0 * (f - b) + 2.0 * (1.0 + gamma);
                d_branch * dn_df * f * (1.0 - f) * inv_b
            })?;
            sum += term;
            d_b += d_branch * (-2.0 * (f - b)) * inv_b;
            d_gamma += d_branch * (2.0 * f) * inv_b;
            if let (Some(c), Some(dc)) = (c, d_c) {
                sum -= omega * c * c;
                grad_c.insert(id, (dc - 2.0 * omega * c) * inv_b);
            }
        }
    }

    let mut value = sum * inv_b;
    value -= (1.0 + omega) * gamma * gamma;
    value -= theta_b * (b - 1.0 - gamma);
    d_gamma += -2.0 * (1.0 + omega) * gamma + theta_b;
    d_b -= theta_b;
    let d_theta_b = -(b - 1.0 - gamma);
    let mut d_theta_a = 0.0;
    if tpauc {
        value -= theta_a * (-a - gamma);
        d_gamma += theta_a;
        d_a += theta_a;
        d_theta_a = a + gamma;
    }

    let mut grad_min = grad_theta;
    grad_min.extend_from_slice(&[d_a, d_b, d_s, d_sp, d_theta_a, d_theta_b]);
    Ok(LossGrad {
        value,
        grad_min,
        grad_max_gamma: d_gamma,
        grad_max_c: grad_c,
    })
}

/// Clamps every scalar onto its box; θ is unconstrained.
pub fn project_min(min_vars: &MinVars, cfg: &ObjectiveConfig) -> MinVars {
    let mut out = min_vars.clone();
    let mut scalars = out.scalars();
    project_scalars(&mut scalars, cfg);
    out.set_scalars(&scalars);
    out
}

pub(crate) fn project_scalars(scalars: &mut [f64], cfg: &ObjectiveConfig) {
    for (v, (lo, hi)) in scalars.iter_mut().zip(scalar_boxes(cfg)) {
        *v = v.clamp(lo, hi);
    }
}

/// Projects a flat min-side vector in place.
pub fn project_min_flat(flat: &mut [f64], cfg: &ObjectiveConfig) {
    let p = flat.len() - NUM_SCALARS;
    project_scalars(&mut flat[p..], cfg);
}

/// Clamps γ onto `[−1, 1]` and each `c_i` onto `[0, 1]`.
pub fn project_max(max_vars: &MaxVars, _cfg: &ObjectiveConfig) -> MaxVars {
    MaxVars {
        gamma: max_vars.gamma.clamp(GAMMA_BOX.0, GAMMA_BOX.1),
        c: max_vars.c.iter().map(|c| c.clamp(C_BOX.0, C_BOX.1)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::ScorerKind;
    use proptest::prelude::*;

    /// One-row dataset whose zero linear scorer outputs exactly 0.5.
    fn single(label: u8) -> (Dataset, Minibatch) {
        let other = 1 - label;
        let ds = Dataset::new(vec![0.0, 0.0], 1, vec![label, other]).unwrap();
        let batch = if label == 1 {
            Minibatch { pos_ids: vec![0], neg_ids: vec![] }
        } else {
            Minibatch { pos_ids: vec![], neg_ids: vec![0] }
        };
        (ds, batch)
    }

    fn zero_vars() -> MinVars {
        MinVars {
            theta: ScorerParams::linear(1).unwrap(),
            a: 0.5,
            b: 0.5,
            s: 0.0,
            s_prime: 1.0,
            theta_a: 0.0,
            theta_b: 0.0,
        }
    }

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0, 2.0) - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        let big = softplus(10.0, 4.0);
        assert!(big.is_finite() && (big - 10.0).abs() < 1e-15);
        assert!(softplus(1e6, 32.0).is_finite());
        assert_eq!(softplus(-1e6, 32.0), 0.0);
    }

    #[test]
    fn softplus_gap_bounded_on_grid() {
        for kappa in [0.5, 2.0, 4.0, 32.0] {
            let bound = std::f64::consts::LN_2 / kappa;
            for k in 0..=10_000 {
                let x = -5.0 + k as f64 * 1e-3;
                let gap = softplus(x, kappa) - x.max(0.0);
                assert!((-1e-15..=bound + 1e-15).contains(&gap), "x={x} kappa={kappa}");
            }
        }
    }

    #[test]
    fn branch_values() {
        assert_eq!(pos_branch_p(0.5, 0.5, 0.0), -1.0);
        assert_eq!(neg_branch_n(0.5, 0.5, 0.0), 1.0);
        assert!((neg_branch_n(0.2, 1.0, 0.0) - 1.04).abs() < 1e-12);
        assert!((neg_branch_n(0.8, 1.0, 0.0) - 1.64).abs() < 1e-12);
    }

    #[test]
    fn surrogate_single_negative_value() {
        let (ds, batch) = single(0);
        let cfg = ObjectiveConfig::opauc(Formulation::Surrogate, 0.5).with_kappa(2.0);
        let lg = eval_surrogate(&cfg, &zero_vars(), &MaxVars::initial(2, Formulation::Surrogate), &batch, &ds)
            .unwrap();
        let expected = (0.5 + std::f64::consts::LN_2 / 2.0) / 0.25;
        assert!((lg.value - expected).abs() < 1e-12);
        assert!((lg.value - 3.38629).abs() < 1e-5);
        assert!(lg.grad_max_c.is_empty());
    }

    #[test]
    fn surrogate_single_positive_gradient_in_a() {
        let (ds, batch) = single(1);
        let cfg = ObjectiveConfig::opauc(Formulation::Surrogate, 0.5);
        let mut v = zero_vars();
        v.a = 0.65;
        let lg = eval_surrogate(&cfg, &v, &MaxVars::initial(2, Formulation::Surrogate), &batch, &ds).unwrap();
        assert!((lg.grad_min[2] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn omega_adds_linear_gamma_term() {
        let ds = crate::data::generate_synthetic(20, 0.3, 2, 1.0, 3).unwrap();
        let batch = ds.full_batch();
        let vars = MinVars::initial(ScorerParams::init(ScorerKind::Linear, vec![2, 1], 0).unwrap());
        let max = MaxVars { gamma: 0.3, c: vec![] };
        let base = ObjectiveConfig::opauc(Formulation::Surrogate, 0.3).with_prior(ds.prior_p());
        let g0 = eval_surrogate(&base, &vars, &max, &batch, &ds).unwrap();
        let g1 = eval_surrogate(&base.clone().with_omega(1.5), &vars, &max, &batch, &ds).unwrap();
        assert!((g1.grad_max_gamma - g0.grad_max_gamma - (-2.0 * 1.5 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn unbiased_single_negative_value() {
        let (ds, batch) = single(0);
        let cfg = ObjectiveConfig::opauc(Formulation::Unbiased, 0.5);
        let mut v = zero_vars();
        v.s_prime = 0.5;
        let lg = eval_unbiased(&cfg, &v, &MaxVars::initial(2, Formulation::Unbiased), &batch, &ds).unwrap();
        assert!((lg.value - 3.0).abs() < 1e-12);
        assert_eq!(lg.grad_max_c.len(), 1);
    }

    #[test]
    fn unbiased_weight_irrelevant_at_threshold() {
        // N = 1 = s′, so the data term does not depend on c.
        let (ds, batch) = single(0);
        let cfg = ObjectiveConfig::opauc(Formulation::Unbiased, 0.5).with_omega(0.7);
        let v = zero_vars();
        let max = MaxVars { gamma: 0.0, c: vec![0.4, 1.0] };
        let lg = eval_unbiased(&cfg, &v, &max, &batch, &ds).unwrap();
        assert!((lg.grad_max_c[&0] - (-2.0 * 0.7 * 0.4)).abs() < 1e-15);
        let other = MaxVars { gamma: 0.0, c: vec![0.9, 1.0] };
        let lg2 = eval_unbiased(&cfg.clone().with_omega(0.0), &v, &other, &batch, &ds).unwrap();
        let lg3 = eval_unbiased(&cfg.with_omega(0.0), &v, &max, &batch, &ds).unwrap();
        assert_eq!(lg2.value, lg3.value);
    }

    #[test]
    fn unbiased_missing_weight() {
        let (ds, batch) = single(0);
        let cfg = ObjectiveConfig::opauc(Formulation::Unbiased, 0.5);
        let max = MaxVars { gamma: 0.0, c: vec![] };
        assert!(matches!(
            eval_unbiased(&cfg, &zero_vars(), &max, &batch, &ds),
            Err(PaucError::MissingWeight(0))
        ));
    }

    #[test]
    fn formulation_mismatch_and_empty_batch() {
        let (ds, batch) = single(0);
        let cfg = ObjectiveConfig::opauc(Formulation::Unbiased, 0.5);
        let max = MaxVars::initial(2, Formulation::Unbiased);
        assert!(eval_surrogate(&cfg, &zero_vars(), &max, &batch, &ds).is_err());
        let empty = Minibatch { pos_ids: vec![], neg_ids: vec![] };
        assert!(eval_unbiased(&cfg, &zero_vars(), &max, &empty, &ds).is_err());
    }

    #[test]
    fn projections() {
        let cfg = ObjectiveConfig::tpauc(Formulation::Unbiased, 0.5, 0.5);
        let mut v = zero_vars();
        v.a = 1.3;
        v.s = -7.0;
        v.s_prime = 6.0;
        v.theta_b = -1.0;
        let p = project_min(&v, &cfg);
        assert_eq!((p.a, p.s, p.s_prime, p.theta_b), (1.0, -4.0, 5.0, 0.0));
        assert_eq!(project_min(&p, &cfg), p);
        let m = project_max(&MaxVars { gamma: -2.0, c: vec![1.5, -0.1, 0.3] }, &cfg);
        assert_eq!(m.gamma, -1.0);
        assert_eq!(m.c, vec![1.0, 0.0, 0.3]);
        assert_eq!(project_max(&m, &cfg), m);
    }

    #[test]
    fn opauc_pins_theta_a() {
        let cfg = ObjectiveConfig::opauc(Formulation::Surrogate, 0.5);
        let mut v = zero_vars();
        v.theta_a = 3.0;
        assert_eq!(project_min(&v, &cfg).theta_a, 0.0);
    }

    #[test]
    fn config_json_keys() {
        let text = r#"{"metric":"TPAUC","formulation":"unbiased","alpha":0.5,"beta":0.3,"kappa":2.0,"omega":0.1,"lagrange_cap":1e9}"#;
        let cfg: ObjectiveConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.metric_kind, MetricKind::Tpauc);
        assert_eq!(cfg.formulation, Formulation::Unbiased);
        let back: ObjectiveConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ObjectiveConfig>(
            r#"{"metric":"OPAUC","formulation":"biased"}"#
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn negative_branch_increasing(b in 0.0f64..1.0, g in 0.0f64..1.0, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
            let gamma = (b - 1.0) + g * (2.0 - b);
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            prop_assert!(neg_branch_n(lo, b, gamma) <= neg_branch_n(hi, b, gamma) + 1e-15);
        }

        #[test]
        fn weight_maximiser_is_hinge(x in -5.0f64..5.0) {
            let c_star = if x > 0.0 { 1.0 } else { 0.0 };
            prop_assert_eq!(c_star * x, x.max(0.0));
            for k in 0..=20 {
                prop_assert!((k as f64 / 20.0) * x <= x.max(0.0));
            }
        }
    }
}
