//! Shared fixtures for the criterion benches.

use pauc_core::data::generate_synthetic;
use pauc_core::objectives::{Formulation, ObjectiveConfig};
use pauc_core::{Dataset, Result, ScorerKind, ScorerParams, SolverConfig, SolverState};

pub const DIMS: usize = 16;

pub struct StepFixture {
    pub ds: Dataset,
    pub state: SolverState,
    pub solver: SolverConfig,
    pub objective: ObjectiveConfig,
}

/// A balanced synthetic set large enough for `batch` draws per class and a
/// fresh solver state over a linear scorer.
pub fn step_fixture(batch: usize, formulation: Formulation) -> Result<StepFixture> {
    let ds = generate_synthetic(4 * batch.max(16), 0.5, DIMS, 2.0, 0)?;
    let solver = SolverConfig {
        batch_pos: batch,
        batch_neg: batch,
        ..SolverConfig::default()
    };
    let objective = ObjectiveConfig::opauc(formulation, 0.5).with_prior(ds.prior_p());
    let theta = ScorerParams::init(ScorerKind::Linear, vec![DIMS, 1], 0)?;
    let state = SolverState::new(theta, &ds, &solver, &objective);
    Ok(StepFixture {
        ds,
        state,
        solver,
        objective,
    })
}
