//! Partial-AUC optimization through instance-wise minimax reformulations.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: datasets, CSV ingestion, synthetic generation, stratified sampling.
//! - [`scorer`]: linear / MLP scorers with sigmoid outputs and analytic gradients.
//! - [`metrics`]: exact empirical AUC, one-way and two-way partial AUC, and the
//!   closed-form optimum of the instance-wise squared-loss problem.
//! - [`objectives`]: the smoothed (softplus) and exactly unbiased (auxiliary
//!   weight) minimax objectives with Lagrangian decoupling.
//! - [`solver`]: accelerated stochastic gradient descent-ascent with momentum
//!   variance reduction.
//! - [`verify`]: executable property checks of the reformulation identities.
//! - [`timing`]: per-step timing of the instance-wise step against a pairwise
//!   reference.

pub mod data;
pub mod error;
pub mod metrics;
pub mod objectives;
pub mod scorer;
pub mod solver;
pub mod timing;
pub mod verify;

pub use data::{Dataset, Minibatch, Sampler, SplitSpec};
pub use error::{PaucError, Result};
pub use metrics::{ClosedFormOptimum, MetricKind, PaucReport};
pub use objectives::{Formulation, LossGrad, MaxVars, MinVars, ObjectiveConfig};
pub use scorer::{ScorerKind, ScorerParams};
pub use solver::{SolverConfig, SolverState, TrainOutcome, TrainTrace};
pub use verify::VerificationReport;
