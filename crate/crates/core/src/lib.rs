//! Randomized gossip computation of separable functions.
//!
//! Every node holds a value `y_i >= 1`. Each node draws `r` exponential
//! variates of rate `y_i`, the network computes the component-wise minimum
//! of those vectors by push-pull gossip, and each node estimates
//! `y = Σ y_i` as `r / Σ_l min_l`.
//!
//! Modules, bottom-up:
//! - [`graph`]: topologies and the max-degree contact matrix.
//! - [`conductance`]: exact conductance, closed forms and spectral gap.
//! - [`engine`]: synchronous and asynchronous activation clocks.
//! - [`spread`]: push-pull message spreading and min-vector gossip.
//! - [`comp`]: the exponential-minimum estimator.
//! - [`metrics`]: spreading/computing time quantiles and scaling fits.
//! - [`experiment`]: seeded trial fan-out.

pub mod comp;
pub mod conductance;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod spread;

pub use comp::{CompInputs, CompOptions, CompOutcome, FKind, MinimaPath};
pub use conductance::{ConductanceMethod, ConductanceResult};
pub use engine::{ActivationEvent, SimClock, SyncSemantics, TimeModel};
pub use error::{Error, Result};
pub use graph::{Graph, TransitionMatrix};
pub use metrics::{ScalingReport, TrialRecord};
pub use spread::{Capacity, ContactSampler, GossipState, MinVectorState, SpreadState};
