//! Leader-follower swarm dynamics with topological interactions.
//!
//! The crate provides two simulators over the same model:
//!
//! * [`micro`]: forward-Euler integration of the N-agent ODE system in which
//!   every agent averages its interactions over its M nearest neighbors.
//! * [`meso`]: the asymptotic Nanbu particle method, where every agent
//!   performs one weak binary interaction per step with a partner drawn from
//!   its topological ball, estimated on a random subsample through a k-d tree.
//!
//! Labels (follower/leader) switch stochastically through the rate families
//! in [`transitions`]. The [`harness`] module holds scenario I/O, the
//! alignment-only validation experiment and the neighbor-search cost
//! benchmark.

// `!(x > 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod forces;
pub mod harness;
pub mod meso;
pub mod micro;
pub mod model;
pub mod rng;
pub mod snapshot;
pub mod topology;
pub mod transitions;
pub mod vector;

mod par;

pub use config::{validate_config, ScenarioConfig};
pub use error::{Error, NeighborError, Result};
pub use model::{
    AgentState, ForceParams, Label, Mode, RateSpec, SimParams, SourceSpec, SwarmState,
};
pub use vector::Vector;
