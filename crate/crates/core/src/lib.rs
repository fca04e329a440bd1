//! Multi-echelon inventory environment: one warehouse supplying `N` stores
//! with `K` products under Poisson demand, lost sales, lead times, shelf
//! capacities and a shared per-period profit reward.
//!
//! [`Env::step`] is the batched implementation used everywhere;
//! [`reference::scalar_reference_step`] is an element-wise twin kept for
//! equivalence testing.

pub mod action;
pub mod allocation;
pub mod audit;
pub mod config;
pub mod env;
pub mod error;
pub mod exec;
pub mod fuzz;
pub mod obs;
pub mod policy;
pub mod reference;
pub mod reward;
pub mod tables;
pub mod trace;
pub mod variant;

pub use action::ActionSet;
pub use allocation::resolve_allocation;
pub use config::ChainConfig;
pub use env::{Env, StepOutcome};
pub use error::{ConfigError, EnvError};
pub use obs::{ObsLayout, ObservationSet, WarehouseView};
pub use policy::Policy;
pub use reward::RewardComponents;
pub use tables::EnvTables;
pub use variant::{RewardMode, Variant};
