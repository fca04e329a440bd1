//! From-scratch actor-critic PPO for the inventory environment: a small
//! reverse-mode MLP engine, multi-head categorical policies, generalized
//! advantage estimation, the clipped-surrogate update and per-variant agent
//! wiring.

pub mod agents;
pub mod categorical;
pub mod checkpoint;
pub mod gae;
pub mod gradcheck;
pub mod mlp;
pub mod net;
pub mod ppo;
pub mod rollout;

pub use agents::{AgentError, AgentSystem, Role, Slot};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
pub use net::{ActMode, Decision, PolicyNet};
pub use ppo::{Adam, PpoConfig, Sample, UpdateAborted, UpdateStats};
pub use rollout::{collect, run_episode, Episode, Learner, Trajectory};
