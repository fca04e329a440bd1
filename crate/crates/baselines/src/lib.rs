//! Classical comparison policies: echelon base-stock with Powell-tuned
//! levels, and a uniform-random floor.

pub mod base_stock;
pub mod eval;
pub mod powell;
pub mod random;
pub mod tune;

pub use base_stock::{base_stock_order, BaseStockParams, BaseStockPolicy};
pub use eval::{mean_return, play, play_many, EpisodeOutcome};
pub use powell::{powell_minimize, NonFiniteObjective, PowellOptions, PowellResult, PowellState};
pub use random::RandomPolicy;
pub use tune::{evaluate_base_stock, grid_search_base_stock, optimize_base_stock, Tuned};
