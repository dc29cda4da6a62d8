//! Time-slotted uplink simulator for dense user-centric cell-free massive
//! MIMO networks.
//!
//! The physical layer follows a single-ring local scattering channel with
//! DFT angular subspaces, threshold-based user-centric clusters, pilot reuse
//! across orthogonal subspaces, subspace-projection channel estimation and
//! two-stage (local MMSE plus cluster weighting) combining. On top of it,
//! rates are allocated from an empirical distribution of past mutual
//! information, and a drift-plus-penalty scheduler with virtual queues
//! enforces proportional or hard fairness when only `K_act` of the `K_tot`
//! users may transmit per slot.
//!
//! ```no_run
//! use cellfree_core::{run_experiment, summarize, Policy, SimConfig};
//!
//! let config = SimConfig { policy: Policy::Pfs, layouts: 2, ..SimConfig::default() };
//! let result = run_experiment(&config).unwrap();
//! let summary = summarize(&result.layouts, config.log_floor);
//! println!("10th percentile: {:.3} bit/s/Hz", summary.p10);
//! ```

pub mod association;
pub mod channel;
pub mod config;
pub mod engine;
pub mod export;
pub mod geometry;
pub mod metrics;
pub mod ratealloc;
pub mod receiver;
pub mod scheduler;

pub use config::{ConfigError, SimConfig};
pub use engine::{run_experiment, run_layout, ExperimentResult, Layout, LayoutOutcome, SlotResult};
pub use metrics::{summarize, Summary};
pub use scheduler::Policy;
