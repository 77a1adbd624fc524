//! Data dissemination in opportunistic networks.
//!
//! Nodes move between community cells, meet within radio range and exchange
//! item summaries. Each node donates a small opportunistic cache and fills
//! it with either the recognition heuristic (RH) or the social-circle
//! heuristic (SCH). The engine measures hit rate and message overhead.

pub mod community;
pub mod config;
pub mod engine;
pub mod error;
pub mod heuristics;
pub mod metrics;
pub mod mobility;
pub mod types;

pub use community::{ActivationRecord, SocialGroups};
pub use config::{CommunityMode, CommunityParams, MobilityParams, Policy, SimConfig};
pub use engine::{
    equivalent_uniform_p, exchange_gate, run, DynamicsDescriptor, Overhead, Placement, SelfishnessDescriptor,
    Simulation, SocialDirection, TtlDescriptor,
};
pub use error::{ConfigError, ContractError, GateError, MetricsError};
pub use heuristics::{RecognitionStore, RecognitionVector, Thresholds};
pub use metrics::{average_runs, hit_rate, MetricsSample, MetricsSeries, RunMeta};
pub use mobility::{MobilityWorld, Scenario};
pub use types::{ChannelId, DataItem, ItemCatalog, ItemId, ItemSet, NodeId, NodeState, Seconds};
