//! Engine for a decentralized autonomous building: a deterministic block
//! ledger with DAO governance, space reservations and comfort thresholds,
//! coupled to a simulated room driven by a rule-based agent.

pub mod agent;
pub mod canon;
pub mod config;
pub mod costs;
pub mod engine;
pub mod governor;
pub mod ledger;
pub mod registry;
pub mod reservation;
pub mod scenario;
pub mod sim;
pub mod token;
pub mod types;

pub use governor::{Action, ProposalState, Support};
pub use ledger::{Call, Chain, GenesisConfig, Receipt, Transaction};
pub use registry::{ThresholdKey, ThresholdSet};
pub use types::{Address, Hash32, NativeAmount};
