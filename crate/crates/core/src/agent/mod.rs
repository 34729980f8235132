//! The building assistant and autonomous agent: a rule-based intent parser,
//! two-phase transaction preparation, and threshold/occupancy control.

pub mod assistant;
pub mod intent;
pub mod policy;

pub use assistant::{AssistantError, PendingState, PendingStore, PendingTransaction};
pub use intent::{parse_intent, GrammarParser, Hint, Intent, IntentError, IntentParser};
pub use policy::{
    combined_cycle, control_cycle, hint_brightness, occupancy_cycle, Actuators, AgentDecision, Cause, Decision,
    PolicyConfig, PolicyError, Profile,
};
