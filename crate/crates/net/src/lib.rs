//! Multiagent runtime on top of `glp-core`: agents linked by global names,
//! a simulated network with fair scheduling, and a checker that projects
//! system traces back onto abstract multiagent steps.

pub mod codec;
pub mod harness;
pub mod links;
pub mod maglp;
pub mod pi;
pub mod scenario;
pub mod scenarios;

pub use codec::{decode_message, encode_message, CodecError};
pub use harness::{
    run_scenario, HarnessError, Policy, ScenarioRun, SystemConfig, SystemEvent, SystemTrace, TraceEntry, TraceRecord,
    TraceStatus,
};
pub use maglp::{boot_agent, AgentEvent, AgentState, BootMode, GwtEntry, MaglpError, OutMessage};
pub use pi::{project_pi, validate_maglp_trace, MaglpReport, PiConfig, PiLabel};
pub use scenario::{Mode, Scenario, ScenarioError};
