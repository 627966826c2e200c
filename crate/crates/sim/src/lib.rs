//! Discrete-time simulation of the feeding arm: scenarios, the tick loop,
//! JSON-lines run logs and the HTTP/WebSocket service.

pub mod runlog;
pub mod scenario;
pub mod server;
pub mod world;

pub use runlog::{run_headless, JsonlSink, LogSink, MemorySink, NullSink, RunSummary};
pub use scenario::{load_scenario, Scenario, ScenarioError, ScheduledSignal};
pub use server::{router, serve, ServeError, SimHandle, SimService};
pub use world::{Command, Event, Simulation, WorldState};
