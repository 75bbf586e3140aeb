//! Queue-based multi-intersection traffic simulation.
//!
//! Each intersection observes its phase and the vehicles approaching on
//! its own incoming lanes, picks one of four phases every control
//! interval, and is rewarded with the (negated) number of vehicles waiting
//! around itself and its graph neighbors.

pub mod flow;
mod network;
mod scenario;
mod sim;

pub use flow::{export_flow, import_flow_file, write_flow_file, FlowVehicle};
pub use network::{
    Direction, GridSpec, LaneId, Movement, Phase, RoadNetwork, LANES_PER_INTERSECTION, N_PHASES,
};
pub use scenario::{
    plan_vehicles, ArrivalSpec, ScenarioConfig, TurnRatios, VehiclePlan, SCENARIO_VERSION,
};
pub use sim::{Census, Env, EpisodeMetrics, RewardMode, StepResult, OBS_DIM};
