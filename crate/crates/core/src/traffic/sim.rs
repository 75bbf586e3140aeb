use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::network::{LaneId, Phase, RoadNetwork, LANES_PER_INTERSECTION, N_PHASES};
use super::scenario::{plan_vehicles, ScenarioConfig, VehiclePlan};
use crate::error::{Error, Result};

/// Which waiting vehicles make up an intersection's reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// The intersection and its graph neighbors, averaged per intersection.
    #[default]
    Local,
    /// Every intersection, averaged; identical for all agents.
    Global,
    /// Every intersection weighted by `beta^hops`, normalized by the weights.
    Discount,
}

impl RewardMode {
    pub const ALL: [RewardMode; 3] = [RewardMode::Local, RewardMode::Global, RewardMode::Discount];

    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Local => "local",
            RewardMode::Global => "global",
            RewardMode::Discount => "discount",
        }
    }
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown reward mode `{s}`")))
    }
}

/// Observation length for an intersection: one-hot phase plus one wave
/// count per incoming lane.
pub const OBS_DIM: usize = N_PHASES + LANES_PER_INTERSECTION;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct VehicleState {
    /// Index of the hop the vehicle is currently on or heading to.
    hop: usize,
    exit_step: Option<u32>,
}

/// Vehicle counts per container, recounted from scratch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Census {
    /// Vehicles whose departure step has been reached.
    pub scheduled: usize,
    /// Departed but held at the boundary because the entry lane is full.
    pub waiting_to_enter: usize,
    pub queued: usize,
    pub in_transit: usize,
    pub exited: usize,
    pub not_departed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
    /// Vehicles that left the network during this step.
    pub exited: usize,
}

/// Evaluation metrics of one finished episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Vehicles that completed their trip strictly inside the episode.
    pub throughput: usize,
    /// Mean seconds between scheduled departure and exit over every departed
    /// vehicle; unfinished trips end at the horizon. 0 when nobody departed.
    pub travel_time: f64,
    /// False when no vehicle departed and `travel_time` is a placeholder.
    pub travel_time_defined: bool,
    /// Waiting vehicles per lane per step, averaged over intersections.
    pub queue_length: f64,
    pub departed: usize,
}

/// Point-queue traffic simulator over a grid of signalized intersections.
///
/// One call to [`Env::step`] is one control interval:
/// 1. every intersection switches to its requested phase;
/// 2. each green or right-turn lane discharges up to `discharge_rate`
///    vehicles onto the link toward their next lane (arriving after
///    `link_delay` steps) or out of the network;
/// 3. vehicles whose link time has elapsed join their lane queue while it
///    has room, otherwise they keep waiting on the link;
/// 4. vehicles departing this step join their entry lane (or wait at the
///    boundary if it is full);
/// 5. the clock advances.
#[derive(Clone, Debug)]
pub struct Env {
    config: ScenarioConfig,
    network: RoadNetwork,
    plans: Vec<VehiclePlan>,
    reward_mode: RewardMode,
    vehicles: Vec<VehicleState>,
    phases: Vec<Phase>,
    queues: Vec<VecDeque<usize>>,
    transit: Vec<VecDeque<(u32, usize)>>,
    boundary: Vec<VecDeque<usize>>,
    next_departure: usize,
    clock: u32,
    queue_sum: Vec<f64>,
}

impl Env {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let network = config.network()?;
        let plans = plan_vehicles(&config, &network)?;
        let lanes = network.len() * LANES_PER_INTERSECTION;
        let mut env = Self {
            network,
            plans,
            reward_mode: RewardMode::Local,
            vehicles: Vec::new(),
            phases: Vec::new(),
            queues: vec![VecDeque::new(); lanes],
            transit: vec![VecDeque::new(); lanes],
            boundary: vec![VecDeque::new(); lanes],
            next_departure: 0,
            clock: 0,
            queue_sum: Vec::new(),
            config,
        };
        env.reset();
        Ok(env)
    }

    pub fn with_reward_mode(mut self, mode: RewardMode) -> Self {
        self.reward_mode = mode;
        self
    }

    pub fn set_reward_mode(&mut self, mode: RewardMode) {
        self.reward_mode = mode;
    }

    pub fn reward_mode(&self) -> RewardMode {
        self.reward_mode
    }

    /// Restarts the episode with the same vehicle schedule and returns the
    /// initial observations.
    pub fn reset(&mut self) -> Vec<Vec<f64>> {
        let n = self.network.len();
        self.vehicles = vec![
            VehicleState {
                hop: 0,
                exit_step: None
            };
            self.plans.len()
        ];
        self.phases = vec![Phase::NorthSouthThrough; n];
        self.queues.iter_mut().for_each(VecDeque::clear);
        self.transit.iter_mut().for_each(VecDeque::clear);
        self.boundary.iter_mut().for_each(VecDeque::clear);
        self.next_departure = 0;
        self.clock = 0;
        self.queue_sum = vec![0.0; n];
        self.observations()
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn plans(&self) -> &[VehiclePlan] {
        &self.plans
    }

    pub fn n_intersections(&self) -> usize {
        self.network.len()
    }

    pub fn clock(&self) -> u32 {
        self.clock
    }

    pub fn is_done(&self) -> bool {
        self.clock >= self.config.horizon
    }

    pub fn phase(&self, i: usize) -> Phase {
        self.phases[i]
    }

    fn slot(i: usize, lane: LaneId) -> usize {
        i * LANES_PER_INTERSECTION + lane.index()
    }

    pub fn step(&mut self, joint_action: &[usize]) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::State("episode is over; call reset".into()));
        }
        if joint_action.len() != self.network.len() {
            return Err(Error::Dimension {
                what: "joint action",
                expected: self.network.len(),
                actual: joint_action.len(),
            });
        }
        let phases = joint_action
            .iter()
            .map(|&a| Phase::from_index(a))
            .collect::<Result<Vec<_>>>()?;
        self.phases = phases;
        let t = self.clock;
        let exited = self.discharge(t);
        self.admit_from_links(t);
        self.admit_departures(t);
        self.clock += 1;
        for i in 0..self.network.len() {
            let waiting: usize = self.lane_waits(i).iter().sum();
            self.queue_sum[i] += waiting as f64 / LANES_PER_INTERSECTION as f64;
        }
        Ok(StepResult {
            observations: self.observations(),
            rewards: self.rewards(),
            done: self.is_done(),
            exited,
        })
    }

    fn discharge(&mut self, t: u32) -> usize {
        let mut exited = 0;
        for i in 0..self.network.len() {
            let phase = self.phases[i];
            for lane in LaneId::all() {
                if !phase.allows(lane) {
                    continue;
                }
                let slot = Self::slot(i, lane);
                for _ in 0..self.config.discharge_rate {
                    let Some(v) = self.queues[slot].pop_front() else {
                        break;
                    };
                    let state = &mut self.vehicles[v];
                    state.hop += 1;
                    match self.plans[v].route.get(state.hop) {
                        Some(&(j, next_lane)) => {
                            self.transit[Self::slot(j, next_lane)]
                                .push_back((t + self.config.link_delay, v));
                        }
                        None => {
                            state.exit_step = Some(t);
                            exited += 1;
                        }
                    }
                }
            }
        }
        exited
    }

    fn admit_from_links(&mut self, t: u32) {
        let capacity = self.config.lane_capacity;
        for (queue, link) in self.queues.iter_mut().zip(&mut self.transit) {
            while queue.len() < capacity {
                match link.front() {
                    Some(&(ready, v)) if ready <= t => {
                        link.pop_front();
                        queue.push_back(v);
                    }
                    _ => break,
                }
            }
        }
    }

    fn admit_departures(&mut self, t: u32) {
        while let Some(plan) = self.plans.get(self.next_departure) {
            if plan.depart_step > t {
                break;
            }
            let (i, lane) = plan.route[0];
            self.boundary[Self::slot(i, lane)].push_back(self.next_departure);
            self.next_departure += 1;
        }
        let capacity = self.config.lane_capacity;
        for (queue, waiting) in self.queues.iter_mut().zip(&mut self.boundary) {
            while queue.len() < capacity {
                match waiting.pop_front() {
                    Some(v) => queue.push_back(v),
                    None => break,
                }
            }
        }
    }

    /// Queued (stopped) vehicles per incoming lane, canonical order.
    pub fn lane_waits(&self, i: usize) -> Vec<usize> {
        LaneId::all()
            .map(|l| self.queues[Self::slot(i, l)].len())
            .collect()
    }

    /// Approaching vehicles per incoming lane: queued, on the link toward the
    /// lane, or held at the boundary before it.
    pub fn lane_waves(&self, i: usize) -> Vec<usize> {
        LaneId::all()
            .map(|l| {
                let s = Self::slot(i, l);
                self.queues[s].len() + self.transit[s].len() + self.boundary[s].len()
            })
            .collect()
    }

    /// Vehicle ids queued on each lane of intersection `i`, front first.
    pub fn queue_dump(&self, i: usize) -> Vec<Vec<usize>> {
        LaneId::all()
            .map(|l| self.queues[Self::slot(i, l)].iter().copied().collect())
            .collect()
    }

    pub fn observe(&self, i: usize) -> Vec<f64> {
        let mut obs = vec![0.0; OBS_DIM];
        obs[self.phases[i].index()] = 1.0;
        for (o, w) in obs[N_PHASES..].iter_mut().zip(self.lane_waves(i)) {
            *o = w as f64;
        }
        obs
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.network.len()).map(|i| self.observe(i)).collect()
    }

    fn intersection_wait(&self, i: usize) -> f64 {
        self.lane_waits(i).iter().sum::<usize>() as f64
    }

    pub fn reward(&self, i: usize, mode: RewardMode) -> f64 {
        let n = self.network.len();
        match mode {
            RewardMode::Local => {
                let nbrs = self.network.neighbors(i);
                let total: f64 = std::iter::once(i)
                    .chain(nbrs.iter().copied())
                    .map(|j| self.intersection_wait(j))
                    .sum();
                -total / (1 + nbrs.len()) as f64
            }
            RewardMode::Global => {
                let total: f64 = (0..n).map(|j| self.intersection_wait(j)).sum();
                -total / n as f64
            }
            RewardMode::Discount => {
                let beta = self.config.discount_beta;
                let (mut total, mut weight) = (0.0, 0.0);
                for j in 0..n {
                    let w = beta.powi(self.network.hop_distance(i, j) as i32);
                    total += w * self.intersection_wait(j);
                    weight += w;
                }
                -total / weight
            }
        }
    }

    pub fn rewards(&self) -> Vec<f64> {
        (0..self.network.len())
            .map(|i| self.reward(i, self.reward_mode))
            .collect()
    }

    pub fn census(&self) -> Census {
        let scheduled = self
            .plans
            .iter()
            .filter(|p| p.depart_step < self.clock)
            .count();
        Census {
            scheduled,
            waiting_to_enter: self.boundary.iter().map(VecDeque::len).sum(),
            queued: self.queues.iter().map(VecDeque::len).sum(),
            in_transit: self.transit.iter().map(VecDeque::len).sum(),
            exited: self
                .vehicles
                .iter()
                .filter(|v| v.exit_step.is_some())
                .count(),
            not_departed: self.plans.len() - scheduled,
        }
    }

    /// Episode metrics; only available once the horizon is reached.
    pub fn metrics(&self) -> Result<EpisodeMetrics> {
        if !self.is_done() {
            return Err(Error::State(format!(
                "metrics requested at step {} of {}",
                self.clock, self.config.horizon
            )));
        }
        let interval = self.config.interval_seconds;
        let end = self.config.horizon as f64 * interval;
        let mut throughput = 0;
        let mut departed = 0;
        let mut travel = 0.0;
        for (plan, state) in self.plans.iter().zip(&self.vehicles) {
            if plan.depart_step >= self.config.horizon {
                continue;
            }
            departed += 1;
            let t_in = plan.depart_step as f64 * interval;
            let t_out = state.exit_step.map_or(end, |s| s as f64 * interval);
            travel += t_out - t_in;
            if state.exit_step.is_some() && 0.0 < t_in && t_in < t_out && t_out < end {
                throughput += 1;
            }
        }
        let n = self.network.len() as f64;
        let steps = self.config.horizon as f64;
        Ok(EpisodeMetrics {
            throughput,
            travel_time: if departed > 0 {
                travel / departed as f64
            } else {
                0.0
            },
            travel_time_defined: departed > 0,
            queue_length: self.queue_sum.iter().sum::<f64>() / (n * steps),
            departed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::flow::FlowVehicle;
    use crate::traffic::network::{Direction, Movement};
    use crate::traffic::scenario::ArrivalSpec;

    fn scenario(rows: usize, cols: usize, vehicles: Vec<FlowVehicle>) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::synthetic(rows, cols);
        cfg.horizon = 20;
        cfg.arrivals = ArrivalSpec::Vehicles { vehicles };
        cfg
    }

    fn vehicle(id: &str, start_step: u32, route: &[&str]) -> FlowVehicle {
        FlowVehicle {
            id: id.into(),
            start_time: start_step as f64 * 10.0,
            route: route.iter().map(|s| s.to_string()).collect(),
            entry: Some(Direction::West),
            exit: None,
        }
    }

    #[test]
    fn empty_network_is_quiet() {
        let mut env = Env::new(scenario(2, 2, vec![])).unwrap();
        let obs = env.reset();
        assert_eq!(obs[0].len(), OBS_DIM);
        assert_eq!(obs[0][..4], [1.0, 0.0, 0.0, 0.0]);
        assert!(obs[0][4..].iter().all(|&w| w == 0.0));
        for mode in RewardMode::ALL {
            env.set_reward_mode(mode);
            let out = env.step(&[1, 2, 3, 0]).unwrap();
            assert!(out.rewards.iter().all(|&r| r == 0.0));
            assert!(out
                .observations
                .iter()
                .all(|o| o[4..].iter().all(|&w| w == 0.0)));
        }
    }

    #[test]
    fn green_lane_discharges_and_vehicle_exits() {
        // Enters intersection_1_1 from the west heading east, goes straight out.
        let mut env =
            Env::new(scenario(1, 1, vec![vehicle("v", 3, &["intersection_1_1"])])).unwrap();
        for _ in 0..3 {
            env.step(&[0]).unwrap();
        }
        let wt = LaneId {
            approach: Direction::West,
            movement: Movement::Through,
        };
        env.step(&[0]).unwrap();
        assert_eq!(env.lane_waits(0)[wt.index()], 1, "queued at its entry lane");
        // North-south green: the east-bound through lane stays red.
        env.step(&[0]).unwrap();
        assert_eq!(env.lane_waits(0)[wt.index()], 1);
        assert_eq!(env.reward(0, RewardMode::Local), -1.0);
        let out = env.step(&[1]).unwrap();
        assert_eq!(out.exited, 1);
        assert_eq!(env.lane_waits(0)[wt.index()], 0);
        while !env.is_done() {
            env.step(&[1]).unwrap();
        }
        let m = env.metrics().unwrap();
        assert_eq!(m.throughput, 1);
        assert_eq!(m.departed, 1);
        assert_eq!(m.travel_time, 20.0);
    }

    #[test]
    fn travel_time_of_a_four_step_trip_is_forty_seconds() {
        let mut env =
            Env::new(scenario(1, 1, vec![vehicle("v", 3, &["intersection_1_1"])])).unwrap();
        for t in 0..20 {
            // Green for west-east through only from step 7 on.
            let a = if t >= 7 { 1 } else { 0 };
            env.step(&[a]).unwrap();
        }
        let m = env.metrics().unwrap();
        assert_eq!((m.throughput, m.travel_time), (1, 40.0));
    }

    #[test]
    fn right_turns_ignore_the_signal() {
        // From the west, turning right means heading south.
        let mut record = vehicle("v", 0, &["intersection_1_1"]);
        record.entry = Some(Direction::West);
        record.exit = Some(Direction::South);
        let mut env = Env::new(scenario(1, 1, vec![record])).unwrap();
        env.step(&[0]).unwrap();
        let out = env.step(&[0]).unwrap();
        assert_eq!(out.exited, 1);
    }

    #[test]
    fn wave_counts_vehicles_on_the_link() {
        let vehicles = (0..5)
            .map(|k| {
                vehicle(
                    &format!("v{k}"),
                    0,
                    &["intersection_1_1", "intersection_1_2"],
                )
            })
            .collect();
        let mut env = Env::new(scenario(1, 2, vehicles)).unwrap();
        env.step(&[1, 0]).unwrap();
        // Link delay 2: three discharged at step 1 arrive at step 3.
        env.step(&[1, 0]).unwrap();
        let wt = LaneId {
            approach: Direction::West,
            movement: Movement::Through,
        };
        assert_eq!(env.lane_waves(1)[wt.index()], 3);
        assert_eq!(env.lane_waits(1)[wt.index()], 0);
        assert_eq!(env.lane_waits(0)[wt.index()], 2);
        env.step(&[1, 0]).unwrap();
        env.step(&[0, 0]).unwrap();
        env.step(&[0, 0]).unwrap();
        assert_eq!(env.lane_waits(1)[wt.index()], 5);
        assert_eq!(env.lane_waves(1)[wt.index()], 5);
        let obs = env.observe(1);
        assert_eq!(obs[4 + wt.index()], 5.0);
    }

    #[test]
    fn spillback_holds_vehicles_on_the_link() {
        let vehicles = (0..6)
            .map(|k| {
                vehicle(
                    &format!("v{k}"),
                    0,
                    &["intersection_1_1", "intersection_1_2"],
                )
            })
            .collect();
        let mut cfg = scenario(1, 2, vehicles);
        cfg.lane_capacity = 4;
        let mut env = Env::new(cfg).unwrap();
        let wt = LaneId {
            approach: Direction::West,
            movement: Movement::Through,
        };
        assert_eq!(env.step(&[1, 0]).unwrap().exited, 0);
        assert_eq!(env.census().waiting_to_enter, 2);
        for _ in 0..6 {
            env.step(&[1, 0]).unwrap();
        }
        assert_eq!(env.lane_waits(1)[wt.index()], 4);
        assert_eq!(env.lane_waves(1)[wt.index()], 6);
        let c = env.census();
        assert_eq!(c.queued + c.in_transit, 6);
    }

    #[test]
    fn local_reward_averages_over_the_neighborhood() {
        // Intersection 0 of a 1x3 grid has one neighbor; 1 has two.
        let mut vehicles = Vec::new();
        for k in 0..12 {
            vehicles.push(vehicle(&format!("a{k}"), 0, &["intersection_1_1"]));
        }
        for k in 0..4 {
            let mut v = vehicle(&format!("b{k}"), 0, &["intersection_1_3"]);
            v.entry = Some(Direction::North);
            v.exit = Some(Direction::South);
            vehicles.push(v);
        }
        let mut cfg = scenario(1, 3, vehicles);
        cfg.lane_capacity = 100;
        let mut env = Env::new(cfg).unwrap();
        // The `a` vehicles turn left from the west, the `b` vehicles go
        // straight from the north; the north-south left phase serves neither.
        let out = env.step(&[2, 2, 2]).unwrap();
        assert_eq!(out.rewards[0], -12.0 / 2.0);
        assert_eq!(out.rewards[1], -(12.0 + 4.0) / 3.0);
        assert_eq!(out.rewards[2], -4.0 / 2.0);
        env.set_reward_mode(RewardMode::Global);
        let g = env.rewards();
        assert!(g.iter().all(|&r| r == -16.0 / 3.0));
        let d = env.reward(0, RewardMode::Discount);
        let w = [1.0, 0.9, 0.81];
        let expected = -(12.0 * w[0] + 4.0 * w[2]) / w.iter().sum::<f64>();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn metrics_only_after_the_horizon() {
        let mut env = Env::new(scenario(1, 1, vec![])).unwrap();
        assert!(matches!(env.metrics(), Err(Error::State(_))));
        while !env.is_done() {
            env.step(&[0]).unwrap();
        }
        let m = env.metrics().unwrap();
        assert_eq!(m.throughput, 0);
        assert_eq!(m.queue_length, 0.0);
        assert_eq!(m.travel_time, 0.0);
        assert!(!m.travel_time_defined);
        assert!(env.step(&[0]).is_err());
    }

    #[test]
    fn rejects_bad_actions() {
        let mut env = Env::new(scenario(1, 2, vec![])).unwrap();
        assert!(matches!(env.step(&[0]), Err(Error::Dimension { .. })));
        assert!(env.step(&[0, 4]).is_err());
    }

    #[test]
    fn reward_modes_parse() {
        for m in RewardMode::ALL {
            assert_eq!(m.name().parse::<RewardMode>().unwrap(), m);
        }
        assert!("selfish".parse::<RewardMode>().is_err());
    }
}
