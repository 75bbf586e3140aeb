//! Flow files: a JSON array of vehicles, each with an id, a start time in
//! seconds and its route as a sequence of intersection ids.
//!
//! ```json
//! [
//!   {"id": "flow_0_0", "start_time": 20.0,
//!    "route": ["intersection_1_1", "intersection_1_2"]}
//! ]
//! ```
//!
//! Unknown fields are ignored. The optional `entry` and `exit` fields name
//! the boundary side used to enter the first and leave the last
//! intersection; when absent the vehicle enters and leaves travelling
//! straight if that side is on the boundary, otherwise through the first
//! free boundary side in N, E, S, W order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Direction, LaneId, Movement, RoadNetwork};
use super::scenario::{ArrivalSpec, ScenarioConfig, VehiclePlan};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowVehicle {
    pub id: String,
    pub start_time: f64,
    pub route: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<Direction>,
}

/// Resolves one record against the network.
pub fn plan_from_record(
    record: &FlowVehicle,
    config: &ScenarioConfig,
    network: &RoadNetwork,
) -> std::result::Result<VehiclePlan, String> {
    if !(record.start_time.is_finite() && record.start_time >= 0.0) {
        return Err(format!(
            "start time must be non-negative, got {}",
            record.start_time
        ));
    }
    if record.route.is_empty() {
        return Err("route is empty".into());
    }
    let stops = record
        .route
        .iter()
        .map(|name| {
            network
                .lookup(name)
                .ok_or_else(|| format!("route references unknown intersection `{name}`"))
        })
        .collect::<std::result::Result<Vec<usize>, String>>()?;
    let mut headings = Vec::with_capacity(stops.len() + 1);
    for pair in stops.windows(2) {
        let d = network.direction_to(pair[0], pair[1]).ok_or_else(|| {
            format!(
                "{} and {} are not adjacent",
                network.name(pair[0]),
                network.name(pair[1])
            )
        })?;
        headings.push(d);
    }
    let first = stops[0];
    let last = *stops.last().expect("route is non-empty");
    let boundary = |i: usize| {
        Direction::ALL
            .into_iter()
            .filter(move |&d| network.neighbor(i, d).is_none())
    };

    let entry = match record.entry {
        Some(d) if network.neighbor(first, d).is_none() => d,
        Some(d) => {
            return Err(format!(
                "entry side {d:?} of {} is not on the boundary",
                network.name(first)
            ))
        }
        None => {
            let onward = headings.first().copied();
            let straight = onward.map(Direction::opposite);
            match straight.filter(|&d| network.neighbor(first, d).is_none()) {
                Some(d) => d,
                None => boundary(first)
                    .find(|&d| Some(d) != onward)
                    .ok_or_else(|| {
                        format!("{} has no usable boundary entry", network.name(first))
                    })?,
            }
        }
    };
    let arriving = headings.last().copied().unwrap_or(entry.opposite());
    let exit = match record.exit {
        Some(d) if network.neighbor(last, d).is_none() => d,
        Some(d) => {
            return Err(format!(
                "exit side {d:?} of {} is not on the boundary",
                network.name(last)
            ))
        }
        None => {
            if network.neighbor(last, arriving).is_none() {
                arriving
            } else {
                boundary(last)
                    .find(|&d| d != arriving.opposite())
                    .ok_or_else(|| format!("{} has no usable boundary exit", network.name(last)))?
            }
        }
    };
    headings.push(exit);

    let mut route = Vec::with_capacity(stops.len());
    let mut heading = entry.opposite();
    for (&stop, &next_heading) in stops.iter().zip(&headings) {
        let movement = Movement::between(heading, next_heading)
            .ok_or_else(|| format!("route needs a U-turn at {}", network.name(stop)))?;
        route.push((
            stop,
            LaneId {
                approach: heading.opposite(),
                movement,
            },
        ));
        heading = next_heading;
    }
    Ok(VehiclePlan {
        name: record.id.clone(),
        depart_step: (record.start_time / config.interval_seconds).floor() as u32,
        route,
    })
}

/// Flow record reproducing `plan` exactly on re-import.
pub fn record_from_plan(
    plan: &VehiclePlan,
    config: &ScenarioConfig,
    network: &RoadNetwork,
) -> FlowVehicle {
    let (_, first_lane) = plan.route[0];
    let (_, last_lane) = *plan.route.last().expect("plans have at least one hop");
    FlowVehicle {
        id: plan.name.clone(),
        start_time: plan.depart_step as f64 * config.interval_seconds,
        route: plan.route.iter().map(|&(i, _)| network.name(i)).collect(),
        entry: Some(first_lane.approach),
        exit: Some(last_lane.exit_heading()),
    }
}

pub fn export_flow(
    plans: &[VehiclePlan],
    config: &ScenarioConfig,
    network: &RoadNetwork,
) -> Vec<FlowVehicle> {
    plans
        .iter()
        .map(|p| record_from_plan(p, config, network))
        .collect()
}

pub fn write_flow_file(path: &Path, records: &[FlowVehicle]) -> Result<()> {
    let text = serde_json::to_string_pretty(records)?;
    std::fs::write(path, text)
        .map_err(|e| Error::io(format!("writing flow file {}", path.display()), e))
}

/// Reads a flow file and returns `base` with its arrivals replaced by the
/// file's vehicles. Errors carry the line of the offending record.
pub fn import_flow_file(path: &Path, base: &ScenarioConfig) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading flow file {}", path.display()), e))?;
    let records: Vec<FlowVehicle> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let network = base.network()?;
    let lines = record_lines(&text);
    for (k, record) in records.iter().enumerate() {
        plan_from_record(record, base, &network).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: lines.get(k).copied().unwrap_or(0),
            message: format!("vehicle `{}`: {message}", record.id),
        })?;
    }
    let mut config = base.clone();
    config.arrivals = ArrivalSpec::Vehicles { vehicles: records };
    Ok(config)
}

/// 1-based line on which each element of a top-level JSON array starts.
fn record_lines(text: &str) -> Vec<usize> {
    let mut lines = Vec::new();
    let (mut depth, mut line) = (0usize, 1usize);
    let (mut in_string, mut escaped) = (false, false);
    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
        }
        if in_string {
            match (escaped, ch) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' | '[' => {
                if depth == 1 {
                    lines.push(line);
                }
                depth += 1;
            }
            '}' | ']' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::scenario::plan_vehicles;

    fn base() -> ScenarioConfig {
        ScenarioConfig::synthetic(2, 2)
    }

    fn write(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let path = dir.path().join("flow.json");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn empty_flow_is_a_valid_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = import_flow_file(&write(&dir, "[]"), &base()).unwrap();
        let net = cfg.network().unwrap();
        assert!(plan_vehicles(&cfg, &net).unwrap().is_empty());
    }

    #[test]
    fn record_round_trips_through_export_and_import() {
        let cfg = base();
        let net = cfg.network().unwrap();
        let plan = plan_vehicles(&cfg, &net).unwrap().remove(0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flow.json");
        write_flow_file(&path, &export_flow(std::slice::from_ref(&plan), &cfg, &net)).unwrap();
        let imported = import_flow_file(&path, &cfg).unwrap();
        let back = plan_vehicles(&imported, &net).unwrap();
        assert_eq!(back, vec![plan]);
    }

    #[test]
    fn unknown_intersection_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"[
  {"id": "a", "start_time": 0, "route": ["intersection_1_1"]},
  {"id": "b", "start_time": 5, "route": ["intersection_1_1", "intersection_9_9"],
   "vehicle": {"length": 5.0}}
]"#;
        let err = import_flow_file(&write(&dir, text), &base()).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("intersection_9_9"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let dir = tempfile::tempdir().unwrap();
        let err = import_flow_file(&write(&dir, "[\n{\"id\": 3,\n}]"), &base()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2 | 3, .. }), "{err}");
    }

    #[test]
    fn derived_entry_and_exit_go_straight_when_possible() {
        let cfg = ScenarioConfig::synthetic(1, 3);
        let net = cfg.network().unwrap();
        let record = FlowVehicle {
            id: "v".into(),
            start_time: 25.0,
            route: vec![
                "intersection_1_1".into(),
                "intersection_1_2".into(),
                "intersection_1_3".into(),
            ],
            entry: None,
            exit: None,
        };
        let plan = plan_from_record(&record, &cfg, &net).unwrap();
        assert_eq!(plan.depart_step, 2);
        assert!(plan
            .route
            .iter()
            .all(|(_, lane)| lane.movement == Movement::Through));
        assert_eq!(plan.route[0].1.approach, Direction::West);

        let not_adjacent = FlowVehicle {
            route: vec!["intersection_1_1".into(), "intersection_1_3".into()],
            ..record
        };
        assert!(plan_from_record(&not_adjacent, &cfg, &net).is_err());
    }

    #[test]
    fn record_lines_skip_nested_values_and_strings() {
        let text = "[\n {\"a\": \"}{[\"},\n {\"b\": [1, {\"c\": 2}]}\n]";
        assert_eq!(record_lines(text), vec![2, 3]);
    }
}
