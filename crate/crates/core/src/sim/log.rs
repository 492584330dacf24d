//! Line-delimited JSON step log.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::monitor::Violation;
use super::SimError;
use crate::bernstein::TrajectoryRecord;
use crate::network::AgentId;
use crate::world::VertexId;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStepRecord {
    pub id: AgentId,
    /// Index of the agent's communication group this step.
    pub group: usize,
    pub position: Point,
    pub waypoint: VertexId,
    pub waypoint_position: Point,
    pub subgoal: Point,
    pub arrived: bool,
    pub trajectory: TrajectoryRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub time: f64,
    pub agents: Vec<AgentStepRecord>,
    pub violations: Vec<Violation>,
}

pub fn write_record(out: &mut dyn Write, record: &StepRecord) -> Result<(), SimError> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_log(input: impl BufRead) -> Result<Vec<StepRecord>, SimError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::PiecewiseTrajectory;
    use crate::sim::monitor::ViolationKind;

    #[test]
    fn round_trip_is_exact() {
        let t = PiecewiseTrajectory::stationary(Point::new(0.1, 1.0 / 3.0), 10, 5, 0.2, 7).unwrap();
        let rec = StepRecord {
            step: 7,
            time: 7.0 * 0.2,
            agents: vec![AgentStepRecord {
                id: 0,
                group: 0,
                position: Point::new(0.1, 1.0 / 3.0),
                waypoint: 4,
                waypoint_position: Point::new(0.5, 0.5),
                subgoal: Point::new(0.3, 1.0 / 7.0),
                arrived: false,
                trajectory: TrajectoryRecord::from_trajectory(0, &t),
            }],
            violations: vec![Violation {
                step: 7,
                kind: ViolationKind::Collision,
                agents: vec![0, 1],
                value: 0.299_999_9,
                detail: "x".into(),
            }],
        };
        let mut buf = Vec::new();
        write_record(&mut buf, &rec).unwrap();
        write_record(&mut buf, &rec).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 2);
        let back = read_log(buf.as_slice()).unwrap();
        assert_eq!(back, vec![rec.clone(), rec]);
    }
}
