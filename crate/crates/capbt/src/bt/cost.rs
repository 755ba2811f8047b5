//! Scalar utility cost used for bidding: a per-robot distance factor times
//! the path length to the task, plus the implementation's expected
//! duration. Infeasibility is a value, never an error.

use crate::ids::TaskId;
use crate::value::{Pose, Value};
use serde::{Deserialize, Serialize};

/// Cost of executing a task, in abstract cost units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityCost {
    pub cost: f64,
    pub feasible: bool,
}

impl UtilityCost {
    pub fn feasible(cost: f64) -> Self {
        UtilityCost { cost, feasible: true }
    }

    /// An infeasible cost; consumers ignore the cost value.
    pub fn infeasible() -> Self {
        UtilityCost { cost: f64::INFINITY, feasible: false }
    }
}

/// One task a bidder can offer to execute: where it is, the path the robot
/// would travel, and the input values the capability receives if this
/// candidate wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCandidate {
    pub task: TaskId,
    /// Waypoints the executing robot visits, in order. Cost uses the summed
    /// straight-line path through them.
    pub path: Vec<Pose>,
    /// Capability input values fixed by this candidate.
    pub inputs: Vec<(String, Value)>,
}

impl TaskCandidate {
    pub fn at(task: impl Into<String>, position: Pose) -> Self {
        TaskCandidate { task: TaskId::new(task), path: vec![position], inputs: Vec::new() }
    }

    pub fn with_input(mut self, name: &str, value: Value) -> Self {
        self.inputs.push((name.to_string(), value));
        self
    }

    pub fn with_waypoint(mut self, position: Pose) -> Self {
        self.path.push(position);
        self
    }

    /// Path length starting from the given robot position.
    pub fn path_distance(&self, from: Pose) -> f64 {
        let mut total = 0.0;
        let mut cursor = from;
        for p in &self.path {
            total += cursor.distance(p);
            cursor = *p;
        }
        total
    }
}

/// The context a cost computation needs: where the task is and where the
/// robot will be when it gets to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CostContext {
    /// Robot position after finishing its current commitments.
    pub predicted_position: Pose,
    /// Per-robot distance cost factor.
    pub distance_cost_factor: f64,
}

/// cost = distance_cost_factor × path distance + expected duration.
///
/// Returns an infeasible cost when the robot has no executable
/// implementation (`expected_duration` is `None`).
pub fn compute_cost(
    ctx: &CostContext,
    candidate: &TaskCandidate,
    expected_duration: Option<f64>,
) -> UtilityCost {
    let Some(duration) = expected_duration else {
        return UtilityCost::infeasible();
    };
    let distance = candidate.path_distance(ctx.predicted_position);
    UtilityCost::feasible(ctx.distance_cost_factor * distance + duration)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_matches_direct_arithmetic() {
        // Distance-cost-factor 2.0 at 10 m from a 60 s task: 2*10 + 60 = 80.
        let ctx = CostContext {
            predicted_position: Pose::new(0.0, 0.0),
            distance_cost_factor: 2.0,
        };
        let candidate = TaskCandidate::at("t1", Pose::new(10.0, 0.0));
        let cost = compute_cost(&ctx, &candidate, Some(60.0));
        assert!(cost.feasible);
        assert_eq!(cost.cost, 80.0);
    }

    #[test]
    fn zero_distance_costs_duration_alone() {
        let ctx = CostContext {
            predicted_position: Pose::new(3.0, 4.0),
            distance_cost_factor: 2.0,
        };
        let candidate = TaskCandidate::at("t1", Pose::new(3.0, 4.0));
        assert_eq!(compute_cost(&ctx, &candidate, Some(60.0)).cost, 60.0);
    }

    #[test]
    fn missing_implementation_is_infeasible() {
        let ctx = CostContext {
            predicted_position: Pose::new(0.0, 0.0),
            distance_cost_factor: 1.0,
        };
        let candidate = TaskCandidate::at("t1", Pose::new(1.0, 0.0));
        assert!(!compute_cost(&ctx, &candidate, None).feasible);
    }

    #[test]
    fn multi_leg_path_sums_segments() {
        let ctx = CostContext {
            predicted_position: Pose::new(0.0, 0.0),
            distance_cost_factor: 1.0,
        };
        let candidate = TaskCandidate::at("t1", Pose::new(3.0, 0.0))
            .with_waypoint(Pose::new(3.0, 4.0));
        assert_eq!(compute_cost(&ctx, &candidate, Some(0.0)).cost, 7.0);
    }

    #[test]
    fn cost_is_monotone_in_distance() {
        let ctx = CostContext {
            predicted_position: Pose::new(0.0, 0.0),
            distance_cost_factor: 1.25,
        };
        let mut last = f64::MIN;
        for d in 0..200 {
            let candidate = TaskCandidate::at("t", Pose::new(d as f64 * 0.5, 0.0));
            let cost = compute_cost(&ctx, &candidate, Some(2.0)).cost;
            assert!(cost >= last);
            last = cost;
        }
    }
}
