//! The simulated 2D world: map, robot motion, randomized task execution,
//! and the globally shared found-object database.
//!
//! The world owns all randomness (duration jitter, failure rolls) and is a
//! bus endpoint: robots drive it with TASK_START / TASK_CANCEL messages and
//! receive TASK_RESULT replies; database changes are broadcast as
//! OBJECT_UPDATE messages so every robot can keep a replica.

use crate::bt::env::WorldRequest;
use crate::bus::{Bus, Payload, SimTime};
use crate::error::{Error, Result};
use crate::ids::{TaskId, WorldId};
use crate::value::{Pose, Value};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Position tolerance for "robot at task position".
const ARRIVAL_EPS: f64 = 0.5;

/// Map task kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapTaskKind {
    ExploreGoal,
    Object,
}

/// One task placed on the map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapTask {
    pub id: TaskId,
    pub kind: MapTaskKind,
    pub position: [f64; 2],
    /// Ground truth for objects; revealed by an identify operation.
    #[serde(default)]
    pub contaminated: bool,
    /// Known to the team from mission start.
    #[serde(default)]
    pub known_at_start: bool,
}

impl MapTask {
    pub fn pose(&self) -> Pose {
        Pose::new(self.position[0], self.position[1])
    }
}

/// Rectangular map bounds in meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, p: Pose) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }
}

/// The world map file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldMap {
    pub bounds: Bounds,
    pub tasks: Vec<MapTask>,
    pub decontamination_area: [f64; 2],
    pub start_area: [f64; 2],
}

impl WorldMap {
    pub fn decontamination_pose(&self) -> Pose {
        Pose::new(self.decontamination_area[0], self.decontamination_area[1])
    }

    pub fn start_pose(&self) -> Pose {
        Pose::new(self.start_area[0], self.start_area[1])
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(t.id.clone()) {
                return Err(Error::Scenario(format!("duplicate map task id `{}`", t.id)));
            }
            if !self.bounds.contains(t.pose()) {
                return Err(Error::Scenario(format!("task `{}` outside map bounds", t.id)));
            }
        }
        for p in [self.decontamination_pose(), self.start_pose()] {
            if !self.bounds.contains(p) {
                return Err(Error::Scenario("area outside map bounds".into()));
            }
        }
        Ok(())
    }
}

/// A robot's physical body.
#[derive(Debug, Clone)]
pub struct RobotBody {
    pub id: WorldId,
    pub position: Pose,
    pub speed: f64,
    pub distance_cost_factor: f64,
    pub busy: bool,
    target: Option<Pose>,
}

/// Object lifecycle status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectStatus {
    Unknown,
    Clean,
    Contaminated,
    Decontaminated,
}

impl ObjectStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectStatus::Unknown => "unknown",
            ObjectStatus::Clean => "clean",
            ObjectStatus::Contaminated => "contaminated",
            ObjectStatus::Decontaminated => "decontaminated",
        }
    }

    /// The only legal transitions: unknown→clean/contaminated by identify,
    /// contaminated→decontaminated by decontaminate.
    pub fn can_become(&self, next: ObjectStatus) -> bool {
        matches!(
            (self, next),
            (ObjectStatus::Unknown, ObjectStatus::Clean)
                | (ObjectStatus::Unknown, ObjectStatus::Contaminated)
                | (ObjectStatus::Contaminated, ObjectStatus::Decontaminated)
        )
    }
}

/// One found object in the shared database.
#[derive(Debug, Clone)]
pub struct ObjectRecord {
    pub position: Pose,
    pub home_position: Pose,
    pub status: ObjectStatus,
    pub revealed: bool,
    pub carried_by: Option<WorldId>,
    contaminated_truth: bool,
}

/// One exploration goal.
#[derive(Debug, Clone)]
pub struct GoalRecord {
    pub position: Pose,
    pub revealed: bool,
    pub explored: bool,
}

#[derive(Debug, Clone)]
struct ActiveOp {
    robot: WorldId,
    request: u64,
    op: String,
    task: Option<TaskId>,
    completes_at: SimTime,
    will_succeed: bool,
    radius: Option<f64>,
}

#[derive(Debug, Clone)]
struct ActiveMove {
    request: u64,
    target: Pose,
}

/// The world simulation state.
#[derive(Debug)]
pub struct World {
    pub map: WorldMap,
    pub bodies: BTreeMap<WorldId, RobotBody>,
    pub objects: BTreeMap<TaskId, ObjectRecord>,
    pub goals: BTreeMap<TaskId, GoalRecord>,
    fail_chance: f64,
    rng: ChaCha8Rng,
    ops: BTreeMap<(WorldId, u64), ActiveOp>,
    moves: BTreeMap<WorldId, ActiveMove>,
    /// (recipient, payload) queue flushed onto the bus each step.
    outbox: Vec<(WorldId, Payload)>,
}

impl World {
    pub fn new(map: WorldMap, fail_chance: f64, rng: ChaCha8Rng) -> Self {
        let mut objects = BTreeMap::new();
        let mut goals = BTreeMap::new();
        for t in &map.tasks {
            match t.kind {
                MapTaskKind::Object => {
                    objects.insert(
                        t.id.clone(),
                        ObjectRecord {
                            position: t.pose(),
                            home_position: t.pose(),
                            status: ObjectStatus::Unknown,
                            revealed: t.known_at_start,
                            carried_by: None,
                            contaminated_truth: t.contaminated,
                        },
                    );
                }
                MapTaskKind::ExploreGoal => {
                    goals.insert(
                        t.id.clone(),
                        GoalRecord {
                            position: t.pose(),
                            revealed: t.known_at_start,
                            explored: false,
                        },
                    );
                }
            }
        }
        World {
            map,
            bodies: BTreeMap::new(),
            objects,
            goals,
            fail_chance,
            rng,
            ops: BTreeMap::new(),
            moves: BTreeMap::new(),
            outbox: Vec::new(),
        }
    }

    pub fn spawn_robot(&mut self, id: WorldId, position: Pose, speed: f64, factor: f64) {
        self.bodies.insert(
            id.clone(),
            RobotBody {
                id,
                position,
                speed,
                distance_cost_factor: factor,
                busy: false,
                target: None,
            },
        );
    }

    /// Initial OBJECT_UPDATE payloads for everything known at mission start.
    pub fn initial_updates(&self) -> Vec<Payload> {
        let mut out = Vec::new();
        for (id, g) in &self.goals {
            if g.revealed {
                out.push(goal_update(id, g));
            }
        }
        for (id, o) in &self.objects {
            if o.revealed {
                out.push(object_update(id, o));
            }
        }
        out
    }

    /// Handles one service message addressed to the world endpoint.
    pub fn handle(&mut self, sender: &WorldId, payload: &Payload, now: SimTime) {
        match payload {
            Payload::TaskStart { request, robot, req } => {
                self.start_task(sender, *request, robot, req, now)
            }
            Payload::TaskCancel { request } => self.cancel(sender, *request),
            _ => {}
        }
    }

    fn reply(&mut self, to: &WorldId, request: u64, success: bool, outputs: Vec<(String, Value)>) {
        let position = self.bodies.get(to).map(|b| b.position).unwrap_or(Pose::new(0.0, 0.0));
        self.outbox.push((
            to.clone(),
            Payload::TaskResult { request, success, outputs, position },
        ));
    }

    fn start_task(
        &mut self,
        sender: &WorldId,
        request: u64,
        robot: &WorldId,
        req: &WorldRequest,
        now: SimTime,
    ) {
        if sender != robot || !self.bodies.contains_key(robot) {
            self.reply(sender, request, false, vec![]);
            return;
        }
        if req.op == "move" {
            let Some(target) = req.target else {
                self.reply(sender, request, false, vec![]);
                return;
            };
            if self.moves.contains_key(robot) || self.ops.keys().any(|(r, _)| r == robot) {
                self.reply(sender, request, false, vec![]);
                return;
            }
            let body = self.bodies.get_mut(robot).expect("live body");
            body.busy = true;
            body.target = Some(target);
            self.moves.insert(robot.clone(), ActiveMove { request, target });
            return;
        }
        self.start_operation(request, robot, req, now);
    }

    /// Simulated sensor/manipulation operation: waits a randomized interval
    /// before reporting, with a randomized chance to fail.
    fn start_operation(&mut self, request: u64, robot: &WorldId, req: &WorldRequest, now: SimTime) {
        if self.moves.contains_key(robot) || self.ops.keys().any(|(r, _)| r == robot) {
            self.reply(robot, request, false, vec![]);
            return;
        }
        let position = self.bodies[robot].position;
        // Position preconditions per operation.
        let in_place = match req.op.as_str() {
            "explore" => self
                .goal_of(req)
                .map(|g| g.position.distance(&position) <= ARRIVAL_EPS)
                .unwrap_or(false),
            "identify" | "pickup" => self
                .object_of(req)
                .map(|o| o.position.distance(&position) <= ARRIVAL_EPS)
                .unwrap_or(false),
            "decontaminate" => {
                self.map.decontamination_pose().distance(&position) <= ARRIVAL_EPS
                    && self
                        .object_of(req)
                        .map(|o| o.carried_by.as_ref() == Some(robot))
                        .unwrap_or(false)
            }
            _ => false,
        };
        if !in_place {
            self.reply(robot, request, false, vec![]);
            return;
        }
        let base = req.duration.unwrap_or(1.0).max(0.0);
        // Uniform jitter of ±20 % around the expected duration.
        let duration = if base > 0.0 {
            self.rng.gen_range(0.8 * base..=1.2 * base)
        } else {
            0.0
        };
        let will_succeed =
            self.fail_chance <= 0.0 || self.rng.gen::<f64>() >= self.fail_chance;
        let body = self.bodies.get_mut(robot).expect("live body");
        body.busy = true;
        self.ops.insert(
            (robot.clone(), request),
            ActiveOp {
                robot: robot.clone(),
                request,
                op: req.op.clone(),
                task: req.task.clone(),
                completes_at: now + duration,
                will_succeed,
                radius: req.radius,
            },
        );
    }

    fn goal_of(&self, req: &WorldRequest) -> Option<&GoalRecord> {
        req.task.as_ref().and_then(|t| self.goals.get(t))
    }

    fn object_of(&self, req: &WorldRequest) -> Option<&ObjectRecord> {
        req.task.as_ref().and_then(|t| self.objects.get(t))
    }

    /// Cancels an in-flight request. Interrupted operations leave world
    /// state unchanged; a carried object snaps back to where it was picked
    /// up.
    fn cancel(&mut self, robot: &WorldId, request: u64) {
        if let Some(mv) = self.moves.get(robot) {
            if mv.request == request {
                self.moves.remove(robot);
                if let Some(body) = self.bodies.get_mut(robot) {
                    body.target = None;
                    body.busy = false;
                }
            }
        }
        if self.ops.remove(&(robot.clone(), request)).is_some() {
            if let Some(body) = self.bodies.get_mut(robot) {
                body.busy = false;
            }
        }
        self.release_carried(robot);
    }

    /// Drops everything a robot carries back at its home position.
    pub fn release_carried(&mut self, robot: &WorldId) {
        let mut updates = Vec::new();
        for (id, o) in self.objects.iter_mut() {
            if o.carried_by.as_ref() == Some(robot) {
                o.carried_by = None;
                o.position = o.home_position;
                updates.push(id.clone());
            }
        }
        for id in updates {
            let payload = object_update(&id, &self.objects[&id]);
            self.broadcast_update(payload);
        }
    }

    /// Removes a dead robot's in-flight work without applying any effects.
    pub fn robot_died(&mut self, robot: &WorldId) {
        self.moves.remove(robot);
        let keys: Vec<(WorldId, u64)> =
            self.ops.keys().filter(|(r, _)| r == robot).cloned().collect();
        for k in keys {
            self.ops.remove(&k);
        }
        if let Some(body) = self.bodies.get_mut(robot) {
            body.target = None;
            body.busy = false;
        }
        self.release_carried(robot);
    }

    fn broadcast_update(&mut self, payload: Payload) {
        // Broadcast marker: expanded by flush to all live robots.
        self.outbox.push((WorldId::bus_endpoint(), payload));
    }

    /// Advances motion and completes due operations, then flushes replies
    /// and database updates to the bus.
    pub fn step(&mut self, now_tick: u64, dt: SimTime, bus: &mut Bus) {
        let now = now_tick as SimTime * dt_period(dt);
        self.advance_motion(dt);
        self.complete_moves();
        self.complete_ops(now);
        self.flush(now_tick, bus);
    }

    fn advance_motion(&mut self, dt: SimTime) {
        for body in self.bodies.values_mut() {
            let Some(target) = body.target else { continue };
            let distance = body.position.distance(&target);
            let reach = body.speed * dt;
            if distance <= reach {
                body.position = target;
                body.target = None;
            } else {
                let f = reach / distance;
                body.position = Pose::new(
                    body.position.x + (target.x - body.position.x) * f,
                    body.position.y + (target.y - body.position.y) * f,
                );
            }
            // Carried objects ride along.
            let pos = body.position;
            let carrier = body.id.clone();
            for o in self.objects.values_mut() {
                if o.carried_by.as_ref() == Some(&carrier) {
                    o.position = pos;
                }
            }
        }
    }

    fn complete_moves(&mut self) {
        let arrived: Vec<WorldId> = self
            .moves
            .iter()
            .filter(|(robot, mv)| {
                self.bodies
                    .get(*robot)
                    .map(|b| b.target.is_none() && b.position.distance(&mv.target) <= ARRIVAL_EPS)
                    .unwrap_or(false)
            })
            .map(|(robot, _)| robot.clone())
            .collect();
        for robot in arrived {
            let mv = self.moves.remove(&robot).expect("arrived move");
            if let Some(body) = self.bodies.get_mut(&robot) {
                body.busy = false;
            }
            self.reply(&robot, mv.request, true, vec![]);
        }
    }

    fn complete_ops(&mut self, now: SimTime) {
        let due: Vec<(WorldId, u64)> = self
            .ops
            .iter()
            .filter(|(_, op)| op.completes_at <= now)
            .map(|(k, _)| k.clone())
            .collect();
        for key in due {
            let op = self.ops.remove(&key).expect("due op");
            if let Some(body) = self.bodies.get_mut(&op.robot) {
                body.busy = false;
            }
            if !op.will_succeed {
                self.reply(&op.robot.clone(), op.request, false, vec![]);
                continue;
            }
            self.apply_op_effects(op);
        }
    }

    fn apply_op_effects(&mut self, op: ActiveOp) {
        match op.op.as_str() {
            "explore" => {
                let Some(task) = op.task.clone() else {
                    self.reply(&op.robot, op.request, false, vec![]);
                    return;
                };
                let center = match self.goals.get_mut(&task) {
                    Some(goal) => {
                        goal.explored = true;
                        goal.revealed = true;
                        goal.position
                    }
                    None => {
                        self.reply(&op.robot, op.request, false, vec![]);
                        return;
                    }
                };
                let radius = op.radius.unwrap_or(0.0);
                let mut revealed = 0i64;
                let mut updates = Vec::new();
                for (id, g) in self.goals.iter_mut() {
                    if !g.revealed && g.position.distance(&center) <= radius {
                        g.revealed = true;
                        revealed += 1;
                        updates.push(goal_update(id, g));
                    }
                }
                updates.push(goal_update(&task, &self.goals[&task]));
                for (id, o) in self.objects.iter_mut() {
                    if !o.revealed && o.position.distance(&center) <= radius {
                        o.revealed = true;
                        revealed += 1;
                        updates.push(object_update(id, o));
                    }
                }
                for u in updates {
                    self.broadcast_update(u);
                }
                self.reply(
                    &op.robot,
                    op.request,
                    true,
                    vec![("revealed".to_string(), Value::Int(revealed))],
                );
            }
            "identify" => {
                let Some(task) = op.task.clone() else {
                    self.reply(&op.robot, op.request, false, vec![]);
                    return;
                };
                let status = {
                    let Some(o) = self.objects.get_mut(&task) else {
                        self.reply(&op.robot, op.request, false, vec![]);
                        return;
                    };
                    if o.status == ObjectStatus::Unknown {
                        let next = if o.contaminated_truth {
                            ObjectStatus::Contaminated
                        } else {
                            ObjectStatus::Clean
                        };
                        debug_assert!(o.status.can_become(next));
                        o.status = next;
                    }
                    o.status
                };
                let payload = object_update(&task, &self.objects[&task]);
                self.broadcast_update(payload);
                self.reply(
                    &op.robot,
                    op.request,
                    true,
                    vec![("status".to_string(), Value::Str(status.as_str().into()))],
                );
            }
            "pickup" => {
                let Some(task) = op.task.clone() else {
                    self.reply(&op.robot, op.request, false, vec![]);
                    return;
                };
                let ok = {
                    let Some(o) = self.objects.get_mut(&task) else {
                        self.reply(&op.robot, op.request, false, vec![]);
                        return;
                    };
                    if o.status == ObjectStatus::Contaminated && o.carried_by.is_none() {
                        o.carried_by = Some(op.robot.clone());
                        true
                    } else {
                        false
                    }
                };
                self.reply(&op.robot, op.request, ok, vec![]);
            }
            "decontaminate" => {
                let Some(task) = op.task.clone() else {
                    self.reply(&op.robot, op.request, false, vec![]);
                    return;
                };
                let ok = {
                    let area = self.map.decontamination_pose();
                    let Some(o) = self.objects.get_mut(&task) else {
                        self.reply(&op.robot, op.request, false, vec![]);
                        return;
                    };
                    if o.carried_by.as_ref() == Some(&op.robot)
                        && o.status.can_become(ObjectStatus::Decontaminated)
                    {
                        o.status = ObjectStatus::Decontaminated;
                        o.carried_by = None;
                        o.position = area;
                        true
                    } else {
                        false
                    }
                };
                if ok {
                    let payload = object_update(&task, &self.objects[&task]);
                    self.broadcast_update(payload);
                    self.reply(
                        &op.robot,
                        op.request,
                        true,
                        vec![(
                            "status".to_string(),
                            Value::Str(ObjectStatus::Decontaminated.as_str().into()),
                        )],
                    );
                } else {
                    self.reply(&op.robot, op.request, false, vec![]);
                }
            }
            other => {
                log::warn!("world: unknown operation `{other}`");
                self.reply(&op.robot, op.request, false, vec![]);
            }
        }
    }

    fn flush(&mut self, now_tick: u64, bus: &mut Bus) {
        let world_id = WorldId::world_endpoint();
        for (recipient, payload) in std::mem::take(&mut self.outbox) {
            if recipient == WorldId::bus_endpoint() {
                bus.broadcast(now_tick, &world_id, payload);
            } else {
                bus.send(now_tick, &world_id, &recipient, payload);
            }
        }
    }

    /// True when every contaminated object (ground truth) has been
    /// decontaminated: the mission success condition.
    pub fn all_contaminated_decontaminated(&self) -> bool {
        self.objects
            .values()
            .filter(|o| o.contaminated_truth)
            .all(|o| o.status == ObjectStatus::Decontaminated)
    }

    pub fn body(&self, id: &WorldId) -> Option<&RobotBody> {
        self.bodies.get(id)
    }
}

fn dt_period(dt: SimTime) -> SimTime {
    dt
}

fn goal_update(id: &TaskId, g: &GoalRecord) -> Payload {
    Payload::ObjectUpdate {
        task: id.clone(),
        task_kind: "explore_goal".to_string(),
        position: g.position,
        status: if g.explored { "explored" } else { "pending" }.to_string(),
    }
}

fn object_update(id: &TaskId, o: &ObjectRecord) -> Payload {
    Payload::ObjectUpdate {
        task: id.clone(),
        task_kind: "object".to_string(),
        position: o.position,
        status: o.status.as_str().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn map() -> WorldMap {
        WorldMap {
            bounds: Bounds { min: [0.0, 0.0], max: [100.0, 100.0] },
            tasks: vec![
                MapTask {
                    id: TaskId::new("g1"),
                    kind: MapTaskKind::ExploreGoal,
                    position: [10.0, 0.0],
                    contaminated: false,
                    known_at_start: true,
                },
                MapTask {
                    id: TaskId::new("o1"),
                    kind: MapTaskKind::Object,
                    position: [30.0, 0.0],
                    contaminated: true,
                    known_at_start: false,
                },
            ],
            decontamination_area: [0.0, 5.0],
            start_area: [0.0, 0.0],
        }
    }

    fn world(fail_chance: f64) -> World {
        let mut w = World::new(map(), fail_chance, ChaCha8Rng::seed_from_u64(42));
        w.spawn_robot(WorldId::new("husky"), Pose::new(0.0, 0.0), 1.0, 2.0);
        w
    }

    fn req(op: &str, task: Option<&str>, target: Option<Pose>, duration: f64, radius: Option<f64>) -> WorldRequest {
        WorldRequest {
            op: op.into(),
            task: task.map(TaskId::new),
            target,
            duration: Some(duration),
            radius,
        }
    }

    fn drive(w: &mut World, bus: &mut Bus, ticks: u64) -> Vec<Payload> {
        let mut collected = Vec::new();
        for t in 0..ticks {
            w.step(t, 0.5, bus);
            for m in bus.deliver(t + 1) {
                collected.push(m.payload);
            }
        }
        collected
    }

    #[test]
    fn straight_line_motion_arrives_on_time() {
        // speed 1 m/s over 10 m arrives after 10 s
        let mut w = world(0.0);
        let mut bus = Bus::new(0.5);
        bus.apply_event(0, crate::bus::MembershipEvent::Join, &WorldId::new("husky")).unwrap();
        bus.deliver(1);
        let husky = WorldId::new("husky");
        w.handle(
            &husky,
            &Payload::TaskStart {
                request: 1,
                robot: husky.clone(),
                req: req("move", None, Some(Pose::new(10.0, 0.0)), 0.0, None),
            },
            0.0,
        );
        let mut arrival_tick = None;
        for t in 0..40u64 {
            w.step(t, 0.5, &mut bus);
            for m in bus.deliver(t + 1) {
                if let Payload::TaskResult { success, position, .. } = m.payload {
                    assert!(success);
                    assert_eq!(position, Pose::new(10.0, 0.0));
                    arrival_tick = Some(t);
                }
            }
            if arrival_tick.is_some() {
                break;
            }
        }
        // 10 m at 1 m/s with 0.5 s steps: 20 steps.
        assert_eq!(arrival_tick, Some(19));
    }

    #[test]
    fn oversized_step_clamps_at_target() {
        let mut w = world(0.0);
        let husky = WorldId::new("husky");
        w.bodies.get_mut(&husky).unwrap().target = Some(Pose::new(1.0, 0.0));
        w.advance_motion(100.0);
        assert_eq!(w.bodies[&husky].position, Pose::new(1.0, 0.0));
    }

    #[test]
    fn zero_distance_move_is_immediate() {
        let mut w = world(0.0);
        let mut bus = Bus::new(0.5);
        bus.apply_event(0, crate::bus::MembershipEvent::Join, &WorldId::new("husky")).unwrap();
        bus.deliver(1);
        let husky = WorldId::new("husky");
        w.handle(
            &husky,
            &Payload::TaskStart {
                request: 1,
                robot: husky.clone(),
                req: req("move", None, Some(Pose::new(0.0, 0.0)), 0.0, None),
            },
            0.0,
        );
        let msgs = drive(&mut w, &mut bus, 2);
        assert!(msgs.iter().any(|p| matches!(p, Payload::TaskResult { success: true, .. })));
    }

    #[test]
    fn wrong_position_fails_immediately() {
        let mut w = world(0.0);
        let husky = WorldId::new("husky");
        w.handle(
            &husky,
            &Payload::TaskStart {
                request: 7,
                robot: husky.clone(),
                req: req("explore", Some("g1"), None, 10.0, Some(15.0)),
            },
            0.0,
        );
        assert!(matches!(
            w.outbox.last(),
            Some((_, Payload::TaskResult { success: false, .. }))
        ));
    }

    #[test]
    fn duration_jitter_stays_within_bounds() {
        // 1000 seeded samples of a 10 s operation all complete in [8, 12] s.
        let mut w = world(0.0);
        let husky = WorldId::new("husky");
        w.bodies.get_mut(&husky).unwrap().position = Pose::new(10.0, 0.0);
        for i in 0..1000u64 {
            w.handle(
                &husky,
                &Payload::TaskStart {
                    request: i,
                    robot: husky.clone(),
                    req: req("explore", Some("g1"), None, 10.0, Some(15.0)),
                },
                0.0,
            );
            let op = w.ops.get(&(husky.clone(), i)).expect("op registered");
            assert!(op.completes_at >= 8.0 && op.completes_at <= 12.0, "{}", op.completes_at);
            w.ops.clear();
            w.bodies.get_mut(&husky).unwrap().busy = false;
        }
    }

    #[test]
    fn zero_fail_chance_always_succeeds() {
        let mut w = world(0.0);
        let husky = WorldId::new("husky");
        w.bodies.get_mut(&husky).unwrap().position = Pose::new(10.0, 0.0);
        for i in 0..200u64 {
            w.handle(
                &husky,
                &Payload::TaskStart {
                    request: i,
                    robot: husky.clone(),
                    req: req("explore", Some("g1"), None, 10.0, Some(15.0)),
                },
                0.0,
            );
            assert!(w.ops[&(husky.clone(), i)].will_succeed);
            w.ops.clear();
            w.bodies.get_mut(&husky).unwrap().busy = false;
        }
    }

    #[test]
    fn explore_radius_governs_reveals() {
        // Object 20 m from the goal: a 30 m radius reveals it, 15 m does not.
        for (radius, expect_revealed) in [(15.0, false), (30.0, true)] {
            let mut map = map();
            map.tasks[1].position = [30.0, 0.0]; // o1 at 20 m from g1
            let mut w = World::new(map, 0.0, ChaCha8Rng::seed_from_u64(1));
            w.spawn_robot(WorldId::new("r"), Pose::new(10.0, 0.0), 1.0, 1.0);
            let r = WorldId::new("r");
            w.handle(
                &r,
                &Payload::TaskStart {
                    request: 1,
                    robot: r.clone(),
                    req: req("explore", Some("g1"), None, 0.0, Some(radius)),
                },
                0.0,
            );
            w.complete_ops(100.0);
            assert_eq!(w.objects[&TaskId::new("o1")].revealed, expect_revealed, "radius {radius}");
        }
    }

    #[test]
    fn object_status_machine_rejects_illegal_transitions() {
        assert!(ObjectStatus::Unknown.can_become(ObjectStatus::Clean));
        assert!(ObjectStatus::Unknown.can_become(ObjectStatus::Contaminated));
        assert!(ObjectStatus::Contaminated.can_become(ObjectStatus::Decontaminated));
        assert!(!ObjectStatus::Clean.can_become(ObjectStatus::Decontaminated));
        assert!(!ObjectStatus::Decontaminated.can_become(ObjectStatus::Contaminated));
        assert!(!ObjectStatus::Unknown.can_become(ObjectStatus::Decontaminated));
    }

    #[test]
    fn interrupted_pickup_restores_object_position() {
        let mut w = world(0.0);
        let husky = WorldId::new("husky");
        let o1 = TaskId::new("o1");
        w.objects.get_mut(&o1).unwrap().status = ObjectStatus::Contaminated;
        w.objects.get_mut(&o1).unwrap().carried_by = Some(husky.clone());
        w.bodies.get_mut(&husky).unwrap().position = Pose::new(15.0, 3.0);
        w.advance_motion(0.0);
        w.robot_died(&husky);
        let o = &w.objects[&o1];
        assert_eq!(o.position, o.home_position);
        assert!(o.carried_by.is_none());
        assert_eq!(o.status, ObjectStatus::Contaminated);
    }

    #[test]
    fn deterministic_replay_same_seed() {
        let run = |seed: u64| -> Vec<f64> {
            let mut w = World::new(map(), 0.2, ChaCha8Rng::seed_from_u64(seed));
            w.spawn_robot(WorldId::new("r"), Pose::new(10.0, 0.0), 1.0, 1.0);
            let r = WorldId::new("r");
            let mut times = Vec::new();
            for i in 0..50u64 {
                w.handle(
                    &r,
                    &Payload::TaskStart {
                        request: i,
                        robot: r.clone(),
                        req: req("explore", Some("g1"), None, 10.0, Some(5.0)),
                    },
                    0.0,
                );
                if let Some(op) = w.ops.get(&(r.clone(), i)) {
                    times.push(op.completes_at + if op.will_succeed { 0.5 } else { 0.0 });
                }
                w.ops.clear();
                w.bodies.get_mut(&r).unwrap().busy = false;
            }
            times
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }
}
