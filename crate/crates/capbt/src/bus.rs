//! Deterministic simulated network and membership layer.
//!
//! Messages are value copies delivered after a fixed latency (one tick by
//! default), FIFO per sender-recipient pair, never duplicated, never
//! delivered to dead robots. Membership is bus-maintained ground truth:
//! scripted join/leave/fail/recover events update the live set and are
//! announced with a MEMBER_CHANGE broadcast.

use crate::bt::env::WorldRequest;
use crate::bt::state::NodeState;
use crate::capability::interface::CapabilityInterface;
use crate::error::{Error, Result};
use crate::ids::{AuctionId, ExecId, TaskId, WorldId};
use crate::value::{Pose, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Simulated seconds.
pub type SimTime = f64;

/// A replicated repository entry, shipped by announcements and pull
/// replies. Implementation adverts carry metadata only; bodies stay with
/// the owner and travel exclusively inside execution requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepoEntry {
    Interface {
        interface: CapabilityInterface,
    },
    ImplAdvert {
        interface: String,
        implementation: String,
        available: bool,
        preconditions: Vec<crate::capability::implementation::Precondition>,
        expected_duration: f64,
    },
    Completed {
        interface: String,
    },
}

/// Scripted membership event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipEvent {
    Join,
    Leave,
    Fail,
    Recover,
}

/// One auction round as announced on the bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnounceInfo {
    pub auction: AuctionId,
    pub interface: String,
    pub auctioneer: WorldId,
    /// World the capability node lives in; local execution needs no slot.
    pub capability_world: WorldId,
    pub required_local: bool,
    pub candidates: Vec<crate::bt::cost::TaskCandidate>,
    pub open: SimTime,
    pub close: SimTime,
    /// Set when this round challenges a running assignment: the current
    /// executor and the remaining cost of its assignment.
    pub challenge: Option<(WorldId, f64)>,
}

/// Message payloads. The wire kind string is derived from the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "type")]
pub enum Payload {
    // repository synchronization
    InterfaceAnnounce { origin: WorldId, version: u64, entry: RepoEntry },
    ImplAdvert { origin: WorldId, version: u64, entry: RepoEntry },
    Digest { versions: BTreeMap<WorldId, u64> },
    PullRequest { origins: Vec<WorldId> },
    PullReply { origin: WorldId, version: u64, entries: Vec<RepoEntry> },
    // auction traffic
    AuctionAnnounce { info: AnnounceInfo },
    Bid {
        auction: AuctionId,
        bidder: WorldId,
        implementation: String,
        task: TaskId,
        cost: f64,
        timestamp: SimTime,
    },
    Award {
        auction: AuctionId,
        interface: String,
        winner: WorldId,
        implementation: String,
        task: TaskId,
        cost: f64,
    },
    AuctionVoid { auction: AuctionId },
    // execution management
    ExecRequest {
        exec: ExecId,
        interface: String,
        implementation: String,
        task: Option<TaskId>,
        inputs: Vec<(String, Value)>,
    },
    ExecAccept { exec: ExecId },
    ExecReject { exec: ExecId, reason: String },
    ExecTickSync {
        exec: ExecId,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        inputs: Option<Vec<(String, Value)>>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        outputs: Option<Vec<(String, Value)>>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        root_state: Option<NodeState>,
    },
    Heartbeat {
        exec: ExecId,
        from_executor: bool,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        root_state: Option<NodeState>,
        note: String,
    },
    ExecDone { exec: ExecId, root_state: NodeState, outputs: Vec<(String, Value)> },
    ExecAbort { exec: ExecId },
    // membership
    MemberChange {
        epoch: u64,
        event: MembershipEvent,
        subject: WorldId,
        live: BTreeSet<WorldId>,
    },
    // world services
    TaskStart { request: u64, robot: WorldId, req: WorldRequest },
    TaskResult { request: u64, success: bool, outputs: Vec<(String, Value)>, position: Pose },
    TaskCancel { request: u64 },
    ObjectUpdate { task: TaskId, task_kind: String, position: Pose, status: String },
}

impl Payload {
    /// Wire kind string, used in logs.
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::InterfaceAnnounce { .. } => "INTERFACE_ANNOUNCE",
            Payload::ImplAdvert { .. } => "IMPL_ADVERT",
            Payload::Digest { .. } => "DIGEST",
            Payload::PullRequest { .. } => "PULL_REQUEST",
            Payload::PullReply { .. } => "PULL_REPLY",
            Payload::AuctionAnnounce { .. } => "AUCTION_ANNOUNCE",
            Payload::Bid { .. } => "BID",
            Payload::Award { .. } => "AWARD",
            Payload::AuctionVoid { .. } => "AUCTION_VOID",
            Payload::ExecRequest { .. } => "EXEC_REQUEST",
            Payload::ExecAccept { .. } => "EXEC_ACCEPT",
            Payload::ExecReject { .. } => "EXEC_REJECT",
            Payload::ExecTickSync { .. } => "EXEC_TICK_SYNC",
            Payload::Heartbeat { .. } => "HEARTBEAT",
            Payload::ExecDone { .. } => "EXEC_DONE",
            Payload::ExecAbort { .. } => "EXEC_ABORT",
            Payload::MemberChange { .. } => "MEMBER_CHANGE",
            Payload::TaskStart { .. } => "TASK_START",
            Payload::TaskResult { .. } => "TASK_RESULT",
            Payload::TaskCancel { .. } => "TASK_CANCEL",
            Payload::ObjectUpdate { .. } => "OBJECT_UPDATE",
        }
    }
}

/// The only inter-robot communication unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamMessage {
    pub kind: String,
    pub sender: WorldId,
    pub recipient: WorldId,
    pub payload: Payload,
    pub send_time: SimTime,
    pub deliver_time: SimTime,
}

/// Current team membership.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub live: BTreeSet<WorldId>,
    pub epoch: u64,
}

impl Membership {
    pub fn is_live(&self, id: &WorldId) -> bool {
        self.live.contains(id)
    }

    /// Live robots from one robot's point of view: the team minus itself.
    pub fn nearby(&self, me: &WorldId) -> BTreeSet<WorldId> {
        self.live.iter().filter(|w| *w != me).cloned().collect()
    }
}

#[derive(Debug, Clone)]
struct Queued {
    deliver_tick: u64,
    seq: u64,
    msg: TeamMessage,
}

/// The simulated bus: the single synchronization point of the whole
/// simulation.
#[derive(Debug)]
pub struct Bus {
    pub membership: Membership,
    latency_ticks: u64,
    tick_period: SimTime,
    queue: VecDeque<Queued>,
    seq: u64,
    /// Messages dropped because the sender or recipient was dead.
    pub dropped: Vec<TeamMessage>,
}

impl Bus {
    pub fn new(tick_period: SimTime) -> Self {
        Bus {
            membership: Membership::default(),
            latency_ticks: 1,
            tick_period,
            queue: VecDeque::new(),
            seq: 0,
            dropped: Vec::new(),
        }
    }

    fn endpoint_reachable(&self, id: &WorldId) -> bool {
        !id.is_robot() || self.membership.is_live(id)
    }

    /// Queues a unicast message. Messages from dead robots are dropped and
    /// logged.
    pub fn send(&mut self, now_tick: u64, sender: &WorldId, recipient: &WorldId, payload: Payload) {
        let send_time = now_tick as SimTime * self.tick_period;
        let deliver_tick = now_tick + self.latency_ticks;
        let msg = TeamMessage {
            kind: payload.kind().to_string(),
            sender: sender.clone(),
            recipient: recipient.clone(),
            payload,
            send_time,
            deliver_time: deliver_tick as SimTime * self.tick_period,
        };
        if !self.endpoint_reachable(sender) {
            log::debug!("bus: dropping message from dead sender {sender}: {}", msg.kind);
            self.dropped.push(msg);
            return;
        }
        self.seq += 1;
        self.queue.push_back(Queued { deliver_tick, seq: self.seq, msg });
    }

    /// Broadcast: unicast to every live member except the sender.
    pub fn broadcast(&mut self, now_tick: u64, sender: &WorldId, payload: Payload) {
        let recipients: Vec<WorldId> = self
            .membership
            .live
            .iter()
            .filter(|w| *w != sender)
            .cloned()
            .collect();
        for r in recipients {
            self.send(now_tick, sender, &r, payload.clone());
        }
    }

    /// Pops every message due at or before `now_tick`, in FIFO order,
    /// dropping those whose recipient died in flight.
    pub fn deliver(&mut self, now_tick: u64) -> Vec<TeamMessage> {
        let mut due: Vec<Queued> = Vec::new();
        let mut rest: VecDeque<Queued> = VecDeque::new();
        while let Some(q) = self.queue.pop_front() {
            if q.deliver_tick <= now_tick {
                due.push(q);
            } else {
                rest.push_back(q);
            }
        }
        self.queue = rest;
        due.sort_by_key(|q| (q.deliver_tick, q.seq));
        let mut out = Vec::new();
        for q in due {
            if self.endpoint_reachable(&q.msg.recipient) {
                out.push(q.msg);
            } else {
                log::debug!(
                    "bus: dropping message to dead recipient {}: {}",
                    q.msg.recipient,
                    q.msg.kind
                );
                self.dropped.push(q.msg);
            }
        }
        out
    }

    /// Applies a scripted membership event, announcing the change to every
    /// live member plus the subject of a join.
    pub fn apply_event(
        &mut self,
        now_tick: u64,
        event: MembershipEvent,
        subject: &WorldId,
    ) -> Result<Membership> {
        match event {
            MembershipEvent::Join | MembershipEvent::Recover => {
                if self.membership.is_live(subject) {
                    return Err(Error::Scenario(format!(
                        "duplicate join of live robot `{subject}`"
                    )));
                }
                self.membership.live.insert(subject.clone());
            }
            MembershipEvent::Leave | MembershipEvent::Fail => {
                if !self.membership.live.remove(subject) {
                    return Err(Error::Scenario(format!(
                        "leave/fail of non-member `{subject}`"
                    )));
                }
                // Fail means no farewell: anything still in flight toward the
                // subject is dropped at delivery by the liveness check.
            }
        }
        self.membership.epoch += 1;
        let payload = Payload::MemberChange {
            epoch: self.membership.epoch,
            event,
            subject: subject.clone(),
            live: self.membership.live.clone(),
        };
        let bus_id = WorldId::bus_endpoint();
        let recipients: Vec<WorldId> = self.membership.live.iter().cloned().collect();
        for r in recipients {
            self.send(now_tick, &bus_id, &r, payload.clone());
        }
        Ok(self.membership.clone())
    }

    pub fn pending_len(&self) -> usize {
        self.queue.len()
    }
}
