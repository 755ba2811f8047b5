//! Decentralized assignment: open single-item auctions with timed bid
//! windows, greedy bidders, deterministic awards, and re-auction policy.
//!
//! Any robot acts as auctioneer for its own unassigned capabilities. A
//! round announces the interface plus the candidate tasks; every robot with
//! a feasible implementation bids its cheapest (implementation × task)
//! combination from its predicted position. The lowest cost wins, ties
//! broken by robot id then implementation id.

use crate::bt::cost::{compute_cost, CostContext, TaskCandidate, UtilityCost};
use crate::bus::{AnnounceInfo, Payload, SimTime};
use crate::capability::implementation::TeamView;
use crate::ids::{AuctionId, NodeAddr, TaskId, WorldId};
use crate::repository::Repository;
use std::collections::{BTreeMap, BTreeSet};

/// One bid in one auction round.
#[derive(Debug, Clone, PartialEq)]
pub struct Bid {
    pub auction: AuctionId,
    pub bidder: WorldId,
    pub implementation: String,
    pub task: TaskId,
    pub cost: UtilityCost,
    pub timestamp: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundStatus {
    Open,
    Awarded,
    Void,
}

/// An auction round held by the auctioneer.
#[derive(Debug, Clone)]
pub struct AuctionRound {
    pub info: AnnounceInfo,
    /// Capability node this round assigns.
    pub node: NodeAddr,
    /// Latest bid per bidder; re-bids within the window replace.
    pub bids: BTreeMap<WorldId, Bid>,
    pub status: RoundStatus,
    pub award: Option<Bid>,
}

/// Outcome of a closed round, routed back to the capability node.
#[derive(Debug, Clone)]
pub enum RoundOutcome {
    Awarded { auction: AuctionId, node: NodeAddr, info: AnnounceInfo, winner: Bid },
    Void { auction: AuctionId, node: NodeAddr, info: AnnounceInfo },
}

/// Auctioneer-side state: this robot's own rounds.
#[derive(Debug, Default)]
pub struct AuctionHouse {
    pub me: WorldId,
    seq: u64,
    open: BTreeMap<AuctionId, AuctionRound>,
    /// Closed rounds kept for the no-double-award guarantee.
    finished: BTreeSet<AuctionId>,
}

impl AuctionHouse {
    pub fn new(me: WorldId) -> Self {
        AuctionHouse { me, ..Default::default() }
    }

    /// Opens a round and returns its announce payload for broadcast.
    #[allow(clippy::too_many_arguments)]
    pub fn open_auction(
        &mut self,
        node: NodeAddr,
        interface: &str,
        capability_world: WorldId,
        required_local: bool,
        candidates: Vec<TaskCandidate>,
        now: SimTime,
        bid_window: SimTime,
        challenge: Option<(WorldId, f64)>,
    ) -> (AuctionId, Payload) {
        self.seq += 1;
        let auction = AuctionId::scoped(&self.me, self.seq);
        let info = AnnounceInfo {
            auction: auction.clone(),
            interface: interface.to_string(),
            auctioneer: self.me.clone(),
            capability_world,
            required_local,
            candidates,
            open: now,
            close: now + bid_window,
            challenge,
        };
        self.open.insert(
            auction.clone(),
            AuctionRound {
                info: info.clone(),
                node,
                bids: BTreeMap::new(),
                status: RoundStatus::Open,
                award: None,
            },
        );
        (auction, Payload::AuctionAnnounce { info })
    }

    /// Whether an open round exists for the given capability node.
    pub fn open_round_for(&self, node: &NodeAddr) -> Option<&AuctionId> {
        self.open
            .iter()
            .find(|(_, r)| &r.node == node && r.status == RoundStatus::Open)
            .map(|(id, _)| id)
    }

    pub fn round(&self, id: &AuctionId) -> Option<&AuctionRound> {
        self.open.get(id)
    }

    /// Accepts a bid into an open round. Infeasible or late bids are
    /// dropped; a re-bid from the same bidder replaces the earlier one.
    pub fn ingest_bid(&mut self, bid: Bid, now: SimTime) {
        let Some(round) = self.open.get_mut(&bid.auction) else {
            return;
        };
        if round.status != RoundStatus::Open || now > round.info.close || !bid.cost.feasible {
            return;
        }
        round.bids.insert(bid.bidder.clone(), bid);
    }

    /// Closes every round whose window has elapsed. The award is the
    /// minimum cost bid, ties broken by robot id then implementation id.
    pub fn close_due(&mut self, now: SimTime) -> Vec<RoundOutcome> {
        let due: Vec<AuctionId> = self
            .open
            .iter()
            .filter(|(_, r)| r.status == RoundStatus::Open && now >= r.info.close)
            .map(|(id, _)| id.clone())
            .collect();
        let mut outcomes = Vec::new();
        for id in due {
            let mut round = self.open.remove(&id).expect("due round exists");
            debug_assert!(!self.finished.contains(&id), "double close of {id}");
            self.finished.insert(id.clone());
            let winner = select_winner(round.bids.values());
            match winner {
                Some(best) => {
                    round.status = RoundStatus::Awarded;
                    round.award = Some(best.clone());
                    outcomes.push(RoundOutcome::Awarded {
                        auction: id,
                        node: round.node.clone(),
                        info: round.info.clone(),
                        winner: best,
                    });
                }
                None => {
                    round.status = RoundStatus::Void;
                    outcomes.push(RoundOutcome::Void {
                        auction: id,
                        node: round.node.clone(),
                        info: round.info.clone(),
                    });
                }
            }
        }
        outcomes
    }

    /// Voids an open round (e.g. the capability was reset before close).
    pub fn cancel_round(&mut self, id: &AuctionId) {
        self.open.remove(id);
        self.finished.insert(id.clone());
    }

    /// Re-announce payloads for still-open rounds, used when membership
    /// changes so late joiners can bid.
    pub fn reannounce_open(&self) -> Vec<Payload> {
        self.open
            .values()
            .filter(|r| r.status == RoundStatus::Open)
            .map(|r| Payload::AuctionAnnounce { info: r.info.clone() })
            .collect()
    }
}

/// Deterministic argmin over bids: cost, then robot id, then
/// implementation id.
pub fn select_winner<'a>(bids: impl Iterator<Item = &'a Bid>) -> Option<Bid> {
    bids.filter(|b| b.cost.feasible)
        .min_by(|a, b| {
            a.cost
                .cost
                .total_cmp(&b.cost.cost)
                .then_with(|| a.bidder.cmp(&b.bidder))
                .then_with(|| a.implementation.cmp(&b.implementation))
        })
        .cloned()
}

/// Greedy bidder: the best (implementation × candidate) combination this
/// robot can offer for an announced round, or None to abstain.
///
/// Costs are computed from the robot's predicted position after its current
/// commitments.
pub fn build_bid(
    info: &AnnounceInfo,
    repo: &Repository,
    live: &BTreeSet<WorldId>,
    team: &TeamView,
    cost_ctx: &CostContext,
    now: SimTime,
) -> Option<Bid> {
    let me = &repo.me;
    let pre_ctx = repo.precondition_context(live);
    let mut best: Option<Bid> = None;
    for imp in repo.local_implementations(&info.interface) {
        if !crate::capability::implementation::executable(
            &info.capability_world,
            info.required_local,
            imp,
            team,
        ) {
            continue;
        }
        if !crate::capability::implementation::validate_preconditions(imp, &pre_ctx) {
            continue;
        }
        for candidate in &info.candidates {
            let cost = compute_cost(cost_ctx, candidate, Some(imp.expected_duration));
            if !cost.feasible {
                continue;
            }
            let bid = Bid {
                auction: info.auction.clone(),
                bidder: me.clone(),
                implementation: imp.id.clone(),
                task: candidate.task.clone(),
                cost,
                timestamp: now,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    bid.cost
                        .cost
                        .total_cmp(&b.cost.cost)
                        .then_with(|| bid.implementation.cmp(&b.implementation))
                        .then_with(|| bid.task.cmp(&b.task))
                        .is_lt()
                }
            };
            if better {
                best = Some(bid);
            }
        }
    }
    best
}

/// Re-auction policy: when to reopen assignments.
#[derive(Debug, Clone, Copy)]
pub struct ReauctionPolicy {
    pub interval: SimTime,
    pub hysteresis_factor: f64,
}

impl ReauctionPolicy {
    /// A challenge is due when membership changed or the periodic interval
    /// elapsed since the last challenge.
    pub fn challenge_due(
        &self,
        membership_changed: bool,
        last_challenge: SimTime,
        now: SimTime,
    ) -> bool {
        membership_changed || now - last_challenge >= self.interval
    }

    /// A running assignment is preempted only when the challenger undercuts
    /// the remaining cost by the hysteresis margin.
    pub fn preempts(&self, challenger_cost: f64, remaining_cost: f64) -> bool {
        challenger_cost <= self.hysteresis_factor * remaining_cost
    }
}

/// Remaining cost of a running assignment: the award cost decays linearly
/// with elapsed execution time (cost units track seconds closely because
/// durations dominate).
pub fn remaining_cost(award_cost: f64, started: SimTime, now: SimTime) -> f64 {
    (award_cost - (now - started)).max(0.0)
}
