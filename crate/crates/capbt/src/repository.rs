//! Distributed registry of capability interfaces and implementations.
//!
//! Interfaces (and implementation *existence*, never bodies) replicate
//! team-wide through announcements plus digest-based anti-entropy: every
//! robot periodically broadcasts its known per-origin versions; receivers
//! pull origins they are missing and push their own newer state. A joining
//! robot converges to the team view within two bus rounds.

use crate::bus::{Payload, RepoEntry};
use crate::capability::implementation::{
    executable, validate_preconditions, CapabilityImplementation, Precondition,
    PreconditionContext, TeamView,
};
use crate::capability::interface::{CapabilityInterface, InterfaceCatalog};
use crate::error::{Error, Result};
use crate::ids::WorldId;
use std::collections::{BTreeMap, BTreeSet};

/// Replicated per-origin repository state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OriginState {
    pub version: u64,
    pub interfaces: BTreeMap<String, CapabilityInterface>,
    /// (interface, implementation id) → advert metadata.
    pub adverts: BTreeMap<(String, String), AdvertMeta>,
    /// Interfaces this origin completed successfully.
    pub completed: BTreeSet<String>,
}

/// Advertised implementation metadata; the body stays with the owner.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvertMeta {
    pub available: bool,
    pub preconditions: Vec<Precondition>,
    pub expected_duration: f64,
}

/// One robot's view of the team repository.
#[derive(Debug, Clone, Default)]
pub struct Repository {
    pub me: WorldId,
    store: BTreeMap<WorldId, OriginState>,
    /// Implementation bodies owned by this robot, by interface name.
    local: BTreeMap<String, Vec<CapabilityImplementation>>,
    /// Team-level warnings (e.g. conflicting interface signatures).
    pub warnings: Vec<String>,
}

/// One row of a `query_executable` answer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutableEntry {
    pub robot: WorldId,
    pub implementation: String,
    pub feasible: bool,
}

impl Repository {
    pub fn new(me: WorldId) -> Self {
        Repository { me, ..Default::default() }
    }

    fn my_state(&mut self) -> &mut OriginState {
        let me = self.me.clone();
        self.store.entry(me).or_default()
    }

    /// Known versions per origin, the digest content.
    pub fn versions(&self) -> BTreeMap<WorldId, u64> {
        self.store.iter().map(|(o, s)| (o.clone(), s.version)).collect()
    }

    /// The merged team-wide interface map.
    pub fn interfaces(&self) -> InterfaceCatalog {
        let mut merged = InterfaceCatalog::new();
        for state in self.store.values() {
            for (name, ci) in &state.interfaces {
                match merged.get(name) {
                    None => {
                        merged.insert(name.clone(), ci.clone());
                    }
                    Some(existing) if existing.same_signature(ci) => {}
                    Some(_) => {
                        // Conflicting duplicate; first one wins, surfaced as
                        // a warning during ingestion.
                    }
                }
            }
        }
        merged
    }

    pub fn interface(&self, name: &str) -> Option<CapabilityInterface> {
        self.interfaces().get(name).cloned()
    }

    pub fn local_implementations(&self, interface: &str) -> &[CapabilityImplementation] {
        self.local.get(interface).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn local_implementation_by_id(&self, id: &str) -> Option<&CapabilityImplementation> {
        self.local.values().flatten().find(|i| i.id == id)
    }

    /// Registers an interface locally and returns the announce payload to
    /// broadcast. Duplicate names with a different signature are rejected.
    pub fn register_interface(&mut self, ci: CapabilityInterface) -> Result<Payload> {
        ci.validate()?;
        if let Some(existing) = self.interfaces().get(&ci.name) {
            if !existing.same_signature(&ci) {
                return Err(Error::Repository(format!(
                    "interface `{}` already registered with a different signature",
                    ci.name
                )));
            }
        }
        let me = self.me.clone();
        let state = self.my_state();
        state.version += 1;
        state.interfaces.insert(ci.name.clone(), ci.clone());
        Ok(Payload::InterfaceAnnounce {
            origin: me,
            version: self.store[&self.me].version,
            entry: RepoEntry::Interface { interface: ci },
        })
    }

    /// Removes an interface; refused while local implementations still
    /// reference it.
    pub fn remove_interface(&mut self, name: &str) -> Result<Payload> {
        if self.local.get(name).map(|v| !v.is_empty()).unwrap_or(false) {
            return Err(Error::Repository(format!(
                "interface `{name}` still has local implementations"
            )));
        }
        let me = self.me.clone();
        let state = self.my_state();
        if state.interfaces.remove(name).is_none() {
            return Err(Error::Repository(format!("interface `{name}` not registered here")));
        }
        state.version += 1;
        let version = state.version;
        let entries = full_entries(state);
        Ok(Payload::PullReply { origin: me, version, entries })
    }

    /// Stores an implementation body locally and returns the existence
    /// advert to broadcast.
    pub fn register_implementation(&mut self, imp: CapabilityImplementation) -> Result<Payload> {
        let catalog = self.interfaces();
        if !catalog.contains_key(&imp.interface) {
            return Err(Error::Repository(format!(
                "implementation `{}` references unknown interface `{}`",
                imp.id, imp.interface
            )));
        }
        imp.validate(&catalog)?;
        if imp.owner != self.me {
            return Err(Error::Repository(format!(
                "implementation `{}` is owned by `{}`, not `{}`",
                imp.id, imp.owner, self.me
            )));
        }
        let me = self.me.clone();
        let entry = RepoEntry::ImplAdvert {
            interface: imp.interface.clone(),
            implementation: imp.id.clone(),
            available: true,
            preconditions: imp.preconditions.clone(),
            expected_duration: imp.expected_duration,
        };
        let meta = AdvertMeta {
            available: true,
            preconditions: imp.preconditions.clone(),
            expected_duration: imp.expected_duration,
        };
        let key = (imp.interface.clone(), imp.id.clone());
        self.local.entry(imp.interface.clone()).or_default().push(imp);
        let state = self.my_state();
        state.version += 1;
        state.adverts.insert(key, meta);
        Ok(Payload::ImplAdvert { origin: me, version: self.store[&self.me].version, entry })
    }

    /// Drops a local implementation; future queries exclude it.
    pub fn remove_implementation(&mut self, id: &str) -> Result<Payload> {
        let mut removed: Option<CapabilityImplementation> = None;
        for impls in self.local.values_mut() {
            if let Some(pos) = impls.iter().position(|i| i.id == id) {
                removed = Some(impls.remove(pos));
                break;
            }
        }
        let Some(imp) = removed else {
            return Err(Error::Repository(format!("no local implementation `{id}`")));
        };
        let me = self.me.clone();
        let state = self.my_state();
        state.version += 1;
        if let Some(meta) = state.adverts.get_mut(&(imp.interface.clone(), imp.id.clone())) {
            meta.available = false;
        }
        Ok(Payload::ImplAdvert {
            origin: me,
            version: self.store[&self.me].version,
            entry: RepoEntry::ImplAdvert {
                interface: imp.interface,
                implementation: imp.id,
                available: false,
                preconditions: Vec::new(),
                expected_duration: 0.0,
            },
        })
    }

    /// Records that this robot completed an interface successfully and
    /// returns the announce to broadcast.
    pub fn mark_completed(&mut self, interface: &str) -> Payload {
        let me = self.me.clone();
        let state = self.my_state();
        state.version += 1;
        state.completed.insert(interface.to_string());
        Payload::InterfaceAnnounce {
            origin: me,
            version: self.store[&self.me].version,
            entry: RepoEntry::Completed { interface: interface.to_string() },
        }
    }

    pub fn completed_here(&self) -> BTreeSet<String> {
        self.store.get(&self.me).map(|s| s.completed.clone()).unwrap_or_default()
    }

    /// Precondition context for an implementation owned by this robot,
    /// restricted to the given live set.
    pub fn precondition_context(&self, live: &BTreeSet<WorldId>) -> PreconditionContext {
        let mut ctx = PreconditionContext {
            local_completed: self.completed_here(),
            nearby_completed: BTreeMap::new(),
        };
        for (origin, state) in &self.store {
            if origin != &self.me && live.contains(origin) {
                ctx.nearby_completed.insert(origin.clone(), state.completed.clone());
            }
        }
        ctx
    }

    /// Exactly the implementations passing `executable` and the
    /// precondition check, across the live team, as (robot, id, feasible).
    pub fn query_executable(
        &self,
        interface: &str,
        capability_world: &WorldId,
        team: &TeamView,
        live: &BTreeSet<WorldId>,
    ) -> Vec<ExecutableEntry> {
        let Some(iface) = self.interface(interface) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (origin, state) in &self.store {
            if !live.contains(origin) {
                continue;
            }
            for ((iface_name, impl_id), meta) in &state.adverts {
                if iface_name != interface || !meta.available {
                    continue;
                }
                // Evaluate executability from the advert metadata. The
                // remote robot's completed view approximates its local one.
                let mut shadow = CapabilityImplementation {
                    id: impl_id.clone(),
                    interface: interface.to_string(),
                    owner: origin.clone(),
                    tree: crate::bt::node::TreeSpec::new("x", vec![]),
                    preconditions: meta.preconditions.clone(),
                    expected_duration: meta.expected_duration,
                    extra_params: BTreeMap::new(),
                };
                shadow.tree.root = String::new();
                let exec_ok = executable(capability_world, iface.required_local, &shadow, team);
                let ctx = PreconditionContext {
                    local_completed: state.completed.clone(),
                    nearby_completed: self
                        .store
                        .iter()
                        .filter(|(o, _)| *o != origin && live.contains(*o))
                        .map(|(o, s)| (o.clone(), s.completed.clone()))
                        .collect(),
                };
                let pre_ok = validate_preconditions(&shadow, &ctx);
                out.push(ExecutableEntry {
                    robot: origin.clone(),
                    implementation: impl_id.clone(),
                    feasible: exec_ok && pre_ok,
                });
            }
        }
        out
    }

    /// Folds one repository message into the store and returns any
    /// anti-entropy replies (recipient, payload).
    pub fn handle(&mut self, sender: &WorldId, payload: &Payload) -> Vec<(WorldId, Payload)> {
        match payload {
            Payload::InterfaceAnnounce { origin, version, entry }
            | Payload::ImplAdvert { origin, version, entry } => {
                self.apply_entry(origin, *version, entry);
                Vec::new()
            }
            Payload::Digest { versions } => self.handle_digest(sender, versions),
            Payload::PullRequest { origins } => {
                let mut replies = Vec::new();
                for origin in origins {
                    if let Some(state) = self.store.get(origin) {
                        replies.push((
                            sender.clone(),
                            Payload::PullReply {
                                origin: origin.clone(),
                                version: state.version,
                                entries: full_entries(state),
                            },
                        ));
                    }
                }
                replies
            }
            Payload::PullReply { origin, version, entries } => {
                self.replace_origin(origin, *version, entries);
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    fn handle_digest(
        &mut self,
        sender: &WorldId,
        versions: &BTreeMap<WorldId, u64>,
    ) -> Vec<(WorldId, Payload)> {
        let mut out = Vec::new();
        // Pull origins the sender knows better than we do.
        let mut wanted = Vec::new();
        for (origin, their_version) in versions {
            let mine = self.store.get(origin).map(|s| s.version).unwrap_or(0);
            if *their_version > mine {
                wanted.push(origin.clone());
            }
        }
        if !wanted.is_empty() {
            out.push((sender.clone(), Payload::PullRequest { origins: wanted }));
        }
        // Push our own origin when the sender lags behind on it.
        let my_version = self.store.get(&self.me).map(|s| s.version).unwrap_or(0);
        let their_view_of_me = versions.get(&self.me).copied().unwrap_or(0);
        if my_version > their_view_of_me {
            let state = &self.store[&self.me];
            out.push((
                sender.clone(),
                Payload::PullReply {
                    origin: self.me.clone(),
                    version: state.version,
                    entries: full_entries(state),
                },
            ));
        }
        out
    }

    /// Full-state push of everything this robot knows, used to flood a
    /// joiner.
    pub fn full_push(&self) -> Vec<Payload> {
        self.store
            .iter()
            .map(|(origin, state)| Payload::PullReply {
                origin: origin.clone(),
                version: state.version,
                entries: full_entries(state),
            })
            .collect()
    }

    fn apply_entry(&mut self, origin: &WorldId, version: u64, entry: &RepoEntry) {
        let known = self.store.get(origin).map(|s| s.version).unwrap_or(0);
        if version <= known {
            return; // stale
        }
        // Gaps are repaired by the next digest round; the entry itself is
        // still applied (entries are independent facts).
        let conflict = match entry {
            RepoEntry::Interface { interface } => {
                let merged = self.interfaces();
                match merged.get(&interface.name) {
                    Some(existing) if !existing.same_signature(interface) => true,
                    _ => false,
                }
            }
            _ => false,
        };
        let state = self.store.entry(origin.clone()).or_default();
        state.version = version;
        match entry {
            RepoEntry::Interface { interface } => {
                if conflict {
                    self.warnings.push(format!(
                        "conflicting signature for interface `{}` from `{origin}`; kept first registration",
                        interface.name
                    ));
                } else {
                    state.interfaces.insert(interface.name.clone(), interface.clone());
                }
            }
            RepoEntry::ImplAdvert {
                interface,
                implementation,
                available,
                preconditions,
                expected_duration,
            } => {
                state.adverts.insert(
                    (interface.clone(), implementation.clone()),
                    AdvertMeta {
                        available: *available,
                        preconditions: preconditions.clone(),
                        expected_duration: *expected_duration,
                    },
                );
            }
            RepoEntry::Completed { interface } => {
                state.completed.insert(interface.clone());
            }
        }
    }

    fn replace_origin(&mut self, origin: &WorldId, version: u64, entries: &[RepoEntry]) {
        let known = self.store.get(origin).map(|s| s.version).unwrap_or(0);
        if version <= known {
            return;
        }
        // Check for conflicts against other origins before replacing.
        for entry in entries {
            if let RepoEntry::Interface { interface } = entry {
                for (other, state) in &self.store {
                    if other == origin {
                        continue;
                    }
                    if let Some(existing) = state.interfaces.get(&interface.name) {
                        if !existing.same_signature(interface) {
                            self.warnings.push(format!(
                                "conflicting signature for interface `{}` from `{origin}`; kept first registration",
                                interface.name
                            ));
                        }
                    }
                }
            }
        }
        let mut state = OriginState { version, ..Default::default() };
        for entry in entries {
            match entry {
                RepoEntry::Interface { interface } => {
                    state.interfaces.insert(interface.name.clone(), interface.clone());
                }
                RepoEntry::ImplAdvert {
                    interface,
                    implementation,
                    available,
                    preconditions,
                    expected_duration,
                } => {
                    state.adverts.insert(
                        (interface.clone(), implementation.clone()),
                        AdvertMeta {
                            available: *available,
                            preconditions: preconditions.clone(),
                            expected_duration: *expected_duration,
                        },
                    );
                }
                RepoEntry::Completed { interface } => {
                    state.completed.insert(interface.clone());
                }
            }
        }
        self.store.insert(origin.clone(), state);
    }
}

/// Serializes an origin's full state for pull replies. Advert metadata
/// (preconditions, durations) travels per-entry.
fn full_entries(state: &OriginState) -> Vec<RepoEntry> {
    let mut entries = Vec::new();
    for ci in state.interfaces.values() {
        entries.push(RepoEntry::Interface { interface: ci.clone() });
    }
    for ((iface, id), meta) in &state.adverts {
        entries.push(RepoEntry::ImplAdvert {
            interface: iface.clone(),
            implementation: id.clone(),
            available: meta.available,
            preconditions: meta.preconditions.clone(),
            expected_duration: meta.expected_duration,
        });
    }
    for c in &state.completed {
        entries.push(RepoEntry::Completed { interface: c.clone() });
    }
    entries
}
