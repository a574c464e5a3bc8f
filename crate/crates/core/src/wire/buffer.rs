use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::{AgentId, MessageEnvelope, WireError};
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BufferError {
    #[error("message from unregistered sender {0}")]
    UnknownSender(AgentId),
    #[error("malformed payload from sender {sender}: {source}")]
    Payload {
        sender: AgentId,
        #[source]
        source: WireError,
    },
}

#[derive(Debug, Clone)]
struct Slot {
    envelope: MessageEnvelope,
    arrival_ns: u64,
}

#[derive(Debug, Clone, Default)]
struct NeighborState {
    slot: Option<Slot>,
    /// Highest seq ever accepted; survives eviction so a late packet can
    /// never resurrect older state.
    high_water: Option<u32>,
}

/// A live neighbor feature as handed to the aggregation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEntry {
    pub neighbor: AgentId,
    pub feature: Tensor,
    pub age_ns: u64,
    pub seq: u32,
}

/// Keep-latest store: one slot per registered neighbor.
#[derive(Debug, Clone)]
pub struct NeighborBuffer {
    neighbors: BTreeMap<AgentId, NeighborState>,
    staleness_ns: u64,
}

impl NeighborBuffer {
    pub fn new(neighbors: impl IntoIterator<Item = AgentId>, staleness_ns: u64) -> Self {
        Self {
            neighbors: neighbors
                .into_iter()
                .map(|id| (id, NeighborState::default()))
                .collect(),
            staleness_ns,
        }
    }

    pub fn staleness_ns(&self) -> u64 {
        self.staleness_ns
    }

    pub fn registered(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.neighbors.keys().copied()
    }

    pub fn stored_seq(&self, neighbor: AgentId) -> Option<u32> {
        self.neighbors
            .get(&neighbor)?
            .slot
            .as_ref()
            .map(|s| s.envelope.seq)
    }

    pub fn arrival_ns(&self, neighbor: AgentId) -> Option<u64> {
        self.neighbors.get(&neighbor)?.slot.as_ref().map(|s| s.arrival_ns)
    }

    /// Stores `env` if it is newer than anything accepted from its sender.
    /// Returns whether it was accepted; a rejected insert leaves the buffer
    /// untouched.
    pub fn insert(&mut self, env: MessageEnvelope, now_ns: u64) -> Result<bool, BufferError> {
        let sender = env.sender_id;
        let state = self
            .neighbors
            .get_mut(&sender)
            .ok_or(BufferError::UnknownSender(sender))?;
        if state.high_water.is_some_and(|hw| env.seq <= hw) {
            return Ok(false);
        }
        env.validate()
            .map_err(|source| BufferError::Payload { sender, source })?;
        state.high_water = Some(env.seq);
        state.slot = Some(Slot {
            envelope: env,
            arrival_ns: now_ns,
        });
        Ok(true)
    }

    fn age(env: &MessageEnvelope, now_ns: u64) -> u64 {
        now_ns.saturating_sub(env.timestamp_ns)
    }

    /// Drops every stored envelope whose sender timestamp is more than the
    /// staleness threshold behind `now_ns`. An age exactly equal to the
    /// threshold survives.
    pub fn evict_stale(&mut self, now_ns: u64) -> usize {
        let mut evicted = 0;
        for state in self.neighbors.values_mut() {
            if state
                .slot
                .as_ref()
                .is_some_and(|s| Self::age(&s.envelope, now_ns) > self.staleness_ns)
            {
                state.slot = None;
                evicted += 1;
            }
        }
        evicted
    }

    /// Evicts, then lists live neighbors in ascending id order.
    pub fn snapshot(&mut self, now_ns: u64) -> Vec<NeighborEntry> {
        self.evict_stale(now_ns);
        self.neighbors
            .iter()
            .filter_map(|(&id, state)| {
                let slot = state.slot.as_ref()?;
                Some(NeighborEntry {
                    neighbor: id,
                    feature: slot.envelope.tensor().ok()?,
                    age_ns: Self::age(&slot.envelope, now_ns),
                    seq: slot.envelope.seq,
                })
            })
            .collect()
    }

    /// Registered neighbors with no live envelope at `now_ns`.
    pub fn missing(&mut self, now_ns: u64) -> Vec<AgentId> {
        self.evict_stale(now_ns);
        self.neighbors
            .iter()
            .filter(|(_, s)| s.slot.is_none())
            .map(|(&id, _)| id)
            .collect()
    }
}

/// Thread-safe handle for a buffer written by a receive path and read by the
/// aggregation stage. Every operation holds the lock for its full duration.
#[derive(Debug, Clone)]
pub struct SharedNeighborBuffer(Arc<Mutex<NeighborBuffer>>);

impl SharedNeighborBuffer {
    pub fn new(buffer: NeighborBuffer) -> Self {
        Self(Arc::new(Mutex::new(buffer)))
    }

    pub fn insert(&self, env: MessageEnvelope, now_ns: u64) -> Result<bool, BufferError> {
        self.0.lock().unwrap().insert(env, now_ns)
    }

    pub fn snapshot(&self, now_ns: u64) -> Vec<NeighborEntry> {
        self.0.lock().unwrap().snapshot(now_ns)
    }

    pub fn with<R>(&self, f: impl FnOnce(&mut NeighborBuffer) -> R) -> R {
        f(&mut self.0.lock().unwrap())
    }
}
