//! Deterministic mesh network simulation and real loopback transport.
//!
//! The simulator runs on a virtual clock. Each node owns one transmitter that
//! serializes its outbound datagrams at the node's bandwidth; each directed
//! link then adds a base latency plus truncated Gaussian jitter and drops
//! datagrams with a seeded Bernoulli draw. Links are FIFO.

mod measure;
mod sim;
mod transport;

pub use measure::{
    measure_link_quality, scalability_oracle, scalability_sweep, LinkQuality, SweepRow,
};
pub use sim::{Datagram, DropReason, NetStats, SendOutcome, SimNetwork, TxRecord};
pub use transport::{Receiver, SimEndpoint, SimHub, Transport, TransportError, UdpTransport};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{self, AgentId};

pub const NS_PER_S: u64 = 1_000_000_000;
pub const NS_PER_MS: u64 = 1_000_000;
pub const DEFAULT_BANDWIDTH_BPS: f64 = 6_000_000.0;
pub const DEFAULT_BASE_PORT: u16 = 47_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("no link between {from} and {to}")]
    NotAnEdge { from: AgentId, to: AgentId },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("self-edge on agent {0}")]
    SelfEdge(AgentId),
    #[error("send time {send_ns} is before the simulation clock {now_ns}")]
    TimeTravel { send_ns: u64, now_ns: u64 },
    #[error("measurement needs at least 100 samples, schedule yields {0}")]
    TooFewSamples(u64),
    #[error("no datagrams delivered ({sent} sent, {dropped} dropped); check loss_prob and bandwidth")]
    NoDeliveries { sent: u64, dropped: u64 },
    #[error("invalid model: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub base_latency_ns: u64,
    pub jitter_stddev_ns: u64,
    pub loss_prob: f64,
    pub seed: u64,
}

impl LinkModel {
    pub fn ideal() -> Self {
        Self {
            base_latency_ns: 0,
            jitter_stddev_ns: 0,
            loss_prob: 0.0,
            seed: 0,
        }
    }

    pub fn from_millis(latency_ms: f64, jitter_ms: f64, loss_pct: f64, seed: u64) -> Self {
        Self {
            base_latency_ns: (latency_ms * NS_PER_MS as f64).round() as u64,
            jitter_stddev_ns: (jitter_ms * NS_PER_MS as f64).round() as u64,
            loss_prob: loss_pct / 100.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(NetError::Model(format!(
                "loss_prob {} outside [0, 1]",
                self.loss_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contention {
    #[default]
    None,
    /// Every transmitter in range shares the node bandwidth equally.
    SharedMedium,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumModel {
    /// Bytes per second; `f64::INFINITY` disables serialization delay.
    pub per_node_bandwidth_bps: f64,
    /// Header bytes added to a payload on the wire.
    pub envelope_overhead_bytes: usize,
    pub contention: Contention,
    /// A datagram that would wait longer than this for its node's
    /// transmitter is dropped at the sender.
    pub max_backlog_ns: u64,
}

impl Default for MediumModel {
    fn default() -> Self {
        Self {
            per_node_bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            envelope_overhead_bytes: wire::header_len(1),
            contention: Contention::None,
            max_backlog_ns: 100 * NS_PER_MS,
        }
    }
}

impl MediumModel {
    pub fn unconstrained() -> Self {
        Self {
            per_node_bandwidth_bps: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.per_node_bandwidth_bps.is_nan() || self.per_node_bandwidth_bps <= 0.0 {
            return Err(NetError::Model(format!(
                "per_node_bandwidth {} must be positive",
                self.per_node_bandwidth_bps
            )));
        }
        Ok(())
    }
}

/// Undirected graph of agents with one link model per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    agents: Vec<AgentId>,
    edges: BTreeMap<(AgentId, AgentId), LinkModel>,
}

fn edge_key(a: AgentId, b: AgentId) -> (AgentId, AgentId) {
    (a.min(b), a.max(b))
}

impl Topology {
    pub fn full_mesh(n: usize, link: LinkModel) -> Self {
        let agents: Vec<AgentId> = (0..n as AgentId).collect();
        let mut edges = BTreeMap::new();
        for (i, &a) in agents.iter().enumerate() {
            for &b in &agents[i + 1..] {
                edges.insert((a, b), link);
            }
        }
        Self { agents, edges }
    }

    pub fn from_edges(
        agents: impl IntoIterator<Item = AgentId>,
        edges: impl IntoIterator<Item = (AgentId, AgentId)>,
        link: LinkModel,
    ) -> Result<Self, NetError> {
        let mut agents: Vec<AgentId> = agents.into_iter().collect();
        agents.sort_unstable();
        agents.dedup();
        let mut map = BTreeMap::new();
        for (a, b) in edges {
            if a == b {
                return Err(NetError::SelfEdge(a));
            }
            for id in [a, b] {
                if agents.binary_search(&id).is_err() {
                    return Err(NetError::UnknownAgent(id));
                }
            }
            map.insert(edge_key(a, b), link);
        }
        Ok(Self { agents, edges: map })
    }

    pub fn set_link(&mut self, a: AgentId, b: AgentId, link: LinkModel) -> Result<(), NetError> {
        match self.edges.get_mut(&edge_key(a, b)) {
            Some(l) => {
                *l = link;
                Ok(())
            }
            None => Err(NetError::NotAnEdge { from: a, to: b }),
        }
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn link(&self, a: AgentId, b: AgentId) -> Option<&LinkModel> {
        self.edges.get(&edge_key(a, b))
    }

    pub fn neighbors(&self, id: AgentId) -> Vec<AgentId> {
        self.agents
            .iter()
            .copied()
            .filter(|&o| o != id && self.edges.contains_key(&edge_key(id, o)))
            .collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.edges.keys().copied()
    }

    /// Agents listed in `agents` index order, with each one's neighbor
    /// indices.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.agents
            .iter()
            .map(|&a| {
                self.neighbors(a)
                    .iter()
                    .map(|n| self.agents.binary_search(n).unwrap())
                    .collect()
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        if adj.is_empty() {
            return true;
        }
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
