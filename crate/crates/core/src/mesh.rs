//! Runs every agent's communication rounds over a [`SimNetwork`].
//!
//! Each agent owns a [`RoundRunner`] and one keep-latest buffer per round.
//! On every tick the clock advances, arrivals are decoded into the
//! receiver's buffers, and each unfinished agent (ascending id) publishes
//! its current-round feature to its neighbors and polls its runner.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::aggregation::{
    AggregationConfig, AggregationError, RoundBuffers, RoundRunner, RoundStatus,
};
use crate::assignment::{pad_feature, truncate_feature};
use crate::netsim::{NetError, NetStats, SimNetwork, NS_PER_MS, NS_PER_S};
use crate::tensor::{Tensor, TensorError};
use crate::wire::{
    decode_envelope, encode_envelope, AgentId, MessageEnvelope, NeighborEntry,
    DEFAULT_STALENESS_NS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Shape(#[from] TensorError),
    #[error("feature set does not match topology: {0}")]
    Agents(String),
    #[error("agents {pending:?} still running at the {horizon_ns} ns horizon")]
    Horizon { pending: Vec<AgentId>, horizon_ns: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshOptions {
    pub poll_interval_ns: u64,
    pub staleness_ns: u64,
    /// Agents that receive but never transmit.
    pub muted: BTreeSet<AgentId>,
    /// Outgoing features keep only the first `budget / 4` components;
    /// receivers zero-pad back to their own width.
    pub message_budget_bytes: Option<usize>,
    /// Resend every message already published this exchange at this
    /// interval until the whole team finishes. Recovers from link loss.
    pub republish_ns: Option<u64>,
    pub horizon_ns: u64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            poll_interval_ns: NS_PER_MS,
            staleness_ns: DEFAULT_STALENESS_NS,
            muted: BTreeSet::new(),
            message_budget_bytes: None,
            republish_ns: None,
            horizon_ns: 60 * NS_PER_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamRun {
    pub outputs: BTreeMap<AgentId, Result<Tensor, AggregationError>>,
    pub finished_ns: BTreeMap<AgentId, u64>,
    pub net: NetStats,
    /// Datagrams that failed to decode or named a round out of range.
    pub malformed: u64,
    /// Well-formed envelopes refused by keep-latest ordering.
    pub rejected: u64,
    /// Envelopes stamped before this run started, left over from an
    /// earlier exchange on the same network.
    pub stale: u64,
}

impl TeamRun {
    pub fn output(&self, id: AgentId) -> Option<&Tensor> {
        self.outputs.get(&id).and_then(|r| r.as_ref().ok())
    }
}

struct AgentState {
    runner: RoundRunner,
    buffers: RoundBuffers,
    neighbors: Vec<AgentId>,
    seq: u32,
    done: bool,
    published: Vec<Vec<u8>>,
    last_publish_ns: u64,
}

/// Runs `config.rounds` rounds for the whole team, starting from each
/// agent's encoder output in `features`. `aggregate` receives the agent id,
/// its current feature and the chosen neighbor entries in ascending id.
///
/// Per-agent aggregation failures (timeouts, too few neighbors) are
/// reported in [`TeamRun::outputs`]; they do not stop the other agents.
pub fn run_team_rounds<F>(
    net: &mut SimNetwork,
    config: &AggregationConfig,
    features: &BTreeMap<AgentId, Tensor>,
    options: &MeshOptions,
    mut aggregate: F,
) -> Result<TeamRun, MeshError>
where
    F: FnMut(AgentId, &Tensor, &[NeighborEntry]) -> Result<Tensor, AggregationError>,
{
    let topology = net.topology().clone();
    let ids: Vec<AgentId> = features.keys().copied().collect();
    if ids != topology.agents() {
        return Err(MeshError::Agents(format!(
            "features for {ids:?}, topology has {:?}",
            topology.agents()
        )));
    }
    config.validate(ids.len())?;
    if options.poll_interval_ns == 0 || options.republish_ns == Some(0) {
        return Err(MeshError::Agents("poll interval must be positive".into()));
    }

    let mut agents: BTreeMap<AgentId, AgentState> = BTreeMap::new();
    for (&id, f) in features {
        let neighbors = topology.neighbors(id);
        agents.insert(
            id,
            AgentState {
                runner: RoundRunner::new(*config, f.clone())?,
                buffers: RoundBuffers::new(&neighbors, config.rounds, options.staleness_ns),
                neighbors,
                seq: 0,
                done: false,
                published: Vec::new(),
                last_publish_ns: 0,
            },
        );
    }

    let mut run = TeamRun {
        outputs: BTreeMap::new(),
        finished_ns: BTreeMap::new(),
        net: NetStats::default(),
        malformed: 0,
        rejected: 0,
        stale: 0,
    };
    let start = net.now_ns();
    let mut t = start;
    let horizon = t.saturating_add(options.horizon_ns);
    loop {
        for d in net.advance_to(t) {
            let Ok(env) = decode_envelope(&d.bytes) else {
                run.malformed += 1;
                continue;
            };
            if env.timestamp_ns < start {
                run.stale += 1;
                continue;
            }
            let Some(state) = agents.get_mut(&d.to) else {
                continue;
            };
            match state.buffers.insert(env, t) {
                Ok(true) => {}
                Ok(false) => run.rejected += 1,
                Err(_) => run.malformed += 1,
            }
        }

        for (&id, state) in agents.iter_mut().filter(|(_, s)| !s.done) {
            loop {
                if let Some((round, feature)) = state.runner.outgoing() {
                    if !options.muted.contains(&id) {
                        let sent = match options.message_budget_bytes {
                            Some(b) => truncate_feature(&feature, b)?,
                            None => feature,
                        };
                        let env = MessageEnvelope::from_tensor(id, state.seq, t, round, &sent);
                        state.seq = state.seq.wrapping_add(1);
                        let bytes = encode_envelope(&env).map_err(|e| {
                            MeshError::Agents(format!("agent {id} produced bad envelope: {e}"))
                        })?;
                        for &n in &state.neighbors {
                            net.sim_send(id, n, bytes.clone(), t)?;
                        }
                        state.published.push(bytes);
                        state.last_publish_ns = t;
                    }
                }
                let budget = options.message_budget_bytes;
                let status = state.runner.poll_entries(
                    &mut state.buffers,
                    t,
                    &mut |h: &Tensor, entries: &[NeighborEntry]| {
                        if budget.is_none() {
                            return aggregate(id, h, entries);
                        }
                        let padded = entries
                            .iter()
                            .map(|e| {
                                Ok(NeighborEntry {
                                    feature: pad_feature(&e.feature, h.len())?,
                                    ..e.clone()
                                })
                            })
                            .collect::<Result<Vec<_>, AggregationError>>()?;
                        aggregate(id, h, &padded)
                    },
                );
                match status {
                    Ok(RoundStatus::Advanced) => continue,
                    Ok(RoundStatus::Waiting) => break,
                    Ok(RoundStatus::Finished(h)) => {
                        run.outputs.insert(id, Ok(h));
                    }
                    Err(e) => {
                        run.outputs.insert(id, Err(e));
                    }
                }
                state.done = true;
                run.finished_ns.insert(id, t);
                break;
            }
        }

        if agents.values().all(|s| s.done) {
            break;
        }
        if let Some(every) = options.republish_ns {
            for (&id, state) in agents.iter_mut() {
                if t.saturating_sub(state.last_publish_ns) < every || state.published.is_empty() {
                    continue;
                }
                for bytes in &state.published {
                    for &n in &state.neighbors {
                        net.sim_send(id, n, bytes.clone(), t)?;
                    }
                }
                state.last_publish_ns = t;
            }
        }
        if t >= horizon {
            return Err(MeshError::Horizon {
                pending: agents
                    .iter()
                    .filter(|(_, s)| !s.done)
                    .map(|(&id, _)| id)
                    .collect(),
                horizon_ns: options.horizon_ns,
            });
        }
        t = t.saturating_add(options.poll_interval_ns).min(horizon);
    }
    run.net = net.stats();
    Ok(run)
}
