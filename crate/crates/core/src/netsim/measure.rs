use std::collections::BTreeMap;

use serde::Serialize;

use super::{Contention, LinkModel, MediumModel, NetError, SimNetwork, Topology, NS_PER_S};
use crate::wire::{encode_envelope, AgentId, MessageEnvelope};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkQuality {
    pub latency_mean_ms: f64,
    pub jitter_ms: f64,
    pub loss_pct: f64,
    pub throughput_msgs_per_s: f64,
    pub sent: u64,
    pub delivered: u64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn probe(sender: AgentId, seq: u32, ts: u64, payload_bytes: usize) -> Vec<u8> {
    let n = payload_bytes.div_ceil(4).max(1);
    let env = MessageEnvelope {
        sender_id: sender,
        seq,
        timestamp_ns: ts,
        round: 0,
        payload_shape: vec![n as u32],
        payload: vec![0.0; n],
    };
    encode_envelope(&env).expect("probe envelope is well formed")
}

/// Streams `rate_hz` probes of `payload_bytes` over one link for
/// `duration_s` of simulated time and reports one-way delay statistics.
pub fn measure_link_quality(
    net: &mut SimNetwork,
    from: AgentId,
    to: AgentId,
    payload_bytes: usize,
    rate_hz: f64,
    duration_s: f64,
) -> Result<LinkQuality, NetError> {
    let count = (rate_hz * duration_s).floor() as u64;
    if count < 100 {
        return Err(NetError::TooFewSamples(count));
    }
    let start = net.now_ns();
    let interval = NS_PER_S as f64 / rate_hz;
    let mut sent = 0u64;
    let mut delays = Vec::with_capacity(count as usize);
    let mut collect = |batch: Vec<super::Datagram>| {
        for d in batch.into_iter().filter(|d| d.from == from && d.to == to) {
            delays.push((d.deliver_at_ns - d.sent_ns) as f64 / 1e6);
        }
    };
    for k in 0..count {
        let t = start + (k as f64 * interval).round() as u64;
        collect(net.advance_to(t));
        net.sim_send(from, to, probe(from, k as u32, t, payload_bytes), t)?;
        sent += 1;
    }
    collect(net.drain());
    let delivered = delays.len() as u64;
    if delivered == 0 {
        return Err(NetError::NoDeliveries {
            sent,
            dropped: sent,
        });
    }
    let (latency_mean_ms, jitter_ms) = mean_std(&delays);
    Ok(LinkQuality {
        latency_mean_ms,
        jitter_ms,
        loss_pct: (sent - delivered) as f64 / sent as f64 * 100.0,
        throughput_msgs_per_s: delivered as f64 / duration_s,
        sent,
        delivered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub team_size: usize,
    pub offered_hz: f64,
    pub delivered_mean: f64,
    pub delivered_std: f64,
    pub oracle_value: f64,
}

/// Closed-form per-link rate for a full mesh where every node unicasts
/// `offered_hz` messages to each of the other `n − 1` nodes.
pub fn scalability_oracle(
    team_size: usize,
    payload_bytes: usize,
    offered_hz: f64,
    medium: &MediumModel,
) -> f64 {
    if team_size < 2 {
        return 0.0;
    }
    let wire_bytes = (payload_bytes.div_ceil(4).max(1) * 4 + medium.envelope_overhead_bytes) as f64;
    let bandwidth = match medium.contention {
        Contention::None => medium.per_node_bandwidth_bps,
        Contention::SharedMedium => medium.per_node_bandwidth_bps / team_size as f64,
    };
    offered_hz.min(bandwidth / ((team_size - 1) as f64 * wire_bytes))
}

/// Full-mesh throughput sweep. Each node fires every `1/offered_hz`
/// seconds (nodes staggered evenly inside the period) and sends one message
/// to every peer, rotating which peer goes first. Per-link delivery rates
/// are averaged over `[warmup_s, duration_s)`.
pub fn scalability_sweep(
    team_sizes: &[usize],
    payload_bytes: usize,
    offered_hz: f64,
    medium: MediumModel,
    link: LinkModel,
    duration_s: f64,
    warmup_s: f64,
) -> Result<Vec<SweepRow>, NetError> {
    if warmup_s >= duration_s {
        return Err(NetError::Model(format!(
            "warm-up {warmup_s}s must be shorter than duration {duration_s}s"
        )));
    }
    let period = NS_PER_S as f64 / offered_hz;
    let window_start = (warmup_s * NS_PER_S as f64) as u64;
    let window_end = (duration_s * NS_PER_S as f64) as u64;
    let ticks = (duration_s * offered_hz).ceil() as u64;
    let mut rows = Vec::with_capacity(team_sizes.len());
    for &n in team_sizes {
        let topo = Topology::full_mesh(n, link);
        let mut net = SimNetwork::new(topo, medium)?;
        let agents: Vec<AgentId> = (0..n as AgentId).collect();
        let mut counts: BTreeMap<(AgentId, AgentId), u64> = agents
            .iter()
            .flat_map(|&a| agents.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .map(|k| (k, 0))
            .collect();
        let mut tally = |batch: Vec<super::Datagram>| {
            for d in batch {
                if (window_start..window_end).contains(&d.deliver_at_ns) {
                    *counts.get_mut(&(d.from, d.to)).unwrap() += 1;
                }
            }
        };
        for k in 0..ticks {
            for &a in &agents {
                let t = (k as f64 * period + a as f64 * period / n as f64).round() as u64;
                if t >= window_end {
                    continue;
                }
                tally(net.advance_to(t));
                let bytes = probe(a, k as u32, t, payload_bytes);
                let peers: Vec<AgentId> = agents.iter().copied().filter(|&b| b != a).collect();
                for r in 0..peers.len() {
                    let to = peers[(r + k as usize) % peers.len()];
                    net.sim_send(a, to, bytes.clone(), t)?;
                }
            }
        }
        tally(net.drain());
        let window_s = duration_s - warmup_s;
        let rates: Vec<f64> = counts.values().map(|&c| c as f64 / window_s).collect();
        let (delivered_mean, delivered_std) = mean_std(&rates);
        rows.push(SweepRow {
            team_size: n,
            offered_hz,
            delivered_mean,
            delivered_std,
            oracle_value: scalability_oracle(n, payload_bytes, offered_hz, &medium),
        });
    }
    Ok(rows)
}
