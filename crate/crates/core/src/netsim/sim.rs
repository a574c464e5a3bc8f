use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Contention, MediumModel, NetError, Topology, NS_PER_S};
use crate::wire::AgentId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub from: AgentId,
    pub to: AgentId,
    pub sent_ns: u64,
    pub deliver_at_ns: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Lost on the link after transmission.
    Loss,
    /// The sender's transmit backlog was over its limit.
    QueueFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendOutcome {
    Scheduled { deliver_at_ns: u64 },
    Dropped(DropReason),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NetStats {
    pub sent: u64,
    pub lost: u64,
    pub queue_dropped: u64,
    pub delivered: u64,
}

/// One transmitter busy interval, kept when recording is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxRecord {
    pub node: AgentId,
    pub start_ns: u64,
    pub end_ns: u64,
    pub bytes: usize,
}

#[derive(Debug)]
struct LinkState {
    rng: ChaCha8Rng,
    last_delivery_ns: u64,
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Pending {
    deliver_at_ns: u64,
    order: u64,
}

/// Single-threaded discrete-event network.
#[derive(Debug)]
pub struct SimNetwork {
    topology: Topology,
    medium: MediumModel,
    now_ns: u64,
    tx_busy_until: BTreeMap<AgentId, u64>,
    links: BTreeMap<(AgentId, AgentId), LinkState>,
    queue: BinaryHeap<Reverse<Pending>>,
    in_flight: BTreeMap<u64, Datagram>,
    next_order: u64,
    stats: NetStats,
    tx_log: Option<Vec<TxRecord>>,
}

fn mix_seed(seed: u64, from: AgentId, to: AgentId) -> u64 {
    // splitmix64 finalizer over the link identity
    let mut z = seed ^ ((from as u64) << 32 | to as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SimNetwork {
    pub fn new(topology: Topology, medium: MediumModel) -> Result<Self, NetError> {
        medium.validate()?;
        let mut links = BTreeMap::new();
        for (a, b) in topology.edges() {
            let model = topology.link(a, b).expect("edge listed by topology");
            model.validate()?;
            for (from, to) in [(a, b), (b, a)] {
                links.insert(
                    (from, to),
                    LinkState {
                        rng: ChaCha8Rng::seed_from_u64(mix_seed(model.seed, from, to)),
                        last_delivery_ns: 0,
                    },
                );
            }
        }
        Ok(Self {
            tx_busy_until: topology.agents().iter().map(|&a| (a, 0)).collect(),
            topology,
            medium,
            now_ns: 0,
            links,
            queue: BinaryHeap::new(),
            in_flight: BTreeMap::new(),
            next_order: 0,
            stats: NetStats::default(),
            tx_log: None,
        })
    }

    pub fn record_transmissions(&mut self) {
        self.tx_log.get_or_insert_with(Vec::new);
    }

    pub fn transmissions(&self) -> &[TxRecord] {
        self.tx_log.as_deref().unwrap_or(&[])
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn medium(&self) -> &MediumModel {
        &self.medium
    }

    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    pub fn stats(&self) -> NetStats {
        self.stats
    }

    /// Bandwidth one node's transmitter gets after contention.
    pub fn effective_bandwidth(&self, node: AgentId) -> f64 {
        match self.medium.contention {
            Contention::None => self.medium.per_node_bandwidth_bps,
            Contention::SharedMedium => {
                let in_range = self.topology.neighbors(node).len() + 1;
                self.medium.per_node_bandwidth_bps / in_range as f64
            }
        }
    }

    fn serialization_ns(&self, node: AgentId, bytes: usize) -> u64 {
        let bw = self.effective_bandwidth(node);
        if bw.is_infinite() {
            0
        } else {
            (bytes as f64 * NS_PER_S as f64 / bw).ceil() as u64
        }
    }

    /// Queues `bytes` from `from` to `to` at `send_ns`, which must not be
    /// earlier than the simulation clock.
    pub fn sim_send(
        &mut self,
        from: AgentId,
        to: AgentId,
        bytes: Vec<u8>,
        send_ns: u64,
    ) -> Result<SendOutcome, NetError> {
        if send_ns < self.now_ns {
            return Err(NetError::TimeTravel {
                send_ns,
                now_ns: self.now_ns,
            });
        }
        let model = *self
            .topology
            .link(from, to)
            .filter(|_| from != to)
            .ok_or(NetError::NotAnEdge { from, to })?;
        self.stats.sent += 1;

        let busy = self.tx_busy_until[&from];
        let tx_start = busy.max(send_ns);
        if tx_start - send_ns > self.medium.max_backlog_ns {
            self.stats.queue_dropped += 1;
            return Ok(SendOutcome::Dropped(DropReason::QueueFull));
        }
        let tx_end = tx_start + self.serialization_ns(from, bytes.len());
        self.tx_busy_until.insert(from, tx_end);
        if let Some(log) = self.tx_log.as_mut() {
            log.push(TxRecord {
                node: from,
                start_ns: tx_start,
                end_ns: tx_end,
                bytes: bytes.len(),
            });
        }

        let link = self.links.get_mut(&(from, to)).expect("state for every edge");
        let lost = link.rng.random::<f64>() < model.loss_prob;
        let jitter = if model.jitter_stddev_ns > 0 {
            Normal::new(0.0, model.jitter_stddev_ns as f64)
                .expect("finite stddev")
                .sample(&mut link.rng)
        } else {
            0.0
        };
        if lost {
            self.stats.lost += 1;
            return Ok(SendOutcome::Dropped(DropReason::Loss));
        }
        let latency = (model.base_latency_ns as f64 + jitter).max(0.0).round() as u64;
        let deliver_at_ns = (tx_end + latency).max(link.last_delivery_ns);
        link.last_delivery_ns = deliver_at_ns;

        let order = self.next_order;
        self.next_order += 1;
        self.queue.push(Reverse(Pending {
            deliver_at_ns,
            order,
        }));
        self.in_flight.insert(
            order,
            Datagram {
                from,
                to,
                sent_ns: send_ns,
                deliver_at_ns,
                bytes,
            },
        );
        Ok(SendOutcome::Scheduled { deliver_at_ns })
    }

    pub fn next_delivery_ns(&self) -> Option<u64> {
        self.queue.peek().map(|Reverse(p)| p.deliver_at_ns)
    }

    /// Moves the clock to `t_ns` and returns everything delivered up to and
    /// including that instant, in delivery order.
    pub fn advance_to(&mut self, t_ns: u64) -> Vec<Datagram> {
        let mut out = Vec::new();
        while let Some(Reverse(p)) = self.queue.peek() {
            if p.deliver_at_ns > t_ns {
                break;
            }
            let Reverse(p) = self.queue.pop().unwrap();
            out.push(self.in_flight.remove(&p.order).unwrap());
        }
        self.stats.delivered += out.len() as u64;
        self.now_ns = self.now_ns.max(t_ns);
        out
    }

    /// Delivers everything still in flight.
    pub fn drain(&mut self) -> Vec<Datagram> {
        match self.queue.iter().map(|Reverse(p)| p.deliver_at_ns).max() {
            Some(t) => self.advance_to(t),
            None => Vec::new(),
        }
    }
}
