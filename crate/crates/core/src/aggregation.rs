//! Aggregation paradigms and the neighborhood policy that feeds them.
//!
//! Reduction fuses the self feature with neighbor features into one feature of
//! the same width. Broadcast pairs the self feature with every neighbor and
//! keeps one row per pair. Which neighbors take part is decided by
//! [`resolve_neighborhood`]: blocking mode waits for everyone, best-effort
//! proceeds with whatever is live and may fall back to single-agent operation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{check_len, MlpSpec, Tensor, TensorError};
use crate::wire::{AgentId, BufferError, MessageEnvelope, NeighborBuffer, NeighborEntry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregationError {
    #[error(transparent)]
    Shape(#[from] TensorError),
    #[error("round {round}: timed out waiting for neighbors {missing:?}")]
    Timeout { round: u8, missing: Vec<AgentId> },
    #[error("only {live} live neighbors, {required} required")]
    InsufficientNeighbors { live: usize, required: usize },
    #[error("broadcast aggregation needs at least one neighbor")]
    EmptyBroadcast,
    #[error("diff_sum reduction needs a pairwise network; use diff_sum_aggregate")]
    NeedsPairwiseNetwork,
    #[error("message for round {round}, but only {rounds} rounds are configured")]
    RoundOutOfRange { round: u8, rounds: u8 },
    #[error("invalid aggregation config: {0}")]
    Config(String),
    #[error(transparent)]
    Buffer(#[from] BufferError),
    #[error("exchange failed: {0}")]
    Exchange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
    DiffSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paradigm {
    Reduction(ReduceKind),
    Broadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Wait for every registered neighbor, failing after `timeout_ns`.
    Blocking { timeout_ns: u64 },
    /// Use the live subset. Inside [`RoundRunner`] the subset is taken once
    /// every neighbor has reported or `window_ns` has elapsed.
    BestEffort { window_ns: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregationConfig {
    pub paradigm: Paradigm,
    pub mode: Mode,
    /// Zero permits the single-agent fallback.
    pub min_neighbors: usize,
    pub rounds: u8,
}

impl AggregationConfig {
    pub fn validate(&self, team_size: usize) -> Result<(), AggregationError> {
        if self.rounds == 0 {
            return Err(AggregationError::Config("rounds must be at least 1".into()));
        }
        if let Mode::Blocking { timeout_ns: 0 } = self.mode {
            return Err(AggregationError::Config(
                "blocking timeout must be positive".into(),
            ));
        }
        if self.min_neighbors > team_size.saturating_sub(1) {
            return Err(AggregationError::Config(format!(
                "min_neighbors {} exceeds team size {team_size} minus one",
                self.min_neighbors
            )));
        }
        Ok(())
    }
}

fn check_all(self_feature: &Tensor, neighbors: &[Tensor]) -> Result<usize, AggregationError> {
    let d = self_feature.vector_len("self feature rank")?;
    for n in neighbors {
        check_len("neighbor feature", d, n.vector_len("neighbor feature rank")?)?;
    }
    Ok(d)
}

/// Sum, mean or max over `{self} ∪ neighbors`, elementwise. Neighbors are
/// folded in slice order after the self feature.
pub fn reduce_aggregate(
    kind: ReduceKind,
    self_feature: &Tensor,
    neighbors: &[Tensor],
) -> Result<Tensor, AggregationError> {
    check_all(self_feature, neighbors)?;
    let mut acc = self_feature.data().to_vec();
    match kind {
        ReduceKind::Sum | ReduceKind::Mean => {
            for n in neighbors {
                acc.iter_mut().zip(n.data()).for_each(|(a, b)| *a += b);
            }
            if kind == ReduceKind::Mean {
                let count = (neighbors.len() + 1) as f32;
                acc.iter_mut().for_each(|a| *a /= count);
            }
        }
        ReduceKind::Max => {
            for n in neighbors {
                acc.iter_mut().zip(n.data()).for_each(|(a, &b)| *a = a.max(b));
            }
        }
        ReduceKind::DiffSum => return Err(AggregationError::NeedsPairwiseNetwork),
    }
    Ok(Tensor::vector(acc))
}

/// `Σ_j g(f_j − f_i)`; the zero vector of `g`'s output width when there are
/// no neighbors.
pub fn diff_sum_aggregate(
    g: &MlpSpec,
    self_feature: &Tensor,
    neighbors: &[Tensor],
) -> Result<Tensor, AggregationError> {
    let d = check_all(self_feature, neighbors)?;
    check_len("pairwise network input", g.input_dim(), d)?;
    let mut acc = vec![0.0f32; g.output_dim()];
    let mut diff = vec![0.0f32; d];
    for n in neighbors {
        for ((out, fj), fi) in diff.iter_mut().zip(n.data()).zip(self_feature.data()) {
            *out = fj - fi;
        }
        let msg = g.forward_slice(&diff)?;
        acc.iter_mut().zip(&msg).for_each(|(a, m)| *a += m);
    }
    Ok(Tensor::vector(acc))
}

/// One row `[f_i, f_j]` per neighbor, in the order given (callers pass
/// neighbors sorted by ascending id).
pub fn broadcast_aggregate(
    self_feature: &Tensor,
    neighbors: &[Tensor],
) -> Result<Tensor, AggregationError> {
    let d = check_all(self_feature, neighbors)?;
    if neighbors.is_empty() {
        return Err(AggregationError::EmptyBroadcast);
    }
    let mut data = Vec::with_capacity(neighbors.len() * 2 * d);
    for n in neighbors {
        data.extend_from_slice(self_feature.data());
        data.extend_from_slice(n.data());
    }
    Ok(Tensor::new(vec![neighbors.len(), 2 * d], data)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Neighborhood {
    Ready(Vec<NeighborEntry>),
    Pending { missing: Vec<AgentId> },
    SingleRobot,
}

impl Neighborhood {
    pub fn into_entries(self) -> Vec<NeighborEntry> {
        match self {
            Neighborhood::Ready(entries) => entries,
            _ => Vec::new(),
        }
    }

    pub fn features(&self) -> Vec<Tensor> {
        match self {
            Neighborhood::Ready(entries) => entries.iter().map(|e| e.feature.clone()).collect(),
            _ => Vec::new(),
        }
    }
}

/// Decides which neighbor features the aggregation step may use right now.
///
/// Blocking mode reports `Pending` until every registered neighbor is live and
/// a [`AggregationError::Timeout`] naming the missing ones once `now_ns` is
/// more than the timeout past `waiting_since_ns`.
pub fn resolve_neighborhood(
    config: &AggregationConfig,
    buffer: &mut NeighborBuffer,
    round: u8,
    waiting_since_ns: u64,
    now_ns: u64,
) -> Result<Neighborhood, AggregationError> {
    let live = buffer.snapshot(now_ns);
    match config.mode {
        Mode::Blocking { timeout_ns } => {
            let missing = buffer.missing(now_ns);
            if missing.is_empty() {
                Ok(Neighborhood::Ready(live))
            } else if now_ns.saturating_sub(waiting_since_ns) > timeout_ns {
                Err(AggregationError::Timeout { round, missing })
            } else {
                Ok(Neighborhood::Pending { missing })
            }
        }
        Mode::BestEffort { .. } => {
            if live.is_empty() && config.min_neighbors == 0 {
                Ok(Neighborhood::SingleRobot)
            } else if live.len() < config.min_neighbors {
                Err(AggregationError::InsufficientNeighbors {
                    live: live.len(),
                    required: config.min_neighbors,
                })
            } else {
                Ok(Neighborhood::Ready(live))
            }
        }
    }
}

/// One keep-latest buffer per communication round, so a neighbor that has
/// already moved on to round `l + 1` cannot overwrite the round-`l` feature
/// this agent still needs.
#[derive(Debug, Clone)]
pub struct RoundBuffers {
    rounds: Vec<NeighborBuffer>,
}

impl RoundBuffers {
    pub fn new(neighbors: &[AgentId], rounds: u8, staleness_ns: u64) -> Self {
        Self {
            rounds: (0..rounds)
                .map(|_| NeighborBuffer::new(neighbors.iter().copied(), staleness_ns))
                .collect(),
        }
    }

    pub fn insert(&mut self, env: MessageEnvelope, now_ns: u64) -> Result<bool, AggregationError> {
        let rounds = self.rounds.len() as u8;
        let buf = self
            .rounds
            .get_mut(env.round as usize)
            .ok_or(AggregationError::RoundOutOfRange {
                round: env.round,
                rounds,
            })?;
        Ok(buf.insert(env, now_ns)?)
    }

    pub fn round(&mut self, round: u8) -> &mut NeighborBuffer {
        &mut self.rounds[round as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundStatus {
    Waiting,
    Advanced,
    Finished(Tensor),
}

/// Per-agent state machine for `h^(l+1) = Aggregate(h^(l), {h_j^(l)})`.
///
/// The caller publishes whatever [`RoundRunner::outgoing`] yields, lets
/// messages arrive, and calls [`RoundRunner::poll`] until it reports
/// `Finished`.
#[derive(Debug, Clone)]
pub struct RoundRunner {
    config: AggregationConfig,
    feature: Tensor,
    round: u8,
    round_started_ns: Option<u64>,
    published: bool,
}

impl RoundRunner {
    pub fn new(config: AggregationConfig, encoded: Tensor) -> Result<Self, AggregationError> {
        if config.rounds == 0 {
            return Err(AggregationError::Config("rounds must be at least 1".into()));
        }
        Ok(Self {
            config,
            feature: encoded,
            round: 0,
            round_started_ns: None,
            published: false,
        })
    }

    pub fn round(&self) -> u8 {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.config.rounds
    }

    /// The feature to publish for the current round, once per round.
    pub fn outgoing(&mut self) -> Option<(u8, Tensor)> {
        if self.published || self.is_finished() {
            return None;
        }
        self.published = true;
        Some((self.round, self.feature.clone()))
    }

    pub fn poll<F>(
        &mut self,
        buffers: &mut RoundBuffers,
        now_ns: u64,
        aggregate: &mut F,
    ) -> Result<RoundStatus, AggregationError>
    where
        F: FnMut(&Tensor, &[Tensor]) -> Result<Tensor, AggregationError>,
    {
        self.poll_entries(buffers, now_ns, &mut |h: &Tensor, entries: &[NeighborEntry]| {
            let features: Vec<Tensor> = entries.iter().map(|e| e.feature.clone()).collect();
            aggregate(h, &features)
        })
    }

    /// Like [`RoundRunner::poll`], but the aggregate sees full buffer
    /// entries (ids, ages, sequence numbers) in ascending neighbor id.
    pub fn poll_entries<F>(
        &mut self,
        buffers: &mut RoundBuffers,
        now_ns: u64,
        aggregate: &mut F,
    ) -> Result<RoundStatus, AggregationError>
    where
        F: FnMut(&Tensor, &[NeighborEntry]) -> Result<Tensor, AggregationError>,
    {
        if self.is_finished() {
            return Ok(RoundStatus::Finished(self.feature.clone()));
        }
        let started = *self.round_started_ns.get_or_insert(now_ns);
        let buffer = buffers.round(self.round);
        let hood = resolve_neighborhood(&self.config, buffer, self.round, started, now_ns)?;
        let neighbors = match (&hood, self.config.mode) {
            (Neighborhood::Pending { .. }, _) => return Ok(RoundStatus::Waiting),
            (_, Mode::BestEffort { window_ns }) => {
                let everyone = buffer.missing(now_ns).is_empty();
                if !everyone && now_ns.saturating_sub(started) < window_ns {
                    return Ok(RoundStatus::Waiting);
                }
                hood.into_entries()
            }
            _ => hood.into_entries(),
        };
        self.feature = aggregate(&self.feature, &neighbors)?;
        self.round += 1;
        self.round_started_ns = None;
        self.published = false;
        if self.is_finished() {
            Ok(RoundStatus::Finished(self.feature.clone()))
        } else {
            Ok(RoundStatus::Advanced)
        }
    }
}

/// Transport-side hooks for [`run_rounds`].
pub trait RoundExchange {
    fn publish(&mut self, round: u8, feature: &Tensor) -> Result<(), AggregationError>;
    /// Lets time pass, delivering any arrivals into `buffers`, and returns
    /// the new local time.
    fn wait(&mut self, buffers: &mut RoundBuffers) -> Result<u64, AggregationError>;
    fn now_ns(&self) -> u64;
}

/// Runs all `L` rounds for one agent, starting from its encoder output.
pub fn run_rounds<X, F>(
    config: &AggregationConfig,
    encoded: Tensor,
    buffers: &mut RoundBuffers,
    exchange: &mut X,
    mut aggregate: F,
) -> Result<Tensor, AggregationError>
where
    X: RoundExchange,
    F: FnMut(&Tensor, &[Tensor]) -> Result<Tensor, AggregationError>,
{
    let mut runner = RoundRunner::new(*config, encoded)?;
    loop {
        if let Some((round, feature)) = runner.outgoing() {
            exchange.publish(round, &feature)?;
        }
        match runner.poll(buffers, exchange.now_ns(), &mut aggregate)? {
            RoundStatus::Finished(h) => return Ok(h),
            RoundStatus::Advanced => {}
            RoundStatus::Waiting => {
                exchange.wait(buffers)?;
            }
        }
    }
}

/// Whole-graph synchronous evaluation of the same recurrence: every agent
/// reduces its own feature with its neighbors' (ascending id) features from
/// the previous round.
pub fn centralized_rounds(
    kind: ReduceKind,
    adjacency: &[Vec<usize>],
    features: &[Tensor],
    rounds: u8,
) -> Result<Vec<Tensor>, AggregationError> {
    let mut h = features.to_vec();
    for _ in 0..rounds {
        h = adjacency
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                let mut sorted = nbrs.clone();
                sorted.sort_unstable();
                let ns: Vec<Tensor> = sorted.iter().map(|&j| h[j].clone()).collect();
                reduce_aggregate(kind, &h[i], &ns)
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Activation, Dense};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(data: &[f32]) -> Tensor {
        Tensor::vector(data.to_vec())
    }

    fn env(sender: AgentId, seq: u32, ts: u64, round: u8, data: &[f32]) -> MessageEnvelope {
        MessageEnvelope::from_tensor(sender, seq, ts, round, &v(data))
    }

    #[test]
    fn mean_of_self_and_neighbors() {
        let out = reduce_aggregate(ReduceKind::Mean, &v(&[5., 6.]), &[v(&[1., 2.]), v(&[3., 4.])])
            .unwrap();
        assert_eq!(out.data(), &[3., 4.]);
    }

    #[test]
    fn max_elementwise() {
        let out = reduce_aggregate(ReduceKind::Max, &v(&[0., 9.]), &[v(&[8., 1.])]).unwrap();
        assert_eq!(out.data(), &[8., 9.]);
    }

    #[test]
    fn empty_neighborhood_returns_self() {
        for kind in [ReduceKind::Sum, ReduceKind::Mean, ReduceKind::Max] {
            let out = reduce_aggregate(kind, &v(&[1.5, -2.]), &[]).unwrap();
            assert_eq!(out.data(), &[1.5, -2.]);
        }
    }

    #[test]
    fn reduce_rejects_mismatched_lengths() {
        let err = reduce_aggregate(ReduceKind::Sum, &v(&[1., 2.]), &[v(&[1.])]).unwrap_err();
        assert!(matches!(err, AggregationError::Shape(TensorError::Shape { .. })));
        assert_eq!(
            reduce_aggregate(ReduceKind::DiffSum, &v(&[1.]), &[]),
            Err(AggregationError::NeedsPairwiseNetwork)
        );
    }

    #[test]
    fn diff_sum_identity_network() {
        let g = MlpSpec::identity(2);
        let out = diff_sum_aggregate(&g, &v(&[1., 1.]), &[v(&[2., 3.]), v(&[0., 0.])]).unwrap();
        assert_eq!(out.data(), &[0., 1.]);
    }

    #[test]
    fn diff_sum_equal_neighbors_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layers = vec![
            Dense::random(8, 4, &mut rng).without_bias(),
            Dense::random(8, 8, &mut rng).without_bias(),
            Dense::random(3, 8, &mut rng).without_bias(),
        ];
        let g = MlpSpec::new(layers, Activation::Relu).unwrap();
        let f = v(&[0.3, -0.2, 1.0, 4.0]);
        let out = diff_sum_aggregate(&g, &f, &[f.clone(), f.clone()]).unwrap();
        assert_eq!(out.data(), &[0., 0., 0.]);
        let none = diff_sum_aggregate(&g, &f, &[]).unwrap();
        assert_eq!(none.data(), &[0., 0., 0.]);
    }

    #[test]
    fn diff_sum_matches_per_neighbor_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = MlpSpec::random(&[5, 16, 16, 5], Activation::Relu, &mut rng);
        let f: Vec<f32> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ns: Vec<Vec<f32>> = (0..3)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let tensors: Vec<Tensor> = ns.iter().cloned().map(Tensor::vector).collect();
        let out = diff_sum_aggregate(&g, &Tensor::vector(f.clone()), &tensors).unwrap();
        let mut expect = [0.0f64; 5];
        for n in &ns {
            let d: Vec<f32> = n.iter().zip(&f).map(|(a, b)| a - b).collect();
            let m = crate::tensor::mlp_forward(&g, &Tensor::vector(d)).unwrap();
            for (e, x) in expect.iter_mut().zip(m.data()) {
                *e += *x as f64;
            }
        }
        for (a, b) in out.data().iter().zip(&expect) {
            assert!((*a as f64 - b).abs() < 1e-6);
        }
    }

    #[test]
    fn reductions_are_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = MlpSpec::random(&[4, 8, 4], Activation::Relu, &mut rng);
        for _ in 0..200 {
            let f = Tensor::vector((0..4).map(|_| rng.random_range(-4i32..4) as f32).collect());
            let mut ns: Vec<Tensor> = (0..rng.random_range(0..6))
                .map(|_| Tensor::vector((0..4).map(|_| rng.random_range(-4i32..4) as f32).collect()))
                .collect();
            let before: Vec<Tensor> = [ReduceKind::Sum, ReduceKind::Mean, ReduceKind::Max]
                .iter()
                .map(|&k| reduce_aggregate(k, &f, &ns).unwrap())
                .collect();
            let ds = diff_sum_aggregate(&g, &f, &ns).unwrap();
            ns.shuffle(&mut rng);
            for (k, b) in [ReduceKind::Sum, ReduceKind::Mean, ReduceKind::Max].iter().zip(&before) {
                assert_eq!(&reduce_aggregate(*k, &f, &ns).unwrap(), b);
            }
            let ds2 = diff_sum_aggregate(&g, &f, &ns).unwrap();
            for (a, b) in ds.data().iter().zip(ds2.data()) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn broadcast_rows() {
        let out = broadcast_aggregate(&v(&[1., 2.]), &[v(&[3., 4.])]).unwrap();
        assert_eq!(out.shape(), &[1, 4]);
        assert_eq!(out.data(), &[1., 2., 3., 4.]);

        let f = v(&[0.; 4]);
        let out = broadcast_aggregate(&f, &[v(&[1.; 4]), v(&[2.; 4]), v(&[3.; 4])]).unwrap();
        assert_eq!(out.shape(), &[3, 8]);

        let out = broadcast_aggregate(&v(&[1.]), &[v(&[7.]), v(&[7.])]).unwrap();
        assert_eq!(out.row(0), out.row(1));

        assert_eq!(
            broadcast_aggregate(&v(&[1.]), &[]),
            Err(AggregationError::EmptyBroadcast)
        );
    }

    #[test]
    fn broadcast_ignores_arrival_order() {
        let mut a = NeighborBuffer::new([2, 5, 9], u64::MAX);
        let mut b = a.clone();
        let msgs = [env(9, 1, 0, 0, &[9.]), env(2, 1, 0, 0, &[2.]), env(5, 1, 0, 0, &[5.])];
        for m in &msgs {
            a.insert(m.clone(), 0).unwrap();
        }
        for m in msgs.iter().rev() {
            b.insert(m.clone(), 0).unwrap();
        }
        let fa: Vec<Tensor> = a.snapshot(0).into_iter().map(|e| e.feature).collect();
        let fb: Vec<Tensor> = b.snapshot(0).into_iter().map(|e| e.feature).collect();
        let self_f = v(&[0.]);
        let ra = broadcast_aggregate(&self_f, &fa).unwrap();
        assert_eq!(ra, broadcast_aggregate(&self_f, &fb).unwrap());
        assert_eq!(ra.data(), &[0., 2., 0., 5., 0., 9.]);
    }

    fn config(mode: Mode, min_neighbors: usize) -> AggregationConfig {
        AggregationConfig {
            paradigm: Paradigm::Reduction(ReduceKind::Mean),
            mode,
            min_neighbors,
            rounds: 1,
        }
    }

    #[test]
    fn blocking_pending_then_timeout() {
        let cfg = config(Mode::Blocking { timeout_ns: 100 }, 0);
        let mut buf = NeighborBuffer::new([1, 2, 3], u64::MAX);
        buf.insert(env(1, 1, 0, 0, &[1.]), 0).unwrap();
        buf.insert(env(2, 1, 0, 0, &[2.]), 0).unwrap();
        assert_eq!(
            resolve_neighborhood(&cfg, &mut buf, 0, 0, 50).unwrap(),
            Neighborhood::Pending { missing: vec![3] }
        );
        assert_eq!(
            resolve_neighborhood(&cfg, &mut buf, 0, 0, 101),
            Err(AggregationError::Timeout { round: 0, missing: vec![3] })
        );
        buf.insert(env(3, 1, 0, 0, &[3.]), 0).unwrap();
        assert!(matches!(
            resolve_neighborhood(&cfg, &mut buf, 0, 0, 101).unwrap(),
            Neighborhood::Ready(e) if e.len() == 3
        ));
    }

    #[test]
    fn best_effort_policies() {
        let mut buf = NeighborBuffer::new([1, 2, 3], u64::MAX);
        let single = config(Mode::BestEffort { window_ns: 0 }, 0);
        assert_eq!(
            resolve_neighborhood(&single, &mut buf, 0, 0, 0).unwrap(),
            Neighborhood::SingleRobot
        );
        buf.insert(env(2, 1, 0, 0, &[2.]), 0).unwrap();
        let one = config(Mode::BestEffort { window_ns: 0 }, 1);
        let hood = resolve_neighborhood(&one, &mut buf, 0, 0, 0).unwrap();
        assert_eq!(hood.features(), vec![v(&[2.])]);
        let two = config(Mode::BestEffort { window_ns: 0 }, 2);
        assert_eq!(
            resolve_neighborhood(&two, &mut buf, 0, 0, 0),
            Err(AggregationError::InsufficientNeighbors { live: 1, required: 2 })
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(Mode::Blocking { timeout_ns: 0 }, 0);
        assert!(cfg.validate(3).is_err());
        cfg.mode = Mode::Blocking { timeout_ns: 1 };
        assert!(cfg.validate(3).is_ok());
        cfg.min_neighbors = 3;
        assert!(cfg.validate(3).is_err());
        cfg.min_neighbors = 0;
        cfg.rounds = 0;
        assert!(cfg.validate(3).is_err());
    }

    #[test]
    fn round_buffers_keep_rounds_apart() {
        let mut rb = RoundBuffers::new(&[1], 2, u64::MAX);
        rb.insert(env(1, 1, 0, 0, &[10.]), 0).unwrap();
        rb.insert(env(1, 2, 0, 1, &[20.]), 0).unwrap();
        assert_eq!(rb.round(0).stored_seq(1), Some(1));
        assert_eq!(rb.round(1).stored_seq(1), Some(2));
        assert_eq!(
            rb.insert(env(1, 3, 0, 2, &[0.]), 0),
            Err(AggregationError::RoundOutOfRange { round: 2, rounds: 2 })
        );
    }

    /// Exchange with no peers: time just moves forward.
    struct Silent {
        now: u64,
    }

    impl RoundExchange for Silent {
        fn publish(&mut self, _: u8, _: &Tensor) -> Result<(), AggregationError> {
            Ok(())
        }
        fn wait(&mut self, _: &mut RoundBuffers) -> Result<u64, AggregationError> {
            self.now += 10;
            Ok(self.now)
        }
        fn now_ns(&self) -> u64 {
            self.now
        }
    }

    #[test]
    fn single_robot_rounds_keep_feature() {
        let cfg = config(Mode::BestEffort { window_ns: 30 }, 0);
        let mut buffers = RoundBuffers::new(&[], 1, u64::MAX);
        let f = v(&[1., 2., 3.]);
        let h = run_rounds(&cfg, f.clone(), &mut buffers, &mut Silent { now: 0 }, |s, n| {
            reduce_aggregate(ReduceKind::Sum, s, n)
        })
        .unwrap();
        assert_eq!(h, f);
    }

    #[test]
    fn blocking_rounds_time_out_naming_missing() {
        let mut cfg = config(Mode::Blocking { timeout_ns: 25 }, 0);
        cfg.rounds = 2;
        let mut buffers = RoundBuffers::new(&[4, 6], 2, u64::MAX);
        let err = run_rounds(&cfg, v(&[0.]), &mut buffers, &mut Silent { now: 0 }, |s, n| {
            reduce_aggregate(ReduceKind::Sum, s, n)
        })
        .unwrap_err();
        assert_eq!(err, AggregationError::Timeout { round: 0, missing: vec![4, 6] });
    }

    #[test]
    fn centralized_line_graph_two_rounds() {
        // a - b - c with scalar features (1, 0, 0).
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        let f = vec![v(&[1.]), v(&[0.]), v(&[0.])];
        let h = centralized_rounds(ReduceKind::Sum, &adj, &f, 2).unwrap();
        // round 1: a=1, b=1, c=0; round 2: a=2, b=2, c=1
        assert_eq!(h[0].data(), &[2.]);
        assert_eq!(h[1].data(), &[2.]);
        assert_eq!(h[2].data(), &[1.]);
    }
}
