//! Three-stage encode / aggregate / decode pipeline.
//!
//! [`run_pipeline`] gives each stage its own thread. Stages hand items on
//! through depth-1 slots, so while the decoder works on item `n - 2` the
//! aggregator can hold `n - 1` and the encoder `n`. The encoder admits a new
//! observation once per bottleneck period (the slowest stage's last measured
//! duration), so the output period tracks `max(T_e, T_m, T_d)` and an item's
//! latency tracks `T_e + T_m + T_d`. [`run_sequential`] runs the same stages
//! back to back on one thread.

use std::error::Error as StdError;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::tensor::Tensor;

pub const WARMUP_ITEMS: usize = 2;

pub type StageResult = Result<Tensor, Box<dyn StdError + Send + Sync>>;
type StageFn = dyn Fn(&Tensor) -> StageResult + Send + Sync;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("stage {stage} failed on item {item}: {message}")]
    Stage {
        stage: String,
        item: usize,
        message: String,
    },
    #[error("need at least {min} items, got {got}")]
    TooFewItems { got: usize, min: usize },
    #[error("only {processed} items came out, stats need {min}")]
    TooFewProcessed { processed: usize, min: usize },
    #[error("arrival interval must be positive")]
    ZeroInterval,
    #[error("stage thread {0} panicked")]
    Panicked(&'static str),
}

/// A pure tensor transformation plus an optional artificial duration: the
/// stage does not hand its output on before `delay` has elapsed since it
/// started.
#[derive(Clone)]
pub struct Stage {
    name: String,
    f: Arc<StageFn>,
    delay: Duration,
}

impl std::fmt::Debug for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stage")
            .field("name", &self.name)
            .field("delay", &self.delay)
            .finish_non_exhaustive()
    }
}

impl Stage {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&Tensor) -> StageResult + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            delay: Duration::ZERO,
        }
    }

    pub fn identity(name: impl Into<String>) -> Self {
        Self::new(name, |x| Ok(x.clone()))
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn delay(&self) -> Duration {
        self.delay
    }

    fn run(&self, item: usize, x: &Tensor) -> (Result<Tensor, PipelineError>, Duration) {
        let start = Instant::now();
        let out = (self.f)(x).map_err(|e| PipelineError::Stage {
            stage: self.name.clone(),
            item,
            message: e.to_string(),
        });
        let deadline = start + self.delay;
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        }
        (out, start.elapsed())
    }
}

/// How observations reach the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ingress {
    /// The encoder pulls the next observation whenever it is ready.
    #[default]
    OnDemand,
    /// Observations arrive on their own clock into a keep-latest slot; an
    /// arrival that overwrites one the encoder never took counts as a drop.
    Periodic(Duration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineItem {
    /// Position in the observation stream.
    pub index: usize,
    pub output: Result<Tensor, PipelineError>,
    pub latency: Duration,
    /// Egress time relative to the start of the run.
    pub egress: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineStats {
    pub period_mean_ns: f64,
    pub period_std_ns: f64,
    pub latency_mean_ns: f64,
    pub latency_std_ns: f64,
    pub items_processed: usize,
    pub drops: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub mode: String,
    pub agent_id: u16,
    pub period_mean_ms: f64,
    pub period_std_ms: f64,
    pub latency_mean_ms: f64,
    pub latency_std_ms: f64,
    pub items: usize,
    pub drops: u64,
}

impl PipelineStats {
    pub fn period_mean_ms(&self) -> f64 {
        self.period_mean_ns / 1e6
    }

    pub fn latency_mean_ms(&self) -> f64 {
        self.latency_mean_ns / 1e6
    }

    pub fn row(&self, mode: &str, agent_id: u16) -> StatsRow {
        StatsRow {
            mode: mode.to_string(),
            agent_id,
            period_mean_ms: self.period_mean_ns / 1e6,
            period_std_ms: self.period_std_ns / 1e6,
            latency_mean_ms: self.latency_mean_ns / 1e6,
            latency_std_ms: self.latency_std_ns / 1e6,
            items: self.items_processed,
            drops: self.drops,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    /// In observation order.
    pub items: Vec<PipelineItem>,
    pub stats: PipelineStats,
}

impl PipelineRun {
    pub fn errors(&self) -> impl Iterator<Item = &PipelineError> {
        self.items.iter().filter_map(|i| i.output.as_ref().err())
    }

    /// Successful outputs in order.
    pub fn outputs(&self) -> Vec<&Tensor> {
        self.items.iter().filter_map(|i| i.output.as_ref().ok()).collect()
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(items: &[PipelineItem], drops: u64) -> Result<PipelineStats, PipelineError> {
    let min = WARMUP_ITEMS + 1;
    if items.len() < min {
        return Err(PipelineError::TooFewProcessed {
            processed: items.len(),
            min,
        });
    }
    let periods: Vec<f64> = items[WARMUP_ITEMS..]
        .iter()
        .zip(&items[WARMUP_ITEMS - 1..])
        .map(|(b, a)| (b.egress - a.egress).as_nanos() as f64)
        .collect();
    let latencies: Vec<f64> = items[WARMUP_ITEMS..]
        .iter()
        .filter(|i| i.output.is_ok())
        .map(|i| i.latency.as_nanos() as f64)
        .collect();
    let (period_mean_ns, period_std_ns) = mean_std(&periods);
    let (latency_mean_ns, latency_std_ns) = mean_std(&latencies);
    Ok(PipelineStats {
        period_mean_ns,
        period_std_ns,
        latency_mean_ns,
        latency_std_ns,
        items_processed: items.len(),
        drops,
    })
}

struct Slot {
    latest: Option<(usize, Instant)>,
    next: usize,
    finished: bool,
    drops: u64,
}

/// Observation source shared by the feeder and the consuming stage.
struct Source {
    mode: Ingress,
    len: usize,
    slot: Mutex<Slot>,
    ready: Condvar,
}

impl Source {
    fn new(mode: Ingress, len: usize) -> Arc<Self> {
        Arc::new(Self {
            mode,
            len,
            slot: Mutex::new(Slot {
                latest: None,
                next: 0,
                finished: false,
                drops: 0,
            }),
            ready: Condvar::new(),
        })
    }

    fn spawn_feeder(self: &Arc<Self>, t0: Instant) -> Option<thread::JoinHandle<()>> {
        let Ingress::Periodic(interval) = self.mode else {
            return None;
        };
        let src = self.clone();
        Some(thread::spawn(move || {
            for k in 0..src.len {
                let at = t0 + interval * k as u32;
                let now = Instant::now();
                if at > now {
                    thread::sleep(at - now);
                }
                let mut s = src.slot.lock().unwrap();
                if s.latest.replace((k, Instant::now())).is_some() {
                    s.drops += 1;
                }
                src.ready.notify_all();
            }
            src.slot.lock().unwrap().finished = true;
            src.ready.notify_all();
        }))
    }

    /// Next observation index and its arrival time, or `None` when the
    /// stream is exhausted.
    fn take(&self) -> Option<(usize, Instant)> {
        let mut s = self.slot.lock().unwrap();
        match self.mode {
            Ingress::OnDemand => {
                if s.next >= self.len {
                    return None;
                }
                s.next += 1;
                Some((s.next - 1, Instant::now()))
            }
            Ingress::Periodic(_) => loop {
                if let Some(v) = s.latest.take() {
                    return Some(v);
                }
                if s.finished {
                    return None;
                }
                s = self.ready.wait(s).unwrap();
            },
        }
    }

    fn drops(&self) -> u64 {
        self.slot.lock().unwrap().drops
    }
}

fn check_inputs(inputs: &[Tensor], ingress: Ingress) -> Result<(), PipelineError> {
    let min = WARMUP_ITEMS + 1;
    if inputs.len() < min {
        return Err(PipelineError::TooFewItems {
            got: inputs.len(),
            min,
        });
    }
    if ingress == Ingress::Periodic(Duration::ZERO) {
        return Err(PipelineError::ZeroInterval);
    }
    Ok(())
}

struct Handoff {
    index: usize,
    ingress: Instant,
    value: Result<Tensor, PipelineError>,
}

fn sleep_until(t: Instant) {
    let now = Instant::now();
    if t > now {
        thread::sleep(t - now);
    }
}

fn relay(
    stage: Stage,
    rx: Receiver<Handoff>,
    tx: SyncSender<Handoff>,
    last: Arc<AtomicU64>,
) -> impl FnOnce() {
    move || {
        for h in rx {
            let value = match h.value {
                Ok(x) => {
                    let (out, took) = stage.run(h.index, &x);
                    last.store(took.as_nanos() as u64, Ordering::Relaxed);
                    out
                }
                Err(e) => Err(e),
            };
            if tx
                .send(Handoff {
                    index: h.index,
                    ingress: h.ingress,
                    value,
                })
                .is_err()
            {
                break;
            }
        }
    }
}

/// Runs the three stages concurrently over `inputs`.
pub fn run_pipeline(
    encoder: &Stage,
    aggregator: &Stage,
    decoder: &Stage,
    inputs: &[Tensor],
    ingress: Ingress,
) -> Result<PipelineRun, PipelineError> {
    check_inputs(inputs, ingress)?;
    let durations: [Arc<AtomicU64>; 3] = Default::default();
    let completed = Arc::new((Mutex::new(0usize), Condvar::new()));
    let (tx_e, rx_m) = sync_channel::<Handoff>(1);
    let (tx_m, rx_d) = sync_channel::<Handoff>(1);
    let t0 = Instant::now();
    let source = Source::new(ingress, inputs.len());
    let feeder = source.spawn_feeder(t0);
    let inputs: Arc<Vec<Tensor>> = Arc::new(inputs.to_vec());

    let enc = {
        let stage = encoder.clone();
        let durations = durations.clone();
        let completed = completed.clone();
        let source = source.clone();
        let inputs = inputs.clone();
        thread::spawn(move || {
            let mut not_before: Option<Instant> = None;
            let mut primed = false;
            loop {
                if let Some(t) = not_before {
                    sleep_until(t);
                }
                let Some((index, arrived)) = source.take() else {
                    break;
                };
                let started = Instant::now();
                let (value, took) = stage.run(index, &inputs[index]);
                durations[0].store(took.as_nanos() as u64, Ordering::Relaxed);
                let ingress = match ingress {
                    Ingress::OnDemand => started,
                    Ingress::Periodic(_) => arrived,
                };
                if tx_e.send(Handoff { index, ingress, value }).is_err() {
                    break;
                }
                if !primed {
                    // Let the first item clear every stage so each one has
                    // a measured duration before pacing starts.
                    let (lock, cv) = &*completed;
                    let mut done = lock.lock().unwrap();
                    while *done == 0 {
                        done = cv.wait(done).unwrap();
                    }
                    primed = true;
                }
                let period = durations
                    .iter()
                    .map(|d| d.load(Ordering::Relaxed))
                    .max()
                    .unwrap_or(0);
                not_before = Some(started + Duration::from_nanos(period));
            }
        })
    };
    let agg = thread::spawn(relay(
        aggregator.clone(),
        rx_m,
        tx_m,
        durations[1].clone(),
    ));
    let dec = {
        let stage = decoder.clone();
        let last = durations[2].clone();
        let completed = completed.clone();
        thread::spawn(move || {
            let mut items = Vec::new();
            for h in rx_d {
                let value = match h.value {
                    Ok(x) => {
                        let (out, took) = stage.run(h.index, &x);
                        last.store(took.as_nanos() as u64, Ordering::Relaxed);
                        out
                    }
                    Err(e) => Err(e),
                };
                let now = Instant::now();
                items.push(PipelineItem {
                    index: h.index,
                    output: value,
                    latency: now - h.ingress,
                    egress: now - t0,
                });
                let (lock, cv) = &*completed;
                *lock.lock().unwrap() += 1;
                cv.notify_all();
            }
            items
        })
    };

    enc.join().map_err(|_| PipelineError::Panicked("encoder"))?;
    agg.join().map_err(|_| PipelineError::Panicked("aggregator"))?;
    let items = dec.join().map_err(|_| PipelineError::Panicked("decoder"))?;
    if let Some(f) = feeder {
        f.join().map_err(|_| PipelineError::Panicked("feeder"))?;
    }
    let stats = summarize(&items, source.drops())?;
    Ok(PipelineRun { items, stats })
}

/// Runs the stages back to back on the calling thread.
pub fn run_sequential(
    encoder: &Stage,
    aggregator: &Stage,
    decoder: &Stage,
    inputs: &[Tensor],
    ingress: Ingress,
) -> Result<PipelineRun, PipelineError> {
    check_inputs(inputs, ingress)?;
    let t0 = Instant::now();
    let source = Source::new(ingress, inputs.len());
    let feeder = source.spawn_feeder(t0);
    let mut items = Vec::new();
    while let Some((index, arrived)) = source.take() {
        let started = Instant::now();
        let mut value = Ok(inputs[index].clone());
        for stage in [encoder, aggregator, decoder] {
            value = match value {
                Ok(x) => stage.run(index, &x).0,
                Err(e) => Err(e),
            };
        }
        let now = Instant::now();
        let ingress_at = match ingress {
            Ingress::OnDemand => started,
            Ingress::Periodic(_) => arrived,
        };
        items.push(PipelineItem {
            index,
            output: value,
            latency: now - ingress_at,
            egress: now - t0,
        });
    }
    if let Some(f) = feeder {
        f.join().map_err(|_| PipelineError::Panicked("feeder"))?;
    }
    let stats = summarize(&items, source.drops())?;
    Ok(PipelineRun { items, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(x: u64) -> Duration {
        Duration::from_millis(x)
    }

    fn inputs(n: usize) -> Vec<Tensor> {
        (0..n).map(|i| Tensor::vector(vec![i as f32, 1.0])).collect()
    }

    fn stages(d: [u64; 3]) -> [Stage; 3] {
        [
            Stage::new("encode", |x| Ok(x.map(|v| v * 2.0))).with_delay(ms(d[0])),
            Stage::new("aggregate", |x| Ok(x.map(|v| v + 1.0))).with_delay(ms(d[1])),
            Stage::new("decode", |x| Ok(x.map(|v| v * v))).with_delay(ms(d[2])),
        ]
    }

    #[test]
    fn identity_pipeline_keeps_order() {
        let id = Stage::identity("id");
        let xs = inputs(3);
        let run = run_pipeline(&id, &id, &id, &xs, Ingress::OnDemand).unwrap();
        assert_eq!(run.outputs(), xs.iter().collect::<Vec<_>>());
        let seq = run_sequential(&id, &id, &id, &xs, Ingress::OnDemand).unwrap();
        assert_eq!(seq.outputs(), run.outputs());
    }

    #[test]
    fn encoder_bound_period() {
        let [e, m, d] = stages([30, 10, 10]);
        let run = run_pipeline(&e, &m, &d, &inputs(12), Ingress::OnDemand).unwrap();
        let p = run.stats.period_mean_ms();
        assert!((30.0..=34.5).contains(&p), "period {p}");
        let l = run.stats.latency_mean_ms();
        assert!((50.0..=57.5).contains(&l), "latency {l}");
    }

    #[test]
    fn parallel_beats_sequential() {
        let [e, m, d] = stages([5, 12, 8]);
        let xs = inputs(15);
        let par = run_pipeline(&e, &m, &d, &xs, Ingress::OnDemand).unwrap();
        let seq = run_sequential(&e, &m, &d, &xs, Ingress::OnDemand).unwrap();
        assert!(par.stats.period_mean_ns < seq.stats.period_mean_ns);
        assert_eq!(par.outputs(), seq.outputs());
    }

    #[test]
    fn stage_errors_skip_the_item() {
        let bad = Stage::new("aggregate", |x| {
            if x.data()[0] == 4.0 {
                Err("bad item".into())
            } else {
                Ok(x.clone())
            }
        });
        let [e, _, d] = stages([0, 0, 0]);
        let run = run_pipeline(&e, &bad, &d, &inputs(6), Ingress::OnDemand).unwrap();
        assert_eq!(run.items.len(), 6);
        let errs: Vec<_> = run.errors().collect();
        assert_eq!(
            errs,
            vec![&PipelineError::Stage {
                stage: "aggregate".into(),
                item: 2,
                message: "bad item".into()
            }]
        );
        assert_eq!(run.outputs().len(), 5);
    }

    #[test]
    fn fast_ingress_drops_but_keeps_order() {
        let [e, m, d] = stages([8, 2, 2]);
        let run = run_pipeline(&e, &m, &d, &inputs(40), Ingress::Periodic(ms(2))).unwrap();
        assert!(run.stats.drops > 0);
        assert_eq!(run.items.len() as u64 + run.stats.drops, 40);
        assert!(run.items.windows(2).all(|w| w[0].index < w[1].index));
    }

    #[test]
    fn too_few_items() {
        let id = Stage::identity("id");
        assert_eq!(
            run_pipeline(&id, &id, &id, &inputs(2), Ingress::OnDemand),
            Err(PipelineError::TooFewItems { got: 2, min: 3 })
        );
    }
}
