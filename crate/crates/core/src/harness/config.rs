use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::aggregation::{AggregationConfig, Mode, Paradigm, ReduceKind};
use crate::control::{ActionBounds, Sampling, UnicycleState};
use crate::mesh::MeshOptions;
use crate::netsim::{Contention, LinkModel, MediumModel, Topology, NS_PER_MS};
use crate::wire::{self, AgentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Assignment,
    Control,
    Timing,
    Comms,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Assignment => "assignment",
            Task::Control => "control",
            Task::Timing => "timing",
            Task::Comms => "comms",
        }
    }
}

fn default_team_size() -> usize {
    5
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task: Task,
    pub seed: u64,
    #[serde(default = "default_team_size")]
    pub team_size: usize,
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub aggregation: AggregationSection,
    #[serde(default)]
    pub assignment: AssignmentSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub timing: TimingSection,
    #[serde(default)]
    pub comms: CommsSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    #[default]
    FullMesh,
    Edges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub topology: TopologyKind,
    pub edges: Vec<[AgentId; 2]>,
    pub latency_ms: f64,
    pub jitter_ms: f64,
    pub loss_pct: f64,
    /// Bytes per second per node.
    pub per_node_bandwidth: f64,
    pub contention: Contention,
    pub max_backlog_ms: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            topology: TopologyKind::FullMesh,
            edges: Vec::new(),
            latency_ms: 4.8,
            jitter_ms: 0.6,
            loss_pct: 0.3,
            per_node_bandwidth: crate::netsim::DEFAULT_BANDWIDTH_BPS,
            contention: Contention::None,
            max_backlog_ms: 100.0,
        }
    }
}

impl NetworkSection {
    pub fn link(&self, seed: u64) -> LinkModel {
        LinkModel::from_millis(self.latency_ms, self.jitter_ms, self.loss_pct, seed)
    }

    pub fn medium(&self) -> MediumModel {
        MediumModel {
            per_node_bandwidth_bps: self.per_node_bandwidth,
            envelope_overhead_bytes: wire::header_len(1),
            contention: self.contention,
            max_backlog_ns: (self.max_backlog_ms * NS_PER_MS as f64).round() as u64,
        }
    }

    pub fn topology(&self, team_size: usize, seed: u64) -> Result<Topology, ConfigError> {
        let link = self.link(seed);
        match self.topology {
            TopologyKind::FullMesh => Ok(Topology::full_mesh(team_size, link)),
            TopologyKind::Edges => Topology::from_edges(
                0..team_size as AgentId,
                self.edges.iter().map(|&[a, b]| (a, b)),
                link,
            )
            .map_err(|e| ConfigError::new("network.edges", e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParadigmKind {
    #[default]
    Reduction,
    Broadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Blocking,
    BestEffort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggregationSection {
    pub paradigm: ParadigmKind,
    pub kind: ReduceKind,
    pub mode: ModeKind,
    /// Blocking timeout, or the best-effort gather window.
    pub timeout_ms: f64,
    pub min_neighbors: usize,
    pub rounds: u8,
    pub poll_interval_ms: f64,
    pub staleness_ms: f64,
    /// Zero disables retransmission.
    pub republish_ms: f64,
}

impl Default for AggregationSection {
    fn default() -> Self {
        Self {
            paradigm: ParadigmKind::Reduction,
            kind: ReduceKind::Mean,
            mode: ModeKind::Blocking,
            timeout_ms: 200.0,
            min_neighbors: 0,
            rounds: 1,
            poll_interval_ms: 1.0,
            staleness_ms: 500.0,
            republish_ms: 20.0,
        }
    }
}

fn ms_to_ns(ms: f64) -> u64 {
    (ms * NS_PER_MS as f64).round() as u64
}

impl AggregationSection {
    pub fn config(&self) -> AggregationConfig {
        let t = ms_to_ns(self.timeout_ms);
        AggregationConfig {
            paradigm: match self.paradigm {
                ParadigmKind::Reduction => Paradigm::Reduction(self.kind),
                ParadigmKind::Broadcast => Paradigm::Broadcast,
            },
            mode: match self.mode {
                ModeKind::Blocking => Mode::Blocking { timeout_ns: t },
                ModeKind::BestEffort => Mode::BestEffort { window_ns: t },
            },
            min_neighbors: self.min_neighbors,
            rounds: self.rounds,
        }
    }

    pub fn mesh(&self, message_budget_bytes: Option<usize>) -> MeshOptions {
        MeshOptions {
            poll_interval_ns: ms_to_ns(self.poll_interval_ms),
            staleness_ns: ms_to_ns(self.staleness_ms),
            message_budget_bytes,
            republish_ns: (self.republish_ms > 0.0).then(|| ms_to_ns(self.republish_ms).max(1)),
            ..MeshOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    #[default]
    Random,
    Inline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentModeKind {
    #[default]
    Expert,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssignmentSection {
    pub n_tests: usize,
    pub cost_source: CostSource,
    pub cost_range: [f32; 2],
    pub costs: Vec<Vec<f32>>,
    pub mode: AssignmentModeKind,
    pub feature_dim: usize,
    pub message_budget_bytes: Option<usize>,
    pub encoder_weights: Option<PathBuf>,
    pub attention_weights: Option<PathBuf>,
    pub decoder_weights: Option<PathBuf>,
}

impl Default for AssignmentSection {
    fn default() -> Self {
        Self {
            n_tests: 20,
            cost_source: CostSource::Random,
            cost_range: [1.0, 10.0],
            costs: Vec::new(),
            mode: AssignmentModeKind::Expert,
            feature_dim: crate::assignment::DEFAULT_FEATURE_DIM,
            message_budget_bytes: None,
            encoder_weights: None,
            attention_weights: None,
            decoder_weights: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    Scripted,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub runs: usize,
    /// `[x, y, theta]` per robot; empty places robots in parallel lanes.
    pub starts: Vec<[f64; 3]>,
    pub goals: Vec<[f64; 2]>,
    pub controller: ControllerKind,
    pub sampling: Sampling,
    pub control_hz: f64,
    pub success_radius: f64,
    pub collision_radius: f64,
    pub max_steps: usize,
    pub bounds: ActionBounds,
    pub trajectory: bool,
    pub message_budget_bytes: Option<usize>,
    pub encoder_weights: Option<PathBuf>,
    pub message_weights: Option<PathBuf>,
    pub decoder_weights: Option<PathBuf>,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            runs: 20,
            starts: Vec::new(),
            goals: Vec::new(),
            controller: ControllerKind::Scripted,
            sampling: Sampling::Stochastic,
            control_hz: 20.0,
            success_radius: 0.15,
            collision_radius: 0.30,
            max_steps: 600,
            bounds: ActionBounds::default(),
            trajectory: false,
            message_budget_bytes: None,
            encoder_weights: None,
            message_weights: None,
            decoder_weights: None,
        }
    }
}

impl ControlSection {
    /// Start states and goals for `team_size` robots.
    pub fn layout(&self, team_size: usize) -> (Vec<UnicycleState>, Vec<[f64; 2]>) {
        if self.starts.is_empty() {
            let starts = (0..team_size)
                .map(|i| UnicycleState::at(0.0, i as f64, 0.0))
                .collect();
            let goals = (0..team_size).map(|i| [3.0, i as f64]).collect();
            return (starts, goals);
        }
        let starts = self
            .starts
            .iter()
            .map(|&[x, y, t]| UnicycleState::at(x, y, t))
            .collect();
        (starts, self.goals.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSection {
    /// Encoder, aggregator and decoder durations.
    pub delays_ms: [f64; 3],
    pub items: usize,
    /// Observation arrival interval; absent means the encoder pulls.
    pub ingress_interval_ms: Option<f64>,
    pub agent_id: AgentId,
}

impl Default for TimingSection {
    fn default() -> Self {
        Self {
            delays_ms: [10.0, 30.0, 20.0],
            items: 50,
            ingress_interval_ms: None,
            agent_id: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommsSection {
    pub team_sizes: Vec<usize>,
    pub payload_bytes: usize,
    pub offered_hz: f64,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub link_rate_hz: f64,
    pub link_duration_s: f64,
}

impl Default for CommsSection {
    fn default() -> Self {
        Self {
            team_sizes: vec![5, 10, 30, 50],
            payload_bytes: 128,
            offered_hz: 200.0,
            duration_s: 5.0,
            warmup_s: 1.0,
            link_rate_hz: 200.0,
            link_duration_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub message_budgets: Vec<usize>,
    pub team_sizes: Vec<usize>,
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(path, message()))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), ConfigError> {
    check(v.is_finite() && v >= 0.0, path, || format!("{v} must be finite and >= 0"))
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    check(v.is_finite() && v > 0.0, path, || format!("{v} must be finite and > 0"))
}

fn weights_exist(base: &Path, path: &str, file: &Option<PathBuf>) -> Result<(), ConfigError> {
    if let Some(f) = file {
        let p = base.join(f);
        check(p.is_file(), path, || format!("weight file {} not found", p.display()))?;
    }
    Ok(())
}

fn budget(path: &str, b: Option<usize>) -> Result<(), ConfigError> {
    if let Some(b) = b {
        check(b >= 4, path, || format!("{b} B is below one f32 component (4 B)"))?;
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<config>".into());
            ConfigError::new(path, message)
        })
    }

    /// Checks every field used by the selected task. `base` is the
    /// directory that relative weight paths resolve against.
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        check(self.team_size >= 1, "team_size", || "must be at least 1".into())?;
        check(self.team_size <= u16::MAX as usize, "team_size", || {
            format!("{} exceeds the agent id range", self.team_size)
        })?;

        let n = &self.network;
        non_negative("network.latency_ms", n.latency_ms)?;
        non_negative("network.jitter_ms", n.jitter_ms)?;
        check(
            (0.0..=100.0).contains(&n.loss_pct),
            "network.loss_pct",
            || format!("{} must lie in [0, 100]", n.loss_pct),
        )?;
        positive("network.per_node_bandwidth", n.per_node_bandwidth)?;
        non_negative("network.max_backlog_ms", n.max_backlog_ms)?;
        if n.topology == TopologyKind::Edges {
            n.topology(self.team_size, 0)?;
        }

        let a = &self.aggregation;
        check(a.rounds >= 1, "aggregation.rounds", || "must be at least 1".into())?;
        positive("aggregation.poll_interval_ms", a.poll_interval_ms)?;
        positive("aggregation.staleness_ms", a.staleness_ms)?;
        check(
            a.republish_ms.is_finite() && a.republish_ms >= 0.0,
            "aggregation.republish_ms",
            || format!("{} must be zero or positive", a.republish_ms),
        )?;
        match a.mode {
            ModeKind::Blocking => positive("aggregation.timeout_ms", a.timeout_ms)?,
            ModeKind::BestEffort => non_negative("aggregation.timeout_ms", a.timeout_ms)?,
        }
        check(
            a.min_neighbors < self.team_size,
            "aggregation.min_neighbors",
            || format!("{} exceeds team size minus one", a.min_neighbors),
        )?;

        match self.task {
            Task::Assignment => self.validate_assignment(base)?,
            Task::Control => self.validate_control(base)?,
            Task::Timing => {
                let t = &self.timing;
                for d in t.delays_ms {
                    non_negative("timing.delays_ms", d)?;
                }
                check(t.items >= 3, "timing.items", || format!("{} is below 3", t.items))?;
                if let Some(i) = t.ingress_interval_ms {
                    positive("timing.ingress_interval_ms", i)?;
                }
            }
            Task::Comms => {
                let c = &self.comms;
                check(!c.team_sizes.is_empty(), "comms.team_sizes", || "is empty".into())?;
                for &s in &c.team_sizes {
                    check(s >= 2, "comms.team_sizes", || format!("team size {s} is below 2"))?;
                }
                check(c.payload_bytes >= 1, "comms.payload_bytes", || "must be positive".into())?;
                positive("comms.offered_hz", c.offered_hz)?;
                positive("comms.duration_s", c.duration_s)?;
                non_negative("comms.warmup_s", c.warmup_s)?;
                check(c.warmup_s < c.duration_s, "comms.warmup_s", || {
                    format!("{} must be shorter than duration_s", c.warmup_s)
                })?;
                positive("comms.link_rate_hz", c.link_rate_hz)?;
                check(
                    c.link_rate_hz * c.link_duration_s >= 100.0,
                    "comms.link_duration_s",
                    || "link measurement needs at least 100 samples".into(),
                )?;
            }
        }

        for &b in &self.sweep.message_budgets {
            budget("sweep.message_budgets", Some(b))?;
        }
        for &s in &self.sweep.team_sizes {
            check(s >= 2, "sweep.team_sizes", || format!("team size {s} is below 2"))?;
        }
        Ok(())
    }

    fn validate_assignment(&self, base: &Path) -> Result<(), ConfigError> {
        let s = &self.assignment;
        check(s.n_tests >= 1, "assignment.n_tests", || "must be at least 1".into())?;
        let [lo, hi] = s.cost_range;
        check(
            lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi,
            "assignment.cost_range",
            || format!("[{lo}, {hi}] must satisfy 0 <= low < high"),
        )?;
        if s.cost_source == CostSource::Inline {
            check(
                s.costs.len() == self.team_size && s.costs.iter().all(|r| r.len() == self.team_size),
                "assignment.costs",
                || format!("must be a {0}x{0} matrix", self.team_size),
            )?;
            check(
                s.costs.iter().flatten().all(|c| c.is_finite() && *c >= 0.0),
                "assignment.costs",
                || "entries must be finite and nonnegative".into(),
            )?;
        }
        budget("assignment.message_budget_bytes", s.message_budget_bytes)?;
        if s.mode == AssignmentModeKind::Learned {
            check(
                s.feature_dim > 0 && s.feature_dim.is_multiple_of(crate::assignment::POLICY_HEADS),
                "assignment.feature_dim",
                || {
                    format!(
                        "{} must be a positive multiple of {} heads",
                        s.feature_dim,
                        crate::assignment::POLICY_HEADS
                    )
                },
            )?;
            let given = [&s.encoder_weights, &s.attention_weights, &s.decoder_weights]
                .iter()
                .filter(|w| w.is_some())
                .count();
            check(given == 0 || given == 3, "assignment.encoder_weights", || {
                "give all three weight files or none".into()
            })?;
            weights_exist(base, "assignment.encoder_weights", &s.encoder_weights)?;
            weights_exist(base, "assignment.attention_weights", &s.attention_weights)?;
            weights_exist(base, "assignment.decoder_weights", &s.decoder_weights)?;
        }
        Ok(())
    }

    fn validate_control(&self, base: &Path) -> Result<(), ConfigError> {
        let c = &self.control;
        check(self.team_size >= 2, "team_size", || "control needs at least 2 robots".into())?;
        check(c.runs >= 1, "control.runs", || "must be at least 1".into())?;
        if !c.starts.is_empty() || !c.goals.is_empty() {
            check(c.starts.len() == self.team_size, "control.starts", || {
                format!("{} entries for {} robots", c.starts.len(), self.team_size)
            })?;
            check(c.goals.len() == self.team_size, "control.goals", || {
                format!("{} entries for {} robots", c.goals.len(), self.team_size)
            })?;
        }
        positive("control.control_hz", c.control_hz)?;
        positive("control.success_radius", c.success_radius)?;
        non_negative("control.collision_radius", c.collision_radius)?;
        check(c.max_steps >= 1, "control.max_steps", || "must be at least 1".into())?;
        let b = &c.bounds;
        check(b.v_min < b.v_max, "control.bounds.v_max", || "must exceed v_min".into())?;
        check(b.omega_min < b.omega_max, "control.bounds.omega_max", || {
            "must exceed omega_min".into()
        })?;
        budget("control.message_budget_bytes", c.message_budget_bytes)?;
        if c.controller == ControllerKind::Learned {
            let given = [&c.encoder_weights, &c.message_weights, &c.decoder_weights]
                .iter()
                .filter(|w| w.is_some())
                .count();
            check(given == 0 || given == 3, "control.encoder_weights", || {
                "give all three weight files or none".into()
            })?;
            weights_exist(base, "control.encoder_weights", &c.encoder_weights)?;
            weights_exist(base, "control.message_weights", &c.message_weights)?;
            weights_exist(base, "control.decoder_weights", &c.decoder_weights)?;
        }
        Ok(())
    }
}

/// Annotated reference for the scenario file and the CSV outputs.
pub const SCHEMA: &str = r##"# neuromesh scenario schema, version 1
# Unknown keys anywhere are rejected.

task = "assignment"        # required: assignment | control | timing | comms
seed = 42                  # required; NEUROMESH_SEED overrides it
team_size = 5              # default 5
output_dir = "out"         # default "out", relative to this file

[network]
topology = "full_mesh"     # full_mesh | edges
edges = []                 # [[a, b], ...] when topology = "edges"
latency_ms = 4.8
jitter_ms = 0.6            # Gaussian std-dev, delay truncated at 0
loss_pct = 0.3             # 0..100
per_node_bandwidth = 6000000.0   # bytes per second, > 0
contention = "none"        # none | shared_medium
max_backlog_ms = 100.0     # sender queue limit before drops

[aggregation]
paradigm = "reduction"     # reduction | broadcast
kind = "mean"              # sum | mean | max | diff_sum
mode = "blocking"          # blocking | best_effort
timeout_ms = 200.0         # blocking timeout or best-effort gather window
min_neighbors = 0          # 0 permits single-robot fallback
rounds = 1                 # communication rounds, 1..255
poll_interval_ms = 1.0
staleness_ms = 500.0
# resend interval for already published messages; 0 disables
republish_ms = 20.0

[assignment]
n_tests = 20
cost_source = "random"     # random | inline
cost_range = [1.0, 10.0]
costs = []                 # team_size x team_size when inline
mode = "expert"            # expert | learned
feature_dim = 24           # learned: multiple of 3 heads
# message_budget_bytes = 64
# encoder_weights = "enc.mwts"     # learned: all three or none (seeded random)
# attention_weights = "att.mwts"
# decoder_weights = "dec.mwts"

[control]
runs = 20
starts = []                # [[x, y, theta], ...]; empty: parallel lanes
goals = []                 # [[x, y], ...]
controller = "scripted"    # scripted | learned
sampling = "stochastic"    # stochastic | mean
control_hz = 20.0
success_radius = 0.15
collision_radius = 0.30
max_steps = 600
trajectory = false
# message_budget_bytes = 256
# encoder_weights / message_weights / decoder_weights = "*.mwts"
[control.bounds]
v_min = 0.0
v_max = 0.5
omega_min = -1.0
omega_max = 1.0

[timing]
delays_ms = [10.0, 30.0, 20.0]   # encoder, aggregator, decoder
items = 50                       # >= 3
# ingress_interval_ms = 5.0      # arrivals on their own clock, keep-latest
agent_id = 0

[comms]
team_sizes = [5, 10, 30, 50]
payload_bytes = 128
offered_hz = 200.0
duration_s = 5.0
warmup_s = 1.0
link_rate_hz = 200.0
link_duration_s = 60.0

[sweep]                    # used by `neuromesh sweep`
message_budgets = []       # assignment/control: budget; comms: payload bytes
team_sizes = []

# Outputs (first line of every CSV: "# neuromesh-csv schema=<name> version=1")
#   assignment_results:  test_id, covered_goals, C_out, C_opt
#   assignment_summary:  tests, covered_goals, conflicts, failed_robots, sr_pct, tcp_pct
#   navigation_runs:     run_id, success, steps, min_pairwise_distance_m
#   trajectory:          run_id, step, agent, x, y, theta, v_f, omega
#   timing:              mode, agent_id, period_mean_ms, period_std_ms,
#                        latency_mean_ms, latency_std_ms, items, drops
#   scalability:         team_size, offered_hz, delivered_mean, delivered_std, oracle_value
#   link_quality:        latency_mean_ms, jitter_ms, loss_pct, throughput_msgs_per_s, sent, delivered
#   sweep_assignment:    team_size, message_budget_bytes, tests, sr_pct, tcp_pct
#   sweep_control:       team_size, message_budget_bytes, runs, success_pct
#   sweep_comms:         payload_bytes, team_size, offered_hz, delivered_mean, delivered_std, oracle_value
# run_manifest.toml records the config hash, seed and its source.
"##;

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> &'static Path {
        Path::new(".")
    }

    #[test]
    fn schema_text_parses() {
        let cfg = ScenarioConfig::parse(SCHEMA).unwrap();
        assert_eq!(cfg.task, Task::Assignment);
        cfg.validate(base()).unwrap();
        assert_eq!(cfg.network, NetworkSection::default());
        assert_eq!(cfg.control, ControlSection::default());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::parse("task = \"timing\"\nseed = 1\n").unwrap();
        assert_eq!(cfg.timing.delays_ms, [10.0, 30.0, 20.0]);
        cfg.validate(base()).unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        let e = ScenarioConfig::parse("task = \"timing\"\nseed = 1\n[network]\nlatncy_ms = 3\n")
            .unwrap_err();
        assert!(e.message.contains("latncy_ms"), "{e}");
        assert_eq!(e.path, "line 4");
    }

    #[test]
    fn negative_bandwidth_names_field() {
        let cfg = ScenarioConfig::parse(
            "task = \"comms\"\nseed = 1\n[network]\nper_node_bandwidth = -5.0\n",
        )
        .unwrap();
        let e = cfg.validate(base()).unwrap_err();
        assert_eq!(e.path, "network.per_node_bandwidth");
    }

    #[test]
    fn missing_weights_named() {
        let cfg = ScenarioConfig::parse(
            "task = \"control\"\nseed = 1\n[control]\ncontroller = \"learned\"\nencoder_weights = \"nope.mwts\"\nmessage_weights = \"nope.mwts\"\ndecoder_weights = \"nope.mwts\"\n",
        )
        .unwrap();
        assert_eq!(cfg.validate(base()).unwrap_err().path, "control.encoder_weights");
    }

    #[test]
    fn inline_costs_must_be_square() {
        let cfg = ScenarioConfig::parse(
            "task = \"assignment\"\nseed = 1\nteam_size = 2\n[assignment]\ncost_source = \"inline\"\ncosts = [[1.0, 2.0]]\n",
        )
        .unwrap();
        assert_eq!(cfg.validate(base()).unwrap_err().path, "assignment.costs");
    }

    #[test]
    fn edges_checked_against_team() {
        let cfg = ScenarioConfig::parse(
            "task = \"comms\"\nseed = 1\nteam_size = 3\n[network]\ntopology = \"edges\"\nedges = [[0, 7]]\n",
        )
        .unwrap();
        assert_eq!(cfg.validate(base()).unwrap_err().path, "network.edges");
    }
}
