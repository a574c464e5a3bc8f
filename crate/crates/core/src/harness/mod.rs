//! Scenario files, experiment execution and CSV output for the CLI.

mod config;
mod output;
mod selftest;

pub use config::{
    AggregationSection, AssignmentModeKind, AssignmentSection, CommsSection, ControlSection,
    ControllerKind, CostSource, ModeKind, NetworkSection, ParadigmKind, ScenarioConfig,
    SweepSection, Task, TimingSection, TopologyKind, SCHEMA,
};
pub use output::{csv_header_line, csv_string, sha256_hex, write_csv, RunManifest, CSV_SCHEMA_VERSION};
pub use selftest::{run_selftest, CheckResult, CheckStatus, SelftestOptions, WIRE_CHECK};

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::assignment::{
    run_assignment_scenario, sr_metric, tcp_metric, AssignmentError, AssignmentMode,
    AssignmentPolicy, CostMatrix,
};
use crate::control::{
    run_navigation_scenario, ControlError, ControlPolicy, Controller, NavigationConfig,
    ScriptedController, TrajectoryRow, OBS_DIM,
};
use crate::netsim::{measure_link_quality, scalability_sweep, NetError, SimNetwork, Topology};
use crate::pipeline::{run_pipeline, run_sequential, Ingress, PipelineError, Stage};
use crate::tensor::{mlp_forward, Activation, MlpSpec, Tensor, TensorError};
use crate::wire::AgentId;

pub const SEED_ENV: &str = "NEUROMESH_SEED";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Reads `NEUROMESH_SEED`, if set.
pub fn seed_from_env() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::new(SEED_ENV, format!("{v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Replaces the config's `output_dir`.
    pub output_dir: Option<PathBuf>,
    /// Replaces the config's `seed`.
    pub seed_override: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub task: Task,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub summary: Vec<String>,
}

struct Loaded {
    config: ScenarioConfig,
    text: String,
    base: PathBuf,
    out_dir: PathBuf,
    seed: u64,
    seed_source: &'static str,
}

fn load(path: &Path, opts: &RunOptions) -> Result<Loaded, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = ScenarioConfig::parse(&text)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    config.validate(&base)?;
    let out_dir = opts
        .output_dir
        .clone()
        .unwrap_or_else(|| base.join(&config.output_dir));
    let (seed, seed_source) = match opts.seed_override {
        Some(s) => (s, SEED_ENV),
        None => (config.seed, "config"),
    };
    Ok(Loaded {
        config,
        text,
        base,
        out_dir,
        seed,
        seed_source,
    })
}

fn finish(
    loaded: &Loaded,
    command: &str,
    config_path: &Path,
    outputs: Vec<PathBuf>,
    summary: Vec<String>,
) -> Result<RunReport, HarnessError> {
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        task: loaded.config.task.name().to_string(),
        config_path: config_path.display().to_string(),
        config_sha256: sha256_hex(loaded.text.as_bytes()),
        seed: loaded.seed,
        seed_source: loaded.seed_source.to_string(),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
    }
    .write(&loaded.out_dir)?;
    Ok(RunReport {
        task: loaded.config.task,
        outputs,
        manifest,
        summary,
    })
}

/// Executes the scenario in `path`, writing CSVs and a run manifest.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let loaded = load(path, opts)?;
    let cfg = &loaded.config;
    let ctx = Ctx {
        cfg,
        base: &loaded.base,
        seed: loaded.seed,
    };
    let dir = &loaded.out_dir;
    let (outputs, summary) = match cfg.task {
        Task::Assignment => {
            let r = ctx.assignment(cfg.team_size, cfg.assignment.message_budget_bytes)?;
            let mut summary = vec![r.summary.describe()];
            let outputs = vec![
                write_csv(dir, "assignment_results", &["test_id", "covered_goals", "C_out", "C_opt"], &r.rows)?,
                write_csv(
                    dir,
                    "assignment_summary",
                    &["tests", "covered_goals", "conflicts", "failed_robots", "sr_pct", "tcp_pct"],
                    &[r.summary],
                )?,
            ];
            if r.summary.tcp_pct.is_none() {
                summary.push("TCP undefined: no fully covered test".into());
            }
            (outputs, summary)
        }
        Task::Control => {
            let r = ctx.control(cfg.team_size, cfg.control.message_budget_bytes)?;
            let mut outputs = vec![write_csv(
                dir,
                "navigation_runs",
                &["run_id", "success", "steps", "min_pairwise_distance_m"],
                &r.rows,
            )?];
            if cfg.control.trajectory {
                outputs.push(write_csv(
                    dir,
                    "trajectory",
                    &["run_id", "step", "agent", "x", "y", "theta", "v_f", "omega"],
                    &r.trajectory,
                )?);
            }
            (outputs, vec![format!("success rate {:.2}% over {} runs", r.success_pct, r.rows.len())])
        }
        Task::Timing => {
            let (rows, identical) = ctx.timing()?;
            let summary = rows
                .iter()
                .map(|r| {
                    format!(
                        "{}: period {:.2} ms, latency {:.2} ms, {} items, {} drops",
                        r.mode, r.period_mean_ms, r.latency_mean_ms, r.items, r.drops
                    )
                })
                .chain([format!("outputs identical: {identical}")])
                .collect();
            let out = write_csv(
                dir,
                "timing",
                &[
                    "mode",
                    "agent_id",
                    "period_mean_ms",
                    "period_std_ms",
                    "latency_mean_ms",
                    "latency_std_ms",
                    "items",
                    "drops",
                ],
                &rows,
            )?;
            (vec![out], summary)
        }
        Task::Comms => {
            let c = &cfg.comms;
            let rows = ctx.sweep_rows(&c.team_sizes, c.payload_bytes)?;
            let mut net = SimNetwork::new(
                Topology::full_mesh(2, cfg.network.link(ctx.seed)),
                cfg.network.medium(),
            )?;
            let q = measure_link_quality(&mut net, 0, 1, c.payload_bytes, c.link_rate_hz, c.link_duration_s)?;
            let link = LinkRow {
                latency_mean_ms: q.latency_mean_ms,
                jitter_ms: q.jitter_ms,
                loss_pct: q.loss_pct,
                throughput_msgs_per_s: q.throughput_msgs_per_s,
                sent: q.sent,
                delivered: q.delivered,
            };
            let mut summary: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "N={}: {:.2} msgs/s per link (oracle {:.2})",
                        r.team_size, r.delivered_mean, r.oracle_value
                    )
                })
                .collect();
            summary.push(format!(
                "link: latency {:.3} ms, jitter {:.3} ms, loss {:.3}%",
                q.latency_mean_ms, q.jitter_ms, q.loss_pct
            ));
            let outputs = vec![
                write_csv(
                    dir,
                    "scalability",
                    &["team_size", "offered_hz", "delivered_mean", "delivered_std", "oracle_value"],
                    &rows,
                )?,
                write_csv(
                    dir,
                    "link_quality",
                    &["latency_mean_ms", "jitter_ms", "loss_pct", "throughput_msgs_per_s", "sent", "delivered"],
                    &[link],
                )?,
            ];
            (outputs, summary)
        }
    };
    finish(&loaded, "run", path, outputs, summary)
}

/// Runs the `[sweep]` grid over team size and message budget.
pub fn sweep_file(path: &Path, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let loaded = load(path, opts)?;
    let cfg = &loaded.config;
    let ctx = Ctx {
        cfg,
        base: &loaded.base,
        seed: loaded.seed,
    };
    let dir = &loaded.out_dir;
    let sw = &cfg.sweep;
    let teams = if sw.team_sizes.is_empty() {
        vec![cfg.team_size]
    } else {
        sw.team_sizes.clone()
    };
    let mut summary = Vec::new();
    let out = match cfg.task {
        Task::Assignment => {
            let budgets: Vec<Option<usize>> = if sw.message_budgets.is_empty() {
                vec![cfg.assignment.message_budget_bytes]
            } else {
                sw.message_budgets.iter().copied().map(Some).collect()
            };
            let mut rows = Vec::new();
            for &n in &teams {
                for &b in &budgets {
                    let r = ctx.assignment(n, b)?;
                    summary.push(format!("N={n} budget={b:?}: {}", r.summary.describe()));
                    rows.push(SweepAssignmentRow {
                        team_size: n,
                        message_budget_bytes: b,
                        tests: r.summary.tests,
                        sr_pct: r.summary.sr_pct,
                        tcp_pct: r.summary.tcp_pct,
                    });
                }
            }
            write_csv(
                dir,
                "sweep_assignment",
                &["team_size", "message_budget_bytes", "tests", "sr_pct", "tcp_pct"],
                &rows,
            )?
        }
        Task::Control => {
            let budgets: Vec<Option<usize>> = if sw.message_budgets.is_empty() {
                vec![cfg.control.message_budget_bytes]
            } else {
                sw.message_budgets.iter().copied().map(Some).collect()
            };
            if !cfg.control.starts.is_empty() && teams.iter().any(|&n| n != cfg.team_size) {
                return Err(ConfigError::new(
                    "sweep.team_sizes",
                    "explicit control.starts fix the team size; remove them to sweep team sizes",
                )
                .into());
            }
            let mut rows = Vec::new();
            for &n in &teams {
                for &b in &budgets {
                    let r = ctx.control(n, b)?;
                    summary.push(format!("N={n} budget={b:?}: success {:.2}%", r.success_pct));
                    rows.push(SweepControlRow {
                        team_size: n,
                        message_budget_bytes: b,
                        runs: r.rows.len(),
                        success_pct: r.success_pct,
                    });
                }
            }
            write_csv(
                dir,
                "sweep_control",
                &["team_size", "message_budget_bytes", "runs", "success_pct"],
                &rows,
            )?
        }
        Task::Comms => {
            let payloads = if sw.message_budgets.is_empty() {
                vec![cfg.comms.payload_bytes]
            } else {
                sw.message_budgets.clone()
            };
            let sizes = if sw.team_sizes.is_empty() {
                cfg.comms.team_sizes.clone()
            } else {
                sw.team_sizes.clone()
            };
            let mut rows = Vec::new();
            for &p in &payloads {
                for r in ctx.sweep_rows(&sizes, p)? {
                    summary.push(format!(
                        "payload {p} B, N={}: {:.2} msgs/s (oracle {:.2})",
                        r.team_size, r.delivered_mean, r.oracle_value
                    ));
                    rows.push(SweepCommsRow {
                        payload_bytes: p,
                        team_size: r.team_size,
                        offered_hz: r.offered_hz,
                        delivered_mean: r.delivered_mean,
                        delivered_std: r.delivered_std,
                        oracle_value: r.oracle_value,
                    });
                }
            }
            write_csv(
                dir,
                "sweep_comms",
                &["payload_bytes", "team_size", "offered_hz", "delivered_mean", "delivered_std", "oracle_value"],
                &rows,
            )?
        }
        Task::Timing => {
            return Err(ConfigError::new("sweep", "the timing task has no sweepable parameters").into())
        }
    };
    finish(&loaded, "sweep", path, vec![out], summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct AssignmentSummary {
    tests: usize,
    covered_goals: usize,
    conflicts: usize,
    failed_robots: usize,
    sr_pct: f64,
    tcp_pct: Option<f64>,
}

impl AssignmentSummary {
    fn describe(&self) -> String {
        match self.tcp_pct {
            Some(t) => format!("SR {:.2}%, TCP {:.4}% over {} tests", self.sr_pct, t, self.tests),
            None => format!("SR {:.2}% over {} tests", self.sr_pct, self.tests),
        }
    }
}

#[derive(Serialize)]
struct SweepAssignmentRow {
    team_size: usize,
    message_budget_bytes: Option<usize>,
    tests: usize,
    sr_pct: f64,
    tcp_pct: Option<f64>,
}

#[derive(Serialize)]
struct SweepControlRow {
    team_size: usize,
    message_budget_bytes: Option<usize>,
    runs: usize,
    success_pct: f64,
}

#[derive(Serialize)]
struct SweepCommsRow {
    payload_bytes: usize,
    team_size: usize,
    offered_hz: f64,
    delivered_mean: f64,
    delivered_std: f64,
    oracle_value: f64,
}

#[derive(Serialize)]
struct LinkRow {
    latency_mean_ms: f64,
    jitter_ms: f64,
    loss_pct: f64,
    throughput_msgs_per_s: f64,
    sent: u64,
    delivered: u64,
}

#[derive(Serialize)]
struct TrajectoryCsvRow {
    run_id: usize,
    step: usize,
    agent: AgentId,
    x: f64,
    y: f64,
    theta: f64,
    v_f: f64,
    omega: f64,
}

struct AssignmentRun {
    rows: Vec<crate::assignment::ResultRow>,
    summary: AssignmentSummary,
}

struct ControlRun {
    rows: Vec<crate::control::RunRow>,
    trajectory: Vec<TrajectoryCsvRow>,
    success_pct: f64,
}

/// Independent random streams derived from the run seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

const STREAM_COSTS: u64 = 1;
const STREAM_POLICY: u64 = 2;
const STREAM_TIMING: u64 = 3;

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    base: &'a Path,
    seed: u64,
}

impl Ctx<'_> {
    fn network(&self, team: usize, run: usize) -> Result<SimNetwork, HarnessError> {
        let topo = self
            .cfg
            .network
            .topology(team, self.seed.wrapping_add(run as u64))?;
        Ok(SimNetwork::new(topo, self.cfg.network.medium())?)
    }

    fn assignment(&self, team: usize, budget: Option<usize>) -> Result<AssignmentRun, HarnessError> {
        let s = &self.cfg.assignment;
        let mode = match s.mode {
            AssignmentModeKind::Expert => AssignmentMode::Expert,
            AssignmentModeKind::Learned => AssignmentMode::Learned(
                match (&s.encoder_weights, &s.attention_weights, &s.decoder_weights) {
                    (Some(e), Some(a), Some(d)) => AssignmentPolicy::load(
                        &self.base.join(e),
                        &self.base.join(a),
                        &self.base.join(d),
                    )?,
                    _ => AssignmentPolicy::random(team, s.feature_dim, &mut stream(self.seed, STREAM_POLICY))?,
                },
            ),
        };
        let agg = self.cfg.aggregation.config();
        let mesh = self.cfg.aggregation.mesh(budget);
        let mut cost_rng = stream(self.seed, STREAM_COSTS);
        let mut rows = Vec::with_capacity(s.n_tests);
        let (mut covered, mut conflicts, mut failed) = (0, 0, 0);
        let mut pairs = Vec::new();
        for t in 0..s.n_tests {
            let costs = match s.cost_source {
                CostSource::Random => {
                    CostMatrix::random(team, team, s.cost_range[0]..s.cost_range[1], &mut cost_rng)
                }
                CostSource::Inline => CostMatrix::new(s.costs.clone())?,
            };
            let out = run_assignment_scenario(&costs, &mode, &mut self.network(team, t)?, &agg, &mesh)?;
            covered += out.covered_goals;
            conflicts += out.conflicts;
            failed += out.errors.len();
            if out.fully_covered() {
                pairs.push((out.c_out, out.c_opt));
            }
            rows.push(out.row(t));
        }
        let summary = AssignmentSummary {
            tests: s.n_tests,
            covered_goals: covered,
            conflicts,
            failed_robots: failed,
            sr_pct: sr_metric(covered, team, s.n_tests)?,
            tcp_pct: if pairs.is_empty() {
                None
            } else {
                Some(tcp_metric(&pairs)?)
            },
        };
        Ok(AssignmentRun { rows, summary })
    }

    fn control(&self, team: usize, budget: Option<usize>) -> Result<ControlRun, HarnessError> {
        let c = &self.cfg.control;
        let controller = match c.controller {
            ControllerKind::Scripted => Controller::Scripted(ScriptedController::default()),
            ControllerKind::Learned => Controller::Learned {
                policy: match (&c.encoder_weights, &c.message_weights, &c.decoder_weights) {
                    (Some(e), Some(m), Some(d)) => ControlPolicy::load(
                        &self.base.join(e),
                        &self.base.join(m),
                        &self.base.join(d),
                    )?,
                    _ => ControlPolicy::random(&mut stream(self.seed, STREAM_POLICY)),
                },
                sampling: c.sampling,
            },
        };
        let (starts, goals) = c.layout(team);
        let mut rows = Vec::with_capacity(c.runs);
        let mut trajectory = Vec::new();
        let mut successes = 0;
        for r in 0..c.runs {
            let nav = NavigationConfig {
                control_hz: c.control_hz,
                success_radius: c.success_radius,
                collision_radius: c.collision_radius,
                max_steps: c.max_steps,
                bounds: c.bounds,
                seed: self.seed.wrapping_add(r as u64),
                aggregation: self.cfg.aggregation.config(),
                mesh: self.cfg.aggregation.mesh(budget),
                record_trajectory: c.trajectory,
            };
            let out = run_navigation_scenario(&starts, &goals, &controller, &mut self.network(team, r)?, &nav)?;
            successes += usize::from(out.success);
            rows.push(out.row(r));
            trajectory.extend(out.trajectory.into_iter().map(|t: TrajectoryRow| TrajectoryCsvRow {
                run_id: r,
                step: t.step,
                agent: t.agent,
                x: t.x,
                y: t.y,
                theta: t.theta,
                v_f: t.v_f,
                omega: t.omega,
            }));
        }
        Ok(ControlRun {
            success_pct: successes as f64 / c.runs as f64 * 100.0,
            rows,
            trajectory,
        })
    }

    fn timing(&self) -> Result<(Vec<crate::pipeline::StatsRow>, bool), HarnessError> {
        let t = &self.cfg.timing;
        let mut rng = stream(self.seed, STREAM_TIMING);
        let enc = MlpSpec::random(&[OBS_DIM, 64, 64], Activation::Relu, &mut rng);
        let agg = MlpSpec::random(&[64, 64], Activation::Relu, &mut rng);
        let dec = MlpSpec::random(&[64, 64, 4], Activation::Relu, &mut rng);
        let stage = |name: &str, spec: MlpSpec, ms: f64| {
            Stage::new(name, move |x: &Tensor| Ok(mlp_forward(&spec, x)?))
                .with_delay(Duration::from_secs_f64(ms / 1e3))
        };
        let [de, dm, dd] = t.delays_ms;
        let (e, m, d) = (stage("encode", enc, de), stage("aggregate", agg, dm), stage("decode", dec, dd));
        let inputs: Vec<Tensor> = (0..t.items)
            .map(|_| Tensor::vector((0..OBS_DIM).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let ingress = match t.ingress_interval_ms {
            Some(ms) => Ingress::Periodic(Duration::from_secs_f64(ms / 1e3)),
            None => Ingress::OnDemand,
        };
        let par = run_pipeline(&e, &m, &d, &inputs, ingress)?;
        let seq = run_sequential(&e, &m, &d, &inputs, ingress)?;
        let identical = ingress != Ingress::OnDemand || par.outputs() == seq.outputs();
        Ok((
            vec![par.stats.row("parallel", t.agent_id), seq.stats.row("sequential", t.agent_id)],
            identical,
        ))
    }

    fn sweep_rows(&self, sizes: &[usize], payload: usize) -> Result<Vec<crate::netsim::SweepRow>, HarnessError> {
        let c = &self.cfg.comms;
        Ok(scalability_sweep(
            sizes,
            payload,
            c.offered_hz,
            self.cfg.network.medium(),
            self.cfg.network.link(self.seed),
            c.duration_s,
            c.warmup_s,
        )?)
    }
}
