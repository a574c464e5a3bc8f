use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    beta_mean, beta_sample, build_observation, unicycle_step, ActionBounds, ControlError,
    ControlPolicy, UnicycleState, HIDDEN,
};
use crate::aggregation::{AggregationConfig, AggregationError, Mode, Paradigm, ReduceKind};
use crate::mesh::{run_team_rounds, MeshOptions};
use crate::netsim::{SimNetwork, NS_PER_MS, NS_PER_S};
use crate::tensor::Tensor;
use crate::wire::AgentId;

/// Turn toward the goal and drive straight at it, slowing inside
/// `slow_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedController {
    pub heading_gain: f64,
    pub slow_radius: f64,
}

impl Default for ScriptedController {
    fn default() -> Self {
        Self {
            heading_gain: 2.0,
            slow_radius: 0.5,
        }
    }
}

impl ScriptedController {
    pub fn command(
        &self,
        state: &UnicycleState,
        goal: [f64; 2],
        bounds: &ActionBounds,
    ) -> (f64, f64) {
        let dx = goal[0] - state.x[0];
        let dy = goal[1] - state.x[1];
        let err = super::normalize_angle(dy.atan2(dx) - state.theta);
        let dist = dx.hypot(dy);
        let v = bounds.v_max * err.cos().max(0.0) * (dist / self.slow_radius).min(1.0);
        bounds.clamp(v, self.heading_gain * err)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Stochastic,
    /// Use the distribution mean instead of drawing.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Scripted(ScriptedController),
    Learned {
        policy: ControlPolicy,
        sampling: Sampling,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationConfig {
    pub control_hz: f64,
    pub success_radius: f64,
    pub collision_radius: f64,
    pub max_steps: usize,
    pub bounds: ActionBounds,
    /// Agent `i` samples from a generator seeded with `seed ^ i`.
    pub seed: u64,
    pub aggregation: AggregationConfig,
    pub mesh: MeshOptions,
    pub record_trajectory: bool,
}

impl Default for NavigationConfig {
    fn default() -> Self {
        Self {
            control_hz: 20.0,
            success_radius: 0.15,
            collision_radius: 0.30,
            max_steps: 600,
            bounds: ActionBounds::default(),
            seed: 0,
            aggregation: AggregationConfig {
                paradigm: Paradigm::Reduction(ReduceKind::DiffSum),
                mode: Mode::BestEffort {
                    window_ns: 20 * NS_PER_MS,
                },
                min_neighbors: 0,
                rounds: 1,
            },
            mesh: MeshOptions::default(),
            record_trajectory: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub agent: AgentId,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v_f: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRow {
    pub run_id: usize,
    pub success: bool,
    pub steps: usize,
    pub min_pairwise_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationOutcome {
    pub success: bool,
    pub collided: bool,
    pub steps: usize,
    pub min_pairwise_distance: f64,
    pub reached: Vec<bool>,
    /// Agent-steps whose exchange failed and fell back to local-only input.
    pub exchange_failures: u64,
    pub trajectory: Vec<TrajectoryRow>,
}

impl NavigationOutcome {
    pub fn row(&self, run_id: usize) -> RunRow {
        RunRow {
            run_id,
            success: self.success,
            steps: self.steps,
            min_pairwise_distance_m: self.min_pairwise_distance,
        }
    }
}

pub(crate) fn min_pairwise(states: &[UnicycleState]) -> f64 {
    let mut m = f64::INFINITY;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            m = m.min(a.distance_to(b.x));
        }
    }
    m
}

fn record(rows: &mut Vec<TrajectoryRow>, step: usize, states: &[UnicycleState]) {
    rows.extend(states.iter().enumerate().map(|(i, s)| TrajectoryRow {
        step,
        agent: i as AgentId,
        x: s.x[0],
        y: s.x[1],
        theta: s.theta,
        v_f: s.v_f,
        omega: s.omega,
    }));
}

/// Closed-loop run at `control_hz`. Learned controllers exchange encoder
/// features over `net` every step; scripted ones ignore the network.
/// A robot that has entered its goal radius holds still.
pub fn run_navigation_scenario(
    starts: &[UnicycleState],
    goals: &[[f64; 2]],
    controller: &Controller,
    net: &mut SimNetwork,
    cfg: &NavigationConfig,
) -> Result<NavigationOutcome, ControlError> {
    let n = starts.len();
    if n < 2 {
        return Err(ControlError::Scenario(format!("team size {n} is below 2")));
    }
    if goals.len() != n {
        return Err(ControlError::Scenario(format!(
            "{} goals for {n} robots",
            goals.len()
        )));
    }
    if !(cfg.control_hz > 0.0) {
        return Err(ControlError::Scenario("control rate must be positive".into()));
    }
    if let Controller::Learned { policy, .. } = controller {
        policy.validate()?;
        if net.topology().agents() != (0..n as AgentId).collect::<Vec<_>>() {
            return Err(ControlError::Scenario(format!(
                "network agents {:?} do not match robots 0..{n}",
                net.topology().agents()
            )));
        }
    }

    let dt = 1.0 / cfg.control_hz;
    let dt_ns = (dt * NS_PER_S as f64).round() as u64;
    let t0 = net.now_ns();
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(cfg.seed ^ i as u64))
        .collect();
    let mut states = starts.to_vec();
    let mut trajectory = Vec::new();
    if cfg.record_trajectory {
        record(&mut trajectory, 0, &states);
    }
    let mut min_d = min_pairwise(&states);
    let mut collided = min_d < cfg.collision_radius;
    let mut reached: Vec<bool> = states
        .iter()
        .zip(goals)
        .map(|(s, &g)| s.distance_to(g) <= cfg.success_radius)
        .collect();
    let mut failures = 0u64;
    let mut step = 0;

    while !collided && !reached.iter().all(|&r| r) && step < cfg.max_steps {
        let actions: Vec<(f64, f64)> = match controller {
            Controller::Scripted(s) => states
                .iter()
                .zip(goals)
                .map(|(st, &g)| s.command(st, g, &cfg.bounds))
                .collect(),
            Controller::Learned { policy, sampling } => {
                let step_start = t0 + step as u64 * dt_ns;
                if net.now_ns() < step_start {
                    net.advance_to(step_start);
                }
                let features = states
                    .iter()
                    .zip(goals)
                    .enumerate()
                    .map(|(i, (s, &g))| Ok((i as AgentId, policy.encode(&build_observation(s, g))?)))
                    .collect::<Result<BTreeMap<_, _>, ControlError>>()?;
                let run = run_team_rounds(net, &cfg.aggregation, &features, &cfg.mesh, |_, h, es| {
                    let ns: Vec<Tensor> = es.iter().map(|e| e.feature.clone()).collect();
                    policy.aggregate(h, &ns).map_err(AggregationError::from)
                })?;
                let mut out = Vec::with_capacity(n);
                for (i, rng) in rngs.iter_mut().enumerate() {
                    let h = match &run.outputs[&(i as AgentId)] {
                        Ok(h) => h.clone(),
                        Err(_) => {
                            failures += 1;
                            Tensor::vector(vec![0.0; HIDDEN])
                        }
                    };
                    let params = policy.decode(&h)?;
                    out.push(match sampling {
                        Sampling::Stochastic => beta_sample(&params, &cfg.bounds, rng),
                        Sampling::Mean => beta_mean(&params, &cfg.bounds),
                    });
                }
                out
            }
        };
        for (i, (v, w)) in actions.into_iter().enumerate() {
            let (v, w) = if reached[i] { (0.0, 0.0) } else { (v, w) };
            states[i] = unicycle_step(&states[i], v, w, dt);
        }
        step += 1;
        if cfg.record_trajectory {
            record(&mut trajectory, step, &states);
        }
        let d = min_pairwise(&states);
        min_d = min_d.min(d);
        collided = d < cfg.collision_radius;
        for (r, (s, &g)) in reached.iter_mut().zip(states.iter().zip(goals)) {
            *r |= s.distance_to(g) <= cfg.success_radius;
        }
    }

    Ok(NavigationOutcome {
        success: !collided && reached.iter().all(|&r| r),
        collided,
        steps: step,
        min_pairwise_distance: min_d,
        reached,
        exchange_failures: failures,
        trajectory,
    })
}
