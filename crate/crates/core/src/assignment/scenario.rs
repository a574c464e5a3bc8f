use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use super::solver::solve_rect;
use super::{hungarian_solve, AssignmentError, CostMatrix};
use crate::aggregation::{AggregationConfig, AggregationError};
use crate::mesh::{run_team_rounds, MeshOptions};
use crate::netsim::SimNetwork;
use crate::tensor::weights::{load_attention, load_mlp, save_attention, save_mlp};
use crate::tensor::{
    attention_forward, mlp_forward, Activation, AttentionSpec, MlpSpec, Tensor, TensorError,
};
use crate::wire::{AgentId, NeighborEntry};

pub const DEFAULT_FEATURE_DIM: usize = 24;
pub const POLICY_HEADS: usize = 3;
pub const POLICY_LAYERS: usize = 2;
const HIDDEN: usize = 64;

/// Two-layer MLP encoder over the cost row, multi-head attention over
/// neighbor embeddings, two-layer MLP decoder to per-goal logits.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPolicy {
    pub encoder: MlpSpec,
    pub attention: AttentionSpec,
    pub decoder: MlpSpec,
}

impl AssignmentPolicy {
    pub fn random<R: Rng + ?Sized>(
        n_goals: usize,
        feature_dim: usize,
        rng: &mut R,
    ) -> Result<Self, AssignmentError> {
        let policy = Self {
            encoder: MlpSpec::random(&[n_goals, HIDDEN, feature_dim], Activation::Relu, rng),
            attention: AttentionSpec::random(POLICY_HEADS, POLICY_LAYERS, feature_dim, rng)?,
            decoder: MlpSpec::random(&[feature_dim, HIDDEN, n_goals], Activation::Relu, rng),
        };
        policy.validate(n_goals)?;
        Ok(policy)
    }

    pub fn load(encoder: &Path, attention: &Path, decoder: &Path) -> Result<Self, AssignmentError> {
        Ok(Self {
            encoder: load_mlp(encoder, Activation::Relu)?,
            attention: load_attention(attention, POLICY_HEADS)?,
            decoder: load_mlp(decoder, Activation::Relu)?,
        })
    }

    pub fn save(&self, encoder: &Path, attention: &Path, decoder: &Path) -> Result<(), AssignmentError> {
        save_mlp(encoder, &self.encoder)?;
        save_attention(attention, &self.attention)?;
        save_mlp(decoder, &self.decoder)?;
        Ok(())
    }

    pub fn validate(&self, n_goals: usize) -> Result<(), AssignmentError> {
        let pairs = [
            ("encoder input", n_goals, self.encoder.input_dim()),
            ("attention width", self.encoder.output_dim(), self.attention.model_dim()),
            ("decoder input", self.attention.model_dim(), self.decoder.input_dim()),
            ("decoder output", n_goals, self.decoder.output_dim()),
        ];
        for (context, expected, actual) in pairs {
            if expected != actual {
                return Err(TensorError::Shape {
                    context,
                    expected,
                    actual,
                }
                .into());
            }
        }
        Ok(())
    }

    pub fn encode(&self, cost_row: &[f32]) -> Result<Tensor, TensorError> {
        mlp_forward(&self.encoder, &Tensor::vector(cost_row.to_vec()))
    }

    /// Attention of `h` over the neighbor embeddings; `h` itself when
    /// there are none.
    pub fn aggregate(&self, h: &Tensor, neighbors: &[Tensor]) -> Result<Tensor, TensorError> {
        if neighbors.is_empty() {
            return Ok(h.clone());
        }
        attention_forward(&self.attention, h, neighbors)
    }

    pub fn logits(&self, h: &Tensor) -> Result<Tensor, TensorError> {
        mlp_forward(&self.decoder, h)
    }
}

/// Index of the largest entry, lowest index on ties.
fn argmax(x: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentMode {
    /// Each robot gathers every cost row it hears and solves the matching.
    Expert,
    Learned(AssignmentPolicy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentOutcome {
    /// Goal chosen by each robot; `None` if its rounds failed.
    pub choices: Vec<Option<usize>>,
    pub covered_goals: usize,
    /// Robots whose goal was also picked by another robot, beyond the first.
    pub conflicts: usize,
    pub c_out: f64,
    pub c_opt: f64,
    pub errors: BTreeMap<AgentId, AggregationError>,
}

impl AssignmentOutcome {
    pub fn fully_covered(&self) -> bool {
        self.covered_goals == self.choices.len()
    }

    pub fn row(&self, test_id: usize) -> ResultRow {
        ResultRow {
            test_id,
            covered_goals: self.covered_goals,
            c_out: self.c_out,
            c_opt: self.c_opt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResultRow {
    pub test_id: usize,
    pub covered_goals: usize,
    #[serde(rename = "C_out")]
    pub c_out: f64,
    #[serde(rename = "C_opt")]
    pub c_opt: f64,
}

fn one_hot(n: usize, k: usize) -> Tensor {
    let mut data = vec![0.0; n];
    data[k] = 1.0;
    Tensor::vector(data)
}

/// Expert choice for `robot` from the rows it knows. With every row present
/// all robots solve the same matrix and agree.
fn expert_choice(
    robot: usize,
    own_row: &Tensor,
    entries: &[NeighborEntry],
    n_robots: usize,
) -> Result<Tensor, AggregationError> {
    let n_goals = own_row.len();
    let mut rows: BTreeMap<usize, Vec<f32>> = entries
        .iter()
        .map(|e| (e.neighbor as usize, e.feature.data().to_vec()))
        .collect();
    rows.insert(robot, own_row.data().to_vec());
    let order: Vec<usize> = rows.keys().copied().collect();
    let me = order.binary_search(&robot).unwrap();
    let goal = if rows.len() == n_robots && n_robots == n_goals {
        let m = CostMatrix::new(rows.into_values().collect())
            .map_err(|e| AggregationError::Exchange(e.to_string()))?;
        hungarian_solve(&m)
            .map_err(|e| AggregationError::Exchange(e.to_string()))?
            .goals[me]
    } else {
        let c: Vec<Vec<f64>> = rows
            .values()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect();
        solve_rect(&c, n_goals).0[me]
    };
    Ok(one_hot(n_goals, goal))
}

/// One assignment test over the simulated network. Robot `i` is agent `i`
/// and owns cost row `i`. Conflicting picks and failed robots show up as
/// uncovered goals, not as errors.
pub fn run_assignment_scenario(
    costs: &CostMatrix,
    mode: &AssignmentMode,
    net: &mut SimNetwork,
    aggregation: &AggregationConfig,
    options: &MeshOptions,
) -> Result<AssignmentOutcome, AssignmentError> {
    let n = costs.n_robots();
    let agents = net.topology().agents().to_vec();
    if agents != (0..n as AgentId).collect::<Vec<_>>() {
        return Err(AssignmentError::TeamSize {
            team: agents.len(),
            rows: n,
        });
    }
    let c_opt = hungarian_solve(costs)?.total_cost;

    let run = match mode {
        AssignmentMode::Expert => {
            let features = (0..n)
                .map(|i| (i as AgentId, Tensor::vector(costs.row(i).to_vec())))
                .collect();
            let cfg = AggregationConfig {
                rounds: 1,
                ..*aggregation
            };
            run_team_rounds(net, &cfg, &features, options, |id, h, entries| {
                expert_choice(id as usize, h, entries, n)
            })?
        }
        AssignmentMode::Learned(policy) => {
            policy.validate(costs.n_goals())?;
            let features = (0..n)
                .map(|i| Ok((i as AgentId, policy.encode(costs.row(i))?)))
                .collect::<Result<BTreeMap<_, _>, TensorError>>()?;
            run_team_rounds(net, aggregation, &features, options, |_, h, entries| {
                let ns: Vec<Tensor> = entries.iter().map(|e| e.feature.clone()).collect();
                Ok(policy.aggregate(h, &ns)?)
            })?
        }
    };

    let mut choices = Vec::with_capacity(n);
    let mut errors = BTreeMap::new();
    for i in 0..n as AgentId {
        match &run.outputs[&i] {
            Ok(h) => {
                let scores = match mode {
                    AssignmentMode::Expert => h.clone(),
                    AssignmentMode::Learned(p) => p.logits(h)?,
                };
                choices.push(Some(argmax(scores.data())));
            }
            Err(e) => {
                errors.insert(i, e.clone());
                choices.push(None);
            }
        }
    }
    let picked: Vec<usize> = choices.iter().flatten().copied().collect();
    let covered_goals = picked.iter().collect::<BTreeSet<_>>().len();
    let c_out = choices
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|g| costs.get(i, g) as f64))
        .sum();
    Ok(AssignmentOutcome {
        conflicts: picked.len() - covered_goals,
        covered_goals,
        choices,
        c_out,
        c_opt,
        errors,
    })
}
