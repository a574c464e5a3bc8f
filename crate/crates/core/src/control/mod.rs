//! Decentralized navigation: observation, policy chain, Beta action
//! sampling and unicycle kinematics.

mod navigation;

pub use navigation::{
    run_navigation_scenario, Controller, NavigationConfig, NavigationOutcome, RunRow, Sampling,
    ScriptedController, TrajectoryRow,
};

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::diff_sum_aggregate;
use crate::mesh::MeshError;
use crate::tensor::weights::{load_mlp, save_mlp, WeightsError};
use crate::tensor::{mlp_forward, softplus_shift_f64, Activation, MlpSpec, Tensor, TensorError};

pub const OBS_DIM: usize = 8;
pub const HIDDEN: usize = 64;
pub const ACTION_PARAMS: usize = 4;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Shape(#[from] TensorError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

/// `θ` mapped into `(−π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnicycleState {
    pub x: [f64; 2],
    pub theta: f64,
    pub v_f: f64,
    pub omega: f64,
}

impl UnicycleState {
    pub fn at(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x: [x, y],
            theta: normalize_angle(theta),
            v_f: 0.0,
            omega: 0.0,
        }
    }

    pub fn heading(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.x[0] - p[0]).hypot(self.x[1] - p[1])
    }
}

/// `(g − x, x, u(θ), x + v_f·u(θ))` with `u(θ) = (cos θ, sin θ)`.
pub fn build_observation(state: &UnicycleState, goal: [f64; 2]) -> Tensor {
    let [ux, uy] = state.heading();
    let [x, y] = state.x;
    let o = [
        goal[0] - x,
        goal[1] - y,
        x,
        y,
        ux,
        uy,
        x + state.v_f * ux,
        y + state.v_f * uy,
    ];
    Tensor::vector(o.iter().map(|&v| v as f32).collect())
}

/// Standard unicycle kinematics; the position update uses the heading at
/// the start of the step.
pub fn unicycle_step(state: &UnicycleState, v_f: f64, omega: f64, dt: f64) -> UnicycleState {
    assert!(dt > 0.0, "dt must be positive");
    let [ux, uy] = state.heading();
    UnicycleState {
        x: [state.x[0] + v_f * ux * dt, state.x[1] + v_f * uy * dt],
        theta: normalize_angle(state.theta + omega * dt),
        v_f,
        omega,
    }
}

/// Shape parameters of the forward and angular velocity distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub alpha_v: f64,
    pub beta_v: f64,
    pub alpha_omega: f64,
    pub beta_omega: f64,
}

impl BetaParams {
    /// `1 + softplus(raw)`, nudged to the next float above 1 where softplus
    /// underflows.
    pub fn from_raw(raw: &Tensor) -> Result<Self, TensorError> {
        crate::tensor::check_len("decoder output", ACTION_PARAMS, raw.vector_len("decoder output rank")?)?;
        let p: Vec<f64> = raw
            .data()
            .iter()
            .map(|&y| softplus_shift_f64(y as f64).max(1.0 + f64::EPSILON))
            .collect();
        Ok(Self {
            alpha_v: p[0],
            beta_v: p[1],
            alpha_omega: p[2],
            beta_omega: p[3],
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha_v, self.beta_v, self.alpha_omega, self.beta_omega]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 0.5,
            omega_min: -1.0,
            omega_max: 1.0,
        }
    }
}

impl ActionBounds {
    fn map(lo: f64, hi: f64, b: f64) -> f64 {
        lo + (hi - lo) * b
    }

    pub fn clamp(&self, v: f64, omega: f64) -> (f64, f64) {
        (
            v.clamp(self.v_min, self.v_max),
            omega.clamp(self.omega_min, self.omega_max),
        )
    }
}

fn beta(a: f64, b: f64) -> Beta<f64> {
    Beta::new(a, b).expect("shape parameters above 1 are valid")
}

/// Draws `b ~ Beta(α, β)` per channel and maps `[0, 1]` onto the bounds.
pub fn beta_sample<R: Rng + ?Sized>(
    params: &BetaParams,
    bounds: &ActionBounds,
    rng: &mut R,
) -> (f64, f64) {
    let bv = beta(params.alpha_v, params.beta_v).sample(rng);
    let bw = beta(params.alpha_omega, params.beta_omega).sample(rng);
    (
        ActionBounds::map(bounds.v_min, bounds.v_max, bv),
        ActionBounds::map(bounds.omega_min, bounds.omega_max, bw),
    )
}

/// The distribution means `α / (α + β)` mapped onto the bounds.
pub fn beta_mean(params: &BetaParams, bounds: &ActionBounds) -> (f64, f64) {
    let m = |a: f64, b: f64| a / (a + b);
    (
        ActionBounds::map(bounds.v_min, bounds.v_max, m(params.alpha_v, params.beta_v)),
        ActionBounds::map(
            bounds.omega_min,
            bounds.omega_max,
            m(params.alpha_omega, params.beta_omega),
        ),
    )
}

/// Encoder `o_i → f_i`, pairwise network `g`, decoder `h_i → y_i ∈ R^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolicy {
    pub encoder: MlpSpec,
    pub message: MlpSpec,
    pub decoder: MlpSpec,
}

impl ControlPolicy {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            encoder: MlpSpec::random(&[OBS_DIM, HIDDEN, HIDDEN, HIDDEN, HIDDEN], Activation::Relu, rng),
            message: MlpSpec::random(&[HIDDEN, HIDDEN, HIDDEN, HIDDEN], Activation::Relu, rng),
            decoder: MlpSpec::random(
                &[HIDDEN, HIDDEN, HIDDEN, HIDDEN, ACTION_PARAMS],
                Activation::Relu,
                rng,
            ),
        }
    }

    pub fn load(encoder: &Path, message: &Path, decoder: &Path) -> Result<Self, ControlError> {
        let p = Self {
            encoder: load_mlp(encoder, Activation::Relu)?,
            message: load_mlp(message, Activation::Relu)?,
            decoder: load_mlp(decoder, Activation::Relu)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, encoder: &Path, message: &Path, decoder: &Path) -> Result<(), ControlError> {
        save_mlp(encoder, &self.encoder)?;
        save_mlp(message, &self.message)?;
        save_mlp(decoder, &self.decoder)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        let f = self.encoder.output_dim();
        let checks = [
            ("encoder input", OBS_DIM, self.encoder.input_dim()),
            ("message network input", f, self.message.input_dim()),
            ("decoder input", self.message.output_dim(), self.decoder.input_dim()),
            ("decoder output", ACTION_PARAMS, self.decoder.output_dim()),
        ];
        for (context, expected, actual) in checks {
            crate::tensor::check_len(context, expected, actual)?;
        }
        Ok(())
    }

    pub fn encode(&self, observation: &Tensor) -> Result<Tensor, TensorError> {
        mlp_forward(&self.encoder, observation)
    }

    /// `Σ_j g(f_j − f_i)`; zero without neighbors.
    pub fn aggregate(&self, own: &Tensor, neighbors: &[Tensor]) -> Result<Tensor, TensorError> {
        diff_sum_aggregate(&self.message, own, neighbors).map_err(|e| match e {
            crate::aggregation::AggregationError::Shape(t) => t,
            other => TensorError::Spec(other.to_string()),
        })
    }

    pub fn decode(&self, h: &Tensor) -> Result<BetaParams, TensorError> {
        BetaParams::from_raw(&mlp_forward(&self.decoder, h)?)
    }
}

/// Full local chain for one agent given its neighbors' encoder outputs.
pub fn policy_forward(
    policy: &ControlPolicy,
    observation: &Tensor,
    neighbor_features: &[Tensor],
) -> Result<BetaParams, TensorError> {
    let f = policy.encode(observation)?;
    let h = policy.aggregate(&f, neighbor_features)?;
    policy.decode(&h)
}
