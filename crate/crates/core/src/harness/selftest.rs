//! Reduced acceptance checks runnable from the CLI in a few seconds.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{
    centralized_rounds, reduce_aggregate, AggregationConfig, Mode, Paradigm, ReduceKind,
};
use crate::assignment::{
    brute_force_solve, hungarian_solve, run_assignment_scenario, AssignmentMode, AssignmentPolicy,
    CostMatrix,
};
use crate::control::{BetaParams, ControlPolicy, UnicycleState, build_observation, policy_forward};
use crate::mesh::{run_team_rounds, MeshOptions};
use crate::netsim::{
    measure_link_quality, scalability_oracle, scalability_sweep, Contention, LinkModel,
    MediumModel, SimNetwork, Topology, NS_PER_MS, NS_PER_S,
};
use crate::pipeline::{run_pipeline, run_sequential, Ingress, Stage};
use crate::tensor::Tensor;
use crate::wire::{decode_envelope, encode_envelope, AgentId, MessageEnvelope, NeighborBuffer};

pub const WIRE_CHECK: &str = "wire_roundtrip";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelftestOptions {
    /// Flips the magic bytes of every encoded envelope before decoding.
    pub corrupt_wire_magic: bool,
    /// Directory holding trained weights. Learned-policy checks are skipped
    /// without it.
    pub weights_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

type Outcome = Result<String, String>;

fn check(name: &'static str, f: impl FnOnce() -> Outcome) -> CheckResult {
    let (status, detail) = match f() {
        Ok(d) => (CheckStatus::Pass, d),
        Err(d) => (CheckStatus::Fail, d),
    };
    CheckResult { name, status, detail }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<CheckResult> {
    let mut out = vec![
        check(WIRE_CHECK, || wire_roundtrip(opts.corrupt_wire_magic)),
        check("neighbor_buffer_keep_latest", buffer_keep_latest),
        check("hungarian_matches_brute_force", hungarian_vs_brute),
        check("decentralized_matches_centralized", mesh_matches_centralized),
        check("link_statistics", link_statistics),
        check("scalability_unconstrained", scalability),
        check("beta_parameters_above_one", beta_above_one),
        check("pipeline_overlap", pipeline_overlap),
    ];
    out.extend(learned_checks(opts.weights_dir.as_deref()));
    out
}

fn wire_roundtrip(corrupt: bool) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..500u32 {
        let len = rng.random_range(1..64);
        let t = Tensor::vector((0..len).map(|_| rng.random_range(-1e3..1e3)).collect());
        let env = MessageEnvelope::from_tensor(rng.random(), i, rng.random(), rng.random_range(0..4), &t);
        let mut bytes = encode_envelope(&env).map_err(|e| e.to_string())?;
        if corrupt {
            bytes[0] ^= 0xff;
        }
        let back = decode_envelope(&bytes).map_err(|e| format!("case {i}: {e}"))?;
        ensure(back == env, || format!("case {i}: decoded envelope differs"))?;
    }
    Ok("500 random envelopes round-trip".into())
}

fn buffer_keep_latest() -> Outcome {
    let orders: [[u32; 5]; 4] = [[1, 2, 3, 4, 5], [5, 4, 3, 2, 1], [3, 1, 5, 2, 4], [2, 5, 1, 4, 3]];
    for order in orders {
        let mut b = NeighborBuffer::new([1], NS_PER_S);
        for s in order {
            let env = MessageEnvelope::from_tensor(1, s, 0, 0, &Tensor::vector(vec![s as f32]));
            b.insert(env, 0).map_err(|e| e.to_string())?;
        }
        ensure(b.stored_seq(1) == Some(5), || format!("order {order:?} kept {:?}", b.stored_seq(1)))?;
    }
    Ok("highest sequence retained for 4 arrival orders".into())
}

fn hungarian_vs_brute() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=6 {
        for case in 0..40 {
            let c = CostMatrix::random(n, n, 0.0..10.0, &mut rng);
            let h = hungarian_solve(&c).map_err(|e| e.to_string())?;
            let b = brute_force_solve(&c).map_err(|e| e.to_string())?;
            ensure(h.goals == b.goals, || {
                format!("n={n} case {case}: {:?} vs {:?}", h.goals, b.goals)
            })?;
        }
    }
    Ok("200 instances, n in 2..=6".into())
}

fn mesh_matches_centralized() -> Outcome {
    let link = LinkModel::from_millis(2.0, 0.5, 0.0, 5);
    let topo = Topology::from_edges([0, 1, 2, 3], [(0, 1), (1, 2), (2, 3), (1, 3)], link)
        .map_err(|e| e.to_string())?;
    let feats: BTreeMap<AgentId, Tensor> = (0..4)
        .map(|i| (i, Tensor::vector(vec![i as f32, 1.0 - i as f32])))
        .collect();
    let base: Vec<Tensor> = feats.values().cloned().collect();
    for kind in [ReduceKind::Sum, ReduceKind::Mean] {
        let cfg = AggregationConfig {
            paradigm: Paradigm::Reduction(kind),
            mode: Mode::Blocking { timeout_ns: NS_PER_S },
            min_neighbors: 0,
            rounds: 3,
        };
        let mut net = SimNetwork::new(topo.clone(), MediumModel::unconstrained()).map_err(|e| e.to_string())?;
        let run = run_team_rounds(&mut net, &cfg, &feats, &MeshOptions::default(), |_, h, ns| {
            let f: Vec<Tensor> = ns.iter().map(|e| e.feature.clone()).collect();
            reduce_aggregate(kind, h, &f)
        })
        .map_err(|e| e.to_string())?;
        let want = centralized_rounds(kind, &topo.adjacency(), &base, 3).map_err(|e| e.to_string())?;
        for (i, w) in want.iter().enumerate() {
            let got = run.output(i as AgentId).ok_or_else(|| format!("{kind:?} agent {i}: {:?}", run.outputs[&(i as AgentId)]))?;
            ensure(got == w, || format!("{kind:?} agent {i}: {:?} vs {:?}", got.data(), w.data()))?;
        }
    }
    Ok("4-agent graph, 3 rounds, sum and mean bit-exact".into())
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

fn link_statistics() -> Outcome {
    let topo = Topology::full_mesh(2, LinkModel::from_millis(4.8, 0.6, 0.3, 21));
    let mut net = SimNetwork::new(topo, MediumModel::unconstrained()).map_err(|e| e.to_string())?;
    let q = measure_link_quality(&mut net, 0, 1, 64, 200.0, 100.0).map_err(|e| e.to_string())?;
    let n = q.sent as f64;
    let sigma = (0.003 * 0.997 / n).sqrt() * 100.0;
    ensure(within(q.latency_mean_ms, 4.8, 0.1), || format!("latency {:.3} ms", q.latency_mean_ms))?;
    ensure(within(q.jitter_ms, 0.6, 0.1), || format!("jitter {:.3} ms", q.jitter_ms))?;
    ensure((q.loss_pct - 0.3).abs() <= 3.0 * sigma, || format!("loss {:.3}%", q.loss_pct))?;
    Ok(format!(
        "{} msgs: latency {:.3} ms, jitter {:.3} ms, loss {:.3}%",
        q.sent, q.latency_mean_ms, q.jitter_ms, q.loss_pct
    ))
}

fn scalability() -> Outcome {
    let medium = MediumModel {
        contention: Contention::None,
        ..MediumModel::default()
    };
    let rows = scalability_sweep(&[5, 10], 128, 200.0, medium, LinkModel::from_millis(4.8, 0.6, 0.0, 4), 3.0, 1.0)
        .map_err(|e| e.to_string())?;
    for r in &rows {
        let oracle = scalability_oracle(r.team_size, 128, 200.0, &medium);
        ensure(within(r.delivered_mean, 200.0, 0.01), || {
            format!("N={}: {:.2} msgs/s (oracle {oracle:.2})", r.team_size, r.delivered_mean)
        })?;
    }
    Ok("N=5,10 deliver 200 msgs/s per link within 1%".into())
}

fn beta_above_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..2000 {
        let raw = Tensor::vector((0..4).map(|_| rng.random_range(-50.0..50.0)).collect());
        let p = BetaParams::from_raw(&raw).map_err(|e| e.to_string())?;
        ensure(p.as_array().iter().all(|&a| a > 1.0), || format!("draw {i}: {p:?}"))?;
    }
    let policy = ControlPolicy::random(&mut rng);
    let obs = build_observation(&UnicycleState::at(0.0, 0.0, 0.0), [1.0, 1.0]);
    let p = policy_forward(&policy, &obs, &[]).map_err(|e| e.to_string())?;
    ensure(p.as_array().iter().all(|&a| a > 1.0), || format!("policy output {p:?}"))?;
    Ok("2000 raw draws and one policy pass".into())
}

fn pipeline_overlap() -> Outcome {
    let ms = |n| Duration::from_millis(n);
    let (e, m, d) = (
        Stage::identity("encode").with_delay(ms(2)),
        Stage::identity("aggregate").with_delay(ms(6)),
        Stage::identity("decode").with_delay(ms(4)),
    );
    let inputs: Vec<Tensor> = (0..20).map(|i| Tensor::vector(vec![i as f32])).collect();
    let par = run_pipeline(&e, &m, &d, &inputs, Ingress::OnDemand).map_err(|e| e.to_string())?;
    let seq = run_sequential(&e, &m, &d, &inputs, Ingress::OnDemand).map_err(|e| e.to_string())?;
    ensure(par.outputs() == seq.outputs(), || "outputs differ".into())?;
    let (p, s) = (par.stats.period_mean_ms(), seq.stats.period_mean_ms());
    let l = par.stats.latency_mean_ms();
    ensure((6.0..=6.9).contains(&p), || format!("parallel period {p:.2} ms, want 6..6.9"))?;
    ensure((12.0..=13.8).contains(&l), || format!("parallel latency {l:.2} ms, want 12..13.8"))?;
    ensure((12.0..=13.8).contains(&s), || format!("sequential period {s:.2} ms, want 12..13.8"))?;
    Ok(format!("period {p:.2} ms, latency {l:.2} ms parallel; period {s:.2} ms sequential"))
}

fn learned_checks(dir: Option<&std::path::Path>) -> Vec<CheckResult> {
    let skip = |name, what: &str| CheckResult {
        name,
        status: CheckStatus::Skip,
        detail: format!("no {what} weights found"),
    };
    let Some(dir) = dir else {
        return vec![skip("learned_assignment", "assignment"), skip("learned_control", "control")];
    };
    let files = |prefix: &str, parts: [&str; 3]| parts.map(|p| dir.join(format!("{prefix}_{p}.txt")));
    let mut out = Vec::new();

    let [ae, aa, ad] = files("assignment", ["encoder", "attention", "decoder"]);
    if [&ae, &aa, &ad].iter().all(|p| p.exists()) {
        out.push(check("learned_assignment", || {
            let policy = AssignmentPolicy::load(&ae, &aa, &ad).map_err(|e| e.to_string())?;
            let n = policy.encoder.input_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(14);
            let costs = CostMatrix::random(n, n, 1.0..10.0, &mut rng);
            let mut net = SimNetwork::new(
                Topology::full_mesh(n, LinkModel::from_millis(4.8, 0.6, 0.0, 14)),
                MediumModel::default(),
            )
            .map_err(|e| e.to_string())?;
            let cfg = AggregationConfig {
                paradigm: Paradigm::Broadcast,
                mode: Mode::Blocking { timeout_ns: 200 * NS_PER_MS },
                min_neighbors: 0,
                rounds: 1,
            };
            let out = run_assignment_scenario(
                &costs,
                &AssignmentMode::Learned(policy),
                &mut net,
                &cfg,
                &MeshOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            ensure(out.errors.is_empty(), || format!("{} robots failed", out.errors.len()))?;
            Ok(format!("{n} robots covered {} goals", out.covered_goals))
        }));
    } else {
        out.push(skip("learned_assignment", "assignment"));
    }

    let [ce, cm, cd] = files("control", ["encoder", "message", "decoder"]);
    if [&ce, &cm, &cd].iter().all(|p| p.exists()) {
        out.push(check("learned_control", || {
            let policy = ControlPolicy::load(&ce, &cm, &cd).map_err(|e| e.to_string())?;
            let obs = build_observation(&UnicycleState::at(0.0, 0.0, 0.0), [1.0, 0.0]);
            let p = policy_forward(&policy, &obs, &[]).map_err(|e| e.to_string())?;
            ensure(p.as_array().iter().all(|&a| a > 1.0), || format!("{p:?}"))?;
            Ok("policy loads and yields valid Beta parameters".into())
        }));
    } else {
        out.push(skip("learned_control", "control"));
    }
    out
}
