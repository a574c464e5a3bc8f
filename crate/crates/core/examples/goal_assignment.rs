//! Decentralized goal assignment: the Hungarian expert over the mesh, then
//! an untrained attention policy whose weights are saved and reloaded.
//!
//! `cargo run --example goal_assignment -- <dir>` also writes the policy
//! weights to `<dir>`, which `neuromesh selftest --weights-dir <dir>` picks up.

use neuromesh::aggregation::{AggregationConfig, Mode, Paradigm};
use neuromesh::assignment::{
    hungarian_solve, run_assignment_scenario, sr_metric, AssignmentMode, AssignmentPolicy, CostMatrix,
};
use neuromesh::mesh::MeshOptions;
use neuromesh::netsim::{LinkModel, MediumModel, SimNetwork, Topology, NS_PER_MS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let costs = CostMatrix::random(n, n, 1.0..10.0, &mut rng);
    let central = hungarian_solve(&costs)?;
    println!("centralized optimum {:?} cost {:.3}", central.goals, central.total_cost);

    let cfg = AggregationConfig {
        paradigm: Paradigm::Broadcast,
        mode: Mode::Blocking { timeout_ns: 200 * NS_PER_MS },
        min_neighbors: 0,
        rounds: 1,
    };
    let net = || SimNetwork::new(Topology::full_mesh(n, LinkModel::from_millis(4.8, 0.6, 0.0, 3)), MediumModel::default());

    let expert = run_assignment_scenario(&costs, &AssignmentMode::Expert, &mut net()?, &cfg, &MeshOptions::default())?;
    println!("expert: choices {:?}, C_out {:.3}, C_opt {:.3}", expert.choices, expert.c_out, expert.c_opt);

    let policy = AssignmentPolicy::random(n, 24, &mut rng)?;
    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::Path::new(&dir);
        std::fs::create_dir_all(dir)?;
        let p = |s: &str| dir.join(format!("assignment_{s}.txt"));
        policy.save(&p("encoder"), &p("attention"), &p("decoder"))?;
        println!("weights written to {}", dir.display());
    }
    let learned = run_assignment_scenario(&costs, &AssignmentMode::Learned(policy), &mut net()?, &cfg, &MeshOptions::default())?;
    println!(
        "untrained policy: choices {:?}, covered {}/{n}, conflicts {}, SR {:.1}%",
        learned.choices,
        learned.covered_goals,
        learned.conflicts,
        sr_metric(learned.covered_goals, n, 1)?
    );
    Ok(())
}
