//! Three unicycle robots crossing to goals, first with the scripted
//! controller and then with an untrained message-passing policy.
//!
//! `cargo run --example unicycle_navigation -- <dir>` also writes the policy
//! weights to `<dir>`.

use neuromesh::control::{
    run_navigation_scenario, ControlPolicy, Controller, NavigationConfig, Sampling, ScriptedController,
    UnicycleState,
};
use neuromesh::netsim::{LinkModel, MediumModel, SimNetwork, Topology};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let starts = vec![
        UnicycleState::at(0.0, 0.0, 0.0),
        UnicycleState::at(0.0, 1.0, 0.0),
        UnicycleState::at(0.0, 2.0, 0.0),
    ];
    let goals = vec![[3.0, 0.0], [3.0, 1.0], [3.0, 2.0]];
    let net = || SimNetwork::new(Topology::full_mesh(3, LinkModel::from_millis(4.8, 0.6, 0.3, 8)), MediumModel::default());
    let cfg = NavigationConfig {
        seed: 8,
        ..NavigationConfig::default()
    };

    let scripted = Controller::Scripted(ScriptedController::default());
    let out = run_navigation_scenario(&starts, &goals, &scripted, &mut net()?, &cfg)?;
    println!(
        "scripted: success={} steps={} min distance {:.3} m",
        out.success, out.steps, out.min_pairwise_distance
    );

    let policy = ControlPolicy::random(&mut ChaCha8Rng::seed_from_u64(8));
    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::Path::new(&dir);
        std::fs::create_dir_all(dir)?;
        let p = |s: &str| dir.join(format!("control_{s}.txt"));
        policy.save(&p("encoder"), &p("message"), &p("decoder"))?;
        println!("weights written to {}", dir.display());
    }
    let learned = Controller::Learned {
        policy,
        sampling: Sampling::Mean,
    };
    let short = NavigationConfig {
        max_steps: 100,
        ..cfg
    };
    let out = run_navigation_scenario(&starts, &goals, &learned, &mut net()?, &short)?;
    println!(
        "untrained policy: success={} collided={} steps={} exchange failures {}",
        out.success, out.collided, out.steps, out.exchange_failures
    );
    Ok(())
}
