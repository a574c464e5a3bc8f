//! Per-link delivered rate for growing full-mesh teams, with and without
//! a shared medium, next to the closed-form capacity bound.

use neuromesh::netsim::{scalability_sweep, Contention, LinkModel, MediumModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let link = LinkModel::from_millis(4.8, 0.6, 0.0, 9);
    for contention in [Contention::None, Contention::SharedMedium] {
        let medium = MediumModel {
            contention,
            ..MediumModel::default()
        };
        println!("{contention:?}");
        for r in scalability_sweep(&[5, 10, 30, 50], 128, 200.0, medium, link, 5.0, 1.0)? {
            println!(
                "  N={:>2}: {:>7.2} ± {:.2} msgs/s (oracle {:.2})",
                r.team_size, r.delivered_mean, r.delivered_std, r.oracle_value
            );
        }
    }
    Ok(())
}
