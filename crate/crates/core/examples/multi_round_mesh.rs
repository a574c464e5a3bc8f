//! Multi-round message passing over a simulated line graph, compared with
//! the centralized evaluation, plus the failure modes of a muted agent.

use std::collections::BTreeMap;

use neuromesh::aggregation::{
    centralized_rounds, reduce_aggregate, AggregationConfig, Mode, Paradigm, ReduceKind,
};
use neuromesh::mesh::{run_team_rounds, MeshOptions};
use neuromesh::netsim::{LinkModel, MediumModel, SimNetwork, Topology, NS_PER_MS};
use neuromesh::tensor::Tensor;
use neuromesh::wire::AgentId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let link = LinkModel::from_millis(4.8, 0.6, 0.0, 3);
    let topo = Topology::from_edges([0, 1, 2, 3], [(0, 1), (1, 2), (2, 3)], link)?;
    let features: BTreeMap<AgentId, Tensor> =
        (0..4).map(|i| (i, Tensor::vector(vec![if i == 0 { 1.0 } else { 0.0 }]))).collect();
    let sum = |_: AgentId, h: &Tensor, ns: &[neuromesh::wire::NeighborEntry]| {
        let f: Vec<Tensor> = ns.iter().map(|e| e.feature.clone()).collect();
        reduce_aggregate(ReduceKind::Sum, h, &f)
    };

    for rounds in 1..=3 {
        let cfg = AggregationConfig {
            paradigm: Paradigm::Reduction(ReduceKind::Sum),
            mode: Mode::Blocking { timeout_ns: 200 * NS_PER_MS },
            min_neighbors: 0,
            rounds,
        };
        let mut net = SimNetwork::new(topo.clone(), MediumModel::default())?;
        let run = run_team_rounds(&mut net, &cfg, &features, &MeshOptions::default(), sum)?;
        let base: Vec<Tensor> = features.values().cloned().collect();
        let want = centralized_rounds(ReduceKind::Sum, &topo.adjacency(), &base, rounds)?;
        let got: Vec<f32> = (0..4).map(|i| run.output(i).map_or(f32::NAN, |t| t.data()[0])).collect();
        let oracle: Vec<f32> = want.iter().map(|t| t.data()[0]).collect();
        println!("L={rounds}: mesh {got:?} centralized {oracle:?}");
    }

    let muted = MeshOptions {
        muted: [3].into(),
        ..MeshOptions::default()
    };
    for mode in [Mode::Blocking { timeout_ns: 100 * NS_PER_MS }, Mode::BestEffort { window_ns: 20 * NS_PER_MS }] {
        let cfg = AggregationConfig {
            paradigm: Paradigm::Reduction(ReduceKind::Sum),
            mode,
            min_neighbors: 0,
            rounds: 1,
        };
        let mut net = SimNetwork::new(topo.clone(), MediumModel::default())?;
        let run = run_team_rounds(&mut net, &cfg, &features, &muted, sum)?;
        println!("{mode:?}, agent 3 muted: agent 2 -> {:?}", run.outputs[&2]);
    }
    Ok(())
}
