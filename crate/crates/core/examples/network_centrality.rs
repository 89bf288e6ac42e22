//! Betweenness, eigencentrality, and repeated seed-to-seed max flow on the k-NN network.

use maskiso::classify::Task;
use maskiso::manifold::DistanceSpace;
use maskiso::pipeline::{self, Variant};
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs = match pipeline::orl_config_from_env() {
        Some(cfg) => pipeline::load_inputs(&cfg)?,
        None => synth::inputs(&SynthSpec::default())?,
    };
    let (_, run) = pipeline::run_task(
        &inputs,
        Task::Glasses,
        Variant::Patched,
        5,
        &Default::default(),
        DistanceSpace::Embedded,
    )?;
    let net = pipeline::network_analysis(&run, 3)?;
    let label = |id: maskiso::dataset::FaceId| inputs.corpus[id.index()].label();
    let c = &net.centrality;
    for id in &c.top_b {
        println!("top betweenness  {:<7} B = {:.1}", label(*id), c.betweenness[id.index()]);
    }
    for id in &c.top_ec {
        println!("top eigencentral {:<7} EC = {:.4}", label(*id), c.eigencentrality[id.index()]);
    }
    println!("flow {} -> {}", label(net.flow.source), label(net.flow.sink));
    for (i, round) in net.flow.rounds.iter().enumerate() {
        let (u, v) = round.max_flow_edge;
        println!(
            "  round {}: flow {}, cut {} edges, busiest {}-{} carries {:.2}",
            i + 1,
            round.max_flow_value,
            round.cut_edges.len(),
            label(u),
            label(v),
            round.flow_fraction
        );
    }
    println!("residual flow {}", net.flow.residual_flow);
    let ranked: Vec<String> = net.significant.iter().map(|&id| label(id)).collect();
    println!("significant faces: {}", ranked.join(", "));
    Ok(())
}
