//! Isomap network over eigenface signatures and its 2-D classical MDS embedding.

use maskiso::classify::Task;
use maskiso::manifold;
use maskiso::pipeline::{self, Variant};
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs = match pipeline::orl_config_from_env() {
        Some(cfg) => pipeline::load_inputs(&cfg)?,
        None => synth::inputs(&SynthSpec::default())?,
    };
    let fs = pipeline::face_space(&inputs.corpus, Task::Glasses, Variant::Patched, &Default::default())?;
    for k in [3, 5, 7] {
        let emb = manifold::build_isomap(&fs.signatures, k)?;
        println!(
            "k = {k}: {} edges, {} bridges added for connectivity",
            emb.graph.edges().len(),
            emb.bridges.len()
        );
    }
    let emb = manifold::build_isomap(&fs.signatures, 5)?;
    println!("face      x          y         glasses");
    for (rec, [x, y]) in inputs.corpus.iter().zip(&emb.coords).take(10) {
        let glasses = inputs.annotations.get(rec.face_id).map_or(0, |l| l.glasses);
        println!("{:<8} {x:>10.1} {y:>10.1}   {glasses}", rec.label());
    }
    Ok(())
}
