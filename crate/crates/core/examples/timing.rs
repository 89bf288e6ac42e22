//! Per-stage wall-clock timing on 80 ORL-sized faces (or `$MASKISO_ORL_ROOT`).

use maskiso::classify::Task;
use maskiso::manifold::DistanceSpace;
use maskiso::pipeline::{self, Variant};
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs = match pipeline::orl_config_from_env() {
        Some(cfg) => pipeline::load_inputs(&cfg)?,
        None => {
            let spec = SynthSpec {
                subjects: 40,
                rows: 112,
                cols: 92,
                ..SynthSpec::default()
            };
            let mut inputs = synth::inputs(&spec)?;
            inputs.corpus = maskiso::dataset::resize_corpus(&inputs.corpus, 90, 90)?;
            inputs
        }
    };
    let t = pipeline::time_pipeline(
        &inputs,
        Task::Glasses,
        Variant::Patched,
        5,
        &Default::default(),
        DistanceSpace::Embedded,
    )?;
    println!("{} images", t.images);
    println!("patch          {:>8.3} s  ({:.4} s/image)", t.patch_s, t.patch_per_image_s);
    println!("eigen + isomap {:>8.3} s  ({:.4} s/image)", t.eigen_isomap_s, t.eigen_isomap_per_image_s);
    println!("cluster        {:>8.3} s  ({:.4} s/image)", t.cluster_s, t.cluster_per_image_s);
    println!("total per image {:.4} s", t.total_per_image_s);
    Ok(())
}
