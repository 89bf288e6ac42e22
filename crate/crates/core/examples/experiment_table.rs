//! The k sweep over both tasks and both variants, printed as CSV.

use maskiso::classify::Task;
use maskiso::export;
use maskiso::manifold::DistanceSpace;
use maskiso::pipeline::{self, RunConfig, Variant};
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cfg, inputs) = match pipeline::orl_config_from_env() {
        Some(cfg) => {
            let inputs = pipeline::load_inputs(&cfg)?;
            (cfg, inputs)
        }
        None => (RunConfig::default(), synth::inputs(&SynthSpec::default())?),
    };
    let sweep = pipeline::sweep(
        &inputs,
        &[Task::Glasses, Task::Smile],
        &[Variant::Patched, Variant::Full],
        &[3, 5, 7],
        &cfg.patch_params(),
        DistanceSpace::Embedded,
    )?;
    print!("{}", export::summary_csv(&sweep.rows, &cfg.hash()));
    println!();
    println!("best k per task and variant:");
    print!("{}", export::summary_csv(&sweep.best, &cfg.hash()));
    Ok(())
}
