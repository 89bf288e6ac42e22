//! Two-seed clustering for both tasks, patched versus full faces.

use maskiso::classify::Task;
use maskiso::manifold::DistanceSpace;
use maskiso::pipeline::{self, Variant};
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs = match pipeline::orl_config_from_env() {
        Some(cfg) => pipeline::load_inputs(&cfg)?,
        None => synth::inputs(&SynthSpec::default())?,
    };
    println!("task     variant  seeds        SEN    SPEC   ACC    AUC");
    for task in [Task::Glasses, Task::Smile] {
        for variant in [Variant::Patched, Variant::Full] {
            let (_, run) =
                pipeline::run_task(&inputs, task, variant, 5, &Default::default(), DistanceSpace::Embedded)?;
            let r = &run.report;
            let m = &r.metrics;
            println!(
                "{:<8} {:<8} {:>3}/{:<3} {:<3} {:.3}  {:.3}  {:.3}  {:.3}",
                task.name(),
                variant.name(),
                r.seeds.z1,
                r.seeds.z2,
                if r.degenerate_seed_flag { "(d)" } else { "" },
                m.sen,
                m.spec,
                m.acc,
                m.auc
            );
        }
    }
    Ok(())
}
