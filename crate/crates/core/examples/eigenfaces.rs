//! Eigenface decomposition of patched faces: spectrum, residuals, and the gallery.
//!
//! Uses the corpus in `$MASKISO_ORL_ROOT` when set, synthetic cards otherwise.

use maskiso::classify::Task;
use maskiso::eigenface;
use maskiso::image;
use maskiso::pipeline::{self, Variant};
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs = match pipeline::orl_config_from_env() {
        Some(cfg) => pipeline::load_inputs(&cfg)?,
        None => synth::inputs(&SynthSpec::default())?,
    };
    let fs = pipeline::face_space(&inputs.corpus, Task::Glasses, Variant::Patched, &Default::default())?;
    let sys = &fs.model.system;
    let total: f64 = sys.eigenvalues.iter().sum();
    println!("n = {}, q = {}, retained = {}", fs.model.faces.n(), fs.model.faces.q(), sys.retained());
    let mut cumulative = 0.0;
    for (i, v) in sys.eigenvalues.iter().take(8).enumerate() {
        cumulative += v / total;
        let residual = eigenface::eigen_residual(&fs.model.signature, sys, i);
        println!("lambda_{i:<2} {v:>14.1}  cumulative {cumulative:.3}  residual {residual:.1e}");
    }

    let out = std::path::Path::new("target/eigenfaces");
    std::fs::create_dir_all(out)?;
    let (rows, cols) = (inputs.corpus[0].image.rows(), inputs.corpus[0].image.cols());
    let count = 16.min(sys.retained());
    let gallery = eigenface::render_eigenfaces(sys, &fs.model.faces.mean, rows, cols, count)?;
    for (i, img) in gallery.iter().enumerate() {
        image::write_pgm(img, out.join(format!("{i:03}.pgm")))?;
    }
    println!("mean face and {count} eigenfaces written to {}", out.display());
    Ok(())
}
