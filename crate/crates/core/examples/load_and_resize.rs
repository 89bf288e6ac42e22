//! Writes a synthetic corpus in ORL layout, loads it back, and resizes it.
//!
//! `cargo run --example load_and_resize [DATA_ROOT]` loads an existing corpus instead.

use maskiso::dataset::{self, Subset};
use maskiso::image;
use maskiso::synth::{self, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let root = match std::env::args().nth(1) {
        Some(path) => path.into(),
        None => {
            let spec = SynthSpec {
                rows: 112,
                cols: 92,
                ..SynthSpec::default()
            };
            let (records, labels) = synth::generate(&spec)?;
            synth::write_corpus(tmp.path(), &records, &labels)?;
            tmp.path().to_path_buf()
        }
    };
    let corpus = dataset::load_corpus(&root, &Subset::default())?;
    let first = &corpus[0];
    println!(
        "loaded {} faces from {}; {} is {}x{}",
        corpus.len(),
        root.display(),
        first.label(),
        first.image.rows(),
        first.image.cols()
    );

    let resized = dataset::resize_corpus(&corpus, 90, 90)?;
    let v = dataset::face_vector(&resized[0]);
    println!("resized to 90x90; face vectors have q = {}", v.values.len());

    let bytes = image::encode_pgm(&resized[0].image);
    let back = image::decode_pgm(&bytes)?;
    println!("PGM round trip exact: {}", back == resized[0].image);

    let labels = dataset::load_annotations(root.join("annotations.csv"), &corpus)?;
    let glasses = labels.iter().filter(|(_, l)| l.glasses == 1).count();
    let smiles = labels.iter().filter(|(_, l)| l.smile == 1).count();
    println!("annotations: {glasses} with glasses, {smiles} smiling");
    Ok(())
}
