//! Finds the eye and mouth regions of one face and writes the intermediate images.
//!
//! `cargo run --example patch_faces [OUT_DIR]`

use std::path::PathBuf;

use maskiso::image;
use maskiso::patching::{self, PatchParams, PatchTarget};
use maskiso::synth::{self, CardParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "target/patch_faces".into()).into();
    std::fs::create_dir_all(&out)?;
    let card = synth::face_card(&CardParams {
        glasses: true,
        smile: true,
        ..CardParams::default()
    })?;
    image::write_pgm(&card, out.join("input.pgm"))?;

    let params = PatchParams::default();
    println!("Otsu threshold: {}", patching::otsu_threshold(&card)?);
    let mask = patching::foreground_mask(&card, params.polarity)?;
    for region in patching::high_pass_regions(&card, &mask, &params)? {
        println!(
            "region {:>2}: area {:>4}  centroid ({:>5.1}, {:>5.1})  ratio {:>5.2}  theta {:>6.1}",
            region.region_id,
            region.area,
            region.centroid.0,
            region.centroid.1,
            region.ratio(),
            region.theta
        );
    }

    for target in [PatchTarget::Eye, PatchTarget::Mouth] {
        let trace = patching::trace_patch(maskiso::dataset::FaceId(1), &card, target, &params);
        let name = format!("{target:?}").to_lowercase();
        let band = trace.outcome.band.expect("patched targets always have a band");
        println!(
            "{name}: rows {}..={} kept, fallback: {:?}",
            band.row_lo, band.row_hi, trace.outcome.fallback
        );
        for (suffix, img) in [("mask", &trace.mask), ("response", &trace.response), ("overlay", &trace.overlay)] {
            if let Some(img) = img {
                image::write_pgm(img, out.join(format!("{name}_{suffix}.pgm")))?;
            }
        }
        image::write_pgm(&trace.patched, out.join(format!("{name}_patched.pgm")))?;
    }
    println!("images written to {}", out.display());
    Ok(())
}
