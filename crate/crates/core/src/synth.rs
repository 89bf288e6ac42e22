//! Synthetic face cards with known labels.
//!
//! A card is a mid-gray face ellipse on a light ground with two short eyebrow bars, a
//! wide mouth bar, and optional features: dark lens ellipses under the eyebrows
//! (glasses), an open-mouth ellipse under the mouth bar (smile), and cheek blobs that
//! vary independently of either label. Geometry is laid out on a 90x90 reference grid
//! and scaled to the requested size.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{self, AnnotationTable, FaceId, FaceRecord, Labels};
use crate::error::{Error, Result};
use crate::image::{self, GrayImage};
use crate::pipeline::Inputs;

#[derive(Clone, Debug, PartialEq)]
pub struct CardParams {
    pub rows: usize,
    pub cols: usize,
    pub background: u8,
    pub face_tone: u8,
    /// Reference-grid row of the eyebrow bars.
    pub brow_row: f64,
    pub brow_width: f64,
    pub glasses: bool,
    /// Lens semi-axes on the reference grid (rows, cols).
    pub lens: (f64, f64),
    pub mouth_width: f64,
    pub smile: bool,
    /// Darkness of the two cheek blobs, if present.
    pub cheeks: Option<u8>,
}

impl Default for CardParams {
    fn default() -> Self {
        Self {
            rows: 90,
            cols: 90,
            background: 250,
            face_tone: 130,
            brow_row: 28.0,
            brow_width: 16.0,
            glasses: false,
            lens: (5.0, 9.0),
            mouth_width: 38.0,
            smile: false,
            cheeks: None,
        }
    }
}

const FEATURE_TONE: u8 = 0;
const LENS_TONE: u8 = 60;

struct Canvas {
    img: GrayImage,
    sy: f64,
    sx: f64,
}

impl Canvas {
    /// Filled ellipse whose edge ramps linearly into the existing pixels over `soft` pixels.
    fn ellipse(&mut self, cy: f64, cx: f64, ry: f64, rx: f64, value: u8, soft: f64) {
        let (cy, cx, ry, rx) = (cy * self.sy, cx * self.sx, ry * self.sy, rx * self.sx);
        let radius = ry.min(rx);
        for r in 0..self.img.rows() {
            for c in 0..self.img.cols() {
                let (y, x) = ((r as f64 + 0.5 - cy) / ry, (c as f64 + 0.5 - cx) / rx);
                // approximate distance outside the boundary, in pixels
                let d = ((x * x + y * y).sqrt() - 1.0) * radius;
                let alpha = (0.5 - d / soft).clamp(0.0, 1.0);
                if alpha > 0.0 {
                    let old = f64::from(self.img.get(r, c));
                    let v = alpha * f64::from(value) + (1.0 - alpha) * old;
                    self.img.set(r, c, v.round() as u8);
                }
            }
        }
    }

    /// Axis-aligned bar; height is in output pixels so edges stay crisp at any scale.
    fn bar(&mut self, row: f64, center_col: f64, width: f64, height: usize, value: u8) {
        let r0 = (row * self.sy).round() as usize;
        let half = width * self.sx / 2.0;
        let c0 = (center_col * self.sx - half).round().max(0.0) as usize;
        let c1 = ((center_col * self.sx + half).round() as usize).min(self.img.cols());
        for r in r0..(r0 + height).min(self.img.rows()) {
            for c in c0..c1 {
                self.img.set(r, c, value);
            }
        }
    }
}

pub fn face_card(p: &CardParams) -> Result<GrayImage> {
    let mut cv = Canvas {
        img: GrayImage::filled(p.rows, p.cols, p.background)?,
        sy: p.rows as f64 / 90.0,
        sx: p.cols as f64 / 90.0,
    };
    cv.ellipse(45.0, 45.0, 41.0, 33.0, p.face_tone, 8.0);
    if let Some(tone) = p.cheeks {
        cv.ellipse(56.0, 22.0, 7.0, 7.0, tone, 3.0);
        cv.ellipse(56.0, 68.0, 7.0, 7.0, tone, 3.0);
    }
    for cx in [29.0, 61.0] {
        cv.bar(p.brow_row, cx, p.brow_width, 3, FEATURE_TONE);
    }
    if p.glasses {
        for cx in [29.0, 61.0] {
            cv.ellipse(p.brow_row + 12.0, cx, p.lens.0, p.lens.1, LENS_TONE, 2.0);
        }
    }
    cv.bar(66.0, 45.0, p.mouth_width, 2, FEATURE_TONE);
    if p.smile {
        cv.ellipse(77.0, 45.0, 3.0, 6.0, LENS_TONE, 2.0);
    }
    Ok(cv.img)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub subjects: u32,
    /// Image indices generated per subject.
    pub indices: Vec<u32>,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Adds label-independent cheek blobs below the eye band.
    pub distractors: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            subjects: 20,
            indices: vec![1, 10],
            rows: 90,
            cols: 90,
            seed: 7,
            distractors: true,
        }
    }
}

/// Generates a labeled corpus. Glasses alternate by subject; smiles alternate by
/// `subject + image position` so both tasks are balanced. Inside the eye band the
/// cards differ only by the lenses; mouth width, smiles, and cheeks vary below it.
pub fn generate(spec: &SynthSpec) -> Result<(Vec<FaceRecord>, AnnotationTable)> {
    if spec.subjects == 0 || spec.indices.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for subject in 1..=spec.subjects {
        for (pos, &index) in spec.indices.iter().enumerate() {
            let glasses = subject % 2 == 1;
            let smile = (subject as usize + pos) % 2 == 0;
            let params = CardParams {
                rows: spec.rows,
                cols: spec.cols,
                glasses,
                lens: (rng.gen_range(4.8..=5.2), rng.gen_range(8.5..=9.5)),
                mouth_width: rng.gen_range(37.0..=42.0),
                smile,
                cheeks: (spec.distractors && rng.gen_bool(0.5)).then(|| rng.gen_range(20..=80)),
                ..CardParams::default()
            };
            let id = FaceId::from_index(records.len());
            records.push(FaceRecord {
                face_id: id,
                subject_id: subject,
                image_index: index,
                image: face_card(&params)?,
            });
            labels.push((
                id,
                Labels {
                    glasses: u8::from(glasses),
                    smile: u8::from(smile),
                },
            ));
        }
    }
    Ok((records, AnnotationTable::from_labels(labels)))
}

/// Writes `root/s<subject>/<index>.pgm` plus `root/annotations.csv`.
pub fn write_corpus(root: &Path, records: &[FaceRecord], table: &AnnotationTable) -> Result<()> {
    for rec in records {
        let path = dataset::image_path(root, rec.subject_id, rec.image_index);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        image::write_pgm(&rec.image, &path)?;
    }
    let csv = root.join("annotations.csv");
    fs::write(&csv, dataset::annotations_csv(table, records))
        .map_err(|e| Error::io(format!("writing {}", csv.display()), e))
}

/// Generated cards as pipeline inputs.
pub fn inputs(spec: &SynthSpec) -> Result<Inputs> {
    let (corpus, annotations) = generate(spec)?;
    Ok(Inputs { corpus, annotations })
}
