//! Face corpus in the ORL directory layout (`root/s<subject>/<index>.pgm`) and the
//! glasses/smile annotation table.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{self, GrayImage};

/// Default working resolution (rows, cols).
pub const DEFAULT_SIZE: (usize, usize) = (90, 90);

/// 1-based position of a face in its corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaceId(pub u32);

impl FaceId {
    pub fn from_index(index: usize) -> Self {
        FaceId(index as u32 + 1)
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl std::fmt::Display for FaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceRecord {
    pub face_id: FaceId,
    pub subject_id: u32,
    pub image_index: u32,
    pub image: GrayImage,
}

impl FaceRecord {
    /// Node label used in graph exports, e.g. `s12_10`.
    pub fn label(&self) -> String {
        format!("s{}_{}", self.subject_id, self.image_index)
    }
}

/// Which image indices to load from every subject directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subset {
    /// Explicit indices, e.g. `[1, 10]`.
    Indices(Vec<u32>),
    /// Every `<j>.pgm` in `1..=10`.
    All,
}

impl Default for Subset {
    fn default() -> Self {
        Subset::Indices(vec![1, 10])
    }
}

impl Subset {
    fn indices(&self) -> Vec<u32> {
        match self {
            Subset::Indices(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
            Subset::All => (1..=10).collect(),
        }
    }
}

impl std::str::FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Subset::All);
        }
        let indices = s
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Param(format!("subset {s:?}: expected `all` or e.g. `1,10`")))?;
        if indices.is_empty() || indices.contains(&0) {
            return Err(Error::Param(format!("subset {s:?}")));
        }
        Ok(Subset::Indices(indices))
    }
}

fn subject_dirs(root: &Path) -> Result<Vec<u32>> {
    let entries =
        fs::read_dir(root).map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
    let mut subjects = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
        let name = entry.file_name();
        let Some(id) = name
            .to_str()
            .and_then(|n| n.strip_prefix('s'))
            .and_then(|n| n.parse::<u32>().ok())
        else {
            continue;
        };
        if entry.path().is_dir() && id > 0 {
            subjects.push(id);
        }
    }
    subjects.sort_unstable();
    Ok(subjects)
}

/// Loads the corpus ordered by `(subject_id, image_index)`; face ids follow that order.
pub fn load_corpus(root: impl AsRef<Path>, subset: &Subset) -> Result<Vec<FaceRecord>> {
    let root = root.as_ref();
    let subjects = subject_dirs(root)?;
    if subjects.is_empty() {
        return Err(Error::MissingImage(root.join("s1").join("1.pgm")));
    }
    let wanted: Vec<(u32, u32)> = subjects
        .iter()
        .flat_map(|&s| subset.indices().into_iter().map(move |j| (s, j)))
        .collect();
    let images: Vec<GrayImage> = wanted
        .par_iter()
        .map(|&(s, j)| {
            let path = image_path(root, s, j);
            if !path.is_file() {
                return Err(Error::MissingImage(path));
            }
            image::load_pgm(&path)
        })
        .collect::<Result<_>>()?;
    Ok(wanted
        .into_iter()
        .zip(images)
        .enumerate()
        .map(|(i, ((subject_id, image_index), image))| FaceRecord {
            face_id: FaceId::from_index(i),
            subject_id,
            image_index,
            image,
        })
        .collect())
}

pub fn image_path(root: &Path, subject: u32, index: u32) -> PathBuf {
    root.join(format!("s{subject}")).join(format!("{index}.pgm"))
}

/// Resizes every face to `rows x cols`, preserving ids and order.
pub fn resize_corpus(corpus: &[FaceRecord], rows: usize, cols: usize) -> Result<Vec<FaceRecord>> {
    corpus
        .par_iter()
        .map(|rec| {
            Ok(FaceRecord {
                image: image::resize(&rec.image, rows, cols)?,
                ..rec.clone()
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub glasses: u8,
    pub smile: u8,
}

/// Ground-truth labels keyed by face id; holds exactly one entry per corpus face.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AnnotationTable {
    labels: BTreeMap<FaceId, Labels>,
}

impl AnnotationTable {
    pub fn get(&self, id: FaceId) -> Option<Labels> {
        self.labels.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FaceId, Labels)> + '_ {
        self.labels.iter().map(|(&id, &l)| (id, l))
    }

    /// Builds a table directly; used for generated corpora and tests.
    pub fn from_labels(labels: impl IntoIterator<Item = (FaceId, Labels)>) -> Self {
        Self {
            labels: labels.into_iter().collect(),
        }
    }

    /// Flips every label (0 <-> 1) of both tasks.
    pub fn inverted(&self) -> Self {
        Self::from_labels(self.iter().map(|(id, l)| {
            (
                id,
                Labels {
                    glasses: 1 - l.glasses,
                    smile: 1 - l.smile,
                },
            )
        }))
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationRow {
    subject: u32,
    image: u32,
    glasses: String,
    smile: String,
}

fn parse_label(column: &'static str, raw: &str) -> Result<u8> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Label {
            column,
            value: other.to_string(),
        }),
    }
}

pub fn load_annotations(path: impl AsRef<Path>, corpus: &[FaceRecord]) -> Result<AnnotationTable> {
    let path = path.as_ref();
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Annotation(format!("cannot read {}: {e}", path.display())))?;
    parse_annotations(&text, corpus)
}

/// Parses `subject,image,glasses,smile` CSV text. Rows for faces outside the corpus are ignored.
pub fn parse_annotations(text: &str, corpus: &[FaceRecord]) -> Result<AnnotationTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Annotation(e.to_string()))?
        .clone();
    let expected = ["subject", "image", "glasses", "smile"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Annotation(format!(
            "header must be `subject,image,glasses,smile`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut by_key = BTreeMap::new();
    for row in reader.deserialize::<AnnotationRow>() {
        let row = row.map_err(|e| Error::Annotation(e.to_string()))?;
        let labels = Labels {
            glasses: parse_label("glasses", &row.glasses)?,
            smile: parse_label("smile", &row.smile)?,
        };
        if by_key.insert((row.subject, row.image), labels).is_some() {
            return Err(Error::Annotation(format!(
                "duplicate row for subject {} image {}",
                row.subject, row.image
            )));
        }
    }
    let mut labels = BTreeMap::new();
    for rec in corpus {
        let l = by_key.get(&(rec.subject_id, rec.image_index)).ok_or(
            Error::IncompleteAnnotation {
                subject: rec.subject_id,
                image: rec.image_index,
            },
        )?;
        labels.insert(rec.face_id, *l);
    }
    Ok(AnnotationTable { labels })
}

/// Serializes a table back to the CSV exchange format.
pub fn annotations_csv(table: &AnnotationTable, corpus: &[FaceRecord]) -> String {
    let mut out = String::from("subject,image,glasses,smile\n");
    for rec in corpus {
        if let Some(l) = table.get(rec.face_id) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                rec.subject_id, rec.image_index, l.glasses, l.smile
            ));
        }
    }
    out
}

/// A flattened (possibly patched) face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVector {
    pub face_id: FaceId,
    pub values: Vec<f64>,
}

pub fn face_vector(rec: &FaceRecord) -> FaceVector {
    FaceVector {
        face_id: rec.face_id,
        values: image::flatten(&rec.image),
    }
}
