//! Two-seed clustering and its evaluation.
//!
//! The two faces farthest apart become the only labeled examples; every other face
//! takes the label of the nearer seed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotationTable, FaceId, Labels};
use crate::error::{Error, Result};
use crate::manifold::{DistanceSpace, EmbeddedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Occlusion by glasses in the eye region.
    Glasses,
    Smile,
}

impl Task {
    pub fn label(self, labels: Labels) -> u8 {
        match self {
            Task::Glasses => labels.glasses,
            Task::Smile => labels.smile,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Glasses => "glasses",
            Task::Smile => "smile",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glasses" | "occlusion" | "1" => Ok(Task::Glasses),
            "smile" | "2" => Ok(Task::Smile),
            _ => Err(Error::Param(format!("unknown task {s:?}"))),
        }
    }
}

/// Source of pairwise distances between faces, indexed by position.
pub trait PairDistance {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;
}

/// An embedding viewed through one of its distance spaces.
pub struct EmbeddingDistance<'a> {
    pub embedding: &'a EmbeddedGraph,
    pub space: DistanceSpace,
}

impl PairDistance for EmbeddingDistance<'_> {
    fn len(&self) -> usize {
        self.embedding.n()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.embedding.distance(self.space, i, j)
    }
}

/// Plain 2-D points.
impl PairDistance for [[f64; 2]] {
    fn len(&self) -> usize {
        <[[f64; 2]]>::len(self)
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        ((self[i][0] - self[j][0]).powi(2) + (self[i][1] - self[j][1]).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPair {
    pub z1: FaceId,
    pub z2: FaceId,
    pub labels: (u8, u8),
    pub separation: f64,
}

impl SeedPair {
    pub fn degenerate(&self) -> bool {
        self.labels.0 == self.labels.1
    }

    pub fn contains(&self, id: FaceId) -> bool {
        id == self.z1 || id == self.z2
    }
}

fn truth(annotations: &AnnotationTable, task: Task, id: FaceId) -> Result<u8> {
    annotations
        .get(id)
        .map(|l| task.label(l))
        .ok_or_else(|| Error::Annotation(format!("no label for face {id}")))
}

/// Farthest pair; exact ties keep the lexicographically smallest `(i, j)`.
pub fn select_seeds<D: PairDistance + ?Sized>(
    dist: &D,
    annotations: &AnnotationTable,
    task: Task,
) -> Result<SeedPair> {
    let n = dist.len();
    if n < 3 {
        return Err(Error::Param(format!("seed selection needs at least 3 faces, got {n}")));
    }
    let mut best = (f64::NEG_INFINITY, 0, 1);
    for i in 0..n {
        for j in i + 1..n {
            let d = dist.dist(i, j);
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    let (z1, z2) = (FaceId::from_index(best.1), FaceId::from_index(best.2));
    Ok(SeedPair {
        z1,
        z2,
        labels: (truth(annotations, task, z1)?, truth(annotations, task, z2)?),
        separation: best.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub assigned: u8,
    /// `D(i, Z2) - D(i, Z1)`; positive favors the label of `Z1`.
    pub score: f64,
}

/// Nearest-seed labels for every non-seed face. Equidistant faces take `C_Z1`.
pub fn assign<D: PairDistance + ?Sized>(dist: &D, seeds: &SeedPair) -> BTreeMap<FaceId, Assignment> {
    let (z1, z2) = (seeds.z1.index(), seeds.z2.index());
    (0..dist.len())
        .filter(|&i| i != z1 && i != z2)
        .map(|i| {
            let d1 = dist.dist(i, z1);
            let d2 = dist.dist(i, z2);
            let assigned = if d1 <= d2 { seeds.labels.0 } else { seeds.labels.1 };
            (FaceId::from_index(i), Assignment { assigned, score: d2 - d1 })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceResult {
    pub assigned: u8,
    pub truth: u8,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Recall, `tp / (tp + fn)`.
    pub sen: f64,
    pub spec: f64,
    pub acc: f64,
    pub auc: f64,
    /// `tp / (tp + tn)`, an alternative sensitivity kept alongside recall for comparison.
    pub sen_paper: f64,
}

impl Metrics {
    pub fn from_counts(c: &Confusion, auc: f64) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                f64::NAN
            } else {
                num as f64 / den as f64
            }
        };
        Self {
            sen: ratio(c.tp, c.tp + c.fn_),
            spec: ratio(c.tn, c.tn + c.fp),
            acc: ratio(c.tp + c.tn, c.total()),
            auc,
            sen_paper: ratio(c.tp, c.tp + c.tn),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub task: Task,
    pub k: usize,
    pub seeds: SeedPair,
    pub degenerate_seed_flag: bool,
    pub confusion: Confusion,
    pub metrics: Metrics,
    pub per_face: BTreeMap<FaceId, FaceResult>,
    pub flags: Vec<String>,
    /// How the AUC score is defined.
    pub score_definition: String,
}

pub const SCORE_DEFINITION: &str =
    "signed seed-distance margin D(i,Z2)-D(i,Z1), oriented toward class 1";

/// ROC area by the trapezoidal rule over thresholds at each distinct score.
///
/// Higher scores mean "more likely class 1". Returns `NaN` when either class is absent.
pub fn roc_auc(scores: &[f64], truth: &[u8]) -> f64 {
    let pos = truth.iter().filter(|&&t| t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return f64::NAN;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        // group ties
        while k < order.len() && scores[order[k]] == s {
            if truth[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let tpr = tp as f64 / pos as f64;
        let fpr = fp as f64 / neg as f64;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area
}

pub fn evaluate(
    assignments: &BTreeMap<FaceId, Assignment>,
    seeds: &SeedPair,
    annotations: &AnnotationTable,
    task: Task,
    k: usize,
) -> Result<ClassificationReport> {
    let mut per_face = BTreeMap::new();
    let mut confusion = Confusion::default();
    for (&id, a) in assignments {
        let t = truth(annotations, task, id)?;
        match (t, a.assigned) {
            (1, 1) => confusion.tp += 1,
            (0, 0) => confusion.tn += 1,
            (0, _) => confusion.fp += 1,
            _ => confusion.fn_ += 1,
        }
        per_face.insert(
            id,
            FaceResult {
                assigned: a.assigned,
                truth: t,
                score: a.score,
            },
        );
    }
    // a positive margin favors Z1's label
    let toward_one = if seeds.labels.0 == 1 { 1.0 } else { -1.0 };
    let scores: Vec<f64> = per_face.values().map(|f| toward_one * f.score).collect();
    let truths: Vec<u8> = per_face.values().map(|f| f.truth).collect();
    let auc = roc_auc(&scores, &truths);
    let metrics = Metrics::from_counts(&confusion, auc);

    let mut flags = Vec::new();
    if seeds.degenerate() {
        flags.push("degenerate_seeds".to_string());
    }
    if confusion.tp + confusion.fn_ == 0 {
        flags.push("no_positives".to_string());
    }
    if confusion.tn + confusion.fp == 0 {
        flags.push("no_negatives".to_string());
    }
    Ok(ClassificationReport {
        task,
        k,
        seeds: *seeds,
        degenerate_seed_flag: seeds.degenerate(),
        confusion,
        metrics,
        per_face,
        flags,
        score_definition: SCORE_DEFINITION.to_string(),
    })
}

/// Seeds, assignment and evaluation over one distance source.
pub fn classify<D: PairDistance + ?Sized>(
    dist: &D,
    annotations: &AnnotationTable,
    task: Task,
    k: usize,
) -> Result<ClassificationReport> {
    let seeds = select_seeds(dist, annotations, task)?;
    let assignments = assign(dist, &seeds);
    evaluate(&assignments, &seeds, annotations, task, k)
}
