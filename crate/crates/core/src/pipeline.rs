//! End-to-end runs: configuration, the per-task pipeline, k sweeps, network
//! analysis, and stage timing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{self, ClassificationReport, EmbeddingDistance, Task};
use crate::dataset::{self, AnnotationTable, FaceId, FaceRecord, Subset};
use crate::eigenface::{self, EigenfaceModel};
use crate::error::{Error, Result};
use crate::manifold::{self, DistanceSpace, EmbeddedGraph};
use crate::netmetrics::{self, CentralityReport, FlowCutResult};
use crate::patching::{self, PatchParams, PatchTarget, PatchedCorpus, Polarity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Only the task's eye or mouth band survives.
    Patched,
    Full,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Patched => "patched",
            Variant::Full => "full",
        }
    }

    pub fn target(self, task: Task) -> PatchTarget {
        match self {
            Variant::Full => PatchTarget::Full,
            Variant::Patched => target_for(task),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patched" => Ok(Variant::Patched),
            "full" => Ok(Variant::Full),
            _ => Err(Error::Param(format!("unknown variant {s:?}"))),
        }
    }
}

/// Glasses live in the eye band, smiles in the mouth band.
pub fn target_for(task: Task) -> PatchTarget {
    match task {
        Task::Glasses => PatchTarget::Eye,
        Task::Smile => PatchTarget::Mouth,
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(k) => vec![k],
        OneOrMany::Many(ks) => ks,
    })
}

/// Flat key/value run configuration, loadable from TOML.
///
/// `task` and `variant` left unset mean "both" for the experiment sweep and
/// glasses/patched for single runs. Only the first `k` is used outside the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_root: PathBuf,
    /// Defaults to `<data_root>/annotations.csv`.
    pub annotations: Option<PathBuf>,
    pub subset: String,
    pub task: Option<Task>,
    pub variant: Option<Variant>,
    #[serde(deserialize_with = "one_or_many")]
    pub k: Vec<usize>,
    pub distance: DistanceSpace,
    pub rounds: usize,
    pub patch_half_height: usize,
    pub eye_ratio_lo: f64,
    pub eye_ratio_hi: f64,
    pub mouth_ratio: f64,
    pub hp_percentile: f64,
    pub min_region_area: usize,
    pub polarity: Polarity,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PatchParams::default();
        Self {
            data_root: PathBuf::from("data"),
            annotations: None,
            subset: "1,10".into(),
            task: None,
            variant: None,
            k: vec![5],
            distance: DistanceSpace::default(),
            rounds: 3,
            patch_half_height: p.half_height,
            eye_ratio_lo: p.eye_ratio_lo,
            eye_ratio_hi: p.eye_ratio_hi,
            mouth_ratio: p.mouth_ratio,
            hp_percentile: p.hp_percentile,
            min_region_area: p.min_region_area,
            polarity: p.polarity,
            output_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(Error::Param(format!("k values must be at least 1, got {:?}", self.k)));
        }
        if self.rounds == 0 {
            return Err(Error::Param("rounds must be at least 1".into()));
        }
        if !(0.0..=100.0).contains(&self.hp_percentile) {
            return Err(Error::Param(format!("hp_percentile {} outside [0, 100]", self.hp_percentile)));
        }
        if self.threads == Some(0) {
            return Err(Error::Param("threads must be at least 1".into()));
        }
        self.subset()?;
        Ok(())
    }

    pub fn patch_params(&self) -> PatchParams {
        PatchParams {
            half_height: self.patch_half_height,
            eye_ratio_lo: self.eye_ratio_lo,
            eye_ratio_hi: self.eye_ratio_hi,
            mouth_ratio: self.mouth_ratio,
            hp_percentile: self.hp_percentile,
            min_region_area: self.min_region_area,
            polarity: self.polarity,
        }
    }

    pub fn subset(&self) -> Result<Subset> {
        self.subset.parse()
    }

    pub fn annotations_path(&self) -> PathBuf {
        self.annotations
            .clone()
            .unwrap_or_else(|| self.data_root.join("annotations.csv"))
    }

    pub fn task(&self) -> Task {
        self.task.unwrap_or(Task::Glasses)
    }

    pub fn variant(&self) -> Variant {
        self.variant.unwrap_or(Variant::Patched)
    }

    pub fn first_k(&self) -> usize {
        self.k.first().copied().unwrap_or(5)
    }

    pub fn tasks(&self) -> Vec<Task> {
        self.task.map_or_else(|| vec![Task::Glasses, Task::Smile], |t| vec![t])
    }

    pub fn variants(&self) -> Vec<Variant> {
        self.variant
            .map_or_else(|| vec![Variant::Patched, Variant::Full], |v| vec![v])
    }

    /// Every setting that can change an output. Output location and thread count are left out.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
            map.remove("threads");
            map.insert(
                "annotations".into(),
                serde_json::Value::String(self.annotations_path().display().to_string()),
            );
        }
        v
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::echo`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Environment variable naming an ORL-layout corpus root.
pub const ORL_ROOT_VAR: &str = "MASKISO_ORL_ROOT";
/// Optional override for the annotation file of [`ORL_ROOT_VAR`].
pub const ORL_ANNOTATIONS_VAR: &str = "MASKISO_ORL_ANNOTATIONS";

/// Default config pointed at the corpus named by the environment, if any.
pub fn orl_config_from_env() -> Option<RunConfig> {
    let root = std::env::var_os(ORL_ROOT_VAR)?;
    Some(RunConfig {
        data_root: root.into(),
        annotations: std::env::var_os(ORL_ANNOTATIONS_VAR).map(PathBuf::from),
        ..RunConfig::default()
    })
}

/// Corpus resized to the working size, plus its labels.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub corpus: Vec<FaceRecord>,
    pub annotations: AnnotationTable,
}

/// Loads the configured subset and resizes it to [`dataset::DEFAULT_SIZE`].
pub fn load_faces(cfg: &RunConfig) -> Result<Vec<FaceRecord>> {
    let corpus = dataset::load_corpus(&cfg.data_root, &cfg.subset()?)?;
    let (rows, cols) = dataset::DEFAULT_SIZE;
    dataset::resize_corpus(&corpus, rows, cols)
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let corpus = load_faces(cfg)?;
    let annotations = dataset::load_annotations(cfg.annotations_path(), &corpus)?;
    Ok(Inputs { corpus, annotations })
}

/// Patched corpus and its eigenface model; shared by every k.
#[derive(Clone, Debug)]
pub struct FaceSpace {
    pub task: Task,
    pub variant: Variant,
    pub patched: PatchedCorpus,
    pub model: EigenfaceModel,
    pub signatures: Vec<Vec<f64>>,
}

pub fn face_space(
    corpus: &[FaceRecord],
    task: Task,
    variant: Variant,
    params: &PatchParams,
) -> Result<FaceSpace> {
    let patched = patching::make_patched_corpus(corpus, variant.target(task), params);
    let model = eigenface::fit(&patched.vectors)?;
    let signatures = eigenface::signatures(&model.signature)
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    Ok(FaceSpace {
        task,
        variant,
        patched,
        model,
        signatures,
    })
}

#[derive(Clone, Debug)]
pub struct TaskRun {
    pub task: Task,
    pub variant: Variant,
    pub k: usize,
    pub space: DistanceSpace,
    pub isomap: EmbeddedGraph,
    pub report: ClassificationReport,
}

pub fn classify_space(
    fs: &FaceSpace,
    annotations: &AnnotationTable,
    k: usize,
    space: DistanceSpace,
) -> Result<TaskRun> {
    let isomap = manifold::build_isomap(&fs.signatures, k)?;
    let dist = EmbeddingDistance {
        embedding: &isomap,
        space,
    };
    let report = classify::classify(&dist, annotations, fs.task, k)?;
    Ok(TaskRun {
        task: fs.task,
        variant: fs.variant,
        k,
        space,
        isomap,
        report,
    })
}

/// Patch, eigenfaces, Isomap, seeds, assignment, and evaluation for one setting.
pub fn run_task(
    inputs: &Inputs,
    task: Task,
    variant: Variant,
    k: usize,
    params: &PatchParams,
    space: DistanceSpace,
) -> Result<(FaceSpace, TaskRun)> {
    let fs = face_space(&inputs.corpus, task, variant, params)?;
    let run = classify_space(&fs, &inputs.annotations, k, space)?;
    Ok((fs, run))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub task: Task,
    pub variant: Variant,
    pub k: usize,
    pub sen: f64,
    pub spec: f64,
    pub acc: f64,
    pub auc: f64,
    pub sen_paper: f64,
    /// `;`-separated run flags, e.g. `degenerate_seeds;patch_fallbacks=2`.
    pub flags: String,
}

impl SummaryRow {
    pub fn new(run: &TaskRun, fallbacks: usize) -> Self {
        let mut flags = run.report.flags.clone();
        if fallbacks > 0 {
            flags.push(format!("patch_fallbacks={fallbacks}"));
        }
        if !run.isomap.bridges.is_empty() {
            flags.push(format!("bridges={}", run.isomap.bridges.len()));
        }
        let m = &run.report.metrics;
        Self {
            task: run.task,
            variant: run.variant,
            k: run.k,
            sen: m.sen,
            spec: m.spec,
            acc: m.acc,
            auc: m.auc,
            sen_paper: m.sen_paper,
            flags: flags.join(";"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    /// One row per (task, variant, k), in that nesting order.
    pub rows: Vec<SummaryRow>,
    /// Highest-AUC row per (task, variant); NaN ranks last, ties keep the smaller k.
    pub best: Vec<SummaryRow>,
}

pub fn sweep(
    inputs: &Inputs,
    tasks: &[Task],
    variants: &[Variant],
    ks: &[usize],
    params: &PatchParams,
    space: DistanceSpace,
) -> Result<Sweep> {
    let mut rows = Vec::new();
    let mut best = Vec::new();
    for &task in tasks {
        for &variant in variants {
            let fs = face_space(&inputs.corpus, task, variant, params)?;
            let fallbacks = fs.patched.fallback_count();
            let mut group: Vec<SummaryRow> = Vec::new();
            for &k in ks {
                let run = classify_space(&fs, &inputs.annotations, k, space)?;
                group.push(SummaryRow::new(&run, fallbacks));
            }
            if let Some(top) = best_by_auc(&group) {
                best.push(top.clone());
            }
            rows.extend(group);
        }
    }
    Ok(Sweep { rows, best })
}

fn best_by_auc(rows: &[SummaryRow]) -> Option<&SummaryRow> {
    rows.iter().fold(None, |best: Option<&SummaryRow>, row| match best {
        None => Some(row),
        Some(b) if b.auc.is_nan() && !row.auc.is_nan() => Some(row),
        Some(b) if row.auc > b.auc || (row.auc == b.auc && row.k < b.k) => Some(row),
        Some(b) => Some(b),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkAnalysis {
    pub centrality: CentralityReport,
    pub flow: FlowCutResult,
    pub significant: Vec<FaceId>,
    /// Seed cluster label of every face named by `significant`.
    pub clusters: BTreeMap<FaceId, u8>,
}

/// Centrality and repeated seed-to-seed flow on the unweighted k-NN adjacency.
pub fn network_analysis(run: &TaskRun, rounds: usize) -> Result<NetworkAnalysis> {
    let adj = &run.isomap.graph.neighbors;
    let centrality = netmetrics::centrality_report(adj);
    let seeds = &run.report.seeds;
    let flow = netmetrics::repetitive_flow_analysis(adj, seeds.z1, seeds.z2, rounds)?;
    let significant = netmetrics::significant_faces(&centrality, &flow, usize::MAX)?;
    let clusters = significant
        .iter()
        .map(|&id| {
            let label = if id == seeds.z1 {
                seeds.labels.0
            } else if id == seeds.z2 {
                seeds.labels.1
            } else {
                run.report.per_face[&id].assigned
            };
            (id, label)
        })
        .collect();
    Ok(NetworkAnalysis {
        centrality,
        flow,
        significant,
        clusters,
    })
}

/// Wall-clock seconds per stage and per image.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimingReport {
    pub images: usize,
    pub patch_s: f64,
    pub eigen_isomap_s: f64,
    pub cluster_s: f64,
    pub patch_per_image_s: f64,
    pub eigen_isomap_per_image_s: f64,
    pub cluster_per_image_s: f64,
    pub total_per_image_s: f64,
}

pub fn time_pipeline(
    inputs: &Inputs,
    task: Task,
    variant: Variant,
    k: usize,
    params: &PatchParams,
    space: DistanceSpace,
) -> Result<TimingReport> {
    let n = inputs.corpus.len();
    if n == 0 {
        return Ok(TimingReport::default());
    }
    let t0 = Instant::now();
    let patched = patching::make_patched_corpus(&inputs.corpus, variant.target(task), params);
    let patch_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let model = eigenface::fit(&patched.vectors)?;
    let signatures: Vec<Vec<f64>> = eigenface::signatures(&model.signature)
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let isomap = manifold::build_isomap(&signatures, k)?;
    let eigen_isomap_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let dist = EmbeddingDistance {
        embedding: &isomap,
        space,
    };
    classify::classify(&dist, &inputs.annotations, task, k)?;
    let cluster_s = t2.elapsed().as_secs_f64();

    let per = |s: f64| s / n as f64;
    Ok(TimingReport {
        images: n,
        patch_s,
        eigen_isomap_s,
        cluster_s,
        patch_per_image_s: per(patch_s),
        eigen_isomap_per_image_s: per(eigen_isomap_s),
        cluster_per_image_s: per(cluster_s),
        total_per_image_s: per(patch_s + eigen_isomap_s + cluster_s),
    })
}
