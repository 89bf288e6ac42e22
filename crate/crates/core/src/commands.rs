//! Subcommands behind the `maskiso` binary. Each reads a [`RunConfig`], writes its
//! artifacts under `output_dir` (`reports/`, `figures/`, `galleries/`, and
//! `run_meta.json`), and returns a short human-readable summary.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::FaceRecord;
use crate::eigenface;
use crate::error::{Error, Result};
use crate::export::{self, DotMarks};
use crate::image::{self, GrayImage};
use crate::manifold;
use crate::patching::{self, PatchTarget};
use crate::pipeline::{self, RunConfig};

/// Number of eigenfaces written to the gallery when that many are available.
pub const GALLERY_EIGENFACES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Patch,
    Eigen,
    Isomap,
    Classify,
    Experiment,
    Network,
    Timing,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Patch => "patch",
            Command::Eigen => "eigen",
            Command::Isomap => "isomap",
            Command::Classify => "classify",
            Command::Experiment => "experiment",
            Command::Network => "network",
            Command::Timing => "timing",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub summary: String,
    /// Files written, relative to `output_dir`, in write order.
    pub written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    config: serde_json::Value,
    flags: &'a [String],
}

struct Writer {
    root: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Writer {
    fn text(&mut self, rel: impl AsRef<Path>, contents: &str) -> Result<()> {
        let rel = rel.as_ref();
        export::write_text(&self.root.join(rel), contents)?;
        self.written.push(rel.to_path_buf());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: impl AsRef<Path>, body: &T) -> Result<()> {
        let text = export::json(body, &self.hash)?;
        self.text(rel, &text)
    }

    fn pgm(&mut self, rel: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        image::write_pgm_with_comment(img, &path, &format!("config_hash={}", self.hash))?;
        self.written.push(rel.to_path_buf());
        Ok(())
    }

    fn finish(mut self, cmd: Command, cfg: &RunConfig, flags: &[String], summary: String) -> Result<Outcome> {
        let meta = RunMeta {
            command: cmd.name(),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg.echo(),
            flags,
        };
        self.json("run_meta.json", &meta)?;
        Ok(Outcome {
            summary,
            written: self.written,
        })
    }
}

/// Validates `cfg` and runs `cmd`, inside a dedicated thread pool when `threads` is set.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Param(format!("thread pool: {e}")))?
            .install(|| dispatch(cmd, cfg)),
        None => dispatch(cmd, cfg),
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let w = Writer {
        root: cfg.output_dir.clone(),
        hash: cfg.hash(),
        written: Vec::new(),
    };
    match cmd {
        Command::Patch => cmd_patch(cfg, w),
        Command::Eigen => cmd_eigen(cfg, w),
        Command::Isomap => cmd_isomap(cfg, w),
        Command::Classify => cmd_classify(cfg, w),
        Command::Experiment => cmd_experiment(cfg, w),
        Command::Network => cmd_network(cfg, w),
        Command::Timing => cmd_timing(cfg, w),
    }
}

fn target_name(t: PatchTarget) -> &'static str {
    match t {
        PatchTarget::Eye => "eye",
        PatchTarget::Mouth => "mouth",
        PatchTarget::Full => "full",
    }
}

fn tag(cfg: &RunConfig) -> String {
    format!("{}_{}_k{}", cfg.task().name(), cfg.variant().name(), cfg.first_k())
}

fn fallback_flags(corpus: &[FaceRecord], outcomes: &[patching::PatchOutcome]) -> Vec<String> {
    corpus
        .iter()
        .zip(outcomes)
        .filter(|(_, o)| o.fallback.is_some())
        .map(|(rec, _)| format!("patch_fallback:{}", rec.label()))
        .collect()
}

fn cmd_patch(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let corpus = pipeline::load_faces(cfg)?;
    let target = pipeline::target_for(cfg.task());
    let params = cfg.patch_params();
    let traces: Vec<_> = corpus
        .par_iter()
        .map(|rec| patching::trace_patch(rec.face_id, &rec.image, target, &params))
        .collect();
    let dir = PathBuf::from("galleries").join(format!("patch_{}", target_name(target)));
    for (rec, t) in corpus.iter().zip(&traces) {
        let stem = rec.label();
        for (suffix, img) in [("mask", &t.mask), ("response", &t.response), ("overlay", &t.overlay)] {
            if let Some(img) = img {
                w.pgm(dir.join(format!("{stem}_{suffix}.pgm")), img)?;
            }
        }
        w.pgm(dir.join(format!("{stem}_patched.pgm")), &t.patched)?;
    }
    let outcomes: Vec<_> = traces.into_iter().map(|t| t.outcome).collect();
    let hash = w.hash.clone();
    w.text(
        format!("reports/patch_flags_{}.csv", target_name(target)),
        &export::patch_flags_csv(&corpus, &outcomes, &hash),
    )?;
    let flags = fallback_flags(&corpus, &outcomes);
    let summary = format!(
        "patched {} faces around the {} band; {} fallbacks",
        corpus.len(),
        target_name(target),
        flags.len()
    );
    w.finish(Command::Patch, cfg, &flags, summary)
}

fn cmd_eigen(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let corpus = pipeline::load_faces(cfg)?;
    let fs = pipeline::face_space(&corpus, cfg.task(), cfg.variant(), &cfg.patch_params())?;
    let stem = format!("{}_{}", cfg.task().name(), cfg.variant().name());
    let hash = w.hash.clone();
    w.text(
        format!("reports/signatures_{stem}.csv"),
        &export::signatures_csv(&fs.signatures, &hash),
    )?;
    let values: Vec<f64> = fs.model.system.eigenvalues.iter().copied().collect();
    w.text(format!("reports/eigenvalues_{stem}.csv"), &export::eigenvalues_csv(&values, &hash))?;
    let (rows, cols) = (corpus[0].image.rows(), corpus[0].image.cols());
    let count = GALLERY_EIGENFACES.min(fs.model.system.retained());
    let images = eigenface::render_eigenfaces(&fs.model.system, &fs.model.faces.mean, rows, cols, count)?;
    let dir = PathBuf::from("galleries").join(format!("eigen_{stem}"));
    for (i, img) in images.iter().enumerate() {
        let name = if i == 0 {
            "mean_face.pgm".to_string()
        } else {
            format!("eigenface_{:03}.pgm", i - 1)
        };
        w.pgm(dir.join(name), img)?;
    }
    let flags = fallback_flags(&corpus, &fs.patched.outcomes);
    let summary = format!(
        "{} faces, {} retained eigenfaces, {} written to the gallery",
        corpus.len(),
        fs.model.system.retained(),
        count
    );
    w.finish(Command::Eigen, cfg, &flags, summary)
}

#[derive(Serialize)]
struct IsomapMeta {
    k: usize,
    nodes: usize,
    edges: usize,
    bridges: Vec<(usize, usize)>,
}

fn cmd_isomap(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let corpus = pipeline::load_faces(cfg)?;
    let fs = pipeline::face_space(&corpus, cfg.task(), cfg.variant(), &cfg.patch_params())?;
    let k = cfg.first_k();
    let emb = manifold::build_isomap(&fs.signatures, k)?;
    let t = tag(cfg);
    let hash = w.hash.clone();
    w.text(format!("reports/embedding_{t}.csv"), &export::embedding_csv(&emb.coords, &hash))?;
    w.text(
        format!("figures/isomap_{t}.dot"),
        &export::graph_dot(&emb, &corpus, DotMarks::default(), &hash),
    )?;
    let meta = IsomapMeta {
        k,
        nodes: emb.n(),
        edges: emb.graph.edges().len(),
        bridges: emb.bridges.clone(),
    };
    w.json(format!("reports/isomap_{t}.json"), &meta)?;
    let mut flags = fallback_flags(&corpus, &fs.patched.outcomes);
    if !emb.bridges.is_empty() {
        flags.push(format!("bridges={}", emb.bridges.len()));
    }
    let summary = format!("{} nodes, {} edges, {} bridges", meta.nodes, meta.edges, meta.bridges.len());
    w.finish(Command::Isomap, cfg, &flags, summary)
}

fn cmd_classify(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let inputs = pipeline::load_inputs(cfg)?;
    let (fs, run) = pipeline::run_task(
        &inputs,
        cfg.task(),
        cfg.variant(),
        cfg.first_k(),
        &cfg.patch_params(),
        cfg.distance,
    )?;
    let t = tag(cfg);
    let hash = w.hash.clone();
    w.json(format!("reports/classification_{t}.json"), &run.report)?;
    w.text(
        format!("reports/assignments_{t}.csv"),
        &export::per_face_csv(&run.report, &inputs.corpus, &hash),
    )?;
    let row = pipeline::SummaryRow::new(&run, fs.patched.fallback_count());
    w.text(format!("reports/summary_{t}.csv"), &export::summary_csv(&[row], &hash))?;
    let mut flags = fallback_flags(&inputs.corpus, &fs.patched.outcomes);
    flags.extend(run.report.flags.iter().cloned());
    let m = &run.report.metrics;
    let summary = format!(
        "{t}: SEN {:.4} SPEC {:.4} ACC {:.4} AUC {:.4}",
        m.sen, m.spec, m.acc, m.auc
    );
    w.finish(Command::Classify, cfg, &flags, summary)
}

fn cmd_experiment(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let inputs = pipeline::load_inputs(cfg)?;
    let sweep = pipeline::sweep(
        &inputs,
        &cfg.tasks(),
        &cfg.variants(),
        &cfg.k,
        &cfg.patch_params(),
        cfg.distance,
    )?;
    let hash = w.hash.clone();
    w.text("reports/experiment.csv", &export::summary_csv(&sweep.rows, &hash))?;
    w.text("reports/experiment_best_k.csv", &export::summary_csv(&sweep.best, &hash))?;
    let flags: Vec<String> = sweep
        .rows
        .iter()
        .filter(|r| !r.flags.is_empty())
        .map(|r| format!("{}_{}_k{}:{}", r.task.name(), r.variant.name(), r.k, r.flags))
        .collect();
    let summary = format!("{} rows, {} best-k rows", sweep.rows.len(), sweep.best.len());
    w.finish(Command::Experiment, cfg, &flags, summary)
}

fn cmd_network(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let inputs = pipeline::load_inputs(cfg)?;
    let (fs, run) = pipeline::run_task(
        &inputs,
        cfg.task(),
        cfg.variant(),
        cfg.first_k(),
        &cfg.patch_params(),
        cfg.distance,
    )?;
    let net = pipeline::network_analysis(&run, cfg.rounds)?;
    let t = tag(cfg);
    let hash = w.hash.clone();
    w.text(format!("reports/centrality_{t}.csv"), &export::centrality_csv(&net.centrality, &hash))?;
    let marks = DotMarks {
        centrality: Some(&net.centrality),
        flow: Some(&net.flow),
        seeds: Some((run.report.seeds.z1, run.report.seeds.z2)),
    };
    w.text(
        format!("figures/network_{t}.dot"),
        &export::graph_dot(&run.isomap, &inputs.corpus, marks, &hash),
    )?;
    w.json(format!("reports/network_{t}.json"), &net)?;
    let mut flags = fallback_flags(&inputs.corpus, &fs.patched.outcomes);
    if net.centrality.eigen_shifted {
        flags.push("eigencentrality_shifted".into());
    }
    if !net.centrality.eigen_converged {
        flags.push("eigencentrality_unconverged".into());
    }
    let labels: Vec<String> = net
        .significant
        .iter()
        .map(|id| inputs.corpus[id.index()].label())
        .collect();
    let summary = format!(
        "{} flow rounds; significant faces: {}",
        net.flow.rounds.len(),
        labels.join(" ")
    );
    w.finish(Command::Network, cfg, &flags, summary)
}

fn cmd_timing(cfg: &RunConfig, mut w: Writer) -> Result<Outcome> {
    let inputs = pipeline::load_inputs(cfg)?;
    let report = pipeline::time_pipeline(
        &inputs,
        cfg.task(),
        cfg.variant(),
        cfg.first_k(),
        &cfg.patch_params(),
        cfg.distance,
    )?;
    w.json("reports/timing.json", &report)?;
    let summary = format!(
        "{} images: patch {:.3}s, eigen+isomap {:.3}s, cluster {:.3}s ({:.4} s/image)",
        report.images, report.patch_s, report.eigen_isomap_s, report.cluster_s, report.total_per_image_s
    );
    w.finish(Command::Timing, cfg, &[], summary)
}
