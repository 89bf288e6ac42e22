//! Text artifacts: CSV tables, DOT graphs, and JSON reports.
//!
//! Every artifact names the configuration hash that produced it: CSV files start with
//! a `# config_hash=<hex>` line, DOT files carry a `config_hash` graph attribute, and
//! JSON reports a top-level `config_hash` field. Floats use Rust's shortest
//! round-trip formatting, so identical values always print identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::classify::ClassificationReport;
use crate::dataset::{FaceId, FaceRecord};
use crate::error::{Error, Result};
use crate::manifold::EmbeddedGraph;
use crate::netmetrics::{CentralityReport, FlowCutResult};
use crate::patching::PatchOutcome;
use crate::pipeline::SummaryRow;

fn csv_preamble(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

/// `face_id` header row and column around the `n x n` signature matrix.
pub fn signatures_csv(signatures: &[Vec<f64>], hash: &str) -> String {
    let mut out = csv_preamble(hash);
    out.push_str("face_id");
    for j in 0..signatures.len() {
        let _ = write!(out, ",{}", FaceId::from_index(j));
    }
    out.push('\n');
    for (i, row) in signatures.iter().enumerate() {
        let _ = write!(out, "{}", FaceId::from_index(i));
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn eigenvalues_csv(eigenvalues: &[f64], hash: &str) -> String {
    let total: f64 = eigenvalues.iter().sum();
    let mut out = csv_preamble(hash);
    out.push_str("index,eigenvalue,explained\n");
    for (i, v) in eigenvalues.iter().enumerate() {
        let explained = if total > 0.0 { v / total } else { 0.0 };
        let _ = writeln!(out, "{i},{v},{explained}");
    }
    out
}

pub fn embedding_csv(coords: &[[f64; 2]], hash: &str) -> String {
    let mut out = csv_preamble(hash);
    out.push_str("face_id,x,y\n");
    for (i, [x, y]) in coords.iter().enumerate() {
        let _ = writeln!(out, "{},{x},{y}", FaceId::from_index(i));
    }
    out
}

fn top_flags(id: FaceId, cent: &CentralityReport) -> String {
    let mut flags = Vec::new();
    if let Some(r) = cent.top_b.iter().position(|&x| x == id) {
        flags.push(format!("B{}", r + 1));
    }
    if let Some(r) = cent.top_ec.iter().position(|&x| x == id) {
        flags.push(format!("EC{}", r + 1));
    }
    flags.join(";")
}

pub fn centrality_csv(cent: &CentralityReport, hash: &str) -> String {
    let mut out = csv_preamble(hash);
    out.push_str("face_id,betweenness,eigencentrality,top_flags\n");
    for (i, (b, ec)) in cent.betweenness.iter().zip(&cent.eigencentrality).enumerate() {
        let id = FaceId::from_index(i);
        let _ = writeln!(out, "{id},{b},{ec},{}", top_flags(id, cent));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow], hash: &str) -> String {
    let mut out = csv_preamble(hash);
    out.push_str("task,variant,k,sen,spec,acc,auc,sen_paper,flags\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.task.name(),
            r.variant.name(),
            r.k,
            r.sen,
            r.spec,
            r.acc,
            r.auc,
            r.sen_paper,
            r.flags
        );
    }
    out
}

pub fn patch_flags_csv(corpus: &[FaceRecord], outcomes: &[PatchOutcome], hash: &str) -> String {
    let mut out = csv_preamble(hash);
    out.push_str("face_id,label,row_lo,row_hi,region_area,region_ratio,region_theta,fallback\n");
    for (rec, o) in corpus.iter().zip(outcomes) {
        let (lo, hi) = o
            .band
            .map_or((String::new(), String::new()), |b| (b.row_lo.to_string(), b.row_hi.to_string()));
        let (area, ratio, theta) = o.region.map_or((String::new(), String::new(), String::new()), |r| {
            (r.area.to_string(), r.ratio().to_string(), r.theta.to_string())
        });
        let fallback = o.fallback.as_deref().unwrap_or("").replace(',', ";");
        let _ = writeln!(
            out,
            "{},{},{lo},{hi},{area},{ratio},{theta},{fallback}",
            o.face_id,
            rec.label()
        );
    }
    out
}

pub fn per_face_csv(report: &ClassificationReport, corpus: &[FaceRecord], hash: &str) -> String {
    let mut out = csv_preamble(hash);
    out.push_str("face_id,label,role,truth,assigned,score\n");
    for rec in corpus {
        let id = rec.face_id;
        if let Some(f) = report.per_face.get(&id) {
            let _ = writeln!(out, "{id},{},face,{},{},{}", rec.label(), f.truth, f.assigned, f.score);
        } else if report.seeds.contains(id) {
            let (role, label) = if id == report.seeds.z1 {
                ("seed_z1", report.seeds.labels.0)
            } else {
                ("seed_z2", report.seeds.labels.1)
            };
            let _ = writeln!(out, "{id},{},{role},{label},{label},", rec.label());
        }
    }
    out
}

/// Network overlays for [`graph_dot`].
#[derive(Clone, Copy, Debug, Default)]
pub struct DotMarks<'a> {
    pub centrality: Option<&'a CentralityReport>,
    pub flow: Option<&'a FlowCutResult>,
    pub seeds: Option<(FaceId, FaceId)>,
}

/// Undirected DOT graph of the k-NN network with nodes pinned at their 2-D Isomap
/// coordinates. Top-betweenness nodes are boxes, top-eigencentrality nodes are filled,
/// seeds are double circles, and each round's busiest flow edge is drawn bold red.
pub fn graph_dot(emb: &EmbeddedGraph, corpus: &[FaceRecord], marks: DotMarks<'_>, hash: &str) -> String {
    let mut out = String::from("graph isomap {\n");
    let _ = writeln!(out, "  graph [config_hash=\"{hash}\", overlap=true, splines=false];");
    out.push_str("  node [shape=circle, fontsize=8];\n");
    let (xs, ys): (Vec<f64>, Vec<f64>) = emb.coords.iter().map(|c| (c[0], c[1])).unzip();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, (hi - lo).max(f64::MIN_POSITIVE))
    };
    let ((x0, xw), (y0, yw)) = (span(&xs), span(&ys));
    for (i, rec) in corpus.iter().enumerate().take(emb.n()) {
        let id = FaceId::from_index(i);
        let mut attrs = vec![
            format!("label=\"{}\"", rec.label()),
            format!(
                "pos=\"{:.4},{:.4}!\"",
                10.0 * (emb.coords[i][0] - x0) / xw,
                10.0 * (emb.coords[i][1] - y0) / yw
            ),
        ];
        if let Some(c) = marks.centrality {
            if c.top_b.contains(&id) {
                attrs.push("shape=box".into());
            }
            if c.top_ec.contains(&id) {
                attrs.push("style=filled, fillcolor=gold".into());
            }
        }
        if let Some((z1, z2)) = marks.seeds {
            if id == z1 || id == z2 {
                attrs.push("peripheries=2".into());
            }
        }
        let _ = writeln!(out, "  n{} [{}];", id.0, attrs.join(", "));
    }
    let busiest: Vec<(FaceId, FaceId)> = marks
        .flow
        .map(|f| f.rounds.iter().map(|r| r.max_flow_edge).collect())
        .unwrap_or_default();
    let first_cut: Vec<(FaceId, FaceId)> = marks
        .flow
        .and_then(|f| f.rounds.first())
        .map(|r| r.cut_edges.clone())
        .unwrap_or_default();
    for (u, v) in emb.graph.edges() {
        let e = (FaceId::from_index(u), FaceId::from_index(v));
        let mut attrs = Vec::new();
        if let Some(round) = busiest.iter().position(|&b| b == e) {
            attrs.push(format!("color=red, penwidth=3, label=\"flow{}\"", round + 1));
        } else if first_cut.contains(&e) {
            attrs.push("style=dashed".into());
        }
        if emb.bridges.contains(&(u, v)) || emb.bridges.contains(&(v, u)) {
            attrs.push("color=gray".into());
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  n{} -- n{};", e.0 .0, e.1 .0);
        } else {
            let _ = writeln!(out, "  n{} -- n{} [{}];", e.0 .0, e.1 .0, attrs.join(", "));
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a leading `config_hash` field. Non-finite floats become `null`.
pub fn json<T: Serialize>(body: &T, hash: &str) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&Stamped {
        config_hash: hash,
        body,
    })?;
    text.push('\n');
    Ok(text)
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
