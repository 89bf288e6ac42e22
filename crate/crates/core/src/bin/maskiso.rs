use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maskiso::classify::Task;
use maskiso::commands::{self, Command};
use maskiso::manifold::DistanceSpace;
use maskiso::patching::Polarity;
use maskiso::pipeline::{RunConfig, Variant};

/// Masked eigenface + Isomap clustering for glasses and smile classification.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Sub {
    /// Write mask, high-pass, overlay, and patched images plus a fallback report.
    Patch,
    /// Write signatures, eigenvalues, and the eigenface gallery.
    Eigen,
    /// Write the 2-D embedding and the k-NN graph.
    Isomap,
    /// Classify with two seeds and report SEN/SPEC/ACC/AUC.
    Classify,
    /// Sweep tasks, variants, and k values into one summary table.
    Experiment,
    /// Betweenness, eigencentrality, and repeated seed-to-seed max flow.
    Network,
    /// Per-stage wall-clock timings.
    Timing,
}

#[derive(Args)]
struct Opts {
    /// Flat TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    data_root: Option<PathBuf>,
    /// Defaults to <data-root>/annotations.csv.
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    /// Image indices per subject, e.g. `1,10`, or `all`.
    #[arg(long, global = true)]
    subset: Option<String>,
    #[arg(long, global = true, value_parser = parse::<Task>)]
    task: Option<Task>,
    #[arg(long, global = true, value_parser = parse::<Variant>)]
    variant: Option<Variant>,
    /// Neighbor count, or a comma-separated sweep.
    #[arg(short, long, global = true, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// embedded, geodesic, or signature.
    #[arg(long, global = true, value_parser = parse::<DistanceSpace>)]
    distance: Option<DistanceSpace>,
    /// Max-flow/min-cut rounds for `network`.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    #[arg(long, global = true)]
    patch_half_height: Option<usize>,
    #[arg(long, global = true)]
    eye_ratio_lo: Option<f64>,
    #[arg(long, global = true)]
    eye_ratio_hi: Option<f64>,
    #[arg(long, global = true)]
    mouth_ratio: Option<f64>,
    #[arg(long, global = true)]
    hp_percentile: Option<f64>,
    #[arg(long, global = true)]
    min_region_area: Option<usize>,
    /// Subject `dark` (default) or `light` relative to the background.
    #[arg(long, global = true, value_parser = parse_polarity)]
    polarity: Option<Polarity>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn parse<T: std::str::FromStr<Err = maskiso::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: maskiso::Error| e.to_string())
}

fn parse_polarity(s: &str) -> Result<Polarity, String> {
    match s {
        "dark" => Ok(Polarity::Dark),
        "light" => Ok(Polarity::Light),
        _ => Err(format!("unknown polarity {s:?}")),
    }
}

fn build_config(o: Opts) -> maskiso::Result<RunConfig> {
    let mut c = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = o.$field { c.$field = v; })* };
    }
    set!(data_root, subset, k, distance, rounds, patch_half_height, eye_ratio_lo, eye_ratio_hi);
    set!(mouth_ratio, hp_percentile, min_region_area, polarity, output_dir);
    if o.annotations.is_some() {
        c.annotations = o.annotations;
    }
    if o.task.is_some() {
        c.task = o.task;
    }
    if o.variant.is_some() {
        c.variant = o.variant;
    }
    if o.threads.is_some() {
        c.threads = o.threads;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Patch => Command::Patch,
        Sub::Eigen => Command::Eigen,
        Sub::Isomap => Command::Isomap,
        Sub::Classify => Command::Classify,
        Sub::Experiment => Command::Experiment,
        Sub::Network => Command::Network,
        Sub::Timing => Command::Timing,
    };
    let result = build_config(cli.opts).and_then(|cfg| commands::execute(command, &cfg));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
