// SPDX-License-Identifier: MIT OR Apache-2.0

//! `lch`: centroid extraction, region geometry, dictionaries, probes and the
//! scripted experiments from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lch_experiments::{Error, Result};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "lch", version, about = "Centroid analyses of small networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for manifest.json and artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train an MLP on a polygon task or a CSV table.
    Train(Common),
    /// Centroids of a saved network over a CSV of inputs.
    Centroids(Common),
    /// Local-centroid saliency of one input.
    Saliency(Common),
    /// Exact linear regions of a 2-D ReLU network.
    Regions(Common),
    /// Train a TopK sparse dictionary on a CSV of vectors.
    Sae(Common),
    /// Fit a logistic or mass-mean probe on a labelled CSV.
    Probe(Common),
    /// Neuron attribution scores around one input.
    Attribute(Common),
    /// Run a scripted experiment, or rerun one from its manifest.
    Experiment {
        /// One of the experiment names, or `rerun`.
        name: String,
        /// Run directory to reproduce (for `rerun`).
        #[arg(long)]
        from: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<Value> {
    match &common.config {
        None => Ok(Value::Object(Default::default())),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
        }
    }
}

fn with_seed(name: &str, common: &Common) -> Result<Value> {
    let mut cfg = load_config(common)?;
    if let Some(seed) = common.seed {
        lch_experiments::override_seed(name, &mut cfg, seed)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let out = match &cli.command {
        Command::Train(c)
        | Command::Centroids(c)
        | Command::Saliency(c)
        | Command::Regions(c)
        | Command::Sae(c)
        | Command::Probe(c)
        | Command::Attribute(c) => c.out.clone(),
        Command::Experiment { common, .. } => common.out.clone(),
    };
    let manifest = match cli.command {
        Command::Train(c) => commands::train(with_seed("train", &c)?, &c.out)?,
        Command::Centroids(c) => commands::centroids(with_seed("centroids", &c)?, &c.out)?,
        Command::Saliency(c) => commands::saliency(with_seed("saliency", &c)?, &c.out)?,
        Command::Regions(c) => commands::regions(with_seed("regions", &c)?, &c.out)?,
        Command::Sae(c) => commands::sae(with_seed("sae", &c)?, &c.out)?,
        Command::Probe(c) => commands::probe(with_seed("probe", &c)?, &c.out)?,
        Command::Attribute(c) => commands::attribute(with_seed("attribute", &c)?, &c.out)?,
        Command::Experiment { name, from, common } if name == "rerun" => {
            let from = from.ok_or_else(|| Error::config("rerun needs --from <run dir>"))?;
            let (manifest, changed) = lch_experiments::rerun(&from, &common.out)?;
            if !changed.is_empty() {
                eprintln!("CSV outputs differ from {}: {}", from.display(), changed.join(", "));
                return Err(Error::config("rerun did not reproduce the recorded outputs"));
            }
            manifest
        }
        Command::Experiment { name, common, .. } => {
            let cfg = with_seed(&name, &common)?;
            lch_experiments::run_experiment(&name, cfg, &common.out)?
        }
    };
    println!(
        "{}: {} artifacts in {}",
        manifest.experiment,
        manifest.artifacts.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
