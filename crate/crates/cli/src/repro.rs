use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use lorats::repro::{self, ReproConfig, FIGURES};
use lorats::DEFAULT_SAMPLE_RATE;
use serde_json::json;

use crate::{emit_json, usage};

#[derive(Args)]
pub struct ReproArgs {
    /// fig4, fig5, fig12, fig13 (both panels), fig13a, fig13b, fig17 or all.
    figure: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte-Carlo trials per sweep point.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Writes `<figure>.csv` files here instead of printing to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn expand(figure: &str) -> anyhow::Result<Vec<&'static str>> {
    match figure {
        "all" => Ok(FIGURES.to_vec()),
        "fig13" => Ok(vec!["fig13a", "fig13b"]),
        f => FIGURES
            .iter()
            .find(|&&known| known == f)
            .map(|&known| vec![known])
            .ok_or_else(|| usage(format!("unknown figure {f:?}; expected one of {FIGURES:?}, fig13 or all"))),
    }
}

pub fn run(args: ReproArgs) -> anyhow::Result<()> {
    let figures = expand(&args.figure)?;
    if args.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let cfg = ReproConfig { seed: args.seed, trials: args.trials, sample_rate: DEFAULT_SAMPLE_RATE };
    let Some(dir) = args.out else {
        if figures.len() > 1 {
            return Err(usage(format!("{} produces {} datasets; pass --out DIR", args.figure, figures.len())));
        }
        let csv = repro::run(figures[0], &cfg)?;
        std::io::stdout().lock().write_all(csv.as_bytes())?;
        return Ok(());
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for figure in figures {
        let csv = repro::run(figure, &cfg).with_context(|| figure.to_string())?;
        let path = dir.join(format!("{figure}.csv"));
        fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
        emit_json(&json!({ "figure": figure, "path": path }))?;
    }
    Ok(())
}
