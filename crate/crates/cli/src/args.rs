use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use yoccoz::Complex64;

#[derive(Debug, Parser)]
#[command(name = "yoccoz", version, about = "Yoccoz puzzles, tableaux and moduli for z² + c")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Escape-time raster of the filled Julia set.
    Render(RenderArgs),
    /// Puzzle pieces, containment tree and boundary arcs.
    Puzzle(PuzzleArgs),
    /// Marked grid of the critical nest, τ and the recurrence verdict.
    Tableau(TableauArgs),
    /// Moduli of the puzzle annuli and the weighted tree minima.
    Moduli(ModuliArgs),
    /// Areas of the puzzle levels as CSV.
    Area(AreaArgs),
    /// First-return map on a critical piece.
    Renorm(RenormArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Parameter as "re,im".
    #[arg(long = "c", value_parser = parse_c, allow_hyphen_values = true)]
    #[serde(skip)]
    pub c: Complex64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u8).range(0..=40))]
    pub depth: u8,
    /// Pixels along each side of the raster.
    #[arg(long, default_value_t = 2048, value_parser = clap::value_parser!(u32).range(1..=32768))]
    pub res: u32,
    /// Equipotential bounding the level-0 pieces.
    #[arg(long, default_value_t = 1.0)]
    pub h0: f64,
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// Seed for randomized generators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    /// Iteration budget per pixel.
    #[arg(long, default_value_t = 512)]
    pub iterations: usize,
}

#[derive(Debug, Args)]
pub struct PuzzleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Deepest level drawn in puzzle.svg.
    #[arg(long, default_value_t = 4)]
    pub svg_levels: usize,
    /// Skip the mask binaries.
    #[arg(long)]
    pub no_masks: bool,
}

#[derive(Debug, Args)]
pub struct TableauArgs {
    #[command(flatten)]
    pub common: Common,
    /// Grid columns; defaults to the depth.
    #[arg(long)]
    pub width: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModuliArgs {
    #[command(flatten)]
    pub common: Common,
    /// Levels of the weighted tree; defaults to the depth.
    #[arg(long)]
    pub tree_levels: Option<usize>,
    /// Levels of the nest around β whose annuli are solved.
    #[arg(long, default_value_t = 0)]
    pub nest_levels: usize,
}

#[derive(Debug, Args)]
pub struct AreaArgs {
    #[command(flatten)]
    pub common: Common,
    /// Skip the weighted tree and the decay exponent.
    #[arg(long)]
    pub no_tree: bool,
}

#[derive(Debug, Args)]
pub struct RenormArgs {
    #[command(flatten)]
    pub common: Common,
    /// Level of the critical piece; chosen automatically when absent.
    #[arg(long)]
    pub level: Option<usize>,
    /// Orbit steps searched for returns.
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    /// Preimage levels of the Cantor diagnostics.
    #[arg(long, default_value_t = 4)]
    pub cantor_depth: usize,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Render(a) => &a.common,
            Command::Puzzle(a) => &a.common,
            Command::Tableau(a) => &a.common,
            Command::Moduli(a) => &a.common,
            Command::Area(a) => &a.common,
            Command::Renorm(a) => &a.common,
        }
    }
}

fn parse_c(s: &str) -> Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"re,im\", got {s:?}"))?;
    let part = |t: &str| {
        let v: f64 = t.trim().parse().map_err(|e| format!("{t:?}: {e}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{t:?} is not finite"))
        }
    };
    Ok(Complex64::new(part(re)?, part(im)?))
}
