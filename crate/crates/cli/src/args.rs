use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use somkit::{GainKind, InitMethod, Linkage, StandardizeMode, TopologyKind};

use crate::config::{Algorithm, IterSpec};

#[derive(Debug, Parser)]
#[command(name = "somkit", version, about = "Kohonen maps, vector quantization and Kohonen-based correspondence analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moving-centers batch quantization.
    #[command(alias = "fastclus")]
    Forgy(TrainArgs),
    /// Simple competitive learning (winner-only online updates).
    #[command(alias = "kfast")]
    Scl(TrainArgs),
    /// Online Kohonen map.
    #[command(alias = "kacp")]
    Som(TrainArgs),
    /// Deterministic batch Kohonen map.
    Kbatch(TrainArgs),
    /// Kohonen analysis of a two-way contingency table.
    Korresp(TrainArgs),
    /// Kohonen map of the corrected Burt table.
    Kacm(TrainArgs),
    /// Map of individuals, modalities placed afterwards.
    Kacm1(TrainArgs),
    /// Map of modalities, individuals placed afterwards.
    Kacm2(TrainArgs),
    /// Simultaneous map of individuals and modalities.
    Kdisj(TrainArgs),
    /// Assign the rows of a CSV to the units of a stored codebook.
    Classify(ClassifyArgs),
    /// Draw an SVG view of a run.
    Render(RenderArgs),
    /// Print the quality report of a run.
    Report(ReportArgs),
}

impl Command {
    pub fn algorithm(&self) -> Option<(Algorithm, &TrainArgs)> {
        let alg = match self {
            Command::Forgy(a) => (Algorithm::Forgy, a),
            Command::Scl(a) => (Algorithm::Scl, a),
            Command::Som(a) => (Algorithm::Som, a),
            Command::Kbatch(a) => (Algorithm::Kbatch, a),
            Command::Korresp(a) => (Algorithm::Korresp, a),
            Command::Kacm(a) => (Algorithm::Kacm, a),
            Command::Kacm1(a) => (Algorithm::Kacm1, a),
            Command::Kacm2(a) => (Algorithm::Kacm2, a),
            Command::Kdisj(a) => (Algorithm::Kdisj, a),
            _ => return None,
        };
        Some(alg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MissingArg {
    /// Train on complete rows only; incomplete rows are classified afterwards.
    Exclude,
    /// Incomplete rows take part in training on their present components.
    Use,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Input CSV with a header row.
    pub data: PathBuf,

    /// Run directory to create; must not exist.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Map rows (default 10). A string takes its length from whichever of
    /// --rows/--cols is not 1.
    #[arg(long)]
    pub rows: Option<usize>,

    /// Map columns (default 10).
    #[arg(long)]
    pub cols: Option<usize>,

    /// grid, string, cylinder, torus or hex.
    #[arg(long, default_value = "grid")]
    pub topology: TopologyKind,

    /// Radius changes as "r@t,...", e.g. "3@0,2@500,1@1000,0@1500".
    #[arg(long)]
    pub radius_schedule: Option<String>,

    #[arg(long, default_value_t = 0.5)]
    pub eps0: f64,

    #[arg(long, default_value_t = 0.01)]
    pub eps_final: f64,

    /// constant, linear or harmonic.
    #[arg(long, default_value = "harmonic")]
    pub gain: GainKind,

    /// I (random box), II (observations) or III (principal plane mesh).
    #[arg(long, default_value = "I")]
    pub init: InitMethod,

    /// Defaults to a clock-derived value, echoed in config.json.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Literal count or a multiple of the training vector count, e.g. 6N.
    #[arg(long)]
    pub iters: Option<IterSpec>,

    /// none, center or zscore.
    #[arg(long, default_value = "none")]
    pub standardize: StandardizeMode,

    #[arg(long, value_enum, default_value = "use")]
    pub missing: MissingArg,

    /// Number of super-classes cut from the code vector hierarchy.
    #[arg(long)]
    pub superclasses: Option<usize>,

    /// ward, complete or average.
    #[arg(long, default_value = "ward")]
    pub linkage: Linkage,

    /// Cell text read as missing, besides the empty cell.
    #[arg(long, default_value = "NA")]
    pub missing_token: String,

    /// Qualitative columns (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub qual: Vec<String>,

    /// Row identifier column.
    #[arg(long)]
    pub id: Option<String>,

    /// Columns to skip.
    #[arg(long, value_delimiter = ',')]
    pub ignore: Vec<String>,

    /// korresp only: the CSV already is a contingency table.
    #[arg(long)]
    pub contingency: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// codebook.json of a quantitative run.
    pub codebook: PathBuf,

    /// CSV holding every codebook column.
    pub data: PathBuf,

    /// Id column; defaults to the one recorded with the codebook's run.
    #[arg(long)]
    pub id: Option<String>,

    /// Defaults to the token recorded with the run, else "NA".
    #[arg(long)]
    pub missing_token: Option<String>,

    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum View {
    Curves,
    Codebook,
    Octagons,
    Pies,
    Plane,
    Labels,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    pub run: PathBuf,

    #[arg(long, value_enum)]
    pub view: View,

    /// SVG path; defaults to <run>/<view>.svg.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Data file for curves and pies; defaults to the one recorded in config.json.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Qualitative column drawn by the pies view.
    #[arg(long)]
    pub qual: Option<String>,

    /// Code component for the plane view.
    #[arg(long, default_value_t = 0)]
    pub component: usize,

    #[arg(long, default_value_t = 64)]
    pub cell_size: u32,

    #[arg(long, default_value_t = 24)]
    pub margin: u32,

    /// Scale each cell to its own range in curves and codebook views.
    #[arg(long)]
    pub per_cell: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    pub run: PathBuf,
}
