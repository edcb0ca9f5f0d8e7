//! `sievebias`: gap-population dynamics across Eratosthenes sieve stages.

mod commands;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sievebias", version, about = "Exact population models for prime gaps \
across sieve stages, residue-class team tables, and consecutive-prime censuses")]
struct Cli {
    /// Worker threads for sieving and censuses.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Largest integer the segmented sieve may visit.
    #[arg(long, global = true, default_value_t = 4_000_000_000)]
    budget: u64,

    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the cycle of gaps G(p#).
    Cycle {
        /// Prime anchor of the primorial.
        #[arg(long)]
        p: u64,
        /// Write the gaps to a CSV file instead of summarizing.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Take an exact run census of G(p0#).
    Census {
        #[arg(long)]
        p0: u64,
        /// Largest run span counted (even).
        #[arg(long)]
        gcap: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit closed-form population models from a census.
    Model {
        /// census.json produced by the census subcommand.
        #[arg(long)]
        census: PathBuf,
        /// Fit a single gap.
        #[arg(long, conflicts_with = "all")]
        g: Option<u32>,
        /// Fit every even gap the census supports.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// The stage parameter: evaluate at a prime or invert a value.
    Lambda {
        #[arg(long, conflicts_with = "invert")]
        p: Option<u64>,
        /// Find the stage where lambda first drops to this value.
        #[arg(long)]
        invert: Option<f64>,
        /// Anchor prime for the product (paper convention).
        #[arg(long, default_value_t = 37)]
        anchor: u64,
        /// Sieve reach for exact inversion.
        #[arg(long, default_value_t = 1_000_000_000)]
        limit: u64,
    },
    /// Coverage of the modeled gaps: direct and Lemma-approximated.
    Rho {
        #[arg(long)]
        census: PathBuf,
        #[arg(long)]
        p: u64,
    },
    /// Residue-class team tables.
    Teams(TeamsArgs),
    /// Census consecutive-prime last-digit pairs with a segmented sieve.
    CensusPrimes {
        #[arg(long)]
        base: u64,
        /// Count this many pairs.
        #[arg(long, conflicts_with = "xmax")]
        pairs: Option<u64>,
        /// Count pairs with right endpoint below this bound.
        #[arg(long)]
        xmax: Option<u64>,
        /// first-odd-pairs | first-unit-pairs | left-past-base | right-below
        #[arg(long)]
        convention: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram of primes per interval of survival [p^2, next(p)^2).
    Survival {
        #[arg(long)]
        pmax: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce the published base-10 pair counts and diff every cell.
    ReproduceTable1 {
        /// Pair count (the published table uses 100,000,000).
        #[arg(long, default_value_t = 100_000_000)]
        pairs: u64,
    },
    /// Emit the figure data bundle (CSV series).
    Figures(FiguresArgs),
}

#[derive(Args)]
pub(crate) struct TeamsArgs {
    #[arg(long)]
    pub(crate) base: u64,
    #[arg(long)]
    pub(crate) gmax: u64,
    /// expected | asymptotic | model
    #[arg(long)]
    pub(crate) kind: String,
    /// Stage prime (model kind).
    #[arg(long)]
    pub(crate) p: Option<u64>,
    /// models.json (model kind).
    #[arg(long)]
    pub(crate) models: Option<PathBuf>,
    #[arg(long)]
    pub(crate) out: PathBuf,
}

#[derive(Args)]
pub(crate) struct FiguresArgs {
    /// Census anchor for the models.
    #[arg(long, default_value_t = 29)]
    pub(crate) p0: u64,
    /// Census span cap (defaults to the anchor's model validity).
    #[arg(long)]
    pub(crate) gcap: Option<u32>,
    /// Team-table roster cap (defaults to the largest fair multiple of 30).
    #[arg(long)]
    pub(crate) gmax: Option<u64>,
    /// Bases for the team curves.
    #[arg(long, value_delimiter = ',', default_values_t = [10u64, 3, 30])]
    pub(crate) bases: Vec<u64>,
    /// Smallest lambda the stage grid reaches.
    #[arg(long, default_value_t = 0.25)]
    pub(crate) lambda_min: f64,
    /// Number of stage samples along the curves.
    #[arg(long, default_value_t = 120)]
    pub(crate) points: usize,
    /// Largest survival stage.
    #[arg(long, default_value_t = 45161)]
    pub(crate) pmax: u64,
    /// Skip the survival histogram (it sieves to pmax^2).
    #[arg(long)]
    pub(crate) skip_survival: bool,
}

fn main() {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let limits = sievebias_core::Limits {
        sieve_max: cli.budget,
        ..sievebias_core::Limits::default()
    };
    let ctx = commands::Ctx {
        threads,
        limits,
        out_dir: cli.out_dir,
    };
    let outcome: Result<bool> = match cli.command {
        Command::Cycle { p, emit } => commands::cycle(&ctx, p, emit),
        Command::Census { p0, gcap, out } => commands::census(&ctx, p0, gcap, &out),
        Command::Model { census, g, all, out } => commands::model(&ctx, &census, g, all, &out),
        Command::Lambda {
            p,
            invert,
            anchor,
            limit,
        } => commands::lambda(&ctx, p, invert, anchor, limit),
        Command::Rho { census, p } => commands::rho(&ctx, &census, p),
        Command::Teams(args) => commands::teams(&ctx, &args),
        Command::CensusPrimes {
            base,
            pairs,
            xmax,
            convention,
            out,
        } => commands::census_primes(&ctx, base, pairs, xmax, convention.as_deref(), &out),
        Command::Survival { pmax, out } => commands::survival(&ctx, pmax, &out),
        Command::ReproduceTable1 { pairs } => commands::reproduce_table1(&ctx, pairs),
        Command::Figures(args) => commands::figures(&ctx, &args),
    };
    match outcome {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

