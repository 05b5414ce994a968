use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sigatlas_cli::inspect::{cmd_atlas, cmd_fingerprint, EvalPart, InspectArgs};
use sigatlas_cli::lab::{cmd_ablate, cmd_paired, cmd_prototype, PairedInput, PrototypeArgs, PrototypeMethod};
use sigatlas_cli::run::cmd_run;
use sigatlas_cli::{DataPaths, RunConfig};
use sigatlas_core::dictionary::BlockSet;
use sigatlas_core::lab::Variant;
use sigatlas_core::scaffold::FisherRows;
use sigatlas_core::search::Grids;
use sigatlas_core::split::{SplitMode, SplitSpec};
use sigatlas_core::stats::{Conventions, StdMode};

/// Graph-signal node classifier with per-node evidence reports.
///
/// Thread count follows RAYON_NUM_THREADS.
#[derive(Parser)]
#[command(name = "sigatlas", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Repeated-split evaluation with atlas, fingerprint and snapshot per repeat.
    Run(RunArgs),
    /// Block and branch interventions on the same splits.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated variant names, or "all".
        #[arg(long, default_value = "all")]
        variants: String,
    },
    /// Label-free graph construction: mutual-kNN densification or rewiring.
    Prototype(ProtoArgs),
    /// Dataset fingerprint and figure tables from a saved snapshot.
    Fingerprint(SnapArgs),
    /// Per-node atlas from a saved snapshot.
    Atlas(SnapArgs),
    /// Paired statistics over matched repeats or given deltas.
    Paired(PairedArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    edges: PathBuf,
    /// CSV with a header row, or the packed f32 format.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

impl DataArgs {
    fn paths(&self) -> DataPaths {
        DataPaths {
            edges: self.edges.clone(),
            features: self.features.clone(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitModeArg {
    PerClass,
    Fraction,
}

#[derive(Clone, Copy, ValueEnum)]
enum FisherArg {
    Train,
    TrainVal,
}

#[derive(Clone, Copy, ValueEnum)]
enum StdArg {
    Population,
    Sample,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "per-class")]
    split_mode: SplitModeArg,
    #[arg(long, default_value_t = 20)]
    train_per_class: usize,
    #[arg(long, default_value_t = 30)]
    val_per_class: usize,
    /// train,val,test fractions for the fraction split mode.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    fractions: String,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Base seed; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated block names, or "all".
    #[arg(long, default_value = "all")]
    blocks: String,
    #[arg(long)]
    grid_k: Option<String>,
    #[arg(long)]
    grid_rmax: Option<String>,
    #[arg(long)]
    grid_eta: Option<String>,
    /// Alpha sets separated by ';', values by ',' (e.g. "0.1,1;1,10").
    #[arg(long)]
    grid_alphas: Option<String>,
    #[arg(long)]
    grid_w: Option<String>,
    /// Rows feeding the Fisher statistics.
    #[arg(long, value_enum, default_value = "train")]
    fisher_stats: FisherArg,
    #[arg(long, value_enum, default_value = "population")]
    std_mode: StdArg,
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} value {t:?}: {e}"))
        })
        .collect()
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mode = match self.split_mode {
            SplitModeArg::PerClass => SplitMode::PerClass {
                train_per_class: self.train_per_class,
                val_per_class: self.val_per_class,
            },
            SplitModeArg::Fraction => {
                let f: Vec<f64> = parse_list(&self.fractions, "--fractions")?;
                let [train, val, test] = f[..] else {
                    bail!("--fractions needs exactly three values");
                };
                SplitMode::Fraction { train, val, test }
            }
        };
        let mut grids = Grids::default();
        if let Some(s) = &self.grid_k {
            grids.k = parse_list(s, "--grid-k")?;
        }
        if let Some(s) = &self.grid_rmax {
            grids.r_max = parse_list(s, "--grid-rmax")?;
        }
        if let Some(s) = &self.grid_eta {
            grids.eta = parse_list(s, "--grid-eta")?;
        }
        if let Some(s) = &self.grid_alphas {
            grids.alpha_sets = s
                .split(';')
                .filter(|t| !t.trim().is_empty())
                .map(|t| parse_list(t, "--grid-alphas"))
                .collect::<Result<_>>()?;
        }
        if let Some(s) = &self.grid_w {
            grids.w = parse_list(s, "--grid-w")?;
        }
        Ok(RunConfig {
            data: self.data.paths(),
            split: SplitSpec {
                mode,
                seed: self.seed,
                repeat: 0,
            },
            repeats: self.repeats,
            grids,
            blocks: BlockSet::parse(&self.blocks).context("--blocks")?,
            conventions: Conventions {
                std_mode: match self.std_mode {
                    StdArg::Population => StdMode::Population,
                    StdArg::Sample => StdMode::Sample,
                },
                epsilon: self.epsilon,
            },
            fisher_rows: match self.fisher_stats {
                FisherArg::Train => FisherRows::Train,
                FisherArg::TrainVal => FisherRows::TrainVal,
            },
            out: self.out.clone(),
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtoMethodArg {
    MutualKnn,
    Rewire,
}

#[derive(Args)]
struct ProtoArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: ProtoMethodArg,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Fraction of edges to swap.
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    /// Fraction dropped when swapping stalls.
    #[arg(long, default_value_t = 0.15)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SnapArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Which part of the snapshot's split to evaluate: train, val or test.
    #[arg(long, default_value = "test")]
    part: EvalPart,
    #[arg(long)]
    out: PathBuf,
}

impl SnapArgs {
    fn inspect(&self) -> InspectArgs {
        InspectArgs {
            snapshot: self.snapshot.clone(),
            data: self.data.paths(),
            part: self.part,
            out: self.out.clone(),
        }
    }
}

#[derive(Args)]
struct PairedArgs {
    /// results.json of the candidate.
    #[arg(long, requires = "b", conflicts_with = "deltas")]
    a: Option<PathBuf>,
    /// results.json of the reference.
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    /// Comma-separated deltas in percentage points.
    #[arg(long, allow_hyphen_values = true)]
    deltas: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run(args) => {
            let a = cmd_run(&args.config()?)?;
            eprintln!("{}", serde_json::to_string(&a.results.dataset)?);
            let acc = &a.results.accuracy;
            match acc.std_pct {
                Some(s) => println!(
                    "accuracy {:.2} +/- {:.2} over {} repeats",
                    acc.mean_pct,
                    s,
                    acc.per_repeat_pct.len()
                ),
                None => println!("accuracy {:.2} (single repeat)", acc.mean_pct),
            }
        }
        Cmd::Ablate { run, variants } => {
            let vs: Vec<Variant> = if variants.trim() == "all" {
                Variant::ALL.to_vec()
            } else {
                parse_list(&variants, "--variants")?
            };
            let r = cmd_ablate(&run.config()?, &vs)?;
            for row in &r.rows {
                println!("{:<14} {:>7.2}  rank {}", row.variant.name(), row.mean_pct, row.rank);
            }
        }
        Cmd::Prototype(p) => {
            let method = match p.method {
                ProtoMethodArg::MutualKnn => PrototypeMethod::MutualKnn { k: p.k },
                ProtoMethodArg::Rewire => PrototypeMethod::Rewire {
                    fraction: p.fraction,
                    dropout: p.dropout,
                },
            };
            let prov = cmd_prototype(&PrototypeArgs {
                edges: p.edges,
                features: p.features,
                method,
                seed: p.seed,
                out: p.out,
            })?;
            println!(
                "{}: {} -> {} edges",
                prov.method_tag, prov.input_edges, prov.output_edges
            );
        }
        Cmd::Fingerprint(s) => {
            let fp = cmd_fingerprint(&s.inspect())?;
            println!("{}", serde_json::to_string(&fp.vector())?);
        }
        Cmd::Atlas(s) => {
            let rec = cmd_atlas(&s.inspect())?;
            println!("{} nodes written", rec.len());
        }
        Cmd::Paired(p) => {
            let input = match (p.a, p.b, p.deltas) {
                (Some(a), Some(b), None) => PairedInput::Results(a, b),
                (None, None, Some(d)) => PairedInput::Deltas(parse_list(&d, "--deltas")?),
                _ => bail!("give either --a and --b, or --deltas"),
            };
            let r = cmd_paired(&input, &p.out)?;
            println!(
                "mean {:+.2} pp, sign p {:.5}, wilcoxon p {:.5}",
                r.stats.mean, r.stats.sign_p, r.stats.wilcoxon_p
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
