//! Thin command-line front end over [`mdiew::pipeline`].

use clap::{Args, Parser, Subcommand};
use mdiew::cones::{Measure, SepApprox};
use mdiew::pipeline::{
    cmd_quantify, cmd_reproduce_figure, cmd_simulate, cmd_witness_eval, PipelineError, RunConfig,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mdiew",
    about = "Measurement-device-independent entanglement quantification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate semiquantum correlations, optionally with losses and
    /// finite sampling.
    Simulate(SimulateArgs),
    /// Solve the quantification program on a table or counts file and
    /// extract a witness.
    Quantify(QuantifyArgs),
    /// Evaluate a stored witness on one or more data files.
    WitnessEval(WitnessEvalArgs),
    /// Reproduce the Werner-family witness curves for all five measures.
    ReproduceFigure(FigureArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Werner-state parameter in [0, 1].
    #[arg(long)]
    werner: Option<f64>,
    /// Density-matrix JSON file (alternative to --werner).
    #[arg(long, conflicts_with = "werner")]
    state: Option<PathBuf>,
    /// Use Bell measurements on both sides (the default).
    #[arg(long, default_value_t = true)]
    bell: bool,
    /// Measurement-strategy JSON file overriding --bell.
    #[arg(long)]
    measurement: Option<PathBuf>,
    /// Input-state set: "pauli" or a scenario JSON file.
    #[arg(long, default_value = "pauli")]
    inputs: String,
    /// Detection efficiency in (0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Shots per input pair; omit for exact probabilities.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "table.json")]
    out_table: PathBuf,
    #[arg(long)]
    out_counts: Option<PathBuf>,
}

#[derive(Args)]
struct QuantifyArgs {
    /// Probability-table JSON file.
    #[arg(long, conflicts_with = "counts")]
    table: Option<PathBuf>,
    /// Count-table JSON file (unknown-total route).
    #[arg(long)]
    counts: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "negativity")]
    measure: MeasureArg,
    #[arg(long, value_enum, default_value = "ppt")]
    sep_approx: SepApproxArg,
    /// Input-state set: "pauli" or a scenario JSON file.
    #[arg(long, default_value = "pauli")]
    inputs: String,
    /// Fail on inconsistent frequencies instead of regularizing.
    #[arg(long)]
    no_regularize: bool,
    /// Restrict the enforced input pairs, e.g. "0,0;1,1;2,2".
    #[arg(long)]
    index_set: Option<String>,
    #[arg(long, default_value = "witness.json")]
    out_witness: PathBuf,
    #[arg(long, default_value = "report.json")]
    out_report: PathBuf,
}

#[derive(Args)]
struct WitnessEvalArgs {
    /// Witness JSON file.
    #[arg(long)]
    witness: PathBuf,
    /// Probability-table JSON files to evaluate on.
    #[arg(required = true)]
    data: Vec<PathBuf>,
    #[arg(long, default_value = "records.json")]
    out_records: PathBuf,
}

#[derive(Args)]
struct FigureArgs {
    /// Evaluate on exact probabilities instead of finite samples.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "ppt")]
    sep_approx: SepApproxArg,
    #[arg(long, default_value = "figure.csv")]
    out_csv: PathBuf,
    #[arg(long, default_value = "figure-report.json")]
    out_report: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MeasureArg {
    Negativity,
    RandomRobustness,
    AbsoluteRobustness,
    GeneralizedRobustness,
    Dub,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Measure {
        match m {
            MeasureArg::Negativity => Measure::Negativity,
            MeasureArg::RandomRobustness => Measure::RandomRobustness,
            MeasureArg::AbsoluteRobustness => Measure::AbsoluteRobustness,
            MeasureArg::GeneralizedRobustness => Measure::GeneralizedRobustness,
            MeasureArg::Dub => Measure::Dub,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SepApproxArg {
    Ppt,
    Dps2,
}

impl From<SepApproxArg> for SepApprox {
    fn from(s: SepApproxArg) -> SepApprox {
        match s {
            SepApproxArg::Ppt => SepApprox::ExactPpt,
            SepApproxArg::Dps2 => SepApprox::Dps2,
        }
    }
}

fn scenario_path(inputs: &str) -> Result<Option<PathBuf>, PipelineError> {
    if inputs == "pauli" {
        Ok(None)
    } else {
        Ok(Some(PathBuf::from(inputs)))
    }
}

fn parse_index_set(text: &str) -> Result<Vec<[usize; 2]>, PipelineError> {
    text.split(';')
        .map(|pair| {
            let mut parts = pair.split(',');
            let parse = |p: Option<&str>| {
                p.and_then(|v| v.trim().parse::<usize>().ok()).ok_or_else(|| {
                    PipelineError::InvalidConfig(format!("bad index-set entry {pair:?}"))
                })
            };
            Ok([parse(parts.next())?, parse(parts.next())?])
        })
        .collect()
}

fn run() -> Result<(), PipelineError> {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let config = RunConfig {
                command: "simulate".into(),
                scenario: scenario_path(&args.inputs)?,
                werner: args.werner,
                state: args.state,
                measurement: args.measurement,
                gamma: args.gamma,
                shots: args.shots,
                seed: args.seed,
                out_table: Some(args.out_table),
                out_counts: args.out_counts,
                ..RunConfig::default()
            };
            let out = cmd_simulate(&config)?;
            println!(
                "simulated {} entries over {} input pairs (scenario {})",
                out.table.entries.len(),
                out.table.index_set().len(),
                &out.scenario_digest[..12]
            );
            if let Some(counts) = out.counts {
                println!("sampled {} nonzero count entries", counts.entries.len());
            }
        }
        Command::Quantify(args) => {
            let config = RunConfig {
                command: "quantify".into(),
                scenario: scenario_path(&args.inputs)?,
                measure: args.measure.into(),
                sep_approx: args.sep_approx.into(),
                no_regularize: args.no_regularize,
                index_set: args.index_set.as_deref().map(parse_index_set).transpose()?,
                table: args.table,
                counts: args.counts,
                out_witness: Some(args.out_witness),
                out_report: Some(args.out_report),
                ..RunConfig::default()
            };
            let report = cmd_quantify(&config)?;
            let label = if report.slocc_lower_bound {
                "single-copy SLOCC lower bound"
            } else {
                "lower bound"
            };
            println!(
                "nu* = {:.9} ({label}, reported {:.9}, gap {:.2e}, {} iterations)",
                report.nu, report.reported, report.relative_gap, report.iterations
            );
            println!("witness {}", &report.witness_digest[..12]);
        }
        Command::WitnessEval(args) => {
            let config = RunConfig {
                command: "witness-eval".into(),
                witness: Some(args.witness),
                data: args.data,
                out_records: Some(args.out_records),
                ..RunConfig::default()
            };
            for record in cmd_witness_eval(&config)? {
                println!(
                    "{}  value = {:.9}{}",
                    &record.data_digest[..12],
                    record.value,
                    if record.subnormalized {
                        "  (subnormalized)"
                    } else {
                        ""
                    }
                );
            }
        }
        Command::ReproduceFigure(args) => {
            let config = RunConfig {
                command: "reproduce-figure".into(),
                exact: args.exact,
                shots: Some(args.shots),
                seed: args.seed,
                sep_approx: args.sep_approx.into(),
                out_csv: Some(args.out_csv.clone()),
                out_report: Some(args.out_report),
                ..RunConfig::default()
            };
            let report = cmd_reproduce_figure(&config)?;
            for w in &report.witnesses {
                println!(
                    "{:?}: bound {:.9} (witness {})",
                    w.measure,
                    w.bound,
                    &w.witness_digest[..12]
                );
            }
            println!("wrote {}", args.out_csv.display());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
