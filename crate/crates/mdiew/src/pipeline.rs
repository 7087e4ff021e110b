//! File-based orchestration of the full workflow: simulate correlations,
//! sample finite statistics, regularize, quantify, extract a witness,
//! evaluate it on fresh data, and emit figure-ready curves.
//!
//! Every output file embeds the [`RunConfig`] that produced it together
//! with content digests of its inputs, so re-running a command with an
//! identical configuration reproduces byte-identical numeric fields.

use crate::cones::{evaluate_measure, ConeError, Measure, MeasureKind, SepApprox};
use crate::linalg::ComplexMatrix;
use crate::quantify::{
    build_regularization, quantify, regularized_table, QuantificationProblem, QuantifyError,
    Witness,
};
use crate::scenario::{
    pauli_input_set, werner_state, Normalization, ProbabilityTable, Scenario, ScenarioError,
};
use crate::sim::{
    apply_isotropic_loss, frequencies_known_total, frequencies_unknown_total, sample_counts,
    simulate_quantum, CountTable, LossModel, QuantumStrategy, SimError,
};
use crate::solver::{solve, SolveStatus, SolverSettings};
use crate::witness::{evaluate_record, witness_evaluate, EvaluationRecord, WitnessError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// Environment variable naming the default directory for relative output
/// paths.
pub const OUT_DIR_ENV: &str = "MDIEW_OUT_DIR";

/// Duality-gap gate applied before a witness is trusted.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed file: {source}")]
    Schema {
        path: String,
        source: serde_json::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("inconsistent data: {0}")]
    InconsistentData(String),
    #[error("scenario digest mismatch: witness built for {expected}, data from {found}")]
    DigestMismatch { expected: String, found: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Quantify(#[from] QuantifyError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

impl PipelineError {
    /// Process exit code: 0 success, 2 data-consistency error, 3 solver
    /// failure, 4 schema/digest error, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::InconsistentData(_) => 2,
            PipelineError::Witness(WitnessError::MissingEntries(_, _)) => 2,
            PipelineError::Quantify(QuantifyError::SolverFailed(_))
            | PipelineError::Quantify(QuantifyError::GapTooLarge { .. })
            | PipelineError::Quantify(QuantifyError::Solver(_))
            | PipelineError::Cone(ConeError::SolveFailed(_))
            | PipelineError::Cone(ConeError::Solver(_))
            | PipelineError::Witness(WitnessError::Cone(_)) => 3,
            PipelineError::Schema { .. } | PipelineError::DigestMismatch { .. } => 4,
            _ => 1,
        }
    }
}

/// The complete parameterization of one command invocation; echoed
/// verbatim into every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunConfig {
    pub command: String,
    /// Path to a scenario JSON file; `None` selects the built-in Pauli
    /// scenario (six eigenstates per side, four outcomes per side).
    pub scenario: Option<PathBuf>,
    /// Werner-state parameter in [0, 1].
    pub werner: Option<f64>,
    /// Path to a density-matrix JSON file (alternative to `werner`).
    pub state: Option<PathBuf>,
    /// Path to a measurement-strategy JSON file; `None` selects Bell
    /// measurements on both sides.
    pub measurement: Option<PathBuf>,
    pub measure: Measure,
    pub sep_approx: SepApprox,
    /// Detection efficiency; `None` or 1.0 means lossless.
    pub gamma: Option<f64>,
    /// Shots per input pair; `None` means exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    /// Restriction of the enforced input pairs; `None` means all pairs
    /// present in the data.
    pub index_set: Option<Vec<[usize; 2]>>,
    /// Fail on inconsistent frequencies instead of regularizing them.
    pub no_regularize: bool,
    /// Figure reproduction without sampling noise.
    pub exact: bool,
    /// Input paths.
    pub table: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub witness: Option<PathBuf>,
    pub data: Vec<PathBuf>,
    /// Output paths.
    pub out_table: Option<PathBuf>,
    pub out_counts: Option<PathBuf>,
    pub out_witness: Option<PathBuf>,
    pub out_report: Option<PathBuf>,
    pub out_records: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            scenario: None,
            werner: None,
            state: None,
            measurement: None,
            measure: Measure::Negativity,
            sep_approx: SepApprox::ExactPpt,
            gamma: None,
            shots: None,
            seed: 0,
            index_set: None,
            no_regularize: false,
            exact: false,
            table: None,
            counts: None,
            witness: None,
            data: Vec::new(),
            out_table: None,
            out_counts: None,
            out_witness: None,
            out_report: None,
            out_records: None,
            out_csv: None,
        }
    }
}

impl RunConfig {
    pub fn kind(&self) -> MeasureKind {
        MeasureKind::new(self.measure, self.sep_approx)
    }
}

/// A probability table together with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TableFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<RunConfig>,
    pub scenario_digest: String,
    pub table: ProbabilityTable,
}

/// A count table together with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CountsFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<RunConfig>,
    pub scenario_digest: String,
    pub shots_per_setting: u64,
    pub seed: u64,
    pub counts: CountTable,
}

/// A witness together with its provenance. Serializes to the plain witness
/// schema plus an optional `config` field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<RunConfig>,
    #[serde(flatten)]
    pub witness: Witness,
}

/// Report emitted by [`cmd_quantify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuantifyReport {
    pub config: RunConfig,
    pub measure: Measure,
    pub sep_approx: SepApprox,
    pub scenario_digest: String,
    pub data_digest: String,
    /// Program optimum on the cone scale.
    pub nu: f64,
    /// Optimum on the measure's reporting scale (log2 of `nu` where the
    /// measure reports on that scale).
    pub reported: f64,
    /// True when the input was subnormalized: the bound then holds for the
    /// single-copy stochastic-LOCC entanglement rather than the plain
    /// measure.
    pub slocc_lower_bound: bool,
    /// False for measures whose values are not comparable across
    /// Hilbert-space dimensions.
    pub dimension_independent: bool,
    pub relative_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: u32,
    /// Euclidean distance moved by regularization, when it ran.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regularization_distance: Option<f64>,
    pub witness_digest: String,
}

/// One row of the figure CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureRow {
    pub lambda: f64,
    pub measure: String,
    pub witness_value: f64,
    pub ideal_value: f64,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

/// Report emitted by [`cmd_reproduce_figure`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FigureReport {
    pub config: RunConfig,
    pub lambdas: Vec<f64>,
    pub witnesses: Vec<FigureWitness>,
    pub rows: Vec<FigureRow>,
}

/// Per-measure provenance of a figure run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FigureWitness {
    pub measure: Measure,
    pub bound: f64,
    pub witness_digest: String,
}

fn resolve_out(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let path = resolve_out(path);
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    std::fs::write(&path, text).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Schema {
        path: path.display().to_string(),
        source,
    })
}

/// The built-in scenario: Pauli eigenstates on both sides, four outcomes
/// per side.
pub fn default_scenario() -> Scenario {
    Scenario::new(pauli_input_set(), pauli_input_set(), 4, 4).expect("valid built-in scenario")
}

fn load_scenario(config: &RunConfig) -> Result<Scenario, PipelineError> {
    match &config.scenario {
        Some(path) => {
            let scenario: Scenario = read_json(path)?;
            scenario.validate()?;
            Ok(scenario)
        }
        None => Ok(default_scenario()),
    }
}

fn load_state(config: &RunConfig) -> Result<ComplexMatrix, PipelineError> {
    match (config.werner, &config.state) {
        (Some(lambda), None) => Ok(werner_state(lambda)?),
        (None, Some(path)) => read_json(path),
        _ => Err(PipelineError::InvalidConfig(
            "exactly one of a Werner parameter or a state file is required".into(),
        )),
    }
}

fn load_strategy(
    config: &RunConfig,
    state: ComplexMatrix,
) -> Result<QuantumStrategy, PipelineError> {
    match &config.measurement {
        Some(path) => read_json(path),
        None => Ok(QuantumStrategy::bell_on(state)?),
    }
}

/// Simulate correlations (optionally with isotropic losses) and optionally
/// sample a finite number of shots per input pair.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutput, PipelineError> {
    let scenario = load_scenario(config)?;
    let state = load_state(config)?;
    let strategy = load_strategy(config, state)?;
    let mut table = simulate_quantum(&scenario, &strategy)?;
    if let Some(gamma) = config.gamma {
        if gamma < 1.0 {
            let model = LossModel::to_double_vacuum(gamma, &scenario.all_settings());
            table = apply_isotropic_loss(&table, &model)?;
        }
    }
    let digest = scenario.digest();
    if let Some(path) = &config.out_table {
        write_json(
            path,
            &TableFile {
                config: Some(config.clone()),
                scenario_digest: digest.clone(),
                table: table.clone(),
            },
        )?;
    }
    let counts = match config.shots {
        Some(shots) => {
            let counts = sample_counts(&table, shots, config.seed);
            if let Some(path) = &config.out_counts {
                write_json(
                    path,
                    &CountsFile {
                        config: Some(config.clone()),
                        scenario_digest: digest.clone(),
                        shots_per_setting: shots,
                        seed: config.seed,
                        counts: counts.clone(),
                    },
                )?;
            }
            Some(counts)
        }
        None => None,
    };
    Ok(SimulateOutput {
        scenario_digest: digest,
        table,
        counts,
    })
}

/// Output of [`cmd_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub scenario_digest: String,
    pub table: ProbabilityTable,
    pub counts: Option<CountTable>,
}

fn restriction(config: &RunConfig) -> Option<BTreeSet<(usize, usize)>> {
    config
        .index_set
        .as_ref()
        .map(|pairs| pairs.iter().map(|&[x, y]| (x, y)).collect())
}

/// Regularize a table: the closest nonnegative table realizable by some
/// PSD effective POVM. Returns the regularized table and the Euclidean
/// distance moved.
pub fn regularize(
    scenario: &Scenario,
    table: &ProbabilityTable,
) -> Result<(ProbabilityTable, f64), PipelineError> {
    let built = build_regularization(scenario, table)?;
    let result =
        solve(&built.program, &SolverSettings::default()).map_err(QuantifyError::from)?;
    if result.status != SolveStatus::Optimal {
        return Err(PipelineError::Quantify(QuantifyError::SolverFailed(
            result.status,
        )));
    }
    Ok((
        regularized_table(&built, &result, table.normalization),
        result.p_star.max(0.0),
    ))
}

fn solve_problem(
    scenario: &Scenario,
    data: ProbabilityTable,
    config: &RunConfig,
) -> Result<(QuantificationProblem, crate::solver::SolveResult, Witness), QuantifyError> {
    let problem = match restriction(config) {
        Some(set) => {
            QuantificationProblem::restricted(scenario.clone(), data, config.kind(), set)?
        }
        None => QuantificationProblem::full(scenario.clone(), data, config.kind())?,
    };
    let (_, result, witness) = quantify(&problem, &SolverSettings::default(), GAP_TOL)?;
    Ok((problem, result, witness))
}

/// Quantify entanglement from a table or counts file; writes a report and
/// a witness.
///
/// Counts inputs take the unknown-total route: frequencies relative to the
/// largest per-setting total, followed by regularization, yielding a
/// single-copy stochastic-LOCC lower bound. Table inputs are first tried
/// directly; inconsistent frequencies are regularized unless
/// `no_regularize` is set, in which case they are a hard error.
pub fn cmd_quantify(config: &RunConfig) -> Result<QuantifyReport, PipelineError> {
    let scenario = load_scenario(config)?;
    let (data, input_digest) = match (&config.table, &config.counts) {
        (Some(path), None) => {
            let file: TableFile = read_json(path)?;
            check_digest(&scenario.digest(), &file.scenario_digest)?;
            let digest = file.table_digest();
            (file.table, digest)
        }
        (None, Some(path)) => {
            let file: CountsFile = read_json(path)?;
            check_digest(&scenario.digest(), &file.scenario_digest)?;
            let freq = frequencies_unknown_total(&file.counts)?;
            let digest = freq.digest();
            (freq, digest)
        }
        _ => {
            return Err(PipelineError::InvalidConfig(
                "exactly one of a table or a counts input is required".into(),
            ))
        }
    };
    let subnormalized = data.normalization == Normalization::Subnormalized;
    let from_counts = config.counts.is_some();

    let mut regularization_distance = None;
    let attempt = |d: ProbabilityTable| solve_problem(&scenario, d, config);
    let (result, witness) = if from_counts && !config.no_regularize {
        let (reg, distance) = regularize(&scenario, &data)?;
        regularization_distance = Some(distance);
        let (_, result, witness) = attempt(reg)?;
        (result, witness)
    } else {
        match attempt(data.clone()) {
            Ok((_, result, witness)) => (result, witness),
            Err(
                QuantifyError::SolverFailed(SolveStatus::PrimalInfeasible)
                | QuantifyError::InvalidProblem(_),
            ) if !config.no_regularize => {
                let (reg, distance) = regularize(&scenario, &data)?;
                regularization_distance = Some(distance);
                let (_, result, witness) = attempt(reg)?;
                (result, witness)
            }
            Err(QuantifyError::SolverFailed(SolveStatus::PrimalInfeasible)) => {
                return Err(PipelineError::InconsistentData(
                    "frequencies admit no effective POVM and regularization is disabled".into(),
                ))
            }
            Err(e) => return Err(e.into()),
        }
    };

    if let Some(path) = &config.out_witness {
        write_json(
            path,
            &WitnessFile {
                config: Some(config.clone()),
                witness: witness.clone(),
            },
        )?;
    }
    let nu = result.p_star;
    let reported = if config.measure.reports_log2() {
        if nu > 0.0 {
            nu.log2()
        } else {
            0.0
        }
    } else {
        nu
    };
    let report = QuantifyReport {
        config: config.clone(),
        measure: config.measure,
        sep_approx: config.sep_approx,
        scenario_digest: scenario.digest(),
        data_digest: input_digest,
        nu,
        reported,
        slocc_lower_bound: subnormalized,
        dimension_independent: config.measure.dimension_independent(),
        relative_gap: result.relative_gap,
        primal_residual: result.primal_residual,
        dual_residual: result.dual_residual,
        iterations: result.iterations,
        regularization_distance,
        witness_digest: witness.digest(),
    };
    if let Some(path) = &config.out_report {
        write_json(path, &report)?;
    }
    Ok(report)
}

impl TableFile {
    fn table_digest(&self) -> String {
        self.table.digest()
    }
}

fn check_digest(expected: &str, found: &str) -> Result<(), PipelineError> {
    if expected != found {
        return Err(PipelineError::DigestMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// Evaluate a stored witness on one or more data files; every data file
/// must carry the scenario digest the witness was built for.
pub fn cmd_witness_eval(config: &RunConfig) -> Result<Vec<EvaluationRecord>, PipelineError> {
    let path = config
        .witness
        .as_ref()
        .ok_or_else(|| PipelineError::InvalidConfig("a witness file is required".into()))?;
    let witness_file: WitnessFile = read_json(path)?;
    let witness = &witness_file.witness;
    if config.data.is_empty() {
        return Err(PipelineError::InvalidConfig(
            "at least one data file is required".into(),
        ));
    }
    let mut records = Vec::new();
    for data_path in &config.data {
        let file: TableFile = read_json(data_path)?;
        check_digest(&witness.scenario_digest, &file.scenario_digest)?;
        records.push(evaluate_record(witness, &file.table)?);
    }
    if let Some(path) = &config.out_records {
        #[derive(Serialize)]
        struct RecordsFile<'a> {
            config: &'a RunConfig,
            records: &'a [EvaluationRecord],
        }
        write_json(
            path,
            &RecordsFile {
                config,
                records: &records,
            },
        )?;
    }
    Ok(records)
}

/// The figure's Werner-parameter grid: 14 evenly spaced points from 0.29
/// to 0.94.
pub fn figure_lambdas() -> Vec<f64> {
    (0..14).map(|i| 0.29 + 0.05 * i as f64).collect()
}

fn exact_table(scenario: &Scenario, lambda: f64) -> Result<ProbabilityTable, PipelineError> {
    let strategy = QuantumStrategy::bell_on(werner_state(lambda)?)?;
    Ok(simulate_quantum(scenario, &strategy)?)
}

/// Reproduce the Werner-family figure: for each measure, build a witness
/// from data at the largest grid parameter and evaluate it on fresh data
/// across the grid, alongside the ideal value of the underlying state.
///
/// Witness and ideal values are both reported on the cone scale, so the
/// witness column is affine in the Werner parameter and pointwise below
/// the ideal column for every measure.
///
/// In `exact` mode the data are exact probabilities; otherwise the
/// training data are sampled (`shots` per setting, default 100000) and
/// regularized, and each grid point is evaluated on an independently
/// seeded fresh sample.
pub fn cmd_reproduce_figure(config: &RunConfig) -> Result<FigureReport, PipelineError> {
    let scenario = load_scenario(config)?;
    let lambdas = figure_lambdas();
    let train_lambda = *lambdas.last().expect("nonempty grid");
    let shots = config.shots.unwrap_or(100_000);
    let settings = SolverSettings::default();

    let per_measure = |measure: Measure| -> Result<(FigureWitness, Vec<FigureRow>), PipelineError> {
        let kind = MeasureKind::new(measure, config.sep_approx);
        let tag = serde_json::to_value(measure)
            .expect("measure tag")
            .as_str()
            .expect("string tag")
            .to_string();

        // training data at the top of the grid
        let ideal_train = exact_table(&scenario, train_lambda)?;
        let train = if config.exact {
            ideal_train
        } else {
            let counts = sample_counts(&ideal_train, shots, config.seed);
            let freq = frequencies_known_total(&counts, shots)?;
            regularize(&scenario, &freq)?.0
        };
        let problem = QuantificationProblem::full(scenario.clone(), train, kind)?;
        let (_, result, witness) = quantify(&problem, &settings, GAP_TOL)?;

        let mut rows = Vec::new();
        for (i, &lambda) in lambdas.iter().enumerate() {
            let exact = exact_table(&scenario, lambda)?;
            let (fresh, seed) = if config.exact {
                (exact, None)
            } else {
                // fresh-sample seeds disjoint from the training seed
                let seed = config.seed.wrapping_add(1000 + i as u64);
                let counts = sample_counts(&exact, shots, seed);
                (frequencies_known_total(&counts, shots)?, Some(seed))
            };
            let witness_value = witness_evaluate(&witness, &fresh)?;
            let ideal_value =
                evaluate_measure(&werner_state(lambda)?, kind, scenario.input_dims(), &settings)?
                    .omega;
            rows.push(FigureRow {
                lambda,
                measure: tag.clone(),
                witness_value,
                ideal_value,
                shots: (!config.exact).then_some(shots),
                seed,
            });
        }
        Ok((
            FigureWitness {
                measure,
                bound: result.p_star,
                witness_digest: witness.digest(),
            },
            rows,
        ))
    };

    let results: Vec<Result<(FigureWitness, Vec<FigureRow>), PipelineError>> = Measure::ALL
        .par_iter()
        .map(|&measure| per_measure(measure))
        .collect();

    let mut witnesses = Vec::new();
    let mut rows = Vec::new();
    for r in results {
        let (w, mut r) = r?;
        witnesses.push(w);
        rows.append(&mut r);
    }

    if let Some(path) = &config.out_csv {
        let path = resolve_out(path);
        let mut writer = csv::Writer::from_path(&path).map_err(PipelineError::Csv)?;
        for row in &rows {
            writer.serialize(row)?;
        }
        writer.flush().map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let report = FigureReport {
        config: config.clone(),
        lambdas,
        witnesses,
        rows,
    };
    if let Some(path) = &config.out_report {
        write_json(path, &report)?;
    }
    Ok(report)
}
