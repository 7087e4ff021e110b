//! Linear witness evaluation and reference curves.
//!
//! A witness is consumed here purely as a coefficient vector: evaluation
//! is an exact dot product with the correlations, with no regularization,
//! so it remains statistically unbiased on fresh data and applies equally
//! to subnormalized frequency tables.

use crate::cones::{evaluate_measure, ConeError, MeasureKind};
use crate::linalg::DimPair;
use crate::quantify::Witness;
use crate::scenario::{werner_state, Normalization, ProbabilityTable};
use crate::solver::SolverSettings;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error)]
pub enum WitnessError {
    #[error("behavior is missing input pair ({0},{1}) of the witness index set")]
    MissingEntries(usize, usize),
    #[error("curve parameter {0} outside [0,1]")]
    InvalidParameter(f64),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// A reproducible record of one witness evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationRecord {
    #[serde(rename = "witnessDigest")]
    pub witness_digest: String,
    #[serde(rename = "dataDigest")]
    pub data_digest: String,
    /// The dot product of the witness coefficients with the correlations.
    pub value: f64,
    pub subnormalized: bool,
}

/// Input pairs referenced by a witness.
pub fn witness_index_set(w: &Witness) -> BTreeSet<(usize, usize)> {
    w.beta.keys().map(|&(_, _, x, y)| (x, y)).collect()
}

/// Exact dot product of the witness with a behavior. Entries absent from
/// the table (zero counts) contribute zero; whole input pairs absent from
/// the table are an error.
pub fn witness_evaluate(w: &Witness, p: &ProbabilityTable) -> Result<f64, WitnessError> {
    let covered = p.index_set();
    for (x, y) in witness_index_set(w) {
        if !covered.contains(&(x, y)) {
            return Err(WitnessError::MissingEntries(x, y));
        }
    }
    // fixed lexicographic order keeps the value bit-identical across runs
    Ok(w.beta
        .iter()
        .map(|(&(a, b, x, y), &v)| v * p.get(a, b, x, y))
        .sum())
}

/// Evaluate and record, keyed by content digests of both inputs.
pub fn evaluate_record(w: &Witness, p: &ProbabilityTable) -> Result<EvaluationRecord, WitnessError> {
    Ok(EvaluationRecord {
        witness_digest: w.digest(),
        data_digest: p.digest(),
        value: witness_evaluate(w, p)?,
        subnormalized: p.normalization == Normalization::Subnormalized,
    })
}

/// Reference curve: the measure of the Werner family on a parameter grid,
/// on the measure's reporting scale.
pub fn ideal_curve(
    kind: MeasureKind,
    lambdas: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<(f64, f64)>, WitnessError> {
    let dims = DimPair::new(2, 2);
    lambdas
        .iter()
        .map(|&lambda| {
            let rho =
                werner_state(lambda).map_err(|_| WitnessError::InvalidParameter(lambda))?;
            let value = evaluate_measure(&rho, kind, dims, settings)?;
            Ok((lambda, value.reported()))
        })
        .collect()
}

/// Per-behavior witness values; linear in any linear parameterization of
/// the behavior family.
pub fn witness_curve(
    w: &Witness,
    behaviors: &[ProbabilityTable],
) -> Result<Vec<f64>, WitnessError> {
    behaviors.iter().map(|p| witness_evaluate(w, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{Measure, SepApprox};
    use crate::quantify::{quantify, QuantificationProblem};
    use crate::sim::{frequencies_unknown_total, sample_counts};
    use crate::testutil::{pauli_scenario, random_local_strategy, werner_data};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn neg_kind() -> MeasureKind {
        MeasureKind::new(Measure::Negativity, SepApprox::ExactPpt)
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    fn werner_witness(lambda: f64) -> (Witness, f64) {
        let problem =
            QuantificationProblem::full(pauli_scenario(), werner_data(lambda), neg_kind()).unwrap();
        let (_, result, witness) = quantify(&problem, &settings(), 1e-6).unwrap();
        (witness, result.p_star)
    }

    #[test]
    fn self_evaluation_reproduces_bound() {
        let (witness, nu) = werner_witness(0.94);
        let data = werner_data(0.94);
        let value = witness_evaluate(&witness, &data).unwrap();
        assert!((value - nu).abs() < 1e-6);
        let record = evaluate_record(&witness, &data).unwrap();
        assert_eq!(record.value, value);
        assert!(!record.subnormalized);
        assert_eq!(record.witness_digest, witness.digest());
    }

    #[test]
    fn zero_witness_evaluates_to_zero() {
        let (mut witness, _) = werner_witness(0.94);
        for v in witness.beta.values_mut() {
            *v = 0.0;
        }
        let value = witness_evaluate(&witness, &werner_data(0.3)).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn missing_settings_rejected() {
        let (witness, _) = werner_witness(0.94);
        let mut partial = werner_data(0.94);
        let removed: Vec<_> = partial
            .entries
            .keys()
            .filter(|&&(_, _, x, y)| (x, y) == (2, 3))
            .cloned()
            .collect();
        for k in removed {
            partial.entries.remove(&k);
        }
        assert!(matches!(
            witness_evaluate(&witness, &partial),
            Err(WitnessError::MissingEntries(2, 3))
        ));
    }

    #[test]
    fn curve_affine_and_bounded_by_ideal() {
        let (witness, nu) = werner_witness(0.94);
        let lambdas: Vec<f64> = (0..8).map(|i| 0.2 + 0.1 * i as f64).collect();
        let behaviors: Vec<ProbabilityTable> =
            lambdas.iter().map(|&l| werner_data(l)).collect();
        let values = witness_curve(&witness, &behaviors).unwrap();
        // affine in lambda: second differences vanish
        for w in values.windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-9);
        }
        // pointwise below the ideal curve
        let ideal = ideal_curve(neg_kind(), &lambdas, &settings()).unwrap();
        for (v, (_, e)) in values.iter().zip(&ideal) {
            assert!(*v <= e + 1e-6);
        }
        // tight at the generating point
        let at_94 = witness_evaluate(&witness, &werner_data(0.94)).unwrap();
        assert!((at_94 - nu).abs() < 1e-6);
    }

    #[test]
    fn constant_behaviors_constant_values() {
        let (witness, _) = werner_witness(0.94);
        let behaviors = vec![werner_data(0.5); 4];
        let values = witness_curve(&witness, &behaviors).unwrap();
        for v in &values {
            assert_eq!(*v, values[0]);
        }
    }

    #[test]
    fn classical_behaviors_nonpositive() {
        let (witness, _) = werner_witness(0.94);
        let scenario = pauli_scenario();
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let behaviors: Vec<ProbabilityTable> = (0..40)
            .map(|_| {
                crate::sim::simulate_shared_randomness(&scenario, &random_local_strategy(&mut rng))
                    .unwrap()
            })
            .collect();
        for v in witness_curve(&witness, &behaviors).unwrap() {
            assert!(v <= 1e-7, "classical value {v}");
        }
    }

    #[test]
    fn fresh_sample_evaluation() {
        let (witness, _) = werner_witness(0.94);
        let counts = sample_counts(&werner_data(0.94), 100_000, 42);
        let freq = frequencies_unknown_total(&counts).unwrap();
        let record = evaluate_record(&witness, &freq).unwrap();
        assert!(record.subnormalized);
        assert!((record.value - 0.455).abs() < 0.02, "value {}", record.value);
    }

    #[test]
    fn ideal_curve_reference_points() {
        let neg = ideal_curve(neg_kind(), &[0.2, 1.0], &settings()).unwrap();
        assert!(neg[0].1.abs() < 1e-6);
        assert!((neg[1].1 - 0.5).abs() < 1e-6);
        // separable point vanishes for every measure on its reporting scale
        for measure in Measure::ALL {
            let kind = MeasureKind::new(measure, SepApprox::ExactPpt);
            let curve = ideal_curve(kind, &[0.2], &settings()).unwrap();
            assert!(curve[0].1.abs() < 1e-5, "{measure:?}: {}", curve[0].1);
        }
        // the distillability bound is reported on the log scale
        let dub = ideal_curve(
            MeasureKind::new(Measure::Dub, SepApprox::ExactPpt),
            &[1.0],
            &settings(),
        )
        .unwrap();
        assert!((dub[0].1 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn record_serde() {
        let record = EvaluationRecord {
            witness_digest: "w".into(),
            data_digest: "d".into(),
            value: 0.25,
            subnormalized: true,
        };
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("witnessDigest"));
        let back: EvaluationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.value, 0.25);
    }
}
