//! Extract a quantitative witness from the dual solution of a
//! quantification program and probe its two defining properties: it
//! lower-bounds the measure on quantum behaviors and is nonpositive on
//! classical (shared-randomness) behaviors.

use mdiew::cones::{Measure, MeasureKind, SepApprox};
use mdiew::linalg::ComplexMatrix;
use mdiew::pipeline::default_scenario;
use mdiew::quantify::{quantify, QuantificationProblem};
use mdiew::scenario::{werner_state, LocalStrategy};
use mdiew::sim::{simulate_quantum, simulate_shared_randomness, QuantumStrategy};
use mdiew::solver::SolverSettings;
use mdiew::witness::witness_evaluate;

fn main() -> anyhow::Result<()> {
    let scenario = default_scenario();
    let kind = MeasureKind::new(Measure::Negativity, SepApprox::ExactPpt);

    // build the witness from correlations of the lambda = 0.94 Werner state
    let data = simulate_quantum(
        &scenario,
        &QuantumStrategy::bell_on(werner_state(0.94)?)?,
    )?;
    let problem = QuantificationProblem::full(scenario.clone(), data.clone(), kind)?;
    let (_, result, witness) = quantify(&problem, &SolverSettings::default(), 1e-6)?;
    println!(
        "witness {} with bound {:.9} ({} coefficients)",
        &witness.digest()[..12],
        witness.bound,
        witness.beta.len()
    );
    println!(
        "self-evaluation: {:.9} (program optimum {:.9})",
        witness_evaluate(&witness, &data)?,
        result.p_star
    );

    // lower bound across the Werner family
    for lambda in [0.2, 0.5, 0.8] {
        let behavior = simulate_quantum(
            &scenario,
            &QuantumStrategy::bell_on(werner_state(lambda)?)?,
        )?;
        println!(
            "  Werner {lambda}: witness value {:+.6} (negativity {:.6})",
            witness_evaluate(&witness, &behavior)?,
            ((3.0 * lambda - 1.0) / 4.0).max(0.0)
        );
    }

    // nonpositive on a deterministic classical strategy
    let point = |k: usize| {
        let mut elements = vec![ComplexMatrix::zeros(2, 2); 4];
        elements[k] = ComplexMatrix::identity(2);
        elements
    };
    let classical = LocalStrategy {
        weights: vec![1.0],
        povms_a: vec![point(0)],
        povms_b: vec![point(1)],
    };
    let behavior = simulate_shared_randomness(&scenario, &classical)?;
    println!(
        "classical strategy: witness value {:+.6}",
        witness_evaluate(&witness, &behavior)?
    );
    Ok(())
}
