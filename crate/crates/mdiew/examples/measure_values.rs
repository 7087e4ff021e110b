//! Evaluate the five convex entanglement measures on reference two-qubit
//! states by solving their conic programs directly.

use mdiew::cones::{evaluate_measure, Measure, MeasureKind, SepApprox};
use mdiew::linalg::{max_entangled, ComplexMatrix, DimPair};
use mdiew::scenario::werner_state;
use mdiew::solver::SolverSettings;

fn main() -> anyhow::Result<()> {
    let dims = DimPair::new(2, 2);
    let settings = SolverSettings::default();
    let states: Vec<(&str, ComplexMatrix)> = vec![
        ("maximally entangled", max_entangled(2)),
        ("Werner 0.94", werner_state(0.94)?),
        ("Werner 1/3 (separable)", werner_state(1.0 / 3.0)?),
        ("maximally mixed", ComplexMatrix::identity(4).scale(0.25)),
    ];

    println!(
        "{:<24} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "state", "negativity", "rand-rob", "abs-rob", "gen-rob", "dub(log2)"
    );
    for (name, rho) in &states {
        print!("{name:<24}");
        for measure in Measure::ALL {
            let kind = MeasureKind::new(measure, SepApprox::ExactPpt);
            let value = evaluate_measure(rho, kind, dims, &settings)?;
            let width = if measure == Measure::Negativity { 12 } else { 10 };
            print!(" {:>width$.6}", value.reported());
        }
        println!();
    }

    // the level-2 symmetric-extension relaxation coincides with the exact
    // separable cone on two qubits
    let rho = werner_state(0.8)?;
    let exact = evaluate_measure(
        &rho,
        MeasureKind::new(Measure::GeneralizedRobustness, SepApprox::ExactPpt),
        dims,
        &settings,
    )?;
    let dps2 = evaluate_measure(
        &rho,
        MeasureKind::new(Measure::GeneralizedRobustness, SepApprox::Dps2),
        dims,
        &settings,
    )?;
    println!(
        "\ngeneralized robustness of Werner 0.8: exact PPT {:.8}, DPS level 2 {:.8}",
        exact.omega, dps2.omega
    );
    Ok(())
}
