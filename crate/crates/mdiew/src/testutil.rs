//! Shared generators for the unit tests.
#![cfg(test)]

use crate::linalg::ComplexMatrix;
use crate::scenario::{pauli_input_set, werner_state, LocalStrategy, ProbabilityTable, Scenario};
use crate::sim::{simulate_quantum, QuantumStrategy};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn pauli_scenario() -> Scenario {
    Scenario::new(pauli_input_set(), pauli_input_set(), 4, 4).unwrap()
}

/// Correlations of the standard strategy on a Werner state.
pub fn werner_data(lambda: f64) -> ProbabilityTable {
    let scenario = pauli_scenario();
    let strategy = QuantumStrategy::bell_on(werner_state(lambda).unwrap()).unwrap();
    simulate_quantum(&scenario, &strategy).unwrap()
}

/// Random normalized density matrix (Ginibre construction).
pub fn random_density(rng: &mut ChaCha20Rng, d: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_entries(
        d,
        d,
        (0..d * d)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    );
    let m = &g * &g.dagger();
    m.scale(1.0 / m.trace().re)
}

/// Random qubit shared-randomness strategy padded to four outcomes per
/// side, so its tables share the index set of the standard strategy.
pub fn random_local_strategy(rng: &mut ChaCha20Rng) -> LocalStrategy {
    let povm = |rng: &mut ChaCha20Rng| {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = [
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::new(
                (theta / 2.0).sin() * phi.cos(),
                (theta / 2.0).sin() * phi.sin(),
            ),
        ];
        let p = ComplexMatrix::outer(&v, &v);
        let q = &ComplexMatrix::identity(2) - &p;
        vec![p, q, ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)]
    };
    let n = rng.gen_range(1..4);
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    LocalStrategy {
        povms_a: (0..n).map(|_| povm(rng)).collect(),
        povms_b: (0..n).map(|_| povm(rng)).collect(),
        weights,
    }
}
