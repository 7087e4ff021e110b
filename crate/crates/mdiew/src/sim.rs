//! Correlation generation: quantum strategies, shared-randomness strategies,
//! isotropic losses and finite-statistics sampling.
//!
//! Subsystem order in the quantum contraction is fixed as X (x) A (x) B (x) Y:
//! the POVM element A_a acts on X (x) A and B_b on B (x) Y.

use crate::linalg::{ComplexMatrix, DimPair, Subsystem};
use crate::scenario::{
    EffectivePovm, Key, LocalStrategy, Normalization, ProbabilityTable, Scenario, ScenarioError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("conclusive table uses reserved outcome 0")]
    ReservedOutcomeCollision,
    #[error("empty count table")]
    EmptyCounts,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A quantum strategy: shared state plus joint measurements on each side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumStrategy {
    /// Shared state on H_A (x) H_B.
    #[serde(rename = "sharedState")]
    pub shared_state: ComplexMatrix,
    /// POVM on H_X (x) H_A.
    #[serde(rename = "povmA")]
    pub povm_a: Vec<ComplexMatrix>,
    /// POVM on H_B (x) H_Y.
    #[serde(rename = "povmB")]
    pub povm_b: Vec<ComplexMatrix>,
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
}

impl QuantumStrategy {
    pub fn validate(&self, scenario: &Scenario) -> Result<(), SimError> {
        if self.shared_state.rows() != self.d_a * self.d_b {
            return Err(SimError::DimensionMismatch(
                "shared state does not match d_A * d_B".into(),
            ));
        }
        let da_full = scenario.d_x * self.d_a;
        let db_full = self.d_b * scenario.d_y;
        for (povm, dim, label) in [
            (&self.povm_a, da_full, "A"),
            (&self.povm_b, db_full, "B"),
        ] {
            let mut acc = ComplexMatrix::zeros(dim, dim);
            for e in povm {
                if e.rows() != dim {
                    return Err(SimError::DimensionMismatch(format!(
                        "POVM {label} element dimension {} != {dim}",
                        e.rows()
                    )));
                }
                acc = &acc + e;
            }
            if (&acc - &ComplexMatrix::identity(dim)).max_abs() > 1e-9 {
                return Err(SimError::InvalidStrategy(format!(
                    "POVM {label} does not sum to identity"
                )));
            }
        }
        Ok(())
    }

    /// The usual Bell-measurement strategy on a two-qubit shared state.
    pub fn bell_on(state: ComplexMatrix) -> Result<Self, ScenarioError> {
        let povm = crate::scenario::bell_measurement(2, None)?;
        Ok(QuantumStrategy {
            shared_state: state,
            povm_a: povm.clone(),
            povm_b: povm,
            d_a: 2,
            d_b: 2,
        })
    }
}

/// Raw event counts over conclusive outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountTable {
    #[serde(
        serialize_with = "serialize_count_entries",
        deserialize_with = "deserialize_count_entries"
    )]
    pub entries: BTreeMap<Key, u64>,
}

#[derive(Serialize, Deserialize)]
struct CountEntry {
    a: usize,
    b: usize,
    x: usize,
    y: usize,
    n: u64,
}

fn serialize_count_entries<S: serde::Serializer>(
    map: &BTreeMap<Key, u64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let v: Vec<CountEntry> = map
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&(a, b, x, y), &n)| CountEntry { a, b, x, y, n })
        .collect();
    v.serialize(s)
}

fn deserialize_count_entries<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<Key, u64>, D::Error> {
    let v = Vec::<CountEntry>::deserialize(d)?;
    Ok(v.into_iter()
        .map(|e| ((e.a, e.b, e.x, e.y), e.n))
        .collect())
}

/// Isotropic loss model: detection efficiency gamma plus the behavior of the
/// inconclusive events.
#[derive(Debug, Clone)]
pub struct LossModel {
    pub gamma: f64,
    /// Behavior assigning all mass to outcomes with a = 0 or b = 0.
    pub empty_behavior: ProbabilityTable,
}

impl LossModel {
    /// Default routing: all lost mass goes to the double no-detection
    /// outcome (0, 0), independent of the input pair.
    pub fn to_double_vacuum(gamma: f64, settings: &std::collections::BTreeSet<(usize, usize)>) -> Self {
        let mut empty = ProbabilityTable::new(Normalization::Normalized);
        for &(x, y) in settings {
            empty.set(0, 0, x, y, 1.0);
        }
        LossModel {
            gamma,
            empty_behavior: empty,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(SimError::InvalidStrategy(format!(
                "gamma {} outside (0,1]",
                self.gamma
            )));
        }
        for (&(a, b, x, y), _) in &self.empty_behavior.entries {
            if a != 0 && b != 0 {
                return Err(SimError::InvalidStrategy(format!(
                    "empty behavior has conclusive entry ({a},{b}|{x},{y})"
                )));
            }
        }
        for &(x, y) in &self.empty_behavior.index_set() {
            let total = self.empty_behavior.setting_total(x, y);
            if (total - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidStrategy(format!(
                    "empty behavior not normalized at ({x},{y})"
                )));
            }
        }
        Ok(())
    }
}

/// The effective POVM realized by a quantum strategy (partial trace of the
/// shared state against the joint measurements). Outcomes are 1-based.
pub fn effective_povm(
    scenario: &Scenario,
    strategy: &QuantumStrategy,
) -> Result<EffectivePovm, SimError> {
    strategy.validate(scenario)?;
    let (dx, dy) = (scenario.d_x, scenario.d_y);
    let (da, db) = (strategy.d_a, strategy.d_b);
    // 1_X (x) rho_AB (x) 1_Y on X,A,B,Y
    let background = ComplexMatrix::identity(dx)
        .kron(&strategy.shared_state)
        .kron(&ComplexMatrix::identity(dy));
    let dims = [dx, da, db, dy];
    let mut elements = BTreeMap::new();
    for (ai, a_el) in strategy.povm_a.iter().enumerate() {
        for (bi, b_el) in strategy.povm_b.iter().enumerate() {
            let joint = a_el.kron(b_el);
            let product = &background * &joint;
            // reorder X,A,B,Y -> X,Y,A,B then trace out A,B
            let reordered = product.permute_systems(&dims, &[0, 3, 1, 2]);
            let element = reordered
                .partial_trace(DimPair::new(dx * dy, da * db), Subsystem::B)
                .map_err(|e| SimError::DimensionMismatch(e.to_string()))?;
            elements.insert((ai + 1, bi + 1), element.hermitize());
        }
    }
    Ok(EffectivePovm { elements })
}

/// Correlations of a quantum strategy; outcomes labeled 1..n.
pub fn simulate_quantum(
    scenario: &Scenario,
    strategy: &QuantumStrategy,
) -> Result<ProbabilityTable, SimError> {
    let povm = effective_povm(scenario, strategy)?;
    let mut table = ProbabilityTable::new(Normalization::Normalized);
    for (&(a, b), element) in &povm.elements {
        for x in 0..scenario.n_x() {
            for y in 0..scenario.n_y() {
                let p = element.inner(&scenario.joint_input(x, y)).max(0.0);
                table.set(a, b, x, y, p);
            }
        }
    }
    Ok(table)
}

/// Correlations of a shared-randomness strategy; outcomes labeled 1..n.
pub fn simulate_shared_randomness(
    scenario: &Scenario,
    strategy: &LocalStrategy,
) -> Result<ProbabilityTable, SimError> {
    strategy.validate()?;
    let mut table = ProbabilityTable::new(Normalization::Normalized);
    for x in 0..scenario.n_x() {
        for y in 0..scenario.n_y() {
            let xi = &scenario.inputs_x[x];
            let psi = &scenario.inputs_y[y];
            let mut per_outcome: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (l, &w) in strategy.weights.iter().enumerate() {
                for (ai, ea) in strategy.povms_a[l].iter().enumerate() {
                    let pa = ea.inner(xi);
                    for (bi, eb) in strategy.povms_b[l].iter().enumerate() {
                        let pb = eb.inner(psi);
                        *per_outcome.entry((ai + 1, bi + 1)).or_insert(0.0) += w * pa * pb;
                    }
                }
            }
            for ((a, b), p) in per_outcome {
                table.set(a, b, x, y, p.max(0.0));
            }
        }
    }
    Ok(table)
}

/// Mix isotropic losses into an ideal (conclusive-only) behavior.
pub fn apply_isotropic_loss(
    ideal: &ProbabilityTable,
    model: &LossModel,
) -> Result<ProbabilityTable, SimError> {
    model.validate()?;
    if ideal.entries.keys().any(|&(a, b, _, _)| a == 0 || b == 0) {
        return Err(SimError::ReservedOutcomeCollision);
    }
    let mut table = ProbabilityTable::new(Normalization::Normalized);
    for (&(a, b, x, y), &p) in &ideal.entries {
        table.set(a, b, x, y, model.gamma * p);
    }
    for (&(a, b, x, y), &p) in &model.empty_behavior.entries {
        let prev = table.get(a, b, x, y);
        table.set(a, b, x, y, prev + (1.0 - model.gamma) * p);
    }
    Ok(table)
}

/// Binomial draw as a sum of Bernoulli trials; exact and reproducible.
fn binomial(rng: &mut ChaCha20Rng, n: u64, p: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let mut k = 0;
    for _ in 0..n {
        if rng.gen::<f64>() < p {
            k += 1;
        }
    }
    k
}

/// Multinomial sampling per input pair via sequential conditional binomials,
/// outcomes taken in ascending (a, b) order. Deterministic for a fixed seed.
pub fn sample_counts(table: &ProbabilityTable, shots_per_setting: u64, seed: u64) -> CountTable {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for &(x, y) in &table.index_set() {
        let outcomes: Vec<((usize, usize), f64)> = table
            .entries
            .iter()
            .filter(|(&(_, _, ex, ey), _)| ex == x && ey == y)
            .map(|(&(a, b, _, _), &p)| ((a, b), p))
            .collect();
        let mut remaining_shots = shots_per_setting;
        let mut remaining_mass: f64 = outcomes.iter().map(|&(_, p)| p).sum();
        for ((a, b), p) in outcomes {
            if remaining_shots == 0 {
                break;
            }
            let cond = if remaining_mass > 0.0 {
                (p / remaining_mass).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let k = binomial(&mut rng, remaining_shots, cond);
            if k > 0 {
                counts.insert((a, b, x, y), k);
            }
            remaining_shots -= k;
            remaining_mass -= p;
        }
    }
    CountTable { entries: counts }
}

/// Frequencies from conclusive-only counts with unknown totals: divide by the
/// largest per-setting total, yielding a subnormalized table.
pub fn frequencies_unknown_total(counts: &CountTable) -> Result<ProbabilityTable, SimError> {
    if counts.entries.is_empty() {
        return Err(SimError::EmptyCounts);
    }
    if counts.entries.keys().any(|&(a, b, _, _)| a == 0 || b == 0) {
        return Err(SimError::ReservedOutcomeCollision);
    }
    let mut per_setting: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (&(_, _, x, y), &n) in &counts.entries {
        *per_setting.entry((x, y)).or_insert(0) += n;
    }
    let n_star = *per_setting.values().max().unwrap();
    let mut table = ProbabilityTable::new(Normalization::Subnormalized);
    for (&(a, b, x, y), &n) in &counts.entries {
        table.set(a, b, x, y, n as f64 / n_star as f64);
    }
    Ok(table)
}

/// Frequencies from counts with a known number of shots per setting: divide
/// by the shot count, yielding a normalized table (up to sampling noise).
pub fn frequencies_known_total(
    counts: &CountTable,
    shots_per_setting: u64,
) -> Result<ProbabilityTable, SimError> {
    if counts.entries.is_empty() || shots_per_setting == 0 {
        return Err(SimError::EmptyCounts);
    }
    let mut table = ProbabilityTable::new(Normalization::Normalized);
    for (&(a, b, x, y), &n) in &counts.entries {
        table.set(a, b, x, y, n as f64 / shots_per_setting as f64);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_entangled;
    use crate::scenario::{pauli_input_set, werner_state, Scenario};

    fn pauli_scenario() -> Scenario {
        Scenario::new(pauli_input_set(), pauli_input_set(), 4, 4).unwrap()
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let scenario = pauli_scenario();
        let strategy =
            QuantumStrategy::bell_on(ComplexMatrix::identity(4).scale(0.25)).unwrap();
        let table = simulate_quantum(&scenario, &strategy).unwrap();
        for (_, &p) in &table.entries {
            assert!((p - 1.0 / 16.0).abs() < 1e-10);
        }
    }

    #[test]
    fn settings_normalized() {
        let scenario = pauli_scenario();
        let strategy = QuantumStrategy::bell_on(werner_state(0.7).unwrap()).unwrap();
        let table = simulate_quantum(&scenario, &strategy).unwrap();
        for &(x, y) in &table.index_set() {
            assert!((table.setting_total(x, y) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn product_strategy_factorizes() {
        let scenario = pauli_scenario();
        // A_a = Pi^A_a (x) 1_A, B_b = 1_B (x) Pi^B_b
        let z_povm = vec![
            ComplexMatrix::diag(&[1.0, 0.0]),
            ComplexMatrix::diag(&[0.0, 1.0]),
        ];
        let strategy = QuantumStrategy {
            shared_state: werner_state(0.5).unwrap(),
            povm_a: z_povm
                .iter()
                .map(|p| p.kron(&ComplexMatrix::identity(2)))
                .collect(),
            povm_b: z_povm
                .iter()
                .map(|p| ComplexMatrix::identity(2).kron(p))
                .collect(),
            d_a: 2,
            d_b: 2,
        };
        let table = simulate_quantum(&scenario, &strategy).unwrap();
        for (&(a, b, x, y), &p) in &table.entries {
            let pa = z_povm[a - 1].inner(&scenario.inputs_x[x]);
            let pb = z_povm[b - 1].inner(&scenario.inputs_y[y]);
            assert!((p - pa * pb).abs() < 1e-10, "({a},{b}|{x},{y})");
        }
    }

    #[test]
    fn separable_state_equals_shared_randomness() {
        let scenario = pauli_scenario();
        // rho = sum_k q_k alpha_k (x) beta_k with product POVMs
        let alphas = [pauli_input_set()[0].clone(), pauli_input_set()[4].clone()];
        let betas = [pauli_input_set()[2].clone(), pauli_input_set()[5].clone()];
        let q = [0.3, 0.7];
        let mut rho = ComplexMatrix::zeros(4, 4);
        for k in 0..2 {
            rho = &rho + &alphas[k].kron(&betas[k]).scale(q[k]);
        }
        let z_povm = vec![
            ComplexMatrix::diag(&[1.0, 0.0]),
            ComplexMatrix::diag(&[0.0, 1.0]),
        ];
        let x_povm = vec![
            ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]),
            ComplexMatrix::from_real(2, 2, &[0.5, -0.5, -0.5, 0.5]),
        ];
        let strategy = QuantumStrategy {
            shared_state: rho,
            povm_a: z_povm
                .iter()
                .map(|p| p.kron(&ComplexMatrix::identity(2)))
                .collect(),
            povm_b: x_povm
                .iter()
                .map(|p| ComplexMatrix::identity(2).kron(p))
                .collect(),
            d_a: 2,
            d_b: 2,
        };
        let quantum = simulate_quantum(&scenario, &strategy).unwrap();
        // induced local strategy: lambda = k, measurements conditioned on
        // the product component
        let local = LocalStrategy {
            weights: q.to_vec(),
            povms_a: (0..2)
                .map(|k| {
                    z_povm
                        .iter()
                        .map(|p| {
                            // tr_A[(P (x) 1)(xi (x) alpha_k)] acting on xi: P * tr[..]
                            // effective element on H_X: P scaled by tr[alpha_k] = P
                            let _ = k;
                            p.clone()
                        })
                        .collect()
                })
                .collect(),
            povms_b: (0..2)
                .map(|k| {
                    x_povm
                        .iter()
                        .map(|p| {
                            let _ = k;
                            p.clone()
                        })
                        .collect()
                })
                .collect(),
        };
        let sr = simulate_shared_randomness(&scenario, &local).unwrap();
        for (&key, &p) in &quantum.entries {
            assert!((p - sr.get(key.0, key.1, key.2, key.3)).abs() < 1e-10);
        }
    }

    #[test]
    fn shared_randomness_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let scenario = pauli_scenario();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        let random_qubit_povm = |rng: &mut rand_chacha::ChaCha20Rng| {
            // random projective measurement
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
            vec![p, q]
        };
        let weights = vec![0.2, 0.5, 0.3];
        let povms_a: Vec<_> = (0..3).map(|_| random_qubit_povm(&mut rng)).collect();
        let povms_b: Vec<_> = (0..3).map(|_| random_qubit_povm(&mut rng)).collect();
        let strategy = LocalStrategy {
            weights: weights.clone(),
            povms_a: povms_a.clone(),
            povms_b: povms_b.clone(),
        };
        let table = simulate_shared_randomness(&scenario, &strategy).unwrap();
        // independent oracle: direct summation
        for (&(a, b, x, y), &p) in &table.entries {
            let mut expect = 0.0;
            for l in 0..3 {
                expect += weights[l]
                    * povms_a[l][a - 1].inner(&scenario.inputs_x[x])
                    * povms_b[l][b - 1].inner(&scenario.inputs_y[y]);
            }
            assert!((p - expect).abs() < 1e-12);
        }
    }

    use num_complex::Complex64;

    #[test]
    fn effective_povm_bell_closed_form() {
        // Bell measurement on rho: Pi_ab = (U_a (x) V_b) rho^T (U_a (x) V_b)^dag / 4
        let scenario = pauli_scenario();
        let rho = werner_state(1.0).unwrap();
        let strategy = QuantumStrategy::bell_on(rho.clone()).unwrap();
        let povm = effective_povm(&scenario, &strategy).unwrap();
        let unitaries = [
            ComplexMatrix::identity(2),
            crate::linalg::sigma_x(),
            crate::linalg::sigma_y(),
            crate::linalg::sigma_z(),
        ];
        let rho_t = rho.transpose();
        for a in 0..4 {
            for b in 0..4 {
                let u = unitaries[a].kron(&unitaries[b]);
                let expect = (&(&u * &rho_t) * &u.dagger()).scale(0.25);
                let got = &povm.elements[&(a + 1, b + 1)];
                assert!((got - &expect).max_abs() < 1e-10, "outcome ({a},{b})");
            }
        }
    }

    #[test]
    fn loss_mixture() {
        let scenario = pauli_scenario();
        let ideal = simulate_quantum(
            &scenario,
            &QuantumStrategy::bell_on(max_entangled(2)).unwrap(),
        )
        .unwrap();
        let model = LossModel::to_double_vacuum(0.5, &scenario.all_settings());
        let lossy = apply_isotropic_loss(&ideal, &model).unwrap();
        for &(x, y) in &lossy.index_set() {
            assert!((lossy.setting_total(x, y) - 1.0).abs() < 1e-9);
            assert!((lossy.get(0, 0, x, y) - 0.5).abs() < 1e-12);
        }
        for (&(a, b, x, y), &p) in &ideal.entries {
            assert!((lossy.get(a, b, x, y) - 0.5 * p).abs() < 1e-12);
        }
        // gamma = 1 leaves the table unchanged on conclusive outcomes
        let id_model = LossModel::to_double_vacuum(1.0, &scenario.all_settings());
        let same = apply_isotropic_loss(&ideal, &id_model).unwrap();
        for (&(a, b, x, y), &p) in &ideal.entries {
            assert!((same.get(a, b, x, y) - p).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_deterministic_and_unbiased() {
        let scenario = pauli_scenario();
        let table = simulate_quantum(
            &scenario,
            &QuantumStrategy::bell_on(ComplexMatrix::identity(4).scale(0.25)).unwrap(),
        )
        .unwrap();
        let c1 = sample_counts(&table, 100_000, 42);
        let c2 = sample_counts(&table, 100_000, 42);
        assert_eq!(c1.entries, c2.entries);
        // uniform 1/16: each count within 5 sigma of 6250
        let sigma = (100_000.0f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt();
        for (_, &n) in c1.entries.iter().take(32) {
            assert!((n as f64 - 6250.0).abs() < 5.0 * sigma, "count {n}");
        }
        // zero shots
        let c0 = sample_counts(&table, 0, 42);
        assert!(c0.entries.is_empty());
    }

    #[test]
    fn deterministic_distribution_sampling() {
        let mut t = ProbabilityTable::new(Normalization::Normalized);
        t.set(1, 1, 0, 0, 1.0);
        t.set(2, 2, 0, 0, 0.0);
        let c = sample_counts(&t, 500, 7);
        assert_eq!(c.entries[&(1, 1, 0, 0)], 500);
        assert!(c.entries.get(&(2, 2, 0, 0)).is_none());
    }

    #[test]
    fn unknown_total_frequencies() {
        // identical totals -> normalized at max setting
        let mut counts = BTreeMap::new();
        counts.insert((1, 1, 0, 0), 30u64);
        counts.insert((2, 1, 0, 0), 70u64);
        counts.insert((1, 1, 0, 1), 60u64);
        counts.insert((2, 1, 0, 1), 40u64);
        let t = frequencies_unknown_total(&CountTable { entries: counts }).unwrap();
        assert!((t.get(1, 1, 0, 0) - 0.3).abs() < 1e-12);
        assert!((t.setting_total(0, 1) - 1.0).abs() < 1e-12);
        // degenerate single count
        let mut counts = BTreeMap::new();
        counts.insert((1, 1, 0, 0), 5u64);
        let t = frequencies_unknown_total(&CountTable { entries: counts }).unwrap();
        assert!((t.get(1, 1, 0, 0) - 1.0).abs() < 1e-12);
        // empty is an error
        assert!(frequencies_unknown_total(&CountTable {
            entries: BTreeMap::new()
        })
        .is_err());
    }

    #[test]
    fn count_table_serde() {
        let mut counts = BTreeMap::new();
        counts.insert((1, 2, 3, 4), 17u64);
        let t = CountTable { entries: counts };
        let json = serde_json::to_string(&t).unwrap();
        let back: CountTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back.entries[&(1, 2, 3, 4)], 17);
    }
}
