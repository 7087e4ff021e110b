//! Semiquantum scenarios, standard input sets, reference measurements and
//! effective-POVM tomography.
//!
//! A scenario fixes the trusted side of the setup: the quantum input sets
//! and the number of classical outcomes per device. The untrusted side is
//! summarized by an effective POVM acting on the input spaces, recovered
//! from observed correlations by linear inversion.

use crate::linalg::{
    max_entangled, sigma_x, sigma_y, sigma_z, ComplexMatrix, DimPair, LinalgError,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Key of a probability/count entry: (a, b, x, y).
///
/// Outcomes are 1-based by convention; outcome 0 is reserved for
/// "no particle detected" when loss modeling is active. Input indices are
/// 0-based.
pub type Key = (usize, usize, usize, usize);

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, thiserror::Error)]
pub enum TomographyError {
    #[error("input sets do not span the operator space (rank {rank} < {needed})")]
    IncompleteInputs { rank: usize, needed: usize },
    #[error("data inconsistent with any effective POVM (max residual {residual:e} > {threshold:e}); regularize first")]
    InconsistentData { residual: f64, threshold: f64 },
    #[error("POVM element ({a},{b}) has eigenvalue {eig:e} below -{tol:e}")]
    NonPsdElement { a: usize, b: usize, eig: f64, tol: f64 },
    #[error("index set does not cover all input pairs")]
    MissingSettings,
}

/// A semiquantum scenario: trusted quantum input sets and outcome counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "dX")]
    pub d_x: usize,
    #[serde(rename = "dY")]
    pub d_y: usize,
    #[serde(rename = "nA")]
    pub n_a: usize,
    #[serde(rename = "nB")]
    pub n_b: usize,
    #[serde(rename = "inputsX")]
    pub inputs_x: Vec<ComplexMatrix>,
    #[serde(rename = "inputsY")]
    pub inputs_y: Vec<ComplexMatrix>,
}

impl Scenario {
    pub fn new(
        inputs_x: Vec<ComplexMatrix>,
        inputs_y: Vec<ComplexMatrix>,
        n_a: usize,
        n_b: usize,
    ) -> Result<Self, ScenarioError> {
        let d_x = inputs_x
            .first()
            .ok_or_else(|| ScenarioError::Invalid("empty X input set".into()))?
            .rows();
        let d_y = inputs_y
            .first()
            .ok_or_else(|| ScenarioError::Invalid("empty Y input set".into()))?
            .rows();
        let s = Scenario {
            d_x,
            d_y,
            n_a,
            n_b,
            inputs_x,
            inputs_y,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_a < 1 || self.n_b < 1 {
            return Err(ScenarioError::Invalid("outcome counts must be >= 1".into()));
        }
        for (label, set, d) in [("X", &self.inputs_x, self.d_x), ("Y", &self.inputs_y, self.d_y)] {
            for (i, state) in set.iter().enumerate() {
                if state.rows() != d || state.cols() != d {
                    return Err(ScenarioError::Invalid(format!(
                        "input {label}[{i}] has wrong dimension"
                    )));
                }
                if !state.is_hermitian(1e-9) {
                    return Err(ScenarioError::Invalid(format!(
                        "input {label}[{i}] is not Hermitian"
                    )));
                }
                if (state.trace().re - 1.0).abs() > 1e-9 {
                    return Err(ScenarioError::Invalid(format!(
                        "input {label}[{i}] has trace != 1"
                    )));
                }
                if state.min_eigval()? < -1e-9 {
                    return Err(ScenarioError::Invalid(format!(
                        "input {label}[{i}] is not PSD"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_x(&self) -> usize {
        self.inputs_x.len()
    }

    pub fn n_y(&self) -> usize {
        self.inputs_y.len()
    }

    /// All input pairs (x, y).
    pub fn all_settings(&self) -> BTreeSet<(usize, usize)> {
        let mut s = BTreeSet::new();
        for x in 0..self.n_x() {
            for y in 0..self.n_y() {
                s.insert((x, y));
            }
        }
        s
    }

    /// The product input state xi_x (x) psi_y.
    pub fn joint_input(&self, x: usize, y: usize) -> ComplexMatrix {
        self.inputs_x[x].kron(&self.inputs_y[y])
    }

    pub fn input_dims(&self) -> DimPair {
        DimPair::new(self.d_x, self.d_y)
    }

    /// Canonical JSON: sorted keys, floats with 17 significant digits.
    pub fn canonical_json(&self) -> String {
        let mat = |m: &ComplexMatrix| -> String {
            let rows: Vec<String> = (0..m.rows())
                .map(|i| {
                    let cols: Vec<String> = (0..m.cols())
                        .map(|j| {
                            format!("[{},{}]", fmt_float(m[(i, j)].re), fmt_float(m[(i, j)].im))
                        })
                        .collect();
                    format!("[{}]", cols.join(","))
                })
                .collect();
            format!("[{}]", rows.join(","))
        };
        let set = |v: &[ComplexMatrix]| -> String {
            let items: Vec<String> = v.iter().map(mat).collect();
            format!("[{}]", items.join(","))
        };
        format!(
            "{{\"dX\":{},\"dY\":{},\"inputsX\":{},\"inputsY\":{},\"nA\":{},\"nB\":{}}}",
            self.d_x,
            self.d_y,
            set(&self.inputs_x),
            set(&self.inputs_y),
            self.n_a,
            self.n_b
        )
    }

    /// SHA-256 hex digest of the canonical JSON.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        hex_string(&hasher.finalize())
    }
}

fn fmt_float(v: f64) -> String {
    // 17 significant digits, deterministic
    format!("{:.16e}", v)
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Normalized,
    Subnormalized,
}

/// Observed behavior P(ab|xy) over a set of available input pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub normalization: Normalization,
    #[serde(
        serialize_with = "serialize_prob_entries",
        deserialize_with = "deserialize_prob_entries"
    )]
    pub entries: BTreeMap<Key, f64>,
}

#[derive(Serialize, Deserialize)]
struct ProbEntry {
    a: usize,
    b: usize,
    x: usize,
    y: usize,
    p: f64,
}

fn serialize_prob_entries<S: serde::Serializer>(
    map: &BTreeMap<Key, f64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let v: Vec<ProbEntry> = map
        .iter()
        .map(|(&(a, b, x, y), &p)| ProbEntry { a, b, x, y, p })
        .collect();
    v.serialize(s)
}

fn deserialize_prob_entries<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<Key, f64>, D::Error> {
    let v = Vec::<ProbEntry>::deserialize(d)?;
    Ok(v.into_iter()
        .map(|e| ((e.a, e.b, e.x, e.y), e.p))
        .collect())
}

impl ProbabilityTable {
    pub fn new(normalization: Normalization) -> Self {
        ProbabilityTable {
            normalization,
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, p: f64) {
        self.entries.insert((a, b, x, y), p);
    }

    /// Missing entries read as zero.
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.entries.get(&(a, b, x, y)).copied().unwrap_or(0.0)
    }

    /// Input pairs with at least one entry.
    pub fn index_set(&self) -> BTreeSet<(usize, usize)> {
        self.entries.keys().map(|&(_, _, x, y)| (x, y)).collect()
    }

    /// Outcome pairs with at least one entry.
    pub fn outcomes(&self) -> BTreeSet<(usize, usize)> {
        self.entries.keys().map(|&(a, b, _, _)| (a, b)).collect()
    }

    pub fn setting_total(&self, x: usize, y: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(&(_, _, ex, ey), _)| ex == x && ey == y)
            .map(|(_, &p)| p)
            .sum()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (&(a, b, x, y), &p) in &self.entries {
            if !(0.0..=1.0 + 1e-9).contains(&p) {
                return Err(ScenarioError::Invalid(format!(
                    "P({a}{b}|{x}{y}) = {p} outside [0,1]"
                )));
            }
        }
        for &(x, y) in &self.index_set() {
            let total = self.setting_total(x, y);
            match self.normalization {
                Normalization::Normalized => {
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(ScenarioError::Invalid(format!(
                            "setting ({x},{y}) sums to {total}, expected 1"
                        )));
                    }
                }
                Normalization::Subnormalized => {
                    if total > 1.0 + 1e-9 {
                        return Err(ScenarioError::Invalid(format!(
                            "setting ({x},{y}) sums to {total} > 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Content digest over the canonical entry order.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for (&(a, b, x, y), &p) in &self.entries {
            hasher.update(format!("{a},{b},{x},{y},{}\n", fmt_float(p)).as_bytes());
        }
        hex_string(&hasher.finalize())
    }
}

/// The distributed measurement describing the untrusted black box.
#[derive(Debug, Clone)]
pub struct EffectivePovm {
    pub elements: BTreeMap<(usize, usize), ComplexMatrix>,
}

impl EffectivePovm {
    pub fn dim(&self) -> usize {
        self.elements.values().next().map(|m| m.rows()).unwrap_or(0)
    }

    /// Sum of all elements.
    pub fn total(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for m in self.elements.values() {
            acc = &acc + m;
        }
        acc
    }

    /// True when the elements sum to the identity within `tol` entrywise.
    pub fn is_complete(&self, tol: f64) -> bool {
        let d = self.dim();
        (&self.total() - &ComplexMatrix::identity(d)).max_abs() <= tol
    }
}

/// Recovered states and outcome probabilities extracted from an effective POVM.
#[derive(Debug, Clone)]
pub struct RecoveredEnsemble {
    pub states: BTreeMap<(usize, usize), ComplexMatrix>,
    pub probs: BTreeMap<(usize, usize), f64>,
}

/// Shared-randomness strategy: mixture of product measurement pairs.
#[derive(Debug, Clone)]
pub struct LocalStrategy {
    pub weights: Vec<f64>,
    pub povms_a: Vec<Vec<ComplexMatrix>>,
    pub povms_b: Vec<Vec<ComplexMatrix>>,
}

impl LocalStrategy {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.weights.len() != self.povms_a.len() || self.weights.len() != self.povms_b.len() {
            return Err(ScenarioError::Invalid("mismatched strategy lengths".into()));
        }
        let wsum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| w < -1e-12) || (wsum - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::Invalid("weights are not a distribution".into()));
        }
        for povms in [&self.povms_a, &self.povms_b] {
            for povm in povms.iter() {
                let d = povm[0].rows();
                let mut acc = ComplexMatrix::zeros(d, d);
                for e in povm {
                    acc = &acc + e;
                }
                if (&acc - &ComplexMatrix::identity(d)).max_abs() > 1e-9 {
                    return Err(ScenarioError::Invalid(
                        "POVM does not sum to identity".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Projectors onto the +-1 eigenstates of sigma_x, sigma_y, sigma_z,
/// in order (+x, -x, +y, -y, +z, -z).
pub fn pauli_input_set() -> Vec<ComplexMatrix> {
    let i2 = ComplexMatrix::identity(2);
    let mut out = Vec::with_capacity(6);
    for pauli in [sigma_x(), sigma_y(), sigma_z()] {
        for sign in [1.0, -1.0] {
            out.push((&i2 + &pauli.scale(sign)).scale(0.5));
        }
    }
    out
}

/// Vectorize a Hermitian d x d matrix over an orthonormal real basis of the
/// Hermitian operator space (dimension d^2).
fn herm_vectorize(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let s2 = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            v.push(m[(i, j)].re * s2);
            v.push(m[(i, j)].im * s2);
        }
    }
    v
}

fn herm_unvectorize(d: usize, v: &[f64]) -> ComplexMatrix {
    let s2 = std::f64::consts::SQRT_2;
    let mut m = ComplexMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        m[(i, i)] = Complex64::new(v[k], 0.0);
        k += 1;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let re = v[k] / s2;
            let im = v[k + 1] / s2;
            k += 2;
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
    }
    m
}

/// True iff the inputs span the full d^2-dimensional real space of Hermitian
/// matrices (numerical rank of the Gram system, relative threshold 1e-8).
pub fn is_tomographically_complete(inputs: &[ComplexMatrix], d: usize) -> bool {
    if inputs.len() < d * d {
        return false;
    }
    let rows: Vec<Vec<f64>> = inputs.iter().map(herm_vectorize).collect();
    let g = DMatrix::from_fn(inputs.len(), d * d, |i, j| rows[i][j]);
    let svd = g.svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-8 * smax)
        .count();
    rank == d * d
}

/// Two-qubit Werner state: lambda-weighted mixture of the maximally entangled
/// projector with white noise.
pub fn werner_state(lambda: f64) -> Result<ComplexMatrix, ScenarioError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ScenarioError::Invalid(format!(
            "Werner parameter {lambda} outside [0,1]"
        )));
    }
    let bell = max_entangled(2);
    let noise = ComplexMatrix::identity(4).scale(0.25);
    Ok(&bell.scale(lambda) + &noise.scale(1.0 - lambda))
}

/// Weyl shift/clock unitaries U_{(k,l)} = X^k Z^l for dimension d.
pub fn weyl_unitaries(d: usize) -> Vec<ComplexMatrix> {
    use std::f64::consts::TAU;
    let mut shift = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        shift[((i + 1) % d, i)] = Complex64::new(1.0, 0.0);
    }
    let mut clock = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        let phase = TAU * (i as f64) / (d as f64);
        clock[(i, i)] = Complex64::new(phase.cos(), phase.sin());
    }
    let mut out = Vec::with_capacity(d * d);
    let mut xk = ComplexMatrix::identity(d);
    for _ in 0..d {
        let mut u = xk.clone();
        for _ in 0..d {
            out.push(u.clone());
            u = &u * &clock;
        }
        xk = &xk * &shift;
    }
    out
}

/// Generalized Bell measurement: d^2 rank-1 projectors onto
/// (U_a (x) 1)|phi_d>, built from a trace-orthogonal unitary family.
///
/// For d = 2 the default family {1, sigma_x, sigma_y, sigma_z} yields the
/// usual Bell-basis measurement.
pub fn bell_measurement(
    d: usize,
    unitaries: Option<Vec<ComplexMatrix>>,
) -> Result<Vec<ComplexMatrix>, ScenarioError> {
    let family = match unitaries {
        Some(u) => u,
        None if d == 2 => vec![ComplexMatrix::identity(2), sigma_x(), sigma_y(), sigma_z()],
        None => weyl_unitaries(d),
    };
    if family.len() != d * d {
        return Err(ScenarioError::Invalid(format!(
            "expected {} unitaries, got {}",
            d * d,
            family.len()
        )));
    }
    for (i, u) in family.iter().enumerate() {
        let uu = &u.dagger() * u;
        if (&uu - &ComplexMatrix::identity(d)).max_abs() > 1e-9 {
            return Err(ScenarioError::Invalid(format!("element {i} is not unitary")));
        }
        for (j, v) in family.iter().enumerate().skip(i + 1) {
            let ip = (&u.dagger() * v).trace();
            if ip.norm() > 1e-9 {
                return Err(ScenarioError::Invalid(format!(
                    "unitaries {i} and {j} are not trace-orthogonal"
                )));
            }
        }
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut projectors = Vec::with_capacity(d * d);
    for u in &family {
        // |A_a> = (U_a (x) 1)|phi_d>, components (U_a)_{i k} delta_{k j} / sqrt(d)
        let mut ket = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                ket[i * d + j] = u[(i, j)] * amp;
            }
        }
        projectors.push(ComplexMatrix::outer(&ket, &ket));
    }
    Ok(projectors)
}

/// Recover the effective POVM from observed correlations by least squares.
///
/// The inputs must be tomographically complete on both sides and the data
/// must cover all input pairs; inconsistent data (residual above 1e-7) is
/// rejected so callers can regularize first.
pub fn invert_tomography(
    scenario: &Scenario,
    table: &ProbabilityTable,
) -> Result<EffectivePovm, TomographyError> {
    let d = scenario.d_x * scenario.d_y;
    let needed = d * d;
    let index_set = table.index_set();
    if index_set != scenario.all_settings() {
        return Err(TomographyError::MissingSettings);
    }
    let settings: Vec<(usize, usize)> = index_set.iter().copied().collect();
    let design_rows: Vec<Vec<f64>> = settings
        .iter()
        .map(|&(x, y)| herm_vectorize(&scenario.joint_input(x, y)))
        .collect();
    let g = DMatrix::from_fn(settings.len(), needed, |i, j| design_rows[i][j]);
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-8 * smax)
        .count();
    if rank < needed {
        return Err(TomographyError::IncompleteInputs { rank, needed });
    }

    let mut elements = BTreeMap::new();
    for &(a, b) in &table.outcomes() {
        let rhs = nalgebra::DVector::from_fn(settings.len(), |i, _| {
            let (x, y) = settings[i];
            table.get(a, b, x, y)
        });
        let sol = svd
            .solve(&rhs, 1e-12)
            .expect("SVD solve on full-rank system");
        let residual = (&g * &sol - &rhs).abs().max();
        if residual > 1e-7 {
            return Err(TomographyError::InconsistentData {
                residual,
                threshold: 1e-7,
            });
        }
        let coords: Vec<f64> = sol.iter().copied().collect();
        let element = herm_unvectorize(d, &coords);
        let min_eig = element.eigvals_hermitian().map_err(|_| {
            TomographyError::NonPsdElement {
                a,
                b,
                eig: f64::NAN,
                tol: 1e-7,
            }
        })?[0];
        if min_eig < -1e-7 {
            return Err(TomographyError::NonPsdElement {
                a,
                b,
                eig: min_eig,
                tol: 1e-7,
            });
        }
        elements.insert((a, b), element);
    }
    Ok(EffectivePovm { elements })
}

/// Recovered states mu_ab = Pi_ab^T / tr[Pi_ab] and probabilities
/// p_ab = tr[Pi_ab] / (dX dY); elements with negligible trace are omitted
/// with probability zero.
pub fn recover_ensemble(povm: &EffectivePovm, d_x: usize, d_y: usize) -> RecoveredEnsemble {
    let mut states = BTreeMap::new();
    let mut probs = BTreeMap::new();
    for (&(a, b), element) in &povm.elements {
        let tr = element.trace().re;
        if tr < 1e-12 {
            probs.insert((a, b), 0.0);
            continue;
        }
        states.insert((a, b), element.transpose().scale(1.0 / tr));
        probs.insert((a, b), tr / (d_x as f64 * d_y as f64));
    }
    RecoveredEnsemble { states, probs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DimPair, Subsystem};

    #[test]
    fn pauli_set_entries() {
        let set = pauli_input_set();
        assert_eq!(set.len(), 6);
        // element 5 is -z -> |1><1|
        assert!((&set[5] - &ComplexMatrix::diag(&[0.0, 1.0])).max_abs() < 1e-12);
        // element 0 is +x
        let half = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((&set[0] - &half).max_abs() < 1e-12);
        // sum over all six is 3 I
        let mut acc = ComplexMatrix::zeros(2, 2);
        for s in &set {
            acc = &acc + s;
        }
        assert!((&acc - &ComplexMatrix::identity(2).scale(3.0)).max_abs() < 1e-12);
    }

    #[test]
    fn tomographic_completeness() {
        assert!(is_tomographically_complete(&pauli_input_set(), 2));
        let diag_only = vec![
            ComplexMatrix::diag(&[1.0, 0.0]),
            ComplexMatrix::diag(&[0.0, 1.0]),
        ];
        assert!(!is_tomographically_complete(&diag_only, 2));
        // 4 random pure states in generic position
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let states: Vec<ComplexMatrix> = (0..4)
            .map(|_| {
                let v: Vec<Complex64> = (0..2)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let v: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
                ComplexMatrix::outer(&v, &v)
            })
            .collect();
        assert!(is_tomographically_complete(&states, 2));
    }

    #[test]
    fn werner_endpoints() {
        let w0 = werner_state(0.0).unwrap();
        assert!((&w0 - &ComplexMatrix::identity(4).scale(0.25)).max_abs() < 1e-12);
        let w1 = werner_state(1.0).unwrap();
        assert!((&w1 - &max_entangled(2)).max_abs() < 1e-12);
        assert!(werner_state(1.5).is_err());
    }

    #[test]
    fn werner_ppt_boundary() {
        let w = werner_state(1.0 / 3.0).unwrap();
        let pt = w
            .partial_transpose(DimPair::new(2, 2), Subsystem::A)
            .unwrap();
        assert!(pt.min_eigval().unwrap().abs() < 1e-10);
    }

    #[test]
    fn bell_measurement_qubits() {
        let povm = bell_measurement(2, None).unwrap();
        assert_eq!(povm.len(), 4);
        let mut acc = ComplexMatrix::zeros(4, 4);
        for p in &povm {
            assert!((p.trace().re - 1.0).abs() < 1e-12);
            // rank-1 projector
            let sq = p * p;
            assert!((&sq - p).max_abs() < 1e-10);
            acc = &acc + p;
        }
        assert!((&acc - &ComplexMatrix::identity(4)).max_abs() < 1e-10);
        // mutually orthogonal
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((&povm[i] * &povm[j]).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bell_measurement_qutrits() {
        let povm = bell_measurement(3, None).unwrap();
        assert_eq!(povm.len(), 9);
        let mut acc = ComplexMatrix::zeros(9, 9);
        for p in &povm {
            assert!((p.trace().re - 1.0).abs() < 1e-10);
            acc = &acc + p;
        }
        assert!((&acc - &ComplexMatrix::identity(9)).max_abs() < 1e-9);
        for i in 0..9 {
            for j in (i + 1)..9 {
                assert!((&povm[i] * &povm[j]).max_abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bell_measurement_rejects_bad_family() {
        let bad = vec![ComplexMatrix::identity(2); 4];
        assert!(bell_measurement(2, Some(bad)).is_err());
    }

    #[test]
    fn scenario_digest_stable() {
        let s = Scenario::new(pauli_input_set(), pauli_input_set(), 4, 4).unwrap();
        let d1 = s.digest();
        let d2 = s.digest();
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 64);
    }

    #[test]
    fn probability_table_serde() {
        let mut t = ProbabilityTable::new(Normalization::Normalized);
        t.set(1, 2, 0, 3, 0.25);
        let json = serde_json::to_string(&t).unwrap();
        let back: ProbabilityTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get(1, 2, 0, 3), 0.25);
        assert!(json.contains("\"normalization\":\"normalized\""));
    }
}
