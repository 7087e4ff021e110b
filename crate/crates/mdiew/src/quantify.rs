//! Data-driven entanglement quantification programs and witness extraction.
//!
//! The central program minimizes the average cone value of an effective
//! POVM consistent with observed correlations:
//!
//! ```text
//! minimize (1 / dX dY) * sum_ab nu_ab
//! subject to (nu_ab, Pi_ab) in the measure cone
//!            tr[Pi_ab (xi_x (x) psi_y)] = P(ab|xy)   for (x,y) in I
//! ```
//!
//! Its optimal value is a lower bound on the entanglement of the state
//! that generated the data, and the dual multipliers of the tagged data
//! rows form a quantitative witness: a coefficient vector beta whose
//! linear evaluation on any correlations bounds the measure from below
//! and is nonpositive on all classically-reachable behaviors.

use crate::builder::{BuildError, HermVar, LinExpr, MatExpr, ProgramBuilder};
use crate::cones::{emit_measure_cone, evaluate_measure, ConeError, Measure, MeasureKind};
use crate::linalg::DimPair;
use crate::scenario::{
    EffectivePovm, Key, Normalization, ProbabilityTable, RecoveredEnsemble, Scenario,
};
use crate::solver::{
    solve, svec_dim, svec_index, ConeDesc, SolveResult, SolveStatus, SolverError, SolverSettings,
    StandardConicProgram, SQRT2,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum QuantifyError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solve terminated with status {0:?}")]
    SolverFailed(SolveStatus),
    #[error("duality gap {gap:.3e} exceeds tolerance {tol:.3e}")]
    GapTooLarge { gap: f64, tol: f64 },
}

/// A quantification instance: scenario, correlations, measure, and the
/// input pairs whose data rows are enforced.
#[derive(Debug, Clone)]
pub struct QuantificationProblem {
    pub scenario: Scenario,
    pub data: ProbabilityTable,
    pub kind: MeasureKind,
    pub index_set: BTreeSet<(usize, usize)>,
}

impl QuantificationProblem {
    /// Problem constraining every input pair present in the data.
    pub fn full(
        scenario: Scenario,
        data: ProbabilityTable,
        kind: MeasureKind,
    ) -> Result<Self, QuantifyError> {
        let index_set = data.index_set();
        let p = QuantificationProblem {
            scenario,
            data,
            kind,
            index_set,
        };
        p.validate()?;
        Ok(p)
    }

    /// Problem constraining only the listed input pairs; missing pairs are
    /// simply omitted, never interpolated.
    pub fn restricted(
        scenario: Scenario,
        data: ProbabilityTable,
        kind: MeasureKind,
        index_set: BTreeSet<(usize, usize)>,
    ) -> Result<Self, QuantifyError> {
        let p = QuantificationProblem {
            scenario,
            data,
            kind,
            index_set,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), QuantifyError> {
        if self.index_set.is_empty() {
            return Err(QuantifyError::InvalidProblem("empty index set".into()));
        }
        let outcomes = self.data.outcomes();
        for &(x, y) in &self.index_set {
            if x >= self.scenario.n_x() || y >= self.scenario.n_y() {
                return Err(QuantifyError::InvalidProblem(format!(
                    "index pair ({x},{y}) outside the scenario input sets"
                )));
            }
            for &(a, b) in &outcomes {
                if !self.data.entries.contains_key(&(a, b, x, y)) {
                    return Err(QuantifyError::InvalidProblem(format!(
                        "missing data entry ({a},{b}|{x},{y})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn dims(&self) -> DimPair {
        self.scenario.input_dims()
    }
}

/// An assembled quantification program with handles into its variables.
#[derive(Debug)]
pub struct BuiltQuantification {
    pub program: StandardConicProgram,
    pub povm_vars: BTreeMap<(usize, usize), HermVar>,
    pub nu_cols: BTreeMap<(usize, usize), usize>,
}

/// Assemble the quantification program: one cone block per outcome pair,
/// one tagged equality row per data entry in the index set.
pub fn build_quantification(
    problem: &QuantificationProblem,
) -> Result<BuiltQuantification, QuantifyError> {
    problem.validate()?;
    let dims = problem.dims();
    let d = dims.total();
    let mut b = ProgramBuilder::new();
    let mut povm_vars = BTreeMap::new();
    let mut nu_cols = BTreeMap::new();
    let mut objective = LinExpr::zero();

    for &(oa, ob) in &problem.data.outcomes() {
        let pi = b.add_herm(d);
        let pi_expr = MatExpr::from_var(&pi);
        let nu = b.add_nonneg_scalar();
        let block = emit_measure_cone(&mut b, problem.kind, &pi_expr, dims)?;
        b.add_eq(&LinExpr::var(nu).sub(&block.omega), None)?;
        objective = objective.add(&LinExpr::var(nu));
        povm_vars.insert((oa, ob), pi);
        nu_cols.insert((oa, ob), nu);
    }

    for (&(oa, ob), pi) in &povm_vars {
        let pi_expr = MatExpr::from_var(pi);
        for &(x, y) in &problem.index_set {
            let input = problem.scenario.joint_input(x, y);
            let expr = pi_expr
                .inner_const(&input)
                .sub(&LinExpr::constant(problem.data.get(oa, ob, x, y)));
            b.add_eq(&expr, Some((oa, ob, x, y)))?;
        }
    }

    b.minimize(&objective.scale(1.0 / d as f64));
    Ok(BuiltQuantification {
        program: b.build()?,
        povm_vars,
        nu_cols,
    })
}

/// A quantitative witness: linear coefficients on the correlations whose
/// evaluation lower-bounds the measure and is certified by the dual
/// solution it was extracted from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub measure: Measure,
    #[serde(rename = "scenarioDigest")]
    pub scenario_digest: String,
    /// Optimal value of the generating program.
    pub bound: f64,
    #[serde(
        serialize_with = "serialize_beta",
        deserialize_with = "deserialize_beta"
    )]
    pub beta: BTreeMap<Key, f64>,
}

#[derive(Serialize, Deserialize)]
struct BetaEntry {
    a: usize,
    b: usize,
    x: usize,
    y: usize,
    v: f64,
}

fn serialize_beta<S: serde::Serializer>(
    map: &BTreeMap<Key, f64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let v: Vec<BetaEntry> = map
        .iter()
        .map(|(&(a, b, x, y), &v)| BetaEntry { a, b, x, y, v })
        .collect();
    v.serialize(s)
}

fn deserialize_beta<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<Key, f64>, D::Error> {
    let v = Vec::<BetaEntry>::deserialize(d)?;
    Ok(v.into_iter().map(|e| ((e.a, e.b, e.x, e.y), e.v)).collect())
}

impl Witness {
    /// Content hash over a canonical rendering (sorted keys, fixed float
    /// formatting).
    pub fn digest(&self) -> String {
        let mut canon = String::new();
        canon.push_str("{\"beta\":[");
        for (i, (&(a, b, x, y), &v)) in self.beta.iter().enumerate() {
            if i > 0 {
                canon.push(',');
            }
            canon.push_str(&format!(
                "{{\"a\":{a},\"b\":{b},\"v\":{v:.16e},\"x\":{x},\"y\":{y}}}"
            ));
        }
        canon.push_str(&format!(
            "],\"bound\":{:.16e},\"measure\":{},\"scenarioDigest\":\"{}\"}}",
            self.bound,
            serde_json::to_string(&self.measure).unwrap(),
            self.scenario_digest
        ));
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

/// Read the witness out of a solved quantification program. The sign of
/// the multipliers is normalized so that the witness evaluated on the
/// generating data equals the dual optimum.
pub fn extract_witness(
    problem: &QuantificationProblem,
    built: &BuiltQuantification,
    result: &SolveResult,
    gap_tol: f64,
) -> Result<Witness, QuantifyError> {
    if result.status != SolveStatus::Optimal {
        return Err(QuantifyError::SolverFailed(result.status));
    }
    if result.relative_gap > gap_tol {
        return Err(QuantifyError::GapTooLarge {
            gap: result.relative_gap,
            tol: gap_tol,
        });
    }
    let mut beta: BTreeMap<Key, f64> = BTreeMap::new();
    for (&row, &key) in &built.program.row_tags {
        beta.insert(key, result.y[row]);
    }
    let value: f64 = beta
        .iter()
        .map(|(&(a, b, x, y), &v)| v * problem.data.get(a, b, x, y))
        .sum();
    // normalize the multiplier sign to the duality identity
    let beta = if (value - result.p_star).abs() <= (-value - result.p_star).abs() {
        beta
    } else {
        beta.into_iter().map(|(k, v)| (k, -v)).collect()
    };
    let value: f64 = beta
        .iter()
        .map(|(&(a, b, x, y), &v)| v * problem.data.get(a, b, x, y))
        .sum();
    if (value - result.p_star).abs() > gap_tol * (1.0 + result.p_star.abs()) {
        return Err(QuantifyError::GapTooLarge {
            gap: (value - result.p_star).abs(),
            tol: gap_tol,
        });
    }
    Ok(Witness {
        measure: problem.kind.measure,
        scenario_digest: problem.scenario.digest(),
        bound: result.p_star,
        beta,
    })
}

/// Build, solve, and extract in one step.
pub fn quantify(
    problem: &QuantificationProblem,
    settings: &SolverSettings,
    gap_tol: f64,
) -> Result<(BuiltQuantification, SolveResult, Witness), QuantifyError> {
    let built = build_quantification(problem)?;
    let result = solve(&built.program, settings)?;
    if result.status != SolveStatus::Optimal {
        return Err(QuantifyError::SolverFailed(result.status));
    }
    let witness = extract_witness(problem, &built, &result, gap_tol)?;
    Ok((built, result, witness))
}

/// An assembled regularization program.
#[derive(Debug)]
pub struct BuiltRegularization {
    pub program: StandardConicProgram,
    pub povm_vars: BTreeMap<(usize, usize), HermVar>,
    pub p_reg_cols: BTreeMap<Key, usize>,
    /// Radial coordinate of the norm cone; its optimal value is the
    /// Euclidean distance between the input and regularized tables.
    pub t_col: usize,
}

/// Assemble the regularization program: find the nonnegative table closest
/// in Euclidean norm to `p_test` that is exactly consistent with some PSD
/// effective POVM.
pub fn build_regularization(
    scenario: &Scenario,
    p_test: &ProbabilityTable,
) -> Result<BuiltRegularization, QuantifyError> {
    let d = scenario.input_dims().total();
    let settings = p_test.index_set();
    if settings.is_empty() {
        return Err(QuantifyError::InvalidProblem("empty test table".into()));
    }
    // grid of outcome pairs: everything observed, plus the full conclusive
    // grid so absent zero-count entries may regain mass
    let mut outcomes: BTreeSet<(usize, usize)> = p_test.outcomes();
    for a in 1..=scenario.n_a {
        for b in 1..=scenario.n_b {
            outcomes.insert((a, b));
        }
    }
    let keys: Vec<Key> = outcomes
        .iter()
        .flat_map(|&(a, b)| settings.iter().map(move |&(x, y)| (a, b, x, y)))
        .collect();
    let n = keys.len();

    let mut b = ProgramBuilder::new();
    let p_base = b.add_nonneg_vec(n);
    let t_col = b.add_soc(n + 1);
    let mut povm_vars = BTreeMap::new();
    for &(oa, ob) in &outcomes {
        povm_vars.insert((oa, ob), b.add_herm(d));
    }
    let mut p_reg_cols = BTreeMap::new();
    for (i, &key) in keys.iter().enumerate() {
        let (oa, ob, x, y) = key;
        let p_col = p_base + i;
        p_reg_cols.insert(key, p_col);
        // consistency: tr[Pi_ab (xi_x (x) psi_y)] = P_reg
        let pi_expr = MatExpr::from_var(&povm_vars[&(oa, ob)]);
        let row = pi_expr
            .inner_const(&scenario.joint_input(x, y))
            .sub(&LinExpr::var(p_col));
        b.add_eq(&row, None)?;
        // norm cone linkage: u_i = P_reg - P_test
        let u_col = t_col + 1 + i;
        let link = LinExpr::var(u_col)
            .sub(&LinExpr::var(p_col))
            .add(&LinExpr::constant(p_test.get(oa, ob, x, y)));
        b.add_eq(&link, None)?;
    }
    b.minimize(&LinExpr::var(t_col));
    Ok(BuiltRegularization {
        program: b.build()?,
        povm_vars,
        p_reg_cols,
        t_col,
    })
}

/// Read the regularized table out of a solved regularization program.
pub fn regularized_table(
    built: &BuiltRegularization,
    result: &SolveResult,
    normalization: Normalization,
) -> ProbabilityTable {
    let mut table = ProbabilityTable::new(normalization);
    for (&(a, b, x, y), &col) in &built.p_reg_cols {
        table.set(a, b, x, y, result.x[col].max(0.0));
    }
    table
}

/// Average cone value of an effective POVM: the tomography-free route to
/// the same bound the quantification program reaches on complete data.
pub fn nu_from_povm(
    povm: &EffectivePovm,
    kind: MeasureKind,
    dims: DimPair,
    settings: &SolverSettings,
) -> Result<f64, QuantifyError> {
    let mut total = 0.0;
    for element in povm.elements.values() {
        total += evaluate_measure(element, kind, dims, settings)?.omega;
    }
    Ok(total / dims.total() as f64)
}

/// Single-copy lower bounds from a recovered ensemble: the best single
/// recovered state, and the subnormalized ensemble average.
pub fn slocc_lower_bound(
    ensemble: &RecoveredEnsemble,
    kind: MeasureKind,
    dims: DimPair,
    settings: &SolverSettings,
) -> Result<(f64, f64), QuantifyError> {
    let mut max_single = 0.0f64;
    let mut average = 0.0;
    for (key, state) in &ensemble.states {
        // cone-scale values: homogeneous of degree one, so the weighted
        // average matches the quantification optimum
        let value = evaluate_measure(state, kind, dims, settings)?.omega;
        max_single = max_single.max(value);
        average += ensemble.probs[key] * value;
    }
    Ok((max_single, average))
}

/// Hand-expanded negativity program, assembled directly in svec
/// coordinates without the symbolic builder; used as an independent route
/// for equivalence testing against [`build_quantification`].
pub fn build_negativity_sdp_expanded(
    problem: &QuantificationProblem,
) -> Result<BuiltQuantification, QuantifyError> {
    if problem.kind.measure != Measure::Negativity {
        return Err(QuantifyError::InvalidProblem(
            "expanded form is specific to negativity".into(),
        ));
    }
    problem.validate()?;
    let dims = problem.dims();
    let d = dims.total();
    let dd = 2 * d; // realified side
    let sv = svec_dim(dd);
    let outcomes: Vec<(usize, usize)> = problem.data.outcomes().into_iter().collect();

    // variable layout per outcome pair: Pi (psd), sigma+ (psd),
    // sigma- (psd), nu (nonneg)
    let block = 3 * sv + 1;
    let mut cones = Vec::new();
    for _ in &outcomes {
        cones.extend([
            ConeDesc::Psd(dd),
            ConeDesc::Psd(dd),
            ConeDesc::Psd(dd),
            ConeDesc::Nonneg(1),
        ]);
    }
    let offsets: BTreeMap<(usize, usize), usize> = outcomes
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, i * block))
        .collect();

    // symmetrized complex reads of a realified svec block, as
    // (column, coefficient) stencils
    let x_entry = |off: usize, i: usize, j: usize| -> (usize, f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        (
            off + svec_index(lo, hi),
            if lo == hi { 1.0 } else { 1.0 / SQRT2 },
        )
    };
    let re_read = |off: usize, p: usize, q: usize| -> [(usize, f64); 2] {
        let (c1, v1) = x_entry(off, p, q);
        let (c2, v2) = x_entry(off, p + d, q + d);
        [(c1, 0.5 * v1), (c2, 0.5 * v2)]
    };
    let im_read = |off: usize, p: usize, q: usize| -> [(usize, f64); 2] {
        let (c1, v1) = x_entry(off, p + d, q);
        let (c2, v2) = x_entry(off, p, q + d);
        [(c1, 0.5 * v1), (c2, -0.5 * v2)]
    };
    // partial transpose over the X factor of indices p = ix * dY + iy
    let pt = |p: usize, q: usize| -> (usize, usize) {
        let (px, py) = (p / dims.dim_b, p % dims.dim_b);
        let (qx, qy) = (q / dims.dim_b, q % dims.dim_b);
        (qx * dims.dim_b + py, px * dims.dim_b + qy)
    };

    let mut a_triplets = Vec::new();
    let mut b_vec = Vec::new();
    let mut row_tags = BTreeMap::new();
    let mut c = vec![0.0; cones.iter().map(|k| k.dim()).sum()];
    let push_row =
        |triplets: &mut Vec<(usize, usize, f64)>, b_vec: &mut Vec<f64>, entries: Vec<(usize, f64)>, rhs: f64| {
            let row = b_vec.len();
            for (col, v) in entries {
                if v != 0.0 {
                    triplets.push((row, col, v));
                }
            }
            b_vec.push(rhs);
            row
        };

    for (&(oa, ob), &off) in &offsets {
        let (pi_off, sp_off, sm_off, nu_col) = (off, off + sv, off + 2 * sv, off + 3 * sv);
        c[nu_col] = 1.0 / d as f64;

        // splitting rows: Pi^(T_X) - sigma+ + sigma- = 0, componentwise
        for q in 0..d {
            for p in 0..=q {
                let (tp, tq) = pt(p, q);
                let mut re_row: Vec<(usize, f64)> = re_read(pi_off, tp, tq).to_vec();
                for (col, v) in re_read(sp_off, p, q) {
                    re_row.push((col, -v));
                }
                for (col, v) in re_read(sm_off, p, q) {
                    re_row.push((col, v));
                }
                push_row(&mut a_triplets, &mut b_vec, re_row, 0.0);
                if p != q {
                    let mut im_row: Vec<(usize, f64)> = im_read(pi_off, tp, tq).to_vec();
                    for (col, v) in im_read(sp_off, p, q) {
                        im_row.push((col, -v));
                    }
                    for (col, v) in im_read(sm_off, p, q) {
                        im_row.push((col, v));
                    }
                    push_row(&mut a_triplets, &mut b_vec, im_row, 0.0);
                }
            }
        }

        // nu = tr[sigma-]
        let mut tr_row = vec![(nu_col, 1.0)];
        for p in 0..d {
            for (col, v) in re_read(sm_off, p, p) {
                tr_row.push((col, -v));
            }
        }
        push_row(&mut a_triplets, &mut b_vec, tr_row, 0.0);

        // tagged data rows: tr[Pi H] = P with H = xi_x (x) psi_y
        for &(x, y) in &problem.index_set {
            let h = problem.scenario.joint_input(x, y);
            let mut row = Vec::new();
            for q in 0..d {
                for p in 0..d {
                    let hqp = h[(q, p)];
                    if hqp.re != 0.0 {
                        for (col, v) in re_read(pi_off, p, q) {
                            row.push((col, v * hqp.re));
                        }
                    }
                    if hqp.im != 0.0 {
                        for (col, v) in im_read(pi_off, p, q) {
                            row.push((col, -v * hqp.im));
                        }
                    }
                }
            }
            let row_idx = push_row(
                &mut a_triplets,
                &mut b_vec,
                row,
                problem.data.get(oa, ob, x, y),
            );
            row_tags.insert(row_idx, (oa, ob, x, y));
        }
    }

    let povm_vars = offsets
        .iter()
        .map(|(&k, &off)| (k, HermVar { d, offset: off }))
        .collect();
    let nu_cols = offsets
        .iter()
        .map(|(&k, &off)| (k, off + 3 * sv))
        .collect();
    Ok(BuiltQuantification {
        program: StandardConicProgram {
            c,
            a_triplets,
            b: b_vec,
            cones,
            row_tags,
        },
        povm_vars,
        nu_cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::SepApprox;
    use crate::linalg::{max_entangled, ComplexMatrix};
    use crate::scenario::{recover_ensemble, werner_state};
    use crate::sim::{effective_povm, simulate_quantum, simulate_shared_randomness, QuantumStrategy};
    use crate::testutil::{pauli_scenario, random_density, random_local_strategy, werner_data};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn neg_kind() -> MeasureKind {
        MeasureKind::new(Measure::Negativity, SepApprox::ExactPpt)
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    fn solve_nu(problem: &QuantificationProblem) -> f64 {
        let built = build_quantification(problem).unwrap();
        let r = solve(&built.program, &settings()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal, "{:?}", r);
        r.p_star
    }

    #[test]
    fn werner_negativity_tight() {
        let problem =
            QuantificationProblem::full(pauli_scenario(), werner_data(0.94), neg_kind()).unwrap();
        let nu = solve_nu(&problem);
        assert!((nu - 0.455).abs() < 1e-6, "nu = {nu}");
    }

    #[test]
    fn separable_werner_zero() {
        let problem =
            QuantificationProblem::full(pauli_scenario(), werner_data(0.2), neg_kind()).unwrap();
        let nu = solve_nu(&problem);
        assert!(nu.abs() < 1e-7, "nu = {nu}");
    }

    #[test]
    fn restricted_index_set_monotone() {
        let scenario = pauli_scenario();
        let data = werner_data(0.94);
        let full: BTreeSet<(usize, usize)> = data.index_set();
        let mut reduced = full.clone();
        for pair in full.iter().take(6).cloned().collect::<Vec<_>>() {
            reduced.remove(&pair);
        }
        assert_eq!(reduced.len(), 30);
        let p_red = QuantificationProblem::restricted(
            scenario.clone(),
            data.clone(),
            neg_kind(),
            reduced.clone(),
        )
        .unwrap();
        let nu_red = solve_nu(&p_red);
        assert!(nu_red <= 0.455 + 1e-6);
        assert!(nu_red >= -1e-8);
        // nested restriction can only decrease the bound
        let mut smaller = reduced;
        let extra: Vec<_> = smaller.iter().take(6).cloned().collect();
        for pair in extra {
            smaller.remove(&pair);
        }
        let p_small =
            QuantificationProblem::restricted(scenario, data, neg_kind(), smaller).unwrap();
        assert!(solve_nu(&p_small) <= nu_red + 1e-7);
    }

    #[test]
    fn witness_roundtrip_and_bounds() {
        let problem =
            QuantificationProblem::full(pauli_scenario(), werner_data(0.94), neg_kind()).unwrap();
        let (_, result, witness) = quantify(&problem, &settings(), 1e-6).unwrap();
        // self-evaluation reproduces the optimum
        let self_val: f64 = witness
            .beta
            .iter()
            .map(|(&(a, b, x, y), &v)| v * problem.data.get(a, b, x, y))
            .sum();
        assert!((self_val - result.p_star).abs() < 1e-6);
        // lower-bound property at another Werner point
        let data_half = werner_data(0.5);
        let val: f64 = witness
            .beta
            .iter()
            .map(|(&(a, b, x, y), &v)| v * data_half.get(a, b, x, y))
            .sum();
        assert!(val <= 0.125 + 1e-6, "witness value {val}");
        // classical behaviors stay nonpositive
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let scenario = pauli_scenario();
        for _ in 0..40 {
            let strategy = random_local_strategy(&mut rng);
            let table = simulate_shared_randomness(&scenario, &strategy).unwrap();
            let val: f64 = witness
                .beta
                .iter()
                .map(|(&(a, b, x, y), &v)| v * table.get(a, b, x, y))
                .sum();
            assert!(val <= 1e-7, "classical value {val}");
        }
    }

    #[test]
    fn gap_gate_rejects_failed_solves() {
        let problem =
            QuantificationProblem::full(pauli_scenario(), werner_data(0.94), neg_kind()).unwrap();
        let built = build_quantification(&problem).unwrap();
        let bad = SolverSettings {
            max_iter: 2,
            ..SolverSettings::default()
        };
        let result = solve(&built.program, &bad).unwrap();
        assert!(extract_witness(&problem, &built, &result, 1e-6).is_err());
    }

    #[test]
    fn witness_serde_and_digest() {
        let problem =
            QuantificationProblem::full(pauli_scenario(), werner_data(0.94), neg_kind()).unwrap();
        let (_, _, witness) = quantify(&problem, &settings(), 1e-6).unwrap();
        let json = serde_json::to_string(&witness).unwrap();
        assert!(json.contains("\"scenarioDigest\""));
        let back: Witness = serde_json::from_str(&json).unwrap();
        assert_eq!(back.digest(), witness.digest());
        assert_eq!(back.beta.len(), witness.beta.len());
        assert_eq!(back.measure, Measure::Negativity);
    }

    #[test]
    fn regularization_of_consistent_data() {
        let scenario = pauli_scenario();
        let data = werner_data(0.7);
        let built = build_regularization(&scenario, &data).unwrap();
        let r = solve(&built.program, &settings()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.p_star.abs() < 1e-7, "distance {}", r.p_star);
        let reg = regularized_table(&built, &r, Normalization::Normalized);
        for (&(a, b, x, y), &p) in &data.entries {
            assert!((reg.get(a, b, x, y) - p).abs() < 1e-6);
        }
    }

    #[test]
    fn regularization_restores_consistency() {
        let scenario = pauli_scenario();
        let mut data = werner_data(0.7);
        // break the input-set linear dependency at one setting
        let bumped = data.get(1, 1, 0, 0) + 1e-3;
        data.set(1, 1, 0, 0, bumped);
        let built = build_regularization(&scenario, &data).unwrap();
        let r = solve(&built.program, &settings()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.p_star > 1e-5);
        let reg = regularized_table(&built, &r, Normalization::Normalized);
        // the +x/-x and +z/-z input pairs both sum to the identity, so the
        // regularized table must satisfy the corresponding dependency
        for y in 0..6 {
            for a in 1..=4 {
                for b in 1..=4 {
                    let dep = reg.get(a, b, 0, y) + reg.get(a, b, 1, y)
                        - reg.get(a, b, 4, y)
                        - reg.get(a, b, 5, y);
                    assert!(dep.abs() < 1e-7, "dependency residual {dep}");
                }
            }
        }
        // regularized output feeds the quantification program
        let problem = QuantificationProblem::full(scenario, reg, neg_kind()).unwrap();
        let nu = solve_nu(&problem);
        assert!(nu >= -1e-8);
    }

    #[test]
    fn nu_from_povm_matches_program() {
        let scenario = pauli_scenario();
        let strategy = QuantumStrategy::bell_on(werner_state(0.94).unwrap()).unwrap();
        let povm = effective_povm(&scenario, &strategy).unwrap();
        let dims = scenario.input_dims();
        let nu = nu_from_povm(&povm, neg_kind(), dims, &settings()).unwrap();
        assert!((nu - 0.455).abs() < 1e-6, "nu = {nu}");
        let problem = QuantificationProblem::full(
            scenario,
            simulate_quantum(&pauli_scenario(), &strategy).unwrap(),
            neg_kind(),
        )
        .unwrap();
        assert!((nu - solve_nu(&problem)).abs() < 1e-6);
    }

    #[test]
    fn nu_from_separable_povm_zero() {
        // product projectors: all elements separable
        let z = [
            ComplexMatrix::diag(&[1.0, 0.0]),
            ComplexMatrix::diag(&[0.0, 1.0]),
        ];
        let mut elements = BTreeMap::new();
        for a in 0..2 {
            for b in 0..2 {
                elements.insert((a + 1, b + 1), z[a].kron(&z[b]));
            }
        }
        let povm = EffectivePovm { elements };
        let nu = nu_from_povm(&povm, neg_kind(), DimPair::new(2, 2), &settings()).unwrap();
        assert!(nu.abs() < 1e-8);
    }

    #[test]
    fn slocc_bounds() {
        let scenario = pauli_scenario();
        let strategy = QuantumStrategy::bell_on(max_entangled(2)).unwrap();
        let povm = effective_povm(&scenario, &strategy).unwrap();
        let dims = scenario.input_dims();
        let ensemble = recover_ensemble(&povm, scenario.d_x, scenario.d_y);
        let (max_single, average) = slocc_lower_bound(&ensemble, neg_kind(), dims, &settings()).unwrap();
        assert!((max_single - 0.5).abs() < 1e-6);
        assert!((average - 0.5).abs() < 1e-6);
        assert!(average <= max_single + 1e-9);

        // isotropic losses scale the ensemble weights, not the states
        let gamma = 0.3;
        let lossy = EffectivePovm {
            elements: povm
                .elements
                .iter()
                .map(|(&k, v)| (k, v.scale(gamma)))
                .collect(),
        };
        let lossy_ens = recover_ensemble(&lossy, scenario.d_x, scenario.d_y);
        let (max_single, average) =
            slocc_lower_bound(&lossy_ens, neg_kind(), dims, &settings()).unwrap();
        assert!((max_single - 0.5).abs() < 1e-6);
        assert!((average - 0.15).abs() < 1e-6);
    }

    #[test]
    fn slocc_separable_zero() {
        let z = [
            ComplexMatrix::diag(&[1.0, 0.0]),
            ComplexMatrix::diag(&[0.0, 1.0]),
        ];
        let mut states = BTreeMap::new();
        let mut probs = BTreeMap::new();
        for a in 0..2 {
            states.insert((a + 1, a + 1), z[a].kron(&z[a]));
            probs.insert((a + 1, a + 1), 0.5);
        }
        let ensemble = RecoveredEnsemble { states, probs };
        let (max_single, average) =
            slocc_lower_bound(&ensemble, neg_kind(), DimPair::new(2, 2), &settings()).unwrap();
        assert!(max_single.abs() < 1e-8);
        assert!(average.abs() < 1e-8);
    }

    #[test]
    fn expanded_negativity_agrees() {
        for lambda in [0.94, 0.2] {
            let problem =
                QuantificationProblem::full(pauli_scenario(), werner_data(lambda), neg_kind())
                    .unwrap();
            let generic = solve_nu(&problem);
            let expanded = build_negativity_sdp_expanded(&problem).unwrap();
            let r = solve(&expanded.program, &settings()).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            assert!(
                (r.p_star - generic).abs() < 1e-7,
                "lambda {lambda}: {} vs {generic}",
                r.p_star
            );
            // dual route: witness from the expanded program evaluated on
            // its generating data reproduces the optimum
            let witness = extract_witness(&problem, &expanded, &r, 1e-6).unwrap();
            let val: f64 = witness
                .beta
                .iter()
                .map(|(&(a, b, x, y), &v)| v * problem.data.get(a, b, x, y))
                .sum();
            assert!((val - r.p_star).abs() < 1e-6);
        }
    }

    #[test]
    fn expanded_negativity_random_data() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let scenario = pauli_scenario();
        for _ in 0..3 {
            // random two-qubit state measured with the standard strategy
            let strategy = QuantumStrategy::bell_on(random_density(&mut rng, 4)).unwrap();
            let data = simulate_quantum(&scenario, &strategy).unwrap();
            let problem =
                QuantificationProblem::full(scenario.clone(), data, neg_kind()).unwrap();
            let generic = solve_nu(&problem);
            let expanded = build_negativity_sdp_expanded(&problem).unwrap();
            let r = solve(&expanded.program, &settings()).unwrap();
            assert!((r.p_star - generic).abs() < 1e-7);
        }
    }

    #[test]
    fn invalid_problems_rejected() {
        let scenario = pauli_scenario();
        let data = werner_data(0.5);
        // out-of-range index pair
        let mut bad_set = BTreeSet::new();
        bad_set.insert((7, 0));
        assert!(QuantificationProblem::restricted(
            scenario.clone(),
            data.clone(),
            neg_kind(),
            bad_set
        )
        .is_err());
        // missing entries
        let mut sparse = ProbabilityTable::new(Normalization::Normalized);
        sparse.set(1, 1, 0, 0, 1.0);
        sparse.set(2, 2, 0, 1, 1.0);
        assert!(QuantificationProblem::full(scenario, sparse, neg_kind()).is_err());
    }
}
