//! Standard-form conic linear programs and an interior-point backend.
//!
//! A program is `min c'x  s.t.  A x = b,  x in K` where `K` is an ordered
//! product of free, nonnegative, second-order and real-symmetric PSD cones.
//! PSD blocks are stored in scaled upper-triangular (svec) coordinates:
//! column-major upper triangle with off-diagonal entries multiplied by
//! sqrt(2), so that the Euclidean inner product of two svecs equals the
//! trace inner product of the corresponding symmetric matrices.
//!
//! Solving delegates to a primal-dual path-following interior-point method
//! with Nesterov-Todd scaling and a homogeneous self-dual embedding
//! (infeasibility surfaces as a certificate, not as an iteration stall).
//! All optimality claims are re-certified here from the returned primal and
//! dual vectors; a result is only reported `Optimal` when the residuals
//! recomputed in this module pass the configured tolerances.

use crate::scenario::Key;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("backend rejected the program: {0}")]
    Backend(String),
    #[error("program dump parse error at line {0}: {1}")]
    Parse(usize, String),
}

/// One factor of the cone product. Dimensions are vector-space dimensions
/// except for `Psd(n)`, which names the matrix side; its vectorized
/// dimension is n(n+1)/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeDesc {
    Free(usize),
    Nonneg(usize),
    SecondOrder(usize),
    Psd(usize),
}

impl ConeDesc {
    /// Length of the coordinate slice occupied by this cone factor.
    pub fn dim(&self) -> usize {
        match *self {
            ConeDesc::Free(n) | ConeDesc::Nonneg(n) | ConeDesc::SecondOrder(n) => n,
            ConeDesc::Psd(n) => svec_dim(n),
        }
    }
}

/// Vectorized dimension of an n x n symmetric matrix.
pub fn svec_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry (i, j), i <= j, in svec coordinates.
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Symmetric matrix from svec coordinates.
pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_dim(n));
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let val = v[svec_index(i, j)];
            if i == j {
                m[(i, j)] = val;
            } else {
                m[(i, j)] = val / SQRT2;
                m[(j, i)] = val / SQRT2;
            }
        }
    }
    m
}

/// svec coordinates of a symmetric matrix (upper triangle is read).
pub fn sym_to_svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = vec![0.0; svec_dim(n)];
    for j in 0..n {
        for i in 0..=j {
            v[svec_index(i, j)] = if i == j { m[(i, j)] } else { m[(i, j)] * SQRT2 };
        }
    }
    v
}

fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Conic linear program in standard form.
#[derive(Debug, Clone)]
pub struct StandardConicProgram {
    pub c: Vec<f64>,
    /// Equality matrix in triplet form (row, col, value); duplicates sum.
    pub a_triplets: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeDesc>,
    /// Identity tags for equality rows whose dual multipliers carry meaning
    /// downstream (witness coefficients), keyed by row index.
    pub row_tags: BTreeMap<usize, Key>,
}

impl StandardConicProgram {
    pub fn num_vars(&self) -> usize {
        self.cones.iter().map(|c| c.dim()).sum()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.c.len() != n {
            return Err(SolverError::Malformed(format!(
                "objective length {} != cone dimension {}",
                self.c.len(),
                n
            )));
        }
        for &(r, col, v) in &self.a_triplets {
            if r >= m || col >= n {
                return Err(SolverError::Malformed(format!(
                    "triplet ({r},{col}) out of bounds for {m}x{n}"
                )));
            }
            if !v.is_finite() {
                return Err(SolverError::Malformed(format!(
                    "non-finite coefficient at ({r},{col})"
                )));
            }
        }
        if let Some((&row, _)) = self.row_tags.iter().next_back() {
            if row >= m {
                return Err(SolverError::Malformed(format!(
                    "row tag {row} out of bounds for {m} rows"
                )));
            }
        }
        Ok(())
    }

    /// Offsets of each cone factor into the variable vector.
    pub fn cone_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.cones.len());
        let mut off = 0;
        for cone in &self.cones {
            offsets.push(off);
            off += cone.dim();
        }
        offsets
    }

    /// Dense A x product from the triplet representation.
    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_rows()];
        for &(r, c, v) in &self.a_triplets {
            out[r] += v * x[c];
        }
        out
    }

    /// Dense A' y product from the triplet representation.
    pub fn apply_a_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars()];
        for &(r, c, v) in &self.a_triplets {
            out[c] += v * y[r];
        }
        out
    }
}

/// Termination tolerances and iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    pub max_iter: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            eps_gap: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// The returned y is an improving ray proving Ax = b, x in K infeasible.
    PrimalInfeasible,
    /// The returned x is an improving ray proving the dual infeasible.
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Dual multipliers, one per equality row, signed so that the dual
    /// objective is b'y.
    pub y: Vec<f64>,
    pub p_star: f64,
    pub d_star: f64,
    /// max(‖Ax−b‖_inf, distance of x from K).
    pub primal_residual: f64,
    /// Distance of the dual slack c − A'y from K*.
    pub dual_residual: f64,
    /// |p*−d*| / (1 + |p*|).
    pub relative_gap: f64,
    pub iterations: u32,
}

/// Distance-from-cone estimate of a coordinate slice (0 when inside).
fn cone_violation(cone: ConeDesc, slice: &[f64]) -> f64 {
    match cone {
        ConeDesc::Free(_) => 0.0,
        ConeDesc::Nonneg(_) => slice
            .iter()
            .cloned()
            .fold(0.0f64, |acc, v| acc.max(-v)),
        ConeDesc::SecondOrder(_) => {
            if slice.is_empty() {
                return 0.0;
            }
            let tail: f64 = slice[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            (tail - slice[0]).max(0.0)
        }
        ConeDesc::Psd(n) => (-min_eig_sym(&smat(slice, n))).max(0.0),
    }
}

/// Distance of a dual slack slice from the dual cone K*. Free variables
/// dualize to {0}; the other cones here are self-dual.
fn dual_cone_violation(cone: ConeDesc, slice: &[f64]) -> f64 {
    match cone {
        ConeDesc::Free(_) => slice.iter().cloned().fold(0.0f64, |acc, v| acc.max(v.abs())),
        _ => cone_violation(cone, slice),
    }
}

fn sum_duplicate_triplets(triplets: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(r, c, v) in triplets {
        *map.entry((r, c)).or_insert(0.0) += v;
    }
    map.into_iter()
        .filter(|&(_, v)| v != 0.0)
        .map(|((r, c), v)| (r, c, v))
        .collect()
}

/// Solve a standard-form program. The result's residuals are recomputed
/// from (x, y) in this module, independently of the backend's own report.
pub fn solve(
    program: &StandardConicProgram,
    settings: &SolverSettings,
) -> Result<SolveResult, SolverError> {
    program.validate()?;
    let n = program.num_vars();
    let m_eq = program.num_rows();
    let offsets = program.cone_offsets();

    // Backend form: min c'x s.t. A_full x + s = b_full, s in K_full with
    // K_full = {0}^m_eq x K; the second block encodes x in K via -I x + s = 0.
    let mut triplets = sum_duplicate_triplets(&program.a_triplets);
    let mut b_full = program.b.clone();
    let mut cones_full: Vec<SupportedConeT<f64>> = vec![SupportedConeT::ZeroConeT(m_eq)];
    let mut row = m_eq;
    for (cone, &off) in program.cones.iter().zip(&offsets) {
        let dim = cone.dim();
        match cone {
            ConeDesc::Free(_) => continue,
            ConeDesc::Nonneg(d) => cones_full.push(SupportedConeT::NonnegativeConeT(*d)),
            ConeDesc::SecondOrder(d) => cones_full.push(SupportedConeT::SecondOrderConeT(*d)),
            ConeDesc::Psd(s) => cones_full.push(SupportedConeT::PSDTriangleConeT(*s)),
        }
        for k in 0..dim {
            triplets.push((row + k, off + k, -1.0));
        }
        b_full.extend(std::iter::repeat(0.0).take(dim));
        row += dim;
    }
    let m_full = row;

    let (rows, (cols, vals)): (Vec<usize>, (Vec<usize>, Vec<f64>)) = triplets
        .iter()
        .map(|&(r, c, v)| (r, (c, v)))
        .unzip();
    let a = CscMatrix::new_from_triplets(m_full, n, rows, cols, vals);
    let p = CscMatrix::zeros((n, n));

    let backend_settings = DefaultSettings {
        verbose: false,
        max_iter: settings.max_iter,
        tol_feas: settings.eps_primal.min(settings.eps_dual) * 1e-1,
        tol_gap_abs: settings.eps_gap * 1e-1,
        tol_gap_rel: settings.eps_gap * 1e-1,
        // quantification programs carry consistent-but-dependent equality
        // rows and rank-deficient optima; a slightly stronger static
        // regularization keeps the KKT factorization from stalling there
        static_regularization_constant: 1e-7,
        ..DefaultSettings::default()
    };

    let mut solver = DefaultSolver::new(&p, &program.c, &a, &b_full, &cones_full, backend_settings)
        .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;

    // The backend reports z with A'z + c in K*; our convention is
    // y = -z so the dual reads max b'y with c - A'y in K*.
    let y: Vec<f64> = sol.z[..m_eq].iter().map(|z| -z).collect();
    let x = sol.x.clone();

    // AlmostSolved is downgraded accuracy from the backend's viewpoint;
    // whether it meets the caller's tolerances is decided below from the
    // recomputed residuals, like any other candidate optimum.
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::PrimalInfeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            SolveStatus::DualInfeasible
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIterations,
        _ => SolveStatus::NumericalFailure,
    };

    let p_star: f64 = program.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let d_star: f64 = program.b.iter().zip(&y).map(|(b, y)| b * y).sum();

    // Independent certification of the reported solution.
    let ax = program.apply_a(&x);
    let mut primal_residual = ax
        .iter()
        .zip(&program.b)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let aty = program.apply_a_transpose(&y);
    let slack: Vec<f64> = program.c.iter().zip(&aty).map(|(c, a)| c - a).collect();
    let mut dual_residual = 0.0f64;
    for (cone, &off) in program.cones.iter().zip(&offsets) {
        let dim = cone.dim();
        primal_residual = primal_residual.max(cone_violation(*cone, &x[off..off + dim]));
        dual_residual = dual_residual.max(dual_cone_violation(*cone, &slack[off..off + dim]));
    }
    let relative_gap = (p_star - d_star).abs() / (1.0 + p_star.abs());

    let certified = primal_residual <= settings.eps_primal
        && dual_residual <= settings.eps_dual
        && relative_gap <= settings.eps_gap;
    let status = if status == SolveStatus::Optimal && !certified {
        SolveStatus::NumericalFailure
    } else {
        status
    };

    Ok(SolveResult {
        status,
        x,
        y,
        p_star,
        d_star,
        primal_residual,
        dual_residual,
        relative_gap,
        iterations: sol.iterations,
    })
}

/// Duality diagnostics for an Optimal result; purely observational.
#[derive(Debug, Clone)]
pub struct DualityReport {
    pub weak_duality_ok: bool,
    pub gap: f64,
    pub gap_ok: bool,
    pub complementarity: f64,
    pub complementarity_ok: bool,
    pub notes: Vec<String>,
}

/// Check weak/strong duality and complementarity of an Optimal result.
pub fn check_duality(
    program: &StandardConicProgram,
    result: &SolveResult,
    settings: &SolverSettings,
) -> DualityReport {
    let mut notes = Vec::new();
    if result.status != SolveStatus::Optimal {
        notes.push(format!(
            "status {:?}: gap reported without assertions",
            result.status
        ));
    }
    let gap = (result.p_star - result.d_star).abs();
    let weak_duality_ok = result.p_star >= result.d_star - settings.eps_gap * (1.0 + result.p_star.abs());
    let gap_ok = gap <= settings.eps_gap * (1.0 + result.p_star.abs());
    let aty = program.apply_a_transpose(&result.y);
    let complementarity: f64 = program
        .c
        .iter()
        .zip(&aty)
        .zip(&result.x)
        .map(|((c, a), x)| (c - a) * x)
        .sum();
    let complementarity_ok =
        complementarity.abs() <= 10.0 * settings.eps_gap * (1.0 + result.p_star.abs());
    if !weak_duality_ok {
        notes.push(format!("weak duality violated: p*={} < d*={}", result.p_star, result.d_star));
    }
    if result.status == SolveStatus::Optimal && !gap_ok {
        notes.push(format!("gap {gap} exceeds tolerance"));
    }
    DualityReport {
        weak_duality_ok,
        gap,
        gap_ok,
        complementarity,
        complementarity_ok,
        notes,
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sectioned plain-text dump for differential testing against external
/// solvers; floats round-trip bit-exactly through 17 significant digits.
pub fn dump_program(program: &StandardConicProgram) -> String {
    let mut out = String::new();
    writeln!(out, "# conic program dump v1").unwrap();
    writeln!(out, "[cones]").unwrap();
    for cone in &program.cones {
        match cone {
            ConeDesc::Free(n) => writeln!(out, "free {n}").unwrap(),
            ConeDesc::Nonneg(n) => writeln!(out, "nonneg {n}").unwrap(),
            ConeDesc::SecondOrder(n) => writeln!(out, "soc {n}").unwrap(),
            ConeDesc::Psd(n) => writeln!(out, "psd {n}").unwrap(),
        }
    }
    writeln!(out, "[objective]").unwrap();
    for v in &program.c {
        writeln!(out, "{}", fmt17(*v)).unwrap();
    }
    writeln!(out, "[matrix]").unwrap();
    for &(r, c, v) in &sum_duplicate_triplets(&program.a_triplets) {
        writeln!(out, "{r} {c} {}", fmt17(v)).unwrap();
    }
    writeln!(out, "[rhs]").unwrap();
    for v in &program.b {
        writeln!(out, "{}", fmt17(*v)).unwrap();
    }
    writeln!(out, "[tags]").unwrap();
    for (&row, &(a, b, x, y)) in &program.row_tags {
        writeln!(out, "{row} {a} {b} {x} {y}").unwrap();
    }
    out
}

/// Inverse of [`dump_program`].
pub fn parse_program(text: &str) -> Result<StandardConicProgram, SolverError> {
    let mut cones = Vec::new();
    let mut c = Vec::new();
    let mut a_triplets = Vec::new();
    let mut b = Vec::new();
    let mut row_tags = BTreeMap::new();
    let mut section = "";
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[cones]" | "[objective]" | "[matrix]" | "[rhs]" | "[tags]" => line,
                _ => return Err(SolverError::Parse(lineno + 1, format!("unknown section {line}"))),
            };
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| SolverError::Parse(lineno + 1, msg.into());
        match section {
            "[cones]" => {
                if fields.len() != 2 {
                    return Err(bad("expected `<kind> <dim>`"));
                }
                let n: usize = fields[1].parse().map_err(|_| bad("bad dimension"))?;
                cones.push(match fields[0] {
                    "free" => ConeDesc::Free(n),
                    "nonneg" => ConeDesc::Nonneg(n),
                    "soc" => ConeDesc::SecondOrder(n),
                    "psd" => ConeDesc::Psd(n),
                    other => return Err(bad(&format!("unknown cone {other}"))),
                });
            }
            "[objective]" => c.push(fields[0].parse().map_err(|_| bad("bad float"))?),
            "[matrix]" => {
                if fields.len() != 3 {
                    return Err(bad("expected `<row> <col> <value>`"));
                }
                a_triplets.push((
                    fields[0].parse().map_err(|_| bad("bad row"))?,
                    fields[1].parse().map_err(|_| bad("bad col"))?,
                    fields[2].parse().map_err(|_| bad("bad float"))?,
                ));
            }
            "[rhs]" => b.push(fields[0].parse().map_err(|_| bad("bad float"))?),
            "[tags]" => {
                if fields.len() != 5 {
                    return Err(bad("expected `<row> <a> <b> <x> <y>`"));
                }
                let nums: Result<Vec<usize>, _> = fields.iter().map(|f| f.parse()).collect();
                let nums = nums.map_err(|_| bad("bad integer"))?;
                row_tags.insert(nums[0], (nums[1], nums[2], nums[3], nums[4]));
            }
            _ => return Err(bad("content before any section header")),
        }
    }
    let program = StandardConicProgram {
        c,
        a_triplets,
        b,
        cones,
        row_tags,
    };
    program.validate()?;
    Ok(program)
}
