//! Symbolic assembly of standard-form conic programs over complex Hermitian
//! matrix variables.
//!
//! A Hermitian d x d variable M is represented by one real PSD block of side
//! 2d holding the realified matrix [[Re M, -Im M], [Im M, Re M]] in svec
//! coordinates. Entry reads are symmetrized,
//!
//! ```text
//! Re M[p,q] = (X[p,q] + X[p+d,q+d]) / 2
//! Im M[p,q] = (X[p+d,q] - X[p,q+d]) / 2
//! ```
//!
//! so no structural equality rows are needed: for any symmetric PSD X the
//! matrix M defined by these reads is Hermitian PSD (average X with its
//! conjugation by [[0,-1],[1,0]], which fixes every read), and conversely
//! realifying a Hermitian PSD M produces a valid X. Programs built here
//! therefore have the same optimal values as their complex originals.
//!
//! [`MatExpr`] is a dense matrix of affine expressions in the program
//! columns; it supports the reshapings needed by the cone recipes (partial
//! transposes over arbitrary tensor factors, partial traces, permutation
//! conjugation) as entry remaps.

use crate::linalg::ComplexMatrix;
use crate::scenario::Key;
use crate::solver::{svec_index, ConeDesc, StandardConicProgram, SQRT2};
use std::collections::{BTreeMap, HashSet};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("inconsistent equality: 0 = {0}")]
    InconsistentEquality(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("objective has a nonzero constant term {0}")]
    ObjectiveConstant(f64),
}

/// Affine expression `sum coeff_i * x_i + constant` in program columns.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn constant(v: f64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: v,
        }
    }

    pub fn var(col: usize) -> Self {
        LinExpr {
            terms: [(col, 1.0)].into(),
            constant: 0.0,
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (&col, &v) in &other.terms {
            *out.terms.entry(col).or_insert(0.0) += v;
        }
        out.constant += other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> LinExpr {
        LinExpr {
            terms: self.terms.iter().map(|(&c, &v)| (c, v * s)).collect(),
            constant: self.constant * s,
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|v| v.abs() <= tol)
    }

    /// Evaluate at a primal solution vector.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(&c, &v)| v * x[c]).sum::<f64>() + self.constant
    }
}

/// Handle to a Hermitian matrix variable (one realified PSD block).
#[derive(Debug, Clone, Copy)]
pub struct HermVar {
    pub d: usize,
    /// Column offset of the block's svec coordinates.
    pub offset: usize,
}

impl HermVar {
    /// Read of the underlying real symmetric 2d x 2d matrix entry (i, j).
    fn real_entry(&self, i: usize, j: usize) -> LinExpr {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let coeff = if lo == hi { 1.0 } else { 1.0 / SQRT2 };
        LinExpr {
            terms: [(self.offset + svec_index(lo, hi), coeff)].into(),
            constant: 0.0,
        }
    }

    pub fn re(&self, p: usize, q: usize) -> LinExpr {
        let d = self.d;
        self.real_entry(p, q)
            .add(&self.real_entry(p + d, q + d))
            .scale(0.5)
    }

    pub fn im(&self, p: usize, q: usize) -> LinExpr {
        let d = self.d;
        self.real_entry(p + d, q)
            .sub(&self.real_entry(p, q + d))
            .scale(0.5)
    }

    pub fn trace(&self) -> LinExpr {
        let mut acc = LinExpr::zero();
        for p in 0..self.d {
            acc = acc.add(&self.re(p, p));
        }
        acc
    }
}

/// Complex affine scalar: re + i*im, both affine in program columns.
#[derive(Debug, Clone, Default)]
pub struct CLin {
    pub re: LinExpr,
    pub im: LinExpr,
}

/// Dense d x d matrix of complex affine expressions.
#[derive(Debug, Clone)]
pub struct MatExpr {
    pub d: usize,
    entries: Vec<CLin>,
}

impl MatExpr {
    fn at(&self, p: usize, q: usize) -> &CLin {
        &self.entries[p * self.d + q]
    }

    pub fn from_var(var: &HermVar) -> MatExpr {
        let d = var.d;
        let mut entries = Vec::with_capacity(d * d);
        for p in 0..d {
            for q in 0..d {
                entries.push(CLin {
                    re: var.re(p, q),
                    im: var.im(p, q),
                });
            }
        }
        MatExpr { d, entries }
    }

    pub fn from_const(m: &ComplexMatrix) -> MatExpr {
        let d = m.rows();
        let mut entries = Vec::with_capacity(d * d);
        for p in 0..d {
            for q in 0..d {
                entries.push(CLin {
                    re: LinExpr::constant(m[(p, q)].re),
                    im: LinExpr::constant(m[(p, q)].im),
                });
            }
        }
        MatExpr { d, entries }
    }

    /// omega * Identity(d) for an affine scalar omega.
    pub fn scaled_identity(omega: &LinExpr, d: usize) -> MatExpr {
        let mut entries = vec![CLin::default(); d * d];
        for p in 0..d {
            entries[p * d + p].re = omega.clone();
        }
        MatExpr { d, entries }
    }

    pub fn add(&self, other: &MatExpr) -> MatExpr {
        assert_eq!(self.d, other.d);
        MatExpr {
            d: self.d,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| CLin {
                    re: a.re.add(&b.re),
                    im: a.im.add(&b.im),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatExpr) -> MatExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> MatExpr {
        MatExpr {
            d: self.d,
            entries: self
                .entries
                .iter()
                .map(|e| CLin {
                    re: e.re.scale(s),
                    im: e.im.scale(s),
                })
                .collect(),
        }
    }

    /// Entry remap: out[p, q] = self[f(p, q)].
    fn remap(&self, f: impl Fn(usize, usize) -> (usize, usize)) -> MatExpr {
        let d = self.d;
        let mut entries = Vec::with_capacity(d * d);
        for p in 0..d {
            for q in 0..d {
                let (i, j) = f(p, q);
                entries.push(self.at(i, j).clone());
            }
        }
        MatExpr { d, entries }
    }

    /// Partial transpose over the tensor factors flagged in `transposed`,
    /// for a matrix acting on the product of `dims`.
    pub fn partial_transpose(&self, dims: &[usize], transposed: &[bool]) -> MatExpr {
        assert_eq!(dims.iter().product::<usize>(), self.d);
        assert_eq!(dims.len(), transposed.len());
        self.remap(|p, q| {
            let mut pi = decompose(p, dims);
            let mut qi = decompose(q, dims);
            for (k, &t) in transposed.iter().enumerate() {
                if t {
                    std::mem::swap(&mut pi[k], &mut qi[k]);
                }
            }
            (compose(&pi, dims), compose(&qi, dims))
        })
    }

    /// Conjugation by the permutation matrix sending basis index i to s(i).
    pub fn permute_indices(&self, s: &[usize]) -> MatExpr {
        assert_eq!(s.len(), self.d);
        // out = P self P^T with P e_i = e_{s(i)}: out[s(p), s(q)] = self[p, q]
        let mut inv = vec![0usize; self.d];
        for (i, &si) in s.iter().enumerate() {
            inv[si] = i;
        }
        self.remap(|p, q| (inv[p], inv[q]))
    }

    /// Trace out the tensor factor `which` of a matrix on the product of
    /// `dims`.
    pub fn partial_trace(&self, dims: &[usize], which: usize) -> MatExpr {
        assert_eq!(dims.iter().product::<usize>(), self.d);
        let kept: Vec<usize> = (0..dims.len()).filter(|&k| k != which).collect();
        let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
        let d_out: usize = kept_dims.iter().product();
        let mut entries = vec![CLin::default(); d_out * d_out];
        for p in 0..d_out {
            for q in 0..d_out {
                let pk = decompose(p, &kept_dims);
                let qk = decompose(q, &kept_dims);
                let mut acc = CLin::default();
                for t in 0..dims[which] {
                    let mut pi = vec![0usize; dims.len()];
                    let mut qi = vec![0usize; dims.len()];
                    for (slot, &k) in kept.iter().enumerate() {
                        pi[k] = pk[slot];
                        qi[k] = qk[slot];
                    }
                    pi[which] = t;
                    qi[which] = t;
                    let e = self.at(compose(&pi, dims), compose(&qi, dims));
                    acc.re = acc.re.add(&e.re);
                    acc.im = acc.im.add(&e.im);
                }
                entries[p * d_out + q] = acc;
            }
        }
        MatExpr { d: d_out, entries }
    }

    pub fn trace(&self) -> LinExpr {
        let mut acc = LinExpr::zero();
        for p in 0..self.d {
            acc = acc.add(&self.at(p, p).re);
        }
        acc
    }

    /// Real part of tr[self * H] for a constant matrix H.
    pub fn inner_const(&self, h: &ComplexMatrix) -> LinExpr {
        assert_eq!(h.rows(), self.d);
        let mut acc = LinExpr::zero();
        for p in 0..self.d {
            for q in 0..self.d {
                let e = self.at(p, q);
                let hq = h[(q, p)];
                // Re(M_pq * H_qp)
                acc = acc.add(&e.re.scale(hq.re)).sub(&e.im.scale(hq.im));
            }
        }
        acc
    }

    /// Evaluate at a primal solution vector.
    pub fn eval(&self, x: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d, self.d);
        for p in 0..self.d {
            for q in 0..self.d {
                let e = self.at(p, q);
                out[(p, q)] = num_complex::Complex64::new(e.re.eval(x), e.im.eval(x));
            }
        }
        out
    }
}

fn decompose(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

fn compose(indices: &[usize], dims: &[usize]) -> usize {
    let mut idx = 0;
    for (i, d) in indices.iter().zip(dims) {
        idx = idx * d + i;
    }
    idx
}

const COEFF_DROP_TOL: f64 = 1e-14;
const CONSTANT_DROP_TOL: f64 = 1e-12;

/// Incremental program assembly.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    cones: Vec<ConeDesc>,
    num_cols: usize,
    a_triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    row_tags: BTreeMap<usize, Key>,
    objective: LinExpr,
    row_signatures: HashSet<String>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        ProgramBuilder::default()
    }

    fn push_cone(&mut self, cone: ConeDesc) -> usize {
        let offset = self.num_cols;
        self.num_cols += cone.dim();
        self.cones.push(cone);
        offset
    }

    pub fn add_free_scalar(&mut self) -> usize {
        self.push_cone(ConeDesc::Free(1))
    }

    pub fn add_nonneg_scalar(&mut self) -> usize {
        self.push_cone(ConeDesc::Nonneg(1))
    }

    /// n nonnegative scalars; returns the first column.
    pub fn add_nonneg_vec(&mut self, n: usize) -> usize {
        self.push_cone(ConeDesc::Nonneg(n))
    }

    /// Second-order cone of total dimension n; returns the column of the
    /// radial coordinate (the remaining n-1 follow contiguously).
    pub fn add_soc(&mut self, n: usize) -> usize {
        self.push_cone(ConeDesc::SecondOrder(n))
    }

    /// Hermitian PSD d x d matrix variable.
    pub fn add_herm(&mut self, d: usize) -> HermVar {
        let offset = self.push_cone(ConeDesc::Psd(2 * d));
        HermVar { d, offset }
    }

    /// Equality `expr = 0`. Identically-zero rows are dropped; duplicate
    /// rows (up to a positive scale) are emitted only once, so redundant
    /// symmetry constraints do not produce rank-deficient blocks. Tagged
    /// rows are never dropped or merged.
    pub fn add_eq(&mut self, expr: &LinExpr, tag: Option<Key>) -> Result<Option<usize>, BuildError> {
        if expr.is_zero(COEFF_DROP_TOL) {
            if expr.constant.abs() > CONSTANT_DROP_TOL {
                return Err(BuildError::InconsistentEquality(expr.constant));
            }
            if tag.is_none() {
                return Ok(None);
            }
        }
        if tag.is_none() {
            let sig = row_signature(expr);
            if !self.row_signatures.insert(sig) {
                return Ok(None);
            }
        }
        let row = self.b.len();
        for (&col, &v) in &expr.terms {
            if v.abs() > COEFF_DROP_TOL {
                self.a_triplets.push((row, col, v));
            }
        }
        self.b.push(-expr.constant);
        if let Some(t) = tag {
            self.row_tags.insert(row, t);
        }
        Ok(Some(row))
    }

    /// Equality between two Hermitian-valued matrix expressions: one row for
    /// each real upper-triangular component, one for each strictly-upper
    /// imaginary component.
    pub fn eq_hermitian(&mut self, lhs: &MatExpr, rhs: &MatExpr) -> Result<(), BuildError> {
        if lhs.d != rhs.d {
            return Err(BuildError::ShapeMismatch(format!(
                "equating {}x{} with {}x{}",
                lhs.d, lhs.d, rhs.d, rhs.d
            )));
        }
        let diff = lhs.sub(rhs);
        for p in 0..diff.d {
            for q in p..diff.d {
                self.add_eq(&diff.at(p, q).re, None)?;
                if p != q {
                    self.add_eq(&diff.at(p, q).im, None)?;
                }
            }
        }
        Ok(())
    }

    pub fn minimize(&mut self, objective: &LinExpr) {
        self.objective = objective.clone();
    }

    pub fn build(self) -> Result<StandardConicProgram, BuildError> {
        if self.objective.constant.abs() > 0.0 {
            return Err(BuildError::ObjectiveConstant(self.objective.constant));
        }
        let mut c = vec![0.0; self.num_cols];
        for (&col, &v) in &self.objective.terms {
            c[col] = v;
        }
        Ok(StandardConicProgram {
            c,
            a_triplets: self.a_triplets,
            b: self.b,
            cones: self.cones,
            row_tags: self.row_tags,
        })
    }

    /// Extract a Hermitian variable's value from a primal solution.
    pub fn read_herm(var: &HermVar, x: &[f64]) -> ComplexMatrix {
        MatExpr::from_var(var).eval(x)
    }
}

/// Scale-normalized signature used for duplicate-row detection.
fn row_signature(expr: &LinExpr) -> String {
    let lead = expr
        .terms
        .values()
        .find(|v| v.abs() > COEFF_DROP_TOL)
        .copied()
        .unwrap_or(1.0);
    let mut sig = String::new();
    for (&col, &v) in &expr.terms {
        if v.abs() > COEFF_DROP_TOL {
            sig.push_str(&format!("{col}:{:.12e};", v / lead));
        }
    }
    sig.push_str(&format!("={:.12e}", expr.constant / lead));
    sig
}
