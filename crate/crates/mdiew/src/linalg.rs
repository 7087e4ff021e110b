//! Dense complex Hermitian matrix arithmetic.
//!
//! Everything here operates on small dense matrices (problem dimensions stay
//! below 40), stored row-major. Hermitian PSD constraints are embedded into
//! real symmetric cones via [`ComplexMatrix::realify`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Mul, Sub};

/// Default absolute entrywise tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian within tolerance {tol:e} (max deviation {dev:e})")]
    NotHermitian { tol: f64, dev: f64 },
}

/// Local Hilbert-space dimensions of a bipartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimPair {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl DimPair {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        assert!(dim_a >= 1 && dim_b >= 1);
        DimPair { dim_a, dim_b }
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }
}

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Dense complex matrix, row-major entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from row-major complex entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(rows * cols, entries.len());
        ComplexMatrix { rows, cols, entries }
    }

    /// Build from row-major real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        Self::from_entries(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Rank-1 projector |v><v| / <v|v> is NOT applied; this is the raw outer product |v><w|.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for i in 0..v.len() {
            for j in 0..w.len() {
                m[(i, j)] = v[i] * w[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    /// Full transpose in the computational basis, without conjugation.
    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self::from_entries(
            self.rows,
            self.cols,
            self.entries.iter().map(|z| z.conj()).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_entries(
            self.rows,
            self.cols,
            self.entries.iter().map(|z| z * s).collect(),
        )
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tol
    }

    fn require_hermitian(&self, tol: f64) -> Result<(), LinalgError> {
        let dev = self.hermiticity_deviation();
        if dev <= tol {
            Ok(())
        } else {
            Err(LinalgError::NotHermitian { tol, dev })
        }
    }

    /// Symmetrize to (M + M^dagger)/2. Used when ingesting external data only.
    pub fn hermitize(&self) -> Self {
        let d = self.dagger();
        let mut m = self.clone();
        for k in 0..m.entries.len() {
            m.entries[k] = (m.entries[k] + d.entries[k]) * 0.5;
        }
        m
    }

    /// Kronecker (tensor) product.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    fn check_dims(&self, dims: DimPair) -> Result<(), LinalgError> {
        if !self.is_square() || self.rows != dims.total() {
            return Err(LinalgError::DimensionMismatch(format!(
                "matrix is {}x{}, expected square of dimension {}",
                self.rows,
                self.cols,
                dims.total()
            )));
        }
        Ok(())
    }

    /// Partial transpose on one tensor factor, computational basis.
    pub fn partial_transpose(
        &self,
        dims: DimPair,
        subsystem: Subsystem,
    ) -> Result<ComplexMatrix, LinalgError> {
        self.check_dims(dims)?;
        let (da, db) = (dims.dim_a, dims.dim_b);
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for ia in 0..da {
            for ib in 0..db {
                for ja in 0..da {
                    for jb in 0..db {
                        let src = match subsystem {
                            Subsystem::A => (ja * db + ib, ia * db + jb),
                            Subsystem::B => (ia * db + jb, ja * db + ib),
                        };
                        m[(ia * db + ib, ja * db + jb)] = self[src];
                    }
                }
            }
        }
        Ok(m)
    }

    /// Trace out one tensor factor.
    pub fn partial_trace(
        &self,
        dims: DimPair,
        traced: Subsystem,
    ) -> Result<ComplexMatrix, LinalgError> {
        self.check_dims(dims)?;
        let (da, db) = (dims.dim_a, dims.dim_b);
        match traced {
            Subsystem::B => {
                let mut m = ComplexMatrix::zeros(da, da);
                for ia in 0..da {
                    for ja in 0..da {
                        for k in 0..db {
                            m[(ia, ja)] += self[(ia * db + k, ja * db + k)];
                        }
                    }
                }
                Ok(m)
            }
            Subsystem::A => {
                let mut m = ComplexMatrix::zeros(db, db);
                for ib in 0..db {
                    for jb in 0..db {
                        for k in 0..da {
                            m[(ib, jb)] += self[(k * db + ib, k * db + jb)];
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    /// Reorder tensor factors of a square matrix on a product space.
    ///
    /// `dims` are the factor dimensions in the current order; `perm[k]` gives
    /// the current position of the factor that ends up at position `k`.
    pub fn permute_systems(&self, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
        let n: usize = dims.iter().product();
        assert_eq!(self.rows, n);
        assert_eq!(perm.len(), dims.len());
        let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let decode = |mut idx: usize| -> Vec<usize> {
            let mut multi = vec![0; dims.len()];
            for k in (0..dims.len()).rev() {
                multi[k] = idx % dims[k];
                idx /= dims[k];
            }
            multi
        };
        let encode_new = |multi: &[usize]| -> usize {
            let mut idx = 0;
            for k in 0..new_dims.len() {
                idx = idx * new_dims[k] + multi[perm[k]];
            }
            idx
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            let mi = decode(i);
            let ni = encode_new(&mi);
            for j in 0..n {
                let mj = decode(j);
                m[(ni, encode_new(&mj))] = self[(i, j)];
            }
        }
        m
    }

    /// Real symmetric embedding `[[Re M, -Im M], [Im M, Re M]]`.
    ///
    /// The output is PSD iff M is PSD; each eigenvalue of M appears twice.
    pub fn realify(&self) -> Result<DMatrix<f64>, LinalgError> {
        self.require_hermitian(HERMITICITY_TOL)?;
        let d = self.rows;
        let mut m = DMatrix::<f64>::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let z = self[(i, j)];
                m[(i, j)] = z.re;
                m[(i + d, j + d)] = z.re;
                m[(i, j + d)] = -z.im;
                m[(i + d, j)] = z.im;
            }
        }
        Ok(m)
    }

    /// Ascending real eigenvalues of a Hermitian matrix.
    ///
    /// Computed on the realified matrix, where each eigenvalue appears twice;
    /// every second sorted value is kept.
    pub fn eigvals_hermitian(&self) -> Result<Vec<f64>, LinalgError> {
        let real = self.realify()?;
        let eig = real.symmetric_eigenvalues();
        let mut vals: Vec<f64> = eig.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals.into_iter().step_by(2).collect())
    }

    pub fn min_eigval(&self) -> Result<f64, LinalgError> {
        Ok(self.eigvals_hermitian()?[0])
    }

    /// Real part of tr(self * other); equals the Hilbert-Schmidt inner product
    /// when both matrices are Hermitian.
    pub fn inner(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.rows, other.cols);
        assert_eq!(self.cols, other.rows);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] * other[(j, i)]).re;
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix::from_entries(
            self.rows,
            self.cols,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix::from_entries(
            self.rows,
            self.cols,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut m = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        m
    }
}

/// Maximally entangled pure-state projector |phi_d><phi_d| on d x d.
pub fn max_entangled(d: usize) -> ComplexMatrix {
    assert!(d >= 1);
    let amp = 1.0 / (d as f64).sqrt();
    let mut ket = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        ket[i * d + i] = Complex64::new(amp, 0.0);
    }
    ComplexMatrix::outer(&ket, &ket)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_entries(
        2,
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_entries(
        2,
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0])
}

// Complex entries serialize as [re, im]; matrices as nested row arrays.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            let row: Vec<[f64; 2]> = (0..self.cols)
                .map(|j| [self[(i, j)].re, self[(i, j)].im])
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MatVisitor;
        impl<'de> Visitor<'de> for MatVisitor {
            type Value = ComplexMatrix;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a matrix as nested rows of [re, im] pairs")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let mut rows: Vec<Vec<[f64; 2]>> = Vec::new();
                while let Some(row) = seq.next_element::<Vec<[f64; 2]>>()? {
                    rows.push(row);
                }
                let nrows = rows.len();
                let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(serde::de::Error::custom("ragged matrix rows"));
                }
                let entries = rows
                    .into_iter()
                    .flatten()
                    .map(|[re, im]| Complex64::new(re, im))
                    .collect();
                Ok(ComplexMatrix::from_entries(nrows, ncols, entries))
            }
        }
        deserializer.deserialize_seq(MatVisitor)
    }
}
