//! Dense complex matrices and the handful of linear-algebra primitives the
//! quantum layer is built on: Kronecker products, partial traces, partial
//! transposes and a Hermitian eigensolver.
//!
//! Everything is row-major and dense. Dimensions stay small (a few qubits), so
//! none of the routines try to be clever about memory layout.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

pub type C64 = Complex64;

/// Tolerance on `max |m - m^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius mass at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from separate real and imaginary row-major parts.
    pub fn from_parts(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                what: "imaginary part",
                expected: re.len(),
                found: im.len(),
            });
        }
        let data = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Column vector from amplitudes.
    pub fn column(amplitudes: &[C64]) -> Self {
        Self {
            rows: amplitudes.len(),
            cols: 1,
            data: amplitudes.to_vec(),
        }
    }

    /// The projector `|v><v|` (not normalized).
    pub fn ket_bra(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column_vec(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product. Panics on incompatible shapes, which is always a
    /// programming error at the call sites in this crate.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * m * self^dagger`.
    pub fn sandwich(&self, m: &Self) -> Self {
        self.matmul(m).matmul(&self.adjoint())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self { data, ..*self }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self { data, ..*self }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { data, ..*self }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { data, ..*self }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// `max |m - m^dagger|`, infinite for non-square input.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of matrices, left to right.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| tensor(&acc, f))
}

fn check_square_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let total: usize = dims.iter().product();
    if total != m.rows {
        return Err(Error::DimensionMismatch {
            what: "product of subsystem dims",
            expected: m.rows,
            found: total,
        });
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every multi-index over the chosen subsystems, enumerated in
/// row-major order of those subsystems.
fn offsets(dims: &[usize], strides: &[usize], which: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &k in which {
        let mut next = Vec::with_capacity(out.len() * dims[k]);
        for &base in &out {
            for digit in 0..dims[k] {
                next.push(base + digit * strides[k]);
            }
        }
        out = next;
    }
    out
}

/// Reduced matrix on the subsystems listed in `keep` (in ascending subsystem
/// order). An empty `keep` traces everything out and returns the 1x1 matrix
/// holding `tr(m)`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    check_square_dims(m, dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    if kept.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidPartition("duplicate subsystem index"));
    }
    if kept.last().is_some_and(|&k| k >= dims.len()) {
        return Err(Error::InvalidPartition("subsystem index out of range"));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let st = strides(dims);
    let kept_off = offsets(dims, &st, &kept);
    let traced_off = offsets(dims, &st, &traced);

    let n = kept_off.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (a, &ra) in kept_off.iter().enumerate() {
        for (b, &cb) in kept_off.iter().enumerate() {
            out[(a, b)] = traced_off.iter().map(|&t| m[(ra + t, cb + t)]).sum();
        }
    }
    Ok(out)
}

/// Transposes the indices of subsystem `on`, leaving the others untouched.
pub fn partial_transpose(m: &ComplexMatrix, dims: &[usize], on: usize) -> Result<ComplexMatrix> {
    check_square_dims(m, dims)?;
    if on >= dims.len() {
        return Err(Error::InvalidPartition("subsystem index out of range"));
    }
    let s = strides(dims)[on];
    let d = dims[on];
    let mut out = ComplexMatrix::zeros(m.rows, m.cols);
    for i in 0..m.rows {
        let di = (i / s) % d;
        for j in 0..m.cols {
            let dj = (j / s) % d;
            let ni = i - di * s + dj * s;
            let nj = j - dj * s + di * s;
            out[(ni, nj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix: `m = V diag(values) V^dagger`
/// with `values` ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::diag_real(&self.values);
        self.vectors.matmul(&d).matmul(&self.vectors.adjoint())
    }

    /// `V f(diag) V^dagger`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let d = ComplexMatrix::diag_real(&mapped);
        self.vectors.matmul(&d).matmul(&self.vectors.adjoint())
    }
}

/// Eigen-decomposition by cyclic complex Jacobi rotations. The input is
/// symmetrized as `(m + m^dagger)/2` after the Hermiticity check.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let residual = m.hermiticity_residual();
    if !(residual <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)].norm_sqr())
            .sum();
        if math::sqrt(off) < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// One two-sided rotation zeroing `a[p][q]`. The rotation is the phase fix
/// `diag(1, e^{-i phi})` on `q` followed by a real symmetric Schur rotation.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let n = a.rows;
    let phase = apq / mag; // e^{i phi}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + math::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + math::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / math::sqrt(1.0 + t * t);
    let s = t * c;

    // Columns of U restricted to (p, q):
    //   U[p][p] = c,                U[p][q] = s
    //   U[q][p] = -s e^{-i phi},    U[q][q] = c e^{-i phi}
    let upp = C64::new(c, 0.0);
    let upq = C64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;

    // a <- a U
    for r in 0..n {
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * upp + arq * uqp;
        a[(r, q)] = arp * upq + arq * uqq;
    }
    // a <- U^dagger a
    for col in 0..n {
        let apc = a[(p, col)];
        let aqc = a[(q, col)];
        a[(p, col)] = upp.conj() * apc + uqp.conj() * aqc;
        a[(q, col)] = upq.conj() * apc + uqq.conj() * aqc;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // v <- v U
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp * upp + vrq * uqp;
        v[(r, q)] = vrp * upq + vrq * uqq;
    }
}
