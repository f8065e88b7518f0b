//! Dense complex matrices and the small-dimension numerical kernel: cyclic
//! Jacobi eigendecomposition for Hermitian matrices, SVD through the Gram
//! matrix of the smaller side, Kronecker products, partial trace and partial
//! transpose, and local unitary conjugation.
//!
//! Everything in the crate works on matrices of size at most 9x9, so the
//! solvers favor robustness and reproducibility over asymptotics. Eigenvalues
//! come out ascending and eigenvector phases are fixed deterministically, so
//! identical inputs produce bit-identical output regardless of thread count.

use crate::Error;
use num_complex::Complex;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type Complex64 = Complex<f64>;

/// Default tolerance for structural checks (hermiticity, unitarity,
/// projector and rank tests).
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Default tolerance for reconstruction identities of the factorizations.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Column vector with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    pub data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        assert!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "vector entries must be finite"
        );
        ComplexVector { data }
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVector {
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Standard basis vector e_k in dimension n.
    pub fn basis(n: usize, k: usize) -> Self {
        assert!(k < n, "basis index out of range");
        let mut v = Self::zeros(n);
        v.data[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self::new(data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product, conjugate-linear in `self`: (self, other).
    pub fn inner(&self, other: &ComplexVector) -> Complex64 {
        assert_eq!(self.len(), other.len(), "inner product length mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(&self) -> ComplexVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, z: Complex64) -> ComplexVector {
        ComplexVector {
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    pub fn add(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.len(), other.len());
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.len(), other.len());
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn conj(&self) -> ComplexVector {
        ComplexVector {
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Outer product |self><other|.
    pub fn outer(&self, other: &ComplexVector) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.len(), other.len());
        for i in 0..self.len() {
            for j in 0..other.len() {
                m[(i, j)] = self.data[i] * other.data[j].conj();
            }
        }
        m
    }

    /// Tensor product; entry (i, k) of the result sits at index i*other.len() + k.
    pub fn tensor(&self, other: &ComplexVector) -> ComplexVector {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.data {
            for b in &other.data {
                out.push(a * b);
            }
        }
        ComplexVector { data: out }
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        assert!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "matrix entries must be finite"
        );
        ComplexMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Real matrix from nested rows, for fixtures in tests and examples.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(x, 0.0);
            }
        }
        m
    }

    /// Matrix unit E_ij.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn scaled(&self, z: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    pub fn scaled_re(&self, x: f64) -> ComplexMatrix {
        self.scaled(Complex64::new(x, 0.0))
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        let mut out = ComplexVector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        assert!(j < self.cols);
        ComplexVector {
            data: (0..self.rows).map(|i| self[(i, j)]).collect(),
        }
    }

    pub fn set_column(&mut self, j: usize, v: &ComplexVector) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Kronecker product; block (i, j) of the result equals a[i,j] * b.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let z = a[(i, j)];
            if z.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = z * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// orthonormal eigenvector columns with deterministically fixed phases.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn eigenvector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k)
    }

    /// V diag(lambda) V*, for reconstruction checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut lam = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            lam[(k, k)] = Complex64::new(self.eigenvalues[k], 0.0);
        }
        &(&self.eigenvectors * &lam) * &self.eigenvectors.adjoint()
    }
}

/// Multiply the vector by a unit phase so its first component of modulus
/// above the threshold becomes real positive. Pins the free phase of
/// eigenvectors and keeps repeated runs bit-identical.
fn fix_phase(v: &mut [Complex64]) {
    let pivot = v.iter().find(|z| z.norm() > 1e-8);
    if let Some(&z) = pivot {
        let phase = z / z.norm();
        let corr = phase.conj();
        for entry in v.iter_mut() {
            *entry *= corr;
        }
    }
}

/// Cyclic Jacobi eigendecomposition for Hermitian matrices.
///
/// Checks hermiticity up front (`NotHermitian`), then annihilates
/// off-diagonal entries in row-cyclic order with complex rotations until the
/// off-diagonal Frobenius mass falls below machine precision relative to the
/// input scale.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenSystem, Error> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eig needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if !m.is_hermitian(STRUCTURAL_TOL) {
        return Err(Error::NotHermitian);
    }
    let n = m.rows;
    if n == 0 {
        return Ok(EigenSystem {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }

    let mut a = m.clone();
    // Symmetrize away the sub-tolerance asymmetry so updates stay exact.
    for i in 0..n {
        for j in 0..n {
            if i < j {
                let avg = (a[(i, j)] + a[(j, i)].conj()) * Complex64::new(0.5, 0.0);
                a[(i, j)] = avg;
                a[(j, i)] = avg.conj();
            } else if i == j {
                a[(i, j)] = Complex64::new(a[(i, j)].re, 0.0);
            }
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    let stop = f64::EPSILON * scale;

    let mut converged = false;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= stop * 1e-3 {
                    continue;
                }
                let phase = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation R: R[p,p]=c, R[p,q]=s*phase, R[q,p]=-s*conj(phase), R[q,q]=c.
                let rpq = phase.scale(s);
                // Columns: A <- A R.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp.scale(c) - akq * rpq.conj();
                    a[(k, q)] = akp * rpq + akq.scale(c);
                }
                // Rows: A <- R* A.
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk.scale(c) - rpq * aqk;
                    a[(q, k)] = rpq.conj() * apk + aqk.scale(c);
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // Accumulate V <- V R.
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp.scale(c) - vkq * rpq.conj();
                    v[(k, q)] = vkp * rpq + vkq.scale(c);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence);
    }

    // Stable ascending sort, then pin each eigenvector's phase.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(a[(src, src)].re);
        let mut col: Vec<Complex64> = (0..n).map(|i| v[(i, src)]).collect();
        fix_phase(&mut col);
        for i in 0..n {
            eigenvectors[(i, dst)] = col[i];
        }
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Two-pass modified Gram-Schmidt step: orthogonalize `v` against the first
/// `count` columns of `basis`. Returns the remaining norm.
pub(crate) fn orthogonalize_against(
    basis: &ComplexMatrix,
    count: usize,
    v: &mut ComplexVector,
) -> f64 {
    for _pass in 0..2 {
        for j in 0..count {
            let col = basis.column(j);
            let coef = col.inner(v);
            for i in 0..v.len() {
                v[i] -= coef * col[i];
            }
        }
    }
    v.norm()
}

/// Singular value decomposition m = U diag(s) V* with s descending and
/// r = min(rows, cols) columns in U and V.
///
/// Eigendecomposes the Gram matrix of the smaller side, recovers the other
/// factor's columns by applying m, and re-orthonormalizes them; columns lost
/// to (near-)zero singular values are completed from the standard basis.
pub fn svd(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    if m.rows < m.cols {
        let (v, s, u) = svd(&m.adjoint());
        return (u, s, v);
    }
    let (n, r) = (m.rows, m.cols);
    let gram = &m.adjoint() * m;
    let eig = eig_hermitian(&gram).expect("Gram matrix is Hermitian by construction");

    // The Gram eigenvectors give the right-singular directions accurately,
    // but square roots of Gram eigenvalues carry a sqrt(eps) noise floor
    // near zero. Recomputing each value as ||m v|| avoids it, then a stable
    // descending sort absorbs any near-tie reordering that introduces.
    let mut items: Vec<(f64, ComplexVector, ComplexVector)> = Vec::with_capacity(r);
    for k in (0..r).rev() {
        let v = eig.eigenvector(k);
        let mv = m.apply(&v);
        items.push((mv.norm(), v, mv));
    }
    items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut s = Vec::with_capacity(r);
    let mut vmat = ComplexMatrix::zeros(r, r);
    for (k, (sigma, v, _)) in items.iter().enumerate() {
        s.push(*sigma);
        vmat.set_column(k, v);
    }
    let smax = s.first().copied().unwrap_or(0.0);
    let cutoff = smax * 1e-13;

    let mut umat = ComplexMatrix::zeros(n, r);
    for k in 0..r {
        let mut u = if s[k] > cutoff && s[k] > 0.0 {
            items[k].2.scaled(Complex64::new(1.0 / s[k], 0.0))
        } else {
            ComplexVector::zeros(n)
        };
        let mut norm = orthogonalize_against(&umat, k, &mut u);
        if norm < 0.5 {
            // Deficient column: complete deterministically from the standard basis.
            for t in 0..n {
                u = ComplexVector::basis(n, t);
                norm = orthogonalize_against(&umat, k, &mut u);
                if norm > 0.5 {
                    break;
                }
            }
        }
        assert!(norm > 0.0, "failed to complete an orthonormal basis");
        umat.set_column(k, &u.scaled(Complex64::new(1.0 / norm, 0.0)));
    }
    (umat, s, vmat)
}

/// Operator on a tensor product of two spaces, stored as one
/// (dim1*dim2)-square matrix. Block (i, j) is indexed by the first factor:
/// entry ((i,k),(j,l)) sits at row i*dim2+k, column j*dim2+l.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    pub dim1: usize,
    pub dim2: usize,
    pub matrix: ComplexMatrix,
}

impl BipartiteOperator {
    pub fn new(dim1: usize, dim2: usize, matrix: ComplexMatrix) -> Self {
        let d = dim1 * dim2;
        assert_eq!(
            (matrix.rows, matrix.cols),
            (d, d),
            "matrix must be square of size dim1*dim2"
        );
        BipartiteOperator { dim1, dim2, matrix }
    }

    pub fn zeros(dim1: usize, dim2: usize) -> Self {
        let d = dim1 * dim2;
        BipartiteOperator {
            dim1,
            dim2,
            matrix: ComplexMatrix::zeros(d, d),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dim1 * self.dim2
    }

    /// Second-factor block at first-factor position (i, j).
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        assert!(i < self.dim1 && j < self.dim1, "block index out of range");
        let m = self.dim2;
        ComplexMatrix::from_fn(m, m, |k, l| self.matrix[(i * m + k, j * m + l)])
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: &ComplexMatrix) {
        assert!(i < self.dim1 && j < self.dim1, "block index out of range");
        assert_eq!((b.rows, b.cols), (self.dim2, self.dim2));
        let m = self.dim2;
        for k in 0..m {
            for l in 0..m {
                self.matrix[(i * m + k, j * m + l)] = b[(k, l)];
            }
        }
    }

    pub fn from_blocks(
        dim1: usize,
        dim2: usize,
        mut f: impl FnMut(usize, usize) -> ComplexMatrix,
    ) -> Self {
        let mut op = Self::zeros(dim1, dim2);
        for i in 0..dim1 {
            for j in 0..dim1 {
                op.set_block(i, j, &f(i, j));
            }
        }
        op
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.is_hermitian(tol)
    }

    /// (x tensor y, M (x tensor y)) as a complex number.
    pub fn product_form(&self, x: &ComplexVector, y: &ComplexVector) -> Complex64 {
        assert_eq!(x.len(), self.dim1);
        assert_eq!(y.len(), self.dim2);
        let xy = x.tensor(y);
        xy.inner(&self.matrix.apply(&xy))
    }
}

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Trace out one factor. Tracing out the second factor leaves a dim1-square
/// matrix and vice versa.
pub fn partial_trace(op: &BipartiteOperator, traced: Factor) -> ComplexMatrix {
    let (n, m) = (op.dim1, op.dim2);
    match traced {
        Factor::Second => ComplexMatrix::from_fn(n, n, |i, j| {
            (0..m).map(|k| op.matrix[(i * m + k, j * m + k)]).sum()
        }),
        Factor::First => ComplexMatrix::from_fn(m, m, |k, l| {
            (0..n).map(|i| op.matrix[(i * m + k, i * m + l)]).sum()
        }),
    }
}

/// Partial transpose on the second factor: block (i, j) of the result is the
/// transpose of block (i, j) of the input.
pub fn partial_transpose(op: &BipartiteOperator) -> BipartiteOperator {
    BipartiteOperator::from_blocks(op.dim1, op.dim2, |i, j| op.block(i, j).transpose())
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let gram = &m.adjoint() * m;
    gram.max_abs_diff(&ComplexMatrix::identity(m.rows)) <= tol
}

/// Conjugate by a local unitary pair: (u tensor v) op (u tensor v)*.
pub fn local_conjugate(
    op: &BipartiteOperator,
    u: &ComplexMatrix,
    v: &ComplexMatrix,
) -> Result<BipartiteOperator, Error> {
    if u.rows != op.dim1 || v.rows != op.dim2 {
        return Err(Error::DimensionMismatch(format!(
            "local conjugation needs {}x{} and {}x{} unitaries",
            op.dim1, op.dim1, op.dim2, op.dim2
        )));
    }
    if !is_unitary(u, STRUCTURAL_TOL) || !is_unitary(v, STRUCTURAL_TOL) {
        return Err(Error::NotUnitary);
    }
    let w = kron(u, v);
    let conj = &(&w * &op.matrix) * &w.adjoint();
    Ok(BipartiteOperator::new(op.dim1, op.dim2, conj))
}

/// Haar-distributed random unitary: modified Gram-Schmidt applied to a
/// complex Gaussian matrix. The implicit R factor has a positive diagonal,
/// which is exactly the normalization that makes the distribution Haar.
pub fn random_unitary(n: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    use rand_distr::StandardNormal;
    loop {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mut u = ComplexMatrix::zeros(n, n);
        let mut ok = true;
        for k in 0..n {
            let mut col = g.column(k);
            let norm = orthogonalize_against(&u, k, &mut col);
            if norm < 1e-8 {
                ok = false;
                break;
            }
            u.set_column(k, &col.scaled(Complex64::new(1.0 / norm, 0.0)));
        }
        if ok {
            return u;
        }
    }
}
