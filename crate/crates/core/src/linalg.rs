//! Dense complex matrix primitives and group-membership diagnostics.
//!
//! The three matrix groups of the transport problem are characterised by
//! their defining forms:
//!
//! * conjugate symplectic `Sp(2n)`: `M* J M = J` with `J = [[0, 1], [-1, 0]]`,
//! * pseudo-unitary `U(s,s)`: `M* G M = G` with `G = diag(1, -1)`,
//! * unitary `U(n)`: `M* M = 1`.
//!
//! The Cayley matrix conjugates the first onto the second.

use std::fmt;

use nalgebra::linalg::Schur;
use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::{real, Error, Real, Result};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cre<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `exp(i * phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// The form `J_n = [[0, 1], [-1, 0]]` of size `2n`.
pub fn symplectic_form<T: Real>(n: usize) -> CMatrix<T> {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = cre(T::one());
        j[(n + i, i)] = cre(-T::one());
    }
    j
}

/// The signature form `G_s = diag(1_s, -1_s)`.
pub fn signature_form<T: Real>(s: usize) -> CMatrix<T> {
    let mut g = CMatrix::zeros(2 * s, 2 * s);
    for i in 0..s {
        g[(i, i)] = cre(T::one());
        g[(s + i, s + i)] = cre(-T::one());
    }
    g
}

/// Both group forms for one half-dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupForms<T: Real> {
    pub j: CMatrix<T>,
    pub g: CMatrix<T>,
}

impl<T: Real> GroupForms<T> {
    pub fn new(n: usize) -> Self {
        Self {
            j: symplectic_form(n),
            g: signature_form(n),
        }
    }
}

/// Intended group of a matrix. The payload is the half-dimension for
/// `Symplectic` and `PseudoUnitary` and the full dimension for `Unitary`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Structure {
    Symplectic(usize),
    PseudoUnitary(usize),
    Unitary(usize),
    General,
}

impl Structure {
    /// Required number of rows (= columns), if any.
    pub fn dim(&self) -> Option<usize> {
        match *self {
            Structure::Symplectic(n) | Structure::PseudoUnitary(n) => Some(2 * n),
            Structure::Unitary(n) => Some(n),
            Structure::General => None,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Structure::Symplectic(n) => write!(f, "Sp({})", 2 * n),
            Structure::PseudoUnitary(s) => write!(f, "U({s},{s})"),
            Structure::Unitary(n) => write!(f, "U({n})"),
            Structure::General => write!(f, "general"),
        }
    }
}

fn check_square<T: Real>(m: &CMatrix<T>, expected: Option<usize>) -> Result<()> {
    let ok = m.is_square() && expected.map_or(true, |n| m.nrows() == n);
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: match expected {
                Some(n) => format!("{n}x{n}"),
                None => "square".into(),
            },
            found: format!("{}x{}", m.nrows(), m.ncols()),
        })
    }
}

/// Frobenius deviation of `m` from the defining identity of `structure`.
pub fn structure_residual<T: Real>(m: &CMatrix<T>, structure: Structure) -> Result<T> {
    check_square(m, structure.dim())?;
    let ma = m.adjoint();
    let r = match structure {
        Structure::Symplectic(n) => {
            let j = symplectic_form::<T>(n);
            (&ma * &j * m - j).norm()
        }
        Structure::PseudoUnitary(s) => {
            let g = signature_form::<T>(s);
            (&ma * &g * m - g).norm()
        }
        Structure::Unitary(n) => (&ma * m - CMatrix::identity(n, n)).norm(),
        Structure::General => T::zero(),
    };
    Ok(r)
}

/// A matrix tagged with the group it is meant to belong to, together with
/// the residual measured when it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMatrix<T: Real> {
    matrix: CMatrix<T>,
    structure: Structure,
    residual: T,
}

impl<T: Real> StructuredMatrix<T> {
    /// Tags `matrix` and records its residual without enforcing a bound.
    pub fn measured(matrix: CMatrix<T>, structure: Structure) -> Result<Self> {
        if !is_finite(&matrix) {
            return Err(Error::NonFinite("structured matrix"));
        }
        let residual = structure_residual(&matrix, structure)?;
        Ok(Self {
            matrix,
            structure,
            residual,
        })
    }

    /// Tags `matrix`, failing if its residual exceeds `tol * max(1, |M|_F^2)`.
    pub fn checked(matrix: CMatrix<T>, structure: Structure, tol: T) -> Result<Self> {
        let out = Self::measured(matrix, structure)?;
        let bound = tol * out.scale();
        if out.residual > bound {
            return Err(Error::StructureViolation {
                structure: structure.to_string(),
                residual: out.residual.to_f64().unwrap_or(f64::NAN),
                tolerance: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(out)
    }

    pub fn general(matrix: CMatrix<T>) -> Self {
        Self {
            matrix,
            structure: Structure::General,
            residual: T::zero(),
        }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn residual(&self) -> T {
        self.residual
    }

    /// `max(1, |M|_F^2)`, the natural size of the residual for this matrix.
    pub fn scale(&self) -> T {
        let n = self.matrix.norm();
        (n * n).max(T::one())
    }

    /// Residual divided by [`Self::scale`].
    pub fn relative_residual(&self) -> T {
        self.residual / self.scale()
    }
}

/// Relative anti-Hermitian part `|H - H*|_F / |H|_F` (0 for the zero matrix).
pub fn hermitian_deviation<T: Real>(h: &CMatrix<T>) -> T {
    let norm = h.norm();
    if norm == T::zero() {
        return T::zero();
    }
    (h - h.adjoint()).norm() / norm
}

/// Eigenvalues in ascending order with a unitary matrix of eigenvectors as
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen<T: Real> {
    pub eigenvalues: Vec<T>,
    pub basis: CMatrix<T>,
}

/// Diagonalises a Hermitian matrix.
///
/// Eigenvector phases are fixed so that the pivot entry of each vector is
/// real and positive. Inside a cluster of (numerically) degenerate
/// eigenvalues the basis is rebuilt from the cluster projector by a pivoted
/// Gram-Schmidt pass over the canonical coordinates, so it depends only on
/// the eigenspace and not on what the underlying solver returned.
pub fn hermitian_eig<T: Real>(h: &CMatrix<T>, tol: T) -> Result<HermitianEigen<T>> {
    check_square(h, None)?;
    let deviation = hermitian_deviation(h);
    if deviation > tol {
        return Err(Error::NotHermitian {
            deviation: deviation.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            eigenvalues: vec![],
            basis: CMatrix::zeros(0, 0),
        });
    }
    let sym = (h + h.adjoint()) * cre(real::<T>(0.5));
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("NaN eigenvalue")
            .then(a.cmp(&b))
    });
    let values: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let spread = values
        .iter()
        .fold(T::one(), |acc, v| acc.max(v.abs()));
    let cluster_tol = real::<T>(1e-10) * spread;

    let mut basis = CMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= cluster_tol {
            end += 1;
        }
        let mut v = CMatrix::zeros(n, end - start);
        for (j, &idx) in order[start..end].iter().enumerate() {
            v.set_column(j, &eig.eigenvectors.column(idx));
        }
        let canon = canonical_subspace_basis(&v);
        for j in 0..canon.ncols() {
            basis.set_column(start + j, &canon.column(j));
        }
        start = end;
    }
    Ok(HermitianEigen {
        eigenvalues: values,
        basis,
    })
}

/// Orthonormal basis of the column span of `v` (assumed orthonormal),
/// determined by the span alone.
fn canonical_subspace_basis<T: Real>(v: &CMatrix<T>) -> CMatrix<T> {
    let (n, k) = v.shape();
    let mut work = v * v.adjoint();
    let mut out = CMatrix::zeros(n, k);
    let tie = real::<T>(1.0 - 1e-8);
    for col in 0..k {
        let norms: Vec<T> = (0..n).map(|j| work.column(j).norm()).collect();
        let max = norms.iter().fold(T::zero(), |a, &b| a.max(b));
        let pivot = norms
            .iter()
            .position(|&x| x >= max * tie)
            .expect("empty projector");
        let mut x: CVector<T> = work.column(pivot).into_owned();
        for prev in 0..col {
            let p = out.column(prev);
            let overlap = p.dotc(&x);
            x -= p * overlap;
        }
        let norm = x.norm();
        x /= cre(norm);
        let phase = x[pivot];
        let modulus = phase.modulus();
        if modulus > T::zero() {
            x *= phase.conj() / cre(modulus);
        }
        let proj = x.adjoint() * &work;
        work -= &x * proj;
        out.set_column(col, &x);
    }
    out
}

/// The Cayley matrix `(1/sqrt 2) [[1, i], [1, -i]]` of size `2s`.
pub fn cayley<T: Real>(s: usize) -> CMatrix<T> {
    let h = real::<T>(0.5).sqrt();
    let mut c = CMatrix::zeros(2 * s, 2 * s);
    for i in 0..s {
        c[(i, i)] = cre(h);
        c[(i, s + i)] = cplx(T::zero(), h);
        c[(s + i, i)] = cre(h);
        c[(s + i, s + i)] = cplx(T::zero(), -h);
    }
    c
}

/// Thin singular value decomposition `A = U diag(sigma) V*`, with `sigma`
/// descending. For an `m x n` input `U` is `m x k` and `V*` is `k x n`, where
/// `k = min(m, n)`; both have orthonormal rows/columns even where `sigma`
/// vanishes.
#[derive(Debug, Clone)]
pub struct Svd<T: Real> {
    pub u: CMatrix<T>,
    pub sigma: Vec<T>,
    pub v_adj: CMatrix<T>,
}

/// One-sided Jacobi SVD.
///
/// nalgebra's bidiagonalisation route loses accuracy on some complex inputs
/// with clustered or repeated singular values; Jacobi rotations keep every
/// singular value accurate to a few ulps of `sigma_max`.
pub fn svd<T: Real>(a: &CMatrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v_adj.adjoint(),
            sigma: t.sigma,
            v_adj: t.u.adjoint(),
        };
    }
    let mut w = a.clone();
    let mut v = CMatrix::<T>::identity(n, n);
    let eps = T::default_epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let g = w.column(p).dotc(&w.column(q));
                let gm = g.modulus();
                if gm == T::zero() || gm <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate column q onto a real overlap, then apply a real rotation.
                let phase = g.conj() / cre(gm);
                let zeta = (beta - alpha) / (real::<T>(2.0) * gm);
                let sign = if zeta < T::zero() { -T::one() } else { T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp * cre(c) - xq * cre(s);
                        mat[(i, q)] = xp * cre(s) + xq * cre(c);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("NaN singular value").then(x.cmp(&y)));
    let sigma: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut filled = vec![false; n];
    let floor = sigma.first().copied().unwrap_or_else(T::zero) * eps * real::<T>(n as f64);
    for (k, &j) in order.iter().enumerate() {
        vs.set_column(k, &v.column(j));
        if norms[j] > floor {
            let mut x: CVector<T> = w.column(j) / cre(norms[j]);
            for prev in 0..k {
                if filled[prev] {
                    let overlap = u.column(prev).dotc(&x);
                    x -= u.column(prev) * overlap;
                }
            }
            let r = x.norm();
            if r > real::<T>(0.5) {
                u.set_column(k, &(x / cre(r)));
                filled[k] = true;
            }
        }
    }
    complete_columns(&mut u, &filled);
    Svd {
        u,
        sigma,
        v_adj: vs.adjoint(),
    }
}

/// Fills the columns of `u` not marked in `filled` with unit vectors
/// orthogonal to the rest: each is the projected standard basis vector with
/// the largest residual.
fn complete_columns<T: Real>(u: &mut CMatrix<T>, filled: &[bool]) {
    let m = u.nrows();
    let mut done: Vec<usize> = (0..filled.len()).filter(|&k| filled[k]).collect();
    for k in 0..filled.len() {
        if filled[k] {
            continue;
        }
        let mut best: Option<(T, CVector<T>)> = None;
        for e in 0..m {
            let mut x = CVector::<T>::zeros(m);
            x[e] = cre(T::one());
            for _pass in 0..2 {
                for &d in &done {
                    let overlap = u.column(d).dotc(&x);
                    x -= u.column(d) * overlap;
                }
            }
            let r = x.norm();
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, x));
            }
        }
        let (r, x) = best.expect("non-empty basis");
        u.set_column(k, &(x / cre(r)));
        done.push(k);
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    svd(a).sigma
}

/// `sigma_min(A)`; the largest representable value for an empty matrix.
pub fn smallest_singular_value<T: Real>(a: &CMatrix<T>) -> T {
    singular_values(a)
        .last()
        .copied()
        .unwrap_or_else(|| T::max_value().expect("bounded scalar"))
}

/// Spectral norm.
pub fn spectral_norm<T: Real>(a: &CMatrix<T>) -> T {
    singular_values(a).first().copied().unwrap_or_else(T::zero)
}

/// Eigenvalues of a general square matrix (diagonal of its complex Schur form).
pub fn eigenvalues<T: Real>(m: &CMatrix<T>) -> Vec<Complex<T>> {
    if m.nrows() == 0 {
        return vec![];
    }
    let (_, t) = Schur::new(m.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Option<CMatrix<T>> {
    a.clone().lu().solve(b)
}

pub fn block<T: Real>(m: &CMatrix<T>, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix<T> {
    m.view((r0, c0), (nr, nc)).into_owned()
}

pub fn block_diag<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn diagonal<T: Real>(entries: &[Complex<T>]) -> CMatrix<T> {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

pub fn is_finite<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).modulus()))
}

/// `m^p` by repeated squaring.
pub fn matrix_power<T: Real>(m: &CMatrix<T>, mut p: usize) -> CMatrix<T> {
    let n = m.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut base = m.clone();
    while p > 0 {
        if p & 1 == 1 {
            result = &result * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Inverse of a conjugate-symplectic matrix, `-J M* J`.
pub fn symplectic_inverse<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let n = m.nrows() / 2;
    let j = symplectic_form::<T>(n);
    -(&j * m.adjoint() * &j)
}
