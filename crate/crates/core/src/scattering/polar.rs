//! Polar factorisation of pseudo-unitary matrices.

use crate::linalg::{block, block_diag, cre, diagonal, structure_residual, svd, CMatrix, Structure, Svd};
use crate::{Error, Real, Result};

/// `T~ = diag(U_r+, U_r-) [[sqrt Q, sqrt(Q-1)], [sqrt(Q-1), sqrt Q]] diag(U_l+, U_l-)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFactors<T: Real> {
    /// Diagonal of `Q`, descending, every entry `>= 1`.
    pub q: Vec<T>,
    pub u_l_plus: CMatrix<T>,
    pub u_l_minus: CMatrix<T>,
    pub u_r_plus: CMatrix<T>,
    pub u_r_minus: CMatrix<T>,
    /// Number of trailing entries of `Q` equal to 1 within tolerance; the
    /// matching columns of `U_r-` are not fixed by `T~` and were completed.
    pub free: usize,
}

impl<T: Real> PolarFactors<T> {
    pub fn channels(&self) -> usize {
        self.q.len()
    }

    /// `sqrt(Q - 1)` recomputed from `Q`.
    fn excess(&self) -> Vec<T> {
        self.q.iter().map(|&q| (q - T::one()).max(T::zero()).sqrt()).collect()
    }

    /// The S-transfer matrix rebuilt from the factors.
    pub fn transfer(&self) -> CMatrix<T> {
        let s = self.channels();
        let sq: Vec<_> = self.q.iter().map(|&q| cre(q.sqrt())).collect();
        let ex: Vec<_> = self.excess().into_iter().map(cre).collect();
        let mut mid = CMatrix::zeros(2 * s, 2 * s);
        for i in 0..s {
            mid[(i, i)] = sq[i];
            mid[(i, s + i)] = ex[i];
            mid[(s + i, i)] = ex[i];
            mid[(s + i, s + i)] = sq[i];
        }
        block_diag(&self.u_r_plus, &self.u_r_minus) * mid * block_diag(&self.u_l_plus, &self.u_l_minus)
    }

    /// The scattering matrix
    /// `diag(U_l-*, U_r+) [[-sqrt(1-Q^-1), sqrt Q^-1], [sqrt Q^-1, sqrt(1-Q^-1)]] diag(U_l+, U_r-*)`.
    pub fn scattering(&self) -> CMatrix<T> {
        let s = self.channels();
        let mut mid = CMatrix::zeros(2 * s, 2 * s);
        for i in 0..s {
            let q = self.q[i];
            let t = cre(T::one() / q.sqrt());
            // sqrt(1 - 1/q) written without cancellation.
            let r = cre(((q - T::one()).max(T::zero()) / q).sqrt());
            mid[(i, i)] = -r;
            mid[(i, s + i)] = t;
            mid[(s + i, i)] = t;
            mid[(s + i, s + i)] = r;
        }
        block_diag(&self.u_l_minus.adjoint(), &self.u_r_plus) * mid * block_diag(&self.u_l_plus, &self.u_r_minus.adjoint())
    }
}

/// Absolute threshold below which a singular value of the lower-left block
/// counts as zero.
fn completion_threshold<T: Real>(c: &CMatrix<T>, tol: T) -> T {
    tol * c.norm().max(T::one())
}

/// Polar factors with the canonical completion: undetermined columns of
/// `U_r-` are chosen to minimise `|U_r- - 1|_F`.
pub fn polar_factor<T: Real>(t_tilde: &CMatrix<T>, structure_tol: T, completion_tol: T) -> Result<PolarFactors<T>> {
    polar_factor_with_completion(t_tilde, structure_tol, completion_tol, None)
}

/// As [`polar_factor`], then multiplies the undetermined columns of `U_r-`
/// by the unitary `rotation` (size [`PolarFactors::free`]) to obtain another
/// valid factorisation.
pub fn polar_factor_with_completion<T: Real>(
    t_tilde: &CMatrix<T>,
    structure_tol: T,
    completion_tol: T,
    rotation: Option<&CMatrix<T>>,
) -> Result<PolarFactors<T>> {
    let n = t_tilde.nrows();
    if !t_tilde.is_square() || n % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: "2s x 2s".into(),
            found: format!("{}x{}", t_tilde.nrows(), t_tilde.ncols()),
        });
    }
    let s = n / 2;
    let residual = structure_residual(t_tilde, Structure::PseudoUnitary(s))?;
    let scale = (t_tilde.norm() * t_tilde.norm()).max(T::one());
    if !(residual <= structure_tol * scale) {
        return Err(Error::NotPseudoUnitary {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    if s == 0 {
        let e = CMatrix::zeros(0, 0);
        return Ok(PolarFactors {
            q: vec![],
            u_l_plus: e.clone(),
            u_l_minus: e.clone(),
            u_r_plus: e.clone(),
            u_r_minus: e,
            free: 0,
        });
    }
    let a = block(t_tilde, 0, 0, s, s);
    let c = block(t_tilde, s, 0, s, s);
    let d = block(t_tilde, s, s, s, s);

    // C = X Sigma Y*: then A*A = 1 + C*C = Y (1 + Sigma^2) Y*.
    let Svd { u: x, sigma, v_adj: y_adj } = svd(&c);
    let cut = completion_threshold(&c, completion_tol);
    let free = sigma.iter().filter(|&&v| v <= cut).count();
    let determined = s - free;

    let q: Vec<T> = sigma.iter().map(|&v| T::one() + v * v).collect();
    let u_l_plus = y_adj;
    let mut u_r_minus = x;
    if free > 0 {
        canonical_completion(&mut u_r_minus, determined);
        if let Some(z) = rotation {
            if z.shape() != (free, free) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{free}x{free}"),
                    found: format!("{}x{}", z.nrows(), z.ncols()),
                });
            }
            let cols = u_r_minus.columns(determined, free) * z;
            u_r_minus.columns_mut(determined, free).copy_from(&cols);
        }
    }
    let inv_sqrt_q = diagonal(&q.iter().map(|&v| cre(T::one() / v.sqrt())).collect::<Vec<_>>());
    let u_r_plus = &a * u_l_plus.adjoint() * &inv_sqrt_q;
    let u_l_minus = &inv_sqrt_q * u_r_minus.adjoint() * &d;
    Ok(PolarFactors {
        q,
        u_l_plus,
        u_l_minus,
        u_r_plus,
        u_r_minus,
        free,
    })
}

/// Replaces columns `determined..` of the unitary `u` by the orthonormal
/// basis of the same subspace closest to the matching identity columns.
fn canonical_completion<T: Real>(u: &mut CMatrix<T>, determined: usize) {
    let s = u.nrows();
    let free = s - determined;
    let basis = u.columns(determined, free).into_owned();
    // Procrustes: maximise Re tr(Z* B* E) over unitary Z.
    let target = CMatrix::<T>::identity(s, s).columns(determined, free).into_owned();
    let f = svd(&(basis.adjoint() * target));
    let z = f.u * f.v_adj;
    let completed = basis * z;
    u.columns_mut(determined, free).copy_from(&completed);
}

/// Transmission eigenvalues `1 / Q`, i.e. the eigenvalues of `T* T`.
pub fn transmission_eigenvalues<T: Real>(factors: &PolarFactors<T>) -> Vec<T> {
    factors.q.iter().map(|&q| T::one() / q).collect()
}
