//! Random matrix ensembles and seeded model generators.
//!
//! Normalisation shared by all Gaussian ensembles here: diagonal entries have
//! variance 1, off-diagonal entries have `E|h_ij|^2 = 1/2`.

use nalgebra::ComplexField;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{cplx, cre, diagonal, CMatrix};
use crate::model::StripModel;
use crate::{real, Real};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-distributed unitary matrix (QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal divided out).
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix<T> {
    let h = 0.5f64.sqrt();
    let z = CMatrix::<T>::from_fn(n, n, |_, _| {
        cplx(real(normal(rng) * h), real(normal(rng) * h))
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let m = d.modulus();
        if m > T::zero() {
            let phase = d / cre(m);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// GUE matrix: real diagonal with variance 1, complex off-diagonal with
/// `E|h|^2 = 1/2`.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix<T> {
    let mut h = CMatrix::<T>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = cre(real(normal(rng)));
        for j in (i + 1)..n {
            let z = cplx(real(normal(rng) * 0.5), real(normal(rng) * 0.5));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// GOE matrix: real symmetric, diagonal variance 1, off-diagonal variance 1/2.
pub fn random_real_symmetric<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix<T> {
    let mut h = CMatrix::<T>::zeros(n, n);
    let off = 0.5f64.sqrt();
    for i in 0..n {
        h[(i, i)] = cre(real(normal(rng)));
        for j in (i + 1)..n {
            let x = cre(real(normal(rng) * off));
            h[(i, j)] = x;
            h[(j, i)] = x;
        }
    }
    h
}

/// Hermitian matrix `U diag(eigenvalues) U*` with Haar `U`.
pub fn hermitian_with_spectrum<T: Real, R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[T]) -> CMatrix<T> {
    let u = haar_unitary::<T, R>(rng, eigenvalues.len());
    let d = diagonal(&eigenvalues.iter().map(|&x| cre(x)).collect::<Vec<_>>());
    let h = &u * d * u.adjoint();
    (&h + h.adjoint()) * cre(real::<T>(0.5))
}

/// Channel layout for a generated cable at a fixed energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    pub energy: f64,
    /// Wave numbers of the elliptic channels, each in `(0, pi)`.
    pub k: Vec<f64>,
    /// `(gamma, u)` for each hyperbolic channel.
    pub hyperbolic: Vec<(f64, i8)>,
}

impl ChannelPlan {
    pub fn width(&self) -> usize {
        self.k.len() + self.hyperbolic.len()
    }

    /// Cable eigenvalues realising this layout:
    /// `lambda = E + 2 cos k` and `lambda = E + 2 u cosh gamma`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.k.iter().map(|k| self.energy + 2.0 * k.cos()).collect();
        out.extend(
            self.hyperbolic
                .iter()
                .map(|&(g, u)| self.energy + 2.0 * f64::from(u) * g.cosh()),
        );
        out
    }

    /// Draws a layout with `s` elliptic and `h` hyperbolic channels. Elliptic
    /// wave numbers stay `margin` away from 0 and pi; hyperbolic rates are
    /// uniform in `gamma_range`.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        energy: f64,
        s: usize,
        h: usize,
        margin: f64,
        gamma_range: (f64, f64),
    ) -> Self {
        let pi = std::f64::consts::PI;
        let k = (0..s).map(|_| rng.random_range(margin..pi - margin)).collect();
        let hyperbolic = (0..h)
            .map(|_| {
                let g = if gamma_range.1 > gamma_range.0 {
                    rng.random_range(gamma_range.0..gamma_range.1)
                } else {
                    gamma_range.0
                };
                let u = if rng.random_bool(0.5) { 1 } else { -1 };
                (g, u)
            })
            .collect();
        Self { energy, k, hyperbolic }
    }

    /// Cable with Haar eigenbasis and the planned spectrum.
    pub fn cable<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix<T> {
        let eig: Vec<T> = self.eigenvalues().into_iter().map(real).collect();
        hermitian_with_spectrum(rng, &eig)
    }
}

/// Scatterer `V_n = W + strength * G_n` with independent GUE `G_n`.
pub fn gue_scatterer<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    cable: &CMatrix<T>,
    length: usize,
    strength: f64,
) -> StripModel<T> {
    let w = cable.nrows();
    let sites = (0..length)
        .map(|_| cable + random_hermitian::<T, R>(rng, w) * cre(real::<T>(strength)))
        .collect();
    StripModel::new(cable.clone(), sites).expect("generated model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{structure_residual, Structure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..7 {
            let u = haar_unitary::<f64, _>(&mut rng, n);
            assert!(structure_residual(&u, Structure::Unitary(n)).unwrap() < 1e-13);
        }
    }

    #[test]
    fn plan_eigenvalues_classify_as_planned() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plan = ChannelPlan::sample(&mut rng, 0.3, 2, 2, 0.1, (0.4, 0.9));
        for (i, lam) in plan.eigenvalues().iter().enumerate() {
            let d = (lam - 0.3).abs();
            if i < 2 {
                assert!(d < 2.0);
            } else {
                assert!(d > 2.0);
            }
        }
    }
}
