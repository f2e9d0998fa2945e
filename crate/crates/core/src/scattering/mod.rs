//! Scattering matrices and their relation to S-transfer matrices.
//!
//! Block convention: `S = [[R, T'], [T, R']]` maps incoming amplitudes
//! `(a+, b-)` to outgoing `(a-, b+)`, and the S-transfer matrix maps the left
//! amplitudes `(a+, a-)` to the right amplitudes `(b+, b-)`. Right amplitudes
//! are measured relative to the free phase accumulated over the scatterer
//! length `L`: a clean cable of length `L` gives `T = T' = diag(e^{ikL})`.

mod oracle;
mod polar;

use rayon::prelude::*;

pub use oracle::{
    lippmann_schwinger_scattering, propagated_transfer, propagation_oracle, PropagationResult,
};
pub use polar::{polar_factor, polar_factor_with_completion, transmission_eigenvalues, PolarFactors};

use crate::config::Tolerances;
use crate::linalg::{block, singular_values, smallest_singular_value, solve, CMatrix, Structure, StructuredMatrix};
use crate::model::{sample_disorder, sample_seed, DisorderSpec};
use crate::reduction::{reduce_model, reduce_with_channels, ReducedTransfer, ScanStatus};
use crate::{classify_channels, Error, Real, Result, StripModel};

/// A unitary `2s x 2s` scattering matrix at a fixed energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix<T: Real> {
    s: StructuredMatrix<T>,
    energy: T,
    length: usize,
}

impl<T: Real> ScatteringMatrix<T> {
    /// Wraps `matrix`, recording its unitarity residual.
    pub fn new(matrix: CMatrix<T>, energy: T, length: usize) -> Result<Self> {
        let n = matrix.nrows();
        if n % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: "2s x 2s".into(),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self {
            s: StructuredMatrix::measured(matrix, Structure::Unitary(n))?,
            energy,
            length,
        })
    }

    pub fn from_blocks(
        r: &CMatrix<T>,
        t_prime: &CMatrix<T>,
        t: &CMatrix<T>,
        r_prime: &CMatrix<T>,
        energy: T,
        length: usize,
    ) -> Result<Self> {
        let s = r.nrows();
        let mut m = CMatrix::zeros(2 * s, 2 * s);
        m.view_mut((0, 0), (s, s)).copy_from(r);
        m.view_mut((0, s), (s, s)).copy_from(t_prime);
        m.view_mut((s, 0), (s, s)).copy_from(t);
        m.view_mut((s, s), (s, s)).copy_from(r_prime);
        Self::new(m, energy, length)
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.s.matrix()
    }

    pub fn structured(&self) -> &StructuredMatrix<T> {
        &self.s
    }

    /// Number of channels on each side.
    pub fn channels(&self) -> usize {
        self.s.matrix().nrows() / 2
    }

    pub fn energy(&self) -> T {
        self.energy
    }

    /// Scatterer length the phase convention refers to.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn unitarity_residual(&self) -> T {
        self.s.residual()
    }

    fn quarter(&self, r: usize, c: usize) -> CMatrix<T> {
        let s = self.channels();
        block(self.s.matrix(), r * s, c * s, s, s)
    }

    pub fn r(&self) -> CMatrix<T> {
        self.quarter(0, 0)
    }

    pub fn t_prime(&self) -> CMatrix<T> {
        self.quarter(0, 1)
    }

    pub fn t(&self) -> CMatrix<T> {
        self.quarter(1, 0)
    }

    pub fn r_prime(&self) -> CMatrix<T> {
        self.quarter(1, 1)
    }
}

fn split<T: Real>(m: &CMatrix<T>) -> Result<[CMatrix<T>; 4]> {
    let n = m.nrows();
    if !m.is_square() || n % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: "2s x 2s".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let s = n / 2;
    Ok([
        block(m, 0, 0, s, s),
        block(m, 0, s, s, s),
        block(m, s, 0, s, s),
        block(m, s, s, s, s),
    ])
}

fn join<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, c: &CMatrix<T>, d: &CMatrix<T>) -> CMatrix<T> {
    let s = a.nrows();
    let mut m = CMatrix::zeros(2 * s, 2 * s);
    m.view_mut((0, 0), (s, s)).copy_from(a);
    m.view_mut((0, s), (s, s)).copy_from(b);
    m.view_mut((s, 0), (s, s)).copy_from(c);
    m.view_mut((s, s), (s, s)).copy_from(d);
    m
}

/// Scattering matrix of an S-transfer matrix via its polar factorisation.
pub fn transfer_to_scattering<T: Real>(
    t_tilde: &CMatrix<T>,
    energy: T,
    length: usize,
    tol: &Tolerances<T>,
) -> Result<ScatteringMatrix<T>> {
    let factors = polar_factor(t_tilde, tol.structure, tol.completion)?;
    ScatteringMatrix::new(factors.scattering(), energy, length)
}

/// Scattering matrix of `T~ = [[A, B], [C, D]]` by solving the linear
/// relation directly: `S = [[-D^-1 C, D^-1], [A - B D^-1 C, B D^-1]]`.
pub fn transfer_to_scattering_direct<T: Real>(
    t_tilde: &CMatrix<T>,
    energy: T,
    length: usize,
) -> Result<ScatteringMatrix<T>> {
    let [a, b, c, d] = split(t_tilde)?;
    let s = a.nrows();
    let mut rhs = CMatrix::zeros(s, 2 * s);
    rhs.view_mut((0, 0), (s, s)).copy_from(&c);
    rhs.view_mut((0, s), (s, s)).copy_from(&CMatrix::identity(s, s));
    // D* D = 1 + B* B, so D is always invertible in U(s, s).
    let x = solve(&d, &rhs).ok_or(Error::NotPseudoUnitary { residual: f64::NAN })?;
    let dinv_c = x.columns(0, s).into_owned();
    let dinv = x.columns(s, s).into_owned();
    let r = -&dinv_c;
    let t = &a - &b * &dinv_c;
    let r_prime = &b * &dinv;
    ScatteringMatrix::from_blocks(&r, &dinv, &t, &r_prime, energy, length)
}

/// S-transfer matrix of a scattering matrix, when the transmission blocks
/// are invertible.
pub fn scattering_to_transfer<T: Real>(s: &ScatteringMatrix<T>, inv_tol: T) -> Result<StructuredMatrix<T>> {
    let r = s.r();
    let t_prime = s.t_prime();
    let t = s.t();
    let r_prime = s.r_prime();
    let sigma = smallest_singular_value(&t).min(smallest_singular_value(&t_prime));
    if !(sigma > inv_tol) {
        return Err(Error::NonInvertibleTransmission {
            sigma_min: sigma.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = s.channels();
    let mut rhs = CMatrix::zeros(n, 2 * n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&r);
    rhs.view_mut((0, n), (n, n)).copy_from(&CMatrix::identity(n, n));
    let x = solve(&t_prime, &rhs).ok_or(Error::NonInvertibleTransmission {
        sigma_min: sigma.to_f64().unwrap_or(f64::NAN),
    })?;
    let tpinv_r = x.columns(0, n).into_owned();
    let tpinv = x.columns(n, n).into_owned();
    let m = join(&(&t - &r_prime * &tpinv_r), &(&r_prime * &tpinv), &(-tpinv_r), &tpinv);
    StructuredMatrix::measured(m, Structure::PseudoUnitary(n))
}

/// `Tr(T* T)`.
pub fn landauer_conductance<T: Real>(s: &ScatteringMatrix<T>) -> T {
    let t = s.t();
    (t.adjoint() * t).trace().re
}

/// Transmission eigenvalues, the squared singular values of `T`, descending.
pub fn transmission_spectrum<T: Real>(s: &ScatteringMatrix<T>) -> Vec<T> {
    singular_values(&s.t()).into_iter().map(|v| v * v).collect()
}

/// Scattering matrix of `first` followed by `second` on the right
/// (Redheffer star product). Both must have the same channel count; the
/// result carries the combined length.
pub fn star_product<T: Real>(first: &ScatteringMatrix<T>, second: &ScatteringMatrix<T>) -> Result<ScatteringMatrix<T>> {
    let n = first.channels();
    if second.channels() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} channels"),
            found: format!("{} channels", second.channels()),
        });
    }
    let one = CMatrix::<T>::identity(n, n);
    let (r1, tp1, t1, rp1) = (first.r(), first.t_prime(), first.t(), first.r_prime());
    let (r2, tp2, t2, rp2) = (second.r(), second.t_prime(), second.t(), second.r_prime());
    let left = &one - &rp1 * &r2;
    let right = &one - &r2 * &rp1;
    let singular = || Error::NonInvertibleTransmission { sigma_min: 0.0 };
    // (1 - R1' R2)^-1 T1 and (1 - R2 R1')^-1 T2'.
    let x_t1 = solve(&left, &t1).ok_or_else(singular)?;
    let y_tp2 = solve(&right, &tp2).ok_or_else(singular)?;
    let r = &r1 + &tp1 * &r2 * &x_t1;
    let t_prime = &tp1 * &y_tp2;
    let t = &t2 * &x_t1;
    let r_prime = &rp2 + &t2 * &rp1 * &y_tp2;
    ScatteringMatrix::from_blocks(
        &r,
        &t_prime,
        &t,
        &r_prime,
        first.energy(),
        first.length() + second.length(),
    )
}

/// Scattering matrix of a model through reduction and polar factorisation.
pub fn scattering_matrix<T: Real>(model: &StripModel<T>, energy: T, tol: &Tolerances<T>) -> Result<ScatteringMatrix<T>> {
    let red = reduce_model(model, energy, tol)?;
    scattering_from_reduced(&red, model.length(), tol)
}

pub fn scattering_from_reduced<T: Real>(
    red: &ReducedTransfer<T>,
    length: usize,
    tol: &Tolerances<T>,
) -> Result<ScatteringMatrix<T>> {
    if red.channels.s == 0 {
        return Err(Error::NoElasticChannel {
            energy: red.channels.energy.to_f64().unwrap_or(f64::NAN),
        });
    }
    transfer_to_scattering(red.t_tilde.matrix(), red.channels.energy, length, tol)
}

/// Landauer conductance of `samples` disorder realisations. Sample `i` uses
/// the seed `sample_seed(seed, i)`, so the result does not depend on thread
/// scheduling.
pub fn conductance_samples<T: Real>(
    cable: &CMatrix<T>,
    spec: &DisorderSpec<T>,
    energy: T,
    samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Vec<Result<T>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let model = sample_disorder(cable, spec, sample_seed(seed, i as u64))?;
            scattering_matrix(&model, energy, tol).map(|s| landauer_conductance(&s))
        })
        .collect()
}

/// One energy of [`conductance_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConductancePoint<T> {
    pub energy: T,
    /// `None` at a band edge.
    pub s: Option<usize>,
    /// `sigma_min(A_E)`; `None` without hyperbolic channels or at a band edge.
    pub sigma_min: Option<T>,
    /// `None` when the scattering matrix could not be formed.
    pub conductance: Option<T>,
    pub status: ScanStatus,
}

fn conductance_point<T: Real>(model: &StripModel<T>, energy: T, tol: &Tolerances<T>) -> Result<ConductancePoint<T>> {
    let mut point = ConductancePoint {
        energy,
        s: None,
        sigma_min: None,
        conductance: None,
        status: ScanStatus::Parabolic,
    };
    let channels = match classify_channels(model.cable(), energy, tol.parabolic) {
        Ok(c) => c,
        Err(Error::ParabolicChannel { .. }) => return Ok(point),
        Err(e) => return Err(e),
    };
    point.s = Some(channels.s);
    let hyperbolic = channels.hyperbolic_count() > 0;
    let red = match reduce_with_channels(model, &channels, tol) {
        Ok(r) => r,
        Err(Error::SingularAE { sigma_min, .. }) => {
            point.sigma_min = T::from_f64(sigma_min);
            point.status = ScanStatus::Flagged;
            return Ok(point);
        }
        Err(e) => return Err(e),
    };
    if hyperbolic {
        point.sigma_min = Some(red.sigma_min_ae);
    }
    point.status = if red.near_singular {
        ScanStatus::NearSingular
    } else {
        ScanStatus::Regular
    };
    if channels.s > 0 {
        let s = scattering_from_reduced(&red, model.length(), tol)?;
        point.conductance = Some(landauer_conductance(&s));
    }
    Ok(point)
}

/// `sigma_min(A_E)` and the Landauer conductance over an energy grid, in
/// grid order. Band edges and singular hyperbolic blocks are reported in
/// the status rather than as errors.
pub fn conductance_scan<T: Real>(model: &StripModel<T>, grid: &[T], tol: &Tolerances<T>) -> Result<Vec<ConductancePoint<T>>> {
    grid.par_iter()
        .map(|&energy| conductance_point(model, energy, tol))
        .collect()
}

/// `S` of a clean cable of length `L`: zero reflection, transmission
/// `diag(e^{ikL})` in both directions.
pub fn clean_scattering<T: Real>(k: &[T], length: usize) -> CMatrix<T> {
    let s = k.len();
    let l = crate::real::<T>(length as f64);
    let mut m = CMatrix::zeros(2 * s, 2 * s);
    for (i, &ki) in k.iter().enumerate() {
        let p = crate::linalg::cis(ki * l);
        m[(i, s + i)] = p;
        m[(s + i, i)] = p;
    }
    m
}
