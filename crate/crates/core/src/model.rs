//! Cable, scatterer and channel classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{cre, diagonal, hermitian_deviation, hermitian_eig, CMatrix};
use crate::random::{random_hermitian, random_real_symmetric};
use crate::{real, Error, Real, Result};

/// Relative Hermiticity tolerance applied to model input matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A cable `W` with a finite scatterer `V_0 .. V_{L-1}` inserted at sites
/// `0 .. L-1`; every other site carries `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripModel<T: Real> {
    cable: CMatrix<T>,
    scatterer: Vec<CMatrix<T>>,
}

fn check_hermitian<T: Real>(m: &CMatrix<T>, what: &str) -> Result<()> {
    let dev = hermitian_deviation(m);
    if dev > real(HERMITIAN_TOL) {
        return Err(Error::InvalidModel(format!(
            "{what} is not Hermitian (relative deviation {:e})",
            dev.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

impl<T: Real> StripModel<T> {
    pub fn new(cable: CMatrix<T>, scatterer: Vec<CMatrix<T>>) -> Result<Self> {
        if !cable.is_square() || cable.nrows() == 0 {
            return Err(Error::InvalidModel(format!(
                "cable must be a non-empty square matrix, got {}x{}",
                cable.nrows(),
                cable.ncols()
            )));
        }
        check_hermitian(&cable, "cable")?;
        if scatterer.is_empty() {
            return Err(Error::InvalidModel("scatterer must have at least one site".into()));
        }
        let w = cable.nrows();
        for (n, v) in scatterer.iter().enumerate() {
            if v.shape() != (w, w) {
                return Err(Error::InvalidModel(format!(
                    "scatterer site {n} is {}x{}, expected {w}x{w}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            check_hermitian(v, &format!("scatterer site {n}"))?;
        }
        Ok(Self { cable, scatterer })
    }

    /// `V_n = W` on `length` sites.
    pub fn clean(cable: CMatrix<T>, length: usize) -> Result<Self> {
        let sites = vec![cable.clone(); length];
        Self::new(cable, sites)
    }

    pub fn width(&self) -> usize {
        self.cable.nrows()
    }

    pub fn length(&self) -> usize {
        self.scatterer.len()
    }

    pub fn cable(&self) -> &CMatrix<T> {
        &self.cable
    }

    pub fn scatterer(&self) -> &[CMatrix<T>] {
        &self.scatterer
    }

    /// `V_n - W` for each scatterer site.
    pub fn perturbations(&self) -> Vec<CMatrix<T>> {
        self.scatterer.iter().map(|v| v - &self.cable).collect()
    }
}

/// Whether a channel propagates at the energy in question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelClass {
    Elliptic,
    Hyperbolic,
}

/// Channel decomposition of a cable at one energy.
///
/// Columns of `basis` are the eigenvectors of the cable with the `s` elliptic
/// channels first. `lambda` follows the same order. For elliptic `alpha`,
/// `E = -2 cos k_alpha + lambda_alpha`; for hyperbolic `alpha`,
/// `E = -2 u_alpha cosh gamma_alpha + lambda_alpha` (indexes of `gamma` and
/// `u` start at the first hyperbolic channel).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelData<T: Real> {
    pub energy: T,
    pub s: usize,
    pub basis: CMatrix<T>,
    pub k: Vec<T>,
    pub gamma: Vec<T>,
    pub u: Vec<i8>,
    pub lambda: Vec<T>,
}

impl<T: Real> ChannelData<T> {
    pub fn width(&self) -> usize {
        self.lambda.len()
    }

    pub fn hyperbolic_count(&self) -> usize {
        self.width() - self.s
    }

    pub fn class(&self, alpha: usize) -> ChannelClass {
        if alpha < self.s {
            ChannelClass::Elliptic
        } else {
            ChannelClass::Hyperbolic
        }
    }

    /// `u` of the `i`-th hyperbolic channel as a scalar.
    pub fn sign(&self, i: usize) -> T {
        if self.u[i] > 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn gamma_min(&self) -> Option<T> {
        self.gamma.iter().copied().reduce(|a, b| a.min(b))
    }

    /// The cable reassembled from the channel data, `U diag(lambda) U*`.
    pub fn cable(&self) -> CMatrix<T> {
        let lam = diagonal(&self.lambda.iter().map(|&x| cre(x)).collect::<Vec<_>>());
        let w = &self.basis * lam * self.basis.adjoint();
        (&w + w.adjoint()) * cre(real::<T>(0.5))
    }
}

/// Splits the channels of `cable` at `energy` into elliptic and hyperbolic
/// ones, elliptic first, each class in ascending eigenvalue order.
pub fn classify_channels<T: Real>(cable: &CMatrix<T>, energy: T, parabolic_tol: T) -> Result<ChannelData<T>> {
    let eig = hermitian_eig(cable, real(HERMITIAN_TOL))?;
    let two = real::<T>(2.0);
    let mut elliptic = Vec::new();
    let mut hyperbolic = Vec::new();
    for (alpha, &lam) in eig.eigenvalues.iter().enumerate() {
        let d = (lam - energy).abs();
        if (d - two).abs() <= parabolic_tol {
            return Err(Error::ParabolicChannel {
                energy: energy.to_f64().unwrap_or(f64::NAN),
                channel: alpha,
                distance: (d - two).abs().to_f64().unwrap_or(f64::NAN),
            });
        }
        if d < two {
            elliptic.push(alpha);
        } else {
            hyperbolic.push(alpha);
        }
    }
    let w = cable.nrows();
    let mut basis = CMatrix::zeros(w, w);
    let mut lambda = Vec::with_capacity(w);
    let mut k = Vec::with_capacity(elliptic.len());
    let mut gamma = Vec::with_capacity(hyperbolic.len());
    let mut u = Vec::with_capacity(hyperbolic.len());
    for (col, &alpha) in elliptic.iter().chain(hyperbolic.iter()).enumerate() {
        basis.set_column(col, &eig.basis.column(alpha));
        lambda.push(eig.eigenvalues[alpha]);
    }
    for &alpha in &elliptic {
        let c = (eig.eigenvalues[alpha] - energy) / two;
        k.push(c.acos());
    }
    for &alpha in &hyperbolic {
        let diff = eig.eigenvalues[alpha] - energy;
        let sign: i8 = if diff > T::zero() { 1 } else { -1 };
        let x = diff.abs() / two;
        gamma.push((x + (x * x - T::one()).sqrt()).ln());
        u.push(sign);
    }
    Ok(ChannelData {
        energy,
        s: elliptic.len(),
        basis,
        k,
        gamma,
        u,
        lambda,
    })
}

/// The ideal lead `W_I = U diag(lambda_1..lambda_s, E..E) U*`: elliptic
/// channels keep their eigenvalue, hyperbolic ones are moved to the band
/// centre so their wave number becomes pi/2.
pub fn ideal_lead_matrix<T: Real>(channels: &ChannelData<T>) -> CMatrix<T> {
    let diag: Vec<_> = (0..channels.width())
        .map(|a| {
            if a < channels.s {
                cre(channels.lambda[a])
            } else {
                cre(channels.energy)
            }
        })
        .collect();
    let w = &channels.basis * diagonal(&diag) * channels.basis.adjoint();
    (&w + w.adjoint()) * cre(real::<T>(0.5))
}

/// Potentials of the scatterer padded with `m` cable sites on each side,
/// together with the ideal lead that surrounds them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPotentials<T: Real> {
    pub sites: Vec<CMatrix<T>>,
    pub lead: CMatrix<T>,
}

pub fn embedded_potentials<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    m: usize,
) -> EmbeddedPotentials<T> {
    let mut sites = Vec::with_capacity(model.length() + 2 * m);
    sites.extend(std::iter::repeat(model.cable().clone()).take(m));
    sites.extend(model.scatterer().iter().cloned());
    sites.extend(std::iter::repeat(model.cable().clone()).take(m));
    EmbeddedPotentials {
        sites,
        lead: ideal_lead_matrix(channels),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisorderKind {
    /// Diagonal with independent uniform `[-1, 1]` entries.
    AndersonDiagonal,
    /// Real symmetric Gaussian, diagonal variance 1, off-diagonal 1/2.
    GaussianOrthogonal,
    /// Hermitian Gaussian, diagonal variance 1, off-diagonal `E|h|^2 = 1/2`.
    GaussianUnitary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec<T> {
    pub kind: DisorderKind,
    pub strength: T,
    pub length: usize,
}

impl<T: Real> DisorderSpec<T> {
    pub fn new(kind: DisorderKind, strength: T, length: usize) -> Result<Self> {
        if !strength.is_finite() || strength < T::zero() {
            return Err(Error::InvalidModel(format!(
                "disorder strength must be finite and non-negative, got {strength}"
            )));
        }
        if length == 0 {
            return Err(Error::InvalidModel("disorder length must be at least 1".into()));
        }
        Ok(Self { kind, strength, length })
    }
}

/// Random generator for site `site` under `seed`. Each site has its own
/// ChaCha stream, so draws do not depend on evaluation order.
pub fn site_rng(seed: u64, site: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(site as u64);
    rng
}

/// Seed for Monte Carlo sample `index` derived from a base seed (splitmix64).
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn draw_perturbation<T: Real, R: Rng>(rng: &mut R, kind: DisorderKind, w: usize) -> CMatrix<T> {
    match kind {
        DisorderKind::AndersonDiagonal => {
            let d: Vec<_> = (0..w)
                .map(|_| cre(real::<T>(rng.random_range(-1.0..=1.0))))
                .collect();
            diagonal(&d)
        }
        DisorderKind::GaussianOrthogonal => random_real_symmetric(rng, w),
        DisorderKind::GaussianUnitary => random_hermitian(rng, w),
    }
}

/// `V_n = W + strength * W_n` with i.i.d. mean-zero `W_n` of the given kind.
pub fn sample_disorder<T: Real>(cable: &CMatrix<T>, spec: &DisorderSpec<T>, seed: u64) -> Result<StripModel<T>> {
    let w = cable.nrows();
    let sites = (0..spec.length)
        .map(|n| {
            let mut rng = site_rng(seed, n);
            let pert: CMatrix<T> = draw_perturbation(&mut rng, spec.kind, w);
            cable + pert * cre(spec.strength)
        })
        .collect();
    StripModel::new(cable.clone(), sites)
}
