//! The scatterer padded with `m` cable sites on each side and placed in the
//! ideal lead, and the limit of its normalised scattering matrices.

use crate::config::Tolerances;
use crate::linalg::{cayley, cis, cplx, cre, diagonal, spectral_norm, structure_residual, CMatrix, Structure};
use crate::model::{ChannelData, StripModel};
use crate::reduction::reduce_with_channels;
use crate::scattering::{
    scattering_from_reduced, star_product, transfer_to_scattering, ScatteringMatrix,
};
use crate::transfer::{block_transfer, free_transfer, normal_form_basis, site_transfer, NormalFormBasis, TransferMatrix};
use crate::{real, Error, Real, Result};

fn check_width<T: Real>(model: &StripModel<T>, channels: &ChannelData<T>) -> Result<()> {
    if model.width() == channels.width() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: format!("width {}", channels.width()),
            found: format!("width {}", model.width()),
        })
    }
}

/// `T(m) = T0^m T_{0,L} T0^m`.
pub fn embedded_transfer<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    m: usize,
) -> Result<TransferMatrix<T>> {
    check_width(model, channels)?;
    let inner = block_transfer(model.scatterer(), channels.energy)?;
    if m == 0 {
        return Ok(inner);
    }
    let cable = block_transfer(&vec![model.cable().clone(); m], channels.energy)?;
    cable.then(&inner)?.then(&cable)
}

/// `C_W M_I^-1 T M_I C_W*`, the S-transfer matrix of `T` relative to the
/// ideal lead.
pub fn ideal_lead_transfer<T: Real>(t: &CMatrix<T>, basis: &NormalFormBasis<T>) -> CMatrix<T> {
    let w = basis.channels.width();
    let c = cayley::<T>(w);
    &c * &basis.m_i_inv * t * &basis.m_i * c.adjoint()
}

/// `S_I(m)` from the S-transfer matrix of the whole padded block.
pub fn embedded_scattering<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    m: usize,
    tol: &Tolerances<T>,
) -> Result<ScatteringMatrix<T>> {
    let basis = normal_form_basis(channels)?;
    let t = embedded_transfer(model, channels, m)?;
    let tt = ideal_lead_transfer(t.matrix(), &basis);
    transfer_to_scattering(&tt, channels.energy, model.length() + 2 * m, tol)
}

/// Ideal-lead scattering matrices of single sites, combined by star products.
struct Composer<T: Real> {
    cable: ScatteringMatrix<T>,
    scatterer: ScatteringMatrix<T>,
}

impl<T: Real> Composer<T> {
    fn new(model: &StripModel<T>, channels: &ChannelData<T>, tol: &Tolerances<T>) -> Result<Self> {
        check_width(model, channels)?;
        let basis = normal_form_basis(channels)?;
        let site = |v: &CMatrix<T>| -> Result<ScatteringMatrix<T>> {
            let t = site_transfer(v, channels.energy);
            transfer_to_scattering(&ideal_lead_transfer(t.matrix(), &basis), channels.energy, 1, tol)
        };
        let cable = site(model.cable())?;
        let mut sites = model.scatterer().iter();
        let mut scatterer = site(sites.next().expect("model has at least one site"))?;
        for v in sites {
            scatterer = star_product(&scatterer, &site(v)?)?;
        }
        Ok(Self { cable, scatterer })
    }

    fn padded(&self, pad: &ScatteringMatrix<T>) -> Result<ScatteringMatrix<T>> {
        star_product(&star_product(pad, &self.scatterer)?, pad)
    }
}

/// Transparent scattering matrix of zero length on `n` channels.
fn empty_piece<T: Real>(n: usize, energy: T) -> ScatteringMatrix<T> {
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = cre(T::one());
        m[(n + i, i)] = cre(T::one());
    }
    ScatteringMatrix::new(m, energy, 0).expect("permutation matrix is unitary")
}

/// `S_I(m)` as the star product of single-site ideal-lead scattering
/// matrices. Every factor is unitary, so the result does not suffer from
/// the `e^{2 gamma m}` growth of `T(m)`.
pub fn embedded_scattering_composed<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    m: usize,
    tol: &Tolerances<T>,
) -> Result<ScatteringMatrix<T>> {
    let comp = Composer::new(model, channels, tol)?;
    let mut pad = empty_piece(channels.width(), channels.energy);
    for _ in 0..m {
        pad = star_product(&pad, &comp.cable)?;
    }
    comp.padded(&pad)
}

/// `D = diag(e^{-ik}, u, e^{-ik}, u)`.
pub fn phase_normalizer<T: Real>(channels: &ChannelData<T>) -> CMatrix<T> {
    let h = channels.hyperbolic_count();
    let ell: Vec<_> = channels.k.iter().map(|&k| cis(-k)).collect();
    let hyp: Vec<_> = (0..h).map(|i| cre(channels.sign(i))).collect();
    let d: Vec<_> = ell.iter().chain(hyp.iter()).chain(ell.iter()).chain(hyp.iter()).copied().collect();
    diagonal(&d)
}

/// `e^{i theta} = (sinh gamma + i u) / cosh gamma`, one entry per hyperbolic
/// channel.
pub fn theta_matrix<T: Real>(channels: &ChannelData<T>) -> CMatrix<T> {
    let d: Vec<_> = (0..channels.hyperbolic_count())
        .map(|i| {
            let g = channels.gamma[i];
            cplx(g.sinh(), channels.sign(i)) / cre(g.cosh())
        })
        .collect();
    diagonal(&d)
}

/// `[[R, 0, T', 0], [0, -e^{i theta}, 0, 0], [T, 0, R', 0], [0, 0, 0, e^{i theta}]]`.
pub fn limit_target<T: Real>(s_e: &CMatrix<T>, theta: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !s_e.is_square() || s_e.nrows() % 2 != 0 || !theta.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "2s x 2s scattering matrix and square theta".into(),
            found: format!("{}x{} and {}x{}", s_e.nrows(), s_e.ncols(), theta.nrows(), theta.ncols()),
        });
    }
    let s = s_e.nrows() / 2;
    let h = theta.nrows();
    let w = s + h;
    let mut out = CMatrix::zeros(2 * w, 2 * w);
    let place = [0, w];
    for (bi, &r0) in place.iter().enumerate() {
        for (bj, &c0) in place.iter().enumerate() {
            let src = s_e.view((bi * s, bj * s), (s, s));
            out.view_mut((r0, c0), (s, s)).copy_from(&src);
        }
    }
    let neg = -theta;
    out.view_mut((s, s), (h, h)).copy_from(&neg);
    out.view_mut((w + s, w + s), (h, h)).copy_from(theta);
    Ok(out)
}

/// The `2s x 2s` elliptic part `O X O*` of a `2W x 2W` matrix.
pub fn elliptic_part<T: Real>(x: &CMatrix<T>, s: usize) -> CMatrix<T> {
    let w = x.nrows() / 2;
    let idx: Vec<usize> = (0..s).chain(w..w + s).collect();
    CMatrix::from_fn(2 * s, 2 * s, |i, j| x[(idx[i], idx[j])])
}

/// How `S_I(m)` is evaluated in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepRoute {
    /// Star products of single-site matrices.
    #[default]
    Composed,
    /// Polar factorisation of `C_W M_I^-1 T(m) M_I C_W*`; truncated once
    /// `|T(m)|` exceeds the overflow limit.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<T> {
    pub m_max: usize,
    pub route: SweepRoute,
    /// Stop once the residual drops below this value.
    pub early_stop: Option<T>,
    /// Spectral-norm limit on `T(m)` for the direct route.
    pub overflow_limit: T,
}

impl<T: Real> SweepOptions<T> {
    pub fn new(m_max: usize) -> Self {
        Self {
            m_max,
            route: SweepRoute::Composed,
            early_stop: None,
            overflow_limit: real(crate::transfer::CONDITIONING_LIMIT),
        }
    }
}

/// Normalised ideal-lead scattering matrices `D^m S_I(m) D^m` for
/// `m = 0, 1, ...` and their distance to the limit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSweep<T: Real> {
    pub m_values: Vec<usize>,
    pub normalized: Vec<CMatrix<T>>,
    pub target: CMatrix<T>,
    /// The scattering matrix of the scatterer itself.
    pub s_e: CMatrix<T>,
    /// `|D^m S_I(m) D^m - target|_F`.
    pub residuals: Vec<T>,
    /// `|S_I(m)* S_I(m) - 1|_F`.
    pub unitarity_residuals: Vec<T>,
    /// `|O D^m S_I(m) D^m O* - S^E|_F`.
    pub elliptic_residuals: Vec<T>,
    pub gamma_min: Option<T>,
    /// First index with residual below 1/2.
    pub burn_in: Option<usize>,
    /// First `m` skipped by the overflow guard, if any.
    pub truncated_at: Option<usize>,
    pub s: usize,
}

impl<T: Real> EmbeddingSweep<T> {
    /// Least-squares slope of `ln residual` against `m` over the points from
    /// the burn-in on whose residual exceeds `floor`.
    pub fn fitted_slope(&self, floor: T) -> Option<T> {
        let start = self.burn_in?;
        let pts: Vec<(T, T)> = self
            .m_values
            .iter()
            .zip(&self.residuals)
            .skip(start)
            .filter(|(_, &r)| r > floor)
            .map(|(&m, &r)| (real::<T>(m as f64), r.ln()))
            .collect();
        log_linear_slope(&pts)
    }
}

/// Slope of the least-squares line through `points`; `None` for fewer than
/// two distinct abscissae.
pub fn log_linear_slope<T: Real>(points: &[(T, T)]) -> Option<T> {
    if points.len() < 2 {
        return None;
    }
    let n = real::<T>(points.len() as f64);
    let mx = points.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = points.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let sxx = points.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = points.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    if sxx <= T::zero() {
        None
    } else {
        Some(sxy / sxx)
    }
}

pub fn convergence_sweep<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    options: &SweepOptions<T>,
    tol: &Tolerances<T>,
) -> Result<EmbeddingSweep<T>> {
    check_width(model, channels)?;
    let s = channels.s;
    let w = channels.width();
    let s_e = if s == 0 {
        CMatrix::zeros(0, 0)
    } else {
        let red = reduce_with_channels(model, channels, tol)?;
        scattering_from_reduced(&red, model.length(), tol)?.matrix().clone()
    };
    let target = limit_target(&s_e, &theta_matrix(channels))?;
    let d = phase_normalizer(channels);

    let mut out = EmbeddingSweep {
        m_values: vec![],
        normalized: vec![],
        target,
        s_e,
        residuals: vec![],
        unitarity_residuals: vec![],
        elliptic_residuals: vec![],
        gamma_min: channels.gamma_min(),
        burn_in: None,
        truncated_at: None,
        s,
    };

    let composer = match options.route {
        SweepRoute::Composed => Some(Composer::new(model, channels, tol)?),
        SweepRoute::Direct => None,
    };
    let basis = normal_form_basis(channels)?;
    let inner = block_transfer(model.scatterer(), channels.energy)?;
    let t0 = free_transfer(channels);
    let mut pad_s = empty_piece(w, channels.energy);
    let mut pad_t = CMatrix::<T>::identity(2 * w, 2 * w);
    let mut d_m = CMatrix::<T>::identity(2 * w, 2 * w);

    for m in 0..=options.m_max {
        if m > 0 {
            d_m = &d_m * &d;
            match &composer {
                Some(c) => pad_s = star_product(&pad_s, &c.cable)?,
                None => pad_t = t0.matrix() * &pad_t,
            }
        }
        let s_i = match &composer {
            Some(c) => c.padded(&pad_s)?,
            None => {
                let t_m = &pad_t * inner.matrix() * &pad_t;
                let norm = spectral_norm(&t_m);
                if norm > options.overflow_limit {
                    out.truncated_at = Some(m);
                    break;
                }
                let tt = ideal_lead_transfer(&t_m, &basis);
                transfer_to_scattering(&tt, channels.energy, model.length() + 2 * m, tol)?
            }
        };
        let normalized = &d_m * s_i.matrix() * &d_m;
        let residual = (&normalized - &out.target).norm();
        let ell = (elliptic_part(&normalized, s) - &out.s_e).norm();
        out.m_values.push(m);
        out.unitarity_residuals
            .push(structure_residual(s_i.matrix(), Structure::Unitary(2 * w))?);
        out.normalized.push(normalized);
        out.residuals.push(residual);
        out.elliptic_residuals.push(ell);
        if out.burn_in.is_none() && residual < real(0.5) {
            out.burn_in = Some(out.residuals.len() - 1);
        }
        if let Some(stop) = options.early_stop {
            if residual < stop {
                break;
            }
        }
    }
    Ok(out)
}
