//! Two constructions of the scattering data that avoid the polar route:
//! the Lippmann-Schwinger equation on the scatterer sites, and explicit
//! propagation of a scattering state through the site recursion.

use num_complex::Complex;

use crate::config::Tolerances;
use crate::linalg::{cis, cplx, cre, singular_values, solve, CMatrix, CVector};
use crate::model::{ChannelData, StripModel};
use crate::reduction::reduced_transfer;
use crate::transfer::{block_transfer, conjugated_transfer, normal_form_basis};
use crate::{real, Error, Real, Result};

use super::{transfer_to_scattering_direct, ScatteringMatrix};

fn check_width<T: Real>(model: &StripModel<T>, channels: &ChannelData<T>) -> Result<()> {
    if model.width() != channels.width() {
        return Err(Error::DimensionMismatch {
            expected: format!("width {}", channels.width()),
            found: format!("width {}", model.width()),
        });
    }
    if channels.s == 0 {
        return Err(Error::NoElasticChannel {
            energy: channels.energy.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// `xi_alpha^d / (xi_alpha - 1/xi_alpha)` for the outgoing free Green kernel.
fn kernel_weights<T: Real>(channels: &ChannelData<T>, max_d: usize) -> Vec<Vec<Complex<T>>> {
    let w = channels.width();
    let s = channels.s;
    (0..=max_d)
        .map(|d| {
            let dd = real::<T>(d as f64);
            (0..w)
                .map(|a| {
                    if a < s {
                        let k = channels.k[a];
                        cis(k * dd) / cplx(T::zero(), real::<T>(2.0) * k.sin())
                    } else {
                        let i = a - s;
                        let g = channels.gamma[i];
                        let sign = if d % 2 == 1 { channels.sign(i) } else { T::one() };
                        // xi - 1/xi = u (e^-g - e^g) = -2 u sinh g.
                        let denom = -real::<T>(2.0) * channels.sign(i) * g.sinh();
                        cre(sign * (-g * dd).exp() / denom)
                    }
                })
                .collect()
        })
        .collect()
}

/// Scattering matrix from `Psi = Psi_in + G0 (V - W) Psi` on the scatterer.
///
/// Fails with `SingularSystem` when `1 - G0 (V - W)` has relative smallest
/// singular value at most `tol.singular`.
pub fn lippmann_schwinger_scattering<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    tol: &Tolerances<T>,
) -> Result<ScatteringMatrix<T>> {
    check_width(model, channels)?;
    let w = model.width();
    let l = model.length();
    let s = channels.s;
    let u = &channels.basis;
    let dv = model.perturbations();
    let weights = kernel_weights(channels, l);
    let greens: Vec<CMatrix<T>> = weights
        .iter()
        .map(|wd| {
            let d = CMatrix::from_diagonal(&CVector::from_column_slice(wd));
            u * d * u.adjoint()
        })
        .collect();

    let n = l * w;
    let mut k = CMatrix::<T>::identity(n, n);
    for row in 0..l {
        for col in 0..l {
            let g = &greens[row.abs_diff(col)];
            let term = g * &dv[col];
            let mut view = k.view_mut((row * w, col * w), (w, w));
            view -= term;
        }
    }
    let sv = singular_values(&k);
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if !(lo > tol.singular * hi) {
        return Err(Error::SingularSystem {
            energy: channels.energy.to_f64().unwrap_or(f64::NAN),
            sigma_min: (lo / hi).to_f64().unwrap_or(f64::NAN),
        });
    }

    let two = real::<T>(2.0);
    let lf = real::<T>(l as f64);
    let norm: Vec<T> = channels.k.iter().map(|k| T::one() / (two * k.sin()).sqrt()).collect();
    let mut rhs = CMatrix::<T>::zeros(n, 2 * s);
    for site in 0..l {
        let nf = real::<T>(site as f64);
        for a in 0..s {
            let ka = channels.k[a];
            let phi = u.column(a);
            let inc = cis(ka * nf) * cre(norm[a]);
            let back = cis(ka * (lf - nf)) * cre(norm[a]);
            for i in 0..w {
                rhs[(site * w + i, a)] = phi[i] * inc;
                rhs[(site * w + i, s + a)] = phi[i] * back;
            }
        }
    }
    let psi = solve(&k, &rhs).ok_or(Error::SingularSystem {
        energy: channels.energy.to_f64().unwrap_or(f64::NAN),
        sigma_min: 0.0,
    })?;

    let mut out = CMatrix::<T>::zeros(2 * s, 2 * s);
    for col in 0..2 * s {
        for a in 0..s {
            let ka = channels.k[a];
            let phi_adj = u.column(a).adjoint();
            let mut fwd = cre(T::zero());
            let mut bwd = cre(T::zero());
            for site in 0..l {
                let psi_m = psi.view((site * w, col), (w, 1));
                let proj = (&phi_adj * &dv[site] * psi_m)[(0, 0)];
                let nf = real::<T>(site as f64);
                fwd += cis(-ka * nf) * proj;
                bwd += cis(ka * nf) * proj;
            }
            // sqrt(2 sin k) / (2 i sin k)
            let pref = cplx(T::zero(), -(T::one() / (two * ka.sin()).sqrt()));
            let a_plus = if col == a { T::one() } else { T::zero() };
            let b_minus = if col == s + a { T::one() } else { T::zero() };
            let phase = cis(ka * lf);
            out[(a, col)] = phase * cre(b_minus) + pref * bwd;
            out[(s + a, col)] = phase * (cre(a_plus) + pref * fwd);
        }
    }
    ScatteringMatrix::new(out, channels.energy, l)
}

/// Amplitudes of a scattering state obtained by explicit propagation.
///
/// `b_hat_minus` is the coefficient of the decaying hyperbolic mode on the
/// right in the plain-wave expansion; `b_hat_plus` is the coefficient of the
/// growing mode there and vanishes up to round-off for a true scattering
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult<T: Real> {
    pub b_plus: CVector<T>,
    pub b_minus: CVector<T>,
    pub a_hat_plus: CVector<T>,
    pub b_hat_minus: CVector<T>,
    pub b_hat_plus: CVector<T>,
}

struct Propagator<'a, T: Real> {
    model: &'a StripModel<T>,
    channels: &'a ChannelData<T>,
    a_e: CMatrix<T>,
    te_po: CMatrix<T>,
}

impl<'a, T: Real> Propagator<'a, T> {
    fn new(model: &'a StripModel<T>, channels: &'a ChannelData<T>, tol: &Tolerances<T>) -> Result<Self> {
        check_width(model, channels)?;
        let basis = normal_form_basis(channels)?;
        let t = block_transfer(model.scatterer(), channels.energy)?;
        let te = conjugated_transfer(&t, &basis)?.into_matrix();
        // Validates invertibility of A_E with the usual threshold.
        let red = reduced_transfer(&te, channels, tol.sigma)?;
        let w = channels.width();
        let s = channels.s;
        let outer: Vec<usize> = (0..s).chain(w..w + s).collect();
        let te_po = CMatrix::from_fn(w - s, 2 * s, |i, j| te[(s + i, outer[j])]);
        Ok(Self {
            model,
            channels,
            a_e: red.a_e,
            te_po,
        })
    }

    fn run(&self, a_plus: &CVector<T>, a_minus: &CVector<T>) -> Result<PropagationResult<T>> {
        let ch = self.channels;
        let s = ch.s;
        let w = ch.width();
        let h = w - s;
        if a_plus.len() != s || a_minus.len() != s {
            return Err(Error::DimensionMismatch {
                expected: format!("{s}-vectors"),
                found: format!("{} and {}", a_plus.len(), a_minus.len()),
            });
        }
        let i_unit = cplx(T::zero(), T::one());
        let two = real::<T>(2.0);
        let mut xy = CMatrix::<T>::zeros(2 * s, 1);
        for a in 0..s {
            xy[a] = a_plus[a] + a_minus[a];
            xy[s + a] = i_unit * (a_minus[a] - a_plus[a]);
        }
        let a_hat_plus = if h > 0 {
            let v = &self.te_po * &xy;
            let sol = solve(&self.a_e, &v).ok_or(Error::SingularAE {
                energy: ch.energy.to_f64().unwrap_or(f64::NAN),
                sigma_min: 0.0,
                threshold: 0.0,
            })?;
            CVector::from_iterator(h, sol.iter().map(|z| -*z / cre(two)))
        } else {
            CVector::zeros(0)
        };

        // Boundary data (Psi_0, Psi_{-1}) in channel coordinates.
        let mut p0 = CVector::<T>::zeros(w);
        let mut pm1 = CVector::<T>::zeros(w);
        for a in 0..s {
            let k = ch.k[a];
            let nrm = cre(T::one() / (two * k.sin()).sqrt());
            p0[a] = (a_plus[a] + a_minus[a]) * nrm;
            pm1[a] = (a_plus[a] * cis(-k) + a_minus[a] * cis(k)) * nrm;
        }
        for i in 0..h {
            let g = ch.gamma[i];
            let nrm = T::one() / g.sinh().sqrt();
            p0[s + i] = a_hat_plus[i] * cre(ch.sign(i) * nrm);
            pm1[s + i] = a_hat_plus[i] * cre((-g).exp() * nrm);
        }
        let u = &ch.basis;
        let mut prev = u * pm1;
        let mut cur = u * p0;
        for v in self.model.scatterer() {
            let next = v * &cur - &cur * cre(ch.energy) - &prev;
            prev = cur;
            cur = next;
        }
        let pl = u.adjoint() * cur;
        let plm1 = u.adjoint() * prev;

        let mut b_plus = CVector::<T>::zeros(s);
        let mut b_minus = CVector::<T>::zeros(s);
        for a in 0..s {
            let k = ch.k[a];
            let r = (two * k.sin()).sqrt();
            let p = pl[a] * cre(r);
            let y = plm1[a] * cre(r);
            let bm = (y - p * cis(-k)) / cplx(T::zero(), two * k.sin());
            b_minus[a] = bm;
            b_plus[a] = p - bm;
        }
        let l = self.model.length();
        let mut b_hat_plus = CVector::<T>::zeros(h);
        let mut b_hat_minus = CVector::<T>::zeros(h);
        for i in 0..h {
            let g = ch.gamma[i];
            let uu = ch.sign(i);
            let ul = if l % 2 == 1 { uu } else { T::one() };
            // u^L [[u, 1], [e^-g, u e^g]] (b+, b-) = sqrt(sinh g) (Psi_L, Psi_{L-1}).
            let rs = g.sinh().sqrt() * ul;
            let p = pl[s + i] * cre(rs);
            let y = plm1[s + i] * cre(rs);
            let det = two * g.sinh();
            b_hat_plus[i] = (p * cre(uu * g.exp()) - y) / cre(det);
            b_hat_minus[i] = (y * cre(uu) - p * cre((-g).exp())) / cre(det);
        }
        Ok(PropagationResult {
            b_plus,
            b_minus,
            a_hat_plus,
            b_hat_minus,
            b_hat_plus,
        })
    }
}

/// Propagates the scattering state with left amplitudes `(a+, a-)` through
/// the scatterer and reads off the right amplitudes.
pub fn propagation_oracle<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    a_plus: &CVector<T>,
    a_minus: &CVector<T>,
    tol: &Tolerances<T>,
) -> Result<PropagationResult<T>> {
    Propagator::new(model, channels, tol)?.run(a_plus, a_minus)
}

/// S-transfer matrix assembled column by column from [`propagation_oracle`],
/// and the scattering matrix obtained from it by the direct linear solve.
pub fn propagated_transfer<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    tol: &Tolerances<T>,
) -> Result<(CMatrix<T>, ScatteringMatrix<T>)> {
    let prop = Propagator::new(model, channels, tol)?;
    let s = channels.s;
    let mut t = CMatrix::<T>::zeros(2 * s, 2 * s);
    for j in 0..2 * s {
        let mut ap = CVector::<T>::zeros(s);
        let mut am = CVector::<T>::zeros(s);
        if j < s {
            ap[j] = cre(T::one());
        } else {
            am[j - s] = cre(T::one());
        }
        let r = prop.run(&ap, &am)?;
        for a in 0..s {
            t[(a, j)] = r.b_plus[a];
            t[(s + a, j)] = r.b_minus[a];
        }
    }
    let sm = transfer_to_scattering_direct(&t, channels.energy, model.length())?;
    Ok((t, sm))
}
