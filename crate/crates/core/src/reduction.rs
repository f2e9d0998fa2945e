//! Elimination of the hyperbolic channels from a conjugated transfer matrix.

use rayon::prelude::*;

use crate::config::Tolerances;
use crate::linalg::{cayley, cplx, cre, smallest_singular_value, solve, CMatrix, Structure, StructuredMatrix};
use crate::model::{classify_channels, ChannelData, StripModel};
use crate::scattering::{scattering_to_transfer, star_product, transfer_to_scattering_direct, ScatteringMatrix};
use crate::transfer::{block_transfer, conjugated_transfer, normal_form_basis, site_transfer, NormalFormBasis};
use crate::{real, Error, Real, Result};

/// Near-singular results are those with `sigma_min(A_E)` below this multiple
/// of the threshold.
pub const NEAR_SINGULAR_FACTOR: f64 = 10.0;

/// Row/column indices of the elliptic (`O`) and hyperbolic position (`P`)
/// blocks of a `2W` matrix with `s` elliptic channels.
fn partition(w: usize, s: usize) -> (Vec<usize>, Vec<usize>) {
    let outer = (0..s).chain(w..w + s).collect();
    let inner = (s..w).collect();
    (outer, inner)
}

fn select<T: Real>(m: &CMatrix<T>, rows: &[usize], cols: &[usize]) -> CMatrix<T> {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn check_even<T: Real>(te: &CMatrix<T>, s: usize) -> Result<usize> {
    let n = te.nrows();
    if !te.is_square() || n % 2 != 0 || s > n / 2 {
        return Err(Error::DimensionMismatch {
            expected: format!("2Wx2W with W >= {s}"),
            found: format!("{}x{}", te.nrows(), te.ncols()),
        });
    }
    Ok(n / 2)
}

/// The `(W - s) x (W - s)` block of `T^E` acting from the incoming to the
/// outgoing hyperbolic position amplitudes.
pub fn hyperbolic_block<T: Real>(te: &CMatrix<T>, s: usize) -> Result<CMatrix<T>> {
    let w = check_even(te, s)?;
    let (_, inner) = partition(w, s);
    Ok(select(te, &inner, &inner))
}

/// Reduced transfer matrix on the elliptic channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTransfer<T: Real> {
    /// `T_hat` in `Sp(2s)`.
    pub t_hat: StructuredMatrix<T>,
    /// `C_s T_hat C_s*` in `U(s, s)`.
    pub t_tilde: StructuredMatrix<T>,
    pub a_e: CMatrix<T>,
    /// `sigma_min(A_E)`; the largest finite scalar when there are no
    /// hyperbolic channels.
    pub sigma_min_ae: T,
    /// Absolute invertibility threshold that was applied to `sigma_min_ae`.
    pub threshold: T,
    /// Set when `sigma_min_ae` is within [`NEAR_SINGULAR_FACTOR`] of the threshold.
    pub near_singular: bool,
    pub channels: ChannelData<T>,
}

/// Schur complement `T_OO - T_OP A_E^-1 T_PO` of the hyperbolic block.
///
/// `sigma_tol` is relative to `|T^E|_F`.
pub fn reduced_transfer<T: Real>(
    te: &CMatrix<T>,
    channels: &ChannelData<T>,
    sigma_tol: T,
) -> Result<ReducedTransfer<T>> {
    let s = channels.s;
    let w = check_even(te, s)?;
    if w != channels.width() {
        return Err(Error::DimensionMismatch {
            expected: format!("width {}", channels.width()),
            found: format!("width {w}"),
        });
    }
    let (outer, inner) = partition(w, s);
    let a_e = select(te, &inner, &inner);
    let threshold = sigma_tol * te.norm();
    let (t_hat, sigma_min_ae) = if inner.is_empty() {
        (te.clone(), smallest_singular_value(&a_e))
    } else {
        let sigma = smallest_singular_value(&a_e);
        if !(sigma > threshold) {
            return Err(Error::SingularAE {
                energy: channels.energy.to_f64().unwrap_or(f64::NAN),
                sigma_min: sigma.to_f64().unwrap_or(f64::NAN),
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
            });
        }
        let t_oo = select(te, &outer, &outer);
        let t_op = select(te, &outer, &inner);
        let t_po = select(te, &inner, &outer);
        let x = solve(&a_e, &t_po).ok_or(Error::SingularAE {
            energy: channels.energy.to_f64().unwrap_or(f64::NAN),
            sigma_min: sigma.to_f64().unwrap_or(f64::NAN),
            threshold: threshold.to_f64().unwrap_or(f64::NAN),
        })?;
        (t_oo - t_op * x, sigma)
    };
    let c = cayley::<T>(s);
    let t_tilde = &c * &t_hat * c.adjoint();
    let near_singular = !inner.is_empty() && sigma_min_ae <= threshold * real(NEAR_SINGULAR_FACTOR);
    Ok(ReducedTransfer {
        t_hat: StructuredMatrix::measured(t_hat, Structure::Symplectic(s))?,
        t_tilde: StructuredMatrix::measured(t_tilde, Structure::PseudoUnitary(s))?,
        a_e,
        sigma_min_ae,
        threshold,
        near_singular,
        channels: channels.clone(),
    })
}

/// Classification, block transfer, normal form and reduction at one energy.
pub fn reduce_model<T: Real>(model: &StripModel<T>, energy: T, tol: &Tolerances<T>) -> Result<ReducedTransfer<T>> {
    let channels = classify_channels(model.cable(), energy, tol.parabolic)?;
    reduce_with_channels(model, &channels, tol)
}

/// Like [`reduce_model`] with the channels already classified.
///
/// With both elliptic and hyperbolic channels present, `T_hat` is obtained
/// from star products of per-site scattering matrices instead of the Schur
/// complement, which loses accuracy once `|T^E|` is large. `A_E` and the
/// singularity test always come from `T^E`.
pub fn reduce_with_channels<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    tol: &Tolerances<T>,
) -> Result<ReducedTransfer<T>> {
    let basis = normal_form_basis(channels)?;
    let t = block_transfer(model.scatterer(), channels.energy)?;
    let te = conjugated_transfer(&t, &basis)?;
    let mut red = reduced_transfer(te.matrix(), channels, tol.sigma)?;
    let s = channels.s;
    if s > 0 && s < channels.width() {
        if let Some(t_tilde) = composed_reduction(model, channels, &basis, tol.inv) {
            let c = cayley::<T>(s);
            red.t_hat = StructuredMatrix::measured(c.adjoint() * &t_tilde * &c, Structure::Symplectic(s))?;
            red.t_tilde = StructuredMatrix::measured(t_tilde, Structure::PseudoUnitary(s))?;
        }
    }
    Ok(red)
}

/// Unitary change of coordinates from the normal-form basis to amplitudes
/// ordered as right movers `(a+, d)` followed by left movers `(a-, g)`,
/// where `g` grows and `d` decays to the right.
fn mover_basis<T: Real>(w: usize, s: usize) -> CMatrix<T> {
    let h = real::<T>(0.5).sqrt();
    let mut k = CMatrix::zeros(2 * w, 2 * w);
    for i in 0..s {
        k[(i, i)] = cre(h);
        k[(i, w + i)] = cplx(T::zero(), h);
        k[(w + i, i)] = cre(h);
        k[(w + i, w + i)] = cplx(T::zero(), -h);
    }
    for j in s..w {
        k[(j, w + j)] = cre(T::one());
        k[(w + j, j)] = cre(T::one());
    }
    k
}

/// `T~` from the elliptic part of the generalised scattering matrix of the
/// whole scatterer; `None` if a site or the result cannot be converted.
fn composed_reduction<T: Real>(
    model: &StripModel<T>,
    channels: &ChannelData<T>,
    basis: &NormalFormBasis<T>,
    inv_tol: T,
) -> Option<CMatrix<T>> {
    let (w, s, energy) = (channels.width(), channels.s, channels.energy);
    let k = mover_basis::<T>(w, s);
    let mut total: Option<ScatteringMatrix<T>> = None;
    for v in model.scatterer() {
        let te = conjugated_transfer(&site_transfer(v, energy), basis).ok()?;
        let x = &k * te.matrix() * k.adjoint();
        let site = transfer_to_scattering_direct(&x, energy, 1).ok()?;
        total = Some(match total {
            None => site,
            Some(acc) => star_product(&acc, &site).ok()?,
        });
    }
    let full = total?;
    let idx: Vec<usize> = (0..s).chain(w..w + s).collect();
    let se = CMatrix::from_fn(2 * s, 2 * s, |i, j| full.matrix()[(idx[i], idx[j])]);
    let se = ScatteringMatrix::new(se, energy, model.length()).ok()?;
    let t_tilde = scattering_to_transfer(&se, inv_tol).ok()?.into_matrix();
    t_tilde.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(t_tilde)
}

/// Outcome of the invertibility test at one grid energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Regular,
    NearSingular,
    Flagged,
    /// A band edge; nothing was computed.
    Parabolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint<T> {
    pub energy: T,
    pub s: usize,
    /// `None` for parabolic points and when there is no hyperbolic channel.
    pub sigma_min: Option<T>,
    pub status: ScanStatus,
}

/// `sigma_min(A_E)` over an energy grid, sorted by energy.
pub fn singular_energy_scan<T: Real>(
    model: &StripModel<T>,
    grid: &[T],
    tol: &Tolerances<T>,
) -> Result<Vec<ScanPoint<T>>> {
    let points: Vec<Result<ScanPoint<T>>> = grid
        .par_iter()
        .map(|&energy| scan_point(model, energy, tol))
        .collect();
    let mut out = points.into_iter().collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

fn scan_point<T: Real>(model: &StripModel<T>, energy: T, tol: &Tolerances<T>) -> Result<ScanPoint<T>> {
    let channels = match classify_channels(model.cable(), energy, tol.parabolic) {
        Ok(c) => c,
        Err(Error::ParabolicChannel { .. }) => {
            return Ok(ScanPoint {
                energy,
                s: 0,
                sigma_min: None,
                status: ScanStatus::Parabolic,
            })
        }
        Err(e) => return Err(e),
    };
    let s = channels.s;
    let basis = normal_form_basis(&channels)?;
    let t = block_transfer(model.scatterer(), energy)?;
    let te = conjugated_transfer(&t, &basis)?;
    if s == channels.width() {
        return Ok(ScanPoint {
            energy,
            s,
            sigma_min: None,
            status: ScanStatus::Regular,
        });
    }
    let a_e = hyperbolic_block(te.matrix(), s)?;
    let sigma = smallest_singular_value(&a_e);
    let threshold = tol.sigma * te.matrix().norm();
    let status = if !(sigma > threshold) {
        ScanStatus::Flagged
    } else if sigma <= threshold * real(NEAR_SINGULAR_FACTOR) {
        ScanStatus::NearSingular
    } else {
        ScanStatus::Regular
    };
    Ok(ScanPoint {
        energy,
        s,
        sigma_min: Some(sigma),
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cre, cplx, diagonal, max_abs_diff, structure_residual};
    use crate::random::{gue_scatterer, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> CMatrix<f64> {
        diagonal(&v.iter().map(|&x| cre(x)).collect::<Vec<_>>())
    }

    fn te_for(model: &StripModel<f64>, energy: f64) -> (ChannelData<f64>, CMatrix<f64>) {
        let ch = classify_channels(model.cable(), energy, 1e-8).unwrap();
        let nf = normal_form_basis(&ch).unwrap();
        let t = block_transfer(model.scatterer(), energy).unwrap();
        (ch.clone(), conjugated_transfer(&t, &nf).unwrap().into_matrix())
    }

    #[test]
    fn clean_width_two_cube() {
        let model = StripModel::clean(diag(&[0.0, 4.0]), 3).unwrap();
        let (ch, te) = te_for(&model, 0.0);
        let a = hyperbolic_block(&te, ch.s).unwrap();
        assert_eq!(a.shape(), (1, 1));
        assert!((a[(0, 0)].re - (2.0 + 3f64.sqrt()).powi(3)).abs() < 1e-10);
        assert!((a[(0, 0)].re - 51.9808).abs() < 1e-4);
        let red = reduced_transfer(&te, &ch, 1e-8).unwrap();
        let expected = diagonal(&[cplx(0.0, -1.0), cplx(0.0, 1.0)]);
        assert!(max_abs_diff(red.t_tilde.matrix(), &expected) < 1e-10);
        assert!((red.sigma_min_ae - 51.98076211353316).abs() < 1e-9);
        assert!(!red.near_singular);
    }

    #[test]
    fn one_clean_site_gives_u_e_gamma() {
        for lam in [4.0, -4.5] {
            let model = StripModel::clean(diag(&[0.0, lam]), 1).unwrap();
            let (ch, te) = te_for(&model, 0.0);
            let a = hyperbolic_block(&te, ch.s).unwrap();
            let expected = ch.sign(0) * ch.gamma[0].exp();
            assert!((a[(0, 0)] - cre(expected)).norm() < 1e-12);
        }
    }

    #[test]
    fn all_elliptic_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cable = diag(&[0.1, -0.4, 0.5]);
        let model = gue_scatterer(&mut rng, &cable, 5, 0.6);
        let (ch, te) = te_for(&model, 0.0);
        assert_eq!(ch.s, 3);
        assert_eq!(hyperbolic_block(&te, 3).unwrap().shape(), (0, 0));
        let red = reduced_transfer(&te, &ch, 1e-8).unwrap();
        assert_eq!(red.t_hat.matrix(), &te);
    }

    #[test]
    fn reduced_relation_kills_growing_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cable = diag(&[0.0, 0.7, 3.2, -3.5]);
        let model = gue_scatterer(&mut rng, &cable, 4, 0.5);
        let (ch, te) = te_for(&model, 0.1);
        let s = ch.s;
        let red = reduced_transfer(&te, &ch, 1e-8).unwrap();
        let (outer, inner) = partition(4, s);
        let x = CMatrix::<f64>::from_fn(2 * s, 1, |i, _| cplx(0.3 + i as f64, -0.2 * i as f64));
        let v = -solve(&red.a_e, &(select(&te, &inner, &outer) * &x)).unwrap();
        let mut full = CMatrix::<f64>::zeros(8, 1);
        for (i, &o) in outer.iter().enumerate() {
            full[o] = x[i];
        }
        for (i, &p) in inner.iter().enumerate() {
            full[p] = v[i];
        }
        let out = &te * full;
        let scale = te.norm();
        for &p in &inner {
            assert!(out[p].norm() < 1e-10 * scale);
        }
        let outer_out = CMatrix::from_fn(2 * s, 1, |i, _| out[outer[i]]);
        assert!(max_abs_diff(&outer_out, &(red.t_hat.matrix() * &x)) < 1e-10 * scale);
    }

    #[test]
    fn reduced_matrices_stay_in_their_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut seen = 0;
        while seen < 30 {
            let cable: CMatrix<f64> = random_hermitian(&mut rng, 4) * cre(1.7);
            let model = gue_scatterer(&mut rng, &cable, 6, 0.4);
            let Ok(red) = reduce_model(&model, 0.2, &Tolerances::default()) else { continue };
            seen += 1;
            let s = red.channels.s;
            let th = red.t_hat.matrix();
            let tt = red.t_tilde.matrix();
            let sc = |m: &CMatrix<f64>| (m.norm() * m.norm()).max(1.0);
            assert!(structure_residual(th, Structure::Symplectic(s)).unwrap() <= 1e-9 * sc(th));
            assert!(structure_residual(tt, Structure::PseudoUnitary(s)).unwrap() <= 1e-9 * sc(tt));
        }
    }

    #[test]
    fn composed_route_matches_schur_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cable = diag(&[0.0, 0.7, 3.2, -3.5]);
        for length in [1, 3, 6] {
            let model = gue_scatterer(&mut rng, &cable, length, 0.5);
            let (ch, te) = te_for(&model, 0.1);
            let schur = reduced_transfer(&te, &ch, 1e-8).unwrap();
            let red = reduce_with_channels(&model, &ch, &Tolerances::default()).unwrap();
            let scale = schur.t_tilde.matrix().norm();
            assert!(max_abs_diff(red.t_tilde.matrix(), schur.t_tilde.matrix()) < 1e-10 * scale);
            assert!(max_abs_diff(red.t_hat.matrix(), schur.t_hat.matrix()) < 1e-10 * scale);
            assert_eq!(red.sigma_min_ae, schur.sigma_min_ae);
        }
    }

    #[test]
    fn long_scatterer_keeps_group_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cable = diag(&[0.0, 0.3, 2.9, 3.4, -3.3, -4.0]);
        let mut seen = 0;
        while seen < 10 {
            let model = gue_scatterer(&mut rng, &cable, 24, 0.8);
            let Ok(red) = reduce_model(&model, 0.1, &Tolerances::default()) else { continue };
            seen += 1;
            let th = red.t_hat.matrix();
            let scale = (th.norm() * th.norm()).max(1.0);
            assert!(structure_residual(th, Structure::Symplectic(red.channels.s)).unwrap() <= 1e-12 * scale);
        }
    }

    #[test]
    fn singular_block_is_reported() {
        let model = StripModel::clean(diag(&[0.0, 4.0]), 3).unwrap();
        let (ch, mut te) = te_for(&model, 0.0);
        te[(1, 1)] = cre(0.0);
        let err = reduced_transfer(&te, &ch, 1e-8).unwrap_err();
        assert!(matches!(err, Error::SingularAE { .. }));
    }

    #[test]
    fn scan_behaviour() {
        let model = StripModel::clean(diag(&[0.0, 4.0]), 5).unwrap();
        let tol = Tolerances::default();
        assert!(singular_energy_scan(&model, &[], &tol).unwrap().is_empty());
        let grid: Vec<f64> = (0..41).map(|i| -1.5 + 0.075 * i as f64).collect();
        let mut shuffled = grid.clone();
        shuffled.reverse();
        let scan = singular_energy_scan(&model, &shuffled, &tol).unwrap();
        assert_eq!(scan.iter().map(|p| p.energy).collect::<Vec<_>>(), grid);
        assert!(scan.iter().all(|p| p.status == ScanStatus::Regular));
        let edge = singular_energy_scan(&model, &[2.0], &tol).unwrap();
        assert_eq!(edge[0].status, ScanStatus::Parabolic);
    }
}
