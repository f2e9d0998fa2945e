//! Site, block and free transfer matrices and their normal forms.
//!
//! Matrices of size `2W` are partitioned into four blocks of sizes
//! `s, W - s, s, W - s` whenever channel data is involved: elliptic
//! positions, hyperbolic positions, elliptic momenta, hyperbolic momenta.

use crate::linalg::{
    block_diag, cplx, cre, diagonal, singular_values, symplectic_inverse, CMatrix, Structure,
    StructuredMatrix,
};
use crate::model::ChannelData;
use crate::{real, Error, Real, Result};

/// Transfer matrices with a spectral norm above this carry a conditioning
/// warning: entries below `1e-4` relative accuracy cannot be trusted.
pub const CONDITIONING_LIMIT: f64 = 1e12;

/// A conjugate-symplectic matrix propagating `(Psi_n, Psi_{n-1})` from the
/// left end of `span` to the right end.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<T: Real> {
    matrix: StructuredMatrix<T>,
    energy: T,
    span: (usize, usize),
}

impl<T: Real> TransferMatrix<T> {
    fn from_product(matrix: CMatrix<T>, energy: T, span: (usize, usize)) -> Result<Self> {
        let n = matrix.nrows() / 2;
        Ok(Self {
            matrix: StructuredMatrix::measured(matrix, Structure::Symplectic(n))?,
            energy,
            span,
        })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.matrix.matrix()
    }

    pub fn structured(&self) -> &StructuredMatrix<T> {
        &self.matrix
    }

    pub fn into_structured(self) -> StructuredMatrix<T> {
        self.matrix
    }

    pub fn energy(&self) -> T {
        self.energy
    }

    /// Site interval `(l, n)`: the matrix maps data at site `l` to site `n`.
    pub fn span(&self) -> (usize, usize) {
        self.span
    }

    pub fn width(&self) -> usize {
        self.matrix.matrix().nrows() / 2
    }

    pub fn residual(&self) -> T {
        self.matrix.residual()
    }

    pub fn norm(&self) -> T {
        singular_values(self.matrix.matrix())
            .first()
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// True when the norm exceeds [`CONDITIONING_LIMIT`].
    pub fn conditioning_warning(&self) -> bool {
        self.norm() > real(CONDITIONING_LIMIT)
    }

    /// Fails unless the symplectic residual is at most `tol * max(1, |T|_F^2)`.
    pub fn verify(&self, tol: T) -> Result<()> {
        StructuredMatrix::checked(self.matrix().clone(), self.matrix.structure(), tol).map(|_| ())
    }

    /// The transfer matrix across `self` followed by `next`, i.e.
    /// `next * self`.
    pub fn then(&self, next: &TransferMatrix<T>) -> Result<Self> {
        if self.width() != next.width() {
            return Err(Error::DimensionMismatch {
                expected: format!("width {}", self.width()),
                found: format!("width {}", next.width()),
            });
        }
        let span = (self.span.0, self.span.1 + (next.span.1 - next.span.0));
        Self::from_product(next.matrix() * self.matrix(), self.energy, span)
    }
}

fn site_block<T: Real>(v: &CMatrix<T>, energy: T) -> CMatrix<T> {
    let w = v.nrows();
    let mut t = CMatrix::zeros(2 * w, 2 * w);
    let mut top = v.clone();
    for i in 0..w {
        top[(i, i)] -= cre(energy);
        t[(i, w + i)] = cre(-T::one());
        t[(w + i, i)] = cre(T::one());
    }
    t.view_mut((0, 0), (w, w)).copy_from(&top);
    t
}

/// `[[V - E, -1], [1, 0]]`.
pub fn site_transfer<T: Real>(v: &CMatrix<T>, energy: T) -> TransferMatrix<T> {
    TransferMatrix::from_product(site_block(v, energy), energy, (0, 1))
        .expect("site transfer matrix is square and finite")
}

/// `T_{N-1} ... T_1 T_0` for the potentials `V_0 .. V_{N-1}`.
pub fn block_transfer<T: Real>(seq: &[CMatrix<T>], energy: T) -> Result<TransferMatrix<T>> {
    let first = seq
        .first()
        .ok_or_else(|| Error::InvalidModel("block transfer needs at least one site".into()))?;
    let w = first.nrows();
    let mut acc = CMatrix::<T>::identity(2 * w, 2 * w);
    for (n, v) in seq.iter().enumerate() {
        if v.shape() != (w, w) {
            return Err(Error::DimensionMismatch {
                expected: format!("{w}x{w}"),
                found: format!("{}x{} at site {n}", v.nrows(), v.ncols()),
            });
        }
        acc = site_block(v, energy) * acc;
    }
    TransferMatrix::from_product(acc, energy, (0, seq.len()))
}

/// Transfer matrix of one cable site at the channel energy.
pub fn free_transfer<T: Real>(channels: &ChannelData<T>) -> TransferMatrix<T> {
    site_transfer(&channels.cable(), channels.energy)
}

/// Change of basis bringing the free transfer matrix to normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormBasis<T: Real> {
    pub m: CMatrix<T>,
    pub m_inv: CMatrix<T>,
    /// Same as `m` with the hyperbolic normalisers replaced by identities;
    /// the basis used for the ideal lead.
    pub m_i: CMatrix<T>,
    pub m_i_inv: CMatrix<T>,
    pub channels: ChannelData<T>,
    /// Spectral condition number of `m`.
    pub condition: T,
    /// `|M^-1 T0 M - normal form|_F`.
    pub normal_form_residual: T,
}

fn normaliser<T: Real>(channels: &ChannelData<T>, ideal: bool) -> Result<CMatrix<T>> {
    let w = channels.width();
    let s = channels.s;
    let mut n = CMatrix::<T>::zeros(2 * w, 2 * w);
    let eps = T::default_epsilon();
    for a in 0..s {
        let (sin, cos) = channels.k[a].sin_cos();
        if sin <= eps {
            return Err(parabolic(channels, a, sin));
        }
        let r = sin.sqrt();
        n[(a, a)] = cre(T::one() / r);
        n[(w + a, a)] = cre(cos / r);
        n[(w + a, w + a)] = cre(r);
    }
    for i in 0..w - s {
        let a = s + i;
        if ideal {
            n[(a, a)] = cre(T::one());
            n[(w + a, w + a)] = cre(T::one());
            continue;
        }
        let g = channels.gamma[i];
        let u = channels.sign(i);
        let sh = g.sinh();
        if sh <= eps {
            return Err(parabolic(channels, a, sh));
        }
        let c = T::one() / (real::<T>(2.0) * sh).sqrt();
        n[(a, a)] = cre(u * c);
        n[(a, w + a)] = cre(c);
        n[(w + a, a)] = cre((-g).exp() * c);
        n[(w + a, w + a)] = cre(u * g.exp() * c);
    }
    Ok(block_diag(&channels.basis, &channels.basis) * n)
}

fn parabolic<T: Real>(channels: &ChannelData<T>, alpha: usize, distance: T) -> Error {
    Error::ParabolicChannel {
        energy: channels.energy.to_f64().unwrap_or(f64::NAN),
        channel: alpha,
        distance: distance.to_f64().unwrap_or(f64::NAN),
    }
}

/// The normal form `M^-1 T0 M`: rotations by `k` on the elliptic pairs and
/// `diag(u e^gamma, u e^-gamma)` on the hyperbolic pairs.
pub fn symplectic_normal_form<T: Real>(channels: &ChannelData<T>) -> CMatrix<T> {
    let w = channels.width();
    let s = channels.s;
    let mut f = CMatrix::<T>::zeros(2 * w, 2 * w);
    for a in 0..s {
        let (sin, cos) = channels.k[a].sin_cos();
        f[(a, a)] = cre(cos);
        f[(a, w + a)] = cre(-sin);
        f[(w + a, a)] = cre(sin);
        f[(w + a, w + a)] = cre(cos);
    }
    for i in 0..w - s {
        let a = s + i;
        let u = channels.sign(i);
        f[(a, a)] = cre(u * channels.gamma[i].exp());
        f[(w + a, w + a)] = cre(u * (-channels.gamma[i]).exp());
    }
    f
}

/// The normal form in the Lorentz group, `C_W M^-1 T0 M C_W*`: phases
/// `e^{+-ik}` on the elliptic channels and `u [[cosh, sinh], [sinh, cosh]]`
/// coupling each hyperbolic position with its momentum.
pub fn lorentz_normal_form<T: Real>(channels: &ChannelData<T>) -> CMatrix<T> {
    let w = channels.width();
    let s = channels.s;
    let mut f = CMatrix::<T>::zeros(2 * w, 2 * w);
    for a in 0..s {
        let (sin, cos) = channels.k[a].sin_cos();
        f[(a, a)] = cplx(cos, sin);
        f[(w + a, w + a)] = cplx(cos, -sin);
    }
    for i in 0..w - s {
        let a = s + i;
        let u = channels.sign(i);
        let (ch, sh) = (channels.gamma[i].cosh(), channels.gamma[i].sinh());
        f[(a, a)] = cre(u * ch);
        f[(a, w + a)] = cre(u * sh);
        f[(w + a, a)] = cre(u * sh);
        f[(w + a, w + a)] = cre(u * ch);
    }
    f
}

pub fn normal_form_basis<T: Real>(channels: &ChannelData<T>) -> Result<NormalFormBasis<T>> {
    let m = normaliser(channels, false)?;
    let m_i = normaliser(channels, true)?;
    let m_inv = symplectic_inverse(&m);
    let m_i_inv = symplectic_inverse(&m_i);
    let sv = singular_values(&m);
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::max_value().expect("bounded scalar"),
    };
    let t0 = free_transfer(channels);
    let normal_form_residual = (&m_inv * t0.matrix() * &m - symplectic_normal_form(channels)).norm();
    Ok(NormalFormBasis {
        m,
        m_inv,
        m_i,
        m_i_inv,
        channels: channels.clone(),
        condition,
        normal_form_residual,
    })
}

/// `T^E = M^-1 T M`.
pub fn conjugated_transfer<T: Real>(
    t: &TransferMatrix<T>,
    basis: &NormalFormBasis<T>,
) -> Result<StructuredMatrix<T>> {
    if t.matrix().nrows() != basis.m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", basis.m.nrows()),
            found: format!("{0}x{0}", t.matrix().nrows()),
        });
    }
    let te = &basis.m_inv * t.matrix() * &basis.m;
    StructuredMatrix::measured(te, Structure::Symplectic(t.width()))
}

/// `diag(e^{ikn}, e^{-ikn})` for the elliptic channels.
pub fn elliptic_phases<T: Real>(channels: &ChannelData<T>, n: usize) -> CMatrix<T> {
    let nn = real::<T>(n as f64);
    let mut d: Vec<_> = channels
        .k
        .iter()
        .map(|&k| crate::linalg::cis(k * nn))
        .collect();
    d.extend(channels.k.iter().map(|&k| crate::linalg::cis(-k * nn)));
    diagonal(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::ComplexField;
    use crate::linalg::{cayley, eigenvalues, matrix_power, max_abs_diff, structure_residual};
    use crate::model::classify_channels;
    use crate::random::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> CMatrix<f64> {
        diagonal(&v.iter().map(|&x| cre(x)).collect::<Vec<_>>())
    }

    fn m2(a: [[f64; 2]; 2]) -> CMatrix<f64> {
        CMatrix::from_fn(2, 2, |i, j| cre(a[i][j]))
    }

    #[test]
    fn scalar_site_examples() {
        let t = site_transfer(&diag(&[0.0]), 0.0);
        assert_eq!(t.matrix(), &m2([[0.0, -1.0], [1.0, 0.0]]));
        let t = site_transfer(&diag(&[4.0]), 0.0);
        assert_eq!(t.matrix(), &m2([[4.0, -1.0], [1.0, 0.0]]));
        let mut ev: Vec<f64> = eigenvalues(t.matrix()).iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r3 = 3f64.sqrt();
        assert!((ev[0] - (2.0 - r3)).abs() < 1e-12 && (ev[1] - (2.0 + r3)).abs() < 1e-12);
    }

    #[test]
    fn site_transfer_is_symplectic_with_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for w in 1..7 {
            let v: CMatrix<f64> = random_hermitian(&mut rng, w);
            let t = site_transfer(&v, 0.37);
            assert!(t.residual() < 1e-13);
            let det = t.matrix().determinant();
            assert!((det - cre(1.0)).modulus() < 1e-12, "det {det}");
        }
    }

    #[test]
    fn clean_quarter_turns() {
        let w = diag(&[0.0]);
        let t = block_transfer(&vec![w.clone(); 4], 0.0).unwrap();
        assert!(max_abs_diff(t.matrix(), &CMatrix::identity(2, 2)) < 1e-15);
        assert_eq!(t.span(), (0, 4));
        let one = block_transfer(&[w.clone()], 0.0).unwrap();
        assert_eq!(one.matrix(), site_transfer(&w, 0.0).matrix());
        assert!(block_transfer::<f64>(&[], 0.0).is_err());
    }

    #[test]
    fn composition_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq: Vec<CMatrix<f64>> = (0..9).map(|_| random_hermitian(&mut rng, 3)).collect();
        let full = block_transfer(&seq, 0.2).unwrap();
        let (a, b) = seq.split_at(4);
        let ta = block_transfer(a, 0.2).unwrap();
        let tb = block_transfer(b, 0.2).unwrap();
        let joined = ta.then(&tb).unwrap();
        assert_eq!(joined.span(), (0, 9));
        let scale = full.matrix().norm();
        assert!(max_abs_diff(joined.matrix(), full.matrix()) < 1e-12 * scale);
        assert!(max_abs_diff(&(tb.matrix() * ta.matrix()), full.matrix()) < 1e-12 * scale);
    }

    #[test]
    fn free_spectrum() {
        let ch = classify_channels(&diag(&[0.0]), 0.0, 1e-8).unwrap();
        let ev = eigenvalues(free_transfer(&ch).matrix());
        assert!(ev.iter().all(|z| (z.modulus() - 1.0).abs() < 1e-12 && z.re.abs() < 1e-12));
        let ch = classify_channels(&diag(&[0.0, 4.0]), 0.0, 1e-8).unwrap();
        let ev = eigenvalues(free_transfer(&ch).matrix());
        let unit = ev.iter().filter(|z| (z.modulus() - 1.0).abs() < 1e-9).count();
        assert_eq!(unit, 2 * ch.s);
    }

    #[test]
    fn width_one_bases() {
        let ch = classify_channels(&diag(&[0.0]), 0.0, 1e-8).unwrap();
        let nf = normal_form_basis(&ch).unwrap();
        assert!(max_abs_diff(&nf.m, &CMatrix::identity(2, 2)) < 1e-15);

        let ch = classify_channels(&diag(&[4.0]), 0.0, 1e-8).unwrap();
        let nf = normal_form_basis(&ch).unwrap();
        let r3 = 3f64.sqrt();
        let c = (2.0 * r3).powf(-0.5);
        let expected = m2([[c, c], [(2.0 - r3) * c, (2.0 + r3) * c]]);
        assert!(max_abs_diff(&nf.m, &expected) < 1e-14);
        let te = conjugated_transfer(&free_transfer(&ch), &nf).unwrap();
        assert!(max_abs_diff(te.matrix(), &diag(&[2.0 + r3, 2.0 - r3])) < 1e-12);
        assert!(nf.normal_form_residual < 1e-12);
    }

    #[test]
    fn bases_are_symplectic_and_lorentz_form_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut tested = 0;
        while tested < 40 {
            let w: CMatrix<f64> = random_hermitian(&mut rng, 5) * cre(1.8);
            let Ok(ch) = classify_channels(&w, 0.1, 1e-3) else { continue };
            tested += 1;
            let nf = normal_form_basis(&ch).unwrap();
            assert!(structure_residual(&nf.m, Structure::Symplectic(5)).unwrap() < 1e-10 * nf.condition);
            assert!(structure_residual(&nf.m_i, Structure::Symplectic(5)).unwrap() < 1e-10 * nf.condition);
            assert!(nf.normal_form_residual < 1e-10 * nf.condition);
            let c = cayley::<f64>(5);
            let te = conjugated_transfer(&free_transfer(&ch), &nf).unwrap();
            let lorentz = &c * te.matrix() * c.adjoint();
            assert!(max_abs_diff(&lorentz, &lorentz_normal_form(&ch)) < 1e-10 * nf.condition);
            assert!(
                structure_residual(&lorentz, Structure::PseudoUnitary(5)).unwrap() < 1e-9 * nf.condition.powi(2)
            );
        }
    }

    #[test]
    fn conjugated_identity_and_cube() {
        let ch = classify_channels(&diag(&[0.0, 4.0]), 0.0, 1e-8).unwrap();
        let nf = normal_form_basis(&ch).unwrap();
        let id = TransferMatrix::from_product(CMatrix::identity(4, 4), 0.0, (0, 0)).unwrap();
        assert!(max_abs_diff(conjugated_transfer(&id, &nf).unwrap().matrix(), &CMatrix::identity(4, 4)) < 1e-13);

        let t3 = block_transfer(&vec![diag(&[0.0, 4.0]); 3], 0.0).unwrap();
        let te = conjugated_transfer(&t3, &nf).unwrap();
        let g = (2.0 + 3f64.sqrt()).powi(3);
        // Rotation by 3 pi / 2 on the elliptic pair.
        let mut expected = CMatrix::<f64>::zeros(4, 4);
        expected[(0, 2)] = cre(1.0);
        expected[(2, 0)] = cre(-1.0);
        expected[(1, 1)] = cre(g);
        expected[(3, 3)] = cre(1.0 / g);
        assert!(max_abs_diff(te.matrix(), &expected) < 1e-10);
        let cube = matrix_power(&symplectic_normal_form(&ch), 3);
        assert!(max_abs_diff(&cube, &expected) < 1e-10);
    }

    #[test]
    fn conditioning_flag() {
        let big = block_transfer(&vec![diag(&[10.0]); 14], 0.0).unwrap();
        assert!(big.conditioning_warning());
        let small = block_transfer(&vec![diag(&[0.0]); 14], 0.0).unwrap();
        assert!(!small.conditioning_warning());
    }
}
