use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strip_scatter::linalg::{cre, diagonal, max_abs_diff, structure_residual, svd};
use strip_scatter::model::classify_channels;
use strip_scatter::random::{gue_scatterer, haar_unitary, random_hermitian};
use strip_scatter::reduction::reduce_model;
use strip_scatter::scattering::{star_product, transfer_to_scattering, PolarFactors};
use strip_scatter::transfer::block_transfer;
use strip_scatter::{CMatrix, Structure, StripModel, Tolerances};

fn rdiag<T: strip_scatter::Real>(v: &[T]) -> CMatrix<T> {
    diagonal(&v.iter().map(|&x| cre(x)).collect::<Vec<_>>())
}

fn synthetic(rng: &mut ChaCha8Rng, q: &[f64]) -> CMatrix<f64> {
    let s = q.len();
    PolarFactors {
        q: q.to_vec(),
        u_l_plus: haar_unitary(rng, s),
        u_l_minus: haar_unitary(rng, s),
        u_r_plus: haar_unitary(rng, s),
        u_r_minus: haar_unitary(rng, s),
        free: 0,
    }
    .transfer()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_transfer_composes(seed in any::<u64>(), w in 1usize..5, len in 2usize..10, cut in 1usize..9) {
        let cut = cut.min(len - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cable = random_hermitian(&mut rng, w);
        let model = gue_scatterer(&mut rng, &cable, len, 0.5);
        let seq = model.scatterer();
        let whole = block_transfer(seq, 0.3f64).unwrap();
        let left = block_transfer(&seq[..cut], 0.3).unwrap();
        let right = block_transfer(&seq[cut..], 0.3).unwrap();
        let joined = left.then(&right).unwrap();
        let scale: f64 = whole.matrix().norm();
        prop_assert!(max_abs_diff(joined.matrix(), whole.matrix()) <= 1e-12 * scale);
        prop_assert_eq!(joined.span(), whole.span());
        let r = structure_residual(whole.matrix(), Structure::Symplectic(w)).unwrap();
        prop_assert!(r <= 1e-12 * (scale * scale).max(1.0));
    }

    #[test]
    fn pseudo_unitary_products_match_star_products(
        seed in any::<u64>(),
        q1 in prop::collection::vec(1.0f64..6.0, 1..5),
        extra in prop::collection::vec(1.0f64..6.0, 5),
    ) {
        let s = q1.len();
        let q2 = &extra[..s];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = synthetic(&mut rng, &q1);
        let b = synthetic(&mut rng, q2);
        let ab = &b * &a;
        let scale = ab.norm();
        let r = structure_residual(&ab, Structure::PseudoUnitary(s)).unwrap();
        prop_assert!(r <= 1e-12 * scale * scale);
        let tol = Tolerances::default();
        let sa = transfer_to_scattering(&a, 0.0, 1, &tol).unwrap();
        let sb = transfer_to_scattering(&b, 0.0, 1, &tol).unwrap();
        let sab = transfer_to_scattering(&ab, 0.0, 2, &tol).unwrap();
        let starred = star_product(&sa, &sb).unwrap();
        prop_assert!(max_abs_diff(starred.matrix(), sab.matrix()) <= 1e-10);
        prop_assert_eq!(starred.length(), 2);
        prop_assert!(sab.unitarity_residual() <= 1e-12);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), m in 1usize..7, n in 1usize..7, rank in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = m.min(n);
        let rank = rank.min(k);
        let u = haar_unitary::<f64, _>(&mut rng, m);
        let v = haar_unitary::<f64, _>(&mut rng, n);
        let mut d = CMatrix::zeros(m, n);
        for i in 0..rank {
            d[(i, i)] = cre(1.0 + i as f64);
        }
        let a = &u * d * &v;
        let f = svd(&a);
        let sig = CMatrix::from_fn(k, k, |i, j| if i == j { cre(f.sigma[i]) } else { cre(0.0) });
        prop_assert!(max_abs_diff(&(&f.u * sig * &f.v_adj), &a) <= 1e-13);
        prop_assert!(max_abs_diff(&(f.u.adjoint() * &f.u), &CMatrix::identity(k, k)) <= 1e-13);
        prop_assert!(f.sigma.windows(2).all(|p| p[0] >= p[1]));
        prop_assert_eq!(f.sigma.iter().filter(|&&x| x > 1e-12).count(), rank);
    }
}

#[test]
fn single_precision_smoke() {
    let cable32 = rdiag(&[0.0f32, 4.0]);
    let cable64 = rdiag(&[0.0f64, 4.0]);
    let m32 = StripModel::clean(cable32.clone(), 3).unwrap();
    let m64 = StripModel::clean(cable64.clone(), 3).unwrap();
    let ch = classify_channels(&cable32, 0.0f32, 1e-4).unwrap();
    assert_eq!(ch.s, 1);
    let tol32 = Tolerances::<f32> {
        structure: 1e-3,
        ..Tolerances::default()
    };
    let r32 = reduce_model(&m32, 0.0f32, &tol32).unwrap();
    let r64 = reduce_model(&m64, 0.0f64, &Tolerances::default()).unwrap();
    for (a, b) in r32.t_tilde.matrix().iter().zip(r64.t_tilde.matrix().iter()) {
        assert!((a.re as f64 - b.re).abs() < 1e-4 && (a.im as f64 - b.im).abs() < 1e-4);
    }
    let perturbed = StripModel::new(cable32, vec![rdiag(&[0.2f32, 4.1]); 2]).unwrap();
    let t = block_transfer(perturbed.scatterer(), 0.1f32).unwrap();
    assert!(structure_residual(t.matrix(), Structure::Symplectic(2)).unwrap() < 1e-3);
}
