use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strip_scatter::embedding::{
    convergence_sweep, embedded_scattering, embedded_scattering_composed, limit_target, phase_normalizer,
    theta_matrix, EmbeddingSweep, SweepOptions, SweepRoute,
};
use strip_scatter::linalg::{cplx, cre, diagonal, max_abs_diff, structure_residual};
use strip_scatter::random::{gue_scatterer, ChannelPlan};
use strip_scatter::scattering::{clean_scattering, scattering_matrix};
use strip_scatter::{classify_channels, CMatrix, Error, Structure, StripModel, Tolerances};

fn tol() -> Tolerances<f64> {
    Tolerances::default()
}

fn real_diag(d: &[f64]) -> CMatrix<f64> {
    diagonal(&d.iter().map(|&x| cre(x)).collect::<Vec<_>>())
}

fn planned_model(rng: &mut ChaCha8Rng, s: usize, h: usize, length: usize, gamma: (f64, f64)) -> StripModel<f64> {
    let plan = ChannelPlan::sample(rng, 0.0, s, h, 0.2, gamma);
    let cable = plan.cable(rng);
    gue_scatterer(rng, &cable, length, 0.5)
}

fn sweep(model: &StripModel<f64>, m_max: usize, route: SweepRoute) -> EmbeddingSweep<f64> {
    let ch = classify_channels(model.cable(), 0.0, 1e-8).unwrap();
    let mut opts = SweepOptions::new(m_max);
    opts.route = route;
    convergence_sweep(model, &ch, &opts, &tol()).unwrap()
}

#[test]
fn single_ideal_slice_is_free_propagation() {
    let cable = real_diag(&[0.0, 4.0]);
    let ch = classify_channels(&cable, 0.0, 1e-8).unwrap();
    let ideal = strip_scatter::ideal_lead_matrix(&ch);
    let model = StripModel::new(cable, vec![ideal]).unwrap();
    let s = embedded_scattering(&model, &ch, 0, &tol()).unwrap();
    let expected = clean_scattering(&[ch.k[0], std::f64::consts::FRAC_PI_2], 1);
    assert!(max_abs_diff(s.matrix(), &expected) < 1e-12);
}

#[test]
fn width_one_clean_cable_matches_at_every_m() {
    let model = StripModel::clean(real_diag(&[0.5]), 2).unwrap();
    let sw = sweep(&model, 6, SweepRoute::Composed);
    for r in &sw.residuals {
        assert!(*r < 1e-12, "residual {r}");
    }
}

#[test]
fn direct_and_composed_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = planned_model(&mut rng, 1, 1, 3, (0.6, 0.6));
    let ch = classify_channels(model.cable(), 0.0, 1e-8).unwrap();
    for m in [0, 1, 3, 5] {
        let direct = embedded_scattering(&model, &ch, m, &tol()).unwrap();
        let composed = embedded_scattering_composed(&model, &ch, m, &tol()).unwrap();
        assert!(max_abs_diff(direct.matrix(), composed.matrix()) < 1e-8, "m = {m}");
        assert!(direct.unitarity_residual() < 1e-9);
    }
    let d = sweep(&model, 5, SweepRoute::Direct);
    let c = sweep(&model, 5, SweepRoute::Composed);
    for (a, b) in d.residuals.iter().zip(&c.residuals) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn direct_route_stops_at_the_overflow_guard() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = planned_model(&mut rng, 1, 1, 2, (1.5, 1.5));
    let sw = sweep(&model, 30, SweepRoute::Direct);
    let m = sw.truncated_at.expect("truncated");
    assert!(m < 30);
    assert_eq!(sw.m_values.len(), m);
}

#[test]
fn phase_normalizer_examples() {
    let ch = classify_channels(&real_diag(&[0.0]), 0.0, 1e-8).unwrap();
    let d = phase_normalizer(&ch);
    assert!(max_abs_diff(&d, &diagonal(&[cplx(0.0, -1.0), cplx(0.0, -1.0)])) < 1e-15);

    // lambda - E = -4: hyperbolic with u = -1.
    let ch = classify_channels(&real_diag(&[0.0, -4.0]), 0.0, 1e-8).unwrap();
    let d = phase_normalizer(&ch);
    assert_eq!(d[(1, 1)], cre(-1.0));
    assert_eq!(d[(3, 3)], cre(-1.0));
    assert_eq!(structure_residual(&d, Structure::Unitary(4)).unwrap(), 0.0);
}

#[test]
fn theta_examples() {
    let s3 = 3f64.sqrt();
    let plus = classify_channels(&real_diag(&[4.0]), 0.0, 1e-8).unwrap();
    let minus = classify_channels(&real_diag(&[-4.0]), 0.0, 1e-8).unwrap();
    let tp = theta_matrix(&plus)[(0, 0)];
    let tm = theta_matrix(&minus)[(0, 0)];
    assert!((tp - cplx(s3 / 2.0, 0.5)).norm() < 1e-14);
    assert!((tm - cplx(s3 / 2.0, -0.5)).norm() < 1e-14);
    for g in [0.01f64, 0.5, 3.0, 12.0] {
        let x = g.cosh() * 2.0;
        let ch = classify_channels(&real_diag(&[x]), 0.0, 1e-8).unwrap();
        assert!((theta_matrix(&ch)[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn target_without_hyperbolic_channels_is_s_e() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = planned_model(&mut rng, 2, 0, 3, (0.5, 0.5));
    let s_e = scattering_matrix(&model, 0.0, &tol()).unwrap();
    let target = limit_target(s_e.matrix(), &CMatrix::zeros(0, 0)).unwrap();
    assert_eq!(&target, s_e.matrix());
    let sw = sweep(&model, 8, SweepRoute::Composed);
    for r in &sw.residuals {
        assert!(*r < 1e-10, "residual {r}");
    }
}

#[test]
fn limit_target_rejects_odd_sizes() {
    let bad = CMatrix::<f64>::zeros(3, 3);
    assert!(matches!(
        limit_target(&bad, &CMatrix::zeros(1, 1)),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn clean_width_two() {
    let model = StripModel::clean(real_diag(&[0.0, 4.0]), 3).unwrap();
    let sw = sweep(&model, 20, SweepRoute::Composed);
    assert!(sw.residuals[20] <= 1e-8);
    assert!(sw.residuals[0] > sw.residuals[5]);
    let k = std::f64::consts::FRAC_PI_2;
    let t = &sw.target;
    assert!(t[(0, 0)].norm() < 1e-12);
    assert!((t[(2, 0)] - cplx(0.0, 3.0 * k).exp()).norm() < 1e-12);
    let theta = cplx(0.0, std::f64::consts::FRAC_PI_6).exp();
    assert!((t[(3, 3)] - theta).norm() < 1e-12);
    assert!((t[(1, 1)] + theta).norm() < 1e-12);
    assert!(structure_residual(t, Structure::Unitary(4)).unwrap() < 1e-12);
    // Without mixing the hyperbolic blocks converge at twice the decay rate.
    let g = sw.gamma_min.unwrap();
    let slope = sw.fitted_slope(1e-12).unwrap();
    assert!((slope + 2.0 * g).abs() < 0.2, "slope {slope}");
}

#[test]
fn generic_scatterer_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let model = planned_model(&mut rng, 2, 1, 3, (0.6, 0.6));
        let sw = sweep(&model, 30, SweepRoute::Composed);
        let g = sw.gamma_min.unwrap();
        // Elliptic inputs leak into the hyperbolic rows at order e^{-gamma m}.
        let slope = sw.fitted_slope(1e-12).unwrap();
        assert!((slope + g).abs() < 0.1, "slope {slope}");
        // The elliptic block itself converges at e^{-2 gamma m}.
        let ell: Vec<(f64, f64)> = (4..18).map(|m| (m as f64, sw.elliptic_residuals[m].ln())).collect();
        let ell_slope = strip_scatter::embedding::log_linear_slope(&ell).unwrap();
        assert!((ell_slope + 2.0 * g).abs() < 0.2, "elliptic slope {ell_slope}");
        assert!(sw.elliptic_residuals[20] < 1e-6);
    }
}

#[test]
fn sweep_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let model = planned_model(&mut rng, 1, 2, 4, (0.5, 1.0));
        let sw = sweep(&model, 25, SweepRoute::Composed);
        let d = phase_normalizer(&classify_channels(model.cable(), 0.0, 1e-8).unwrap());
        assert!(structure_residual(&d, Structure::Unitary(6)).unwrap() < 1e-14);
        for (u, n) in sw.unitarity_residuals.iter().zip(&sw.normalized) {
            assert!(*u < 1e-9);
            assert!(structure_residual(n, Structure::Unitary(6)).unwrap() < 1e-9);
        }
        let start = sw.burn_in.expect("residual drops below 1/2");
        for w in sw.residuals[start..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "tail not monotone: {w:?}");
        }
    }
}

#[test]
fn early_stop_ends_the_sweep() {
    let model = StripModel::clean(real_diag(&[0.0, 4.0]), 3).unwrap();
    let ch = classify_channels(model.cable(), 0.0, 1e-8).unwrap();
    let mut opts = SweepOptions::new(30);
    opts.early_stop = Some(1e-10);
    let sw = convergence_sweep(&model, &ch, &opts, &tol()).unwrap();
    assert!(*sw.residuals.last().unwrap() < 1e-10);
    assert!(sw.m_values.len() < 31);
}
