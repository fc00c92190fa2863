use vertexsim::experiments::{
    convergence_report, estimate_lambda1, oracle_power, power_iterate_psi0, simulated_t_action, uniform_input,
    ActionOptions, Backend, DistanceKind, EstimatorOptions, ExperimentError, Mode, PowerOptions, Psi0Source,
    TransferExperiment,
};
use vertexsim::model::{reference_model, RMatrix, VertexModel};
use vertexsim::rng::{CounterRng, Domain};
use vertexsim::ErrorClass;

#[test]
fn deep_and_refeed_agree_without_noise() {
    let exp = TransferExperiment::new(reference_model(), 3).unwrap();
    let psi = CounterRng::new(2, Domain::Inputs, 0).uniform_vec(16);
    let opts = ActionOptions::default();
    for m in 1..=4 {
        let deep = simulated_t_action(&exp, m, &psi, Mode::Deep, Backend::Exact, opts).unwrap();
        let refeed = simulated_t_action(&exp, m, &psi, Mode::Refeed, Backend::Exact, opts).unwrap();
        let want = oracle_power(exp.operator().unwrap(), &psi, m).unwrap();
        for ((a, b), c) in deep.vector.iter().zip(&refeed.vector).zip(&want) {
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
        assert_eq!(refeed.runs.len(), m);
    }
}

#[test]
fn shot_readout_is_a_nonnegative_unit_vector() {
    let exp = TransferExperiment::new(reference_model(), 2).unwrap();
    let backend = Backend::Shots { shots: 20_000, seed: 6 };
    let out = simulated_t_action(&exp, 2, &uniform_input(8), Mode::Refeed, backend, ActionOptions::default()).unwrap();
    assert!(out.vector.iter().all(|&x| x >= 0.0));
    let norm: f64 = out.vector.iter().map(|x| x * x).sum();
    assert!((norm - 1.0).abs() < 1e-12);
    let again = simulated_t_action(&exp, 2, &uniform_input(8), Mode::Refeed, backend, ActionOptions::default()).unwrap();
    assert_eq!(out.vector, again.vector);
}

#[test]
fn too_few_meaningful_shots_is_reported() {
    let exp = TransferExperiment::new(reference_model(), 4).unwrap();
    let backend = Backend::Shots { shots: 500, seed: 1 };
    let opts = ActionOptions { meaningful_floor: 1000 };
    let err = simulated_t_action(&exp, 1, &uniform_input(32), Mode::Deep, backend, opts).unwrap_err();
    assert!(matches!(err, ExperimentError::InsufficientStatistics { total: 500, .. }));
    assert_eq!(err.class(), ErrorClass::InsufficientStatistics);
}

#[test]
fn convergence_report_for_wider_lattices() {
    let m_list = [0, 1, 2, 4, 6];
    let rows = convergence_report(&reference_model(), &[5, 6, 7], &m_list, Backend::Exact, None, PowerOptions::default())
        .unwrap();
    assert_eq!(rows.len(), 15);
    for n in [5, 6, 7] {
        let d: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.distance.unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "N={n}: {d:?}");
        assert!(d[4] < 1e-3, "N={n}: {d:?}");
    }
    assert!(rows.iter().all(|r| r.kind == DistanceKind::Oracle));
}

#[test]
fn power_iteration_stops_at_tolerance() {
    let exp = TransferExperiment::new(reference_model(), 4).unwrap();
    let opts = PowerOptions { max_steps: 50, tol: Some(1e-10), ..Default::default() };
    let run = power_iterate_psi0(&exp, None, Backend::Exact, opts).unwrap();
    assert!(run.converged);
    assert!(run.steps() < 50);
    let psi0 = &exp.oracle().unwrap().psi0_right;
    let gap: f64 = run.vector.iter().zip(psi0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(gap < 1e-8);
}

#[test]
fn estimator_bounds_symmetric_transfer() {
    let r = RMatrix::new([
        [0.9, 0.3, 0.2, 0.1],
        [0.3, 0.5, 0.25, 0.15],
        [0.2, 0.25, 0.7, 0.05],
        [0.1, 0.15, 0.05, 0.4],
    ])
    .unwrap();
    let exp = TransferExperiment::new(VertexModel::from_r_matrix(&r, 2.0).unwrap(), 1).unwrap();
    let lambda1 = exp.oracle().unwrap().ratio;
    let opts = EstimatorOptions { psi0: Psi0Source::Converged { tol: 1e-13, max_steps: 500 }, ..Default::default() };
    let mut rng = CounterRng::new(17, Domain::Inputs, 0);
    for _ in 0..50 {
        let psi = rng.uniform_vec(4);
        let rep = estimate_lambda1(&exp, &psi, Backend::Exact, opts).unwrap();
        if let Some(e) = rep.estimate {
            assert!(e <= lambda1 + 1e-9, "{e} > {lambda1}");
        }
    }
}
