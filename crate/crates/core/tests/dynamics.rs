use rydberg_gauge::adiabatic::{find_well_state, Grid};
use rydberg_gauge::dynamics::{initial_state, run, step, step_backward, DynamicsConfig, EhrenfestState, Termination};
use rydberg_gauge::{Error, InteractionModel, ModelParams, SurfaceScan};

fn setup(ratio: f64) -> (InteractionModel, SurfaceScan) {
    let model = InteractionModel::new(ModelParams::new(ratio, 2.8e-6).unwrap()).unwrap();
    let scan = SurfaceScan::build(&model, Grid::radial(0.7, 6.0, 2000, 0.0), 0).unwrap();
    (model, scan)
}

fn advance(model: &InteractionModel, mut s: EhrenfestState<f64>, dt: f64, tau: f64) -> EhrenfestState<f64> {
    let n = (tau / dt).round() as usize;
    for _ in 0..n {
        s = step(model, &s, dt).unwrap();
    }
    s
}

#[test]
fn resting_at_the_well_minimum_stays_put() {
    let (model, scan) = setup(3.0);
    let well = find_well_state(&model, &scan).unwrap();
    let (s0, _) = initial_state(&model, &scan, well.surface_label, well.rho_min).unwrap();
    let s = advance(&model, s0.clone(), 1e-3, 100.0);
    let moved = (s.position - s0.position).norm();
    assert!(moved < 1e-6, "drifted {moved}");
    assert!((s.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn energy_and_norm_are_conserved_on_the_slope() {
    let (model, scan) = setup(1.13);
    let (s0, _) = initial_state(&model, &scan, 10, 1.5).unwrap();
    let e0 = s0.energy(&model).unwrap();
    let mut s = s0;
    for _ in 0..20 {
        s = advance(&model, s, 1e-3, 1.0);
        assert!((s.energy(&model).unwrap() - e0).abs() < 1e-9);
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }
    assert!(s.rho() < 1.5);
}

#[test]
fn halving_the_step_barely_moves_the_endpoint() {
    let (model, scan) = setup(1.13);
    let (mut s0, _) = initial_state(&model, &scan, 10, 1.5).unwrap();
    s0.velocity.y = 2e-4;
    let a = advance(&model, s0.clone(), 1e-3, 20.0);
    let b = advance(&model, s0, 5e-4, 20.0);
    assert!((a.position - b.position).norm() < 1e-5);
    assert!((a.amplitudes - b.amplitudes).norm() < 1e-6);
}

#[test]
fn reversing_velocity_and_conjugating_returns_home() {
    let (model, scan) = setup(1.13);
    let (s0, _) = initial_state(&model, &scan, 10, 1.4).unwrap();
    let mut mid = advance(&model, s0.clone(), 1e-3, 10.0);
    mid.velocity = -mid.velocity;
    mid.amplitudes = mid.amplitudes.map(|z| z.conj());
    let back = advance(&model, mid, 1e-3, 10.0);
    assert!((back.position - s0.position).norm() < 1e-4);
    assert!(back.velocity.norm() < 1e-7);
}

#[test]
fn backward_step_inverts_forward_step() {
    let (model, scan) = setup(1.13);
    let (mut s0, _) = initial_state(&model, &scan, 10, 1.3).unwrap();
    s0.velocity = nalgebra::Vector2::new(-1e-3, 5e-4);
    let f = step(&model, &s0, 1e-2).unwrap();
    let b = step_backward(&model, &f, 1e-2).unwrap();
    assert!((b.position - s0.position).norm() < 1e-14);
    assert!((b.velocity - s0.velocity).norm() < 1e-14);
    assert!((b.amplitudes - s0.amplitudes).norm() < 1e-12);
}

#[test]
fn rejects_nonpositive_step() {
    let (model, scan) = setup(1.13);
    let (s0, _) = initial_state(&model, &scan, 10, 1.5).unwrap();
    assert!(matches!(step(&model, &s0, 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(step(&model, &s0, -1e-3), Err(Error::InvalidArgument(_))));
}

#[test]
fn leaving_the_window_ends_the_run_cleanly() {
    let (model, scan) = setup(1.13);
    let (mut s0, tracker) = initial_state(&model, &scan, 10, 1.5).unwrap();
    s0.velocity.x = 0.05;
    let cfg = DynamicsConfig {
        tau_max: 200.0,
        sample_stride: 100,
        rho_window: (0.5, 2.0),
        ..Default::default()
    };
    let traj = run(&model, s0, tracker, &[8, 10], &cfg, |_, _| false).unwrap();
    match traj.termination {
        Termination::DomainExit { rho, .. } => assert!(rho > 2.0),
        other => panic!("unexpected termination {other:?}"),
    }
    for s in &traj.samples {
        assert!(s.population_sum() <= 1.0 + 1e-12);
    }
}

#[test]
fn refuses_runs_past_the_lifetime_bound() {
    let (model, scan) = setup(1.13);
    let (s0, tracker) = initial_state(&model, &scan, 10, 1.5).unwrap();
    let cfg = DynamicsConfig {
        tau_max: 1500.0,
        ..Default::default()
    };
    assert!(matches!(run(&model, s0, tracker, &[10], &cfg, |_, _| false), Err(Error::Config(_))));
}
