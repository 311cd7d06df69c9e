use nalgebra::Vector3;
use rydberg_gauge::adiabatic::{
    avoided_crossing_partner, eigensystem_at, find_well_state, follow, true_crossing_partner, Grid,
};
use rydberg_gauge::boundstates::{assemble_radial, scalar_potential_profile, vibrational_spectrum, well_profile, RADIAL_WINDOW};
use rydberg_gauge::{InteractionModel, LocalGauge, ModelParams, Position, SurfaceScan};

const KAPPA: f64 = 2.8e-6;

fn setup(ratio: f64) -> (InteractionModel, SurfaceScan) {
    let model = InteractionModel::new(ModelParams::new(ratio, KAPPA).unwrap()).unwrap();
    let scan = SurfaceScan::build(&model, Grid::radial(0.7, 6.0, 4000, 0.0), 0).unwrap();
    (model, scan)
}

/// Cartesian diagonal connection of the surface continuing `reference`.
fn connection_at(model: &InteractionModel, r: Vector3<f64>, reference: &nalgebra::SVector<nalgebra::Complex<f64>, 16>) -> Vector3<f64> {
    let frame = eigensystem_at(model, &Position::from_cartesian(r)).unwrap();
    let label = frame.labels[follow(&frame, reference)];
    LocalGauge::new(model, &frame).unwrap().connection_diag(label).unwrap().map(|c| c.re)
}

#[test]
fn well_connection_is_divergence_free() {
    let (model, scan) = setup(3.0);
    let well = find_well_state(&model, &scan).unwrap();
    let h = 1e-4;
    for r in [Vector3::new(0.6, 0.5, 0.1), Vector3::new(-0.3, 0.9, -0.2), Vector3::new(1.1, -0.7, 0.0)] {
        let reference = eigensystem_at(&model, &Position::from_cartesian(r)).unwrap();
        let v = reference.vectors.column(follow(&reference, &rotated(&model, &well, r))).into_owned();
        let mut div = 0.0;
        let mut scale: f64 = 0.0;
        for c in 0..3 {
            let mut e = Vector3::zeros();
            e[c] = h;
            let (p, m) = (connection_at(&model, r + e, &v), connection_at(&model, r - e, &v));
            div += (p[c] - m[c]) / (2.0 * h);
            scale = scale.max(p.norm());
        }
        assert!(div.abs() < 1e-6 * scale.max(1.0), "div A = {div} at {r:?}");
    }
}

/// The well eigenvector carried from the `phi = 0` half-plane to the azimuth of `r`.
fn rotated(
    model: &InteractionModel,
    well: &rydberg_gauge::WellDescriptor,
    r: Vector3<f64>,
) -> nalgebra::SVector<nalgebra::Complex<f64>, 16> {
    let phi = r.y.atan2(r.x);
    well.vector.component_mul(&model.rotation_phases(phi))
}

#[test]
fn scalar_potential_is_small_against_the_well_depth() {
    let (model, scan) = setup(3.0);
    let well = find_well_state(&model, &scan).unwrap();
    let profile = well_profile(&model, &well, 0.75, 1.2, 200).unwrap();
    let phi11 = scalar_potential_profile(&model, &well, &profile).unwrap();
    let worst = phi11.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    assert!(phi11.iter().all(|&p| p >= 0.0), "Phi_11 is a sum of squares");
    assert!(worst / well.depth < 1e-2, "max Phi_11 / depth = {}", worst / well.depth);
}

fn lowest_levels(model: &InteractionModel, well: &rydberg_gauge::WellDescriptor, points: usize, count: usize) -> Vec<f64> {
    let profile = well_profile(model, well, RADIAL_WINDOW.0, RADIAL_WINDOW.1, points).unwrap();
    let problem = assemble_radial(0, &profile, KAPPA).unwrap();
    vibrational_spectrum(&problem, count, false).unwrap().levels
}

#[test]
fn production_grid_has_converged_ground_level() {
    let (model, scan) = setup(3.0);
    let well = find_well_state(&model, &scan).unwrap();
    let coarse = lowest_levels(&model, &well, RADIAL_WINDOW.2, 1);
    let fine = lowest_levels(&model, &well, 2 * RADIAL_WINDOW.2, 1);
    assert!((coarse[0] - fine[0]).abs() < 1e-6, "{coarse:?} vs {fine:?}");
}

#[test]
fn five_lowest_levels_converge_under_refinement() {
    let (model, scan) = setup(3.0);
    let well = find_well_state(&model, &scan).unwrap();
    let coarse = lowest_levels(&model, &well, 32_000, 5);
    let fine = lowest_levels(&model, &well, 64_000, 5);
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).abs() < 1e-6, "{coarse:?} vs {fine:?}");
    }
}

#[test]
fn crossing_states_near_the_avoided_crossing() {
    let (model, scan) = setup(1.13);
    let well = find_well_state(&model, &scan).unwrap();
    let (psi2, gap, rho) = avoided_crossing_partner(&model, &scan, well.surface_label, (1.2, 1.5)).unwrap();
    assert!((rho - 1.344).abs() < 5e-3, "avoided crossing at {rho}");
    assert!(gap > 0.0 && gap < 0.05, "gap {gap}");
    let (psi3, at) = true_crossing_partner(&scan, psi2, (0.8, 1.3)).unwrap();
    assert!(psi3 != well.surface_label && psi3 != psi2);
    assert!((0.95..1.1).contains(&at), "psi_3 crosses psi_2 at {at}");
    // exact crossing: the two surfaces swap order across it
    let before = scan.nearest(&Position::plane(at - 0.02, 0.0));
    let after = scan.nearest(&Position::plane(at + 0.02, 0.0));
    let d = |i: usize| scan.frames[i].energy(psi3) - scan.frames[i].energy(psi2);
    assert!(d(before) * d(after) < 0.0);
}

#[test]
fn well_deepens_with_the_detuning_ratio() {
    let (m3, s3) = setup(3.0);
    let (m13, s13) = setup(1.3);
    let deep = find_well_state(&m3, &s3).unwrap();
    let shallow = find_well_state(&m13, &s13).unwrap();
    assert!(deep.depth > shallow.depth);
    assert!(deep.trap_depth > shallow.trap_depth && shallow.trap_depth > 0.0);
    assert!((deep.asymptote + 1.0).abs() < 1e-3);
}
