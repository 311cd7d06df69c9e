//! Execution of each command and the artifacts it writes.

use crate::settings::{Command, GaugeQuantities, Settings, StateSelection, WellSearch};
use rydberg_gauge::adiabatic::{
    avoided_crossing_partner, find_well_state_with, potential_map, true_crossing_partner, Grid, WellCriteria,
};
use rydberg_gauge::boundstates::{assemble_radial, scalar_potential_profile, vibrational_spectrum, well_profile};
use rydberg_gauge::dynamics::run_crossing;
use rydberg_gauge::io::fmt12;
use rydberg_gauge::{verify, Error, InteractionModel, LocalGauge, ModelParams, SurfaceScan, WellDescriptor};
use serde_json::{json, Value};
use std::fmt::Write as _;

/// One file to be written.
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn rows(&self) -> usize {
        self.contents.lines().count().saturating_sub(1)
    }
}

/// What a command produced.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Derived facts recorded in the manifest (labels, well location, ...).
    pub info: Value,
    /// Text for standard output.
    pub report: String,
    pub success: bool,
}

fn model(ratio: f64, kappa: f64) -> Result<InteractionModel, Error> {
    InteractionModel::new(ModelParams::new(ratio, kappa)?)
}

fn scan(m: &InteractionModel, s: &Settings) -> Result<SurfaceScan, Error> {
    let g = &s.radial;
    SurfaceScan::build(m, Grid::radial(g.rho_min, g.rho_max, g.points, 0.0), 0)
}

fn well(m: &InteractionModel, scan: &SurfaceScan, s: &Settings) -> Result<WellDescriptor, Error> {
    let criteria = match s.well_search {
        WellSearch::Default => WellCriteria::default(),
        WellSearch::Widened => WellCriteria::widened(m.params()),
    };
    find_well_state_with(m, scan, &criteria)
}

fn well_info(ratio: f64, w: &WellDescriptor) -> Value {
    json!({
        "delta_ratio": ratio,
        "surface_label": w.surface_label,
        "rho_min": w.rho_min,
        "energy_min": w.energy_min,
        "asymptote": w.asymptote,
        "depth": w.depth,
        "barrier": w.barrier,
        "trap_depth": w.trap_depth,
    })
}

/// `[psi_1, psi_2, psi_3]` labels and the two crossing radii.
fn crossing_states(m: &InteractionModel, scan: &SurfaceScan, w: &WellDescriptor) -> Result<([usize; 3], f64, f64), Error> {
    let (psi2, _, avoided_at) = avoided_crossing_partner(m, scan, w.surface_label, (1.2, 1.5))?;
    let (psi3, crossed_at) = true_crossing_partner(scan, psi2, (0.8, 1.3))
        .ok_or_else(|| Error::WellNotFound("no surface crosses psi_2 near R0".into()))?;
    Ok(([w.surface_label, psi2, psi3], avoided_at, crossed_at))
}

fn file_name(preset: Option<&str>, fallback: &str) -> String {
    format!("{}.csv", preset.unwrap_or(fallback))
}

pub fn execute(cmd: Command, s: &Settings, preset: Option<&str>) -> Result<Outcome, Error> {
    match cmd {
        Command::Potentials => potentials(s, preset),
        Command::Gauge => gauge(s, preset),
        Command::Bound => bound(s, preset),
        Command::Dynamics => dynamics(s, preset),
        Command::Verify => Ok(verify_all()),
    }
}

fn potentials(s: &Settings, preset: Option<&str>) -> Result<Outcome, Error> {
    if let Some(spec) = s.map {
        let ratio = s.delta_ratios[0];
        let m = model(ratio, s.kappa)?;
        let w = well(&m, &scan(&m, s)?, s)?;
        let map = potential_map(&m, &w, spec.plane, spec.window)?;
        let mut buf = Vec::new();
        map.write_csv(&mut buf)?;
        let mut info = json!({ "well": well_info(ratio, &w) });
        if let Some(hw) = map.bound_half_width(w.asymptote) {
            info["half_width_deg"] = json!(hw);
        }
        return Ok(Outcome {
            artifacts: vec![Artifact {
                name: file_name(preset, "potential_map"),
                contents: String::from_utf8(buf).expect("ascii csv"),
            }],
            info,
            report: String::new(),
            success: true,
        });
    }
    let mut csv = String::from("delta_ratio,rho,z,phi,label,energy\n");
    let mut info = Vec::new();
    for &ratio in &s.delta_ratios {
        let m = model(ratio, s.kappa)?;
        let sc = scan(&m, s)?;
        let (labels, extra): (Vec<usize>, Value) = match s.states {
            StateSelection::All => ((0..16).collect(), json!({})),
            StateSelection::Well => {
                let w = well(&m, &sc, s)?;
                (vec![w.surface_label], json!({ "well": well_info(ratio, &w) }))
            }
            StateSelection::Crossing => {
                let w = well(&m, &sc, s)?;
                let (l, avoided, crossed) = crossing_states(&m, &sc, &w)?;
                (
                    l.to_vec(),
                    json!({
                        "well": well_info(ratio, &w),
                        "psi_labels": l,
                        "avoided_crossing_rho": avoided,
                        "true_crossing_rho": crossed,
                    }),
                )
            }
        };
        info.push(extra);
        for f in in_range(&sc, s) {
            for &l in &labels {
                let p = f.position;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    fmt12(ratio),
                    fmt12(p.rho),
                    fmt12(p.z),
                    fmt12(p.phi),
                    l,
                    fmt12(f.energy(l))
                );
            }
        }
    }
    Ok(Outcome {
        artifacts: vec![Artifact {
            name: file_name(preset, "potentials"),
            contents: csv,
        }],
        info: json!({ "curves": info }),
        report: String::new(),
        success: true,
    })
}

fn in_range<'a>(sc: &'a SurfaceScan, s: &Settings) -> impl Iterator<Item = &'a rydberg_gauge::AdiabaticFrame> {
    let (lo, hi) = s.export_range;
    sc.frames.iter().filter(move |f| f.position.rho >= lo && f.position.rho <= hi)
}

fn gauge(s: &Settings, preset: Option<&str>) -> Result<Outcome, Error> {
    let mut csv = String::from("delta_ratio,rho,z,phi,quantity,real,imag\n");
    let mut info = Vec::new();
    for &ratio in &s.delta_ratios {
        let m = model(ratio, s.kappa)?;
        let sc = scan(&m, s)?;
        let w = well(&m, &sc, s)?;
        let pair = if s.gauge == GaugeQuantities::Abelian {
            info.push(json!({ "well": well_info(ratio, &w) }));
            None
        } else {
            let (l, avoided, _) = crossing_states(&m, &sc, &w)?;
            info.push(json!({ "well": well_info(ratio, &w), "pair_labels": [l[0], l[1]], "avoided_crossing_rho": avoided }));
            Some([l[0], l[1]])
        };
        for f in in_range(&sc, s) {
            let g = LocalGauge::new(&m, f)?;
            let p = f.position;
            let (e_rho, e_phi) = (p.e_rho(), p.e_phi());
            let mut rows: Vec<(&str, f64, f64)> = Vec::new();
            match (s.gauge, pair) {
                (GaugeQuantities::Abelian, _) => {
                    let n = w.surface_label;
                    let b = g.magnetic_field_cylindrical(n)?;
                    rows.push(("A_phi", g.connection_diag_phi(n)?, 0.0));
                    rows.push(("B_rho", b.x, 0.0));
                    rows.push(("B_phi", b.y, 0.0));
                    rows.push(("B_z", b.z, 0.0));
                }
                (GaugeQuantities::RadialConnection, Some([a, b])) => {
                    let v = g.connection_offdiag(a, b)?;
                    let c = v[0] * e_rho[0] + v[1] * e_rho[1] + v[2] * e_rho[2];
                    rows.push(("A12_rho", c.re, c.im));
                }
                (GaugeQuantities::AzimuthalConnection, Some([a, b])) => {
                    let v = g.connection_offdiag(a, b)?;
                    let c = v[0] * e_phi[0] + v[1] * e_phi[1] + v[2] * e_phi[2];
                    rows.push(("A11_phi", g.connection_diag_phi(a)?, 0.0));
                    rows.push(("A22_phi", g.connection_diag_phi(b)?, 0.0));
                    rows.push(("A12_phi", c.re, c.im));
                }
                (GaugeQuantities::Commutator, Some(pr)) => {
                    let c = g.commutator_c(pr)?;
                    for (name, r, k) in [("C11", 0, 0), ("C12", 0, 1), ("C21", 1, 0), ("C22", 1, 1)] {
                        rows.push((name, c[(r, k)].re, c[(r, k)].im));
                    }
                }
                _ => unreachable!("pair is resolved for every non-Abelian selection"),
            }
            for (q, re, im) in rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{q},{},{}",
                    fmt12(ratio),
                    fmt12(p.rho),
                    fmt12(p.z),
                    fmt12(p.phi),
                    fmt12(re),
                    fmt12(im)
                );
            }
        }
    }
    Ok(Outcome {
        artifacts: vec![Artifact {
            name: file_name(preset, "gauge"),
            contents: csv,
        }],
        info: json!({ "curves": info }),
        report: String::new(),
        success: true,
    })
}

fn bound(s: &Settings, preset: Option<&str>) -> Result<Outcome, Error> {
    let b = &s.bound;
    let scales = b.physical.map(|p| p.scales()).transpose()?;
    let kappa = scales.map_or(s.kappa, |sc| sc.kappa());
    let ratio = s.delta_ratios[0];
    let m = model(ratio, kappa)?;
    let w = well(&m, &scan(&m, s)?, s)?;
    let mut profile = well_profile(&m, &w, b.window.0, b.window.1, b.points)?;
    if !b.gauge_field {
        profile = profile.without_gauge_field();
    }
    let phi11 = if b.scalar_potential {
        Some(scalar_potential_profile(&m, &w, &profile)?)
    } else {
        None
    };
    let spectra = (b.m_min..=b.m_max)
        .map(|mm| {
            let mut p = assemble_radial(mm, &profile, kappa)?;
            if let Some(extra) = &phi11 {
                p.add_potential(extra)?;
            }
            vibrational_spectrum(&p, b.levels, false)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let e0 = spectra.iter().find(|sp| sp.m_mot == 0).expect("range contains 0").levels[0];
    let mut csv = String::from("M_mot,level_index,energy_hbar_delta,energy_hbar_OmegaL_rel\n");
    for sp in &spectra {
        for (k, e) in sp.levels.iter().enumerate() {
            let _ = writeln!(csv, "{},{k},{},{}", sp.m_mot, fmt12(*e), fmt12((e - e0) / kappa));
        }
    }
    let mut info = json!({ "well": well_info(ratio, &w), "kappa": kappa });
    if let Some(sc) = scales {
        info["physical"] = json!({
            "reduced_mass_kg": sc.reduced_mass,
            "r0_m": sc.r0,
            "delta_rad_s": sc.delta_abs,
            "omega_l_rad_s": sc.omega_l,
            "omega_l_hz": sc.omega_l_hz(),
        });
    }
    Ok(Outcome {
        artifacts: vec![Artifact {
            name: file_name(preset, "bound"),
            contents: csv,
        }],
        info,
        report: String::new(),
        success: true,
    })
}

fn dynamics(s: &Settings, preset: Option<&str>) -> Result<Outcome, Error> {
    let d = &s.dynamics;
    let params = ModelParams::new(s.delta_ratios[0], s.kappa)?;
    let run = run_crossing(params, d.rho0, &d.integrator, d.first_passage_only)?;
    let mut buf = Vec::new();
    run.trajectory.write_csv(&mut buf)?;
    let last = run.trajectory.samples.last().expect("at least the initial sample");
    let info = json!({
        "psi_labels": run.labels,
        "avoided_crossing_rho": run.crossing_rho,
        "avoided_crossing_gap": run.crossing_gap,
        "termination": format!("{:?}", run.trajectory.termination),
        "final_tau": last.tau,
        "final_populations": last.populations,
        "energy_drift": run.trajectory.energy_drift(),
    });
    Ok(Outcome {
        artifacts: vec![Artifact {
            name: file_name(preset, "dynamics"),
            contents: String::from_utf8(buf).expect("ascii csv"),
        }],
        info,
        report: String::new(),
        success: true,
    })
}

fn verify_all() -> Outcome {
    let checks = verify::run_all();
    let success = checks.iter().all(|c| c.passed);
    let info = json!(checks
        .iter()
        .map(|c| json!({ "id": c.id, "name": c.name, "passed": c.passed, "detail": c.detail }))
        .collect::<Vec<_>>());
    Outcome {
        artifacts: Vec::new(),
        info,
        report: verify::table(&checks),
        success,
    }
}

/// Run manifest: everything needed to reproduce the artifacts.
pub fn manifest(cmd: Command, preset: Option<&str>, s: &Settings, threads: usize, outcome: &Outcome, seconds: f64) -> Value {
    json!({
        "program": "rydberg-gauge",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "preset": preset,
        "threads": threads,
        "settings": s,
        "outputs": outcome.artifacts.iter().map(|a| json!({ "file": a.name, "rows": a.rows() })).collect::<Vec<_>>(),
        "results": outcome.info,
        "success": outcome.success,
        "wall_time_s": seconds,
    })
}
