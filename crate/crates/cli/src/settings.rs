//! Run settings: built-in presets, JSON config files and flag overrides.
//!
//! Precedence is preset, then config file, then explicit flags. The config
//! file is merged key by key into the preset and the result is checked
//! against the strict schema, so a misspelled key is an error.

use rydberg_gauge::adiabatic::{MapPlane, MapWindow};
use rydberg_gauge::boundstates::{PhysicalConfig, RADIAL_WINDOW};
use rydberg_gauge::dynamics::{DynamicsConfig, FIG6_PARAMS, FIG6_RHO0};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Potentials,
    Gauge,
    Bound,
    Dynamics,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Potentials => "potentials",
            Command::Gauge => "gauge",
            Command::Bound => "bound",
            Command::Dynamics => "dynamics",
            Command::Verify => "verify",
        }
    }
}

/// Surfaces exported by `potentials`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSelection {
    /// All 16 surfaces.
    All,
    /// The well state.
    Well,
    /// `psi_1` (well), `psi_2` (its avoided-crossing partner) and `psi_3` (the
    /// surface crossing `psi_2`).
    Crossing,
}

/// Quantities exported by `gauge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeQuantities {
    /// `A^(phi)` and the cylindrical components of `B` for the well state.
    Abelian,
    /// Radial component of `A_12` for the crossing pair.
    RadialConnection,
    /// Azimuthal components of `A_11`, `A_22` and `A_12`.
    AzimuthalConnection,
    /// All entries of `C = i [A^(1), A^(2)]`.
    Commutator,
}

/// Which asymptotes identify the well state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellSearch {
    /// Surfaces ending at `-1`.
    Default,
    /// Also `0` and `-delta_ratio`; needed for `Delta = delta`.
    Widened,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub plane: MapPlane,
    pub window: MapWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    /// `[rho_lo, rho_hi]` of the hard-wall window.
    pub window: (f64, f64),
    pub points: usize,
    /// Levels per `M`.
    pub levels: usize,
    pub m_min: i32,
    pub m_max: i32,
    /// Include `A^(phi)` in the radial operator.
    pub gauge_field: bool,
    /// Add the scalar potential `Phi_11` to the radial operator.
    pub scalar_potential: bool,
    /// SI inputs; when present `kappa` is taken from them.
    pub physical: Option<PhysicalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub rho0: f64,
    /// Stop at the inner turning point after the avoided crossing.
    pub first_passage_only: bool,
    pub integrator: DynamicsConfig,
}

/// Every numeric input of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// `Delta / delta` for each curve; commands that need one use the first.
    pub delta_ratios: Vec<f64>,
    pub kappa: f64,
    pub radial: RadialGrid,
    /// Rows outside this `rho` range are left out of radial exports.
    pub export_range: (f64, f64),
    pub well_search: WellSearch,
    pub states: StateSelection,
    pub map: Option<MapSpec>,
    pub gauge: GaugeQuantities,
    pub bound: BoundSpec,
    pub dynamics: DynamicsSpec,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            delta_ratios: vec![3.0],
            kappa: 2.8e-6,
            radial: RadialGrid {
                rho_min: 0.7,
                rho_max: 6.0,
                points: 4000,
            },
            export_range: (0.7, 6.0),
            well_search: WellSearch::Default,
            states: StateSelection::All,
            map: None,
            gauge: GaugeQuantities::Abelian,
            bound: BoundSpec {
                window: (RADIAL_WINDOW.0, RADIAL_WINDOW.1),
                points: RADIAL_WINDOW.2,
                levels: 5,
                m_min: -3,
                m_max: 3,
                gauge_field: true,
                scalar_potential: false,
                physical: None,
            },
            dynamics: DynamicsSpec {
                rho0: FIG6_RHO0,
                first_passage_only: false,
                integrator: DynamicsConfig::default(),
            },
        }
    }
}

pub const PRESETS: [&str; 11] = [
    "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b", "fig5c", "fig5d", "fig6",
];

/// Command and settings a preset stands for.
pub fn preset(name: &str) -> Option<(Command, Settings)> {
    let mut s = Settings::default();
    let crossing = |s: &mut Settings| {
        s.delta_ratios = vec![FIG6_PARAMS.0];
        s.kappa = FIG6_PARAMS.1;
        s.export_range = (0.8, 2.5);
    };
    let cmd = match name {
        "fig2a" => {
            s.map = Some(MapSpec {
                plane: MapPlane::Xy,
                window: MapWindow::xy_default(),
            });
            Command::Potentials
        }
        "fig2b" => {
            s.map = Some(MapSpec {
                plane: MapPlane::Xz,
                window: MapWindow::xz_default(),
            });
            Command::Potentials
        }
        "fig3a" => {
            s.delta_ratios = vec![3.0, 1.3];
            s.states = StateSelection::Well;
            s.export_range = (0.7, 3.0);
            Command::Potentials
        }
        "fig3b" => {
            s.delta_ratios = vec![3.0, 1.3];
            s.export_range = (0.7, 3.0);
            Command::Gauge
        }
        "fig4a" => {
            s.bound.m_min = 0;
            s.bound.m_max = 0;
            s.bound.levels = 6;
            Command::Bound
        }
        "fig4b" => {
            s.bound.levels = 1;
            Command::Bound
        }
        "fig5a" => {
            crossing(&mut s);
            s.states = StateSelection::Crossing;
            Command::Potentials
        }
        "fig5b" => {
            crossing(&mut s);
            s.gauge = GaugeQuantities::RadialConnection;
            Command::Gauge
        }
        "fig5c" => {
            crossing(&mut s);
            s.gauge = GaugeQuantities::AzimuthalConnection;
            Command::Gauge
        }
        "fig5d" => {
            crossing(&mut s);
            s.gauge = GaugeQuantities::Commutator;
            Command::Gauge
        }
        "fig6" => {
            s.delta_ratios = vec![FIG6_PARAMS.0];
            s.kappa = FIG6_PARAMS.1;
            s.dynamics.first_passage_only = true;
            Command::Dynamics
        }
        _ => return None,
    };
    Some((cmd, s))
}

/// Recursively overlays `patch` onto `base`. Objects merge key by key; any
/// other value replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

/// Applies a JSON config to `base`; unknown keys and wrong types are errors.
pub fn apply_config(base: &Settings, json: &str) -> Result<Settings, String> {
    let patch: Value = serde_json::from_str(json).map_err(|e| format!("config is not valid JSON: {e}"))?;
    if !patch.is_object() {
        return Err("config must be a JSON object".into());
    }
    let mut v = serde_json::to_value(base).map_err(|e| e.to_string())?;
    merge(&mut v, patch);
    serde_json::from_value(v).map_err(|e| format!("invalid config: {e}"))
}

impl Settings {
    pub fn validate(&self) -> Result<(), String> {
        if self.delta_ratios.is_empty() {
            return Err("delta_ratios must not be empty".into());
        }
        for &r in &self.delta_ratios {
            rydberg_gauge::ModelParams::new(r, self.kappa).map_err(|e| e.to_string())?;
        }
        let g = &self.radial;
        if !(g.rho_min > 0.0 && g.rho_max > g.rho_min && g.points >= 3) {
            return Err("radial grid needs 0 < rho_min < rho_max and at least 3 points".into());
        }
        if self.export_range.0 > self.export_range.1 {
            return Err("export_range is reversed".into());
        }
        let b = &self.bound;
        if b.m_min > b.m_max || b.levels == 0 {
            return Err("bound needs m_min <= m_max and at least one level".into());
        }
        if !(0 >= b.m_min && 0 <= b.m_max) {
            return Err("bound M range must include 0 (the energy reference)".into());
        }
        self.dynamics.integrator.validate().map_err(|e| e.to_string())?;
        Ok(())
    }
}
