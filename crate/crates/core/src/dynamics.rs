//! Ehrenfest propagation of the relative coordinate in the `x-y` plane
//! coupled to all 16 internal amplitudes.
//!
//! The classical Hamiltonian is `kappa |p|^2 + <psi|H_int(r)|psi>` with
//! `dr/dtau = 2 kappa p`, so the kinetic energy is `|v|^2 / (4 kappa)`. The
//! flow is split into a drift (`r` moves, `psi` and `p` fixed) and a potential
//! part (`r` fixed). Both are solved exactly: the potential part evolves `psi`
//! with `exp(-i H t)` in the eigenbasis and integrates the force along that
//! evolution in closed form. A Yoshida triple of Strang steps makes the scheme
//! fourth order, symplectic and time-reversible.

use crate::adiabatic::{
    assign_labels, avoided_crossing_partner, eigensystem_at, find_well_state, real_eigensystem, AdiabaticFrame, Grid, SurfaceScan,
};
use crate::error::{Error, Result};
use crate::model::{InteractionModel, ModelParams, Position, RealOperator, StateVector, N};
use crate::scalar::{cplx, Real, C};
use nalgebra::{ComplexField, Vector2};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Classical position, velocity and internal state.
#[derive(Debug, Clone)]
pub struct EhrenfestState<T: Real> {
    /// `(x, y)` in `R0`.
    pub position: Vector2<T>,
    /// `dr/dtau` in `R0 |delta|`.
    pub velocity: Vector2<T>,
    pub amplitudes: StateVector<T>,
    /// `tau = t |delta|`.
    pub time: T,
}

impl<T: Real> EhrenfestState<T> {
    pub fn rho(&self) -> T {
        self.position.norm()
    }

    pub fn cylindrical(&self) -> Position<T> {
        Position::new(self.rho(), T::zero(), self.position.y.atan2(self.position.x))
    }

    /// Kinetic plus internal energy, units `hbar |delta|`.
    pub fn energy(&self, model: &InteractionModel<T>) -> Result<T> {
        let h = model.hint(&self.cylindrical())?;
        let internal = self.amplitudes.dotc(&(h * self.amplitudes)).re;
        Ok(self.velocity.norm_squared() / (T::lit(4.0) * model.kappa()) + internal)
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }
}

/// Propagation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub tau_max: f64,
    /// Steps between recorded samples.
    pub sample_stride: usize,
    /// The run stops cleanly when `rho` leaves this interval.
    pub rho_window: (f64, f64),
    /// Permits `tau_max` beyond [`TAU_LIMIT`].
    pub allow_long: bool,
}

/// Longest run accepted by default: well below the pair lifetime `t |delta| ~ 1300`.
pub const TAU_LIMIT: f64 = 1000.0;

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            dt: 1e-3,
            tau_max: TAU_LIMIT,
            sample_stride: 1000,
            rho_window: (0.5, 10.0),
            allow_long: false,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tau_max.is_finite() && self.tau_max > 0.0) {
            return Err(Error::Config("tau_max must be positive".into()));
        }
        if self.tau_max > TAU_LIMIT && !self.allow_long {
            return Err(Error::Config(format!(
                "tau_max = {} exceeds the lifetime-limited bound {TAU_LIMIT}; set allow_long to override",
                self.tau_max
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::Config("sample_stride must be at least 1".into()));
        }
        let (lo, hi) = self.rho_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config("rho_window must satisfy 0 < lo < hi".into()));
        }
        Ok(())
    }
}

/// `(exp(i w t) - 1) / (i w)`, the integral of `exp(i w s)` over `[0, t]`.
fn phase_integral<T: Real>(w: T, t: T) -> C<T> {
    let x = w * t;
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        cplx(t * (T::one() - x2 / T::lit(6.0)), t * x * (T::lit(0.5) - x2 / T::lit(24.0)))
    } else {
        cplx(x.sin() / w, (T::one() - x.cos()) / w)
    }
}

/// [`phase_integral`] given `z = exp(i w t)`, avoiding the trigonometric calls.
fn phase_integral_from<T: Real>(w: T, t: T, z: C<T>) -> C<T> {
    if (w * t).abs() < T::lit(1e-4) {
        phase_integral(w, t)
    } else {
        cplx(z.im / w, (T::one() - z.re) / w)
    }
}

fn drift<T: Real>(state: &mut EhrenfestState<T>, t: T) {
    state.position += state.velocity * t;
}

/// Exact flow of the potential part for time `t` at fixed position.
///
/// With `c = V^dag psi` and `w_mn = e_m - e_n`, the momentum changes by
/// `-Re sum_mn c_m* c_n (V^dag grad H V)_mn (exp(i w_mn t) - 1) / (i w_mn)`.
/// `V = R O` with `R` the diagonal azimuthal phases and `O` real, so the sum
/// is taken as `sum_ij (R^* G R)_ij (O M O^T)_ij` with one real similarity.
fn kick<T: Real>(model: &InteractionModel<T>, state: &mut EhrenfestState<T>, t: T) -> Result<()> {
    let pos = state.cylindrical();
    let (e, o) = real_eigensystem(model, &pos)?;
    let rot = model.rotation_phases(pos.phi);
    let local = StateVector::<T>::from_fn(|i, _| rot[i].conj() * state.amplitudes[i]);
    let (lr, li) = (local.map(|z| z.re), local.map(|z| z.im));
    let (cr, ci) = (o.tr_mul(&lr), o.tr_mul(&li));
    let c = StateVector::<T>::from_fn(|k, _| cplx(cr[k], ci[k]));
    let turn = StateVector::<T>::from_fn(|k, _| cplx((e[k] * t).cos(), (e[k] * t).sin()));
    let mut mr = RealOperator::<T>::zeros();
    let mut mi = RealOperator::<T>::zeros();
    for m in 0..N {
        for n in m..N {
            let v = c[m].conj() * c[n] * phase_integral_from(e[m] - e[n], t, turn[m] * turn[n].conj());
            mr[(m, n)] = v.re;
            mi[(m, n)] = v.im;
            if n != m {
                // f(-w) = f(w)^*, so the (n, m) entry is the conjugate.
                mr[(n, m)] = v.re;
                mi[(n, m)] = -v.im;
            }
        }
    }
    let yr = o * mr * o.transpose();
    let yi = o * mi * o.transpose();
    let mut force = Vector2::<T>::zeros();
    for (axis, f) in force.iter_mut().enumerate() {
        let g = model.grad_hint_component(&pos, axis)?;
        let mut acc = T::zero();
        for i in 0..N {
            for j in 0..N {
                let gij = rot[i].conj() * g[(i, j)] * rot[j];
                acc += gij.re * yr[(i, j)] - gij.im * yi[(i, j)];
            }
        }
        *f = -acc;
    }
    state.velocity += force * (T::lit(2.0) * model.kappa());
    let evolved = StateVector::<T>::from_fn(|k, _| c[k] * turn[k].conj());
    let (er, ei) = (evolved.map(|z| z.re), evolved.map(|z| z.im));
    let (nr, ni) = (o * er, o * ei);
    state.amplitudes = StateVector::<T>::from_fn(|i, _| rot[i] * cplx(nr[i], ni[i]));
    Ok(())
}

/// Advances by `dt` with the fourth-order Yoshida composition.
pub fn step<T: Real>(model: &InteractionModel<T>, state: &EhrenfestState<T>, dt: T) -> Result<EhrenfestState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    step_signed(model, state, dt)
}

fn step_signed<T: Real>(model: &InteractionModel<T>, state: &EhrenfestState<T>, dt: T) -> Result<EhrenfestState<T>> {
    let cbrt2 = T::lit(2f64.cbrt());
    let w1 = T::one() / (T::lit(2.0) - cbrt2);
    let w0 = -cbrt2 * w1;
    let half = T::lit(0.5);
    let mut s = state.clone();
    drift(&mut s, half * w1 * dt);
    kick(model, &mut s, w1 * dt)?;
    drift(&mut s, half * (w0 + w1) * dt);
    kick(model, &mut s, w0 * dt)?;
    drift(&mut s, half * (w0 + w1) * dt);
    kick(model, &mut s, w1 * dt)?;
    drift(&mut s, half * w1 * dt);
    s.time += dt;
    Ok(s)
}

/// Advances by a negative time step `-dt` (for reversibility checks).
pub fn step_backward<T: Real>(model: &InteractionModel<T>, state: &EhrenfestState<T>, dt: T) -> Result<EhrenfestState<T>> {
    step_signed(model, state, -dt)
}

/// Starting state at rest at `(rho0, 0)` in the surface `label` of `scan`.
///
/// Returns the state and a frame at `rho0` whose labels continue those of `scan`.
pub fn initial_state<T: Real>(
    model: &InteractionModel<T>,
    scan: &SurfaceScan<T>,
    label: usize,
    rho0: T,
) -> Result<(EhrenfestState<T>, AdiabaticFrame<T>)> {
    if label >= N {
        return Err(Error::InvalidArgument(format!("surface label {label} out of range")));
    }
    let pos = Position::plane(rho0, T::zero());
    let near = &scan.frames[scan.nearest(&pos)];
    let mut frame = eigensystem_at(model, &pos)?;
    let mut watch = [false; N];
    watch[label] = true;
    assign_labels(near, &mut frame, &watch, 0)?;
    let state = EhrenfestState {
        position: Vector2::new(rho0, T::zero()),
        velocity: Vector2::zeros(),
        amplitudes: frame.vector(label),
        time: T::zero(),
    };
    Ok((state, frame))
}

/// Adiabatic populations `|<psi_l(r)|psi>|^2` for `labels`, updating the
/// continuity labels of `tracker` to the current position.
pub fn project_populations<T: Real>(
    model: &InteractionModel<T>,
    state: &EhrenfestState<T>,
    tracker: &mut AdiabaticFrame<T>,
    labels: &[usize],
) -> Result<Vec<T>> {
    let mut frame = eigensystem_at(model, &state.cylindrical())?;
    let mut watch = [false; N];
    for &l in labels {
        watch[l] = true;
    }
    assign_labels(tracker, &mut frame, &watch, 0)?;
    *tracker = frame;
    Ok(labels
        .iter()
        .map(|&l| tracker.vector(l).dotc(&state.amplitudes).modulus_squared())
        .collect())
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    pub vx: f64,
    pub vy: f64,
    /// Populations of the tracked labels, in the order given to [`run`].
    pub populations: Vec<f64>,
    pub energy: f64,
    pub norm: f64,
}

impl Sample {
    pub fn population_sum(&self) -> f64 {
        self.populations.iter().sum()
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    TimeLimit,
    DomainExit { tau: f64, rho: f64 },
    Event,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub labels: Vec<usize>,
    pub samples: Vec<Sample>,
    pub termination: Termination,
}

impl Trajectory {
    /// Largest `|E(tau) - E(0)|` over the samples.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max)
    }

    /// CSV `tau,x,y,rho,P1,P2,...,Psum,energy`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let pcols: Vec<String> = (1..=self.labels.len()).map(|k| format!("P{k}")).collect();
        writeln!(out, "tau,x,y,rho,{},Psum,energy", pcols.join(","))?;
        let f = crate::io::fmt12;
        for s in &self.samples {
            let ps: Vec<String> = s.populations.iter().map(|p| f(*p)).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                f(s.tau),
                f(s.x),
                f(s.y),
                f(s.rho),
                ps.join(","),
                f(s.population_sum()),
                f(s.energy)
            )?;
        }
        Ok(())
    }
}

fn record<T: Real>(
    model: &InteractionModel<T>,
    state: &EhrenfestState<T>,
    tracker: &mut AdiabaticFrame<T>,
    labels: &[usize],
) -> Result<Sample> {
    let populations = project_populations(model, state, tracker, labels)?;
    Ok(Sample {
        tau: state.time.as_f64(),
        x: state.position.x.as_f64(),
        y: state.position.y.as_f64(),
        rho: state.rho().as_f64(),
        vx: state.velocity.x.as_f64(),
        vy: state.velocity.y.as_f64(),
        populations: populations.into_iter().map(|p| p.as_f64()).collect(),
        energy: state.energy(model)?.as_f64(),
        norm: state.norm().as_f64(),
    })
}

/// Propagates `state` and records populations of `labels` every
/// `sample_stride` steps. `stop` is checked at every sample; returning
/// `true` ends the run with [`Termination::Event`].
pub fn run<T: Real>(
    model: &InteractionModel<T>,
    mut state: EhrenfestState<T>,
    mut tracker: AdiabaticFrame<T>,
    labels: &[usize],
    config: &DynamicsConfig,
    mut stop: impl FnMut(&Sample, &[Sample]) -> bool,
) -> Result<Trajectory> {
    config.validate()?;
    let dt = T::lit(config.dt);
    let (lo, hi) = (T::lit(config.rho_window.0), T::lit(config.rho_window.1));
    let mut samples = vec![record(model, &state, &mut tracker, labels)?];
    let total = (config.tau_max / config.dt).round() as u64;
    let mut termination = Termination::TimeLimit;
    for k in 1..=total {
        state = step(model, &state, dt)?;
        let rho = state.rho();
        if rho < lo || rho > hi {
            termination = Termination::DomainExit {
                tau: state.time.as_f64(),
                rho: rho.as_f64(),
            };
            break;
        }
        if k % config.sample_stride as u64 == 0 || k == total {
            let s = record(model, &state, &mut tracker, labels)?;
            let done = stop(&s, &samples);
            samples.push(s);
            if done {
                termination = Termination::Event;
                break;
            }
        }
    }
    Ok(Trajectory {
        labels: labels.to_vec(),
        samples,
        termination,
    })
}

/// Parameters of the avoided-crossing simulation.
pub const FIG6_PARAMS: (f64, f64) = (1.13, 2.8e-6);
/// Starting separation.
pub const FIG6_RHO0: f64 = 1.5;

/// Result of the avoided-crossing simulation.
#[derive(Debug, Clone)]
pub struct CrossingRun {
    pub trajectory: Trajectory,
    /// `[psi_1, psi_2]` labels in the reference scan.
    pub labels: [usize; 2],
    /// Radius of the smallest `psi_1`-`psi_2` gap.
    pub crossing_rho: f64,
    pub crossing_gap: f64,
}

/// Releases the pair at rest at `rho0` in `psi_2`, the upper surface of the
/// avoided crossing with the well state, and propagates it. With
/// `first_passage_only` the run ends at the inner turning point after the
/// crossing has been passed; otherwise it runs to `tau_max` or a domain exit.
pub fn run_crossing(params: ModelParams, rho0: f64, config: &DynamicsConfig, first_passage_only: bool) -> Result<CrossingRun> {
    let model = InteractionModel::<f64>::new(params)?;
    let scan = SurfaceScan::build(&model, Grid::radial(0.7, 6.0, 4000, 0.0), 0)?;
    let well = find_well_state(&model, &scan)?;
    let (partner, gap, crossing_rho) = avoided_crossing_partner(&model, &scan, well.surface_label, (1.2, 1.5))?;
    let labels = [well.surface_label, partner];
    let (state, tracker) = initial_state(&model, &scan, partner, rho0)?;
    let trajectory = run(&model, state, tracker, &labels, config, |s, prev| {
        let passed = s.rho < crossing_rho;
        let turning = prev.last().is_some_and(|p| p.rho < s.rho);
        first_passage_only && passed && turning
    })?;
    Ok(CrossingRun {
        trajectory,
        labels,
        crossing_rho,
        crossing_gap: gap,
    })
}

/// The reference run: `Delta = -1.13 |delta|`, `kappa = 2.8e-6`, start at
/// `1.5 R0`, stopped after the first passage.
pub fn run_fig6(config: &DynamicsConfig) -> Result<CrossingRun> {
    run_crossing(ModelParams::new(FIG6_PARAMS.0, FIG6_PARAMS.1)?, FIG6_RHO0, config, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_integral_matches_quadrature() {
        for (w, t) in [(0.0, 0.3), (1e-7, 0.2), (2.0, 0.7), (-3.5, 0.1)] {
            let n = 20000;
            let h = t / n as f64;
            let mut acc = C::new(0.0, 0.0);
            for k in 0..n {
                let s = (k as f64 + 0.5) * h;
                acc += C::new((w * s).cos(), (w * s).sin()) * h;
            }
            let exact = phase_integral(w, t);
            assert!((exact - acc).norm() < 1e-9, "w={w} t={t}");
        }
    }

    #[test]
    fn config_limits() {
        let mut c = DynamicsConfig::default();
        assert!(c.validate().is_ok());
        c.tau_max = 1200.0;
        assert!(c.validate().is_err());
        c.allow_long = true;
        assert!(c.validate().is_ok());
        let parsed: std::result::Result<DynamicsConfig, _> = serde_json::from_str(r#"{"dt": 0.01, "bogus": 1}"#);
        assert!(parsed.is_err());
    }
}
