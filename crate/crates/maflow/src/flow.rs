//! Time integration of the two Monge-Ampère flows.
//!
//! The plain flow evolves a potential by the log of its Monge-Ampère density
//! against the target density,
//!
//! ```text
//!   d phi / dt = log( det(omega_t + i d dbar phi) / Omega ),   phi(0) = 0,
//! ```
//!
//! with the reference form sliding along the pencil
//! `omega_t = omega_inf + e^{-t} chi`. The damped flow subtracts `phi` on the
//! right-hand side. Both are integrated by the classical four-stage explicit
//! Runge-Kutta method on the spectrally discretized system.
//!
//! Step control combines three guards:
//!
//! * a frozen-coefficient stability cap `dt <= cfl * g_min / (pi^2 2n (N/2-1)^2)`
//!   tracking the smallest metric eigenvalue (explicit stepping on the
//!   log-det right-hand side is diffusion-stiff, so the usable step scales
//!   with the metric floor);
//! * a positivity guard: any Runge-Kutta stage whose metric dips to the
//!   configured eigenvalue floor aborts the step and the driver retreats by
//!   the `safety` factor (the continuum flows preserve positivity, so a
//!   breach is a discretization artifact and shrinking `dt` is the faithful
//!   response);
//! * an increment bound used by [`adapt_dt`].
//!
//! A run is strictly sequential and bitwise deterministic for a fixed
//! configuration.

use rustfft::num_complex::Complex64;

use crate::energy::{make_record, EnergyRecord};
use crate::error::{Error, Result};
use crate::fastmath::fast_ln;
use crate::forms::{metric_field, Pencil};
use crate::grid::{Grid, ScalarField};
use crate::hermitian::{component_count, HermitianField, HermitianMatrix};
use crate::spectral::{
    apply_hessian_diag, apply_hessian_offdiag_im, apply_hessian_offdiag_re, filter_hessian_2d,
    forward, inverse_real, Workspace,
};

const PI: f64 = std::f64::consts::PI;

/// Which of the two flows to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// `d phi/dt = log(det/Omega)`
    Plain,
    /// `d phi/dt = log(det/Omega) - phi`
    Damped,
}

/// Integration parameters. [`FlowConfig::new`] fills the defaults used by the
/// shipped scenarios; everything is overridable.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub t_end: f64,
    /// Initial step; default `min(0.25 / N^2, 1e-2)`.
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Positivity threshold for the metric eigenvalues.
    pub eig_floor: f64,
    /// Step-retreat factor on a positivity failure.
    pub safety: f64,
    /// Stability number for the frozen-coefficient cap (the RK4 real-axis
    /// stability interval ends at 2.785).
    pub cfl: f64,
    /// Sup-norm bound on a trial stage increment in [`adapt_dt`].
    pub max_increment: f64,
    /// Record cadence in accepted steps.
    pub record_every: usize,
    /// Times at which potential snapshots are stored. Clipped to `[0, t_end]`
    /// and always extended by `t_end` itself.
    pub checkpoint_times: Vec<f64>,
    /// Starting potential; the flows are defined with `phi(0) = 0` and that
    /// is the default.
    pub initial_potential: Option<ScalarField>,
}

impl FlowConfig {
    pub fn new(kind: FlowKind, grid: &Grid, t_end: f64) -> Self {
        let n2 = (grid.res() * grid.res()) as f64;
        let dt0 = (0.25 / n2).min(1e-2);
        FlowConfig {
            kind,
            t_end,
            dt0,
            dt_min: dt0 * 2f64.powi(-20),
            dt_max: 1e-2,
            eig_floor: 1e-8,
            safety: 0.5,
            cfl: 2.4,
            max_increment: 0.5,
            record_every: 50,
            checkpoint_times: vec![0.0, 1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            initial_potential: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt0 && self.dt0 <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt0 <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt0, self.dt_max
            ));
        }
        if !(self.eig_floor > 0.0) {
            return bad("eig_floor must be positive".into());
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad("safety must lie in (0, 1)".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= 2.785) {
            return bad("cfl must lie in (0, 2.785]".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

/// The integrator state at one accepted time.
#[derive(Debug, Clone)]
pub struct FlowState {
    t: f64,
    phi: ScalarField,
    phi_dot: ScalarField,
    metric: HermitianField,
    step_count: usize,
}

impl FlowState {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    /// Cached right-hand side at `(t, phi)`.
    pub fn phi_dot(&self) -> &ScalarField {
        &self.phi_dot
    }

    /// Cached metric coefficient field at `(t, phi)`.
    pub fn metric(&self) -> &HermitianField {
        &self.metric
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn min_metric_eigenvalue(&self) -> f64 {
        self.metric.min_eigenvalue()
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    PositivityBreakdown,
    StepUnderflow,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedEnd => "reached_t_end",
            Termination::PositivityBreakdown => "positivity_breakdown",
            Termination::StepUnderflow => "step_underflow",
        }
    }
}

/// Output of a run: the diagnostic time series, potential snapshots at the
/// requested times, and bookkeeping about how the integration went.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub records: Vec<EnergyRecord>,
    pub checkpoints: Vec<(f64, ScalarField)>,
    pub termination: Termination,
    /// Smallest metric eigenvalue seen at any accepted state.
    pub min_eigenvalue_seen: f64,
    pub steps: usize,
    pub positivity_retreats: usize,
    pub final_state: FlowState,
}

/// Right-hand side of the chosen flow at `(t, phi)`:
/// `log(det(omega_t + i d dbar phi)/Omega)`, minus `phi` for the damped kind.
/// Errors if the density is non-positive anywhere.
pub fn rhs(kind: FlowKind, pencil: &Pencil, t: f64, phi: &ScalarField) -> Result<ScalarField> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let omega_t = pencil.reference_form_at(t)?;
    let g = metric_field(&omega_t, phi)?;
    let det = g.det_field();
    let min_det = det.min();
    if min_det <= 0.0 {
        return Err(Error::SingularMetric(min_det));
    }
    let omega = pencil.density();
    let mut values: Vec<f64> = det
        .values()
        .iter()
        .zip(omega.values())
        .map(|(&d, &o)| fast_ln(d / o))
        .collect();
    if kind == FlowKind::Damped {
        for (v, p) in values.iter_mut().zip(phi.values()) {
            *v -= p;
        }
    }
    ScalarField::from_values(phi.grid().clone(), values)
}

/// Frozen-coefficient stability cap for the explicit integrator.
fn cfl_cap(config: &FlowConfig, grid: &Grid, g_min: f64) -> f64 {
    let kmax = (grid.res() / 2 - 1) as f64;
    let lambda = PI * PI * (grid.axes() as f64) * kmax * kmax;
    (config.cfl * g_min.max(config.eig_floor) / lambda).max(config.dt_min)
}

/// Largest step `dt <= dt_max` (and at least `dt_min`) such that a forward
/// trial stage keeps the metric above the eigenvalue floor and the stage
/// increment below the configured sup bound, found by retreating with the
/// `safety` factor. The frozen-coefficient stability cap is applied on top of
/// `dt_max`: without it the explicit scheme amplifies rounding noise in the
/// top modes no matter how tame the trial stage looks.
pub fn adapt_dt(
    state: &FlowState,
    proposed_dt: f64,
    config: &FlowConfig,
    pencil: &Pencil,
) -> Result<f64> {
    let grid = state.phi.grid();
    let cap = config
        .dt_max
        .min(cfl_cap(config, grid, state.min_metric_eigenvalue()));
    let mut dt = proposed_dt.clamp(config.dt_min, cap.max(config.dt_min));
    let sup_rate = state.phi_dot.sup_abs();
    loop {
        let increment_ok = dt * sup_rate <= config.max_increment;
        let positivity_ok = if increment_ok {
            let mut trial = state.phi.clone();
            trial.axpy(dt, &state.phi_dot);
            let omega_t = pencil.reference_form_at(state.t + dt)?;
            let g = metric_field(&omega_t, &trial)?;
            g.min_eigenvalue() > config.eig_floor
        } else {
            false
        };
        if increment_ok && positivity_ok {
            return Ok(dt);
        }
        if dt <= config.dt_min {
            return Ok(config.dt_min);
        }
        dt = (dt * config.safety).max(config.dt_min);
    }
}

/// Advance one classical RK4 step. Re-verifies positivity on every internal
/// stage and on the new state; the returned state has its right-hand side and
/// metric caches refreshed.
pub fn step_rk4(
    state: &FlowState,
    dt: f64,
    config: &FlowConfig,
    pencil: &Pencil,
) -> Result<FlowState> {
    if !(dt > 0.0) || dt < config.dt_min || dt > config.dt_max {
        return Err(Error::InvalidConfig(format!(
            "step {dt} outside [{}, {}]",
            config.dt_min, config.dt_max
        )));
    }
    let mut engine = Engine::new(pencil, config)?;
    engine.load_state(state)?;
    engine.try_step(dt)?;
    Ok(engine.materialize_state(state.step_count + 1))
}

/// Build the `t = 0` state of a configured run (the flows start at zero
/// potential unless the configuration overrides it).
pub fn initial_state(config: &FlowConfig, pencil: &Pencil) -> Result<FlowState> {
    let mut engine = Engine::new(pencil, config)?;
    let phi0 = match &config.initial_potential {
        Some(p) => {
            pencil.grid().check_same(p.grid())?;
            p.clone()
        }
        None => ScalarField::zeros(pencil.grid().clone()),
    };
    engine.initialize(&phi0)?;
    Ok(engine.materialize_state(0))
}

/// Integrate from `phi(0)` (zero unless overridden) to `t_end`, producing the
/// diagnostic trace. Deterministic for a fixed configuration.
pub fn run_flow(config: &FlowConfig, pencil: &Pencil) -> Result<FlowTrace> {
    config.validate()?;
    let grid = pencil.grid().clone();
    let mut engine = Engine::new(pencil, config)?;

    let phi0 = match &config.initial_potential {
        Some(p) => {
            grid.check_same(p.grid())?;
            p.clone()
        }
        None => ScalarField::zeros(grid.clone()),
    };
    engine.initialize(&phi0)?;

    // checkpoint schedule: configured times clipped into [0, t_end], plus t_end
    let mut events: Vec<f64> = config
        .checkpoint_times
        .iter()
        .copied()
        .filter(|&t| t >= 0.0 && t <= config.t_end)
        .chain(std::iter::once(config.t_end))
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut records: Vec<EnergyRecord> = Vec::new();
    let mut checkpoints: Vec<(f64, ScalarField)> = Vec::new();
    let mut retreats = 0usize;
    let mut retreat_scale = 1.0f64;
    let mut steps = 0usize;
    let mut min_eig_seen = engine.g_min;
    let mut last_dt = config.dt0;
    let mut next_event = 0usize;

    records.push(make_record(&engine.materialize_state(0), pencil, config.dt0)?);
    while next_event < events.len() && events[next_event] <= 1e-12 {
        checkpoints.push((0.0, phi0.clone()));
        next_event += 1;
    }

    let termination = loop {
        if engine.t >= config.t_end - 1e-12 {
            break Termination::ReachedEnd;
        }
        // stability-tracking nominal step, shrunk while retreating
        let nominal = (config.dt0.max(cfl_cap(config, &grid, engine.g_min)) * retreat_scale)
            .clamp(config.dt_min, config.dt_max);
        let mut dt = nominal;
        let mut clipped = false;
        if next_event < events.len() {
            let gap = events[next_event] - engine.t;
            if gap <= dt * (1.0 + 1e-9) {
                dt = gap;
                clipped = true;
            }
        }

        match engine.try_step(dt) {
            Ok(()) => {
                steps += 1;
                if clipped {
                    engine.t = events[next_event];
                }
                min_eig_seen = min_eig_seen.min(engine.g_min);
                last_dt = dt;
                // slow recovery of the retreat factor
                if retreat_scale < 1.0 && steps % 64 == 0 {
                    retreat_scale = (retreat_scale * 2.0).min(1.0);
                }
                if clipped {
                    checkpoints.push((engine.t, engine.phi_field()));
                    next_event += 1;
                }
                if steps % config.record_every == 0 {
                    records.push(make_record(&engine.materialize_state(steps), pencil, last_dt)?);
                }
            }
            Err(Error::Positivity { .. }) | Err(Error::SingularMetric(_)) => {
                retreats += 1;
                if dt <= config.dt_min * (1.0 + 1e-12) {
                    break Termination::StepUnderflow;
                }
                retreat_scale *= config.safety;
                if nominal * config.safety < config.dt_min {
                    break Termination::StepUnderflow;
                }
            }
            Err(e) => return Err(e),
        }
    };

    let final_state = engine.materialize_state(steps);
    if records.last().map(|r| r.t) != Some(final_state.t) {
        records.push(make_record(&final_state, pencil, last_dt)?);
    }

    Ok(FlowTrace {
        records,
        checkpoints,
        termination,
        min_eigenvalue_seen: min_eig_seen,
        steps,
        positivity_retreats: retreats,
        final_state,
    })
}

// ---------------------------------------------------------------------------
// engine internals
// ---------------------------------------------------------------------------

/// Preassembled pencil data and reusable buffers. The state is kept as the
/// potential, its velocity (the cached right-hand side) and the Hessian of
/// the potential, all in physical space; each stage derivative costs one
/// forward transform plus one inverse per Hessian component.
struct Engine<'p> {
    pencil: &'p Pencil,
    kind: FlowKind,
    eig_floor: f64,
    grid: Grid,
    ncomp: usize,
    ws: Workspace,
    // pencil precomputes
    a_inf: HermitianMatrix,
    a_chi: HermitianMatrix,
    h_inf: Vec<Vec<f64>>,
    h_chi: Vec<Vec<f64>>,
    log_density: Vec<f64>,
    // committed state
    t: f64,
    phi: Vec<f64>,
    k1: Vec<f64>,
    h_phi: Vec<Vec<f64>>,
    g_min: f64,
    // staging buffers
    k_prev: Vec<f64>,
    k_out: Vec<f64>,
    k_acc: Vec<f64>,
    h_k: Vec<Vec<f64>>,
    phi_next: Vec<f64>,
    h_phi_next: Vec<Vec<f64>>,
    k1_next: Vec<f64>,
}

impl<'p> Engine<'p> {
    fn new(pencil: &'p Pencil, config: &FlowConfig) -> Result<Self> {
        let grid = pencil.grid().clone();
        let m = grid.samples();
        let ncomp = component_count(grid.n());
        let h_inf = pencil.omega_inf().potential_hessian().components().to_vec();
        let h_chi = pencil.chi().potential_hessian().components().to_vec();
        let log_density = pencil.density().values().iter().map(|&v| v.ln()).collect();
        Ok(Engine {
            pencil,
            kind: config.kind,
            eig_floor: config.eig_floor,
            ws: Workspace::new(&grid),
            a_inf: *pencil.omega_inf().matrix(),
            a_chi: *pencil.chi().matrix(),
            h_inf,
            h_chi,
            log_density,
            t: 0.0,
            phi: vec![0.0; m],
            k1: vec![0.0; m],
            h_phi: vec![vec![0.0; m]; ncomp],
            g_min: f64::INFINITY,
            k_prev: vec![0.0; m],
            k_out: vec![0.0; m],
            k_acc: vec![0.0; m],
            h_k: vec![vec![0.0; m]; ncomp],
            phi_next: vec![0.0; m],
            h_phi_next: vec![vec![0.0; m]; ncomp],
            k1_next: vec![0.0; m],
            grid,
            ncomp,
        })
    }

    /// Set the state to `(0, phi0)` and fill the caches.
    fn initialize(&mut self, phi0: &ScalarField) -> Result<()> {
        self.t = 0.0;
        self.phi.copy_from_slice(phi0.values());
        let src = self.phi.clone();
        self.hessian_of(&src, HBuf::Phi);
        self.g_min = self.refresh_cache(0.0)?;
        Ok(())
    }

    /// Adopt an externally supplied state (for the single-step entry point).
    /// The velocity cache is recomputed rather than trusted.
    fn load_state(&mut self, state: &FlowState) -> Result<()> {
        self.grid.check_same(state.phi.grid())?;
        self.t = state.t;
        self.phi.copy_from_slice(state.phi.values());
        let src = self.phi.clone();
        self.hessian_of(&src, HBuf::Phi);
        self.g_min = self.refresh_cache(self.t)?;
        Ok(())
    }

    fn phi_field(&self) -> ScalarField {
        ScalarField::from_values(self.grid.clone(), self.phi.clone())
            .expect("committed state is finite")
    }

    fn materialize_state(&self, step_count: usize) -> FlowState {
        let m = self.grid.samples();
        let et = (-self.t).exp();
        let a_t = base_matrix(&self.a_inf, &self.a_chi, et);
        let mut comps = Vec::with_capacity(self.ncomp);
        for c in 0..self.ncomp {
            let ac = matrix_component(&a_t, c);
            let mut v = vec![0.0f64; m];
            for i in 0..m {
                v[i] = ac + self.h_inf[c][i] + et * self.h_chi[c][i] + self.h_phi[c][i];
            }
            comps.push(v);
        }
        let metric = HermitianField::from_components(self.grid.clone(), comps);
        FlowState {
            t: self.t,
            phi: self.phi_field(),
            phi_dot: ScalarField::from_values(self.grid.clone(), self.k1.clone())
                .expect("cached velocity is finite"),
            metric,
            step_count,
        }
    }

    /// One attempted RK4 step; commits the state only if every stage and the
    /// final state stay above the eigenvalue floor.
    fn try_step(&mut self, dt: f64) -> Result<()> {
        // stage 2: k2 = f(t + dt/2, phi + dt/2 k1); k_prev holds the stage
        // input, k_out receives the stage derivative, then they swap
        self.k_prev.copy_from_slice(&self.k1);
        self.k_acc.copy_from_slice(&self.k1);
        self.hessian_of_prev();
        self.eval_stage(self.t + 0.5 * dt, 0.5 * dt)?;
        std::mem::swap(&mut self.k_prev, &mut self.k_out);

        // stage 3: k3 = f(t + dt/2, phi + dt/2 k2)
        self.hessian_of_prev();
        accumulate(&mut self.k_acc, 2.0, &self.k_prev);
        self.eval_stage(self.t + 0.5 * dt, 0.5 * dt)?;
        std::mem::swap(&mut self.k_prev, &mut self.k_out);

        // stage 4: k4 = f(t + dt, phi + dt k3)
        self.hessian_of_prev();
        accumulate(&mut self.k_acc, 2.0, &self.k_prev);
        self.eval_stage(self.t + dt, dt)?;
        std::mem::swap(&mut self.k_prev, &mut self.k_out);

        accumulate(&mut self.k_acc, 1.0, &self.k_prev);

        // combine, then rebuild the potential Hessian from phi_next itself so
        // the cached Hessian is exactly the transform of the committed state
        let w = dt / 6.0;
        for i in 0..self.phi.len() {
            self.phi_next[i] = self.phi[i] + w * self.k_acc[i];
        }
        {
            let src = std::mem::take(&mut self.phi_next);
            self.hessian_of_next(&src);
            self.phi_next = src;
        }
        let g_min = self.next_cache(self.t + dt)?;

        // commit
        std::mem::swap(&mut self.phi, &mut self.phi_next);
        std::mem::swap(&mut self.h_phi, &mut self.h_phi_next);
        std::mem::swap(&mut self.k1, &mut self.k1_next);
        self.t += dt;
        self.g_min = g_min;
        Ok(())
    }

    /// Evaluate the right-hand side at the stage `phi + c * k_prev` and time
    /// `t_stage`, writing into `k_out`. `h_k` must hold the Hessian of
    /// `k_prev`. Errors if the stage metric touches the eigenvalue floor.
    fn eval_stage(&mut self, t_stage: f64, c: f64) -> Result<()> {
        let et = (-t_stage).exp();
        let a_t = base_matrix(&self.a_inf, &self.a_chi, et);
        let g_min = if self.grid.n() == 1 {
            kernels::stage_rhs_n1(
                &mut self.k_out,
                matrix_component(&a_t, 0),
                et,
                &self.h_inf[0],
                &self.h_chi[0],
                &self.h_phi[0],
                Some((&self.h_k[0], c)),
                &self.log_density,
                damp_args(self.kind, &self.phi, &self.k_prev, c),
            )
        } else {
            kernels::stage_rhs_n2(
                &mut self.k_out,
                &a_t,
                et,
                &self.h_inf,
                &self.h_chi,
                &self.h_phi,
                Some((&self.h_k, c)),
                &self.log_density,
                damp_args(self.kind, &self.phi, &self.k_prev, c),
            )
        };
        if g_min <= self.eig_floor {
            return Err(Error::Positivity {
                min_eig: g_min,
                floor: self.eig_floor,
            });
        }
        Ok(())
    }

    /// Spectral Hessian of `k_prev` into the stage-Hessian buffer.
    fn hessian_of_prev(&mut self) {
        let src = std::mem::take(&mut self.k_prev);
        self.hessian_of(&src, HBuf::K);
        self.k_prev = src;
    }

    /// Spectral Hessian of the candidate potential into `h_phi_next`.
    fn hessian_of_next(&mut self, src: &[f64]) {
        self.hessian_of(src, HBuf::PhiNext);
    }

    /// Right-hand side at the committed state `(t_new, phi, h_phi)`, into the
    /// `k1` cache. Returns the minimum metric eigenvalue.
    fn refresh_cache(&mut self, t_new: f64) -> Result<f64> {
        let et = (-t_new).exp();
        let a_t = base_matrix(&self.a_inf, &self.a_chi, et);
        let mut out = std::mem::take(&mut self.k1);
        let g_min = if self.grid.n() == 1 {
            kernels::stage_rhs_n1(
                &mut out,
                matrix_component(&a_t, 0),
                et,
                &self.h_inf[0],
                &self.h_chi[0],
                &self.h_phi[0],
                None,
                &self.log_density,
                damp_args(self.kind, &self.phi, &[], 0.0),
            )
        } else {
            kernels::stage_rhs_n2(
                &mut out,
                &a_t,
                et,
                &self.h_inf,
                &self.h_chi,
                &self.h_phi,
                None,
                &self.log_density,
                damp_args(self.kind, &self.phi, &[], 0.0),
            )
        };
        self.k1 = out;
        if g_min <= self.eig_floor {
            return Err(Error::Positivity {
                min_eig: g_min,
                floor: self.eig_floor,
            });
        }
        Ok(g_min)
    }

    /// Right-hand side at the candidate state `(t_new, phi_next, h_phi_next)`,
    /// into `k1_next`. Returns the minimum metric eigenvalue.
    fn next_cache(&mut self, t_new: f64) -> Result<f64> {
        let et = (-t_new).exp();
        let a_t = base_matrix(&self.a_inf, &self.a_chi, et);
        let mut out = std::mem::take(&mut self.k1_next);
        let g_min = if self.grid.n() == 1 {
            kernels::stage_rhs_n1(
                &mut out,
                matrix_component(&a_t, 0),
                et,
                &self.h_inf[0],
                &self.h_chi[0],
                &self.h_phi_next[0],
                None,
                &self.log_density,
                damp_args(self.kind, &self.phi_next, &[], 0.0),
            )
        } else {
            kernels::stage_rhs_n2(
                &mut out,
                &a_t,
                et,
                &self.h_inf,
                &self.h_chi,
                &self.h_phi_next,
                None,
                &self.log_density,
                damp_args(self.kind, &self.phi_next, &[], 0.0),
            )
        };
        self.k1_next = out;
        if g_min <= self.eig_floor {
            return Err(Error::Positivity {
                min_eig: g_min,
                floor: self.eig_floor,
            });
        }
        Ok(g_min)
    }

    /// Spectral Hessian of `src` into the selected component buffer.
    fn hessian_of(&mut self, src: &[f64], which: HBuf) {
        if self.grid.n() == 1 {
            let out = match which {
                HBuf::Phi => &mut self.h_phi,
                HBuf::PhiNext => &mut self.h_phi_next,
                HBuf::K => &mut self.h_k,
            };
            filter_hessian_2d(&self.grid, src, &mut out[0], &mut self.ws);
            return;
        }
        let out = match which {
            HBuf::Phi => &mut self.h_phi,
            HBuf::PhiNext => &mut self.h_phi_next,
            HBuf::K => &mut self.h_k,
        };
        let mut spec = std::mem::take(&mut self.ws.spec);
        forward(&self.grid, src, &mut spec, &mut self.ws);
        {
            let mut work = std::mem::take(&mut self.ws.spec2);
            for j in 0..2 {
                work.copy_from_slice(&spec);
                apply_hessian_diag(&self.grid, &mut work, j);
                inverse_real(&self.grid, &mut work, &mut out[j], &mut self.ws);
            }
            work.copy_from_slice(&spec);
            apply_hessian_offdiag_re(&self.grid, &mut work);
            inverse_real(&self.grid, &mut work, &mut out[2], &mut self.ws);
            work.copy_from_slice(&spec);
            apply_hessian_offdiag_im(&self.grid, &mut work);
            inverse_real(&self.grid, &mut work, &mut out[3], &mut self.ws);
            self.ws.spec2 = work;
        }
        self.ws.spec = spec;
        let _ = apply_hessian_diag;
    }
}

#[derive(Clone, Copy)]
enum HBuf {
    Phi,
    PhiNext,
    K,
}

fn damp_args<'a>(
    kind: FlowKind,
    phi: &'a [f64],
    k_prev: &'a [f64],
    c: f64,
) -> Option<(&'a [f64], &'a [f64], f64)> {
    match kind {
        FlowKind::Plain => None,
        FlowKind::Damped => Some((phi, k_prev, c)),
    }
}

fn base_matrix(a_inf: &HermitianMatrix, a_chi: &HermitianMatrix, et: f64) -> HermitianMatrix {
    a_inf
        .add(&a_chi.scaled(et))
        .expect("pencil matrices share a dimension")
}

fn matrix_component(a: &HermitianMatrix, c: usize) -> f64 {
    match a {
        HermitianMatrix::Dim1(v) => *v,
        HermitianMatrix::Dim2 { a11, a22, a12 } => match c {
            0 => *a11,
            1 => *a22,
            2 => a12.re,
            _ => a12.im,
        },
    }
}

fn accumulate(acc: &mut [f64], w: f64, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += w * b;
    }
}

fn accumulate_split(acc: &mut [Vec<f64>], c: usize, w: f64, src: &[Vec<f64>]) {
    for (a, b) in acc[c].iter_mut().zip(&src[c]) {
        *a += w * b;
    }
}

/// Fused per-sample kernels: assemble the stage metric, track its smallest
/// eigenvalue, and evaluate the log right-hand side in one pass. Written
/// chunk-wise so the whole loop (including the branch-free log) vectorizes.
mod kernels {
    use super::{fast_ln, Complex64, HermitianMatrix};

    const LANES: usize = 8;

    /// n = 1. Returns the minimum metric value (= eigenvalue). The output is
    /// garbage wherever the metric is non-positive; callers treat the
    /// returned minimum as the validity gate. Written as exact-chunk slice
    /// zips so the assembly, the min reduction and the branch-free log all
    /// vectorize.
    #[allow(clippy::too_many_arguments)]
    pub(super) fn stage_rhs_n1(
        out: &mut [f64],
        a_t: f64,
        et: f64,
        h_inf: &[f64],
        h_chi: &[f64],
        h_phi: &[f64],
        h_extra: Option<(&[f64], f64)>,
        log_density: &[f64],
        damp: Option<(&[f64], &[f64], f64)>,
    ) -> f64 {
        let m = out.len();
        let mut mins = [f64::INFINITY; LANES];
        let (h_k, c) = h_extra.unwrap_or((h_phi, 0.0));
        let chunks = m / LANES;
        let head = chunks * LANES;
        match damp {
            None => {
                let it = out[..head]
                    .chunks_exact_mut(LANES)
                    .zip(h_inf[..head].chunks_exact(LANES))
                    .zip(h_chi[..head].chunks_exact(LANES))
                    .zip(h_phi[..head].chunks_exact(LANES))
                    .zip(h_k[..head].chunks_exact(LANES))
                    .zip(log_density[..head].chunks_exact(LANES));
                for (((((o, hi), hc), hp), hk), ld) in it {
                    for l in 0..LANES {
                        let g = a_t + hi[l] + et * hc[l] + hp[l] + c * hk[l];
                        mins[l] = if g < mins[l] { g } else { mins[l] };
                        o[l] = fast_ln(g) - ld[l];
                    }
                }
                for i in head..m {
                    let g = a_t + h_inf[i] + et * h_chi[i] + h_phi[i] + c * h_k[i];
                    mins[0] = if g < mins[0] { g } else { mins[0] };
                    out[i] = fast_ln(g) - log_density[i];
                }
            }
            Some((phi, k_prev, cc)) => {
                let it = out[..head]
                    .chunks_exact_mut(LANES)
                    .zip(h_inf[..head].chunks_exact(LANES))
                    .zip(h_chi[..head].chunks_exact(LANES))
                    .zip(h_phi[..head].chunks_exact(LANES))
                    .zip(h_k[..head].chunks_exact(LANES))
                    .zip(log_density[..head].chunks_exact(LANES))
                    .zip(phi[..head].chunks_exact(LANES));
                if cc == 0.0 {
                    for ((((((o, hi), hc), hp), hk), ld), ph) in it {
                        for l in 0..LANES {
                            let g = a_t + hi[l] + et * hc[l] + hp[l] + c * hk[l];
                            mins[l] = if g < mins[l] { g } else { mins[l] };
                            o[l] = fast_ln(g) - ld[l] - ph[l];
                        }
                    }
                    for i in head..m {
                        let g = a_t + h_inf[i] + et * h_chi[i] + h_phi[i] + c * h_k[i];
                        mins[0] = if g < mins[0] { g } else { mins[0] };
                        out[i] = fast_ln(g) - log_density[i] - phi[i];
                    }
                } else {
                    let it = it.zip(k_prev[..head].chunks_exact(LANES));
                    for (((((((o, hi), hc), hp), hk), ld), ph), kp) in it {
                        for l in 0..LANES {
                            let g = a_t + hi[l] + et * hc[l] + hp[l] + c * hk[l];
                            mins[l] = if g < mins[l] { g } else { mins[l] };
                            o[l] = fast_ln(g) - ld[l] - (ph[l] + cc * kp[l]);
                        }
                    }
                    for i in head..m {
                        let g = a_t + h_inf[i] + et * h_chi[i] + h_phi[i] + c * h_k[i];
                        mins[0] = if g < mins[0] { g } else { mins[0] };
                        out[i] = fast_ln(g) - log_density[i] - (phi[i] + cc * k_prev[i]);
                    }
                }
            }
        }
        mins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// n = 2. Same contract with the closed-form 2x2 smallest eigenvalue.
    #[allow(clippy::too_many_arguments)]
    pub(super) fn stage_rhs_n2(
        out: &mut [f64],
        a_t: &HermitianMatrix,
        et: f64,
        h_inf: &[Vec<f64>],
        h_chi: &[Vec<f64>],
        h_phi: &[Vec<f64>],
        h_extra: Option<(&[Vec<f64>], f64)>,
        log_density: &[f64],
        damp: Option<(&[f64], &[f64], f64)>,
    ) -> f64 {
        let (a11, a22, a12) = match a_t {
            HermitianMatrix::Dim2 { a11, a22, a12 } => (*a11, *a22, *a12),
            HermitianMatrix::Dim1(_) => unreachable!("n = 2 kernel"),
        };
        let a12: Complex64 = a12;
        let m = out.len();
        let mut min_eig = f64::INFINITY;
        let (h_k, c) = match h_extra {
            Some((h, cc)) => (h, cc),
            None => (h_phi, 0.0),
        };
        for i in 0..m {
            let g11 = a11 + h_inf[0][i] + et * h_chi[0][i] + h_phi[0][i] + c * h_k[0][i];
            let g22 = a22 + h_inf[1][i] + et * h_chi[1][i] + h_phi[1][i] + c * h_k[1][i];
            let gre = a12.re + h_inf[2][i] + et * h_chi[2][i] + h_phi[2][i] + c * h_k[2][i];
            let gim = a12.im + h_inf[3][i] + et * h_chi[3][i] + h_phi[3][i] + c * h_k[3][i];
            let off = gre * gre + gim * gim;
            let det = g11 * g22 - off;
            let mid = 0.5 * (g11 + g22);
            let rad = (0.25 * (g11 - g22) * (g11 - g22) + off).sqrt();
            let eig = mid - rad;
            min_eig = if eig < min_eig { eig } else { min_eig };
            let mut v = fast_ln(det) - log_density[i];
            if let Some((phi, k_prev, cc)) = damp {
                v -= if cc == 0.0 { phi[i] } else { phi[i] + cc * k_prev[i] };
            }
            out[i] = v;
        }
        min_eig
    }
}
