//! Forward Euler integration of the local and nonlocal Klausmeier systems.
//!
//! Every accepted step is checked for nonnegativity of both components and
//! for the a priori water bound `‖w‖∞ ≤ max{‖w0‖∞, a}`. Roundoff-level
//! undershoots (down to `-NEGATIVE_TOLERANCE`) are clamped to zero and counted;
//! anything larger aborts the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, SetupError, StepFailure, Violation};
use crate::grid::{linf_norm, Field, GridSpec};
use crate::kernel::{DiscreteKernel, NonlocalMethod};
use crate::localop::{advection_x, laplacian_neumann};
use crate::reaction::{f_kinetics, g_kinetics, ModelMode, ModelParams};

pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
pub const SUP_BOUND_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step_index: u64,
    pub n: Field,
    pub w: Field,
}

impl SimState {
    pub fn new(n: Field, w: Field) -> Result<Self, SetupError> {
        n.check_same_grid(&w)?;
        Ok(Self {
            t: 0.0,
            step_index: 0,
            n,
            w,
        })
    }

    /// Spatially uniform state `(n, w)`.
    pub fn uniform(grid: GridSpec, n: f64, w: f64) -> Self {
        Self {
            t: 0.0,
            step_index: 0,
            n: Field::constant(grid, n),
            w: Field::constant(grid, w),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.n.grid()
    }
}

/// Per-term explicit step limits. Terms that are absent are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityLimits {
    pub diffusion: Option<f64>,
    pub advection: Option<f64>,
    pub nonlocal: Option<f64>,
    pub kinetics: f64,
    /// Largest step for which one Euler update keeps both fields nonnegative.
    pub positivity: f64,
}

impl StabilityLimits {
    pub fn min(&self) -> f64 {
        [
            self.diffusion,
            self.advection,
            self.nonlocal,
            Some(self.kinetics),
            Some(self.positivity),
        ]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min)
    }

    /// Smallest of the limits coming from the linear spatial operators.
    pub fn min_linear(&self) -> f64 {
        [self.diffusion, self.advection, self.nonlocal]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Explicit-scheme step limits for the given configuration and initial data.
///
/// * diffusion: `h²/(4d)` with `d = d2` (and `max(d1, d2)` in local mode)
/// * advection: `h/v`
/// * nonlocal: `1/(2 d1 λ_disc)`
/// * kinetics: `1/(2 r)` with `r = max(α, 1 + N², 2 W N)`
/// * positivity: `1/(1 + N² + v/h + 4 d2/h²)` for water and
///   `1/(α + d1 λ_disc)` (local: `1/(α + 4 d1/h²)`) for biomass
///
/// `N` and `W` come from [`kinetic_state_bounds`].
pub fn stability_limits(
    p: &ModelParams,
    g: &GridSpec,
    k: Option<&DiscreteKernel>,
    n0: &Field,
    w0: &Field,
) -> StabilityLimits {
    let h = g.hx().min(g.hy());
    let d = match p.mode {
        ModelMode::Local => p.d1.max(p.d2),
        ModelMode::Nonlocal => p.d2,
    };
    let diffusion = (d > 0.0).then(|| h * h / (4.0 * d));
    let advection = (p.v > 0.0).then(|| h / p.v);
    let lambda = match (p.mode, k) {
        (ModelMode::Nonlocal, Some(k)) => k.lambda_disc(),
        _ => 0.0,
    };
    let nonlocal = (lambda > 0.0).then(|| 1.0 / (2.0 * p.d1 * lambda));
    let (n_max, w_max) = kinetic_state_bounds(p, n0, w0);
    let rate = p.alpha.max(1.0 + n_max * n_max).max(2.0 * w_max * n_max);
    let water_drain = 1.0 + n_max * n_max + p.v / g.hx() + 4.0 * p.d2 / (h * h);
    let biomass_drain = p.alpha
        + match p.mode {
            ModelMode::Local => 4.0 * p.d1 / (h * h),
            ModelMode::Nonlocal => p.d1 * lambda,
        };
    StabilityLimits {
        diffusion,
        advection,
        nonlocal,
        kinetics: 1.0 / (2.0 * rate),
        positivity: 1.0 / water_drain.max(biomass_drain),
    }
}

/// Heuristic bounds `(N, W)` on `‖n‖∞` and `‖w‖∞` along a trajectory.
///
/// `W = max{‖w0‖∞, a}` is the water sup bound. Biomass grows until it has
/// absorbed the water it sits on, so `N = max{‖n0‖∞ + W, a / min{α, 1}}`.
/// Transport can carry extra water into a cell, so `N` is not a strict bound;
/// the integrator still rejects any step that breaks positivity.
pub fn kinetic_state_bounds(p: &ModelParams, n0: &Field, w0: &Field) -> (f64, f64) {
    let w_bound = linf_norm(w0).max(p.a);
    let n_bound = (linf_norm(n0) + w_bound).max(p.a / p.alpha.min(1.0));
    (n_bound, w_bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt: f64,
    pub t_end: f64,
    pub safety: f64,
    pub snapshot_stride: u64,
}

impl StepControl {
    /// Uses `safety * limit` as the time step.
    pub fn auto(
        limit: f64,
        t_end: f64,
        safety: f64,
        snapshot_stride: u64,
    ) -> Result<Self, SetupError> {
        Self::new(safety * limit, t_end, safety, snapshot_stride, limit)
    }

    /// Validates an explicit `dt` against `safety * limit`.
    pub fn new(
        dt: f64,
        t_end: f64,
        safety: f64,
        snapshot_stride: u64,
        limit: f64,
    ) -> Result<Self, SetupError> {
        let bad = |m: String| Err(SetupError::InvalidControl(m));
        if !(safety > 0.0 && safety <= 1.0) {
            return bad(format!("safety must lie in (0, 1] (got {safety})"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("dt must be positive (got {dt})"));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return bad(format!("t_end must be nonnegative (got {t_end})"));
        }
        if snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        if dt > safety * limit * (1.0 + 1e-12) {
            return bad(format!(
                "dt = {dt} exceeds safety * stability limit = {}",
                safety * limit
            ));
        }
        Ok(Self {
            dt,
            t_end,
            safety,
            snapshot_stride,
        })
    }

    /// Number of steps needed to reach `t_end` from `t0`; the last may be shorter.
    pub fn step_count(&self, t0: f64) -> u64 {
        if self.t_end <= t0 {
            0
        } else {
            ((self.t_end - t0) / self.dt - 1e-9).ceil().max(1.0) as u64
        }
    }
}

/// Summary statistics recorded with each snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub step_index: u64,
    pub t: f64,
    pub n_max: f64,
    pub w_max: f64,
    pub n_min: f64,
    pub w_min: f64,
    /// `∫(n + w)` over the domain.
    pub total_mass: f64,
    /// Cumulative count of roundoff-level negative values clamped to zero.
    pub clamped: u64,
}

impl Diagnostics {
    pub fn of(state: &SimState, clamped: u64) -> Self {
        Self {
            step_index: state.step_index,
            t: state.t,
            n_max: linf_norm(&state.n),
            w_max: linf_norm(&state.w),
            n_min: state.n.min(),
            w_min: state.w.min(),
            total_mass: state.n.integral() + state.w.integral(),
            clamped,
        }
    }
}

/// Receives snapshots during [`Integrator::run`].
pub trait SnapshotSink {
    fn snapshot(&mut self, state: &SimState, diagnostics: &Diagnostics) -> Result<(), Error>;
}

/// Sink that drops everything.
pub struct NullSink;

impl SnapshotSink for NullSink {
    fn snapshot(&mut self, _: &SimState, _: &Diagnostics) -> Result<(), Error> {
        Ok(())
    }
}

/// Sink that keeps every snapshot in memory.
#[derive(Default)]
pub struct MemorySink {
    pub states: Vec<SimState>,
}

impl SnapshotSink for MemorySink {
    fn snapshot(&mut self, state: &SimState, _: &Diagnostics) -> Result<(), Error> {
        self.states.push(state.clone());
        Ok(())
    }
}

impl<F> SnapshotSink for F
where
    F: FnMut(&SimState, &Diagnostics) -> Result<(), Error>,
{
    fn snapshot(&mut self, state: &SimState, diagnostics: &Diagnostics) -> Result<(), Error> {
        self(state, diagnostics)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_state: SimState,
    pub trace: Vec<Diagnostics>,
    pub clamped: u64,
}

/// Binds parameters, grid and (for the nonlocal model) a kernel.
pub struct Integrator<'k> {
    params: ModelParams,
    grid: GridSpec,
    kernel: Option<&'k DiscreteKernel>,
    method: NonlocalMethod,
    w_bound: f64,
}

impl<'k> Integrator<'k> {
    /// `w0` fixes the monitored water bound `max{‖w0‖∞, a}`.
    pub fn new(
        params: ModelParams,
        grid: GridSpec,
        kernel: Option<&'k DiscreteKernel>,
        w0: &Field,
    ) -> Result<Self, SetupError> {
        params.validate()?;
        match (params.mode, kernel) {
            (ModelMode::Nonlocal, Some(k)) if *k.grid() != grid => {
                return Err(SetupError::GridMismatch)
            }
            (ModelMode::Nonlocal, Some(_)) | (ModelMode::Local, None) => {}
            _ => return Err(SetupError::KernelModeMismatch),
        }
        if *w0.grid() != grid {
            return Err(SetupError::GridMismatch);
        }
        let needs_laplacian = params.d2 > 0.0 || params.mode == ModelMode::Local;
        if needs_laplacian && !grid.has_square_cells() {
            return Err(SetupError::NonSquareCells {
                hx: grid.hx(),
                hy: grid.hy(),
            });
        }
        Ok(Self {
            params,
            grid,
            kernel,
            method: NonlocalMethod::Auto,
            w_bound: linf_norm(w0).max(params.a),
        })
    }

    pub fn with_method(mut self, method: NonlocalMethod) -> Self {
        self.method = method;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The monitored bound `max{‖w0‖∞, a}`.
    pub fn water_bound(&self) -> f64 {
        self.w_bound
    }

    /// Biomass dispersal term `d1 Γn` or `d1 Δn`.
    fn dispersal(&self, n: &Field) -> Result<Field, SetupError> {
        match (self.params.mode, self.kernel) {
            (ModelMode::Nonlocal, Some(k)) => k.apply(n, self.method),
            _ => laplacian_neumann(n),
        }
    }

    /// One Forward Euler step. Returns the new state and the number of clamped values.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<(SimState, u64), StepFailure> {
        let next_index = state.step_index + 1;
        let next_t = state.t + dt;
        let fail = |violation| StepFailure {
            step_index: next_index,
            t: next_t,
            violation,
        };
        if *state.grid() != self.grid || *state.w.grid() != self.grid {
            return Err(fail(Violation::GridMismatch));
        }
        let p = &self.params;
        // Grid shape, cell aspect and v were validated in `new`.
        let disp = self.dispersal(&state.n).expect("validated operator inputs");
        let lap_w =
            (p.d2 > 0.0).then(|| laplacian_neumann(&state.w).expect("validated operator inputs"));
        let adv = advection_x(&state.w, p.v).expect("validated operator inputs");

        let len = self.grid.len();
        let (nv, wv) = (state.n.values(), state.w.values());
        let mut n_next = Vec::with_capacity(len);
        let mut w_next = Vec::with_capacity(len);
        for idx in 0..len {
            let (n, w) = (nv[idx], wv[idx]);
            let diff_w = lap_w.as_ref().map_or(0.0, |l| p.d2 * l.values()[idx]);
            n_next.push(n + dt * (p.d1 * disp.values()[idx] + f_kinetics(n, w, p)));
            w_next.push(w + dt * (diff_w + adv.values()[idx] + g_kinetics(n, w, p)));
        }

        let mut clamped = 0;
        for (name, values) in [("n", &mut n_next), ("w", &mut w_next)] {
            for (idx, v) in values.iter_mut().enumerate() {
                if !v.is_finite() {
                    return Err(fail(Violation::NonFinite {
                        field: name,
                        cell: self.grid.coords(idx),
                    }));
                }
                if *v < 0.0 {
                    if *v < -NEGATIVE_TOLERANCE {
                        return Err(fail(Violation::Negative {
                            field: name,
                            cell: self.grid.coords(idx),
                            value: *v,
                        }));
                    }
                    *v = 0.0;
                    clamped += 1;
                }
            }
        }
        let limit = self.w_bound + SUP_BOUND_TOLERANCE;
        if let Some((idx, &value)) = w_next.iter().enumerate().find(|(_, &v)| v > limit) {
            return Err(fail(Violation::SupBound {
                cell: self.grid.coords(idx),
                value,
                bound: self.w_bound,
            }));
        }

        Ok((
            SimState {
                t: next_t,
                step_index: next_index,
                n: Field::from_vec_unchecked(self.grid, n_next),
                w: Field::from_vec_unchecked(self.grid, w_next),
            },
            clamped,
        ))
    }

    /// Steps from `state0` to `ctl.t_end`, emitting snapshots at step 0, every
    /// `snapshot_stride` steps and at the final step.
    pub fn run(
        &self,
        state0: SimState,
        ctl: &StepControl,
        sink: &mut dyn SnapshotSink,
    ) -> Result<RunOutcome, Error> {
        let t0 = state0.t;
        let k0 = state0.step_index;
        let steps = ctl.step_count(t0);
        let mut clamped = 0;
        let mut trace = Vec::new();
        let mut state = state0;

        let d = Diagnostics::of(&state, clamped);
        sink.snapshot(&state, &d)?;
        trace.push(d);

        for k in 1..=steps {
            let dt = if k == steps {
                ctl.t_end - (t0 + (k - 1) as f64 * ctl.dt)
            } else {
                ctl.dt
            };
            let (mut next, c) = self.step(&state, dt)?;
            next.t = if k == steps {
                ctl.t_end
            } else {
                t0 + k as f64 * ctl.dt
            };
            clamped += c;
            state = next;
            if k % ctl.snapshot_stride == 0 || k == steps {
                let d = Diagnostics::of(&state, clamped);
                sink.snapshot(&state, &d)?;
                trace.push(d);
            }
        }
        debug_assert_eq!(state.step_index, k0 + steps);
        Ok(RunOutcome {
            final_state: state,
            trace,
            clamped,
        })
    }
}
