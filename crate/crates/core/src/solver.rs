//! Time integration of the regularized coupled system.
//!
//! One semi-implicit step from `(u^n, v^n)` iterates, for Picard sweeps `k`:
//!
//! ```text
//! (I + dt eps A_h - dt delta div(g(v^k) grad .)) u^{k+1} = u^n
//! (I - dt lambda Lap_h + dt delta (1 - lambda)) v^{k+1}
//!     = v^n + dt delta (1 - lambda) |grad u^{k+1}| + dt (1 - delta) grad v^n . grad lambda
//! ```
//!
//! until the successive-iterate change is below tolerance. Both systems are
//! symmetric positive definite (the `v` system after dividing its rows by
//! `lambda`) and are solved with preconditioned conjugate gradients. Testing
//! the `u` equation with `u^{k+1}` gives
//! `1/2 ||u^{n+1}||^2 + dt (delta g(v^k) grad u^{n+1}, grad u^{n+1}) <= 1/2 ||u^n||^2`
//! for every `dt`, which the trajectory diagnostics record step by step.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, l1_norm, l2_norm, GridSpec, ScalarField};
use crate::linsolve::solve_into;
pub use crate::linsolve::{solve_linear, LinearOperator, SolveStats};
use crate::model::ModelConfig;
use crate::operators::{
    gradient, gradient_magnitude, laplacian_into, laplacian_spectral_bound, operator_a_into, FaceAverage,
    FaceCoefficients,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Explicit,
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Picard stops once `||du|| + ||dv|| <= picard_tol * max(1, ||u|| + ||v||)`.
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Relative residual target of the conjugate-gradient solves.
    pub linsolve_tol: f64,
    pub linsolve_max: usize,
    pub face_average: FaceAverage,
    /// Keep every `snapshot_stride`-th state (the initial and final states are always kept).
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::SemiImplicit,
            picard_tol: 1e-10,
            picard_max: 50,
            linsolve_tol: 1e-10,
            linsolve_max: 20_000,
            face_average: FaceAverage::Arithmetic,
            snapshot_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(alloc::format!("solver: {what}")));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.picard_tol > 0.0 && self.linsolve_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.picard_max == 0 || self.linsolve_max == 0 || self.snapshot_stride == 0 {
            return bad("iteration caps and stride must be at least 1");
        }
        Ok(())
    }
}

/// `(u, v)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: ScalarField,
    pub v: ScalarField,
    pub t: f64,
}

impl State {
    pub fn new(u: ScalarField, v: ScalarField, t: f64) -> Result<Self> {
        u.spec().ensure_same(v.spec())?;
        Ok(Self { u, v, t })
    }

    pub fn spec(&self) -> &GridSpec {
        self.u.spec()
    }
}

/// What happened during one accepted (sub)step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepRecord {
    pub dt: f64,
    /// `(delta g(v^k) grad u^{n+1}, grad u^{n+1})` with the coefficient the step actually used.
    pub dissipation: f64,
    /// `Phi^2 = ||1 + sqrt(delta g(v)) |grad u|||^2`, with `sqrt(delta g) |grad u|`
    /// realized as the square root of the nodal dissipation density.
    pub phi_sq: f64,
    pub picard_iterations: usize,
    pub linear_iterations: usize,
}

/// Per-time-node diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub t: f64,
    /// Step that produced this node; zero for the initial node.
    pub step: StepRecord,
    pub u_l2: f64,
    pub v_l2: f64,
    /// `||grad v||`.
    pub v_h1: f64,
    /// `||grad u||_{L1}`.
    pub grad_u_l1: f64,
    pub v_min: f64,
}

impl Diagnostics {
    fn of(state: &State, step: StepRecord) -> Result<Self> {
        Ok(Self {
            t: state.t,
            step,
            u_l2: l2_norm(&state.u),
            v_l2: l2_norm(&state.v),
            v_h1: h1_seminorm(&state.v),
            grad_u_l1: l1_norm(&gradient_magnitude(&state.u)?),
            v_min: state.v.min(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Index into [`Trajectory::diagnostics`].
    pub node: usize,
    pub state: State,
}

/// Discrete trajectory on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub spec: GridSpec,
    pub delta: f64,
    pub epsilon: f64,
    /// Initial data before the `delta` scaling.
    pub u0: ScalarField,
    pub v0: ScalarField,
    pub diagnostics: Vec<Diagnostics>,
    pub snapshots: Vec<Snapshot>,
    /// Steps that needed the single `dt` halving.
    pub halvings: usize,
}

/// Running totals behind the energy and `Phi` bounds at one time node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    pub t: f64,
    /// `1/2 ||u(t)||^2 + sum dt (delta g grad u, grad u)`.
    pub energy: f64,
    /// `delta/2 ||u0||^2`.
    pub energy_bound: f64,
    /// `sum dt Phi^2`.
    pub phi_integral: f64,
    /// `t |Omega|`.
    pub phi_lower: f64,
    /// `2 t |Omega| + delta ||u0||^2 - ||u(t)||^2`.
    pub phi_upper: f64,
}

/// Boundedness proxies tracked along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundednessSummary {
    pub max_u_l2: f64,
    pub max_v_l2: f64,
    /// `sum dt ||grad v||^2`.
    pub v_h1_sq_integral: f64,
    /// `sum dt ||grad u||_{L1}^2`.
    pub grad_u_l1_sq_integral: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.t).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.diagnostics.last().map_or(0.0, |d| d.t)
    }

    pub fn final_state(&self) -> &State {
        &self.snapshots.last().expect("trajectory always has snapshots").state
    }

    pub fn initial_state(&self) -> &State {
        &self.snapshots[0].state
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    /// Energy and `Phi` running sums at every node.
    pub fn energy_checks(&self) -> Vec<EnergyCheck> {
        let u0_sq = l2_norm(&self.u0).powi(2);
        let area = self.spec.area();
        let mut dissipated = 0.0;
        let mut phi = 0.0;
        self.diagnostics
            .iter()
            .map(|d| {
                dissipated += d.step.dt * d.step.dissipation;
                phi += d.step.dt * d.step.phi_sq;
                EnergyCheck {
                    t: d.t,
                    energy: 0.5 * d.u_l2 * d.u_l2 + dissipated,
                    energy_bound: 0.5 * self.delta * u0_sq,
                    phi_integral: phi,
                    phi_lower: d.t * area,
                    phi_upper: 2.0 * d.t * area + self.delta * u0_sq - d.u_l2 * d.u_l2,
                }
            })
            .collect()
    }

    pub fn boundedness(&self) -> BoundednessSummary {
        let mut s = BoundednessSummary {
            max_u_l2: 0.0,
            max_v_l2: 0.0,
            v_h1_sq_integral: 0.0,
            grad_u_l1_sq_integral: 0.0,
        };
        for d in &self.diagnostics {
            s.max_u_l2 = s.max_u_l2.max(d.u_l2);
            s.max_v_l2 = s.max_v_l2.max(d.v_l2);
            s.v_h1_sq_integral += d.step.dt * d.v_h1 * d.v_h1;
            s.grad_u_l1_sq_integral += d.step.dt * d.grad_u_l1 * d.grad_u_l1;
        }
        s
    }
}

/// Largest stable explicit step, with safety factor 0.9.
///
/// Forward Euler on `u` needs `dt <= 2 / rho` with
/// `rho = delta sup g mu + eps (mu + mu^2)`, `mu = 4/hx^2 + 4/hy^2` bounding
/// the spectrum of `-Delta_h`; on `v` it needs `dt <= 2 / (max lambda mu + delta (1 - lambda0))`.
pub fn cfl_stable_dt(model: &ModelConfig, spec: &GridSpec) -> f64 {
    let mu = laplacian_spectral_bound(spec);
    let rate_u = model.delta * model.diffusivity.sup() * mu + model.epsilon * (mu + mu * mu);
    let rate_v = model.lambda.max() * mu + model.delta * (1.0 - model.lambda.lambda0()).max(0.0);
    0.9 * 2.0 / rate_u.max(rate_v)
}

/// `I + dt eps A_h - dt delta div(g grad .)`.
struct UOperator<'a> {
    spec: GridSpec,
    faces: &'a FaceCoefficients,
    dt_delta: f64,
    dt_eps: f64,
    lap: Vec<f64>,
    tmp: Vec<f64>,
}

impl LinearOperator for UOperator<'_> {
    fn len(&self) -> usize {
        self.spec.len()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.faces.apply_div(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - self.dt_delta * *yi;
        }
        if self.dt_eps > 0.0 {
            operator_a_into(&self.spec, x, &mut self.lap, &mut self.tmp);
            for (yi, ai) in y.iter_mut().zip(&self.tmp) {
                *yi += self.dt_eps * ai;
            }
        }
    }

    fn diagonal(&self, out: &mut [f64]) {
        self.faces.neg_div_diagonal(out);
        let (ihx2, ihy2) = (1.0 / self.spec.hx().powi(2), 1.0 / self.spec.hy().powi(2));
        let lap_diag = 2.0 * ihx2 + 2.0 * ihy2;
        let a_diag = lap_diag + lap_diag * lap_diag + 2.0 * ihx2 * ihx2 + 2.0 * ihy2 * ihy2;
        for d in out.iter_mut() {
            *d = 1.0 + self.dt_delta * *d + self.dt_eps * a_diag;
        }
    }
}

/// `diag(w) - dt Delta_h`, the row-scaled `v` system.
struct VOperator<'a> {
    spec: GridSpec,
    weight: &'a [f64],
    dt: f64,
}

impl LinearOperator for VOperator<'_> {
    fn len(&self) -> usize {
        self.spec.len()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        laplacian_into(&self.spec, x, y);
        for k in 0..y.len() {
            y[k] = self.weight[k] * x[k] - self.dt * y[k];
        }
    }

    fn diagonal(&self, out: &mut [f64]) {
        let lap_diag = 2.0 / self.spec.hx().powi(2) + 2.0 / self.spec.hy().powi(2);
        for (d, w) in out.iter_mut().zip(self.weight) {
            *d = w + self.dt * lap_diag;
        }
    }
}

/// Advances states of one model; owns all scratch buffers.
pub struct Stepper<'m> {
    model: &'m ModelConfig,
    config: SolverConfig,
    spec: GridSpec,
    faces: FaceCoefficients,
    /// `grad lambda`, only when the transport term is active.
    grad_lambda: Option<(Vec<f64>, Vec<f64>)>,
    g_boundary: f64,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m ModelConfig, config: SolverConfig) -> Result<Self> {
        model.validated()?;
        config.validate()?;
        let spec = *model.spec();
        let ones = ScalarField::constant(spec, 1.0);
        let faces = FaceCoefficients::from_nodes(&ones, None, config.face_average)?;
        let grad_lambda = if model.delta < 1.0 && !model.lambda.is_constant() {
            let g = gradient(model.lambda.field());
            Some((g.x, g.y))
        } else {
            None
        };
        Ok(Self {
            model,
            config,
            spec,
            faces,
            grad_lambda,
            g_boundary: model.diffusivity.eval(0.0),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// One step of size `config.dt`; on Picard failure retries once as two half steps.
    pub fn step(&mut self, state: &State) -> Result<Vec<(State, StepRecord)>> {
        state.spec().ensure_same(&self.spec)?;
        let dt = self.config.dt;
        match self.advance(state, dt) {
            Ok(out) => Ok(vec![out]),
            Err(Error::Picard { .. }) => {
                let first = self.advance(state, 0.5 * dt)?;
                let mut second = self.advance(&first.0, 0.5 * dt)?;
                // land exactly on t + dt
                second.0.t = state.t + dt;
                Ok(vec![first, second])
            }
            Err(e) => Err(e),
        }
    }

    fn advance(&mut self, state: &State, dt: f64) -> Result<(State, StepRecord)> {
        match self.config.scheme {
            Scheme::SemiImplicit => self.semi_implicit(state, dt),
            Scheme::Explicit => self.explicit(state, dt),
        }
    }

    fn transport(&self, v: &ScalarField) -> Option<Vec<f64>> {
        let (lx, ly) = self.grad_lambda.as_ref()?;
        let gv = gradient(v);
        let weight = 1.0 - self.model.delta;
        Some((0..gv.x.len()).map(|k| weight * (gv.x[k] * lx[k] + gv.y[k] * ly[k])).collect())
    }

    fn record(&self, u: &ScalarField, dt: f64, picard: usize, linear: usize) -> StepRecord {
        let delta = self.model.delta;
        let density = self.faces.dissipation_density(u);
        let cell = self.spec.cell_area();
        let mut dissipation = 0.0;
        let mut cross = 0.0;
        for &e in density.values() {
            let e = delta * e;
            dissipation += e;
            cross += e.sqrt();
        }
        dissipation *= cell;
        StepRecord {
            dt,
            dissipation,
            phi_sq: self.spec.area() + 2.0 * cross * cell + dissipation,
            picard_iterations: picard,
            linear_iterations: linear,
        }
    }

    fn semi_implicit(&mut self, state: &State, dt: f64) -> Result<(State, StepRecord)> {
        let model = self.model;
        let cfg = self.config;
        let n = self.spec.len();
        let delta = model.delta;
        let lambda = model.lambda.field().values();

        let weight: Vec<f64> = lambda.iter().map(|&l| (1.0 + dt * delta * (1.0 - l)) / l).collect();
        let mut v_base: Vec<f64> = state.v.values().to_vec();
        if let Some(tr) = self.transport(&state.v) {
            for (b, t) in v_base.iter_mut().zip(&tr) {
                *b += dt * t;
            }
        }

        let mut u = state.u.clone();
        let mut v = state.v.clone();
        let mut u_new = state.u.clone();
        let mut v_new = state.v.clone();
        let mut rhs_v = vec![0.0; n];
        let mut linear = 0;
        for sweep in 1..=cfg.picard_max {
            let g = model.diffusivity.apply(&v);
            self.faces.refill(&g, Some(self.g_boundary), cfg.face_average)?;
            {
                let mut op = UOperator {
                    spec: self.spec,
                    faces: &self.faces,
                    dt_delta: dt * delta,
                    dt_eps: dt * model.epsilon,
                    lap: vec![0.0; n],
                    tmp: vec![0.0; n],
                };
                let stats =
                    solve_into(&mut op, state.u.values(), u_new.values_mut(), cfg.linsolve_tol, cfg.linsolve_max)?;
                linear += stats.iterations;
            }
            let source = gradient_magnitude(&u_new)?;
            for k in 0..n {
                rhs_v[k] = (v_base[k] + dt * delta * (1.0 - lambda[k]) * source.values()[k]) / lambda[k];
            }
            {
                let mut op = VOperator { spec: self.spec, weight: &weight, dt };
                let stats = solve_into(&mut op, &rhs_v, v_new.values_mut(), cfg.linsolve_tol, cfg.linsolve_max)?;
                linear += stats.iterations;
            }
            let change = l2_norm(&u_new.sub(&u)?) + l2_norm(&v_new.sub(&v)?);
            let scale = (l2_norm(&u_new) + l2_norm(&v_new)).max(1.0);
            u.values_mut().copy_from_slice(u_new.values());
            v.values_mut().copy_from_slice(v_new.values());
            if !change.is_finite() {
                return Err(Error::NonFinite("Picard iterate"));
            }
            if change <= cfg.picard_tol * scale {
                // faces still hold g(v^k) that produced u
                let record = self.record(&u, dt, sweep, linear);
                return Ok((State { u, v, t: state.t + dt }, record));
            }
            if sweep == cfg.picard_max {
                return Err(Error::Picard { iterations: sweep, change });
            }
        }
        unreachable!("picard_max >= 1")
    }

    fn explicit(&mut self, state: &State, dt: f64) -> Result<(State, StepRecord)> {
        let model = self.model;
        let n = self.spec.len();
        let delta = model.delta;
        let lambda = model.lambda.field().values();
        let g = model.diffusivity.apply(&state.v);
        self.faces.refill(&g, Some(self.g_boundary), self.config.face_average)?;

        let mut div = vec![0.0; n];
        self.faces.apply_div(state.u.values(), &mut div);
        let mut a_u = vec![0.0; n];
        if model.epsilon > 0.0 {
            let mut lap = vec![0.0; n];
            operator_a_into(&self.spec, state.u.values(), &mut lap, &mut a_u);
        }
        let mut u = state.u.clone();
        for (k, uk) in u.values_mut().iter_mut().enumerate() {
            *uk += dt * (delta * div[k] - model.epsilon * a_u[k]);
        }

        let source = gradient_magnitude(&state.u)?;
        let mut lap_v = vec![0.0; n];
        laplacian_into(&self.spec, state.v.values(), &mut lap_v);
        let transport = self.transport(&state.v);
        let mut v = state.v.clone();
        for (k, vk) in v.values_mut().iter_mut().enumerate() {
            let old = state.v.values()[k];
            let mut rate = lambda[k] * lap_v[k] + delta * (1.0 - lambda[k]) * (source.values()[k] - old);
            if let Some(tr) = &transport {
                rate += tr[k];
            }
            *vk = old + dt * rate;
        }
        u.ensure_finite("explicit step (u)")?;
        v.ensure_finite("explicit step (v)")?;
        let record = self.record(&u, dt, 0, 0);
        Ok((State { u, v, t: state.t + dt }, record))
    }
}

/// Advances one step of `solver.dt`; a Picard failure triggers one retry as
/// two half steps, after which the error propagates.
pub fn step(state: &State, model: &ModelConfig, solver: &SolverConfig) -> Result<State> {
    let mut stepper = Stepper::new(model, *solver)?;
    let mut out = stepper.step(state)?;
    Ok(out.pop().expect("at least one substep").0)
}

/// Runs from `(delta u0, delta v0)` at `t = 0` up to the first multiple of `dt` that is `>= t_end`.
pub fn run(
    u0: &ScalarField,
    v0: &ScalarField,
    t_end: f64,
    model: &ModelConfig,
    solver: &SolverConfig,
) -> Result<Trajectory> {
    u0.spec().ensure_same(v0.spec())?;
    u0.spec().ensure_same(model.spec())?;
    u0.ensure_finite("u0")?;
    v0.ensure_finite("v0")?;
    let start = State::new(u0.scaled(model.delta), v0.scaled(model.delta), 0.0)?;
    integrate(start, u0.clone(), v0.clone(), t_end, model, solver)
}

/// Runs from an arbitrary state without the `delta` scaling of the initial data.
pub fn run_from_state(start: State, t_end: f64, model: &ModelConfig, solver: &SolverConfig) -> Result<Trajectory> {
    start.spec().ensure_same(model.spec())?;
    let (u0, v0) = (start.u.clone(), start.v.clone());
    // the recorded initial data is the unscaled one
    let scale = if model.delta > 0.0 { 1.0 / model.delta } else { 1.0 };
    integrate(start, u0.scaled(scale), v0.scaled(scale), t_end, model, solver)
}

fn integrate(
    start: State,
    u0: ScalarField,
    v0: ScalarField,
    t_end: f64,
    model: &ModelConfig,
    solver: &SolverConfig,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("final time {t_end}")));
    }
    let mut stepper = Stepper::new(model, *solver)?;
    let dt = solver.dt;
    let steps = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let t0 = start.t;
    let mut traj = Trajectory {
        spec: *start.spec(),
        delta: model.delta,
        epsilon: model.epsilon,
        u0,
        v0,
        diagnostics: vec![Diagnostics::of(&start, StepRecord::default())?],
        snapshots: Vec::new(),
        halvings: 0,
    };
    traj.snapshots.push(Snapshot { node: 0, state: start.clone() });
    let mut state = start;
    for n in 1..=steps {
        let substeps = stepper
            .step(&state)
            .map_err(|e| Error::StepFailed { t: state.t, source: Box::new(e) })?;
        if substeps.len() > 1 {
            traj.halvings += 1;
        }
        let count = substeps.len();
        for (idx, (mut next, record)) in substeps.into_iter().enumerate() {
            if idx + 1 == count {
                next.t = t0 + n as f64 * dt;
            }
            traj.diagnostics.push(Diagnostics::of(&next, record)?);
            state = next;
        }
        if n % solver.snapshot_stride == 0 || n == steps {
            traj.snapshots.push(Snapshot { node: traj.diagnostics.len() - 1, state: state.clone() });
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Diffusivity, DiffusivityParams, LambdaField};
    use core::f64::consts::PI;

    fn heat_model(spec: GridSpec, g0: f64, lambda: f64) -> ModelConfig {
        ModelConfig::target(Diffusivity::Constant(g0), LambdaField::constant(spec, lambda).unwrap())
    }

    fn eigenmode(spec: GridSpec) -> ScalarField {
        ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin())
    }

    #[test]
    fn zero_data_is_an_equilibrium() {
        let spec = GridSpec::unit_square(9).unwrap();
        let model = ModelConfig::target(Diffusivity::default(), LambdaField::radial(spec, 0.3).unwrap());
        let z = ScalarField::zeros(spec);
        let traj = run(&z, &z, 0.05, &model, &SolverConfig::default().with_dt(0.01)).unwrap();
        assert_eq!(traj.snapshots.len(), 6);
        for s in &traj.snapshots {
            assert!(s.state.u.is_zero() && s.state.v.is_zero());
        }
    }

    #[test]
    fn short_horizon_takes_one_step() {
        let spec = GridSpec::unit_square(7).unwrap();
        let model = heat_model(spec, 1.0, 0.5);
        let u0 = eigenmode(spec);
        let traj = run(&u0, &u0, 1e-4, &model, &SolverConfig::default().with_dt(1e-3)).unwrap();
        assert_eq!(traj.snapshot_times(), vec![0.0, 1e-3]);
    }

    #[test]
    fn heat_reduction_decay_rate_coarse() {
        let spec = GridSpec::unit_square(31).unwrap();
        let model = heat_model(spec, 0.5, 0.5);
        let u0 = eigenmode(spec);
        let traj = run(&u0, &ScalarField::zeros(spec), 0.1, &model, &SolverConfig::default().with_dt(1e-3)).unwrap();
        let ratio = l2_norm(&traj.final_state().u) / l2_norm(&u0);
        let exact = (-2.0 * PI * PI * 0.5 * 0.1).exp();
        assert!((ratio - exact).abs() / exact < 0.02, "{ratio} vs {exact}");
    }

    #[test]
    fn cfl_formula() {
        let spec = GridSpec::unit_square(63).unwrap();
        let dt = cfl_stable_dt(&heat_model(spec, 1.0, 0.5), &spec);
        let h = 1.0 / 64.0;
        assert!((dt - 0.9 * h * h / 4.0).abs() < 1e-15);
        assert!((dt - 5.49e-5).abs() < 1e-7);
        let eps = heat_model(spec, 1.0, 0.5).with_epsilon(1e-3);
        assert!(cfl_stable_dt(&eps, &spec) < dt);
        // with small lambda the u-constraint dominates and scales with 1/sup g
        let a = cfl_stable_dt(&heat_model(spec, 1.0, 0.1), &spec);
        let b = cfl_stable_dt(&heat_model(spec, 0.5, 0.1), &spec);
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let spec = GridSpec::unit_square(5).unwrap();
        let model = heat_model(spec, 1.0, 0.5);
        let z = ScalarField::zeros(spec);
        assert!(run(&z, &z, 0.1, &model, &SolverConfig::default().with_dt(0.0)).is_err());
        assert!(run(&z, &z, -1.0, &model, &SolverConfig::default()).is_err());
        let bad = ModelConfig::target(
            Diffusivity::Rational(DiffusivityParams { a: 1.0, b: 1.0, c: 1.0, d: 3.0 }),
            LambdaField::constant(spec, 0.5).unwrap(),
        );
        assert!(matches!(run(&z, &z, 0.1, &bad, &SolverConfig::default()), Err(Error::Validation(_))));
    }

    #[test]
    fn picard_failure_halves_once_then_errors() {
        let spec = GridSpec::unit_square(9).unwrap();
        let model = ModelConfig::target(
            Diffusivity::Rational(DiffusivityParams::new(1.0, 0.1, 10.0, 2.0).unwrap()),
            LambdaField::constant(spec, 0.3).unwrap(),
        );
        let u0 = ScalarField::from_fn(spec, |x, y| 5.0 * (PI * x).sin() * (3.0 * PI * y).sin());
        let z = ScalarField::zeros(spec);
        let mut cfg = SolverConfig::default().with_dt(0.05);
        cfg.picard_max = 1;
        let err = run(&u0, &z, 0.1, &model, &cfg).unwrap_err();
        assert!(err.is_numerical());
        assert!(matches!(err, Error::StepFailed { t, .. } if t == 0.0));
    }

    #[test]
    fn lambda_one_decouples_v_into_heat() {
        let spec = GridSpec::unit_square(31).unwrap();
        let model = ModelConfig::target(Diffusivity::default(), LambdaField::constant(spec, 1.0).unwrap());
        let v0 = eigenmode(spec);
        let u0 = ScalarField::from_fn(spec, |x, y| x * y * (1.0 - x) * (1.0 - y));
        let traj = run(&u0, &v0, 0.05, &model, &SolverConfig::default().with_dt(5e-4)).unwrap();
        let ratio = l2_norm(&traj.final_state().v) / l2_norm(&v0);
        let exact = (-2.0 * PI * PI * 0.05).exp();
        assert!((ratio - exact).abs() / exact < 0.02, "{ratio} vs {exact}");
    }

    #[test]
    fn mirror_symmetry_is_preserved() {
        let spec = GridSpec::unit_square(15).unwrap();
        let model = ModelConfig::target(
            Diffusivity::Rational(DiffusivityParams::new(1.0, 1.0, 4.0, 1.5).unwrap()),
            LambdaField::radial(spec, 0.4).unwrap(),
        )
        .with_delta(0.7);
        let u0 = ScalarField::from_fn(spec, |x, y| (PI * x).sin() * y * (1.0 - y) * (1.0 + y));
        let v0 = gradient_magnitude(&u0).unwrap();
        let v0 = v0.add(&v0.mirrored_x()).unwrap().scaled(0.5);
        let traj = run(&u0, &v0, 0.02, &model, &SolverConfig::default().with_dt(2e-3)).unwrap();
        for s in &traj.snapshots {
            let du = s.state.u.sub(&s.state.u.mirrored_x()).unwrap();
            let dv = s.state.v.sub(&s.state.v.mirrored_x()).unwrap();
            assert!(crate::grid::linf_norm(&du) < 1e-12 && crate::grid::linf_norm(&dv) < 1e-12);
        }
    }

    #[test]
    fn delta_zero_is_linear_decay() {
        let spec = GridSpec::unit_square(11).unwrap();
        let model = ModelConfig::target(Diffusivity::default(), LambdaField::constant(spec, 0.6).unwrap())
            .with_delta(0.0)
            .with_epsilon(1e-2);
        let u0 = ScalarField::from_fn(spec, |x, y| x * (1.0 - x) * (2.0 * PI * y).sin());
        let start = State::new(u0.clone(), u0.map(f64::abs), 0.0).unwrap();
        let traj = run_from_state(start, 0.05, &model, &SolverConfig::default().with_dt(5e-3)).unwrap();
        for w in traj.diagnostics.windows(2) {
            assert!(w[1].u_l2 < w[0].u_l2 && w[1].v_l2 < w[0].v_l2);
        }
    }

    #[test]
    fn energy_phi_and_sign_hold_per_step() {
        let spec = GridSpec::unit_square(15).unwrap();
        let model = ModelConfig::target(
            Diffusivity::Rational(DiffusivityParams::new(1.0, 0.5, 20.0, 2.0).unwrap()),
            LambdaField::constant(spec, 0.3).unwrap(),
        )
        .with_epsilon(1e-3);
        let u0 = ScalarField::from_fn(spec, |x, y| if (x - 0.5).abs() < 0.25 && y > 0.3 { 1.0 } else { 0.0 });
        let v0 = gradient_magnitude(&u0).unwrap();
        let traj = run(&u0, &v0, 0.05, &model, &SolverConfig::default().with_dt(5e-3)).unwrap();
        let scale = l2_norm(&u0).powi(2);
        for c in traj.energy_checks() {
            assert!(c.energy <= c.energy_bound + 1e-10 * scale, "{c:?}");
            assert!(c.phi_lower <= c.phi_integral && c.phi_integral <= c.phi_upper + 1e-8, "{c:?}");
        }
        for w in traj.diagnostics.windows(2) {
            assert!(w[1].u_l2 <= w[0].u_l2 + 1e-14);
            assert!(w[1].v_min >= -1e-12);
        }
        let b = traj.boundedness();
        assert!(b.max_u_l2.is_finite() && b.v_h1_sq_integral.is_finite() && b.grad_u_l1_sq_integral > 0.0);
    }

    fn explicit_growth(factor: f64) -> f64 {
        let spec = GridSpec::unit_square(15).unwrap();
        let model = heat_model(spec, 1.0, 0.5);
        let dt = cfl_stable_dt(&model, &spec) * factor;
        // a checkerboard excites the stiffest mode
        let u0 = ScalarField::from_fn(spec, |x, y| {
            let s = if ((x * 16.0).round() as i64 + (y * 16.0).round() as i64) % 2 == 0 { 1.0 } else { -1.0 };
            (PI * x).sin() * (PI * y).sin() + 1e-6 * s
        });
        let cfg = SolverConfig::default().with_dt(dt).with_scheme(Scheme::Explicit).with_stride(1000);
        let traj = run(&u0, &ScalarField::zeros(spec), 400.0 * dt, &model, &cfg).unwrap();
        l2_norm(&traj.final_state().u) / l2_norm(&u0)
    }

    #[test]
    fn explicit_scheme_blows_up_just_above_the_bound() {
        assert!(explicit_growth(1.0) < 1.0);
        assert!(explicit_growth(1.05 / 0.9) > 1e3);
    }
}
