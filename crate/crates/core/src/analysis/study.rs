//! Scenario catalog and refinement studies.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::analysis::dissipative::{fit_minimal_gamma, DissipativeData, GammaFit, InequalityForm};
pub use crate::analysis::pair::inject;
use crate::analysis::pair::{EigenmodePair, TestPair};
use crate::analysis::residual::residual_time_mean;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, GridSpec, ScalarField};
use crate::model::{Diffusivity, DiffusivityParams, LambdaField, ModelConfig};
use crate::operators::gradient_magnitude;
use crate::solver::{run, SolverConfig, State, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialShape {
    Zero,
    /// `sin(pi x) sin(pi y)`.
    Eigenmode,
    /// Indicator of `[1/4, 3/4] x [1/4, 3/4]`.
    Square,
    /// Two smooth bumps of opposite sign.
    Bumps,
}

impl InitialShape {
    pub fn field(self, spec: GridSpec) -> ScalarField {
        use core::f64::consts::PI;
        match self {
            InitialShape::Zero => ScalarField::zeros(spec),
            InitialShape::Eigenmode => ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin()),
            InitialShape::Square => ScalarField::from_fn(spec, |x, y| {
                if (0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y) {
                    1.0
                } else {
                    0.0
                }
            }),
            InitialShape::Bumps => ScalarField::from_fn(spec, |x, y| {
                let b = |cx: f64, cy: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / 0.01).exp();
                let envelope = 16.0 * x * (1.0 - x) * y * (1.0 - y);
                envelope * (b(0.35, 0.4) - 0.7 * b(0.65, 0.6))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeInit {
    Zero,
    /// `scale |grad u0|`.
    GradientMagnitude(f64),
    /// `v0 = scale u0`.
    Proportional(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPreset {
    Constant(f64),
    /// 1 at the centre, `min` in the corners.
    Radial(f64),
}

/// Time step as a function of the mesh width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// `dt = c h`.
    Linear(f64),
    /// `dt = c h^2`.
    Parabolic(f64),
}

impl DtRule {
    pub fn dt(self, h: f64) -> f64 {
        match self {
            DtRule::Fixed(dt) => dt,
            DtRule::Linear(c) => c * h,
            DtRule::Parabolic(c) => c * h * h,
        }
    }
}

/// A reproducible experiment on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub diffusivity: Diffusivity,
    pub lambda: LambdaPreset,
    pub epsilon: f64,
    pub delta: f64,
    pub u0: InitialShape,
    pub v0: EdgeInit,
    pub t_end: f64,
    pub dt: DtRule,
    /// Default interior nodes per side.
    pub n: usize,
}

/// A scenario instantiated on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub model: ModelConfig,
    pub u0: ScalarField,
    pub v0: ScalarField,
    pub solver: SolverConfig,
    pub t_end: f64,
}

impl Setup {
    pub fn run(&self) -> Result<Trajectory> {
        run(&self.u0, &self.v0, self.t_end, &self.model, &self.solver)
    }
}

/// Interior nodes per side at refinement level `k`: `2^k - 1`, so `h = 2^-k`.
pub fn level_nodes(k: u32) -> usize {
    (1usize << k) - 1
}

impl Scenario {
    pub fn setup(&self, n: usize) -> Result<Setup> {
        let spec = GridSpec::unit_square(n)?;
        let lambda = match self.lambda {
            LambdaPreset::Constant(c) => LambdaField::constant(spec, c)?,
            LambdaPreset::Radial(min) => LambdaField::radial(spec, min)?,
        };
        let model = ModelConfig::target(self.diffusivity, lambda).with_epsilon(self.epsilon).with_delta(self.delta);
        model.validated()?;
        let u0 = self.u0.field(spec);
        let v0 = match self.v0 {
            EdgeInit::Zero => ScalarField::zeros(spec),
            EdgeInit::GradientMagnitude(s) => gradient_magnitude(&u0)?.scaled(s),
            EdgeInit::Proportional(s) => u0.scaled(s),
        };
        let solver = SolverConfig::default().with_dt(self.dt.dt(spec.hx()));
        Ok(Setup { model, u0, v0, solver, t_end: self.t_end })
    }

    pub fn run(&self, n: usize) -> Result<(Setup, Trajectory)> {
        let setup = self.setup(n)?;
        let traj = setup.run()?;
        Ok((setup, traj))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }
}

/// The shipped scenarios.
pub fn shipped_scenarios() -> Vec<Scenario> {
    let pm = |a, b, c, d| Diffusivity::Rational(DiffusivityParams { a, b, c, d });
    let base = Scenario {
        name: String::new(),
        diffusivity: Diffusivity::Constant(1.0),
        lambda: LambdaPreset::Constant(0.5),
        epsilon: 0.0,
        delta: 1.0,
        u0: InitialShape::Eigenmode,
        v0: EdgeInit::Zero,
        t_end: 0.0625,
        dt: DtRule::Fixed(1.0 / 512.0),
        n: 31,
    };
    alloc::vec![
        Scenario { name: "zero".into(), u0: InitialShape::Zero, ..base.clone() },
        Scenario { name: "heat".into(), ..base.clone() },
        Scenario {
            name: "edge-square".into(),
            diffusivity: pm(1.0, 1.0, 10.0, 2.0),
            u0: InitialShape::Square,
            v0: EdgeInit::GradientMagnitude(0.1),
            ..base.clone()
        },
        Scenario {
            name: "radial-lambda".into(),
            diffusivity: pm(1.0, 0.5, 5.0, 1.5),
            lambda: LambdaPreset::Radial(0.3),
            u0: InitialShape::Bumps,
            v0: EdgeInit::GradientMagnitude(0.2),
            ..base.clone()
        },
        Scenario {
            name: "regularized".into(),
            diffusivity: pm(1.0, 1.0, 4.0, 1.0),
            lambda: LambdaPreset::Radial(0.4),
            epsilon: 1e-3,
            delta: 0.8,
            u0: InitialShape::Bumps,
            v0: EdgeInit::Proportional(0.5),
            ..base
        },
    ]
}

/// Looks up a shipped scenario by name.
pub fn scenario(name: &str) -> Option<Scenario> {
    shipped_scenarios().into_iter().find(|s| s.name == name)
}

fn orders(diffs: &[f64]) -> Vec<f64> {
    diffs.windows(2).map(|w| if w[1] > 0.0 && w[0] > 0.0 { (w[0] / w[1]).log2() } else { f64::NAN }).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Successive final-time differences under joint refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub nodes: Vec<usize>,
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    /// `||u_k(T) - I u_{k+1}(T)||` on the coarser grid of each pair of levels.
    pub u_diffs: Vec<f64>,
    pub v_diffs: Vec<f64>,
    /// `log2` of successive difference ratios (order per halving of `h`).
    pub u_orders: Vec<f64>,
    pub v_orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn summary(&self) -> String {
        let mut s = format!("scenario={}\n", self.scenario);
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        s.push_str(&format!("h={}\n", join(&self.h)));
        s.push_str(&format!("dt={}\n", join(&self.dt)));
        s.push_str(&format!("u_diffs={}\n", join(&self.u_diffs)));
        s.push_str(&format!("v_diffs={}\n", join(&self.v_diffs)));
        s.push_str(&format!("u_orders={}\n", join(&self.u_orders)));
        s.push_str(&format!("v_orders={}\n", join(&self.v_orders)));
        s
    }
}

/// Checks that `levels` holds at least three consecutive refinement levels.
pub fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::InsufficientLevels { needed: 3, got: levels.len() });
    }
    if levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidParameter("levels must be consecutive".into()));
    }
    Ok(())
}

impl ConvergenceReport {
    /// Builds the report from runs already made, coarsest first.
    pub fn from_finals(scenario: &str, setups: &[Setup], finals: &[State]) -> Result<Self> {
        if setups.len() != finals.len() {
            return Err(Error::LengthMismatch { expected: setups.len(), got: finals.len() });
        }
        let mut report = ConvergenceReport {
            scenario: scenario.into(),
            nodes: setups.iter().map(|s| s.model.spec().nx()).collect(),
            h: setups.iter().map(|s| s.model.spec().hx()).collect(),
            dt: setups.iter().map(|s| s.solver.dt).collect(),
            u_diffs: Vec::new(),
            v_diffs: Vec::new(),
            u_orders: Vec::new(),
            v_orders: Vec::new(),
        };
        for w in finals.windows(2) {
            let coarse = *w[0].spec();
            report.u_diffs.push(l2_norm(&w[0].u.sub(&inject(&w[1].u, coarse)?)?));
            report.v_diffs.push(l2_norm(&w[0].v.sub(&inject(&w[1].v, coarse)?)?));
        }
        report.u_orders = orders(&report.u_diffs);
        report.v_orders = orders(&report.v_diffs);
        Ok(report)
    }
}

/// Runs `scenario` at `n = 2^k - 1` for each `k` in `levels` (increasing).
pub fn convergence_study(scenario: &Scenario, levels: &[u32]) -> Result<ConvergenceReport> {
    check_levels(levels)?;
    let mut setups = Vec::new();
    let mut finals = Vec::new();
    for &k in levels {
        let (setup, traj) = scenario.run(level_nodes(k))?;
        setups.push(setup);
        finals.push(traj.final_state().clone());
    }
    ConvergenceReport::from_finals(&scenario.name, &setups, &finals)
}

/// Successive differences as `dt` halves on a fixed grid.
pub fn time_convergence_study(scenario: &Scenario, n: usize, dts: &[f64]) -> Result<ConvergenceReport> {
    if dts.len() < 3 {
        return Err(Error::InsufficientLevels { needed: 3, got: dts.len() });
    }
    let mut finals = Vec::new();
    for &dt in dts {
        let s = Scenario { dt: DtRule::Fixed(dt), ..scenario.clone() };
        finals.push(s.run(n)?.1.final_state().clone());
    }
    let u_diffs: Vec<f64> = finals.windows(2).map(|w| w[0].u.sub(&w[1].u).map(|d| l2_norm(&d))).collect::<Result<_>>()?;
    let v_diffs: Vec<f64> = finals.windows(2).map(|w| w[0].v.sub(&w[1].v).map(|d| l2_norm(&d))).collect::<Result<_>>()?;
    let h = 1.0 / (n + 1) as f64;
    Ok(ConvergenceReport {
        scenario: scenario.name.clone(),
        nodes: alloc::vec![n; dts.len()],
        h: alloc::vec![h; dts.len()],
        dt: dts.to_vec(),
        u_orders: orders(&u_diffs),
        v_orders: orders(&v_diffs),
        u_diffs,
        v_diffs,
    })
}

/// Cauchy differences of final states as `eps` halves.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub scenario: String,
    pub epsilons: Vec<f64>,
    pub u_diffs: Vec<f64>,
    pub v_diffs: Vec<f64>,
}

impl EpsilonReport {
    pub fn strictly_decreasing(&self) -> bool {
        let dec = |d: &[f64]| d.windows(2).all(|w| w[1] < w[0]);
        dec(&self.u_diffs) && dec(&self.v_diffs)
    }

    pub fn summary(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        format!(
            "scenario={}\nepsilons={}\nu_diffs={}\nv_diffs={}\n",
            self.scenario,
            join(&self.epsilons),
            join(&self.u_diffs),
            join(&self.v_diffs)
        )
    }
}

/// `eps_m = eps0 2^-m` for `m = 0..=halvings`.
pub fn epsilon_ladder(eps0: f64, halvings: u32) -> Result<Vec<f64>> {
    if halvings < 1 {
        return Err(Error::InsufficientLevels { needed: 2, got: 1 });
    }
    Ok((0..=halvings).map(|m| eps0 * (0.5f64).powi(m as i32)).collect())
}

impl EpsilonReport {
    pub fn from_finals(scenario: &str, epsilons: Vec<f64>, finals: &[State]) -> Result<Self> {
        let mut report = EpsilonReport { scenario: scenario.into(), epsilons, u_diffs: Vec::new(), v_diffs: Vec::new() };
        for w in finals.windows(2) {
            report.u_diffs.push(l2_norm(&w[0].u.sub(&w[1].u)?));
            report.v_diffs.push(l2_norm(&w[0].v.sub(&w[1].v)?));
        }
        Ok(report)
    }
}

/// Runs `eps_m = eps0 2^-m`, `m = 0..=halvings`, on `n` nodes per side.
pub fn epsilon_limit_study(scenario: &Scenario, n: usize, eps0: f64, halvings: u32) -> Result<EpsilonReport> {
    let epsilons = epsilon_ladder(eps0, halvings)?;
    let mut finals = Vec::new();
    for &eps in &epsilons {
        finals.push(scenario.with_epsilon(eps).run(n)?.1.final_state().clone());
    }
    EpsilonReport::from_finals(&scenario.name, epsilons, &finals)
}

/// Time-mean residuals of each trajectory fed back as its own pair, under joint refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRefinement {
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

impl ResidualRefinement {
    /// Slopes of `log ||E||` against `log dt`.
    pub fn slopes(&self) -> (f64, f64) {
        (loglog_slope(&self.dt, &self.e1), loglog_slope(&self.dt, &self.e2))
    }
}

pub fn residual_refinement(scenario: &Scenario, levels: &[u32]) -> Result<ResidualRefinement> {
    if levels.len() < 2 {
        return Err(Error::InsufficientLevels { needed: 2, got: levels.len() });
    }
    let mut out = ResidualRefinement { h: Vec::new(), dt: Vec::new(), e1: Vec::new(), e2: Vec::new() };
    for &k in levels {
        let (setup, traj) = scenario.run(level_nodes(k))?;
        let pair = TestPair::from_trajectory(&traj)?;
        let (e1, e2) = residual_time_mean(&pair, &setup.model)?;
        out.h.push(setup.model.spec().hx());
        out.dt.push(setup.solver.dt);
        out.e1.push(e1);
        out.e2.push(e2);
    }
    Ok(out)
}

/// Each level's trajectory checked against the next finer level's, injected.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistency {
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    /// Minimum of `rhs - lhs` over sample times.
    pub min_slack: Vec<f64>,
    /// `max(0, -min_slack)`.
    pub deficit: Vec<f64>,
    /// Largest left-hand side over sample times.
    pub max_lhs: Vec<f64>,
    /// Fitted at the coarsest level: `deficit_0 / (dt_0 + h_0^2)`.
    pub constant: f64,
    /// `constant (dt + h^2)` per level.
    pub tolerance: Vec<f64>,
}

impl SelfConsistency {
    pub fn within_tolerance(&self) -> bool {
        self.min_slack.iter().zip(&self.tolerance).all(|(s, t)| *s >= -t)
    }

    /// The deficit never grows and the largest left-hand side strictly shrinks.
    pub fn improves(&self) -> bool {
        self.deficit.windows(2).all(|w| w[1] <= w[0]) && self.max_lhs.windows(2).all(|w| w[1] < w[0])
    }
}

pub fn self_consistency_study(scenario: &Scenario, levels: &[u32], gamma: f64, form: InequalityForm) -> Result<SelfConsistency> {
    if levels.len() < 2 {
        return Err(Error::InsufficientLevels { needed: 2, got: levels.len() });
    }
    let runs = levels.iter().map(|&k| scenario.run(level_nodes(k))).collect::<Result<Vec<_>>>()?;
    let mut out = SelfConsistency {
        h: Vec::new(),
        dt: Vec::new(),
        min_slack: Vec::new(),
        deficit: Vec::new(),
        max_lhs: Vec::new(),
        constant: 0.0,
        tolerance: Vec::new(),
    };
    for w in runs.windows(2) {
        let ((setup, coarse), (_, fine)) = (&w[0], &w[1]);
        let pair = TestPair::from_trajectory(fine)?.restrict(coarse.spec)?;
        let report = DissipativeData::new(coarse, &pair, &setup.model, form)?.report(gamma)?;
        let s = report.min_slack();
        out.h.push(coarse.spec.hx());
        out.dt.push(setup.solver.dt);
        out.min_slack.push(s);
        out.deficit.push((-s).max(0.0));
        out.max_lhs.push(report.lhs.iter().copied().fold(0.0, f64::max));
    }
    out.constant = out.deficit[0] / (out.dt[0] + out.h[0] * out.h[0]);
    out.tolerance = out.dt.iter().zip(&out.h).map(|(dt, h)| out.constant * (dt + h * h)).collect();
    Ok(out)
}

/// `gamma*` of one scenario and pair across grids.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaStability {
    pub nodes: Vec<usize>,
    pub fits: Vec<GammaFit>,
}

impl GammaStability {
    /// `(max - min) / min` of the fitted values; `None` if any level found no `gamma`.
    pub fn relative_spread(&self) -> Option<f64> {
        let g: Vec<f64> = self.fits.iter().map(|f| f.gamma).collect::<Option<_>>()?;
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = g.iter().copied().fold(0.0, f64::max);
        Some((hi - lo) / lo)
    }
}

pub fn gamma_stability(
    scenario: &Scenario,
    nodes: &[usize],
    mode: EigenmodePair,
    form: InequalityForm,
    grid: &[f64],
) -> Result<GammaStability> {
    let mut fits = Vec::new();
    for &n in nodes {
        let (setup, traj) = scenario.run(n)?;
        let pair = TestPair::eigenmode(traj.spec, &traj.snapshot_times(), mode)?;
        fits.push(fit_minimal_gamma(&traj, &pair, &setup.model, form, grid)?);
    }
    Ok(GammaStability { nodes: nodes.to_vec(), fits })
}
