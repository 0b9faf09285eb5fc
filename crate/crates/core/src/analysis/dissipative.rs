//! The dissipative inequality and the fitted constant `gamma`.
//!
//! Limit form, for `(w, s) = (u - zeta, v - theta)`:
//!
//! ```text
//! gamma^{||u(t)||^2} [||w||^2 + ||s||^2]
//!   <= gamma^{2t + ||u0||^2} { ||w(0)||^2 + ||s(0)||^2
//!        + int_0^t 2 gamma^{-s} |(E1, w) + (E2, s)| ds }
//! ```
//!
//! The regularized form adds `2 eps int ||w||_2^2 + lambda0 int ||grad s||^2`
//! inside the left bracket, `-eps (zeta, w)_2` inside the absolute value, and
//! uses `delta u0`, `delta v0`, `gamma^{2t + delta ||u0||^2}`. Both sides are
//! reported divided by the common factor `gamma^{kappa ||u0||^2}` (`kappa` is
//! 1 or `delta`) so that large data do not overflow.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::analysis::pair::TestPair;
use crate::analysis::residual::{residual_e1, residual_e2};
use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, l2_inner, l2_norm, v2_inner, v2_norm};
use crate::model::ModelConfig;
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InequalityForm {
    #[default]
    Limit,
    Regularized,
}

/// Everything in the inequality that does not depend on `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeData {
    pub form: InequalityForm,
    pub times: Vec<f64>,
    /// `||u(t)||^2 - kappa ||u0||^2`.
    pub energy_shift: Vec<f64>,
    /// `||w||^2 + ||s||^2`.
    pub distance_sq: Vec<f64>,
    /// `2 eps int ||w||_2^2 + lambda0 int ||grad s||^2` (regularized form only).
    pub extra: Vec<f64>,
    /// `|(E1, w) + (E2, s) - eps (zeta, w)_2|` at each sample.
    pub coupling: Vec<f64>,
    pub initial_distance_sq: f64,
    pub admissible: bool,
    pub warnings: Vec<String>,
}

/// Both sides of the inequality for one `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeReport {
    pub form: InequalityForm,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub slack: Vec<f64>,
    pub passed: Vec<bool>,
    /// `int_0^t 2 gamma^{-s} |...| ds`.
    pub residual_integral: Vec<f64>,
    /// Extra left-hand terms of the regularized form, before weighting.
    pub extra: Vec<f64>,
    pub admissible: bool,
    pub warnings: Vec<String>,
}

/// Relative roundoff allowance in the pass test.
pub const ROUNDOFF: f64 = 1e-10;

impl DissipativeReport {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|&p| p)
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Passes when `slack >= -tol` at every sample.
    pub fn passes_with(&self, tol: f64) -> bool {
        self.slack.iter().all(|&s| s >= -tol)
    }

    /// Columns `time,lhs,rhs,slack`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,lhs,rhs,slack\n");
        for k in 0..self.times.len() {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", self.times[k], self.lhs[k], self.rhs[k], self.slack[k]));
        }
        out
    }
}

fn trapezoid_cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(times.len());
    out.push(0.0);
    for k in 1..times.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        out.push(acc);
    }
    out
}

fn same_times(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
}

impl DissipativeData {
    /// Samples the trajectory snapshots against the pair, resampling the pair if needed.
    pub fn new(traj: &Trajectory, pair: &TestPair, model: &ModelConfig, form: InequalityForm) -> Result<Self> {
        traj.spec.ensure_same(pair.spec())?;
        traj.spec.ensure_same(model.spec())?;
        let times = traj.snapshot_times();
        let resampled;
        let pair = if same_times(&pair.times, &times) {
            pair
        } else {
            resampled = pair.resample(&times)?;
            &resampled
        };
        let mut warnings = Vec::new();
        if !pair.admissibility.passed {
            warnings.push(format!("pair '{}' failed the admissibility proxies", pair.name));
        }
        let (kappa, eps) = match form {
            InequalityForm::Limit => {
                if model.delta != 1.0 || model.epsilon != 0.0 {
                    warnings.push(format!(
                        "limit form evaluated for delta = {}, epsilon = {}",
                        model.delta, model.epsilon
                    ));
                }
                (1.0, 0.0)
            }
            InequalityForm::Regularized => (model.delta, model.epsilon),
        };
        let u0_sq = l2_norm(&traj.u0).powi(2);
        let (start_u, start_v) = match form {
            InequalityForm::Limit => (traj.u0.clone(), traj.v0.clone()),
            InequalityForm::Regularized => (traj.u0.scaled(model.delta), traj.v0.scaled(model.delta)),
        };
        let initial_distance_sq =
            l2_norm(&start_u.sub(&pair.zeta[0])?).powi(2) + l2_norm(&start_v.sub(&pair.theta[0])?).powi(2);

        let n = times.len();
        let mut energy_shift = Vec::with_capacity(n);
        let mut distance_sq = Vec::with_capacity(n);
        let mut coupling = Vec::with_capacity(n);
        let mut w_v2 = Vec::with_capacity(n);
        let mut s_h1 = Vec::with_capacity(n);
        for (k, snap) in traj.snapshots.iter().enumerate() {
            let w = snap.state.u.sub(&pair.zeta[k])?;
            let s = snap.state.v.sub(&pair.theta[k])?;
            energy_shift.push(l2_norm(&snap.state.u).powi(2) - kappa * u0_sq);
            distance_sq.push(l2_norm(&w).powi(2) + l2_norm(&s).powi(2));
            let e1 = residual_e1(pair, model, k)?;
            let e2 = residual_e2(pair, model, k)?;
            let mut c = l2_inner(&e1, &w)? + l2_inner(&e2, &s)?;
            if eps > 0.0 {
                c -= eps * v2_inner(&pair.zeta[k], &w)?;
            }
            coupling.push(c.abs());
            w_v2.push(v2_norm(&w).powi(2));
            s_h1.push(h1_seminorm(&s).powi(2));
        }
        let extra = match form {
            InequalityForm::Limit => alloc::vec![0.0; n],
            InequalityForm::Regularized => {
                let a = trapezoid_cumulative(&times, &w_v2);
                let b = trapezoid_cumulative(&times, &s_h1);
                let lambda0 = model.lambda.lambda0();
                a.iter().zip(&b).map(|(x, y)| 2.0 * eps * x + lambda0 * y).collect()
            }
        };
        Ok(Self {
            form,
            times,
            energy_shift,
            distance_sq,
            extra,
            coupling,
            initial_distance_sq,
            admissible: pair.admissibility.passed,
            warnings,
        })
    }

    pub fn report(&self, gamma: f64) -> Result<DissipativeReport> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
        }
        let ln = gamma.ln();
        let weighted: Vec<f64> =
            self.times.iter().zip(&self.coupling).map(|(&t, &c)| 2.0 * (-ln * t).exp() * c).collect();
        let residual_integral = trapezoid_cumulative(&self.times, &weighted);
        let mut lhs = Vec::with_capacity(self.times.len());
        let mut rhs = Vec::with_capacity(self.times.len());
        let mut slack = Vec::with_capacity(self.times.len());
        let mut passed = Vec::with_capacity(self.times.len());
        for k in 0..self.times.len() {
            let l = (ln * self.energy_shift[k]).exp() * (self.distance_sq[k] + self.extra[k]);
            let r = (2.0 * ln * self.times[k]).exp() * (self.initial_distance_sq + residual_integral[k]);
            lhs.push(l);
            rhs.push(r);
            slack.push(r - l);
            passed.push(r - l >= -ROUNDOFF * (l + r) - 1e-300);
        }
        Ok(DissipativeReport {
            form: self.form,
            gamma,
            times: self.times.clone(),
            lhs,
            rhs,
            slack,
            passed,
            residual_integral,
            extra: self.extra.clone(),
            admissible: self.admissible,
            warnings: self.warnings.clone(),
        })
    }
}

/// Evaluates the inequality at every stored snapshot.
pub fn check_dissipative(
    traj: &Trajectory,
    pair: &TestPair,
    gamma: f64,
    model: &ModelConfig,
    form: InequalityForm,
) -> Result<DissipativeReport> {
    DissipativeData::new(traj, pair, model, form)?.report(gamma)
}

/// `n` geometrically spaced values from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| if k + 1 == n { hi } else { lo * (ratio * k as f64).exp() }).collect()
}

/// 64 points from 1.01 to 1e6.
pub fn default_gamma_grid() -> Vec<f64> {
    geometric_grid(1.01, 1e6, 64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaFit {
    /// Smallest passing grid value; `None` if nothing up to the largest passes.
    pub gamma: Option<f64>,
    pub grid: Vec<f64>,
    pub passed: Vec<bool>,
}

/// Evaluates every grid point (no monotonicity in `gamma` is assumed).
pub fn fit_minimal_gamma(
    traj: &Trajectory,
    pair: &TestPair,
    model: &ModelConfig,
    form: InequalityForm,
    grid: &[f64],
) -> Result<GammaFit> {
    if grid.is_empty() {
        return Err(Error::EmptyGammaGrid);
    }
    let data = DissipativeData::new(traj, pair, model, form)?;
    let passed = grid.iter().map(|&g| Ok(data.report(g)?.all_passed())).collect::<Result<Vec<_>>>()?;
    let gamma = grid.iter().zip(&passed).filter(|(_, &p)| p).map(|(&g, _)| g).fold(None, |acc: Option<f64>, g| {
        Some(acc.map_or(g, |a| a.min(g)))
    });
    Ok(GammaFit { gamma, grid: grid.to_vec(), passed })
}
