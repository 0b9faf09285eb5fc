//! Test pairs `(zeta, theta)` for the dissipative inequality.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{h1_seminorm, l2_norm, linf_norm, GridSpec, ScalarField};
use crate::operators::gradient_magnitude;
use crate::solver::Trajectory;

/// Where the time derivatives came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

/// Finite proxies for membership in the admissible class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub max_abs_zeta: f64,
    pub max_grad_zeta: f64,
    pub max_abs_theta: f64,
    pub max_grad_theta: f64,
    /// `sum dt ||zeta||_2^4`, with `||.||_2` the discrete H^2 norm.
    pub zeta_v2_fourth_integral: f64,
    /// `sum dt ||theta||^2`.
    pub theta_l2_sq_integral: f64,
    pub passed: bool,
}

/// Proxies above this are treated as inadmissible.
pub const ADMISSIBILITY_LIMIT: f64 = 1e6;

/// Sampled test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPair {
    pub name: String,
    pub times: Vec<f64>,
    pub zeta: Vec<ScalarField>,
    pub theta: Vec<ScalarField>,
    pub zeta_t: Vec<ScalarField>,
    pub theta_t: Vec<ScalarField>,
    pub derivative: DerivativeSource,
    pub admissibility: Admissibility,
}

/// `d/dt` of samples at possibly nonuniform times: three-point formulas,
/// one-sided at both ends.
pub fn time_derivative(times: &[f64], fields: &[ScalarField]) -> Result<Vec<ScalarField>> {
    let n = times.len();
    if n != fields.len() {
        return Err(Error::SampleMismatch { pair: fields.len(), trajectory: n });
    }
    if n < 2 {
        return Err(Error::MissingDerivative);
    }
    let combine = |w: [(usize, f64); 3]| -> Result<ScalarField> {
        let mut out = ScalarField::zeros(*fields[0].spec());
        for (k, c) in w {
            if c != 0.0 {
                out.axpy(c, &fields[k])?;
            }
        }
        Ok(out)
    };
    if n == 2 {
        let c = 1.0 / (times[1] - times[0]);
        let d = combine([(1, c), (0, -c), (0, 0.0)])?;
        return Ok(alloc::vec![d.clone(), d]);
    }
    // derivative at t[m] of the quadratic through t[a], t[b], t[c]
    let weights = |m: usize, a: usize, b: usize, c: usize| -> [(usize, f64); 3] {
        let (x, xa, xb, xc) = (times[m], times[a], times[b], times[c]);
        let wa = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
        let wb = ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc));
        let wc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
        [(a, wa), (b, wb), (c, wc)]
    };
    (0..n)
        .map(|m| {
            let w = if m == 0 {
                weights(0, 0, 1, 2)
            } else if m == n - 1 {
                weights(m, m - 2, m - 1, m)
            } else {
                weights(m, m - 1, m, m + 1)
            };
            combine(w)
        })
        .collect()
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

fn admissibility(times: &[f64], zeta: &[ScalarField], theta: &[ScalarField]) -> Result<Admissibility> {
    let mut a = Admissibility {
        max_abs_zeta: 0.0,
        max_grad_zeta: 0.0,
        max_abs_theta: 0.0,
        max_grad_theta: 0.0,
        zeta_v2_fourth_integral: 0.0,
        theta_l2_sq_integral: 0.0,
        passed: false,
    };
    let mut z4 = Vec::with_capacity(times.len());
    let mut t2 = Vec::with_capacity(times.len());
    for (z, th) in zeta.iter().zip(theta) {
        a.max_abs_zeta = a.max_abs_zeta.max(linf_norm(z));
        a.max_grad_zeta = a.max_grad_zeta.max(linf_norm(&gradient_magnitude(z)?));
        a.max_abs_theta = a.max_abs_theta.max(linf_norm(th));
        a.max_grad_theta = a.max_grad_theta.max(linf_norm(&gradient_magnitude(th)?));
        z4.push(crate::grid::v2_norm(z).powi(4));
        t2.push(l2_norm(th).powi(2));
    }
    a.zeta_v2_fourth_integral = trapezoid(times, &z4);
    a.theta_l2_sq_integral = trapezoid(times, &t2);
    a.passed = [
        a.max_abs_zeta,
        a.max_grad_zeta,
        a.max_abs_theta,
        a.max_grad_theta,
        a.zeta_v2_fourth_integral,
        a.theta_l2_sq_integral,
    ]
    .iter()
    .all(|x| x.is_finite() && *x <= ADMISSIBILITY_LIMIT);
    Ok(a)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("sample times must be increasing and nonempty".into()));
    }
    Ok(())
}

impl TestPair {
    /// Pair with analytic derivatives supplied by the caller.
    pub fn with_derivatives(
        name: impl Into<String>,
        times: Vec<f64>,
        zeta: Vec<ScalarField>,
        theta: Vec<ScalarField>,
        zeta_t: Vec<ScalarField>,
        theta_t: Vec<ScalarField>,
    ) -> Result<Self> {
        check_times(&times)?;
        let n = times.len();
        for len in [zeta.len(), theta.len(), zeta_t.len(), theta_t.len()] {
            if len != n {
                return Err(Error::SampleMismatch { pair: len, trajectory: n });
            }
        }
        let spec = *zeta[0].spec();
        for f in zeta.iter().chain(&theta).chain(&zeta_t).chain(&theta_t) {
            spec.ensure_same(f.spec())?;
        }
        let admissibility = admissibility(&times, &zeta, &theta)?;
        Ok(Self {
            name: name.into(),
            times,
            zeta,
            theta,
            zeta_t,
            theta_t,
            derivative: DerivativeSource::Analytic,
            admissibility,
        })
    }

    /// Pair whose derivatives are finite differences of the samples.
    pub fn from_samples(
        name: impl Into<String>,
        times: Vec<f64>,
        zeta: Vec<ScalarField>,
        theta: Vec<ScalarField>,
    ) -> Result<Self> {
        check_times(&times)?;
        let zeta_t = time_derivative(&times, &zeta)?;
        let theta_t = time_derivative(&times, &theta)?;
        let mut pair = Self::with_derivatives(name, times, zeta, theta, zeta_t, theta_t)?;
        pair.derivative = DerivativeSource::FiniteDifference;
        Ok(pair)
    }

    pub fn zero(spec: GridSpec, times: &[f64]) -> Result<Self> {
        let z = alloc::vec![ScalarField::zeros(spec); times.len()];
        Self::with_derivatives("zero", times.to_vec(), z.clone(), z.clone(), z.clone(), z)
    }

    /// `zeta = amp_u sin(k pi x/lx) sin(l pi y/ly) e^{-mu t}`, `theta` the same mode with `amp_v`.
    pub fn eigenmode(spec: GridSpec, times: &[f64], mode: EigenmodePair) -> Result<Self> {
        let (kx, ky) = (mode.k as f64 * core::f64::consts::PI / spec.lx(), mode.l as f64 * core::f64::consts::PI / spec.ly());
        let shape = ScalarField::from_fn(spec, |x, y| (kx * x).sin() * (ky * y).sin());
        let mut z = Vec::new();
        let mut th = Vec::new();
        let mut zt = Vec::new();
        let mut tht = Vec::new();
        for &t in times {
            let e = (-mode.mu * t).exp();
            z.push(shape.scaled(mode.amp_u * e));
            th.push(shape.scaled(mode.amp_v * e));
            zt.push(shape.scaled(-mode.mu * mode.amp_u * e));
            tht.push(shape.scaled(-mode.mu * mode.amp_v * e));
        }
        let name = format!("eigenmode({},{})", mode.k, mode.l);
        Self::with_derivatives(name, times.to_vec(), z, th, zt, tht)
    }

    /// The stored snapshots of a trajectory, frozen as a pair.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let times = traj.snapshot_times();
        let zeta = traj.snapshots.iter().map(|s| s.state.u.clone()).collect();
        let theta = traj.snapshots.iter().map(|s| s.state.v.clone()).collect();
        Self::from_samples("frozen-trajectory", times, zeta, theta)
    }

    pub fn spec(&self) -> &GridSpec {
        self.zeta[0].spec()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation in time onto `times`, which must lie inside the sampled range.
    pub fn resample(&self, times: &[f64]) -> Result<Self> {
        check_times(times)?;
        let (first, last) = (self.times[0], *self.times.last().expect("nonempty"));
        let slack = 1e-12 * (1.0 + last.abs());
        if times[0] < first - slack || times[times.len() - 1] > last + slack {
            return Err(Error::SampleMismatch { pair: self.len(), trajectory: times.len() });
        }
        let lerp = |series: &[ScalarField], t: f64| -> Result<ScalarField> {
            let k = self.times.partition_point(|&s| s <= t).clamp(1, self.len().max(2) - 1);
            if self.len() == 1 {
                return Ok(series[0].clone());
            }
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let mut out = series[k - 1].scaled(1.0 - w);
            out.axpy(w, &series[k])?;
            Ok(out)
        };
        let pick = |series: &[ScalarField]| -> Result<Vec<ScalarField>> { times.iter().map(|&t| lerp(series, t)).collect() };
        let mut out = Self::with_derivatives(
            self.name.clone(),
            times.to_vec(),
            pick(&self.zeta)?,
            pick(&self.theta)?,
            pick(&self.zeta_t)?,
            pick(&self.theta_t)?,
        )?;
        out.derivative = self.derivative;
        Ok(out)
    }

    /// Injection onto a grid whose nodes are every other node of this one.
    pub fn restrict(&self, coarse: GridSpec) -> Result<Self> {
        let map = |s: &[ScalarField]| s.iter().map(|f| inject(f, coarse)).collect::<Result<Vec<_>>>();
        let mut out = Self::with_derivatives(
            self.name.clone(),
            self.times.clone(),
            map(&self.zeta)?,
            map(&self.theta)?,
            map(&self.zeta_t)?,
            map(&self.theta_t)?,
        )?;
        out.derivative = self.derivative;
        Ok(out)
    }

    /// `sum dt ||grad theta||^2`, reported with the admissibility proxies.
    pub fn theta_h1_sq_integral(&self) -> f64 {
        let v: Vec<f64> = self.theta.iter().map(|t| h1_seminorm(t).powi(2)).collect();
        trapezoid(&self.times, &v)
    }
}

/// Injection of `fine` onto `coarse`, where `n_coarse = (n_fine - 1) / 2` per side.
pub fn inject(fine: &ScalarField, coarse: GridSpec) -> Result<ScalarField> {
    let f = *fine.spec();
    if f.nx() != 2 * coarse.nx() + 1 || f.ny() != 2 * coarse.ny() + 1 {
        return Err(Error::InvalidParameter(format!(
            "cannot inject a {}x{} grid onto {}x{}",
            f.nx(),
            f.ny(),
            coarse.nx(),
            coarse.ny()
        )));
    }
    let mut out = ScalarField::zeros(coarse);
    for j in 0..coarse.ny() {
        for i in 0..coarse.nx() {
            out.values_mut()[coarse.index(i, j)] = fine.values()[f.index(2 * i + 1, 2 * j + 1)];
        }
    }
    Ok(out)
}

/// Parameters of a separable eigenmode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenmodePair {
    pub amp_u: f64,
    pub amp_v: f64,
    pub k: u32,
    pub l: u32,
    pub mu: f64,
}

/// The shipped catalog: the zero pair and two eigenmode pairs.
pub fn catalog(spec: GridSpec, times: &[f64]) -> Result<Vec<TestPair>> {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    Ok(alloc::vec![
        TestPair::zero(spec, times)?,
        TestPair::eigenmode(spec, times, EigenmodePair { amp_u: 0.5, amp_v: 0.2, k: 1, l: 1, mu: 2.0 * pi2 })?,
        TestPair::eigenmode(spec, times, EigenmodePair { amp_u: 0.1, amp_v: 0.1, k: 2, l: 1, mu: 0.0 })?,
    ])
}
