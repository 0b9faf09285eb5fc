//! Sampled check of the Gronwall-type lemma
//!
//! ```text
//! f' + chi <= L f + M,  chi, L >= 0
//!   =>  f(t) + int_0^t chi <= exp(int_0^t L) [f(0) + int_0^t exp(-int_0^s L) M ds]
//! ```

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// `f`, `chi`, `L`, `M` on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallData {
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    pub chi: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
}

impl GronwallData {
    pub fn new(times: Vec<f64>, f: Vec<f64>, chi: Vec<f64>, l: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if n < 3 {
            return Err(Error::InsufficientLevels { needed: 3, got: n });
        }
        for (name, s) in [("f", &f), ("chi", &chi), ("L", &l), ("M", &m)] {
            if s.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: s.len() });
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} has non-finite samples")));
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must increase".into()));
        }
        if chi.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter("chi must be nonnegative".into()));
        }
        if l.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter("L must be nonnegative".into()));
        }
        Ok(Self { times, f, chi, l, m })
    }

    /// Samples closures on `n + 1` uniform points of `[0, t_end]`.
    pub fn sample(
        t_end: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
        chi: impl Fn(f64) -> f64,
        l: impl Fn(f64) -> f64,
        m: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let times: Vec<f64> = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
        let map = |g: &dyn Fn(f64) -> f64| times.iter().map(|&t| g(t)).collect::<Vec<_>>();
        Self::new(times.clone(), map(&f), map(&chi), map(&l), map(&m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GronwallVerdict {
    Pass,
    Fail,
    /// The hypothesis fails at some sample, so the lemma says nothing.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    pub verdict: GronwallVerdict,
    /// `f(t) + int_0^t chi`.
    pub lhs: Vec<f64>,
    pub bound: Vec<f64>,
    /// `max (f' + chi - L f - M)` over samples.
    pub hypothesis_excess: f64,
    /// `max (lhs - bound)`.
    pub max_excess: f64,
}

/// Tolerances of [`gronwall_check_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallTolerance {
    /// Allowed `lhs - bound`, relative to `max(1, |bound|)`.
    pub quadrature: f64,
    /// Allowed hypothesis excess, relative to `max(1, |L f + M|)`.
    pub hypothesis: f64,
}

impl Default for GronwallTolerance {
    fn default() -> Self {
        Self { quadrature: 1e-6, hypothesis: 1e-5 }
    }
}

pub fn gronwall_check(data: &GronwallData) -> GronwallReport {
    gronwall_check_with(data, GronwallTolerance::default())
}

/// Three-point derivative of samples on increasing `times` (at least three),
/// one-sided at the ends; second order on nonuniform grids.
pub fn sampled_derivative(times: &[f64], f: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|k| {
            let (a, b, c) = if k == 0 {
                (0, 1, 2)
            } else if k == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (k - 1, k, k + 1)
            };
            let x = times[k];
            let (xa, xb, xc) = (times[a], times[b], times[c]);
            f[a] * ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc))
                + f[b] * ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc))
                + f[c] * ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb))
        })
        .collect()
}

/// Trapezoidal quadrature throughout; `f'` by second-order finite differences.
pub fn gronwall_check_with(data: &GronwallData, tol: GronwallTolerance) -> GronwallReport {
    let t = &data.times;
    let n = t.len();
    let fp = sampled_derivative(t, &data.f);
    let mut hypothesis_excess = f64::NEG_INFINITY;
    let mut applicable = true;
    for k in 0..n {
        let right = data.l[k] * data.f[k] + data.m[k];
        let excess = fp[k] + data.chi[k] - right;
        hypothesis_excess = hypothesis_excess.max(excess);
        if excess > tol.hypothesis * right.abs().max(1.0) {
            applicable = false;
        }
    }

    // int_0^t L, int_0^t chi, and int_0^t exp(-int_0^s L) M ds
    let mut int_l = alloc::vec![0.0; n];
    let mut int_chi = alloc::vec![0.0; n];
    let mut int_m = alloc::vec![0.0; n];
    for k in 1..n {
        let h = t[k] - t[k - 1];
        int_l[k] = int_l[k - 1] + 0.5 * h * (data.l[k] + data.l[k - 1]);
        int_chi[k] = int_chi[k - 1] + 0.5 * h * (data.chi[k] + data.chi[k - 1]);
        let wa = (-int_l[k - 1]).exp() * data.m[k - 1];
        let wb = (-int_l[k]).exp() * data.m[k];
        int_m[k] = int_m[k - 1] + 0.5 * h * (wa + wb);
    }
    let mut lhs = Vec::with_capacity(n);
    let mut bound = Vec::with_capacity(n);
    let mut max_excess = f64::NEG_INFINITY;
    let mut ok = true;
    for k in 0..n {
        let l = data.f[k] + int_chi[k];
        let b = int_l[k].exp() * (data.f[0] + int_m[k]);
        max_excess = max_excess.max(l - b);
        if l - b > tol.quadrature * b.abs().max(1.0) {
            ok = false;
        }
        lhs.push(l);
        bound.push(b);
    }
    let verdict = if !applicable {
        GronwallVerdict::NotApplicable
    } else if ok {
        GronwallVerdict::Pass
    } else {
        GronwallVerdict::Fail
    };
    GronwallReport { verdict, lhs, bound, hypothesis_excess, max_excess }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_f_is_equality() {
        let d = GronwallData::sample(1.0, 100, |_| 2.5, |_| 0.0, |_| 0.0, |_| 0.0).unwrap();
        let r = gronwall_check(&d);
        assert_eq!(r.verdict, GronwallVerdict::Pass);
        assert!(r.lhs.iter().zip(&r.bound).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn exponential_growth_is_equality_up_to_quadrature() {
        let d = GronwallData::sample(1.0, 1000, f64::exp, |_| 0.0, |_| 1.0, |_| 0.0).unwrap();
        let r = gronwall_check(&d);
        assert_eq!(r.verdict, GronwallVerdict::Pass);
        let gap = r.lhs.iter().zip(&r.bound).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap <= 1e-6, "{gap}");
    }

    #[test]
    fn dissipated_decay_is_bounded_by_initial_value() {
        let d = GronwallData::sample(2.0, 2000, |t| (-t).exp(), |t| 0.5 * (-t).exp(), |_| 0.0, |_| 0.0).unwrap();
        let r = gronwall_check(&d);
        assert_eq!(r.verdict, GronwallVerdict::Pass);
        for (k, &t) in d.times.iter().enumerate() {
            let exact = (-t).exp() + 0.5 * (1.0 - (-t).exp());
            assert!((r.lhs[k] - exact).abs() < 1e-6);
            assert!(r.bound[k] == 1.0);
        }
    }

    #[test]
    fn violated_hypothesis_is_not_applicable() {
        // f' = 2f exceeds L f with L = 1
        let d = GronwallData::sample(1.0, 100, |t| (2.0 * t).exp(), |_| 0.0, |_| 1.0, |_| 0.0).unwrap();
        assert_eq!(gronwall_check(&d).verdict, GronwallVerdict::NotApplicable);
    }

    #[test]
    fn forcing_term_matches_closed_form() {
        // f' = f + 1, f(0) = 0  =>  f = e^t - 1
        let d = GronwallData::sample(1.0, 1000, |t| t.exp() - 1.0, |_| 0.0, |_| 1.0, |_| 1.0).unwrap();
        let r = gronwall_check(&d);
        assert_eq!(r.verdict, GronwallVerdict::Pass);
        assert!(r.max_excess.abs() < 1e-6);
    }

    #[test]
    fn negative_chi_or_l_is_rejected() {
        assert!(GronwallData::sample(1.0, 10, |_| 1.0, |_| -1.0, |_| 0.0, |_| 0.0).is_err());
        assert!(GronwallData::sample(1.0, 10, |_| 1.0, |_| 0.0, |_| -1.0, |_| 0.0).is_err());
        assert!(GronwallData::new(alloc::vec![0.0, 1.0], alloc::vec![0.0; 2], alloc::vec![0.0; 2], alloc::vec![0.0; 2], alloc::vec![0.0; 2]).is_err());
    }
}
