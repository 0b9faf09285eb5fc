//! Defects `E1`, `E2` of a test pair against the two equations.

use alloc::vec::Vec;

use crate::analysis::pair::TestPair;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, ScalarField};
use crate::model::ModelConfig;
use crate::operators::{gradient, gradient_magnitude, laplacian, FaceAverage, FaceCoefficients};

fn sample(pair: &TestPair, k: usize) -> Result<()> {
    if k >= pair.len() {
        return Err(Error::SampleMismatch { pair: pair.len(), trajectory: k + 1 });
    }
    Ok(())
}

/// `E1 = -zeta_t + delta div(g(theta) grad zeta)` at sample `k`, with `delta = model.delta`.
///
/// Boundary faces carry `g(0)`, the value of `g(theta)` under the zero boundary condition.
pub fn residual_e1(pair: &TestPair, model: &ModelConfig, k: usize) -> Result<ScalarField> {
    sample(pair, k)?;
    let zeta = &pair.zeta[k];
    zeta.spec().ensure_same(model.spec())?;
    let g = model.diffusivity.apply(&pair.theta[k]);
    let faces = FaceCoefficients::from_nodes(&g, Some(model.diffusivity.eval(0.0)), FaceAverage::Arithmetic)?;
    let mut out = ScalarField::zeros(*zeta.spec());
    faces.apply_div(zeta.values(), out.values_mut());
    let mut out = out.scaled(model.delta);
    out.axpy(-1.0, &pair.zeta_t[k])?;
    Ok(out)
}

/// `E2 = -theta_t + lambda Lap theta + delta (1 - lambda)(|grad zeta| - theta) + (1 - delta) grad theta . grad lambda`.
pub fn residual_e2(pair: &TestPair, model: &ModelConfig, k: usize) -> Result<ScalarField> {
    sample(pair, k)?;
    let (zeta, theta) = (&pair.zeta[k], &pair.theta[k]);
    theta.spec().ensure_same(model.spec())?;
    let delta = model.delta;
    let lam = model.lambda.field().values();
    let lap = laplacian(theta)?;
    let source = gradient_magnitude(zeta)?;
    let theta_t = pair.theta_t[k].values();
    let transport: Option<Vec<f64>> = if delta < 1.0 && !model.lambda.is_constant() {
        let (gt, gl) = (gradient(theta), gradient(model.lambda.field()));
        Some((0..gt.x.len()).map(|i| gt.x[i] * gl.x[i] + gt.y[i] * gl.y[i]).collect())
    } else {
        None
    };
    let values = (0..lam.len())
        .map(|i| {
            let th = theta.values()[i];
            let mut r = -theta_t[i] + lam[i] * lap.values()[i] + delta * (1.0 - lam[i]) * (source.values()[i] - th);
            if let Some(t) = &transport {
                r += (1.0 - delta) * t[i];
            }
            r
        })
        .collect();
    ScalarField::from_values(*theta.spec(), values)
}

/// `(||E1(t_k)||, ||E2(t_k)||)` at every sample.
pub fn residual_norms(pair: &TestPair, model: &ModelConfig) -> Result<Vec<(f64, f64)>> {
    (0..pair.len())
        .map(|k| Ok((l2_norm(&residual_e1(pair, model, k)?), l2_norm(&residual_e2(pair, model, k)?))))
        .collect()
}

/// Time means `(1/T) int ||E1|| dt`, `(1/T) int ||E2|| dt` by the trapezoidal rule.
pub fn residual_time_mean(pair: &TestPair, model: &ModelConfig) -> Result<(f64, f64)> {
    let norms = residual_norms(pair, model)?;
    let t = &pair.times;
    if t.len() < 2 {
        return Ok(norms.first().copied().unwrap_or((0.0, 0.0)));
    }
    let (mut a, mut b) = (0.0, 0.0);
    for k in 1..t.len() {
        let h = 0.5 * (t[k] - t[k - 1]);
        a += h * (norms[k].0 + norms[k - 1].0);
        b += h * (norms[k].1 + norms[k - 1].1);
    }
    let span = t[t.len() - 1] - t[0];
    Ok((a / span, b / span))
}
