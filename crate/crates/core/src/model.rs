//! Diffusivity `g`, coupling field `lambda`, the regularization and homotopy
//! parameters, and checks of the standing assumptions on them.

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Parameters of `g(s) = a / (b + c |s|^d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusivityParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl DiffusivityParams {
    /// Checked constructor: `a, b, c > 0` and `1 <= d <= 2`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = Self { a, b, c, d };
        if !p.coefficients_positive() {
            return Err(Error::InvalidParameter(format!(
                "diffusivity needs a, b, c > 0 (got a={a}, b={b}, c={c})"
            )));
        }
        if !p.exponent_in_range() {
            return Err(Error::InvalidParameter(format!("diffusivity exponent d={d} outside [1, 2]")));
        }
        Ok(p)
    }

    fn coefficients_positive(&self) -> bool {
        [self.a, self.b, self.c].iter().all(|v| v.is_finite() && *v > 0.0)
    }

    fn exponent_in_range(&self) -> bool {
        (1.0..=2.0).contains(&self.d)
    }
}

impl Default for DiffusivityParams {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0, c: 1.0, d: 2.0 }
    }
}

pub fn g_eval(params: &DiffusivityParams, s: f64) -> f64 {
    params.a / (params.b + params.c * s.abs().powf(params.d))
}

/// The diffusivity used by the solver: the rational family, or a constant
/// hook for analytic reductions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diffusivity {
    Rational(DiffusivityParams),
    Constant(f64),
}

impl Diffusivity {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Diffusivity::Rational(p) => g_eval(p, s),
            Diffusivity::Constant(g0) => *g0,
        }
    }

    /// `sup_s g(s)`.
    pub fn sup(&self) -> f64 {
        match self {
            Diffusivity::Rational(p) => p.a / p.b,
            Diffusivity::Constant(g0) => *g0,
        }
    }

    /// `g(v)` evaluated nodewise.
    pub fn apply(&self, v: &ScalarField) -> ScalarField {
        v.map(|s| self.eval(s))
    }
}

impl Default for Diffusivity {
    fn default() -> Self {
        Diffusivity::Rational(DiffusivityParams::default())
    }
}

fn inv_sqrt_g(params: &DiffusivityParams, s: f64) -> f64 {
    1.0 / g_eval(params, s).sqrt()
}

/// Largest slope of `1/sqrt(g)` between consecutive samples on `[-range, range]`.
fn sampled_lipschitz(params: &DiffusivityParams, range: f64, samples: usize) -> f64 {
    let step = 2.0 * range / samples as f64;
    let mut prev = inv_sqrt_g(params, -range);
    let mut lip = 0.0f64;
    for k in 1..=samples {
        let s = -range + k as f64 * step;
        let cur = inv_sqrt_g(params, s);
        lip = lip.max((cur - prev).abs() / step);
        prev = cur;
    }
    lip
}

/// Constant `C(g)` with `1/sqrt(g(s)) <= C(g) (1 + |s|)` on `[-range, range]`.
///
/// `C = max(L, 1/sqrt(g(0)))` where `L` is the sampled Lipschitz constant of
/// `1/sqrt(g)` (taken at two resolutions). Outside `1 <= d <= 2` the function
/// `1/sqrt(g)` is not globally Lipschitz (slope blows up at 0 for `d < 1`,
/// grows like `|s|^(d/2 - 1)` for `d > 2`), which no finite sample range can
/// certify, so those exponents are rejected with [`Error::NotLipschitz`].
pub fn g_inv_sqrt_bound(params: &DiffusivityParams, range: f64, samples: usize) -> Result<f64> {
    if !(range.is_finite() && range > 0.0) || samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "sampling range {range} with {samples} samples"
        )));
    }
    if !params.exponent_in_range() {
        return Err(Error::NotLipschitz { range });
    }
    let lip = sampled_lipschitz(params, range, samples).max(sampled_lipschitz(params, range, 2 * samples));
    let c = lip.max(inv_sqrt_g(params, 0.0));
    if !c.is_finite() {
        return Err(Error::NotLipschitz { range });
    }
    let step = 2.0 * range / samples as f64;
    for k in 0..=samples {
        let s = -range + k as f64 * step;
        if inv_sqrt_g(params, s) > c * (1.0 + s.abs()) * (1.0 + 1e-12) {
            return Err(Error::NotLipschitz { range });
        }
    }
    Ok(c)
}

/// Spatially varying coupling weight, one value per interior node.
///
/// Unlike the unknowns this is data: its values are not subject to the
/// Dirichlet convention, and one-sided differences are used on the first ring.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaField {
    values: ScalarField,
    lambda0: f64,
}

impl LambdaField {
    pub fn new(values: ScalarField) -> Result<Self> {
        values.ensure_finite("lambda")?;
        let lambda0 = values.min();
        Ok(Self { values, lambda0 })
    }

    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        Self::new(ScalarField::constant(spec, c))
    }

    /// Radial ramp: 1 at the centre of the rectangle, `min` at its corners.
    pub fn radial(spec: GridSpec, min: f64) -> Result<Self> {
        let (cx, cy) = (spec.lx() / 2.0, spec.ly() / 2.0);
        let rmax = cx.hypot(cy);
        Self::new(ScalarField::from_fn(spec, |x, y| {
            let r = (x - cx).hypot(y - cy) / rmax;
            1.0 - (1.0 - min) * r
        }))
    }

    /// Affine rescaling of arbitrary nodal data onto `[min, 1]`; constant data maps to 1.
    pub fn from_intensities(spec: GridSpec, data: &[f64], min: f64) -> Result<Self> {
        let raw = ScalarField::from_values(spec, data.to_vec())?;
        let (lo, hi) = (raw.min(), raw.max());
        let span = hi - lo;
        Self::new(raw.map(|s| if span > 0.0 { min + (1.0 - min) * (s - lo) / span } else { 1.0 }))
    }

    pub fn field(&self) -> &ScalarField {
        &self.values
    }

    pub fn spec(&self) -> &GridSpec {
        self.values.spec()
    }

    /// `inf lambda` over the nodes.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    pub fn is_constant(&self) -> bool {
        self.values.max() == self.lambda0
    }

    /// Largest `|lambda_p - lambda_q| / dist(p, q)` over horizontally or
    /// vertically adjacent interior nodes.
    pub fn lipschitz(&self) -> f64 {
        let spec = *self.values.spec();
        let v = self.values.values();
        let mut lip = 0.0f64;
        for j in 0..spec.ny() {
            for i in 0..spec.nx() {
                let k = spec.index(i, j);
                if i + 1 < spec.nx() {
                    lip = lip.max((v[k + 1] - v[k]).abs() / spec.hx());
                }
                if j + 1 < spec.ny() {
                    lip = lip.max((v[k + spec.nx()] - v[k]).abs() / spec.hy());
                }
            }
        }
        lip
    }
}

/// The model: diffusivity, coupling field, regularization `epsilon` and homotopy `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub diffusivity: Diffusivity,
    pub lambda: LambdaField,
    /// `epsilon = 0` selects the unregularized problem.
    pub epsilon: f64,
    pub delta: f64,
}

impl ModelConfig {
    /// The target problem: `epsilon = 0`, `delta = 1`.
    pub fn target(diffusivity: Diffusivity, lambda: LambdaField) -> Self {
        Self { diffusivity, lambda, epsilon: 0.0, delta: 1.0 }
    }

    pub fn spec(&self) -> &GridSpec {
        self.lambda.spec()
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Errors with the first failed assumption.
    pub fn validated(&self) -> Result<&Self> {
        let report = validate_config(self);
        match report.first_failure() {
            Some(check) => Err(Error::Validation(format!("{} violated: {}", check.name, check.detail))),
            None => Ok(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }

    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Sampling range for the `1/sqrt(g)` bound used by [`validate_config`].
pub const INV_SQRT_RANGE: f64 = 100.0;
pub const INV_SQRT_SAMPLES: usize = 20_000;

/// Checks every standing assumption; never aborts.
pub fn validate_config(config: &ModelConfig) -> ValidationReport {
    let mut r = ValidationReport::default();
    match config.diffusivity {
        Diffusivity::Rational(p) => {
            let positive = p.coefficients_positive();
            r.push("a, b, c > 0", positive, format!("a={}, b={}, c={}", p.a, p.b, p.c));
            let probes = [0.0, 0.5, 1.0, 10.0, 1e3, -1.0];
            let gpos = positive && probes.iter().all(|&s| g_eval(&p, s) > 0.0);
            r.push("g > 0", gpos, format!("g(0) = {}", g_eval(&p, 0.0)));
            let bound = p.a / p.b;
            let bounded = positive && probes.iter().all(|&s| g_eval(&p, s) <= bound);
            r.push("g ≤ a/b", bounded, format!("a/b = {bound}"));
            r.push("1 ≤ d ≤ 2", p.exponent_in_range(), format!("d = {}", p.d));
            let lip = if positive {
                g_inv_sqrt_bound(&p, INV_SQRT_RANGE, INV_SQRT_SAMPLES)
            } else {
                Err(Error::NotLipschitz { range: INV_SQRT_RANGE })
            };
            match lip {
                Ok(c) if p.exponent_in_range() => {
                    r.push("Lip(1/√g) finite", true, format!("C(g) = {c}"))
                }
                Ok(c) => r.push(
                    "Lip(1/√g) finite",
                    false,
                    format!("sampled C(g) = {c}, but d outside [1, 2] is not globally Lipschitz"),
                ),
                Err(e) => r.push("Lip(1/√g) finite", false, format!("{e}")),
            }
        }
        Diffusivity::Constant(g0) => {
            let ok = g0.is_finite() && g0 > 0.0;
            r.push("g > 0", ok, format!("g ≡ {g0}"));
            r.push("Lip(1/√g) finite", ok, String::from("constant"));
        }
    }
    let lam = &config.lambda;
    r.push("λ₀ > 0", lam.lambda0() > 0.0, format!("λ₀ = {}", lam.lambda0()));
    let in_range = lam.field().values().iter().all(|&l| l > 0.0 && l <= 1.0);
    r.push("λ ∈ (0, 1]", in_range, format!("range [{}, {}]", lam.lambda0(), lam.max()));
    let lip = lam.lipschitz();
    r.push("Lip(λ) finite", lip.is_finite(), format!("discrete Lip(λ) = {lip}"));
    r.push(
        "ε ≥ 0",
        config.epsilon.is_finite() && config.epsilon >= 0.0,
        format!("ε = {}", config.epsilon),
    );
    r.push("0 ≤ δ ≤ 1", (0.0..=1.0).contains(&config.delta), format!("δ = {}", config.delta));
    if config.lambda.spec() != config.lambda.field().spec() {
        r.push("grid", false, String::from("lambda grid mismatch"));
    }
    r
}
