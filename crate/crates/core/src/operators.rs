//! Finite-difference operators on [`ScalarField`]s.
//!
//! * `div(g grad u)` is the conservative five-point stencil with face
//!   coefficients averaged from the two adjacent nodes; it is symmetric and
//!   negative semidefinite in the discrete `L2` inner product.
//! * Nodal gradients use central differences where both neighbours are
//!   interior nodes and a one-sided interior difference on the first ring.
//! * `A_h = -Delta_h + Delta_h Delta_h` with zero extension of `Delta_h u`, so
//!   that `(A_h u, w) = (grad u, grad w) + (Delta_h u, Delta_h w)`.

use alloc::vec;
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::model::LambdaField;

/// How a face coefficient is formed from the two adjacent nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceAverage {
    #[default]
    Arithmetic,
    Harmonic,
}

impl FaceAverage {
    #[inline]
    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FaceAverage::Arithmetic => 0.5 * (a + b),
            FaceAverage::Harmonic => 2.0 * a * b / (a + b),
        }
    }
}

/// Diffusion coefficients on cell faces.
///
/// `x` holds the `(nx + 1) * ny` vertical faces, face `(i, j)` lying between
/// nodes `i - 1` and `i` of row `j`; `y` holds the `nx * (ny + 1)` horizontal faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCoefficients {
    spec: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FaceCoefficients {
    /// Builds face values from nodal coefficients.
    ///
    /// `boundary` is the coefficient on the boundary ring; `None` reuses the
    /// adjacent interior value on boundary faces.
    pub fn from_nodes(g: &ScalarField, boundary: Option<f64>, average: FaceAverage) -> Result<Self> {
        let spec = *g.spec();
        let mut faces = Self {
            spec,
            x: vec![0.0; (spec.nx() + 1) * spec.ny()],
            y: vec![0.0; spec.nx() * (spec.ny() + 1)],
        };
        faces.refill(g, boundary, average)?;
        Ok(faces)
    }

    /// Recomputes the face values in place.
    pub fn refill(&mut self, g: &ScalarField, boundary: Option<f64>, average: FaceAverage) -> Result<()> {
        self.spec.ensure_same(g.spec())?;
        for (node, &value) in g.values().iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveCoefficient { node, value });
            }
        }
        if let Some(b) = boundary {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::NonPositiveCoefficient { node: usize::MAX, value: b });
            }
        }
        let (nx, ny) = (self.spec.nx(), self.spec.ny());
        let gv = g.values();
        for j in 0..ny {
            for i in 0..=nx {
                let left = if i > 0 { Some(gv[j * nx + i - 1]) } else { None };
                let right = if i < nx { Some(gv[j * nx + i]) } else { None };
                self.x[j * (nx + 1) + i] = Self::face(left, right, boundary, average);
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let below = if j > 0 { Some(gv[(j - 1) * nx + i]) } else { None };
                let above = if j < ny { Some(gv[j * nx + i]) } else { None };
                self.y[j * nx + i] = Self::face(below, above, boundary, average);
            }
        }
        Ok(())
    }

    #[inline]
    fn face(a: Option<f64>, b: Option<f64>, boundary: Option<f64>, average: FaceAverage) -> f64 {
        match (a, b) {
            (Some(a), Some(b)) => average.combine(a, b),
            (Some(v), None) | (None, Some(v)) => match boundary {
                Some(bd) => average.combine(v, bd),
                None => v,
            },
            (None, None) => unreachable!("face without adjacent interior node"),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// `out = div(g grad u)`.
    pub fn apply_div(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.spec.nx(), self.spec.ny());
        let (ihx2, ihy2) = (1.0 / (self.spec.hx() * self.spec.hx()), 1.0 / (self.spec.hy() * self.spec.hy()));
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let c = u[k];
                let w = if i > 0 { u[k - 1] } else { 0.0 };
                let e = if i + 1 < nx { u[k + 1] } else { 0.0 };
                let s = if j > 0 { u[k - nx] } else { 0.0 };
                let n = if j + 1 < ny { u[k + nx] } else { 0.0 };
                let gw = self.x[j * (nx + 1) + i];
                let ge = self.x[j * (nx + 1) + i + 1];
                let gs = self.y[j * nx + i];
                let gn = self.y[(j + 1) * nx + i];
                out[k] = (ge * (e - c) - gw * (c - w)) * ihx2 + (gn * (n - c) - gs * (c - s)) * ihy2;
            }
        }
    }

    /// Diagonal of `-div(g grad .)`.
    pub fn neg_div_diagonal(&self, out: &mut [f64]) {
        let (nx, ny) = (self.spec.nx(), self.spec.ny());
        let (ihx2, ihy2) = (1.0 / (self.spec.hx() * self.spec.hx()), 1.0 / (self.spec.hy() * self.spec.hy()));
        for j in 0..ny {
            for i in 0..nx {
                out[j * nx + i] = (self.x[j * (nx + 1) + i] + self.x[j * (nx + 1) + i + 1]) * ihx2
                    + (self.y[j * nx + i] + self.y[(j + 1) * nx + i]) * ihy2;
            }
        }
    }

    /// Face-summed energy `sum_faces g_f |D_f u|^2 hx hy = -(div(g grad u), u)`.
    pub fn dissipation(&self, u: &ScalarField) -> f64 {
        self.dissipation_density(u).values().iter().sum::<f64>() * self.spec.cell_area()
    }

    /// Nodal density of [`Self::dissipation`]: each interior face's
    /// `g_f |D_f u|^2` is split evenly between its two nodes, a boundary face
    /// goes entirely to its interior node.
    pub fn dissipation_density(&self, u: &ScalarField) -> ScalarField {
        let spec = self.spec;
        let (nx, ny) = (spec.nx(), spec.ny());
        let (hx, hy) = (spec.hx(), spec.hy());
        let mut out = vec![0.0; spec.len()];
        for j in 0..ny {
            for i in 0..=nx {
                let d = (u.at(i as isize, j as isize) - u.at(i as isize - 1, j as isize)) / hx;
                let e = self.x[j * (nx + 1) + i] * d * d;
                match (i > 0, i < nx) {
                    (true, true) => {
                        out[j * nx + i - 1] += 0.5 * e;
                        out[j * nx + i] += 0.5 * e;
                    }
                    (true, false) => out[j * nx + i - 1] += e,
                    (false, true) => out[j * nx + i] += e,
                    (false, false) => {}
                }
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let d = (u.at(i as isize, j as isize) - u.at(i as isize, j as isize - 1)) / hy;
                let e = self.y[j * nx + i] * d * d;
                match (j > 0, j < ny) {
                    (true, true) => {
                        out[(j - 1) * nx + i] += 0.5 * e;
                        out[j * nx + i] += 0.5 * e;
                    }
                    (true, false) => out[(j - 1) * nx + i] += e,
                    (false, true) => out[j * nx + i] += e,
                    (false, false) => {}
                }
            }
        }
        ScalarField::from_values(spec, out).unwrap_or_else(|_| ScalarField::zeros(spec))
    }
}

/// Reusable buffers for repeated stencil applications on one grid.
#[derive(Debug, Clone)]
pub struct StencilWorkspace {
    pub faces: FaceCoefficients,
    pub scratch: Vec<f64>,
    pub scratch2: Vec<f64>,
}

impl StencilWorkspace {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            faces: FaceCoefficients {
                spec,
                x: vec![1.0; (spec.nx() + 1) * spec.ny()],
                y: vec![1.0; spec.nx() * (spec.ny() + 1)],
            },
            scratch: vec![0.0; spec.len()],
            scratch2: vec![0.0; spec.len()],
        }
    }
}

fn reject_nan(f: &ScalarField, what: &'static str) -> Result<()> {
    if f.values().iter().any(|v| v.is_nan()) {
        Err(Error::NonFinite(what))
    } else {
        Ok(())
    }
}

/// Nodal gradient: central differences where both neighbours are interior,
/// one-sided interior differences on the first ring.
pub fn gradient(f: &ScalarField) -> VectorField {
    let spec = *f.spec();
    let (nx, ny) = (spec.nx(), spec.ny());
    let (hx, hy) = (spec.hx(), spec.hy());
    let v = f.values();
    let mut g = VectorField::zeros(spec);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            g.x[k] = if i == 0 {
                (v[k + 1] - v[k]) / hx
            } else if i + 1 == nx {
                (v[k] - v[k - 1]) / hx
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * hx)
            };
            g.y[k] = if j == 0 {
                (v[k + nx] - v[k]) / hy
            } else if j + 1 == ny {
                (v[k] - v[k - nx]) / hy
            } else {
                (v[k + nx] - v[k - nx]) / (2.0 * hy)
            };
        }
    }
    g
}

/// `|grad u|` at every node.
pub fn gradient_magnitude(u: &ScalarField) -> Result<ScalarField> {
    reject_nan(u, "gradient_magnitude input")?;
    Ok(gradient(u).magnitude())
}

/// Conservative `div(g grad u)` with arithmetic face averages; boundary faces
/// use the adjacent interior coefficient.
pub fn div_g_grad(u: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    u.spec().ensure_same(g.spec())?;
    reject_nan(u, "div_g_grad input")?;
    let faces = FaceCoefficients::from_nodes(g, None, FaceAverage::Arithmetic)?;
    let mut out = ScalarField::zeros(*u.spec());
    faces.apply_div(u.values(), out.values_mut());
    Ok(out)
}

pub(crate) fn laplacian_into(spec: &GridSpec, u: &[f64], out: &mut [f64]) {
    let (nx, ny) = (spec.nx(), spec.ny());
    let (ihx2, ihy2) = (1.0 / (spec.hx() * spec.hx()), 1.0 / (spec.hy() * spec.hy()));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = u[k];
            let w = if i > 0 { u[k - 1] } else { 0.0 };
            let e = if i + 1 < nx { u[k + 1] } else { 0.0 };
            let s = if j > 0 { u[k - nx] } else { 0.0 };
            let n = if j + 1 < ny { u[k + nx] } else { 0.0 };
            out[k] = (e - 2.0 * c + w) * ihx2 + (n - 2.0 * c + s) * ihy2;
        }
    }
}

/// Five-point Laplacian with zero Dirichlet closure.
pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    reject_nan(f, "laplacian input")?;
    let mut out = ScalarField::zeros(*f.spec());
    laplacian_into(f.spec(), f.values(), out.values_mut());
    Ok(out)
}

/// `grad v . grad lambda`.
pub fn advect_lambda(v: &ScalarField, lambda: &LambdaField) -> Result<ScalarField> {
    v.spec().ensure_same(lambda.spec())?;
    reject_nan(v, "advect_lambda input")?;
    gradient(v).dot(&gradient(lambda.field()))
}

pub(crate) fn operator_a_into(spec: &GridSpec, u: &[f64], lap: &mut [f64], out: &mut [f64]) {
    laplacian_into(spec, u, lap);
    laplacian_into(spec, lap, out);
    for (o, l) in out.iter_mut().zip(lap.iter()) {
        *o -= l;
    }
}

/// `A_h u = -Delta_h u + Delta_h (Delta_h u)`.
pub fn operator_a(u: &ScalarField) -> Result<ScalarField> {
    reject_nan(u, "operator_A input")?;
    let spec = *u.spec();
    let mut lap = vec![0.0; spec.len()];
    let mut out = ScalarField::zeros(spec);
    operator_a_into(&spec, u.values(), &mut lap, out.values_mut());
    Ok(out)
}

/// Upper bound on the spectrum of `-Delta_h`: `4/hx^2 + 4/hy^2`.
pub fn laplacian_spectral_bound(spec: &GridSpec) -> f64 {
    4.0 / (spec.hx() * spec.hx()) + 4.0 / (spec.hy() * spec.hy())
}
