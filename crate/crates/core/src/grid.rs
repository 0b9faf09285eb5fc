//! Uniform rectangular grids, nodal fields with homogeneous Dirichlet closure,
//! and the discrete norms used by the solver and the inequality checkers.
//!
//! Only interior nodes are stored. Node `(i, j)` with `0 <= i < nx`,
//! `0 <= j < ny` sits at `((i + 1) hx, (j + 1) hy)`; the boundary ring at
//! index `-1` and `nx` (resp. `ny`) is an implicit zero.
//!
//! Quadrature is the interior rectangle rule `hx hy sum f_ij`. Gradients for
//! `h1_seminorm` are forward differences across every cell face, boundary
//! faces included, so that `h1_seminorm(f)^2 == (-laplacian(f), f)` holds
//! exactly (summation by parts).

use alloc::vec;
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Interior node counts and physical extents of a rectangle `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl GridSpec {
    pub const MIN_NODES: usize = 3;

    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < Self::MIN_NODES || ny < Self::MIN_NODES {
            return Err(Error::InvalidGrid("need at least 3 interior nodes per axis"));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid("extents must be positive and finite"));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` interior nodes on the unit square, `h = 1 / (n + 1)`.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    /// Grid whose spacing is one length unit in both directions.
    pub fn pixel(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, (nx + 1) as f64, (ny + 1) as f64)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / (self.nx + 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / (self.ny + 1) as f64
    }

    /// Quadrature weight of one node.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// `|Omega| = lx * ly`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Physical coordinates of interior node `(i, j)`.
    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        ((i + 1) as f64 * self.hx(), (j + 1) as f64 * self.hy())
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }
}

/// Nodal values on the interior of a [`GridSpec`]; the boundary is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.len()] }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self { spec, values: vec![c; spec.len()] }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::LengthMismatch { expected: spec.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f(x, y)` at every interior node.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny() {
            for i in 0..spec.nx() {
                let (x, y) = spec.coords(i, j);
                values.push(f(x, y));
            }
        }
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `(i, j)`, zero on and beyond the boundary ring.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i >= self.spec.nx as isize || j >= self.spec.ny as isize {
            0.0
        } else {
            self.values[j as usize * self.spec.nx + i as usize]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| a * v).collect() }
    }

    /// `self - other`.
    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { spec: self.spec, values })
    }

    /// `self + other`.
    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { spec: self.spec, values })
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) -> Result<()> {
        self.spec.ensure_same(&other.spec)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mirror image about the vertical midline `x = lx / 2`.
    pub fn mirrored_x(&self) -> Self {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let mut values = vec![0.0; self.values.len()];
        for j in 0..ny {
            for i in 0..nx {
                values[j * nx + i] = self.values[j * nx + (nx - 1 - i)];
            }
        }
        Self { spec: self.spec, values }
    }
}

/// Two-component nodal vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    spec: GridSpec,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, x: vec![0.0; spec.len()], y: vec![0.0; spec.len()] }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Pointwise Euclidean length.
    pub fn magnitude(&self) -> ScalarField {
        let values = self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).collect();
        ScalarField { spec: self.spec, values }
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        self.spec.ensure_same(&other.spec)?;
        let values = (0..self.x.len())
            .map(|k| self.x[k] * other.x[k] + self.y[k] * other.y[k])
            .collect();
        Ok(ScalarField { spec: self.spec, values })
    }
}

/// Discrete `L2` inner product `hx hy sum f g`.
pub fn l2_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.spec.ensure_same(&g.spec)?;
    let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(s * f.spec.cell_area())
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    let s: f64 = f.values.iter().map(|v| v * v).sum();
    (s * f.spec.cell_area()).sqrt()
}

/// `hx hy sum |f|`.
pub fn l1_norm(f: &ScalarField) -> f64 {
    f.values.iter().map(|v| v.abs()).sum::<f64>() * f.spec.cell_area()
}

pub fn linf_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `(grad f, grad g)` with forward differences over all faces, boundary faces included.
pub fn h1_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.spec.ensure_same(&g.spec)?;
    let spec = f.spec;
    let (nx, ny) = (spec.nx as isize, spec.ny as isize);
    let (hx, hy) = (spec.hx(), spec.hy());
    let mut sx = 0.0;
    for j in 0..ny {
        for i in -1..nx {
            sx += (f.at(i + 1, j) - f.at(i, j)) * (g.at(i + 1, j) - g.at(i, j));
        }
    }
    let mut sy = 0.0;
    for j in -1..ny {
        for i in 0..nx {
            sy += (f.at(i, j + 1) - f.at(i, j)) * (g.at(i, j + 1) - g.at(i, j));
        }
    }
    Ok(spec.cell_area() * (sx / (hx * hx) + sy / (hy * hy)))
}

/// `||grad f||`.
pub fn h1_seminorm(f: &ScalarField) -> f64 {
    // same spec by construction
    h1_inner(f, f).unwrap_or(0.0).max(0.0).sqrt()
}

/// Second differences with zero extension: `D_xx f` and `D_yy f` at interior
/// nodes, and the compact mixed difference `D_x^+ D_y^+ f` at the
/// `(nx + 1) * (ny + 1)` cell centres (row-major, cell `(i, j)` spanning nodes
/// `i - 1..=i`, `j - 1..=j`).
pub fn second_differences(f: &ScalarField) -> (ScalarField, Vec<f64>, ScalarField) {
    let spec = f.spec;
    let (hx, hy) = (spec.hx(), spec.hy());
    let (nx, ny) = (spec.nx as isize, spec.ny as isize);
    let mut dxx = ScalarField::zeros(spec);
    let mut dyy = ScalarField::zeros(spec);
    for j in 0..ny {
        for i in 0..nx {
            let k = spec.index(i as usize, j as usize);
            let c = f.at(i, j);
            dxx.values[k] = (f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j)) / (hx * hx);
            dyy.values[k] = (f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1)) / (hy * hy);
        }
    }
    let mut dxy = Vec::with_capacity(((nx + 1) * (ny + 1)) as usize);
    for j in 0..=ny {
        for i in 0..=nx {
            dxy.push((f.at(i, j) - f.at(i - 1, j) - f.at(i, j - 1) + f.at(i - 1, j - 1)) / (hx * hy));
        }
    }
    (dxx, dxy, dyy)
}

/// Discrete `H^2`-type inner product
/// `(grad f, grad g) + (D_xx f, D_xx g) + 2 (D_xy f, D_xy g) + (D_yy f, D_yy g)`.
///
/// The mixed derivative is weighted twice, i.e. the Hessian is contracted in
/// the Frobenius sense. With the compact mixed difference and zero extension
/// this equals `||grad f||^2 + ||Delta_h f||^2` exactly, the quadratic form of
/// [`crate::operators::operator_a`].
pub fn v2_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    let first = h1_inner(f, g)?;
    let (fxx, fxy, fyy) = second_differences(f);
    let (gxx, gxy, gyy) = second_differences(g);
    let mixed: f64 = fxy.iter().zip(&gxy).map(|(a, b)| a * b).sum::<f64>() * f.spec.cell_area();
    Ok(first + l2_inner(&fxx, &gxx)? + 2.0 * mixed + l2_inner(&fyy, &gyy)?)
}

pub fn v2_norm(f: &ScalarField) -> f64 {
    v2_inner(f, f).unwrap_or(0.0).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(spec: GridSpec, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::from_values(spec, values).unwrap()
    }

    fn eigenmode(spec: GridSpec) -> ScalarField {
        ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin())
    }

    #[test]
    fn grid_rejects_tiny_or_degenerate() {
        assert!(GridSpec::new(2, 5, 1.0, 1.0).is_err());
        assert!(GridSpec::new(5, 5, 0.0, 1.0).is_err());
        assert!(GridSpec::new(5, 5, 1.0, f64::NAN).is_err());
        let g = GridSpec::new(3, 7, 2.0, 4.0).unwrap();
        assert_eq!(g.area(), 8.0);
        assert_relative_eq!(g.hx(), 0.5);
        assert_relative_eq!(g.hy(), 0.5);
    }

    #[test]
    fn from_values_rejects_nan_and_bad_length() {
        let spec = GridSpec::unit_square(3).unwrap();
        assert!(ScalarField::from_values(spec, vec![0.0; 8]).is_err());
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert_eq!(ScalarField::from_values(spec, v), Err(Error::NonFinite("field values")));
    }

    #[test]
    fn boundary_reads_are_zero() {
        let spec = GridSpec::unit_square(4).unwrap();
        let f = ScalarField::constant(spec, 3.0);
        assert_eq!(f.at(-1, 2), 0.0);
        assert_eq!(f.at(4, 0), 0.0);
        assert_eq!(f.at(1, 4), 0.0);
        assert_eq!(f.at(1, 1), 3.0);
    }

    #[test]
    fn l2_norm_of_zero_and_constant() {
        let spec = GridSpec::unit_square(10).unwrap();
        assert_eq!(l2_norm(&ScalarField::zeros(spec)), 0.0);
        let one = ScalarField::constant(spec, 1.0);
        assert_relative_eq!(l2_norm(&one), 10.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn l2_norm_matches_double_loop() {
        let spec = GridSpec::new(7, 5, 2.0, 1.5).unwrap();
        let f = random_field(spec, 11);
        let mut acc = 0.0;
        for j in 0..5 {
            for i in 0..7 {
                let v = f.values()[j * 7 + i];
                acc += spec.hx() * spec.hy() * v * v;
            }
        }
        assert!((l2_norm(&f) - acc.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linf_norm_cases() {
        let spec = GridSpec::unit_square(6).unwrap();
        assert_eq!(linf_norm(&ScalarField::zeros(spec)), 0.0);
        assert_eq!(linf_norm(&ScalarField::constant(spec, -2.5)), 2.5);
        let f = random_field(spec, 3);
        let mut m = 0.0f64;
        for &v in f.values() {
            if v.abs() > m {
                m = v.abs();
            }
        }
        assert_eq!(linf_norm(&f), m);
    }

    #[test]
    fn h1_seminorm_of_eigenmode() {
        assert_eq!(h1_seminorm(&ScalarField::zeros(GridSpec::unit_square(5).unwrap())), 0.0);
        // ||grad sin(pi x) sin(pi y)||^2 = pi^2 / 2 on the unit square
        let exact = PI / 2f64.sqrt();
        let mut prev = f64::INFINITY;
        for n in [15, 31, 63] {
            let f = eigenmode(GridSpec::unit_square(n).unwrap());
            let err = (h1_seminorm(&f) - exact).abs() / exact;
            assert!(err < 5.0 / ((n + 1) * (n + 1)) as f64, "n={n} err={err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn h1_seminorm_is_homogeneous() {
        let f = random_field(GridSpec::unit_square(9).unwrap(), 5);
        assert_relative_eq!(h1_seminorm(&f.scaled(2.0)), 2.0 * h1_seminorm(&f), epsilon = 1e-12);
        assert_relative_eq!(h1_seminorm(&f.scaled(-3.0)), 3.0 * h1_seminorm(&f), epsilon = 1e-12);
    }

    #[test]
    fn v2_inner_eigenmode_and_symmetry() {
        let spec = GridSpec::unit_square(63).unwrap();
        let f = eigenmode(spec);
        let exact = PI * PI / 2.0 + PI.powi(4);
        let got = v2_inner(&f, &f).unwrap();
        assert!((got - exact).abs() / exact < 1e-3, "{got} vs {exact}");
        assert_eq!(v2_inner(&ScalarField::zeros(spec), &f).unwrap(), 0.0);

        let s = GridSpec::new(8, 6, 1.0, 2.0).unwrap();
        let a = random_field(s, 1);
        let b = random_field(s, 2);
        let ab = v2_inner(&a, &b).unwrap();
        let ba = v2_inner(&b, &a).unwrap();
        assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        assert!(v2_inner(&a, &a).unwrap() >= h1_seminorm(&a).powi(2));
    }

    #[test]
    fn v2_inner_rejects_mismatch() {
        let a = ScalarField::zeros(GridSpec::unit_square(4).unwrap());
        let b = ScalarField::zeros(GridSpec::unit_square(5).unwrap());
        assert_eq!(v2_inner(&a, &b), Err(Error::SpecMismatch));
    }

    #[test]
    fn mirror_is_involution() {
        let f = random_field(GridSpec::new(6, 4, 1.0, 1.0).unwrap(), 9);
        assert_eq!(f.mirrored_x().mirrored_x(), f);
    }
}
