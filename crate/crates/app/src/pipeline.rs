//! Image restoration: load, perturb, evolve, convert back.

use std::fmt::Write as _;
use std::path::PathBuf;

use edgeflow_core::operators::{gradient_magnitude, FaceAverage};
use edgeflow_core::solver::{run, Scheme, SolverConfig, Trajectory};
use edgeflow_core::{Diffusivity, DiffusivityParams, GridSpec, LambdaField, ModelConfig, ScalarField};

use crate::config::Config;
use crate::convert::{field_to_image, image_to_field, resample_nearest, FieldMode, Lift};
use crate::error::{AppError, AppResult};
use crate::image::{load_image, Format, ImageBuffer};
use crate::noise::{add_gaussian_noise, psnr, synthetic_shapes};

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Synthetic(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Constant(f64),
    Radial(f64),
    Image { path: PathBuf, min: f64 },
}

impl LambdaSpec {
    /// Parses a sweep entry `constant:<value>` or `radial:<min>`.
    pub fn parse_preset(s: &str) -> Result<Self, String> {
        let (kind, value) = s.split_once(':').ok_or_else(|| format!("expected kind:value, got `{s}`"))?;
        let value: f64 = value.trim().parse().map_err(|e| format!("`{value}`: {e}"))?;
        match kind.trim() {
            "constant" => Ok(LambdaSpec::Constant(value)),
            "radial" => Ok(LambdaSpec::Radial(value)),
            k => Err(format!("unknown lambda preset `{k}`")),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LambdaSpec::Constant(c) => format!("constant:{c}"),
            LambdaSpec::Radial(m) => format!("radial:{m}"),
            LambdaSpec::Image { min, .. } => format!("image:{min}"),
        }
    }

    fn build(&self, spec: GridSpec, resample: bool) -> AppResult<LambdaField> {
        Ok(match self {
            LambdaSpec::Constant(c) => LambdaField::constant(spec, *c)?,
            LambdaSpec::Radial(m) => LambdaField::radial(spec, *m)?,
            LambdaSpec::Image { path, min } => {
                let img = fit_to_grid(load_image(path)?, spec, resample, "model.lambda_image")?;
                let data: Vec<f64> = img.pixels().iter().map(|&p| p as f64).collect();
                LambdaField::from_intensities(spec, &data, *min)?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeSeed {
    /// `scale |grad u0|` of the noisy field.
    Gradient(f64),
    Zero,
}

/// Everything [`restore`] needs, read from a [`Config`].
#[derive(Debug, Clone, PartialEq)]
pub struct RestoreSettings {
    pub source: Source,
    pub noise_sigma: f64,
    pub seed: u64,
    pub h: f64,
    pub grid: Option<(usize, usize)>,
    pub resample: bool,
    pub diffusivity: Diffusivity,
    pub lambda: LambdaSpec,
    pub epsilon: f64,
    pub delta: f64,
    pub v0: EdgeSeed,
    pub solver: SolverConfig,
    pub t_end: f64,
    pub mode: FieldMode,
    pub format: Format,
}

fn choice<'a>(cfg: &'a Config, key: &str, allowed: &[&str]) -> AppResult<&'a str> {
    let v = cfg.raw(key)?;
    if allowed.contains(&v) {
        Ok(v)
    } else {
        Err(AppError::bad_value(key, format!("`{v}` is not one of {}", allowed.join(", "))))
    }
}

impl RestoreSettings {
    pub fn from_config(cfg: &Config) -> AppResult<Self> {
        let source = match cfg.raw("input.image")? {
            "synthetic" => Source::Synthetic(cfg.get("input.size")?),
            _ => Source::File(cfg.path("input.image")?),
        };
        let diffusivity = match choice(cfg, "model.g", &["rational", "constant"])? {
            "constant" => Diffusivity::Constant(cfg.get("model.g0")?),
            _ => Diffusivity::Rational(
                DiffusivityParams::new(cfg.get("model.a")?, cfg.get("model.b")?, cfg.get("model.c")?, cfg.get("model.d")?)
                    .map_err(|e| AppError::Validation(e.to_string()))?,
            ),
        };
        let lambda = match choice(cfg, "model.lambda", &["constant", "radial", "image"])? {
            "constant" => LambdaSpec::Constant(cfg.get("model.lambda_value")?),
            "radial" => LambdaSpec::Radial(cfg.get("model.lambda_min")?),
            _ => LambdaSpec::Image { path: cfg.path("model.lambda_image")?, min: cfg.get("model.lambda_min")? },
        };
        let v0 = match choice(cfg, "model.v0", &["gradient", "zero"])? {
            "zero" => EdgeSeed::Zero,
            _ => EdgeSeed::Gradient(cfg.get("model.v0_scale")?),
        };
        let scheme = match choice(cfg, "solver.scheme", &["semi-implicit", "explicit"])? {
            "explicit" => Scheme::Explicit,
            _ => Scheme::SemiImplicit,
        };
        let face_average = match choice(cfg, "solver.face_average", &["arithmetic", "harmonic"])? {
            "harmonic" => FaceAverage::Harmonic,
            _ => FaceAverage::Arithmetic,
        };
        let solver = SolverConfig {
            dt: cfg.get("solver.dt")?,
            scheme,
            picard_tol: cfg.get("solver.picard_tol")?,
            picard_max: cfg.get("solver.picard_max")?,
            linsolve_tol: cfg.get("solver.linsolve_tol")?,
            linsolve_max: cfg.get("solver.linsolve_max")?,
            face_average,
            snapshot_stride: cfg.get("solver.stride")?,
        };
        solver.validate().map_err(|e| AppError::Validation(e.to_string()))?;
        let t_end: f64 = cfg.get("solver.t_end")?;
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(AppError::bad_value("solver.t_end", "final time must be positive"));
        }
        let grid = match (cfg.get_opt("grid.nx")?, cfg.get_opt("grid.ny")?) {
            (Some(nx), Some(ny)) => Some((nx, ny)),
            (None, None) => None,
            _ => return Err(AppError::Validation("grid.nx and grid.ny must be given together".into())),
        };
        let format = match choice(cfg, "image.format", &["pgm", "png"])? {
            "png" => Format::Png,
            _ => Format::PgmBinary,
        };
        Ok(Self {
            source,
            noise_sigma: cfg.get("input.noise_sigma")?,
            seed: cfg.get("input.seed")?,
            h: cfg.get("grid.h")?,
            grid,
            resample: choice(cfg, "grid.resample", &["none", "nearest"])? == "nearest",
            diffusivity,
            lambda,
            epsilon: cfg.get("model.epsilon")?,
            delta: cfg.get("model.delta")?,
            v0,
            solver,
            t_end,
            mode: cfg.get::<FieldMode>("image.mode")?,
            format,
        })
    }

    pub fn load_clean(&self) -> AppResult<ImageBuffer> {
        match &self.source {
            Source::Synthetic(size) => synthetic_shapes(*size),
            Source::File(path) => Ok(load_image(path)?),
        }
    }
}

fn fit_to_grid(img: ImageBuffer, spec: GridSpec, resample: bool, what: &str) -> AppResult<ImageBuffer> {
    if (img.width(), img.height()) == (spec.nx(), spec.ny()) {
        return Ok(img);
    }
    if !resample {
        return Err(AppError::Validation(format!(
            "{what} is {}x{} but the grid has {}x{} nodes; set grid.resample = nearest",
            img.width(),
            img.height(),
            spec.nx(),
            spec.ny()
        )));
    }
    resample_nearest(&img, spec.nx(), spec.ny())
}

#[derive(Debug, Clone)]
pub struct Restoration {
    /// Reference image on the solver grid.
    pub clean: ImageBuffer,
    pub noisy: ImageBuffer,
    pub restored: ImageBuffer,
    pub lift: Lift,
    pub model: ModelConfig,
    pub trajectory: Trajectory,
    pub psnr_noisy: f64,
    pub psnr_restored: f64,
}

pub fn restore(s: &RestoreSettings) -> AppResult<Restoration> {
    let loaded = s.load_clean()?;
    let (nx, ny) = s.grid.unwrap_or((loaded.width(), loaded.height()));
    let spec = GridSpec::new(nx, ny, (nx + 1) as f64 * s.h, (ny + 1) as f64 * s.h)?;
    let clean = fit_to_grid(loaded, spec, s.resample, "input image")?;
    let noisy = add_gaussian_noise(&clean, s.noise_sigma, s.seed)?;
    let (u0, lift) = image_to_field(&noisy, spec, s.mode)?;
    let v0 = match s.v0 {
        EdgeSeed::Zero => ScalarField::zeros(spec),
        EdgeSeed::Gradient(scale) => gradient_magnitude(&u0)?.scaled(scale),
    };
    let model = ModelConfig::target(s.diffusivity, s.lambda.build(spec, s.resample)?)
        .with_epsilon(s.epsilon)
        .with_delta(s.delta);
    model.validated().map_err(|e| AppError::Validation(e.to_string()))?;
    let trajectory = run(&u0, &v0, s.t_end, &model, &s.solver)?;
    let restored = field_to_image(&trajectory.final_state().u, &lift)?;
    Ok(Restoration {
        psnr_noisy: psnr(&clean, &noisy)?,
        psnr_restored: psnr(&clean, &restored)?,
        clean,
        noisy,
        restored,
        lift,
        model,
        trajectory,
    })
}

/// One row per time node: norms, dissipation, `Phi^2`, and the energy balance.
pub fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from(
        "time,u_l2,v_l2,v_h1,grad_u_l1,v_min,dissipation,phi_sq,energy,energy_bound,picard_iterations,linear_iterations\n",
    );
    for (d, e) in traj.diagnostics.iter().zip(traj.energy_checks()) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            d.t,
            d.u_l2,
            d.v_l2,
            d.v_h1,
            d.grad_u_l1,
            d.v_min,
            d.step.dissipation,
            d.step.phi_sq,
            e.energy,
            e.energy_bound,
            d.step.picard_iterations,
            d.step.linear_iterations
        )
        .unwrap();
    }
    out
}
