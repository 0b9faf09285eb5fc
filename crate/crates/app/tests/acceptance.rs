//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use edgeflow::commands::{restore_cmd, RunOptions};
use edgeflow::Config;
use edgeflow_core::analysis::study::{scenario, shipped_scenarios, DtRule, Scenario};
use edgeflow_core::analysis::{
    check_dissipative, default_gamma_grid, epsilon_limit_study, gamma_stability, gronwall_check, self_consistency_study,
    EigenmodePair, GronwallData, GronwallVerdict, InequalityForm, TestPair,
};
use edgeflow_core::grid::l2_norm;
use edgeflow_core::operators::div_g_grad;
use edgeflow_core::solver::{run, run_from_state, solve_linear, LinearOperator, SolverConfig, State, Trajectory};
use edgeflow_core::{Diffusivity, DiffusivityParams, GridSpec, LambdaField, ModelConfig, ScalarField};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lift<T>(r: Fallible<T>) -> Result<T, String> {
    r.map_err(|e| format!("error: {e}"))
}

fn eigenmode(spec: GridSpec) -> ScalarField {
    ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin())
}

// heat reductions

fn heat_run() -> Fallible<(Trajectory, f64)> {
    let spec = GridSpec::unit_square(127)?;
    let model = ModelConfig::target(Diffusivity::Constant(1.0), LambdaField::constant(spec, 1.0)?);
    let start = Instant::now();
    let traj = run(&eigenmode(spec), &eigenmode(spec), 0.1, &model, &SolverConfig::default().with_dt(1e-4))?;
    Ok((traj, start.elapsed().as_secs_f64()))
}

fn decay_ratio(traj: &Trajectory, v: bool) -> f64 {
    let (a, b) = (traj.initial_state(), traj.final_state());
    if v {
        l2_norm(&b.v) / l2_norm(&a.v)
    } else {
        l2_norm(&b.u) / l2_norm(&a.u)
    }
}

fn heat_u(run: &Fallible<(Trajectory, f64)>) -> Outcome {
    let (traj, secs) = run.as_ref().map_err(|e| format!("error: {e}"))?;
    let exact = (-2.0 * PI * PI * 0.1f64).exp();
    let rel = (decay_ratio(traj, false) / exact - 1.0).abs();
    check(rel < 0.02 && *secs < 30.0, format!("relative error {rel:.2e}, {secs:.1} s"))
}

fn heat_v(run: &Fallible<(Trajectory, f64)>) -> Outcome {
    let (traj, _) = run.as_ref().map_err(|e| format!("error: {e}"))?;
    let rate = -decay_ratio(traj, true).ln() / 0.1;
    let rel = (rate / (2.0 * PI * PI) - 1.0).abs();
    check(rel < 0.02, format!("rate {rate:.4} vs {:.4}, relative {rel:.2e}", 2.0 * PI * PI))
}

// randomized models

fn random_model(rng: &mut ChaCha8Rng, constant_lambda: bool) -> Fallible<(ScalarField, ScalarField, ModelConfig, SolverConfig, f64)> {
    let n = rng.random_range(7..24);
    let spec = GridSpec::new(n, rng.random_range(7..24), 1.0, rng.random_range(0.6..1.5))?;
    let p = DiffusivityParams::new(
        rng.random_range(0.2..3.0),
        rng.random_range(0.2..3.0),
        rng.random_range(0.5..200.0),
        rng.random_range(1.0..=2.0),
    )?;
    let lambda = if constant_lambda || rng.random_bool(0.5) {
        LambdaField::constant(spec, rng.random_range(0.05..=1.0))?
    } else {
        LambdaField::radial(spec, rng.random_range(0.05..0.9))?
    };
    let eps = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(1e-4..1e-2) };
    let delta = rng.random_range(0.0..=1.0);
    let model = ModelConfig::target(Diffusivity::Rational(p), lambda).with_epsilon(eps).with_delta(delta);
    model.validated()?;
    let (k1, k2, amp) = (rng.random_range(1..4) as f64, rng.random_range(1..4) as f64, rng.random_range(0.2..4.0));
    let (ly, cx, cy) = (spec.ly(), rng.random_range(0.2..0.8), rng.random_range(0.2..0.8) * spec.ly());
    let u0 = ScalarField::from_fn(spec, |x, y| {
        amp * (k1 * PI * x).sin() * (k2 * PI * y / ly).sin() + if (x - cx).abs() < 0.2 && (y - cy).abs() < 0.2 { 1.0 } else { 0.0 }
    });
    let v0 = ScalarField::from_fn(spec, |x, y| rng_free_bump(x, y / ly)).scaled(rng.random_range(0.0..2.0));
    let dt = rng.random_range(1e-3..0.05);
    Ok((u0, v0, model, SolverConfig::default().with_dt(dt), dt * rng.random_range(3..12) as f64))
}

fn rng_free_bump(x: f64, y: f64) -> f64 {
    16.0 * x * (1.0 - x) * y * (1.0 - y)
}

fn energy_random() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (u0, v0, model, solver, t_end) = lift(random_model(&mut rng, false))?;
        let traj = lift(run(&u0, &v0, t_end, &model, &solver).map_err(Into::into))?;
        let u0_sq = l2_norm(&traj.u0).powi(2);
        for e in traj.energy_checks() {
            worst = worst.max((e.energy - e.energy_bound) / u0_sq.max(f64::MIN_POSITIVE));
        }
    }
    check(worst <= 1e-10, format!("20 configs, max (energy - bound) / ||u0||^2 = {worst:.2e}"))
}

fn nonnegativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = f64::INFINITY;
    for _ in 0..10 {
        let (u0, v0, model, solver, t_end) = lift(random_model(&mut rng, true))?;
        let traj = lift(run(&u0, &v0, t_end, &model, &solver).map_err(Into::into))?;
        worst = traj.diagnostics.iter().map(|d| d.v_min).fold(worst, f64::min);
    }
    check(worst >= -1e-12, format!("10 scenarios, min v = {worst:.3e}"))
}

// shipped scenarios

fn shipped_runs() -> Fallible<Vec<(Scenario, ModelConfig, Trajectory)>> {
    shipped_scenarios()
        .into_iter()
        .map(|s| {
            let (setup, traj) = s.run(s.n)?;
            Ok((s, setup.model, traj))
        })
        .collect()
}

fn phi_bounds(runs: &[(Scenario, ModelConfig, Trajectory)]) -> Outcome {
    let mut lo_slack = f64::INFINITY;
    let mut hi_slack = f64::INFINITY;
    for (_, _, traj) in runs {
        for e in traj.energy_checks() {
            lo_slack = lo_slack.min(e.phi_integral - e.phi_lower);
            hi_slack = hi_slack.min(e.phi_upper + 1e-8 - e.phi_integral);
        }
    }
    check(lo_slack >= 0.0 && hi_slack >= 0.0, format!("{} scenarios, min slack lower {lo_slack:.3e}, upper {hi_slack:.3e}", runs.len()))
}

fn zero_pair(runs: &[(Scenario, ModelConfig, Trajectory)]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (s, model, traj) in runs {
        let form = if s.delta == 1.0 && s.epsilon == 0.0 { InequalityForm::Limit } else { InequalityForm::Regularized };
        let pair = lift(TestPair::zero(traj.spec, &traj.snapshot_times()).map_err(Into::into))?;
        let r = lift(check_dissipative(traj, &pair, 1.1, model, form).map_err(Into::into))?;
        ok &= r.all_passed();
        lines.push(format!("{} {:.2e}", s.name, r.min_slack()));
    }
    check(ok, format!("gamma 1.1, min slack: {}", lines.join(", ")))
}

fn self_consistency() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["heat", "radial-lambda"] {
        let s = Scenario { dt: DtRule::Parabolic(1.0), ..scenario(name).unwrap() };
        let r = lift(self_consistency_study(&s, &[3, 4, 5, 6], 1.1, InequalityForm::Limit).map_err(Into::into))?;
        ok &= r.within_tolerance() && r.improves();
        lines.push(format!(
            "{name}: slack {:?} tol {:?}",
            r.min_slack.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(),
            r.tolerance.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>()
        ));
    }
    check(ok, lines.join("; "))
}

fn gamma_spread() -> Outcome {
    let mode = EigenmodePair { amp_u: 0.5, amp_v: 0.2, k: 1, l: 1, mu: 2.0 * PI * PI };
    let s = scenario("radial-lambda").unwrap();
    let g = lift(gamma_stability(&s, &[31, 63, 127], mode, InequalityForm::Limit, &default_gamma_grid()).map_err(Into::into))?;
    let fitted: Vec<String> = g.fits.iter().map(|f| format!("{:?}", f.gamma)).collect();
    match g.relative_spread() {
        Some(spread) => check(spread < 0.2, format!("gamma* {} spread {spread:.3}", fitted.join(" "))),
        None => Err(format!("no passing gamma on some grid: {}", fitted.join(" "))),
    }
}

fn epsilon_limit() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in shipped_scenarios().into_iter().filter(|s| s.name != "zero") {
        let r = lift(epsilon_limit_study(&s, s.n, 1e-2, 3).map_err(Into::into))?;
        ok &= r.strictly_decreasing();
        lines.push(format!("{} {:?}", s.name, r.u_diffs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()));
    }
    let (ratios, oracle_ok) = lift(expm_oracle())?;
    ok &= oracle_ok;
    lines.push(format!("expm error ratios {ratios:?}"));
    check(ok, lines.join("; "))
}

// dense oracles

fn neg_laplacian(spec: GridSpec) -> DMatrix<f64> {
    let tri = |n: usize, h: f64| {
        DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0 / (h * h),
            1 => -1.0 / (h * h),
            _ => 0.0,
        })
    };
    let (nx, ny) = (spec.nx(), spec.ny());
    DMatrix::identity(ny, ny).kronecker(&tri(nx, spec.hx())) + tri(ny, spec.hy()).kronecker(&DMatrix::identity(nx, nx))
}

fn dense_div_g_grad(spec: GridSpec, g: &[f64]) -> DMatrix<f64> {
    let (nx, ny) = (spec.nx(), spec.ny());
    let mut m = DMatrix::zeros(nx * ny, nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let p = j * nx + i;
            let nb = [(i > 0).then(|| p - 1), (i + 1 < nx).then(|| p + 1), (j > 0).then(|| p - nx), (j + 1 < ny).then(|| p + nx)];
            for (d, q) in nb.into_iter().enumerate() {
                let h2 = if d < 2 { spec.hx().powi(2) } else { spec.hy().powi(2) };
                match q {
                    Some(q) => {
                        let c = 0.5 * (g[p] + g[q]) / h2;
                        m[(p, q)] += c;
                        m[(p, p)] -= c;
                    }
                    None => m[(p, p)] -= g[p] / h2,
                }
            }
        }
    }
    m
}

fn to_vec(f: &ScalarField) -> DVector<f64> {
    DVector::from_vec(f.values().to_vec())
}

fn expm_apply(m: &DMatrix<f64>, t: f64, x: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (t * l).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose() * x
}

/// `delta = 0`, `u_t = -eps A u` against `exp(-eps A T) u0` on 8x8.
fn expm_oracle() -> Fallible<(Vec<String>, bool)> {
    let spec = GridSpec::unit_square(8)?;
    let l = neg_laplacian(spec);
    let a = &l + &l * &l;
    let u0 = ScalarField::from_fn(spec, |x, y| (PI * x).sin() * (PI * y).sin() + 0.3 * (2.0 * PI * x).sin() * (PI * y).sin());
    let v0 = ScalarField::from_fn(spec, rng_free_bump);
    let lambda = LambdaField::constant(spec, 0.7)?;
    let mut errors = Vec::new();
    for m in 0..4 {
        let eps = 1e-3 * 0.5f64.powi(m);
        let model = ModelConfig::target(Diffusivity::Constant(1.0), lambda.clone()).with_epsilon(eps).with_delta(0.0);
        let traj = run_from_state(State::new(u0.clone(), v0.clone(), 0.0)?, 0.01, &model, &SolverConfig::default().with_dt(1e-3))?;
        let exact = expm_apply(&(-&a * eps), 0.01, &to_vec(&u0));
        errors.push((to_vec(&traj.final_state().u) - &exact).norm() / exact.norm());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = errors[0] < 1e-3 && ratios.iter().all(|&r| r >= 3.0);
    Ok((ratios.iter().map(|r| format!("{r:.2}")).collect(), ok))
}

struct Implicit {
    spec: GridSpec,
    g: ScalarField,
    diag: Vec<f64>,
    dt: f64,
}

impl LinearOperator for Implicit {
    fn len(&self) -> usize {
        self.spec.len()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let d = div_g_grad(&ScalarField::from_values(self.spec, x.to_vec()).unwrap(), &self.g).unwrap();
        for k in 0..x.len() {
            y[k] = x[k] - self.dt * d.values()[k];
        }
    }

    fn diagonal(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.diag);
    }
}

fn dense_oracles() -> Outcome {
    let run = || -> Fallible<(f64, f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let spec = GridSpec::unit_square(6)?;
        let g: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(0.1..2.0)).collect();
        let gf = ScalarField::from_values(spec, g.clone())?;
        let n = spec.len();
        let mut ours = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            ours.set_column(c, &to_vec(&div_g_grad(&ScalarField::from_values(spec, e)?, &gf)?));
        }
        let oracle = dense_div_g_grad(spec, &g);
        let scale = oracle.amax();
        let mismatch = (&ours - &oracle).amax() / scale;
        let asym = (&ours - ours.transpose()).amax() / scale;
        let top = SymmetricEigen::new(0.5 * (&ours + ours.transpose())).eigenvalues.max() / scale;

        let spec = GridSpec::unit_square(8)?;
        let g: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(0.05..3.0)).collect();
        let b: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dt = 0.05;
        let m = DMatrix::identity(spec.len(), spec.len()) - dense_div_g_grad(spec, &g) * dt;
        let exact = m.clone().lu().solve(&DVector::from_vec(b.clone())).ok_or("singular")?;
        let mut op = Implicit { spec, g: ScalarField::from_values(spec, g)?, diag: m.diagonal().iter().copied().collect(), dt };
        let x = solve_linear(&mut op, &ScalarField::from_values(spec, b)?, 1e-12, 1000)?;
        let solve = (to_vec(&x) - &exact).norm() / exact.norm();
        Ok((mismatch, asym, top, solve))
    };
    let (mismatch, asym, top, solve) = lift(run())?;
    check(
        mismatch <= 1e-12 && asym <= 1e-12 && top <= 1e-12 && solve <= 1e-8,
        format!("6x6 mismatch {mismatch:.1e}, asymmetry {asym:.1e}, top eigenvalue {top:.1e}; 8x8 solve {solve:.1e}"),
    )
}

fn gronwall_equality() -> Outcome {
    let cases = [
        ("f' = f, L = 1", GronwallData::sample(1.0, 1000, f64::exp, |_| 0.0, |_| 1.0, |_| 0.0)),
        ("constant f", GronwallData::sample(1.0, 1000, |_| 2.5, |_| 0.0, |_| 0.0, |_| 0.0)),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, data) in cases {
        let r = gronwall_check(&lift(data.map_err(Into::into))?);
        let gap = r.lhs.iter().zip(&r.bound).map(|(l, b)| (l - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
        ok &= r.verdict == GronwallVerdict::Pass && gap <= 1e-6;
        lines.push(format!("{name}: {:?}, max relative gap {gap:.1e}", r.verdict));
    }
    check(ok, lines.join("; "))
}

// restoration

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn restoration() -> Outcome {
    let cfg = lift(Config::load(&configs_dir().join("restore.conf")).map_err(Into::into))?;
    let (a, b) = (lift(tempfile::tempdir().map_err(Into::into))?, lift(tempfile::tempdir().map_err(Into::into))?);
    let start = Instant::now();
    let ma = lift(restore_cmd(&cfg, &RunOptions { out: a.path().into(), seed: None }).map_err(Into::into))?.manifest;
    let secs = start.elapsed().as_secs_f64();
    let mb = lift(restore_cmd(&cfg, &RunOptions { out: b.path().into(), seed: None }).map_err(Into::into))?.manifest;
    let (noisy, restored) = (ma.summary.psnr_noisy.unwrap_or(f64::NAN), ma.summary.psnr_restored.unwrap_or(f64::NAN));
    let same_files = ma.outputs == mb.outputs
        && std::fs::read(a.path().join("restored.pgm")).ok() == std::fs::read(b.path().join("restored.pgm")).ok();
    check(
        restored - noisy >= 2.0 && same_files && secs < 120.0,
        format!("PSNR {noisy:.2} -> {restored:.2} dB, reproducible {same_files}, {secs:.1} s"),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let heat = heat_run();
    results.push(("heat decay of u", heat_u(&heat)));
    results.push(("heat decay of v with lambda = 1", heat_v(&heat)));
    drop(heat);
    results.push(("energy estimate", energy_random()));
    match shipped_runs() {
        Ok(runs) => {
            results.push(("phi bounds", phi_bounds(&runs)));
            results.push(("zero pair", zero_pair(&runs)));
        }
        Err(e) => {
            results.push(("phi bounds", Err(format!("error: {e}"))));
            results.push(("zero pair", Err(format!("error: {e}"))));
        }
    }
    results.push(("self-consistency", self_consistency()));
    results.push(("gamma stability", gamma_spread()));
    results.push(("epsilon limit", epsilon_limit()));
    results.push(("gronwall equality", gronwall_equality()));
    results.push(("dense oracles", dense_oracles()));
    results.push(("restoration", restoration()));
    results.push(("nonnegativity", nonnegativity()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
