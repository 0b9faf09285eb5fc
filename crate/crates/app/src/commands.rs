//! The four subcommands. Each reads a [`Config`], writes into one output
//! directory through a single [`OutputDir`], and ends with `manifest.json`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use edgeflow_core::analysis::study::{
    check_levels, epsilon_ladder, level_nodes, scenario, shipped_scenarios, Scenario, Setup,
};
use edgeflow_core::analysis::{
    catalog, fit_minimal_gamma, gronwall_check, ladyzhenskaya_check, sobolev_constant_estimate,
    default_gamma_grid, ConvergenceReport, DissipativeData, EigenmodePair, EpsilonReport, GronwallData,
    GronwallVerdict, InequalityForm, sampled_derivative, TestPair, LADYZHENSKAYA,
};
use edgeflow_core::solver::{State, Trajectory};

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::image::{encode, Format};
use crate::manifest::{digest_file, OutputDir, RunManifest};
use crate::pipeline::{diagnostics_csv, restore, LambdaSpec, RestoreSettings, Source};

/// Allowance in the energy check, relative to `||u0||^2`.
pub const ENERGY_TOL: f64 = 1e-10;
/// Absolute allowance in the `Phi` bounds.
pub const PHI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides `input.seed`.
    pub seed: Option<u64>,
}

/// What a command leaves behind: its manifest and a few human-readable lines.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub lines: Vec<String>,
}

fn with_seed(cfg: &Config, opts: &RunOptions) -> AppResult<(Config, u64)> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.set("input.seed", seed.to_string())?;
    }
    let seed = cfg.get("input.seed")?;
    Ok((cfg, seed))
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Png => "png",
        _ => "pgm",
    }
}

/// `energy <= delta/2 ||u0||^2 + tol ||u0||^2` and both `Phi` bounds at every node.
pub fn energy_flags(traj: &Trajectory) -> (bool, bool) {
    let u0_sq = edgeflow_core::grid::l2_norm(&traj.u0).powi(2);
    let checks = traj.energy_checks();
    let energy = checks.iter().all(|c| c.energy <= c.energy_bound + ENERGY_TOL * u0_sq);
    let phi = checks.iter().all(|c| c.phi_lower <= c.phi_integral + PHI_TOL && c.phi_integral <= c.phi_upper + PHI_TOL);
    (energy, phi)
}

pub fn restore_cmd(cfg: &Config, opts: &RunOptions) -> AppResult<Outcome> {
    let start = Instant::now();
    let (cfg, seed) = with_seed(cfg, opts)?;
    let settings = RestoreSettings::from_config(&cfg)?;
    let mut manifest = RunManifest::new("restore", seed, cfg.snapshot());
    if let Source::File(p) = &settings.source {
        manifest.inputs.push(digest_file(p)?);
    }
    if let LambdaSpec::Image { path, .. } = &settings.lambda {
        manifest.inputs.push(digest_file(path)?);
    }
    let r = restore(&settings)?;
    let mut out = OutputDir::create(&opts.out)?;
    let ext = extension(settings.format);
    out.write(&format!("clean.{ext}"), &encode(&r.clean, settings.format)?)?;
    out.write(&format!("noisy.{ext}"), &encode(&r.noisy, settings.format)?)?;
    out.write(&format!("restored.{ext}"), &encode(&r.restored, settings.format)?)?;
    out.write("diagnostics.csv", diagnostics_csv(&r.trajectory).as_bytes())?;
    let (energy_ok, phi_ok) = energy_flags(&r.trajectory);
    manifest.summary.psnr_noisy = Some(r.psnr_noisy);
    manifest.summary.psnr_restored = Some(r.psnr_restored);
    manifest.summary.energy_curve = Some("diagnostics.csv".into());
    manifest.summary.passed = Some(energy_ok && phi_ok);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest = out.finish(manifest)?;
    let lines = vec![
        format!("psnr noisy    {:.3} dB", r.psnr_noisy),
        format!("psnr restored {:.3} dB ({:+.3} dB)", r.psnr_restored, r.psnr_restored - r.psnr_noisy),
        format!(
            "steps {} (halved {}), energy bound {}, phi bounds {}",
            r.trajectory.diagnostics.len() - 1,
            r.trajectory.halvings,
            if energy_ok { "ok" } else { "VIOLATED" },
            if phi_ok { "ok" } else { "VIOLATED" }
        ),
    ];
    Ok(Outcome { manifest, lines })
}

fn named_scenario(cfg: &Config, key: &str) -> AppResult<Scenario> {
    let name = cfg.raw(key)?;
    scenario(name).ok_or_else(|| {
        let known: Vec<String> = shipped_scenarios().into_iter().map(|s| s.name).collect();
        AppError::bad_value(key, format!("unknown scenario `{name}` (known: {})", known.join(", ")))
    })
}

fn slug(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect();
    s.trim_matches('-').to_string()
}

/// Amplitude of the probe pair; far above the admissibility limit.
pub const PROBE_AMPLITUDE: f64 = 1e7;

pub fn verify_cmd(cfg: &Config, opts: &RunOptions) -> AppResult<Outcome> {
    let start = Instant::now();
    let (cfg, seed) = with_seed(cfg, opts)?;
    let sc = named_scenario(&cfg, "verify.scenario")?;
    let n: usize = cfg.get("verify.n")?;
    let gamma: f64 = cfg.get("verify.gamma")?;
    if !(gamma > 1.0) {
        return Err(AppError::bad_value("verify.gamma", "gamma > 1 violated"));
    }
    let form = match cfg.raw("verify.form")? {
        "limit" => InequalityForm::Limit,
        "regularized" => InequalityForm::Regularized,
        "auto" if sc.epsilon == 0.0 && sc.delta == 1.0 => InequalityForm::Limit,
        "auto" => InequalityForm::Regularized,
        other => return Err(AppError::bad_value("verify.form", format!("`{other}` is not auto, limit or regularized"))),
    };
    let probe: bool = cfg.get("verify.inadmissible_probe")?;
    let (setup, traj) = sc.run(n)?;
    let spec = traj.spec;
    let times = traj.snapshot_times();
    let mut pairs = catalog(spec, &times)?;
    if probe {
        let mut p = TestPair::eigenmode(
            spec,
            &times,
            EigenmodePair { amp_u: PROBE_AMPLITUDE, amp_v: 0.0, k: 1, l: 1, mu: 0.0 },
        )?;
        p.name = "inadmissible-probe".into();
        pairs.push(p);
    }

    let mut out = OutputDir::create(&opts.out)?;
    let mut manifest = RunManifest::new("verify", seed, cfg.snapshot());
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    let mut gamma_table = String::from("pair,admissible,passed,min_slack,gamma_star\n");
    let mut gamma_star: Option<f64> = Some(1.0);
    let grid = default_gamma_grid();
    for pair in &pairs {
        let data = DissipativeData::new(&traj, pair, &setup.model, form)?;
        let report = data.report(gamma)?;
        let fit = fit_minimal_gamma(&traj, pair, &setup.model, form, &grid)?;
        out.write(&format!("dissipative_{}.csv", slug(&pair.name)), report.to_csv().as_bytes())?;
        for w in &report.warnings {
            warnings.push(format!("{}: {w}", pair.name));
        }
        let star = fit.gamma.map_or(String::new(), |g| g.to_string());
        writeln!(gamma_table, "{},{},{},{},{}", pair.name, report.admissible, report.all_passed(), report.min_slack(), star)
            .unwrap();
        if report.admissible {
            if !report.all_passed() {
                failures.push(format!("dissipative inequality for {} at gamma = {gamma}", pair.name));
            }
            gamma_star = match (gamma_star, fit.gamma) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
    }
    out.write("gamma.csv", gamma_table.as_bytes())?;

    let mut energy = String::from("time,energy,energy_bound,phi_integral,phi_lower,phi_upper\n");
    for c in traj.energy_checks() {
        writeln!(energy, "{},{},{},{},{},{}", c.t, c.energy, c.energy_bound, c.phi_integral, c.phi_lower, c.phi_upper)
            .unwrap();
    }
    out.write("energy.csv", energy.as_bytes())?;
    let (energy_ok, phi_ok) = energy_flags(&traj);
    if !energy_ok {
        failures.push("energy estimate".into());
    }
    if !phi_ok {
        failures.push("Phi bounds".into());
    }

    // f = ||u||^2, chi = 2 (delta g grad u, grad u), L = 0, and M the
    // measured defect max(0, f' + chi) of the sampled derivative
    let t: Vec<f64> = traj.diagnostics.iter().map(|d| d.t).collect();
    let f: Vec<f64> = traj.diagnostics.iter().map(|d| d.u_l2 * d.u_l2).collect();
    let chi: Vec<f64> = traj.diagnostics.iter().map(|d| 2.0 * d.step.dissipation).collect();
    let m: Vec<f64> = if t.len() >= 3 {
        sampled_derivative(&t, &f).iter().zip(&chi).map(|(fp, c)| (fp + c).max(0.0)).collect()
    } else {
        vec![0.0; t.len()]
    };
    let forcing = m.iter().copied().fold(0.0, f64::max);
    let gronwall = match GronwallData::new(t.clone(), f, chi, vec![0.0; t.len()], m) {
        Ok(data) => {
            let r = gronwall_check(&data);
            let mut table = String::from("time,lhs,bound\n");
            for k in 0..t.len() {
                writeln!(table, "{},{},{}", t[k], r.lhs[k], r.bound[k]).unwrap();
            }
            out.write("gronwall.csv", table.as_bytes())?;
            if r.verdict == GronwallVerdict::Fail {
                failures.push("Gronwall bound".into());
            }
            format!("{:?}", r.verdict)
        }
        Err(e) => format!("n/a ({e})"),
    };
    let lady = ladyzhenskaya_check(&traj.final_state().u);
    if lady > LADYZHENSKAYA {
        failures.push("Ladyzhenskaya inequality".into());
    }
    let snapshots: Vec<_> = traj.snapshots.iter().map(|s| s.state.u.clone()).collect();
    let sobolev = sobolev_constant_estimate(&snapshots).map_or("n/a".to_string(), |c| c.to_string());

    let passed = failures.is_empty();
    let star = gamma_star.map_or("none".to_string(), |g| g.to_string());
    let mut summary = String::new();
    writeln!(summary, "scenario={}", sc.name).unwrap();
    writeln!(summary, "n={n}").unwrap();
    writeln!(summary, "form={form:?}").unwrap();
    writeln!(summary, "gamma={gamma}").unwrap();
    writeln!(summary, "gamma_star={star}").unwrap();
    writeln!(summary, "energy_ok={energy_ok}").unwrap();
    writeln!(summary, "phi_ok={phi_ok}").unwrap();
    writeln!(summary, "gronwall={gronwall}").unwrap();
    writeln!(summary, "gronwall_forcing_max={forcing}").unwrap();
    writeln!(summary, "ladyzhenskaya_ratio={lady}").unwrap();
    writeln!(summary, "sobolev_estimate={sobolev}").unwrap();
    writeln!(summary, "passed={passed}").unwrap();
    for w in &warnings {
        writeln!(summary, "warning={w}").unwrap();
    }
    out.write("verify.txt", summary.as_bytes())?;
    manifest.summary.gamma_star = gamma_star;
    manifest.summary.energy_curve = Some("energy.csv".into());
    manifest.summary.passed = Some(passed);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest = out.finish(manifest)?;
    if !passed {
        return Err(AppError::ChecksFailed(failures.join("; ")));
    }
    let mut lines = vec![format!("{}: all checks passed, gamma* = {star}", sc.name)];
    lines.extend(warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Outcome { manifest, lines })
}

/// A list key, or the single value of its fallback key.
fn axis(cfg: &Config, key: &str, fallback: &str) -> AppResult<Vec<String>> {
    let raw = if cfg.is_set(key) { cfg.raw(key)? } else { cfg.raw(fallback)? };
    let items: Vec<String> = raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(AppError::bad_value(key, "empty list"));
    }
    Ok(items)
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    pub lambda: String,
    pub dt: String,
    pub t_end: String,
    pub psnr_noisy: f64,
    pub psnr_restored: f64,
    /// `||u(T)||^2 / ||u(0)||^2`.
    pub energy_decay: f64,
    pub energy_ok: bool,
    pub phi_ok: bool,
    pub v_min: f64,
    pub halvings: usize,
}

fn sweep_cells(cfg: &Config) -> AppResult<Vec<Config>> {
    let a = axis(cfg, "sweep.a", "model.a")?;
    let b = axis(cfg, "sweep.b", "model.b")?;
    let c = axis(cfg, "sweep.c", "model.c")?;
    let d = axis(cfg, "sweep.d", "model.d")?;
    let lambda = if cfg.is_set("sweep.lambda") {
        let mut v = Vec::new();
        for item in axis(cfg, "sweep.lambda", "sweep.lambda")? {
            LambdaSpec::parse_preset(&item).map_err(|e| AppError::bad_value("sweep.lambda", e))?;
            v.push(Some(item));
        }
        v
    } else {
        vec![None]
    };
    let dt = axis(cfg, "sweep.dt", "solver.dt")?;
    let t_end = axis(cfg, "sweep.t_end", "solver.t_end")?;
    let mut cells = Vec::new();
    for a in &a {
        for b in &b {
            for c in &c {
                for d in &d {
                    for l in &lambda {
                        for dt in &dt {
                            for t in &t_end {
                                let mut cell = cfg.clone();
                                cell.set("model.a", a.clone())?;
                                cell.set("model.b", b.clone())?;
                                cell.set("model.c", c.clone())?;
                                cell.set("model.d", d.clone())?;
                                if let Some(l) = l {
                                    let (kind, value) = l.split_once(':').expect("checked above");
                                    cell.set("model.lambda", kind.trim())?;
                                    let key = if kind.trim() == "constant" { "model.lambda_value" } else { "model.lambda_min" };
                                    cell.set(key, value.trim())?;
                                }
                                cell.set("solver.dt", dt.clone())?;
                                cell.set("solver.t_end", t.clone())?;
                                cells.push(cell);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn sweep_row(cell: &Config) -> AppResult<SweepRow> {
    let settings = RestoreSettings::from_config(cell)?;
    let r = restore(&settings)?;
    let traj = &r.trajectory;
    let (energy_ok, phi_ok) = energy_flags(traj);
    let first = traj.diagnostics[0].u_l2;
    let last = traj.diagnostics.last().expect("nonempty").u_l2;
    Ok(SweepRow {
        a: cell.raw("model.a")?.into(),
        b: cell.raw("model.b")?.into(),
        c: cell.raw("model.c")?.into(),
        d: cell.raw("model.d")?.into(),
        lambda: settings.lambda.label(),
        dt: cell.raw("solver.dt")?.into(),
        t_end: cell.raw("solver.t_end")?.into(),
        psnr_noisy: r.psnr_noisy,
        psnr_restored: r.psnr_restored,
        energy_decay: (last * last) / (first * first),
        energy_ok,
        phi_ok,
        v_min: traj.diagnostics.iter().map(|d| d.v_min).fold(f64::INFINITY, f64::min),
        halvings: traj.halvings,
    })
}

pub const SWEEP_HEADER: &str =
    "cell,a,b,c,d,lambda,dt,t_end,psnr_noisy,psnr_restored,energy_decay,energy_ok,phi_ok,v_min,halvings";

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for (k, r) in rows.iter().enumerate() {
        writeln!(
            s,
            "{k},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.a,
            r.b,
            r.c,
            r.d,
            r.lambda,
            r.dt,
            r.t_end,
            r.psnr_noisy,
            r.psnr_restored,
            r.energy_decay,
            r.energy_ok,
            r.phi_ok,
            r.v_min,
            r.halvings
        )
        .unwrap();
    }
    s
}

pub fn sweep_cmd(cfg: &Config, opts: &RunOptions) -> AppResult<Outcome> {
    let start = Instant::now();
    let (cfg, seed) = with_seed(cfg, opts)?;
    let cells = sweep_cells(&cfg)?;
    let parallel: bool = cfg.get("sweep.parallel")?;
    let results: Vec<AppResult<SweepRow>> = if parallel {
        cells.par_iter().map(sweep_row).collect()
    } else {
        cells.iter().map(sweep_row).collect()
    };
    let rows = results.into_iter().collect::<AppResult<Vec<_>>>()?;
    let mut manifest = RunManifest::new("sweep", seed, cfg.snapshot());
    if let Source::File(p) = RestoreSettings::from_config(&cells[0])?.source {
        manifest.inputs.push(digest_file(&p)?);
    }
    let mut out = OutputDir::create(&opts.out)?;
    out.write("sweep.csv", sweep_table(&rows).as_bytes())?;
    let best = rows.iter().map(|r| r.psnr_restored).fold(f64::NEG_INFINITY, f64::max);
    manifest.summary.psnr_noisy = rows.first().map(|r| r.psnr_noisy);
    manifest.summary.psnr_restored = Some(best);
    manifest.summary.passed = Some(rows.iter().all(|r| r.energy_ok && r.phi_ok));
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest = out.finish(manifest)?;
    let lines = vec![format!("{} cells, best restored psnr {best:.3} dB", rows.len())];
    Ok(Outcome { manifest, lines })
}

fn run_all<T: Sync, F>(items: &[T], parallel: bool, f: F) -> AppResult<Vec<(Setup, State)>>
where
    F: Fn(&T) -> edgeflow_core::Result<(Setup, Trajectory)> + Sync,
{
    let one = |x: &T| f(x).map(|(s, t)| (s, t.final_state().clone())).map_err(AppError::from);
    if parallel {
        items.par_iter().map(one).collect()
    } else {
        items.iter().map(one).collect()
    }
}

fn fmt_opt(x: Option<&f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn converge_cmd(cfg: &Config, opts: &RunOptions) -> AppResult<Outcome> {
    let start = Instant::now();
    let (cfg, seed) = with_seed(cfg, opts)?;
    let sc = named_scenario(&cfg, "converge.scenario")?;
    let levels: Vec<u32> = cfg.list("converge.levels")?;
    check_levels(&levels)?;
    let eps_sc = named_scenario(&cfg, "converge.epsilon_scenario")?;
    let eps_n: usize = cfg.get("converge.epsilon_n")?;
    let epsilons = epsilon_ladder(cfg.get("converge.eps0")?, cfg.get("converge.halvings")?)?;
    let parallel: bool = cfg.get("converge.parallel")?;

    let runs = run_all(&levels, parallel, |&k| sc.run(level_nodes(k)))?;
    let (setups, finals): (Vec<Setup>, Vec<State>) = runs.into_iter().unzip();
    let conv = ConvergenceReport::from_finals(&sc.name, &setups, &finals)?;
    let eps_runs = run_all(&epsilons, parallel, |&e| eps_sc.with_epsilon(e).run(eps_n))?;
    let eps_finals: Vec<State> = eps_runs.into_iter().map(|(_, s)| s).collect();
    let eps = EpsilonReport::from_finals(&eps_sc.name, epsilons, &eps_finals)?;

    let mut table = String::from("level,n,h,dt,u_diff,v_diff,u_order,v_order\n");
    for k in 0..conv.u_diffs.len() {
        let order = |o: &[f64]| fmt_opt(k.checked_sub(1).and_then(|j| o.get(j)));
        writeln!(
            table,
            "{},{},{},{},{},{},{},{}",
            levels[k],
            conv.nodes[k],
            conv.h[k],
            conv.dt[k],
            conv.u_diffs[k],
            conv.v_diffs[k],
            order(&conv.u_orders),
            order(&conv.v_orders)
        )
        .unwrap();
    }
    let mut eps_table = String::from("epsilon,epsilon_next,u_diff,v_diff\n");
    for k in 0..eps.u_diffs.len() {
        writeln!(eps_table, "{},{},{},{}", eps.epsilons[k], eps.epsilons[k + 1], eps.u_diffs[k], eps.v_diffs[k]).unwrap();
    }
    let decreasing = eps.strictly_decreasing();
    let mut summary = conv.summary();
    summary.push_str(&eps.summary());
    writeln!(summary, "epsilon_strictly_decreasing={decreasing}").unwrap();

    let mut out = OutputDir::create(&opts.out)?;
    out.write("convergence.csv", table.as_bytes())?;
    out.write("epsilon.csv", eps_table.as_bytes())?;
    out.write("converge.txt", summary.as_bytes())?;
    let mut manifest = RunManifest::new("converge", seed, cfg.snapshot());
    manifest.summary.passed = Some(decreasing);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest = out.finish(manifest)?;
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    let lines = vec![
        format!("{}: u orders [{}], v orders [{}]", sc.name, join(&conv.u_orders), join(&conv.v_orders)),
        format!(
            "{}: eps differences {} ({})",
            eps_sc.name,
            eps.u_diffs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > "),
            if decreasing { "strictly decreasing" } else { "NOT strictly decreasing" }
        ),
    ];
    Ok(Outcome { manifest, lines })
}
