//! Experiment runners and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use slds_core::attractor::{
    absorbing_radius, absorption_check, contraction_experiment, forward_attraction_check,
    forward_stationarity_check, pullback_experiment, random_equilibrium, EquilibriumOptions,
};
use slds_core::fbm::{fgn_autocovariance, grid_steps, sample_fbm, TimeGrid};
use slds_core::lattice::{apply_a, apply_b, apply_bstar, probe_dissipativity, probe_growth, Boundary, LatticeVector};
use slds_core::noise::{build_noise_field, ou_solution, stationary_ou, tail_factor, NoiseField};
use slds_core::seed::{self, derive_seed, realization_seed, site_seed};
use slds_core::solver::{cocycle_check, integrate};
use slds_core::stats::{covariance_estimate, mean_estimate, variance_estimate};
use slds_core::Error;

use crate::config::{ExperimentConfig, Resolved};
use crate::output::{emit_plot_series, trajectory_table, vector_table, Cell, CsvTable, RadiusSweep};

/// Experiment selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SampleFbm,
    VerifyOperators,
    Simulate,
    Ou,
    Contraction,
    Pullback,
    Equilibrium,
    Absorb,
    Report,
}

impl Command {
    /// Every experiment run by `report`, in order.
    pub const EXPERIMENTS: [Command; 8] = [
        Command::SampleFbm,
        Command::VerifyOperators,
        Command::Simulate,
        Command::Ou,
        Command::Contraction,
        Command::Pullback,
        Command::Equilibrium,
        Command::Absorb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SampleFbm => "sample-fbm",
            Self::VerifyOperators => "verify-operators",
            Self::Simulate => "simulate",
            Self::Ou => "ou",
            Self::Contraction => "contraction",
            Self::Pullback => "pullback",
            Self::Equilibrium => "equilibrium",
            Self::Absorb => "absorb",
            Self::Report => "report",
        }
    }

    fn uses_noise(self) -> bool {
        !matches!(self, Self::SampleFbm | Self::VerifyOperators)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteSeed {
    pub site: i64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: Command,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub site_seeds: Vec<SiteSeed>,
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
    pub timings_ms: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub pass: bool,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

struct RunContext<'a> {
    out_dir: &'a Path,
    artifacts: Vec<String>,
    checks: Vec<Check>,
    timings_ms: BTreeMap<String, f64>,
}

impl RunContext<'_> {
    fn write(&mut self, name: &str, table: &CsvTable) -> anyhow::Result<()> {
        let path = self.out_dir.join(name);
        table.write(&path).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn series(&mut self, name: &str, report: &impl crate::output::PlotSeries) -> anyhow::Result<()> {
        let path = self.out_dir.join(name);
        emit_plot_series(report, &path).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Records `value ≤ threshold`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.checks.push(Check {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        });
    }

    /// Records `value ≥ threshold`.
    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.checks.push(Check {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        });
    }

    fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms
            .insert(label.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

/// Runs `command` and writes its CSV files plus `<command>.json` into
/// `out_dir`. Failures of the experiment itself are recorded in the
/// manifest; only I/O failures on the manifest are returned as errors.
pub fn run(command: Command, config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<RunManifest> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut ctx = RunContext {
        out_dir,
        artifacts: Vec::new(),
        checks: Vec::new(),
        timings_ms: BTreeMap::new(),
    };
    let start = Instant::now();
    let outcome = config
        .resolve()
        .map_err(anyhow::Error::from)
        .and_then(|resolved| execute(command, config, &resolved, &mut ctx));
    ctx.timings_ms
        .insert("total".into(), start.elapsed().as_secs_f64() * 1e3);
    let error = outcome.err().map(|e| format!("{e:#}"));
    let site_seeds = if command.uses_noise() {
        config_site_seeds(config)
    } else {
        Vec::new()
    };
    let pass = error.is_none() && !ctx.checks.is_empty() && ctx.checks.iter().all(|c| c.pass);
    let json_name = format!("{}.json", command.name());
    ctx.artifacts.push(json_name.clone());
    let manifest = RunManifest {
        command,
        config_sha256: config_hash(config),
        config: config.clone(),
        master_seed: config.master_seed,
        site_seeds,
        artifacts: ctx.artifacts,
        checks: ctx.checks,
        timings_ms: ctx.timings_ms,
        error,
        pass,
    };
    let path = out_dir.join(json_name);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

fn config_site_seeds(config: &ExperimentConfig) -> Vec<SiteSeed> {
    match config.sigma.build(config.half_width) {
        Ok(sigma) => sigma
            .sites()
            .filter(|(_, s)| *s != 0.0)
            .map(|(site, _)| SiteSeed {
                site,
                seed: site_seed(config.master_seed, site),
            })
            .collect(),
        Err(_) => Vec::new(),
    }
}

fn starts_seed(master: u64) -> u64 {
    derive_seed(master, &[seed::DOMAIN_STARTS])
}

fn execute(command: Command, config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    match command {
        Command::SampleFbm => sample_fbm_cmd(config, r, ctx),
        Command::VerifyOperators => verify_operators(config, r, ctx),
        Command::Simulate => simulate(config, r, ctx),
        Command::Ou => ou(config, r, ctx),
        Command::Contraction => contraction(config, r, ctx),
        Command::Pullback => pullback(config, r, ctx),
        Command::Equilibrium => equilibrium(config, r, ctx),
        Command::Absorb => absorb(config, r, ctx),
        Command::Report => report(config, ctx),
    }
}

fn noise(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<NoiseField> {
    Ok(ctx.timed("noise", || {
        build_noise_field(&r.params, r.grid, r.hurst, config.master_seed)
    })?)
}

fn sample_fbm_cmd(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let sc = &config.sample_fbm;
    let (h, dt, steps) = (r.hurst, config.dt, sc.n_steps);
    let paths = ctx.timed("sampling", || {
        (0..sc.n_paths as u64)
            .into_par_iter()
            .map(|i| sample_fbm(steps, h, dt, realization_seed(config.master_seed, i)))
            .collect::<slds_core::Result<Vec<_>>>()
    })?;
    let mut table = CsvTable::new(&["t", "value"]);
    for (t, v) in paths[0].grid().times().zip(paths[0].values()) {
        table.push(vec![t.into(), v.into()]);
    }
    ctx.write("sample-fbm.csv", &table)?;
    let mut ensemble = CsvTable::new(&["path", "t", "value"]);
    for (p, path) in paths.iter().enumerate().take(sc.paths_written) {
        for (t, v) in path.grid().times().zip(path.values()) {
            ensemble.push(vec![p.into(), t.into(), v.into()]);
        }
    }
    ctx.write("sample-fbm_paths.csv", &ensemble)?;

    let t_end = steps as f64 * dt;
    let terminal: Vec<f64> = paths.iter().map(|p| p.value(steps)).collect();
    let mean = mean_estimate(&terminal);
    ctx.at_most("terminal_mean_z", (mean.value / mean.std_error).abs(), sc.z_tol);
    let var = variance_estimate(&terminal);
    let target = t_end.powf(2.0 * h.value());
    ctx.at_most("terminal_variance_z", ((var.value - target) / var.std_error).abs(), sc.z_tol);
    if steps >= 2 {
        let first: Vec<f64> = paths.iter().map(|p| p.value(1) - p.value(0)).collect();
        let second: Vec<f64> = paths.iter().map(|p| p.value(2) - p.value(1)).collect();
        let cov = covariance_estimate(&first, &second);
        let target = fgn_autocovariance(1, h, dt);
        ctx.at_most("lag1_covariance_z", ((cov.value - target) / cov.std_error).abs(), sc.z_tol);
    }
    Ok(())
}

fn verify_operators(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let oc = &config.operators;
    let n = config.half_width;
    let mut rng = seed::rng(derive_seed(config.master_seed, &[seed::DOMAIN_PROBE, 2]));
    let mut table = CsvTable::new(&["sample", "factorization", "adjointness", "positivity"]);
    let (mut fact, mut adj, mut pos): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for k in 0..oc.n_vectors {
        let x = random_vector(&mut rng, n);
        let y = random_vector(&mut rng, n);
        let ax = apply_a(&x, Boundary::Periodic);
        let bbs = apply_b(&apply_bstar(&x, Boundary::Periodic), Boundary::Periodic);
        let bsb = apply_bstar(&apply_b(&x, Boundary::Periodic), Boundary::Periodic);
        let f_k = (ax.distance(&bbs) / x.norm()).max(ax.distance(&bsb) / x.norm());
        let (mut adj_k, mut pos_k) = (0.0f64, f64::INFINITY);
        for boundary in [Boundary::ZeroPadding, Boundary::Periodic] {
            let lhs = apply_bstar(&x, boundary).dot(&y);
            let rhs = x.dot(&apply_b(&y, boundary));
            adj_k = adj_k.max((lhs - rhs).abs() / (x.norm() * y.norm()));
            pos_k = pos_k.min(apply_a(&x, boundary).dot(&x) / x.dot(&x));
        }
        fact = fact.max(f_k);
        adj = adj.max(adj_k);
        pos = pos.min(pos_k);
        table.push(vec![k.into(), f_k.into(), adj_k.into(), pos_k.into()]);
    }
    ctx.write("verify-operators.csv", &table)?;
    ctx.at_most("factorization_periodic", fact, oc.identity_tol);
    ctx.at_most("adjointness", adj, oc.identity_tol);
    ctx.at_least("positivity", pos, -oc.identity_tol);

    let diss = probe_dissipativity(&r.f, n, oc.probe_samples, oc.probe_radius, config.master_seed)?;
    let growth = probe_growth(&r.f, n, oc.probe_samples, oc.probe_radius, config.master_seed)?;
    let mut probes = CsvTable::new(&["probe", "worst", "claimed", "pass"]);
    probes.push(vec![0usize.into(), diss.worst_quotient.into(), (-diss.claimed_l).into(), diss.pass.into()]);
    probes.push(vec![1usize.into(), growth.worst_ratio.into(), growth.claimed_k.into(), growth.pass.into()]);
    ctx.write("verify-operators_probes.csv", &probes)?;
    ctx.checks.push(Check {
        name: "dissipativity".into(),
        value: diss.worst_quotient,
        threshold: -diss.claimed_l,
        pass: diss.pass,
    });
    ctx.checks.push(Check {
        name: "growth".into(),
        value: growth.worst_ratio,
        threshold: growth.claimed_k,
        pass: growth.pass,
    });
    Ok(())
}

fn random_vector(rng: &mut seed::SimRng, n: usize) -> LatticeVector {
    use rand::Rng;
    LatticeVector::from_fn(n, |_| rng.random_range(-1.0..=1.0))
}

fn simulate(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let field = noise(config, r, ctx)?;
    let traj = ctx.timed("integrate", || integrate(&r.u0, &field, &r.params, &r.f, &r.solver))?;
    ctx.write("simulate.csv", &trajectory_table(&traj, "u"))?;
    let half_steps = grid_steps(config.t_end, config.dt)? / 2;
    if half_steps >= 1 {
        let t = half_steps as f64 * config.dt;
        let tau = grid_steps(config.t_end, config.dt)? as f64 * config.dt - t;
        let report = ctx.timed("cocycle", || cocycle_check(t, tau, &field, &r.u0, &r.params, &r.f, &r.solver))?;
        ctx.at_most("cocycle_residual", report.residual, report.threshold);
    }
    Ok(())
}

fn future_grid(config: &ExperimentConfig) -> anyhow::Result<TimeGrid> {
    let steps = grid_steps(config.t_end, config.dt)?;
    Ok(TimeGrid::from_origin(config.dt, steps as usize)?)
}

fn ou(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let field = noise(config, r, ctx)?;
    let eval = future_grid(config)?;
    let lambda = config.lambda;
    let ou = ctx.timed("ou", || stationary_ou(lambda, &field, &eval, config.tail_tol))?;
    let mut values = CsvTable::new(&["t", "i", "ubar"]);
    let mut noise_rows = CsvTable::new(&["t", "i", "w"]);
    for (t, state) in eval.times().zip(&ou.values) {
        for (i, v) in state.sites() {
            values.push(vec![t.into(), i.into(), v.into()]);
        }
        for (i, w) in field.eval_w(t)?.sites() {
            noise_rows.push(vec![t.into(), i.into(), w.into()]);
        }
    }
    ctx.write("ou.csv", &values)?;
    ctx.write("ou_noise.csv", &noise_rows)?;
    ctx.at_most("tail_factor", tail_factor(lambda, ou.horizon), config.tail_tol);
    let forward = ou_solution(&ou.values[0], lambda, &field, &eval)?;
    let scale = 1.0 + ou.values.iter().map(LatticeVector::norm).fold(0.0, f64::max);
    let gap = forward
        .states
        .iter()
        .zip(&ou.values)
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max);
    ctx.at_most("forward_consistency", gap, 1e-9 * scale);
    Ok(())
}

fn contraction(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let field = noise(config, r, ctx)?;
    let report = ctx.timed("contraction", || {
        contraction_experiment(&r.u0, &r.w0, &field, &r.params, &r.f, &r.solver)
    })?;
    let mut table = CsvTable::new(&["t", "distance", "log_distance"]);
    for ((t, d), ld) in report.times.iter().zip(&report.distances).zip(report.log_distances()) {
        table.push(vec![(*t).into(), (*d).into(), ld.into()]);
    }
    ctx.write("contraction.csv", &table)?;
    ctx.series("contraction_series.csv", &report)?;
    ctx.at_least("distinct_starts", f64::from(u8::from(!report.degenerate)), 1.0);
    ctx.at_most("worst_certificate_ratio", report.worst_certificate_ratio, 1.0);
    ctx.at_most(
        "fitted_slope",
        report.fitted_slope,
        -report.claimed_rate + report.slope_tol,
    );
    Ok(())
}

/// Rejects pullback horizons reaching past the sampled window.
fn ensure_past(grid: &TimeGrid, horizons: &[f64]) -> slds_core::Result<()> {
    let available = -grid.t_start();
    match horizons.iter().copied().fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h)))) {
        Some(h) if h > available => Err(Error::HorizonExhausted { horizon: h, available }),
        _ => Ok(()),
    }
}

fn pullback(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let pc = &config.pullback;
    ensure_past(&r.grid, &pc.horizons)?;
    let field = noise(config, r, ctx)?;
    let report = ctx.timed("pullback", || {
        pullback_experiment(
            pc.radius,
            pc.n_starts,
            &field,
            &r.params,
            &r.f,
            &r.solver,
            &pc.horizons,
            starts_seed(config.master_seed),
            None,
        )
    })?;
    let mut table = CsvTable::new(&["horizon", "diameter", "bound", "pass"]);
    for row in &report.rows {
        table.push(vec![row.horizon.into(), row.diameter.into(), row.bound.into(), row.pass.into()]);
        ctx.at_most(format!("diameter@{}", row.horizon), row.diameter, row.bound);
    }
    ctx.write("pullback.csv", &table)?;
    ctx.series("pullback_series.csv", &report)?;
    Ok(())
}

fn equilibrium(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let ec = &config.equilibrium;
    let field = noise(config, r, ctx)?;
    let alt = &LatticeVector::basis(config.half_width, 0)? * ec.alt_radius;
    let mut options = EquilibriumOptions::new(ec.tol).with_alt_start(alt);
    options.initial_horizon = ec.initial_horizon;
    let eq = ctx.timed("equilibrium", || {
        random_equilibrium(&field, &r.params, &r.f, &r.solver, &options)
    })?;
    ctx.write("equilibrium.csv", &vector_table(&eq.state))?;
    ctx.at_most("cauchy_gap", eq.cauchy_gap, eq.tol);
    ctx.at_most("alt_start_distance", eq.alt_distance.unwrap_or(0.0), 2.0 * eq.tol);
    let times = &ec.stationarity_times;
    let stationarity = ctx.timed("stationarity", || {
        forward_stationarity_check(&eq, &field, &r.params, &r.f, &r.solver, times)
    })?;
    let attraction = ctx.timed("attraction", || {
        forward_attraction_check(&r.u0, &eq, &field, &r.params, &r.f, &r.solver, times)
    })?;
    let mut table = CsvTable::new(&[
        "t",
        "stationarity_residual",
        "stationarity_bound",
        "attraction_distance",
        "attraction_bound",
    ]);
    for (s, a) in stationarity.iter().zip(&attraction) {
        table.push(vec![
            s.t.into(),
            s.residual.into(),
            s.bound.into(),
            a.distance.into(),
            a.bound.into(),
        ]);
        ctx.at_most(format!("stationarity@{}", s.t), s.residual, s.bound);
        ctx.at_most(format!("attraction@{}", a.t), a.distance, a.bound);
    }
    ctx.write("equilibrium_checks.csv", &table)?;
    Ok(())
}

fn absorb(config: &ExperimentConfig, r: &Resolved, ctx: &mut RunContext) -> anyhow::Result<()> {
    let ac = &config.absorb;
    ensure_past(&r.grid, &ac.horizons)?;
    let field = noise(config, r, ctx)?;
    let report = ctx.timed("absorb", || {
        absorption_check(
            ac.d_radius,
            ac.n_starts,
            &field,
            &r.params,
            &r.f,
            &r.solver,
            &ac.horizons,
            ac.rho_t_past,
            config.tail_tol,
            starts_seed(config.master_seed),
        )
    })?;
    let mut table = CsvTable::new(&["horizon", "max_norm", "bound", "pass"]);
    for row in &report.rows {
        table.push(vec![row.horizon.into(), row.max_norm.into(), report.bound.into(), row.pass.into()]);
    }
    ctx.write("absorb.csv", &table)?;
    ctx.series("absorb_series.csv", &report)?;

    let dt = config.dt;
    let windows: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|frac| (frac * ac.rho_t_past / dt).round().max(1.0) * dt)
        .collect();
    let sweep = ctx.timed("radius_sweep", || {
        windows
            .par_iter()
            .map(|&t| absorbing_radius(&field, &r.params, &r.f, t, config.tail_tol).map(|a| (t, a.rho)))
            .collect::<slds_core::Result<Vec<_>>>()
    })?;
    ctx.series("absorb_radius.csv", &RadiusSweep(sweep))?;

    ctx.at_least("absorbed", f64::from(u8::from(report.entry_time.is_some())), 1.0);
    ctx.at_least("margin", report.margin, 0.0);
    ctx.at_most(
        "rho_tail_fraction",
        report.radius.tail_bound / report.radius.rho,
        ac.tail_fraction_tol,
    );
    Ok(())
}

fn report(config: &ExperimentConfig, ctx: &mut RunContext) -> anyhow::Result<()> {
    let mut table = CsvTable::new(&["experiment", "checks", "passed", "pass"]);
    for command in Command::EXPERIMENTS {
        let sub = run(command, config, ctx.out_dir)?;
        let passed = sub.checks.iter().filter(|c| c.pass).count();
        table.push(vec![
            Cell::Text(command.name().to_string()),
            sub.checks.len().into(),
            passed.into(),
            Cell::Bool(sub.pass),
        ]);
        ctx.artifacts.extend(sub.artifacts.iter().cloned());
        ctx.timings_ms.insert(command.name().to_string(), sub.timings_ms["total"]);
        ctx.checks.push(Check {
            name: command.name().to_string(),
            value: passed as f64,
            threshold: sub.checks.len() as f64,
            pass: sub.pass,
        });
    }
    ctx.write("report.csv", &table)?;
    Ok(())
}
