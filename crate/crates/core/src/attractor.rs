//! Long-time behaviour: pairwise contraction, pullback convergence to the
//! random equilibrium, the absorbing radius and the absorption entry time.
//!
//! Pullback endpoints are computed as `φ(T, θ_{−T}ω, u0)`, so every
//! trajectory ends at time 0 of the original field. The field window must
//! therefore reach back at least `T`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fbm::TimeGrid;
use crate::lattice::{eval_f, LatticeParams, LatticeVector, NonlinearitySpec};
use crate::noise::{rho_estimate, shift_noise, stationary_ou, NoiseField};
use crate::seed;
use crate::solver::{cocycle_map, integrate, SolverConfig};
use crate::stats::least_squares_slope;

/// Distances at or below this are left out of the log-slope fit.
pub const LOG_DISTANCE_FLOOR: f64 = 1e-12;
/// Allowed excess of the fitted slope over `−λ`, as a fraction of `λ`.
pub const SLOPE_TOL_FRACTION: f64 = 0.05;
/// Multiplier of `dt` in the discretization cushion `(1 + 5·dt)`.
pub const CUSHION: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Least-squares slope of `log|u − w|` over nodes with distance above
    /// [`LOG_DISTANCE_FLOOR`]. NaN when fewer than two nodes qualify.
    pub fitted_slope: f64,
    pub claimed_rate: f64,
    pub slope_tol: f64,
    /// `max_t |u(t) − w(t)| / (|u0 − w0| e^{−λt} (1 + 5·dt))`.
    pub worst_certificate_ratio: f64,
    pub pointwise_ok: bool,
    /// Set when `u0 = w0`; no slope is fitted and the report does not pass.
    pub degenerate: bool,
    pub pass: bool,
}

impl ContractionReport {
    pub fn log_distances(&self) -> Vec<f64> {
        self.distances.iter().map(|d| d.ln()).collect()
    }
}

/// Solves from `u0` and `w0` on the same noise and measures their distance.
pub fn contraction_experiment(
    u0: &LatticeVector,
    w0: &LatticeVector,
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
) -> Result<ContractionReport> {
    let (u, w) = rayon::join(
        || integrate(u0, field, params, f, config),
        || integrate(w0, field, params, f, config),
    );
    let (u, w) = (u?, w?);
    let times: Vec<f64> = u.times().collect();
    let distances: Vec<f64> = u.states.iter().zip(&w.states).map(|(a, b)| a.distance(b)).collect();
    let lambda = params.lambda;
    let slope_tol = SLOPE_TOL_FRACTION * lambda;
    let d0 = distances[0];

    if d0 == 0.0 {
        return Ok(ContractionReport {
            pointwise_ok: distances.iter().all(|&d| d == 0.0),
            times,
            distances,
            fitted_slope: f64::NAN,
            claimed_rate: lambda,
            slope_tol,
            worst_certificate_ratio: 0.0,
            degenerate: true,
            pass: false,
        });
    }

    let cushion = 1.0 + CUSHION * config.dt;
    let worst_certificate_ratio = times
        .iter()
        .zip(&distances)
        .map(|(&t, &d)| d / (d0 * (-lambda * t).exp() * cushion))
        .fold(0.0, f64::max);
    let (fit_t, fit_log): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&distances)
        .filter(|(_, &d)| d > LOG_DISTANCE_FLOOR)
        .map(|(&t, &d)| (t, d.ln()))
        .unzip();
    let fitted_slope = least_squares_slope(&fit_t, &fit_log);
    let pointwise_ok = worst_certificate_ratio <= 1.0;
    Ok(ContractionReport {
        times,
        distances,
        fitted_slope,
        claimed_rate: lambda,
        slope_tol,
        worst_certificate_ratio,
        pointwise_ok,
        degenerate: false,
        pass: pointwise_ok && fitted_slope <= -lambda + slope_tol,
    })
}

/// `n` points drawn uniformly on the sphere of radius `radius` in the
/// truncated lattice. The first point is always `radius · e⁰`.
pub fn sphere_starts(half_width: usize, radius: f64, n: usize, master_seed: u64) -> Vec<LatticeVector> {
    let mut rng = seed::rng(seed::derive_seed(master_seed, &[seed::DOMAIN_STARTS]));
    let mut starts = Vec::with_capacity(n);
    if n > 0 {
        let mut first = LatticeVector::zeros(half_width);
        first.values_mut()[half_width] = radius;
        starts.push(first);
    }
    while starts.len() < n {
        let dir = LatticeVector::from_fn(half_width, |_| StandardNormal.sample(&mut rng));
        let norm = dir.norm();
        if norm > 0.0 {
            starts.push(&dir * (radius / norm));
        }
    }
    starts
}

/// Largest pairwise distance; 0 for fewer than two points.
pub fn diameter(points: &[LatticeVector]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max(a.distance(b));
        }
    }
    d
}

/// `max_k |x_k − center|`.
pub fn semi_distance(points: &[LatticeVector], center: &LatticeVector) -> f64 {
    points.iter().map(|p| p.distance(center)).fold(0.0, f64::max)
}

/// φ(T, θ_{−T}ω, u0), the state at time 0 of the solution started at −T.
pub fn pullback_endpoint(
    horizon: f64,
    field: &NoiseField,
    u0: &LatticeVector,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
) -> Result<LatticeVector> {
    if horizon < 0.0 {
        return Err(invalid("horizon", "pullback horizons must be non-negative"));
    }
    if horizon == 0.0 {
        return Ok(u0.clone());
    }
    let shifted = shift_noise(field, -horizon)?;
    cocycle_map(horizon, &shifted, u0, params, f, config)
}

fn pullback_all(
    horizon: f64,
    field: &NoiseField,
    starts: &[LatticeVector],
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
) -> Result<Vec<LatticeVector>> {
    starts
        .par_iter()
        .map(|u0| pullback_endpoint(horizon, field, u0, params, f, config))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullbackRow {
    pub horizon: f64,
    pub diameter: f64,
    /// `diameter(0) · e^{−λt} · (1 + 5·dt·t)`.
    pub bound: f64,
    /// Largest distance from an endpoint to the equilibrium, when supplied.
    pub semi_distance: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PullbackReport {
    pub radius: f64,
    pub n_starts: usize,
    pub initial_diameter: f64,
    pub rows: Vec<PullbackRow>,
    pub pass: bool,
}

/// Pulls a sphere of starting points back from each horizon and tracks
/// the diameter of the image at time 0.
#[allow(clippy::too_many_arguments)]
pub fn pullback_experiment(
    radius: f64,
    n_starts: usize,
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
    horizons: &[f64],
    starts_seed: u64,
    equilibrium: Option<&LatticeVector>,
) -> Result<PullbackReport> {
    if !(radius >= 0.0) {
        return Err(invalid("radius", format!("{radius} must be non-negative")));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("horizons", "must be strictly increasing"));
    }
    let starts = sphere_starts(params.half_width(), radius, n_starts, starts_seed);
    let initial_diameter = diameter(&starts);
    let lambda = params.lambda;
    let rows = horizons
        .iter()
        .map(|&t| {
            let ends = pullback_all(t, field, &starts, params, f, config)?;
            let d = diameter(&ends);
            let bound = initial_diameter * (-lambda * t).exp() * (1.0 + CUSHION * config.dt * t);
            Ok(PullbackRow {
                horizon: t,
                diameter: d,
                bound,
                semi_distance: equilibrium.map(|e| semi_distance(&ends, e)),
                pass: d <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PullbackReport {
        radius,
        n_starts,
        initial_diameter,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumOptions {
    pub tol: f64,
    pub initial_horizon: f64,
    /// Second starting point for the uniqueness check.
    pub alt_start: Option<LatticeVector>,
}

impl EquilibriumOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            initial_horizon: 1.0,
            alt_start: None,
        }
    }

    pub fn with_alt_start(mut self, start: LatticeVector) -> Self {
        self.alt_start = Some(start);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumEstimate {
    pub state: LatticeVector,
    pub horizon: f64,
    pub cauchy_gap: f64,
    pub tol: f64,
    pub initial_horizon: f64,
    pub master_seed: Option<u64>,
    /// Distance to the estimate obtained from the alternate start.
    pub alt_distance: Option<f64>,
    /// `alt_distance ≤ 2·tol`, or true when no alternate start was given.
    pub start_independent: bool,
}

/// Doubles `T` from `initial_horizon` until successive pullback endpoints
/// from `start` are within `tol`. Returns the endpoint at the final horizon.
fn pullback_limit(
    start: &LatticeVector,
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
    tol: f64,
    initial_horizon: f64,
) -> Result<(LatticeVector, f64, f64)> {
    let available = -field.grid().t_start();
    let fits = |t: f64| t <= available + 1e-9 * config.dt;
    let mut horizon = initial_horizon;
    if !fits(horizon) {
        return Err(Error::HorizonExhausted { horizon, available });
    }
    let mut prev = pullback_endpoint(horizon, field, start, params, f, config)?;
    loop {
        let next_horizon = 2.0 * horizon;
        if !fits(next_horizon) {
            return Err(Error::HorizonExhausted {
                horizon: next_horizon,
                available,
            });
        }
        let next = pullback_endpoint(next_horizon, field, start, params, f, config)?;
        let gap = next.distance(&prev);
        if gap <= tol {
            return Ok((next, next_horizon, gap));
        }
        prev = next;
        horizon = next_horizon;
    }
}

/// ũ0(ω) as the pullback limit from the origin.
pub fn random_equilibrium(
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
    options: &EquilibriumOptions,
) -> Result<EquilibriumEstimate> {
    if !(options.tol > 0.0) {
        return Err(invalid("tol", format!("{} must be positive", options.tol)));
    }
    if !(options.initial_horizon > 0.0) {
        return Err(invalid("initial_horizon", "must be positive"));
    }
    let origin = LatticeVector::zeros(params.half_width());
    let run = |start: &LatticeVector| {
        pullback_limit(start, field, params, f, config, options.tol, options.initial_horizon)
    };
    let (main, alt) = match &options.alt_start {
        Some(alt) => {
            let (a, b) = rayon::join(|| run(&origin), || run(alt));
            (a?, Some(b?))
        }
        None => (run(&origin)?, None),
    };
    let (state, horizon, cauchy_gap) = main;
    let alt_distance = alt.map(|(s, _, _)| s.distance(&state));
    Ok(EquilibriumEstimate {
        state,
        horizon,
        cauchy_gap,
        tol: options.tol,
        initial_horizon: options.initial_horizon,
        master_seed: field.master_seed(),
        alt_distance,
        start_independent: alt_distance.is_none_or(|d| d <= 2.0 * options.tol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityRow {
    pub t: f64,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Compares φ(t, ω, ũ0(ω)) with ũ0(θ_t ω) recomputed by pullback on the
/// shifted field. The bound is `5·tol`.
pub fn forward_stationarity_check(
    equilibrium: &EquilibriumEstimate,
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
    times: &[f64],
) -> Result<Vec<StationarityRow>> {
    let options = EquilibriumOptions {
        tol: equilibrium.tol,
        initial_horizon: equilibrium.initial_horizon,
        alt_start: None,
    };
    let bound = 5.0 * equilibrium.tol;
    times
        .par_iter()
        .map(|&t| {
            let forward = cocycle_map(t, field, &equilibrium.state, params, f, config)?;
            let recomputed = if t == 0.0 {
                equilibrium.state.clone()
            } else {
                random_equilibrium(&shift_noise(field, t)?, params, f, config, &options)?.state
            };
            let residual = forward.distance(&recomputed);
            Ok(StationarityRow {
                t,
                residual,
                bound,
                pass: residual <= bound,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForwardAttractionRow {
    pub t: f64,
    pub distance: f64,
    /// `|u0 − ũ0(ω)| e^{−λt} (1 + 5·dt)`.
    pub bound: f64,
    pub pass: bool,
}

/// `|φ(t, ω, u0) − ũ0(θ_t ω)|` against the contraction bound, with
/// ũ0(θ_t ω) obtained by pullback on the shifted field.
pub fn forward_attraction_check(
    u0: &LatticeVector,
    equilibrium: &EquilibriumEstimate,
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
    times: &[f64],
) -> Result<Vec<ForwardAttractionRow>> {
    let options = EquilibriumOptions {
        tol: equilibrium.tol,
        initial_horizon: equilibrium.initial_horizon,
        alt_start: None,
    };
    let d0 = u0.distance(&equilibrium.state);
    let cushion = 1.0 + CUSHION * config.dt;
    times
        .par_iter()
        .map(|&t| {
            let forward = cocycle_map(t, field, u0, params, f, config)?;
            let target = if t == 0.0 {
                equilibrium.state.clone()
            } else {
                random_equilibrium(&shift_noise(field, t)?, params, f, config, &options)?.state
            };
            let distance = forward.distance(&target);
            let bound = d0 * (-params.lambda * t).exp() * cushion;
            Ok(ForwardAttractionRow {
                t,
                distance,
                bound,
                pass: distance <= bound,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsorbingRadius {
    /// `1 + ∫_{−t_past}^0 e^{λs} |f(ū(s))| ds` by the trapezoid rule.
    pub rho: f64,
    pub t_past: f64,
    /// Bound on the omitted part `∫_{−∞}^{−t_past}` of the integral.
    pub tail_bound: f64,
    /// `|ū(0)|`.
    pub ou_norm_at_zero: f64,
    /// Truncation bound of the OU integral itself.
    pub ou_tail_bound: f64,
}

/// ϱ(ω) from the stationary OU process on `[−t_past, 0]`.
///
/// The omitted tail uses `|f(x)| ≤ K(1 + |x|^p)` together with
/// `|ū(s)| ≤ 4ρ̂(1 + |s|)²`, integrated numerically against `e^{−λ|s|}`.
pub fn absorbing_radius(
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    t_past: f64,
    tail_tol: f64,
) -> Result<AbsorbingRadius> {
    let dt = field.grid().dt();
    let n = crate::fbm::grid_steps(t_past, dt)?;
    if n < 1 {
        return Err(invalid("t_past", "must span at least one noise step"));
    }
    let eval_grid = TimeGrid::new(-t_past, dt, n as usize)?;
    let lambda = params.lambda;
    let ou = stationary_ou(lambda, field, &eval_grid, tail_tol)?;
    let integrand = eval_grid
        .times()
        .zip(&ou.values)
        .map(|(s, u)| Ok((lambda * s).exp() * eval_f(f, u)?.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let interior: f64 = integrand[1..integrand.len() - 1].iter().sum();
    let integral = dt * (interior + 0.5 * (integrand[0] + integrand[integrand.len() - 1]));
    let tail_bound = growth_tail(f, lambda, rho_estimate(field), t_past);
    Ok(AbsorbingRadius {
        rho: 1.0 + integral,
        t_past,
        tail_bound,
        ou_norm_at_zero: ou.values.last().expect("non-empty grid").norm(),
        ou_tail_bound: ou.tail_bound,
    })
}

/// `K ∫_{t0}^∞ e^{−λs} (1 + (4ρ̂(1+s)²)^p) ds` by composite Simpson on a
/// range long enough for the integrand to have decayed by 1e-20.
fn growth_tail(f: &NonlinearitySpec, lambda: f64, rho_hat: f64, t0: f64) -> f64 {
    let (k, p) = (f.growth(), f.exponent());
    let g = |s: f64| k * (-lambda * s).exp() * (1.0 + (4.0 * rho_hat * (1.0 + s).powi(2)).powf(p));
    let scale = g(t0).max(f64::MIN_POSITIVE);
    let step = 1.0 / lambda;
    let mut upper = t0 + step;
    // the polynomial factor can still be rising at t0, so look past the peak
    let mut peak = scale;
    while g(upper) > 1e-20 * peak {
        peak = peak.max(g(upper));
        upper += step;
    }
    let intervals = 20_000usize;
    let h = (upper - t0) / intervals as f64;
    let mut sum = g(t0) + g(upper);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * g(t0 + i as f64 * h);
    }
    sum * h / 3.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsorptionRow {
    pub horizon: f64,
    pub max_norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsorptionReport {
    pub d_radius: f64,
    pub radius: AbsorbingRadius,
    /// `|ū(0)| + ϱ`.
    pub bound: f64,
    pub rows: Vec<AbsorptionRow>,
    /// Smallest tested horizon from which every later row passes.
    pub entry_time: Option<f64>,
    /// `bound − max_norm`, minimised over the rows from the entry time on,
    /// or over the last row when there is no entry time.
    pub margin: f64,
    pub pass: bool,
}

/// Pullback endpoints of the radius-`d_radius` ball (origin plus sphere
/// points) checked against `|ū(0)| + ϱ` at each tested horizon.
#[allow(clippy::too_many_arguments)]
pub fn absorption_check(
    d_radius: f64,
    n_starts: usize,
    field: &NoiseField,
    params: &LatticeParams,
    f: &NonlinearitySpec,
    config: &SolverConfig,
    horizons: &[f64],
    t_past: f64,
    tail_tol: f64,
    starts_seed: u64,
) -> Result<AbsorptionReport> {
    if !(d_radius >= 0.0) {
        return Err(invalid("d_radius", format!("{d_radius} must be non-negative")));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("horizons", "must be non-empty and strictly increasing"));
    }
    let radius = absorbing_radius(field, params, f, t_past, tail_tol)?;
    let bound = radius.ou_norm_at_zero + radius.rho;
    let mut starts = vec![LatticeVector::zeros(params.half_width())];
    starts.extend(sphere_starts(params.half_width(), d_radius, n_starts, starts_seed));
    let rows = horizons
        .iter()
        .map(|&t| {
            let ends = pullback_all(t, field, &starts, params, f, config)?;
            let max_norm = ends.iter().map(LatticeVector::norm).fold(0.0, f64::max);
            Ok(AbsorptionRow {
                horizon: t,
                max_norm,
                pass: max_norm <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let first_good = rows.iter().rposition(|r| !r.pass).map_or(0, |i| i + 1);
    let (entry_time, margin) = if first_good < rows.len() {
        let margin = rows[first_good..]
            .iter()
            .map(|r| bound - r.max_norm)
            .fold(f64::INFINITY, f64::min);
        (Some(rows[first_good].horizon), margin)
    } else {
        (None, bound - rows[rows.len() - 1].max_norm)
    };
    Ok(AbsorptionReport {
        d_radius,
        radius,
        bound,
        pass: entry_time.is_some(),
        rows,
        entry_time,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{HurstParameter, TimeGrid};
    use crate::lattice::Boundary;
    use crate::noise::build_noise_field;

    fn setup(sigma: f64, boundary: Boundary) -> (LatticeParams, NoiseField) {
        let n = 3;
        let params = LatticeParams::new(
            1.0,
            1.0,
            LatticeVector::zeros(n),
            LatticeVector::constant(n, sigma),
            boundary,
        )
        .unwrap();
        let grid = TimeGrid::two_sided(16.0, 4.0, 0.01).unwrap();
        let field = build_noise_field(&params, grid, HurstParameter::new(0.7).unwrap(), 5).unwrap();
        (params, field)
    }

    #[test]
    fn identical_starts_are_degenerate() {
        let (params, field) = setup(0.5, Boundary::ZeroPadding);
        let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let config = SolverConfig::heun(0.01, 1.0).unwrap();
        let u0 = LatticeVector::constant(3, 1.0);
        let r = contraction_experiment(&u0, &u0, &field, &params, &f, &config).unwrap();
        assert!(r.degenerate && !r.pass);
        assert!(r.distances.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn linear_periodic_slope_is_lambda_plus_a() {
        let (params, field) = setup(0.5, Boundary::Periodic);
        let f = NonlinearitySpec::linear(1.0).unwrap();
        let config = SolverConfig::heun(0.01, 3.0).unwrap();
        let u0 = LatticeVector::constant(3, 1.0);
        let w0 = LatticeVector::zeros(3);
        let r = contraction_experiment(&u0, &w0, &field, &params, &f, &config).unwrap();
        assert!((r.fitted_slope + 2.0).abs() < 0.02, "{}", r.fitted_slope);
        assert!(r.pass);
    }

    #[test]
    fn sphere_points_have_the_radius() {
        let s = sphere_starts(4, 10.0, 8, 1);
        assert_eq!(s.len(), 8);
        for p in &s {
            assert!((p.norm() - 10.0).abs() < 1e-12);
        }
        assert_eq!(s[0].get(0), 10.0);
        assert_eq!(diameter(&s[..1]), 0.0);
        assert_eq!(diameter(&sphere_starts(4, 0.0, 5, 1)), 0.0);
    }

    #[test]
    fn single_start_has_zero_diameter() {
        let (params, field) = setup(0.5, Boundary::ZeroPadding);
        let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let config = SolverConfig::heun(0.01, 1.0).unwrap();
        let r = pullback_experiment(10.0, 1, &field, &params, &f, &config, &[1.0, 2.0], 3, None).unwrap();
        assert!(r.rows.iter().all(|row| row.diameter == 0.0 && row.pass));
    }

    #[test]
    fn quiet_system_equilibrium_is_origin() {
        let (params, field) = setup(0.0, Boundary::ZeroPadding);
        let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let config = SolverConfig::heun(0.01, 1.0).unwrap();
        let options = EquilibriumOptions::new(1e-6);
        let eq = random_equilibrium(&field, &params, &f, &config, &options).unwrap();
        assert_eq!(eq.state.norm(), 0.0);
        assert!(eq.cauchy_gap <= 1e-6);
    }

    #[test]
    fn horizon_exhaustion_is_reported() {
        let (params, field) = setup(0.5, Boundary::ZeroPadding);
        let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let config = SolverConfig::heun(0.01, 1.0).unwrap();
        let options = EquilibriumOptions::new(1e-30);
        let err = random_equilibrium(&field, &params, &f, &config, &options).unwrap_err();
        assert!(matches!(err, Error::HorizonExhausted { .. }), "{err:?}");
    }

    #[test]
    fn quiet_absorbing_radius_is_one() {
        let (params, field) = setup(0.0, Boundary::ZeroPadding);
        let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let r = absorbing_radius(&field, &params, &f, 4.0, 1e-2).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.ou_norm_at_zero, 0.0);
    }

    #[test]
    fn zero_ball_is_absorbed_immediately() {
        let (params, field) = setup(0.0, Boundary::ZeroPadding);
        let f = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let config = SolverConfig::heun(0.01, 1.0).unwrap();
        let r = absorption_check(0.0, 4, &field, &params, &f, &config, &[0.0, 1.0], 4.0, 1e-2, 1).unwrap();
        assert_eq!(r.entry_time, Some(0.0));
        assert!(r.pass);
    }
}
