//! The lattice-valued driving noise `W(t) = Σ σ_i ω_i(t) e^i`, its Wiener
//! shift, pathwise integrals `∫ e^{λs} dW(s)`, and the fractional
//! Ornstein–Uhlenbeck process built from them.
//!
//! `W` is only Hölder continuous, so it is never differenced inside an
//! integral. Every `dW` integral is rewritten by parts,
//!
//! ```text
//! ∫_a^t e^{λs} dW(s) = e^{λt} W(t) − e^{λa} W(a) − λ ∫_a^t e^{λs} W(s) ds,
//! ```
//!
//! and the remaining ordinary integral is a composite trapezoid on the grid.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fbm::{self, grid_steps, reanchor, FgnSampler, HurstParameter, ScalarPath, TimeGrid};
use crate::lattice::{LatticeParams, LatticeVector};
use crate::seed;
use crate::trajectory::{Representation, Trajectory};

/// Default bound on `e^{−λh}(1+h)²` for a past horizon `h`.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SitePath {
    pub site: i64,
    /// `None` for paths injected by the caller.
    pub seed: Option<u64>,
    pub path: ScalarPath,
}

/// Noise on a truncated lattice over a common time grid. Sites with
/// `σ_i = 0` carry no path.
#[derive(Clone, Debug)]
pub struct NoiseField {
    grid: TimeGrid,
    sigma: LatticeVector,
    sites: Vec<SitePath>,
    master_seed: Option<u64>,
}

impl NoiseField {
    /// `W ≡ 0` on `grid`.
    pub fn zero(half_width: usize, grid: TimeGrid) -> Self {
        Self {
            grid,
            sigma: LatticeVector::zeros(half_width),
            sites: Vec::new(),
            master_seed: None,
        }
    }

    /// Field from caller-supplied site paths, all on the same grid.
    pub fn from_site_paths(sigma: LatticeVector, paths: Vec<(i64, ScalarPath)>) -> Result<Self> {
        let grid = *paths
            .first()
            .ok_or_else(|| invalid("paths", "at least one site path is required"))?
            .1
            .grid();
        let n = sigma.half_width() as i64;
        let mut sites = Vec::with_capacity(paths.len());
        for (site, path) in paths {
            if path.grid() != &grid {
                return Err(invalid("paths", "site paths must share one grid"));
            }
            if site.abs() > n {
                return Err(invalid("paths", format!("site {site} outside ±{n}")));
            }
            if sigma.get(site) != 0.0 {
                sites.push(SitePath {
                    site,
                    seed: None,
                    path,
                });
            }
        }
        Ok(Self {
            grid,
            sigma,
            sites,
            master_seed: None,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sigma(&self) -> &LatticeVector {
        &self.sigma
    }

    pub fn sites(&self) -> &[SitePath] {
        &self.sites
    }

    pub fn master_seed(&self) -> Option<u64> {
        self.master_seed
    }

    pub fn half_width(&self) -> usize {
        self.sigma.half_width()
    }

    /// `W` at grid node `k`.
    pub fn w_at_node(&self, k: usize) -> LatticeVector {
        let mut w = LatticeVector::zeros(self.half_width());
        let n = self.half_width() as i64;
        let values = w.values_mut();
        for s in &self.sites {
            values[(s.site + n) as usize] = self.sigma.get(s.site) * s.path.value(k);
        }
        w
    }

    pub fn eval_w(&self, t: f64) -> Result<LatticeVector> {
        Ok(self.w_at_node(self.grid.node_of(t)?))
    }

    /// `|W(t_k)|` at every node.
    pub fn norms(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| {
                self.sites
                    .iter()
                    .map(|s| {
                        let w = self.sigma.get(s.site) * s.path.value(k);
                        w * w
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Restriction to every `factor`-th node of the grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let sites = self
            .sites
            .iter()
            .map(|s| {
                Ok(SitePath {
                    site: s.site,
                    seed: s.seed,
                    path: s.path.coarsen(factor)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = match sites.first() {
            Some(s) => *s.path.grid(),
            None => {
                let probe = ScalarPath::from_values(self.grid, vec![0.0; self.grid.len()])?;
                *probe.coarsen(factor)?.grid()
            }
        };
        Ok(Self {
            grid,
            sigma: self.sigma.clone(),
            sites,
            master_seed: self.master_seed,
        })
    }
}

/// Independent two-sided fBm for every site with `σ_i ≠ 0`, each seeded from
/// `master_seed` and its site index.
pub fn build_noise_field(
    params: &LatticeParams,
    grid: TimeGrid,
    hurst: HurstParameter,
    master_seed: u64,
) -> Result<NoiseField> {
    let zero = grid.zero_node().ok_or_else(|| {
        invalid(
            "grid",
            format!("[{}, {}] does not contain t = 0", grid.t_start(), grid.t_end()),
        )
    })?;
    let sigma = params.sigma.clone();
    let active: Vec<i64> = sigma.sites().filter(|(_, s)| *s != 0.0).map(|(i, _)| i).collect();
    if active.is_empty() {
        let mut field = NoiseField::zero(sigma.half_width(), grid);
        field.sigma = sigma;
        field.master_seed = Some(master_seed);
        return Ok(field);
    }
    let sampler = FgnSampler::new(grid.n_steps(), hurst, grid.dt())?;
    let shift = zero as f64 * grid.dt();
    let sites = active
        .par_iter()
        .map(|&site| {
            let seed = seed::site_seed(master_seed, site);
            let mut rng = seed::rng(seed);
            let one_sided = fbm::anchored_origin_path(grid.dt(), sampler.sample_path_values(&mut rng))?;
            Ok(SitePath {
                site,
                seed: Some(seed),
                path: reanchor(&one_sided, shift)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoiseField {
        grid: *sites[0].path.grid(),
        sigma,
        sites,
        master_seed: Some(master_seed),
    })
}

pub fn eval_w(field: &NoiseField, t: f64) -> Result<LatticeVector> {
    field.eval_w(t)
}

/// θ_t applied to every site path; the shifted field at time τ equals
/// `W(τ + t) − W(t)`.
pub fn shift_noise(field: &NoiseField, t: f64) -> Result<NoiseField> {
    let steps = grid_steps(t, field.grid.dt())?;
    // validates the window even when no site carries a path
    field.grid.node_of(t)?;
    let sites = field
        .sites
        .iter()
        .map(|s| {
            Ok(SitePath {
                site: s.site,
                seed: s.seed,
                path: reanchor(&s.path, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoiseField {
        grid: field.grid.shifted(steps),
        sigma: field.sigma.clone(),
        sites,
        master_seed: field.master_seed,
    })
}

/// `S_k = e^{−λ(t_k − t_0)} ∫_{t_0}^{t_k} e^{λ(s − t_0)} dW(s)` for every
/// node of `w`, via integration by parts and a running trapezoid.
pub(crate) fn scaled_exp_integrals(w: &[f64], lambda: f64, dt: f64) -> Vec<f64> {
    let decay = (-lambda * dt).exp();
    let mut out = Vec::with_capacity(w.len());
    let mut running = 0.0;
    out.push(0.0);
    for k in 1..w.len() {
        running = decay * running + 0.5 * dt * (decay * w[k - 1] + w[k]);
        let boundary = (-lambda * dt * k as f64).exp() * w[0];
        out.push(w[k] - boundary - lambda * running);
    }
    out
}

/// `∫_a^t e^{λs} dW(s)` along a scalar path, `a ≤ t` both on the grid.
pub fn stieltjes_exp_integral(path: &ScalarPath, lambda: f64, a: f64, t: f64) -> Result<f64> {
    let grid = path.grid();
    let ka = grid.node_of(a)?;
    let kt = grid.node_of(t)?;
    if ka > kt {
        return Err(invalid("a", format!("lower limit {a} exceeds upper limit {t}")));
    }
    let w: Vec<f64> = (ka..=kt).map(|k| path.value(k)).collect();
    let scaled = *scaled_exp_integrals(&w, lambda, grid.dt()).last().unwrap_or(&0.0);
    Ok((lambda * t).exp() * scaled)
}

pub(crate) fn check_subgrid(field: &NoiseField, grid: &TimeGrid) -> Result<(usize, usize)> {
    let dt = field.grid.dt();
    if ((grid.dt() - dt) / dt).abs() > 1e-12 {
        return Err(invalid(
            "grid",
            format!("dt {} differs from the noise dt {dt}", grid.dt()),
        ));
    }
    let first = field.grid.node_of(grid.t_start())?;
    let last = field.grid.node_of(grid.t_end())?;
    Ok((first, last))
}

/// Solution of `du = −λu dt + dW` started from `u0` at t = 0:
/// `u(t) = u0 e^{−λt} + e^{−λt} ∫_0^t e^{λs} dW(s)`.
pub fn ou_solution(
    u0: &LatticeVector,
    lambda: f64,
    field: &NoiseField,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if grid.start_step() != 0 {
        return Err(invalid("grid", "the OU solution grid must start at t = 0"));
    }
    u0.ensure_half_width(field.half_width())?;
    let (first, last) = check_subgrid(field, grid)?;
    let n = field.half_width() as i64;
    let mut states: Vec<LatticeVector> = grid
        .times()
        .map(|t| u0 * (-lambda * t).exp())
        .collect();
    for s in &field.sites {
        let w: Vec<f64> = (first..=last).map(|k| s.path.value(k)).collect();
        let integrals = scaled_exp_integrals(&w, lambda, grid.dt());
        let sigma = field.sigma.get(s.site);
        let slot = (s.site + n) as usize;
        for (state, i) in states.iter_mut().zip(integrals) {
            state.values_mut()[slot] += sigma * i;
        }
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        representation: Representation::U,
    })
}

/// `e^{−λh}(1+h)²`, the factor governing the truncation tail of the
/// stationary OU integral for a past horizon `h`.
pub fn tail_factor(lambda: f64, horizon: f64) -> f64 {
    (-lambda * horizon).exp() * (1.0 + horizon).powi(2)
}

/// Stationary fractional OU process evaluated on a window of the field.
#[derive(Clone, Debug)]
pub struct OuProcess {
    pub lambda: f64,
    pub grid: TimeGrid,
    pub values: Vec<LatticeVector>,
    /// Distance from the start of the noise window to the first evaluation node.
    pub horizon: f64,
    pub rho_hat: f64,
    /// `e^{−λh} · 4ρ̂ (1+h)²`.
    pub tail_bound: f64,
}

impl OuProcess {
    pub fn at(&self, t: f64) -> Result<&LatticeVector> {
        Ok(&self.values[self.grid.node_of(t)?])
    }
}

/// `ū(t) = e^{−λt} ∫_{−∞}^t e^{λs} dW(s)` on `eval_grid`, with the lower
/// limit truncated at the start of the noise window.
pub fn stationary_ou(
    lambda: f64,
    field: &NoiseField,
    eval_grid: &TimeGrid,
    tail_tol: f64,
) -> Result<OuProcess> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("{lambda} must be positive")));
    }
    let (first, last) = check_subgrid(field, eval_grid)?;
    let horizon = first as f64 * field.grid.dt();
    let tail = tail_factor(lambda, horizon);
    if tail > tail_tol {
        return Err(Error::InsufficientHorizon {
            horizon,
            tail,
            tolerance: tail_tol,
        });
    }
    let n = field.half_width() as i64;
    let mut values = vec![LatticeVector::zeros(field.half_width()); eval_grid.len()];
    for s in &field.sites {
        let w: Vec<f64> = (0..=last).map(|k| s.path.value(k)).collect();
        let integrals = scaled_exp_integrals(&w, lambda, field.grid.dt());
        let sigma = field.sigma.get(s.site);
        let slot = (s.site + n) as usize;
        for (state, i) in values.iter_mut().zip(&integrals[first..=last]) {
            state.values_mut()[slot] = sigma * i;
        }
    }
    let rho_hat = rho_estimate(field);
    Ok(OuProcess {
        lambda,
        grid: *eval_grid,
        values,
        horizon,
        rho_hat,
        tail_bound: tail * 4.0 * rho_hat,
    })
}

/// `ρ̂ = max_k |W(t_k)| / (1 + t_k²)` over the sampled window.
pub fn rho_estimate(field: &NoiseField) -> f64 {
    field
        .norms()
        .into_iter()
        .zip(field.grid.times())
        .map(|(w, t)| w / (1.0 + t * t))
        .fold(0.0, f64::max)
}
