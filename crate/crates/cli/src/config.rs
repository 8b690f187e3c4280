//! JSON experiment configuration with defaults and whole-file validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use slds_core::fbm::{HurstParameter, TimeGrid};
use slds_core::lattice::{Boundary, LatticeParams, LatticeVector, NonlinearitySpec};
use slds_core::solver::{Scheme, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// How a lattice vector is specified in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorSpec {
    /// The same value at every site.
    Constant(f64),
    /// `value` on sites with `|i| ≤ radius`, zero elsewhere.
    Support { value: f64, radius: usize },
    /// `scale` at one site, zero elsewhere.
    Basis { site: i64, scale: f64 },
    /// Explicit values for sites `−N..=N`.
    Values(Vec<f64>),
}

impl VectorSpec {
    pub fn build(&self, half_width: usize) -> Result<LatticeVector, String> {
        match self {
            Self::Constant(c) => Ok(LatticeVector::constant(half_width, *c)),
            Self::Support { value, radius } => Ok(LatticeVector::from_fn(half_width, |i| {
                if i.unsigned_abs() as usize <= *radius {
                    *value
                } else {
                    0.0
                }
            })),
            Self::Basis { site, scale } => {
                if site.unsigned_abs() as usize > half_width {
                    return Err(format!("basis site {site} outside ±{half_width}"));
                }
                Ok(&LatticeVector::basis(half_width, *site).map_err(|e| e.to_string())? * *scale)
            }
            Self::Values(v) => {
                if v.len() != 2 * half_width + 1 {
                    return Err(format!("{} values given, {} expected", v.len(), 2 * half_width + 1));
                }
                LatticeVector::from_values(v.clone()).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityConfig {
    Linear { a: f64 },
    Cubic { a: f64, b: f64 },
}

impl NonlinearityConfig {
    pub fn build(&self) -> slds_core::Result<NonlinearitySpec> {
        match *self {
            Self::Linear { a } => NonlinearitySpec::linear(a),
            Self::Cubic { a, b } => NonlinearitySpec::cubic(a, b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleFbmConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    /// Number of sample paths written to the CSV.
    pub paths_written: usize,
    pub z_tol: f64,
}

impl Default for SampleFbmConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            n_steps: 100,
            paths_written: 4,
            z_tol: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorsConfig {
    pub n_vectors: usize,
    pub identity_tol: f64,
    pub probe_samples: usize,
    pub probe_radius: f64,
}

impl Default for OperatorsConfig {
    fn default() -> Self {
        Self {
            n_vectors: 1000,
            identity_tol: 1e-12,
            probe_samples: 10_000,
            probe_radius: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PullbackConfig {
    pub radius: f64,
    pub n_starts: usize,
    pub horizons: Vec<f64>,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        Self {
            radius: 10.0,
            n_starts: 16,
            horizons: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub tol: f64,
    pub initial_horizon: f64,
    /// The second start is `alt_radius · e⁰`.
    pub alt_radius: f64,
    pub stationarity_times: Vec<f64>,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            initial_horizon: 1.0,
            alt_radius: 10.0,
            stationarity_times: vec![1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbsorbConfig {
    pub d_radius: f64,
    pub n_starts: usize,
    pub horizons: Vec<f64>,
    /// Length of the quadrature window for ϱ.
    pub rho_t_past: f64,
    /// Largest accepted ratio of the truncation tail bound to ϱ.
    pub tail_fraction_tol: f64,
}

impl Default for AbsorbConfig {
    fn default() -> Self {
        Self {
            d_radius: 10.0,
            n_starts: 16,
            horizons: vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0],
            rho_t_past: 32.0,
            tail_fraction_tol: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hurst: f64,
    /// Allows `hurst = 0.5` (Brownian reference runs).
    pub reference_mode: bool,
    pub half_width: usize,
    pub kappa: f64,
    pub lambda: f64,
    pub boundary: Boundary,
    pub forcing: VectorSpec,
    pub sigma: VectorSpec,
    pub initial: VectorSpec,
    /// Second initial condition for `contraction`.
    pub initial_alt: VectorSpec,
    pub nonlinearity: NonlinearityConfig,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub t_past: f64,
    pub tail_tol: f64,
    pub master_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub sample_fbm: SampleFbmConfig,
    pub operators: OperatorsConfig,
    pub pullback: PullbackConfig,
    pub equilibrium: EquilibriumConfig,
    pub absorb: AbsorbConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hurst: 0.75,
            reference_mode: false,
            half_width: 16,
            kappa: 1.0,
            lambda: 1.0,
            boundary: Boundary::ZeroPadding,
            forcing: VectorSpec::Constant(0.5),
            sigma: VectorSpec::Constant(1.0),
            initial: VectorSpec::Constant(1.0),
            initial_alt: VectorSpec::Constant(0.0),
            nonlinearity: NonlinearityConfig::Cubic { a: 1.0, b: 1.0 },
            scheme: Scheme::Heun,
            dt: 0.01,
            t_end: 5.0,
            t_past: 64.0,
            tail_tol: 1e-6,
            master_seed: 1,
            out_dir: None,
            sample_fbm: SampleFbmConfig::default(),
            operators: OperatorsConfig::default(),
            pullback: PullbackConfig::default(),
            equilibrium: EquilibriumConfig::default(),
            absorb: AbsorbConfig::default(),
        }
    }
}

/// Everything a run needs, built from a validated config.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub hurst: HurstParameter,
    pub params: LatticeParams,
    pub f: NonlinearitySpec,
    pub solver: SolverConfig,
    pub u0: LatticeVector,
    pub w0: LatticeVector,
    /// `[−t_past, t_end]` at the config's `dt`.
    pub grid: TimeGrid,
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite() && *x >= 0.0)
}

impl ExperimentConfig {
    /// Every violation in the config, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        check(
            HurstParameter::with_reference_mode(self.hurst, self.reference_mode).is_ok(),
            format!("hurst: {} must lie in (0.5, 1) (0.5 needs reference_mode)", self.hurst),
        );
        check(self.half_width >= 1, "half_width: must be at least 1".into());
        check(self.kappa > 0.0, format!("kappa: {} must be positive", self.kappa));
        check(self.lambda > 0.0, format!("lambda: {} must be positive", self.lambda));
        for (name, spec) in [
            ("forcing", &self.forcing),
            ("sigma", &self.sigma),
            ("initial", &self.initial),
            ("initial_alt", &self.initial_alt),
        ] {
            if let Err(e) = spec.build(self.half_width.max(1)) {
                errs.push(format!("{name}: {e}"));
            }
        }
        if let Err(e) = self.nonlinearity.build() {
            errs.push(format!("nonlinearity: {e}"));
        }
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        check(self.dt > 0.0 && self.dt.is_finite(), format!("dt: {} must be positive", self.dt));
        check(self.t_end > 0.0, format!("t_end: {} must be positive", self.t_end));
        check(self.t_past >= 0.0, format!("t_past: {} must be non-negative", self.t_past));
        check(self.tail_tol > 0.0, format!("tail_tol: {} must be positive", self.tail_tol));
        check(self.sample_fbm.n_paths >= 2, "sample_fbm.n_paths: must be at least 2".into());
        check(self.sample_fbm.n_steps >= 1, "sample_fbm.n_steps: must be at least 1".into());
        check(self.sample_fbm.z_tol > 0.0, "sample_fbm.z_tol: must be positive".into());
        check(self.operators.n_vectors >= 1, "operators.n_vectors: must be at least 1".into());
        check(self.operators.identity_tol > 0.0, "operators.identity_tol: must be positive".into());
        check(self.operators.probe_samples >= 1, "operators.probe_samples: must be at least 1".into());
        check(self.operators.probe_radius > 0.0, "operators.probe_radius: must be positive".into());
        check(self.pullback.radius >= 0.0, "pullback.radius: must be non-negative".into());
        check(
            increasing(&self.pullback.horizons),
            "pullback.horizons: must be non-negative and strictly increasing".into(),
        );
        check(self.equilibrium.tol > 0.0, "equilibrium.tol: must be positive".into());
        check(
            self.equilibrium.initial_horizon > 0.0,
            "equilibrium.initial_horizon: must be positive".into(),
        );
        check(
            self.equilibrium.stationarity_times.iter().all(|t| *t >= 0.0),
            "equilibrium.stationarity_times: must be non-negative".into(),
        );
        check(self.absorb.d_radius >= 0.0, "absorb.d_radius: must be non-negative".into());
        check(
            !self.absorb.horizons.is_empty() && increasing(&self.absorb.horizons),
            "absorb.horizons: must be non-empty, non-negative and strictly increasing".into(),
        );
        check(self.absorb.rho_t_past > 0.0, "absorb.rho_t_past: must be positive".into());
        check(
            self.absorb.tail_fraction_tol > 0.0,
            "absorb.tail_fraction_tol: must be positive".into(),
        );
        errs
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let errs = self.violations();
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        let wrap = |field: &str, e: slds_core::Error| ConfigError::Invalid(vec![format!("{field}: {e}")]);
        let n = self.half_width;
        let vec = |spec: &VectorSpec| spec.build(n).expect("validated");
        let params = LatticeParams::new(self.kappa, self.lambda, vec(&self.forcing), vec(&self.sigma), self.boundary)
            .map_err(|e| wrap("lattice", e))?;
        Ok(Resolved {
            hurst: HurstParameter::with_reference_mode(self.hurst, self.reference_mode)
                .map_err(|e| wrap("hurst", e))?,
            params,
            f: self.nonlinearity.build().map_err(|e| wrap("nonlinearity", e))?,
            solver: SolverConfig::new(self.scheme, self.dt, self.t_end).map_err(|e| wrap("solver", e))?,
            u0: vec(&self.initial),
            w0: vec(&self.initial_alt),
            grid: TimeGrid::two_sided(self.t_past, self.t_end, self.dt).map_err(|e| wrap("grid", e))?,
        })
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let errs = config.violations();
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(errs))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
