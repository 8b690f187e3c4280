//! Fractional Brownian motion on uniform grids.
//!
//! Paths are synthesized from fractional Gaussian noise (fGn) by circulant
//! embedding of its autocovariance and then summed. A dense Cholesky
//! factorization of the same covariance is kept as an independent oracle.
//!
//! The Wiener shift `θ_s ω(·) = ω(· + s) − ω(s)` is realized on sampled
//! paths by [`reanchor`]. A path stores its raw samples together with the raw
//! index of its anchor, so repeated shifts compose exactly: both
//! `reanchor(reanchor(p, s), t)` and `reanchor(p, s + t)` end up computing
//! `raw[k] − raw[anchor]` with the same two operands.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed;

/// Relative tolerance for negative circulant eigenvalues.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Largest path length accepted by the Cholesky oracle.
pub const CHOLESKY_MAX_STEPS: usize = 4096;

/// Relative slack used when deciding whether a time lies on a grid node.
const ALIGNMENT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HurstParameter {
    h: f64,
    reference: bool,
}

impl HurstParameter {
    /// Hurst index in the open interval (1/2, 1).
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return Err(invalid("hurst", format!("{h} is outside (1/2, 1)")));
        }
        Ok(Self {
            h,
            reference: false,
        })
    }

    /// Standard Brownian motion (H = 1/2), admitted only as a reference oracle.
    pub fn brownian_reference() -> Self {
        Self {
            h: 0.5,
            reference: true,
        }
    }

    /// Accepts H = 1/2 when `reference_mode` is set, otherwise as [`Self::new`].
    pub fn with_reference_mode(h: f64, reference_mode: bool) -> Result<Self> {
        if reference_mode && h == 0.5 {
            Ok(Self::brownian_reference())
        } else {
            Self::new(h)
        }
    }

    pub fn value(&self) -> f64 {
        self.h
    }

    pub fn is_reference(&self) -> bool {
        self.reference
    }
}

/// Converts a time to a whole number of steps of size `dt`.
pub fn grid_steps(t: f64, dt: f64) -> Result<i64> {
    let ratio = t / dt;
    let k = ratio.round();
    if !ratio.is_finite() || (ratio - k).abs() > ALIGNMENT_TOLERANCE * ratio.abs().max(1.0) {
        return Err(Error::OffGrid { t, dt });
    }
    Ok(k as i64)
}

/// Uniform time grid. Node `k` sits at `(start + k) · dt`, so whenever the
/// grid spans zero, zero is a node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    start: i64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive and finite")));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        let start = grid_steps(t_start, dt)?;
        Ok(Self { start, dt, n_steps })
    }

    pub fn from_origin(dt: f64, n_steps: usize) -> Result<Self> {
        Self::new(0.0, dt, n_steps)
    }

    /// Grid covering `[-t_past, t_future]`.
    pub fn two_sided(t_past: f64, t_future: f64, dt: f64) -> Result<Self> {
        if t_past < 0.0 || t_future < 0.0 {
            return Err(invalid("t_past/t_future", "must be non-negative"));
        }
        let past = grid_steps(t_past, dt)?;
        let future = grid_steps(t_future, dt)?;
        Self::new(-(past as f64) * dt, dt, (past + future) as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the first node counted in steps from t = 0.
    pub fn start_step(&self) -> i64 {
        self.start
    }

    pub fn t_start(&self) -> f64 {
        self.start as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        (self.start + self.n_steps as i64) as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        (self.start + k as i64) as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Node index holding time `t`.
    pub fn node_of(&self, t: f64) -> Result<usize> {
        let step = grid_steps(t, self.dt)?;
        self.node_of_step(step).ok_or(Error::OutOfWindow {
            t,
            start: self.t_start(),
            end: self.t_end(),
        })
    }

    fn node_of_step(&self, step: i64) -> Option<usize> {
        let k = step - self.start;
        (0..=self.n_steps as i64).contains(&k).then_some(k as usize)
    }

    pub fn zero_node(&self) -> Option<usize> {
        self.node_of_step(0)
    }

    /// Same nodes, relabelled so that old time `t` becomes `t - steps·dt`.
    pub fn shifted(&self, steps: i64) -> Self {
        Self {
            start: self.start - steps,
            ..*self
        }
    }

    /// Sub-grid `[from, to]` of this grid, both ends given as node indices.
    pub fn window(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.n_steps {
            return Err(invalid("window", format!("[{from}, {to}] not inside 0..={}", self.n_steps)));
        }
        Ok(Self {
            start: self.start + from as i64,
            dt: self.dt,
            n_steps: to - from,
        })
    }
}

/// One grid-sampled scalar trajectory.
#[derive(Clone, Debug)]
pub struct ScalarPath {
    grid: TimeGrid,
    raw: Arc<[f64]>,
    anchor: Option<usize>,
}

impl ScalarPath {
    /// Wraps explicit values, one per grid node.
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("{} values for a grid of {} nodes", values.len(), grid.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "path values must be finite"));
        }
        Ok(Self {
            grid,
            raw: values.into(),
            anchor: None,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        match self.anchor {
            Some(a) => self.raw[k] - self.raw[a],
            None => self.raw[k],
        }
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.value(self.grid.node_of(t)?))
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.value(k)).collect()
    }

    /// True when the grid contains t = 0 and the value there is exactly zero.
    pub fn is_anchored(&self) -> bool {
        self.grid.zero_node().is_some_and(|k| self.value(k) == 0.0)
    }

    /// Keeps every `factor`-th node, aligned so that t = 0 (if present) survives.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("factor", "must be at least 1"));
        }
        let start = self.grid.start;
        if start.rem_euclid(factor as i64) != 0 || self.grid.n_steps % factor != 0 {
            return Err(invalid(
                "factor",
                format!("{factor} does not divide the grid layout"),
            ));
        }
        let grid = TimeGrid {
            start: start / factor as i64,
            dt: self.grid.dt * factor as f64,
            n_steps: self.grid.n_steps / factor,
        };
        let values = (0..grid.len()).map(|j| self.value(j * factor)).collect();
        Self::from_values(grid, values)
    }
}

/// Autocovariance at lag `k` of fGn increments over steps of length `dt`:
/// `½ dt^{2H} (|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H})`.
pub fn fgn_autocovariance(k: u64, h: HurstParameter, dt: f64) -> f64 {
    let two_h = 2.0 * h.value();
    let k = k as f64;
    0.5 * dt.powf(two_h) * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

/// Circulant-embedding sampler for `n` fGn increments.
///
/// The autocovariance is embedded in a circulant of size `2m`, `m` being the
/// next power of two `≥ n`; its spectrum is computed once and reused for
/// every draw.
pub struct FgnSampler {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FgnSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnSampler")
            .field("n", &self.n)
            .field("embedding", &self.scale.len())
            .finish()
    }
}

impl FgnSampler {
    pub fn new(n: usize, h: HurstParameter, dt: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive and finite")));
        }
        let m = n.next_power_of_two();
        let size = 2 * m;
        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|j| {
                let lag = if j <= m { j } else { size - j };
                Complex::new(fgn_autocovariance(lag as u64, h, dt), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut row);

        let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -EIGENVALUE_TOLERANCE * max.abs() {
            return Err(Error::EmbeddingFailure {
                min_eigenvalue: min / max,
                tolerance: EIGENVALUE_TOLERANCE,
            });
        }
        let scale = row
            .iter()
            .map(|c| (c.re.max(0.0) / size as f64).sqrt())
            .collect();
        Ok(Self { n, scale, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample_increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }

    /// Cumulative sum of one fGn draw, starting at 0.
    pub fn sample_path_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        cumulative(&self.sample_increments(rng))
    }
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut values = Vec::with_capacity(increments.len() + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for dx in increments {
        acc += dx;
        values.push(acc);
    }
    values
}

pub(crate) fn anchored_origin_path(dt: f64, values: Vec<f64>) -> Result<ScalarPath> {
    let grid = TimeGrid::from_origin(dt, values.len() - 1)?;
    Ok(ScalarPath {
        grid,
        raw: values.into(),
        anchor: Some(0),
    })
}

/// fBm path on `[0, n_steps·dt]`, synthesized by circulant embedding.
pub fn sample_fbm(n_steps: usize, h: HurstParameter, dt: f64, seed: u64) -> Result<ScalarPath> {
    let sampler = FgnSampler::new(n_steps, h, dt)?;
    let mut rng = seed::rng(seed);
    anchored_origin_path(dt, sampler.sample_path_values(&mut rng))
}

/// Lower Cholesky factor of the `n × n` fGn covariance, row-major.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(n: usize, h: HurstParameter, dt: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        if n > CHOLESKY_MAX_STEPS {
            return Err(Error::SizeLimit {
                requested: n,
                limit: CHOLESKY_MAX_STEPS,
            });
        }
        let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k as u64, h, dt)).collect();
        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = gamma[i - j];
                for k in 0..j {
                    sum -= lower[i * n + k] * lower[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Misuse(format!(
                            "fGn covariance is not positive definite at row {i}"
                        )));
                    }
                    lower[i * n + i] = sum.sqrt();
                } else {
                    lower[i * n + j] = sum / lower[j * n + j];
                }
            }
        }
        Ok(Self { n, lower })
    }

    /// Increments `L z` for a vector of standard normals `z`.
    pub fn increments(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.lower[i * self.n..i * self.n + i + 1]
                    .iter()
                    .zip(z)
                    .map(|(l, zi)| l * zi)
                    .sum()
            })
            .collect()
    }
}

/// Cholesky construction from caller-supplied unit normals (one per step).
pub fn fbm_cholesky_from_normals(h: HurstParameter, dt: f64, z: &[f64]) -> Result<ScalarPath> {
    let factor = CholeskyFactor::new(z.len(), h, dt)?;
    anchored_origin_path(dt, cumulative(&factor.increments(z)))
}

/// Exact-covariance fBm by dense Cholesky; O(n³), test oracle only.
pub fn sample_fbm_cholesky(n_steps: usize, h: HurstParameter, dt: f64, seed: u64) -> Result<ScalarPath> {
    let factor = CholeskyFactor::new(n_steps, h, dt)?;
    let mut rng = seed::rng(seed);
    let z: Vec<f64> = (0..n_steps).map(|_| rng.sample(StandardNormal)).collect();
    anchored_origin_path(dt, cumulative(&factor.increments(&z)))
}

/// Wiener shift θ_s: the returned path at time `t` is `path(t + s) − path(s)`.
pub fn reanchor(path: &ScalarPath, s: f64) -> Result<ScalarPath> {
    let steps = grid_steps(s, path.grid.dt)?;
    let k = path.grid.node_of_step(steps).ok_or(Error::OutOfWindow {
        t: s,
        start: path.grid.t_start(),
        end: path.grid.t_end(),
    })?;
    Ok(ScalarPath {
        grid: path.grid.shifted(steps),
        raw: Arc::clone(&path.raw),
        anchor: Some(k),
    })
}

/// Two-sided fBm on `[-t_past, t_future]`.
///
/// A one-sided path on `[0, t_past + t_future]` is re-anchored at `t_past`.
/// Stationarity of increments makes the result exactly two-sided fBm in law,
/// including the correlation between past and future values.
pub fn two_sided_sample(
    t_past: f64,
    t_future: f64,
    h: HurstParameter,
    dt: f64,
    seed: u64,
) -> Result<ScalarPath> {
    let grid = TimeGrid::two_sided(t_past, t_future, dt)?;
    let one_sided = sample_fbm(grid.n_steps(), h, dt, seed)?;
    reanchor(&one_sided, -grid.t_start())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParameter {
        HurstParameter::new(v).unwrap()
    }

    #[test]
    fn hurst_range() {
        assert!(HurstParameter::new(0.5).is_err());
        assert!(HurstParameter::new(1.0).is_err());
        assert!(HurstParameter::new(0.4).is_err());
        assert!(HurstParameter::with_reference_mode(0.5, true).unwrap().is_reference());
        assert!(HurstParameter::with_reference_mode(0.5, false).is_err());
    }

    #[test]
    fn autocovariance_values() {
        assert_eq!(fgn_autocovariance(0, h(0.75), 1.0), 1.0);
        assert_eq!(fgn_autocovariance(1, HurstParameter::brownian_reference(), 1.0), 0.0);
        let expected = 0.5 * (2f64.powf(1.5) - 2.0);
        assert!((fgn_autocovariance(1, h(0.75), 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.414_213_6).abs() < 1e-7);
        for k in 0..200 {
            assert!(fgn_autocovariance(k, h(0.6), 0.1) > 0.0);
        }
    }

    #[test]
    fn grid_alignment() {
        let g = TimeGrid::two_sided(1.0, 2.0, 0.01).unwrap();
        assert_eq!(g.len(), 301);
        assert_eq!(g.zero_node(), Some(100));
        assert_eq!(g.time(100), 0.0);
        assert_eq!(g.node_of(0.5).unwrap(), 150);
        assert!(matches!(g.node_of(0.005), Err(Error::OffGrid { .. })));
        assert!(matches!(g.node_of(2.5), Err(Error::OutOfWindow { .. })));
        assert!(TimeGrid::new(0.0, 0.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_fbm(1024, h(0.75), 0.01, 7).unwrap();
        let b = sample_fbm(1024, h(0.75), 0.01, 7).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.is_anchored());
        assert_eq!(a.value(0), 0.0);
        let c = sample_fbm(1024, h(0.75), 0.01, 8).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn cholesky_first_step_is_scaled_normal() {
        let p = fbm_cholesky_from_normals(h(0.75), 1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(p.value(1), 1.0);
        assert_eq!(p.value(0), 0.0);
        let a = sample_fbm_cholesky(32, h(0.75), 0.1, 3).unwrap();
        let b = sample_fbm_cholesky(32, h(0.75), 0.1, 3).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn cholesky_guard() {
        assert!(matches!(
            sample_fbm_cholesky(CHOLESKY_MAX_STEPS + 1, h(0.75), 0.1, 0),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn reanchor_identity_and_anchor() {
        let p = sample_fbm(200, h(0.7), 0.01, 1).unwrap();
        let same = reanchor(&p, 0.0).unwrap();
        assert_eq!(same.values(), p.values());
        let q = reanchor(&p, 0.5).unwrap();
        assert_eq!(q.value_at(0.0).unwrap(), 0.0);
        assert_eq!(q.grid().t_start(), -0.5);
        for k in 0..p.grid().len() {
            let t = q.grid().time(k);
            let expected = p.value_at(t + 0.5).unwrap() - p.value_at(0.5).unwrap();
            assert!((q.value(k) - expected).abs() <= 1e-15 * (1.0 + expected.abs()));
        }
        assert!(matches!(reanchor(&p, 2.5), Err(Error::OutOfWindow { .. })));
        assert!(matches!(reanchor(&p, 0.0051), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn two_sided_without_past_is_one_sided() {
        let a = two_sided_sample(0.0, 1.0, h(0.8), 0.01, 5).unwrap();
        let b = sample_fbm(100, h(0.8), 0.01, 5).unwrap();
        assert_eq!(a.values(), b.values());
        let c = two_sided_sample(1.0, 1.0, h(0.8), 0.01, 5).unwrap();
        assert_eq!(c.value_at(0.0).unwrap(), 0.0);
        assert_eq!(c.grid().t_start(), -1.0);
    }

    #[test]
    fn coarsen_keeps_zero() {
        let p = two_sided_sample(1.0, 1.0, h(0.8), 0.01, 5).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.grid().dt(), 0.04);
        assert_eq!(c.value_at(0.0).unwrap(), 0.0);
        assert_eq!(c.value_at(0.4).unwrap(), p.value_at(0.4).unwrap());
        assert!(p.coarsen(3).is_err());
    }
}
