//! Truncated lattice state, the discrete operators `A`, `B`, `B*`, and the
//! componentwise nonlinearity with randomized probes of its structural
//! constants.
//!
//! Sites run over `i = -N..=N`. With [`Boundary::ZeroPadding`] neighbours
//! outside the window read as zero; with [`Boundary::Periodic`] they wrap.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    ZeroPadding,
    Periodic,
}

/// Finite window `(u_{-N}, …, u_N)` of a square-summable sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LatticeVector {
    values: Vec<f64>,
}

impl LatticeVector {
    pub fn zeros(half_width: usize) -> Self {
        Self {
            values: vec![0.0; 2 * half_width + 1],
        }
    }

    pub fn constant(half_width: usize, c: f64) -> Self {
        Self {
            values: vec![c; 2 * half_width + 1],
        }
    }

    /// Unit vector `e^i`.
    pub fn basis(half_width: usize, site: i64) -> Result<Self> {
        let mut v = Self::zeros(half_width);
        let k = v.slot(site).ok_or_else(|| invalid("site", format!("{site} outside ±{half_width}")))?;
        v.values[k] = 1.0;
        Ok(v)
    }

    pub fn from_fn(half_width: usize, mut f: impl FnMut(i64) -> f64) -> Self {
        let n = half_width as i64;
        Self {
            values: (-n..=n).map(&mut f).collect(),
        }
    }

    /// Values ordered from site `-N` to site `N`; the length must be odd.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(invalid("values", format!("length {} is not 2N+1", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "entries must be finite"));
        }
        Ok(Self { values })
    }

    pub fn half_width(&self) -> usize {
        self.values.len() / 2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
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

    fn slot(&self, site: i64) -> Option<usize> {
        let k = site + self.half_width() as i64;
        (0..self.values.len() as i64).contains(&k).then_some(k as usize)
    }

    /// Value at lattice site `site`; zero outside the window.
    pub fn get(&self, site: i64) -> f64 {
        self.slot(site).map_or(0.0, |k| self.values[k])
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.half_width() as i64;
        self.values.iter().enumerate().map(move |(k, &v)| (k as i64 - n, v))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self += alpha · x`.
    pub fn axpy(&mut self, alpha: f64, x: &Self) {
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += alpha * v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Same sequence seen through a window of another half-width: entries
    /// outside the new window are dropped, new entries are zero.
    pub fn resized(&self, half_width: usize) -> Self {
        Self::from_fn(half_width, |i| self.get(i))
    }

    pub fn ensure_half_width(&self, expected: usize) -> Result<()> {
        if self.half_width() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.half_width(),
            })
        }
    }
}

impl Add<&LatticeVector> for &LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: &LatticeVector) -> LatticeVector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&LatticeVector> for &LatticeVector {
    type Output = LatticeVector;
    fn sub(self, rhs: &LatticeVector) -> LatticeVector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&LatticeVector> for LatticeVector {
    fn add_assign(&mut self, rhs: &LatticeVector) {
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
    }
}

impl SubAssign<&LatticeVector> for LatticeVector {
    fn sub_assign(&mut self, rhs: &LatticeVector) {
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &LatticeVector {
    type Output = LatticeVector;
    fn mul(self, rhs: f64) -> LatticeVector {
        LatticeVector {
            values: self.values.iter().map(|v| v * rhs).collect(),
        }
    }
}

#[inline]
fn neighbour(values: &[f64], k: usize, offset: isize, boundary: Boundary) -> f64 {
    let len = values.len() as isize;
    let j = k as isize + offset;
    if (0..len).contains(&j) {
        values[j as usize]
    } else {
        match boundary {
            Boundary::ZeroPadding => 0.0,
            Boundary::Periodic => values[j.rem_euclid(len) as usize],
        }
    }
}

/// `(Ax)_i = -x_{i-1} + 2x_i - x_{i+1}`.
impl TryFrom<Vec<f64>> for LatticeVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::from_values(values)
    }
}

impl From<LatticeVector> for Vec<f64> {
    fn from(x: LatticeVector) -> Self {
        x.values
    }
}

pub fn apply_a(x: &LatticeVector, boundary: Boundary) -> LatticeVector {
    let v = &x.values;
    LatticeVector {
        values: (0..v.len())
            .map(|k| -neighbour(v, k, -1, boundary) + 2.0 * v[k] - neighbour(v, k, 1, boundary))
            .collect(),
    }
}

/// `(Bx)_i = x_{i+1} - x_i`.
pub fn apply_b(x: &LatticeVector, boundary: Boundary) -> LatticeVector {
    let v = &x.values;
    LatticeVector {
        values: (0..v.len()).map(|k| neighbour(v, k, 1, boundary) - v[k]).collect(),
    }
}

/// `(B*x)_i = x_{i-1} - x_i`.
pub fn apply_bstar(x: &LatticeVector, boundary: Boundary) -> LatticeVector {
    let v = &x.values;
    LatticeVector {
        values: (0..v.len()).map(|k| neighbour(v, k, -1, boundary) - v[k]).collect(),
    }
}

/// Coupling, damping, forcing and noise intensities of the lattice system.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeParams {
    pub kappa: f64,
    pub lambda: f64,
    pub forcing: LatticeVector,
    pub sigma: LatticeVector,
    pub boundary: Boundary,
}

impl LatticeParams {
    pub fn new(
        kappa: f64,
        lambda: f64,
        forcing: LatticeVector,
        sigma: LatticeVector,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa", format!("{kappa} must be a positive constant")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} must be a positive constant")));
        }
        sigma.ensure_half_width(forcing.half_width())?;
        Ok(Self {
            kappa,
            lambda,
            forcing,
            sigma,
            boundary,
        })
    }

    pub fn half_width(&self) -> usize {
        self.forcing.half_width()
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied scalar nonlinearity with its derivative.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub f: ScalarFn,
    pub df: ScalarFn,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum NonlinearityKind {
    /// `f(s) = -a s`
    Linear { a: f64 },
    /// `f(s) = -a s - b s³`
    Cubic { a: f64, b: f64 },
    Custom(CustomFn),
}

/// Componentwise nonlinearity together with its claimed dissipativity
/// constant `L`, growth constant `K` and growth exponent `p`.
#[derive(Clone, Debug)]
pub struct NonlinearitySpec {
    kind: NonlinearityKind,
    dissipativity: f64,
    growth: f64,
    exponent: f64,
}

impl NonlinearitySpec {
    pub fn new(kind: NonlinearityKind, dissipativity: f64, growth: f64, exponent: f64) -> Result<Self> {
        if !(dissipativity > 0.0) {
            return Err(invalid("L", format!("{dissipativity} must be positive")));
        }
        if !(growth > 0.0) {
            return Err(invalid("K", format!("{growth} must be positive")));
        }
        if !(exponent >= 1.0) {
            return Err(invalid("p", format!("{exponent} must be at least 1")));
        }
        Ok(Self {
            kind,
            dissipativity,
            growth,
            exponent,
        })
    }

    /// `f(s) = -a s` claiming `L = a`, `K = a`, `p = 1`.
    pub fn linear(a: f64) -> Result<Self> {
        Self::new(NonlinearityKind::Linear { a }, a, a, 1.0)
    }

    /// `f(s) = -a s - b s³` claiming `L = a`, `K = 2(a + b) + 2`, `p = 3`.
    pub fn cubic(a: f64, b: f64) -> Result<Self> {
        if b < 0.0 {
            return Err(invalid("b", "cubic coefficient must be non-negative"));
        }
        Self::new(NonlinearityKind::Cubic { a, b }, a, 2.0 * (a + b) + 2.0, 3.0)
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn dissipativity(&self) -> f64 {
        self.dissipativity
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn with_claims(mut self, dissipativity: f64, growth: f64, exponent: f64) -> Result<Self> {
        self = Self::new(self.kind, dissipativity, growth, exponent)?;
        Ok(self)
    }

    /// The damping `a` of a linear nonlinearity, `None` otherwise.
    pub fn linear_rate(&self) -> Option<f64> {
        match self.kind {
            NonlinearityKind::Linear { a } => Some(a),
            _ => None,
        }
    }

    #[inline]
    pub fn scalar(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Linear { a } => -a * s,
            NonlinearityKind::Cubic { a, b } => -a * s - b * s * s * s,
            NonlinearityKind::Custom(c) => (c.f)(s),
        }
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Linear { a } => -a,
            NonlinearityKind::Cubic { a, b } => -a - 3.0 * b * s * s,
            NonlinearityKind::Custom(c) => (c.df)(s),
        }
    }
}

/// Nemytskii operator `f(x) = (f(x_i))_i`.
pub fn eval_f(spec: &NonlinearitySpec, x: &LatticeVector) -> Result<LatticeVector> {
    let n = x.half_width() as i64;
    let mut values = Vec::with_capacity(x.len());
    for (k, &xi) in x.values.iter().enumerate() {
        let y = spec.scalar(xi);
        if !y.is_finite() {
            return Err(Error::Overflow { site: k as i64 - n });
        }
        values.push(y);
    }
    Ok(LatticeVector { values })
}

/// `max_i |f'(x_i)|`, the operator norm of the diagonal Jacobian.
pub fn jacobian_norm(spec: &NonlinearitySpec, x: &LatticeVector) -> f64 {
    x.values.iter().fold(0.0, |m, &s| m.max(spec.derivative(s).abs()))
}

/// Threshold slack used by the probes.
pub const PROBE_TOLERANCE: f64 = 1e-9;

/// Pairs closer than this are skipped by the dissipativity probe.
pub const DEGENERATE_PAIR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipativityReport {
    /// Largest observed `⟨x−y, f(x)−f(y)⟩ / |x−y|²`.
    pub worst_quotient: f64,
    pub claimed_l: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Largest observed `(|f(x)| + |Df(x)|) / (1 + |x|^p)`.
    pub worst_ratio: f64,
    pub worst_norm: f64,
    pub claimed_k: f64,
    pub exponent: f64,
    pub evaluated: usize,
    pub pass: bool,
}

/// Random point of the ball of radius `radius`. Half of the draws are
/// concentrated on a single site (where the cubic term is largest), the rest
/// point in a Gaussian direction with a uniform radius.
fn sample_point<R: Rng>(rng: &mut R, half_width: usize, radius: f64) -> LatticeVector {
    let len = 2 * half_width + 1;
    if rng.random_bool(0.5) {
        let mut v = LatticeVector::zeros(half_width);
        let k = rng.random_range(0..len);
        v.values[k] = radius * rng.random_range(-1.0..=1.0);
        v
    } else {
        let dir: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = radius * rng.random_range(0.0..=1.0);
        LatticeVector {
            values: dir.into_iter().map(|d| d * r / norm).collect(),
        }
    }
}

/// Randomized check of `⟨x−y, f(x)−f(y)⟩ ≤ −L|x−y|²`.
pub fn probe_dissipativity(
    spec: &NonlinearitySpec,
    half_width: usize,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<DissipativityReport> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let mut rng = seed::rng(seed::derive_seed(seed, &[seed::DOMAIN_PROBE, 0]));
    let mut worst = f64::NEG_INFINITY;
    let mut skipped = 0;
    for _ in 0..n_samples {
        let x = sample_point(&mut rng, half_width, radius);
        let y = sample_point(&mut rng, half_width, radius);
        let d = &x - &y;
        let d2 = d.dot(&d);
        if d2.sqrt() < DEGENERATE_PAIR {
            skipped += 1;
            continue;
        }
        let df = &eval_f(spec, &x)? - &eval_f(spec, &y)?;
        worst = worst.max(d.dot(&df) / d2);
    }
    let evaluated = n_samples - skipped;
    Ok(DissipativityReport {
        worst_quotient: worst,
        claimed_l: spec.dissipativity,
        evaluated,
        skipped,
        pass: evaluated > 0 && worst <= -spec.dissipativity + PROBE_TOLERANCE,
    })
}

/// Randomized check of `|f(x)| + |Df(x)| ≤ K(1 + |x|^p)`.
pub fn probe_growth(
    spec: &NonlinearitySpec,
    half_width: usize,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<GrowthReport> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let mut rng = seed::rng(seed::derive_seed(seed, &[seed::DOMAIN_PROBE, 1]));
    let mut worst = f64::NEG_INFINITY;
    let mut worst_norm = 0.0;
    for _ in 0..n_samples {
        let x = sample_point(&mut rng, half_width, radius);
        let norm = x.norm();
        let lhs = eval_f(spec, &x)?.norm() + jacobian_norm(spec, &x);
        let ratio = lhs / (1.0 + norm.powf(spec.exponent));
        if ratio > worst {
            worst = ratio;
            worst_norm = norm;
        }
    }
    Ok(GrowthReport {
        worst_ratio: worst,
        worst_norm,
        claimed_k: spec.growth,
        exponent: spec.exponent,
        evaluated: n_samples,
        pass: worst <= spec.growth + PROBE_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMode {
    pub eigenvalue: f64,
    pub vector: LatticeVector,
}

/// Orthonormal eigenbasis of the periodic `A` on `2N+1` sites.
///
/// Mode 0 is the constant vector; for `k = 1..=N` a cosine and a sine mode
/// share the eigenvalue `4 sin²(πk / (2N+1))`.
pub fn spectral_modes_a(half_width: usize) -> Vec<SpectralMode> {
    let m = (2 * half_width + 1) as f64;
    let mut modes = Vec::with_capacity(2 * half_width + 1);
    modes.push(SpectralMode {
        eigenvalue: 0.0,
        vector: LatticeVector::constant(half_width, 1.0 / m.sqrt()),
    });
    let amp = (2.0 / m).sqrt();
    for k in 1..=half_width {
        let eigenvalue = 4.0 * (PI * k as f64 / m).sin().powi(2);
        let omega = 2.0 * PI * k as f64 / m;
        modes.push(SpectralMode {
            eigenvalue,
            vector: LatticeVector::from_fn(half_width, |i| amp * (omega * i as f64).cos()),
        });
        modes.push(SpectralMode {
            eigenvalue,
            vector: LatticeVector::from_fn(half_width, |i| amp * (omega * i as f64).sin()),
        });
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_vector(rng: &mut impl Rng, n: usize) -> LatticeVector {
        LatticeVector::from_fn(n, |_| rng.sample(StandardNormal))
    }

    #[test]
    fn stencil_on_basis_vector() {
        let e0 = LatticeVector::basis(3, 0).unwrap();
        let ax = apply_a(&e0, Boundary::ZeroPadding);
        assert_eq!(ax.get(0), 2.0);
        assert_eq!(ax.get(1), -1.0);
        assert_eq!(ax.get(-1), -1.0);
        assert_eq!(ax.get(2), 0.0);
        let bx = apply_b(&e0, Boundary::ZeroPadding);
        assert_eq!(bx.get(-1), 1.0);
        assert_eq!(bx.get(0), -1.0);
        assert_eq!(bx.values().iter().filter(|v| **v != 0.0).count(), 2);
        let bs = apply_bstar(&e0, Boundary::ZeroPadding);
        assert_eq!(bs.get(1), 1.0);
        assert_eq!(bs.get(0), -1.0);
    }

    #[test]
    fn constants_in_kernel() {
        let c = LatticeVector::constant(4, 2.5);
        assert!(apply_a(&c, Boundary::Periodic).values().iter().all(|v| *v == 0.0));
        assert!(apply_b(&c, Boundary::Periodic).values().iter().all(|v| *v == 0.0));
        // zero padding: only the last site sees the missing neighbour
        let b = apply_b(&c, Boundary::ZeroPadding);
        assert_eq!(b.get(4), -2.5);
        assert!(b.values()[..8].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn periodic_wraps() {
        let e = LatticeVector::basis(2, 2).unwrap();
        let ax = apply_a(&e, Boundary::Periodic);
        assert_eq!(ax.get(-2), -1.0);
        assert_eq!(ax.get(1), -1.0);
    }

    #[test]
    fn adjoint_and_positive_on_both_boundaries() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for boundary in [Boundary::ZeroPadding, Boundary::Periodic] {
            for _ in 0..200 {
                let x = random_vector(&mut rng, 10);
                let y = random_vector(&mut rng, 10);
                let lhs = apply_bstar(&x, boundary).dot(&y);
                let rhs = x.dot(&apply_b(&y, boundary));
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
                assert!(apply_a(&x, boundary).dot(&x) >= -1e-12 * x.dot(&x));
            }
        }
    }

    #[test]
    fn factorization_periodic_and_interior_support() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = random_vector(&mut rng, 12);
            let a = apply_a(&x, Boundary::Periodic);
            let bbs = apply_b(&apply_bstar(&x, Boundary::Periodic), Boundary::Periodic);
            let bsb = apply_bstar(&apply_b(&x, Boundary::Periodic), Boundary::Periodic);
            assert!(a.distance(&bbs) <= 1e-12 * x.norm());
            assert!(a.distance(&bsb) <= 1e-12 * x.norm());

            // With zero padding the factorization holds for vectors that
            // vanish on the two outermost sites.
            let mut y = x.clone();
            y.values_mut()[0] = 0.0;
            let last = y.len() - 1;
            y.values_mut()[last] = 0.0;
            let z = Boundary::ZeroPadding;
            let a = apply_a(&y, z);
            assert!(a.distance(&apply_b(&apply_bstar(&y, z), z)) <= 1e-12 * y.norm());
            assert!(a.distance(&apply_bstar(&apply_b(&y, z), z)) <= 1e-12 * y.norm());
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let x = LatticeVector::from_values(vec![1.0, -2.0, 0.5]).unwrap();
        let lin = NonlinearitySpec::linear(1.0).unwrap();
        assert_eq!(eval_f(&lin, &x).unwrap(), &x * -1.0);
        let cubic = NonlinearitySpec::cubic(1.0, 1.0).unwrap();
        let e0 = LatticeVector::basis(2, 0).unwrap();
        assert_eq!(eval_f(&cubic, &e0).unwrap(), &e0 * -2.0);
        let zero = LatticeVector::zeros(2);
        assert_eq!(eval_f(&cubic, &zero).unwrap(), zero);
        let big = LatticeVector::from_values(vec![1e120]).unwrap();
        assert!(matches!(eval_f(&cubic, &big), Err(Error::Overflow { site: 0 })));
    }

    #[test]
    fn eval_f_commutes_with_permutation() {
        let cubic = NonlinearitySpec::cubic(0.7, 1.3).unwrap();
        let x = LatticeVector::from_values(vec![0.3, -1.2, 2.0, 0.1, -0.4]).unwrap();
        let mut reversed = x.values().to_vec();
        reversed.reverse();
        let fx = eval_f(&cubic, &x).unwrap();
        let mut frev = eval_f(&cubic, &LatticeVector::from_values(reversed).unwrap())
            .unwrap()
            .into_values();
        frev.reverse();
        assert_eq!(fx.values(), &frev[..]);
    }

    #[test]
    fn spec_validation() {
        assert!(NonlinearitySpec::new(NonlinearityKind::Linear { a: 1.0 }, 0.0, 1.0, 1.0).is_err());
        assert!(NonlinearitySpec::new(NonlinearityKind::Linear { a: 1.0 }, 1.0, -1.0, 1.0).is_err());
        assert!(NonlinearitySpec::new(NonlinearityKind::Linear { a: 1.0 }, 1.0, 1.0, 0.5).is_err());
        let e = LatticeVector::zeros(2);
        assert!(LatticeParams::new(-1.0, 1.0, e.clone(), e.clone(), Boundary::Periodic).is_err());
        assert!(LatticeParams::new(1.0, 0.0, e.clone(), e.clone(), Boundary::Periodic).is_err());
        assert!(LatticeParams::new(1.0, 1.0, e.clone(), LatticeVector::zeros(3), Boundary::Periodic).is_err());
    }

    #[test]
    fn linear_dissipativity_is_exact() {
        let spec = NonlinearitySpec::linear(2.0).unwrap();
        let r = probe_dissipativity(&spec, 8, 2000, 10.0, 1).unwrap();
        assert_eq!(r.worst_quotient, -2.0);
        assert!(r.pass);
    }

    #[test]
    fn designed_violation_is_caught() {
        let spec = NonlinearitySpec::new(NonlinearityKind::Linear { a: -1.0 }, 1.0, 2.0, 1.0).unwrap();
        let r = probe_dissipativity(&spec, 4, 100, 10.0, 2).unwrap();
        assert_eq!(r.worst_quotient, 1.0);
        assert!(!r.pass);
    }

    #[test]
    fn growth_probes() {
        let lin = NonlinearitySpec::linear(1.0).unwrap().with_claims(1.0, 2.0, 1.0).unwrap();
        assert!(probe_growth(&lin, 4, 2000, 10.0, 3).unwrap().pass);
        let cubic_p1 = NonlinearitySpec::cubic(1.0, 1.0).unwrap().with_claims(1.0, 10.0, 1.0).unwrap();
        let r = probe_growth(&cubic_p1, 4, 2000, 100.0, 3).unwrap();
        assert!(!r.pass);
        assert!(r.worst_norm > 3.0);
    }

    #[test]
    fn spectral_basis() {
        let modes = spectral_modes_a(2);
        assert_eq!(modes.len(), 5);
        assert_eq!(modes[0].eigenvalue, 0.0);
        assert!(modes[0].vector.values().windows(2).all(|w| w[0] == w[1]));
        for (i, m) in modes.iter().enumerate() {
            assert!((0.0..=4.0).contains(&m.eigenvalue));
            let av = apply_a(&m.vector, Boundary::Periodic);
            assert!(av.distance(&(&m.vector * m.eigenvalue)) <= 1e-12);
            for (j, o) in modes.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m.vector.dot(&o.vector) - expected).abs() < 1e-12);
            }
        }
    }
}
