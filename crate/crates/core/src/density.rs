//! One-dimensional post-data densities.
//!
//! A [`Density1D`] is either a parametric normal, a piecewise-linear density on a
//! uniform grid, or a finite mixture of those. Grid weights are density values at
//! the nodes; mass is computed with the trapezoid rule, which is exact for the
//! piecewise-linear interpolant used by `pdf`, `cdf` and `quantile`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IoiError, Result};
use crate::normal::{phi, phi_inv, std_normal_ln_pdf};

/// Grid resolution used when a density has to be tabulated.
pub const DEFAULT_GRID_POINTS: usize = 2048;

/// Half-width, in standard deviations, of the support used for normal densities.
pub const NORMAL_SUPPORT_SDS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub struct NormalDensity {
    mean: f64,
    variance: f64,
}

impl NormalDensity {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Piecewise-linear density on `n` uniformly spaced nodes spanning `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    weights: Vec<f64>,
    /// Unnormalized trapezoid mass to the left of each node.
    cumulative: Vec<f64>,
}

impl PartialEq for GridDensity {
    fn eq(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.weights == other.weights
    }
}

impl GridDensity {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.weights.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.weights.len() {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    /// Trapezoid integral of the raw weights.
    pub fn mass(&self) -> f64 {
        *self.cumulative.last().expect("grid has at least two nodes")
    }

    fn cell_of(&self, t: f64) -> (usize, f64) {
        let h = self.spacing();
        let last = self.weights.len() - 2;
        let pos = (t - self.lo) / h;
        let i = (pos.floor().max(0.0) as usize).min(last);
        let s = ((t - self.lo) - i as f64 * h) / h;
        (i, s.clamp(0.0, 1.0))
    }

    fn pdf(&self, t: f64) -> f64 {
        if !(t >= self.lo && t <= self.hi) {
            return 0.0;
        }
        let (i, s) = self.cell_of(t);
        let w = self.weights[i] + (self.weights[i + 1] - self.weights[i]) * s;
        w / self.mass()
    }

    fn cdf(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 0.0;
        }
        if t >= self.hi {
            return 1.0;
        }
        let (i, s) = self.cell_of(t);
        let h = self.spacing();
        let (w0, w1) = (self.weights[i], self.weights[i + 1]);
        let partial = h * (w0 * s + 0.5 * (w1 - w0) * s * s);
        ((self.cumulative[i] + partial) / self.mass()).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let target = p * self.mass();
        let last = self.weights.len() - 2;
        let i = self
            .cumulative
            .partition_point(|&c| c <= target)
            .saturating_sub(1)
            .min(last);
        let h = self.spacing();
        let rest = target - self.cumulative[i];
        let (w0, w1) = (self.weights[i], self.weights[i + 1]);
        // Solve h*(w0*s + (w1-w0)*s^2/2) = rest for s in [0, 1].
        let a = 0.5 * h * (w1 - w0);
        let b = h * w0;
        let s = if rest <= 0.0 {
            0.0
        } else if a.abs() <= 1e-300 {
            if b > 0.0 {
                rest / b
            } else {
                0.0
            }
        } else {
            let disc = (b * b + 4.0 * a * rest).max(0.0);
            let denom = b + disc.sqrt();
            if denom > 0.0 {
                2.0 * rest / denom
            } else {
                0.0
            }
        };
        self.lo + (i as f64 + s.clamp(0.0, 1.0)) * h
    }

    fn moments(&self) -> (f64, f64) {
        let h = self.spacing();
        let mass = self.mass();
        let n = self.weights.len();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let t = self.node(i);
            let c = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            m1 += c * w * t;
            m2 += c * w * t * t;
        }
        let mean = m1 * h / mass;
        (mean, (m2 * h / mass - mean * mean).max(0.0))
    }
}

/// Finite mixture `sum_i w_i p_i(t)`; weights are stored as given and normalized on use.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureDensity {
    components: Vec<(f64, Density1D)>,
    total: f64,
}

impl MixtureDensity {
    pub fn components(&self) -> &[(f64, Density1D)] {
        &self.components
    }

    /// Normalized weight of component `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.components[i].0 / self.total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub enum Density1D {
    Normal(NormalDensity),
    Grid(GridDensity),
    Mixture(MixtureDensity),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
enum DensityRepr {
    Normal {
        mean: f64,
        variance: f64,
    },
    Grid {
        lo: f64,
        hi: f64,
        weights: Vec<f64>,
    },
    Mixture {
        components: Vec<ComponentRepr>,
    },
}

#[derive(Serialize, Deserialize)]
struct ComponentRepr {
    weight: f64,
    density: Density1D,
}

impl TryFrom<DensityRepr> for Density1D {
    type Error = IoiError;

    fn try_from(repr: DensityRepr) -> Result<Self> {
        match repr {
            DensityRepr::Normal { mean, variance } => Density1D::normal(mean, variance),
            DensityRepr::Grid { lo, hi, weights } => Density1D::grid(lo, hi, weights),
            DensityRepr::Mixture { components } => {
                Density1D::mixture(components.into_iter().map(|c| (c.weight, c.density)).collect())
            }
        }
    }
}

impl From<Density1D> for DensityRepr {
    fn from(d: Density1D) -> Self {
        match d {
            Density1D::Normal(n) => DensityRepr::Normal {
                mean: n.mean,
                variance: n.variance,
            },
            Density1D::Grid(g) => DensityRepr::Grid {
                lo: g.lo,
                hi: g.hi,
                weights: g.weights,
            },
            Density1D::Mixture(m) => DensityRepr::Mixture {
                components: m
                    .components
                    .into_iter()
                    .map(|(weight, density)| ComponentRepr { weight, density })
                    .collect(),
            },
        }
    }
}

/// Draws produced by [`Density1D::sample`], tagged with the seed that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
pub(crate) fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

impl Density1D {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(IoiError::Structural(format!("normal mean must be finite, got {mean}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(IoiError::Structural(format!(
                "normal variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Density1D::Normal(NormalDensity { mean, variance }))
    }

    pub fn grid(lo: f64, hi: f64, weights: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(IoiError::Structural(format!(
                "grid support must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if weights.len() < 2 {
            return Err(IoiError::Structural(format!(
                "grid needs at least 2 points, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(IoiError::Structural(format!("grid weight {w} is not a finite nonnegative value")));
        }
        let h = (hi - lo) / (weights.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for pair in weights.windows(2) {
            acc += 0.5 * h * (pair[0] + pair[1]);
            cumulative.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(IoiError::Structural("grid weights carry no positive mass".into()));
        }
        Ok(Density1D::Grid(GridDensity {
            lo,
            hi,
            weights,
            cumulative,
        }))
    }

    /// Tabulates `f` on `n` uniform nodes over `[lo, hi]`.
    pub fn grid_from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(IoiError::Structural(format!("grid needs at least 2 points, got {n}")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let weights = (0..n)
            .map(|i| f(if i + 1 == n { hi } else { lo + i as f64 * h }))
            .collect();
        Density1D::grid(lo, hi, weights)
    }

    pub fn mixture(components: Vec<(f64, Density1D)>) -> Result<Self> {
        if components.is_empty() {
            return Err(IoiError::Structural("mixture needs at least one component".into()));
        }
        if let Some((w, _)) = components.iter().find(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(IoiError::Structural(format!("mixture weight {w} is not a finite nonnegative value")));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if total <= 0.0 {
            return Err(IoiError::Structural("mixture weights carry no positive mass".into()));
        }
        Ok(Density1D::Mixture(MixtureDensity { components, total }))
    }

    pub fn as_normal(&self) -> Option<&NormalDensity> {
        match self {
            Density1D::Normal(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridDensity> {
        match self {
            Density1D::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn form(&self) -> &'static str {
        match self {
            Density1D::Normal(_) => "normal",
            Density1D::Grid(_) => "grid",
            Density1D::Mixture(_) => "mixture",
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            Density1D::Normal(n) => {
                let sd = n.sd();
                crate::normal::std_normal_pdf((t - n.mean) / sd) / sd
            }
            Density1D::Grid(g) => g.pdf(t),
            Density1D::Mixture(m) => {
                m.components.iter().map(|(w, d)| w * d.pdf(t)).sum::<f64>() / m.total
            }
        }
    }

    /// Log density; exact for the normal form so far tails do not underflow.
    pub fn ln_pdf(&self, t: f64) -> f64 {
        match self {
            Density1D::Normal(n) => {
                let sd = n.sd();
                std_normal_ln_pdf((t - n.mean) / sd) - sd.ln()
            }
            _ => self.pdf(t).ln(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Density1D::Normal(n) => phi((t - n.mean) / n.sd()),
            Density1D::Grid(g) => g.cdf(t),
            Density1D::Mixture(m) => {
                let c: f64 = m.components.iter().map(|(w, d)| w * d.cdf(t)).sum();
                (c / m.total).clamp(0.0, 1.0)
            }
        }
    }

    /// Probability of the half-open interval `(lo, hi]`; infinite bounds are allowed.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let upper = if hi == f64::INFINITY { 1.0 } else { self.cdf(hi) };
        let lower = if lo == f64::NEG_INFINITY { 0.0 } else { self.cdf(lo) };
        (upper - lower).max(0.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(IoiError::Domain(format!("quantile requires 0 < p < 1, got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        match self {
            Density1D::Normal(n) => n.mean + n.sd() * phi_inv(p),
            Density1D::Grid(g) => g.quantile(p),
            Density1D::Mixture(m) => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for (w, d) in &m.components {
                    if *w > 0.0 {
                        let q = d.quantile_unchecked(p);
                        lo = lo.min(q);
                        hi = hi.max(q);
                    }
                }
                // Mixture quantile lies between the smallest and largest component quantiles.
                for _ in 0..200 {
                    if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Inverse-CDF draw using a single uniform.
    pub(crate) fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        self.invert_uniform(u)
    }

    fn invert_uniform(&self, u: f64) -> f64 {
        match self {
            Density1D::Mixture(m) => {
                let mut acc = 0.0;
                let target = u * m.total;
                let last = m.components.iter().rposition(|(w, _)| *w > 0.0).unwrap_or(0);
                for (i, (w, d)) in m.components.iter().enumerate() {
                    if *w <= 0.0 {
                        continue;
                    }
                    if target < acc + w || i == last {
                        let inner = ((target - acc) / w).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                        return d.invert_uniform(inner);
                    }
                    acc += w;
                }
                unreachable!("mixture has a positive component")
            }
            _ => self.quantile_unchecked(u),
        }
    }

    /// Seeded inverse-CDF sample; identical `(density, count, seed)` give identical batches.
    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleBatch> {
        if count < 1 {
            return Err(IoiError::Domain("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..count).map(|_| self.draw(&mut rng)).collect();
        Ok(SampleBatch { values, seed })
    }

    /// Interval that holds all but a negligible amount of mass.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1D::Normal(n) => (
                n.mean - NORMAL_SUPPORT_SDS * n.sd(),
                n.mean + NORMAL_SUPPORT_SDS * n.sd(),
            ),
            Density1D::Grid(g) => (g.lo, g.hi),
            Density1D::Mixture(m) => m
                .components
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(_, d)| d.support())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.max(hi))),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Density1D::Normal(n) => n.mean,
            Density1D::Grid(g) => g.moments().0,
            Density1D::Mixture(m) => {
                m.components.iter().map(|(w, d)| w * d.mean()).sum::<f64>() / m.total
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Density1D::Normal(n) => n.variance,
            Density1D::Grid(g) => g.moments().1,
            Density1D::Mixture(m) => {
                let mean = self.mean();
                m.components
                    .iter()
                    .map(|(w, d)| w * (d.variance() + (d.mean() - mean).powi(2)))
                    .sum::<f64>()
                    / m.total
            }
        }
    }

    /// Rescales grid weights (and mixture weights) so the stored values integrate to one.
    pub fn normalize(&self) -> Density1D {
        match self {
            Density1D::Normal(_) => self.clone(),
            Density1D::Grid(g) => {
                let mass = g.mass();
                let weights = g.weights.iter().map(|w| w / mass).collect();
                Density1D::grid(g.lo, g.hi, weights).expect("rescaled grid stays valid")
            }
            Density1D::Mixture(m) => Density1D::Mixture(MixtureDensity {
                components: m
                    .components
                    .iter()
                    .map(|(w, d)| (w / m.total, d.normalize()))
                    .collect(),
                total: 1.0,
            }),
        }
    }

    /// Tabulates the density on `n` nodes over its support.
    pub fn to_grid(&self, n: usize) -> Result<Density1D> {
        let (lo, hi) = self.support();
        Density1D::grid_from_fn(lo, hi, n, |t| self.pdf(t))
    }
}
