#![allow(dead_code)]

use ioi_core::density::Density1D;
use ioi_core::gibbs::{ConditionalSet, MethodTag};
use ioi_core::Result;

/// Conditionals θ₁|θ₂ ~ N(b1·θ₂, v1) and θ₂|θ₁ ~ N(b2·θ₁, v2).
pub fn linear_pair(b1: f64, v1: f64, b2: f64, v2: f64) -> ConditionalSet {
    ConditionalSet::from_fns(
        vec![
            Box::new(move |o: &[f64]| Density1D::normal(b1 * o[0], v1))
                as Box<dyn Fn(&[f64]) -> Result<Density1D> + Send + Sync>,
            Box::new(move |o: &[f64]| Density1D::normal(b2 * o[0], v2)),
        ],
        vec![MethodTag::Other; 2],
    )
    .unwrap()
}

pub fn bivariate_normal_pair(rho: f64) -> ConditionalSet {
    let v = 1.0 - rho * rho;
    linear_pair(rho, v, rho, v)
}

pub fn mismatched_pair() -> ConditionalSet {
    linear_pair(1.0, 1.0, 0.5, 1.0)
}

fn gauss(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp()
}

/// Row-stochastic matrix `k[from][to]` on `nodes` for `to | from ~ N(b·from, v)`.
fn kernel_matrix(nodes: &[f64], b: f64, v: f64) -> Vec<Vec<f64>> {
    nodes
        .iter()
        .map(|&from| {
            let row: Vec<f64> = nodes.iter().map(|&to| gauss(to, b * from, v)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|w| w / s).collect()
        })
        .collect()
}

fn step(mu: &[f64], k: &[Vec<f64>]) -> Vec<f64> {
    let n = k[0].len();
    let mut out = vec![0.0; n];
    for (i, &m) in mu.iter().enumerate() {
        if m != 0.0 {
            for (o, &w) in out.iter_mut().zip(&k[i]) {
                *o += m * w;
            }
        }
    }
    out
}

/// Invariant law of the chain that applies `first` then `second`, by power iteration.
fn stationary(first: &[Vec<f64>], second: &[Vec<f64>]) -> Vec<f64> {
    let n = first.len();
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let next = step(&step(&mu, first), second);
        let diff = mu.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>();
        mu = next;
        if diff < 1e-15 {
            break;
        }
    }
    mu
}

/// Invariant joint distributions of the two deterministic sweeps on a discrete state space.
pub struct SweepOracle {
    pub nodes: Vec<f64>,
    /// `joint_12[i][j]`: probability of (nodes[i], nodes[j]) recorded after sweep (1,2).
    pub joint_12: Vec<Vec<f64>>,
    pub joint_21: Vec<Vec<f64>>,
}

impl SweepOracle {
    /// `n` nodes per axis on `[-half_width, half_width]` for the pair
    /// θ₁|θ₂ ~ N(b1·θ₂, v1), θ₂|θ₁ ~ N(b2·θ₁, v2).
    pub fn new(b1: f64, v1: f64, b2: f64, v2: f64, n: usize, half_width: f64) -> Self {
        let h = 2.0 * half_width / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * h).collect();
        let k1 = kernel_matrix(&nodes, b1, v1); // θ₂ index -> θ₁ index
        let k2 = kernel_matrix(&nodes, b2, v2); // θ₁ index -> θ₂ index

        // Sweep (1,2): θ₂ forms a chain y -> x -> y'; record (x, y') after each sweep.
        let mu_y = stationary(&k1, &k2);
        let mut joint_12 = vec![vec![0.0; n]; n];
        for (j, &my) in mu_y.iter().enumerate() {
            for i in 0..n {
                let px = my * k1[j][i];
                for (jp, cell) in joint_12[i].iter_mut().enumerate() {
                    *cell += px * k2[i][jp];
                }
            }
        }
        // Sweep (2,1): θ₁ forms a chain x -> y -> x'; record (x', y).
        let mu_x = stationary(&k2, &k1);
        let mut joint_21 = vec![vec![0.0; n]; n];
        for (i, &mx) in mu_x.iter().enumerate() {
            for j in 0..n {
                let py = mx * k2[i][j];
                for ip in 0..n {
                    joint_21[ip][j] += py * k1[j][ip];
                }
            }
        }
        SweepOracle { nodes, joint_12, joint_21 }
    }

    fn marginal(joint: &[Vec<f64>], axis: usize) -> Vec<f64> {
        let n = joint.len();
        (0..n)
            .map(|a| (0..n).map(|b| if axis == 0 { joint[a][b] } else { joint[b][a] }).sum())
            .collect()
    }

    /// Law of θ₁ − θ₂, indexed by `i − j + n − 1`.
    fn difference(joint: &[Vec<f64>]) -> Vec<f64> {
        let n = joint.len();
        let mut out = vec![0.0; 2 * n - 1];
        for (i, row) in joint.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                out[i + n - 1 - j] += p;
            }
        }
        out
    }

    fn cdf_gap(a: &[f64], b: &[f64]) -> f64 {
        let (mut ca, mut cb, mut gap) = (0.0, 0.0, 0.0f64);
        for (x, y) in a.iter().zip(b) {
            ca += x;
            cb += y;
            gap = gap.max((ca - cb).abs());
        }
        gap
    }

    /// Largest CDF gap between the two sweeps' laws of coordinate `axis`.
    pub fn coordinate_gap(&self, axis: usize) -> f64 {
        Self::cdf_gap(&Self::marginal(&self.joint_12, axis), &Self::marginal(&self.joint_21, axis))
    }

    /// Largest CDF gap between the two sweeps' laws of θ₁ − θ₂.
    pub fn difference_gap(&self) -> f64 {
        Self::cdf_gap(&Self::difference(&self.joint_12), &Self::difference(&self.joint_21))
    }

    /// Total variation distance between the two invariant joints.
    pub fn joint_tv(&self) -> f64 {
        0.5 * self
            .joint_12
            .iter()
            .flatten()
            .zip(self.joint_21.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Smallest mismatch, over a brute-force grid of bivariate normals (v1, v2, ρ), between the
/// normal's two conditionals and θ₁|θ₂ ~ N(b1·θ₂, c1), θ₂|θ₁ ~ N(b2·θ₁, c2).
/// The mismatch is the largest absolute error among the two slopes and two residual variances.
pub fn gaussian_consistency_min_mismatch(b1: f64, c1: f64, b2: f64, c2: f64) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    let steps = 160;
    for a in 1..=steps {
        let v1 = 8.0 * a as f64 / steps as f64;
        for b in 1..=steps {
            let v2 = 8.0 * b as f64 / steps as f64;
            for r in 1..200 {
                let rho = -1.0 + r as f64 / 100.0;
                let cov = rho * (v1 * v2).sqrt();
                let err = [
                    (cov / v2 - b1).abs(),
                    (v1 - cov * cov / v2 - c1).abs(),
                    (cov / v1 - b2).abs(),
                    (v2 - cov * cov / v1 - c2).abs(),
                ]
                .into_iter()
                .fold(0.0, f64::max);
                if err < best.0 {
                    best = (err, [v1, v2, rho]);
                }
            }
        }
    }
    best
}
