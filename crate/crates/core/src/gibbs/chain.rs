use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConditionalSet, ScanOrder};
use crate::error::{IoiError, Result};
use crate::stats::ks_two_sample;

/// Minimum burn-in used when none is given.
pub const MIN_DEFAULT_BURN_IN: usize = 1000;

/// 5% of the run, at least 1000 draws, and always leaving at least one kept draw.
pub fn default_burn_in(iterations: usize) -> usize {
    (iterations / 20).max(MIN_DEFAULT_BURN_IN).min(iterations.saturating_sub(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub k: usize,
    /// Row-major `iterations × k` matrix of states after each iteration.
    pub draws: Vec<f64>,
    pub burn_in: usize,
    pub seed: u64,
    pub scan: ScanOrder,
}

impl ChainResult {
    pub fn iterations(&self) -> usize {
        self.draws.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.draws[i * self.k..(i + 1) * self.k]
    }

    /// Post-burn-in states.
    pub fn kept(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.k).skip(self.burn_in)
    }

    /// Post-burn-in values of coordinate `j` (zero-based).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.kept().map(|row| row[j]).collect()
    }

    pub fn mean(&self, j: usize) -> f64 {
        let c = self.column(j);
        c.iter().sum::<f64>() / c.len() as f64
    }

    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (self.column(a), self.column(b));
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (u, v) in x.iter().zip(&y) {
            sxy += (u - mx) * (v - my);
            sxx += (u - mx) * (u - mx);
            syy += (v - my) * (v - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    /// CSV with header `theta_1..theta_k`, one row per post-burn-in draw, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = (1..=self.k).map(|j| format!("theta_{j}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in self.kept() {
            let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Runs a Gibbs sampler; identical inputs give bit-identical draws.
pub fn gibbs_run(
    set: &ConditionalSet,
    scan: &ScanOrder,
    init: &[f64],
    iterations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ChainResult> {
    let k = set.k();
    if init.len() != k || init.iter().any(|v| !v.is_finite()) {
        return Err(IoiError::Validation(format!("init must hold {k} finite values, got {init:?}")));
    }
    if iterations <= burn_in {
        return Err(IoiError::Validation(format!(
            "iterations ({iterations}) must exceed burn-in ({burn_in})"
        )));
    }
    scan.validate(k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scan_rng = match scan {
        ScanOrder::Random(s) => Some(ChaCha8Rng::seed_from_u64(*s)),
        ScanOrder::Sweep(_) => None,
    };
    let mut state = init.to_vec();
    let mut others = vec![0.0; k - 1];
    let mut draws = Vec::with_capacity(iterations * k);
    let mut order = vec![0usize; k];

    for it in 0..iterations {
        match (scan, scan_rng.as_mut()) {
            (ScanOrder::Sweep(p), _) => order.iter_mut().zip(p).for_each(|(o, &i)| *o = i - 1),
            (ScanOrder::Random(_), Some(r)) => order.iter_mut().for_each(|o| *o = r.random_range(0..k)),
            (ScanOrder::Random(_), None) => unreachable!(),
        }
        for &j in &order {
            let mut slot = 0;
            for (c, &v) in state.iter().enumerate() {
                if c != j {
                    others[slot] = v;
                    slot += 1;
                }
            }
            let d = set.conditional(j, &others).map_err(|e| IoiError::ChainAborted {
                iteration: it,
                reason: format!("kernel {} failed: {e}", j + 1),
            })?;
            let x = d.draw(&mut rng);
            if !x.is_finite() {
                return Err(IoiError::ChainAborted {
                    iteration: it,
                    reason: format!("kernel {} produced a non-finite draw", j + 1),
                });
            }
            state[j] = x;
        }
        draws.extend_from_slice(&state);
    }

    Ok(ChainResult {
        k,
        draws,
        burn_in,
        seed,
        scan: scan.clone(),
    })
}

/// Pairwise KS distances between chains run under different scan orders.
///
/// Distances are computed for each coordinate and for each pairwise difference
/// `θᵢ − θⱼ`; the latter see changes in the dependence between coordinates that
/// leave every coordinate's own marginal unchanged. `ks` holds the largest
/// distance over all projections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSensitivity {
    pub scans: Vec<String>,
    pub projections: Vec<String>,
    /// `per_projection[p][a][b]`: KS distance between scans `a` and `b` on projection `p`.
    pub per_projection: Vec<Vec<Vec<f64>>>,
    pub ks: Vec<Vec<f64>>,
}

impl ScanSensitivity {
    pub fn max_ks(&self) -> f64 {
        self.ks.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Largest distance over coordinate projections only.
    pub fn max_coordinate_ks(&self, k: usize) -> f64 {
        self.per_projection[..k].iter().flatten().flatten().copied().fold(0.0, f64::max)
    }
}

fn projections(chain: &ChainResult) -> Vec<Vec<f64>> {
    let k = chain.k;
    let mut out: Vec<Vec<f64>> = (0..k).map(|j| chain.column(j)).collect();
    for a in 0..k {
        for b in a + 1..k {
            out.push(chain.kept().map(|r| r[a] - r[b]).collect());
        }
    }
    out
}

pub fn scan_sensitivity(
    set: &ConditionalSet,
    scans: &[ScanOrder],
    init: &[f64],
    iterations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ScanSensitivity> {
    if scans.len() < 2 {
        return Err(IoiError::Validation("scan sensitivity needs at least 2 scan orders".into()));
    }
    let chains = scans
        .par_iter()
        .map(|scan| gibbs_run(set, scan, init, iterations, burn_in, seed))
        .collect::<Result<Vec<_>>>()?;
    let projected: Vec<Vec<Vec<f64>>> = chains.par_iter().map(projections).collect();

    let k = set.k();
    let mut names: Vec<String> = (1..=k).map(|j| format!("theta_{j}")).collect();
    for a in 1..=k {
        for b in a + 1..=k {
            names.push(format!("theta_{a} - theta_{b}"));
        }
    }
    let m = scans.len();
    let per_projection: Vec<Vec<Vec<f64>>> = (0..names.len())
        .into_par_iter()
        .map(|p| {
            let mut mat = vec![vec![0.0; m]; m];
            for a in 0..m {
                for b in a + 1..m {
                    let d = ks_two_sample(&projected[a][p], &projected[b][p]);
                    mat[a][b] = d;
                    mat[b][a] = d;
                }
            }
            mat
        })
        .collect();
    let ks = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| per_projection.iter().map(|mat| mat[a][b]).fold(0.0, f64::max))
                .collect()
        })
        .collect();
    Ok(ScanSensitivity {
        scans: scans.iter().map(ScanOrder::label).collect(),
        projections: names,
        per_projection,
        ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Density1D;
    use crate::gibbs::MethodTag;

    fn linear_pair(b1: f64, v1: f64, b2: f64, v2: f64) -> ConditionalSet {
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

    #[test]
    fn independent_chain_is_uncorrelated() {
        let set = linear_pair(0.0, 1.0, 0.0, 1.0);
        let chain = gibbs_run(&set, &ScanOrder::Sweep(vec![1, 2]), &[0.0, 0.0], 50_000, 1000, 3).unwrap();
        assert!(chain.correlation(0, 1).abs() < 0.02);
        assert_eq!(chain.iterations(), 50_000);
    }

    #[test]
    fn deterministic_given_seed() {
        let set = linear_pair(0.7, 0.51, 0.7, 0.51);
        let scan = ScanOrder::Random(9);
        let a = gibbs_run(&set, &scan, &[1.0, -1.0], 2000, 100, 17).unwrap();
        let b = gibbs_run(&set, &scan, &[1.0, -1.0], 2000, 100, 17).unwrap();
        assert!(a.draws.iter().zip(&b.draws).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn csv_layout() {
        let set = linear_pair(0.0, 1.0, 0.0, 1.0);
        let chain = gibbs_run(&set, &ScanOrder::Sweep(vec![2, 1]), &[0.0, 0.0], 5, 2, 1).unwrap();
        let csv = chain.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "theta_1,theta_2");
        assert_eq!(lines.len(), 4);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn argument_validation() {
        let set = linear_pair(0.0, 1.0, 0.0, 1.0);
        let sweep = ScanOrder::Sweep(vec![1, 2]);
        assert!(gibbs_run(&set, &sweep, &[0.0], 10, 1, 1).is_err());
        assert!(gibbs_run(&set, &sweep, &[0.0, f64::NAN], 10, 1, 1).is_err());
        assert!(gibbs_run(&set, &sweep, &[0.0, 0.0], 10, 10, 1).is_err());
        assert!(gibbs_run(&set, &ScanOrder::Sweep(vec![1, 1]), &[0.0, 0.0], 10, 1, 1).is_err());
        assert!(gibbs_run(&set, &ScanOrder::Sweep(vec![1, 3]), &[0.0, 0.0], 10, 1, 1).is_err());
    }

    #[test]
    fn failing_kernel_aborts_with_iteration() {
        let set = ConditionalSet::from_fns(
            vec![
                Box::new(|o: &[f64]| Density1D::normal(o[0], 1.0)) as Box<dyn Fn(&[f64]) -> Result<Density1D> + Send + Sync>,
                Box::new(|o: &[f64]| {
                    if o[0] > 2.0 {
                        Density1D::normal(0.0, -1.0)
                    } else {
                        Density1D::normal(0.0, 1.0)
                    }
                }),
            ],
            vec![MethodTag::Other; 2],
        )
        .unwrap();
        let err = gibbs_run(&set, &ScanOrder::Sweep(vec![1, 2]), &[0.0, 0.0], 100_000, 0, 2).unwrap_err();
        assert!(matches!(err, IoiError::ChainAborted { .. }));
    }

    #[test]
    fn self_comparison_is_zero() {
        let set = linear_pair(0.5, 0.75, 0.5, 0.75);
        let scan = ScanOrder::Sweep(vec![1, 2]);
        let s = scan_sensitivity(&set, &[scan.clone(), scan], &[0.0, 0.0], 5000, 500, 4).unwrap();
        assert_eq!(s.max_ks(), 0.0);
        assert_eq!(s.ks.len(), 2);
        assert!(scan_sensitivity(&set, &[ScanOrder::Random(1)], &[0.0, 0.0], 100, 10, 1).is_err());
    }

    #[test]
    fn default_burn_in_rule() {
        assert_eq!(default_burn_in(200_000), 10_000);
        assert_eq!(default_burn_in(5000), 1000);
        assert_eq!(default_burn_in(500), 499);
    }
}
