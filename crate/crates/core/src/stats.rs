//! Kolmogorov–Smirnov distances used for diagnostics.

use crate::density::Density1D;

/// Mesh size used when comparing two analytic distribution functions.
const KS_MESH: usize = 20_001;

/// Sup-distance between the CDFs of two densities, evaluated on a dense mesh over the
/// union of their supports plus every grid node.
pub fn ks_distance(a: &Density1D, b: &Density1D) -> f64 {
    let (alo, ahi) = a.support();
    let (blo, bhi) = b.support();
    let (lo, hi) = (alo.min(blo), ahi.max(bhi));
    let h = (hi - lo) / (KS_MESH - 1) as f64;
    let mut d = (0..KS_MESH)
        .map(|i| {
            let t = lo + i as f64 * h;
            (a.cdf(t) - b.cdf(t)).abs()
        })
        .fold(0.0, f64::max);
    for g in [a, b].into_iter().filter_map(Density1D::as_grid) {
        for i in 0..g.n_points() {
            let t = g.node(i);
            d = d.max((a.cdf(t) - b.cdf(t)).abs());
        }
    }
    d
}

/// One-sample statistic `sup |F_n(t) - F(t)|`.
pub fn ks_against_cdf(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample statistic between the empirical distributions of `a` and `b`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
