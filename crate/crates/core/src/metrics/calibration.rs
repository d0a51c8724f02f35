use serde::{Deserialize, Serialize};

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    /// Mean predicted fdr.
    pub x: f64,
    /// Observed fraction of true nulls.
    pub y: f64,
    pub n: usize,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub points: Vec<CalibrationPoint>,
}

/// 95% Wilson score interval for `successes / n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn point(sum_fdr: f64, nulls: usize, n: usize) -> CalibrationPoint {
    let (ci_lo, ci_hi) = wilson_interval(nulls, n);
    CalibrationPoint {
        x: sum_fdr / n as f64,
        y: nulls as f64 / n as f64,
        n,
        ci_lo,
        ci_hi,
    }
}

/// Bin edges `[0, 0.01]`, `interior` equal-width bins over `(0.01, 0.99]`,
/// then `(0.99, 1]`. Returns the upper edge of every bin.
pub fn local_bin_edges(interior: usize) -> Vec<f64> {
    let width = 0.98 / interior as f64;
    let mut edges = vec![0.01];
    edges.extend((1..interior).map(|k| 0.01 + k as f64 * width));
    edges.push(0.99);
    edges.push(1.0);
    edges
}

/// Index of the bin holding `v`: bins are closed on the right, the first
/// bin also includes 0.
pub fn local_bin_index(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v).min(edges.len() - 1)
}

/// Binned fdr calibration: per nonempty bin, mean predicted fdr against the
/// fraction of truly null hypotheses (`label == 0`).
pub fn local_calibration(fdr_hat: &[f64], labels: &[u8], interior_bins: usize) -> CalibrationCurve {
    assert_eq!(fdr_hat.len(), labels.len());
    let edges = local_bin_edges(interior_bins.max(1));
    let mut sums = vec![(0.0, 0usize, 0usize); edges.len()];
    for (&f, &l) in fdr_hat.iter().zip(labels) {
        let b = local_bin_index(&edges, f);
        sums[b].0 += f;
        sums[b].1 += usize::from(l == 0);
        sums[b].2 += 1;
    }
    CalibrationCurve {
        points: sums
            .into_iter()
            .filter(|s| s.2 > 0)
            .map(|(s, nulls, n)| point(s, nulls, n))
            .collect(),
    }
}

/// Global FDR calibration: each unique fdr value `c` (ascending) is a
/// threshold; x is the mean fdr over `{fdr ≤ c}` and y the fraction of nulls
/// in that set.
pub fn global_calibration(fdr_hat: &[f64], labels: &[u8]) -> CalibrationCurve {
    assert_eq!(fdr_hat.len(), labels.len());
    let mut order: Vec<usize> = (0..fdr_hat.len()).collect();
    order.sort_by(|&a, &b| fdr_hat[a].total_cmp(&fdr_hat[b]));
    let mut points = Vec::new();
    let (mut sum, mut nulls) = (0.0, 0usize);
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && fdr_hat[order[end]] == fdr_hat[order[start]] {
            sum += fdr_hat[order[end]];
            nulls += usize::from(labels[order[end]] == 0);
            end += 1;
        }
        points.push(point(sum, nulls, end));
        start = end;
    }
    CalibrationCurve { points }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_bin_all_null() {
        let c = local_calibration(&[0.42, 0.43, 0.44], &[0, 0, 0], 20);
        assert_eq!(c.points.len(), 1);
        assert!((c.points[0].x - 0.43).abs() < 1e-15);
        assert_eq!(c.points[0].y, 1.0);
    }

    #[test]
    fn bins_partition_unit_interval() {
        let edges = local_bin_edges(20);
        assert_eq!(edges.len(), 22);
        assert_eq!(local_bin_index(&edges, 0.0), 0);
        assert_eq!(local_bin_index(&edges, 0.01), 0);
        assert_eq!(local_bin_index(&edges, 0.0100001), 1);
        assert_eq!(local_bin_index(&edges, 0.99), 20);
        assert_eq!(local_bin_index(&edges, 0.995), 21);
        assert_eq!(local_bin_index(&edges, 1.0), 21);
        let values: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let c = local_calibration(&values, &vec![0; values.len()], 20);
        assert_eq!(c.points.iter().map(|p| p.n).sum::<usize>(), values.len());
    }

    #[test]
    fn wilson_handles_extremes() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.2 && hi < 0.35);
        let (lo, hi) = wilson_interval(10, 10);
        assert!(lo > 0.65 && hi == 1.0);
    }

    #[test]
    fn perfect_predictor_global_curve() {
        let labels = [1, 1, 0, 0, 1];
        let fdr: Vec<f64> = labels.iter().map(|&l| 1.0 - f64::from(l)).collect();
        let c = global_calibration(&fdr, &labels);
        assert_eq!(c.points.len(), 2);
        assert_eq!((c.points[0].x, c.points[0].y), (0.0, 0.0));
        assert_eq!((c.points[1].x, c.points[1].y), (0.4, 0.4));
    }
}
