//! Gaussian kernel density estimate, binned onto a regular grid and read off
//! by linear interpolation.

use super::{quantile_sorted, sample_sd, sorted_copy};

const GRID: usize = 1024;
const CUT: f64 = 3.0;
const KERNEL_REACH: f64 = 8.0;

/// Silverman's rule of thumb `0.9 min(sd, IQR/1.34) n^(-1/5)`, with the
/// usual fallbacks when the spread is degenerate.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let sorted = sorted_copy(x);
    let sd = sample_sd(x);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut lo = sd.min(iqr / 1.34);
    if !(lo > 0.0) {
        lo = sd;
    }
    if !(lo > 0.0) {
        lo = sorted[0].abs();
    }
    if !(lo > 0.0) {
        lo = 1.0;
    }
    0.9 * lo * (x.len() as f64).powf(-0.2)
}

#[derive(Debug, Clone)]
pub struct BinnedKde {
    start: f64,
    step: f64,
    density: Vec<f64>,
}

impl BinnedKde {
    pub fn fit(x: &[f64], bandwidth: f64) -> Self {
        assert!(bandwidth > 0.0 && !x.is_empty());
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min) - CUT * bandwidth;
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) + CUT * bandwidth;
        let step = (hi - lo) / (GRID - 1) as f64;
        let mut weights = vec![0.0; GRID];
        for &v in x {
            let pos = (v - lo) / step;
            let k = (pos.floor() as usize).min(GRID - 2);
            let frac = pos - k as f64;
            weights[k] += 1.0 - frac;
            weights[k + 1] += frac;
        }
        let reach = ((KERNEL_REACH * bandwidth / step).ceil() as usize).min(GRID - 1);
        let norm = 1.0 / (x.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        let kernel: Vec<f64> = (0..=reach)
            .map(|d| {
                let z = d as f64 * step / bandwidth;
                norm * (-0.5 * z * z).exp()
            })
            .collect();
        let mut density = vec![0.0; GRID];
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = k.saturating_sub(reach);
            let b = (k + reach).min(GRID - 1);
            for (j, dens) in density.iter_mut().enumerate().take(b + 1).skip(a) {
                *dens += w * kernel[k.abs_diff(j)];
            }
        }
        Self {
            start: lo,
            step,
            density,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.start) / self.step;
        if pos <= 0.0 {
            return self.density[0];
        }
        if pos >= (GRID - 1) as f64 {
            return self.density[GRID - 1];
        }
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        self.density[k] * (1.0 - frac) + self.density[k + 1] * frac
    }
}
