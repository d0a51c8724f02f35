use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::seed::{rng_for, Stream};
use crate::{Error, NullSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Symmetric,
    Asymmetric,
    Correlated,
}

/// Within-block correlation of the expression coordinates. Blocks are
/// independent of each other; every coordinate has unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case", deny_unknown_fields)]
pub enum Covariance {
    /// Every pair in a block has correlation `rho` (`0 ≤ rho < 1`).
    Equicorrelated { rho: f64, block_size: usize },
    /// Correlation `rho^|i-j|` within a block (`|rho| < 1`).
    Ar1 { rho: f64, block_size: usize },
}

impl Covariance {
    fn block_size(&self) -> usize {
        match *self {
            Covariance::Equicorrelated { block_size, .. } | Covariance::Ar1 { block_size, .. } => block_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size() == 0 {
            return Err(Error::config("covariance block_size must be positive"));
        }
        match *self {
            Covariance::Equicorrelated { rho, .. } if !(0.0..1.0).contains(&rho) => Err(Error::config(format!(
                "equicorrelated rho must lie in [0, 1), got {rho}"
            ))),
            Covariance::Ar1 { rho, .. } if !(rho.abs() < 1.0) => Err(Error::config(format!(
                "AR(1) rho must satisfy |rho| < 1, got {rho}"
            ))),
            _ => Ok(()),
        }
    }

    /// One draw of a zero-mean, unit-variance vector of length `n`.
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let len = self.block_size().min(n - out.len());
            match *self {
                Covariance::Equicorrelated { rho, .. } => {
                    let shared: f64 = rng.sample(StandardNormal);
                    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                    for _ in 0..len {
                        let z: f64 = rng.sample(StandardNormal);
                        out.push(a * shared + b * z);
                    }
                }
                Covariance::Ar1 { rho, .. } => {
                    let innov = (1.0 - rho * rho).sqrt();
                    let mut prev: f64 = rng.sample(StandardNormal);
                    out.push(prev);
                    for _ in 1..len {
                        let z: f64 = rng.sample(StandardNormal);
                        prev = rho * prev + innov * z;
                        out.push(prev);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelatedSpec {
    pub covariance: Covariance,
    pub n_a: usize,
    pub n_b: usize,
    pub offset_mean: f64,
    pub offset_sd: f64,
    /// Probability that an alternative coordinate is shifted downwards.
    pub p_negative: f64,
}

impl Default for CorrelatedSpec {
    fn default() -> Self {
        Self {
            covariance: Covariance::Equicorrelated {
                rho: 0.3,
                block_size: 100,
            },
            n_a: 10,
            n_b: 10,
            offset_mean: 2.0,
            offset_sd: 0.5,
            p_negative: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Number of hypotheses.
    pub size: usize,
    pub pi0: f64,
    #[serde(default)]
    pub correlated: CorrelatedSpec,
}

impl ScenarioSpec {
    pub fn symmetric() -> Self {
        Self::of_kind(ScenarioKind::Symmetric)
    }

    pub fn asymmetric() -> Self {
        Self::of_kind(ScenarioKind::Asymmetric)
    }

    pub fn correlated() -> Self {
        Self::of_kind(ScenarioKind::Correlated)
    }

    /// Default setting for each kind: 1000 hypotheses (1311 when
    /// correlated) with 80% nulls.
    pub fn of_kind(kind: ScenarioKind) -> Self {
        Self {
            kind,
            size: if kind == ScenarioKind::Correlated { 1311 } else { 1000 },
            pi0: 0.8,
            correlated: CorrelatedSpec::default(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "symmetric" => Some(Self::symmetric()),
            "asymmetric" => Some(Self::asymmetric()),
            "correlated" => Some(Self::correlated()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::config("scenario size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.pi0) {
            return Err(Error::config(format!("pi0 must lie in [0, 1], got {}", self.pi0)));
        }
        if self.kind == ScenarioKind::Correlated {
            let c = &self.correlated;
            c.covariance.validate()?;
            if c.n_a < 2 || c.n_b < 2 {
                return Err(Error::config("each group needs at least two samples"));
            }
            if !(c.offset_sd >= 0.0 && c.offset_mean.is_finite()) {
                return Err(Error::config("offset distribution is invalid"));
            }
            if !(0.0..=1.0).contains(&c.p_negative) {
                return Err(Error::config("p_negative must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Null used to turn statistics into p-values: standard normal, or t with
    /// `n_a + n_b − 2` degrees of freedom for the correlated scenario.
    pub fn null(&self) -> NullSpec {
        match self.kind {
            ScenarioKind::Correlated => NullSpec::StudentT {
                df: (self.correlated.n_a + self.correlated.n_b - 2) as f64,
            },
            _ => NullSpec::StandardNormal,
        }
    }
}

/// One simulated set of hypotheses. `fdr_true` is absent when the scenario
/// has no closed-form marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioData {
    pub u: Vec<f64>,
    pub labels: Vec<u8>,
    pub fdr_true: Option<Vec<f64>>,
    pub seed: u64,
}

/// Alternative density: a mixture of uniforms `(weight, lo, hi)`.
struct UniformMixture(&'static [(f64, f64, f64)]);

const SYMMETRIC_ALT: UniformMixture = UniformMixture(&[(0.5, -4.0, -1.33), (0.5, 1.33, 4.0)]);
const ASYMMETRIC_ALT: UniformMixture = UniformMixture(&[(1.0 / 3.0, -6.0, -2.5), (2.0 / 3.0, 1.5, 4.5)]);

impl UniformMixture {
    fn density(&self, u: f64) -> f64 {
        self.0
            .iter()
            .filter(|(_, lo, hi)| u >= *lo && u <= *hi)
            .map(|(w, lo, hi)| w / (hi - lo))
            .sum()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut pick: f64 = rng.random();
        for &(w, lo, hi) in self.0 {
            if pick < w {
                return rng.random_range(lo..hi);
            }
            pick -= w;
        }
        let &(_, lo, hi) = self.0.last().expect("nonempty mixture");
        rng.random_range(lo..hi)
    }
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn gen_uniform_mixture(spec: &ScenarioSpec, alt: &UniformMixture, seed: u64) -> ScenarioData {
    let mut rng = rng_for(seed, Stream::SyntheticData, 0);
    let mut u = Vec::with_capacity(spec.size);
    let mut labels = Vec::with_capacity(spec.size);
    for _ in 0..spec.size {
        let alternative = rng.random::<f64>() >= spec.pi0;
        labels.push(u8::from(alternative));
        u.push(if alternative {
            alt.sample(&mut rng)
        } else {
            rng.sample(StandardNormal)
        });
    }
    let fdr_true = u
        .iter()
        .map(|&x| {
            let f0 = spec.pi0 * std_normal_pdf(x);
            let f1 = (1.0 - spec.pi0) * alt.density(x);
            if f0 + f1 > 0.0 {
                f0 / (f0 + f1)
            } else {
                1.0
            }
        })
        .collect();
    ScenarioData {
        u,
        labels,
        fdr_true: Some(fdr_true),
        seed,
    }
}

fn expect_kind(spec: &ScenarioSpec, kind: ScenarioKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::config(format!("expected a {kind:?} scenario, got {:?}", spec.kind)));
    }
    Ok(())
}

/// Normal nulls; alternatives uniform on `±[1.33, 4]`.
pub fn gen_symmetric(spec: &ScenarioSpec, seed: u64) -> Result<ScenarioData> {
    expect_kind(spec, ScenarioKind::Symmetric)?;
    Ok(gen_uniform_mixture(spec, &SYMMETRIC_ALT, seed))
}

/// Normal nulls; alternatives uniform on `[-6, -2.5]` (1/3) or `[1.5, 4.5]` (2/3).
pub fn gen_asymmetric(spec: &ScenarioSpec, seed: u64) -> Result<ScenarioData> {
    expect_kind(spec, ScenarioKind::Asymmetric)?;
    Ok(gen_uniform_mixture(spec, &ASYMMETRIC_ALT, seed))
}

/// Welch two-sample statistic `(x̄_B − x̄_A) / sqrt(s²_A/n_A + s²_B/n_B)`.
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var / n)
    };
    let (ma, sa) = stats(a);
    let (mb, sb) = stats(b);
    (mb - ma) / (sa + sb).sqrt()
}

/// Two groups of correlated expression vectors; group B is shifted on the
/// alternative coordinates; statistics are per-coordinate Welch t.
pub fn gen_correlated(spec: &ScenarioSpec, seed: u64) -> Result<ScenarioData> {
    expect_kind(spec, ScenarioKind::Correlated)?;
    let c = &spec.correlated;
    let n = spec.size;
    let mut rng = rng_for(seed, Stream::SyntheticData, 0);
    let offset = Normal::new(c.offset_mean, c.offset_sd).map_err(|e| Error::config(e.to_string()))?;
    let mut labels = Vec::with_capacity(n);
    let mut shift = Vec::with_capacity(n);
    for _ in 0..n {
        let alternative = rng.random::<f64>() >= spec.pi0;
        labels.push(u8::from(alternative));
        if alternative {
            let delta = offset.sample(&mut rng);
            let sign = if rng.random::<f64>() < c.p_negative { -1.0 } else { 1.0 };
            shift.push(sign * delta);
        } else {
            shift.push(0.0);
        }
    }
    let group_a: Vec<Vec<f64>> = (0..c.n_a).map(|_| c.covariance.sample(n, &mut rng)).collect();
    let group_b: Vec<Vec<f64>> = (0..c.n_b)
        .map(|_| {
            let mut x = c.covariance.sample(n, &mut rng);
            for (v, s) in x.iter_mut().zip(&shift) {
                *v += s;
            }
            x
        })
        .collect();
    let mut u = Vec::with_capacity(n);
    let (mut col_a, mut col_b) = (vec![0.0; c.n_a], vec![0.0; c.n_b]);
    for i in 0..n {
        for (dst, row) in col_a.iter_mut().zip(&group_a) {
            *dst = row[i];
        }
        for (dst, row) in col_b.iter_mut().zip(&group_b) {
            *dst = row[i];
        }
        let t = welch_t(&col_a, &col_b);
        if !t.is_finite() {
            return Err(Error::input(format!("coordinate {i} has zero within-group variance")));
        }
        u.push(t);
    }
    Ok(ScenarioData {
        u,
        labels,
        fdr_true: None,
        seed,
    })
}

/// Dispatches on the scenario kind.
pub fn generate(spec: &ScenarioSpec, seed: u64) -> Result<ScenarioData> {
    match spec.kind {
        ScenarioKind::Symmetric => gen_symmetric(spec, seed),
        ScenarioKind::Asymmetric => gen_asymmetric(spec, seed),
        ScenarioKind::Correlated => gen_correlated(spec, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fdr_is_one_outside_alternative_support() {
        let data = gen_symmetric(&ScenarioSpec::symmetric(), 4).unwrap();
        let truth = data.fdr_true.unwrap();
        for (x, f) in data.u.iter().zip(&truth) {
            if x.abs() < 1.33 || x.abs() > 4.0 {
                assert_eq!(*f, 1.0);
            } else {
                assert!(*f < 1.0);
            }
        }
    }

    #[test]
    fn welch_hand_instance() {
        // means 2 and 5; variances 1 and 4 with n = 3 each.
        let t = welch_t(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((t - 3.0 / (5.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn wrong_kind_and_bad_covariance_rejected() {
        assert!(gen_symmetric(&ScenarioSpec::asymmetric(), 1).is_err());
        let mut spec = ScenarioSpec::correlated();
        spec.correlated.covariance = Covariance::Ar1 {
            rho: 1.0,
            block_size: 5,
        };
        assert!(matches!(gen_correlated(&spec, 1), Err(Error::Config(_))));
    }

    #[test]
    fn equal_seeds_are_identical() {
        let spec = ScenarioSpec::correlated();
        assert_eq!(gen_correlated(&spec, 9).unwrap(), gen_correlated(&spec, 9).unwrap());
    }
}
