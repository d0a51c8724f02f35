use serde::{Deserialize, Serialize};

use super::{
    CutoffMethod, EmpiricalNullParams, FamilyParams, GrenanderParams, Marginal, ModelSpec,
    NullType, PValueParams, Pi0Method, Transform,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmpiricalNullGrid {
    pub enabled: bool,
    pub nulltype: Vec<NullType>,
    pub marginal: Vec<Marginal>,
    pub pct0: Vec<f64>,
    pub pct: Vec<f64>,
    pub bins: usize,
    pub spline_df: usize,
    pub poly_degree: usize,
}

impl Default for EmpiricalNullGrid {
    fn default() -> Self {
        Self {
            enabled: true,
            nulltype: vec![NullType::Mle, NullType::CentralMatching],
            marginal: vec![Marginal::Spline, Marginal::Polynomial],
            pct0: vec![0.0, 0.075, 0.15, 0.225, 0.3],
            pct: vec![0.0, 0.1, 0.2, 0.3],
            bins: 120,
            spline_df: 7,
            poly_degree: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrenanderGrid {
    pub enabled: bool,
    pub cutoff_method: Vec<CutoffMethod>,
    /// Only crossed with `cutoff_method = "pct0"`.
    pub pct0: Vec<f64>,
    pub fndr_iterations: usize,
}

impl Default for GrenanderGrid {
    fn default() -> Self {
        Self {
            enabled: true,
            cutoff_method: vec![CutoffMethod::Fndr, CutoffMethod::Pct0],
            pct0: vec![0.4, 0.55, 0.7, 0.85, 1.0],
            fndr_iterations: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PValueGrid {
    pub enabled: bool,
    pub pi0_method: Vec<Pi0Method>,
    pub transf: Vec<Transform>,
    pub adj: Vec<f64>,
    /// Only crossed with `pi0_method = "smoother"`.
    pub smooth_log_pi0: Vec<bool>,
    pub bootstrap_reps: usize,
    pub bootstrap_seed: u64,
}

impl Default for PValueGrid {
    fn default() -> Self {
        Self {
            enabled: true,
            pi0_method: vec![Pi0Method::Smoother, Pi0Method::Bootstrap],
            transf: vec![Transform::Probit, Transform::Logit],
            adj: vec![0.5, 1.0, 1.5, 2.0],
            smooth_log_pi0: vec![true, false],
            bootstrap_reps: 100,
            bootstrap_seed: 0,
        }
    }
}

/// Per-family parameter lists; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub empirical_null: EmpiricalNullGrid,
    pub grenander: GrenanderGrid,
    pub pvalue: PValueGrid,
}

fn dedup<T: PartialEq + Copy>(values: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn nonempty<T>(values: &[T], name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(format!("parameter list `{name}` is empty")));
    }
    Ok(())
}

fn in_range(values: &[f64], name: &str, ok: impl Fn(f64) -> bool) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| !ok(v)) {
        return Err(Error::config(format!("`{name}` value {v} out of range")));
    }
    Ok(())
}

impl GridConfig {
    /// Grid restricted to the given families, default values otherwise.
    pub fn only(families: &[super::Family]) -> Self {
        use super::Family::*;
        let mut cfg = Self::default();
        cfg.empirical_null.enabled = families.contains(&EmpiricalNullSpline);
        cfg.grenander.enabled = families.contains(&GrenanderNull);
        cfg.pvalue.enabled = families.contains(&PValueSmoother);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.empirical_null;
        if l.enabled {
            nonempty(&l.nulltype, "empirical_null.nulltype")?;
            nonempty(&l.marginal, "empirical_null.marginal")?;
            nonempty(&l.pct0, "empirical_null.pct0")?;
            nonempty(&l.pct, "empirical_null.pct")?;
            in_range(&l.pct0, "empirical_null.pct0", |v| (0.0..0.5).contains(&v))?;
            in_range(&l.pct, "empirical_null.pct", |v| (0.0..1.0).contains(&v))?;
            if l.bins < 10 || l.spline_df < 1 || l.poly_degree < 1 {
                return Err(Error::config("empirical_null bins/spline_df/poly_degree too small"));
            }
        }
        let g = &self.grenander;
        if g.enabled {
            nonempty(&g.cutoff_method, "grenander.cutoff_method")?;
            if g.cutoff_method.contains(&CutoffMethod::Pct0) {
                nonempty(&g.pct0, "grenander.pct0")?;
            }
            in_range(&g.pct0, "grenander.pct0", |v| v > 0.0 && v <= 1.0)?;
            if g.fndr_iterations == 0 {
                return Err(Error::config("grenander.fndr_iterations must be positive"));
            }
        }
        let q = &self.pvalue;
        if q.enabled {
            nonempty(&q.pi0_method, "pvalue.pi0_method")?;
            nonempty(&q.transf, "pvalue.transf")?;
            nonempty(&q.adj, "pvalue.adj")?;
            if q.pi0_method.contains(&Pi0Method::Smoother) {
                nonempty(&q.smooth_log_pi0, "pvalue.smooth_log_pi0")?;
            }
            in_range(&q.adj, "pvalue.adj", |v| v > 0.0 && v.is_finite())?;
            if q.bootstrap_reps == 0 {
                return Err(Error::config("pvalue.bootstrap_reps must be positive"));
            }
        }
        if !(l.enabled || g.enabled || q.enabled) {
            return Err(Error::config("no estimator family enabled"));
        }
        Ok(())
    }
}

/// Expands the configuration into model specs ordered by `model_id`.
pub fn build_grid(cfg: &GridConfig) -> Result<Vec<ModelSpec>> {
    cfg.validate()?;
    let mut grid = Vec::new();
    let l = &cfg.empirical_null;
    if l.enabled {
        for &nulltype in &dedup(&l.nulltype) {
            for &marginal in &dedup(&l.marginal) {
                for &pct0 in &dedup(&l.pct0) {
                    for &pct in &dedup(&l.pct) {
                        grid.push(ModelSpec::new(FamilyParams::EmpiricalNullSpline(EmpiricalNullParams {
                            nulltype,
                            marginal,
                            pct0,
                            pct,
                            bins: l.bins,
                            spline_df: l.spline_df,
                            poly_degree: l.poly_degree,
                        })));
                    }
                }
            }
        }
    }
    let g = &cfg.grenander;
    if g.enabled {
        for &cutoff_method in &dedup(&g.cutoff_method) {
            let pct0s = match cutoff_method {
                CutoffMethod::Fndr => vec![GrenanderParams::default().pct0],
                CutoffMethod::Pct0 => dedup(&g.pct0),
            };
            for pct0 in pct0s {
                grid.push(ModelSpec::new(FamilyParams::GrenanderNull(GrenanderParams {
                    cutoff_method,
                    pct0,
                    fndr_iterations: g.fndr_iterations,
                })));
            }
        }
    }
    let q = &cfg.pvalue;
    if q.enabled {
        for &pi0_method in &dedup(&q.pi0_method) {
            let logs = match pi0_method {
                Pi0Method::Smoother => dedup(&q.smooth_log_pi0),
                Pi0Method::Bootstrap => vec![false],
            };
            for &transf in &dedup(&q.transf) {
                for &adj in &dedup(&q.adj) {
                    for &smooth_log_pi0 in &logs {
                        grid.push(ModelSpec::new(FamilyParams::PValueSmoother(PValueParams {
                            pi0_method,
                            transf,
                            adj,
                            smooth_log_pi0,
                            bootstrap_reps: q.bootstrap_reps,
                            bootstrap_seed: q.bootstrap_seed,
                        })));
                    }
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::config("model grid is empty"));
    }
    grid.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    if grid.windows(2).any(|w| w[0].model_id == w[1].model_id) {
        return Err(Error::config("duplicate model ids in grid"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::super::Family;
    use super::*;

    #[test]
    fn default_grid_counts() {
        // L: 2·2·5·4 = 80; G: 1 + 5 = 6; Q: smoother 2·4·2 = 16, bootstrap 2·4 = 8.
        let grid = build_grid(&GridConfig::default()).unwrap();
        let count = |f: Family| grid.iter().filter(|m| m.family() == f).count();
        assert_eq!(count(Family::EmpiricalNullSpline), 80);
        assert_eq!(count(Family::GrenanderNull), 6);
        assert_eq!(count(Family::PValueSmoother), 24);
        assert_eq!(grid.len(), 110);
    }

    #[test]
    fn single_point_grid() {
        let mut cfg = GridConfig::only(&[Family::EmpiricalNullSpline]);
        cfg.empirical_null.nulltype = vec![NullType::Mle];
        cfg.empirical_null.marginal = vec![Marginal::Spline];
        cfg.empirical_null.pct0 = vec![0.2];
        cfg.empirical_null.pct = vec![0.0];
        assert_eq!(build_grid(&cfg).unwrap().len(), 1);
    }

    #[test]
    fn duplicate_values_are_collapsed() {
        let mut cfg = GridConfig::only(&[Family::GrenanderNull]);
        cfg.grenander.pct0 = vec![0.5, 0.5, 0.9, 0.5];
        assert_eq!(build_grid(&cfg).unwrap().len(), 3);
    }

    #[test]
    fn empty_and_invalid_configs() {
        assert!(matches!(build_grid(&GridConfig::only(&[])), Err(Error::Config(_))));
        let mut cfg = GridConfig::default();
        cfg.pvalue.adj = vec![];
        assert!(build_grid(&cfg).is_err());
        let mut cfg = GridConfig::default();
        cfg.empirical_null.pct0 = vec![0.7];
        assert!(build_grid(&cfg).is_err());
    }

    #[test]
    fn deterministic_ordering() {
        let a: Vec<String> = build_grid(&GridConfig::default()).unwrap().into_iter().map(|m| m.model_id).collect();
        let b: Vec<String> = build_grid(&GridConfig::default()).unwrap().into_iter().map(|m| m.model_id).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(a, sorted);
    }
}
