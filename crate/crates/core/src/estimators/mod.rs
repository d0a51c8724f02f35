//! Candidate fdr models. Three families cover the common approaches to
//! local fdr estimation:
//!
//! * [`EmpiricalNullSpline`](Family::EmpiricalNullSpline): Poisson-regression
//!   marginal on binned statistics with a normal null fitted to the centre.
//! * [`GrenanderNull`](Family::GrenanderNull): normal null scale from central
//!   statistics, Grenander (decreasing) density on the resulting p-values.
//! * [`PValueSmoother`](Family::PValueSmoother): λ-threshold π₀ estimate and
//!   a kernel density on transformed p-values.
//!
//! A [`ModelSpec`] is one point of the grid built by [`build_grid`].

mod empirical_null;
mod grenander;
mod grid;
mod pi0;
mod pvalue_family;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::FitError;
use crate::model::{to_pvalues, FdrFit, NullSpec};

pub use empirical_null::{fit_empirical_null, EmpiricalNullParams, Marginal, NullType};
pub use grenander::{fit_grenander, grenander_density, CutoffMethod, GrenanderDensity, GrenanderParams};
pub use grid::{build_grid, EmpiricalNullGrid, GrenanderGrid, GridConfig, PValueGrid};
pub use pi0::{estimate_pi0_lambda, pi0_at_lambda, pi0_lambda_curve, Pi0Method, LAMBDA_GRID};
pub use pvalue_family::{fit_pvalue_family, PValueParams, Transform};

/// Point estimate produced by a family before tail-area conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub pi0: f64,
    pub fdr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    EmpiricalNullSpline,
    GrenanderNull,
    PValueSmoother,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::EmpiricalNullSpline => "L",
            Family::GrenanderNull => "G",
            Family::PValueSmoother => "Q",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::EmpiricalNullSpline => "empirical_null_spline",
            Family::GrenanderNull => "grenander_null",
            Family::PValueSmoother => "pvalue_smoother",
        }
    }

    pub const ALL: [Family; 3] = [
        Family::EmpiricalNullSpline,
        Family::GrenanderNull,
        Family::PValueSmoother,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams {
    EmpiricalNullSpline(EmpiricalNullParams),
    GrenanderNull(GrenanderParams),
    PValueSmoother(PValueParams),
}

/// One grid point: a family and a complete parameter assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub params: FamilyParams,
}

impl ModelSpec {
    pub fn new(params: FamilyParams) -> Self {
        let table = params_table(&params);
        let body: Vec<String> = table.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let family = family_of(&params);
        Self {
            model_id: format!("{}:{}", family.tag(), body.join(",")),
            params,
        }
    }

    pub fn family(&self) -> Family {
        family_of(&self.params)
    }

    /// Parameters that distinguish grid points, as display strings.
    pub fn params_table(&self) -> BTreeMap<String, String> {
        params_table(&self.params)
    }
}

fn family_of(params: &FamilyParams) -> Family {
    match params {
        FamilyParams::EmpiricalNullSpline(_) => Family::EmpiricalNullSpline,
        FamilyParams::GrenanderNull(_) => Family::GrenanderNull,
        FamilyParams::PValueSmoother(_) => Family::PValueSmoother,
    }
}

fn params_table(params: &FamilyParams) -> BTreeMap<String, String> {
    let mut t = BTreeMap::new();
    match params {
        FamilyParams::EmpiricalNullSpline(p) => {
            t.insert("nulltype".into(), p.nulltype.as_str().into());
            t.insert("marginal".into(), p.marginal.as_str().into());
            t.insert("pct0".into(), p.pct0.to_string());
            t.insert("pct".into(), p.pct.to_string());
        }
        FamilyParams::GrenanderNull(p) => {
            t.insert("cutoff_method".into(), p.cutoff_method.as_str().into());
            if let CutoffMethod::Pct0 = p.cutoff_method {
                t.insert("pct0".into(), p.pct0.to_string());
            }
        }
        FamilyParams::PValueSmoother(p) => {
            t.insert("pi0_method".into(), p.pi0_method.as_str().into());
            t.insert("transf".into(), p.transf.as_str().into());
            t.insert("adj".into(), p.adj.to_string());
            if let Pi0Method::Smoother = p.pi0_method {
                t.insert("smooth_log_pi0".into(), p.smooth_log_pi0.to_string());
            }
        }
    }
    t
}

/// Fits one grid model to `u`. Numerical failures come back as [`FitError`]
/// carrying the model id; the caller decides whether to exclude the model.
pub fn fit_model(spec: &ModelSpec, u: &[f64], null: NullSpec) -> Result<FdrFit, FitError> {
    let fail = |reason: String| FitError::new(spec.model_id.clone(), reason);
    if u.len() < 2 {
        return Err(fail(format!("insufficient data: {} statistics", u.len())));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(fail("non-finite statistic".into()));
    }
    let estimate = match &spec.params {
        FamilyParams::EmpiricalNullSpline(p) => fit_empirical_null(u, p),
        FamilyParams::GrenanderNull(p) => fit_grenander(u, p),
        FamilyParams::PValueSmoother(p) => {
            let pv = to_pvalues(u, null).map_err(|e| e.to_string());
            pv.and_then(|pv| fit_pvalue_family(&pv, p))
        }
    }
    .map_err(&fail)?;
    if !estimate.pi0.is_finite() || estimate.fdr.iter().any(|f| !f.is_finite()) {
        return Err(fail("non-finite estimate".into()));
    }
    FdrFit::new(spec.model_id.clone(), u, estimate.pi0, estimate.fdr).map_err(|e| fail(e.to_string()))
}
