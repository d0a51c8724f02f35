use serde::{Deserialize, Serialize};

use crate::error::{Error, FitError, Result, Stage};
use crate::estimators::Family;
use crate::generator::EmFit;
use crate::model::{local_to_tail_fdr, FdrFit};

use super::scoring::ObjectiveEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedModel {
    pub model_id: String,
    pub family: Option<Family>,
    pub weight: f64,
    /// Synthetic-data objective, when the model was scored.
    pub l_hat: Option<f64>,
}

/// Weighted combination of component fits on the observed statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub selected: Vec<SelectedModel>,
    pub pi0: f64,
    pub fdr: Vec<f64>,
    pub tail_fdr: Vec<f64>,
    /// Per-model synthetic-data scores (empty for unscored variants).
    pub objectives: Vec<ObjectiveEstimate>,
    /// Selected models that failed on the observed statistics.
    pub dropped: Vec<FitError>,
    /// Generator fit behind the synthetic data, when one was used.
    pub generator: Option<EmFit>,
}

/// Loss-based weights `(1 − L̂) / Σ (1 − L̂)`. Falls back to equal weights
/// when every loss is 1.
pub fn loss_weights(losses: &[f64]) -> Vec<f64> {
    let total: f64 = losses.iter().map(|l| 1.0 - l).sum();
    if total > 0.0 {
        losses.iter().map(|l| (1.0 - l) / total).collect()
    } else {
        vec![1.0 / losses.len() as f64; losses.len()]
    }
}

/// Convex combination of component fits. Each output coordinate is kept
/// inside the componentwise `[min, max]` so rounding can never push it out.
pub fn combine(u: &[f64], fits: &[&FdrFit], weights: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if fits.is_empty() || fits.len() != weights.len() {
        return Err(Error::pipeline(Stage::Ensemble, "no components to combine"));
    }
    let n = u.len();
    if fits.iter().any(|f| f.fdr.len() != n) {
        return Err(Error::pipeline(Stage::Ensemble, "component length mismatch"));
    }
    let bounded = |acc: f64, values: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        acc.clamp(lo, hi)
    };
    let pi0_raw: f64 = fits.iter().zip(weights).map(|(f, w)| w * f.pi0).sum();
    let pi0 = bounded(pi0_raw, &mut fits.iter().map(|f| f.pi0));
    let fdr: Vec<f64> = (0..n)
        .map(|i| {
            let raw: f64 = fits.iter().zip(weights).map(|(f, w)| w * f.fdr[i]).sum();
            bounded(raw, &mut fits.iter().map(|f| f.fdr[i]))
        })
        .collect();
    let tail_fdr = local_to_tail_fdr(u, &fdr)?;
    Ok((pi0, fdr, tail_fdr))
}

/// Ensembles the selected models' observed-data fits with loss-based
/// weights. Components whose observed fit failed are dropped and the
/// weights renormalised over the survivors.
pub fn ensemble(
    u: &[f64],
    components: Vec<(ObjectiveEstimate, std::result::Result<FdrFit, FitError>)>,
) -> Result<EnsembleResult> {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (objective, fit) in components {
        match fit {
            Ok(fit) => kept.push((objective, fit)),
            Err(e) => dropped.push(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::pipeline(
            Stage::ObservedFit,
            "every selected model failed on the observed statistics",
        ));
    }
    let losses: Vec<f64> = kept.iter().map(|(o, _)| o.l_hat.unwrap_or(0.0)).collect();
    let weights = loss_weights(&losses);
    let fits: Vec<&FdrFit> = kept.iter().map(|(_, f)| f).collect();
    let (pi0, fdr, tail_fdr) = combine(u, &fits, &weights)?;
    let selected = kept
        .iter()
        .zip(&weights)
        .map(|((o, _), &weight)| SelectedModel {
            model_id: o.model_id.clone(),
            family: o.family,
            weight,
            l_hat: o.l_hat,
        })
        .collect();
    Ok(EnsembleResult {
        selected,
        pi0,
        fdr,
        tail_fdr,
        objectives: Vec::new(),
        dropped,
        generator: None,
    })
}

/// Equal-weight ensemble of already fitted models.
pub fn equal_weight(u: &[f64], fits: &[(Option<Family>, &FdrFit)]) -> Result<EnsembleResult> {
    if fits.is_empty() {
        return Err(Error::pipeline(Stage::Ensemble, "no models to aggregate"));
    }
    let weights = vec![1.0 / fits.len() as f64; fits.len()];
    let refs: Vec<&FdrFit> = fits.iter().map(|(_, f)| *f).collect();
    let (pi0, fdr, tail_fdr) = combine(u, &refs, &weights)?;
    Ok(EnsembleResult {
        selected: fits
            .iter()
            .zip(&weights)
            .map(|((family, f), &weight)| SelectedModel {
                model_id: f.model_id.clone(),
                family: *family,
                weight,
                l_hat: None,
            })
            .collect(),
        pi0,
        fdr,
        tail_fdr,
        objectives: Vec::new(),
        dropped: Vec::new(),
        generator: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(id: &str, l: f64) -> ObjectiveEstimate {
        ObjectiveEstimate {
            model_id: id.into(),
            family: None,
            per_dataset_losses: vec![l],
            l_hat: Some(l),
            excluded: None,
        }
    }

    fn fit(id: &str, u: &[f64], pi0: f64, fdr: Vec<f64>) -> FdrFit {
        FdrFit::new(id, u, pi0, fdr).unwrap()
    }

    #[test]
    fn weights_follow_losses() {
        let w = loss_weights(&[0.1, 0.2]);
        assert!((w[0] - 0.9 / 1.7).abs() < 1e-15);
        assert!((w[1] - 0.8 / 1.7).abs() < 1e-15);
        assert!((w[0] - 0.5294).abs() < 1e-4 && (w[1] - 0.4706).abs() < 1e-4);
    }

    #[test]
    fn single_component_passes_through() {
        let u = [1.0, -2.0, 0.5];
        let f = fit("a", &u, 0.7, vec![0.4, 0.1, 0.9]);
        let r = ensemble(&u, vec![(objective("a", 0.3), Ok(f.clone()))]).unwrap();
        assert_eq!(r.selected[0].weight, 1.0);
        assert_eq!(r.fdr, f.fdr);
        assert_eq!(r.pi0, f.pi0);
        assert_eq!(r.tail_fdr, f.tail_fdr);
    }

    #[test]
    fn identical_components_give_identical_ensemble() {
        let u = [1.0, -2.0, 0.5];
        let v = vec![0.3, 0.1 + 0.2, 0.7];
        let comps = (0..3)
            .map(|k| {
                let id = format!("m{k}");
                (objective(&id, 0.1 * k as f64), Ok(fit(&id, &u, 0.8, v.clone())))
            })
            .collect();
        let r = ensemble(&u, comps).unwrap();
        assert_eq!(r.fdr, v);
    }

    #[test]
    fn failed_components_are_dropped_and_renormalised() {
        let u = [1.0, 2.0];
        let comps = vec![
            (objective("a", 0.2), Ok(fit("a", &u, 0.5, vec![0.2, 0.4]))),
            (objective("b", 0.1), Err(FitError::new("b", "boom"))),
        ];
        let r = ensemble(&u, comps).unwrap();
        assert_eq!(r.selected.len(), 1);
        assert_eq!(r.selected[0].weight, 1.0);
        assert_eq!(r.dropped.len(), 1);
        let none = vec![(objective("b", 0.1), Err(FitError::new("b", "boom")))];
        assert!(matches!(ensemble(&u, none), Err(Error::Pipeline { stage: Stage::ObservedFit, .. })));
    }
}
