//! Exact ranking metrics. Scores are compared with `==`, so tied scores are
//! handled identically by every routine here and by a brute-force pair count.

/// ROC AUC as the Mann–Whitney probability that a random positive outranks a
/// random negative, ties counting one half. `None` when either class is
/// absent.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of positives, kept in integers so the result is exact.
    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let twice_midrank = (start + 1 + end) as u64;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        twice_rank_sum += twice_midrank * positives;
        start = end;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Some(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Area under the precision–recall curve with step interpolation, walking
/// thresholds from the highest score down and admitting tied scores together.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            if labels[order[end]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            end += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        start = end;
    }
    Some(area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_constant_scores() {
        let labels = [1, 0, 1, 0, 0];
        let perfect = [1.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(roc_auc(&perfect, &labels), Some(1.0));
        assert_eq!(pr_auc(&perfect, &labels), Some(1.0));
        assert_eq!(roc_auc(&[0.3; 5], &labels), Some(0.5));
        assert_eq!(pr_auc(&[0.3; 5], &labels), Some(0.4));
    }

    #[test]
    fn single_class_is_undefined() {
        assert_eq!(roc_auc(&[0.1, 0.2], &[1, 1]), None);
        assert_eq!(pr_auc(&[0.1, 0.2], &[0, 0]), None);
    }

    #[test]
    fn hand_worked_pr_curve() {
        // Descending: (0.9,+) (0.8,−) (0.7,+) → recall 0.5 @ 1, 0.5 @ 0.5, 1 @ 2/3.
        let auc = pr_auc(&[0.9, 0.8, 0.7], &[1, 0, 1]).unwrap();
        assert!((auc - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    }
}
