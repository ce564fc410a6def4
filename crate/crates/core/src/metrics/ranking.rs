use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::dim(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("non-finite score"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability an
/// anomaly outscores a normal sample, counting ties as one half.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("AUC-ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of midranks of the anomalies.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let anomalies = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += midrank * anomalies as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: mean over anomalies of the precision at each anomaly's
/// rank, ranking by descending score. Among tied scores normals are ranked
/// ahead of anomalies.
pub fn auc_pr(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(Error::UndefinedMetric("AUC-PR needs at least one anomaly".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(labels[a].cmp(&labels[b])));
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &k) in order.iter().enumerate() {
        if labels[k] == 1 {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(ap / pos as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        let s = [0.1, 0.2, 0.9, 0.8];
        let l = [0, 0, 1, 1];
        assert_eq!(auc_roc(&s, &l).unwrap(), 1.0);
        assert_eq!(auc_pr(&s, &l).unwrap(), 1.0);
    }

    #[test]
    fn all_tied() {
        assert_eq!(auc_roc(&[0.3; 6], &[0, 1, 0, 1, 0, 0]).unwrap(), 0.5);
    }

    #[test]
    fn hand_enumerated_pairs() {
        assert_eq!(auc_roc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
    }

    #[test]
    fn single_anomaly_second() {
        assert_eq!(auc_pr(&[0.9, 0.1], &[0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn pessimistic_ties() {
        // tied pair: the normal goes first, so the anomaly sits at rank 2
        assert_eq!(auc_pr(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(auc_roc(&[1.0, 2.0], &[1, 1]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(auc_pr(&[1.0, 2.0], &[0, 0]), Err(Error::UndefinedMetric(_))));
        assert!(auc_roc(&[1.0], &[0, 1]).is_err());
    }
}
