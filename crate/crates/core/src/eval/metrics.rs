//! Ranking metrics for top-1 model selection.
//!
//! Score ties are resolved with average ranks (MRR) or half credit (AUC).

use alloc::vec::Vec;

use crate::error::{arg_err, dim_err, Error, Result};

/// Marks the best model(s) of a row. Every maximum is positive.
pub fn label_top1(row: &[f64]) -> Result<Vec<bool>> {
    if row.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(row.iter().map(|&v| v == best).collect())
}

fn check_len(scores: &[f64], other: usize) -> Result<()> {
    if scores.len() != other {
        return Err(dim_err("scores and labels differ in length"));
    }
    Ok(())
}

/// Average 1-based rank of item `i` under descending scores.
pub fn average_rank(scores: &[f64], i: usize) -> f64 {
    let s = scores[i];
    let above = scores.iter().filter(|&&x| x > s).count();
    let tied = scores.iter().filter(|&&x| x == s).count();
    above as f64 + (tied as f64 + 1.0) / 2.0
}

/// Reciprocal of the best (average) rank held by a positive label.
pub fn mrr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_len(scores, labels.len())?;
    let rank = (0..scores.len())
        .filter(|&i| labels[i])
        .map(|i| average_rank(scores, i))
        .fold(f64::INFINITY, f64::min);
    if rank.is_infinite() {
        return Err(arg_err("no positive label"));
    }
    Ok(1.0 / rank)
}

/// Probability that a positive outscores a negative; ties count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_len(scores, labels.len())?;
    let pos: Vec<f64> = (0..scores.len()).filter(|&i| labels[i]).map(|i| scores[i]).collect();
    let neg: Vec<f64> = (0..scores.len()).filter(|&i| !labels[i]).map(|i| scores[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(arg_err("AUC needs at least one positive and one negative label"));
    }
    let mut neg_sorted = neg.clone();
    neg_sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for p in &pos {
        let below = neg_sorted.partition_point(|x| x < p);
        let not_above = neg_sorted.partition_point(|x| x <= p);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Index of the highest score, lowest index among ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Performance of the predicted top model over the best attainable
/// performance. An all-zero truth row scores 1.
pub fn ndcg_at_1(scores: &[f64], truth: &[f64]) -> Result<f64> {
    check_len(scores, truth.len())?;
    let top = argmax(scores).ok_or(Error::EmptyDistribution)?;
    let best = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best <= 0.0 {
        return Ok(1.0);
    }
    Ok((truth[top] / best).clamp(0.0, 1.0))
}

/// Model indices by descending score, ties to the lower index.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn labels() {
        assert_eq!(label_top1(&[0.2, 0.9, 0.5]).unwrap(), vec![false, true, false]);
        assert_eq!(label_top1(&[0.5, 0.5]).unwrap(), vec![true, true]);
        assert_eq!(label_top1(&[0.1]).unwrap(), vec![true]);
        assert!(label_top1(&[]).is_err());
    }

    #[test]
    fn mrr_examples() {
        let l = [true, false, false, false];
        assert_eq!(mrr(&[0.9, 0.1, 0.2, 0.3], &l).unwrap(), 1.0);
        assert_eq!(mrr(&[0.1, 0.9, 0.8, 0.7], &l).unwrap(), 0.25);
        assert!((mrr(&[0.9, 0.9, 0.1, 0.0], &l).unwrap() - 1.0 / 1.5).abs() < 1e-15);
        assert!(mrr(&[0.1, 0.2], &[false, false]).is_err());
    }

    #[test]
    fn auc_examples() {
        let l = [true, false, false];
        assert_eq!(auc(&[0.9, 0.1, 0.2], &l).unwrap(), 1.0);
        assert_eq!(auc(&[0.0, 0.1, 0.2], &l).unwrap(), 0.0);
        assert_eq!(auc(&[0.1, 0.1, 0.0], &l).unwrap(), 0.75);
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_1(&[0.9, 0.1], &[1.0, 0.5]).unwrap(), 1.0);
        assert_eq!(ndcg_at_1(&[0.1, 0.9], &[1.0, 0.5]).unwrap(), 0.5);
        assert_eq!(ndcg_at_1(&[0.1, 0.9], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn ranking_ties_to_lower_index() {
        assert_eq!(ranking(&[0.5, 0.9, 0.5]), vec![1, 0, 2]);
    }
}
