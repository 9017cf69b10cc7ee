//! Discrimination, error and confusion metrics for binary scores.
//!
//! Labels are `0` (Alive) or `1` (Dead); scores are probabilities of Dead.

use super::HarnessError;

pub const LOGLOSS_EPSILON: f64 = 1e-15;

fn class_counts(labels: &[u8]) -> (u64, u64) {
    let pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    (pos, labels.len() as u64 - pos)
}

/// Indices sorted by descending score, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<(), HarnessError> {
    if scores.len() != labels.len() {
        return Err(HarnessError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(HarnessError::NonFinite);
    }
    Ok(())
}

/// Mann-Whitney AUC: the share of positive/negative pairs ranked correctly,
/// ties counting one half. Exact integer pair counts, one final division.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, HarnessError> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(HarnessError::SingleClass);
    }
    // Walk groups from the lowest score up, tracking negatives seen below.
    let mut below: u128 = 0;
    let mut twice_u: u128 = 0;
    for g in tie_groups(scores).iter().rev() {
        let (gp, gn) = class_counts(&g.iter().map(|&i| labels[i]).collect::<Vec<_>>());
        twice_u += 2 * gp as u128 * below + gp as u128 * gn as u128;
        below += gn as u128;
    }
    Ok(twice_u as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// Average precision: `sum_k (R_k - R_{k-1}) * P_k` over descending distinct
/// score thresholds.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64, HarnessError> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(HarnessError::NoPositives);
    }
    let (mut tp, mut seen) = (0u64, 0u64);
    let mut ap = 0.0;
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| labels[i] == 1).count() as u64;
        tp += gp;
        seen += g.len() as u64;
        if gp > 0 {
            ap += gp as f64 * (tp as f64 / seen as f64);
        }
    }
    // Rounding can push a perfect ranking a hair above one.
    Ok((ap / pos as f64).min(1.0))
}

/// `(threshold, false positive rate, true positive rate)` per distinct score,
/// starting from the empty prediction set.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64, f64)>, HarnessError> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(HarnessError::SingleClass);
    }
    let mut out = vec![(f64::INFINITY, 0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for g in tie_groups(scores) {
        for &i in &g {
            if labels[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        out.push((scores[g[0]], fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(out)
}

/// `(threshold, recall, precision)` per distinct score.
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64, f64)>, HarnessError> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(HarnessError::NoPositives);
    }
    let (mut tp, mut seen) = (0u64, 0u64);
    let mut out = Vec::new();
    for g in tie_groups(scores) {
        tp += g.iter().filter(|&&i| labels[i] == 1).count() as u64;
        seen += g.len() as u64;
        out.push((scores[g[0]], tp as f64 / pos as f64, tp as f64 / seen as f64));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub mse: f64,
    pub mae: f64,
    pub brier: f64,
    pub logloss: f64,
}

fn mean_squared_error(scores: &[f64], labels: &[u8]) -> f64 {
    scores.iter().zip(labels).map(|(s, &y)| (s - y as f64).powi(2)).sum::<f64>() / scores.len() as f64
}

pub fn error_metrics(scores: &[f64], labels: &[u8]) -> Result<ErrorMetrics, HarnessError> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(HarnessError::Empty);
    }
    let n = scores.len() as f64;
    let mse = mean_squared_error(scores, labels);
    let mae = scores.iter().zip(labels).map(|(s, &y)| (s - y as f64).abs()).sum::<f64>() / n;
    let logloss = -scores
        .iter()
        .zip(labels)
        .map(|(s, &y)| {
            let p = s.clamp(LOGLOSS_EPSILON, 1.0 - LOGLOSS_EPSILON);
            if y == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n;
    // Brier score on 0/1 outcomes is the mean squared error of the probabilities.
    Ok(ErrorMetrics { mse, mae, brier: mean_squared_error(scores, labels), logloss })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tn: u64,
    pub fp: u64,
    pub r#fn: u64,
    pub tp: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.r#fn + self.tp
    }

    pub fn accuracy(&self) -> f64 {
        (self.tn + self.tp) as f64 / self.total() as f64
    }

    /// `2tp / (2tp + fp + fn)`; zero when there are no positives at all.
    pub fn f1(&self) -> f64 {
        let den = 2 * self.tp + self.fp + self.r#fn;
        if den == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / den as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Scores at or above `threshold` count as positive.
pub fn classification_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<ClassificationMetrics, HarnessError> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut c = Confusion::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.r#fn += 1,
            (true, true) => c.tp += 1,
        }
    }
    Ok(ClassificationMetrics { accuracy: c.accuracy(), f1: c.f1(), confusion: c })
}
