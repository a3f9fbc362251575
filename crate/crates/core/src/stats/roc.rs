use super::StatsError;
use std::fmt::Write as _;

/// Which way the score points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Pick the orientation giving AUC ≥ 0.5.
    Auto,
    /// Larger scores predict the positive class.
    Positive,
    /// Smaller scores predict the positive class.
    Negative,
}

impl Direction {
    pub fn sign(self) -> i8 {
        match self {
            Direction::Negative => -1,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub auc_se: f64,
    /// `Positive` or `Negative`, never `Auto`.
    pub direction: Direction,
    pub positives: usize,
    pub negatives: usize,
}

impl RocCurve {
    /// `auc ± 1.96·se`, clamped to `[0, 1]`.
    pub fn ci95(&self) -> (f64, f64) {
        ((self.auc - 1.96 * self.auc_se).max(0.0), (self.auc + 1.96 * self.auc_se).min(1.0))
    }

    /// `fpr,tpr` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            let _ = writeln!(out, "{f},{t}");
        }
        out
    }
}

/// Hanley–McNeil standard error of an AUC.
pub fn hanley_mcneil_se(auc: f64, positives: usize, negatives: usize) -> f64 {
    let (n1, n0) = (positives as f64, negatives as f64);
    let q1 = auc / (2.0 - auc);
    let q2 = 2.0 * auc * auc / (1.0 + auc);
    let a2 = auc * auc;
    let var = (auc * (1.0 - auc) + (n1 - 1.0) * (q1 - a2) + (n0 - 1.0) * (q2 - a2)) / (n1 * n0);
    var.max(0.0).sqrt()
}

/// Empirical ROC from sweeping every distinct score. Tied scores move both
/// rates at once, which makes the trapezoid area count ties as half.
pub fn roc(labels: &[bool], scores: &[f64], direction: Direction) -> Result<RocCurve, StatsError> {
    if labels.len() != scores.len() {
        return Err(StatsError::LengthMismatch(labels.len(), scores.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(StatsError::SingleClass);
    }
    match direction {
        Direction::Positive => Ok(sweep(labels, scores, Direction::Positive, positives, negatives)),
        Direction::Negative => {
            let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
            Ok(sweep(labels, &flipped, Direction::Negative, positives, negatives))
        }
        Direction::Auto => {
            let up = sweep(labels, scores, Direction::Positive, positives, negatives);
            if up.auc >= 0.5 {
                Ok(up)
            } else {
                roc(labels, scores, Direction::Negative)
            }
        }
    }
}

fn sweep(labels: &[bool], scores: &[f64], direction: Direction, positives: usize, negatives: usize) -> RocCurve {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area in units of (1/n0)·(1/n1)
    let mut area2 = 0u64;
    let mut points = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < order.len() {
        let (prev_tp, prev_fp) = (tp, fp);
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - prev_fp) * (tp + prev_tp);
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    let auc = area2 as f64 / (2 * positives * negatives) as f64;
    RocCurve {
        points,
        auc,
        auc_se: hanley_mcneil_se(auc, positives, negatives),
        direction,
        positives,
        negatives,
    }
}
