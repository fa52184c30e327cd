//! Accuracy, ROC and AUC.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Fraction of correct hard decisions; a score equal to the threshold counts as negative.
pub fn accuracy<T: Scalar>(scores: &[T], labels: &[bool], threshold: T) -> Result<f64> {
    check_lengths(scores, labels)?;
    let correct = scores.iter().zip(labels).filter(|(&s, &l)| (s > threshold) == l).count();
    Ok(correct as f64 / scores.len() as f64)
}

/// True/false positive/negative counts at a threshold (ties negative).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn error_rate(&self) -> f64 {
        (self.fp + self.fn_) as f64 / self.total() as f64
    }
}

pub fn confusion<T: Scalar>(scores: &[T], labels: &[bool], threshold: T) -> Result<Confusion> {
    check_lengths(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn check_lengths<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<()> {
    if scores.is_empty() {
        return Err(invalid("no scores"));
    }
    if scores.len() != labels.len() {
        return Err(Error::Dimension { expected: labels.len(), got: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid("NaN score"));
    }
    Ok(())
}

/// One ROC vertex `(false positive rate, true positive rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from a descending sweep over distinct scores; tied scores form one step.
pub fn roc_curve<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<Vec<RocPoint>> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(invalid("ROC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / n_neg as f64, tpr: tp as f64 / n_pos as f64 });
    }
    Ok(points)
}

/// Trapezoidal area under [`roc_curve`].
pub fn auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    let pts = roc_curve(scores, labels)?;
    Ok(pts.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0.9, 0.1], &[true, false], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.1, 0.9], &[true, false], 0.5).unwrap(), 0.0);
        assert_eq!(accuracy(&[0.9, 0.4, 0.6], &[true, false, false], 0.5).unwrap(), 2.0 / 3.0);
        assert_eq!(accuracy(&[0.5], &[false], 0.5).unwrap(), 1.0);
        assert!(accuracy::<f64>(&[], &[], 0.5).is_err());
    }

    #[test]
    fn accuracy_plus_error_is_one() {
        let c = confusion(&[0.9f32, 0.4, 0.6, 0.5], &[true, false, false, true], 0.5).unwrap();
        assert_eq!(c.accuracy() + c.error_rate(), 1.0);
        assert_eq!(c, Confusion { tp: 1, fp: 1, tn: 1, fn_: 1 });
    }

    #[test]
    fn roc_examples() {
        let pts = roc_curve(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);
        let flat = roc_curve(&[0.3; 5], &[true, false, true, false, false]).unwrap();
        assert_eq!(flat, vec![RocPoint { fpr: 0.0, tpr: 0.0 }, RocPoint { fpr: 1.0, tpr: 1.0 }]);
        assert!(roc_curve(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[true, true, false, false]).unwrap(), 0.0);
        assert_eq!(auc(&[0.4; 4], &[true, false, true, false]).unwrap(), 0.5);
        assert!(auc(&[0.1], &[false]).is_err());
    }

    #[test]
    fn roc_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(2..100);
            let s: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
            let mut l: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            l[0] = true;
            l[1] = false;
            let pts = roc_curve(&s, &l).unwrap();
            assert_eq!(pts.first(), Some(&RocPoint { fpr: 0.0, tpr: 0.0 }));
            assert_eq!(pts.last(), Some(&RocPoint { fpr: 1.0, tpr: 1.0 }));
            assert!(pts.windows(2).all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr));
        }
    }
}
