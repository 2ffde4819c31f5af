//! Accuracy, F1 and realization summaries. Chatter is the positive class.

use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(truth: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Zero when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; zero when either is zero.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn accuracy(truth: &[bool], predicted: &[bool]) -> f64 {
    Confusion::from_labels(truth, predicted).accuracy()
}

pub fn f1_score(truth: &[bool], predicted: &[bool]) -> f64 {
    Confusion::from_labels(truth, predicted).f1()
}

/// Scores over realizations. Standard deviations are population values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub accuracies: Vec<f64>,
    pub f1s: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

impl EvalSummary {
    pub fn from_scores(accuracies: Vec<f64>, f1s: Vec<f64>) -> Self {
        EvalSummary {
            mean_accuracy: stats::mean(&accuracies),
            std_accuracy: stats::std_dev(&accuracies),
            mean_f1: stats::mean(&f1s),
            std_f1: stats::std_dev(&f1s),
            accuracies,
            f1s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_confusion() {
        let truth = [true, true, true, false, false, false, true, false];
        let pred = [true, false, true, false, true, false, true, false];
        let c = Confusion::from_labels(&truth, &pred);
        assert_eq!(
            c,
            Confusion {
                tp: 3,
                tn: 3,
                fp: 1,
                fn_: 1
            }
        );
        assert_eq!(c.accuracy(), 0.75);
        assert_eq!(c.precision(), 0.75);
        assert_eq!(c.recall(), 0.75);
        assert!((c.f1() - 0.75).abs() < 1e-15);

        let pred = [true, true, true, true, true, true, true, true];
        let c = Confusion::from_labels(&truth, &pred);
        assert_eq!(c.accuracy(), 0.5);
        let (p, r) = (0.5, 1.0);
        assert!((c.f1() - 2.0 * p * r / (p + r)).abs() < 1e-15);
    }

    #[test]
    fn no_predicted_positives_gives_zero_f1() {
        let truth = [true, false, true, false, false, false, false, false];
        let pred = [false; 8];
        assert_eq!(f1_score(&truth, &pred), 0.0);
        assert_eq!(accuracy(&truth, &pred), 0.75);
        assert_eq!(f1_score(&[false; 4], &[false; 4]), 0.0);
    }

    #[test]
    fn summary_statistics() {
        let s = EvalSummary::from_scores(vec![0.5, 1.0], vec![0.0, 1.0]);
        assert_eq!(s.mean_accuracy, 0.75);
        assert_eq!(s.std_accuracy, 0.25);
        assert_eq!(s.std_f1, 0.5);
    }
}
