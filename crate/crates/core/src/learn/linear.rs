//! Logistic regression fitted by full-batch gradient descent.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrParams {
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            grad_tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    /// Minimizes the mean log loss. The step is `1/L` for the loss's
    /// Lipschitz bound on standardized inputs, so descent is monotone.
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &LrParams) -> Self {
        let n = x.len() as f64;
        let p = x.first().map_or(0, Vec::len);
        let sq: f64 = x
            .iter()
            .map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / n;
        let step = 4.0 / sq.max(1e-12);
        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let mut grad = vec![0.0; p];
        let mut iterations = params.max_iter;
        for it in 0..params.max_iter {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, &label) in x.iter().zip(y) {
                let z = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let r = sigmoid(z) - if label { 1.0 } else { 0.0 };
                for (g, v) in grad.iter_mut().zip(row) {
                    *g += r * v;
                }
                gb += r;
            }
            grad.iter_mut().for_each(|g| *g /= n);
            gb /= n;
            let norm = (gb * gb + grad.iter().map(|g| g * g).sum::<f64>()).sqrt();
            if norm <= params.grad_tol {
                iterations = it;
                break;
            }
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= step * g;
            }
            b -= step * gb;
        }
        LogisticModel {
            weights: w,
            bias: b,
            iterations,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.bias + row.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.decision(row) > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_overlapping_classes() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 - 3.5]).collect();
        let y = [false, false, true, false, true, false, true, true];
        let m = LogisticModel::fit(&x, &y, &LrParams::default());
        assert!(m.iterations < 10_000);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
