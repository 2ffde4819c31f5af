//! C-SVM with an RBF kernel trained by sequential minimal optimization
//! (maximal violating pair with second-order working-set selection).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// Kernel width; `None` means `1 / (n_features * var(X))`.
    pub gamma: Option<f64>,
    /// KKT violation tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub gamma: f64,
    /// Support vectors with their `alpha_i * y_i` coefficients.
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

const TAU: f64 = 1e-12;

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

/// `1 / (p * var)` over every entry of `x`; 1 when the data are constant.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let p = x.first().map_or(1, Vec::len).max(1);
    let flat: Vec<f64> = x.iter().flatten().copied().collect();
    let var = crate::stats::variance(&flat);
    if var > 0.0 {
        1.0 / (p as f64 * var)
    } else {
        1.0
    }
}

impl SvmModel {
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &SvmParams) -> Self {
        let n = x.len();
        let gamma = params.gamma.unwrap_or_else(|| default_gamma(x));
        let c = params.c;
        let ys: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { -1.0 }).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rbf(gamma, &x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let q = |i: usize, j: usize| ys[i] * ys[j] * k[i * n + j];

        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let upper = |a: f64| a >= c;
        let lower = |a: f64| a <= 0.0;
        let mut iterations = 0;

        while iterations < params.max_iter {
            // i maximizes -y G over the "can move up" set.
            let mut gmax = f64::NEG_INFINITY;
            let mut sel_i = None;
            for t in 0..n {
                let v = -ys[t] * grad[t];
                let movable = if ys[t] > 0.0 {
                    !upper(alpha[t])
                } else {
                    !lower(alpha[t])
                };
                if movable && v >= gmax {
                    gmax = v;
                    sel_i = Some(t);
                }
            }
            let Some(i) = sel_i else { break };
            let mut gmax2 = f64::NEG_INFINITY;
            let mut sel_j = None;
            let mut best = f64::INFINITY;
            for t in 0..n {
                let movable = if ys[t] > 0.0 {
                    !lower(alpha[t])
                } else {
                    !upper(alpha[t])
                };
                if !movable {
                    continue;
                }
                let v = ys[t] * grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= best {
                        best = obj;
                        sel_j = Some(t);
                    }
                }
            }
            let Some(j) = sel_j else { break };
            if gmax + gmax2 < params.tol {
                break;
            }
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            if ys[i] != ys[j] {
                let mut quad = k[i * n + i] + k[j * n + j] + 2.0 * q(i, j);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let mut quad = k[i * n + i] + k[j * n + j] - 2.0 * q(i, j);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += q(i, t) * di + q(j, t) * dj;
            }
        }

        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut free_sum) = (0usize, 0.0);
        for t in 0..n {
            let yg = ys[t] * grad[t];
            if upper(alpha[t]) {
                if ys[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if lower(alpha[t]) {
                if ys[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 {
            free_sum / free as f64
        } else {
            (ub + lb) / 2.0
        };

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support.push(x[t].clone());
                coef.push(alpha[t] * ys[t]);
            }
        }
        SvmModel {
            gamma,
            support,
            coef,
            rho,
            iterations,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * rbf(self.gamma, s, row))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.decision(row) > 0.0
    }
}
