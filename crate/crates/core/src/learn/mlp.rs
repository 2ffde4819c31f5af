//! Fully connected network: tanh hidden layers, sigmoid output, binary
//! cross-entropy, Adam on shuffled mini-batches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linear::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![25, 12, 25],
            epochs: 100,
            batch_size: 5,
            learning_rate: 1e-3,
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Row-major `out x in` weights plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub epochs_run: usize,
    pub batch_size: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, t: i32) {
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for k in 0..params.len() {
            self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * grad[k];
            self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * grad[k] * grad[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + EPS);
        }
    }
}

impl Mlp {
    /// Hidden-layer widths, input and output excluded.
    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.n_out).collect()
    }

    /// Activations of every layer, input first; the last has one sigmoid unit.
    fn forward(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![row.to_vec()];
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = &acts[li];
            let out: Vec<f64> = (0..layer.n_out)
                .map(|o| {
                    let w = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    let z = layer.bias[o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if li == last {
                        sigmoid(z)
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.forward(row).last().expect("output layer")[0]
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) > 0.5
    }

    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &MlpParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = x.first().map_or(0, Vec::len);
        let mut sizes = vec![p];
        sizes.extend(&params.hidden);
        sizes.push(1);
        let layers: Vec<Layer> = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                Layer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| rng.random_range(-limit..=limit)).collect(),
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        let mut net = Mlp {
            layers,
            epochs_run: 0,
            batch_size: params.batch_size.max(1),
        };
        let mut opt_w: Vec<Adam> = net.layers.iter().map(|l| Adam::new(l.weights.len())).collect();
        let mut opt_b: Vec<Adam> = net.layers.iter().map(|l| Adam::new(l.bias.len())).collect();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut t = 0;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(net.batch_size) {
                let mut gw: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
                let mut gb: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect();
                for &s in batch {
                    let acts = net.forward(&x[s]);
                    let target = if y[s] { 1.0 } else { 0.0 };
                    // Sigmoid + cross-entropy: output delta is p - y.
                    let mut delta = vec![acts.last().expect("output")[0] - target];
                    for li in (0..net.layers.len()).rev() {
                        let layer = &net.layers[li];
                        let input = &acts[li];
                        for o in 0..layer.n_out {
                            gb[li][o] += delta[o];
                            for i in 0..layer.n_in {
                                gw[li][o * layer.n_in + i] += delta[o] * input[i];
                            }
                        }
                        if li > 0 {
                            delta = (0..layer.n_in)
                                .map(|i| {
                                    let back: f64 = (0..layer.n_out)
                                        .map(|o| layer.weights[o * layer.n_in + i] * delta[o])
                                        .sum();
                                    back * (1.0 - input[i] * input[i])
                                })
                                .collect();
                        }
                    }
                }
                t += 1;
                let scale = 1.0 / batch.len() as f64;
                for li in 0..net.layers.len() {
                    gw[li].iter_mut().for_each(|g| *g *= scale);
                    gb[li].iter_mut().for_each(|g| *g *= scale);
                    opt_w[li].step(&mut net.layers[li].weights, &gw[li], params.learning_rate, t);
                    opt_b[li].step(&mut net.layers[li].bias, &gb[li], params.learning_rate, t);
                }
            }
            net.epochs_run += 1;
        }
        net
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_matches_params() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect();
        let y: Vec<bool> = (0..10).map(|i| i >= 5).collect();
        let net = Mlp::fit(&x, &y, &MlpParams::default(), 3);
        assert_eq!(net.hidden_sizes(), vec![25, 12, 25]);
        assert_eq!(net.epochs_run, 100);
        assert_eq!(net.batch_size, 5);
        assert_eq!(net.layers[0].n_in, 2);
        assert_eq!(net.layers.last().unwrap().n_out, 1);
        assert_eq!(net, Mlp::fit(&x, &y, &MlpParams::default(), 3));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let params = MlpParams {
            hidden: vec![3, 2],
            epochs: 0,
            ..MlpParams::default()
        };
        let row = vec![0.3, -0.7];
        let net = Mlp::fit(&[row.clone(), vec![0.0, 0.0]], &[true, false], &params, 1);
        let loss = |n: &Mlp| -n.predict_proba(&row).ln();
        // Backprop for a single positive sample, first-layer weight 0.
        let acts = net.forward(&row);
        let mut delta = vec![acts[3][0] - 1.0];
        for li in (1..3).rev() {
            let l = &net.layers[li];
            delta = (0..l.n_in)
                .map(|i| {
                    (0..l.n_out).map(|o| l.weights[o * l.n_in + i] * delta[o]).sum::<f64>()
                        * (1.0 - acts[li][i].powi(2))
                })
                .collect();
        }
        let analytic = delta[0] * row[0];
        let h = 1e-6;
        let mut plus = net.clone();
        plus.layers[0].weights[0] += h;
        let mut minus = net.clone();
        minus.layers[0].weights[0] -= h;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
        assert!((analytic - numeric).abs() < 1e-7, "{analytic} vs {numeric}");
    }

    #[test]
    fn learns_a_linear_boundary() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 - 19.5) / 10.0]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let net = Mlp::fit(&x, &y, &MlpParams::default(), 0);
        let acc = x.iter().zip(&y).filter(|(r, &l)| net.predict(r) == l).count();
        assert!(acc >= 38, "{acc}");
    }
}
