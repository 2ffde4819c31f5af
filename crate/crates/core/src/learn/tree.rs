//! Random forest of shallow gini trees and gradient-boosted stumps.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::linear::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Fraction of chatter samples reaching the leaf.
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in a flat arena; node 0 is the root. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// Best threshold on one feature: `(score, threshold)` where the score is
/// produced by `eval(left_stats, right_stats)` (lower is better).
/// Thresholds are midpoints between consecutive distinct values.
fn best_threshold<S, F>(
    x: &[Vec<f64>],
    idx: &[usize],
    feature: usize,
    stat: impl Fn(usize) -> S,
    eval: F,
) -> Option<(f64, f64)>
where
    S: Copy + Default + std::ops::Add<Output = S> + std::ops::Sub<Output = S>,
    F: Fn(S, S) -> f64,
{
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
    let total = order.iter().fold(S::default(), |acc, &i| acc + stat(i));
    let mut left = S::default();
    let mut best: Option<(f64, f64)> = None;
    for w in 0..order.len() - 1 {
        left = left + stat(order[w]);
        let (a, b) = (x[order[w]][feature], x[order[w + 1]][feature]);
        if a == b {
            continue;
        }
        let score = eval(left, total - left);
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, a + (b - a) / 2.0));
        }
    }
    best
}

/// (count, positives) pair for gini sweeps.
#[derive(Debug, Clone, Copy, Default)]
struct Counts(f64, f64);

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Sub for Counts {
    type Output = Counts;
    fn sub(self, o: Counts) -> Counts {
        Counts(self.0 - o.0, self.1 - o.1)
    }
}

/// Count-weighted gini impurity `n * (1 - p^2 - (1-p)^2)`.
fn weighted_gini(c: Counts) -> f64 {
    if c.0 <= 0.0 {
        return 0.0;
    }
    let p = c.1 / c.0;
    c.0 * 2.0 * p * (1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 2,
            max_features: None,
            bootstrap: true,
        }
    }
}

fn grow(
    x: &[Vec<f64>],
    y: &[bool],
    idx: &[usize],
    depth: usize,
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let pos = idx.iter().filter(|&&i| y[i]).count();
    let here = nodes.len();
    nodes.push(Node::Leaf(pos as f64 / idx.len() as f64));
    if depth >= params.max_depth || pos == 0 || pos == idx.len() {
        return here;
    }
    let p = x[0].len();
    let m = params.max_features.unwrap_or((p as f64).sqrt() as usize).clamp(1, p);
    let mut features = sample(rng, p, m).into_vec();
    features.sort_unstable();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in features {
        let stat = |i: usize| Counts(1.0, if y[i] { 1.0 } else { 0.0 });
        if let Some((score, thr)) = best_threshold(x, idx, f, stat, |l, r| weighted_gini(l) + weighted_gini(r)) {
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, f, thr));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return here;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
    let left = grow(x, y, &l, depth + 1, params, rng, nodes);
    let right = grow(x, y, &r, depth + 1, params, rng, nodes);
    nodes[here] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    here
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    /// Tree `t` draws from ChaCha8 stream `t` of `seed`, so the forest does
    /// not depend on how trees are scheduled.
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &ForestParams, seed: u64) -> Self {
        let n = x.len();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let idx: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut nodes = Vec::new();
                grow(x, y, &idx, 0, params, &mut rng, &mut nodes);
                Tree { nodes }
            })
            .collect();
        RandomForest { trees }
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) > 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub n_stages: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_stages: 100,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn eval(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// (count, residual sum, residual square sum, hessian sum).
#[derive(Debug, Clone, Copy, Default)]
struct Moments(f64, f64, f64, f64);

impl std::ops::Add for Moments {
    type Output = Moments;
    fn add(self, o: Moments) -> Moments {
        Moments(self.0 + o.0, self.1 + o.1, self.2 + o.2, self.3 + o.3)
    }
}

impl std::ops::Sub for Moments {
    type Output = Moments;
    fn sub(self, o: Moments) -> Moments {
        Moments(self.0 - o.0, self.1 - o.1, self.2 - o.2, self.3 - o.3)
    }
}

fn sse(m: Moments) -> f64 {
    if m.0 <= 0.0 {
        0.0
    } else {
        m.2 - m.1 * m.1 / m.0
    }
}

/// Newton leaf value for the log loss.
fn newton(m: Moments) -> f64 {
    if m.3 <= 1e-12 {
        0.0
    } else {
        m.1 / m.3
    }
}

/// Logistic-loss gradient boosting with depth-1 regression stumps fitted
/// to the residuals and Newton-step leaf values.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoost {
    pub init: f64,
    pub learning_rate: f64,
    pub stumps: Vec<Stump>,
}

impl GradientBoost {
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &BoostParams) -> Self {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        let prior = (y.iter().filter(|&&v| v).count() as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let init = (prior / (1.0 - prior)).ln();
        let target: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
        let mut f = vec![init; n];
        let idx: Vec<usize> = (0..n).collect();
        let mut stumps = Vec::with_capacity(params.n_stages);
        for _ in 0..params.n_stages {
            let prob: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
            let resid: Vec<f64> = target.iter().zip(&prob).map(|(t, q)| t - q).collect();
            let stat = |i: usize| Moments(1.0, resid[i], resid[i] * resid[i], prob[i] * (1.0 - prob[i]));
            let mut best: Option<(f64, usize, f64)> = None;
            for feature in 0..p {
                if let Some((score, thr)) = best_threshold(x, &idx, feature, stat, |l, r| sse(l) + sse(r)) {
                    if best.is_none_or(|(s, _, _)| score < s) {
                        best = Some((score, feature, thr));
                    }
                }
            }
            // No feature varies: nothing left to split on.
            let Some((_, feature, threshold)) = best else { break };
            let (mut l, mut r) = (Moments::default(), Moments::default());
            for i in 0..n {
                if x[i][feature] <= threshold {
                    l = l + stat(i);
                } else {
                    r = r + stat(i);
                }
            }
            let stump = Stump {
                feature,
                threshold,
                left: newton(l),
                right: newton(r),
            };
            for (fi, row) in f.iter_mut().zip(x) {
                *fi += params.learning_rate * stump.eval(row);
            }
            stumps.push(stump);
        }
        GradientBoost {
            init,
            learning_rate: params.learning_rate,
            stumps,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.stumps.iter().map(|s| s.eval(row)).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.decision(row) > 0.0
    }
}
