//! Classifiers and evaluation over seeded train/test realizations.
//!
//! Every model standardizes its inputs with statistics from the training
//! rows and reapplies them at prediction time.

mod linear;
mod metrics;
mod mlp;
mod svm;
mod tree;

pub use linear::{LogisticModel, LrParams};
pub use metrics::{accuracy, f1_score, Confusion, EvalSummary};
pub use mlp::{Layer, Mlp, MlpParams};
pub use svm::{default_gamma, SvmModel, SvmParams};
pub use tree::{BoostParams, ForestParams, GradientBoost, Node, RandomForest, Stump, Tree};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{make_splits, make_stratified_splits, FeatureMatrix, Split, SplitPlan};
use crate::dtw::{knn_predict, knn_vote, DistanceMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    LogisticRegression(LrParams),
    SvmRbf(SvmParams),
    RandomForest(ForestParams),
    GradientBoost(BoostParams),
    Mlp(MlpParams),
    /// Euclidean KNN on standardized features, or on a precomputed
    /// distance matrix via [`evaluate_knn_realizations`].
    Knn {
        k: usize,
    },
}

impl ClassifierSpec {
    /// Short name used in configs and reports (`lr`, `svm`, `rf`, `gb`,
    /// `mlp`, `knn<k>`).
    pub fn name(&self) -> String {
        match self {
            ClassifierSpec::LogisticRegression(_) => "lr".into(),
            ClassifierSpec::SvmRbf(_) => "svm".into(),
            ClassifierSpec::RandomForest(_) => "rf".into(),
            ClassifierSpec::GradientBoost(_) => "gb".into(),
            ClassifierSpec::Mlp(_) => "mlp".into(),
            ClassifierSpec::Knn { k } => format!("knn{k}"),
        }
    }

    pub fn is_knn(&self) -> bool {
        matches!(self, ClassifierSpec::Knn { .. })
    }

    fn needs_both_classes(&self) -> bool {
        matches!(
            self,
            ClassifierSpec::LogisticRegression(_) | ClassifierSpec::SvmRbf(_) | ClassifierSpec::Mlp(_)
        )
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "lr" | "logistic" => ClassifierSpec::LogisticRegression(LrParams::default()),
            "svm" => ClassifierSpec::SvmRbf(SvmParams::default()),
            "rf" | "forest" => ClassifierSpec::RandomForest(ForestParams::default()),
            "gb" | "boost" => ClassifierSpec::GradientBoost(BoostParams::default()),
            "mlp" | "ann" => ClassifierSpec::Mlp(MlpParams::default()),
            other => match other.strip_prefix("knn").map(str::parse::<usize>) {
                Some(Ok(k)) if k > 0 => ClassifierSpec::Knn { k },
                _ => return Err(Error::invalid(format!("unknown classifier '{other}'"))),
            },
        })
    }
}

/// Per-column mean and scale; constant columns get scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; p];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; p];
        for row in x {
            for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    LogisticRegression(LogisticModel),
    SvmRbf(SvmModel),
    RandomForest(RandomForest),
    GradientBoost(GradientBoost),
    Mlp(Mlp),
    Knn { k: usize, x: Vec<Vec<f64>>, y: Vec<bool> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub scaler: Standardizer,
    pub estimator: Estimator,
}

impl Model {
    pub fn n_features(&self) -> usize {
        self.scaler.mean.len()
    }

    pub fn predict_rows(&self, x: &[Vec<f64>]) -> Result<Vec<bool>> {
        x.iter()
            .map(|row| {
                if row.len() != self.n_features() {
                    return Err(Error::DimensionMismatch {
                        expected: self.n_features(),
                        got: row.len(),
                    });
                }
                let z = self.scaler.transform_row(row);
                Ok(match &self.estimator {
                    Estimator::LogisticRegression(m) => m.predict(&z),
                    Estimator::SvmRbf(m) => m.predict(&z),
                    Estimator::RandomForest(m) => m.predict(&z),
                    Estimator::GradientBoost(m) => m.predict(&z),
                    Estimator::Mlp(m) => m.predict(&z),
                    Estimator::Knn { k, x, y } => {
                        let d: Vec<f64> = x
                            .iter()
                            .map(|t| t.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                            .collect();
                        knn_vote(&d, y, *k)
                    }
                })
            })
            .collect()
    }
}

pub fn train_rows(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[bool], seed: u64) -> Result<Model> {
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: row.len(),
        });
    }
    if y.len() != x.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if spec.needs_both_classes() && (positives == 0 || positives == y.len()) {
        return Err(Error::SingleClassTrainingSet);
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let estimator = match spec {
        ClassifierSpec::LogisticRegression(p) => Estimator::LogisticRegression(LogisticModel::fit(&z, y, p)),
        ClassifierSpec::SvmRbf(p) => Estimator::SvmRbf(SvmModel::fit(&z, y, p)),
        ClassifierSpec::RandomForest(p) => Estimator::RandomForest(RandomForest::fit(&z, y, p, seed)),
        ClassifierSpec::GradientBoost(p) => Estimator::GradientBoost(GradientBoost::fit(&z, y, p)),
        ClassifierSpec::Mlp(p) => Estimator::Mlp(Mlp::fit(&z, y, p, seed)),
        ClassifierSpec::Knn { k } => {
            if *k > z.len() {
                return Err(Error::KTooLarge {
                    k: *k,
                    available: z.len(),
                });
            }
            Estimator::Knn {
                k: *k,
                x: z,
                y: y.to_vec(),
            }
        }
    };
    Ok(Model { scaler, estimator })
}

pub fn train(spec: &ClassifierSpec, features: &FeatureMatrix, seed: u64) -> Result<Model> {
    train_rows(spec, &features.values, &features.labels, seed)
}

pub fn predict(model: &Model, features: &FeatureMatrix) -> Result<Vec<bool>> {
    model.predict_rows(&features.values)
}

/// Splits for a source/target pair under `plan`.
pub fn plan_splits(source_labels: &[bool], target_labels: &[bool], plan: &SplitPlan) -> Result<Vec<Split>> {
    if plan.stratify {
        make_stratified_splits(source_labels, target_labels, plan)
    } else {
        make_splits(source_labels, target_labels, plan)
    }
}

/// Trains on each split's source rows and scores on its target rows.
/// Realization `r` trains with `seeds[r]`.
pub fn evaluate_on_splits(
    spec: &ClassifierSpec,
    source: &FeatureMatrix,
    target: &FeatureMatrix,
    splits: &[Split],
    seeds: &[u64],
) -> Result<EvalSummary> {
    if source.feature_names != target.feature_names {
        return Err(Error::FeatureMismatch);
    }
    let scores: Vec<(f64, f64)> = splits
        .par_iter()
        .zip(seeds)
        .map(|(split, &seed)| {
            let train_set = source.select(&split.train);
            let test_set = target.select(&split.test);
            let model = train(spec, &train_set, seed)?;
            let pred = predict(&model, &test_set)?;
            let c = Confusion::from_labels(&test_set.labels, &pred);
            Ok((c.accuracy(), c.f1()))
        })
        .collect::<Result<_>>()?;
    let (acc, f1) = scores.into_iter().unzip();
    Ok(EvalSummary::from_scores(acc, f1))
}

pub fn evaluate_realizations(
    spec: &ClassifierSpec,
    source: &FeatureMatrix,
    target: &FeatureMatrix,
    plan: &SplitPlan,
) -> Result<EvalSummary> {
    if source.feature_names != target.feature_names {
        return Err(Error::FeatureMismatch);
    }
    let splits = plan_splits(&source.labels, &target.labels, plan)?;
    evaluate_on_splits(spec, source, target, &splits, &plan.seeds)
}

/// KNN on a precomputed matrix with rows = target records and columns =
/// source records.
pub fn evaluate_knn_realizations(
    dist: &DistanceMatrix,
    source_labels: &[bool],
    target_labels: &[bool],
    k: usize,
    splits: &[Split],
) -> Result<EvalSummary> {
    if dist.n_cols() != source_labels.len() || dist.n_rows() != target_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: dist.n_cols(),
            got: source_labels.len(),
        });
    }
    let scores: Vec<(f64, f64)> = splits
        .iter()
        .map(|split| {
            let sub = dist.select(&split.test, &split.train);
            let train_labels: Vec<bool> = split.train.iter().map(|&i| source_labels[i]).collect();
            let truth: Vec<bool> = split.test.iter().map(|&i| target_labels[i]).collect();
            let pred = knn_predict(&sub, &train_labels, k)?;
            let c = Confusion::from_labels(&truth, &pred);
            Ok((c.accuracy(), c.f1()))
        })
        .collect::<Result<_>>()?;
    let (acc, f1) = scores.into_iter().unzip();
    Ok(EvalSummary::from_scores(acc, f1))
}
