//! Topological features: delay embedding, Rips H1 persistence and
//! diagram vectorizations.

mod embed;
mod rips;
mod vectorize;

pub use embed::{
    estimate_delay, estimate_dimension_fnn, false_neighbor_fraction, takens_embed, DelayEstimate, EmbeddingParams,
    FnnEstimate, PointCloud, FLATNESS_LIMIT, FNN_CAP,
};
pub use rips::{rips_persistence_h1, subsample, PersistenceDiagram};
pub use vectorize::{
    carlsson_coordinates, landscape, landscape_features, persistence_image, template_function_features, ImageGrid,
    LandscapeMesh, PiecewiseLinear, TemplateMesh, CARLSSON_NAMES, DEFAULT_PIXEL_SIZE, DEFAULT_SIGMA,
    DEFAULT_TEMPLATE_NODES,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TdaMethod {
    Carlsson,
    Image,
    Landscape,
    Template,
}

impl TdaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TdaMethod::Carlsson => "cc",
            TdaMethod::Image => "pi",
            TdaMethod::Landscape => "pl",
            TdaMethod::Template => "tf",
        }
    }
}

impl fmt::Display for TdaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TdaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cc" | "carlsson" => Ok(TdaMethod::Carlsson),
            "pi" | "image" => Ok(TdaMethod::Image),
            "pl" | "landscape" => Ok(TdaMethod::Landscape),
            "tf" | "template" => Ok(TdaMethod::Template),
            other => Err(Error::invalid(format!("unknown TDA method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdaParams {
    /// Fixed delay; estimated per record when `None`.
    pub delay: Option<usize>,
    /// Fixed dimension; estimated per record when `None`.
    pub dimension: Option<usize>,
    pub fnn_threshold: f64,
    pub max_points: usize,
    pub seed: u64,
    pub landscape_k: usize,
    pub pixel_size: f64,
    pub sigma: f64,
    pub template_nodes: usize,
    /// Fractional padding of fitted image/template ranges.
    pub range_pad: f64,
}

impl Default for TdaParams {
    fn default() -> Self {
        TdaParams {
            delay: None,
            dimension: None,
            fnn_threshold: 0.02,
            max_points: 400,
            seed: 0,
            landscape_k: 1,
            pixel_size: DEFAULT_PIXEL_SIZE,
            sigma: DEFAULT_SIGMA,
            template_nodes: DEFAULT_TEMPLATE_NODES,
            range_pad: 0.1,
        }
    }
}

/// Embedding parameters for one series, estimating whatever is not fixed.
pub fn embedding_for(x: &[f64], fs: f64, params: &TdaParams) -> Result<EmbeddingParams> {
    let delay = match params.delay {
        Some(d) => d,
        None => estimate_delay(x, fs)?.delay,
    };
    let dimension = match params.dimension {
        Some(m) => m,
        None => {
            // Very short records cannot support the FNN test at this delay.
            if x.len() <= 10 * delay {
                2
            } else {
                estimate_dimension_fnn(x, delay, params.fnn_threshold)?.dimension
            }
        }
    };
    Ok(EmbeddingParams { dimension, delay })
}

pub fn record_diagram(record: &TimeSeriesRecord, params: &TdaParams) -> Result<PersistenceDiagram> {
    let emb = embedding_for(&record.samples, record.fs, params)?;
    let cloud = takens_embed(&record.samples, emb)?;
    rips_persistence_h1(&cloud, params.max_points, params.seed)
}

/// Vectorizer state fitted on training diagrams and reused unchanged on
/// any other diagrams.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedVectorizer {
    Carlsson,
    Image(ImageGrid),
    Landscape(LandscapeMesh),
    Template(TemplateMesh),
}

impl FittedVectorizer {
    pub fn fit(method: TdaMethod, train: &[PersistenceDiagram], params: &TdaParams) -> Result<Self> {
        Ok(match method {
            TdaMethod::Carlsson => FittedVectorizer::Carlsson,
            TdaMethod::Image => FittedVectorizer::Image(ImageGrid::fit(
                train,
                params.pixel_size,
                params.sigma,
                params.range_pad,
            )?),
            TdaMethod::Landscape => FittedVectorizer::Landscape(LandscapeMesh::fit(train, params.landscape_k)),
            TdaMethod::Template => {
                FittedVectorizer::Template(TemplateMesh::fit(train, params.template_nodes, params.range_pad)?)
            }
        })
    }

    pub fn feature_names(&self) -> Vec<String> {
        match self {
            FittedVectorizer::Carlsson => CARLSSON_NAMES.iter().map(|s| s.to_string()).collect(),
            FittedVectorizer::Image(g) => (0..g.n_features()).map(|i| format!("pi_{i}")).collect(),
            FittedVectorizer::Landscape(m) => (0..m.points.len()).map(|i| format!("pl_{i}")).collect(),
            FittedVectorizer::Template(m) => (0..m.n_features()).map(|i| format!("tf_{i}")).collect(),
        }
    }

    pub fn transform(&self, diagram: &PersistenceDiagram) -> Result<Vec<f64>> {
        Ok(match self {
            FittedVectorizer::Carlsson => carlsson_coordinates(diagram).to_vec(),
            FittedVectorizer::Image(g) => g.render(diagram)?,
            FittedVectorizer::Landscape(m) => m.features(diagram),
            FittedVectorizer::Template(m) => m.features(diagram),
        })
    }
}
