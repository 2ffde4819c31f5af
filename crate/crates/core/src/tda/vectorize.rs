//! Fixed-length vectorizations of persistence diagrams: Carlsson
//! coordinates, persistence images, landscapes and Lagrange template
//! functions.

use super::rips::PersistenceDiagram;
use crate::error::{Error, Result};

pub const CARLSSON_NAMES: [&str; 5] = ["cc_f1", "cc_f2", "cc_f3", "cc_f4", "cc_f5"];

/// `f1 = sum b l`, `f2 = sum (d_max - d) l`, `f3 = sum b^2 l^4`,
/// `f4 = sum (d_max - d)^2 l^4`, `f5 = max l`, with `l = d - b`.
pub fn carlsson_coordinates(diagram: &PersistenceDiagram) -> [f64; 5] {
    if diagram.is_empty() {
        return [0.0; 5];
    }
    let d_max = diagram.pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut f = [0.0; 5];
    for &(b, d) in &diagram.pairs {
        let l = d - b;
        let l4 = l.powi(4);
        f[0] += b * l;
        f[1] += (d_max - d) * l;
        f[2] += b * b * l4;
        f[3] += (d_max - d).powi(2) * l4;
        f[4] = f64::max(f[4], l);
    }
    f
}

/// Pixel grid in (birth, lifetime) coordinates plus the Gaussian width and
/// the lifetime at which the weight saturates.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub birth_range: (f64, f64),
    pub life_range: (f64, f64),
    pub pixel_size: f64,
    pub sigma: f64,
    pub b_cap: f64,
}

pub const DEFAULT_PIXEL_SIZE: f64 = 0.1;
pub const DEFAULT_SIGMA: f64 = 0.1;

fn padded(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-9);
    (lo - pad * span, hi + pad * span)
}

impl ImageGrid {
    /// Ranges from the pooled diagrams padded by `pad` of their span;
    /// `b_cap` is the largest lifetime seen.
    pub fn fit(diagrams: &[PersistenceDiagram], pixel_size: f64, sigma: f64, pad: f64) -> Result<Self> {
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::InvalidPixelSize(pixel_size));
        }
        let mut b = (f64::INFINITY, f64::NEG_INFINITY);
        let mut l = (f64::INFINITY, f64::NEG_INFINITY);
        for &(birth, death) in diagrams.iter().flat_map(|d| &d.pairs) {
            b = (b.0.min(birth), b.1.max(birth));
            l = (l.0.min(death - birth), l.1.max(death - birth));
        }
        if !b.0.is_finite() {
            b = (0.0, 1.0);
            l = (0.0, 1.0);
        }
        let b_cap = l.1.max(0.0);
        let birth_range = padded(b.0, b.1, pad);
        let life_range = padded(l.0, l.1, pad);
        Ok(ImageGrid {
            birth_range: (birth_range.0.max(0.0), birth_range.1),
            life_range: (life_range.0.max(0.0), life_range.1),
            pixel_size,
            sigma,
            b_cap,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        let count = |(lo, hi): (f64, f64)| (((hi - lo) / self.pixel_size) - 1e-9).ceil().max(1.0) as usize;
        (count(self.birth_range), count(self.life_range))
    }

    pub fn n_features(&self) -> usize {
        let (nb, nl) = self.shape();
        nb * nl
    }

    /// Copy whose ranges also cover every point of `diagram`, with a
    /// 3-sigma margin around points that fell outside.
    pub fn covering(&self, diagram: &PersistenceDiagram) -> ImageGrid {
        let mut g = self.clone();
        let m = 3.0 * self.sigma;
        let grow = |r: (f64, f64), v: f64| {
            let lo = if v < r.0 { (v - m).max(0.0) } else { r.0 };
            let hi = if v > r.1 { v + m } else { r.1 };
            (lo, hi)
        };
        for &(b, d) in &diagram.pairs {
            g.birth_range = grow(g.birth_range, b);
            g.life_range = grow(g.life_range, d - b);
        }
        g
    }

    pub fn weight(&self, lifetime: f64) -> f64 {
        if lifetime <= 0.0 {
            0.0
        } else if self.b_cap <= 0.0 || lifetime >= self.b_cap {
            1.0
        } else {
            lifetime / self.b_cap
        }
    }

    /// Row-major (lifetime rows, birth columns) integrals of the weighted
    /// Gaussian surface over each pixel, on this grid as-is.
    pub fn render(&self, diagram: &PersistenceDiagram) -> Result<Vec<f64>> {
        if !(self.pixel_size > 0.0 && self.pixel_size.is_finite()) {
            return Err(Error::InvalidPixelSize(self.pixel_size));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("sigma must be positive"));
        }
        let (nb, nl) = self.shape();
        let mut img = vec![0.0; nb * nl];
        let scale = self.sigma * std::f64::consts::SQRT_2;
        let cdf = |x: f64| 0.5 * (1.0 + libm::erf(x / scale));
        for &(b, d) in &diagram.pairs {
            let l = d - b;
            let w = self.weight(l);
            if w == 0.0 {
                continue;
            }
            let bx: Vec<f64> = (0..nb)
                .map(|i| {
                    let x0 = self.birth_range.0 + i as f64 * self.pixel_size;
                    cdf(x0 + self.pixel_size - b) - cdf(x0 - b)
                })
                .collect();
            for r in 0..nl {
                let y0 = self.life_range.0 + r as f64 * self.pixel_size;
                let py = cdf(y0 + self.pixel_size - l) - cdf(y0 - l);
                if py == 0.0 {
                    continue;
                }
                for (c, px) in bx.iter().enumerate() {
                    img[r * nb + c] += w * py * px;
                }
            }
        }
        Ok(img)
    }
}

/// Persistence image on `grid`, expanded first to cover the diagram.
pub fn persistence_image(diagram: &PersistenceDiagram, grid: &ImageGrid) -> Result<Vec<f64>> {
    grid.covering(diagram).render(diagram)
}

/// Piecewise-linear function given by its nodes; zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pub nodes: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn eval(&self, x: f64) -> f64 {
        let nodes = &self.nodes;
        if nodes.is_empty() || x < nodes[0].0 || x > nodes[nodes.len() - 1].0 {
            return 0.0;
        }
        let k = nodes.partition_point(|n| n.0 < x);
        if k < nodes.len() && nodes[k].0 == x {
            return nodes[k].1;
        }
        let (x0, y0) = nodes[k - 1];
        let (x1, y1) = nodes[k];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// k-th largest tent value at `x` (k is 1-based).
fn kth_tent(pairs: &[(f64, f64)], k: usize, x: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(pairs.iter().map(|&(b, d)| (x - b).min(d - x).max(0.0)));
    if buf.len() < k {
        return 0.0;
    }
    let idx = buf.len() - k;
    *buf.select_nth_unstable_by(idx, f64::total_cmp).1
}

/// Exact nodes (slope changes, support ends) of the k-th landscape.
pub fn landscape(diagram: &PersistenceDiagram, k: usize) -> PiecewiseLinear {
    let pairs = &diagram.pairs;
    if k == 0 || pairs.len() < k {
        return PiecewiseLinear { nodes: Vec::new() };
    }
    // Every breakpoint is a tent corner or a rising/falling crossing.
    let mut xs = Vec::with_capacity(pairs.len() * (pairs.len() + 2));
    for &(b, d) in pairs {
        xs.push(b);
        xs.push(d);
        for &(_, d2) in pairs {
            if d2 > b {
                xs.push(0.5 * (b + d2));
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut buf = Vec::with_capacity(pairs.len());
    let ys: Vec<f64> = xs.iter().map(|&x| kth_tent(pairs, k, x, &mut buf)).collect();
    let slope = |i: usize, j: usize| (ys[j] - ys[i]) / (xs[j] - xs[i]);
    let mut nodes = Vec::new();
    for i in 0..xs.len() {
        let left = if i == 0 { 0.0 } else { slope(i - 1, i) };
        let right = if i + 1 == xs.len() { 0.0 } else { slope(i, i + 1) };
        let scale = 1.0 + left.abs().max(right.abs());
        let outside_left = i == 0 || (ys[i - 1] == 0.0 && ys[i] == 0.0);
        let outside_right = i + 1 == xs.len() || (ys[i + 1] == 0.0 && ys[i] == 0.0);
        if outside_left && outside_right {
            continue;
        }
        if (left - right).abs() > 1e-9 * scale {
            nodes.push((xs[i], ys[i]));
        }
    }
    PiecewiseLinear { nodes }
}

/// Shared evaluation mesh: sorted, de-duplicated node abscissae of the
/// k-th landscapes of `diagrams`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeMesh {
    pub k: usize,
    pub points: Vec<f64>,
}

impl LandscapeMesh {
    pub fn fit(diagrams: &[PersistenceDiagram], k: usize) -> Self {
        let mut points: Vec<f64> = diagrams
            .iter()
            .flat_map(|d| landscape(d, k).nodes.into_iter().map(|n| n.0))
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        LandscapeMesh { k, points }
    }

    pub fn features(&self, diagram: &PersistenceDiagram) -> Vec<f64> {
        let f = landscape(diagram, self.k);
        self.points.iter().map(|&x| f.eval(x)).collect()
    }
}

/// Mesh fitted on `diagrams` and one feature row per diagram.
pub fn landscape_features(diagrams: &[PersistenceDiagram], k: usize) -> (LandscapeMesh, Vec<Vec<f64>>) {
    let mesh = LandscapeMesh::fit(diagrams, k);
    let rows = diagrams.iter().map(|d| mesh.features(d)).collect();
    (mesh, rows)
}

/// Lagrange template-function meshes over birth (`a`) and lifetime (`b`).
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMesh {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub const DEFAULT_TEMPLATE_NODES: usize = 5;

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn lagrange(nodes: &[f64], i: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != i)
        .map(|(_, &am)| (x - am) / (nodes[i] - am))
        .product()
}

impl TemplateMesh {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        for mesh in [&a, &b] {
            let mut sorted = mesh.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.len() < 2 || sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DegenerateMesh);
            }
        }
        Ok(TemplateMesh { a, b })
    }

    /// Uniform `n x n` mesh over the padded (birth, lifetime) ranges.
    pub fn fit(diagrams: &[PersistenceDiagram], n: usize, pad: f64) -> Result<Self> {
        let grid = ImageGrid::fit(diagrams, 1.0, 1.0, pad)?;
        Self::new(
            uniform(grid.birth_range.0, grid.birth_range.1, n),
            uniform(grid.life_range.0, grid.life_range.1, n),
        )
    }

    pub fn n_features(&self) -> usize {
        self.a.len() * self.b.len()
    }

    fn covers(&self, diagram: &PersistenceDiagram) -> bool {
        let span = |m: &[f64]| {
            (
                m.iter().copied().fold(f64::INFINITY, f64::min),
                m.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let (a0, a1) = span(&self.a);
        let (b0, b1) = span(&self.b);
        diagram
            .pairs
            .iter()
            .all(|&(b, d)| b >= a0 && b <= a1 && d - b >= b0 && d - b <= b1)
    }

    /// Feature `(i, j)` is the sum over points of `|l_i^A(birth) l_j^B(life)|`,
    /// row-major in `i`.
    pub fn features(&self, diagram: &PersistenceDiagram) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features()];
        for &(birth, death) in &diagram.pairs {
            let life = death - birth;
            let la: Vec<f64> = (0..self.a.len()).map(|i| lagrange(&self.a, i, birth)).collect();
            let lb: Vec<f64> = (0..self.b.len()).map(|j| lagrange(&self.b, j, life)).collect();
            for (i, x) in la.iter().enumerate() {
                for (j, y) in lb.iter().enumerate() {
                    out[i * self.b.len() + j] += (x * y).abs();
                }
            }
        }
        out
    }
}

/// Template features with meshes stretched uniformly, if needed, to cover
/// every diagram.
pub fn template_function_features(diagrams: &[PersistenceDiagram], mesh: &TemplateMesh) -> Result<Vec<Vec<f64>>> {
    TemplateMesh::new(mesh.a.clone(), mesh.b.clone())?;
    let mut mesh = mesh.clone();
    if !diagrams.iter().all(|d| mesh.covers(d)) {
        let stretch = |m: &[f64], vals: &mut dyn Iterator<Item = f64>| {
            let mut lo = m.iter().copied().fold(f64::INFINITY, f64::min);
            let mut hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for v in vals {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            uniform(lo, hi, m.len())
        };
        let a = stretch(&mesh.a, &mut diagrams.iter().flat_map(|d| d.pairs.iter().map(|p| p.0)));
        let b = stretch(
            &mesh.b,
            &mut diagrams.iter().flat_map(|d| d.pairs.iter().map(|p| p.1 - p.0)),
        );
        mesh = TemplateMesh::new(a, b)?;
    }
    Ok(diagrams.iter().map(|d| mesh.features(d)).collect())
}
