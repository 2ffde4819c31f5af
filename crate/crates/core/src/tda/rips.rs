//! One-dimensional persistent homology of the Vietoris-Rips filtration.
//!
//! Pairs are computed by reducing the coboundary matrix (persistent
//! cohomology), which yields the same diagram as boundary reduction but
//! lets almost every column be settled by a single linear scan. Edges of
//! the minimum spanning tree kill 0-cycles and are skipped outright.

use std::cmp::{Ordering, Reverse};
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embed::PointCloud;
use crate::dataset::fmt_f64;
use crate::error::{Error, Result};

/// Multiset of finite (birth, death) pairs with death > birth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    pub pairs: Vec<(f64, f64)>,
}

impl PersistenceDiagram {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        for &(b, d) in &pairs {
            if !(b >= 0.0 && d > b && d.is_finite()) {
                return Err(Error::invalid(format!("invalid persistence pair ({b}, {d})")));
            }
        }
        Ok(PersistenceDiagram { pairs })
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn lifetimes(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|(b, d)| d - b)
    }

    pub fn max_lifetime(&self) -> f64 {
        self.lifetimes().fold(0.0, f64::max)
    }

    /// One `birth death` line per pair.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (b, d) in &self.pairs {
            let _ = writeln!(out, "{} {}", fmt_f64(*b), fmt_f64(*d));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::parse(ln + 1, e.to_string())))
                .collect::<Result<_>>()?;
            if vals.len() != 2 {
                return Err(Error::parse(ln + 1, "expected two columns"));
            }
            pairs.push((vals[0], vals[1]));
        }
        Self::new(pairs)
    }
}

/// Seeded uniform subsample without replacement, keeping time order.
pub fn subsample(cloud: &PointCloud, max_points: usize, seed: u64) -> PointCloud {
    if cloud.len() <= max_points {
        return cloud.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, cloud.len(), max_points).into_vec();
    idx.sort_unstable();
    PointCloud {
        points: idx.into_iter().map(|i| cloud.points[i].clone()).collect(),
    }
}

fn binom2(j: u64) -> u64 {
    j * j.saturating_sub(1) / 2
}

fn binom3(k: u64) -> u64 {
    if k < 3 {
        0
    } else {
        k * (k - 1) * (k - 2) / 6
    }
}

/// Filtration order: diameter ascending, then combinatorial index
/// descending.
fn key_cmp(a: &(f64, u64), b: &(f64, u64)) -> Ordering {
    a.0.total_cmp(&b.0).then(b.1.cmp(&a.1))
}

struct Rips {
    n: usize,
    dist: Vec<f64>,
}

impl Rips {
    fn new(cloud: &PointCloud) -> Self {
        let n = cloud.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = cloud.points[i]
                    .iter()
                    .zip(&cloud.points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Rips { n, dist }
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    fn triangle_index(i: usize, j: usize, k: usize) -> u64 {
        let mut v = [i, j, k];
        v.sort_unstable();
        binom3(v[2] as u64) + binom2(v[1] as u64) + v[0] as u64
    }

    fn triangle(&self, i: usize, j: usize, k: usize) -> (f64, u64) {
        let diam = self.d(i, j).max(self.d(i, k)).max(self.d(j, k));
        (diam, Self::triangle_index(i, j, k))
    }

    /// Cofaces of edge `(i, j)` that come first in the filtration.
    fn min_coface(&self, i: usize, j: usize) -> Option<(f64, u64)> {
        let n = self.n;
        let dij = self.d(i, j);
        let (ri, rj) = (&self.dist[i * n..(i + 1) * n], &self.dist[j * n..(j + 1) * n]);
        let mut best: Option<(f64, u64)> = None;
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let diam = dij.max(ri[k]).max(rj[k]);
            match best {
                Some((d, _)) if diam > d => {}
                Some((d, idx)) if diam == d => {
                    let cand = Self::triangle_index(i, j, k);
                    if cand > idx {
                        best = Some((diam, cand));
                    }
                }
                _ => best = Some((diam, Self::triangle_index(i, j, k))),
            }
        }
        best
    }

    fn push_coboundary(&self, i: usize, j: usize, heap: &mut BinaryHeap<Reverse<u128>>) {
        for k in (0..self.n).filter(|&k| k != i && k != j) {
            let (diam, idx) = self.triangle(i, j, k);
            heap.push(Reverse(pack(diam, idx)));
        }
    }
}

/// Filtration key whose integer order is the filtration order: diameter
/// bits (non-negative floats sort like their bit patterns), then the
/// complemented index.
fn pack(diam: f64, idx: u64) -> u128 {
    (u128::from(diam.to_bits()) << 64) | u128::from(!idx)
}

fn unpack(key: u128) -> (f64, u64) {
    (f64::from_bits((key >> 64) as u64), !(key as u64))
}

/// Pops cancelling duplicates (mod 2) and returns the surviving minimum,
/// leaving it on the heap.
fn heap_pivot(heap: &mut BinaryHeap<Reverse<u128>>) -> Option<(f64, u64)> {
    while let Some(Reverse(top)) = heap.pop() {
        let mut count = 1;
        while heap.peek() == Some(&Reverse(top)) {
            heap.pop();
            count += 1;
        }
        if count % 2 == 1 {
            heap.push(Reverse(top));
            return Some(unpack(top));
        }
    }
    None
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// H1 diagram of the Rips filtration on at most `max_points` points
/// (seeded subsample); pairs are in (birth, death) distance units and
/// zero-length pairs are dropped.
pub fn rips_persistence_h1(cloud: &PointCloud, max_points: usize, seed: u64) -> Result<PersistenceDiagram> {
    let cloud = subsample(cloud, max_points, seed);
    if cloud.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: cloud.len(),
        });
    }
    let rips = Rips::new(&cloud);
    let n = rips.n;

    let mut edges: Vec<(f64, u64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for j in 1..n {
        for i in 0..j {
            edges.push((rips.d(i, j), binom2(j as u64) + i as u64, i, j));
        }
    }
    edges.sort_by(|a, b| key_cmp(&(a.0, a.1), &(b.0, b.1)));

    let mut parent: Vec<usize> = (0..n).collect();
    let mut in_tree = vec![false; edges.len()];
    for (pos, &(_, _, i, j)) in edges.iter().enumerate() {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            in_tree[pos] = true;
        }
    }

    // Pivot triangle index -> owning edge position. Owners that needed
    // reduction keep the list of edges whose coboundaries they sum; their
    // reduced columns are rebuilt in the heap when needed.
    let mut pivot_owner: HashMap<u64, usize> = HashMap::new();
    let mut combos: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut pairs = Vec::new();
    let mut heap = BinaryHeap::new();

    for pos in (0..edges.len()).rev() {
        if in_tree[pos] {
            continue;
        }
        let (birth, _, i, j) = edges[pos];
        let Some(first) = rips.min_coface(i, j) else { continue };
        if let Entry::Vacant(e) = pivot_owner.entry(first.1) {
            e.insert(pos);
            if first.0 > birth {
                pairs.push((birth, first.0));
            }
            continue;
        }
        heap.clear();
        rips.push_coboundary(i, j, &mut heap);
        let mut combo = vec![pos];
        while let Some(pivot) = heap_pivot(&mut heap) {
            match pivot_owner.get(&pivot.1) {
                Some(&owner) => {
                    let added = combos.get(&owner).map_or(std::slice::from_ref(&owner), Vec::as_slice);
                    for &e in added {
                        let (_, _, ei, ej) = edges[e];
                        rips.push_coboundary(ei, ej, &mut heap);
                    }
                    combo.extend_from_slice(added);
                }
                None => {
                    pivot_owner.insert(pivot.1, pos);
                    if pivot.0 > birth {
                        pairs.push((birth, pivot.0));
                    }
                    combo.sort_unstable();
                    let mut odd = Vec::with_capacity(combo.len());
                    for run in combo.chunk_by(|a, b| a == b) {
                        if run.len() % 2 == 1 {
                            odd.push(run[0]);
                        }
                    }
                    if odd.len() > 1 {
                        combos.insert(pos, odd);
                    }
                    break;
                }
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(PersistenceDiagram { pairs })
}
