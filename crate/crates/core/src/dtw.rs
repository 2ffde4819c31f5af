//! Dynamic time warping with a Sakoe-Chiba band and slope constraint,
//! distance matrices, and nearest-neighbour voting on precomputed
//! distances.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{fmt_f64, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundMetric {
    #[default]
    Manhattan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtwConfig {
    /// Band half-width as a fraction of the longer series.
    pub window_fraction: f64,
    /// Slope constraint P; 0 disables it.
    pub slope_p: f64,
    pub ground_metric: GroundMetric,
    /// z-normalize each record before matrix computations.
    pub z_normalize: bool,
}

impl Default for DtwConfig {
    fn default() -> Self {
        DtwConfig {
            window_fraction: 0.1,
            slope_p: 1.0,
            ground_metric: GroundMetric::Manhattan,
            z_normalize: true,
        }
    }
}

impl DtwConfig {
    pub fn window(&self, n: usize, m: usize) -> usize {
        (self.window_fraction * n.max(m) as f64).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::invalid("window fraction must lie in (0, 1]"));
        }
        if !(self.slope_p >= 0.0 && self.slope_p.is_finite()) {
            return Err(Error::invalid("slope constraint must be non-negative"));
        }
        Ok(())
    }
}

/// `P = b / a` as small integers: after `a` consecutive horizontal or
/// vertical steps the path owes `b` diagonal steps. `None` when P = 0.
pub fn slope_steps(p: f64) -> Option<(usize, usize)> {
    if p <= 0.0 {
        return None;
    }
    let mut best = (1, 1, f64::INFINITY);
    for a in 1..=8usize {
        for b in 1..=8usize {
            let err = (b as f64 / a as f64 - p).abs();
            if err < best.2 - 1e-12 {
                best = (a, b, err);
            }
        }
    }
    Some((best.0, best.1))
}

/// Step-pattern automaton. States `0..a` count the current run of
/// non-diagonal steps; states `a..a+b` owe `state - a + 1` diagonals.
/// Without a constraint there is a single state.
#[derive(Debug, Clone, Copy)]
struct SlopeAutomaton {
    rule: Option<(usize, usize)>,
}

impl SlopeAutomaton {
    fn n_states(&self) -> usize {
        self.rule.map_or(1, |(a, b)| a + b)
    }

    fn after_diagonal(&self, s: usize) -> usize {
        match self.rule {
            Some((a, _)) if s > a => s - 1,
            _ => 0,
        }
    }

    fn after_straight(&self, s: usize) -> Option<usize> {
        match self.rule {
            None => Some(0),
            Some((a, _)) if s >= a => None,
            Some((a, b)) if s + 1 == a => Some(a + b - 1),
            Some(_) => Some(s + 1),
        }
    }
}

fn ground(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

/// Minimum cumulative Manhattan cost over admissible warping paths from
/// `(0, 0)` to `(n-1, m-1)`; the path may end mid-way through a slope debt.
pub fn dtw_distance(x: &[f64], y: &[f64], cfg: &DtwConfig) -> Result<f64> {
    cfg.validate()?;
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput { needed: 1 });
    }
    let w = cfg.window(n, m);
    let len_diff = n.abs_diff(m);
    if len_diff > w {
        return Err(Error::InfeasibleWindow { window: w, len_diff });
    }
    let rule = slope_steps(cfg.slope_p);
    let best = match rule {
        None => dtw_free(x, y, w),
        Some((1, 1)) => dtw_unit_slope(x, y, w),
        _ => dtw_automaton(x, y, w, SlopeAutomaton { rule }),
    };
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InfeasibleSlope { len_x: n, len_y: m })
    }
}

/// Any step pattern expressed as an automaton, one cost per state.
fn dtw_automaton(x: &[f64], y: &[f64], w: usize, auto: SlopeAutomaton) -> f64 {
    let (n, m) = (x.len(), y.len());
    let ns = auto.n_states();
    let diag_to: Vec<usize> = (0..ns).map(|s| auto.after_diagonal(s)).collect();
    let straight_to: Vec<Option<usize>> = (0..ns).map(|s| auto.after_straight(s)).collect();
    let inf = f64::INFINITY;
    let mut prev = vec![inf; m * ns];
    let mut cur = vec![inf; m * ns];
    for i in 0..n {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(m - 1);
        // Row i-1 covered [lo-1, hi-1] at most; clear what this row may read.
        let clear_lo = lo.saturating_sub(1) * ns;
        cur[clear_lo..(hi + 1) * ns].fill(inf);
        for j in lo..=hi {
            let c = ground(x[i], y[j]);
            let cell = j * ns;
            if i == 0 && j == 0 {
                cur[0] = c;
                continue;
            }
            if i > 0 && j > 0 {
                let from = cell - ns;
                for s in 0..ns {
                    let v = prev[from + s] + c;
                    let t = cell + diag_to[s];
                    if v < cur[t] {
                        cur[t] = v;
                    }
                }
            }
            for s in 0..ns {
                let Some(t) = straight_to[s] else { continue };
                let t = cell + t;
                if i > 0 {
                    let v = prev[cell + s] + c;
                    if v < cur[t] {
                        cur[t] = v;
                    }
                }
                if j > 0 {
                    let v = cur[cell - ns + s] + c;
                    if v < cur[t] {
                        cur[t] = v;
                    }
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let end = (m - 1) * ns;
    prev[end..end + ns].iter().copied().fold(inf, f64::min)
}

// The specialised recurrences below clear and read the rolling rows the
// same way as `dtw_automaton`: bands only move right, so cells a row may
// read outside its predecessor's band are either cleared or never written.

/// No slope constraint.
fn dtw_free(x: &[f64], y: &[f64], w: usize) -> f64 {
    let (n, m) = (x.len(), y.len());
    let inf = f64::INFINITY;
    let mut prev = vec![inf; m];
    let mut cur = vec![inf; m];
    for i in 0..n {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(m - 1);
        cur[lo.saturating_sub(1)..=hi].fill(inf);
        for j in lo..=hi {
            let c = ground(x[i], y[j]);
            if i == 0 && j == 0 {
                cur[0] = c;
                continue;
            }
            let mut best = inf;
            if i > 0 {
                best = prev[j];
                if j > 0 {
                    best = best.min(prev[j - 1]);
                }
            }
            if j > 0 {
                best = best.min(cur[j - 1]);
            }
            cur[j] = best + c;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// P = 1: a horizontal or vertical step must be followed by a diagonal.
/// `free` holds paths whose last step was diagonal, `owe` the others.
fn dtw_unit_slope(x: &[f64], y: &[f64], w: usize) -> f64 {
    let (n, m) = (x.len(), y.len());
    let inf = f64::INFINITY;
    let (mut free_prev, mut owe_prev) = (vec![inf; m], vec![inf; m]);
    let (mut free, mut owe) = (vec![inf; m], vec![inf; m]);
    for i in 0..n {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(m - 1);
        let clear = lo.saturating_sub(1)..=hi;
        free[clear.clone()].fill(inf);
        owe[clear].fill(inf);
        for j in lo..=hi {
            let c = ground(x[i], y[j]);
            if i == 0 && j == 0 {
                free[0] = c;
                continue;
            }
            let mut f = inf;
            let mut o = inf;
            if i > 0 {
                o = free_prev[j];
                if j > 0 {
                    f = free_prev[j - 1].min(owe_prev[j - 1]);
                }
            }
            if j > 0 {
                o = o.min(free[j - 1]);
            }
            free[j] = f + c;
            owe[j] = o + c;
        }
        std::mem::swap(&mut free_prev, &mut free);
        std::mem::swap(&mut owe_prev, &mut owe);
    }
    free_prev[m - 1].min(owe_prev[m - 1])
}

/// Rows and columns carry record ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    /// Sub-matrix with the given row and column positions.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DistanceMatrix {
        DistanceMatrix {
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            col_ids: cols.iter().map(|&c| self.col_ids[c].clone()).collect(),
            values: rows
                .iter()
                .map(|&r| cols.iter().map(|&c| self.values[r][c]).collect())
                .collect(),
        }
    }

    pub fn transpose(&self) -> DistanceMatrix {
        let values = (0..self.n_cols())
            .map(|c| (0..self.n_rows()).map(|r| self.values[r][c]).collect())
            .collect();
        DistanceMatrix {
            row_ids: self.col_ids.clone(),
            col_ids: self.row_ids.clone(),
            values,
        }
    }

    /// Header line `id,<col ids>`, then one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for c in &self.col_ids {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (id, row) in self.row_ids.iter().zip(&self.values) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let col_ids: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut row_ids = Vec::new();
        let mut values = Vec::new();
        for (ln, line) in lines {
            let mut fields = line.split(',');
            row_ids.push(fields.next().unwrap_or_default().trim().to_string());
            let row = fields
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::parse(ln + 1, e.to_string())))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != col_ids.len() {
                return Err(Error::parse(
                    ln + 1,
                    format!("expected {} values, got {}", col_ids.len(), row.len()),
                ));
            }
            values.push(row);
        }
        Ok(DistanceMatrix {
            row_ids,
            col_ids,
            values,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn prepared(records: &[TimeSeriesRecord], cfg: &DtwConfig) -> Vec<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            if cfg.z_normalize {
                stats::z_normalize(&r.samples)
            } else {
                r.samples.clone()
            }
        })
        .collect()
}

fn pair(a: &[f64], b: &[f64], row: &str, col: &str, cfg: &DtwConfig) -> Result<f64> {
    dtw_distance(a, b, cfg).map_err(|e| Error::PairFailed {
        row: row.to_string(),
        col: col.to_string(),
        source: Box::new(e),
    })
}

/// Symmetric matrix over one collection; only the upper triangle is
/// computed.
pub fn pairwise_matrix(records: &[TimeSeriesRecord], cfg: &DtwConfig) -> Result<DistanceMatrix> {
    cfg.validate()?;
    let n = records.len();
    let series = prepared(records, cfg);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| pair(&series[i], &series[j], &records[i].id, &records[j].id, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        values[i][j] = d;
        values[j][i] = d;
    }
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    Ok(DistanceMatrix {
        row_ids: ids.clone(),
        col_ids: ids,
        values,
    })
}

/// `|target| x |source|` matrix; entry `(i, j)` is `dtw(target_i, source_j)`.
pub fn cross_matrix(
    source: &[TimeSeriesRecord],
    target: &[TimeSeriesRecord],
    cfg: &DtwConfig,
) -> Result<DistanceMatrix> {
    cfg.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let s = prepared(source, cfg);
    let t = prepared(target, cfg);
    let values = (0..target.len())
        .into_par_iter()
        .map(|i| {
            (0..source.len())
                .map(|j| pair(&t[i], &s[j], &target[i].id, &source[j].id, cfg))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(DistanceMatrix {
        row_ids: target.iter().map(|r| r.id.clone()).collect(),
        col_ids: source.iter().map(|r| r.id.clone()).collect(),
        values,
    })
}

/// Majority vote among the `k` nearest training columns of each row; a tied
/// vote goes to chatter (`true`). Equal distances keep column order.
pub fn knn_predict(dist: &DistanceMatrix, train_labels: &[bool], k: usize) -> Result<Vec<bool>> {
    if train_labels.len() != dist.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: dist.n_cols(),
            got: train_labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k > dist.n_cols() {
        return Err(Error::KTooLarge {
            k,
            available: dist.n_cols(),
        });
    }
    Ok(dist.values.iter().map(|row| knn_vote(row, train_labels, k)).collect())
}

/// Majority label of the `k` nearest columns; ties in distance go to the
/// lower column and tied votes to chatter.
pub(crate) fn knn_vote(row: &[f64], labels: &[bool], k: usize) -> bool {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let votes = order[..k].iter().filter(|&&c| labels[c]).count();
    2 * votes >= k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::StabilityLabel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive search over every monotone, continuous path in the band,
    /// replaying the slope rule step by step.
    fn brute_force(x: &[f64], y: &[f64], cfg: &DtwConfig) -> Option<f64> {
        let (n, m) = (x.len(), y.len());
        let w = cfg.window(n, m);
        let rule = slope_steps(cfg.slope_p);
        #[allow(clippy::too_many_arguments)]
        fn walk(
            i: usize,
            j: usize,
            run: usize,
            debt: usize,
            cost: f64,
            x: &[f64],
            y: &[f64],
            w: usize,
            rule: Option<(usize, usize)>,
            best: &mut Option<f64>,
        ) {
            if i.abs_diff(j) > w {
                return;
            }
            let cost = cost + (x[i] - y[j]).abs();
            if i == x.len() - 1 && j == y.len() - 1 {
                *best = Some(best.map_or(cost, |b: f64| b.min(cost)));
                return;
            }
            if i + 1 < x.len() && j + 1 < y.len() {
                walk(i + 1, j + 1, 0, debt.saturating_sub(1), cost, x, y, w, rule, best);
            }
            let straight_ok = debt == 0;
            if straight_ok {
                let (next_run, next_debt) = match rule {
                    Some((a, b)) if run + 1 == a => (0, b),
                    _ => (run + 1, 0),
                };
                if i + 1 < x.len() {
                    walk(i + 1, j, next_run, next_debt, cost, x, y, w, rule, best);
                }
                if j + 1 < y.len() {
                    walk(i, j + 1, next_run, next_debt, cost, x, y, w, rule, best);
                }
            }
        }
        let mut best = None;
        walk(0, 0, 0, 0, 0.0, x, y, w, rule, &mut best);
        best
    }

    fn raw(window: f64, p: f64) -> DtwConfig {
        DtwConfig {
            window_fraction: window,
            slope_p: p,
            ground_metric: GroundMetric::Manhattan,
            z_normalize: false,
        }
    }

    fn rec(id: &str, samples: Vec<f64>) -> TimeSeriesRecord {
        TimeSeriesRecord::new(id, samples, 100.0, 1000.0, 1.0, StabilityLabel::Stable, "t").unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn identity_is_zero() {
        let x = [0.3, -1.0, 2.0, 2.0, 0.5];
        assert_eq!(dtw_distance(&x, &x, &DtwConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn single_against_pair() {
        assert_eq!(dtw_distance(&[0.0], &[1.0, 1.0], &DtwConfig::default()).unwrap(), 2.0);
        assert_eq!(brute_force(&[0.0], &[1.0, 1.0], &DtwConfig::default()), Some(2.0));
    }

    #[test]
    fn small_unconstrained_case_matches_oracle() {
        let cfg = raw(1.0, 0.0);
        let (x, y) = ([0.0, 0.0, 1.0], [0.0, 1.0]);
        assert_eq!(dtw_distance(&x, &y, &cfg).unwrap(), brute_force(&x, &y, &cfg).unwrap());
        assert_eq!(dtw_distance(&x, &y, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn slope_rule_limits_stretching() {
        assert_eq!(slope_steps(1.0), Some((1, 1)));
        assert_eq!(slope_steps(0.5), Some((2, 1)));
        assert_eq!(slope_steps(2.0), Some((1, 2)));
        assert_eq!(slope_steps(0.0), None);
        // P = 1 allows at most a 2:1 stretch.
        let cfg = raw(1.0, 1.0);
        assert!(dtw_distance(&[0.0; 3], &[0.0; 6], &cfg).is_ok());
        assert!(matches!(
            dtw_distance(&[0.0; 3], &[0.0; 8], &cfg),
            Err(Error::InfeasibleSlope { .. })
        ));
        assert!(dtw_distance(&[0.0; 3], &[0.0; 8], &raw(1.0, 0.0)).is_ok());
    }

    #[test]
    fn window_too_narrow() {
        let cfg = raw(0.1, 1.0);
        assert!(matches!(
            dtw_distance(&[0.0; 10], &[0.0; 20], &cfg),
            Err(Error::InfeasibleWindow {
                window: 2,
                len_diff: 10
            })
        ));
    }

    #[test]
    fn oracle_on_random_short_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.random_range(1..=7);
            let m = rng.random_range(1..=7);
            let x = random_series(&mut rng, n);
            let y = random_series(&mut rng, m);
            let p = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
            let cfg = raw([0.3, 0.5, 1.0][rng.random_range(0..3)], p);
            let expected = brute_force(&x, &y, &cfg);
            match dtw_distance(&x, &y, &cfg) {
                Ok(d) => assert!((d - expected.unwrap()).abs() < 1e-12, "{x:?} {y:?} {cfg:?}"),
                Err(_) => assert!(expected.is_none(), "{x:?} {y:?} {cfg:?}"),
            }
        }
    }

    #[test]
    fn matrices_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let recs: Vec<TimeSeriesRecord> = (0..10)
            .map(|i| rec(&format!("r{i}"), random_series(&mut rng, 30 + i % 3)))
            .collect();
        let cfg = DtwConfig::default();
        let pw = pairwise_matrix(&recs, &cfg).unwrap();
        assert_eq!(pw, pw.transpose());
        for i in 0..10 {
            assert_eq!(pw.get(i, i), 0.0);
            for j in 0..10 {
                let a = stats::z_normalize(&recs[i].samples);
                let b = stats::z_normalize(&recs[j].samples);
                let d = if i == j {
                    0.0
                } else {
                    dtw_distance(&a, &b, &cfg).unwrap()
                };
                assert!((pw.get(i, j) - d).abs() < 1e-12);
            }
        }
        let cross = cross_matrix(&recs, &recs, &cfg).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert!((cross.get(i, j) - pw.get(i, j)).abs() < 1e-12);
            }
        }
        let one = cross_matrix(&recs[..1], &recs[..1], &cfg).unwrap();
        assert_eq!(one.values, vec![vec![0.0]]);
        let parsed = DistanceMatrix::from_csv(&cross.to_csv()).unwrap();
        assert_eq!(parsed, cross);
    }

    #[test]
    fn identical_records_give_zero_matrix() {
        let recs: Vec<_> = (0..3)
            .map(|i| rec(&format!("r{i}"), vec![1.0, 2.0, 0.5, 3.0]))
            .collect();
        let m = pairwise_matrix(&recs, &DtwConfig::default()).unwrap();
        assert!(m.values.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn failing_pair_is_identified() {
        let recs = vec![
            rec("short", vec![0.0, 1.0]),
            rec("long", (0..40).map(|i| i as f64).collect()),
        ];
        match pairwise_matrix(&recs, &DtwConfig::default()) {
            Err(Error::PairFailed { row, col, .. }) => assert_eq!((row.as_str(), col.as_str()), ("short", "long")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn knn_voting() {
        let dist = DistanceMatrix {
            row_ids: vec!["t".into()],
            col_ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            values: vec![vec![0.1, 0.2, 0.3, 5.0]],
        };
        assert_eq!(knn_predict(&dist, &[false, false, true, true], 3).unwrap(), vec![false]);
        assert_eq!(knn_predict(&dist, &[false, true, true, true], 2).unwrap(), vec![true]);
        assert_eq!(knn_predict(&dist, &[true, false, false, false], 1).unwrap(), vec![true]);
        assert!(matches!(
            knn_predict(&dist, &[true; 4], 5),
            Err(Error::KTooLarge { k: 5, available: 4 })
        ));
        let zero = DistanceMatrix {
            values: vec![vec![1.0, 0.0, 1.0, 1.0]],
            ..dist
        };
        assert_eq!(knn_predict(&zero, &[true, false, true, true], 1).unwrap(), vec![false]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_oracle(
            x in proptest::collection::vec(-5.0f64..5.0, 1..=8),
            y in proptest::collection::vec(-5.0f64..5.0, 1..=8),
            p in prop_oneof![Just(0.0), Just(1.0), Just(0.5)],
            c in -3.0f64..3.0,
        ) {
            let cfg = raw(1.0, p);
            let expected = brute_force(&x, &y, &cfg);
            let got = dtw_distance(&x, &y, &cfg).ok();
            prop_assert_eq!(got.is_some(), expected.is_some());
            if let (Some(g), Some(e)) = (got, expected) {
                prop_assert!((g - e).abs() < 1e-9);
                prop_assert!(g >= 0.0);
                let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
                let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
                prop_assert!((dtw_distance(&xs, &ys, &cfg).unwrap() - g).abs() < 1e-9);
                let swapped = dtw_distance(&y, &x, &cfg).unwrap();
                prop_assert!((swapped - g).abs() < 1e-9);
            }
        }

        #[test]
        fn fast_paths_match_the_automaton(
            x in proptest::collection::vec(-5.0f64..5.0, 1..=40),
            y in proptest::collection::vec(-5.0f64..5.0, 1..=40),
            frac in 0.05f64..1.0,
        ) {
            let w = (frac * x.len().max(y.len()) as f64).ceil() as usize;
            prop_assume!(x.len().abs_diff(y.len()) <= w);
            let free = dtw_automaton(&x, &y, w, SlopeAutomaton { rule: None });
            prop_assert_eq!(dtw_free(&x, &y, w), free);
            let unit = dtw_automaton(&x, &y, w, SlopeAutomaton { rule: Some((1, 1)) });
            prop_assert_eq!(dtw_unit_slope(&x, &y, w), unit);
        }
    }
}
