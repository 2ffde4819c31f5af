//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chatterkit::dataset::FeatureMatrix;
use chatterkit::dtw::{dtw_distance, slope_steps, DtwConfig, GroundMetric};
use chatterkit::eemd::{eemd, SiftConfig};
use chatterkit::fpa::{detect_peaks, min_peak_height, SpectrumEstimate};
use chatterkit::learn::{accuracy, predict, train, ClassifierSpec, Estimator};
use chatterkit::pipeline::{run_pipeline, RunConfig};
use chatterkit::tda::{carlsson_coordinates, rips_persistence_h1, PersistenceDiagram, PointCloud};
use chatterkit::transfer::{enumerate_pairs, Metric, TransferReport};
use chatterkit::wpt::{reconstruct_all, wpt_decompose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn out(line: &str) {
    // Bypasses the harness's output capture so the summary always shows.
    let mut o = std::io::stdout().lock();
    let _ = writeln!(o, "{line}");
    let _ = o.flush();
}

// 1

fn dtw_brute_force(x: &[f64], y: &[f64], cfg: &DtwConfig) -> Option<f64> {
    struct Ctx<'a> {
        x: &'a [f64],
        y: &'a [f64],
        w: usize,
        rule: Option<(usize, usize)>,
        best: Option<f64>,
    }
    fn walk(c: &mut Ctx, i: usize, j: usize, run: usize, debt: usize, cost: f64) {
        if i.abs_diff(j) > c.w {
            return;
        }
        let cost = cost + (c.x[i] - c.y[j]).abs();
        if i + 1 == c.x.len() && j + 1 == c.y.len() {
            c.best = Some(c.best.map_or(cost, |b| b.min(cost)));
            return;
        }
        if i + 1 < c.x.len() && j + 1 < c.y.len() {
            walk(c, i + 1, j + 1, 0, debt.saturating_sub(1), cost);
        }
        if debt == 0 {
            // After `a` consecutive straight steps, `b` diagonal steps are owed.
            let (run, debt) = match c.rule {
                Some((a, b)) if run + 1 == a => (0, b),
                _ => (run + 1, 0),
            };
            if i + 1 < c.x.len() {
                walk(c, i + 1, j, run, debt, cost);
            }
            if j + 1 < c.y.len() {
                walk(c, i, j + 1, run, debt, cost);
            }
        }
    }
    let mut c = Ctx {
        x,
        y,
        w: cfg.window(x.len(), y.len()),
        rule: slope_steps(cfg.slope_p),
        best: None,
    };
    walk(&mut c, 0, 0, 0, 0, 0.0);
    c.best
}

fn dtw_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut infeasible = 0;
    for trial in 0..200 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=8);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let cfg = DtwConfig {
            window_fraction: [0.25, 0.5, 1.0][rng.random_range(0..3)],
            slope_p: [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)],
            ground_metric: GroundMetric::Manhattan,
            z_normalize: false,
        };
        let expected = dtw_brute_force(&x, &y, &cfg);
        match (dtw_distance(&x, &y, &cfg), expected) {
            (Ok(d), Some(e)) => ensure(d == e, format!("trial {trial}: {d} != {e}"))?,
            (Err(_), None) => infeasible += 1,
            (got, e) => return Err(format!("trial {trial}: got {got:?}, oracle {e:?}")),
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), format!("took {t:?}"))?;
    Ok(format!(
        "200 trials exact ({infeasible} infeasible on both sides) in {t:.2?}"
    ))
}

// 2

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Dense Z/2 boundary-matrix reduction of the Rips 2-skeleton.
fn rips_oracle(points: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((dist(&points[i], &points[j]), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let edge_pos: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(k, e)| ((e.1, e.2), k)).collect();
    let mut tris = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let d = [(i, j), (i, k), (j, k)]
                    .iter()
                    .map(|&(a, b)| edges[edge_pos[&(a, b)]].0)
                    .fold(0.0, f64::max);
                tris.push((d, [edge_pos[&(i, j)], edge_pos[&(i, k)], edge_pos[&(j, k)]]));
            }
        }
    }
    tris.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reduced: Vec<Vec<usize>> = Vec::new();
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for (t, (death, faces)) in tris.iter().enumerate() {
        let mut col: Vec<usize> = faces.to_vec();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match owner.get(&low) {
                Some(&o) => {
                    let mut merged: Vec<usize> = col.iter().chain(&reduced[o]).copied().collect();
                    merged.sort_unstable();
                    let mut sym = Vec::new();
                    for v in merged {
                        if sym.last() == Some(&v) {
                            sym.pop();
                        } else {
                            sym.push(v);
                        }
                    }
                    col = sym;
                }
                None => {
                    owner.insert(low, t);
                    if *death > edges[low].0 {
                        pairs.push((edges[low].0, *death));
                    }
                    break;
                }
            }
        }
        reduced.push(col);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
}

fn persistence_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total_pairs = 0;
    for trial in 0..50 {
        let n = rng.random_range(4..=15);
        let dim = rng.random_range(2..=3);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let expected = rips_oracle(&points);
        let got = rips_persistence_h1(&PointCloud { points }, 400, 0).map_err(|e| e.to_string())?;
        ensure(
            got.pairs.len() == expected.len(),
            format!("cloud {trial}: {:?} vs {expected:?}", got.pairs),
        )?;
        for (g, e) in got.pairs.iter().zip(&expected) {
            ensure(
                (g.0 - e.0).abs() <= 1e-9 && (g.1 - e.1).abs() <= 1e-9,
                format!("cloud {trial}: {g:?} vs {e:?}"),
            )?;
        }
        total_pairs += expected.len();
    }
    let circle: Vec<Vec<f64>> = (0..20)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 20.0;
            vec![t.cos(), t.sin()]
        })
        .collect();
    let d = rips_persistence_h1(&PointCloud { points: circle }, 400, 0).map_err(|e| e.to_string())?;
    let long = d.lifetimes().filter(|&l| l > 1.0).count();
    ensure(long == 1, format!("circle has {long} pairs with lifetime > 1"))?;
    Ok(format!(
        "50 clouds agree ({total_pairs} pairs), circle has one long bar"
    ))
}

// 3

fn carlsson_oracle(pairs: &[(f64, f64)]) -> [f64; 5] {
    if pairs.is_empty() {
        return [0.0; 5];
    }
    let d_max = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let life = |p: &(f64, f64)| p.1 - p.0;
    [
        pairs.iter().map(|p| p.0 * life(p)).sum(),
        pairs.iter().map(|p| (d_max - p.1) * life(p)).sum(),
        pairs.iter().map(|p| p.0 * p.0 * life(p).powi(4)).sum(),
        pairs
            .iter()
            .map(|p| (d_max - p.1) * (d_max - p.1) * life(p).powi(4))
            .sum(),
        pairs.iter().map(life).fold(0.0, f64::max),
    ]
}

fn carlsson_fidelity() -> Result<String, String> {
    let d = PersistenceDiagram::new(vec![(1.0, 3.0), (2.0, 4.0)]).map_err(|e| e.to_string())?;
    let f = carlsson_coordinates(&d);
    ensure(f == [6.0, 2.0, 80.0, 16.0, 2.0], format!("{{(1,3),(2,4)}} -> {f:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..1000 {
        let n = rng.random_range(0..12);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let b = rng.random_range(0.0..2.0);
                (b, b + rng.random_range(0.001..1.5))
            })
            .collect();
        let got = carlsson_coordinates(&PersistenceDiagram::new(pairs.clone()).map_err(|e| e.to_string())?);
        let want = carlsson_oracle(&pairs);
        for k in 0..5 {
            let tol = 1e-12 * want[k].abs().max(1.0);
            ensure(
                (got[k] - want[k]).abs() <= tol,
                format!("diagram {trial}, f{}: {} vs {}", k + 1, got[k], want[k]),
            )?;
        }
    }
    Ok("(6, 2, 80, 16, 2) exact, 1000 random diagrams within 1e-12".into())
}

// 4

fn wpt_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.random_range(64..=1024);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tree = wpt_decompose(&x, 4, "db10").map_err(|e| e.to_string())?;
        let y = reconstruct_all(&tree).map_err(|e| e.to_string())?;
        ensure(y.len() == n, format!("signal {trial}: length {} vs {n}", y.len()))?;
        let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(num / den);
        ensure(
            num / den <= 1e-8,
            format!("signal {trial} (n = {n}): relative error {}", num / den),
        )?;
    }
    let x: Vec<f64> = (0..256).map(|i| (i as f64 * 0.1).sin()).collect();
    for k in 1..=4 {
        let tree = wpt_decompose(&x, k, "db10").map_err(|e| e.to_string())?;
        ensure(
            tree.n_packets() == 1 << k,
            format!("level {k}: {} packets", tree.n_packets()),
        )?;
    }
    Ok(format!(
        "100 signals, worst relative error {worst:.1e}; 2^k packets for k = 1..4"
    ))
}

// 5

fn eemd_completeness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (ensemble, noise) = (100, 0.2);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let n = 1000;
        let (f1, f2) = (rng.random_range(5.0..20.0), rng.random_range(40.0..120.0));
        let (a1, a2) = (rng.random_range(0.5..2.0), rng.random_range(0.2..1.0));
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                a1 * (std::f64::consts::TAU * f1 * t).sin() + a2 * (std::f64::consts::TAU * f2 * t).sin()
            })
            .collect();
        let set = eemd(&x, ensemble, noise, trial, &SiftConfig::default()).map_err(|e| e.to_string())?;
        let recon = set.reconstruct();
        let rms = (x.iter().zip(&recon).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64).sqrt();
        let mean = x.iter().sum::<f64>() / n as f64;
        let std = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        let bound = 2.0 * noise * std / (ensemble as f64).sqrt();
        worst = worst.max(rms / bound);
        ensure(rms <= bound, format!("signal {trial}: residual RMS {rms} > {bound}"))?;
    }
    Ok(format!(
        "20 two-tone signals, worst residual at {:.1e} of the bound",
        worst
    ))
}

// 6

fn peak_gating() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut n_peaks = 0;
    for trial in 0..100 {
        let n = rng.random_range(10..600);
        let step = rng.random_range(0.5..20.0);
        let s = SpectrumEstimate {
            abscissa: (0..n).map(|i| i as f64 * step).collect(),
            ordinate: (0..n).map(|_| rng.random_range(0.0..10.0f64).powi(2)).collect(),
        };
        let alpha = rng.random_range(0.0..1.0);
        let mpd = rng.random_range(0.0..30.0 * step);
        let p = detect_peaks(&s, alpha, mpd);
        let y = &s.ordinate;
        ensure(
            p.mph == min_peak_height(y, alpha),
            format!("spectrum {trial}: MPH {}", p.mph),
        )?;
        for (k, &(x, h)) in p.peaks.iter().enumerate() {
            let i = s
                .abscissa
                .iter()
                .position(|&a| a == x)
                .ok_or(format!("spectrum {trial}: unknown abscissa {x}"))?;
            ensure(h == y[i], format!("spectrum {trial}: height mismatch at {x}"))?;
            ensure(
                i > 0 && i + 1 < n && y[i] > y[i - 1] && y[i] > y[i + 1],
                format!("spectrum {trial}: {x} is not a local maximum"),
            )?;
            ensure(h >= p.mph, format!("spectrum {trial}: peak {h} below MPH {}", p.mph))?;
            for &(x2, h2) in &p.peaks[k + 1..] {
                ensure(
                    (x - x2).abs() >= mpd,
                    format!("spectrum {trial}: peaks {x} and {x2} closer than {mpd}"),
                )?;
                ensure(h >= h2, format!("spectrum {trial}: peaks not tallest first"))?;
            }
        }
        n_peaks += p.peaks.len();
    }
    let mut y = vec![0.0; 5];
    y.extend((0..=90).map(|i| i as f64 * 10.0 / 90.0));
    y.extend([10.0; 5]);
    let mph = min_peak_height(&y, 0.1);
    ensure((mph - 1.0).abs() < 1e-12, format!("MPH spot value {mph}"))?;
    Ok(format!("100 spectra ({n_peaks} peaks) gated, MPH(0, 10, 0.1) = {mph}"))
}

// 7 and 9 share small synthetic runs; 8 is the full-size corpus.

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::from_toml(
        r#"
        featurizers = ["fpa", "wpt", "eemd", "tda-cc", "tda-pi", "tda-pl", "tda-tf", "dtw"]
        classifiers = ["lr", "rf"]
        dtw_classifiers = ["knn1", "knn3"]
        seeds = [0, 1, 2]
        [synth]
        seed = 7
        per_class = 6
        [eemd]
        ensemble_size = 10
        [tda]
        max_points = 60
        [dtw]
        z_normalize = false
        "#,
    )
    .expect("small config");
    cfg.base_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    cfg
}

fn protocol_structure() -> Result<String, String> {
    let five = [
        "turning-2.0in",
        "turning-2.5in",
        "turning-3.5in",
        "turning-4.5in",
        "milling",
    ];
    let n5 = enumerate_pairs(&five, false).map_err(|e| e.to_string())?.len();
    let n4 = enumerate_pairs(&five[..4], false).map_err(|e| e.to_string())?.len();
    ensure(n5 == 20 && n4 == 12, format!("{n5} and {n4} pairs"))?;

    let dir = workdir("protocol");
    let report = run_pipeline(&small_config(), &dir).map_err(|e| e.to_string())?.report;
    let pairs = report.pairs();
    ensure(pairs.len() == 20, format!("report covers {} pairs", pairs.len()))?;
    let mut methods = 0;
    for p in &pairs {
        let rows: Vec<_> = report.rows.iter().filter(|r| &r.pair == p).collect();
        methods = methods.max(rows.len());
        let digest = &rows[0].split_digest;
        for r in &rows {
            ensure(
                &r.split_digest == digest,
                format!(
                    "{p}: {} / {} drew {} instead of {digest}",
                    r.featurizer, r.classifier, r.split_digest
                ),
            )?;
        }
    }
    Ok(format!(
        "20 and 12 pairs; all {methods} methods per pair share one split digest"
    ))
}

fn end_to_end() -> Result<String, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/synthetic.toml");
    let cfg = RunConfig::load(&path).map_err(|e| e.to_string())?;
    let per_class = cfg.synth.as_ref().and_then(|s| s.per_class);
    ensure(
        per_class == Some(100),
        format!("shipped config has per_class {per_class:?}"),
    )?;
    ensure(cfg.seeds.len() == 10, format!("{} realizations", cfg.seeds.len()))?;
    let start = Instant::now();
    let report = run_pipeline(&cfg, &workdir("synthetic"))
        .map_err(|e| e.to_string())?
        .report;
    let elapsed = start.elapsed();
    let pairs = report.pairs();
    ensure(pairs.len() == 20, format!("{} pairs", pairs.len()))?;
    let mut summary = Vec::new();
    let mut failed = Vec::new();
    for f in ["fpa", "wpt", "eemd", "tda-cc", "dtw"] {
        let passing = pairs
            .iter()
            .filter(|p| report.best(p, f, Metric::Accuracy).is_some_and(|b| b.mean >= 0.85))
            .count();
        summary.push(format!("{f} {passing}/20"));
        if passing < 16 {
            failed.push(f);
        }
    }
    ensure(elapsed < Duration::from_secs(30 * 60), format!("took {elapsed:?}"))?;
    ensure(
        failed.is_empty(),
        format!("below 16/20: {failed:?} ({})", summary.join(", ")),
    )?;
    Ok(format!("{} in {:.0?}", summary.join(", "), elapsed))
}

fn report_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            let bytes = fs::read(e.path()).map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), bytes))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Result<String, String> {
    let cfg = small_config();
    let (a, b) = (workdir("det-a"), workdir("det-b"));
    run_pipeline(&cfg, &a).map_err(|e| e.to_string())?;
    run_pipeline(&cfg, &b).map_err(|e| e.to_string())?;
    let (fa, fb) = (report_files(&a)?, report_files(&b)?);
    let names = |f: &[(String, Vec<u8>)]| f.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    ensure(names(&fa) == names(&fb), "different file sets")?;
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        ensure(x == y, format!("{name} differs"))?;
    }
    let csvs = fa.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    ensure(csvs > 0, "no CSVs written")?;
    let text =
        String::from_utf8_lossy(&fa.iter().find(|(n, _)| n == "results.csv").ok_or("no results.csv")?.1).into_owned();
    TransferReport::from_results_csv(&text).map_err(|e| e.to_string())?;
    Ok(format!("{csvs} report CSVs byte-identical across two runs"))
}

// 10

fn classifier_sanity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let values: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let c = if i % 2 == 0 { 1.5 } else { -1.5 };
            vec![c + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
        })
        .collect();
    let labels: Vec<bool> = (0..60).map(|i| i % 2 == 0).collect();
    let fm = FeatureMatrix::new(
        (0..60).map(|i| format!("r{i}")).collect(),
        vec!["a".into(), "b".into()],
        values,
        labels,
    )
    .map_err(|e| e.to_string())?;
    let spec = |s: &str| s.parse::<ClassifierSpec>().map_err(|e| e.to_string());

    let rf = train(&spec("rf")?, &fm, 0).map_err(|e| e.to_string())?;
    let Estimator::RandomForest(forest) = &rf.estimator else {
        return Err("rf did not build a forest".into());
    };
    let depth = forest.trees.iter().map(|t| t.depth()).max().unwrap_or(0);
    ensure(
        forest.trees.len() == 100 && depth <= 2,
        format!("{} trees, max depth {depth}", forest.trees.len()),
    )?;

    let mlp = train(&spec("mlp")?, &fm, 0).map_err(|e| e.to_string())?;
    let Estimator::Mlp(net) = &mlp.estimator else {
        return Err("mlp did not build a network".into());
    };
    let hidden: Vec<usize> = net.layers.iter().map(|l| l.n_out).collect();
    ensure(
        hidden[..hidden.len() - 1] == [25, 12, 25] && net.epochs_run == 100 && net.batch_size == 5,
        format!("layers {hidden:?}, {} epochs, batch {}", net.epochs_run, net.batch_size),
    )?;

    let xor = FeatureMatrix::new(
        (0..4).map(|i| format!("x{i}")).collect(),
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![false, false, true, true],
    )
    .map_err(|e| e.to_string())?;
    let svm = train(&spec("svm")?, &xor, 0).map_err(|e| e.to_string())?;
    let acc = accuracy(&xor.labels, &predict(&svm, &xor).map_err(|e| e.to_string())?);
    ensure(acc == 1.0, format!("RBF-SVM XOR training accuracy {acc}"))?;
    Ok(format!(
        "RF 100 trees depth <= {depth}; MLP {hidden:?}, 100 epochs, batch 5; XOR accuracy 1.0"
    ))
}

#[test]
fn acceptance_criteria() {
    let checks: [(&str, Check); 10] = [
        ("DTW oracle equivalence", dtw_oracle),
        ("persistence oracle equivalence", persistence_oracle),
        ("Carlsson coordinate fidelity", carlsson_fidelity),
        ("WPT filter-bank identity", wpt_identity),
        ("EEMD completeness", eemd_completeness),
        ("peak gating", peak_gating),
        ("protocol structure", protocol_structure),
        ("end-to-end synthetic transfer", end_to_end),
        ("determinism", determinism),
        ("classifier sanity", classifier_sanity),
    ];
    let mut failures = Vec::new();
    for (k, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => out(&format!("criterion {:>2} {name}: PASS ({detail})", k + 1)),
            Err(why) => {
                out(&format!("criterion {:>2} {name}: FAIL ({why})", k + 1));
                failures.push(k + 1);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
