//! Acceptance suite: one PASS/FAIL line per criterion. Criteria that cannot
//! run for lack of data are reported as failures but do not abort the suite.

use dlcc::assign::Classifier;
use dlcc::depth::{CovarianceModel, DepthKind};
use dlcc::grouping_max::hierarchy_trace;
use dlcc::kmeans::kmeans;
use dlcc::local_centers::CenterSimilarity;
use dlcc::metrics::{ari, ce, dc_metric, eta_k, eta_x, DcReport};
use dlcc::pipeline::{dlcc_prepared, prepare_similarity};
use dlcc::similarity::{
    build_md_similarity, build_sd_similarity, reflected_sq_norm, SimilarityMatrix,
};
use dlcc::{dlcc, DataMatrix, DlccConfig, Strategy};
use dlcc_cli::generate::{generate, GenSpec, GeneratorKind};
use dlcc_cli::io::{labels_csv, load_csv};
use dlcc_cli::run::{run, RunSpec, SweepGrid};
use dlcc_cli::with_threads;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
    /// Required input data is missing.
    unavailable: bool,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        detail,
        unavailable: false,
    }
}

/// Every DC report produced here, for the structural assertions.
static REPORTS: Mutex<Vec<(DcReport, SimilarityMatrix, Vec<usize>)>> = Mutex::new(Vec::new());

fn dc_report(sim: &SimilarityMatrix, labels: &[usize]) -> DcReport {
    let r = dc_metric(sim, labels, 3).expect("DC report");
    REPORTS
        .lock()
        .unwrap()
        .push((r.clone(), sim.clone(), labels.to_vec()));
    r
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect();
    DataMatrix::new(v, n, d).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Spatial depth of `x_j` in the explicitly built reflected set of `x_i`.
fn brute_sd(x: &DataMatrix, i: usize, j: usize) -> f64 {
    let (n, d) = (x.nrows(), x.ncols());
    let mut pts: Vec<Vec<f64>> = x.rows().map(|r| r.to_vec()).collect();
    for k in (0..n).filter(|&k| k != i) {
        pts.push((0..d).map(|c| 2.0 * x.row(i)[c] - x.row(k)[c]).collect());
    }
    let z = x.row(j);
    let mut acc = vec![0.0; d];
    for p in &pts {
        let norm = (0..d).map(|c| (z[c] - p[c]).powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for c in 0..d {
                acc[c] += (z[c] - p[c]) / norm;
            }
        }
    }
    1.0 - acc.iter().map(|v| v * v).sum::<f64>().sqrt() / pts.len() as f64
}

fn c1_reflection_sd() -> Outcome {
    let t0 = Instant::now();
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    for n in [20, 40, 60] {
        for d in [2, 5, 30] {
            shapes.push((n, d));
        }
    }
    shapes.push((60, 5));
    let worst = shapes
        .par_iter()
        .enumerate()
        .map(|(seed, &(n, d))| {
            let x = gaussian_matrix(n, d, seed as u64);
            let s = build_sd_similarity(&x).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { brute_sd(&x, i, j) };
                    worst = worst.max((s.get(i, j) - want).abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 10.0,
        format!("10 datasets, max |diff| = {worst:.2e} (tol 1e-9), {secs:.2} s (limit 10 s)"),
    )
}

fn c2_reflection_identity() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let d = r.random_range(1..10);
        let x = gaussian_matrix(3, d, r.random());
        let dist = |a: usize, b: usize| {
            (0..d)
                .map(|c| (x.row(a)[c] - x.row(b)[c]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let l: Vec<f64> = (0..9).map(|k| dist(k / 3, k % 3)).collect();
        let (xi, v, u) = (x.row(0), x.row(1), x.row(2));
        let direct: f64 = (0..d).map(|c| (2.0 * xi[c] - v[c] - u[c]).powi(2)).sum();
        let got = reflected_sq_norm(&l, 3, 0, 2, 1);
        let scale = 2.0 * l[1].powi(2) + 2.0 * l[2].powi(2) + l[5].powi(2);
        worst = worst.max((got - direct).abs() / scale);
    }
    outcome(
        worst <= 1e-9,
        format!("10^4 triples, max relative error {worst:.2e} (tol 1e-9)"),
    )
}

fn c3_toy_hierarchy() -> Outcome {
    #[rustfmt::skip]
    let v = vec![
        1.0, 0.6, 0.0, 0.0, 0.0, 0.0,
        0.6, 1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.5, 0.3, 0.2,
        0.0, 0.0, 0.5, 1.0, 0.4, 0.1,
        0.0, 0.0, 0.3, 0.4, 1.0, 0.6,
        0.0, 0.0, 0.2, 0.1, 0.6, 1.0,
    ];
    let tr = hierarchy_trace(&CenterSimilarity::from_values(6, v));
    outcome(
        tr.group_counts == [6, 4, 3, 2] && tr.deltas == [0.6, 0.5, 0.4, 0.0],
        format!("G = {:?}, delta = {:?}", tr.group_counts, tr.deltas),
    )
}

fn iris() -> (DataMatrix, Vec<usize>) {
    let ds = load_csv(data("iris.csv"), Some("species")).unwrap();
    (ds.data, ds.truth.unwrap())
}

/// Drops later copies of repeated rows.
fn dedup(x: &DataMatrix, truth: &[usize]) -> (DataMatrix, Vec<usize>) {
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..x.nrows() {
        if !keep.iter().any(|&j| x.row(j) == x.row(i)) {
            keep.push(i);
        }
    }
    (
        x.select(&keep).unwrap(),
        keep.iter().map(|&i| truth[i]).collect(),
    )
}

fn iris_md_config() -> DlccConfig {
    DlccConfig {
        depth: DepthKind::Md,
        s: 5,
        k: Some(3),
        maxdepth: true,
        ..DlccConfig::default()
    }
}

fn iris_sd_config(seed: u64) -> DlccConfig {
    let mut cfg = DlccConfig {
        depth: DepthKind::Sd,
        s: 56,
        k: Some(3),
        classifier: Classifier::Rf,
        seed,
        ..DlccConfig::default()
    };
    cfg.rf.seed = seed;
    cfg
}

fn c4_iris() -> Outcome {
    let (x, truth) = iris();
    let t0 = Instant::now();
    let md = dlcc(&x, &iris_md_config()).unwrap();
    let md_secs = t0.elapsed().as_secs_f64();
    let (md_ari, md_ce) = (ari(&md.labels, &truth), ce(&md.labels, &truth));

    let (xs, ts) = dedup(&x, &truth);
    let t1 = Instant::now();
    dlcc(&xs, &iris_sd_config(0)).unwrap();
    let sd_secs = t1.elapsed().as_secs_f64();
    let prep = prepare_similarity(&xs, &iris_sd_config(0)).unwrap();
    let aris: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            ari(
                &dlcc_prepared(&xs, &prep, &iris_sd_config(seed))
                    .unwrap()
                    .labels,
                &ts,
            )
        })
        .collect();
    let sd_ari = median(aris);
    let pass = md_ari >= 0.88 && md_ce <= 0.05 && sd_ari >= 0.85 && md_secs < 5.0 && sd_secs < 5.0;
    outcome(
        pass,
        format!(
            "MD ARI {md_ari:.4} (>= 0.88), CE {:.2}% (<= 5%), {md_secs:.2} s; SD median ARI over 100 forest seeds {sd_ari:.4} (>= 0.85), {sd_secs:.2} s per run",
            100.0 * md_ce
        ),
    )
}

fn c5_wine() -> Outcome {
    let ds = load_csv(data("wine.csv"), Some("class")).unwrap();
    let (x, truth) = (ds.data.standardized(), ds.truth.unwrap());
    let t0 = Instant::now();
    let md = dlcc(
        &x,
        &DlccConfig {
            depth: DepthKind::Md,
            s: 46,
            k: Some(3),
            maxdepth: true,
            ifloop: true,
            ..DlccConfig::default()
        },
    )
    .unwrap();
    let md_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let sd = dlcc(
        &x,
        &DlccConfig {
            depth: DepthKind::Sd,
            s: 29,
            k: Some(3),
            ..DlccConfig::default()
        },
    )
    .unwrap();
    let sd_secs = t1.elapsed().as_secs_f64();
    let (a_md, a_sd) = (ari(&md.labels, &truth), ari(&sd.labels, &truth));
    outcome(
        a_md >= 0.90 && a_sd >= 0.85 && md_secs < 5.0 && sd_secs < 5.0,
        format!("MD ARI {a_md:.4} (>= 0.90), {md_secs:.2} s; SD ARI {a_sd:.4} (>= 0.85), {sd_secs:.2} s"),
    )
}

fn c6_seeds() -> Outcome {
    let path = data("seeds.csv");
    if !path.exists() {
        return Outcome {
            pass: false,
            detail: format!("dataset unavailable (place it at {})", path.display()),
            unavailable: true,
        };
    }
    let ds = match load_csv(&path, Some("class")) {
        Ok(ds) => ds,
        Err(e) => return outcome(false, format!("cannot load seeds.csv: {e}")),
    };
    let Some(truth) = ds.truth else {
        return outcome(false, "seeds.csv has no class column".into());
    };
    let (x, truth) = dedup(&ds.data, &truth);
    let s = (x.nrows() as f64).sqrt().ceil() as usize;
    let t0 = Instant::now();
    let r = dlcc(
        &x,
        &DlccConfig {
            depth: DepthKind::Sd,
            s,
            k: Some(3),
            classifier: Classifier::Knn,
            ..DlccConfig::default()
        },
    );
    let secs = t0.elapsed().as_secs_f64();
    match r {
        Ok(r) => {
            let a = ari(&r.labels, &truth);
            outcome(
                a >= 0.70 && secs < 5.0,
                format!("ARI {a:.4} (>= 0.70) at s = {s}, {secs:.2} s"),
            )
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn max_sweep_spec() -> RunSpec {
    RunSpec {
        config: DlccConfig {
            depth: DepthKind::Md,
            strategy: Strategy::Max,
            s: 12,
            classifier: Classifier::Knn,
            ..DlccConfig::default()
        },
        sweep: Some(SweepGrid::default_for(Strategy::Max, 600)),
        stable: true,
    }
}

fn c7_nonconvex() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (kind, n) in [(GeneratorKind::Spirals, 780), (GeneratorKind::Mixed, 600)] {
        let (x, truth) = generate(&GenSpec::new(kind, n, 0)).unwrap();
        let (report, prep) = run(&x, Some(&truth), &max_sweep_spec()).unwrap();
        let a = report.metrics.ari.unwrap();
        dc_report(&prep.sym, &report.result.labels);
        pass &= a >= 0.95;
        parts.push(format!(
            "{kind:?} n = {n}: ARI {a:.4} at s = {}, delta = {:.4}, K = {}",
            report.config.s,
            report.config.delta.unwrap_or(f64::NAN),
            report.result.k
        ));
    }
    outcome(pass, format!("{} (>= 0.95)", parts.join("; ")))
}

fn c8_dc_ranking() -> Outcome {
    let mut wins = 0;
    let mut total = 0;
    let mut worst_margin = f64::INFINITY;
    for (kind, n) in [(GeneratorKind::Moons, 400), (GeneratorKind::Mixed, 600)] {
        for seed in 0..5u64 {
            let (x, truth) = generate(&GenSpec::new(kind, n, seed)).unwrap();
            let k = truth.iter().max().unwrap() + 1;
            let sim = build_sd_similarity(&x).unwrap().symmetrize();
            let merged: Vec<usize> = truth
                .iter()
                .map(|&l| if l == k - 1 { k - 2 } else { l })
                .collect();
            let split = kmeans(&x, k, seed, 100).labels;
            let dt = dc_report(&sim, &truth).dc;
            let dm = dc_report(&sim, &merged).dc;
            let dk = dc_report(&sim, &split).dc;
            total += 1;
            if dt > dm && dt > dk {
                wins += 1;
            }
            worst_margin = worst_margin.min(dt - dm.max(dk));
        }
    }
    outcome(
        wins == total,
        format!("truth ranked first in {wins}/{total} fixtures, smallest margin {worst_margin:.4}"),
    )
}

fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, n: usize, k: usize, used: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..(used + 1).min(k) {
            cur.push(l);
            rec(cur, n, k, used.max(l + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, k, 0, &mut out);
    out
}

fn ari_pairs(p: &[usize], t: &[usize]) -> f64 {
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            match (p[i] == p[j], t[i] == t[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let den = (a + b) * (b + d) + (a + c) * (c + d);
    if den == 0.0 {
        1.0
    } else {
        2.0 * (a * d - b * c) / den
    }
}

fn ce_search(p: &[usize], t: &[usize]) -> f64 {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let best = PERMS
        .iter()
        .map(|perm| p.iter().zip(t).filter(|(a, b)| perm[**a] == **b).count())
        .max()
        .unwrap();
    1.0 - best as f64 / p.len() as f64
}

fn c9_metric_oracles() -> Outcome {
    let mut pairs = 0usize;
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let parts = partitions(n, 3);
        for p in &parts {
            for t in &parts {
                worst = worst.max((ari(p, t) - ari_pairs(p, t)).abs());
                worst = worst.max((ce(p, t) - ce_search(p, t)).abs());
                pairs += 1;
            }
        }
    }
    let crossed = ari(&[1, 1, 2, 2], &[1, 2, 1, 2]);
    outcome(
        worst < 1e-12 && crossed == -0.5,
        format!(
            "{pairs} partition pairs, max |diff| {worst:.1e}; ARI([1,1,2,2],[1,2,1,2]) = {crossed}"
        ),
    )
}

fn random_symmetric(n: usize, levels: u32, seed: u64) -> SimilarityMatrix {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
        for j in i + 1..n {
            let x = r.random_range(0..levels) as f64 / levels as f64;
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    SimilarityMatrix::from_values(n, v, true).unwrap()
}

fn mst_bottleneck(s: &SimilarityMatrix) -> f64 {
    let n = s.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::NEG_INFINITY; n];
    best[0] = f64::INFINITY;
    let mut bottleneck = f64::INFINITY;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .max_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        bottleneck = bottleneck.min(best[u]);
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].max(s.get(u, v));
            }
        }
    }
    bottleneck
}

/// Components of `s >= t` among `nodes`, by depth-first search.
fn components(s: &SimilarityMatrix, nodes: &[usize], t: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; nodes.len()];
    let mut out = Vec::new();
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(a) = stack.pop() {
            comp.push(nodes[a]);
            for b in 0..nodes.len() {
                if !seen[b] && s.get(nodes[a], nodes[b]) >= t {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Highest threshold reached when climbing from the smallest similarity
/// while exactly one component of at least `min` points exists.
fn eta_k_scan(s: &SimilarityMatrix, cluster: &[usize], min: usize) -> (f64, Vec<usize>) {
    let mut levels: Vec<f64> = Vec::new();
    for (a, &i) in cluster.iter().enumerate() {
        for &j in &cluster[a + 1..] {
            levels.push(s.get(i, j));
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut answer = None;
    for &t in &levels {
        let large: Vec<Vec<usize>> = components(s, cluster, t)
            .into_iter()
            .filter(|c| c.len() >= min)
            .collect();
        if large.len() != 1 {
            break;
        }
        let out: Vec<usize> = cluster
            .iter()
            .copied()
            .filter(|i| !large[0].contains(i))
            .collect();
        answer = Some((t, out));
    }
    answer.unwrap()
}

fn c10_eta_oracles() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let mut x_ok = 0;
    for m in 0..50u64 {
        let n = r.random_range(2..40);
        let s = random_symmetric(n, if m % 2 == 0 { 8 } else { 1 << 20 }, m);
        x_ok += usize::from(eta_x(&s) == mst_bottleneck(&s));
    }
    let mut crafted: Vec<SimilarityMatrix> = Vec::new();
    // two sub-blobs (0.9 and 0.8 inside) joined by a 0.5 bridge
    let n = 8;
    let mut v = vec![0.1; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = match (i == j, i < 4, j < 4) {
                (true, _, _) => 1.0,
                (_, true, true) => 0.9,
                (_, false, false) => 0.8,
                _ => 0.1,
            };
        }
    }
    v[3 * n + 4] = 0.5;
    v[4 * n + 3] = 0.5;
    crafted.push(SimilarityMatrix::from_values(n, v, true).unwrap());
    // chain 0.9, 0.8 over three points
    crafted.push(
        SimilarityMatrix::from_values(3, vec![1.0, 0.9, 0.2, 0.9, 1.0, 0.8, 0.2, 0.8, 1.0], true)
            .unwrap(),
    );
    for seed in 0..40u64 {
        crafted.push(random_symmetric(3 + (seed % 8) as usize, 6, 500 + seed));
    }
    let mut k_ok = 0;
    let mut k_total = 0;
    for s in &crafted {
        let all: Vec<usize> = (0..s.n()).collect();
        for min in 2..=s.n().min(4) {
            let (eta, mut out) = eta_k(s, &all, min).unwrap();
            out.sort_unstable();
            k_total += 1;
            k_ok += usize::from((eta, out) == eta_k_scan(s, &all, min));
        }
    }
    let bridge = eta_k(&crafted[0], &(0..8).collect::<Vec<_>>(), 3)
        .unwrap()
        .0;
    outcome(
        x_ok == 50 && k_ok == k_total && bridge == 0.5,
        format!("eta_x = spanning-tree bottleneck on {x_ok}/50; eta_k = scan on {k_ok}/{k_total} (bridge example {bridge})"),
    )
}

fn transform(x: &DataMatrix, a: &[Vec<f64>], b: &[f64]) -> DataMatrix {
    let d = x.ncols();
    x.map_rows(d, |r, out| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = b[k] + (0..d).map(|c| a[k][c] * r[c]).sum::<f64>();
        }
    })
    .unwrap()
}

/// Scaled product of random plane rotations.
fn similarity_map(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let scale = r.random_range(0.2..5.0);
    let mut a: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
        .collect();
    for p in 0..d {
        for q in p + 1..d {
            let th: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let (c, s) = (th.cos(), th.sin());
            for row in a.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = c * x - s * y;
                row[q] = s * x + c * y;
            }
        }
    }
    a
}

fn max_diff(a: &SimilarityMatrix, b: &SimilarityMatrix) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn c11_invariance() -> Outcome {
    let mut sd_worst: f64 = 0.0;
    let mut md_worst: f64 = 0.0;
    for seed in 0..5u64 {
        let x = gaussian_matrix(40, 3, 1100 + seed);
        let y = transform(&x, &similarity_map(3, seed), &[4.0, -2.0, 0.5]);
        sd_worst = sd_worst.max(max_diff(
            &build_sd_similarity(&x).unwrap(),
            &build_sd_similarity(&y).unwrap(),
        ));

        let g = gaussian_matrix(3, 3, 1200 + seed);
        let a: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| f64::from(u8::from(i == j)) + 0.4 * g.row(i)[j])
                    .collect()
            })
            .collect();
        let y = transform(&x, &a, &[-1.0, 3.0, 8.0]);
        let sx = build_md_similarity(&x, &CovarianceModel::global(&x)).unwrap();
        let sy = build_md_similarity(&y, &CovarianceModel::global(&y)).unwrap();
        md_worst = md_worst.max(max_diff(&sx, &sy));
    }
    outcome(
        sd_worst <= 1e-8 && md_worst <= 1e-8,
        format!("SD under similarity maps {sd_worst:.1e}, MD (global) under affine maps {md_worst:.1e} (tol 1e-8)"),
    )
}

fn c12_dc_structure() -> Outcome {
    let reports = REPORTS.lock().unwrap();
    let mut violations = 0;
    let mut clusters = 0;
    for (r, s, labels) in reports.iter() {
        for c in &r.clusters {
            clusters += 1;
            if c.between < r.eta_x {
                violations += 1;
            }
            for &o in &c.outliers {
                let mu = (0..labels.len())
                    .filter(|&j| labels[j] == c.label && !c.outliers.contains(&j))
                    .map(|j| s.get(o, j))
                    .fold(f64::NEG_INFINITY, f64::max);
                if mu >= c.eta_k {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && !reports.is_empty(),
        format!(
            "{} reports, {clusters} clusters, {violations} violations of mu < eta_k or H >= eta_X",
            reports.len()
        ),
    )
}

fn c13_determinism() -> Outcome {
    let (x, truth) = iris();
    let (xs, _) = dedup(&x, &truth);
    let (sp, sp_truth) = generate(&GenSpec::new(GeneratorKind::Spirals, 780, 0)).unwrap();
    type Job<'a> = Box<dyn Fn() -> String + Sync + 'a>;
    let jobs: Vec<(&str, Job)> = vec![
        (
            "iris md",
            Box::new(|| labels_csv(&dlcc(&x, &iris_md_config()).unwrap().labels)),
        ),
        (
            "iris sd forest",
            Box::new(|| labels_csv(&dlcc(&xs, &iris_sd_config(7)).unwrap().labels)),
        ),
        (
            "spirals max sweep",
            Box::new(|| {
                labels_csv(
                    &run(&sp, Some(&sp_truth), &max_sweep_spec())
                        .unwrap()
                        .0
                        .result
                        .labels,
                )
            }),
        ),
    ];
    let mut same = 0;
    for (_, job) in &jobs {
        let outs: Vec<String> = [1, 4, 8]
            .iter()
            .map(|&t| with_threads(Some(t), job))
            .collect();
        same += usize::from(outs.iter().all(|o| o == &outs[0]));
    }
    let names: Vec<&str> = jobs.iter().map(|j| j.0).collect();
    outcome(
        same == jobs.len(),
        format!(
            "{same}/{} configurations byte-identical at 1, 4 and 8 threads ({})",
            jobs.len(),
            names.join(", ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("reflection SD equals brute force", c1_reflection_sd),
        ("reflection identity", c2_reflection_identity),
        ("toy hierarchy trace", c3_toy_hierarchy),
        ("Iris regression", c4_iris),
        ("Wine regression", c5_wine),
        ("Seeds regression", c6_seeds),
        ("max strategy on non-convex data", c7_nonconvex),
        ("DC ranks ground truth first", c8_dc_ranking),
        ("ARI and CE oracles", c9_metric_oracles),
        ("eta oracles", c10_eta_oracles),
        ("similarity invariance", c11_invariance),
        ("DC structural assertions", c12_dc_structure),
        ("determinism across threads", c13_determinism),
    ];
    let mut hard_failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {:>2}. {name}: {} [{:.1} s]",
            i + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        if !o.pass && !o.unavailable {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
