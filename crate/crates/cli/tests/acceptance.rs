//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs the full augmentation sweep twice.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use adaptrobust::augment::{augment, expand, sample_ball_uniform, ExpansionSpec};
use adaptrobust::datagen::{generate, split, Shape, ShapeSpec, SplitSpec};
use adaptrobust::geometry::BoxSampler;
use adaptrobust::losses::{adaptive_robust_empirical, binary_loss};
use adaptrobust::margin::{margin_profile, nn_sample_bound, Witness};
use adaptrobust::mlp::Mlp;
use adaptrobust::neighbors::NnIndex;
use adaptrobust::scenarios::{
    exact_best, exact_binary_loss, exact_disagreement, exact_robust_loss, scenario_four_point,
    scenario_two_point, FamilyMember, LossKind, TwoRectangles,
};
use adaptrobust::{distance, Label, LabeledDataset, Point, RandomStream};
use adaptrobust_cli::config::{ExperimentConfig, Flags};
use adaptrobust_cli::sweep::cmd_sweep;
use anyhow::{ensure, Context, Result};
use num_rational::Rational64;

type Check = Result<String>;

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<()> {
    ensure!(
        elapsed.as_secs_f64() < limit_s,
        "{what} took {:.1} s, limit {limit_s} s",
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn c1_two_point() -> Check {
    let d = scenario_two_point(q(1, 2))?;
    let r = q(1, 1);
    let (hb, lb) = exact_best(&d, LossKind::Binary)?;
    let rb = exact_robust_loss(&hb, &d, r)?;
    let (hr, lr) = exact_best(&d, LossKind::Robust(r))?;
    let dis = exact_disagreement(&hb, &hr, &d);
    ensure!(lb == q(0, 1), "binary-optimal loss {lb}");
    ensure!(rb == q(1, 1), "binary-optimal robust loss {rb}");
    ensure!(
        hr.is_constant() && lr == q(1, 2),
        "robust optimum {hr} with loss {lr}"
    );
    ensure!(dis == q(1, 2), "disagreement {dis}");
    Ok(format!(
        "{hb}: binary {lb}, robust {rb}; {hr}: robust {lr}; disagreement {dis}"
    ))
}

fn c2_two_rectangles() -> Check {
    let scen = TwoRectangles::new(0.2)?;
    let dis = adaptrobust::losses::disagreement_mass(
        &scen.bayes(),
        &scen.robust_bayes(),
        &scen,
        100_000,
        &RandomStream::new(2),
    )?;
    ensure!((dis - 0.5).abs() <= 0.01, "disagreement {dis}");
    Ok(format!("disagreement {dis:.4}"))
}

fn c3_four_point() -> Check {
    let d = scenario_four_point();
    let h = FamilyMember::Halfspace {
        axis: 1,
        threshold: q(1, 1),
        positive: true,
    };
    let r = q(1, 10);
    let binary = exact_binary_loss(&h, &d);
    let robust = exact_robust_loss(&h, &d, r)?;
    let (best, best_loss) = exact_best(&d, LossKind::Robust(r))?;
    ensure!(
        binary == q(0, 1) && robust == q(0, 1),
        "{h}: binary {binary}, robust {robust}"
    );
    ensure!(best_loss >= robust, "{best} beats it with {best_loss}");
    Ok(format!(
        "{h}: binary {binary}, 0.1-robust {robust}; family minimum {best_loss}"
    ))
}

fn random_dataset(s: &mut RandomStream, n: usize, d: usize) -> LabeledDataset {
    loop {
        let points: Vec<Point> = (0..n)
            .map(|_| Point::new((0..d).map(|_| s.uniform()).collect()).unwrap())
            .collect();
        let labels: Vec<Label> = (0..n).map(|_| Label(s.below(2) as u32)).collect();
        let both = labels.contains(&Label(0)) && labels.contains(&Label(1));
        if both {
            return LabeledDataset::new(points, labels).unwrap();
        }
    }
}

fn c4_non_overlap() -> Check {
    let mut s = RandomStream::new(4);
    let mut pairs = 0usize;
    let mut tightest = f64::INFINITY;
    for i in 0..1000 {
        let d = [1, 2, 5, 10][i % 4];
        let n = 2 + s.below(199);
        let data = random_dataset(&mut s, n, d);
        let balls = expand(&data, 0.5)?;
        for (a, ba) in balls.iter().enumerate() {
            for bb in &balls[a + 1..] {
                if ba.label != bb.label {
                    let gap = distance(&ba.center, &bb.center)? - ba.radius - bb.radius;
                    ensure!(gap >= -1e-9, "dataset {i}: overlap {gap}");
                    tightest = tightest.min(gap);
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!(
        "{pairs} opposite-label pairs, smallest slack {tightest:.2e}"
    ))
}

fn c5_zero_loss() -> Check {
    let mut s = RandomStream::new(5);
    for i in 0..500 {
        let d = [1, 2, 3, 5][i % 4];
        let n = 2 + s.below(99);
        let data = random_dataset(&mut s, n, d);
        let mut seen: Vec<&[f64]> = data.points().iter().map(|p| p.coords()).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ensure!(
            seen.windows(2).all(|w| w[0] != w[1]),
            "dataset {i} has duplicates"
        );
        let nn = NnIndex::new(data.clone())?;
        let loss =
            adaptive_robust_empirical(&nn, &data, 0.5, 100, &RandomStream::new(i as u64))?.value;
        ensure!(loss == 0.0, "dataset {i}: loss {loss}");
    }
    Ok("500 datasets, all losses exactly 0".into())
}

fn nn_test_loss(n: usize, seed: u64) -> Result<f64> {
    let data = generate(&ShapeSpec::new(Shape::Circles, n, seed))?;
    let (train, test) = split(
        &data,
        &SplitSpec {
            train_fraction: 0.8,
            seed,
        },
    )?;
    let aug = augment(&train, &ExpansionSpec::adaptive(0.5, 4, seed))?;
    Ok(binary_loss(&NnIndex::new(aug.data)?, &test)?.value)
}

fn c6_consistency() -> Check {
    let seeds = 0..5u64;
    let mut means = Vec::new();
    for n in [100, 300, 1000] {
        let losses: Vec<f64> = seeds
            .clone()
            .map(|s| nn_test_loss(n, s))
            .collect::<Result<_>>()?;
        if n == 1000 {
            ensure!(
                losses.iter().all(|l| *l <= 0.02),
                "n=1000 losses {losses:?}"
            );
        }
        means.push(losses.iter().sum::<f64>() / losses.len() as f64);
    }
    ensure!(
        means.windows(2).all(|w| w[1] <= w[0]),
        "means over n {means:?}"
    );
    Ok(format!("mean test loss at n=100,300,1000: {means:.4?}"))
}

fn radius_stats(radii: &[f64]) -> (f64, f64) {
    let n = radii.len() as f64;
    (
        radii.iter().sum::<f64>() / n,
        radii.iter().filter(|r| **r < 0.5).count() as f64 / n,
    )
}

fn c7_ball_sampler() -> Check {
    let n = 100_000;
    let origin = Point::from([0.0, 0.0]);
    let mut s = RandomStream::new(7);
    let ours: Vec<f64> = (0..n)
        .map(|_| distance(&sample_ball_uniform(&origin, 1.0, &mut s), &origin).unwrap())
        .collect();
    let mut r = RandomStream::new(8);
    let oracle: Vec<f64> = (0..n)
        .map(|_| loop {
            let (x, y) = (2.0 * r.uniform() - 1.0, 2.0 * r.uniform() - 1.0);
            let rad = (x * x + y * y).sqrt();
            if rad < 1.0 {
                break rad;
            }
        })
        .collect();
    let (mean, inner) = radius_stats(&ours);
    let (omean, oinner) = radius_stats(&oracle);
    ensure!((mean - 2.0 / 3.0).abs() <= 0.01, "mean radius {mean}");
    ensure!((inner - 0.25).abs() <= 0.005, "inner fraction {inner}");
    ensure!(
        (mean - omean).abs() <= 0.01 && (inner - oinner).abs() <= 0.005,
        "oracle {omean} {oinner}"
    );
    Ok(format!(
        "mean radius {mean:.4} (oracle {omean:.4}), inner fraction {inner:.4} (oracle {oinner:.4})"
    ))
}

fn c8_gradient() -> Check {
    let h = 1e-5;
    let mut s = RandomStream::new(8);
    let mut worst = 0.0f64;
    for pair in 0..20 {
        let d = 1 + pair % 4;
        let base = Mlp::init(d, 200 + pair as u64)?;
        let params: Vec<f64> = base
            .params()
            .iter()
            .map(|p| p + 0.1 * s.standard_normal())
            .collect();
        let model = Mlp::from_params(d, params)?;
        let n = 1 + s.below(16);
        let batch = random_dataset(&mut s, n.max(2), d);
        let grad = model.grad(&batch)?;
        for (i, g) in grad.iter().enumerate() {
            let mut plus = model.params().to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (Mlp::from_params(d, plus)?.loss(&batch)?
                - Mlp::from_params(d, minus)?.loss(&batch)?)
                / (2.0 * h);
            let err = (g - fd).abs() / (g.abs() + fd.abs()).max(1e-8);
            ensure!(
                err < 1e-4,
                "pair {pair} param {i}: backprop {g}, difference {fd}"
            );
            worst = worst.max(err);
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn sweep_config(out: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::resolve("sweep", &Flags::default())?;
    cfg.set("out", out.display());
    cfg.set("name", "sweep");
    Ok(cfg)
}

fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    Ok(lines
        .map(|l| {
            header
                .iter()
                .map(|h| h.to_string())
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect())
}

fn c9_ranks(table: &[BTreeMap<String, String>]) -> Check {
    let adaptive: Vec<&BTreeMap<String, String>> = table
        .iter()
        .filter(|row| row["augmentation"].starts_with("adaptive"))
        .collect();
    let binary_ok = adaptive
        .iter()
        .filter(|r| r["binary_rank"].parse::<usize>().unwrap_or(99) <= 2)
        .count();
    let robust_ok = adaptive
        .iter()
        .filter(|r| r["adaptive_rank"].parse::<usize>().unwrap_or(99) <= 2)
        .count();
    let detail = adaptive
        .iter()
        .map(|r| format!("{} {}/{}", r["shape"], r["binary_rank"], r["adaptive_rank"]))
        .collect::<Vec<_>>()
        .join(", ");
    ensure!(
        binary_ok >= 4 && robust_ok >= 4,
        "binary rank <= 2 on {binary_ok}/5, adaptive robust rank <= 2 on {robust_ok}/5 ({detail})"
    );
    Ok(format!(
        "binary rank <= 2 on {binary_ok}/5, adaptive robust on {robust_ok}/5 ({detail})"
    ))
}

fn c10_dominance(long: &[BTreeMap<String, String>]) -> Check {
    let num = |row: &BTreeMap<String, String>, k: &str| row[k].parse::<f64>().unwrap_or(f64::NAN);
    let grid = ["robust_r0.02", "robust_r0.05", "robust_r0.1", "robust_r0.2"];
    for row in long {
        let binary = num(row, "binary");
        let robust: Vec<f64> = grid.iter().map(|k| num(row, k)).collect();
        let cell = format!(
            "{} seed {} {}",
            row["shape"], row["seed"], row["augmentation"]
        );
        ensure!(
            robust.iter().all(|r| *r >= binary),
            "{cell}: robust {robust:?} < binary {binary}"
        );
        ensure!(
            robust.windows(2).all(|w| w[0] <= w[1]),
            "{cell}: robust grid {robust:?}"
        );
        ensure!(
            num(row, "adaptive_robust") >= binary,
            "{cell}: adaptive below binary"
        );
    }
    ensure!(long.len() == 5 * 3 * 6, "{} cells", long.len());
    Ok(format!("{} models checked", long.len()))
}

fn c11_margin() -> Check {
    let h = FamilyMember::Halfspace {
        axis: 0,
        threshold: q(1, 2),
        positive: true,
    };
    let radii: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let p = margin_profile(
        &BoxSampler::unit(1),
        &h,
        Some(&h as &dyn Witness),
        &radii,
        100_000,
        4,
        &RandomStream::new(11),
    )?;
    let mut worst = 0.0f64;
    for (r, v) in radii.iter().zip(&p.values) {
        worst = worst.max((v - (2.0 * r).min(1.0)).abs());
    }
    ensure!(worst <= 0.02, "threshold profile off by {worst}");
    let scen = TwoRectangles::new(0.2)?;
    let hb = scen.bayes();
    let rr = [0.0, 0.05, 0.1, 0.2, 0.5];
    let p = margin_profile(
        &scen,
        &hb,
        Some(&hb as &dyn Witness),
        &rr,
        100_000,
        4,
        &RandomStream::new(12),
    )?;
    let mut slab = 0.0f64;
    for (r, v) in rr.iter().zip(&p.values) {
        slab = slab.max((v - scen.slab_mass(*r)).abs());
    }
    ensure!(slab <= 0.01, "slab profile off by {slab}");
    Ok(format!(
        "threshold max error {worst:.4}, slab max error {slab:.4}"
    ))
}

fn six_digits(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-7 * b.abs()
}

fn c12_bound() -> Check {
    // 3^d d^(d/2) / (e r^d eps delta), re-evaluated in log space
    let oracle = |d: f64, eps: f64, delta: f64, r: f64| {
        (d * 3f64.ln() + 0.5 * d * d.ln() - 1.0 - d * r.ln() - eps.ln() - delta.ln()).exp()
    };
    let one = nn_sample_bound(1, 1.0, 1.0, 1.0)?;
    let two = nn_sample_bound(2, 0.1, 0.1, 0.1)?;
    ensure!(
        six_digits(one, 3.0 / std::f64::consts::E) && six_digits(one, oracle(1.0, 1.0, 1.0, 1.0)),
        "d=1: {one}"
    );
    ensure!(six_digits(two, oracle(2.0, 0.1, 0.1, 0.1)), "d=2: {two}");
    ensure!((two / 6.622e4 - 1.0).abs() < 1e-3, "d=2: {two}");
    for (d, eps, delta, r) in [(3, 0.05, 0.05, 0.12), (5, 0.2, 0.01, 0.3)] {
        let v = nn_sample_bound(d, eps, delta, r)?;
        ensure!(six_digits(v, oracle(d as f64, eps, delta, r)), "d={d}: {v}");
    }
    Ok(format!("d=1: {one:.7}, d=2: {two:.6e}"))
}

fn outputs(root: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    for sub in ["reports", "figs"] {
        for entry in fs::read_dir(root.join(sub))? {
            let path = entry?.path();
            files.insert(
                format!("{sub}/{}", path.file_name().unwrap().to_string_lossy()),
                fs::read(&path)?,
            );
        }
    }
    Ok(files)
}

fn c13_reproducible(first: &Path, second: &Path) -> Check {
    let (a, b) = (outputs(first)?, outputs(second)?);
    ensure!(a.keys().eq(b.keys()), "different file sets");
    for (name, bytes) in &a {
        ensure!(&b[name] == bytes, "{name} differs");
    }
    Ok(format!(
        "{} report and figure files byte-identical",
        a.len()
    ))
}

struct Outcome {
    id: usize,
    title: &'static str,
    result: Check,
    elapsed: Duration,
}

fn timed(
    id: usize,
    title: &'static str,
    limit_s: Option<f64>,
    f: impl FnOnce() -> Check,
) -> Outcome {
    let start = Instant::now();
    let mut result = f();
    let elapsed = start.elapsed();
    if let (Ok(_), Some(limit)) = (&result, limit_s) {
        if let Err(e) = within(elapsed, limit, "criterion") {
            result = Err(e);
        }
    }
    Outcome {
        id,
        title,
        result,
        elapsed,
    }
}

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |id: usize| only.as_ref().is_none_or(|o| o.contains(&id));
    let mut outcomes = Vec::new();
    let mut run = |id, title, limit, f: &dyn Fn() -> Check| {
        if wanted(id) {
            let o = timed(id, title, limit, f);
            report(&o);
            outcomes.push(o);
        }
    };
    run(1, "two-point scenario is exact", Some(1.0), &c1_two_point);
    run(
        2,
        "two-rectangle disagreement is 1/2",
        Some(5.0),
        &c2_two_rectangles,
    );
    run(
        3,
        "four-point threshold is robust-optimal",
        Some(1.0),
        &c3_four_point,
    );
    run(
        4,
        "0.5-expansion balls never overlap",
        Some(30.0),
        &c4_non_overlap,
    );
    run(
        5,
        "1-NN has zero 0.5-adaptive loss",
        Some(60.0),
        &c5_zero_loss,
    );
    run(
        6,
        "1-NN on adaptive augmentation is consistent",
        Some(120.0),
        &c6_consistency,
    );
    run(7, "uniform ball sampler", Some(10.0), &c7_ball_sampler);
    run(8, "MLP gradient check", Some(30.0), &c8_gradient);

    if wanted(9) || wanted(10) || wanted(13) {
        let dir = tempfile::tempdir().expect("temporary directory");
        let first = dir.path().join("first");
        let start = Instant::now();
        let sweep = sweep_config(&first).and_then(|mut c| cmd_sweep(&mut c));
        let sweep_time = start.elapsed();
        let run_dir = first.join("sweep");
        let load = |name: &str| read_csv(&run_dir.join("reports").join(name));
        let mut push = |id, title, result: Check, elapsed| {
            if wanted(id) {
                let o = Outcome {
                    id,
                    title,
                    result,
                    elapsed,
                };
                report(&o);
                outcomes.push(o);
            }
        };
        match sweep {
            Ok(_) => {
                let ranks = load("sweep_table.csv")
                    .and_then(|t| c9_ranks(&t))
                    .and_then(|msg| within(sweep_time, 900.0, "sweep").map(|_| msg));
                push(
                    9,
                    "adaptive augmentation ranks near the top",
                    ranks,
                    sweep_time,
                );
                push(
                    10,
                    "estimator dominance and monotonicity",
                    load("sweep_long.csv").and_then(|t| c10_dominance(&t)),
                    sweep_time,
                );
                if wanted(13) {
                    let second = dir.path().join("second");
                    let start = Instant::now();
                    let again = sweep_config(&second).and_then(|mut c| cmd_sweep(&mut c));
                    let result =
                        again.and_then(|_| c13_reproducible(&run_dir, &second.join("sweep")));
                    push(
                        13,
                        "full sweep is byte-reproducible",
                        result,
                        start.elapsed(),
                    );
                }
            }
            Err(e) => {
                let msg = format!("{e:#}");
                push(
                    9,
                    "adaptive augmentation ranks near the top",
                    Err(anyhow::anyhow!("sweep failed: {msg}")),
                    sweep_time,
                );
                push(
                    10,
                    "estimator dominance and monotonicity",
                    Err(anyhow::anyhow!("sweep failed: {msg}")),
                    sweep_time,
                );
                push(
                    13,
                    "full sweep is byte-reproducible",
                    Err(anyhow::anyhow!("sweep failed: {msg}")),
                    sweep_time,
                );
            }
        }
    }

    let mut run = |id, title, limit, f: &dyn Fn() -> Check| {
        if wanted(id) {
            let o = timed(id, title, limit, f);
            report(&o);
            outcomes.push(o);
        }
    };
    run(
        11,
        "margin profiles match closed forms",
        Some(10.0),
        &c11_margin,
    );
    run(12, "1-NN sample bound formula", Some(1.0), &c12_bound);

    outcomes.sort_by_key(|o| o.id);
    let failed: Vec<usize> = outcomes
        .iter()
        .filter(|o| o.result.is_err())
        .map(|o| o.id)
        .collect();
    println!(
        "acceptance: {} passed, {} failed",
        outcomes.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}

fn report(o: &Outcome) {
    let (status, detail) = match &o.result {
        Ok(msg) => ("PASS", msg.clone()),
        Err(e) => ("FAIL", format!("{e:#}")),
    };
    println!(
        "criterion {:>2} {status} [{:>7.2} s] {}: {detail}",
        o.id,
        o.elapsed.as_secs_f64(),
        o.title
    );
}
