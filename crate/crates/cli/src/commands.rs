//! Subcommands other than `sweep`. Each resolves its parameters through the
//! config (recording defaults), writes its outputs under the run directory
//! and returns a short human-readable summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adaptrobust::augment::{augment, ExpansionSpec, RadiusRule};
use adaptrobust::datagen::{generate, split, Shape, ShapeSampler, ShapeSpec, SplitSpec};
use adaptrobust::losses::{
    adaptive_robust_testtime, binary_loss, disagreement_mass, reports_to_csv, robust_loss_fixed,
    LossReport, DEFAULT_PROBES, DEFAULT_TESTTIME_PROBES,
};
use adaptrobust::margin::{
    canonical_bayes, inverse_phi, margin_profile, nn_sample_bound, NearestSetClassifier, Witness,
};
use adaptrobust::mlp::{Mlp, TrainSpec};
use adaptrobust::neighbors::NnIndex;
use adaptrobust::scenarios::{
    exact_best, exact_binary_loss, exact_disagreement, exact_margin_mass, exact_robust_loss,
    parse_rational, scenario_four_point, scenario_separable_line, scenario_two_point, to_f64,
    FamilyMember, FiniteDistribution, LossKind, TwoRectangles,
};
use adaptrobust::{
    Classifier, DomainSampler, Label, LabeledDataset, LabeledSampler, Point, RandomStream,
};
use anyhow::{bail, Context, Result};
use num_rational::Rational64;

use crate::config::{write_text, ExperimentConfig};
use crate::render::{render_svg, RenderSpec};

/// Factor of the test-time adaptive loss: probes are drawn from `B(x, 0.5 ρ)`.
pub const TESTTIME_FACTOR: f64 = 0.5;

/// Scenario names accepted by `scenario`.
pub const SCENARIOS: [&str; 4] = [
    "two_point",
    "four_point",
    "two_rectangles",
    "separable_line",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub run_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

fn load(path: &Path) -> Result<LabeledDataset> {
    Ok(LabeledDataset::load_csv(path, false)
        .with_context(|| format!("loading {}", path.display()))?
        .0)
}

pub fn cmd_generate(cfg: &mut ExperimentConfig) -> Result<CommandOutput> {
    let shape: Shape = cfg.required("shape")?;
    let n = cfg.parse_or("n", 1000usize)?;
    let seed = cfg.parse_or("seed", 0u64)?;
    let run_dir = cfg.run_dir("default");
    let data = generate(&ShapeSpec::new(shape, n, seed))?;
    let base = format!("{shape}_n{n}_s{seed}");
    let full = run_dir.join("data").join(format!("{base}.csv"));
    data.save_csv(&full)?;
    let mut files = vec![full];
    if n >= 2 {
        if let Ok((train, test)) = split(
            &data,
            &SplitSpec {
                train_fraction: 0.8,
                seed,
            },
        ) {
            for (part, ds) in [("train", train), ("test", test)] {
                let path = run_dir.join("data").join(format!("{base}_{part}.csv"));
                ds.save_csv(&path)?;
                files.push(path);
            }
        }
    }
    cfg.write_echo(&run_dir)?;
    let summary = format!(
        "generated {n} points of `{shape}` -> {}",
        files[0].display()
    );
    Ok(CommandOutput {
        run_dir,
        files,
        summary,
    })
}

pub fn cmd_augment(cfg: &mut ExperimentConfig) -> Result<CommandOutput> {
    let input = cfg.path("data").context("`augment` needs --data")?;
    let rule = match (cfg.real("c")?, cfg.real("fixed-radius")?) {
        (Some(c), None) => RadiusRule::Adaptive { c },
        (None, Some(r)) => RadiusRule::Fixed(r),
        (Some(_), Some(_)) => bail!("give exactly one of --c and --fixed-radius, not both"),
        (None, None) => bail!("give exactly one of --c (adaptive) and --fixed-radius"),
    };
    let m = cfg.parse_or("m", 4usize)?;
    let seed = cfg.parse_or("seed", 0u64)?;
    let run_dir = cfg.run_dir("default");
    let data = load(&input)?;
    let aug = augment(
        &data,
        &ExpansionSpec {
            radius: rule,
            m,
            include_originals: true,
            seed,
        },
    )?;
    let path = run_dir
        .join("data")
        .join(format!("{}_{}_m{m}.csv", stem(&input), rule.tag()));
    aug.save_csv(&path)?;
    cfg.write_echo(&run_dir)?;
    let summary = format!(
        "augmented {} -> {} rows ({}) -> {}",
        data.len(),
        aug.data.len(),
        rule.tag(),
        path.display()
    );
    Ok(CommandOutput {
        run_dir,
        files: vec![path],
        summary,
    })
}

/// Binary, fixed-radius robust and test-time adaptive losses of `h` on `test`.
pub fn evaluate<C: Classifier + ?Sized>(
    h: &C,
    test: &LabeledDataset,
    reference: &LabeledDataset,
    r: f64,
    probes: usize,
    adaptive_probes: usize,
    seed: u64,
) -> Result<Vec<LossReport>> {
    let root = RandomStream::new(seed);
    Ok(vec![
        binary_loss(h, test)?,
        robust_loss_fixed(h, test, r, probes, &root.child(10))?,
        adaptive_robust_testtime(
            h,
            test,
            reference,
            TESTTIME_FACTOR,
            adaptive_probes,
            &root.child(11),
        )?,
    ])
}

pub fn cmd_train(cfg: &mut ExperimentConfig) -> Result<CommandOutput> {
    let train_path = cfg.path("data").context("`train` needs --data")?;
    let test_path = cfg.path("test-data").context("`train` needs --test-data")?;
    let model = cfg.string_or("model", "mlp");
    let seed = cfg.parse_or("seed", 0u64)?;
    let r = cfg.real_or("r", "0.1")?;
    let probes = cfg.parse_or("probes", DEFAULT_PROBES)?;
    let adaptive_probes = cfg.parse_or("adaptive-probes", DEFAULT_TESTTIME_PROBES)?;
    let normalize = cfg.flag_or("normalize", false)?;
    let run_dir = cfg.run_dir("default");

    let (train, norm) = LabeledDataset::load_csv(&train_path, normalize)
        .with_context(|| format!("loading {}", train_path.display()))?;
    let mut test = load(&test_path)?;
    let mut reference = match cfg.path("ref-data") {
        Some(p) => load(&p)?,
        None => test.clone(),
    };
    if let Some(norm) = &norm {
        test = norm.apply(&test)?;
        reference = norm.apply(&reference)?;
    }
    if train.classes().len() < 2 {
        return Err(adaptrobust::Error::SingleClass.into());
    }
    let name = stem(&train_path);
    let (reports, model_path) = match model.as_str() {
        "mlp" => {
            let spec = TrainSpec {
                epochs: cfg.parse_or("epochs", 2000usize)?,
                learning_rate: cfg.real_or("lr", "0.05")?,
                batch_size: cfg.parse_or("batch", 32usize)?,
                seed,
            };
            let net = Mlp::init(train.dim(), seed)?.train(&train, &spec)?;
            let path = run_dir.join("models").join(format!("{name}_mlp.txt"));
            net.save(&path)?;
            let reports = evaluate(
                &net.as_classifier(0.5),
                &test,
                &reference,
                r,
                probes,
                adaptive_probes,
                seed,
            )?;
            (reports, path)
        }
        "nn1" => {
            let index = NnIndex::new(train.clone())?;
            let path = run_dir.join("models").join(format!("{name}_nn1.csv"));
            train.save_csv(&path)?;
            (
                evaluate(&index, &test, &reference, r, probes, adaptive_probes, seed)?,
                path,
            )
        }
        other => bail!("unknown model `{other}` (expected mlp or nn1)"),
    };
    let report_path = run_dir.join("reports").join(format!("{name}_{model}.csv"));
    write_text(&report_path, &reports_to_csv(&reports))?;
    cfg.write_echo(&run_dir)?;
    let mut summary = format!("trained {model} on {} rows\n", train.len());
    for rep in &reports {
        writeln!(summary, "  {:<16} {:.4}", rep.name, rep.value)?;
    }
    Ok(CommandOutput {
        run_dir,
        files: vec![model_path, report_path],
        summary,
    })
}

/// Uniform over a dataset's points.
struct Empirical<'a>(&'a LabeledDataset);

impl DomainSampler for Empirical<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sample_point(&self, stream: &mut RandomStream) -> Point {
        self.0.point(stream.below(self.0.len())).clone()
    }
}

fn default_grid() -> String {
    (0..=20)
        .map(|i| format!("{}", i as f64 / 100.0))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn cmd_margin(cfg: &mut ExperimentConfig) -> Result<CommandOutput> {
    let radii = cfg.reals_or("grid", &default_grid())?;
    let n = cfg.parse_or("samples", 10_000usize)?;
    let k = cfg.parse_or("probes", 20usize)?;
    let seed = cfg.parse_or("seed", 0u64)?;
    let epsilon = cfg.real_or("epsilon", "0.05")?;
    let delta = cfg.real_or("delta", "0.05")?;
    let run_dir = cfg.run_dir("default");
    let stream = RandomStream::new(seed);

    let (source, profile, dim) = if let Some(path) = cfg.path("data") {
        let data = load(&path)?;
        let h = NearestSetClassifier::from_dataset(&data)?;
        let p = margin_profile(
            &Empirical(&data),
            &h,
            Some(&h as &dyn Witness),
            &radii,
            n,
            k,
            &stream,
        )?;
        (stem(&path), p, data.dim())
    } else if cfg.has("shape") {
        let shape: Shape = cfg.required("shape")?;
        let geo = shape.geometry();
        let h = canonical_bayes(
            geo.support(Label::ZERO, 2000),
            geo.support(Label::ONE, 2000),
        )?;
        let p = margin_profile(
            &ShapeSampler::new(shape),
            &h,
            Some(&h as &dyn Witness),
            &radii,
            n,
            k,
            &stream,
        )?;
        (shape.to_string(), p, 2)
    } else {
        bail!("`margin` needs --shape or --data");
    };
    let path = run_dir.join("reports").join(format!("margin_{source}.csv"));
    profile.save_csv(&path)?;
    let r_star = inverse_phi(&profile, epsilon)?;
    let bound = if r_star > 0.0 {
        nn_sample_bound(dim, epsilon, delta, r_star)?
    } else {
        f64::INFINITY
    };
    cfg.write_echo(&run_dir)?;
    let summary = format!(
        "margin profile of {source} over {} radii -> {}\n  r*(eps={epsilon}) = {r_star}\n  sample bound (delta={delta}) = {bound:.6e}",
        radii.len(),
        path.display()
    );
    Ok(CommandOutput {
        run_dir,
        files: vec![path],
        summary,
    })
}

fn exact_report(name: &str, value: Rational64, d: &FiniteDistribution) -> LossReport {
    LossReport {
        name: name.to_string(),
        value: to_f64(&value),
        probes_per_point: 0,
        seed: 0,
        n_evaluated: d.atoms().len(),
    }
}

fn mc_report(name: &str, value: f64, samples: usize, seed: u64) -> LossReport {
    LossReport {
        name: name.to_string(),
        value,
        probes_per_point: 0,
        seed,
        n_evaluated: samples,
    }
}

fn rational_or(cfg: &mut ExperimentConfig, key: &str, default: &str) -> Result<Rational64> {
    let v = cfg.string_or(key, default);
    parse_rational(&v).with_context(|| format!("--{key}"))
}

fn line(out: &mut String, what: &str, claimed: &str, computed: impl std::fmt::Display) {
    writeln!(out, "  {what:<44} claimed {claimed:<8} computed {computed}").unwrap();
}

pub fn cmd_scenario(cfg: &mut ExperimentConfig, name: &str) -> Result<CommandOutput> {
    if !SCENARIOS.contains(&name) {
        bail!(
            "unknown scenario `{name}` (expected one of: {})",
            SCENARIOS.join(", ")
        );
    }
    let seed = cfg.parse_or("seed", 0u64)?;
    let run_dir = cfg.run_dir("default");
    let mut text = format!("scenario {name}\n");
    let mut reports = Vec::new();
    match name {
        "two_point" | "separable_line" => {
            let gap =
                rational_or(cfg, "epsilon", "1/2").context("the gap is read from --epsilon")?;
            let d = if name == "two_point" {
                scenario_two_point(gap)?
            } else {
                scenario_separable_line(gap)?
            };
            let (hb, lb) = exact_best(&d, LossKind::Binary)?;
            let large = rational_or(cfg, "r", "1")?;
            let (hr, lr) = exact_best(&d, LossKind::Robust(large))?;
            let bayes_robust = exact_robust_loss(&hb, &d, large)?;
            let dis = exact_disagreement(&hb, &hr, &d);
            writeln!(text, "  atoms at 0 and {gap}, r = {large}")?;
            line(
                &mut text,
                &format!("binary-optimal {hb}: binary loss"),
                "0",
                lb,
            );
            line(&mut text, "binary-optimal: robust loss", "1", bayes_robust);
            line(
                &mut text,
                &format!("robust-optimal {hr}: robust loss"),
                "1/2",
                lr,
            );
            line(&mut text, "disagreement mass", "1/2", dis);
            reports.push(exact_report("bayes_binary", lb, &d));
            reports.push(exact_report("bayes_robust", bayes_robust, &d));
            reports.push(exact_report("robust_bayes_robust", lr, &d));
            reports.push(exact_report("disagreement", dis, &d));
            if name == "separable_line" {
                let small = gap / 4;
                let (hs, ls) = exact_best(&d, LossKind::Robust(small))?;
                let phi = exact_margin_mass(&hb, &d, small)?;
                line(
                    &mut text,
                    &format!("robust-optimal at r = {small}: {hs}"),
                    "0",
                    ls,
                );
                line(
                    &mut text,
                    &format!("margin mass of {hb} at r = {small}"),
                    "0",
                    phi,
                );
                reports.push(exact_report("robust_bayes_robust_small_r", ls, &d));
                reports.push(exact_report("bayes_margin_small_r", phi, &d));
            }
        }
        "four_point" => {
            let d = scenario_four_point();
            let r = rational_or(cfg, "r", "1/10")?;
            let h = FamilyMember::Halfspace {
                axis: 1,
                threshold: Rational64::from_integer(1),
                positive: true,
            };
            let binary = exact_binary_loss(&h, &d);
            let robust = exact_robust_loss(&h, &d, r)?;
            let (hr, lr) = exact_best(&d, LossKind::Robust(r))?;
            writeln!(text, "  atoms (-1,0.9) (-1,1.1) (1,0.9) (1,2), r = {r}")?;
            line(&mut text, &format!("{h}: binary loss"), "0", binary);
            line(&mut text, &format!("{h}: robust loss"), "0", robust);
            line(
                &mut text,
                &format!("best robust loss in family ({hr})"),
                "0",
                lr,
            );
            reports.push(exact_report("threshold_binary", binary, &d));
            reports.push(exact_report("threshold_robust", robust, &d));
            reports.push(exact_report("best_robust", lr, &d));
        }
        "two_rectangles" => {
            let eps = cfg.real_or("epsilon", "0.2")?;
            let samples = cfg.parse_or("samples", 100_000usize)?;
            let k = cfg.parse_or("probes", 4usize)?;
            let r = cfg.real_or("r", "0.1")?;
            let scen = TwoRectangles::new(eps)?;
            let (hb, hr) = (scen.bayes(), scen.robust_bayes());
            let root = RandomStream::new(seed);
            let dis = disagreement_mass(&hb, &hr, &scen, samples, &root.child(0))?;
            let mut s = root.child(1);
            let wrong = (0..samples)
                .filter(|_| {
                    let (x, y) = scen.sample_labeled(&mut s);
                    hb.predict(&x) != y
                })
                .count();
            let binary = wrong as f64 / samples as f64;
            let profile = margin_profile(
                &scen,
                &hb,
                Some(&hb as &dyn Witness),
                &[0.0, r],
                samples,
                k,
                &root.child(2),
            )?;
            writeln!(text, "  epsilon = {eps}, {samples} Monte-Carlo samples")?;
            line(
                &mut text,
                &format!("disagreement {hb} vs {hr}"),
                "0.5",
                format!("{dis:.4}"),
            );
            line(
                &mut text,
                &format!("binary loss of {hb}"),
                &format!("{:.4}", scen.bayes_binary_loss()),
                format!("{binary:.4}"),
            );
            line(
                &mut text,
                &format!("margin mass at r = {r} (slab |x2| < r)"),
                &format!("{:.4}", scen.slab_mass(r)),
                format!("{:.4}", profile.values[1]),
            );
            reports.push(mc_report("disagreement", dis, samples, seed));
            reports.push(mc_report("bayes_binary", binary, samples, seed));
            reports.push(mc_report(
                &format!("bayes_margin_r{r}"),
                profile.values[1],
                samples,
                seed,
            ));
        }
        _ => unreachable!("checked against SCENARIOS"),
    }
    let csv = run_dir.join("reports").join(format!("scenario_{name}.csv"));
    let txt = run_dir.join("reports").join(format!("scenario_{name}.txt"));
    write_text(&csv, &reports_to_csv(&reports))?;
    write_text(&txt, &text)?;
    cfg.write_echo(&run_dir)?;
    Ok(CommandOutput {
        run_dir,
        files: vec![csv, txt],
        summary: text,
    })
}

pub fn cmd_render(cfg: &mut ExperimentConfig) -> Result<CommandOutput> {
    let data_path = cfg.path("data").context("`render` needs --data")?;
    let model = cfg.string_or("model", "mlp");
    let samples = cfg.parse_or("samples", 5000usize)?;
    let seed = cfg.parse_or("seed", 0u64)?;
    let run_dir = cfg.run_dir("default");
    let data = load(&data_path)?;
    let spec = RenderSpec {
        samples,
        seed,
        title: format!("{} ({model})", stem(&data_path)),
        metadata: cfg.echo(),
    };
    let svg = match model.as_str() {
        "mlp" => {
            let path = cfg
                .path("model-file")
                .context("`render --model mlp` needs --model-file")?;
            let net = Mlp::load(&path).with_context(|| format!("loading {}", path.display()))?;
            render_svg(&net.as_classifier(0.5), &data, &spec)?
        }
        "nn1" => render_svg(&NnIndex::new(data.clone())?, &data, &spec)?,
        other => bail!("unknown model `{other}` (expected mlp or nn1)"),
    };
    let path = run_dir
        .join("figs")
        .join(format!("{}_{model}.svg", stem(&data_path)));
    write_text(&path, &svg)?;
    cfg.write_echo(&run_dir)?;
    let summary = format!("rendered {samples} ambient points -> {}", path.display());
    Ok(CommandOutput {
        run_dir,
        files: vec![path],
        summary,
    })
}
