//! The augmentation sweep: every shape and seed, trained once per
//! augmentation (none, each fixed radius, adaptive), summarized into a long
//! CSV and a shape-by-augmentation table with ranks.

use std::fmt::Write as _;
use std::path::PathBuf;

use adaptrobust::augment::{augment, ExpansionSpec, RadiusRule};
use adaptrobust::datagen::{generate, split, Shape, ShapeSpec, SplitSpec};
use adaptrobust::losses::{adaptive_robust_testtime, binary_loss, robust_loss_fixed_grid};
use adaptrobust::mlp::{Mlp, TrainSpec};
use adaptrobust::{LabeledDataset, RandomStream};
use anyhow::{Context, Result};

use crate::commands::{CommandOutput, TESTTIME_FACTOR};
use crate::config::{write_text, ExperimentConfig};
use crate::render::{render_svg, RenderSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    None,
    Fixed(f64),
    Adaptive(f64),
}

impl Augmentation {
    pub fn tag(&self) -> String {
        match *self {
            Augmentation::None => "none".into(),
            Augmentation::Fixed(r) => RadiusRule::Fixed(r).tag(),
            Augmentation::Adaptive(c) => RadiusRule::Adaptive { c }.tag(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub shapes: Vec<Shape>,
    pub seeds: Vec<u64>,
    pub n: usize,
    pub m: usize,
    pub fixed_radii: Vec<f64>,
    pub c: f64,
    pub train: TrainSpec,
    /// Evaluation radii of the fixed-radius robust loss; the report radius
    /// must be one of them.
    pub radius_grid: Vec<f64>,
    pub r: f64,
    pub probes: usize,
    pub adaptive_probes: usize,
    pub render_samples: usize,
}

impl SweepConfig {
    /// Reads every sweep parameter from `cfg`, recording defaults.
    pub fn from_config(cfg: &mut ExperimentConfig) -> Result<Self> {
        let all = Shape::ALL.map(|s| s.name()).join(",");
        let r = cfg.real_or("r", "0.1")?;
        let mut radius_grid = vec![0.02, 0.05, 0.1, 0.2];
        if !radius_grid.contains(&r) {
            radius_grid.push(r);
            radius_grid.sort_by(f64::total_cmp);
        }
        Ok(SweepConfig {
            shapes: cfg.list_or("shape", &all)?,
            seeds: cfg.list_or("seed", "0,1,2")?,
            n: cfg.parse_or("n", 1000usize)?,
            m: cfg.parse_or("m", 4usize)?,
            fixed_radii: cfg.reals_or("fixed-radius", "0.1,0.5,1,2")?,
            c: cfg.real_or("c", "2/3")?,
            train: TrainSpec {
                epochs: cfg.parse_or("epochs", 2000usize)?,
                learning_rate: cfg.real_or("lr", "0.05")?,
                batch_size: cfg.parse_or("batch", 32usize)?,
                seed: 0,
            },
            radius_grid,
            r,
            probes: cfg.parse_or("probes", 100usize)?,
            adaptive_probes: cfg.parse_or("adaptive-probes", 10usize)?,
            render_samples: cfg.parse_or("samples", 5000usize)?,
        })
    }

    pub fn augmentations(&self) -> Vec<Augmentation> {
        let mut out = vec![Augmentation::None];
        out.extend(self.fixed_radii.iter().map(|&r| Augmentation::Fixed(r)));
        out.push(Augmentation::Adaptive(self.c));
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub shape: Shape,
    pub seed: u64,
    pub augmentation: Augmentation,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub model: Mlp,
    pub binary: f64,
    /// Fixed-radius robust loss at each radius of the config's grid.
    pub robust: Vec<f64>,
    pub adaptive: f64,
}

/// Seed of the (shape, seed) cell family; every augmentation of a family
/// shares the same split so the comparison is paired.
fn family_seed(shape: Shape, seed: u64) -> u64 {
    let idx = Shape::ALL.iter().position(|s| *s == shape).unwrap_or(0) as u64;
    RandomStream::new(seed).child(idx).seed()
}

pub fn run_cell(
    cfg: &SweepConfig,
    shape: Shape,
    seed: u64,
    aug: Augmentation,
) -> Result<SweepCell> {
    let family = RandomStream::new(family_seed(shape, seed));
    let data = generate(&ShapeSpec::new(shape, cfg.n, family.child(0).seed()))?;
    let (original, test) = split(
        &data,
        &SplitSpec {
            train_fraction: 0.8,
            seed: family.child(1).seed(),
        },
    )?;
    let aug_seed = family.child(2).seed();
    let train = match aug {
        Augmentation::None => original,
        Augmentation::Fixed(r) => {
            augment(&original, &ExpansionSpec::fixed(r, cfg.m, aug_seed))?.data
        }
        Augmentation::Adaptive(c) => {
            augment(&original, &ExpansionSpec::adaptive(c, cfg.m, aug_seed))?.data
        }
    };
    let spec = TrainSpec {
        seed: family.child(3).seed(),
        ..cfg.train
    };
    let model = Mlp::init(train.dim(), family.child(4).seed())?.train(&train, &spec)?;
    let h = model.as_classifier(0.5);
    let eval = family.child(5);
    let binary = binary_loss(&h, &test)?.value;
    let robust = robust_loss_fixed_grid(&h, &test, &cfg.radius_grid, cfg.probes, &eval.child(0))?
        .into_iter()
        .map(|rep| rep.value)
        .collect();
    let adaptive = adaptive_robust_testtime(
        &h,
        &test,
        &test,
        TESTTIME_FACTOR,
        cfg.adaptive_probes,
        &eval.child(1),
    )?
    .value;
    Ok(SweepCell {
        shape,
        seed,
        augmentation: aug,
        train,
        test,
        model,
        binary,
        robust,
        adaptive,
    })
}

/// All cells, shape-major, then seed, then augmentation.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &shape in &cfg.shapes {
        for &seed in &cfg.seeds {
            for aug in cfg.augmentations() {
                let cell = run_cell(cfg, shape, seed, aug)
                    .with_context(|| format!("sweep cell {shape} seed {seed} {}", aug.tag()))?;
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}

/// Mean losses of one (shape, augmentation) column over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub shape: Shape,
    pub augmentation: String,
    pub binary: f64,
    pub adaptive: f64,
    /// `1 +` the number of augmentations of the same shape with a strictly
    /// lower mean.
    pub binary_rank: usize,
    pub adaptive_rank: usize,
}

pub fn summarize(cfg: &SweepConfig, cells: &[SweepCell]) -> Vec<TableEntry> {
    let mut table = Vec::new();
    for &shape in &cfg.shapes {
        let means: Vec<(String, f64, f64)> = cfg
            .augmentations()
            .iter()
            .map(|aug| {
                let tag = aug.tag();
                let group: Vec<&SweepCell> = cells
                    .iter()
                    .filter(|c| c.shape == shape && c.augmentation.tag() == tag)
                    .collect();
                let k = group.len().max(1) as f64;
                let binary = group.iter().map(|c| c.binary).sum::<f64>() / k;
                let adaptive = group.iter().map(|c| c.adaptive).sum::<f64>() / k;
                (tag, binary, adaptive)
            })
            .collect();
        for (tag, binary, adaptive) in &means {
            table.push(TableEntry {
                shape,
                augmentation: tag.clone(),
                binary: *binary,
                adaptive: *adaptive,
                binary_rank: 1 + means.iter().filter(|m| m.1 < *binary).count(),
                adaptive_rank: 1 + means.iter().filter(|m| m.2 < *adaptive).count(),
            });
        }
    }
    table
}

pub fn long_csv(cfg: &SweepConfig, cells: &[SweepCell]) -> String {
    let mut out = String::from("shape,seed,augmentation,train_rows,binary");
    for r in &cfg.radius_grid {
        write!(out, ",robust_r{r}").unwrap();
    }
    out.push_str(",adaptive_robust\n");
    for c in cells {
        write!(
            out,
            "{},{},{},{},{}",
            c.shape,
            c.seed,
            c.augmentation.tag(),
            c.train.len(),
            c.binary
        )
        .unwrap();
        for v in &c.robust {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{}", c.adaptive).unwrap();
    }
    out
}

pub fn table_csv(table: &[TableEntry]) -> String {
    let mut out = String::from(
        "shape,augmentation,binary_mean,adaptive_robust_mean,binary_rank,adaptive_rank\n",
    );
    for e in table {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.shape, e.augmentation, e.binary, e.adaptive, e.binary_rank, e.adaptive_rank
        )
        .unwrap();
    }
    out
}

/// Writes reports, models, training sets and, for the first seed of each
/// shape, one decision-region figure per augmentation.
pub fn write_sweep(
    cfg: &SweepConfig,
    cells: &[SweepCell],
    run_dir: &std::path::Path,
    echo: &str,
) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let long = run_dir.join("reports").join("sweep_long.csv");
    write_text(&long, &long_csv(cfg, cells))?;
    let table = run_dir.join("reports").join("sweep_table.csv");
    write_text(&table, &table_csv(&summarize(cfg, cells)))?;
    files.extend([long, table]);
    for c in cells {
        let base = format!("{}_s{}_{}", c.shape, c.seed, c.augmentation.tag());
        let model = run_dir.join("models").join(format!("{base}_mlp.txt"));
        c.model.save(&model)?;
        let data = run_dir.join("data").join(format!("{base}_train.csv"));
        c.train.save_csv(&data)?;
        files.extend([model, data]);
        if Some(&c.seed) == cfg.seeds.first() && c.train.dim() == 2 {
            let spec = RenderSpec {
                samples: cfg.render_samples,
                seed: c.seed,
                title: format!("{} / {}", c.shape, c.augmentation.tag()),
                metadata: echo.to_string(),
            };
            let svg = render_svg(&c.model.as_classifier(0.5), &c.train, &spec)?;
            let fig =
                run_dir
                    .join("figs")
                    .join(format!("{}_{}.svg", c.shape, c.augmentation.tag()));
            write_text(&fig, &svg)?;
            files.push(fig);
        }
    }
    Ok(files)
}

pub fn cmd_sweep(cfg: &mut ExperimentConfig) -> Result<CommandOutput> {
    let sweep = SweepConfig::from_config(cfg)?;
    let run_dir = cfg.run_dir("sweep");
    let cells = run_sweep(&sweep)?;
    let echo = cfg.echo();
    let files = write_sweep(&sweep, &cells, &run_dir, &echo)?;
    cfg.write_echo(&run_dir)?;
    let mut summary = format!(
        "{} cells\n{:<10} {:<14} {:>8} {:>5} {:>9} {:>5}\n",
        cells.len(),
        "shape",
        "augmentation",
        "binary",
        "rank",
        "adaptive",
        "rank"
    );
    for e in summarize(&sweep, &cells) {
        writeln!(
            summary,
            "{:<10} {:<14} {:>8.4} {:>5} {:>9.4} {:>5}",
            e.shape.name(),
            e.augmentation,
            e.binary,
            e.binary_rank,
            e.adaptive,
            e.adaptive_rank
        )?;
    }
    Ok(CommandOutput {
        run_dir,
        files,
        summary,
    })
}
