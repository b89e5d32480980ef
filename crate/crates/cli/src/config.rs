//! Resolved experiment configuration: `key=value` file values overridden by
//! command-line flags, with every default that a command consults recorded
//! so the echoed configuration replays the run exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adaptrobust::scenarios::{parse_rational, to_f64};
use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ADAPTROBUST_OUT";

/// Keys that locate files but never influence results; they are left out of
/// the echo.
const LOCATION_KEYS: [&str; 2] = ["out", "config"];

const KNOWN_KEYS: [&str; 25] = [
    "shape",
    "n",
    "seed",
    "c",
    "m",
    "fixed-radius",
    "model",
    "epochs",
    "lr",
    "batch",
    "probes",
    "r",
    "epsilon",
    "out",
    "config",
    "data",
    "test-data",
    "ref-data",
    "model-file",
    "name",
    "grid",
    "samples",
    "adaptive-probes",
    "delta",
    "normalize",
];

/// Flags shared by every subcommand. All values are strings here; typing
/// happens on lookup so file and flag values go through one parser.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Shape name, or a comma list for `sweep` (sines, sfigure, nnn, circles, boxes)
    #[arg(long)]
    pub shape: Option<String>,
    /// Number of generated points
    #[arg(long)]
    pub n: Option<String>,
    /// Seed, or a comma list for `sweep`
    #[arg(long)]
    pub seed: Option<String>,
    /// Adaptive expansion factor; `--c` alone means 2/3
    #[arg(long, num_args = 0..=1, default_missing_value = "2/3")]
    pub c: Option<String>,
    /// Samples per ball
    #[arg(long)]
    pub m: Option<String>,
    /// Fixed expansion radius, or a comma list for `sweep`
    #[arg(long = "fixed-radius")]
    pub fixed_radius: Option<String>,
    /// Model kind: mlp or nn1
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    /// Learning rate
    #[arg(long)]
    pub lr: Option<String>,
    /// Mini-batch size
    #[arg(long)]
    pub batch: Option<String>,
    /// Probes per point for fixed-radius losses and margin estimates
    #[arg(long)]
    pub probes: Option<String>,
    /// Robustness radius
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Output root (default: $ADAPTROBUST_OUT, then `out`)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key=value` configuration file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input dataset CSV
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out test CSV
    #[arg(long = "test-data")]
    pub test_data: Option<PathBuf>,
    /// Reference CSV for opposite-label radii in the adaptive loss
    #[arg(long = "ref-data")]
    pub ref_data: Option<PathBuf>,
    /// Saved MLP for `render`
    #[arg(long = "model-file")]
    pub model_file: Option<PathBuf>,
    /// Run name; outputs go to <out>/<name>/
    #[arg(long)]
    pub name: Option<String>,
    /// Comma list of radii for `margin`
    #[arg(long)]
    pub grid: Option<String>,
    /// Monte-Carlo sample count
    #[arg(long)]
    pub samples: Option<String>,
    /// Probes per point for the adaptive loss
    #[arg(long = "adaptive-probes")]
    pub adaptive_probes: Option<String>,
    /// Failure probability for the sample-size bound
    #[arg(long)]
    pub delta: Option<String>,
    /// Min-max normalize loaded CSVs (true/false)
    #[arg(long)]
    pub normalize: Option<String>,
}

impl Flags {
    fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        [
            ("shape", self.shape.clone()),
            ("n", self.n.clone()),
            ("seed", self.seed.clone()),
            ("c", self.c.clone()),
            ("m", self.m.clone()),
            ("fixed-radius", self.fixed_radius.clone()),
            ("model", self.model.clone()),
            ("epochs", self.epochs.clone()),
            ("lr", self.lr.clone()),
            ("batch", self.batch.clone()),
            ("probes", self.probes.clone()),
            ("r", self.r.clone()),
            ("epsilon", self.epsilon.clone()),
            ("out", path(&self.out)),
            ("config", path(&self.config)),
            ("data", path(&self.data)),
            ("test-data", path(&self.test_data)),
            ("ref-data", path(&self.ref_data)),
            ("model-file", path(&self.model_file)),
            ("name", self.name.clone()),
            ("grid", self.grid.clone()),
            ("samples", self.samples.clone()),
            ("adaptive-probes", self.adaptive_probes.clone()),
            ("delta", self.delta.clone()),
            ("normalize", self.normalize.clone()),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    command: String,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Config file first (if `--config` is given), then flags on top.
    pub fn resolve(command: &str, flags: &Flags) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            command: command.to_string(),
            values: BTreeMap::new(),
        };
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.merge_text(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        for (k, v) in flags.entries() {
            cfg.values.insert(k.to_string(), v);
        }
        Ok(cfg)
    }

    /// Applies `key=value` lines; `#` starts a comment, `_` in keys reads as `-`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, found `{raw}`", i + 1))?;
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{}`", i + 1, k.trim());
            }
            self.values.insert(key, v.trim().to_string());
        }
        Ok(())
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// The value, or `default` (recorded in the config) when absent.
    pub fn string_or(&mut self, key: &str, default: &str) -> String {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| default.to_string())
            .clone()
    }

    pub fn parse_or<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            Some(v) => v
                .parse()
                .map_err(|e| anyhow!("--{key}: cannot parse `{v}`: {e}")),
            None => {
                self.set(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn required<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let v = self
            .values
            .get(key)
            .ok_or_else(|| anyhow!("`{}` needs --{key}", self.command))?;
        v.parse()
            .map_err(|e| anyhow!("--{key}: cannot parse `{v}`: {e}"))
    }

    /// A real number written as a decimal or a fraction such as `2/3`.
    pub fn real_or(&mut self, key: &str, default: &str) -> Result<f64> {
        let v = self.string_or(key, default);
        parse_real(&v).with_context(|| format!("--{key}"))
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| parse_real(v).with_context(|| format!("--{key}")))
            .transpose()
    }

    pub fn reals_or(&mut self, key: &str, default: &str) -> Result<Vec<f64>> {
        let v = self.string_or(key, default);
        split_list(&v)
            .map(|s| parse_real(s).with_context(|| format!("--{key}")))
            .collect()
    }

    pub fn list_or<T>(&mut self, key: &str, default: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let v = self.string_or(key, default);
        split_list(&v)
            .map(|s| {
                s.parse()
                    .map_err(|e| anyhow!("--{key}: cannot parse `{s}`: {e}"))
            })
            .collect()
    }

    pub fn flag_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self
            .string_or(key, if default { "true" } else { "false" })
            .as_str()
        {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => bail!("--{key}: expected true or false, found `{other}`"),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    /// `<out>/<name>`, where `out` falls back to `$ADAPTROBUST_OUT` and then
    /// `out`.
    pub fn run_dir(&mut self, default_name: &str) -> PathBuf {
        let root = self
            .path("out")
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let name = self.string_or("name", default_name);
        root.join(name)
    }

    /// Sorted `key=value` lines for every result-relevant setting.
    pub fn echo(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (k, v) in &self.values {
            if !LOCATION_KEYS.contains(&k.as_str()) {
                writeln!(out, "{k}={v}").unwrap();
            }
        }
        out
    }

    pub fn write_echo(&self, run_dir: &Path) -> Result<()> {
        write_text(&run_dir.join("config.echo"), &self.echo())
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    Ok(to_f64(
        &parse_rational(t).map_err(|_| anyhow!("not a number: `{s}`"))?,
    ))
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Writes a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
