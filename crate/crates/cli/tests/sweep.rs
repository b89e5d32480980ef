use std::fs;

use adaptrobust_cli::config::{ExperimentConfig, Flags};
use adaptrobust_cli::sweep::{cmd_sweep, summarize, SweepConfig};
use adaptrobust_cli::{Cli, Command};
use clap::Parser;
use tempfile::TempDir;

fn small(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::resolve("sweep", &Flags::default()).unwrap();
    c.merge_text(
        "shape=circles,boxes\nseed=0,1\nn=120\nfixed_radius=0.1,0.5\nepochs=5\nsamples=50",
    )
    .unwrap();
    c.set("out", out.display());
    c
}

#[test]
fn small_sweep_is_byte_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ra = cmd_sweep(&mut small(a.path())).unwrap();
    let rb = cmd_sweep(&mut small(b.path())).unwrap();
    assert_eq!(ra.files.len(), rb.files.len());
    for (fa, fb) in ra.files.iter().zip(&rb.files) {
        assert_eq!(
            fs::read(fa).unwrap(),
            fs::read(fb).unwrap(),
            "{}",
            fa.display()
        );
    }
    let table = fs::read_to_string(ra.run_dir.join("reports/sweep_table.csv")).unwrap();
    // 2 shapes x (none, 2 fixed, adaptive)
    assert_eq!(table.lines().count(), 1 + 2 * 4);
    let figs = fs::read_dir(ra.run_dir.join("figs")).unwrap().count();
    assert_eq!(figs, 2 * 4);
    assert!(ra.run_dir.join("config.echo").exists());
}

#[test]
fn ranks_count_strictly_better_columns() {
    let mut cfg = small(std::path::Path::new("unused"));
    let sweep = SweepConfig::from_config(&mut cfg).unwrap();
    let cells = adaptrobust_cli::sweep::run_sweep(&SweepConfig {
        shapes: sweep.shapes[..1].to_vec(),
        seeds: vec![0],
        ..sweep.clone()
    })
    .unwrap();
    let table = summarize(
        &SweepConfig {
            shapes: sweep.shapes[..1].to_vec(),
            ..sweep
        },
        &cells,
    );
    for e in &table {
        let better = table.iter().filter(|o| o.binary < e.binary).count();
        assert_eq!(e.binary_rank, 1 + better);
        let better = table.iter().filter(|o| o.adaptive < e.adaptive).count();
        assert_eq!(e.adaptive_rank, 1 + better);
    }
    assert!(table.iter().any(|e| e.binary_rank == 1));
    for c in &cells {
        assert!(c.robust.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.robust[0] >= c.binary && c.adaptive >= c.binary);
    }
}

#[test]
fn bare_c_flag_means_two_thirds() {
    let cli = Cli::try_parse_from(["adaptrobust", "augment", "--data", "x.csv", "--c"]).unwrap();
    let Command::Augment(flags) = cli.command else {
        panic!("wrong subcommand")
    };
    assert_eq!(flags.c.as_deref(), Some("2/3"));
    assert!(Cli::try_parse_from(["adaptrobust", "scenario"]).is_err());
}

#[test]
fn command_line_definition_is_consistent() {
    use clap::CommandFactory;
    Cli::command().debug_assert();
    let cli =
        Cli::try_parse_from(["adaptrobust", "scenario", "two_point", "--name", "run1"]).unwrap();
    assert!(
        matches!(cli.command, Command::Scenario { ref scenario, .. } if scenario == "two_point")
    );
}
