use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::Parser;

use rmt_noise_cli::args::{Cli, Command, GenerateArgs};
use rmt_noise_cli::{load_config, run_study, RunOptions, Study};
use rmt_noise_core::ensemble::{EntryLaw, EnsembleSpec};
use rmt_noise_core::io::{write_matrix, MatrixHeader};
use rmt_noise_core::rng::tag;
use rmt_noise_core::{Error, Streams};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn generate(args: &GenerateArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.ok_or_else(|| anyhow!("--seed is required"))?;
    let spec = EnsembleSpec::new(args.n, args.q, EntryLaw::new(args.law.into()), args.model)?;
    let h = spec.sample(&mut Streams::new(seed).stream(&[tag("generate"), args.n as u64]))?;
    let header = MatrixHeader { n: args.n, q: args.q, model: args.model, seed };
    write_matrix(&args.output, &header, &h)?;
    println!("wrote {} ({} stored entries)", args.output.display(), h.nnz_upper());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let study = match cli.command {
        Command::Generate(a) => return generate(&a, g.seed),
        Command::Sweep => Study::Sweep,
        Command::Variance => Study::Variance,
        Command::Gaps => Study::Gaps,
        Command::Resolvent => Study::Resolvent,
        Command::Er => Study::Er,
        Command::Collapse => Study::Collapse,
        Command::Chatterjee => Study::Chatterjee,
    };
    let path = g.config.ok_or_else(|| anyhow!("--config is required for {}", study.name()))?;
    let cfg = load_config(&path, g.seed, g.dense_cap)?;
    let opts = RunOptions { out: g.out.unwrap_or_else(|| PathBuf::from("out")), workers: g.workers, resume: g.resume };
    let report = run_study(study, &cfg, &opts)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}: {} batches computed, {} already complete, outputs in {}",
        study.name(),
        report.computed,
        report.skipped,
        report.dir.display()
    );
    for p in &report.outputs {
        println!("  {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(Error::Config(items)) = e.downcast_ref::<Error>() {
                eprintln!("error: invalid configuration");
                for item in items {
                    eprintln!("  {item}");
                }
                return ExitCode::from(EXIT_USAGE);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
