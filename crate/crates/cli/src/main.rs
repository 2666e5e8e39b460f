//! `lvread`: BER and post-ECC sweeps of list-Viterbi read-channel detectors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lvread::harness::{
    ber_curves, cfr_curves, emit_ber_report, emit_cfr_report, gain_db, run_ber_sweep,
    run_cfr_sweep, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "lvread", version, about = "List-Viterbi read-channel experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bit error rate against SNR for every variant.
    Ber(RunArgs),
    /// Codeword failure rate (block multinomial model) against SNR.
    Cfr(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Directory for CSV and SVG output.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Overrides `master_seed`.
    #[arg(short, long)]
    seed: Option<u64>,
    /// Runs only these variants (plus the reference); repeat or comma-separate.
    #[arg(short, long = "variant", value_delimiter = ',')]
    variants: Vec<String>,
    /// Also writes an SVG plot.
    #[arg(long)]
    plot: bool,
}

impl RunArgs {
    fn load(&self) -> lvread::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if !self.variants.is_empty() {
            cfg.retain_variants(&self.variants)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_gains(cfg: &ExperimentConfig, curves: &[(String, f64, f64)], what: &str, target: f64) {
    let Some(reference) = &cfg.reference else {
        return;
    };
    for v in cfg.variants.iter().filter(|v| &v.name != reference) {
        match gain_db(curves, reference, &v.name, target) {
            Some(g) => println!("gain {} vs {reference} at {what} {:e}: {g:.3} dB", v.name, target),
            None => println!(
                "gain {} vs {reference} at {what} {:e}: not bracketed by the sweep",
                v.name, target
            ),
        }
    }
}

fn run(cli: Cli) -> lvread::Result<()> {
    match cli.command {
        Command::Ber(args) => {
            let cfg = args.load()?;
            let points = run_ber_sweep(&cfg)?;
            for p in &points {
                println!(
                    "{:>8.3} dB  {:<16} ber {:.3e}  ({} / {}){}",
                    p.snr_db,
                    p.variant,
                    p.ber,
                    p.bit_errors,
                    p.bits_simulated,
                    if p.low_confidence { "  low-confidence" } else { "" }
                );
            }
            print_gains(&cfg, &ber_curves(&points), "BER", cfg.target);
            for path in emit_ber_report(&points, &args.out, args.plot)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Cfr(args) => {
            let cfg = args.load()?;
            let points = run_cfr_sweep(&cfg)?;
            for p in &points {
                println!(
                    "{:>8.3} dB  {:<16} cfr {:.3e}  hber {:.3e}  ({} error blocks){}",
                    p.snr_db,
                    p.variant,
                    p.cfr,
                    p.hber,
                    p.error_blocks,
                    if p.low_confidence { "  low-confidence" } else { "" }
                );
            }
            print_gains(&cfg, &cfr_curves(&points), "CFR", cfg.cfr_target);
            for path in emit_cfr_report(&points, &args.out, args.plot)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
