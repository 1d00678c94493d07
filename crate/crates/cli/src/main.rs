//! `harqsim`: run HARQ sweeps, tune the feedback gain, check codebooks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lfc_harq::lfc::{awgn_post_snr, optimize_gamma};
use lfc_harq::multiantenna::load_codebook;
use lfc_harq::sim::{load_study, run_study, write_output, OutputFormat, Study};
use lfc_harq::Error;

#[derive(Parser)]
#[command(name = "harqsim", version, about = "Linear-feedback HARQ link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a spec file: a HARQ sweep, an SNR study or a MISO error-rate study.
    Simulate {
        spec: PathBuf,
        /// Result file; defaults to the spec's `output` or `<name>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
    },
    /// Feedback gain maximizing the AWGN post-combining SNR.
    GammaOpt {
        /// Forward SNR, linear.
        #[arg(long)]
        rho: f64,
        /// Feedback noise variance.
        #[arg(long)]
        sigma2: f64,
        /// Number of rounds.
        #[arg(long)]
        n: usize,
    },
    /// Validate a Grassmannian codebook file.
    CodebookCheck { file: PathBuf },
}

fn run(cli: Cli) -> lfc_harq::Result<()> {
    match cli.command {
        Command::Simulate { spec, out, workers, seed, format } => {
            let mut study = load_study(&spec)?;
            if let Some(s) = seed {
                study.set_seed(s);
            }
            let workers = match (&study, workers) {
                (_, Some(w)) => w,
                (Study::Harq(s), None) => s.workers,
                _ => 0,
            };
            let ext = match format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            let path = out
                .or_else(|| study.output().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(format!("{}.{ext}", study.name())));
            let result = run_study(&study, workers)?;
            write_output(&result, &path, format)?;
            eprintln!("{} rows in {:.1} s -> {}", result.rows, result.wall_time_s, path.display());
            Ok(())
        }
        Command::GammaOpt { rho, sigma2, n } => {
            let gamma = optimize_gamma(rho, sigma2, n)?;
            let snr = awgn_post_snr(rho, sigma2, gamma, n)?;
            let mrc = awgn_post_snr(rho, sigma2, 0.0, n)?;
            println!("gamma = {gamma:.6}");
            println!("snr = {snr:.6} ({:.3} dB)", 10.0 * snr.log10());
            println!("snr_gamma0 = {mrc:.6} ({:.3} dB)", 10.0 * mrc.log10());
            Ok(())
        }
        Command::CodebookCheck { file } => {
            let cb = load_codebook(&file)?;
            println!("mt = {}", cb.mt);
            println!("bits = {}", cb.b);
            println!("vectors = {}", cb.vectors.len());
            println!("min_chordal_distance = {:.9}", cb.min_chordal_distance());
            if let Some(d) = cb.declared_min_dist {
                println!("declared_min_dist = {d:.9}");
            }
            println!("ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
