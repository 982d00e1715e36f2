use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use randgp::harness::{run, write_reports, ExperimentConfig};
use randgp::Error;

#[derive(Parser)]
#[command(name = "randgp", version, about = "Randomized GP hierarchy experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write <name>.csv / <name>.json.
    Run(RunArgs),
    /// Print the resolved configuration without running.
    Config(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// thm1-ratio, cor2-tail, duhamel-decay, nonresonant-bound,
    /// nls-residual, boardgame-demo, pairing-oracle
    experiment: String,
    /// key = value file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<String>,
    /// Comma separated sweep, or `auto`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    cutoffs: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// Decimal or 0x hex.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    j: Option<String>,
    #[arg(long = "n-max")]
    n_max: Option<String>,
    #[arg(long = "ell-max")]
    ell_max: Option<String>,
    /// independent, dependent or deterministic.
    #[arg(long)]
    mode: Option<String>,
    /// exact, enumerate or montecarlo:N[:seed].
    #[arg(long)]
    method: Option<String>,
    /// gauss:Q or montecarlo:N[:seed].
    #[arg(long)]
    scheme: Option<String>,
    /// mixed, diagonal or sparse.
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Time horizon; `auto` calibrates it where that applies.
    #[arg(long = "T")]
    t: Option<String>,
    /// Output directory (default $RANDGP_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the top Duhamel term σ in text form (duhamel-decay).
    #[arg(long = "dump-term")]
    dump_term: Option<PathBuf>,
    /// Exit with status 3 if the experiment's check fails.
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve(a: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = &a.config {
        let text = std::fs::read_to_string(p).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
    }
    cfg.set("experiment", &a.experiment)?;
    let flags = [
        ("d", &a.d),
        ("alpha", &a.alpha),
        ("cutoffs", &a.cutoffs),
        ("samples", &a.samples),
        ("seed", &a.seed),
        ("k", &a.k),
        ("j", &a.j),
        ("n_max", &a.n_max),
        ("ell_max", &a.ell_max),
        ("mode", &a.mode),
        ("method", &a.method),
        ("scheme", &a.scheme),
        ("ensemble", &a.ensemble),
        ("beta", &a.beta),
        ("T", &a.t),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    if let Some(p) = &a.dump_term {
        cfg.dump_term = Some(p.clone());
    }
    Ok(cfg)
}

fn usage(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Config(a) => match resolve(&a) {
            Ok(cfg) => {
                print!("{}", cfg.to_text());
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Cmd::Run(a) => {
            let cfg = match resolve(&a) {
                Ok(c) => c,
                Err(e) => return usage(e),
            };
            if let Some(n) = a.threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(2);
                }
            }
            let out = match run(&cfg) {
                Ok(o) => o,
                Err(e @ (Error::Usage(_) | Error::Parse { .. } | Error::NoAdmissibleKey { .. } | Error::BadCollision { .. })) => {
                    return usage(e)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match write_reports(&out, &cfg.out) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            let verdict = if out.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {}: {}", cfg.experiment, out.check);
            if a.assert && !out.passed {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
    }
}
