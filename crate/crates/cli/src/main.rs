use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixcell::driver::lifting_from_seed;
use mixcell::generators::generate_named;
use mixcell::oracle::{oracle_enumerate_cells, verify_cells};
use mixcell::{all_mixed_cells_full, CellsFile, Error, Lifting, Result, RunOptions, SupportSystem};

#[derive(Parser)]
#[command(
    name = "mixcell",
    version,
    about = "Mixed volume and mixed cells of integer supports"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate all mixed cells of a system.
    Compute(ComputeArgs),
    /// Write the supports of a benchmark family.
    Gen {
        family: String,
        n: usize,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
    /// Brute-force the mixed cells of a small system.
    Oracle {
        system: PathBuf,
        #[arg(long)]
        lifting: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: Option<PathBuf>,
    },
    /// Verify a cells file against its system.
    Check {
        cells: PathBuf,
        system: PathBuf,
        /// Lifting used by the run; regenerated from the file's seed if absent.
        #[arg(long)]
        lifting: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ComputeArgs {
    system: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Facets per worker per round.
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long)]
    no_hnf: bool,
    #[arg(long)]
    rank1: bool,
    #[arg(long)]
    naive_neighbors: bool,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long)]
    stats: bool,
    /// Check balancing and constant updates on every visited facet.
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    flag_seed: Option<u64>,
    #[arg(long)]
    lifting: Option<PathBuf>,
    #[arg(short = 'o')]
    out: Option<PathBuf>,
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_lifting(p: &Path, sys: &SupportSystem) -> Result<Lifting> {
    Lifting::parse(&read(p)?, sys.total_points())
}

fn compute(a: ComputeArgs) -> Result<()> {
    let sys = SupportSystem::parse(&read(&a.system)?)?;
    let lifting = a
        .lifting
        .as_deref()
        .map(|p| load_lifting(p, &sys))
        .transpose()?;
    let opts = RunOptions {
        hnf: !a.no_hnf,
        rank1: a.rank1,
        naive: a.naive_neighbors,
        retries: a.retries,
        audit: a.audit,
        flag_seed: a.flag_seed,
        lifting,
        workers: a.workers.max(1),
        batch: a.batch,
    };
    let r = all_mixed_cells_full(&sys, a.seed, &opts)?;
    let text = r.cells_file().to_text();
    if a.stats {
        for l in r.stats_lines() {
            println!("{l}");
        }
        if a.audit {
            let au = &r.stats.audit;
            println!("audit_max_balancing={:e}", au.max_balancing);
            println!("audit_max_update_gap={:e}", au.max_update_gap);
            println!("audit_infeasible={}", au.infeasible);
            if a.rank1 {
                println!("rank1_worst_ratio={:e}", au.rank1_worst_ratio);
            }
        }
    }
    match (&a.out, a.stats) {
        (Some(p), _) => emit(Some(p), &text),
        (None, false) => emit(None, &text),
        (None, true) => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Compute(a) => compute(a),
        Cmd::Gen { family, n, out } => emit(out.as_deref(), &generate_named(&family, n)?.to_text()),
        Cmd::Oracle {
            system,
            lifting,
            seed,
            out,
        } => {
            let sys = SupportSystem::parse(&read(&system)?)?;
            let lifting = match lifting {
                Some(p) => load_lifting(&p, &sys)?,
                None => lifting_from_seed(sys.total_points(), seed),
            };
            let r = oracle_enumerate_cells(&sys, &lifting)?;
            let f = CellsFile {
                seed,
                n: sys.n,
                s: sys.s(),
                index: 1,
                mixed_volume: r.mixed_volume,
                cells: r.cells,
            };
            emit(out.as_deref(), &f.to_text())
        }
        Cmd::Check {
            cells,
            system,
            lifting,
        } => {
            let sys = SupportSystem::parse(&read(&system)?)?;
            let file = CellsFile::parse(&read(&cells)?)?;
            let lifting = match lifting {
                Some(p) => load_lifting(&p, &sys)?,
                None => lifting_from_seed(sys.total_points(), file.seed),
            };
            let rep = verify_cells(&sys, &lifting, &file)?;
            println!(
                "ok cells={} mixed_volume={} min_slack={:e}",
                rep.cells, rep.mixed_volume, rep.min_slack
            );
            Ok(())
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!(
                "error: kind=UsageError msg={}",
                one_line(msg.lines().next().unwrap_or(""))
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} msg={}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
