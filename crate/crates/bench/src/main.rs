use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use irm_bench::args::{Cli, Command, PruneHalfArgs, RunArgs, SweepArgs};
use irm_bench::metrics::{write_csv, write_rows};
use irm_bench::{prune_half_sample_size, run_once, run_sweep, BenchError, Result};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        None => single(&cli.run),
        Some(Command::Sweep(a)) => sweep(a),
        Some(Command::PruneHalf(a)) => prune_half(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("irm-bench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn open(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

fn single(args: &RunArgs) -> Result<ExitCode> {
    let spec = args.spec()?;
    let row = run_once(&spec)?;
    let rows = [row];
    write_rows(&rows, args.format, io::stdout().lock())?;
    if let Some(path) = &args.out {
        let mut f = open(path)?;
        write_rows(&rows, args.format, &mut f)?;
        f.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let spec = args.spec()?;
    let rows = run_sweep(&spec)?;
    match &args.out {
        Some(path) => {
            let mut f = open(path)?;
            write_csv(&rows, &mut f)?;
            f.flush()?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("irm-bench: {failed} of {} runs failed", rows.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn prune_half(args: &PruneHalfArgs) -> Result<ExitCode> {
    let mut reports = Vec::new();
    for &d in &args.ds {
        for &eps in &args.epsilons {
            reports.push(prune_half_sample_size(d, eps, args.n_eval, args.trials, args.seed)?);
        }
    }
    let emit = |out: &mut dyn Write| -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &reports {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    };
    match &args.out {
        Some(path) => emit(&mut open(path)?)?,
        None => emit(&mut io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}
