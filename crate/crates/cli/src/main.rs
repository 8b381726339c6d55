//! `magstark`: impurity levels, resonances, sweeps, width-law fits, bound
//! verification and reference-Hamiltonian comparisons from a JSON config.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical error,
//! 3 verification FAIL.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use log::{debug, info};
use serde::Serialize;

use magstark::bounds::verify_bounds;
use magstark::config::{parse_config, RunConfig};
use magstark::io::{read_results, write_json, write_results};
use magstark::resonance::{estimate, h2_crosscheck, unperturbed_levels, ImpurityLevel};
use magstark::sweep::{b_linearity, fit_width_law, run_sweep, FitResult, SweepRow};
use magstark::{Error, Result};

#[derive(Parser, Debug)]
#[command(version, about = "Magnetic Stark resonances by complex translation")]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reserved; every run is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Impurity levels of H(0) below the lowest Landau level.
    Levels,
    /// The resonance continuing the selected level at the configured field.
    Solve,
    /// Resonances over the configured F and B lists, as CSV.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Width-law fit of a sweep CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fix the exponent p instead of fitting it.
        #[arg(long)]
        fix_p: Option<f64>,
        /// Write `B,x,ln_gamma` with `x = 1/F^p` for external plotting.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Grid verification of the closed-form cutoff bounds.
    VerifyBounds {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reference Hamiltonian H_2 against H at the configured field.
    H2Compare {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    err: Error,
}

fn usage(err: Error) -> Failure {
    Failure { code: 1, err }
}

fn numerical(err: Error) -> Failure {
    let code = match err {
        Error::Validation(_) | Error::Parse { .. } | Error::MalformedRow { .. } => 1,
        _ => 2,
    };
    Failure { code, err }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => parse_config(&std::fs::read_to_string(p)?),
        None => parse_config("{}"),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    write_json(value, &mut w)?;
    w.flush()?;
    Ok(())
}

fn seed_level(cfg: &RunConfig) -> Result<ImpurityLevel> {
    let levels = unperturbed_levels(
        cfg.field.magnetic,
        &cfg.potential,
        &cfg.basis,
        &cfg.resonance,
    )?;
    levels.get(cfg.level).copied().ok_or_else(|| {
        Error::NotFound(format!(
            "no impurity level with index {} ({} found below B = {})",
            cfg.level,
            levels.len(),
            cfg.field.magnetic
        ))
    })
}

#[derive(Serialize)]
struct PerField {
    #[serde(rename = "B")]
    magnetic: f64,
    fit: Option<FitResult>,
    error: Option<String>,
}

fn fit_rows(
    rows: &[SweepRow],
    fix_p: Option<f64>,
    plot: Option<&Path>,
) -> Result<serde_json::Value> {
    let mut fields: Vec<f64> = rows.iter().map(|r| r.magnetic).collect();
    fields.sort_by(f64::total_cmp);
    fields.dedup();
    if fields.len() == 1 {
        let fit = fit_width_law(rows, fix_p)?;
        if let Some(p) = plot {
            write_plot(rows, &[(fields[0], fit)], p)?;
        }
        return Ok(serde_json::to_value(fit)?);
    }
    let mut per = Vec::new();
    let mut ok = Vec::new();
    for &b in &fields {
        let sub: Vec<SweepRow> = rows.iter().copied().filter(|r| r.magnetic == b).collect();
        match fit_width_law(&sub, fix_p) {
            Ok(fit) => {
                ok.push((b, fit));
                per.push(PerField {
                    magnetic: b,
                    fit: Some(fit),
                    error: None,
                });
            }
            Err(e) => per.push(PerField {
                magnetic: b,
                fit: None,
                error: Some(e.to_string()),
            }),
        }
    }
    if let Some(p) = plot {
        write_plot(rows, &ok, p)?;
    }
    let linearity = if fix_p.is_some() && ok.len() >= 3 {
        Some(b_linearity(&ok)?)
    } else {
        None
    };
    Ok(serde_json::json!({ "fits": per, "linearity": linearity }))
}

fn write_plot(rows: &[SweepRow], fits: &[(f64, FitResult)], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "B,x,ln_gamma")?;
    for (b, fit) in fits {
        for r in rows.iter().filter(|r| r.magnetic == *b && r.gamma > 0.0) {
            if r.status == magstark::sweep::RowStatus::Ok {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e}",
                    b,
                    r.electric.powf(-fit.p),
                    r.gamma.ln()
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<bool, Failure> {
    let cfg = load_config(cli.config.as_deref()).map_err(usage)?;
    if let Some(seed) = cli.seed {
        debug!("seed {seed} ignored: runs are deterministic");
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| usage(Error::InvalidParameter(e.to_string())))?;
    }
    match cli.command {
        Command::Levels => {
            let levels = unperturbed_levels(
                cfg.field.magnetic,
                &cfg.potential,
                &cfg.basis,
                &cfg.resonance,
            )
            .map_err(numerical)?;
            emit(&levels, None).map_err(numerical)?;
        }
        Command::Solve => {
            let seed = seed_level(&cfg).map_err(numerical)?;
            let fields = cfg.fields();
            let est = estimate(
                &fields,
                &cfg.potential,
                &cfg.basis,
                &seed,
                cfg.schedule.eps,
                &cfg.resonance,
            )
            .map_err(numerical)?;
            emit(&est[0], None).map_err(numerical)?;
            if est.len() > 1 {
                info!("level is degenerate: {} resonances located", est.len());
            }
        }
        Command::Sweep { out } => {
            let rows = run_sweep(&cfg.sweep_spec()).map_err(numerical)?;
            let path = out.or_else(|| cfg.output.sweep_csv.clone());
            let mut w = sink(path.as_deref()).map_err(numerical)?;
            write_results(&rows, &mut w).map_err(numerical)?;
            w.flush().map_err(|e| numerical(e.into()))?;
        }
        Command::Fit {
            input,
            fix_p,
            plot_data,
        } => {
            let file = File::open(&input).map_err(|e| usage(e.into()))?;
            let rows = read_results(BufReader::new(file)).map_err(usage)?;
            let value =
                fit_rows(&rows, fix_p.or(cfg.fix_p), plot_data.as_deref()).map_err(numerical)?;
            emit(&value, None).map_err(numerical)?;
        }
        Command::VerifyBounds { out } => {
            let report = verify_bounds(&cfg.schedule, cfg.potential.a1, &cfg.bounds_f_list)
                .map_err(numerical)?;
            let report = cfg.checks.apply(report);
            let path = out.or_else(|| cfg.output.report.clone());
            emit(&report, path.as_deref()).map_err(numerical)?;
            return Ok(report.pass);
        }
        Command::H2Compare { out } => {
            let seed = seed_level(&cfg).map_err(numerical)?;
            // The reference Hamiltonian needs gamma_F b < pi/4: use the
            // schedule translation unless one is given explicitly.
            let f = cfg.field.electric;
            let b = cfg
                .field
                .translation
                .unwrap_or_else(|| cfg.schedule.translation(f));
            let fields = magstark::model::FieldParams::new(cfg.field.magnetic, f, b);
            let report = h2_crosscheck(
                &fields,
                &cfg.potential,
                &cfg.schedule,
                &cfg.basis,
                &seed,
                &cfg.resonance,
            )
            .map_err(numerical)?;
            let path = out.or_else(|| cfg.output.report.clone());
            emit(&report, path.as_deref()).map_err(numerical)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MAGSTARK_LOG", "warn")).init();
    let defaults = serde_json::to_string_pretty(&RunConfig::default()).unwrap_or_default();
    let cmd = Cli::command().after_long_help(format!(
        "Configuration keys and their defaults (omitted keys keep these values):\n{defaults}"
    ));
    let cli = match cmd
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification FAIL");
            ExitCode::from(3)
        }
        Err(Failure { code, err }) => {
            eprintln!("error: {err}");
            ExitCode::from(code)
        }
    }
}
