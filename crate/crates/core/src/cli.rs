//! Command line front end of the `hpfrac` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    self, fit_slope, hp_design, load_or_compute_reference, run_convergence_singular, run_convergence_smooth,
    run_singperturb_bench, write_rows, Config, Initial, Method, MethodRows, ResultRow, Study,
};
use crate::timestepping::{errors_vs_exact, run_dg, run_euler, trajectory_difference};

#[derive(Debug, Parser)]
#[command(name = "hpfrac", version, about = "hp space-time solver for fractional parabolic problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long, global = true, default_value = "results.csv")]
    out: PathBuf,
    /// Cache file of the reference solution.
    #[arg(long, global = true)]
    reference: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed of randomized checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One run; writes its error row and trajectory samples.
    Solve,
    /// Convergence study of the configured `study`.
    Convergence,
    /// Oracle and invariant checks.
    Selftest,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. } | Error::Config(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    match &cli.config {
        Some(p) => Config::from_path(p),
        None => Ok(Config::default()),
    }
}

fn run(cli: &Cli) -> Result<i32> {
    match cli.command {
        Command::Selftest => {
            let outcomes = experiments::run_selftest(cli.seed);
            let mut failed = 0;
            for o in &outcomes {
                println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                failed += usize::from(!o.passed);
            }
            println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
        Command::Convergence => {
            let cfg = load_config(cli)?;
            let studies = match cfg.study {
                Study::Smooth => run_convergence_smooth(&cfg)?,
                Study::Singular => {
                    let reference = load_or_compute_reference(&cfg, cli.reference.as_deref(), true)?;
                    run_convergence_singular(&cfg, &reference)?
                }
                Study::Singperturb => vec![MethodRows {
                    method: Method::Dg,
                    rows: run_singperturb_bench(&cfg)?,
                }],
            };
            let multiple = studies.len() > 1;
            for st in &studies {
                let path = if multiple { suffixed(&cli.out, st.method.name()) } else { cli.out.clone() };
                write_csv(&path, &st.rows)?;
                summarize(cfg.study, st);
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Solve => {
            let cfg = load_config(cli)?;
            solve(cli, &cfg)?;
            Ok(0)
        }
    }
}

fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{tag}.{ext}"))
}

fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(f), rows)
}

fn summarize(study: Study, st: &MethodRows) {
    let rows = &st.rows;
    if rows.len() < 2 {
        return;
    }
    let ln: Vec<f64> = rows.iter().map(|r| r.err_st_l2.max(f64::MIN_POSITIVE).ln()).collect();
    let (label, slope) = match (study, st.method) {
        (Study::Singular, Method::Dg) => {
            let x: Vec<f64> = rows.iter().map(|r| r.sweep.sqrt()).collect();
            ("slope of ln(err) vs sqrt(N)", fit_slope(&x, &ln))
        }
        (Study::Singperturb, _) => {
            let x: Vec<f64> = rows.iter().map(|r| r.sweep).collect();
            let le: Vec<f64> = rows.iter().map(|r| r.err_energy.ln()).collect();
            ("slope of ln(energy err) vs p", fit_slope(&x, &le))
        }
        (_, Method::Dg) => {
            let x: Vec<f64> = rows.iter().map(|r| r.sweep).collect();
            ("slope of ln(err) vs M", fit_slope(&x, &ln))
        }
        _ => {
            let x: Vec<f64> = rows.iter().map(|r| r.sweep.ln()).collect();
            ("rate in N", -fit_slope(&x, &ln))
        }
    };
    println!("{}: {label} = {slope:.3}", st.method.name());
}

fn solve(cli: &Cli, cfg: &Config) -> Result<()> {
    let start = Instant::now();
    let u0 = cfg.u0();
    let (ext, part) = match cfg.solve_method {
        Method::Dg => hp_design(cfg, cfg.solve_layers)?,
        m => (
            experiments::euler_extension(cfg)?,
            experiments::euler_partition(cfg, m, cfg.solve_steps)?,
        ),
    };
    let traj = match cfg.solve_method {
        Method::Dg => run_dg(&ext, &part, None, &u0)?,
        _ => run_euler(&ext, &part, None, &u0)?,
    };
    let (st, fin, energy) = match cfg.initial {
        Initial::Sine => {
            let (a, kp) = (cfg.a, cfg.mode as f64 * std::f64::consts::PI / (cfg.b - cfg.a));
            let rate = cfg.eigenvalue().powf(cfg.s);
            errors_vs_exact(
                &ext,
                &traj,
                &move |t, x| (-t * rate).exp() * (kp * (x - a)).sin(),
                &move |t, x| (-t * rate).exp() * kp * (kp * (x - a)).cos(),
            )?
        }
        Initial::One => {
            let reference = load_or_compute_reference(cfg, cli.reference.as_deref(), true)?;
            let ref_space = experiments::reference_space(cfg)?;
            trajectory_difference(&ext.space_x, &traj, &ref_space, &reference.trajectory)?
        }
    };
    let row = ResultRow {
        sweep: traj.num_solves() as f64,
        nx: ext.nx(),
        ny: ext.ny(),
        nt: traj.num_solves(),
        err_final_l2: fin,
        err_st_l2: st,
        err_energy: energy,
        wall_ms: experiments::elapsed_ms(start),
    };
    write_csv(&cli.out, std::slice::from_ref(&row))?;
    let samples = suffixed(&cli.out, "samples");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&samples)?);
    writeln!(w, "t,x,u")?;
    let xs: Vec<f64> = (0..cfg.samples)
        .map(|i| cfg.a + (cfg.b - cfg.a) * i as f64 / (cfg.samples - 1) as f64)
        .collect();
    for (j, &t) in part.breakpoints().iter().enumerate().skip(1) {
        let u = traj.eval_left(j);
        for (&x, v) in xs.iter().zip(ext.space_x.eval(u.as_slice(), &xs)?) {
            writeln!(w, "{t},{x},{v}")?;
        }
    }
    w.flush()?;
    println!(
        "N = {}, err_st_l2 = {st:.3e}, err_final_l2 = {fin:.3e}; wrote {} and {}",
        row.nt,
        cli.out.display(),
        samples.display()
    );
    Ok(())
}
