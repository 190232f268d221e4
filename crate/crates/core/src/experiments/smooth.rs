use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use super::{elapsed_ms, euler_extension, euler_partition, hp_design, Config, Initial, Method, MethodRows, ResultRow};
use crate::error::{invalid, Result};
use crate::extension::ExtensionDiscretization;
use crate::mesh::TimePartition;
use crate::timestepping::{errors_vs_exact, run_dg, run_euler};

fn run_one(cfg: &Config, method: Method, ext: &ExtensionDiscretization, part: &TimePartition, sweep: f64) -> Result<ResultRow> {
    let start = Instant::now();
    let u0 = cfg.u0();
    let traj = match method {
        Method::Dg => run_dg(ext, part, None, &u0)?,
        _ => run_euler(ext, part, None, &u0)?,
    };
    let (a, len) = (cfg.a, cfg.b - cfg.a);
    let kp = cfg.mode as f64 * PI / len;
    let rate = cfg.eigenvalue().powf(cfg.s);
    let u = move |t: f64, x: f64| (-t * rate).exp() * (kp * (x - a)).sin();
    let du = move |t: f64, x: f64| (-t * rate).exp() * kp * (kp * (x - a)).cos();
    let (st, fin, energy) = errors_vs_exact(ext, &traj, &u, &du)?;
    Ok(ResultRow {
        sweep,
        nx: ext.nx(),
        ny: ext.ny(),
        nt: traj.num_solves(),
        err_final_l2: fin,
        err_st_l2: st,
        err_energy: energy,
        wall_ms: elapsed_ms(start),
    })
}

/// Convergence against the exact eigenmode solution `exp(-t mu^s) sin(k pi x)`
/// with `f = 0`. The hp-DG method sweeps the layer count `M`, the Euler
/// methods sweep the step count.
pub fn run_convergence_smooth(cfg: &Config) -> Result<Vec<MethodRows>> {
    cfg.validate()?;
    if cfg.initial != Initial::Sine {
        return Err(invalid("initial", "the smooth study needs the sine initial condition"));
    }
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let rows = match method {
            Method::Dg => cfg
                .layers
                .par_iter()
                .map(|&m| {
                    let (ext, part) = hp_design(cfg, m)?;
                    run_one(cfg, method, &ext, &part, m as f64)
                })
                .collect::<Result<Vec<_>>>()?,
            _ => {
                let ext = euler_extension(cfg)?;
                cfg.euler_steps
                    .par_iter()
                    .map(|&n| {
                        let part = euler_partition(cfg, method, n)?;
                        run_one(cfg, method, &ext, &part, n as f64)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        out.push(MethodRows { method, rows });
    }
    Ok(out)
}
