use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::{
    elapsed_ms, euler_extension, euler_partition, hp_design, read_reference, reference_hash, write_reference, x_layers, x_space,
    Config, Method, MethodRows, ReferenceRun, ResultRow,
};
use crate::error::{Error, Result};
use crate::hp1d::HpSpace;
use crate::timestepping::{run_dg, run_euler, trajectory_difference, Trajectory};

/// hp-DG run with `reference_layers` layers.
pub fn compute_reference(cfg: &Config) -> Result<ReferenceRun> {
    cfg.validate()?;
    let (ext, part) = hp_design(cfg, cfg.reference_layers)?;
    let trajectory = run_dg(&ext, &part, None, &cfg.u0())?;
    Ok(ReferenceRun {
        hash: reference_hash(cfg),
        layers: cfg.reference_layers,
        trajectory,
    })
}

/// The x-space a reference run lives in.
pub fn reference_space(cfg: &Config) -> Result<HpSpace> {
    x_space(cfg, x_layers(cfg, cfg.reference_layers), cfg.reference_layers)
}

/// Loads the cached reference at `path` when its hash matches `cfg`;
/// otherwise recomputes it (and rewrites the cache) if `recompute` is set, or
/// fails.
pub fn load_or_compute_reference(cfg: &Config, path: Option<&Path>, recompute: bool) -> Result<ReferenceRun> {
    let hash = reference_hash(cfg);
    if let Some(p) = path {
        if p.exists() {
            let run = read_reference(std::fs::File::open(p)?)?;
            let nx = reference_space(cfg)?.dim();
            if run.hash == hash && run.trajectory.initial.len() == nx {
                return Ok(run);
            }
            if !recompute {
                return Err(Error::Config(format!("reference {} does not match the configuration", p.display())));
            }
        } else if !recompute {
            return Err(Error::Config(format!("reference {} is missing", p.display())));
        }
    }
    let run = compute_reference(cfg)?;
    if let Some(p) = path {
        let f = std::fs::File::create(p)?;
        write_reference(std::io::BufWriter::new(f), &run)?;
    }
    Ok(run)
}

fn row_against(
    ref_space: &HpSpace,
    reference: &Trajectory,
    space: &HpSpace,
    traj: &Trajectory,
    ny: usize,
    start: Instant,
) -> Result<ResultRow> {
    let (st, fin, energy) = trajectory_difference(space, traj, ref_space, reference)?;
    Ok(ResultRow {
        sweep: traj.num_solves() as f64,
        nx: space.dim(),
        ny,
        nt: traj.num_solves(),
        err_final_l2: fin,
        err_st_l2: st,
        err_energy: energy,
        wall_ms: elapsed_ms(start),
    })
}

/// Errors of every configured method against a reference run; the sweep
/// value is the number `N` of fractional resolvent solves.
pub fn run_convergence_singular(cfg: &Config, reference: &ReferenceRun) -> Result<Vec<MethodRows>> {
    cfg.validate()?;
    if reference.hash != reference_hash(cfg) {
        return Err(Error::Config("reference run does not match the configuration".into()));
    }
    let ref_space = reference_space(cfg)?;
    let ref_traj = &reference.trajectory;
    let u0 = cfg.u0();
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let rows = match method {
            Method::Dg => cfg
                .layers
                .par_iter()
                .map(|&m| {
                    let start = Instant::now();
                    let (ext, part) = hp_design(cfg, m)?;
                    let traj = run_dg(&ext, &part, None, &u0)?;
                    row_against(&ref_space, ref_traj, &ext.space_x, &traj, ext.ny(), start)
                })
                .collect::<Result<Vec<_>>>()?,
            _ => {
                let ext = euler_extension(cfg)?;
                cfg.euler_steps
                    .par_iter()
                    .map(|&n| {
                        let start = Instant::now();
                        let part = euler_partition(cfg, method, n)?;
                        let traj = run_euler(&ext, &part, None, &u0)?;
                        row_against(&ref_space, ref_traj, &ext.space_x, &traj, ext.ny(), start)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        out.push(MethodRows { method, rows });
    }
    Ok(out)
}
