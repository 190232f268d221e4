//! Plain-text cache of a reference trajectory: one `#`-prefixed JSON header
//! line followed by CSV rows `interval,mode,c_0,...,c_{Nx-1}`. The initial
//! projection is stored under interval `-1`. Numbers are written in shortest
//! round-trip form, so a reload reproduces the run bit for bit.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Config;
use crate::error::{Error, Result};
use crate::mesh::TimePartition;
use crate::timestepping::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    hash: String,
    layers: usize,
    nx: usize,
    breakpoints: Vec<f64>,
    degrees: Vec<usize>,
}

/// A reference trajectory together with the hash of the configuration that
/// produced it.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub hash: String,
    pub layers: usize,
    pub trajectory: Trajectory,
}

#[derive(Serialize)]
struct HashKey<'a> {
    s: f64,
    a: f64,
    b: f64,
    diffusion: f64,
    reaction: f64,
    initial: &'a super::Initial,
    mode: u32,
    t_final: f64,
    sigma: f64,
    slope: f64,
    time_slope: f64,
    x_layer_factor: f64,
    reference_layers: usize,
}

/// SHA-256 over every configuration value the reference depends on.
pub fn reference_hash(cfg: &Config) -> String {
    let key = HashKey {
        s: cfg.s,
        a: cfg.a,
        b: cfg.b,
        diffusion: cfg.diffusion,
        reaction: cfg.reaction,
        initial: &cfg.initial,
        mode: cfg.mode,
        t_final: cfg.t_final,
        sigma: cfg.sigma,
        slope: cfg.slope,
        time_slope: cfg.time_slope,
        x_layer_factor: cfg.x_layer_factor,
        reference_layers: cfg.reference_layers,
    };
    let json = serde_json::to_string(&key).expect("hash key serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("reference csv: {e}"))
}

pub fn write_reference<W: Write>(mut out: W, run: &ReferenceRun) -> Result<()> {
    let tr = &run.trajectory;
    let header = Header {
        hash: run.hash.clone(),
        layers: run.layers,
        nx: tr.initial.len(),
        breakpoints: tr.partition.breakpoints().to_vec(),
        degrees: tr.partition.degrees().to_vec(),
    };
    let json = serde_json::to_string(&header).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out, "# {json}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut row = |interval: i64, mode: usize, values: &mut dyn Iterator<Item = f64>| -> Result<()> {
        let mut rec = vec![interval.to_string(), mode.to_string()];
        rec.extend(values.map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)
    };
    row(-1, 0, &mut tr.initial.iter().copied())?;
    for (j, b) in tr.blocks.iter().enumerate() {
        for m in 0..b.ncols() {
            row(j as i64, m, &mut b.column(m).iter().copied())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_reference<R: Read>(input: R) -> Result<ReferenceRun> {
    let mut rd = BufReader::new(input);
    let mut first = String::new();
    rd.read_line(&mut first)?;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Config("reference file lacks its header line".into()))?;
    let h: Header = serde_json::from_str(json.trim()).map_err(|e| Error::Config(format!("reference header: {e}")))?;
    let partition = TimePartition::new(h.breakpoints.clone(), h.degrees.clone())?;
    let mut blocks: Vec<DMatrix<f64>> = h.degrees.iter().map(|&r| DMatrix::zeros(h.nx, r + 1)).collect();
    let mut initial = None;
    let mut seen = 0usize;
    let mut csv_rd = csv::ReaderBuilder::new().has_headers(false).from_reader(rd);
    for rec in csv_rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != h.nx + 2 {
            return Err(Error::Config(format!("reference row has {} fields, expected {}", rec.len(), h.nx + 2)));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("reference value {s}: {e}")));
        let interval: i64 = rec[0].parse().map_err(|_| Error::Config("bad interval index".into()))?;
        let mode: usize = rec[1].parse().map_err(|_| Error::Config("bad mode index".into()))?;
        let vals = (0..h.nx).map(|i| parse(&rec[i + 2])).collect::<Result<Vec<f64>>>()?;
        if interval < 0 {
            initial = Some(DVector::from_vec(vals));
        } else {
            let b = blocks
                .get_mut(interval as usize)
                .filter(|b| mode < b.ncols())
                .ok_or_else(|| Error::Config(format!("reference row ({interval}, {mode}) out of range")))?;
            b.column_mut(mode).copy_from_slice(&vals);
            seen += 1;
        }
    }
    if seen != partition.dim() {
        return Err(Error::Config(format!("reference has {seen} mode rows, expected {}", partition.dim())));
    }
    let initial = initial.ok_or_else(|| Error::Config("reference lacks the initial row".into()))?;
    Ok(ReferenceRun {
        hash: h.hash,
        layers: h.layers,
        trajectory: Trajectory {
            partition,
            blocks,
            initial,
        },
    })
}
