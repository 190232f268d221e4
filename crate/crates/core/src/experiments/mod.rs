//! Experiment configuration, discretization designs and result persistence.
//!
//! A study is described by a flat TOML file. Keys that are not given fall back
//! to the preset of the selected `study`.

mod reference;
mod selftest;
mod singperturb;
mod singular;
mod smooth;

pub use reference::{read_reference, reference_hash, write_reference, ReferenceRun};
pub use selftest::{run_selftest, SelftestOutcome};
pub use singperturb::{boundary_layer_solution, boundary_layer_space, rotation_angle, run_singperturb_bench, solve_singperturb, SingPerturbSolution};
pub use singular::{compute_reference, load_or_compute_reference, reference_space, run_convergence_singular};
pub use smooth::run_convergence_smooth;

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::extension::{build_extension, ExtensionDiscretization};
use crate::hp1d::{build_space, BoundaryConditions, HpSpace};
use crate::mesh::{
    geometric_mesh_1d, linear_degree_vector, time_partition, DegreeVector, Side, TimeDegrees, TimeMeshKind, TimePartition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Smooth,
    Singular,
    Singperturb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// `sin(mode * pi * x)` on `(0, 1)`.
    Sine,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dg,
    EulerUniform,
    EulerGraded,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dg => "dg",
            Method::EulerUniform => "euler_uniform",
            Method::EulerGraded => "euler_graded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub study: Study,
    pub s: f64,
    pub a: f64,
    pub b: f64,
    /// Constant diffusion coefficient `A`.
    pub diffusion: f64,
    /// Constant reaction coefficient `c`.
    pub reaction: f64,
    pub initial: Initial,
    pub mode: u32,
    pub t_final: f64,
    pub sigma: f64,
    /// Degree slope in `y`.
    pub slope: f64,
    /// Degree slope over the geometric time layers.
    pub time_slope: f64,
    /// Number of x layers per y layer.
    pub x_layer_factor: f64,
    pub layers: Vec<usize>,
    pub methods: Vec<Method>,
    pub euler_steps: Vec<usize>,
    pub euler_degree: usize,
    pub euler_layers: usize,
    pub grading_gamma: f64,
    pub reference_layers: usize,
    pub epsilon: f64,
    pub zeta_re: f64,
    pub zeta_im: f64,
    pub sector_delta: f64,
    pub zeta_min: f64,
    pub p_values: Vec<usize>,
    pub reference_degree: usize,
    /// Boundary-layer mesh layers; 0 selects the smallest `L` with `sigma^L <= epsilon`.
    pub bl_layers: usize,
    pub solve_method: Method,
    pub solve_layers: usize,
    pub solve_steps: usize,
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self::preset(Study::Smooth)
    }
}

impl Config {
    pub fn preset(study: Study) -> Self {
        let base = Config {
            study,
            s: 0.5,
            a: 0.0,
            b: 1.0,
            diffusion: 1.0,
            reaction: 1.0,
            initial: Initial::Sine,
            mode: 2,
            t_final: 1.0,
            sigma: 0.5,
            slope: 1.0,
            time_slope: 1.0,
            x_layer_factor: 1.5,
            layers: (2..=7).collect(),
            methods: vec![Method::Dg],
            euler_steps: vec![16, 32, 64, 128, 256, 512, 1024],
            euler_degree: 8,
            euler_layers: 8,
            grading_gamma: 4.0,
            reference_layers: 18,
            epsilon: 1e-3,
            zeta_re: (3.0 * PI / 8.0).cos(),
            zeta_im: (3.0 * PI / 8.0).sin(),
            sector_delta: 0.05,
            zeta_min: 1e-8,
            p_values: (1..=12).collect(),
            reference_degree: 24,
            bl_layers: 0,
            solve_method: Method::Dg,
            solve_layers: 5,
            solve_steps: 64,
            samples: 21,
        };
        match study {
            Study::Smooth => base,
            Study::Singular => Config {
                s: 0.75,
                initial: Initial::One,
                layers: (2..=8).collect(),
                methods: vec![Method::EulerUniform, Method::EulerGraded, Method::Dg],
                ..base
            },
            Study::Singperturb => base,
        }
    }

    /// Parses a flat TOML document on top of the preset of its `study` key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let study = match user.get("study") {
            Some(v) => Study::deserialize(v.clone()).map_err(|e| Error::Config(format!("study: {e}")))?,
            None => Study::Smooth,
        };
        let mut merged = toml::Table::try_from(Config::preset(study)).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in user {
            merged.insert(k, v);
        }
        let cfg: Config = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid("s", format!("must lie in (0, 1), got {}", self.s)));
        }
        if !(self.a < self.b) {
            return Err(invalid("a", format!("need a < b, got ({}, {})", self.a, self.b)));
        }
        if !(self.diffusion > 0.0) {
            return Err(invalid("diffusion", format!("must be positive, got {}", self.diffusion)));
        }
        if !(self.reaction >= 0.0) {
            return Err(invalid("reaction", format!("must be >= 0, got {}", self.reaction)));
        }
        if !(self.t_final > 0.0) {
            return Err(invalid("t_final", format!("must be positive, got {}", self.t_final)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(invalid("sigma", format!("must lie in (0, 1), got {}", self.sigma)));
        }
        if !(self.slope > 0.0) || !(self.time_slope > 0.0) || !(self.x_layer_factor > 0.0) {
            return Err(invalid("slope", "slopes and layer factors must be positive"));
        }
        if self.mode == 0 {
            return Err(invalid("mode", "must be >= 1"));
        }
        if self.layers.contains(&0) || self.euler_steps.contains(&0) {
            return Err(invalid("layers", "layer and step counts must be >= 1"));
        }
        if !(self.grading_gamma >= 1.0) {
            return Err(invalid("grading_gamma", format!("must be >= 1, got {}", self.grading_gamma)));
        }
        if self.euler_degree == 0 || self.euler_layers == 0 || self.reference_layers == 0 {
            return Err(invalid("euler_degree", "degrees and layer counts must be >= 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.p_values.contains(&0) || self.reference_degree == 0 {
            return Err(invalid("p_values", "polynomial degrees must be >= 1"));
        }
        check_sector(self.zeta(), self.sector_delta, self.zeta_min)?;
        if self.solve_layers == 0 || self.solve_steps == 0 || self.samples < 2 {
            return Err(invalid("solve_layers", "solve layers/steps must be >= 1 and samples >= 2"));
        }
        Ok(())
    }

    pub fn zeta(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.zeta_re, self.zeta_im)
    }

    pub fn u0(&self) -> impl Fn(f64) -> f64 + Sync {
        let (initial, k, a, len) = (self.initial, self.mode as f64, self.a, self.b - self.a);
        move |x| match initial {
            Initial::Sine => (k * PI * (x - a) / len).sin(),
            Initial::One => 1.0,
        }
    }

    /// `mu = A (k pi / |b - a|)^2 + c` of the sine initial mode.
    pub fn eigenvalue(&self) -> f64 {
        let kp = self.mode as f64 * PI / (self.b - self.a);
        self.diffusion * kp * kp + self.reaction
    }
}

pub(crate) fn check_sector(zeta: num_complex::Complex64, delta: f64, zeta_min: f64) -> Result<()> {
    if !(zeta.norm() >= zeta_min) || !zeta.is_finite() {
        return Err(invalid("zeta", format!("|zeta| = {} is below {zeta_min}", zeta.norm())));
    }
    if !((PI - zeta.arg().abs()) >= delta) {
        return Err(invalid(
            "zeta",
            format!("arg(zeta) = {} leaves the sector |pi - arg| >= {delta}", zeta.arg()),
        ));
    }
    Ok(())
}

/// `exp(-t mu_k^s) sin(k pi x)` with `mu_k = (k pi)^2 + c` on `(0, 1)`.
pub fn exact_eigen_solution(k: u32, s: f64, c: f64, t: f64, x: f64) -> f64 {
    let kp = k as f64 * PI;
    (-t * (kp * kp + c).powf(s)).exp() * (kp * x).sin()
}

/// Space on `(a, b)` with a geometric mesh of `layers` layers towards both
/// ends and uniform degree `p`.
pub fn x_space(cfg: &Config, layers: usize, p: usize) -> Result<HpSpace> {
    let mesh = geometric_mesh_1d(cfg.a, cfg.b, layers, cfg.sigma, Side::Both)?;
    let n = mesh.num_elements();
    build_space(mesh, DegreeVector::constant(p, n)?, BoundaryConditions::DIRICHLET)
}

/// Degrees in `y`: linear in the layer index, or constant.
#[derive(Debug, Clone, Copy)]
pub enum YDegrees {
    Linear { slope: f64 },
    Constant(usize),
}

/// Space on `(0, Y)` with `Y = max(1, layers)`, geometric towards `y = 0`.
pub fn y_space(cfg: &Config, layers: usize, degrees: YDegrees) -> Result<HpSpace> {
    let y_max = layers.max(1) as f64;
    let mesh = geometric_mesh_1d(0.0, y_max, layers, cfg.sigma, Side::Left)?;
    let deg = match degrees {
        YDegrees::Linear { slope } => linear_degree_vector(&mesh, slope, 1)?,
        YDegrees::Constant(p) => DegreeVector::constant(p, mesh.num_elements())?,
    };
    build_space(mesh, deg, BoundaryConditions::RIGHT_DIRICHLET)
}

pub fn x_layers(cfg: &Config, m: usize) -> usize {
    (cfg.x_layer_factor * m as f64).ceil() as usize
}

pub fn extension_for(cfg: &Config, space_x: HpSpace, space_y: HpSpace) -> Result<ExtensionDiscretization> {
    let (a, c) = (cfg.diffusion, cfg.reaction);
    build_extension(space_x, space_y, cfg.s, move |_| a, move |_| c)
}

/// Coupled hp design with `m` layers: `ceil(x_layer_factor m)` x layers of
/// degree `m`, `m` y layers with linear degrees, and a time mesh with `m`
/// geometric layers towards 0 and linearly increasing temporal degrees.
pub fn hp_design(cfg: &Config, m: usize) -> Result<(ExtensionDiscretization, TimePartition)> {
    let sx = x_space(cfg, x_layers(cfg, m), m)?;
    let sy = y_space(cfg, m, YDegrees::Linear { slope: cfg.slope })?;
    let ext = extension_for(cfg, sx, sy)?;
    let part = time_partition(
        TimeMeshKind::GeometricPlusUniform {
            layers: m,
            sigma: cfg.sigma,
            t1: cfg.t_final.min(1.0),
        },
        cfg.t_final,
        TimeDegrees::Linear {
            slope: cfg.time_slope,
            r_min: 0,
        },
    )?;
    Ok((ext, part))
}

/// Fixed-degree space design for the Euler methods.
pub fn euler_extension(cfg: &Config) -> Result<ExtensionDiscretization> {
    let p = cfg.euler_degree;
    let sx = x_space(cfg, x_layers(cfg, cfg.euler_layers), p)?;
    let sy = y_space(cfg, cfg.euler_layers, YDegrees::Constant(p))?;
    extension_for(cfg, sx, sy)
}

pub fn euler_partition(cfg: &Config, method: Method, steps: usize) -> Result<TimePartition> {
    let kind = match method {
        Method::EulerUniform => TimeMeshKind::Uniform { steps },
        Method::EulerGraded => TimeMeshKind::PowerGraded {
            steps,
            gamma: cfg.grading_gamma,
        },
        Method::Dg => return Err(invalid("method", "dg has no Euler partition")),
    };
    time_partition(kind, cfg.t_final, TimeDegrees::Constant { r: 0 })
}

/// Rows of one method in a study, ordered by the sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRows {
    pub method: Method,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    #[serde(rename = "Nt")]
    pub nt: usize,
    pub err_final_l2: f64,
    pub err_st_l2: f64,
    pub err_energy: f64,
    pub wall_ms: f64,
}

impl ResultRow {
    pub fn total_dofs(&self) -> usize {
        self.nx * self.ny.max(1) * self.nt.max(1)
    }
}

pub const CSV_HEADER: &str = "sweep,Nx,Ny,Nt,err_final_l2,err_st_l2,err_energy,wall_ms";

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Internal(format!("csv: {e}")))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(|e| Error::Config(format!("csv: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected csv header {headers:?}")));
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| Error::Config(format!("csv: {e}"))))
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
