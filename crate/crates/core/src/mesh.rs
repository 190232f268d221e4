//! Geometric and graded meshes for the spatial variable, the extension
//! variable `y` and the time axis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Side(s) towards which a geometric mesh accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Both,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub sigma: f64,
    pub layers: usize,
    pub refined_toward: Side,
}

/// A partition of an interval. `nodes` is strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    grading: Grading,
}

impl Mesh1D {
    /// Builds a mesh from explicit nodes (no grading metadata).
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("nodes", "need at least two nodes"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(invalid("nodes", "nodes must be finite and strictly increasing"));
        }
        Ok(Self {
            nodes,
            grading: Grading {
                sigma: 1.0,
                layers: 0,
                refined_toward: Side::None,
            },
        })
    }

    /// Uniform mesh of `n` elements on `(a, b)`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) {
            return Err(invalid("interval", format!("need a < b, got ({a}, {b})")));
        }
        if n == 0 {
            return Err(invalid("elements", "need at least one element"));
        }
        let h = (b - a) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| a + h * i as f64).collect();
        nodes[n] = b;
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn h_min(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the element containing `x`; interior nodes belong to the
    /// element on their right, `b` to the last element.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let (a, b) = (self.a(), self.b());
        let tol = 1e-14 * (b - a);
        if x < a - tol || x > b + tol {
            return None;
        }
        let n = self.num_elements();
        let idx = self.nodes.partition_point(|&node| node <= x);
        Some(idx.saturating_sub(1).min(n - 1))
    }

    /// Layer index of every element, counted from the refinement point(s).
    fn layers(&self) -> Vec<usize> {
        let n = self.num_elements();
        match self.grading.refined_toward {
            Side::Left | Side::None => (0..n).collect(),
            Side::Right => (0..n).rev().collect(),
            Side::Both => (0..n).map(|i| i.min(n - 1 - i)).collect(),
        }
    }
}

/// Geometric mesh on `(a, b)` with `layers` levels and grading factor `sigma`.
///
/// One-sided meshes use the nodes `a + (b-a) sigma^k`; the two-sided mesh is
/// the affine image of the mesh on `(-1, 1)` refined towards both ends. For
/// `layers == 0` the single graded node `sigma` is still present, so `L = 0`
/// and `L = 1` give the same mesh.
pub fn geometric_mesh_1d(a: f64, b: f64, layers: usize, sigma: f64, side: Side) -> Result<Mesh1D> {
    if !(a < b) {
        return Err(invalid("interval", format!("need a < b, got ({a}, {b})")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma", format!("must lie in (0,1), got {sigma}")));
    }
    let len = b - a;
    let levels = layers.max(1);
    let mut nodes = Vec::with_capacity(2 * levels + 2);
    match side {
        Side::Left => {
            nodes.push(a);
            for i in 1..=levels {
                nodes.push(a + len * sigma.powi((levels - i + 1) as i32));
            }
            nodes.push(b);
        }
        Side::Right => {
            nodes.push(a);
            for i in (1..=levels).rev() {
                nodes.push(b - len * sigma.powi((levels - i + 1) as i32));
            }
            nodes.push(b);
        }
        Side::Both => {
            let half = 0.5 * len;
            nodes.push(a);
            for i in 1..=levels {
                nodes.push(a + half * sigma.powi((levels - i + 1) as i32));
            }
            for i in (1..=levels).rev() {
                nodes.push(b - half * sigma.powi((levels - i + 1) as i32));
            }
            nodes.push(b);
        }
        Side::None => {
            nodes.push(a);
            nodes.push(b);
        }
    }
    let mut mesh = Mesh1D::from_nodes(nodes)?;
    mesh.grading = Grading {
        sigma,
        layers,
        refined_toward: side,
    };
    Ok(mesh)
}

/// Polynomial degree per element, all entries `>= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(Vec<usize>);

impl DegreeVector {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(invalid("degrees", "empty degree vector"));
        }
        if degrees.contains(&0) {
            return Err(invalid("degrees", "all degrees must be >= 1"));
        }
        Ok(Self(degrees))
    }

    pub fn constant(p: usize, n: usize) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.0.iter().max().unwrap()
    }
}

/// Degrees growing linearly with the layer index away from the refinement
/// point: `max(r_min, ceil(slope * layer))`.
pub fn linear_degree_vector(mesh: &Mesh1D, slope: f64, r_min: usize) -> Result<DegreeVector> {
    if mesh.grading.refined_toward == Side::None {
        return Err(invalid("mesh", "mesh carries no grading metadata"));
    }
    if !(slope > 0.0) {
        return Err(invalid("slope", format!("must be positive, got {slope}")));
    }
    if r_min == 0 {
        return Err(invalid("r_min", "must be >= 1"));
    }
    let degrees = mesh
        .layers()
        .into_iter()
        .map(|l| linear_degree(slope, l, r_min))
        .collect();
    DegreeVector::new(degrees)
}

fn linear_degree(slope: f64, layer: usize, r_min: usize) -> usize {
    // ceil with a small tolerance so that e.g. 3 * (1/3) counts as 1
    let raw = (slope * layer as f64 - 1e-12).ceil().max(0.0) as usize;
    raw.max(r_min)
}

/// Rule for temporal polynomial degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TimeDegrees {
    Constant { r: usize },
    /// Increasing over the geometric layers, constant (at the maximum) after.
    Linear { slope: f64, r_min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeMeshKind {
    Uniform { steps: usize },
    PowerGraded { steps: usize, gamma: f64 },
    GeometricPlusUniform { layers: usize, sigma: f64, t1: f64 },
}

/// Breakpoints `0 = t_0 < ... < t_M = T` with a temporal degree (>= 0) per
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    breakpoints: Vec<f64>,
    degrees: Vec<usize>,
}

impl TimePartition {
    pub fn new(breakpoints: Vec<f64>, degrees: Vec<usize>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(invalid("breakpoints", "need at least one interval"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("breakpoints", "must be strictly increasing"));
        }
        if degrees.len() != breakpoints.len() - 1 {
            return Err(invalid(
                "degrees",
                format!(
                    "length {} does not match {} intervals",
                    degrees.len(),
                    breakpoints.len() - 1
                ),
            ));
        }
        Ok(Self {
            breakpoints,
            degrees,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn num_intervals(&self) -> usize {
        self.degrees.len()
    }

    pub fn interval(&self, j: usize) -> (f64, f64) {
        (self.breakpoints[j], self.breakpoints[j + 1])
    }

    pub fn final_time(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Number of temporal degrees of freedom, `sum (r_j + 1)`.
    pub fn dim(&self) -> usize {
        self.degrees.iter().map(|r| r + 1).sum()
    }

    /// Same breakpoints, all degrees replaced by `r`.
    pub fn with_constant_degree(&self, r: usize) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            degrees: vec![r; self.degrees.len()],
        }
    }
}

pub fn time_partition(kind: TimeMeshKind, t_final: f64, degrees: TimeDegrees) -> Result<TimePartition> {
    if !(t_final > 0.0) {
        return Err(invalid("T", format!("must be positive, got {t_final}")));
    }
    let (breakpoints, graded_layers) = match kind {
        TimeMeshKind::Uniform { steps } => {
            if steps < 1 {
                return Err(invalid("steps", "must be >= 1"));
            }
            let mut bp: Vec<f64> = (0..=steps).map(|j| t_final * j as f64 / steps as f64).collect();
            bp[steps] = t_final;
            (bp, steps)
        }
        TimeMeshKind::PowerGraded { steps, gamma } => {
            if steps < 1 {
                return Err(invalid("steps", "must be >= 1"));
            }
            if !(gamma >= 1.0) {
                return Err(invalid("gamma", format!("must be >= 1, got {gamma}")));
            }
            let mut bp: Vec<f64> = (0..=steps)
                .map(|j| t_final * (j as f64 / steps as f64).powf(gamma))
                .collect();
            bp[steps] = t_final;
            (bp, steps)
        }
        TimeMeshKind::GeometricPlusUniform { layers, sigma, t1 } => {
            if layers < 1 {
                return Err(invalid("layers", "must be >= 1"));
            }
            if !(sigma > 0.0 && sigma < 1.0) {
                return Err(invalid("sigma", format!("must lie in (0,1), got {sigma}")));
            }
            if !(t1 > 0.0 && t1 <= t_final) {
                return Err(invalid("t1", format!("must lie in (0, T], got {t1}")));
            }
            let mut bp = vec![0.0];
            for i in (0..layers).rev() {
                bp.push(t1 * sigma.powi(i as i32));
            }
            let rest = t_final - t1;
            if rest > 1e-14 * t_final {
                let n = ((rest / t1) - 1e-12).ceil().max(1.0) as usize;
                for j in 1..=n {
                    bp.push(t1 + rest * j as f64 / n as f64);
                }
                *bp.last_mut().unwrap() = t_final;
            }
            (bp, layers)
        }
    };
    let intervals = breakpoints.len() - 1;
    let degs = match degrees {
        TimeDegrees::Constant { r } => vec![r; intervals],
        TimeDegrees::Linear { slope, r_min } => {
            if !(slope > 0.0) {
                return Err(invalid("slope", format!("must be positive, got {slope}")));
            }
            let graded: Vec<usize> = (0..graded_layers.min(intervals))
                .map(|l| linear_degree(slope, l, r_min))
                .collect();
            let top = *graded.iter().max().unwrap_or(&r_min);
            (0..intervals)
                .map(|j| graded.get(j).copied().unwrap_or(top))
                .collect()
        }
    };
    TimePartition::new(breakpoints, degs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn geometric_left() {
        let m = geometric_mesh_1d(0.0, 1.0, 2, 0.5, Side::Left).unwrap();
        assert!(close(m.nodes(), &[0.0, 0.25, 0.5, 1.0]));
        let m = geometric_mesh_1d(0.0, 1.0, 0, 0.5, Side::Left).unwrap();
        assert!(close(m.nodes(), &[0.0, 0.5, 1.0]));
    }

    #[test]
    fn geometric_both_and_right() {
        let m = geometric_mesh_1d(-1.0, 1.0, 2, 0.5, Side::Both).unwrap();
        assert!(close(m.nodes(), &[-1.0, -0.75, -0.5, 0.5, 0.75, 1.0]));
        let m = geometric_mesh_1d(0.0, 1.0, 2, 0.5, Side::Right).unwrap();
        assert!(close(m.nodes(), &[0.0, 0.5, 0.75, 1.0]));
        let m = geometric_mesh_1d(0.0, 2.0, 5, 0.5, Side::None).unwrap();
        assert_eq!(m.num_elements(), 1);
    }

    #[test]
    fn geometric_rejects_bad_parameters() {
        assert!(geometric_mesh_1d(0.0, 1.0, 2, 1.0, Side::Left).is_err());
        assert!(geometric_mesh_1d(0.0, 1.0, 2, 0.0, Side::Left).is_err());
        assert!(geometric_mesh_1d(1.0, 1.0, 2, 0.5, Side::Left).is_err());
    }

    #[test]
    fn geometric_ratio_and_smallest_element() {
        let (a, b, l, sigma) = (0.0, 3.0, 7, 0.3);
        let m = geometric_mesh_1d(a, b, l, sigma, Side::Left).unwrap();
        let h: Vec<f64> = m.nodes().windows(2).map(|w| w[1] - w[0]).collect();
        assert!((m.h_min() - (b - a) * sigma.powi(l as i32)).abs() < 1e-15);
        // h_1 / h_0 = (1 - sigma) / sigma, then constant ratio 1/sigma
        assert!((h[1] / h[0] - (1.0 - sigma) / sigma).abs() < 1e-10);
        for w in h[1..].windows(2) {
            assert!((w[1] / w[0] - 1.0 / sigma).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_degrees() {
        let m = geometric_mesh_1d(0.0, 1.0, 3, 0.5, Side::Left).unwrap();
        let d = linear_degree_vector(&m, 1.0, 1).unwrap();
        assert_eq!(d.as_slice(), &[1, 1, 2, 3]);
        let d = linear_degree_vector(&m, 1e-9, 2).unwrap();
        assert_eq!(d.as_slice(), &[2, 2, 2, 2]);
        let m0 = geometric_mesh_1d(0.0, 1.0, 0, 0.5, Side::Left).unwrap();
        assert_eq!(linear_degree_vector(&m0, 1.0, 1).unwrap().as_slice(), &[1, 1]);
        let mb = geometric_mesh_1d(0.0, 1.0, 2, 0.5, Side::Both).unwrap();
        assert_eq!(linear_degree_vector(&mb, 1.0, 1).unwrap().as_slice(), &[1, 1, 2, 1, 1]);
        let mr = geometric_mesh_1d(0.0, 1.0, 2, 0.5, Side::Right).unwrap();
        assert_eq!(linear_degree_vector(&mr, 1.0, 1).unwrap().as_slice(), &[2, 1, 1]);
        let plain = Mesh1D::uniform(0.0, 1.0, 3).unwrap();
        assert!(linear_degree_vector(&plain, 1.0, 1).is_err());
    }

    #[test]
    fn time_meshes() {
        let c = TimeDegrees::Constant { r: 0 };
        let p = time_partition(TimeMeshKind::Uniform { steps: 4 }, 1.0, c).unwrap();
        assert!(close(p.breakpoints(), &[0.0, 0.25, 0.5, 0.75, 1.0]));
        let p = time_partition(TimeMeshKind::PowerGraded { steps: 2, gamma: 2.0 }, 1.0, c).unwrap();
        assert!(close(p.breakpoints(), &[0.0, 0.25, 1.0]));
        let p = time_partition(
            TimeMeshKind::GeometricPlusUniform { layers: 3, sigma: 0.5, t1: 1.0 },
            1.0,
            c,
        )
        .unwrap();
        assert!(close(p.breakpoints(), &[0.0, 0.25, 0.5, 1.0]));
        let u = time_partition(TimeMeshKind::Uniform { steps: 7 }, 2.0, c).unwrap();
        let g = time_partition(TimeMeshKind::PowerGraded { steps: 7, gamma: 1.0 }, 2.0, c).unwrap();
        assert_eq!(u, g);
    }

    #[test]
    fn time_mesh_degrees_and_tail() {
        let p = time_partition(
            TimeMeshKind::GeometricPlusUniform { layers: 4, sigma: 0.5, t1: 0.5 },
            2.0,
            TimeDegrees::Linear { slope: 1.0, r_min: 0 },
        )
        .unwrap();
        assert!(close(
            p.breakpoints(),
            &[0.0, 0.0625, 0.125, 0.25, 0.5, 1.0, 1.5, 2.0]
        ));
        assert_eq!(p.degrees(), &[0, 1, 2, 3, 3, 3, 3]);
        assert_eq!(p.dim(), 1 + 2 + 3 + 4 * 4);
    }

    #[test]
    fn time_mesh_errors() {
        let c = TimeDegrees::Constant { r: 1 };
        assert!(time_partition(TimeMeshKind::PowerGraded { steps: 3, gamma: 0.5 }, 1.0, c).is_err());
        assert!(time_partition(TimeMeshKind::Uniform { steps: 0 }, 1.0, c).is_err());
        assert!(time_partition(
            TimeMeshKind::GeometricPlusUniform { layers: 3, sigma: 0.5, t1: 2.0 },
            1.0,
            c
        )
        .is_err());
    }

    #[test]
    fn locate_points() {
        let m = Mesh1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.25), Some(1));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.5), None);
    }
}
