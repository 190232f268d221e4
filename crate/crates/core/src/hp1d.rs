//! One-dimensional hp finite element spaces with hierarchic
//! integrated-Legendre shape functions.
//!
//! Global numbering interleaves vertices and element bubbles
//! (`v0, bubbles(e0), v1, bubbles(e1), ...`) so every assembled matrix is
//! banded with half-bandwidth equal to the largest element degree. Dirichlet
//! vertices are eliminated from the numbering.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::BandMatrix;
use crate::mesh::{DegreeVector, Mesh1D};
use crate::quadrature::{gauss_jacobi, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryConditions {
    pub left: Boundary,
    pub right: Boundary,
}

impl BoundaryConditions {
    pub const DIRICHLET: Self = Self {
        left: Boundary::Dirichlet,
        right: Boundary::Dirichlet,
    };
    pub const FREE: Self = Self {
        left: Boundary::Free,
        right: Boundary::Free,
    };
    /// Free at the left end, Dirichlet at the right end (the `y` direction).
    pub const RIGHT_DIRICHLET: Self = Self {
        left: Boundary::Free,
        right: Boundary::Dirichlet,
    };
}

/// Values and reference derivatives of the `p + 1` shape functions at
/// `xi in [-1, 1]`: two vertex hats followed by bubbles of degree 2..=p.
pub fn shape_functions(p: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut val = Vec::with_capacity(p + 1);
    let mut der = Vec::with_capacity(p + 1);
    val.push(0.5 * (1.0 - xi));
    der.push(-0.5);
    val.push(0.5 * (1.0 + xi));
    der.push(0.5);
    if p >= 2 {
        // Legendre L_0..L_p
        let mut leg = vec![1.0, xi];
        for k in 1..p {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0) * xi * leg[k] - kf * leg[k - 1]) / (kf + 1.0);
            leg.push(next);
        }
        for k in 2..=p {
            let kf = k as f64;
            val.push((leg[k] - leg[k - 2]) / (2.0 * (2.0 * kf - 1.0)).sqrt());
            der.push(((2.0 * kf - 1.0) / 2.0).sqrt() * leg[k - 1]);
        }
    }
    (val, der)
}

#[derive(Debug, Clone)]
pub struct HpSpace {
    mesh: Mesh1D,
    degrees: DegreeVector,
    bc: BoundaryConditions,
    dof_map: Vec<Vec<Option<usize>>>,
    dim: usize,
}

pub fn build_space(mesh: Mesh1D, degrees: DegreeVector, bc: BoundaryConditions) -> Result<HpSpace> {
    let ne = mesh.num_elements();
    if degrees.len() != ne {
        return Err(invalid(
            "degrees",
            format!("{} degrees for {} elements", degrees.len(), ne),
        ));
    }
    let mut next = 0usize;
    let mut vertex = vec![None; ne + 1];
    let mut dof_map = Vec::with_capacity(ne);
    let mut bubbles: Vec<Vec<usize>> = Vec::with_capacity(ne);
    for v in 0..=ne {
        let eliminated = (v == 0 && bc.left == Boundary::Dirichlet)
            || (v == ne && bc.right == Boundary::Dirichlet);
        if !eliminated {
            vertex[v] = Some(next);
            next += 1;
        }
        if v < ne {
            let p = degrees.as_slice()[v];
            bubbles.push((next..next + p - 1).collect());
            next += p - 1;
        }
    }
    for e in 0..ne {
        let mut local = vec![vertex[e], vertex[e + 1]];
        local.extend(bubbles[e].iter().map(|&d| Some(d)));
        dof_map.push(local);
    }
    Ok(HpSpace {
        mesh,
        degrees,
        bc,
        dof_map,
        dim: next,
    })
}

impl HpSpace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    pub fn bc(&self) -> BoundaryConditions {
        self.bc
    }

    pub fn dof_map(&self) -> &[Vec<Option<usize>>] {
        &self.dof_map
    }

    pub fn half_bandwidth(&self) -> usize {
        self.dof_map
            .iter()
            .map(|local| {
                let ids: Vec<usize> = local.iter().flatten().copied().collect();
                match (ids.iter().min(), ids.iter().max()) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// Global dof of the vertex at `x = a`, if it is not eliminated.
    pub fn left_vertex_dof(&self) -> Option<usize> {
        self.dof_map[0][0]
    }

    fn element_geometry(&self, e: usize) -> (f64, f64) {
        let (x0, x1) = self.mesh.element(e);
        (0.5 * (x0 + x1), 0.5 * (x1 - x0))
    }

    /// Value of a coefficient vector at `x`.
    pub fn eval_point<T: ComplexField<RealField = f64> + Copy>(&self, coeffs: &[T], x: f64) -> Result<(T, T)> {
        let e = self
            .mesh
            .locate(x)
            .ok_or_else(|| invalid("point", format!("{x} outside ({}, {})", self.mesh.a(), self.mesh.b())))?;
        let (mid, half) = self.element_geometry(e);
        let xi = ((x - mid) / half).clamp(-1.0, 1.0);
        Ok(self.eval_local(coeffs, e, xi, half))
    }

    fn eval_local<T: ComplexField<RealField = f64> + Copy>(&self, coeffs: &[T], e: usize, xi: f64, half: f64) -> (T, T) {
        let p = self.degrees.as_slice()[e];
        let (val, der) = shape_functions(p, xi);
        let mut u = T::zero();
        let mut du = T::zero();
        for (k, dof) in self.dof_map[e].iter().enumerate() {
            if let Some(d) = dof {
                u += coeffs[*d] * T::from_real(val[k]);
                du += coeffs[*d] * T::from_real(der[k] / half);
            }
        }
        (u, du)
    }

    pub fn eval<T: ComplexField<RealField = f64> + Copy>(&self, coeffs: &[T], points: &[f64]) -> Result<Vec<T>> {
        points.iter().map(|&x| self.eval_point(coeffs, x).map(|v| v.0)).collect()
    }

    /// Runs `visit(x, weight, values, derivatives)` over every quadrature
    /// point of every element using `extra + p_e` Gauss points per element.
    pub fn for_each_quadrature_point(
        &self,
        extra: usize,
        mut visit: impl FnMut(usize, f64, f64, &[f64], &[f64]),
    ) -> Result<()> {
        for e in 0..self.mesh.num_elements() {
            let p = self.degrees.as_slice()[e];
            let rule = gauss_legendre(p + extra)?;
            let (mid, half) = self.element_geometry(e);
            for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
                let (val, der) = shape_functions(p, xi);
                let der: Vec<f64> = der.iter().map(|d| d / half).collect();
                visit(e, mid + half * xi, w * half, &val, &der);
            }
        }
        Ok(())
    }
}

/// Matrices of the operator `-(A u')' + c u` in the space.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    /// `int A u' v'`
    pub stiffness: BandMatrix<f64>,
    /// `int c u v`
    pub mass_c: BandMatrix<f64>,
    /// `int u v`
    pub mass: BandMatrix<f64>,
}

fn scatter(m: &mut BandMatrix<f64>, dofs: &[Option<usize>], local: &DMatrix<f64>) {
    for (i, di) in dofs.iter().enumerate() {
        let Some(gi) = di else { continue };
        for (j, dj) in dofs.iter().enumerate() {
            let Some(gj) = dj else { continue };
            m.add(*gi, *gj, local[(i, j)]);
        }
    }
}

/// Symmetrize a local matrix by averaging, so the scattered global matrix is
/// exactly symmetric.
fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn assemble(
    space: &HpSpace,
    a_coef: impl Fn(f64) -> f64,
    c_coef: impl Fn(f64) -> f64,
) -> Result<AssembledForms> {
    validate_coefficients(space, &a_coef, &c_coef)?;
    let n = space.dim();
    let k = space.half_bandwidth();
    let mut stiffness = BandMatrix::zeros(n, k);
    let mut mass_c = BandMatrix::zeros(n, k);
    let mut mass = BandMatrix::zeros(n, k);
    for e in 0..space.mesh.num_elements() {
        let p = space.degrees.as_slice()[e];
        let rule = gauss_legendre(p + 2)?;
        let (mid, half) = space.element_geometry(e);
        let mut ks = DMatrix::zeros(p + 1, p + 1);
        let mut kc = DMatrix::zeros(p + 1, p + 1);
        let mut km = DMatrix::zeros(p + 1, p + 1);
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            let x = mid + half * xi;
            let (val, der) = shape_functions(p, xi);
            let (av, cv) = (a_coef(x), c_coef(x));
            for i in 0..=p {
                for j in 0..=p {
                    ks[(i, j)] += w * av * der[i] * der[j] / half;
                    kc[(i, j)] += w * cv * val[i] * val[j] * half;
                    km[(i, j)] += w * val[i] * val[j] * half;
                }
            }
        }
        symmetrize(&mut ks);
        symmetrize(&mut kc);
        symmetrize(&mut km);
        let dofs = &space.dof_map[e];
        scatter(&mut stiffness, dofs, &ks);
        scatter(&mut mass_c, dofs, &kc);
        scatter(&mut mass, dofs, &km);
    }
    Ok(AssembledForms {
        stiffness,
        mass_c,
        mass,
    })
}

fn validate_coefficients(space: &HpSpace, a: &impl Fn(f64) -> f64, c: &impl Fn(f64) -> f64) -> Result<()> {
    for e in 0..space.mesh.num_elements() {
        let (x0, x1) = space.mesh.element(e);
        for k in 0..=4 {
            let x = x0 + (x1 - x0) * k as f64 / 4.0;
            let (av, cv) = (a(x), c(x));
            if !(av > 0.0) || !av.is_finite() {
                return Err(Error::InvalidCoefficient(format!("A({x}) = {av} is not positive")));
            }
            if !(cv >= 0.0) || !cv.is_finite() {
                return Err(Error::InvalidCoefficient(format!("c({x}) = {cv} is negative")));
            }
        }
    }
    Ok(())
}

/// Matrices of the extension direction: weighted stiffness, weighted mass and
/// the trace functional at `y = 0`.
#[derive(Debug, Clone)]
pub struct WeightedYForms {
    /// `int_0^Y y^alpha v_i' v_j'`
    pub dhat: BandMatrix<f64>,
    /// `int_0^Y y^alpha v_i v_j`
    pub bhat: BandMatrix<f64>,
    /// `v_i(0)`
    pub trace0: DVector<f64>,
}

pub fn assemble_weighted_y(space_y: &HpSpace, alpha: f64) -> Result<WeightedYForms> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (-1, 1), got {alpha}")));
    }
    if space_y.mesh.a() != 0.0 {
        return Err(invalid("space_y", "extension mesh must start at y = 0"));
    }
    if space_y.bc.right != Boundary::Dirichlet || space_y.bc.left != Boundary::Free {
        return Err(invalid("space_y", "extension space needs a free end at 0 and a Dirichlet end at Y"));
    }
    let n = space_y.dim();
    let k = space_y.half_bandwidth();
    let mut dhat = BandMatrix::zeros(n, k);
    let mut bhat = BandMatrix::zeros(n, k);
    for e in 0..space_y.mesh.num_elements() {
        let p = space_y.degrees.as_slice()[e];
        let (y0, y1) = space_y.mesh.element(e);
        let h = y1 - y0;
        let mut kd = DMatrix::zeros(p + 1, p + 1);
        let mut kb = DMatrix::zeros(p + 1, p + 1);
        if e == 0 {
            // int_0^h y^a g(y) dy = h^(1+a) sum w g(h eta)
            let rule = gauss_jacobi(alpha, p + 2)?;
            let scale = h.powf(1.0 + alpha);
            for (&eta, &w) in rule.points.iter().zip(&rule.weights) {
                let (val, der) = shape_functions(p, 2.0 * eta - 1.0);
                for i in 0..=p {
                    for j in 0..=p {
                        kb[(i, j)] += scale * w * val[i] * val[j];
                        kd[(i, j)] += scale * w * (2.0 / h).powi(2) * der[i] * der[j];
                    }
                }
            }
        } else {
            let rule = gauss_legendre(p + 10)?;
            let (mid, half) = (0.5 * (y0 + y1), 0.5 * h);
            for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
                let y = mid + half * xi;
                let wy = w * half * y.powf(alpha);
                let (val, der) = shape_functions(p, xi);
                for i in 0..=p {
                    for j in 0..=p {
                        kb[(i, j)] += wy * val[i] * val[j];
                        kd[(i, j)] += wy * der[i] * der[j] / (half * half);
                    }
                }
            }
        }
        symmetrize(&mut kd);
        symmetrize(&mut kb);
        scatter(&mut dhat, &space_y.dof_map[e], &kd);
        scatter(&mut bhat, &space_y.dof_map[e], &kb);
    }
    let mut trace0 = DVector::zeros(n);
    let (val, _) = shape_functions(space_y.degrees.as_slice()[0], -1.0);
    for (k, dof) in space_y.dof_map[0].iter().enumerate() {
        if let Some(d) = dof {
            trace0[*d] = val[k];
        }
    }
    Ok(WeightedYForms { dhat, bhat, trace0 })
}

/// Load vector `int f phi_k` with `p + extra` Gauss points per element.
pub fn load_vector_with(space: &HpSpace, f: impl Fn(f64) -> f64, extra: usize) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(space.dim());
    space.for_each_quadrature_point(extra, |e, x, w, val, _| {
        let fx = f(x);
        for (k, dof) in space.dof_map[e].iter().enumerate() {
            if let Some(d) = dof {
                out[*d] += w * fx * val[k];
            }
        }
    })?;
    Ok(out)
}

pub fn load_vector(space: &HpSpace, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
    load_vector_with(space, f, 4)
}

/// L2 projection of `f` onto the space.
pub fn l2_project(space: &HpSpace, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
    let forms = assemble(space, |_| 1.0, |_| 0.0)?;
    l2_project_with(space, &forms.mass, f)
}

pub fn l2_project_with(space: &HpSpace, mass: &BandMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
    let rhs = load_vector_with(space, f, 6)?;
    let lu = mass
        .factor()
        .map_err(|e| Error::Internal(format!("singular mass matrix: {e}")))?;
    Ok(DVector::from_vec(lu.solve(rhs.as_slice())))
}

/// `(||u - u_h||_{L2}, |u - u_h|_{H1})` with `p + 6` Gauss points per element.
pub fn error_norms<T: ComplexField<RealField = f64> + Copy>(
    space: &HpSpace,
    coeffs: &[T],
    exact: impl Fn(f64) -> T,
    exact_derivative: impl Fn(f64) -> T,
) -> Result<(f64, f64)> {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    space.for_each_quadrature_point(6, |e, x, w, val, der| {
        let mut u = T::zero();
        let mut du = T::zero();
        for (k, dof) in space.dof_map[e].iter().enumerate() {
            if let Some(d) = dof {
                u += coeffs[*d] * T::from_real(val[k]);
                du += coeffs[*d] * T::from_real(der[k]);
            }
        }
        l2 += w * (exact(x) - u).modulus_squared();
        h1 += w * (exact_derivative(x) - du).modulus_squared();
    })?;
    Ok((l2.sqrt(), h1.sqrt()))
}

/// Squared L2 norm and squared H1 seminorm of `u_a - u_b` for functions from
/// two spaces on the same interval, integrated on the merged mesh.
pub fn difference_norms_sq<T: ComplexField<RealField = f64> + Copy>(
    space_a: &HpSpace,
    coeffs_a: &[T],
    space_b: &HpSpace,
    coeffs_b: &[T],
) -> Result<(f64, f64)> {
    let mut nodes: Vec<f64> = space_a
        .mesh
        .nodes()
        .iter()
        .chain(space_b.mesh.nodes())
        .copied()
        .collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let span = nodes.last().unwrap() - nodes[0];
    nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * span);
    let p = space_a.degrees.max().max(space_b.degrees.max());
    let rule = gauss_legendre(p + 4)?;
    let (mut l2, mut h1) = (0.0, 0.0);
    for w in nodes.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (&xi, &wq) in rule.points.iter().zip(&rule.weights) {
            let x = mid + half * xi;
            let (ua, da) = space_a.eval_point(coeffs_a, x)?;
            let (ub, db) = space_b.eval_point(coeffs_b, x)?;
            l2 += wq * half * (ua - ub).modulus_squared();
            h1 += wq * half * (da - db).modulus_squared();
        }
    }
    Ok((l2, h1))
}
