//! Tensor-product discretization of the extended (Caffarelli–Silvestre)
//! problem on `(a, b) x (0, Y)` and its decoupled solvers.
//!
//! With `S_x = stiffness + mass_c`, `M_x = mass` and
//! `A_lam = dhat + lam d_s t t^T` (`t` = trace at `y = 0`) the extended system
//! with trace shift `lam` is `(S_x (x) B + M_x (x) A_lam) U = d_s f (x) t`.
//! For real `lam` the y-pencil is diagonalized by generalized eigenvectors,
//! for complex `lam` it is triangularized by a generalized Schur form.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::hp1d::{assemble, assemble_weighted_y, AssembledForms, Boundary, HpSpace, WeightedYForms};
use crate::linalg::{qz, BandLu, BandMatrix};

type C = Complex64;

/// Default size cap for dense verification paths.
pub const DENSE_CAP: usize = 5000;

#[derive(Debug, Clone)]
pub struct ExtensionDiscretization {
    pub s: f64,
    pub alpha: f64,
    pub ds: f64,
    pub space_x: HpSpace,
    pub space_y: HpSpace,
    pub forms_x: AssembledForms,
    pub forms_y: WeightedYForms,
    sx: BandMatrix<f64>,
    dhat: DMatrix<f64>,
    bhat: DMatrix<f64>,
}

/// `2^alpha Gamma(1-s) / Gamma(s)` with `alpha = 1 - 2s`.
pub fn ds_constant(s: f64) -> f64 {
    use statrs::function::gamma::gamma;
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
}

pub fn build_extension(
    space_x: HpSpace,
    space_y: HpSpace,
    s: f64,
    a_coef: impl Fn(f64) -> f64,
    c_coef: impl Fn(f64) -> f64,
) -> Result<ExtensionDiscretization> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("must lie in (0, 1), got {s}")));
    }
    let bc = space_x.bc();
    if bc.left != Boundary::Dirichlet || bc.right != Boundary::Dirichlet {
        return Err(invalid("space_x", "x-space needs Dirichlet conditions at both ends"));
    }
    let alpha = 1.0 - 2.0 * s;
    let forms_x = assemble(&space_x, a_coef, c_coef)?;
    let forms_y = assemble_weighted_y(&space_y, alpha)?;
    let sx = forms_x.stiffness.combine(1.0, &forms_x.mass_c, 1.0);
    let dhat = forms_y.dhat.to_dense();
    let bhat = forms_y.bhat.to_dense();
    Ok(ExtensionDiscretization {
        s,
        alpha,
        ds: ds_constant(s),
        space_x,
        space_y,
        forms_x,
        forms_y,
        sx,
        dhat,
        bhat,
    })
}

/// Generalized eigenbasis of `B v = kappa A_lam v` normalized by
/// `V^T A_lam V = I`.
#[derive(Debug, Clone)]
pub struct DecoupledBasis {
    pub vectors: DMatrix<f64>,
    /// Sorted descending.
    pub kappas: Vec<f64>,
    pub traces: Vec<f64>,
    pub lambda: f64,
}

/// `Q^H A_lam Z = T`, `Q^H B Z = S`.
#[derive(Debug, Clone)]
pub struct QZFactors {
    pub q: DMatrix<C>,
    pub z: DMatrix<C>,
    pub t: DMatrix<C>,
    pub sfac: DMatrix<C>,
    pub lambda: C,
}

/// Trace coefficients of the solution of the extended problem and,
/// optionally, the full `N_x x N_y` coefficient matrix.
#[derive(Debug, Clone)]
pub struct GSolution {
    pub trace: DVector<C>,
    pub full: Option<DMatrix<C>>,
}

impl ExtensionDiscretization {
    pub fn nx(&self) -> usize {
        self.space_x.dim()
    }

    pub fn ny(&self) -> usize {
        self.space_y.dim()
    }

    /// `stiffness + mass_c` in x.
    pub fn sx(&self) -> &BandMatrix<f64> {
        &self.sx
    }

    pub fn mx(&self) -> &BandMatrix<f64> {
        &self.forms_x.mass
    }

    pub fn trace0(&self) -> &DVector<f64> {
        &self.forms_y.trace0
    }

    /// `dhat + lam d_s t t^T` for real `lam`.
    pub fn a_hat(&self, lambda: f64) -> DMatrix<f64> {
        let t = &self.forms_y.trace0;
        &self.dhat + t * t.transpose() * (lambda * self.ds)
    }

    pub fn a_hat_complex(&self, lambda: C) -> DMatrix<C> {
        let t = &self.forms_y.trace0;
        let tt = t * t.transpose();
        DMatrix::from_fn(self.ny(), self.ny(), |i, j| {
            C::new(self.dhat[(i, j)], 0.0) + lambda * self.ds * tt[(i, j)]
        })
    }

    pub fn b_hat(&self) -> &DMatrix<f64> {
        &self.bhat
    }

    pub fn d_hat(&self) -> &DMatrix<f64> {
        &self.dhat
    }

    /// Extended energy
    /// `sum_ab B_ab (w_a, w_b)_S + D_ab (w_a, w_b)_M + lam d_s |W t|_M^2`
    /// of a coefficient matrix `W` (`N_x x N_y`).
    pub fn extended_energy(&self, w: &DMatrix<C>, lambda: f64) -> f64 {
        let cols: Vec<Vec<C>> = (0..self.ny()).map(|a| w.column(a).iter().copied().collect()).collect();
        let sxc = self.sx.to_complex();
        let mxc = self.forms_x.mass.to_complex();
        let sw: Vec<Vec<C>> = cols.iter().map(|c| sxc.matvec(c)).collect();
        let mw: Vec<Vec<C>> = cols.iter().map(|c| mxc.matvec(c)).collect();
        let dot = |x: &[C], y: &[C]| -> C { x.iter().zip(y).map(|(a, b)| a.conj() * b).sum() };
        let mut e = C::new(0.0, 0.0);
        for a in 0..self.ny() {
            for b in 0..self.ny() {
                let (bab, dab) = (self.bhat[(a, b)], self.dhat[(a, b)]);
                if bab != 0.0 {
                    e += dot(&cols[a], &sw[b]) * bab;
                }
                if dab != 0.0 {
                    e += dot(&cols[a], &mw[b]) * dab;
                }
            }
        }
        let t = self.forms_y.trace0.map(|v| C::new(v, 0.0));
        let tr: Vec<C> = (w * t).iter().copied().collect();
        let mtr = mxc.matvec(&tr);
        e.re + lambda * self.ds * dot(&tr, &mtr).re
    }
}

pub fn decouple_real(ext: &ExtensionDiscretization, lambda: f64) -> Result<DecoupledBasis> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("real shift must be >= 0, got {lambda}")));
    }
    let a = ext.a_hat(lambda);
    let chol = Cholesky::new(a).ok_or_else(|| Error::Internal("y-stiffness is not positive definite".into()))?;
    let l = chol.l();
    let n = ext.ny();
    // L^{-1} B L^{-T}
    let linv_b = l
        .solve_lower_triangular(&ext.bhat)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let mut m = l
        .solve_lower_triangular(&linv_b.transpose())
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let u = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let mut v = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
    let t = &ext.forms_y.trace0;
    let mut traces = Vec::with_capacity(n);
    for c in 0..n {
        let mut tr = t.dot(&v.column(c));
        if tr < 0.0 {
            v.column_mut(c).neg_mut();
            tr = -tr;
        }
        traces.push(tr);
    }
    let kappas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if kappas.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Internal("non-positive generalized eigenvalue in y-pencil".into()));
    }
    Ok(DecoupledBasis {
        vectors: v,
        kappas,
        traces,
        lambda,
    })
}

pub fn decouple_qz(ext: &ExtensionDiscretization, lambda: C) -> Result<QZFactors> {
    if !(lambda.re >= 0.0) || lambda == C::new(0.0, 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("need Re(lambda) >= 0 and lambda != 0, got {lambda}")));
    }
    let a = ext.a_hat_complex(lambda);
    let b = ext.bhat.map(|v| C::new(v, 0.0));
    let g = qz(&a, &b)?;
    Ok(QZFactors {
        q: g.q,
        z: g.z,
        t: g.t,
        sfac: g.s,
        lambda,
    })
}

/// Factorizations for repeated solves with one shift `lambda`.
#[derive(Debug, Clone)]
pub enum PreparedSolver {
    Real {
        ds: f64,
        basis: DecoupledBasis,
        lus: Vec<BandLu<f64>>,
    },
    Complex {
        ds: f64,
        factors: QZFactors,
        sx: BandMatrix<C>,
        mx: BandMatrix<C>,
        lus: Vec<BandLu<C>>,
        /// `Q^H t`
        qt: Vec<C>,
        /// `Z^T t`
        zt: Vec<C>,
    },
}

impl PreparedSolver {
    pub fn new(ext: &ExtensionDiscretization, lambda: C) -> Result<Self> {
        if !(lambda.re >= 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda", format!("need Re(lambda) >= 0, got {lambda}")));
        }
        if lambda.im == 0.0 {
            let basis = decouple_real(ext, lambda.re)?;
            let lus = basis
                .kappas
                .par_iter()
                .enumerate()
                .map(|(i, &k)| {
                    ext.sx.combine(k, &ext.forms_x.mass, 1.0).factor().map_err(|_| Error::SingularStage {
                        index: i,
                        s_ii: C::new(k, 0.0),
                        t_ii: C::new(1.0, 0.0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(PreparedSolver::Real {
                ds: ext.ds,
                basis,
                lus,
            });
        }
        let factors = decouple_qz(ext, lambda)?;
        let n = ext.ny();
        let lus = (0..n)
            .into_par_iter()
            .map(|i| {
                let (sii, tii) = (factors.sfac[(i, i)], factors.t[(i, i)]);
                ext.sx
                    .combine(sii, &ext.forms_x.mass, tii)
                    .factor()
                    .map_err(|_| Error::SingularStage {
                        index: i,
                        s_ii: sii,
                        t_ii: tii,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let t = &ext.forms_y.trace0;
        let qt = (0..n)
            .map(|i| (0..n).map(|a| factors.q[(a, i)].conj() * t[a]).sum())
            .collect();
        let zt = (0..n).map(|i| (0..n).map(|a| factors.z[(a, i)] * t[a]).sum()).collect();
        Ok(PreparedSolver::Complex {
            ds: ext.ds,
            sx: ext.sx.to_complex(),
            mx: ext.forms_x.mass.to_complex(),
            factors,
            lus,
            qt,
            zt,
        })
    }

    /// Trace of the extended solution for the x-load `f_load`.
    pub fn solve(&self, f_load: &[C]) -> Result<DVector<C>> {
        Ok(self.solve_impl(f_load, false)?.trace)
    }

    pub fn solve_full(&self, f_load: &[C]) -> Result<GSolution> {
        self.solve_impl(f_load, true)
    }

    fn solve_impl(&self, f_load: &[C], want_full: bool) -> Result<GSolution> {
        match self {
            PreparedSolver::Real { ds, basis, lus } => {
                let fr: Vec<f64> = f_load.iter().map(|z| z.re).collect();
                let fi: Vec<f64> = f_load.iter().map(|z| z.im).collect();
                let has_im = fi.iter().any(|&v| v != 0.0);
                let comps: Vec<Vec<C>> = lus
                    .par_iter()
                    .zip(&basis.traces)
                    .map(|(lu, &tr)| {
                        let scale = ds * tr;
                        let mut re: Vec<f64> = fr.iter().map(|v| v * scale).collect();
                        lu.solve_in_place(&mut re);
                        if has_im {
                            let mut im: Vec<f64> = fi.iter().map(|v| v * scale).collect();
                            lu.solve_in_place(&mut im);
                            re.iter().zip(&im).map(|(&a, &b)| C::new(a, b)).collect()
                        } else {
                            re.iter().map(|&a| C::new(a, 0.0)).collect()
                        }
                    })
                    .collect();
                let nx = f_load.len();
                let mut trace = DVector::from_element(nx, C::new(0.0, 0.0));
                for (w, &tr) in comps.iter().zip(&basis.traces) {
                    for k in 0..nx {
                        trace[k] += w[k] * tr;
                    }
                }
                let full = want_full.then(|| {
                    let ny = basis.vectors.nrows();
                    DMatrix::from_fn(nx, ny, |k, a| {
                        comps
                            .iter()
                            .enumerate()
                            .map(|(i, w)| w[k] * basis.vectors[(a, i)])
                            .sum()
                    })
                });
                Ok(GSolution { trace, full })
            }
            PreparedSolver::Complex {
                ds,
                factors,
                sx,
                mx,
                lus,
                qt,
                zt,
            } => {
                let n = lus.len();
                let nx = f_load.len();
                let mut yhat: Vec<Vec<C>> = vec![Vec::new(); n];
                let mut syhat: Vec<Vec<C>> = vec![Vec::new(); n];
                let mut myhat: Vec<Vec<C>> = vec![Vec::new(); n];
                for i in (0..n).rev() {
                    let mut rhs: Vec<C> = f_load.iter().map(|&f| f * qt[i] * *ds).collect();
                    for j in i + 1..n {
                        let (sij, tij) = (factors.sfac[(i, j)], factors.t[(i, j)]);
                        for k in 0..nx {
                            rhs[k] -= sij * syhat[j][k] + tij * myhat[j][k];
                        }
                    }
                    lus[i].solve_in_place(&mut rhs);
                    if i > 0 {
                        syhat[i] = sx.matvec(&rhs);
                        myhat[i] = mx.matvec(&rhs);
                    }
                    yhat[i] = rhs;
                }
                let mut trace = DVector::from_element(nx, C::new(0.0, 0.0));
                for (y, &z) in yhat.iter().zip(zt) {
                    for k in 0..nx {
                        trace[k] += y[k] * z;
                    }
                }
                let full = want_full.then(|| {
                    DMatrix::from_fn(nx, n, |k, a| {
                        (0..n).map(|i| yhat[i][k] * factors.z[(a, i)]).sum()
                    })
                });
                Ok(GSolution { trace, full })
            }
        }
    }
}

/// Solution of the extended problem with trace shift `lambda` and x-load
/// `f_load`; real shifts use the eigen-decoupling, complex ones the QZ path.
pub fn solve_g_lambda(ext: &ExtensionDiscretization, lambda: C, f_load: &[C], want_full: bool) -> Result<GSolution> {
    if f_load.len() != ext.nx() {
        return Err(invalid("f_load", format!("length {} != N_x = {}", f_load.len(), ext.nx())));
    }
    PreparedSolver::new(ext, lambda)?.solve_impl(f_load, want_full)
}

fn check_cap(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded { size, cap })
    } else {
        Ok(())
    }
}

/// Direct dense solve of the full tensor system; for verification only.
pub fn dense_oracle_solve(ext: &ExtensionDiscretization, lambda: C, f_load: &[C], cap: usize) -> Result<GSolution> {
    let (nx, ny) = (ext.nx(), ext.ny());
    check_cap(nx * ny, cap)?;
    if f_load.len() != nx {
        return Err(invalid("f_load", format!("length {} != N_x = {nx}", f_load.len())));
    }
    let sx = ext.sx.to_dense();
    let mx = ext.forms_x.mass.to_dense();
    let a = ext.a_hat_complex(lambda);
    let n = nx * ny;
    let k = DMatrix::from_fn(n, n, |r, c| {
        let (i, a_) = (r / ny, r % ny);
        let (j, b_) = (c / ny, c % ny);
        C::new(sx[(i, j)] * ext.bhat[(a_, b_)], 0.0) + a[(a_, b_)] * mx[(i, j)]
    });
    let t = &ext.forms_y.trace0;
    let rhs = DVector::from_fn(n, |r, _| f_load[r / ny] * (ext.ds * t[r % ny]));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("dense extended system is singular".into()))?;
    let full = DMatrix::from_fn(nx, ny, |i, a_| sol[i * ny + a_]);
    let trace = DVector::from_fn(nx, |i, _| (0..ny).map(|a_| full[(i, a_)] * t[a_]).sum());
    Ok(GSolution {
        trace,
        full: Some(full),
    })
}

/// Matrix `L` of the discrete fractional operator in the mass inner product:
/// `(L u, v) = (1/d_s) A(lift u, lift v)`, obtained as the Schur complement of
/// the extended stiffness onto the trace block.
pub fn fractional_matrix(ext: &ExtensionDiscretization, cap: usize) -> Result<DMatrix<f64>> {
    let (nx, ny) = (ext.nx(), ext.ny());
    check_cap(nx * ny, cap)?;
    let t = &ext.forms_y.trace0;
    let ti = (0..ny)
        .find(|&a| t[a] == 1.0)
        .filter(|&a| (0..ny).all(|b| b == a || t[b] == 0.0))
        .ok_or_else(|| Error::Internal("trace functional is not a unit vector".into()))?;
    let sx = ext.sx.to_dense();
    let mx = ext.forms_x.mass.to_dense();
    let interior: Vec<usize> = (0..ny).filter(|&a| a != ti).collect();
    let ni = interior.len();
    let kval = |i: usize, a: usize, j: usize, b: usize| sx[(i, j)] * ext.bhat[(a, b)] + mx[(i, j)] * ext.dhat[(a, b)];
    let ktt = DMatrix::from_fn(nx, nx, |i, j| kval(i, ti, j, ti));
    if ni == 0 {
        return Ok(ktt / ext.ds);
    }
    let kii = DMatrix::from_fn(nx * ni, nx * ni, |r, c| kval(r / ni, interior[r % ni], c / ni, interior[c % ni]));
    let kit = DMatrix::from_fn(nx * ni, nx, |r, j| kval(r / ni, interior[r % ni], j, ti));
    let chol = Cholesky::new(kii).ok_or_else(|| Error::Internal("interior extended block not SPD".into()))?;
    let x = chol.solve(&kit);
    let mut l = (ktt - kit.transpose() * x) / ext.ds;
    for i in 0..nx {
        for j in 0..i {
            let v = 0.5 * (l[(i, j)] + l[(j, i)]);
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp1d::{build_space, BoundaryConditions};
    use crate::linalg::strict_lower_max;
    use crate::mesh::{geometric_mesh_1d, linear_degree_vector, DegreeVector, Mesh1D, Side};

    fn small_ext(s: f64, nx_el: usize, px: usize, ly: usize) -> ExtensionDiscretization {
        let mx = Mesh1D::uniform(0.0, 1.0, nx_el).unwrap();
        let sx = build_space(mx, DegreeVector::constant(px, nx_el).unwrap(), BoundaryConditions::DIRICHLET).unwrap();
        let my = geometric_mesh_1d(0.0, ly.max(1) as f64, ly, 0.5, Side::Left).unwrap();
        let dy = linear_degree_vector(&my, 1.0, 1).unwrap();
        let sy = build_space(my, dy, BoundaryConditions::RIGHT_DIRICHLET).unwrap();
        build_extension(sx, sy, s, |_| 1.0, |_| 1.0).unwrap()
    }

    fn single_y_ext() -> ExtensionDiscretization {
        let mx = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let sx = build_space(mx, DegreeVector::constant(1, 2).unwrap(), BoundaryConditions::DIRICHLET).unwrap();
        let my = Mesh1D::uniform(0.0, 1.0, 1).unwrap();
        let sy = build_space(my, DegreeVector::constant(1, 1).unwrap(), BoundaryConditions::RIGHT_DIRICHLET).unwrap();
        build_extension(sx, sy, 0.5, |_| 1.0, |_| 0.0).unwrap()
    }

    #[test]
    fn constants() {
        assert!((ds_constant(0.5) - 1.0).abs() < 1e-14);
        // 2^0.5 Gamma(0.75) / Gamma(0.25) with Gamma(0.75) = 1.2254167024651776,
        // Gamma(0.25) = 3.6256099082219083
        let expect = 2f64.sqrt() * 1.2254167024651776 / 3.625_609_908_221_908;
        assert!((ds_constant(0.25) - expect).abs() < 1e-13);
        let e = small_ext(0.25, 2, 2, 2);
        assert_eq!(e.alpha, 0.5);
    }

    #[test]
    fn invalid_s_rejected() {
        let mx = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let sx = build_space(mx, DegreeVector::constant(1, 2).unwrap(), BoundaryConditions::DIRICHLET).unwrap();
        let my = Mesh1D::uniform(0.0, 1.0, 1).unwrap();
        let sy = build_space(my, DegreeVector::constant(1, 1).unwrap(), BoundaryConditions::RIGHT_DIRICHLET).unwrap();
        for s in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(
                build_extension(sx.clone(), sy.clone(), s, |_| 1.0, |_| 0.0),
                Err(Error::InvalidParameter { name: "s", .. })
            ));
        }
    }

    #[test]
    fn hand_computed_decoupling() {
        let e = single_y_ext();
        let b = decouple_real(&e, 1.0).unwrap();
        assert!((b.vectors[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((b.kappas[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((b.traces[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kappas_decrease_with_lambda() {
        let e = small_ext(0.3, 2, 2, 3);
        let k1 = decouple_real(&e, 1.0).unwrap().kappas;
        let k2 = decouple_real(&e, 50.0).unwrap().kappas;
        for (a, b) in k1.iter().zip(&k2) {
            assert!(b <= a);
        }
    }

    #[test]
    fn qz_matches_real_eigenvalues() {
        let e = small_ext(0.6, 2, 2, 3);
        let b = decouple_real(&e, 2.0).unwrap();
        let f = decouple_qz(&e, C::new(2.0, 0.0)).unwrap();
        let mut ev: Vec<f64> = (0..e.ny()).map(|i| (f.t[(i, i)] / f.sfac[(i, i)]).re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut inv: Vec<f64> = b.kappas.iter().map(|k| 1.0 / k).collect();
        inv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&inv) {
            assert!(((a - b) / b).abs() < 1e-8, "{a} {b}");
        }
        assert!(strict_lower_max(&f.t) == 0.0 && strict_lower_max(&f.sfac) == 0.0);
    }

    #[test]
    fn zero_load_zero_solution() {
        let e = small_ext(0.5, 3, 2, 2);
        let f = vec![C::new(0.0, 0.0); e.nx()];
        for lam in [C::new(1.0, 0.0), C::new(3.0, 4.0)] {
            let g = solve_g_lambda(&e, lam, &f, false).unwrap();
            assert!(g.trace.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn solvers_agree_with_dense_oracle() {
        let e = small_ext(0.35, 3, 3, 3);
        let f: Vec<C> = (0..e.nx()).map(|i| C::new((i as f64 + 0.5).sin(), 0.0)).collect();
        for lam in [C::new(1.0, 0.0), C::new(10.0, 0.0), C::new(3.0, 4.0)] {
            let g = solve_g_lambda(&e, lam, &f, true).unwrap();
            let d = dense_oracle_solve(&e, lam, &f, DENSE_CAP).unwrap();
            let rel = (&g.trace - &d.trace).norm() / d.trace.norm();
            assert!(rel < 1e-10, "lambda {lam}: {rel}");
            let full = (g.full.unwrap() - d.full.unwrap()).norm();
            assert!(full < 1e-9 * d.trace.norm());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let e = small_ext(0.5, 3, 3, 3);
        let f = vec![C::new(1.0, 0.0); e.nx()];
        assert!(matches!(
            dense_oracle_solve(&e, C::new(1.0, 0.0), &f, 4),
            Err(Error::CapExceeded { .. })
        ));
        assert!(matches!(fractional_matrix(&e, 4), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn resolvent_consistency() {
        let e = small_ext(0.7, 3, 3, 4);
        let l = fractional_matrix(&e, DENSE_CAP).unwrap();
        let m = e.mx().to_dense();
        let g: Vec<f64> = (0..e.nx()).map(|i| 1.0 + 0.3 * i as f64).collect();
        let mg = e.mx().matvec(&g);
        let lam = 2.5;
        let lhs = (&m * lam + &l).lu().solve(&DVector::from_vec(mg.clone())).unwrap();
        let load: Vec<C> = mg.iter().map(|&v| C::new(v, 0.0)).collect();
        let tr = solve_g_lambda(&e, C::new(lam, 0.0), &load, false).unwrap().trace;
        for i in 0..e.nx() {
            assert!((lhs[i] - tr[i].re).abs() < 1e-9 * lhs.amax());
        }
    }
}
