//! hp discontinuous Galerkin time stepping for `u' + L^s u = f` and the
//! implicit Euler method as its lowest order member.
//!
//! On an interval of length `k` the DG solution is expanded in the
//! L2-orthonormal Legendre polynomials `p_m` of the reference interval
//! `(-1, 1)`. Testing with `p_n` gives
//! `sum_m C[n,m] M U_m + (k/2) L U_n = R_n` with the temporal coupling
//! `C[n,m] = int p_m' p_n + p_m(-1) p_n(-1)`. A complex Schur form of `C`
//! turns this into a sequence of shifted resolvent solves
//! `(lam M + L)^{-1}`, each realized as a trace of the extended problem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::extension::{ExtensionDiscretization, PreparedSolver};
use crate::hp1d::{error_norms, l2_project_with, load_vector, load_vector_with, HpSpace};
use crate::linalg::{complex_schur, to_complex};
use crate::mesh::TimePartition;
use crate::quadrature::gauss_legendre;

type C = Complex64;

/// Space-dependent load at a fixed time, returned as the vector
/// `(f(t), phi_k)`.
pub type LoadFn<'a> = &'a (dyn Fn(f64) -> Result<DVector<f64>> + Sync);

/// `p_0 .. p_r` at `tau` together with their derivatives.
pub fn orthonormal_legendre(r: usize, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let mut leg = vec![1.0];
    if r >= 1 {
        leg.push(tau);
    }
    for m in 1..r {
        let mf = m as f64;
        leg.push(((2.0 * mf + 1.0) * tau * leg[m] - mf * leg[m - 1]) / (mf + 1.0));
    }
    let der: Vec<f64> = (0..=r)
        .map(|m| {
            let mut d = 0.0;
            let mut k = m as i64 - 1;
            while k >= 0 {
                d += (2 * k + 1) as f64 * leg[k as usize];
                k -= 2;
            }
            d
        })
        .collect();
    let scale = |m: usize| ((2 * m + 1) as f64 / 2.0).sqrt();
    (
        (0..=r).map(|m| scale(m) * leg[m]).collect(),
        (0..=r).map(|m| scale(m) * der[m]).collect(),
    )
}

#[derive(Debug, Clone)]
pub struct TimeBlock {
    pub r: usize,
    /// Row index is the test function, column index the trial function.
    pub coupling: DMatrix<f64>,
    pub schur_q: DMatrix<C>,
    pub schur_t: DMatrix<C>,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

pub fn dg_time_block(r: usize) -> Result<TimeBlock> {
    let n = r + 1;
    let rule = gauss_legendre(n)?;
    let mut c = DMatrix::zeros(n, n);
    for (&tau, &w) in rule.points.iter().zip(&rule.weights) {
        let (p, dp) = orthonormal_legendre(r, tau);
        for row in 0..n {
            for col in 0..n {
                c[(row, col)] += w * dp[col] * p[row];
            }
        }
    }
    let (left, _) = orthonormal_legendre(r, -1.0);
    let (right, _) = orthonormal_legendre(r, 1.0);
    for row in 0..n {
        for col in 0..n {
            c[(row, col)] += left[col] * left[row];
        }
    }
    let (q, t) = complex_schur(&to_complex(&c))?;
    for i in 0..n {
        if !(t[(i, i)].re > 0.0) {
            return Err(Error::Internal(format!(
                "temporal coupling eigenvalue {} has non-positive real part",
                t[(i, i)]
            )));
        }
    }
    let q_rule = gauss_legendre(r + 4)?;
    Ok(TimeBlock {
        r,
        coupling: c,
        schur_q: q,
        schur_t: t,
        quad_points: q_rule.points,
        quad_weights: q_rule.weights,
        left,
        right,
    })
}

impl TimeBlock {
    /// `||Q T Q^H - C||_max`.
    pub fn schur_residual(&self) -> f64 {
        let c = to_complex(&self.coupling);
        (&self.schur_q * &self.schur_t * self.schur_q.adjoint() - c).camax()
    }

    /// `p_m(-1)`.
    pub fn left_values(&self) -> &[f64] {
        &self.left
    }

    /// `p_m(1)`.
    pub fn right_values(&self) -> &[f64] {
        &self.right
    }

    /// Shifts `2 T_ii / k` of the stage resolvents.
    pub fn stage_shifts(&self, k: f64) -> Vec<C> {
        (0..=self.r).map(|i| self.schur_t[(i, i)] * (2.0 / k)).collect()
    }

    /// Prepared resolvent solvers for every stage of an interval of length `k`.
    pub fn prepare(&self, ext: &ExtensionDiscretization, k: f64) -> Result<Vec<PreparedSolver>> {
        self.stage_shifts(k)
            .into_iter()
            .map(|lam| PreparedSolver::new(ext, lam))
            .collect()
    }

    /// Temporal load moments `(k/2) int p_n F(t(tau)) dtau` as columns.
    fn load_moments(&self, nx: usize, interval: (f64, f64), load: Option<LoadFn>) -> Result<DMatrix<f64>> {
        let (t0, t1) = interval;
        let half = 0.5 * (t1 - t0);
        let mut r = DMatrix::zeros(nx, self.r + 1);
        if let Some(load) = load {
            for (&tau, &w) in self.quad_points.iter().zip(&self.quad_weights) {
                let fl = load(t0 + half * (tau + 1.0))?;
                let (p, _) = orthonormal_legendre(self.r, tau);
                for n in 0..=self.r {
                    for k in 0..nx {
                        r[(k, n)] += half * w * p[n] * fl[k];
                    }
                }
            }
        }
        Ok(r)
    }
}

/// Temporal modes (`N_x x (r+1)`) on one interval. `jump_load` is the vector
/// `(u^-, phi_k)` of the incoming state (for the first interval the load of
/// the initial condition).
pub fn dg_step(
    ext: &ExtensionDiscretization,
    block: &TimeBlock,
    stages: &[PreparedSolver],
    interval: (f64, f64),
    load: Option<LoadFn>,
    jump_load: &[f64],
) -> Result<DMatrix<f64>> {
    let nx = ext.nx();
    let (t0, t1) = interval;
    if !(t1 > t0) {
        return Err(invalid("interval", format!("need t0 < t1, got ({t0}, {t1})")));
    }
    let k = t1 - t0;
    let n = block.r + 1;
    let mut rhs = block.load_moments(nx, interval, load)?;
    for m in 0..n {
        for i in 0..nx {
            rhs[(i, m)] += block.left[m] * jump_load[i];
        }
    }
    // R_hat = R conj(Q)
    let rhs_c = to_complex(&rhs);
    let qc = block.schur_q.map(|z| z.conj());
    let rhat = rhs_c * &qc;
    let mx = ext.mx().to_complex();
    let mut what: Vec<Vec<C>> = vec![Vec::new(); n];
    let mut mwhat: Vec<Vec<C>> = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let mut g: Vec<C> = rhat.column(i).iter().copied().collect();
        for j in i + 1..n {
            let tij = block.schur_t[(i, j)];
            for x in 0..nx {
                g[x] -= tij * mwhat[j][x];
            }
        }
        for v in g.iter_mut() {
            *v *= 2.0 / k;
        }
        let w: Vec<C> = stages[i].solve(&g)?.iter().copied().collect();
        if i > 0 {
            mwhat[i] = mx.matvec(&w);
        }
        what[i] = w;
    }
    // U = W_hat Q^T
    let mut u = DMatrix::zeros(nx, n);
    for m in 0..n {
        for i in 0..n {
            let q = block.schur_q[(m, i)];
            for x in 0..nx {
                u[(x, m)] += (what[i][x] * q).re;
            }
        }
    }
    Ok(u)
}

/// Piecewise polynomial-in-time discrete solution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub partition: TimePartition,
    /// Per interval, `N_x x (r_j + 1)` temporal mode coefficients.
    pub blocks: Vec<DMatrix<f64>>,
    /// L2 projection of the initial condition.
    pub initial: DVector<f64>,
}

impl Trajectory {
    fn modes_at(&self, j: usize, tau: f64) -> DVector<f64> {
        let b = &self.blocks[j];
        let (p, _) = orthonormal_legendre(b.ncols() - 1, tau);
        b * DVector::from_vec(p)
    }

    /// Right-continuous evaluation on `[t_{j-1}, t_j)`; at the final time the
    /// left limit.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let bp = self.partition.breakpoints();
        let (t0, tn) = (bp[0], *bp.last().unwrap());
        if !(t >= t0 && t <= tn) {
            return Err(invalid("t", format!("{t} outside [{t0}, {tn}]")));
        }
        let j = match bp.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.blocks.len() - 1),
            Err(i) => i - 1,
        };
        let (a, b) = self.partition.interval(j);
        let tau = (2.0 * (t - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        Ok(self.modes_at(j, tau))
    }

    /// `u(t_j^-)` for `j = 1..=n`.
    pub fn eval_left(&self, j: usize) -> DVector<f64> {
        self.modes_at(j - 1, 1.0)
    }

    /// `u(t_j^+)` for `j = 0..n`.
    pub fn eval_right(&self, j: usize) -> DVector<f64> {
        self.modes_at(j, -1.0)
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.eval_left(self.blocks.len())
    }

    /// `||u(t_j^-)||_{L2}` for `j = 1..=n`.
    pub fn left_norms(&self, ext: &ExtensionDiscretization) -> Vec<f64> {
        (1..=self.blocks.len())
            .map(|j| {
                let u = self.eval_left(j);
                ext.mx().bilinear(u.as_slice(), u.as_slice()).max(0.0).sqrt()
            })
            .collect()
    }

    /// Number of resolvent solves used to compute the trajectory.
    pub fn num_solves(&self) -> usize {
        self.partition.dim()
    }
}

fn initial_data(ext: &ExtensionDiscretization, u0: &(dyn Fn(f64) -> f64 + Sync)) -> Result<(Vec<f64>, DVector<f64>)> {
    let load = load_vector_with(&ext.space_x, u0, 6)?;
    let proj = l2_project_with(&ext.space_x, ext.mx(), u0)?;
    Ok((load.as_slice().to_vec(), proj))
}

/// Time-space source as an x-load callback.
pub fn source_load<'a>(
    space: &'a HpSpace,
    f: &'a (dyn Fn(f64, f64) -> f64 + Sync),
) -> impl Fn(f64) -> Result<DVector<f64>> + Sync + 'a {
    move |t| load_vector(space, |x| f(t, x))
}

fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
}

/// DG in time on `partition`; `load` is `None` for `f = 0`.
pub fn run_dg(
    ext: &ExtensionDiscretization,
    partition: &TimePartition,
    load: Option<LoadFn>,
    u0: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Trajectory> {
    let (mut jump, initial) = initial_data(ext, u0)?;
    let mut blocks = Vec::with_capacity(partition.num_intervals());
    let mut cache: Option<(usize, f64, TimeBlock, Vec<PreparedSolver>)> = None;
    for j in 0..partition.num_intervals() {
        let interval = partition.interval(j);
        let k = interval.1 - interval.0;
        let r = partition.degrees()[j];
        let reuse = matches!(&cache, Some((cr, ck, _, _)) if *cr == r && same_length(*ck, k));
        if !reuse {
            let block = dg_time_block(r)?;
            let stages = block
                .prepare(ext, k)
                .map_err(|e| Error::Interval { interval: j, source: Box::new(e) })?;
            cache = Some((r, k, block, stages));
        }
        let (_, _, block, stages) = cache.as_ref().unwrap();
        let u = dg_step(ext, block, stages, interval, load, &jump)
            .map_err(|e| Error::Interval { interval: j, source: Box::new(e) })?;
        let right = &u * DVector::from_column_slice(block.right_values());
        jump = ext.mx().matvec(right.as_slice());
        blocks.push(u);
    }
    Ok(Trajectory {
        partition: partition.clone(),
        blocks,
        initial,
    })
}

/// Implicit Euler `(M/k + L) u_n = M u_{n-1} / k + mean_n(f)` on the breakpoints
/// of `partition`, with `mean_n` the integral mean over the step.
pub fn run_euler(
    ext: &ExtensionDiscretization,
    partition: &TimePartition,
    load: Option<LoadFn>,
    u0: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Trajectory> {
    let partition = partition.with_constant_degree(0);
    let (mut prev_load, initial) = initial_data(ext, u0)?;
    let nx = ext.nx();
    let rule = gauss_legendre(4)?;
    let mut blocks = Vec::with_capacity(partition.num_intervals());
    let mut cache: Option<(f64, PreparedSolver)> = None;
    for j in 0..partition.num_intervals() {
        let (t0, t1) = partition.interval(j);
        let k = t1 - t0;
        if !matches!(&cache, Some((ck, _)) if same_length(*ck, k)) {
            let solver = PreparedSolver::new(ext, C::new(1.0 / k, 0.0))
                .map_err(|e| Error::Interval { interval: j, source: Box::new(e) })?;
            cache = Some((k, solver));
        }
        let solver = &cache.as_ref().unwrap().1;
        let mut rhs: Vec<f64> = prev_load.iter().map(|v| v / k).collect();
        if let Some(load) = load {
            for (&tau, &w) in rule.points.iter().zip(&rule.weights) {
                let fl = load(t0 + 0.5 * k * (tau + 1.0))?;
                for x in 0..nx {
                    rhs[x] += 0.5 * w * fl[x];
                }
            }
        }
        let rc: Vec<C> = rhs.iter().map(|&v| C::new(v, 0.0)).collect();
        let u: Vec<f64> = solver
            .solve(&rc)
            .map_err(|e| Error::Interval { interval: j, source: Box::new(e) })?
            .iter()
            .map(|z| z.re)
            .collect();
        prev_load = ext.mx().matvec(&u);
        blocks.push(DMatrix::from_fn(nx, 1, |x, _| std::f64::consts::SQRT_2 * u[x]));
    }
    Ok(Trajectory {
        partition,
        blocks,
        initial,
    })
}

/// Space-time L2 error and final-time `(L2, H1-seminorm)` errors against an
/// exact solution `u(t, x)` with x-derivative `du(t, x)`.
pub fn errors_vs_exact(
    ext: &ExtensionDiscretization,
    traj: &Trajectory,
    u: &(dyn Fn(f64, f64) -> f64 + Sync),
    du: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Result<(f64, f64, f64)> {
    let mut st = 0.0;
    for j in 0..traj.blocks.len() {
        let (t0, t1) = traj.partition.interval(j);
        let half = 0.5 * (t1 - t0);
        let rule = gauss_legendre(traj.blocks[j].ncols() + 4)?;
        for (&tau, &w) in rule.points.iter().zip(&rule.weights) {
            let t = t0 + half * (tau + 1.0);
            let uh = traj.modes_at(j, tau);
            let (e, _) = error_norms(&ext.space_x, uh.as_slice(), |x| u(t, x), |x| du(t, x))?;
            st += half * w * e * e;
        }
    }
    let tf = traj.partition.final_time();
    let (l2, h1) = error_norms(&ext.space_x, traj.final_state().as_slice(), |x| u(tf, x), |x| du(tf, x))?;
    Ok((st.sqrt(), l2, h1))
}

/// Space-time L2 distance and final-time `(L2, H1-seminorm)` distances between
/// two trajectories on the same time interval, possibly with different
/// spaces and partitions.
pub fn trajectory_difference(
    space_a: &HpSpace,
    a: &Trajectory,
    space_b: &HpSpace,
    b: &Trajectory,
) -> Result<(f64, f64, f64)> {
    let mut bp: Vec<f64> = a
        .partition
        .breakpoints()
        .iter()
        .chain(b.partition.breakpoints())
        .copied()
        .collect();
    bp.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let span = bp.last().unwrap() - bp[0];
    bp.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * span);
    let rmax = a
        .partition
        .degrees()
        .iter()
        .chain(b.partition.degrees())
        .copied()
        .max()
        .unwrap_or(0);
    let rule = gauss_legendre(rmax + 4)?;
    let mut st = 0.0;
    for w in bp.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        for (&tau, &wq) in rule.points.iter().zip(&rule.weights) {
            let t = w[0] + half * (tau + 1.0);
            let (ua, ub) = (a.eval(t)?, b.eval(t)?);
            let (l2, _) = crate::hp1d::difference_norms_sq(space_a, ua.as_slice(), space_b, ub.as_slice())?;
            st += half * wq * l2;
        }
    }
    let (l2, h1) = crate::hp1d::difference_norms_sq(
        space_a,
        a.final_state().as_slice(),
        space_b,
        b.final_state().as_slice(),
    )?;
    Ok((st.sqrt(), l2.sqrt(), h1.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{build_extension, fractional_matrix, DENSE_CAP};
    use crate::hp1d::{build_space, BoundaryConditions};
    use crate::mesh::{geometric_mesh_1d, linear_degree_vector, time_partition, DegreeVector, Mesh1D, Side, TimeDegrees, TimeMeshKind};

    fn ext(s: f64) -> ExtensionDiscretization {
        let mx = Mesh1D::uniform(0.0, 1.0, 3).unwrap();
        let sx = build_space(mx, DegreeVector::constant(3, 3).unwrap(), BoundaryConditions::DIRICHLET).unwrap();
        let my = geometric_mesh_1d(0.0, 3.0, 3, 0.5, Side::Left).unwrap();
        let dy = linear_degree_vector(&my, 1.0, 1).unwrap();
        let sy = build_space(my, dy, BoundaryConditions::RIGHT_DIRICHLET).unwrap();
        build_extension(sx, sy, s, |_| 1.0, |_| 1.0).unwrap()
    }

    #[test]
    fn lowest_order_block() {
        let b = dg_time_block(0).unwrap();
        assert!((b.coupling[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((b.schur_t[(0, 0)].re - 0.5).abs() < 1e-15);
        assert_eq!(b.schur_t[(0, 0)].im, 0.0);
    }

    #[test]
    fn higher_order_blocks() {
        for r in 1..=8 {
            let b = dg_time_block(r).unwrap();
            assert!(b.schur_residual() < 1e-12, "r = {r}");
            assert!((0..=r).all(|i| b.schur_t[(i, i)].re > 0.0));
        }
    }

    #[test]
    fn legendre_derivatives() {
        let (p, dp) = orthonormal_legendre(3, 0.3);
        let h = 1e-6;
        let (pp, _) = orthonormal_legendre(3, 0.3 + h);
        let (pm, _) = orthonormal_legendre(3, 0.3 - h);
        for m in 0..=3 {
            assert!(((pp[m] - pm[m]) / (2.0 * h) - dp[m]).abs() < 1e-8);
        }
        assert!((p[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_data_zero_trajectory() {
        let e = ext(0.5);
        let part = time_partition(TimeMeshKind::Uniform { steps: 3 }, 1.0, TimeDegrees::Constant { r: 2 }).unwrap();
        let tr = run_dg(&e, &part, None, &|_| 0.0).unwrap();
        assert!(tr.blocks.iter().all(|b| b.amax() == 0.0));
    }

    #[test]
    fn one_step_matches_dense_resolvent() {
        let e = ext(0.4);
        let part = time_partition(TimeMeshKind::Uniform { steps: 1 }, 0.3, TimeDegrees::Constant { r: 0 }).unwrap();
        let u0 = |x: f64| x * (1.0 - x) * (3.0 * x).cos();
        let tr = run_dg(&e, &part, None, &u0).unwrap();
        let l = fractional_matrix(&e, DENSE_CAP).unwrap();
        let m = e.mx().to_dense();
        let pi = &tr.initial;
        let expect = (&m + &l * 0.3).lu().solve(&(&m * pi)).unwrap();
        let got = tr.final_state();
        assert!((&got - &expect).amax() < 1e-9 * expect.amax());
    }

    #[test]
    fn dg_stages_match_monolithic_solve() {
        let e = ext(0.6);
        let l = fractional_matrix(&e, DENSE_CAP).unwrap();
        let m = e.mx().to_dense();
        let nx = e.nx();
        for r in [1usize, 2, 3] {
            let block = dg_time_block(r).unwrap();
            let k = 0.25;
            let stages = block.prepare(&e, k).unwrap();
            let jump: Vec<f64> = (0..nx).map(|i| (i as f64 * 0.7).cos()).collect();
            let load = |t: f64| -> Result<DVector<f64>> { Ok(DVector::from_fn(nx, |i, _| (t + i as f64).sin())) };
            let u = dg_step(&e, &block, &stages, (0.1, 0.1 + k), Some(&load), &jump).unwrap();
            let n = r + 1;
            let big = DMatrix::from_fn(n * nx, n * nx, |a, b| {
                let (ni, xi) = (a / nx, a % nx);
                let (mi, xj) = (b / nx, b % nx);
                let mut v = block.coupling[(ni, mi)] * m[(xi, xj)];
                if ni == mi {
                    v += 0.5 * k * l[(xi, xj)];
                }
                v
            });
            let rhs_modes = block.load_moments(nx, (0.1, 0.1 + k), Some(&load)).unwrap();
            let rhs = DVector::from_fn(n * nx, |a, _| {
                let (ni, xi) = (a / nx, a % nx);
                rhs_modes[(xi, ni)] + block.left_values()[ni] * jump[xi]
            });
            let sol = big.lu().solve(&rhs).unwrap();
            for mm in 0..n {
                for x in 0..nx {
                    assert!((u[(x, mm)] - sol[mm * nx + x]).abs() < 1e-9 * sol.amax(), "r = {r}");
                }
            }
        }
    }

    #[test]
    fn euler_is_dg_zero() {
        let e = ext(0.3);
        let part = time_partition(
            TimeMeshKind::PowerGraded { steps: 7, gamma: 2.0 },
            1.0,
            TimeDegrees::Constant { r: 0 },
        )
        .unwrap();
        let space = e.space_x.clone();
        let f = |t: f64, x: f64| (t * x).exp();
        let load = source_load(&space, &f);
        let u0 = |x: f64| (std::f64::consts::PI * x).sin();
        let a = run_dg(&e, &part, Some(&load), &u0).unwrap();
        let b = run_euler(&e, &part, Some(&load), &u0).unwrap();
        for (x, y) in a.blocks.iter().zip(&b.blocks) {
            assert!((x - y).amax() < 1e-12);
        }
    }

    #[test]
    fn evaluation_conventions() {
        let e = ext(0.5);
        let part = time_partition(TimeMeshKind::Uniform { steps: 4 }, 1.0, TimeDegrees::Constant { r: 1 }).unwrap();
        let tr = run_dg(&e, &part, None, &|x| x * (1.0 - x)).unwrap();
        let at = tr.eval(0.25).unwrap();
        assert!((at - tr.eval_right(1)).amax() == 0.0);
        let end = tr.eval(1.0).unwrap();
        assert!((end - tr.final_state()).amax() == 0.0);
        assert!(tr.eval(1.5).is_err());
        assert_eq!(tr.num_solves(), 8);
    }
}
