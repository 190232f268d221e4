//! Singularly perturbed reaction-diffusion `-eps^2 u'' + zeta u = f` with
//! complex `zeta` on boundary-layer meshes.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_sector, elapsed_ms, Config, ResultRow};
use crate::error::{invalid, Error, Result};
use crate::hp1d::{assemble, build_space, difference_norms_sq, load_vector, BoundaryConditions, HpSpace};
use crate::mesh::{geometric_mesh_1d, DegreeVector, Side};

type C = Complex64;

/// `theta` with `Re(e^{i theta}) > 0` and `Re(e^{i theta} zeta) > 0`.
pub fn rotation_angle(zeta: C) -> f64 {
    let delta = PI - zeta.arg().abs();
    if zeta.im >= 0.0 {
        -(PI - delta) / 2.0
    } else {
        (PI - delta) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct SingPerturbSolution {
    pub coeffs: Vec<C>,
    /// `||K u - F|| / ||F||` of the unrotated system.
    pub residual: f64,
    pub theta: f64,
}

/// Galerkin solution in `space` (Dirichlet at both ends). The system is
/// multiplied by `e^{i theta}` so that its Hermitian part is definite.
pub fn solve_singperturb(space: &HpSpace, eps: f64, zeta: C, f: impl Fn(f64) -> f64) -> Result<SingPerturbSolution> {
    if !(eps > 0.0) {
        return Err(invalid("epsilon", format!("must be positive, got {eps}")));
    }
    let forms = assemble(space, |_| 1.0, |_| 0.0)?;
    let theta = rotation_angle(zeta);
    let rot = C::from_polar(1.0, theta);
    let k = forms.stiffness.combine(rot * eps * eps, &forms.mass, rot * zeta);
    let load = load_vector(space, f)?;
    let rhs: Vec<C> = load.iter().map(|&v| rot * v).collect();
    let lu = k.factor()?;
    let coeffs = lu.solve(&rhs);
    let plain = forms.stiffness.combine(C::new(eps * eps, 0.0), &forms.mass, zeta);
    let ku = plain.matvec(&coeffs);
    let num: f64 = ku.iter().zip(load.iter()).map(|(a, &b)| (a - b).norm_sqr()).sum();
    let den: f64 = load.iter().map(|v| v * v).sum();
    Ok(SingPerturbSolution {
        coeffs,
        residual: (num / den).sqrt(),
        theta,
    })
}

/// Exact solution and derivative for `f = 1` on `(0, 1)`.
pub fn boundary_layer_solution(eps: f64, zeta: C, x: f64) -> (C, C) {
    let d = C::new(eps, 0.0) / zeta.sqrt();
    let e0 = (-x / d).exp();
    let e1 = (-(1.0 - x) / d).exp();
    let den = 1.0 + (-1.0 / d).exp();
    let u = (1.0 - (e0 + e1) / den) / zeta;
    let du = -((-e0 + e1) / d / den) / zeta;
    (u, du)
}

pub fn boundary_layer_space(cfg: &Config, p: usize) -> Result<HpSpace> {
    let layers = if cfg.bl_layers > 0 {
        cfg.bl_layers
    } else {
        (cfg.epsilon.ln() / cfg.sigma.ln() - 1e-12).ceil().max(1.0) as usize
    };
    let mesh = geometric_mesh_1d(cfg.a, cfg.b, layers, cfg.sigma, Side::Both)?;
    let n = mesh.num_elements();
    build_space(mesh, DegreeVector::constant(p, n)?, BoundaryConditions::DIRICHLET)
}

/// p-sweep on the boundary-layer mesh against a solution of degree
/// `reference_degree` on the same mesh. `err_energy` is the error in
/// `eps^2 |e|_{H1}^2 + ||e||^2`; both L2 columns carry the L2 error.
pub fn run_singperturb_bench(cfg: &Config) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let zeta = cfg.zeta();
    check_sector(zeta, cfg.sector_delta, cfg.zeta_min)?;
    let eps = cfg.epsilon;
    let ref_space = boundary_layer_space(cfg, cfg.reference_degree)?;
    let reference = solve_singperturb(&ref_space, eps, zeta, |_| 1.0)?;
    cfg.p_values
        .par_iter()
        .map(|&p| {
            let start = Instant::now();
            let space = boundary_layer_space(cfg, p)?;
            let sol = solve_singperturb(&space, eps, zeta, |_| 1.0)?;
            if !(sol.residual < 1e-8) {
                return Err(Error::Internal(format!("residual {} at p = {p}", sol.residual)));
            }
            let (l2, h1) = difference_norms_sq(&space, &sol.coeffs, &ref_space, &reference.coeffs)?;
            Ok(ResultRow {
                sweep: p as f64,
                nx: space.dim(),
                ny: 1,
                nt: 1,
                err_final_l2: l2.sqrt(),
                err_st_l2: l2.sqrt(),
                err_energy: (eps * eps * h1 + l2).sqrt(),
                wall_ms: elapsed_ms(start),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp1d::error_norms;

    #[test]
    fn rotation_makes_both_parts_positive() {
        for k in -7..=7 {
            let zeta = C::from_polar(2.0, k as f64 * PI / 8.0);
            let rot = C::from_polar(1.0, rotation_angle(zeta));
            assert!(rot.re > 0.0 && (rot * zeta).re > 0.0, "k = {k}");
        }
    }

    #[test]
    fn unperturbed_real_case() {
        let cfg = Config {
            epsilon: 1.0,
            bl_layers: 1,
            ..Config::preset(super::super::Study::Singperturb)
        };
        let one = C::new(1.0, 0.0);
        let mut prev = f64::INFINITY;
        for p in 2..=8 {
            let space = boundary_layer_space(&cfg, p).unwrap();
            let sol = solve_singperturb(&space, 1.0, one, |_| 1.0).unwrap();
            let (l2, h1) = error_norms(
                &space,
                &sol.coeffs,
                |x| boundary_layer_solution(1.0, one, x).0,
                |x| boundary_layer_solution(1.0, one, x).1,
            )
            .unwrap();
            let e = (h1 * h1 + l2 * l2).sqrt();
            assert!(e < prev);
            prev = e;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn fine_reference_matches_closed_form() {
        let cfg = Config::preset(super::super::Study::Singperturb);
        let zeta = cfg.zeta();
        let space = boundary_layer_space(&cfg, cfg.reference_degree).unwrap();
        let sol = solve_singperturb(&space, cfg.epsilon, zeta, |_| 1.0).unwrap();
        assert!(sol.residual < 1e-10);
        let (l2, h1) = error_norms(
            &space,
            &sol.coeffs,
            |x| boundary_layer_solution(cfg.epsilon, zeta, x).0,
            |x| boundary_layer_solution(cfg.epsilon, zeta, x).1,
        )
        .unwrap();
        let energy = (cfg.epsilon.powi(2) * h1 * h1 + l2 * l2).sqrt();
        assert!(energy < 1e-10, "{energy}");
    }

    #[test]
    fn sector_violation_rejected() {
        let cfg = Config {
            zeta_re: -1.0,
            zeta_im: 0.0,
            ..Config::preset(super::super::Study::Singperturb)
        };
        assert!(matches!(run_singperturb_bench(&cfg), Err(Error::InvalidParameter { name: "zeta", .. })));
    }
}
