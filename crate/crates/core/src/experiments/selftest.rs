//! Fast oracle and invariant checks run by `hpfrac selftest`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{euler_extension, euler_partition, hp_design, Config, Method, Study};
use crate::error::Result;
use crate::extension::{decouple_qz, decouple_real, dense_oracle_solve, solve_g_lambda, DENSE_CAP};
use crate::linalg::strict_lower_max;
use crate::quadrature::gauss_jacobi;
use crate::timestepping::{run_dg, run_euler};

type C = Complex64;

#[derive(Debug, Clone)]
pub struct SelftestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, check: Result<(bool, String)>) -> SelftestOutcome {
    match check {
        Ok((passed, detail)) => SelftestOutcome { name, passed, detail },
        Err(e) => SelftestOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn small_config() -> Config {
    Config {
        euler_degree: 3,
        euler_layers: 2,
        ..Config::preset(Study::Smooth)
    }
}

fn oracle_equivalence(seed: u64) -> Result<(bool, String)> {
    let cfg = small_config();
    let (ext, _) = hp_design(&cfg, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f: Vec<C> = (0..ext.nx()).map(|_| C::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let mut worst = 0.0f64;
    for lam in [C::new(1.0, 0.0), C::new(10.0, 0.0), C::new(3.0, 4.0)] {
        let g = solve_g_lambda(&ext, lam, &f, false)?;
        let d = dense_oracle_solve(&ext, lam, &f, DENSE_CAP)?;
        worst = worst.max((&g.trace - &d.trace).norm() / d.trace.norm());
    }
    Ok((worst <= 1e-10, format!("max relative trace difference {worst:.3e}")))
}

fn decoupling_identities() -> Result<(bool, String)> {
    let cfg = small_config();
    let (ext, _) = hp_design(&cfg, 3)?;
    let mut worst = 0.0f64;
    let mut trace_ok = true;
    for lam in [0.1, 1.0, 10.0, 100.0] {
        let b = decouple_real(&ext, lam)?;
        let v = &b.vectors;
        let id = v.transpose() * ext.a_hat(lam) * v;
        let di = v.transpose() * ext.b_hat() * v;
        for i in 0..ext.ny() {
            for j in 0..ext.ny() {
                let e_a = if i == j { 1.0 } else { 0.0 };
                let e_b = if i == j { b.kappas[i] } else { 0.0 };
                worst = worst.max((id[(i, j)] - e_a).abs()).max((di[(i, j)] - e_b).abs());
            }
        }
        trace_ok &= b.traces.iter().all(|t| t.abs() <= (lam * ext.ds).powf(-0.5) * (1.0 + 1e-12));
    }
    let f = decouple_qz(&ext, C::new(3.0, 4.0))?;
    let tri = strict_lower_max(&f.t).max(strict_lower_max(&f.sfac));
    Ok((
        worst <= 1e-10 && trace_ok && tri <= 1e-8,
        format!("normalization {worst:.3e}, triangularity {tri:.3e}, trace bound {trace_ok}"),
    ))
}

fn quadrature_moments() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for &alpha in &[-0.9, -0.5, 0.0, 0.5, 0.9] {
        for n in 1..=10 {
            let rule = gauss_jacobi(alpha, n)?;
            for k in 0..2 * n {
                let got = rule.apply(|y| y.powi(k as i32));
                let exact = 1.0 / (k as f64 + alpha + 1.0);
                worst = worst.max(((got - exact) / exact).abs());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max relative moment error {worst:.3e}")))
}

fn euler_equivalence() -> Result<(bool, String)> {
    let cfg = small_config();
    let ext = euler_extension(&cfg)?;
    let part = euler_partition(&cfg, Method::EulerGraded, 6)?;
    let u0 = cfg.u0();
    let a = run_dg(&ext, &part, None, &u0)?;
    let b = run_euler(&ext, &part, None, &u0)?;
    let diff = a
        .blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max);
    Ok((diff <= 1e-12, format!("max coefficient difference {diff:.3e}")))
}

fn contraction() -> Result<(bool, String)> {
    let cfg = Config {
        initial: super::Initial::One,
        ..small_config()
    };
    let ext = euler_extension(&cfg)?;
    let mut ok = true;
    for method in [Method::EulerUniform, Method::EulerGraded] {
        let part = euler_partition(&cfg, method, 10)?;
        let tr = run_euler(&ext, &part, None, &cfg.u0())?;
        let norms = tr.left_norms(&ext);
        ok &= norms.windows(2).all(|w| w[1] <= w[0]);
    }
    Ok((ok, format!("norms nonincreasing: {ok}")))
}

pub fn run_selftest(seed: u64) -> Vec<SelftestOutcome> {
    vec![
        outcome("oracle equivalence", oracle_equivalence(seed)),
        outcome("decoupling identities", decoupling_identities()),
        outcome("quadrature moments", quadrature_moments()),
        outcome("euler / dg(0) equivalence", euler_equivalence()),
        outcome("semigroup contraction", contraction()),
    ]
}
