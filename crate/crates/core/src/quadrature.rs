//! Gauss–Legendre and Gauss–Jacobi rules.
//!
//! Both rules are computed from the three-term recurrence of the associated
//! orthogonal polynomials: the eigenvalues of the Jacobi matrix give starting
//! nodes, a few Newton steps on the orthonormal polynomial polish them, and the
//! weights come from the Christoffel function `1 / sum_k p_k(x)^2`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

/// Reference interval a rule lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// `(-1, 1)`, unweighted.
    MinusOneOne,
    /// `(0, 1)` with weight `y^alpha`.
    ZeroOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_exponent: f64,
    pub reference: Reference,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of `w_i f(x_i)` on the reference interval.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// n-point Gauss–Legendre rule on `(-1, 1)`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n < 1 {
        return Err(invalid("n", "quadrature needs at least one point"));
    }
    let (points, weights) = gauss_jacobi_pm1(0.0, 0.0, n);
    Ok(QuadratureRule {
        points,
        weights,
        weight_exponent: 0.0,
        reference: Reference::MinusOneOne,
    })
}

/// n-point Gauss rule on `(0, 1)` for the weight `y^alpha`, `alpha > -1`.
pub fn gauss_jacobi(alpha: f64, n: usize) -> Result<QuadratureRule> {
    if n < 1 {
        return Err(invalid("n", "quadrature needs at least one point"));
    }
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("weight y^alpha needs alpha > -1, got {alpha}")));
    }
    let (x, w) = gauss_jacobi_pm1(0.0, alpha, n);
    let scale = 2f64.powf(-1.0 - alpha);
    Ok(QuadratureRule {
        points: x.iter().map(|&xi| 0.5 * (1.0 + xi)).collect(),
        weights: w.iter().map(|&wi| wi * scale).collect(),
        weight_exponent: alpha,
        reference: Reference::ZeroOne,
    })
}

/// Integral of `f` over `element`.
///
/// Unweighted rules are mapped affinely. A weighted rule applied to an
/// element `(0, h)` integrates `y^alpha f`: `h^(1+alpha) sum w_i f(h x_i)`.
/// On elements away from `y = 0` the weight is smooth and is absorbed into
/// the integrand with a Gauss–Legendre rule of the same size.
pub fn integrate_on_element(
    rule: &QuadratureRule,
    element: (f64, f64),
    mut f: impl FnMut(f64) -> f64,
) -> Result<f64> {
    let (a, b) = element;
    if !(a < b) {
        return Err(invalid("element", format!("need a < b, got ({a}, {b})")));
    }
    match rule.reference {
        Reference::MinusOneOne => {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            Ok(half * rule.apply(|x| f(mid + half * x)))
        }
        Reference::ZeroOne => {
            let alpha = rule.weight_exponent;
            let h = b - a;
            if a == 0.0 {
                Ok(h.powf(1.0 + alpha) * rule.apply(|x| f(h * x)))
            } else if a > 0.0 {
                let gl = gauss_legendre(rule.len())?;
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                Ok(half
                    * gl.apply(|x| {
                        let y = mid + half * x;
                        y.powf(alpha) * f(y)
                    }))
            } else {
                Err(invalid(
                    "element",
                    format!("weighted element ({a}, {b}) extends below the singular point 0"),
                ))
            }
        }
    }
}

/// Recurrence coefficients `(diag, offdiag)` of the orthonormal Jacobi
/// polynomials for the weight `(1-x)^a (1+x)^b`; `offdiag[k]` couples `k`
/// and `k+1`.
fn jacobi_recurrence(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        let d = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        diag.push(d);
        let m = kf + 1.0;
        let o = if k == 0 {
            (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
        } else {
            let t = 2.0 * m + ab;
            (4.0 * m * (m + a) * (m + b) * (m + ab) / (t * t * (t + 1.0) * (t - 1.0))).sqrt()
        };
        off.push(o);
    }
    (diag, off)
}

fn jacobi_mass(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 2f64.powf(b + 1.0) / (b + 1.0);
    }
    use statrs::function::gamma::gamma;
    2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0)
}

/// Polynomials p_0..p_n (orthonormal up to the factor `p0`) at x together
/// with p_n'(x) and `sum_{k<n} p_k(x)^2`.
fn eval_orthonormal(x: f64, diag: &[f64], off: &[f64], p0: f64, n: usize) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0, p0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut sum = 0.0;
    for k in 0..n {
        sum += p * p;
        let beta_prev = if k == 0 { 0.0 } else { off[k - 1] };
        let p_next = ((x - diag[k]) * p - beta_prev * p_prev) / off[k];
        let d_next = (p + (x - diag[k]) * d - beta_prev * d_prev) / off[k];
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d, sum)
}

fn gauss_jacobi_pm1(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (diag, off) = jacobi_recurrence(a, b, n);
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jm[(k, k)] = diag[k];
        if k + 1 < n {
            jm[(k, k + 1)] = off[k];
            jm[(k + 1, k)] = off[k];
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mass = jacobi_mass(a, b);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, d, _) = eval_orthonormal(*x, &diag, &off, 1.0, n);
            if d == 0.0 {
                break;
            }
            let step = p / d;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1e-3) {
                break;
            }
        }
        let (_, _, sum) = eval_orthonormal(*x, &diag, &off, 1.0, n);
        weights.push(mass / sum);
    }
    if a == b {
        // enforce exact symmetry of symmetric rules
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_small_rules() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.points, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
        let r = gauss_legendre(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.points[0] + x).abs() < 1e-15 && (r.points[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
        let r = gauss_legendre(3).unwrap();
        assert!((r.apply(|x| x.powi(4)) - 0.4).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn jacobi_moments() {
        let r = gauss_jacobi(0.0, 2).unwrap();
        assert!((r.apply(|y| y.powi(3)) - 0.25).abs() < 1e-15);
        let r = gauss_jacobi(0.5, 1).unwrap();
        assert!((r.apply(|_| 1.0) - 2.0 / 3.0).abs() < 1e-15);
        let r = gauss_jacobi(-0.5, 4).unwrap();
        assert!((r.apply(|y| y.powi(6)) - 2.0 / 13.0).abs() < 1e-14);
        assert!(gauss_jacobi(-1.0, 3).is_err());
        assert!(gauss_jacobi(0.3, 0).is_err());
    }

    #[test]
    fn jacobi_nodes_inside_and_positive() {
        for &alpha in &[-0.95, -0.5, 0.0, 0.5, 0.95] {
            for n in 1..=20 {
                let r = gauss_jacobi(alpha, n).unwrap();
                assert!(r.points.iter().all(|&y| y > 0.0 && y < 1.0));
                assert!(r.weights.iter().all(|&w| w > 0.0));
                assert!(r.points.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn element_integration() {
        let w1 = gauss_jacobi(1.0, 2).unwrap();
        assert!((integrate_on_element(&w1, (0.0, 2.0), |_| 1.0).unwrap() - 2.0).abs() < 1e-14);
        let gl = gauss_legendre(2).unwrap();
        assert!((integrate_on_element(&gl, (1.0, 3.0), |y| y).unwrap() - 4.0).abs() < 1e-14);
        let wm = gauss_jacobi(-0.5, 3).unwrap();
        assert!((integrate_on_element(&wm, (0.0, 1.0), |_| 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(integrate_on_element(&wm, (-1.0, 1.0), |_| 1.0).is_err());
    }

    #[test]
    fn smooth_weight_path_away_from_zero() {
        // int_a^b y^alpha y^k dy analytically vs. weight absorbed into Legendre
        for &alpha in &[-0.5, 0.5] {
            let rule = gauss_jacobi(alpha, 20).unwrap();
            for k in 0..6 {
                let (a, b) = (0.5f64, 1.5f64);
                let e = alpha + k as f64 + 1.0;
                let exact = (b.powf(e) - a.powf(e)) / e;
                let got = integrate_on_element(&rule, (a, b), |y| y.powi(k)).unwrap();
                assert!(((got - exact) / exact).abs() < 1e-12, "alpha {alpha} k {k}");
            }
        }
    }
}
