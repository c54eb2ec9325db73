//! Gauss–Legendre rules on `[-1, 1]` and `[-1, 1]^2`.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 30;

/// A quadrature rule on the reference element. `order` is the number of
/// points per direction; an `order`-point rule is exact for polynomials of
/// degree `2 * order - 1` in each variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 2], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Integral of `f` over `[a, b]` (1D rules only).
    pub fn integrate_1d(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.iter().map(|(p, w)| w * f(mid + half * p[0])).sum::<f64>() * half
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss–Legendre rule with `order` points per direction.
pub fn gauss_rule(order: usize, dim: usize) -> Result<Quadrature> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::UnsupportedOrder { order });
    }
    let (x, w) = gauss_legendre(order);
    match dim {
        1 => Ok(Quadrature {
            dim,
            points: x.iter().map(|&p| [p, 0.0]).collect(),
            weights: w,
        }),
        2 => {
            let mut points = Vec::with_capacity(order * order);
            let mut weights = Vec::with_capacity(order * order);
            for j in 0..order {
                for i in 0..order {
                    points.push([x[i], x[j]]);
                    weights.push(w[i] * w[j]);
                }
            }
            Ok(Quadrature {
                dim,
                points,
                weights,
            })
        }
        _ => Err(Error::InvalidInput(format!(
            "quadrature dimension must be 1 or 2, got {dim}"
        ))),
    }
}

/// Adaptive Gauss–Legendre integration of `f` over `[a, b]`: a 20-point
/// rule on each interval, bisected until the two halves agree with the
/// whole to `rel_tol` (relative to the integral of `|f|`).
pub fn adaptive_gauss(a: f64, b: f64, rel_tol: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_rule(20, 1).expect("20-point rule");
    let whole = rule_pair(&rule, a, b, f);
    adapt(&rule, a, b, f, whole, rel_tol, 0)
}

fn rule_pair(rule: &Quadrature, a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (mut s, mut s_abs) = (0.0, 0.0);
    for (p, w) in rule.iter() {
        let v = f(mid + half * p[0]);
        s += w * v;
        s_abs += w * v.abs();
    }
    (s * half, s_abs * half.abs())
}

const MAX_DEPTH: usize = 30;

fn adapt(
    rule: &Quadrature,
    a: f64,
    b: f64,
    f: &impl Fn(f64) -> f64,
    whole: (f64, f64),
    rel_tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule_pair(rule, a, m, f);
    let right = rule_pair(rule, m, b, f);
    let refined = left.0 + right.0;
    if depth >= MAX_DEPTH || (refined - whole.0).abs() <= rel_tol * (left.1 + right.1) {
        return refined;
    }
    adapt(rule, a, m, f, left, rel_tol, depth + 1) + adapt(rule, m, b, f, right, rel_tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_rule() {
        let q = gauss_rule(1, 1).unwrap();
        assert_eq!(q.points, vec![[0.0, 0.0]]);
        assert_eq!(q.weights, vec![2.0]);
    }

    #[test]
    fn three_point_integrates_x4() {
        let q = gauss_rule(3, 1).unwrap();
        let s: f64 = q.iter().map(|(p, w)| w * p[0].powi(4)).sum();
        assert!((s - 0.4).abs() < 1e-15);
    }

    #[test]
    fn five_point_2d_integrates_x4y4() {
        let q = gauss_rule(5, 2).unwrap();
        let s: f64 = q.iter().map(|(p, w)| w * p[0].powi(4) * p[1].powi(4)).sum();
        assert!((s - 4.0 / 25.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_measure_and_monomials_exact() {
        for order in 1..=MAX_ORDER {
            let q = gauss_rule(order, 1).unwrap();
            let total: f64 = q.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "order {order}");
            for deg in 0..(2 * order) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let s: f64 = q.iter().map(|(p, w)| w * p[0].powi(deg as i32)).sum();
                assert!((s - exact).abs() < 1e-13, "order {order} degree {deg}: {s} vs {exact}");
            }
        }
        let q = gauss_rule(4, 2).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_rational_integral() {
        // int_0^1 dx / (1 + x)^2 = 1/2
        let v = adaptive_gauss(0.0, 1.0, 1e-14, &|x: f64| 1.0 / ((1.0 + x) * (1.0 + x)));
        assert!((v - 0.5).abs() < 1e-15);
        // x^3 / (1 + x)^2 = x - 2 + 3 / (1 + x) - 1 / (1 + x)^2
        let exact = 3.0 * 2f64.ln() - 2.0;
        let v = adaptive_gauss(0.0, 1.0, 1e-14, &|x: f64| x.powi(3) / ((1.0 + x) * (1.0 + x)));
        assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
    }

    #[test]
    fn unsupported_orders_rejected() {
        assert!(matches!(gauss_rule(0, 1), Err(Error::UnsupportedOrder { order: 0 })));
        assert!(gauss_rule(31, 2).is_err());
        assert!(gauss_rule(3, 3).is_err());
    }
}
