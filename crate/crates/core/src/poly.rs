//! Small dense polynomials used for element-level stress fields.

use std::ops::{Add, Mul, Neg, Sub};

/// Univariate polynomial `c[0] + c[1] x + c[2] x^2 + ...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Re-expands `p(x)` as a polynomial in `y` with `x = y + shift`.
    pub fn shifted(&self, shift: f64) -> Poly {
        // Horner in polynomial arithmetic: p(y + s)
        let lin = Poly::new(vec![shift, 1.0]);
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &c| &(&acc * &lin) + &Poly::constant(c))
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = (i + 1) as i32;
                c * (b.powi(k) - a.powi(k)) / k as f64
            })
            .sum()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Poly { coeffs }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }
    }
}

/// Bivariate polynomial of degree at most 2 in each variable,
/// `sum_{i,j <= 2} c[i][j] x^i y^j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poly2 {
    pub c: [[f64; 3]; 3],
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2::default()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let xs = [1.0, x, x * x];
        let ys = [1.0, y, y * y];
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.c[i][j] * xs[i] * ys[j];
            }
        }
        s
    }

    pub fn dx(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for i in 1..3 {
            for j in 0..3 {
                out.c[i - 1][j] = self.c[i][j] * i as f64;
            }
        }
        out
    }

    pub fn dy(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for i in 0..3 {
            for j in 1..3 {
                out.c[i][j - 1] = self.c[i][j] * j as f64;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly2 {
        let mut out = *self;
        out.c.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Poly2) -> Poly2 {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.c[i][j] += other.c[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &Poly2) -> Poly2 {
        self.add(&other.scale(-1.0))
    }

    /// Bilinear interpolant of corner values on the unit square, corners
    /// ordered counterclockwise from the origin.
    pub fn bilinear(corners: [f64; 4]) -> Poly2 {
        let [v0, v1, v2, v3] = corners;
        let mut p = Poly2::zero();
        p.c[0][0] = v0;
        p.c[1][0] = v1 - v0;
        p.c[0][1] = v3 - v0;
        p.c[1][1] = v0 - v1 + v2 - v3;
        p
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
