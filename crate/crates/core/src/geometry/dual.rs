//! First-order forward-mode dual numbers over the coordinate directions.
//!
//! A `Dual` carries a value and its partial derivatives with respect to the
//! chart coordinates. Feeding exact (symbolic) first and second derivatives of
//! the input fields through the coordinate formulas yields exact derivatives of
//! Christoffel symbols, `tr(∇T)` and the vector fields whose divergence enters
//! the drift constant.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::expressions::MAX_VARS;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_VARS],
}

impl Dual {
    pub const ZERO: Dual = Dual {
        v: 0.0,
        d: [0.0; MAX_VARS],
    };

    pub fn constant(v: f64) -> Self {
        Dual {
            v,
            d: [0.0; MAX_VARS],
        }
    }

    pub fn new(v: f64, grad: &[f64]) -> Self {
        let mut d = [0.0; MAX_VARS];
        d[..grad.len()].copy_from_slice(grad);
        Dual { v, d }
    }

    fn map(self, v: f64, slope: f64) -> Self {
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= slope);
        Dual { v, d }
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.map(r, 0.5 / r)
    }

    pub fn ln(self) -> Self {
        self.map(self.v.ln(), 1.0 / self.v)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e)
    }

    pub fn scale(self, s: f64) -> Self {
        self.map(self.v * s, s)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, rhs: Dual) -> Dual {
        self.v += rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d) {
            *a += b;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: Dual) -> Dual {
        self.v -= rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d) {
            *a -= b;
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let mut d = [0.0; MAX_VARS];
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = self.d[k] * rhs.v + self.v * rhs.d[k];
        }
        Dual {
            v: self.v * rhs.v,
            d,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        let mut d = [0.0; MAX_VARS];
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = (self.d[k] - v * rhs.d[k]) * inv;
        }
        Dual { v, d }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, rhs: f64) -> Dual {
        self.scale(rhs)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, rhs: Dual) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, rhs: Dual) {
        *self = *self - rhs;
    }
}

/// Dense n×n matrix of duals, row-major.
#[derive(Debug, Clone)]
pub struct DualMat {
    pub n: usize,
    pub a: Vec<Dual>,
}

impl DualMat {
    pub fn zeros(n: usize) -> Self {
        DualMat {
            n,
            a: vec![Dual::ZERO; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Dual {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Dual) {
        self.a[i * self.n + j] = v;
    }

    /// Gauss-Jordan inverse with partial pivoting on values; `None` if singular.
    pub fn inverse(&self) -> Option<DualMat> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = DualMat::zeros(n);
        for i in 0..n {
            inv.set(i, i, Dual::constant(1.0));
        }
        let scale = self.a.iter().fold(0.0f64, |m, x| m.max(x.v.abs()));
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a.at(r, col).v.abs().total_cmp(&a.at(s, col).v.abs()))
                .unwrap();
            if a.at(pivot, col).v.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    a.a.swap(pivot * n + j, col * n + j);
                    inv.a.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a.at(col, col);
            for j in 0..n {
                a.set(col, j, a.at(col, j) / p);
                inv.set(col, j, inv.at(col, j) / p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.at(r, col);
                if f == Dual::ZERO {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.at(r, j) - f * a.at(col, j));
                    inv.set(r, j, inv.at(r, j) - f * inv.at(col, j));
                }
            }
        }
        Some(inv)
    }

    /// Determinant by elimination; assumes the matrix is nonsingular at the value level.
    pub fn det(&self) -> Dual {
        let n = self.n;
        let mut a = self.clone();
        let mut det = Dual::constant(1.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a.at(r, col).v.abs().total_cmp(&a.at(s, col).v.abs()))
                .unwrap();
            if pivot != col {
                for j in 0..n {
                    a.a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a.at(col, col);
            det = det * p;
            if p.v == 0.0 {
                return det;
            }
            for r in col + 1..n {
                let f = a.at(r, col) / p;
                for j in col..n {
                    a.set(r, j, a.at(r, j) - f * a.at(col, j));
                }
            }
        }
        det
    }

    pub fn values(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.at(i, j).v)
    }
}
