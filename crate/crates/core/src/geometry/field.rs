//! Expression-backed scalar fields with precomputed symbolic derivatives, and
//! the tensor and drift fields built from them.

use nalgebra::DMatrix;

use super::dual::{Dual, DualMat};
use super::{Chart, GeometryError};
use crate::expressions::{EvalError, Expr};

/// A scalar function of the chart coordinates together with its symbolic
/// partial derivatives up to a fixed order (at most 3).
#[derive(Debug, Clone)]
pub struct ScalarField {
    dim: usize,
    order: usize,
    expr: Expr,
    /// `d1[i] = ∂_i f`
    d1: Vec<Expr>,
    /// `d2[i][j] = ∂_i ∂_j f`, full (symmetric) storage
    d2: Vec<Vec<Expr>>,
    /// `d3[i][j][k] = ∂_i ∂_j ∂_k f`
    d3: Vec<Vec<Vec<Expr>>>,
    constant: Option<f64>,
}

impl ScalarField {
    pub fn new(expr: Expr, dim: usize, order: usize) -> Self {
        assert!(
            order <= 3,
            "derivatives above third order are not tabulated"
        );
        let d1: Vec<Expr> = if order >= 1 {
            (0..dim).map(|i| expr.differentiate(i)).collect()
        } else {
            Vec::new()
        };
        let d2: Vec<Vec<Expr>> = if order >= 2 {
            let mut d2 = vec![vec![Expr::Num(0.0); dim]; dim];
            for i in 0..dim {
                for j in i..dim {
                    let e = d1[i].differentiate(j);
                    d2[j][i] = e.clone();
                    d2[i][j] = e;
                }
            }
            d2
        } else {
            Vec::new()
        };
        let d3 = if order >= 3 {
            let mut d3 = vec![vec![vec![Expr::Num(0.0); dim]; dim]; dim];
            for i in 0..dim {
                for j in i..dim {
                    for k in j..dim {
                        let e = d2[i][j].differentiate(k);
                        for (a, b, c) in permutations(i, j, k) {
                            d3[a][b][c] = e.clone();
                        }
                    }
                }
            }
            d3
        } else {
            Vec::new()
        };
        let constant = match expr {
            Expr::Num(v) => Some(v),
            _ => None,
        };
        ScalarField {
            dim,
            order,
            expr,
            d1,
            d2,
            d3,
            constant,
        }
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        ScalarField::new(Expr::Num(value), dim, 3)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn value(&self, p: &[f64]) -> Result<f64, EvalError> {
        match self.constant {
            Some(v) => Ok(v),
            None => self.expr.eval(p),
        }
    }

    pub fn grad(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.require(1);
        if self.constant.is_some() {
            return Ok(vec![0.0; self.dim]);
        }
        self.d1.iter().map(|e| e.eval(p)).collect()
    }

    pub fn hessian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        self.require(2);
        if self.constant.is_some() {
            return Ok(vec![vec![0.0; self.dim]; self.dim]);
        }
        self.d2
            .iter()
            .map(|row| row.iter().map(|e| e.eval(p)).collect())
            .collect()
    }

    /// Value with gradient attached.
    pub fn dual(&self, p: &[f64]) -> Result<Dual, EvalError> {
        Ok(Dual::new(self.value(p)?, &self.grad(p)?))
    }

    /// Gradient components, each carrying its own gradient (a Hessian row).
    pub fn grad_duals(&self, p: &[f64]) -> Result<Vec<Dual>, EvalError> {
        let g = self.grad(p)?;
        let h = self.hessian(p)?;
        Ok((0..self.dim).map(|i| Dual::new(g[i], &h[i])).collect())
    }

    /// Second derivatives `∂_i∂_j f`, each carrying the third derivatives.
    pub fn hessian_duals(&self, p: &[f64]) -> Result<Vec<Vec<Dual>>, EvalError> {
        self.require(3);
        let h = self.hessian(p)?;
        if self.constant.is_some() {
            return Ok(vec![vec![Dual::ZERO; self.dim]; self.dim]);
        }
        let mut out = vec![vec![Dual::ZERO; self.dim]; self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let third: Result<Vec<f64>, _> = self.d3[i][j].iter().map(|e| e.eval(p)).collect();
                out[i][j] = Dual::new(h[i][j], &third?);
            }
        }
        Ok(out)
    }

    fn require(&self, order: usize) {
        assert!(
            self.order >= order,
            "field tabulated to order {} but order {order} requested",
            self.order
        );
    }
}

fn permutations(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ]
}

/// The symmetric positive-definite tensor `T`, stored through its
/// index-lowered coordinate components `T_ij = ⟨T(∂_i), ∂_j⟩`.
#[derive(Debug, Clone)]
pub enum TensorFieldT {
    /// `T = I`, i.e. `T_ij = g_ij`.
    Identity,
    /// Lowered components, symmetric n×n.
    Lowered(Vec<Vec<ScalarField>>),
}

impl TensorFieldT {
    pub fn identity() -> Self {
        TensorFieldT::Identity
    }

    /// Builds `T` from a symmetric grid of lowered component expressions.
    pub fn from_components(components: Vec<Vec<Expr>>) -> Result<Self, GeometryError> {
        let n = components.len();
        if components.iter().any(|row| row.len() != n) {
            return Err(GeometryError::Invalid(format!(
                "tensor component grid must be square, got {n} rows of lengths {:?}",
                components.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if components[i][j] != components[j][i] {
                    return Err(GeometryError::Invalid(format!(
                        "tensor components ({},{}) = {} and ({},{}) = {} differ; T must be symmetric",
                        i + 1,
                        j + 1,
                        components[i][j],
                        j + 1,
                        i + 1,
                        components[j][i]
                    )));
                }
            }
        }
        Ok(TensorFieldT::Lowered(
            components
                .into_iter()
                .map(|row| row.into_iter().map(|e| ScalarField::new(e, n, 2)).collect())
                .collect(),
        ))
    }

    pub fn diagonal(entries: Vec<Expr>) -> Self {
        let n = entries.len();
        let mut grid = vec![vec![Expr::Num(0.0); n]; n];
        for (i, e) in entries.into_iter().enumerate() {
            grid[i][i] = e;
        }
        Self::from_components(grid).expect("diagonal grid is symmetric")
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, TensorFieldT::Identity)
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<(), GeometryError> {
        match self {
            TensorFieldT::Lowered(c) if c.len() != n => Err(GeometryError::Invalid(format!(
                "tensor has {} rows but the chart is {n}-dimensional",
                c.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Lowered components `T_ij(p)`.
    pub fn eval(&self, chart: &Chart, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        match self {
            TensorFieldT::Identity => chart.metric(p),
            TensorFieldT::Lowered(c) => {
                let n = c.len();
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = c[i][j].value(p).map_err(|e| GeometryError::eval(p, e))?;
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                Ok(m)
            }
        }
    }

    /// Partial derivatives `∂_k T_ij`, indexed `[k][(i, j)]`.
    pub fn deriv(&self, chart: &Chart, p: &[f64]) -> Result<Vec<DMatrix<f64>>, GeometryError> {
        let jet = chart.metric_jet(p, 1)?;
        let (t, _) = self.jet(&jet, p, 1)?;
        let n = t.n;
        Ok((0..n)
            .map(|k| DMatrix::from_fn(n, n, |i, j| t.at(i, j).d[k]))
            .collect())
    }

    /// Lowered components as duals and, for `order >= 2`, their first
    /// derivatives `dT[k]` as duals.
    pub(crate) fn jet(
        &self,
        metric: &super::MetricJet,
        p: &[f64],
        order: usize,
    ) -> Result<(DualMat, Vec<DualMat>), GeometryError> {
        match self {
            TensorFieldT::Identity => Ok((
                metric.g.clone(),
                if order >= 2 {
                    metric.dg.clone()
                } else {
                    Vec::new()
                },
            )),
            TensorFieldT::Lowered(c) => {
                let n = c.len();
                let mut t = DualMat::zeros(n);
                let mut dt = if order >= 2 {
                    vec![DualMat::zeros(n); n]
                } else {
                    Vec::new()
                };
                for i in 0..n {
                    for j in i..n {
                        let f = &c[i][j];
                        let v = f.dual(p).map_err(|e| GeometryError::eval(p, e))?;
                        t.set(i, j, v);
                        t.set(j, i, v);
                        if order >= 2 {
                            let g = f.grad_duals(p).map_err(|e| GeometryError::eval(p, e))?;
                            for (k, gk) in g.into_iter().enumerate() {
                                dt[k].set(i, j, gk);
                                dt[k].set(j, i, gk);
                            }
                        }
                    }
                }
                Ok((t, dt))
            }
        }
    }
}

/// The drifting function `η`; absent means `η ≡ 0`.
#[derive(Debug, Clone)]
pub struct DriftField {
    field: Option<ScalarField>,
    dim: usize,
}

impl DriftField {
    pub fn zero(dim: usize) -> Self {
        DriftField { field: None, dim }
    }

    pub fn new(expr: Expr, dim: usize) -> Self {
        DriftField {
            field: Some(ScalarField::new(expr, dim, 2)),
            dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.field.is_none()
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.field.as_ref().map(ScalarField::expr)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        self.field.as_ref().map_or(Ok(0.0), |f| f.value(p))
    }

    pub fn grad_components(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.field
            .as_ref()
            .map_or(Ok(vec![0.0; self.dim]), |f| f.grad(p))
    }

    pub fn hess_components(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        self.field
            .as_ref()
            .map_or(Ok(vec![vec![0.0; self.dim]; self.dim]), |f| f.hessian(p))
    }

    pub(crate) fn grad_duals(&self, p: &[f64]) -> Result<Vec<Dual>, EvalError> {
        self.field
            .as_ref()
            .map_or(Ok(vec![Dual::ZERO; self.dim]), |f| f.grad_duals(p))
    }
}
