//! Pointwise Riemannian geometry of a single coordinate chart.
//!
//! Everything here is evaluated at coordinate points `p`. Input fields are
//! expressions whose derivatives are tabulated symbolically; compound
//! quantities (Christoffel symbols, `tr(∇T)`, divergences) are then pushed
//! through [`dual::Dual`] arithmetic so their derivatives stay exact.

pub mod dual;
pub mod fd;
mod field;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::expressions::{parse, EvalError, Expr};
use dual::{Dual, DualMat};
pub use field::{DriftField, ScalarField, TensorFieldT};

/// Relative tolerance for rank decisions when orthonormalizing tangent vectors.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate geometry at {point:?}: {reason}")]
    Degenerate { point: Vec<f64>, reason: String },
    #[error("cannot evaluate field at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("invalid geometry: {0}")]
    Invalid(String),
}

impl GeometryError {
    pub(crate) fn eval(p: &[f64], source: EvalError) -> Self {
        GeometryError::Eval {
            point: p.to_vec(),
            source,
        }
    }

    fn degenerate(p: &[f64], reason: impl Into<String>) -> Self {
        GeometryError::Degenerate {
            point: p.to_vec(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Immersed,
    Intrinsic,
}

#[derive(Debug, Clone)]
enum ChartRepr {
    /// `x(p) = p` into `R^n`; flat, with vanishing second fundamental form.
    Identity,
    Immersion(Vec<ScalarField>),
    Metric(Vec<Vec<ScalarField>>),
}

/// A single coordinate patch of the domain's geometry.
#[derive(Debug, Clone)]
pub struct Chart {
    dim: usize,
    repr: ChartRepr,
}

/// Metric components as duals at a point.
///
/// `g` carries first derivatives once `order >= 1`. `dg[k]` holds `∂_k g_ij`
/// (values valid for `order >= 1`, derivatives valid for `order >= 2`).
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub n: usize,
    pub order: usize,
    pub g: DualMat,
    pub dg: Vec<DualMat>,
}

/// Levi-Civita connection data at a point.
#[derive(Debug, Clone)]
pub struct Connection {
    pub n: usize,
    pub ginv: DualMat,
    /// `Γ^k_ij` at index `(k * n + i) * n + j`.
    pub gamma: Vec<Dual>,
}

impl Connection {
    #[inline]
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> Dual {
        self.gamma[(k * self.n + i) * self.n + j]
    }
}

/// `Γ^k_ij` values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Christoffel {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[(k * self.n + i) * self.n + j]
    }
}

/// Normal-valued symmetric bilinear form of an immersion, in coordinates:
/// `alpha[i][j]` is the ambient vector `α(∂_i, ∂_j)`.
#[derive(Debug, Clone)]
pub struct SecondFundamentalForm {
    pub n: usize,
    pub m: usize,
    pub alpha: Vec<Vec<DVector<f64>>>,
    /// Metric at the same point, needed for traces.
    pub metric: DMatrix<f64>,
    /// Orthonormal basis of the tangent space in `R^m`.
    pub tangent_basis: Vec<DVector<f64>>,
}

impl SecondFundamentalForm {
    /// `α(u, v)` for coordinate vectors `u`, `v`.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for i in 0..self.n {
            for j in 0..self.n {
                let c = u[i] * v[j];
                if c != 0.0 {
                    out += &self.alpha[i][j] * c;
                }
            }
        }
        out
    }

    /// Mean curvature vector `H = (1/n) tr α`.
    pub fn mean_curvature(&self) -> DVector<f64> {
        let ginv = self
            .metric
            .clone()
            .try_inverse()
            .expect("metric was checked positive definite");
        let mut h = DVector::zeros(self.m);
        for i in 0..self.n {
            for j in 0..self.n {
                h += &self.alpha[i][j] * ginv[(i, j)];
            }
        }
        h / self.n as f64
    }
}

impl Chart {
    /// Identity immersion of a coordinate domain in `R^n`.
    pub fn identity(dim: usize) -> Self {
        Chart {
            dim,
            repr: ChartRepr::Identity,
        }
    }

    /// Immersion `p ↦ (x_1(p), …, x_m(p))` into `R^m`; the metric is induced.
    pub fn immersion(dim: usize, components: Vec<Expr>) -> Result<Self> {
        if components.len() < dim {
            return Err(GeometryError::Invalid(format!(
                "immersion of a {dim}-dimensional chart needs at least {dim} components, got {}",
                components.len()
            )));
        }
        check_arity(dim, components.iter())?;
        Ok(Chart {
            dim,
            repr: ChartRepr::Immersion(
                components
                    .into_iter()
                    .map(|e| ScalarField::new(e, dim, 3))
                    .collect(),
            ),
        })
    }

    /// Intrinsic metric given by a symmetric grid of component expressions.
    pub fn intrinsic(metric: Vec<Vec<Expr>>) -> Result<Self> {
        let dim = metric.len();
        if dim == 0 || metric.iter().any(|row| row.len() != dim) {
            return Err(GeometryError::Invalid(
                "metric grid must be square and nonempty".into(),
            ));
        }
        for i in 0..dim {
            for j in 0..i {
                if metric[i][j] != metric[j][i] {
                    return Err(GeometryError::Invalid(format!(
                        "metric components ({},{}) and ({},{}) differ",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        check_arity(dim, metric.iter().flatten())?;
        Ok(Chart {
            dim,
            repr: ChartRepr::Metric(
                metric
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|e| ScalarField::new(e, dim, 2))
                            .collect()
                    })
                    .collect(),
            ),
        })
    }

    /// Upper half-space model of `H^n(-1)`: `g_ij = x_n^{-2} δ_ij`.
    pub fn hyperbolic_half_space(dim: usize) -> Self {
        let factor = parse(&format!("1/x{dim}^2")).unwrap();
        let grid = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if i == j {
                            factor.clone()
                        } else {
                            Expr::Num(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        Chart::intrinsic(grid).unwrap()
    }

    /// Warped strip `dt² + e^{2t} ds²` in coordinates `(x1, x2) = (t, s)`.
    pub fn warped_strip() -> Self {
        Chart::intrinsic(vec![
            vec![Expr::Num(1.0), Expr::Num(0.0)],
            vec![Expr::Num(0.0), parse("exp(2*x1)").unwrap()],
        ])
        .unwrap()
    }

    /// Unit sphere in polar-angle/azimuth coordinates `(u, v)`.
    pub fn unit_sphere_angles() -> Self {
        Chart::immersion(
            2,
            ["sin(x1)*cos(x2)", "sin(x1)*sin(x2)", "cos(x1)"]
                .iter()
                .map(|s| parse(s).unwrap())
                .collect(),
        )
        .unwrap()
    }

    /// Unit sphere through inverse stereographic projection from the south pole;
    /// the coordinate disk of radius `tan(θ/2)` is the cap of polar angle `θ`
    /// around the north pole.
    pub fn sphere_stereographic() -> Self {
        Chart::immersion(
            2,
            [
                "2*x1/(1 + x1^2 + x2^2)",
                "2*x2/(1 + x1^2 + x2^2)",
                "(1 - x1^2 - x2^2)/(1 + x1^2 + x2^2)",
            ]
            .iter()
            .map(|s| parse(s).unwrap())
            .collect(),
        )
        .unwrap()
    }

    /// Circular cylinder of the given radius, coordinates `(angle, height)`.
    pub fn cylinder(radius: f64) -> Self {
        Chart::immersion(
            2,
            vec![
                parse(&format!("{radius}*cos(x1)")).unwrap(),
                parse(&format!("{radius}*sin(x1)")).unwrap(),
                parse("x2").unwrap(),
            ],
        )
        .unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ChartKind {
        match self.repr {
            ChartRepr::Identity | ChartRepr::Immersion(_) => ChartKind::Immersed,
            ChartRepr::Metric(_) => ChartKind::Intrinsic,
        }
    }

    pub fn is_flat_identity(&self) -> bool {
        matches!(self.repr, ChartRepr::Identity)
    }

    /// Ambient dimension `m` for immersed charts.
    pub fn ambient_dim(&self) -> Option<usize> {
        match &self.repr {
            ChartRepr::Identity => Some(self.dim),
            ChartRepr::Immersion(x) => Some(x.len()),
            ChartRepr::Metric(_) => None,
        }
    }

    /// Immersion point `x(p)`.
    pub fn immerse(&self, p: &[f64]) -> Result<DVector<f64>> {
        match &self.repr {
            ChartRepr::Identity => Ok(DVector::from_column_slice(&p[..self.dim])),
            ChartRepr::Immersion(x) => {
                let v: std::result::Result<Vec<f64>, _> = x.iter().map(|c| c.value(p)).collect();
                Ok(DVector::from_vec(v.map_err(|e| GeometryError::eval(p, e))?))
            }
            ChartRepr::Metric(_) => Err(GeometryError::Unsupported(
                "intrinsic chart has no immersion".into(),
            )),
        }
    }

    /// Jacobian `∂x^a/∂p_i` (m×n) of an immersion.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.repr {
            ChartRepr::Identity => Ok(DMatrix::identity(self.dim, self.dim)),
            ChartRepr::Immersion(x) => {
                let mut j = DMatrix::zeros(x.len(), self.dim);
                for (a, c) in x.iter().enumerate() {
                    let g = c.grad(p).map_err(|e| GeometryError::eval(p, e))?;
                    for i in 0..self.dim {
                        j[(a, i)] = g[i];
                    }
                }
                Ok(j)
            }
            ChartRepr::Metric(_) => Err(GeometryError::Unsupported(
                "intrinsic chart has no immersion".into(),
            )),
        }
    }

    /// `g(p)`; errors unless symmetric positive definite.
    pub fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric_unchecked(p)?;
        if g.iter().any(|x| !x.is_finite()) || g.clone().cholesky().is_none() {
            return Err(GeometryError::degenerate(
                p,
                format!("metric {g:?} is not positive definite"),
            ));
        }
        Ok(g)
    }

    fn metric_unchecked(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.repr {
            ChartRepr::Identity => Ok(DMatrix::identity(self.dim, self.dim)),
            ChartRepr::Immersion(_) => {
                let j = self.jacobian(p)?;
                Ok(j.transpose() * j)
            }
            ChartRepr::Metric(g) => {
                let n = self.dim;
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = g[i][j].value(p).map_err(|e| GeometryError::eval(p, e))?;
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                Ok(m)
            }
        }
    }

    /// Metric components and derivatives as duals; see [`MetricJet`].
    pub fn metric_jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.dim;
        let ev = |e| GeometryError::eval(p, e);
        let mut g = DualMat::zeros(n);
        let mut dg = Vec::new();
        match &self.repr {
            ChartRepr::Identity => {
                for i in 0..n {
                    g.set(i, i, Dual::constant(1.0));
                }
                if order >= 1 {
                    dg = vec![DualMat::zeros(n); n];
                }
            }
            ChartRepr::Immersion(x) => {
                if order == 0 {
                    let gm = self.metric_unchecked(p)?;
                    for i in 0..n {
                        for j in 0..n {
                            g.set(i, j, Dual::constant(gm[(i, j)]));
                        }
                    }
                } else {
                    // tangent[a][i] = ∂_i x^a, carrying ∂_k∂_i x^a
                    let tangent: Vec<Vec<Dual>> = x
                        .iter()
                        .map(|c| c.grad_duals(p))
                        .collect::<std::result::Result<_, _>>()
                        .map_err(ev)?;
                    for i in 0..n {
                        for j in i..n {
                            let mut s = Dual::ZERO;
                            for t in &tangent {
                                s += t[i] * t[j];
                            }
                            g.set(i, j, s);
                            g.set(j, i, s);
                        }
                    }
                    dg = vec![DualMat::zeros(n); n];
                    if order >= 2 {
                        let hess: Vec<Vec<Vec<Dual>>> = x
                            .iter()
                            .map(|c| c.hessian_duals(p))
                            .collect::<std::result::Result<_, _>>()
                            .map_err(ev)?;
                        for (k, dgk) in dg.iter_mut().enumerate() {
                            for i in 0..n {
                                for j in i..n {
                                    let mut s = Dual::ZERO;
                                    for (t, h) in tangent.iter().zip(&hess) {
                                        s += h[i][k] * t[j] + t[i] * h[j][k];
                                    }
                                    dgk.set(i, j, s);
                                    dgk.set(j, i, s);
                                }
                            }
                        }
                    } else {
                        for (k, dgk) in dg.iter_mut().enumerate() {
                            for i in 0..n {
                                for j in 0..n {
                                    dgk.set(i, j, Dual::constant(g.at(i, j).d[k]));
                                }
                            }
                        }
                    }
                }
            }
            ChartRepr::Metric(comp) => {
                if order >= 1 {
                    dg = vec![DualMat::zeros(n); n];
                }
                for i in 0..n {
                    for j in i..n {
                        let f = &comp[i][j];
                        let v = if order == 0 {
                            Dual::constant(f.value(p).map_err(ev)?)
                        } else {
                            f.dual(p).map_err(ev)?
                        };
                        g.set(i, j, v);
                        g.set(j, i, v);
                        if order >= 1 {
                            let d = f.grad_duals(p).map_err(ev)?;
                            for (k, dk) in d.into_iter().enumerate() {
                                let dk = if order >= 2 { dk } else { Dual::constant(dk.v) };
                                dg[k].set(i, j, dk);
                                dg[k].set(j, i, dk);
                            }
                        }
                    }
                }
            }
        }
        Ok(MetricJet { n, order, g, dg })
    }

    pub(crate) fn connection(&self, jet: &MetricJet, p: &[f64]) -> Result<Connection> {
        let n = jet.n;
        let ginv = jet
            .g
            .inverse()
            .ok_or_else(|| GeometryError::degenerate(p, "singular metric"))?;
        if jet.g.values().cholesky().is_none() {
            return Err(GeometryError::degenerate(
                p,
                "metric is not positive definite",
            ));
        }
        let mut gamma = vec![Dual::ZERO; n * n * n];
        if jet.dg.is_empty() {
            return Ok(Connection { n, ginv, gamma });
        }
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = Dual::ZERO;
                    for l in 0..n {
                        let bracket = jet.dg[i].at(j, l) + jet.dg[j].at(i, l) - jet.dg[l].at(i, j);
                        s += ginv.at(k, l) * bracket;
                    }
                    let s = s.scale(0.5);
                    gamma[(k * n + i) * n + j] = s;
                    gamma[(k * n + j) * n + i] = s;
                }
            }
        }
        Ok(Connection { n, ginv, gamma })
    }

    /// Christoffel symbols `Γ^k_ij` of the Levi-Civita connection.
    pub fn christoffel(&self, p: &[f64]) -> Result<Christoffel> {
        let jet = self.metric_jet(p, 1)?;
        let conn = self.connection(&jet, p)?;
        Ok(Christoffel {
            n: self.dim,
            values: conn.gamma.iter().map(|d| d.v).collect(),
        })
    }

    /// Second fundamental form: second derivatives of the immersion projected
    /// onto the normal space.
    pub fn second_fundamental_form(&self, p: &[f64]) -> Result<SecondFundamentalForm> {
        let n = self.dim;
        let (m, hess): (usize, Vec<Vec<Vec<f64>>>) = match &self.repr {
            ChartRepr::Identity => (n, vec![vec![vec![0.0; n]; n]; n]),
            ChartRepr::Immersion(x) => (
                x.len(),
                x.iter()
                    .map(|c| c.hessian(p))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| GeometryError::eval(p, e))?,
            ),
            ChartRepr::Metric(_) => {
                return Err(GeometryError::Unsupported(
                    "second fundamental form needs an immersion; the chart is intrinsic".into(),
                ))
            }
        };
        let metric = self.metric(p)?;
        let jac = self.jacobian(p)?;
        let tangent_basis = orthonormalize(&jac, p)?;
        let mut alpha = vec![vec![DVector::zeros(m); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut v = DVector::from_fn(m, |a, _| hess[a][i][j]);
                for e in &tangent_basis {
                    let c = e.dot(&v);
                    v -= e * c;
                }
                alpha[j][i] = v.clone();
                alpha[i][j] = v;
            }
        }
        Ok(SecondFundamentalForm {
            n,
            m,
            alpha,
            metric,
            tangent_basis,
        })
    }

    /// A g-orthonormal frame (columns) from the Cholesky factor: `E = L^{-T}`.
    pub fn orthonormal_frame(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric(p)?;
        let l = g.cholesky().expect("checked by metric").unpack();
        let linv = l
            .try_inverse()
            .ok_or_else(|| GeometryError::degenerate(p, "singular Cholesky factor"))?;
        Ok(linv.transpose())
    }

    /// `|df|_g` for a covector given by coordinate partials.
    pub fn covector_norm(&self, p: &[f64], df: &[f64]) -> Result<f64> {
        let g = self.metric(p)?;
        let ginv = g.try_inverse().expect("positive definite");
        let d = DVector::from_column_slice(df);
        Ok((d.transpose() * ginv * &d)[(0, 0)].max(0.0).sqrt())
    }

    /// `|v|_g` for a contravariant vector.
    pub fn vector_norm(&self, p: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.metric(p)?;
        let v = DVector::from_column_slice(v);
        Ok((v.transpose() * g * &v)[(0, 0)].max(0.0).sqrt())
    }

    /// `√det g`, the coordinate density of the Riemannian volume.
    pub fn volume_density(&self, p: &[f64]) -> Result<f64> {
        Ok(self.metric(p)?.determinant().sqrt())
    }
}

fn check_arity<'a>(dim: usize, exprs: impl Iterator<Item = &'a Expr>) -> Result<()> {
    for e in exprs {
        if e.arity() > dim {
            return Err(GeometryError::Invalid(format!(
                "expression {e} uses x{} but the chart is {dim}-dimensional",
                e.arity()
            )));
        }
    }
    Ok(())
}

/// Modified Gram-Schmidt on the columns of `jac`, dropping dependent columns.
fn orthonormalize(jac: &DMatrix<f64>, p: &[f64]) -> Result<Vec<DVector<f64>>> {
    let scale = jac.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in jac.column_iter() {
        let mut v = col.clone_owned();
        for _ in 0..2 {
            for e in &basis {
                let c = e.dot(&v);
                v -= e * c;
            }
        }
        let norm = v.norm();
        if norm > RANK_TOL * scale {
            basis.push(v / norm);
        }
    }
    if basis.len() < jac.ncols() {
        return Err(GeometryError::degenerate(
            p,
            format!(
                "immersion has rank {} < {} (not an immersion here)",
                basis.len(),
                jac.ncols()
            ),
        ));
    }
    Ok(basis)
}

/// Eigenvalues (ascending) of `T` expressed in a g-orthonormal frame.
pub fn t_frame_eigenvalues(chart: &Chart, t: &TensorFieldT, p: &[f64]) -> Result<Vec<f64>> {
    let tf = t_in_frame(chart, t, p, &chart.orthonormal_frame(p)?);
    let mut ev: Vec<f64> = SymmetricEigen::new(tf)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Smallest and largest frame eigenvalue of `T`; errors unless positive definite.
pub fn t_extreme_eigenvalues(chart: &Chart, t: &TensorFieldT, p: &[f64]) -> Result<(f64, f64)> {
    let ev = t_frame_eigenvalues(chart, t, p)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(GeometryError::degenerate(
            p,
            format!("tensor T is not positive definite (smallest frame eigenvalue {lo})"),
        ));
    }
    Ok((lo, hi))
}

fn t_in_frame(chart: &Chart, t: &TensorFieldT, p: &[f64], frame: &DMatrix<f64>) -> DMatrix<f64> {
    match t.eval(chart, p) {
        Ok(tl) => frame.transpose() * tl * frame,
        Err(_) => DMatrix::from_element(frame.ncols(), frame.ncols(), f64::NAN),
    }
}

/// `T(Y)` as a contravariant vector, for contravariant `Y`.
pub fn apply_t(chart: &Chart, t: &TensorFieldT, p: &[f64], y: &[f64]) -> Result<DVector<f64>> {
    let ginv = chart.metric(p)?.try_inverse().expect("positive definite");
    let tl = t.eval(chart, p)?;
    Ok(ginv * tl * DVector::from_column_slice(y))
}

/// Generalized mean curvature `H_T = (1/n) Σ_i α(T(e_i), e_i)` over the
/// Cholesky orthonormal frame.
pub fn generalized_mean_curvature(
    chart: &Chart,
    t: &TensorFieldT,
    p: &[f64],
) -> Result<DVector<f64>> {
    let frame = chart.orthonormal_frame(p)?;
    generalized_mean_curvature_in_frame(chart, t, p, &frame)
}

/// As [`generalized_mean_curvature`], over a caller-supplied g-orthonormal frame
/// (columns in coordinates).
pub fn generalized_mean_curvature_in_frame(
    chart: &Chart,
    t: &TensorFieldT,
    p: &[f64],
    frame: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let n = chart.dim();
    let sff = chart.second_fundamental_form(p)?;
    let gram = frame.transpose() * &sff.metric * frame;
    if (gram - DMatrix::<f64>::identity(n, n)).amax() > 1e-10 {
        return Err(GeometryError::Invalid(
            "supplied frame is not g-orthonormal".into(),
        ));
    }
    let mut h = DVector::zeros(sff.m);
    for a in 0..n {
        let ea: Vec<f64> = frame.column(a).iter().copied().collect();
        // T(e_a) in coordinates: g^{-1} T_low e_a
        let tea = apply_t(chart, t, p, &ea)?;
        let tea: Vec<f64> = tea.iter().copied().collect();
        h += sff.apply(&tea, &ea);
    }
    Ok(h / n as f64)
}

/// `tr(∇T)` as a contravariant vector, given connection and T jets.
pub(crate) fn trace_nabla_t_duals(conn: &Connection, t: &DualMat, dt: &[DualMat]) -> Vec<Dual> {
    let n = conn.n;
    let ginv = &conn.ginv;
    // (∇_i T)_{jl} = ∂_i T_jl − Γ^a_ij T_al − Γ^a_il T_ja
    let mut out = vec![Dual::ZERO; n];
    for i in 0..n {
        for j in 0..n {
            let gij = ginv.at(i, j);
            if gij == Dual::ZERO {
                continue;
            }
            for l in 0..n {
                let mut cov = dt[i].at(j, l);
                for a in 0..n {
                    cov -= conn.gamma(a, i, j) * t.at(a, l) + conn.gamma(a, i, l) * t.at(j, a);
                }
                let w = gij * cov;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += ginv.at(k, l) * w;
                }
            }
        }
    }
    out
}

/// `tr(∇T) = Σ_i (∇_{e_i} T)(e_i)` as a contravariant vector.
pub fn trace_nabla_t(chart: &Chart, t: &TensorFieldT, p: &[f64]) -> Result<Vec<f64>> {
    t.check_dim(chart.dim())?;
    let jet = chart.metric_jet(p, 1)?;
    let conn = chart.connection(&jet, p)?;
    let (tm, dt) = t.jet(&jet, p, 2)?;
    Ok(trace_nabla_t_duals(&conn, &tm, &dt)
        .into_iter()
        .map(|d| d.v)
        .collect())
}

fn mixed(ginv: &DualMat, t: &DualMat) -> DualMat {
    // T^k_j = g^{ka} T_aj
    let n = t.n;
    let mut out = DualMat::zeros(n);
    for k in 0..n {
        for j in 0..n {
            let mut s = Dual::ZERO;
            for a in 0..n {
                s += ginv.at(k, a) * t.at(a, j);
            }
            out.set(k, j, s);
        }
    }
    out
}

fn mat_vec(m: &DualMat, v: &[Dual]) -> Vec<Dual> {
    (0..m.n)
        .map(|k| (0..m.n).fold(Dual::ZERO, |s, j| s + m.at(k, j) * v[j]))
        .collect()
}

/// Divergence of a contravariant vector field known as duals: `∂_k V^k + Γ^k_kl V^l`.
fn divergence(conn: &Connection, v: &[Dual]) -> f64 {
    let n = conn.n;
    let mut div = 0.0;
    for k in 0..n {
        div += v[k].d[k];
        for l in 0..n {
            div += conn.gamma(k, k, l).v * v[l].v;
        }
    }
    div
}

/// `T(∇η)` and `T(T(∇η) − tr(∇T))` as contravariant dual vectors.
fn drift_vector_fields(
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    p: &[f64],
) -> Result<(Connection, DualMat, Vec<Dual>, Vec<Dual>)> {
    let jet = chart.metric_jet(p, 2)?;
    let conn = chart.connection(&jet, p)?;
    let (tm, dt) = t.jet(&jet, p, 2)?;
    let tr = trace_nabla_t_duals(&conn, &tm, &dt);
    let tmix = mixed(&conn.ginv, &tm);
    let deta = eta.grad_duals(p).map_err(|e| GeometryError::eval(p, e))?;
    let grad_eta = mat_vec(&conn.ginv, &deta);
    let t_grad_eta = mat_vec(&tmix, &grad_eta);
    let w: Vec<Dual> = t_grad_eta.iter().zip(&tr).map(|(a, b)| *a - *b).collect();
    let v = mat_vec(&tmix, &w);
    Ok((conn, jet.g, t_grad_eta, v))
}

/// The drift-constant integrand `½ div(T(T(∇η) − tr(∇T))) − ¼|T(∇η)|²`.
pub fn c0_integrand(chart: &Chart, t: &TensorFieldT, eta: &DriftField, p: &[f64]) -> Result<f64> {
    t.check_dim(chart.dim())?;
    let (conn, g, t_grad_eta, v) = drift_vector_fields(chart, t, eta, p)?;
    let n = chart.dim();
    let mut norm2 = 0.0;
    for a in 0..n {
        for b in 0..n {
            norm2 += g.at(a, b).v * t_grad_eta[a].v * t_grad_eta[b].v;
        }
    }
    Ok(0.5 * divergence(&conn, &v) - 0.25 * norm2)
}

/// The vector field `T(T(∇η) − tr(∇T))` (values only); used by the
/// finite-difference cross-check.
pub fn c0_vector_field(
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    p: &[f64],
) -> Result<Vec<f64>> {
    let (_, _, _, v) = drift_vector_fields(chart, t, eta, p)?;
    Ok(v.iter().map(|d| d.v).collect())
}

/// `ℒu = div(T(∇u)) − ⟨∇η, T(∇u)⟩` at a point.
pub fn apply_operator(
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    u: &ScalarField,
    p: &[f64],
) -> Result<f64> {
    t.check_dim(chart.dim())?;
    let jet = chart.metric_jet(p, 1)?;
    let conn = chart.connection(&jet, p)?;
    let (tm, _) = t.jet(&jet, p, 1)?;
    let du = u.grad_duals(p).map_err(|e| GeometryError::eval(p, e))?;
    let grad_u = mat_vec(&conn.ginv, &du);
    let v = mat_vec(&mixed(&conn.ginv, &tm), &grad_u);
    let deta = eta
        .grad_components(p)
        .map_err(|e| GeometryError::eval(p, e))?;
    let drift: f64 = deta.iter().zip(&v).map(|(a, b)| a * b.v).sum();
    Ok(divergence(&conn, &v) - drift)
}

/// `T(∇f, ∇h)` for coordinate differentials `df`, `dh`.
pub fn t_form(chart: &Chart, t: &TensorFieldT, p: &[f64], df: &[f64], dh: &[f64]) -> Result<f64> {
    let ginv = chart.metric(p)?.try_inverse().expect("positive definite");
    let tl = t.eval(chart, p)?;
    let a = DVector::from_column_slice(df);
    let b = DVector::from_column_slice(dh);
    Ok((a.transpose() * &ginv * tl * &ginv * b)[(0, 0)])
}
