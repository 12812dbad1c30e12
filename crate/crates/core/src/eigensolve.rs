//! Lowest eigenpairs of the symmetric pencil `K u = λ M u`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::{CsMat, FillInReduction};
use sprs_ldl::{Ldl, LdlNumeric};
use thiserror::Error;

use crate::assembly::{CsrMatrix, SpectralProblem};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Problems up to this size use the dense path under [`Method::Auto`].
pub const DENSE_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    ShiftInvert,
    /// Dense for small problems, shift-invert otherwise.
    Auto,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::ShiftInvert => "shift_invert",
            Method::Auto => "auto",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("mass matrix is not symmetric positive definite")]
    MassNotSpd,
    #[error("shifted matrix K - {shift}M is singular or has {negative_pivots} negative pivots; the shift must lie below the spectrum")]
    BadShift { shift: f64, negative_pivots: usize },
    #[error("eigensolver did not converge after {iterations} iterations; residuals {residuals:?}")]
    Convergence {
        iterations: usize,
        residuals: Vec<f64>,
    },
    #[error("requested {count} eigenpairs of a problem with {n_dof} degrees of freedom")]
    BadCount { count: usize, n_dof: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("eigenvalue {index} is {value}, but the spectrum must be positive")]
    NonPositive { index: usize, value: f64 },
    #[error("stored residual {stored} of pair {index} does not match recomputed {recomputed}")]
    Inconsistent {
        index: usize,
        stored: f64,
        recomputed: f64,
    },
}

pub type Result<T, E = SolveError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub tol: f64,
    /// Shift `σ` of the shift-invert path; must lie below `λ₁`.
    pub shift: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Auto,
            tol: DEFAULT_TOLERANCE,
            shift: 0.0,
            seed: DEFAULT_SEED,
        }
    }
}

/// Ascending eigenvalues with M-orthonormal eigenvectors (dof vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub method: Method,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn solve(
    problem: &SpectralProblem,
    count: usize,
    method: Method,
    tol: f64,
) -> Result<Spectrum> {
    solve_pencil(
        &problem.k,
        &problem.m,
        count,
        &SolveOptions {
            method,
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_pencil(
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    opts: &SolveOptions,
) -> Result<Spectrum> {
    let n = k.dim();
    if count == 0 || count > n {
        return Err(SolveError::BadCount { count, n_dof: n });
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::BadTolerance(opts.tol));
    }
    let method = match opts.method {
        Method::Auto if n <= DENSE_LIMIT => Method::Dense,
        Method::Auto => Method::ShiftInvert,
        other => other,
    };
    let (values, vectors) = match method {
        Method::Dense => dense(k, m, count)?,
        _ => ShiftInvert::new(k, m, opts)?.run(count)?,
    };
    let residuals: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .map(|(&l, u)| residual(k, m, l, u))
        .collect();
    if residuals.iter().any(|r| !(*r < opts.tol)) {
        return Err(SolveError::Convergence {
            iterations: 0,
            residuals,
        });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(SolveError::NonPositive { index, value });
    }
    Ok(Spectrum {
        values,
        vectors,
        residuals,
        method,
    })
}

/// `‖Ku − λMu‖ / ‖Mu‖`
pub fn residual(k: &CsrMatrix, m: &CsrMatrix, lambda: f64, u: &[f64]) -> f64 {
    let ku = k.mul_vec(u);
    let mu = m.mul_vec(u);
    let r: f64 = ku
        .iter()
        .zip(&mu)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum();
    r.sqrt() / norm(&mu)
}

/// Recomputes every residual and checks it against the stored one.
pub fn verify_residuals(problem: &SpectralProblem, spectrum: &Spectrum) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(spectrum.len());
    for (index, ((&l, u), &stored)) in spectrum
        .values
        .iter()
        .zip(&spectrum.vectors)
        .zip(&spectrum.residuals)
        .enumerate()
    {
        let recomputed = residual(&problem.k, &problem.m, l, u);
        if (recomputed - stored).abs() > 1e-12 {
            return Err(SolveError::Inconsistent {
                index,
                stored,
                recomputed,
            });
        }
        out.push(recomputed);
    }
    Ok(out)
}

/// Largest entry of `|VᵀMV − I|`.
pub fn m_orthonormality_defect(m: &CsrMatrix, vectors: &[Vec<f64>]) -> f64 {
    let mv: Vec<Vec<f64>> = vectors.iter().map(|v| m.mul_vec(v)).collect();
    let mut worst = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in mv.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(a, b) - target).abs());
        }
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn dense(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.dim();
    let chol = m.to_dense().cholesky().ok_or(SolveError::MassNotSpd)?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let mut x = k.to_dense();
    l.solve_lower_triangular_mut(&mut x);
    let mut c = x.transpose();
    l.solve_lower_triangular_mut(&mut c);
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt = l.transpose();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let mut y = eig.eigenvectors.column(i).clone_owned();
        lt.solve_upper_triangular_mut(&mut y);
        values.push(eig.eigenvalues[i]);
        vectors.push(y.iter().copied().collect());
    }
    Ok((values, vectors))
}

/// Lanczos on `(K − σM)⁻¹M` in the M-inner product, with full
/// reorthogonalization and optional deflation against locked vectors.
struct ShiftInvert<'a> {
    k: &'a CsrMatrix,
    m: &'a CsrMatrix,
    factor: LdlNumeric<f64, usize>,
    shift: f64,
    tol: f64,
    rng: ChaCha8Rng,
}

struct Basis {
    q: Vec<Vec<f64>>,
    mq: Vec<Vec<f64>>,
}

impl Basis {
    fn new() -> Self {
        Basis {
            q: Vec::new(),
            mq: Vec::new(),
        }
    }

    /// Removes the M-components along the basis, twice.
    fn project_out(&self, w: &mut [f64]) {
        for _ in 0..2 {
            for (q, mq) in self.q.iter().zip(&self.mq) {
                let c = dot(mq, w);
                axpy(-c, q, w);
            }
        }
    }
}

impl<'a> ShiftInvert<'a> {
    fn new(k: &'a CsrMatrix, m: &'a CsrMatrix, opts: &SolveOptions) -> Result<Self> {
        let n = k.dim();
        let shifted = k.add_scaled(m, -opts.shift);
        let (row_ptr, col_idx, values) = shifted.raw_parts();
        let mat = CsMat::new((n, n), row_ptr.to_vec(), col_idx.to_vec(), values.to_vec());
        let bad = |negative_pivots| SolveError::BadShift {
            shift: opts.shift,
            negative_pivots,
        };
        let factor = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .numeric(mat.view())
            .map_err(|_| bad(0))?;
        let negative = factor.d().iter().filter(|d| !(**d > 0.0)).count();
        if negative > 0 {
            return Err(bad(negative));
        }
        Ok(ShiftInvert {
            k,
            m,
            factor,
            shift: opts.shift,
            tol: opts.tol,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
        })
    }

    fn apply(&self, mq: &[f64]) -> Vec<f64> {
        self.factor.solve(mq)
    }

    /// A random unit vector M-orthogonal to `locked` and `basis`, if one exists.
    fn fresh_vector(&mut self, locked: &Basis, basis: &Basis) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.k.dim();
        for _ in 0..3 {
            let mut r: Vec<f64> = (0..n).map(|_| self.rng.random::<f64>() - 0.5).collect();
            let before = dot(&r, &self.m.mul_vec(&r)).sqrt();
            locked.project_out(&mut r);
            basis.project_out(&mut r);
            let mr = self.m.mul_vec(&r);
            let nm = dot(&r, &mr).max(0.0).sqrt();
            if nm > 1e-8 * before {
                return Some((
                    r.iter().map(|x| x / nm).collect(),
                    mr.iter().map(|x| x / nm).collect(),
                ));
            }
        }
        None
    }

    /// Ritz pairs for the `want` largest `θ` of the deflated operator.
    fn lanczos(&mut self, locked: &Basis, want: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.k.dim();
        let avail = n - locked.q.len();
        let want = want.min(avail);
        if want == 0 {
            return Ok((Vec::new(), Vec::new()));
        }
        let max_dim = avail.min(6 * want + 120);
        let mut basis = Basis::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let Some((q0, mq0)) = self.fresh_vector(locked, &basis) else {
            return Ok((Vec::new(), Vec::new()));
        };
        basis.q.push(q0);
        basis.mq.push(mq0);
        let mut last_residuals = Vec::new();
        loop {
            let j = basis.q.len() - 1;
            let mut w = self.apply(&basis.mq[j]);
            locked.project_out(&mut w);
            let a = dot(&basis.mq[j], &w);
            axpy(-a, &basis.q[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis.q[j - 1], &mut w);
            }
            locked.project_out(&mut w);
            basis.project_out(&mut w);
            alpha.push(a);
            let dim = basis.q.len();
            let check = dim == max_dim || (dim >= want && (dim - want) % 10 == 0);
            let mw = self.m.mul_vec(&w);
            let b = dot(&w, &mw).max(0.0).sqrt();
            let breakdown = !(b > 1e-12 * a.abs());
            if check || breakdown {
                let (values, vectors) = self.ritz(&basis, &alpha, &beta, want);
                if values.len() == want {
                    let residuals: Vec<f64> = values
                        .iter()
                        .zip(&vectors)
                        .map(|(&l, u)| residual(self.k, self.m, l, u))
                        .collect();
                    if residuals.iter().all(|r| *r < 0.1 * self.tol) || dim == max_dim {
                        if dim == max_dim && residuals.iter().any(|r| !(*r < self.tol)) {
                            return Err(SolveError::Convergence {
                                iterations: dim,
                                residuals,
                            });
                        }
                        return Ok((values, vectors));
                    }
                    last_residuals = residuals;
                }
                if dim == max_dim {
                    return Err(SolveError::Convergence {
                        iterations: dim,
                        residuals: last_residuals,
                    });
                }
            }
            if breakdown {
                beta.push(0.0);
                match self.fresh_vector(locked, &basis) {
                    Some((q, mq)) => {
                        basis.q.push(q);
                        basis.mq.push(mq);
                    }
                    None => {
                        return Ok(self.ritz(&basis, &alpha, &beta[..dim - 1], want));
                    }
                }
            } else {
                beta.push(b);
                basis.q.push(w.iter().map(|x| x / b).collect());
                basis.mq.push(mw.iter().map(|x| x / b).collect());
            }
        }
    }

    /// Ritz values `σ + 1/θ` (ascending) and vectors of the current tridiagonal.
    fn ritz(
        &self,
        basis: &Basis,
        alpha: &[f64],
        beta: &[f64],
        want: usize,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let dim = alpha.len();
        let mut t = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            t[(i, i)] = alpha[i];
            if i + 1 < dim {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let n = self.k.dim();
        let mut values = Vec::new();
        let mut vectors = Vec::new();
        for &i in order.iter().take(want) {
            let s = eig.eigenvectors.column(i);
            let mut u = vec![0.0; n];
            for (c, q) in s.iter().zip(&basis.q) {
                axpy(*c, q, &mut u);
            }
            values.push(self.shift + 1.0 / eig.eigenvalues[i]);
            vectors.push(u);
        }
        (values, vectors)
    }

    /// Rayleigh-Ritz of the pencil on the span of `vectors`, lowest `count` pairs.
    fn rayleigh_ritz(&self, vectors: Vec<Vec<f64>>, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut basis = Basis::new();
        for mut v in vectors {
            let before = dot(&v, &self.m.mul_vec(&v)).sqrt();
            basis.project_out(&mut v);
            let mv = self.m.mul_vec(&v);
            let nm = dot(&v, &mv).max(0.0).sqrt();
            if nm > 1e-8 * before {
                basis.q.push(v.iter().map(|x| x / nm).collect());
                basis.mq.push(mv.iter().map(|x| x / nm).collect());
            }
        }
        let d = basis.q.len();
        let kq: Vec<Vec<f64>> = basis.q.iter().map(|q| self.k.mul_vec(q)).collect();
        let mut kr = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = dot(&basis.q[i], &kq[j]);
                kr[(i, j)] = v;
                kr[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(kr);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let n = self.k.dim();
        let mut values = Vec::new();
        let mut out = Vec::new();
        for &i in order.iter().take(count) {
            let s = eig.eigenvectors.column(i);
            let mut u = vec![0.0; n];
            for (c, q) in s.iter().zip(&basis.q) {
                axpy(*c, q, &mut u);
            }
            values.push(eig.eigenvalues[i]);
            out.push(u);
        }
        (values, out)
    }

    fn lock(&self, vectors: &[Vec<f64>]) -> Basis {
        let mut locked = Basis::new();
        for v in vectors {
            let mv = self.m.mul_vec(v);
            let nm = dot(v, &mv).sqrt();
            locked.q.push(v.iter().map(|x| x / nm).collect());
            locked.mq.push(mv.iter().map(|x| x / nm).collect());
        }
        locked
    }

    /// Single-vector Lanczos sees one direction per eigenspace, so after the
    /// first pass the search is repeated in the M-complement of the found
    /// vectors until it turns up nothing below the current top value.
    fn run(mut self, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let (mut values, mut vectors) = self.lanczos(&Basis::new(), count)?;
        for _ in 0..8 {
            if vectors.len() == self.k.dim() {
                break;
            }
            let locked = self.lock(&vectors);
            let (extra_values, extra_vectors) = self.lanczos(&locked, count)?;
            let top = values.last().copied().unwrap_or(f64::INFINITY);
            let missed =
                values.len() < count || extra_values.iter().any(|&v| v < top - 1e-9 * top.abs());
            if !missed {
                break;
            }
            let mut all = vectors;
            all.extend(extra_vectors);
            (values, vectors) = self.rayleigh_ritz(all, count);
        }
        Ok((values, vectors))
    }
}
