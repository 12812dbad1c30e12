//! Quadrature evaluation of the trial-function inequality behind the
//! quadratic bounds, using discrete eigenfunctions.

use nalgebra::DVector;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{check_k, need, BoundsError, InequalityReport, Result, Slack};
use crate::assembly::{
    barycentric_gradients, default_degree, quadrature_points, QuadPoint, SpectralProblem,
};
use crate::eigensolve::Spectrum;
use crate::geometry::{
    apply_operator, Chart, DriftField, GeometryError, ScalarField, TensorFieldT,
};
use crate::mesh::SimplicialMesh;

/// Relative gap below which two eigenvalues count as one eigenspace.
pub const SIMPLE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenspacePolicy {
    /// Skip unless `λ₁..λ_{k+1}` are pairwise separated.
    #[default]
    Simple,
    /// Sum over whatever basis the solver returned for repeated eigenvalues.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaSides {
    pub lhs: f64,
    pub rhs: f64,
}

struct PointData {
    q: QuadPoint,
    /// `T(∇f, ∇f)`
    tff: f64,
    /// `ℒf`
    lf: f64,
    /// `g⁻¹ T g⁻¹ df`, so that `T(∇f, ∇u) = ⟨this, du⟩`.
    tdf: DVector<f64>,
}

/// Both sides of
/// `Σ (λ_{k+1} − λ_i)² ∫ T(∇f,∇f) u_i² dm <= 4 Σ (λ_{k+1} − λ_i) ‖T(∇f,∇u_i) + ½ u_i ℒf‖²`.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_sides(
    problem: &SpectralProblem,
    spectrum: &Spectrum,
    mesh: &SimplicialMesh,
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    f: &ScalarField,
    k: usize,
) -> Result<LemmaSides> {
    check_k(k)?;
    need(&spectrum.values, k + 1)?;
    let qs = quadrature_points(mesh, chart, eta, default_degree(mesh.dim))?;
    let data: Vec<std::result::Result<PointData, GeometryError>> = qs
        .into_par_iter()
        .map(|q| {
            let p = &q.point;
            let df = f.grad(p).map_err(|e| GeometryError::Eval {
                point: p.clone(),
                source: e,
            })?;
            let g = chart.metric(p)?;
            let ginv = g.try_inverse().expect("positive definite");
            let tl = t.eval(chart, p)?;
            let df = DVector::from_vec(df);
            let tdf = &ginv * tl * &ginv * &df;
            let tff = tdf.dot(&df);
            let lf = apply_operator(chart, t, eta, f, p)?;
            Ok(PointData { q, tff, lf, tdf })
        })
        .collect();
    let data = data
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let grads = (0..mesh.cells.len())
        .map(|c| barycentric_gradients(mesh, c).map(|g| g.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let top = spectrum.values[k];
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..k {
        let u = problem.dof_map.expand(&spectrum.vectors[i]);
        let cell_du: Vec<DVector<f64>> = mesh
            .cells
            .iter()
            .zip(&grads)
            .map(|(cell, gr)| {
                let mut du = DVector::zeros(mesh.dim);
                for (a, &v) in cell.iter().enumerate() {
                    for c in 0..mesh.dim {
                        du[c] += u[v] * gr[(a, c)];
                    }
                }
                du
            })
            .collect();
        let mut weighted = 0.0;
        let mut norm2 = 0.0;
        for d in &data {
            let ui: f64 = mesh.cells[d.q.cell]
                .iter()
                .zip(&d.q.bary)
                .map(|(&v, b)| b * u[v])
                .sum();
            weighted += d.q.weight * d.tff * ui * ui;
            let term = d.tdf.dot(&cell_du[d.q.cell]) + 0.5 * ui * d.lf;
            norm2 += d.q.weight * term * term;
        }
        let gap = top - spectrum.values[i];
        lhs += gap * gap * weighted;
        rhs += 4.0 * gap * norm2;
    }
    Ok(LemmaSides { lhs, rhs })
}

#[allow(clippy::too_many_arguments)]
pub fn lemma1_check(
    problem: &SpectralProblem,
    spectrum: &Spectrum,
    mesh: &SimplicialMesh,
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    f: &ScalarField,
    k: usize,
    policy: EigenspacePolicy,
    slack: Slack,
) -> Result<InequalityReport> {
    check_k(k)?;
    need(&spectrum.values, k + 1)?;
    if policy == EigenspacePolicy::Simple {
        for i in 0..k {
            let (a, b) = (spectrum.values[i], spectrum.values[i + 1]);
            if (b - a) < SIMPLE_GAP * b.abs() {
                return Err(BoundsError::Skipped(format!(
                    "eigenvalues {} and {} are not simple (relative gap {:e})",
                    i + 1,
                    i + 2,
                    (b - a) / b.abs()
                )));
            }
        }
    }
    let sides = lemma1_sides(problem, spectrum, mesh, chart, t, eta, f, k)?;
    let mut h = Sha256::new();
    for v in &spectrum.values[..=k] {
        h.update(v.to_le_bytes());
    }
    h.update(f.expr().to_string().as_bytes());
    Ok(InequalityReport::new(
        "lemma1",
        k,
        sides.lhs,
        sides.rhs,
        slack,
        hex::encode(h.finalize()),
    ))
}
