//! Weighted P1 stiffness and mass matrices, and weighted quadrature.

mod quadrature;
mod sparse;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Chart, DriftField, GeometryError, TensorFieldT};
use crate::mesh::{interior_dof_map, signed_volume, DofMap, MeshError, SimplicialMesh};
pub use quadrature::QuadratureRule;
pub use sparse::CsrMatrix;

pub const DEFAULT_TRIANGLE_DEGREE: usize = 4;
pub const DEFAULT_SEGMENT_DEGREE: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error("cell {cell}: {source}")]
    Geometry {
        cell: usize,
        #[source]
        source: GeometryError,
    },
    #[error("cell {cell}: tensor T is not positive definite at {point:?}")]
    NotPositiveDefinite { cell: usize, point: Vec<f64> },
    #[error("cell {cell} is degenerate (zero volume)")]
    DegenerateCell { cell: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("mesh is {mesh}-dimensional but the chart is {chart}-dimensional")]
    DimensionMismatch { mesh: usize, chart: usize },
    #[error("no quadrature rule of degree {degree} on {dim}-simplices")]
    Quadrature { dim: usize, degree: usize },
}

pub type Result<T, E = AssemblyError> = std::result::Result<T, E>;

/// Assembled generalized eigenproblem `K u = λ M u` on the interior dofs.
#[derive(Debug, Clone)]
pub struct SpectralProblem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub dof_map: DofMap,
    pub quadrature_order: usize,
}

impl SpectralProblem {
    pub fn n_dof(&self) -> usize {
        self.dof_map.len()
    }
}

/// A quadrature point with its full weight `w |cell| √det g e^{−η}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPoint {
    pub cell: usize,
    pub bary: Vec<f64>,
    pub point: Vec<f64>,
    pub weight: f64,
}

pub fn default_degree(dim: usize) -> usize {
    if dim == 1 {
        DEFAULT_SEGMENT_DEGREE
    } else {
        DEFAULT_TRIANGLE_DEGREE
    }
}

fn rule_for(dim: usize, degree: usize) -> Result<QuadratureRule> {
    QuadratureRule::for_simplex(dim, degree).ok_or(AssemblyError::Quadrature { dim, degree })
}

fn check_dims(mesh: &SimplicialMesh, chart: &Chart) -> Result<()> {
    if mesh.dim != chart.dim() {
        return Err(AssemblyError::DimensionMismatch {
            mesh: mesh.dim,
            chart: chart.dim(),
        });
    }
    Ok(())
}

/// Coordinate gradients of the barycentric coordinates of a cell (one row per
/// vertex) and the cell's absolute coordinate volume.
pub fn barycentric_gradients(mesh: &SimplicialMesh, cell: usize) -> Result<(DMatrix<f64>, f64)> {
    let verts = &mesh.cells[cell];
    let n = mesh.dim;
    let x0 = &mesh.vertices[verts[0]];
    let mut jac = DMatrix::zeros(n, n);
    for c in 0..n {
        let xc = &mesh.vertices[verts[c + 1]];
        for r in 0..n {
            jac[(r, c)] = xc[r] - x0[r];
        }
    }
    let volume = signed_volume(&mesh.vertices, verts).abs();
    let inv = jac
        .try_inverse()
        .filter(|_| volume > 0.0)
        .ok_or(AssemblyError::DegenerateCell { cell })?;
    let mut grads = DMatrix::zeros(n + 1, n);
    for a in 0..n {
        for k in 0..n {
            grads[(a + 1, k)] = inv[(a, k)];
            grads[(0, k)] -= inv[(a, k)];
        }
    }
    Ok((grads, volume))
}

/// Coordinate gradient of the P1 interpolant of vertex values on a cell.
pub fn cell_gradient(mesh: &SimplicialMesh, cell: usize, values: &[f64]) -> Result<Vec<f64>> {
    let (grads, _) = barycentric_gradients(mesh, cell)?;
    let mut g = vec![0.0; mesh.dim];
    for (a, &v) in mesh.cells[cell].iter().enumerate() {
        for (k, gk) in g.iter_mut().enumerate() {
            *gk += values[v] * grads[(a, k)];
        }
    }
    Ok(g)
}

fn physical_point(mesh: &SimplicialMesh, cell: usize, bary: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; mesh.dim];
    for (&v, &b) in mesh.cells[cell].iter().zip(bary) {
        for (pk, xk) in p.iter_mut().zip(&mesh.vertices[v]) {
            *pk += b * xk;
        }
    }
    p
}

struct Element {
    /// Upper triangle (a <= b) of the local matrices, row-major over local pairs.
    k: Vec<f64>,
    m: Vec<f64>,
}

fn element(
    mesh: &SimplicialMesh,
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    rule: &QuadratureRule,
    cell: usize,
) -> Result<Element> {
    let nv = mesh.dim + 1;
    let (grads, volume) = barycentric_gradients(mesh, cell)?;
    let geo = |source| AssemblyError::Geometry { cell, source };
    let npairs = nv * (nv + 1) / 2;
    let mut k = vec![0.0; npairs];
    let mut m = vec![0.0; npairs];
    for (bary, w) in rule.points.iter().zip(&rule.weights) {
        let p = physical_point(mesh, cell, bary);
        let g = chart.metric(&p).map_err(geo)?;
        let tl = t.eval(chart, &p).map_err(geo)?;
        if tl.iter().any(|x| !x.is_finite()) || tl.clone().cholesky().is_none() {
            return Err(AssemblyError::NotPositiveDefinite { cell, point: p });
        }
        let e = eta.eval(&p).map_err(|e| {
            geo(GeometryError::Eval {
                point: p.clone(),
                source: e,
            })
        })?;
        let weight = w * volume * g.determinant().sqrt() * (-e).exp();
        let ginv = g.try_inverse().expect("metric checked positive definite");
        let a = &ginv * tl * &ginv;
        let a = (&a + a.transpose()) * (0.5 * weight);
        let ag = &grads * &a;
        let mut idx = 0;
        for i in 0..nv {
            for j in i..nv {
                let mut s = 0.0;
                for c in 0..mesh.dim {
                    s += ag[(i, c)] * grads[(j, c)];
                }
                k[idx] += s;
                m[idx] += weight * bary[i] * bary[j];
                idx += 1;
            }
        }
    }
    Ok(Element { k, m })
}

/// Assembles with the default quadrature degree for the mesh dimension.
pub fn assemble(
    mesh: &SimplicialMesh,
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
) -> Result<SpectralProblem> {
    assemble_with_degree(mesh, chart, t, eta, default_degree(mesh.dim))
}

pub fn assemble_with_degree(
    mesh: &SimplicialMesh,
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    degree: usize,
) -> Result<SpectralProblem> {
    check_dims(mesh, chart)?;
    t.check_dim(chart.dim())
        .map_err(|source| AssemblyError::Geometry { cell: 0, source })?;
    let rule = rule_for(mesh.dim, degree)?;
    let dof_map = interior_dof_map(mesh)?;
    let elements: Vec<Result<Element>> = (0..mesh.cells.len())
        .into_par_iter()
        .map(|c| element(mesh, chart, t, eta, &rule, c))
        .collect();
    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for (cell, el) in elements.into_iter().enumerate() {
        let el = el?;
        let verts = &mesh.cells[cell];
        let mut idx = 0;
        for i in 0..verts.len() {
            for j in i..verts.len() {
                if let (Some(a), Some(b)) = (
                    dof_map.vertex_to_dof[verts[i]],
                    dof_map.vertex_to_dof[verts[j]],
                ) {
                    let (a, b) = (a.min(b), a.max(b));
                    kt.push((a, b, el.k[idx]));
                    mt.push((a, b, el.m[idx]));
                }
                idx += 1;
            }
        }
    }
    let n = dof_map.len();
    Ok(SpectralProblem {
        k: CsrMatrix::from_upper_triplets(n, kt),
        m: CsrMatrix::from_upper_triplets(n, mt),
        dof_map,
        quadrature_order: rule.degree,
    })
}

/// All quadrature points of the mesh with weights of the measure `e^{−η} dΩ_g`.
pub fn quadrature_points(
    mesh: &SimplicialMesh,
    chart: &Chart,
    eta: &DriftField,
    degree: usize,
) -> Result<Vec<QuadPoint>> {
    check_dims(mesh, chart)?;
    let rule = rule_for(mesh.dim, degree)?;
    let per_cell: Vec<Result<Vec<QuadPoint>>> = (0..mesh.cells.len())
        .into_par_iter()
        .map(|cell| {
            let (_, volume) = barycentric_gradients(mesh, cell)?;
            let geo = |source| AssemblyError::Geometry { cell, source };
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(bary, w)| {
                    let point = physical_point(mesh, cell, bary);
                    let density = chart.volume_density(&point).map_err(geo)?;
                    let e = eta.eval(&point).map_err(|e| {
                        geo(GeometryError::Eval {
                            point: point.clone(),
                            source: e,
                        })
                    })?;
                    Ok(QuadPoint {
                        cell,
                        bary: bary.clone(),
                        weight: w * volume * density * (-e).exp(),
                        point,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(mesh.cells.len() * rule.len());
    for qs in per_cell {
        out.extend(qs?);
    }
    Ok(out)
}

/// `∫ f e^{−η} dΩ_g` with the default quadrature degree.
pub fn integrate<F>(mesh: &SimplicialMesh, chart: &Chart, eta: &DriftField, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64, GeometryError>,
{
    integrate_with_degree(mesh, chart, eta, default_degree(mesh.dim), f)
}

pub fn integrate_with_degree<F>(
    mesh: &SimplicialMesh,
    chart: &Chart,
    eta: &DriftField,
    degree: usize,
    f: F,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64, GeometryError>,
{
    let mut total = 0.0;
    for q in quadrature_points(mesh, chart, eta, degree)? {
        let v = f(&q.point).map_err(|source| AssemblyError::Geometry {
            cell: q.cell,
            source,
        })?;
        total += q.weight * v;
    }
    Ok(total)
}

/// `uᵀ A u` for a dof vector.
pub fn quadratic_form(a: &CsrMatrix, u: &[f64]) -> f64 {
    a.bilinear(u, u)
}

/// Interpolated value of a vertex field at a quadrature point.
pub fn interpolate(mesh: &SimplicialMesh, q: &QuadPoint, values: &[f64]) -> f64 {
    mesh.cells[q.cell]
        .iter()
        .zip(&q.bary)
        .map(|(&v, b)| b * values[v])
        .sum()
}

/// Dense copies, for small problems and tests.
pub fn dense_pair(problem: &SpectralProblem) -> (DMatrix<f64>, DMatrix<f64>) {
    (problem.k.to_dense(), problem.m.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expressions::parse;
    use crate::geometry::{apply_operator, t_form, ScalarField};
    use crate::mesh::{generate, refine, DomainSpec};

    fn flat(n: usize) -> (Chart, TensorFieldT, DriftField) {
        (
            Chart::identity(n),
            TensorFieldT::identity(),
            DriftField::zero(n),
        )
    }

    #[test]
    fn interval_matrices() {
        let mesh = generate(&DomainSpec::unit_interval(), 3).unwrap();
        let (c, t, e) = flat(1);
        let p = assemble(&mesh, &c, &t, &e).unwrap();
        assert_eq!(p.n_dof(), 2);
        let h = 1.0 / 3.0;
        let k = p.k.to_dense();
        let m = p.m.to_dense();
        let kx = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]) / h;
        let mx = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 4.0]) * (h / 6.0);
        assert!((k - kx).amax() < 1e-12);
        assert!((m - mx).amax() < 1e-14);
        assert!(p.k.is_symmetric() && p.m.is_symmetric());
    }

    #[test]
    fn constant_drift_scales_both_matrices() {
        let mesh = generate(&DomainSpec::unit_square(), 4).unwrap();
        let (c, t, e0) = flat(2);
        let e1 = DriftField::new(parse("0.7").unwrap(), 2);
        let p0 = assemble(&mesh, &c, &t, &e0).unwrap();
        let p1 = assemble(&mesh, &c, &t, &e1).unwrap();
        let s = (-0.7f64).exp();
        assert!((p1.k.to_dense() - p0.k.to_dense() * s).amax() < 1e-13);
        assert!((p1.m.to_dense() - p0.m.to_dense() * s).amax() < 1e-15);
    }

    #[test]
    fn integrals() {
        let (c, _, e) = flat(2);
        let sq = generate(&DomainSpec::unit_square(), 4).unwrap();
        let v = integrate(&sq, &c, &e, |_| Ok(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let hb = generate(
            &DomainSpec::HyperbolicBox {
                x0: 0.0,
                x1: 1.0,
                y0: 1.0,
                y1: 2.0,
            },
            32,
        )
        .unwrap();
        let hyp = Chart::hyperbolic_half_space(2);
        let v = integrate(&hb, &hyp, &e, |_| Ok(1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-7, "{v}");

        let line = generate(&DomainSpec::unit_interval(), 8).unwrap();
        let gauss = DriftField::new(parse("x1^2/2").unwrap(), 1);
        let v = integrate(&line, &Chart::identity(1), &gauss, |_| Ok(1.0)).unwrap();
        assert!((v - 0.855_624_391_892_149).abs() < 1e-8, "{v}");
    }

    #[test]
    fn degenerate_geometry_names_the_cell() {
        let mesh = generate(
            &DomainSpec::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: -1.0,
                y1: 1.0,
            },
            4,
        )
        .unwrap();
        let chart = Chart::intrinsic(vec![
            vec![parse("x2").unwrap(), parse("0").unwrap()],
            vec![parse("0").unwrap(), parse("1").unwrap()],
        ])
        .unwrap();
        let err = assemble(
            &mesh,
            &chart,
            &TensorFieldT::identity(),
            &DriftField::zero(2),
        )
        .unwrap_err();
        assert!(matches!(err, AssemblyError::Geometry { .. }));
        assert!(err.to_string().starts_with("cell "));
    }

    #[test]
    fn product_rule_integral_decays() {
        // ℓ vanishes to second order on the unit circle, so the boundary flux is zero.
        let chart = Chart::identity(2);
        let t = TensorFieldT::diagonal(vec![parse("2+x1").unwrap(), parse("1+x2^2").unwrap()]);
        let eta = DriftField::new(parse("x1*x2/2").unwrap(), 2);
        let f = ScalarField::new(parse("sin(x1)+x2^2").unwrap(), 2, 2);
        let l = ScalarField::new(parse("(1-x1^2-x2^2)^2").unwrap(), 2, 2);
        let integrand = |p: &[f64]| -> Result<f64, GeometryError> {
            let ev = |e| GeometryError::Eval {
                point: p.to_vec(),
                source: e,
            };
            let fl = f.value(p).map_err(ev)?;
            let ll = l.value(p).map_err(ev)?;
            let df = f.grad(p).map_err(ev)?;
            let dl = l.grad(p).map_err(ev)?;
            Ok(fl * apply_operator(&chart, &t, &eta, &l, p)?
                + 2.0 * t_form(&chart, &t, p, &df, &dl)?
                + ll * apply_operator(&chart, &t, &eta, &f, p)?)
        };
        let mut mesh = generate(&DomainSpec::Disk { radius: 1.0 }, 4).unwrap();
        let mut errs = Vec::new();
        for _ in 0..3 {
            errs.push(integrate(&mesh, &chart, &eta, integrand).unwrap().abs());
            mesh = refine(&mesh);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&rate), "{errs:?}");
        }
    }
}
