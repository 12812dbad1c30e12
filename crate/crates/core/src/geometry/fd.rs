//! Central finite-difference versions of the derivative-based geometry
//! outputs. These only serve as a cross-check of the exact path.

use super::{c0_vector_field, Chart, DriftField, Result, TensorFieldT};

/// Default step: cube root of machine epsilon times a length scale.
pub fn default_step(length_scale: f64) -> f64 {
    f64::EPSILON.cbrt() * length_scale
}

fn shifted(p: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += h;
    q
}

/// `Γ^k_ij` from differenced metric components; indexed like
/// [`super::Christoffel::values`].
pub fn christoffel(chart: &Chart, p: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = chart.dim();
    let ginv = chart.metric(p)?.try_inverse().expect("positive definite");
    let mut dg = Vec::with_capacity(n);
    for k in 0..n {
        let plus = chart.metric(&shifted(p, k, h))?;
        let minus = chart.metric(&shifted(p, k, -h))?;
        dg.push((plus - minus) / (2.0 * h));
    }
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out[(k * n + i) * n + j] = 0.5 * s;
            }
        }
    }
    Ok(out)
}

/// `tr(∇T)` with `∂_i T_jl` differenced and the connection taken from
/// differenced metric components.
pub fn trace_nabla_t(chart: &Chart, t: &TensorFieldT, p: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = chart.dim();
    let ginv = chart.metric(p)?.try_inverse().expect("positive definite");
    let gamma = christoffel(chart, p, h)?;
    let gm = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let tl = t.eval(chart, p)?;
    let mut dt = Vec::with_capacity(n);
    for i in 0..n {
        let plus = t.eval(chart, &shifted(p, i, h))?;
        let minus = t.eval(chart, &shifted(p, i, -h))?;
        dt.push((plus - minus) / (2.0 * h));
    }
    let mut out = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut cov = dt[i][(j, l)];
                    for a in 0..n {
                        cov -= gm(a, i, j) * tl[(a, l)] + gm(a, i, l) * tl[(j, a)];
                    }
                    *o += ginv[(i, j)] * ginv[(k, l)] * cov;
                }
            }
        }
    }
    Ok(out)
}

/// The drift-constant integrand with the divergence taken as
/// `(1/√g) Σ_k ∂_k(√g V^k)` by central differences.
pub fn c0_integrand(
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    p: &[f64],
    h: f64,
) -> Result<f64> {
    let n = chart.dim();
    let density = chart.volume_density(p)?;
    let mut div = 0.0;
    for k in 0..n {
        let qp = shifted(p, k, h);
        let qm = shifted(p, k, -h);
        let vp = c0_vector_field(chart, t, eta, &qp)?[k] * chart.volume_density(&qp)?;
        let vm = c0_vector_field(chart, t, eta, &qm)?[k] * chart.volume_density(&qm)?;
        div += (vp - vm) / (2.0 * h);
    }
    div /= density;
    let ginv = chart.metric(p)?.try_inverse().expect("positive definite");
    let deta = nalgebra::DVector::from_vec(
        eta.grad_components(p)
            .map_err(|e| super::GeometryError::eval(p, e))?,
    );
    let t_grad = super::apply_t(chart, t, p, (ginv * deta).as_slice())?;
    let norm = chart.vector_norm(p, t_grad.as_slice())?;
    Ok(0.5 * div - 0.25 * norm * norm)
}
