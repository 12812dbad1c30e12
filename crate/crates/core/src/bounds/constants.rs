//! Sampled suprema and infima of the geometric constants.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{BoundsError, Result};
use crate::assembly::{default_degree, quadrature_points};
use crate::geometry::{
    c0_integrand, generalized_mean_curvature, t_extreme_eigenvalues, trace_nabla_t, Chart,
    ChartKind, DriftField, GeometryError, TensorFieldT,
};
use crate::mesh::SimplicialMesh;

/// User-supplied analytic values that replace sampled ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub h0: Option<f64>,
    pub c0: Option<f64>,
    pub t0: Option<f64>,
    pub eta0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// `None` when the chart is intrinsic and no value was supplied.
    pub h0: Option<f64>,
    pub c0: f64,
    pub t0: f64,
    pub eta0: f64,
    pub sample_count: usize,
    /// Where each sampled extremum was attained.
    pub locations: BTreeMap<String, Vec<f64>>,
    /// Names of the constants taken from overrides.
    pub overridden: Vec<String>,
}

impl BoundConstants {
    /// Constants given directly, as for a spectrum that did not come from a mesh.
    pub fn exact(n: usize, eps: f64, delta: f64, h0: f64, c0: f64, t0: f64, eta0: f64) -> Self {
        BoundConstants {
            n,
            eps,
            delta,
            h0: Some(h0),
            c0,
            t0,
            eta0,
            sample_count: 0,
            locations: BTreeMap::new(),
            overridden: Vec::new(),
        }
    }

    /// Flat Laplacian: `ε = δ = 1`, everything else zero.
    pub fn laplacian(n: usize) -> Self {
        Self::exact(n, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn h0(&self) -> Result<f64> {
        self.h0.ok_or(BoundsError::MissingConstant("H0"))
    }

    /// `(n²H₀² + 4C₀ + T₀²) / 4δ`
    pub fn upsilon_shift(&self) -> Result<f64> {
        let n = self.n as f64;
        let h0 = self.h0()?;
        Ok((n * n * h0 * h0 + 4.0 * self.c0 + self.t0 * self.t0) / (4.0 * self.delta))
    }

    /// `δ / ε`
    pub fn ellipticity(&self) -> f64 {
        self.delta / self.eps
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BoundsError::InvalidConstants(m));
        if !(self.eps > 0.0 && self.eps <= self.delta) {
            return bad(format!(
                "need 0 < eps <= delta, got eps={} delta={}",
                self.eps, self.delta
            ));
        }
        for (name, v) in [
            ("H0", self.h0.unwrap_or(0.0)),
            ("T0", self.t0),
            ("eta0", self.eta0),
        ] {
            if !(v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !self.c0.is_finite() {
            return bad(format!("C0 must be finite, got {}", self.c0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Sample {
    eps: f64,
    delta: f64,
    h0: Option<f64>,
    c0: f64,
    t0: f64,
    eta0: f64,
}

fn sample(
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    o: &Overrides,
    p: &[f64],
) -> std::result::Result<Sample, GeometryError> {
    let (eps, delta) = t_extreme_eigenvalues(chart, t, p)?;
    let h0 = match (o.h0, chart.kind()) {
        (Some(v), _) => Some(v),
        (None, _) if chart.is_flat_identity() => Some(0.0),
        (None, ChartKind::Immersed) => Some(generalized_mean_curvature(chart, t, p)?.norm()),
        (None, ChartKind::Intrinsic) => None,
    };
    let c0 = match o.c0 {
        Some(v) => v,
        None if t.is_identity() && eta.is_zero() => 0.0,
        None => c0_integrand(chart, t, eta, p)?,
    };
    let t0 = match o.t0 {
        Some(v) => v,
        None if t.is_identity() => 0.0,
        None => chart.vector_norm(p, &trace_nabla_t(chart, t, p)?)?,
    };
    let eta0 = match o.eta0 {
        Some(v) => v,
        None if eta.is_zero() => 0.0,
        None => {
            let d = eta.grad_components(p).map_err(|e| GeometryError::Eval {
                point: p.to_vec(),
                source: e,
            })?;
            chart.covector_norm(p, &d)?
        }
    };
    Ok(Sample {
        eps,
        delta,
        h0,
        c0,
        t0,
        eta0,
    })
}

/// Extremizes every constant over the quadrature points and vertices of `mesh`.
pub fn estimate_constants(
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    mesh: &SimplicialMesh,
    overrides: &Overrides,
) -> Result<BoundConstants> {
    let mut points: Vec<Vec<f64>> = quadrature_points(mesh, chart, eta, default_degree(mesh.dim))?
        .into_iter()
        .map(|q| q.point)
        .collect();
    points.extend(mesh.vertices.iter().cloned());
    let samples: Vec<std::result::Result<Sample, GeometryError>> = points
        .par_iter()
        .map(|p| sample(chart, t, eta, overrides, p))
        .collect();

    let mut best: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut h0_missing = false;
    for (i, s) in samples.into_iter().enumerate() {
        let s = s.map_err(BoundsError::Geometry)?;
        let mut keep = |name: &'static str, v: f64, larger: bool| {
            let entry = best.entry(name).or_insert((v, i));
            if (larger && v > entry.0) || (!larger && v < entry.0) {
                *entry = (v, i);
            }
        };
        keep("eps", s.eps, false);
        keep("delta", s.delta, true);
        keep("C0", s.c0, true);
        keep("T0", s.t0, true);
        keep("eta0", s.eta0, true);
        match s.h0 {
            Some(h) => keep("H0", h, true),
            None => h0_missing = true,
        }
    }
    let mut overridden = Vec::new();
    let mut locations = BTreeMap::new();
    let mut pick = |name: &str, over: Option<f64>| -> f64 {
        match over {
            Some(v) => {
                overridden.push(name.to_string());
                v
            }
            None => {
                let (v, i) = best[name];
                locations.insert(name.to_string(), points[i].clone());
                v
            }
        }
    };
    let eps = pick("eps", overrides.eps);
    let delta = pick("delta", overrides.delta);
    let c0 = pick("C0", overrides.c0);
    let t0 = pick("T0", overrides.t0);
    let eta0 = pick("eta0", overrides.eta0);
    let h0 = match overrides.h0 {
        Some(v) => Some(pick("H0", Some(v))),
        None if h0_missing => None,
        None => Some(pick("H0", None)),
    };
    let constants = BoundConstants {
        n: mesh.dim,
        eps,
        delta,
        h0,
        c0,
        t0,
        eta0,
        sample_count: points.len(),
        locations,
        overridden,
    };
    constants.validate()?;
    Ok(constants)
}
