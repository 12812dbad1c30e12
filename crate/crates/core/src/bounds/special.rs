//! Inequalities on manifolds carrying special functions: a unit-gradient
//! function with bounded Laplacian, one with constant `ℒ`, or a map into a
//! unit sphere made of `ℒ`-eigenfunctions.

use nalgebra::DVector;
use rayon::prelude::*;

use super::{
    check_k, inputs_digest, need, quadratic_form_sides, BoundConstants, BoundsError,
    InequalityReport, Result, Slack,
};
use crate::assembly::{default_degree, quadrature_points};
use crate::expressions::Expr;
use crate::geometry::{
    apply_operator, apply_t, Chart, DriftField, GeometryError, ScalarField, TensorFieldT,
};
use crate::mesh::SimplicialMesh;

/// Tolerance on unit-gradient and unit-sphere conditions.
pub const NORM_TOL: f64 = 1e-8;
/// Tolerance on conditions involving the operator.
pub const OPERATOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Theorem3Scenario {
    /// `|∇θ| = 1`, `|Δθ| <= A₀`, with `∇θ` an eigenvector of `T`.
    UnitGradient { theta: Expr, a0: f64 },
    /// `|∇ψ| = 1` and `ℒψ = B₀`.
    ConstantOperator { psi: Expr, b0: f64 },
    /// `Σ f_ℓ² = 1` and `ℒf_ℓ = −γ f_ℓ`.
    SphereMap { components: Vec<Expr>, gamma: f64 },
}

impl Theorem3Scenario {
    pub fn variant(&self) -> &'static str {
        match self {
            Theorem3Scenario::UnitGradient { .. } => "i",
            Theorem3Scenario::ConstantOperator { .. } => "ii",
            Theorem3Scenario::SphereMap { .. } => "iii",
        }
    }

    pub fn name(&self) -> String {
        format!("theorem3_{}", self.variant())
    }
}

struct Worst {
    condition: &'static str,
    tolerance: f64,
    deviation: f64,
    point: Vec<f64>,
}

impl Worst {
    fn new(condition: &'static str, tolerance: f64) -> Self {
        Worst {
            condition,
            tolerance,
            deviation: 0.0,
            point: Vec::new(),
        }
    }

    fn update(&mut self, deviation: f64, p: &[f64]) {
        if !(deviation <= self.deviation) {
            self.deviation = deviation;
            self.point = p.to_vec();
        }
    }

    fn check(self) -> Result<()> {
        if self.deviation <= self.tolerance {
            Ok(())
        } else {
            Err(BoundsError::Hypothesis {
                condition: self.condition.into(),
                point: self.point,
                deviation: self.deviation,
                tolerance: self.tolerance,
            })
        }
    }
}

fn ev(p: &[f64]) -> impl Fn(crate::expressions::EvalError) -> GeometryError + '_ {
    move |e| GeometryError::Eval {
        point: p.to_vec(),
        source: e,
    }
}

/// `(| |∇f|_g − 1 |, contravariant ∇f)`
fn unit_gradient_defect(
    chart: &Chart,
    f: &ScalarField,
    p: &[f64],
) -> std::result::Result<(f64, DVector<f64>), GeometryError> {
    let df = f.grad(p).map_err(ev(p))?;
    let ginv = chart.metric(p)?.try_inverse().expect("positive definite");
    let grad = ginv * DVector::from_vec(df.clone());
    Ok(((chart.covector_norm(p, &df)? - 1.0).abs(), grad))
}

/// Checks the scenario's hypotheses at every quadrature point; the error names
/// the worst point of the first violated condition.
pub fn verify_theorem3_hypothesis(
    scenario: &Theorem3Scenario,
    chart: &Chart,
    t: &TensorFieldT,
    eta: &DriftField,
    mesh: &SimplicialMesh,
) -> Result<()> {
    let n = chart.dim();
    let points: Vec<Vec<f64>> = quadrature_points(mesh, chart, eta, default_degree(mesh.dim))?
        .into_iter()
        .map(|q| q.point)
        .collect();
    let field = |e: &Expr| -> Result<ScalarField> {
        if e.arity() > n {
            return Err(BoundsError::Scenario(format!(
                "{e} uses more than {n} coordinates"
            )));
        }
        Ok(ScalarField::new(e.clone(), n, 2))
    };
    match scenario {
        Theorem3Scenario::UnitGradient { theta, a0 } => {
            let f = field(theta)?;
            let flat_t = TensorFieldT::identity();
            let no_drift = DriftField::zero(n);
            let rows: Vec<std::result::Result<[f64; 3], GeometryError>> = points
                .par_iter()
                .map(|p| {
                    let (unit, grad) = unit_gradient_defect(chart, &f, p)?;
                    let tg = apply_t(chart, t, p, grad.as_slice())?;
                    let g = chart.metric(p)?;
                    let gg = (grad.transpose() * &g * &grad)[(0, 0)];
                    let along = (tg.transpose() * &g * &grad)[(0, 0)] / gg;
                    let perp = &tg - &grad * along;
                    let perp = chart.vector_norm(p, perp.as_slice())?;
                    let lap = apply_operator(chart, &flat_t, &no_drift, &f, p)?;
                    Ok([unit, perp, lap.abs() - a0])
                })
                .collect();
            let mut w = [
                Worst::new("|grad theta| = 1", NORM_TOL),
                Worst::new("grad theta is an eigenvector of T", NORM_TOL),
                Worst::new("|Laplacian theta| <= A0", NORM_TOL),
            ];
            for (row, p) in rows.into_iter().zip(&points) {
                let row = row?;
                for (wi, d) in w.iter_mut().zip(row) {
                    wi.update(d, p);
                }
            }
            w.into_iter().try_for_each(Worst::check)
        }
        Theorem3Scenario::ConstantOperator { psi, b0 } => {
            let f = field(psi)?;
            let rows: Vec<std::result::Result<[f64; 2], GeometryError>> = points
                .par_iter()
                .map(|p| {
                    let (unit, _) = unit_gradient_defect(chart, &f, p)?;
                    let l = apply_operator(chart, t, eta, &f, p)?;
                    Ok([unit, (l - b0).abs()])
                })
                .collect();
            let mut w = [
                Worst::new("|grad psi| = 1", NORM_TOL),
                Worst::new("L psi = B0", OPERATOR_TOL),
            ];
            for (row, p) in rows.into_iter().zip(&points) {
                let row = row?;
                for (wi, d) in w.iter_mut().zip(row) {
                    wi.update(d, p);
                }
            }
            w.into_iter().try_for_each(Worst::check)
        }
        Theorem3Scenario::SphereMap { components, gamma } => {
            if components.is_empty() {
                return Err(BoundsError::Scenario(
                    "sphere map needs at least one component".into(),
                ));
            }
            let fs = components.iter().map(field).collect::<Result<Vec<_>>>()?;
            let rows: Vec<std::result::Result<[f64; 2], GeometryError>> = points
                .par_iter()
                .map(|p| {
                    let mut sq = 0.0;
                    let mut op = 0.0f64;
                    for f in &fs {
                        let v = f.value(p).map_err(ev(p))?;
                        sq += v * v;
                        let l = apply_operator(chart, t, eta, f, p)?;
                        op = op.max((l + gamma * v).abs());
                    }
                    Ok([(sq - 1.0).abs(), op])
                })
                .collect();
            let mut w = [
                Worst::new("sum of f_l^2 = 1", NORM_TOL),
                Worst::new("L f_l = -gamma f_l", OPERATOR_TOL),
            ];
            for (row, p) in rows.into_iter().zip(&points) {
                let row = row?;
                for (wi, d) in w.iter_mut().zip(row) {
                    wi.update(d, p);
                }
            }
            w.into_iter().try_for_each(Worst::check)
        }
    }
}

/// The scenario's quadratic inequality at index `k`. Hypotheses are checked
/// separately by [`verify_theorem3_hypothesis`].
pub fn check_theorem3(
    values: &[f64],
    c: &BoundConstants,
    scenario: &Theorem3Scenario,
    k: usize,
    slack: Slack,
) -> Result<InequalityReport> {
    check_k(k)?;
    need(values, k + 1)?;
    let ratio = c.ellipticity();
    let (coef, add) = match scenario {
        Theorem3Scenario::UnitGradient { a0, .. } => {
            (8.0 * ratio, c.delta * (a0 + c.eta0).powi(2) / 4.0)
        }
        Theorem3Scenario::ConstantOperator { b0, .. } => (4.0 * ratio, -b0 * b0 / 4.0),
        Theorem3Scenario::SphereMap { gamma, .. } => (4.0 * ratio, gamma * c.eps / (4.0 * c.delta)),
    };
    let (lhs, rhs) = quadratic_form_sides(values, k, coef, add);
    Ok(InequalityReport::new(
        scenario.name(),
        k,
        lhs,
        rhs,
        slack,
        inputs_digest(values, c),
    ))
}

/// First-eigenvalue bound `λ₁ >= B₀²/4` of the constant-operator variant.
pub fn check_theorem3_lambda1(
    values: &[f64],
    c: &BoundConstants,
    b0: f64,
    slack: Slack,
) -> Result<InequalityReport> {
    need(values, 1)?;
    Ok(InequalityReport::new(
        "theorem3_ii_lambda1",
        1,
        b0 * b0 / 4.0,
        values[0],
        slack,
        inputs_digest(values, c),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expressions::parse;
    use crate::mesh::{generate, DomainSpec};

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn warped_strip_unit_gradient() {
        let mesh = generate(
            &DomainSpec::WarpedStrip {
                t0: 0.0,
                t1: 1.0,
                s0: 0.0,
                s1: 1.0,
            },
            4,
        )
        .unwrap();
        let chart = Chart::warped_strip();
        let s = Theorem3Scenario::UnitGradient {
            theta: e("x1"),
            a0: 1.0,
        };
        verify_theorem3_hypothesis(
            &s,
            &chart,
            &TensorFieldT::identity(),
            &DriftField::zero(2),
            &mesh,
        )
        .unwrap();
        let bad = Theorem3Scenario::UnitGradient {
            theta: e("x1"),
            a0: 0.5,
        };
        let err = verify_theorem3_hypothesis(
            &bad,
            &chart,
            &TensorFieldT::identity(),
            &DriftField::zero(2),
            &mesh,
        )
        .unwrap_err();
        assert!(matches!(err, BoundsError::Hypothesis { .. }), "{err}");
        let skew = TensorFieldT::from_components(vec![vec![e("2"), e("1")], vec![e("1"), e("2")]])
            .unwrap();
        assert!(
            verify_theorem3_hypothesis(&s, &chart, &skew, &DriftField::zero(2), &mesh).is_err()
        );
    }

    #[test]
    fn hyperbolic_constant_operator() {
        let mesh = generate(
            &DomainSpec::HyperbolicBox {
                x0: 0.0,
                x1: 1.0,
                y0: 1.0,
                y1: 2.0,
            },
            4,
        )
        .unwrap();
        let chart = Chart::hyperbolic_half_space(2);
        let s = Theorem3Scenario::ConstantOperator {
            psi: e("log(x2)"),
            b0: -1.0,
        };
        verify_theorem3_hypothesis(
            &s,
            &chart,
            &TensorFieldT::identity(),
            &DriftField::zero(2),
            &mesh,
        )
        .unwrap();
        let wrong = Theorem3Scenario::ConstantOperator {
            psi: e("log(x2)"),
            b0: -0.9,
        };
        assert!(verify_theorem3_hypothesis(
            &wrong,
            &chart,
            &TensorFieldT::identity(),
            &DriftField::zero(2),
            &mesh
        )
        .is_err());
        let c = BoundConstants {
            h0: None,
            ..BoundConstants::laplacian(2)
        };
        let r = check_theorem3_lambda1(&[0.3], &c, -1.0, Slack::default()).unwrap();
        assert!(r.passed && r.lhs == 0.25);
    }

    #[test]
    fn degenerate_sphere_map_reduces_to_yang() {
        let mesh = generate(&DomainSpec::unit_square(), 3).unwrap();
        let chart = Chart::identity(2);
        let s = Theorem3Scenario::SphereMap {
            components: vec![e("1"), e("0")],
            gamma: 0.0,
        };
        verify_theorem3_hypothesis(
            &s,
            &chart,
            &TensorFieldT::identity(),
            &DriftField::zero(2),
            &mesh,
        )
        .unwrap();
        let c = BoundConstants::laplacian(2);
        let values = [2.0, 5.0, 5.0, 8.0];
        let r = check_theorem3(&values, &c, &s, 3, Slack::default()).unwrap();
        // (4δ/ε) with zero shift
        let expect: f64 = 4.0 * values[..3].iter().map(|l| (8.0 - l) * l).sum::<f64>();
        assert_eq!(r.rhs, expect);
        assert_eq!(r.name, "theorem3_iii");
    }
}
