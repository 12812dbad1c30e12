use approx::assert_relative_eq;
use nalgebra::DVector;
use proptest::prelude::*;

use divform::assembly::{assemble, quadratic_form};
use divform::bounds::{check_theorem_1_1, BoundConstants, Slack};
use divform::eigensolve::{m_orthonormality_defect, solve, Method};
use divform::expressions::{parse, Expr};
use divform::geometry::{apply_t, t_extreme_eigenvalues, Chart, DriftField, TensorFieldT};
use divform::mesh::{generate, DomainSpec};

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        (1u32..5).prop_map(|n| n.to_string()),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("exp({a}/4)")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.prop_map(|a| format!("sqrt(1 + ({a})^2)")),
        ]
    })
}

fn central(e: &Expr, p: &[f64], v: usize, h: f64) -> f64 {
    let (mut a, mut b) = (p.to_vec(), p.to_vec());
    a[v] += h;
    b[v] -= h;
    (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivatives_match_finite_differences(
        text in expr(),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let e = parse(&text).unwrap();
        let p = [x, y];
        for v in 0..2 {
            let exact = e.differentiate(v).eval(&p).unwrap();
            let fd = central(&e, &p, v, 1e-5);
            let scale = 1.0 + exact.abs() + e.eval(&p).unwrap().abs();
            prop_assert!((exact - fd).abs() <= 1e-5 * scale, "{text}: {exact} vs {fd}");
        }
    }

    #[test]
    fn t_property_for_random_vectors(
        x in -0.8f64..0.8,
        y in -0.8f64..0.8,
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
    ) {
        let chart = Chart::hyperbolic_half_space(2);
        let t = TensorFieldT::from_components(vec![
            vec![parse("3 + x1").unwrap(), parse("x2/4").unwrap()],
            vec![parse("x2/4").unwrap(), parse("1 + x1^2").unwrap()],
        ])
        .unwrap();
        let p = [x, y + 1.9];
        let g = chart.metric(&p).unwrap();
        let ty = apply_t(&chart, &t, &p, &[a, b]).unwrap();
        let yv = DVector::from_column_slice(&[a, b]);
        let tyy = ty.dot(&(&g * &yv));
        let ty2 = ty.dot(&(&g * &ty));
        let (eps, delta) = t_extreme_eigenvalues(&chart, &t, &p).unwrap();
        prop_assert!(eps * tyy <= ty2 * (1.0 + 1e-12) + 1e-14);
        prop_assert!(ty2 <= delta * tyy * (1.0 + 1e-12) + 1e-14);
    }
}

#[test]
fn rayleigh_identity_on_a_curved_chart() {
    let mesh = generate(&DomainSpec::SphericalCap { angle: 1.0 }, 10).unwrap();
    let chart = Chart::sphere_stereographic();
    let t = TensorFieldT::diagonal(vec![parse("2 + x1").unwrap(), parse("1").unwrap()]);
    let eta = DriftField::new(parse("x1*x2").unwrap(), 2);
    let p = assemble(&mesh, &chart, &t, &eta).unwrap();
    let s = solve(&p, 6, Method::Dense, 1e-10).unwrap();
    for (lam, u) in s.values.iter().zip(&s.vectors) {
        assert_relative_eq!(
            lam * quadratic_form(&p.m, u),
            quadratic_form(&p.k, u),
            max_relative = 1e-10
        );
    }
    assert!(m_orthonormality_defect(&p.m, &s.vectors) < 1e-10);
}

#[test]
fn scaling_covariance_on_the_disk() {
    let c = BoundConstants::laplacian(2);
    let mut runs = Vec::new();
    for radius in [1.0, 3.0] {
        let mesh = generate(&DomainSpec::Disk { radius }, 8).unwrap();
        let p = assemble(
            &mesh,
            &Chart::identity(2),
            &TensorFieldT::identity(),
            &DriftField::zero(2),
        )
        .unwrap();
        runs.push(solve(&p, 11, Method::Dense, 1e-10).unwrap().values);
    }
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        assert_relative_eq!(*a, b * 9.0, max_relative = 1e-9);
    }
    for k in 1..=10 {
        let r1 = check_theorem_1_1(&runs[0], &c, k, Slack::default()).unwrap();
        let r3 = check_theorem_1_1(&runs[1], &c, k, Slack::default()).unwrap();
        assert_eq!(r1.passed, r3.passed);
        assert!((r1.relative_margin - r3.relative_margin).abs() < 1e-9);
    }
}
