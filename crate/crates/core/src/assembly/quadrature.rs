//! Quadrature rules on the reference segment and triangle, in barycentric
//! coordinates with weights normalized to sum to one (multiply by the cell
//! volume).

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Polynomials up to this total degree are integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    /// Smallest tabulated rule of at least the requested degree for a simplex
    /// of dimension `dim`; `None` if none is tabulated.
    pub fn for_simplex(dim: usize, degree: usize) -> Option<Self> {
        match dim {
            1 => Some(Self::segment(degree)),
            2 => Self::triangle(degree),
            _ => None,
        }
    }

    /// Gauss-Legendre on `[0, 1]` with `ceil((degree + 1) / 2)` points.
    pub fn segment(degree: usize) -> Self {
        let npts = degree / 2 + 1;
        let (nodes, weights) = gauss_legendre(npts);
        QuadratureRule {
            points: nodes
                .iter()
                .map(|&x| {
                    let t = 0.5 * (x + 1.0);
                    vec![1.0 - t, t]
                })
                .collect(),
            weights: weights.iter().map(|w| 0.5 * w).collect(),
            degree: 2 * npts - 1,
        }
    }

    /// Symmetric triangle rules of degree 1, 2, 4 and 5.
    pub fn triangle(degree: usize) -> Option<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut orbit3 = |a: f64, w: f64| {
            let b = 1.0 - 2.0 * a;
            for p in [[b, a, a], [a, b, a], [a, a, b]] {
                points.push(p.to_vec());
                weights.push(w);
            }
        };
        let exact = match degree {
            0 | 1 => {
                points.push(vec![1.0 / 3.0; 3]);
                weights.push(1.0);
                1
            }
            2 => {
                orbit3(1.0 / 6.0, 1.0 / 3.0);
                2
            }
            3 | 4 => {
                orbit3(0.445_948_490_915_965, 0.223_381_589_678_011);
                orbit3(0.091_576_213_509_771, 0.109_951_743_655_322);
                4
            }
            5 => {
                let sqrt15 = 15f64.sqrt();
                let centroid = vec![1.0 / 3.0; 3];
                orbit3((6.0 - sqrt15) / 21.0, (155.0 - sqrt15) / 1200.0);
                orbit3((6.0 + sqrt15) / 21.0, (155.0 + sqrt15) / 1200.0);
                points.push(centroid);
                weights.push(9.0 / 40.0);
                5
            }
            _ => return None,
        };
        Some(QuadratureRule {
            points,
            weights,
            degree: exact,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn segment_rules_are_exact() {
        for degree in 1..=9 {
            let rule = QuadratureRule::segment(degree);
            assert!(rule.degree >= degree);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for k in 0..=rule.degree {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[1].powi(k as i32))
                    .sum();
                assert!(
                    (q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14,
                    "degree {degree}, x^{k}"
                );
            }
        }
        assert_eq!(QuadratureRule::segment(5).len(), 3);
    }

    #[test]
    fn triangle_rules_are_exact() {
        for degree in [1, 2, 4, 5] {
            let rule = QuadratureRule::triangle(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=degree {
                for b in 0..=degree - a {
                    // ∫_ref x^a y^b = a! b! / (a + b + 2)!, reference area 1/2
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2) * 2.0;
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    assert!((q - exact).abs() < 1e-13, "degree {degree}: x^{a} y^{b}");
                }
            }
        }
        assert_eq!(QuadratureRule::triangle(4).unwrap().len(), 6);
        assert!(QuadratureRule::triangle(7).is_none());
    }
}
