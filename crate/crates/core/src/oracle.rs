//! Closed-form Dirichlet spectra of the flat Laplacian and convergence-rate
//! estimation.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrum {
    pub domain: String,
    /// Ascending, repeated according to multiplicity.
    pub values: Vec<f64>,
    pub note: String,
}

fn positive(name: &str, v: f64) -> Result<(), OracleError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(OracleError::Argument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

pub fn interval_spectrum(length: f64, count: usize) -> Result<ReferenceSpectrum, OracleError> {
    positive("length", length)?;
    Ok(ReferenceSpectrum {
        domain: format!("interval(0, {length})"),
        values: (1..=count)
            .map(|k| (k as f64 * PI / length).powi(2))
            .collect(),
        note: "(kπ/L)²".into(),
    })
}

pub fn rectangle_spectrum(a: f64, b: f64, count: usize) -> Result<ReferenceSpectrum, OracleError> {
    positive("a", a)?;
    positive("b", b)?;
    // Every value among the lowest `count` has p, q <= count.
    let mut values = Vec::with_capacity(count * count);
    for p in 1..=count {
        for q in 1..=count {
            values.push(PI * PI * ((p * p) as f64 / (a * a) + (q * q) as f64 / (b * b)));
        }
    }
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    Ok(ReferenceSpectrum {
        domain: format!("rectangle({a} x {b})"),
        values,
        note: "π²(p²/a² + q²/b²)".into(),
    })
}

/// Unit disk: squares of Bessel zeros `j_{m,k}`, doubled for `m >= 1`.
pub fn disk_spectrum(count: usize) -> Result<ReferenceSpectrum, OracleError> {
    if count == 0 {
        return Err(OracleError::Argument("count must be at least 1".into()));
    }
    let mut limit = 10.0;
    loop {
        let mut values = Vec::new();
        let mut m = 0;
        while (m as f64) < limit {
            for z in bessel_zeros(m, limit) {
                values.push(z * z);
                if m > 0 {
                    values.push(z * z);
                }
            }
            m += 1;
        }
        values.sort_by(f64::total_cmp);
        if values.len() >= count {
            values.truncate(count);
            return Ok(ReferenceSpectrum {
                domain: "disk(1)".into(),
                values,
                note: "j_{m,k}², multiplicity 2 for m >= 1".into(),
            });
        }
        limit *= 1.5;
    }
}

/// Least-squares slope of `log err` against `log h`.
pub fn convergence_order(samples: &[(f64, f64)]) -> Result<f64, OracleError> {
    if samples.len() < 3 {
        return Err(OracleError::Argument("need at least three samples".into()));
    }
    for w in samples.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(OracleError::Argument(
                "h must be strictly decreasing".into(),
            ));
        }
    }
    for &(h, e) in samples {
        positive("h", h)?;
        positive("error", e)?;
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `J_m(x)` by the ascending series for `|x| <= 12`, Miller's recurrence beyond.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    if x.abs() <= 12.0 {
        bessel_j_series(m, x)
    } else {
        bessel_j_miller(m, x)
    }
}

pub fn bessel_j_series(m: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..500 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && k as f64 > half.abs() {
            break;
        }
    }
    sum
}

/// Downward recurrence from a high order, normalized by `J₀ + 2ΣJ_{2k} = 1`.
pub fn bessel_j_miller(m: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let top = (m as f64).max(x.abs());
    let mut start = (top + 30.0 + (50.0 * top).sqrt()) as usize;
    start += start % 2;
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
        if k - 1 == m {
            wanted = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    wanted / norm
}

/// Positive zeros of `J_m` below `limit`, by sign-change scanning and bisection.
pub fn bessel_zeros(m: usize, limit: f64) -> Vec<f64> {
    bessel_zeros_with(m, limit, bessel_j)
}

pub fn bessel_zeros_with(m: usize, limit: f64, j: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    // Zeros of J_m are spaced by more than π/2 and the first exceeds m.
    let step = 0.05;
    let mut zeros = Vec::new();
    let mut a = (m as f64).max(step);
    let mut fa = j(m, a);
    while a < limit {
        let b = (a + step).min(limit);
        let fb = j(m, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                let fm = j(m, mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// McMahon's large-argument estimate of `j_{m,k}`.
pub fn mcmahon(m: usize, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * m as f64 - 0.25) * PI;
    let mu = 4.0 * (m * m) as f64;
    beta - (mu - 1.0) / (8.0 * beta)
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta).powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_and_rectangle() {
        let s = interval_spectrum(1.0, 3).unwrap();
        assert_eq!(s.values, vec![PI * PI, 4.0 * PI * PI, 9.0 * PI * PI]);
        let s = interval_spectrum(PI, 3).unwrap();
        for (v, e) in s.values.iter().zip([1.0, 4.0, 9.0]) {
            assert!((v - e).abs() < 1e-13);
        }
        let q = interval_spectrum(2.0, 2).unwrap();
        assert!((q.values[1] - PI * PI).abs() < 1e-13);
        let r = rectangle_spectrum(1.0, 1.0, 4).unwrap();
        let p2 = PI * PI;
        for (v, e) in r.values.iter().zip([2.0, 5.0, 5.0, 8.0]) {
            assert!((v - e * p2).abs() < 1e-12);
        }
        let r = rectangle_spectrum(2.0, 1.0, 1).unwrap();
        assert!((r.values[0] - 1.25 * p2).abs() < 1e-12);
        assert!(interval_spectrum(0.0, 1).is_err());
    }

    #[test]
    fn bessel_values_and_zeros() {
        // J_0(1), J_1(1), J_2(5) from standard tables
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(2, 5.0) - 0.046_565_116_277_752_2).abs() < 1e-14);
        for m in 0..5 {
            for x in [0.5, 3.0, 7.5, 11.9] {
                assert!((bessel_j_series(m, x) - bessel_j_miller(m, x)).abs() < 1e-12);
            }
        }
        assert!((bessel_zeros(0, 3.0)[0] - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_zeros(1, 4.0)[0] - 3.831_705_970_207_512).abs() < 1e-12);
        assert!((bessel_zeros(2, 6.0)[0] - 5.135_622_301_840_683).abs() < 1e-12);
        for m in 0..4 {
            let zs = bessel_zeros(m, 30.0);
            for (k, z) in zs.iter().enumerate() {
                assert!((z - mcmahon(m, k + 1)).abs() < 0.1, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn zeros_do_not_depend_on_evaluation_method() {
        for m in 0..6 {
            let a = bessel_zeros_with(m, 12.0, bessel_j_series);
            let b = bessel_zeros_with(m, 12.0, bessel_j_miller);
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn disk() {
        let s = disk_spectrum(6).unwrap();
        assert!((s.values[0] - 5.783_186).abs() < 1e-6);
        assert!((s.values[1] - 14.681_97).abs() < 1e-5);
        assert_eq!(s.values[1], s.values[2]);
        assert!((s.values[3] - 26.3746).abs() < 1e-4);
        assert_eq!(s.values[3], s.values[4]);
        assert!((s.values[5] - 2.404_825_557_695_773f64.powi(2)) > 0.0);
        assert_eq!(disk_spectrum(200).unwrap().values.len(), 200);
    }

    #[test]
    fn orders() {
        let quad: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| (h, 3.0 * h * h))
            .collect();
        assert!((convergence_order(&quad).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| (h, 0.5 * h)).collect();
        assert!((convergence_order(&lin).unwrap() - 1.0).abs() < 1e-12);
        assert!(convergence_order(&[(0.1, 1.0), (0.05, 0.0), (0.01, 1.0)]).is_err());
        assert!(convergence_order(&[(0.1, 1.0), (0.05, 1.0)]).is_err());
    }
}
