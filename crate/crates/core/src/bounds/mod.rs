//! Bound constants and the universal eigenvalue inequalities, evaluated on a
//! computed spectrum.

mod constants;
mod lemma;
mod special;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::geometry::GeometryError;
pub use constants::{estimate_constants, BoundConstants, Overrides};
pub use lemma::{lemma1_check, lemma1_sides, EigenspacePolicy, LemmaSides};
pub use special::{
    check_theorem3, check_theorem3_lambda1, verify_theorem3_hypothesis, Theorem3Scenario,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("need {needed} eigenvalues, have {available}")]
    Range { needed: usize, available: usize },
    #[error("constant {0} is required but unavailable (intrinsic chart without an override)")]
    MissingConstant(&'static str),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("hypothesis `{condition}` violated: worst deviation {deviation:e} at {point:?} (tolerance {tolerance:e})")]
    Hypothesis {
        condition: String,
        point: Vec<f64>,
        deviation: f64,
        tolerance: f64,
    },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("skipped: {0}")]
    Skipped(String),
}

pub type Result<T, E = BoundsError> = std::result::Result<T, E>;

/// `lhs <= rhs + rel·|rhs| + abs` counts as a pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Slack {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl Slack {
    pub fn admits(&self, lhs: f64, rhs: f64) -> bool {
        lhs <= rhs + self.rel * rhs.abs() + self.abs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub relative_margin: f64,
    pub passed: bool,
    pub inputs_digest: String,
    /// Diagnostic attached to the evaluation, such as a clamped bracket.
    pub note: Option<String>,
}

impl InequalityReport {
    pub fn new(
        name: impl Into<String>,
        k: usize,
        lhs: f64,
        rhs: f64,
        slack: Slack,
        digest: String,
    ) -> Self {
        let margin = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs());
        InequalityReport {
            name: name.into(),
            k,
            lhs,
            rhs,
            margin,
            relative_margin: if scale > 0.0 { margin / scale } else { 0.0 },
            passed: slack.admits(lhs, rhs),
            inputs_digest: digest,
            note: None,
        }
    }

    fn with_note(mut self, note: Option<String>) -> Self {
        self.note = note;
        self
    }
}

/// Hex SHA-256 of the eigenvalues and constants a check consumed.
pub fn inputs_digest(values: &[f64], c: &BoundConstants) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    h.update((c.n as u64).to_le_bytes());
    for v in [c.eps, c.delta, c.h0.unwrap_or(f64::NAN), c.c0, c.t0, c.eta0] {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Largest `k` whose check uses only eigenvalues in the trusted range
/// `k + 1 <= max(10, N_dof / 20)`, further capped by what was computed.
pub fn trusted_k_max(n_dof: usize, available: usize) -> usize {
    let trusted = 10usize.max(n_dof / 20);
    trusted.min(available).saturating_sub(1)
}

fn need(values: &[f64], count: usize) -> Result<()> {
    if values.len() < count {
        return Err(BoundsError::Range {
            needed: count,
            available: values.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSpectrum {
    pub shift: f64,
    pub upsilon: Vec<f64>,
}

pub fn shift_spectrum(values: &[f64], c: &BoundConstants) -> Result<ShiftedSpectrum> {
    let shift = c.upsilon_shift()?;
    Ok(ShiftedSpectrum {
        shift,
        upsilon: values.iter().map(|l| l + shift).collect(),
    })
}

/// `Σ_{i≤k} (λ_{k+1} − λ_i)²` against `coef · Σ_{i≤k} (λ_{k+1} − λ_i)(λ_i + add)`.
fn quadratic_form_sides(values: &[f64], k: usize, coef: f64, add: f64) -> (f64, f64) {
    let top = values[k];
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for &l in &values[..k] {
        let gap = top - l;
        lhs += gap * gap;
        rhs += gap * (l + add);
    }
    (lhs, coef * rhs)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(BoundsError::Scenario("k must be at least 1".into()));
    }
    Ok(())
}

/// Quadratic inequality with the `(n²H₀² + 4C₀ + T₀²)/4δ` shift.
pub fn check_theorem_1_1(
    values: &[f64],
    c: &BoundConstants,
    k: usize,
    slack: Slack,
) -> Result<InequalityReport> {
    check_k(k)?;
    need(values, k + 1)?;
    let n = c.n as f64;
    let coef = 4.0 * c.delta / (n * c.eps);
    let (lhs, rhs) = quadratic_form_sides(values, k, coef, c.upsilon_shift()?);
    Ok(InequalityReport::new(
        "theorem_1_1",
        k,
        lhs,
        rhs,
        slack,
        inputs_digest(values, c),
    ))
}

/// Sum form `Σ_{i=1}^n (λ_{i+1} − λ₁) <= (4δ/ε)(λ₁ + shift)` and ratio form
/// `(υ₂ + … + υ_{n+1})/υ₁ <= n + 4δ/ε`.
pub fn check_theorem_1_2(
    values: &[f64],
    c: &BoundConstants,
    slack: Slack,
) -> Result<(InequalityReport, InequalityReport)> {
    let n = c.n;
    need(values, n + 1)?;
    let shift = c.upsilon_shift()?;
    let digest = inputs_digest(values, c);
    let l1 = values[0];
    let lhs: f64 = values[1..=n].iter().map(|l| l - l1).sum();
    let rhs = 4.0 * c.ellipticity() * (l1 + shift);
    let sum = InequalityReport::new("theorem_1_2", n, lhs, rhs, slack, digest.clone());
    let u1 = l1 + shift;
    if !(u1 > 0.0) {
        return Err(BoundsError::Skipped(format!(
            "ratio form needs υ₁ > 0, got {u1}"
        )));
    }
    let ratio_lhs = values[1..=n].iter().map(|l| l + shift).sum::<f64>() / u1;
    let ratio = InequalityReport::new(
        "theorem_1_2_ratio",
        n,
        ratio_lhs,
        n as f64 + 4.0 * c.ellipticity(),
        slack,
        digest,
    );
    Ok((sum, ratio))
}

/// `(1 + 4δ/nε) k^{2δ/nε} υ₁`
pub fn recursion_bound(c: &BoundConstants, upsilon1: f64, k: usize) -> f64 {
    let r = c.delta / (c.n as f64 * c.eps);
    (1.0 + 4.0 * r) * (k as f64).powf(2.0 * r) * upsilon1
}

fn positive_upsilon(shifted: &ShiftedSpectrum) -> Result<()> {
    match shifted.upsilon.first() {
        Some(&u) if u > 0.0 => Ok(()),
        Some(&u) => Err(BoundsError::Skipped(format!(
            "corollaries need υ₁ > 0, got {u}"
        ))),
        None => Err(BoundsError::Range {
            needed: 1,
            available: 0,
        }),
    }
}

pub fn check_recursion(
    values: &[f64],
    c: &BoundConstants,
    k: usize,
    slack: Slack,
) -> Result<InequalityReport> {
    check_k(k)?;
    need(values, k + 1)?;
    let shifted = shift_spectrum(values, c)?;
    positive_upsilon(&shifted)?;
    let rhs = recursion_bound(c, shifted.upsilon[0], k);
    Ok(InequalityReport::new(
        "recursion",
        k,
        shifted.upsilon[k],
        rhs,
        slack,
        inputs_digest(values, c),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YangBounds {
    /// Bound on `υ_{k+1}`.
    pub upper_k1: f64,
    /// Bound on `υ_{k+1} − υ_k`.
    pub gap_k: f64,
    /// Second Yang-type bound on `υ_{k+1}`.
    pub second_yang: f64,
    /// The square-root bracket came out negative and was clamped to zero.
    pub clamped: bool,
}

/// The three bounds derived from the shifted quadratic inequality, using
/// `υ₁..υ_k`.
pub fn yang_type_bounds(
    shifted: &ShiftedSpectrum,
    c: &BoundConstants,
    k: usize,
) -> Result<YangBounds> {
    check_k(k)?;
    need(&shifted.upsilon, k)?;
    positive_upsilon(shifted)?;
    let u = &shifted.upsilon[..k];
    let kf = k as f64;
    let r = c.delta / (c.n as f64 * c.eps);
    let sum: f64 = u.iter().sum();
    let mean = sum / kf;
    let variance_sum: f64 = u.iter().map(|x| (x - mean).powi(2)).sum();
    let second_yang = (1.0 + 4.0 * r) * sum / kf;
    let bracket = (2.0 * r * sum / kf).powi(2) - (1.0 + 4.0 * r) * variance_sum / kf;
    let clamped = bracket < 0.0;
    let root = bracket.max(0.0).sqrt();
    Ok(YangBounds {
        upper_k1: second_yang + root,
        gap_k: 2.0 * root,
        second_yang,
        clamped,
    })
}

/// Compares `υ_{k+1}` and `υ_{k+1} − υ_k` with [`yang_type_bounds`]; returns
/// the upper, gap and second-Yang reports in that order.
pub fn check_yang_type(
    values: &[f64],
    c: &BoundConstants,
    k: usize,
    slack: Slack,
) -> Result<[InequalityReport; 3]> {
    check_k(k)?;
    need(values, k + 1)?;
    let shifted = shift_spectrum(values, c)?;
    let b = yang_type_bounds(&shifted, c, k)?;
    let digest = inputs_digest(values, c);
    let u = &shifted.upsilon;
    let note = b
        .clamped
        .then(|| "negative bracket clamped to zero".to_string());
    Ok([
        InequalityReport::new("yang_upper", k, u[k], b.upper_k1, slack, digest.clone())
            .with_note(note.clone()),
        InequalityReport::new(
            "yang_gap",
            k,
            u[k] - u[k - 1],
            b.gap_k,
            slack,
            digest.clone(),
        )
        .with_note(note),
        InequalityReport::new("yang_second", k, u[k], b.second_yang, slack, digest),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{disk_spectrum, interval_spectrum, rectangle_spectrum};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn shift_examples() {
        let c = BoundConstants::exact(2, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        let s = shift_spectrum(&[5.7832], &c).unwrap();
        assert!((s.upsilon[0] - 6.7832).abs() < 1e-12);
        let flat = BoundConstants::laplacian(2);
        assert_eq!(
            shift_spectrum(&[5.7832, 14.682], &flat).unwrap().upsilon,
            vec![5.7832, 14.682]
        );
        let intrinsic = BoundConstants { h0: None, ..flat };
        assert!(matches!(
            shift_spectrum(&[1.0], &intrinsic),
            Err(BoundsError::MissingConstant("H0"))
        ));
    }

    #[test]
    fn theorem_1_1_examples() {
        let c = BoundConstants::laplacian(2);
        let disk = disk_spectrum(3).unwrap().values;
        let r = check_theorem_1_1(&disk, &c, 1, Slack::default()).unwrap();
        assert!(rel(r.lhs, 79.188) < 1e-3 && rel(r.rhs, 102.93) < 1e-3 && r.passed);

        let sq = rectangle_spectrum(1.0, 1.0, 4).unwrap().values;
        let r = check_theorem_1_1(&sq, &c, 3, Slack::default()).unwrap();
        let p4 = PI.powi(4);
        assert!(rel(r.lhs, 54.0 * p4) < 1e-12 && rel(r.rhs, 84.0 * p4) < 1e-12 && r.passed);

        let flat = [3.0; 4];
        let r = check_theorem_1_1(&flat, &c, 3, Slack::default()).unwrap();
        assert_eq!((r.lhs, r.rhs, r.passed), (0.0, 0.0, true));
        assert!(matches!(
            check_theorem_1_1(&flat, &c, 4, Slack::default()),
            Err(BoundsError::Range { .. })
        ));
    }

    #[test]
    fn theorem_1_2_examples() {
        let c = BoundConstants::laplacian(2);
        let disk = disk_spectrum(3).unwrap().values;
        let (sum, ratio) = check_theorem_1_2(&disk, &c, Slack::default()).unwrap();
        assert!(sum.passed && ratio.passed);
        assert!(rel(ratio.lhs, 5.0775) < 1e-3 && ratio.rhs == 6.0);
        let sq = rectangle_spectrum(1.0, 1.0, 3).unwrap().values;
        let (_, ratio) = check_theorem_1_2(&sq, &c, Slack::default()).unwrap();
        assert!(rel(ratio.lhs, 5.0) < 1e-14);
        let (sum, _) = check_theorem_1_2(&[2.0; 3], &c, Slack::default()).unwrap();
        assert_eq!(sum.lhs, 0.0);
    }

    #[test]
    fn recursion_and_yang_examples() {
        let c2 = BoundConstants::laplacian(2);
        assert!((recursion_bound(&c2, 1.0, 1) - 3.0).abs() < 1e-15);
        assert!((recursion_bound(&c2, 1.0, 4) - 12.0).abs() < 1e-13);
        let c1 = BoundConstants::laplacian(1);
        assert!((recursion_bound(&c1, 1.0, 2) - 20.0).abs() < 1e-13);

        let disk = disk_spectrum(5).unwrap().values;
        let r = check_recursion(&disk, &c2, 4, Slack::default()).unwrap();
        assert!(r.passed && rel(r.lhs, 26.3746) < 1e-5);

        let s = ShiftedSpectrum {
            shift: 0.0,
            upsilon: vec![2.5],
        };
        let b = yang_type_bounds(&s, &c2, 1).unwrap();
        assert_eq!(
            (b.upper_k1, b.gap_k, b.second_yang, b.clamped),
            (10.0, 5.0, 7.5, false)
        );

        let line = interval_spectrum(1.0, 3).unwrap().values;
        let [upper, gap, second] = check_yang_type(&line, &c1, 2, Slack::default()).unwrap();
        assert!(rel(second.rhs, 12.5 * PI * PI) < 1e-14);
        assert!(upper.passed && gap.passed && second.passed);
    }

    #[test]
    fn oracle_spectra_satisfy_every_inequality() {
        let spectra = [
            (1, interval_spectrum(1.0, 21).unwrap().values),
            (2, rectangle_spectrum(1.0, 1.0, 21).unwrap().values),
            (2, rectangle_spectrum(2.0, 1.0, 21).unwrap().values),
            (2, disk_spectrum(21).unwrap().values),
        ];
        for (n, values) in spectra {
            let c = BoundConstants::laplacian(n);
            for k in 1..=20 {
                let r = check_theorem_1_1(&values, &c, k, Slack::default()).unwrap();
                assert!(r.passed && r.margin > 0.0, "n={n} k={k}: {r:?}");
                assert!(
                    check_recursion(&values, &c, k, Slack::default())
                        .unwrap()
                        .margin
                        > 0.0
                );
                for r in check_yang_type(&values, &c, k, Slack::default()).unwrap() {
                    assert!(r.passed && r.margin >= 0.0, "{r:?}");
                }
            }
            let (sum, ratio) = check_theorem_1_2(&values, &c, Slack::default()).unwrap();
            assert!(sum.margin > 0.0 && ratio.margin > 0.0);
        }
    }

    #[test]
    fn divergence_free_rhs_matches_drifted_form() {
        // constant T: T₀ = 0, so the shift is (n²H₀² + 4C₀)/4δ
        let c = BoundConstants::exact(2, 0.5, 2.0, 0.3, 0.7, 0.0, 1.0);
        let values = [3.0, 7.0, 8.0, 12.0];
        let r = check_theorem_1_1(&values, &c, 3, Slack::default()).unwrap();
        let coef = 4.0 * 2.0 / (2.0 * 0.5);
        let shift = (4.0 * 0.09 + 4.0 * 0.7) / 8.0;
        let expect: f64 = values[..3]
            .iter()
            .map(|l| (12.0 - l) * (l + shift))
            .sum::<f64>()
            * coef;
        assert!((r.rhs - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn slack_is_monotone() {
        let pairs = [
            (1.0, 1.0 - 1e-10),
            (1.0, 0.5),
            (0.0, -1e-13),
            (-1.0, -1.0 - 1e-10),
            (2.0, 3.0),
        ];
        for (lhs, rhs) in pairs {
            let mut prev = false;
            for rel in [0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1.0] {
                let now = Slack { rel, abs: 0.0 }.admits(lhs, rhs);
                assert!(now || !prev);
                prev = now;
            }
        }
    }

    #[test]
    fn trusted_range() {
        assert_eq!(trusted_k_max(100, 50), 9);
        assert_eq!(trusted_k_max(2000, 200), 99);
        assert_eq!(trusted_k_max(2000, 30), 29);
    }
}
