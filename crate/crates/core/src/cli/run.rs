//! Refinement loop: mesh, assemble, solve, estimate constants, check.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use super::scenario::{CheckRequest, Scenario};
use super::RunError;
use crate::assembly::{assemble, SpectralProblem};
use crate::bounds::{
    check_recursion, check_theorem3, check_theorem3_lambda1, check_theorem_1_1, check_theorem_1_2,
    check_yang_type, estimate_constants, lemma1_check, shift_spectrum, trusted_k_max,
    verify_theorem3_hypothesis, BoundConstants, BoundsError, InequalityReport, Slack,
    Theorem3Scenario,
};
use crate::eigensolve::{solve_pencil, SolveOptions, Spectrum};
use crate::geometry::ScalarField;
use crate::mesh::{generate, refine, DomainSpec, SimplicialMesh};
use crate::oracle::{convergence_order, disk_spectrum, interval_spectrum, rectangle_spectrum};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub refinements: Option<usize>,
    pub strict_continuum: bool,
    pub slack: Option<f64>,
    pub emit_matrices: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Evaluated(InequalityReport),
    Skipped {
        name: String,
        k: Option<usize>,
        reason: String,
    },
    /// A declared hypothesis does not hold on the mesh.
    Failed {
        name: String,
        k: Option<usize>,
        reason: String,
    },
    /// Margins of one check over the last three levels.
    Continuum {
        name: String,
        k: usize,
        margins: Vec<f64>,
        passed: bool,
    },
}

impl CheckOutcome {
    /// `None` for skipped checks.
    pub fn passed(&self) -> Option<bool> {
        match self {
            CheckOutcome::Evaluated(r) => Some(r.passed),
            CheckOutcome::Skipped { .. } => None,
            CheckOutcome::Failed { .. } => Some(false),
            CheckOutcome::Continuum { passed, .. } => Some(*passed),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            CheckOutcome::Evaluated(r) => &r.name,
            CheckOutcome::Skipped { name, .. }
            | CheckOutcome::Failed { name, .. }
            | CheckOutcome::Continuum { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelTiming {
    pub mesh_ms: f64,
    pub assemble_ms: f64,
    pub solve_ms: f64,
    pub constants_ms: f64,
    pub checks_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub refinement: usize,
    pub h_max: f64,
    pub vertices: usize,
    pub cells: usize,
    pub n_dof: usize,
    pub method: &'static str,
    pub eigenvalues: Vec<f64>,
    pub upsilon: Option<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub residual_max: f64,
    /// Closed-form eigenvalues when the scenario is a flat Laplacian on an
    /// interval, rectangle or disk.
    pub reference: Option<Vec<f64>>,
    pub constants: BoundConstants,
    pub checks: Vec<CheckOutcome>,
    pub timing: LevelTiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Error => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Error => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: Scenario,
    pub strict_continuum: bool,
    pub levels: Vec<LevelReport>,
    /// Outcomes at the finest level, followed by continuum outcomes.
    pub checks: Vec<CheckOutcome>,
    pub verdict: Verdict,
    /// Set when a solver or assembly failure cut the run short.
    pub error: Option<String>,
    /// Least-squares order of the relative `λ₁` error against `h`.
    pub lambda1_order: Option<f64>,
    pub total_ms: f64,
}

impl RunReport {
    pub fn finest(&self) -> Option<&LevelReport> {
        self.levels.last()
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn reference_values(s: &Scenario, count: usize) -> Option<Vec<f64>> {
    if !(s.chart.is_flat_identity() && s.tensor.is_identity() && s.drift.is_zero()) {
        return None;
    }
    let r = match s.domain {
        DomainSpec::Interval { a, b } => interval_spectrum(b - a, count).ok()?.values,
        DomainSpec::Rectangle { x0, x1, y0, y1 } => {
            rectangle_spectrum(x1 - x0, y1 - y0, count).ok()?.values
        }
        DomainSpec::Disk { radius } => disk_spectrum(count)
            .ok()?
            .values
            .into_iter()
            .map(|v| v / (radius * radius))
            .collect(),
        _ => return None,
    };
    Some(r)
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut s = scenario.clone();
    if let Some(r) = opts.refinements {
        s.refinements = r;
    }
    if let Some(rel) = opts.slack {
        s.slack.rel = rel;
    }
    if opts.strict_continuum {
        s.refinements = s.refinements.max(3);
    }
    let opts = &RunOptions {
        emit_matrices: opts.emit_matrices.clone().or(s.output.matrices.clone()),
        ..opts.clone()
    };
    if let Some(dir) = &opts.emit_matrices {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }

    let mut levels = Vec::new();
    let mut error = None;
    let mut mesh: Option<SimplicialMesh> = None;
    for level in 0..s.refinements {
        let t = Instant::now();
        let m = match mesh.take() {
            None => match generate(&s.domain, s.resolution) {
                Ok(m) => m,
                Err(e) => {
                    error = Some(format!("mesh: {e}"));
                    break;
                }
            },
            Some(prev) => refine(&prev),
        };
        let mesh_ms = ms(t);
        match run_level(&s, &m, level, opts) {
            Ok(mut rep) => {
                rep.timing.mesh_ms = mesh_ms;
                levels.push(rep);
            }
            Err(LevelError::Runtime(msg)) => {
                error = Some(format!("refinement {level}: {msg}"));
                break;
            }
            Err(LevelError::Io(e)) => return Err(e),
        }
        mesh = Some(m);
    }

    let mut checks = levels.last().map(|l| l.checks.clone()).unwrap_or_default();
    if opts.strict_continuum && error.is_none() {
        checks.extend(continuum(&levels));
    }
    let verdict = if error.is_some() {
        Verdict::Error
    } else if checks.iter().all(|c| c.passed() != Some(false)) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let lambda1_order = lambda1_order(&levels);
    Ok(RunReport {
        scenario: s,
        strict_continuum: opts.strict_continuum,
        levels,
        checks,
        verdict,
        error,
        lambda1_order,
        total_ms: ms(start),
    })
}

fn lambda1_order(levels: &[LevelReport]) -> Option<f64> {
    let samples: Vec<(f64, f64)> = levels
        .iter()
        .map(|l| {
            let r = l.reference.as_ref()?.first()?;
            Some((l.h_max, (l.eigenvalues.first()? - r).abs() / r))
        })
        .collect::<Option<_>>()?;
    convergence_order(&samples).ok()
}

/// Pairs each evaluated check of the finest level with the same check on the
/// two coarser levels.
fn continuum(levels: &[LevelReport]) -> Vec<CheckOutcome> {
    let Some(last3) = levels.get(levels.len().saturating_sub(3)..) else {
        return Vec::new();
    };
    if last3.len() < 3 {
        return Vec::new();
    }
    let find = |l: &LevelReport, name: &str, k: usize| {
        l.checks.iter().find_map(|c| match c {
            CheckOutcome::Evaluated(r) if r.name == name && r.k == k => Some(r.margin),
            _ => None,
        })
    };
    let mut out = Vec::new();
    for c in &last3[2].checks {
        let CheckOutcome::Evaluated(r) = c else {
            continue;
        };
        let name = format!("continuum:{}", r.name);
        match (find(&last3[0], &r.name, r.k), find(&last3[1], &r.name, r.k)) {
            (Some(m1), Some(m2)) => {
                let m3 = r.margin;
                let passed = m1 > 0.0 && m2 > 0.0 && m3 > 0.0 && (m3 - m2).abs() <= (m2 - m1).abs();
                out.push(CheckOutcome::Continuum {
                    name,
                    k: r.k,
                    margins: vec![m1, m2, m3],
                    passed,
                });
            }
            _ => out.push(CheckOutcome::Skipped {
                name,
                k: Some(r.k),
                reason: "not evaluated on all of the last three refinements".into(),
            }),
        }
    }
    out
}

enum LevelError {
    Runtime(String),
    Io(RunError),
}

fn run_level(
    s: &Scenario,
    mesh: &SimplicialMesh,
    level: usize,
    opts: &RunOptions,
) -> Result<LevelReport, LevelError> {
    let rt = |what: &str, e: &dyn std::fmt::Display| LevelError::Runtime(format!("{what}: {e}"));
    let mut timing = LevelTiming::default();

    let t = Instant::now();
    let problem = assemble(mesh, &s.chart, &s.tensor, &s.drift).map_err(|e| rt("assembly", &e))?;
    timing.assemble_ms = ms(t);
    if let Some(dir) = &opts.emit_matrices {
        super::report::write_matrices(dir, level, &problem, mesh).map_err(LevelError::Io)?;
    }

    let t = Instant::now();
    let n_dof = problem.n_dof();
    let count = s.eigen.count.min(n_dof);
    let spectrum = solve_pencil(
        &problem.k,
        &problem.m,
        count,
        &SolveOptions {
            method: s.eigen.method,
            tol: s.eigen.tol,
            shift: s.eigen.shift,
            seed: s.eigen.seed,
        },
    )
    .map_err(|e| rt("eigensolve", &e))?;
    timing.solve_ms = ms(t);

    let t = Instant::now();
    let constants = estimate_constants(&s.chart, &s.tensor, &s.drift, mesh, &s.overrides)
        .map_err(|e| rt("constants", &e))?;
    timing.constants_ms = ms(t);
    let upsilon = shift_spectrum(&spectrum.values, &constants)
        .ok()
        .map(|u| u.upsilon);

    let t = Instant::now();
    let ctx = Level {
        s,
        mesh,
        problem: &problem,
        spectrum: &spectrum,
        constants: &constants,
        slack: s.slack,
        k_max: trusted_k_max(n_dof, spectrum.values.len()),
    };
    let mut checks = Vec::new();
    for req in &s.checks {
        ctx.evaluate(req, &mut checks)
            .map_err(|e| rt(&format!("check {}", req.kind()), &e))?;
    }
    timing.checks_ms = ms(t);

    Ok(LevelReport {
        refinement: level,
        h_max: mesh.h_max,
        vertices: mesh.vertices.len(),
        cells: mesh.cells.len(),
        n_dof,
        method: spectrum.method.name(),
        residual_max: spectrum.residuals.iter().cloned().fold(0.0, f64::max),
        reference: reference_values(s, count),
        eigenvalues: spectrum.values.clone(),
        residuals: spectrum.residuals.clone(),
        upsilon,
        constants,
        checks,
        timing,
    })
}

struct Level<'a> {
    s: &'a Scenario,
    mesh: &'a SimplicialMesh,
    problem: &'a SpectralProblem,
    spectrum: &'a Spectrum,
    constants: &'a BoundConstants,
    slack: Slack,
    k_max: usize,
}

impl Level<'_> {
    fn ks(&self, ks: &Option<Vec<usize>>) -> Vec<usize> {
        match ks {
            Some(k) => k.clone(),
            None => (1..=self.k_max).collect(),
        }
    }

    /// Appends outcomes; only errors that are not a verdict on the check
    /// itself are returned.
    fn evaluate(&self, req: &CheckRequest, out: &mut Vec<CheckOutcome>) -> Result<(), BoundsError> {
        let values = &self.spectrum.values;
        let c = self.constants;
        let slack = self.slack;
        match req {
            CheckRequest::Theorem11 { ks } => {
                for k in self.ks(ks) {
                    self.record("theorem_1_1", k, out, || {
                        check_theorem_1_1(values, c, k, slack).map(|r| vec![r])
                    })?;
                }
            }
            CheckRequest::Theorem12 => {
                self.record("theorem_1_2", c.n, out, || {
                    check_theorem_1_2(values, c, slack).map(|(a, b)| vec![a, b])
                })?;
            }
            CheckRequest::Recursion { ks } => {
                for k in self.ks(ks) {
                    self.record("recursion", k, out, || {
                        check_recursion(values, c, k, slack).map(|r| vec![r])
                    })?;
                }
            }
            CheckRequest::YangType { ks } => {
                for k in self.ks(ks) {
                    self.record("yang_type", k, out, || {
                        check_yang_type(values, c, k, slack).map(Vec::from)
                    })?;
                }
            }
            CheckRequest::Theorem3 { scenario, ks } => {
                let s = self.s;
                match verify_theorem3_hypothesis(scenario, &s.chart, &s.tensor, &s.drift, self.mesh)
                {
                    Ok(()) => {}
                    Err(e @ BoundsError::Hypothesis { .. }) => {
                        out.push(CheckOutcome::Failed {
                            name: scenario.name(),
                            k: None,
                            reason: e.to_string(),
                        });
                        return Ok(());
                    }
                    Err(e) => return Err(e),
                }
                if let Theorem3Scenario::ConstantOperator { b0, .. } = scenario {
                    self.record("theorem3_ii_lambda1", 1, out, || {
                        check_theorem3_lambda1(values, c, *b0, slack).map(|r| vec![r])
                    })?;
                }
                for k in self.ks(ks) {
                    self.record(&scenario.name(), k, out, || {
                        check_theorem3(values, c, scenario, k, slack).map(|r| vec![r])
                    })?;
                }
            }
            CheckRequest::Lemma1 { f, ks, policy } => {
                let s = self.s;
                let field = ScalarField::new(f.clone(), s.domain.dim(), 2);
                for &k in ks {
                    self.record("lemma1", k, out, || {
                        lemma1_check(
                            self.problem,
                            self.spectrum,
                            self.mesh,
                            &s.chart,
                            &s.tensor,
                            &s.drift,
                            &field,
                            k,
                            *policy,
                            slack,
                        )
                        .map(|r| vec![r])
                    })?;
                }
            }
        }
        Ok(())
    }

    fn record(
        &self,
        name: &str,
        k: usize,
        out: &mut Vec<CheckOutcome>,
        f: impl FnOnce() -> Result<Vec<InequalityReport>, BoundsError>,
    ) -> Result<(), BoundsError> {
        let skip = |reason: String| CheckOutcome::Skipped {
            name: name.to_string(),
            k: Some(k),
            reason,
        };
        if k > self.k_max && name != "theorem3_ii_lambda1" {
            out.push(skip(format!(
                "k = {k} lies outside the trusted range k <= {} for {} degrees of freedom",
                self.k_max,
                self.problem.n_dof()
            )));
            return Ok(());
        }
        match f() {
            Ok(reports) => out.extend(reports.into_iter().map(CheckOutcome::Evaluated)),
            Err(BoundsError::Skipped(reason)) => out.push(skip(reason)),
            Err(e @ (BoundsError::Range { .. } | BoundsError::MissingConstant(_))) => {
                out.push(skip(e.to_string()))
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }
}
