//! JSON reports, eigenvalue CSV and matrix dumps.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use super::run::{CheckOutcome, LevelReport, RunReport};
use super::RunError;
use crate::assembly::SpectralProblem;
use crate::bounds::BoundConstants;
use crate::mesh::SimplicialMesh;

/// Pretty JSON whose floats carry 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    v.serialize(&mut ser)
        .expect("serializing a Value cannot fail");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn constants_json(c: &BoundConstants) -> Value {
    let locations: Map<String, Value> = c
        .locations
        .iter()
        .map(|(k, p)| (k.clone(), nums(p)))
        .collect();
    json!({
        "n": c.n,
        "eps": num(c.eps),
        "delta": num(c.delta),
        "H0": c.h0.map_or(Value::Null, num),
        "C0": num(c.c0),
        "T0": num(c.t0),
        "eta0": num(c.eta0),
        "sample_count": c.sample_count,
        "locations": locations,
        "overridden": c.overridden,
    })
}

pub fn check_json(c: &CheckOutcome) -> Value {
    match c {
        CheckOutcome::Evaluated(r) => json!({
            "name": r.name,
            "k": r.k,
            "status": if r.passed { "pass" } else { "fail" },
            "passed": r.passed,
            "lhs": num(r.lhs),
            "rhs": num(r.rhs),
            "margin": num(r.margin),
            "relative_margin": num(r.relative_margin),
            "inputs_digest": r.inputs_digest,
            "note": r.note,
        }),
        CheckOutcome::Skipped { name, k, reason } => json!({
            "name": name,
            "k": k,
            "status": "skipped",
            "reason": reason,
        }),
        CheckOutcome::Failed { name, k, reason } => json!({
            "name": name,
            "k": k,
            "status": "fail",
            "passed": false,
            "reason": reason,
        }),
        CheckOutcome::Continuum {
            name,
            k,
            margins,
            passed,
        } => json!({
            "name": name,
            "k": k,
            "status": if *passed { "pass" } else { "fail" },
            "passed": passed,
            "margins": nums(margins),
        }),
    }
}

fn level_json(l: &LevelReport) -> Value {
    let errors = l.reference.as_ref().map(|r| {
        nums(
            &l.eigenvalues
                .iter()
                .zip(r)
                .map(|(v, e)| (v - e) / e)
                .collect::<Vec<_>>(),
        )
    });
    json!({
        "refinement": l.refinement,
        "mesh": {
            "h_max": num(l.h_max),
            "vertices": l.vertices,
            "cells": l.cells,
            "n_dof": l.n_dof,
        },
        "method": l.method,
        "eigenvalues": nums(&l.eigenvalues),
        "upsilon": l.upsilon.as_deref().map_or(Value::Null, nums),
        "residuals": nums(&l.residuals),
        "residual_max": num(l.residual_max),
        "reference": l.reference.as_deref().map_or(Value::Null, nums),
        "relative_errors": errors,
        "constants": constants_json(&l.constants),
        "checks": l.checks.iter().map(check_json).collect::<Vec<_>>(),
        "timing_ms": {
            "mesh": num(l.timing.mesh_ms),
            "assemble": num(l.timing.assemble_ms),
            "solve": num(l.timing.solve_ms),
            "constants": num(l.timing.constants_ms),
            "checks": num(l.timing.checks_ms),
        },
    })
}

pub fn report_json(r: &RunReport) -> Value {
    let s = &r.scenario;
    let mut out = json!({
        "scenario": {
            "name": s.name,
            "domain": s.domain.kind_name(),
            "dimension": s.domain.dim(),
            "resolution": s.resolution,
            "chart": s.chart_name,
            "refinements": s.refinements,
            "strict_continuum": r.strict_continuum,
            "slack": { "rel": num(s.slack.rel), "abs": num(s.slack.abs) },
            "eigen": {
                "count": s.eigen.count,
                "method": s.eigen.method.name(),
                "tol": num(s.eigen.tol),
                "shift": num(s.eigen.shift),
                "seed": s.eigen.seed,
            },
            "text": s.text,
        },
        "levels": r.levels.iter().map(level_json).collect::<Vec<_>>(),
        "constants": r.finest().map_or(Value::Null, |l| constants_json(&l.constants)),
        "checks": r.checks.iter().map(check_json).collect::<Vec<_>>(),
        "verdict": r.verdict.name(),
        "lambda1_order": r.lambda1_order.map_or(Value::Null, num),
        "timing_ms": {
            "total": num(r.total_ms),
            "levels": r.levels.iter().map(|l| {
                let t = &l.timing;
                num(t.mesh_ms + t.assemble_ms + t.solve_ms + t.constants_ms + t.checks_ms)
            }).collect::<Vec<_>>(),
        },
        "versions": { "divform": env!("CARGO_PKG_VERSION") },
    });
    if let Some(e) = &r.error {
        out["error"] = json!(e);
    }
    out
}

/// `refinement,index,lambda,upsilon,residual`, one row per eigenpair.
pub fn eigen_csv(r: &RunReport) -> String {
    let mut s = String::from("refinement,index,lambda,upsilon,residual\n");
    for l in &r.levels {
        for (i, lam) in l.eigenvalues.iter().enumerate() {
            let ups = l
                .upsilon
                .as_ref()
                .map(|u| format!("{:.16e}", u[i]))
                .unwrap_or_default();
            writeln!(
                s,
                "{},{},{:.16e},{},{:.16e}",
                l.refinement,
                i + 1,
                lam,
                ups,
                l.residuals[i]
            )
            .unwrap();
        }
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| RunError::io(path, e))
}

/// `K_<level>.txt`, `M_<level>.txt` (upper triangles) and `mesh_<level>.txt`.
pub fn write_matrices(
    dir: &Path,
    level: usize,
    problem: &SpectralProblem,
    mesh: &SimplicialMesh,
) -> Result<(), RunError> {
    write_file(&dir.join(format!("K_{level}.txt")), &problem.k.dump_upper())?;
    write_file(&dir.join(format!("M_{level}.txt")), &problem.m.dump_upper())?;
    write_file(&dir.join(format!("mesh_{level}.txt")), &mesh.dump())
}
