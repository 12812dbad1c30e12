//! Scenario documents: TOML key-value trees validated into [`Scenario`].

use std::collections::BTreeSet;
use std::path::PathBuf;

use toml::{Table, Value};

use super::ConfigError;
use crate::bounds::{EigenspacePolicy, Overrides, Slack, Theorem3Scenario};
use crate::eigensolve::{Method, DEFAULT_SEED, DEFAULT_TOLERANCE};
use crate::expressions::{parse, Expr};
use crate::geometry::{Chart, DriftField, TensorFieldT};
use crate::mesh::DomainSpec;

pub const DEFAULT_RESOLUTION: usize = 8;

#[derive(Debug, Clone)]
pub struct EigenSettings {
    pub count: usize,
    pub method: Method,
    pub tol: f64,
    pub shift: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum CheckRequest {
    Theorem11 {
        ks: Option<Vec<usize>>,
    },
    Theorem12,
    Recursion {
        ks: Option<Vec<usize>>,
    },
    YangType {
        ks: Option<Vec<usize>>,
    },
    Theorem3 {
        scenario: Theorem3Scenario,
        ks: Option<Vec<usize>>,
    },
    Lemma1 {
        f: Expr,
        ks: Vec<usize>,
        policy: EigenspacePolicy,
    },
}

impl CheckRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckRequest::Theorem11 { .. } => "theorem_1_1",
            CheckRequest::Theorem12 => "theorem_1_2",
            CheckRequest::Recursion { .. } => "recursion",
            CheckRequest::YangType { .. } => "yang_type",
            CheckRequest::Theorem3 { .. } => "theorem3",
            CheckRequest::Lemma1 { .. } => "lemma1",
        }
    }

    fn needs_h0(&self) -> bool {
        !matches!(
            self,
            CheckRequest::Theorem3 { .. } | CheckRequest::Lemma1 { .. }
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub matrices: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainSpec,
    pub resolution: usize,
    pub chart_name: String,
    pub chart: Chart,
    pub tensor: TensorFieldT,
    pub drift: DriftField,
    pub eigen: EigenSettings,
    pub refinements: usize,
    pub checks: Vec<CheckRequest>,
    pub overrides: Overrides,
    pub slack: Slack,
    pub output: OutputPaths,
    /// The document the scenario was parsed from.
    pub text: String,
}

fn err(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn join(base: &str, key: &str) -> String {
    if base.is_empty() {
        key.to_string()
    } else {
        format!("{base}.{key}")
    }
}

/// A table being read, which remembers the keys consumed so that leftovers
/// can be reported as unknown.
struct Node<'a> {
    table: &'a Table,
    path: String,
    used: BTreeSet<&'a str>,
}

impl<'a> Node<'a> {
    fn new(table: &'a Table, path: impl Into<String>) -> Self {
        Node {
            table,
            path: path.into(),
            used: BTreeSet::new(),
        }
    }

    fn at(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        let (k, v) = self.table.get_key_value(key)?;
        self.used.insert(k.as_str());
        Some(v)
    }

    fn require(&mut self, key: &str) -> Result<&'a Value, ConfigError> {
        self.get(key).ok_or_else(|| err(&self.at(key), "missing"))
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| as_f64(v, &self.at(key))).transpose()
    }

    fn f64_req(&mut self, key: &str) -> Result<f64, ConfigError> {
        let v = self.require(key)?;
        as_f64(v, &self.at(key))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|v| as_usize(v, &self.at(key)))
            .transpose()
    }

    fn str_opt(&mut self, key: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(err(&self.at(key), "expected a string")),
        }
    }

    fn str_req(&mut self, key: &str) -> Result<&'a str, ConfigError> {
        self.str_opt(key)?
            .ok_or_else(|| err(&self.at(key), "missing"))
    }

    fn expr_opt(&mut self, key: &str, dim: usize) -> Result<Option<Expr>, ConfigError> {
        let path = self.at(key);
        self.get(key).map(|v| as_expr(v, &path, dim)).transpose()
    }

    fn expr_req(&mut self, key: &str, dim: usize) -> Result<Expr, ConfigError> {
        self.expr_opt(key, dim)?
            .ok_or_else(|| err(&self.at(key), "missing"))
    }

    fn expr_list(&mut self, key: &str, dim: usize) -> Result<Vec<Expr>, ConfigError> {
        let path = self.at(key);
        let items = as_array(self.require(key)?, &path)?;
        items
            .iter()
            .enumerate()
            .map(|(i, v)| as_expr(v, &format!("{path}[{i}]"), dim))
            .collect()
    }

    fn expr_grid(&mut self, key: &str, dim: usize) -> Result<Vec<Vec<Expr>>, ConfigError> {
        let path = self.at(key);
        let rows = as_array(self.require(key)?, &path)?;
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                let rp = format!("{path}[{i}]");
                as_array(row, &rp)?
                    .iter()
                    .enumerate()
                    .map(|(j, v)| as_expr(v, &format!("{rp}[{j}]"), dim))
                    .collect()
            })
            .collect()
    }

    fn k_list(&mut self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        let path = self.at(key);
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let ks = as_array(v, &path)?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = format!("{path}[{i}]");
                let k = as_usize(v, &p)?;
                if k == 0 {
                    return Err(err(&p, "indices start at 1"));
                }
                Ok(k)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ks.is_empty() {
            return Err(err(&path, "empty list"));
        }
        Ok(Some(ks))
    }

    fn table(&mut self, key: &str) -> Result<Option<Node<'a>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Node::new(t, self.at(key)))),
            Some(_) => Err(err(&self.at(key), "expected a table")),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.table.keys().find(|k| !self.used.contains(k.as_str())) {
            Some(k) => Err(err(&self.at(k), "unknown key")),
            None => Ok(()),
        }
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64, ConfigError> {
    let x = match v {
        Value::Float(x) => *x,
        Value::Integer(i) => *i as f64,
        _ => return Err(err(path, "expected a number")),
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(err(path, "must be finite"))
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(_) => Err(err(path, "must be non-negative")),
        _ => Err(err(path, "expected an integer")),
    }
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, ConfigError> {
    match v {
        Value::Array(a) => Ok(a),
        _ => Err(err(path, "expected a list")),
    }
}

fn as_expr(v: &Value, path: &str, dim: usize) -> Result<Expr, ConfigError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Float(_) | Value::Integer(_) => as_f64(v, path)?.to_string(),
        _ => return Err(err(path, "expected an expression string")),
    };
    let e = parse(&text).map_err(|e| err(path, e.to_string()))?;
    if e.arity() > dim {
        return Err(err(
            path,
            format!("uses x{} but the domain has dimension {dim}", e.arity()),
        ));
    }
    Ok(e)
}

fn parse_domain(node: &mut Node) -> Result<(DomainSpec, usize), ConfigError> {
    let kind = node.str_req("kind")?;
    let d = match kind {
        "interval" => DomainSpec::Interval {
            a: node.f64_or("a", 0.0)?,
            b: node.f64_or("b", 1.0)?,
        },
        "rectangle" => DomainSpec::Rectangle {
            x0: node.f64_or("x0", 0.0)?,
            x1: node.f64_or("x1", 1.0)?,
            y0: node.f64_or("y0", 0.0)?,
            y1: node.f64_or("y1", 1.0)?,
        },
        "disk" => DomainSpec::Disk {
            radius: node.f64_or("radius", 1.0)?,
        },
        "annulus_sector" => DomainSpec::AnnulusSector {
            r_inner: node.f64_req("r_inner")?,
            r_outer: node.f64_req("r_outer")?,
            theta0: node.f64_req("theta0")?,
            theta1: node.f64_req("theta1")?,
        },
        "spherical_cap" => DomainSpec::SphericalCap {
            angle: node.f64_req("angle")?,
        },
        "hyperbolic_box" => DomainSpec::HyperbolicBox {
            x0: node.f64_req("x0")?,
            x1: node.f64_req("x1")?,
            y0: node.f64_req("y0")?,
            y1: node.f64_req("y1")?,
        },
        "parametric_patch" => DomainSpec::ParametricPatch {
            x0: node.f64_req("x0")?,
            x1: node.f64_req("x1")?,
            y0: node.f64_req("y0")?,
            y1: node.f64_req("y1")?,
        },
        "warped_strip" => DomainSpec::WarpedStrip {
            t0: node.f64_req("t0")?,
            t1: node.f64_req("t1")?,
            s0: node.f64_req("s0")?,
            s1: node.f64_req("s1")?,
        },
        other => return Err(err(&node.at("kind"), format!("unknown domain `{other}`"))),
    };
    let resolution = node.usize_opt("resolution")?.unwrap_or(DEFAULT_RESOLUTION);
    if resolution < 2 {
        return Err(err(&node.at("resolution"), "must be at least 2"));
    }
    d.validate().map_err(|e| err(&node.path, e.to_string()))?;
    Ok((d, resolution))
}

fn default_chart(domain: &DomainSpec) -> &'static str {
    match domain {
        DomainSpec::SphericalCap { .. } => "sphere_stereographic",
        DomainSpec::HyperbolicBox { .. } => "hyperbolic",
        DomainSpec::WarpedStrip { .. } => "warped_strip",
        _ => "identity",
    }
}

fn parse_chart(node: Option<Node>, domain: &DomainSpec) -> Result<(String, Chart), ConfigError> {
    let dim = domain.dim();
    let Some(mut node) = node else {
        let name = default_chart(domain);
        return Ok((name.into(), named_chart(name, dim, "chart.kind")?));
    };
    let kind = node.str_opt("kind")?.unwrap_or(default_chart(domain));
    let kind_path = node.at("kind");
    let chart = match kind {
        "immersion" => {
            let comps = node.expr_list("components", dim)?;
            Chart::immersion(dim, comps).map_err(|e| err(&node.at("components"), e.to_string()))?
        }
        "metric" => {
            let grid = node.expr_grid("components", dim)?;
            if grid.len() != dim || grid.iter().any(|r| r.len() != dim) {
                return Err(err(
                    &node.at("components"),
                    format!("expected a {dim}x{dim} grid"),
                ));
            }
            Chart::intrinsic(grid).map_err(|e| err(&node.at("components"), e.to_string()))?
        }
        "cylinder" => {
            let r = node.f64_or("radius", 1.0)?;
            if !(r > 0.0) {
                return Err(err(&node.at("radius"), "must be positive"));
            }
            if dim != 2 {
                return Err(err(&kind_path, "needs a two-dimensional domain"));
            }
            Chart::cylinder(r)
        }
        other => named_chart(other, dim, &kind_path)?,
    };
    node.finish()?;
    Ok((kind.to_string(), chart))
}

fn named_chart(name: &str, dim: usize, path: &str) -> Result<Chart, ConfigError> {
    let two = |c: Chart| {
        if dim == 2 {
            Ok(c)
        } else {
            Err(err(
                path,
                format!("`{name}` needs a two-dimensional domain"),
            ))
        }
    };
    match name {
        "identity" => Ok(Chart::identity(dim)),
        "hyperbolic" => two(Chart::hyperbolic_half_space(2)),
        "warped_strip" => two(Chart::warped_strip()),
        "sphere_stereographic" => two(Chart::sphere_stereographic()),
        "sphere_angles" => two(Chart::unit_sphere_angles()),
        other => Err(err(path, format!("unknown chart `{other}`"))),
    }
}

fn parse_tensor(root: &mut Node, dim: usize) -> Result<TensorFieldT, ConfigError> {
    let path = root.at("tensor");
    let mut node = match root.get("tensor") {
        None => return Ok(TensorFieldT::identity()),
        Some(Value::String(s)) if s == "identity" => return Ok(TensorFieldT::identity()),
        Some(Value::Table(t)) => Node::new(t, path),
        Some(_) => return Err(err(&path, "expected \"identity\" or a table")),
    };
    let t = match node.str_req("kind")? {
        "identity" => TensorFieldT::identity(),
        "diagonal" => {
            let entries = node.expr_list("entries", dim)?;
            if entries.len() != dim {
                return Err(err(
                    &node.at("entries"),
                    format!("expected {dim} entries, got {}", entries.len()),
                ));
            }
            TensorFieldT::diagonal(entries)
        }
        "full" => {
            let grid = node.expr_grid("components", dim)?;
            if grid.len() != dim || grid.iter().any(|r| r.len() != dim) {
                return Err(err(
                    &node.at("components"),
                    format!("expected a {dim}x{dim} grid"),
                ));
            }
            TensorFieldT::from_components(grid)
                .map_err(|e| err(&node.at("components"), e.to_string()))?
        }
        other => {
            return Err(err(
                &node.at("kind"),
                format!("unknown tensor kind `{other}`"),
            ))
        }
    };
    node.finish()?;
    Ok(t)
}

fn parse_eigen(node: Option<Node>) -> Result<EigenSettings, ConfigError> {
    let mut e = EigenSettings {
        count: 10,
        method: Method::Auto,
        tol: DEFAULT_TOLERANCE,
        shift: 0.0,
        seed: DEFAULT_SEED,
    };
    let Some(mut node) = node else {
        return Ok(e);
    };
    if let Some(c) = node.usize_opt("count")? {
        if c == 0 {
            return Err(err(&node.at("count"), "must be at least 1"));
        }
        e.count = c;
    }
    if let Some(m) = node.str_opt("method")? {
        e.method = match m {
            "dense" => Method::Dense,
            "shift_invert" => Method::ShiftInvert,
            "auto" => Method::Auto,
            other => return Err(err(&node.at("method"), format!("unknown method `{other}`"))),
        };
    }
    e.tol = node.f64_or("tol", e.tol)?;
    if !(e.tol > 0.0) {
        return Err(err(&node.at("tol"), "must be positive"));
    }
    e.shift = node.f64_or("shift", e.shift)?;
    if let Some(s) = node.usize_opt("seed")? {
        e.seed = s as u64;
    }
    node.finish()?;
    Ok(e)
}

fn parse_overrides(node: Option<Node>) -> Result<Overrides, ConfigError> {
    let Some(mut node) = node else {
        return Ok(Overrides::default());
    };
    let o = Overrides {
        eps: node.f64_opt("eps")?,
        delta: node.f64_opt("delta")?,
        h0: node.f64_opt("H0")?,
        c0: node.f64_opt("C0")?,
        t0: node.f64_opt("T0")?,
        eta0: node.f64_opt("eta0")?,
    };
    node.finish()?;
    Ok(o)
}

fn parse_check(node: &mut Node, dim: usize) -> Result<CheckRequest, ConfigError> {
    let c = match node.str_req("kind")? {
        "theorem_1_1" => CheckRequest::Theorem11 {
            ks: node.k_list("k_list")?,
        },
        "theorem_1_2" => CheckRequest::Theorem12,
        "recursion" => CheckRequest::Recursion {
            ks: node.k_list("k_list")?,
        },
        "yang_type" => CheckRequest::YangType {
            ks: node.k_list("k_list")?,
        },
        "theorem3" => {
            let scenario = match node.str_req("variant")? {
                "i" => unit_gradient(node, dim)?,
                "ii" => Theorem3Scenario::ConstantOperator {
                    psi: node.expr_req("psi", dim)?,
                    b0: node.f64_req("B0")?,
                },
                "iii" => Theorem3Scenario::SphereMap {
                    components: node.expr_list("components", dim)?,
                    gamma: node.f64_req("gamma")?,
                },
                other => {
                    return Err(err(
                        &node.at("variant"),
                        format!("unknown variant `{other}`, expected i, ii or iii"),
                    ))
                }
            };
            CheckRequest::Theorem3 {
                scenario,
                ks: node.k_list("k_list")?,
            }
        }
        "lemma1" => CheckRequest::Lemma1 {
            f: node.expr_req("f", dim)?,
            ks: node.k_list("k_list")?.unwrap_or_else(|| vec![1]),
            policy: match node.str_opt("policy")?.unwrap_or("simple") {
                "simple" => EigenspacePolicy::Simple,
                "permissive" => EigenspacePolicy::Permissive,
                other => {
                    return Err(err(
                        &node.at("policy"),
                        format!("unknown policy `{other}`, expected simple or permissive"),
                    ))
                }
            },
        },
        other => return Err(err(&node.at("kind"), format!("unknown check `{other}`"))),
    };
    Ok(c)
}

fn unit_gradient(node: &mut Node, dim: usize) -> Result<Theorem3Scenario, ConfigError> {
    let theta = node.expr_req("theta", dim)?;
    let a0 = node.f64_req("A0")?;
    if a0 < 0.0 {
        return Err(err(&node.at("A0"), "must be non-negative"));
    }
    Ok(Theorem3Scenario::UnitGradient { theta, a0 })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let table: Table = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
            .unwrap_or(1);
        err(&format!("line {line}"), e.message())
    })?;
    let mut root = Node::new(&table, "");

    let name = root.str_opt("name")?.unwrap_or("scenario").to_string();
    let mut dn = root
        .table("domain")?
        .ok_or_else(|| err("domain", "missing"))?;
    let (domain, resolution) = parse_domain(&mut dn)?;
    dn.finish()?;
    let dim = domain.dim();

    let chart_node = root.table("chart")?;
    let (chart_name, chart) = parse_chart(chart_node, &domain)?;
    let tensor = parse_tensor(&mut root, dim)?;
    let drift = match root.expr_opt("drift", dim)? {
        Some(e) => DriftField::new(e, dim),
        None => DriftField::zero(dim),
    };
    let eigen = parse_eigen(root.table("eigen")?)?;
    let refinements = root.usize_opt("refinements")?.unwrap_or(1);
    if refinements == 0 {
        return Err(err("refinements", "must be at least 1"));
    }
    let overrides = parse_overrides(root.table("overrides")?)?;
    let mut slack = Slack::default();
    if let Some(rel) = root.f64_opt("slack")? {
        if rel < 0.0 {
            return Err(err("slack", "must be non-negative"));
        }
        slack.rel = rel;
    }

    let mut checks = Vec::new();
    if let Some(v) = root.get("checks") {
        for (i, item) in as_array(v, "checks")?.iter().enumerate() {
            let path = format!("checks[{i}]");
            let Value::Table(t) = item else {
                return Err(err(&path, "expected a table"));
            };
            let mut node = Node::new(t, path);
            checks.push(parse_check(&mut node, dim)?);
            node.finish()?;
        }
    }
    for (i, c) in checks.iter().enumerate() {
        let (top, key) = match c {
            CheckRequest::Theorem12 => (dim + 1, ""),
            CheckRequest::Theorem11 { ks }
            | CheckRequest::Recursion { ks }
            | CheckRequest::YangType { ks }
            | CheckRequest::Theorem3 { ks, .. } => (
                ks.as_ref().map_or(0, |k| k.iter().max().unwrap() + 1),
                ".k_list",
            ),
            CheckRequest::Lemma1 { ks, .. } => (ks.iter().max().unwrap() + 1, ".k_list"),
        };
        if top > eigen.count {
            return Err(err(
                &format!("checks[{i}]{key}"),
                format!("needs {top} eigenvalues but eigen.count is {}", eigen.count),
            ));
        }
    }
    if chart.kind() == crate::geometry::ChartKind::Intrinsic && overrides.h0.is_none() {
        if let Some(i) = checks.iter().position(CheckRequest::needs_h0) {
            return Err(err(
                &format!("checks[{i}]"),
                format!(
                    "`{}` needs H0, which an intrinsic chart cannot supply; set overrides.H0",
                    checks[i].kind()
                ),
            ));
        }
    }

    let mut output = OutputPaths::default();
    if let Some(mut on) = root.table("output")? {
        output.report = on.str_opt("report")?.map(PathBuf::from);
        output.csv = on.str_opt("csv")?.map(PathBuf::from);
        output.matrices = on.str_opt("matrices")?.map(PathBuf::from);
        on.finish()?;
    }
    root.finish()?;

    Ok(Scenario {
        name,
        domain,
        resolution,
        chart_name,
        chart,
        tensor,
        drift,
        eigen,
        refinements,
        checks,
        overrides,
        slack,
        output,
        text: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_interval() {
        let s = parse_scenario("[domain]\nkind = \"interval\"\n\n[eigen]\ncount = 5\n").unwrap();
        assert_eq!(s.domain, DomainSpec::unit_interval());
        assert_eq!(s.eigen.count, 5);
        assert!(s.tensor.is_identity() && s.drift.is_zero() && s.checks.is_empty());
        assert_eq!((s.refinements, s.chart_name.as_str()), (1, "identity"));
    }

    #[test]
    fn drifted_disk() {
        let s = parse_scenario(
            r#"
drift = "x1^2/2 + x2^2/2"
domain.kind = "disk"

[[checks]]
kind = "theorem_1_1"
k_list = [1, 2, 5]
"#,
        )
        .unwrap();
        assert!(!s.drift.is_zero());
        assert!(matches!(
            &s.checks[0],
            CheckRequest::Theorem11 { ks: Some(k) } if k == &vec![1, 2, 5]
        ));
    }

    #[test]
    fn errors_carry_key_paths() {
        let base = "domain.kind = \"hyperbolic_box\"\ndomain.x0 = 0\ndomain.x1 = 1\ndomain.y0 = 1\ndomain.y1 = 2\n";
        let e = parse_scenario(&format!(
            "{base}[[checks]]\nkind = \"theorem3\"\nvariant = \"ii\"\npsi = \"log(x2)\"\n"
        ))
        .unwrap_err();
        assert_eq!(e.path, "checks[0].B0");

        for (doc, path) in [
            ("[eigen]\ncount = 3\n", "domain"),
            ("domain.kind = \"disk\"\ndomain.radius = -1\n", "domain"),
            ("domain.kind = \"interval\"\ndrift = \"x2\"\n", "drift"),
            ("domain.kind = \"interval\"\ndrift = \"x1 +\"\n", "drift"),
            ("domain.kind = \"interval\"\neigen.method = \"qr\"\n", "eigen.method"),
            ("domain.kind = \"interval\"\neigen.cnt = 3\n", "eigen.cnt"),
            (
                "domain.kind = \"rectangle\"\ntensor.kind = \"diagonal\"\ntensor.entries = [\"1\"]\n",
                "tensor.entries",
            ),
            (
                "domain.kind = \"interval\"\n[[checks]]\nkind = \"lemma1\"\nf = \"x1\"\nk_list = [0]\n",
                "checks[0].k_list[0]",
            ),
            (
                &format!("{base}[[checks]]\nkind = \"theorem_1_1\"\n"),
                "checks[0]",
            ),
        ] {
            let e = parse_scenario(doc).unwrap_err();
            assert_eq!(e.path, path, "{doc}: {e}");
        }
        assert!(parse_scenario(&format!(
            "{base}overrides.H0 = 0\n[[checks]]\nkind = \"theorem_1_1\"\n"
        ))
        .is_ok());
    }
}
