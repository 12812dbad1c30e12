//! Simplicial meshes of coordinate domains (intervals and planar regions),
//! uniform refinement, and the interior degree-of-freedom map.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid domain parameter `{param}`: {reason}")]
    Config { param: String, reason: String },
    #[error("mesh too coarse: no interior vertices")]
    TooCoarse,
}

fn config(param: &str, reason: impl Into<String>) -> MeshError {
    MeshError::Config {
        param: param.to_string(),
        reason: reason.into(),
    }
}

/// Coordinate domains.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Rectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    Disk {
        radius: f64,
    },
    /// `{r_inner < |x| < r_outer, theta0 < arg x < theta1}`
    AnnulusSector {
        r_inner: f64,
        r_outer: f64,
        theta0: f64,
        theta1: f64,
    },
    /// Cap of polar angle `angle` on the unit sphere, meshed as the
    /// stereographic coordinate disk of radius `tan(angle/2)`.
    SphericalCap {
        angle: f64,
    },
    /// Coordinate box in the upper half-plane model; requires `y0 > 0`.
    HyperbolicBox {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    /// Parameter rectangle of an immersed patch.
    ParametricPatch {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    /// `(t, s)` rectangle of the warped product `dt² + e^{2t} ds²`.
    WarpedStrip {
        t0: f64,
        t1: f64,
        s0: f64,
        s1: f64,
    },
}

impl DomainSpec {
    pub fn unit_interval() -> Self {
        DomainSpec::Interval { a: 0.0, b: 1.0 }
    }

    pub fn unit_square() -> Self {
        DomainSpec::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Interval { .. } => "interval",
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::AnnulusSector { .. } => "annulus_sector",
            DomainSpec::SphericalCap { .. } => "spherical_cap",
            DomainSpec::HyperbolicBox { .. } => "hyperbolic_box",
            DomainSpec::ParametricPatch { .. } => "parametric_patch",
            DomainSpec::WarpedStrip { .. } => "warped_strip",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(config(name, "must be finite"))
            }
        };
        let ordered = |lo: (&str, f64), hi: (&str, f64)| -> Result<(), MeshError> {
            finite(lo.0, lo.1)?;
            finite(hi.0, hi.1)?;
            if lo.1 < hi.1 {
                Ok(())
            } else {
                Err(config(hi.0, format!("must exceed {} = {}", lo.0, lo.1)))
            }
        };
        match *self {
            DomainSpec::Interval { a, b } => ordered(("a", a), ("b", b)),
            DomainSpec::Rectangle { x0, x1, y0, y1 }
            | DomainSpec::ParametricPatch { x0, x1, y0, y1 } => {
                ordered(("x0", x0), ("x1", x1))?;
                ordered(("y0", y0), ("y1", y1))
            }
            DomainSpec::HyperbolicBox { x0, x1, y0, y1 } => {
                ordered(("x0", x0), ("x1", x1))?;
                ordered(("y0", y0), ("y1", y1))?;
                if y0 <= 0.0 {
                    return Err(config(
                        "y0",
                        "must be positive (the half-plane metric is singular at x2 = 0)",
                    ));
                }
                Ok(())
            }
            DomainSpec::WarpedStrip { t0, t1, s0, s1 } => {
                ordered(("t0", t0), ("t1", t1))?;
                ordered(("s0", s0), ("s1", s1))
            }
            DomainSpec::Disk { radius } => {
                finite("radius", radius)?;
                if radius > 0.0 {
                    Ok(())
                } else {
                    Err(config("radius", "must be positive"))
                }
            }
            DomainSpec::AnnulusSector {
                r_inner,
                r_outer,
                theta0,
                theta1,
            } => {
                ordered(("r_inner", r_inner), ("r_outer", r_outer))?;
                ordered(("theta0", theta0), ("theta1", theta1))?;
                if r_inner <= 0.0 {
                    return Err(config("r_inner", "must be positive"));
                }
                if theta1 - theta0 >= 2.0 * PI {
                    return Err(config("theta1", "sector must open less than a full turn"));
                }
                Ok(())
            }
            DomainSpec::SphericalCap { angle } => {
                finite("angle", angle)?;
                if angle > 0.0 && angle < PI {
                    Ok(())
                } else {
                    Err(config("angle", "polar angle must lie in (0, π)"))
                }
            }
        }
    }

    /// Exact coordinate volume for straight-sided domains.
    pub fn coordinate_volume(&self) -> Option<f64> {
        match *self {
            DomainSpec::Interval { a, b } => Some(b - a),
            DomainSpec::Rectangle { x0, x1, y0, y1 }
            | DomainSpec::ParametricPatch { x0, x1, y0, y1 }
            | DomainSpec::HyperbolicBox { x0, x1, y0, y1 } => Some((x1 - x0) * (y1 - y0)),
            DomainSpec::WarpedStrip { t0, t1, s0, s1 } => Some((t1 - t0) * (s1 - s0)),
            _ => None,
        }
    }

    fn rectangle_bounds(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            DomainSpec::Rectangle { x0, x1, y0, y1 }
            | DomainSpec::ParametricPatch { x0, x1, y0, y1 }
            | DomainSpec::HyperbolicBox { x0, x1, y0, y1 } => Some((x0, x1, y0, y1)),
            DomainSpec::WarpedStrip { t0, t1, s0, s1 } => Some((t0, t1, s0, s1)),
            _ => None,
        }
    }

    fn disk_radius(&self) -> Option<f64> {
        match *self {
            DomainSpec::Disk { radius } => Some(radius),
            DomainSpec::SphericalCap { angle } => Some((angle / 2.0).tan()),
            _ => None,
        }
    }

    /// Distance-like residual of a point from the domain boundary.
    pub fn boundary_residual(&self, p: &[f64]) -> f64 {
        if let DomainSpec::Interval { a, b } = *self {
            return (p[0] - a).abs().min((p[0] - b).abs());
        }
        if let Some((x0, x1, y0, y1)) = self.rectangle_bounds() {
            return [p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1]]
                .iter()
                .map(|d| d.abs())
                .fold(f64::INFINITY, f64::min);
        }
        if let Some(r) = self.disk_radius() {
            return (p[0].hypot(p[1]) - r).abs();
        }
        if let DomainSpec::AnnulusSector {
            r_inner,
            r_outer,
            theta0,
            theta1,
        } = *self
        {
            let r = p[0].hypot(p[1]);
            let arc = (r - r_inner).abs().min((r - r_outer).abs());
            let ray = |theta: f64| (p[0] * theta.sin() - p[1] * theta.cos()).abs();
            return arc.min(ray(theta0)).min(ray(theta1));
        }
        unreachable!("all kinds handled")
    }

    /// Places the midpoint of boundary edge `(a, b)` on the true boundary.
    fn snap_boundary_midpoint(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let to_radius = |r: f64| {
            let s = r / mid[0].hypot(mid[1]);
            vec![mid[0] * s, mid[1] * s]
        };
        if let Some(r) = self.disk_radius() {
            return to_radius(r);
        }
        if let DomainSpec::AnnulusSector {
            r_inner, r_outer, ..
        } = *self
        {
            let (ra, rb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
            for r in [r_inner, r_outer] {
                let tol = 1e-9 * r_outer;
                if (ra - r).abs() < tol && (rb - r).abs() < tol {
                    return to_radius(r);
                }
            }
        }
        mid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    /// Each cell lists `dim + 1` vertex indices, positively oriented.
    pub cells: Vec<Vec<usize>>,
    pub boundary_vertices: BTreeSet<usize>,
    pub h_max: f64,
    pub domain: DomainSpec,
}

/// Interior vertex ↔ degree of freedom bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// `vertex_to_dof[v]` is `None` for boundary vertices.
    pub vertex_to_dof: Vec<Option<usize>>,
    pub dof_to_vertex: Vec<usize>,
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.dof_to_vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_vertex.is_empty()
    }

    /// Expands a dof vector to all vertices, with zeros on the boundary.
    pub fn expand(&self, dofs: &[f64]) -> Vec<f64> {
        self.vertex_to_dof
            .iter()
            .map(|d| d.map_or(0.0, |i| dofs[i]))
            .collect()
    }
}

/// Generates a mesh of `spec` at the given resolution (number of subdivisions
/// across the domain; for disks, the number of rings).
pub fn generate(spec: &DomainSpec, resolution: usize) -> Result<SimplicialMesh, MeshError> {
    spec.validate()?;
    if resolution < 2 {
        return Err(config("resolution", "must be at least 2"));
    }
    let (vertices, cells) = match *spec {
        DomainSpec::Interval { a, b } => {
            let vertices = (0..=resolution)
                .map(|i| vec![a + (b - a) * i as f64 / resolution as f64])
                .collect();
            let cells = (0..resolution).map(|i| vec![i, i + 1]).collect();
            (vertices, cells)
        }
        DomainSpec::AnnulusSector {
            r_inner,
            r_outer,
            theta0,
            theta1,
        } => {
            let nr = resolution;
            let arc = 0.5 * (r_inner + r_outer) * (theta1 - theta0);
            let nt = ((arc / (r_outer - r_inner)) * nr as f64).ceil().max(2.0) as usize;
            structured_grid(nr, nt, |i, j| {
                let r = r_inner + (r_outer - r_inner) * i as f64 / nr as f64;
                let th = theta0 + (theta1 - theta0) * j as f64 / nt as f64;
                vec![r * th.cos(), r * th.sin()]
            })
        }
        _ => {
            if let Some((x0, x1, y0, y1)) = spec.rectangle_bounds() {
                let (w, h) = (x1 - x0, y1 - y0);
                // square-ish cells: resolution counts subdivisions of the shorter side
                let (nx, ny) = if w >= h {
                    (
                        ((w / h) * resolution as f64).round().max(1.0) as usize,
                        resolution,
                    )
                } else {
                    (
                        resolution,
                        ((h / w) * resolution as f64).round().max(1.0) as usize,
                    )
                };
                structured_grid(nx, ny, |i, j| {
                    vec![x0 + w * i as f64 / nx as f64, y0 + h * j as f64 / ny as f64]
                })
            } else {
                let r = spec.disk_radius().expect("remaining kinds are disks");
                ring_disk(r, resolution)
            }
        }
    };
    Ok(finish(spec.clone(), vertices, cells))
}

/// `(nx+1) × (ny+1)` grid, each quad split along alternating diagonals
/// (union-jack pattern, symmetric under the grid's reflections).
fn structured_grid(
    nx: usize,
    ny: usize,
    point: impl Fn(usize, usize) -> Vec<f64>,
) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(point(i, j));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                cells.push(vec![a, b, c]);
                cells.push(vec![a, c, d]);
            } else {
                cells.push(vec![a, b, d]);
                cells.push(vec![b, c, d]);
            }
        }
    }
    (vertices, cells)
}

/// Concentric rings `k = 1..=rings` with `6k` vertices each around a center
/// vertex; consecutive rings are zipped into triangles by angle.
fn ring_disk(radius: f64, rings: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut vertices = vec![vec![0.0, 0.0]];
    let mut ring_start = vec![0usize];
    let mut ring_len = vec![1usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        ring_len.push(6 * k);
        let r = radius * k as f64 / rings as f64;
        for j in 0..6 * k {
            let th = 2.0 * PI * j as f64 / (6 * k) as f64;
            let (s, c) = th.sin_cos();
            vertices.push(if k == rings {
                // exactly on the boundary circle up to rounding of sin/cos
                let norm = c.hypot(s);
                vec![radius * c / norm, radius * s / norm]
            } else {
                vec![r * c, r * s]
            });
        }
    }
    let mut cells = Vec::new();
    for j in 0..6 {
        cells.push(vec![0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=rings {
        let (inner_start, inner_len) = (ring_start[k - 1], ring_len[k - 1]);
        let (outer_start, outer_len) = (ring_start[k], ring_len[k]);
        let angle = |idx: usize, len: usize| idx as f64 / len as f64;
        let (mut i, mut o) = (0usize, 0usize);
        while i < inner_len || o < outer_len {
            let vi = inner_start + i % inner_len;
            let vo = outer_start + o % outer_len;
            let next_i = angle(i + 1, inner_len);
            let next_o = angle(o + 1, outer_len);
            if o < outer_len && (i >= inner_len || next_o <= next_i) {
                cells.push(vec![vi, vo, outer_start + (o + 1) % outer_len]);
                o += 1;
            } else {
                cells.push(vec![vi, vo, inner_start + (i + 1) % inner_len]);
                i += 1;
            }
        }
    }
    (vertices, cells)
}

fn finish(
    domain: DomainSpec,
    vertices: Vec<Vec<f64>>,
    mut cells: Vec<Vec<usize>>,
) -> SimplicialMesh {
    let dim = domain.dim();
    for cell in cells.iter_mut() {
        if signed_volume(&vertices, cell) < 0.0 {
            cell.swap(0, 1);
        }
    }
    let boundary_vertices = boundary_of(dim, vertices.len(), &cells);
    let h_max = longest_edge(&vertices, &cells);
    SimplicialMesh {
        dim,
        vertices,
        cells,
        boundary_vertices,
        h_max,
        domain,
    }
}

/// Signed coordinate volume of a cell.
pub fn signed_volume(vertices: &[Vec<f64>], cell: &[usize]) -> f64 {
    let v0 = &vertices[cell[0]];
    let v1 = &vertices[cell[1]];
    if cell.len() == 2 {
        return v1[0] - v0[0];
    }
    let v2 = &vertices[cell[2]];
    0.5 * ((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]))
}

/// Vertices on facets that belong to exactly one cell.
fn boundary_of(dim: usize, n_vertices: usize, cells: &[Vec<usize>]) -> BTreeSet<usize> {
    let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
    for cell in cells {
        for skip in 0..cell.len() {
            let mut facet: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, &v)| v)
                .collect();
            facet.sort_unstable();
            *count.entry(facet).or_insert(0) += 1;
        }
    }
    let _ = (dim, n_vertices);
    count
        .into_iter()
        .filter(|(_, c)| *c == 1)
        .flat_map(|(f, _)| f)
        .collect()
}

fn longest_edge(vertices: &[Vec<f64>], cells: &[Vec<usize>]) -> f64 {
    let mut h: f64 = 0.0;
    for cell in cells {
        for a in 0..cell.len() {
            for b in a + 1..cell.len() {
                h = h.max(distance(&vertices[cell[a]], &vertices[cell[b]]));
            }
        }
    }
    h
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Uniform refinement: bisection in 1-D, red refinement (four children) in
/// 2-D. Midpoints of curved boundary edges are placed on the true boundary.
pub fn refine(mesh: &SimplicialMesh) -> SimplicialMesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let boundary_edges = boundary_edge_set(mesh);
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec<f64>>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let p = if boundary_edges.contains(&key) {
                mesh.domain
                    .snap_boundary_midpoint(&vertices[key.0], &vertices[key.1])
            } else {
                vertices[key.0]
                    .iter()
                    .zip(&vertices[key.1])
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect()
            };
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(mesh.cells.len() * 2usize.pow(mesh.dim as u32));
    for cell in &mesh.cells {
        if mesh.dim == 1 {
            let m = mid(cell[0], cell[1], &mut vertices);
            cells.push(vec![cell[0], m]);
            cells.push(vec![m, cell[1]]);
        } else {
            let (a, b, c) = (cell[0], cell[1], cell[2]);
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            cells.push(vec![a, ab, ca]);
            cells.push(vec![ab, b, bc]);
            cells.push(vec![ca, bc, c]);
            cells.push(vec![ab, bc, ca]);
        }
    }
    finish(mesh.domain.clone(), vertices, cells)
}

fn boundary_edge_set(mesh: &SimplicialMesh) -> BTreeSet<(usize, usize)> {
    if mesh.dim != 2 {
        return BTreeSet::new();
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for cell in &mesh.cells {
        for (a, b) in [(cell[0], cell[1]), (cell[1], cell[2]), (cell[2], cell[0])] {
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count
        .into_iter()
        .filter(|(_, c)| *c == 1)
        .map(|(e, _)| e)
        .collect()
}

/// Interior vertices numbered in ascending vertex order.
pub fn interior_dof_map(mesh: &SimplicialMesh) -> Result<DofMap, MeshError> {
    let mut vertex_to_dof = vec![None; mesh.vertices.len()];
    let mut dof_to_vertex = Vec::new();
    for (v, slot) in vertex_to_dof.iter_mut().enumerate() {
        if !mesh.boundary_vertices.contains(&v) {
            *slot = Some(dof_to_vertex.len());
            dof_to_vertex.push(v);
        }
    }
    if dof_to_vertex.is_empty() {
        return Err(MeshError::TooCoarse);
    }
    Ok(DofMap {
        vertex_to_dof,
        dof_to_vertex,
    })
}

impl SimplicialMesh {
    pub fn total_volume(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| signed_volume(&self.vertices, c))
            .sum()
    }

    /// Smallest inradius/circumradius ratio over all cells, normalized so an
    /// equilateral triangle scores 1. Always 1 in 1-D.
    pub fn min_quality(&self) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        self.cells
            .iter()
            .map(|c| {
                let (a, b, cc) = (
                    &self.vertices[c[0]],
                    &self.vertices[c[1]],
                    &self.vertices[c[2]],
                );
                let (la, lb, lc) = (distance(b, cc), distance(a, cc), distance(a, b));
                let area = signed_volume(&self.vertices, c).abs();
                let s = 0.5 * (la + lb + lc);
                let inradius = area / s;
                let circumradius = la * lb * lc / (4.0 * area);
                2.0 * inradius / circumradius
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain-text dump with `vertices`, `cells` and `boundary` sections.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let coords: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(out, "{}", coords.join(" "));
        }
        let _ = writeln!(out, "cells {}", self.cells.len());
        for c in &self.cells {
            let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{}", ids.join(" "));
        }
        let _ = writeln!(out, "boundary {}", self.boundary_vertices.len());
        for b in &self.boundary_vertices {
            let _ = writeln!(out, "{b}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_generation() {
        let m = generate(&DomainSpec::unit_interval(), 4).unwrap();
        assert_eq!(m.vertices.len(), 5);
        assert_eq!(m.cells.len(), 4);
        assert_eq!(
            m.boundary_vertices.iter().copied().collect::<Vec<_>>(),
            vec![0, 4]
        );
        assert_eq!(interior_dof_map(&m).unwrap().len(), 3);
        let r = refine(&m);
        assert_eq!(r.cells.len(), 8);
        assert!((r.h_max - m.h_max / 2.0).abs() < 1e-15);
        assert_eq!(interior_dof_map(&r).unwrap().len(), 7);
    }

    #[test]
    fn square_generation() {
        let m = generate(&DomainSpec::unit_square(), 2).unwrap();
        assert_eq!(m.vertices.len(), 9);
        assert_eq!(m.cells.len(), 8);
        assert_eq!(m.boundary_vertices.len(), 8);
        let dofs = interior_dof_map(&m).unwrap();
        assert_eq!(dofs.len(), 1);
        assert_eq!(dofs.dof_to_vertex, vec![4]);
        let r = refine(&m);
        assert_eq!(r.cells.len(), 32);
        assert!((r.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_boundary_on_circle() {
        let spec = DomainSpec::Disk { radius: 1.0 };
        let m = generate(&spec, 5).unwrap();
        assert_eq!(m.boundary_vertices.len(), 30);
        for &b in &m.boundary_vertices {
            assert!((m.vertices[b][0].hypot(m.vertices[b][1]) - 1.0).abs() < 1e-12);
        }
        let r = refine(&refine(&m));
        for &b in &r.boundary_vertices {
            assert!((r.vertices[b][0].hypot(r.vertices[b][1]) - 1.0).abs() < 1e-12);
        }
        assert!(r.cells.iter().all(|c| signed_volume(&r.vertices, c) > 0.0));
        // inscribed polygon area approaches π
        assert!((r.total_volume() - PI).abs() < 0.01);
    }

    #[test]
    fn too_coarse_and_bad_specs() {
        assert!(matches!(
            generate(&DomainSpec::unit_interval(), 1),
            Err(MeshError::Config { .. })
        ));
        let err = generate(
            &DomainSpec::HyperbolicBox {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            4,
        )
        .unwrap_err();
        assert_eq!(
            err,
            MeshError::Config {
                param: "y0".into(),
                reason: "must be positive (the half-plane metric is singular at x2 = 0)".into()
            }
        );
        assert!(matches!(
            generate(&DomainSpec::Disk { radius: -1.0 }, 4),
            Err(MeshError::Config { ref param, .. }) if param == "radius"
        ));
        let mesh = SimplicialMesh {
            dim: 1,
            vertices: vec![vec![0.0], vec![1.0]],
            cells: vec![vec![0, 1]],
            boundary_vertices: [0, 1].into_iter().collect(),
            h_max: 1.0,
            domain: DomainSpec::unit_interval(),
        };
        assert_eq!(interior_dof_map(&mesh), Err(MeshError::TooCoarse));
    }

    #[test]
    fn dump_sections() {
        let m = generate(&DomainSpec::unit_interval(), 2).unwrap();
        let text = m.dump();
        assert!(text.starts_with("vertices 3\n"));
        assert!(text.contains("cells 2\n0 1\n1 2\n"));
        assert!(text.ends_with("boundary 2\n0\n2\n"));
    }
}
