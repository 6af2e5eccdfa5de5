//! Closed surfaces in R^3 with quadrature, outward normals and enclosed-volume rules.
//!
//! Two kinds of surface are supported:
//!
//! * parametric ellipsoids (spheres included), discretized on a spectral grid:
//!   `n + 1` Gauss-Legendre nodes in `cos(theta)` times `2n + 2` equispaced
//!   azimuths, where `n` is the harmonic degree of the grid;
//! * flat-triangle meshes read from OFF files, one collocation node per
//!   triangle centroid with weight equal to the triangle area.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CapaxError, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_interval, tetra_rule};

pub type Point = [f64; 3];

/// Semi-axes below this are rejected as degenerate.
pub const MIN_AXIS: f64 = 1e-8;

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale_pt(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Ellipsoid `center + diag(axes) q`, `q` on the unit sphere, sampled on a spectral grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPatch {
    pub degree: usize,
    pub axes: [f64; 3],
    pub center: Point,
    /// Parameter point on the unit sphere for every node.
    pub params: Vec<Point>,
    /// Product-rule weights on the unit sphere (no area element).
    pub param_weights: Vec<f64>,
}

impl SpectralPatch {
    pub fn map(&self, q: Point) -> Point {
        [
            self.center[0] + self.axes[0] * q[0],
            self.center[1] + self.axes[1] * q[1],
            self.center[2] + self.axes[2] * q[2],
        ]
    }

    /// Unnormalized outward normal `(q1/a, q2/b, q3/c)`; its length times `abc` is the area element.
    fn normal_dir(&self, q: Point) -> Point {
        [q[0] / self.axes[0], q[1] / self.axes[1], q[2] / self.axes[2]]
    }

    /// Surface point, outward unit normal and area element at parameter `q`.
    #[inline]
    pub fn frame(&self, q: Point) -> (Point, Point, f64) {
        let n = self.normal_dir(q);
        let len = norm(n);
        let abc = self.axes[0] * self.axes[1] * self.axes[2];
        (self.map(q), scale_pt(n, 1.0 / len), abc * len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Patches {
    Spectral(SpectralPatch),
    Mesh(TriangleMesh),
}

/// Discretized closed surface. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    nodes: Vec<Point>,
    weights: Vec<f64>,
    normals: Vec<Point>,
    patches: Patches,
    diameter: f64,
    /// Largest nearest-neighbour distance between nodes.
    h: f64,
}

impl Surface {
    fn build(nodes: Vec<Point>, weights: Vec<f64>, normals: Vec<Point>, patches: Patches) -> Result<Self> {
        let n = nodes.len();
        let mut nearest = vec![f64::INFINITY; n];
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = norm(sub(nodes[i], nodes[j]));
                nearest[i] = nearest[i].min(d);
                nearest[j] = nearest[j].min(d);
                diameter = diameter.max(d);
            }
        }
        for i in 0..n {
            if nearest[i] <= 1e-12 * diameter.max(1e-300) {
                let j = (0..n)
                    .find(|&j| j != i && norm(sub(nodes[i], nodes[j])) <= 1e-12 * diameter.max(1e-300))
                    .unwrap_or(i);
                return Err(CapaxError::CoincidentNodes(i.min(j), i.max(j)));
            }
        }
        if let Patches::Spectral(p) = &patches {
            diameter = 2.0 * p.axes.iter().cloned().fold(0.0, f64::max);
        } else if let Patches::Mesh(m) = &patches {
            for (i, a) in m.vertices.iter().enumerate() {
                for b in &m.vertices[i + 1..] {
                    diameter = diameter.max(norm(sub(*a, *b)));
                }
            }
        }
        let h = nearest.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
        Ok(Surface { nodes, weights, normals, patches, diameter, h })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn patches(&self) -> &Patches {
        &self.patches
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Local mesh width used by the near-field rule.
    pub fn mesh_width(&self) -> f64 {
        self.h
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_i w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Componentwise `sum_i w_i nu_i`; vanishes for a closed surface.
    pub fn normal_moment(&self) -> Point {
        let mut m = [0.0; 3];
        for (w, n) in self.weights.iter().zip(&self.normals) {
            for k in 0..3 {
                m[k] += w * n[k];
            }
        }
        m
    }

    /// Distance from `x` to the closest node.
    pub fn distance_to_nodes(&self, x: Point) -> f64 {
        self.nodes.iter().map(|y| norm(sub(x, *y))).fold(f64::INFINITY, f64::min)
    }

    /// Minimum of `|x|` over the nodes: discrete stand-in for dist(0, surface).
    pub fn distance_from_origin(&self) -> f64 {
        self.distance_to_nodes([0.0; 3])
    }

    /// Quadrature rule for the enclosed solid. Parametric bodies use a mapped
    /// tensor rule; meshes are tetrahedralized from the vertex centroid.
    pub fn volume_rule(&self) -> Vec<(Point, f64)> {
        match &self.patches {
            Patches::Spectral(p) => {
                let nr = p.degree + 2;
                let (r, wr) = gauss_legendre_interval(nr, 0.0, 1.0);
                let abc = p.axes[0] * p.axes[1] * p.axes[2];
                let mut out = Vec::with_capacity(nr * p.params.len());
                for (ri, wri) in r.iter().zip(&wr) {
                    for (q, wq) in p.params.iter().zip(&p.param_weights) {
                        out.push((p.map(scale_pt(*q, *ri)), abc * ri * ri * wri * wq));
                    }
                }
                out
            }
            Patches::Mesh(m) => {
                let n = m.vertices.len() as f64;
                let c = m.vertices.iter().fold([0.0; 3], |acc, v| add(acc, scale_pt(*v, 1.0 / n)));
                let rule = tetra_rule(3);
                let mut out = Vec::with_capacity(rule.len() * m.triangles.len());
                for t in 0..m.triangles.len() {
                    let [a, b, d] = m.corners(t);
                    let (e1, e2, e3) = (sub(a, c), sub(b, c), sub(d, c));
                    let det = dot(e1, cross(e2, e3));
                    for (x, w) in &rule {
                        let p = add(c, add(add(scale_pt(e1, x[0]), scale_pt(e2, x[1])), scale_pt(e3, x[2])));
                        out.push((p, w * det));
                    }
                }
                out
            }
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume_rule().iter().map(|(_, w)| w).sum()
    }

    /// CSV with one row per node: `x,y,z,w,nx,ny,nz`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z,w,nx,ny,nz\n");
        for i in 0..self.len() {
            let [x, y, z] = self.nodes[i];
            let [a, b, c] = self.normals[i];
            let _ = writeln!(s, "{x},{y},{z},{},{a},{b},{c}", self.weights[i]);
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Stable textual fingerprint of the discretization, for output metadata.
    pub fn describe(&self) -> String {
        match &self.patches {
            Patches::Spectral(p) => format!(
                "ellipsoid axes={:?} center={:?} degree={} nodes={}",
                p.axes,
                p.center,
                p.degree,
                self.len()
            ),
            Patches::Mesh(m) => format!("mesh vertices={} triangles={}", m.vertices.len(), m.triangles.len()),
        }
    }
}

/// Sphere of the given radius centered at the origin; `order` is the harmonic degree of the grid.
pub fn make_sphere(radius: f64, order: usize) -> Result<Surface> {
    if !(radius > 0.0) {
        return Err(CapaxError::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
    }
    make_ellipsoid(radius, radius, radius, order)
}

pub fn make_ellipsoid(a: f64, b: f64, c: f64, order: usize) -> Result<Surface> {
    make_ellipsoid_at([0.0; 3], [a, b, c], order)
}

/// Ellipsoid with semi-axes along the coordinate directions, centered at `center`.
pub fn make_ellipsoid_at(center: Point, axes: [f64; 3], order: usize) -> Result<Surface> {
    for &s in &axes {
        if !(s >= MIN_AXIS) {
            return Err(CapaxError::InvalidArgument(format!(
                "semi-axis {s:e} is below the degeneracy threshold {MIN_AXIS:e}"
            )));
        }
    }
    if order < 1 {
        return Err(CapaxError::InvalidArgument("quadrature order must be at least 1".into()));
    }
    let n = order;
    let (z, wz) = gauss_legendre(n + 1);
    let np = 2 * n + 2;
    let dphi = 2.0 * PI / np as f64;
    let mut params = Vec::with_capacity((n + 1) * np);
    let mut param_weights = Vec::with_capacity((n + 1) * np);
    for (zi, wi) in z.iter().zip(&wz) {
        let s = (1.0 - zi * zi).sqrt();
        for k in 0..np {
            let phi = dphi * k as f64;
            params.push([s * phi.cos(), s * phi.sin(), *zi]);
            param_weights.push(wi * dphi);
        }
    }
    let patch = SpectralPatch { degree: n, axes, center, params, param_weights };
    let mut nodes = Vec::with_capacity(patch.params.len());
    let mut weights = Vec::with_capacity(patch.params.len());
    let mut normals = Vec::with_capacity(patch.params.len());
    for (q, w) in patch.params.iter().zip(&patch.param_weights) {
        let (x, nu, jac) = patch.frame(*q);
        nodes.push(x);
        normals.push(nu);
        weights.push(w * jac);
    }
    Surface::build(nodes, weights, normals, Patches::Spectral(patch))
}

/// Surface from a closed, orientable triangle mesh. Faces are flipped if the
/// signed volume is negative so normals point outward.
pub fn surface_from_mesh(mut mesh: TriangleMesh) -> Result<Surface> {
    check_closed_orientable(&mesh)?;
    if mesh.signed_volume() < 0.0 {
        for t in &mut mesh.triangles {
            t.swap(1, 2);
        }
    }
    let mut nodes = Vec::with_capacity(mesh.triangles.len());
    let mut weights = Vec::with_capacity(mesh.triangles.len());
    let mut normals = Vec::with_capacity(mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        let n = cross(sub(b, a), sub(c, a));
        let len = norm(n);
        if len == 0.0 {
            return Err(CapaxError::InvalidArgument(format!("triangle {t} is degenerate")));
        }
        nodes.push(scale_pt(add(add(a, b), c), 1.0 / 3.0));
        weights.push(0.5 * len);
        normals.push(scale_pt(n, 1.0 / len));
    }
    Surface::build(nodes, weights, normals, Patches::Mesh(mesh))
}

fn check_closed_orientable(mesh: &TriangleMesh) -> Result<()> {
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
            *directed.entry((a, b)).or_default() += 1;
        }
    }
    let mut bad: Vec<_> = undirected.iter().filter(|(_, &c)| c != 2).collect();
    bad.sort();
    if let Some((&(a, b), &c)) = bad.first() {
        return Err(CapaxError::OpenMesh(a, b, c));
    }
    let mut twice: Vec<_> = directed.iter().filter(|(_, &c)| c > 1).map(|(e, _)| *e).collect();
    twice.sort();
    if let Some(&(a, b)) = twice.first() {
        return Err(CapaxError::InconsistentOrientation(a, b));
    }
    Ok(())
}

/// Parses an ASCII OFF triangle mesh.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, msg: &str| CapaxError::MeshParse { line, msg: msg.to_string() };

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let mut rest_of_header: Vec<&str> = Vec::new();
    if let Some(tail) = header.strip_prefix("OFF") {
        rest_of_header.extend(tail.split_whitespace());
    } else {
        return Err(perr(ln, "missing OFF header"));
    }
    let (ln, counts) = if rest_of_header.is_empty() {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "missing counts line"))?;
        (ln, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (ln, rest_of_header)
    };
    if counts.len() < 2 {
        return Err(perr(ln, "counts line needs vertex and face counts"));
    }
    let nv: usize = counts[0].parse().map_err(|_| perr(ln, "bad vertex count"))?;
    let nf: usize = counts[1].parse().map_err(|_| perr(ln, "bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of file in vertex list"))?;
        let v: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(ln, "bad vertex coordinate"))?;
        if v.len() != 3 {
            return Err(perr(ln, "vertex needs three coordinates"));
        }
        vertices.push([v[0], v[1], v[2]]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of file in face list"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(ln, "bad face index"))?;
        if f.first() != Some(&3) || f.len() < 4 {
            return Err(perr(ln, "only triangular faces are supported"));
        }
        let t = [f[1], f[2], f[3]];
        if t.iter().any(|&i| i >= nv) {
            return Err(perr(ln, "face index out of range"));
        }
        triangles.push(t);
    }
    Ok(TriangleMesh { vertices, triangles })
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Surface> {
    let text = std::fs::read_to_string(path)?;
    surface_from_mesh(parse_off(&text)?)
}

pub fn write_off(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "OFF")?;
    writeln!(f, "{} {} 0", mesh.vertices.len(), mesh.triangles.len())?;
    for v in &mesh.vertices {
        writeln!(f, "{} {} {}", v[0], v[1], v[2])?;
    }
    for t in &mesh.triangles {
        writeln!(f, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Icosahedron subdivided `level` times with vertices projected to the sphere of radius `radius`.
pub fn icosphere_mesh(radius: f64, level: usize) -> TriangleMesh {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = vec![
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    for v in &mut vertices {
        *v = scale_pt(*v, 1.0 / norm(*v));
    }
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<Point>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = scale_pt(add(vs[a], vs[b]), 0.5);
                vs.push(scale_pt(m, 1.0 / norm(m)));
                vs.len() - 1
            })
        };
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    for v in &mut vertices {
        *v = scale_pt(*v, radius);
    }
    TriangleMesh { vertices, triangles }
}

pub fn make_icosphere(radius: f64, level: usize) -> Result<Surface> {
    if !(radius > 0.0) {
        return Err(CapaxError::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
    }
    surface_from_mesh(icosphere_mesh(radius, level))
}

/// Dilation about the origin: nodes times `eps`, weights times `eps^2`, normals unchanged.
pub fn scale(surface: &Surface, eps: f64) -> Result<Surface> {
    if !(eps > 0.0) {
        return Err(CapaxError::InvalidArgument(format!("scale factor must be positive, got {eps}")));
    }
    if eps == 1.0 {
        return Ok(surface.clone());
    }
    let patches = match &surface.patches {
        Patches::Spectral(p) => Patches::Spectral(SpectralPatch {
            axes: p.axes.map(|a| a * eps),
            center: scale_pt(p.center, eps),
            ..p.clone()
        }),
        Patches::Mesh(m) => Patches::Mesh(TriangleMesh {
            vertices: m.vertices.iter().map(|v| scale_pt(*v, eps)).collect(),
            triangles: m.triangles.clone(),
        }),
    };
    Ok(Surface {
        nodes: surface.nodes.iter().map(|x| scale_pt(*x, eps)).collect(),
        weights: surface.weights.iter().map(|w| w * eps * eps).collect(),
        normals: surface.normals.clone(),
        patches,
        diameter: surface.diameter * eps,
        h: surface.h * eps,
    })
}

/// The scaled hole `eps * omega`, checked to sit inside the outer domain.
#[derive(Debug, Clone)]
pub struct Hole {
    pub base_surface: Surface,
    pub epsilon: f64,
}

impl Hole {
    pub fn new(base_surface: Surface, epsilon: f64, outer: &Surface) -> Result<Self> {
        check_hole(&base_surface, epsilon, outer)?;
        Ok(Hole { base_surface, epsilon })
    }

    pub fn scaled(&self) -> Result<Surface> {
        scale(&self.base_surface, self.epsilon)
    }
}

/// `eps * diam(omega) < dist(0, boundary of Omega)`.
pub fn check_hole(inner: &Surface, eps: f64, outer: &Surface) -> Result<()> {
    if !(eps > 0.0) {
        return Err(CapaxError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let scaled = eps * inner.diameter();
    let dist = outer.distance_from_origin();
    if scaled >= dist {
        return Err(CapaxError::HoleTooLarge { scaled, dist });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_area_and_normals() {
        let s = make_sphere(1.0, 8).unwrap();
        assert!((s.area() - 4.0 * PI).abs() < 1e-12);
        for (x, n) in s.nodes().iter().zip(s.normals()) {
            assert!((norm(*x) - 1.0).abs() < 1e-14);
            assert!((norm(*n) - 1.0).abs() < 1e-12);
        }
        let s2 = make_sphere(2.0, 8).unwrap();
        assert!((s2.area() - 16.0 * PI).abs() < 1e-11);
        let m = s.normal_moment();
        assert!(m.iter().all(|v| v.abs() < 1e-13));
        assert!(make_sphere(0.0, 4).is_err());
        assert!(make_sphere(-1.0, 4).is_err());
    }

    #[test]
    fn ellipsoid_degenerates_and_area() {
        let e = make_ellipsoid(1.0, 1.0, 1.0, 6).unwrap();
        let s = make_sphere(1.0, 6).unwrap();
        assert_eq!(e.nodes(), s.nodes());
        assert!(make_ellipsoid(1.0, 1.0, 1e-12, 6).is_err());
        let exact = 2.0 * PI + 8.0 * PI * PI / (3.0 * 3f64.sqrt());
        let e1 = (make_ellipsoid(2.0, 1.0, 1.0, 8).unwrap().area() - exact).abs();
        let e2 = (make_ellipsoid(2.0, 1.0, 1.0, 16).unwrap().area() - exact).abs();
        assert!(e2 < e1 && e2 < 1e-8, "{e1:e} {e2:e}");
    }

    #[test]
    fn scaling() {
        let s = make_sphere(1.0, 6).unwrap();
        let half = scale(&s, 0.5).unwrap();
        assert!((half.area() - PI).abs() < 1e-12);
        assert!((half.diameter() - 1.0).abs() < 1e-15);
        assert_eq!(scale(&s, 1.0).unwrap(), s);
        let ab = scale(&scale(&s, 0.3).unwrap(), 0.5).unwrap();
        let direct = scale(&s, 0.15).unwrap();
        for (p, q) in ab.nodes().iter().zip(direct.nodes()) {
            assert!(norm(sub(*p, *q)) < 1e-16);
        }
        assert!(scale(&s, 0.0).is_err());
    }

    #[test]
    fn volumes() {
        let s = make_ellipsoid(2.0, 1.0, 0.5, 6).unwrap();
        assert!((s.volume() - 4.0 * PI / 3.0).abs() < 1e-12);
        let ico = make_icosphere(1.0, 3).unwrap();
        assert!(ico.volume() > 0.0 && (ico.volume() - 4.0 * PI / 3.0).abs() < 0.05);
    }

    #[test]
    fn off_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ico.off");
        write_off(&icosphere_mesh(1.0, 2), &p).unwrap();
        let s = load_mesh(&p).unwrap();
        assert!((s.area() - 4.0 * PI).abs() / (4.0 * PI) < 0.03);

        let open = "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n";
        assert!(matches!(parse_off(open).map(surface_from_mesh), Ok(Err(CapaxError::OpenMesh(..)))));
        assert!(matches!(parse_off("PLY\n"), Err(CapaxError::MeshParse { .. })));
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n"), Err(CapaxError::MeshParse { .. })));
    }

    #[test]
    fn hole_invariant() {
        let outer = make_sphere(1.0, 6).unwrap();
        let inner = make_sphere(1.0, 4).unwrap();
        assert!(Hole::new(inner.clone(), 0.1, &outer).is_ok());
        assert!(matches!(Hole::new(inner, 0.6, &outer), Err(CapaxError::HoleTooLarge { .. })));
    }
}
