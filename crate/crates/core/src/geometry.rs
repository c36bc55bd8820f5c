//! Computational domains: evaluation lattices, boundary parameterizations,
//! and exterior source-center curves.
//!
//! All four domains live on a uniform lattice over their bounding box
//! (`[0,1]^d`, or `[-1,1]^2` for the disk). Lattice membership is decided in
//! integer arithmetic on doubled coordinates, so nodes that sit exactly on a
//! curved or re-entrant boundary are classified without rounding noise.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MadError, Result};

/// Tolerance for "lies on the boundary" checks on floating-point input.
pub const ON_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    UnitSquare,
    UnitDisk,
    /// `[0,1]^2` with the top-right quadrant `(0.5,1]x(0.5,1]` removed.
    LShape,
    UnitCube,
}

impl DomainKind {
    pub const ALL: [DomainKind; 4] = [
        DomainKind::UnitSquare,
        DomainKind::UnitDisk,
        DomainKind::LShape,
        DomainKind::UnitCube,
    ];

    pub fn dim(self) -> usize {
        match self {
            DomainKind::UnitCube => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::UnitSquare => "square",
            DomainKind::UnitDisk => "disk",
            DomainKind::LShape => "lshape",
            DomainKind::UnitCube => "cube3d",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            DomainKind::UnitSquare => 0,
            DomainKind::UnitDisk => 1,
            DomainKind::LShape => 2,
            DomainKind::UnitCube => 3,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == c)
    }

    /// Per-axis bounding interval.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            DomainKind::UnitDisk => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn centroid(self) -> [f64; 3] {
        match self {
            DomainKind::UnitSquare => [0.5, 0.5, 0.0],
            DomainKind::UnitDisk => [0.0, 0.0, 0.0],
            DomainKind::LShape => [5.0 / 12.0, 5.0 / 12.0, 0.0],
            DomainKind::UnitCube => [0.5, 0.5, 0.5],
        }
    }

    /// Largest distance from the centroid to the closed region.
    pub fn circumradius(self) -> f64 {
        match self {
            DomainKind::UnitSquare => 0.5 * 2f64.sqrt(),
            DomainKind::UnitDisk => 1.0,
            // farthest vertices are (1,0) and (0,1)
            DomainKind::LShape => (49.0f64 + 25.0).sqrt() / 12.0,
            DomainKind::UnitCube => 0.5 * 3f64.sqrt(),
        }
    }

    /// Boundary length for 2D domains, surface area for the cube.
    pub fn boundary_measure(self) -> f64 {
        match self {
            DomainKind::UnitSquare | DomainKind::LShape => 4.0,
            DomainKind::UnitDisk => TAU,
            DomainKind::UnitCube => 6.0,
        }
    }

    /// Membership in the closed region.
    pub fn contains(self, p: &[f64]) -> bool {
        let tol = ON_BOUNDARY_TOL;
        let in01 = |v: f64| (-tol..=1.0 + tol).contains(&v);
        match self {
            DomainKind::UnitSquare => in01(p[0]) && in01(p[1]),
            DomainKind::UnitDisk => (p[0] * p[0] + p[1] * p[1]).sqrt() <= 1.0 + tol,
            DomainKind::LShape => {
                in01(p[0]) && in01(p[1]) && (p[0] <= 0.5 + tol || p[1] <= 0.5 + tol)
            }
            DomainKind::UnitCube => in01(p[0]) && in01(p[1]) && in01(p[2]),
        }
    }

    /// Membership in the open region (strict interior).
    pub fn contains_strictly(self, p: &[f64]) -> bool {
        let tol = ON_BOUNDARY_TOL;
        let open01 = |v: f64| v > tol && v < 1.0 - tol;
        match self {
            DomainKind::UnitSquare => open01(p[0]) && open01(p[1]),
            DomainKind::UnitDisk => (p[0] * p[0] + p[1] * p[1]).sqrt() < 1.0 - tol,
            DomainKind::LShape => {
                open01(p[0]) && open01(p[1]) && (p[0] < 0.5 - tol || p[1] < 0.5 - tol)
            }
            DomainKind::UnitCube => open01(p[0]) && open01(p[1]) && open01(p[2]),
        }
    }

    /// Lattice classification from doubled integer coordinates
    /// `a_d = 2 * i_d - n` (centered) or `b_d = 2 * i_d` (corner-based).
    fn classify(self, idx: &[usize], n: usize) -> Option<NodeRole> {
        let on_edge = |i: usize| i == 0 || i == n;
        match self {
            DomainKind::UnitSquare => Some(if on_edge(idx[0]) || on_edge(idx[1]) {
                NodeRole::Boundary
            } else {
                NodeRole::Interior
            }),
            DomainKind::UnitCube => Some(if idx.iter().take(3).any(|&i| on_edge(i)) {
                NodeRole::Boundary
            } else {
                NodeRole::Interior
            }),
            DomainKind::UnitDisk => {
                let a = 2 * idx[0] as i64 - n as i64;
                let b = 2 * idx[1] as i64 - n as i64;
                let r2 = a * a + b * b;
                let n2 = (n * n) as i64;
                match r2.cmp(&n2) {
                    std::cmp::Ordering::Less => Some(NodeRole::Interior),
                    std::cmp::Ordering::Equal => Some(NodeRole::Boundary),
                    std::cmp::Ordering::Greater => None,
                }
            }
            DomainKind::LShape => {
                let (x2, y2) = (2 * idx[0], 2 * idx[1]);
                if x2 > n && y2 > n {
                    return None;
                }
                let reentrant = (x2 == n && y2 >= n) || (y2 == n && x2 >= n);
                Some(
                    if on_edge(idx[0]) || on_edge(idx[1]) || reentrant {
                        NodeRole::Boundary
                    } else {
                        NodeRole::Interior
                    },
                )
            }
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainKind {
    type Err = MadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(DomainKind::UnitSquare),
            "disk" => Ok(DomainKind::UnitDisk),
            "lshape" => Ok(DomainKind::LShape),
            "cube3d" | "cube" => Ok(DomainKind::UnitCube),
            other => Err(MadError::invalid(format!("unknown domain kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lattice points per axis.
    pub resolution: usize,
    /// Number of boundary samples `Mb`. Ignored for the cube, whose boundary
    /// set is the surface lattice.
    pub boundary_count: usize,
}

impl GridSpec {
    pub fn new(resolution: usize, boundary_count: usize) -> Self {
        GridSpec {
            resolution,
            boundary_count,
        }
    }

    /// Full-scale sizes: 51x51 lattice, 200 boundary samples (100 for the
    /// disk); the cube uses a 21^3 lattice whose surface has 2402 nodes.
    pub fn paper_default(kind: DomainKind) -> Self {
        match kind {
            DomainKind::UnitSquare | DomainKind::LShape => GridSpec::new(51, 200),
            DomainKind::UnitDisk => GridSpec::new(51, 100),
            DomainKind::UnitCube => GridSpec::new(21, cube_surface_count(21)),
        }
    }

    pub fn spacing(&self, kind: DomainKind) -> f64 {
        let (lo, hi) = kind.bounds();
        (hi - lo) / (self.resolution - 1) as f64
    }
}

fn cube_surface_count(res: usize) -> usize {
    let n = res - 1;
    6 * n * n + 2
}

/// A flat list of points of fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        PointSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(MadError::invalid("flat coordinate buffer not divisible by dim"));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn select(&self, idx: impl IntoIterator<Item = usize>) -> PointSet {
        let mut out = PointSet::new(self.dim);
        for i in idx {
            out.push(self.get(i));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRole {
    /// Strictly inside the open region.
    Interior,
    /// On the boundary of the region.
    Boundary,
}

#[derive(Clone, Debug)]
pub struct Domain {
    kind: DomainKind,
    grid: GridSpec,
    h: f64,
    nodes: PointSet,
    lattice: Vec<[usize; 3]>,
    roles: Vec<NodeRole>,
    lattice_to_node: Vec<usize>,
    boundary: PointSet,
    boundary_params: Vec<f64>,
}

const NO_NODE: usize = usize::MAX;

impl Domain {
    /// Builds the lattice nodes in the closed region and `Mb` boundary
    /// samples equally spaced in arc length (surface lattice for the cube).
    pub fn build(kind: DomainKind, grid: GridSpec) -> Result<Domain> {
        if grid.resolution < 3 {
            return Err(MadError::invalid(format!(
                "resolution {} too small (need >= 3)",
                grid.resolution
            )));
        }
        let dim = kind.dim();
        if dim == 2 && grid.boundary_count < 4 {
            return Err(MadError::invalid(format!(
                "boundary count {} too small (need >= 4)",
                grid.boundary_count
            )));
        }
        let res = grid.resolution;
        let n = res - 1;
        let (lo, _) = kind.bounds();
        let h = grid.spacing(kind);
        let total = res.pow(dim as u32);

        let mut nodes = PointSet::new(dim);
        let mut lattice = Vec::new();
        let mut roles = Vec::new();
        let mut lattice_to_node = vec![NO_NODE; total];
        for flat in 0..total {
            let idx = unflatten(flat, res, dim);
            if let Some(role) = kind.classify(&idx, n) {
                lattice_to_node[flat] = lattice.len();
                let p: Vec<f64> = idx[..dim].iter().map(|&i| lo + i as f64 * h).collect();
                nodes.push(&p);
                lattice.push(idx);
                roles.push(role);
            }
        }

        let (boundary, boundary_params, grid) = if dim == 3 {
            let surface: Vec<usize> = (0..roles.len())
                .filter(|&i| roles[i] == NodeRole::Boundary)
                .collect();
            let mb = surface.len();
            (
                nodes.select(surface),
                Vec::new(),
                GridSpec::new(res, mb),
            )
        } else {
            let mb = grid.boundary_count;
            let length = kind.boundary_measure();
            let params: Vec<f64> = (0..mb).map(|i| i as f64 * length / mb as f64).collect();
            let mut pts = PointSet::new(2);
            for &t in &params {
                pts.push(&boundary_point_unchecked(kind, t));
            }
            (pts, params, grid)
        };

        Ok(Domain {
            kind,
            grid,
            h,
            nodes,
            lattice,
            roles,
            lattice_to_node,
            boundary,
            boundary_params,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Lattice spacing.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Lattice nodes in the closed region: the evaluation set (`M` points).
    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    /// Indices (into `nodes`) of the strictly interior nodes.
    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == NodeRole::Interior)
            .map(|(i, _)| i)
    }

    pub fn interior_points(&self) -> PointSet {
        self.nodes.select(self.interior_indices())
    }

    /// Lattice index triple of node `i` (third entry is zero in 2D).
    pub fn lattice_index(&self, i: usize) -> [usize; 3] {
        self.lattice[i]
    }

    /// Node at a lattice position, if the position lies in the closed region.
    pub fn node_at(&self, idx: [usize; 3]) -> Option<usize> {
        let res = self.grid.resolution;
        if idx.iter().take(self.dim()).any(|&i| i >= res) {
            return None;
        }
        let flat = flatten(idx, res, self.dim());
        match self.lattice_to_node[flat] {
            NO_NODE => None,
            i => Some(i),
        }
    }

    /// Boundary samples (`Mb` points).
    pub fn boundary_points(&self) -> &PointSet {
        &self.boundary
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    /// Arc-length parameters of the boundary samples (empty for the cube).
    pub fn boundary_params(&self) -> &[f64] {
        &self.boundary_params
    }

    pub fn boundary_length(&self) -> f64 {
        self.kind.boundary_measure()
    }

    /// Inverse of the arc-length unrolling of the boundary.
    pub fn boundary_point(&self, t: f64) -> Result<[f64; 2]> {
        boundary_point(self.kind, t)
    }

    /// `count` points on a circle (sphere for the cube) of radius
    /// `circumradius + offset` about the centroid, equally spaced in angle.
    pub fn exterior_centers(&self, count: usize, offset: f64) -> Result<PointSet> {
        exterior_centers(self.kind, count, offset)
    }
}

fn unflatten(flat: usize, res: usize, dim: usize) -> [usize; 3] {
    match dim {
        2 => [flat / res, flat % res, 0],
        _ => [flat / (res * res), (flat / res) % res, flat % res],
    }
}

fn flatten(idx: [usize; 3], res: usize, dim: usize) -> usize {
    match dim {
        2 => idx[0] * res + idx[1],
        _ => (idx[0] * res + idx[1]) * res + idx[2],
    }
}

/// Point on the boundary at arc-length parameter `t` in `[0, L)`.
///
/// Polygons start at `(0,0)` and run counter-clockwise; the disk starts at
/// angle zero, `(1,0)`.
pub fn boundary_point(kind: DomainKind, t: f64) -> Result<[f64; 2]> {
    if kind.dim() != 2 {
        return Err(MadError::UnsupportedDomain {
            domain: kind.name(),
            reason: "no arc-length parameterization in 3D",
        });
    }
    let length = kind.boundary_measure();
    if !(0.0..length).contains(&t) {
        return Err(MadError::ParameterOutOfRange { t, length });
    }
    Ok(boundary_point_unchecked(kind, t))
}

const SQUARE: [[f64; 2]; 5] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
const LSHAPE: [[f64; 2]; 7] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [1.0, 0.5],
    [0.5, 0.5],
    [0.5, 1.0],
    [0.0, 1.0],
    [0.0, 0.0],
];

fn boundary_point_unchecked(kind: DomainKind, t: f64) -> [f64; 2] {
    match kind {
        DomainKind::UnitDisk => [t.cos(), t.sin()],
        DomainKind::UnitSquare => polyline_point(&SQUARE, t),
        DomainKind::LShape => polyline_point(&LSHAPE, t),
        DomainKind::UnitCube => unreachable!("checked by caller"),
    }
}

fn polyline_point(verts: &[[f64; 2]], t: f64) -> [f64; 2] {
    let mut rest = t;
    for w in verts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if rest < len {
            let s = rest / len;
            return [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        }
        rest -= len;
    }
    verts[verts.len() - 1]
}

/// Arc-length parameter of a point on the boundary (inverse of
/// [`boundary_point`]). Disk points off the circle are projected radially.
pub fn boundary_param(kind: DomainKind, p: [f64; 2]) -> Result<f64> {
    let polyline: &[[f64; 2]] = match kind {
        DomainKind::UnitDisk => {
            if p[0] == 0.0 && p[1] == 0.0 {
                return Err(MadError::invalid("the disk center has no boundary projection"));
            }
            return Ok(p[1].atan2(p[0]).rem_euclid(TAU) % TAU);
        }
        DomainKind::UnitSquare => &SQUARE,
        DomainKind::LShape => &LSHAPE,
        DomainKind::UnitCube => {
            return Err(MadError::UnsupportedDomain {
                domain: kind.name(),
                reason: "no arc-length parameterization in 3D",
            })
        }
    };
    let mut start = 0.0;
    for w in polyline.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        let s = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (len * len);
        if (0.0..=1.0).contains(&s) {
            let off = distance(&p, &[a[0] + s * dx, a[1] + s * dy]);
            if off <= ON_BOUNDARY_TOL {
                return Ok((start + s * len) % kind.boundary_measure());
            }
        }
        start += len;
    }
    Err(MadError::invalid(format!("point ({}, {}) is not on the boundary", p[0], p[1])))
}

pub fn exterior_centers(kind: DomainKind, count: usize, offset: f64) -> Result<PointSet> {
    if count == 0 {
        return Err(MadError::invalid("center count must be >= 1"));
    }
    if !(offset > 0.0) {
        return Err(MadError::invalid("center offset must be > 0"));
    }
    let c = kind.centroid();
    let radius = kind.circumradius() + offset;
    let mut out = PointSet::new(kind.dim());
    if kind.dim() == 2 {
        for i in 0..count {
            let theta = TAU * i as f64 / count as f64;
            out.push(&[c[0] + radius * theta.cos(), c[1] + radius * theta.sin()]);
        }
    } else {
        // Fibonacci lattice on the sphere.
        let golden = PI * (3.0 - 5f64.sqrt());
        for i in 0..count {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            out.push(&[
                c[0] + radius * r * phi.cos(),
                c[1] + radius * r * phi.sin(),
                c[2] + radius * z,
            ]);
        }
    }
    Ok(out)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
