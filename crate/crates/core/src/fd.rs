//! Five-point finite-difference reference solver for `lap u + k u = f`
//! with Dirichlet data, and the stencil residual used as an exactness oracle.
//!
//! Unknowns are the strictly interior lattice nodes. Every other lattice
//! node is Dirichlet: boundary nodes carry `g` at their own position, and
//! (for the disk) nodes outside the region carry `g` at their radial
//! projection onto the circle.
//!
//! Where a lattice edge leaves the disk between an unknown `P` and an
//! outside node, problems built from boundary functions record the exact
//! crossing at fraction `theta` of the edge. The outside value is replaced by
//! the linear extrapolation `u_G = (g_c + (theta - 1) u_P) / theta` through
//! `P` and the crossing, which only touches the diagonal and right-hand side
//! of row `P`: the system stays symmetric and the scheme second order.

use serde::{Deserialize, Serialize};

use crate::equation::EquationSpec;
use crate::error::{MadError, Result};
use std::collections::HashMap;

use crate::geometry::{boundary_param, Domain, DomainKind, GridSpec, NodeRole};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const DIRICHLET: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct FdProblem {
    domain: Domain,
    eq: EquationSpec,
    /// Values on the full `res x res` lattice; read only at Dirichlet nodes.
    dirichlet: Vec<f64>,
    /// Source on the full lattice; read only at unknowns.
    source: Option<Vec<f64>>,
    /// `(lattice index of P, direction)` -> `(theta, g at the crossing)`,
    /// directions ordered `-i, +i, -j, +j`.
    cuts: HashMap<(usize, u8), (f64, f64)>,
}

impl FdProblem {
    /// `res x res` lattice over the bounding box of `kind`.
    pub fn lattice(kind: DomainKind, resolution: usize) -> Result<Domain> {
        if kind.dim() != 2 {
            return Err(MadError::UnsupportedDomain {
                domain: kind.name(),
                reason: "the FD oracle is 2D",
            });
        }
        if kind == DomainKind::LShape && (resolution - 1) % 2 != 0 {
            return Err(MadError::invalid(
                "L-shape lattice needs an even number of intervals so the re-entrant edges are lattice lines",
            ));
        }
        Domain::build(kind, GridSpec::new(resolution, 4))
    }

    pub fn new(
        kind: DomainKind,
        resolution: usize,
        eq: EquationSpec,
        dirichlet: Vec<f64>,
        source: Option<Vec<f64>>,
    ) -> Result<Self> {
        let domain = Self::lattice(kind, resolution)?;
        let total = resolution * resolution;
        if dirichlet.len() != total {
            return Err(MadError::DimensionMismatch {
                what: "Dirichlet lattice values",
                expected: total,
                got: dirichlet.len(),
            });
        }
        if let Some(f) = &source {
            if f.len() != total {
                return Err(MadError::DimensionMismatch {
                    what: "source lattice values",
                    expected: total,
                    got: f.len(),
                });
            }
        }
        if dirichlet.iter().any(|v| !v.is_finite()) {
            return Err(MadError::invalid("Dirichlet values must be finite"));
        }
        Ok(FdProblem {
            domain,
            eq,
            dirichlet,
            source,
            cuts: HashMap::new(),
        })
    }

    /// Dirichlet data from a function of the boundary point and an optional
    /// source function of position.
    pub fn from_functions<G, F>(
        kind: DomainKind,
        resolution: usize,
        eq: EquationSpec,
        g: G,
        f: Option<F>,
    ) -> Result<Self>
    where
        G: Fn([f64; 2]) -> f64,
        F: Fn([f64; 2]) -> f64,
    {
        let (lo, hi) = kind.bounds();
        let h = (hi - lo) / (resolution - 1) as f64;
        let at = |i: usize, j: usize| [lo + i as f64 * h, lo + j as f64 * h];
        let domain = Self::lattice(kind, resolution)?;
        let mut dirichlet = vec![0.0; resolution * resolution];
        for i in 0..resolution {
            for j in 0..resolution {
                let interior = domain
                    .node_at([i, j, 0])
                    .is_some_and(|n| domain.roles()[n] == NodeRole::Interior);
                if !interior {
                    dirichlet[i * resolution + j] = g(project(kind, at(i, j)));
                }
            }
        }
        let source = f.map(|f| {
            (0..resolution * resolution)
                .map(|n| f(at(n / resolution, n % resolution)))
                .collect()
        });
        let mut cuts = HashMap::new();
        if kind == DomainKind::UnitDisk {
            for n in domain.interior_indices() {
                let [i, j, _] = domain.lattice_index(n);
                for (dir, (di, dj)) in STEPS.into_iter().enumerate() {
                    let (qi, qj) = (i as isize + di, j as isize + dj);
                    if domain.node_at([qi as usize, qj as usize, 0]).is_some() {
                        continue;
                    }
                    let p = at(i, j);
                    let e = [di as f64, dj as f64];
                    // |p + t e| = 1 with t in (0, h]
                    let pe = p[0] * e[0] + p[1] * e[1];
                    let t = -pe + (pe * pe - (p[0] * p[0] + p[1] * p[1] - 1.0)).sqrt();
                    let theta = (t / h).clamp(f64::EPSILON, 1.0);
                    let c = project(kind, [p[0] + t * e[0], p[1] + t * e[1]]);
                    cuts.insert((i * resolution + j, dir as u8), (theta, g(c)));
                }
            }
        }
        let mut problem = Self::new(kind, resolution, eq, dirichlet, source)?;
        problem.cuts = cuts;
        Ok(problem)
    }

    /// Dirichlet data from boundary samples `values[i]` at arc-length
    /// parameters `params[i]` (increasing, in `[0, L)`), interpolated
    /// linearly and periodically along the boundary.
    pub fn from_boundary_samples(
        kind: DomainKind,
        resolution: usize,
        eq: EquationSpec,
        params: &[f64],
        values: &[f64],
        source: Option<Vec<f64>>,
    ) -> Result<Self> {
        if params.len() != values.len() || params.is_empty() {
            return Err(MadError::DimensionMismatch {
                what: "boundary samples",
                expected: params.len(),
                got: values.len(),
            });
        }
        let length = kind.boundary_measure();
        let interp = |p: [f64; 2]| -> Result<f64> {
            let t = boundary_param(kind, p)?;
            Ok(periodic_interp(params, values, length, t))
        };
        let failed = std::cell::RefCell::new(None);
        let mut problem = Self::from_functions(
            kind,
            resolution,
            eq,
            |p| {
                interp(p).unwrap_or_else(|e| {
                    failed.borrow_mut().get_or_insert(e);
                    0.0
                })
            },
            None::<fn([f64; 2]) -> f64>,
        );
        if let Some(e) = failed.into_inner() {
            return Err(e);
        }
        if let (Ok(p), Some(f)) = (&mut problem, source) {
            if f.len() != resolution * resolution {
                return Err(MadError::DimensionMismatch {
                    what: "source lattice values",
                    expected: resolution * resolution,
                    got: f.len(),
                });
            }
            p.source = Some(f);
        }
        problem
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.domain.grid().resolution
    }

    pub fn spacing(&self) -> f64 {
        self.domain.spacing()
    }

    pub fn equation(&self) -> &EquationSpec {
        &self.eq
    }
}

const STEPS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Nearest boundary point for lattice nodes on or outside the boundary.
fn project(kind: DomainKind, p: [f64; 2]) -> [f64; 2] {
    match kind {
        DomainKind::UnitDisk => {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r == 0.0 {
                p
            } else {
                [p[0] / r, p[1] / r]
            }
        }
        _ => p,
    }
}

/// Linear interpolation of periodic boundary samples at parameter `t`.
pub fn periodic_interp(params: &[f64], values: &[f64], length: f64, t: f64) -> f64 {
    let n = params.len();
    // first index with params[idx] > t
    let idx = params.partition_point(|&s| s <= t);
    let (t0, v0, t1, v1) = if idx == 0 {
        (params[n - 1] - length, values[n - 1], params[0], values[0])
    } else if idx == n {
        (params[n - 1], values[n - 1], params[0] + length, values[0])
    } else {
        (params[idx - 1], values[idx - 1], params[idx], values[idx])
    };
    if t == t0 {
        return v0;
    }
    v0 + (t - t0) / (t1 - t0) * (v1 - v0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdSolution {
    pub resolution: usize,
    /// Solution on the full lattice (`u[i * res + j]`); Dirichlet nodes hold
    /// their prescribed values.
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `|b - A u| / |b|` of the reduced system
    /// (diagonally scaled for MINRES).
    pub residual: f64,
}

impl FdSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.resolution + j]
    }

    /// Values at the nodes of a coarser domain whose lattice is a
    /// sub-lattice of this one.
    pub fn sample_on(&self, d: &Domain) -> Result<Vec<f64>> {
        let rc = d.grid().resolution;
        let fine = self.resolution - 1;
        let coarse = rc - 1;
        if d.dim() != 2 || fine % coarse != 0 {
            return Err(MadError::invalid(format!(
                "lattice {rc} is not a sub-lattice of {}",
                self.resolution
            )));
        }
        let m = fine / coarse;
        Ok((0..d.node_count())
            .map(|n| {
                let [i, j, _] = d.lattice_index(n);
                self.at(m * i, m * j)
            })
            .collect())
    }
}

/// Five-point operator restricted to the unknowns. Dirichlet neighbours
/// point at a ghost slot `n` that every operand keeps at zero.
struct Stencil {
    unknowns: Vec<usize>,
    nbr: Vec<[u32; 4]>,
    /// Per-row diagonal; rows next to a cut edge carry the extrapolation term.
    diag: Vec<f64>,
    inv_h2: f64,
    /// When set, `apply` is `S A S` with `S = diag(scale)`; the ghost slot
    /// has scale zero.
    scale: Option<Vec<f64>>,
}

impl Stencil {
    fn new(p: &FdProblem) -> Self {
        let d = &p.domain;
        let res = p.resolution();
        let mut slot = vec![DIRICHLET; res * res];
        let mut unknowns = Vec::new();
        for n in d.interior_indices() {
            let [i, j, _] = d.lattice_index(n);
            slot[i * res + j] = unknowns.len() as u32;
            unknowns.push(i * res + j);
        }
        let ghost = unknowns.len() as u32;
        let to_ghost = |s: u32| if s == DIRICHLET { ghost } else { s };
        let nbr: Vec<[u32; 4]> = unknowns
            .iter()
            .map(|&l| [slot[l - res], slot[l + res], slot[l - 1], slot[l + 1]].map(to_ghost))
            .collect();
        let h = p.spacing();
        let inv_h2 = 1.0 / (h * h);
        let diag = unknowns
            .iter()
            .map(|&l| {
                let extra: f64 = (0..4u8)
                    .filter_map(|dir| p.cuts.get(&(l, dir)))
                    .map(|&(theta, _)| (1.0 - 1.0 / theta) * inv_h2)
                    .sum();
                -4.0 * inv_h2 + p.eq.k + extra
            })
            .collect();
        Stencil {
            unknowns,
            nbr,
            diag,
            inv_h2,
            scale: None,
        }
    }

    fn jacobi_scale(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.diag.iter().map(|d| 1.0 / d.abs().sqrt()).collect();
        s.push(0.0);
        s
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x[self.nbr.len()], 0.0);
        match &self.scale {
            None => {
                for (i, nb) in self.nbr.iter().enumerate() {
                    let s = x[nb[0] as usize] + x[nb[1] as usize] + x[nb[2] as usize] + x[nb[3] as usize];
                    y[i] = s * self.inv_h2 + self.diag[i] * x[i];
                }
            }
            Some(c) => {
                for (i, nb) in self.nbr.iter().enumerate() {
                    let s = nb.iter().map(|&j| c[j as usize] * x[j as usize]).sum::<f64>();
                    y[i] = c[i] * (s * self.inv_h2 + self.diag[i] * c[i] * x[i]);
                }
            }
        }
    }

    fn rhs(&self, p: &FdProblem) -> Vec<f64> {
        let res = p.resolution();
        self.unknowns
            .iter()
            .zip(&self.nbr)
            .map(|(&l, nb)| {
                let mut b = p.source.as_ref().map_or(0.0, |f| f[l]);
                let ghost = self.unknowns.len() as u32;
                for (dir, (&j, l2)) in nb.iter().zip([l - res, l + res, l - 1, l + 1]).enumerate() {
                    if j == ghost {
                        b -= match p.cuts.get(&(l, dir as u8)) {
                            Some(&(theta, g)) => g / theta,
                            None => p.dirichlet[l2],
                        } * self.inv_h2;
                    }
                }
                b
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KrylovMethod {
    /// Jacobi-preconditioned BiCGSTAB.
    BiCgStab,
    /// Minimal-residual recurrence on the symmetrically Jacobi-scaled
    /// system. The operator is symmetric, so this also handles the
    /// indefinite Helmholtz shift, where BiCGSTAB needs about ten times
    /// as many iterations at k = 100.
    #[default]
    Minres,
}

impl std::str::FromStr for KrylovMethod {
    type Err = MadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bicgstab" => Ok(KrylovMethod::BiCgStab),
            "minres" => Ok(KrylovMethod::Minres),
            other => Err(MadError::invalid(format!("unknown Krylov method '{other}'"))),
        }
    }
}

/// Solves with the default method (MINRES). The Helmholtz shift makes the
/// operator indefinite for large `k`, which rules out CG.
pub fn solve_fd(p: &FdProblem, tol: f64, max_iter: usize) -> Result<FdSolution> {
    solve_fd_with(p, KrylovMethod::default(), tol, max_iter)
}

pub fn solve_fd_with(p: &FdProblem, method: KrylovMethod, tol: f64, max_iter: usize) -> Result<FdSolution> {
    if !(tol > 0.0) {
        return Err(MadError::invalid("tolerance must be > 0"));
    }
    let mut a = Stencil::new(p);
    let b = a.rhs(p);
    let (x, iterations, residual) = if norm(&b) > 0.0 {
        match method {
            KrylovMethod::BiCgStab => bicgstab(&a, &b, tol, max_iter)?,
            KrylovMethod::Minres => {
                let c = a.jacobi_scale();
                let bs: Vec<f64> = b.iter().zip(&c).map(|(b, c)| b * c).collect();
                a.scale = Some(c);
                let (mut y, it, res) = minres(&a, &bs, tol, max_iter)?;
                for (y, c) in y.iter_mut().zip(a.scale.as_ref().unwrap()) {
                    *y *= c;
                }
                (y, it, res)
            }
        }
    } else {
        (vec![0.0; b.len() + 1], 0, 0.0)
    };
    let mut u = p.dirichlet.clone();
    for (&l, &xi) in a.unknowns.iter().zip(&x) {
        u[l] = xi;
    }
    Ok(FdSolution {
        resolution: p.resolution(),
        u,
        iterations,
        residual,
    })
}

/// `|b - A x| / |b|`, leaving `b - A x` in `r`.
fn true_residual(a: &Stencil, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(r) / norm(b)
}

// Operands of `apply` carry the zero ghost slot at index n.
fn bicgstab(a: &Stencil, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let bnorm = norm(b);
    let inv_d: Vec<f64> = a.diag.iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n + 1];
    let mut r = b.to_vec();
    let (mut v, mut pv, mut y, mut s, mut z, mut t) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n + 1], vec![0.0; n], vec![0.0; n + 1], vec![0.0; n]);
    let mut iterations = 0;
    'restart: loop {
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        v.fill(0.0);
        pv.fill(0.0);
        loop {
            if iterations >= max_iter {
                let residual = true_residual(a, b, &x, &mut r);
                return Err(MadError::NotConverged { iterations, residual });
            }
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                pv[i] = r[i] + beta * (pv[i] - omega * v[i]);
                y[i] = pv[i] * inv_d[i];
            }
            a.apply(&y, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 {
                continue 'restart;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
                x[i] += alpha * y[i];
            }
            if norm(&s) / bnorm <= tol {
                r.copy_from_slice(&s);
            } else {
                for i in 0..n {
                    z[i] = s[i] * inv_d[i];
                }
                a.apply(&z, &mut t);
                let tt = dot(&t, &t);
                omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
                for i in 0..n {
                    x[i] += omega * z[i];
                    r[i] = s[i] - omega * t[i];
                }
                if norm(&r) / bnorm > tol {
                    continue;
                }
            }
            // the recursive residual says done; confirm with the true one
            let residual = true_residual(a, b, &x, &mut r);
            if residual <= tol {
                return Ok((x, iterations, residual));
            }
            continue 'restart;
        }
    }
}

fn minres(a: &Stencil, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n + 1];
    let mut r = b.to_vec();
    let mut iterations = 0;
    let (mut p0, mut p1, mut p2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut s0, mut s1, mut s2) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
    loop {
        // (re)start from the current iterate
        p0[..n].copy_from_slice(&r);
        let mut rr = r.clone();
        rr.push(0.0);
        a.apply(&rr, &mut s0[..n]);
        p1.copy_from_slice(&p0);
        s1.copy_from_slice(&s0);
        let mut first = true;
        loop {
            if iterations >= max_iter {
                let residual = true_residual(a, b, &x, &mut r);
                return Err(MadError::NotConverged { iterations, residual });
            }
            iterations += 1;
            std::mem::swap(&mut p2, &mut p1);
            std::mem::swap(&mut p1, &mut p0);
            std::mem::swap(&mut s2, &mut s1);
            std::mem::swap(&mut s1, &mut s0);
            let ss = dot(&s1[..n], &s1[..n]);
            if ss == 0.0 {
                break;
            }
            let alpha = dot(&r, &s1[..n]) / ss;
            for i in 0..n {
                x[i] += alpha * p1[i];
                r[i] -= alpha * s1[i];
            }
            if norm(&r) / bnorm <= tol {
                let residual = true_residual(a, b, &x, &mut r);
                if residual <= tol {
                    return Ok((x, iterations, residual));
                }
                break;
            }
            p0.copy_from_slice(&s1[..n]);
            a.apply(&s1, &mut s0[..n]);
            let beta1 = dot(&s0[..n], &s1[..n]) / ss;
            for i in 0..n {
                p0[i] -= beta1 * p1[i];
                s0[i] -= beta1 * s1[i];
            }
            if !first {
                let beta2 = dot(&s0[..n], &s2[..n]) / dot(&s2[..n], &s2[..n]);
                for i in 0..n {
                    p0[i] -= beta2 * p2[i];
                    s0[i] -= beta2 * s2[i];
                }
            }
            // keep the directions O(1); only their span matters
            let scale = 1.0 / norm(&s0[..n]);
            for i in 0..n {
                p0[i] *= scale;
                s0[i] *= scale;
            }
            first = false;
        }
    }
}

/// Stencil residual `lap_h u + k u - f` at the interior nodes of `d` whose
/// `2 * dim` lattice neighbours all belong to the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct FdResidual {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

impl FdResidual {
    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn fd_residual(d: &Domain, u: &[f64], eq: &EquationSpec, f: Option<&[f64]>) -> Result<FdResidual> {
    let m = d.node_count();
    if u.len() != m {
        return Err(MadError::DimensionMismatch {
            what: "field on domain nodes",
            expected: m,
            got: u.len(),
        });
    }
    if let Some(f) = f {
        if f.len() != m {
            return Err(MadError::DimensionMismatch {
                what: "source on domain nodes",
                expected: m,
                got: f.len(),
            });
        }
    }
    let dim = d.dim();
    let inv_h2 = 1.0 / (d.spacing() * d.spacing());
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    'nodes: for n in d.interior_indices() {
        let idx = d.lattice_index(n);
        let mut s = -2.0 * dim as f64 * u[n];
        for axis in 0..dim {
            for up in [false, true] {
                let mut nb = idx;
                nb[axis] = if up { nb[axis] + 1 } else { nb[axis] - 1 };
                match d.node_at(nb) {
                    Some(j) => s += u[j],
                    None => continue 'nodes,
                }
            }
        }
        nodes.push(n);
        values.push(s * inv_h2 + eq.k * u[n] - f.map_or(0.0, |f| f[n]));
    }
    Ok(FdResidual { nodes, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(p: [f64; 2]) -> f64 {
        p[0] + p[1]
    }

    #[test]
    fn affine_data_is_reproduced() {
        for kind in [DomainKind::UnitSquare, DomainKind::LShape] {
            let p = FdProblem::from_functions(kind, 21, EquationSpec::laplace(), affine, None::<fn([f64; 2]) -> f64>)
                .unwrap();
            let sol = solve_fd(&p, 1e-12, 10_000).unwrap();
            let d = p.domain();
            for (n, x) in d.nodes().iter().enumerate() {
                let [i, j, _] = d.lattice_index(n);
                assert!((sol.at(i, j) - (x[0] + x[1])).abs() < 1e-9, "{kind}");
            }
        }
    }

    #[test]
    fn residual_of_quadratic_is_two() {
        let d = Domain::build(DomainKind::UnitSquare, GridSpec::new(11, 40)).unwrap();
        let u: Vec<f64> = d.nodes().iter().map(|x| x[0] * x[0]).collect();
        let r = fd_residual(&d, &u, &EquationSpec::laplace(), None).unwrap();
        assert_eq!(r.nodes.len(), 81);
        assert!(r.values.iter().all(|v| (v - 2.0).abs() < 1e-10));
        let u: Vec<f64> = d.nodes().iter().map(|x| 3.0 * x[0] - x[1] + 1.0).collect();
        assert!(fd_residual(&d, &u, &EquationSpec::laplace(), None).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let p = FdProblem::new(
            DomainKind::UnitSquare,
            11,
            EquationSpec::helmholtz(100.0).unwrap(),
            vec![0.0; 121],
            None,
        )
        .unwrap();
        let sol = solve_fd(&p, 1e-10, 10).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let p = FdProblem::from_functions(
            DomainKind::UnitSquare,
            41,
            EquationSpec::helmholtz(100.0).unwrap(),
            |p| (6.0 * p[0]).cos() * (8.0 * p[1]).sin(),
            None::<fn([f64; 2]) -> f64>,
        )
        .unwrap();
        assert!(matches!(solve_fd(&p, 1e-10, 3), Err(MadError::NotConverged { iterations: 3, .. })));
        assert!(matches!(
            solve_fd_with(&p, KrylovMethod::Minres, 1e-10, 3),
            Err(MadError::NotConverged { iterations: 3, .. })
        ));
    }

    #[test]
    fn methods_agree() {
        let p = FdProblem::from_functions(
            DomainKind::UnitDisk,
            41,
            EquationSpec::helmholtz(30.0).unwrap(),
            |p| (3.0 * p[0]).cos() + p[1],
            Some(|p: [f64; 2]| p[0] * p[1]),
        )
        .unwrap();
        let a = solve_fd_with(&p, KrylovMethod::BiCgStab, 1e-12, 100_000).unwrap();
        let b = solve_fd_with(&p, KrylovMethod::Minres, 1e-12, 100_000).unwrap();
        assert!(a.residual <= 1e-12 && b.residual <= 1e-12);
        let diff = a.u.iter().zip(&b.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn periodic_interpolation_wraps() {
        let params = [0.0, 1.0, 2.0, 3.0];
        let values = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(periodic_interp(&params, &values, 4.0, 2.0), 2.0);
        assert!((periodic_interp(&params, &values, 4.0, 3.5) - 1.5).abs() < 1e-15);
        assert!((periodic_interp(&params, &values, 4.0, 0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lshape_needs_even_intervals() {
        assert!(FdProblem::lattice(DomainKind::LShape, 20).is_err());
        assert!(FdProblem::lattice(DomainKind::UnitCube, 5).is_err());
    }
}
