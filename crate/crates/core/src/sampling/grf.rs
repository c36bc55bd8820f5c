//! Random inputs for the physics-loss baseline and the FD test sets:
//! Gaussian-random-field boundary data and Gaussian-smoothed sources.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MadError, Result};
use crate::geometry::Domain;
use crate::rng::{normals, rng_from_seed};

const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrfConfig {
    pub length_scale: f64,
    /// First diagonal shift tried; escalates to 1e-8 and 1e-6 on failure.
    pub jitter: f64,
    /// Measure distances along the boundary in units of its total length
    /// (parameter in `[0, 1]`) instead of raw arc length.
    pub normalized: bool,
}

impl Default for GrfConfig {
    fn default() -> Self {
        GrfConfig {
            length_scale: 0.1,
            jitter: 1e-10,
            normalized: true,
        }
    }
}

impl GrfConfig {
    fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0) || !(self.jitter >= 0.0) {
            return Err(MadError::invalid("GRF needs length_scale > 0 and jitter >= 0"));
        }
        Ok(())
    }
}

pub fn rbf(a: f64, b: f64, l: f64) -> f64 {
    (-(a - b) * (a - b) / (2.0 * l * l)).exp()
}

/// Pre-factored GRF on a fixed set of boundary parameters.
///
/// The field is drawn at the `Mb` parameters plus the closing endpoint
/// `t = L`, the linear interpolant between the two ends is subtracted so
/// both ends agree, and the endpoint is dropped again.
#[derive(Clone, Debug)]
pub struct GrfSampler {
    // scaled parameters, endpoint last
    s: Vec<f64>,
    factor: DMatrix<f64>,
    jitter_used: f64,
}

impl GrfSampler {
    pub fn new(params: &[f64], length: f64, cfg: &GrfConfig) -> Result<Self> {
        cfg.validate()?;
        if params.len() < 2 {
            return Err(MadError::invalid("GRF needs at least 2 boundary points"));
        }
        let scale = if cfg.normalized { 1.0 / length } else { 1.0 };
        let mut s: Vec<f64> = params.iter().map(|t| t * scale).collect();
        s.push(length * scale);
        let n = s.len();
        let k = DMatrix::from_fn(n, n, |i, j| rbf(s[i], s[j], cfg.length_scale));
        let mut ladder = vec![cfg.jitter];
        ladder.extend(JITTER_LADDER.iter().copied().filter(|&j| j > cfg.jitter));
        for &jitter in &ladder {
            let shifted = &k + DMatrix::identity(n, n) * jitter;
            if let Some(chol) = shifted.cholesky() {
                return Ok(GrfSampler {
                    s,
                    factor: chol.unpack(),
                    jitter_used: jitter,
                });
            }
        }
        Err(MadError::Factorization {
            jitter: *ladder.last().unwrap(),
        })
    }

    pub fn for_domain(d: &Domain, cfg: &GrfConfig) -> Result<Self> {
        if d.dim() != 2 {
            return Err(MadError::UnsupportedDomain {
                domain: d.kind().name(),
                reason: "boundary GRF needs a 1D boundary parameterization",
            });
        }
        Self::new(d.boundary_params(), d.boundary_length(), cfg)
    }

    pub fn len(&self) -> usize {
        self.s.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// Raw draw at the parameters and the endpoint, before correction.
    pub fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DMatrix::from_vec(self.s.len(), 1, normals(rng, self.s.len()));
        (&self.factor * z).as_slice().to_vec()
    }

    /// Endpoint-corrected values at the `len() + 1` parameters; the last
    /// entry (the wrapped endpoint) equals the first.
    pub fn draw_closed<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let v = self.draw_raw(rng);
        let n = self.len();
        let (s0, s1) = (self.s[0], self.s[n]);
        let jump = v[n] - v[0];
        let mut g: Vec<f64> = (0..n).map(|i| v[i] - (self.s[i] - s0) / (s1 - s0) * jump).collect();
        g.push(g[0]);
        g
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut g = self.draw_closed(rng);
        g.pop();
        g
    }

    /// Covariance of `draw()` including the endpoint correction: `A K A^T`
    /// with `A = [I | 0] - w (e_end - e_0)^T`, `w_i = (s_i - s_0)/(s_end - s_0)`.
    pub fn corrected_covariance(&self, cfg: &GrfConfig) -> DMatrix<f64> {
        let n = self.len();
        let m = n + 1;
        let (s0, s1) = (self.s[0], self.s[n]);
        let a = DMatrix::from_fn(n, m, |i, j| {
            let w = (self.s[i] - s0) / (s1 - s0);
            let mut v = if i == j { 1.0 } else { 0.0 };
            if j == n {
                v -= w;
            }
            if j == 0 {
                v += w;
            }
            v
        });
        let k = DMatrix::from_fn(m, m, |i, j| rbf(self.s[i], self.s[j], cfg.length_scale));
        &a * k * a.transpose()
    }
}

pub fn sample_grf_boundary(d: &Domain, cfg: &GrfConfig, seed: u64) -> Result<Vec<f64>> {
    let sampler = GrfSampler::for_domain(d, cfg)?;
    Ok(sampler.draw(&mut rng_from_seed(seed)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Kernel width in lattice-index units.
    pub sigma: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { sigma: 5.0 }
    }
}

impl SmoothingConfig {
    pub fn radius(&self) -> usize {
        (4.0 * self.sigma).ceil() as usize
    }

    pub fn weights(&self) -> Vec<f64> {
        let r = self.radius() as isize;
        (-r..=r)
            .map(|j| (-((j * j) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect()
    }
}

fn smooth_axis(src: &[f64], dst: &mut [f64], res: usize, w: &[f64], stride: usize, step: usize) {
    let r = (w.len() / 2) as isize;
    for line in 0..res {
        let base = line * stride;
        for i in 0..res as isize {
            let (mut acc, mut norm) = (0.0, 0.0);
            for j in (-r).max(-i)..=r.min(res as isize - 1 - i) {
                let wj = w[(j + r) as usize];
                acc += wj * src[base + (i + j) as usize * step];
                norm += wj;
            }
            dst[base + i as usize * step] = acc / norm;
        }
    }
}

/// Separable Gaussian smoothing of a `res x res` lattice field (row-major,
/// `field[i * res + j]`), with the kernel renormalized where it is cut off
/// by the lattice edge.
pub fn smooth_lattice(field: &[f64], res: usize, cfg: &SmoothingConfig) -> Result<Vec<f64>> {
    if !(cfg.sigma > 0.0) {
        return Err(MadError::invalid("smoothing sigma must be > 0"));
    }
    if field.len() != res * res {
        return Err(MadError::DimensionMismatch {
            what: "lattice field",
            expected: res * res,
            got: field.len(),
        });
    }
    let w = cfg.weights();
    let mut tmp = vec![0.0; field.len()];
    let mut out = vec![0.0; field.len()];
    // along j (contiguous), then along i
    smooth_axis(field, &mut tmp, res, &w, res, 1);
    smooth_axis(&tmp, &mut out, res, &w, 1, res);
    Ok(out)
}

/// Smoothed white noise on the full lattice, restricted to the domain nodes.
pub fn sample_smoothed_source(d: &Domain, cfg: &SmoothingConfig, seed: u64) -> Result<Vec<f64>> {
    if d.dim() != 2 {
        return Err(MadError::UnsupportedDomain {
            domain: d.kind().name(),
            reason: "smoothed sources are 2D only",
        });
    }
    let res = d.grid().resolution;
    let raw = normals(&mut rng_from_seed(seed), res * res);
    let smooth = smooth_lattice(&raw, res, cfg)?;
    Ok((0..d.node_count())
        .map(|n| {
            let [i, j, _] = d.lattice_index(n);
            smooth[i * res + j]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainKind, GridSpec};

    #[test]
    fn kernel_at_one_length_scale() {
        assert!((rbf(0.3, 0.4, 0.1) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((rbf(0.3, 0.4, 0.1) - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn endpoints_match_exactly() {
        let d = Domain::build(DomainKind::UnitSquare, GridSpec::new(21, 80)).unwrap();
        for cfg in [GrfConfig::default(), GrfConfig { normalized: false, ..GrfConfig::default() }] {
            let s = GrfSampler::for_domain(&d, &cfg).unwrap();
            for seed in 0..20 {
                let g = s.draw_closed(&mut rng_from_seed(seed));
                assert_eq!(g.len(), 81);
                assert_eq!(g[0], g[80]);
            }
        }
    }

    #[test]
    fn rejects_bad_config_and_3d() {
        let bad = GrfConfig { length_scale: 0.0, ..GrfConfig::default() };
        assert!(GrfSampler::new(&[0.0, 0.5], 1.0, &bad).is_err());
        let cube = Domain::build(DomainKind::UnitCube, GridSpec::new(5, 0)).unwrap();
        assert!(sample_grf_boundary(&cube, &GrfConfig::default(), 1).is_err());
    }

    #[test]
    fn smoothing_preserves_constants_and_tiny_sigma_is_identity() {
        let res = 13;
        let c = vec![2.5; res * res];
        let s = smooth_lattice(&c, res, &SmoothingConfig::default()).unwrap();
        assert!(s.iter().all(|v| (v - 2.5).abs() < 1e-14));
        let raw = normals(&mut rng_from_seed(4), res * res);
        let s = smooth_lattice(&raw, res, &SmoothingConfig { sigma: 1e-3 }).unwrap();
        assert!(raw.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}
