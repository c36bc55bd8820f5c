//! Analytic samplers: every record is an exact solution of its equation.

use rand::Rng;

use crate::equation::{EquationSpec, SourceMode};
use crate::error::{MadError, Result};
use crate::geometry::{distance, Domain, PointSet};
use crate::rng::{normal, rng_from_seed};
use crate::special::{bessel_j0_y0, KernelId};

use super::FieldSample;

pub const DEFAULT_CENTER_OFFSET: f64 = 0.5;
pub const MAD2_MAX_RATE: f64 = 6.0;
pub const MAD2_DEFAULT_TERMS: usize = 10;

pub fn default_center_count(dim: usize) -> usize {
    if dim == 3 {
        400
    } else {
        100
    }
}

/// A `[d, 50, 50, 1]` fully connected net with sine on every layer,
/// used as a closed-form solution whose Laplacian is known exactly.
#[derive(Clone, Debug)]
pub struct SineNetSolution {
    sizes: Vec<usize>,
    // row-major (out, in)
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl SineNetSolution {
    pub const HIDDEN: [usize; 2] = [50, 50];

    fn layer_sizes(dim: usize) -> Vec<usize> {
        let mut s = vec![dim];
        s.extend(Self::HIDDEN);
        s.push(1);
        s
    }

    /// Weights `N(0, 1/fan_in)`, biases `N(0, 1)`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let sizes = Self::layer_sizes(dim);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let scale = (1.0 / w[0] as f64).sqrt();
            weights.push((0..w[0] * w[1]).map(|_| scale * normal(rng)).collect());
            biases.push((0..w[1]).map(|_| normal(rng)).collect());
        }
        SineNetSolution { sizes, weights, biases }
    }

    pub fn zeros(dim: usize) -> Self {
        let sizes = Self::layer_sizes(dim);
        let weights = sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = sizes.windows(2).map(|w| vec![0.0; w[1]]).collect();
        SineNetSolution { sizes, weights, biases }
    }

    pub fn dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for (l, w) in self.sizes.windows(2).enumerate() {
            a = (0..w[1])
                .map(|o| {
                    let row = &self.weights[l][o * w[0]..(o + 1) * w[0]];
                    row.iter().zip(&a).fold(self.biases[l][o], |z, (p, q)| z + p * q).sin()
                })
                .collect();
        }
        a[0]
    }

    /// `(u, lap u)` by pushing value, gradient and Laplacian through each
    /// layer: `lap sin(z) = cos(z) lap z - sin(z) |grad z|^2`.
    pub fn value_and_laplacian(&self, x: &[f64]) -> (f64, f64) {
        let d = self.dim();
        let mut a = x.to_vec();
        // grad[i * d + j] = d a_i / d x_j
        let mut grad = vec![0.0; d * d];
        for j in 0..d {
            grad[j * d + j] = 1.0;
        }
        let mut lap = vec![0.0; d];
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let mut a2 = vec![0.0; n_out];
            let mut g2 = vec![0.0; n_out * d];
            let mut l2 = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                let mut z = self.biases[l][o];
                let mut gz = vec![0.0; d];
                let mut lz = 0.0;
                for (i, &wi) in row.iter().enumerate() {
                    z += wi * a[i];
                    lz += wi * lap[i];
                    for j in 0..d {
                        gz[j] += wi * grad[i * d + j];
                    }
                }
                let (s, c) = z.sin_cos();
                let gz2: f64 = gz.iter().map(|v| v * v).sum();
                a2[o] = s;
                for j in 0..d {
                    g2[o * d + j] = c * gz[j];
                }
                l2[o] = c * lz - s * gz2;
            }
            a = a2;
            grad = g2;
            lap = l2;
        }
        (a[0], lap[0])
    }
}

/// `u(x) = sum_i sum_k c_{i,k} Phi_k(x, y_i)` over exterior centers `y_i`.
#[derive(Clone, Debug)]
pub struct FundamentalExpansion {
    kernels: Vec<KernelId>,
    centers: PointSet,
    /// `coeffs[i * kernels.len() + k]`
    coeffs: Vec<f64>,
}

impl FundamentalExpansion {
    /// Kernel basis for `eq` in `dim` dimensions: one Laplace kernel, or the
    /// `J0`/`Y0` pair for Helmholtz.
    pub fn basis(eq: &EquationSpec, dim: usize) -> Result<Vec<KernelId>> {
        if eq.k < 0.0 {
            return Err(MadError::invalid("k must be >= 0"));
        }
        match (eq.k > 0.0, dim) {
            (false, 2) => Ok(vec![KernelId::Log2D]),
            (false, 3) => Ok(vec![KernelId::Newton3D]),
            (true, 2) => Ok(vec![KernelId::helmholtz_j0(eq.k)?, KernelId::helmholtz_y0(eq.k)?]),
            (true, _) => Err(MadError::invalid("Helmholtz kernels are 2D only")),
            _ => Err(MadError::invalid(format!("unsupported dimension {dim}"))),
        }
    }

    pub fn new(kernels: Vec<KernelId>, centers: PointSet, coeffs: Vec<f64>) -> Result<Self> {
        let expected = kernels.len() * centers.len();
        if coeffs.len() != expected {
            return Err(MadError::DimensionMismatch {
                what: "expansion coefficients",
                expected,
                got: coeffs.len(),
            });
        }
        if kernels.iter().any(|k| k.dim() != centers.dim()) {
            return Err(MadError::invalid("kernel and center dimensions differ"));
        }
        Ok(FundamentalExpansion { kernels, centers, coeffs })
    }

    /// Standard normal coefficients.
    pub fn random<R: Rng + ?Sized>(kernels: Vec<KernelId>, centers: PointSet, rng: &mut R) -> Self {
        let coeffs = (0..kernels.len() * centers.len()).map(|_| normal(rng)).collect();
        FundamentalExpansion { kernels, centers, coeffs }
    }

    pub fn kernels(&self) -> &[KernelId] {
        &self.kernels
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let nk = self.kernels.len();
        if let [KernelId::HelmholtzJ0 { k }, KernelId::HelmholtzY0 { .. }] = self.kernels[..] {
            let s = k.sqrt();
            let mut u = 0.0;
            for (i, c) in self.centers.iter().enumerate() {
                let r = distance(x, c);
                if r == 0.0 {
                    return Err(MadError::Singularity);
                }
                let (j0, y0) = bessel_j0_y0(s * r)?;
                u += self.coeffs[2 * i] * j0 + self.coeffs[2 * i + 1] * y0;
            }
            return Ok(u);
        }
        let mut u = 0.0;
        for (i, c) in self.centers.iter().enumerate() {
            let r = distance(x, c);
            for (kk, id) in self.kernels.iter().enumerate() {
                u += self.coeffs[i * nk + kk] * id.of_radius(r)?;
            }
        }
        Ok(u)
    }
}

/// One `(A cos(ax) + B sin(ax)) (C cosh(ay) + D sinh(ay))` term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigHyperbolicTerm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub rate: f64,
}

impl TrigHyperbolicTerm {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let (s, c) = (self.rate * x).sin_cos();
        let ay = self.rate * y;
        (self.a * c + self.b * s) * (self.c * ay.cosh() + self.d * ay.sinh())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigHyperbolicExpansion {
    pub terms: Vec<TrigHyperbolicTerm>,
}

impl TrigHyperbolicExpansion {
    /// All five parameters standard normal; the rate is redrawn while
    /// `|rate| > MAD2_MAX_RATE` to keep `cosh` well scaled on the unit box.
    pub fn random<R: Rng + ?Sized>(n_terms: usize, rng: &mut R) -> Self {
        let terms = (0..n_terms)
            .map(|_| {
                let (a, b, c, d) = (normal(rng), normal(rng), normal(rng), normal(rng));
                let mut rate = normal(rng);
                while rate.abs() > MAD2_MAX_RATE {
                    rate = normal(rng);
                }
                TrigHyperbolicTerm { a, b, c, d, rate }
            })
            .collect();
        TrigHyperbolicExpansion { terms }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(x[0], x[1])).sum()
    }
}

/// Evaluates one function on the boundary samples and the lattice nodes.
pub(crate) fn record_from<F>(d: &Domain, f: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let g = d.boundary_points().iter().map(&f).collect::<Result<Vec<_>>>()?;
    let u = d.nodes().iter().map(&f).collect::<Result<Vec<_>>>()?;
    Ok((g, u))
}

pub fn mad0_from_net(net: &SineNetSolution, eq: &EquationSpec, d: &Domain, seed: u64) -> Result<FieldSample> {
    if net.dim() != d.dim() {
        return Err(MadError::DimensionMismatch {
            what: "sine net input",
            expected: d.dim(),
            got: net.dim(),
        });
    }
    let g = d.boundary_points().iter().map(|x| net.value(x)).collect();
    let mut u = Vec::with_capacity(d.node_count());
    let mut f = Vec::with_capacity(d.node_count());
    for x in d.nodes().iter() {
        let (v, lap) = net.value_and_laplacian(x);
        u.push(v);
        f.push(lap + eq.k * v);
    }
    Ok(FieldSample { g, f: Some(f), u: Some(u), seed })
}

pub fn sample_mad0(eq: &EquationSpec, d: &Domain, seed: u64) -> Result<FieldSample> {
    if eq.source != SourceMode::General {
        return Err(MadError::Incompatible {
            generator: "mad0".into(),
            equation: eq.to_string(),
        });
    }
    let net = SineNetSolution::random(d.dim(), &mut rng_from_seed(seed));
    mad0_from_net(&net, eq, d, seed)
}

pub fn mad1_from_expansion(exp: &FundamentalExpansion, d: &Domain, seed: u64) -> Result<FieldSample> {
    let (g, u) = record_from(d, |x| exp.value(x))?;
    Ok(FieldSample { g, f: None, u: Some(u), seed })
}

pub(crate) fn mad1_with_centers(eq: &EquationSpec, d: &Domain, centers: &PointSet, seed: u64) -> Result<FieldSample> {
    if eq.source != SourceMode::Zero {
        return Err(MadError::Incompatible {
            generator: "mad1".into(),
            equation: eq.to_string(),
        });
    }
    let kernels = FundamentalExpansion::basis(eq, d.dim())?;
    let exp = FundamentalExpansion::random(kernels, centers.clone(), &mut rng_from_seed(seed));
    mad1_from_expansion(&exp, d, seed)
}

pub fn sample_mad1(eq: &EquationSpec, d: &Domain, n_centers: usize, seed: u64) -> Result<FieldSample> {
    let centers = d.exterior_centers(n_centers, DEFAULT_CENTER_OFFSET)?;
    mad1_with_centers(eq, d, &centers, seed)
}

pub fn mad2_from_expansion(exp: &TrigHyperbolicExpansion, d: &Domain, seed: u64) -> Result<FieldSample> {
    if d.dim() != 2 {
        return Err(MadError::UnsupportedDomain {
            domain: d.kind().name(),
            reason: "MAD2 harmonics are defined in 2D only",
        });
    }
    let (g, u) = record_from(d, |x| Ok(exp.value(x)))?;
    Ok(FieldSample { g, f: None, u: Some(u), seed })
}

pub fn sample_mad2(d: &Domain, n_terms: usize, seed: u64) -> Result<FieldSample> {
    if n_terms == 0 {
        return Err(MadError::invalid("MAD2 needs at least one term"));
    }
    let exp = TrigHyperbolicExpansion::random(n_terms, &mut rng_from_seed(seed));
    mad2_from_expansion(&exp, d, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainKind, GridSpec};
    use std::f64::consts::PI;

    fn square(res: usize) -> Domain {
        Domain::build(DomainKind::UnitSquare, GridSpec::new(res, 4 * (res - 1))).unwrap()
    }

    #[test]
    fn zero_net_gives_zero_fields() {
        let d = square(11);
        let s = mad0_from_net(&SineNetSolution::zeros(2), &EquationSpec::poisson(), &d, 0).unwrap();
        assert!(s.g.iter().all(|&v| v == 0.0));
        assert!(s.u.unwrap().iter().all(|&v| v == 0.0));
        assert!(s.f.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_net_laplacian_matches_second_differences() {
        let net = SineNetSolution::random(2, &mut rng_from_seed(5));
        let h = 1e-4;
        for x in [[0.3, 0.7], [0.9, 0.1], [0.5, 0.5]] {
            let (u, lap) = net.value_and_laplacian(&x);
            assert_eq!(u, net.value(&x));
            let fd = (net.value(&[x[0] + h, x[1]])
                + net.value(&[x[0] - h, x[1]])
                + net.value(&[x[0], x[1] + h])
                + net.value(&[x[0], x[1] - h])
                - 4.0 * u)
                / (h * h);
            assert!((fd - lap).abs() < 1e-5 * (1.0 + lap.abs()), "{fd} vs {lap}");
        }
    }

    #[test]
    fn mad0_rejects_source_free_equations() {
        assert!(sample_mad0(&EquationSpec::laplace(), &square(5), 1).is_err());
    }

    #[test]
    fn single_log_kernel_vanishes_at_unit_distance() {
        let centers = PointSet::from_flat(2, vec![1.5, 0.5]).unwrap();
        let exp = FundamentalExpansion::new(vec![KernelId::Log2D], centers, vec![1.0]).unwrap();
        assert_eq!(exp.value(&[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn single_newton_kernel_in_the_cube() {
        let centers = PointSet::from_flat(3, vec![0.5, 0.5, 2.0]).unwrap();
        let exp = FundamentalExpansion::new(vec![KernelId::Newton3D], centers, vec![1.0]).unwrap();
        let v = exp.value(&[0.5, 0.5, 1.0]).unwrap();
        assert!((v + 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((v + 0.0795774715).abs() < 1e-10);
    }

    #[test]
    fn helmholtz_fast_path_matches_generic_kernels() {
        let eq = EquationSpec::helmholtz(100.0).unwrap();
        let d = square(5);
        let centers = d.exterior_centers(7, 0.5).unwrap();
        let kernels = FundamentalExpansion::basis(&eq, 2).unwrap();
        let exp = FundamentalExpansion::random(kernels.clone(), centers.clone(), &mut rng_from_seed(3));
        for x in d.nodes().iter() {
            let mut slow = 0.0;
            for (i, c) in centers.iter().enumerate() {
                for (k, id) in kernels.iter().enumerate() {
                    slow += exp.coeffs()[2 * i + k] * crate::special::kernel_value(*id, x, c).unwrap();
                }
            }
            assert!((slow - exp.value(x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn mad1_rejects_negative_k_and_sources() {
        let d = square(5);
        assert!(sample_mad1(&EquationSpec { k: -1.0, source: SourceMode::Zero }, &d, 10, 1).is_err());
        assert!(sample_mad1(&EquationSpec::poisson(), &d, 10, 1).is_err());
    }

    #[test]
    fn trig_hyperbolic_examples() {
        let one = TrigHyperbolicExpansion {
            terms: vec![TrigHyperbolicTerm { a: 1.0, b: 0.0, c: 1.0, d: 0.0, rate: 0.0 }],
        };
        assert_eq!(one.value(&[0.3, 0.8]), 1.0);
        let ss = TrigHyperbolicExpansion {
            terms: vec![TrigHyperbolicTerm { a: 0.0, b: 1.0, c: 0.0, d: 1.0, rate: 1.0 }],
        };
        assert_eq!(ss.value(&[PI / 6.0, 0.0]), 0.0);
        assert!((ss.value(&[0.4, 0.6]) - 0.4f64.sin() * 0.6f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn mad2_rates_are_bounded_and_cube_rejected() {
        let exp = TrigHyperbolicExpansion::random(1000, &mut rng_from_seed(8));
        assert!(exp.terms.iter().all(|t| t.rate.abs() <= MAD2_MAX_RATE));
        let cube = Domain::build(DomainKind::UnitCube, GridSpec::new(5, 0)).unwrap();
        assert!(sample_mad2(&cube, 3, 1).is_err());
        assert!(sample_mad2(&square(5), 0, 1).is_err());
    }

    #[test]
    fn samples_are_deterministic_and_boundary_consistent() {
        let d = square(11);
        let a = sample_mad1(&EquationSpec::helmholtz(10.0).unwrap(), &d, 20, 42).unwrap();
        let b = sample_mad1(&EquationSpec::helmholtz(10.0).unwrap(), &d, 20, 42).unwrap();
        assert_eq!(a, b);
        // boundary samples coincide with boundary lattice nodes here
        let u = a.u.as_ref().unwrap();
        for (gi, p) in a.g.iter().zip(d.boundary_points().iter()) {
            let i = (p[0] * 10.0).round() as usize;
            let j = (p[1] * 10.0).round() as usize;
            let n = d.node_at([i, j, 0]).unwrap();
            assert!((gi - u[n]).abs() < 1e-14);
        }
    }
}
