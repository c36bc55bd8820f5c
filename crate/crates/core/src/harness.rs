//! Metrics, test-set builders, the generation-cost benchmark and model
//! evaluation.

use std::time::Instant;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, FieldSample, Generator, Role};
use crate::equation::EquationSpec;
use crate::error::{MadError, Result};
use crate::exec::Execution;
use crate::fd::{solve_fd_with, FdProblem, KrylovMethod, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::geometry::{Domain, GridSpec};
use crate::neural::Operator;
use crate::rng::{derive_seed, normals, rng_from_seed, stream};
use crate::sampling::grf::smooth_lattice;
use crate::sampling::mad::{default_center_count, FundamentalExpansion};
use crate::sampling::{generate_for_role, source_seed, GenOptions, GrfSampler};

pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(MadError::DimensionMismatch {
            what: "prediction length",
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let den: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 || !den.is_finite() {
        return Err(MadError::ZeroNorm);
    }
    let num: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>().sqrt();
    Ok(num / den)
}

/// Analytic test set drawn from the test stream, disjoint from training
/// records of the same master seed.
pub fn build_test_set_1(
    generator: Generator,
    eq: &EquationSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    opts: &GenOptions,
    exec: Execution,
) -> Result<Dataset> {
    generate_for_role(generator, Role::TestAnalytic, eq, d, n, seed, opts, exec)
}

/// Fine finite-difference oracle settings. The fine lattice refines the
/// evaluation lattice by the smallest integer factor with spacing `<= h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub h: f64,
    pub method: KrylovMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            h: 0.005,
            method: KrylovMethod::default(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl OracleConfig {
    pub fn refinement(&self, d: &Domain) -> Result<usize> {
        if !(self.h > 0.0) {
            return Err(MadError::invalid("oracle spacing must be > 0"));
        }
        Ok(((d.spacing() / self.h) - 1e-9).ceil().max(1.0) as usize)
    }

    pub fn fine_resolution(&self, d: &Domain) -> Result<usize> {
        Ok(self.refinement(d)? * (d.grid().resolution - 1) + 1)
    }
}

/// Bilinear interpolation of a `rc x rc` lattice field onto the `rf x rf`
/// lattice that refines it by an integer factor.
fn refine_lattice(coarse: &[f64], rc: usize, rf: usize) -> Vec<f64> {
    let m = (rf - 1) / (rc - 1);
    let mut out = vec![0.0; rf * rf];
    for i in 0..rf {
        let (ci, ti) = ((i / m).min(rc - 2), (i as f64 / m as f64) - (i / m).min(rc - 2) as f64);
        for j in 0..rf {
            let (cj, tj) = ((j / m).min(rc - 2), (j as f64 / m as f64) - (j / m).min(rc - 2) as f64);
            let v = |a: usize, b: usize| coarse[a * rc + b];
            out[i * rf + j] = (1.0 - ti) * (1.0 - tj) * v(ci, cj)
                + ti * (1.0 - tj) * v(ci + 1, cj)
                + (1.0 - ti) * tj * v(ci, cj + 1)
                + ti * tj * v(ci + 1, cj + 1);
        }
    }
    out
}

/// FD-oracle test set: GRF boundary data (and a smoothed source when the
/// equation has one), solved on the fine lattice and sampled back onto the
/// evaluation nodes.
///
/// The GRF is drawn at the fine boundary parameters and the evaluation
/// boundary data are every `m`-th value, so the network sees exactly the
/// data the oracle was solved with. The source is generated on the
/// evaluation lattice, as in training, and interpolated bilinearly.
pub fn build_test_set_2(
    eq: &EquationSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    oracle: &OracleConfig,
    opts: &GenOptions,
    exec: Execution,
) -> Result<Dataset> {
    if n == 0 {
        return Err(MadError::invalid("dataset needs at least one sample"));
    }
    if d.dim() != 2 {
        return Err(MadError::UnsupportedDomain {
            domain: d.kind().name(),
            reason: "the FD oracle is 2D",
        });
    }
    let start = Instant::now();
    let m = oracle.refinement(d)?;
    let rc = d.grid().resolution;
    let rf = oracle.fine_resolution(d)?;
    let mb = d.boundary_count();
    let fine = Domain::build(d.kind(), GridSpec::new(rf, m * mb))?;
    let sampler = GrfSampler::for_domain(&fine, &opts.grf)?;
    let samples = exec.try_map(n, |i| {
        let s = derive_seed(seed, stream::TEST_FD, i as u64);
        let g_fine = sampler.draw(&mut rng_from_seed(s));
        let g: Vec<f64> = g_fine.iter().step_by(m).copied().collect();
        let (f_nodes, f_fine) = if eq.has_source() {
            let raw = normals(&mut rng_from_seed(source_seed(s)), rc * rc);
            let lat = smooth_lattice(&raw, rc, &opts.smoothing)?;
            let nodes: Vec<f64> = (0..d.node_count())
                .map(|k| {
                    let [a, b, _] = d.lattice_index(k);
                    lat[a * rc + b]
                })
                .collect();
            (Some(nodes), Some(lat))
        } else {
            (None, None)
        };
        let u = oracle_solution(d, eq, oracle, &g_fine, f_fine.as_deref())?;
        Ok::<_, MadError>(FieldSample {
            g,
            f: f_nodes,
            u: Some(u),
            seed: s,
        })
    })?;
    Ok(Dataset {
        meta: DatasetMeta {
            generator: Generator::FdOracle,
            role: Role::TestFd,
            equation: *eq,
            domain: d.kind(),
            grid: d.grid(),
            solution_len: d.node_count(),
            source_len: d.node_count(),
            has_f: eq.has_source(),
            has_u: true,
            master_seed: seed,
            wall_time: start.elapsed().as_secs_f64(),
        },
        samples,
    })
}

/// Solves one oracle problem and samples it on the nodes of `d`.
/// `g_fine` holds boundary values at the parameters of the fine domain
/// (`m * Mb` points); `f_lattice` is a source on the full lattice of `d`.
pub fn oracle_solution(
    d: &Domain,
    eq: &EquationSpec,
    oracle: &OracleConfig,
    g_fine: &[f64],
    f_lattice: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let m = oracle.refinement(d)?;
    let rc = d.grid().resolution;
    let rf = oracle.fine_resolution(d)?;
    let length = d.kind().boundary_measure();
    let mbf = m * d.boundary_count();
    if g_fine.len() != mbf {
        return Err(MadError::DimensionMismatch {
            what: "fine boundary samples",
            expected: mbf,
            got: g_fine.len(),
        });
    }
    let params: Vec<f64> = (0..mbf).map(|i| i as f64 * length / mbf as f64).collect();
    let source = match f_lattice {
        Some(f) if f.len() != rc * rc => {
            return Err(MadError::DimensionMismatch {
                what: "source lattice values",
                expected: rc * rc,
                got: f.len(),
            })
        }
        Some(f) => Some(refine_lattice(f, rc, rf)),
        None => None,
    };
    let problem = FdProblem::from_boundary_samples(d.kind(), rf, *eq, &params, g_fine, source)?;
    solve_fd_with(&problem, oracle.method, oracle.tol, oracle.max_iter)?.sample_on(d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub fd_resolution: usize,
    pub fd_method: KrylovMethod,
    pub t_mad: f64,
    pub t_fd: f64,
    /// `t_fd / t_mad`; `None` when nothing was timed.
    pub ratio: Option<f64>,
    pub fd_iterations_mean: f64,
}

/// Times MAD1 generation of `n` records against FD solves of the same `n`
/// problems (exact boundary values on the fine lattice).
pub fn bench_generation(
    eq: &EquationSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    oracle: &OracleConfig,
    opts: &GenOptions,
    exec: Execution,
) -> Result<BenchReport> {
    let rf = oracle.fine_resolution(d)?;
    if n == 0 {
        return Ok(BenchReport {
            n,
            fd_resolution: rf,
            fd_method: oracle.method,
            t_mad: 0.0,
            t_fd: 0.0,
            ratio: None,
            fd_iterations_mean: 0.0,
        });
    }
    let start = Instant::now();
    let ds = generate_for_role(Generator::Mad1, Role::Train, eq, d, n, seed, opts, exec)?;
    let t_mad = start.elapsed().as_secs_f64();

    let count = opts.n_centers.unwrap_or_else(|| default_center_count(d.dim()));
    let centers = d.exterior_centers(count, opts.center_offset)?;
    let kernels = FundamentalExpansion::basis(eq, d.dim())?;
    let start = Instant::now();
    let iterations = exec.try_map(n, |i| {
        let exp = FundamentalExpansion::random(kernels.clone(), centers.clone(), &mut rng_from_seed(ds.samples[i].seed));
        let failed = std::cell::Cell::new(false);
        let problem = FdProblem::from_functions(
            d.kind(),
            rf,
            *eq,
            |p| {
                exp.value(&p).unwrap_or_else(|_| {
                    failed.set(true);
                    0.0
                })
            },
            None::<fn([f64; 2]) -> f64>,
        )?;
        if failed.get() {
            return Err(MadError::Singularity);
        }
        Ok::<_, MadError>(solve_fd_with(&problem, oracle.method, oracle.tol, oracle.max_iter)?.iterations)
    })?;
    let t_fd = start.elapsed().as_secs_f64();
    Ok(BenchReport {
        n,
        fd_resolution: rf,
        fd_method: oracle.method,
        t_mad,
        t_fd,
        ratio: (t_mad > 0.0).then(|| t_fd / t_mad),
        fd_iterations_mean: iterations.iter().sum::<usize>() as f64 / n as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub generator: Generator,
    pub role: Role,
    pub equation: EquationSpec,
    pub per_sample: Vec<f64>,
    pub mean: f64,
    pub train_time: Option<f64>,
    pub final_loss: Option<f64>,
}

const EVAL_CHUNK: usize = 25;

/// Per-sample relative L2 of `op` against the stored solutions.
pub fn evaluate(op: &(dyn Operator + Sync), test: &Dataset, d: &Domain, exec: Execution) -> Result<EvalReport> {
    if !test.meta.has_u || test.is_empty() {
        return Err(MadError::MissingField("u"));
    }
    if test.meta.domain != d.kind() || test.meta.grid != d.grid() {
        return Err(MadError::invalid("test set was not generated on this domain/grid"));
    }
    let x = crate::neural::loss::points(d.nodes());
    let n = test.len();
    let chunks = n.div_ceil(EVAL_CHUNK);
    let per_chunk = exec.try_map(chunks, |c| {
        let idx: Vec<usize> = (c * EVAL_CHUNK..((c + 1) * EVAL_CHUNK).min(n)).collect();
        let mb = test.meta.boundary_count();
        let mut g = Array2::zeros((idx.len(), mb));
        let mut f = test.meta.has_f.then(|| Array2::zeros((idx.len(), test.meta.source_len)));
        for (r, &i) in idx.iter().enumerate() {
            let smp = &test.samples[i];
            g.row_mut(r).assign(&ndarray::ArrayView1::from(&smp.g));
            if let (Some(f), Some(sf)) = (&mut f, &smp.f) {
                f.row_mut(r).assign(&ndarray::ArrayView1::from(sf));
            }
        }
        let pred = op.predict(g.view(), f.as_ref().map(|f| f.view()), x.view())?;
        if pred.dim() != (idx.len(), d.node_count()) {
            return Err(MadError::DimensionMismatch {
                what: "prediction size",
                expected: idx.len() * d.node_count(),
                got: pred.len(),
            });
        }
        idx.iter()
            .enumerate()
            .map(|(r, &i)| {
                let row = pred.slice(s![r, ..]);
                relative_l2(row.as_slice().expect("row-major"), test.samples[i].u.as_ref().expect("has_u"))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let per_sample: Vec<f64> = per_chunk.into_iter().flatten().collect();
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    Ok(EvalReport {
        generator: test.meta.generator,
        role: test.meta.role,
        equation: test.meta.equation,
        per_sample,
        mean,
        train_time: None,
        final_loss: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_l2_examples() {
        let t = [3.0, 4.0, 0.0];
        assert_eq!(relative_l2(&t, &t).unwrap(), 0.0);
        assert!((relative_l2(&[6.0, 8.0, 0.0], &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((relative_l2(&[8.0, 4.0, 0.0], &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(relative_l2(&[1.0], &[0.0]), Err(MadError::ZeroNorm)));
        assert!(relative_l2(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn bilinear_refinement_reproduces_affine_fields() {
        let (rc, rf) = (5, 17);
        let coarse: Vec<f64> = (0..rc * rc).map(|k| 2.0 * (k / rc) as f64 - 0.5 * (k % rc) as f64 + 1.0).collect();
        let fine = refine_lattice(&coarse, rc, rf);
        let m = 4.0;
        for i in 0..rf {
            for j in 0..rf {
                let expect = 2.0 * i as f64 / m - 0.5 * j as f64 / m + 1.0;
                assert!((fine[i * rf + j] - expect).abs() < 1e-12);
            }
        }
    }
}
