//! Dataset generation: analytic MAD samplers and random PINN inputs.

pub mod grf;
pub mod mad;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use crate::dataset::FieldSample;
use crate::dataset::{Dataset, DatasetMeta, Generator, Role};
use crate::equation::{EquationSpec, SourceMode};
use crate::error::{MadError, Result};
use crate::exec::Execution;
use crate::geometry::Domain;
use crate::rng::{derive_seed, rng_from_seed};

pub use grf::{GrfConfig, GrfSampler, SmoothingConfig};
pub use mad::{FundamentalExpansion, SineNetSolution, TrigHyperbolicExpansion};

const SOURCE_STREAM: u64 = 0x736f_7572_6365_0006;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    /// Exterior centers for MAD1; `None` picks 100 (2D) or 400 (3D).
    pub n_centers: Option<usize>,
    pub center_offset: f64,
    pub mad2_terms: usize,
    pub grf: GrfConfig,
    pub smoothing: SmoothingConfig,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            n_centers: None,
            center_offset: mad::DEFAULT_CENTER_OFFSET,
            mad2_terms: mad::MAD2_DEFAULT_TERMS,
            grf: GrfConfig::default(),
            smoothing: SmoothingConfig::default(),
        }
    }
}

/// Rejects generator/equation/domain combinations the samplers cannot honor.
pub fn check_compatible(generator: Generator, eq: &EquationSpec, d: &Domain) -> Result<()> {
    let incompatible = || MadError::Incompatible {
        generator: generator.name().into(),
        equation: eq.to_string(),
    };
    match generator {
        Generator::Mad0 if eq.source != SourceMode::General => Err(incompatible()),
        Generator::Mad1 if eq.source != SourceMode::Zero => Err(incompatible()),
        Generator::Mad1 if eq.k > 0.0 && d.dim() != 2 => Err(MadError::UnsupportedDomain {
            domain: d.kind().name(),
            reason: "Helmholtz kernels are 2D only",
        }),
        Generator::Mad2 if eq.source != SourceMode::Zero || eq.k != 0.0 => Err(incompatible()),
        Generator::Mad2 | Generator::PinnGrf if d.dim() != 2 => Err(MadError::UnsupportedDomain {
            domain: d.kind().name(),
            reason: "generator is defined in 2D only",
        }),
        Generator::FdOracle => Err(MadError::invalid(
            "FD-oracle datasets are built by the test-set builder, not the sampler",
        )),
        _ => Ok(()),
    }
}

pub fn generate_dataset(
    generator: Generator,
    eq: &EquationSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    opts: &GenOptions,
    exec: Execution,
) -> Result<Dataset> {
    generate_for_role(generator, Role::Train, eq, d, n, seed, opts, exec)
}

/// Like [`generate_dataset`] but drawing per-sample seeds from the stream
/// of `role`, so train and test sets from one master seed never share a
/// record.
#[allow(clippy::too_many_arguments)]
pub fn generate_for_role(
    generator: Generator,
    role: Role,
    eq: &EquationSpec,
    d: &Domain,
    n: usize,
    seed: u64,
    opts: &GenOptions,
    exec: Execution,
) -> Result<Dataset> {
    if n == 0 {
        return Err(MadError::invalid("dataset needs at least one sample"));
    }
    check_compatible(generator, eq, d)?;
    let start = Instant::now();
    let seed_of = |i: usize| derive_seed(seed, role.stream(), i as u64);
    let samples = match generator {
        Generator::Mad0 => exec.try_map(n, |i| mad::sample_mad0(eq, d, seed_of(i)))?,
        Generator::Mad1 => {
            let count = opts.n_centers.unwrap_or_else(|| mad::default_center_count(d.dim()));
            let centers = d.exterior_centers(count, opts.center_offset)?;
            exec.try_map(n, |i| mad::mad1_with_centers(eq, d, &centers, seed_of(i)))?
        }
        Generator::Mad2 => exec.try_map(n, |i| mad::sample_mad2(d, opts.mad2_terms, seed_of(i)))?,
        Generator::PinnGrf => {
            let sampler = GrfSampler::for_domain(d, &opts.grf)?;
            exec.try_map(n, |i| {
                let s = seed_of(i);
                let g = sampler.draw(&mut rng_from_seed(s));
                let f = if eq.has_source() {
                    Some(grf::sample_smoothed_source(d, &opts.smoothing, source_seed(s))?)
                } else {
                    None
                };
                Ok::<_, MadError>(FieldSample { g, f, u: None, seed: s })
            })?
        }
        Generator::FdOracle => unreachable!("rejected by check_compatible"),
    };
    let has_f = samples[0].f.is_some();
    let has_u = samples[0].u.is_some();
    let meta = DatasetMeta {
        generator,
        role,
        equation: *eq,
        domain: d.kind(),
        grid: d.grid(),
        solution_len: d.node_count(),
        source_len: d.node_count(),
        has_f,
        has_u,
        master_seed: seed,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(Dataset { meta, samples })
}

/// Source seed used for the `i`-th PINN record of a dataset; exposed so FD
/// test sets can reuse the same construction.
pub fn source_seed(sample_seed: u64) -> u64 {
    derive_seed(sample_seed, SOURCE_STREAM, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainKind, GridSpec};

    #[test]
    fn compatibility_rules() {
        let sq = Domain::build(DomainKind::UnitSquare, GridSpec::new(5, 16)).unwrap();
        let helm = EquationSpec::helmholtz(1.0).unwrap();
        let opts = GenOptions::default();
        let run = |g, eq: &EquationSpec| generate_dataset(g, eq, &sq, 2, 1, &opts, Execution::Sequential);
        assert!(run(Generator::Mad2, &helm).is_err());
        assert!(run(Generator::Mad1, &EquationSpec::poisson()).is_err());
        assert!(run(Generator::Mad0, &EquationSpec::laplace()).is_err());
        assert!(run(Generator::FdOracle, &EquationSpec::laplace()).is_err());
        assert!(run(Generator::Mad1, &helm).is_ok());
        assert!(generate_dataset(Generator::Mad1, &helm, &sq, 0, 1, &opts, Execution::Sequential).is_err());
    }

    #[test]
    fn pinn_records_carry_inputs_only() {
        let sq = Domain::build(DomainKind::UnitSquare, GridSpec::new(11, 40)).unwrap();
        let opts = GenOptions::default();
        let ds = generate_dataset(Generator::PinnGrf, &EquationSpec::poisson(), &sq, 3, 2, &opts, Execution::Parallel)
            .unwrap();
        assert!(ds.samples.iter().all(|s| s.u.is_none() && s.f.as_ref().unwrap().len() == 121));
        let ds = generate_dataset(Generator::PinnGrf, &EquationSpec::laplace(), &sq, 3, 2, &opts, Execution::Parallel)
            .unwrap();
        assert!(ds.samples.iter().all(|s| s.f.is_none() && s.g.len() == 40));
    }
}
