//! Exact synthetic training data for parametric elliptic PDEs
//! (`lap u + k u = f`), small DeepONet-style operators trained on it, and a
//! five-point finite-difference reference solver.

pub mod dataset;
pub mod equation;
pub mod error;
pub mod exec;
pub mod fd;
pub mod neural;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod sampling;
pub mod special;

pub use dataset::{load_dataset, save_dataset, Dataset, DatasetMeta, FieldSample, Generator, Role};
pub use equation::{EquationSpec, SourceMode};
pub use error::{MadError, Result};
pub use exec::Execution;
pub use geometry::{Domain, DomainKind, GridSpec, PointSet};
