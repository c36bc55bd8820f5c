//! Datasets of field samples and their binary file format.
//!
//! Layout (all little endian):
//!
//! ```text
//! "MADS" | version u16 | generator u8 | role u8 | source mode u8 | k f64
//! | domain u8 | resolution u32 | Mb u32 | N u64 | M u32 | F u32 | flags u8
//! | master seed u64 | wall time f64
//! then N records: g[Mb] | f[F] if flags & 1 | u[M] if flags & 2   (f64)
//! ```
//!
//! Per-sample seeds are not stored; they are re-derived from the master
//! seed and the role's stream.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equation::EquationSpec;
use crate::error::{MadError, Result};
use crate::geometry::{DomainKind, GridSpec};
use crate::rng::{derive_seed, stream};

pub const MAGIC: &[u8; 4] = b"MADS";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 1 + 8 + 1 + 4 + 4 + 8 + 4 + 4 + 1 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    Mad0,
    Mad1,
    Mad2,
    PinnGrf,
    FdOracle,
}

impl Generator {
    pub const ALL: [Generator; 5] = [
        Generator::Mad0,
        Generator::Mad1,
        Generator::Mad2,
        Generator::PinnGrf,
        Generator::FdOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Mad0 => "mad0",
            Generator::Mad1 => "mad1",
            Generator::Mad2 => "mad2",
            Generator::PinnGrf => "pinn-grf",
            Generator::FdOracle => "fd-oracle",
        }
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.code() == c)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = MadError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s.to_ascii_lowercase())
            .ok_or_else(|| MadError::invalid(format!("unknown generator '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Train,
    /// Analytic test set aligned with a MAD generator.
    TestAnalytic,
    /// Test set solved by the finite-difference oracle.
    TestFd,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Train, Role::TestAnalytic, Role::TestFd];

    pub fn stream(self) -> u64 {
        match self {
            Role::Train => stream::TRAIN,
            Role::TestAnalytic => stream::TEST_ANALYTIC,
            Role::TestFd => stream::TEST_FD,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::TestAnalytic => "test-1",
            Role::TestFd => "test-2",
        }
    }

    fn code(self) -> u8 {
        self as u8
    }

    fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.code() == c)
    }
}

/// One record: boundary data `g` at the `Mb` boundary samples, optional
/// source `f` and solution `u` at the lattice nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub g: Vec<f64>,
    pub f: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: Generator,
    pub role: Role,
    pub equation: EquationSpec,
    pub domain: DomainKind,
    pub grid: GridSpec,
    /// Length of `u` (evaluation points `M`).
    pub solution_len: usize,
    /// Length of `f` (lattice nodes carrying a source).
    pub source_len: usize,
    pub has_f: bool,
    pub has_u: bool,
    pub master_seed: u64,
    pub wall_time: f64,
}

impl DatasetMeta {
    pub fn boundary_count(&self) -> usize {
        self.grid.boundary_count
    }

    pub fn record_len(&self) -> usize {
        self.boundary_count()
            + if self.has_f { self.source_len } else { 0 }
            + if self.has_u { self.solution_len } else { 0 }
    }

    pub fn file_len(&self, n: usize) -> usize {
        HEADER_LEN + n * self.record_len() * 8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<FieldSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks every record against the declared counts and flags.
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        for s in &self.samples {
            check_len("g", m.boundary_count(), s.g.len())?;
            match (&s.f, m.has_f) {
                (Some(f), true) => check_len("f", m.source_len, f.len())?,
                (None, false) => {}
                _ => return Err(MadError::Format("source presence disagrees with header".into())),
            }
            match (&s.u, m.has_u) {
                (Some(u), true) => check_len("u", m.solution_len, u.len())?,
                (None, false) => {}
                _ => return Err(MadError::Format("solution presence disagrees with header".into())),
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let m = &self.meta;
        let mut out = Vec::with_capacity(m.file_len(self.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(m.generator.code());
        out.push(m.role.code());
        out.push(m.equation.source_code());
        out.extend_from_slice(&m.equation.k.to_le_bytes());
        out.push(m.domain.code());
        out.extend_from_slice(&to_u32(m.grid.resolution)?.to_le_bytes());
        out.extend_from_slice(&to_u32(m.grid.boundary_count)?.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&to_u32(m.solution_len)?.to_le_bytes());
        out.extend_from_slice(&to_u32(m.source_len)?.to_le_bytes());
        out.push(u8::from(m.has_f) | (u8::from(m.has_u) << 1));
        out.extend_from_slice(&m.master_seed.to_le_bytes());
        out.extend_from_slice(&m.wall_time.to_le_bytes());
        for s in &self.samples {
            let parts = [Some(&s.g), s.f.as_ref(), s.u.as_ref()];
            for v in parts.into_iter().flatten().flatten() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(MadError::Format("bad magic (not a dataset file)".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(MadError::Version {
                found: version,
                expected: VERSION,
            });
        }
        let generator = Generator::from_code(r.u8()?)
            .ok_or_else(|| MadError::Format("unknown generator code".into()))?;
        let role = Role::from_code(r.u8()?).ok_or_else(|| MadError::Format("unknown role code".into()))?;
        let source = r.u8()?;
        let k = r.f64()?;
        let equation = EquationSpec::from_codes(source, k)?;
        let domain = DomainKind::from_code(r.u8()?)
            .ok_or_else(|| MadError::Format("unknown domain code".into()))?;
        let resolution = r.u32()? as usize;
        let boundary_count = r.u32()? as usize;
        let n = r.u64()?;
        let solution_len = r.u32()? as usize;
        let source_len = r.u32()? as usize;
        let flags = r.u8()?;
        if flags > 3 {
            return Err(MadError::Format(format!("unknown presence flags {flags:#x}")));
        }
        let master_seed = r.u64()?;
        let wall_time = r.f64()?;
        let meta = DatasetMeta {
            generator,
            role,
            equation,
            domain,
            grid: GridSpec::new(resolution, boundary_count),
            solution_len,
            source_len,
            has_f: flags & 1 != 0,
            has_u: flags & 2 != 0,
            master_seed,
            wall_time,
        };
        let payload = (bytes.len() - HEADER_LEN) as u64;
        let expected = n
            .checked_mul(meta.record_len() as u64 * 8)
            .ok_or_else(|| MadError::Format("declared counts overflow".into()))?;
        if payload != expected {
            return Err(MadError::Format(format!(
                "payload is {payload} bytes but header declares {expected}"
            )));
        }
        let mut samples = Vec::with_capacity(n as usize);
        for i in 0..n {
            let g = r.f64s(boundary_count)?;
            let f = if meta.has_f { Some(r.f64s(source_len)?) } else { None };
            let u = if meta.has_u { Some(r.f64s(solution_len)?) } else { None };
            samples.push(FieldSample {
                g,
                f,
                u,
                seed: derive_seed(master_seed, role.stream(), i),
            });
        }
        Ok(Dataset { meta, samples })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, ds.to_bytes()?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::from_bytes(&std::fs::read(path)?)
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(MadError::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| MadError::Format(format!("count {v} does not fit in u32")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| MadError::Format("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let meta = DatasetMeta {
            generator: Generator::Mad0,
            role: Role::Train,
            equation: EquationSpec::poisson(),
            domain: DomainKind::UnitSquare,
            grid: GridSpec::new(3, 4),
            solution_len: 9,
            source_len: 9,
            has_f: true,
            has_u: true,
            master_seed: 7,
            wall_time: 0.25,
        };
        let samples = (0..3)
            .map(|i| FieldSample {
                g: vec![i as f64; 4],
                f: Some(vec![-1.5; 9]),
                u: Some((0..9).map(|j| j as f64 * 0.1).collect()),
                seed: derive_seed(7, stream::TRAIN, i),
            })
            .collect();
        Dataset { meta, samples }
    }

    #[test]
    fn header_length_and_size_formula() {
        let ds = tiny();
        let bytes = ds.to_bytes().unwrap();
        assert_eq!(HEADER_LEN, 59);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * (4 + 9 + 9) * 8);
        assert_eq!(Dataset::from_bytes(&bytes).unwrap(), ds);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = tiny().to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Dataset::from_bytes(&bad), Err(MadError::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(Dataset::from_bytes(&bad), Err(MadError::Version { found: 9, .. })));
        assert!(Dataset::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        assert!(Dataset::from_bytes(&bytes[..20]).is_err());
        let mut long = bytes;
        long.extend_from_slice(&[0; 8]);
        assert!(Dataset::from_bytes(&long).is_err());
    }

    #[test]
    fn inconsistent_records_do_not_serialize() {
        let mut ds = tiny();
        ds.samples[1].u = None;
        assert!(ds.to_bytes().is_err());
    }
}
