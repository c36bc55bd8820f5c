use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Cache, DerivCache, Mlp};
use crate::error::{MadError, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

pub const DEFAULT_LATENT: usize = 100;

/// Anything that maps input functions to values (and Laplacians) at query
/// points. Rows of `g`/`f` are samples, rows of `x` are points; outputs
/// are `samples x points`.
pub trait Operator {
    fn predict(&self, g: ArrayView2<f64>, f: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>>;

    fn laplacian(&self, g: ArrayView2<f64>, f: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>>;
}

/// Unstacked DeepONet: a bias-free linear branch and a trunk, joined by a
/// dot product over the latent axis.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepOnet {
    pub branch: Mlp,
    pub trunk: Mlp,
}

pub(crate) struct Pass {
    pub bc: Cache,
    pub tc: Cache,
}

pub(crate) struct PinnPass {
    pub bc: Cache,
    pub res: DerivCache,
    pub bnd: Cache,
}

impl DeepOnet {
    /// `trunk_sizes` runs from the coordinate dimension to the latent size.
    pub fn new(branch_inputs: usize, trunk_sizes: &[usize], trunk_act: Activation) -> Result<Self> {
        let p = *trunk_sizes.last().ok_or_else(|| MadError::invalid("empty trunk"))?;
        let branch = Mlp::new(&[branch_inputs, p], &[Activation::Linear], false)?;
        let trunk = Mlp::new(trunk_sizes, &vec![trunk_act; trunk_sizes.len() - 1], true)?;
        Self::from_parts(branch, trunk)
    }

    pub fn from_parts(branch: Mlp, trunk: Mlp) -> Result<Self> {
        if branch.output_dim() != trunk.output_dim() {
            return Err(MadError::DimensionMismatch {
                what: "branch/trunk latent size",
                expected: trunk.output_dim(),
                got: branch.output_dim(),
            });
        }
        Ok(DeepOnet { branch, trunk })
    }

    pub fn latent(&self) -> usize {
        self.trunk.output_dim()
    }

    pub fn branch_inputs(&self) -> usize {
        self.branch.input_dim()
    }

    pub fn dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn forward(&self, inputs: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let b = self.branch.forward(inputs)?;
        let t = self.trunk.forward(x)?;
        Ok(b.dot(&t.t()))
    }

    fn check_smooth(&self) -> Result<()> {
        if self.trunk.layers().iter().any(|l| !l.activation.is_smooth()) {
            return Err(MadError::invalid("Laplacian needs a twice differentiable trunk (no Relu)"));
        }
        Ok(())
    }

    pub fn laplacian(&self, inputs: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_smooth()?;
        let b = self.branch.forward(inputs)?;
        let t = self.trunk.forward_derivs(x)?;
        Ok(b.dot(&t.laplacian().t()))
    }

    pub(crate) fn pass(&self, inputs: ArrayView2<f64>, x: ArrayView2<f64>) -> Result<Pass> {
        Ok(Pass {
            bc: self.branch.forward_cached(inputs)?,
            tc: self.trunk.forward_cached(x)?,
        })
    }

    pub(crate) fn output(p: &Pass) -> Array2<f64> {
        p.bc.output().dot(&p.tc.output().t())
    }

    /// Gradients `(branch, trunk)` given `d loss / d U`.
    pub(crate) fn back(&self, p: &Pass, ubar: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
        let bbar = ubar.dot(p.tc.output());
        let tbar = ubar.t().dot(p.bc.output());
        (self.branch.backward(&p.bc, bbar.view()), self.trunk.backward(&p.tc, tbar.view()))
    }

    pub(crate) fn pinn_pass(&self, inputs: ArrayView2<f64>, xr: ArrayView2<f64>, xb: ArrayView2<f64>) -> Result<PinnPass> {
        self.check_smooth()?;
        Ok(PinnPass {
            bc: self.branch.forward_cached(inputs)?,
            res: self.trunk.forward_derivs(xr)?,
            bnd: self.trunk.forward_cached(xb)?,
        })
    }

    /// `(lap u + k u, u on boundary)` for a physics pass.
    pub(crate) fn pinn_outputs(p: &PinnPass, k: f64) -> (Array2<f64>, Array2<f64>) {
        let s = p.res.laplacian() + &(p.res.value() * k);
        let b = p.bc.output();
        (b.dot(&s.t()), b.dot(&p.bnd.output().t()))
    }

    pub(crate) fn pinn_back(&self, p: &PinnPass, k: f64, rbar: &Array2<f64>, ebar: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
        let b = p.bc.output();
        let s = p.res.laplacian() + &(p.res.value() * k);
        let bbar = rbar.dot(&s) + ebar.dot(p.bnd.output());
        let sbar = rbar.t().dot(b);
        let vbar = &sbar * k;
        let mut tg = self.trunk.backward_derivs(&p.res, vbar.view(), &[], sbar.view());
        let tb = self.trunk.backward(&p.bnd, ebar.t().dot(b).view());
        tg.iter_mut().zip(tb).for_each(|(a, b)| *a += b);
        (self.branch.backward(&p.bc, bbar.view()), tg)
    }
}

/// Two DeepONets summed: one reads the boundary data, one the source.
#[derive(Clone, Debug, PartialEq)]
pub struct DualDeepOnet {
    pub net_g: DeepOnet,
    pub net_f: DeepOnet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Baseline,
    Wide,
    Deep,
    Dual,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::Baseline, Arch::Wide, Arch::Deep, Arch::Dual];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Baseline => "baseline",
            Arch::Wide => "wide",
            Arch::Deep => "deep",
            Arch::Dual => "dual",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = MadError;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| MadError::invalid(format!("unknown architecture '{s}'")))
    }
}

/// Sizes for building a preset. Hidden widths follow the full-size
/// presets; only the latent size is reduced at desk scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchConfig {
    pub arch: Arch,
    pub dim: usize,
    pub boundary_inputs: usize,
    /// Source branch input length (node count); dual only.
    pub source_inputs: usize,
    pub latent: usize,
}

impl ArchConfig {
    pub fn new(arch: Arch, dim: usize, boundary_inputs: usize, source_inputs: usize) -> Self {
        ArchConfig {
            arch,
            dim,
            boundary_inputs,
            source_inputs,
            latent: DEFAULT_LATENT,
        }
    }

    fn trunk(&self, width: usize, depth: usize, latent: usize) -> Vec<usize> {
        let mut s = vec![self.dim];
        s.extend(std::iter::repeat_n(width, depth));
        s.push(latent);
        s
    }

    pub fn build(&self, seed: u64) -> Result<OperatorModel> {
        let p = self.latent;
        let tanh = Activation::Tanh;
        let mut model = match self.arch {
            Arch::Baseline => OperatorModel::Single(DeepOnet::new(self.boundary_inputs, &self.trunk(110, 4, p), tanh)?),
            Arch::Wide => OperatorModel::Single(DeepOnet::new(self.boundary_inputs, &self.trunk(220, 4, 2 * p), tanh)?),
            Arch::Deep => OperatorModel::Single(DeepOnet::new(self.boundary_inputs, &self.trunk(110, 8, p), tanh)?),
            Arch::Dual => OperatorModel::Dual(DualDeepOnet {
                net_g: DeepOnet::new(self.boundary_inputs, &self.trunk(90, 4, p), tanh)?,
                net_f: DeepOnet::new(self.source_inputs, &self.trunk(110, 4, p), tanh)?,
            }),
        };
        model.init(seed);
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorModel {
    Single(DeepOnet),
    Dual(DualDeepOnet),
}

impl OperatorModel {
    pub fn nets(&self) -> Vec<&Mlp> {
        match self {
            OperatorModel::Single(n) => vec![&n.branch, &n.trunk],
            OperatorModel::Dual(d) => vec![&d.net_g.branch, &d.net_g.trunk, &d.net_f.branch, &d.net_f.trunk],
        }
    }

    pub fn nets_mut(&mut self) -> Vec<&mut Mlp> {
        match self {
            OperatorModel::Single(n) => vec![&mut n.branch, &mut n.trunk],
            OperatorModel::Dual(d) => vec![
                &mut d.net_g.branch,
                &mut d.net_g.trunk,
                &mut d.net_f.branch,
                &mut d.net_f.trunk,
            ],
        }
    }

    pub fn param_count(&self) -> usize {
        self.nets().iter().map(|n| n.param_count()).sum()
    }

    pub fn is_dual(&self) -> bool {
        matches!(self, OperatorModel::Dual(_))
    }

    pub fn dim(&self) -> usize {
        self.boundary_net().dim()
    }

    pub fn boundary_net(&self) -> &DeepOnet {
        match self {
            OperatorModel::Single(n) => n,
            OperatorModel::Dual(d) => &d.net_g,
        }
    }

    pub fn source_net(&self) -> Option<&DeepOnet> {
        match self {
            OperatorModel::Single(_) => None,
            OperatorModel::Dual(d) => Some(&d.net_f),
        }
    }

    pub fn boundary_inputs(&self) -> usize {
        self.boundary_net().branch_inputs()
    }

    pub fn source_inputs(&self) -> Option<usize> {
        self.source_net().map(|n| n.branch_inputs())
    }

    pub fn init(&mut self, seed: u64) {
        let mut rng = rng_from_seed(derive_seed(seed, stream::MODEL_INIT, 0));
        for net in self.nets_mut() {
            net.init(&mut rng);
        }
    }

    pub(crate) fn check_inputs(&self, g: &ArrayView2<f64>, f: Option<&ArrayView2<f64>>) -> Result<()> {
        if let Some(f) = f {
            if f.nrows() != g.nrows() {
                return Err(MadError::DimensionMismatch {
                    what: "source rows",
                    expected: g.nrows(),
                    got: f.nrows(),
                });
            }
            if !self.is_dual() {
                return Err(MadError::invalid("a single DeepONet takes boundary input only; use the dual architecture"));
            }
        }
        if g.ncols() != self.boundary_inputs() {
            return Err(MadError::DimensionMismatch {
                what: "boundary input",
                expected: self.boundary_inputs(),
                got: g.ncols(),
            });
        }
        Ok(())
    }
}

impl Operator for OperatorModel {
    fn predict(&self, g: ArrayView2<f64>, f: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_inputs(&g, f.as_ref())?;
        let mut u = self.boundary_net().forward(g, x)?;
        if let (Some(net), Some(f)) = (self.source_net(), f) {
            u += &net.forward(f, x)?;
        }
        Ok(u)
    }

    fn laplacian(&self, g: ArrayView2<f64>, f: Option<ArrayView2<f64>>, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_inputs(&g, f.as_ref())?;
        let mut l = self.boundary_net().laplacian(g, x)?;
        if let (Some(net), Some(f)) = (self.source_net(), f) {
            l += &net.laplacian(f, x)?;
        }
        Ok(l)
    }
}
