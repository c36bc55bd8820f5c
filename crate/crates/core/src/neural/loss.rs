use ndarray::{Array2, ArrayView2};

use super::deeponet::{DeepOnet, Operator, OperatorModel};
use super::mlp::rows;
use crate::dataset::Dataset;
use crate::error::{MadError, Result};
use crate::geometry::Domain;

pub const DEFAULT_WEIGHTS: (f64, f64) = (0.9, 0.1);

/// Supervised batch: inputs per sample and the reference solution at `x`.
#[derive(Clone, Debug)]
pub struct MadBatch {
    pub g: Array2<f64>,
    pub f: Option<Array2<f64>>,
    pub u: Array2<f64>,
    pub x: Array2<f64>,
}

/// Physics batch: residual points with the source there, boundary points
/// with the Dirichlet data there.
#[derive(Clone, Debug)]
pub struct PinnBatch {
    pub g: Array2<f64>,
    pub f: Option<Array2<f64>>,
    pub x_res: Array2<f64>,
    pub f_res: Array2<f64>,
    pub x_bnd: Array2<f64>,
    pub g_bnd: Array2<f64>,
    pub k: f64,
    pub weights: (f64, f64),
}

fn stack(rows_: impl Iterator<Item = Vec<f64>>, ncols: usize) -> Result<Array2<f64>> {
    let flat: Vec<f64> = rows_.flatten().collect();
    let n = flat.len() / ncols.max(1);
    Array2::from_shape_vec((n, ncols), flat).map_err(|e| MadError::invalid(e.to_string()))
}

pub(crate) fn points(p: &crate::geometry::PointSet) -> Array2<f64> {
    Array2::from_shape_vec((p.len(), p.dim()), p.as_flat().to_vec()).expect("flat point layout")
}

fn check_domain(ds: &Dataset, d: &Domain) -> Result<()> {
    if ds.meta.domain != d.kind() || ds.meta.grid != d.grid() {
        return Err(MadError::invalid("dataset was not generated on this domain/grid"));
    }
    Ok(())
}

fn inputs(ds: &Dataset) -> Result<(Array2<f64>, Option<Array2<f64>>)> {
    let g = stack(ds.samples.iter().map(|s| s.g.clone()), ds.meta.boundary_count())?;
    let f = if ds.meta.has_f {
        Some(stack(
            ds.samples.iter().map(|s| s.f.clone().unwrap_or_default()),
            ds.meta.source_len,
        )?)
    } else {
        None
    };
    Ok((g, f))
}

impl MadBatch {
    pub fn from_dataset(ds: &Dataset, d: &Domain) -> Result<Self> {
        check_domain(ds, d)?;
        if !ds.meta.has_u || ds.is_empty() {
            return Err(MadError::MissingField("u"));
        }
        let (g, f) = inputs(ds)?;
        let u = stack(ds.samples.iter().map(|s| s.u.clone().unwrap_or_default()), ds.meta.solution_len)?;
        Ok(MadBatch { g, f, u, x: points(d.nodes()) })
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> MadBatch {
        MadBatch {
            g: rows(&self.g, idx),
            f: self.f.as_ref().map(|f| rows(f, idx)),
            u: rows(&self.u, idx),
            x: self.x.clone(),
        }
    }
}

impl PinnBatch {
    /// Residual points are the interior nodes; boundary points are the
    /// `Mb` boundary samples where `g` is given.
    pub fn from_dataset(ds: &Dataset, d: &Domain, weights: (f64, f64)) -> Result<Self> {
        check_domain(ds, d)?;
        if ds.is_empty() {
            return Err(MadError::invalid("empty dataset"));
        }
        if ds.meta.equation.has_source() && !ds.meta.has_f {
            return Err(MadError::MissingField("f"));
        }
        let (g, f) = inputs(ds)?;
        let interior: Vec<usize> = d.interior_indices().collect();
        let f_res = match &f {
            Some(f) => {
                let mut out = Array2::zeros((f.nrows(), interior.len()));
                for (c, &i) in interior.iter().enumerate() {
                    out.column_mut(c).assign(&f.column(i));
                }
                out
            }
            None => Array2::zeros((g.nrows(), interior.len())),
        };
        Ok(PinnBatch {
            g_bnd: g.clone(),
            g,
            f,
            x_res: points(&d.interior_points()),
            f_res,
            x_bnd: points(d.boundary_points()),
            k: ds.meta.equation.k,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> PinnBatch {
        PinnBatch {
            g: rows(&self.g, idx),
            f: self.f.as_ref().map(|f| rows(f, idx)),
            x_res: self.x_res.clone(),
            f_res: rows(&self.f_res, idx),
            x_bnd: self.x_bnd.clone(),
            g_bnd: rows(&self.g_bnd, idx),
            k: self.k,
            weights: self.weights,
        }
    }

    fn check(&self) -> Result<()> {
        let (w1, w2) = self.weights;
        if !(w1 >= 0.0 && w2 >= 0.0) {
            return Err(MadError::invalid("loss weights must be >= 0"));
        }
        if self.f_res.dim() != (self.len(), self.x_res.nrows()) || self.g_bnd.dim() != (self.len(), self.x_bnd.nrows()) {
            return Err(MadError::invalid("physics batch targets do not match its points"));
        }
        Ok(())
    }
}

fn mse(d: &Array2<f64>) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64
}

pub fn loss_mad(op: &dyn Operator, b: &MadBatch) -> Result<f64> {
    if b.is_empty() {
        return Err(MadError::invalid("empty batch"));
    }
    let pred = op.predict(b.g.view(), b.f.as_ref().map(|f| f.view()), b.x.view())?;
    if pred.dim() != b.u.dim() {
        return Err(MadError::DimensionMismatch {
            what: "prediction size",
            expected: b.u.len(),
            got: pred.len(),
        });
    }
    Ok(mse(&(pred - &b.u)))
}

pub fn loss_pinn(op: &dyn Operator, b: &PinnBatch) -> Result<f64> {
    if b.is_empty() {
        return Err(MadError::invalid("empty batch"));
    }
    b.check()?;
    let f = b.f.as_ref().map(|f| f.view());
    let r = op.laplacian(b.g.view(), f, b.x_res.view())? + &(op.predict(b.g.view(), f, b.x_res.view())? * b.k) - &b.f_res;
    let e = op.predict(b.g.view(), f, b.x_bnd.view())? - &b.g_bnd;
    Ok(b.weights.0 * mse(&r) + b.weights.1 * mse(&e))
}

/// Networks of a model paired with their branch inputs.
fn parts<'a>(model: &'a OperatorModel, g: &'a Array2<f64>, f: Option<&'a Array2<f64>>) -> Vec<(&'a DeepOnet, ArrayView2<'a, f64>)> {
    let mut v = vec![(model.boundary_net(), g.view())];
    if let (Some(net), Some(f)) = (model.source_net(), f) {
        v.push((net, f.view()));
    }
    v
}

/// Gradient blocks in [`OperatorModel::nets`] order; absent inputs leave
/// their network's block at zero.
fn assemble(model: &OperatorModel, got: Vec<(Vec<f64>, Vec<f64>)>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = model.nets().iter().map(|n| vec![0.0; n.param_count()]).collect();
    for (i, (gb, gt)) in got.into_iter().enumerate() {
        out[2 * i] = gb;
        out[2 * i + 1] = gt;
    }
    out
}

pub fn loss_mad_grad(model: &OperatorModel, b: &MadBatch) -> Result<(f64, Vec<Vec<f64>>)> {
    if b.is_empty() {
        return Err(MadError::invalid("empty batch"));
    }
    model.check_inputs(&b.g.view(), b.f.as_ref().map(|f| f.view()).as_ref())?;
    let nets = parts(model, &b.g, b.f.as_ref());
    let passes = nets.iter().map(|(n, inp)| n.pass(inp.view(), b.x.view())).collect::<Result<Vec<_>>>()?;
    let mut diff = -&b.u;
    for p in &passes {
        diff += &DeepOnet::output(p);
    }
    let loss = mse(&diff);
    let ubar = diff * (2.0 / b.u.len() as f64);
    let grads = nets.iter().zip(&passes).map(|((n, _), p)| n.back(p, &ubar)).collect();
    Ok((loss, assemble(model, grads)))
}

pub fn loss_pinn_grad(model: &OperatorModel, b: &PinnBatch) -> Result<(f64, Vec<Vec<f64>>)> {
    if b.is_empty() {
        return Err(MadError::invalid("empty batch"));
    }
    b.check()?;
    model.check_inputs(&b.g.view(), b.f.as_ref().map(|f| f.view()).as_ref())?;
    let nets = parts(model, &b.g, b.f.as_ref());
    let passes = nets
        .iter()
        .map(|(n, inp)| n.pinn_pass(inp.view(), b.x_res.view(), b.x_bnd.view()))
        .collect::<Result<Vec<_>>>()?;
    let mut r = -&b.f_res;
    let mut e = -&b.g_bnd;
    for p in &passes {
        let (pr, pb) = DeepOnet::pinn_outputs(p, b.k);
        r += &pr;
        e += &pb;
    }
    let (w1, w2) = b.weights;
    let loss = w1 * mse(&r) + w2 * mse(&e);
    let rbar = r * (2.0 * w1 / (b.f_res.len().max(1)) as f64);
    let ebar = e * (2.0 * w2 / (b.g_bnd.len().max(1)) as f64);
    let grads = nets
        .iter()
        .zip(&passes)
        .map(|((n, _), p)| n.pinn_back(p, b.k, &rbar, &ebar))
        .collect();
    Ok((loss, assemble(model, grads)))
}
