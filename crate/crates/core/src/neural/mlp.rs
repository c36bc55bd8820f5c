use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{MadError, Result};
use crate::rng::normal;

const STD: &str = "owned arrays are in standard layout";

/// `tanh` through one `exp` away from the origin, where `1 - 2/(e^{2x}+1)`
/// has no cancellation; within a few ulp of libm and about twice as fast.
#[inline]
pub fn tanh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.5 {
        return x.tanh();
    }
    if ax > 19.0 {
        return 1f64.copysign(x);
    }
    let e = (2.0 * ax).exp();
    (1.0 - 2.0 / (e + 1.0)).copysign(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Linear,
    Tanh,
    Sine,
    Relu,
}

impl Activation {
    /// Twice differentiable, so usable under the physics loss.
    pub fn is_smooth(self) -> bool {
        self != Activation::Relu
    }

    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Tanh => tanh(z),
            Activation::Sine => z.sin(),
            Activation::Relu => z.max(0.0),
        }
    }

    #[inline]
    pub fn d1(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => {
                let t = tanh(z);
                1.0 - t * t
            }
            Activation::Sine => z.cos(),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `sigma'` given the pre-activation `z` and the cached output `a`.
    #[inline]
    pub fn d1_from(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            _ => self.d1(z),
        }
    }

    /// Like [`Activation::derivs`] but reusing the cached output `a`.
    #[inline]
    pub fn derivs_from(self, z: f64, a: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let s = 1.0 - a * a;
                [a, s, -2.0 * a * s, s * (6.0 * a * a - 2.0)]
            }
            Activation::Sine => {
                let c = z.cos();
                [a, c, -a, -c]
            }
            _ => self.derivs(z),
        }
    }

    /// `(sigma, sigma', sigma'', sigma''')` at `z`.
    #[inline]
    pub fn derivs(self, z: f64) -> [f64; 4] {
        match self {
            Activation::Linear => [z, 1.0, 0.0, 0.0],
            Activation::Tanh => {
                let t = tanh(z);
                let s = 1.0 - t * t;
                [t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)]
            }
            Activation::Sine => {
                let (sn, cs) = z.sin_cos();
                [sn, cs, -sn, -cs]
            }
            Activation::Relu => {
                if z > 0.0 {
                    [z, 1.0, 0.0, 0.0]
                } else {
                    [0.0, 0.0, 0.0, 0.0]
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
    pub bias: bool,
}

impl LayerSpec {
    fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + if self.bias { self.fan_out } else { 0 }
    }
}

/// Fully connected network with all parameters in one flat buffer.
/// Layer `l` stores `W` as a row-major `(fan_in, fan_out)` block followed
/// by its bias, so a batch forward pass is `Z = A W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations saved by [`Mlp::forward_cached`]: layer inputs and
/// pre-activations.
pub struct Cache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        self.inputs.last().expect("cache holds the network output")
    }
}

/// Value, spatial gradient and Laplacian channels for every layer.
pub struct DerivCache {
    dim: usize,
    // per layer input: a, grad a (one matrix per coordinate), lap a
    a: Vec<Array2<f64>>,
    ga: Vec<Vec<Array2<f64>>>,
    la: Vec<Array2<f64>>,
    // per layer pre-activation channels
    z: Vec<Array2<f64>>,
    gz: Vec<Vec<Array2<f64>>>,
    lz: Vec<Array2<f64>>,
}

impl DerivCache {
    pub fn value(&self) -> &Array2<f64> {
        self.a.last().expect("non-empty")
    }

    pub fn gradient(&self, axis: usize) -> &Array2<f64> {
        &self.ga.last().expect("non-empty")[axis]
    }

    pub fn laplacian(&self) -> &Array2<f64> {
        self.la.last().expect("non-empty")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Mlp {
    /// `sizes = [in, h1, ..., out]`, one activation per layer.
    pub fn new(sizes: &[usize], activations: &[Activation], bias: bool) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 || sizes.contains(&0) {
            return Err(MadError::invalid(format!(
                "bad MLP shape {sizes:?} with {} activations",
                activations.len()
            )));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| LayerSpec {
                fan_in: w[0],
                fan_out: w[1],
                activation,
                bias,
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() || layers.windows(2).any(|w| w[0].fan_out != w[1].fan_in) {
            return Err(MadError::invalid("MLP layers do not chain"));
        }
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for l in &layers {
            offsets.push(total);
            total += l.param_count();
        }
        Ok(Mlp {
            layers,
            offsets,
            params: vec![0.0; total],
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Glorot-uniform for Tanh/Linear layers, `N(0, 1/fan_in)` for Sine,
    /// `N(0, 2/fan_in)` for Relu; biases start at zero.
    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (l, spec) in self.layers.clone().iter().enumerate() {
            let n = spec.fan_in * spec.fan_out;
            let off = self.offsets[l];
            let w = &mut self.params[off..off + n];
            match spec.activation {
                Activation::Tanh | Activation::Linear => {
                    let lim = (6.0 / (spec.fan_in + spec.fan_out) as f64).sqrt();
                    let u = Uniform::new_inclusive(-lim, lim).expect("finite limits");
                    w.iter_mut().for_each(|v| *v = u.sample(rng));
                }
                Activation::Sine => {
                    let sd = (1.0 / spec.fan_in as f64).sqrt();
                    w.iter_mut().for_each(|v| *v = sd * normal(rng));
                }
                Activation::Relu => {
                    let sd = (2.0 / spec.fan_in as f64).sqrt();
                    w.iter_mut().for_each(|v| *v = sd * normal(rng));
                }
            }
            if spec.bias {
                self.params[off + n..off + n + spec.fan_out].fill(0.0);
            }
        }
    }

    fn weight(&self, l: usize) -> ArrayView2<'_, f64> {
        let spec = &self.layers[l];
        let off = self.offsets[l];
        ArrayView2::from_shape((spec.fan_in, spec.fan_out), &self.params[off..off + spec.fan_in * spec.fan_out])
            .expect("layout matches spec")
    }

    fn bias(&self, l: usize) -> Option<ArrayView1<'_, f64>> {
        let spec = &self.layers[l];
        spec.bias.then(|| {
            let off = self.offsets[l] + spec.fan_in * spec.fan_out;
            ArrayView1::from(&self.params[off..off + spec.fan_out])
        })
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(MadError::DimensionMismatch {
                what: "network input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    fn affine(&self, l: usize, a: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = a.dot(&self.weight(l));
        if let Some(b) = self.bias(l) {
            z += &b;
        }
        z
    }

    /// Batch forward pass; rows of `x` are inputs.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for (l, spec) in self.layers.iter().enumerate() {
            let mut z = self.affine(l, &a.view());
            if spec.activation != Activation::Linear {
                z.mapv_inplace(|v| spec.activation.eval(v));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<Cache> {
        self.check_input(&x)?;
        let mut inputs = vec![x.to_owned()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (l, spec) in self.layers.iter().enumerate() {
            let z = self.affine(l, &inputs[l].view());
            let a = z.mapv(|v| spec.activation.eval(v));
            pre.push(z);
            inputs.push(a);
        }
        Ok(Cache { inputs, pre })
    }

    /// Parameter gradient given `d loss / d output`.
    pub fn backward(&self, cache: &Cache, d_out: ArrayView2<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = d_out.to_owned();
        for l in (0..self.layers.len()).rev() {
            let spec = self.layers[l];
            if spec.activation != Activation::Linear {
                Zip::from(&mut delta)
                    .and(&cache.pre[l])
                    .and(&cache.inputs[l + 1])
                    .for_each(|d, &z, &a| *d *= spec.activation.d1_from(z, a));
            }
            self.accumulate(l, &mut grad, &cache.inputs[l].view(), &delta.view());
            if l > 0 {
                delta = delta.dot(&self.weight(l).t());
            }
        }
        grad
    }

    fn accumulate(&self, l: usize, grad: &mut [f64], a: &ArrayView2<f64>, dz: &ArrayView2<f64>) {
        let spec = self.layers[l];
        let off = self.offsets[l];
        let nw = spec.fan_in * spec.fan_out;
        let gw = a.t().dot(dz);
        for (g, v) in grad[off..off + nw].iter_mut().zip(gw.iter()) {
            *g += v;
        }
        if spec.bias {
            let gb = dz.sum_axis(Axis(0));
            for (g, v) in grad[off + nw..off + nw + spec.fan_out].iter_mut().zip(gb.iter()) {
                *g += v;
            }
        }
    }

    /// Forward pass carrying `grad_x` and `lap_x` of every unit.
    pub fn forward_derivs(&self, x: ArrayView2<f64>) -> Result<DerivCache> {
        self.check_input(&x)?;
        let n = x.nrows();
        let dim = self.input_dim();
        let mut c = DerivCache {
            dim,
            a: vec![x.to_owned()],
            ga: vec![(0..dim)
                .map(|k| {
                    let mut e = Array2::zeros((n, dim));
                    e.column_mut(k).fill(1.0);
                    e
                })
                .collect()],
            la: vec![Array2::zeros((n, dim))],
            z: Vec::new(),
            gz: Vec::new(),
            lz: Vec::new(),
        };
        for (l, spec) in self.layers.iter().enumerate() {
            let w = self.weight(l);
            let z = self.affine(l, &c.a[l].view());
            let gz: Vec<Array2<f64>> = c.ga[l].iter().map(|g| g.dot(&w)).collect();
            let lz = c.la[l].dot(&w);
            let act = spec.activation;
            let mut a = Array2::zeros(z.raw_dim());
            let mut ga: Vec<Array2<f64>> = (0..dim).map(|_| Array2::zeros(z.raw_dim())).collect();
            let mut la = Array2::zeros(z.raw_dim());
            {
                let zs = z.as_slice().expect(STD);
                let lzs = lz.as_slice().expect(STD);
                let gzs: Vec<&[f64]> = gz.iter().map(|g| g.as_slice().expect(STD)).collect();
                let av = a.as_slice_mut().expect(STD);
                let lav = la.as_slice_mut().expect(STD);
                let mut gav: Vec<&mut [f64]> = ga.iter_mut().map(|g| g.as_slice_mut().expect(STD)).collect();
                for e in 0..zs.len() {
                    let [s0, s1, s2, _] = act.derivs(zs[e]);
                    let mut q = 0.0;
                    for k in 0..dim {
                        let g = gzs[k][e];
                        gav[k][e] = s1 * g;
                        q += g * g;
                    }
                    av[e] = s0;
                    lav[e] = s2 * q + s1 * lzs[e];
                }
            }
            c.z.push(z);
            c.gz.push(gz);
            c.lz.push(lz);
            c.a.push(a);
            c.ga.push(ga);
            c.la.push(la);
        }
        Ok(c)
    }

    /// Parameter gradient given adjoints of the output value, gradient
    /// channels (may be empty) and Laplacian.
    pub fn backward_derivs(
        &self,
        c: &DerivCache,
        d_value: ArrayView2<f64>,
        d_grad: &[ArrayView2<f64>],
        d_lap: ArrayView2<f64>,
    ) -> Vec<f64> {
        let dim = c.dim;
        let mut grad = vec![0.0; self.params.len()];
        let mut abar = d_value.to_owned();
        let mut gbar: Vec<Array2<f64>> = if d_grad.is_empty() {
            (0..dim).map(|_| Array2::zeros(abar.raw_dim())).collect()
        } else {
            d_grad.iter().map(|g| g.to_owned()).collect()
        };
        let mut lbar = d_lap.to_owned();
        for l in (0..self.layers.len()).rev() {
            let act = self.layers[l].activation;
            let (z, gz, lz) = (&c.z[l], &c.gz[l], &c.lz[l]);
            let mut zbar = Array2::zeros(z.raw_dim());
            let mut gzbar: Vec<Array2<f64>> = (0..dim).map(|_| Array2::zeros(z.raw_dim())).collect();
            let mut lzbar = Array2::zeros(z.raw_dim());
            {
                let zs = z.as_slice().expect(STD);
                let outs = c.a[l + 1].as_slice().expect(STD);
                let lzs = lz.as_slice().expect(STD);
                let abs = abar.as_slice().expect(STD);
                let lbs = lbar.as_slice().expect(STD);
                let gzs: Vec<&[f64]> = gz.iter().map(|g| g.as_slice().expect(STD)).collect();
                let gbs: Vec<&[f64]> = gbar.iter().map(|g| g.as_slice().expect(STD)).collect();
                let zb = zbar.as_slice_mut().expect(STD);
                let lzb = lzbar.as_slice_mut().expect(STD);
                let mut gzb: Vec<&mut [f64]> = gzbar.iter_mut().map(|g| g.as_slice_mut().expect(STD)).collect();
                for e in 0..zs.len() {
                    let [_, s1, s2, s3] = act.derivs_from(zs[e], outs[e]);
                    let lb = lbs[e];
                    let mut q = 0.0;
                    let mut cross = 0.0;
                    for k in 0..dim {
                        let g = gzs[k][e];
                        let gb = gbs[k][e];
                        q += g * g;
                        cross += gb * g;
                        gzb[k][e] = s1 * gb + 2.0 * lb * s2 * g;
                    }
                    zb[e] = s1 * abs[e] + s2 * cross + lb * (s3 * q + s2 * lzs[e]);
                    lzb[e] = s1 * lb;
                }
            }
            self.accumulate(l, &mut grad, &c.a[l].view(), &zbar.view());
            // bias receives only the value channel; the derivative channels
            // enter through W alone
            let spec = self.layers[l];
            let off = self.offsets[l];
            let nw = spec.fan_in * spec.fan_out;
            let mut gw = c.la[l].t().dot(&lzbar);
            for k in 0..dim {
                gw += &c.ga[l][k].t().dot(&gzbar[k]);
            }
            for (g, v) in grad[off..off + nw].iter_mut().zip(gw.iter()) {
                *g += v;
            }
            if l > 0 {
                let wt = self.weight(l).t().to_owned();
                abar = zbar.dot(&wt);
                for k in 0..dim {
                    gbar[k] = gzbar[k].dot(&wt);
                }
                lbar = lzbar.dot(&wt);
            }
        }
        grad
    }

    /// Block views `(W, b)` for a layer, used by tests and the model file.
    pub fn layer_params(&self, l: usize) -> (Array2<f64>, Option<Array1<f64>>) {
        (self.weight(l).to_owned(), self.bias(l).map(|b| b.to_owned()))
    }

    pub fn set_layer_params(&mut self, l: usize, w: ArrayView2<f64>, b: Option<ArrayView1<f64>>) -> Result<()> {
        let spec = self.layers[l];
        if w.dim() != (spec.fan_in, spec.fan_out) || b.is_some() != spec.bias {
            return Err(MadError::invalid("layer parameter shape mismatch"));
        }
        let off = self.offsets[l];
        let nw = spec.fan_in * spec.fan_out;
        for (dst, src) in self.params[off..off + nw].iter_mut().zip(w.iter()) {
            *dst = *src;
        }
        if let Some(b) = b {
            self.params.as_mut_slice()[off + nw..off + nw + spec.fan_out]
                .iter_mut()
                .zip(b.iter())
                .for_each(|(d, s)| *d = *s);
        }
        Ok(())
    }
}

/// Row slice helper for batch views.
pub(crate) fn rows(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), a.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.slice_mut(s![r, ..]).assign(&a.row(i));
    }
    out
}
