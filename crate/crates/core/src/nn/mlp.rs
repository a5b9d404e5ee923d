use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden width of every category network.
pub const HIDDEN_WIDTH: usize = 128;
/// Number of hidden layers of every category network.
pub const HIDDEN_LAYERS: usize = 6;

/// `0.5 * ln(2π)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Clamp applied to the log-σ head before it is exponentiated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSigmaClamp {
    pub lo: f64,
    pub hi: f64,
}

impl Default for LogSigmaClamp {
    fn default() -> Self {
        Self { lo: -10.0, hi: 5.0 }
    }
}

impl LogSigmaClamp {
    pub fn apply(&self, log_sigma: f64) -> f64 {
        log_sigma.clamp(self.lo, self.hi)
    }

    /// Whether a gradient `d` on the clamped value reaches the raw output.
    /// Outside the range it passes only when descent moves the raw value back
    /// toward it, so an output stuck past a bound can recover.
    fn passes_gradient(&self, log_sigma: f64, d: f64) -> bool {
        (log_sigma >= self.lo || d < 0.0) && (log_sigma <= self.hi || d > 0.0)
    }
}

/// Layer sizes of a category network: input, six hidden layers of 128, two outputs.
pub fn category_dims(input: usize) -> Vec<usize> {
    let mut dims = vec![input];
    dims.extend(std::iter::repeat_n(HIDDEN_WIDTH, HIDDEN_LAYERS));
    dims.push(2);
    dims
}

/// Dense feed-forward network with rectifier hidden layers and a linear
/// two-value head `(μ′, log σ′)`.
///
/// All parameters live in one flat buffer. Layer `l` stores its weight
/// matrix (`out × in`, row-major) followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// All-zero network with the given layer sizes.
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0), "invalid layer sizes {dims:?}");
        assert_eq!(dims[dims.len() - 1], 2, "output layer must have two units");
        let n = dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Self { dims: dims.to_vec(), params: vec![0.0; n] }
    }

    /// He-style uniform initialization: weights in `±sqrt(6 / fan_in)`,
    /// zero biases. The output layer uses `±sqrt(1 / fan_in)`.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Self {
        let mut mlp = Self::zeros(dims);
        let layers = mlp.num_layers();
        for l in 0..layers {
            let fan_in = mlp.dims[l] as f64;
            let bound = if l + 1 == layers { (1.0 / fan_in).sqrt() } else { (6.0 / fan_in).sqrt() };
            let (w, _) = mlp.layer_ranges(l);
            for p in &mut mlp.params[w] {
                *p = rng.random_range(-bound..bound);
            }
        }
        mlp
    }

    /// Rebuilds a network from its flat parameters.
    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut mlp = Self::zeros(dims);
        if params.len() != mlp.params.len() {
            return Err(Error::DimensionMismatch { expected: mlp.params.len(), got: params.len() });
        }
        mlp.params = params;
        Ok(mlp)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Flat index ranges of layer `l`'s weights and bias.
    pub fn layer_ranges(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut off = 0;
        for k in 0..l {
            off += self.dims[k + 1] * self.dims[k] + self.dims[k + 1];
        }
        let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
        let w_end = off + fan_out * fan_in;
        (off..w_end, w_end..w_end + fan_out)
    }

    fn weight(&self, l: usize) -> ArrayView2<'_, f64> {
        let (w, _) = self.layer_ranges(l);
        ArrayView2::from_shape((self.dims[l + 1], self.dims[l]), &self.params[w]).expect("layer shape")
    }

    fn bias(&self, l: usize) -> ArrayView1<'_, f64> {
        let (_, b) = self.layer_ranges(l);
        ArrayView1::from(&self.params[b])
    }

    /// Sets layer `l`'s bias (test and fixture helper).
    pub fn set_bias(&mut self, l: usize, bias: &[f64]) {
        let (_, b) = self.layer_ranges(l);
        self.params[b].copy_from_slice(bias);
    }

    /// Sets layer `l`'s weights from a row-major `out × in` slice.
    pub fn set_weights(&mut self, l: usize, weights: &[f64]) {
        let (w, _) = self.layer_ranges(l);
        self.params[w].copy_from_slice(weights);
    }

    fn check_input(&self, got: usize) -> Result<()> {
        if got != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got });
        }
        Ok(())
    }

    /// Raw network output `(μ′, log σ′)` for one input.
    pub fn forward(&self, input: &[f64]) -> Result<(f64, f64)> {
        self.check_input(input.len())?;
        let mut act = input.to_vec();
        for l in 0..self.num_layers() {
            let w = self.weight(l);
            let b = self.bias(l);
            let last = l + 1 == self.num_layers();
            act = (0..w.nrows())
                .map(|o| {
                    let z = w.row(o).iter().zip(&act).map(|(a, x)| a * x).sum::<f64>() + b[o];
                    if last { z } else { z.max(0.0) }
                })
                .collect();
        }
        Ok((act[0], act[1]))
    }

    /// Batched forward pass; returns all pre-activations (needed by backprop).
    fn forward_batch_cached(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let mut zs: Vec<Array2<f64>> = Vec::with_capacity(self.num_layers());
        for l in 0..self.num_layers() {
            let mut z = match zs.last() {
                None => x.dot(&self.weight(l).t()),
                Some(prev) => prev.mapv(|v| v.max(0.0)).dot(&self.weight(l).t()),
            };
            z += &self.bias(l);
            zs.push(z);
        }
        zs
    }

    /// Raw outputs for a batch (`B × in` → `B × 2`).
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        Ok(self.forward_batch_cached(x).pop().expect("at least one layer"))
    }
}

/// Negative log-density of `target` under `N(mu, exp(log_sigma)^2)`.
pub fn nll_loss(mu: f64, log_sigma: f64, target: f64) -> f64 {
    let r = target - mu;
    HALF_LN_2PI + log_sigma + r * r / (2.0 * (2.0 * log_sigma).exp())
}

/// Per-sample NLL with the log-σ clamp applied, plus its gradient with respect
/// to the raw outputs `(μ′, log σ′)`. Past a clamp bound the log-σ gradient
/// is kept only when it points back into the range.
pub fn clamped_nll_with_grad(mu: f64, log_sigma: f64, target: f64, clamp: LogSigmaClamp) -> (f64, f64, f64) {
    let ls = clamp.apply(log_sigma);
    let inv_var = (-2.0 * ls).exp();
    let r = target - mu;
    let loss = HALF_LN_2PI + ls + 0.5 * r * r * inv_var;
    let d_mu = -r * inv_var;
    let d_ls = 1.0 - r * r * inv_var;
    let d_ls = if clamp.passes_gradient(log_sigma, d_ls) { d_ls } else { 0.0 };
    (loss, d_mu, d_ls)
}

/// Mean clamped NLL over a batch and its exact gradient, laid out like
/// [`Mlp::params`].
pub fn backward_batch(
    model: &Mlp,
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    clamp: LogSigmaClamp,
) -> Result<(f64, Vec<f64>)> {
    model.check_input(x.ncols())?;
    if x.nrows() != targets.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: targets.len() });
    }
    let batch = x.nrows() as f64;
    let zs = model.forward_batch_cached(x);
    let out = zs.last().expect("at least one layer");

    let mut loss = 0.0;
    let mut dz = Array2::<f64>::zeros(out.raw_dim());
    for (i, &t) in targets.iter().enumerate() {
        let (l, dmu, dls) = clamped_nll_with_grad(out[[i, 0]], out[[i, 1]], t, clamp);
        loss += l;
        dz[[i, 0]] = dmu / batch;
        dz[[i, 1]] = dls / batch;
    }

    let mut grads = vec![0.0; model.param_count()];
    for l in (0..model.num_layers()).rev() {
        let a_prev: Array2<f64> = if l == 0 { x.to_owned() } else { zs[l - 1].mapv(|v| v.max(0.0)) };
        let dw = dz.t().dot(&a_prev);
        let db: Array1<f64> = dz.sum_axis(Axis(0));
        let (wr, br) = model.layer_ranges(l);
        grads[wr].copy_from_slice(dw.as_slice().expect("standard layout"));
        grads[br].copy_from_slice(db.as_slice().expect("standard layout"));
        if l > 0 {
            let mut da = dz.dot(&model.weight(l));
            da.zip_mut_with(&zs[l - 1], |g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            });
            dz = da;
        }
    }
    Ok((loss / batch, grads))
}

/// Gradient of the clamped NLL for a single sample.
pub fn backward(model: &Mlp, input: &[f64], target: f64, clamp: LogSigmaClamp) -> Result<(f64, Vec<f64>)> {
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
    backward_batch(model, x, &[target], clamp)
}

/// Mean clamped NLL over a batch, without gradients.
pub fn batch_nll(model: &Mlp, x: ArrayView2<'_, f64>, targets: &[f64], clamp: LogSigmaClamp) -> Result<f64> {
    let out = model.forward_batch(x)?;
    let total: f64 = out
        .outer_iter()
        .zip(targets)
        .map(|(o, &t)| nll_loss(o[0], clamp.apply(o[1]), t))
        .sum();
    Ok(total / targets.len() as f64)
}

/// Stacks equal-length rows into a `B × d` matrix.
pub fn stack_rows(rows: &[&[f64]]) -> Array2<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let mut m = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        m.slice_mut(s![i, ..]).assign(&ArrayView1::from(*r));
    }
    m
}
