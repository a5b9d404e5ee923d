//! Analytic NLL gradients against central finite differences.

use bdci_core::nn::mlp::{backward_batch, batch_nll, category_dims, stack_rows, LogSigmaClamp, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_batch(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..rows).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    let ts = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    (xs, ts)
}

pub fn as_rows(xs: &[Vec<f64>]) -> Vec<&[f64]> {
    xs.iter().map(|r| r.as_slice()).collect()
}

/// Signs of every hidden pre-activation, for each row of `x`.
fn relu_pattern(model: &Mlp, xs: &[Vec<f64>]) -> Vec<bool> {
    let dims = model.dims();
    let mut signs = Vec::new();
    for x in xs {
        let mut a = x.clone();
        for l in 0..model.num_layers() - 1 {
            let (w, b) = model.layer_ranges(l);
            let (w, b) = (&model.params()[w], &model.params()[b]);
            let z: Vec<f64> = (0..dims[l + 1]).map(|j| b[j] + (0..dims[l]).map(|k| w[j * dims[l] + k] * a[k]).sum::<f64>()).collect();
            signs.extend(z.iter().map(|&v| v > 0.0));
            a = z.iter().map(|&v| v.max(0.0)).collect();
        }
    }
    signs
}

/// Checks `per_layer` random parameters of every layer of a freshly
/// initialized network with `dim` inputs. Returns the number checked.
pub fn check_gradients(dim: usize, per_layer: usize, h: f64) -> Result<usize, String> {
    let clamp = LogSigmaClamp::default();
    let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
    let model = Mlp::init(&category_dims(dim), &mut rng);
    let (xs, ts) = random_batch(&mut rng, 5, dim);
    let x = stack_rows(&as_rows(&xs));
    let (_, grads) = backward_batch(&model, x.view(), &ts, clamp).map_err(|e| e.to_string())?;
    let mut total = 0;
    for l in 0..model.num_layers() {
        let (w, b) = model.layer_ranges(l);
        let (lo, hi) = (w.start.min(b.start), w.end.max(b.end));
        let mut checked = 0;
        while checked < per_layer {
            let i = rng.random_range(lo..hi);
            let mut plus = model.clone();
            plus.params_mut()[i] += h;
            let mut minus = model.clone();
            minus.params_mut()[i] -= h;
            // Central differences are no oracle across a rectifier kink.
            if relu_pattern(&plus, &xs) != relu_pattern(&minus, &xs) {
                continue;
            }
            let fp = batch_nll(&plus, x.view(), &ts, clamp).map_err(|e| e.to_string())?;
            let fm = batch_nll(&minus, x.view(), &ts, clamp).map_err(|e| e.to_string())?;
            let numeric = (fp - fm) / (2.0 * h);
            let err = (numeric - grads[i]).abs();
            if !(err <= 1e-6 || err <= 1e-4 * numeric.abs().max(grads[i].abs())) {
                return Err(format!("dim {dim} layer {l} param {i}: analytic {} numeric {numeric}", grads[i]));
            }
            checked += 1;
        }
        total += checked;
    }
    Ok(total)
}
