//! The three architectures, their hand-derived gradients, training and instrumentation.

pub mod activation;
pub mod deep;
pub mod metrics;
pub mod mlp;
pub mod rnn;
pub mod train;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

pub use activation::Activation;
pub use deep::DeepMlp;
pub use mlp::TwoLayerMlp;
pub use rnn::QuadraticRnn;

use crate::encoding::Dataset;
use crate::error::NetworkError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "arch", rename_all = "snake_case")]
pub enum Model {
    Mlp(TwoLayerMlp),
    Rnn(QuadraticRnn),
    Deep(DeepMlp),
}

impl Model {
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Model::Mlp(m) => m.forward(x),
            Model::Rnn(m) => m.forward(x),
            Model::Deep(m) => m.forward(x),
        }
    }

    /// `(1/2B) ||f(x) - y||^2` with gradients in [`Model::params`] order.
    pub fn loss_grad(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Vec<DMatrix<f64>>) {
        match self {
            Model::Mlp(m) => m.loss_grad(x, y),
            Model::Rnn(m) => m.loss_grad(x, y),
            Model::Deep(m) => m.loss_grad(x, y),
        }
    }

    pub fn params(&self) -> Vec<&DMatrix<f64>> {
        match self {
            Model::Mlp(m) => vec![&m.w_in, &m.w_out],
            Model::Rnn(m) => vec![&m.w_in, &m.w_drive, &m.w_mix, &m.w_out],
            Model::Deep(m) => m.layers.iter().collect(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        match self {
            Model::Mlp(m) => vec![&mut m.w_in, &mut m.w_out],
            Model::Rnn(m) => vec![&mut m.w_in, &mut m.w_drive, &mut m.w_mix, &mut m.w_out],
            Model::Deep(m) => m.layers.iter_mut().collect(),
        }
    }

    pub fn arch_name(&self) -> &'static str {
        match self {
            Model::Mlp(_) => "mlp",
            Model::Rnn(_) => "rnn",
            Model::Deep(_) => "deep",
        }
    }

    fn check_input(&self, data: &Dataset) -> Result<(), NetworkError> {
        let n = data.order();
        let k = data.k;
        let ok = match self {
            Model::Mlp(m) => m.w_in.ncols() == k * n && m.order() == n && m.activation.degree() >= 1,
            Model::Rnn(m) => m.w_in.ncols() == n && m.order() == n,
            Model::Deep(m) => m.layers[0].ncols() == k * n && m.layers.last().unwrap().nrows() == n,
        };
        if ok {
            Ok(())
        } else {
            Err(NetworkError::Shape(format!("{} model does not fit |G| = {n}, k = {k}", self.arch_name())))
        }
    }
}

/// Mean of `||f(x) - y||^2 / 2` over `rows`.
pub fn loss(model: &Model, data: &Dataset, rows: &[usize]) -> Result<f64, NetworkError> {
    model.check_input(data)?;
    let mut total = 0.0;
    for chunk in rows.chunks(4096) {
        let f = model.forward(&data.inputs(chunk));
        total += (f - data.targets(chunk)).norm_squared();
    }
    Ok(0.5 * total / rows.len() as f64)
}

fn gaussian(rows: usize, cols: usize, std: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let normal = Normal::new(0.0, std).expect("finite std");
    DMatrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

/// Entry standard deviation for a layer with the given fan-in.
fn init_std(scale: f64, fan_in: usize, fan_in_scaling: bool) -> f64 {
    if fan_in_scaling {
        scale / (fan_in as f64).sqrt()
    } else {
        scale
    }
}

pub fn init_mlp(
    order: usize,
    k: usize,
    hidden: usize,
    activation: Activation,
    scale: f64,
    fan_in_scaling: bool,
    rng: &mut impl Rng,
) -> TwoLayerMlp {
    TwoLayerMlp {
        w_in: gaussian(hidden, k * order, init_std(scale, k * order, fan_in_scaling), rng),
        w_out: gaussian(order, hidden, init_std(scale, hidden, fan_in_scaling), rng),
        activation,
    }
}

pub fn init_rnn(order: usize, hidden: usize, scale: f64, fan_in_scaling: bool, rng: &mut impl Rng) -> QuadraticRnn {
    let s_in = init_std(scale, order, fan_in_scaling);
    QuadraticRnn {
        w_in: gaussian(hidden, order, s_in, rng),
        w_drive: gaussian(hidden, order, s_in, rng),
        w_mix: gaussian(hidden, hidden, init_std(scale, hidden, fan_in_scaling), rng),
        w_out: gaussian(order, hidden, init_std(scale, hidden, fan_in_scaling), rng),
    }
}

/// Level-l width is `(k / 2^l) H`; `k` must be a power of two.
pub fn init_deep(
    order: usize,
    k: usize,
    hidden: usize,
    scale: f64,
    fan_in_scaling: bool,
    rng: &mut impl Rng,
) -> Result<DeepMlp, NetworkError> {
    if k < 2 || !k.is_power_of_two() {
        return Err(NetworkError::Config(format!("deep MLP needs k a power of two, got {k}")));
    }
    let mut layers = Vec::new();
    let mut fan_in = k * order;
    let mut width = k / 2 * hidden;
    while width >= hidden {
        layers.push(gaussian(width, fan_in, init_std(scale, fan_in, fan_in_scaling), rng));
        fan_in = width;
        width /= 2;
    }
    layers.push(gaussian(order, fan_in, init_std(scale, fan_in, fan_in_scaling), rng));
    Ok(DeepMlp { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Max relative error between analytic gradients and central differences.
    fn fd_error(model: &Model, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let h = 1e-5;
        let (_, grads) = model.loss_grad(x, y);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (p, g) in grads.iter().enumerate() {
            for idx in 0..g.len() {
                let mut plus = model.clone();
                plus.params_mut()[p][idx] += h;
                let mut minus = model.clone();
                minus.params_mut()[p][idx] -= h;
                let fd = (plus.loss_grad(x, y).0 - minus.loss_grad(x, y).0) / (2.0 * h);
                num = num.max((fd - g[idx]).abs());
                den = den.max(g[idx].abs());
            }
        }
        num / den
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n, b) = (3, 5);
            let x4 = gaussian(4 * n, b, 1.0, &mut rng);
            let y = gaussian(n, b, 1.0, &mut rng);
            let mlp = init_mlp(n, 4, 6, Activation::monic(&[0.1, -0.3, 0.2, 0.5]), 1.0, true, &mut rng);
            let rnn = init_rnn(n, 5, 1.0, true, &mut rng);
            let deep = init_deep(n, 4, 3, 1.0, true, &mut rng).unwrap();
            for m in [Model::Mlp(mlp), Model::Rnn(rnn), Model::Deep(deep)] {
                let e = fd_error(&m, &x4, &y);
                assert!(e < 1e-6, "{} {e}", m.arch_name());
            }
        }
    }

    #[test]
    fn zero_weights_predict_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = Model::Mlp(init_mlp(3, 2, 4, Activation::monomial(2), 1.0, true, &mut rng));
        for p in m.params_mut() {
            p.fill(0.0);
        }
        let x = gaussian(6, 2, 1.0, &mut rng);
        assert!(m.forward(&x).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn deep_widths_halve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = init_deep(5, 8, 7, 1.0, true, &mut rng).unwrap();
        assert_eq!(d.widths(), vec![28, 14, 7]);
        assert!(init_deep(5, 6, 7, 1.0, true, &mut rng).is_err());
    }
}
