use nalgebra::DMatrix;
use serde::Serialize;

/// `h_l = (W_l h_{l-1})^2` for `l = 1..L`, then `f = W_{L+1} h_L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeepMlp {
    pub layers: Vec<DMatrix<f64>>,
}

impl DeepMlp {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers[..self.depth()].iter().map(|w| w.nrows()).collect()
    }

    /// Hidden activations `h_0 = x, h_1, ..., h_L` and pre-activations `z_1..z_L`.
    fn trace(&self, x: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut hs = vec![x.clone()];
        let mut zs = Vec::with_capacity(self.depth());
        for w in &self.layers[..self.depth()] {
            let z = w * hs.last().unwrap();
            hs.push(z.map(|v| v * v));
            zs.push(z);
        }
        (hs, zs)
    }

    /// Hidden states `h_1..h_L`.
    pub fn hidden_states(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.trace(x).0.into_iter().skip(1).collect()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (hs, _) = self.trace(x);
        self.layers.last().unwrap() * hs.last().unwrap()
    }

    pub fn loss_grad(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Vec<DMatrix<f64>>) {
        let b = x.ncols() as f64;
        let (hs, zs) = self.trace(x);
        let depth = self.depth();
        let resid = self.layers[depth].clone() * &hs[depth] - y;
        let loss = 0.5 * resid.norm_squared() / b;
        let mut grads = vec![DMatrix::zeros(0, 0); depth + 1];
        grads[depth] = &resid * hs[depth].transpose() / b;
        let mut delta = self.layers[depth].transpose() * &resid / b;
        for l in (0..depth).rev() {
            delta.zip_apply(&zs[l], |d, z| *d *= 2.0 * z);
            grads[l] = &delta * hs[l].transpose();
            if l > 0 {
                delta = self.layers[l].transpose() * &delta;
            }
        }
        (loss, grads)
    }
}
