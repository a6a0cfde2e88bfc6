use nalgebra::DMatrix;
use serde::Serialize;

/// Quadratic recurrence:
/// `h2 = (W_in x1 + W_drive x2)^2`, `h_i = (W_mix h_{i-1} + W_drive x_i)^2`, `f = W_out h_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticRnn {
    pub w_in: DMatrix<f64>,
    pub w_drive: DMatrix<f64>,
    pub w_mix: DMatrix<f64>,
    pub w_out: DMatrix<f64>,
}

fn square(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v * v)
}

impl QuadraticRnn {
    pub fn hidden(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn order(&self) -> usize {
        self.w_out.nrows()
    }

    /// Pre-activations `z_2..z_k` for a concatenated input of `k` blocks.
    fn pre_activations(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let n = self.order();
        let k = x.nrows() / n;
        let mut zs = Vec::with_capacity(k - 1);
        zs.push(&self.w_in * x.rows(0, n) + &self.w_drive * x.rows(n, n));
        for i in 2..k {
            let h = square(zs.last().unwrap());
            zs.push(&self.w_mix * h + &self.w_drive * x.rows(i * n, n));
        }
        zs
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.w_out * square(self.pre_activations(x).last().unwrap())
    }

    /// Outputs `W_out h_i` for every prefix length `i = 2..k`.
    pub fn running_outputs(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.pre_activations(x).iter().map(|z| &self.w_out * square(z)).collect()
    }

    /// Loss and gradients `[W_in, W_drive, W_mix, W_out]`.
    pub fn loss_grad(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Vec<DMatrix<f64>>) {
        let n = self.order();
        let b = x.ncols() as f64;
        let zs = self.pre_activations(x);
        let last = square(zs.last().unwrap());
        let resid = &self.w_out * &last - y;
        let loss = 0.5 * resid.norm_squared() / b;
        let d_out = &resid * last.transpose() / b;
        let mut d_in = DMatrix::zeros(self.w_in.nrows(), self.w_in.ncols());
        let mut d_drive = DMatrix::zeros(self.w_drive.nrows(), self.w_drive.ncols());
        let mut d_mix = DMatrix::zeros(self.w_mix.nrows(), self.w_mix.ncols());
        let mut delta = self.w_out.transpose() * &resid / b;
        for idx in (0..zs.len()).rev() {
            delta.zip_apply(&zs[idx], |d, z| *d *= 2.0 * z);
            // zs[idx] consumed input block idx + 1.
            d_drive += &delta * x.rows((idx + 1) * n, n).transpose();
            if idx == 0 {
                d_in += &delta * x.rows(0, n).transpose();
            } else {
                d_mix += &delta * square(&zs[idx - 1]).transpose();
                delta = self.w_mix.transpose() * &delta;
            }
        }
        (loss, vec![d_in, d_drive, d_mix, d_out])
    }
}
