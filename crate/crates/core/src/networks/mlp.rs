use nalgebra::DMatrix;
use serde::Serialize;

use super::activation::Activation;

/// `f(x) = W_out sigma(W_in x)` on concatenated inputs, one sample per column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLayerMlp {
    pub w_in: DMatrix<f64>,
    pub w_out: DMatrix<f64>,
    pub activation: Activation,
}

impl TwoLayerMlp {
    pub fn hidden(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn order(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn k(&self) -> usize {
        self.w_in.ncols() / self.order()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let z = &self.w_in * x;
        &self.w_out * z.map(|v| self.activation.eval(v))
    }

    /// Gradients of `(1/2B) ||f(x) - y||^2`, returned as `[d W_in, d W_out]`.
    pub fn gradients(&self, x: &DMatrix<f64>, resid: &DMatrix<f64>, z: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let b = x.ncols() as f64;
        let a = z.map(|v| self.activation.eval(v));
        let d_out = resid * a.transpose() / b;
        let mut dz = self.w_out.transpose() * resid;
        dz.zip_apply(z, |d, zv| *d *= self.activation.deriv(zv) / b);
        vec![dz * x.transpose(), d_out]
    }

    /// Loss and gradients in one pass.
    pub fn loss_grad(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Vec<DMatrix<f64>>) {
        let z = &self.w_in * x;
        let resid = &self.w_out * z.map(|v| self.activation.eval(v)) - y;
        let loss = 0.5 * resid.norm_squared() / x.ncols() as f64;
        (loss, self.gradients(x, &resid, &z))
    }

    /// Splits `f = f_x + f_plus`, where `f_x` sums `w_i k! prod_j <u_ij, x_j>` over neurons.
    pub fn sigma_pi_decompose(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.order();
        let k = self.k();
        let fact: f64 = (1..=k).map(|v| v as f64).product();
        let mut prod = DMatrix::from_element(self.hidden(), x.ncols(), fact);
        for j in 0..k {
            let zj = self.w_in.columns(j * n, n) * x.rows(j * n, n);
            prod.component_mul_assign(&zj);
        }
        let f_x = &self.w_out * prod;
        let f_plus = self.forward(x) - &f_x;
        (f_x, f_plus)
    }
}
