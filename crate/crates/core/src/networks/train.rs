//! Optimizer loop with periodic exhaustive (or fixed-sample) evaluation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::metrics::{detect_plateaus, Plateau, SpectrumProbe};
use super::Model;
use crate::encoding::{self, Dataset, DatasetMode, EncodingSpec, SequenceSampler};
use crate::error::NetworkError;
use crate::reps::IrrepTable;

/// Sequences above which evaluation switches to a fixed seeded sample.
pub const EVAL_EXHAUSTIVE_ROWS: u128 = 100_000;
pub const EVAL_SAMPLE_ROWS: usize = 10_000;
/// Floor on neuron norms in the rescaled flow.
pub const RESCALE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    /// Per-neuron step `||theta_i||^exponent log(1/alpha)`; exponent defaults to `1 - k`.
    RescaledFlow {
        #[serde(default)]
        exponent: Option<f64>,
        alpha: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: default_beta1(), beta2: default_beta2(), eps: default_eps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    /// `None` trains on the full exhaustive dataset each step; otherwise fresh samples per step.
    pub batch_size: Option<usize>,
    pub grad_clip: Option<f64>,
    pub max_steps: usize,
    /// Stop once `loss / initial_loss` falls below this.
    pub stop_norm_loss: f64,
    pub seed: u64,
    pub eval_every: usize,
    pub divergence_factor: f64,
    pub plateau_window: usize,
    pub plateau_slope: f64,
    pub acquisition_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::adam(),
            learning_rate: 1e-3,
            batch_size: None,
            grad_clip: Some(0.1),
            max_steps: 100_000,
            stop_norm_loss: 1e-3,
            seed: 0,
            eval_every: 100,
            divergence_factor: 1e3,
            plateau_window: 10,
            plateau_slope: 1e-3,
            acquisition_threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: &str| Err(NetworkError::Config(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == Some(0) {
            return bad("batch_size must be positive");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        if !(self.stop_norm_loss > 0.0 && self.stop_norm_loss < 1.0) {
            return bad("stop_norm_loss must lie in (0, 1)");
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return bad("grad_clip must be positive");
        }
        if let Optimizer::RescaledFlow { alpha, .. } = self.optimizer {
            if !(alpha > 0.0 && alpha < 1.0) {
                return bad("rescaled flow alpha must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalPoint {
    pub step: usize,
    pub loss: f64,
    pub norm_loss: f64,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub arch: String,
    pub classes: Vec<String>,
    pub evals: Vec<EvalPoint>,
    pub status: RunStatus,
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_norm_loss: f64,
    pub plateaus: Vec<Plateau>,
    /// First evaluated step where each class's coefficient reaches the threshold.
    pub acquisitions: Vec<Option<usize>>,
}

impl RunRecord {
    pub fn loss_trace(&self) -> Vec<(usize, f64)> {
        self.evals.iter().map(|e| (e.step, e.loss)).collect()
    }
}

/// Evaluation rows, fixed for the whole run.
struct EvalSet {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    products: Vec<usize>,
}

impl EvalSet {
    fn new(table: &IrrepTable, spec: &EncodingSpec, k: usize, seed: u64) -> Result<Self, NetworkError> {
        let g = table.group();
        let mode = if encoding::exhaustive_rows(g.order(), k) <= EVAL_EXHAUSTIVE_ROWS {
            DatasetMode::Exhaustive
        } else {
            DatasetMode::Sampled { rows: EVAL_SAMPLE_ROWS, seed: seed ^ 0xe7a1 }
        };
        let data = encoding::make_dataset(g, k, spec, mode)?;
        let rows = data.all_rows();
        let products = rows.iter().map(|&r| data.product(r)).collect();
        Ok(EvalSet { x: data.inputs(&rows), y: data.targets(&rows), products })
    }

    fn loss_and_output(&self, model: &Model) -> (f64, DMatrix<f64>) {
        let f = model.forward(&self.x);
        let loss = 0.5 * (&f - &self.y).norm_squared() / self.x.ncols() as f64;
        (loss, f)
    }
}

enum OptState {
    Sgd,
    Adam { m: Vec<DMatrix<f64>>, v: Vec<DMatrix<f64>>, t: i32 },
    Rescaled,
}

fn clip(grads: &mut [DMatrix<f64>], max_norm: f64) {
    let norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads {
            *g *= s;
        }
    }
}

/// Per-neuron factors `||theta_i||^exponent log(1/alpha)`, `theta_i` = row i of `W_in` and
/// column i of `W_out`.
fn rescaled_factors(model: &Model, exponent: f64, alpha: f64) -> Result<Vec<f64>, NetworkError> {
    let Model::Mlp(m) = model else {
        return Err(NetworkError::RescaledFlowArchitecture);
    };
    let log = (1.0 / alpha).ln();
    Ok((0..m.hidden())
        .map(|i| {
            let sq = m.w_in.row(i).norm_squared() + m.w_out.column(i).norm_squared();
            sq.sqrt().max(RESCALE_FLOOR).powf(exponent) * log
        })
        .collect())
}

/// Runs the optimizer on `model` in place. Deterministic given the config and initial weights.
pub fn train(
    model: &mut Model,
    table: &IrrepTable,
    spec: &EncodingSpec,
    k: usize,
    config: &TrainConfig,
) -> Result<RunRecord, NetworkError> {
    config.validate()?;
    let group = table.group();
    let eval = EvalSet::new(table, spec, k, config.seed)?;
    if !matches!(model, Model::Mlp(_)) && matches!(config.optimizer, Optimizer::RescaledFlow { .. }) {
        return Err(NetworkError::RescaledFlowArchitecture);
    }
    let probe = SpectrumProbe::new(table, spec);
    let full = match config.batch_size {
        None => Some(encoding::make_dataset(group, k, spec, DatasetMode::Exhaustive)?),
        Some(_) => None,
    };
    let (full_x, full_y) = match &full {
        Some(d) => {
            let rows = d.all_rows();
            (Some(d.inputs(&rows)), Some(d.targets(&rows)))
        }
        None => (None, None),
    };
    let mut sampler = SequenceSampler::new(group.order(), k, config.seed);
    let mut state = match config.optimizer {
        Optimizer::Sgd => OptState::Sgd,
        Optimizer::Adam { .. } => {
            let zeros: Vec<DMatrix<f64>> =
                model.params().iter().map(|p| DMatrix::zeros(p.nrows(), p.ncols())).collect();
            OptState::Adam { m: zeros.clone(), v: zeros, t: 0 }
        }
        Optimizer::RescaledFlow { .. } => OptState::Rescaled,
    };

    let (initial_loss, f0) = eval.loss_and_output(model);
    let mut evals =
        vec![EvalPoint { step: 0, loss: initial_loss, norm_loss: 1.0, spectrum: probe.measure(&f0, &eval.products) }];
    let mut status = RunStatus::BudgetExhausted;
    let mut steps = 0;
    while steps < config.max_steps {
        let (loss, mut grads) = match (&full_x, &full_y) {
            (Some(x), Some(y)) => model.loss_grad(x, y),
            _ => {
                let seqs = sampler.batch(config.batch_size.expect("sampled mode"));
                let batch = Dataset::from_sequences(group, k, &spec.x, &seqs);
                let rows = batch.all_rows();
                model.loss_grad(&batch.inputs(&rows), &batch.targets(&rows))
            }
        };
        if !loss.is_finite() || loss > config.divergence_factor * initial_loss {
            status = RunStatus::Diverged;
            break;
        }
        if let Some(c) = config.grad_clip {
            clip(&mut grads, c);
        }
        let lr = config.learning_rate;
        match (&mut state, config.optimizer) {
            (OptState::Sgd, _) => {
                for (p, g) in model.params_mut().into_iter().zip(&grads) {
                    *p -= g * lr;
                }
            }
            (OptState::Adam { m, v, t }, Optimizer::Adam { beta1, beta2, eps }) => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t);
                let c2 = 1.0 - beta2.powi(*t);
                for (((p, g), mi), vi) in model.params_mut().into_iter().zip(&grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi *= beta1;
                    *mi += g * (1.0 - beta1);
                    vi.zip_apply(g, |vv, gg| *vv = beta2 * *vv + (1.0 - beta2) * gg * gg);
                    for idx in 0..p.len() {
                        p[idx] -= lr * (mi[idx] / c1) / ((vi[idx] / c2).sqrt() + eps);
                    }
                }
            }
            (OptState::Rescaled, Optimizer::RescaledFlow { exponent, alpha }) => {
                let factors = rescaled_factors(model, exponent.unwrap_or(1.0 - k as f64), alpha)?;
                let Model::Mlp(mlp) = model else { unreachable!("checked above") };
                for (i, f) in factors.iter().enumerate() {
                    let step = lr * f;
                    let mut row = mlp.w_in.row_mut(i);
                    row -= grads[0].row(i) * step;
                    let mut col = mlp.w_out.column_mut(i);
                    col -= grads[1].column(i) * step;
                }
            }
            _ => unreachable!("optimizer state matches config"),
        }
        steps += 1;
        let at_eval = steps % config.eval_every == 0 || steps == config.max_steps;
        let batch_done = full_x.is_some() && loss / initial_loss < config.stop_norm_loss;
        if at_eval || batch_done {
            let (l, f) = eval.loss_and_output(model);
            if !l.is_finite() || l > config.divergence_factor * initial_loss {
                status = RunStatus::Diverged;
                break;
            }
            evals.push(EvalPoint { step: steps, loss: l, norm_loss: l / initial_loss, spectrum: probe.measure(&f, &eval.products) });
            if l / initial_loss < config.stop_norm_loss {
                status = RunStatus::Converged;
                break;
            }
        }
    }
    let last = evals.last().expect("initial eval");
    let (final_loss, final_norm_loss) = (last.loss, last.norm_loss);
    let trace: Vec<(usize, f64)> = evals.iter().map(|e| (e.step, e.loss)).collect();
    let plateaus = detect_plateaus(&trace, config.plateau_window, config.plateau_slope);
    let acquisitions = (0..probe.names.len())
        .map(|c| evals.iter().find(|e| e.spectrum[c] >= config.acquisition_threshold).map(|e| e.step))
        .collect();
    Ok(RunRecord {
        arch: model.arch_name().to_string(),
        classes: probe.names.clone(),
        evals,
        status,
        steps,
        initial_loss,
        final_loss,
        final_norm_loss,
        plateaus,
        acquisitions,
    })
}
