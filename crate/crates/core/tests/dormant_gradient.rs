//! Near the origin the loss gradient of a single neuron is minus the gradient of its utility.

use gclab::encoding::{centered_one_hot, make_dataset, DatasetMode};
use gclab::group::parse_group;
use gclab::networks::{Activation, TwoLayerMlp};
use gclab::reps::IrrepTable;
use gclab::theory::{neuron_utility, LearnedSet, Neuron, UtilityMode};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(spec: &str, k: usize, seed: u64) {
    let t = IrrepTable::for_group(&parse_group(spec).unwrap());
    let n = t.group().order();
    let e = centered_one_hot(&t);
    let data = make_dataset(t.group(), k, &e, DatasetMode::Exhaustive).unwrap();
    let rows = data.all_rows();
    let (x, y) = (data.inputs(&rows), data.targets(&rows));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..k * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let utility = |u: &[f64], w: &[f64]| {
        let neuron = Neuron { u: u.chunks(n).map(|c| c.to_vec()).collect(), w: w.to_vec() };
        neuron_utility(&t, &e, &LearnedSet::trivial(&t), &neuron, UtilityMode::Direct).unwrap()
    };

    let scale = 1e-4;
    let mlp = TwoLayerMlp {
        w_in: DMatrix::from_row_slice(1, k * n, &u.iter().map(|v| v * scale).collect::<Vec<_>>()),
        w_out: DMatrix::from_column_slice(n, 1, &w.iter().map(|v| v * scale).collect::<Vec<_>>()),
        activation: Activation::monomial(k),
    };
    let (_, grads) = mlp.loss_grad(&x, &y);

    // Utility is homogeneous, so its gradient at the scaled point is scale^k times the unit one.
    let h = 1e-6;
    let fd = |f: &dyn Fn(f64) -> f64| (f(h) - f(-h)) / (2.0 * h);
    let factor = scale.powi(k as i32);
    let mut worst: f64 = 0.0;
    for i in 0..k * n {
        let g = fd(&|d| {
            let mut v = u.clone();
            v[i] += d;
            utility(&v, &w)
        });
        worst = worst.max((grads[0][(0, i)] + factor * g).abs() / factor);
    }
    for i in 0..n {
        let g = fd(&|d| {
            let mut v = w.clone();
            v[i] += d;
            utility(&u, &v)
        });
        worst = worst.max((grads[1][(i, 0)] + factor * g).abs() / factor);
    }
    assert!(worst < 1e-6, "{spec} k={k}: {worst:e}");
}

#[test]
fn dormant_gradient_is_utility_ascent() {
    for (spec, k) in [("C5", 2), ("D3", 2), ("D3", 3)] {
        for seed in 0..3 {
            check(spec, k, seed);
        }
    }
}
