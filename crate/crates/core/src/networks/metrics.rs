//! Per-class power spectrum of a model's output and plateau detection on loss traces.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::encoding::{EncodingSpec, SINGULAR_TOL};
use crate::linalg;
use crate::reps::IrrepTable;
use crate::theory::{partial_target, LearnedSet};

/// Class components `T_c(g)` of every target, used to score `A_c = <f, T_c> / <T_c, T_c>`.
#[derive(Debug, Clone)]
pub struct SpectrumProbe {
    pub names: Vec<String>,
    pub classes: Vec<Vec<usize>>,
    /// `components[c][g]` is the class-`c` part of `x_g`.
    components: Vec<Vec<Vec<f64>>>,
}

impl SpectrumProbe {
    /// Nontrivial classes with nonzero power, in table order.
    pub fn new(table: &IrrepTable, spec: &EncodingSpec) -> Self {
        let classes: Vec<Vec<usize>> = table
            .classes()
            .into_iter()
            .filter(|c| c[0] != table.trivial_index())
            .filter(|c| linalg::max_abs(&spec.x_hat.blocks[c[0]]) > SINGULAR_TOL)
            .collect();
        let base = LearnedSet::trivial(table);
        let components = classes
            .iter()
            .map(|c| {
                let with = base.with_class(table, c);
                table
                    .group()
                    .elements()
                    .map(|g| {
                        let a = partial_target(table, spec, &with, g);
                        let b = partial_target(table, spec, &base, g);
                        a.iter().zip(&b).map(|(p, q)| p - q).collect()
                    })
                    .collect()
            })
            .collect();
        SpectrumProbe { names: classes.iter().map(|c| table.class_name(c)).collect(), classes, components }
    }

    pub fn component(&self, class: usize, g: usize) -> &[f64] {
        &self.components[class][g]
    }

    /// `A_c` for outputs `f` (one column per sample) whose target products are `products`.
    pub fn measure(&self, f: &DMatrix<f64>, products: &[usize]) -> Vec<f64> {
        self.components
            .iter()
            .map(|comp| {
                let mut num = 0.0;
                let mut den = 0.0;
                for (col, &g) in products.iter().enumerate() {
                    let t = &comp[g];
                    num += f.column(col).iter().zip(t).map(|(a, b)| a * b).sum::<f64>();
                    den += t.iter().map(|v| v * v).sum::<f64>();
                }
                num / den
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    pub start_step: usize,
    pub end_step: usize,
    pub level: f64,
}

/// Segments where the relative change between consecutive evaluations stays below `slope_tol`
/// for at least `window` consecutive evaluations. Adjacent segments whose levels agree within
/// `2 * slope_tol * window` relative are merged. The level is the segment median.
pub fn detect_plateaus(trace: &[(usize, f64)], window: usize, slope_tol: f64) -> Vec<Plateau> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=trace.len() {
        let flat = i < trace.len() && {
            let (prev, cur) = (trace[i - 1].1, trace[i].1);
            prev > 0.0 && ((cur - prev) / prev).abs() < slope_tol
        };
        if !flat {
            if i - 1 - start >= window {
                runs.push((start, i - 1));
            }
            start = i;
        }
    }
    let mut out: Vec<Plateau> = Vec::new();
    let merge_tol = 2.0 * slope_tol * window as f64;
    for (a, b) in runs {
        let mut levels: Vec<f64> = trace[a..=b].iter().map(|p| p.1).collect();
        levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let level = levels[levels.len() / 2];
        if let Some(last) = out.last_mut() {
            if ((last.level - level) / last.level).abs() < merge_tol {
                last.end_step = trace[b].0;
                continue;
            }
        }
        out.push(Plateau { start_step: trace[a].0, end_step: trace[b].0, level });
    }
    out
}
