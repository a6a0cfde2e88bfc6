//! Comparisons of training runs against the closed-form predictions.

use serde::Serialize;

use crate::networks::train::{RunRecord, RunStatus};
use crate::theory::{tie_groups, ClassScore};

#[derive(Debug, Clone, Serialize)]
pub struct StaircaseCheck {
    /// Predicted nonzero plateau levels, one per completed tie group (tied classes share one drop).
    pub predicted: Vec<f64>,
    /// Detected plateau levels above the terminal band.
    pub detected: Vec<f64>,
    pub levels_match: bool,
    pub terminal_reached: bool,
    pub predicted_order: Vec<Vec<String>>,
    pub acquired_order: Vec<String>,
    pub order_match: bool,
}

impl StaircaseCheck {
    pub fn passed(&self) -> bool {
        self.levels_match && self.terminal_reached && self.order_match
    }
}

/// Detected plateaus must match the predicted levels one-to-one within relative `tol`, the run
/// must end below `terminal_fraction * L_0`, and each tie group must be acquired strictly before
/// the next one.
pub fn staircase_check(
    order: &[ClassScore],
    plateaus: &[f64],
    record: &RunRecord,
    tol: f64,
    terminal_fraction: f64,
) -> StaircaseCheck {
    let groups = tie_groups(order);
    let l0 = plateaus[0];
    let band = terminal_fraction * l0;
    let mut predicted = vec![l0];
    let mut seen = 0;
    for g in &groups {
        seen += g.len();
        predicted.push(plateaus[seen]);
    }
    predicted.retain(|&p| p > band);
    let detected: Vec<f64> = record.plateaus.iter().map(|p| p.level).filter(|&l| l > band).collect();
    let levels_match =
        detected.len() == predicted.len() && detected.iter().zip(&predicted).all(|(d, p)| (d - p).abs() <= tol * p);
    let terminal_reached = plateaus.last().is_some_and(|&p| p <= band) && record.final_loss <= band;

    let step_of = |name: &str| {
        record.classes.iter().position(|c| c == name).and_then(|i| record.acquisitions[i])
    };
    let mut acquired: Vec<(usize, String)> =
        record.classes.iter().zip(&record.acquisitions).filter_map(|(c, a)| a.map(|s| (s, c.clone()))).collect();
    acquired.sort();
    let mut order_match = acquired.len() == order.len();
    let mut prev_max: Option<usize> = None;
    for g in &groups {
        let steps: Option<Vec<usize>> = g.iter().map(|n| step_of(n)).collect();
        let Some(steps) = steps else {
            order_match = false;
            break;
        };
        let lo = *steps.iter().min().expect("nonempty group");
        if prev_max.is_some_and(|p| p >= lo) {
            order_match = false;
        }
        prev_max = steps.into_iter().max();
    }
    StaircaseCheck {
        predicted,
        detected,
        levels_match,
        terminal_reached,
        predicted_order: groups,
        acquired_order: acquired.into_iter().map(|(_, c)| c).collect(),
        order_match,
    }
}

/// Acquisition gap between the one-dimensional and higher-dimensional classes of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub k: usize,
    pub seed: u64,
    /// Step by which every 1D class was acquired.
    pub step_1d: usize,
    /// Step by which every higher-dimensional class was acquired.
    pub step_2d: usize,
    pub delta: i64,
    /// True if some class was never acquired; its step is then the budget.
    pub censored: bool,
}

/// `dims[c]` is the irrep dimension of `record.classes[c]`.
pub fn bias_row(k: usize, seed: u64, record: &RunRecord, dims: &[usize]) -> BiasRow {
    let mut censored = false;
    let mut latest = |want_1d: bool| {
        record
            .acquisitions
            .iter()
            .zip(dims)
            .filter(|(_, &d)| (d == 1) == want_1d)
            .map(|(a, _)| {
                a.unwrap_or_else(|| {
                    censored = true;
                    record.steps
                })
            })
            .max()
            .unwrap_or(0)
    };
    let step_1d = latest(true);
    let step_2d = latest(false);
    BiasRow { k, seed, step_1d, step_2d, delta: step_2d as i64 - step_1d as i64, censored }
}

/// Seeds whose gap strictly increases across the given ks (in order).
pub fn increasing_seeds(rows: &[BiasRow], ks: &[usize], seeds: &[u64]) -> Vec<u64> {
    seeds
        .iter()
        .copied()
        .filter(|&s| {
            let deltas: Option<Vec<i64>> =
                ks.iter().map(|&k| rows.iter().find(|r| r.k == k && r.seed == s).map(|r| r.delta)).collect();
            deltas.is_some_and(|d| d.windows(2).all(|w| w[1] > w[0]))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCell {
    pub group_order: usize,
    pub hidden: usize,
    pub norm_loss: f64,
    pub steps: usize,
    pub status: RunStatus,
}

/// `H = m 2^{k-1} |G|` for `m = 1..=k+1`.
pub fn boundary_widths(order: usize, k: usize) -> Vec<usize> {
    (1..=k + 1).map(|m| m * (1 << (k - 1)) * order).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCheck {
    /// Cells at or above the `m = k+1` line that failed to converge.
    pub upper_violations: Vec<(usize, usize)>,
    /// Cells below the `m = 1` line that converged anyway.
    pub lower_violations: Vec<(usize, usize)>,
}

impl PhaseCheck {
    pub fn passed(&self) -> bool {
        self.upper_violations.is_empty() && self.lower_violations.is_empty()
    }
}

pub fn phase_check(cells: &[PhaseCell], k: usize, stop: f64) -> PhaseCheck {
    let mut check = PhaseCheck { upper_violations: Vec::new(), lower_violations: Vec::new() };
    for c in cells {
        let b = boundary_widths(c.group_order, k);
        let good = c.norm_loss < stop;
        if c.hidden >= b[k] && !good {
            check.upper_violations.push((c.group_order, c.hidden));
        }
        if c.hidden < b[0] && good {
            check.lower_violations.push((c.group_order, c.hidden));
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::metrics::Plateau;

    fn record(levels: &[f64], acq: &[Option<usize>], final_loss: f64) -> RunRecord {
        RunRecord {
            arch: "mlp".into(),
            classes: vec!["sign".into(), "2d_1".into()],
            evals: Vec::new(),
            status: RunStatus::Converged,
            steps: 1000,
            initial_loss: levels[0],
            final_loss,
            final_norm_loss: final_loss / levels[0],
            plateaus: levels.iter().map(|&l| Plateau { start_step: 0, end_step: 1, level: l }).collect(),
            acquisitions: acq.to_vec(),
        }
    }

    fn scores() -> Vec<ClassScore> {
        let c = |name: &str, score: f64| ClassScore {
            name: name.into(),
            members: vec![],
            dim: 1,
            c_rho: 1.0,
            score,
            power: 0.0,
        };
        vec![c("sign", 8.0), c("2d_1", 0.7)]
    }

    #[test]
    fn staircase_accepts_and_rejects() {
        let pl = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        let ok = staircase_check(&scores(), &pl, &record(&[0.666, 0.334], &[Some(10), Some(50)], 1e-4), 0.05, 0.05);
        assert!(ok.passed(), "{ok:?}");
        let swapped = staircase_check(&scores(), &pl, &record(&[0.666, 0.334], &[Some(50), Some(10)], 1e-4), 0.05, 0.05);
        assert!(!swapped.order_match);
        let off = staircase_check(&scores(), &pl, &record(&[0.666, 0.25], &[Some(10), Some(50)], 1e-4), 0.05, 0.05);
        assert!(!off.levels_match);
        let stuck = staircase_check(&scores(), &pl, &record(&[0.666, 0.334], &[Some(10), None], 0.3), 0.05, 0.05);
        assert!(!stuck.passed());
    }

    #[test]
    fn bias_gap_and_censoring() {
        let r = record(&[1.0], &[Some(100), Some(400)], 0.0);
        assert_eq!(bias_row(2, 0, &r, &[1, 2]).delta, 300);
        let c = bias_row(3, 0, &record(&[1.0], &[Some(100), None], 0.0), &[1, 2]);
        assert!(c.censored);
        assert_eq!(c.step_2d, 1000);
        let rows = vec![bias_row(2, 0, &r, &[1, 2]), c];
        assert_eq!(increasing_seeds(&rows, &[2, 3], &[0, 1]), vec![0]);
    }

    #[test]
    fn boundaries() {
        assert_eq!(boundary_widths(5, 2), vec![10, 20, 30]);
        let cell = |h, n| PhaseCell { group_order: 5, hidden: h, norm_loss: n, steps: 1, status: RunStatus::Converged };
        assert!(phase_check(&[cell(30, 1e-4), cell(8, 0.5), cell(16, 1e-4)], 2, 1e-3).passed());
        let bad = phase_check(&[cell(32, 0.5), cell(8, 1e-4)], 2, 1e-3);
        assert_eq!(bad.upper_violations, vec![(5, 32)]);
        assert_eq!(bad.lower_violations, vec![(5, 8)]);
    }
}
