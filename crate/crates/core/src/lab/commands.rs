//! One function per CLI command. Each returns an [`Outcome`] whose `passed` flag decides the
//! exit status; errors map to usage/config failures.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::artifacts::{create_run_dir, write_metrics, write_rows, write_sidecar};
use super::checks::{
    bias_row, boundary_widths, increasing_seeds, phase_check, staircase_check, BiasRow, PhaseCell, PhaseCheck,
    StaircaseCheck,
};
use super::config::{Arch, Experiment, ExperimentConfig, ModelConfig};
use super::LabError;
use crate::constructions::{
    deep_mlp_solution, full_mlp_solution, mix_block_structure_check, rnn_solution, verify_deep, verify_mlp,
    verify_rnn, BlockReport, DeepReport, MlpReport, RnnReport,
};
use crate::constructions::mlp::verification_dataset;
use crate::encoding::{check_assumptions, EncodingSpec};
use crate::group::GroupReport;
use crate::harmonic::{validate_harmonics, HarmonicReport};
use crate::networks::metrics::{Plateau, SpectrumProbe};
use crate::networks::train::{train, RunRecord, RunStatus, TrainConfig};
use crate::networks::{init_deep, init_mlp, init_rnn, Model};
use crate::reps::{validate_table, IrrepTable, RepReport};
use crate::theory::{predict, Prediction};

const RNN_VERIFY_SEED: u64 = 17;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: serde_json::Value,
    pub passed: bool,
    pub run_dir: Option<PathBuf>,
    pub summary: String,
}

fn outcome<T: Serialize>(report: &T, passed: bool, run_dir: Option<PathBuf>, summary: String) -> Outcome {
    Outcome { report: serde_json::to_value(report).expect("report serializes"), passed, run_dir, summary }
}

pub fn run(command: Experiment, config: &ExperimentConfig) -> Result<Outcome, LabError> {
    match command {
        Experiment::Validate => cmd_validate(config),
        Experiment::Predict => cmd_predict(config),
        Experiment::Construct => cmd_construct(config),
        Experiment::Train | Experiment::Staircase => cmd_train(config),
        Experiment::PhaseDiagram => cmd_phase_diagram(config),
        Experiment::BiasSweep => cmd_bias_sweep(config),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub group: String,
    pub order: usize,
    pub axioms: GroupReport,
    pub representations: RepReport,
    pub failures: Vec<String>,
    pub harmonic: HarmonicReport,
    pub passed: bool,
}

pub fn validate_group(config: &ExperimentConfig) -> Result<ValidateReport, LabError> {
    let table = config.table()?;
    let g = table.group();
    let axioms = g.validate();
    let representations = validate_table(&table);
    let harmonic = validate_harmonics(&table, config.checks.harmonic_trials, config.train.seed);
    let mut failures = representations.failures();
    if !axioms.passed() {
        failures.push(format!("group axioms: {axioms:?}"));
    }
    let tol = config.checks.identity_tol;
    if !harmonic.passed(tol) {
        failures.push(format!("harmonic identities above {tol:e}"));
    }
    Ok(ValidateReport {
        group: g.kind().to_string(),
        order: g.order(),
        passed: failures.is_empty(),
        axioms,
        representations,
        failures,
        harmonic,
    })
}

pub fn cmd_validate(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let r = validate_group(config)?;
    let summary = format!("validate {}: {}", r.group, if r.passed { "all checks pass" } else { "FAILED" });
    Ok(outcome(&r, r.passed, None, summary))
}

pub fn cmd_predict(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let table = config.table()?;
    let spec = config.encoding.build(&table)?;
    let p = predict(&table, &spec, config.k);
    let names: Vec<&str> = p.order.iter().map(|c| c.name.as_str()).collect();
    let summary = format!("predict {} k={}: order {:?}, plateaus {:?}", p.group, p.k, names, p.plateaus);
    Ok(outcome(&p, true, None, summary))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "arch", rename_all = "snake_case")]
pub enum ConstructReport {
    Mlp { report: MlpReport, spectrum: Vec<(String, f64)>, passed: bool },
    Rnn { report: RnnReport, mix_blocks: BlockReport, passed: bool },
    Deep { report: DeepReport, passed: bool },
}

impl ConstructReport {
    pub fn passed(&self) -> bool {
        match self {
            ConstructReport::Mlp { passed, .. }
            | ConstructReport::Rnn { passed, .. }
            | ConstructReport::Deep { passed, .. } => *passed,
        }
    }
}

/// Per-class power spectrum of a model on the exhaustive (or sampled) verification set.
pub fn model_spectrum(table: &IrrepTable, spec: &EncodingSpec, model: &Model, k: usize) -> Result<Vec<(String, f64)>, LabError> {
    let data = verification_dataset(table, spec, k)?;
    let rows = data.all_rows();
    let products: Vec<usize> = rows.iter().map(|&r| data.product(r)).collect();
    let probe = SpectrumProbe::new(table, spec);
    let a = probe.measure(&model.forward(&data.inputs(&rows)), &products);
    Ok(probe.names.into_iter().zip(a).collect())
}

pub fn construct(config: &ExperimentConfig) -> Result<ConstructReport, LabError> {
    let table = config.table()?;
    let spec = config.encoding.build(&table)?;
    let k = config.k;
    Ok(match config.construct.arch {
        Arch::Mlp => {
            let sol = full_mlp_solution(&table, &spec, k, &config.model.activation(k)?)?;
            let report = verify_mlp(&table, &spec, &sol)?;
            let spectrum = model_spectrum(&table, &spec, &Model::Mlp(sol.mlp.clone()), k)?;
            let calibrated = spectrum.iter().all(|(_, a)| (a - 1.0).abs() < 1e-9);
            ConstructReport::Mlp { passed: report.passed() && calibrated, report, spectrum }
        }
        Arch::Rnn => {
            let sol = rnn_solution(&table, &spec)?;
            let report = verify_rnn(&table, &spec, &sol, k, config.construct.sequences, RNN_VERIFY_SEED)?;
            let mix_blocks = mix_block_structure_check(&sol.rnn, &table, &sol.binary.neuron_irrep);
            let passed = report.running_product_error < 1e-8 && mix_blocks.leakage < 1e-9;
            ConstructReport::Rnn { report, mix_blocks, passed }
        }
        Arch::Deep => {
            let sol = deep_mlp_solution(&table, &spec, k)?;
            let report = verify_deep(&table, &spec, &sol, config.construct.samples)?;
            ConstructReport::Deep { passed: report.passed(), report }
        }
    })
}

pub fn cmd_construct(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let r = construct(config)?;
    let summary = format!(
        "construct {:?} {} k={}: {}",
        config.construct.arch,
        config.group,
        config.k,
        if r.passed() { "verified" } else { "FAILED" }
    );
    Ok(outcome(&r, r.passed(), None, summary))
}

/// Seeded initialization; the init stream is separate from the training sampler's.
pub fn build_model(model: &ModelConfig, order: usize, k: usize, seed: u64) -> Result<Model, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let (h, s, fan) = (model.hidden, model.init_scale, model.fan_in_scaling);
    if h == 0 {
        return Err(LabError::Config("hidden width must be positive".into()));
    }
    Ok(match model.arch {
        Arch::Mlp => Model::Mlp(init_mlp(order, k, h, model.activation(k)?, s, fan, &mut rng)),
        Arch::Rnn | Arch::Deep if model.activation.is_some() => {
            return Err(LabError::Config("recurrent and deep models use the fixed quadratic activation".into()))
        }
        Arch::Rnn => Model::Rnn(init_rnn(order, h, s, fan, &mut rng)),
        Arch::Deep => Model::Deep(init_deep(order, k, h, s, fan, &mut rng)?),
    })
}

pub fn train_once(
    table: &IrrepTable,
    spec: &EncodingSpec,
    k: usize,
    model: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<RunRecord, LabError> {
    let mut m = build_model(model, table.group().order(), k, train_config.seed)?;
    Ok(train(&mut m, table, spec, k, train_config)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: &'static str,
    pub group: String,
    pub k: usize,
    pub arch: String,
    pub hidden: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub steps: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_norm_loss: f64,
    pub plateaus: Vec<Plateau>,
    pub acquisitions: Vec<(String, Option<usize>)>,
    pub prediction: Prediction,
    pub staircase: Option<StaircaseCheck>,
    pub warnings: Vec<String>,
}

pub fn run_summary(config: &ExperimentConfig, table: &IrrepTable, spec: &EncodingSpec, record: &RunRecord) -> RunSummary {
    let prediction = predict(table, spec, config.k);
    let staircase = (config.experiment() == Experiment::Staircase).then(|| {
        staircase_check(
            &prediction.order,
            &prediction.plateaus,
            record,
            config.checks.plateau_tol,
            config.checks.terminal_fraction,
        )
    });
    RunSummary {
        experiment: config.experiment().name(),
        group: table.group().kind().to_string(),
        k: config.k,
        arch: record.arch.clone(),
        hidden: config.model.hidden,
        seed: config.train.seed,
        status: record.status,
        steps: record.steps,
        initial_loss: record.initial_loss,
        final_loss: record.final_loss,
        final_norm_loss: record.final_norm_loss,
        plateaus: record.plateaus.clone(),
        acquisitions: record.classes.iter().cloned().zip(record.acquisitions.iter().copied()).collect(),
        warnings: check_assumptions(table, spec, config.k).warnings(),
        prediction,
        staircase,
    }
}

pub fn cmd_train(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let table = config.table()?;
    let spec = config.encoding.build(&table)?;
    let record = train_once(&table, &spec, config.k, &config.model, &config.train)?;
    let summary = run_summary(config, &table, &spec, &record);
    let dir = create_run_dir(config)?;
    write_metrics(&dir.join("metrics.csv"), &record)?;
    write_sidecar(&dir.join("run.json"), config, &summary)?;
    let passed = record.status != RunStatus::Diverged && summary.staircase.as_ref().is_none_or(|s| s.passed());
    let line = format!(
        "{} {} k={} {} H={}: {:?} after {} steps, norm_loss {:.3e} -> {}",
        summary.experiment,
        summary.group,
        summary.k,
        summary.arch,
        summary.hidden,
        record.status,
        record.steps,
        record.final_norm_loss,
        dir.display()
    );
    Ok(outcome(&summary, passed, Some(dir), line))
}

fn pool(config: &ExperimentConfig) -> Result<rayon::ThreadPool, LabError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct Boundary {
    pub group_order: usize,
    /// `H = m 2^{k-1} |G|` for `m = 1..=k+1`.
    pub widths: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub k: usize,
    pub orders: Vec<usize>,
    pub hidden: Vec<usize>,
    pub stop_norm_loss: f64,
    pub boundaries: Vec<Boundary>,
    pub cells: Vec<PhaseCell>,
    pub check: PhaseCheck,
}

pub fn phase_diagram(config: &ExperimentConfig) -> Result<PhaseReport, LabError> {
    let p = &config.phase;
    if p.orders.is_empty() || p.hidden.is_empty() {
        return Err(LabError::Config("phase diagram needs nonempty orders and hidden grids".into()));
    }
    if p.orders.len() > p.max_axis || p.hidden.len() > p.max_axis {
        return Err(LabError::Config(format!(
            "grid {}x{} exceeds the desk-scale cap of {} per axis; split the sweep or raise phase.max_axis",
            p.orders.len(),
            p.hidden.len(),
            p.max_axis
        )));
    }
    if config.train.max_steps > p.max_cell_steps {
        return Err(LabError::Config(format!(
            "train.max_steps {} exceeds the per-cell cap {}; lower it or raise phase.max_cell_steps",
            config.train.max_steps, p.max_cell_steps
        )));
    }
    let k = config.k;
    let jobs: Vec<(usize, usize)> = p.orders.iter().flat_map(|&o| p.hidden.iter().map(move |&h| (o, h))).collect();
    let tables: Vec<(IrrepTable, EncodingSpec)> = p
        .orders
        .iter()
        .map(|&o| {
            let t = IrrepTable::for_group(&p.group(o)?);
            let s = config.encoding.build(&t)?;
            Ok((t, s))
        })
        .collect::<Result<_, LabError>>()?;
    let cells: Vec<PhaseCell> = pool(config)?.install(|| {
        jobs.par_iter()
            .map(|&(o, h)| {
                let (table, spec) = &tables[p.orders.iter().position(|&x| x == o).expect("order in grid")];
                let model = ModelConfig { hidden: h, ..config.model.clone() };
                let r = train_once(table, spec, k, &model, &config.train)?;
                Ok(PhaseCell { group_order: o, hidden: h, norm_loss: r.final_norm_loss, steps: r.steps, status: r.status })
            })
            .collect::<Result<_, LabError>>()
    })?;
    let check = phase_check(&cells, k, config.train.stop_norm_loss);
    Ok(PhaseReport {
        k,
        orders: p.orders.clone(),
        hidden: p.hidden.clone(),
        stop_norm_loss: config.train.stop_norm_loss,
        boundaries: p.orders.iter().map(|&o| Boundary { group_order: o, widths: boundary_widths(o, k) }).collect(),
        cells,
        check,
    })
}

pub fn cmd_phase_diagram(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let report = phase_diagram(config)?;
    let dir = create_run_dir(config)?;
    write_rows(&dir.join("phase.csv"), &report.cells)?;
    write_sidecar(&dir.join("sweep.json"), config, &report)?;
    let passed = report.check.passed();
    let converged = report.cells.iter().filter(|c| c.norm_loss < report.stop_norm_loss).count();
    let line = format!(
        "phase-diagram k={}: {converged}/{} cells converged, boundary check {} -> {}",
        report.k,
        report.cells.len(),
        if passed { "holds" } else { "VIOLATED" },
        dir.display()
    );
    Ok(outcome(&report, passed, Some(dir), line))
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub group: String,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub rows: Vec<BiasRow>,
    /// Seeds whose gap strictly increases with k.
    pub increasing_seeds: Vec<u64>,
    pub majority: bool,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

pub fn bias_sweep(config: &ExperimentConfig) -> Result<BiasReport, LabError> {
    let table = config.table()?;
    let spec = config.encoding.build(&table)?;
    let legs = &config.bias.legs;
    if legs.is_empty() || config.seeds.is_empty() {
        return Err(LabError::Config("bias sweep needs nonempty legs and seeds".into()));
    }
    let probe = SpectrumProbe::new(&table, &spec);
    let dims: Vec<usize> = probe.classes.iter().map(|c| table.irrep(c[0]).dim).collect();
    if !dims.contains(&1) || !dims.iter().any(|&d| d > 1) {
        return Err(LabError::Config(format!(
            "bias sweep needs both 1D and higher-dimensional classes in the encoding; {} has dims {dims:?}",
            config.group
        )));
    }
    let jobs: Vec<(usize, u64)> =
        (0..legs.len()).flat_map(|l| config.seeds.iter().map(move |&s| (l, s))).collect();
    let records: Vec<RunRecord> = pool(config)?.install(|| {
        jobs.par_iter()
            .map(|&(l, seed)| {
                let leg = &legs[l];
                let model = ModelConfig { init_scale: leg.init_scale, ..config.model.clone() };
                let tc = TrainConfig {
                    learning_rate: leg.learning_rate,
                    max_steps: leg.max_steps,
                    seed,
                    ..config.train.clone()
                };
                train_once(&table, &spec, leg.k, &model, &tc)
            })
            .collect::<Result<_, LabError>>()
    })?;
    let rows: Vec<BiasRow> =
        jobs.iter().zip(&records).map(|(&(l, seed), r)| bias_row(legs[l].k, seed, r, &dims)).collect();
    let ks: Vec<usize> = legs.iter().map(|l| l.k).collect();
    let inc = increasing_seeds(&rows, &ks, &config.seeds);
    Ok(BiasReport {
        group: table.group().kind().to_string(),
        majority: 2 * inc.len() > config.seeds.len(),
        increasing_seeds: inc,
        ks,
        seeds: config.seeds.clone(),
        rows,
        records,
    })
}

pub fn cmd_bias_sweep(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let report = bias_sweep(config)?;
    let dir = create_run_dir(config)?;
    let runs = dir.join("runs");
    std::fs::create_dir(&runs)?;
    for (row, rec) in report.rows.iter().zip(&report.records) {
        write_metrics(&runs.join(format!("k{}_seed{}.csv", row.k, row.seed)), rec)?;
    }
    write_rows(&dir.join("bias.csv"), &report.rows)?;
    write_sidecar(&dir.join("sweep.json"), config, &report)?;
    let line = format!(
        "bias-sweep {} ks={:?}: gap increases with k for {}/{} seeds -> {}",
        report.group,
        report.ks,
        report.increasing_seeds.len(),
        report.seeds.len(),
        dir.display()
    );
    Ok(outcome(&report, report.majority, Some(dir), line))
}

