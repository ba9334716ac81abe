//! Tomography-style sweeps (batch ridge on filtered features) and the
//! shift-register lower-bound experiment.

use std::io::Write;

use rayon::prelude::*;

use super::{fmt_f64, Command, ExperimentConfig};
use crate::error::Result;
use crate::filters::{fourier_bank, project_history, slepian_bank, FilterBank};
use crate::infomatrix::{effective_dimension, SectorParams};
use crate::learners::{ridge_fit_columns, LossLedger, VawState};
use crate::numerics::{CVector, SeedStream, C64};
use crate::systems::{generate_trajectory, random_sector_lds, LdsEnsemble, ShiftRegister};

/// One line of a result CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: &'static str,
    pub window: usize,
    pub beta: Option<f64>,
    pub k_star: Option<usize>,
    pub d: usize,
    pub basis: &'static str,
    pub k: Option<usize>,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub metric: &'static str,
    pub value: f64,
}

impl ResultRow {
    pub const HEADER: [&'static str; 11] = [
        "experiment", "W", "beta", "k_star", "d", "basis", "K", "trial", "seed", "metric", "value",
    ];

    fn record(&self) -> [String; 11] {
        let opt = |x: Option<String>| x.unwrap_or_default();
        [
            self.experiment.to_string(),
            self.window.to_string(),
            opt(self.beta.map(fmt_f64)),
            opt(self.k_star.map(|k| k.to_string())),
            self.d.to_string(),
            self.basis.to_string(),
            opt(self.k.map(|k| k.to_string())),
            opt(self.trial.map(|t| t.to_string())),
            opt(self.seed.map(|s| s.to_string())),
            self.metric.to_string(),
            fmt_f64(self.value),
        ]
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(ResultRow::HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = 1.96 * sd / (n as f64).sqrt();
        Self {
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
            n,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Slepian,
    Fourier,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Slepian => "slepian",
            Basis::Fourier => "fourier",
        }
    }

    fn bank(self, params: SectorParams, k: usize) -> Result<FilterBank> {
        match self {
            Basis::Slepian => slepian_bank(params, k),
            Basis::Fourier => fourier_bank(params.window(), k),
        }
    }
}

/// Outcome of one trial: shared target variance plus test MSE per basis and K.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub target_var: f64,
    /// `mse[basis][k_index]`.
    pub mse: Vec<Vec<f64>>,
}

/// All trials of one `(W, beta, d)` cell.
#[derive(Clone, Debug)]
pub struct SweepGroup {
    pub params: SectorParams,
    pub d: usize,
    pub bases: Vec<Basis>,
    pub ks: Vec<usize>,
    pub trials: Vec<TrialOutcome>,
}

impl SweepGroup {
    pub fn k_star(&self) -> usize {
        effective_dimension(&self.params)
    }

    fn k_index(&self, k: usize) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    fn basis_index(&self, basis: Basis) -> Option<usize> {
        self.bases.iter().position(|&b| b == basis)
    }

    /// Per-trial test MSE for `(basis, K)`, if that cell was run.
    pub fn mse_values(&self, basis: Basis, k: usize) -> Option<Vec<f64>> {
        let (b, i) = (self.basis_index(basis)?, self.k_index(k)?);
        Some(self.trials.iter().map(|t| t.mse[b][i]).collect())
    }

    pub fn mse(&self, basis: Basis, k: usize) -> Option<Aggregate> {
        self.mse_values(basis, k).map(|v| Aggregate::of(&v))
    }

    pub fn target_var(&self) -> Aggregate {
        Aggregate::of(&self.trials.iter().map(|t| t.target_var).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub experiment: &'static str,
    pub groups: Vec<SweepGroup>,
}

impl SweepResult {
    /// First group matching `beta` (to 1e-12) and `d`.
    pub fn group(&self, beta: f64, d: usize) -> Option<&SweepGroup> {
        self.groups
            .iter()
            .find(|g| (g.params.beta() - beta).abs() < 1e-12 && g.d == d)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for g in &self.groups {
            let base = ResultRow {
                experiment: self.experiment,
                window: g.params.window(),
                beta: Some(g.params.beta()),
                k_star: Some(g.k_star()),
                d: g.d,
                basis: "",
                k: None,
                trial: None,
                seed: None,
                metric: "",
                value: 0.0,
            };
            for (ti, trial) in g.trials.iter().enumerate() {
                let per = ResultRow { trial: Some(ti), seed: Some(trial.seed), ..base.clone() };
                rows.push(ResultRow { metric: "target_var", value: trial.target_var, ..per.clone() });
                for (bi, basis) in g.bases.iter().enumerate() {
                    for (ki, &k) in g.ks.iter().enumerate() {
                        rows.push(ResultRow {
                            basis: basis.name(),
                            k: Some(k),
                            metric: "test_mse",
                            value: trial.mse[bi][ki],
                            ..per.clone()
                        });
                    }
                }
            }
            let tv = g.target_var();
            rows.push(ResultRow { metric: "target_var_mean", value: tv.mean, ..base.clone() });
            for basis in &g.bases {
                for &k in &g.ks {
                    let agg = g.mse(*basis, k).expect("cell exists");
                    for (metric, value) in [
                        ("test_mse_mean", agg.mean),
                        ("test_mse_ci_low", agg.ci_low),
                        ("test_mse_ci_high", agg.ci_high),
                    ] {
                        rows.push(ResultRow { basis: basis.name(), k: Some(k), metric, value, ..base.clone() });
                    }
                }
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.rows(), out)
    }
}

/// Data-generation and fitting protocol shared by every trial of a cell.
#[derive(Clone, Debug)]
pub struct TrialProtocol {
    pub ensemble: LdsEnsemble,
    pub len: usize,
    pub t_train: usize,
    pub lambda: f64,
}

/// One trial: draw a system and a trajectory, then for every bank and every
/// `K` fit ridge on the first `K` features of the training pairs
/// `(h_t, y_{t+1})`, `t < T_train`, and score on the rest.
pub fn tomography_trial(
    protocol: &TrialProtocol,
    banks: &[FilterBank],
    ks: &[usize],
    stream: SeedStream,
) -> Result<TrialOutcome> {
    let sys = random_sector_lds(&protocol.ensemble, stream.fork(0))?;
    let traj = generate_trajectory(&sys, protocol.len, stream.fork(1))?;
    let y = &traj.observations;
    let n_train = protocol.t_train - 1;
    let n_test = protocol.len - protocol.t_train;
    let train_targets = &y[1..protocol.t_train];
    let test_targets = &y[protocol.t_train..];
    let test_mean: C64 = test_targets.iter().sum::<C64>() / n_test as f64;
    let target_var = test_targets.iter().map(|v| (v - test_mean).norm_sqr()).sum::<f64>() / n_test as f64;

    let mut mse = Vec::with_capacity(banks.len());
    for bank in banks {
        let features = project_history(bank, &traj.controls);
        let mut per_k = Vec::with_capacity(ks.len());
        for &k in ks {
            let train = features.view((0, 0), (k, n_train)).into_owned();
            let model = ridge_fit_columns(&train, train_targets, protocol.lambda)?;
            let test = features.view((0, n_train), (k, n_test));
            let sq: f64 = test
                .column_iter()
                .zip(test_targets)
                .map(|(h, target)| (model.weights.dotc(&h) - target).norm_sqr())
                .sum();
            per_k.push(sq / n_test as f64);
        }
        mse.push(per_k);
    }
    Ok(TrialOutcome {
        seed: stream.id(),
        target_var,
        mse,
    })
}

fn map_trials<T, F>(serial: bool, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if serial {
        (0..jobs).map(f).collect()
    } else {
        (0..jobs).into_par_iter().map(f).collect()
    }
}

fn run_sweep(config: &ExperimentConfig, experiment: &'static str, bases: &[Basis]) -> Result<SweepResult> {
    config.validate()?;
    let root = SeedStream::new(config.seed).fork(config.command.stream_tag());
    let k_max = *config.ks.iter().max().expect("validated non-empty");
    let mut cells = Vec::new();
    for &window in &config.windows {
        for &beta in &config.betas {
            for &d in &config.dims {
                cells.push((window, beta, d));
            }
        }
    }
    let mut groups = Vec::with_capacity(cells.len());
    for (gi, &(window, beta, d)) in cells.iter().enumerate() {
        let params = SectorParams::new(window, beta)?;
        let banks: Vec<FilterBank> = bases.iter().map(|b| b.bank(params, k_max)).collect::<Result<_>>()?;
        let protocol = TrialProtocol {
            ensemble: LdsEnsemble { d, beta, r_min: config.r_min, r_max: config.r_max, window },
            len: config.len,
            t_train: config.t_train,
            lambda: config.lambda,
        };
        let group_stream = root.fork(gi as u64);
        let trials = map_trials(config.serial, config.trials, |t| {
            tomography_trial(&protocol, &banks, &config.ks, group_stream.fork(t as u64))
        })?;
        groups.push(SweepGroup {
            params,
            d,
            bases: bases.to_vec(),
            ks: config.ks.clone(),
            trials,
        });
    }
    Ok(SweepResult { experiment, groups })
}

/// Test MSE vs K for each beta with the Slepian bank.
pub fn run_tomography(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(config, "tomography", &[Basis::Slepian])
}

/// Test MSE vs K for each hidden dimension with the Slepian bank.
pub fn run_dim_ablation(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(config, "dim_ablation", &[Basis::Slepian])
}

/// Paired Slepian and Fourier sweeps on shared trial data.
pub fn run_basis_ablation(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(config, "basis_ablation", &[Basis::Slepian, Basis::Fourier])
}

/// Forecaster losses on an autonomous stream, with features the last `W`
/// observations (most recent first, zero-padded). Entry `t` of the ledger is
/// the loss on `y[t]`.
pub fn past_observation_losses(y: &[C64], window: usize, lambda: f64) -> Result<LossLedger> {
    let mut state = VawState::new(window, lambda)?;
    let mut ledger = LossLedger::new();
    for t in 0..y.len() {
        let h = CVector::from_fn(window, |i, _| if i < t { y[t - 1 - i] } else { C64::new(0.0, 0.0) });
        let prediction = state.step(&h, y[t])?;
        ledger.record(prediction, y[t]);
    }
    Ok(ledger)
}

/// Cumulative loss over the first `d` rounds on a random shift register,
/// predicting from the past `d` observations.
pub fn lower_bound_trial(d: usize, lambda: f64, stream: SeedStream) -> Result<f64> {
    let register = ShiftRegister::random(d, stream)?;
    let y: Vec<C64> = register.stream(d).into_iter().map(|v| C64::new(v, 0.0)).collect();
    Ok(past_observation_losses(&y, d, lambda)?.total())
}

#[derive(Clone, Debug)]
pub struct LowerBoundResult {
    pub groups: Vec<(usize, Vec<(u64, f64)>)>,
}

impl LowerBoundResult {
    pub fn losses(&self, d: usize) -> Option<Vec<f64>> {
        self.groups
            .iter()
            .find(|g| g.0 == d)
            .map(|g| g.1.iter().map(|t| t.1).collect())
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for (d, trials) in &self.groups {
            let base = ResultRow {
                experiment: "lower_bound",
                window: *d,
                beta: None,
                k_star: None,
                d: *d,
                basis: "raw",
                k: Some(*d),
                trial: None,
                seed: None,
                metric: "",
                value: 0.0,
            };
            for (ti, &(seed, loss)) in trials.iter().enumerate() {
                rows.push(ResultRow {
                    trial: Some(ti),
                    seed: Some(seed),
                    metric: "cumulative_loss",
                    value: loss,
                    ..base.clone()
                });
            }
            let agg = Aggregate::of(&trials.iter().map(|t| t.1).collect::<Vec<_>>());
            for (metric, value) in [
                ("cumulative_loss_mean", agg.mean),
                ("cumulative_loss_ci_low", agg.ci_low),
                ("cumulative_loss_ci_high", agg.ci_high),
            ] {
                rows.push(ResultRow { metric, value, ..base.clone() });
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.rows(), out)
    }
}

pub fn run_lower_bound(config: &ExperimentConfig) -> Result<LowerBoundResult> {
    config.validate()?;
    let root = SeedStream::new(config.seed).fork(Command::LowerBound.stream_tag());
    let mut groups = Vec::new();
    for (gi, &d) in config.dims.iter().enumerate() {
        let group_stream = root.fork(gi as u64);
        let trials = map_trials(config.serial, config.trials, |t| {
            let stream = group_stream.fork(t as u64);
            Ok((stream.id(), lower_bound_trial(d, config.lambda, stream)?))
        })?;
        groups.push((d, trials));
    }
    Ok(LowerBoundResult { groups })
}
