//! Online and batch predictors in filtered feature space.
//!
//! Predictions are linear in the feature vector: `y_hat = w^dagger h`. The
//! forward (VAW) forecaster includes the current feature in the covariance
//! before predicting:
//!
//! ```text
//! V_t = lambda I + sum_{s<=t} h_s h_s^dagger
//! b_t = sum_{s<t} conj(y_s) h_s
//! y_hat_t = (V_t^{-1} b_{t-1})^dagger h_t
//! ```
//!
//! With real data this is exactly `h_t^T V_t^{-1} sum_{s<t} y_s h_s`.

use std::io::Write;

use crate::error::{dim_err, param_err, Error, Result};
use crate::filters::{project_history, FilterBank};
use crate::numerics::{regularized_solve, CMatrix, CVector, InverseTracker, C64};

/// How the forecaster obtains `V_t^{-1} b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    /// Sherman-Morrison updates of the inverse, `O(k^2)` per step.
    Incremental,
    /// Fresh Cholesky solve of the accumulated covariance every step.
    Recompute,
}

#[derive(Clone, Debug)]
pub struct VawState {
    lambda: f64,
    /// `sum h_s h_s^dagger`, without the ridge term.
    gram: CMatrix,
    inverse: InverseTracker,
    cross: CVector,
    steps: usize,
    mode: SolveMode,
}

impl VawState {
    pub fn new(k: usize, lambda: f64) -> Result<Self> {
        Self::with_mode(k, lambda, SolveMode::Incremental)
    }

    pub fn with_mode(k: usize, lambda: f64, mode: SolveMode) -> Result<Self> {
        if k == 0 {
            return Err(param_err("feature dimension must be positive"));
        }
        Ok(Self {
            lambda,
            gram: CMatrix::zeros(k, k),
            inverse: InverseTracker::new(k, lambda)?,
            cross: CVector::zeros(k),
            steps: 0,
            mode,
        })
    }

    pub fn k(&self) -> usize {
        self.cross.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `V_t = lambda I + sum h h^dagger`.
    pub fn covariance(&self) -> CMatrix {
        &self.gram + CMatrix::identity(self.k(), self.k()).scale(self.lambda)
    }

    pub fn cross_moment(&self) -> &CVector {
        &self.cross
    }

    /// One round: fold `h` into the covariance, predict, then reveal `y`.
    pub fn step(&mut self, h: &CVector, y: C64) -> Result<C64> {
        if h.len() != self.k() {
            return Err(dim_err(format!(
                "feature has length {}, forecaster expects {}",
                h.len(),
                self.k()
            )));
        }
        self.gram.ger(C64::new(1.0, 0.0), h, &h.conjugate(), C64::new(1.0, 0.0));
        self.inverse.rank_one_update(h)?;
        let weights = match self.mode {
            SolveMode::Incremental => self.inverse.apply(&self.cross)?,
            SolveMode::Recompute => regularized_solve(&self.gram, self.lambda, &self.cross)?,
        };
        let prediction = weights.dotc(h);
        if !prediction.is_finite() {
            return Err(Error::Numerical("non-finite prediction".into()));
        }
        self.cross.axpy(y.conj(), h, C64::new(1.0, 0.0));
        self.steps += 1;
        Ok(prediction)
    }
}

/// Per-step squared errors with their running sum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossLedger {
    losses: Vec<f64>,
    cumulative: Vec<f64>,
    /// Loss of a comparator (e.g. the best fixed predictor), when known.
    pub comparator: Option<f64>,
}

impl LossLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, prediction: C64, target: C64) {
        let loss = (prediction - target).norm_sqr();
        let total = self.total() + loss;
        self.losses.push(loss);
        self.cumulative.push(total);
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Mean loss over the last `n` recorded steps.
    pub fn tail_mean(&self, n: usize) -> f64 {
        let n = n.min(self.len()).max(1);
        self.losses[self.len().saturating_sub(n)..].iter().sum::<f64>() / n as f64
    }

    /// CSV with header `t,step_loss,cumulative_loss`; `t` counts from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["t", "step_loss", "cumulative_loss"])?;
        for (i, (l, c)) in self.losses.iter().zip(&self.cumulative).enumerate() {
            writer.write_record([
                (i + 1).to_string(),
                format!("{l:.16e}"),
                format!("{c:.16e}"),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Cumulative loss minus the comparator's loss.
pub fn regret(ledger: &LossLedger, comparator_loss: f64) -> Result<f64> {
    if comparator_loss.is_nan() || comparator_loss < 0.0 {
        return Err(param_err("comparator loss must be nonnegative"));
    }
    Ok(ledger.total() - comparator_loss)
}

/// Linear predictor `y_hat = w^dagger h`.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeModel {
    pub weights: CVector,
}

impl RidgeModel {
    pub fn predict(&self, h: &CVector) -> C64 {
        self.weights.dotc(h)
    }
}

/// `argmin_w sum_s |w^dagger h_s - y_s|^2 + lambda |w|^2` for features stored
/// as the columns of a `k x n` matrix.
pub fn ridge_fit_columns(features: &CMatrix, targets: &[C64], lambda: f64) -> Result<RidgeModel> {
    if features.ncols() != targets.len() {
        return Err(dim_err(format!(
            "{} feature columns but {} targets",
            features.ncols(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(param_err("ridge regression needs at least one sample"));
    }
    let gram = features * features.adjoint();
    let gram = (&gram + gram.adjoint()).scale(0.5);
    let y_conj = CVector::from_iterator(targets.len(), targets.iter().map(|y| y.conj()));
    let rhs = features * y_conj;
    let weights = regularized_solve(&gram, lambda, &rhs)?;
    Ok(RidgeModel { weights })
}

pub fn ridge_fit(features: &[CVector], targets: &[C64], lambda: f64) -> Result<RidgeModel> {
    let k = features
        .first()
        .ok_or_else(|| param_err("ridge regression needs at least one sample"))?
        .len();
    if features.iter().any(|h| h.len() != k) {
        return Err(dim_err("features have inconsistent lengths"));
    }
    let mut m = CMatrix::zeros(k, features.len());
    for (j, h) in features.iter().enumerate() {
        m.set_column(j, h);
    }
    ridge_fit_columns(&m, targets, lambda)
}

/// Filtered online prediction: at each `t = 1..T-1` the forecaster sees
/// `h_t = Phi^dagger U_t`, predicts `y_{t+1}`, then observes it. The ledger's
/// entry `t` is the loss on `y_{t+1}`.
pub fn filtered_online(
    bank: &FilterBank,
    controls: &[C64],
    observations: &[C64],
    lambda: f64,
) -> Result<LossLedger> {
    filtered_online_with(bank, controls, observations, lambda, SolveMode::Incremental)
}

pub fn filtered_online_with(
    bank: &FilterBank,
    controls: &[C64],
    observations: &[C64],
    lambda: f64,
    mode: SolveMode,
) -> Result<LossLedger> {
    if controls.len() != observations.len() {
        return Err(dim_err("controls and observations differ in length"));
    }
    let features = project_history(bank, controls);
    let mut state = VawState::with_mode(bank.k(), lambda, mode)?;
    let mut ledger = LossLedger::new();
    for t in 0..controls.len().saturating_sub(1) {
        let h = features.column(t).into_owned();
        let target = observations[t + 1];
        let prediction = state.step(&h, target)?;
        ledger.record(prediction, target);
    }
    Ok(ledger)
}

/// The forecaster on raw windows `h_t = U_t` (`k = W` parameters).
pub fn raw_window_baseline(
    controls: &[C64],
    observations: &[C64],
    window: usize,
    lambda: f64,
) -> Result<LossLedger> {
    if controls.len() < window {
        return Err(param_err(format!(
            "trajectory of length {} is shorter than the window {window}",
            controls.len()
        )));
    }
    filtered_online(&FilterBank::identity(window, window)?, controls, observations, lambda)
}
