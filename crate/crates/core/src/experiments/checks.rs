//! Numerical verification suites: spectral facts about `Z_W(beta)` and its
//! factors, projection-decay bounds, regret accounting, and the Liouvillian
//! correspondence. Each check reports a measured value against a pinned
//! threshold.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

use super::{fmt_f64, ExperimentConfig};
use crate::error::Result;
use crate::filters::{project_history, slepian_bank_from};
use crate::infomatrix::{hankel_factor, info_matrix_quadrature, log_decay_slope, InfoMatrix, SectorParams};
use crate::learners::VawState;
use crate::numerics::{complex_gaussian, max_abs, sym_eig, CMatrix, CVector, SeedStream, C64};
use crate::systems::{linear_response_trajectory, liouvillian, lti_response, QuantumSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
    Below,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub params: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckOutcome {
    pub fn new(name: &str, params: String, measured: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Below => measured < threshold,
        };
        Self {
            name: name.to_string(),
            params,
            measured,
            relation,
            threshold,
            pass,
        }
    }

    /// Distance to the threshold, positive when the check passes.
    pub fn margin(&self) -> f64 {
        match self.relation {
            Relation::AtMost | Relation::Below => self.threshold - self.measured,
            Relation::AtLeast => self.measured - self.threshold,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {} [{}]: measured {:.3e} {} {:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.params,
            self.measured,
            self.relation.symbol(),
            self.threshold
        )
    }
}

pub fn write_checks_csv<W: Write>(checks: &[CheckOutcome], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["check", "params", "measured", "relation", "threshold", "margin", "pass"])?;
    for c in checks {
        writer.write_record([
            c.name.clone(),
            c.params.clone(),
            fmt_f64(c.measured),
            c.relation.symbol().to_string(),
            fmt_f64(c.threshold),
            fmt_f64(c.margin()),
            c.pass.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn wb(w: usize, beta: f64) -> String {
    format!("W={w} beta={:.4}pi", beta / PI)
}

/// Hankel-Toeplitz entrywise product against the closed form.
pub fn hadamard_check(params: SectorParams) -> CheckOutcome {
    let info = InfoMatrix::new(params);
    CheckOutcome::new(
        "hadamard_identity",
        wb(params.window(), params.beta()),
        info.hadamard_residual(),
        Relation::AtMost,
        1e-14,
    )
}

/// Closed form against the tensor quadrature of the defining area integral.
pub fn quadrature_check(params: SectorParams, grid: usize, tol: f64) -> Result<CheckOutcome> {
    let info = InfoMatrix::new(params);
    let quad = info_matrix_quadrature(params, grid, grid)?;
    Ok(CheckOutcome::new(
        "integral_consistency",
        format!("{} grid={grid}", wb(params.window(), params.beta())),
        max_abs(&(quad.matrix - info.matrix())),
        Relation::AtMost,
        tol,
    ))
}

/// Raw eigenvalues no more negative than `-1e-10 sigma_1`.
pub fn psd_check(info: &InfoMatrix) -> CheckOutcome {
    let values = &info.eig().values;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    CheckOutcome::new(
        "psd",
        wb(info.params().window(), info.params().beta()),
        -min.min(0.0) / values[0],
        Relation::AtMost,
        1e-10,
    )
}

/// `sigma_{ceil(1.5 k*)} / sigma_1`; `None` when that index exceeds W.
pub fn cutoff_ratio_check(info: &InfoMatrix, threshold: f64) -> Option<CheckOutcome> {
    let w = info.params().window();
    let idx = (1.5 * info.k_star() as f64).ceil() as usize;
    if idx > w {
        return None;
    }
    let s = info.eig().clamped();
    Some(CheckOutcome::new(
        "cutoff_ratio",
        format!("{} index={idx}", wb(w, info.params().beta())),
        s[idx - 1] / s[0],
        Relation::AtMost,
        threshold,
    ))
}

/// Fitted slope of `log sigma_k` vs `k/k*` over `[lo, hi]` must be negative.
pub fn cutoff_slope_check(info: &InfoMatrix, lo: usize, hi: usize) -> CheckOutcome {
    let s = info.eig().clamped();
    CheckOutcome::new(
        "cutoff_slope",
        format!("{} k in [{lo}, {hi}]", wb(info.params().window(), info.params().beta())),
        log_decay_slope(&s, info.k_star(), lo, hi),
        Relation::Below,
        0.0,
    )
}

/// Largest `lambda_j / lambda_1` of the Hankel factor for `j >= ceil(3 ln W)`.
pub fn hankel_decay_check(window: usize) -> Result<CheckOutcome> {
    let eig = sym_eig(&hankel_factor(window)?)?;
    let s = eig.clamped();
    let start = (3.0 * (window as f64).ln()).ceil() as usize;
    let worst = s.iter().skip(start.max(1) - 1).fold(0.0f64, |m, &v| m.max(v / s[0]));
    Ok(CheckOutcome::new(
        "hankel_decay",
        format!("W={window} j>={start}"),
        worst,
        Relation::AtMost,
        1e-3,
    ))
}

/// Passband and stopband of the prolate matrix `toeplitz / (2 pi)`.
pub fn dpss_checks(info: &InfoMatrix, tol: f64) -> Result<[CheckOutcome; 2]> {
    let eig = sym_eig(&(info.toeplitz() / (2.0 * PI)))?;
    let k_star = info.k_star() as f64;
    let pass_end = (0.8 * k_star).ceil() as usize;
    let stop_start = (1.2 * k_star).ceil() as usize;
    let label = wb(info.params().window(), info.params().beta());
    let pass_min = eig.values[..pass_end].iter().copied().fold(f64::INFINITY, f64::min);
    let stop_max = eig.values[stop_start - 1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok([
        CheckOutcome::new("dpss_passband", format!("{label} k<={pass_end}"), pass_min, Relation::AtLeast, 1.0 - tol),
        CheckOutcome::new("dpss_stopband", format!("{label} k>={stop_start}"), stop_max, Relation::AtMost, tol),
    ])
}

/// Grid maximum of `|phi_i^dagger mu_W(z)|^2` over an `n x n` polar grid on
/// the full sector, against `(24 * 144 * beta^7 * W^4 * sigma_i)^(1/3)`.
pub fn projection_decay_check(info: &InfoMatrix, index: usize, grid: usize) -> CheckOutcome {
    let w = info.params().window();
    let beta = info.params().beta();
    let eig = info.eig();
    let phi = eig.vectors.column(index - 1);
    let sigma = eig.values[index - 1].max(0.0);
    let mut worst = 0.0f64;
    for a in 0..grid {
        let r = a as f64 / (grid - 1) as f64;
        for b in 0..grid {
            let theta = -beta + 2.0 * beta * b as f64 / (grid - 1) as f64;
            let z = C64::from_polar(r, theta);
            // Horner evaluation of sum_n phi_n z^n.
            let v = phi.iter().rev().fold(C64::new(0.0, 0.0), |acc, &p| acc * z + p);
            worst = worst.max(v.norm_sqr());
        }
    }
    let bound = (24.0 * 144.0 * beta.powi(7) * (w as f64).powi(4) * sigma).cbrt();
    CheckOutcome::new(
        "projection_decay",
        format!("{} i={index} grid={grid}x{grid}", wb(w, beta)),
        worst,
        Relation::AtMost,
        bound,
    )
}

/// Worst relative residual `|(I - Phi Phi^dagger) mu_W(z)|^2 / |mu_W(z)|^2`
/// over random annulus-sector points, with `k = 2 k*` filters.
pub fn subspace_residual_check(
    info: &InfoMatrix,
    points: usize,
    r_min: f64,
    r_max: f64,
    stream: SeedStream,
) -> CheckOutcome {
    let w = info.params().window();
    let beta = info.params().beta();
    let k = (2 * info.k_star()).min(w);
    let bank = slepian_bank_from(info, k);
    let mut rng = stream.rng();
    let mut worst = 0.0f64;
    for _ in 0..points {
        let r = (r_min * r_min + rng.random::<f64>() * (r_max * r_max - r_min * r_min)).sqrt();
        let z = C64::from_polar(r, rng.random_range(-beta..=beta));
        let mut mu = CVector::zeros(w);
        let mut p = C64::new(1.0, 0.0);
        for i in 0..w {
            mu[i] = p;
            p *= z;
        }
        worst = worst.max(bank.residual_sqr(&mu) / mu.norm_squared());
    }
    CheckOutcome::new(
        "subspace_residual",
        format!("{} k={k} points={points}", wb(w, beta)),
        worst,
        Relation::AtMost,
        1e-6,
    )
}

/// Cumulative VAW loss on a realizable stream `y_t = w*^dagger h_t` with
/// Slepian-filtered Gaussian controls, rescaled so `max |h_t| = 1` and
/// `|w*| = 1` (hence `|y_t| <= 1`), against
/// `1.1 * (lambda |w*|^2 + k ln(1 + T L^2 / (lambda k)))`.
pub fn vaw_regret_check(k: usize, len: usize, lambda: f64, stream: SeedStream) -> Result<CheckOutcome> {
    let info = InfoMatrix::new(SectorParams::new(100, 0.5 * PI)?);
    let bank = slepian_bank_from(&info, k);
    let mut rng = stream.rng();
    let controls: Vec<C64> = complex_gaussian(len, &mut rng).iter().copied().collect();
    let mut features = project_history(&bank, &controls);
    let max_norm = features.column_iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    features /= C64::new(max_norm, 0.0);
    let w_star = complex_gaussian(k, &mut rng).normalize();
    let mut state = VawState::new(k, lambda)?;
    let mut total = 0.0;
    for h in features.column_iter() {
        let h = h.into_owned();
        let y = w_star.dotc(&h);
        total += (state.step(&h, y)? - y).norm_sqr();
    }
    let l2 = 1.0;
    let bound = lambda * w_star.norm_squared() + k as f64 * (1.0 + len as f64 * l2 / (lambda * k as f64)).ln();
    Ok(CheckOutcome::new(
        "vaw_regret",
        format!("k={k} T={len} lambda={lambda:e} seed={}", stream.id()),
        total,
        Relation::AtMost,
        1.1 * bound,
    ))
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let v = complex_gaussian(1, rng);
        v[0]
    });
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Two-level system driven by `sigma_x`, observed through `sigma_y`, with a
/// diagonal mixed steady state.
pub fn qubit_system(h0: CMatrix, dt: f64) -> Result<QuantumSystem> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let hc = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let obs = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let rho = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
    QuantumSystem::new(h0, hc, obs, rho, dt)
}

/// Generic LTI convolution of the Liouville triple against the direct
/// density-matrix recursion.
pub fn liouville_trajectory_check(sys: &QuantumSystem, steps: usize, stream: SeedStream) -> Result<CheckOutcome> {
    let triple = liouvillian(sys)?;
    let controls: Vec<C64> = complex_gaussian(steps, &mut stream.rng()).iter().map(|u| C64::new(u.re, 0.0)).collect();
    let via_lti = lti_response(&triple.a, &triple.b, &triple.c, &controls, None)?;
    let direct = linear_response_trajectory(sys, &controls)?;
    let gap = via_lti.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0f64, f64::max);
    Ok(CheckOutcome::new(
        "liouville_trajectory",
        format!("n={} steps={steps}", sys.dim()),
        gap,
        Relation::AtMost,
        1e-8,
    ))
}

/// Schur eigenvalues of the Liouville transition against
/// `{exp(i (E_j - E_k) dt)}`, matched greedily as multisets.
pub fn liouville_spectrum_check(sys: &QuantumSystem) -> Result<CheckOutcome> {
    let triple = liouvillian(sys)?;
    let mut computed: Vec<C64> = triple
        .a
        .clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default();
    let energies = nalgebra::SymmetricEigen::new(sys.h0().clone()).eigenvalues;
    let mut worst = if computed.len() == energies.len().pow(2) { 0.0f64 } else { f64::INFINITY };
    for &ej in energies.iter() {
        for &ek in energies.iter() {
            let target = C64::from_polar(1.0, (ej - ek) * sys.dt());
            let Some((pos, dist)) = computed
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - target).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
            else {
                worst = f64::INFINITY;
                continue;
            };
            worst = worst.max(dist);
            computed.swap_remove(pos);
        }
    }
    Ok(CheckOutcome::new(
        "liouville_spectrum",
        format!("n={} dt={}", sys.dim(), sys.dt()),
        worst,
        Relation::AtMost,
        1e-10,
    ))
}

/// Everything `theory-checks` reports. Sizes follow the configured
/// `--W`/`--beta` lists where a check is parameterized by them.
pub fn run_theory_checks(config: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let root = SeedStream::new(config.seed).fork(super::Command::TheoryChecks.stream_tag());
    let mut out = Vec::new();
    let grid_betas = [0.2 * PI, 0.5 * PI, 0.9 * PI];

    for w in [10, 100] {
        for beta in grid_betas {
            out.push(hadamard_check(SectorParams::new(w, beta)?));
        }
    }
    out.push(quadrature_check(SectorParams::new(6, 0.7)?, 512, 1e-6)?);

    for w in [100, 200, 400] {
        for beta in grid_betas {
            let info = InfoMatrix::new(SectorParams::new(w, beta)?);
            out.push(psd_check(&info));
            out.extend(cutoff_ratio_check(&info, 1e-4));
            let k = info.k_star();
            out.push(cutoff_slope_check(&info, k, (3 * k).min(w)));
        }
    }
    for w in [100, 400] {
        out.push(hankel_decay_check(w)?);
    }
    let dpss = InfoMatrix::new(SectorParams::new(400, 0.5 * PI)?);
    out.extend(dpss_checks(&dpss, 1e-6)?);

    let info = InfoMatrix::new(SectorParams::new(100, 0.5 * PI)?);
    let k = info.k_star();
    for i in [k + 5, k + 15, k + 25] {
        out.push(projection_decay_check(&info, i, 200));
    }
    for (j, beta) in [0.2 * PI, 0.4 * PI].into_iter().enumerate() {
        let info = InfoMatrix::new(SectorParams::new(100, beta)?);
        out.push(subspace_residual_check(&info, 50, config.r_min, config.r_max, root.fork(j as u64)));
    }

    // Configured (W, beta) pairs beyond the fixed grid.
    for &w in &config.windows {
        for &beta in &config.betas {
            let params = SectorParams::new(w, beta)?;
            if w == 100 && (beta - 0.5 * PI).abs() < 1e-12 {
                continue;
            }
            let info = InfoMatrix::new(params);
            out.push(hadamard_check(params));
            out.push(psd_check(&info));
            out.extend(cutoff_ratio_check(&info, 1e-4));
            if info.k_star() < w {
                out.push(cutoff_slope_check(&info, info.k_star(), (3 * info.k_star()).min(w)));
            }
        }
    }

    let spread = qubit_system(
        CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(-0.5, 0.0)])),
        0.3,
    )?;
    out.push(liouville_trajectory_check(&spread, 200, root.fork(10))?);
    out.push(liouville_spectrum_check(&spread)?);
    let mut rng = root.fork(11).rng();
    for n in 2..=6 {
        let h0 = random_hermitian(n, &mut rng);
        let mut hc = random_hermitian(n, &mut rng);
        hc = &hc * C64::new(0.5, 0.0);
        let obs = random_hermitian(n, &mut rng);
        let mut rho = CMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
        rho[(0, 0)] += C64::new(0.1, 0.0);
        rho[(1, 1)] -= C64::new(0.1, 0.0);
        let sys = QuantumSystem::new(h0, hc, obs, rho, 0.2)?;
        out.push(liouville_spectrum_check(&sys)?);
    }

    for k in [5, 20] {
        for seed in 0..3u64 {
            out.push(vaw_regret_check(k, 2000, config.lambda, root.fork(100 + seed))?);
        }
    }
    Ok(out)
}
