//! Experiment-level examples: degenerate configs, full bases, CI scaling,
//! monotonicity, parallel/serial equality and regret accounting.

use std::f64::consts::PI;

use sector_spectral::experiments::checks::vaw_regret_check;
use sector_spectral::experiments::sweep::Basis;
use sector_spectral::experiments::{
    run_basis_ablation, run_dim_ablation, run_lower_bound, run_tomography, Command, ExperimentConfig,
};
use sector_spectral::filters::project_history;
use sector_spectral::learners::raw_window_baseline;
use sector_spectral::numerics::{complex_gaussian, SeedStream};
use sector_spectral::systems::{generate_trajectory, random_sector_lds, LdsEnsemble};

fn quick(command: Command) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(command);
    cfg.trials = 6;
    cfg
}

#[test]
fn full_basis_tomography_learns() {
    let mut cfg = quick(Command::Tomography);
    cfg.ks = vec![5, 100];
    let res = run_tomography(&cfg).unwrap();
    for beta in [0.2 * PI, 0.5 * PI, 0.9 * PI] {
        let g = res.group(beta, 20).unwrap();
        assert!(g.mse(Basis::Slepian, 100).unwrap().mean <= 1e-8);
    }
    // Five filters on the half-plane sector fail to learn, without being
    // worse than predicting the mean.
    let g = res.group(0.5 * PI, 20).unwrap();
    let ratio = g.target_var().mean / g.mse(Basis::Slepian, 5).unwrap().mean;
    assert!((1.0..=10.0).contains(&ratio), "var/MSE = {ratio}");
}

#[test]
fn basis_ablation_full_bases_and_monotone_slepian() {
    let mut cfg = quick(Command::BasisAblation);
    cfg.ks = (1..=20).map(|i| 5 * i).collect();
    let res = run_basis_ablation(&cfg).unwrap();
    let g = res.group(0.5 * PI, 100).unwrap();
    for basis in [Basis::Slepian, Basis::Fourier] {
        assert!(g.mse(basis, 100).unwrap().mean <= 1e-8, "{basis:?} at K=W");
    }
    // Up to the double-precision floor, larger banks never do worse by more
    // than an order of magnitude.
    let floor = 1e-14;
    for pair in cfg.ks.windows(2) {
        let a = g.mse(Basis::Slepian, pair[0]).unwrap().mean.max(floor);
        let b = g.mse(Basis::Slepian, pair[1]).unwrap().mean.max(floor);
        assert!(b <= 10.0 * a, "K={} -> {}: {a:e} -> {b:e}", pair[0], pair[1]);
    }
}

#[test]
fn dim_ablation_handles_scalar_state() {
    let mut cfg = quick(Command::DimAblation);
    cfg.dims = vec![1];
    cfg.ks = vec![10, 60];
    let res = run_dim_ablation(&cfg).unwrap();
    let g = res.group(0.5 * PI, 1).unwrap();
    assert_eq!(g.trials.len(), 6);
    assert!(g.mse(Basis::Slepian, 60).unwrap().mean.is_finite());
}

#[test]
fn quadrupling_trials_halves_ci_width() {
    let mut cfg = ExperimentConfig::defaults(Command::DimAblation);
    cfg.dims = vec![50];
    cfg.ks = vec![20];
    cfg.trials = 20;
    let narrow = run_dim_ablation(&cfg).unwrap();
    cfg.trials = 80;
    let wide = run_dim_ablation(&cfg).unwrap();
    let w20 = narrow.group(0.5 * PI, 50).unwrap().mse(Basis::Slepian, 20).unwrap().half_width();
    let w80 = wide.group(0.5 * PI, 50).unwrap().mse(Basis::Slepian, 20).unwrap().half_width();
    let ratio = w20 / w80;
    assert!((1.3..=3.0).contains(&ratio), "CI width ratio {ratio}");
}

#[test]
fn parallel_and_serial_runs_agree() {
    for command in [Command::Tomography, Command::BasisAblation] {
        let mut cfg = quick(command);
        cfg.ks = vec![10, 40];
        let par = match command {
            Command::Tomography => run_tomography(&cfg).unwrap().rows(),
            _ => run_basis_ablation(&cfg).unwrap().rows(),
        };
        cfg.serial = true;
        let ser = match command {
            Command::Tomography => run_tomography(&cfg).unwrap().rows(),
            _ => run_basis_ablation(&cfg).unwrap().rows(),
        };
        assert_eq!(par, ser);
    }
    let cfg = quick(Command::LowerBound);
    let par = run_lower_bound(&cfg).unwrap().rows();
    let ser = run_lower_bound(&ExperimentConfig { serial: true, ..cfg }).unwrap().rows();
    assert_eq!(par, ser);
}

#[test]
fn raw_window_baseline_learns_noiseless_system() {
    let w = 20;
    let e = LdsEnsemble { d: 5, beta: 0.5 * PI, r_min: 0.85, r_max: 0.95, window: w };
    let sys = random_sector_lds(&e, SeedStream::new(12)).unwrap();
    let traj = generate_trajectory(&sys, 1200, SeedStream::new(13)).unwrap();
    let ledger = raw_window_baseline(&traj.controls, &traj.observations, w, 1e-5).unwrap();
    // Folding h_t into V before predicting gives yhat = y (1 - h^dagger V^-1 h)
    // on noiseless data, and the leverage averages W/t; the final-quarter loss
    // is then about mean|y|^2 (W/t)^2.
    let n = ledger.len();
    let tail = ledger.tail_mean(n / 4);
    let y2: f64 = traj.observations[n + 1 - n / 4..].iter().map(|y| y.norm_sqr()).sum::<f64>() / (n / 4) as f64;
    let predicted = y2 * (w as f64 / (n - n / 4) as f64).powi(2);
    assert!(tail <= 2.0 * predicted, "final-quarter loss {tail:e} vs leverage prediction {predicted:e}");
    let last = ledger.losses()[n - 100..].iter().sum::<f64>();
    let early = ledger.losses()[100..200].iter().sum::<f64>();
    assert!(last < 0.1 * early);
    let half = ledger.cumulative()[ledger.len() / 2 - 1];
    assert!(ledger.total() < 2.0 * half, "growth is not sublinear");
}

#[test]
fn regret_per_k_log_t_is_small() {
    // Pinned from a run over these 10 seeds: the largest ratio was about 0.04.
    let len = 2000usize;
    for k in [5, 20] {
        for seed in 0..10u64 {
            let c = vaw_regret_check(k, len, 1e-5, SeedStream::new(seed).fork(k as u64)).unwrap();
            let ratio = c.measured / (k as f64 * (len as f64).ln());
            assert!(c.pass && ratio <= 0.1, "k={k} seed={seed}: ratio {ratio}");
        }
    }
}

#[test]
fn features_use_the_documented_history() {
    let bank = sector_spectral::filters::FilterBank::identity(3, 3).unwrap();
    let u: Vec<_> = complex_gaussian(5, &mut SeedStream::new(1).rng()).iter().copied().collect();
    let f = project_history(&bank, &u);
    // Column t holds U_{t+1} = [u_{t+1}, u_t, u_{t-1}] (1-based controls).
    assert_eq!(f[(0, 4)], u[4]);
    assert_eq!(f[(1, 4)], u[3]);
    assert_eq!(f[(2, 1)], sector_spectral::numerics::C64::new(0.0, 0.0));
}
