//! Data sources: random sector-constrained LTI systems, the unitary
//! Liouvillian of a driven Hamiltonian, and the shift-register instance.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::numerics::{complex_gaussian, hermitian_exp, is_hermitian, CMatrix, CVector, SeedStream, C64};

/// LTI system in its diagonal frame: transition eigenvalues `z_j`, input
/// weights `B_j`, output weights `C_j` and the mode coefficients
/// `c_j = C_j B_j`, truncated to a memory window `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorLds {
    eigenvalues: Vec<C64>,
    input: Vec<C64>,
    output: Vec<C64>,
    mode_coeffs: Vec<C64>,
    window: usize,
}

impl SectorLds {
    pub fn from_parts(eigenvalues: Vec<C64>, input: Vec<C64>, output: Vec<C64>, window: usize) -> Result<Self> {
        if eigenvalues.len() != input.len() || input.len() != output.len() {
            return Err(dim_err("eigenvalues, input and output weights differ in length"));
        }
        if window < 1 {
            return Err(param_err("window must be at least 1"));
        }
        if eigenvalues.iter().chain(&input).chain(&output).any(|z| !z.is_finite()) {
            return Err(Error::Contract("system has non-finite entries".into()));
        }
        let mode_coeffs = output.iter().zip(&input).map(|(c, b)| c * b).collect();
        Ok(Self {
            eigenvalues,
            input,
            output,
            mode_coeffs,
            window,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn input(&self) -> &[C64] {
        &self.input
    }

    pub fn output(&self) -> &[C64] {
        &self.output
    }

    pub fn mode_coeffs(&self) -> &[C64] {
        &self.mode_coeffs
    }

    /// Markov parameters `g_i = sum_j c_j z_j^i`, `i = 0..W-1`, so that
    /// `y_{t+1} = g^T U_t`.
    pub fn impulse_response(&self) -> Vec<C64> {
        let mut g = vec![C64::new(0.0, 0.0); self.window];
        for (&z, &c) in self.eigenvalues.iter().zip(&self.mode_coeffs) {
            let mut term = c;
            for gi in g.iter_mut() {
                *gi += term;
                term *= z;
            }
        }
        g
    }

    /// Observations for a control sequence. Controls before `t = 1` are zero,
    /// so `y_1 = 0`.
    pub fn respond(&self, controls: &[C64]) -> Vec<C64> {
        convolve_causal(&self.impulse_response(), controls)
    }
}

/// `y_t = sum_{tau=1}^{min(W, t-1)} g_{tau-1} u_{t-tau}` (1-based `t`).
fn convolve_causal(kernel: &[C64], controls: &[C64]) -> Vec<C64> {
    (0..controls.len())
        .map(|t| {
            kernel
                .iter()
                .take(t)
                .enumerate()
                .map(|(lag, g)| g * controls[t - 1 - lag])
                .sum()
        })
        .collect()
}

/// Parameters of the random annulus-sector ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdsEnsemble {
    pub d: usize,
    pub beta: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub window: usize,
}

impl LdsEnsemble {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.window < 1 {
            return Err(param_err("d and W must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta <= std::f64::consts::PI) {
            return Err(param_err(format!("beta must lie in (0, pi], got {}", self.beta)));
        }
        if !(0.0 <= self.r_min && self.r_min <= self.r_max && self.r_max <= 1.0) {
            return Err(param_err(format!(
                "radii must satisfy 0 <= r_min <= r_max <= 1, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }
}

/// Draws eigenvalues uniformly by area from
/// `{r_min <= |z| <= r_max, |arg z| <= beta}` and i.i.d. complex Gaussian
/// input/output weights, rescaled so that `sum_j |c_j| = 1`.
pub fn random_sector_lds(ensemble: &LdsEnsemble, stream: SeedStream) -> Result<SectorLds> {
    ensemble.validate()?;
    let LdsEnsemble { d, beta, r_min, r_max, window } = *ensemble;
    let mut rng = stream.rng();
    let (lo2, hi2) = (r_min * r_min, r_max * r_max);
    let eigenvalues: Vec<C64> = (0..d)
        .map(|_| {
            let u: f64 = rng.random();
            let r = (lo2 + u * (hi2 - lo2)).sqrt().clamp(r_min, r_max);
            let theta = rng.random_range(-beta..=beta);
            C64::from_polar(r, theta)
        })
        .collect();
    let mut input: Vec<C64> = complex_gaussian(d, &mut rng).iter().copied().collect();
    let mut output: Vec<C64> = complex_gaussian(d, &mut rng).iter().copied().collect();
    let l1: f64 = input.iter().zip(&output).map(|(b, c)| (b * c).norm()).sum();
    if l1 > 0.0 {
        let s = l1.sqrt().recip();
        input.iter_mut().for_each(|b| *b *= s);
        output.iter_mut().for_each(|c| *c *= s);
    }
    SectorLds::from_parts(eigenvalues, input, output, window)
}

/// Paired controls and observations, `controls[0] = u_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub controls: Vec<C64>,
    pub observations: Vec<C64>,
    pub seed: u64,
    pub t_train: Option<usize>,
}

/// Generation parameters written next to a trajectory CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub d: usize,
    #[serde(rename = "W")]
    pub window: usize,
    pub beta: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub seed: u64,
    #[serde(rename = "T")]
    pub len: usize,
    #[serde(rename = "T_train")]
    pub t_train: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// CSV with header `t,u_re,u_im,y_re,y_im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["t", "u_re", "u_im", "y_re", "y_im"])?;
        for (i, (u, y)) in self.controls.iter().zip(&self.observations).enumerate() {
            writer.write_record([
                (i + 1).to_string(),
                format!("{:.16e}", u.re),
                format!("{:.16e}", u.im),
                format!("{:.16e}", y.re),
                format!("{:.16e}", y.im),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write_sidecar<W: Write>(&self, ensemble: &LdsEnsemble, out: W) -> Result<()> {
        let meta = TrajectoryMeta {
            d: ensemble.d,
            window: ensemble.window,
            beta: ensemble.beta,
            r_min: ensemble.r_min,
            r_max: ensemble.r_max,
            seed: self.seed,
            len: self.len(),
            t_train: self.t_train,
        };
        serde_json::to_writer_pretty(out, &meta)?;
        Ok(())
    }
}

/// Drives the system with `T` standard complex Gaussian controls.
pub fn generate_trajectory(sys: &SectorLds, len: usize, stream: SeedStream) -> Result<Trajectory> {
    if len < 1 {
        return Err(param_err("trajectory length must be at least 1"));
    }
    let controls: Vec<C64> = complex_gaussian(len, &mut stream.rng()).iter().copied().collect();
    let observations = sys.respond(&controls);
    Ok(Trajectory {
        controls,
        observations,
        seed: stream.id(),
        t_train: None,
    })
}

/// Observations of a dense LTI triple, `y_t = sum_{tau=1}^{min(W, t-1)} C A^{tau-1} B u_{t-tau}`.
/// `window = None` keeps the full history.
pub fn lti_response(a: &CMatrix, b: &CVector, c_row: &CVector, controls: &[C64], window: Option<usize>) -> Result<Vec<C64>> {
    let n = a.nrows();
    if !a.is_square() || b.len() != n || c_row.len() != n {
        return Err(dim_err("LTI triple dimensions disagree"));
    }
    let horizon = window.unwrap_or(controls.len()).min(controls.len());
    let mut kernel = Vec::with_capacity(horizon);
    let mut state = b.clone();
    for _ in 0..horizon {
        kernel.push(c_row.dot(&state));
        state = a * state;
    }
    Ok(convolve_causal(&kernel, controls))
}

/// Driven closed quantum system `H(u) = H0 + u Hc` observed through `Tr(O rho)`.
#[derive(Clone, Debug)]
pub struct QuantumSystem {
    h0: CMatrix,
    hc: CMatrix,
    observable: CMatrix,
    rho_ss: CMatrix,
    dt: f64,
}

impl QuantumSystem {
    pub fn new(h0: CMatrix, hc: CMatrix, observable: CMatrix, rho_ss: CMatrix, dt: f64) -> Result<Self> {
        let n = h0.nrows();
        for (name, m) in [("H0", &h0), ("Hc", &hc), ("O", &observable), ("rho_ss", &rho_ss)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(dim_err(format!("{name} must be {n}x{n}")));
            }
            if !is_hermitian(m, 1e-12) {
                return Err(Error::Contract(format!("{name} is not Hermitian")));
            }
        }
        if (rho_ss.trace() - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Contract("rho_ss must have unit trace".into()));
        }
        let min_eig = nalgebra::SymmetricEigen::new(rho_ss.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(Error::Contract(format!("rho_ss is not PSD (eigenvalue {min_eig:e})")));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(param_err("dt must be positive"));
        }
        Ok(Self { h0, hc, observable, rho_ss, dt })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn hc(&self) -> &CMatrix {
        &self.hc
    }

    pub fn observable(&self) -> &CMatrix {
        &self.observable
    }

    pub fn rho_ss(&self) -> &CMatrix {
        &self.rho_ss
    }

    /// `-i dt [Hc, rho_ss]`: first-order (small `dt`) response of the state to
    /// the control.
    pub fn control_direction(&self) -> CMatrix {
        let comm = &self.hc * &self.rho_ss - &self.rho_ss * &self.hc;
        comm * C64::new(0.0, -self.dt)
    }
}

/// Column-stacking vectorization: entry `i + n j` holds `m[(i, j)]`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// LTI triple in Liouville space.
#[derive(Clone, Debug)]
pub struct LiouvilleTriple {
    /// `exp(i H0^T dt) (x) exp(-i H0 dt)`.
    pub a: CMatrix,
    /// `vec(-i dt [Hc, rho_ss])`; the commutator form is the small-`dt` limit.
    pub b: CVector,
    /// Row functional `vec(O^dagger)^dagger`, stored as the vector `c` with
    /// `y = sum_i c_i x_i = Tr(O X)`.
    pub c: CVector,
}

pub fn liouvillian(sys: &QuantumSystem) -> Result<LiouvilleTriple> {
    // exp(i H0^T dt) is exp(-i (-H0^T) dt).
    let left = hermitian_exp(&(-sys.h0.transpose()), sys.dt)?;
    let right = hermitian_exp(&sys.h0, sys.dt)?;
    let a = left.kronecker(&right);
    let b = vectorize(&sys.control_direction());
    let c = vectorize(&sys.observable.adjoint()).conjugate();
    Ok(LiouvilleTriple { a, b, c })
}

/// `(max E - min E) dt`: the narrowest admissible sector half-angle.
pub fn bohr_beta(sys: &QuantumSystem) -> f64 {
    let e = nalgebra::SymmetricEigen::new(sys.h0.clone()).eigenvalues;
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) * sys.dt
}

/// Linearized density-matrix evolution around `rho_ss`, simulated directly
/// on matrices: `d_{t+1} = U d_t U^dagger + u_t D`, `y_t = Tr(O d_t)` with
/// `U = exp(-i H0 dt)`, `D = -i dt [Hc, rho_ss]`, `d_1 = 0`.
pub fn linear_response_trajectory(sys: &QuantumSystem, controls: &[C64]) -> Result<Vec<C64>> {
    let u = hermitian_exp(&sys.h0, sys.dt)?;
    let u_dag = u.adjoint();
    let drive = sys.control_direction();
    let n = sys.dim();
    let mut dev = CMatrix::zeros(n, n);
    let mut out = Vec::with_capacity(controls.len());
    for &ut in controls {
        out.push((&sys.observable * &dev).trace());
        dev = &u * dev * &u_dag + &drive * ut;
    }
    Ok(out)
}

/// Autonomous shift register on `{-1, +1}^d`: observation `t` (from 0) is
/// `h0[t mod d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftRegister {
    h0: Vec<f64>,
}

impl ShiftRegister {
    pub fn new(h0: Vec<f64>) -> Result<Self> {
        if h0.is_empty() {
            return Err(param_err("shift register needs d >= 1"));
        }
        if h0.iter().any(|&x| x != 1.0 && x != -1.0) {
            return Err(Error::Contract("initial state entries must be +-1".into()));
        }
        Ok(Self { h0 })
    }

    /// Initial state with independent fair signs.
    pub fn random(d: usize, stream: SeedStream) -> Result<Self> {
        let mut rng = stream.rng();
        Self::new((0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
    }

    pub fn dim(&self) -> usize {
        self.h0.len()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.h0
    }

    pub fn stream(&self, len: usize) -> Vec<f64> {
        (0..len).map(|t| self.h0[t % self.h0.len()]).collect()
    }
}

pub fn shift_register_stream(d: usize, len: usize, stream: SeedStream) -> Result<Vec<f64>> {
    Ok(ShiftRegister::random(d, stream)?.stream(len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ensemble(d: usize, beta: f64) -> LdsEnsemble {
        LdsEnsemble { d, beta, r_min: 0.85, r_max: 0.95, window: 100 }
    }

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|&x| c(x))))
    }

    #[test]
    fn degenerate_sector_gives_fixed_eigenvalue() {
        let e = LdsEnsemble { d: 1, beta: 1e-12, r_min: 0.9, r_max: 0.9, window: 4 };
        let sys = random_sector_lds(&e, SeedStream::new(1)).unwrap();
        assert!((sys.eigenvalues()[0] - c(0.9)).norm() < 1e-11);
        let l1: f64 = sys.mode_coeffs().iter().map(|x| x.norm()).sum();
        assert!((l1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_ensembles() {
        for e in [
            LdsEnsemble { r_min: 0.9, r_max: 0.8, ..ensemble(3, 1.0) },
            LdsEnsemble { r_max: 1.2, ..ensemble(3, 1.0) },
            LdsEnsemble { r_min: -0.1, ..ensemble(3, 1.0) },
            ensemble(3, 0.0),
            ensemble(0, 1.0),
        ] {
            assert!(random_sector_lds(&e, SeedStream::new(0)).is_err());
        }
    }

    #[test]
    fn sector_membership_and_area_uniformity() {
        let beta = 0.5 * PI;
        let sys = random_sector_lds(&ensemble(10_000, beta), SeedStream::new(9)).unwrap();
        let mid = (0.85f64.powi(2) + 0.95f64.powi(2)) / 2.0;
        let mut inner = 0usize;
        for z in sys.eigenvalues() {
            assert!(z.arg().abs() <= beta);
            assert!(z.norm() >= 0.85 - 1e-15 && z.norm() <= 0.95 + 1e-15);
            if z.norm_sqr() <= mid {
                inner += 1;
            }
        }
        let frac = inner as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.02, "fraction {frac}");
        let l1: f64 = sys.mode_coeffs().iter().map(|x| x.norm()).sum();
        assert!((l1 - 1.0).abs() < 1e-12);
        for ((cj, bj), cc) in sys.output().iter().zip(sys.input()).zip(sys.mode_coeffs()) {
            assert!((cj * bj - cc).norm() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_system() {
        let a = random_sector_lds(&ensemble(20, 1.0), SeedStream::new(4)).unwrap();
        let b = random_sector_lds(&ensemble(20, 1.0), SeedStream::new(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn impulse_response_of_single_mode() {
        let z = C64::from_polar(0.9, 0.4);
        let w = 5;
        let sys = SectorLds::from_parts(vec![z], vec![c(1.0)], vec![c(1.0)], w).unwrap();
        let mut u = vec![c(0.0); 12];
        u[0] = c(1.0);
        let y = sys.respond(&u);
        assert_eq!(y[0], c(0.0));
        for (tau, yt) in y.iter().enumerate().take(w + 1).skip(1) {
            assert!((yt - z.powu(tau as u32 - 1)).norm() < 1e-14);
        }
        for yt in &y[w + 1..] {
            assert_eq!(*yt, c(0.0));
        }
    }

    #[test]
    fn finite_memory_probe() {
        for seed in 0..10 {
            let sys = random_sector_lds(&LdsEnsemble { window: 20, ..ensemble(6, 1.3) }, SeedStream::new(seed)).unwrap();
            let traj = generate_trajectory(&sys, 60, SeedStream::new(100 + seed)).unwrap();
            assert_eq!(traj.observations[0], c(0.0));
            let t = 50; // 1-based observation index
            let mut far = traj.controls.clone();
            far[t - 20 - 2] += c(1.0); // u_{t-W-1}
            assert_eq!(sys.respond(&far)[t - 1], traj.observations[t - 1]);
            let mut near = traj.controls.clone();
            near[t - 20 - 1] += c(1.0); // u_{t-W}
            assert!((sys.respond(&near)[t - 1] - traj.observations[t - 1]).norm() > 1e-12);
        }
    }

    #[test]
    fn convolution_matches_mode_sum() {
        let sys = random_sector_lds(&LdsEnsemble { window: 7, ..ensemble(4, 2.0) }, SeedStream::new(3)).unwrap();
        let traj = generate_trajectory(&sys, 25, SeedStream::new(8)).unwrap();
        for t in 1..=25usize {
            let mut expect = c(0.0);
            for tau in 1..=7.min(t - 1) {
                for (z, cj) in sys.eigenvalues().iter().zip(sys.mode_coeffs()) {
                    expect += cj * z.powu(tau as u32 - 1) * traj.controls[t - tau - 1];
                }
            }
            assert!((traj.observations[t - 1] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn trajectory_csv_and_sidecar() {
        let e = LdsEnsemble { window: 3, ..ensemble(2, 1.0) };
        let sys = random_sector_lds(&e, SeedStream::new(1)).unwrap();
        let traj = generate_trajectory(&sys, 4, SeedStream::new(2)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("t,u_re,u_im,y_re,y_im\n1,"));
        let mut js = Vec::new();
        traj.write_sidecar(&e, &mut js).unwrap();
        let meta: TrajectoryMeta = serde_json::from_slice(&js).unwrap();
        assert_eq!(meta.window, 3);
        assert_eq!(meta.seed, traj.seed);
    }

    fn qubit(dt: f64, h0: CMatrix) -> QuantumSystem {
        let hc = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let obs = CMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)]);
        QuantumSystem::new(h0, hc, obs, diag(&[0.7, 0.3]), dt).unwrap()
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let sys = qubit(0.5, CMatrix::zeros(2, 2));
        let t = liouvillian(&sys).unwrap();
        assert!(crate::numerics::max_abs(&(t.a - CMatrix::identity(4, 4))) < 1e-15);
        assert_eq!(bohr_beta(&sys), 0.0);
    }

    #[test]
    fn diagonal_hamiltonian_spectrum() {
        let sys = qubit(1.0, diag(&[0.5, -0.5]));
        let t = liouvillian(&sys).unwrap();
        // A is diagonal here; its diagonal is the eigenvalue multiset.
        let mut phases: Vec<f64> = (0..4).map(|i| t.a[(i, i)].arg()).collect();
        phases.sort_by(f64::total_cmp);
        let expect = [-1.0, 0.0, 0.0, 1.0];
        for (p, e) in phases.iter().zip(expect) {
            assert!((p - e).abs() < 1e-14);
        }
        for i in 0..4 {
            assert!((t.a[(i, i)].norm() - 1.0).abs() < 1e-14);
        }
        let unitary = t.a.adjoint() * &t.a;
        assert!(crate::numerics::max_abs(&(unitary - CMatrix::identity(4, 4))) < 1e-10);
    }

    #[test]
    fn bohr_beta_values() {
        let sys = qubit(0.3, diag(&[0.5, -0.5]));
        assert!((bohr_beta(&sys) - 0.3).abs() < 1e-15);
        let sys2 = qubit(0.6, diag(&[0.5, -0.5]));
        assert!((bohr_beta(&sys2) - 2.0 * bohr_beta(&sys)).abs() < 1e-15);
    }

    #[test]
    fn observation_functional_is_trace() {
        let sys = qubit(0.1, diag(&[0.2, -0.4]));
        let t = liouvillian(&sys).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[c(1.0), C64::new(0.5, 2.0), C64::new(-1.0, 0.3), c(4.0)]);
        let lhs = t.c.dot(&vectorize(&x));
        let rhs = (sys.observable() * &x).trace();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_inputs() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let id = CMatrix::identity(2, 2);
        assert!(QuantumSystem::new(bad, id.clone(), id.clone(), diag(&[1.0, 0.0]), 1.0).is_err());
        assert!(QuantumSystem::new(id.clone(), id.clone(), id.clone(), diag(&[0.6, 0.6]), 1.0).is_err());
        assert!(QuantumSystem::new(id.clone(), id.clone(), id, diag(&[1.2, -0.2]), 1.0).is_err());
    }

    #[test]
    fn linearized_update_tracks_exact_evolution_for_small_controls() {
        let dt = 0.01;
        let sys = qubit(dt, diag(&[0.5, -0.5]));
        let amp = 1e-4;
        let controls: Vec<C64> = (0..50).map(|t| c(amp * ((t as f64) * 0.37).sin())).collect();
        let linear = linear_response_trajectory(&sys, &controls).unwrap();
        let mut rho = sys.rho_ss().clone();
        let mut max_gap = 0.0f64;
        let mut max_signal = 0.0f64;
        for (t, &u) in controls.iter().enumerate() {
            let exact = (sys.observable() * (&rho - sys.rho_ss())).trace();
            max_gap = max_gap.max((exact - linear[t]).norm());
            max_signal = max_signal.max(exact.norm());
            let h = sys.h0() + sys.hc() * u;
            let step = hermitian_exp(&h, dt).unwrap();
            rho = &step * rho * step.adjoint();
        }
        assert!(max_signal > 0.0);
        assert!(max_gap <= 0.05 * max_signal, "gap {max_gap:e} vs signal {max_signal:e}");
    }

    #[test]
    fn shift_register_examples() {
        let reg = ShiftRegister::new(vec![1.0, -1.0, 1.0]).unwrap();
        assert_eq!(reg.stream(7), vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0]);
        assert!(ShiftRegister::new(vec![0.5]).is_err());
        let y = shift_register_stream(16, 64, SeedStream::new(3)).unwrap();
        assert!(y.iter().all(|&v| v == 1.0 || v == -1.0));
        for t in 0..48 {
            assert_eq!(y[t + 16], y[t]);
        }
    }
}
