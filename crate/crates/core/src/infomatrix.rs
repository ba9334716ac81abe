//! The information matrix `Z_W(beta)`: the Gram matrix of monomial
//! trajectories `mu_W(z) = [1, z, ..., z^{W-1}]` integrated over the sector
//! under area measure.
//!
//! Indices are zero-based throughout, so entry `(j, k)` is
//! `2 beta sinc((j - k) beta) / (j + k + 2)`. The matrix splits entrywise into
//! a Hankel factor `1 / (j + k + 2)` (radial integral) and a Toeplitz factor
//! `2 sin((j - k) beta) / (j - k)` (angular integral).

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::numerics::{max_abs, sym_eig, EigenDecomposition, RMatrix, C64};

/// Window length and spectral half-angle (radians) of the sector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorParams {
    window: usize,
    beta: f64,
}

impl SectorParams {
    pub fn new(window: usize, beta: f64) -> Result<Self> {
        if window < 1 {
            return Err(param_err("window must be at least 1"));
        }
        if !(beta > 0.0 && beta <= PI) {
            return Err(param_err(format!("beta must lie in (0, pi], got {beta}")));
        }
        Ok(Self { window, beta })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

pub fn hankel_factor(window: usize) -> Result<RMatrix> {
    if window < 1 {
        return Err(param_err("window must be at least 1"));
    }
    Ok(RMatrix::from_fn(window, window, |j, k| {
        1.0 / (j + k + 2) as f64
    }))
}

pub fn slepian_toeplitz_factor(window: usize, beta: f64) -> Result<RMatrix> {
    let params = SectorParams::new(window, beta)?;
    Ok(toeplitz_from(&params))
}

fn toeplitz_from(params: &SectorParams) -> RMatrix {
    let beta = params.beta;
    // Fill one lag table so (j, k) and (k, j) read the same value.
    let lags: Vec<f64> = (0..params.window)
        .map(|n| {
            if n == 0 {
                2.0 * beta
            } else {
                2.0 * (n as f64 * beta).sin() / n as f64
            }
        })
        .collect();
    RMatrix::from_fn(params.window, params.window, |j, k| lags[j.abs_diff(k)])
}

/// Effective dimension `k* = ceil(beta W / pi)`.
///
/// A relative slack of `1e-12` absorbs the rounding in `beta = f * pi`, so
/// `beta = 0.2 pi, W = 100` yields 20 rather than 21.
pub fn effective_dimension(params: &SectorParams) -> usize {
    let x = params.beta / PI * params.window as f64;
    let k = (x * (1.0 - 1e-12)).ceil() as usize;
    k.clamp(1, params.window)
}

#[derive(Debug)]
pub struct InfoMatrix {
    params: SectorParams,
    z: RMatrix,
    hankel: RMatrix,
    toeplitz: RMatrix,
    eig: OnceLock<EigenDecomposition>,
}

impl InfoMatrix {
    pub fn new(params: SectorParams) -> Self {
        let hankel = RMatrix::from_fn(params.window, params.window, |j, k| {
            1.0 / (j + k + 2) as f64
        });
        let toeplitz = toeplitz_from(&params);
        let beta = params.beta;
        // Closed form evaluated directly rather than as the product of the factors.
        let z = RMatrix::from_fn(params.window, params.window, |j, k| {
            let lag = j as f64 - k as f64;
            2.0 * beta / (j + k + 2) as f64 * sinc(lag * beta)
        });
        let z = (&z + z.transpose()).scale(0.5);
        Self {
            params,
            z,
            hankel,
            toeplitz,
            eig: OnceLock::new(),
        }
    }

    pub fn params(&self) -> &SectorParams {
        &self.params
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.z
    }

    pub fn hankel(&self) -> &RMatrix {
        &self.hankel
    }

    pub fn toeplitz(&self) -> &RMatrix {
        &self.toeplitz
    }

    pub fn k_star(&self) -> usize {
        effective_dimension(&self.params)
    }

    /// `max |Z - hankel o toeplitz|`.
    pub fn hadamard_residual(&self) -> f64 {
        max_abs(&(&self.z - self.hankel.component_mul(&self.toeplitz)))
    }

    /// Eigendecomposition, computed on first use.
    pub fn eig(&self) -> &EigenDecomposition {
        self.eig.get_or_init(|| {
            sym_eig(&self.z).expect("information matrix is symmetric by construction")
        })
    }
}

pub fn info_matrix(params: SectorParams) -> InfoMatrix {
    InfoMatrix::new(params)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=n {
                let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Result of the two-dimensional quadrature of the defining integral.
#[derive(Clone, Debug)]
pub struct QuadratureResult {
    /// Real part of the integrated Gram matrix.
    pub matrix: RMatrix,
    /// Set when `n_theta < 8 W`: the angular grid may under-resolve the
    /// highest lag.
    pub coarse_grid: bool,
}

/// Numerically integrates `int_C mu_W(z) mu_W(z)^dagger dA(z)` on a tensor
/// grid: Gauss-Legendre with `n_r` nodes in the radius and composite Simpson
/// with `n_theta` intervals (rounded up to even) in the angle. The integrand
/// is formed from complex powers `z^j`, never from the separated factors.
pub fn info_matrix_quadrature(
    params: SectorParams,
    n_r: usize,
    n_theta: usize,
) -> Result<QuadratureResult> {
    if n_r < 16 || n_theta < 16 {
        return Err(param_err("quadrature grids need at least 16 points per axis"));
    }
    let w = params.window;
    let beta = params.beta;
    let (r_nodes, r_weights) = gauss_legendre_unit(n_r);
    let intervals = n_theta + n_theta % 2;
    let h = 2.0 * beta / intervals as f64;

    let mut acc = vec![C64::new(0.0, 0.0); w * w];
    let mut mu = vec![C64::new(0.0, 0.0); w];
    for (&r, &wr) in r_nodes.iter().zip(&r_weights) {
        for m in 0..=intervals {
            let simpson = if m == 0 || m == intervals {
                1.0
            } else if m % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let theta = -beta + m as f64 * h;
            let z = C64::from_polar(r, theta);
            let weight = wr * simpson * h / 3.0 * r;
            let mut p = C64::new(1.0, 0.0);
            for slot in mu.iter_mut() {
                *slot = p;
                p *= z;
            }
            for j in 0..w {
                let a = mu[j] * weight;
                for k in 0..w {
                    acc[j * w + k] += a * mu[k].conj();
                }
            }
        }
    }

    let max_imag = acc.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if max_imag > 1e-10 {
        return Err(Error::Numerical(format!(
            "quadrature imaginary residual {max_imag:e} exceeds 1e-10"
        )));
    }
    let matrix = RMatrix::from_fn(w, w, |j, k| acc[j * w + k].re);
    Ok(QuadratureResult {
        matrix,
        coarse_grid: n_theta < 8 * w,
    })
}

/// Clamped spectrum of `Z_W(beta)` in descending order, annotated with `k*`.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub params: SectorParams,
    pub k_star: usize,
    /// `(1-based index, clamped eigenvalue)`.
    pub rows: Vec<(usize, f64)>,
}

impl SpectrumReport {
    pub const HEADER: [&'static str; 5] = ["index", "eigenvalue", "k_star", "W", "beta"];

    pub fn value(&self, index: usize) -> f64 {
        self.rows[index - 1].1
    }

    /// Appends the report's rows (no header) to a CSV writer.
    pub fn write_rows<W: Write>(&self, out: &mut csv::Writer<W>) -> Result<()> {
        for &(index, value) in &self.rows {
            out.write_record([
                index.to_string(),
                format!("{value:.16e}"),
                self.k_star.to_string(),
                self.params.window.to_string(),
                format!("{:.16e}", self.params.beta),
            ])?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(Self::HEADER)?;
        self.write_rows(&mut writer)?;
        writer.flush()?;
        Ok(())
    }
}

pub fn spectrum_report(params: SectorParams) -> SpectrumReport {
    let info = InfoMatrix::new(params);
    let rows = info
        .eig()
        .clamped()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i + 1, v))
        .collect();
    SpectrumReport {
        params,
        k_star: info.k_star(),
        rows,
    }
}

/// Least-squares slope of `log sigma_k` against `k / k*` over the inclusive
/// 1-based index range. Eigenvalues are floored at `1e-16 sigma_1`, below
/// which double precision carries no information.
pub fn log_decay_slope(spectrum: &[f64], k_star: usize, lo: usize, hi: usize) -> f64 {
    let floor = spectrum[0] * 1e-16;
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|k| (k as f64 / k_star as f64, spectrum[k - 1].max(floor).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
