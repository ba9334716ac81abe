//! Filter banks and the projection of control histories onto them.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::infomatrix::{InfoMatrix, SectorParams};
use crate::numerics::{max_abs, CMatrix, CVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BankKind {
    Slepian { beta: f64 },
    Fourier,
    /// Standard basis `e_1..e_k`; used for the raw-window baseline.
    Identity,
}

impl BankKind {
    pub fn name(&self) -> &'static str {
        match self {
            BankKind::Slepian { .. } => "slepian",
            BankKind::Fourier => "fourier",
            BankKind::Identity => "identity",
        }
    }
}

/// `W x k` set of orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank {
    vectors: CMatrix,
    kind: BankKind,
}

impl FilterBank {
    pub fn window(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn k(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// First `k` columns of this bank.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        check_k(self.window(), k)?;
        Ok(Self {
            vectors: self.vectors.columns(0, k).into_owned(),
            kind: self.kind,
        })
    }

    /// `max |Phi^dagger Phi - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let gram = self.vectors.adjoint() * &self.vectors;
        max_abs(&(gram - CMatrix::identity(self.k(), self.k())))
    }

    /// Squared norm of the component of `v` outside the span of the bank.
    pub fn residual_sqr(&self, v: &CVector) -> f64 {
        let c = self.vectors.adjoint() * v;
        (v - &self.vectors * c).norm_squared()
    }

    pub fn identity(window: usize, k: usize) -> Result<Self> {
        check_k(window, k)?;
        Ok(Self {
            vectors: CMatrix::identity(window, k),
            kind: BankKind::Identity,
        })
    }
}

fn check_k(window: usize, k: usize) -> Result<()> {
    if k < 1 || k > window {
        return Err(param_err(format!("bank size must satisfy 1 <= k <= W, got k={k}, W={window}")));
    }
    Ok(())
}

/// Top-`k` eigenvectors of `Z_W(beta)`, in descending eigenvalue order.
///
/// Each column's first entry with modulus above `1e-12` is made positive.
pub fn slepian_bank(params: SectorParams, k: usize) -> Result<FilterBank> {
    check_k(params.window(), k)?;
    let info = InfoMatrix::new(params);
    Ok(slepian_bank_from(&info, k))
}

pub fn slepian_bank_from(info: &InfoMatrix, k: usize) -> FilterBank {
    let eig = info.eig();
    let w = info.params().window();
    let mut vectors = CMatrix::zeros(w, k);
    for j in 0..k {
        let col = eig.vectors.column(j);
        let sign = col
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for i in 0..w {
            vectors[(i, j)] = C64::new(sign * col[i], 0.0);
        }
    }
    FilterBank {
        vectors,
        kind: BankKind::Slepian {
            beta: info.params().beta(),
        },
    }
}

/// Frequency of the `m`-th lowest DFT mode: `0, 1, -1, 2, -2, ...`.
pub fn fourier_frequency(m: usize) -> i64 {
    if m == 0 {
        0
    } else if m % 2 == 1 {
        m.div_ceil(2) as i64
    } else {
        -((m / 2) as i64)
    }
}

/// Lowest-`k` DFT modes `exp(2 pi i f n / W) / sqrt(W)`.
pub fn fourier_bank(window: usize, k: usize) -> Result<FilterBank> {
    check_k(window, k)?;
    let norm = 1.0 / (window as f64).sqrt();
    let vectors = CMatrix::from_fn(window, k, |n, m| {
        let f = fourier_frequency(m) as f64;
        // Reduce the phase index modulo W before scaling to keep it exact.
        let idx = ((f as i64 * n as i64).rem_euclid(window as i64)) as f64;
        C64::from_polar(norm, 2.0 * PI * idx / window as f64)
    });
    Ok(FilterBank {
        vectors,
        kind: BankKind::Fourier,
    })
}

/// Window of the last `W` controls, most recent first, zero-padded.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryWindow(CVector);

impl HistoryWindow {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &CVector {
        &self.0
    }

    pub fn from_values(values: CVector) -> Self {
        Self(values)
    }
}

/// `U_t = [u_t, u_{t-1}, ..., u_{t-W+1}]` with `history[0] = u_1`.
pub fn make_window(history: &[C64], t: usize, window: usize) -> Result<HistoryWindow> {
    if t < 1 {
        return Err(param_err("time index starts at 1"));
    }
    if t > history.len() {
        return Err(dim_err(format!(
            "window at t={t} needs {t} controls, history has {}",
            history.len()
        )));
    }
    Ok(HistoryWindow(CVector::from_fn(window, |i, _| {
        if i < t {
            history[t - 1 - i]
        } else {
            C64::new(0.0, 0.0)
        }
    })))
}

/// `h = Phi^dagger U`.
pub fn project(bank: &FilterBank, window: &HistoryWindow) -> Result<CVector> {
    if bank.window() != window.len() {
        return Err(dim_err(format!(
            "bank expects windows of length {}, got {}",
            bank.window(),
            window.len()
        )));
    }
    Ok(bank.vectors.ad_mul(&window.0))
}

/// Features `h_t = Phi^dagger U_t` for `t = 1..=T`, as the columns of a
/// `k x T` matrix.
pub fn project_history(bank: &FilterBank, controls: &[C64]) -> CMatrix {
    let w = bank.window();
    let t_len = controls.len();
    let mut windows = CMatrix::zeros(w, t_len);
    for t in 0..t_len {
        for i in 0..w.min(t + 1) {
            windows[(i, t)] = controls[t - i];
        }
    }
    bank.vectors.ad_mul(&windows)
}

/// Writes a bank as CSV: a `W,k,kind,beta` header line, its value line, then
/// `re,im` rows in column-major order.
pub fn write_bank_csv<W: Write>(bank: &FilterBank, out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(out);
    writer.write_record(["W", "k", "kind", "beta"])?;
    let beta = match bank.kind {
        BankKind::Slepian { beta } => format!("{beta:.16e}"),
        _ => String::new(),
    };
    writer.write_record([
        bank.window().to_string(),
        bank.k().to_string(),
        bank.kind.name().to_string(),
        beta,
    ])?;
    writer.write_record(["re", "im"])?;
    for z in bank.vectors.iter() {
        writer.write_record([format!("{:.16e}", z.re), format!("{:.16e}", z.im)])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_bank_csv<R: BufRead>(input: R) -> Result<FilterBank> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let mut next = |what: &str| -> Result<csv::StringRecord> {
        records
            .next()
            .ok_or_else(|| Error::Format(format!("bank file ends before {what}")))?
            .map_err(Error::from)
    };
    let header = next("header")?;
    if header.iter().collect::<Vec<_>>() != ["W", "k", "kind", "beta"] {
        return Err(Error::Format("bank header must be W,k,kind,beta".into()));
    }
    let meta = next("metadata")?;
    let field = |i: usize| meta.get(i).unwrap_or("");
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad integer {s:?}")))
    };
    let w = parse_usize(field(0))?;
    let k = parse_usize(field(1))?;
    let kind = match field(2) {
        "slepian" => BankKind::Slepian {
            beta: field(3)
                .parse()
                .map_err(|_| Error::Format("bad beta".into()))?,
        },
        "fourier" => BankKind::Fourier,
        "identity" => BankKind::Identity,
        other => return Err(Error::Format(format!("unknown bank kind {other:?}"))),
    };
    check_k(w, k)?;
    next("value header")?;
    let mut values = Vec::with_capacity(w * k);
    for _ in 0..w * k {
        let rec = next("values")?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format("bad value row".into()))
        };
        values.push(C64::new(num(0)?, num(1)?));
    }
    Ok(FilterBank {
        vectors: CMatrix::from_vec(w, k, values),
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_gaussian, SeedStream};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn slepian_full_circle_is_standard_basis() {
        let bank = slepian_bank(SectorParams::new(4, PI).unwrap(), 2).unwrap();
        for j in 0..2 {
            for i in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((bank.vectors[(i, j)] - c(expect)).norm() < 1e-12);
            }
        }
        let bank = slepian_bank(SectorParams::new(1, 0.3).unwrap(), 1).unwrap();
        assert_eq!(bank.vectors[(0, 0)], c(1.0));
    }

    #[test]
    fn slepian_bank_orthonormal_and_reproducible() {
        let p = SectorParams::new(100, 0.5 * PI).unwrap();
        let a = slepian_bank(p, 50).unwrap();
        assert!(a.orthonormality_residual() <= 1e-10);
        let b = slepian_bank(p, 50).unwrap();
        assert_eq!(a, b);
        for col in a.vectors.column_iter() {
            let first = col.iter().find(|x| x.norm() > 1e-12).unwrap();
            assert!(first.re > 0.0);
        }
    }

    #[test]
    fn bank_size_errors() {
        let p = SectorParams::new(5, 1.0).unwrap();
        assert!(slepian_bank(p, 6).is_err());
        assert!(slepian_bank(p, 0).is_err());
        assert!(fourier_bank(5, 6).is_err());
    }

    #[test]
    fn fourier_ordering_and_dc() {
        let freqs: Vec<i64> = (0..5).map(fourier_frequency).collect();
        assert_eq!(freqs, vec![0, 1, -1, 2, -2]);
        let b = fourier_bank(8, 1).unwrap();
        for i in 0..8 {
            assert!((b.vectors[(i, 0)] - c(1.0 / 8f64.sqrt())).norm() < 1e-15);
        }
        let b = fourier_bank(4, 3).unwrap();
        // Column 2 is frequency -1: exp(-2 pi i n / 4) = (-i)^n.
        assert!((b.vectors[(1, 2)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((b.vectors[(1, 1)] - C64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn full_fourier_is_unitary() {
        for w in [1, 2, 7, 16, 100] {
            let b = fourier_bank(w, w).unwrap();
            assert!(b.orthonormality_residual() <= 1e-12, "W={w}");
        }
    }

    #[test]
    fn window_padding_and_order() {
        let w = make_window(&[c(7.0)], 1, 3).unwrap();
        assert_eq!(w.values().as_slice(), &[c(7.0), c(0.0), c(0.0)]);
        let u: Vec<C64> = (1..=5).map(|x| c(x as f64)).collect();
        let w = make_window(&u, 5, 3).unwrap();
        assert_eq!(w.values().as_slice(), &[c(5.0), c(4.0), c(3.0)]);
        let w = make_window(&u, 3, 3).unwrap();
        assert_eq!(w.values().as_slice(), &[c(3.0), c(2.0), c(1.0)]);
        assert!(make_window(&u, 6, 3).is_err());
        assert!(make_window(&u, 0, 3).is_err());
    }

    #[test]
    fn identity_projection_and_zero_window() {
        let bank = FilterBank::identity(4, 2).unwrap();
        let u: Vec<C64> = (1..=4).map(|x| c(x as f64)).collect();
        let h = project(&bank, &make_window(&u, 4, 4).unwrap()).unwrap();
        assert_eq!(h.as_slice(), &[c(4.0), c(3.0)]);
        let zero = HistoryWindow::from_values(CVector::zeros(4));
        assert_eq!(project(&bank, &zero).unwrap(), CVector::zeros(2));
        assert!(project(&bank, &HistoryWindow::from_values(CVector::zeros(3))).is_err());
    }

    #[test]
    fn projection_is_a_contraction() {
        let bank = fourier_bank(32, 9).unwrap();
        let slep = slepian_bank(SectorParams::new(32, 1.0).unwrap(), 12).unwrap();
        let mut rng = SeedStream::new(3).rng();
        for _ in 0..20 {
            let u = HistoryWindow::from_values(complex_gaussian(32, &mut rng));
            for b in [&bank, &slep] {
                let h = project(b, &u).unwrap();
                assert!(h.norm() <= u.values().norm() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn batch_projection_matches_per_step() {
        let bank = slepian_bank(SectorParams::new(6, 1.2).unwrap(), 3).unwrap();
        let u = complex_gaussian(10, &mut SeedStream::new(8).rng());
        let u: Vec<C64> = u.iter().copied().collect();
        let all = project_history(&bank, &u);
        for t in 1..=10 {
            let h = project(&bank, &make_window(&u, t, 6).unwrap()).unwrap();
            assert!((all.column(t - 1) - h).norm() < 1e-14);
        }
    }

    #[test]
    fn bank_csv_layout() {
        let bank = fourier_bank(2, 1).unwrap();
        let mut buf = Vec::new();
        write_bank_csv(&bank, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("W,k,kind,beta\n2,1,fourier,\nre,im\n"));
        assert!(read_bank_csv(&b"W,k\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn bank_csv_round_trip(w in 1usize..12, frac in 0.05f64..1.0, kfrac in 0.0f64..1.0, slep in any::<bool>()) {
            let k = 1 + ((w - 1) as f64 * kfrac) as usize;
            let bank = if slep {
                slepian_bank(SectorParams::new(w, frac * PI).unwrap(), k).unwrap()
            } else {
                fourier_bank(w, k).unwrap()
            };
            let mut buf = Vec::new();
            write_bank_csv(&bank, &mut buf).unwrap();
            let back = read_bank_csv(&buf[..]).unwrap();
            prop_assert_eq!(back, bank);
        }
    }
}
