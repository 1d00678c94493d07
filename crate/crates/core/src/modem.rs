//! Square QAM with per-axis Gray labels and soft demapping.
//!
//! Points are `sqrt(alpha) (a + j b)` with `a, b` odd integers in
//! `[-(m-1), m-1]`, `m = sqrt(M)`, and `alpha = 3 rho / (2 (M - 1))` so that the
//! mean symbol energy is exactly `rho`. A symbol's label is its I-axis Gray code
//! followed by its Q-axis Gray code; the all-zero label is the `(+, +)` corner.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "64qam")]
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64];

    pub fn points(self) -> usize {
        match self {
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn from_points(m: usize) -> Result<Self> {
        match m {
            4 => Ok(Modulation::Qpsk),
            16 => Ok(Modulation::Qam16),
            64 => Ok(Modulation::Qam64),
            _ => Err(Error::config(format!("{m} is not a supported square QAM size"))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" => Ok(Modulation::Qam16),
            "64qam" => Ok(Modulation::Qam64),
            other => Err(Error::config(format!(
                "unknown constellation '{other}' (expected qpsk, 16qam or 64qam)"
            ))),
        }
    }
}

/// Soft demapping rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DemapMode {
    #[default]
    Exact,
    MaxLog,
}

#[derive(Clone, Debug)]
pub struct Constellation {
    m_points: usize,
    alpha: f64,
    /// Per-axis amplitude levels (in units of `sqrt(alpha)`) indexed by the axis label.
    levels: Vec<f64>,
    points: Vec<Complex64>,
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

impl Constellation {
    pub fn new(m_points: usize, rho: f64) -> Result<Self> {
        Modulation::from_points(m_points)?;
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::config(format!("rho must be > 0, got {rho}")));
        }
        let m = (m_points as f64).sqrt().round() as usize;
        let alpha = 3.0 * rho / (2.0 * (m_points as f64 - 1.0));
        let levels: Vec<f64> = (0..m)
            .map(|g| (m - 1) as f64 - 2.0 * gray_to_binary(g) as f64)
            .collect();
        let s = alpha.sqrt();
        let points = (0..m_points)
            .map(|label| Complex64::new(s * levels[label / m], s * levels[label % m]))
            .collect();
        Ok(Self { m_points, alpha, levels, points })
    }

    pub fn m_points(&self) -> usize {
        self.m_points
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Point `i` carries label `i` (I bits in the high half, MSB first).
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m_points.trailing_zeros() as usize
    }

    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_symbol() / 2
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        let n = self.bits_per_symbol();
        (0..n).map(|b| ((label >> (n - 1 - b)) & 1) as u8).collect()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.m_points as f64
    }

    /// Nearest point's label.
    pub fn hard_decision(&self, theta: Complex64) -> usize {
        let m = self.levels.len();
        let s = self.alpha.sqrt();
        let axis = |v: f64| {
            (0..m)
                .min_by(|&a, &b| {
                    (v - s * self.levels[a]).abs().total_cmp(&(v - s * self.levels[b]).abs())
                })
                .unwrap()
        };
        axis(theta.re) * m + axis(theta.im)
    }

    fn axis_loglik(&self, v: f64, err_var: f64, out: &mut [f64]) {
        let s = self.alpha.sqrt();
        for (o, &l) in out.iter_mut().zip(&self.levels) {
            let d = v - s * l;
            *o = -d * d / err_var;
        }
    }
}

pub fn build_constellation(m_points: usize, rho: f64) -> Result<Constellation> {
    Constellation::new(m_points, rho)
}

/// Maps 0/1 bits to symbols, `bits_per_symbol` bits at a time.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let n = c.bits_per_symbol();
    if bits.len() % n != 0 {
        return Err(Error::config(format!(
            "{} bits do not fill whole {}-bit symbols",
            bits.len(),
            n
        )));
    }
    Ok(bits
        .chunks(n)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.points[label]
        })
        .collect())
}

/// Demapper output for one symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftSymbol {
    /// `log p(b = 0 | theta_hat) / p(b = 1 | theta_hat)` per label bit.
    pub llrs: Vec<f64>,
    /// Normalized log posterior of every point, indexed by label.
    pub log_app: Vec<f64>,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn combine(a: f64, b: f64, mode: DemapMode) -> f64 {
    match mode {
        DemapMode::Exact => log_sum_exp(a, b),
        DemapMode::MaxLog => a.max(b),
    }
}

/// Bit LLRs of one symbol estimate written into `out` (length `bits_per_symbol`).
///
/// The estimate error is modeled as circular complex Gaussian with variance
/// `err_var`, so the axes separate and each axis is demapped on its own.
pub fn llr_demap_into(
    theta_hat_u: Complex64,
    err_var: f64,
    c: &Constellation,
    mode: DemapMode,
    out: &mut [f64],
) -> Result<()> {
    if !(err_var > 0.0) {
        return Err(Error::Numeric(format!("err_var must be > 0, got {err_var}")));
    }
    let k = c.bits_per_axis();
    if out.len() != 2 * k {
        return Err(Error::dims(2 * k, out.len()));
    }
    let m = c.levels.len();
    let mut ll = [0.0f64; 8];
    for (axis, v) in [theta_hat_u.re, theta_hat_u.im].into_iter().enumerate() {
        c.axis_loglik(v, err_var, &mut ll[..m]);
        for b in 0..k {
            let shift = k - 1 - b;
            let (mut zero, mut one) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (g, &l) in ll[..m].iter().enumerate() {
                if (g >> shift) & 1 == 0 {
                    zero = combine(zero, l, mode);
                } else {
                    one = combine(one, l, mode);
                }
            }
            out[axis * k + b] = zero - one;
        }
    }
    Ok(())
}

/// Exact bit LLRs and the per-point log posterior.
pub fn llr_demap(theta_hat_u: Complex64, err_var: f64, c: &Constellation) -> Result<SoftSymbol> {
    let mut llrs = vec![0.0; c.bits_per_symbol()];
    llr_demap_into(theta_hat_u, err_var, c, DemapMode::Exact, &mut llrs)?;
    Ok(SoftSymbol { llrs, log_app: symbol_log_app(theta_hat_u, err_var, c)? })
}

/// `log p(theta = point | theta_hat)` for every point, uniform prior.
pub fn symbol_log_app(theta_hat_u: Complex64, err_var: f64, c: &Constellation) -> Result<Vec<f64>> {
    if !(err_var > 0.0) {
        return Err(Error::Numeric(format!("err_var must be > 0, got {err_var}")));
    }
    let raw: Vec<f64> = c
        .points
        .iter()
        .map(|p| -(theta_hat_u - p).norm_sqr() / err_var)
        .collect();
    let norm = raw.iter().fold(f64::NEG_INFINITY, |acc, &v| log_sum_exp(acc, v));
    Ok(raw.into_iter().map(|v| v - norm).collect())
}

/// Largest square QAM (4, 16 or 64 points) with `M < 2^(n * capacity)`, never below QPSK.
pub fn size_for_capacity(n: usize, capacity_bits: f64) -> Modulation {
    let budget = n as f64 * capacity_bits;
    let mut best = Modulation::Qpsk;
    for m in Modulation::ALL {
        if (m.points() as f64).log2() < budget {
            best = m;
        }
    }
    best
}

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Symbol error rate of ML detection on a square QAM with `m_points` points
/// (allowed non-integer) and point scale `alpha` under circular Gaussian error of
/// variance `err_var`.
pub fn qam_ser(m_points: f64, alpha: f64, err_var: f64) -> f64 {
    let p_axis = 2.0 * (1.0 - 1.0 / m_points.sqrt()) * q_function((2.0 * alpha / err_var).sqrt());
    1.0 - (1.0 - p_axis).powi(2)
}
