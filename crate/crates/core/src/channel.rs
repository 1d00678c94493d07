//! Rayleigh block fading with additive forward and feedback noise.
//!
//! Each retransmission `k` sees one fading realization (`H[k]`, `Mr x Mt`, with
//! the SISO case `1 x 1` and the MISO case the row `h^T`), constant over the
//! packet. Forward noise is `CN(0, I)`; feedback noise is `CN(0, sigma2 I)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::rng::complex_gaussian;
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Antenna configuration of the forward link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AntennaDims {
    pub mt: usize,
    pub mr: usize,
}

impl AntennaDims {
    pub const SISO: AntennaDims = AntennaDims { mt: 1, mr: 1 };

    pub fn miso(mt: usize) -> Self {
        Self { mt, mr: 1 }
    }

    pub fn mimo(mr: usize, mt: usize) -> Self {
        Self { mt, mr }
    }

    /// Number of spatial channels, `min(Mr, Mt)`.
    pub fn spatial_channels(&self) -> usize {
        self.mt.min(self.mr)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mt == 0 || self.mr == 0 {
            return Err(Error::config(format!(
                "antenna dimensions must be >= 1, got {}x{}",
                self.mr, self.mt
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for AntennaDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.mr, self.mt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceConfig {
    pub dims: AntennaDims,
    pub n_max: usize,
    pub sigma2: f64,
}

/// Channel realizations for one packet session.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTrace {
    /// One `Mr x Mt` gain matrix per retransmission.
    pub forward_gains: Vec<CMatrix>,
    pub feedback_noise_var: f64,
    pub n_max: usize,
}

impl ChannelTrace {
    /// Forward noise is normalized; SNR lives entirely in `rho`.
    pub const FORWARD_NOISE_VAR: f64 = 1.0;

    /// Scalar gain `h[k]` (SISO traces).
    pub fn scalar(&self, k: usize) -> Complex64 {
        self.forward_gains[k][(0, 0)]
    }

    pub fn scalars(&self) -> Vec<Complex64> {
        self.forward_gains.iter().map(|h| h[(0, 0)]).collect()
    }
}

/// Draws `n_max` independent block-fading realizations.
pub fn sample_trace<R: Rng + ?Sized>(config: &TraceConfig, rng: &mut R) -> Result<ChannelTrace> {
    config.dims.validate()?;
    if config.n_max == 0 {
        return Err(Error::config("n_max must be >= 1"));
    }
    if !(config.sigma2 >= 0.0) {
        return Err(Error::config(format!(
            "feedback noise variance must be >= 0, got {}",
            config.sigma2
        )));
    }
    let AntennaDims { mt, mr } = config.dims;
    let forward_gains = (0..config.n_max)
        .map(|_| sample_gain(mr, mt, rng))
        .collect();
    Ok(ChannelTrace {
        forward_gains,
        feedback_noise_var: config.sigma2,
        n_max: config.n_max,
    })
}

/// One `Mr x Mt` matrix of i.i.d. CN(0,1) entries, drawn row-major.
pub fn sample_gain<R: Rng + ?Sized>(mr: usize, mt: usize, rng: &mut R) -> CMatrix {
    let mut h = CMatrix::zeros(mr, mt);
    for r in 0..mr {
        for c in 0..mt {
            h[(r, c)] = complex_gaussian(rng, 1.0);
        }
    }
    h
}

/// `y = H x + z`, `x` being `Mt x L` (one column per channel use).
pub fn apply_forward<R: Rng + ?Sized>(x: &CMatrix, h: &CMatrix, rng: &mut R) -> Result<CMatrix> {
    apply_forward_with_noise(x, h, ChannelTrace::FORWARD_NOISE_VAR, rng)
}

/// Test hook: the forward map with an explicit noise variance (0 disables noise).
#[doc(hidden)]
pub fn apply_forward_with_noise<R: Rng + ?Sized>(
    x: &CMatrix,
    h: &CMatrix,
    noise_var: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    if h.ncols() != x.nrows() {
        return Err(Error::dims(
            format!("{} transmit rows", h.ncols()),
            format!("{} rows", x.nrows()),
        ));
    }
    let mut y = h * x;
    if noise_var > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, noise_var);
        }
    }
    Ok(y)
}

/// `r = y + n`, `n ~ CN(0, sigma2 I)`; the identity when `sigma2 == 0`.
pub fn apply_feedback<R: Rng + ?Sized>(y: &[Complex64], sigma2: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(sigma2 >= 0.0) {
        return Err(Error::config(format!(
            "feedback noise variance must be >= 0, got {sigma2}"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(y.to_vec());
    }
    Ok(y.iter().map(|&v| v + complex_gaussian(rng, sigma2)).collect())
}

/// Uniform midrise scalar quantizer over `[-range, range]`, saturating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    pub bits: u32,
    pub range: f64,
}

/// Gaussian-optimal uniform quantizer loading factors (range / sigma) for
/// 1..=8 bits, with the matching normalized mean squared error.
const GAUSSIAN_LOADING: [(f64, f64); 8] = [
    (1.595_769_121_6, 0.363_380_227_6),
    (1.991_373_369_5, 0.118_846_050_4),
    (2.344_077_764_7, 0.037_439_659_4),
    (2.681_604_893_4, 0.011_542_884_4),
    (3.010_220_642_6, 0.003_495_211_4),
    (3.330_016_306_4, 0.001_040_045_4),
    (3.639_531_039_3, 0.000_304_332_8),
    (3.937_585_645_9, 0.000_087_686_2),
];

impl Quantizer {
    pub fn new(bits: u32, range: f64) -> Result<Self> {
        if bits == 0 || bits > 24 {
            return Err(Error::config(format!("bits per phase must be in 1..=24, got {bits}")));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::config(format!("quantizer range must be > 0, got {range}")));
        }
        Ok(Self { bits, range })
    }

    /// Range for a Gaussian component of standard deviation `sigma`: the
    /// MSE-optimal uniform loading for up to 8 bits, `4 sigma` above that.
    pub fn gaussian_range(bits: u32, sigma: f64) -> f64 {
        match GAUSSIAN_LOADING.get(bits.saturating_sub(1) as usize) {
            Some(&(load, _)) if bits >= 1 => load * sigma,
            _ => 4.0 * sigma,
        }
    }

    /// Expected squared error per component on a unit-variance Gaussian input
    /// at the [`Quantizer::gaussian_range`] loading.
    pub fn gaussian_mse(bits: u32) -> f64 {
        match GAUSSIAN_LOADING.get(bits.saturating_sub(1) as usize) {
            Some(&(_, mse)) if bits >= 1 => mse,
            _ => {
                let step = 8.0 / (1u64 << bits.min(60)) as f64;
                step * step / 12.0
            }
        }
    }

    /// Default quantizer for a received component of total complex power
    /// `power` (per-component standard deviation `sqrt(power / 2)`).
    pub fn for_received_power(bits: u32, power: f64) -> Result<Self> {
        Self::new(bits, Self::gaussian_range(bits, (0.5 * power).sqrt()))
    }

    pub fn step(&self) -> f64 {
        2.0 * self.range / (1u64 << self.bits) as f64
    }

    pub fn quantize_real(&self, v: f64) -> f64 {
        let step = self.step();
        let top = self.range - 0.5 * step;
        (step * ((v / step).floor() + 0.5)).clamp(-top, top)
    }

    pub fn quantize(&self, v: Complex64) -> Complex64 {
        Complex64::new(self.quantize_real(v.re), self.quantize_real(v.im))
    }
}

/// Quantizes the in-phase and quadrature parts of every sample independently.
pub fn quantize_coi(y: &[Complex64], bits_per_phase: u32, range: f64) -> Result<Vec<Complex64>> {
    let q = Quantizer::new(bits_per_phase, range)?;
    Ok(y.iter().map(|&v| q.quantize(v)).collect())
}
