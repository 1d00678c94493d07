//! Channel-level studies that need no FEC: average post-processed SNR of the
//! linear feedback code and uncoded MISO symbol error rate over retransmissions.
//!
//! Both are driven by spec sections in the same text format as HARQ sweeps:
//!
//! ```text
//! [snr]
//! name = fig4
//! rho_db = 4.77
//! sigma2 = 0, 0.1, 0.25, 1
//! gamma = auto, 0, 0.01     # 0 is MRC
//! n_max = 6
//! traces = 15000
//! seed = 4
//!
//! [miso]
//! name = fig3
//! mt = 2
//! rho_db = 0
//! rate_fraction = 0.5, 0.9  # R / ergodic capacity with perfect beamforming
//! n_max = 5
//! realizations = 100000
//! codebooks = rvq:2, rvq:3, grassmannian_mt2_b2.txt
//! ```

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harq::GammaChoice;
use crate::lfc::{awgn_post_snr, optimize_gamma, FeedbackCode};
use crate::linalg::CVector;
use crate::modem::qam_ser;
use crate::multiantenna::{
    beam_gain, build_rvq_codebook, load_codebook, perfect_beamformer, select_beamformer, unit_vector,
    BeamformingCodebook,
};
use crate::rng::{complex_gaussian, derive_seed, stream, Stream};
use crate::sim::{db_to_linear, Section};
use crate::{Error, Result};

/// Work is split into chunks with their own seeds so results do not depend on
/// the number of worker threads.
const CHUNK: usize = 1000;

fn chunks(total: usize) -> Vec<(usize, usize)> {
    (0..total.div_ceil(CHUNK)).map(|c| (c, CHUNK.min(total - c * CHUNK))).collect()
}

fn list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

fn real(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::config(format!("'{s}' is not a number")))
}

fn count(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::config(format!("'{s}' is not a non-negative integer")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub name: String,
    pub rho_db: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub gammas: Vec<GammaChoice>,
    pub n_max: usize,
    pub traces: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl SnrSpec {
    pub(crate) fn from_section(s: &Section) -> Result<Self> {
        let mut spec = SnrSpec {
            name: "snr".into(),
            rho_db: vec![10.0 * 3f64.log10()],
            sigma2: vec![0.0],
            gammas: vec![GammaChoice::Auto, GammaChoice::Fixed(0.0)],
            n_max: 4,
            traces: 15_000,
            seed: 1,
            output: None,
        };
        for (line, key, value) in &s.entries {
            let r: Result<()> = (|| {
                match key.as_str() {
                    "name" => spec.name = value.clone(),
                    "rho_db" => spec.rho_db = list(value, real)?,
                    "sigma2" => spec.sigma2 = list(value, real)?,
                    "gamma" => spec.gammas = list(value, |g| g.parse())?,
                    "n_max" => spec.n_max = count(value)?,
                    "traces" => spec.traces = count(value)?,
                    "seed" => spec.seed = count(value)? as u64,
                    "output" => spec.output = Some(PathBuf::from(value)),
                    _ => return Err(Error::config(format!("unknown snr key '{key}'"))),
                }
                Ok(())
            })();
            r.map_err(|e| s.error(*line, e))?;
        }
        spec.validate().map_err(|e| s.error(s.line, e))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_db.is_empty() || self.sigma2.is_empty() || self.gammas.is_empty() {
            return Err(Error::config("rho_db, sigma2 and gamma need at least one value"));
        }
        if self.n_max == 0 || self.n_max > 16 || self.traces < 2 {
            return Err(Error::config("need 1 <= n_max <= 16 and traces >= 2"));
        }
        if self.sigma2.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::config("sigma2 must be >= 0"));
        }
        for g in &self.gammas {
            if let GammaChoice::Fixed(v) = g {
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::config(format!("gamma {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub rho_db: f64,
    pub sigma2: f64,
    /// As written in the spec (`auto` or a number).
    pub gamma: String,
    pub gamma_value: f64,
    pub n: usize,
    /// Fading average of the post-processed SNR after `n` rounds.
    pub mean_snr: f64,
    pub snr_ci95: f64,
    /// Same code on unit gains.
    pub awgn_snr: f64,
}

/// Average post-processed SNR for every (rho, sigma2, gamma, n). All
/// configurations share the same fading traces.
pub fn snr_curves(spec: &SnrSpec) -> Result<Vec<SnrRow>> {
    spec.validate()?;
    struct Config {
        rho_db: f64,
        rho: f64,
        sigma2: f64,
        label: String,
        gamma: f64,
    }
    let mut configs = Vec::new();
    for &rho_db in &spec.rho_db {
        let rho = db_to_linear(rho_db);
        for &sigma2 in &spec.sigma2 {
            for g in &spec.gammas {
                let gamma = match *g {
                    GammaChoice::Auto => optimize_gamma(rho, sigma2, spec.n_max)?,
                    GammaChoice::Fixed(v) => v,
                };
                configs.push(Config { rho_db, rho, sigma2, label: g.to_string(), gamma });
            }
        }
    }
    let n = spec.n_max;
    // Per chunk: [config][round] -> (sum, sum of squares)
    let partial: Vec<Result<Vec<Vec<(f64, f64)>>>> = chunks(spec.traces)
        .par_iter()
        .map(|&(c, len)| {
            let mut rng = stream(derive_seed(spec.seed, &[c as u64]), Stream::Gains);
            let mut acc = vec![vec![(0.0, 0.0); n]; configs.len()];
            for _ in 0..len {
                let h: Vec<_> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                for (ci, cfg) in configs.iter().enumerate() {
                    let code = FeedbackCode::build(&h, cfg.rho, cfg.gamma, cfg.sigma2)?;
                    for k in 1..=n {
                        let s = code.post_snr_at(k)?;
                        acc[ci][k - 1].0 += s;
                        acc[ci][k - 1].1 += s * s;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![vec![(0.0, 0.0); n]; configs.len()];
    for p in partial {
        for (t, a) in total.iter_mut().zip(p?) {
            for (x, y) in t.iter_mut().zip(a) {
                x.0 += y.0;
                x.1 += y.1;
            }
        }
    }
    let m = spec.traces as f64;
    let mut rows = Vec::new();
    for (cfg, sums) in configs.iter().zip(&total) {
        for (k, &(s, s2)) in sums.iter().enumerate() {
            let mean = s / m;
            let var = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
            rows.push(SnrRow {
                rho_db: cfg.rho_db,
                sigma2: cfg.sigma2,
                gamma: cfg.label.clone(),
                gamma_value: cfg.gamma,
                n: k + 1,
                mean_snr: mean,
                snr_ci95: 1.96 * (var / m).sqrt(),
                awgn_snr: awgn_post_snr(cfg.rho, cfg.sigma2, cfg.gamma, k + 1)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookSource {
    Rvq { bits: u32 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisoSpec {
    pub name: String,
    pub mt: usize,
    pub rho_db: f64,
    pub rate_fractions: Vec<f64>,
    pub n_max: usize,
    pub realizations: usize,
    pub seed: u64,
    pub codebooks: Vec<CodebookSource>,
    pub output: Option<PathBuf>,
}

impl MisoSpec {
    /// `base` resolves relative codebook paths.
    pub(crate) fn from_section(s: &Section, base: &Path) -> Result<Self> {
        let mut spec = MisoSpec {
            name: "miso".into(),
            mt: 2,
            rho_db: 0.0,
            rate_fractions: vec![0.5],
            n_max: 5,
            realizations: 100_000,
            seed: 1,
            codebooks: Vec::new(),
            output: None,
        };
        for (line, key, value) in &s.entries {
            let r: Result<()> = (|| {
                match key.as_str() {
                    "name" => spec.name = value.clone(),
                    "mt" => spec.mt = count(value)?,
                    "rho_db" => spec.rho_db = real(value)?,
                    "rate_fraction" => spec.rate_fractions = list(value, real)?,
                    "n_max" => spec.n_max = count(value)?,
                    "realizations" => spec.realizations = count(value)?,
                    "seed" => spec.seed = count(value)? as u64,
                    "output" => spec.output = Some(PathBuf::from(value)),
                    "codebooks" => {
                        spec.codebooks = list(value, |c| match c.strip_prefix("rvq:") {
                            Some(b) => Ok(CodebookSource::Rvq { bits: count(b)? as u32 }),
                            None => Ok(CodebookSource::File(base.join(c))),
                        })?
                    }
                    _ => return Err(Error::config(format!("unknown miso key '{key}'"))),
                }
                Ok(())
            })();
            r.map_err(|e| s.error(*line, e))?;
        }
        spec.validate().map_err(|e| s.error(s.line, e))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mt == 0 || self.n_max == 0 || self.realizations == 0 {
            return Err(Error::config("mt, n_max and realizations must be >= 1"));
        }
        if self.rate_fractions.is_empty() || self.rate_fractions.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::config("rate_fraction needs positive values"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisoRow {
    /// `perfect`, `none` (first antenna only) or a codebook label.
    pub variant: String,
    pub rate_fraction: f64,
    /// Rate in bits per channel use.
    pub rate: f64,
    pub n: usize,
    pub pe: f64,
}

/// Ergodic capacity `E[log2(1 + rho |h|^2)]` of the MISO channel with perfect
/// beamforming, estimated from `draws` channel draws.
pub fn miso_capacity(mt: usize, rho: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = stream(derive_seed(seed, &[u64::MAX]), Stream::Gains);
    let mut acc = 0.0;
    for _ in 0..draws {
        let g: f64 = (0..mt).map(|_| complex_gaussian(&mut rng, 1.0).norm_sqr()).sum();
        acc += (1.0 + rho * g).log2();
    }
    acc / draws as f64
}

/// Uncoded symbol error rate after `n = 1..=n_max` retransmissions of the
/// perfect-feedback linear code on the beamformed MISO channel.
///
/// At rate `R` the constellation has `M = 2^(n R)` points, taken as a real
/// number so the rate stays exactly proportional to `n`; the error rate is the
/// fading average of the exact square-QAM SER at the unbiased estimator's
/// error variance.
pub fn miso_error_curves(spec: &MisoSpec) -> Result<Vec<MisoRow>> {
    spec.validate()?;
    let rho = db_to_linear(spec.rho_db);
    let mut books: Vec<(String, BeamformingCodebook)> = Vec::new();
    for src in &spec.codebooks {
        let cb = match src {
            CodebookSource::Rvq { bits } => {
                let cb = build_rvq_codebook(spec.mt, *bits, derive_seed(spec.seed, &[0xB0, *bits as u64]))?;
                (format!("rvq-b{bits}"), cb)
            }
            CodebookSource::File(path) => {
                let cb = load_codebook(path)?;
                let stem = path.file_stem().map_or("codebook".into(), |s| s.to_string_lossy().into_owned());
                (stem, cb)
            }
        };
        if cb.1.mt != spec.mt {
            return Err(Error::config(format!("codebook {} is for mt = {}", cb.0, cb.1.mt)));
        }
        books.push(cb);
    }
    let capacity = miso_capacity(spec.mt, rho, spec.realizations, spec.seed);
    let rates: Vec<f64> = spec.rate_fractions.iter().map(|f| f * capacity).collect();
    let nv = books.len() + 2;
    let n = spec.n_max;
    let e1 = unit_vector(spec.mt);
    let cell = |v: usize, r: usize, k: usize| (v * rates.len() + r) * n + k;
    let partial: Vec<Result<Vec<f64>>> = chunks(spec.realizations)
        .par_iter()
        .map(|&(c, len)| {
            let mut rng = stream(derive_seed(spec.seed, &[c as u64]), Stream::Gains);
            let mut acc = vec![0.0; nv * rates.len() * n];
            let mut gains = vec![0.0; nv];
            for _ in 0..len {
                let mut log_phi_sq = vec![0.0; nv];
                for k in 0..n {
                    let h: CVector = DVector::from_iterator(spec.mt, (0..spec.mt).map(|_| complex_gaussian(&mut rng, 1.0)));
                    gains[0] = beam_gain(&h, &perfect_beamformer(&h));
                    for (i, (_, cb)) in books.iter().enumerate() {
                        gains[i + 1] = beam_gain(&h, &select_beamformer(&h, cb)?.1);
                    }
                    gains[nv - 1] = beam_gain(&h, &e1);
                    for v in 0..nv {
                        log_phi_sq[v] -= (rho * gains[v] * gains[v]).ln_1p();
                        let snr = (-log_phi_sq[v]).exp_m1();
                        for (r, &rate) in rates.iter().enumerate() {
                            let m_points = 2f64.powf(rate * (k + 1) as f64);
                            let alpha = 1.5 * rho / (m_points - 1.0);
                            acc[cell(v, r, k)] += if snr > 0.0 { qam_ser(m_points, alpha, rho / snr) } else { 1.0 - 1.0 / m_points };
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![0.0; nv * rates.len() * n];
    for p in partial {
        for (t, a) in total.iter_mut().zip(p?) {
            *t += a;
        }
    }
    let mut names = vec!["perfect".to_string()];
    names.extend(books.iter().map(|(l, _)| l.clone()));
    names.push("none".into());
    let mut rows = Vec::new();
    for (v, name) in names.iter().enumerate() {
        for (r, &rate) in rates.iter().enumerate() {
            for k in 0..n {
                rows.push(MisoRow {
                    variant: name.clone(),
                    rate_fraction: spec.rate_fractions[r],
                    rate,
                    n: k + 1,
                    pe: total[cell(v, r, k)] / spec.realizations as f64,
                });
            }
        }
    }
    Ok(rows)
}
