//! Hybrid-ARQ sessions over Rayleigh block fading.
//!
//! Every session sends one CRC-protected turbo codeword. After each round the
//! destination combines everything received so far, demaps, decodes and
//! acknowledges; a NACK triggers a retransmission whose content depends on the
//! [`Mode`]:
//!
//! - `Chase`: the same symbols again, combined by MRC.
//! - `Fpf`: every symbol is re-encoded by the linear feedback code from the
//!   fed-back channel output of the previous round.
//! - `Ppf`: only the symbols carrying the least reliable information bits
//!   after round 1 are fed back and re-encoded; the rest stay silent.
//! - `PpfPc`: like `Ppf`, with the other symbols repeated and MRC-combined.
//! - `FpfQuant`: `Fpf` with the fed-back samples quantized per phase.
//! - `IrBaseline`: incremental redundancy from the punctured mother code.
//!
//! Multi-antenna links are split per round into parallel subchannels by an
//! SVD with waterfilling; symbol `s` always rides subchannel `s mod M`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_gain, AntennaDims, CMatrix, Quantizer};
use crate::fec::{crc_attach, crc_ok, ir_puncturing, CodecConfig, Decoded, TurboCodec};
use crate::lfc::{optimize_gamma, Combiner, FeedbackCode};
use crate::modem::{llr_demap_into, map_bits, Constellation, DemapMode, Modulation};
use crate::multiantenna::svd_waterfill;
use crate::rng::{complex_gaussian, SessionRng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Chase,
    Fpf,
    Ppf,
    PpfPc,
    FpfQuant,
    IrBaseline,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::Chase, Mode::Fpf, Mode::Ppf, Mode::PpfPc, Mode::FpfQuant, Mode::IrBaseline];

    pub fn token(self) -> &'static str {
        match self {
            Mode::Chase => "chase",
            Mode::Fpf => "fpf",
            Mode::Ppf => "ppf",
            Mode::PpfPc => "ppf_pc",
            Mode::FpfQuant => "fpf_quant",
            Mode::IrBaseline => "ir_baseline",
        }
    }

    fn is_partial(self) -> bool {
        matches!(self, Mode::Ppf | Mode::PpfPc)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        Mode::ALL
            .into_iter()
            .find(|m| m.token() == t || (t == "ir" && *m == Mode::IrBaseline))
            .ok_or_else(|| Error::config(format!("unknown mode '{s}'")))
    }
}

/// Power split between message repetition and noise correction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaChoice {
    /// 1 for noiseless feedback, otherwise the AWGN-optimal split for `n_max` rounds.
    Auto,
    Fixed(f64),
}

impl fmt::Display for GammaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaChoice::Auto => f.write_str("auto"),
            GammaChoice::Fixed(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for GammaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("auto") {
            return Ok(GammaChoice::Auto);
        }
        t.parse::<f64>()
            .map(GammaChoice::Fixed)
            .map_err(|_| Error::config(format!("gamma must be 'auto' or a number, got '{s}'")))
    }
}

/// PPF feedback budget: a symbol count or a fraction of the packet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpfBudget {
    Symbols(usize),
    Fraction(f64),
}

impl PpfBudget {
    pub fn symbols(self, packet_len: usize) -> usize {
        match self {
            PpfBudget::Symbols(n) => n,
            PpfBudget::Fraction(f) => (f * packet_len as f64).round() as usize,
        }
    }
}

impl fmt::Display for PpfBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PpfBudget::Symbols(n) => write!(f, "{n}"),
            PpfBudget::Fraction(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

impl FromStr for PpfBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::config(format!("t_sym must be a symbol count or a percentage, got '{s}'"));
        if let Some(p) = t.strip_suffix('%') {
            let v: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(0.0..=100.0).contains(&v) {
                return Err(bad());
            }
            return Ok(PpfBudget::Fraction(v / 100.0));
        }
        t.parse::<usize>().map(PpfBudget::Symbols).map_err(|_| bad())
    }
}

/// How the destination decides to acknowledge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckRule {
    #[default]
    Crc,
    /// Compare against the transmitted bits (ablation only).
    Genie,
}

/// Channel overrides for tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestHooks {
    pub noiseless_forward: bool,
    pub zero_gains: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarqConfig {
    pub mode: Mode,
    pub n_max: usize,
    /// Average transmit power (linear).
    pub rho: f64,
    /// Feedback noise variance.
    pub sigma2: f64,
    pub gamma: GammaChoice,
    pub t_sym: Option<PpfBudget>,
    /// Bits per phase for `FpfQuant`.
    pub quant_bits: Option<u32>,
    pub antennas: AntennaDims,
    pub modulation: Modulation,
    pub codec: CodecConfig,
    pub ack: AckRule,
    pub demap: DemapModeSetting,
    #[serde(default)]
    pub hooks: TestHooks,
}

/// Serializable mirror of [`DemapMode`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemapModeSetting {
    #[default]
    Exact,
    MaxLog,
}

impl HarqConfig {
    pub fn new(mode: Mode, rho: f64, modulation: Modulation) -> Self {
        Self {
            mode,
            n_max: 4,
            rho,
            sigma2: 0.0,
            gamma: GammaChoice::Auto,
            t_sym: None,
            quant_bits: None,
            antennas: AntennaDims::SISO,
            modulation,
            codec: CodecConfig { early_stop: true, ..CodecConfig::default() },
            ack: AckRule::Crc,
            demap: DemapModeSetting::Exact,
            hooks: TestHooks::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.antennas.validate()?;
        if self.n_max == 0 {
            return Err(Error::config("n_max must be >= 1"));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::config(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Error::config(format!("sigma2 must be >= 0, got {}", self.sigma2)));
        }
        if let GammaChoice::Fixed(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::config(format!("gamma must be in [0, 1], got {g}")));
            }
        }
        match (self.mode.is_partial(), self.t_sym) {
            (true, None) => return Err(Error::config(format!("mode {} needs t_sym", self.mode))),
            (false, Some(_)) => {
                return Err(Error::config(format!("t_sym only applies to ppf and ppf_pc, not {}", self.mode)))
            }
            (true, Some(PpfBudget::Fraction(f))) if !(0.0..=1.0).contains(&f) => {
                return Err(Error::config("t_sym fraction must be in [0, 1]"))
            }
            _ => {}
        }
        match (self.mode == Mode::FpfQuant, self.quant_bits) {
            (true, None) => return Err(Error::config("fpf_quant needs quant_bits")),
            (true, Some(b)) if !(1..=16).contains(&b) => {
                return Err(Error::config(format!("quant_bits must be in 1..=16, got {b}")))
            }
            (false, Some(_)) => return Err(Error::config("quant_bits only applies to fpf_quant")),
            _ => {}
        }
        if self.codec.l_info <= self.codec.crc_bits {
            return Err(Error::config("l_info must exceed the CRC length"));
        }
        Ok(())
    }

    /// The feedback noise level the code is designed for; quantization adds
    /// its distortion at the AWGN reference power `1 + rho`.
    pub fn design_sigma2(&self) -> f64 {
        match (self.mode, self.quant_bits) {
            (Mode::FpfQuant, Some(b)) => {
                self.sigma2 + Quantizer::gaussian_mse(b) * (1.0 + self.rho + self.sigma2)
            }
            _ => self.sigma2,
        }
    }

    /// The power split actually used.
    pub fn resolved_gamma(&self) -> Result<f64> {
        match (self.mode, self.gamma) {
            (Mode::Chase | Mode::IrBaseline, _) => Ok(0.0),
            (_, GammaChoice::Fixed(g)) => Ok(g),
            (_, GammaChoice::Auto) => optimize_gamma(self.rho, self.design_sigma2(), self.n_max),
        }
    }
}

/// Per-round record of one session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Mean post-combining SNR over the packet's symbols.
    pub snr_post: f64,
    pub crc: bool,
    /// Minimum, 10% and 50% quantiles of the information-bit `|LLR|`.
    pub llr_min_abs_quantiles: [f64; 3],
    /// Transmitted energy of this round.
    pub tx_energy: f64,
    /// Symbols sent this round.
    pub tx_symbols: usize,
    pub decoder_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub success: bool,
    /// Rounds used: the round of the first ACK, or `n_max` on failure.
    pub transmissions_used: usize,
    pub rounds: Vec<RoundRecord>,
}

/// Everything about a configuration that does not change between sessions.
#[derive(Clone, Debug)]
pub struct HarqEngine {
    config: HarqConfig,
    codec: TurboCodec,
    constellation: Constellation,
    gamma: f64,
    /// `order[j]` = coded bit carried at channel bit position `j`.
    order: Vec<usize>,
    /// Symbol carrying each information bit.
    info_symbol: Vec<usize>,
    packet_len: usize,
    demap: DemapMode,
}

/// Channel bit order: `(s_i, p1_i, p2_i)` triplets, then the tails, so that
/// systematic bits are spread over the whole packet.
pub fn channel_bit_order(l_info: usize) -> Vec<usize> {
    let k = l_info;
    let mut order = Vec::with_capacity(3 * k + crate::fec::TAIL_BITS);
    for i in 0..k {
        order.extend([i, k + i, 2 * k + i]);
    }
    order.extend(3 * k..3 * k + crate::fec::TAIL_BITS);
    order
}

impl HarqEngine {
    pub fn new(config: HarqConfig) -> Result<Self> {
        config.validate()?;
        let codec = TurboCodec::new(config.codec.clone())?;
        let constellation = Constellation::new(config.modulation.points(), config.rho)?;
        let gamma = config.resolved_gamma()?;
        let order = channel_bit_order(config.codec.l_info);
        let bps = constellation.bits_per_symbol();
        let packet_len = order.len().div_ceil(bps);
        let mut info_symbol = vec![0; config.codec.l_info];
        for (pos, &coded) in order.iter().enumerate() {
            if coded < config.codec.l_info {
                info_symbol[coded] = pos / bps;
            }
        }
        let demap = match config.demap {
            DemapModeSetting::Exact => DemapMode::Exact,
            DemapModeSetting::MaxLog => DemapMode::MaxLog,
        };
        Ok(Self { config, codec, constellation, gamma, order, info_symbol, packet_len, demap })
    }

    pub fn config(&self) -> &HarqConfig {
        &self.config
    }

    pub fn codec(&self) -> &TurboCodec {
        &self.codec
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Symbols per packet `L`.
    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    /// PPF budget in symbols.
    pub fn t_sym(&self) -> usize {
        self.config.t_sym.map_or(0, |b| b.symbols(self.packet_len).min(self.packet_len))
    }

    /// Payload bits per packet (information bits minus CRC).
    pub fn payload_len(&self) -> usize {
        self.config.codec.l_info - self.config.codec.crc_bits
    }

    /// Runs one session with a fresh payload drawn from the bits stream.
    pub fn run_seeded(&self, seed: u64) -> Result<SessionResult> {
        let mut rng = SessionRng::new(seed);
        let payload: Vec<u8> = (0..self.payload_len()).map(|_| rng.bits.random_range(0..2u8)).collect();
        run_session(self, &payload, &mut rng)
    }
}

/// Deterministic PPF symbol selection.
///
/// Information bits are ranked by `(|l_i|, i)`; the longest prefix whose
/// symbols fit in `t_sym` is kept. Budget left once every information-bearing
/// symbol is in is spent on the remaining symbols in index order.
pub fn ppf_select(info_llrs: &[f64], t_sym: usize, info_symbol: &[usize], packet_len: usize) -> Vec<bool> {
    let mut rank: Vec<usize> = (0..info_llrs.len()).collect();
    rank.sort_by(|&a, &b| info_llrs[a].abs().total_cmp(&info_llrs[b].abs()).then(a.cmp(&b)));
    let mut chosen = vec![false; packet_len];
    let mut count = 0;
    let mut complete = true;
    for &bit in &rank {
        let s = info_symbol[bit];
        if chosen[s] {
            continue;
        }
        if count == t_sym {
            complete = false;
            break;
        }
        chosen[s] = true;
        count += 1;
    }
    if complete {
        for c in chosen.iter_mut() {
            if count == t_sym {
                break;
            }
            if !*c {
                *c = true;
                count += 1;
            }
        }
    }
    chosen
}

/// One round's scalar subchannels.
struct RoundChannel {
    h: CMatrix,
    /// Per-subchannel effective gain `lambda_i sqrt(xi_i)`.
    gains: Vec<f64>,
    /// `U` and `V diag(sqrt(xi))` for the physical mapping (MIMO only).
    u: Option<CMatrix>,
    v_scaled: Option<CMatrix>,
}

fn round_channel(cfg: &HarqConfig, rng: &mut SessionRng) -> Result<RoundChannel> {
    let AntennaDims { mt, mr } = cfg.antennas;
    let mut h = sample_gain(mr, mt, &mut rng.gains);
    if cfg.hooks.zero_gains {
        h.fill(Complex64::new(0.0, 0.0));
    }
    let m = cfg.antennas.spatial_channels();
    if mr == 1 && mt == 1 {
        return Ok(RoundChannel { gains: vec![h[(0, 0)].norm()], h, u: None, v_scaled: None });
    }
    match svd_waterfill(&h, cfg.rho) {
        Ok(dec) => {
            let mut v_scaled = dec.v.clone();
            for (j, &x) in dec.xi.iter().enumerate() {
                v_scaled.column_mut(j).scale_mut(x.sqrt());
            }
            Ok(RoundChannel { gains: dec.effective_gains, h, u: Some(dec.u), v_scaled: Some(v_scaled) })
        }
        Err(Error::DegenerateChannel(_)) => Ok(RoundChannel {
            gains: vec![0.0; m],
            u: Some(CMatrix::identity(mr, m)),
            v_scaled: Some(CMatrix::zeros(mt, m)),
            h,
        }),
        Err(e) => Err(e),
    }
}

/// Sends one round: `sym[s]` for every symbol (zero when silent), returns the
/// derotated observations `y_tilde[s]` and fed-back `r_tilde[s]`.
fn transmit(
    cfg: &HarqConfig,
    ch: &RoundChannel,
    sym: &[Complex64],
    quant: &[Option<Quantizer>],
    rng: &mut SessionRng,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = ch.gains.len();
    let mr = cfg.antennas.mr;
    let uses = sym.len().div_ceil(m);
    let noise_var = if cfg.hooks.noiseless_forward { 0.0 } else { 1.0 };
    let mut y_t = vec![Complex64::new(0.0, 0.0); sym.len()];
    let mut r_t = vec![Complex64::new(0.0, 0.0); sym.len()];
    let mut z = vec![Complex64::new(0.0, 0.0); mr];
    let mut s_vec = vec![Complex64::new(0.0, 0.0); m];
    for u in 0..uses {
        for zi in z.iter_mut() {
            *zi = complex_gaussian(&mut rng.forward_noise, 1.0) * noise_var;
        }
        for (i, s) in s_vec.iter_mut().enumerate() {
            *s = sym.get(u * m + i).copied().unwrap_or_default();
        }
        let projected: Vec<Complex64> = match (&ch.u, &ch.v_scaled) {
            (Some(uu), Some(vs)) => {
                let x = vs * nalgebra::DVector::from_column_slice(&s_vec);
                let y = &ch.h * x + nalgebra::DVector::from_column_slice(&z);
                (uu.adjoint() * y).iter().copied().collect()
            }
            _ => {
                let h = ch.h[(0, 0)];
                let y = h * s_vec[0] + z[0];
                let rot = if h.norm() > 0.0 { h.conj() / h.norm() } else { Complex64::new(1.0, 0.0) };
                vec![y * rot]
            }
        };
        for i in 0..m {
            let n = complex_gaussian(&mut rng.feedback_noise, cfg.sigma2);
            let s = u * m + i;
            if s >= sym.len() {
                continue;
            }
            y_t[s] = projected[i];
            let r = projected[i] + n;
            r_t[s] = match quant[i] {
                Some(q) => q.quantize(r),
                None => r,
            };
        }
    }
    (y_t, r_t)
}

fn quantiles(llrs: &[f64]) -> [f64; 3] {
    let mut a: Vec<f64> = llrs.iter().map(|l| l.abs()).collect();
    a.sort_by(f64::total_cmp);
    let at = |q: f64| a[((a.len() - 1) as f64 * q).round() as usize];
    [a[0], at(0.1), at(0.5)]
}

const ERR_VAR_FLOOR: f64 = 1e-15;
const NOISELESS_VAR: f64 = 1e-4;

fn success(cfg: &HarqConfig, decoded: &Decoded, info: &[u8]) -> bool {
    match cfg.ack {
        AckRule::Crc => crc_ok(&decoded.bits),
        AckRule::Genie => decoded.bits == info,
    }
}

/// Runs one hybrid-ARQ session for `payload` (CRC is appended here).
pub fn run_session(engine: &HarqEngine, payload: &[u8], rng: &mut SessionRng) -> Result<SessionResult> {
    if payload.len() != engine.payload_len() {
        return Err(Error::dims(engine.payload_len(), payload.len()));
    }
    let info = crc_attach(payload);
    let coded = engine.codec.encode(&info)?;
    if engine.config.mode == Mode::IrBaseline {
        return run_ir(engine, &info, &coded, rng);
    }
    let cfg = &engine.config;
    let c = &engine.constellation;
    let bps = c.bits_per_symbol();
    let l = engine.packet_len;
    let m = cfg.antennas.spatial_channels();
    let n_max = cfg.n_max;

    let mut channel_bits = vec![0u8; l * bps];
    for (j, &src) in engine.order.iter().enumerate() {
        channel_bits[j] = coded[src];
    }
    let symbols = map_bits(&channel_bits, c)?;

    // per-symbol state
    let mut x = symbols.clone();
    let mut ys = vec![Complex64::new(0.0, 0.0); l * n_max];
    let mut residual = vec![Complex64::new(0.0, 0.0); l];
    // which symbols follow the feedback code, and which are still transmitted
    let mut coded_sym = vec![engine.gamma > 0.0; l];
    let mut active = vec![true; l];
    let mut sub_gains: Vec<Vec<Complex64>> = vec![Vec::new(); m];
    let mut sub_sigma2: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut rounds = Vec::new();
    let mut llrs = vec![0.0; l * bps];
    let mut bit_llr = vec![0.0; bps];

    for k in 0..n_max {
        let ch = round_channel(cfg, rng)?;
        let quant: Vec<Option<Quantizer>> = ch
            .gains
            .iter()
            .map(|g| match cfg.quant_bits {
                Some(b) if cfg.mode == Mode::FpfQuant => {
                    Quantizer::for_received_power(b, 1.0 + cfg.rho * g * g + cfg.sigma2).ok()
                }
                _ => None,
            })
            .collect();
        for (i, g) in ch.gains.iter().enumerate() {
            sub_gains[i].push(Complex64::new(*g, 0.0));
            let extra = quant[i].map_or(0.0, |q| {
                Quantizer::gaussian_mse(q.bits) * (1.0 + cfg.rho * g * g + cfg.sigma2)
            });
            sub_sigma2[i].push(cfg.sigma2 + extra);
        }

        let tx: Vec<Complex64> = (0..l).map(|s| if active[s] { x[s] } else { Complex64::new(0.0, 0.0) }).collect();
        let tx_energy: f64 = tx.iter().map(|v| v.norm_sqr()).sum();
        let tx_symbols = active.iter().filter(|&&a| a).count();
        let (y_t, r_t) = transmit(cfg, &ch, &tx, &quant, rng);
        for s in 0..l {
            ys[s * n_max + k] = y_t[s];
            let g = ch.gains[s % m];
            residual[s] = r_t[s] - g * x[s];
        }

        // destination: one combiner per (subchannel, symbol class, rounds seen)
        let mut combiners: Vec<[Option<Combiner>; 2]> = Vec::with_capacity(m);
        for i in 0..m {
            let lfc = FeedbackCode::with_feedback_noise(&sub_gains[i], cfg.rho, engine.gamma, &sub_sigma2[i])?;
            let mrc = FeedbackCode::with_feedback_noise(&sub_gains[i], cfg.rho, 0.0, &sub_sigma2[i])?;
            combiners.push([mrc.combiner(k + 1).ok(), lfc.combiner(k + 1).ok()]);
        }
        let mut first_round: Vec<Option<Combiner>> = Vec::new();
        if cfg.mode == Mode::Ppf && k > 0 {
            for i in 0..m {
                let code = FeedbackCode::with_feedback_noise(&sub_gains[i][..1], cfg.rho, 0.0, &sub_sigma2[i][..1])?;
                first_round.push(code.combiner(1).ok());
            }
        }
        let mut snr_sum = 0.0;
        for s in 0..l {
            let i = s % m;
            let (comb, obs) = if !active[s] && cfg.mode == Mode::Ppf {
                (first_round[i].as_ref(), &ys[s * n_max..s * n_max + 1])
            } else {
                // a single observation is combined the same way by every code
                let class = k > 0 && coded_sym[s];
                (combiners[i][usize::from(class)].as_ref(), &ys[s * n_max..s * n_max + k + 1])
            };
            let out = &mut llrs[s * bps..(s + 1) * bps];
            match comb {
                Some(cb) if cb.gain > 1e-12 && cb.err_var.is_finite() => {
                    snr_sum += cb.snr;
                    let est = cb.estimate_unbiased(obs);
                    // a genie-noiseless link only leaves the estimator's rounding error
                    let var = if cfg.hooks.noiseless_forward {
                        NOISELESS_VAR * cfg.rho
                    } else {
                        cb.err_var.max(ERR_VAR_FLOOR * cfg.rho)
                    };
                    llr_demap_into(est, var, c, engine.demap, &mut bit_llr)?;
                    out.copy_from_slice(&bit_llr);
                }
                _ => out.iter_mut().for_each(|v| *v = 0.0),
            }
        }
        let mut coded_llr = vec![0.0; coded.len()];
        for (j, &src) in engine.order.iter().enumerate() {
            coded_llr[src] = llrs[j];
        }
        let decoded = engine.codec.decode(&coded_llr)?;
        let ok = success(cfg, &decoded, &info);
        rounds.push(RoundRecord {
            round: k + 1,
            snr_post: snr_sum / l as f64,
            crc: crc_ok(&decoded.bits),
            llr_min_abs_quantiles: quantiles(&decoded.llrs),
            tx_energy,
            tx_symbols,
            decoder_iterations: decoded.iterations,
        });
        if ok {
            return Ok(SessionResult { success: true, transmissions_used: k + 1, rounds });
        }
        if k + 1 == n_max {
            break;
        }

        if k == 0 && cfg.mode.is_partial() {
            let chosen = ppf_select(&decoded.llrs, engine.t_sym(), &engine.info_symbol, l);
            for s in 0..l {
                coded_sym[s] = chosen[s] && engine.gamma > 0.0;
                if cfg.mode == Mode::Ppf {
                    active[s] = chosen[s];
                }
            }
        }

        // source: build next round's symbols from the fed-back outputs
        let codes: Vec<FeedbackCode> = (0..m)
            .map(|i| FeedbackCode::with_feedback_noise(&sub_gains[i], cfg.rho, engine.gamma, &sub_sigma2[i]))
            .collect::<Result<_>>()?;
        for s in 0..l {
            if coded_sym[s] && active[s] {
                x[s] = codes[s % m].encode_step(k, x[s], residual[s]);
            }
        }
    }
    Ok(SessionResult { success: false, transmissions_used: n_max, rounds })
}

fn run_ir(engine: &HarqEngine, info: &[u8], coded: &[u8], rng: &mut SessionRng) -> Result<SessionResult> {
    let cfg = &engine.config;
    let c = &engine.constellation;
    let bps = c.bits_per_symbol();
    let m = cfg.antennas.spatial_channels();
    let table = ir_puncturing(cfg.codec.l_info);
    let mut acc = vec![0.0; coded.len()];
    let mut rounds = Vec::new();
    let mut bit_llr = vec![0.0; bps];
    let no_quant = vec![None; m];
    for k in 0..cfg.n_max {
        let positions = &table[k % table.len()];
        let n_sym = positions.len().div_ceil(bps);
        let mut bits = vec![0u8; n_sym * bps];
        for (j, &p) in positions.iter().enumerate() {
            bits[j] = coded[p];
        }
        let sym = map_bits(&bits, c)?;
        let ch = round_channel(cfg, rng)?;
        let (y_t, _) = transmit(cfg, &ch, &sym, &no_quant, rng);
        let mut snr_sum = 0.0;
        for s in 0..n_sym {
            let g = ch.gains[s % m];
            if g <= 0.0 {
                continue;
            }
            snr_sum += cfg.rho * g * g;
            let var = if cfg.hooks.noiseless_forward { NOISELESS_VAR * cfg.rho } else { 1.0 / (g * g) };
            llr_demap_into(y_t[s] / g, var, c, engine.demap, &mut bit_llr)?;
            for (b, &l) in bit_llr.iter().enumerate() {
                if let Some(&p) = positions.get(s * bps + b) {
                    acc[p] += l;
                }
            }
        }
        let decoded = engine.codec.decode(&acc)?;
        let ok = success(cfg, &decoded, info);
        rounds.push(RoundRecord {
            round: k + 1,
            snr_post: snr_sum / n_sym as f64,
            crc: crc_ok(&decoded.bits),
            llr_min_abs_quantiles: quantiles(&decoded.llrs),
            tx_energy: sym.iter().map(|v| v.norm_sqr()).sum(),
            tx_symbols: n_sym,
            decoder_iterations: decoded.iterations,
        });
        if ok {
            return Ok(SessionResult { success: true, transmissions_used: k + 1, rounds });
        }
    }
    Ok(SessionResult { success: false, transmissions_used: cfg.n_max, rounds })
}

/// Throughput estimate over many sessions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub tau: f64,
    /// 95% normal-approximation half-width of `tau`.
    pub half_width: f64,
    pub fer: f64,
    pub sessions: usize,
    pub successes: usize,
    pub transmissions: usize,
}

/// `tau = successes / transmissions`, failed sessions counting `n_max`
/// transmissions and no success.
pub fn throughput(results: &[SessionResult]) -> Result<Throughput> {
    if results.is_empty() {
        return Err(Error::config("throughput needs at least one session"));
    }
    let n = results.len() as f64;
    let successes = results.iter().filter(|r| r.success).count();
    let transmissions: usize = results.iter().map(|r| r.transmissions_used).sum();
    let tau = successes as f64 / transmissions as f64;
    let mean_b = transmissions as f64 / n;
    // delta method for a ratio of means
    let var = results
        .iter()
        .map(|r| {
            let d = f64::from(u8::from(r.success)) - tau * r.transmissions_used as f64;
            d * d
        })
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let half_width = if results.len() > 1 { 1.96 * (var / n).sqrt() / mean_b } else { 0.0 };
    Ok(Throughput {
        tau,
        half_width,
        fer: 1.0 - successes as f64 / n,
        sessions: results.len(),
        successes,
        transmissions,
    })
}

/// One JSON object per round, for debugging.
pub fn trace_lines(mode: Mode, result: &SessionResult) -> Vec<String> {
    result
        .rounds
        .iter()
        .map(|r| {
            serde_json::json!({
                "round": r.round,
                "mode": mode.token(),
                "snr_post": r.snr_post,
                "crc": r.crc,
                "llr_min_abs_quantiles": r.llr_min_abs_quantiles,
            })
            .to_string()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(success: bool, b: usize) -> SessionResult {
        SessionResult { success, transmissions_used: b, rounds: Vec::new() }
    }

    #[test]
    fn throughput_examples() {
        let all_first: Vec<_> = (0..10).map(|_| result(true, 1)).collect();
        assert_eq!(throughput(&all_first).unwrap().tau, 1.0);
        let all_fail: Vec<_> = (0..10).map(|_| result(false, 4)).collect();
        assert_eq!(throughput(&all_fail).unwrap().tau, 0.0);
        let mixed: Vec<_> = (0..10).map(|i| if i % 2 == 0 { result(true, 2) } else { result(false, 4) }).collect();
        assert!((throughput(&mixed).unwrap().tau - 1.0 / 6.0).abs() < 1e-15);
        assert!(throughput(&[]).is_err());
    }

    #[test]
    fn token_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.token().parse::<Mode>().unwrap(), m);
        }
        assert_eq!("PPF-PC".parse::<Mode>().unwrap(), Mode::PpfPc);
        assert_eq!("50%".parse::<PpfBudget>().unwrap(), PpfBudget::Fraction(0.5));
        assert_eq!("120".parse::<PpfBudget>().unwrap(), PpfBudget::Symbols(120));
        assert!("150%".parse::<PpfBudget>().is_err());
        assert_eq!("auto".parse::<GammaChoice>().unwrap(), GammaChoice::Auto);
    }

    #[test]
    fn config_validation() {
        let mut c = HarqConfig::new(Mode::Ppf, 2.0, Modulation::Qpsk);
        assert!(c.validate().is_err());
        c.t_sym = Some(PpfBudget::Fraction(0.5));
        c.validate().unwrap();
        c.mode = Mode::Fpf;
        assert!(c.validate().is_err());
        let mut q = HarqConfig::new(Mode::FpfQuant, 2.0, Modulation::Qpsk);
        assert!(q.validate().is_err());
        q.quant_bits = Some(3);
        q.validate().unwrap();
    }

    #[test]
    fn bit_order_is_a_permutation() {
        let mut o = channel_bit_order(50);
        o.sort_unstable();
        assert!(o.iter().enumerate().all(|(i, &v)| i == v));
    }

    #[test]
    fn ppf_select_single_weak_symbol() {
        // 12 info bits, 2 per symbol
        let info_symbol: Vec<usize> = (0..12).map(|b| b / 2).collect();
        let mut llr = vec![40.0; 12];
        llr[6] = 0.1;
        llr[7] = -0.2;
        let chosen = ppf_select(&llr, 1, &info_symbol, 6);
        assert_eq!(chosen, vec![false, false, false, true, false, false]);
    }

    #[test]
    fn ppf_select_saturates() {
        let info_symbol: Vec<usize> = (0..12).map(|b| b / 2).collect();
        let llr: Vec<f64> = (0..12).map(|i| i as f64 - 5.5).collect();
        assert!(ppf_select(&llr, 8, &info_symbol, 8).iter().all(|&c| c));
        assert!(ppf_select(&llr, 0, &info_symbol, 8).iter().all(|&c| !c));
    }

    #[test]
    fn ppf_select_matches_threshold_sweep() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let bits = 40;
            let l = 30;
            let info_symbol: Vec<usize> = (0..bits).map(|_| rng.random_range(0..l)).collect();
            let llr: Vec<f64> = (0..bits).map(|_| rng.random_range(-8.0..8.0)).collect();
            let t = rng.random_range(0..=l);
            // oracle: sweep the threshold over the sorted magnitudes
            let mut mags: Vec<(f64, usize)> = llr.iter().enumerate().map(|(i, v)| (v.abs(), i)).collect();
            mags.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut best = std::collections::BTreeSet::new();
            for take in 0..=bits {
                let set: std::collections::BTreeSet<usize> = mags[..take].iter().map(|&(_, i)| info_symbol[i]).collect();
                if set.len() <= t {
                    best = set;
                } else {
                    break;
                }
            }
            let chosen = ppf_select(&llr, t, &info_symbol, l);
            let got: std::collections::BTreeSet<usize> =
                (0..l).filter(|&s| chosen[s] && info_symbol.contains(&s)).collect();
            let all_info: std::collections::BTreeSet<usize> = info_symbol.iter().copied().collect();
            if best.len() < all_info.len() {
                assert_eq!(got, best);
                assert_eq!(chosen.iter().filter(|&&c| c).count(), best.len());
            } else {
                assert_eq!(got, all_info);
                assert_eq!(chosen.iter().filter(|&&c| c).count(), t.max(best.len()));
            }
        }
    }
}
