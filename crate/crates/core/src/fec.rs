//! Rate-1/3 turbo code with CRC-16 packet checks.
//!
//! Two identical recursive systematic convolutional encoders with feedback
//! polynomial `1 + D^2 + D^3` (13 octal) and feedforward `1 + D + D^3`
//! (15 octal), the second fed through a seeded pseudorandom interleaver. Both
//! trellises are terminated, giving a codeword
//! `[info | parity1 | parity2 | tails]` of `3 K + 12` bits. Decoding is
//! iterative BCJR in the log domain.
//!
//! LLRs everywhere follow `log p(b = 0) / p(b = 1)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TAIL_BITS: usize = 12;
const STATES: usize = 8;
const LLR_CLAMP: f64 = 60.0;

/// Jacobian logarithm variant used inside BCJR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxStar {
    /// `max(a, b) + ln(1 + e^{-|a-b|})`.
    #[default]
    Exact,
    /// Correction term from an 8-entry-per-unit lookup table.
    Table,
    MaxLog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    /// Information bits per packet, CRC included.
    pub l_info: usize,
    pub iterations: usize,
    pub crc_bits: usize,
    pub interleaver_seed: u64,
    pub max_star: MaxStar,
    /// Stop iterating as soon as the hard decisions pass the CRC.
    pub early_stop: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            l_info: 2020,
            iterations: 8,
            crc_bits: 16,
            interleaver_seed: 0x7475_7262_6f21,
            max_star: MaxStar::Exact,
            early_stop: false,
        }
    }
}

// ---------------------------------------------------------------- CRC

const CRC_POLY: u16 = 0x1021;
const CRC_INIT: u16 = 0xFFFF;

fn crc16(bits: &[u8]) -> u16 {
    let mut reg = CRC_INIT;
    for &b in bits {
        let top = ((reg >> 15) as u8) ^ (b & 1);
        reg <<= 1;
        if top == 1 {
            reg ^= CRC_POLY;
        }
    }
    reg
}

/// Appends the 16-bit CRC-CCITT of `bits`, MSB first.
pub fn crc_attach(bits: &[u8]) -> Vec<u8> {
    let crc = crc16(bits);
    let mut out = bits.to_vec();
    out.extend((0..16).rev().map(|i| ((crc >> i) & 1) as u8));
    out
}

pub fn crc_ok(bits: &[u8]) -> bool {
    if bits.len() < 16 {
        return false;
    }
    let (payload, tail) = bits.split_at(bits.len() - 16);
    let crc = tail.iter().fold(0u16, |acc, &b| (acc << 1) | u16::from(b & 1));
    crc16(payload) == crc
}

// ---------------------------------------------------------------- trellis

#[derive(Clone, Copy)]
struct Branch {
    from: usize,
    to: usize,
    input: u8,
    parity: u8,
}

const fn rsc_step(state: usize, input: u8) -> (usize, u8) {
    let s1 = ((state >> 2) & 1) as u8;
    let s2 = ((state >> 1) & 1) as u8;
    let s3 = (state & 1) as u8;
    let a = input ^ s2 ^ s3;
    let parity = a ^ s1 ^ s3;
    (((a as usize) << 2) | ((s1 as usize) << 1) | s2 as usize, parity)
}

/// Input that drives the feedback register to zero (tail termination).
const fn tail_input(state: usize) -> u8 {
    (((state >> 1) & 1) ^ (state & 1)) as u8
}

const fn branches() -> [Branch; 2 * STATES] {
    let mut out = [Branch { from: 0, to: 0, input: 0, parity: 0 }; 2 * STATES];
    let mut s = 0;
    while s < STATES {
        let mut u = 0;
        while u < 2 {
            let (to, parity) = rsc_step(s, u as u8);
            out[2 * s + u] = Branch { from: s, to, input: u as u8, parity };
            u += 1;
        }
        s += 1;
    }
    out
}

const BRANCHES: [Branch; 2 * STATES] = branches();

/// Encodes one constituent; returns parity and the 3 tail (input, parity) pairs.
fn rsc_encode(bits: &[u8]) -> (Vec<u8>, [(u8, u8); 3]) {
    let mut state = 0;
    let mut parity = Vec::with_capacity(bits.len());
    for &b in bits {
        let (next, p) = rsc_step(state, b & 1);
        parity.push(p);
        state = next;
    }
    let mut tail = [(0, 0); 3];
    for t in &mut tail {
        let u = tail_input(state);
        let (next, p) = rsc_step(state, u);
        *t = (u, p);
        state = next;
    }
    debug_assert_eq!(state, 0);
    (parity, tail)
}

// ---------------------------------------------------------------- max*

trait Jacobian {
    fn max_star(a: f64, b: f64) -> f64;
}

struct ExactLog;
struct TableLog;
struct MaxLogApprox;

impl Jacobian for ExactLog {
    #[inline(always)]
    fn max_star(a: f64, b: f64) -> f64 {
        let (hi, d) = if a > b { (a, a - b) } else { (b, b - a) };
        if d > 36.0 {
            hi
        } else {
            hi + (-d).exp().ln_1p()
        }
    }
}

const TABLE_STEP: f64 = 0.125;
const TABLE_LEN: usize = 64;

static CORRECTION: [f64; TABLE_LEN] = [
    // ln(1 + e^{-x}) at bin midpoints
    0.662385, 0.603785, 0.549055, 0.498135, 0.450937, 0.407351, 0.367242, 0.330458,
    0.296833, 0.266190, 0.238345, 0.213110, 0.190299, 0.169727, 0.151214, 0.134587,
    0.119680, 0.106337, 0.094413, 0.083770, 0.074283, 0.065835, 0.058320, 0.051641,
    0.045710, 0.040446, 0.035777, 0.031639, 0.027973, 0.024726, 0.021852, 0.019309,
    0.017060, 0.015070, 0.013311, 0.011756, 0.010382, 0.009168, 0.008095, 0.007147,
    0.006310, 0.005570, 0.004917, 0.004341, 0.003832, 0.003382, 0.002985, 0.002635,
    0.002326, 0.002053, 0.001812, 0.001599, 0.001411, 0.001246, 0.001099, 0.000970,
    0.000856, 0.000756, 0.000667, 0.000589, 0.000519, 0.000458, 0.000405, 0.000357,
];

impl Jacobian for TableLog {
    #[inline(always)]
    fn max_star(a: f64, b: f64) -> f64 {
        let (hi, d) = if a > b { (a, a - b) } else { (b, b - a) };
        let idx = (d * (1.0 / TABLE_STEP)) as usize;
        if idx < TABLE_LEN {
            hi + CORRECTION[idx]
        } else {
            hi
        }
    }
}

impl Jacobian for MaxLogApprox {
    #[inline(always)]
    fn max_star(a: f64, b: f64) -> f64 {
        a.max(b)
    }
}

/// Soft-in/soft-out constituent decoder. `sys`, `apriori`, `par` cover the
/// `K` information steps; `tail` holds the 3 (systematic, parity) LLR pairs.
/// Writes a-posteriori LLRs of the information bits into `app`.
fn bcjr<J: Jacobian>(
    sys: &[f64],
    apriori: &[f64],
    par: &[f64],
    tail: &[(f64, f64); 3],
    alpha: &mut Vec<[f64; STATES]>,
    app: &mut [f64],
) {
    let k = sys.len();
    let steps = k + 3;
    const NEG: f64 = -1e300;
    alpha.clear();
    alpha.resize(steps + 1, [NEG; STATES]);
    alpha[0][0] = 0.0;

    let metrics = |t: usize| -> (f64, f64, bool) {
        if t < k {
            (0.5 * (sys[t] + apriori[t]), 0.5 * par[t], false)
        } else {
            let (s, p) = tail[t - k];
            (0.5 * s, 0.5 * p, true)
        }
    };
    let gamma = |br: &Branch, lu: f64, lp: f64| -> f64 {
        let u = if br.input == 0 { lu } else { -lu };
        let p = if br.parity == 0 { lp } else { -lp };
        u + p
    };

    for t in 0..steps {
        let (lu, lp, is_tail) = metrics(t);
        let mut next = [NEG; STATES];
        for br in &BRANCHES {
            if is_tail && br.input != tail_input(br.from) {
                continue;
            }
            let v = alpha[t][br.from] + gamma(br, lu, lp);
            next[br.to] = J::max_star(next[br.to], v);
        }
        let norm = next[0].max(next[1]).max(next[2]).max(next[3]).max(next[4]).max(next[5]).max(next[6]).max(next[7]);
        for v in &mut next {
            *v -= norm;
        }
        alpha[t + 1] = next;
    }

    let mut beta = [NEG; STATES];
    beta[0] = 0.0;
    for t in (0..steps).rev() {
        let (lu, lp, is_tail) = metrics(t);
        let mut prev = [NEG; STATES];
        let (mut zero, mut one) = (NEG, NEG);
        for br in &BRANCHES {
            if is_tail && br.input != tail_input(br.from) {
                continue;
            }
            let g = gamma(br, lu, lp);
            prev[br.from] = J::max_star(prev[br.from], g + beta[br.to]);
            if t < k {
                let v = alpha[t][br.from] + g + beta[br.to];
                if br.input == 0 {
                    zero = J::max_star(zero, v);
                } else {
                    one = J::max_star(one, v);
                }
            }
        }
        if t < k {
            app[t] = zero - one;
        }
        let norm = prev.iter().copied().fold(NEG, f64::max);
        for v in &mut prev {
            *v -= norm;
        }
        beta = prev;
    }
}

// ---------------------------------------------------------------- codec

#[derive(Clone, Debug)]
pub struct TurboCodec {
    config: CodecConfig,
    perm: Vec<usize>,
}

/// Decoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub bits: Vec<u8>,
    /// A-posteriori LLRs of the information bits.
    pub llrs: Vec<f64>,
    pub iterations: usize,
}

/// Seeded uniformly random permutation of `0..len`.
pub fn interleaver(len: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

impl TurboCodec {
    pub fn new(config: CodecConfig) -> Result<Self> {
        if config.l_info == 0 {
            return Err(Error::config("l_info must be >= 1"));
        }
        if config.iterations == 0 {
            return Err(Error::config("iterations must be >= 1"));
        }
        if config.crc_bits != 16 {
            return Err(Error::config("only 16-bit CRC is supported"));
        }
        let perm = interleaver(config.l_info, config.interleaver_seed);
        Ok(Self { config, perm })
    }

    pub fn config(&self) -> &CodecConfig {
        &self.config
    }

    pub fn l_info(&self) -> usize {
        self.config.l_info
    }

    pub fn coded_len(&self) -> usize {
        3 * self.config.l_info + TAIL_BITS
    }

    pub fn interleaver(&self) -> &[usize] {
        &self.perm
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let k = self.config.l_info;
        if info.len() != k {
            return Err(Error::dims(k, info.len()));
        }
        let (p1, t1) = rsc_encode(info);
        let permuted: Vec<u8> = self.perm.iter().map(|&i| info[i]).collect();
        let (p2, t2) = rsc_encode(&permuted);
        let mut out = Vec::with_capacity(self.coded_len());
        out.extend(info.iter().map(|b| b & 1));
        out.extend(p1);
        out.extend(p2);
        for (u, p) in t1.into_iter().chain(t2) {
            out.push(u);
            out.push(p);
        }
        Ok(out)
    }

    pub fn decode(&self, llrs: &[f64]) -> Result<Decoded> {
        let stop = self.config.early_stop;
        self.decode_with(llrs, self.config.iterations, |bits| stop && crc_ok(bits))
    }

    /// Decodes with an explicit iteration count and stopping rule.
    pub fn decode_with(
        &self,
        llrs: &[f64],
        iterations: usize,
        stop: impl Fn(&[u8]) -> bool,
    ) -> Result<Decoded> {
        if llrs.len() != self.coded_len() {
            return Err(Error::dims(self.coded_len(), llrs.len()));
        }
        Ok(match self.config.max_star {
            MaxStar::Exact => self.run::<ExactLog>(llrs, iterations, &stop),
            MaxStar::Table => self.run::<TableLog>(llrs, iterations, &stop),
            MaxStar::MaxLog => self.run::<MaxLogApprox>(llrs, iterations, &stop),
        })
    }

    fn run<J: Jacobian>(&self, llrs: &[f64], iterations: usize, stop: &dyn Fn(&[u8]) -> bool) -> Decoded {
        let k = self.config.l_info;
        let clamp = |v: f64| v.clamp(-LLR_CLAMP * 4.0, LLR_CLAMP * 4.0);
        let sys: Vec<f64> = llrs[..k].iter().map(|&v| clamp(v)).collect();
        let p1: Vec<f64> = llrs[k..2 * k].iter().map(|&v| clamp(v)).collect();
        let p2: Vec<f64> = llrs[2 * k..3 * k].iter().map(|&v| clamp(v)).collect();
        let t = &llrs[3 * k..];
        let tail1 = [(clamp(t[0]), clamp(t[1])), (clamp(t[2]), clamp(t[3])), (clamp(t[4]), clamp(t[5]))];
        let tail2 = [(clamp(t[6]), clamp(t[7])), (clamp(t[8]), clamp(t[9])), (clamp(t[10]), clamp(t[11]))];
        let sys2: Vec<f64> = self.perm.iter().map(|&i| sys[i]).collect();

        let mut alpha = Vec::with_capacity(k + 4);
        let mut apriori1 = vec![0.0; k];
        let mut apriori2 = vec![0.0; k];
        let mut app1 = vec![0.0; k];
        let mut app2 = vec![0.0; k];
        let mut post = vec![0.0; k];
        let mut bits = vec![0u8; k];
        let mut done = 0;
        for it in 0..iterations {
            bcjr::<J>(&sys, &apriori1, &p1, &tail1, &mut alpha, &mut app1);
            for (j, &i) in self.perm.iter().enumerate() {
                apriori2[j] = (app1[i] - sys[i] - apriori1[i]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
            bcjr::<J>(&sys2, &apriori2, &p2, &tail2, &mut alpha, &mut app2);
            for (j, &i) in self.perm.iter().enumerate() {
                apriori1[i] = (app2[j] - sys2[j] - apriori2[j]).clamp(-LLR_CLAMP, LLR_CLAMP);
                post[i] = app2[j];
            }
            for (b, &l) in bits.iter_mut().zip(&post) {
                *b = u8::from(l < 0.0);
            }
            done = it + 1;
            if stop(&bits) {
                break;
            }
        }
        Decoded { bits, llrs: post, iterations: done }
    }
}

pub fn fec_encode(info: &[u8], codec: &TurboCodec) -> Result<Vec<u8>> {
    codec.encode(info)
}

pub fn fec_decode(llrs: &[f64], codec: &TurboCodec) -> Result<Decoded> {
    codec.decode(llrs)
}

// ---------------------------------------------------------------- IR puncturing

/// Coded-bit positions carried by each incremental-redundancy transmission.
///
/// Transmission 1 carries the systematic bits and all tails (rate ~1),
/// 2 adds parity 1 (cumulative rate 1/2), 3 adds parity 2 (1/3) and
/// 4 repeats the systematic bits. Receivers add the LLRs of repeated positions.
pub fn ir_puncturing(l_info: usize) -> Vec<Vec<usize>> {
    let k = l_info;
    let mut first: Vec<usize> = (0..k).collect();
    first.extend(3 * k..3 * k + TAIL_BITS);
    vec![first, (k..2 * k).collect(), (2 * k..3 * k).collect(), (0..k).collect()]
}

/// Human-readable form of [`ir_puncturing`] for result provenance.
pub const IR_PUNCTURING_DESCRIPTION: &str =
    "tx1=systematic+tails, tx2=parity1, tx3=parity2, tx4=systematic repeat";
