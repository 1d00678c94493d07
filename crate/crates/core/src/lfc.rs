//! Linear feedback combining.
//!
//! A linear feedback code over `N` retransmissions is the tuple `(g, F, q)`:
//! the source sends `x = g theta + F (z + n)` where `F` is strictly lower
//! triangular (only past noise is known at the source), and after `k` rounds
//! the destination forms `theta_hat[k] = sum_i w_i y_i` over the first `k`
//! observations of `y = D x + z`, `D = diag(h)`.
//!
//! The code is parameterized by the average power `rho`, the feedback noise
//! variance `sigma2` and the power split `gamma`. With `gamma = 0` it is plain
//! repetition (Chase combining with MRC); with `gamma = 1, sigma2 = 0` it is the
//! error-scaling scheme whose estimator bias `|phi[k]|^2` vanishes doubly
//! exponentially.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::linalg::{solve_hpd, CVector};
use crate::{Error, Result};

/// Unbiasing is refused once `|phi[k]|^2` is this close to one.
const DEGENERATE_PHI_SQ: f64 = 1.0 - 1e-12;

fn check_params(rho: f64, gamma: f64, sigma2: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::config(format!("rho must be > 0, got {rho}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("gamma must be in [0, 1], got {gamma}")));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::config(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    Ok(())
}

fn log_beta(gain_sq: f64, rho: f64, gamma: f64, sigma2: f64) -> f64 {
    -0.5 * ((1.0 + sigma2) * gamma * rho * gain_sq).ln_1p()
}

/// Per-round scale factor `(1 + (1 + sigma2) gamma rho |h|^2)^{-1/2}`.
pub fn beta(gain: Complex64, rho: f64, gamma: f64, sigma2: f64) -> Result<f64> {
    check_params(rho, gamma, sigma2)?;
    Ok(log_beta(gain.norm_sqr(), rho, gamma, sigma2).exp())
}

/// One round of the recursive encoder:
/// `x[k+1] = beta[k] (x[k] - sqrt(gamma) rho conj(h[k]) (z[k] + n[k]))`.
pub fn encode_step(
    x_k: Complex64,
    gain_k: Complex64,
    residual_k: Complex64,
    rho: f64,
    gamma: f64,
    sigma2: f64,
) -> Result<Complex64> {
    let b = beta(gain_k, rho, gamma, sigma2)?;
    Ok(b * (x_k - gamma.sqrt() * rho * gain_k.conj() * residual_k))
}

/// What the source recovers of `z[k] + n[k]` from the fed-back `r[k]`.
pub fn feedback_residual(r_k: Complex64, gain_k: Complex64, x_k: Complex64) -> Complex64 {
    r_k - gain_k * x_k
}

/// One linear feedback code instance for a fixed sequence of gains.
#[derive(Clone, Debug)]
pub struct FeedbackCode {
    rho: f64,
    gamma: f64,
    /// Feedback noise variance seen at the source after each round.
    sigma2: Vec<f64>,
    gains: Vec<Complex64>,
    /// `ln phi[k]` for `k = 0..=N`.
    log_phi: Vec<f64>,
    g: CVector,
    f: CMatrix,
}

impl FeedbackCode {
    pub fn build(gains: &[Complex64], rho: f64, gamma: f64, sigma2: f64) -> Result<Self> {
        Self::with_feedback_noise(gains, rho, gamma, &vec![sigma2; gains.len()])
    }

    /// Like [`FeedbackCode::build`] but with a feedback noise variance per round,
    /// e.g. when the fed-back samples are quantized with a per-block range.
    pub fn with_feedback_noise(
        gains: &[Complex64],
        rho: f64,
        gamma: f64,
        sigma2: &[f64],
    ) -> Result<Self> {
        let n = gains.len();
        if n == 0 {
            return Err(Error::config("a feedback code needs at least one gain"));
        }
        if sigma2.len() != n {
            return Err(Error::dims(n, sigma2.len()));
        }
        for &s in sigma2 {
            check_params(rho, gamma, s)?;
        }
        let mut log_phi = Vec::with_capacity(n + 1);
        log_phi.push(0.0);
        for (h, &s) in gains.iter().zip(sigma2) {
            let last = *log_phi.last().unwrap();
            log_phi.push(last + log_beta(h.norm_sqr(), rho, gamma, s));
        }
        let g = DVector::from_iterator(n, log_phi[..n].iter().map(|&l| Complex64::new(l.exp(), 0.0)));
        let mut f = CMatrix::zeros(n, n);
        let c = -gamma.sqrt() * rho;
        for i in 1..n {
            for j in 0..i {
                f[(i, j)] = gains[j].conj() * (c * (log_phi[i] - log_phi[j]).exp());
            }
        }
        Ok(Self {
            rho,
            gamma,
            sigma2: sigma2.to_vec(),
            gains: gains.to_vec(),
            log_phi,
            g,
            f,
        })
    }

    pub fn n(&self) -> usize {
        self.gains.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2(&self, k: usize) -> f64 {
        self.sigma2[k]
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn g(&self) -> &CVector {
        &self.g
    }

    pub fn f(&self) -> &CMatrix {
        &self.f
    }

    /// `ln |phi[k]|^2`, `k = 0..=N`.
    pub fn log_phi_sq(&self, k: usize) -> f64 {
        2.0 * self.log_phi[k]
    }

    /// `beta[k]` for 1-based round `k`.
    pub fn beta(&self, k: usize) -> f64 {
        (self.log_phi[k] - self.log_phi[k - 1]).exp()
    }

    /// True when the closed-form perfect-feedback combiner applies.
    pub fn is_perfect(&self) -> bool {
        self.gamma == 1.0 && self.sigma2.iter().all(|&s| s == 0.0)
    }

    /// Transmit value of round `k + 1` (0-based `k`) from round `k`.
    pub fn encode_step(&self, k: usize, x_k: Complex64, residual_k: Complex64) -> Complex64 {
        let b = self.beta(k + 1);
        b * (x_k - self.gamma.sqrt() * self.rho * self.gains[k].conj() * residual_k)
    }

    /// Matrix form `x = g theta + F w` for the full block.
    pub fn transmit(&self, theta: Complex64, residuals: &[Complex64]) -> Result<Vec<Complex64>> {
        if residuals.len() != self.n() {
            return Err(Error::dims(self.n(), residuals.len()));
        }
        let w = DVector::from_column_slice(residuals);
        let x = &self.g * theta + &self.f * w;
        Ok(x.iter().copied().collect())
    }

    /// Effective noise covariance of the first `k` observations,
    /// `(DF + I)(DF + I)^* + D F S F^* D^*` with `S = diag(sigma2)`.
    pub fn covariance(&self, k: usize) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_column_slice(&self.gains[..k]));
        let df = &d * self.f.view((0, 0), (k, k));
        let a = &df + CMatrix::identity(k, k);
        let s = CMatrix::from_diagonal(&DVector::from_iterator(
            k,
            self.sigma2[..k].iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &a * a.adjoint() + &df * s * df.adjoint()
    }

    /// `D g` truncated to `k` entries.
    fn signal_direction(&self, k: usize) -> CVector {
        DVector::from_iterator(k, (0..k).map(|i| self.gains[i] * self.g[i]))
    }

    /// Unbiased optimal combiner over the first `k` rounds,
    /// `q = C^{-1} D g / (g^* D^* C^{-1} D g)` applied as `q^* y`.
    pub fn noisy_combiner(&self, k: usize) -> Result<Combiner> {
        self.check_round(k)?;
        let v = self.signal_direction(k);
        let u = solve_hpd(&self.covariance(k), &v)?;
        let s = v.dotc(&u).re;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegenerateChannel(format!(
                "no signal energy after {k} rounds"
            )));
        }
        Ok(Combiner {
            weights: u.iter().map(|q| q.conj() / s).collect(),
            gain: 1.0,
            err_var: 1.0 / s,
            snr: self.rho * s,
            log_phi_sq: self.log_phi_sq(k),
        })
    }

    /// Closed-form perfect-feedback combiner `w_i = phi[i-1] beta[i]^2 rho conj(h[i])`.
    /// Its estimate is biased: `E[theta_hat | theta] = (1 - |phi[k]|^2) theta`.
    pub fn perfect_combiner(&self, k: usize) -> Result<Combiner> {
        if !self.is_perfect() {
            return Err(Error::Misuse(
                "perfect combiner requires sigma2 = 0 and gamma = 1; use the noisy combiner".into(),
            ));
        }
        self.check_round(k)?;
        let weights = (0..k)
            .map(|i| {
                let scale = (self.log_phi[i] + 2.0 * (self.log_phi[i + 1] - self.log_phi[i])).exp();
                self.gains[i].conj() * (scale * self.rho)
            })
            .collect();
        let log_phi_sq = self.log_phi_sq(k);
        let one_minus = -log_phi_sq.exp_m1();
        // rho |phi|^2 / (1 - |phi|^2), written to survive |phi|^2 -> 0
        let err_var = self.rho / (-log_phi_sq).exp_m1();
        Ok(Combiner {
            weights,
            gain: one_minus,
            err_var,
            snr: (-log_phi_sq).exp_m1(),
            log_phi_sq,
        })
    }

    /// The combiner the destination uses: closed form for perfect feedback,
    /// the covariance-based one otherwise.
    pub fn combiner(&self, k: usize) -> Result<Combiner> {
        if self.is_perfect() {
            self.perfect_combiner(k)
        } else {
            self.noisy_combiner(k)
        }
    }

    /// Post-processed SNR after `k` rounds, `rho g^* D^* C^{-1} D g`.
    pub fn post_snr_at(&self, k: usize) -> Result<f64> {
        self.check_round(k)?;
        let v = self.signal_direction(k);
        let u = solve_hpd(&self.covariance(k), &v)?;
        Ok(self.rho * v.dotc(&u).re)
    }

    pub fn post_snr(&self) -> Result<f64> {
        self.post_snr_at(self.n())
    }

    fn check_round(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n() {
            return Err(Error::config(format!(
                "round {k} outside 1..={}",
                self.n()
            )));
        }
        Ok(())
    }
}

/// A combining rule for one round, shared by every symbol of a block.
#[derive(Clone, Debug, PartialEq)]
pub struct Combiner {
    /// Applied directly: `theta_hat = sum_i weights[i] * y[i]`.
    pub weights: Vec<Complex64>,
    /// `E[theta_hat | theta] / theta`.
    pub gain: f64,
    /// Variance of the unbiased estimate's error.
    pub err_var: f64,
    pub snr: f64,
    pub log_phi_sq: f64,
}

impl Combiner {
    pub fn rounds(&self) -> usize {
        self.weights.len()
    }

    pub fn estimate(&self, ys: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(ys).map(|(w, y)| w * y).sum()
    }

    pub fn estimate_unbiased(&self, ys: &[Complex64]) -> Complex64 {
        self.estimate(ys) / self.gain
    }
}

/// Destination-side estimator state after `k` rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    pub k: usize,
    pub theta_hat: Complex64,
    /// `ln |phi[k]|^2`.
    pub log_phi_sq: f64,
    pub err_var: f64,
    /// `E[theta_hat | theta] / theta`.
    pub gain: f64,
    perfect: bool,
}

impl EstimatorState {
    pub fn phi_sq(&self) -> f64 {
        self.log_phi_sq.exp()
    }
}

fn state_from(combiner: &Combiner, ys: &[Complex64], perfect: bool) -> EstimatorState {
    EstimatorState {
        k: combiner.rounds(),
        theta_hat: combiner.estimate(ys),
        log_phi_sq: combiner.log_phi_sq,
        err_var: combiner.err_var,
        gain: combiner.gain,
        perfect,
    }
}

/// Perfect-feedback decoding of the first `ys.len()` observations.
pub fn combine_perfect(ys: &[Complex64], code: &FeedbackCode) -> Result<EstimatorState> {
    let c = code.perfect_combiner(ys.len())?;
    Ok(state_from(&c, ys, true))
}

/// Noisy-feedback decoding via the truncated covariance system.
pub fn combine_noisy(ys: &[Complex64], code: &FeedbackCode) -> Result<EstimatorState> {
    let c = code.noisy_combiner(ys.len())?;
    Ok(state_from(&c, ys, false))
}

/// `theta_hat^u[k]` and its error variance.
pub fn unbiased_estimate(state: &EstimatorState) -> Result<(Complex64, f64)> {
    if state.perfect && state.phi_sq() > DEGENERATE_PHI_SQ {
        return Err(Error::DegenerateChannel(
            "|phi[k]|^2 ~ 1: no observed gain carried signal".into(),
        ));
    }
    if !(state.gain > 0.0) {
        return Err(Error::DegenerateChannel("estimator carries no signal".into()));
    }
    Ok((state.theta_hat / state.gain, state.err_var))
}

/// Post-processed SNR of the full code.
pub fn post_snr(code: &FeedbackCode) -> Result<f64> {
    code.post_snr()
}

/// Closed-form post-processed SNR for `N = 2`.
pub fn snr_n2_closed(h1: Complex64, h2: Complex64, rho: f64, gamma: f64, sigma2: f64) -> f64 {
    let a1 = h1.norm_sqr();
    let a2 = h2.norm_sqr();
    let b2 = 1.0 / (1.0 + (1.0 + sigma2) * gamma * rho * a1);
    let boost = (1.0 + gamma.sqrt() * rho * a1).powi(2);
    rho * (a1 + b2 * a2 * boost / (1.0 + sigma2 * gamma * rho * rho * b2 * a1 * a2))
}

/// Post-processed SNR of an `n`-round code on the unit-gain (AWGN) channel.
pub fn awgn_post_snr(rho: f64, sigma2: f64, gamma: f64, n: usize) -> Result<f64> {
    FeedbackCode::build(&vec![Complex64::new(1.0, 0.0); n], rho, gamma, sigma2)?.post_snr()
}

/// Power split `gamma_0` maximizing the AWGN post-processed SNR over `n` rounds.
///
/// Perfect feedback returns 1. Otherwise a 64-point grid over `[0, gamma_max]`
/// is refined by golden-section search to `1e-4`, where `gamma_max` is the
/// largest split that can still beat MRC, `min(1, sqrt(2 / (1 + sigma2)))`.
pub fn optimize_gamma(rho: f64, sigma2: f64, n: usize) -> Result<f64> {
    check_params(rho, 0.0, sigma2)?;
    if n == 0 {
        return Err(Error::config("n must be >= 1"));
    }
    if sigma2 == 0.0 {
        return Ok(1.0);
    }
    let upper = (2.0 / (1.0 + sigma2)).sqrt().min(1.0);
    let objective = |gamma: f64| awgn_post_snr(rho, sigma2, gamma, n);
    let grid = 64;
    let step = upper / (grid - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..grid {
        let v = objective(i as f64 * step)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let mut lo = (best.0 as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best.0 + 1) as f64 * step).min(upper);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (objective(a)?, objective(b)?);
    while hi - lo > 1e-4 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = objective(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = objective(a)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    // the refined point may not beat the grid winner on a flat objective
    if objective(mid)? >= best.1 {
        Ok(mid)
    } else {
        Ok(best.0 as f64 * step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_gains(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| complex_gaussian(rng, 1.0)).collect()
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(c(5.0, 1.0), 3.0, 0.0, 0.2).unwrap(), 1.0);
        let b = beta(c(3f64.sqrt() / 3f64.sqrt(), 0.0), 3.0, 1.0, 0.0).unwrap();
        assert!((b - 0.5).abs() < 1e-15);
        // (1 + 1.25 * 0.01 * 3)^(-1/2) = 1.0375^(-1/2)
        let b = beta(c(1.0, 0.0), 3.0, 0.01, 0.25).unwrap();
        assert!((b - 0.981_761_387_347_631_9).abs() < 1e-15, "{b}");
        assert!(beta(c(1.0, 0.0), 0.0, 0.5, 0.0).is_err());
        assert!(beta(c(1.0, 0.0), 1.0, 1.5, 0.0).is_err());
        assert!(beta(c(1.0, 0.0), 1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn code_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = FeedbackCode::build(&random_gains(&mut rng, 1), 2.0, 1.0, 0.0).unwrap();
        assert_eq!(one.g()[0], c(1.0, 0.0));
        assert_eq!(one.f()[(0, 0)], c(0.0, 0.0));

        let rep = FeedbackCode::build(&random_gains(&mut rng, 3), 2.0, 0.0, 0.3).unwrap();
        assert!(rep.g().iter().all(|&v| v == c(1.0, 0.0)));
        assert!(rep.f().iter().all(|&v| v == c(0.0, 0.0)));

        let code = FeedbackCode::build(&random_gains(&mut rng, 5), 2.0, 0.4, 0.3).unwrap();
        for i in 0..5 {
            for j in i..5 {
                assert_eq!(code.f()[(i, j)], c(0.0, 0.0));
            }
        }
        for k in 1..=5 {
            assert!(code.log_phi_sq(k) < code.log_phi_sq(k - 1));
        }
    }

    #[test]
    fn encode_step_examples() {
        let x = c(0.7, -0.2);
        assert_eq!(encode_step(x, c(1.0, 1.0), c(0.3, 0.1), 3.0, 0.0, 0.0).unwrap(), x);
        let next = encode_step(x, c(1.0, 0.0), c(0.0, 0.0), 3.0, 1.0, 0.0).unwrap();
        assert!((next - 0.5 * x).norm() < 1e-15);
    }

    #[test]
    fn matrix_form_matches_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=8 {
            let gains = random_gains(&mut rng, n);
            let code = FeedbackCode::build(&gains, 2.5, 0.7, 0.3).unwrap();
            let theta = complex_gaussian(&mut rng, 2.5);
            let w: Vec<_> = (0..n).map(|_| complex_gaussian(&mut rng, 1.3)).collect();
            let matrix = code.transmit(theta, &w).unwrap();
            let mut x = theta;
            for k in 0..n {
                assert!((matrix[k] - x).norm() < 1e-12);
                x = encode_step(x, gains[k], w[k], 2.5, 0.7, 0.3).unwrap();
                assert!((code.encode_step(k, matrix[k], w[k]) - x).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn feedback_residual_recovers_noise() {
        let (h, x, z, n) = (c(0.3, -1.1), c(1.2, 0.4), c(-0.2, 0.9), c(0.05, -0.01));
        let y = h * x + z;
        assert!((feedback_residual(y, h, x) - z).norm() < 1e-15);
        assert!((feedback_residual(y + n, h, x) - (z + n)).norm() < 1e-15);
    }

    #[test]
    fn perfect_first_round_is_scalar_mmse() {
        let h = c(0.8, -0.6);
        let y = c(1.5, 0.25);
        let code = FeedbackCode::build(&[h, c(1.0, 0.0)], 3.0, 1.0, 0.0).unwrap();
        let st = combine_perfect(&[y], &code).unwrap();
        let expect = 3.0 * h.conj() * y / (1.0 + 3.0 * h.norm_sqr());
        assert!((st.theta_hat - expect).norm() < 1e-14);
    }

    #[test]
    fn perfect_combiner_rejects_noisy_code() {
        let code = FeedbackCode::build(&[c(1.0, 0.0)], 3.0, 1.0, 0.1).unwrap();
        assert!(matches!(combine_perfect(&[c(1.0, 0.0)], &code), Err(Error::Misuse(_))));
    }

    #[test]
    fn all_zero_gains_are_degenerate() {
        let zeros = [c(0.0, 0.0); 3];
        let code = FeedbackCode::build(&zeros, 3.0, 1.0, 0.0).unwrap();
        let st = combine_perfect(&[c(0.1, 0.0); 3], &code).unwrap();
        assert!(matches!(unbiased_estimate(&st), Err(Error::DegenerateChannel(_))));
        assert!(matches!(
            combine_noisy(&[c(0.1, 0.0); 3], &code),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn gamma_zero_is_mrc() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let gains = random_gains(&mut rng, 4);
        let code = FeedbackCode::build(&gains, 3.0, 0.0, 0.25).unwrap();
        let total: f64 = gains.iter().map(|h| h.norm_sqr()).sum();
        let comb = code.noisy_combiner(4).unwrap();
        for (w, h) in comb.weights.iter().zip(&gains) {
            assert!((w - h.conj() / total).norm() < 1e-12);
        }
        assert!((code.post_snr().unwrap() - 3.0 * total).abs() < 1e-9 * 3.0 * total);
    }

    #[test]
    fn perfect_snr_is_inverse_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gains = random_gains(&mut rng, 4);
        let code = FeedbackCode::build(&gains, 2.0, 1.0, 0.0).unwrap();
        let product: f64 = gains.iter().map(|h| 1.0 + 2.0 * h.norm_sqr()).product();
        let snr = code.post_snr().unwrap();
        assert!((snr - (product - 1.0)).abs() < 1e-9 * product);
        let comb = code.perfect_combiner(4).unwrap();
        assert!((comb.snr - snr).abs() < 1e-9 * product);
    }

    #[test]
    fn post_snr_nondecreasing_over_truncations() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let code = FeedbackCode::build(&random_gains(&mut rng, 6), 3.0, 0.3, 0.5).unwrap();
            let snrs: Vec<f64> = (1..=6).map(|k| code.post_snr_at(k).unwrap()).collect();
            assert!(snrs.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)), "{snrs:?}");
        }
    }

    #[test]
    fn n2_closed_form_reduces_to_mrc() {
        let (h1, h2) = (c(0.3, 0.4), c(-1.0, 0.2));
        let v = snr_n2_closed(h1, h2, 2.0, 0.0, 0.7);
        assert!((v - 2.0 * (h1.norm_sqr() + h2.norm_sqr())).abs() < 1e-14);
    }

    #[test]
    fn optimize_gamma_limits() {
        assert_eq!(optimize_gamma(3.0, 0.0, 4).unwrap(), 1.0);
        let g = optimize_gamma(3.0, 1e6, 4).unwrap();
        assert!(g < 1e-3, "{g}");
        for &s in &[0.1, 0.25, 1.0, 3.0] {
            let g = optimize_gamma(3.0, s, 4).unwrap();
            assert!(g < (2.0 / (1.0 + s)).sqrt());
            assert!(awgn_post_snr(3.0, s, g, 4).unwrap() >= awgn_post_snr(3.0, s, 0.0, 4).unwrap());
        }
    }

    #[test]
    fn optimize_gamma_matches_fine_grid() {
        let g = optimize_gamma(3.0, 0.25, 4).unwrap();
        let fine = (0..=20_000)
            .map(|i| i as f64 / 20_000.0)
            .map(|gm| (gm, awgn_post_snr(3.0, 0.25, gm, 4).unwrap()))
            .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        assert!((g - fine.0).abs() < 2e-4, "{g} vs {}", fine.0);
    }
}
