//! Reduction of multi-antenna channels to scalar subchannels.
//!
//! MISO links use a beamforming vector chosen from a codebook shared with the
//! source; MIMO links are split into parallel subchannels by an SVD with
//! waterfilling power fractions. The outdated-CSI MIMO recursion is the vector
//! analogue of the scalar feedback encoder.

use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::CMatrix;
use crate::linalg::{compact_svd, inv_sqrt_hpd, CVector};
use crate::rng::complex_gaussian;
use crate::{Error, Result};

const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum CodebookKind {
    Rvq { seed: u64 },
    Grassmannian { source: String },
}

impl fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodebookKind::Rvq { seed } => write!(f, "rvq(seed={seed})"),
            CodebookKind::Grassmannian { source } => write!(f, "grassmannian({source})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BeamformingCodebook {
    pub mt: usize,
    pub b: u32,
    pub vectors: Vec<CVector>,
    pub kind: CodebookKind,
    /// Minimum chordal distance stated by the codebook file, if any.
    pub declared_min_dist: Option<f64>,
}

impl BeamformingCodebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Smallest `sqrt(1 - |f_i^* f_j|^2)` over distinct pairs.
    pub fn min_chordal_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.vectors.len() {
            for j in (i + 1)..self.vectors.len() {
                let c = self.vectors[i].dotc(&self.vectors[j]).norm_sqr();
                best = best.min((1.0 - c).max(0.0).sqrt());
            }
        }
        best
    }
}

/// `2^b` isotropic unit vectors drawn from a seed both ends know.
pub fn build_rvq_codebook(mt: usize, b: u32, seed: u64) -> Result<BeamformingCodebook> {
    if b == 0 || b > 20 {
        return Err(Error::config(format!("codebook bits must be in 1..=20, got {b}")));
    }
    if mt == 0 {
        return Err(Error::config("mt must be >= 1"));
    }
    let mut rng = crate::rng::stream(seed, crate::rng::Stream::Codebook);
    let vectors = (0..1usize << b)
        .map(|_| {
            let v = DVector::from_fn(mt, |_, _| complex_gaussian(&mut rng, 1.0));
            let n = v.norm();
            v / Complex64::new(n, 0.0)
        })
        .collect();
    Ok(BeamformingCodebook { mt, b, vectors, kind: CodebookKind::Rvq { seed }, declared_min_dist: None })
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), line, msg: msg.into() }
}

/// Parses the codebook text format: a `Mt B` header, then `2^B` rows of
/// `2 Mt` reals (interleaved re/im), optionally `# min_dist <value>`.
pub fn parse_codebook(text: &str, source: &str) -> Result<BeamformingCodebook> {
    let mut header: Option<(usize, u32)> = None;
    let mut vectors = Vec::new();
    let mut declared = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("min_dist") {
                let v = parts
                    .next()
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| parse_err(source, line_no, "min_dist needs a number"))?;
                declared = Some(v);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match header {
            None => {
                if fields.len() != 2 {
                    return Err(parse_err(source, line_no, "header must be `Mt B`"));
                }
                let mt = fields[0]
                    .parse::<usize>()
                    .map_err(|_| parse_err(source, line_no, "Mt must be a positive integer"))?;
                let b = fields[1]
                    .parse::<u32>()
                    .map_err(|_| parse_err(source, line_no, "B must be a positive integer"))?;
                if mt == 0 || b == 0 || b > 20 {
                    return Err(parse_err(source, line_no, "Mt must be >= 1 and B in 1..=20"));
                }
                header = Some((mt, b));
            }
            Some((mt, _)) => {
                if fields.len() != 2 * mt {
                    return Err(parse_err(
                        source,
                        line_no,
                        format!("expected {} reals, found {}", 2 * mt, fields.len()),
                    ));
                }
                let mut vals = Vec::with_capacity(2 * mt);
                for f in &fields {
                    vals.push(
                        f.parse::<f64>()
                            .map_err(|_| parse_err(source, line_no, format!("'{f}' is not a number")))?,
                    );
                }
                let v = DVector::from_fn(mt, |i, _| Complex64::new(vals[2 * i], vals[2 * i + 1]));
                let n = v.norm();
                if (n - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(parse_err(source, line_no, format!("vector norm {n} is not 1")));
                }
                vectors.push(v);
            }
        }
    }
    let (mt, b) = header.ok_or_else(|| parse_err(source, 1, "missing `Mt B` header"))?;
    if vectors.len() != 1usize << b {
        return Err(parse_err(
            source,
            text.lines().count(),
            format!("expected {} vectors, found {}", 1usize << b, vectors.len()),
        ));
    }
    Ok(BeamformingCodebook {
        mt,
        b,
        vectors,
        kind: CodebookKind::Grassmannian { source: source.to_string() },
        declared_min_dist: declared,
    })
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<BeamformingCodebook> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_codebook(&text, &path.display().to_string())
}

/// `|h^T w|`.
pub fn beam_gain(h: &CVector, w: &CVector) -> f64 {
    h.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<Complex64>().norm()
}

/// Index and vector maximizing `|h^T f_j|^2`; the lowest index wins ties.
pub fn select_beamformer(h: &CVector, codebook: &BeamformingCodebook) -> Result<(usize, CVector)> {
    if h.len() != codebook.mt {
        return Err(Error::dims(codebook.mt, h.len()));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (j, f) in codebook.vectors.iter().enumerate() {
        let g = beam_gain(h, f);
        if g > best.1 {
            best = (j, g);
        }
    }
    Ok((best.0, codebook.vectors[best.0].clone()))
}

/// Beamformer for perfect CSI at the source, `conj(h) / |h|`.
pub fn perfect_beamformer(h: &CVector) -> CVector {
    let n = h.norm();
    if n == 0.0 {
        return unit_vector(h.len());
    }
    h.map(|v| v.conj() / n)
}

/// All power on the first antenna.
pub fn unit_vector(mt: usize) -> CVector {
    DVector::from_fn(mt, |i, _| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
}

/// Effective scalar channel `|h^T w|` and the derotated observation
/// `e^{-j arg(h^T w)} y`.
pub fn miso_effective(h: &CVector, w: &CVector, y: Complex64) -> (f64, Complex64) {
    let hw: Complex64 = h.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
    let lambda = hw.norm();
    if lambda == 0.0 {
        return (0.0, y);
    }
    (lambda, y * (hw.conj() / lambda))
}

/// Waterfilling fractions maximizing `sum log(1 + rho xi_i lambda_i^2)` with
/// `sum xi_i = 1`: `xi_i = max(0, mu - 1 / (rho lambda_i^2))`.
/// `lambda` must be sorted descending.
pub fn waterfill(lambda: &[f64], rho: f64) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::config(format!("rho must be > 0, got {rho}")));
    }
    let usable = lambda.iter().take_while(|&&l| l > 0.0).count();
    if usable == 0 {
        return Err(Error::DegenerateChannel("all singular values are zero".into()));
    }
    let inv: Vec<f64> = lambda[..usable].iter().map(|&l| 1.0 / (rho * l * l)).collect();
    let mut active = usable;
    let mut level;
    loop {
        level = (1.0 + inv[..active].iter().sum::<f64>()) / active as f64;
        if level > inv[active - 1] || active == 1 {
            break;
        }
        active -= 1;
    }
    let mut xi = vec![0.0; lambda.len()];
    for i in 0..active {
        xi[i] = level - inv[i];
    }
    // put the rounding residue on the strongest subchannel so the sum is exact
    let residue = 1.0 - xi.iter().sum::<f64>();
    xi[0] += residue;
    Ok(xi)
}

#[derive(Clone, Debug)]
pub struct SpatialDecomposition {
    pub u: CMatrix,
    pub lambda: Vec<f64>,
    pub v: CMatrix,
    pub xi: Vec<f64>,
    /// `lambda_i sqrt(xi_i)`.
    pub effective_gains: Vec<f64>,
}

impl SpatialDecomposition {
    /// Number of subchannels with nonzero power.
    pub fn active(&self) -> usize {
        self.xi.iter().filter(|&&x| x > 0.0).count()
    }
}

pub fn svd_waterfill(h: &CMatrix, rho: f64) -> Result<SpatialDecomposition> {
    if h.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::DegenerateChannel("channel matrix is zero".into()));
    }
    let svd = compact_svd(h)?;
    let xi = waterfill(&svd.singular_values, rho)?;
    let effective_gains = svd.singular_values.iter().zip(&xi).map(|(l, x)| l * x.sqrt()).collect();
    Ok(SpatialDecomposition { u: svd.u, lambda: svd.singular_values, v: svd.v, xi, effective_gains })
}

/// State of the outdated-CSI MIMO feedback scheme with perfect output feedback.
///
/// The source sends `x[1] = theta` and then
/// `x[k+1] = A_k (x[k] - c rho H_k^* z[k])`, `A_k = (I + c rho H_k^* H_k)^{-1/2}`,
/// needing `H_k` only after block `k`. The destination accumulates
/// `theta_hat += Phi[k-1] x_hat[k]` with the per-block MMSE estimate
/// `x_hat[k] = c rho (I + c rho H_k^* H_k)^{-1} H_k^* y[k]` and
/// `Phi[k] = A_1 ... A_k`, so that `theta - theta_hat[k] = Phi[k] x[k+1]`.
/// `c` is 1 by default; [`OutdatedMimo::with_power_scale`] sets it to e.g. `Mt`.
#[derive(Clone, Debug)]
pub struct OutdatedMimo {
    rho: f64,
    scale: f64,
    mt: usize,
    phi: CMatrix,
    theta_hat: CVector,
    k: usize,
}

impl OutdatedMimo {
    pub fn new(mt: usize, rho: f64) -> Result<Self> {
        Self::with_power_scale(mt, rho, 1.0)
    }

    pub fn with_power_scale(mt: usize, rho: f64, scale: f64) -> Result<Self> {
        if mt == 0 || !(rho > 0.0) || !(scale > 0.0) {
            return Err(Error::config("outdated MIMO needs mt >= 1, rho > 0, scale > 0"));
        }
        Ok(Self {
            rho,
            scale,
            mt,
            phi: CMatrix::identity(mt, mt),
            theta_hat: CVector::zeros(mt),
            k: 0,
        })
    }

    pub fn rounds(&self) -> usize {
        self.k
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    /// Biased estimate `theta_hat[k]`.
    pub fn theta_hat(&self) -> &CVector {
        &self.theta_hat
    }

    /// `(I - Phi Phi^*)^{-1} theta_hat[k]`.
    pub fn unbiased(&self) -> Result<CVector> {
        let m = CMatrix::identity(self.mt, self.mt) - &self.phi * self.phi.adjoint();
        m.lu()
            .solve(&self.theta_hat)
            .ok_or_else(|| Error::DegenerateChannel("I - Phi Phi^* is singular".into()))
    }

    /// Runs block `k` with transmit vector `x_k`: forms `y = H x + z`, updates
    /// the destination estimate and returns `x[k+1]`.
    pub fn step(&mut self, x_k: &CVector, h: &CMatrix, z: &CVector) -> Result<CVector> {
        if h.ncols() != self.mt || x_k.len() != self.mt {
            return Err(Error::dims(self.mt, x_k.len()));
        }
        if z.len() != h.nrows() {
            return Err(Error::dims(h.nrows(), z.len()));
        }
        let c = Complex64::new(self.scale * self.rho, 0.0);
        let gram = CMatrix::identity(self.mt, self.mt) + h.adjoint() * h * c;
        let a = inv_sqrt_hpd(&gram)?;
        let y = h * x_k + z;
        let x_hat = &a * &a * h.adjoint() * y * c;
        self.theta_hat += &self.phi * x_hat;
        self.phi = &self.phi * &a;
        self.k += 1;
        Ok(&a * (x_k - h.adjoint() * z * c))
    }
}

/// Direct evaluation of the biased estimate after `k = hs.len()` blocks,
/// `(I - Phi Phi^*) theta + c rho Phi Phi^* sum_m Phi[m-1]^{-*} H_m^* z_m`.
pub fn outdated_mimo_direct(
    theta: &CVector,
    hs: &[CMatrix],
    zs: &[CVector],
    rho: f64,
    scale: f64,
) -> Result<CVector> {
    let mt = theta.len();
    let c = Complex64::new(scale * rho, 0.0);
    let mut phi = CMatrix::identity(mt, mt);
    let mut sum = CVector::zeros(mt);
    for (h, z) in hs.iter().zip(zs) {
        let inv = phi
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("Phi is singular".into()))?;
        sum += inv.adjoint() * h.adjoint() * z;
        let gram = CMatrix::identity(mt, mt) + h.adjoint() * h * c;
        phi = &phi * inv_sqrt_hpd(&gram)?;
    }
    let pp = &phi * phi.adjoint();
    Ok((CMatrix::identity(mt, mt) - &pp) * theta + pp * sum * c)
}

/// Deterministic codebook RNG check used by tests and the CLI.
pub fn rvq_quantization_gain(codebook: &BeamformingCodebook, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..trials {
        let h = DVector::from_fn(codebook.mt, |_, _| complex_gaussian(&mut rng, 1.0));
        let (_, w) = select_beamformer(&h, codebook).expect("dimension checked");
        num += beam_gain(&h, &w).powi(2);
        den += h.norm_squared();
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_gain;

    fn column(h: &CMatrix) -> CVector {
        h.column(0).into_owned()
    }

    fn bundled(name: &str) -> String {
        format!("{}/codebooks/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn rvq_vectors_are_unit_and_seeded() {
        let cb = build_rvq_codebook(2, 1, 7).unwrap();
        assert_eq!(cb.len(), 2);
        for v in &cb.vectors {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let again = build_rvq_codebook(2, 1, 7).unwrap();
        assert_eq!(cb.vectors, again.vectors);
        assert!(build_rvq_codebook(2, 0, 7).is_err());
    }

    #[test]
    fn rvq_gain_matches_independent_estimate() {
        // B = 8, Mt = 2: with 256 isotropic candidates the best |h^T f|^2 / |h|^2 is
        // the max of 256 Beta(1, 1) draws, mean 256 / 257
        let cb = build_rvq_codebook(2, 8, 3).unwrap();
        let g = rvq_quantization_gain(&cb, 10_000, 4);
        let oracle = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..10_000 {
                let h = sample_gain(2, 1, &mut rng);
                let hn = h.norm_squared();
                let mut best: f64 = 0.0;
                for f in &cb.vectors {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..2 {
                        acc += h[(i, 0)] * f[i];
                    }
                    best = best.max(acc.norm_sqr());
                }
                num += best;
                den += hn;
            }
            num / den
        };
        assert!((g / oracle - 1.0).abs() < 0.03, "{g} vs {oracle}");
        assert!((g - 256.0 / 257.0).abs() < 0.03);
    }

    #[test]
    fn large_rvq_approaches_perfect_csi() {
        let cb = build_rvq_codebook(2, 12, 11).unwrap();
        assert!(rvq_quantization_gain(&cb, 2_000, 12) >= 0.99);
    }

    #[test]
    fn canonical_codebook_loads() {
        let text = "2 2\n1 0 0 0\n0 0 1 0\n0.7071067811865476 0 0.7071067811865476 0\n0.7071067811865476 0 -0.7071067811865476 0\n";
        let cb = parse_codebook(text, "inline").unwrap();
        assert_eq!((cb.mt, cb.b, cb.len()), (2, 2, 4));
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "2 1\n1 0 0 0\n1 0 x 0\n";
        match parse_codebook(text, "bad.txt") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "2 1\n1 0 0 0\n2 0 0 0\n";
        assert!(matches!(parse_codebook(text, "x"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_codebook("2 1\n1 0 0 0\n", "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn bundled_codebooks_match_declared_distance() {
        for (file, b) in [("grassmannian_mt2_b2.txt", 2), ("grassmannian_mt2_b3.txt", 3)] {
            let cb = load_codebook(bundled(file)).unwrap();
            assert_eq!(cb.b, b);
            let declared = cb.declared_min_dist.unwrap();
            assert!((cb.min_chordal_distance() - declared).abs() < 1e-6);
            for v in &cb.vectors {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn selection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = column(&sample_gain(2, 1, &mut rng));
        let mut cb = build_rvq_codebook(2, 3, 1).unwrap();
        cb.vectors[5] = perfect_beamformer(&h);
        assert_eq!(select_beamformer(&h, &cb).unwrap().0, 5);

        let e = |i: usize| unit_vector_at(2, i);
        let cb = BeamformingCodebook {
            mt: 2,
            b: 1,
            vectors: vec![e(0), e(1)],
            kind: CodebookKind::Rvq { seed: 0 },
            declared_min_dist: None,
        };
        let h = DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.4)]);
        assert_eq!(select_beamformer(&h, &cb).unwrap().0, 1);
        let tie = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        assert_eq!(select_beamformer(&tie, &cb).unwrap().0, 0);
    }

    fn unit_vector_at(mt: usize, i: usize) -> CVector {
        DVector::from_fn(mt, |j, _| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    }

    #[test]
    fn selection_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cb = build_rvq_codebook(2, 3, 2).unwrap();
        for _ in 0..200 {
            let h = column(&sample_gain(2, 1, &mut rng));
            let mut oracle = 0;
            let mut best = -1.0;
            for j in 0..cb.len() {
                let v = (h[0] * cb.vectors[j][0] + h[1] * cb.vectors[j][1]).norm_sqr();
                if v > best {
                    best = v;
                    oracle = j;
                }
            }
            assert_eq!(select_beamformer(&h, &cb).unwrap().0, oracle);
        }
    }

    #[test]
    fn miso_effective_examples() {
        let h = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let w = unit_vector(2);
        let y = Complex64::new(0.3, -0.7);
        assert_eq!(miso_effective(&h, &w, y), (1.0, y));
        let w = unit_vector_at(2, 1);
        assert_eq!(miso_effective(&h, &w, y).0, 0.0);
    }

    #[test]
    fn miso_noise_is_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let h = column(&sample_gain(2, 1, &mut rng));
            let w = perfect_beamformer(&h);
            let x = complex_gaussian(&mut rng, 1.0);
            let hw: Complex64 = h.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let y = hw * x + complex_gaussian(&mut rng, 1.0);
            let (l, yt) = miso_effective(&h, &w, y);
            acc += (yt - l * x).norm_sqr();
        }
        assert!((acc / n as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn waterfill_examples() {
        assert_eq!(waterfill(&[1.3], 2.0).unwrap(), vec![1.0]);
        let xi = waterfill(&[0.8, 0.8], 5.0).unwrap();
        assert!((xi[0] - 0.5).abs() < 1e-15 && (xi[1] - 0.5).abs() < 1e-15);
        let xi = waterfill(&[2.0, 0.1], 1.0).unwrap();
        assert_eq!(xi, vec![1.0, 0.0]);
        assert!(waterfill(&[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn waterfill_threshold_matches_grid_search() {
        let (l1, l2) = (2.0f64, 0.1f64);
        // second channel turns on once 1/(rho l2^2) - 1/(rho l1^2) < 1
        let threshold = 1.0 / (l2 * l2) - 1.0 / (l1 * l1);
        for rho in [threshold * 0.9, threshold * 1.5, threshold * 4.0] {
            let xi = waterfill(&[l1, l2], rho).unwrap();
            let mut best = (0.0, f64::NEG_INFINITY);
            let n = 1_000_000;
            for i in 0..=n {
                let x = i as f64 / n as f64;
                let v = (1.0 + rho * x * l1 * l1).ln() + (1.0 + rho * (1.0 - x) * l2 * l2).ln();
                if v > best.1 {
                    best = (x, v);
                }
            }
            assert!((xi[0] - best.0).abs() < 1e-4, "rho {rho}: {xi:?} vs {}", best.0);
        }
    }

    #[test]
    fn svd_waterfill_rejects_zero_channel() {
        assert!(matches!(
            svd_waterfill(&CMatrix::zeros(2, 2), 1.0),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn outdated_siso_matches_scalar_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let rho = 2.0;
        let theta = complex_gaussian(&mut rng, rho);
        let mut mimo = OutdatedMimo::new(1, rho).unwrap();
        let mut x_vec = CVector::from_element(1, theta);
        let mut x = theta;
        let mut gains = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..4 {
            let h = sample_gain(1, 1, &mut rng);
            let z = complex_gaussian(&mut rng, 1.0);
            ys.push(h[(0, 0)] * x + z);
            gains.push(h[(0, 0)]);
            x_vec = mimo.step(&x_vec, &h, &CVector::from_element(1, z)).unwrap();
            x = crate::lfc::encode_step(x, h[(0, 0)], z, rho, 1.0, 0.0).unwrap();
            assert!((x_vec[0] - x).norm() < 1e-12);
        }
        let code = crate::lfc::FeedbackCode::build(&gains, rho, 1.0, 0.0).unwrap();
        let st = crate::lfc::combine_perfect(&ys, &code).unwrap();
        assert!((mimo.theta_hat()[0] - st.theta_hat).norm() < 1e-12);
    }

    #[test]
    fn outdated_noiseless_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let theta = CVector::from_fn(2, |_, _| complex_gaussian(&mut rng, 1.0));
        let mut mimo = OutdatedMimo::new(2, 1.5).unwrap();
        let mut x = theta.clone();
        for _ in 0..3 {
            x = mimo.step(&x, &sample_gain(2, 2, &mut rng), &CVector::zeros(2)).unwrap();
        }
        let expect = (CMatrix::identity(2, 2) - mimo.phi() * mimo.phi().adjoint()) * &theta;
        assert!((mimo.theta_hat() - expect).norm() < 1e-12);
        assert!((mimo.unbiased().unwrap() - theta).norm() < 1e-10);
    }

    #[test]
    fn outdated_recursion_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for scale in [1.0, 2.0] {
            let theta = CVector::from_fn(2, |_, _| complex_gaussian(&mut rng, 1.0));
            let mut mimo = OutdatedMimo::with_power_scale(2, 0.7, scale).unwrap();
            let mut x = theta.clone();
            let (mut hs, mut zs) = (Vec::new(), Vec::new());
            for _ in 0..3 {
                let h = sample_gain(2, 2, &mut rng);
                let z = CVector::from_fn(2, |_, _| complex_gaussian(&mut rng, 1.0));
                x = mimo.step(&x, &h, &z).unwrap();
                hs.push(h);
                zs.push(z);
            }
            let direct = outdated_mimo_direct(&theta, &hs, &zs, 0.7, scale).unwrap();
            assert!((mimo.theta_hat() - direct).norm() < 1e-10);
        }
    }
}
