//! Randomized invariants across modules.

use lfc_harq::fec::{crc_attach, crc_ok, interleaver, CodecConfig, TurboCodec};
use lfc_harq::lfc::FeedbackCode;
use lfc_harq::modem::{build_constellation, llr_demap, map_bits};
use lfc_harq::multiantenna::waterfill;
use lfc_harq::Complex64;
use proptest::prelude::*;

fn gain() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn waterfill_is_a_feasible_descending_split(
        mut lam in prop::collection::vec(0.01f64..5.0, 1..6),
        rho_db in -10.0f64..30.0,
    ) {
        lam.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let xi = waterfill(&lam, 10f64.powf(rho_db / 10.0)).unwrap();
        prop_assert!((xi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(xi.iter().all(|&x| x >= 0.0));
        prop_assert!(xi.windows(2).all(|w| w[0] >= w[1] - 1e-15));
    }

    #[test]
    fn post_snr_never_drops_with_more_rounds(
        h in prop::collection::vec(gain(), 1..7),
        rho in 0.05f64..20.0,
        gamma in 0.0f64..=1.0,
        sigma2 in 0.0f64..2.0,
    ) {
        let code = FeedbackCode::build(&h, rho, gamma, sigma2).unwrap();
        let mut last = 0.0;
        for k in 1..=h.len() {
            let s = code.post_snr_at(k).unwrap();
            prop_assert!(s >= last * (1.0 - 1e-9) && s >= 0.0);
            last = s;
        }
    }

    #[test]
    fn repetition_code_is_mrc(h in prop::collection::vec(gain(), 1..7), rho in 0.05f64..20.0, sigma2 in 0.0f64..2.0) {
        let code = FeedbackCode::build(&h, rho, 0.0, sigma2).unwrap();
        let mrc = rho * h.iter().map(|g| g.norm_sqr()).sum::<f64>();
        prop_assert!((code.post_snr().unwrap() - mrc).abs() <= 1e-9 * mrc.max(1.0));
    }

    #[test]
    fn noiseless_demap_recovers_bits(m_idx in 0usize..3, seed in any::<u64>(), rho in 0.1f64..100.0) {
        let m = [4usize, 16, 64][m_idx];
        let c = build_constellation(m, rho).unwrap();
        let nb = c.bits_per_symbol();
        let bits: Vec<u8> = (0..nb * 8).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let syms = map_bits(&bits, &c).unwrap();
        for (k, s) in syms.iter().enumerate() {
            let label = c.hard_decision(*s);
            prop_assert_eq!(c.label_bits(label), bits[k * nb..(k + 1) * nb].to_vec());
            let soft = llr_demap(*s, 1e-3 * rho, &c).unwrap();
            for (b, l) in bits[k * nb..(k + 1) * nb].iter().zip(&soft.llrs) {
                prop_assert_eq!(*b == 0, *l > 0.0);
            }
        }
    }

    #[test]
    fn crc_catches_short_bursts(bits in prop::collection::vec(0u8..2, 1..300), start in any::<prop::sample::Index>(), len in 1usize..=16) {
        let mut frame = crc_attach(&bits);
        prop_assert!(crc_ok(&frame));
        let s = start.index(frame.len());
        for b in frame.iter_mut().skip(s).take(len) {
            *b ^= 1;
        }
        prop_assert!(!crc_ok(&frame));
    }

    #[test]
    fn interleaver_is_a_permutation(len in 1usize..4000, seed in any::<u64>()) {
        let mut p = interleaver(len, seed);
        p.sort_unstable();
        prop_assert!(p.iter().enumerate().all(|(i, &v)| i == v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn turbo_noiseless_identity(l_info in 24usize..300, seed in any::<u64>(), iseed in any::<u64>()) {
        let codec = TurboCodec::new(CodecConfig { l_info, interleaver_seed: iseed, ..CodecConfig::default() }).unwrap();
        let bits: Vec<u8> = (0..l_info).map(|i| ((seed.rotate_left(i as u32) ^ i as u64) & 1) as u8).collect();
        let coded = codec.encode(&bits).unwrap();
        prop_assert_eq!(coded.len(), codec.coded_len());
        let llrs: Vec<f64> = coded.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
        prop_assert_eq!(codec.decode(&llrs).unwrap().bits, bits);
    }
}
