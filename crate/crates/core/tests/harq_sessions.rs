//! End-to-end HARQ session behaviour on short packets.

use lfc_harq::channel::AntennaDims;
use lfc_harq::harq::{throughput, GammaChoice, HarqConfig, HarqEngine, Mode, PpfBudget};
use lfc_harq::modem::Modulation;

fn engine(mode: Mode, m: Modulation, ant: AntennaDims, rho_db: f64, f: impl FnOnce(&mut HarqConfig)) -> HarqEngine {
    let mut c = HarqConfig::new(mode, 10f64.powf(rho_db / 10.0), m);
    c.antennas = ant;
    c.codec.l_info = 400;
    if matches!(mode, Mode::Ppf | Mode::PpfPc) {
        c.t_sym = Some(PpfBudget::Fraction(0.5));
    }
    if mode == Mode::FpfQuant {
        c.quant_bits = Some(2);
    }
    f(&mut c);
    HarqEngine::new(c).unwrap()
}

const MODES: [Mode; 6] = [Mode::Chase, Mode::Fpf, Mode::Ppf, Mode::PpfPc, Mode::FpfQuant, Mode::IrBaseline];

#[test]
fn sessions_are_reproducible() {
    for mode in MODES {
        let e = engine(mode, Modulation::Qam16, AntennaDims::mimo(2, 2), 2.0, |_| {});
        assert_eq!(e.run_seeded(7).unwrap(), e.run_seeded(7).unwrap());
    }
}

#[test]
fn noiseless_forward_link_decodes_in_one_round() {
    for mode in MODES {
        for m in Modulation::ALL {
            let e = engine(mode, m, AntennaDims::SISO, -5.0, |c| c.hooks.noiseless_forward = true);
            let r = e.run_seeded(3).unwrap();
            assert!(r.success && r.transmissions_used == 1, "{mode} {m}");
        }
    }
}

#[test]
fn dead_channel_exhausts_rounds_without_errors() {
    for mode in MODES {
        let e = engine(mode, Modulation::Qpsk, AntennaDims::SISO, 10.0, |c| c.hooks.zero_gains = true);
        let r = e.run_seeded(1).unwrap();
        assert!(!r.success);
        assert_eq!(r.transmissions_used, 4);
        assert_eq!(r.rounds.len(), 4);
    }
}

#[test]
fn first_round_is_shared_by_all_modes() {
    let chase = engine(Mode::Chase, Modulation::Qam16, AntennaDims::SISO, 3.0, |_| {});
    for mode in [Mode::Fpf, Mode::Ppf, Mode::PpfPc, Mode::FpfQuant] {
        let e = engine(mode, Modulation::Qam16, AntennaDims::SISO, 3.0, |_| {});
        for seed in 0..5 {
            assert_eq!(e.run_seeded(seed).unwrap().rounds[0], chase.run_seeded(seed).unwrap().rounds[0], "{mode}");
        }
    }
}

#[test]
fn identities_on_short_packets() {
    for ant in [AntennaDims::SISO, AntennaDims::mimo(2, 2)] {
        let chase = engine(Mode::Chase, Modulation::Qam16, ant, 1.0, |_| {});
        let fpf = engine(Mode::Fpf, Modulation::Qam16, ant, 1.0, |_| {});
        let fpf0 = engine(Mode::Fpf, Modulation::Qam16, ant, 1.0, |c| c.gamma = GammaChoice::Fixed(0.0));
        let all = engine(Mode::PpfPc, Modulation::Qam16, ant, 1.0, |c| c.t_sym = Some(PpfBudget::Fraction(1.0)));
        let none = engine(Mode::PpfPc, Modulation::Qam16, ant, 1.0, |c| c.t_sym = Some(PpfBudget::Symbols(0)));
        for seed in 0..10 {
            let c = chase.run_seeded(seed).unwrap();
            assert_eq!(fpf0.run_seeded(seed).unwrap(), c);
            assert_eq!(none.run_seeded(seed).unwrap(), c);
            assert_eq!(all.run_seeded(seed).unwrap(), fpf.run_seeded(seed).unwrap());
        }
    }
}

#[test]
fn ppf_sends_only_its_budget() {
    let e = engine(Mode::Ppf, Modulation::Qpsk, AntennaDims::SISO, -6.0, |_| {});
    let pc = engine(Mode::PpfPc, Modulation::Qpsk, AntennaDims::SISO, -6.0, |_| {});
    let mut saw_retx = false;
    for seed in 0..10 {
        for r in e.run_seeded(seed).unwrap().rounds.iter().skip(1) {
            saw_retx = true;
            assert!(r.tx_symbols <= e.t_sym());
        }
        for r in pc.run_seeded(seed).unwrap().rounds.iter() {
            assert_eq!(r.tx_symbols, pc.packet_len());
        }
    }
    assert!(saw_retx);
}

#[test]
fn throughput_grows_with_power() {
    let taus: Vec<f64> = [-6.0, 0.0, 6.0]
        .iter()
        .map(|&db| {
            let e = engine(Mode::Fpf, Modulation::Qpsk, AntennaDims::SISO, db, |_| {});
            let res: Vec<_> = (0..40).map(|s| e.run_seeded(s).unwrap()).collect();
            throughput(&res).unwrap().tau
        })
        .collect();
    assert!(taus[0] < taus[1] && taus[1] < taus[2], "{taus:?}");
}

#[test]
fn post_combining_snr_follows_the_mode_lattice() {
    // low enough that every session runs all four rounds
    let (m, rho_db) = (Modulation::Qam64, -10.0);
    let short = |c: &mut HarqConfig| c.codec.l_info = 120;
    let noisy = |c: &mut HarqConfig| {
        c.codec.l_info = 120;
        c.sigma2 = 0.25;
    };
    let lattice = [
        engine(Mode::Fpf, m, AntennaDims::SISO, rho_db, short),
        engine(Mode::Fpf, m, AntennaDims::SISO, rho_db, noisy),
        engine(Mode::PpfPc, m, AntennaDims::SISO, rho_db, noisy),
        engine(Mode::Chase, m, AntennaDims::SISO, rho_db, short),
    ];
    let sessions = 1000;
    // diffs[pair][round]: paired differences of consecutive lattice members
    let mut diffs = vec![vec![Vec::new(); 4]; 3];
    for seed in 0..sessions {
        let snr: Vec<Vec<f64>> = lattice
            .iter()
            .map(|e| {
                let r = e.run_seeded(seed).unwrap();
                assert_eq!(r.rounds.len(), 4);
                r.rounds.iter().map(|x| x.snr_post).collect()
            })
            .collect();
        for p in 0..3 {
            for k in 0..4 {
                diffs[p][k].push(snr[p][k] - snr[p + 1][k]);
            }
        }
    }
    for (p, rounds) in diffs.iter().enumerate() {
        for (k, d) in rounds.iter().enumerate() {
            let n = d.len() as f64;
            let mean = d.iter().sum::<f64>() / n;
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean >= -1.96 * (var / n).sqrt(), "pair {p} round {}: mean diff {mean}", k + 1);
        }
    }
}
