use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::model::*;

fn net(antennas: &[usize], snr: &[f64]) -> NetworkConfig {
    build_network(
        snr.len(),
        antennas,
        snr,
        BetaMode::Auto,
        ChannelNorm::default(),
    )
    .unwrap()
}

fn fig8(db: f64) -> NetworkConfig {
    let r = db_to_linear(db);
    net(&[10, 9, 8, 7], &[r, r, r])
}

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Large-system rate of an i.i.d. square MIMO channel.
fn square_mimo_rate(snr: f64) -> f64 {
    let f = ((4.0 * snr + 1.0).sqrt() - 1.0).powi(2);
    2.0 * (1.0 + snr - f / 4.0).ln() - f / (4.0 * snr)
}

#[test]
fn single_hop_golden_ratio() {
    let g = Constellation::gaussian();
    let cfg = net(&[4, 4], &[1.0]);
    for det in [DetectorSpec::jdd(&g), DetectorSpec::lmmse()] {
        let b = solve(&cfg, &det, &g, &SolverOptions::default()).unwrap();
        assert!(b.converged && b.residual < 1e-12);
        for v in [b.state.xi[0], b.state.eta[0], b.state.nu[0], b.state.eps[0]] {
            assert_relative_eq!(v, golden(), epsilon = 1e-10);
        }
    }
}

#[test]
fn sweeps_converge_to_golden_ratio() {
    let g = Constellation::gaussian();
    let cfg = net(&[1, 1], &[1.0]);
    let det = DetectorSpec::jdd(&g);
    let mut s = ReplicaState {
        xi: vec![0.0],
        eta: vec![0.0],
        nu: vec![1.0],
        eps: vec![1.0],
    };
    for _ in 0..200 {
        s = sweep_once(&s, &cfg, &det, &g, 0.5).unwrap();
    }
    assert_relative_eq!(s.eta[0], golden(), epsilon = 1e-12);
    let again = sweep_once(&s, &cfg, &det, &g, 0.5).unwrap();
    assert!(again.distance(&s) < 1e-12);
}

#[test]
fn single_hop_rate_matches_square_mimo_formula() {
    let g = Constellation::gaussian();
    for snr in [0.1, 1.0, 10.0] {
        let cfg = net(&[8, 8], &[snr]);
        let r = jdd_rate(&cfg, &g, false).unwrap();
        assert_relative_eq!(r, square_mimo_rate(snr), epsilon = 1e-9);
    }
    assert_relative_eq!(square_mimo_rate(1.0), 0.5804, epsilon = 1e-4);
}

#[test]
fn matched_free_energy_is_signal_entropy() {
    for prior in [Constellation::gaussian(), Constellation::qpsk()] {
        let cfg = net(&[6, 5, 7], &[3.0, 10.0]);
        let r = jdd(&cfg, &prior, &SolverOptions::default()).unwrap();
        assert_relative_eq!(r.stable_branch().free_energy, r.hs, epsilon = 1e-9);
    }
}

#[test]
fn single_hop_free_energy_by_substitution() {
    let g = Constellation::gaussian();
    let cfg = net(&[3, 3], &[1.0]);
    let b = solve(&cfg, &DetectorSpec::jdd(&g), &g, &SolverOptions::default()).unwrap();
    let e = golden();
    let pi = std::f64::consts::PI;
    let expected = pi.ln() + 1.0 + (1.0 + e).ln() - 1.0 - (pi / e).ln()
        + (pi * std::f64::consts::E * (1.0 + 1.0 / e)).ln()
        - e * e;
    assert_relative_eq!(b.free_energy, expected, epsilon = 1e-10);
    assert_relative_eq!(
        free_energy(&b, &cfg, &DetectorSpec::jdd(&g), &g).unwrap(),
        expected,
        epsilon = 1e-10
    );
}

fn gradient_max(
    branch: &SolutionBranch,
    cfg: &NetworkConfig,
    det: &DetectorSpec,
    prior: &Constellation,
) -> f64 {
    let x = branch.state.to_vec();
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            let f = |v: &[f64]| {
                free_energy_at(
                    &ReplicaState::from_slice(v).unwrap(),
                    cfg,
                    det,
                    prior,
                    branch.sigma2,
                )
                .unwrap()
            };
            ((f(&up) - f(&dn)) / (2.0 * h)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn free_energy_is_stationary() {
    let q = Constellation::qpsk();
    let g = Constellation::gaussian();
    let cases = [
        (
            net(&[5, 4, 6], &[2.0, 8.0]),
            DetectorSpec::map(&q),
            q.clone(),
        ),
        (
            net(&[5, 4, 6], &[2.0, 8.0]),
            DetectorSpec::lmmse(),
            q.clone(),
        ),
        (
            net(&[4, 4], &[5.0]),
            DetectorSpec::custom(q.clone(), NoiseLevel::Finite(0.5)),
            q.clone(),
        ),
        (
            net(&[6, 5, 4, 3], &[4.0, 6.0, 9.0]),
            DetectorSpec::lmmse(),
            g.clone(),
        ),
        (
            net(&[6, 5, 7], &[3.0, 4.0]),
            DetectorSpec::custom(g.clone(), NoiseLevel::Finite(2.0)),
            q.clone(),
        ),
    ];
    for (cfg, det, prior) in cases {
        let b = solve(&cfg, &det, &prior, &SolverOptions::default()).unwrap();
        let grad = gradient_max(&b, &cfg, &det, &prior);
        assert!(grad < 1e-5, "{det:?}: gradient {grad:e}");
    }
}

#[test]
fn matched_solution_solves_unconstrained_system() {
    let q = Constellation::qpsk();
    let cfg = net(&[8, 6, 7], &[5.0, 12.0]);
    let det = DetectorSpec::map(&q);
    let b = solve(&cfg, &det, &q, &SolverOptions::default()).unwrap();
    let r = fixed_point_residual(&b.state, &cfg, &det, &q, 1.0).unwrap();
    assert!(r <= 1e-12, "{r:e}");
}

#[test]
fn lmmse_gaussian_branch_is_unique() {
    let g = Constellation::gaussian();
    let opts = SolverOptions {
        dense_starts: 20,
        ..Default::default()
    };
    for db in [-5.0, 10.0, 25.0] {
        let r = db_to_linear(db);
        let cfg = net(&[10, 9, 8, 7], &[r, r, r]);
        let (bs, _) = solve_branches(&cfg, &DetectorSpec::lmmse(), &g, &opts).unwrap();
        assert_eq!(bs.len(), 1, "{db} dB");
    }
}

#[test]
fn low_snr_qpsk_has_one_branch() {
    let q = Constellation::qpsk();
    let (bs, k) = solve_branches(
        &fig8(0.0),
        &DetectorSpec::map(&q),
        &q,
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!((bs.len(), k), (1, 0));
}

#[test]
fn fig8_window_has_metastable_branch() {
    let q = Constellation::qpsk();
    let det = DetectorSpec::map(&q);
    let cfg = fig8(18.5);
    let cold = solve(&cfg, &det, &q, &SolverOptions::default()).unwrap();
    let hot = solve(
        &cfg,
        &det,
        &q,
        &SolverOptions::default().with_init(Init::Hot),
    )
    .unwrap();
    assert!(cold.state.distance(&hot.state) > 1e-3);
    let (bs, k) = solve_branches(&cfg, &det, &q, &SolverOptions::default()).unwrap();
    assert_eq!(bs.len(), 2);
    for (i, b) in bs.iter().enumerate() {
        if i != k {
            assert!(bs[k].free_energy < b.free_energy);
        }
    }
    let ber = ber(&cfg, &det).unwrap();
    assert_relative_eq!(ber, ber_from_eta(cfg.gain(), bs[k].state.eta[0]));
    assert!(ber < 1e-3);
}

#[test]
fn hysteresis_loop_in_fig8_window() {
    let q = Constellation::qpsk();
    let det = DetectorSpec::map(&q);
    let grid: Vec<_> = (0..13).map(|i| fig8(16.0 + 0.5 * i as f64)).collect();
    let opts = SolverOptions::default();
    let up = hysteresis_sweep(&grid, &det, &q, Direction::Up, &opts);
    let down = hysteresis_sweep(&grid, &det, &q, Direction::Down, &opts);
    let eta = |p: &SweepPoint| p.tracked.as_ref().unwrap().state.eta[0];
    let differ: Vec<bool> = up
        .iter()
        .zip(&down)
        .map(|(u, d)| (eta(u) - eta(d)).abs() > 1e-3)
        .collect();
    assert!(!differ[0] && !differ[12]);
    assert!(differ.iter().any(|&d| d));
    for (u, d) in up.iter().zip(&down) {
        let (su, sd) = (u.stable.as_ref().unwrap(), d.stable.as_ref().unwrap());
        assert!(su.state.distance(&sd.state) < 1e-6);
    }
}

#[test]
fn ber_examples() {
    assert_eq!(ber_from_eta(1.0, 0.0), 0.5);
    assert_relative_eq!(
        ber_from_eta(1.0, 1.0),
        0.158_655_253_931_457_05,
        epsilon = 1e-15
    );
    let cfg = net(&[4, 4], &[1.0]);
    let err = ber_with(
        &cfg,
        &DetectorSpec::lmmse(),
        &Constellation::bpsk(),
        &SolverOptions::default(),
    );
    assert!(matches!(err, Err(crate::Error::UnsupportedPrior(_))));
}

#[test]
fn matched_filter_limit() {
    let q = Constellation::qpsk();
    let cfg = net(&[8, 7, 9], &[4.0, 10.0]);
    let b = solve(&cfg, &DetectorSpec::mf(), &q, &SolverOptions::default()).unwrap();
    assert!(b.state.xi.iter().all(|&x| x < 1e-6));
    assert_relative_eq!(b.state.nu[0], cfg.gain(), max_relative = 1e-6);
    // xi decays like 1 / sigma^2
    let at = |s: f64| {
        let d = DetectorSpec::custom(Constellation::gaussian(), NoiseLevel::Finite(s));
        solve(&cfg, &d, &q, &SolverOptions::default())
            .unwrap()
            .state
            .xi[0]
    };
    assert_relative_eq!(at(1e8) / at(1e10), 100.0, max_relative = 1e-4);
}

#[test]
fn zero_forcing_needs_growing_arrays() {
    let q = Constellation::qpsk();
    let ok = net(&[4, 6, 8], &[10.0, 10.0]);
    let b = solve(&ok, &DetectorSpec::zf(), &q, &SolverOptions::default()).unwrap();
    assert!(b.state.eta[0] > 0.0);
    let bad = net(&[8, 4, 4], &[10.0, 10.0]);
    let err = solve(&bad, &DetectorSpec::zf(), &q, &SolverOptions::default());
    assert!(
        matches!(err, Err(crate::Error::ZeroForcingDegenerate(_))),
        "{err:?}"
    );
}

#[test]
fn detector_orderings() {
    let q = Constellation::qpsk();
    let o = SolverOptions::default();
    for db in [0.0, 6.0, 12.0, 18.0] {
        let r = db_to_linear(db);
        let cfg = net(&[4, 6, 8, 10], &[r, r, r]);
        let rate = |d: DetectorSpec| sd_rate(&cfg, &q, &d, false).unwrap();
        let lmmse = rate(DetectorSpec::lmmse());
        assert!(lmmse >= rate(DetectorSpec::mf()) - 1e-12);
        assert!(lmmse >= rate(DetectorSpec::zf()) - 1e-12);
        let b = |d: DetectorSpec| ber_with(&cfg, &d, &q, &o).unwrap();
        let (map, lin) = (b(DetectorSpec::map(&q)), b(DetectorSpec::lmmse()));
        assert!(map <= lin + 1e-15);
        assert!(lin <= b(DetectorSpec::mf()) + 1e-15);
        assert!(lin <= b(DetectorSpec::zf()) + 1e-15);
    }
}

#[test]
fn gaussian_map_is_lmmse() {
    let g = Constellation::gaussian();
    let cfg = net(&[6, 5, 4], &[3.0, 30.0]);
    let a = sd_rate(&cfg, &g, &DetectorSpec::map(&g), false).unwrap();
    let b = sd_rate(&cfg, &g, &DetectorSpec::lmmse(), false).unwrap();
    assert_relative_eq!(a, b, epsilon = 1e-8);
}

#[test]
fn sd_loss_is_rate_gap() {
    for prior in [Constellation::gaussian(), Constellation::qpsk()] {
        for db in [-10.0, 5.0, 20.0] {
            let r = db_to_linear(db);
            let cfg = net(&[8, 8, 8, 8], &[r, 100.0, 100.0]);
            let loss = sd_loss(&cfg, &prior, false).unwrap();
            let gap = jdd_rate(&cfg, &prior, false).unwrap()
                - sd_rate(&cfg, &prior, &DetectorSpec::map(&prior), false).unwrap();
            assert_relative_eq!(loss, gap, epsilon = 1e-8);
            assert!(loss >= -1e-9);
        }
    }
}

#[test]
fn vanishing_snr() {
    let q = Constellation::qpsk();
    let cfg = net(&[4, 4, 4], &[1e-9, 1e-9]);
    assert!(jdd_rate(&cfg, &q, false).unwrap().abs() < 1e-8);
    assert!(sd_loss(&cfg, &q, false).unwrap().abs() < 1e-8);
    let b = solve(&cfg, &DetectorSpec::map(&q), &q, &SolverOptions::default()).unwrap();
    assert!(b.state.eps[0] < 1e-8);
}

#[test]
fn qpsk_rate_saturates() {
    let q = Constellation::qpsk();
    let cfg = net(&[8, 8, 8, 8], &[1e5, 100.0, 100.0]);
    let r = jdd_rate(&cfg, &q, true).unwrap();
    assert_relative_eq!(r, 2.0 * 2f64.ln() / 3.0, max_relative = 1e-3);
    assert!(sd_loss(&cfg, &q, false).unwrap() < 1e-3);
}

#[test]
fn tdma_factor() {
    let g = Constellation::gaussian();
    let cfg = net(&[4, 5, 6], &[2.0, 3.0]);
    let a = jdd_rate(&cfg, &g, false).unwrap();
    assert_relative_eq!(jdd_rate(&cfg, &g, true).unwrap(), a / 2.0);
    assert_relative_eq!(
        jdd_hs(&cfg, &g).unwrap() - jdd_hn(&cfg, &g).unwrap(),
        a,
        epsilon = 1e-12
    );
}

#[test]
fn gaussian_rate_grows_with_every_snr() {
    let g = Constellation::gaussian();
    let base = [3.0, 5.0, 7.0];
    let rate = |s: &[f64]| jdd_rate(&net(&[6, 5, 7, 4], s), &g, false).unwrap();
    let r0 = rate(&base);
    for k in 0..3 {
        let mut s = base;
        s[k] *= 1.5;
        assert!(rate(&s) >= r0, "hop {k}");
    }
}

#[test]
fn invalid_inputs() {
    let q = Constellation::qpsk();
    let cfg = net(&[4, 4], &[1.0]);
    let bad = SolverOptions {
        damping: 0.0,
        ..Default::default()
    };
    assert!(solve(&cfg, &DetectorSpec::map(&q), &q, &bad).is_err());
    let s = ReplicaState::zeros(2);
    assert!(sweep_once(&s, &cfg, &DetectorSpec::map(&q), &q, 0.5).is_err());
    let mismatched = DetectorSpec::map(&Constellation::gaussian());
    assert!(solve(&cfg, &mismatched, &q, &SolverOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_depends_only_on_antenna_ratios(
        m in prop::collection::vec(2usize..12, 4),
        s in prop::collection::vec(0.1f64..50.0, 3),
        scale in 2usize..4,
    ) {
        let g = Constellation::gaussian();
        let big: Vec<usize> = m.iter().map(|x| x * scale).collect();
        let a = jdd_rate(&net(&m, &s), &g, false).unwrap();
        let b = jdd_rate(&net(&big, &s), &g, false).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn converged_branches_satisfy_residual_contract(
        m in prop::collection::vec(2usize..12, 3),
        s in prop::collection::vec(0.1f64..30.0, 2),
    ) {
        let q = Constellation::qpsk();
        let cfg = net(&m, &s);
        for det in [DetectorSpec::map(&q), DetectorSpec::lmmse()] {
            let b = solve(&cfg, &det, &q, &SolverOptions::default()).unwrap();
            prop_assert!(b.residual <= 1e-12);
            prop_assert!(b.state.is_valid());
            let r = fixed_point_residual(&b.state, &cfg, &det, &q, b.sigma2).unwrap();
            prop_assert!(r <= 1e-12);
        }
    }

    #[test]
    fn sd_rate_never_beats_jdd(
        m in prop::collection::vec(2usize..10, 3),
        s in prop::collection::vec(0.1f64..30.0, 2),
    ) {
        let g = Constellation::gaussian();
        let cfg = net(&m, &s);
        let jdd = jdd_rate(&cfg, &g, false).unwrap();
        let sd = sd_rate(&cfg, &g, &DetectorSpec::lmmse(), false).unwrap();
        prop_assert!(sd <= jdd + 1e-9);
    }
}
