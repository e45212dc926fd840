use relaymimo::mc::{mc_ber_with, mc_mi_gaussian, McOptions};
use relaymimo::replica::{ber, jdd_rate, sd_rate};
use relaymimo::scenario::Scenario;
use relaymimo::DetectorKind;

const TEXT: &str = r#"
hops = 2
antennas = [8, 8, 8]
snr_db = [10.0, 10.0]
constellation = ["gaussian", "qpsk"]
detector = ["lmmse", "map"]

[mc]
trials = 300
per_trial = 16
"#;

#[test]
fn scenario_to_replica_to_monte_carlo() {
    let sc: Scenario = TEXT.parse().unwrap();
    let cfg = sc.network().unwrap();
    let priors = sc.priors().unwrap();
    assert_eq!(priors.len(), 2);

    let gauss = jdd_rate(&cfg, &priors[0], false).unwrap();
    let mc = mc_mi_gaussian(&cfg, 300, 11).unwrap();
    assert!(mc.z_score(gauss).abs() < 4.0, "{gauss} vs {mc:?}");

    let qpsk = jdd_rate(&cfg, &priors[1], false).unwrap();
    assert!(qpsk < gauss);
    assert!(qpsk <= 8.0 * 2f64.ln() + 1e-12);
    let d = sc.detectors_for(&priors[1]).unwrap();
    for (_, det) in &d {
        assert!(sd_rate(&cfg, &priors[1], det, false).unwrap() <= qpsk + 1e-9);
    }

    let (_, lmmse) = d.iter().find(|(k, _)| *k == DetectorKind::Lmmse).unwrap();
    let p = ber(&cfg, lmmse).unwrap();
    let opts = McOptions::new(300, 16, 11);
    let est = mc_ber_with(&cfg, lmmse, &priors[1], &opts).unwrap();
    assert!(
        (est.mean - p).abs() < 4.0 * est.std_error + 0.01 * p,
        "{p} vs {est:?}"
    );
}

#[test]
fn toml_round_trip() {
    let sc: Scenario = TEXT.parse().unwrap();
    let again: Scenario = sc.to_toml().parse().unwrap();
    assert_eq!(sc.network().unwrap(), again.network().unwrap());
}
