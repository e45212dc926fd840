//! Sweeps behind each subcommand. Every function returns a finished table;
//! grid points run on the rayon pool except continuation sweeps, and rows
//! come out in grid order.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use relaymimo::mc::{
    mc_ber_with, mc_decoupling, mc_lower_bound, mc_mi_discrete_controlled, mc_mi_gaussian,
};
use relaymimo::replica::{
    ber_from_eta, hysteresis_sweep, jdd, jdd_rate, sd_rate_of, solve_branches, Direction,
    SolverOptions, SweepPoint,
};
use relaymimo::scenario::{Scenario, SweepDirection};
use relaymimo::validation::{check_fixed_points, FixedPointCase};
use relaymimo::{Constellation, DetectorKind, DetectorSpec, NetworkConfig, Shape};

use crate::output::{num, opt, sha256_hex, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Engine {
    Replica,
    Mc,
    Both,
}

impl Engine {
    fn replica(self) -> bool {
        self != Engine::Mc
    }

    fn mc(self) -> bool {
        self != Engine::Replica
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RateMode {
    /// Joint decoding and every listed separate-decoding detector.
    All,
    Jdd,
    Sd,
}

/// Reference realizations per paired one when estimating discrete-input
/// rates with the Gaussian control variate.
const REFERENCE_FACTOR: usize = 20;

/// Realizations behind the interference-free bound when the scenario has no
/// `[mc]` table.
const BOUND_TRIALS: usize = 500;

fn header(t: &mut Table, command: &str, sc: &Scenario, seed: u64) {
    t.meta("relaymimo", env!("CARGO_PKG_VERSION"));
    t.meta("command", command);
    t.meta("seed", seed);
    t.meta("config_sha256", sha256_hex(&sc.to_toml()));
    if let Some(sw) = &sc.sweep {
        t.meta("sweep", sw.variable.name());
    }
}

fn err_cell(e: &dyn std::fmt::Display) -> String {
    e.to_string().replace(['\n', '\r'], " ")
}

fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

fn grid_points(sc: &Scenario) -> Result<Vec<(f64, relaymimo::Result<NetworkConfig>)>> {
    Ok(sc
        .grid()?
        .into_iter()
        .map(|v| (v, sc.network_at(v)))
        .collect())
}

/// Achievable rate per source antenna over the sweep.
pub fn rate(sc: &Scenario, mode: RateMode, engine: Engine, tdma: bool, seed: u64) -> Result<Table> {
    let priors = sc.priors()?;
    let mc = match (engine.mc(), sc.mc) {
        (true, None) => bail!("engine {engine:?} needs an [mc] table"),
        (_, m) => m,
    };
    let mut t = Table::new(&[
        "value",
        "prior",
        "detector",
        "rate_nats",
        "rate_bits",
        "branches",
        "free_energy",
        "converged",
        "mc_rate_nats",
        "mc_std_error",
        "error",
    ]);
    header(&mut t, "rate", sc, seed);
    t.meta("tdma", tdma);
    let mut jobs = Vec::new();
    for (v, cfg) in grid_points(sc)? {
        for p in &priors {
            for (kind, det) in sc.detectors_for(p)? {
                let keep = match mode {
                    RateMode::All => true,
                    RateMode::Jdd => kind == DetectorKind::Jdd,
                    RateMode::Sd => kind != DetectorKind::Jdd,
                };
                if keep {
                    jobs.push((v, cfg.clone(), p.clone(), kind, det));
                }
            }
        }
    }
    let rows: Vec<Vec<String>> = jobs
        .into_par_iter()
        .map(|(v, cfg, prior, kind, det)| {
            let mut row = vec![num(v), prior.to_string(), kind.to_string()];
            let cfg = match cfg {
                Ok(c) => c,
                Err(e) => {
                    row.extend(vec![String::new(); 7]);
                    row.push(err_cell(&e));
                    return row;
                }
            };
            let factor = if tdma { 1.0 / cfg.hops() as f64 } else { 1.0 };
            let mut error = Vec::new();
            if engine.replica() {
                let res = if kind == DetectorKind::Jdd {
                    jdd(&cfg, &prior, &SolverOptions::default()).map(|r| {
                        let b = r.stable_branch();
                        (
                            r.rate * factor,
                            r.branches.len(),
                            b.free_energy,
                            b.converged,
                        )
                    })
                } else {
                    solve_branches(&cfg, &det, &prior, &SolverOptions::default()).and_then(
                        |(bs, k)| {
                            let r = sd_rate_of(&cfg, &prior, &bs[k], tdma)?;
                            Ok((r, bs.len(), bs[k].free_energy, bs[k].converged))
                        },
                    )
                };
                match res {
                    Ok((r, n, f, c)) => {
                        row.extend([num(r), num(bits(r)), n.to_string(), num(f), c.to_string()])
                    }
                    Err(e) => {
                        row.extend(vec![
                            String::new(),
                            String::new(),
                            "0".into(),
                            String::new(),
                            "false".into(),
                        ]);
                        error.push(err_cell(&e));
                    }
                }
            } else {
                row.extend(vec![String::new(); 5]);
            }
            match (mc, kind) {
                (Some(m), DetectorKind::Jdd) => {
                    let opts = m.options(seed);
                    let est = match &prior {
                        Constellation::Gaussian => mc_mi_gaussian(&cfg, opts.trials, seed),
                        _ => mc_mi_discrete_controlled(
                            &cfg,
                            &prior,
                            &opts,
                            REFERENCE_FACTOR * opts.trials,
                        ),
                    };
                    match est {
                        Ok(e) => row.extend([num(e.mean * factor), num(e.std_error * factor)]),
                        Err(e) => {
                            row.extend([String::new(), String::new()]);
                            error.push(err_cell(&e));
                        }
                    }
                }
                _ => row.extend([String::new(), String::new()]),
            }
            row.push(error.join("; "));
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

/// Joint-decoding rate against source-destination distance for each hop
/// count, with the best hop count per distance.
pub fn distance(sc: &Scenario, seed: u64) -> Result<Table> {
    let prior = sc.prior()?;
    let hops = sc.hop_counts();
    let mut cols: Vec<String> = vec!["distance".into()];
    cols.extend(hops.iter().map(|k| format!("rate_k{k}")));
    cols.extend(["best_hops".into(), "best_rate".into(), "error".into()]);
    let mut t = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
    header(&mut t, "distance", sc, seed);
    t.meta("prior", &prior);
    let grid = sc.grid()?;
    let rows: Vec<Vec<String>> = grid
        .par_iter()
        .map(|&d| {
            let mut row = vec![num(d)];
            let mut best: Option<(usize, f64)> = None;
            let mut errors = Vec::new();
            for &k in &hops {
                let r = sc
                    .network_at_distance(k, d)
                    .and_then(|cfg| jdd_rate(&cfg, &prior, true));
                match r {
                    Ok(r) => {
                        row.push(num(r));
                        if best.is_none_or(|(_, b)| r > b) {
                            best = Some((k, r));
                        }
                    }
                    Err(e) => {
                        row.push(String::new());
                        errors.push(format!("K={k}: {}", err_cell(&e)));
                    }
                }
            }
            row.push(best.map(|b| b.0.to_string()).unwrap_or_default());
            row.push(opt(best.map(|b| b.1)));
            row.push(errors.join("; "));
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

fn qpsk_prior(sc: &Scenario) -> Result<Constellation> {
    let prior = sc.prior()?;
    if prior.shape() != Some(Shape::Psk(4)) {
        bail!("bit error rates need a QPSK prior, got {prior}");
    }
    Ok(prior)
}

fn tracked_cells(p: Option<&SweepPoint>, cfg: &NetworkConfig) -> [String; 2] {
    match p.map(|p| &p.tracked) {
        Some(Ok(b)) => [
            num(ber_from_eta(cfg.gain(), b.state.eta[0])),
            num(b.free_energy),
        ],
        _ => [String::new(), String::new()],
    }
}

/// Uncoded QPSK bit error rate per detector over the sweep.
pub fn ber(sc: &Scenario, engine: Engine, seed: u64) -> Result<Table> {
    let prior = qpsk_prior(sc)?;
    let dets = sc.detectors()?;
    if let Some((k, _)) = dets.iter().find(|(k, _)| *k == DetectorKind::Jdd) {
        bail!("detector {k} has no bit error rate; list symbol detectors");
    }
    let mc = match (engine.mc(), sc.mc) {
        (true, None) => bail!("engine {engine:?} needs an [mc] table"),
        (true, Some(m)) => {
            m.options(seed).validate()?;
            Some(m)
        }
        (false, _) => None,
    };
    let bound_trials = sc.mc.map(|m| m.trials).unwrap_or(BOUND_TRIALS);
    let direction = sc.sweep_spec()?.direction;
    let mut cols = vec![
        "value",
        "detector",
        "replica_ber",
        "free_energy",
        "branches",
        "mc_ber",
        "mc_std_error",
        "lower_bound",
    ];
    match direction {
        Some(SweepDirection::Both) => {
            cols.extend(["up_ber", "up_free_energy", "down_ber", "down_free_energy"])
        }
        Some(_) => cols.extend(["tracked_ber", "tracked_free_energy"]),
        None => {}
    }
    cols.push("error");
    let mut t = Table::new(&cols);
    header(&mut t, "ber", sc, seed);

    let points = grid_points(sc)?;
    let cfgs: Vec<NetworkConfig> = points
        .iter()
        .map(|(v, c)| c.clone().with_context(|| format!("sweep value {v}")))
        .collect::<Result<_>>()?;

    // continuation sweeps are sequential by nature
    let sweeps: Vec<Vec<Vec<SweepPoint>>> = dets
        .iter()
        .map(|(_, det)| {
            let dirs: &[Direction] = match direction {
                Some(SweepDirection::Both) => &[Direction::Up, Direction::Down],
                Some(SweepDirection::Up) => &[Direction::Up],
                Some(SweepDirection::Down) => &[Direction::Down],
                None => &[],
            };
            dirs.iter()
                .map(|&d| hysteresis_sweep(&cfgs, det, &prior, d, &SolverOptions::default()))
                .collect()
        })
        .collect();

    let bounds: Vec<Result<f64>> = cfgs
        .par_iter()
        .map(|cfg| Ok(mc_lower_bound(cfg, bound_trials, seed)?))
        .collect();

    let mut jobs = Vec::new();
    for (i, (v, _)) in points.iter().enumerate() {
        for (j, (kind, det)) in dets.iter().enumerate() {
            jobs.push((i, j, *v, *kind, det.clone()));
        }
    }
    let rows: Vec<Vec<String>> = jobs
        .into_par_iter()
        .map(|(i, j, v, kind, det)| {
            let cfg = &cfgs[i];
            let mut errors = Vec::new();
            let mut row = vec![num(v), kind.to_string()];
            if engine.replica() {
                match solve_branches(cfg, &det, &prior, &SolverOptions::default()) {
                    Ok((bs, k)) => row.extend([
                        num(ber_from_eta(cfg.gain(), bs[k].state.eta[0])),
                        num(bs[k].free_energy),
                        bs.len().to_string(),
                    ]),
                    Err(e) => {
                        row.extend([String::new(), String::new(), "0".into()]);
                        errors.push(err_cell(&e));
                    }
                }
            } else {
                row.extend(vec![String::new(); 3]);
            }
            match mc.map(|m| mc_ber_with(cfg, &det, &prior, &m.options(seed))) {
                Some(Ok(e)) => row.extend([num(e.mean), num(e.std_error)]),
                Some(Err(e)) => {
                    row.extend([String::new(), String::new()]);
                    errors.push(err_cell(&e));
                }
                None => row.extend([String::new(), String::new()]),
            }
            match &bounds[i] {
                Ok(b) => row.push(num(*b)),
                Err(e) => {
                    row.push(String::new());
                    errors.push(err_cell(e));
                }
            }
            for sweep in &sweeps[j] {
                row.extend(tracked_cells(sweep.get(i), cfg));
            }
            row.push(errors.join("; "));
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

/// Per-stream moments of the vector estimator against the decoupled scalar
/// channel.
pub fn decoupling(sc: &Scenario, seed: u64) -> Result<Table> {
    let prior = sc.prior()?;
    let dets = sc.detectors()?;
    let m = sc.mc.context("decoupling needs an [mc] table")?;
    let opts = m.options(seed);
    opts.validate()?;
    let mut t = Table::new(&[
        "value",
        "detector",
        "eta1",
        "xi1",
        "mse_mc",
        "mse_std_error",
        "mse_pred",
        "cross_mc",
        "cross_std_error",
        "cross_pred",
        "energy_mc",
        "energy_std_error",
        "energy_pred",
        "error",
    ]);
    header(&mut t, "decoupling", sc, seed);
    t.meta("prior", &prior);
    let mut jobs = Vec::new();
    for (v, cfg) in grid_points(sc)? {
        for (kind, det) in &dets {
            jobs.push((v, cfg.clone(), *kind, det.clone()));
        }
    }
    let rows: Vec<Vec<String>> = jobs
        .into_par_iter()
        .map(|(v, cfg, kind, det)| {
            let mut row = vec![num(v), kind.to_string()];
            let r = cfg.and_then(|cfg| mc_decoupling(&cfg, &det, &prior, &opts));
            match r {
                Ok(r) => {
                    row.extend([num(r.eta1), num(r.xi1)]);
                    for (e, p) in [
                        (r.mse, r.predicted.mse),
                        (r.cross, r.predicted.cross),
                        (r.energy, r.predicted.energy),
                    ] {
                        row.extend([num(e.mean), num(e.std_error), num(p)]);
                    }
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(vec![String::new(); 11]);
                    row.push(err_cell(&e));
                }
            }
            row
        })
        .collect();
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

/// Fixed-point checks on every network, prior and detector of a scenario.
pub fn scenario_fixed_points(sc: &Scenario) -> Result<relaymimo::validation::CriterionReport> {
    let nets: Vec<(String, NetworkConfig)> = match &sc.sweep {
        Some(sw) => sc
            .grid()?
            .into_iter()
            .map(|v| Ok((format!("{}={v}", sw.variable.name()), sc.network_at(v)?)))
            .collect::<Result<_>>()?,
        None => vec![("base".into(), sc.network()?)],
    };
    let mut cases = Vec::new();
    for p in sc.priors()? {
        for (kind, det) in sc.detectors_for(&p)? {
            let det = match kind {
                DetectorKind::Jdd => DetectorSpec::jdd(&p),
                _ => det,
            };
            for (name, cfg) in &nets {
                cases.push(FixedPointCase::new(
                    format!("{p} {kind} {name}"),
                    cfg.clone(),
                    det.clone(),
                    p.clone(),
                ));
            }
        }
    }
    Ok(check_fixed_points(0, "scenario fixed points", &cases))
}
