//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fail.

mod support;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use synchrony::experiments::{run_study, StudyConfig, StudyOutcome};
use synchrony::kuramoto::{
    make_ring_graph, simulate, wrap_angle, FrequencyProcess, InitialPhases, SimConfig,
};
use synchrony::metrics::{algebraic_connectivity, group_sync_index, order_parameters};
use synchrony::phase::{phase_to_position, OnlineConfig, OnlineEstimator};
use synchrony::rng::seeded;
use synchrony::run::{run_train, TrainConfig};
use synchrony::theory::{
    chi_nu, jacobian, jacobian_eigs, solve_phase_lock, verify_theorem1, VerifyOptions,
};

use support::{binomial, bisect, dft_hilbert, gradient_check, varying};

// Tolerances and budgets.
const CONSTANT_RESIDUAL: f64 = 1e-12;
const CONSTANT_DIGITS: f64 = 1e-10;
const LOCK_DRAWS: usize = 200;
const LOCK_BUDGET_S: f64 = 60.0;
const OPTIMUM_GRID: f64 = 0.05;
const OPTIMUM_BUDGET_S: f64 = 120.0;
const JACOBIAN_POINTS: usize = 101;
const JACOBIAN_BUDGET_S: f64 = 1.0;
const GRADIENT_NETS: usize = 10;
const GRADIENT_TOL: f64 = 1e-4;
const BELL_OMEGA_BAND: f64 = 0.5;
const DEGREE_RANGE: std::ops::RangeInclusive<usize> = 1..=5;
const HILBERT_TOL: f64 = 0.3;
const ROUND_TRIP_TOL: f64 = 0.1;
const ROTATION_TOL: f64 = 1e-12;
const RIGID_RHO_TOL: f64 = 1e-9;
const RING5_LAMBDA2: f64 = 1.381_966_011_250_105;
const RING5_TOL: f64 = 1e-9;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn check(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (pass, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => (
            false,
            format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        ),
    };
    let c = Check {
        name,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    };
    println!(
        "{} {:<24} {} [{:.1}s]",
        if c.pass { "PASS" } else { "FAIL" },
        c.name,
        c.detail,
        c.seconds
    );
    c
}

fn theorem_constants() -> (bool, String) {
    let start = Instant::now();
    let (chi, nu) = chi_nu();
    let chi_ref = bisect(|t| t.cos() + 0.5 * (t / 2.0).cos(), 1.0, 3.0);
    let nu_ref = chi_ref.sin() + (chi_ref / 2.0).sin();
    let residual = (chi.cos() + 0.5 * (chi / 2.0).cos()).abs();
    let digits = ((chi - chi_ref).abs() / chi_ref).max((nu - nu_ref).abs() / nu_ref);
    let mut rng = seeded(2024);
    let (mut draws, mut misses) = (0, 0);
    while draws < LOCK_DRAWS {
        let w1: f64 = rng.random_range(3.0..5.0);
        let w2: f64 = rng.random_range(3.0..5.0);
        let c: f64 = rng.random_range(0.2..3.0);
        let q = (w1 - w2) / (2.0 * c);
        if q.abs() >= nu {
            continue;
        }
        draws += 1;
        let roots = solve_phase_lock(w1, w2, 0.5 * (w1 + w2), c).unwrap();
        if !roots
            .iter()
            .any(|r| r.epsilon.abs() < 1e-8 && r.theta12.abs() <= chi)
        {
            misses += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        residual < CONSTANT_RESIDUAL && digits < CONSTANT_DIGITS && misses == 0 && secs < LOCK_BUDGET_S,
        format!(
            "chi={chi:.12} nu={nu:.12} residual={residual:.1e} rel.diff={digits:.1e}; {misses}/{draws} draws without a symmetric lock"
        ),
    )
}

fn theorem_optimality() -> (bool, String) {
    let start = Instant::now();
    let opt = VerifyOptions {
        omega_a_step: OPTIMUM_GRID,
        ..VerifyOptions::default()
    };
    let r = verify_theorem1(4.3, 3.7, 1.25, &opt).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let target = 0.5 * (4.3 + 3.7);
    match r.argmax_omega_a {
        Some(a) => (
            (a - target).abs() <= OPTIMUM_GRID + 1e-9 && secs < OPTIMUM_BUDGET_S,
            format!(
                "argmax omega_a={a:.2} (predicted {target:.2}), max locked r_net={:.6}, {} grid points",
                r.max_r_net.unwrap_or(f64::NAN),
                r.rows.len()
            ),
        ),
        None => (false, "no grid point locked".into()),
    }
}

fn jacobian_stability() -> (bool, String) {
    let start = Instant::now();
    let (chi, _) = chi_nu();
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for k in 0..JACOBIAN_POINTS {
        let x = -chi + 2.0 * chi * (k + 1) as f64 / (JACOBIAN_POINTS + 1) as f64;
        let y = x / 2.0;
        let [a, b] = jacobian_eigs(x, y, 1.0);
        let j = jacobian(x, y, 1.0);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        ok &= a.re < 0.0 && b.re < 0.0 && tr < 0.0 && det > 0.0;
        worst = worst.max(a.re).max(b.re);
    }
    let secs = start.elapsed().as_secs_f64();
    (
        ok && secs < JACOBIAN_BUDGET_S,
        format!("{JACOBIAN_POINTS} points, largest real part {worst:.4}"),
    )
}

fn gradient() -> (bool, String) {
    let mut rng = seeded(77);
    let mut worst: f64 = 0.0;
    for net in 0..GRADIENT_NETS {
        let sizes: Vec<usize> = if net == 0 {
            vec![3, 128, 64, 11]
        } else {
            let hidden = rng.random_range(1..=3);
            let mut s = vec![3];
            s.extend((0..hidden).map(|_| rng.random_range(4..=48)));
            s.push(11);
            s
        };
        worst = worst.max(gradient_check(&sizes, 500 + net as u64));
    }
    (
        worst < GRADIENT_TOL,
        format!("{GRADIENT_NETS} nets, worst relative error {worst:.2e}"),
    )
}

fn heatmap(ck: &Path, out: &Path) -> (bool, String) {
    let cfg = StudyConfig::default_for("heatmap", ck).unwrap();
    let StudyOutcome::Heatmap(r) = run_study(&cfg, None, out).unwrap() else {
        unreachable!()
    };
    let with = r.count_with.unwrap_or(0);
    (
        with > r.count_without,
        format!(
            "cells with <r_net> >= {}: {with} with CA vs {} without ({} cells, {} reps)",
            r.threshold,
            r.count_without,
            r.cells.len(),
            r.repetitions
        ),
    )
}

fn bell(ck: &Path, out: &Path) -> (bool, String) {
    let cfg = StudyConfig::default_for("bell", ck).unwrap();
    let StudyOutcome::Bell(r) = run_study(&cfg, None, out).unwrap() else {
        unreachable!()
    };
    let offset = r.agent_mean_omega_a.mean - r.group_mean;
    (
        r.curve.len() == 11 && r.agent_in_top_band() && offset.abs() <= BELL_OMEGA_BAND,
        format!(
            "CA <r_net>={:.4}, best fixed {:.4}±{:.4} at {:.2}; CA mean omega_a={:.3} vs group mean {:.3}",
            r.agent_r_net.mean,
            r.best_fixed.r_net.mean,
            r.best_fixed.r_net.std,
            r.best_fixed.omega,
            r.agent_mean_omega_a.mean,
            r.group_mean
        ),
    )
}

fn degree(ck: &Path, out: &Path) -> (bool, String) {
    let cfg = StudyConfig::default_for("degree", ck).unwrap();
    let n = match &cfg {
        StudyConfig::Degree(c) => c.group.graph.n,
        _ => unreachable!(),
    };
    let StudyOutcome::Degree(r) = run_study(&cfg, None, out).unwrap() else {
        unreachable!()
    };
    let counts = r
        .summaries
        .iter()
        .all(|s| s.arrangements == binomial(n, s.degree));
    let full = r.summaries.iter().find(|s| s.degree == n);
    let beats: Vec<String> = r
        .summaries
        .iter()
        .filter(|s| DEGREE_RANGE.contains(&s.degree))
        .map(|s| format!("d={}: {:.4}/{:.4}", s.degree, s.ca.mean, s.na.mean))
        .collect();
    let ca_wins = DEGREE_RANGE.clone().all(|d| {
        r.summaries
            .iter()
            .find(|s| s.degree == d)
            .is_some_and(|s| s.ca.mean >= s.na.mean)
    });
    let dl = full.map_or(f64::NAN, |s| s.delta_lambda2);
    (
        counts && dl > 0.0 && ca_wins,
        format!(
            "arrangements exact: {counts}; delta lambda2 at d={n}: {dl:.4}; CA/NA {}",
            beats.join(", ")
        ),
    )
}

fn improvement(ck: &Path, out: &Path) -> (bool, String) {
    let cfg = StudyConfig::default_for("improvement", ck).unwrap();
    let StudyOutcome::Improvement { rows } = run_study(&cfg, None, out).unwrap() else {
        unreachable!()
    };
    let ok = !rows.is_empty()
        && rows
            .iter()
            .all(|r| r.increase_pct.iter().all(|p| p.is_some_and(|v| v > 0.0)));
    let detail: Vec<String> = rows
        .iter()
        .map(|r| {
            let p: Vec<String> = r
                .increase_pct
                .iter()
                .map(|p| p.map_or("-".into(), |v| format!("{v:+.2}%")))
                .collect();
            format!("{}: {}", r.label, p.join(" "))
        })
        .collect();
    (
        ok,
        format!("r_net r_tot rho_net rho_tot; {}", detail.join("; ")),
    )
}

fn phase_estimation() -> (bool, String) {
    // Participant-like signal against the offline transform.
    let dt = 0.025;
    let duration = 30.0;
    let x: Vec<f64> = (0..(duration / dt) as usize)
        .map(|k| varying(k as f64 * dt))
        .collect();
    let oracle = dft_hilbert(&x);
    let config = OnlineConfig::default();
    let mut est = OnlineEstimator::new(config).unwrap();
    let first_cycle = config.bootstrap + 2.0 * PI / 3.4;
    let mut hilbert_err: f64 = 0.0;
    for (k, &p) in x.iter().enumerate() {
        let t = k as f64 * dt;
        if let Some(row) = est.push(t, p, dt).unwrap() {
            if t > first_cycle && t < duration - 3.0 {
                hilbert_err = hilbert_err.max(wrap_angle(row.theta - oracle[k]).abs());
            }
        }
    }
    // Avatar ball driven with the amplitudes learned from that participant.
    let a = est.state().unwrap().amplitudes;
    let amps = [(a.p_pos, a.p_neg)];
    let w = 4.0;
    let mut avatar = OnlineEstimator::new(OnlineConfig {
        recenter_tau: None,
        velocity_tau: 0.0,
        ..config
    })
    .unwrap();
    let mut trip_err: f64 = 0.0;
    for k in 0..(duration / dt) as usize {
        let t = k as f64 * dt;
        let p = phase_to_position(w * t, &amps).unwrap();
        if let Some(row) = avatar.push(t, p, dt).unwrap() {
            if t > first_cycle {
                // Backward differences lag half a sample.
                trip_err = trip_err.max(wrap_angle(row.theta - w * (t - dt / 2.0)).abs());
            }
        }
    }
    (
        hilbert_err < HILBERT_TOL && trip_err < ROUND_TRIP_TOL,
        format!(
            "max |online - Hilbert|={hilbert_err:.3} rad; round trip max error {trip_err:.3} rad (amplitudes {:.3}/{:.3})",
            a.p_pos, a.p_neg
        ),
    )
}

fn metric_invariants() -> (bool, String) {
    let mut rng = seeded(5);
    let mut bounds = true;
    let mut rot_err: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..10);
        let th: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let split = rng.random_range(1..n);
        let parts: Vec<usize> = (0..split).collect();
        let avatars: Vec<usize> = (split..n).collect();
        let rot = rng.random_range(-PI..PI);
        let (t, p) = order_parameters(&th, &parts, &avatars).unwrap();
        let turned: Vec<f64> = th.iter().map(|x| x + rot).collect();
        let (t2, p2) = order_parameters(&turned, &parts, &avatars).unwrap();
        bounds &= (0.0..=1.0 + 1e-15).contains(&t) && (0.0..=1.0 + 1e-15).contains(&p);
        rot_err = rot_err.max((t - t2).abs()).max((p - p2).abs());
    }
    let ids: Vec<usize> = (0..5).collect();
    for seed in 0..20 {
        let cfg = SimConfig {
            dt: 0.01,
            duration: 4.0,
            coupling: 0.3,
            graph: make_ring_graph(5).unwrap(),
            freq_process: FrequencyProcess::GaussianPerStep {
                mean: vec![3.5, 3.8, 4.0, 4.3, 4.6],
                std: vec![0.3; 5],
            },
            initial_phases: InitialPhases::Uniform { low: -PI, high: PI },
            rng_seed: seed,
            participant_ids: ids.clone(),
            avatar_ids: vec![],
        };
        let traj = simulate(&cfg, &mut []).unwrap();
        let rho = group_sync_index(&traj.phases, 0.01, 2.0, &ids).unwrap();
        let rot = 0.37 * seed as f64 - 3.0;
        let turned: Vec<Vec<f64>> = traj
            .phases
            .iter()
            .map(|r| r.iter().map(|x| x + rot).collect())
            .collect();
        bounds &= (0.0..=1.0 + 1e-12).contains(&rho);
        rot_err = rot_err.max((rho - group_sync_index(&turned, 0.01, 2.0, &ids).unwrap()).abs());
    }
    let mut rigid_err: f64 = 0.0;
    for _ in 0..50 {
        let th0: Vec<f64> = (0..5).map(|_| rng.random_range(-PI..PI)).collect();
        let omega = rng.random_range(0.5..6.0);
        let history: Vec<Vec<f64>> = (0..301)
            .map(|k| {
                th0.iter()
                    .map(|t| wrap_angle(t + omega * k as f64 * 0.01))
                    .collect()
            })
            .collect();
        rigid_err =
            rigid_err.max((group_sync_index(&history, 0.01, 2.0, &ids).unwrap() - 1.0).abs());
    }
    let l2 = algebraic_connectivity(&make_ring_graph(5).unwrap()).unwrap();
    (
        bounds && rot_err < ROTATION_TOL && rigid_err < RIGID_RHO_TOL && (l2 - RING5_LAMBDA2).abs() < RING5_TOL,
        format!(
            "bounded: {bounds}; rotation error {rot_err:.1e}; rigid rho error {rigid_err:.1e}; ring(5) lambda2={l2:.12}"
        ),
    )
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_synchrony"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every table a run leaves behind, relative path to contents.
fn tables(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|x| x.to_str()), Some("csv" | "dat")) {
                found.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    found.sort();
    found
}

fn determinism() -> (bool, String) {
    let root = tempfile::tempdir().unwrap();
    let heat = root.path().join("heatmap.json");
    let verify = root.path().join("verify.json");
    fs::write(
        &verify,
        r#"{"omega1": 4.3, "omega2": 3.7, "coupling": 1.25,
            "options": {"omega_a_min": 3.9, "omega_a_max": 4.1, "omega_a_step": 0.1,
                        "dt": 0.01, "t_max": 60.0, "rate_tol": 1e-4, "hold": 1.0, "perturbation": 0.05}}"#,
    )
    .unwrap();
    let runs: Vec<PathBuf> = (0..2)
        .map(|k| root.path().join(format!("run{k}")))
        .collect();
    for run in &runs {
        let s = |p: &Path| p.to_str().unwrap().to_string();
        let train = run.join("train");
        cli(&[
            "train",
            "--episodes",
            "3",
            "--seed",
            "11",
            "--out",
            &s(&train),
        ]);
        // Both runs drive the same checkpoint file: its path is part of the
        // config fingerprint written into the tables.
        let ck = runs[0].join("train/checkpoint.json");
        if !heat.exists() {
            let cfg = serde_json::json!({
                "study": "heatmap", "n_participants": 3, "couplings": [0.5, 1.5], "deltas": [0.2, 0.6],
                "center": 4.0, "duration": 5.0, "repetitions": 2, "threshold": 0.9, "seed": 3,
                "avatar": {"agent": {"kind": "ca", "checkpoint": ck, "omega_min": 2.0, "omega_max": 6.0}},
            });
            fs::write(&heat, cfg.to_string()).unwrap();
        }
        for cond in ["P", "CA", "NA", "CA-RC", "CA-RF"] {
            let out = run.join(format!("sim-{cond}"));
            cli(&[
                "simulate",
                "--condition",
                cond,
                "--checkpoint",
                &s(&ck),
                "--seed",
                "6",
                "--out",
                &s(&out),
            ]);
        }
        cli(&[
            "study",
            "--config",
            &s(&heat),
            "--out",
            &s(&run.join("study")),
        ]);
        cli(&[
            "verify-theorem",
            "--config",
            &s(&verify),
            "--out",
            &s(&run.join("verify")),
        ]);
    }
    let (a, b) = (tables(&runs[0]), tables(&runs[1]));
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.display().to_string())
        .collect();
    (
        a.len() == b.len() && a.len() >= 15 && differing.is_empty(),
        format!("{} tables compared, differing: {differing:?}", a.len()),
    )
}

fn main() {
    println!("acceptance: one line per criterion");
    let mut checks = vec![
        check("theorem-constants", theorem_constants),
        check("theorem-optimality", theorem_optimality),
        check("jacobian-stability", jacobian_stability),
        check("gradient", gradient),
        check("phase-estimation", phase_estimation),
        check("metric-invariants", metric_invariants),
        check("determinism", determinism),
    ];

    let work = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let cfg = TrainConfig::default();
    let trained = run_train(&cfg, None, &work.path().join("train"));
    println!(
        "     trained {} episodes, seed {}, in {:.0}s",
        cfg.episodes,
        cfg.seed,
        start.elapsed().as_secs_f64()
    );
    match trained {
        Ok(t) => {
            let ck = t.checkpoint;
            let out = work.path().join("studies");
            checks.push(check("training-efficacy", || {
                heatmap(&ck, &out.join("heatmap"))
            }));
            checks.push(check("optimality-tracking", || {
                bell(&ck, &out.join("bell"))
            }));
            checks.push(check("degree-study", || degree(&ck, &out.join("degree"))));
            checks.push(check("improvement", || {
                improvement(&ck, &out.join("improvement"))
            }));
        }
        Err(e) => {
            for name in [
                "training-efficacy",
                "optimality-tracking",
                "degree-study",
                "improvement",
            ] {
                checks.push(check(name, || (false, format!("training failed: {e}"))));
            }
        }
    }

    let failed = checks.iter().filter(|c| !c.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
