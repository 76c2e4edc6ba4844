//! Exit criteria, one line per criterion. Runs as a plain binary so each
//! criterion reports even when an earlier one fails; the process exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use nevdyn::eigen::eigenvalues_small;
use nevdyn::integrator::{integrate, IntegrationConfig, Method};
use nevdyn::jacobian::{jacobian_analytic_3d, jacobian_fd, Dims};
use nevdyn::linalg::Matrix;
use nevdyn::model::{x_rate, x_rate_tanh_form, GrowthPolicy, ModelParams, PiWeights, SystemState};
use nevdyn::scenarios::{preset, run_scenario, Regime};
use nevdyn::stability::{
    classify_spectrum, find_fixed_point, routh_hurwitz_3d, Classification, StabilityOptions,
};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn params(a0: f64, a1: f64, a2: f64, a3: f64) -> ModelParams<f64> {
    ModelParams {
        a0,
        a1,
        a2,
        a3,
        v: 0.6,
        gamma_f: 0.9,
        theta_e: 0.2,
        alpha1: 0.03,
        alpha2: 0.07,
        growth: GrowthPolicy::Fixed { g: 0.0 },
        pi_weights: PiWeights::default(),
        opinion_cap: 500.0,
    }
}

/// Positive root of `tanh(a1 x) = x`, by bisection.
fn herd_root(a1: f64) -> f64 {
    let (mut lo, mut hi) = (1e-3, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (a1 * mid).tanh() > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn form_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = ModelParams {
            v: rng.gen_range(0.05..3.0),
            ..params(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(-1.0..0.0),
            )
        };
        let st = SystemState::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(0.0..10.0),
            rng.gen_range(-5.0..5.0),
            10.0,
        );
        let s = p.a0 + p.a1 * st.x + p.a2 * st.pi_f + p.a3 * st.pi_e;
        let oracle = p.v * ((1.0 - st.x) * s.exp() - (1.0 + st.x) * (-s).exp());
        let exp_form = x_rate(&p, &st).map_err(|e| e.to_string())?;
        let tanh_form = x_rate_tanh_form(&p, &st).map_err(|e| e.to_string())?;
        for (a, b) in [(exp_form, tanh_form), (oracle, tanh_form)] {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("10000 points, worst relative gap {worst:.2e}"))
    } else {
        Err(format!("worst relative gap {worst:.2e} exceeds 1e-10"))
    }
}

fn jacobian_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = params(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..3.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(-1.0..0.0),
        );
        let st = SystemState::new(
            rng.gen_range(-0.95..0.95),
            rng.gen_range(0.0..5.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(1.0..20.0),
        );
        let a = jacobian_analytic_3d(&p, &st).map_err(|e| e.to_string())?;
        let fd = jacobian_fd(&p, &st, Dims::ThreeD).map_err(|e| e.to_string())?;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[(i, j)] - fd[(i, j)]).abs() / a[(i, j)].abs().max(1.0));
            }
        }
        let tn = p.theta_e * st.n;
        let row3 = [tn * a[(0, 0)], tn * a[(0, 1)], tn * a[(0, 2)] - p.alpha2];
        if (0..3).any(|k| a[(2, k)] != row3[k]) {
            return Err(format!(
                "row 3 is not theta_E N row 1 + [0, 0, -alpha2] at {st:?}"
            ));
        }
        if a[(1, 2)] != 0.0 {
            return Err(format!("J[2][3] = {} at {st:?}", a[(1, 2)]));
        }
    }
    if worst <= 1e-6 {
        Ok(format!(
            "100 states, worst relative gap {worst:.2e}; structure exact"
        ))
    } else {
        Err(format!("worst relative gap {worst:.2e} exceeds 1e-6"))
    }
}

fn midpoint_fixed_point() -> Outcome {
    let p = params(-300.0, 1.5, 1.0, -1.0);
    let guess = SystemState::new(0.05, 290.0, 0.5, 10.0);
    let fp = find_fixed_point(&p, &guess, Dims::ThreeD, &StabilityOptions::default())
        .map_err(|e| e.to_string())?;
    let st = fp.state;
    let off = st.x.abs().max((st.pi_f - 300.0).abs()).max(st.pi_e.abs());
    if fp.residual_norm >= 1e-10 || off > 1e-8 {
        return Err(format!(
            "solver returned {st:?}, residual {:.2e}",
            fp.residual_norm
        ));
    }
    let traj = integrate(
        &p,
        &st,
        &IntegrationConfig::fixed(0.0, 100.0, 0.01, Method::Rk4),
    )
    .map_err(|e| e.to_string())?;
    let drift = traj
        .records
        .iter()
        .map(|r| {
            (r.x - st.x)
                .abs()
                .max((r.pi_f - st.pi_f).abs())
                .max((r.pi_e - st.pi_e).abs())
        })
        .fold(0.0, f64::max);
    if drift < 1e-6 {
        Ok(format!(
            "residual {:.2e}, drift over 100 time units {drift:.2e}",
            fp.residual_norm
        ))
    } else {
        Err(format!("drift {drift:.2e} over 100 time units"))
    }
}

/// `P D P^-1` with `D` diagonal or holding a `[[a, b], [-b, a]]` block.
fn constructed(rng: &mut ChaCha8Rng) -> (Matrix<f64>, bool) {
    let mut re = || {
        let m = rng.gen_range(0.1..3.0);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    };
    let (r0, r1, r2) = (re(), re(), re());
    let mut d = Matrix::zeros(3);
    d[(0, 0)] = r0;
    d[(1, 1)] = r1;
    let stable;
    if rng.gen_bool(0.5) {
        let im = rng.gen_range(0.1..3.0);
        d[(1, 2)] = im;
        d[(2, 1)] = -im;
        d[(2, 2)] = r1;
        stable = r0 < 0.0 && r1 < 0.0;
    } else {
        d[(2, 2)] = r2;
        stable = r0 < 0.0 && r1 < 0.0 && r2 < 0.0;
    }
    loop {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let p = Matrix::from_rows(&rows);
        if p.det().abs() < 0.25 {
            continue;
        }
        return (p.mul(&d).mul(&p.inverse().unwrap()), stable);
    }
}

fn routh_hurwitz_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut stable_count = 0;
    for k in 0..1000 {
        let (j, stable) = constructed(&mut rng);
        let rh = routh_hurwitz_3d(&j).map_err(|e| e.to_string())?;
        let eigs: Vec<Complex<f64>> = eigenvalues_small(&j).map_err(|e| e.to_string())?;
        let by_eigs = classify_spectrum(&eigs, 1e-9) == Classification::Stable;
        if rh.stable != stable || by_eigs != stable {
            return Err(format!(
                "matrix {k}: constructed stable = {stable}, RH = {}, eigenvalues = {by_eigs}",
                rh.stable
            ));
        }
        stable_count += stable as usize;
    }
    Ok(format!(
        "1000 matrices ({stable_count} stable), no disagreement"
    ))
}

fn scenario_one() -> Outcome {
    let xbar = herd_root(1.5);
    let strong = preset("S1_strong").map_err(|e| e.to_string())?;
    let (_, down) = run_scenario(&strong).map_err(|e| e.to_string())?;
    let mut mirrored = strong.clone();
    mirrored.initial.x = 0.1;
    let (_, up) = run_scenario(&mirrored).map_err(|e| e.to_string())?;
    let (_, weak) =
        run_scenario(&preset("S1_weak").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let detail = format!(
        "x_bar = {xbar:.6}; strong x(200) = {:.9}, mirrored {:.9}, weak {:.2e}",
        down.x_terminal, up.x_terminal, weak.x_terminal
    );
    let ok = down.regime == Regime::TFVDominant
        && (down.x_terminal + xbar).abs() < 1e-3
        && weak.x_terminal.abs() < 1e-3
        && (up.x_terminal - xbar).abs() < 1e-6
        && (up.x_terminal + down.x_terminal).abs() < 1e-6;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario_two() -> Outcome {
    let (traj, _) = run_scenario(&preset("S2_one_sided").map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let horizon = traj.config.t_end - traj.config.t0;
    let early = traj
        .records
        .iter()
        .find(|r| r.x > 0.9)
        .map(|r| r.t)
        .filter(|&t| t <= traj.config.t0 + 0.1 * horizon);

    let (peak_idx, peak) =
        traj.records
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, r)| {
                if r.pi_f > acc.1 {
                    (i, r.pi_f)
                } else {
                    acc
                }
            });
    let after = &traj.records[peak_idx..];
    let rises = after.windows(2).filter(|w| w[1].pi_f > w[0].pi_f).count();
    let peak_before_end = peak_idx + 1 < traj.records.len();
    let monotone = peak_before_end && rises == 0;

    let pi_e_20 = traj.at_or_before(20.0).map(|r| r.pi_e).unwrap_or(f64::NAN);
    let pi_e_end = traj.last().unwrap().pi_e;
    let growth = pi_e_end / pi_e_20;

    // first local maximum and the later minimum, for the report
    let first_peak = traj
        .records
        .windows(2)
        .position(|w| w[1].pi_f < w[0].pi_f)
        .map(|i| &traj.records[i]);
    let trough = first_peak.and_then(|fp| {
        traj.records
            .iter()
            .filter(|r| r.t >= fp.t)
            .min_by(|a, b| a.pi_f.partial_cmp(&b.pi_f).unwrap())
    });
    let mut detail = format!(
        "x > 0.9 at t = {}; pi_F max {peak:.4} at t = {:.2}",
        early.map_or("never within 10% of horizon".to_string(), |t| format!(
            "{t:.3}"
        )),
        traj.records[peak_idx].t
    );
    if let (Some(fp), Some(tr)) = (first_peak, trough) {
        detail += &format!(
            " (first local peak {:.4} at t = {:.2}, falls to {:.4} at t = {:.2}, then rises)",
            fp.pi_f, fp.t, tr.pi_f, tr.t
        );
    }
    detail += &format!("; pi_E(200) / pi_E(20) = {growth:.3e}");
    if early.is_some() && monotone && growth > 100.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario_three() -> Outcome {
    let mut regimes = Vec::new();
    let mut detail = Vec::new();
    for name in ["S3_low", "S3_mid", "S3_high"] {
        let spec = preset(name).map_err(|e| e.to_string())?;
        let (_, d) = run_scenario(&spec).map_err(|e| e.to_string())?;
        detail.push(format!(
            "a0 = {}: x(200) = {:.6} {}",
            spec.params.a0, d.x_terminal, d.regime
        ));
        regimes.push(d.regime);
    }
    let ranks: Vec<i8> = regimes.iter().filter_map(|r| r.rank()).collect();
    let monotone = ranks.len() == regimes.len() && ranks.windows(2).all(|w| w[1] >= w[0]);
    let mut distinct = regimes.clone();
    distinct.dedup();
    let detail = format!(
        "{}; monotone = {monotone}, distinct regimes = {}",
        detail.join(", "),
        distinct.len()
    );
    if monotone && distinct.len() >= 2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn macro_regulation() -> Outcome {
    let (fixed, fixed_d) = run_scenario(&preset("Macro_fixed").map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let (reg, reg_d) = run_scenario(&preset("Macro_regulated").map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let by_time: HashMap<u64, f64> = fixed.records.iter().map(|r| (r.t.to_bits(), r.n)).collect();
    let grid = reg.config.base_grid().len();
    let mut compared = 0;
    for r in &reg.records {
        if let Some(&n_fix) = by_time.get(&r.t.to_bits()) {
            compared += 1;
            if r.n > n_fix {
                return Err(format!("N_reg = {} > N_fix = {n_fix} at t = {}", r.n, r.t));
            }
        }
    }
    if compared < grid {
        return Err(format!(
            "only {compared} common times, expected at least {grid}"
        ));
    }
    let detail = format!(
        "{compared} common times; N(200) {:.1} vs {:.4e}; peak Pi {:.4} vs {:.4e}",
        reg_d.n_terminal, fixed_d.n_terminal, reg_d.peak_pi, fixed_d.peak_pi
    );
    if reg_d.peak_pi < fixed_d.peak_pi {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn integrator_order() -> Outcome {
    // no sources and x = 0 pinned: pi_F(t) = pi_F(0) exp(-alpha1 t)
    let p = ModelParams {
        gamma_f: 0.0,
        theta_e: 0.0,
        alpha1: 0.4,
        ..params(0.0, 0.5, 0.0, 0.0)
    };
    let init = SystemState::new(0.0, 2.0, 0.0, 10.0);
    let exact = 2.0 * (-0.4f64 * 5.0).exp();
    let err = |dt: f64| -> Result<f64, String> {
        let cfg = IntegrationConfig::fixed(0.0, 5.0, dt, Method::Rk4);
        let traj = integrate(&p, &init, &cfg).map_err(|e| e.to_string())?;
        Ok((traj.last().unwrap().pi_f - exact).abs())
    };
    let (e1, e2) = (err(0.25)?, err(0.125)?);
    let order = (e1 / e2).log2();

    let spec = preset("S1_weak").map_err(|e| e.to_string())?;
    let run = |method| -> Result<SystemState<f64>, String> {
        let cfg = IntegrationConfig::fixed(0.0, 200.0, 1e-3, method);
        let traj = integrate(&spec.params, &spec.initial, &cfg).map_err(|e| e.to_string())?;
        Ok(traj.last().unwrap().state())
    };
    let (rk, eu) = (run(Method::Rk4)?, run(Method::Euler)?);
    let gap = rk
        .to_array()
        .iter()
        .zip(eu.to_array())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let detail = format!("RK4 order {order:.3}; Euler vs RK4 terminal gap {gap:.2e}");
    if order >= 3.9 && gap <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_nevdyn");
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &dirs {
        for name in ["S1_strong", "S3_mid"] {
            let status = Command::new(bin)
                .args(["scenario", "--name", name, "--out"])
                .arg(dir.path())
                .env_remove("NEVDYN_OUT")
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{name} exited with {}", status.status));
            }
        }
    }
    let mut compared = 0;
    for name in ["S1_strong", "S3_mid"] {
        for ext in ["csv", "svg"] {
            let file = format!("{name}.{ext}");
            let a = std::fs::read(dirs[0].path().join(&file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(dirs[1].path().join(&file)).map_err(|e| e.to_string())?;
            if a != b || a.is_empty() {
                return Err(format!("{file} differs between runs"));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} artifacts byte-identical across two invocations"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 form equivalence", form_equivalence),
        ("2 Jacobian correctness", jacobian_correctness),
        ("3 midpoint fixed point", midpoint_fixed_point),
        ("4 Routh-Hurwitz soundness", routh_hurwitz_soundness),
        ("5 fixed-fleet herding regimes", scenario_one),
        ("6 one-sided regulation", scenario_two),
        ("7 two-sided regulation over a0", scenario_three),
        ("8 regulated fleet growth", macro_regulation),
        ("9 integrator order", integrator_order),
        ("10 CLI determinism", cli_determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail} ({:.2?})", t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({:.2?})", t.elapsed())
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.2?}",
        criteria.len() - failed,
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
