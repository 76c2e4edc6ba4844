//! Built-in invariant checks run by `nevdyn selfcheck`.
//!
//! Sampling is seeded, so a given build always checks the same points.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigen::eigenvalues_small;
use crate::integrator::{integrate, IntegrationConfig, Method};
use crate::jacobian::{jacobian_analytic_3d, jacobian_fd, Dims};
use crate::linalg::Matrix;
use crate::model::{x_rate, x_rate_tanh_form, GrowthPolicy, ModelParams, PiWeights, SystemState};
use crate::stability::{classify_spectrum, routh_hurwitz_3d, Classification};

const SEED: u64 = 0x6e65_7664;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_params(rng: &mut ChaCha8Rng) -> ModelParams<f64> {
    ModelParams {
        a0: rng.gen_range(-3.0..3.0),
        a1: rng.gen_range(0.0..3.0),
        a2: rng.gen_range(0.0..1.0),
        a3: rng.gen_range(-1.0..0.0),
        v: rng.gen_range(0.1..2.0),
        gamma_f: rng.gen_range(0.0..2.0),
        theta_e: rng.gen_range(0.0..1.0),
        alpha1: rng.gen_range(0.01..0.5),
        alpha2: rng.gen_range(0.01..0.5),
        growth: GrowthPolicy::frozen(),
        pi_weights: PiWeights::default(),
        opinion_cap: 500.0,
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> SystemState<f64> {
    SystemState::new(
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(0.0..5.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(1.0..20.0),
    )
}

/// Exponential and `tanh * cosh` forms of `dx/dt` agree.
pub fn form_equivalence(samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = random_params(&mut rng);
        let st = random_state(&mut rng);
        let (a, b) = match (x_rate(&p, &st), x_rate_tanh_form(&p, &st)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
    }
    CheckOutcome {
        name: "dx/dt exponential vs tanh form",
        passed: worst <= 1e-10,
        detail: format!("{samples} points, worst relative gap {worst:.3e}"),
    }
}

/// Analytic 3D Jacobian against central differences.
pub fn jacobian_matches_fd(samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..samples {
        let p = random_params(&mut rng);
        let mut st = random_state(&mut rng);
        st.x = st.x.clamp(-0.99, 0.99);
        let (Ok(a), Ok(f)) = (
            jacobian_analytic_3d(&p, &st),
            jacobian_fd(&p, &st, Dims::ThreeD),
        ) else {
            failures += 1;
            continue;
        };
        let scale = a.max_abs().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[(i, j)] - f[(i, j)]).abs() / scale);
            }
        }
    }
    CheckOutcome {
        name: "analytic Jacobian vs finite differences",
        passed: failures == 0 && worst <= 1e-6,
        detail: format!(
            "{samples} states, worst relative gap {worst:.3e}, {failures} evaluation failures"
        ),
    }
}

/// Random real matrix with the given spectrum, `P diag(...) P^-1`, where a
/// complex pair `a +- bi` enters as the block `[[a, b], [-b, a]]`.
pub fn matrix_with_spectrum(rng: &mut impl Rng, spectrum: &[Complex<f64>; 3]) -> Matrix<f64> {
    let mut d = Matrix::zeros(3);
    if spectrum[1].im != 0.0 {
        d[(0, 0)] = spectrum[0].re;
        d[(1, 1)] = spectrum[1].re;
        d[(1, 2)] = spectrum[1].im;
        d[(2, 1)] = -spectrum[1].im;
        d[(2, 2)] = spectrum[1].re;
    } else {
        for i in 0..3 {
            d[(i, i)] = spectrum[i].re;
        }
    }
    loop {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let p = Matrix::from_rows(&rows);
        if p.det().abs() < 0.2 {
            continue;
        }
        let inv = p.inverse().unwrap();
        return p.mul(&d).mul(&inv);
    }
}

/// Random spectrum with real parts in `0.1 <= |re| <= 2`.
pub fn random_spectrum(rng: &mut impl Rng) -> [Complex<f64>; 3] {
    let mut re = || {
        let mag = rng.gen_range(0.1..2.0);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    let (r0, r1, r2) = (re(), re(), re());
    if rng.gen_bool(0.5) {
        let im = rng.gen_range(0.1..2.0);
        [
            Complex::new(r0, 0.0),
            Complex::new(r1, im),
            Complex::new(r1, -im),
        ]
    } else {
        [
            Complex::new(r0, 0.0),
            Complex::new(r1, 0.0),
            Complex::new(r2, 0.0),
        ]
    }
}

/// Routh-Hurwitz verdict and the eigenvalue sign test agree on matrices with
/// known spectra.
pub fn routh_hurwitz_agrees(samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut disagreements = 0;
    for _ in 0..samples {
        let spectrum = random_spectrum(&mut rng);
        let j = matrix_with_spectrum(&mut rng, &spectrum);
        let truth = spectrum.iter().all(|l| l.re < 0.0);
        let rh = routh_hurwitz_3d(&j).map(|r| r.stable);
        let eig = eigenvalues_small(&j).map(|e| classify_spectrum(&e, 1e-9));
        match (rh, eig) {
            (Ok(rh), Ok(c)) if rh == truth && (c == Classification::Stable) == truth => {}
            _ => disagreements += 1,
        }
    }
    CheckOutcome {
        name: "Routh-Hurwitz vs eigenvalues",
        passed: disagreements == 0,
        detail: format!("{samples} matrices, {disagreements} disagreements"),
    }
}

/// Observed RK4 order on pure externality decay (`x = 0` is an equilibrium
/// when `a0 = a2 = a3 = 0`, and with no sources `pi_F` decays exponentially).
pub fn rk4_order() -> CheckOutcome {
    let p = ModelParams {
        a0: 0.0,
        a1: 0.5,
        a2: 0.0,
        a3: 0.0,
        v: 0.6,
        gamma_f: 0.0,
        theta_e: 0.0,
        alpha1: 0.5,
        alpha2: 0.07,
        growth: GrowthPolicy::frozen(),
        pi_weights: PiWeights::default(),
        opinion_cap: 500.0,
    };
    let init = SystemState::new(0.0, 1.0, 0.0, 10.0);
    let exact = (-0.5f64 * 4.0).exp();
    let err = |dt: f64| -> Option<f64> {
        let cfg = IntegrationConfig::fixed(0.0, 4.0, dt, Method::Rk4);
        let traj = integrate(&p, &init, &cfg).ok()?;
        Some((traj.last()?.pi_f - exact).abs())
    };
    match (err(0.2), err(0.1)) {
        (Some(e1), Some(e2)) if e2 > 0.0 => {
            let order = (e1 / e2).log2();
            CheckOutcome {
                name: "RK4 convergence order",
                passed: order >= 3.9,
                detail: format!("observed order {order:.3}"),
            }
        }
        _ => CheckOutcome {
            name: "RK4 convergence order",
            passed: false,
            detail: "integration failed".into(),
        },
    }
}

pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        form_equivalence(10_000),
        jacobian_matches_fd(100),
        routh_hurwitz_agrees(1000),
        rk4_order(),
    ]
}
