//! Fixed points, Routh-Hurwitz tests and local stability classification.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigenvalues_small, spectral_abscissa};
use crate::error::{Error, Result};
use crate::jacobian::{jacobian, subsystem_rhs, Dims};
use crate::linalg::Matrix;
use crate::model::{opinion_index, ModelParams, SystemState};
use crate::scalar::Scalar;

/// Tuning knobs for fixed-point search and classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StabilityOptions<T> {
    /// Max-norm residual below which a point counts as a fixed point.
    pub newton_tol: T,
    /// Half-width of the band around zero treated as marginal.
    pub margin: T,
    pub max_newton_iterations: usize,
    pub max_halvings: usize,
}

impl<T: Scalar> Default for StabilityOptions<T> {
    fn default() -> Self {
        StabilityOptions {
            newton_tol: T::lit(1e-10),
            margin: T::lit(1e-9),
            max_newton_iterations: 100,
            max_halvings: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FixedPoint<T> {
    pub state: SystemState<T>,
    pub residual_norm: T,
    pub dimensionality: Dims,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

/// One inequality of a Routh-Hurwitz test with its evaluated left-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RhCondition<T> {
    pub name: String,
    pub lhs: T,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RouthHurwitz<T> {
    pub trace: T,
    pub det: T,
    /// Principal 2x2 minors `[J1, J2, J3]` on index sets {2,3}, {1,3}, {1,2} (3x3 only).
    pub minors: Vec<T>,
    pub conditions: Vec<RhCondition<T>>,
    pub stable: bool,
}

/// Stability test for a 2x2 Jacobian: `det > 0` and `trace < 0`.
pub fn routh_hurwitz_2d<T: Scalar>(j: &Matrix<T>) -> Result<RouthHurwitz<T>> {
    if j.dim() != 2 {
        return Err(Error::WrongDims(format!(
            "expected 2x2, got {0}x{0}",
            j.dim()
        )));
    }
    let (trace, det) = (j.trace(), j.det());
    let conditions = vec![
        RhCondition {
            name: "det > 0".into(),
            lhs: det,
            holds: det > T::zero(),
        },
        RhCondition {
            name: "trace < 0".into(),
            lhs: trace,
            holds: trace < T::zero(),
        },
    ];
    let stable = conditions.iter().all(|c| c.holds);
    Ok(RouthHurwitz {
        trace,
        det,
        minors: Vec::new(),
        conditions,
        stable,
    })
}

/// Stability test for a 3x3 Jacobian:
/// `det < 0`, `trace < 0`, `J1 + J2 + J3 > 0`, `-trace (J1 + J2 + J3) + det > 0`.
pub fn routh_hurwitz_3d<T: Scalar>(j: &Matrix<T>) -> Result<RouthHurwitz<T>> {
    if j.dim() != 3 {
        return Err(Error::WrongDims(format!(
            "expected 3x3, got {0}x{0}",
            j.dim()
        )));
    }
    let (trace, det) = (j.trace(), j.det());
    let minors = vec![
        j.principal(&[1, 2]).det(),
        j.principal(&[0, 2]).det(),
        j.principal(&[0, 1]).det(),
    ];
    let sum = minors[0] + minors[1] + minors[2];
    let last = -trace * sum + det;
    let zero = T::zero();
    let conditions = vec![
        RhCondition {
            name: "det < 0".into(),
            lhs: det,
            holds: det < zero,
        },
        RhCondition {
            name: "trace < 0".into(),
            lhs: trace,
            holds: trace < zero,
        },
        RhCondition {
            name: "J1 + J2 + J3 > 0".into(),
            lhs: sum,
            holds: sum > zero,
        },
        RhCondition {
            name: "-trace (J1 + J2 + J3) + det > 0".into(),
            lhs: last,
            holds: last > zero,
        },
    ];
    let stable = conditions.iter().all(|c| c.holds);

    // Standard form on lambda^3 + c2 lambda^2 + c1 lambda + c0.
    let (c2, c1, c0) = (-trace, sum, -det);
    let standard = c2 > zero && c0 > zero && c2 * c1 - c0 > zero;
    debug_assert_eq!(standard, stable, "RH forms disagree on {j:?}");

    Ok(RouthHurwitz {
        trace,
        det,
        minors,
        conditions,
        stable,
    })
}

/// Closed-form trace/determinant expressions at the midpoint equilibrium
/// (`x = 0`, `s = 0`), kept for comparison with the numerical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MidpointReference<T> {
    pub det_formula: T,
    pub trace_formula: T,
}

/// `det = -2 v alpha1 (a1 - 1) + 2 v a2 gamma N`, `trace = -alpha1 + 2 v (a1 - 1)`.
pub fn midpoint_reference_2d<T: Scalar>(params: &ModelParams<T>, n: T) -> MidpointReference<T> {
    let two_v = T::lit(2.0) * params.v;
    let am1 = params.a1 - T::one();
    MidpointReference {
        det_formula: -two_v * params.alpha1 * am1 + two_v * params.a2 * params.gamma_f * n,
        trace_formula: -params.alpha1 + two_v * am1,
    }
}

/// Published 3D expressions for the `a2 = 1`, `a3 = -1` midpoint case, evaluated
/// verbatim (including the repeated `theta_E` factor). Not asserted equal to the
/// numerical determinant.
pub fn midpoint_reference_3d<T: Scalar>(params: &ModelParams<T>, n: T) -> MidpointReference<T> {
    let two = T::lit(2.0);
    let (v, a1, g, th) = (params.v, params.a1, params.gamma_f, params.theta_e);
    let (al1, al2) = (params.alpha1, params.alpha2);
    let am1 = a1 - T::one();
    let det = (-al2 - two * v * n * th) * (-two * v * al1 * am1 + two * g * n * v)
        - two * v * (-two * g * n * n * th * v * th + al1 * th * (two * v * n * am1));
    let trace = -two * v * al1 * am1 + two * v * g * n - al2 - two * v * n * th;
    MidpointReference {
        det_formula: det,
        trace_formula: trace,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Eigenvalue<T> {
    pub re: T,
    pub im: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StabilityReport<T> {
    pub fixed_point: FixedPoint<T>,
    pub jacobian: Vec<Vec<T>>,
    pub eigenvalues: Vec<Eigenvalue<T>>,
    pub trace: T,
    pub det: T,
    pub routh_hurwitz: Option<RouthHurwitz<T>>,
    pub classification: Classification,
    pub margin: T,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub midpoint_reference: Option<MidpointReference<T>>,
}

/// Classifies a spectrum: stable iff every real part is below `-margin`.
pub fn classify_spectrum<T: Scalar>(eigs: &[Complex<T>], margin: T) -> Classification {
    let top = spectral_abscissa(eigs);
    if top < -margin {
        Classification::Stable
    } else if top <= margin {
        Classification::Marginal
    } else {
        Classification::Unstable
    }
}

fn max_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, c| acc.max(c.abs()))
}

fn state_from_reduced<T: Scalar>(z: &[T], template: &SystemState<T>) -> SystemState<T> {
    let mut st = *template;
    st.x = z[0];
    st.pi_f = z[1];
    st.pi_e = if z.len() > 2 { z[2] } else { T::zero() };
    st
}

/// Max-norm residual of the reduced system, or `None` if it cannot be evaluated
/// (overflow or `x` outside `[-1, 1]`).
fn residual<T: Scalar>(
    params: &ModelParams<T>,
    z: &[T],
    template: &SystemState<T>,
    dims: Dims,
) -> Option<(Vec<T>, T)> {
    if z[0].abs() > T::one() || z.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let st = state_from_reduced(z, template);
    let r = subsystem_rhs(params, &st, dims).ok()?;
    let norm = max_norm(&r);
    norm.is_finite().then_some((r, norm))
}

/// Damped Newton from `z`; returns the best iterate and its residual norm.
fn damped_newton<T: Scalar>(
    params: &ModelParams<T>,
    mut z: Vec<T>,
    template: &SystemState<T>,
    dims: Dims,
    opts: &StabilityOptions<T>,
) -> Option<(Vec<T>, T)> {
    let (mut r, mut norm) = residual(params, &z, template, dims)?;
    for _ in 0..opts.max_newton_iterations {
        if norm < opts.newton_tol {
            break;
        }
        let st = state_from_reduced(&z, template);
        let Ok(j) = jacobian(params, &st, dims) else {
            break;
        };
        let rhs: Vec<T> = r.iter().map(|c| -*c).collect();
        let Some(delta) = j.solve(&rhs) else {
            break;
        };
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<T> = z
                .iter()
                .zip(&delta)
                .map(|(a, d)| *a + lambda * *d)
                .collect();
            if let Some((rc, nc)) = residual(params, &cand, template, dims) {
                if nc < norm {
                    z = cand;
                    r = rc;
                    norm = nc;
                    accepted = true;
                    break;
                }
            }
            lambda = lambda / T::lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    Some((z, norm))
}

/// Scalar reduction of the fixed-point problem: with `pi_F` and `pi_E` at their
/// nullclines, `dx/dt = 0` iff `tanh(s(x)) = x`.
pub fn reduced_core<T: Scalar>(params: &ModelParams<T>, n: T, x: T) -> T {
    let pi_f = params.gamma_f * n * (T::one() - x) / params.alpha1;
    let s = params.a0 + params.a1 * x + params.a2 * pi_f;
    s.tanh() - x
}

fn nullcline_state<T: Scalar>(params: &ModelParams<T>, n: T, x: T) -> SystemState<T> {
    let pi_f = params.gamma_f * n * (T::one() - x) / params.alpha1;
    SystemState::new(x, pi_f, T::zero(), n)
}

fn bisect<T: Scalar>(params: &ModelParams<T>, n: T, mut lo: T, mut hi: T) -> T {
    let mut f_lo = reduced_core(params, n, lo);
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = reduced_core(params, n, mid);
        if f_mid.is_zero() {
            return mid;
        }
        if (f_mid < T::zero()) == (f_lo < T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Roots of the scalar core on a uniform grid over `[-1, 1]`, refined by bisection.
fn bracketed_roots<T: Scalar>(params: &ModelParams<T>, n: T, grid: usize) -> Vec<T> {
    let step = T::lit(2.0) / T::from_usize(grid - 1).unwrap();
    let xs: Vec<T> = (0..grid)
        .map(|k| (-T::one() + step * T::from_usize(k).unwrap()).min(T::one()))
        .collect();
    let hs: Vec<T> = xs.iter().map(|&x| reduced_core(params, n, x)).collect();
    let mut roots = Vec::new();
    for k in 0..grid {
        if hs[k].is_zero() {
            roots.push(xs[k]);
        } else if k + 1 < grid
            && !hs[k + 1].is_zero()
            && (hs[k] < T::zero()) != (hs[k + 1] < T::zero())
        {
            roots.push(bisect(params, n, xs[k], xs[k + 1]));
        }
    }
    roots
}

fn check_dims(dims: Dims) -> Result<()> {
    if dims == Dims::FourD {
        return Err(Error::WrongDims(
            "the 4D system has no finite fixed point while the fleet grows; use TwoD or ThreeD"
                .into(),
        ));
    }
    Ok(())
}

fn polish<T: Scalar>(
    params: &ModelParams<T>,
    start: &SystemState<T>,
    dims: Dims,
    opts: &StabilityOptions<T>,
) -> Option<FixedPoint<T>> {
    let z0 = start.to_array()[..dims.size()].to_vec();
    let (z, norm) = damped_newton(params, z0, start, dims, opts)?;
    (norm < opts.newton_tol).then(|| FixedPoint {
        state: state_from_reduced(&z, start),
        residual_norm: norm,
        dimensionality: dims,
    })
}

/// Finds a fixed point of the 2D or 3D fixed-fleet system near `guess`.
///
/// Damped Newton runs first; if it stalls, the scalar core `tanh(s(x)) - x` is
/// bracketed on `[-1, 1]`, the root nearest `guess.x` is bisected and polished.
pub fn find_fixed_point<T: Scalar>(
    params: &ModelParams<T>,
    guess: &SystemState<T>,
    dims: Dims,
    opts: &StabilityOptions<T>,
) -> Result<FixedPoint<T>> {
    check_dims(dims)?;
    let mut start = *guess;
    if dims == Dims::TwoD {
        start.pi_e = T::zero();
    }
    if let Some(fp) = polish(params, &start, dims, opts) {
        return Ok(fp);
    }

    let roots = bracketed_roots(params, guess.n, 2001);
    let nearest = roots.iter().copied().min_by(|a, b| {
        (*a - guess.x)
            .abs()
            .partial_cmp(&(*b - guess.x).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let Some(x) = nearest else {
        return Err(Error::NoConvergence(
            "no sign change of tanh(s) - x on [-1, 1]".into(),
        ));
    };
    polish(params, &nullcline_state(params, guess.n, x), dims, opts).ok_or_else(|| {
        Error::NoConvergence(format!(
            "Newton and bisection both failed to reach residual {} near x = {}",
            opts.newton_tol, x
        ))
    })
}

/// All fixed points found by scanning the scalar core on `grid` points and polishing
/// each bracketed root with Newton. Sorted by `x`.
pub fn find_all_fixed_points<T: Scalar>(
    params: &ModelParams<T>,
    n: T,
    dims: Dims,
    grid: usize,
    opts: &StabilityOptions<T>,
) -> Result<Vec<FixedPoint<T>>> {
    check_dims(dims)?;
    if grid < 2 {
        return Err(Error::InvalidConfig(
            "grid must have at least 2 points".into(),
        ));
    }
    let mut found: Vec<FixedPoint<T>> = Vec::new();
    for x in bracketed_roots(params, n, grid) {
        let fp = polish(params, &nullcline_state(params, n, x), dims, opts).ok_or_else(|| {
            Error::NoConvergence(format!("could not polish bracketed root x = {x}"))
        })?;
        let dup = found
            .iter()
            .any(|f| (f.state.x - fp.state.x).abs() < T::lit(1e-9));
        if !dup {
            found.push(fp);
        }
    }
    found.sort_by(|a, b| a.state.x.partial_cmp(&b.state.x).unwrap());
    Ok(found)
}

fn midpoint_reference<T: Scalar>(
    params: &ModelParams<T>,
    fp: &FixedPoint<T>,
) -> Option<MidpointReference<T>> {
    let tiny = T::lit(1e-12);
    let s = opinion_index(params, &fp.state);
    if fp.state.x.abs() > tiny || s.abs() > tiny {
        return None;
    }
    match fp.dimensionality {
        Dims::TwoD => Some(midpoint_reference_2d(params, fp.state.n)),
        Dims::ThreeD if params.a2 == T::one() && params.a3 == -T::one() => {
            Some(midpoint_reference_3d(params, fp.state.n))
        }
        _ => None,
    }
}

/// Jacobian, spectrum, Routh-Hurwitz verdict and classification at a fixed point.
pub fn classify_equilibrium<T: Scalar>(
    params: &ModelParams<T>,
    fp: &FixedPoint<T>,
    opts: &StabilityOptions<T>,
) -> Result<StabilityReport<T>> {
    let dims = fp.dimensionality;
    let j = jacobian(params, &fp.state, dims)?;
    let eigs = eigenvalues_small(&j)?;
    let classification = classify_spectrum(&eigs, opts.margin);
    let rh = match dims {
        Dims::TwoD => Some(routh_hurwitz_2d(&j)?),
        Dims::ThreeD => Some(routh_hurwitz_3d(&j)?),
        Dims::FourD => None,
    };
    if let Some(rh) = &rh {
        let disagree = match classification {
            Classification::Stable => !rh.stable,
            Classification::Unstable => rh.stable,
            Classification::Marginal => false,
        };
        if disagree {
            return Err(Error::VerdictMismatch(format!(
                "eigenvalues say {classification:?}, Routh-Hurwitz says stable = {}",
                rh.stable
            )));
        }
    }
    Ok(StabilityReport {
        fixed_point: *fp,
        jacobian: j.rows(),
        eigenvalues: eigs
            .iter()
            .map(|e| Eigenvalue { re: e.re, im: e.im })
            .collect(),
        trace: j.trace(),
        det: j.det(),
        routh_hurwitz: rh,
        classification,
        margin: opts.margin,
        midpoint_reference: midpoint_reference(params, fp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::GrowthPolicy;

    fn opts() -> StabilityOptions<f64> {
        StabilityOptions::default()
    }

    /// Positive root of tanh(a x) = x by plain bisection on [0.1, 1].
    fn herd_root(a: f64) -> f64 {
        let (mut lo, mut hi) = (0.1, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (a * mid).tanh() - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn laissez_faire(a1: f64) -> ModelParams<f64> {
        base(0.0, a1, 0.0, 0.0, GrowthPolicy::frozen())
    }

    #[test]
    fn midpoint_fixed_point() {
        let (p, _) = midpoint_case(1.5);
        let guess = SystemState::new(0.05, 290.0, 0.3, 10.0);
        let fp = find_fixed_point(&p, &guess, Dims::ThreeD, &opts()).unwrap();
        assert!(fp.state.x.abs() < 1e-12);
        assert!((fp.state.pi_f - 300.0).abs() < 1e-9);
        assert!(fp.state.pi_e.abs() < 1e-12);
        assert!(fp.residual_norm < 1e-10);
    }

    #[test]
    fn weak_herding_has_single_fixed_point() {
        let p = laissez_faire(0.5);
        let all = find_all_fixed_points(&p, 10.0, Dims::ThreeD, 1001, &opts()).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].state.x.abs() < 1e-12);
    }

    #[test]
    fn strong_herding_has_three_fixed_points() {
        let p = laissez_faire(1.5);
        let xbar = herd_root(1.5);
        let all = find_all_fixed_points(&p, 10.0, Dims::ThreeD, 1001, &opts()).unwrap();
        let xs: Vec<f64> = all.iter().map(|f| f.state.x).collect();
        assert_eq!(xs.len(), 3, "{xs:?}");
        assert!((xs[0] + xbar).abs() < 1e-10);
        assert!(xs[1].abs() < 1e-12);
        assert!((xs[2] - xbar).abs() < 1e-10);
        // odd symmetry of the fixed point set
        assert!((xs[0] + xs[2]).abs() < 1e-10);
    }

    #[test]
    fn newton_failure_falls_back_to_bracketing() {
        let p = laissez_faire(1.5);
        // guess at the boundary where the Newton direction is poor
        let guess = SystemState::new(0.999, 0.0, 5.0, 10.0);
        let fp = find_fixed_point(&p, &guess, Dims::ThreeD, &opts()).unwrap();
        assert!((fp.state.x - herd_root(1.5)).abs() < 1e-9);
    }

    #[test]
    fn four_d_is_rejected() {
        let p = laissez_faire(1.5);
        let err = find_fixed_point(
            &p,
            &SystemState::new(0.0, 0.0, 0.0, 10.0),
            Dims::FourD,
            &opts(),
        )
        .unwrap_err();
        assert_eq!(err.name(), "WrongDims");
    }

    #[test]
    fn rh_2d_examples() {
        let rh = routh_hurwitz_2d(&Matrix::diagonal(&[-1.0, -1.0])).unwrap();
        assert_eq!((rh.det, rh.trace, rh.stable), (1.0, -2.0, true));
        let rot = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let rh = routh_hurwitz_2d(&rot).unwrap();
        assert_eq!((rh.det, rh.trace, rh.stable), (1.0, 0.0, false));
        assert!(routh_hurwitz_2d(&Matrix::<f64>::identity(3)).is_err());
    }

    #[test]
    fn rh_2d_midpoint_symbolic_values() {
        // v = 0.6, alpha1 = 0.03, a1 = 0.5, a2 = 1, gamma N = 9
        let p = base(-300.0, 0.5, 1.0, 0.0, GrowthPolicy::frozen());
        let fp = find_fixed_point(
            &p,
            &SystemState::new(0.0, 300.0, 0.0, 10.0),
            Dims::TwoD,
            &opts(),
        )
        .unwrap();
        let report = classify_equilibrium(&p, &fp, &opts()).unwrap();
        let reference = report.midpoint_reference.unwrap();
        assert!((reference.det_formula - (0.018 + 10.8)).abs() < 1e-12);
        assert!((reference.trace_formula + 0.63).abs() < 1e-12);
        assert!((report.det - reference.det_formula).abs() < 1e-12);
        assert!((report.trace - reference.trace_formula).abs() < 1e-12);
        assert_eq!(report.classification, Classification::Stable);
        assert!(report.routh_hurwitz.unwrap().stable);
    }

    #[test]
    fn rh_3d_examples() {
        let rh = routh_hurwitz_3d(&Matrix::diagonal(&[-1.0, -2.0, -3.0])).unwrap();
        assert_eq!(rh.det, -6.0);
        assert_eq!(rh.trace, -6.0);
        assert_eq!(rh.minors, vec![6.0, 3.0, 2.0]);
        assert_eq!(rh.conditions[3].lhs, 60.0);
        assert!(rh.stable);

        let rh = routh_hurwitz_3d(&Matrix::diagonal(&[1.0, -2.0, -3.0])).unwrap();
        assert_eq!(rh.det, 6.0);
        assert!(!rh.conditions[0].holds);
        assert!(!rh.stable);
    }

    #[test]
    fn rh_3d_midpoint_agrees_with_spectrum() {
        for a1 in [0.5, 1.0, 1.5, 2.5] {
            let (p, st) = midpoint_case(a1);
            let j = jacobian(&p, &st, Dims::ThreeD).unwrap();
            let rh = routh_hurwitz_3d(&j).unwrap();
            let eigs = eigenvalues_small(&j).unwrap();
            let stable = spectral_abscissa(&eigs) < 0.0;
            assert_eq!(rh.stable, stable, "a1 = {a1}");
        }
    }

    #[test]
    fn midpoint_3d_reference_is_reported_but_not_asserted() {
        let (p, st) = midpoint_case(1.5);
        let fp = find_fixed_point(&p, &st, Dims::ThreeD, &opts()).unwrap();
        let report = classify_equilibrium(&p, &fp, &opts()).unwrap();
        let r = report.midpoint_reference.expect("midpoint case");
        assert!(r.det_formula.is_finite() && r.trace_formula.is_finite());
    }

    #[test]
    fn laissez_faire_classification() {
        let p = laissez_faire(0.5);
        let fp = find_fixed_point(
            &p,
            &SystemState::new(0.1, 280.0, 0.0, 10.0),
            Dims::ThreeD,
            &opts(),
        )
        .unwrap();
        let r = classify_equilibrium(&p, &fp, &opts()).unwrap();
        assert_eq!(r.classification, Classification::Stable);

        let p = laissez_faire(1.5);
        let all = find_all_fixed_points(&p, 10.0, Dims::ThreeD, 1001, &opts()).unwrap();
        let classes: Vec<_> = all
            .iter()
            .map(|fp| {
                classify_equilibrium(&p, fp, &opts())
                    .unwrap()
                    .classification
            })
            .collect();
        assert_eq!(
            classes,
            vec![
                Classification::Stable,
                Classification::Unstable,
                Classification::Stable
            ]
        );
    }

    #[test]
    fn four_d_report_uses_fd_and_no_rh() {
        let p = base(0.0, 0.5, 0.0, 0.0, GrowthPolicy::frozen());
        let fp = FixedPoint {
            state: SystemState::new(0.0, 300.0, 0.0, 10.0),
            residual_norm: 0.0,
            dimensionality: Dims::FourD,
        };
        let r = classify_equilibrium(&p, &fp, &opts()).unwrap();
        assert!(r.routh_hurwitz.is_none());
        assert_eq!(r.jacobian.len(), 4);
        // dN/dt = 0 contributes a zero eigenvalue
        assert_eq!(r.classification, Classification::Marginal);
    }
}
