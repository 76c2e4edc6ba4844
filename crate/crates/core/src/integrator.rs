//! Deterministic time integration of the 3D/4D systems.
//!
//! Steps land on the base grid `t0 + k dt` (the last one on `t_end`). In adaptive
//! mode a base interval that fails the full-step/two-half-steps agreement test is
//! split in halves recursively, down to `dt_min`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobian::jacobian_analytic_4d;
use crate::linalg::Matrix;
use crate::model::{
    aggregate_externality, effective_growth, opinion_index, vector_field, ModelParams, SystemState,
};
use crate::scalar::Scalar;

/// Allowed overshoot of `x` past `+-1` that is clamped instead of reported.
pub const X_OVERSHOOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical 4-stage Runge-Kutta.
    Rk4,
    /// Forward Euler, kept as a cross-check.
    Euler,
    /// 3-stage Radau IIA (order 5, L-stable) solved by Newton iteration. Needed
    /// once fleet growth makes the externality feedback stiff.
    Radau5,
}

fn default_rel_tol<T: Scalar>() -> T {
    T::lit(1e-8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct IntegrationConfig<T> {
    pub t0: T,
    pub t_end: T,
    pub dt: T,
    pub method: Method,
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: T,
    /// Smallest step the adaptive splitter may use; `dt / 1024` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<T>,
}

impl<T: Scalar> IntegrationConfig<T> {
    pub fn fixed(t0: T, t_end: T, dt: T, method: Method) -> Self {
        IntegrationConfig {
            t0,
            t_end,
            dt,
            method,
            adaptive: false,
            rel_tol: default_rel_tol(),
            dt_min: None,
        }
    }

    pub fn adaptive(t0: T, t_end: T, dt: T, method: Method) -> Self {
        IntegrationConfig {
            adaptive: true,
            ..Self::fixed(t0, t_end, dt, method)
        }
    }

    pub fn effective_dt_min(&self) -> T {
        self.dt_min.unwrap_or(self.dt / T::lit(1024.0))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let vals = [self.t0, self.t_end, self.dt, self.rel_tol];
        if vals.iter().any(|v| !v.is_finite()) {
            return bad("integration settings must be finite");
        }
        if self.t_end <= self.t0 {
            return bad("t_end must exceed t0");
        }
        if self.dt <= T::zero() || self.dt > self.t_end - self.t0 {
            return bad("dt must lie in (0, t_end - t0]");
        }
        if self.rel_tol <= T::zero() {
            return bad("rel_tol must be > 0");
        }
        if let Some(m) = self.dt_min {
            if m <= T::zero() || m.is_nan() || m > self.dt {
                return bad("dt_min must lie in (0, dt]");
            }
        }
        Ok(())
    }

    /// Base grid times `t0, t0 + dt, ..., t_end`.
    pub fn base_grid(&self) -> Vec<T> {
        let span = self.t_end - self.t0;
        let steps = (span / self.dt - T::lit(1e-9))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let mut grid: Vec<T> = (0..steps)
            .map(|k| self.t0 + self.dt * T::from_usize(k).unwrap())
            .collect();
        grid.push(self.t_end);
        grid
    }
}

/// One stored sample: state plus derived quantities recomputed from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Record<T> {
    pub t: T,
    pub x: T,
    #[serde(rename = "pi_F")]
    pub pi_f: T,
    #[serde(rename = "pi_E")]
    pub pi_e: T,
    #[serde(rename = "N")]
    pub n: T,
    pub s: T,
    pub g_eff: T,
    #[serde(rename = "Pi")]
    pub pi_total: T,
    /// Set when `pi_E < 0`, which the model permits but is physically suspect.
    #[serde(rename = "neg_pi_E_flag")]
    pub neg_pi_e: bool,
}

impl<T: Scalar> Record<T> {
    pub fn from_state(params: &ModelParams<T>, t: T, state: &SystemState<T>) -> Self {
        Record {
            t,
            x: state.x,
            pi_f: state.pi_f,
            pi_e: state.pi_e,
            n: state.n,
            s: opinion_index(params, state),
            g_eff: effective_growth(params, state),
            pi_total: aggregate_externality(params, state),
            neg_pi_e: state.pi_e < T::zero(),
        }
    }

    pub fn state(&self) -> SystemState<T> {
        SystemState::new(self.x, self.pi_f, self.pi_e, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Trajectory<T> {
    pub params: ModelParams<T>,
    pub config: IntegrationConfig<T>,
    pub records: Vec<Record<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&Record<T>> {
        self.records.last()
    }

    /// Last record with `t <= at`.
    pub fn at_or_before(&self, at: T) -> Option<&Record<T>> {
        let idx = self.records.partition_point(|r| r.t <= at);
        idx.checked_sub(1).map(|i| &self.records[i])
    }

    pub fn column(&self, f: impl Fn(&Record<T>) -> T) -> Vec<T> {
        self.records.iter().map(f).collect()
    }

    pub fn peak_pi(&self) -> Option<T> {
        self.records
            .iter()
            .map(|r| r.pi_total)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: T| a.max(v))))
    }
}

fn axpy<T: Scalar>(y: &SystemState<T>, a: T, d: &[T; 4]) -> SystemState<T> {
    let s = y.to_array();
    SystemState::from_array([
        s[0] + a * d[0],
        s[1] + a * d[1],
        s[2] + a * d[2],
        s[3] + a * d[3],
    ])
}

/// One classical Runge-Kutta step.
pub fn step_rk4<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dt: T,
) -> Result<SystemState<T>> {
    let half = dt / T::lit(2.0);
    let k1 = vector_field(params, state)?.to_array();
    let k2 = vector_field(params, &axpy(state, half, &k1))?.to_array();
    let k3 = vector_field(params, &axpy(state, half, &k2))?.to_array();
    let k4 = vector_field(params, &axpy(state, dt, &k3))?.to_array();
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let mut incr = [T::zero(); 4];
    for i in 0..4 {
        incr[i] = (k1[i] + two * k2[i] + two * k3[i] + k4[i]) / six;
    }
    Ok(axpy(state, dt, &incr))
}

/// One forward Euler step.
pub fn step_euler<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dt: T,
) -> Result<SystemState<T>> {
    let k = vector_field(params, state)?.to_array();
    Ok(axpy(state, dt, &k))
}

struct RadauTableau<T> {
    a: [[T; 3]; 3],
}

impl<T: Scalar> RadauTableau<T> {
    fn new() -> Self {
        let s6 = T::lit(6.0).sqrt();
        let l = T::lit;
        RadauTableau {
            a: [
                [
                    (l(88.0) - l(7.0) * s6) / l(360.0),
                    (l(296.0) - l(169.0) * s6) / l(1800.0),
                    (l(-2.0) + l(3.0) * s6) / l(225.0),
                ],
                [
                    (l(296.0) + l(169.0) * s6) / l(1800.0),
                    (l(88.0) + l(7.0) * s6) / l(360.0),
                    (l(-2.0) - l(3.0) * s6) / l(225.0),
                ],
                [
                    (l(16.0) - s6) / l(36.0),
                    (l(16.0) + s6) / l(36.0),
                    l(1.0) / l(9.0),
                ],
            ],
        }
    }
}

const RADAU_MAX_NEWTON: usize = 12;

/// One Radau IIA step. `Ok(None)` means the stage equations did not converge.
pub fn step_radau5<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dt: T,
) -> Result<Option<SystemState<T>>> {
    let tab = RadauTableau::<T>::new();
    let y0 = state.to_array();
    let tol = T::lit(1e-13).max(T::tolerance_floor());
    let mut z = [[T::zero(); 4]; 3];

    for _ in 0..RADAU_MAX_NEWTON {
        let mut f = [[T::zero(); 4]; 3];
        let mut jac: Vec<Matrix<T>> = Vec::with_capacity(3);
        for i in 0..3 {
            let yi = SystemState::from_array([
                y0[0] + z[i][0],
                y0[1] + z[i][1],
                y0[2] + z[i][2],
                y0[3] + z[i][3],
            ]);
            match vector_field(params, &yi) {
                Ok(d) => f[i] = d.to_array(),
                Err(_) => return Ok(None),
            }
            match jacobian_analytic_4d(params, &yi) {
                Ok(j) => jac.push(j),
                Err(_) => return Ok(None),
            }
        }
        let mut m = Matrix::zeros(12);
        let mut rhs = vec![T::zero(); 12];
        for i in 0..3 {
            for r in 0..4 {
                let mut g = z[i][r];
                for (a, fj) in tab.a[i].iter().zip(&f) {
                    g = g - dt * *a * fj[r];
                }
                rhs[4 * i + r] = -g;
                for j in 0..3 {
                    let w = dt * tab.a[i][j];
                    for c in 0..4 {
                        let mut v = -w * jac[j][(r, c)];
                        if i == j && r == c {
                            v = v + T::one();
                        }
                        m[(4 * i + r, 4 * j + c)] = v;
                    }
                }
            }
        }
        let Some(delta) = m.solve(&rhs) else {
            return Ok(None);
        };
        let mut worst = T::zero();
        for i in 0..3 {
            for r in 0..4 {
                z[i][r] = z[i][r] + delta[4 * i + r];
                let scale = T::one().max(y0[r].abs() + z[i][r].abs());
                worst = worst.max(delta[4 * i + r].abs() / scale);
            }
        }
        if !worst.is_finite() {
            return Ok(None);
        }
        if worst <= tol {
            let y1 = [
                y0[0] + z[2][0],
                y0[1] + z[2][1],
                y0[2] + z[2][2],
                y0[3] + z[2][3],
            ];
            return Ok(Some(SystemState::from_array(y1)));
        }
    }
    Ok(None)
}

/// Result of a trial step: `None` when an implicit solve failed.
fn trial<T: Scalar>(
    method: Method,
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dt: T,
) -> Result<Option<SystemState<T>>> {
    match method {
        Method::Rk4 => step_rk4(params, state, dt).map(Some),
        Method::Euler => step_euler(params, state, dt).map(Some),
        Method::Radau5 => step_radau5(params, state, dt),
    }
}

/// Enforces the state invariants on an accepted step; clamps tiny overshoots of `x`.
fn admit<T: Scalar>(t: T, mut state: SystemState<T>) -> Result<SystemState<T>> {
    let breach = |detail: String| Error::InvariantBreach {
        t: t.as_f64(),
        detail,
    };
    if state.to_array().iter().any(|c| !c.is_finite()) {
        return Err(breach("non-finite state".into()));
    }
    let tol = T::lit(X_OVERSHOOT_TOL);
    if state.x.abs() > T::one() {
        if state.x.abs() > T::one() + tol {
            return Err(breach(format!("x = {}", state.x)));
        }
        state.x = state.x.signum();
    }
    if state.n <= T::zero() {
        return Err(breach(format!("N = {}", state.n)));
    }
    Ok(state)
}

fn agree<T: Scalar>(a: &SystemState<T>, b: &SystemState<T>, rel_tol: T) -> bool {
    a.to_array()
        .iter()
        .zip(b.to_array().iter())
        .all(|(p, q)| (*p - *q).abs() <= rel_tol * T::one().max(p.abs()).max(q.abs()))
}

struct Run<'a, T: Scalar> {
    params: &'a ModelParams<T>,
    config: &'a IntegrationConfig<T>,
    dt_min: T,
    records: Vec<Record<T>>,
}

impl<T: Scalar> Run<'_, T> {
    fn push(&mut self, t: T, state: &SystemState<T>) {
        self.records.push(Record::from_state(self.params, t, state));
    }

    fn fixed_step(&mut self, state: &SystemState<T>, t0: T, t1: T) -> Result<SystemState<T>> {
        let next = trial(self.config.method, self.params, state, t1 - t0)?.ok_or_else(|| {
            Error::NoConvergence(format!("implicit stage equations failed at t = {t0}"))
        })?;
        let next = admit(t1, next)?;
        self.push(t1, &next);
        Ok(next)
    }

    /// Advances `state` from `t0` to `t1`, splitting the interval while the full
    /// step and two half steps disagree. `full` is a precomputed full step, if any.
    fn adaptive_step(
        &mut self,
        state: &SystemState<T>,
        t0: T,
        t1: T,
        full: Option<Option<SystemState<T>>>,
    ) -> Result<SystemState<T>> {
        let method = self.config.method;
        let h = t1 - t0;
        let half = h / T::lit(2.0);
        let full = match full {
            Some(f) => f,
            None => trial(method, self.params, state, h).unwrap_or(None),
        };
        let first = trial(method, self.params, state, half).unwrap_or(None);
        let second = match &first {
            Some(mid) => trial(method, self.params, mid, half).unwrap_or(None),
            None => None,
        };
        if let (Some(f), Some(s)) = (&full, &second) {
            if agree(f, s, self.config.rel_tol) {
                let next = admit(t1, *s)?;
                self.push(t1, &next);
                return Ok(next);
            }
        }
        if half < self.dt_min {
            return Err(Error::StepUnderflow {
                t: t0.as_f64(),
                dt_min: self.dt_min.as_f64(),
            });
        }
        let tm = t0 + half;
        let mid = self.adaptive_step(state, t0, tm, Some(first))?;
        self.adaptive_step(&mid, tm, t1, None)
    }
}

/// Integrates the model from `initial` over `[t0, t_end]`.
pub fn integrate<T: Scalar>(
    params: &ModelParams<T>,
    initial: &SystemState<T>,
    config: &IntegrationConfig<T>,
) -> Result<Trajectory<T>> {
    params.validate()?;
    initial.validate()?;
    config.validate()?;

    let grid = config.base_grid();
    let mut run = Run {
        params,
        config,
        dt_min: config.effective_dt_min(),
        records: Vec::with_capacity(grid.len()),
    };
    run.push(config.t0, initial);
    let mut state = *initial;
    for w in grid.windows(2) {
        // surface genuine overflow before any step-size games
        vector_field(params, &state)?;
        state = if config.adaptive {
            run.adaptive_step(&state, w[0], w[1], None)?
        } else {
            run.fixed_step(&state, w[0], w[1])?
        };
    }
    Ok(Trajectory {
        params: *params,
        config: *config,
        records: run.records,
    })
}
