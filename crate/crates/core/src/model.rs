//! State space, parameters and vector fields of the TFV/NEV adoption model.
//!
//! The opinion variable `x = (N_E - N_F) / 2N` follows mean-field switching
//! dynamics driven by the opinion index `s`. Two externality indices feed back
//! into `s`: `pi_f` (usage emissions, sourced by the TFV stock) and `pi_e`
//! (production pollution, sourced by the growth of the NEV stock). `n` is half
//! the fleet and grows at a fixed or externality-throttled rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default bound on `|s|`; `exp(500)` is already within a few decades of `f64::MAX`.
pub const DEFAULT_OPINION_CAP: f64 = 500.0;

/// Default aggregate-externality weights `k1 = k2`.
pub const DEFAULT_PI_WEIGHT: f64 = 0.01;

/// Fleet growth law for `dN/dt = g * N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum GrowthPolicy<T> {
    /// Constant growth rate. `Fixed { g: 0 }` gives the fixed-fleet 3D system.
    Fixed { g: T },
    /// `g = g_bar * exp(-(k1 * pi_F + k2 * pi_E))`.
    Regulated { g_bar: T, k1: T, k2: T },
}

impl<T: Scalar> GrowthPolicy<T> {
    pub fn frozen() -> Self {
        GrowthPolicy::Fixed { g: T::zero() }
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, GrowthPolicy::Fixed { g } if g.is_zero())
    }
}

/// Weights of the aggregate externality `Pi = k1 * pi_F + k2 * pi_E`.
///
/// Under a regulated growth policy the policy's own weights are used instead;
/// these only matter for reporting `Pi` on fixed-growth runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PiWeights<T> {
    pub k1: T,
    pub k2: T,
}

impl<T: Scalar> Default for PiWeights<T> {
    fn default() -> Self {
        PiWeights {
            k1: T::lit(DEFAULT_PI_WEIGHT),
            k2: T::lit(DEFAULT_PI_WEIGHT),
        }
    }
}

fn default_cap<T: Scalar>() -> T {
    T::lit(DEFAULT_OPINION_CAP)
}

/// Coefficients of the opinion index, switching speed, externality laws and growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct ModelParams<T> {
    /// Constant preference bias, NEV-favoring when positive.
    pub a0: T,
    /// Herding strength.
    pub a1: T,
    /// Sensitivity of `s` to the TFV externality (expected >= 0).
    pub a2: T,
    /// Sensitivity of `s` to the NEV externality (expected <= 0).
    pub a3: T,
    /// Switching speed.
    pub v: T,
    /// Usage emission rate per TFV.
    #[serde(rename = "gamma_F")]
    pub gamma_f: T,
    /// Production pollution per newly added NEV.
    #[serde(rename = "theta_E")]
    pub theta_e: T,
    /// Self-purification rate of `pi_F`.
    pub alpha1: T,
    /// Self-purification rate of `pi_E`.
    pub alpha2: T,
    pub growth: GrowthPolicy<T>,
    #[serde(default)]
    pub pi_weights: PiWeights<T>,
    #[serde(default = "default_cap")]
    pub opinion_cap: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Checks the sign constraints on rates and the growth policy.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a0,
            self.a1,
            self.a2,
            self.a3,
            self.v,
            self.gamma_f,
            self.theta_e,
            self.alpha1,
            self.alpha2,
            self.opinion_cap,
        ];
        if all.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        let positive = [
            ("v", self.v),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ];
        for (name, value) in positive {
            if value <= T::zero() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be > 0, got {value}"
                )));
            }
        }
        let nonneg = [("gamma_F", self.gamma_f), ("theta_E", self.theta_e)];
        for (name, value) in nonneg {
            if value < T::zero() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {value}"
                )));
            }
        }
        if self.opinion_cap <= T::zero() {
            return Err(Error::InvalidParams("opinion_cap must be > 0".into()));
        }
        match self.growth {
            GrowthPolicy::Fixed { g } => {
                if !g.is_finite() {
                    return Err(Error::InvalidParams("growth rate must be finite".into()));
                }
            }
            GrowthPolicy::Regulated { g_bar, k1, k2 } => {
                for (name, value) in [("g_bar", g_bar), ("k1", k1), ("k2", k2)] {
                    if value < T::zero() || !value.is_finite() {
                        return Err(Error::InvalidParams(format!(
                            "{name} must be finite and >= 0, got {value}"
                        )));
                    }
                }
            }
        }
        let weights = [self.pi_weights.k1, self.pi_weights.k2];
        if weights.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParams("pi_weights must be finite".into()));
        }
        Ok(())
    }

    /// Same parameters with the fleet frozen (`dN/dt = 0`).
    pub fn with_frozen_fleet(&self) -> Self {
        ModelParams {
            growth: GrowthPolicy::frozen(),
            ..*self
        }
    }

    /// Weights used for the aggregate externality `Pi`.
    pub fn externality_weights(&self) -> (T, T) {
        match self.growth {
            GrowthPolicy::Regulated { k1, k2, .. } => (k1, k2),
            GrowthPolicy::Fixed { .. } => (self.pi_weights.k1, self.pi_weights.k2),
        }
    }
}

/// `(x, pi_F, pi_E, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct SystemState<T> {
    pub x: T,
    #[serde(rename = "pi_F")]
    pub pi_f: T,
    #[serde(rename = "pi_E")]
    pub pi_e: T,
    #[serde(rename = "N")]
    pub n: T,
}

impl<T: Scalar> SystemState<T> {
    pub fn new(x: T, pi_f: T, pi_e: T, n: T) -> Self {
        SystemState { x, pi_f, pi_e, n }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.x, self.pi_f, self.pi_e, self.n]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        SystemState::new(a[0], a[1], a[2], a[3])
    }

    /// Checks `x` in `[-1, 1]`, `N > 0` and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(
                "state has a non-finite component".into(),
            ));
        }
        if self.x < -T::one() || self.x > T::one() {
            return Err(Error::InvalidConfig(format!(
                "x = {} outside [-1, 1]",
                self.x
            )));
        }
        if self.n <= T::zero() {
            return Err(Error::InvalidConfig(format!("N = {} must be > 0", self.n)));
        }
        Ok(())
    }

    /// Fleet split `(N_F, N_E) = ((1 - x) N, (1 + x) N)`.
    pub fn fleet_split(&self) -> (T, T) {
        ((T::one() - self.x) * self.n, (T::one() + self.x) * self.n)
    }
}

/// Time derivative of a [`SystemState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Derivative<T> {
    pub dx_dt: T,
    #[serde(rename = "dpi_F_dt")]
    pub dpi_f_dt: T,
    #[serde(rename = "dpi_E_dt")]
    pub dpi_e_dt: T,
    #[serde(rename = "dN_dt")]
    pub dn_dt: T,
}

impl<T: Scalar> Derivative<T> {
    pub fn to_array(self) -> [T; 4] {
        [self.dx_dt, self.dpi_f_dt, self.dpi_e_dt, self.dn_dt]
    }

    pub fn max_abs(&self) -> T {
        self.to_array()
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.abs()))
    }
}

/// Opinion formation index `s = a0 + a1 x + a2 pi_F + a3 pi_E`.
pub fn opinion_index<T: Scalar>(params: &ModelParams<T>, state: &SystemState<T>) -> T {
    params.a0 + params.a1 * state.x + params.a2 * state.pi_f + params.a3 * state.pi_e
}

fn check_cap<T: Scalar>(params: &ModelParams<T>, s: T) -> Result<()> {
    // NaN fails the comparison and is rejected as well.
    if s.abs() <= params.opinion_cap {
        Ok(())
    } else {
        Err(Error::OpinionOverflow {
            s: s.as_f64(),
            cap: params.opinion_cap.as_f64(),
        })
    }
}

/// Switching rates `(TFV -> NEV, NEV -> TFV) = (v e^s, v e^-s)`.
pub fn transition_probabilities<T: Scalar>(params: &ModelParams<T>, s: T) -> Result<(T, T)> {
    check_cap(params, s)?;
    Ok((params.v * s.exp(), params.v * (-s).exp()))
}

/// `dx/dt = v [(1 - x) e^s - (1 + x) e^-s]`.
pub fn x_rate<T: Scalar>(params: &ModelParams<T>, state: &SystemState<T>) -> Result<T> {
    let s = opinion_index(params, state);
    let (p_plus, p_minus) = transition_probabilities(params, s)?;
    Ok(p_plus * (T::one() - state.x) - p_minus * (T::one() + state.x))
}

/// Closed form `2 v [tanh(s) - x] cosh(s)` of [`x_rate`].
pub fn x_rate_tanh_form<T: Scalar>(params: &ModelParams<T>, state: &SystemState<T>) -> Result<T> {
    let s = opinion_index(params, state);
    check_cap(params, s)?;
    let two = T::lit(2.0);
    Ok(two * params.v * (s.tanh() - state.x) * s.cosh())
}

/// Growth rate currently applied to the fleet.
pub fn effective_growth<T: Scalar>(params: &ModelParams<T>, state: &SystemState<T>) -> T {
    match params.growth {
        GrowthPolicy::Fixed { g } => g,
        GrowthPolicy::Regulated { g_bar, k1, k2 } => {
            g_bar * (-(k1 * state.pi_f + k2 * state.pi_e)).exp()
        }
    }
}

/// Aggregate externality `Pi = k1 pi_F + k2 pi_E`.
pub fn aggregate_externality<T: Scalar>(params: &ModelParams<T>, state: &SystemState<T>) -> T {
    let (k1, k2) = params.externality_weights();
    k1 * state.pi_f + k2 * state.pi_e
}

/// Full 4D right-hand side. The `pi_E` law consumes `dx/dt` and `dN/dt` from this same call.
pub fn vector_field<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
) -> Result<Derivative<T>> {
    let one = T::one();
    let dx_dt = x_rate(params, state)?;
    let dpi_f_dt = params.gamma_f * state.n * (one - state.x) - params.alpha1 * state.pi_f;
    let dn_dt = effective_growth(params, state) * state.n;
    let dpi_e_dt =
        params.theta_e * (dn_dt * (one + state.x) + dx_dt * state.n) - params.alpha2 * state.pi_e;
    Ok(Derivative {
        dx_dt,
        dpi_f_dt,
        dpi_e_dt,
        dn_dt,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Shared coefficients `N = 10, gamma = 0.9, theta = 0.2, v = 0.6, alpha = (0.03, 0.07)`.
    pub fn base(a0: f64, a1: f64, a2: f64, a3: f64, growth: GrowthPolicy<f64>) -> ModelParams<f64> {
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
            growth,
            pi_weights: PiWeights::default(),
            opinion_cap: DEFAULT_OPINION_CAP,
        }
    }

    /// Special case with `s = 0` at `x = 0`: `a0 = -gamma N / alpha1`, `a2 = 1`, `a3 = -1`.
    pub fn midpoint_case(a1: f64) -> (ModelParams<f64>, SystemState<f64>) {
        let p = base(-300.0, a1, 1.0, -1.0, GrowthPolicy::frozen());
        (p, SystemState::new(0.0, 300.0, 0.0, 10.0))
    }
}
