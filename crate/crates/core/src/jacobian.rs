//! Analytic and central-difference Jacobians of the model.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::{self, GrowthPolicy, ModelParams, SystemState};
use crate::scalar::Scalar;

/// Which sub-system an analysis runs on.
///
/// `TwoD` is `(x, pi_F)` with `pi_E = 0`; `ThreeD` is `(x, pi_F, pi_E)` with
/// the fleet frozen; `FourD` is the full system including `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dims {
    TwoD,
    ThreeD,
    FourD,
}

impl Dims {
    pub fn size(self) -> usize {
        match self {
            Dims::TwoD => 2,
            Dims::ThreeD => 3,
            Dims::FourD => 4,
        }
    }

    pub fn from_size(n: usize) -> Option<Self> {
        match n {
            2 => Some(Dims::TwoD),
            3 => Some(Dims::ThreeD),
            4 => Some(Dims::FourD),
            _ => None,
        }
    }
}

/// Partial derivatives of `dx/dt` with respect to `(x, pi_F, pi_E)`.
fn x_row<T: Scalar>(params: &ModelParams<T>, state: &SystemState<T>) -> Result<[T; 3]> {
    let s = model::opinion_index(params, state);
    model::transition_probabilities(params, s)?;
    let two_v = T::lit(2.0) * params.v;
    let (ch, sh) = (s.cosh(), s.sinh());
    let ds = two_v * (ch - state.x * sh);
    Ok([
        two_v * (params.a1 * ch - ch - params.a1 * state.x * sh),
        params.a2 * ds,
        params.a3 * ds,
    ])
}

/// Jacobian of the fixed-fleet 3D system in `(x, pi_F, pi_E)`.
///
/// The growth policy is ignored: the system analysed is the one with `dN/dt = 0`.
pub fn jacobian_analytic_3d<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
) -> Result<Matrix<T>> {
    let r1 = x_row(params, state)?;
    let tn = params.theta_e * state.n;
    let mut j = Matrix::zeros(3);
    for c in 0..3 {
        j[(0, c)] = r1[c];
        j[(2, c)] = tn * r1[c];
    }
    j[(1, 0)] = -params.gamma_f * state.n;
    j[(1, 1)] = -params.alpha1;
    j[(1, 2)] = T::zero();
    j[(2, 2)] = j[(2, 2)] - params.alpha2;
    Ok(j)
}

/// Jacobian of the 2D `(x, pi_F)` reduction.
pub fn jacobian_analytic_2d<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
) -> Result<Matrix<T>> {
    let j3 = jacobian_analytic_3d(params, state)?;
    Ok(j3.principal(&[0, 1]))
}

/// Jacobian of the full 4D system in `(x, pi_F, pi_E, N)`, for any growth policy.
pub fn jacobian_analytic_4d<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
) -> Result<Matrix<T>> {
    let one = T::one();
    let d = model::vector_field(params, state)?;
    let [fx, fpf, fpe] = x_row(params, state)?;
    let g = model::effective_growth(params, state);
    let (gk1, gk2) = match params.growth {
        GrowthPolicy::Fixed { .. } => (T::zero(), T::zero()),
        GrowthPolicy::Regulated { k1, k2, .. } => (k1 * g, k2 * g),
    };
    let n = state.n;
    // partials of dN/dt = g N
    let dn = [T::zero(), -gk1 * n, -gk2 * n, g];
    let dxr = [fx, fpf, fpe, T::zero()];
    let th = params.theta_e;
    let opx = one + state.x;

    let mut j = Matrix::zeros(4);
    for c in 0..4 {
        j[(0, c)] = dxr[c];
        j[(3, c)] = dn[c];
    }
    j[(1, 0)] = -params.gamma_f * n;
    j[(1, 1)] = -params.alpha1;
    j[(1, 3)] = params.gamma_f * (one - state.x);

    j[(2, 0)] = th * (d.dn_dt + dxr[0] * n);
    j[(2, 1)] = th * (dn[1] * opx + dxr[1] * n);
    j[(2, 2)] = th * (dn[2] * opx + dxr[2] * n) - params.alpha2;
    j[(2, 3)] = th * (dn[3] * opx + d.dx_dt);
    Ok(j)
}

/// Right-hand side of the selected sub-system as a plain vector.
pub fn subsystem_rhs<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dims: Dims,
) -> Result<Vec<T>> {
    let frozen;
    let p = if dims == Dims::FourD {
        params
    } else {
        frozen = params.with_frozen_fleet();
        &frozen
    };
    let mut st = *state;
    if dims == Dims::TwoD {
        st.pi_e = T::zero();
    }
    let d = model::vector_field(p, &st)?;
    Ok(d.to_array()[..dims.size()].to_vec())
}

fn with_component<T: Scalar>(state: &SystemState<T>, i: usize, value: T) -> SystemState<T> {
    let mut a = state.to_array();
    a[i] = value;
    SystemState::from_array(a)
}

/// Step for component value `c`: `1e-6 * max(1, |c|)` rounded to a power of two,
/// so that `c +- h` is exact for moderately sized `c`.
fn fd_step<T: Scalar>(c: T) -> T {
    let h = T::lit(1e-6) * T::one().max(c.abs());
    T::lit(2.0).powi(h.log2().round().to_i32().unwrap_or(-20))
}

/// Central-difference Jacobian with step `h_i ~ 1e-6 * max(1, |state_i|)`.
pub fn jacobian_fd<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dims: Dims,
) -> Result<Matrix<T>> {
    let n = dims.size();
    let base = state.to_array();
    let mut j = Matrix::zeros(n);
    for c in 0..n {
        let h = fd_step(base[c]);
        let up = subsystem_rhs(params, &with_component(state, c, base[c] + h), dims)?;
        let dn = subsystem_rhs(params, &with_component(state, c, base[c] - h), dims)?;
        // the perturbation actually applied after rounding
        let span = (base[c] + h) - (base[c] - h);
        for r in 0..n {
            j[(r, c)] = (up[r] - dn[r]) / span;
        }
    }
    Ok(j)
}

/// Analytic Jacobian where one exists for the sub-system, finite differences otherwise.
pub fn jacobian<T: Scalar>(
    params: &ModelParams<T>,
    state: &SystemState<T>,
    dims: Dims,
) -> Result<Matrix<T>> {
    match dims {
        Dims::TwoD => {
            let st = SystemState {
                pi_e: T::zero(),
                ..*state
            };
            jacobian_analytic_2d(params, &st)
        }
        Dims::ThreeD => jacobian_analytic_3d(params, state),
        Dims::FourD => jacobian_fd(params, state, dims),
    }
}
