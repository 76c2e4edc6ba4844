//! Deterministic dynamics lab for traditional-fuel vs new-energy vehicle adoption
//! coupled to environmental externality feedback.
//!
//! The numerical core ([`model`], [`jacobian`], [`integrator`], [`stability`]) is
//! generic over the scalar type; the aliases below fix it to `f64`, which is what
//! the scenario runner, the IO layer and the CLI use.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod integrator;
pub mod io;
pub mod jacobian;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod scenarios;
pub mod selfcheck;
pub mod stability;

pub use error::{Error, Result};
pub use integrator::Method;
pub use jacobian::Dims;
pub use model::GrowthPolicy as GenericGrowthPolicy;
pub use scalar::Scalar;
pub use stability::Classification;

pub type ModelParams = model::ModelParams<f64>;
pub type SystemState = model::SystemState<f64>;
pub type Derivative = model::Derivative<f64>;
pub type GrowthPolicy = model::GrowthPolicy<f64>;
pub type PiWeights = model::PiWeights<f64>;
pub type IntegrationConfig = integrator::IntegrationConfig<f64>;
pub type Record = integrator::Record<f64>;
pub type Trajectory = integrator::Trajectory<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type FixedPoint = stability::FixedPoint<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
pub type StabilityOptions = stability::StabilityOptions<f64>;

pub type ModelParams32 = model::ModelParams<f32>;
pub type SystemState32 = model::SystemState<f32>;
pub type IntegrationConfig32 = integrator::IntegrationConfig<f32>;
pub type Trajectory32 = integrator::Trajectory<f32>;
