//! Classical tracer particle coupled to the excitation field of a
//! Bose-Einstein condensate.
//!
//! The crate provides the static dressed solutions, co-moving traveling
//! waves with their Cerenkov friction force, the forced-traveling-wave
//! branch structure, a structure-preserving time integrator for the coupled
//! particle-field system and the effective one-particle deceleration law.
//!
//! All numerics are generic over the scalar type ([`Real`]: `f32` or `f64`);
//! the aliases below fix `f64`, which is what the CLI and the acceptance
//! suite use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod model;
pub mod quadrature;
pub mod reduced;
pub mod roots;
pub mod scalar;
pub mod spectral;
pub mod statics;
pub mod twave;
pub mod vec3;

pub use error::{Error, Result};
pub use model::{
    eval_potential, potential_fourier, FourierGrid, Model, ModelParams, ModelTag, PotentialFamily, PotentialSpec,
};
pub use scalar::Real;
pub use spectral::{ComplexField, DispersionForm, Space, ZeroMode};
pub use vec3::Vec3;

pub type Grid = model::FourierGrid<f64>;
pub type Params = model::ModelParams<f64>;
pub type Potential = model::PotentialSpec<f64>;
pub type Setup = model::Model<f64>;
pub type Field = spectral::ComplexField<f64>;
pub type Vector = vec3::Vec3<f64>;
pub type TravelingWave = twave::TravelingWaveProfile<f64>;
pub type Curve<L> = twave::ResponseCurve<f64, L>;
pub type State = dynamics::SimState<f64>;
pub type Stepper = dynamics::Integrator<f64>;
pub type Traj = dynamics::Trajectory<f64>;
