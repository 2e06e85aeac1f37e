//! Random walks on the integer line in two-type drift environments:
//! exact hitting times, the drift-placement quadratic form, Monte Carlo
//! speed estimates, and closed-form speed bounds.

pub mod bounds;
pub mod environment;
pub mod error;
pub mod exact;
pub mod quadratic;
pub mod rational;
pub mod rebalance;
pub mod rng;
pub mod simulator;

pub use environment::{
    Density, EnvKind, Environment, FiniteEnvironment, LineEnvironment, Probability,
    StructuredDensity,
};
pub use error::{Error, Result};
pub use rational::Rational;
