//! Online tracking of time-varying composite convex problems
//!
//! ```text
//! x*(t_k) = argmin_x  f(x; t_k) + g(x)
//! ```
//!
//! where `f` is smooth and strongly convex uniformly in time and `g` is a
//! closed proper convex function known only through its proximal map.
//!
//! The solver alternates a *prediction*, a few splitting steps on a Taylor
//! model of the next cost, with a *correction*, a few splitting steps on the
//! revealed cost. Forward-backward and Douglas-Rachford splittings are
//! supported. [`analysis`] evaluates the contraction rates, convergence
//! conditions and error recursions of the scheme; [`benchmark`] contains the
//! leader-following formation problem and a synthetic sinusoidal target.

pub mod analysis;
pub mod benchmark;
pub mod costs;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod prox;
pub mod quadratic;
pub mod splitting;

#[cfg(test)]
mod testutil;

pub use costs::{DerivativeBounds, NonsmoothCost, SmoothCost};
pub use engine::{DerivativeMode, OnlineState, PCConfig, StepRecord};
pub use error::{Error, Result};
pub use quadratic::{prox_quadratic, QuadraticCost};
pub use splitting::{Method, RateEstimate, SplitConfig, SplitState};

pub use nalgebra;
