//! Estimates where a person stands around a robot arm from lidar units
//! mounted in rings on the arm's links.
//!
//! The pipeline runs in four stages:
//!
//! - [`simworld`] moves a person and the arm and casts each unit's rays.
//! - [`dataset`] turns every tick into a 54-element input vector plus the
//!   person's ground-plane position.
//! - [`neuralnet`] maps one input vector to a position estimate.
//! - [`tracker`] smooths those estimates over time with a particle filter.
//!
//! [`kinematics`] and [`geometry`] provide the arm model and the ray tests,
//! and [`config`] ties every parameter to one TOML file.

pub mod config;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod neuralnet;
pub mod simworld;
pub mod tracker;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    mod tracking {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    mod experiment {}
}
