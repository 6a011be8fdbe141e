//! Curriculum learning driven by linguistic complexity indices.
//!
//! The pipeline: load a [`corpus::Dataset`] and its [`corpus::IndexMatrix`],
//! standardize on the training split, and train with [`trainer::train`].
//! During training the validation loss is regressed on the indices
//! ([`importance`]) to find which of them currently explain difficulty; the
//! resulting factors turn index rows into difficulty scores
//! ([`difficulty`]), and a curriculum ([`schedule`]) turns scores into loss
//! weights or a restricted sample pool. [`evaluation`], [`filtering`] and
//! [`rho_analysis`] work on the artifacts a run leaves behind.

pub mod corpus;
pub mod difficulty;
pub mod error;
pub mod evaluation;
pub mod filtering;
pub mod importance;
pub mod lexical;
pub mod model;
pub mod rho_analysis;
pub mod schedule;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
