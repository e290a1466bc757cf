//! Conditional expectations of finite-branch correspondences over finitely-presented
//! probability spaces, and their use in finite-action Bayesian games.

pub mod condexp;
pub mod correspondence;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod game;
pub mod lp;
pub mod measure;
pub mod pennies;
pub mod polytope;
pub mod purification;
pub mod rational;
pub mod steps;

pub use error::{Error, Result};
pub use rational::{Rat, Q};
