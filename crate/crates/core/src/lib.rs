//! A Monte Carlo approximation of AIXI: an agent that learns a model of its
//! environment with action-conditional context tree weighting and plans with
//! ρUCT, a Monte Carlo tree search over that learned model.
//!
//! The crate is organised bottom-up:
//!
//! - [`codec`] maps actions and percepts to fixed-width bit strings.
//! - [`kt`] is the Krichevsky–Trofimov estimator for a single binary source.
//! - [`ctw`] is the context tree mixture over prediction suffix trees, with
//!   exact revert and binary snapshots. [`pst`] holds brute-force references.
//! - [`model`] wraps a predictor as an environment model for planning.
//! - [`search`] implements ρUCT and exact expectimax.
//! - [`env`] contains the benchmark domains and their optimal average rewards.
//! - [`agent`] runs the perceive/plan/act loop.
//! - [`harness`] drives learning-curve experiments and writes CSV.
//! - [`selftest`] runs quick checks against the enumeration references.

pub mod agent;
pub mod codec;
pub mod ctw;
pub mod env;
pub mod harness;
pub mod kt;
pub mod model;
pub mod pst;
pub mod search;
pub mod selftest;
