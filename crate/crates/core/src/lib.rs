#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
//! Planar quadruped locomotion workbench.
//!
//! Hybrid force-position locomotion policies (target joint positions plus
//! feedforward torques), a generalized-momentum disturbance observer, and a
//! second-stage adaptive compensation policy that adds joint torques on top of
//! the frozen locomotion policy. Everything runs in a self-contained planar
//! rigid-body simulator.

pub mod actuation;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod evalkit;
pub mod nn;
pub mod observation;
pub mod observer;
pub mod par;
pub mod trainer;
