#![allow(dead_code)]

pub mod dynamics;
pub mod nn;
pub mod rl;
