#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod error;
mod fft;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod localop;
pub mod pattern;
pub mod reaction;
pub mod stepper;
