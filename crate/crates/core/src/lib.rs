//! Fourier-side laboratory for the randomized Gross-Pitaevskii hierarchy on
//! the torus T^d, truncated to the box [-K, K]^d.

pub mod boardgame;
pub mod bookkeeping;
pub mod duhamel;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod lattice;
pub mod nls;
pub mod nonresonant;
pub mod numerics;
pub mod omega;
pub mod operators;
pub mod randomization;
pub mod report;
pub mod signed;
pub mod textfmt;

pub use error::{Error, Result};
pub use lattice::{DensityMatrix, Freq, Key, LatticeBox, ModeFunction, C64};
pub use operators::{CollisionIndex, Sign};
