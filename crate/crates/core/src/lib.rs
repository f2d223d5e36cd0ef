//! Executable measure theory on finite outcome spaces.
//!
//! The crate builds outcome spaces of event paths, represents σ-algebras by
//! their atom partitions, constructs filtrations, and checks measurability of
//! random variables and trading policies on an additive binomial lattice. A
//! small exact interval-set algebra covers the bounded continuous case.
//!
//! Everything here is `no_std` with `alloc`; IO, file formats and the CLI
//! live in the `filtra` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod bitset;
pub mod error;
pub mod filtration;
pub mod interval;
pub mod lattice;
pub mod outcome;
pub mod random_variable;
pub mod sigma;

pub use bitset::PathSet;
pub use error::{Error, Result};
pub use filtration::{Filtration, NestingVerdict};
pub use interval::{ContinuousWalkModel, ConeFigure, IncrementDistribution, Interval, IntervalSet};
pub use lattice::{Action, LatticeModel, LatticeProcess, LeakVerdict, MarkovVerdict, Policy, TradingMdp, UpProbability};
pub use outcome::{Event, OutcomeSpace, ProbabilityMeasure};
pub use random_variable::{RandomVariable, StochasticProcess};
pub use sigma::{AxiomVerdict, SigmaAlgebra};

/// Tolerance used when checking that a probability vector sums to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
