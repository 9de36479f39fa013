//! Exact computations with doubly stochastic elements of the unit interval:
//! finite sums of measure-preserving partial isomorphisms built from slope
//! `±1` pieces, compared in the graph-multiset distance.

#![allow(clippy::result_large_err)]

pub mod decompose;
pub mod division;
pub mod dse;
pub mod error;
pub mod extension;
pub mod finite;
pub mod gallery;
pub mod graph;
pub mod intervals;
pub mod partial_map;
pub mod rational;
pub mod step;

pub use dse::{normalize_cover, validate, CoverageReport, Dse};
pub use error::{Error, Result};
pub use graph::GraphMultiset;
pub use intervals::{Interval, IntervalSet, SetOp};
pub use partial_map::{Atom, Family, PartialMap, Slope};
pub use rational::Rational;
pub use step::StepFn;
