//! Exact-arithmetic toolkit for bounded straight-line programs, synchronous
//! arithmetic circuits, discrete planar fixed-point instances, and the
//! polymatrix games they embed into.
//!
//! The pipeline this crate implements, end to end:
//!
//! 1. **Straight-line programs** ([`slp`]) — a tiny DSL over `[0, 1]`-valued
//!    variables with three clipped gate operations (saturating add, truncated
//!    subtract, scaling by a non-negative constant) plus macros, constant
//!    parameters, bounded loops, and compile-time conditionals. Programs
//!    expand to flat gate lists that can be interpreted exactly.
//! 2. **Synchronous circuits** ([`circuit`]) — flat programs compile, via an
//!    interval liveness analysis, into layered circuits whose width equals
//!    the program's peak count of simultaneously live variables. Add/sub
//!    gates only read the immediately preceding level.
//! 3. **Discrete fixed-point instances** ([`brouwer`]) — Boolean NOT/OR
//!    netlists that three-color the points of a `2^n × 2^n` grid, with
//!    boundary-enforcement wrappers, a border-thickening transform, and a
//!    trichromatic-square finder.
//! 4. **Displacement circuits** ([`reduction`]) — a generator that turns a
//!    grid-coloring netlist into an arithmetic circuit computing a
//!    displacement map on the unit square whose approximate fixed points
//!    cluster near trichromatic squares. Peak liveness of the generated
//!    program is eight, independent of instance size.
//! 5. **Polymatrix games** ([`game`]) — rescaling a circuit into `[0, 1/10]`,
//!    closing it into a self-referential constraint system, and embedding
//!    that system into a twenty-action polymatrix game whose exact Nash
//!    equilibria encode the circuit's fixed points.
//!
//! All arithmetic is exact: values are arbitrary-precision rationals (with a
//! fast machine-word representation for small numerators/denominators, see
//! [`rational::Rat`]). Nothing in this crate rounds.
//!
//! Bulk scans (grid searches, trichromatic sweeps, sample audits) run in
//! parallel when the `parallel` feature (on by default) is enabled, and fall
//! back to equivalent sequential loops when it is not; see [`par`].

#![deny(missing_docs)]
#![forbid(unsafe_code)]

pub mod brouwer;
pub mod circuit;
pub mod game;
pub mod par;
pub mod rational;
pub mod reduction;
pub mod slp;

pub use rational::Rat;
