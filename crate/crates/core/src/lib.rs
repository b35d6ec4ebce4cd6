//! Focused 3-D gravity inversion accelerated by a randomized SVD.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. Everything here is a pure function of its inputs (and an RNG
//! seed where one is taken); file formats and the command-line driver live
//! in the companion `gravinv` crate.
//!
//! Module map:
//!
//! * [`mesh`] and [`kernel`]: prism discretization, closed-form prism
//!   gravity, kernel assembly, depth weighting and forward modelling.
//! * [`randsvd`]: the randomized range-finder SVD for under-determined
//!   systems, the eigen-to-SVD conversion, a dense baseline and the flop
//!   model.
//! * [`regparam`]: UPRE evaluation and minimization, first-iteration
//!   parameter and the truncated variant used with Krylov subspaces.
//! * [`inversion`]: the iteratively reweighted L1 / minimum-support driver.
//! * [`lsqr`]: Golub-Kahan bidiagonalization used as the subspace baseline.
//! * [`synthetics`]: synthetic models and the noise model.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub mod inversion;
pub mod kernel;
pub mod linalg;
pub mod lsqr;
pub mod mesh;
pub mod operator;
pub mod randsvd;
pub mod regparam;
pub mod synthetics;

pub use error::{Error, Result};
pub use inversion::{
    invert, InversionConfig, InversionProblem, InversionResult, IterationRecord, Solver,
    Stabilizer, Termination,
};
pub use kernel::{assemble_kernel, depth_weighting, forward, prism_gz, KernelMatrix};
pub use mesh::{Mesh, Prism, StationSet};
pub use operator::{ScaledKernel, SystemMatrix, VisitCounts};
pub use randsvd::{rsvd, RsvdConfig, SvdTriple};
