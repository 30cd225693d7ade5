//! Numerical laboratory for the nonlocal dispersal equation `u_t = J*u - u + f(t,x,u)`:
//! kernels, reaction terms, time stepping, traveling waves, front tracking,
//! interface envelopes, regularity diagnostics and the ignition squeeze.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod envelope;
pub mod error;
pub mod evolution;
pub mod fronts;
pub mod ignition_bounds;
pub mod io;
pub mod kernel;
pub mod nonlinearity;
pub mod quadrature;
pub mod regularity;
pub mod waves;

pub use error::{NflError, Result};
