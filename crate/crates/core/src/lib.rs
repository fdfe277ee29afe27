//! Geometry of bipartite correlation matrices.
//!
//! The crate works with the generalized Bloch decomposition of a `d1 x d2`
//! density matrix,
//!
//! ```text
//! rho = 1/(d1 d2) [ 1(x)1 + sum_i alpha_i l_i (x) 1 + sum_j beta_j 1 (x) l~_j
//!                   + sum_ij T_ij l_i (x) l~_j ]
//! ```
//!
//! and builds on the singular values of the correlation matrix `T`:
//!
//! * [`criteria`]: trace-norm bounds certifying a Schmidt number above `k`.
//! * [`observables`]: diagonal observables whose Haar-random moments equal the
//!   Bloch-sphere (orthogonal) moments.
//! * [`moments`] and [`landscape`]: the normalized second/fourth moment plane and
//!   the boundaries of the states of bounded Schmidt number in it.
//! * [`constructions`]: separable states on the kinks of the separable boundary
//!   from equiangular sets, SIC-POVMs and mutually unbiased bases.
//! * [`simulate`]: finite-shot randomized-measurement estimates of the moments
//!   and the resulting measurement budget.
//!
//! Data-parallel loops run on rayon when the `parallel` feature (default) is
//! enabled; see [`par`].

pub mod bloch;
pub mod cli;
pub mod constructions;
pub mod criteria;
pub mod error;
pub mod landscape;
pub mod moments;
pub mod observables;
pub mod par;
pub mod qla;
pub mod simulate;

pub use error::{Error, Result};
pub use qla::{CMat, C64};
