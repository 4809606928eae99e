//! Deterministic federated-learning simulator built around masked random
//! noise as the uplink representation of client model updates.
//!
//! Clients train a dense update `u` against frozen global parameters, but
//! every forward pass sees `noise ⊙ mask(u, noise)` instead of `u`. After
//! local training only the mask bits and the noise seed travel to the
//! server, which regenerates the noise and aggregates. Post-training
//! gradient compressors (stochastic sign, Top-k, TernGrad, DRIVE) share the
//! same payload format so runs can be compared byte for byte.
//!
//! Layout:
//!
//! - [`numeric`]: parameter vectors, the counter-based PRNG, datasets,
//!   hand-differentiated models and a quadratic testbed.
//! - [`masking`]: stochastic, deterministic and progressive masking plus
//!   the straight-through update.
//! - [`compressors`]: the versioned payload format and every uplink codec.
//! - [`federation`]: partitioning, client sampling, local procedures,
//!   aggregation and the round loop.
//! - [`analysis`]: probes for masking error, the progressive-masking
//!   factor, convergence slopes and client drift.
//! - [`cli`]: config parsing, metric files and the experiment runners used
//!   by the `fedmrn` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod compressors;
pub mod error;
pub mod federation;
pub mod masking;
pub mod numeric;

pub use error::{Error, Result};
