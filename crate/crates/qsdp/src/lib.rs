//! Quantum information via semidefinite programming.
//!
//! This crate bundles three layers:
//!
//! * [`linalg`] and [`quantum`] — dense complex matrices, quantum states,
//!   measurements, channels, and entropies;
//! * [`sdp`] — a block-structured complex Hermitian SDP model with a
//!   self-contained primal-dual interior-point solver (real symmetric
//!   embedding, Mehrotra predictor-corrector, HKM direction) and SDPA
//!   sparse-format export/import;
//! * [`problems`] — five classic quantum-information problems built on the
//!   layers above: state discrimination, state fidelity, channel
//!   discrimination through diamond norms, entanglement detection through
//!   the PPT / symmetric-extension hierarchy, and quantum-capacity bounds
//!   through approximate degradability.
//!
//! Start with the runnable examples in `examples/`; each one walks through
//! a single capability end to end. The `qsdp` binary exposes the same
//! entry points as subcommands.

pub mod channels;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod quantum;
pub mod rand_gen;
pub mod sdp;
pub mod tol;

pub use error::{Error, Result};
pub use tol::Tolerances;
