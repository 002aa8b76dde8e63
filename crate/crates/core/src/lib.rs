//! Deterministic partial Hadamard measurement matrices that preserve the
//! entropy of i.i.d. integer-valued sources.
//!
//! The crate is organized as:
//!
//! * [`zdist`] — exact arithmetic on finitely supported pmfs over ℤ.
//! * [`epi`] — the discrete entropy power inequality `H(p⋆p) - H(p) >= g(H(p))`.
//! * [`transform`] — fast Kronecker transforms `J_N` and `G_N`.
//! * [`construct`] — synthesized conditional entropies and row selection.
//! * [`codec`] — measurement, successive-cancellation decoding, noise study.
//! * [`quantize`] — the uniform quantizer for continuous sources.

pub mod codec;
pub mod construct;
pub mod epi;
pub mod error;
pub mod quantize;
pub mod rng;
pub mod transform;
pub mod zdist;

mod sc;

pub use error::{Result, SenseError};
pub use transform::{TransformKind, TransformPlan};
pub use zdist::ZDist;
