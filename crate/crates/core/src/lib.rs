//! Numerical laboratory for compressibility phase transitions.
//!
//! The crate builds, on desk scale, the objects behind the rate-distortion
//! phase transition for compact signal classes in `ℓ²`:
//!
//! - [`sequence_core`] — dyadic index partitions, mixed-norm sequence spaces
//!   `ℓ^{p,q}` with weights `w_m = m^θ 2^{αm}`, and embedding constants;
//! - [`lp_geometry`] — exact `ℓᵖ`-ball volumes and exact uniform sampling on
//!   `ℓᵖ` balls;
//! - [`critical_measure`] — the critical product measures on the unit balls,
//!   their samplers, and the quantitative growth-order constants `(c, ε₀)`;
//! - [`codec`] — encode/decode pairs at a fixed code length `R`, a block
//!   scalar quantizer attaining the optimal rate exponent, empirical entropy
//!   numbers, Lipschitz transfer of codecs, and a countable-class fixture;
//! - [`phase_bounds`] — the closed-form bound surfaces
//!   `min{1, 2^{R − c·ε^{−1/s}}}` and threshold calculators;
//! - [`wavelet_besov`] — compactly supported orthonormal wavelets on `(0,1)^d`,
//!   Besov sequence norms, synthesis, and the pushforward sampler for Besov
//!   balls;
//! - [`nn_coding`] — quantized feed-forward networks, their exact bit
//!   serialization, and capacity bounds.
//!
//! All samplers take an explicit random stream; nothing reads global RNG
//! state or the clock. Monte-Carlo loops shard deterministically via
//! [`mc::shard_rng`].

pub mod codec;
pub mod critical_measure;
pub mod error;
pub mod exponent;
pub mod lp_geometry;
pub mod mc;
pub mod nn_coding;
pub mod phase_bounds;
pub mod sequence_core;
pub mod stats;
pub mod wavelet_besov;

pub use error::{Error, Result};
pub use exponent::Exponent;
