#![cfg_attr(not(feature = "std"), no_std)]

//! Bounded-compute multimodal rating regression, desk scale.
//!
//! Everything in here is deterministic by construction: preprocessing produces
//! input-independent sequence lengths, all randomness flows through seeded
//! [`rng::SplitMix64`] streams, and float transcendentals route through `libm`
//! so results are bit-identical with or without `std`. The crate is
//! `no_std`-compatible (requires `alloc`); file formats, JSON ingestion and the
//! command-line front end live in the companion `boundedreg-cli` crate.

extern crate alloc;

pub mod backbone;
pub mod blob;
pub mod datapipe;
pub mod effscore;
mod error;
pub mod imageprep;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod reghead;
pub mod rng;
pub mod textprep;
pub mod trainer;

pub use error::{Error, Result};
