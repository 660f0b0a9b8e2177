//! Downlink multi-user MIMO simulator comparing rate-splitting multiple
//! access (RSMA) with SDMA and NOMA at the achievable-rate level.
//!
//! The building blocks are layered bottom-up: [`numerics`] for the small
//! complex kernels, [`channel`] for drops and pair geometry, [`precoding`]
//! and [`rates`] for the per-drop physics, and [`montecarlo`] and [`isac`]
//! for the experiments. [`cli`] parses run configurations and writes CSV.

pub mod channel;
pub mod cli;
pub mod error;
pub mod isac;
pub mod montecarlo;
pub mod numerics;
pub mod precoding;
pub mod rates;

pub use channel::{ChannelSet, PairGeometry};
pub use error::{ConfigError, Error, Result};
pub use precoding::{CommonPrecoder, IsacOption, PrecoderSet, PrivatePrecoder};
pub use rates::{AllocationPolicy, RateReport, Scheme};
