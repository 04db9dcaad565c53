//! Range filters over 64-bit integer keys.
//!
//! * [`GrafiteFilter`] answers range-emptiness queries with a false-positive
//!   probability bounded by `ℓ·ε/L` for every query workload, using
//!   `n·log2(L/ε) + 2n + o(n)` bits.
//! * [`BucketingFilter`] records which fixed-width buckets of the universe
//!   are occupied; cheap and fast, but with no guarantee on correlated queries.
//!
//! Both store sorted integers with [`EliasFano`]. The [`workloads`] and
//! [`bench`] modules generate datasets and query workloads and measure
//! false-positive rates, latency and construction time.

mod bits;
mod codec;

pub mod bench;
pub mod bucketing;
pub mod eliasfano;
pub mod error;
pub mod grafite;
pub mod modhash;
pub mod rng;
pub mod workloads;

pub use bits::SELECT_SAMPLE_RATE;
pub use bucketing::BucketingFilter;
pub use eliasfano::EliasFano;
pub use error::{Error, Result};
pub use grafite::{Answer, Epsilon, GrafiteBuilder, GrafiteFilter, FULL_UNIVERSE};
pub use modhash::PairwiseHash;
pub use workloads::QueryWorkload;
