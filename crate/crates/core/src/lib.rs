//! Exact combinatorics of unicritical laminations on the circle.
//!
//! Everything is computed over exact rationals: itineraries and kneading
//! sequences, cylinder sets and gluing links, generalized cylinder sets and
//! legal words, encounter numbers, and nice gluing circuits with their
//! pullback.

pub mod circle;
pub mod circuits;
pub mod cli;
pub mod error;
pub mod gcs;
pub mod lamination;
pub mod render;
pub mod report;
pub mod symbolic;
pub mod word;

pub use circle::{Angle, Arc, ArcSet, Degree};
pub use error::{Error, Result};
pub use word::{EventuallyPeriodicWord, Letter, Word};
