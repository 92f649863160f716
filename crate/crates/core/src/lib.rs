//! Distribution testing under local differential privacy.
//!
//! Simulates simultaneous-message-passing protocols in which each player
//! holds one sample, privatizes it through a locally private channel and
//! sends the result to a referee that decides between two hypotheses.

pub mod channel;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod hadamard;
pub mod identity;
pub mod independence;
pub mod reduction;
pub mod rng;
pub mod smp;
pub mod verify;

pub use error::{Error, Result};
