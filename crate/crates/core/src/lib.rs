//! Downlink coordinated multipoint (CoMP) in a heterogeneous LTE network,
//! with an SVM-gated dynamic trigger compared against a static SINR rule.

pub mod controller;
pub mod error;
pub mod geometry;
pub mod link;
pub mod mac;
pub mod metrics;
pub mod propagation;
pub mod rng;
pub mod runner;
pub mod svm;

pub use error::{Error, Result};
