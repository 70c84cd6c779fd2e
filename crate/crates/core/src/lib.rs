//! Synthetic CPR signal generation, artifact injection, and unsupervised
//! multi-modal denoising.
//!
//! The crate is organised bottom-up:
//!
//! - [`babbs`] synthesizes clean five-channel sessions from the Babbs
//!   perfusion model and a patient parameter sweep.
//! - [`corruption`] applies seeded artifact injectors.
//! - [`nn`] is a small 64-bit dense/convolutional core with hand-written
//!   reverse-mode gradients and Adam.
//! - [`denoiser`] holds the per-channel residual autoencoders, the fusion
//!   network, windowed inference and checkpoints.
//! - [`trainer`] prepares windows and fits the model on noisy data only.
//! - [`baselines`] provides NLMS and a dense autoencoder for comparison.
//! - [`metrics`] computes SNR, PSNR and correlation preservation.

pub mod babbs;
pub mod baselines;
pub mod corruption;
pub mod denoiser;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod session;
pub mod trainer;

pub use error::{Error, Result};
pub use session::{Channel, SignalSession, CHANNELS};

/// Version tag written into session sidecars and checkpoints.
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
