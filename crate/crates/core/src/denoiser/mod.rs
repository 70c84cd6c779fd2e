//! Multi-modal residual autoencoder denoiser.

pub mod checkpoint;
pub mod inference;
pub mod model;

pub use checkpoint::{load_model, save_model};
pub use inference::{denoise_session, overlap_add};
pub use model::{
    build_model, build_model_with_window, ChannelAutoencoder, DenoiserModel, DenoiserNet,
    FusionNetwork,
};
