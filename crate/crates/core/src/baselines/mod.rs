//! Stand-in comparison methods: an NLMS linear predictor for the filtering
//! baseline and a dense vanilla autoencoder for the prior unsupervised ML
//! baseline. Both go through the same imputation and normalization as the
//! proposed model.

pub mod nlms;
pub mod vanilla;

pub use nlms::{nlms_denoise, nlms_denoise_session, NlmsConfig};
pub use vanilla::{
    vanilla_ae_denoise, vanilla_ae_fit, vanilla_ae_train, DenseAe, VanillaAeConfig, VanillaAeModel,
};
