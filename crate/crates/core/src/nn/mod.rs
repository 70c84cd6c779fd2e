//! Dense and 1-D convolutional building blocks with reverse-mode gradients.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod tensor;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use layers::{
    concat_channels, conv1d, conv1d_backward, dense, dense_backward, mae_loss, mae_terms,
    maxpool1d, maxpool1d_backward, relu, relu_backward, split_channels, upsample1d,
    upsample1d_backward, LayerGrads, LayerKind, LayerParams, Padding,
};
pub use tensor::Tensor;

/// Anything exposing its trainable parameters as a fixed, ordered list of
/// slices. The order is part of the contract: optimizer state and
/// checkpoints rely on it.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    /// Overwrites all parameters from a flat vector produced by [`flatten`].
    ///
    /// [`flatten`]: Parameters::flatten
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        }
        assert_eq!(off, flat.len(), "flat parameter vector has the wrong size");
    }
}

impl Parameters for LayerParams {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![self.weights.data(), &self.bias]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.data_mut(), &mut self.bias]
    }
}
