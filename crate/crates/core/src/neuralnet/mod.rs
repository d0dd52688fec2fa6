//! Fully-connected regression network trained with Adam.
//!
//! The network is plain dense layers with the rectifier between hidden
//! layers and a linear scalar output; targets are raw partition counts.
//! Training runs seeded minibatch epochs and keeps a snapshot of the
//! weights from the epoch with the lowest validation error. Zero hidden
//! layers degenerates to linear regression.

mod adam;
mod io;
mod mlp;
mod train;

pub use adam::{adam_step, AdamState};
pub use io::ModelBundle;
pub use mlp::{backward, mse, Activation, Gradients, Layer, Mlp};
pub use train::{train, EpochStats, TrainData, TrainReport};

use crate::error::{Error, Result};

/// Architecture and init settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpConfig {
    pub input_width: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub init_seed: u64,
}

impl MlpConfig {
    /// 200-wide rectifier stack on the full 42-feature layout.
    pub fn standard(hidden_layers: usize, init_seed: u64) -> Self {
        MlpConfig {
            input_width: crate::features::FEATURE_COUNT,
            hidden_layers,
            hidden_width: 200,
            activation: Activation::Relu,
            init_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(Error::invalid("input width must be >= 1"));
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(Error::invalid("hidden width must be >= 1"));
        }
        Ok(())
    }
}

/// Optimization-loop settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Evaluate validation error every this many epochs.
    pub eval_every: usize,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    /// Batch 1024, 200 epochs, validation every epoch.
    pub fn standard(shuffle_seed: u64) -> Self {
        TrainConfig { batch_size: 1024, max_epochs: 200, eval_every: 1, shuffle_seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.eval_every == 0 {
            return Err(Error::invalid(
                "batch size, epoch count and eval interval must be >= 1",
            ));
        }
        Ok(())
    }
}
