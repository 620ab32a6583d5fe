//! Reconstruction of voxel fields from photon-count histograms: losses,
//! background estimation, the optimizer, and the training loop.

pub mod adam;
pub mod background;
pub mod loss;
pub mod trainer;

pub use adam::{learning_rate_at, OptimizerState, SCHEDULE_FRACTIONS, SCHEDULE_GAMMA};
pub use background::{estimate_background, BACKGROUND_SAFETY_FACTOR};
pub use loss::{carving_mask, loss_sc, loss_tau, LAMBDA_SC_CAPTURED, LAMBDA_SC_SIMULATED};
pub use trainer::{
    render_seed,
    train, TrainConfig, TrainMeta, TrainOutput, BBOX_PAD_FRACTION, DIVERGED_CHECKPOINT_FILE,
    FINAL_CHECKPOINT_FILE, METRICS_FILE, NUM_ACCUM_SLOTS, TRAIN_META_FILE,
};
