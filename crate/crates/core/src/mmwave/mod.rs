//! Hybrid-MIMO mmWave channel estimation: scene synthesis, training,
//! problem assembly and the evaluation metrics.

pub mod capacity;
pub mod estimate;
pub mod problem;
pub mod scene;
pub mod sounding;
pub mod system;

pub use capacity::{achieved_spectral_efficiency, spectral_efficiency};
pub use estimate::{
    angular_error, channel_nmse, estimate_position, extract_paths, reconstruct_taps, EstimatedPath,
};
pub use problem::{assemble_problem, channel_dictionaries, direct_dense_measurement};
pub use scene::{
    gen_channel_taps, generate_scene, ArrayPose, ChannelPath, ChannelScene, SceneMode,
};
pub use sounding::{
    build_frames, gen_codebooks, gen_pilots, sound_channel, whiten_frames, whiten_observations,
    SoundingFrame,
};
pub use system::{PilotReuse, SystemConfig};
