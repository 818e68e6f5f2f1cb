//! Edge-map sketches: extraction, MS-SSIM, and a learned transform codec.

mod edge;
pub mod entropy;
mod ms_ssim;
mod ntc;
pub mod range_coder;
mod train;

pub use edge::{extract_sketch, EdgeDetector, GradientEdgeDetector, ProcessEdgeDetector};
pub use ms_ssim::{ms_ssim, ms_ssim_image, ms_ssim_plane, ms_ssim_with_grad, scale_plan};
pub use ntc::{
    decode_sketch, encode_sketch, estimate_payload_bits, NtcArch, NtcMeta, NtcModel,
    DEFAULT_CHANNELS, MAX_SKETCH_PIXELS, SKETCH_HEADER_LEN,
};
pub use train::{
    evaluate_codec, split_dataset, train_at_lambda, train_ntc, LossTerms, NtcTrainConfig,
    SweepPoint, TrainOutcome,
};
