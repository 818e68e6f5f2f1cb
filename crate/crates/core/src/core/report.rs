use serde::{Deserialize, Serialize};

use super::container::{Container, CRC_LEN, HEADER_LEN, LENGTH_PREFIX_LEN};
use super::{compute_bpp, Mode};
use crate::error::Result;

/// Rate and quality record for one compressed image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub image_id: String,
    pub mode: Mode,
    pub width: usize,
    pub height: usize,
    /// Size of the whole serialized container, in bits.
    pub total_bits: u64,
    pub bpp: f64,
    /// Header, length prefixes and checksum.
    pub overhead_bits: u64,
    pub text_bits: u64,
    pub sketch_bits: u64,
    pub d_clip: Option<f64>,
    pub ms_ssim: Option<f64>,
    pub psnr: Option<f64>,
    pub sampler_steps: u32,
    pub guidance: f32,
}

impl RateReport {
    pub fn from_container(image_id: impl Into<String>, container: &Container) -> Result<Self> {
        let width = container.width as usize;
        let height = container.height as usize;
        let total_bits = container.encoded_len() as u64 * 8;
        let text_bits = container.token_payload.len() as u64 * 8;
        let sketch_bits = container
            .sketch_payload
            .as_ref()
            .map_or(0, |s| s.len() as u64 * 8);
        let sketch_prefix = if container.sketch_payload.is_some() {
            LENGTH_PREFIX_LEN
        } else {
            0
        };
        Ok(Self {
            image_id: image_id.into(),
            mode: container.mode,
            width,
            height,
            total_bits,
            bpp: compute_bpp(total_bits, width, height)?,
            overhead_bits: ((HEADER_LEN + sketch_prefix + CRC_LEN) * 8) as u64,
            text_bits,
            sketch_bits,
            d_clip: None,
            ms_ssim: None,
            psnr: None,
            sampler_steps: 0,
            guidance: 0.0,
        })
    }

    pub fn sketch_bpp(&self) -> f64 {
        self.sketch_bits as f64 / (self.width * self.height) as f64
    }
}
