use std::io::Cursor;
use std::path::Path;

use image::imageops::FilterType;
use image::{GrayImage, ImageFormat, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};

/// Smallest accepted side length for source and reconstructed images.
pub const MIN_IMAGE_SIDE: usize = 8;

/// An RGB image with samples in `[0, 1]`, stored row-major and channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width < MIN_IMAGE_SIDE || height < MIN_IMAGE_SIDE {
            return Err(Error::Shape(format!(
                "image is {width}x{height}, both sides must be at least {MIN_IMAGE_SIDE}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Shape(format!(
                "expected {} samples for {width}x{height}x3, got {}",
                width * height * 3,
                data.len()
            )));
        }
        check_unit_range(&data)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from a per-pixel closure; values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).iter().map(|v| clamp_unit(*v)));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Single channel plane (0 = R, 1 = G, 2 = B).
    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    /// Rec. 601 luma.
    pub fn luminance(&self) -> Vec<f32> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    pub fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let p = self.pixel(x as usize, y as usize);
            Rgb(p.map(to_u8))
        })
    }

    pub fn from_rgb8(img: &RgbImage) -> Result<Self> {
        let data = img.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Self::new(img.width() as usize, img.height() as usize, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| image_err(path, e))?.to_rgb8();
        Self::from_rgb8(&img)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_rgb8()
            .save_with_format(path, ImageFormat::Png)
            .map_err(|e| image_err(path, e))
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb8()
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| Error::Format(format!("PNG decode: {e}")))?
            .to_rgb8();
        Self::from_rgb8(&img)
    }

    /// Bicubic resize; returns a clone when the size already matches.
    pub fn resized(&self, width: usize, height: usize) -> Result<Self> {
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let mut planes = Vec::with_capacity(3);
        for c in 0..3 {
            planes.push(resize_plane(
                &self.channel(c),
                self.width,
                self.height,
                width,
                height,
            ));
        }
        let mut data = Vec::with_capacity(width * height * 3);
        for i in 0..width * height {
            for plane in &planes {
                data.push(plane[i]);
            }
        }
        Self::new(width, height, data)
    }
}

/// Single-channel edge map in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl SketchMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty sketch {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        check_unit_range(&data)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Clamps every sample into `[0, 1]` before validating shape.
    pub fn from_clamped(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(width, height, data.into_iter().map(clamp_unit).collect())
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn to_gray8(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([to_u8(self.get(x as usize, y as usize))])
        })
    }

    pub fn from_gray8(img: &GrayImage) -> Result<Self> {
        let data = img.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Self::new(img.width() as usize, img.height() as usize, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|e| image_err(path, e))?
            .to_luma8();
        Self::from_gray8(&img)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_gray8()
            .save_with_format(path, ImageFormat::Png)
            .map_err(|e| image_err(path, e))
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_gray8()
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| Error::Format(format!("PNG decode: {e}")))?
            .to_luma8();
        Self::from_gray8(&img)
    }

    /// Bicubic resize, clamped back into `[0, 1]`.
    pub fn resized(&self, width: usize, height: usize) -> Result<Self> {
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        Self::new(
            width,
            height,
            resize_plane(&self.data, self.width, self.height, width, height),
        )
    }
}

fn resize_plane(plane: &[f32], w: usize, h: usize, nw: usize, nh: usize) -> Vec<f32> {
    let buf =
        image::ImageBuffer::<Luma<f32>, Vec<f32>>::from_raw(w as u32, h as u32, plane.to_vec())
            .expect("plane length matches dimensions");
    let out = image::imageops::resize(&buf, nw as u32, nh as u32, FilterType::CatmullRom);
    out.into_raw().into_iter().map(clamp_unit).collect()
}

fn check_unit_range(data: &[f32]) -> Result<()> {
    if let Some((i, v)) = data
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::Range(format!(
            "sample {i} = {v} lies outside [0, 1]"
        )));
    }
    Ok(())
}

pub(crate) fn clamp_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

fn to_u8(v: f32) -> u8 {
    (clamp_unit(v) * 255.0).round() as u8
}

fn image_err(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}
