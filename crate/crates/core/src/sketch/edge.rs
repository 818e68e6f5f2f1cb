use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use crate::core::{Image, SketchMap};
use crate::error::{Error, Result};

/// Produces an edge map at the source image's resolution.
pub trait EdgeDetector: Send + Sync {
    fn name(&self) -> &str;

    fn detect(&self, image: &Image) -> Result<SketchMap>;
}

pub fn extract_sketch(image: &Image, detector: &dyn EdgeDetector) -> Result<SketchMap> {
    detector.detect(image)
}

/// 3×3 Sobel gradient magnitude of the luma plane, normalized so the
/// strongest response in the image is 1. Borders replicate.
///
/// The gain is capped at 16× a unit step's response, so near-flat images
/// are not inflated into full-strength edges.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradientEdgeDetector;

/// Sobel magnitude of an ideal unit step.
const UNIT_STEP_RESPONSE: f32 = 4.0;
const MAX_GAIN: f32 = 16.0;

impl GradientEdgeDetector {
    pub fn detect_plane(plane: &[f32], width: usize, height: usize) -> Vec<f32> {
        let at = |x: isize, y: isize| {
            let x = x.clamp(0, width as isize - 1) as usize;
            let y = y.clamp(0, height as isize - 1) as usize;
            plane[y * width + x]
        };
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height as isize {
            for x in 0..width as isize {
                let gx = (at(x + 1, y - 1) - at(x - 1, y - 1))
                    + 2.0 * (at(x + 1, y) - at(x - 1, y))
                    + (at(x + 1, y + 1) - at(x - 1, y + 1));
                let gy = (at(x - 1, y + 1) - at(x - 1, y - 1))
                    + 2.0 * (at(x, y + 1) - at(x, y - 1))
                    + (at(x + 1, y + 1) - at(x + 1, y - 1));
                out.push((gx * gx + gy * gy).sqrt());
            }
        }
        let peak = out.iter().copied().fold(0.0f32, f32::max);
        let scale = peak.max(UNIT_STEP_RESPONSE / MAX_GAIN);
        out.iter_mut().for_each(|v| *v = (*v / scale).min(1.0));
        out
    }
}

impl EdgeDetector for GradientEdgeDetector {
    fn name(&self) -> &str {
        "fallback-gradient"
    }

    fn detect(&self, image: &Image) -> Result<SketchMap> {
        let (w, h) = (image.width(), image.height());
        SketchMap::from_clamped(w, h, Self::detect_plane(&image.luminance(), w, h))
    }
}

/// Runs an external edge detector (for example an HED network wrapper).
///
/// The program receives the image as PNG on stdin and must write a
/// grayscale PNG to stdout. Outputs at a different resolution are resized
/// back to the source size.
#[derive(Debug, Clone)]
pub struct ProcessEdgeDetector {
    pub name: String,
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl EdgeDetector for ProcessEdgeDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn detect(&self, image: &Image) -> Result<SketchMap> {
        let png = image.to_png_bytes()?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Backend(format!("{}: {e}", self.program.display())))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let writer = std::thread::spawn(move || stdin.write_all(&png));
        let output = child
            .wait_with_output()
            .map_err(|e| Error::Backend(format!("{}: {e}", self.program.display())))?;
        // a detector may exit without draining stdin; its exit status decides
        let _ = writer.join();
        if !output.status.success() {
            return Err(Error::Backend(format!(
                "{} exited with {}: {}",
                self.program.display(),
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        SketchMap::from_png_bytes(&output.stdout)
            .map_err(|e| Error::Backend(format!("edge detector output: {e}")))?
            .resized(image.width(), image.height())
    }
}
