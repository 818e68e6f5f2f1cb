//! Nonlinear transform codec for sketches.
//!
//! The analysis transform is a stack of stride-2 2×2 convolutions with leaky
//! ReLU between stages; synthesis mirrors it with stride-2 transposed
//! convolutions and ends in a sigmoid. Latents are rounded and range coded
//! under per-channel tables from [`super::entropy`].

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::entropy::{rate_term, ChannelTable, MAX_LATENT, SYMBOLS, TABLE_TOTAL};
use super::range_coder::{RangeDecoder, RangeEncoder};
use crate::core::image::clamp_unit;
use crate::core::SketchMap;
use crate::error::{Error, Result};

pub const ARCH_PATCH_CONV: u8 = 1;
pub const DEFAULT_CHANNELS: [usize; 5] = [1, 16, 32, 48, 64];
const LEAK: f32 = 0.2;
const MODEL_MAGIC: [u8; 4] = *b"TXNM";
const MODEL_VERSION: u8 = 1;
const DISTORTION_MS_SSIM: u8 = 1;
/// Sketch payload header: width and height as u16 BE.
pub const SKETCH_HEADER_LEN: usize = 4;
/// Largest sketch area the codec accepts; bounds decoder memory on corrupt headers.
pub const MAX_SKETCH_PIXELS: usize = 4096 * 4096;

/// Channel widths from the input map (1) to the latent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NtcArch {
    pub channels: Vec<usize>,
}

impl Default for NtcArch {
    fn default() -> Self {
        Self {
            channels: DEFAULT_CHANNELS.to_vec(),
        }
    }
}

impl NtcArch {
    pub fn new(channels: Vec<usize>) -> Result<Self> {
        if channels.len() < 2 || channels[0] != 1 || channels.contains(&0) {
            return Err(Error::Argument(format!(
                "invalid channel plan {channels:?}"
            )));
        }
        Ok(Self { channels })
    }

    pub fn stages(&self) -> usize {
        self.channels.len() - 1
    }

    pub fn latent_channels(&self) -> usize {
        *self.channels.last().unwrap()
    }

    /// Spatial downsampling factor of the analysis transform.
    pub fn stride(&self) -> usize {
        1 << self.stages()
    }

    fn layout(&self) -> Layout {
        let mut off = 0;
        let mut analysis = Vec::new();
        for i in 0..self.stages() {
            let (cin, cout) = (self.channels[i], self.channels[i + 1]);
            let w = off;
            off += 4 * cin * cout;
            let b = off;
            off += cout;
            analysis.push(Dense {
                w,
                b,
                rows: 4 * cin,
                cols: cout,
            });
        }
        let mut synthesis = Vec::new();
        for i in (0..self.stages()).rev() {
            let (cin, cout) = (self.channels[i + 1], self.channels[i]);
            let w = off;
            off += cin * 4 * cout;
            let b = off;
            off += cout;
            synthesis.push(Dense {
                w,
                b,
                rows: cin,
                cols: 4 * cout,
            });
        }
        let c = self.latent_channels();
        let loc = off;
        let log_scale = off + c;
        Layout {
            analysis,
            synthesis,
            loc,
            log_scale,
            len: off + 2 * c,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().len
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    rows: usize,
    cols: usize,
}

impl Dense {
    fn weight<'a>(&self, p: &'a [f32]) -> ArrayView2<'a, f32> {
        ArrayView2::from_shape(
            (self.rows, self.cols),
            &p[self.w..self.w + self.rows * self.cols],
        )
        .expect("layout matches parameter vector")
    }
}

#[derive(Debug, Clone)]
struct Layout {
    analysis: Vec<Dense>,
    synthesis: Vec<Dense>,
    loc: usize,
    log_scale: usize,
    len: usize,
}

/// Training provenance stored with a model.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NtcMeta {
    pub lambda: f64,
    pub target_bpp: f64,
    pub seed: u64,
    pub epochs: u32,
    pub train_count: u32,
    /// Mean coded bits per pixel (payload header included) on the validation split.
    pub validation_bpp: f64,
    /// Mean MS-SSIM of decoded validation sketches.
    pub validation_ms_ssim: f64,
}

impl Default for NtcMeta {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            target_bpp: 0.01,
            seed: 0,
            epochs: 0,
            train_count: 0,
            validation_bpp: 0.0,
            validation_ms_ssim: 0.0,
        }
    }
}

/// A trained (or freshly initialized) sketch codec.
#[derive(Debug, Clone, PartialEq)]
pub struct NtcModel {
    arch: NtcArch,
    params: Vec<f32>,
    tables: Vec<ChannelTable>,
    pub meta: NtcMeta,
}

/// Row-major `positions × channels` feature map.
#[derive(Debug, Clone)]
pub(crate) struct FeatureMap {
    pub h: usize,
    pub w: usize,
    pub data: Array2<f32>,
}

fn space_to_depth(x: &FeatureMap) -> Array2<f32> {
    let c = x.data.ncols();
    let (h2, w2) = (x.h / 2, x.w / 2);
    let mut out = Array2::<f32>::zeros((h2 * w2, 4 * c));
    for i in 0..h2 {
        for j in 0..w2 {
            let mut row = out.row_mut(i * w2 + j);
            for di in 0..2 {
                for dj in 0..2 {
                    let src = x.data.row((2 * i + di) * x.w + 2 * j + dj);
                    let k = (di * 2 + dj) * c;
                    row.slice_mut(s![k..k + c]).assign(&src);
                }
            }
        }
    }
    out
}

fn depth_to_space(z: &Array2<f32>, h: usize, w: usize) -> FeatureMap {
    let c = z.ncols() / 4;
    let (h2, w2) = (2 * h, 2 * w);
    let mut out = Array2::<f32>::zeros((h2 * w2, c));
    for i in 0..h {
        for j in 0..w {
            let src = z.row(i * w + j);
            for di in 0..2 {
                for dj in 0..2 {
                    let k = (di * 2 + dj) * c;
                    out.row_mut((2 * i + di) * w2 + 2 * j + dj)
                        .assign(&src.slice(s![k..k + c]));
                }
            }
        }
    }
    FeatureMap {
        h: h2,
        w: w2,
        data: out,
    }
}

fn leaky(v: f32) -> f32 {
    if v >= 0.0 {
        v
    } else {
        LEAK * v
    }
}

fn sigmoid(v: f32) -> f32 {
    1.0 / (1.0 + (-v).exp())
}

/// Intermediate values kept for the backward pass.
pub(crate) struct AnalysisTrace {
    patches: Vec<Array2<f32>>,
    pre: Vec<Array2<f32>>,
    dims: Vec<(usize, usize)>,
}

pub(crate) struct SynthesisTrace {
    inputs: Vec<Array2<f32>>,
    pre: Vec<Array2<f32>>,
    dims: Vec<(usize, usize)>,
}

impl NtcModel {
    /// Randomly initialized model with untrained unit-logistic tables.
    pub fn init(arch: NtcArch, seed: u64) -> Self {
        let layout = arch.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0f32; layout.len];
        for d in layout.analysis.iter().chain(&layout.synthesis) {
            let std = (2.0 / d.rows as f32).sqrt();
            for p in &mut params[d.w..d.w + d.rows * d.cols] {
                *p = rng.sample::<f32, _>(StandardNormal) * std;
            }
        }
        // start the output near an empty sketch
        let last = layout.synthesis.last().unwrap();
        params[last.b] = -2.0;
        let mut m = Self {
            arch,
            params,
            tables: Vec::new(),
            meta: NtcMeta::default(),
        };
        m.refresh_tables();
        m
    }

    pub fn arch(&self) -> &NtcArch {
        &self.arch
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn tables(&self) -> &[ChannelTable] {
        &self.tables
    }

    /// Rebuilds the integer coding tables from the current density parameters.
    pub fn refresh_tables(&mut self) {
        let l = self.arch.layout();
        let c = self.arch.latent_channels();
        self.tables = (0..c)
            .map(|k| {
                ChannelTable::from_logistic(
                    self.params[l.loc + k] as f64,
                    self.params[l.log_scale + k] as f64,
                )
            })
            .collect();
    }

    fn analysis_bias(&self, stage: usize) -> &[f32] {
        let d = self.arch.layout().analysis[stage];
        &self.params[d.b..d.b + d.cols]
    }

    fn synthesis_bias(&self, stage: usize) -> &[f32] {
        let d = self.arch.layout().synthesis[stage];
        &self.params[d.b..d.b + d.cols / 4]
    }

    /// Input map (already padded to a multiple of the stride) to latents.
    pub(crate) fn analysis(&self, x: FeatureMap) -> (FeatureMap, AnalysisTrace) {
        let layout = self.arch.layout();
        let mut cur = x;
        let mut trace = AnalysisTrace {
            patches: Vec::new(),
            pre: Vec::new(),
            dims: Vec::new(),
        };
        let n = layout.analysis.len();
        for (i, d) in layout.analysis.iter().enumerate() {
            let p = space_to_depth(&cur);
            let mut z = p.dot(&d.weight(&self.params));
            let b = self.analysis_bias(i);
            for mut row in z.rows_mut() {
                row.iter_mut().zip(b).for_each(|(v, bb)| *v += bb);
            }
            let (h, w) = (cur.h / 2, cur.w / 2);
            let out = if i + 1 < n { z.mapv(leaky) } else { z.clone() };
            trace.patches.push(p);
            trace.pre.push(z);
            trace.dims.push((h, w));
            cur = FeatureMap { h, w, data: out };
        }
        (cur, trace)
    }

    /// Latents to reconstruction in `[0, 1]` (sigmoid output).
    pub(crate) fn synthesis(&self, y: FeatureMap) -> (FeatureMap, SynthesisTrace) {
        let layout = self.arch.layout();
        let mut cur = y;
        let mut trace = SynthesisTrace {
            inputs: Vec::new(),
            pre: Vec::new(),
            dims: Vec::new(),
        };
        let n = layout.synthesis.len();
        for (i, d) in layout.synthesis.iter().enumerate() {
            let mut z = cur.data.dot(&d.weight(&self.params));
            let b = self.synthesis_bias(i);
            let cout = b.len();
            for mut row in z.rows_mut() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v += b[k % cout];
                }
            }
            let up = depth_to_space(&z, cur.h, cur.w);
            let act = if i + 1 < n {
                up.data.mapv(leaky)
            } else {
                up.data.mapv(sigmoid)
            };
            trace.inputs.push(cur.data.clone());
            trace.pre.push(up.data);
            trace.dims.push((cur.h, cur.w));
            cur = FeatureMap {
                h: up.h,
                w: up.w,
                data: act,
            };
        }
        (cur, trace)
    }

    /// Backpropagates d loss / d output (post-sigmoid) through synthesis.
    /// Adds parameter gradients to `grad`; returns d loss / d latent.
    pub(crate) fn synthesis_backward(
        &self,
        trace: &SynthesisTrace,
        output: &Array2<f32>,
        d_out: Array2<f32>,
        grad: &mut [f32],
    ) -> Array2<f32> {
        let layout = self.arch.layout();
        let n = layout.synthesis.len();
        // through the final sigmoid
        let mut g = d_out;
        g.zip_mut_with(output, |gv, &o| *gv *= o * (1.0 - o));
        for i in (0..n).rev() {
            let d = layout.synthesis[i];
            if i + 1 < n {
                g.zip_mut_with(&trace.pre[i], |gv, &z| {
                    if z < 0.0 {
                        *gv *= LEAK
                    }
                });
            }
            let (h, w) = trace.dims[i];
            let gz = space_to_depth(&FeatureMap {
                h: 2 * h,
                w: 2 * w,
                data: g,
            });
            let dw = trace.inputs[i].t().dot(&gz);
            for (acc, v) in grad[d.w..d.w + d.rows * d.cols].iter_mut().zip(dw.iter()) {
                *acc += v;
            }
            let cout = d.cols / 4;
            let col_sums = gz.sum_axis(Axis(0));
            for (k, v) in col_sums.iter().enumerate() {
                grad[d.b + k % cout] += v;
            }
            g = gz.dot(&d.weight(&self.params).t());
        }
        g
    }

    /// Backpropagates d loss / d latent through analysis, adding parameter gradients.
    pub(crate) fn analysis_backward(
        &self,
        trace: &AnalysisTrace,
        d_latent: Array2<f32>,
        grad: &mut [f32],
    ) {
        let layout = self.arch.layout();
        let n = layout.analysis.len();
        let mut g = d_latent;
        for i in (0..n).rev() {
            let d = layout.analysis[i];
            if i + 1 < n {
                g.zip_mut_with(&trace.pre[i], |gv, &z| {
                    if z < 0.0 {
                        *gv *= LEAK
                    }
                });
            }
            let dw = trace.patches[i].t().dot(&g);
            for (acc, v) in grad[d.w..d.w + d.rows * d.cols].iter_mut().zip(dw.iter()) {
                *acc += v;
            }
            for (k, v) in g.sum_axis(Axis(0)).iter().enumerate() {
                grad[d.b + k] += v;
            }
            if i == 0 {
                break;
            }
            let dp = g.dot(&d.weight(&self.params).t());
            let (h, w) = trace.dims[i];
            g = depth_to_space(&dp, h, w).data;
        }
    }

    /// Density parameters for latent channel `k`.
    pub(crate) fn density(&self, k: usize) -> (f32, f32) {
        let l = self.arch.layout();
        (self.params[l.loc + k], self.params[l.log_scale + k])
    }

    pub(crate) fn density_offsets(&self) -> (usize, usize) {
        let l = self.arch.layout();
        (l.loc, l.log_scale)
    }

    /// Zero-pads a sketch up to a multiple of the stride.
    pub(crate) fn pad(&self, sketch: &SketchMap) -> FeatureMap {
        let st = self.arch.stride();
        let (w, h) = (sketch.width(), sketch.height());
        let (pw, ph) = (w.div_ceil(st) * st, h.div_ceil(st) * st);
        let mut data = Array2::<f32>::zeros((pw * ph, 1));
        for y in 0..h {
            for x in 0..w {
                data[[y * pw + x, 0]] = sketch.get(x, y);
            }
        }
        FeatureMap { h: ph, w: pw, data }
    }

    /// Rounded latents of a sketch, row-major positions × channels.
    pub fn quantized_latents(&self, sketch: &SketchMap) -> Vec<i32> {
        let (y, _) = self.analysis(self.pad(sketch));
        y.data
            .iter()
            .map(|&v| {
                if v.is_finite() {
                    (v.round() as i64).clamp(-(MAX_LATENT as i64), MAX_LATENT as i64) as i32
                } else {
                    0
                }
            })
            .collect()
    }

    /// Ideal code length of the sketch's latents under the coding tables, in bits.
    pub fn estimate_bits(&self, sketch: &SketchMap) -> f64 {
        let c = self.arch.latent_channels();
        self.quantized_latents(sketch)
            .iter()
            .enumerate()
            .map(|(i, &v)| self.tables[i % c].value_bits(v))
            .sum()
    }

    fn reconstruct(&self, latents: &[i32], width: usize, height: usize) -> Result<SketchMap> {
        let st = self.arch.stride();
        let (lw, lh) = (width.div_ceil(st), height.div_ceil(st));
        let c = self.arch.latent_channels();
        let data =
            Array2::from_shape_vec((lw * lh, c), latents.iter().map(|&v| v as f32).collect())
                .map_err(|e| Error::Shape(e.to_string()))?;
        let (out, _) = self.synthesis(FeatureMap { h: lh, w: lw, data });
        let pw = out.w;
        let mut crop = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                crop.push(clamp_unit(out.data[[y * pw + x, 0]]));
            }
        }
        SketchMap::new(width, height, crop)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.push(ARCH_PATCH_CONV);
        out.push(DISTORTION_MS_SSIM);
        out.push(self.arch.channels.len() as u8);
        for &c in &self.arch.channels {
            out.extend_from_slice(&(c as u16).to_be_bytes());
        }
        let m = &self.meta;
        for v in [
            m.lambda,
            m.target_bpp,
            m.validation_bpp,
            m.validation_ms_ssim,
        ] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&m.seed.to_be_bytes());
        out.extend_from_slice(&m.epochs.to_be_bytes());
        out.extend_from_slice(&m.train_count.to_be_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_be_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out.extend_from_slice(&(self.tables.len() as u16).to_be_bytes());
        out.extend_from_slice(&(SYMBOLS as u16).to_be_bytes());
        for t in &self.tables {
            for &f in t.freqs() {
                out.extend_from_slice(&(f as u16).to_be_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Truncation {
                needed: 8,
                found: bytes.len(),
            });
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_be_bytes(crc.try_into().unwrap());
        let mut r = ByteReader { b: body, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a sketch codec model".into()));
        }
        let version = r.u8()?;
        if version != MODEL_VERSION {
            return Err(Error::Version(version));
        }
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Corruption { stored, computed });
        }
        if r.u8()? != ARCH_PATCH_CONV {
            return Err(Error::Format("unknown architecture id".into()));
        }
        if r.u8()? != DISTORTION_MS_SSIM {
            return Err(Error::Format("unknown distortion id".into()));
        }
        let n = r.u8()? as usize;
        let channels = (0..n)
            .map(|_| r.u16().map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let arch = NtcArch::new(channels)?;
        let meta = NtcMeta {
            lambda: r.f64()?,
            target_bpp: r.f64()?,
            validation_bpp: r.f64()?,
            validation_ms_ssim: r.f64()?,
            seed: r.u64()?,
            epochs: r.u32()?,
            train_count: r.u32()?,
        };
        let count = r.u32()? as usize;
        if count != arch.param_count() {
            return Err(Error::Format(format!(
                "{count} parameters stored, architecture needs {}",
                arch.param_count()
            )));
        }
        let params = (0..count).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        let table_count = r.u16()? as usize;
        let symbols = r.u16()? as usize;
        if table_count != arch.latent_channels() || symbols != SYMBOLS {
            return Err(Error::Format("entropy table shape mismatch".into()));
        }
        let mut tables = Vec::with_capacity(table_count);
        for _ in 0..table_count {
            let freqs = (0..symbols)
                .map(|_| r.u16().map(u32::from))
                .collect::<Result<Vec<_>>>()?;
            tables.push(ChannelTable::from_freqs(freqs)?);
        }
        if r.pos != body.len() {
            return Err(Error::Format("trailing bytes in model file".into()));
        }
        debug_assert!(tables
            .iter()
            .all(|t| t.freqs().iter().sum::<u32>() == TABLE_TOTAL));
        Ok(Self {
            arch,
            params,
            tables,
            meta,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct ByteReader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.b.len() {
            return Err(Error::Truncation {
                needed: self.pos + n,
                found: self.b.len(),
            });
        }
        let s = &self.b[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Range codes the rounded latents of a sketch.
///
/// Layout: width u16 BE, height u16 BE, range-coded latents (positions
/// row-major, channels inner).
pub fn encode_sketch(sketch: &SketchMap, model: &NtcModel) -> Result<Vec<u8>> {
    let w = u16::try_from(sketch.width()).map_err(|_| Error::Range("sketch width".into()))?;
    let h = u16::try_from(sketch.height()).map_err(|_| Error::Range("sketch height".into()))?;
    if sketch.width() * sketch.height() > MAX_SKETCH_PIXELS {
        return Err(Error::Range(format!(
            "sketch area exceeds {MAX_SKETCH_PIXELS} pixels"
        )));
    }
    let c = model.arch.latent_channels();
    let mut enc = RangeEncoder::new();
    for (i, &v) in model.quantized_latents(sketch).iter().enumerate() {
        model.tables[i % c].encode(&mut enc, v);
    }
    let mut out = Vec::new();
    out.extend_from_slice(&w.to_be_bytes());
    out.extend_from_slice(&h.to_be_bytes());
    out.extend_from_slice(&enc.finish());
    Ok(out)
}

/// Decodes a sketch payload.
///
/// Streams produced under a different model decode to an arbitrary map or
/// fail with [`Error::Decode`]; they never panic.
pub fn decode_sketch(bytes: &[u8], model: &NtcModel) -> Result<SketchMap> {
    if bytes.len() < SKETCH_HEADER_LEN {
        return Err(Error::Decode(format!(
            "{} bytes is shorter than the sketch header",
            bytes.len()
        )));
    }
    let w = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    let h = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    if w == 0 || h == 0 || w * h > MAX_SKETCH_PIXELS {
        return Err(Error::Decode(format!("invalid sketch size {w}x{h}")));
    }
    let st = model.arch.stride();
    let c = model.arch.latent_channels();
    let count = w.div_ceil(st) * h.div_ceil(st) * c;
    let mut dec = RangeDecoder::new(&bytes[SKETCH_HEADER_LEN..]);
    let mut latents = Vec::with_capacity(count);
    for i in 0..count {
        latents.push(model.tables[i % c].decode(&mut dec)?);
    }
    model.reconstruct(&latents, w, h)
}

/// Latent-domain ideal code length plus the payload header, in bits.
pub fn estimate_payload_bits(sketch: &SketchMap, model: &NtcModel) -> f64 {
    model.estimate_bits(sketch) + (SKETCH_HEADER_LEN * 8) as f64
}

/// Rate term for a noisy latent value in channel `k`; used by training.
pub(crate) fn latent_rate(model: &NtcModel, k: usize, value: f32) -> super::entropy::RateTerm {
    let (loc, ls) = model.density(k);
    rate_term(value as f64, loc as f64, ls as f64)
}
