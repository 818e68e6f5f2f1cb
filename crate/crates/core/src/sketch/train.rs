//! Rate–distortion training of the sketch codec and the λ sweep.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ms_ssim::{ms_ssim, ms_ssim_with_grad};
use super::ntc::{decode_sketch, encode_sketch, latent_rate, NtcArch, NtcMeta, NtcModel};
use crate::core::SketchMap;
use crate::error::{Error, Result};
use crate::optim::Adam;

/// Density parameters learn this much faster than the transforms.
const DENSITY_LR_SCALE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NtcTrainConfig {
    pub channels: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub target_bpp: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for NtcTrainConfig {
    fn default() -> Self {
        Self {
            channels: super::ntc::DEFAULT_CHANNELS.to_vec(),
            lambdas: (-4..=4).map(|e| 2f64.powi(e)).collect(),
            target_bpp: 0.01,
            epochs: 12,
            batch_size: 8,
            learning_rate: 2e-3,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl NtcTrainConfig {
    pub fn validate(&self) -> Result<()> {
        NtcArch::new(self.channels.clone()).map_err(|e| Error::Config(e.to_string()))?;
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config(
                "lambda grid must be non-empty and non-negative".into(),
            ));
        }
        if !(self.target_bpp > 0.0) {
            return Err(Error::Config("target bpp must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) || self.validation_fraction == 0.0 {
            return Err(Error::Config(
                "validation fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the λ sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub validation_bpp: f64,
    pub validation_ms_ssim: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Model whose validation rate is nearest the target.
    pub model: NtcModel,
    pub sweep: Vec<SweepPoint>,
    /// Every trained model, in grid order.
    pub models: Vec<NtcModel>,
}

/// Loss terms of one training example.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub bpp: f64,
    pub ms_ssim: f64,
    pub loss: f64,
}

/// `bpp + λ (1 - MS-SSIM)` on noisy latents; accumulates gradients into `grad`.
pub(crate) fn loss_and_grad(
    model: &NtcModel,
    sketch: &SketchMap,
    lambda: f64,
    rng: &mut ChaCha8Rng,
    grad: &mut [f32],
) -> Result<LossTerms> {
    let (w, h) = (sketch.width(), sketch.height());
    let pixels = (w * h) as f64;
    let padded = model.pad(sketch);
    let pw = padded.w;
    let (mut y, at) = model.analysis(padded);
    let c = model.arch().latent_channels();
    let (loc_off, ls_off) = model.density_offsets();

    let mut d_lat = Array2::<f32>::zeros(y.data.raw_dim());
    let mut bits = 0.0;
    for (i, (v, d)) in y.data.iter_mut().zip(d_lat.iter_mut()).enumerate() {
        *v += rng.gen::<f32>() - 0.5;
        let k = i % c;
        let t = latent_rate(model, k, *v);
        bits += t.bits;
        *d = (t.d_value / pixels) as f32;
        grad[loc_off + k] += (t.d_loc / pixels) as f32;
        grad[ls_off + k] += (t.d_log_scale / pixels) as f32;
    }

    let (out, st) = model.synthesis(y);
    let mut crop = Vec::with_capacity(w * h);
    for yy in 0..h {
        for xx in 0..w {
            crop.push(out.data[[yy * pw + xx, 0]]);
        }
    }
    let (ms, g) = ms_ssim_with_grad(sketch.data(), &crop, w, h)?;
    let mut d_out = Array2::<f32>::zeros(out.data.raw_dim());
    for yy in 0..h {
        for xx in 0..w {
            d_out[[yy * pw + xx, 0]] = (-lambda * g[yy * w + xx]) as f32;
        }
    }
    let back = model.synthesis_backward(&st, &out.data, d_out, grad);
    d_lat += &back;
    model.analysis_backward(&at, d_lat, grad);

    let bpp = bits / pixels;
    Ok(LossTerms {
        bpp,
        ms_ssim: ms,
        loss: bpp + lambda * (1.0 - ms),
    })
}

/// Trains one model at a fixed λ.
pub fn train_at_lambda(
    train: &[SketchMap],
    cfg: &NtcTrainConfig,
    lambda: f64,
    stream: u64,
) -> Result<(NtcModel, f64)> {
    if train.is_empty() {
        return Err(Error::Data("no training sketches".into()));
    }
    let arch = NtcArch::new(cfg.channels.clone())?;
    let mut model = NtcModel::init(arch, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let (split, _) = model.density_offsets();
    let mut opt = Adam::new(split, cfg.learning_rate);
    let density_lr = cfg.learning_rate * DENSITY_LR_SCALE;
    let mut density_opt = Adam::new(model.params().len() - split, density_lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let steps_per_epoch = train.len().div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let decay_at = total_steps * 4 / 5;
    let mut step = 0;
    let mut epoch_loss = f64::NAN;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            if step == decay_at {
                opt.set_lr(cfg.learning_rate * 0.1);
                density_opt.set_lr(density_lr * 0.1);
            }
            let mut grad = vec![0.0f32; model.params().len()];
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += loss_and_grad(&model, &train[i], lambda, &mut rng, &mut grad)?.loss;
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical {
                    step,
                    what: format!("training loss at lambda {lambda}"),
                });
            }
            let scale = 1.0 / batch.len() as f32;
            grad.iter_mut().for_each(|g| *g *= scale);
            let (net, density) = model.params_mut().split_at_mut(split);
            opt.step(net, &grad[..split]);
            density_opt.step(density, &grad[split..]);
            sum += batch_loss;
            step += 1;
        }
        epoch_loss = sum / train.len() as f64;
        log::debug!("lambda {lambda}: epoch loss {epoch_loss:.5}");
    }
    model.refresh_tables();
    model.meta = NtcMeta {
        lambda,
        target_bpp: cfg.target_bpp,
        seed: cfg.seed,
        epochs: cfg.epochs as u32,
        train_count: train.len() as u32,
        ..NtcMeta::default()
    };
    Ok((model, epoch_loss))
}

/// Mean coded bits per pixel (payload header included) and mean MS-SSIM after
/// a full encode/decode round trip.
pub fn evaluate_codec(model: &NtcModel, sketches: &[SketchMap]) -> Result<(f64, f64)> {
    if sketches.is_empty() {
        return Err(Error::Data("no sketches to evaluate".into()));
    }
    let mut bpp = 0.0;
    let mut quality = 0.0;
    for s in sketches {
        let bytes = encode_sketch(s, model)?;
        bpp += (bytes.len() * 8) as f64 / (s.width() * s.height()) as f64;
        quality += ms_ssim(s, &decode_sketch(&bytes, model)?)?;
    }
    let n = sketches.len() as f64;
    Ok((bpp / n, quality / n))
}

/// Deterministic train/validation split.
pub fn split_dataset(
    sketches: &[SketchMap],
    validation_fraction: f64,
    seed: u64,
) -> Result<(Vec<SketchMap>, Vec<SketchMap>)> {
    if sketches.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 sketches, got {}",
            sketches.len()
        )));
    }
    let mut idx: Vec<usize> = (0..sketches.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    let n_val = ((sketches.len() as f64 * validation_fraction).ceil() as usize)
        .clamp(1, sketches.len() - 1);
    let val = idx[..n_val].iter().map(|&i| sketches[i].clone()).collect();
    let train = idx[n_val..].iter().map(|&i| sketches[i].clone()).collect();
    Ok((train, val))
}

/// Trains one model per λ and keeps the one whose validation rate is nearest
/// `target_bpp`.
pub fn train_ntc(sketches: &[SketchMap], cfg: &NtcTrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (train, val) = split_dataset(sketches, cfg.validation_fraction, cfg.seed)?;
    let mut sweep = Vec::new();
    let mut models = Vec::new();
    for (k, &lambda) in cfg.lambdas.iter().enumerate() {
        let (mut model, loss) = train_at_lambda(&train, cfg, lambda, k as u64)?;
        let (bpp, quality) = evaluate_codec(&model, &val)?;
        model.meta.validation_bpp = bpp;
        model.meta.validation_ms_ssim = quality;
        log::info!("lambda {lambda}: validation bpp {bpp:.5}, ms-ssim {quality:.4}");
        sweep.push(SweepPoint {
            lambda,
            validation_bpp: bpp,
            validation_ms_ssim: quality,
            final_train_loss: loss,
        });
        models.push(model);
    }
    let best = (0..sweep.len())
        .min_by(|&a, &b| {
            let da = (sweep[a].validation_bpp - cfg.target_bpp).abs();
            let db = (sweep[b].validation_bpp - cfg.target_bpp).abs();
            da.total_cmp(&db)
        })
        .expect("grid is non-empty");
    Ok(TrainOutcome {
        model: models[best].clone(),
        sweep,
        models,
    })
}
