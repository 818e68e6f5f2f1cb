use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::FeatureExtractor;
use super::metrics::{d_clip_embeddings, fid, kid, psnr};
use crate::core::{Image, Mode, RateReport};
use crate::error::{Error, Result};
use crate::inversion::Embedder;
use crate::pipeline::{Decoder, Encoder};
use crate::sketch::ms_ssim_image;

/// Per-image and dataset metrics a benchmark may compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    DClip,
    MsSsim,
    Psnr,
    Fid,
    Kid,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::DClip,
        Metric::MsSsim,
        Metric::Psnr,
        Metric::Fid,
        Metric::Kid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::DClip => "d_clip",
            Metric::MsSsim => "ms_ssim",
            Metric::Psnr => "psnr",
            Metric::Fid => "fid",
            Metric::Kid => "kid",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSettings {
    pub modes: Vec<Mode>,
    /// Backend sampler seed.
    pub seed: u64,
    pub metrics: Vec<Metric>,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            modes: vec![Mode::Pic, Mode::Pics],
            seed: 0,
            metrics: Metric::ALL.to_vec(),
        }
    }
}

impl BenchmarkSettings {
    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }
}

/// One CSV row. Rate fields are empty when reconstructions were supplied
/// rather than produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub image_id: String,
    pub mode: String,
    pub total_bits: Option<u64>,
    pub bpp: Option<f64>,
    pub d_clip: Option<f64>,
    pub ms_ssim: Option<f64>,
    pub psnr: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 7] = [
    "image_id",
    "mode",
    "total_bits",
    "bpp",
    "d_clip",
    "ms_ssim",
    "psnr",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub image_id: String,
    pub mode: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: String,
    pub count: usize,
    pub mean_bpp: Option<f64>,
    pub mean_d_clip: Option<f64>,
    pub mean_ms_ssim: Option<f64>,
    /// Mean over finite values.
    pub mean_psnr: Option<f64>,
    pub fid: Option<f64>,
    pub kid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub images: usize,
    pub rows: usize,
    pub failures: usize,
    pub embedder: String,
    pub features: String,
    pub backend: Option<String>,
    pub sampler_steps: Option<u32>,
    pub guidance: Option<f64>,
    pub seed: Option<u64>,
    pub modes: Vec<ModeSummary>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub rows: Vec<BenchmarkRow>,
    /// Rate reports with metrics filled in (end-to-end runs only).
    pub reports: Vec<RateReport>,
    pub failures: Vec<Failure>,
    pub summary: BenchmarkSummary,
}

struct Metrics<'a> {
    embedder: &'a dyn Embedder,
    features: &'a dyn FeatureExtractor,
    settings: &'a BenchmarkSettings,
}

struct Scored {
    d_clip: Option<f64>,
    ms_ssim: Option<f64>,
    psnr: Option<f64>,
    features: Option<Vec<f32>>,
}

impl Metrics<'_> {
    fn wants_features(&self) -> bool {
        self.settings.wants(Metric::Fid) || self.settings.wants(Metric::Kid)
    }

    fn score(
        &self,
        original: &Image,
        original_embedding: Option<&[f32]>,
        recon: &Image,
    ) -> Result<Scored> {
        let d_clip = match original_embedding {
            Some(e) => Some(d_clip_embeddings(e, &self.embedder.encode_image(recon)?)?),
            None => None,
        };
        let ms_ssim = if self.settings.wants(Metric::MsSsim) {
            Some(ms_ssim_image(original, recon)?)
        } else {
            None
        };
        let psnr = if self.settings.wants(Metric::Psnr) {
            Some(psnr(original, recon)?)
        } else {
            None
        };
        let features = if self.wants_features() {
            Some(self.features.extract(recon)?)
        } else {
            None
        };
        Ok(Scored {
            d_clip,
            ms_ssim,
            psnr,
            features,
        })
    }

    fn original(&self, image: &Image) -> Result<(Option<Vec<f32>>, Option<Vec<f32>>)> {
        let emb = if self.settings.wants(Metric::DClip) {
            Some(self.embedder.encode_image(image)?)
        } else {
            None
        };
        let feats = if self.wants_features() {
            Some(self.features.extract(image)?)
        } else {
            None
        };
        Ok((emb, feats))
    }
}

/// Feature pairs for dataset-level metrics, grouped by mode label.
#[derive(Default)]
struct FeatureSets(BTreeMap<String, (Vec<Vec<f32>>, Vec<Vec<f32>>)>);

impl FeatureSets {
    fn push(&mut self, mode: &str, original: Option<&Vec<f32>>, recon: Option<Vec<f32>>) {
        if let (Some(o), Some(r)) = (original, recon) {
            let entry = self.0.entry(mode.to_string()).or_default();
            entry.0.push(o.clone());
            entry.1.push(r);
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize_modes(
    rows: &[BenchmarkRow],
    labels: &[String],
    sets: &FeatureSets,
    settings: &BenchmarkSettings,
) -> Vec<ModeSummary> {
    labels
        .iter()
        .map(|label| {
            let mine: Vec<&BenchmarkRow> = rows.iter().filter(|r| &r.mode == label).collect();
            let dataset = |metric: Metric, f: fn(&[Vec<f32>], &[Vec<f32>]) -> Result<f64>| {
                if !settings.wants(metric) {
                    return None;
                }
                let (a, b) = sets.0.get(label)?;
                match f(a, b) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        log::warn!("{metric} for {label} skipped: {e}");
                        None
                    }
                }
            };
            ModeSummary {
                mode: label.clone(),
                count: mine.len(),
                mean_bpp: mean(mine.iter().filter_map(|r| r.bpp)),
                mean_d_clip: mean(mine.iter().filter_map(|r| r.d_clip)),
                mean_ms_ssim: mean(mine.iter().filter_map(|r| r.ms_ssim)),
                mean_psnr: mean(mine.iter().filter_map(|r| r.psnr).filter(|v| v.is_finite())),
                fid: dataset(Metric::Fid, fid),
                kid: dataset(Metric::Kid, kid),
            }
        })
        .collect()
}

/// Compresses and reconstructs every image in every mode and scores the
/// reconstructions. Per-image failures are recorded and skipped.
pub fn run_benchmark(
    dataset: &[(String, Image)],
    encoder: &Encoder<'_>,
    decoder: &Decoder<'_>,
    features: &dyn FeatureExtractor,
    settings: &BenchmarkSettings,
) -> Result<BenchmarkOutcome> {
    if dataset.is_empty() {
        return Err(Error::Data("benchmark dataset is empty".into()));
    }
    if settings.modes.is_empty() {
        return Err(Error::Config("no modes selected".into()));
    }
    let metrics = Metrics {
        embedder: encoder.embedder,
        features,
        settings,
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut sets = FeatureSets::default();
    for (id, image) in dataset {
        let prepared = metrics
            .original(image)
            .and_then(|orig| Ok((orig, encoder.invert(image)?)));
        let ((emb, feats), prompt) = match prepared {
            Ok(p) => p,
            Err(e) => {
                log::warn!("{id}: {e}");
                failures.push(Failure {
                    image_id: id.clone(),
                    mode: None,
                    error: e.to_string(),
                });
                continue;
            }
        };
        for &mode in &settings.modes {
            let attempt = encoder
                .compress_with_prompt(image, id, mode, &prompt)
                .and_then(|c| decoder.decompress(&c.bytes, id, settings.seed))
                .and_then(|d| Ok((metrics.score(image, emb.as_deref(), &d.image)?, d.report)));
            match attempt {
                Ok((scored, mut report)) => {
                    report.d_clip = scored.d_clip;
                    report.ms_ssim = scored.ms_ssim;
                    report.psnr = scored.psnr;
                    sets.push(mode.name(), feats.as_ref(), scored.features);
                    rows.push(BenchmarkRow {
                        image_id: id.clone(),
                        mode: mode.name().to_string(),
                        total_bits: Some(report.total_bits),
                        bpp: Some(report.bpp),
                        d_clip: report.d_clip,
                        ms_ssim: report.ms_ssim,
                        psnr: report.psnr,
                    });
                    reports.push(report);
                }
                Err(e) => {
                    log::warn!("{id} {mode}: {e}");
                    failures.push(Failure {
                        image_id: id.clone(),
                        mode: Some(mode.name().to_string()),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    let labels: Vec<String> = settings
        .modes
        .iter()
        .map(|m| m.name().to_string())
        .collect();
    let (sampler_steps, guidance) = decoder.backend.sampler();
    let summary = BenchmarkSummary {
        images: dataset.len(),
        rows: rows.len(),
        failures: failures.len(),
        embedder: encoder.embedder.variant(),
        features: features.variant(),
        backend: Some(decoder.backend.kind().to_string()),
        sampler_steps: Some(sampler_steps),
        guidance: Some(guidance),
        seed: Some(settings.seed),
        modes: summarize_modes(&rows, &labels, &sets, settings),
    };
    Ok(BenchmarkOutcome {
        rows,
        reports,
        failures,
        summary,
    })
}

/// Label used for rows scored from supplied reconstructions.
pub const GIVEN_MODE: &str = "given";

/// Scores supplied reconstructions against their originals. Pairs are
/// `(image_id, original, reconstruction)`.
pub fn evaluate_pairs(
    pairs: &[(String, Image, Image)],
    embedder: &dyn Embedder,
    features: &dyn FeatureExtractor,
    settings: &BenchmarkSettings,
) -> Result<BenchmarkOutcome> {
    if pairs.is_empty() {
        return Err(Error::Data("no image pairs to evaluate".into()));
    }
    let metrics = Metrics {
        embedder,
        features,
        settings,
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut sets = FeatureSets::default();
    for (id, original, recon) in pairs {
        let attempt = metrics
            .original(original)
            .and_then(|(emb, feats)| Ok((metrics.score(original, emb.as_deref(), recon)?, feats)));
        match attempt {
            Ok((scored, feats)) => {
                sets.push(GIVEN_MODE, feats.as_ref(), scored.features);
                rows.push(BenchmarkRow {
                    image_id: id.clone(),
                    mode: GIVEN_MODE.to_string(),
                    total_bits: None,
                    bpp: None,
                    d_clip: scored.d_clip,
                    ms_ssim: scored.ms_ssim,
                    psnr: scored.psnr,
                });
            }
            Err(e) => {
                log::warn!("{id}: {e}");
                failures.push(Failure {
                    image_id: id.clone(),
                    mode: Some(GIVEN_MODE.to_string()),
                    error: e.to_string(),
                });
            }
        }
    }
    let labels = vec![GIVEN_MODE.to_string()];
    let summary = BenchmarkSummary {
        images: pairs.len(),
        rows: rows.len(),
        failures: failures.len(),
        embedder: embedder.variant(),
        features: features.variant(),
        backend: None,
        sampler_steps: None,
        guidance: None,
        seed: None,
        modes: summarize_modes(&rows, &labels, &sets, settings),
    };
    Ok(BenchmarkOutcome {
        rows,
        reports: Vec::new(),
        failures,
        summary,
    })
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.to_string(),
        Some(x) => format!("{x:.digits$}"),
    }
}

/// CSV with the columns of [`CSV_COLUMNS`] and fixed precision, so repeated
/// runs produce identical bytes.
pub fn rows_to_csv(rows: &[BenchmarkRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            r.mode.clone(),
            r.total_bits.map(|b| b.to_string()).unwrap_or_default(),
            fixed(r.bpp, 6),
            fixed(r.d_clip, 6),
            fixed(r.ms_ssim, 6),
            fixed(r.psnr, 4),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Format(format!("csv: {}", e.error())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `benchmark.csv`, `summary.json`, and one `rate_<metric>.svg` per
/// per-image metric (rows with a rate only). Returns the written paths.
pub fn write_outputs(outcome: &BenchmarkOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let csv_path = dir.join("benchmark.csv");
    write_file(&csv_path, &rows_to_csv(&outcome.rows)?)?;
    written.push(csv_path);

    #[derive(Serialize)]
    struct SummaryFile<'a> {
        #[serde(flatten)]
        summary: &'a BenchmarkSummary,
        failed: &'a [Failure],
    }
    let json = serde_json::to_vec_pretty(&SummaryFile {
        summary: &outcome.summary,
        failed: &outcome.failures,
    })
    .map_err(|e| Error::Format(format!("summary json: {e}")))?;
    let summary_path = dir.join("summary.json");
    write_file(&summary_path, &json)?;
    written.push(summary_path);

    for metric in [Metric::DClip, Metric::MsSsim, Metric::Psnr] {
        let path = dir.join(format!("rate_{}.svg", metric.name()));
        if plot_rate_curve(&outcome.rows, metric, &path)? {
            written.push(path);
        }
    }
    Ok(written)
}

fn metric_of(row: &BenchmarkRow, metric: Metric) -> Option<f64> {
    match metric {
        Metric::DClip => row.d_clip,
        Metric::MsSsim => row.ms_ssim,
        Metric::Psnr => row.psnr,
        Metric::Fid | Metric::Kid => None,
    }
}

/// Scatter of bpp against `metric`, one series per mode. Returns false when
/// no row has both values.
pub fn plot_rate_curve(rows: &[BenchmarkRow], metric: Metric, path: &Path) -> Result<bool> {
    let points: Vec<(&str, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.mode.as_str(), r.bpp?, metric_of(r, metric)?)))
        .filter(|(_, x, y)| x.is_finite() && y.is_finite())
        .collect();
    if points.is_empty() {
        return Ok(false);
    }
    let span = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.1).max(1e-4);
        (lo - pad)..(hi + pad)
    };
    let xr = span(points.iter().map(|p| p.1).collect());
    let yr = span(points.iter().map(|p| p.2).collect());
    let plot_err = |e: String| Error::Format(format!("plot {}: {e}", path.display()));

    let root = SVGBackend::new(path, (640, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("rate vs {}", metric.name()), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(xr, yr)
        .map_err(|e| plot_err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("bpp")
        .y_desc(metric.name())
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;
    let mut modes: Vec<&str> = points.iter().map(|p| p.0).collect();
    modes.dedup();
    modes.sort_unstable();
    modes.dedup();
    for (k, mode) in modes.iter().enumerate() {
        let colour = Palette99::pick(k).to_rgba();
        chart
            .draw_series(
                points
                    .iter()
                    .filter(|p| p.0 == *mode)
                    .map(|p| Circle::new((p.1, p.2), 4, colour.filled())),
            )
            .map_err(|e| plot_err(e.to_string()))?
            .label(*mode)
            .legend(move |(x, y)| Circle::new((x, y), 4, colour.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;
    root.present().map_err(|e| plot_err(e.to_string()))?;
    Ok(true)
}
