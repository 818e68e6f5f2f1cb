//! The `txsk` command line: compress, decompress, train-sketch-codec, eval.
//!
//! Settings come from an optional TOML file (`--config`) and are overridden
//! by flags. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | other error |
//! | 2 | configuration or usage error |
//! | 3 | IO error |
//! | 4 | corrupt or malformed container or model |
//! | 5 | backend, timeout, or capability error |
//! | 6 | data error (empty or mismatched datasets) |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::core::{Container, Image, Mode, RateReport, SketchMap, TokenCoding, FILE_EXTENSION};
use crate::decoder::{
    Backend, BackendKind, HttpBackend, MockBackend, SubprocessBackend, ENDPOINT_ENV,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_pairs, run_benchmark, write_outputs, BenchmarkOutcome, BenchmarkSettings, Metric,
    RandomProjectionFeatures,
};
use crate::inversion::PiConfig;
use crate::pipeline::{Decoder, Encoder, StandInSettings, StandIns};
use crate::sketch::{
    extract_sketch, train_ntc, EdgeDetector, GradientEdgeDetector, NtcModel, NtcTrainConfig,
    ProcessEdgeDetector,
};
use crate::token_codec::Tokenizer;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CORRUPT: i32 = 4;
pub const EXIT_BACKEND: i32 = 5;
pub const EXIT_DATA: i32 = 6;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Argument(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        Error::Corruption { .. }
        | Error::Truncation { .. }
        | Error::Format(_)
        | Error::Version(_)
        | Error::Decode(_) => EXIT_CORRUPT,
        Error::Backend(_) | Error::Timeout(_) | Error::Capability(_) => EXIT_BACKEND,
        Error::Data(_) | Error::SampleSize { .. } => EXIT_DATA,
        _ => EXIT_OTHER,
    }
}

/// File-based run configuration. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Modes run by `eval --end-to-end`.
    pub eval_modes: Vec<Mode>,
    pub token_coding: TokenCoding,
    pub sketch_model: Option<PathBuf>,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    /// Program and arguments of a subprocess backend; used instead of HTTP
    /// when set.
    pub backend_command: Vec<String>,
    pub backend_timeout_secs: u64,
    /// Program and arguments of an external edge detector.
    pub edge_command: Vec<String>,
    pub seed: u64,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub metrics: Vec<Metric>,
    pub pi: PiConfig,
    pub stand_ins: StandInSettings,
    pub sketch_training: NtcTrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Pic,
            eval_modes: vec![Mode::Pic, Mode::Pics],
            token_coding: TokenCoding::FixedWidth,
            sketch_model: None,
            backend: BackendKind::Mock,
            endpoint: None,
            backend_command: Vec::new(),
            backend_timeout_secs: 120,
            edge_command: Vec::new(),
            seed: 0,
            dataset: None,
            out: None,
            metrics: Metric::ALL.to_vec(),
            pi: PiConfig::default(),
            stand_ins: StandInSettings::default(),
            sketch_training: NtcTrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks referenced input paths and the mode/model pairing.
    pub fn validate(&self) -> Result<()> {
        for (what, path) in [
            ("sketch model", &self.sketch_model),
            ("dataset", &self.dataset),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "{what} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if self.mode == Mode::Pics && self.sketch_model.is_none() {
            return Err(Error::Config(
                "mode PICS needs a sketch model (--sketch-model)".into(),
            ));
        }
        if self.backend_timeout_secs == 0 {
            return Err(Error::Config(
                "backend_timeout_secs must be positive".into(),
            ));
        }
        self.pi.validate()
    }

    fn load_sketch_model(&self) -> Result<Option<NtcModel>> {
        self.sketch_model.as_deref().map(NtcModel::load).transpose()
    }

    fn backend(&self) -> Result<Box<dyn Backend>> {
        let timeout = Duration::from_secs(self.backend_timeout_secs);
        if self.backend == BackendKind::Mock {
            return Ok(Box::new(MockBackend::default()));
        }
        if let Some((program, args)) = self.backend_command.split_first() {
            return Ok(Box::new(SubprocessBackend::new(
                program,
                args.to_vec(),
                self.backend,
                timeout,
            )?));
        }
        let endpoint = self.endpoint.clone().ok_or_else(|| {
            Error::Config(format!(
                "backend {} needs --endpoint, ${ENDPOINT_ENV}, or backend_command",
                self.backend
            ))
        })?;
        Ok(Box::new(HttpBackend::new(endpoint, self.backend, timeout)?))
    }

    fn detector(&self) -> Box<dyn EdgeDetector> {
        match self.edge_command.split_first() {
            Some((program, args)) => Box::new(ProcessEdgeDetector {
                name: format!("external:{program}"),
                program: program.into(),
                args: args.to_vec(),
            }),
            None => Box::new(GradientEdgeDetector),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "txsk",
    version,
    about = "Ultra-low-rate image compression with text prompts and sketches"
)]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// pic or pics.
    #[arg(long, global = true)]
    pub mode: Option<Mode>,

    /// Prompt length in tokens.
    #[arg(long, global = true)]
    pub tokens: Option<usize>,

    /// fixed or text.
    #[arg(long, global = true)]
    pub token_coding: Option<TokenCoding>,

    #[arg(long, global = true)]
    pub sketch_model: Option<PathBuf>,

    /// mock, text, or text+sketch.
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,

    #[arg(long, global = true, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Comma-separated λ values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,

    #[arg(long, global = true)]
    pub target_bpp: Option<f64>,

    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Increase log verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress images (files or directories of PNGs) into .tsk containers.
    Compress {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Reconstruct images from .tsk containers.
    Decompress {
        #[arg(required = true)]
        containers: Vec<PathBuf>,
    },
    /// Train the sketch codec over the λ grid and keep the model nearest the
    /// target rate.
    TrainSketchCodec {
        /// Directory of sketch PNGs (or images with --extract).
        dataset: Option<PathBuf>,
        /// Extract sketches from raw images first.
        #[arg(long)]
        extract: bool,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score reconstructions against originals, or run the pipeline end to end.
    Eval {
        /// Directory of original PNGs.
        originals: Option<PathBuf>,
        /// Directory of reconstructions matched by file stem.
        #[arg(long, conflicts_with = "end_to_end")]
        reconstructions: Option<PathBuf>,
        /// Compress and reconstruct the originals with the configured backend.
        #[arg(long)]
        end_to_end: bool,
        /// Comma-separated metrics (d_clip, ms_ssim, psnr, fid, kid).
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<Metric>>,
    },
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = self.mode {
            cfg.mode = m;
            cfg.eval_modes = vec![m];
        }
        if let Some(t) = self.tokens {
            cfg.pi.prompt_length = t;
        }
        if let Some(c) = self.token_coding {
            cfg.token_coding = c;
        }
        if let Some(p) = &self.sketch_model {
            cfg.sketch_model = Some(p.clone());
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(e) = &self.endpoint {
            cfg.endpoint = Some(e.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(grid) = &self.lambda_grid {
            cfg.sketch_training.lambdas = grid.clone();
        }
        if let Some(t) = self.target_bpp {
            cfg.sketch_training.target_bpp = t;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
    }
}

/// Parses arguments, runs the command, and returns the exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.overrides.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    match cli.command {
        Command::Compress { inputs } => cmd_compress(&cfg, &inputs),
        Command::Decompress { containers } => cmd_decompress(&cfg, &containers),
        Command::TrainSketchCodec {
            dataset,
            extract,
            epochs,
        } => {
            if let Some(e) = epochs {
                cfg.sketch_training.epochs = e;
            }
            cmd_train_sketch(&cfg, dataset.or_else(|| cfg.dataset.clone()), extract)
        }
        Command::Eval {
            originals,
            reconstructions,
            end_to_end,
            metrics,
        } => {
            if let Some(m) = metrics {
                cfg.metrics = m;
            }
            cmd_eval(
                &cfg,
                originals.or_else(|| cfg.dataset.clone()),
                reconstructions,
                end_to_end,
            )
        }
    }
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case(ext))
}

/// Files with `ext` from each input: directories are listed (sorted),
/// files are taken as given.
fn collect_files(inputs: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        let meta = std::fs::metadata(input).map_err(|e| Error::io(input, e))?;
        if meta.is_dir() {
            let mut found = Vec::new();
            for entry in std::fs::read_dir(input).map_err(|e| Error::io(input, e))? {
                let path = entry.map_err(|e| Error::io(input, e))?.path();
                if path.is_file() && has_extension(&path, ext) {
                    found.push(path);
                }
            }
            found.sort();
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Destination for one output: `out` itself when it names a single file with
/// `ext`, else `<out or input dir>/<stem>.<ext>`.
fn output_path(out: Option<&Path>, single: bool, input: &Path, ext: &str) -> PathBuf {
    match out {
        Some(o) if single && has_extension(o, ext) => o.to_path_buf(),
        Some(dir) => dir.join(format!("{}.{ext}", stem(input))),
        None => input.with_extension(ext),
    }
}

fn report_csv(reports: &[RateReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record([
        "image_id",
        "mode",
        "width",
        "height",
        "total_bits",
        "bpp",
        "overhead_bits",
        "text_bits",
        "sketch_bits",
    ])
    .map_err(err)?;
    for r in reports {
        w.write_record([
            r.image_id.clone(),
            r.mode.name().to_string(),
            r.width.to_string(),
            r.height.to_string(),
            r.total_bits.to_string(),
            format!("{:.6}", r.bpp),
            r.overhead_bits.to_string(),
            r.text_bits.to_string(),
            r.sketch_bits.to_string(),
        ])
        .map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Format(format!("csv: {}", e.error())))
}

fn cmd_compress(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<()> {
    cfg.validate()?;
    let files = collect_files(inputs, "png")?;
    if files.is_empty() {
        return Err(Error::Data("no PNG images found".into()));
    }
    let batch = files.len() > 1 || inputs.iter().any(|p| p.is_dir());
    let model = match cfg.mode {
        Mode::Pics => cfg.load_sketch_model()?,
        Mode::Pic => None,
    };
    let parts = StandIns::new(&cfg.stand_ins)?;
    let detector = cfg.detector();
    let encoder = Encoder {
        embedder: &parts.embedder,
        tokenizer: &parts.tokenizer,
        detector: detector.as_ref(),
        sketch_model: model.as_ref(),
        pi: cfg.pi.clone(),
        token_coding: cfg.token_coding,
    };
    let mut reports = Vec::new();
    for file in &files {
        let image = Image::load(file)?;
        let id = stem(file);
        let c = encoder.compress(&image, &id, cfg.mode)?;
        let path = output_path(cfg.out.as_deref(), !batch, file, FILE_EXTENSION);
        write_file(&path, &c.bytes)?;
        let prompt = parts.tokenizer.render(c.tokens.ids())?;
        println!(
            "{id}\t{}\t{} bits\t{:.6} bpp\t{}\t{prompt:?}",
            c.report.mode,
            c.report.total_bits,
            c.report.bpp,
            path.display()
        );
        if c.token_fell_back {
            log::warn!("{id}: text coding fell back to fixed-width ids");
        }
        reports.push(c.report);
    }
    if batch {
        let dir = cfg
            .out
            .clone()
            .unwrap_or_else(|| files[0].parent().map(Path::to_path_buf).unwrap_or_default());
        let path = dir.join("compress_summary.csv");
        write_file(&path, &report_csv(&reports)?)?;
        println!("summary written to {}", path.display());
    }
    Ok(())
}

fn cmd_decompress(cfg: &RunConfig, containers: &[PathBuf]) -> Result<()> {
    let mut check = cfg.clone();
    // the container decides the mode
    check.mode = Mode::Pic;
    check.validate()?;
    let files = collect_files(containers, FILE_EXTENSION)?;
    if files.is_empty() {
        return Err(Error::Data("no .tsk containers found".into()));
    }
    let model = cfg.load_sketch_model()?;
    let parts = StandIns::new(&cfg.stand_ins)?;
    let backend = cfg.backend()?;
    let decoder = Decoder {
        tokenizer: &parts.tokenizer,
        prompt_length: cfg.pi.prompt_length,
        sketch_model: model.as_ref(),
        backend: backend.as_ref(),
    };
    let single = files.len() == 1 && !containers.iter().any(|p| p.is_dir());
    for file in &files {
        let bytes = std::fs::read(file).map_err(|e| Error::io(file, e))?;
        let id = stem(file);
        if Container::from_bytes(&bytes)?.mode == Mode::Pics && model.is_none() {
            return Err(Error::Config(format!(
                "{id} is a PICS container; pass --sketch-model"
            )));
        }
        let d = decoder.decompress(&bytes, &id, cfg.seed)?;
        let path = output_path(cfg.out.as_deref(), single, file, "png");
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        d.image.save(&path)?;
        let r = &d.report;
        println!("{id}\tprompt {:?}", d.text);
        println!(
            "{id}\t{} {}x{}\t{} bits\t{:.6} bpp (text {} bits, sketch {} bits = {:.6} bpp, overhead {} bits)\t{}",
            r.mode,
            r.width,
            r.height,
            r.total_bits,
            r.bpp,
            r.text_bits,
            r.sketch_bits,
            r.sketch_bpp(),
            r.overhead_bits,
            path.display()
        );
    }
    Ok(())
}

fn cmd_train_sketch(cfg: &RunConfig, dataset: Option<PathBuf>, extract: bool) -> Result<()> {
    let dataset = dataset
        .ok_or_else(|| Error::Config("train-sketch-codec needs a dataset directory".into()))?;
    cfg.sketch_training.validate()?;
    let files = collect_files(std::slice::from_ref(&dataset), "png")?;
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no PNG files in {}",
            dataset.display()
        )));
    }
    let detector = cfg.detector();
    let sketches = files
        .iter()
        .map(|f| {
            if extract {
                extract_sketch(&Image::load(f)?, detector.as_ref())
            } else {
                SketchMap::load(f)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if cfg.sketch_training.lambdas.len() == 1 {
        log::warn!(
            "λ grid has one value; its model is kept whatever its distance to {} bpp",
            cfg.sketch_training.target_bpp
        );
    }
    let outcome = train_ntc(&sketches, &cfg.sketch_training)?;
    let model_path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("sketch_model.ntc"));
    if let Some(dir) = model_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    outcome.model.save(&model_path)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record([
        "lambda",
        "validation_bpp",
        "validation_ms_ssim",
        "final_train_loss",
    ])
    .map_err(err)?;
    println!("lambda\tval_bpp\tval_ms_ssim\ttrain_loss");
    for p in &outcome.sweep {
        let row = [
            format!("{}", p.lambda),
            format!("{:.6}", p.validation_bpp),
            format!("{:.6}", p.validation_ms_ssim),
            format!("{:.6}", p.final_train_loss),
        ];
        println!("{}", row.join("\t"));
        w.write_record(&row).map_err(err)?;
    }
    let sweep_path = model_path.with_extension("sweep.csv");
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("csv: {}", e.error())))?;
    write_file(&sweep_path, &bytes)?;
    println!(
        "kept λ {} ({:.6} bpp) in {}; sweep in {}",
        outcome.model.meta.lambda,
        outcome.model.meta.validation_bpp,
        model_path.display(),
        sweep_path.display()
    );
    Ok(())
}

fn load_dir(dir: &Path) -> Result<BTreeMap<String, (PathBuf, Image)>> {
    collect_files(&[dir.to_path_buf()], "png")?
        .into_iter()
        .map(|p| Ok((stem(&p), (p.clone(), Image::load(&p)?))))
        .collect()
}

fn cmd_eval(
    cfg: &RunConfig,
    originals: Option<PathBuf>,
    reconstructions: Option<PathBuf>,
    end_to_end: bool,
) -> Result<()> {
    let originals =
        originals.ok_or_else(|| Error::Config("eval needs an originals directory".into()))?;
    let mut check = cfg.clone();
    check.mode = Mode::Pic;
    check.validate()?;
    let settings = BenchmarkSettings {
        modes: cfg.eval_modes.clone(),
        seed: cfg.seed,
        metrics: cfg.metrics.clone(),
    };
    let features = RandomProjectionFeatures::default();
    let parts = StandIns::new(&cfg.stand_ins)?;
    let orig = load_dir(&originals)?;
    if orig.is_empty() {
        return Err(Error::Data(format!(
            "no PNG images in {}",
            originals.display()
        )));
    }
    let outcome: BenchmarkOutcome = if let Some(recon_dir) = reconstructions {
        let recon = load_dir(&recon_dir)?;
        let only_orig: Vec<&str> = orig
            .keys()
            .filter(|k| !recon.contains_key(*k))
            .map(String::as_str)
            .collect();
        let only_recon: Vec<&str> = recon
            .keys()
            .filter(|k| !orig.contains_key(*k))
            .map(String::as_str)
            .collect();
        if !only_orig.is_empty() || !only_recon.is_empty() {
            return Err(Error::Data(format!(
                "{} originals vs {} reconstructions; missing reconstructions: [{}]; unmatched reconstructions: [{}]",
                orig.len(),
                recon.len(),
                only_orig.join(", "),
                only_recon.join(", ")
            )));
        }
        let pairs: Vec<(String, Image, Image)> = orig
            .into_iter()
            .map(|(id, (_, img))| {
                let r = recon[&id].1.clone();
                (id, img, r)
            })
            .collect();
        evaluate_pairs(&pairs, &parts.embedder, &features, &settings)?
    } else if end_to_end {
        if settings.modes.contains(&Mode::Pics) && cfg.sketch_model.is_none() {
            return Err(Error::Config(
                "end-to-end PICS evaluation needs --sketch-model".into(),
            ));
        }
        let model = cfg.load_sketch_model()?;
        let detector = cfg.detector();
        let backend = cfg.backend()?;
        let encoder = Encoder {
            embedder: &parts.embedder,
            tokenizer: &parts.tokenizer,
            detector: detector.as_ref(),
            sketch_model: model.as_ref(),
            pi: cfg.pi.clone(),
            token_coding: cfg.token_coding,
        };
        let decoder = Decoder {
            tokenizer: &parts.tokenizer,
            prompt_length: cfg.pi.prompt_length,
            sketch_model: model.as_ref(),
            backend: backend.as_ref(),
        };
        let data: Vec<(String, Image)> = orig.into_iter().map(|(id, (_, img))| (id, img)).collect();
        run_benchmark(&data, &encoder, &decoder, &features, &settings)?
    } else {
        return Err(Error::Config(
            "eval needs --reconstructions <dir> or --end-to-end".into(),
        ));
    };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("eval"));
    let written = write_outputs(&outcome, &out)?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    println!("mode\tcount\tbpp\td_clip\tms_ssim\tpsnr\tfid\tkid");
    for m in &outcome.summary.modes {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            m.mode,
            m.count,
            fmt(m.mean_bpp),
            fmt(m.mean_d_clip),
            fmt(m.mean_ms_ssim),
            fmt(m.mean_psnr),
            fmt(m.fid),
            fmt(m.kid)
        );
    }
    for f in &outcome.failures {
        eprintln!(
            "failed: {} {}: {}",
            f.image_id,
            f.mode.as_deref().unwrap_or("-"),
            f.error
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
