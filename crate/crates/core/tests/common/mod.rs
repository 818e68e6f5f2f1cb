#![allow(dead_code)]

use std::sync::OnceLock;

use textsketch::core::TokenCoding;
use textsketch::decoder::Backend;
use textsketch::inversion::PiConfig;
use textsketch::pipeline::{Decoder, Encoder, StandInSettings, StandIns};
use textsketch::sketch::{train_ntc, GradientEdgeDetector, NtcModel, NtcTrainConfig};
use textsketch::synthetic::synthetic_sketches;

pub fn stand_ins() -> &'static StandIns {
    static PARTS: OnceLock<StandIns> = OnceLock::new();
    PARTS.get_or_init(|| StandIns::new(&StandInSettings::default()).unwrap())
}

/// Small sketch model at 64×64, trained once per test binary.
pub fn sketch_model_64() -> &'static NtcModel {
    static MODEL: OnceLock<NtcModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let cfg = NtcTrainConfig {
            epochs: 2,
            lambdas: vec![4.0],
            ..NtcTrainConfig::default()
        };
        train_ntc(&synthetic_sketches(60, 64, 64, 7000).unwrap(), &cfg)
            .unwrap()
            .model
    })
}

pub fn quick_pi() -> PiConfig {
    PiConfig {
        step_count: 300,
        ..PiConfig::default()
    }
}

pub fn encoder<'a>(model: Option<&'a NtcModel>, pi: PiConfig) -> Encoder<'a> {
    let parts = stand_ins();
    Encoder {
        embedder: &parts.embedder,
        tokenizer: &parts.tokenizer,
        detector: &GradientEdgeDetector,
        sketch_model: model,
        pi,
        token_coding: TokenCoding::FixedWidth,
    }
}

pub fn decoder<'a>(
    model: Option<&'a NtcModel>,
    backend: &'a dyn Backend,
    prompt_length: usize,
) -> Decoder<'a> {
    Decoder {
        tokenizer: &stand_ins().tokenizer,
        prompt_length,
        sketch_model: model,
        backend,
    }
}
