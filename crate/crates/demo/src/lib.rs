//! WebAssembly bindings for the browser demo in `www/`.

pub mod ops;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

/// Pitch of a fret position as JSON.
#[wasm_bindgen]
pub fn note_info(string: u8, fret: u8) -> Result<String, JsError> {
    json(&ops::note_info(string, fret).map_err(js)?)
}

#[wasm_bindgen]
pub fn sample_rate() -> u32 {
    ops::SAMPLE_RATE
}

/// A synthesized pluck, mono at [`sample_rate`].
#[wasm_bindgen]
pub fn pluck(string: u8, fret: u8, seconds: f64, seed: u32) -> Result<Vec<f32>, JsError> {
    ops::pluck(string, fret, seconds, u64::from(seed)).map_err(js)
}

/// Static MFCCs of a clip as JSON `{frames, coeffs, hop_seconds, values}`.
#[wasm_bindgen]
pub fn mfcc_heatmap(samples: &[f32], sample_rate: u32) -> Result<String, JsError> {
    json(&ops::heatmap(samples, sample_rate).map_err(js)?)
}

#[wasm_bindgen]
pub struct AlignResult {
    json: String,
    samples: Vec<f32>,
}

#[wasm_bindgen]
impl AlignResult {
    pub fn json(&self) -> String {
        self.json.clone()
    }

    pub fn samples(&self) -> Vec<f32> {
        self.samples.clone()
    }
}

/// Bootstraps models for one string and aligns a fresh synthetic take.
#[wasm_bindgen]
pub fn align_take(string: u8, seed: u32) -> Result<AlignResult, JsError> {
    let mut demo = ops::align_demo(string, u64::from(seed)).map_err(js)?;
    let samples = std::mem::take(&mut demo.samples);
    Ok(AlignResult { json: json(&demo)?, samples })
}
