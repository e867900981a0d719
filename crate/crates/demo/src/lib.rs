//! Browser demo of the movable-antenna toolkit.
//!
//! Three interactive operations, each a plain Rust function in [`ops`] with a
//! thin `wasm_bindgen` export that returns the result as a JSON string:
//!
//! - [`null_steering`]: beam pattern of a movable linear array with steered
//!   nulls against a half-wavelength array with zero-forcing weights;
//! - [`gain_map`]: received power over a square receive region for a random
//!   multipath channel, with the gain bounds of the single-antenna case;
//! - [`angle_estimates`]: repeated MUSIC angle estimates with the
//!   variance-maximizing movable array and a fixed array of equal size.
//!
//! All lengths are in wavelengths.

use wasm_bindgen::prelude::*;

pub mod ops;

fn to_js<T: serde::Serialize>(r: ma_core::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON of [`ops::BeamPattern`].
#[wasm_bindgen]
pub fn null_steering(antennas: usize, length: f64, main_deg: f64, nulls_deg: Vec<f64>, step_deg: f64) -> Result<String, JsError> {
    to_js(ops::null_steering(antennas, length, main_deg, &nulls_deg, step_deg))
}

/// JSON of [`ops::GainMap`].
#[wasm_bindgen]
pub fn gain_map(seed: u64, paths: usize, side: f64, step: f64) -> Result<String, JsError> {
    to_js(ops::gain_map(seed, paths, side, step))
}

/// JSON of [`ops::AngleEstimates`].
#[wasm_bindgen]
pub fn angle_estimates(antennas: usize, length: f64, u: f64, snr_db: f64, trials: usize, seed: u64) -> Result<String, JsError> {
    to_js(ops::angle_estimates(antennas, length, u, snr_db, trials, seed))
}
