//! JSON-in, JSON-out bindings for the browser demo.
//!
//! Each exported function takes one JSON document and returns one. The
//! plain Rust versions in [`ops`] do the work and are what the native
//! tests call.

use wasm_bindgen::prelude::*;

pub mod ops;

fn bridge<I, O>(input: &str, f: impl FnOnce(I) -> Result<O, String>) -> Result<String, JsError>
where
    I: serde::de::DeserializeOwned,
    O: serde::Serialize,
{
    let parsed: I = serde_json::from_str(input).map_err(|e| JsError::new(&format!("bad input: {e}")))?;
    let out = f(parsed).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&out).map_err(|e| JsError::new(&e.to_string()))
}

/// `RerankInput` in, ranked rows out.
#[wasm_bindgen]
pub fn rerank(input: &str) -> Result<String, JsError> {
    bridge(input, ops::rerank)
}

/// `QuestionInput` in, the best question and every feature's gain out.
#[wasm_bindgen]
pub fn next_question(input: &str) -> Result<String, JsError> {
    bridge(input, ops::next_question)
}

/// `DecayInput` in, `(day, weight)` samples out.
#[wasm_bindgen]
pub fn decay_curve(input: &str) -> Result<String, JsError> {
    bridge(input, ops::decay_curve)
}
