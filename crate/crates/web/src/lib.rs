//! WebAssembly bindings for the demo page in `www/`.

pub mod render;

use wasm_bindgen::prelude::*;

fn js(e: convexp::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Heat kernel image: RGBA bytes plus its per-axis variances and peak.
#[wasm_bindgen]
pub struct Heat {
    rgba: Vec<u8>,
    pub variance_x: f64,
    pub variance_y: f64,
    pub peak: f64,
}

#[wasm_bindgen]
impl Heat {
    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

#[wasm_bindgen]
pub fn heat(n: usize, t: f64) -> Result<Heat, JsError> {
    let f = render::heat_frame(n, t).map_err(js)?;
    Ok(Heat {
        rgba: f.rgba,
        variance_x: f.variance[0],
        variance_y: f.variance[1],
        peak: f.peak,
    })
}

/// Both norm traces concatenated: `steps + 1` unitary values, then
/// `steps + 1` plain ones.
#[wasm_bindgen]
pub fn norm_traces(n: usize, steps: usize, gain: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    let (mut a, b) = render::norm_traces(n, steps, gain, seed as u64).map_err(js)?;
    a.extend(b);
    Ok(a)
}

#[wasm_bindgen]
pub struct Automaton {
    rgba: Vec<u8>,
    pub width: usize,
    pub height: usize,
    pub divergent_rows: usize,
}

#[wasm_bindgen]
impl Automaton {
    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

#[wasm_bindgen]
pub fn rule110(len: usize, steps: usize, noise: f64, seed: u32, table: bool) -> Result<Automaton, JsError> {
    let f = render::rule110_frame(len, steps, noise, seed as u64, table).map_err(js)?;
    Ok(Automaton {
        rgba: f.rgba,
        width: f.width,
        height: f.height,
        divergent_rows: f.divergent_rows,
    })
}
