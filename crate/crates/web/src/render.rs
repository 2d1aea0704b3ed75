//! Pure helpers behind the browser exports. Nothing here touches JS, so it
//! is all testable natively.

use convexp::ca::{self, Embedding, EmbeddingConfig};
use convexp::export::{min_max, pgm_values, PgmOptions};
use convexp::field::fft;
use convexp::rnn::{run, Activation, InputMode, Model, NetworkState, Record, Recurrence, StepOperator};
use convexp::spectral::{conv_exp, SpectralKernel};
use convexp::stencils::{laplacian, random_anti_hermitian, random_real};
use convexp::{GridShape, Result};

/// Piecewise-linear dark-blue to yellow ramp.
pub fn colormap(v: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [13.0, 8.0, 135.0],
        [126.0, 3.0, 168.0],
        [204.0, 71.0, 120.0],
        [248.0, 149.0, 64.0],
        [240.0, 249.0, 33.0],
    ];
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let x = v * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c])).round() as u8;
    }
    out
}

/// RGBA bytes for row-major `values`, scaled from `range` onto the ramp.
pub fn to_rgba(values: &[f64], range: (f64, f64)) -> Vec<u8> {
    let (lo, hi) = range;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = Vec::with_capacity(4 * values.len());
    for &v in values {
        let [r, g, b] = colormap((v - lo) / span);
        out.extend_from_slice(&[r, g, b, 255]);
    }
    out
}

pub struct HeatFrame {
    pub rgba: Vec<u8>,
    pub variance: [f64; 2],
    pub peak: f64,
}

/// `exp(t·Laplacian)` on an `n x n` torus, origin moved to the centre.
pub fn heat_frame(n: usize, t: f64) -> Result<HeatFrame> {
    let k = conv_exp(&laplacian(&GridShape::new(vec![n, n])?)?, t)?;
    let m = k.second_moments();
    let values = pgm_values(
        k.field(),
        PgmOptions {
            abs: false,
            center: true,
        },
    )?;
    let (_, peak) = min_max(&values);
    Ok(HeatFrame {
        rgba: to_rgba(&values, (0.0, peak)),
        variance: [m[0], m[1]],
        peak,
    })
}

/// Norm traces `||z_n|| / ||z_0||` of two linear recurrences on an `n x n`
/// grid from the same start: one with `exp` of a random anti-Hermitian
/// kernel, one with a plain random real kernel rescaled to spectral radius
/// `gain`.
pub fn norm_traces(n: usize, steps: usize, gain: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = GridShape::new(vec![n, n])?;
    let z0 = random_real(&s, seed ^ 0xF00D, 1.0).into_field();
    let unitary = StepOperator::new(&random_anti_hermitian(&s, seed, 1.0), 1.0)?;
    let w = random_real(&s, seed.wrapping_add(1), 1.0);
    let radius = SpectralKernel::new(&w).max_modulus();
    let plain = StepOperator::from_multipliers(fft(w.field()).scale((gain / radius).into()))?;
    let trace = |op: StepOperator| -> Result<Vec<f64>> {
        let rec = Recurrence {
            model: Model::Unitary {
                op,
                phi: Activation::Identity,
            },
            initial: NetworkState::unitary(z0.clone()),
            input: InputMode::Zero,
        };
        let norms = run(&rec, steps, Record::Norm)?.norms;
        Ok(norms.iter().map(|v| v / norms[0]).collect())
    };
    Ok((trace(unitary)?, trace(plain)?))
}

pub struct CaFrame {
    pub rgba: Vec<u8>,
    pub width: usize,
    pub height: usize,
    /// Rows whose rounding differs from the exact automaton.
    pub divergent_rows: usize,
}

/// Space-time diagram of the embedded automaton from a single live cell.
/// Cells whose rounded value disagrees with exact Rule 110 are drawn red.
pub fn rule110_frame(len: usize, steps: usize, noise: f64, seed: u64, table: bool) -> Result<CaFrame> {
    let cfg = if table {
        EmbeddingConfig::table_map()
    } else {
        EmbeddingConfig::sigmoid()
    };
    let emb = Embedding::new(&cfg)?;
    let mut exact = ca::single_seed(len);
    let rows = ca::space_time(&exact, steps, &emb, noise, seed);
    let mut rgba = Vec::with_capacity(4 * len * rows.len());
    let mut divergent_rows = 0;
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            exact = ca::rule110_exact(&exact);
        }
        let mut bad = false;
        for (x, &z) in row.iter().zip(&exact) {
            if (*x >= 0.5) != z {
                bad = true;
                rgba.extend_from_slice(&[220, 30, 30, 255]);
            } else {
                let g = (255.0 * (1.0 - x.clamp(0.0, 1.0))).round() as u8;
                rgba.extend_from_slice(&[g, g, g, 255]);
            }
        }
        divergent_rows += bad as usize;
    }
    Ok(CaFrame {
        rgba,
        width: len,
        height: rows.len(),
        divergent_rows,
    })
}
