//! Rule 110 and its embedding in a real convolutional recurrence
//! `X' = psi(C ⊛ X)` on a periodic ring.
//!
//! The 3-tap kernel `C` maps each neighbourhood `(left, centre, right)` to a
//! scalar code; `psi` sends every code to the Rule 110 output bit and is flat
//! at the codes, so small perturbations are quenched instead of amplified.
//!
//! With true convolution, `(C ⊛ X)_x = C[-1] X[x+1] + C[0] X[x] + C[+1] X[x-1]`:
//!
//! - `{-1: 1, 0: 2, +1: 4}` gives `4L + 2C + R`, the Wolfram index itself.
//!   [`Variant::TableMap`] reads the rule table off a smooth interpolant.
//! - `{-1: 2, 0: 2, +1: 1}` gives `L + 2C + 2R`. The ones of Rule 110 are
//!   then exactly the codes `{2, 3, 4}`, so a single sigmoid pass-band
//!   ([`Variant::SigmoidProduct`]) works, with band `(1.5, 4.5)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelCore;

pub const RULE: u8 = 110;

/// One exact step on a periodic ring.
pub fn rule110_exact(cells: &[bool]) -> Vec<bool> {
    let n = cells.len();
    (0..n)
        .map(|x| {
            let l = cells[(x + n - 1) % n] as u8;
            let c = cells[x] as u8;
            let r = cells[(x + 1) % n] as u8;
            (RULE >> (4 * l + 2 * c + r)) & 1 == 1
        })
        .collect()
}

/// `1/(1+e^{σ(x-0.5)}) · e^{3σ}/(1+e^{σ(3.5-x)})`, a pass-band on `(0.5, 3.5)`.
pub fn psi_sigmoid(x: f64, sigma: f64) -> f64 {
    psi_band(x, sigma, 0.5, 3.5)
}

/// `1/(1+e^{σ(x-lo)}) · e^{σ(hi-lo)}/(1+e^{σ(hi-x)})`, expanded so that no
/// factor of `e^{σ(hi-lo)}` is ever formed: large exponents only push the
/// denominator to infinity and the result to zero.
pub fn psi_band(x: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let d = 1.0 + (-sigma * (hi - lo)).exp() + (sigma * (x - hi)).exp() + (sigma * (lo - x)).exp();
    1.0 / d
}

/// Septic smoothstep: 0 and 1 at the ends, first three derivatives zero.
fn smootherstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let u4 = u * u * u * u;
    u4 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)))
}

/// Codes of the eight neighbourhoods under a 3-tap kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeAnalysis {
    /// Indexed by the Wolfram index `4L + 2C + R`.
    pub codes: [f64; 8],
    pub targets: [bool; 8],
    /// No two neighbourhoods share a code but disagree on the output.
    pub consistent: bool,
    /// Widest interval holding exactly the codes that must map to 1, if any.
    pub band: Option<(f64, f64)>,
}

impl CodeAnalysis {
    /// True when a pass-band `(lo, hi)` contains exactly the codes mapped to 1.
    pub fn band_realizes(&self, lo: f64, hi: f64) -> bool {
        self.codes
            .iter()
            .zip(&self.targets)
            .all(|(&c, &t)| (lo < c && c < hi) == t)
    }
}

/// `[C[-1], C[0], C[+1]]` of a 1-D real core with offsets in `{-1, 0, 1}`.
pub fn taps(core: &KernelCore) -> Result<[f64; 3]> {
    let mut w = [0.0; 3];
    for (o, v) in core.entries() {
        match o.as_slice() {
            [o @ -1..=1] if v.im == 0.0 => w[(o + 1) as usize] = v.re,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "embedding kernels are real 1-D 3-tap cores, got entry {o:?}: {v}"
                )))
            }
        }
    }
    Ok(w)
}

pub fn analyze_codes(w: [f64; 3]) -> CodeAnalysis {
    let mut codes = [0.0; 8];
    let mut targets = [false; 8];
    for idx in 0..8u8 {
        let (l, c, r) = (f64::from((idx >> 2) & 1), f64::from((idx >> 1) & 1), f64::from(idx & 1));
        codes[idx as usize] = w[0] * r + w[1] * c + w[2] * l;
        targets[idx as usize] = (RULE >> idx) & 1 == 1;
    }
    let consistent = (0..8).all(|a| (0..8).all(|b| codes[a] != codes[b] || targets[a] == targets[b]));
    let band = if consistent {
        let max_one_lo = codes.iter().zip(&targets).filter(|(_, t)| **t).map(|(c, _)| *c);
        let lo1 = max_one_lo.clone().fold(f64::INFINITY, f64::min);
        let hi1 = max_one_lo.fold(f64::NEG_INFINITY, f64::max);
        let zeros: Vec<f64> = codes
            .iter()
            .zip(&targets)
            .filter(|(_, t)| !**t)
            .map(|(c, _)| *c)
            .collect();
        if zeros.iter().any(|&z| lo1 <= z && z <= hi1) {
            None
        } else {
            let below = zeros
                .iter()
                .copied()
                .filter(|&z| z < lo1)
                .fold(f64::NEG_INFINITY, f64::max);
            let above = zeros.iter().copied().filter(|&z| z > hi1).fold(f64::INFINITY, f64::min);
            let lo = if below.is_finite() {
                (below + lo1) / 2.0
            } else {
                lo1 - 0.5
            };
            let hi = if above.is_finite() {
                (above + hi1) / 2.0
            } else {
                hi1 + 0.5
            };
            Some((lo, hi))
        }
    } else {
        None
    };
    CodeAnalysis {
        codes,
        targets,
        consistent,
        band,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    SigmoidProduct,
    TableMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingConfig {
    pub kernel: KernelCore,
    pub sigma: f64,
    pub variant: Variant,
    /// Pass-band for the sigmoid variant; derived from the codes when unset.
    pub band: Option<(f64, f64)>,
}

impl EmbeddingConfig {
    pub const DEFAULT_SIGMA: f64 = 20.0;

    /// Sigmoid product with `{-1: 2, 0: 2, +1: 1}`, `σ = 20`.
    pub fn sigmoid() -> Self {
        Self {
            kernel: KernelCore::from_real(&[(&[-1], 2.0), (&[0], 2.0), (&[1], 1.0)]).unwrap(),
            sigma: Self::DEFAULT_SIGMA,
            variant: Variant::SigmoidProduct,
            band: None,
        }
    }

    /// Table map with `{-1: 1, 0: 2, +1: 4}`.
    pub fn table_map() -> Self {
        Self {
            kernel: KernelCore::from_real(&[(&[-1], 1.0), (&[0], 2.0), (&[1], 4.0)]).unwrap(),
            sigma: Self::DEFAULT_SIGMA,
            variant: Variant::TableMap,
            band: None,
        }
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self::table_map()
    }
}

/// A validated embedding, ready to step.
#[derive(Clone, Debug)]
pub struct Embedding {
    w: [f64; 3],
    act: Act,
}

#[derive(Clone, Debug)]
enum Act {
    Band {
        sigma: f64,
        lo: f64,
        hi: f64,
    },
    /// Output at integer codes `base, base + 1, ...`.
    Table {
        base: i64,
        values: Vec<f64>,
    },
}

impl Embedding {
    pub fn new(cfg: &EmbeddingConfig) -> Result<Self> {
        let w = taps(&cfg.kernel)?;
        let a = analyze_codes(w);
        if !a.consistent {
            return Err(Error::InvalidArgument(format!(
                "kernel {w:?} gives one code to neighbourhoods with different outputs (codes {:?})",
                a.codes
            )));
        }
        let act = match cfg.variant {
            Variant::SigmoidProduct => {
                if !(cfg.sigma > 0.0 && cfg.sigma.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "sigma must be positive, got {}",
                        cfg.sigma
                    )));
                }
                let (lo, hi) = match cfg.band {
                    Some((lo, hi)) if a.band_realizes(lo, hi) => (lo, hi),
                    Some((lo, hi)) => {
                        return Err(Error::InvalidArgument(format!(
                            "band ({lo}, {hi}) does not realize rule {RULE} for codes {:?}",
                            a.codes
                        )))
                    }
                    None => a.band.ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "no single pass-band realizes rule {RULE} for codes {:?}",
                            a.codes
                        ))
                    })?,
                };
                Act::Band {
                    sigma: cfg.sigma,
                    lo,
                    hi,
                }
            }
            Variant::TableMap => {
                if a.codes.iter().any(|c| c.fract() != 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "table map needs integer codes, got {:?}",
                        a.codes
                    )));
                }
                let base = a.codes.iter().fold(f64::INFINITY, |m, &c| m.min(c)) as i64;
                let top = a.codes.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(c)) as i64;
                let mut values: Vec<Option<f64>> = vec![None; (top - base + 1) as usize];
                for (c, t) in a.codes.iter().zip(a.targets) {
                    values[(*c as i64 - base) as usize] = Some(if t { 1.0 } else { 0.0 });
                }
                // unused codes repeat the previous level
                let mut last = 0.0;
                let values = values
                    .into_iter()
                    .map(|v| {
                        last = v.unwrap_or(last);
                        last
                    })
                    .collect();
                Act::Table { base, values }
            }
        };
        Ok(Self { w, act })
    }

    pub fn taps(&self) -> [f64; 3] {
        self.w
    }

    /// The pass-band in use, for the sigmoid variant.
    pub fn band(&self) -> Option<(f64, f64)> {
        match self.act {
            Act::Band { lo, hi, .. } => Some((lo, hi)),
            Act::Table { .. } => None,
        }
    }

    pub fn activation(&self, code: f64) -> f64 {
        match &self.act {
            Act::Band { sigma, lo, hi } => psi_band(code, *sigma, *lo, *hi),
            Act::Table { base, values } => {
                let y = code - *base as f64;
                if y <= 0.0 {
                    return values[0];
                }
                let last = values.len() - 1;
                if y >= last as f64 {
                    return values[last];
                }
                let i = y.floor() as usize;
                values[i] + (values[i + 1] - values[i]) * smootherstep(y - i as f64)
            }
        }
    }

    /// `C ⊛ X` on the ring.
    pub fn codes(&self, cells: &[f64]) -> Vec<f64> {
        let n = cells.len();
        let [wm, w0, wp] = self.w;
        (0..n)
            .map(|x| wm * cells[(x + 1) % n] + w0 * cells[x] + wp * cells[(x + n - 1) % n])
            .collect()
    }

    pub fn step(&self, cells: &[f64]) -> Vec<f64> {
        self.codes(cells).into_iter().map(|c| self.activation(c)).collect()
    }
}

/// `X' = psi(C ⊛ X)`.
pub fn ca_step_embedded(cells: &[f64], emb: &Embedding) -> Vec<f64> {
    emb.step(cells)
}

pub fn to_real(cells: &[bool]) -> Vec<f64> {
    cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Cellwise `round`; values outside `{0, 1}` after rounding count as errors.
pub fn rounds_to(cells: &[f64], exact: &[bool]) -> bool {
    cells
        .iter()
        .zip(exact)
        .all(|(&x, &z)| x.round() == if z { 1.0 } else { 0.0 })
}

/// Largest distance of any cell from `{0, 1}`.
pub fn distance_from_boolean(cells: &[f64]) -> f64 {
    cells.iter().map(|&x| x.abs().min((x - 1.0).abs())).fold(0.0, f64::max)
}

/// Random boolean ring.
pub fn random_row(len: usize, rng: &mut impl Rng) -> Vec<bool> {
    (0..len).map(|_| rng.random_bool(0.5)).collect()
}

/// The initial row that [`stability_experiment`] draws for a trial seed.
pub fn seeded_row(len: usize, seed: u64) -> Vec<bool> {
    random_row(len, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub variant: Variant,
    pub sigma: f64,
    pub length: usize,
    pub steps: usize,
    pub trials: usize,
    pub noise: f64,
    pub seed: u64,
    /// `(trial, step)` pairs whose rounded state differs from the exact one.
    pub divergences: usize,
    pub divergence_fraction: f64,
    /// Largest `|X - Z|` over all cells, steps `1..=T` and trials.
    pub max_delta: f64,
    pub first_divergence: Option<(usize, usize)>,
}

impl StabilityReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Runs the embedded and exact automata side by side from random rows,
/// adding uniform noise in `[-noise, noise]` to the initial row and after
/// every step. Trial `i` uses a generator seeded with `seed + i`.
pub fn stability_experiment(
    length: usize,
    steps: usize,
    noise: f64,
    trials: usize,
    cfg: &EmbeddingConfig,
    seed: u64,
) -> Result<StabilityReport> {
    if length == 0 || steps == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "length, steps and trials must be at least 1".into(),
        ));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise must be a non-negative amplitude, got {noise}"
        )));
    }
    let emb = Embedding::new(cfg)?;
    let mut divergences = 0;
    let mut first_divergence = None;
    let mut max_delta: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let mut z = random_row(length, &mut rng);
        let mut x = to_real(&z);
        add_noise(&mut x, noise, &mut rng);
        for step in 1..=steps {
            x = emb.step(&x);
            add_noise(&mut x, noise, &mut rng);
            z = rule110_exact(&z);
            for (&xi, &zi) in x.iter().zip(&z) {
                max_delta = max_delta.max((xi - if zi { 1.0 } else { 0.0 }).abs());
            }
            if !rounds_to(&x, &z) {
                divergences += 1;
                first_divergence.get_or_insert((trial, step));
            }
        }
    }
    Ok(StabilityReport {
        variant: cfg.variant,
        sigma: cfg.sigma,
        length,
        steps,
        trials,
        noise,
        seed,
        divergences,
        divergence_fraction: divergences as f64 / (trials * steps) as f64,
        max_delta,
        first_divergence,
    })
}

fn add_noise(x: &mut [f64], noise: f64, rng: &mut impl Rng) {
    if noise > 0.0 {
        for v in x {
            *v += noise * rng.random_range(-1.0..1.0);
        }
    }
}

/// Rows `0..=steps` of the embedded automaton, with optional noise.
pub fn space_time(initial: &[bool], steps: usize, emb: &Embedding, noise: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = to_real(initial);
    add_noise(&mut x, noise, &mut rng);
    let mut rows = vec![x.clone()];
    for _ in 0..steps {
        x = emb.step(&x);
        add_noise(&mut x, noise, &mut rng);
        rows.push(x.clone());
    }
    rows
}

/// A ring of `len` zeros with a single live cell at the right end.
pub fn single_seed(len: usize) -> Vec<bool> {
    let mut row = vec![false; len];
    if let Some(last) = row.last_mut() {
        *last = true;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    /// Written out neighbourhood by neighbourhood, independent of `RULE`.
    fn rule110_by_cases(cells: &[bool]) -> Vec<bool> {
        let n = cells.len();
        (0..n)
            .map(|x| match (cells[(x + n - 1) % n], cells[x], cells[(x + 1) % n]) {
                (true, true, true) => false,
                (true, true, false) => true,
                (true, false, true) => true,
                (true, false, false) => false,
                (false, true, true) => true,
                (false, true, false) => true,
                (false, false, true) => true,
                (false, false, false) => false,
            })
            .collect()
    }

    #[test]
    fn exact_examples() {
        assert_eq!(rule110_exact(&bits("00000000")), bits("00000000"));
        assert_eq!(rule110_exact(&bits("11111111")), bits("00000000"));
        assert_eq!(rule110_exact(&bits("00010000")), bits("00110000"));
    }

    #[test]
    fn two_encodings_agree() {
        let seed = single_seed(16);
        let a = rule110_exact(&rule110_exact(&seed));
        let b = rule110_by_cases(&rule110_by_cases(&seed));
        assert_eq!(a, b);
        for row in 0..(1u32 << 10) {
            let cells: Vec<bool> = (0..10).map(|i| (row >> i) & 1 == 1).collect();
            assert_eq!(rule110_exact(&cells), rule110_by_cases(&cells));
        }
    }

    #[test]
    fn psi_values() {
        assert!(psi_sigmoid(0.0, 20.0) < 1e-4);
        assert!(psi_sigmoid(5.0, 20.0) < 1e-4);
        assert!((psi_sigmoid(2.0, 20.0) - 1.0).abs() < 1e-4);
        assert!(psi_sigmoid(1e6, 1e3).is_finite());
        assert_eq!(psi_sigmoid(-1e6, 1e3), 0.0);
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| psi_sigmoid(x, 20.0)).collect();
        let peak = ys
            .iter()
            .enumerate()
            .fold(0, |m, (i, &y)| if y > ys[m] { i } else { m });
        assert!(ys[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(ys[peak..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn psi_matches_product_form() {
        let sigma = 4.0;
        for x in [-1.0, 0.2, 0.5, 1.7, 3.5, 4.2] {
            let direct =
                1.0 / (1.0 + f64::exp(sigma * (x - 0.5))) * f64::exp(3.0 * sigma) / (1.0 + f64::exp(sigma * (3.5 - x)));
            assert!((psi_sigmoid(x, sigma) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn code_tables() {
        let a = analyze_codes([2.0, 2.0, 1.0]);
        assert!(a.consistent);
        // L + 2C + 2R: ones at codes 2, 3, 4
        assert_eq!(a.codes, [0.0, 2.0, 2.0, 4.0, 1.0, 3.0, 3.0, 5.0]);
        assert_eq!(a.band, Some((1.5, 4.5)));
        assert!(!a.band_realizes(0.5, 3.5));

        let t = analyze_codes([1.0, 2.0, 4.0]);
        assert_eq!(t.codes, [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert!(t.consistent);

        // 2L + 2C + R puts 100 and 010 on the same code with different outputs
        assert!(!analyze_codes([1.0, 2.0, 2.0]).consistent);
    }

    #[test]
    fn fixed_band_is_checked() {
        let cfg = EmbeddingConfig {
            band: Some((0.5, 3.5)),
            ..EmbeddingConfig::sigmoid()
        };
        assert!(Embedding::new(&cfg).is_err());
    }

    #[test]
    fn table_map_is_flat_at_codes() {
        let e = Embedding::new(&EmbeddingConfig::table_map()).unwrap();
        for c in 0..8 {
            let want = f64::from((RULE >> c) & 1);
            assert_eq!(e.activation(c as f64), want);
            let h = 1e-4;
            let slope = (e.activation(c as f64 + h) - e.activation(c as f64 - h)) / (2.0 * h);
            assert!(slope.abs() < 1e-9);
        }
    }

    #[test]
    fn smootherstep_shape() {
        assert_eq!(smootherstep(0.0), 0.0);
        assert_eq!(smootherstep(1.0), 1.0);
        assert!((smootherstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn embedded_step_is_exact_on_small_rings() {
        for cfg in [EmbeddingConfig::sigmoid(), EmbeddingConfig::table_map()] {
            let e = Embedding::new(&cfg).unwrap();
            for row in 0..256u32 {
                let cells: Vec<bool> = (0..8).map(|i| (row >> i) & 1 == 1).collect();
                let out = ca_step_embedded(&to_real(&cells), &e);
                assert!(rounds_to(&out, &rule110_exact(&cells)), "{cfg:?} {row}");
            }
        }
    }

    #[test]
    fn stability_report_fields() {
        let r = stability_experiment(50, 40, 0.0, 2, &EmbeddingConfig::sigmoid(), 5).unwrap();
        assert_eq!(r.divergences, 0);
        assert!(r.max_delta < 1e-3);
        assert!(r.to_json_line().contains("\"variant\":\"sigmoid-product\""));
        assert!(stability_experiment(0, 1, 0.0, 1, &EmbeddingConfig::sigmoid(), 0).is_err());
    }

    #[test]
    fn large_noise_diverges() {
        for cfg in [EmbeddingConfig::sigmoid(), EmbeddingConfig::table_map()] {
            let r = stability_experiment(100, 50, 0.6, 2, &cfg, 1).unwrap();
            assert!(r.divergences > 0);
        }
    }
}
