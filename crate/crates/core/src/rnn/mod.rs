//! Convolutional recurrences built from spectral kernels.
//!
//! - Unitary (complex) recurrence: `Z' = phi(exp(tK) ⊛ Z + I)`. With an
//!   anti-Hermitian `K` the linear part preserves the norm exactly.
//! - Orthogonal (real, bipartite) recurrence:
//!   `X' = phi(xx⊛X + xp⊛P + I)`, `P' = psi(px⊛X + pp⊛P)`, the blocks coming
//!   from [`bipartite_exp`](crate::spectral::bipartite_exp). `P` receives no
//!   input.
//!
//! Step operators keep their Fourier multipliers, so a rollout costs two
//! FFTs per step (four for the bipartite form).

mod activation;
pub mod config;
mod gradient;

use std::ops::Deref;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use activation::Activation;
pub use gradient::{gradient_norm_trace, POWER_ITERATIONS, POWER_SEED};

use crate::error::{Error, Result};
use crate::field::{fft, ifft, ComplexField, GridShape};
use crate::kernel::{is_anti_hermitian, Kernel, SYMMETRY_TOL};
use crate::spectral::{BipartiteKernelSet, SpectralKernel};

/// Multipliers of `exp(tK)` plus the generator they came from.
#[derive(Clone, Debug)]
pub struct StepOperator {
    spectral: SpectralKernel,
    source: Option<Kernel>,
    t: f64,
}

impl StepOperator {
    /// Step by `exp(tK)`, for any kernel.
    pub fn new(k: &Kernel, t: f64) -> Result<Self> {
        let m = fft(k.field()).map(|z| (z * t).exp());
        if let Some(index) = m.first_non_finite() {
            return Err(Error::NonFinite {
                index,
                context: "step multiplier (frequency index)",
            });
        }
        Ok(Self {
            spectral: SpectralKernel::from_multipliers(m),
            source: Some(k.clone()),
            t,
        })
    }

    /// Step by prescribed Fourier multipliers.
    pub fn from_multipliers(multipliers: ComplexField) -> Result<Self> {
        multipliers.check_finite("step multipliers")?;
        Ok(Self {
            spectral: SpectralKernel::from_multipliers(multipliers),
            source: None,
            t: 1.0,
        })
    }

    pub fn spectral(&self) -> &SpectralKernel {
        &self.spectral
    }

    pub fn source(&self) -> Option<&Kernel> {
        self.source.as_ref()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn shape(&self) -> &GridShape {
        self.spectral.shape()
    }

    /// The step kernel `exp(tK)` itself.
    pub fn kernel(&self) -> Kernel {
        self.spectral.to_kernel()
    }

    pub fn apply(&self, z: &ComplexField) -> Result<ComplexField> {
        self.spectral.apply(z)
    }
}

/// A [`StepOperator`] whose multipliers all have unit modulus.
#[derive(Clone, Debug)]
pub struct UnitaryStepOperator(StepOperator);

impl UnitaryStepOperator {
    pub const MODULUS_TOL: f64 = 1e-10;

    /// Requires `K` anti-Hermitian (to [`SYMMETRY_TOL`]).
    pub fn new(k: &Kernel, t: f64) -> Result<Self> {
        if !is_anti_hermitian(k, SYMMETRY_TOL) {
            return Err(Error::InvalidArgument(
                "unitary step needs an anti-Hermitian generator".into(),
            ));
        }
        let op = StepOperator::new(k, t)?;
        let defect = op.spectral.unit_modulus_defect();
        if defect > Self::MODULUS_TOL {
            return Err(Error::InvalidArgument(format!(
                "multiplier modulus deviates from 1 by {defect:e}"
            )));
        }
        Ok(Self(op))
    }

    pub fn into_inner(self) -> StepOperator {
        self.0
    }
}

impl Deref for UnitaryStepOperator {
    type Target = StepOperator;

    fn deref(&self) -> &StepOperator {
        &self.0
    }
}

/// Fourier multipliers of the four bipartite blocks.
#[derive(Clone, Debug)]
pub struct BipartiteStep {
    blocks: BipartiteKernelSet,
    xx: ComplexField,
    xp: ComplexField,
    px: ComplexField,
    pp: ComplexField,
}

impl BipartiteStep {
    pub fn new(blocks: BipartiteKernelSet) -> Result<Self> {
        if !blocks.is_real() {
            return Err(Error::InvalidArgument("bipartite blocks must be real".into()));
        }
        let shape = blocks.shape().clone();
        for k in [&blocks.xp, &blocks.px, &blocks.pp] {
            if k.shape() != &shape {
                return Err(Error::ShapeMismatch {
                    expected: shape.to_string(),
                    found: k.shape().to_string(),
                });
            }
        }
        Ok(Self {
            xx: fft(blocks.xx.field()),
            xp: fft(blocks.xp.field()),
            px: fft(blocks.px.field()),
            pp: fft(blocks.pp.field()),
            blocks,
        })
    }

    pub fn blocks(&self) -> &BipartiteKernelSet {
        &self.blocks
    }

    pub fn shape(&self) -> &GridShape {
        self.xx.shape()
    }

    /// Linear part: `(xx⊛x + xp⊛p, px⊛x + pp⊛p)`, projected to real.
    pub fn apply(&self, x: &ComplexField, p: &ComplexField) -> Result<(ComplexField, ComplexField)> {
        let fx = fft(x);
        let fp = fft(p);
        let mix = |a: &ComplexField, b: &ComplexField| -> Result<ComplexField> {
            let data = fx
                .data()
                .iter()
                .zip(fp.data())
                .zip(a.data().iter().zip(b.data()))
                .map(|((&u, &v), (&ma, &mb))| ma * u + mb * v)
                .collect();
            Ok(ifft(&ComplexField::from_vec(self.shape().clone(), data)?).real_part())
        };
        Ok((mix(&self.xx, &self.xp)?, mix(&self.px, &self.pp)?))
    }
}

/// State of the complex recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryState {
    pub z: ComplexField,
    pub step: usize,
}

/// State of the real bipartite recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    pub x: ComplexField,
    pub p: ComplexField,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NetworkState {
    Unitary(UnitaryState),
    Bipartite(BipartiteState),
}

impl NetworkState {
    pub fn unitary(z: ComplexField) -> Self {
        NetworkState::Unitary(UnitaryState { z, step: 0 })
    }

    /// Real `(x, p)` pair; imaginary parts must be zero.
    pub fn bipartite(x: ComplexField, p: ComplexField) -> Result<Self> {
        x.ensure_same_shape(&p)?;
        require_real_field(&x)?;
        require_real_field(&p)?;
        Ok(NetworkState::Bipartite(BipartiteState { x, p, step: 0 }))
    }

    pub fn step_index(&self) -> usize {
        match self {
            NetworkState::Unitary(s) => s.step,
            NetworkState::Bipartite(s) => s.step,
        }
    }

    pub fn shape(&self) -> &GridShape {
        match self {
            NetworkState::Unitary(s) => s.z.shape(),
            NetworkState::Bipartite(s) => s.x.shape(),
        }
    }

    /// Euclidean norm of `z`, or of the stacked `(x, p)`.
    pub fn norm(&self) -> f64 {
        match self {
            NetworkState::Unitary(s) => s.z.norm(),
            NetworkState::Bipartite(s) => (s.x.norm_sqr() + s.p.norm_sqr()).sqrt(),
        }
    }

    /// Fields in storage order: `[z]` or `[x, p]`.
    pub fn fields(&self) -> Vec<&ComplexField> {
        match self {
            NetworkState::Unitary(s) => vec![&s.z],
            NetworkState::Bipartite(s) => vec![&s.x, &s.p],
        }
    }
}

fn require_real_field(f: &ComplexField) -> Result<()> {
    match f.data().iter().position(|z| z.im != 0.0) {
        Some(index) => Err(Error::NotReal {
            index,
            imag: f.data()[index].im,
        }),
        None => Ok(()),
    }
}

/// `z' = phi(op ⊛ z + input)`.
pub fn curnn_step(
    state: &UnitaryState,
    op: &StepOperator,
    input: &ComplexField,
    phi: &Activation,
) -> Result<UnitaryState> {
    state.z.ensure_same_shape(input)?;
    let linear = op.apply(&state.z)?;
    let z = linear.zip_with(input, |a, b| phi.apply_complex(a + b))?;
    z.check_finite("unitary step")?;
    Ok(UnitaryState {
        z,
        step: state.step + 1,
    })
}

/// `x' = phi(xx⊛x + xp⊛p + input)`, `p' = psi(px⊛x + pp⊛p)`.
pub fn cornn_step(
    state: &BipartiteState,
    blocks: &BipartiteStep,
    input: &ComplexField,
    phi: &Activation,
    psi: &Activation,
) -> Result<BipartiteState> {
    state.x.ensure_same_shape(input)?;
    require_real_field(input)?;
    let (lx, lp) = blocks.apply(&state.x, &state.p)?;
    let x = lx.zip_with(input, |a, b| Complex64::new(phi.apply_real(a.re + b.re), 0.0))?;
    let p = lp.map(|a| Complex64::new(psi.apply_real(a.re), 0.0));
    x.check_finite("bipartite step (x)")?;
    p.check_finite("bipartite step (p)")?;
    Ok(BipartiteState {
        x,
        p,
        step: state.step + 1,
    })
}

/// Which recurrence to iterate.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Unitary {
        op: StepOperator,
        phi: Activation,
    },
    Bipartite {
        step: BipartiteStep,
        phi: Activation,
        psi: Activation,
    },
}

/// External drive `I_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum InputMode {
    Zero,
    Constant(Complex64),
    /// Uniform in `[-amplitude, amplitude)` per component, seeded.
    Random {
        amplitude: f64,
        seed: u64,
    },
}

/// Deterministic generator of the input sequence.
pub struct InputStream {
    mode: InputMode,
    shape: GridShape,
    real: bool,
    rng: Option<ChaCha8Rng>,
}

impl InputStream {
    pub fn new(mode: &InputMode, shape: &GridShape, real: bool) -> Self {
        let rng = match mode {
            InputMode::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Self {
            mode: mode.clone(),
            shape: shape.clone(),
            real,
            rng,
        }
    }

    pub fn next_input(&mut self) -> ComplexField {
        match &self.mode {
            InputMode::Zero => ComplexField::zeros(self.shape.clone()),
            InputMode::Constant(v) => {
                let v = if self.real { Complex64::new(v.re, 0.0) } else { *v };
                ComplexField::constant(self.shape.clone(), v)
            }
            InputMode::Random { amplitude, .. } => {
                let a = *amplitude;
                let rng = self.rng.as_mut().expect("seeded");
                let real = self.real;
                ComplexField::from_fn(self.shape.clone(), |_| {
                    let re = a * rng.random_range(-1.0..1.0);
                    let im = if real { 0.0 } else { a * rng.random_range(-1.0..1.0) };
                    Complex64::new(re, im)
                })
            }
        }
    }
}

/// A recurrence with its initial state and drive.
#[derive(Clone, Debug)]
pub struct Recurrence {
    pub model: Model,
    pub initial: NetworkState,
    pub input: InputMode,
}

impl Recurrence {
    pub fn shape(&self) -> &GridShape {
        self.initial.shape()
    }

    fn validate(&self) -> Result<()> {
        let model_shape = match &self.model {
            Model::Unitary { op, .. } => op.shape(),
            Model::Bipartite { step, .. } => step.shape(),
        };
        if model_shape != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: model_shape.to_string(),
                found: self.shape().to_string(),
            });
        }
        match (&self.model, &self.initial) {
            (Model::Unitary { .. }, NetworkState::Unitary(_))
            | (Model::Bipartite { .. }, NetworkState::Bipartite(_)) => Ok(()),
            _ => Err(Error::InvalidArgument(
                "initial state does not match the model kind".into(),
            )),
        }
    }

    fn is_real(&self) -> bool {
        matches!(self.model, Model::Bipartite { .. })
    }

    /// Advances one step, also returning the input that was applied.
    pub fn step(&self, state: &NetworkState, input: &ComplexField) -> Result<NetworkState> {
        match (&self.model, state) {
            (Model::Unitary { op, phi }, NetworkState::Unitary(s)) => {
                curnn_step(s, op, input, phi).map(NetworkState::Unitary)
            }
            (Model::Bipartite { step, phi, psi }, NetworkState::Bipartite(s)) => {
                cornn_step(s, step, input, phi, psi).map(NetworkState::Bipartite)
            }
            _ => Err(Error::InvalidArgument("state does not match model".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Record {
    Norm,
    Full,
}

/// Per-step norms (index 0 is the initial state) and, in full mode, states.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub norms: Vec<f64>,
    pub states: Vec<NetworkState>,
    pub last: NetworkState,
}

/// Iterates `steps` times, handing every state (initial included) to
/// `observe`. Errors carry the failing step index.
pub fn run_observed(
    rec: &Recurrence,
    steps: usize,
    mut observe: impl FnMut(&NetworkState) -> Result<()>,
) -> Result<NetworkState> {
    rec.validate()?;
    let mut inputs = InputStream::new(&rec.input, rec.shape(), rec.is_real());
    let mut state = rec.initial.clone();
    observe(&state)?;
    for n in 0..steps {
        let input = inputs.next_input();
        state = rec.step(&state, &input).map_err(|e| Error::AtStep {
            step: n + 1,
            source: Box::new(e),
        })?;
        observe(&state)?;
    }
    Ok(state)
}

pub fn run(rec: &Recurrence, steps: usize, record: Record) -> Result<Trajectory> {
    let mut norms = Vec::with_capacity(steps + 1);
    let mut states = Vec::new();
    let last = run_observed(rec, steps, |s| {
        norms.push(s.norm());
        if record == Record::Full {
            states.push(s.clone());
        }
        Ok(())
    })?;
    Ok(Trajectory { norms, states, last })
}
