//! Built-in kernels.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{ComplexField, GridShape};
use crate::kernel::{anti_hermitian_from_real, embed, Kernel, KernelCore};

/// Nearest-neighbour Laplacian, `-2D` at the origin and `1` at `±1` along
/// every axis. In 2-D this is the five-point stencil.
pub fn laplacian(shape: &GridShape) -> Result<Kernel> {
    let d = shape.ndim();
    let mut entries = vec![(vec![0isize; d], Complex64::new(-2.0 * d as f64, 0.0))];
    for axis in 0..d {
        for sign in [1isize, -1] {
            let mut o = vec![0isize; d];
            o[axis] = sign;
            entries.push((o, Complex64::new(1.0, 0.0)));
        }
    }
    embed(&KernelCore::new(entries)?, shape)
}

/// `(-1/2, 0, 1/2)`: the centered first difference along the only axis.
pub fn central_difference(shape: &GridShape) -> Result<Kernel> {
    if shape.ndim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "central-diff-1d needs a 1-D grid, got {shape}"
        )));
    }
    embed(&KernelCore::from_real(&[(&[-1], -0.5), (&[1], 0.5)])?, shape)
}

/// Entries uniform in `[-amplitude, amplitude)`.
pub fn random_real(shape: &GridShape, seed: u64, amplitude: f64) -> Kernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Kernel::new(ComplexField::from_fn(shape.clone(), |_| {
        Complex64::new(amplitude * rng.random_range(-1.0..1.0), 0.0)
    }))
}

/// Image of [`random_real`] under the real-to-anti-Hermitian bijection.
pub fn random_anti_hermitian(shape: &GridShape, seed: u64, amplitude: f64) -> Kernel {
    anti_hermitian_from_real(&random_real(shape, seed, amplitude)).expect("real input")
}

/// Named built-in kernels understood by the CLI and run configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    Laplacian,
    CentralDifference,
    RandomReal,
    RandomAntiHermitian,
    Zero,
    Delta,
}

impl Stencil {
    pub const ALL: [Stencil; 6] = [
        Stencil::Laplacian,
        Stencil::CentralDifference,
        Stencil::RandomReal,
        Stencil::RandomAntiHermitian,
        Stencil::Zero,
        Stencil::Delta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stencil::Laplacian => "laplacian2d",
            Stencil::CentralDifference => "central-diff-1d",
            Stencil::RandomReal => "random-real",
            Stencil::RandomAntiHermitian => "random-antihermitian",
            Stencil::Zero => "zero",
            Stencil::Delta => "delta",
        }
    }

    /// Grid used when none is given.
    pub fn default_shape(self) -> GridShape {
        let dims = match self {
            Stencil::Laplacian => vec![64, 64],
            Stencil::CentralDifference => vec![32],
            _ => vec![16, 16],
        };
        GridShape::new(dims).expect("valid default")
    }

    pub fn build(self, shape: &GridShape, seed: u64, amplitude: f64) -> Result<Kernel> {
        match self {
            Stencil::Laplacian => laplacian(shape),
            Stencil::CentralDifference => central_difference(shape),
            Stencil::RandomReal => Ok(random_real(shape, seed, amplitude)),
            Stencil::RandomAntiHermitian => Ok(random_anti_hermitian(shape, seed, amplitude)),
            Stencil::Zero => Ok(Kernel::zeros(shape.clone())),
            Stencil::Delta => Ok(Kernel::delta(shape.clone())),
        }
    }
}

impl fmt::Display for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stencil {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "laplacian2d" | "laplacian" => Stencil::Laplacian,
            "central-diff-1d" | "central-diff" => Stencil::CentralDifference,
            "random-real" => Stencil::RandomReal,
            "random-antihermitian" | "random-anti-hermitian" => Stencil::RandomAntiHermitian,
            "zero" | "zero-kernel" => Stencil::Zero,
            "delta" | "identity" => Stencil::Delta,
            other => {
                let known: Vec<&str> = Stencil::ALL.iter().map(|s| s.name()).collect();
                return Err(Error::InvalidArgument(format!(
                    "unknown stencil {other:?} (known: {})",
                    known.join(", ")
                )));
            }
        })
    }
}
