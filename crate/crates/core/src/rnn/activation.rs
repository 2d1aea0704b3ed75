use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Elementwise activation functions.
///
/// On complex inputs `Relu` and `ControlledExpansion` act on the real and
/// imaginary parts separately; `ModRelu` shifts the modulus by `bias` and
/// keeps the phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// `(1 + 1/tau) max(x, 0)`.
    ControlledExpansion {
        tau: f64,
    },
    ModRelu {
        bias: f64,
    },
}

impl Default for Activation {
    /// Default for complex states.
    fn default() -> Self {
        Activation::ModRelu { bias: 0.0 }
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl Activation {
    pub fn controlled_expansion(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        Ok(Activation::ControlledExpansion { tau })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Activation::Identity)
    }

    pub fn apply_real(&self, x: f64) -> f64 {
        match *self {
            Activation::Identity => x,
            Activation::Relu => relu(x),
            Activation::ControlledExpansion { tau } => (1.0 + 1.0 / tau) * relu(x),
            Activation::ModRelu { bias } => x.signum() * relu(x.abs() + bias),
        }
    }

    /// Slope on real inputs (right-continuous choice at kinks: 0 at 0).
    pub fn derivative_real(&self, x: f64) -> f64 {
        match *self {
            Activation::Identity => 1.0,
            Activation::Relu => step(x),
            Activation::ControlledExpansion { tau } => (1.0 + 1.0 / tau) * step(x),
            Activation::ModRelu { bias } => {
                if x != 0.0 {
                    step(x.abs() + bias)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        match *self {
            Activation::Identity => z,
            Activation::Relu | Activation::ControlledExpansion { .. } => {
                Complex64::new(self.apply_real(z.re), self.apply_real(z.im))
            }
            Activation::ModRelu { bias } => {
                let r = z.norm();
                if r == 0.0 || r + bias <= 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    z * ((r + bias) / r)
                }
            }
        }
    }

    /// Real 2x2 Jacobian `d(out.re, out.im) / d(z.re, z.im)`, row-major.
    pub fn jacobian_complex(&self, z: Complex64) -> [[f64; 2]; 2] {
        match *self {
            Activation::Identity => [[1.0, 0.0], [0.0, 1.0]],
            Activation::Relu | Activation::ControlledExpansion { .. } => {
                [[self.derivative_real(z.re), 0.0], [0.0, self.derivative_real(z.im)]]
            }
            Activation::ModRelu { bias } => {
                let r = z.norm();
                if r == 0.0 || r + bias <= 0.0 {
                    return [[0.0, 0.0], [0.0, 0.0]];
                }
                let (x, y) = (z.re, z.im);
                let g = 1.0 + bias / r;
                let r3 = r * r * r;
                [
                    [g - bias * x * x / r3, -bias * x * y / r3],
                    [-bias * x * y / r3, g - bias * y * y / r3],
                ]
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => f.write_str("identity"),
            Activation::Relu => f.write_str("relu"),
            Activation::ControlledExpansion { tau } => write!(f, "ce-relu:{tau}"),
            Activation::ModRelu { bias } => write!(f, "modrelu:{bias}"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    /// `identity`, `relu`, `ce-relu:<tau>`, `modrelu[:<bias>]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidArgument(format!("{name} needs a parameter")))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad parameter in {s:?}")))
        };
        match name {
            "identity" | "linear" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "ce-relu" | "controlled-relu" => Activation::controlled_expansion(num(arg)?),
            "modrelu" => Ok(Activation::ModRelu {
                bias: arg.map(|_| num(arg)).transpose()?.unwrap_or(0.0),
            }),
            _ => Err(Error::InvalidArgument(format!("unknown activation {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controlled_expansion_slope() {
        for tau in [0.5, 1.0, 4.0, 100.0] {
            let a = Activation::controlled_expansion(tau).unwrap();
            assert_eq!(a.derivative_real(0.3), 1.0 + 1.0 / tau);
            assert_eq!(a.apply_real(2.0), 2.0 * (1.0 + 1.0 / tau));
            assert_eq!(a.apply_real(-2.0), 0.0);
        }
        assert!(Activation::controlled_expansion(0.0).is_err());
    }

    #[test]
    fn modrelu_keeps_phase() {
        let a = Activation::ModRelu { bias: -0.5 };
        let z = Complex64::from_polar(2.0, 0.7);
        let out = a.apply_complex(z);
        assert!((out.norm() - 1.5).abs() < 1e-15);
        assert!((out.arg() - 0.7).abs() < 1e-15);
        assert_eq!(
            a.apply_complex(Complex64::from_polar(0.4, 1.0)),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let h = 1e-7;
        let z = Complex64::new(0.8, -0.3);
        for a in [
            Activation::Identity,
            Activation::Relu,
            Activation::ControlledExpansion { tau: 3.0 },
            Activation::ModRelu { bias: -0.2 },
            Activation::ModRelu { bias: 0.4 },
        ] {
            let j = a.jacobian_complex(z);
            for (col, dz) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].iter().enumerate() {
                let d = (a.apply_complex(z + dz) - a.apply_complex(z - dz)) / (2.0 * h);
                assert!((d.re - j[0][col]).abs() < 1e-6, "{a}");
                assert!((d.im - j[1][col]).abs() < 1e-6, "{a}");
            }
        }
    }

    #[test]
    fn parse_and_display() {
        for s in ["identity", "relu", "ce-relu:4", "modrelu:-0.1"] {
            let a: Activation = s.parse().unwrap();
            assert_eq!(a.to_string().parse::<Activation>().unwrap(), a);
        }
        assert_eq!(
            "modrelu".parse::<Activation>().unwrap(),
            Activation::ModRelu { bias: 0.0 }
        );
        assert!("tanh".parse::<Activation>().is_err());
        assert!("ce-relu".parse::<Activation>().is_err());
    }
}
