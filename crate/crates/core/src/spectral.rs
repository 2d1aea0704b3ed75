//! Analytic functions of convolution operators, evaluated in Fourier space.
//!
//! Convolution by `K` is diagonal in the Fourier basis with multipliers
//! `fft(K)`, so any entire function `g` of the operator `t K⊛` is again a
//! convolution, by the kernel `ifft(g(t fft(K)))`. The exponential of an
//! anti-Hermitian kernel has unit-modulus multipliers and is therefore a
//! unitary convolution.
//!
//! Derivative kernels follow from the forward transform convention
//! `F_j = sum_k K_k exp(-2 pi i jk/N)`: `dF_j/dK_a = exp(-2 pi i ja/N)`,
//! which is a circular translate by `+a`. Hence
//! `d exp(tK) / dK_a = t * translate(exp(tK), a)`, and at `K = 0` this is
//! the unit impulse at offset `a`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{fft, ifft, ComplexField, GridShape};
use crate::kernel::{translate, Kernel};

/// Fourier multipliers of a kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralKernel {
    multipliers: ComplexField,
}

impl SpectralKernel {
    pub fn new(k: &Kernel) -> Self {
        Self {
            multipliers: fft(k.field()),
        }
    }

    pub fn from_multipliers(multipliers: ComplexField) -> Self {
        Self { multipliers }
    }

    pub fn shape(&self) -> &GridShape {
        self.multipliers.shape()
    }

    pub fn multipliers(&self) -> &ComplexField {
        &self.multipliers
    }

    /// Convolution of `f` by the parent kernel.
    pub fn apply(&self, f: &ComplexField) -> Result<ComplexField> {
        let mut spec = fft(f);
        spec = spec.zip_with(&self.multipliers, |a, b| a * b)?;
        Ok(ifft(&spec))
    }

    pub fn to_kernel(&self) -> Kernel {
        Kernel::new(ifft(&self.multipliers))
    }

    /// Largest deviation of a multiplier modulus from 1.
    pub fn unit_modulus_defect(&self) -> f64 {
        self.multipliers
            .data()
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        self.multipliers.max_abs()
    }
}

/// Circular convolution `(K ⊛ f)[r] = sum_j K[j] f[r - j]`.
pub fn conv(k: &Kernel, f: &ComplexField) -> Result<ComplexField> {
    k.ensure_same_shape(f)?;
    SpectralKernel::new(k).apply(f)
}

/// Convolution of two kernels.
pub fn compose(a: &Kernel, b: &Kernel) -> Result<Kernel> {
    conv(a, b.field()).map(Kernel::new)
}

/// `ifft(g(t * fft(K)))` for an entire function `g`.
pub fn apply_analytic(k: &Kernel, g: impl Fn(Complex64) -> Complex64, t: f64) -> Result<Kernel> {
    let spectrum = fft(k.field()).map(|z| g(z * t));
    if let Some(index) = spectrum.first_non_finite() {
        return Err(Error::NonFinite {
            index,
            context: "spectral multiplier (frequency index)",
        });
    }
    let out = ifft(&spectrum);
    out.check_finite("analytic kernel")?;
    Ok(Kernel::new(out))
}

/// Convolutional exponential of `t K`.
pub fn conv_exp(k: &Kernel, t: f64) -> Result<Kernel> {
    apply_analytic(k, |z| z.exp(), t)
}

/// Convolutional cosine of `t K`.
pub fn conv_cos(k: &Kernel, t: f64) -> Result<Kernel> {
    apply_analytic(k, |z| z.cos(), t)
}

/// Convolutional sine of `t K`.
pub fn conv_sin(k: &Kernel, t: f64) -> Result<Kernel> {
    apply_analytic(k, |z| z.sin(), t)
}

fn check_offset(shape: &GridShape, a: &[isize]) -> Result<()> {
    if a.len() != shape.ndim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}-dimensional offset", shape.ndim()),
            found: format!("{a:?}"),
        });
    }
    Ok(())
}

/// `d exp(tK) / dK_a`, entries of `K` taken as independent complex
/// coordinates. Equals `t` times `exp(tK)` translated by `+a`.
pub fn deriv_exp_kernel(k: &Kernel, a: &[isize], t: f64) -> Result<Kernel> {
    check_offset(k.shape(), a)?;
    Ok(translate(&conv_exp(k, t)?, a).scale(t))
}

/// `(d cos(tK) / dK_a, d sin(tK) / dK_a)`: the sine derivative is the
/// translated cosine, the cosine derivative the negated translated sine.
pub fn deriv_trig_kernels(k: &Kernel, a: &[isize], t: f64) -> Result<(Kernel, Kernel)> {
    check_offset(k.shape(), a)?;
    let dcos = translate(&conv_sin(k, t)?, a).scale(-t);
    let dsin = translate(&conv_cos(k, t)?, a).scale(t);
    Ok((dcos, dsin))
}

/// Derivative of `exp(t K(U))` with respect to the real coordinate `U_b`,
/// where `K(U) = (U - U^T)/2 + i (U + U^T)/2` is the anti-Hermitian
/// parametrization. The Jacobian of that map is constant:
/// `dK_j/dU_b = (1+i)/2 [j=b] + (-1+i)/2 [j=-b]`.
pub fn deriv_exp_wrt_real_generator(u: &Kernel, b: &[isize], t: f64) -> Result<Kernel> {
    let k = crate::kernel::anti_hermitian_from_real(u)?;
    check_offset(k.shape(), b)?;
    let e = conv_exp(&k, t)?;
    let minus_b: Vec<isize> = b.iter().map(|x| -x).collect();
    let plus = translate(&e, b).scale(Complex64::new(0.5 * t, 0.5 * t));
    let minus = translate(&e, &minus_b).scale(Complex64::new(-0.5 * t, 0.5 * t));
    plus.add(&minus)
}

/// The four kernels of the orthogonal block operator on `(X, P)`:
/// `X' = xx⊛X + xp⊛P`, `P' = px⊛X + pp⊛P`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteKernelSet {
    pub xx: Kernel,
    pub xp: Kernel,
    pub px: Kernel,
    pub pp: Kernel,
    pub time: f64,
}

impl BipartiteKernelSet {
    pub fn shape(&self) -> &GridShape {
        self.xx.shape()
    }

    /// One application of the block operator.
    pub fn apply(&self, x: &ComplexField, p: &ComplexField) -> Result<(ComplexField, ComplexField)> {
        let nx = &conv(&self.xx, x)? + &conv(&self.xp, p)?;
        let np = &conv(&self.px, x)? + &conv(&self.pp, p)?;
        Ok((nx, np))
    }

    pub fn is_real(&self) -> bool {
        [&self.xx, &self.xp, &self.px, &self.pp].iter().all(|k| k.is_real())
    }
}

/// Exponential of the generator `[[0, K⊛], [-flip(K)⊛, 0]]` for a real
/// kernel `K`.
///
/// Per frequency the generator is `[[0, c], [-conj c, 0]]` with `c = fft(K)`,
/// which squares to `-|c|^2 I`, so its exponential is
/// `cos(ts) I + sin(ts)/s * generator` with `s = |c|`. At `s = 0` the ratio
/// takes its limit `t`. The four inverse transforms are real up to
/// rounding; imaginary residue is dropped.
pub fn bipartite_exp(k: &Kernel, t: f64) -> Result<BipartiteKernelSet> {
    k.require_real()?;
    let spectrum = fft(k.field());
    let shape = spectrum.shape().clone();
    let n = shape.len();
    let mut cos = Vec::with_capacity(n);
    let mut xp = Vec::with_capacity(n);
    let mut px = Vec::with_capacity(n);
    for &c in spectrum.data() {
        let s = c.norm();
        let sinc = if s == 0.0 { t } else { (t * s).sin() / s };
        cos.push(Complex64::new((t * s).cos(), 0.0));
        xp.push(c * sinc);
        px.push(-c.conj() * sinc);
    }
    let real_kernel = |data: Vec<Complex64>| -> Result<Kernel> {
        let f = ifft(&ComplexField::from_vec(shape.clone(), data)?);
        f.check_finite("bipartite kernel")?;
        Ok(Kernel::new(f.real_part()))
    };
    let xx = real_kernel(cos)?;
    Ok(BipartiteKernelSet {
        pp: xx.clone(),
        xx,
        xp: real_kernel(xp)?,
        px: real_kernel(px)?,
        time: t,
    })
}
