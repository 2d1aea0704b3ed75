//! Complex-valued arrays on periodic D-dimensional grids.
//!
//! Storage is row-major: the last axis is contiguous. Every other module
//! builds on [`ComplexField`] and the transforms in [`fft`].

pub mod cfld;
pub mod fft;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use fft::{fft, fft_in_place, ifft, ifft_in_place};

/// Extents of a periodic grid, `D >= 1` axes, each at least one cell.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: Vec<usize>,
}

impl GridShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one axis is required".into()));
        }
        if let Some(axis) = dims.iter().position(|&e| e == 0) {
            return Err(Error::InvalidShape(format!("axis {axis} has zero extent")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or_else(|| Error::InvalidShape("cell count overflows usize".into()))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of cells `N`.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides, in cells.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for axis in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.dims[axis + 1];
        }
        strides
    }

    /// Flat index of a multi-index (components must be in range).
    pub fn ravel(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &e)| acc * e + i)
    }

    /// Flat index of a signed offset, wrapped onto the torus.
    pub fn ravel_wrapped(&self, offset: &[isize]) -> usize {
        debug_assert_eq!(offset.len(), self.dims.len());
        offset
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&o, &e)| acc * e + o.rem_euclid(e as isize) as usize)
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.dims.len()];
        for (slot, &e) in index.iter_mut().zip(&self.dims).rev() {
            *slot = flat % e;
            flat /= e;
        }
        index
    }

    /// Signed representative of each component in `(-e/2, e/2]`.
    pub fn centered(&self, flat: usize) -> Vec<isize> {
        self.unravel(flat)
            .into_iter()
            .zip(&self.dims)
            .map(|(i, &e)| {
                let (i, e) = (i as isize, e as isize);
                if 2 * i > e {
                    i - e
                } else {
                    i
                }
            })
            .collect()
    }

    /// Flat index of `-j` (component-wise, modulo the extents).
    pub fn negate(&self, flat: usize) -> usize {
        let index = self.unravel(flat);
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &e)| acc * e + (e - i) % e)
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

impl fmt::Debug for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridShape({self})")
    }
}

impl FromStr for GridShape {
    type Err = Error;

    /// Parses `64x64`, `32`, `8x6x4`.
    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .trim()
            .split(['x', 'X', ','])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidShape(format!("cannot parse extent {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        GridShape::new(dims)
    }
}

/// `N` complex numbers laid out row-major on a [`GridShape`].
#[derive(Clone, PartialEq)]
pub struct ComplexField {
    shape: GridShape,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexField")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

impl ComplexField {
    pub fn zeros(shape: GridShape) -> Self {
        let n = shape.len();
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn constant(shape: GridShape, value: Complex64) -> Self {
        let n = shape.len();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    /// Unit impulse at the origin.
    pub fn delta(shape: GridShape) -> Self {
        let mut f = Self::zeros(shape);
        f.data[0] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn from_vec(shape: GridShape, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries for {shape}", shape.len()),
                found: format!("{} entries", data.len()),
            });
        }
        if let Some(index) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "field construction",
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_real(shape: GridShape, data: &[f64]) -> Result<Self> {
        Self::from_vec(shape, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Build a field from a function of the multi-index.
    pub fn from_fn(shape: GridShape, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let data = (0..shape.len()).map(|i| f(&shape.unravel(i))).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.data[self.shape.ravel(index)]
    }

    /// Entry at a signed offset from the origin, wrapped onto the torus.
    pub fn at_offset(&self, offset: &[isize]) -> Complex64 {
        self.data[self.shape.ravel_wrapped(offset)]
    }

    pub fn set_offset(&mut self, offset: &[isize], value: Complex64) {
        let i = self.shape.ravel_wrapped(offset);
        self.data[i] = value;
    }

    pub fn ensure_same_shape(&self, other: &ComplexField) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.to_string(),
                found: other.shape.to_string(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped fields.
    pub fn zip_with(&self, other: &ComplexField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Real part as a field with zero imaginary part.
    pub fn real_part(&self) -> Self {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    pub fn re(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    /// Euclidean norm of the flattened field.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of the difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.shape, other.shape, "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// First non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|z| !z.is_finite())
    }

    pub(crate) fn check_finite(&self, context: &'static str) -> Result<()> {
        match self.first_non_finite() {
            Some(index) => Err(Error::NonFinite { index, context }),
            None => Ok(()),
        }
    }
}

/// Applies `g` to every entry, reporting the first non-finite result.
pub fn pointwise(f: &ComplexField, g: impl Fn(Complex64) -> Complex64) -> Result<ComplexField> {
    let out = f.map(g);
    out.check_finite("pointwise")?;
    Ok(out)
}

impl Add for &ComplexField {
    type Output = ComplexField;

    fn add(self, rhs: &ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a + b).expect("field shapes differ")
    }
}

impl Sub for &ComplexField {
    type Output = ComplexField;

    fn sub(self, rhs: &ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a - b).expect("field shapes differ")
    }
}

/// Elementwise (Hadamard) product.
impl Mul for &ComplexField {
    type Output = ComplexField;

    fn mul(self, rhs: &ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a * b).expect("field shapes differ")
    }
}

impl Mul<f64> for &ComplexField {
    type Output = ComplexField;

    fn mul(self, rhs: f64) -> ComplexField {
        self.map(|z| z * rhs)
    }
}

impl Neg for &ComplexField {
    type Output = ComplexField;

    fn neg(self) -> ComplexField {
        self.map(|z| -z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shape_rejects_empty_and_zero() {
        assert!(GridShape::new(vec![]).is_err());
        assert!(GridShape::new(vec![4, 0]).is_err());
        let s = GridShape::new(vec![3, 4, 5]).unwrap();
        assert_eq!(s.len(), 60);
        assert_eq!(s.strides(), vec![20, 5, 1]);
    }

    #[test]
    fn shape_parse_and_display() {
        let s: GridShape = "64x32".parse().unwrap();
        assert_eq!(s.dims(), &[64, 32]);
        assert_eq!(s.to_string(), "64x32");
        assert!("8xq".parse::<GridShape>().is_err());
        assert_eq!("12".parse::<GridShape>().unwrap().dims(), &[12]);
    }

    #[test]
    fn ravel_unravel_and_negate() {
        let s = GridShape::new(vec![4, 6]).unwrap();
        for flat in 0..s.len() {
            assert_eq!(s.ravel(&s.unravel(flat)), flat);
            assert_eq!(s.negate(s.negate(flat)), flat);
        }
        assert_eq!(s.ravel_wrapped(&[-1, -1]), s.ravel(&[3, 5]));
        assert_eq!(s.negate(s.ravel(&[1, 2])), s.ravel(&[3, 4]));
        // Nyquist is self-conjugate
        assert_eq!(s.negate(s.ravel(&[2, 3])), s.ravel(&[2, 3]));
        assert_eq!(s.centered(s.ravel(&[3, 3])), vec![-1, 3]);
    }

    #[test]
    fn from_vec_validates() {
        let s = GridShape::new(vec![2]).unwrap();
        assert!(ComplexField::from_vec(s.clone(), vec![c(1.0, 0.0)]).is_err());
        let err = ComplexField::from_vec(s, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn pointwise_examples() {
        let s = GridShape::new(vec![5]).unwrap();
        let ones = pointwise(&ComplexField::zeros(s.clone()), |z| z.exp()).unwrap();
        assert!(ones.data().iter().all(|&z| z == c(1.0, 0.0)));

        let pis = ComplexField::constant(s.clone(), c(std::f64::consts::PI, 0.0));
        let cos = pointwise(&pis, |z| z.cos()).unwrap();
        assert!(cos.data().iter().all(|z| (z - c(-1.0, 0.0)).norm() < 1e-15));

        let imag = ComplexField::from_fn(s.clone(), |i| c(0.0, 0.7 * i[0] as f64 - 1.3));
        let phases = pointwise(&imag, |z| z.exp()).unwrap();
        assert!(phases.data().iter().all(|z| (z.norm() - 1.0).abs() <= 1e-14));
    }

    #[test]
    fn pointwise_reports_offending_index() {
        let s = GridShape::new(vec![4]).unwrap();
        let f = ComplexField::from_real(s, &[0.0, 1.0, 800.0, 2.0]).unwrap();
        match pointwise(&f, |z| z.exp()) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }
}
