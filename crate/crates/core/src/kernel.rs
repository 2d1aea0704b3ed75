//! Circular convolution kernels and their symmetry algebra.
//!
//! A [`Kernel`] always spans the full layer grid with its origin at
//! multi-index 0; negative offsets wrap to the top end of each axis.
//! [`KernelCore`] is the compact list of nonzero taps that a user writes
//! down (a 3x3 stencil, say), and [`embed`] places it on a grid.
//!
//! On even extents the central reflection `j -> -j mod e` fixes the Nyquist
//! index `e/2`, so an anti-Hermitian kernel has a purely imaginary entry
//! there. Nothing in this module symmetrizes silently; predicates report.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::Deref;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{cfld, ComplexField, GridShape};

/// Default absolute tolerance for symmetry predicates.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A full-grid convolution kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel(ComplexField);

impl Deref for Kernel {
    type Target = ComplexField;

    fn deref(&self) -> &ComplexField {
        &self.0
    }
}

impl From<ComplexField> for Kernel {
    fn from(f: ComplexField) -> Self {
        Kernel(f)
    }
}

impl Kernel {
    pub fn new(field: ComplexField) -> Self {
        Kernel(field)
    }

    pub fn zeros(shape: GridShape) -> Self {
        Kernel(ComplexField::zeros(shape))
    }

    /// The convolution identity.
    pub fn delta(shape: GridShape) -> Self {
        Kernel(ComplexField::delta(shape))
    }

    /// Unit impulse at `offset`.
    pub fn delta_at(shape: GridShape, offset: &[isize]) -> Self {
        let mut f = ComplexField::zeros(shape);
        f.set_offset(offset, Complex64::new(1.0, 0.0));
        Kernel(f)
    }

    pub fn field(&self) -> &ComplexField {
        &self.0
    }

    pub fn field_mut(&mut self) -> &mut ComplexField {
        &mut self.0
    }

    pub fn into_field(self) -> ComplexField {
        self.0
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Kernel {
        Kernel(self.0.scale(s.into()))
    }

    pub fn add(&self, other: &Kernel) -> Result<Kernel> {
        self.0.zip_with(&other.0, |a, b| a + b).map(Kernel)
    }

    pub fn sub(&self, other: &Kernel) -> Result<Kernel> {
        self.0.zip_with(&other.0, |a, b| a - b).map(Kernel)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data().iter().all(|z| z.im == 0.0)
    }

    pub(crate) fn require_real(&self) -> Result<()> {
        match self.data().iter().position(|z| z.im != 0.0) {
            Some(index) => Err(Error::NotReal {
                index,
                imag: self.data()[index].im,
            }),
            None => Ok(()),
        }
    }

    /// Per-axis second moments `sum_x Re k(x) * x_axis^2`, with offsets
    /// taken in `(-e/2, e/2]`.
    pub fn second_moments(&self) -> Vec<f64> {
        let shape = self.shape();
        let mut m = vec![0.0; shape.ndim()];
        for (flat, z) in self.data().iter().enumerate() {
            for (acc, x) in m.iter_mut().zip(shape.centered(flat)) {
                *acc += z.re * (x * x) as f64;
            }
        }
        m
    }

    /// Sum of all entries.
    pub fn mass(&self) -> Complex64 {
        self.data().iter().sum()
    }
}

/// Circular translate: `out[k] = k_in[k - shift]`.
pub fn translate(k: &Kernel, shift: &[isize]) -> Kernel {
    let shape = k.shape().clone();
    let mut out = ComplexField::zeros(shape.clone());
    let neg: Vec<isize> = shift.iter().map(|s| -s).collect();
    for flat in 0..shape.len() {
        let idx: Vec<isize> = shape.unravel(flat).into_iter().map(|i| i as isize).collect();
        let src: Vec<isize> = idx.iter().zip(&neg).map(|(i, s)| i + s).collect();
        out.data_mut()[flat] = k.at_offset(&src);
    }
    Kernel(out)
}

/// Central reflection `j -> -j`.
pub fn flip(k: &Kernel) -> Kernel {
    let shape = k.shape().clone();
    let data = (0..shape.len()).map(|j| k.data()[shape.negate(j)]).collect();
    Kernel(ComplexField::from_vec(shape, data).expect("flip preserves finiteness"))
}

/// Complex conjugate of the reflection; lifts to the conjugate transpose.
pub fn conj_flip(k: &Kernel) -> Kernel {
    Kernel(flip(k).conj())
}

/// `max |K + conj_flip(K)| <= tol`.
pub fn is_anti_hermitian(k: &Kernel, tol: f64) -> bool {
    anti_hermitian_defect(k) <= tol
}

/// `max |K + conj_flip(K)|`.
pub fn anti_hermitian_defect(k: &Kernel) -> f64 {
    let shape = k.shape();
    (0..shape.len())
        .map(|j| (k.data()[j] + k.data()[shape.negate(j)].conj()).norm())
        .fold(0.0, f64::max)
}

/// `max |K - conj_flip(K)|`.
pub fn hermitian_defect(k: &Kernel) -> f64 {
    let shape = k.shape();
    (0..shape.len())
        .map(|j| (k.data()[j] - k.data()[shape.negate(j)].conj()).norm())
        .fold(0.0, f64::max)
}

/// `max |K - flip(K)|`.
pub fn symmetry_defect(k: &Kernel) -> f64 {
    let shape = k.shape();
    (0..shape.len())
        .map(|j| (k.data()[j] - k.data()[shape.negate(j)]).norm())
        .fold(0.0, f64::max)
}

/// `max |K + flip(K)|`.
pub fn antisymmetry_defect(k: &Kernel) -> f64 {
    let shape = k.shape();
    (0..shape.len())
        .map(|j| (k.data()[j] + k.data()[shape.negate(j)]).norm())
        .fold(0.0, f64::max)
}

/// Which symmetry classes a kernel belongs to, at a tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symmetry {
    pub real: bool,
    pub symmetric: bool,
    pub antisymmetric: bool,
    pub hermitian: bool,
    pub anti_hermitian: bool,
}

pub fn classify(k: &Kernel, tol: f64) -> Symmetry {
    Symmetry {
        real: k.max_imag_abs() <= tol,
        symmetric: symmetry_defect(k) <= tol,
        antisymmetric: antisymmetry_defect(k) <= tol,
        hermitian: hermitian_defect(k) <= tol,
        anti_hermitian: anti_hermitian_defect(k) <= tol,
    }
}

impl std::fmt::Display for Symmetry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut names = Vec::new();
        for (on, name) in [
            (self.real, "real"),
            (self.symmetric, "symmetric"),
            (self.antisymmetric, "antisymmetric"),
            (self.hermitian, "hermitian"),
            (self.anti_hermitian, "anti-hermitian"),
        ] {
            if on {
                names.push(name);
            }
        }
        if names.is_empty() {
            f.write_str("general")
        } else {
            f.write_str(&names.join(", "))
        }
    }
}

/// `(K + flip K) / 2`.
pub fn symmetric_part(k: &Kernel) -> Kernel {
    let f = flip(k);
    Kernel(k.zip_with(&f, |a, b| (a + b) * 0.5).expect("same shape"))
}

/// `(K - flip K) / 2`.
pub fn antisymmetric_part(k: &Kernel) -> Kernel {
    let f = flip(k);
    Kernel(k.zip_with(&f, |a, b| (a - b) * 0.5).expect("same shape"))
}

/// Maps a real kernel `U` to `(U - U^T)/2 + i (U + U^T)/2`, which is
/// anti-Hermitian. Every anti-Hermitian kernel arises this way exactly once.
pub fn anti_hermitian_from_real(u: &Kernel) -> Result<Kernel> {
    u.require_real()?;
    let shape = u.shape().clone();
    let data = (0..shape.len())
        .map(|j| {
            let a = u.data()[j].re;
            let b = u.data()[shape.negate(j)].re;
            Complex64::new((a - b) * 0.5, (a + b) * 0.5)
        })
        .collect();
    ComplexField::from_vec(shape, data).map(Kernel)
}

/// Inverse of [`anti_hermitian_from_real`]: real part (antisymmetric) plus
/// imaginary part (symmetric).
pub fn real_from_anti_hermitian(k: &Kernel) -> Kernel {
    Kernel(k.map(|z| Complex64::new(z.re + z.im, 0.0)))
}

/// Compact list of nonzero taps at signed offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCore {
    entries: Vec<(Vec<isize>, Complex64)>,
}

impl KernelCore {
    pub fn new(entries: Vec<(Vec<isize>, Complex64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let ndim = entries.first().map(|(o, _)| o.len());
        for (offset, value) in &entries {
            if Some(offset.len()) != ndim || offset.is_empty() {
                return Err(Error::Format(format!(
                    "offset {offset:?} has inconsistent dimensionality"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Format(format!("non-finite value at offset {offset:?}")));
            }
            if !seen.insert(offset.clone()) {
                return Err(Error::DuplicateOffset(offset.clone()));
            }
        }
        Ok(Self { entries })
    }

    /// Real-valued taps, convenient for stencils.
    pub fn from_real(entries: &[(&[isize], f64)]) -> Result<Self> {
        Self::new(
            entries
                .iter()
                .map(|(o, v)| (o.to_vec(), Complex64::new(*v, 0.0)))
                .collect(),
        )
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(Vec<isize>, Complex64)] {
        &self.entries
    }

    pub fn ndim(&self) -> Option<usize> {
        self.entries.first().map(|(o, _)| o.len())
    }

    /// Nonzero entries of a full kernel, offsets in `(-e/2, e/2]`.
    pub fn from_kernel(k: &Kernel, tol: f64) -> Self {
        let shape = k.shape();
        let entries = k
            .data()
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > tol)
            .map(|(flat, &z)| (shape.centered(flat), z))
            .collect();
        Self { entries }
    }

    /// Parses the text format: one `i,j,...: re im` entry per line,
    /// `#` starts a comment. The imaginary part may be omitted.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Format(format!("line {}: {msg}", n + 1));
            let (lhs, rhs) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `offsets: re im`, got {line:?}")))?;
            let offset = lhs
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<isize>()
                        .map_err(|_| bad(format!("bad offset component {:?}", p.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            let nums = rhs
                .split_whitespace()
                .map(|p| p.parse::<f64>().map_err(|_| bad(format!("bad number {p:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let value = match nums.as_slice() {
                [re] => Complex64::new(*re, 0.0),
                [re, im] => Complex64::new(*re, *im),
                _ => return Err(bad(format!("expected 1 or 2 numbers, got {}", nums.len()))),
            };
            entries.push((offset, value));
        }
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (offset, v) in &self.entries {
            let o: Vec<String> = offset.iter().map(|x| x.to_string()).collect();
            writeln!(s, "{}: {} {}", o.join(","), v.re, v.im).unwrap();
        }
        s
    }
}

/// Places a core on a full grid; offsets wrap modulo the extents.
pub fn embed(core: &KernelCore, shape: &GridShape) -> Result<Kernel> {
    let mut field = ComplexField::zeros(shape.clone());
    for (offset, value) in core.entries() {
        if offset.len() != shape.ndim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}-dimensional offsets", shape.ndim()),
                found: format!("offset {offset:?}"),
            });
        }
        for (axis, (&o, &e)) in offset.iter().zip(shape.dims()).enumerate() {
            if 2 * o.unsigned_abs() >= e {
                return Err(Error::OffsetOutOfRange {
                    axis,
                    offset: o,
                    extent: e,
                });
            }
        }
        field.set_offset(offset, *value);
    }
    Ok(Kernel(field))
}

/// Loads a kernel from a `CFLD` file (detected by its magic) or a core text
/// file. A core needs `shape`; a `CFLD` kernel must match it when given.
pub fn load_kernel_file(path: &Path, shape: Option<&GridShape>) -> Result<Kernel> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(cfld::MAGIC) {
        let field = cfld::read(&mut bytes.as_slice())?;
        if let Some(s) = shape {
            if field.shape() != s {
                return Err(Error::ShapeMismatch {
                    expected: s.to_string(),
                    found: field.shape().to_string(),
                });
            }
        }
        return Ok(Kernel(field));
    }
    let text =
        String::from_utf8(bytes).map_err(|_| Error::Format(format!("{} is neither CFLD nor text", path.display())))?;
    let core = KernelCore::parse(&text)?;
    let shape =
        shape.ok_or_else(|| Error::InvalidArgument(format!("{}: a kernel core needs a grid shape", path.display())))?;
    embed(&core, shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shape(d: &[usize]) -> GridShape {
        GridShape::new(d.to_vec()).unwrap()
    }

    fn laplacian(s: &GridShape) -> Kernel {
        let core = KernelCore::from_real(&[
            (&[0, 0], -4.0),
            (&[1, 0], 1.0),
            (&[-1, 0], 1.0),
            (&[0, 1], 1.0),
            (&[0, -1], 1.0),
        ])
        .unwrap();
        embed(&core, s).unwrap()
    }

    fn random_kernel(s: &GridShape, seed: u64, complex: bool) -> Kernel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Kernel::new(ComplexField::from_fn(s.clone(), |_| {
            let re = rng.random_range(-1.0..1.0);
            let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
            c(re, im)
        }))
    }

    #[test]
    fn embed_laplacian_8x8() {
        let k = laplacian(&shape(&[8, 8]));
        assert_eq!(k.get(&[0, 0]), c(-4.0, 0.0));
        for idx in [[1, 0], [7, 0], [0, 1], [0, 7]] {
            assert_eq!(k.get(&idx), c(1.0, 0.0));
        }
        let nonzero = k.data().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 5);
    }

    #[test]
    fn embed_empty_and_derivative_stencil() {
        let k = embed(&KernelCore::empty(), &shape(&[3, 4])).unwrap();
        assert!(k.data().iter().all(|z| *z == c(0.0, 0.0)));

        let core = KernelCore::from_real(&[(&[-1], -0.5), (&[1], 0.5)]).unwrap();
        let k = embed(&core, &shape(&[8])).unwrap();
        assert_eq!(k.data()[7], c(-0.5, 0.0));
        assert_eq!(k.data()[1], c(0.5, 0.0));
        assert_eq!(k.data()[0], c(0.0, 0.0));
    }

    #[test]
    fn embed_rejects_oversized_offsets() {
        let core = KernelCore::from_real(&[(&[0, 2], 1.0)]).unwrap();
        match embed(&core, &shape(&[8, 4])) {
            Err(Error::OffsetOutOfRange { axis, .. }) => assert_eq!(axis, 1),
            other => panic!("{other:?}"),
        }
        let core = KernelCore::from_real(&[(&[1], 1.0)]).unwrap();
        assert!(embed(&core, &shape(&[2, 2])).is_err());
    }

    #[test]
    fn core_rejects_duplicates() {
        let err = KernelCore::from_real(&[(&[1], 1.0), (&[1], 2.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateOffset(_)));
    }

    #[test]
    fn flip_examples() {
        let s = shape(&[5]);
        let core = KernelCore::new(vec![
            (vec![-1], c(3.0, 0.0)),
            (vec![0], c(1.0, 0.0)),
            (vec![1], c(2.0, 0.0)),
        ])
        .unwrap();
        let f = flip(&embed(&core, &s).unwrap());
        assert_eq!(f.at_offset(&[-1]), c(2.0, 0.0));
        assert_eq!(f.at_offset(&[0]), c(1.0, 0.0));
        assert_eq!(f.at_offset(&[1]), c(3.0, 0.0));

        let lap = laplacian(&shape(&[6, 6]));
        assert_eq!(flip(&lap), lap);

        let r = random_kernel(&shape(&[4, 5]), 1, true);
        assert_eq!(flip(&flip(&r)), r);
        assert_eq!(conj_flip(&conj_flip(&r)), r);
    }

    #[test]
    fn conj_flip_examples() {
        let lap = laplacian(&shape(&[6, 6]));
        assert_eq!(conj_flip(&lap), lap);
        let s = shape(&[4]);
        let id = Kernel::delta(s.clone()).scale(c(0.0, 1.0));
        assert_eq!(conj_flip(&id), Kernel::delta(s).scale(c(0.0, -1.0)));
    }

    #[test]
    fn anti_hermitian_predicate() {
        let lap = laplacian(&shape(&[6, 6]));
        assert!(is_anti_hermitian(&lap.scale(c(0.0, 1.0)), 0.0));
        assert!(!is_anti_hermitian(&lap, SYMMETRY_TOL));
        let core = KernelCore::from_real(&[(&[-1], -0.5), (&[1], 0.5)]).unwrap();
        assert!(is_anti_hermitian(&embed(&core, &shape(&[8])).unwrap(), 0.0));
    }

    #[test]
    fn bijection_examples() {
        let s = shape(&[6]);
        let k = anti_hermitian_from_real(&Kernel::delta(s.clone())).unwrap();
        assert_eq!(k, Kernel::delta(s.clone()).scale(c(0.0, 1.0)));

        let u = Kernel::delta_at(s.clone(), &[1]);
        let k = anti_hermitian_from_real(&u).unwrap();
        assert_eq!(k.at_offset(&[1]), c(0.5, 0.5));
        assert_eq!(k.at_offset(&[-1]), c(-0.5, 0.5));
        assert_eq!(k.data().iter().filter(|z| z.norm() > 0.0).count(), 2);

        assert!(matches!(
            anti_hermitian_from_real(&Kernel::delta(s).scale(c(0.0, 1.0))),
            Err(Error::NotReal { .. })
        ));
    }

    #[test]
    fn bijection_round_trip_16() {
        for seed in 0..20 {
            let u = random_kernel(&shape(&[16]), seed, false);
            let k = anti_hermitian_from_real(&u).unwrap();
            assert!(is_anti_hermitian(&k, 0.0));
            let back = real_from_anti_hermitian(&k);
            // (a-b)/2 + (a+b)/2 can differ from a in the last bit
            for (x, y) in back.data().iter().zip(u.data()) {
                assert!((x.re - y.re).abs() <= f64::EPSILON * y.re.abs().max(1.0));
                assert_eq!(x.im, 0.0);
            }
        }
    }

    #[test]
    fn nyquist_entry_of_anti_hermitian_kernel_is_imaginary() {
        let u = random_kernel(&shape(&[8]), 5, false);
        let k = anti_hermitian_from_real(&u).unwrap();
        assert_eq!(k.data()[4].re, 0.0);
        let mut broken = k.clone();
        broken.field_mut().data_mut()[4].re = 0.1;
        assert!(!is_anti_hermitian(&broken, 1e-3));
    }

    #[test]
    fn symmetric_parts() {
        let lap = laplacian(&shape(&[5, 5]));
        assert_eq!(symmetric_part(&lap), lap);
        assert!(antisymmetric_part(&lap).max_abs() == 0.0);

        let core = KernelCore::from_real(&[(&[-1], -0.5), (&[1], 0.5)]).unwrap();
        let d = embed(&core, &shape(&[8])).unwrap();
        assert_eq!(symmetric_part(&d).max_abs(), 0.0);
        assert_eq!(antisymmetric_part(&d), d);
    }

    #[test]
    fn translate_moves_delta() {
        let s = shape(&[8, 4]);
        let t = translate(&Kernel::delta(s.clone()), &[2, -1]);
        assert_eq!(t, Kernel::delta_at(s, &[2, -1]));
    }

    #[test]
    fn core_text_round_trip() {
        let text = "# laplacian\n0,0: -4 0\n1,0: 1 0\n-1,0: 1\n0,1: 1 0 # right\n0,-1: 1 0\n";
        let core = KernelCore::parse(text).unwrap();
        assert_eq!(core.entries().len(), 5);
        assert_eq!(KernelCore::parse(&core.to_text()).unwrap(), core);

        let err = KernelCore::parse("0: 1 2 3").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        let err = KernelCore::parse("0: 1\n\nx: 2").unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn second_moments_of_laplacian() {
        let m = laplacian(&shape(&[8, 8])).second_moments();
        assert_eq!(m, vec![2.0, 2.0]);
    }
}
