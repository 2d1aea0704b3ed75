//! Dense ground truth for small grids.
//!
//! [`lift`] materializes the `N x N` matrix of a convolution acting on the
//! flattened layer (row-major flatten, the same as field storage), so that
//! `lift(K) * flatten(f) = flatten(K ⊛ f)`. On a torus the matrix is
//! block-circulant. A dense exponential by scaling and squaring then gives an
//! independent route to every fast-path claim.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::spectral::{compose, conv_exp, BipartiteKernelSet};

/// Default cap on the matrix dimension of lifted operators.
pub const DEFAULT_ORACLE_CAP: usize = 4096;

const TAYLOR_ORDER: usize = 16;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl LiftedMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![Complex64::default(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries", n * n),
                found: format!("{}", entries.len()),
            });
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.entries[row * self.n + col] = v;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul size mismatch");
        let n = self.n;
        let mut out = vec![Complex64::default(); n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex64::default() {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(&other.entries[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        Self { n, entries: out }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j];
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A^H A - I|`; zero for unitary matrices.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.n))
    }
}

/// Dense matrix of `f -> K ⊛ f` on the flattened layer.
pub fn lift(k: &Kernel) -> Result<LiftedMatrix> {
    lift_with_cap(k, DEFAULT_ORACLE_CAP)
}

pub fn lift_with_cap(k: &Kernel, cap: usize) -> Result<LiftedMatrix> {
    let shape = k.shape();
    let n = shape.len();
    if n > cap {
        return Err(Error::OracleCap { size: n, cap });
    }
    let mut m = LiftedMatrix::zeros(n);
    for r in 0..n {
        let ri = shape.unravel(r);
        for c in 0..n {
            let ci = shape.unravel(c);
            let off: Vec<isize> = ri.iter().zip(&ci).map(|(&a, &b)| a as isize - b as isize).collect();
            m.entries[r * n + c] = k.at_offset(&off);
        }
    }
    Ok(m)
}

/// `2N x 2N` matrix `[[xx, xp], [px, pp]]` acting on `(flatten X, flatten P)`.
pub fn lift_bipartite(b: &BipartiteKernelSet, cap: usize) -> Result<LiftedMatrix> {
    let blocks = [
        lift_with_cap(&b.xx, cap)?,
        lift_with_cap(&b.xp, cap)?,
        lift_with_cap(&b.px, cap)?,
        lift_with_cap(&b.pp, cap)?,
    ];
    Ok(block2(&blocks))
}

/// Assembles `[[a, b], [c, d]]`.
pub fn block2(blocks: &[LiftedMatrix; 4]) -> LiftedMatrix {
    let n = blocks[0].n;
    let mut m = LiftedMatrix::zeros(2 * n);
    for (q, blk) in blocks.iter().enumerate() {
        let (r0, c0) = ((q / 2) * n, (q % 2) * n);
        for i in 0..n {
            for j in 0..n {
                m.set(r0 + i, c0 + j, blk.get(i, j));
            }
        }
    }
    m
}

/// `exp(t M)` by scaling and squaring with a degree-16 Taylor polynomial.
pub fn dense_expm(m: &LiftedMatrix, t: f64) -> Result<LiftedMatrix> {
    let n = m.n;
    let a = m.scale(Complex64::new(t, 0.0));
    let norm = a.norm_1();
    if !norm.is_finite() {
        return Err(Error::NonFinite {
            index: 0,
            context: "dense_expm input",
        });
    }
    let squarings = norm.max(1.0).log2().ceil() as i32;
    let b = a.scale(Complex64::new(0.5f64.powi(squarings), 0.0));

    // Horner: I + B(I + B/2(I + B/3(... (I + B/16))))
    let id = LiftedMatrix::identity(n);
    let mut e = id.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        e = id.add(&b.matmul(&e).scale(Complex64::new(1.0 / k as f64, 0.0)));
    }
    for _ in 0..squarings {
        e = e.matmul(&e);
    }
    if let Some(index) = e.entries.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFinite {
            index,
            context: "dense_expm result",
        });
    }
    Ok(e)
}

/// Outcome of one oracle or invariant check, one JSON line each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub n: usize,
    pub t: Option<f64>,
    pub max_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, n: usize, t: Option<f64>, max_err: f64, tol: f64) -> Self {
        Self {
            check: check.into(),
            n,
            t,
            max_err,
            tol,
            pass: max_err.is_finite() && max_err <= tol,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let t = self.t.map(|t| format!(" t={t}")).unwrap_or_default();
        format!(
            "[{}] {} (n={}{}) max_err={:.3e} tol={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.n,
            t,
            self.max_err,
            self.tol
        )
    }
}

/// Compares `lift(conv_exp(K, t))` with `dense_expm(lift(K), t)`.
pub fn check_exp_equivalence(k: &Kernel, t: f64, tol: f64) -> CheckReport {
    check_exp_equivalence_with_cap(k, t, tol, DEFAULT_ORACLE_CAP)
}

pub fn check_exp_equivalence_with_cap(k: &Kernel, t: f64, tol: f64, cap: usize) -> CheckReport {
    let n = k.shape().len();
    let err = (|| -> Result<f64> {
        let fast = lift_with_cap(&conv_exp(k, t)?, cap)?;
        let dense = dense_expm(&lift_with_cap(k, cap)?, t)?;
        Ok(fast.max_abs_diff(&dense))
    })()
    .unwrap_or(f64::INFINITY);
    CheckReport::new("exp_equivalence", n, Some(t), err, tol)
}

/// Verifies `lift(K)^2 = lift(K ⊛ K)`: squaring the matrix convolves its
/// rows with themselves.
pub fn row_convolution_square_check(k: &Kernel, tol: f64) -> CheckReport {
    let n = k.shape().len();
    let err = (|| -> Result<f64> {
        let m = lift(k)?;
        let kk = lift(&compose(k, k)?)?;
        Ok(m.matmul(&m).max_abs_diff(&kk))
    })()
    .unwrap_or(f64::INFINITY);
    CheckReport::new("row_convolution_square", n, None, err, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ComplexField, GridShape};
    use crate::kernel::{anti_hermitian_from_real, conj_flip, embed, KernelCore};
    use crate::spectral::conv;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shape(d: &[usize]) -> GridShape {
        GridShape::new(d.to_vec()).unwrap()
    }

    fn random_kernel(s: &GridShape, seed: u64, amp: f64, complex: bool) -> Kernel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Kernel::new(ComplexField::from_fn(s.clone(), |_| {
            let re = rng.random_range(-amp..amp);
            let im = if complex { rng.random_range(-amp..amp) } else { 0.0 };
            c(re, im)
        }))
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

    #[test]
    fn lift_of_delta_is_identity() {
        let m = lift(&Kernel::delta(shape(&[3, 4]))).unwrap();
        assert_eq!(m, LiftedMatrix::identity(12));
    }

    #[test]
    fn lift_three_tap_circulant() {
        // conv convention: (K ⊛ f)[r] = sum_j K[j] f[r - j], so the tap at +1
        // multiplies f[r - 1] and sits on the subdiagonal.
        let (a, b, cc) = (c(2.0, 0.0), c(3.0, 0.0), c(5.0, 0.0));
        let core = KernelCore::new(vec![(vec![0], a), (vec![1], b), (vec![-1], cc)]).unwrap();
        let m = lift(&embed(&core, &shape(&[5])).unwrap()).unwrap();
        for r in 0..5 {
            assert_eq!(m.get(r, r), a);
            assert_eq!(m.get(r, (r + 4) % 5), b);
            assert_eq!(m.get(r, (r + 1) % 5), cc);
        }
        let nonzero = m.entries().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 15);
    }

    #[test]
    fn lift_laplacian_rows() {
        let m = lift(&laplacian(&shape(&[4, 4]))).unwrap();
        for r in 0..16 {
            let row = m.row(r);
            assert_eq!(row.iter().sum::<Complex64>(), c(0.0, 0.0));
            assert_eq!(row.iter().filter(|z| z.norm() > 0.0).count(), 5);
        }
    }

    #[test]
    fn lift_acts_as_convolution() {
        let s = shape(&[3, 5]);
        let k = random_kernel(&s, 1, 1.0, true);
        let f = random_kernel(&s, 2, 1.0, true).into_field();
        let via_matrix = lift(&k).unwrap().matvec(f.data());
        let via_fft = conv(&k, &f).unwrap();
        for (a, b) in via_matrix.iter().zip(via_fft.data()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn lift_respects_cap() {
        let k = Kernel::delta(shape(&[10, 10]));
        assert!(matches!(
            lift_with_cap(&k, 64),
            Err(Error::OracleCap { size: 100, cap: 64 })
        ));
    }

    #[test]
    fn conj_flip_lifts_to_adjoint() {
        let k = random_kernel(&shape(&[5]), 3, 1.0, true);
        let lhs = lift(&conj_flip(&k)).unwrap();
        let rhs = lift(&k).unwrap().adjoint();
        assert!(lhs.max_abs_diff(&rhs) <= 1e-14);
    }

    #[test]
    fn expm_rotation() {
        for t in [0.3, 1.0, 2.5, 7.0] {
            let m = LiftedMatrix::from_rows(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
            let e = dense_expm(&m, t).unwrap();
            let want = LiftedMatrix::from_rows(
                2,
                vec![c(t.cos(), 0.0), c(t.sin(), 0.0), c(-t.sin(), 0.0), c(t.cos(), 0.0)],
            )
            .unwrap();
            assert!(e.max_abs_diff(&want) < 1e-14, "t={t}");
        }
    }

    #[test]
    fn expm_zero_and_diagonal() {
        let e = dense_expm(&LiftedMatrix::zeros(4), 3.0).unwrap();
        assert_eq!(e, LiftedMatrix::identity(4));

        let lambdas = [c(-2.0, 0.0), c(0.5, 1.0), c(3.0, -0.2)];
        let mut d = LiftedMatrix::zeros(3);
        for (i, &l) in lambdas.iter().enumerate() {
            d.set(i, i, l);
        }
        let e = dense_expm(&d, 1.0).unwrap();
        for (i, &l) in lambdas.iter().enumerate() {
            assert!((e.get(i, i) - l.exp()).norm() <= 1e-13 * l.exp().norm());
        }
    }

    #[test]
    fn expm_large_norm_anti_hermitian_stays_unitary() {
        let m = LiftedMatrix::from_rows(2, vec![c(0.0, 0.0), c(1e4, 0.0), c(-1e4, 0.0), c(0.0, 0.0)]).unwrap();
        let e = dense_expm(&m, 1.0).unwrap();
        assert!(e.unitarity_defect() < 1e-10);
        assert!((e.get(0, 0).re - 1e4f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn exp_equivalence_examples() {
        let r = check_exp_equivalence(&Kernel::zeros(shape(&[4, 3])), 2.0, 1e-15);
        assert!(r.pass, "{}", r.to_text());

        let r = check_exp_equivalence(&laplacian(&shape(&[6, 6])), 1.0, 1e-9);
        assert!(r.pass, "{}", r.to_text());

        let u = random_kernel(&shape(&[16]), 4, 1.0, false);
        let k = anti_hermitian_from_real(&u).unwrap();
        let r = check_exp_equivalence(&k, 2.0, 1e-9);
        assert!(r.pass, "{}", r.to_text());
        let dense = dense_expm(&lift(&k).unwrap(), 2.0).unwrap();
        assert!(dense.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn row_convolution_examples() {
        assert!(row_convolution_square_check(&Kernel::delta(shape(&[6])), 1e-15).pass);
        let r = row_convolution_square_check(&random_kernel(&shape(&[9]), 5, 1.0, true), 1e-12);
        assert!(r.pass, "{}", r.to_text());
        let r = row_convolution_square_check(&laplacian(&shape(&[5, 5])), 1e-12);
        assert!(r.pass, "{}", r.to_text());
    }

    #[test]
    fn report_json_line() {
        let r = CheckReport::new("x", 4, Some(1.0), 1e-13, 1e-12);
        let line = r.to_json_line();
        assert!(line.contains("\"check\":\"x\"") && line.contains("\"pass\":true"));
        let back: CheckReport = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
        assert!(!CheckReport::new("y", 1, None, f64::NAN, 1.0).pass);
    }
}
