//! Forward propagation of the state Jacobian, `d state_n / d state_0`.
//!
//! Each step contributes `Λ_i R`, where `R` is the lifted linear part and
//! `Λ_i` the activation Jacobian at the pre-activation of step `i`. States
//! are handled as real vectors: `(re, im)` interleaved per cell for the
//! complex recurrence, `[x; p]` stacked for the bipartite one.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InputStream, Model, NetworkState, Recurrence};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::lift::{lift_bipartite, lift_with_cap, LiftedMatrix};

pub const POWER_ITERATIONS: usize = 50;
pub const POWER_SEED: u64 = 0x5EED;

/// Dense real square matrix, row-major.
#[derive(Clone, Debug)]
struct Real {
    n: usize,
    a: Vec<f64>,
}

impl Real {
    fn identity(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        Self { n, a }
    }

    /// `a + ib` becomes `[[a, -b], [b, a]]` on each interleaved pair.
    fn from_complex(m: &LiftedMatrix) -> Self {
        let n = 2 * m.n();
        let mut a = vec![0.0; n * n];
        for r in 0..m.n() {
            for c in 0..m.n() {
                let z = m.get(r, c);
                a[(2 * r) * n + 2 * c] = z.re;
                a[(2 * r) * n + 2 * c + 1] = -z.im;
                a[(2 * r + 1) * n + 2 * c] = z.im;
                a[(2 * r + 1) * n + 2 * c + 1] = z.re;
            }
        }
        Self { n, a }
    }

    fn real_part(m: &LiftedMatrix) -> Self {
        Self {
            n: m.n(),
            a: m.entries().iter().map(|z| z.re).collect(),
        }
    }

    fn matmul(&self, other: &Real) -> Real {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == 0.0 {
                    continue;
                }
                let orow = &other.a[k * n..(k + 1) * n];
                for (o, &b) in row.iter_mut().zip(orow) {
                    *o += s * b;
                }
            }
        }
        Real { n, a: out }
    }

    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.a
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &s) in self.a.chunks_exact(self.n).zip(v) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * s;
            }
        }
        out
    }

    /// Largest singular value, power iteration on `AᵀA` from a fixed seed.
    fn spectral_norm(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
        let mut v: Vec<f64> = (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut v);
        for _ in 0..POWER_ITERATIONS {
            let mut w = self.matvec_t(&self.matvec(&v));
            if normalize(&mut w) == 0.0 {
                return 0.0;
            }
            v = w;
        }
        l2(&self.matvec(&v))
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = l2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Rows of `Λ` applied on the left: `out = diag-blocks(Λ) * m`.
fn apply_blocks(jac: &[[[f64; 2]; 2]], m: &Real) -> Real {
    let n = m.n;
    let mut out = vec![0.0; n * n];
    for (cell, j) in jac.iter().enumerate() {
        let (r0, r1) = (2 * cell, 2 * cell + 1);
        for c in 0..n {
            let (a, b) = (m.a[r0 * n + c], m.a[r1 * n + c]);
            out[r0 * n + c] = j[0][0] * a + j[0][1] * b;
            out[r1 * n + c] = j[1][0] * a + j[1][1] * b;
        }
    }
    Real { n, a: out }
}

fn apply_diag(d: &[f64], m: &Real) -> Real {
    let n = m.n;
    let mut a = m.a.clone();
    for (row, &s) in a.chunks_exact_mut(n).zip(d) {
        row.iter_mut().for_each(|x| *x *= s);
    }
    Real { n, a }
}

/// Spectral-norm estimates of the Jacobian product after each step.
/// Entry 0 is the identity (value 1); entry `i` covers steps `1..=i`.
/// The grid must lift under `cap`.
pub fn gradient_norm_trace(rec: &Recurrence, steps: usize, cap: usize) -> Result<Vec<f64>> {
    rec.validate()?;
    let n = rec.shape().len();
    if n > cap {
        return Err(Error::OracleCap { size: n, cap });
    }
    let r = match &rec.model {
        Model::Unitary { op, .. } => Real::from_complex(&lift_with_cap(&op.kernel(), cap)?),
        Model::Bipartite { step, .. } => Real::real_part(&lift_bipartite(step.blocks(), cap)?),
    };
    let mut inputs = InputStream::new(&rec.input, rec.shape(), rec.is_real());
    let mut prod = Real::identity(2 * n);
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(1.0);
    let mut state = rec.initial.clone();
    for i in 0..steps {
        let input = inputs.next_input();
        let rp = r.matmul(&prod);
        prod = match (&rec.model, &state) {
            (Model::Unitary { op, phi }, NetworkState::Unitary(s)) => {
                let pre = add(&op.apply(&s.z)?, &input)?;
                let jac: Vec<_> = pre.data().iter().map(|&z| phi.jacobian_complex(z)).collect();
                apply_blocks(&jac, &rp)
            }
            (Model::Bipartite { step, phi, psi }, NetworkState::Bipartite(s)) => {
                let (lx, lp) = step.apply(&s.x, &s.p)?;
                let prex = add(&lx, &input)?;
                let d: Vec<f64> = prex
                    .data()
                    .iter()
                    .map(|z| phi.derivative_real(z.re))
                    .chain(lp.data().iter().map(|z| psi.derivative_real(z.re)))
                    .collect();
                apply_diag(&d, &rp)
            }
            _ => unreachable!("validated"),
        };
        state = rec.step(&state, &input).map_err(|e| Error::AtStep {
            step: i + 1,
            source: Box::new(e),
        })?;
        trace.push(prod.spectral_norm());
    }
    Ok(trace)
}

fn add(a: &ComplexField, b: &ComplexField) -> Result<ComplexField> {
    a.zip_with(b, |x: Complex64, y| x + y)
}
