//! Invariant catalog behind `convexp check`.
//!
//! Every check is deterministic (fixed seeds) and reports a [`CheckReport`].
//! Checks that need a dense lift are skipped when the grid exceeds the cap.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::ca::{self, Embedding, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::field::{fft, ifft, ComplexField, GridShape};
use crate::kernel::{
    anti_hermitian_defect, anti_hermitian_from_real, flip, real_from_anti_hermitian, symmetric_part, translate, Kernel,
};
use crate::lift::{check_exp_equivalence_with_cap, lift_bipartite, row_convolution_square_check, CheckReport};
use crate::rnn::{
    gradient_norm_trace, run, Activation, BipartiteStep, InputMode, Model, NetworkState, Record, Recurrence,
    StepOperator, UnitaryStepOperator,
};
use crate::spectral::{
    bipartite_exp, compose, conv_cos, conv_exp, conv_sin, deriv_exp_kernel, deriv_trig_kernels, SpectralKernel,
};
use crate::stencils::{laplacian, random_anti_hermitian, random_real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Field,
    Kernel,
    Spectral,
    Lift,
    Rnn,
    Ca,
    All,
}

impl Scope {
    pub const MODULES: [Scope; 6] = [
        Scope::Field,
        Scope::Kernel,
        Scope::Spectral,
        Scope::Lift,
        Scope::Rnn,
        Scope::Ca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scope::Field => "field",
            Scope::Kernel => "kernel",
            Scope::Spectral => "spectral",
            Scope::Lift => "lift",
            Scope::Rnn => "rnn",
            Scope::Ca => "ca",
            Scope::All => "all",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "field" | "field-core" => Scope::Field,
            "kernel" | "kernel-algebra" => Scope::Kernel,
            "spectral" | "spectral-calculus" => Scope::Spectral,
            "lift" | "lift-oracle" => Scope::Lift,
            "rnn" | "recurrent-nets" => Scope::Rnn,
            "ca" | "ca-embedding" => Scope::Ca,
            "all" => Scope::All,
            other => return Err(Error::InvalidArgument(format!("unknown check scope {other:?}"))),
        })
    }
}

/// Runs every check in `scope`; lifted grids are limited to `cap` cells.
pub fn run_checks(scope: Scope, cap: usize) -> Vec<CheckReport> {
    match scope {
        Scope::All => Scope::MODULES.iter().flat_map(|&s| run_checks(s, cap)).collect(),
        Scope::Field => field_checks(),
        Scope::Kernel => kernel_checks(),
        Scope::Spectral => spectral_checks(),
        Scope::Lift => lift_checks(cap),
        Scope::Rnn => rnn_checks(cap),
        Scope::Ca => ca_checks(),
    }
}

fn shape(d: &[usize]) -> GridShape {
    GridShape::new(d.to_vec()).expect("valid")
}

/// Wraps a fallible measurement; errors become failing reports.
fn measure(name: &str, n: usize, t: Option<f64>, tol: f64, f: impl FnOnce() -> Result<f64>) -> CheckReport {
    CheckReport::new(name, n, t, f().unwrap_or(f64::INFINITY), tol)
}

/// Largest amount by which any entry's real part falls below zero.
pub fn positivity_defect(k: &Kernel) -> f64 {
    k.data().iter().map(|z| (-z.re).max(0.0)).fold(0.0, f64::max)
}

/// Largest increase met when stepping one cell away from the origin along
/// any axis (offsets taken in `(-e/2, e/2]`). Zero for kernels that are
/// non-increasing along every axis-parallel path outward from the origin.
pub fn unimodality_defect(k: &Kernel) -> f64 {
    let shape = k.shape();
    let mut worst: f64 = 0.0;
    for flat in 0..shape.len() {
        let off = shape.centered(flat);
        for axis in 0..off.len() {
            if off[axis] == 0 {
                continue;
            }
            let mut inner = off.clone();
            inner[axis] -= off[axis].signum();
            worst = worst.max(k.data()[flat].re - k.at_offset(&inner).re);
        }
    }
    worst
}

fn direct_dft(f: &ComplexField) -> ComplexField {
    let s = f.shape();
    ComplexField::from_fn(s.clone(), |k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat, &v) in f.data().iter().enumerate() {
            let j = s.unravel(flat);
            let phase: f64 = j
                .iter()
                .zip(k)
                .zip(s.dims())
                .map(|((&j, &k), &e)| (j * k % e) as f64 / e as f64)
                .sum();
            acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
        }
        acc
    })
}

fn field_checks() -> Vec<CheckReport> {
    let mut out = Vec::new();
    for d in [vec![12], vec![6, 5], vec![3, 4, 5]] {
        let s = shape(&d);
        let f = random_anti_hermitian(&s, 11, 1.0).into_field();
        let n = s.len();
        out.push(measure("fft_matches_direct_dft", n, None, 1e-12, || {
            let want = direct_dft(&f);
            Ok(fft(&f).max_abs_diff(&want) / want.max_abs())
        }));
    }
    let s = shape(&[32, 24]);
    let f = random_anti_hermitian(&s, 12, 1.0).into_field();
    out.push(measure("fft_round_trip", s.len(), None, 1e-13, || {
        Ok(ifft(&fft(&f)).max_abs_diff(&f))
    }));
    out.push(measure("fft_parseval", s.len(), None, 1e-12, || {
        let lhs = f.norm_sqr();
        Ok((fft(&f).norm_sqr() / s.len() as f64 - lhs).abs() / lhs)
    }));
    out
}

fn kernel_checks() -> Vec<CheckReport> {
    let mut out = Vec::new();
    for d in [vec![9], vec![8], vec![6, 7], vec![16, 16]] {
        let s = shape(&d);
        let u = random_real(&s, 21, 1.0);
        out.push(measure("anti_hermitian_constructor", s.len(), None, 1e-14, || {
            Ok(anti_hermitian_defect(&anti_hermitian_from_real(&u)?))
        }));
        out.push(measure(
            "anti_hermitian_bijection_round_trip",
            s.len(),
            None,
            1e-15,
            || Ok(real_from_anti_hermitian(&anti_hermitian_from_real(&u)?).max_abs_diff(&u)),
        ));
    }
    let s = shape(&[10, 10]);
    let k = random_real(&s, 22, 1.0);
    out.push(measure("flip_involution", s.len(), None, 0.0, || {
        Ok(flip(&flip(&k)).max_abs_diff(&k))
    }));
    out.push(measure("laplacian_mass_zero", 64 * 64, None, 0.0, || {
        Ok(laplacian(&shape(&[64, 64]))?.mass().norm())
    }));
    out
}

fn spectral_checks() -> Vec<CheckReport> {
    let mut out = Vec::new();
    let s = shape(&[12, 10]);
    let n = s.len();
    let k = random_real(&s, 31, 0.5);
    let k2 = random_anti_hermitian(&s, 32, 0.5);
    let delta = Kernel::delta(s.clone());
    out.push(measure("exp_additive_in_t", n, Some(0.7), 1e-11, || {
        let lhs = conv_exp(&k, 0.7)?;
        let rhs = compose(&conv_exp(&k, 0.3)?, &conv_exp(&k, 0.4)?)?;
        Ok(lhs.max_abs_diff(&rhs))
    }));
    out.push(measure("exp_of_sum", n, Some(1.0), 1e-11, || {
        let lhs = conv_exp(&k.add(&k2)?, 1.0)?;
        let rhs = compose(&conv_exp(&k, 1.0)?, &conv_exp(&k2, 1.0)?)?;
        Ok(lhs.max_abs_diff(&rhs))
    }));
    out.push(measure("exp_inverse", n, Some(1.5), 1e-11, || {
        Ok(compose(&conv_exp(&k, 1.5)?, &conv_exp(&k, -1.5)?)?.max_abs_diff(&delta))
    }));
    out.push(measure("cos2_plus_sin2", n, Some(1.0), 1e-11, || {
        let c = conv_cos(&k, 1.0)?;
        let sn = conv_sin(&k, 1.0)?;
        Ok(compose(&c, &c)?.add(&compose(&sn, &sn)?)?.max_abs_diff(&delta))
    }));
    let ah = random_anti_hermitian(&shape(&[128, 128]), 33, 1.0);
    out.push(measure("unit_modulus_multipliers", 128 * 128, Some(1.0), 1e-12, || {
        Ok(SpectralKernel::new(&conv_exp(&ah, 1.0)?).unit_modulus_defect())
    }));
    let lap = laplacian(&shape(&[64, 64])).expect("2-D");
    for t in [1.0, 4.0, 9.0] {
        let heat = conv_exp(&lap, t);
        out.push(measure("heat_variance", 64 * 64, Some(t), 1e-6, || {
            let h = heat.as_ref().map_err(clone_err)?;
            Ok(h.second_moments()
                .iter()
                .map(|m| (m - 2.0 * t).abs())
                .fold(0.0, f64::max))
        }));
        out.push(measure("heat_positive_unimodal", 64 * 64, Some(t), 1e-14, || {
            let h = heat.as_ref().map_err(clone_err)?;
            Ok(positivity_defect(h).max(unimodality_defect(h)))
        }));
    }
    let s1 = shape(&[16]);
    let kr = random_real(&s1, 34, 0.5);
    out.push(measure("deriv_exp_finite_difference", 16, Some(1.0), 1e-6, || {
        fd_error(&kr, &[3], |k| conv_exp(k, 1.0), |k, a| deriv_exp_kernel(k, a, 1.0))
    }));
    out.push(measure("deriv_sin_finite_difference", 16, Some(1.0), 1e-6, || {
        fd_error(
            &kr,
            &[-2],
            |k| conv_sin(k, 1.0),
            |k, a| Ok(deriv_trig_kernels(k, a, 1.0)?.1),
        )
    }));
    out.push(measure("deriv_exp_is_translate", 16, Some(1.0), 1e-14, || {
        Ok(deriv_exp_kernel(&kr, &[5], 1.0)?.max_abs_diff(&translate(&conv_exp(&kr, 1.0)?, &[5])))
    }));
    out.push(measure("bipartite_symmetric_blocks", n, Some(1.0), 1e-13, || {
        let sym = symmetric_part(&k);
        let b = bipartite_exp(&sym, 1.0)?;
        let c = conv_cos(&sym, 1.0)?;
        let sn = conv_sin(&sym, 1.0)?;
        Ok(b.xx
            .max_abs_diff(&c)
            .max(b.pp.max_abs_diff(&c))
            .max(b.xp.max_abs_diff(&sn))
            .max(b.px.max_abs_diff(&sn.scale(-1.0))))
    }));
    out
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

/// Central difference in the coefficient at offset `a`, against the
/// analytic derivative kernel.
pub fn fd_error(
    k: &Kernel,
    a: &[isize],
    f: impl Fn(&Kernel) -> Result<Kernel>,
    df: impl Fn(&Kernel, &[isize]) -> Result<Kernel>,
) -> Result<f64> {
    let eps = 1e-6;
    let bump = Kernel::delta_at(k.shape().clone(), a).scale(eps);
    let plus = f(&k.add(&bump)?)?;
    let minus = f(&k.sub(&bump)?)?;
    let fd = plus.sub(&minus)?.scale(1.0 / (2.0 * eps));
    Ok(fd.max_abs_diff(df(k, a)?.field()))
}

fn lift_checks(cap: usize) -> Vec<CheckReport> {
    let mut out = Vec::new();
    let grids: [&[usize]; 4] = [&[8], &[12], &[36], &[6, 6]];
    for (i, d) in grids.iter().enumerate() {
        let s = shape(d);
        if s.len() > cap {
            continue;
        }
        let seed = 40 + i as u64;
        let kernels = [
            random_real(&s, seed, 0.5),
            random_anti_hermitian(&s, seed, 0.5),
            symmetric_part(&random_real(&s, seed + 100, 0.5)),
        ];
        for k in &kernels {
            for t in [0.1, 1.0, 2.0] {
                out.push(check_exp_equivalence_with_cap(k, t, 1e-8, cap));
            }
        }
        out.push(row_convolution_square_check(&kernels[0], 1e-12));
        for (name, k) in [
            ("bipartite_orthogonal", &kernels[0]),
            ("bipartite_orthogonal_symmetric", &kernels[2]),
        ] {
            out.push(measure(name, 2 * s.len(), Some(1.0), 1e-10, || {
                let m = lift_bipartite(&bipartite_exp(k, 1.0)?, cap)?;
                Ok(m.unitarity_defect())
            }));
        }
    }
    out
}

fn rnn_checks(cap: usize) -> Vec<CheckReport> {
    let mut out = Vec::new();
    let s = shape(&[16, 16]);
    let k = random_anti_hermitian(&s, 51, 1.0);
    let z0 = random_anti_hermitian(&s, 52, 1.0).into_field();
    out.push(measure("curnn_norm_conservation", s.len(), Some(1.0), 1e-8, || {
        let rec = Recurrence {
            model: Model::Unitary {
                op: UnitaryStepOperator::new(&k, 1.0)?.into_inner(),
                phi: Activation::Identity,
            },
            initial: NetworkState::unitary(z0.clone()),
            input: InputMode::Zero,
        };
        Ok(relative_drift(&run(&rec, 1000, Record::Norm)?.norms))
    }));
    let kr = random_real(&s, 53, 1.0);
    let x0 = random_real(&s, 54, 1.0).into_field();
    let p0 = random_real(&s, 55, 1.0).into_field();
    out.push(measure("cornn_norm_conservation", s.len(), Some(1.0), 1e-8, || {
        let rec = Recurrence {
            model: Model::Bipartite {
                step: BipartiteStep::new(bipartite_exp(&kr, 1.0)?)?,
                phi: Activation::Identity,
                psi: Activation::Identity,
            },
            initial: NetworkState::bipartite(x0.clone(), p0.clone())?,
            input: InputMode::Zero,
        };
        Ok(relative_drift(&run(&rec, 1000, Record::Norm)?.norms))
    }));
    out.push(measure("curnn_cornn_correspondence", s.len(), Some(1.0), 1e-10, || {
        curnn_cornn_correspondence(&symmetric_part(&kr), &x0, &p0, 1.0, 50)
    }));
    out.push(measure("curnn_invertible", s.len(), Some(1.0), 1e-10, || {
        let zero = ComplexField::zeros(s.clone());
        let id = Activation::Identity;
        let st = crate::rnn::UnitaryState { z: z0.clone(), step: 0 };
        let fwd = crate::rnn::curnn_step(&st, &StepOperator::new(&k, 1.0)?, &zero, &id)?;
        let back = crate::rnn::curnn_step(&fwd, &StepOperator::new(&k.scale(-1.0), 1.0)?, &zero, &id)?;
        Ok(back.z.max_abs_diff(&z0))
    }));
    let g = shape(&[6, 6]);
    if g.len() <= cap {
        let kg = random_anti_hermitian(&g, 56, 1.0);
        let zg = random_anti_hermitian(&g, 57, 1.0).into_field();
        out.push(measure("gradient_trace_unitary", g.len(), Some(1.0), 1e-6, || {
            let rec = Recurrence {
                model: Model::Unitary {
                    op: StepOperator::new(&kg, 1.0)?,
                    phi: Activation::Identity,
                },
                initial: NetworkState::unitary(zg.clone()),
                input: InputMode::Zero,
            };
            let trace = gradient_norm_trace(&rec, 30, cap)?;
            Ok(trace.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max))
        }));
        out.push(measure("gradient_trace_contractive", g.len(), Some(1.0), 0.01, || {
            let kc = kg.add(&Kernel::delta(g.clone()).scale(0.9f64.ln()))?;
            let rec = Recurrence {
                model: Model::Unitary {
                    op: StepOperator::new(&kc, 1.0)?,
                    phi: Activation::Identity,
                },
                initial: NetworkState::unitary(zg.clone()),
                input: InputMode::Zero,
            };
            let trace = gradient_norm_trace(&rec, 20, cap)?;
            Ok(trace
                .iter()
                .enumerate()
                .map(|(n, v)| (v / 0.9f64.powi(n as i32) - 1.0).abs())
                .fold(0.0, f64::max))
        }));
    }
    out
}

/// Largest `|‖z_n‖ - ‖z_0‖| / ‖z_0‖` along a norm trace.
pub fn relative_drift(norms: &[f64]) -> f64 {
    let n0 = norms[0];
    norms.iter().map(|n| ((n - n0) / n0).abs()).fold(0.0, f64::max)
}

/// Runs the complex recurrence with generator `-iK` from `z = x + i p` and
/// the bipartite one with `K` from `(x, p)`, both linear and undriven, and
/// returns the largest entrywise gap over `steps` steps.
pub fn curnn_cornn_correspondence(
    k: &Kernel,
    x0: &ComplexField,
    p0: &ComplexField,
    t: f64,
    steps: usize,
) -> Result<f64> {
    let z0 = x0.zip_with(p0, |x, p| Complex64::new(x.re, p.re))?;
    let id = Activation::Identity;
    let complex = Recurrence {
        model: Model::Unitary {
            op: StepOperator::new(&k.scale(Complex64::new(0.0, -1.0)), t)?,
            phi: id,
        },
        initial: NetworkState::unitary(z0),
        input: InputMode::Zero,
    };
    let real = Recurrence {
        model: Model::Bipartite {
            step: BipartiteStep::new(bipartite_exp(k, t)?)?,
            phi: id,
            psi: id,
        },
        initial: NetworkState::bipartite(x0.clone(), p0.clone())?,
        input: InputMode::Zero,
    };
    let a = run(&complex, steps, Record::Full)?;
    let b = run(&real, steps, Record::Full)?;
    let mut worst: f64 = 0.0;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        if let (NetworkState::Unitary(u), NetworkState::Bipartite(v)) = (sa, sb) {
            for ((z, x), p) in u.z.data().iter().zip(v.x.data()).zip(v.p.data()) {
                worst = worst.max((z.re - x.re).abs()).max((z.im - p.re).abs());
            }
        }
    }
    Ok(worst)
}

fn ca_checks() -> Vec<CheckReport> {
    let mut out = Vec::new();
    for (name, cfg) in [
        ("sigmoid", EmbeddingConfig::sigmoid()),
        ("table", EmbeddingConfig::table_map()),
    ] {
        out.push(measure(&format!("ca_embedding_exact_{name}"), 12, None, 0.0, || {
            let e = Embedding::new(&cfg)?;
            let mut wrong = 0;
            for row in 0..(1u32 << 12) {
                let cells: Vec<bool> = (0..12).map(|i| (row >> i) & 1 == 1).collect();
                if !ca::rounds_to(
                    &ca::ca_step_embedded(&ca::to_real(&cells), &e),
                    &ca::rule110_exact(&cells),
                ) {
                    wrong += 1;
                }
            }
            Ok(wrong as f64)
        }));
        out.push(measure(&format!("ca_noise_1e-3_{name}"), 200, None, 0.0, || {
            Ok(ca::stability_experiment(200, 500, 1e-3, 10, &cfg, 7)?.divergences as f64)
        }));
        out.push(measure(&format!("ca_superstable_{name}"), 64, None, 0.1, || {
            superstability_ratio(&cfg, 64, 200, 8)
        }));
    }
    out
}

/// Worst ratio `dist(step(Z + δ)) / dist(Z + δ)` over random boolean rows
/// `Z` and perturbations `|δ| ≤ a` with `a` in `[1e-3, 1e-2]`.
pub fn superstability_ratio(cfg: &EmbeddingConfig, len: usize, trials: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let e = Embedding::new(cfg)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = ca::random_row(len, &mut rng);
        let a = rng.random_range(1e-3..=1e-2);
        let x: Vec<f64> = ca::to_real(&z)
            .iter()
            .map(|v| v + a * rng.random_range(-1.0..=1.0))
            .collect();
        let before = ca::distance_from_boolean(&x);
        let after = ca::distance_from_boolean(&e.step(&x));
        worst = worst.max(after / before);
    }
    Ok(worst)
}
