//! Multi-dimensional discrete Fourier transforms.
//!
//! Forward: `F[k] = sum_j f[j] exp(-2 pi i <j, k/e>)`, unnormalized.
//! Inverse: conjugate kernel with a `1/N` factor, so that
//! `fft(a ⊛ b) = fft(a) * fft(b)` holds without extra constants.
//!
//! The D-dimensional transform is a sequence of 1-D transforms, one axis at
//! a time. Non-contiguous axes are gathered in tiles of [`TILE`] lines so
//! reads stay cache-friendly on large grids.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::ComplexField;

const TILE: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Unnormalized forward transform.
pub fn fft(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    fft_in_place(&mut out);
    out
}

/// Inverse transform with `1/N` normalization.
pub fn ifft(f: &ComplexField) -> ComplexField {
    let mut out = f.clone();
    ifft_in_place(&mut out);
    out
}

pub fn fft_in_place(f: &mut ComplexField) {
    let dims = f.shape().dims().to_vec();
    transform(f.data_mut(), &dims, FftDirection::Forward);
}

pub fn ifft_in_place(f: &mut ComplexField) {
    let dims = f.shape().dims().to_vec();
    let data = f.data_mut();
    transform(data, &dims, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

fn transform(data: &mut [Complex64], dims: &[usize], direction: FftDirection) {
    for (axis, &extent) in dims.iter().enumerate() {
        if extent == 1 {
            continue;
        }
        let plan = plan(extent, direction);
        let stride: usize = dims[axis + 1..].iter().product();
        if stride == 1 {
            contiguous(data, extent, &plan);
        } else {
            strided(data, extent, stride, &plan);
        }
    }
}

#[cfg_attr(not(feature = "parallel"), allow(unused_variables))]
fn contiguous(data: &mut [Complex64], extent: usize, plan: &Arc<dyn Fft<f64>>) {
    #[cfg(feature = "parallel")]
    if crate::parallel_enabled() && data.len() >= 4 * extent {
        use rayon::prelude::*;
        let lines = (data.len() / extent).div_ceil(rayon::current_num_threads() * 4);
        data.par_chunks_mut(extent * lines.max(1)).for_each(|chunk| {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
        return;
    }
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
}

/// Transform of one tile: `width` lines starting at `inner` inside the
/// block beginning at `base`.
#[allow(clippy::too_many_arguments)]
fn tile(
    data: &[Complex64],
    base: usize,
    inner: usize,
    width: usize,
    extent: usize,
    stride: usize,
    plan: &Arc<dyn Fft<f64>>,
    scratch: &mut Vec<Complex64>,
) -> Vec<Complex64> {
    let mut buf = vec![Complex64::default(); width * extent];
    for k in 0..extent {
        let row = &data[base + k * stride + inner..base + k * stride + inner + width];
        for (l, &z) in row.iter().enumerate() {
            buf[l * extent + k] = z;
        }
    }
    scratch.resize(plan.get_inplace_scratch_len(), Complex64::default());
    plan.process_with_scratch(&mut buf, scratch);
    buf
}

fn scatter(
    data: &mut [Complex64],
    buf: &[Complex64],
    base: usize,
    inner: usize,
    width: usize,
    extent: usize,
    stride: usize,
) {
    for k in 0..extent {
        let row = &mut data[base + k * stride + inner..base + k * stride + inner + width];
        for (l, z) in row.iter_mut().enumerate() {
            *z = buf[l * extent + k];
        }
    }
}

fn strided(data: &mut [Complex64], extent: usize, stride: usize, plan: &Arc<dyn Fft<f64>>) {
    let block = extent * stride;
    let tiles: Vec<(usize, usize, usize)> = (0..data.len() / block)
        .flat_map(|b| {
            (0..stride)
                .step_by(TILE)
                .map(move |inner| (b * block, inner, TILE.min(stride - inner)))
        })
        .collect();

    #[cfg(feature = "parallel")]
    if crate::parallel_enabled() && tiles.len() > 1 {
        use rayon::prelude::*;
        let shared: &[Complex64] = data;
        let results: Vec<Vec<Complex64>> = tiles
            .par_iter()
            .map_init(Vec::new, |scratch, &(base, inner, width)| {
                tile(shared, base, inner, width, extent, stride, plan, scratch)
            })
            .collect();
        for (&(base, inner, width), buf) in tiles.iter().zip(&results) {
            scatter(data, buf, base, inner, width, extent, stride);
        }
        return;
    }

    let mut scratch = Vec::new();
    for &(base, inner, width) in &tiles {
        let buf = tile(data, base, inner, width, extent, stride, plan, &mut scratch);
        scatter(data, &buf, base, inner, width, extent, stride);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(dims: &[usize], seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = GridShape::new(dims.to_vec()).unwrap();
        ComplexField::from_fn(shape, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Direct double-sum DFT over all axes at once.
    fn direct_dft(f: &ComplexField) -> ComplexField {
        let shape = f.shape().clone();
        let dims = shape.dims().to_vec();
        ComplexField::from_fn(shape.clone(), |k| {
            let mut acc = c(0.0, 0.0);
            for j in 0..shape.len() {
                let jj = shape.unravel(j);
                let phase: f64 = jj
                    .iter()
                    .zip(k)
                    .zip(&dims)
                    .map(|((&a, &b), &e)| ((a * b) % e) as f64 / e as f64)
                    .sum();
                acc += f.data()[j] * Complex64::from_polar(1.0, -2.0 * PI * phase);
            }
            acc
        })
    }

    #[test]
    fn delta_and_constant() {
        let s = GridShape::new(vec![4]).unwrap();
        let d = fft(&ComplexField::delta(s.clone()));
        assert!(d.data().iter().all(|&z| z == c(1.0, 0.0)));
        let k = fft(&ComplexField::constant(s.clone(), c(1.0, 0.0)));
        assert_eq!(k.data(), &[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        let spec = ComplexField::from_real(s.clone(), &[4.0, 0.0, 0.0, 0.0]).unwrap();
        let back = ifft(&spec);
        assert!(back.data().iter().all(|&z| z == c(1.0, 0.0)));
        let ones = ComplexField::constant(s, c(1.0, 0.0));
        let back = ifft(&ones);
        assert_eq!(back.data(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn matches_direct_dft_length_12() {
        let f = random_field(&[12], 1);
        let fast = fft(&f);
        let slow = direct_dft(&f);
        let rel = fast.max_abs_diff(&slow) / slow.max_abs();
        assert!(rel <= 1e-12, "relative error {rel:e}");
    }

    #[test]
    fn matches_direct_dft_multidim_and_odd_sizes() {
        for dims in [vec![7], vec![3, 5], vec![2, 3, 4], vec![6, 10], vec![11, 13]] {
            let f = random_field(&dims, 3);
            let rel = fft(&f).max_abs_diff(&direct_dft(&f)) / direct_dft(&f).max_abs();
            assert!(rel <= 1e-12, "{dims:?}: {rel:e}");
        }
    }

    #[test]
    fn round_trip_8x6() {
        let f = random_field(&[8, 6], 2);
        assert!(ifft(&fft(&f)).max_abs_diff(&f) <= 1e-12);
    }

    #[test]
    fn tiled_axis_wider_than_one_tile() {
        let f = random_field(&[5, 37], 4);
        let rel = fft(&f).max_abs_diff(&direct_dft(&f)) / direct_dft(&f).max_abs();
        assert!(rel <= 1e-12);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_path_is_bit_identical() {
        let f = random_field(&[64, 48], 9);
        let sequential = fft(&f);
        crate::set_parallel(true);
        let parallel = fft(&f);
        crate::set_parallel(false);
        assert_eq!(sequential, parallel);
    }
}
