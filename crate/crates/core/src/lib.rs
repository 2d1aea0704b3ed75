//! Convolutional exponentials, sines and cosines of periodic convolution
//! kernels, computed by FFT, and the unitary / orthogonal convolutional
//! recurrences they parametrize.
//!
//! The crate is organized bottom-up:
//!
//! - [`field`]: complex arrays on D-dimensional tori, FFTs, `CFLD` files.
//! - [`kernel`]: kernels, flips, anti-Hermitian constructions, text cores.
//! - [`spectral`]: `exp`, `cos`, `sin` of kernels, derivative kernels, and
//!   the four-kernel bipartite block exponential.
//! - [`lift`]: dense matrices of convolutions and a dense exponential, used
//!   as an independent oracle on small grids.
//! - [`rnn`]: the unitary (complex) and orthogonal (real, bipartite)
//!   recurrences, activations, run configs and gradient diagnostics.
//! - [`ca`]: Rule 110 and its embedding in a real convolutional recurrence.
//! - [`checks`]: the invariant catalog behind `convexp check`.

pub mod ca;
pub mod checks;
pub mod error;
pub mod export;
pub mod field;
pub mod kernel;
pub mod lift;
pub mod rnn;
pub mod spectral;
pub mod stencils;

pub use error::{Error, Result};
pub use field::{ComplexField, GridShape};
pub use kernel::{Kernel, KernelCore};
pub use lift::{CheckReport, LiftedMatrix};
pub use num_complex::Complex64;
pub use spectral::{BipartiteKernelSet, SpectralKernel};

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(false);

/// Enables the data-parallel FFT line passes (needs the `parallel`
/// feature). Results are bit-identical to the sequential order.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Uses `jobs` worker threads for the parallel paths; `jobs <= 1` keeps
/// everything sequential. Only the first call can size the thread pool.
pub fn set_jobs(jobs: usize) {
    set_parallel(jobs > 1);
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
}
