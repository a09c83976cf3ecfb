//! FFT-backed synthesis and projection of truncated Fourier series on uniform angular grids.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Uniform grid `s_k = 2πk/m` with planned forward and inverse transforms.
#[derive(Clone)]
pub struct AngularGrid<T: Real> {
    m: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for AngularGrid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularGrid").field("m", &self.m).finish()
    }
}

impl<T: Real> AngularGrid<T> {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "grid size must be positive");
        let mut planner = FftPlanner::new();
        AngularGrid {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn angle(&self, k: usize) -> T {
        T::TAU() * T::from_usize_exact(k) / T::from_usize_exact(self.m)
    }

    /// Values of `w(0) z0 + Σ_j w(j) (a_j cos js + b_j sin js)` at every grid node.
    ///
    /// Modes at or above the Nyquist index `m/2` are ignored.
    pub fn synthesize(&self, z0: T, modes: &[[T; 2]], weight: impl Fn(usize) -> T) -> Vec<T> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.m];
        buf[0].re = z0 * weight(0);
        let nyquist = self.m.div_ceil(2);
        for (idx, &[a, b]) in modes.iter().enumerate() {
            let j = idx + 1;
            if j >= nyquist {
                break;
            }
            let w = weight(j);
            buf[j] = Complex::new(a * w, -b * w);
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Discrete Fourier projection of grid samples onto modes `0..=order`.
    pub fn project(&self, samples: &[T], order: usize) -> (T, Vec<[T; 2]>) {
        assert_eq!(samples.len(), self.m);
        let mut buf: Vec<Complex<T>> = samples
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.forward.process(&mut buf);
        let m = T::from_usize_exact(self.m);
        let two = T::lit(2.0);
        let z0 = buf[0].re / m;
        let modes = (1..=order)
            .map(|j| {
                if 2 * j < self.m {
                    [two * buf[j].re / m, -two * buf[j].im / m]
                } else if 2 * j == self.m {
                    [buf[j].re / m, T::zero()]
                } else {
                    [T::zero(), T::zero()]
                }
            })
            .collect();
        (z0, modes)
    }
}
