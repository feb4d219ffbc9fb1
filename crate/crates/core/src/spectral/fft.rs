use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Unnormalized 3D FFT on an `n³` cube stored in C order.
pub struct Fft3<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Clone for Fft3<T> {
    fn clone(&self) -> Self {
        Fft3 {
            n: self.n,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
        }
    }
}

impl<T: Real> Fft3<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "buffer does not match the grid");
        let plane = n * n;

        // Last axis is contiguous; the middle axis is handled by an in-slab transpose.
        data.par_chunks_mut(plane).for_each_init(
            || {
                (
                    vec![Complex::default(); fft.get_inplace_scratch_len()],
                    vec![Complex::default(); plane],
                )
            },
            |(scratch, buf), slab| {
                fft.process_with_scratch(slab, scratch);
                transpose_square(slab, buf, n);
                fft.process_with_scratch(buf, scratch);
                transpose_square(buf, slab, n);
            },
        );

        // First axis: gather each (j) plane as rows over i.
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        let mut buf = vec![Complex::default(); plane];
        for j in 0..n {
            for i in 0..n {
                let src = (i * n + j) * n;
                for k in 0..n {
                    buf[k * n + i] = data[src + k];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                let dst = (i * n + j) * n;
                for k in 0..n {
                    data[dst + k] = buf[k * n + i];
                }
            }
        }
    }
}

fn transpose_square<T: Copy>(src: &[T], dst: &mut [T], n: usize) {
    const B: usize = 16;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft_on_small_cube() {
        let n = 8;
        let data: Vec<Complex<f64>> = (0..n * n * n)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        Fft3::new(n).forward(&mut fast);
        let tau = std::f64::consts::TAU;
        for &(a, b, c) in &[(0usize, 0usize, 0usize), (1, 2, 3), (7, 0, 5), (4, 4, 4)] {
            let mut acc = Complex::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let ph = -tau * ((a * i + b * j + c * k) as f64) / n as f64;
                        acc += data[(i * n + j) * n + k] * Complex::from_polar(1.0, ph);
                    }
                }
            }
            let got = fast[(a * n + b) * n + c];
            assert!((got - acc).norm() < 1e-10, "{got} vs {acc}");
        }
    }
}
