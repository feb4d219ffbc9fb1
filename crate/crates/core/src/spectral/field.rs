use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fft::Fft3;
use crate::error::{Error, Result};
use crate::model::FourierGrid;
use crate::scalar::{from_usize, lit, stable_sum, Real};
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Position,
    Fourier,
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::Position => "position",
            Space::Fourier => "fourier",
        }
    }
}

/// Complex scalar field sampled on a [`FourierGrid`], either at grid points
/// or at grid wave vectors.
///
/// Fourier-space values approximate the unitary continuum transform:
/// `f̂(k) = Δx³ (2π)^{-3/2} Σ_x f(x) e^{-ik·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField<T> {
    pub grid: FourierGrid<T>,
    pub values: Vec<Complex<T>>,
    pub space: Space,
}

/// Block size for deterministic parallel reductions.
pub(crate) const REDUCE_CHUNK: usize = 4096;

impl<T: Real> ComplexField<T> {
    pub fn zeros(grid: FourierGrid<T>, space: Space) -> Self {
        ComplexField {
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); grid.len()],
            space,
        }
    }

    pub fn from_values(grid: FourierGrid<T>, values: Vec<Complex<T>>, space: Space) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ComplexField { grid, values, space })
    }

    /// Samples `f` at every grid point.
    pub fn from_position_fn<F>(grid: FourierGrid<T>, f: F) -> Self
    where
        F: Fn(Vec3<T>) -> Complex<T> + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        ComplexField {
            grid,
            values,
            space: Space::Position,
        }
    }

    /// Samples `f` at every grid wave vector.
    pub fn from_fourier_fn<F>(grid: FourierGrid<T>, f: F) -> Self
    where
        F: Fn(Vec3<T>) -> Complex<T> + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.kvec(i))).collect();
        ComplexField {
            grid,
            values,
            space: Space::Fourier,
        }
    }

    fn forward_scale(&self) -> T {
        self.grid.cell_volume() / T::TAU().powf(lit(1.5))
    }

    fn expect_space(&self, expected: Space) -> Result<()> {
        if self.space == expected {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: expected.name(),
                found: self.space.name(),
            })
        }
    }

    pub fn check_grid(&self, other: &FourierGrid<T>) -> Result<()> {
        if self.grid == *other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Position → Fourier.
    pub fn forward_transform(&self) -> Result<Self> {
        self.expect_space(Space::Position)?;
        Ok(self.clone().into_fourier_with(&Fft3::new(self.grid.n)))
    }

    /// Fourier → position.
    pub fn inverse_transform(&self) -> Result<Self> {
        self.expect_space(Space::Fourier)?;
        Ok(self.clone().into_position_with(&Fft3::new(self.grid.n)))
    }

    /// Converts to Fourier space (no-op if already there).
    pub fn into_fourier(self) -> Self {
        if self.space == Space::Fourier {
            return self;
        }
        let fft = Fft3::new(self.grid.n);
        self.into_fourier_with(&fft)
    }

    /// Converts to position space (no-op if already there).
    pub fn into_position(self) -> Self {
        if self.space == Space::Position {
            return self;
        }
        let fft = Fft3::new(self.grid.n);
        self.into_position_with(&fft)
    }

    pub(crate) fn into_fourier_with(mut self, fft: &Fft3<T>) -> Self {
        if self.space == Space::Fourier {
            return self;
        }
        let scale = self.forward_scale();
        fft.forward(&mut self.values);
        self.values.par_iter_mut().for_each(|v| *v *= scale);
        self.space = Space::Fourier;
        self
    }

    pub(crate) fn into_position_with(mut self, fft: &Fft3<T>) -> Self {
        if self.space == Space::Position {
            return self;
        }
        let scale = T::one() / (self.forward_scale() * from_usize(self.grid.len()));
        fft.inverse(&mut self.values);
        self.values.par_iter_mut().for_each(|v| *v *= scale);
        self.space = Space::Position;
        self
    }

    /// Integration weight of one sample in the current space.
    pub fn measure(&self) -> T {
        match self.space {
            Space::Position => self.grid.cell_volume(),
            Space::Fourier => self.grid.mode_volume(),
        }
    }

    /// Continuum L² norm approximated by the grid sum.
    pub fn l2_norm(&self) -> T {
        let partial: Vec<T> = self
            .values
            .par_chunks(REDUCE_CHUNK)
            .map(|c| c.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()))
            .collect();
        (stable_sum(&partial) * self.measure()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Largest absolute imaginary part (meaningful in position space).
    pub fn max_abs_imag(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.im.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, s: T) {
        self.values.par_iter_mut().for_each(|v| *v *= s);
    }

    /// `self - other`, both on the same grid and in the same space.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        other.check_grid(&self.grid)?;
        other.expect_space(self.space)?;
        let values = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexField {
            grid: self.grid,
            values,
            space: self.space,
        })
    }

    /// Multiplies every Fourier mode by `symbol(k)`.
    pub fn apply_symbol<F>(&self, symbol: F) -> Result<Self>
    where
        F: Fn(Vec3<T>) -> Complex<T> + Sync,
    {
        self.expect_space(Space::Fourier)?;
        let grid = self.grid;
        let values = self
            .values
            .par_iter()
            .enumerate()
            .map(|(i, v)| v * symbol(grid.kvec(i)))
            .collect();
        Ok(ComplexField {
            grid,
            values,
            space: Space::Fourier,
        })
    }

    /// Spectrum of `Re f` given the spectrum of `f`: `(f̂(k) + conj f̂(-k))/2`.
    pub fn real_part_spectrum(&self) -> Result<Self> {
        self.expect_space(Space::Fourier)?;
        let (a, _) = split_hermitian(&self.grid, &self.values);
        Ok(ComplexField {
            grid: self.grid,
            values: a,
            space: Space::Fourier,
        })
    }
}

/// Splits the spectrum of `f = a + ib` (`a`, `b` real) into `(â, b̂)`.
pub fn split_hermitian<T: Real>(grid: &FourierGrid<T>, f: &[Complex<T>]) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let half = lit::<T>(0.5);
    let (a, b): (Vec<_>, Vec<_>) = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let here = f[i];
            let mirror = f[grid.negated(i)].conj();
            let a = (here + mirror) * half;
            let d = (here - mirror) * half;
            // (f - conj f(-k)) / (2i)
            (a, Complex::new(d.im, -d.re))
        })
        .unzip();
    (a, b)
}

/// Inverse of [`split_hermitian`]: `f̂ = â + i b̂`.
pub fn combine_hermitian<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.par_iter()
        .zip(b.par_iter())
        .map(|(a, b)| a + Complex::new(-b.im, b.re))
        .collect()
}
