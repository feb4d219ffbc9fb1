//! Discrete transforms, the linear dispersion relation of the condensate
//! excitations, sound and critical speeds, and diagonal k-space inverses.

mod fft;
mod field;

pub use fft::Fft3;
pub(crate) use field::REDUCE_CHUNK;
pub use field::{combine_hermitian, split_hermitian, ComplexField, Space};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::roots::golden_section_min;
use crate::scalar::{from_usize, lit, Real};
use crate::vec3::Vec3;

/// Which closed form of the excitation frequency to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionForm {
    /// Plane-wave frequency of the linearized field equation that the
    /// integrators evolve: `Ω² = (k²/2m)(k²/2m + (κ/4)Φ̂(k))`.
    #[default]
    Dynamics,
    /// `Ω = |k|·sqrt((k/2m)² + κΦ̂(k)/2m)`, kept for side-by-side
    /// comparison. Its interaction term is four times that of `Dynamics`.
    UnscaledInteraction,
}

/// Handling of the `k = 0` mode in operators that are singular there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMode {
    /// Refuse inputs with a nonzero mean.
    #[default]
    Strict,
    /// Drop the mean and set the zero mode of the result to 0.
    Project,
}

/// Excitation frequency `Ω(k)`.
pub fn dispersion_omega<T: Real>(model: &Model<T>, k: Vec3<T>, form: DispersionForm) -> T {
    dispersion_omega_radial(model, k.norm(), form)
}

pub fn dispersion_omega_radial<T: Real>(model: &Model<T>, k: T, form: DispersionForm) -> T {
    k.abs() * phase_velocity(model, k, form)
}

/// `Ω(k)/|k|`, continued to `k = 0` by its limit.
pub fn phase_velocity<T: Real>(model: &Model<T>, k: T, form: DispersionForm) -> T {
    let m = model.params.field_mass;
    let two = lit::<T>(2.0);
    match form {
        // Ω/|k| = sqrt(q(k)/2m) with q the restoring symbol
        DispersionForm::Dynamics => (model.restoring_symbol(k) / (two * m)).max(T::zero()).sqrt(),
        DispersionForm::UnscaledInteraction => {
            let a = k / (two * m);
            (a * a + model.params.kappa * model.phi.fourier(k) / (two * m))
                .max(T::zero())
                .sqrt()
        }
    }
}

/// Long-wavelength limit `v_* = lim_{k→0} Ω(k)/|k|`.
pub fn sound_speed<T: Real>(model: &Model<T>, form: DispersionForm) -> T {
    phase_velocity(model, T::zero(), form)
}

/// Location and value of the phase-velocity minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint<T> {
    pub wavenumber: T,
    pub speed: T,
}

/// Number of radial samples in the coarse scan for the critical speed.
pub const CRITICAL_SCAN_SAMPLES: usize = 4096;

/// Minimum of `Ω(k)/|k|` over `[0, k_max]`: a coarse scan followed by
/// golden-section refinement.
pub fn critical_point<T: Real>(model: &Model<T>, k_max: T, form: DispersionForm) -> CriticalPoint<T> {
    let samples = CRITICAL_SCAN_SAMPLES;
    let h = k_max / from_usize(samples);
    let f = |k: T| phase_velocity(model, k, form);
    let mut best = 0;
    let mut best_val = f(T::zero());
    for i in 1..=samples {
        let v = f(h * from_usize(i));
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = h * from_usize(best.saturating_sub(1));
    let hi = (h * from_usize(best + 1)).min(k_max);
    let (k, v) = golden_section_min(f, lo, hi, lit(1e-10));
    if v <= best_val {
        CriticalPoint {
            wavenumber: k,
            speed: v,
        }
    } else {
        CriticalPoint {
            wavenumber: h * from_usize(best),
            speed: best_val,
        }
    }
}

/// Critical speed `v_c`: the infimum of the phase velocity on `[0, k_max]`.
pub fn critical_speed<T: Real>(model: &Model<T>, k_max: T, form: DispersionForm) -> T {
    critical_point(model, k_max, form).speed
}

/// Rows `(k, Ω(k), Ω(k)/k)` for `samples` equispaced wavenumbers in `(0, k_max]`.
pub fn dispersion_table<T: Real>(model: &Model<T>, k_max: T, samples: usize, form: DispersionForm) -> Vec<(T, T, T)> {
    (1..=samples)
        .map(|i| {
            let k = k_max * from_usize(i) / from_usize(samples);
            let c = phase_velocity(model, k, form);
            (k, k * c, c)
        })
        .collect()
}

/// Relative size of the zero mode compared to the largest mode.
fn zero_mode_fraction<T: Real>(f: &ComplexField<T>) -> T {
    let peak = f.max_abs();
    if peak == T::zero() {
        T::zero()
    } else {
        f.values[0].norm() / peak
    }
}

/// Solves `Δg = f` spectrally: `ĝ(k) = -f̂(k)/|k|²`, `ĝ(0) = 0`.
///
/// The result is returned in the same space as the input.
pub fn inverse_laplacian<T: Real>(f: &ComplexField<T>, zero_mode: ZeroMode) -> Result<ComplexField<T>> {
    let input_space = f.space;
    let spectrum = f.clone().into_fourier();
    let frac = zero_mode_fraction(&spectrum);
    if zero_mode == ZeroMode::Strict && frac > lit(1e-10) {
        return Err(Error::Precondition(format!(
            "inverse Laplacian needs a zero-mean input, zero mode is {:e} of the peak",
            frac.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let out = spectrum.apply_symbol(|k| {
        let k2 = k.norm_sq();
        if k2 == T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            Complex::new(-T::one() / k2, T::zero())
        }
    })?;
    Ok(match input_space {
        Space::Position => out.into_position(),
        Space::Fourier => out,
    })
}

/// Spectral Laplacian `Δf`.
pub fn laplacian<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>> {
    let input_space = f.space;
    let out = f
        .clone()
        .into_fourier()
        .apply_symbol(|k| Complex::new(-k.norm_sq(), T::zero()))?;
    Ok(match input_space {
        Space::Position => out.into_position(),
        Space::Fourier => out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FourierGrid, ModelParams, PotentialSpec};
    use approx::assert_relative_eq;

    fn e_model(kappa: f64, phi: PotentialSpec<f64>) -> Model<f64> {
        Model::new(ModelParams::e_model(kappa, 1.0), PotentialSpec::gaussian(1.0, 1.0), phi).unwrap()
    }

    #[test]
    fn free_dispersion_is_quadratic() {
        let m = Model::<f64>::default();
        let om = dispersion_omega(&m, Vec3::new(0.0, 2.0, 0.0), DispersionForm::Dynamics);
        assert_relative_eq!(om, 2.0, max_relative = 1e-15);
        assert_eq!(dispersion_omega(&m, Vec3::zero(), DispersionForm::Dynamics), 0.0);
    }

    #[test]
    fn unit_delta_sound_speed() {
        let m = e_model(4.0, PotentialSpec::unit_delta());
        let v = sound_speed(&m, DispersionForm::Dynamics);
        assert_relative_eq!(v, 0.5_f64.sqrt(), max_relative = 1e-14);
        // small-k slope of Ω
        let k = 1e-6;
        let slope = dispersion_omega_radial(&m, k, DispersionForm::Dynamics) / k;
        assert_relative_eq!(slope, 0.5_f64.sqrt(), max_relative = 1e-10);
        let lit = sound_speed(&m, DispersionForm::UnscaledInteraction);
        assert_relative_eq!(lit, 2.0_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn b_model_speeds_vanish() {
        let m = Model::<f64>::default();
        assert_eq!(sound_speed(&m, DispersionForm::Dynamics), 0.0);
        assert!(critical_speed(&m, 10.0, DispersionForm::Dynamics) < 1e-12);
    }

    #[test]
    fn delta_interaction_has_equal_speeds() {
        let m = e_model(4.0, PotentialSpec::unit_delta());
        let vc = critical_speed(&m, 12.0, DispersionForm::Dynamics);
        let vs = sound_speed(&m, DispersionForm::Dynamics);
        assert!((vc - vs).abs() < 1e-9, "{vc} {vs}");
    }

    #[test]
    fn omega_depends_on_modulus_only() {
        let m = e_model(8.0, PotentialSpec::gaussian(1.0, 1.0));
        let a = dispersion_omega(&m, Vec3::new(0.3, -1.2, 0.4), DispersionForm::Dynamics);
        let b = dispersion_omega(&m, Vec3::new(-1.2, 0.4, -0.3), DispersionForm::Dynamics);
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_laplacian_single_mode() {
        let g = FourierGrid::new(8, 8.0_f64).unwrap();
        let mut f = ComplexField::zeros(g, Space::Fourier);
        let idx = g.index(1, 2, 0);
        f.values[idx] = Complex::new(0.7, -0.2);
        let out = inverse_laplacian(&f, ZeroMode::Strict).unwrap();
        let k2 = g.kvec(idx).norm_sq();
        assert!((out.values[idx] - f.values[idx] * (-1.0 / k2)).norm() < 1e-15);
        assert!(out.values.iter().enumerate().all(|(i, v)| i == idx || v.norm() == 0.0));
    }

    #[test]
    fn inverse_laplacian_rejects_nonzero_mean() {
        let g = FourierGrid::new(8, 8.0_f64).unwrap();
        let f = ComplexField::from_position_fn(g, |_| Complex::new(1.0, 0.0));
        assert!(matches!(
            inverse_laplacian(&f, ZeroMode::Strict),
            Err(Error::Precondition(_))
        ));
        let out = inverse_laplacian(&f, ZeroMode::Project).unwrap();
        assert!(out.max_abs() < 1e-14);
    }

    #[test]
    fn transforms_refuse_wrong_space() {
        let g = FourierGrid::new(8, 8.0_f64).unwrap();
        let f = ComplexField::zeros(g, Space::Fourier);
        assert!(matches!(f.forward_transform(), Err(Error::SpaceMismatch { .. })));
        let f = ComplexField::zeros(g, Space::Position);
        assert!(matches!(f.inverse_transform(), Err(Error::SpaceMismatch { .. })));
        assert_eq!(f.forward_transform().unwrap().max_abs(), 0.0);
    }
}
