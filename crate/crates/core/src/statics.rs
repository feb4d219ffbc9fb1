//! Static dressed solutions `(X_*, P = 0, β_*)`, the force the field exerts
//! on the particle, and radial decay analysis of field profiles.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::model::{FourierGrid, Model};
use crate::scalar::{from_usize, lit, stable_sum, to_f64, Real};
use crate::spectral::{ComplexField, Space, ZeroMode, REDUCE_CHUNK};
use crate::vec3::Vec3;

/// Per-axis factors of the translation phase `e^{-ik·X}`.
///
/// The factor vanishes on the unpaired Nyquist index: translated sources are
/// band-limited so that they stay real and the force is the exact
/// `X`-gradient of the interaction energy.
#[derive(Clone, Debug)]
pub(crate) struct TranslationPhase<T> {
    axes: [Vec<Complex<T>>; 3],
    n: usize,
}

impl<T: Real> TranslationPhase<T> {
    pub(crate) fn new(grid: &FourierGrid<T>, x: Vec3<T>) -> Self {
        let axis = |a: usize| {
            (0..grid.n)
                .map(|i| {
                    let arg = grid.wavenumber(i) * x[a];
                    if i == grid.n / 2 {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        Complex::new(arg.cos(), -arg.sin())
                    }
                })
                .collect::<Vec<_>>()
        };
        TranslationPhase {
            axes: [axis(0), axis(1), axis(2)],
            n: grid.n,
        }
    }

    #[inline]
    pub(crate) fn at(&self, idx: usize) -> Complex<T> {
        let n = self.n;
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        self.axes[0][i] * self.axes[1][j] * self.axes[2][k]
    }
}

/// True when any axis index of the mode is the Nyquist index.
pub(crate) fn is_nyquist_mode<T: Real>(grid: &FourierGrid<T>, idx: usize) -> bool {
    let (i, j, k) = grid.unravel(idx);
    let h = grid.n / 2;
    i == h || j == h || k == h
}

/// Spectrum of the translated source `s·W(x - X)`, without Nyquist modes.
pub fn source_spectrum<T: Real>(model: &Model<T>, grid: &FourierGrid<T>, x: Vec3<T>) -> ComplexField<T> {
    let s = model.params.source_coefficient();
    let phase = TranslationPhase::new(grid, x);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| phase.at(i) * (s * model.w.fourier_vec(grid.kvec(i))))
        .collect();
    ComplexField {
        grid: *grid,
        values,
        space: Space::Fourier,
    }
}

/// A static solution of the elliptic field equation.
#[derive(Clone, Debug)]
pub struct StaticProfile<T> {
    /// `β_*` in position space.
    pub field: ComplexField<T>,
    pub center: Vec3<T>,
    /// True when the `k = 0` mode was dropped (B-model).
    pub zero_mode_projected: bool,
}

/// Spectrum of the static profile, `β̂_* = -s Ŵ e^{-ik·X}/(|k|²/2m + (κ/4)Φ̂)`.
/// The flag reports whether the zero mode was projected out.
pub fn static_spectrum<T: Real>(
    model: &Model<T>,
    grid: &FourierGrid<T>,
    center: Vec3<T>,
    zero_mode: ZeroMode,
) -> Result<(ComplexField<T>, bool)> {
    let q0 = model.restoring_symbol(T::zero());
    let kappa = model.params.kappa;
    if kappa > T::zero() && !(q0 > T::zero()) {
        return Err(Error::IllPosed(format!(
            "kappa * Phi_hat(0) must be positive, got {:e}",
            to_f64(kappa * model.phi.fourier(T::zero()))
        )));
    }
    let mut projected = false;
    if q0 == T::zero() {
        let w0 = model.params.source_coefficient() * model.w.fourier(T::zero());
        if w0 != T::zero() {
            if zero_mode == ZeroMode::Strict {
                return Err(Error::ZeroMode { value: to_f64(w0) });
            }
            projected = true;
        }
    }
    let mut spec = source_spectrum(model, grid, center);
    let bad = spec
        .values
        .par_iter_mut()
        .enumerate()
        .map(|(i, v)| {
            let q = model.restoring_symbol(grid.kvec(i).norm());
            if q > T::zero() {
                *v = -*v / q;
                0usize
            } else if i == 0 {
                *v = Complex::new(T::zero(), T::zero());
                0
            } else {
                1
            }
        })
        .sum::<usize>();
    if bad > 0 {
        return Err(Error::IllPosed(format!(
            "restoring symbol is non-positive on {bad} modes"
        )));
    }
    Ok((spec, projected))
}

/// Static field profile centred at `center`.
pub fn static_profile<T: Real>(
    model: &Model<T>,
    grid: &FourierGrid<T>,
    center: Vec3<T>,
    zero_mode: ZeroMode,
) -> Result<StaticProfile<T>> {
    let (spec, projected) = static_spectrum(model, grid, center, zero_mode)?;
    Ok(StaticProfile {
        field: spec.into_position(),
        center,
        zero_mode_projected: projected,
    })
}

/// Relative residual `‖(-Δ/2m + (κ/4)Φ)β + sW^X‖₂ / ‖sW^X‖₂`, evaluated
/// spectrally. The zero mode is left out when `skip_zero_mode` is set.
pub fn elliptic_residual<T: Real>(
    model: &Model<T>,
    beta: &ComplexField<T>,
    center: Vec3<T>,
    skip_zero_mode: bool,
) -> T {
    let grid = beta.grid;
    let spec = beta.clone().into_fourier();
    let src = source_spectrum(model, &grid, center);
    let mut num = Vec::with_capacity(grid.len());
    let mut den = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        if skip_zero_mode && i == 0 {
            continue;
        }
        let q = model.restoring_symbol(grid.kvec(i).norm());
        num.push((spec.values[i] * q + src.values[i]).norm_sqr());
        den.push(src.values[i].norm_sqr());
    }
    (stable_sum(&num) / stable_sum(&den)).sqrt()
}

/// Force `ν ∫ (∇W)(x - X) Re β(x) d³x` exerted by the field on a particle at `X`.
///
/// `beta` may be given in either space.
pub fn self_force<T: Real>(model: &Model<T>, beta: &ComplexField<T>, x: Vec3<T>) -> Result<Vec3<T>> {
    let grid = beta.grid;
    let re_spec = match beta.space {
        Space::Fourier => beta.real_part_spectrum()?,
        Space::Position => ComplexField {
            grid,
            values: beta.values.iter().map(|v| Complex::new(v.re, T::zero())).collect(),
            space: Space::Position,
        }
        .into_fourier(),
    };
    Ok(force_from_real_spectrum(model, &grid, &re_spec.values, x))
}

/// `ν Σ_k Re[(-ik) Ŵ(k) e^{ik·X} â(k)] Δk³` for the spectrum `â` of a real field.
pub(crate) fn force_from_real_spectrum<T: Real>(
    model: &Model<T>,
    grid: &FourierGrid<T>,
    a_hat: &[Complex<T>],
    x: Vec3<T>,
) -> Vec3<T> {
    let phase = TranslationPhase::new(grid, x);
    let partial: Vec<[T; 3]> = a_hat
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = [T::zero(); 3];
            for (off, a) in chunk.iter().enumerate() {
                let idx = c * REDUCE_CHUNK + off;
                let k = grid.derivative_kvec(idx);
                let w = model.w.fourier_vec(grid.kvec(idx));
                // Re[(-i k_j) w conj(phase) a] = k_j w Im(conj(phase) a)
                let t = w * (phase.at(idx).conj() * a).im;
                acc[0] += k[0] * t;
                acc[1] += k[1] * t;
                acc[2] += k[2] * t;
            }
            acc
        })
        .collect();
    let scale = model.params.nu * grid.mode_volume();
    let comp = |j: usize| stable_sum(&partial.iter().map(|p| p[j]).collect::<Vec<_>>()) * scale;
    Vec3::new(comp(0), comp(1), comp(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    Exponential,
    PowerLaw,
    Undetermined,
}

/// Result of [`decay_profile`].
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport<T> {
    pub classification: DecayClass,
    /// `λ` of the best fit `|β| ~ e^{-λ r}`.
    pub exponential_rate: T,
    pub exponential_rms: T,
    /// `p` of the best fit `|β| ~ r^p` (negative for decay).
    pub power_exponent: T,
    pub power_rms: T,
    /// Outermost complete shell mean over the central shell mean.
    pub edge_ratio: T,
    pub window: (T, T),
    /// `(mean radius, mean |β|)` per shell.
    pub shells: Vec<(T, T)>,
    pub diagnostic: Option<String>,
}

/// Required separation of fit residuals before a decay law is declared.
pub const CLASSIFICATION_FACTOR: f64 = 3.0;
/// Largest edge-to-centre amplitude ratio for which a decay law is trusted.
pub const EDGE_RATIO_LIMIT: f64 = 1e-3;

/// Shell-averaged `|β|` around `center`, shells of width `2Δx` that fit
/// inside the box.
pub fn radial_shells<T: Real>(beta: &ComplexField<T>, center: Vec3<T>) -> Vec<(T, T)> {
    let field = beta.clone().into_position();
    let grid = field.grid;
    let dr = lit::<T>(2.0) * grid.dx();
    let half = grid.length / lit(2.0);
    let nbins = (half / dr).floor().to_usize().unwrap_or(0);
    let mut sum_r = vec![T::zero(); nbins];
    let mut sum_v = vec![T::zero(); nbins];
    let mut count = vec![0usize; nbins];
    for (i, v) in field.values.iter().enumerate() {
        let r = grid.min_image(grid.position(i), center).norm();
        let b = (r / dr).floor().to_usize().unwrap_or(usize::MAX);
        if b < nbins {
            sum_r[b] += r;
            sum_v[b] += v.norm();
            count[b] += 1;
        }
    }
    (0..nbins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let c = from_usize::<T>(count[b]);
            (sum_r[b] / c, sum_v[b] / c)
        })
        .collect()
}

/// Classifies the far-field decay of `|β|` around `center` as exponential
/// or power law by fitting `log|β|` against `r` and against `log r` over
/// radii `[0.2L, 0.4L]`.
pub fn decay_profile<T: Real>(beta: &ComplexField<T>, center: Vec3<T>) -> Result<DecayReport<T>> {
    let grid = beta.grid;
    let shells = radial_shells(beta, center);
    let lo = lit::<T>(0.2) * grid.length;
    let hi = lit::<T>(0.4) * grid.length;
    let window: Vec<(T, T)> = shells.iter().copied().filter(|&(r, _)| r >= lo && r <= hi).collect();
    if window.len() < 3 {
        return Err(Error::Fit(format!("only {} shells in the fit window", window.len())));
    }
    let centre = shells.first().map(|s| s.1).unwrap_or(T::zero());
    let edge = shells.last().map(|s| s.1).unwrap_or(T::zero());
    let edge_ratio = if centre > T::zero() {
        edge / centre
    } else {
        T::infinity()
    };

    if window.iter().any(|&(_, v)| !(v > T::zero())) {
        return Ok(DecayReport {
            classification: DecayClass::Undetermined,
            exponential_rate: T::nan(),
            exponential_rms: T::nan(),
            power_exponent: T::nan(),
            power_rms: T::nan(),
            edge_ratio,
            window: (lo, hi),
            shells,
            diagnostic: Some("field vanishes inside the fit window".into()),
        });
    }
    let r: Vec<T> = window.iter().map(|w| w.0).collect();
    let log_r: Vec<T> = r.iter().map(|v| v.ln()).collect();
    let log_v: Vec<T> = window.iter().map(|w| w.1.ln()).collect();
    let exp_fit = fit_line(&r, &log_v)?;
    let pow_fit = fit_line(&log_r, &log_v)?;

    let factor = lit::<T>(CLASSIFICATION_FACTOR);
    let mut classification = if pow_fit.rms >= factor * exp_fit.rms {
        DecayClass::Exponential
    } else if exp_fit.rms >= factor * pow_fit.rms {
        DecayClass::PowerLaw
    } else {
        DecayClass::Undetermined
    };
    let mut diagnostic = None;
    if !(edge_ratio < lit(EDGE_RATIO_LIMIT)) {
        diagnostic = Some(format!(
            "insufficient decay before the box edge: edge/centre = {:e}",
            to_f64(edge_ratio)
        ));
        classification = DecayClass::Undetermined;
    }
    Ok(DecayReport {
        classification,
        exponential_rate: -exp_fit.slope,
        exponential_rms: exp_fit.rms,
        power_exponent: pow_fit.slope,
        power_rms: pow_fit.rms,
        edge_ratio,
        window: (lo, hi),
        shells,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, PotentialSpec};

    fn grid() -> FourierGrid<f64> {
        FourierGrid::new(32, 16.0).unwrap()
    }

    #[test]
    fn b_model_needs_projection() {
        let m = Model::<f64>::default();
        let err = static_profile(&m, &grid(), Vec3::zero(), ZeroMode::Strict).unwrap_err();
        assert!(matches!(err, Error::ZeroMode { .. }));
        let p = static_profile(&m, &grid(), Vec3::zero(), ZeroMode::Project).unwrap();
        assert!(p.zero_mode_projected);
        assert!(p.field.max_abs_imag() < 1e-12);
    }

    #[test]
    fn off_grid_centre_keeps_profile_real() {
        let m = Model::<f64>::default();
        let p = static_profile(&m, &grid(), Vec3::new(0.123, -0.7, 0.31), ZeroMode::Project).unwrap();
        assert!(p.field.max_abs_imag() < 1e-12 * p.field.max_abs());
    }

    #[test]
    fn ill_posed_when_interaction_is_not_positive() {
        let mut m = Model::new(
            ModelParams::e_model(1.0, 1.0),
            PotentialSpec::gaussian(1.0, 1.0),
            PotentialSpec::gaussian(1.0, 1.0),
        )
        .unwrap();
        m.phi.amplitude = -1.0;
        assert!(matches!(
            static_profile(&m, &grid(), Vec3::zero(), ZeroMode::Strict),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn zero_field_exerts_no_force() {
        let m = Model::<f64>::default();
        let f = ComplexField::zeros(grid(), Space::Position);
        assert_eq!(self_force(&m, &f, Vec3::new(0.3, 0.1, 0.0)).unwrap(), Vec3::zero());
    }

    #[test]
    fn static_profile_translates_with_its_centre() {
        let m = Model::<f64>::default();
        let g = grid();
        let a = static_profile(&m, &g, Vec3::zero(), ZeroMode::Project).unwrap().field;
        let shift = 3;
        let d = Vec3::new(g.dx() * shift as f64, 0.0, 0.0);
        let b = static_profile(&m, &g, d, ZeroMode::Project).unwrap().field;
        let n = g.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let moved = b.values[g.index((i + shift) % n, j, k)];
                    worst = worst.max((moved - a.values[g.index(i, j, k)]).norm());
                }
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn synthetic_exponential_is_classified() {
        let g = FourierGrid::<f64>::new(64, 32.0).unwrap();
        let f = ComplexField::from_position_fn(g, |x| Complex::new((-x.norm()).exp(), 0.0));
        let rep = decay_profile(&f, Vec3::zero()).unwrap();
        assert_eq!(rep.classification, DecayClass::Exponential);
        assert!((rep.exponential_rate - 1.0).abs() < 0.05, "{}", rep.exponential_rate);
    }

    #[test]
    fn synthetic_power_law_is_classified() {
        let g = FourierGrid::new(64, 32.0).unwrap();
        // r^-2 tail tapered to zero just inside the box edge
        let f = ComplexField::from_position_fn(g, |x| {
            let r: f64 = x.norm();
            let taper = if r < 13.5 {
                1.0
            } else if r > 15.5 {
                0.0
            } else {
                (std::f64::consts::FRAC_PI_2 * (r - 13.5) / 2.0).cos().powi(2)
            };
            Complex::new(taper / (1.0 + r * r), 0.0)
        });
        let rep = decay_profile(&f, Vec3::zero()).unwrap();
        assert_eq!(rep.classification, DecayClass::PowerLaw, "{rep:?}");
        assert!((rep.power_exponent + 2.0).abs() < 0.2, "{}", rep.power_exponent);
    }

    #[test]
    fn slow_decay_is_undetermined() {
        let g = FourierGrid::new(32, 32.0).unwrap();
        let f = ComplexField::from_position_fn(g, |x| Complex::new(1.0 / (1.0 + x.norm()), 0.0));
        let rep = decay_profile(&f, Vec3::zero()).unwrap();
        assert_eq!(rep.classification, DecayClass::Undetermined);
        assert!(rep.diagnostic.unwrap().contains("insufficient decay"));
    }
}
