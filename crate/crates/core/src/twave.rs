//! Co-moving traveling waves `β_t(x) = γ_v(x - X_t)`, the friction force
//! they exert on the particle, the forced response curve `F(|v|)` and the
//! branch structure of forced traveling waves.
//!
//! Writing `γ = a + ib` with `a`, `b` real, the stationary co-moving equation
//! `-i v·∇γ = -Δγ/2m + (κ/4)Φ*Re γ + sW` splits into
//!
//! ```text
//! b̂ = -2m i ω â / |k|²,    â = s Ŵ / D,    D = 2m ω²/|k|² - |k|²/2m - (κ/4)Φ̂,
//! ```
//!
//! with `ω = k·v`. `D` vanishes exactly where `(k·v)² = Ω(k)²`. The outgoing
//! (Cerenkov) solution is selected by limiting absorption, `ω = k·v + iε`,
//! and `ε → 0` extrapolation.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_line, fit_polynomial};
use crate::model::{FourierGrid, Model, PotentialFamily};
use crate::roots::{bisect, golden_section_max_fallible, parabola_vertex};
use crate::scalar::{from_usize, lit, stable_sum, to_f64, Real};
use crate::spectral::{combine_hermitian, critical_speed, ComplexField, DispersionForm, Space, REDUCE_CHUNK};
use crate::statics::{force_from_real_spectrum, is_nyquist_mode};
use crate::vec3::Vec3;

/// Speed relative to the critical speed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Relative tolerance used to decide the regime.
pub const REGIME_TOLERANCE: f64 = 1e-6;
/// Grid modes required across the resonance surface along `v`.
pub const RESONANCE_MODES: usize = 8;

/// Upper bound on the wavenumber of the phase-velocity minimum:
/// `q(k) ≥ k²/2m` exceeds `q(0)` beyond `sqrt(2m q(0))`.
fn critical_search_bound<T: Real>(model: &Model<T>) -> T {
    let m = model.params.field_mass;
    let q0 = model.restoring_symbol(T::zero()).max(T::zero());
    (lit::<T>(2.0) * m * q0).sqrt() * lit(1.5) + lit(1e-3)
}

/// Critical speed `v_c` of the model (phase-velocity minimum over all `k`).
pub fn model_critical_speed<T: Real>(model: &Model<T>) -> T {
    critical_speed(model, critical_search_bound(model), DispersionForm::Dynamics)
}

/// Infimum of the speeds at which `D(k)` has a real zero, computed from the
/// minimum of the restoring symbol `q` (root of `q'`), independently of
/// [`model_critical_speed`].
pub fn resonance_threshold<T: Real>(model: &Model<T>) -> T {
    let m = model.params.field_mass;
    let kappa = model.params.kappa;
    let dq = |k: T| Ok::<T, Error>(k / m + kappa / lit(4.0) * model.phi.fourier_radial_derivative(k));
    let hi = critical_search_bound(model);
    let samples = 2048;
    let mut k_min = T::zero();
    let mut prev = lit::<T>(1e-9) * hi;
    let mut prev_val = dq(prev).unwrap_or(T::zero());
    for i in 1..=samples {
        let k = hi * from_usize(i) / from_usize(samples);
        let val = dq(k).unwrap_or(T::zero());
        if prev_val < T::zero() && val >= T::zero() {
            if let Ok(Some(root)) = bisect(dq, prev, k, lit::<T>(1e-15) * hi) {
                if model.restoring_symbol(root) < model.restoring_symbol(k_min) {
                    k_min = root;
                }
            }
        }
        prev = k;
        prev_val = val;
    }
    (model.restoring_symbol(k_min).max(T::zero()) / (lit::<T>(2.0) * m)).sqrt()
}

/// Largest `|k|` with phase velocity at most `speed`, i.e. the extent of the
/// resonance surface along `v`.
pub fn resonance_extent<T: Real>(model: &Model<T>, speed: T) -> T {
    let m = model.params.field_mass;
    let target = lit::<T>(2.0) * m * speed * speed;
    let g = |k: T| Ok::<T, Error>(model.restoring_symbol(k) - target);
    // q(k) ≥ k²/2m, so no resonance beyond 2m|v|
    let hi = lit::<T>(2.0) * m * speed * lit(1.000001);
    let samples = 1024;
    let mut last = None;
    for i in (0..=samples).rev() {
        let k = hi * from_usize(i) / from_usize(samples);
        if g(k).unwrap() <= T::zero() {
            last = Some(i);
            break;
        }
    }
    match last {
        None => T::zero(),
        Some(i) if i == samples => hi,
        Some(i) => {
            let lo = hi * from_usize(i) / from_usize(samples);
            let up = hi * from_usize(i + 1) / from_usize(samples);
            bisect(g, lo, up, lit::<T>(1e-14) * hi).ok().flatten().unwrap_or(lo)
        }
    }
}

/// A traveling-wave profile in the frame co-moving with the particle
/// (particle at the origin).
#[derive(Clone, Debug)]
pub struct TravelingWaveProfile<T> {
    pub velocity: Vec3<T>,
    /// `γ_v` in position space.
    pub profile: ComplexField<T>,
    /// Absorption parameter used.
    pub epsilon: T,
    pub regime: Regime,
    pub critical_speed: T,
    /// Set when the `k = 0` mode was dropped (`κ = 0`).
    pub zero_mode_projected: bool,
}

/// Classifies `speed` against `critical`.
pub fn regime_of<T: Real>(speed: T, critical: T) -> Regime {
    let tol = lit::<T>(REGIME_TOLERANCE) * critical.max(T::tiny());
    if speed < critical - tol {
        Regime::Subcritical
    } else if speed <= critical + tol {
        Regime::Critical
    } else {
        Regime::Supercritical
    }
}

fn check_velocity<T: Real>(model: &Model<T>, grid: &FourierGrid<T>, v: Vec3<T>, eps: T) -> Result<(T, Regime)> {
    if !v.is_finite() {
        return Err(invalid("v", "velocity must be finite"));
    }
    if !(eps >= T::zero()) || !eps.is_finite() {
        return Err(invalid("epsilon", "absorption parameter must be finite and >= 0"));
    }
    let vc = model_critical_speed(model);
    let speed = v.norm();
    let regime = regime_of(speed, vc);
    if speed > T::zero() && regime != Regime::Subcritical {
        if eps == T::zero() {
            return Err(Error::Resonance {
                speed: to_f64(speed),
                critical: to_f64(vc),
            });
        }
        let modes = lit::<T>(2.0) * resonance_extent(model, speed) / grid.dk();
        if modes < from_usize(RESONANCE_MODES) {
            return Err(Error::Resolution {
                modes: to_f64(modes),
                required: RESONANCE_MODES,
            });
        }
    }
    Ok((vc, regime))
}

/// Spectra `(â, b̂)` of the real and imaginary parts of `γ_v` (unchecked).
///
/// The source is band-limited like [`crate::statics::source_spectrum`].
fn wave_spectra<T: Real>(
    model: &Model<T>,
    grid: &FourierGrid<T>,
    v: Vec3<T>,
    eps: T,
) -> (Vec<Complex<T>>, Vec<Complex<T>>, T) {
    let m = model.params.field_mass;
    let s = model.params.source_coefficient();
    let two_m = lit::<T>(2.0) * m;
    let quarter_kappa = model.params.kappa / lit(4.0);
    let parts: Vec<(Complex<T>, Complex<T>, T)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let zero = Complex::new(T::zero(), T::zero());
            let kvec = grid.kvec(i);
            let k2 = kvec.norm_sq();
            if is_nyquist_mode(grid, i) {
                return (zero, zero, T::infinity());
            }
            let w = s * model.w.fourier_vec(kvec);
            if i == 0 {
                let q0 = model.restoring_symbol(T::zero());
                let a = if q0 > T::zero() {
                    Complex::new(-w / q0, T::zero())
                } else {
                    zero
                };
                return (a, zero, T::infinity());
            }
            let omega = Complex::new(kvec.dot(&v), eps);
            let d = omega * omega * (two_m / k2)
                - Complex::new(k2 / two_m + quarter_kappa * model.phi.fourier(k2.sqrt()), T::zero());
            let a = Complex::new(w, T::zero()) / d;
            let b = Complex::new(T::zero(), -two_m / k2) * omega * a;
            (a, b, d.norm())
        })
        .collect();
    let min_d = parts.iter().fold(T::infinity(), |acc, p| acc.min(p.2));
    let (a, b): (Vec<_>, Vec<_>) = parts.into_iter().map(|(a, b, _)| (a, b)).unzip();
    (a, b, min_d)
}

/// Solves the stationary co-moving field equation for velocity `v`.
pub fn traveling_profile<T: Real>(
    model: &Model<T>,
    grid: &FourierGrid<T>,
    v: Vec3<T>,
    eps: T,
) -> Result<TravelingWaveProfile<T>> {
    let (vc, regime) = check_velocity(model, grid, v, eps)?;
    let (a, b, min_d) = wave_spectra(model, grid, v, eps);
    if eps == T::zero() && !(min_d > lit::<T>(1e3) * T::epsilon() * model.restoring_symbol(grid.dk())) {
        return Err(Error::Resonance {
            speed: to_f64(v.norm()),
            critical: to_f64(vc),
        });
    }
    let spectrum = ComplexField {
        grid: *grid,
        values: combine_hermitian(&a, &b),
        space: Space::Fourier,
    };
    Ok(TravelingWaveProfile {
        velocity: v,
        profile: spectrum.into_position(),
        epsilon: eps,
        regime,
        critical_speed: vc,
        zero_mode_projected: model.restoring_symbol(T::zero()) == T::zero(),
    })
}

/// Force exerted on the particle by `γ_v(ε)`, without forming the profile.
fn wave_force<T: Real>(model: &Model<T>, grid: &FourierGrid<T>, v: Vec3<T>, eps: T) -> Result<Vec3<T>> {
    check_velocity(model, grid, v, eps)?;
    let (a, _, _) = wave_spectra(model, grid, v, eps);
    Ok(force_from_real_spectrum(model, grid, &a, Vec3::zero()))
}

/// Absorption schedule used when none is given: `0.3|v|·{1, 1/2, 1/4}`
/// above the critical speed, `{1, 1/2, 1/4}·10⁻³` below it.
pub fn default_epsilon_schedule<T: Real>(speed: T, critical: T) -> Vec<T> {
    let base = if regime_of(speed, critical) == Regime::Subcritical {
        lit::<T>(1e-3)
    } else {
        lit::<T>(0.3) * speed
    };
    vec![base, base / lit(2.0), base / lit(4.0)]
}

/// Extrapolated friction force with its diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct FrictionEstimate<T> {
    /// `ε → 0` value of the force.
    pub force: Vec3<T>,
    /// Force component along `v̂` (negative for friction).
    pub parallel: T,
    /// Largest transverse component magnitude.
    pub transverse_max: T,
    /// Difference between the quadratic and the linear extrapolations.
    pub error: T,
    /// Raw `(ε, force·v̂)` samples.
    pub samples: Vec<(T, T)>,
}

/// Friction force of the radiation-condition traveling wave: forces at each
/// `ε` in `schedule` (≥ 3 decreasing positive values) extrapolated to `ε = 0`
/// by a least-squares quadratic in `ε`.
pub fn friction_force_spectral<T: Real>(
    model: &Model<T>,
    grid: &FourierGrid<T>,
    v: Vec3<T>,
    schedule: &[T],
) -> Result<FrictionEstimate<T>> {
    if schedule.len() < 3 {
        return Err(invalid("epsilon_schedule", "at least three entries are required"));
    }
    if schedule.iter().any(|e| !(*e > T::zero())) || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid(
            "epsilon_schedule",
            "entries must be positive and strictly decreasing",
        ));
    }
    let dir = match v.normalized() {
        Some(d) => d,
        None => {
            return Ok(FrictionEstimate {
                force: Vec3::zero(),
                parallel: T::zero(),
                transverse_max: T::zero(),
                error: T::zero(),
                samples: schedule.iter().map(|&e| (e, T::zero())).collect(),
            })
        }
    };
    let forces = schedule
        .iter()
        .map(|&e| wave_force(model, grid, v, e))
        .collect::<Result<Vec<_>>>()?;
    let parallel: Vec<T> = forces.iter().map(|f| f.dot(&dir)).collect();
    let samples: Vec<(T, T)> = schedule.iter().copied().zip(parallel.iter().copied()).collect();

    let diffs: Vec<T> = parallel.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = parallel.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let noise = lit::<T>(1e-12) * scale;
    let rising = diffs.iter().all(|d| *d >= -noise);
    let falling = diffs.iter().all(|d| *d <= noise);
    if !(rising || falling) {
        return Err(Error::Extrapolation {
            samples: samples.iter().map(|&(e, f)| (to_f64(e), to_f64(f))).collect(),
        });
    }

    let extrapolate = |ys: &[T]| -> Result<(T, T)> {
        let quad = fit_polynomial(schedule, ys, 2)?[0];
        let lin = fit_line(schedule, ys)?.intercept;
        Ok((quad, (quad - lin).abs()))
    };
    let mut comps = [T::zero(); 3];
    for (j, c) in comps.iter_mut().enumerate() {
        let ys: Vec<T> = forces.iter().map(|f| f[j]).collect();
        *c = extrapolate(&ys)?.0;
    }
    let force = Vec3(comps);
    let (par, error) = extrapolate(&parallel)?;
    let transverse = force - dir * force.dot(&dir);
    Ok(FrictionEstimate {
        force,
        parallel: par,
        transverse_max: transverse.max_abs(),
        error,
        samples,
    })
}

/// Upper limit of the resonance integral in the closed-form friction law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonanceCutoff {
    /// `|k| ≤ 2π|v|`.
    #[default]
    TwoPiSpeed,
    /// `|k| ≤ 2m|v|`, the resonance sphere of the free dynamics.
    Dynamics,
}

impl ResonanceCutoff {
    fn radius<T: Real>(&self, model: &Model<T>, speed: T) -> T {
        match self {
            ResonanceCutoff::TwoPiSpeed => T::TAU() * speed,
            ResonanceCutoff::Dynamics => lit::<T>(2.0) * model.params.field_mass * speed,
        }
    }
}

/// Calibration constant of the closed form implied by the free dynamics:
/// with the [`ResonanceCutoff::Dynamics`] limit the spectral friction equals
/// the closed form for `C = π² s / 2m`.
pub fn dynamics_calibration<T: Real>(model: &Model<T>) -> T {
    T::PI() * T::PI() * model.params.source_coefficient() / (lit::<T>(2.0) * model.params.field_mass)
}

/// `∫₀^{K²} ρ Ŵ(√ρ)² dρ`, in closed form for both potential families.
pub fn resonance_integral<T: Real>(model: &Model<T>, radius: T) -> T {
    let w0 = model.w.fourier(T::zero());
    match model.w.family {
        PotentialFamily::Delta => w0 * w0 * radius.powi(4) / lit(2.0),
        PotentialFamily::Gaussian => {
            // Ŵ(√ρ)² = Ŵ(0)² e^{-σ²ρ}, so the integral is Ŵ(0)²/σ⁴ · g(K²σ²)
            // with g(u) = 1 - (1 + u)e^{-u}
            let sigma = model.w.width;
            let u = radius * radius * sigma * sigma;
            let g = if u < lit(0.1) {
                let mut term = u;
                let mut acc = T::zero();
                for n in 2..20 {
                    term = -term * u / from_usize(n);
                    acc += term * from_usize(n - 1);
                }
                -acc
            } else {
                T::one() - (T::one() + u) * (-u).exp()
            };
            w0 * w0 * g / sigma.powi(4)
        }
    }
}

/// Closed-form friction for the free (`κ = 0`) model,
/// `F_v = -C ν v̂ |v|⁻² ∫₀^{K²} ρ Ŵ(√ρ)² dρ` with `K` set by `cutoff`.
pub fn friction_force_closed<T: Real>(
    model: &Model<T>,
    v: Vec3<T>,
    calibration: T,
    cutoff: ResonanceCutoff,
) -> Result<Vec3<T>> {
    if model.params.kappa != T::zero() {
        return Err(Error::Precondition(
            "the closed-form friction law requires kappa = 0".into(),
        ));
    }
    let speed = v.norm();
    let dir = match v.normalized() {
        Some(d) => d,
        None => return Ok(Vec3::zero()),
    };
    let integral = resonance_integral(model, cutoff.radius(model, speed));
    Ok(dir * (-calibration * model.params.nu * integral / (speed * speed)))
}

/// Magnitude of the friction force as a function of speed.
pub trait ForceLaw<T: Real> {
    /// `|F|` (component against the motion) at `speed ≥ 0`.
    fn magnitude(&self, speed: T) -> Result<T>;
}

/// Friction from the spectral traveling-wave solver along a fixed direction.
#[derive(Clone, Debug)]
pub struct SpectralFriction<T> {
    pub model: Model<T>,
    pub grid: FourierGrid<T>,
    pub direction: Vec3<T>,
    /// `None` selects [`default_epsilon_schedule`].
    pub schedule: Option<Vec<T>>,
}

impl<T: Real> SpectralFriction<T> {
    pub fn new(model: Model<T>, grid: FourierGrid<T>, direction: Vec3<T>) -> Result<Self> {
        let direction = direction
            .normalized()
            .ok_or_else(|| invalid("direction", "must be a nonzero vector"))?;
        Ok(SpectralFriction {
            model,
            grid,
            direction,
            schedule: None,
        })
    }

    pub fn estimate(&self, speed: T) -> Result<FrictionEstimate<T>> {
        let schedule = match &self.schedule {
            Some(s) => s.clone(),
            None => default_epsilon_schedule(speed, model_critical_speed(&self.model)),
        };
        friction_force_spectral(&self.model, &self.grid, self.direction * speed, &schedule)
    }
}

impl<T: Real> ForceLaw<T> for SpectralFriction<T> {
    fn magnitude(&self, speed: T) -> Result<T> {
        if speed == T::zero() {
            return Ok(T::zero());
        }
        Ok(-self.estimate(speed)?.parallel)
    }
}

/// The closed-form law for the free model.
#[derive(Clone, Debug)]
pub struct ClosedFormFriction<T> {
    pub model: Model<T>,
    pub calibration: T,
    pub cutoff: ResonanceCutoff,
}

impl<T: Real> ForceLaw<T> for ClosedFormFriction<T> {
    fn magnitude(&self, speed: T) -> Result<T> {
        Ok(friction_force_closed(&self.model, Vec3::axis(0) * speed, self.calibration, self.cutoff)?.norm())
    }
}

/// Sampled response `|F|(|v|)` with its located maximum.
#[derive(Clone, Debug)]
pub struct ResponseCurve<T, L> {
    pub law: L,
    pub speeds: Vec<T>,
    pub forces: Vec<T>,
    pub v_peak: T,
    pub f_max: T,
}

/// Relative dip tolerated between samples before a curve is declared non-unimodal.
pub const CURVE_SHAPE_TOLERANCE: f64 = 1e-3;

/// Samples `law` at ascending `speeds` (starting at or above 0) and locates
/// the unique interior maximum.
pub fn response_curve<T: Real, L: ForceLaw<T>>(law: L, speeds: &[T]) -> Result<ResponseCurve<T, L>> {
    if speeds.len() < 3 {
        return Err(invalid("speeds", "at least three samples are required"));
    }
    if speeds[0] < T::zero() || speeds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("speeds", "samples must be non-negative and strictly ascending"));
    }
    let forces = speeds.iter().map(|&s| law.magnitude(s)).collect::<Result<Vec<_>>>()?;
    let (imax, fmax) =
        forces.iter().copied().enumerate().fold(
            (0, T::neg_infinity()),
            |acc, (i, f)| if f > acc.1 { (i, f) } else { acc },
        );
    if !(fmax > T::zero()) || imax == 0 || imax == forces.len() - 1 {
        return Err(Error::CurveShape(format!(
            "no interior maximum among {} samples on [{:e}, {:e}]; widen the speed range or refine the grid",
            speeds.len(),
            to_f64(speeds[0]),
            to_f64(speeds[speeds.len() - 1])
        )));
    }
    let tol = lit::<T>(CURVE_SHAPE_TOLERANCE) * fmax;
    let rising_ok = forces[..=imax].windows(2).all(|w| w[1] >= w[0] - tol);
    let falling_ok = forces[imax..].windows(2).all(|w| w[1] <= w[0] + tol);
    if !(rising_ok && falling_ok) {
        return Err(Error::CurveShape("more than one local maximum".into()));
    }

    let (a, b) = (speeds[imax - 1], speeds[imax + 1]);
    let guess = parabola_vertex(
        (speeds[imax - 1], forces[imax - 1]),
        (speeds[imax], forces[imax]),
        (speeds[imax + 1], forces[imax + 1]),
    )
    .map(|p| p.0)
    .filter(|x| *x > a && *x < b)
    .unwrap_or(speeds[imax]);
    let half = ((b - a) / lit(4.0)).min((guess - a).min(b - guess));
    let (lo, hi) = if half > T::zero() {
        (guess - half, guess + half)
    } else {
        (a, b)
    };
    let (mut v_peak, mut f_max) = golden_section_max_fallible(|s| law.magnitude(s), lo, hi, lit(1e-9))?;
    if f_max < fmax {
        v_peak = speeds[imax];
        f_max = fmax;
    }
    let last = speeds[speeds.len() - 1];
    if last < lit::<T>(3.0) * v_peak {
        return Err(Error::CurveShape(format!(
            "speed range ends at {:e}, below three times the peak speed {:e}",
            to_f64(last),
            to_f64(v_peak)
        )));
    }
    Ok(ResponseCurve {
        law,
        speeds: speeds.to_vec(),
        forces,
        v_peak,
        f_max,
    })
}

/// Speeds of the forced traveling waves for a given applied force.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Branches<T> {
    None,
    One { speed: T },
    Two { slow: T, fast: T },
}

/// Relative distance to `F_max` within which the two branches merge.
pub const PEAK_TOLERANCE: f64 = 1e-9;
/// Bisection tolerance relative to `v_peak`.
pub const BRANCH_TOLERANCE: f64 = 1e-8;

/// Solves `|F|(|v|) = force` on each monotone side of the response curve.
///
/// For `force = 0` the fast branch has no finite speed and is reported as
/// infinity.
pub fn forced_branches<T: Real, L: ForceLaw<T>>(curve: &ResponseCurve<T, L>, force: T) -> Result<Branches<T>> {
    if force < T::zero() || !force.is_finite() {
        return Err(Error::NegativeForce(to_f64(force)));
    }
    let f_max = curve.f_max;
    if (force - f_max).abs() <= lit::<T>(PEAK_TOLERANCE) * f_max {
        return Ok(Branches::One { speed: curve.v_peak });
    }
    if force > f_max {
        return Ok(Branches::None);
    }
    let g = |s: T| curve.law.magnitude(s).map(|f| f - force);
    let tol = lit::<T>(BRANCH_TOLERANCE) * curve.v_peak;
    // brackets come from the samples so that the law is only evaluated
    // between speeds where it is known to be valid
    let samples: Vec<(T, T)> = curve.speeds.iter().copied().zip(curve.forces.iter().copied()).collect();
    let rising_lo = samples
        .iter()
        .filter(|(s, f)| *s < curve.v_peak && *f <= force)
        .map(|p| p.0)
        .fold(curve.speeds[0], T::max);
    let rising_hi = samples
        .iter()
        .filter(|(s, f)| *s > rising_lo && *s < curve.v_peak && *f > force)
        .map(|p| p.0)
        .fold(curve.v_peak, T::min);
    let slow = bisect(g, rising_lo, rising_hi, tol)?
        .ok_or_else(|| Error::CurveShape("no crossing on the rising side".into()))?;
    if force == T::zero() {
        return Ok(Branches::Two {
            slow,
            fast: T::infinity(),
        });
    }
    let falling_lo = samples
        .iter()
        .filter(|(s, f)| *s > curve.v_peak && *f > force)
        .map(|p| p.0)
        .fold(curve.v_peak, T::max);
    let mut falling_hi = samples
        .iter()
        .filter(|(s, f)| *s > falling_lo && *f <= force)
        .map(|p| p.0)
        .fold(T::infinity(), T::min);
    if falling_hi == T::infinity() {
        falling_hi = curve.speeds[curve.speeds.len() - 1].max(curve.v_peak * lit(2.0));
        for _ in 0..60 {
            if g(falling_hi)? <= T::zero() {
                break;
            }
            falling_hi *= lit(2.0);
        }
    }
    let fast = bisect(g, falling_lo, falling_hi, tol)?
        .ok_or_else(|| Error::CurveShape("no crossing on the falling side".into()))?;
    Ok(Branches::Two { slow, fast })
}

/// Trailing-versus-leading asymmetry of a traveling wave.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WakeReport<T> {
    /// `‖Re γ‖₂` over the half-space behind the particle.
    pub trailing: T,
    /// `‖Re γ‖₂` over the half-space ahead of the particle.
    pub leading: T,
    pub ratio: T,
}

/// Compares `‖Re γ_v‖₂` behind (`x·v̂ < 0`) and ahead of (`x·v̂ > 0`) the particle.
///
/// The real part carries the density wake; the imaginary (phase) part also
/// contains a symmetric dipolar back-flow and is left out.
pub fn wake_asymmetry<T: Real>(wave: &TravelingWaveProfile<T>) -> Result<WakeReport<T>> {
    let dir = wave
        .velocity
        .normalized()
        .ok_or_else(|| invalid("v", "wake needs a nonzero velocity"))?;
    let field = wave.profile.clone().into_position();
    let grid = field.grid;
    let sums: Vec<(T, T)> = field
        .values
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let (mut behind, mut ahead) = (T::zero(), T::zero());
            for (off, val) in chunk.iter().enumerate() {
                let along = grid.position(c * REDUCE_CHUNK + off).dot(&dir);
                let e = val.re * val.re;
                if along < T::zero() {
                    behind += e;
                } else if along > T::zero() {
                    ahead += e;
                }
            }
            (behind, ahead)
        })
        .collect();
    let dv = grid.cell_volume();
    let trailing = (stable_sum(&sums.iter().map(|s| s.0).collect::<Vec<_>>()) * dv).sqrt();
    let leading = (stable_sum(&sums.iter().map(|s| s.1).collect::<Vec<_>>()) * dv).sqrt();
    Ok(WakeReport {
        trailing,
        leading,
        ratio: trailing / leading,
    })
}
