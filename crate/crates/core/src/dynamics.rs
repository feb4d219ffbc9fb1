//! Time evolution of the coupled particle-field system.
//!
//! The Hamiltonian splits into the particle drift `|P|²/2M` and the rest
//! (field energy, interaction and external potential), whose flow at fixed
//! `X` is linear and solved exactly per Fourier mode. With `â`, `b̂` the
//! spectra of `Re β`, `Im β` and `Â = â - â_eq(X)`:
//!
//! ```text
//! Â(τ) = Â cos Ωτ + p b̂ sin(Ωτ)/Ω,    b̂(τ) = b̂ cos Ωτ - q Â sin(Ωτ)/Ω,
//! ```
//!
//! with `p = |k|²/2m`, `q = p + (κ/4)Φ̂`, `Ω = sqrt(pq)`, and the momentum
//! receives the exact time integral of the force along that orbit. A step is
//! the symmetric composition drift(τ/2)·field(τ)·drift(τ/2), which is
//! symplectic, second order and time reversible.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{FourierGrid, Model};
use crate::scalar::{lit, sinc, stable_sum, to_f64, Real};
use crate::spectral::{split_hermitian, ComplexField, Fft3, Space, ZeroMode, REDUCE_CHUNK};
use crate::statics::{is_nyquist_mode, static_spectrum, TranslationPhase};
use crate::vec3::Vec3;

/// Particle and field at one instant.
///
/// The field is kept as the spectra of its real and imaginary parts; the
/// particle position is stored unwrapped.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub t: T,
    pub x: Vec3<T>,
    pub p: Vec3<T>,
    pub grid: FourierGrid<T>,
    pub a_hat: Vec<Complex<T>>,
    pub b_hat: Vec<Complex<T>>,
}

impl<T: Real> SimState<T> {
    /// State with field `beta` (either space).
    pub fn new(grid: FourierGrid<T>, x: Vec3<T>, p: Vec3<T>, beta: &ComplexField<T>) -> Result<Self> {
        beta.check_grid(&grid)?;
        let spec = beta.clone().into_fourier();
        let (a_hat, b_hat) = split_hermitian(&grid, &spec.values);
        Ok(SimState {
            t: T::zero(),
            x,
            p,
            grid,
            a_hat,
            b_hat,
        })
    }

    /// State with `β ≡ 0`.
    pub fn vacuum(grid: FourierGrid<T>, x: Vec3<T>, p: Vec3<T>) -> Self {
        let zero = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        SimState {
            t: T::zero(),
            x,
            p,
            grid,
            a_hat: zero.clone(),
            b_hat: zero,
        }
    }

    /// Particle at rest at `x` dressed with its static field.
    pub fn dressed(model: &Model<T>, grid: FourierGrid<T>, x: Vec3<T>) -> Result<Self> {
        let (spec, _) = static_spectrum(model, &grid, x, ZeroMode::Project)?;
        let mut s = Self::vacuum(grid, x, Vec3::zero());
        s.a_hat = spec.values;
        Ok(s)
    }

    /// Position reduced to the box `[-L/2, L/2)³`.
    pub fn wrapped_position(&self) -> Vec3<T> {
        self.grid.wrap(self.x)
    }

    /// `β` in position space.
    pub fn beta(&self) -> ComplexField<T> {
        ComplexField {
            grid: self.grid,
            values: crate::spectral::combine_hermitian(&self.a_hat, &self.b_hat),
            space: Space::Fourier,
        }
        .into_position()
    }

    /// Image under the time-reversal involution `P → -P`, `β → conj β`.
    pub fn reversed(&self) -> Self {
        SimState {
            t: self.t,
            x: self.x,
            p: -self.p,
            grid: self.grid,
            a_hat: self.a_hat.clone(),
            b_hat: self.b_hat.iter().map(|b| -b).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.p.is_finite()
            && self
                .a_hat
                .par_iter()
                .chain(self.b_hat.par_iter())
                .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Absorbing layer near the faces of the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpongeConfig<T> {
    /// Shell width; the damping acts where `|x|_∞ > L/2 - width`.
    pub width: T,
    /// Peak damping rate.
    pub strength: T,
    /// Steps between applications.
    pub every: usize,
}

impl<T: Real> SpongeConfig<T> {
    /// Width `0.15L`, strength 2, applied every 5 steps.
    pub fn standard(grid: &FourierGrid<T>) -> Self {
        SpongeConfig {
            width: lit::<T>(0.15) * grid.length,
            strength: lit(2.0),
            every: 5,
        }
    }

    fn validate(&self, grid: &FourierGrid<T>) -> Result<()> {
        if !(self.width >= T::zero()) || self.width >= grid.length / lit(2.0) {
            return Err(Error::Sponge(format!(
                "width must lie in [0, L/2), got {:e}",
                to_f64(self.width)
            )));
        }
        if !(self.strength >= T::zero()) || !self.strength.is_finite() {
            return Err(Error::Sponge("strength must be finite and >= 0".into()));
        }
        if self.every == 0 {
            return Err(Error::Sponge("application interval must be at least one step".into()));
        }
        Ok(())
    }
}

/// Damping rate `strength·sin²(πu/2)`, `u` the depth into the shell in units of its width.
fn sponge_rate<T: Real>(cfg: &SpongeConfig<T>, grid: &FourierGrid<T>, x: Vec3<T>) -> T {
    if cfg.width == T::zero() {
        return T::zero();
    }
    let inner = grid.length / lit(2.0) - cfg.width;
    let u = ((x.max_abs() - inner) / cfg.width).max(T::zero()).min(T::one());
    let s = (T::FRAC_PI_2() * u).sin();
    cfg.strength * s * s
}

/// Exact split-step integrator for a fixed model, grid and time step.
pub struct Integrator<T: Real> {
    pub model: Model<T>,
    pub grid: FourierGrid<T>,
    pub dt: T,
    sponge: Option<(SpongeConfig<T>, Vec<T>)>,
    fft: Fft3<T>,
    kd_axis: Vec<T>,
    w_hat: Vec<T>,
    p: Vec<T>,
    q: Vec<T>,
    cos: Vec<T>,
    sin_over: Vec<T>,
    one_minus_cos_over: Vec<T>,
}

impl<T: Real> Integrator<T> {
    pub fn new(model: Model<T>, grid: FourierGrid<T>, dt: T, sponge: Option<SpongeConfig<T>>) -> Result<Self> {
        model.validate()?;
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(invalid("dt", "time step must be finite and > 0"));
        }
        let sponge = match sponge {
            Some(cfg) => {
                cfg.validate(&grid)?;
                let factor = dt * lit::<T>(cfg.every as f64);
                let mask = (0..grid.len())
                    .into_par_iter()
                    .map(|i| (-sponge_rate(&cfg, &grid, grid.position(i)) * factor).exp())
                    .collect();
                Some((cfg, mask))
            }
            None => None,
        };
        let tables: Vec<[T; 7]> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.kvec(i).norm();
                let p = model.kinetic_symbol(k);
                let q = model.restoring_symbol(k);
                let omega = (p * q).max(T::zero()).sqrt();
                let half = lit::<T>(0.5);
                let s2 = sinc(omega * dt * half);
                [
                    if is_nyquist_mode(&grid, i) {
                        T::zero()
                    } else {
                        model.w.fourier(k)
                    },
                    p,
                    q,
                    (omega * dt).cos(),
                    dt * sinc(omega * dt),
                    dt * dt * half * s2 * s2,
                    omega,
                ]
            })
            .collect();
        let col = |j: usize| tables.iter().map(|r| r[j]).collect::<Vec<T>>();
        Ok(Integrator {
            kd_axis: (0..grid.n).map(|i| grid.derivative_wavenumber(i)).collect(),
            fft: Fft3::new(grid.n),
            w_hat: col(0),
            p: col(1),
            q: col(2),
            cos: col(3),
            sin_over: col(4),
            one_minus_cos_over: col(5),
            model,
            grid,
            dt,
            sponge,
        })
    }

    pub fn sponge(&self) -> Option<&SpongeConfig<T>> {
        self.sponge.as_ref().map(|s| &s.0)
    }

    fn check_state(&self, state: &SimState<T>) -> Result<()> {
        if state.grid.ne(&self.grid) {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    /// Largest admissible step for the current momentum: `Δx M / (4|P|)`.
    pub fn drift_bound(&self, p: Vec3<T>) -> T {
        let speed = p.norm() / self.model.params.particle_mass;
        if speed == T::zero() {
            T::infinity()
        } else {
            self.grid.dx() / (lit::<T>(4.0) * speed)
        }
    }

    fn drift(&self, state: &mut SimState<T>, tau: T) {
        state.x += state.p * (tau / self.model.params.particle_mass);
    }

    /// Exact flow over `dt` of field, interaction and external force at fixed `X`.
    fn field_flow(&self, state: &mut SimState<T>) {
        let n = self.grid.n;
        let x = state.wrapped_position();
        let phase = TranslationPhase::new(&self.grid, x);
        let s = self.model.params.source_coefficient();
        let zero = Complex::new(T::zero(), T::zero());
        let partial: Vec<[T; 3]> = state
            .a_hat
            .par_chunks_mut(REDUCE_CHUNK)
            .zip(state.b_hat.par_chunks_mut(REDUCE_CHUNK))
            .enumerate()
            .map(|(c, (a_chunk, b_chunk))| {
                let mut acc = [T::zero(); 3];
                for (off, (a, b)) in a_chunk.iter_mut().zip(b_chunk.iter_mut()).enumerate() {
                    let idx = c * REDUCE_CHUNK + off;
                    let w = self.w_hat[idx];
                    let q = self.q[idx];
                    let ph = phase.at(idx);
                    let eq = if q > T::zero() { ph * (-s * w / q) } else { zero };
                    let dev = *a - eq;
                    let pb = *b * self.p[idx];
                    let integral = dev * self.sin_over[idx] + pb * self.one_minus_cos_over[idx];
                    let t = w * (ph.conj() * integral).im;
                    let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                    acc[0] += self.kd_axis[i] * t;
                    acc[1] += self.kd_axis[j] * t;
                    acc[2] += self.kd_axis[k] * t;
                    let cs = self.cos[idx];
                    *a = eq + dev * cs + pb * self.sin_over[idx];
                    *b = *b * cs - dev * (q * self.sin_over[idx]);
                }
                acc
            })
            .collect();
        let scale = self.model.params.nu * self.grid.mode_volume();
        let comp = |j: usize| stable_sum(&partial.iter().map(|p| p[j]).collect::<Vec<_>>()) * scale;
        let impulse = Vec3::new(comp(0), comp(1), comp(2));
        state.p += impulse + self.model.params.external_force * self.dt;
    }

    /// Advances `state` by one step of length `dt`.
    pub fn step_in_place(&self, state: &mut SimState<T>) -> Result<()> {
        self.check_state(state)?;
        let bound = self.drift_bound(state.p);
        if self.dt > bound {
            return Err(Error::Cfl {
                dt: to_f64(self.dt),
                bound: to_f64(bound),
            });
        }
        let half = self.dt / lit(2.0);
        self.drift(state, half);
        self.field_flow(state);
        self.drift(state, half);
        state.t += self.dt;
        if !(state.x.is_finite() && state.p.is_finite()) {
            return Err(Error::NonFinite { t: to_f64(state.t) });
        }
        Ok(())
    }

    pub fn step(&self, state: &SimState<T>) -> Result<SimState<T>> {
        let mut next = state.clone();
        self.step_in_place(&mut next)?;
        Ok(next)
    }

    /// Spectrum of `β_*(X)` as used by the flow (zero mode dropped when `q(0) = 0`).
    pub fn equilibrium(&self, x: Vec3<T>) -> Vec<Complex<T>> {
        let phase = TranslationPhase::new(&self.grid, self.grid.wrap(x));
        let s = self.model.params.source_coefficient();
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let q = self.q[i];
                if q > T::zero() {
                    phase.at(i) * (-s * self.w_hat[i] / q)
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            })
            .collect()
    }

    /// `β - β_*(X)` in position space.
    pub fn deviation(&self, state: &SimState<T>) -> ComplexField<T> {
        let eq = self.equilibrium(state.x);
        let values = state
            .a_hat
            .par_iter()
            .zip(state.b_hat.par_iter())
            .zip(eq.par_iter())
            .map(|((a, b), e)| (a - e) + Complex::new(-b.im, b.re))
            .collect();
        ComplexField {
            grid: self.grid,
            values,
            space: Space::Fourier,
        }
        .into_position_with(&self.fft)
    }

    /// `sup |β - β_*(X)|` over the ball of radius `r_obs` around the particle.
    pub fn ball_deviation(&self, state: &SimState<T>, r_obs: T) -> T {
        let dev = self.deviation(state);
        let x = state.wrapped_position();
        let r2 = r_obs * r_obs;
        dev.values
            .par_iter()
            .enumerate()
            .filter(|(i, _)| self.grid.min_image(self.grid.position(*i), x).norm_sq() <= r2)
            .map(|(_, v)| v.norm())
            .reduce(|| T::zero(), |a, b| a.max(b))
    }

    /// Damps `β - β_*(X)` in the sponge shell; the identity without a sponge.
    pub fn apply_sponge(&self, state: &mut SimState<T>) -> Result<()> {
        self.check_state(state)?;
        let Some((cfg, mask)) = &self.sponge else {
            return Ok(());
        };
        if cfg.width == T::zero() || cfg.strength == T::zero() {
            return Ok(());
        }
        let mut dev = self.deviation(state);
        dev.values
            .par_iter_mut()
            .zip(mask.par_iter())
            .for_each(|(v, m)| *v *= *m);
        let spec = dev.into_fourier_with(&self.fft);
        let (a, b) = split_hermitian(&self.grid, &spec.values);
        let eq = self.equilibrium(state.x);
        state.a_hat = a.into_par_iter().zip(eq.into_par_iter()).map(|(a, e)| a + e).collect();
        state.b_hat = b;
        Ok(())
    }

    /// Errors unless the observation ball around the particle stays clear of the sponge shell.
    pub fn check_observation_ball(&self, x: Vec3<T>, r_obs: T) -> Result<()> {
        if let Some((cfg, _)) = &self.sponge {
            if cfg.width > T::zero() {
                let reach = self.grid.wrap(x).max_abs() + r_obs;
                let inner = self.grid.length / lit(2.0) - cfg.width;
                if reach > inner {
                    return Err(Error::Sponge(format!(
                        "observation ball reaches {:e}, sponge starts at {:e}",
                        to_f64(reach),
                        to_f64(inner)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Conserved energy
    /// `|P|²/2M - F·X + (ν/2s)∫(q|â|² + p|b̂|²) + ν∫W^X Re β`.
    ///
    /// Refused while a sponge is configured.
    pub fn total_energy(&self, state: &SimState<T>) -> Result<T> {
        self.check_state(state)?;
        if self.sponge.is_some() {
            return Err(Error::SpongeActive);
        }
        Ok(self.energy_unchecked(state))
    }

    fn energy_unchecked(&self, state: &SimState<T>) -> T {
        let params = &self.model.params;
        let s = params.source_coefficient();
        let field_coef = if s == T::zero() { T::one() } else { params.nu / s };
        let phase = TranslationPhase::new(&self.grid, state.wrapped_position());
        let parts: Vec<(T, T)> = state
            .a_hat
            .par_chunks(REDUCE_CHUNK)
            .zip(state.b_hat.par_chunks(REDUCE_CHUNK))
            .enumerate()
            .map(|(c, (a_chunk, b_chunk))| {
                let (mut field, mut inter) = (T::zero(), T::zero());
                for (off, (a, b)) in a_chunk.iter().zip(b_chunk).enumerate() {
                    let idx = c * REDUCE_CHUNK + off;
                    field += self.q[idx] * a.norm_sqr() + self.p[idx] * b.norm_sqr();
                    inter += (phase.at(idx).conj() * a).re * self.w_hat[idx];
                }
                (field, inter)
            })
            .collect();
        let dk3 = self.grid.mode_volume();
        let field = stable_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>()) * dk3;
        let inter = stable_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>()) * dk3;
        state.p.norm_sq() / (lit::<T>(2.0) * params.particle_mass) - params.external_force.dot(&state.x)
            + field_coef * field / lit(2.0)
            + params.nu * inter
    }

    /// Largest group speed `dΩ/dk` on the grid (finite differences of the table).
    pub fn max_group_speed(&self) -> T {
        let k_max = self.grid.k_nyquist() * lit::<T>(3.0).sqrt();
        let h = k_max / lit(4096.0);
        let omega = |k: T| {
            (self.model.kinetic_symbol(k) * self.model.restoring_symbol(k))
                .max(T::zero())
                .sqrt()
        };
        (0..4096)
            .map(|i| {
                let k = h * lit::<T>(i as f64);
                (omega(k + h) - omega(k)) / h
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Run length, output cadence and observation radius of [`evolve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig<T> {
    pub t_max: T,
    /// Time between trajectory samples.
    pub record_interval: T,
    /// Radius of the observation ball for the field deviation.
    pub r_obs: T,
}

impl<T: Real> Default for EvolveConfig<T> {
    fn default() -> Self {
        EvolveConfig {
            t_max: lit(10.0),
            record_interval: lit(0.5),
            r_obs: lit(2.0),
        }
    }
}

/// Sampled observables of a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    /// Unwrapped positions.
    pub positions: Vec<Vec3<T>>,
    pub momenta: Vec<Vec3<T>>,
    pub momentum_norms: Vec<T>,
    /// Total energy; `None` while a sponge is active.
    pub energies: Vec<Option<T>>,
    /// `sup |β - β_*(X)|` over the observation ball.
    pub deviations: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    fn record(&mut self, integ: &Integrator<T>, state: &SimState<T>, r_obs: T) {
        self.times.push(state.t);
        self.positions.push(state.x);
        self.momenta.push(state.p);
        self.momentum_norms.push(state.p.norm());
        self.energies.push(if integ.sponge.is_some() {
            None
        } else {
            Some(integ.energy_unchecked(state))
        });
        self.deviations.push(integ.ball_deviation(state, r_obs));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs `integ` from `initial` for `cfg.t_max`, sampling the trajectory every
/// `cfg.record_interval` and applying the sponge at its cadence. `observer`
/// sees the state at every sample.
pub fn evolve_with<T: Real>(
    integ: &Integrator<T>,
    initial: SimState<T>,
    cfg: &EvolveConfig<T>,
    mut observer: impl FnMut(&SimState<T>) -> Result<()>,
) -> Result<(Trajectory<T>, SimState<T>)> {
    if !(cfg.t_max >= T::zero()) || !(cfg.record_interval > T::zero()) || !(cfg.r_obs >= T::zero()) {
        return Err(invalid(
            "evolve",
            "t_max >= 0, record_interval > 0 and r_obs >= 0 are required",
        ));
    }
    let steps = (cfg.t_max / integ.dt).round().to_usize().unwrap_or(0);
    let record_every = (cfg.record_interval / integ.dt).round().to_usize().unwrap_or(1).max(1);
    if integ.sponge.is_none() {
        let horizon = integ.grid.length / (lit::<T>(2.0) * integ.max_group_speed());
        if cfg.t_max > horizon {
            log::warn!(
                "run length {:e} exceeds the wrap-around horizon {:e} of the fastest waves; consider a sponge",
                to_f64(cfg.t_max),
                to_f64(horizon)
            );
        }
    }
    let mut state = initial;
    integ.check_observation_ball(state.x, cfg.r_obs)?;
    let mut traj = Trajectory::default();
    traj.record(integ, &state, cfg.r_obs);
    observer(&state)?;
    for n in 1..=steps {
        integ.step_in_place(&mut state)?;
        if let Some((sp, _)) = &integ.sponge {
            if n % sp.every == 0 {
                integ.apply_sponge(&mut state)?;
            }
        }
        if n % record_every == 0 || n == steps {
            if !state.is_finite() {
                return Err(Error::NonFinite { t: to_f64(state.t) });
            }
            integ.check_observation_ball(state.x, cfg.r_obs)?;
            traj.record(integ, &state, cfg.r_obs);
            observer(&state)?;
        }
    }
    Ok((traj, state))
}

pub fn evolve<T: Real>(
    integ: &Integrator<T>,
    initial: SimState<T>,
    cfg: &EvolveConfig<T>,
) -> Result<(Trajectory<T>, SimState<T>)> {
    evolve_with(integ, initial, cfg, |_| Ok(()))
}

/// `sup_{s ≥ t} v(s)` at every sample: the smallest non-increasing upper envelope.
pub fn upper_envelope<T: Real>(values: &[T]) -> Vec<T> {
    let mut out = values.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

/// Maxima of `values` over consecutive windows of `width` in `times`,
/// starting at `t_start`, as `(window centre, max)`.
pub fn windowed_maxima<T: Real>(times: &[T], values: &[T], t_start: T, width: T) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let mut lo = t_start;
    let end = times.last().copied().unwrap_or(t_start);
    while lo + width <= end + width * lit(1e-9) {
        let hi = lo + width;
        let m = times
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= lo && **t < hi)
            .map(|(_, v)| *v)
            .fold(T::neg_infinity(), |a, b| a.max(b));
        if m > T::neg_infinity() {
            out.push((lo + width / lit(2.0), m));
        }
        lo = hi;
    }
    out
}

/// Writes a field snapshot: `n` (u64), `L` (f64), `t` (f64), then `n³`
/// `(re, im)` pairs of f64, little-endian, C order.
pub fn write_snapshot<W: Write>(out: &mut W, field: &ComplexField<f64>, t: f64) -> std::io::Result<()> {
    let field = field.clone().into_position();
    out.write_all(&(field.grid.n as u64).to_le_bytes())?;
    out.write_all(&field.grid.length.to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.values.len() * 16);
    for v in &field.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, PotentialSpec};

    fn grid() -> FourierGrid<f64> {
        FourierGrid::new(16, 16.0).unwrap()
    }

    fn e_model() -> Model<f64> {
        Model::new(
            ModelParams::e_model(2.0, 0.7),
            PotentialSpec::gaussian(1.0, 1.0),
            PotentialSpec::gaussian(1.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn free_particle_moves_uniformly() {
        let m = Model::new(
            ModelParams::b_model(0.0),
            PotentialSpec::gaussian(1.0, 1.0),
            PotentialSpec::gaussian(1.0, 1.0),
        )
        .unwrap();
        let integ = Integrator::new(m, grid(), 0.01, None).unwrap();
        let mut s = SimState::vacuum(grid(), Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.2, -0.1, 0.05));
        for _ in 0..100 {
            integ.step_in_place(&mut s).unwrap();
        }
        let expect = Vec3::new(0.1, 0.0, 0.0) + Vec3::new(0.2, -0.1, 0.05) * s.t;
        assert!((s.x - expect).max_abs() < 1e-14);
    }

    #[test]
    fn vacuum_energy_is_kinetic() {
        let integ = Integrator::new(Model::default(), grid(), 0.01, None).unwrap();
        let s = SimState::vacuum(grid(), Vec3::zero(), Vec3::new(0.3, 0.0, 0.4));
        assert!((integ.total_energy(&s).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn dressed_state_is_stationary() {
        for model in [Model::default(), e_model()] {
            let integ = Integrator::new(model, grid(), 0.05, None).unwrap();
            let s0 = SimState::dressed(&model, grid(), Vec3::new(0.3, -0.2, 0.1)).unwrap();
            let mut s = s0.clone();
            for _ in 0..20 {
                integ.step_in_place(&mut s).unwrap();
            }
            assert!(s.p.max_abs() < 1e-12, "{:?}", s.p);
            assert!((s.x - s0.x).max_abs() < 1e-12);
            let drift = s
                .a_hat
                .iter()
                .zip(&s0.a_hat)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(drift < 1e-12);
        }
    }

    fn worst_energy_error(model: &Model<f64>, dt: f64) -> f64 {
        let integ = Integrator::new(*model, grid(), dt, None).unwrap();
        let mut s = SimState::vacuum(grid(), Vec3::zero(), Vec3::new(0.4, 0.1, 0.0));
        let e0 = integ.total_energy(&s).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..(3.0 / dt) as usize {
            integ.step_in_place(&mut s).unwrap();
            if i % 10 == 9 {
                worst = worst.max((integ.total_energy(&s).unwrap() - e0).abs());
            }
        }
        worst / e0.abs()
    }

    #[test]
    fn energy_error_is_second_order_for_both_normalizations() {
        for model in [Model::default(), e_model()] {
            let coarse = worst_energy_error(&model, 0.01);
            let fine = worst_energy_error(&model, 0.005);
            assert!(fine < 1e-5, "{fine}");
            let ratio = coarse / fine;
            assert!((3.2..4.8).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn energy_refused_with_sponge() {
        let g = grid();
        let integ = Integrator::new(Model::default(), g, 0.01, Some(SpongeConfig::standard(&g))).unwrap();
        let s = SimState::vacuum(g, Vec3::zero(), Vec3::zero());
        assert_eq!(integ.total_energy(&s), Err(Error::SpongeActive));
    }

    #[test]
    fn sponge_leaves_static_field_and_zero_width_is_identity() {
        let g = grid();
        let model = Model::default();
        let integ = Integrator::new(model, g, 0.05, Some(SpongeConfig::standard(&g))).unwrap();
        let s0 = SimState::dressed(&model, g, Vec3::new(0.2, 0.0, 0.0)).unwrap();
        let mut s = s0.clone();
        integ.apply_sponge(&mut s).unwrap();
        let d = s
            .a_hat
            .iter()
            .zip(&s0.a_hat)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);

        let mut cfg = SpongeConfig::standard(&g);
        cfg.width = 0.0;
        let integ = Integrator::new(model, g, 0.05, Some(cfg)).unwrap();
        let mut s = SimState::vacuum(g, Vec3::zero(), Vec3::zero());
        s.b_hat[3] = Complex::new(1.0, 0.0);
        let before = s.clone();
        integ.apply_sponge(&mut s).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn observation_ball_must_avoid_sponge() {
        let g = grid();
        let integ = Integrator::new(Model::default(), g, 0.05, Some(SpongeConfig::standard(&g))).unwrap();
        assert!(integ.check_observation_ball(Vec3::zero(), 2.0).is_ok());
        assert!(matches!(
            integ.check_observation_ball(Vec3::zero(), 6.0),
            Err(Error::Sponge(_))
        ));
    }

    #[test]
    fn drift_bound_is_enforced() {
        let integ = Integrator::new(Model::default(), grid(), 0.5, None).unwrap();
        let mut s = SimState::vacuum(grid(), Vec3::zero(), Vec3::new(2.0, 0.0, 0.0));
        assert!(matches!(integ.step_in_place(&mut s), Err(Error::Cfl { .. })));
    }

    #[test]
    fn envelope_and_windows() {
        let v = [1.0, 3.0, 2.0, 0.5, 1.0, 0.2];
        assert_eq!(upper_envelope(&v), vec![3.0, 3.0, 2.0, 1.0, 1.0, 0.2]);
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let w = windowed_maxima(&t, &v, 0.0, 2.0);
        assert_eq!(w, vec![(1.0, 3.0), (3.0, 2.0)]);
    }

    #[test]
    fn snapshot_layout() {
        let g = FourierGrid::<f64>::new(8, 4.0).unwrap();
        let f = ComplexField::from_position_fn(g, |x| Complex::new(x.x(), 1.0));
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 2.5).unwrap();
        assert_eq!(buf.len(), 24 + 512 * 16);
        assert_eq!(u64::from_le_bytes(buf[0..8].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 2.5);
    }
}
