//! The effective one-particle law `M v̇ = F_v` with the closed-form friction,
//! its adaptive integration, and power-law decay fits.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fit::fit_line;
use crate::model::Model;
use crate::scalar::{lit, to_f64, Real};
use crate::twave::{friction_force_closed, ResonanceCutoff};
use crate::vec3::Vec3;

/// Friction law used by the reduced equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedLaw<T> {
    pub calibration: T,
    pub cutoff: ResonanceCutoff,
}

impl<T: Real> Default for ReducedLaw<T> {
    fn default() -> Self {
        ReducedLaw {
            calibration: T::one(),
            cutoff: ResonanceCutoff::TwoPiSpeed,
        }
    }
}

/// Acceleration `F_v / M`; zero at `v = 0`.
pub fn reduced_rhs<T: Real>(model: &Model<T>, law: &ReducedLaw<T>, v: Vec3<T>) -> Result<Vec3<T>> {
    Ok(friction_force_closed(model, v, law.calibration, law.cutoff)? / model.params.particle_mass)
}

/// Accepted steps of [`integrate_reduced`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct ReducedSeries<T> {
    pub times: Vec<T>,
    pub velocities: Vec<Vec3<T>>,
    pub speeds: Vec<T>,
    pub rejected_steps: usize,
}

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the reduced equation from `v0` over `[0, t_end]` with an
/// embedded Dormand-Prince 5(4) pair at relative tolerance `rtol`.
pub fn integrate_reduced<T: Real>(
    model: &Model<T>,
    law: &ReducedLaw<T>,
    v0: Vec3<T>,
    t_end: T,
    rtol: T,
) -> Result<ReducedSeries<T>> {
    if !(v0.norm() > T::zero()) {
        return Err(invalid("v0", "initial speed must be positive"));
    }
    if !(t_end > T::zero()) || !(rtol > T::zero()) {
        return Err(invalid("t_end", "t_end and rtol must be positive"));
    }
    let f = |v: Vec3<T>| reduced_rhs(model, law, v);
    let atol = rtol * lit(1e-15) * v0.norm();
    let mut series = ReducedSeries {
        times: vec![T::zero()],
        velocities: vec![v0],
        speeds: vec![v0.norm()],
        rejected_steps: 0,
    };
    let (mut t, mut v) = (T::zero(), v0);
    let mut k1 = f(v)?;
    let accel = k1.norm();
    let mut h = if accel > T::zero() {
        (lit::<T>(1e-3) * v.norm() / accel).min(t_end)
    } else {
        t_end
    };
    let min_step = lit::<T>(1e-14);
    while t < t_end {
        h = h.min(t_end - t);
        let mut k = [k1; 7];
        for s in 1..7 {
            let mut y = v;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = lit::<T>(A[s][j]);
                if a != T::zero() {
                    y += *kj * (h * a);
                }
            }
            k[s] = f(y)?;
        }
        let mut y5 = v;
        let mut err = Vec3::zero();
        for s in 0..7 {
            y5 += k[s] * (h * lit(B5[s]));
            err += k[s] * (h * lit(B5[s] - B4[s]));
        }
        let mut ratio = T::zero();
        for i in 0..3 {
            let scale = atol + rtol * v[i].abs().max(y5[i].abs());
            ratio = ratio.max(err[i].abs() / scale);
        }
        if ratio <= T::one() {
            t += h;
            v = y5;
            k1 = k[6];
            series.times.push(t);
            series.velocities.push(v);
            series.speeds.push(v.norm());
        } else {
            series.rejected_steps += 1;
        }
        let factor = if ratio == T::zero() {
            lit(5.0)
        } else {
            (lit::<T>(0.9) * ratio.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
        };
        h *= factor;
        if h < min_step * t.max(T::one()) {
            return Err(Error::Tolerance {
                t: to_f64(t),
                step: to_f64(h),
            });
        }
    }
    Ok(series)
}

/// Japanese bracket `⟨t⟩ = sqrt(1 + t²)`.
pub fn japanese_bracket<T: Real>(t: T) -> T {
    (T::one() + t * t).sqrt()
}

/// Fitted power law `value ~ ⟨t⟩^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit<T> {
    pub exponent: T,
    pub stderr: T,
    pub samples: usize,
    pub window: (T, T),
}

/// Minimum number of samples inside the fit window.
pub const MIN_FIT_SAMPLES: usize = 20;

/// Least-squares slope of `log value` against `log⟨t⟩` over `window`.
pub fn fit_decay_exponent<T: Real>(series: &[(T, T)], window: (T, T)) -> Result<DecayFit<T>> {
    let inside: Vec<(T, T)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in the window, at least {MIN_FIT_SAMPLES} are required",
            inside.len()
        )));
    }
    if let Some((t, v)) = inside.iter().find(|(_, v)| !(*v > T::zero())) {
        return Err(Error::Fit(format!(
            "non-positive value {:e} at t = {:e}",
            to_f64(*v),
            to_f64(*t)
        )));
    }
    let x: Vec<T> = inside.iter().map(|(t, _)| japanese_bracket(*t).ln()).collect();
    let y: Vec<T> = inside.iter().map(|(_, v)| v.ln()).collect();
    let fit = fit_line(&x, &y)?;
    Ok(DecayFit {
        exponent: fit.slope,
        stderr: fit.slope_stderr,
        samples: inside.len(),
        window,
    })
}

/// Trapezoidal integrals of `values` over consecutive decades
/// `[t0·10^j, t0·10^{j+1}]`, `j = 0..decades`.
pub fn decade_integrals<T: Real>(times: &[T], values: &[T], t0: T, decades: usize) -> Vec<T> {
    (0..decades)
        .map(|j| {
            let lo = t0 * lit::<T>(10.0).powi(j as i32);
            let hi = lo * lit(10.0);
            let mut acc = T::zero();
            for i in 1..times.len() {
                let (a, b) = (times[i - 1].max(lo), times[i].min(hi));
                if b > a {
                    let span = times[i] - times[i - 1];
                    let at = |t: T| values[i - 1] + (values[i] - values[i - 1]) * (t - times[i - 1]) / span;
                    acc += (at(a) + at(b)) / lit(2.0) * (b - a);
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_vanishes_at_rest_and_is_odd() {
        let m = Model::<f64>::default();
        let law = ReducedLaw::default();
        assert_eq!(reduced_rhs(&m, &law, Vec3::zero()).unwrap(), Vec3::zero());
        let v = Vec3::new(0.3, -0.2, 0.1);
        let a = reduced_rhs(&m, &law, v).unwrap();
        let b = reduced_rhs(&m, &law, -v).unwrap();
        assert!((a + b).max_abs() < 1e-15);
        assert!(a.dot(&v) < 0.0);
    }

    #[test]
    fn exact_power_laws_are_recovered() {
        let s: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = 10f64.powf(i as f64 / 10.0);
                (t, 3.0 * japanese_bracket(t).powf(-1.2))
            })
            .collect();
        let fit = fit_decay_exponent(&s, (0.0, 1e6)).unwrap();
        assert!((fit.exponent + 1.2).abs() < 1e-6);
        let short: Vec<(f64, f64)> = s[..10].to_vec();
        assert!(fit_decay_exponent(&short, (0.0, 1e6)).is_err());
        let mut bad = s.clone();
        bad[5].1 = 0.0;
        assert!(fit_decay_exponent(&bad, (0.0, 1e6)).is_err());
    }

    #[test]
    fn speed_decreases_monotonically_along_a_fixed_direction() {
        let m = Model::<f64>::default();
        let v0 = Vec3::new(0.6, 0.0, 0.8);
        let s = integrate_reduced(&m, &ReducedLaw::default(), v0, 100.0, 1e-9).unwrap();
        assert!(s.speeds.windows(2).all(|w| w[1] < w[0]));
        for v in &s.velocities {
            let cos = v.dot(&v0) / (v.norm() * v0.norm());
            assert!((cos - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decade_integrals_of_reciprocal_are_equal() {
        let t: Vec<f64> = (0..=4000).map(|i| 10f64.powf(i as f64 / 1000.0)).collect();
        let v: Vec<f64> = t.iter().map(|t| 1.0 / t).collect();
        let d = decade_integrals(&t, &v, 1.0, 3);
        for x in d {
            assert!((x - 10f64.ln()).abs() < 1e-4);
        }
    }
}
