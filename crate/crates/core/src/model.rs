//! Physical parameters, interaction potentials and the periodic computational box.
//!
//! Fourier convention throughout the crate is the unitary one,
//! `f̂(k) = (2π)^{-3/2} ∫ f(x) e^{-ik·x} d³x`, so that a unit gaussian `W`
//! with `σ = 1`, `A = 1` has `Ŵ(0) = 1`.
//!
//! The self-interaction term `Φ * Re β` of the field equation is applied as
//! the Fourier multiplier `Φ̂(k)`; with the unitary convention this is the
//! convolution with `(2π)^{-3/2} Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{from_usize, lit, Real};
use crate::vec3::Vec3;

/// Which member of the model hierarchy is being simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    /// Free condensate excitations (`κ = 0`); unit field source, force `ν`.
    B,
    /// Bogoliubov limit with self-interaction `κ > 0`; field source and force both `ν`.
    E,
}

/// Physical constants of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Tracer particle mass `M`.
    pub particle_mass: T,
    /// Boson mass `m`.
    pub field_mass: T,
    /// Self-interaction strength `κ` (Bogoliubov limit of `λρ`).
    pub kappa: T,
    /// Particle-field coupling `ν = g√ρ`.
    pub nu: T,
    /// Constant external force `F`, i.e. `V(X) = -F·X`.
    pub external_force: Vec3<T>,
    pub tag: ModelTag,
    /// Mean-field quantities of the underlying gas. Recorded only; the
    /// dynamics never reads them.
    pub lambda: Option<T>,
    pub g: Option<T>,
    pub rho: Option<T>,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        ModelParams {
            particle_mass: T::one(),
            field_mass: T::one(),
            kappa: T::zero(),
            nu: T::one(),
            external_force: Vec3::zero(),
            tag: ModelTag::B,
            lambda: None,
            g: None,
            rho: None,
        }
    }
}

impl<T: Real> ModelParams<T> {
    /// B-model with the given coupling and unit masses.
    pub fn b_model(nu: T) -> Self {
        ModelParams { nu, ..Self::default() }
    }

    /// E-model with the given self-interaction and coupling, unit masses.
    pub fn e_model(kappa: T, nu: T) -> Self {
        ModelParams {
            kappa,
            nu,
            tag: ModelTag::E,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("particle_mass", self.particle_mass)?;
        positive("field_mass", self.field_mass)?;
        if !(self.nu >= T::zero()) || !self.nu.is_finite() {
            return Err(invalid("nu", format!("must be >= 0 and finite, got {}", self.nu)));
        }
        if !(self.kappa >= T::zero()) || !self.kappa.is_finite() {
            return Err(invalid("kappa", format!("must be >= 0, got {}", self.kappa)));
        }
        if !self.external_force.is_finite() {
            return Err(invalid("external_force", "must be finite"));
        }
        match self.tag {
            ModelTag::B if self.kappa != T::zero() => Err(invalid(
                "tag",
                format!("the B-model requires kappa = 0, got kappa = {}", self.kappa),
            )),
            ModelTag::E if self.kappa == T::zero() => Err(invalid(
                "tag",
                "the E-model requires kappa > 0 (use tag B for kappa = 0)",
            )),
            _ => Ok(()),
        }
    }

    /// Coefficient `s` of the source term `s·W^X` in the field equation.
    ///
    /// The B-model uses the unit-source normalization (force `ν`, source 1);
    /// the E-model carries `ν` on both.
    pub fn source_coefficient(&self) -> T {
        match self.tag {
            ModelTag::B => T::one(),
            ModelTag::E => self.nu,
        }
    }

    /// External potential `V(X) = -F·X`.
    pub fn external_potential(&self, x: Vec3<T>) -> T {
        -self.external_force.dot(&x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialFamily {
    Gaussian,
    Delta,
}

impl PotentialFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialFamily::Gaussian => "gaussian",
            PotentialFamily::Delta => "delta",
        }
    }
}

/// Analytic, spherically symmetric potential (`W` or `Φ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec<T> {
    pub family: PotentialFamily,
    /// Gaussian width `σ`; ignored for the delta family.
    pub width: T,
    pub amplitude: T,
}

impl<T: Real> PotentialSpec<T> {
    /// `A·exp(-|x|²/(2σ²))`.
    pub fn gaussian(width: T, amplitude: T) -> Self {
        PotentialSpec {
            family: PotentialFamily::Gaussian,
            width,
            amplitude,
        }
    }

    /// `A·δ(x)`.
    pub fn delta(amplitude: T) -> Self {
        PotentialSpec {
            family: PotentialFamily::Delta,
            width: T::zero(),
            amplitude,
        }
    }

    /// Delta potential with `Φ̂ ≡ 1`.
    pub fn unit_delta() -> Self {
        Self::delta(T::TAU().powf(lit(1.5)))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        if self.family == PotentialFamily::Gaussian && !(self.width > T::zero() && self.width.is_finite()) {
            return Err(invalid(
                "width",
                format!("gaussian width must be positive, got {}", self.width),
            ));
        }
        Ok(())
    }

    /// Pointwise value `A·exp(-|x|²/(2σ²))`.
    pub fn value(&self, x: Vec3<T>) -> Result<T> {
        self.radial_value(x.norm())
    }

    pub fn radial_value(&self, r: T) -> Result<T> {
        match self.family {
            PotentialFamily::Gaussian => {
                let s = r / self.width;
                Ok(self.amplitude * (-(s * s) / lit(2.0)).exp())
            }
            PotentialFamily::Delta => Err(Error::UnsupportedEvaluation("delta")),
        }
    }

    /// Unitary continuum transform at `|k|`.
    pub fn fourier(&self, k: T) -> T {
        match self.family {
            PotentialFamily::Gaussian => {
                let s = self.width;
                let ks = k * s;
                self.amplitude * s * s * s * (-(ks * ks) / lit(2.0)).exp()
            }
            PotentialFamily::Delta => self.amplitude / T::TAU().powf(lit(1.5)),
        }
    }

    pub fn fourier_vec(&self, k: Vec3<T>) -> T {
        self.fourier(k.norm())
    }

    /// `d Φ̂ / d|k|`.
    pub fn fourier_radial_derivative(&self, k: T) -> T {
        match self.family {
            PotentialFamily::Gaussian => -self.width * self.width * k * self.fourier(k),
            PotentialFamily::Delta => T::zero(),
        }
    }

    /// `∫ W d³x = (2π)^{3/2} Ŵ(0)`.
    pub fn integral(&self) -> T {
        T::TAU().powf(lit(1.5)) * self.fourier(T::zero())
    }

    /// Length over which the potential is appreciable (0 for delta).
    pub fn range(&self) -> T {
        match self.family {
            PotentialFamily::Gaussian => self.width,
            PotentialFamily::Delta => T::zero(),
        }
    }
}

/// The full physical setup: parameters plus the particle-field potential
/// `W` and the field self-interaction `Φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model<T> {
    pub params: ModelParams<T>,
    pub w: PotentialSpec<T>,
    pub phi: PotentialSpec<T>,
}

impl<T: Real> Default for Model<T> {
    fn default() -> Self {
        Model {
            params: ModelParams::default(),
            w: PotentialSpec::gaussian(T::one(), T::one()),
            phi: PotentialSpec::gaussian(T::one(), T::one()),
        }
    }
}

impl<T: Real> Model<T> {
    pub fn new(params: ModelParams<T>, w: PotentialSpec<T>, phi: PotentialSpec<T>) -> Result<Self> {
        let m = Model { params, w, phi };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.w.validate()?;
        self.phi.validate()?;
        if self.w.family == PotentialFamily::Delta {
            return Err(invalid(
                "W",
                "the particle potential must be smooth; delta is only allowed for Phi",
            ));
        }
        if !(self.phi.amplitude > T::zero()) {
            return Err(invalid(
                "Phi",
                "the self-interaction must be of positive type (amplitude > 0)",
            ));
        }
        Ok(())
    }

    /// `|k|²/2m`, the kinetic symbol.
    pub fn kinetic_symbol(&self, k: T) -> T {
        k * k / (lit::<T>(2.0) * self.params.field_mass)
    }

    /// `|k|²/2m + (κ/4)Φ̂(k)`, the restoring symbol acting on `Re β`.
    pub fn restoring_symbol(&self, k: T) -> T {
        self.kinetic_symbol(k) + self.params.kappa / lit(4.0) * self.phi.fourier(k)
    }
}

/// Periodic cube `[-L/2, L/2)³` with `n` points per axis.
///
/// Grid index `i` sits at coordinate `iΔx` wrapped into `[-L/2, L/2)`, so the
/// origin is index 0 and the discrete transform needs no phase correction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid<T> {
    pub n: usize,
    pub length: T,
}

impl<T: Real> FourierGrid<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid("n", format!("must be a power of two >= 8, got {n}")));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(invalid("box_length", format!("must be positive, got {length}")));
        }
        Ok(FourierGrid { n, length })
    }

    /// Number of grid points `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> T {
        self.length / from_usize(self.n)
    }

    pub fn dk(&self) -> T {
        T::TAU() / self.length
    }

    /// Largest representable wavenumber per axis, `πn/L`.
    pub fn k_nyquist(&self) -> T {
        T::PI() * from_usize(self.n) / self.length
    }

    pub fn cell_volume(&self) -> T {
        let dx = self.dx();
        dx * dx * dx
    }

    pub fn mode_volume(&self) -> T {
        let dk = self.dk();
        dk * dk * dk
    }

    /// Signed integer frequency of axis index `i`.
    pub fn frequency(&self, i: usize) -> isize {
        if i < self.n / 2 {
            i as isize
        } else {
            i as isize - self.n as isize
        }
    }

    /// Coordinate of axis index `i`.
    pub fn coord(&self, i: usize) -> T {
        T::from_isize(self.frequency(i)).unwrap() * self.dx()
    }

    /// Wavenumber of axis index `i`.
    pub fn wavenumber(&self, i: usize) -> T {
        T::from_isize(self.frequency(i)).unwrap() * self.dk()
    }

    /// Wavenumber used for odd (derivative) operators: zero at the
    /// unpaired Nyquist index.
    pub fn derivative_wavenumber(&self, i: usize) -> T {
        if i == self.n / 2 {
            T::zero()
        } else {
            self.wavenumber(i)
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    /// Flat index of the mode `-k` (or the mirrored point `-x`).
    pub fn negated(&self, idx: usize) -> usize {
        let n = self.n;
        let (i, j, k) = self.unravel(idx);
        self.index((n - i) % n, (n - j) % n, (n - k) % n)
    }

    pub fn position(&self, idx: usize) -> Vec3<T> {
        let (i, j, k) = self.unravel(idx);
        Vec3::new(self.coord(i), self.coord(j), self.coord(k))
    }

    pub fn kvec(&self, idx: usize) -> Vec3<T> {
        let (i, j, k) = self.unravel(idx);
        Vec3::new(self.wavenumber(i), self.wavenumber(j), self.wavenumber(k))
    }

    pub fn derivative_kvec(&self, idx: usize) -> Vec3<T> {
        let (i, j, k) = self.unravel(idx);
        Vec3::new(
            self.derivative_wavenumber(i),
            self.derivative_wavenumber(j),
            self.derivative_wavenumber(k),
        )
    }

    /// Axis wavenumbers in index order.
    pub fn wavenumbers(&self) -> Vec<T> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Axis coordinates in index order.
    pub fn coords(&self) -> Vec<T> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Minimum-image displacement `x - center` on the torus.
    pub fn min_image(&self, x: Vec3<T>, center: Vec3<T>) -> Vec3<T> {
        let l = self.length;
        (x - center).map(|d| d - l * (d / l).round())
    }

    /// Wraps a position into the fundamental cell `[-L/2, L/2)³`.
    pub fn wrap(&self, x: Vec3<T>) -> Vec3<T> {
        self.min_image(x, Vec3::zero())
    }
}

/// Evaluates a potential at a point. Delta potentials have no pointwise value.
pub fn eval_potential<T: Real>(spec: &PotentialSpec<T>, x: Vec3<T>) -> Result<T> {
    spec.value(x)
}

/// Exact unitary transform of a potential at wave vector `k`.
pub fn potential_fourier<T: Real>(spec: &PotentialSpec<T>, k: Vec3<T>) -> T {
    spec.fourier_vec(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_point_values() {
        let w = PotentialSpec::gaussian(1.0, 1.0);
        assert_eq!(eval_potential(&w, Vec3::zero()).unwrap(), 1.0);
        let r = 2.0_f64.sqrt();
        assert_relative_eq!(
            eval_potential(&w, Vec3::new(0.0, r, 0.0)).unwrap(),
            (-1.0_f64).exp(),
            max_relative = 1e-15
        );
        let w2 = PotentialSpec::gaussian(2.0, 3.0);
        let direct = 3.0 * (-(2.0_f64 * 2.0) / (2.0 * 2.0 * 2.0)).exp();
        assert_relative_eq!(
            eval_potential(&w2, Vec3::new(2.0, 0.0, 0.0)).unwrap(),
            direct,
            max_relative = 1e-15
        );
        assert_relative_eq!(direct, 3.0 * (-0.5_f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn delta_has_no_point_value() {
        let d = PotentialSpec::<f64>::delta(1.0);
        assert_eq!(
            eval_potential(&d, Vec3::zero()),
            Err(Error::UnsupportedEvaluation("delta"))
        );
    }

    #[test]
    fn transform_values() {
        let w = PotentialSpec::gaussian(1.0_f64, 1.0);
        assert_relative_eq!(potential_fourier(&w, Vec3::zero()), 1.0, max_relative = 1e-15);
        let d = PotentialSpec::delta(1.0_f64);
        assert_relative_eq!(
            potential_fourier(&d, Vec3::new(3.0, -1.0, 2.0)),
            0.063_493_635_934_240_97,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            PotentialSpec::<f64>::unit_delta().fourier(7.0),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn b_tag_requires_zero_kappa() {
        let p = ModelParams::<f64> {
            kappa: 0.5,
            ..Default::default()
        };
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("B-model requires kappa = 0"), "{err}");
        assert!(ModelParams::<f64>::e_model(0.5, 1.0).validate().is_ok());
        let mut e = ModelParams::<f64>::e_model(0.0, 1.0);
        e.kappa = 0.0;
        assert!(e.validate().is_err());
    }

    #[test]
    fn model_rejects_delta_w_and_negative_masses() {
        let m = Model::<f64> {
            w: PotentialSpec::delta(1.0),
            ..Default::default()
        };
        assert!(m.validate().is_err());
        let mut m = Model::<f64>::default();
        m.params.particle_mass = -1.0;
        assert!(m.validate().is_err());
        let mut m = Model::<f64>::default();
        m.params.nu = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn grid_layout() {
        assert!(FourierGrid::<f64>::new(4, 1.0).is_err());
        assert!(FourierGrid::<f64>::new(24, 1.0).is_err());
        let g = FourierGrid::new(8, 8.0_f64).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.coord(0), 0.0);
        assert_eq!(g.coord(7), -1.0);
        assert_eq!(g.coord(4), -4.0);
        let zero_modes = (0..g.len()).filter(|&i| g.kvec(i).norm_sq() == 0.0).count();
        assert_eq!(zero_modes, 1);
        for idx in [0, 1, 9, 100, 511] {
            assert_eq!(g.negated(g.negated(idx)), idx);
            if g.derivative_kvec(idx) == g.kvec(idx) {
                assert_eq!(g.kvec(g.negated(idx)), -g.kvec(idx));
            }
        }
        let d = g.min_image(Vec3::new(3.5, 0.0, 0.0), Vec3::new(-3.5, 0.0, 0.0));
        assert_relative_eq!(d.x(), -1.0);
    }
}
