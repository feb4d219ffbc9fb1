//! Run configuration: TOML schema, defaults and validation.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hamfric_core::dynamics::{EvolveConfig, SpongeConfig};
use hamfric_core::twave::ResonanceCutoff;
use hamfric_core::{DispersionForm, Grid, Model, ModelParams, ModelTag, Potential, Vector, ZeroMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub potential: PotentialSection,
    pub grid: GridSection,
    /// Not part of the echo or the hash: the same run written to two
    /// directories produces identical manifests.
    #[serde(default, skip_serializing)]
    pub output: OutputSection,
    #[serde(default)]
    pub dispersion: DispersionSection,
    #[serde(default, rename = "static")]
    pub statics: StaticSection,
    #[serde(default)]
    pub twave: TwaveSection,
    #[serde(default)]
    pub friction_curve: FrictionCurveSection,
    #[serde(default)]
    pub forced: ForcedSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub reduced: ReducedSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub particle_mass: f64,
    pub field_mass: f64,
    pub kappa: f64,
    pub nu: f64,
    pub force: [f64; 3],
    /// Inferred from `kappa` when absent: B for 0, E otherwise.
    pub tag: Option<ModelTag>,
    pub lambda: Option<f64>,
    pub g: Option<f64>,
    pub rho: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            particle_mass: 1.0,
            field_mass: 1.0,
            kappa: 0.0,
            nu: 1.0,
            force: [0.0; 3],
            tag: None,
            lambda: None,
            g: None,
            rho: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Delta,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialEntry {
    pub family: Family,
    pub sigma: f64,
    pub amplitude: f64,
}

impl Default for PotentialEntry {
    fn default() -> Self {
        PotentialEntry {
            family: Family::Gaussian,
            sigma: 1.0,
            amplitude: 1.0,
        }
    }
}

impl PotentialEntry {
    fn spec(&self) -> Potential {
        match self.family {
            Family::Gaussian => Potential::gaussian(self.sigma, self.amplitude),
            Family::Delta => Potential::delta(self.amplitude),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default, rename = "W")]
    pub w: PotentialEntry,
    #[serde(default, rename = "Phi")]
    pub phi: PotentialEntry,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub box_length: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionSection {
    /// Largest wavenumber; the grid Nyquist wavenumber when absent.
    pub k_max: Option<f64>,
    pub samples: usize,
    pub form: DispersionForm,
}

impl Default for DispersionSection {
    fn default() -> Self {
        DispersionSection {
            k_max: None,
            samples: 512,
            form: DispersionForm::Dynamics,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticSection {
    pub center: [f64; 3],
    pub zero_mode: ZeroMode,
}

impl Default for StaticSection {
    fn default() -> Self {
        StaticSection {
            center: [0.0; 3],
            zero_mode: ZeroMode::Project,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwaveSection {
    pub speed: f64,
    pub direction: [f64; 3],
    /// Absorption parameter of the written profile; `0.3|v|` above the
    /// critical speed and 0 below it when absent.
    pub epsilon: Option<f64>,
    /// Schedule for the friction estimate; the default schedule when absent.
    pub epsilon_schedule: Option<Vec<f64>>,
}

impl Default for TwaveSection {
    fn default() -> Self {
        TwaveSection {
            speed: 1.5,
            direction: [1.0, 0.0, 0.0],
            epsilon: None,
            epsilon_schedule: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawChoice {
    /// Closed form for `κ = 0`, spectral otherwise.
    Auto,
    Closed,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrictionCurveSection {
    pub law: LawChoice,
    pub direction: [f64; 3],
    /// Explicit speeds; overrides the range below.
    pub speeds: Option<Vec<f64>>,
    pub speed_min: Option<f64>,
    pub speed_max: Option<f64>,
    pub count: usize,
    pub spacing: Option<Spacing>,
    /// Calibration constant of the closed form.
    pub calibration: f64,
    pub cutoff: ResonanceCutoff,
}

impl Default for FrictionCurveSection {
    fn default() -> Self {
        FrictionCurveSection {
            law: LawChoice::Auto,
            direction: [1.0, 0.0, 0.0],
            speeds: None,
            speed_min: None,
            speed_max: None,
            count: 41,
            spacing: None,
            calibration: 1.0,
            cutoff: ResonanceCutoff::TwoPiSpeed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcedSection {
    /// Applied force magnitude.
    pub force: Option<f64>,
    /// Applied force as a multiple of the curve maximum.
    pub force_fraction: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpongeSection {
    pub enabled: bool,
    /// Shell width as a fraction of the box length.
    pub width_fraction: f64,
    pub strength: f64,
    pub every: usize,
}

impl Default for SpongeSection {
    fn default() -> Self {
        SpongeSection {
            enabled: true,
            width_fraction: 0.15,
            strength: 2.0,
            every: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialField {
    Vacuum,
    Dressed,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_max: f64,
    pub record_interval: f64,
    pub r_obs: f64,
    pub x0: [f64; 3],
    pub p0: [f64; 3],
    pub initial_field: InitialField,
    pub sponge: SpongeSection,
    /// Time between field snapshots; none are written when absent.
    pub snapshot_interval: Option<f64>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            dt: 0.05,
            t_max: 40.0,
            record_interval: 0.25,
            r_obs: 2.0,
            x0: [0.0; 3],
            p0: [0.1, 0.0, 0.0],
            initial_field: InitialField::Vacuum,
            sponge: SpongeSection::default(),
            snapshot_interval: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReducedSection {
    pub v0: [f64; 3],
    pub t_end: f64,
    pub rtol: f64,
    pub calibration: f64,
    pub cutoff: ResonanceCutoff,
    /// Fit window; the last decade `[t_end/10, t_end]` when absent.
    pub window: Option<[f64; 2]>,
}

impl Default for ReducedSection {
    fn default() -> Self {
        ReducedSection {
            v0: [1.0, 0.0, 0.0],
            t_end: 1e4,
            rtol: 1e-9,
            calibration: 1.0,
            cutoff: ResonanceCutoff::TwoPiSpeed,
            window: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg: Config = toml::from_str(text)?;
        if cfg.model.tag.is_none() {
            cfg.model.tag = Some(if cfg.model.kappa == 0.0 {
                ModelTag::B
            } else {
                ModelTag::E
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.grid()?;
        if self.forced.force.is_some() && self.forced.force_fraction.is_some() {
            bail!("[forced] sets both `force` and `force_fraction`; choose one");
        }
        if self.friction_curve.count < 3 && self.friction_curve.speeds.is_none() {
            bail!("[friction_curve] count must be at least 3");
        }
        if self.friction_curve.direction.iter().all(|c| *c == 0.0) || self.twave.direction.iter().all(|c| *c == 0.0) {
            bail!("directions must be nonzero vectors");
        }
        if let Some(s) = self.evolve.snapshot_interval {
            if !(s > 0.0) {
                bail!("[evolve] snapshot_interval must be positive");
            }
        }
        if self.dispersion.samples == 0 {
            bail!("[dispersion] samples must be positive");
        }
        let widest = [self.potential.w, self.potential.phi]
            .iter()
            .filter(|p| p.family == Family::Gaussian)
            .fold(1.0f64, |acc, p| acc.max(p.sigma));
        if self.grid.box_length < 12.0 * widest {
            log::warn!(
                "box length {} is below 12 potential widths ({}); periodic images may be visible",
                self.grid.box_length,
                12.0 * widest
            );
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model<f64>> {
        let m = &self.model;
        let params = ModelParams {
            particle_mass: m.particle_mass,
            field_mass: m.field_mass,
            kappa: m.kappa,
            nu: m.nu,
            external_force: Vector::new(m.force[0], m.force[1], m.force[2]),
            tag: m.tag.unwrap_or(ModelTag::B),
            lambda: m.lambda,
            g: m.g,
            rho: m.rho,
        };
        Ok(Model::new(params, self.potential.w.spec(), self.potential.phi.spec())?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.n, self.grid.box_length)?)
    }

    pub fn sponge(&self, grid: &Grid) -> Option<SpongeConfig<f64>> {
        let s = &self.evolve.sponge;
        s.enabled.then_some(SpongeConfig {
            width: s.width_fraction * grid.length,
            strength: s.strength,
            every: s.every,
        })
    }

    pub fn evolve_config(&self) -> EvolveConfig<f64> {
        EvolveConfig {
            t_max: self.evolve.t_max,
            record_interval: self.evolve.record_interval,
            r_obs: self.evolve.r_obs,
        }
    }

    /// SHA-256 of the resolved configuration, overrides included.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

pub fn vector(v: [f64; 3]) -> Vector {
    Vector::new(v[0], v[1], v[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = Config::parse("[grid]\nn = 16\nbox_length = 8.0\n").unwrap();
        let m = cfg.model().unwrap();
        assert_eq!(m.params.particle_mass, 1.0);
        assert_eq!(m.params.nu, 1.0);
        assert_eq!(m.params.tag, ModelTag::B);
        assert_eq!(m.w, Potential::gaussian(1.0, 1.0));
    }

    #[test]
    fn b_model_with_kappa_is_rejected() {
        let err = Config::parse("[model]\nkappa = 0.5\ntag = \"B\"\n[grid]\nn = 16\nbox_length = 8.0\n").unwrap_err();
        assert!(format!("{err:#}").contains("B-model"), "{err:#}");
    }

    #[test]
    fn unknown_keys_and_syntax_errors_are_reported() {
        assert!(Config::parse("[grid]\nn = 16\nbox_length = 8.0\nspeed = 1\n").is_err());
        let err = Config::parse("[grid]\nn = = 16\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }

    #[test]
    fn kappa_selects_the_e_model() {
        let cfg = Config::parse("[model]\nkappa = 2.0\n[grid]\nn = 16\nbox_length = 8.0\n").unwrap();
        assert_eq!(cfg.model().unwrap().params.tag, ModelTag::E);
    }

    #[test]
    fn hash_tracks_the_resolved_values() {
        let a = Config::parse("[grid]\nn = 16\nbox_length = 8.0\n").unwrap();
        let b = Config::parse("[grid]\nn = 16\nbox_length = 8.0\n[model]\nnu = 1.0\n").unwrap();
        let c = Config::parse("[grid]\nn = 16\nbox_length = 8.0\n[model]\nnu = 2.0\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
