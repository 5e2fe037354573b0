//! Experiment configuration files.
//!
//! One TOML file per experiment. Every physical quantity carries its unit in
//! the key name. Sections not used by the chosen `kind` are rejected.

use serde::{Deserialize, Serialize};

use nvmech::ensemble::{DepthModel, EnsembleConfig, NuclearAverage, PsfModel};
use nvmech::hamiltonian::{FieldConfig, QubitPair, SpinParameters};
use nvmech::pulse::{Integrator, IntegratorOptions, NoiseDistribution, NoiseModel};
use nvmech::quadrature::QuadratureOptions;
use nvmech::resonator::{RingModel, StandingWave};
use nvmech::units::{mhz_per_mpa_to_angular, mhz_to_angular, mpa_to_pa, um_to_m, us_to_s};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    RabiLowq,
    RabiHighq,
    DepthSweep,
    RamseyMech,
    RamseyDq,
    RamseySqMinus,
    RamseySqPlus,
    Hahn,
    StressConvert,
    Fit,
    Spectrum,
    PulseArea,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::RabiLowq => "rabi-lowq",
            Kind::RabiHighq => "rabi-highq",
            Kind::DepthSweep => "depth-sweep",
            Kind::RamseyMech => "ramsey-mech",
            Kind::RamseyDq => "ramsey-dq",
            Kind::RamseySqMinus => "ramsey-sq-minus",
            Kind::RamseySqPlus => "ramsey-sq-plus",
            Kind::Hahn => "hahn",
            Kind::StressConvert => "stress-convert",
            Kind::Fit => "fit",
            Kind::Spectrum => "spectrum",
            Kind::PulseArea => "pulse-area",
        }
    }

    /// `(required, optional)` sections besides the metadata keys.
    fn sections(self) -> (Vec<&'static str>, Vec<&'static str>) {
        let physics = vec![
            "spin", "fields", "frame", "wave", "depth", "noise", "nuclear", "quadrature", "integrator", "shots",
        ];
        let with = |extra: &[&'static str]| physics.iter().chain(extra).copied().collect::<Vec<_>>();
        match self {
            Kind::RabiLowq => (vec!["seed", "wave", "depth", "sweep"], with(&["rabi"])),
            Kind::RabiHighq => (vec!["seed", "wave", "depth", "ring", "sweep"], with(&["window"])),
            Kind::DepthSweep => (vec!["seed", "wave", "depth", "ring", "depth_sweep"], with(&[])),
            Kind::RamseyMech => (vec!["seed", "wave", "depth", "sweep", "ramsey"], with(&[])),
            Kind::RamseyDq | Kind::RamseySqMinus | Kind::RamseySqPlus => (vec!["seed", "sweep", "ramsey"], with(&[])),
            Kind::Hahn => (vec!["seed", "sweep", "hahn"], with(&[])),
            Kind::StressConvert => (vec!["stress"], vec![]),
            Kind::Fit => (vec!["fit"], vec![]),
            Kind::Spectrum => (vec!["spectrum"], vec![]),
            Kind::PulseArea => (vec!["ring", "sweep"], vec!["window"]),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub name: Option<String>,
    pub figure: Option<String>,
    pub description: Option<String>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub output: Option<OutputSection>,
    pub spin: Option<SpinSection>,
    pub fields: Option<FieldsSection>,
    pub frame: Option<FrameSection>,
    pub wave: Option<WaveSection>,
    pub depth: Option<DepthSection>,
    pub noise: Option<NoiseSection>,
    pub nuclear: Option<NuclearSection>,
    pub quadrature: Option<QuadratureSection>,
    pub integrator: Option<IntegratorSection>,
    pub ring: Option<RingSection>,
    pub sweep: Option<GridSection>,
    pub rabi: Option<RabiSection>,
    pub window: Option<WindowSection>,
    pub depth_sweep: Option<DepthSweepSection>,
    pub ramsey: Option<RamseySection>,
    pub hahn: Option<HahnSection>,
    pub stress: Option<StressSection>,
    pub fit: Option<FitSection>,
    pub spectrum: Option<SpectrumSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub stem: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSection {
    pub d0_mhz: Option<f64>,
    pub gamma_mhz_per_gauss: Option<f64>,
    pub eps_perp_mhz_per_mpa: Option<f64>,
    pub eps_par_mhz_per_mpa: Option<f64>,
    pub p_mhz: Option<f64>,
    pub a_par_mhz: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldsSection {
    pub b_par_gauss: f64,
    pub b_perp_gauss: f64,
    pub sigma_par_mpa: f64,
}

/// Transition detunings `(E − E₀) − ω` of the `m_I = 0` lines.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSection {
    pub plus_detuning_khz: f64,
    pub minus_detuning_khz: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub omega_mech_mhz: f64,
    pub wavelength_um: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DepthSection {
    Psf { z0_um: f64, fwhm0_um: f64, slope: f64 },
    Fixed { z_um: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub t2_star_us: f64,
    #[serde(default = "default_distribution")]
    pub distribution: NoiseDistribution,
    /// Qubit whose `T₂*` is given.
    pub reference: QubitPair,
}

fn default_distribution() -> NoiseDistribution {
    NoiseDistribution::GaussianDetuning
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NuclearSection {
    Driven { factor: f64 },
    Sublevels { weights: [f64; 3] },
    Unpolarized,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_intervals: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorMethod {
    Auto,
    Rk4,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub tolerance: Option<f64>,
    pub method: Option<IntegratorMethod>,
    pub min_step_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSection {
    pub omega_m_mhz: f64,
    pub q: f64,
    pub length_us: f64,
    #[serde(default)]
    pub trigger_offset_us: f64,
}

/// Evenly spaced grid including both ends.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start_us: f64,
    pub stop_us: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RabiMethod {
    Analytic,
    Propagate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutPath {
    Pi,
    PassageMinus,
    PassagePlus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSection {
    #[serde(default = "default_method")]
    pub method: RabiMethod,
    pub length_us: Option<f64>,
    #[serde(default = "default_readout")]
    pub readout: ReadoutPath,
    #[serde(default = "one")]
    pub fidelity: f64,
}

fn default_method() -> RabiMethod {
    RabiMethod::Analytic
}

fn default_readout() -> ReadoutPath {
    ReadoutPath::Pi
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    /// Gap between the π-pulses; defaults to `L + τ_r`.
    pub tau_mag_us: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSweepSection {
    pub window_start_us: f64,
    pub lengths: GridSection,
    pub depths_um: Vec<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseySection {
    #[serde(default)]
    pub omega_rot_mhz: f64,
    pub half_pi_ns: Option<f64>,
    #[serde(default)]
    pub fit: bool,
    #[serde(default)]
    pub spectrum: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HahnQubit {
    SqMinus,
    SqPlus,
    Dq,
    Mech,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HahnSection {
    pub qubit: HahnQubit,
    pub half_pi_ns: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressSection {
    pub d_perp_ghz: f64,
    pub d_par_ghz: f64,
    pub c11_gpa: f64,
    pub c12_gpa: f64,
    pub c44_gpa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    Eq3,
    Eq4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitQubit {
    Sq,
    Dq,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub input: String,
    pub model: FitModel,
    #[serde(default = "default_fit_qubit")]
    pub qubit: FitQubit,
    #[serde(default)]
    pub omega_rot_mhz: f64,
    pub a_par_mhz: Option<f64>,
}

fn default_fit_qubit() -> FitQubit {
    FitQubit::Sq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WindowName {
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub input: String,
    #[serde(default = "default_window")]
    pub window: WindowName,
    #[serde(default = "default_pad")]
    pub zero_pad: usize,
    #[serde(default = "default_threshold")]
    pub peak_threshold: f64,
}

fn default_window() -> WindowName {
    WindowName::Hann
}

fn default_pad() -> usize {
    8
}

fn default_threshold() -> f64 {
    5.0
}

#[derive(Deserialize)]
struct Head {
    kind: Option<toml::Value>,
}

/// Parses and checks a config, reporting the offending key path.
pub fn parse(text: &str) -> CliResult<ExperimentConfig> {
    let head: Head = toml::from_str(text).map_err(|e| CliError::schema(e.message().to_string()))?;
    if head.kind.is_none() {
        return Err(CliError::schema("missing required key `kind`"));
    }
    let de = toml::Deserializer::new(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path.is_empty() || path == "." {
            CliError::schema(msg)
        } else {
            CliError::schema(format!("{path}: {msg}"))
        }
    })?;
    cfg.check_sections()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! mark {
            ($($f:ident),*) => { $( if self.$f.is_some() { v.push(stringify!($f)); } )* };
        }
        mark!(
            seed, shots, spin, fields, frame, wave, depth, noise, nuclear, quadrature, integrator, ring, sweep, rabi,
            window, depth_sweep, ramsey, hahn, stress, fit, spectrum
        );
        v
    }

    fn check_sections(&self) -> CliResult<()> {
        let (required, optional) = self.kind.sections();
        for r in &required {
            if !self.present().contains(r) {
                return Err(CliError::schema(format!(
                    "{r}: required for kind `{}`",
                    self.kind.as_str()
                )));
            }
        }
        for p in self.present() {
            if !required.contains(&p) && !optional.contains(&p) {
                return Err(CliError::schema(format!("{p}: not used by kind `{}`", self.kind.as_str())));
            }
        }
        let mech_needed = self.kind == Kind::RamseyMech
            || matches!(&self.hahn, Some(h) if h.qubit == HahnQubit::Mech);
        if mech_needed {
            for (name, ok) in [("wave", self.wave.is_some()), ("depth", self.depth.is_some())] {
                if !ok {
                    return Err(CliError::schema(format!("{name}: required for a mechanical qubit")));
                }
            }
        }
        Ok(())
    }

    pub fn stem(&self) -> String {
        self.output
            .as_ref()
            .map(|o| o.stem.clone())
            .or_else(|| self.name.clone())
            .unwrap_or_else(|| self.kind.as_str().to_string())
    }

    pub fn spin_parameters(&self) -> CliResult<SpinParameters<f64>> {
        let mut p = SpinParameters::nv();
        if let Some(s) = &self.spin {
            if let Some(v) = s.d0_mhz {
                p.d0 = mhz_to_angular(v);
            }
            if let Some(v) = s.gamma_mhz_per_gauss {
                p.gamma = mhz_to_angular(v);
            }
            if let Some(v) = s.eps_perp_mhz_per_mpa {
                p.eps_perp = mhz_per_mpa_to_angular(v);
            }
            if let Some(v) = s.eps_par_mhz_per_mpa {
                p.eps_par = mhz_per_mpa_to_angular(v);
            }
            if let Some(v) = s.p_mhz {
                p.p = mhz_to_angular(v);
            }
            if let Some(v) = s.a_par_mhz {
                p.a_par = mhz_to_angular(v);
            }
        }
        p.validate().map_err(|e| CliError::field("spin", e))?;
        Ok(p)
    }

    pub fn field_config(&self) -> FieldConfig<f64> {
        let f = self.fields.clone().unwrap_or_default();
        FieldConfig {
            b_par: f.b_par_gauss,
            b_perp: f.b_perp_gauss,
            sigma_par: mpa_to_pa(f.sigma_par_mpa),
            ..Default::default()
        }
    }

    pub fn ring_model(&self) -> CliResult<RingModel<f64>> {
        let r = self.ring.as_ref().ok_or_else(|| CliError::schema("ring: missing"))?;
        let m = RingModel::new(mhz_to_angular(r.omega_m_mhz), r.q, us_to_s(r.length_us))
            .map_err(|e| CliError::field("ring", e))?;
        if !r.trigger_offset_us.is_finite() {
            return Err(CliError::schema("ring.trigger_offset_us: must be finite"));
        }
        Ok(m.with_trigger_offset(us_to_s(r.trigger_offset_us)))
    }

    pub fn sweep_grid(&self) -> CliResult<Vec<f64>> {
        let g = self.sweep.as_ref().ok_or_else(|| CliError::schema("sweep: missing"))?;
        grid(g, "sweep")
    }

    pub fn integrator_options(&self) -> CliResult<IntegratorOptions<f64>> {
        let mut o = IntegratorOptions::default();
        if let Some(s) = &self.integrator {
            if let Some(t) = s.tolerance {
                if !(t > 0.0) {
                    return Err(CliError::schema("integrator.tolerance: must be positive"));
                }
                o.tolerance = t;
            }
            if let Some(m) = s.method {
                o.integrator = match m {
                    IntegratorMethod::Auto => Integrator::Auto,
                    IntegratorMethod::Rk4 => Integrator::Rk4,
                };
            }
            if let Some(h) = s.min_step_s {
                o.min_step = h;
            }
        }
        Ok(o)
    }

    /// Ensemble description shared by all simulation kinds.
    pub fn ensemble(&self, shots_override: Option<usize>) -> CliResult<EnsembleConfig<f64>> {
        let spin = self.spin_parameters()?;
        let fields = self.field_config();
        let frame = self.frame.clone().unwrap_or_default();
        let wave = match &self.wave {
            Some(w) => StandingWave::new(mhz_to_angular(w.omega_mech_mhz), um_to_m(w.wavelength_um))
                .map_err(|e| CliError::field("wave", e))?,
            None => StandingWave::new(0.0, 1.0).expect("static wave"),
        };
        let depth = match &self.depth {
            Some(DepthSection::Psf { z0_um, fwhm0_um, slope }) => DepthModel::Psf(
                PsfModel::new(um_to_m(*z0_um), um_to_m(*fwhm0_um), *slope).map_err(|e| CliError::field("depth", e))?,
            ),
            Some(DepthSection::Fixed { z_um }) => DepthModel::Fixed { z: um_to_m(*z_um) },
            None => DepthModel::Fixed { z: 0.0 },
        };
        let noise = match &self.noise {
            Some(n) => Some(
                NoiseModel::new(us_to_s(n.t2_star_us), n.distribution, n.reference)
                    .map_err(|e| CliError::field("noise", e))?,
            ),
            None => None,
        };
        let nuclear = match &self.nuclear {
            Some(NuclearSection::Driven { factor }) => NuclearAverage::Driven { factor: *factor },
            Some(NuclearSection::Sublevels { weights }) => NuclearAverage::Sublevels { weights: *weights },
            Some(NuclearSection::Unpolarized) => NuclearAverage::unpolarized(),
            None => NuclearAverage::Driven { factor: 1.0 / 3.0 },
        };
        let shots = shots_override.or(self.shots).unwrap_or(200);
        let seed = self.seed.ok_or_else(|| CliError::schema("seed: required"))?;
        let mut cfg = EnsembleConfig::new(
            spin,
            fields,
            nvmech::units::khz_to_angular(frame.plus_detuning_khz),
            nvmech::units::khz_to_angular(frame.minus_detuning_khz),
            wave,
            depth,
            noise,
            nuclear,
            shots,
            seed,
        )
        .map_err(|e| CliError::field("ensemble", e))?;
        if let Some(q) = &self.quadrature {
            let d = cfg.quadrature;
            cfg.quadrature = QuadratureOptions {
                abs_tol: q.abs_tol.unwrap_or(d.abs_tol),
                rel_tol: q.rel_tol.unwrap_or(d.rel_tol),
                max_intervals: q.max_intervals.unwrap_or(d.max_intervals),
            };
        }
        Ok(cfg)
    }

    /// Builds every physical object the kind needs without running it.
    pub fn check_values(&self) -> CliResult<()> {
        let (required, _) = self.kind.sections();
        if required.contains(&"seed") {
            self.ensemble(None)?;
            self.integrator_options()?;
        }
        if self.ring.is_some() {
            self.ring_model()?;
        }
        if self.sweep.is_some() {
            self.sweep_grid()?;
        }
        if let Some(d) = &self.depth_sweep {
            grid(&d.lengths, "depth_sweep.lengths")?;
        }
        if let Some(s) = &self.stress {
            nvmech::crystal::build_stiffness(s.c11_gpa, s.c12_gpa, s.c44_gpa).map_err(|e| CliError::field("stress", e))?;
        }
        Ok(())
    }

    pub fn stress_inputs(&self) -> CliResult<&StressSection> {
        self.stress.as_ref().ok_or_else(|| CliError::schema("stress: missing"))
    }
}

pub fn grid(g: &GridSection, path: &str) -> CliResult<Vec<f64>> {
    if g.points == 0 {
        return Err(CliError::schema(format!("{path}.points: must be at least 1")));
    }
    if !g.start_us.is_finite() || !g.stop_us.is_finite() {
        return Err(CliError::schema(format!("{path}: bounds must be finite")));
    }
    if g.points > 1 && g.stop_us < g.start_us {
        return Err(CliError::schema(format!("{path}.stop_us: must not precede start_us")));
    }
    let n = g.points;
    let step = if n > 1 { (g.stop_us - g.start_us) / (n - 1) as f64 } else { 0.0 };
    Ok((0..n).map(|k| us_to_s(g.start_us + step * k as f64)).collect())
}
