//! Executes a parsed config and returns its artifacts in memory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use nvmech::analysis::{
    fit_ramsey, power_spectrum, FitOptions, FitResult, InitialGuess, PowerSpectrum, RamseyKind, SpectrumOptions,
    SpectrumWindow,
};
use nvmech::crystal::{build_stiffness, strain_to_stress_couplings, FrameRotation, StrainCouplings};
use nvmech::ensemble::{
    depth_sweep, hahn_average, rabi_average_highq, rabi_average_lowq, ramsey_average, CoherenceTraces, HighQOptions,
    LowQMethod, SignalTrace,
};
use nvmech::hamiltonian::QubitPair;
use nvmech::pulse::{RabiReadout, RamseyQubit};
use nvmech::resonator::RingModel;
use nvmech::units::{angular_to_khz, angular_to_mhz, mhz_to_angular, ns_to_s, s_to_us, um_to_m, us_to_s};

use crate::config::{
    grid, ExperimentConfig, FitModel, FitQubit, HahnQubit, Kind, RabiMethod, ReadoutPath, WindowName,
};
use crate::error::{CliError, CliResult};
use crate::io::{read_trace, spectrum_csv, table_csv, trace_csv, Abscissa};

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Small derived numbers recorded in the manifest.
    pub derived: Value,
}

#[derive(Debug, Clone, Default)]
pub struct RunContext {
    /// Directory that relative input paths are resolved against.
    pub base_dir: PathBuf,
    pub shots: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterReport {
    pub name: String,
    pub unit: &'static str,
    pub value: f64,
    pub uncertainty: f64,
}

/// Fit result in display units.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: &'static str,
    pub qubit: &'static str,
    pub a_par_mhz: f64,
    pub omega_rot_mhz: f64,
    pub points: usize,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub parameters: Vec<ParameterReport>,
    pub residuals: Vec<f64>,
}

pub fn ramsey_kind(model: FitModel, qubit: FitQubit) -> RamseyKind {
    match (model, qubit) {
        (FitModel::Eq4, _) => RamseyKind::Mechanical,
        (FitModel::Eq3, FitQubit::Sq) => RamseyKind::SingleQuantum,
        (FitModel::Eq3, FitQubit::Dq) => RamseyKind::DoubleQuantum,
    }
}

fn kind_names(kind: RamseyKind) -> (&'static str, &'static str) {
    match kind {
        RamseyKind::SingleQuantum => ("eq3", "sq"),
        RamseyKind::DoubleQuantum => ("eq3", "dq"),
        RamseyKind::Mechanical => ("eq4", "mech"),
    }
}

pub fn fit_report(data: &SignalTrace<f64>, kind: RamseyKind, a_par: f64, omega_rot: f64) -> CliResult<FitReport> {
    let r: FitResult<f64> = fit_ramsey(data, kind, a_par, omega_rot, InitialGuess::Spectrum, &FitOptions::default())?;
    let (model, qubit) = kind_names(kind);
    let parameters = r
        .parameter_names
        .iter()
        .zip(r.values.iter().zip(&r.uncertainties))
        .map(|(name, (&v, &u))| {
            let (unit, scale): (&'static str, fn(f64) -> f64) = match name.as_str() {
                "delta" => ("khz", angular_to_khz),
                "t2_star" => ("us", s_to_us),
                n if n.starts_with("phi") => ("rad", |x| x),
                _ => ("", |x| x),
            };
            ParameterReport {
                name: name.clone(),
                unit,
                value: scale(v),
                uncertainty: scale(u),
            }
        })
        .collect();
    let residuals = data
        .abscissa
        .iter()
        .zip(&data.mean)
        .map(|(&t, &y)| y - r.model.eval(t))
        .collect();
    Ok(FitReport {
        model,
        qubit,
        a_par_mhz: angular_to_mhz(a_par),
        omega_rot_mhz: angular_to_mhz(omega_rot),
        points: data.len(),
        converged: r.converged,
        iterations: r.iterations,
        residual_norm: r.residual_norm,
        parameters,
        residuals,
    })
}

pub fn fit_json(report: &FitReport) -> CliResult<String> {
    serde_json::to_string_pretty(report)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(e.to_string()))
}

pub fn spectrum_options(window: WindowName, zero_pad: usize, peak_threshold: f64) -> CliResult<SpectrumOptions> {
    if zero_pad == 0 {
        return Err(CliError::schema("zero_pad: must be at least 1"));
    }
    if !(peak_threshold > 0.0) {
        return Err(CliError::schema("peak_threshold: must be positive"));
    }
    Ok(SpectrumOptions {
        window: match window {
            WindowName::Hann => SpectrumWindow::Hann,
            WindowName::Rectangular => SpectrumWindow::Rectangular,
        },
        zero_pad_factor: zero_pad,
        peak_threshold,
        ..SpectrumOptions::default()
    })
}

pub fn peaks_json(s: &PowerSpectrum<f64>) -> Value {
    let peaks: Vec<Value> = s
        .peaks()
        .iter()
        .map(|p| json!({ "frequency_mhz": angular_to_mhz(p.frequency), "power": p.power }))
        .collect();
    json!({
        "native_resolution_mhz": angular_to_mhz(s.native_resolution),
        "peaks": peaks,
    })
}

fn resolve(base: &Path, input: &str) -> PathBuf {
    let p = Path::new(input);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn artifact(file: String, contents: String) -> Artifact {
    Artifact { file, contents }
}

fn window_json(ring: &RingModel<f64>, width: f64) -> CliResult<Value> {
    let w = ring.optimal_window(width)?;
    Ok(json!({
        "tau_r_us": s_to_us(ring.tau_r),
        "tau_mag_us": s_to_us(width),
        "optimal_start_us": s_to_us(w.start),
        "optimal_end_us": s_to_us(w.end),
        "optimal_area_us": s_to_us(w.area),
    }))
}

fn tau_mag(cfg: &ExperimentConfig, ring: &RingModel<f64>) -> CliResult<f64> {
    match cfg.window.as_ref().and_then(|w| w.tau_mag_us) {
        Some(v) if v >= 0.0 && v.is_finite() => Ok(us_to_s(v)),
        Some(_) => Err(CliError::schema("window.tau_mag_us: must be non-negative")),
        None => Ok(ring.length + ring.tau_r),
    }
}

fn high_q(tolerance: Option<f64>, path: &str) -> CliResult<HighQOptions<f64>> {
    let mut o = HighQOptions::default();
    if let Some(t) = tolerance {
        if !(t > 0.0) {
            return Err(CliError::schema(format!("{path}.tolerance: must be positive")));
        }
        o.tolerance = t;
    }
    Ok(o)
}

fn half_pi(v: Option<f64>, path: &str) -> CliResult<f64> {
    match v {
        Some(ns) if ns > 0.0 && ns.is_finite() => Ok(ns_to_s(ns)),
        Some(_) => Err(CliError::schema(format!("{path}.half_pi_ns: must be positive"))),
        None => Err(CliError::schema(format!("{path}.half_pi_ns: required for a mechanical qubit"))),
    }
}

fn branches_csv(tr: &CoherenceTraces<f64>) -> CliResult<String> {
    let header: Vec<String> = ["abscissa", "bright_mean", "bright_stderr", "dark_mean", "dark_stderr"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let cols = vec![
        tr.bright.abscissa.iter().map(|&t| s_to_us(t)).collect(),
        tr.bright.mean.clone(),
        tr.bright.stderr.clone(),
        tr.dark.mean.clone(),
        tr.dark.stderr.clone(),
    ];
    table_csv(&header, &cols)
}

/// Runs one experiment.
pub fn execute(cfg: &ExperimentConfig, ctx: &RunContext) -> CliResult<RunOutput> {
    let stem = cfg.stem();
    let mut artifacts = Vec::new();
    let mut derived = json!({});
    match cfg.kind {
        Kind::RabiLowq => {
            let ens = cfg.ensemble(ctx.shots)?;
            let times = cfg.sweep_grid()?;
            let method = match &cfg.rabi {
                Some(r) if r.method == RabiMethod::Propagate => {
                    let length = match r.length_us {
                        Some(l) => us_to_s(l),
                        None => times.iter().copied().fold(0.0, f64::max),
                    };
                    let readout = match r.readout {
                        ReadoutPath::Pi => RabiReadout::Pi,
                        ReadoutPath::PassageMinus => RabiReadout::PassageMinus { fidelity: r.fidelity },
                        ReadoutPath::PassagePlus => RabiReadout::PassagePlus { fidelity: r.fidelity },
                    };
                    LowQMethod::Propagate {
                        length,
                        readout,
                        options: cfg.integrator_options()?,
                    }
                }
                _ => LowQMethod::Analytic,
            };
            let trace = rabi_average_lowq(&ens, &times, method)?;
            if trace.len() >= 4 {
                if let Ok(s) = power_spectrum(&trace, &SpectrumOptions::default()) {
                    if let Some(p) = s.dominant() {
                        derived["dominant_frequency_mhz"] = json!(angular_to_mhz(p.frequency));
                    }
                }
            }
            artifacts.push(artifact(format!("{stem}.csv"), trace_csv(&trace, Abscissa::TimeUs, "abscissa")?));
        }
        Kind::RabiHighq => {
            let ens = cfg.ensemble(ctx.shots)?;
            let ring = cfg.ring_model()?;
            let tau0s = cfg.sweep_grid()?;
            let width = tau_mag(cfg, &ring)?;
            let opts = high_q(cfg.window.as_ref().and_then(|w| w.tolerance), "window")?;
            let trace = rabi_average_highq(&ens, &ring, &tau0s, width, &opts)?;
            derived = window_json(&ring, width)?;
            artifacts.push(artifact(format!("{stem}.csv"), trace_csv(&trace, Abscissa::TimeUs, "abscissa")?));
        }
        Kind::DepthSweep => {
            let ens = cfg.ensemble(ctx.shots)?;
            let ring = cfg.ring_model()?;
            let ds = cfg.depth_sweep.as_ref().expect("checked");
            let lengths = grid(&ds.lengths, "depth_sweep.lengths")?;
            if ds.depths_um.is_empty() {
                return Err(CliError::schema("depth_sweep.depths_um: need at least one depth"));
            }
            let depths: Vec<f64> = ds.depths_um.iter().map(|&z| um_to_m(z)).collect();
            let opts = high_q(ds.tolerance, "depth_sweep")?;
            let out = depth_sweep(&ens, &ring, us_to_s(ds.window_start_us), &lengths, &depths, &opts)?;
            let mut files = Vec::new();
            for (z_um, (_, trace)) in ds.depths_um.iter().zip(&out) {
                let file = format!("{stem}_z{z_um}um.csv");
                files.push(json!({ "z0_um": z_um, "file": file }));
                artifacts.push(artifact(file, trace_csv(trace, Abscissa::TimeUs, "abscissa")?));
            }
            derived = json!({ "abscissa": "pulse_area_us", "depths": files });
        }
        Kind::RamseyMech | Kind::RamseyDq | Kind::RamseySqMinus | Kind::RamseySqPlus => {
            let ens = cfg.ensemble(ctx.shots)?;
            let r = cfg.ramsey.as_ref().expect("checked");
            let (qubit, fit_kind) = match cfg.kind {
                Kind::RamseyMech => (
                    RamseyQubit::Mechanical {
                        half_pi_duration: half_pi(r.half_pi_ns, "ramsey")?,
                    },
                    RamseyKind::Mechanical,
                ),
                Kind::RamseyDq => (RamseyQubit::DoubleQuantum, RamseyKind::DoubleQuantum),
                Kind::RamseySqMinus => (
                    RamseyQubit::SingleQuantum {
                        pair: QubitPair::ZeroMinus,
                    },
                    RamseyKind::SingleQuantum,
                ),
                _ => (
                    RamseyQubit::SingleQuantum {
                        pair: QubitPair::PlusZero,
                    },
                    RamseyKind::SingleQuantum,
                ),
            };
            if cfg.kind != Kind::RamseyMech && r.half_pi_ns.is_some() {
                return Err(CliError::schema("ramsey.half_pi_ns: only used by the mechanical qubit"));
            }
            if r.fit && fit_kind != RamseyKind::Mechanical && r.omega_rot_mhz != 0.0 {
                return Err(CliError::schema("ramsey.omega_rot_mhz: magnetic fits need omega_rot_mhz = 0"));
            }
            let omega_rot = mhz_to_angular(r.omega_rot_mhz);
            let taus = cfg.sweep_grid()?;
            let traces = ramsey_average(&ens, qubit, &taus, omega_rot, &cfg.integrator_options()?)?;
            derived = json!({ "no_pulse": traces.no_pulse, "pi": traces.pi });
            artifacts.push(artifact(
                format!("{stem}.csv"),
                trace_csv(&traces.coherence, Abscissa::TimeUs, "abscissa")?,
            ));
            artifacts.push(artifact(format!("{stem}_branches.csv"), branches_csv(&traces)?));
            if r.fit {
                let a_par = ens.spin.a_par;
                let report = fit_report(&traces.coherence, fit_kind, a_par, omega_rot)?;
                artifacts.push(artifact(format!("{stem}_fit.json"), fit_json(&report)?));
            }
            if r.spectrum {
                let s = power_spectrum(&traces.coherence, &SpectrumOptions::default())?;
                derived["spectrum"] = peaks_json(&s);
                artifacts.push(artifact(format!("{stem}_spectrum.csv"), spectrum_csv(&s)?));
            }
        }
        Kind::Hahn => {
            let ens = cfg.ensemble(ctx.shots)?;
            let h = cfg.hahn.as_ref().expect("checked");
            let qubit = match h.qubit {
                HahnQubit::SqMinus => RamseyQubit::SingleQuantum {
                    pair: QubitPair::ZeroMinus,
                },
                HahnQubit::SqPlus => RamseyQubit::SingleQuantum {
                    pair: QubitPair::PlusZero,
                },
                HahnQubit::Dq => RamseyQubit::DoubleQuantum,
                HahnQubit::Mech => RamseyQubit::Mechanical {
                    half_pi_duration: half_pi(h.half_pi_ns, "hahn")?,
                },
            };
            let taus = cfg.sweep_grid()?;
            let traces = hahn_average(&ens, qubit, &taus, &cfg.integrator_options()?)?;
            derived = json!({ "no_pulse": traces.no_pulse, "pi": traces.pi });
            artifacts.push(artifact(
                format!("{stem}.csv"),
                trace_csv(&traces.coherence, Abscissa::TimeUs, "abscissa")?,
            ));
            artifacts.push(artifact(format!("{stem}_branches.csv"), branches_csv(&traces)?));
        }
        Kind::StressConvert => {
            let s = cfg.stress_inputs()?;
            let c = build_stiffness(s.c11_gpa, s.c12_gpa, s.c44_gpa).map_err(|e| CliError::field("stress", e))?;
            let d = StrainCouplings::from_ghz(s.d_perp_ghz, s.d_par_ghz);
            let eps = strain_to_stress_couplings(&d, &c, &FrameRotation::nv_111())?;
            let (perp, par) = eps.to_mhz_per_mpa();
            let value = json!({
                "d_perp_ghz": s.d_perp_ghz,
                "d_par_ghz": s.d_par_ghz,
                "c11_gpa": s.c11_gpa,
                "c12_gpa": s.c12_gpa,
                "c44_gpa": s.c44_gpa,
                "eps_perp_mhz_per_mpa": perp,
                "eps_par_mhz_per_mpa": par,
            });
            derived = json!({ "eps_perp_mhz_per_mpa": perp, "eps_par_mhz_per_mpa": par });
            let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))? + "\n";
            artifacts.push(artifact(format!("{stem}.json"), text));
        }
        Kind::Fit => {
            let f = cfg.fit.as_ref().expect("checked");
            let data = read_trace(&resolve(&ctx.base_dir, &f.input))?;
            let a_par = match f.a_par_mhz {
                Some(a) => mhz_to_angular(a),
                None => nvmech::hamiltonian::SpinParameters::<f64>::nv().a_par,
            };
            let kind = ramsey_kind(f.model, f.qubit);
            let report = fit_report(&data, kind, a_par, mhz_to_angular(f.omega_rot_mhz))?;
            artifacts.push(artifact(format!("{stem}_fit.json"), fit_json(&report)?));
        }
        Kind::Spectrum => {
            let s = cfg.spectrum.as_ref().expect("checked");
            let data = read_trace(&resolve(&ctx.base_dir, &s.input))?;
            let spec = power_spectrum(&data, &spectrum_options(s.window, s.zero_pad, s.peak_threshold)?)?;
            derived = peaks_json(&spec);
            artifacts.push(artifact(format!("{stem}_spectrum.csv"), spectrum_csv(&spec)?));
        }
        Kind::PulseArea => {
            let ring = cfg.ring_model()?;
            let tau0s = cfg.sweep_grid()?;
            let width = tau_mag(cfg, &ring)?;
            let areas: Vec<f64> = tau0s
                .iter()
                .map(|&t| ring.pulse_area(t, t + width))
                .collect::<nvmech::Result<_>>()?;
            let best = ring.optimal_window(width)?;
            let header: Vec<String> = ["abscissa", "area_us", "relative_area"].iter().map(|s| s.to_string()).collect();
            let cols = vec![
                tau0s.iter().map(|&t| s_to_us(t)).collect(),
                areas.iter().map(|&a| s_to_us(a)).collect(),
                areas.iter().map(|&a| a / best.area).collect(),
            ];
            derived = window_json(&ring, width)?;
            artifacts.push(artifact(format!("{stem}.csv"), table_csv(&header, &cols)?));
        }
    }
    Ok(RunOutput { artifacts, derived })
}
