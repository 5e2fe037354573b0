//! Ensemble averages over depth, nuclear sublevel and quasi-static noise.
//!
//! Each shot draws one detuning and evaluates a depth average for every
//! abscissa point. Shots run in parallel and are reduced in shot order, so
//! results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{hahn_amplitude, normalize_ramsey};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{DriveFrame, FieldConfig, LevelDetunings, QubitPair, SpinParameters};
use crate::pulse::{
    propagate, rabi_transfer, sequence_hahn, sequence_rabi_lowq, sequence_ramsey, sequence_reference,
    verified_ring_grid, IntegratorOptions, MixedState, NoiseModel, Projection, PulseSequence, RabiReadout,
    RamseyQubit, Reference, RingGrid, SpinEnvironment, SpinState, WindowPropagator,
};
use crate::quadrature::{integrate_vec, QuadratureOptions};
use crate::resonator::{RingModel, StandingWave};
use crate::scalar::Real;

/// Gaussian depth response of the confocal microscope. Lengths in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfModel<T> {
    pub z0: T,
    pub fwhm0: T,
    /// FWHM grows as `fwhm0 + slope·z0`.
    pub slope: T,
}

impl<T: Real> PsfModel<T> {
    pub fn new(z0: T, fwhm0: T, slope: T) -> Result<Self> {
        let psf = Self { z0, fwhm0, slope };
        if !(z0 >= T::zero()) || !z0.is_finite() {
            return Err(invalid("z0", "focal depth must be non-negative"));
        }
        if !(psf.fwhm() > T::zero()) || !psf.fwhm().is_finite() {
            return Err(invalid("fwhm0", "PSF width must be positive"));
        }
        Ok(psf)
    }

    pub fn fwhm(&self) -> T {
        self.fwhm0 + self.slope * self.z0
    }

    pub fn sigma(&self) -> T {
        self.fwhm() / (T::lit(8.0) * T::LN_2()).sqrt()
    }

    /// Integration window `[max(0, z0 − 3·FWHM), z0 + 3·FWHM]`.
    pub fn window(&self) -> (T, T) {
        let w = T::lit(3.0) * self.fwhm();
        ((self.z0 - w).max(T::zero()), self.z0 + w)
    }

    fn gaussian(&self, z: T) -> T {
        let u = (z - self.z0) / self.sigma();
        (-(u * u) * T::lit(0.5)).exp()
    }

    /// `∫_a^b` of the unnormalized Gaussian.
    fn mass(&self, a: T, b: T) -> T {
        let s = self.sigma() * T::SQRT_2();
        let half_width = self.sigma() * (T::PI() * T::lit(0.5)).sqrt();
        half_width * (((b - self.z0) / s).erf() - ((a - self.z0) / s).erf())
    }
}

/// PSF density at depth `z`, normalized over `[0, ∞)`.
pub fn psf_weight<T: Real>(psf: &PsfModel<T>, z: T) -> T {
    if z < T::zero() {
        return T::zero();
    }
    let total = psf.mass(T::zero(), T::infinity());
    psf.gaussian(z) / total
}

/// How the detected spins are distributed in depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum DepthModel<T> {
    Psf(PsfModel<T>),
    /// All spins at one depth.
    Fixed { z: T },
}

/// Nuclear sublevel treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum NuclearAverage<T> {
    /// Only the `m_I = 0` sublevel is simulated; its result is scaled by
    /// `factor` (1/3 for an unpolarized nucleus, or a measured polarization).
    Driven { factor: T },
    /// All sublevels with weights for `m_I = +1, 0, −1`.
    Sublevels { weights: [T; 3] },
}

impl<T: Real> NuclearAverage<T> {
    pub fn unpolarized() -> Self {
        let third = T::one() / T::lit(3.0);
        NuclearAverage::Sublevels {
            weights: [third; 3],
        }
    }

    fn terms(&self) -> Vec<(i8, T)> {
        match *self {
            NuclearAverage::Driven { factor } => vec![(0, factor)],
            NuclearAverage::Sublevels { weights } => [1i8, 0, -1]
                .into_iter()
                .zip(weights)
                .filter(|(_, w)| *w > T::zero())
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ws: Vec<T> = match *self {
            NuclearAverage::Driven { factor } => vec![factor],
            NuclearAverage::Sublevels { weights } => weights.to_vec(),
        };
        let sum: T = ws.iter().copied().sum();
        if ws.iter().any(|w| !(*w >= T::zero())) || sum > T::one() + T::lit(1e-12) {
            return Err(invalid("nuclear", "weights must be non-negative and sum to at most 1"));
        }
        Ok(())
    }
}

/// Everything needed to turn single-spin results into ensemble signals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig<T> {
    pub spin: SpinParameters<T>,
    pub fields: FieldConfig<T>,
    /// Rotating frame of the experiment; sublevel detunings follow from it.
    pub frame: DriveFrame<T>,
    pub wave: StandingWave<T>,
    pub depth: DepthModel<T>,
    pub noise: Option<NoiseModel<T>>,
    pub nuclear: NuclearAverage<T>,
    pub shots: usize,
    pub seed: u64,
    pub quadrature: QuadratureOptions<T>,
}

impl<T: Real> EnsembleConfig<T> {
    /// Configuration whose frame is locked to the `m_I = 0` lines with the
    /// given transition detunings on `{+1,0}` and `{0,−1}`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spin: SpinParameters<T>,
        fields: FieldConfig<T>,
        plus_detuning: T,
        minus_detuning: T,
        wave: StandingWave<T>,
        depth: DepthModel<T>,
        noise: Option<NoiseModel<T>>,
        nuclear: NuclearAverage<T>,
        shots: usize,
        seed: u64,
    ) -> Result<Self> {
        let frame = DriveFrame::locked_to_line(&spin, &fields, 0, plus_detuning, minus_detuning)?;
        let cfg = Self {
            spin,
            fields,
            frame,
            wave,
            depth,
            noise,
            nuclear,
            shots,
            seed,
            quadrature: QuadratureOptions {
                abs_tol: T::lit(1e-7),
                rel_tol: T::lit(1e-6),
                max_intervals: 400,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.spin.validate()?;
        self.nuclear.validate()?;
        if self.shots == 0 {
            return Err(invalid("shots", "need at least one shot"));
        }
        if let DepthModel::Fixed { z } = self.depth {
            if !(z >= T::zero()) {
                return Err(invalid("z", "depth must be non-negative"));
            }
        }
        Ok(())
    }

    /// Detunings of sublevel `m_i` with a noise level shift `b`.
    pub fn detunings(&self, m_i: i8, b: T) -> Result<LevelDetunings<T>> {
        Ok(self.frame.detunings(&self.spin, &self.fields, m_i)?.with_magnetic_shift(b))
    }

    /// Noise level shift of every shot, in shot order.
    pub fn shot_shifts(&self) -> Vec<T> {
        (0..self.shots).map(|s| self.shot_shift(s)).collect()
    }

    fn shot_shift(&self, shot: usize) -> T {
        match &self.noise {
            None => T::zero(),
            Some(n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(self.seed, shot as u64));
                n.level_shift(n.sample(&mut rng))
            }
        }
    }
}

/// Seed of shot `index`: the `index`-th output of a SplitMix64 stream
/// started at `seed`.
pub fn shot_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean signal with its Monte-Carlo standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalTrace<T> {
    pub abscissa: Vec<T>,
    pub mean: Vec<T>,
    pub stderr: Vec<T>,
}

impl<T: Real> SignalTrace<T> {
    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Trace without Monte-Carlo error.
    pub fn exact(abscissa: Vec<T>, mean: Vec<T>) -> Self {
        let stderr = vec![T::zero(); mean.len()];
        Self { abscissa, mean, stderr }
    }

    pub fn map(&self, f: impl Fn(T) -> T, scale_err: impl Fn(T) -> T) -> Self {
        Self {
            abscissa: self.abscissa.clone(),
            mean: self.mean.iter().map(|&v| f(v)).collect(),
            stderr: self.stderr.iter().map(|&v| scale_err(v)).collect(),
        }
    }
}

/// Per-shot results, one row per shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSamples<T> {
    pub abscissa: Vec<T>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> ShotSamples<T> {
    /// Shot mean and standard error of the mean, accumulated in shot order.
    pub fn summarize(&self) -> SignalTrace<T> {
        let n = self.rows.len();
        let dim = self.abscissa.len();
        let mut mean = vec![T::zero(); dim];
        for row in &self.rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += *v;
            }
        }
        let nf = T::lit(n as f64);
        for m in mean.iter_mut() {
            *m /= nf;
        }
        let mut stderr = vec![T::zero(); dim];
        if n > 1 {
            for row in &self.rows {
                for ((s, v), m) in stderr.iter_mut().zip(row).zip(&mean) {
                    let d = *v - *m;
                    *s += d * d;
                }
            }
            for s in stderr.iter_mut() {
                *s = (*s / (nf - T::one()) / nf).sqrt();
            }
        }
        SignalTrace {
            abscissa: self.abscissa.clone(),
            mean,
            stderr,
        }
    }

    /// Row-wise combination of two sample sets over the same shots.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            .collect();
        Self {
            abscissa: self.abscissa.clone(),
            rows,
        }
    }
}

/// Affine readout `a + b·P0`.
pub fn contrast_map<T: Real>(p0: T, a: T, b: T) -> T {
    a + b * p0
}

/// Inverse of [`contrast_map`].
pub fn contrast_inverse<T: Real>(signal: T, a: T, b: T) -> Result<T> {
    if b == T::zero() {
        return Err(Error::DegenerateNormalization);
    }
    Ok((signal - a) / b)
}

/// Runs `f` for every shot, sublevel and depth node. `f` receives the
/// spin's environment and returns one value per abscissa point.
pub fn shot_samples<T, F>(cfg: &EnsembleConfig<T>, abscissa: &[T], f: F) -> Result<ShotSamples<T>>
where
    T: Real,
    F: Fn(&SpinEnvironment<T>) -> Result<Vec<T>> + Sync,
{
    cfg.validate()?;
    let dim = abscissa.len();
    let terms = cfg.nuclear.terms();
    let rows: Result<Vec<Vec<T>>> = (0..cfg.shots)
        .into_par_iter()
        .map(|shot| {
            let b = cfg.shot_shift(shot);
            let mut envs = Vec::with_capacity(terms.len());
            for &(m_i, w) in &terms {
                envs.push((cfg.detunings(m_i, b)?, w));
            }
            let at_depth = |z: T| -> Result<Vec<T>> {
                let rabi = cfg.wave.omega_at_depth(z);
                let mut acc = vec![T::zero(); dim];
                for (det, w) in &envs {
                    let env = SpinEnvironment {
                        detunings: *det,
                        mech_rabi: rabi,
                    };
                    let v = f(&env)?;
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a += *w * x;
                    }
                }
                Ok(acc)
            };
            depth_average(cfg, dim, at_depth)
        })
        .collect();
    Ok(ShotSamples {
        abscissa: abscissa.to_vec(),
        rows: rows?,
    })
}

fn depth_average<T: Real>(
    cfg: &EnsembleConfig<T>,
    dim: usize,
    at_depth: impl Fn(T) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    match cfg.depth {
        DepthModel::Fixed { z } => at_depth(z),
        DepthModel::Psf(psf) => {
            let (a, b) = psf.window();
            let nodes = cfg.wave.nodes_between(a, b);
            let mut failure: Option<Error> = None;
            let result = integrate_vec(
                |z| {
                    if failure.is_some() {
                        return vec![T::zero(); dim];
                    }
                    match at_depth(z) {
                        Ok(mut v) => {
                            let g = psf.gaussian(z);
                            v.iter_mut().for_each(|x| *x *= g);
                            v
                        }
                        Err(e) => {
                            failure = Some(e);
                            vec![T::zero(); dim]
                        }
                    }
                },
                a,
                b,
                &nodes,
                dim,
                &cfg.quadrature,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let norm = psf.mass(a, b);
            Ok(result?.value.into_iter().map(|v| v / norm).collect())
        }
    }
}

/// Low-Q Rabi evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowQMethod<T> {
    /// Closed-form generalized Rabi transfer per spin.
    Analytic,
    /// Full sequence propagation with a balancing pulse of total length `L`.
    Propagate {
        length: T,
        readout: RabiReadout<T>,
        options: IntegratorOptions<T>,
    },
}

/// `P|+1⟩(t)` under a flat mechanical drive, averaged over depth and noise,
/// scaled by the nuclear factor.
pub fn rabi_average_lowq<T: Real>(cfg: &EnsembleConfig<T>, times: &[T], method: LowQMethod<T>) -> Result<SignalTrace<T>> {
    let samples = match method {
        LowQMethod::Analytic => shot_samples(cfg, times, |env| {
            let det = env.detunings.transition(QubitPair::PlusMinus);
            Ok(times.iter().map(|&t| rabi_transfer(env.mech_rabi, det, t)).collect())
        })?,
        LowQMethod::Propagate {
            length,
            readout,
            options,
        } => {
            let seqs: Vec<PulseSequence<T>> = times
                .iter()
                .map(|&t| sequence_rabi_lowq(t, length, readout))
                .collect::<Result<_>>()?;
            sequence_samples(cfg, times, &seqs, &options)?
        }
    };
    Ok(samples.summarize())
}

/// Propagates one sequence per abscissa point for every ensemble member
/// and records the sequence observable.
pub fn sequence_samples<T: Real>(
    cfg: &EnsembleConfig<T>,
    abscissa: &[T],
    sequences: &[PulseSequence<T>],
    options: &IntegratorOptions<T>,
) -> Result<ShotSamples<T>> {
    if sequences.len() != abscissa.len() {
        return Err(invalid("sequences", "need one sequence per abscissa point"));
    }
    let ground = MixedState::pure(SpinState::basis(crate::hamiltonian::Level::Zero));
    shot_samples(cfg, abscissa, |env| {
        sequences
            .iter()
            .map(|seq| propagate(seq, env, &ground, options).map(|p| p.signal(seq.observable)))
            .collect()
    })
}

/// Options for ringing-drive sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighQOptions<T> {
    /// Richardson tolerance on window transfers.
    pub tolerance: T,
    pub min_step: T,
}

impl<T: Real> Default for HighQOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-8),
            min_step: T::lit(1e-15),
        }
    }
}

/// Gating windows `(start, end)` for a swept π pair.
pub fn swept_windows<T: Real>(tau0s: &[T], tau_mag: T) -> Vec<(T, T)> {
    tau0s.iter().map(|&t| (t, t + tau_mag)).collect()
}

/// Dark fraction after each gating window, for one ringing drive starting
/// at `t = 0`, averaged over the ensemble and scaled by the nuclear factor.
pub fn window_samples<T: Real>(
    cfg: &EnsembleConfig<T>,
    ring: &RingModel<T>,
    abscissa: &[T],
    windows: &[(T, T)],
    opts: &HighQOptions<T>,
) -> Result<ShotSamples<T>> {
    cfg.validate()?;
    if windows.len() != abscissa.len() {
        return Err(invalid("windows", "need one window per abscissa point"));
    }
    for &(a, b) in windows {
        if !(b >= a) {
            return Err(Error::InvalidInterval {
                start: a.as_f64(),
                end: b.as_f64(),
            });
        }
    }
    let t_end = windows.iter().map(|w| w.1).fold(T::zero(), T::max);
    // Worst-case spin for step sizing: antinode drive with the largest
    // detuning of any simulated shot and sublevel.
    let mut worst_det = T::zero();
    let mut worst = SpinEnvironment {
        detunings: LevelDetunings::default(),
        mech_rabi: cfg.wave.omega_mech,
    };
    for b in cfg.shot_shifts() {
        for (m_i, _) in cfg.nuclear.terms() {
            let d = cfg.detunings(m_i, b)?;
            let size = d.plus.abs().max(d.minus.abs());
            if size >= worst_det {
                worst_det = size;
                worst.detunings = d;
            }
        }
    }
    let bound = (cfg.wave.omega_mech.powi(2) + (worst_det * T::lit(2.0)).powi(2))
        .sqrt()
        .max(T::lit(1e-3));
    let grid = RingGrid::new(*ring, t_end, bound)?;
    let grid = verified_ring_grid(grid, &worst, windows, opts.tolerance, opts.min_step)?;
    shot_samples(cfg, abscissa, |env| {
        let p = WindowPropagator::new(&grid, env);
        Ok(windows.iter().map(|&(a, b)| p.transfer(a, b)).collect())
    })
}

/// Swept-pair Rabi signal against the leading pulse time `τ₀`.
pub fn rabi_average_highq<T: Real>(
    cfg: &EnsembleConfig<T>,
    ring: &RingModel<T>,
    tau0s: &[T],
    tau_mag: T,
    opts: &HighQOptions<T>,
) -> Result<SignalTrace<T>> {
    let windows = swept_windows(tau0s, tau_mag);
    Ok(window_samples(cfg, ring, tau0s, &windows, opts)?.summarize())
}

/// Depth-resolved Rabi curves. Windows start at `window_start` and have the
/// given lengths; each trace is plotted against the enclosed pulse area.
pub fn depth_sweep<T: Real>(
    cfg: &EnsembleConfig<T>,
    ring: &RingModel<T>,
    window_start: T,
    lengths: &[T],
    depths: &[T],
    opts: &HighQOptions<T>,
) -> Result<Vec<(T, SignalTrace<T>)>> {
    let windows: Vec<(T, T)> = lengths.iter().map(|&l| (window_start, window_start + l)).collect();
    let areas: Vec<T> = windows
        .iter()
        .map(|&(a, b)| ring.pulse_area(a, b))
        .collect::<Result<_>>()?;
    depths
        .iter()
        .map(|&z0| {
            let depth = match cfg.depth {
                DepthModel::Psf(p) => DepthModel::Psf(PsfModel::new(z0, p.fwhm0, p.slope)?),
                DepthModel::Fixed { .. } => DepthModel::Fixed { z: z0 },
            };
            let at = EnsembleConfig { depth, ..cfg.clone() };
            let trace = window_samples(&at, ring, &areas, &windows, opts)?.summarize();
            Ok((z0, trace))
        })
        .collect()
}

/// Signals of a two-branch coherence measurement and its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceTraces<T> {
    pub bright: SignalTrace<T>,
    pub dark: SignalTrace<T>,
    pub no_pulse: T,
    pub pi: T,
    /// Normalized coherence per τ.
    pub coherence: SignalTrace<T>,
}

fn references<T: Real>(cfg: &EnsembleConfig<T>, qubit: &RamseyQubit<T>, options: &IntegratorOptions<T>) -> Result<(T, T)> {
    let pis: Vec<Reference> = match qubit {
        RamseyQubit::SingleQuantum { pair } => vec![Reference::SinglePi(*pair)],
        RamseyQubit::DoubleQuantum => vec![
            Reference::SinglePi(QubitPair::ZeroMinus),
            Reference::SinglePi(QubitPair::PlusZero),
        ],
        RamseyQubit::Mechanical { .. } => vec![Reference::SinglePi(QubitPair::ZeroMinus)],
    };
    let mut refs = vec![sequence_reference(Reference::NoPulse)?];
    for r in &pis {
        refs.push(sequence_reference(*r)?);
    }
    let x: Vec<T> = (0..refs.len()).map(|i| T::lit(i as f64)).collect();
    let trace = sequence_samples(cfg, &x, &refs, options)?.summarize();
    let no_pulse = trace.mean[0];
    let pi = trace.mean[1..].iter().copied().sum::<T>() / T::lit(pis.len() as f64);
    Ok((no_pulse, pi))
}

fn coherence_traces<T: Real>(
    cfg: &EnsembleConfig<T>,
    qubit: &RamseyQubit<T>,
    taus: &[T],
    build: impl Fn(T, Projection) -> Result<PulseSequence<T>>,
    combine: impl Fn(T, T, T, T) -> Result<T>,
    options: &IntegratorOptions<T>,
) -> Result<CoherenceTraces<T>> {
    let bright_seqs: Vec<_> = taus.iter().map(|&t| build(t, Projection::Bright)).collect::<Result<_>>()?;
    let dark_seqs: Vec<_> = taus.iter().map(|&t| build(t, Projection::Dark)).collect::<Result<_>>()?;
    let bright = sequence_samples(cfg, taus, &bright_seqs, options)?;
    let dark = sequence_samples(cfg, taus, &dark_seqs, options)?;
    let (no_pulse, pi) = references(cfg, qubit, options)?;
    combine(T::one(), T::zero(), no_pulse, pi)?;
    let coherence = bright
        .zip_with(&dark, |b, d| combine(b, d, no_pulse, pi).unwrap_or(T::nan()))
        .summarize();
    Ok(CoherenceTraces {
        bright: bright.summarize(),
        dark: dark.summarize(),
        no_pulse,
        pi,
        coherence,
    })
}

/// Ramsey fringes of `qubit` with the normalized coherence
/// `½(y₊ − y₋)/(y_NP − y_π)`.
pub fn ramsey_average<T: Real>(
    cfg: &EnsembleConfig<T>,
    qubit: RamseyQubit<T>,
    taus: &[T],
    omega_rot: T,
    options: &IntegratorOptions<T>,
) -> Result<CoherenceTraces<T>> {
    coherence_traces(
        cfg,
        &qubit,
        taus,
        |t, p| sequence_ramsey(qubit, t, p, omega_rot),
        normalize_ramsey,
        options,
    )
}

/// Hahn echo with amplitude `(y₊ − y₋)/(y_NP − y_π)`.
pub fn hahn_average<T: Real>(
    cfg: &EnsembleConfig<T>,
    qubit: RamseyQubit<T>,
    taus: &[T],
    options: &IntegratorOptions<T>,
) -> Result<CoherenceTraces<T>> {
    coherence_traces(cfg, &qubit, taus, |t, p| sequence_hahn(qubit, t, p), hahn_amplitude, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_angular, um_to_m, us_to_s};

    #[test]
    fn psf_properties() {
        let psf: PsfModel<f64> = PsfModel::new(um_to_m(18.0), um_to_m(2.0), 0.5).unwrap();
        let z0 = psf.z0;
        let dz = um_to_m(1.3);
        assert!(psf_weight(&psf, z0) > psf_weight(&psf, z0 + dz));
        assert!((psf_weight(&psf, z0 + dz) - psf_weight(&psf, z0 - dz)).abs() < 1e-9 * psf_weight(&psf, z0));
        let (a, b) = psf.window();
        let total: f64 = crate::quadrature::integrate(|z| psf_weight(&psf, z), a, b, &QuadratureOptions::default()).unwrap();
        assert!((total - 1.0).abs() < 1e-4);
        assert!(PsfModel::new(1e-6, -1e-6, 0.0).is_err());
    }

    #[test]
    fn shot_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| shot_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(shot_seed(42, 3), shot_seed(42, 3));
    }

    #[test]
    fn contrast_round_trip() {
        assert_eq!(contrast_map(0.3, 0.0, 1.0), 0.3);
        assert_eq!(contrast_map(1.0, 10.0, 5.0), 15.0);
        let s = contrast_map(0.42f64, 100.0, 20.0);
        assert!((contrast_inverse(s, 100.0, 20.0).unwrap() - 0.42).abs() < 1e-14);
        assert!(contrast_inverse(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_antinode_collapses_to_rabi() {
        let spin = SpinParameters::nv();
        let wave = StandingWave::new(mhz_to_angular(1.0), um_to_m(19.9)).unwrap();
        let cfg = EnsembleConfig::new(
            spin,
            FieldConfig::default(),
            0.0,
            0.0,
            wave,
            DepthModel::Fixed { z: um_to_m(19.9 / 4.0) },
            None,
            NuclearAverage::Driven { factor: 1.0 / 3.0 },
            1,
            0,
        )
        .unwrap();
        let times: Vec<f64> = (0..20).map(|k| us_to_s(0.1 * k as f64)).collect();
        let tr = rabi_average_lowq(&cfg, &times, LowQMethod::Analytic).unwrap();
        for (t, p) in times.iter().zip(&tr.mean) {
            let om = wave.omega_mech;
            assert!((p - (0.5 * om * t).sin().powi(2) / 3.0).abs() < 1e-12);
        }
        assert_eq!(tr.mean[0], 0.0);
    }
}
