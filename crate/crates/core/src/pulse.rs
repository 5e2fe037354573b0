//! Pulse sequences and single-spin propagation in a rotating frame.
//!
//! The spin is described on the three electronic levels `|+1⟩, |0⟩, |−1⟩`
//! for one nuclear projection. Level detunings come from a [`DriveFrame`]
//! shared by all drives of a sequence, so magnetic pulses on either
//! transition and the mechanical `{−1, +1}` drive can be combined.
//!
//! Drive convention for a pair `(moving, reference)` with phase `φ`:
//! `H = ½Ω (e^{−iφ}|moving⟩⟨reference| + h.c.)`.
//!
//! [`DriveFrame`]: crate::hamiltonian::DriveFrame

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{Level, LevelDetunings, QubitPair};
use crate::linalg::{cmat3_apply, cmat3_identity, cmat3_mul, cmat3_norm_inf, cmat3_zero, unitary_step, CMat3};
use crate::resonator::RingModel;
use crate::scalar::Real;

type C<T> = Complex<T>;

fn c<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Pure state on the three electronic levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinState<T> {
    pub amplitudes: [C<T>; 3],
}

impl<T: Real> SpinState<T> {
    pub fn basis(level: Level) -> Self {
        let mut amplitudes = [c(T::zero()); 3];
        amplitudes[level.index()] = c(T::one());
        Self { amplitudes }
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn populations(&self) -> [T; 3] {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    pub fn population(&self, level: Level) -> T {
        self.amplitudes[level.index()].norm_sqr()
    }

    fn transformed(&self, u: &CMat3<T>) -> Self {
        Self {
            amplitudes: cmat3_apply(u, &self.amplitudes),
        }
    }
}

/// Weighted ensemble of pure states, used for imperfect polarization and
/// incoherent population transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedState<T> {
    pub components: Vec<(T, SpinState<T>)>,
}

impl<T: Real> MixedState<T> {
    pub fn pure(state: SpinState<T>) -> Self {
        Self {
            components: vec![(T::one(), state)],
        }
    }

    /// `η|0⟩⟨0| + (1 − η)·I/3`.
    pub fn polarized(efficiency: T) -> Self {
        let rest = (T::one() - efficiency) / T::lit(3.0);
        if rest <= T::zero() {
            return Self::pure(SpinState::basis(Level::Zero));
        }
        Self {
            components: vec![
                (efficiency + rest, SpinState::basis(Level::Zero)),
                (rest, SpinState::basis(Level::Plus)),
                (rest, SpinState::basis(Level::Minus)),
            ],
        }
    }

    pub fn populations(&self) -> [T; 3] {
        let mut p = [T::zero(); 3];
        for (w, s) in &self.components {
            for (acc, v) in p.iter_mut().zip(s.populations()) {
                *acc += *w * v;
            }
        }
        p
    }

    pub fn trace(&self) -> T {
        self.populations().iter().copied().sum()
    }

    /// Largest `|‖ψ‖ − 1|` among the components.
    pub fn norm_error(&self) -> T {
        self.components
            .iter()
            .map(|(_, s)| (s.norm() - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    fn transform(&mut self, u: &CMat3<T>) {
        for (_, s) in self.components.iter_mut() {
            *s = s.transformed(u);
        }
    }

    fn as_basis_mixture(populations: [T; 3]) -> Self {
        let components = Level::ALL
            .iter()
            .zip(populations)
            .filter(|(_, p)| *p > T::zero())
            .map(|(l, p)| (p, SpinState::basis(*l)))
            .collect();
        Self { components }
    }
}

/// Shape of the quasi-static detuning distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDistribution {
    /// Gaussian detuning, `σ = √2/T₂*`, giving `exp(−t²/T₂*²)` free decay.
    GaussianDetuning,
    /// Lorentzian detuning, half-width `1/T₂*`, giving `exp(−t/T₂*)`.
    ExponentialEnvelope,
}

/// Quasi-static bath noise. A draw is the transition detuning of the
/// `reference` qubit, i.e. the qubit whose `T₂*` was measured. It enters
/// all levels as a magnetic shift `+b` on `|+1⟩` and `−b` on `|−1⟩`, with
/// `b = draw/Δm` of the reference qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel<T> {
    pub t2_star: T,
    pub distribution: NoiseDistribution,
    pub reference: QubitPair,
}

impl<T: Real> NoiseModel<T> {
    pub fn gaussian(t2_star: T, reference: QubitPair) -> Result<Self> {
        Self::new(t2_star, NoiseDistribution::GaussianDetuning, reference)
    }

    pub fn new(t2_star: T, distribution: NoiseDistribution, reference: QubitPair) -> Result<Self> {
        if !(t2_star > T::zero()) || !t2_star.is_finite() {
            return Err(invalid("t2_star", "must be positive and finite"));
        }
        Ok(Self {
            t2_star,
            distribution,
            reference,
        })
    }

    /// Width parameter: `σ = √2/T₂*` or the Lorentzian half-width `1/T₂*`.
    pub fn sigma(&self) -> T {
        match self.distribution {
            NoiseDistribution::GaussianDetuning => T::SQRT_2() / self.t2_star,
            NoiseDistribution::ExponentialEnvelope => T::one() / self.t2_star,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let unit: f64 = match self.distribution {
            NoiseDistribution::GaussianDetuning => StandardNormal.sample(rng),
            NoiseDistribution::ExponentialEnvelope => Cauchy::new(0.0, 1.0).expect("unit Cauchy").sample(rng),
        };
        T::lit(unit) * self.sigma()
    }

    /// Level shift `b` corresponding to a drawn reference detuning.
    pub fn level_shift(&self, detuning: T) -> T {
        detuning / T::lit(self.reference.delta_m() as f64)
    }
}

/// One draw from `noise` with a generator seeded by `seed`.
pub fn draw_detuning<T: Real>(noise: &NoiseModel<T>, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    noise.sample(&mut rng)
}

/// Microwave pulse on a magnetically allowed pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticPulse<T> {
    pub target: QubitPair,
    /// Nominal rotation angle, rad.
    pub angle: T,
    pub phase: T,
    /// Pulse length for finite pulses; ignored when idealized.
    pub duration: T,
    /// Instantaneous rotation insensitive to detuning.
    pub idealized: bool,
}

impl<T: Real> MagneticPulse<T> {
    pub fn rabi(&self) -> T {
        self.angle / self.duration
    }
}

/// Time dependence of a mechanical drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum DriveEnvelope<T> {
    /// Flat amplitude for `duration`.
    Constant { duration: T },
    /// Resonator ring-up and ring-down, time measured from the drive start.
    Ring { ring: RingModel<T> },
}

/// Resonant `{−1, +1}` stress drive. The coupling is
/// `½·Ω(z)·amplitude·envelope(t − start)·e^{−iφ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalDrive<T> {
    pub envelope: DriveEnvelope<T>,
    pub amplitude: T,
    pub phase: T,
}

impl<T: Real> MechanicalDrive<T> {
    pub fn constant(duration: T, phase: T) -> Self {
        Self {
            envelope: DriveEnvelope::Constant { duration },
            amplitude: T::one(),
            phase,
        }
    }

    pub fn ring(ring: RingModel<T>) -> Self {
        Self {
            envelope: DriveEnvelope::Ring { ring },
            amplitude: T::one(),
            phase: T::zero(),
        }
    }

    /// Envelope at time `s` after the drive start.
    pub fn envelope_at(&self, s: T) -> T {
        match self.envelope {
            DriveEnvelope::Constant { duration } => {
                if s >= T::zero() && s <= duration {
                    T::one()
                } else {
                    T::zero()
                }
            }
            DriveEnvelope::Ring { ring } => ring.envelope(s),
        }
    }

    /// Length of the active interval after the drive start.
    pub fn duration(&self) -> T {
        match self.envelope {
            DriveEnvelope::Constant { duration } => duration,
            DriveEnvelope::Ring { ring } => ring.active_interval().1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "element")]
pub enum PulseElement<T> {
    /// Optical reset to `|0⟩` with the given efficiency.
    Polarize { efficiency: T },
    MagneticPulse(MagneticPulse<T>),
    MechanicalDrive(MechanicalDrive<T>),
    /// Incoherent population transfer on `target`; all coherences are lost.
    AdiabaticPassage { target: QubitPair, fidelity: T },
    Wait { duration: T },
    Readout,
}

impl<T: Real> PulseElement<T> {
    pub fn duration(&self) -> T {
        match self {
            PulseElement::MagneticPulse(p) if !p.idealized => p.duration,
            PulseElement::MechanicalDrive(d) => d.duration(),
            PulseElement::Wait { duration } => *duration,
            _ => T::zero(),
        }
    }

    fn validate(&self) -> Result<()> {
        let non_negative = |name: &'static str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be non-negative and finite"))
            }
        };
        let unit = |name: &'static str, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(invalid(name, "must lie in [0, 1]"))
            }
        };
        match self {
            PulseElement::Polarize { efficiency } => unit("efficiency", *efficiency),
            PulseElement::MagneticPulse(p) => {
                if !p.target.is_magnetic() {
                    return Err(invalid("target", "{-1,+1} cannot be driven magnetically"));
                }
                if !p.angle.is_finite() || !p.phase.is_finite() {
                    return Err(invalid("angle", "angle and phase must be finite"));
                }
                if !p.idealized && !(p.duration > T::zero()) {
                    return Err(invalid("duration", "finite pulses need a positive duration"));
                }
                non_negative("duration", p.duration)
            }
            PulseElement::MechanicalDrive(d) => {
                if !d.amplitude.is_finite() || !d.phase.is_finite() {
                    return Err(invalid("amplitude", "amplitude and phase must be finite"));
                }
                non_negative("duration", d.duration())
            }
            PulseElement::AdiabaticPassage { target, fidelity } => {
                if !target.is_magnetic() {
                    return Err(invalid("target", "{-1,+1} cannot be driven magnetically"));
                }
                unit("fidelity", *fidelity)
            }
            PulseElement::Wait { duration } => non_negative("duration", *duration),
            PulseElement::Readout => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedElement<T> {
    pub start: T,
    pub element: PulseElement<T>,
}

/// Quantity reported by a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `P|0⟩`, the fluorescence-bright fraction.
    Bright,
    /// `1 − P|0⟩`.
    Dark,
}

impl Observable {
    pub fn evaluate<T: Real>(self, populations: &[T; 3]) -> T {
        let p0 = populations[Level::Zero.index()];
        match self {
            Observable::Bright => p0,
            Observable::Dark => T::one() - p0,
        }
    }
}

/// Timeline of elements with absolute start times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence<T> {
    pub elements: Vec<TimedElement<T>>,
    pub observable: Observable,
    cursor: T,
}

impl<T: Real> PulseSequence<T> {
    pub fn new(observable: Observable) -> Self {
        Self::starting_at(T::zero(), observable)
    }

    pub fn starting_at(start: T, observable: Observable) -> Self {
        Self {
            elements: Vec::new(),
            observable,
            cursor: start,
        }
    }

    /// Appends at the cursor and advances it by the element's duration.
    pub fn then(mut self, element: PulseElement<T>) -> Self {
        self.elements.push(TimedElement {
            start: self.cursor,
            element,
        });
        self.cursor += element.duration();
        self
    }

    /// Places an element at an absolute time without moving the cursor.
    pub fn at(mut self, start: T, element: PulseElement<T>) -> Self {
        self.elements.push(TimedElement { start, element });
        self
    }

    /// Moves the cursor to an absolute time.
    pub fn seek(mut self, t: T) -> Self {
        self.cursor = t;
        self
    }

    pub fn cursor(&self) -> T {
        self.cursor
    }

    /// Checks element parameters and that no two magnetic pulses overlap.
    pub fn validate(&self) -> Result<()> {
        for e in &self.elements {
            e.element.validate()?;
            if !e.start.is_finite() {
                return Err(invalid("start", "element start times must be finite"));
            }
        }
        let mut spans: Vec<(T, T)> = self
            .elements
            .iter()
            .filter_map(|e| match e.element {
                PulseElement::MagneticPulse(_) => Some((e.start, e.start + e.element.duration())),
                _ => None,
            })
            .collect();
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite start"));
        let mut reach: Option<(T, T)> = None;
        for &(s, e) in &spans {
            if let Some((s0, e0)) = reach {
                if s < e0 && (e > s || s > s0) {
                    return Err(Error::OverlappingPulses { time: s.as_f64() });
                }
                if e > e0 {
                    reach = Some((s, e));
                }
            } else {
                reach = Some((s, e));
            }
        }
        Ok(())
    }
}

/// Finite magnetic π-pulse length used by [`magnetic_pi`].
pub const DEFAULT_PI_DURATION: f64 = 30e-9;

pub fn magnetic_rotation<T: Real>(target: QubitPair, angle: T, phase: T) -> PulseElement<T> {
    PulseElement::MagneticPulse(MagneticPulse {
        target,
        angle,
        phase,
        duration: T::zero(),
        idealized: true,
    })
}

/// π-pulse on a magnetic pair, idealized or as a 30 ns rectangular drive.
pub fn magnetic_pi<T: Real>(target: QubitPair, idealized: bool) -> PulseElement<T> {
    PulseElement::MagneticPulse(MagneticPulse {
        target,
        angle: T::PI(),
        phase: T::zero(),
        duration: if idealized { T::zero() } else { T::lit(DEFAULT_PI_DURATION) },
        idealized,
    })
}

pub fn adiabatic_passage<T: Real>(target: QubitPair, fidelity: T) -> Result<PulseElement<T>> {
    let e = PulseElement::AdiabaticPassage { target, fidelity };
    e.validate()?;
    Ok(e)
}

/// How the transferred population of a Rabi sequence is mapped to `|0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "path")]
pub enum RabiReadout<T> {
    /// π-pulse on `{0, −1}`; the signal is the dark fraction.
    Pi,
    /// Adiabatic passage `|−1⟩ → |0⟩`; the signal is the bright fraction.
    PassageMinus { fidelity: T },
    /// Adiabatic passage `|+1⟩ → |0⟩`; the signal is the bright fraction.
    PassagePlus { fidelity: T },
}

/// Flat-drive Rabi: polarize, π(0,−1), drive `τ`, readout mapping, drive
/// `L − τ` to keep the average power fixed, readout.
pub fn sequence_rabi_lowq<T: Real>(tau: T, length: T, readout: RabiReadout<T>) -> Result<PulseSequence<T>> {
    if !(tau >= T::zero()) || !(length >= tau) || !length.is_finite() {
        return Err(invalid("tau", "need 0 <= tau <= L"));
    }
    let (mapping, observable) = match readout {
        RabiReadout::Pi => (magnetic_pi(QubitPair::ZeroMinus, true), Observable::Dark),
        RabiReadout::PassageMinus { fidelity } => (adiabatic_passage(QubitPair::ZeroMinus, fidelity)?, Observable::Bright),
        RabiReadout::PassagePlus { fidelity } => (adiabatic_passage(QubitPair::PlusZero, fidelity)?, Observable::Bright),
    };
    let seq = PulseSequence::new(observable)
        .then(PulseElement::Polarize { efficiency: T::one() })
        .then(magnetic_pi(QubitPair::ZeroMinus, true))
        .then(PulseElement::MechanicalDrive(MechanicalDrive::constant(tau, T::zero())))
        .then(mapping)
        .then(PulseElement::MechanicalDrive(MechanicalDrive::constant(length - tau, T::zero())))
        .then(PulseElement::Readout);
    seq.validate()?;
    Ok(seq)
}

/// Ringing-drive Rabi: the drive starts at `t = 0`; a π(0,−1) pair at
/// `tau0` and `tau0 + tau_mag` gates the spin's exposure to it.
pub fn sequence_rabi_highq<T: Real>(tau0: T, tau_mag: T, ring: RingModel<T>) -> Result<PulseSequence<T>> {
    if !(tau_mag >= T::zero()) || !tau0.is_finite() {
        return Err(invalid("tau_mag", "window length must be non-negative"));
    }
    let t_polarize = tau0.min(T::zero());
    let seq = PulseSequence::starting_at(t_polarize, Observable::Dark)
        .then(PulseElement::Polarize { efficiency: T::one() })
        .at(T::zero(), PulseElement::MechanicalDrive(MechanicalDrive::ring(ring)))
        .seek(tau0)
        .then(magnetic_pi(QubitPair::ZeroMinus, true))
        .seek(tau0 + tau_mag)
        .then(magnetic_pi(QubitPair::ZeroMinus, true))
        .then(PulseElement::Readout);
    seq.validate()?;
    Ok(seq)
}

/// Qubit addressed by Ramsey and Hahn sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "qubit")]
pub enum RamseyQubit<T> {
    /// Magnetic `{0, −1}` or `{+1, 0}`.
    SingleQuantum { pair: QubitPair },
    /// Magnetic `{−1, +1}` reached through `|0⟩` with π(+1,0) pulses.
    DoubleQuantum,
    /// Mechanical `{−1, +1}` with flat π/2 pulses of the given length.
    Mechanical { half_pi_duration: T },
}

/// Which level the spin returns to for zero free evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    Bright,
    Dark,
}

impl Projection {
    fn phase<T: Real>(self) -> T {
        match self {
            Projection::Bright => T::zero(),
            Projection::Dark => T::PI(),
        }
    }
}

fn check_qubit<T: Real>(qubit: &RamseyQubit<T>) -> Result<()> {
    match qubit {
        RamseyQubit::SingleQuantum { pair } if !pair.is_magnetic() => {
            Err(invalid("pair", "use the double-quantum variant for {-1,+1}"))
        }
        RamseyQubit::Mechanical { half_pi_duration } if !(*half_pi_duration > T::zero()) => {
            Err(invalid("half_pi_duration", "must be positive"))
        }
        _ => Ok(()),
    }
}

fn mech_pulse<T: Real>(duration: T, phase: T) -> PulseElement<T> {
    PulseElement::MechanicalDrive(MechanicalDrive::constant(duration, phase))
}

/// `π/2 - τ - ±π/2`. The second pulse's phase is advanced by
/// `ω_rot·(τ + τ_{π/2})` so the fringe appears at `Δ + ω_rot`, `Δ` being
/// the qubit's transition detuning.
pub fn sequence_ramsey<T: Real>(
    qubit: RamseyQubit<T>,
    tau: T,
    projection: Projection,
    omega_rot: T,
) -> Result<PulseSequence<T>> {
    check_qubit(&qubit)?;
    if !(tau >= T::zero()) || !omega_rot.is_finite() {
        return Err(invalid("tau", "free evolution must be non-negative"));
    }
    let pi2 = T::FRAC_PI_2();
    let mut seq = PulseSequence::new(Observable::Bright).then(PulseElement::Polarize { efficiency: T::one() });
    seq = match qubit {
        RamseyQubit::SingleQuantum { pair } => {
            let phase = T::PI() + projection.phase::<T>() - omega_rot * tau;
            seq.then(magnetic_rotation(pair, pi2, T::zero()))
                .then(PulseElement::Wait { duration: tau })
                .then(magnetic_rotation(pair, pi2, phase))
        }
        RamseyQubit::DoubleQuantum => {
            let phase = projection.phase::<T>() + omega_rot * tau;
            seq.then(magnetic_rotation(QubitPair::ZeroMinus, pi2, T::zero()))
                .then(magnetic_pi(QubitPair::PlusZero, true))
                .then(PulseElement::Wait { duration: tau })
                .then(magnetic_pi(QubitPair::PlusZero, true))
                .then(magnetic_rotation(QubitPair::ZeroMinus, pi2, phase))
        }
        RamseyQubit::Mechanical { half_pi_duration } => {
            let phase = T::PI() + projection.phase::<T>() - omega_rot * (tau + half_pi_duration);
            seq.then(magnetic_pi(QubitPair::ZeroMinus, true))
                .then(mech_pulse(half_pi_duration, T::zero()))
                .then(PulseElement::Wait { duration: tau })
                .then(mech_pulse(half_pi_duration, phase))
                .then(magnetic_pi(QubitPair::ZeroMinus, true))
        }
    };
    let seq = seq.then(PulseElement::Readout);
    seq.validate()?;
    Ok(seq)
}

/// `π/2 - τ - π - τ - ±π/2`. The double-quantum π is the composite
/// π(0,−1)·π(+1,0)·π(0,−1), which swaps `|+1⟩` and `|−1⟩`.
pub fn sequence_hahn<T: Real>(qubit: RamseyQubit<T>, tau: T, projection: Projection) -> Result<PulseSequence<T>> {
    check_qubit(&qubit)?;
    if !(tau >= T::zero()) {
        return Err(invalid("tau", "free evolution must be non-negative"));
    }
    let pi2 = T::FRAC_PI_2();
    let wait = PulseElement::Wait { duration: tau };
    let final_phase = projection.phase::<T>();
    let mut seq = PulseSequence::new(Observable::Bright).then(PulseElement::Polarize { efficiency: T::one() });
    seq = match qubit {
        RamseyQubit::SingleQuantum { pair } => seq
            .then(magnetic_rotation(pair, pi2, T::zero()))
            .then(wait)
            .then(magnetic_pi(pair, true))
            .then(wait)
            .then(magnetic_rotation(pair, pi2, final_phase)),
        RamseyQubit::DoubleQuantum => seq
            .then(magnetic_rotation(QubitPair::ZeroMinus, pi2, T::zero()))
            .then(magnetic_pi(QubitPair::PlusZero, true))
            .then(wait)
            .then(magnetic_pi(QubitPair::ZeroMinus, true))
            .then(magnetic_pi(QubitPair::PlusZero, true))
            .then(magnetic_pi(QubitPair::ZeroMinus, true))
            .then(wait)
            .then(magnetic_pi(QubitPair::PlusZero, true))
            .then(magnetic_rotation(QubitPair::ZeroMinus, pi2, final_phase)),
        RamseyQubit::Mechanical { half_pi_duration } => seq
            .then(magnetic_pi(QubitPair::ZeroMinus, true))
            .then(mech_pulse(half_pi_duration, T::zero()))
            .then(wait)
            .then(mech_pulse(half_pi_duration * T::lit(2.0), T::zero()))
            .then(wait)
            .then(mech_pulse(half_pi_duration, final_phase))
            .then(magnetic_pi(QubitPair::ZeroMinus, true)),
    };
    let seq = seq.then(PulseElement::Readout);
    seq.validate()?;
    Ok(seq)
}

/// Normalization references for two-branch measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// No pulse: the polarized, bright signal.
    NoPulse,
    /// A single idealized π-pulse on a magnetic pair.
    SinglePi(QubitPair),
}

pub fn sequence_reference<T: Real>(reference: Reference) -> Result<PulseSequence<T>> {
    let mut seq = PulseSequence::new(Observable::Bright).then(PulseElement::Polarize { efficiency: T::one() });
    if let Reference::SinglePi(pair) = reference {
        seq = seq.then(magnetic_pi(pair, true));
    }
    let seq = seq.then(PulseElement::Readout);
    seq.validate()?;
    Ok(seq)
}

/// Static quantities seen by one spin during a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinEnvironment<T> {
    /// Level detunings in the sequence frame, noise shift included.
    pub detunings: LevelDetunings<T>,
    /// Full-amplitude mechanical Rabi frequency at the spin's depth.
    pub mech_rabi: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Exact exponentials on piecewise-constant segments, RK4 on ringing
    /// segments.
    Auto,
    /// RK4 with Richardson refinement on every segment.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions<T> {
    /// Absolute tolerance of the Richardson check on propagator entries.
    pub tolerance: T,
    pub integrator: Integrator,
    /// Steps smaller than this abort the integration.
    pub min_step: T,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-10),
            integrator: Integrator::Auto,
            min_step: T::lit(1e-16),
        }
    }
}

/// Populations recorded at a readout element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRecord<T> {
    pub time: T,
    pub populations: [T; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation<T> {
    pub state: MixedState<T>,
    pub readouts: Vec<ReadoutRecord<T>>,
    /// RK4 steps taken in the accepted solution.
    pub steps: usize,
}

impl<T: Real> Propagation<T> {
    /// Observable at the last readout, or of the final state if the
    /// sequence has no readout.
    pub fn signal(&self, observable: Observable) -> T {
        let pops = self
            .readouts
            .last()
            .map(|r| r.populations)
            .unwrap_or_else(|| self.state.populations());
        observable.evaluate(&pops)
    }
}

/// Rotation by `angle` about the axis at `phase` on `pair`.
pub fn pair_rotation<T: Real>(pair: QubitPair, angle: T, phase: T) -> CMat3<T> {
    let (m, r) = pair.levels();
    let (m, r) = (m.index(), r.index());
    let half = angle * T::lit(0.5);
    let (s, co) = half.sin_cos();
    let mut u = cmat3_identity::<T>();
    u[m][m] = c(co);
    u[r][r] = c(co);
    let minus_i_s = Complex::new(T::zero(), -s);
    u[m][r] = minus_i_s * Complex::from_polar(T::one(), -phase);
    u[r][m] = minus_i_s * Complex::from_polar(T::one(), phase);
    u
}

fn add_coupling<T: Real>(h: &mut CMat3<T>, pair: QubitPair, rabi: T, phase: T) {
    let (m, r) = pair.levels();
    let v = Complex::from_polar(rabi * T::lit(0.5), -phase);
    h[m.index()][r.index()] += v;
    h[r.index()][m.index()] += v.conj();
}

struct Drivers<T> {
    magnetic: Vec<(T, T, MagneticPulse<T>)>,
    mechanical: Vec<(T, MechanicalDrive<T>)>,
}

impl<T: Real> Drivers<T> {
    fn hamiltonian(&self, env: &SpinEnvironment<T>, t: T, envelope: impl Fn(&MechanicalDrive<T>, T) -> T) -> CMat3<T> {
        let mut h = cmat3_zero();
        h[0][0] = c(env.detunings.plus);
        h[2][2] = c(env.detunings.minus);
        for (s, e, p) in &self.magnetic {
            if t >= *s && t < *e {
                add_coupling(&mut h, p.target, p.rabi(), p.phase);
            }
        }
        for (s, d) in &self.mechanical {
            let amp = envelope(d, t - *s);
            if amp != T::zero() {
                add_coupling(&mut h, QubitPair::PlusMinus, env.mech_rabi * d.amplitude * amp, d.phase);
            }
        }
        h
    }

    fn at(&self, env: &SpinEnvironment<T>, t: T) -> CMat3<T> {
        self.hamiltonian(env, t, |d, s| d.envelope_at(s))
    }

    /// Hamiltonian with every drive active at full amplitude, for step
    /// sizing.
    fn bound(&self, env: &SpinEnvironment<T>) -> T {
        let mut h = cmat3_zero();
        h[0][0] = c(env.detunings.plus);
        h[2][2] = c(env.detunings.minus);
        for (_, _, p) in &self.magnetic {
            add_coupling(&mut h, p.target, p.rabi().abs(), T::zero());
        }
        for (_, d) in &self.mechanical {
            add_coupling(&mut h, QubitPair::PlusMinus, (env.mech_rabi * d.amplitude).abs(), T::zero());
        }
        cmat3_norm_inf(&h)
    }

    fn ringing_in(&self, a: T, b: T) -> Option<T> {
        self.mechanical
            .iter()
            .filter_map(|(s, d)| match d.envelope {
                DriveEnvelope::Ring { ring } => {
                    let (on, off) = ring.active_interval();
                    (*s + on < b && *s + off > a).then_some(ring.tau_r)
                }
                DriveEnvelope::Constant { .. } => None,
            })
            .reduce(T::min)
    }
}

fn rk4_step<T: Real>(u: &CMat3<T>, t: T, h: T, ham: &impl Fn(T) -> CMat3<T>) -> CMat3<T> {
    let mi = Complex::new(T::zero(), -T::one());
    let deriv = |t: T, u: &CMat3<T>| {
        let hu = cmat3_mul(&ham(t), u);
        crate::linalg::cmat3_scale(&hu, mi)
    };
    let half = h * T::lit(0.5);
    let k1 = deriv(t, u);
    let k2 = deriv(t + half, &axpy(u, &k1, half));
    let k3 = deriv(t + half, &axpy(u, &k2, half));
    let k4 = deriv(t + h, &axpy(u, &k3, h));
    let mut out = *u;
    let w = h / T::lit(6.0);
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += (k1[i][j] + (k2[i][j] + k3[i][j]) * T::lit(2.0) + k4[i][j]) * w;
        }
    }
    out
}

fn axpy<T: Real>(u: &CMat3<T>, k: &CMat3<T>, a: T) -> CMat3<T> {
    let mut out = *u;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += k[i][j] * a;
        }
    }
    out
}

fn max_diff<T: Real>(a: &CMat3<T>, b: &CMat3<T>) -> T {
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

/// RK4 over `[a, b]` with `n` equal steps, doubling `n` until two
/// successive solutions agree within `15·tol`.
fn rk4_segment<T: Real>(
    a: T,
    b: T,
    h_max: T,
    opts: &IntegratorOptions<T>,
    ham: &impl Fn(T) -> CMat3<T>,
) -> Result<(CMat3<T>, usize)> {
    let span = b - a;
    let run = |n: usize| {
        let h = span / T::lit(n as f64);
        let mut u = cmat3_identity::<T>();
        for k in 0..n {
            u = rk4_step(&u, a + h * T::lit(k as f64), h, ham);
        }
        u
    };
    let mut n = ((span / h_max).ceil().as_f64() as usize).max(1);
    let mut coarse = run(n);
    loop {
        let fine = run(2 * n);
        let h = span / T::lit((2 * n) as f64);
        if max_diff(&fine, &coarse) <= opts.tolerance * T::lit(15.0) {
            return Ok((fine, 2 * n));
        }
        if h * T::lit(0.5) < opts.min_step {
            return Err(Error::IntegrationFailure {
                time: a.as_f64(),
                step: h.as_f64(),
            });
        }
        n *= 2;
        coarse = fine;
    }
}

/// Integrates the sequence for one spin starting from `initial`.
///
/// Instantaneous elements (polarization, idealized pulses, adiabatic
/// passages, readouts) act in list order at their start times. Between them
/// the state follows `H(t)`, whose time dependence comes from finite
/// magnetic pulses and mechanical drives.
pub fn propagate<T: Real>(
    seq: &PulseSequence<T>,
    env: &SpinEnvironment<T>,
    initial: &MixedState<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Propagation<T>> {
    seq.validate()?;
    if !(opts.tolerance > T::zero()) {
        return Err(invalid("tolerance", "must be positive"));
    }

    let mut drivers = Drivers {
        magnetic: Vec::new(),
        mechanical: Vec::new(),
    };
    let mut events: Vec<(T, usize, PulseElement<T>)> = Vec::new();
    let mut breaks: Vec<T> = Vec::new();
    for (i, e) in seq.elements.iter().enumerate() {
        match e.element {
            PulseElement::MagneticPulse(p) if !p.idealized => {
                drivers.magnetic.push((e.start, e.start + p.duration, p));
                breaks.extend([e.start, e.start + p.duration]);
            }
            PulseElement::MechanicalDrive(d) => {
                drivers.mechanical.push((e.start, d));
                match d.envelope {
                    DriveEnvelope::Constant { duration } => breaks.extend([e.start, e.start + duration]),
                    DriveEnvelope::Ring { ring } => {
                        let (on, off) = ring.active_interval();
                        breaks.extend([e.start + on, e.start + on + ring.length, e.start + off]);
                    }
                }
            }
            PulseElement::Wait { .. } => {}
            other => events.push((e.start, i, other)),
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));

    let h_bound = drivers.bound(env);
    let mut state = initial.clone();
    let mut readouts = Vec::new();
    let mut steps = 0usize;
    let mut now = seq
        .elements
        .iter()
        .map(|e| e.start)
        .reduce(T::min)
        .unwrap_or(T::zero());
    let end = seq
        .elements
        .iter()
        .map(|e| e.start + e.element.duration())
        .fold(now, T::max);
    let last_event = events.last().map(|e| e.0).unwrap_or(end);

    let evolve = |state: &mut MixedState<T>, from: T, to: T, steps: &mut usize| -> Result<()> {
        if to <= from {
            return Ok(());
        }
        let mut cuts: Vec<T> = breaks.iter().copied().filter(|&b| b > from && b < to).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        cuts.dedup();
        let mut a = from;
        for b in cuts.into_iter().chain(std::iter::once(to)) {
            if b <= a {
                continue;
            }
            let mid = (a + b) * T::lit(0.5);
            let ringing = drivers.ringing_in(a, b);
            let use_exact = ringing.is_none() && opts.integrator == Integrator::Auto;
            let u = if use_exact {
                unitary_step(&drivers.at(env, mid), b - a)
            } else {
                let mut h_max = T::PI() / (T::lit(200.0) * h_bound.max(T::lit(1e-300)));
                if let Some(tau) = ringing {
                    h_max = h_max.min(tau / T::lit(200.0));
                }
                // Constant segments sample H at the midpoint so the
                // segment edges are never ambiguous.
                let (u, n) = if ringing.is_none() {
                    let h = drivers.at(env, mid);
                    rk4_segment(a, b, h_max, opts, &|_| h)?
                } else {
                    rk4_segment(a, b, h_max, opts, &|t| drivers.at(env, t))?
                };
                *steps += n;
                u
            };
            state.transform(&u);
            a = b;
        }
        Ok(())
    };

    for (t, _, element) in &events {
        evolve(&mut state, now, *t, &mut steps)?;
        now = now.max(*t);
        match element {
            PulseElement::Polarize { efficiency } => state = MixedState::polarized(*efficiency),
            PulseElement::MagneticPulse(p) => state.transform(&pair_rotation(p.target, p.angle, p.phase)),
            PulseElement::AdiabaticPassage { target, fidelity } => {
                let mut pops = state.populations();
                let (m, r) = target.levels();
                let (pm, pr) = (pops[m.index()], pops[r.index()]);
                pops[m.index()] = (T::one() - *fidelity) * pm + *fidelity * pr;
                pops[r.index()] = (T::one() - *fidelity) * pr + *fidelity * pm;
                state = MixedState::as_basis_mixture(pops);
            }
            PulseElement::Readout => readouts.push(ReadoutRecord {
                time: *t,
                populations: state.populations(),
            }),
            PulseElement::MechanicalDrive(_) | PulseElement::Wait { .. } => unreachable!("not an instant"),
        }
    }
    if !events.iter().any(|(_, _, e)| matches!(e, PulseElement::Readout)) {
        evolve(&mut state, now, end.max(last_event), &mut steps)?;
    }
    Ok(Propagation { state, readouts, steps })
}

/// Two-level transfer under a constant drive:
/// `Ω²/(Ω²+Δ²)·sin²(½√(Ω²+Δ²)·t)`.
pub fn rabi_transfer<T: Real>(rabi: T, detuning: T, t: T) -> T {
    let gen2 = rabi * rabi + detuning * detuning;
    if gen2 == T::zero() {
        return T::zero();
    }
    let s = (gen2.sqrt() * t * T::lit(0.5)).sin();
    rabi * rabi / gen2 * s * s
}

type M2<T> = [[C<T>; 2]; 2];

fn m2_mul<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Envelope of a ringing drive sampled every half step, shared by all
/// spins of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RingGrid<T> {
    pub ring: RingModel<T>,
    /// Start of the grid (acoustic onset).
    pub origin: T,
    pub step: T,
    /// Envelope at `origin + k·step/2`.
    pub samples: Vec<T>,
}

impl<T: Real> RingGrid<T> {
    /// Grid up to `t_end` with the step bound `min(π/(100·Ω), τ_r/200)`,
    /// where `Ω` bounds the generalized Rabi frequency of any spin in the
    /// sweep. The step is aligned so the end of ring-up is a grid point.
    pub fn new(ring: RingModel<T>, t_end: T, omega_bound: T) -> Result<Self> {
        if !(omega_bound > T::zero()) {
            return Err(invalid("omega_bound", "must be positive"));
        }
        let h_max = (T::PI() / (T::lit(100.0) * omega_bound)).min(ring.tau_r / T::lit(200.0));
        Self::with_step(ring, t_end, h_max)
    }

    fn with_step(ring: RingModel<T>, t_end: T, h_max: T) -> Result<Self> {
        let origin = ring.trigger_offset;
        let per_length = (ring.length / h_max).ceil().max(T::one());
        let step = ring.length / per_length;
        let span = (t_end - origin).max(T::zero());
        let n = (span / step).ceil().as_f64() as usize;
        let samples = (0..=2 * n)
            .map(|k| ring.envelope(origin + step * T::lit(k as f64 * 0.5)))
            .collect();
        Ok(Self {
            ring,
            origin,
            step,
            samples,
        })
    }

    pub fn steps(&self) -> usize {
        (self.samples.len() - 1) / 2
    }

    /// Halves the step.
    pub fn refined(&self) -> Result<Self> {
        let end = self.origin + self.step * T::lit(self.steps() as f64);
        Self::with_step(self.ring, end, self.step * T::lit(0.5))
    }
}

/// Cumulative `{+1, −1}` propagator of a ringing drive, for evaluating
/// many gating windows of one spin. Valid for idealized π(0,−1) gates and
/// perfect polarization: the spin only sees the drive between the gates.
#[derive(Debug, Clone)]
pub struct WindowPropagator<'g, T> {
    grid: &'g RingGrid<T>,
    diag: (T, T),
    coupling: C<T>,
    cumulative: Vec<M2<T>>,
}

impl<'g, T: Real> WindowPropagator<'g, T> {
    pub fn new(grid: &'g RingGrid<T>, env: &SpinEnvironment<T>) -> Self {
        let coupling = c(env.mech_rabi * T::lit(0.5));
        let diag = (env.detunings.plus, env.detunings.minus);
        let mut cumulative = Vec::with_capacity(grid.steps() + 1);
        let one = c(T::one());
        let zero = c(T::zero());
        let mut u: M2<T> = [[one, zero], [zero, one]];
        cumulative.push(u);
        for k in 0..grid.steps() {
            let e = [grid.samples[2 * k], grid.samples[2 * k + 1], grid.samples[2 * k + 2]];
            u = rk4_2x2(&u, diag, coupling, e, grid.step);
            cumulative.push(u);
        }
        Self {
            grid,
            diag,
            coupling,
            cumulative,
        }
    }

    /// Propagator from the acoustic onset to `t`: the nearest grid point at
    /// or below `t` plus one partial RK4 step. Before the onset it is the
    /// identity, which differs from the true one by a diagonal phase only.
    pub fn propagator(&self, t: T) -> M2<T> {
        let g = self.grid;
        let s = t - g.origin;
        if s <= T::zero() {
            return self.cumulative[0];
        }
        let k = ((s / g.step).floor().as_f64() as usize).min(g.steps());
        let tk = g.step * T::lit(k as f64);
        let rest = s - tk;
        let u = self.cumulative[k];
        if rest <= T::zero() {
            return u;
        }
        let env = |x: T| g.ring.envelope(g.origin + x);
        let e = [env(tk), env(tk + rest * T::lit(0.5)), env(s)];
        rk4_2x2(&u, self.diag, self.coupling, e, rest)
    }

    /// `|⟨+1|U(t2, t1)|−1⟩|²`.
    pub fn transfer(&self, t1: T, t2: T) -> T {
        let u1 = self.propagator(t1);
        let u2 = self.propagator(t2);
        // U(t2,t1)_{+,-} = Σ_k U2[+][k]·conj(U1[-][k])
        let v = u2[0][0] * u1[1][0].conj() + u2[0][1] * u1[1][1].conj();
        v.norm_sqr()
    }
}

/// RK4 step of `dU/dt = −iH U` for `H = [[d₊, g·e(t)], [g·e(t), d₋]]` with
/// the envelope given at the start, middle and end of the step.
fn rk4_2x2<T: Real>(u: &M2<T>, diag: (T, T), g: C<T>, e: [T; 3], h: T) -> M2<T> {
    let ham = |env: T| -> M2<T> {
        let off = g * env;
        [[c(diag.0), off], [off.conj(), c(diag.1)]]
    };
    let mi = Complex::new(T::zero(), -T::one());
    let deriv = |hm: &M2<T>, u: &M2<T>| {
        let p = m2_mul(hm, u);
        [[p[0][0] * mi, p[0][1] * mi], [p[1][0] * mi, p[1][1] * mi]]
    };
    let add = |u: &M2<T>, k: &M2<T>, a: T| -> M2<T> {
        [
            [u[0][0] + k[0][0] * a, u[0][1] + k[0][1] * a],
            [u[1][0] + k[1][0] * a, u[1][1] + k[1][1] * a],
        ]
    };
    let (h0, h1, h2) = (ham(e[0]), ham(e[1]), ham(e[2]));
    let half = h * T::lit(0.5);
    let k1 = deriv(&h0, u);
    let k2 = deriv(&h1, &add(u, &k1, half));
    let k3 = deriv(&h1, &add(u, &k2, half));
    let k4 = deriv(&h2, &add(u, &k3, h));
    let w = h / T::lit(6.0);
    let mut out = *u;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += (k1[i][j] + (k2[i][j] + k3[i][j]) * T::lit(2.0) + k4[i][j]) * w;
        }
    }
    out
}

/// Richardson check of a [`RingGrid`] on a worst-case spin: compares window
/// transfers on the grid and on a grid with half the step, halving until
/// they agree within `15·tol`. Returns the accepted grid.
pub fn verified_ring_grid<T: Real>(
    grid: RingGrid<T>,
    worst: &SpinEnvironment<T>,
    windows: &[(T, T)],
    tol: T,
    min_step: T,
) -> Result<RingGrid<T>> {
    let mut coarse = grid;
    loop {
        let fine = coarse.refined()?;
        let err = {
            let pc = WindowPropagator::new(&coarse, worst);
            let pf = WindowPropagator::new(&fine, worst);
            windows
                .iter()
                .map(|&(a, b)| (pc.transfer(a, b) - pf.transfer(a, b)).abs())
                .fold(T::zero(), T::max)
        };
        if err <= tol * T::lit(15.0) {
            return Ok(coarse);
        }
        if fine.step < min_step {
            return Err(Error::IntegrationFailure {
                time: fine.origin.as_f64(),
                step: fine.step.as_f64(),
            });
        }
        coarse = fine;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_angular, us_to_s};

    fn env(plus: f64, minus: f64, rabi: f64) -> SpinEnvironment<f64> {
        SpinEnvironment {
            detunings: LevelDetunings { plus, minus },
            mech_rabi: rabi,
        }
    }

    fn ground() -> MixedState<f64> {
        MixedState::pure(SpinState::basis(Level::Zero))
    }

    #[test]
    fn idealized_pi_swaps() {
        let u = pair_rotation::<f64>(QubitPair::ZeroMinus, std::f64::consts::PI, 0.0);
        let s = SpinState::basis(Level::Zero).transformed(&u);
        assert!((s.population(Level::Minus) - 1.0).abs() < 1e-15);
        let s2 = s.transformed(&u);
        assert!((s2.population(Level::Zero) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn finite_pi_transfers() {
        let seq = PulseSequence::new(Observable::Dark)
            .then(magnetic_pi(QubitPair::ZeroMinus, false))
            .then(PulseElement::Readout);
        let out = propagate(&seq, &env(0.0, 0.0, 0.0), &ground(), &IntegratorOptions::default()).unwrap();
        assert!(out.signal(Observable::Dark) > 0.99);
        assert!((out.signal(Observable::Dark) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_drive_matches_rabi_formula() {
        let om = mhz_to_angular(1.3);
        let det = mhz_to_angular(0.4);
        let t = us_to_s(1.7);
        let start = MixedState::pure(SpinState::basis(Level::Minus));
        for integrator in [Integrator::Auto, Integrator::Rk4] {
            let opts = IntegratorOptions {
                integrator,
                ..Default::default()
            };
            let seq = PulseSequence::new(Observable::Dark)
                .then(PulseElement::MechanicalDrive(MechanicalDrive::constant(t, 0.3)))
                .then(PulseElement::Readout);
            let out = propagate(&seq, &env(det / 2.0, -det / 2.0, om), &start, &opts).unwrap();
            let p = out.readouts[0].populations[0];
            assert!((p - rabi_transfer(om, det, t)).abs() < 1e-8, "{integrator:?}");
            assert!(out.state.norm_error() < 1e-9);
        }
    }

    #[test]
    fn overlapping_pulses_rejected() {
        let seq = PulseSequence::new(Observable::Dark)
            .at(0.0, magnetic_pi(QubitPair::ZeroMinus, false))
            .at(10e-9, magnetic_pi(QubitPair::PlusZero, false));
        assert!(matches!(seq.validate(), Err(Error::OverlappingPulses { .. })));
        let ok = PulseSequence::<f64>::new(Observable::Dark)
            .then(magnetic_pi(QubitPair::ZeroMinus, false))
            .then(magnetic_pi(QubitPair::PlusZero, false));
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn adiabatic_passage_moves_population() {
        let seq = PulseSequence::new(Observable::Bright)
            .then(PulseElement::Polarize { efficiency: 1.0 })
            .then(magnetic_pi(QubitPair::PlusZero, true))
            .then(adiabatic_passage(QubitPair::PlusZero, 0.9).unwrap())
            .then(PulseElement::Readout);
        let out = propagate(&seq, &SpinEnvironment::default(), &ground(), &IntegratorOptions::default()).unwrap();
        assert!((out.signal(Observable::Bright) - 0.9).abs() < 1e-14);
        assert!(adiabatic_passage(QubitPair::PlusZero, 1.5f64).is_err());
    }

    #[test]
    fn noise_width() {
        let n = NoiseModel::gaussian(us_to_s(0.45), QubitPair::PlusMinus).unwrap();
        let sigma_mhz: f64 = crate::units::angular_to_mhz(n.sigma());
        assert!((sigma_mhz - 0.5002).abs() < 1e-3);
        assert_eq!(draw_detuning(&n, 7), draw_detuning(&n, 7));
        assert_ne!(draw_detuning(&n, 7), draw_detuning(&n, 8));
        let sq = NoiseModel::gaussian(us_to_s(0.45), QubitPair::ZeroMinus).unwrap();
        assert_eq!(sq.level_shift(2.0), 2.0);
        assert_eq!(n.level_shift(2.0), 1.0);
    }

    #[test]
    fn window_propagator_matches_area_solution() {
        let ring = RingModel::new(mhz_to_angular(529.0), 4000.0, us_to_s(3.0)).unwrap();
        let om = mhz_to_angular(3.8);
        let grid = RingGrid::new(ring, us_to_s(8.0), om).unwrap();
        let p = WindowPropagator::new(&grid, &env(0.0, 0.0, om));
        for (a, b) in [(0.3e-6, 1.1e-6), (0.56e-6, 5.97e-6), (2.9e-6, 7.5e-6)] {
            let expected = (0.5 * om * ring.pulse_area(a, b).unwrap()).sin().powi(2);
            assert!((p.transfer(a, b) - expected).abs() < 1e-6);
        }
    }
}
