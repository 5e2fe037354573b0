//! NV ground-state spin Hamiltonian and its rotating-frame reductions.
//!
//! Basis order for the electronic spin is `|+1⟩, |0⟩, |−1⟩`; the same order
//! is used for the nitrogen nuclear spin. The 9-dimensional product index is
//! `3·electron + nuclear`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{cmat3_mul, cmat3_zero, CMat3};
use crate::scalar::Real;
use crate::units;

/// Electronic spin projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Plus,
    Zero,
    Minus,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Plus, Level::Zero, Level::Minus];

    pub fn index(self) -> usize {
        match self {
            Level::Plus => 0,
            Level::Zero => 1,
            Level::Minus => 2,
        }
    }

    pub fn m(self) -> i8 {
        match self {
            Level::Plus => 1,
            Level::Zero => 0,
            Level::Minus => -1,
        }
    }
}

/// A two-level subspace of the spin-1 ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QubitPair {
    /// `{0, −1}`
    ZeroMinus,
    /// `{+1, 0}`
    PlusZero,
    /// `{−1, +1}`, magnetically forbidden, driven by transverse stress.
    PlusMinus,
}

impl QubitPair {
    /// `(moving, reference)` levels. Transition detunings are quoted as
    /// `(E_moving − E_reference) − ω`.
    pub fn levels(self) -> (Level, Level) {
        match self {
            QubitPair::ZeroMinus => (Level::Minus, Level::Zero),
            QubitPair::PlusZero => (Level::Plus, Level::Zero),
            QubitPair::PlusMinus => (Level::Plus, Level::Minus),
        }
    }

    /// `|Δm_s|` of the transition.
    pub fn delta_m(self) -> u8 {
        match self {
            QubitPair::PlusMinus => 2,
            _ => 1,
        }
    }

    pub fn is_magnetic(self) -> bool {
        !matches!(self, QubitPair::PlusMinus)
    }
}

/// Ground-state constants, in angular units. Stress couplings are per Pa,
/// the gyromagnetic ratio is per gauss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParameters<T> {
    pub d0: T,
    pub gamma: T,
    pub eps_perp: T,
    pub eps_par: T,
    pub p: T,
    pub a_par: T,
}

impl<T: Real> SpinParameters<T> {
    /// NV constants: D₀/2π = 2.87 GHz, γ/2π = 2.8 MHz/G,
    /// ε⊥/2π = 0.015 MHz/MPa, ε∥/2π = 0.012 MHz/MPa,
    /// P/2π = −4.945 MHz, A∥/2π = −2.166 MHz.
    pub fn nv() -> Self {
        Self {
            d0: units::mhz_to_angular(T::lit(2870.0)),
            gamma: units::mhz_to_angular(T::lit(2.8)),
            eps_perp: units::mhz_per_mpa_to_angular(T::lit(0.015)),
            eps_par: units::mhz_per_mpa_to_angular(T::lit(0.012)),
            p: units::mhz_to_angular(T::lit(-4.945)),
            a_par: units::mhz_to_angular(T::lit(-2.166)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > T::zero()) {
            return Err(invalid("d0", "zero-field splitting must be positive"));
        }
        if !(self.gamma > T::zero()) {
            return Err(invalid("gamma", "gyromagnetic ratio must be positive"));
        }
        for (name, v) in [
            ("eps_perp", self.eps_perp),
            ("eps_par", self.eps_par),
            ("p", self.p),
            ("a_par", self.a_par),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Diagonal energy of `|m_s, m_I⟩` with the transverse terms dropped.
    pub fn level_energy(&self, fields: &FieldConfig<T>, m_s: i8, m_i: i8) -> T {
        let ms = T::lit(m_s as f64);
        let mi = T::lit(m_i as f64);
        (self.d0 + self.eps_par * fields.sigma_par) * ms * ms
            + self.p * mi * mi
            + self.a_par * mi * ms
            + self.gamma * fields.b_par * ms
    }
}

/// Applied fields: magnetic in gauss, stress in Pa, in the NV frame.
///
/// In the rotating-frame reductions `sigma_x`/`sigma_y` are read as the
/// amplitude of the resonant transverse stress wave; the static level
/// energies come from the remaining fields.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldConfig<T> {
    pub b_par: T,
    pub b_perp: T,
    pub sigma_par: T,
    pub sigma_x: T,
    pub sigma_y: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinOperators<T> {
    pub sx: CMat3<T>,
    pub sy: CMat3<T>,
    pub sz: CMat3<T>,
}

/// Spin-1 matrices in the `|+1⟩, |0⟩, |−1⟩` basis. The same matrices serve
/// as `Ix, Iy, Iz` for the spin-1 nucleus.
pub fn spin1_operators<T: Real>() -> SpinOperators<T> {
    let z = Complex::new(T::zero(), T::zero());
    let r = T::one() / T::SQRT_2();
    let re = |v: T| Complex::new(v, T::zero());
    let im = |v: T| Complex::new(T::zero(), v);
    SpinOperators {
        sx: [[z, re(r), z], [re(r), z, re(r)], [z, re(r), z]],
        sy: [[z, im(-r), z], [im(r), z, im(-r)], [z, im(r), z]],
        sz: [[re(T::one()), z, z], [z, z, z], [z, z, re(-T::one())]],
    }
}

/// 9×9 Hermitian Hamiltonian on electron ⊗ nucleus, in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct LabHamiltonian<T> {
    pub matrix: [[Complex<T>; 9]; 9],
}

impl<T: Real> LabHamiltonian<T> {
    pub fn element(&self, (ms_e, mi_e): (Level, Level), (ms_n, mi_n): (Level, Level)) -> Complex<T> {
        self.matrix[3 * ms_e.index() + mi_e.index()][3 * ms_n.index() + mi_n.index()]
    }

    /// Electronic 3×3 block at fixed nuclear projection. Exact because the
    /// Hamiltonian has no transverse hyperfine terms.
    pub fn electron_block(&self, m_i: Level) -> CMat3<T> {
        let mut b = cmat3_zero();
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = self.matrix[3 * i + m_i.index()][3 * j + m_i.index()];
            }
        }
        b
    }

    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..9 {
            for j in 0..9 {
                worst = worst.max((self.matrix[i][j] - self.matrix[j][i].conj()).norm());
            }
        }
        worst
    }
}

fn kron<T: Real>(a: &CMat3<T>, b: &CMat3<T>) -> [[Complex<T>; 9]; 9] {
    let mut out = [[Complex::new(T::zero(), T::zero()); 9]; 9];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out[3 * i + k][3 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn identity3<T: Real>() -> CMat3<T> {
    crate::linalg::cmat3_identity()
}

fn scaled<T: Real>(a: &CMat3<T>, s: T) -> CMat3<T> {
    crate::linalg::cmat3_scale(a, Complex::new(s, T::zero()))
}

fn add<T: Real>(a: &CMat3<T>, b: &CMat3<T>) -> CMat3<T> {
    crate::linalg::cmat3_add(a, b)
}

/// Full lab-frame Hamiltonian:
/// `(D₀+ε∥σ∥)Sz² + P Iz² + A∥ Iz Sz + γB∥Sz + γB⊥Sx − ε⊥σx(Sx²−Sy²) + ε⊥σy(SxSy+SySx)`.
pub fn build_lab_hamiltonian<T: Real>(p: &SpinParameters<T>, f: &FieldConfig<T>) -> LabHamiltonian<T> {
    let ops = spin1_operators::<T>();
    let one = identity3::<T>();
    let sz2 = cmat3_mul(&ops.sz, &ops.sz);
    let sx2 = cmat3_mul(&ops.sx, &ops.sx);
    let sy2 = cmat3_mul(&ops.sy, &ops.sy);
    let sxsy = add(&cmat3_mul(&ops.sx, &ops.sy), &cmat3_mul(&ops.sy, &ops.sx));

    let mut electron = scaled(&sz2, p.d0 + p.eps_par * f.sigma_par);
    electron = add(&electron, &scaled(&ops.sz, p.gamma * f.b_par));
    electron = add(&electron, &scaled(&ops.sx, p.gamma * f.b_perp));
    electron = add(&electron, &scaled(&add(&sx2, &scaled(&sy2, -T::one())), -p.eps_perp * f.sigma_x));
    electron = add(&electron, &scaled(&sxsy, p.eps_perp * f.sigma_y));

    let e_part = kron(&electron, &one);
    let n_part = kron(&one, &scaled(&sz2, p.p));
    let hf = kron(&ops.sz, &scaled(&ops.sz, p.a_par));
    let mut matrix = e_part;
    for i in 0..9 {
        for j in 0..9 {
            matrix[i][j] += n_part[i][j] + hf[i][j];
        }
    }
    LabHamiltonian { matrix }
}

/// Non-fatal diagnostics from the rotating-frame reductions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FrameWarning {
    /// `|δ|` exceeds the configured rotating-wave validity bound.
    LargeDetuning { detuning: f64, bound: f64 },
    /// `γB⊥` is not small compared with `D₀`.
    PerpendicularField { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOptions<T> {
    /// Largest `|δ|` (rad/s) accepted silently. `None` means 5% of the
    /// drive frequency.
    pub rwa_bound: Option<T>,
    /// Largest `γB⊥/D₀` accepted silently.
    pub perp_field_ratio: T,
}

impl<T: Real> Default for FrameOptions<T> {
    fn default() -> Self {
        Self {
            rwa_bound: None,
            perp_field_ratio: T::lit(0.05),
        }
    }
}

/// Rotating-frame Hamiltonian on the three electronic levels for one
/// nuclear projection.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingQubitHamiltonian<T> {
    pub matrix: CMat3<T>,
    pub pair: QubitPair,
    pub m_i: i8,
    pub warnings: Vec<FrameWarning>,
}

impl<T: Real> RotatingQubitHamiltonian<T> {
    /// `(E_moving − E_reference) − ω` for the driven pair.
    pub fn transition_detuning(&self) -> T {
        let (m, r) = self.pair.levels();
        self.matrix[m.index()][m.index()].re - self.matrix[r.index()][r.index()].re
    }

    /// Off-diagonal element `⟨moving|H|reference⟩`.
    pub fn coupling(&self) -> Complex<T> {
        let (m, r) = self.pair.levels();
        self.matrix[m.index()][r.index()]
    }

    /// Rabi frequency `2|coupling|`.
    pub fn rabi(&self) -> T {
        self.coupling().norm() * T::lit(2.0)
    }

    /// Copy with the drive coupling multiplied by `factor` (e.g. the
    /// resonator envelope at some instant).
    pub fn with_drive_scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        let (m, r) = self.pair.levels();
        out.matrix[m.index()][r.index()] *= factor;
        out.matrix[r.index()][m.index()] *= factor;
        out
    }
}

fn check_nuclear(m_i: i8) -> Result<Level> {
    match m_i {
        1 => Ok(Level::Plus),
        0 => Ok(Level::Zero),
        -1 => Ok(Level::Minus),
        _ => Err(invalid("m_i", format!("nuclear projection must be -1, 0 or +1, got {m_i}"))),
    }
}

fn frame_warnings<T: Real>(
    p: &SpinParameters<T>,
    f: &FieldConfig<T>,
    detuning: T,
    drive_freq: T,
    opts: &FrameOptions<T>,
) -> Vec<FrameWarning> {
    let mut warnings = Vec::new();
    let bound = opts.rwa_bound.unwrap_or(drive_freq.abs() * T::lit(0.05));
    if detuning.abs() > bound {
        warnings.push(FrameWarning::LargeDetuning {
            detuning: detuning.as_f64(),
            bound: bound.as_f64(),
        });
    }
    let ratio = (p.gamma * f.b_perp).abs() / p.d0;
    if ratio > opts.perp_field_ratio {
        warnings.push(FrameWarning::PerpendicularField { ratio: ratio.as_f64() });
    }
    warnings
}

/// Reduction for a mechanical drive at `drive_freq` on `{−1, +1}`:
/// `diag(δ, 0, −δ)` with `2δ = (E₊₁ − E₋₁) − ω`, and `½Ω` couplings between
/// `|+1⟩` and `|−1⟩`, where the coupling is half the lab matrix element
/// produced by the stress amplitude `(σx, σy)`.
pub fn rotating_frame_mechanical<T: Real>(
    p: &SpinParameters<T>,
    f: &FieldConfig<T>,
    drive_freq: T,
    m_i: i8,
    opts: &FrameOptions<T>,
) -> Result<RotatingQubitHamiltonian<T>> {
    p.validate()?;
    check_nuclear(m_i)?;
    if !(drive_freq > T::zero()) {
        return Err(invalid("drive_freq", "must be positive"));
    }
    let e_plus = p.level_energy(f, 1, m_i);
    let e_minus = p.level_energy(f, -1, m_i);
    let delta = ((e_plus - e_minus) - drive_freq) * T::lit(0.5);
    let lab_coupling = Complex::new(-p.eps_perp * f.sigma_x, -p.eps_perp * f.sigma_y);
    let half = lab_coupling * T::lit(0.5);

    let mut m = cmat3_zero();
    m[0][0] = Complex::new(delta, T::zero());
    m[2][2] = Complex::new(-delta, T::zero());
    m[0][2] = half;
    m[2][0] = half.conj();
    Ok(RotatingQubitHamiltonian {
        matrix: m,
        pair: QubitPair::PlusMinus,
        m_i,
        warnings: frame_warnings(p, f, delta, drive_freq, opts),
    })
}

/// A resonant microwave drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticDrive<T> {
    /// Carrier angular frequency.
    pub freq: T,
    /// Rabi angular frequency `Ω_mag`.
    pub rabi: T,
    pub phase: T,
}

/// Reduction for a microwave drive on `{0, −1}` or `{+1, 0}`. The targeted
/// `±1` level carries the detuning `(E_target − E₀) − ω`; `|0⟩` and the
/// undriven level sit at zero. The coupling is `½Ω_mag e^{−iφ}`.
pub fn rotating_frame_magnetic<T: Real>(
    p: &SpinParameters<T>,
    f: &FieldConfig<T>,
    drive: &MagneticDrive<T>,
    target: QubitPair,
    m_i: i8,
    opts: &FrameOptions<T>,
) -> Result<RotatingQubitHamiltonian<T>> {
    p.validate()?;
    check_nuclear(m_i)?;
    if !target.is_magnetic() {
        return Err(invalid("target", "{-1,+1} is magnetic-dipole forbidden"));
    }
    if !(drive.freq > T::zero()) {
        return Err(invalid("drive.freq", "must be positive"));
    }
    let (moving, reference) = target.levels();
    let detuning =
        p.level_energy(f, moving.m(), m_i) - p.level_energy(f, reference.m(), m_i) - drive.freq;
    let coupling = Complex::from_polar(drive.rabi * T::lit(0.5), -drive.phase);

    let mut m = cmat3_zero();
    m[moving.index()][moving.index()] = Complex::new(detuning, T::zero());
    m[moving.index()][reference.index()] = coupling;
    m[reference.index()][moving.index()] = coupling.conj();
    Ok(RotatingQubitHamiltonian {
        matrix: m,
        pair: target,
        m_i,
        warnings: frame_warnings(p, f, detuning, drive.freq, opts),
    })
}

/// Rotating-frame reference frequencies of `|+1⟩` and `|−1⟩` relative to
/// `|0⟩`. A sequence mixing drives on different transitions is propagated
/// in one such frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveFrame<T> {
    pub plus: T,
    pub minus: T,
}

/// Level detunings of `|+1⟩` and `|−1⟩` in a [`DriveFrame`], `|0⟩` at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelDetunings<T> {
    pub plus: T,
    pub minus: T,
}

impl<T: Real> LevelDetunings<T> {
    /// Transition detuning of `pair` in the convention of
    /// [`QubitPair::levels`].
    pub fn transition(&self, pair: QubitPair) -> T {
        let get = |l: Level| match l {
            Level::Plus => self.plus,
            Level::Zero => T::zero(),
            Level::Minus => self.minus,
        };
        let (m, r) = pair.levels();
        get(m) - get(r)
    }

    /// Adds a quasi-static magnetic shift `b` (`+b` on `|+1⟩`, `−b` on `|−1⟩`).
    pub fn with_magnetic_shift(&self, b: T) -> Self {
        Self {
            plus: self.plus + b,
            minus: self.minus - b,
        }
    }
}

impl<T: Real> DriveFrame<T> {
    /// Frame rotating with the `m_I` hyperfine line of each transition,
    /// offset by the given transition detunings
    /// (`(E_moving − E_reference) − ω` convention).
    pub fn locked_to_line(
        p: &SpinParameters<T>,
        f: &FieldConfig<T>,
        m_i: i8,
        plus_detuning: T,
        minus_detuning: T,
    ) -> Result<Self> {
        check_nuclear(m_i)?;
        let e0 = p.level_energy(f, 0, m_i);
        Ok(Self {
            plus: p.level_energy(f, 1, m_i) - e0 - plus_detuning,
            minus: p.level_energy(f, -1, m_i) - e0 - minus_detuning,
        })
    }

    pub fn detunings(&self, p: &SpinParameters<T>, f: &FieldConfig<T>, m_i: i8) -> Result<LevelDetunings<T>> {
        check_nuclear(m_i)?;
        let e0 = p.level_energy(f, 0, m_i);
        Ok(LevelDetunings {
            plus: p.level_energy(f, 1, m_i) - e0 - self.plus,
            minus: p.level_energy(f, -1, m_i) - e0 - self.minus,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cmat3_add, cmat3_hermiticity_error, cmat3_scale};

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn spin_algebra() {
        let s = spin1_operators::<f64>();
        let comm = cmat3_add(
            &cmat3_mul(&s.sx, &s.sy),
            &cmat3_scale(&cmat3_mul(&s.sy, &s.sx), Complex::new(-1.0, 0.0)),
        );
        let isz = cmat3_scale(&s.sz, Complex::new(0.0, 1.0));
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(comm[i][j], isz[i][j], 1e-14));
            }
        }
        let cas = cmat3_add(
            &cmat3_add(&cmat3_mul(&s.sx, &s.sx), &cmat3_mul(&s.sy, &s.sy)),
            &cmat3_mul(&s.sz, &s.sz),
        );
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 2.0 } else { 0.0 };
                assert!(close(cas[i][j], Complex::new(e, 0.0), 1e-14));
            }
        }
        // Sz|+1⟩ = +1·|+1⟩
        assert_eq!(s.sz[0][0].re, 1.0);
        for m in [&s.sx, &s.sy, &s.sz] {
            assert!(cmat3_hermiticity_error(m) < 1e-15);
        }
    }

    #[test]
    fn zero_field_levels() {
        let p = SpinParameters::<f64>::nv();
        let h = build_lab_hamiltonian(&p, &FieldConfig::default());
        assert!(h.hermiticity_error() < 1e-12);
        let e00 = h.element((Level::Zero, Level::Zero), (Level::Zero, Level::Zero));
        assert_eq!(e00.re, 0.0);
        for ms in [Level::Plus, Level::Minus] {
            let e = h.element((ms, Level::Zero), (ms, Level::Zero));
            assert!((e.re - p.d0).abs() < 1e-3);
        }
        // nuclear quadrupole shift on |0, ±1⟩
        let e = h.element((Level::Zero, Level::Plus), (Level::Zero, Level::Plus));
        assert!((e.re - p.p).abs() < 1e-6);
    }

    #[test]
    fn zeeman_splitting_is_linear() {
        let p = SpinParameters::<f64>::nv();
        let f = FieldConfig {
            b_par: 92.0,
            ..Default::default()
        };
        let h = build_lab_hamiltonian(&p, &f);
        let ep = h.element((Level::Plus, Level::Zero), (Level::Plus, Level::Zero)).re;
        let em = h.element((Level::Minus, Level::Zero), (Level::Minus, Level::Zero)).re;
        assert!(((ep - em) - 2.0 * p.gamma * 92.0).abs() < 1e-3);
    }

    #[test]
    fn transverse_stress_couples_plus_minus() {
        let p = SpinParameters::<f64>::nv();
        let f = FieldConfig {
            sigma_x: 1e6,
            ..Default::default()
        };
        let h = build_lab_hamiltonian(&p, &f);
        let c = h.element((Level::Plus, Level::Zero), (Level::Minus, Level::Zero));
        let expected = 2.0 * std::f64::consts::PI * 0.015e6;
        assert!((c.norm() - expected).abs() < 1e-6);
        // σx never touches |0⟩
        for l in [Level::Plus, Level::Minus] {
            assert_eq!(h.element((Level::Zero, Level::Zero), (l, Level::Zero)).norm(), 0.0);
        }
        let fy = FieldConfig {
            sigma_y: 1e6,
            ..Default::default()
        };
        let cy = build_lab_hamiltonian(&p, &fy).element((Level::Plus, Level::Zero), (Level::Minus, Level::Zero));
        assert!((cy.norm() - expected).abs() < 1e-6);
    }

    #[test]
    fn mechanical_frame_structure() {
        let p = SpinParameters::<f64>::nv();
        let f = FieldConfig {
            b_par: 94.5,
            sigma_x: 2e6,
            ..Default::default()
        };
        let split = p.level_energy(&f, 1, 0) - p.level_energy(&f, -1, 0);
        let h = rotating_frame_mechanical(&p, &f, split, 0, &FrameOptions::default()).unwrap();
        assert!(h.transition_detuning().abs() < 1e-6);
        assert!(h.warnings.is_empty());
        for k in 0..3 {
            assert_eq!(h.matrix[1][k].norm(), 0.0);
            assert_eq!(h.matrix[k][1].norm(), 0.0);
        }
        assert!((h.rabi() - p.eps_perp * 2e6).abs() < 1e-6);
        assert!(cmat3_hermiticity_error(&h.matrix) < 1e-12);

        let h1 = rotating_frame_mechanical(&p, &f, split, 1, &FrameOptions::default()).unwrap();
        let offset = (h1.transition_detuning() - h.transition_detuning()).abs();
        assert!((offset - 2.0 * p.a_par.abs()).abs() < 1e-6);
        assert!((crate::units::angular_to_mhz(offset) - 4.332).abs() < 1e-9);

        let silent = FieldConfig { sigma_x: 0.0, ..f };
        let h0 = rotating_frame_mechanical(&p, &silent, split, 0, &FrameOptions::default()).unwrap();
        assert_eq!(h0.coupling().norm(), 0.0);
    }

    #[test]
    fn mechanical_frame_warns_far_off_resonance() {
        let p = SpinParameters::<f64>::nv();
        let f = FieldConfig {
            b_par: 94.5,
            ..Default::default()
        };
        let split = p.level_energy(&f, 1, 0) - p.level_energy(&f, -1, 0);
        let opts = FrameOptions {
            rwa_bound: Some(crate::units::mhz_to_angular(1.0)),
            ..Default::default()
        };
        let h = rotating_frame_mechanical(&p, &f, split + crate::units::mhz_to_angular(10.0), 0, &opts).unwrap();
        assert!(matches!(h.warnings[0], FrameWarning::LargeDetuning { .. }));
        let strong = FieldConfig { b_perp: 100.0, ..f };
        let h = rotating_frame_mechanical(&p, &strong, split, 0, &FrameOptions::default()).unwrap();
        assert!(h
            .warnings
            .iter()
            .any(|w| matches!(w, FrameWarning::PerpendicularField { .. })));
        assert!(rotating_frame_mechanical(&p, &f, split, 2, &FrameOptions::default()).is_err());
    }

    #[test]
    fn magnetic_frame_structure() {
        let p = SpinParameters::<f64>::nv();
        let f = FieldConfig {
            b_par: 30.0,
            ..Default::default()
        };
        let freq = p.level_energy(&f, -1, 0) - p.level_energy(&f, 0, 0);
        let rabi = std::f64::consts::PI / 30e-9;
        let drive = MagneticDrive { freq, rabi, phase: 0.0 };
        let h = rotating_frame_magnetic(&p, &f, &drive, QubitPair::ZeroMinus, 0, &FrameOptions::default()).unwrap();
        assert!(h.transition_detuning().abs() < 1e-6);
        assert!((crate::units::angular_to_mhz(h.rabi()) - 16.666_666_666).abs() < 1e-6);
        // only {0,−1} is coupled
        assert_eq!(h.matrix[0][1].norm(), 0.0);
        assert_eq!(h.matrix[0][2].norm(), 0.0);
        assert!(h.matrix[1][2].norm() > 0.0);
        assert!(rotating_frame_magnetic(&p, &f, &drive, QubitPair::PlusMinus, 0, &FrameOptions::default()).is_err());
    }

    #[test]
    fn drive_frame_reproduces_hyperfine_offsets() {
        let p = SpinParameters::<f64>::nv();
        let f = FieldConfig {
            b_par: 30.0,
            ..Default::default()
        };
        let delta = crate::units::khz_to_angular(350.0);
        let frame = DriveFrame::locked_to_line(&p, &f, 0, 0.0, delta).unwrap();
        for (m_i, shift) in [(1i8, -p.a_par), (0, 0.0), (-1, p.a_par)] {
            let d = frame.detunings(&p, &f, m_i).unwrap();
            assert!((d.transition(QubitPair::ZeroMinus) - (delta + shift)).abs() < 1e-3);
        }
        let d = frame.detunings(&p, &f, 0).unwrap().with_magnetic_shift(5.0);
        assert!((d.transition(QubitPair::PlusMinus) - (10.0 - delta)).abs() < 1e-6);
    }
}
