//! Acoustic resonator drive: ring-up/ring-down envelope, enclosed pulse
//! area and the standing-wave amplitude profile.
//!
//! Time origin is the leading edge of the drive voltage. An optional
//! trigger offset delays the acoustic onset relative to that origin.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Envelope level below which the ring-down is treated as finished.
pub const RING_DOWN_CUTOFF: f64 = 1e-6;

/// Ring time `τ_r = 2Q/ω_m`.
pub fn tau_ring<T: Real>(omega_m: T, q: T) -> Result<T> {
    if !(omega_m > T::zero()) || !omega_m.is_finite() {
        return Err(invalid("omega_m", "must be positive and finite"));
    }
    if !(q > T::zero()) || !q.is_finite() {
        return Err(invalid("q", "quality factor must be positive and finite"));
    }
    Ok(T::lit(2.0) * q / omega_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingModel<T> {
    pub omega_m: T,
    pub q: T,
    pub tau_r: T,
    /// Drive pulse length `L`.
    pub length: T,
    /// Ring-down reference `t₀ = L + τ_r ln(1 − e^{−L/τ_r})`.
    pub t0: T,
    pub trigger_offset: T,
}

/// A window `[start, end]` together with its enclosed area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub start: T,
    pub end: T,
    pub area: T,
}

/// `x − (1 − e^{−x})` without cancellation for small `x`.
fn ramp_integral<T: Real>(x: T) -> T {
    if x < T::lit(1e-3) {
        let x2 = x * x;
        x2 * (T::lit(0.5) - x / T::lit(6.0) + x2 / T::lit(24.0) - x2 * x / T::lit(120.0))
    } else {
        x + (-x).exp_m1()
    }
}

impl<T: Real> RingModel<T> {
    pub fn new(omega_m: T, q: T, length: T) -> Result<Self> {
        let tau_r = tau_ring(omega_m, q)?;
        if !(length > T::zero()) || !length.is_finite() {
            return Err(invalid("length", "pulse length must be positive and finite"));
        }
        let t0 = length + tau_r * (-(-length / tau_r).exp_m1()).ln();
        Ok(Self {
            omega_m,
            q,
            tau_r,
            length,
            t0,
            trigger_offset: T::zero(),
        })
    }

    pub fn with_trigger_offset(mut self, offset: T) -> Self {
        self.trigger_offset = offset;
        self
    }

    /// Envelope value reached at the end of the drive, `1 − e^{−L/τ_r}`.
    pub fn peak(&self) -> T {
        -(-self.length / self.tau_r).exp_m1()
    }

    /// Normalized drive amplitude in `[0, 1]`.
    pub fn envelope(&self, t: T) -> T {
        let s = t - self.trigger_offset;
        if s <= T::zero() {
            T::zero()
        } else if s <= self.length {
            -(-s / self.tau_r).exp_m1()
        } else {
            self.peak() * (-(s - self.length) / self.tau_r).exp()
        }
    }

    /// `∫_{-∞}^{t} envelope`.
    pub fn antiderivative(&self, t: T) -> T {
        let s = t - self.trigger_offset;
        let tau = self.tau_r;
        if s <= T::zero() {
            return T::zero();
        }
        if s <= self.length {
            return tau * ramp_integral(s / tau);
        }
        let f_l = tau * ramp_integral(self.length / tau);
        f_l - tau * self.peak() * (-(s - self.length) / tau).exp_m1()
    }

    /// Enclosed area `∫_{t1}^{t2} envelope dt`, in seconds of
    /// full-amplitude drive.
    pub fn pulse_area(&self, t1: T, t2: T) -> Result<T> {
        if !(t2 >= t1) {
            return Err(Error::InvalidInterval {
                start: t1.as_f64(),
                end: t2.as_f64(),
            });
        }
        Ok((self.antiderivative(t2) - self.antiderivative(t1)).max(T::zero()))
    }

    /// Drive-active interval `[onset, end]`, with the ring-down cut where
    /// the envelope falls below [`RING_DOWN_CUTOFF`].
    pub fn active_interval(&self) -> (T, T) {
        let onset = self.trigger_offset;
        let cutoff = T::lit(RING_DOWN_CUTOFF);
        let tail = if self.peak() > cutoff {
            self.tau_r * (self.peak() / cutoff).ln()
        } else {
            T::zero()
        };
        (onset, onset + self.length + tail)
    }

    /// Placement of a window of fixed `width` that encloses the largest
    /// area. At the optimum the envelope takes equal values at both edges.
    pub fn optimal_window(&self, width: T) -> Result<Window<T>> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(invalid("width", "window width must be positive"));
        }
        // g(s) = env(s+w) − env(s) is positive while the whole window sits
        // on the ring-up and strictly decreasing once it straddles L.
        let off = self.trigger_offset;
        let mut lo = off + (self.length - width).max(T::zero());
        let mut hi = off + self.length;
        let g = |s: T| self.envelope(s + width) - self.envelope(s);
        if g(lo) <= T::zero() {
            hi = lo;
        }
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let start = (lo + hi) * T::lit(0.5);
        Ok(Window {
            start,
            end: start + width,
            area: self.pulse_area(start, start + width)?,
        })
    }
}

/// Acoustic standing wave across the diamond thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandingWave<T> {
    /// Rabi angular frequency at an antinode.
    pub omega_mech: T,
    /// Acoustic wavelength, m.
    pub wavelength: T,
}

impl<T: Real> StandingWave<T> {
    pub fn new(omega_mech: T, wavelength: T) -> Result<Self> {
        if !(omega_mech >= T::zero()) || !omega_mech.is_finite() {
            return Err(invalid("omega_mech", "must be non-negative and finite"));
        }
        if !(wavelength > T::zero()) || !wavelength.is_finite() {
            return Err(invalid("wavelength", "must be positive and finite"));
        }
        Ok(Self { omega_mech, wavelength })
    }

    /// `Ω(z) = Ω_mech |sin(2πz/λ)|`.
    pub fn omega_at_depth(&self, z: T) -> T {
        self.omega_mech * (T::TAU() * z / self.wavelength).sin().abs()
    }

    /// Node depths `kλ/2` strictly inside `(a, b)`.
    pub fn nodes_between(&self, a: T, b: T) -> Vec<T> {
        let half = self.wavelength * T::lit(0.5);
        let mut k = (a / half).floor() + T::one();
        let mut out = Vec::new();
        loop {
            let z = k * half;
            if z >= b {
                break;
            }
            if z > a {
                out.push(z);
            }
            k += T::one();
        }
        out
    }
}

/// Free-function form of [`StandingWave::omega_at_depth`].
pub fn omega_at_depth<T: Real>(w: &StandingWave<T>, z: T) -> T {
    w.omega_at_depth(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_angular, s_to_us, um_to_m, us_to_s};

    fn ring_529mhz() -> RingModel<f64> {
        RingModel::new(mhz_to_angular(529.0), 4000.0, us_to_s(3.0)).unwrap()
    }

    #[test]
    fn ring_times() {
        let r = ring_529mhz();
        assert!((s_to_us(r.tau_r) - 2.407).abs() < 5e-4);
        assert!((s_to_us(r.length + r.tau_r) - 5.41).abs() < 5e-3);
        let low = tau_ring(mhz_to_angular(771.0), 1400.0).unwrap();
        assert!((s_to_us::<f64>(low) - 0.578).abs() < 1e-3);
        assert!(tau_ring(mhz_to_angular(529.0), 1e-12).unwrap() < 1e-20);
        assert!(tau_ring(0.0, 10.0).is_err());
        assert!(tau_ring(1.0, -1.0).is_err());
    }

    #[test]
    fn envelope_shape() {
        let r = ring_529mhz();
        assert_eq!(r.envelope(0.0), 0.0);
        let below = r.envelope(r.length);
        let above = (-(r.length - r.t0) / r.tau_r).exp();
        assert!((below - above).abs() < 1e-12);
        assert!((r.envelope(r.length * (1.0 + 1e-15)) - below).abs() < 1e-12);
        assert!(r.envelope(r.length + 20.0 * r.tau_r) < 1e-8);
    }

    #[test]
    fn area_edge_cases() {
        let r = ring_529mhz();
        assert_eq!(r.pulse_area(1e-6, 1e-6).unwrap(), 0.0);
        assert!(matches!(r.pulse_area(2e-6, 1e-6), Err(Error::InvalidInterval { .. })));
        let total = r.pulse_area(0.0, 1.0).unwrap();
        // full ring-up plus ring-down equals L exactly
        assert!((total - r.length).abs() < 1e-15);
    }

    #[test]
    fn optimal_window_edges() {
        let r = ring_529mhz();
        let w = r.optimal_window(r.length + r.tau_r).unwrap();
        assert!((r.envelope(w.start) - r.envelope(w.end)).abs() < 1e-9);
        assert!((s_to_us(w.end) - 5.97).abs() < 0.01);
        let shifted = r.with_trigger_offset(us_to_s(0.06));
        let ws = shifted.optimal_window(r.length + r.tau_r).unwrap();
        assert!((ws.end - w.end - us_to_s(0.06)).abs() < 1e-12);
    }

    #[test]
    fn standing_wave() {
        let w = StandingWave::new(mhz_to_angular(1.0), um_to_m(19.9)).unwrap();
        assert!((w.omega_at_depth(um_to_m::<f64>(19.9 / 4.0)) - w.omega_mech).abs() < 1e-9);
        assert!(w.omega_at_depth(0.0) < 1e-12);
        assert!(w.omega_at_depth(um_to_m(19.9 / 2.0)) < 1e-6);
        let z = um_to_m(18.0);
        let expected = w.omega_mech * (2.0 * std::f64::consts::PI * 18.0 / 19.9).sin().abs();
        assert!((w.omega_at_depth(z) - expected).abs() < 1e-9);
        let nodes = w.nodes_between(um_to_m(5.0), um_to_m(31.0));
        assert_eq!(nodes.len(), 3);
        assert!((nodes[0] - um_to_m(9.95)).abs() < 1e-15);
    }
}
