//! Boundary conversions. Internally everything is SI with angular
//! frequencies in rad/s, times in s, lengths in m and stress in Pa.
//! Magnetic fields stay in gauss.

use crate::scalar::Real;

/// `f/2π` in MHz to rad/s.
#[inline]
pub fn mhz_to_angular<T: Real>(f_mhz: T) -> T {
    f_mhz * T::lit(1e6) * T::TAU()
}

/// rad/s to `f/2π` in MHz.
#[inline]
pub fn angular_to_mhz<T: Real>(omega: T) -> T {
    omega / (T::TAU() * T::lit(1e6))
}

#[inline]
pub fn khz_to_angular<T: Real>(f_khz: T) -> T {
    f_khz * T::lit(1e3) * T::TAU()
}

#[inline]
pub fn angular_to_khz<T: Real>(omega: T) -> T {
    omega / (T::TAU() * T::lit(1e3))
}

#[inline]
pub fn ghz_to_angular<T: Real>(f_ghz: T) -> T {
    f_ghz * T::lit(1e9) * T::TAU()
}

#[inline]
pub fn us_to_s<T: Real>(t_us: T) -> T {
    t_us * T::lit(1e-6)
}

#[inline]
pub fn s_to_us<T: Real>(t: T) -> T {
    t * T::lit(1e6)
}

#[inline]
pub fn ns_to_s<T: Real>(t_ns: T) -> T {
    t_ns * T::lit(1e-9)
}

#[inline]
pub fn um_to_m<T: Real>(z_um: T) -> T {
    z_um * T::lit(1e-6)
}

#[inline]
pub fn m_to_um<T: Real>(z: T) -> T {
    z * T::lit(1e6)
}

#[inline]
pub fn mpa_to_pa<T: Real>(s_mpa: T) -> T {
    s_mpa * T::lit(1e6)
}

#[inline]
pub fn gpa_to_pa<T: Real>(s_gpa: T) -> T {
    s_gpa * T::lit(1e9)
}

#[inline]
pub fn pa_to_gpa<T: Real>(s: T) -> T {
    s * T::lit(1e-9)
}

/// `ε/2π` in MHz/MPa to (rad/s)/Pa.
#[inline]
pub fn mhz_per_mpa_to_angular<T: Real>(c: T) -> T {
    mhz_to_angular(c) / T::lit(1e6)
}

/// (rad/s)/Pa to `ε/2π` in MHz/MPa.
#[inline]
pub fn angular_to_mhz_per_mpa<T: Real>(c: T) -> T {
    angular_to_mhz(c) * T::lit(1e6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_invert() {
        let w = mhz_to_angular(2.87e3_f64);
        assert!((angular_to_mhz(w) - 2.87e3).abs() < 1e-9);
        let c = mhz_per_mpa_to_angular(0.015_f64);
        assert!((angular_to_mhz_per_mpa(c) - 0.015).abs() < 1e-15);
        assert!((c - 2.0 * std::f64::consts::PI * 0.015).abs() < 1e-12);
    }
}
