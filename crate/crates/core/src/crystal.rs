//! Cubic elasticity and the conversion of NV spin–strain couplings into
//! spin–stress couplings.
//!
//! Voigt convention used throughout: index order `xx, yy, zz, yz, zx, xy`.
//! Strain vectors carry engineering shear (`γ_yz = 2ε_yz`), stress vectors
//! carry the plain tensor component (`σ_yz`). With this pairing `σ = C·e`
//! and the work density `σ:ε = σ_v · e_v` hold with the printed cubic
//! stiffness matrix.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{det3, invert, mat3_mul, mat_vec, transpose3};
use crate::scalar::Real;
use crate::units;

pub type Tensor2<T> = [[T; 3]; 3];
pub type Voigt<T> = [T; 6];

const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (2, 0), (0, 1)];

/// Cubic stiffness constants, stored in Pa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessMatrix<T> {
    pub c11: T,
    pub c12: T,
    pub c44: T,
}

/// Builds a cubic stiffness matrix from constants given in GPa.
pub fn build_stiffness<T: Real>(c11_gpa: T, c12_gpa: T, c44_gpa: T) -> Result<StiffnessMatrix<T>> {
    for (name, v) in [("c11", c11_gpa), ("c12", c12_gpa), ("c44", c44_gpa)] {
        if !v.is_finite() {
            return Err(invalid(name, "must be finite"));
        }
    }
    // c12 = 0 is allowed: it is the decoupled diagonal case.
    if c11_gpa <= T::zero() {
        return Err(invalid("c11", format!("must be positive, got {c11_gpa}")));
    }
    if c12_gpa < T::zero() {
        return Err(invalid("c12", format!("must be non-negative, got {c12_gpa}")));
    }
    if c44_gpa <= T::zero() {
        return Err(invalid("c44", format!("must be positive, got {c44_gpa}")));
    }
    Ok(StiffnessMatrix {
        c11: units::gpa_to_pa(c11_gpa),
        c12: units::gpa_to_pa(c12_gpa),
        c44: units::gpa_to_pa(c44_gpa),
    })
}

impl<T: Real> StiffnessMatrix<T> {
    /// Diamond elastic constants (1076.4, 125.2, 577.4) GPa.
    pub fn diamond() -> Self {
        build_stiffness(T::lit(1076.4), T::lit(125.2), T::lit(577.4)).expect("valid constants")
    }

    /// 6×6 Voigt matrix in Pa.
    pub fn voigt(&self) -> [[T; 6]; 6] {
        let mut m = [[T::zero(); 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = if i == j { self.c11 } else { self.c12 };
            }
            m[i + 3][i + 3] = self.c44;
        }
        m
    }

    /// 6×6 Voigt matrix in GPa.
    pub fn voigt_gpa(&self) -> [[T; 6]; 6] {
        let mut m = self.voigt();
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = units::pa_to_gpa(*v);
            }
        }
        m
    }

    /// Compliance matrix (engineering strain per stress), in 1/Pa.
    pub fn compliance(&self) -> Result<[[T; 6]; 6]> {
        // Invert in GPa to keep the pivots O(1).
        let inv = invert(&self.voigt_gpa(), "stiffness inversion")?;
        let mut s = inv;
        for row in s.iter_mut() {
            for v in row.iter_mut() {
                *v = units::pa_to_gpa(*v);
            }
        }
        Ok(s)
    }

    /// Cubic positive-definiteness: `c44 > 0`, `c11 > |c12|`, `c11 + 2c12 > 0`.
    pub fn is_positive_definite(&self) -> bool {
        self.c44 > T::zero() && self.c11 > self.c12.abs() && self.c11 + T::lit(2.0) * self.c12 > T::zero()
    }
}

/// Spin–strain couplings, in rad/s per unit strain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainCouplings<T> {
    pub d_perp: T,
    pub d_par: T,
}

impl<T: Real> StrainCouplings<T> {
    /// From `d/2π` values in GHz/strain.
    pub fn from_ghz(d_perp_ghz: T, d_par_ghz: T) -> Self {
        Self {
            d_perp: units::ghz_to_angular(d_perp_ghz),
            d_par: units::ghz_to_angular(d_par_ghz),
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            d_perp: self.d_perp * k,
            d_par: self.d_par * k,
        }
    }
}

/// Spin–stress couplings, in rad/s per Pa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressCouplings<T> {
    pub eps_perp: T,
    pub eps_par: T,
}

impl<T: Real> StressCouplings<T> {
    /// From `ε/2π` values in MHz/MPa.
    pub fn from_mhz_per_mpa(eps_perp: T, eps_par: T) -> Self {
        Self {
            eps_perp: units::mhz_per_mpa_to_angular(eps_perp),
            eps_par: units::mhz_per_mpa_to_angular(eps_par),
        }
    }

    /// `(ε⊥/2π, ε∥/2π)` in MHz/MPa.
    pub fn to_mhz_per_mpa(&self) -> (T, T) {
        (
            units::angular_to_mhz_per_mpa(self.eps_perp),
            units::angular_to_mhz_per_mpa(self.eps_par),
        )
    }
}

/// Orthogonal map between the NV frame and the cubic lattice frame.
///
/// Row `i` holds NV axis `i` (x, y, z = symmetry axis) expressed in lattice
/// coordinates, so `v_nv = R · v_lattice`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRotation<T> {
    rows: [[T; 3]; 3],
}

impl<T: Real> FrameRotation<T> {
    pub fn new(rows: [[T; 3]; 3]) -> Result<Self> {
        let tol = Self::tolerance();
        let rrt = mat3_mul(&rows, &transpose3(&rows));
        for (i, row) in rrt.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let expected = if i == j { T::one() } else { T::zero() };
                if (v - expected).abs() > tol {
                    return Err(invalid("rotation", "rows are not orthonormal"));
                }
            }
        }
        if (det3(&rows) - T::one()).abs() > tol {
            return Err(invalid("rotation", "determinant is not +1"));
        }
        Ok(Self { rows })
    }

    fn tolerance() -> T {
        // 1e-12 for f64, scaled for lower precision types.
        T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
    }

    /// NV axis along `axis`, transverse x axis from Gram–Schmidt on `reference`.
    pub fn from_axis(axis: [T; 3], reference: [T; 3]) -> Result<Self> {
        let norm = |v: [T; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let n = norm(axis);
        if n == T::zero() {
            return Err(invalid("axis", "zero vector"));
        }
        let z = [axis[0] / n, axis[1] / n, axis[2] / n];
        let dot = reference[0] * z[0] + reference[1] * z[1] + reference[2] * z[2];
        let xr = [reference[0] - dot * z[0], reference[1] - dot * z[1], reference[2] - dot * z[2]];
        let xn = norm(xr);
        if xn <= T::epsilon() * T::lit(1e3) * norm(reference).max(T::one()) {
            return Err(invalid("reference", "parallel to the NV axis"));
        }
        let x = [xr[0] / xn, xr[1] / xn, xr[2] / xn];
        let y = [
            z[1] * x[2] - z[2] * x[1],
            z[2] * x[0] - z[0] * x[2],
            z[0] * x[1] - z[1] * x[0],
        ];
        Self::new([x, y, z])
    }

    /// NV axis along [111] with x along [11-2].
    pub fn nv_111() -> Self {
        Self::from_axis(
            [T::one(), T::one(), T::one()],
            [T::one(), T::one(), -T::lit(2.0)],
        )
        .expect("[111] frame is valid")
    }

    /// Same NV axis, transverse axes rotated by `angle` about it.
    pub fn rotated_about_axis(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let [x, y, z] = self.rows;
        let mut nx = [T::zero(); 3];
        let mut ny = [T::zero(); 3];
        for k in 0..3 {
            nx[k] = c * x[k] + s * y[k];
            ny[k] = -s * x[k] + c * y[k];
        }
        Self { rows: [nx, ny, z] }
    }

    pub fn matrix(&self) -> [[T; 3]; 3] {
        self.rows
    }

    /// `Rᵀ · A · R`: NV-frame tensor expressed in the lattice frame.
    pub fn to_lattice(&self, a: &Tensor2<T>) -> Tensor2<T> {
        mat3_mul(&transpose3(&self.rows), &mat3_mul(a, &self.rows))
    }

    /// `R · A · Rᵀ`: lattice tensor expressed in the NV frame.
    pub fn to_nv(&self, a: &Tensor2<T>) -> Tensor2<T> {
        mat3_mul(&self.rows, &mat3_mul(a, &transpose3(&self.rows)))
    }
}

/// Symmetric strain tensor to engineering Voigt vector.
pub fn strain_to_voigt<T: Real>(e: &Tensor2<T>) -> Voigt<T> {
    let mut v = [T::zero(); 6];
    for (k, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        v[k] = if k < 3 { e[i][j] } else { e[i][j] + e[j][i] };
    }
    v
}

/// Engineering Voigt vector to symmetric strain tensor.
pub fn voigt_to_strain<T: Real>(v: &Voigt<T>) -> Tensor2<T> {
    let mut e = [[T::zero(); 3]; 3];
    for (k, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        let val = if k < 3 { v[k] } else { v[k] * T::lit(0.5) };
        e[i][j] = val;
        e[j][i] = val;
    }
    e
}

/// Symmetric stress tensor to Voigt vector (no shear factor).
pub fn stress_to_voigt<T: Real>(s: &Tensor2<T>) -> Voigt<T> {
    let mut v = [T::zero(); 6];
    for (k, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        v[k] = if k < 3 { s[i][j] } else { (s[i][j] + s[j][i]) * T::lit(0.5) };
    }
    v
}

pub fn voigt_to_stress<T: Real>(v: &Voigt<T>) -> Tensor2<T> {
    let mut s = [[T::zero(); 3]; 3];
    for (k, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        s[i][j] = v[k];
        s[j][i] = v[k];
    }
    s
}

/// Converts an NV-frame spin–strain coupling tensor `K` (energy shift
/// `K:ε`) into the NV-frame spin–stress coupling tensor `M` (shift `M:σ`).
///
/// `K` is rotated into the lattice, contracted with the compliance
/// (`M = S:K`), and rotated back. `K` pairs with strain the way stress does,
/// so it enters Voigt form without the shear factor and `S·k` comes out as an
/// engineering strain vector.
pub fn stress_coupling_tensor<T: Real>(
    k_nv: &Tensor2<T>,
    stiffness: &StiffnessMatrix<T>,
    rotation: &FrameRotation<T>,
) -> Result<Tensor2<T>> {
    let compliance = stiffness.compliance()?;
    let k_lat = stress_to_voigt(&rotation.to_lattice(k_nv));
    let m_lat = voigt_to_strain(&mat_vec(&compliance, &k_lat));
    Ok(rotation.to_nv(&m_lat))
}

/// Spin–stress couplings from spin–strain couplings.
///
/// The axial coupling multiplies `ε_zz` in the NV frame; the transverse one
/// multiplies `ε_xx − ε_yy`. The stress couplings are read off the same
/// components of the converted tensor: `ε∥ = M_zz` and
/// `ε⊥ = (M_xx − M_yy)/2`, the coefficient of `σ_xx − σ_yy`. The transverse
/// value does not depend on which transverse axes the rotation uses.
pub fn strain_to_stress_couplings<T: Real>(
    d: &StrainCouplings<T>,
    stiffness: &StiffnessMatrix<T>,
    rotation: &FrameRotation<T>,
) -> Result<StressCouplings<T>> {
    let zero = T::zero();
    let k_par = [[zero; 3], [zero; 3], [zero, zero, d.d_par]];
    let k_perp = [[d.d_perp, zero, zero], [zero, -d.d_perp, zero], [zero; 3]];
    let m_par = stress_coupling_tensor(&k_par, stiffness, rotation)?;
    let m_perp = stress_coupling_tensor(&k_perp, stiffness, rotation)?;
    Ok(StressCouplings {
        eps_perp: (m_perp[0][0] - m_perp[1][1]) * T::lit(0.5),
        eps_par: m_par[2][2],
    })
}
