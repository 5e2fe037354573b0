use nalgebra::{Complex, DMatrix};
use nvmech::hamiltonian::*;
use nvmech::units::*;
use proptest::prelude::*;

fn eigenvalues(h: &LabHamiltonian<f64>) -> Vec<f64> {
    let m = DMatrix::from_fn(9, 9, |i, j| Complex::new(h.matrix[i][j].re, h.matrix[i][j].im));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

proptest! {
    #[test]
    fn diagonal_fields_match_closed_form(b in -200.0..200.0f64, s in -50.0..50.0f64) {
        let p = SpinParameters::nv();
        let f = FieldConfig { b_par: b, sigma_par: mpa_to_pa(s), ..Default::default() };
        let h = build_lab_hamiltonian(&p, &f);
        prop_assert!(h.hermiticity_error() < 1e-12 * p.d0);
        let ev = eigenvalues(&h);
        let mut expect: Vec<f64> = Vec::new();
        for ms in [1i8, 0, -1] {
            for mi in [1i8, 0, -1] {
                let m = ms as f64;
                let n = mi as f64;
                expect.push((p.d0 + p.eps_par * f.sigma_par) * m * m + p.p * n * n + p.a_par * m * n + p.gamma * b * m);
                prop_assert!((p.level_energy(&f, ms, mi) - expect.last().unwrap()).abs() < 1e-6);
            }
        }
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, e) in ev.iter().zip(&expect) {
            prop_assert!((a - e).abs() < 1e-9 * p.d0, "{a} vs {e}");
        }
    }

    #[test]
    fn rotating_frame_tracks_lab_differences(b in 0.0..100.0f64, off in -5.0..5.0f64, mi in -1i8..=1) {
        let p = SpinParameters::nv();
        let f = FieldConfig { b_par: b, ..Default::default() };
        let ev = eigenvalues(&build_lab_hamiltonian(&p, &f));
        // identify the lab eigenvalues of |±1, m_I⟩ independently of level_energy
        let nearest = |target: f64| *ev.iter().min_by(|x, y| (*x - target).abs().partial_cmp(&(*y - target).abs()).unwrap()).unwrap();
        let m = mi as f64;
        let e_plus = nearest(p.d0 + p.p * m * m + p.a_par * m + p.gamma * b);
        let e_minus = nearest(p.d0 + p.p * m * m - p.a_par * m - p.gamma * b);
        let e_zero = nearest(p.p * m * m);
        let drive = (e_plus - e_minus) - mhz_to_angular(off);
        let mech = rotating_frame_mechanical(&p, &f, drive.abs().max(1.0), mi, &FrameOptions::default()).unwrap();
        if drive > 1.0 {
            prop_assert!((mech.matrix[0][0].re - mhz_to_angular(off) / 2.0).abs() < 1e-9 * p.d0);
        }
        let drive_m = MagneticDrive { freq: (e_minus - e_zero) - mhz_to_angular(off), rabi: 1e6, phase: 0.0 };
        let mag = rotating_frame_magnetic(&p, &f, &drive_m, QubitPair::ZeroMinus, mi, &FrameOptions::default()).unwrap();
        prop_assert!((mag.transition_detuning() - mhz_to_angular(off)).abs() < 1e-9 * p.d0);
        prop_assert!(mag.matrix[0][0].norm() == 0.0);
    }
}

#[test]
fn mechanical_frame_structure() {
    let p = SpinParameters::<f64>::nv();
    let f = FieldConfig {
        sigma_x: mpa_to_pa(2.0),
        ..Default::default()
    };
    let h = rotating_frame_mechanical(&p, &f, 1e9, 0, &FrameOptions::default()).unwrap();
    for k in 0..3 {
        assert_eq!(h.matrix[1][k].norm(), 0.0);
        assert_eq!(h.matrix[k][1].norm(), 0.0);
    }
    let none = rotating_frame_mechanical(&p, &FieldConfig::default(), 1e9, 0, &FrameOptions::default()).unwrap();
    assert_eq!(none.matrix[0][2].norm(), 0.0);
    assert_eq!(none.matrix[2][0].norm(), 0.0);
}

#[test]
fn perpendicular_field_warns() {
    let p = SpinParameters::nv();
    let f = FieldConfig {
        b_perp: 100.0,
        ..Default::default()
    };
    let h = rotating_frame_mechanical(&p, &f, 1e9, 0, &FrameOptions::default()).unwrap();
    assert!(h
        .warnings
        .iter()
        .any(|w| matches!(w, FrameWarning::PerpendicularField { .. })));
}
