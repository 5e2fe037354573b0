use nvmech::analysis::*;
use nvmech::ensemble::*;
use nvmech::hamiltonian::{FieldConfig, QubitPair, SpinParameters};
use nvmech::pulse::{IntegratorOptions, RamseyQubit};
use nvmech::resonator::StandingWave;
use nvmech::units::*;
use nvmech::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const A_PAR_MHZ: f64 = 2.166;

fn model(kind: RamseyKind, t2_us: f64, delta_khz: f64) -> RamseyModel<f64> {
    RamseyModel {
        kind,
        t2_star: us_to_s(t2_us),
        delta: khz_to_angular(delta_khz),
        amplitudes: match kind {
            RamseyKind::Mechanical => [0.4, 0.0, 0.0],
            _ => [0.12, 0.15, 0.11],
        },
        phases: match kind {
            RamseyKind::Mechanical => [0.4, 0.0, 0.0],
            _ => [0.3, -0.5, 1.1],
        },
        a_par: mhz_to_angular(A_PAR_MHZ),
        omega_rot: if kind == RamseyKind::Mechanical { mhz_to_angular(3.5) } else { 0.0 },
    }
}

fn grid(n: usize, dt_ns: f64) -> Vec<f64> {
    (0..n).map(|k| ns_to_s(dt_ns * k as f64)).collect()
}

fn synth(m: &RamseyModel<f64>, t: &[f64], noise: f64, seed: u64) -> SignalTrace<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let y = t.iter().map(|&x| m.eval(x) + if noise > 0.0 { n.sample(&mut rng) } else { 0.0 }).collect();
    SignalTrace::exact(t.to_vec(), y)
}

fn fit(data: &SignalTrace<f64>, kind: RamseyKind, omega_rot: f64) -> nvmech::Result<FitResult<f64>> {
    fit_ramsey(data, kind, mhz_to_angular(A_PAR_MHZ), omega_rot, InitialGuess::Spectrum, &FitOptions::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_gradient_matches_finite_differences(
        t in 0.0..3.0f64,
        t2 in 0.2..2.0f64,
        d in -900.0..900.0f64,
        c in prop::array::uniform3(-0.5..0.5f64),
        ph in prop::array::uniform3(-3.0..3.0f64),
        k in 0usize..3,
    ) {
        let kind = [RamseyKind::SingleQuantum, RamseyKind::DoubleQuantum, RamseyKind::Mechanical][k];
        let mut m = model(kind, t2, d);
        m.amplitudes = c;
        m.phases = ph;
        let tt = us_to_s(t);
        let (v, g) = m.eval_with_gradient(tt);
        prop_assert!((v - m.eval(tt)).abs() < 1e-15);
        let p = m.params();
        for i in 0..p.len() {
            let h = 1e-6 * p[i].abs().max(if i == 1 { 1e-6 } else { 1e-3 });
            let mut up = p.clone();
            let mut dn = p.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (m.with_params(&up).eval(tt) - m.with_params(&dn).eval(tt)) / (2.0 * h);
            let scale = fd.abs().max(g[i].abs()).max(1e-3 / p[1].max(1e-9) * 1e-6);
            prop_assert!((fd - g[i]).abs() <= 1e-5 * scale + 1e-10, "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn normalization_is_affine_invariant(
        y in prop::array::uniform4(0.0..1.0f64),
        shift in -10.0..10.0f64,
    ) {
        prop_assume!((y[2] - y[3]).abs() > 1e-3);
        let a = normalize_ramsey(y[0], y[1], y[2], y[3]).unwrap();
        let b = normalize_ramsey(y[0] + shift, y[1] + shift, y[2] + shift, y[3] + shift).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn spectrum_is_parseval_and_scale_free(
        f in 0.3..8.0f64,
        amp in 0.01..10.0f64,
        ph in 0.0..6.0f64,
        pad in 1usize..10,
        hann in any::<bool>(),
    ) {
        let t = grid(150, 20.0);
        let y: Vec<f64> = t.iter().map(|&x| (mhz_to_angular(f) * x + ph).cos()).collect();
        let opts = SpectrumOptions {
            window: if hann { SpectrumWindow::Hann } else { SpectrumWindow::Rectangular },
            zero_pad_factor: pad,
            ..SpectrumOptions::default()
        };
        let tr = SignalTrace::exact(t.clone(), y.clone());
        let s = power_spectrum(&tr, &opts).unwrap();
        prop_assert!(s.power.iter().all(|p| *p >= 0.0));
        let n = y.len() as f64;
        let w = |k: usize| if hann { 0.5 * (1.0 - (std::f64::consts::TAU * k as f64 / (n - 1.0)).cos()) } else { 1.0 };
        let mean = y.iter().enumerate().map(|(k, v)| w(k) * v).sum::<f64>() / (0..y.len()).map(w).sum::<f64>();
        let energy: f64 = y.iter().enumerate().map(|(k, v)| ((v - mean) * w(k)).powi(2)).sum();
        prop_assert!((s.total_power() - energy).abs() <= 1e-9 * energy);
        let scaled = power_spectrum(&tr.map(|v| v * amp, |e| e), &opts).unwrap();
        let p1: Vec<usize> = s.peaks().iter().map(|p| p.index).collect();
        let p2: Vec<usize> = scaled.peaks().iter().map(|p| p.index).collect();
        prop_assert_eq!(p1, p2);
    }
}

#[test]
fn pure_cosine_peaks_within_one_bin() {
    let t = grid(200, 20.0);
    for f in [0.5, 1.3, 4.33, 9.1] {
        let y = t.iter().map(|&x| (mhz_to_angular(f) * x).cos()).collect();
        let s = power_spectrum(&SignalTrace::exact(t.clone(), y), &SpectrumOptions::default()).unwrap();
        let p = s.dominant().unwrap();
        assert!((p.frequency - mhz_to_angular(f)).abs() <= s.native_resolution, "{f}");
    }
}

#[test]
fn non_uniform_sampling_is_rejected() {
    let tr = SignalTrace::exact(vec![0.0, 1.0, 2.5, 3.0], vec![0.0, 1.0, 0.0, 1.0]);
    assert!(power_spectrum(&tr, &SpectrumOptions::default()).is_err());
}

#[test]
fn noiseless_data_is_recovered_exactly() {
    let t = grid(160, 20.0);
    for (kind, t2, d) in [
        (RamseyKind::SingleQuantum, 0.91, 350.0),
        (RamseyKind::SingleQuantum, 0.92, 17.0),
        (RamseyKind::DoubleQuantum, 0.36, 140.0),
        (RamseyKind::Mechanical, 0.45, 830.0),
    ] {
        let truth = model(kind, t2, d);
        let r = fit(&synth(&truth, &t, 0.0, 0), kind, truth.omega_rot).unwrap();
        let (canon_truth, got) = (truth.params(), r.values.clone());
        for (i, (a, b)) in canon_truth.iter().zip(&got).enumerate() {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{kind:?} param {i}: {a} vs {b}");
        }
        assert!(r.converged);
        assert!(r.uncertainties.iter().all(|u| *u >= 0.0));
    }
}

#[test]
fn noisy_fit_is_within_one_percent_when_clean() {
    let t = grid(160, 20.0);
    let truth = model(RamseyKind::SingleQuantum, 0.91, 350.0);
    let r = fit(&synth(&truth, &t, 1e-5, 3), RamseyKind::SingleQuantum, 0.0).unwrap();
    assert!((r.model.t2_star / truth.t2_star - 1.0).abs() < 0.01);
    assert!((r.model.delta / truth.delta - 1.0).abs() < 0.01);
    for i in 0..3 {
        assert!((r.model.amplitudes[i] / truth.amplitudes[i] - 1.0).abs() < 0.01);
    }
}

#[test]
fn uncertainty_is_calibrated() {
    let t = grid(150, 20.0);
    let truth = model(RamseyKind::Mechanical, 0.45, 830.0);
    let mut est = Vec::new();
    let mut reported = Vec::new();
    for seed in 0..200 {
        let r = fit(&synth(&truth, &t, 0.02 * 0.4, seed), RamseyKind::Mechanical, truth.omega_rot).unwrap();
        est.push(r.model.t2_star);
        reported.push(r.uncertainty("t2_star").unwrap());
    }
    let n = est.len() as f64;
    let mean = est.iter().sum::<f64>() / n;
    let sd = (est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let rep = reported.iter().sum::<f64>() / n;
    assert!((sd / rep - 1.0).abs() < 0.3, "empirical {sd:e} vs reported {rep:e}");
}

#[test]
fn sign_mirror_is_canonicalized() {
    let t = grid(160, 20.0);
    let mut truth = model(RamseyKind::SingleQuantum, 0.8, 300.0);
    truth.delta = -truth.delta;
    let r = fit(&synth(&truth, &t, 0.0, 0), RamseyKind::SingleQuantum, 0.0).unwrap();
    assert!(r.model.delta > 0.0);
    for &x in &t {
        assert!((r.model.eval(x) - truth.eval(x)).abs() < 1e-8);
    }
}

#[test]
fn insufficient_data_is_rejected() {
    let t = grid(20, 20.0);
    let truth = model(RamseyKind::SingleQuantum, 0.9, 300.0);
    let r = fit(&synth(&truth, &t, 0.0, 0), RamseyKind::SingleQuantum, 0.0);
    assert!(matches!(r, Err(Error::InsufficientData { points: 20, params: 8, required: 32 })));
}

#[test]
fn simulated_mechanical_ramsey_fits_to_the_drive_detuning() {
    let delta = khz_to_angular(250.0);
    let omega_rot = mhz_to_angular(1.5);
    let half_pi = ns_to_s(100.0);
    let cfg = EnsembleConfig::new(
        SpinParameters::nv(),
        FieldConfig::default(),
        delta,
        0.0,
        StandingWave::new(std::f64::consts::FRAC_PI_2 / half_pi, um_to_m(20.0)).unwrap(),
        DepthModel::Fixed { z: um_to_m(5.0) },
        Some(nvmech::pulse::NoiseModel::gaussian(us_to_s(1.0), QubitPair::PlusMinus).unwrap()),
        NuclearAverage::Driven { factor: 1.0 },
        1,
        0,
    )
    .unwrap();
    let cfg = EnsembleConfig { noise: None, ..cfg };
    let taus = grid(120, 20.0);
    let r = ramsey_average(&cfg, RamseyQubit::Mechanical { half_pi_duration: half_pi }, &taus, omega_rot, &IntegratorOptions::default()).unwrap();
    let tr = r.coherence.map(|v| v, |e| e);
    // no dephasing: a very long fitted T₂*
    let f = fit_ramsey(&tr, RamseyKind::Mechanical, 0.0, omega_rot, InitialGuess::Spectrum, &FitOptions::default()).unwrap();
    assert!((f.model.delta - delta).abs() < khz_to_angular(15.0), "{}", angular_to_khz(f.model.delta));
}
