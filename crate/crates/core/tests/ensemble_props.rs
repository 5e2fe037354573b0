use nvmech::ensemble::*;
use nvmech::hamiltonian::{FieldConfig, QubitPair, SpinParameters};
use nvmech::pulse::{IntegratorOptions, NoiseModel, RabiReadout, RamseyQubit};
use nvmech::resonator::{RingModel, StandingWave};
use nvmech::units::*;

const LAMBDA_UM: f64 = 19.9;

fn config(depth: DepthModel<f64>, noise: Option<NoiseModel<f64>>, shots: usize, seed: u64) -> EnsembleConfig<f64> {
    EnsembleConfig::new(
        SpinParameters::nv(),
        FieldConfig::default(),
        0.0,
        0.0,
        StandingWave::new(mhz_to_angular(1.0), um_to_m(LAMBDA_UM)).unwrap(),
        depth,
        noise,
        NuclearAverage::Driven { factor: 1.0 / 3.0 },
        shots,
        seed,
    )
    .unwrap()
}

fn psf(z0_um: f64, slope: f64) -> DepthModel<f64> {
    DepthModel::Psf(PsfModel::new(um_to_m(z0_um), um_to_m(2.0), slope).unwrap())
}

fn fig2_noise() -> Option<NoiseModel<f64>> {
    Some(NoiseModel::gaussian(us_to_s(0.45), QubitPair::PlusMinus).unwrap())
}

fn times(n: usize, step_us: f64) -> Vec<f64> {
    (0..n).map(|k| us_to_s(step_us * k as f64)).collect()
}

#[test]
fn standard_error_scales_with_shots() {
    let t = times(40, 0.05);
    let mean_se = |shots| {
        let cfg = config(DepthModel::Fixed { z: um_to_m(18.0) }, fig2_noise(), shots, 3);
        let tr = rabi_average_lowq(&cfg, &t, LowQMethod::Analytic).unwrap();
        tr.stderr.iter().skip(1).sum::<f64>() / (tr.len() - 1) as f64
    };
    let (a, b, c) = (mean_se(50), mean_se(200), mean_se(800));
    for ratio in [a / b, b / c] {
        assert!((ratio - 2.0).abs() < 0.5, "ratios {} {}", a / b, b / c);
    }
}

#[test]
fn half_wavelength_translation_is_invisible() {
    let t = times(30, 0.1);
    let a = rabi_average_lowq(&config(psf(14.0, 0.0), fig2_noise(), 20, 9), &t, LowQMethod::Analytic).unwrap();
    let b = rabi_average_lowq(&config(psf(14.0 + LAMBDA_UM / 2.0, 0.0), fig2_noise(), 20, 9), &t, LowQMethod::Analytic).unwrap();
    for (x, y) in a.mean.iter().zip(&b.mean) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn signals_start_at_zero_and_stay_in_range() {
    let t = times(60, 0.05);
    let tr = rabi_average_lowq(&config(psf(18.0, 0.5), fig2_noise(), 30, 1), &t, LowQMethod::Analytic).unwrap();
    assert!(tr.mean[0].abs() < 1e-15);
    assert!(tr.mean.iter().all(|v| (0.0..=1.0 / 3.0 + 1e-9).contains(v)));
}

#[test]
fn analytic_and_propagated_lowq_agree() {
    let t = times(12, 0.2);
    let cfg = config(psf(18.0, 0.5), fig2_noise(), 4, 21);
    let a = rabi_average_lowq(&cfg, &t, LowQMethod::Analytic).unwrap();
    let p = rabi_average_lowq(
        &cfg,
        &t,
        LowQMethod::Propagate {
            length: us_to_s(3.0),
            readout: RabiReadout::Pi,
            options: IntegratorOptions::default(),
        },
    )
    .unwrap();
    for (x, y) in a.mean.iter().zip(&p.mean) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let t = times(25, 0.1);
    let cfg = config(psf(18.0, 0.5), fig2_noise(), 16, 77);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| rabi_average_lowq(&cfg, &t, LowQMethod::Analytic).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    assert_eq!(one, run(1));
    let other_seed = rabi_average_lowq(&config(psf(18.0, 0.5), fig2_noise(), 16, 78), &t, LowQMethod::Analytic).unwrap();
    assert_ne!(one, other_seed);
}

#[test]
fn gaussian_free_induction_decay() {
    let t2 = us_to_s(0.5);
    let noise = Some(NoiseModel::gaussian(t2, QubitPair::ZeroMinus).unwrap());
    let mut cfg = config(DepthModel::Fixed { z: um_to_m(5.0) }, noise, 3000, 4);
    cfg.nuclear = NuclearAverage::Driven { factor: 1.0 };
    let taus = times(16, 0.05);
    let r = ramsey_average(
        &cfg,
        RamseyQubit::SingleQuantum { pair: QubitPair::ZeroMinus },
        &taus,
        0.0,
        &IntegratorOptions::default(),
    )
    .unwrap();
    for (i, &t) in taus.iter().enumerate() {
        let got = 2.0 * r.coherence.mean[i];
        let se = 2.0 * r.coherence.stderr[i];
        let expect = (-(t / t2).powi(2)).exp();
        assert!((got - expect).abs() <= 3.0 * se + 1e-12, "t {t:e}: {got} vs {expect} (se {se:e})");
    }
}

#[test]
fn windows_before_the_drive_transfer_nothing() {
    let ring = RingModel::new(mhz_to_angular(529.0), 4000.0, us_to_s(3.0)).unwrap();
    let cfg = config(DepthModel::Fixed { z: um_to_m(LAMBDA_UM / 4.0) }, None, 1, 0);
    let tr = rabi_average_highq(&cfg, &ring, &[us_to_s(-3.0), us_to_s(-1.5)], us_to_s(1.0), &HighQOptions::default()).unwrap();
    assert!(tr.mean.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn depth_sweep_uses_area_axis() {
    let ring = RingModel::new(mhz_to_angular(529.0), 4000.0, us_to_s(3.0)).unwrap();
    let mut cfg = config(DepthModel::Fixed { z: 0.0 }, None, 1, 0);
    cfg.nuclear = NuclearAverage::Driven { factor: 1.0 };
    let lengths: Vec<f64> = (1..8).map(|k| us_to_s(0.3 * k as f64)).collect();
    let z = um_to_m(LAMBDA_UM / 4.0);
    let out = depth_sweep(&cfg, &ring, us_to_s(1.0), &lengths, &[z], &HighQOptions::default()).unwrap();
    let (_, tr) = &out[0];
    for (a, v) in tr.abscissa.iter().zip(&tr.mean) {
        let expect = (0.5 * cfg.wave.omega_mech * a).sin().powi(2);
        assert!((v - expect).abs() < 1e-6);
    }
}

#[test]
fn node_dephases_faster_than_antinode() {
    let ring = RingModel::new(mhz_to_angular(529.0), 4000.0, us_to_s(3.0)).unwrap();
    let mut cfg = config(psf(5.0, 0.5), Some(NoiseModel::gaussian(us_to_s(0.68), QubitPair::PlusMinus).unwrap()), 8, 2);
    cfg.wave = StandingWave::new(mhz_to_angular(3.8), um_to_m(29.6)).unwrap();
    let lengths: Vec<f64> = (1..40).map(|k| us_to_s(0.05 * k as f64)).collect();
    let antinode = um_to_m(29.6 / 4.0);
    let node = um_to_m(29.6 / 2.0);
    let out = depth_sweep(&cfg, &ring, us_to_s(2.0), &lengths, &[antinode, node], &HighQOptions::default()).unwrap();
    let swing = |tr: &SignalTrace<f64>| {
        let v = &tr.mean;
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(swing(&out[0].1) > swing(&out[1].1));
}
