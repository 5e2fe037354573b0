//! Ramsey fit models, damped least squares, Fourier power spectra and
//! signal normalization.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ensemble::SignalTrace;
use crate::error::{invalid, Error, Result};
use crate::linalg::invert_dense;
use crate::scalar::Real;

/// Which Ramsey signal a model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RamseyKind {
    /// Magnetic `{0,−1}` or `{+1,0}`: lines at `δ`, `δ ± A∥`.
    SingleQuantum,
    /// Magnetic `{−1,+1}`: the hyperfine spacing doubles to `2A∥`.
    DoubleQuantum,
    /// Mechanical `{−1,+1}`: one line at `δ + ω_rot`.
    Mechanical,
}

impl RamseyKind {
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            RamseyKind::Mechanical => &["delta", "t2_star", "c1", "phi1"],
            _ => &["delta", "t2_star", "c1", "c2", "c3", "phi1", "phi2", "phi3"],
        }
    }

    fn terms(self) -> usize {
        match self {
            RamseyKind::Mechanical => 1,
            _ => 3,
        }
    }
}

/// `Im ρ(t) = e^{−t/T₂*} Σᵢ Cᵢ cos(ωᵢ t + φᵢ)` with
/// `ωᵢ = δ + (1, 0, −1)ᵢ·A∥` (`2A∥` for double quantum), or the single line
/// `ω₁ = δ + ω_rot` for the mechanical qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyModel<T> {
    pub kind: RamseyKind,
    pub t2_star: T,
    pub delta: T,
    pub amplitudes: [T; 3],
    pub phases: [T; 3],
    pub a_par: T,
    pub omega_rot: T,
}

impl<T: Real> RamseyModel<T> {
    pub fn frequencies(&self) -> Vec<T> {
        match self.kind {
            RamseyKind::Mechanical => vec![self.delta + self.omega_rot],
            RamseyKind::SingleQuantum => vec![self.delta + self.a_par, self.delta, self.delta - self.a_par],
            RamseyKind::DoubleQuantum => {
                let a = self.a_par * T::lit(2.0);
                vec![self.delta + a, self.delta, self.delta - a]
            }
        }
    }

    pub fn eval(&self, t: T) -> T {
        let env = (-t / self.t2_star).exp();
        let sum: T = self
            .frequencies()
            .iter()
            .enumerate()
            .map(|(i, &w)| self.amplitudes[i] * (w * t + self.phases[i]).cos())
            .sum();
        env * sum
    }

    pub fn params(&self) -> Vec<T> {
        let n = self.kind.terms();
        let mut p = vec![self.delta, self.t2_star];
        p.extend_from_slice(&self.amplitudes[..n]);
        p.extend_from_slice(&self.phases[..n]);
        p
    }

    pub fn with_params(&self, p: &[T]) -> Self {
        let n = self.kind.terms();
        let mut m = *self;
        m.delta = p[0];
        m.t2_star = p[1];
        for i in 0..n {
            m.amplitudes[i] = p[2 + i];
            m.phases[i] = p[2 + n + i];
        }
        m
    }

    /// Model value and analytic gradient with respect to [`Self::params`].
    pub fn eval_with_gradient(&self, t: T) -> (T, Vec<T>) {
        let n = self.kind.terms();
        let env = (-t / self.t2_star).exp();
        let mut grad = vec![T::zero(); 2 + 2 * n];
        let mut value = T::zero();
        for (i, &w) in self.frequencies().iter().enumerate() {
            let (s, c) = (w * t + self.phases[i]).sin_cos();
            let ci = self.amplitudes[i];
            value += ci * c * env;
            grad[0] -= ci * t * s * env;
            grad[2 + i] = c * env;
            grad[2 + n + i] = -ci * s * env;
        }
        grad[1] = value * t / (self.t2_star * self.t2_star);
        (value, grad)
    }

    /// Equivalent parameter set with `δ ≥ 0` (`δ + ω_rot ≥ 0` for the
    /// mechanical qubit), non-negative amplitudes and phases in `(−π, π]`.
    /// Returns the permutation applied to the parameter vector and the
    /// sign flips, for carrying the covariance along.
    fn canonical(&self) -> (Self, Vec<usize>, Vec<T>) {
        let n = self.kind.terms();
        let np = 2 + 2 * n;
        let mut m = *self;
        let mut perm: Vec<usize> = (0..np).collect();
        let mut sign = vec![T::one(); np];
        let flip = match self.kind {
            RamseyKind::Mechanical => self.delta + self.omega_rot < T::zero(),
            _ => self.delta < T::zero(),
        };
        if flip {
            // cos is even: every line maps to its mirror under δ → −δ.
            m.delta = match self.kind {
                RamseyKind::Mechanical => -self.delta - T::lit(2.0) * self.omega_rot,
                _ => -self.delta,
            };
            sign[0] = -T::one();
            if n == 3 {
                m.amplitudes = [self.amplitudes[2], self.amplitudes[1], self.amplitudes[0]];
                m.phases = [-self.phases[2], -self.phases[1], -self.phases[0]];
                perm = vec![0, 1, 4, 3, 2, 7, 6, 5];
            } else {
                m.phases[0] = -self.phases[0];
            }
            for s in sign.iter_mut().skip(2 + n) {
                *s = -T::one();
            }
        }
        for i in 0..n {
            if m.amplitudes[i] < T::zero() {
                m.amplitudes[i] = -m.amplitudes[i];
                m.phases[i] += T::PI();
            }
            m.phases[i] = wrap_phase(m.phases[i]);
        }
        (m, perm, sign)
    }
}

fn wrap_phase<T: Real>(p: T) -> T {
    let tau = T::TAU();
    let mut x = p % tau;
    if x > T::PI() {
        x -= tau;
    } else if x <= -T::PI() {
        x += tau;
    }
    x
}

/// Evaluates the model at `t`.
pub fn ramsey_model_eval<T: Real>(m: &RamseyModel<T>, t: T) -> T {
    m.eval(t)
}

/// Fitted model with covariance-based 1σ uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub model: RamseyModel<T>,
    pub parameter_names: Vec<String>,
    pub values: Vec<T>,
    pub uncertainties: Vec<T>,
    pub covariance: Vec<Vec<T>>,
    /// `‖y − f‖₂`.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> FitResult<T> {
    pub fn uncertainty(&self, name: &str) -> Option<T> {
        self.parameter_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.uncertainties[i])
    }
}

/// Where the least-squares iteration starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess<T> {
    /// Scan over `(δ, T₂*)` seeded by spectrum peaks, with the amplitudes
    /// and phases solved linearly at each candidate.
    Spectrum,
    Given(RamseyModel<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    pub max_iterations: usize,
    /// Relative RSS change treated as converged.
    pub rss_tolerance: T,
    /// Relative parameter step treated as converged; a step is also small
    /// when its effect on the model is this fraction of the residual.
    pub step_tolerance: T,
    /// Accepted steps over which progress is judged.
    pub stall_window: usize,
    /// A fit whose RSS falls by less than this many units of `RSS/N` over
    /// `stall_window` accepted steps has stopped improving.
    pub stall_chi2: T,
    /// Number of scan candidates refined by least squares.
    pub restarts: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            rss_tolerance: T::lit(1e-10),
            step_tolerance: T::lit(1e-9),
            stall_window: 25,
            stall_chi2: T::lit(0.05),
            restarts: 4,
        }
    }
}

/// Fits `Im ρ(t)` data. `a_par` is held fixed, as is `omega_rot` for the
/// mechanical model.
pub fn fit_ramsey<T: Real>(
    data: &SignalTrace<T>,
    kind: RamseyKind,
    a_par: T,
    omega_rot: T,
    guess: InitialGuess<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let t = &data.abscissa;
    let y = &data.mean;
    let np = kind.parameter_names().len();
    let required = 4 * np;
    if t.len() < required || y.len() != t.len() {
        return Err(Error::InsufficientData {
            points: t.len().min(y.len()),
            params: np,
            required,
        });
    }
    if y.iter().any(|v| !v.is_finite()) || t.iter().any(|v| !v.is_finite()) {
        return Err(invalid("data", "non-finite values"));
    }
    let mean = y.iter().copied().sum::<T>() / T::lit(y.len() as f64);
    let spread = y.iter().fold(T::zero(), |m, v| m.max((*v - mean).abs()));
    let scale = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if spread <= T::epsilon() * T::lit(100.0) * scale.max(T::min_positive_value()) || scale == T::zero() {
        return Err(Error::RankDeficient {
            reason: "data are flat; no oscillation to fit".into(),
        });
    }

    let template = RamseyModel {
        kind,
        t2_star: T::one(),
        delta: T::zero(),
        amplitudes: [T::zero(); 3],
        phases: [T::zero(); 3],
        a_par,
        omega_rot,
    };
    let starts = match guess {
        InitialGuess::Given(m) => vec![RamseyModel { kind, a_par, omega_rot, ..m }],
        InitialGuess::Spectrum => scan_candidates(t, y, &template, opts.restarts)?,
    };

    // Lowest RSS among converged starts; a start that is still descending
    // after the iteration budget only matters if no start converged.
    let mut best: Option<(T, RamseyModel<T>, usize)> = None;
    let mut stuck: Option<(T, RamseyModel<T>, usize)> = None;
    let mut last_failure = None;
    for start in starts {
        match levenberg_marquardt(t, y, start, opts) {
            Ok((m, rss, it, conv)) => {
                let slot = if conv { &mut best } else { &mut stuck };
                if slot.as_ref().is_none_or(|b| rss < b.0) {
                    *slot = Some((rss, m, it));
                }
            }
            Err(e) => last_failure = Some(e),
        }
    }
    let converged = true;
    let (rss, model, iterations) = match (best, stuck) {
        (Some(b), _) => b,
        (None, Some((_, m, it))) => {
            return Err(Error::FitNonConvergence {
                iterations: it,
                last: m.params().iter().map(|v| v.as_f64()).collect(),
            })
        }
        (None, None) => return Err(last_failure.expect("at least one start")),
    };

    let m_pts = t.len();
    let (_, jtj) = normal_matrix(t, y, &model);
    let cov_unit = jacobi_inverse(&jtj, np)?;
    let sigma2 = rss / T::lit((m_pts - np) as f64);
    let (canon, perm, sign) = model.canonical();
    let mut covariance = vec![vec![T::zero(); np]; np];
    for i in 0..np {
        for j in 0..np {
            covariance[i][j] = cov_unit[perm[i] * np + perm[j]] * sigma2 * sign[i] * sign[j];
        }
    }
    let uncertainties = (0..np).map(|i| covariance[i][i].max(T::zero()).sqrt()).collect();
    Ok(FitResult {
        values: canon.params(),
        model: canon,
        parameter_names: kind.parameter_names().iter().map(|s| s.to_string()).collect(),
        uncertainties,
        covariance,
        residual_norm: rss.sqrt(),
        iterations,
        converged,
    })
}

fn residual_ss<T: Real>(t: &[T], y: &[T], m: &RamseyModel<T>) -> T {
    t.iter().zip(y).map(|(&ti, &yi)| (yi - m.eval(ti)).powi(2)).sum()
}

/// `(Jᵀr, JᵀJ)` as flat row-major arrays.
fn normal_matrix<T: Real>(t: &[T], y: &[T], m: &RamseyModel<T>) -> (Vec<T>, Vec<T>) {
    let np = m.params().len();
    let mut g = vec![T::zero(); np];
    let mut a = vec![T::zero(); np * np];
    for (&ti, &yi) in t.iter().zip(y) {
        let (f, grad) = m.eval_with_gradient(ti);
        let r = yi - f;
        for i in 0..np {
            g[i] += grad[i] * r;
            for j in 0..np {
                a[i * np + j] += grad[i] * grad[j];
            }
        }
    }
    (g, a)
}

/// Inverse of a symmetric positive semi-definite matrix after Jacobi
/// equilibration; a singular result means the parameters are not
/// identifiable from the data.
fn jacobi_inverse<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut d = vec![T::zero(); n];
    for i in 0..n {
        let v = a[i * n + i];
        if !(v > T::zero()) {
            return Err(Error::RankDeficient {
                reason: format!("parameter {i} does not affect the model"),
            });
        }
        d[i] = T::one() / v.sqrt();
    }
    let scaled: Vec<T> = (0..n * n).map(|k| a[k] * d[k / n] * d[k % n]).collect();
    let inv = invert_dense(&scaled, n, "normal equations").map_err(|e| match e {
        Error::Singular { pivot, .. } => Error::RankDeficient {
            reason: format!("normal matrix is singular at pivot {pivot}"),
        },
        other => other,
    })?;
    Ok((0..n * n).map(|k| inv[k] * d[k / n] * d[k % n]).collect())
}

fn levenberg_marquardt<T: Real>(
    t: &[T],
    y: &[T],
    start: RamseyModel<T>,
    opts: &FitOptions<T>,
) -> Result<(RamseyModel<T>, T, usize, bool)> {
    let mut model = start;
    let mut rss = residual_ss(t, y, &model);
    let np = model.params().len();
    let mut lambda = T::lit(1e-3);
    let mut stalls = 0usize;
    let mut history = vec![rss];
    for it in 1..=opts.max_iterations {
        let (g, a) = normal_matrix(t, y, &model);
        let mut damped = a.clone();
        for i in 0..np {
            damped[i * np + i] += lambda * a[i * np + i].max(T::min_positive_value());
        }
        let step = match jacobi_inverse(&damped, np) {
            Ok(inv) => (0..np)
                .map(|i| (0..np).map(|j| inv[i * np + j] * g[j]).sum::<T>())
                .collect::<Vec<T>>(),
            Err(e) => return Err(e),
        };
        let p = model.params();
        let trial_p: Vec<T> = p.iter().zip(&step).map(|(a, b)| *a + *b).collect();
        let trial = model.with_params(&trial_p);
        let trial_rss = if trial.t2_star > T::zero() {
            residual_ss(t, y, &trial)
        } else {
            T::infinity()
        };
        if trial_rss < rss {
            let rel = (rss - trial_rss) / rss.max(T::min_positive_value());
            let noise = (rss / T::lit(t.len() as f64)).sqrt();
            let tiny_step = (0..np).all(|i| {
                let s = step[i].abs();
                s <= opts.step_tolerance * p[i].abs() || s * a[i * np + i].sqrt() <= opts.step_tolerance * noise
            });
            model = trial;
            rss = trial_rss;
            lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
            history.push(rss);
            let crawling = history.len() > opts.stall_window
                && (history[history.len() - 1 - opts.stall_window] - rss) * T::lit(t.len() as f64)
                    < opts.stall_chi2 * rss;
            if rel < opts.rss_tolerance || tiny_step || crawling {
                return Ok((model, rss, it, true));
            }
            stalls = 0;
        } else {
            lambda *= T::lit(10.0);
            stalls += 1;
            // No downhill step exists at any damping: a minimum.
            if lambda > T::lit(1e12) || stalls > 40 {
                return Ok((model, rss, it, true));
            }
        }
        if rss == T::zero() {
            return Ok((model, rss, it, true));
        }
    }
    Ok((model, rss, opts.max_iterations, false))
}

/// Best fit of the linear amplitudes at fixed `(δ, T₂*)`, with its RSS.
fn linear_amplitudes<T: Real>(t: &[T], y: &[T], template: &RamseyModel<T>) -> Option<(RamseyModel<T>, T)> {
    let freqs = template.frequencies();
    let k = 2 * freqs.len();
    let mut a = vec![T::zero(); k * k];
    let mut b = vec![T::zero(); k];
    let mut basis = vec![T::zero(); k];
    for (&ti, &yi) in t.iter().zip(y) {
        let env = (-ti / template.t2_star).exp();
        for (i, &w) in freqs.iter().enumerate() {
            let (s, c) = (w * ti).sin_cos();
            basis[2 * i] = c * env;
            basis[2 * i + 1] = -s * env;
        }
        for i in 0..k {
            b[i] += basis[i] * yi;
            for j in 0..k {
                a[i * k + j] += basis[i] * basis[j];
            }
        }
    }
    let inv = jacobi_inverse(&a, k).ok()?;
    let coef: Vec<T> = (0..k).map(|i| (0..k).map(|j| inv[i * k + j] * b[j]).sum()).collect();
    let mut m = *template;
    for i in 0..freqs.len() {
        let (ca, sb) = (coef[2 * i], coef[2 * i + 1]);
        m.amplitudes[i] = ca.hypot(sb);
        m.phases[i] = sb.atan2(ca);
    }
    let rss = residual_ss(t, y, &m);
    rss.is_finite().then_some((m, rss))
}

fn scan_candidates<T: Real>(t: &[T], y: &[T], template: &RamseyModel<T>, keep: usize) -> Result<Vec<RamseyModel<T>>> {
    let t_max = t.iter().copied().fold(T::zero(), T::max);
    let t_min = t.iter().copied().fold(T::infinity(), T::min);
    let span = (t_max - t_min).max(T::min_positive_value());
    let hyperfine = match template.kind {
        RamseyKind::SingleQuantum => template.a_par.abs(),
        RamseyKind::DoubleQuantum => template.a_par.abs() * T::lit(2.0),
        RamseyKind::Mechanical => T::zero(),
    };
    // Frequencies seen in the data, as candidate line positions.
    let mut lines: Vec<T> = Vec::new();
    if let Ok(spec) = power_spectrum(
        &SignalTrace::exact(t.to_vec(), y.to_vec()),
        &SpectrumOptions::default(),
    ) {
        let mut peaks = spec.peaks();
        peaks.sort_by(|a, b| b.power.partial_cmp(&a.power).unwrap_or(std::cmp::Ordering::Equal));
        lines.extend(peaks.iter().take(6).map(|p| p.frequency));
    }
    let f_max = lines.iter().copied().fold(T::zero(), T::max) + hyperfine + T::TAU() / span;
    let coarse = T::PI() / (T::lit(4.0) * span);
    let n_coarse = ((f_max / coarse).ceil().as_f64() as usize).min(4000);
    let mut deltas: Vec<T> = (0..=n_coarse).map(|k| coarse * T::lit(k as f64)).collect();
    for &f in &lines {
        for base in [f, -f] {
            deltas.push(base);
            if hyperfine > T::zero() {
                deltas.push(base + hyperfine);
                deltas.push(base - hyperfine);
            }
        }
    }
    if template.kind == RamseyKind::Mechanical {
        deltas = deltas
            .into_iter()
            .flat_map(|d| [d - template.omega_rot, -d - template.omega_rot])
            .collect();
    } else {
        // δ and −δ describe the same data; search δ ≥ 0 only.
        deltas = deltas.into_iter().map(|d| d.abs()).collect();
    }
    let decays: Vec<T> = (0..9)
        .map(|k| span * T::lit(0.05) * T::lit(2.0).powi(k))
        .collect();

    let mut scored: Vec<(T, RamseyModel<T>)> = Vec::new();
    for &d in &deltas {
        for &t2 in &decays {
            let trial = RamseyModel {
                delta: d,
                t2_star: t2,
                ..*template
            };
            if let Some((m, rss)) = linear_amplitudes(t, y, &trial) {
                scored.push((rss, m));
            }
        }
    }
    if scored.is_empty() {
        return Err(Error::RankDeficient {
            reason: "no candidate frequency explains the data".into(),
        });
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut picked: Vec<RamseyModel<T>> = Vec::new();
    for (_, m) in scored {
        let distinct = picked
            .iter()
            .all(|p| (p.delta - m.delta).abs() > coarse * T::lit(0.5));
        if distinct {
            picked.push(m);
        }
        if picked.len() >= keep.max(1) {
            break;
        }
    }
    Ok(picked)
}

/// Taper applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumWindow {
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub window: SpectrumWindow,
    pub zero_pad_factor: usize,
    pub subtract_mean: bool,
    /// Peaks must exceed this multiple of the median power.
    pub peak_threshold: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            window: SpectrumWindow::Hann,
            zero_pad_factor: 8,
            subtract_mean: true,
            peak_threshold: 5.0,
        }
    }
}

/// One-sided power spectrum. Angular frequencies in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum<T> {
    pub frequency: Vec<T>,
    pub power: Vec<T>,
    /// Resolution of the unpadded record, `2π/(N·dt)`.
    pub native_resolution: T,
    pub peak_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    pub frequency: T,
    pub power: T,
    pub index: usize,
}

impl<T: Real> PowerSpectrum<T> {
    pub fn bin_width(&self) -> T {
        if self.frequency.len() > 1 {
            self.frequency[1] - self.frequency[0]
        } else {
            T::zero()
        }
    }

    pub fn median_power(&self) -> T {
        let mut p = self.power.clone();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let n = p.len();
        if n == 0 {
            return T::zero();
        }
        if n % 2 == 1 {
            p[n / 2]
        } else {
            (p[n / 2 - 1] + p[n / 2]) * T::lit(0.5)
        }
    }

    /// Local maxima above the threshold, in frequency order.
    pub fn peaks(&self) -> Vec<Peak<T>> {
        let floor = self.median_power() * T::lit(self.peak_threshold);
        let p = &self.power;
        let n = p.len();
        (0..n)
            .filter(|&k| {
                let left = k == 0 || p[k] > p[k - 1];
                let right = k + 1 == n || p[k] >= p[k + 1];
                left && right && p[k] > floor
            })
            .map(|k| Peak {
                frequency: self.frequency[k],
                power: p[k],
                index: k,
            })
            .collect()
    }

    /// Largest peak.
    pub fn dominant(&self) -> Option<Peak<T>> {
        self.peaks()
            .into_iter()
            .max_by(|a, b| a.power.partial_cmp(&b.power).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Summed power over `[lo, hi]`.
    pub fn band_power(&self, lo: T, hi: T) -> T {
        self.frequency
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| *p)
            .sum()
    }

    pub fn total_power(&self) -> T {
        self.power.iter().copied().sum()
    }
}

/// Sample spacing of a uniformly sampled trace.
pub fn uniform_step<T: Real>(abscissa: &[T]) -> Result<T> {
    if abscissa.len() < 2 {
        return Err(Error::InsufficientData {
            points: abscissa.len(),
            params: 1,
            required: 2,
        });
    }
    let n = abscissa.len();
    let dt = (abscissa[n - 1] - abscissa[0]) / T::lit((n - 1) as f64);
    if !(dt > T::zero()) {
        return Err(invalid("abscissa", "must be increasing"));
    }
    for (k, &x) in abscissa.iter().enumerate() {
        let expected = abscissa[0] + dt * T::lit(k as f64);
        if (x - expected).abs() > dt * T::lit(1e-6) {
            return Err(invalid("abscissa", "samples must be uniformly spaced"));
        }
    }
    Ok(dt)
}

/// Windowed, zero-padded power `P_k` with
/// `Σₖ P_k = Σₙ x_w[n]²` (one-sided, Parseval normalized).
pub fn power_spectrum<T: Real>(data: &SignalTrace<T>, opts: &SpectrumOptions) -> Result<PowerSpectrum<T>> {
    let dt = uniform_step(&data.abscissa)?;
    if opts.zero_pad_factor == 0 {
        return Err(invalid("zero_pad_factor", "must be at least 1"));
    }
    let n = data.mean.len();
    let taper = |k: usize| -> T {
        match opts.window {
            SpectrumWindow::Rectangular => T::one(),
            SpectrumWindow::Hann => {
                if n < 2 {
                    T::one()
                } else {
                    let x = T::TAU() * T::lit(k as f64) / T::lit((n - 1) as f64);
                    T::lit(0.5) * (T::one() - x.cos())
                }
            }
        }
    };
    // Taper-weighted mean, so the tapered record sums to zero.
    let mean = if opts.subtract_mean {
        let (sw, swv) = data
            .mean
            .iter()
            .enumerate()
            .fold((T::zero(), T::zero()), |(a, b), (k, &v)| (a + taper(k), b + taper(k) * v));
        if sw > T::zero() {
            swv / sw
        } else {
            T::zero()
        }
    } else {
        T::zero()
    };
    let n_pad = n * opts.zero_pad_factor;
    let mut buf: Vec<num_complex::Complex<T>> = vec![num_complex::Complex::new(T::zero(), T::zero()); n_pad];
    for (k, &v) in data.mean.iter().enumerate() {
        buf[k] = num_complex::Complex::new((v - mean) * taper(k), T::zero());
    }
    let fft = FftPlanner::<T>::new().plan_fft_forward(n_pad);
    fft.process(&mut buf);
    let half = n_pad / 2;
    let norm = T::lit(n_pad as f64);
    let df = T::TAU() / (T::lit(n_pad as f64) * dt);
    let mut frequency = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, v) in buf.iter().enumerate().take(half + 1) {
        let edge = k == 0 || (n_pad % 2 == 0 && k == half);
        let factor = if edge { T::one() } else { T::lit(2.0) };
        frequency.push(df * T::lit(k as f64));
        power.push(v.norm_sqr() * factor / norm);
    }
    Ok(PowerSpectrum {
        frequency,
        power,
        native_resolution: T::TAU() / (T::lit(n as f64) * dt),
        peak_threshold: opts.peak_threshold,
    })
}

fn check_reference<T: Real>(y_np: T, y_pi: T) -> Result<T> {
    let d = y_np - y_pi;
    let scale = y_np.abs().max(y_pi.abs()).max(T::min_positive_value());
    if d.abs() <= T::epsilon() * T::lit(16.0) * scale || !d.is_finite() {
        return Err(Error::DegenerateNormalization);
    }
    Ok(d)
}

/// `Im ρ = ½(y₊ − y₋)/(y_NP − y_π)`.
pub fn normalize_ramsey<T: Real>(y_plus: T, y_minus: T, y_np: T, y_pi: T) -> Result<T> {
    let d = check_reference(y_np, y_pi)?;
    Ok((y_plus - y_minus) * T::lit(0.5) / d)
}

/// Double-quantum variant: `y_π` is the mean of the two single-π signals.
pub fn normalize_ramsey_dq<T: Real>(y_plus: T, y_minus: T, y_np: T, y_pi_a: T, y_pi_b: T) -> Result<T> {
    normalize_ramsey(y_plus, y_minus, y_np, (y_pi_a + y_pi_b) * T::lit(0.5))
}

/// Echo amplitude `(y₊ − y₋)/(y_NP − y_π)`, equal to 1 for perfect
/// refocusing.
pub fn hahn_amplitude<T: Real>(y_plus: T, y_minus: T, y_np: T, y_pi: T) -> Result<T> {
    let d = check_reference(y_np, y_pi)?;
    Ok((y_plus - y_minus) / d)
}
