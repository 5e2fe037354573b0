//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands. Used for the point-spread-function depth average, where one
//! integrand evaluation can be a full spin propagation returning a whole
//! trace.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::lit(1e-6),
            max_intervals: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureResult<T> {
    pub value: Vec<T>,
    pub error: T,
    pub evaluations: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: Vec<T>,
    error: T,
}

fn gk15<T: Real, F>(f: &mut F, a: T, b: T, dim: usize) -> Segment<T>
where
    F: FnMut(T) -> Vec<T>,
{
    let center = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    let mut kronrod = vec![T::zero(); dim];
    let mut gauss = vec![T::zero(); dim];
    let fc = f(center);
    for d in 0..dim {
        kronrod[d] = fc[d] * T::lit(WGK[7]);
        gauss[d] = fc[d] * T::lit(WG[3]);
    }
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * T::lit(x);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            kronrod[d] += s * T::lit(WGK[j]);
            if j % 2 == 1 {
                gauss[d] += s * T::lit(WG[j / 2]);
            }
        }
    }
    let mut error = T::zero();
    for d in 0..dim {
        kronrod[d] *= half;
        gauss[d] *= half;
        error = error.max((kronrod[d] - gauss[d]).abs());
    }
    Segment {
        a,
        b,
        value: kronrod,
        error,
    }
}

/// Integrates `f` over `[a, b]`, pre-split at `breakpoints` (points outside
/// the interval are ignored). Every evaluation must return `dim` values.
pub fn integrate_vec<T: Real, F>(
    mut f: F,
    a: T,
    b: T,
    breakpoints: &[T],
    dim: usize,
    opts: &QuadratureOptions<T>,
) -> Result<QuadratureResult<T>>
where
    F: FnMut(T) -> Vec<T>,
{
    if b < a {
        return Err(Error::InvalidInterval {
            start: a.as_f64(),
            end: b.as_f64(),
        });
    }
    if b == a {
        return Ok(QuadratureResult {
            value: vec![T::zero(); dim],
            error: T::zero(),
            evaluations: 0,
        });
    }
    let mut edges = vec![a];
    let mut inner: Vec<T> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    edges.extend(inner);
    edges.push(b);

    let mut segments: Vec<Segment<T>> = edges
        .windows(2)
        .map(|w| gk15(&mut f, w[0], w[1], dim))
        .collect();
    let mut evaluations = 15 * segments.len();

    loop {
        let mut total = vec![T::zero(); dim];
        let mut err = T::zero();
        for s in &segments {
            for d in 0..dim {
                total[d] += s.value[d];
            }
            err += s.error;
        }
        let magnitude = total.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let target = opts.abs_tol.max(opts.rel_tol * magnitude);
        if err <= target {
            return Ok(QuadratureResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                start: a.as_f64(),
                end: b.as_f64(),
                error: err.as_f64(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let seg = segments.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::lit(0.5);
        segments.push(gk15(&mut f, seg.a, mid, dim));
        segments.push(gk15(&mut f, mid, seg.b, dim));
        // Keep the summation order independent of the swap_remove history.
        segments.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(std::cmp::Ordering::Equal));
        evaluations += 30;
    }
}

/// Scalar convenience wrapper.
pub fn integrate<T: Real, F>(f: F, a: T, b: T, opts: &QuadratureOptions<T>) -> Result<T>
where
    F: Fn(T) -> T,
{
    integrate_vec(|x| vec![f(x)], a, b, &[], 1, opts).map(|r| r.value[0])
}
