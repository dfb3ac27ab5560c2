//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! Each interval is estimated with a 15-point Kronrod rule and its error
//! with the embedded 7-point Gauss rule; the interval with the largest
//! error estimate is bisected until the summed error meets the requested
//! tolerance. Callers supply initial breakpoints so that narrow features
//! (the distribution modes found beforehand) are guaranteed to be seen by
//! the rule rather than discovered by luck.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [-1, 1] (symmetric, listed for x >= 0)
// and the matching Kronrod / 7-point Gauss weights.
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
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Published 17-digit values; the last digit or two fall below f64
// resolution.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    // QUADPACK-style sharpening of the raw difference is unnecessary here;
    // the plain difference is a conservative estimate.
    (value, error)
}

/// Integrate `f` over the span of `breakpoints` (ascending) until the
/// total absolute error estimate falls below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::Numerical(
            "quadrature needs at least two breakpoints".into(),
        ));
    }
    let mut segments: Vec<Segment> = Vec::with_capacity(max_segments.min(4096));
    let mut evals = 0usize;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            return Err(Error::Numerical(format!(
                "quadrature breakpoints must be strictly increasing ({a} >= {b})"
            )));
        }
        let (v, e) = gk15(&mut f, a, b);
        evals += 15;
        segments.push(Segment {
            a,
            b,
            value: v,
            error: e,
        });
    }

    loop {
        let total: f64 = sorted_sum(&segments, |s| s.value);
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                abs_error: err,
                evaluations: evals,
            });
        }
        if segments.len() >= max_segments {
            return Err(Error::Numerical(format!(
                "quadrature failed to converge: {} segments, error {err:.3e} vs target {:.3e}",
                segments.len(),
                abs_tol.max(rel_tol * total.abs())
            )));
        }
        // Split the segment with the worst error estimate.
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|(i, x), (j, y)| {
                x.error.total_cmp(&y.error).then_with(|| j.cmp(i)) // deterministic tie-break
            })
            .map(|(i, _)| i)
            .expect("non-empty segment list");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval exhausted at machine precision; accept its estimate.
            segments[worst].error = 0.0;
            continue;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evals += 30;
        segments[worst] = Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        };
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
}

/// Neumaier-compensated sum over segments ordered by left endpoint, so the
/// result does not depend on refinement history.
fn sorted_sum(segments: &[Segment], get: impl Fn(&Segment) -> f64) -> f64 {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&i, &j| segments[i].a.total_cmp(&segments[j].a));
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for idx in order {
        let x = get(&segments[idx]);
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
