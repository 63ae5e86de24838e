//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! A 15-point Kronrod rule with the embedded 7-point Gauss rule supplies
//! per-interval error estimates; the worst interval is bisected until the
//! summed estimate meets the tolerance. Improper upper limits go through
//! the rational substitution `t = a + u/(1-u)`.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;

/// Kronrod abscissae on `[-1, 1]` (non-negative half).
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

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the embedded rule (odd-index Kronrod nodes + centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Interval {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = WGK[7] * math::abs(fc);
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (math::abs(f1) + math::abs(f2));
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * math::abs(fc - mean);
    for j in 0..7 {
        resasc += WGK[j] * (math::abs(fv[j] - mean) + math::abs(fv[14 - j] - mean));
    }
    let err = rescale_error((resk - resg) * h, resabs * h.abs(), resasc * h.abs());
    Interval {
        a,
        b,
        value: resk * h,
        error: err,
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut scaled = math::abs(err);
    if resasc != 0.0 && scaled != 0.0 {
        let scale = math::powf(200.0 * scaled / resasc, 1.5);
        scaled = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * resabs);
    }
    scaled
}

/// Integrate `f` over the finite interval `[a, b]` to absolute/relative
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(tol > 0.0) {
        return Err(Error::Domain("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    const MAX_INTERVALS: usize = 20_000;
    let mut heap = BinaryHeap::new();
    let first = kronrod15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut n = 1;
    loop {
        if error <= tol.max(tol * math::abs(value)) {
            return Ok(Quadrature {
                value,
                abs_error: error,
            });
        }
        if n >= MAX_INTERVALS {
            return Err(Error::Convergence {
                achieved: error,
                requested: tol,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; keep its estimate.
            if error <= tol.max(tol * math::abs(value)) * 10.0 {
                return Ok(Quadrature {
                    value,
                    abs_error: error,
                });
            }
            return Err(Error::Convergence {
                achieved: error,
                requested: tol,
            });
        }
        value -= worst.value;
        error -= worst.error;
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        value += left.value + right.value;
        error += left.error + right.error;
        heap.push(left);
        heap.push(right);
        n += 1;
    }
}

/// Integrate `f` over `[a, infinity)`; `f` must decay at infinity.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<Quadrature> {
    integrate(
        move |u| {
            let om = 1.0 - u;
            let jac = 1.0 / (om * om);
            if !jac.is_finite() {
                // underflow region next to u = 1; an integrable f has
                // already decayed to nothing here
                return 0.0;
            }
            f(a + u / om) * jac
        },
        0.0,
        1.0,
        tol,
    )
}
