//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! Used as the reference integrator for the closed forms in [`crate::orlicz`].
//! Semi-infinite and infinite ranges are handled by the caller through a change
//! of variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Uniform pieces the range is split into before adapting.
    pub initial_pieces: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_intervals: 20_000,
            initial_pieces: 16,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// `int_a^b f`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: &Settings) -> Estimate {
    let pieces = settings.initial_pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap: BinaryHeap<Piece> = (0..pieces)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == pieces { b } else { lo + width };
            kronrod(&f, lo, hi)
        })
        .collect();

    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let target = settings.abs_tol.max(settings.rel_tol * value.abs());
        if error <= target || heap.len() >= settings.max_intervals {
            return Estimate {
                value,
                abs_error: error,
                intervals: heap.len(),
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision.
            heap.push(Piece {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
    }
}

/// `int_0^inf f` via `x = s / (1 - s)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, settings: &Settings) -> Estimate {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - s;
            let x = s / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        settings,
    )
}

/// `int_{-inf}^{inf} f` as two half lines.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, settings: &Settings) -> Estimate {
    let right = integrate_half_line(&f, settings);
    let left = integrate_half_line(|x| f(-x), settings);
    Estimate {
        value: left.value + right.value,
        abs_error: left.abs_error + right.abs_error,
        intervals: left.intervals + right.intervals,
    }
}
