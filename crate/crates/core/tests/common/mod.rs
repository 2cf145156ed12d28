#![allow(dead_code)]

use rand::Rng;
use stochrelax::expfam::MonomialBasis;
use stochrelax::seed::Rng as ChaRng;
use stochrelax::walsh::{MultiIndex, PseudoBooleanFunction};

/// Spins of state `s`: bit `i` set means `x_i = -1`.
pub fn spins(s: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if s >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

/// `prod_{i in alpha} x_i` by explicit multiplication.
pub fn monomial(alpha: MultiIndex, x: &[f64]) -> f64 {
    alpha.vars().map(|i| x[i]).product()
}

pub fn naive_eval(f: &PseudoBooleanFunction, x: &[f64]) -> f64 {
    f.terms().map(|(a, c)| c * monomial(a, x)).sum()
}

pub fn naive_table(f: &PseudoBooleanFunction) -> Vec<f64> {
    let n = f.n();
    (0..1u64 << n).map(|s| naive_eval(f, &spins(s, n))).collect()
}

pub fn random_monomial(rng: &mut ChaRng, n: usize, max_degree: usize) -> MultiIndex {
    let degree = rng.random_range(1..=max_degree.min(n));
    let mut bits = 0u64;
    while (bits.count_ones() as usize) < degree {
        bits |= 1 << rng.random_range(0..n);
    }
    MultiIndex::from_bits(bits)
}

/// Up to `terms` distinct nonconstant monomials with coefficients in `[-scale, scale]`.
pub fn random_function(rng: &mut ChaRng, n: usize, terms: usize, scale: f64) -> PseudoBooleanFunction {
    let mut f = PseudoBooleanFunction::zero(n).unwrap();
    for _ in 0..terms {
        let a = random_monomial(rng, n, 3);
        if f.coefficient(a) == 0.0 {
            f.add_term(a, rng.random_range(-scale..scale)).unwrap();
        }
    }
    f
}

/// `d` distinct nonconstant monomials of degree at most 3.
pub fn random_basis(rng: &mut ChaRng, n: usize, d: usize) -> MonomialBasis {
    let mut stats: Vec<MultiIndex> = Vec::new();
    while stats.len() < d {
        let a = random_monomial(rng, n, 3);
        if !stats.contains(&a) {
            stats.push(a);
        }
    }
    MonomialBasis::new(n, stats).unwrap()
}

/// Exponential family by enumeration: probabilities and `psi`.
pub struct BruteModel {
    pub probs: Vec<f64>,
    pub psi: f64,
    pub stats: Vec<Vec<f64>>,
}

impl BruteModel {
    pub fn new(basis: &MonomialBasis, theta: &[f64]) -> Self {
        let n = basis.n();
        let stats: Vec<Vec<f64>> = (0..1u64 << n)
            .map(|s| {
                let x = spins(s, n);
                basis.stats().iter().map(|&a| monomial(a, &x)).collect()
            })
            .collect();
        let energy: Vec<f64> = stats
            .iter()
            .map(|t| t.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect();
        let max = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = energy.iter().map(|e| (e - max).exp()).sum();
        let probs = energy.iter().map(|e| (e - max).exp() / z).collect();
        let psi = max + z.ln() - n as f64 * std::f64::consts::LN_2;
        Self { probs, psi, stats }
    }

    pub fn expect(&self, table: &[f64]) -> f64 {
        self.probs.iter().zip(table).map(|(p, v)| p * v).sum()
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.probs.iter().zip(&self.stats).map(|(p, t)| p * t[j]).sum()
    }

    pub fn cov(&self, a: &[f64], b: &[f64]) -> f64 {
        let ma = self.expect(a);
        let mb = self.expect(b);
        self.probs
            .iter()
            .zip(a.iter().zip(b))
            .map(|(p, (x, y))| p * (x - ma) * (y - mb))
            .sum()
    }

    pub fn stat_column(&self, j: usize) -> Vec<f64> {
        self.stats.iter().map(|t| t[j]).collect()
    }
}

pub fn psi_brute(basis: &MonomialBasis, theta: &[f64]) -> f64 {
    BruteModel::new(basis, theta).psi
}

/// `E_theta[f]` by enumeration.
pub fn relaxation_brute(f: &PseudoBooleanFunction, basis: &MonomialBasis, theta: &[f64]) -> f64 {
    BruteModel::new(basis, theta).expect(&naive_table(f))
}

pub fn central_gradient<F: Fn(&[f64]) -> f64>(g: F, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|j| {
            let mut p = theta.to_vec();
            let mut m = theta.to_vec();
            p[j] += h;
            m[j] -= h;
            (g(&p) - g(&m)) / (2.0 * h)
        })
        .collect()
}

pub fn central_hessian<F: Fn(&[f64]) -> f64>(g: F, theta: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = theta.len();
    let at = |dj: (usize, f64), dk: (usize, f64)| {
        let mut t = theta.to_vec();
        t[dj.0] += dj.1;
        t[dk.0] += dk.1;
        g(&t)
    };
    (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    (at((j, h), (k, h)) - at((j, h), (k, -h)) - at((j, -h), (k, h))
                        + at((j, -h), (k, -h)))
                        / (4.0 * h * h)
                })
                .collect()
        })
        .collect()
}

/// Maximizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..iters {
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = g(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `eps`, floored at a
/// relative `1e-14`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        assert!(flm.is_finite() && frm.is_finite(), "integrand not finite near {m}");
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps.max(1e-14 * (left + right).abs()) {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, 40)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
