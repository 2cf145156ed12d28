//! The binomial family on `{0, ..., n}` with reference measure `mu(x) = C(n, x)`.
//!
//! Natural form `p(x; theta) = exp(theta x - psi(theta))`, `psi(theta) = n
//! log(1 + e^theta)`; expectation form `p(x; eta) = (eta/n)^x (1 - eta/n)^(n-x)`
//! with `eta = n e^theta / (1 + e^theta)`. Densities are relative to `mu`, so
//! the probability mass at `x` is `C(n, x) p(x)`.
//!
//! The conjugate `psi*` is extended-real valued: `+inf` outside `[0, n]` (the
//! IEEE infinity), `0` at both endpoints.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinomialModel {
    n: u32,
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `x log y` with the convention `0 log 0 = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

impl BinomialModel {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn check_x(&self, x: u32) -> Result<()> {
        if x > self.n {
            return Err(Error::OutOfDomain {
                value: x as f64,
                domain: "{0, ..., n}",
            });
        }
        Ok(())
    }

    fn check_open(&self, eta: f64) -> Result<()> {
        if !(eta > 0.0 && eta < self.nf()) {
            return Err(Error::OutOfDomain {
                value: eta,
                domain: "(0, n)",
            });
        }
        Ok(())
    }

    /// `n log(1 + e^theta)`.
    pub fn psi(&self, theta: f64) -> f64 {
        self.nf() * softplus(theta)
    }

    pub fn eta_from_theta(&self, theta: f64) -> f64 {
        self.nf() / (1.0 + (-theta).exp())
    }

    pub fn theta_from_eta(&self, eta: f64) -> Result<f64> {
        self.check_open(eta)?;
        Ok((eta / (self.nf() - eta)).ln())
    }

    /// The Legendre conjugate of `psi`.
    pub fn psi_star(&self, eta: f64) -> f64 {
        let n = self.nf();
        if eta.is_nan() {
            return f64::NAN;
        }
        if eta < 0.0 || eta > n {
            return f64::INFINITY;
        }
        if eta == 0.0 || eta == n {
            return 0.0;
        }
        eta * (eta / (n - eta)).ln() - n * (n / (n - eta)).ln()
    }

    /// `psi*'(eta) = log(eta / (n - eta))` on the open interval.
    pub fn psi_star_derivative(&self, eta: f64) -> Result<f64> {
        self.theta_from_eta(eta)
    }

    /// `(eta/n)^x (1 - eta/n)^(n-x)` on `eta in [0, n]`.
    pub fn density_std(&self, x: u32, eta: f64) -> Result<f64> {
        Ok(self.log_density_std(x, eta)?.exp())
    }

    pub fn log_density_std(&self, x: u32, eta: f64) -> Result<f64> {
        self.check_x(x)?;
        let n = self.nf();
        if !(0.0..=n).contains(&eta) {
            return Err(Error::OutOfDomain {
                value: eta,
                domain: "[0, n]",
            });
        }
        let xf = x as f64;
        Ok(xlogy(xf, eta / n) + xlogy(n - xf, (n - eta) / n))
    }

    /// `exp(theta x - psi(theta))`.
    pub fn density_exp(&self, x: u32, theta: f64) -> Result<f64> {
        Ok(self.log_density_exp(x, theta)?.exp())
    }

    pub fn log_density_exp(&self, x: u32, theta: f64) -> Result<f64> {
        self.check_x(x)?;
        if !theta.is_finite() {
            return Err(Error::OutOfDomain {
                value: theta,
                domain: "finite theta",
            });
        }
        Ok(theta * x as f64 - self.psi(theta))
    }

    /// `D(x || eta) = psi*(x) - psi*(eta) - psi*'(eta)(x - eta)`.
    pub fn bregman_divergence(&self, x: u32, eta: f64) -> Result<f64> {
        self.check_x(x)?;
        let slope = self.psi_star_derivative(eta)?;
        let xf = x as f64;
        Ok(self.psi_star(xf) - self.psi_star(eta) - slope * (xf - eta))
    }

    /// `e^{-D(x || eta)} e^{psi*(x)}`.
    pub fn density_bregman(&self, x: u32, eta: f64) -> Result<f64> {
        Ok(self.log_density_bregman(x, eta)?.exp())
    }

    pub fn log_density_bregman(&self, x: u32, eta: f64) -> Result<f64> {
        Ok(self.psi_star(x as f64) - self.bregman_divergence(x, eta)?)
    }

    /// `log p(x; eta)` along `eta = 10^-k` and `eta = n - 10^-k`, `k = 1..=12`.
    pub fn boundary_limit_check(&self, x: u32) -> Result<BoundaryScan> {
        self.check_x(x)?;
        let n = self.nf();
        let xf = x as f64;
        let gaps: Vec<f64> = (1..=BOUNDARY_STEPS).map(|k| 10f64.powi(-(k as i32))).collect();
        // Near the right endpoint the gap n - eta is passed directly.
        let log_p = |eta: f64, gap: f64| xlogy(xf, eta / n) + xlogy(n - xf, gap / n);
        let left: Vec<(f64, f64)> = gaps.iter().map(|&g| (g, log_p(g, n - g))).collect();
        let right: Vec<(f64, f64)> = gaps.iter().map(|&g| (n - g, log_p(n - g, g))).collect();

        let expected_left = if x == 0 {
            LimitVerdict::ConvergesToZero
        } else {
            LimitVerdict::DivergesToNegInfinity
        };
        let expected_right = if x == self.n {
            LimitVerdict::ConvergesToZero
        } else {
            LimitVerdict::DivergesToNegInfinity
        };
        let left_verdict = classify(&left);
        let right_verdict = classify(&right);
        Ok(BoundaryScan {
            n: self.n,
            x,
            passed: left_verdict == expected_left && right_verdict == expected_right,
            left,
            right,
            left_verdict,
            right_verdict,
        })
    }
}

pub const BOUNDARY_STEPS: u32 = 12;
/// Last scan value must fall below this to count as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = -20.0;
/// Last scan value must be within this of zero to count as convergence.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitVerdict {
    DivergesToNegInfinity,
    ConvergesToZero,
    Inconclusive,
}

fn classify(scan: &[(f64, f64)]) -> LimitVerdict {
    let values: Vec<f64> = scan.iter().map(|&(_, v)| v).collect();
    let last = *values.last().expect("scan is non-empty");
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let increasing = values.windows(2).all(|w| w[1] >= w[0]);
    if decreasing && last < DIVERGENCE_THRESHOLD {
        LimitVerdict::DivergesToNegInfinity
    } else if increasing && last <= 0.0 && last.abs() < CONVERGENCE_TOLERANCE {
        LimitVerdict::ConvergesToZero
    } else {
        LimitVerdict::Inconclusive
    }
}

/// Numeric scan of `log p(x; eta)` towards both ends of `(0, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScan {
    pub n: u32,
    pub x: u32,
    /// `(eta, log p)` with `eta -> 0`.
    pub left: Vec<(f64, f64)>,
    /// `(eta, log p)` with `eta -> n`.
    pub right: Vec<(f64, f64)>,
    pub left_verdict: LimitVerdict,
    pub right_verdict: LimitVerdict,
    /// Verdicts match `-inf` for interior `x` and `0` at the matching endpoint.
    pub passed: bool,
}
