//! Verification tables behind the `mgf`, `binomial-demo` and `orlicz-demo`
//! subcommands.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::orlicz::{
    gamma_tail_c, gamma_tail_phi_expectation, gamma_tail_phi_expectation_quadrature,
    gamma_tail_quadrature,
};
use crate::scalarfam::BinomialModel;
use crate::walsh::{mgf_uniform, PseudoBooleanFunction, DEFAULT_EXACT_LIMIT};

/// Printed table plus whether every check in it held.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub text: String,
    pub passed: bool,
}

pub const MGF_REL_TOLERANCE: f64 = 1e-9;
pub const BINOMIAL_TOLERANCE: f64 = 1e-12;
pub const CONJUGACY_TOLERANCE: f64 = 1e-10;
pub const ORLICZ_TOLERANCE: f64 = 1e-6;

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

/// `E[e^{t f}]` under the uniform law, closed form against enumeration.
pub fn mgf_demo(function_text: &str, t: f64) -> Result<DemoReport> {
    if !t.is_finite() {
        return Err(Error::param("t", format!("{t} is not finite")));
    }
    let f = PseudoBooleanFunction::parse(function_text)?;
    let closed = mgf_uniform(&f, t)?;
    let mut text = String::new();
    let _ = writeln!(text, "n = {}, monomials = {}, t = {t}", f.n(), f.len());
    let _ = writeln!(text, "closed form  {closed:.15e}");
    let passed = if f.n() <= DEFAULT_EXACT_LIMIT {
        let table = f.synthesize()?;
        let brute = table.iter().map(|v| (t * v).exp()).sum::<f64>() / table.len() as f64;
        let rel = (closed - brute).abs() / brute.abs().max(f64::MIN_POSITIVE);
        let ok = rel <= MGF_REL_TOLERANCE;
        let _ = writeln!(text, "enumeration  {brute:.15e}");
        let _ = writeln!(text, "rel. error   {rel:.3e}  {}", mark(ok));
        ok
    } else {
        let _ = writeln!(text, "enumeration  skipped (n > {DEFAULT_EXACT_LIMIT})");
        true
    };
    Ok(DemoReport { text, passed })
}

/// Scaled absolute residual `|a - b| / max(1, |a|)`.
fn residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

/// Three forms of the binomial log density on an interior `eta` grid, the
/// Fenchel equality on a `theta` grid, and the boundary scans.
pub fn binomial_demo(n: u32) -> Result<DemoReport> {
    let model = BinomialModel::new(n)?;
    let nf = n as f64;
    let mut text = String::new();
    let mut passed = true;

    let _ = writeln!(text, "binomial n = {n}");
    let _ = writeln!(
        text,
        "{:>8} {:>4} {:>22} {:>10} {:>10}",
        "eta", "x", "log p (std)", "|exp-std|", "|breg-std|"
    );
    let mut worst: f64 = 0.0;
    for k in 1..10 {
        let eta = nf * k as f64 / 10.0;
        let theta = model.theta_from_eta(eta)?;
        for x in 0..=n {
            let std = model.log_density_std(x, eta)?;
            let r_exp = residual(std, model.log_density_exp(x, theta)?);
            let r_breg = residual(std, model.log_density_bregman(x, eta)?);
            worst = worst.max(r_exp).max(r_breg);
            let _ = writeln!(text, "{eta:>8.4} {x:>4} {std:>22.15e} {r_exp:>10.2e} {r_breg:>10.2e}");
        }
    }
    let ok = worst <= BINOMIAL_TOLERANCE;
    passed &= ok;
    let _ = writeln!(text, "max density residual {worst:.3e} (tol {BINOMIAL_TOLERANCE:e})  {}", mark(ok));

    let mut worst_conj: f64 = 0.0;
    for k in -20..=20 {
        let theta = k as f64 * 0.5;
        let eta = model.eta_from_theta(theta);
        let gap = model.psi_star(eta) + model.psi(theta) - theta * eta;
        worst_conj = worst_conj.max(gap.abs());
    }
    let ok = worst_conj <= CONJUGACY_TOLERANCE;
    passed &= ok;
    let _ = writeln!(
        text,
        "max |psi*(eta) + psi(theta) - theta eta| on theta in [-10, 10]: {worst_conj:.3e}  {}",
        mark(ok)
    );

    let _ = writeln!(text, "boundary scans (k = 12):");
    for x in 0..=n {
        let scan = model.boundary_limit_check(x)?;
        passed &= scan.passed;
        let last = |s: &[(f64, f64)]| s.last().map(|p| p.1).unwrap_or(f64::NAN);
        let _ = writeln!(
            text,
            "  x = {x:>3}: eta -> 0 {:>12.4e} {:?}, eta -> n {:>12.4e} {:?}  {}",
            last(&scan.left),
            scan.left_verdict,
            last(&scan.right),
            scan.right_verdict,
            mark(scan.passed)
        );
    }
    Ok(DemoReport { text, passed })
}

/// The gamma-tail Phi-expectation across `alpha in [-1.5, 1.5]`, with
/// quadrature for the finite part.
pub fn orlicz_demo(a: f64) -> Result<DemoReport> {
    let mut text = String::new();
    let mut passed = true;
    let _ = writeln!(text, "gamma tail, a = {a}");

    let c0 = gamma_tail_c(0.0, a)?;
    for theta in [0.0, 1.0, 2.0] {
        let closed = gamma_tail_c(theta, a)?;
        let quad = gamma_tail_quadrature(|x| (-theta * x).exp(), a)?.value;
        let ok = residual(quad, closed) <= ORLICZ_TOLERANCE;
        passed &= ok;
        let _ = writeln!(text, "C({theta}, a) = {closed:.12} quadrature {quad:.12}  {}", mark(ok));
    }
    let _ = writeln!(text, "C(0, a) = 2 / sqrt(a) = {c0}");

    let _ = writeln!(text, "{:>6} {:>20} {:>20}", "alpha", "E[Phi(alpha x)]", "quadrature");
    for k in -6..=6 {
        let alpha = k as f64 * 0.25;
        let value = gamma_tail_phi_expectation(alpha, a)?;
        let mirror = gamma_tail_phi_expectation(-alpha, a)?;
        let mut ok = value == mirror || residual(value, mirror) <= 1e-14;
        let quad_text = if alpha.abs() <= 1.0 {
            let quad = gamma_tail_phi_expectation_quadrature(alpha, a)?;
            ok &= value.is_finite() && residual(quad, value) <= ORLICZ_TOLERANCE;
            format!("{quad}")
        } else {
            ok &= value == f64::INFINITY;
            "-".to_string()
        };
        passed &= ok;
        let _ = writeln!(text, "{alpha:>6} {value:>20} {quad_text:>20}  {}", mark(ok));
    }
    let _ = writeln!(
        text,
        "finite on [-1, 1] including the endpoints, +inf beyond: not steep"
    );
    Ok(DemoReport { text, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgf_triangle() {
        let r = mgf_demo("1: 1 2\n1: 2 3\n1: 1 3\n", 1.0).unwrap();
        assert!(r.passed, "{}", r.text);
        let expected = 1f64.cosh().powi(3) + 1f64.sinh().powi(3);
        assert!(r.text.contains(&format!("{expected:.15e}")), "{}", r.text);
    }

    #[test]
    fn binomial_two() {
        let r = binomial_demo(2).unwrap();
        assert!(r.passed, "{}", r.text);
    }

    #[test]
    fn orlicz_zero_row() {
        let r = orlicz_demo(1.0).unwrap();
        assert!(r.passed, "{}", r.text);
        let row = r
            .text
            .lines()
            .find(|l| l.split_whitespace().next() == Some("0"))
            .unwrap();
        assert_eq!(row.split_whitespace().nth(1), Some("0"));
    }

    #[test]
    fn orlicz_rejects_bad_shift() {
        assert!(orlicz_demo(0.0).is_err());
    }
}
