//! The Orlicz gauge for `Phi(y) = cosh(y) - 1` and two analytic examples.
//!
//! `||u|| = inf { rho > 0 : E[Phi(u / rho)] <= 1 }`. The gauge is computed
//! numerically from any non-increasing functional `rho -> E[Phi(u / rho)]`
//! ([`PhiFunctional`]), with `+inf` values allowed in-band.
//!
//! Gamma-tail family: `p(x) ∝ (a + x)^{-3/2} e^{-x}` on `x > 0` with
//! normalizer `C(theta, a) = int_0^inf (a + x)^{-3/2} e^{-theta x} dx`.
//! Substituting `s = theta (a + x)` gives `C = sqrt(theta) e^{theta a}
//! Gamma(-1/2, theta a)` for `theta > 0`, and integrating by parts,
//! `Gamma(-1/2, z) = 2 (z^{-1/2} e^{-z} - sqrt(pi) Q(1/2, z))` where `Q(1/2, .)`
//! is the survival function of the Gamma(1/2, 1) law. Hence
//!
//! ```text
//! C(theta, a) = 2 / sqrt(a) - 2 sqrt(pi theta) e^{theta a} Q(1/2, theta a),   theta > 0
//! C(0, a)     = 2 / sqrt(a)
//! C(theta, a) = +inf,                                                         theta < 0
//! ```
//!
//! The `theta = 0` case is the elementary integral `[-2 (a + x)^{-1/2}]_0^inf`.
//! All forms here are checked against quadrature in the tests.
//!
//! Normal quadratic: under the standard normal, `u(x) = a + b x + c x^2 / 2`
//! has, by completing the square, `E[e^{t u}] = e^{t a} (1 - t c)^{-1/2}
//! exp(t^2 b^2 / (2 (1 - t c)))` when `t c < 1` and `+inf` otherwise.

use std::f64::consts::PI;
use std::fmt;

use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::walsh::{gf2_constraint_sets, PseudoBooleanFunction};

/// `cosh(y) - 1`, evaluated as `2 sinh^2(y / 2)`.
pub fn phi(y: f64) -> f64 {
    let s = (0.5 * y).sinh();
    2.0 * s * s
}

/// `rho -> E[Phi(u / rho)]` for a fixed random variable `u`.
pub struct PhiFunctional {
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    description: String,
    /// Closed set of `rho` on which the functional is known to be finite,
    /// as `(lower, upper)`.
    finite_for: Option<(f64, f64)>,
}

impl fmt::Debug for PhiFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiFunctional")
            .field("description", &self.description)
            .field("finite_for", &self.finite_for)
            .finish()
    }
}

impl PhiFunctional {
    pub fn new<F>(description: impl Into<String>, finite_for: Option<(f64, f64)>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Box::new(eval),
            description: description.into(),
            finite_for,
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        (self.eval)(rho)
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn finite_for(&self) -> Option<(f64, f64)> {
        self.finite_for
    }

    /// A centered pseudo-Boolean `u` under the uniform density, through the
    /// even-subset cosh/sinh expansion.
    pub fn boolean(u: &PseudoBooleanFunction) -> Result<Self> {
        let c0 = u.constant_term();
        if c0 != 0.0 {
            return Err(Error::NonZeroConstant(c0));
        }
        let support = u.nonconstant_support();
        let description = format!("uniform on {{-1,+1}}^{}, {} monomials", u.n(), support.len());
        if support.is_empty() {
            return Ok(Self::new(description, Some((0.0, f64::INFINITY)), |_| 0.0));
        }
        let coefs: Vec<f64> = support.iter().map(|&a| u.coefficient(a)).collect();
        let family = gf2_constraint_sets(&support, true)?;
        let members = family.members().to_vec();
        Ok(Self::new(description, Some((0.0, f64::INFINITY)), move |rho| {
            let t = 1.0 / rho;
            let cosh: Vec<f64> = coefs.iter().map(|c| (t * c).cosh()).collect();
            let sinh: Vec<f64> = coefs.iter().map(|c| (t * c).sinh()).collect();
            let total: f64 = members
                .iter()
                .map(|&b| {
                    (0..coefs.len())
                        .map(|j| if b & (1 << j) != 0 { sinh[j] } else { cosh[j] })
                        .product::<f64>()
                })
                .sum();
            total - 1.0
        }))
    }

    /// `u(x) = x` under the gamma-tail density with shift `a`.
    pub fn gamma_tail(a: f64) -> Result<Self> {
        check_shift(a)?;
        Ok(Self::new(
            format!("u(x) = x under (a + x)^(-3/2) e^(-x), a = {a}"),
            Some((1.0, f64::INFINITY)),
            move |rho| gamma_tail_phi_expectation(1.0 / rho, a).unwrap_or(f64::NAN),
        ))
    }

    /// A quadratic polynomial under the standard normal density.
    pub fn normal_quadratic(q: NormalQuadratic) -> Self {
        let lower = q.c.abs();
        Self::new(
            format!("u(x) = {} + {} x + {}/2 x^2 under N(0, 1)", q.a, q.b, q.c),
            Some((lower, f64::INFINITY)),
            move |rho| normal_quadratic_phi_expectation(&q.scaled(1.0 / rho)),
        )
    }
}

/// Relative bisection tolerance of [`orlicz_norm`].
pub const NORM_REL_TOLERANCE: f64 = 1e-10;
/// The bracket expands or contracts by at most this many doublings.
pub const MAX_DOUBLINGS: i32 = 60;

#[inline]
fn inside_ball(v: f64) -> bool {
    v <= 1.0
}

/// `inf { rho > 0 : F(rho) <= 1 }` by bracketing from `hint` and bisection.
///
/// Returns 0 when `F(rho) <= 1` still holds at `hint * 2^-60`.
pub fn orlicz_norm(functional: &PhiFunctional, hint: Option<f64>) -> Result<f64> {
    let hint = match hint {
        Some(h) if h.is_finite() && h > 0.0 => h,
        _ => 1.0,
    };
    let ceiling = hint * 2f64.powi(MAX_DOUBLINGS);
    let floor = hint * 2f64.powi(-MAX_DOUBLINGS);

    let mut hi = hint;
    while !inside_ball(functional.eval(hi)) {
        hi *= 2.0;
        if hi > ceiling {
            return Err(Error::NotInOrliczSpace(ceiling));
        }
    }
    let mut lo = hi / 2.0;
    while inside_ball(functional.eval(lo)) {
        hi = lo;
        lo /= 2.0;
        if lo < floor {
            return Ok(0.0);
        }
    }
    while hi - lo > NORM_REL_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if inside_ball(functional.eval(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn check_shift(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {a}")));
    }
    Ok(())
}

/// `e^z Gamma(-1/2, z)` for `z > 0`.
fn scaled_gamma_neg_half(z: f64) -> f64 {
    if z <= 1.0 {
        gamma_neg_half_survival_form(z)
    } else {
        gamma_neg_half_continued_fraction(z)
    }
}

/// `e^z Gamma(-1/2, z) = 2 (z^{-1/2} - sqrt(pi) e^z Q(1/2, z))`.
fn gamma_neg_half_survival_form(z: f64) -> f64 {
    2.0 * (z.powf(-0.5) - PI.sqrt() * z.exp() * gamma_ur(0.5, z))
}

/// Legendre continued fraction for `e^z z^{-s} Gamma(s, z)` at `s = -1/2`,
/// evaluated with the modified Lentz method.
fn gamma_neg_half_continued_fraction(z: f64) -> f64 {
    const S: f64 = -0.5;
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - S;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let fi = i as f64;
        let an = -fi * (fi - S);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * z.powf(S)
}

/// `C(theta, a) = int_0^inf (a + x)^{-3/2} e^{-theta x} dx`, extended-real.
pub fn gamma_tail_c(theta: f64, a: f64) -> Result<f64> {
    check_shift(a)?;
    if theta.is_nan() {
        return Ok(f64::NAN);
    }
    if theta < 0.0 {
        return Ok(f64::INFINITY);
    }
    if theta == 0.0 {
        return Ok(2.0 / a.sqrt());
    }
    Ok(theta.sqrt() * scaled_gamma_neg_half(theta * a))
}

/// The survival-function expression for `C(theta, a)`, `theta > 0`.
///
/// Loses relative accuracy as `theta a` grows; [`gamma_tail_c`] switches to a
/// continued fraction for `theta a > 1`.
pub fn gamma_tail_c_survival_form(theta: f64, a: f64) -> Result<f64> {
    check_shift(a)?;
    if !(theta > 0.0) {
        return Err(Error::OutOfDomain {
            value: theta,
            domain: "theta > 0",
        });
    }
    let z = theta * a;
    Ok(2.0 / a.sqrt() - 2.0 * (PI * theta).sqrt() * z.exp() * gamma_ur(0.5, z))
}

/// `E_p[Phi(alpha x)] = (C(1 - alpha, a) + C(1 + alpha, a)) / (2 C(1, a)) - 1`.
///
/// Finite exactly on `|alpha| <= 1`, including both endpoints.
pub fn gamma_tail_phi_expectation(alpha: f64, a: f64) -> Result<f64> {
    check_shift(a)?;
    if alpha.is_nan() {
        return Ok(f64::NAN);
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha.abs() > 1.0 {
        return Ok(f64::INFINITY);
    }
    let norm = gamma_tail_c(1.0, a)?;
    Ok((gamma_tail_c(1.0 - alpha, a)? + gamma_tail_c(1.0 + alpha, a)?) / (2.0 * norm) - 1.0)
}

/// `int_0^inf (a + x)^{-3/2} g(x) dx` by quadrature in `y = (a + x)^{-1/2}`,
/// which maps the half line onto `(0, a^{-1/2}]` with a bounded integrand
/// `2 g(y^{-2} - a)`.
pub fn gamma_tail_quadrature<G: Fn(f64) -> f64>(g: G, a: f64) -> Result<quadrature::Estimate> {
    check_shift(a)?;
    Ok(quadrature::integrate(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            2.0 * g(1.0 / (y * y) - a)
        },
        0.0,
        a.powf(-0.5),
        &quadrature::Settings::default(),
    ))
}

/// `E_p[Phi(alpha x)]` under the gamma-tail density, entirely by quadrature.
pub fn gamma_tail_phi_expectation_quadrature(alpha: f64, a: f64) -> Result<f64> {
    if alpha.abs() > 1.0 {
        return Ok(f64::INFINITY);
    }
    // e^{-x} (cosh(alpha x) - 1) without overflow.
    let g = |x: f64| {
        0.5 * ((-(1.0 - alpha) * x).exp() + (-(1.0 + alpha) * x).exp()) - (-x).exp()
    };
    let numerator = gamma_tail_quadrature(g, a)?.value;
    let normalizer = gamma_tail_quadrature(|x| (-x).exp(), a)?.value;
    Ok(numerator / normalizer)
}

/// `u(x) = a + b x + c x^2 / 2` under the standard normal density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NormalQuadratic {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("{v} is not finite")));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a: k * self.a,
            b: k * self.b,
            c: k * self.c,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.a + self.b * x + 0.5 * self.c * x * x
    }
}

/// `E[e^{t u}]`; `+inf` when `t c >= 1`.
pub fn normal_quadratic_mgf(t: f64, q: &NormalQuadratic) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let k = 1.0 - t * q.c;
    if !(k > 0.0) {
        return f64::INFINITY;
    }
    (t * q.a + t * t * q.b * q.b / (2.0 * k)).exp() / k.sqrt()
}

/// `E[Phi(u)]`, finite iff `|c| < 1`.
pub fn normal_quadratic_phi_expectation(q: &NormalQuadratic) -> f64 {
    if q.c.abs() >= 1.0 {
        return f64::INFINITY;
    }
    0.5 * (normal_quadratic_mgf(1.0, q) + normal_quadratic_mgf(-1.0, q)) - 1.0
}
