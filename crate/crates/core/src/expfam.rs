//! Exponential families on `{-1,+1}^n` with monomial sufficient statistics.
//!
//! `q_theta(x) = exp(sum_j theta_j x^{alpha_j} - psi(theta)) 2^-n` relative to
//! counting measure, i.e. the uniform density is the reference and every
//! statistic is centered under it.
//!
//! The exact engine builds tables of `2^n` values. All moments it needs are
//! read off the character expectations `m(beta) = E_theta[x^beta]`, obtained in
//! one Hadamard pass over the probability table: products of characters are
//! characters (`x^a x^b = x^{a xor b}`), so `Cov(T_j, T_k) = m(a_j ^ a_k) -
//! m(a_j) m(a_k)` and `Cov(f, T_j) = sum_beta f(beta) (m(beta ^ a_j) - m(beta) m(a_j))`.

use std::collections::HashSet;
use std::ops::Deref;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::walsh::{
    hadamard_in_place, MultiIndex, PseudoBooleanFunction, SpinState, DEFAULT_EXACT_LIMIT, MAX_DIM,
};

/// Ordered, distinct, nonzero monomial statistics `T_j(x) = x^{alpha_j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    stats: Vec<MultiIndex>,
}

impl MonomialBasis {
    pub fn new(n: usize, stats: Vec<MultiIndex>) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, limit: MAX_DIM });
        }
        let mut seen = HashSet::with_capacity(stats.len());
        for &a in &stats {
            if a.is_zero() {
                return Err(Error::InvalidIndex("zero index in basis".into()));
            }
            if a.width() > n {
                return Err(Error::InvalidIndex(format!(
                    "index {:#b} wider than n = {n}",
                    a.bits()
                )));
            }
            if !seen.insert(a) {
                return Err(Error::InvalidIndex(format!(
                    "duplicate statistic {:#b}",
                    a.bits()
                )));
            }
        }
        Ok(Self { n, stats })
    }

    /// `{x_1, ..., x_n}`.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(MultiIndex::singleton).collect())
    }

    /// The nonconstant monomials of `f`.
    pub fn from_support(f: &PseudoBooleanFunction) -> Result<Self> {
        Self::new(f.n(), f.nonconstant_support())
    }

    /// Support of `f` together with all singletons, singletons first.
    pub fn from_support_and_singletons(f: &PseudoBooleanFunction) -> Result<Self> {
        let mut stats: Vec<MultiIndex> = (0..f.n()).map(MultiIndex::singleton).collect();
        stats.extend(f.nonconstant_support().into_iter().filter(|a| a.degree() > 1));
        Self::new(f.n(), stats)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.stats.len()
    }

    pub fn stats(&self) -> &[MultiIndex] {
        &self.stats
    }

    pub fn is_singletons(&self) -> bool {
        self.stats.iter().all(|a| a.degree() == 1)
    }

    /// `T(x)` at a state.
    pub fn statistics(&self, state: SpinState) -> impl Iterator<Item = f64> + '_ {
        self.stats.iter().map(move |a| a.character(state))
    }

    /// One line per statistic: its 1-based variable indices separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.stats {
            let vars: Vec<String> = a.vars().map(|v| (v + 1).to_string()).collect();
            out.push_str(&vars.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the line format; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut stats = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let mut vars = Vec::new();
            for tok in line.split_whitespace() {
                let i: usize = tok
                    .parse()
                    .map_err(|e| err(format!("bad index {tok:?}: {e}")))?;
                if i == 0 || i > n {
                    return Err(err(format!("index {i} outside 1..={n}")));
                }
                vars.push(i - 1);
            }
            stats.push(MultiIndex::from_vars(&vars).map_err(|e| err(e.to_string()))?);
        }
        Self::new(n, stats)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::param("theta", format!("non-finite entry {bad}")));
        }
        Ok(())
    }
}

/// Expectation parameters `eta = E_theta[T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanParams(Vec<f64>);

impl MeanParams {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for MeanParams {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Strictly positive probabilities over the `2^n` states, summing to one.
///
/// Densities taken from an [`ExactModel`] are positive in exact arithmetic but
/// may contain entries that underflow to `0.0` for large `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDensity {
    n: usize,
    probs: Vec<f64>,
}

impl FiniteDensity {
    pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let len = probs.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidDensity(format!("non-positive entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > Self::NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDensity(format!("total mass {total}")));
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            probs,
        })
    }

    /// Normalizes positive weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDensity(format!("total weight {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n > DEFAULT_EXACT_LIMIT {
            return Err(Error::DimensionTooLarge {
                n,
                limit: DEFAULT_EXACT_LIMIT,
            });
        }
        let len = 1usize << n;
        Self::new(vec![1.0 / len as f64; len])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn expectation(&self, table: &[f64]) -> f64 {
        self.probs.iter().zip(table).map(|(p, v)| p * v).sum()
    }

    /// `E[u w]`.
    pub fn inner(&self, u: &[f64], w: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(u.iter().zip(w))
            .map(|(p, (a, b))| p * a * b)
            .sum()
    }
}

/// `q_theta` held as a table, plus the character expectations derived from it.
#[derive(Debug, Clone)]
pub struct ExactModel {
    basis: MonomialBasis,
    theta: Vec<f64>,
    log_partition: f64,
    density: FiniteDensity,
    /// `m[beta] = E_theta[x^beta]` for every `beta`.
    moments: Vec<f64>,
}

impl ExactModel {
    pub fn new(basis: &MonomialBasis, theta: &[f64]) -> Result<Self> {
        Self::with_limit(basis, theta, DEFAULT_EXACT_LIMIT)
    }

    pub fn with_limit(basis: &MonomialBasis, theta: &[f64], limit: usize) -> Result<Self> {
        let n = basis.n();
        if n > limit {
            return Err(Error::DimensionTooLarge { n, limit });
        }
        basis.check_theta(theta)?;
        let len = 1usize << n;

        let mut energy = vec![0.0; len];
        for (a, t) in basis.stats().iter().zip(theta) {
            energy[a.bits() as usize] += t;
        }
        hadamard_in_place(&mut energy);

        let max = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = energy.iter().map(|e| (e - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let log_partition = max + total.ln() - n as f64 * std::f64::consts::LN_2;

        let mut moments = probs.clone();
        hadamard_in_place(&mut moments);
        let density = FiniteDensity { n, probs };

        Ok(Self {
            basis: basis.clone(),
            theta: theta.to_vec(),
            log_partition,
            density,
            moments,
        })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn density(&self) -> &FiniteDensity {
        &self.density
    }

    /// `E_theta[x^beta]`.
    pub fn character_mean(&self, beta: MultiIndex) -> f64 {
        self.moments[beta.bits() as usize]
    }

    pub fn mean_params(&self) -> MeanParams {
        MeanParams(
            self.basis
                .stats()
                .iter()
                .map(|&a| self.character_mean(a))
                .collect(),
        )
    }

    pub fn fisher_information(&self) -> DMatrix<f64> {
        let stats = self.basis.stats();
        let d = stats.len();
        let mut fisher = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in j..d {
                let v = self.character_mean(stats[j] ^ stats[k])
                    - self.character_mean(stats[j]) * self.character_mean(stats[k]);
                fisher[(j, k)] = v;
                fisher[(k, j)] = v;
            }
        }
        fisher
    }

    fn check_function(&self, f: &PseudoBooleanFunction) -> Result<()> {
        if f.n() != self.basis.n() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.n(),
                actual: f.n(),
            });
        }
        Ok(())
    }

    /// `E_theta[f]`.
    pub fn expectation(&self, f: &PseudoBooleanFunction) -> Result<f64> {
        self.check_function(f)?;
        Ok(f.terms().map(|(b, c)| c * self.character_mean(b)).sum())
    }

    /// `(Cov_theta(f, T_1), ..., Cov_theta(f, T_d))`.
    pub fn sr_gradient(&self, f: &PseudoBooleanFunction) -> Result<Vec<f64>> {
        self.check_function(f)?;
        Ok(self
            .basis
            .stats()
            .iter()
            .map(|&a| {
                let ma = self.character_mean(a);
                f.terms()
                    .map(|(b, c)| c * (self.character_mean(b ^ a) - self.character_mean(b) * ma))
                    .sum()
            })
            .collect())
    }
}

pub fn log_partition(basis: &MonomialBasis, theta: &[f64]) -> Result<f64> {
    Ok(ExactModel::new(basis, theta)?.log_partition())
}

pub fn density(basis: &MonomialBasis, theta: &[f64]) -> Result<FiniteDensity> {
    Ok(ExactModel::new(basis, theta)?.density)
}

pub fn mean_params(basis: &MonomialBasis, theta: &[f64]) -> Result<MeanParams> {
    Ok(ExactModel::new(basis, theta)?.mean_params())
}

pub fn fisher_information(basis: &MonomialBasis, theta: &[f64]) -> Result<DMatrix<f64>> {
    Ok(ExactModel::new(basis, theta)?.fisher_information())
}

pub fn sr_gradient_exact(
    basis: &MonomialBasis,
    theta: &[f64],
    f: &PseudoBooleanFunction,
) -> Result<Vec<f64>> {
    ExactModel::new(basis, theta)?.sr_gradient(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanOrder {
    /// Sites `1..n` in order each sweep.
    #[default]
    Systematic,
    /// `n` uniformly chosen sites per sweep.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsConfig {
    /// Sweeps discarded before the first record.
    pub burn_in: usize,
    /// Sweeps between consecutive records; 0 repeats the previous state.
    pub thinning: usize,
    pub scan: ScanOrder,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in: 100,
            thinning: 1,
            scan: ScanOrder::Systematic,
        }
    }
}

/// Single-site Gibbs chain for `q_theta`, started from a uniform state.
///
/// Site `i` is set to `+1` with probability `e^h / (e^h + e^-h)` where
/// `h = sum_{j: i in alpha_j} theta_j x^{alpha_j \ i}`.
pub fn gibbs_sampler(
    basis: &MonomialBasis,
    theta: &[f64],
    count: usize,
    config: &GibbsConfig,
    seed: u64,
) -> Result<Vec<SpinState>> {
    basis.check_theta(theta)?;
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let n = basis.n();
    // For each site: (theta_j, alpha_j without the site).
    let fields: Vec<Vec<(f64, u64)>> = (0..n)
        .map(|i| {
            basis
                .stats()
                .iter()
                .zip(theta)
                .filter(|(a, _)| a.contains(i))
                .map(|(a, &t)| (t, a.bits() & !(1u64 << i)))
                .collect()
        })
        .collect();

    let mut rng = rng_from_seed(seed);
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut state: u64 = rng.random::<u64>() & mask;

    let update = |state: &mut u64, i: usize, rng: &mut crate::seed::Rng| {
        let h: f64 = fields[i]
            .iter()
            .map(|&(t, rest)| if (rest & *state).count_ones() & 1 == 1 { -t } else { t })
            .sum();
        let p_plus = 0.5 * (1.0 + h.tanh());
        if rng.random::<f64>() < p_plus {
            *state &= !(1u64 << i);
        } else {
            *state |= 1u64 << i;
        }
    };
    let sweep = |state: &mut u64, rng: &mut crate::seed::Rng| match config.scan {
        ScanOrder::Systematic => (0..n).for_each(|i| update(state, i, rng)),
        ScanOrder::Random => {
            for _ in 0..n {
                let i = rng.random_range(0..n);
                update(state, i, rng);
            }
        }
    };

    for _ in 0..config.burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k > 0 || config.burn_in == 0 {
            for _ in 0..config.thinning {
                sweep(&mut state, &mut rng);
            }
        }
        out.push(SpinState(state));
    }
    Ok(out)
}

/// I.i.d. uniform states on `n` variables.
pub fn uniform_states(n: usize, count: usize, seed: u64) -> Vec<SpinState> {
    let mut rng = rng_from_seed(seed);
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    (0..count)
        .map(|_| SpinState(rng.random::<u64>() & mask))
        .collect()
}

/// Tolerance on `E_p[u]` accepted as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-10;

/// Isometry `L^2_0(p) -> L^2_0(q)`:
/// `u -> s u - (1 + E_q[s])^-1 (1 + s) E_q[s u]` with `s = sqrt(p/q)`.
pub fn hilbert_transport(p: &FiniteDensity, q: &FiniteDensity, u: &[f64]) -> Result<Vec<f64>> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            actual: q.n(),
        });
    }
    if u.len() != p.probs().len() {
        return Err(Error::DimensionMismatch {
            expected: p.probs().len(),
            actual: u.len(),
        });
    }
    let mean = p.expectation(u);
    if mean.abs() > CENTERING_TOLERANCE {
        return Err(Error::NotCentered(mean));
    }
    if let Some(b) = q.probs().iter().find(|b| !(**b > 0.0)) {
        return Err(Error::InvalidDensity(format!("q has entry {b}")));
    }
    let s: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a / b).sqrt())
        .collect();
    let su: Vec<f64> = s.iter().zip(u).map(|(a, b)| a * b).collect();
    let k = q.expectation(&su) / (1.0 + q.expectation(&s));
    Ok(su.iter().zip(&s).map(|(v, si)| v - k * (1.0 + si)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> MonomialBasis {
        MonomialBasis::singletons(1).unwrap()
    }

    #[test]
    fn basis_validation() {
        assert!(MonomialBasis::new(2, vec![MultiIndex::ZERO]).is_err());
        let a = MultiIndex::singleton(0);
        assert!(MonomialBasis::new(2, vec![a, a]).is_err());
        assert!(MonomialBasis::new(2, vec![MultiIndex::singleton(2)]).is_err());
    }

    #[test]
    fn basis_text_round_trip() {
        let b = MonomialBasis::new(
            4,
            vec![
                MultiIndex::from_vars(&[0, 3]).unwrap(),
                MultiIndex::singleton(2),
            ],
        )
        .unwrap();
        assert_eq!(b.to_text(), "1 4\n3\n");
        assert_eq!(MonomialBasis::parse(&b.to_text(), 4).unwrap(), b);
        assert!(MonomialBasis::parse("5\n", 4).is_err());
    }

    #[test]
    fn log_partition_examples() {
        assert_eq!(log_partition(&single(), &[0.0]).unwrap(), 0.0);
        let v = log_partition(&single(), &[1.0]).unwrap();
        assert!((v - 1f64.cosh().ln()).abs() < 1e-15);
        assert!((v - 0.433_780_830_483_027).abs() < 1e-12);
        let b = MonomialBasis::new(
            2,
            vec![
                MultiIndex::singleton(0),
                MultiIndex::singleton(1),
                MultiIndex::from_vars(&[0, 1]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(log_partition(&b, &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn density_examples() {
        let b = MonomialBasis::singletons(3).unwrap();
        let d = density(&b, &[0.0; 3]).unwrap();
        assert!(d.probs().iter().all(|&p| p == 0.125));

        let d = density(&single(), &[1.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((d.probs()[0] - e / (e + 1.0 / e)).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_moments() {
        for t in [-2.0, -0.3, 0.0, 1.0, 3.5] {
            let m = ExactModel::new(&single(), &[t]).unwrap();
            assert!((m.mean_params()[0] - t.tanh()).abs() < 1e-15);
            let fi = m.fisher_information();
            assert!((fi[(0, 0)] - (1.0 - t.tanh().powi(2))).abs() < 1e-15);
            let f = PseudoBooleanFunction::onemax(1).unwrap();
            let g = m.sr_gradient(&f).unwrap();
            assert!((g[0] - (1.0 - t.tanh().powi(2))).abs() < 1e-15);
        }
    }

    #[test]
    fn fisher_at_zero_for_singletons_is_identity() {
        let b = MonomialBasis::singletons(5).unwrap();
        let fi = fisher_information(&b, &[0.0; 5]).unwrap();
        assert_eq!(fi, DMatrix::identity(5, 5));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let b = MonomialBasis::singletons(3).unwrap();
        let f = PseudoBooleanFunction::constant(3, 4.0).unwrap();
        let g = sr_gradient_exact(&b, &[0.3, -0.2, 1.0], &f).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn exact_engine_rejects_bad_inputs() {
        let b = MonomialBasis::singletons(21).unwrap();
        assert!(matches!(
            log_partition(&b, &[0.0; 21]),
            Err(Error::DimensionTooLarge { n: 21, limit: 20 })
        ));
        let b = MonomialBasis::singletons(2).unwrap();
        assert!(log_partition(&b, &[0.0]).is_err());
        assert!(log_partition(&b, &[0.0, f64::NAN]).is_err());
        let f = PseudoBooleanFunction::onemax(3).unwrap();
        assert!(matches!(
            sr_gradient_exact(&b, &[0.0, 0.0], &f),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gibbs_uniform_target() {
        let b = MonomialBasis::singletons(6).unwrap();
        let n_samples = 20_000;
        let s = gibbs_sampler(&b, &[0.0; 6], n_samples, &GibbsConfig::default(), 1).unwrap();
        for i in 0..6 {
            let mean: f64 = s.iter().map(|x| x.spin(i) as f64).sum::<f64>() / n_samples as f64;
            assert!(mean.abs() < 5.0 / (n_samples as f64).sqrt());
        }
    }

    #[test]
    fn gibbs_single_site_marginal() {
        let n_samples = 50_000;
        let s = gibbs_sampler(&single(), &[1.0], n_samples, &GibbsConfig::default(), 9).unwrap();
        let mean: f64 = s.iter().map(|x| x.spin(0) as f64).sum::<f64>() / n_samples as f64;
        let var = 1.0 - 1f64.tanh().powi(2);
        let se = (var / n_samples as f64).sqrt();
        assert!((mean - 1f64.tanh()).abs() < 5.0 * se);
    }

    #[test]
    fn gibbs_is_deterministic_and_validates() {
        let b = MonomialBasis::singletons(4).unwrap();
        let cfg = GibbsConfig {
            scan: ScanOrder::Random,
            ..GibbsConfig::default()
        };
        let a = gibbs_sampler(&b, &[0.1, 0.2, 0.3, 0.4], 50, &cfg, 3).unwrap();
        let c = gibbs_sampler(&b, &[0.1, 0.2, 0.3, 0.4], 50, &cfg, 3).unwrap();
        assert_eq!(a, c);
        assert!(gibbs_sampler(&b, &[0.0; 4], 0, &cfg, 3).is_err());
    }

    #[test]
    fn transport_identity_when_equal() {
        let p = FiniteDensity::from_weights(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut u = vec![1.0, -1.0, 0.5, 0.0];
        let m = p.expectation(&u);
        u.iter_mut().for_each(|v| *v -= m);
        let v = hilbert_transport(&p, &p, &u).unwrap();
        for (a, b) in u.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn transport_rejects_uncentered() {
        let p = FiniteDensity::uniform(1).unwrap();
        let q = FiniteDensity::from_weights(&[1.0, 3.0]).unwrap();
        assert!(matches!(
            hilbert_transport(&p, &q, &[1.0, 1.0]),
            Err(Error::NotCentered(_))
        ));
        let r = FiniteDensity::uniform(2).unwrap();
        assert!(hilbert_transport(&p, &r, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(FiniteDensity::new(vec![0.5, 0.5]).is_ok());
        assert!(FiniteDensity::new(vec![1.0, 0.0]).is_err());
        assert!(FiniteDensity::new(vec![0.5, 0.6]).is_err());
        assert!(FiniteDensity::new(vec![0.3, 0.3, 0.4]).is_err());
    }
}
