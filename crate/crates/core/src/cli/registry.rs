//! Benchmark problems on `{-1,+1}^n`, all maximization problems.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::walsh::{walsh_transform, MultiIndex, PseudoBooleanFunction, DEFAULT_EXACT_LIMIT};

use super::config::ProblemSpec;

pub const PROBLEM_NAMES: [&str; 5] = [
    "onemax",
    "weighted-linear",
    "two-local-ising",
    "trap-k",
    "random-sparse",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub function: PseudoBooleanFunction,
    /// Known maximum, when available.
    pub optimum: Option<f64>,
}

impl ProblemInstance {
    /// Whether some state attains the recorded optimum and none exceeds it.
    /// `None` when there is nothing to check or `n` is above the exact limit.
    pub fn verify_optimum(&self) -> Option<bool> {
        let opt = self.optimum?;
        let table = self.function.synthesize().ok()?;
        let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((max - opt).abs() <= 1e-9 * opt.abs().max(1.0))
    }
}

fn brute_force_max(f: &PseudoBooleanFunction) -> Option<f64> {
    if f.n() > DEFAULT_EXACT_LIMIT {
        return None;
    }
    let table = f.synthesize().ok()?;
    Some(table.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Builds a named instance; the same spec always yields the same function.
pub fn registry_build(spec: &ProblemSpec) -> Result<ProblemInstance> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::param("problem.n", "must be at least 1"));
    }
    if n > crate::walsh::MAX_DIM {
        return Err(Error::param("problem.n", format!("must be at most {}", crate::walsh::MAX_DIM)));
    }
    let mut rng = rng_from_seed(spec.seed);
    let (function, optimum) = match spec.name.as_str() {
        "onemax" => (PseudoBooleanFunction::onemax(n)?, Some(n as f64)),
        "weighted-linear" => {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let opt = w.iter().map(|v| v.abs()).sum();
            let f = PseudoBooleanFunction::from_terms(
                n,
                w.iter().enumerate().map(|(i, &c)| (MultiIndex::singleton(i), c)),
            )?;
            (f, Some(opt))
        }
        "two-local-ising" => {
            if n < 2 {
                return Err(Error::param("problem.n", "two-local-ising needs n >= 2"));
            }
            let mut terms = Vec::new();
            let edges = if n == 2 { 1 } else { n };
            for i in 0..edges {
                let j = (i + 1) % n;
                terms.push((MultiIndex::singleton(i) ^ MultiIndex::singleton(j), rng.random_range(-1.0..1.0)));
            }
            for i in 0..n {
                terms.push((MultiIndex::singleton(i), rng.random_range(-0.1..0.1)));
            }
            let f = PseudoBooleanFunction::from_terms(n, terms)?;
            let opt = brute_force_max(&f);
            (f, opt)
        }
        "trap-k" => {
            let k = spec.k.unwrap_or(4);
            if k == 0 || k > 16 || !n.is_multiple_of(k) {
                return Err(Error::param(
                    "problem.k",
                    format!("must be in 1..=16 and divide n = {n}, got {k}"),
                ));
            }
            (trap(n, k)?, Some(n as f64))
        }
        "random-sparse" => {
            let terms = spec.terms.unwrap_or(n);
            let max_degree = spec.max_degree.unwrap_or(3).min(n);
            if max_degree == 0 {
                return Err(Error::param("problem.max_degree", "must be at least 1"));
            }
            let capacity: f64 = (1..=max_degree)
                .map(|d| binomial(n, d))
                .sum();
            if terms as f64 > capacity {
                return Err(Error::param(
                    "problem.terms",
                    format!("{terms} distinct monomials do not exist at this degree"),
                ));
            }
            let mut chosen = BTreeSet::new();
            let mut out = Vec::with_capacity(terms);
            while out.len() < terms {
                let degree = rng.random_range(1..=max_degree);
                let mut bits = 0u64;
                while (bits.count_ones() as usize) < degree {
                    bits |= 1 << rng.random_range(0..n);
                }
                let alpha = MultiIndex::from_bits(bits);
                if chosen.insert(alpha) {
                    out.push((alpha, rng.random_range(-1.0..1.0)));
                }
            }
            let f = PseudoBooleanFunction::from_terms(n, out)?;
            let opt = brute_force_max(&f);
            (f, opt)
        }
        other => {
            return Err(Error::param(
                "problem.name",
                format!("unknown problem {other:?}; expected one of {PROBLEM_NAMES:?}"),
            ))
        }
    };
    Ok(ProblemInstance {
        name: spec.name.clone(),
        function,
        optimum,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Concatenated deceptive traps on blocks of `k` consecutive variables.
///
/// With `u` the number of `+1` spins in a block, the block scores `k` when
/// `u = k` and `k - 1 - u` otherwise.
fn trap(n: usize, k: usize) -> Result<PseudoBooleanFunction> {
    let block: Vec<f64> = (0..1u64 << k)
        .map(|bits| {
            let ups = k - bits.count_ones() as usize;
            if ups == k {
                k as f64
            } else {
                (k - 1 - ups) as f64
            }
        })
        .collect();
    let local = walsh_transform(&block)?;
    let mut f = PseudoBooleanFunction::zero(n)?;
    for start in (0..n).step_by(k) {
        for (alpha, c) in local.terms() {
            f.add_term(MultiIndex::from_bits(alpha.bits() << start), c)?;
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::SpinState;

    fn spec(name: &str, n: usize) -> ProblemSpec {
        ProblemSpec {
            name: name.into(),
            n,
            ..ProblemSpec::default()
        }
    }

    fn enumerate_max(f: &PseudoBooleanFunction) -> f64 {
        (0..1u64 << f.n())
            .map(|s| f.evaluate(&SpinState(s).to_spins(f.n())).unwrap())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn onemax_instance() {
        let p = registry_build(&spec("onemax", 10)).unwrap();
        assert_eq!(p.optimum, Some(10.0));
        assert_eq!(p.function.evaluate(&[1; 10]).unwrap(), 10.0);
        assert_eq!(p.verify_optimum(), Some(true));
    }

    #[test]
    fn random_sparse_is_deterministic() {
        let s = ProblemSpec {
            terms: Some(15),
            seed: 7,
            ..spec("random-sparse", 12)
        };
        let a = registry_build(&s).unwrap();
        let b = registry_build(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.function.len(), 15);
        let c = registry_build(&ProblemSpec { seed: 8, ..s }).unwrap();
        assert_ne!(a.function, c.function);
    }

    #[test]
    fn trap_optimum_matches_enumeration() {
        let s = ProblemSpec {
            k: Some(4),
            ..spec("trap-k", 12)
        };
        let p = registry_build(&s).unwrap();
        assert_eq!(p.optimum, Some(12.0));
        assert!((enumerate_max(&p.function) - 12.0).abs() < 1e-12);
        // Deceptive: the all -1 state is the second-best local optimum.
        let v = p.function.evaluate(&[-1; 12]).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_optima() {
        for name in ["two-local-ising", "random-sparse", "weighted-linear"] {
            let p = registry_build(&ProblemSpec {
                seed: 3,
                ..spec(name, 10)
            })
            .unwrap();
            let opt = p.optimum.unwrap();
            assert!((enumerate_max(&p.function) - opt).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(registry_build(&spec("nope", 4)).is_err());
        assert!(registry_build(&spec("onemax", 0)).is_err());
        assert!(registry_build(&ProblemSpec {
            k: Some(5),
            ..spec("trap-k", 12)
        })
        .is_err());
        assert!(registry_build(&ProblemSpec {
            terms: Some(100),
            max_degree: Some(1),
            ..spec("random-sparse", 5)
        })
        .is_err());
    }
}
