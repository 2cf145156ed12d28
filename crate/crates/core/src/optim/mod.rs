//! Stochastic relaxation optimizers and their building blocks.
//!
//! The relaxation of `f` over the model is `theta -> E_theta[f]`; its gradient
//! is `Cov_theta(f, T)` and its natural gradient `I(theta)^-1 Cov_theta(f, T)`.
//! The optimizers here estimate those quantities from populations
//! ([`sngd_run`]), fit the model to selected samples ([`eda_run`]), or use the
//! exact engine as a noiseless reference ([`exact_descent_run`]).

mod algorithms;
mod trace;

pub use algorithms::{
    eda_run, estimate_independence, estimate_moment_matching, exact_descent_run,
    independence_mean_estimate, sngd_run, sngd_step, EdaConfig, Estimator, ExactConfig,
    SngdConfig, SngdStep,
};
pub use trace::{IterRecord, RunStatus, RunTrace, CSV_FIXED_COLUMNS};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::MonomialBasis;
use crate::walsh::{PseudoBooleanFunction, SpinState, DEFAULT_EXACT_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// `+1` for maximization, `-1` for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

/// Sampled states with cached fitness values.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    n: usize,
    samples: Vec<SpinState>,
    fitness: Vec<f64>,
}

impl Population {
    pub fn evaluate(f: &PseudoBooleanFunction, samples: Vec<SpinState>) -> Self {
        let fitness = samples.iter().map(|&s| f.evaluate_state(s)).collect();
        Self {
            n: f.n(),
            samples,
            fitness,
        }
    }

    pub fn from_parts(n: usize, samples: Vec<SpinState>, fitness: Vec<f64>) -> Result<Self> {
        if samples.len() != fitness.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                actual: fitness.len(),
            });
        }
        Ok(Self {
            n,
            samples,
            fitness,
        })
    }

    /// Every state of `{-1,+1}^n` exactly once, in canonical order.
    pub fn census(f: &PseudoBooleanFunction) -> Result<Self> {
        if f.n() > DEFAULT_EXACT_LIMIT {
            return Err(Error::DimensionTooLarge {
                n: f.n(),
                limit: DEFAULT_EXACT_LIMIT,
            });
        }
        let samples = (0..1u64 << f.n()).map(SpinState).collect();
        Ok(Self::evaluate(f, samples))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SpinState] {
        &self.samples
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    /// Recomputes every fitness value and compares exactly.
    pub fn verify_fitness(&self, f: &PseudoBooleanFunction) -> bool {
        self.samples
            .iter()
            .zip(&self.fitness)
            .all(|(&s, &v)| f.evaluate_state(s) == v)
    }

    pub fn mean_fitness(&self) -> f64 {
        self.fitness.iter().sum::<f64>() / self.fitness.len() as f64
    }

    pub fn best_fitness(&self, direction: Direction) -> Option<f64> {
        self.fitness
            .iter()
            .copied()
            .reduce(|a, b| if direction.better(b, a) { b } else { a })
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Self {
            n: self.n,
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
            fitness: indices.iter().map(|&i| self.fitness[i]).collect(),
        }
    }
}

/// The `m` best samples, ties broken by lower index, returned in index order.
pub fn select_truncation(pop: &Population, m: usize, direction: Direction) -> Result<Population> {
    if m > pop.len() {
        return Err(Error::param(
            "selected",
            format!("{m} exceeds population size {}", pop.len()),
        ));
    }
    let mut order: Vec<usize> = (0..pop.len()).collect();
    let fit = pop.fitness();
    order.sort_by(|&i, &j| {
        let by_value = match direction {
            Direction::Maximize => fit[j].total_cmp(&fit[i]),
            Direction::Minimize => fit[i].total_cmp(&fit[j]),
        };
        by_value.then(i.cmp(&j))
    });
    let mut chosen = order[..m].to_vec();
    chosen.sort_unstable();
    Ok(pop.subset(&chosen))
}

/// Normalization of sample covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divisor {
    /// `N - 1`: unbiased for i.i.d. samples.
    #[default]
    Unbiased,
    /// `N`: the exact covariance when the population is the whole space.
    Population,
}

impl Divisor {
    fn value(self, n: usize) -> f64 {
        match self {
            Divisor::Unbiased => (n - 1) as f64,
            Divisor::Population => n as f64,
        }
    }
}

/// Centered statistics `T_j(x_i) - mean_j` as an `N x d` matrix, plus means.
fn centered_statistics(pop: &Population, basis: &MonomialBasis) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if pop.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            actual: pop.n(),
        });
    }
    let n = pop.len();
    if n < 2 {
        return Err(Error::param("population", format!("need at least 2 samples, got {n}")));
    }
    let d = basis.dim();
    let mut t = DMatrix::from_fn(n, d, |i, j| basis.stats()[j].character(pop.samples()[i]));
    let means: Vec<f64> = (0..d).map(|j| t.column(j).mean()).collect();
    for (j, m) in means.iter().enumerate() {
        t.column_mut(j).add_scalar_mut(-m);
    }
    Ok((t, means))
}

/// Sample covariances `Cov(f, T_j)` over the population.
pub fn empirical_sr_gradient(
    pop: &Population,
    basis: &MonomialBasis,
    divisor: Divisor,
) -> Result<Vec<f64>> {
    let (t, _) = centered_statistics(pop, basis)?;
    let mean_f = pop.mean_fitness();
    let centered_f = DVector::from_iterator(pop.len(), pop.fitness().iter().map(|v| v - mean_f));
    let g = t.transpose() * centered_f / divisor.value(pop.len());
    Ok(g.iter().copied().collect())
}

/// Sample covariance matrix of the statistics, exactly symmetric.
pub fn empirical_fisher(
    pop: &Population,
    basis: &MonomialBasis,
    divisor: Divisor,
) -> Result<DMatrix<f64>> {
    let (t, _) = centered_statistics(pop, basis)?;
    let mut fisher = t.transpose() * &t / divisor.value(pop.len());
    let d = fisher.nrows();
    for j in 0..d {
        for k in j + 1..d {
            let v = 0.5 * (fisher[(j, k)] + fisher[(k, j)]);
            fisher[(j, k)] = v;
            fisher[(k, j)] = v;
        }
    }
    Ok(fisher)
}

/// Ridge regularization of the Fisher matrix before solving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ridge {
    /// `eps * trace(I) / d`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::Relative(1e-6)
    }
}

impl Ridge {
    pub fn resolve(self, fisher: &DMatrix<f64>) -> f64 {
        match self {
            Ridge::Absolute(r) => r,
            Ridge::Relative(eps) => {
                let d = fisher.nrows().max(1) as f64;
                eps * fisher.trace() / d
            }
        }
    }

    fn validate(self) -> Result<()> {
        let v = match self {
            Ridge::Relative(v) | Ridge::Absolute(v) => v,
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param("ridge", format!("must be finite and >= 0, got {v}")));
        }
        Ok(())
    }
}

/// Retries after a failed factorization, each with the ridge multiplied by 10.
pub const RIDGE_RETRIES: usize = 3;

/// Solves `(I + ridge Id) v = g` by Cholesky, escalating the ridge on failure.
///
/// A zero ridge escalates from `1e-10 * max(mean diagonal, 1)`.
pub fn natural_gradient_solve(fisher: &DMatrix<f64>, gradient: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let d = gradient.len();
    if fisher.nrows() != d || fisher.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: fisher.nrows(),
        });
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::param("ridge", format!("must be finite and >= 0, got {ridge}")));
    }
    if fisher.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("fisher", "non-finite entry"));
    }
    let sym = (fisher + fisher.transpose()) * 0.5;
    let rhs = DVector::from_column_slice(gradient);
    let base = 1e-10 * (sym.trace() / d.max(1) as f64).max(1.0);

    let mut current = ridge;
    for attempt in 0..=RIDGE_RETRIES {
        let mut m = sym.clone();
        for j in 0..d {
            m[(j, j)] += current;
        }
        if let Some(chol) = Cholesky::new(m) {
            let v = chol.solve(&rhs);
            if v.iter().all(|x| x.is_finite()) {
                return Ok(v.iter().copied().collect());
            }
        }
        if attempt < RIDGE_RETRIES {
            current = if current > 0.0 { current * 10.0 } else { base };
        }
    }
    Err(Error::Singular { ridge: current })
}

/// Minimum-norm solution of `(I + ridge Id) v = g` over the eigen-directions
/// with eigenvalue above `rcond * max eigenvalue`.
pub fn natural_gradient_pinv(
    fisher: &DMatrix<f64>,
    gradient: &[f64],
    ridge: f64,
    rcond: f64,
) -> Result<Vec<f64>> {
    let d = gradient.len();
    if fisher.nrows() != d || fisher.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: fisher.nrows(),
        });
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::param("ridge", format!("must be finite and >= 0, got {ridge}")));
    }
    if !(rcond.is_finite() && rcond >= 0.0) {
        return Err(Error::param("rcond", format!("must be finite and >= 0, got {rcond}")));
    }
    if fisher.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("fisher", "non-finite entry"));
    }
    let mut sym = (fisher + fisher.transpose()) * 0.5;
    for j in 0..d {
        sym[(j, j)] += ridge;
    }
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = rcond * top;
    let rhs = DVector::from_column_slice(gradient);
    let coords = eig.eigenvectors.transpose() * rhs;
    let mut v = DVector::zeros(d);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            v += eig.eigenvectors.column(k) * (coords[k] / lambda);
        }
    }
    Ok(v.iter().copied().collect())
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::MultiIndex;

    #[test]
    fn pinv_matches_solve_when_well_conditioned() {
        let fisher = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = [1.0, -1.0];
        let a = natural_gradient_solve(&fisher, &g, 0.0).unwrap();
        let b = natural_gradient_pinv(&fisher, &g, 0.0, 1e-10).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }

    #[test]
    fn pinv_drops_null_directions() {
        let fisher = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let v = natural_gradient_pinv(&fisher, &[1.0, 1.0 + 1e-15], 0.0, 1e-10).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
    }

    fn pop_with_fitness(fitness: &[f64]) -> Population {
        let samples = (0..fitness.len() as u64).map(SpinState).collect();
        Population::from_parts(3, samples, fitness.to_vec()).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let p = pop_with_fitness(&[3.0, 1.0, 2.0, 0.0]);
        let s = select_truncation(&p, 2, Direction::Maximize).unwrap();
        assert_eq!(s.samples(), &[SpinState(0), SpinState(2)]);
        let s = select_truncation(&p, 2, Direction::Minimize).unwrap();
        assert_eq!(s.samples(), &[SpinState(1), SpinState(3)]);

        let all = select_truncation(&p, 4, Direction::Maximize).unwrap();
        assert_eq!(all, p);

        let ties = pop_with_fitness(&[1.0, 1.0, 0.0]);
        let s = select_truncation(&ties, 1, Direction::Maximize).unwrap();
        assert_eq!(s.samples(), &[SpinState(0)]);

        assert!(select_truncation(&p, 5, Direction::Maximize).is_err());
    }

    #[test]
    fn constant_fitness_gives_zero_gradient() {
        let basis = MonomialBasis::singletons(3).unwrap();
        let p = pop_with_fitness(&[2.0; 6]);
        let g = empirical_sr_gradient(&p, &basis, Divisor::Unbiased).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn estimators_need_two_samples() {
        let basis = MonomialBasis::singletons(3).unwrap();
        let p = pop_with_fitness(&[2.0]);
        assert!(empirical_sr_gradient(&p, &basis, Divisor::Unbiased).is_err());
        assert!(empirical_fisher(&p, &basis, Divisor::Unbiased).is_err());
    }

    #[test]
    fn duplicate_rows_make_fisher_singular() {
        let basis = MonomialBasis::singletons(3).unwrap();
        let p = Population::from_parts(3, vec![SpinState(5); 10], vec![1.0; 10]).unwrap();
        let fisher = empirical_fisher(&p, &basis, Divisor::Unbiased).unwrap();
        let min_eig = fisher.symmetric_eigen().eigenvalues.min();
        assert!(min_eig.abs() < 1e-14);
    }

    #[test]
    fn census_fisher_for_singletons_is_identity() {
        let f = PseudoBooleanFunction::onemax(4).unwrap();
        let census = Population::census(&f).unwrap();
        let basis = MonomialBasis::singletons(4).unwrap();
        let fisher = empirical_fisher(&census, &basis, Divisor::Population).unwrap();
        assert!((fisher - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn unbiased_divisor_differs_by_exact_factor() {
        let f = PseudoBooleanFunction::parse("1: 1 2\n-0.5: 3\n").unwrap();
        let census = Population::census(&f).unwrap();
        let basis = MonomialBasis::new(
            3,
            vec![MultiIndex::from_vars(&[0, 1]).unwrap(), MultiIndex::singleton(2)],
        )
        .unwrap();
        let a = empirical_sr_gradient(&census, &basis, Divisor::Population).unwrap();
        let b = empirical_sr_gradient(&census, &basis, Divisor::Unbiased).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x * 8.0 / 7.0 - y).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_examples() {
        let g = [0.5, -2.0, 3.0];
        let v = natural_gradient_solve(&DMatrix::identity(3, 3), &g, 0.0).unwrap();
        assert_eq!(v, g.to_vec());

        let theta: f64 = 0.8;
        let sech2 = 1.0 - theta.tanh().powi(2);
        let v = natural_gradient_solve(&DMatrix::from_element(1, 1, sech2), &[sech2], 0.0).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let v = natural_gradient_solve(&singular, &[1.0, 1.0], 1e-6).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn solve_escalates_zero_ridge() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let v = natural_gradient_solve(&singular, &[1.0, -1.0], 0.0).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn solve_gives_up_on_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            natural_gradient_solve(&m, &[1.0, 1.0], 0.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn ridge_resolution() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        assert_eq!(Ridge::Relative(1e-6).resolve(&m), 3e-6);
        assert_eq!(Ridge::Absolute(0.5).resolve(&m), 0.5);
    }

    #[test]
    fn population_helpers() {
        let f = PseudoBooleanFunction::onemax(3).unwrap();
        let p = Population::census(&f).unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.verify_fitness(&f));
        assert_eq!(p.best_fitness(Direction::Maximize), Some(3.0));
        assert_eq!(p.best_fitness(Direction::Minimize), Some(-3.0));
        assert_eq!(p.mean_fitness(), 0.0);
        let bad = Population::from_parts(3, p.samples().to_vec(), vec![0.0; 8]).unwrap();
        assert!(!bad.verify_fitness(&f));
        assert!(Population::from_parts(3, vec![SpinState(0)], vec![]).is_err());
    }
}
