use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::trace::{IterRecord, RunStatus, RunTrace};
use super::{
    empirical_fisher, empirical_sr_gradient, inf_norm, natural_gradient_pinv, natural_gradient_solve, select_truncation,
    Direction, Divisor, Population, Ridge,
};
use crate::error::{Error, Result};
use crate::expfam::{gibbs_sampler, uniform_states, ExactModel, GibbsConfig, MonomialBasis};
use crate::seed::child_seed;
use crate::walsh::{PseudoBooleanFunction, DEFAULT_EXACT_LIMIT};

fn check_dims(f: &PseudoBooleanFunction, basis: &MonomialBasis) -> Result<()> {
    if f.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            actual: f.n(),
        });
    }
    Ok(())
}

fn exact_expectation(
    f: &PseudoBooleanFunction,
    basis: &MonomialBasis,
    theta: &[f64],
    limit: usize,
) -> Result<Option<f64>> {
    if basis.n() > limit {
        return Ok(None);
    }
    Ok(Some(ExactModel::new(basis, theta)?.expectation(f)?))
}

/// Tracks the best value seen and the stall window.
struct Progress {
    direction: Direction,
    best: Option<f64>,
    history: Vec<f64>,
}

impl Progress {
    fn new(direction: Direction) -> Self {
        Self {
            direction,
            best: None,
            history: Vec::new(),
        }
    }

    fn offer(&mut self, value: Option<f64>) -> f64 {
        if let Some(v) = value {
            match self.best {
                Some(b) if !self.direction.better(v, b) => {}
                _ => self.best = Some(v),
            }
        }
        self.best.unwrap_or(f64::NAN)
    }

    /// True when the last `window` estimates improved on everything before
    /// them by less than `tol`.
    fn stalled(&mut self, estimate: f64, window: usize, tol: f64) -> bool {
        self.history.push(self.direction.sign() * estimate);
        if window == 0 || self.history.len() <= window {
            return false;
        }
        let split = self.history.len() - window;
        let before = self.history[..split].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let recent = self.history[split..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        recent - before < tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SngdConfig {
    /// Population size `N`.
    pub population: usize,
    /// Selected size `M`; `None` uses the whole population.
    pub selected: Option<usize>,
    pub lambda: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub direction: Direction,
    pub ridge: Ridge,
    pub gibbs: GibbsConfig,
    /// Stop when the sup-norm of the estimated gradient falls below this.
    pub grad_tol: f64,
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Largest `n` for which `E_theta[f]` is computed exactly for the trace.
    pub exact_trace_limit: usize,
}

impl Default for SngdConfig {
    fn default() -> Self {
        Self {
            population: 100,
            selected: None,
            lambda: 0.1,
            max_iters: 100,
            seed: 0,
            direction: Direction::Maximize,
            ridge: Ridge::default(),
            gibbs: GibbsConfig::default(),
            grad_tol: 1e-8,
            stall_window: 20,
            stall_tol: 1e-9,
            exact_trace_limit: 16,
        }
    }
}

impl SngdConfig {
    pub fn selected_size(&self) -> usize {
        self.selected.unwrap_or(self.population)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::param("population", "must be at least 2"));
        }
        let m = self.selected_size();
        if m < 2 || m > self.population {
            return Err(Error::param(
                "selected",
                format!("must lie in 2..={}, got {m}", self.population),
            ));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::param("grad_tol", "must be >= 0"));
        }
        self.ridge.validate()
    }
}

/// One natural-gradient update computed from a fixed population.
#[derive(Debug, Clone, PartialEq)]
pub struct SngdStep {
    pub gradient: Vec<f64>,
    pub fisher: DMatrix<f64>,
    pub ridge: f64,
    pub direction: Vec<f64>,
    pub theta_next: Vec<f64>,
}

/// `theta + s lambda (I_hat + ridge)^-1 g_hat` on the (optionally selected)
/// population.
pub fn sngd_step(
    theta: &[f64],
    pop: &Population,
    basis: &MonomialBasis,
    config: &SngdConfig,
) -> Result<SngdStep> {
    let m = config.selected_size();
    let selected;
    let used = if m < pop.len() {
        selected = select_truncation(pop, m, config.direction)?;
        &selected
    } else {
        pop
    };
    let gradient = empirical_sr_gradient(used, basis, Divisor::Unbiased)?;
    let fisher = empirical_fisher(used, basis, Divisor::Unbiased)?;
    let ridge = config.ridge.resolve(&fisher);
    let direction = natural_gradient_solve(&fisher, &gradient, ridge)?;
    let step = config.direction.sign() * config.lambda;
    let theta_next = theta
        .iter()
        .zip(&direction)
        .map(|(t, v)| t + step * v)
        .collect();
    Ok(SngdStep {
        gradient,
        fisher,
        ridge,
        direction,
        theta_next,
    })
}

/// Stochastic natural gradient: sample, estimate `Cov(f, T)` and `Cov(T, T)`,
/// step along the natural gradient, resample by Gibbs.
pub fn sngd_run(
    f: &PseudoBooleanFunction,
    basis: &MonomialBasis,
    config: &SngdConfig,
) -> Result<RunTrace> {
    check_dims(f, basis)?;
    config.validate()?;
    let mut theta = vec![0.0; basis.dim()];
    let mut states = uniform_states(basis.n(), config.population, child_seed(config.seed, 0));
    let mut progress = Progress::new(config.direction);
    let mut records = Vec::new();
    let mut status = RunStatus::MaxIters;

    for iter in 0..config.max_iters {
        let pop = Population::evaluate(f, std::mem::take(&mut states));
        let best_f = progress.offer(pop.best_fitness(config.direction));
        let e_f_est = pop.mean_fitness();
        let e_f_exact = exact_expectation(f, basis, &theta, config.exact_trace_limit)?;

        let step = sngd_step(&theta, &pop, basis, config)?;
        let grad_norm = inf_norm(&step.gradient);
        records.push(IterRecord {
            iter,
            theta: theta.clone(),
            e_f_est,
            e_f_exact,
            best_f,
            grad_norm: Some(grad_norm),
        });
        if grad_norm < config.grad_tol {
            status = RunStatus::GradientConverged;
            break;
        }
        if progress.stalled(e_f_est, config.stall_window, config.stall_tol) {
            status = RunStatus::Stalled;
            break;
        }
        theta = step.theta_next;
        if iter + 1 < config.max_iters {
            states = gibbs_sampler(
                basis,
                &theta,
                config.population,
                &config.gibbs,
                child_seed(config.seed, iter as u64 + 1),
            )?;
        }
    }
    Ok(RunTrace {
        records,
        status,
        final_theta: theta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub direction: Direction,
    pub ridge: Ridge,
    /// Eigen-directions of the Fisher matrix below `rcond` times its largest
    /// eigenvalue are left out of the step.
    pub rcond: f64,
    pub grad_tol: f64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            max_iters: 200,
            direction: Direction::Maximize,
            ridge: Ridge::Absolute(0.0),
            rcond: 1e-10,
            grad_tol: 1e-8,
        }
    }
}

impl ExactConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if !(self.rcond.is_finite() && (0.0..1.0).contains(&self.rcond)) {
            return Err(Error::param("rcond", format!("must lie in [0, 1), got {}", self.rcond)));
        }
        self.ridge.validate()
    }
}

/// Natural-gradient iteration on the exact relaxation.
///
/// `best_f` records the best `E_theta[f]` reached so far.
pub fn exact_descent_run(
    f: &PseudoBooleanFunction,
    basis: &MonomialBasis,
    config: &ExactConfig,
) -> Result<RunTrace> {
    check_dims(f, basis)?;
    config.validate()?;
    if basis.n() > DEFAULT_EXACT_LIMIT {
        return Err(Error::DimensionTooLarge {
            n: basis.n(),
            limit: DEFAULT_EXACT_LIMIT,
        });
    }
    let mut theta = vec![0.0; basis.dim()];
    let mut progress = Progress::new(config.direction);
    let mut records = Vec::new();
    let mut status = RunStatus::MaxIters;

    for iter in 0..config.max_iters {
        let model = ExactModel::new(basis, &theta)?;
        let value = model.expectation(f)?;
        let gradient = model.sr_gradient(f)?;
        let grad_norm = inf_norm(&gradient);
        records.push(IterRecord {
            iter,
            theta: theta.clone(),
            e_f_est: value,
            e_f_exact: Some(value),
            best_f: progress.offer(Some(value)),
            grad_norm: Some(grad_norm),
        });
        if grad_norm < config.grad_tol {
            status = RunStatus::GradientConverged;
            break;
        }
        let fisher = model.fisher_information();
        let ridge = config.ridge.resolve(&fisher);
        let v = natural_gradient_pinv(&fisher, &gradient, ridge, config.rcond)?;
        let step = config.direction.sign() * config.lambda;
        theta.iter_mut().zip(&v).for_each(|(t, d)| *t += step * d);
    }
    Ok(RunTrace {
        records,
        status,
        final_theta: theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Closed form for singleton bases: `theta_i = atanh(clipped mean of x_i)`.
    #[default]
    Independence,
    /// Maximum likelihood for any basis: solve `E_theta[T] = eta_hat` on the
    /// exact engine after shrinking `eta_hat` towards the uniform mean.
    MomentMatching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdaConfig {
    pub population: usize,
    pub selected: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub direction: Direction,
    pub estimator: Estimator,
    /// Estimated means are kept in `[-1 + delta, 1 - delta]`.
    pub clip_delta: f64,
    pub gibbs: GibbsConfig,
    pub exact_trace_limit: usize,
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            population: 200,
            selected: 100,
            max_iters: 100,
            seed: 0,
            direction: Direction::Maximize,
            estimator: Estimator::Independence,
            clip_delta: 1e-3,
            gibbs: GibbsConfig::default(),
            exact_trace_limit: 16,
        }
    }
}

impl EdaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::param("population", "must be at least 1"));
        }
        if self.selected == 0 || self.selected > self.population {
            return Err(Error::param(
                "selected",
                format!("must lie in 1..={}, got {}", self.population, self.selected),
            ));
        }
        if !(self.clip_delta > 0.0 && self.clip_delta < 1.0) {
            return Err(Error::param("clip_delta", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Selected-sample means of each singleton statistic, clipped to `1 - delta`.
pub fn independence_mean_estimate(
    selected: &Population,
    basis: &MonomialBasis,
    delta: f64,
) -> Result<Vec<f64>> {
    if !basis.is_singletons() {
        return Err(Error::IncompatibleEstimator);
    }
    if selected.is_empty() {
        return Err(Error::param("selected", "empty population"));
    }
    let bound = 1.0 - delta;
    Ok(basis
        .stats()
        .iter()
        .map(|a| {
            let mean = selected
                .samples()
                .iter()
                .map(|&s| a.character(s))
                .sum::<f64>()
                / selected.len() as f64;
            mean.clamp(-bound, bound)
        })
        .collect())
}

pub fn estimate_independence(
    selected: &Population,
    basis: &MonomialBasis,
    delta: f64,
) -> Result<Vec<f64>> {
    Ok(independence_mean_estimate(selected, basis, delta)?
        .into_iter()
        .map(f64::atanh)
        .collect())
}

const MOMENT_MATCH_TOL: f64 = 1e-10;
const MOMENT_MATCH_MAX_ITERS: usize = 200;

/// Solves `E_theta[T] = (1 - delta) eta_hat` by damped Newton steps on the
/// convex objective `psi(theta) - theta . eta`.
///
/// Shrinking towards `0`, the mean under the uniform density, keeps the target
/// in the interior of the convex hull of `{T(x)}`.
pub fn estimate_moment_matching(
    selected: &Population,
    basis: &MonomialBasis,
    delta: f64,
) -> Result<Vec<f64>> {
    if selected.is_empty() {
        return Err(Error::param("selected", "empty population"));
    }
    if selected.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            actual: selected.n(),
        });
    }
    let k = selected.len() as f64;
    let target: Vec<f64> = basis
        .stats()
        .iter()
        .map(|a| (1.0 - delta) * selected.samples().iter().map(|&s| a.character(s)).sum::<f64>() / k)
        .collect();
    let objective = |m: &ExactModel| {
        m.log_partition() - m.theta().iter().zip(&target).map(|(t, e)| t * e).sum::<f64>()
    };

    let mut model = ExactModel::new(basis, &vec![0.0; basis.dim()])?;
    for _ in 0..MOMENT_MATCH_MAX_ITERS {
        let eta = model.mean_params();
        let residual: Vec<f64> = target.iter().zip(eta.iter()).map(|(t, e)| t - e).collect();
        if inf_norm(&residual) < MOMENT_MATCH_TOL {
            return Ok(model.theta().to_vec());
        }
        let step = natural_gradient_solve(&model.fisher_information(), &residual, 0.0)?;
        let current = objective(&model);
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = model
                .theta()
                .iter()
                .zip(&step)
                .map(|(t, s)| t + scale * s)
                .collect();
            let candidate = ExactModel::new(basis, &trial)?;
            if objective(&candidate) <= current || scale < 1e-8 {
                model = candidate;
                break;
            }
            scale *= 0.5;
        }
    }
    Err(Error::NotConverged("moment matching"))
}

/// Sample, truncation-select, refit the model, resample.
pub fn eda_run(
    f: &PseudoBooleanFunction,
    basis: &MonomialBasis,
    config: &EdaConfig,
) -> Result<RunTrace> {
    check_dims(f, basis)?;
    config.validate()?;
    if config.estimator == Estimator::Independence && !basis.is_singletons() {
        return Err(Error::IncompatibleEstimator);
    }
    let mut theta = vec![0.0; basis.dim()];
    let mut states = uniform_states(basis.n(), config.population, child_seed(config.seed, 0));
    let mut progress = Progress::new(config.direction);
    let mut records = Vec::new();
    let mut status = RunStatus::MaxIters;

    for iter in 0..config.max_iters {
        let pop = Population::evaluate(f, std::mem::take(&mut states));
        let best_f = progress.offer(pop.best_fitness(config.direction));
        let selected = select_truncation(&pop, config.selected, config.direction)?;
        records.push(IterRecord {
            iter,
            theta: theta.clone(),
            e_f_est: pop.mean_fitness(),
            e_f_exact: exact_expectation(f, basis, &theta, config.exact_trace_limit)?,
            best_f,
            grad_norm: None,
        });
        let first = selected.fitness()[0];
        if selected.fitness().iter().all(|&v| v == first) {
            status = RunStatus::PopulationConverged;
            break;
        }
        theta = match config.estimator {
            Estimator::Independence => estimate_independence(&selected, basis, config.clip_delta)?,
            Estimator::MomentMatching => {
                estimate_moment_matching(&selected, basis, config.clip_delta)?
            }
        };
        if iter + 1 < config.max_iters {
            states = gibbs_sampler(
                basis,
                &theta,
                config.population,
                &config.gibbs,
                child_seed(config.seed, iter as u64 + 1),
            )?;
        }
    }
    Ok(RunTrace {
        records,
        status,
        final_theta: theta,
    })
}
