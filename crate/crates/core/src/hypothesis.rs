//! Decision procedures built on the statistics: SRCT, SRPT, the Oracle test,
//! the MMD test, their grid-aggregated forms and the energy permutation test.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::kernels::{gram_self, Kernel};
use crate::pooled::{distance_matrix, energy_from_sums, PermutationPlan, PooledKernelData, PooledMatrix, SplitStats};
use crate::regularizers::Regularizer;
use crate::sample::Sample;
use crate::spectral::centered_eigensystem;
use crate::statistics::{mmd_hat, oracle_eta, ClosedFormNull, GramBundle, SplineSpectrum};

pub const DEFAULT_C1: f64 = 65.0;
pub const DEFAULT_PERMUTATIONS: usize = 60;
/// Frequencies used for the population 𝒩₂(λ) in the Oracle threshold.
pub const ORACLE_N2_TERMS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Srct,
    Srpt,
    Oracle,
    Mmd,
    EnergyPerm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Srct, Method::Srpt, Method::Oracle, Method::Mmd, Method::EnergyPerm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Srct => "srct",
            Method::Srpt => "srpt",
            Method::Oracle => "oracle",
            Method::Mmd => "mmd",
            Method::EnergyPerm => "energy-perm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| invalid(format!("unknown method '{s}' (expected srct, srpt, oracle, mmd or energy-perm)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub lambda: f64,
    pub kernel: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Outcome of a test. For a single test `reject == (statistic >= critical_value)`.
/// Aggregated tests report the largest margin `statistic - critical_value`
/// over the grid as `statistic` and 0 as `critical_value`, so the same
/// relation holds and `reject` is true iff some grid cell rejects.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestOutcome {
    pub reject: bool,
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub method: Method,
    pub per_grid_results: Option<Vec<GridResult>>,
}

impl TestOutcome {
    fn single(method: Method, statistic: f64, critical_value: f64, alpha: f64) -> Self {
        Self { reject: statistic >= critical_value, statistic, critical_value, alpha, method, per_grid_results: None }
    }

    pub(crate) fn aggregate(method: Method, alpha: f64, cells: Vec<GridResult>) -> Self {
        let margin = cells.iter().map(|c| c.statistic - c.critical_value).fold(f64::NEG_INFINITY, f64::max);
        Self {
            reject: cells.iter().any(|c| c.reject),
            statistic: margin,
            critical_value: 0.0,
            alpha,
            method,
            per_grid_results: Some(cells),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("level alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_grid<T>(grid: &[T], what: &str) -> Result<()> {
    if grid.is_empty() {
        Err(invalid(format!("{what} grid is empty")))
    } else {
        Ok(())
    }
}

/// b₁ = √(4/9 - 16/(3√(3c₁)) - 32/(9c₁)).
pub fn srct_b1(c1: f64) -> Result<f64> {
    if c1.is_nan() || c1 < DEFAULT_C1 {
        return Err(invalid(format!("constant c1 must be at least {DEFAULT_C1}, got {c1}")));
    }
    let sq = 4.0 / 9.0 - 16.0 / (3.0 * (3.0 * c1).sqrt()) - 32.0 / (9.0 * c1);
    if sq <= 0.0 {
        return Err(invalid(format!("b1 is not real for c1 = {c1}")));
    }
    Ok(sq.sqrt())
}

/// SRCT critical value 12(C₁+C₂)N̂₂(λ)/(b₁√α) · (1/n + 1/m).
pub fn srct_threshold(reg: Regularizer, n2_hat: f64, alpha: f64, n: usize, m: usize, c1: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let b1 = srct_b1(c1)?;
    Ok(12.0 * (reg.c1() + reg.c2()) * n2_hat / (b1 * alpha.sqrt()) * (1.0 / n as f64 + 1.0 / m as f64))
}

/// Oracle critical value 2(C₁+C₂)𝒩₂(λ)/(n√α).
pub fn oracle_threshold(reg: Regularizer, n2: f64, n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(2.0 * (reg.c1() + reg.c2()) * n2 / (n as f64 * alpha.sqrt()))
}

/// MMD critical value 4κ/(√α n).
pub fn mmd_threshold(kappa: f64, n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(4.0 * kappa / (alpha.sqrt() * n as f64))
}

/// Largest number of ensemble values at or above the observed one that still
/// leads to rejection: ⌊α(B+1)⌋, guarded against representation error.
pub fn permutation_rejection_count(alpha: f64, permutations: usize) -> usize {
    (alpha * (permutations + 1) as f64 * (1.0 + 1e-12)).floor() as usize
}

/// Smallest B for which a permutation test at level `alpha` can reject.
pub fn min_permutations(alpha: f64) -> usize {
    ((1.0 / alpha) * (1.0 - 1e-12)).ceil() as usize - 1
}

/// Decision for an ensemble of B+1 values whose slot 0 is the observed
/// statistic. Rejects iff at most ⌊α(B+1)⌋ ensemble values (slot 0 included)
/// are ≥ the observed value; ties therefore count against rejection. Returns
/// the decision and a critical value c with reject ⇔ observed ≥ c.
pub fn permutation_decision(ensemble: &[f64], alpha: f64) -> Result<(bool, f64)> {
    check_alpha(alpha)?;
    if ensemble.len() < 2 {
        return Err(invalid("permutation ensemble needs the observed value and at least one permutation"));
    }
    if ensemble.iter().any(|v| !v.is_finite()) {
        return Err(GofError::Data("non-finite statistic in permutation ensemble".into()));
    }
    let k = permutation_rejection_count(alpha, ensemble.len() - 1);
    let observed = ensemble[0];
    let at_or_above = ensemble.iter().filter(|&&v| v >= observed).count();
    let mut sorted = ensemble.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let critical = if k >= sorted.len() { f64::NEG_INFINITY } else { sorted[k].next_up() };
    Ok((at_or_above <= k, critical))
}

/// Spectral regularized concentration test at a single λ.
#[allow(clippy::too_many_arguments)]
pub fn srct(
    x: &Sample,
    x0: &Sample,
    y0: &Sample,
    kernel: &Kernel,
    reg: Regularizer,
    lambda: f64,
    alpha: f64,
    c1: f64,
) -> Result<TestOutcome> {
    srct_threshold(reg, 1.0, alpha, 2, 2, c1)?;
    let grams = GramBundle::new(kernel, x, x0, y0)?;
    let eigen = centered_eigensystem(&grams.k_s, kernel.bound())?;
    let eta = crate::statistics::eta_ts(&grams, &eigen, reg, lambda)?.value;
    let gamma = srct_threshold(reg, eigen.n2_hat(lambda)?, alpha, x.len(), x0.len(), c1)?;
    Ok(TestOutcome::single(Method::Srct, eta, gamma, alpha))
}

/// SRCT aggregated over a kernel list and a λ grid at level α/(|Λ||W|).
#[allow(clippy::too_many_arguments)]
pub fn adaptive_srct(
    x: &Sample,
    x0: &Sample,
    y0: &Sample,
    kernels: &[Kernel],
    reg: Regularizer,
    lambdas: &[f64],
    alpha: f64,
    c1: f64,
) -> Result<TestOutcome> {
    check_grid(kernels, "kernel")?;
    check_grid(lambdas, "lambda")?;
    check_alpha(alpha)?;
    let cell_alpha = alpha / (kernels.len() * lambdas.len()) as f64;
    let mut cells = Vec::with_capacity(kernels.len() * lambdas.len());
    for kernel in kernels {
        let grams = GramBundle::new(kernel, x, x0, y0)?;
        let eigen = centered_eigensystem(&grams.k_s, kernel.bound())?;
        for &lambda in lambdas {
            let eta = crate::statistics::eta_ts(&grams, &eigen, reg, lambda)?.value;
            let gamma = srct_threshold(reg, eigen.n2_hat(lambda)?, cell_alpha, x.len(), x0.len(), c1)?;
            cells.push(GridResult { lambda, kernel: kernel.label(), statistic: eta, critical_value: gamma, reject: eta >= gamma });
        }
    }
    Ok(TestOutcome::aggregate(Method::Srct, alpha, cells))
}

/// Spectral regularized permutation test at a single λ.
#[allow(clippy::too_many_arguments)]
pub fn srpt(
    x: &Sample,
    x0: &Sample,
    y0: &Sample,
    kernel: &Kernel,
    reg: Regularizer,
    lambda: f64,
    alpha: f64,
    plan: &PermutationPlan,
) -> Result<TestOutcome> {
    let out = adaptive_srpt(x, x0, y0, std::slice::from_ref(kernel), reg, &[lambda], alpha, plan)?;
    let cell = &out.per_grid_results.as_ref().expect("aggregate has cells")[0];
    Ok(TestOutcome { per_grid_results: None, ..TestOutcome::single(Method::Srpt, cell.statistic, cell.critical_value, alpha) })
}

/// SRPT aggregated over a kernel list and a λ grid. All cells share the same
/// B permutations and each uses its own 1 - α/(|Λ||W|) permutation quantile.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_srpt(
    x: &Sample,
    x0: &Sample,
    y0: &Sample,
    kernels: &[Kernel],
    reg: Regularizer,
    lambdas: &[f64],
    alpha: f64,
    plan: &PermutationPlan,
) -> Result<TestOutcome> {
    check_grid(kernels, "kernel")?;
    check_grid(lambdas, "lambda")?;
    check_alpha(alpha)?;
    let n_cells = kernels.len() * lambdas.len();
    let cell_alpha = alpha / n_cells as f64;
    if plan.permutations < min_permutations(cell_alpha) {
        log::warn!(
            "{} permutations cannot reach per-cell level {cell_alpha:.3e}; at least {} are needed for the test to ever reject",
            plan.permutations,
            min_permutations(cell_alpha)
        );
    }
    let splits = plan.splits(x.len(), x0.len());
    let mut cells = Vec::with_capacity(n_cells);
    for kernel in kernels {
        let data = PooledKernelData::new(kernel, x, x0, y0)?;
        let stats: Vec<SplitStats> = splits.par_iter().map(|s| data.split_stats(s)).collect();
        for &lambda in lambdas {
            let coef = data.eigen().ratio_coefficients(reg, lambda)?;
            let g0 = reg.value_at_zero(lambda)?;
            let ensemble: Vec<f64> = stats.iter().map(|st| data.eta_from_stats(st, &coef, g0)).collect();
            let (reject, critical_value) = permutation_decision(&ensemble, cell_alpha)?;
            cells.push(GridResult { lambda, kernel: kernel.label(), statistic: ensemble[0], critical_value, reject });
        }
    }
    Ok(TestOutcome::aggregate(Method::Srpt, alpha, cells))
}

/// Oracle test with the periodic spline kernel under the uniform null on [0, 1].
pub fn oracle_test(x: &Sample, reg: Regularizer, lambda: f64, alpha: f64, spectrum: SplineSpectrum) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let eta = oracle_eta(x, reg, lambda, spectrum)?.value;
    let gamma = oracle_threshold(reg, SplineSpectrum::population_n2(lambda, ORACLE_N2_TERMS), x.len(), alpha)?;
    Ok(TestOutcome::single(Method::Oracle, eta, gamma, alpha))
}

/// MMD test against a null with closed-form mean embedding.
pub fn mmd_test(x: &Sample, kernel: &Kernel, null: &ClosedFormNull, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let k_n = gram_self(kernel, x)?;
    let mu: Vec<f64> = x.iter().map(|p| null.mean_embedding(p)).collect();
    let stat = mmd_hat(&k_n, &mu, null.squared_norm())?.value;
    Ok(TestOutcome::single(Method::Mmd, stat, mmd_threshold(kernel.bound(), x.len(), alpha)?, alpha))
}

/// Two-sample permutation test on the energy distance between X and X⁰.
pub fn energy_perm_test(x: &Sample, x0: &Sample, alpha: f64, plan: &PermutationPlan) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    crate::statistics::energy_stat(x, x0)?;
    let pooled = PooledMatrix::new(distance_matrix(&x.concat(x0)?));
    let (n, m) = (x.len(), x0.len());
    let ensemble: Vec<f64> =
        plan.splits(n, m).par_iter().map(|s| energy_from_sums(&pooled.pair_sums(s), n, m)).collect();
    let (reject, critical) = permutation_decision(&ensemble, alpha)?;
    Ok(TestOutcome { reject, ..TestOutcome::single(Method::EnergyPerm, ensemble[0], critical, alpha) })
}
