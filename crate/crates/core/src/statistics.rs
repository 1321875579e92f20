//! Test statistics: the regularized two-sample statistic, the MMD
//! goodness-of-fit U-statistic, the Mercer-expansion Oracle statistic and the
//! energy distance.

use nalgebra::DMatrix;

use crate::distributions::DistributionSpec;
use crate::error::{GofError, Result};
use crate::kernels::{gram, gram_self, Kernel};
use crate::regularizers::Regularizer;
use crate::sample::Sample;
use crate::spectral::{half_centering_scale, EigenSystem};
use crate::special::{ln_bessel_i, normal_cdf};

/// All Gram blocks the regularized statistic needs.
#[derive(Clone, Debug)]
pub struct GramBundle {
    pub k_n: DMatrix<f64>,
    pub k_m: DMatrix<f64>,
    pub k_mn: DMatrix<f64>,
    pub k_ns: DMatrix<f64>,
    pub k_ms: DMatrix<f64>,
    pub k_s: DMatrix<f64>,
}

impl GramBundle {
    pub fn new(kernel: &Kernel, x: &Sample, x0: &Sample, y0: &Sample) -> Result<Self> {
        Ok(Self {
            k_n: gram_self(kernel, x)?,
            k_m: gram_self(kernel, x0)?,
            k_mn: gram(kernel, x0, x)?,
            k_ns: gram(kernel, x, y0)?,
            k_ms: gram(kernel, x0, y0)?,
            k_s: gram_self(kernel, y0)?,
        })
    }

    pub fn n(&self) -> usize {
        self.k_n.nrows()
    }

    pub fn m(&self) -> usize {
        self.k_m.nrows()
    }

    pub fn s(&self) -> usize {
        self.k_s.nrows()
    }

    fn validate(&self) -> Result<()> {
        let (n, m, s) = (self.n(), self.m(), self.s());
        let shapes = [
            (self.k_n.shape(), (n, n)),
            (self.k_m.shape(), (m, m)),
            (self.k_mn.shape(), (m, n)),
            (self.k_ns.shape(), (n, s)),
            (self.k_ms.shape(), (m, s)),
            (self.k_s.shape(), (s, s)),
        ];
        for (got, want) in shapes {
            if got != want {
                return Err(GofError::DimensionMismatch { expected: want.1, got: got.1 });
            }
        }
        Ok(())
    }
}

/// The five sums whose combination gives the regularized statistic:
/// X-X sum and trace, X⁰-X⁰ sum and trace, X⁰-X cross sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaComponents {
    pub sample_sum: f64,
    pub sample_trace: f64,
    pub null_sum: f64,
    pub null_trace: f64,
    pub cross_sum: f64,
}

impl EtaComponents {
    pub fn recombine(&self, n: usize, m: usize) -> f64 {
        let (nf, mf) = (n as f64, m as f64);
        (self.sample_sum - self.sample_trace) / (nf * (nf - 1.0))
            + (self.null_sum - self.null_trace) / (mf * (mf - 1.0))
            - 2.0 * self.cross_sum / (nf * mf)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatisticValue {
    pub value: f64,
    /// 0 for unregularized statistics.
    pub lambda: f64,
    pub kernel: String,
    pub components: Option<EtaComponents>,
}

fn require(what: &'static str, got: usize, min: usize) -> Result<()> {
    if got < min {
        Err(GofError::TooFewSamples { what, min, got })
    } else {
        Ok(())
    }
}

/// Regularized two-sample statistic computed from Gram blocks and the
/// covariance-sample eigensystem.
pub fn eta_ts(grams: &GramBundle, eigen: &EigenSystem, reg: Regularizer, lambda: f64) -> Result<StatisticValue> {
    let g = eigen.build_g(reg, lambda)?;
    eta_ts_with_g(grams, &g, reg.value_at_zero(lambda)?, lambda)
}

/// Same statistic with an explicitly supplied G matrix and g_λ(0).
pub fn eta_ts_with_g(grams: &GramBundle, g: &DMatrix<f64>, g_zero: f64, lambda: f64) -> Result<StatisticValue> {
    grams.validate()?;
    let (n, m, s) = (grams.n(), grams.m(), grams.s());
    require("sample X", n, 2)?;
    require("null sample X0", m, 2)?;
    require("covariance sample Y0", s, 2)?;
    if g.shape() != (s, s) {
        return Err(GofError::DimensionMismatch { expected: s, got: g.nrows() });
    }
    let hs = half_centering_scale(s);
    // K H̃^{1/2}: center each row, then scale
    let half_center = |k: &DMatrix<f64>| {
        let mut p = k.clone();
        for mut row in p.row_iter_mut() {
            let mean = row.sum() / s as f64;
            row.apply(|v| *v = (*v - mean) * hs);
        }
        p
    };
    let p_n = half_center(&grams.k_ns);
    let p_m = half_center(&grams.k_ms);
    let t_n = &p_n * g;
    let t_m = &p_m * g;
    let inv_s = 1.0 / s as f64;
    let col_sum = |p: &DMatrix<f64>| p.row_sum();
    let (c_n, c_m) = (col_sum(&p_n), col_sum(&p_m));
    let tc_n = col_sum(&t_n);
    let tc_m = col_sum(&t_m);
    let quad_nn = tc_n.dot(&c_n);
    let quad_mm = tc_m.dot(&c_m);
    let quad_mn = tc_m.dot(&c_n);
    let trace_n = t_n.component_mul(&p_n).sum();
    let trace_m = t_m.component_mul(&p_m).sum();
    let comps = EtaComponents {
        sample_sum: g_zero * grams.k_n.sum() + inv_s * quad_nn,
        sample_trace: g_zero * grams.k_n.trace() + inv_s * trace_n,
        null_sum: g_zero * grams.k_m.sum() + inv_s * quad_mm,
        null_trace: g_zero * grams.k_m.trace() + inv_s * trace_m,
        cross_sum: g_zero * grams.k_mn.sum() + inv_s * quad_mn,
    };
    Ok(StatisticValue { value: comps.recombine(n, m), lambda, kernel: String::new(), components: Some(comps) })
}

/// Unbiased MMD² estimate against a null with known mean embedding.
pub fn mmd_hat(k_n: &DMatrix<f64>, mu0_at_x: &[f64], mu0_norm_sq: f64) -> Result<StatisticValue> {
    let n = k_n.nrows();
    require("sample X", n, 2)?;
    if mu0_at_x.len() != n {
        return Err(GofError::DimensionMismatch { expected: n, got: mu0_at_x.len() });
    }
    let nf = n as f64;
    let off_diag = k_n.sum() - k_n.trace();
    let value = off_diag / (nf * (nf - 1.0)) - 2.0 / nf * mu0_at_x.iter().sum::<f64>() + mu0_norm_sq;
    Ok(StatisticValue { value, lambda: 0.0, kernel: String::new(), components: None })
}

/// Closed-form mean embedding μ₀ and ‖μ₀‖² for supported (kernel, null) pairs.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedFormNull {
    /// Periodic spline kernel under the uniform law on [0, 1]: μ₀ ≡ 0.
    Zero,
    /// Gaussian kernel, null N(mean, var·I).
    GaussianNormal { bandwidth: f64, mean: Vec<f64>, var: f64 },
    /// Gaussian kernel, null uniform on [0, 1]^d.
    GaussianUniformCube { bandwidth: f64, dim: usize },
    /// Gaussian kernel, null uniform on S^{d-1}; μ₀ is constant.
    GaussianUniformSphere { bandwidth: f64, dim: usize, value: f64 },
}

impl ClosedFormNull {
    pub fn for_pair(kernel: &Kernel, null: &DistributionSpec) -> Result<Self> {
        let missing = || GofError::MissingClosedForm(format!("{} under {null}", kernel.label()));
        match (kernel, null) {
            (Kernel::PeriodicSpline, DistributionSpec::UniformCube { dim: 1 }) => Ok(ClosedFormNull::Zero),
            (Kernel::PeriodicSpline, DistributionSpec::PerturbedUniform { dim: 1, perturbations: 0, .. }) => {
                Ok(ClosedFormNull::Zero)
            }
            (Kernel::Gaussian { bandwidth }, DistributionSpec::Gaussian { dim, shift, scale }) => {
                let mut mean = vec![0.0; *dim];
                mean[0] = *shift;
                Ok(ClosedFormNull::GaussianNormal { bandwidth: *bandwidth, mean, var: *scale })
            }
            (Kernel::Gaussian { bandwidth }, DistributionSpec::UniformCube { dim })
            | (Kernel::Gaussian { bandwidth }, DistributionSpec::PerturbedUniform { dim, perturbations: 0, .. }) => {
                Ok(ClosedFormNull::GaussianUniformCube { bandwidth: *bandwidth, dim: *dim })
            }
            (Kernel::Gaussian { bandwidth }, DistributionSpec::SphereUniform { dim })
            | (Kernel::Gaussian { bandwidth }, DistributionSpec::Vmf { dim, kappa: 0.0 }) => {
                // K = e^{-1/h} e^{xᵀy/h}; E_y e^{t xᵀy} = Γ(d/2) (2/t)^{d/2-1} I_{d/2-1}(t)
                let t = 1.0 / bandwidth;
                let nu = *dim as f64 / 2.0 - 1.0;
                let ln_value = -t
                    + statrs::function::gamma::ln_gamma(*dim as f64 / 2.0)
                    + nu * (2.0 / t).ln()
                    + ln_bessel_i(nu, t);
                Ok(ClosedFormNull::GaussianUniformSphere { bandwidth: *bandwidth, dim: *dim, value: ln_value.exp() })
            }
            _ => Err(missing()),
        }
    }

    pub fn mean_embedding(&self, x: &[f64]) -> f64 {
        match self {
            ClosedFormNull::Zero => 0.0,
            ClosedFormNull::GaussianNormal { bandwidth: h, mean, var } => {
                let d = mean.len() as f64;
                let d2: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
                (h / (h + var)).powf(d / 2.0) * (-d2 / (2.0 * (h + var))).exp()
            }
            ClosedFormNull::GaussianUniformCube { bandwidth: h, .. } => {
                let sh = h.sqrt();
                let c = (2.0 * std::f64::consts::PI * h).sqrt();
                x.iter().map(|&xi| c * (normal_cdf((1.0 - xi) / sh) - normal_cdf(-xi / sh))).product()
            }
            ClosedFormNull::GaussianUniformSphere { value, .. } => *value,
        }
    }

    pub fn squared_norm(&self) -> f64 {
        match self {
            ClosedFormNull::Zero => 0.0,
            ClosedFormNull::GaussianNormal { bandwidth: h, mean, var } => {
                (h / (h + 2.0 * var)).powf(mean.len() as f64 / 2.0)
            }
            ClosedFormNull::GaussianUniformCube { bandwidth: h, dim } => {
                // ∫∫ e^{-(x-y)²/2h} over [0,1]² = 2 ∫_0^1 (1 - t) e^{-t²/2h} dt
                let one_d = 2.0
                    * ((2.0 * std::f64::consts::PI * h).sqrt() * (normal_cdf(1.0 / h.sqrt()) - 0.5)
                        - h * (-(-0.5 / h).exp_m1()));
                one_d.powi(*dim as i32)
            }
            ClosedFormNull::GaussianUniformSphere { value, .. } => *value,
        }
    }
}

/// Eigen-expansion of the periodic spline kernel (order 1) under the uniform
/// law: eigenvalues (2πk)^{-2}, k ≥ 1, each carried by the pair
/// √2 cos(2πkx), √2 sin(2πkx). The constant function is not in the expansion,
/// so μ₀ = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplineSpectrum {
    pub k_max: usize,
}

impl Default for SplineSpectrum {
    fn default() -> Self {
        Self { k_max: 1024 }
    }
}

pub fn spline_eigenvalue(k: usize) -> f64 {
    (2.0 * std::f64::consts::PI * k as f64).powi(-2)
}

impl SplineSpectrum {
    /// Population 𝒩₂(λ) = ‖Σ_{0,λ}^{-1/2} Σ₀ Σ_{0,λ}^{-1/2}‖_HS truncated at `terms` frequencies.
    pub fn population_n2(lambda: f64, terms: usize) -> f64 {
        (1..=terms)
            .rev()
            .map(|k| {
                let e = spline_eigenvalue(k);
                2.0 * (e / (e + lambda)).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn population_n1(lambda: f64, terms: usize) -> f64 {
        (1..=terms)
            .rev()
            .map(|k| {
                let e = spline_eigenvalue(k);
                2.0 * e / (e + lambda)
            })
            .sum()
    }

    /// Upper bound on |statistic(k_max) - statistic(∞)|: every mode contributes
    /// at most 2 g_λ(λ_k) λ_k per pair, g_λ ≤ C₂/λ, and Σ_{k>K} 2(2πk)^{-2} < 1/(2π²K).
    pub fn truncation_bound(&self, reg: Regularizer, lambda: f64) -> f64 {
        2.0 * reg.c2() / lambda / (2.0 * std::f64::consts::PI.powi(2) * self.k_max as f64)
    }
}

/// Oracle statistic via the spline Mercer expansion (uniform null on [0, 1]).
pub fn oracle_eta(x: &Sample, reg: Regularizer, lambda: f64, spectrum: SplineSpectrum) -> Result<StatisticValue> {
    let n = x.len();
    require("sample X", n, 2)?;
    if spectrum.k_max < 1 {
        return Err(crate::error::invalid("oracle truncation k_max must be at least 1"));
    }
    Kernel::PeriodicSpline.check_sample(x)?;
    reg.value_at_zero(lambda)?;
    let tau = 2.0 * std::f64::consts::PI;
    // per-frequency Σ_i φ(X_i) and Σ_i φ(X_i)² for the cos and sin members
    let mut total = 0.0;
    let mut sums = vec![[0.0f64; 4]; spectrum.k_max];
    for p in x.iter() {
        let xi = p[0];
        for (k0, acc) in sums.iter_mut().enumerate() {
            let (sn, cs) = (tau * (k0 + 1) as f64 * xi).sin_cos();
            let (c, s) = (std::f64::consts::SQRT_2 * cs, std::f64::consts::SQRT_2 * sn);
            acc[0] += c;
            acc[1] += c * c;
            acc[2] += s;
            acc[3] += s * s;
        }
    }
    for (k0, acc) in sums.iter().enumerate().rev() {
        let e = spline_eigenvalue(k0 + 1);
        let w = reg.eval(lambda, e) * e;
        total += w * ((acc[0] * acc[0] - acc[1]) + (acc[2] * acc[2] - acc[3]));
    }
    let nf = n as f64;
    Ok(StatisticValue {
        value: total / (nf * (nf - 1.0)),
        lambda,
        kernel: Kernel::PeriodicSpline.label(),
        components: None,
    })
}

/// Energy distance between X and X⁰ with U-statistic within-sample terms:
/// 2 mean‖X - X⁰‖ - mean_{i≠j}‖X_i - X_j‖ - mean_{i≠j}‖X⁰_i - X⁰_j‖.
pub fn energy_stat(x: &Sample, x0: &Sample) -> Result<StatisticValue> {
    require("sample X", x.len(), 2)?;
    require("null sample X0", x0.len(), 2)?;
    if x.dim() != x0.dim() {
        return Err(GofError::DimensionMismatch { expected: x.dim(), got: x0.dim() });
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let within = |s: &Sample| {
        let mut acc = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                acc += dist(s.point(i), s.point(j));
            }
        }
        let k = s.len() as f64;
        2.0 * acc / (k * (k - 1.0))
    };
    let mut cross = 0.0;
    for p in x.iter() {
        for q in x0.iter() {
            cross += dist(p, q);
        }
    }
    let cross = cross / (x.len() * x0.len()) as f64;
    Ok(StatisticValue {
        value: 2.0 * cross - within(x) - within(x0),
        lambda: 0.0,
        kernel: "energy".into(),
        components: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{FiniteRankKernel, TrigBasis};
    use crate::spectral::centered_eigensystem;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn mmd_hat_arithmetic() {
        let k = DMatrix::from_row_slice(2, 2, &[9.0, 0.5, 0.5, 9.0]);
        let v = mmd_hat(&k, &[0.3, 0.4], 0.2).unwrap().value;
        assert_relative_eq!(v, 0.0, epsilon = 1e-15);
        assert!(mmd_hat(&DMatrix::identity(1, 1), &[0.0], 0.0).is_err());
    }

    #[test]
    fn gaussian_normal_closed_form_values() {
        let null = ClosedFormNull::GaussianNormal { bandwidth: 1.0, mean: vec![0.0], var: 1.0 };
        assert_relative_eq!(null.mean_embedding(&[0.0]), 0.5f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(null.squared_norm(), (1.0f64 / 3.0).sqrt(), max_relative = 1e-14);
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn closed_forms_match_quadrature() {
        // Gaussian kernel, N(0, σ²): ∫ K(x, y) φ_σ(y) dy
        let (h, var) = (0.7, 1.3);
        let null = ClosedFormNull::GaussianNormal { bandwidth: h, mean: vec![0.0], var };
        let dens = |y: f64| (-y * y / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let k = |x: f64, y: f64| (-(x - y) * (x - y) / (2.0 * h)).exp();
        for x in [-1.0, 0.0, 0.4, 2.0] {
            let q = simpson(|y| k(x, y) * dens(y), -15.0, 15.0, 4000);
            assert_relative_eq!(null.mean_embedding(&[x]), q, max_relative = 1e-9);
        }
        let qq = simpson(|x| dens(x) * simpson(|y| k(x, y) * dens(y), -15.0, 15.0, 800), -15.0, 15.0, 800);
        assert_relative_eq!(null.squared_norm(), qq, max_relative = 1e-8);

        // Gaussian kernel, uniform cube
        let cube = ClosedFormNull::GaussianUniformCube { bandwidth: 0.2, dim: 2 };
        let kk = |x: f64, y: f64| (-(x - y) * (x - y) / 0.4).exp();
        let one = |x: f64| simpson(|y| kk(x, y), 0.0, 1.0, 2000);
        assert_relative_eq!(cube.mean_embedding(&[0.3, 0.9]), one(0.3) * one(0.9), max_relative = 1e-10);
        let norm1 = simpson(one, 0.0, 1.0, 400);
        assert_relative_eq!(cube.squared_norm(), norm1 * norm1, max_relative = 1e-9);

        // spline kernel under uniform: μ₀ ≡ 0
        for x in [0.0, 0.25, 0.8] {
            let q = simpson(|y| Kernel::PeriodicSpline.eval(&[x], &[y]).unwrap(), 0.0, 1.0, 2000);
            assert!(q.abs() < 1e-7, "{q}");
        }
    }

    #[test]
    fn sphere_closed_form_matches_monte_carlo() {
        let h = 0.5;
        let null = ClosedFormNull::for_pair(
            &Kernel::gaussian(h).unwrap(),
            &DistributionSpec::SphereUniform { dim: 3 },
        )
        .unwrap();
        // d = 3: E e^{t xᵀy} = sinh t / t
        let t = 1.0 / h;
        assert_relative_eq!(null.squared_norm(), (-t).exp() * t.sinh() / t, max_relative = 1e-12);
    }

    #[test]
    fn missing_closed_form_is_an_error() {
        let err = ClosedFormNull::for_pair(&Kernel::PeriodicSpline, &DistributionSpec::Gaussian { dim: 1, shift: 0.0, scale: 1.0 });
        assert!(matches!(err, Err(GofError::MissingClosedForm(_))));
    }

    #[test]
    fn oracle_single_pair_hand_value() {
        let x = Sample::from_scalars(&[0.0, 0.0]);
        let v = oracle_eta(&x, Regularizer::Tikhonov, 1.0, SplineSpectrum { k_max: 1 }).unwrap().value;
        let l1 = (2.0 * std::f64::consts::PI).powi(-2);
        assert_relative_eq!(v, 2.0 * l1 / (l1 + 1.0), max_relative = 1e-14);
        assert_relative_eq!(v, 0.049_409, epsilon = 1e-6);
    }

    #[test]
    fn oracle_matches_spline_gram_when_unregularized_limit() {
        // with λ → ∞ scaled by λ, g_λ(e)·e·λ → e, so λ·η̂_λ approaches the
        // plain Gram U-statistic of the spline kernel
        let mut rng = crate::rng::substream(2, &[]);
        let xs: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let x = Sample::from_scalars(&xs);
        let lambda = 1e8;
        let v = oracle_eta(&x, Regularizer::Tikhonov, lambda, SplineSpectrum { k_max: 4096 }).unwrap().value * lambda;
        let k = gram_self(&Kernel::PeriodicSpline, &x).unwrap();
        let u = (k.sum() - k.trace()) / (30.0 * 29.0);
        assert!((v - u).abs() < 1e-4, "{v} vs {u}");
    }

    #[test]
    fn oracle_truncation_is_stable() {
        let mut rng = crate::rng::substream(8, &[]);
        let xs: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let x = Sample::from_scalars(&xs);
        for lambda in [1e-4, 1e-2, 1.0] {
            let a = oracle_eta(&x, Regularizer::Tikhonov, lambda, SplineSpectrum { k_max: 512 }).unwrap().value;
            let b = oracle_eta(&x, Regularizer::Tikhonov, lambda, SplineSpectrum { k_max: 1024 }).unwrap().value;
            let bound = SplineSpectrum { k_max: 512 }.truncation_bound(Regularizer::Tikhonov, lambda);
            assert!((a - b).abs() <= bound, "λ={lambda}: {a} {b}");
            if lambda >= 1e-2 {
                assert!((a - b).abs() < 1e-6, "λ={lambda}: {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn population_n2_converges() {
        let a = SplineSpectrum::population_n2(0.01, 100_000);
        let b = SplineSpectrum::population_n2(0.01, 200_000);
        assert!((a - b).abs() / a < 1e-6);
        assert!(SplineSpectrum::population_n2(0.01, 10) < a);
    }

    #[test]
    fn energy_examples() {
        let v = energy_stat(&Sample::from_scalars(&[0.0, 0.0]), &Sample::from_scalars(&[1.0, 1.0])).unwrap();
        assert_eq!(v.value, 2.0);
        // identical samples: 2·S/n² - 2·S/(n(n-1)) with S the off-diagonal distance sum
        let pts = [0.0, 1.0, 3.0];
        let v = energy_stat(&Sample::from_scalars(&pts), &Sample::from_scalars(&pts)).unwrap().value;
        let s_off = 2.0 * (1.0 + 3.0 + 2.0);
        assert_relative_eq!(v, 2.0 * s_off / 9.0 - 2.0 * s_off / 6.0, epsilon = 1e-14);
        assert!(energy_stat(&Sample::from_scalars(&[0.0]), &Sample::from_scalars(&[1.0, 2.0])).is_err());
    }

    fn finite_rank_kernel() -> FiniteRankKernel {
        FiniteRankKernel::new(vec![
            (0.4, TrigBasis::Cos(1)),
            (0.4, TrigBasis::Sin(1)),
            (0.15, TrigBasis::Cos(2)),
            (0.07, TrigBasis::Sin(3)),
            (0.02, TrigBasis::Cos(5)),
        ])
        .unwrap()
    }

    #[test]
    fn constant_kernel_statistic_is_zero() {
        let c = 0.3;
        let grams = GramBundle {
            k_n: DMatrix::from_element(4, 4, c),
            k_m: DMatrix::from_element(5, 5, c),
            k_mn: DMatrix::from_element(5, 4, c),
            k_ns: DMatrix::from_element(4, 6, c),
            k_ms: DMatrix::from_element(5, 6, c),
            k_s: DMatrix::from_element(6, 6, c),
        };
        let eigen = centered_eigensystem(&grams.k_s, c).unwrap();
        for reg in Regularizer::ALL {
            let v = eta_ts(&grams, &eigen, reg, 0.1).unwrap();
            assert!(v.value.abs() < 1e-12, "{}", v.value);
            assert_relative_eq!(v.components.unwrap().recombine(4, 5), v.value, epsilon = 1e-10);
        }
    }

    #[test]
    fn statistic_matches_feature_space_small_case() {
        let fr = finite_rank_kernel();
        let kernel = Kernel::FiniteRank(fr.clone());
        let mut rng = crate::rng::substream(99, &[]);
        let mut draw = |k: usize| Sample::from_scalars(&(0..k).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let (x, x0, y0) = (draw(6), draw(7), draw(9));
        let grams = GramBundle::new(&kernel, &x, &x0, &y0).unwrap();
        let eigen = centered_eigensystem(&grams.k_s, kernel.bound()).unwrap();
        let got = eta_ts(&grams, &eigen, Regularizer::Tikhonov, 0.05).unwrap().value;

        // feature space: Σ̂₀ = unbiased covariance of features, g applied as a matrix function
        let feats = |s: &Sample| -> Vec<nalgebra::DVector<f64>> {
            s.iter().map(|p| nalgebra::DVector::from_vec(fr.features(p[0]))).collect()
        };
        let (fx, fx0, fy) = (feats(&x), feats(&x0), feats(&y0));
        let dim = fr.rank();
        let mean = fy.iter().fold(nalgebra::DVector::zeros(dim), |a, b| a + b) / fy.len() as f64;
        let mut cov = DMatrix::zeros(dim, dim);
        for f in &fy {
            let c = f - &mean;
            cov += &c * c.transpose();
        }
        cov /= (fy.len() - 1) as f64;
        let eig = cov.symmetric_eigen();
        let gdiag = eig.eigenvalues.map(|v| 1.0 / (v.max(0.0) + 0.05));
        let gmat = &eig.eigenvectors * DMatrix::from_diagonal(&gdiag) * eig.eigenvectors.transpose();
        let ip = |a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>| (a.transpose() * &gmat * b)[(0, 0)];
        let mut xx = 0.0;
        for i in 0..fx.len() {
            for j in 0..fx.len() {
                if i != j {
                    xx += ip(&fx[i], &fx[j]);
                }
            }
        }
        let mut oo = 0.0;
        for i in 0..fx0.len() {
            for j in 0..fx0.len() {
                if i != j {
                    oo += ip(&fx0[i], &fx0[j]);
                }
            }
        }
        let mut xo = 0.0;
        for a in &fx {
            for b in &fx0 {
                xo += ip(a, b);
            }
        }
        let (n, m) = (fx.len() as f64, fx0.len() as f64);
        let expected = xx / (n * (n - 1.0)) + oo / (m * (m - 1.0)) - 2.0 * xo / (n * m);
        assert!((got - expected).abs() <= 1e-8 * (1.0 + expected.abs()), "{got} vs {expected}");
    }
}
