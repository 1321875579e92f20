//! Special functions that the distribution normalizers and closed-form
//! mean embeddings need. Computed by log-domain power series.

use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn log_sum_exp_series(mut term: impl FnMut(usize) -> f64) -> f64 {
    // Terms are log-concave in the index for every series used here, so once
    // we are past the peak and 40 nats below it the remainder is negligible.
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for j in 0..1_000_000 {
        let t = term(j);
        if t > max {
            acc = acc * (max - t).exp() + 1.0;
            max = t;
        } else {
            acc += (t - max).exp();
        }
        if t < prev && t < max - 40.0 {
            break;
        }
        prev = t;
    }
    max + acc.ln()
}

/// ln I_ν(x) for the modified Bessel function of the first kind, ν ≥ 0, x ≥ 0.
pub fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "ln_bessel_i requires nu, x >= 0");
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lh = (0.5 * x).ln();
    log_sum_exp_series(|j| {
        let jf = j as f64;
        (2.0 * jf + nu) * lh - ln_gamma(jf + 1.0) - ln_gamma(jf + nu + 1.0)
    })
}

pub fn bessel_i(nu: f64, x: f64) -> f64 {
    ln_bessel_i(nu, x).exp()
}

/// ln M(a, b, z) for Kummer's confluent hypergeometric function, a, b > 0, z ≥ 0.
pub fn ln_kummer_m(a: f64, b: f64, z: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && z >= 0.0, "ln_kummer_m domain");
    if z == 0.0 {
        return 0.0;
    }
    let lz = z.ln();
    let (la, lb) = (ln_gamma(a), ln_gamma(b));
    log_sum_exp_series(|j| {
        let jf = j as f64;
        ln_gamma(a + jf) - la - (ln_gamma(b + jf) - lb) + jf * lz - ln_gamma(jf + 1.0)
    })
}

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / ln_gamma(h).exp()
}
