//! Kernel functions, Gram matrices and bandwidth heuristics.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::sample::Sample;

/// One element of the real trigonometric basis on [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrigBasis {
    /// √2 cos(2πjx)
    Cos(u32),
    /// √2 sin(2πjx)
    Sin(u32),
}

impl TrigBasis {
    pub fn eval(self, x: f64) -> f64 {
        use std::f64::consts::{PI, SQRT_2};
        match self {
            TrigBasis::Cos(j) => SQRT_2 * (2.0 * PI * j as f64 * x).cos(),
            TrigBasis::Sin(j) => SQRT_2 * (2.0 * PI * j as f64 * x).sin(),
        }
    }
}

/// A kernel with an explicit finite Mercer expansion
/// K(x, y) = Σ_k λ_k φ_k(x) φ_k(y) over scalar inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankKernel {
    terms: Vec<(f64, TrigBasis)>,
}

impl FiniteRankKernel {
    pub fn new(terms: Vec<(f64, TrigBasis)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(GofError::Empty("finite-rank eigenpairs"));
        }
        if let Some((l, _)) = terms.iter().find(|(l, _)| !(*l > 0.0 && l.is_finite())) {
            return Err(invalid(format!("finite-rank eigenvalue {l} must be positive")));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, TrigBasis)] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// Feature vector (√λ_k φ_k(x))_k; K(x, y) is the dot product of two of these.
    pub fn features(&self, x: f64) -> Vec<f64> {
        self.terms.iter().map(|&(l, phi)| l.sqrt() * phi.eval(x)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// exp(-‖x - y‖² / (2h))
    Gaussian { bandwidth: f64 },
    /// Periodic spline of order 1 on [0, 1]: B₂([x - y]) / 2.
    PeriodicSpline,
    FiniteRank(FiniteRankKernel),
}

impl Kernel {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid(format!("gaussian bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Kernel::Gaussian { bandwidth })
    }

    /// sup_x K(x, x).
    pub fn bound(&self) -> f64 {
        match self {
            Kernel::Gaussian { .. } => 1.0,
            Kernel::PeriodicSpline => 1.0 / 12.0,
            // each basis function squared is at most 2
            Kernel::FiniteRank(f) => 2.0 * f.terms.iter().map(|(l, _)| l).sum::<f64>(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Kernel::Gaussian { bandwidth } => format!("gaussian(h={bandwidth:.6e})"),
            Kernel::PeriodicSpline => "periodic_spline(r=1)".to_string(),
            Kernel::FiniteRank(f) => format!("finite_rank({})", f.rank()),
        }
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            Kernel::Gaussian { bandwidth } => Some(*bandwidth),
            _ => None,
        }
    }

    /// Kernel value without domain checks. Callers validate inputs once per
    /// sample via [`Kernel::check_sample`].
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian { bandwidth } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * bandwidth)).exp()
            }
            Kernel::PeriodicSpline => {
                // |x - y| keeps K(x, y) and K(y, x) bit-identical
                let t = (x[0] - y[0]).abs();
                let f = t - t.floor();
                0.5 * (f * f - f + 1.0 / 6.0)
            }
            Kernel::FiniteRank(fr) => fr
                .terms
                .iter()
                .map(|&(l, phi)| l * (phi.eval(x[0]) * phi.eval(y[0])))
                .sum(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        match self {
            Kernel::Gaussian { .. } => Ok(()),
            Kernel::PeriodicSpline => {
                if x.len() != 1 {
                    return Err(GofError::DimensionMismatch { expected: 1, got: x.len() });
                }
                if !(0.0..=1.0).contains(&x[0]) {
                    return Err(GofError::OutOfDomain(x[0]));
                }
                Ok(())
            }
            Kernel::FiniteRank(_) => {
                if x.len() != 1 {
                    return Err(GofError::DimensionMismatch { expected: 1, got: x.len() });
                }
                Ok(())
            }
        }
    }

    pub fn check_sample(&self, a: &Sample) -> Result<()> {
        a.iter().try_for_each(|p| self.check_point(p))
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(GofError::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }
}

const PAR_ROWS: usize = 64;

/// Gram matrix [K(a_i, b_j)].
pub fn gram(kernel: &Kernel, a: &Sample, b: &Sample) -> Result<DMatrix<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(GofError::Empty("gram input"));
    }
    if a.dim() != b.dim() {
        return Err(GofError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    kernel.check_sample(a)?;
    kernel.check_sample(b)?;
    let (rows, cols) = (a.len(), b.len());
    let mut data = vec![0.0; rows * cols];
    let fill = |(i, row): (usize, &mut [f64])| {
        let x = a.point(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = kernel.eval_unchecked(x, b.point(j));
        }
    };
    if rows >= PAR_ROWS {
        data.par_chunks_mut(cols).enumerate().for_each(fill);
    } else {
        data.chunks_mut(cols).enumerate().for_each(fill);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Gram matrix of a sample with itself; exactly symmetric.
pub fn gram_self(kernel: &Kernel, a: &Sample) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(GofError::Empty("gram input"));
    }
    kernel.check_sample(a)?;
    let n = a.len();
    let mut data = vec![0.0; n * n];
    let fill = |(i, row): (usize, &mut [f64])| {
        let x = a.point(i);
        for (j, v) in row.iter_mut().enumerate().skip(i) {
            *v = kernel.eval_unchecked(x, a.point(j));
        }
    };
    if n >= PAR_ROWS {
        data.par_chunks_mut(n).enumerate().for_each(fill);
    } else {
        data.chunks_mut(n).enumerate().for_each(fill);
    }
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(DMatrix::from_row_slice(n, n, &data))
}

/// Median of squared Euclidean distances over all distinct pairs of X ∪ X⁰.
pub fn median_heuristic(x: &Sample, x0: &Sample) -> Result<f64> {
    let pooled = if x.is_empty() {
        x0.clone()
    } else if x0.is_empty() {
        x.clone()
    } else {
        x.concat(x0)?
    };
    let n = pooled.len();
    if n < 2 {
        return Err(GofError::TooFewSamples { what: "median heuristic", min: 2, got: n });
    }
    let mut d2 = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let p = pooled.point(i);
        for j in i + 1..n {
            let q = pooled.point(j);
            d2.push(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    let med = median_in_place(&mut d2);
    if med > 0.0 {
        Ok(med)
    } else if d2.iter().all(|&v| v == 0.0) {
        Err(GofError::DegenerateBandwidth)
    } else {
        // more than half the pairs coincide; fall back to the smallest positive distance
        Ok(d2.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min))
    }
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let len = v.len();
    let mid = len / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if len % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Doubling grid {lo, 2 lo, 4 lo, ...} up to the last element ≤ hi.
pub fn doubling_grid(lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(invalid(format!("doubling grid needs 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let mut out = vec![lo];
    let mut v = lo;
    // relative slack so that e.g. lo * 2^k == hi survives rounding
    while 2.0 * v <= hi * (1.0 + 1e-12) {
        v *= 2.0;
        out.push(v);
    }
    Ok(out)
}

/// Bandwidths {w_L h, 2 w_L h, ...} stopping at the last element ≤ w_U h.
pub fn bandwidth_grid(h_median: f64, w_lo: f64, w_hi: f64) -> Result<Vec<f64>> {
    if !(h_median > 0.0 && h_median.is_finite()) {
        return Err(invalid(format!("median bandwidth must be positive, got {h_median}")));
    }
    if !(w_lo > 0.0 && w_lo <= w_hi) {
        return Err(invalid(format!("bandwidth multipliers need 0 < w_L <= w_U, got {w_lo}, {w_hi}")));
    }
    Ok(doubling_grid(w_lo, w_hi)?.into_iter().map(|w| w * h_median).collect())
}
