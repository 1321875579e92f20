//! Permutation fast path. The pooled sample U = (X, X⁰) is fixed under
//! permutation, so every Gram quantity is computed once and each permuted
//! statistic only needs index sums over the relabelled split.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{GofError, Result};
use crate::kernels::{gram, gram_self, Kernel};
use crate::regularizers::Regularizer;
use crate::rng::{substream, tag};
use crate::sample::Sample;
use crate::spectral::{centered_eigensystem, half_centering_scale, EigenSystem};
use crate::statistics::EtaComponents;

/// Split of the pooled indices 0..n+m into an X part of size n and the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    mask: Vec<bool>,
    n: usize,
}

impl Split {
    /// The observed split: the first n pooled points are X.
    pub fn identity(n: usize, m: usize) -> Self {
        let mut mask = vec![false; n + m];
        mask[..n].iter_mut().for_each(|b| *b = true);
        Split { mask, n }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let n = mask.iter().filter(|b| **b).count();
        Split { mask, n }
    }

    /// Uniform random split via a partial Fisher-Yates shuffle.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let total = n + m;
        let mut idx: Vec<usize> = (0..total).collect();
        let mut mask = vec![false; total];
        for i in 0..n {
            let j = rng.random_range(i..total);
            idx.swap(i, j);
            mask[idx[i]] = true;
        }
        Split { mask, n }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.mask.len() - self.n
    }

    /// Indices of the smaller side in increasing order, and whether that side is X.
    fn small_side(&self) -> (Vec<usize>, bool) {
        let want_x = self.n <= self.m();
        let idx = self.mask.iter().enumerate().filter(|(_, b)| **b == want_x).map(|(i, _)| i).collect();
        (idx, want_x)
    }
}

/// The B permuted splits of a permutation test, each drawn from its own
/// substream keyed by (seed, permutation index).
#[derive(Clone, Debug)]
pub struct PermutationPlan {
    pub permutations: usize,
    pub seed: u64,
}

impl PermutationPlan {
    pub fn new(permutations: usize, seed: u64) -> Result<Self> {
        if permutations == 0 {
            return Err(crate::error::invalid("number of permutations must be at least 1"));
        }
        Ok(Self { permutations, seed })
    }

    pub fn split(&self, b: usize, n: usize, m: usize) -> Split {
        Split::random(n, m, &mut substream(self.seed, &[tag::PERMUTATION, b as u64]))
    }

    /// Slot 0 is the observed split, slots 1..=B the permuted ones.
    pub fn splits(&self, n: usize, m: usize) -> Vec<Split> {
        let mut out = Vec::with_capacity(self.permutations + 1);
        out.push(Split::identity(n, m));
        out.extend((1..=self.permutations).into_par_iter().map(|b| self.split(b, n, m)).collect::<Vec<_>>());
        out
    }
}

/// Block sums of a symmetric pooled matrix over a split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSums {
    pub xx: f64,
    pub x_trace: f64,
    pub nn: f64,
    pub n_trace: f64,
    pub cross: f64,
}

/// Symmetric N×N matrix with cached row sums and diagonal.
#[derive(Clone, Debug)]
pub struct PooledMatrix {
    mat: DMatrix<f64>,
    row_sums: Vec<f64>,
    total: f64,
    diag_total: f64,
}

impl PooledMatrix {
    pub fn new(mat: DMatrix<f64>) -> Self {
        let row_sums: Vec<f64> = mat.column_iter().map(|c| c.sum()).collect();
        let total = row_sums.iter().sum();
        let diag_total = mat.diagonal().sum();
        Self { mat, row_sums, total, diag_total }
    }

    pub fn len(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.mat.nrows() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn pair_sums(&self, split: &Split) -> PairSums {
        let (idx, small_is_x) = split.small_side();
        let mut inner = 0.0;
        let mut trace = 0.0;
        let mut rows = 0.0;
        for &i in &idx {
            let col = self.mat.column(i);
            let mut acc = 0.0;
            for &j in &idx {
                acc += col[j];
            }
            inner += acc;
            trace += col[i];
            rows += self.row_sums[i];
        }
        let cross = rows - inner;
        let outer = self.total - 2.0 * cross - inner;
        let outer_trace = self.diag_total - trace;
        if small_is_x {
            PairSums { xx: inner, x_trace: trace, nn: outer, n_trace: outer_trace, cross }
        } else {
            PairSums { xx: outer, x_trace: outer_trace, nn: inner, n_trace: trace, cross }
        }
    }
}

/// Per-split sums of the projected covariance features.
#[derive(Clone, Debug)]
pub struct SplitStats {
    pub sums: PairSums,
    pub x_proj: DVector<f64>,
    pub null_proj: DVector<f64>,
    pub x_proj_sq: DVector<f64>,
    pub null_proj_sq: DVector<f64>,
}

/// Everything one kernel contributes to the permuted regularized statistic.
#[derive(Clone, Debug)]
pub struct PooledKernelData {
    kernel: Kernel,
    n: usize,
    m: usize,
    gram: PooledMatrix,
    /// Q = K_{U,Y⁰} H̃^{1/2} V, one row per pooled point.
    proj: DMatrix<f64>,
    proj_sq: DMatrix<f64>,
    proj_total: DVector<f64>,
    proj_sq_total: DVector<f64>,
    eigen: EigenSystem,
}

impl PooledKernelData {
    pub fn new(kernel: &Kernel, x: &Sample, x0: &Sample, y0: &Sample) -> Result<Self> {
        if x.len() < 2 || x0.len() < 2 {
            return Err(GofError::TooFewSamples { what: "sample X / null sample X0", min: 2, got: x.len().min(x0.len()) });
        }
        if y0.len() < 2 {
            return Err(GofError::TooFewSamples { what: "covariance sample Y0", min: 2, got: y0.len() });
        }
        let pooled = x.concat(x0)?;
        let k_s = gram_self(kernel, y0)?;
        let eigen = centered_eigensystem(&k_s, kernel.bound())?;
        let mut k_uy = gram(kernel, &pooled, y0)?;
        let s = y0.len();
        let hs = half_centering_scale(s);
        for mut row in k_uy.row_iter_mut() {
            let mean = row.sum() / s as f64;
            row.apply(|v| *v = (*v - mean) * hs);
        }
        let proj = k_uy * eigen.eigenvectors();
        let proj_sq = proj.map(|v| v * v);
        let proj_total = proj.row_sum().transpose();
        let proj_sq_total = proj_sq.row_sum().transpose();
        Ok(Self {
            kernel: kernel.clone(),
            n: x.len(),
            m: x0.len(),
            gram: PooledMatrix::new(gram_self(kernel, &pooled)?),
            proj,
            proj_sq,
            proj_total,
            proj_sq_total,
            eigen,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eigen
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn split_stats(&self, split: &Split) -> SplitStats {
        let sums = self.gram.pair_sums(split);
        let (idx, small_is_x) = split.small_side();
        let s = self.proj.ncols();
        let mut a = DVector::zeros(s);
        let mut a_sq = DVector::zeros(s);
        for &i in &idx {
            a += self.proj.row(i).transpose();
            a_sq += self.proj_sq.row(i).transpose();
        }
        let b = &self.proj_total - &a;
        let b_sq = &self.proj_sq_total - &a_sq;
        let (x_proj, null_proj, x_proj_sq, null_proj_sq) =
            if small_is_x { (a, b, a_sq, b_sq) } else { (b, a, b_sq, a_sq) };
        SplitStats { sums, x_proj, null_proj, x_proj_sq, null_proj_sq }
    }

    /// Statistic on a split given the per-mode coefficients and g_λ(0).
    pub fn eta_from_stats(&self, stats: &SplitStats, coef: &[f64], g_zero: f64) -> f64 {
        self.components_from_stats(stats, coef, g_zero).recombine(self.n, self.m)
    }

    pub fn components_from_stats(&self, stats: &SplitStats, coef: &[f64], g_zero: f64) -> EtaComponents {
        let inv_s = 1.0 / coef.len() as f64;
        let mut quad_x = 0.0;
        let mut quad_n = 0.0;
        let mut quad_c = 0.0;
        let mut tr_x = 0.0;
        let mut tr_n = 0.0;
        for (k, &c) in coef.iter().enumerate() {
            let (u, v) = (stats.x_proj[k], stats.null_proj[k]);
            quad_x += c * u * u;
            quad_n += c * v * v;
            quad_c += c * u * v;
            tr_x += c * stats.x_proj_sq[k];
            tr_n += c * stats.null_proj_sq[k];
        }
        let p = &stats.sums;
        EtaComponents {
            sample_sum: g_zero * p.xx + inv_s * quad_x,
            sample_trace: g_zero * p.x_trace + inv_s * tr_x,
            null_sum: g_zero * p.nn + inv_s * quad_n,
            null_trace: g_zero * p.n_trace + inv_s * tr_n,
            cross_sum: g_zero * p.cross + inv_s * quad_c,
        }
    }

    pub fn eta(&self, split: &Split, reg: Regularizer, lambda: f64) -> Result<f64> {
        let coef = self.eigen.ratio_coefficients(reg, lambda)?;
        let g0 = reg.value_at_zero(lambda)?;
        Ok(self.eta_from_stats(&self.split_stats(split), &coef, g0))
    }
}

/// Energy statistic on a split of a pooled Euclidean distance matrix.
pub fn energy_from_sums(sums: &PairSums, n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    2.0 * sums.cross / (nf * mf) - sums.xx / (nf * (nf - 1.0)) - sums.nn / (mf * (mf - 1.0))
}

pub fn distance_matrix(pooled: &Sample) -> DMatrix<f64> {
    let n = pooled.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = pooled
                .point(i)
                .iter()
                .zip(pooled.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::{energy_stat, eta_ts, GramBundle};
    use rand::Rng;

    fn draw(rng: &mut impl Rng, k: usize, d: usize) -> Sample {
        Sample::new(d, (0..k * d).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn random_split_has_right_sizes() {
        let mut rng = substream(1, &[]);
        for _ in 0..50 {
            let s = Split::random(3, 7, &mut rng);
            assert_eq!(s.mask().iter().filter(|b| **b).count(), 3);
            assert_eq!((s.n(), s.m()), (3, 7));
        }
    }

    #[test]
    fn random_split_is_uniform() {
        // 4 choose 2 = 6 splits, each with probability 1/6
        let mut rng = substream(2, &[]);
        let mut counts = std::collections::HashMap::new();
        let reps = 60_000;
        for _ in 0..reps {
            *counts.entry(Split::random(2, 2, &mut rng).mask().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / reps as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn fast_path_matches_matrix_path() {
        let mut rng = substream(3, &[]);
        let kernel = Kernel::gaussian(0.3).unwrap();
        for (n, m, s) in [(5, 9, 7), (12, 4, 10), (6, 6, 3)] {
            let (x, x0, y0) = (draw(&mut rng, n, 2), draw(&mut rng, m, 2), draw(&mut rng, s, 2));
            let pooled = PooledKernelData::new(&kernel, &x, &x0, &y0).unwrap();
            let pool = x.concat(&x0).unwrap();
            for _ in 0..5 {
                let split = Split::random(n, m, &mut rng);
                let xi: Vec<usize> = (0..n + m).filter(|&i| split.mask()[i]).collect();
                let oi: Vec<usize> = (0..n + m).filter(|&i| !split.mask()[i]).collect();
                let grams = GramBundle::new(&kernel, &pool.select(&xi), &pool.select(&oi), &y0).unwrap();
                for reg in Regularizer::ALL {
                    for lambda in [1e-3, 0.2] {
                        let want = eta_ts(&grams, pooled.eigen(), reg, lambda).unwrap().value;
                        let got = pooled.eta(&split, reg, lambda).unwrap();
                        assert!((want - got).abs() <= 1e-9 * (1.0 + want.abs()), "{want} {got}");
                    }
                }
            }
        }
    }

    #[test]
    fn split_value_depends_only_on_the_set() {
        let mut rng = substream(4, &[]);
        let kernel = Kernel::gaussian(0.5).unwrap();
        let (x, x0, y0) = (draw(&mut rng, 4, 1), draw(&mut rng, 4, 1), draw(&mut rng, 5, 1));
        let pooled = PooledKernelData::new(&kernel, &x, &x0, &y0).unwrap();
        let a = Split::from_mask(vec![true, false, true, false, false, true, false, true]);
        let b = Split::from_mask(a.mask().to_vec());
        assert_eq!(
            pooled.eta(&a, Regularizer::Tikhonov, 0.1).unwrap().to_bits(),
            pooled.eta(&b, Regularizer::Tikhonov, 0.1).unwrap().to_bits()
        );
    }

    #[test]
    fn energy_pooled_matches_direct() {
        let mut rng = substream(5, &[]);
        let (x, x0) = (draw(&mut rng, 6, 3), draw(&mut rng, 9, 3));
        let pooled = PooledMatrix::new(distance_matrix(&x.concat(&x0).unwrap()));
        let v = energy_from_sums(&pooled.pair_sums(&Split::identity(6, 9)), 6, 9);
        let want = energy_stat(&x, &x0).unwrap().value;
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn plan_is_deterministic_and_rejects_zero() {
        let plan = PermutationPlan::new(20, 7).unwrap();
        assert_eq!(plan.splits(3, 4), plan.splits(3, 4));
        assert_eq!(plan.splits(3, 4)[0], Split::identity(3, 4));
        assert!(PermutationPlan::new(0, 1).is_err());
    }
}
