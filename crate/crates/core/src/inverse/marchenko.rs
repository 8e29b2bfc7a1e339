use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::MarchenkoKernel;
use crate::error::{Result, TodaError};
use crate::linalg::{inverse_norm1_estimate, norm1};

/// Condition estimates above this reject the kernel.
pub const CONDITION_LIMIT: f64 = 1e12;

/// One row `A_{n,m}`, `m = −1..−K`, with its normalizer `α_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoRow {
    pub n: i64,
    /// `coefficients[j] = A_{n, −(j+1)}`.
    pub coefficients: Vec<f64>,
    pub alpha: f64,
    /// Largest re-substitution residual of the linear system.
    pub residual: f64,
    /// 1-norm condition estimate of `I + G`.
    pub condition: f64,
}

impl MarchenkoRow {
    /// `A_{n,m}` for `m < 0`; zero beyond the truncation.
    pub fn a(&self, m: i64) -> f64 {
        debug_assert!(m < 0);
        self.coefficients.get((-m - 1) as usize).copied().unwrap_or(0.0)
    }
}

/// Solves `F_{2n+m} + A_{nm} + Σ_{k=−1}^{−K} A_{nk} F_{2n+m+k} = 0` for
/// `m = −1..−K`, then `α_n⁻² = 1 + F_{2n} + Σ_k A_{nk} F_{2n+k}`.
pub fn solve_marchenko_row(kernel: &MarchenkoKernel, n: i64, k_trunc: usize) -> Result<MarchenkoRow> {
    if n > 0 {
        return Err(TodaError::Usage(format!("Marchenko rows exist for n <= 0, got {n}")));
    }
    if k_trunc == 0 {
        return Err(TodaError::Usage("K_trunc must be positive".into()));
    }
    let k = k_trunc as i64;
    if kernel.s_min() > 2 * n - 2 * k {
        return Err(TodaError::Usage(format!(
            "kernel reaches s = {} but row n = {n} with K = {k} needs s = {}",
            kernel.s_min(),
            2 * n - 2 * k
        )));
    }
    let size = k_trunc;
    let f = |s: i64| kernel.get(s);
    // index j ↔ m = −(j+1)
    let matrix = DMatrix::from_fn(size, size, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta + f(2 * n - (i as i64 + 1) - (j as i64 + 1))
    });
    let rhs = DVector::from_fn(size, |i, _| -f(2 * n - (i as i64 + 1)));
    let norm = norm1(&matrix);
    let lu = matrix.clone().lu();
    let x = lu.solve(&rhs).ok_or_else(|| {
        TodaError::KernelQuality(format!("Marchenko system for n = {n} is singular"))
    })?;
    let inv_norm = inverse_norm1_estimate(size, |b| lu.solve(b).unwrap_or_else(|| DVector::from_element(size, f64::INFINITY)));
    let condition = norm * inv_norm;
    if !(condition < CONDITION_LIMIT) {
        return Err(TodaError::KernelQuality(format!(
            "Marchenko system for n = {n} has condition estimate {condition:e}"
        )));
    }
    let residual = (&matrix * &x - &rhs).amax();
    let inv_alpha_sq = 1.0 + f(2 * n) + (0..size).map(|j| x[j] * f(2 * n - (j as i64 + 1))).sum::<f64>();
    if !(inv_alpha_sq > 0.0) {
        return Err(TodaError::Reconstruction {
            index: n,
            reason: format!("α⁻² = {inv_alpha_sq:e} is not positive; increase K_trunc or refine the grid"),
        });
    }
    Ok(MarchenkoRow {
        n,
        coefficients: x.iter().copied().collect(),
        alpha: inv_alpha_sq.sqrt().recip(),
        residual,
        condition,
    })
}

/// Rows `n_min..=0` of the transformation operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoSolution {
    n_min: i64,
    k_trunc: usize,
    rows: Vec<MarchenkoRow>,
}

impl MarchenkoSolution {
    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn k_trunc(&self) -> usize {
        self.k_trunc
    }

    pub fn rows(&self) -> &[MarchenkoRow] {
        &self.rows
    }

    pub fn row(&self, n: i64) -> &MarchenkoRow {
        &self.rows[(n - self.n_min) as usize]
    }

    pub fn alpha(&self, n: i64) -> f64 {
        self.row(n).alpha
    }

    /// `a_{−1} = α_{−1}/α_0`, the coupling into the right half.
    pub fn a_minus_one(&self) -> f64 {
        self.alpha(-1) / self.alpha(0)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn max_condition(&self) -> f64 {
        self.rows.iter().map(|r| r.condition).fold(0.0, f64::max)
    }
}

/// Solves every row independently (in parallel).
pub fn solve_marchenko(kernel: &MarchenkoKernel, n_min: i64, k_trunc: usize) -> Result<MarchenkoSolution> {
    if n_min >= 0 {
        return Err(TodaError::Usage(format!("n_min must be negative, got {n_min}")));
    }
    let rows = (n_min..=0)
        .into_par_iter()
        .map(|n| solve_marchenko_row(kernel, n, k_trunc))
        .collect::<Result<Vec<_>>>()?;
    Ok(MarchenkoSolution { n_min, k_trunc, rows })
}

/// `a_n = α_n/α_{n+1}`, `b_n = A_{n,−1} − A_{n+1,−1}` for `n_min ≤ n < 0`.
pub fn left_coefficients(sol: &MarchenkoSolution) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::with_capacity(sol.rows.len() - 1);
    let mut b = Vec::with_capacity(sol.rows.len() - 1);
    for n in sol.n_min..0 {
        let an = sol.alpha(n) / sol.alpha(n + 1);
        if !(an > 0.0 && an.is_finite()) {
            return Err(TodaError::Reconstruction {
                index: n,
                reason: format!("a_n = {an:e}"),
            });
        }
        a.push(an);
        b.push(sol.row(n).a(-1) - sol.row(n + 1).a(-1));
    }
    Ok((a, b))
}

/// `f_n(z) = α_n z^{−n}(1 + Σ_{m=−1}^{−K} A_{nm} z^{−m})`.
pub fn reconstruct_jost(sol: &MarchenkoSolution, n: i64, z: Complex64) -> Complex64 {
    let row = sol.row(n);
    // Horner in z for Σ_j A_{n,−j} z^j
    let mut acc = Complex64::new(0.0, 0.0);
    for c in row.coefficients.iter().rev() {
        acc = (acc + c) * z;
    }
    row.alpha * z.powi(-n as i32) * (1.0 + acc)
}
