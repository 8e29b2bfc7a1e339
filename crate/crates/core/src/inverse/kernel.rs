use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, TodaError};
use crate::forward::ScatteringData;

/// Largest tolerated imaginary part of a quadrature kernel value.
const REALNESS_TOL: f64 = 1e-10;

/// Quadrature weights for the angle grid: each node owns the interval
/// between the midpoints to its neighbours, the outer ones reaching `0` and
/// `π`. On the midpoint grid every weight is `π/M`.
fn cell_widths(thetas: &[f64]) -> Vec<f64> {
    let m = thetas.len();
    (0..m)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { 0.5 * (thetas[j - 1] + thetas[j]) };
            let hi = if j + 1 == m { PI } else { 0.5 * (thetas[j] + thetas[j + 1]) };
            hi - lo
        })
        .collect()
}

/// Largest `|n|` the grid resolves: a quarter of the node count.
pub fn resolvable_index(data: &ScatteringData) -> i64 {
    (data.grid.len() / 4) as i64
}

fn continuous_part(data: &ScatteringData, widths: &[f64], n: i64) -> Result<f64> {
    // (1/2π)∮ R e^{−inθ} dθ over the full circle; the lower rim carries
    // the conjugate values
    let mut sum = Complex64::new(0.0, 0.0);
    for ((theta, r), w) in data.grid.thetas().iter().zip(&data.reflection).zip(widths) {
        let e = Complex64::from_polar(1.0, -(n as f64) * theta);
        sum += *w * (r * e + r.conj() * e.conj());
    }
    let value = sum / (2.0 * PI);
    if value.im.abs() > REALNESS_TOL {
        return Err(TodaError::KernelQuality(format!(
            "kernel value F_{n} has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

fn discrete_part(data: &ScatteringData, n: i64) -> f64 {
    data.bound_states
        .iter()
        .map(|bs| bs.weight * bs.z.powi(-n as i32))
        .sum()
}

/// `F_n = Σ_k γ_k z_k^{−n} + (1/2π)∫_{−π}^{π} R(e^{iθ}) e^{−inθ} dθ`.
pub fn kernel_f(data: &ScatteringData, n: i64) -> Result<f64> {
    if n.abs() > resolvable_index(data) {
        return Err(TodaError::Resolution {
            index: n,
            grid_size: data.grid.len(),
        });
    }
    let widths = cell_widths(data.grid.thetas());
    Ok(discrete_part(data, n) + continuous_part(data, &widths, n)?)
}

/// Kernel values `F_s` for `s_min ≤ s ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoKernel {
    s_min: i64,
    values: Vec<f64>,
}

impl MarchenkoKernel {
    pub fn from_values(s_min: i64, values: Vec<f64>) -> Result<Self> {
        if values.len() as i64 != 1 - s_min {
            return Err(TodaError::Usage(format!(
                "kernel table for s = {s_min}..=0 needs {} values, got {}",
                1 - s_min,
                values.len()
            )));
        }
        Ok(Self { s_min, values })
    }

    pub fn s_min(&self) -> i64 {
        self.s_min
    }

    pub fn get(&self, s: i64) -> f64 {
        self.values[(s - self.s_min) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Tabulates the kernel down to `s_min`.
///
/// Below `−M/4` the grid cannot resolve the oscillation `e^{−isθ}`; there the
/// continuous part is taken as zero and only the exact bound-state terms are
/// kept. The size of the continuous part at the cut-off is logged.
pub fn build_kernel(data: &ScatteringData, s_min: i64) -> Result<MarchenkoKernel> {
    if s_min > 0 {
        return Err(TodaError::Usage(format!("kernel range must reach below 0, got {s_min}")));
    }
    let limit = resolvable_index(data);
    let widths = cell_widths(data.grid.thetas());
    let values = (s_min..=0)
        .into_par_iter()
        .map(|s| {
            let cont = if -s <= limit { continuous_part(data, &widths, s)? } else { 0.0 };
            Ok(discrete_part(data, s) + cont)
        })
        .collect::<Result<Vec<_>>>()?;
    if s_min < -limit {
        let tail = continuous_part(data, &widths, -limit)?;
        log::debug!("kernel: continuous part truncated below s = {}, |F_cont| there = {:e}", -limit, tail.abs());
    }
    MarchenkoKernel::from_values(s_min, values)
}
