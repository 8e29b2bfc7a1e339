//! Closed-form time evolution of scattering data.
//!
//! `R(λ, t) = R(λ, 0) e^{(z⁻¹ − z)t}` on the cut and
//! `γ_k(t) = γ_k(0) e^{(z_k⁻¹ − z_k)t}` for the bound-state weights, with
//! `μ_k` fixed. Arguments are elapsed times; the timestamp advances by the
//! same amount. Negative values evolve backward.

use num_complex::Complex64;

use crate::forward::ScatteringData;

pub fn evolve_reflection(data: &ScatteringData, elapsed: f64) -> ScatteringData {
    let mut out = data.clone();
    for (j, r) in out.reflection.iter_mut().enumerate() {
        // on the cut z⁻¹ − z = −2i sin θ
        let phase = -2.0 * data.grid.theta(j).sin() * elapsed;
        *r *= Complex64::from_polar(1.0, phase);
    }
    out.t = data.t + elapsed;
    out
}

pub fn evolve_bound_states(data: &ScatteringData, elapsed: f64) -> ScatteringData {
    let mut out = data.clone();
    for bs in &mut out.bound_states {
        bs.weight *= ((1.0 / bs.z - bs.z) * elapsed).exp();
    }
    out.t = data.t + elapsed;
    out
}

pub fn evolve(data: &ScatteringData, elapsed: f64) -> ScatteringData {
    let mut out = evolve_reflection(data, elapsed);
    out.bound_states = evolve_bound_states(data, elapsed).bound_states;
    out
}
