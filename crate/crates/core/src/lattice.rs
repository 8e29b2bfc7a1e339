//! Lattice states on a finite window, the steplike profile family, and the
//! weighted norms used to measure them.
//!
//! A state stores `a_n`, `b_n` densely for `n_min <= n <= n_max`. Outside the
//! window the lattice is assumed to sit at its asymptotic values: `a = 1`,
//! `b = 0` on the left and `a = 0`, `b = 0` on the right.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};

/// Default boundary-closeness tolerance.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-10;

/// Integer window `[n_min, n_max]` with `n_min < 0 < n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub n_min: i64,
    pub n_max: i64,
}

impl Window {
    pub fn new(n_min: i64, n_max: i64) -> Result<Self> {
        if !(n_min < 0 && 0 < n_max) {
            return Err(TodaError::Config(format!(
                "window [{n_min}, {n_max}] must satisfy n_min < 0 < n_max"
            )));
        }
        Ok(Self { n_min, n_max })
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, n: i64) -> usize {
        debug_assert!(self.contains(n), "n = {n} outside {self:?}");
        (n - self.n_min) as usize
    }

    pub fn contains(&self, n: i64) -> bool {
        self.n_min <= n && n <= self.n_max
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.n_min..=self.n_max
    }

    pub fn extended(&self, left: i64, right: i64) -> Self {
        Self {
            n_min: self.n_min - left,
            n_max: self.n_max + right,
        }
    }
}

/// Toda lattice coefficients on a window at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub t: f64,
    window: Window,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LatticeState {
    /// Builds a state; only the shape is checked here, use [`validate`] for
    /// the steplike invariants.
    pub fn new(t: f64, window: Window, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != window.len() || b.len() != window.len() {
            return Err(TodaError::Usage(format!(
                "coefficient lengths ({}, {}) do not match window of {} sites",
                a.len(),
                b.len(),
                window.len()
            )));
        }
        Ok(Self { t, window, a, b })
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn n_min(&self) -> i64 {
        self.window.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.window.n_max
    }

    pub fn a(&self, n: i64) -> f64 {
        self.a[self.window.index(n)]
    }

    pub fn b(&self, n: i64) -> f64 {
        self.b[self.window.index(n)]
    }

    /// `a_n` with the asymptotic ghost values outside the window.
    pub fn a_ext(&self, n: i64) -> f64 {
        if n < self.window.n_min {
            1.0
        } else if n > self.window.n_max {
            0.0
        } else {
            self.a(n)
        }
    }

    /// `b_n` with the asymptotic ghost values outside the window.
    pub fn b_ext(&self, n: i64) -> f64 {
        if self.window.contains(n) {
            self.b(n)
        } else {
            0.0
        }
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    pub fn a_values_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    pub fn b_values_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    pub fn into_parts(self) -> (f64, Window, Vec<f64>, Vec<f64>) {
        (self.t, self.window, self.a, self.b)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Largest `|a_n - a'_n| + |b_n - b'_n|` over `range`, which must lie in
    /// both windows.
    pub fn sup_distance(&self, other: &LatticeState, range: std::ops::RangeInclusive<i64>) -> f64 {
        range
            .map(|n| (self.a(n) - other.a(n)).abs() + (self.b(n) - other.b(n)).abs())
            .fold(0.0, f64::max)
    }
}

/// Parameters of the exponential steplike family
///
/// `a_n = 1 + A_L e^{κ_L n}` for `n < 0`, `a_n = A_R e^{-κ_R n}` for `n ≥ 0`,
/// `b_n = B e^{-κ_B |n|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteplikeProfileSpec {
    pub left_amplitude: f64,
    pub left_decay: f64,
    pub right_amplitude: f64,
    pub right_decay: f64,
    pub bump_amplitude: f64,
    pub bump_decay: f64,
    pub n_min: i64,
    pub n_max: i64,
    pub boundary_tol: f64,
}

impl Default for SteplikeProfileSpec {
    /// One bump strong enough for a single bound state above the band, a
    /// right tail that vanishes quickly, window `[-60, 40]`.
    fn default() -> Self {
        Self {
            left_amplitude: 0.3,
            left_decay: 0.8,
            right_amplitude: 0.6,
            right_decay: 8.0,
            bump_amplitude: 1.6,
            bump_decay: 4.5,
            n_min: -60,
            n_max: 40,
            boundary_tol: DEFAULT_TRUNC_TOL,
        }
    }
}

fn decay(amplitude: f64, rate: f64, distance: f64) -> f64 {
    if amplitude == 0.0 || (rate.is_infinite() && distance > 0.0) {
        0.0
    } else if distance == 0.0 {
        amplitude
    } else {
        amplitude * (-rate * distance).exp()
    }
}

impl SteplikeProfileSpec {
    pub fn left_a(&self, n: i64) -> f64 {
        1.0 + decay(self.left_amplitude, self.left_decay, (-n) as f64)
    }

    pub fn right_a(&self, n: i64) -> f64 {
        decay(self.right_amplitude, self.right_decay, n as f64)
    }

    pub fn a(&self, n: i64) -> f64 {
        if n < 0 {
            self.left_a(n)
        } else {
            self.right_a(n)
        }
    }

    pub fn b(&self, n: i64) -> f64 {
        decay(self.bump_amplitude, self.bump_decay, n.unsigned_abs() as f64)
    }

    /// Closed form of `Σ_{n<0} |n| (|a_n - 1| + |b_n|)` on the infinite lattice.
    pub fn left_tail_bound(&self) -> f64 {
        fn weighted_geometric(amplitude: f64, rate: f64) -> f64 {
            if amplitude == 0.0 || rate.is_infinite() {
                return 0.0;
            }
            let q = (-rate).exp();
            amplitude.abs() * q / ((1.0 - q) * (1.0 - q))
        }
        weighted_geometric(self.left_amplitude, self.left_decay)
            + weighted_geometric(self.bump_amplitude, self.bump_decay)
    }

    fn check(&self) -> Result<Window> {
        let window = Window::new(self.n_min, self.n_max)?;
        for (name, rate) in [
            ("left_decay", self.left_decay),
            ("right_decay", self.right_decay),
            ("bump_decay", self.bump_decay),
        ] {
            if !(rate > 0.0) {
                return Err(TodaError::Config(format!("{name} must be positive, got {rate}")));
            }
        }
        if !(self.right_amplitude > 0.0) {
            return Err(TodaError::Config(format!(
                "right_amplitude must be positive, got {}",
                self.right_amplitude
            )));
        }
        if !(self.left_amplitude > -1.0) {
            return Err(TodaError::Config(format!(
                "left_amplitude must exceed -1 to keep a_n > 0, got {}",
                self.left_amplitude
            )));
        }
        if !(self.boundary_tol > 0.0) {
            return Err(TodaError::Config("boundary_tol must be positive".into()));
        }
        Ok(window)
    }
}

/// Samples the profile family on its window at `t = 0`.
pub fn make_step_profile(spec: &SteplikeProfileSpec) -> Result<LatticeState> {
    let window = spec.check()?;
    let a: Vec<f64> = window.sites().map(|n| spec.a(n)).collect();
    let b: Vec<f64> = window.sites().map(|n| spec.b(n)).collect();
    let state = LatticeState::new(0.0, window, a, b)?;

    let left = (state.a(window.n_min) - 1.0).abs() + state.b(window.n_min).abs();
    if left >= spec.boundary_tol {
        return Err(TodaError::Config(format!(
            "left boundary n_min = {} is too close to the perturbation: deviation {left:e} exceeds {:e}; \
             widen the window or increase left_decay/bump_decay",
            window.n_min, spec.boundary_tol
        )));
    }
    let right = state.a(window.n_max).abs() + state.b(window.n_max).abs();
    if right >= spec.boundary_tol {
        return Err(TodaError::Config(format!(
            "right boundary n_max = {} is too close to the perturbation: deviation {right:e} exceeds {:e}; \
             widen the window or increase right_decay/bump_decay",
            window.n_max, spec.boundary_tol
        )));
    }
    Ok(state)
}

/// `Q = Σ_{n_min ≤ n < 0} |n| (|a_n - 1| + |b_n|)`.
pub fn weighted_norm_q(state: &LatticeState) -> f64 {
    (state.n_min()..0)
        .map(|n| (n.unsigned_abs() as f64) * ((state.a(n) - 1.0).abs() + state.b(n).abs()))
        .sum()
}

/// Norm of the Banach space of pair sequences used for the substituted system.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BNorm(f64);

impl BNorm {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `sup_{n≥0}(|x1_n| + |x2_n|) + Σ_{n<0} |n| (|x1_n| + |x2_n|)` over `window`.
pub fn b_norm(window: Window, x1: &[f64], x2: &[f64]) -> Result<BNorm> {
    if x1.len() != window.len() || x2.len() != window.len() {
        return Err(TodaError::Usage(format!(
            "b_norm: sequences of length {} and {} do not share a window of {} sites",
            x1.len(),
            x2.len(),
            window.len()
        )));
    }
    let mut sup = 0.0_f64;
    let mut sum = 0.0_f64;
    for (i, n) in window.sites().enumerate() {
        let v = x1[i].abs() + x2[i].abs();
        if n >= 0 {
            sup = sup.max(v);
        } else {
            sum += (n.unsigned_abs() as f64) * v;
        }
    }
    Ok(BNorm(sup + sum))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositive { n: i64, a: f64 },
    NonFinite { n: i64 },
    LeftBoundary { n: i64, deviation: f64 },
    RightBoundary { n: i64, deviation: f64 },
}

/// Result of [`validate`]; empty iff the state satisfies every invariant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v {
                Violation::NonPositive { n, a } => write!(f, "a_{n} = {a:e} is not positive")?,
                Violation::NonFinite { n } => write!(f, "non-finite coefficient at n = {n}")?,
                Violation::LeftBoundary { n, deviation } => {
                    write!(f, "left boundary n = {n} deviates from (1, 0) by {deviation:e}")?
                }
                Violation::RightBoundary { n, deviation } => {
                    write!(f, "right boundary n = {n} deviates from (0, 0) by {deviation:e}")?
                }
            }
        }
        Ok(())
    }
}

/// Lists positivity and boundary-closeness violations.
pub fn validate(state: &LatticeState, trunc_tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    for n in state.window().sites() {
        let (a, b) = (state.a(n), state.b(n));
        if !a.is_finite() || !b.is_finite() {
            violations.push(Violation::NonFinite { n });
        } else if a <= 0.0 {
            violations.push(Violation::NonPositive { n, a });
        }
    }
    let (lo, hi) = (state.n_min(), state.n_max());
    let left = (state.a(lo) - 1.0).abs() + state.b(lo).abs();
    if !(left < trunc_tol) {
        violations.push(Violation::LeftBoundary { n: lo, deviation: left });
    }
    let right = state.a(hi).abs() + state.b(hi).abs();
    if !(right < trunc_tol) {
        violations.push(Violation::RightBoundary { n: hi, deviation: right });
    }
    ValidationReport { violations }
}

/// Serializes a state as `# t=..,n_min=..,n_max=..` followed by `n,a,b` rows.
pub fn state_to_csv(state: &LatticeState) -> String {
    let mut out = String::with_capacity(64 * state.window().len());
    let _ = writeln!(
        out,
        "# t={:e},n_min={},n_max={}",
        state.t,
        state.n_min(),
        state.n_max()
    );
    out.push_str("n,a,b\n");
    for n in state.window().sites() {
        let _ = writeln!(out, "{},{:.17e},{:.17e}", n, state.a(n), state.b(n));
    }
    out
}

pub fn state_from_csv(text: &str) -> Result<LatticeState> {
    let bad = |msg: &str| TodaError::Config(format!("state csv: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| bad("missing metadata header"))?;
    let (mut t, mut n_min, mut n_max) = (None, None, None);
    for field in header.split(',') {
        let (key, value) = field
            .trim()
            .split_once('=')
            .ok_or_else(|| bad("malformed header field"))?;
        match key {
            "t" => t = value.parse::<f64>().ok(),
            "n_min" => n_min = value.parse::<i64>().ok(),
            "n_max" => n_max = value.parse::<i64>().ok(),
            _ => {}
        }
    }
    let window = Window::new(
        n_min.ok_or_else(|| bad("n_min missing"))?,
        n_max.ok_or_else(|| bad("n_max missing"))?,
    )?;
    if lines.next().map(str::trim) != Some("n,a,b") {
        return Err(bad("expected column header n,a,b"));
    }
    let mut a = Vec::with_capacity(window.len());
    let mut b = Vec::with_capacity(window.len());
    for (expected, line) in window.sites().zip(lines.by_ref()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad("row must have three columns"));
        }
        let n: i64 = cols[0].parse().map_err(|_| bad("bad index"))?;
        if n != expected {
            return Err(bad(&format!("expected row n = {expected}, got {n}")));
        }
        a.push(cols[1].parse().map_err(|_| bad("bad a value"))?);
        b.push(cols[2].parse().map_err(|_| bad("bad b value"))?);
    }
    LatticeState::new(t.ok_or_else(|| bad("t missing"))?, window, a, b)
}

pub fn write_state_csv(path: &Path, state: &LatticeState) -> Result<()> {
    std::fs::write(path, state_to_csv(state)).map_err(|e| TodaError::io(path, e))
}

pub fn read_state_csv(path: &Path) -> Result<LatticeState> {
    let text = std::fs::read_to_string(path).map_err(|e| TodaError::io(path, e))?;
    state_from_csv(&text)
}
