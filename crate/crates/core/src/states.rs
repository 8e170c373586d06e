//! Closed-form reference wavefunctions and normalization.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField1D, Grid1D};

/// Largest probability mass a localized state may have outside the grid span.
pub const TAIL_MASS_LIMIT: f64 = 1e-12;

/// A normalized wavefunction, `Σ|ψ|² dx = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    field: ComplexField1D,
    hbar: f64,
}

impl WaveFunction {
    pub fn field(&self) -> &ComplexField1D {
        &self.field
    }

    pub fn grid(&self) -> &Grid1D {
        self.field.grid()
    }

    pub fn values(&self) -> &[Complex64] {
        self.field.values()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Position density `|ψ(x_j)|²`.
    pub fn density(&self) -> Vec<f64> {
        self.values().iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Scales `raw` to unit norm.
pub fn normalize(raw: ComplexField1D, hbar: f64) -> Result<WaveFunction> {
    check_hbar(hbar)?;
    let norm = raw.norm_sqr();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let scale = norm.sqrt().recip();
    let grid = *raw.grid();
    let values = raw.into_values().into_iter().map(|z| z * scale).collect();
    Ok(WaveFunction {
        field: ComplexField1D::new(grid, values)?,
        hbar,
    })
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "hbar",
            reason: format!("must be positive and finite, got {hbar}"),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// `e^{iKx}/√L` with `K = 2π·k_index/L`.
    PlaneWave { k_index: i64 },
    /// `(πσ²)^{-1/4} exp(-(x - x̄)²/(2σ²) + i p̄ x/ħ)`.
    Gaussian {
        center: f64,
        momentum: f64,
        width: f64,
    },
    /// Harmonic-oscillator eigenstate of `p²/2m + mω²x²/2`.
    HoEigenstate { level: u32, mass: f64, omega: f64 },
}

impl StateSpec {
    pub fn gaussian(center: f64, momentum: f64, width: f64) -> Self {
        StateSpec::Gaussian {
            center,
            momentum,
            width,
        }
    }

    pub fn plane_wave(k_index: i64) -> Self {
        StateSpec::PlaneWave { k_index }
    }

    pub fn ho(level: u32) -> Self {
        StateSpec::HoEigenstate {
            level,
            mass: 1.0,
            omega: 1.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StateSpec::PlaneWave { .. } => "plane_wave",
            StateSpec::Gaussian { .. } => "gaussian",
            StateSpec::HoEigenstate { .. } => "ho_eigenstate",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        match *self {
            StateSpec::PlaneWave { .. } => Ok(()),
            StateSpec::Gaussian {
                center,
                momentum,
                width,
            } => {
                positive("width", width)?;
                if !center.is_finite() || !momentum.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "center/momentum",
                        reason: "must be finite".into(),
                    });
                }
                Ok(())
            }
            StateSpec::HoEigenstate { mass, omega, .. } => {
                positive("mass", mass)?;
                positive("omega", omega)
            }
        }
    }

    /// Closed-form value at real `x`, normalized on the real line (plane
    /// waves on the period `span`).
    pub fn eval(&self, x: f64, span: f64, hbar: f64) -> Complex64 {
        match *self {
            StateSpec::HoEigenstate { level, mass, omega } => {
                let length = (hbar / (mass * omega)).sqrt();
                Complex64::new(hermite_function(level, x / length) / length.sqrt(), 0.0)
            }
            _ => self
                .continuation(Complex64::new(x, 0.0), span, hbar)
                .expect("plane waves and gaussians have closed-form continuations"),
        }
    }

    /// `ψ(z)` at complex `z` for states with an entire closed form.
    pub fn continuation(&self, z: Complex64, span: f64, hbar: f64) -> Option<Complex64> {
        let i = Complex64::i();
        match *self {
            StateSpec::PlaneWave { k_index } => {
                let k = 2.0 * PI * k_index as f64 / span;
                Some((i * k * z).exp() / span.sqrt())
            }
            StateSpec::Gaussian {
                center,
                momentum,
                width,
            } => {
                let norm = (PI * width * width).powf(-0.25);
                let u = z - center;
                Some(norm * (-(u * u) / (2.0 * width * width) + i * momentum * z / hbar).exp())
            }
            StateSpec::HoEigenstate { .. } => None,
        }
    }

    /// Centre and length scale of the probability density, for tail scans.
    fn envelope(&self, hbar: f64) -> Option<(f64, f64, f64)> {
        match *self {
            StateSpec::PlaneWave { .. } => None,
            StateSpec::Gaussian { center, width, .. } => Some((center, width, 0.0)),
            StateSpec::HoEigenstate { level, mass, omega } => {
                let length = (hbar / (mass * omega)).sqrt();
                let turning = (2.0 * level as f64 + 1.0).sqrt() * length;
                Some((0.0, length, turning))
            }
        }
    }
}

/// Normalized Hermite function `ψ_n(ξ) = (2^n n! √π)^{-1/2} H_n(ξ) e^{-ξ²/2}`.
///
/// The recurrence runs directly on the normalized functions, so no factorial
/// or raw Hermite value is ever formed.
pub fn hermite_function(level: u32, xi: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for k in 0..level {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Samples `spec` on `grid` and normalizes it on the grid.
pub fn build_state(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> Result<WaveFunction> {
    check_hbar(hbar)?;
    spec.validate()?;
    check_tail_mass(spec, grid, hbar)?;
    let span = grid.span();
    let raw = ComplexField1D::from_fn(*grid, |x| spec.eval(x, span, hbar));
    normalize(raw, hbar)
}

/// Probability mass of the closed-form state lying outside `[x0, x0 + L)`.
pub fn tail_mass(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> f64 {
    match spec.envelope(hbar) {
        None => 0.0,
        Some(env) => {
            let (lo, hi) = (grid.x0(), grid.end());
            let density = |x: f64| spec.eval(x, grid.span(), hbar).norm_sqr();
            let (left_edge, right_edge) = integration_limits(env);
            let left = if lo > left_edge {
                simpson(&density, left_edge, lo.min(right_edge), env.1)
            } else {
                0.0
            };
            let right = if hi < right_edge {
                simpson(&density, hi.max(left_edge), right_edge, env.1)
            } else {
                0.0
            };
            left + right
        }
    }
}

fn integration_limits((center, length, turning): (f64, f64, f64)) -> (f64, f64) {
    let reach = turning + 40.0 * length;
    (center - reach, center + reach)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, length: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut intervals = ((b - a) / (length / 512.0)).ceil() as usize;
    intervals = intervals.max(2);
    intervals += intervals % 2;
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn check_tail_mass(spec: &StateSpec, grid: &Grid1D, hbar: f64) -> Result<()> {
    let mass = tail_mass(spec, grid, hbar);
    if mass < TAIL_MASS_LIMIT {
        return Ok(());
    }
    let env = spec.envelope(hbar).expect("only localized states have tails");
    let density = |x: f64| spec.eval(x, grid.span(), hbar).norm_sqr();
    let (left_edge, right_edge) = integration_limits(env);
    // Widen symmetrically from the centre until each side holds under half the budget.
    let step = env.1 / 8.0;
    let mut reach = env.2;
    loop {
        let lo = env.0 - reach;
        let hi = env.0 + reach;
        let outside = simpson(&density, left_edge, lo, env.1) + simpson(&density, hi, right_edge, env.1);
        if outside < 0.5 * TAIL_MASS_LIMIT || hi >= right_edge {
            return Err(Error::TailMass {
                mass,
                span_lo: grid.x0(),
                span_hi: grid.end(),
                required_lo: lo,
                required_hi: hi,
            });
        }
        reach += step;
    }
}
