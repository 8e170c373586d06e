//! Uniform grids, the unitary position ↔ momentum transform, and spectral
//! differentiation.
//!
//! The transform convention is fixed here for the whole crate:
//!
//! ```text
//! ψ̃(p) = (2πħ)^{-1/2} ∫ ψ(x') e^{-i p x'/ħ} dx'
//! ```
//!
//! discretized on `x_j = x0 + j·dx` and `p_k = k·dp`, `k ∈ [-n/2, n/2)`,
//! `dp = 2πħ / (n·dx)`. Momentum samples are stored in ascending order of `k`.
//! With Riemann weights `dx` and `dp` the discrete map is unitary and all
//! transforms have periodic boundary semantics.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x0: f64,
    dx: f64,
    n: usize,
}

impl Grid1D {
    /// Builds the grid `x_j = x0 + j·dx`, `j = 0..n`.
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::InvalidGrid(format!("x0 must be finite, got {x0}")));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "dx must be positive and finite, got {dx}"
            )));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= {MIN_POINTS}, got {n}"
            )));
        }
        if !(n as f64 * dx).is_finite() {
            return Err(Error::InvalidGrid("span n·dx overflows".into()));
        }
        Ok(Grid1D { x0, dx, n })
    }

    /// Grid covering `[lo, hi)` with `n` points.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, (hi - lo) / n as f64, n)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// One past the last sample, `x0 + n·dx`.
    pub fn end(&self) -> f64 {
        self.x0 + self.span()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn momentum_grid(&self, hbar: f64) -> MomentumGrid {
        MomentumGrid::new(self, hbar)
    }

    /// Returns `delta / dx` as an integer shift when `delta` is commensurate
    /// with the spacing.
    pub fn commensurate_shift(&self, delta: f64) -> Result<isize> {
        let ratio = delta / self.dx;
        let nearest = ratio.round();
        if !ratio.is_finite() || (ratio - nearest).abs() > 1e-9 * nearest.abs().max(1.0) {
            return Err(Error::NonCommensurate {
                delta,
                dx: self.dx,
            });
        }
        Ok(nearest as isize)
    }
}

impl fmt::Display for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}) with n={} dx={}", self.x0, self.end(), self.n, self.dx)
    }
}

/// Momentum samples conjugate to a [`Grid1D`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    hbar: f64,
    dp: f64,
    n: usize,
}

impl MomentumGrid {
    fn new(grid: &Grid1D, hbar: f64) -> Self {
        let n = grid.len();
        MomentumGrid {
            hbar,
            dp: 2.0 * PI * hbar / (n as f64 * grid.dx()),
            n,
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer wave index `k` of the sample stored at position `a`.
    pub fn wave_index(&self, a: usize) -> i64 {
        a as i64 - (self.n / 2) as i64
    }

    /// Storage position of wave index `k`, if representable.
    pub fn position_of(&self, k: i64) -> Option<usize> {
        let a = k + (self.n / 2) as i64;
        (0..self.n as i64).contains(&a).then_some(a as usize)
    }

    pub fn p(&self, a: usize) -> f64 {
        self.wave_index(a) as f64 * self.dp
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|a| self.p(a)).collect()
    }
}

/// Complex samples on a position grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField1D {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField1D {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(ComplexField1D { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        ComplexField1D {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid1D, f: F) -> Self {
        ComplexField1D {
            values: grid.points().into_iter().map(f).collect(),
            grid,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `Σ|f|² dx`.
    pub fn norm_sqr(&self) -> f64 {
        crate::sum::pairwise_by(self.values.len(), |j| self.values[j].norm_sqr()) * self.grid.dx()
    }
}

/// Complex samples on a momentum grid, remembering the position grid they
/// are conjugate to.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumField {
    grid: Grid1D,
    pgrid: MomentumGrid,
    values: Vec<Complex64>,
}

impl MomentumField {
    pub fn new(grid: Grid1D, hbar: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} momentum samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(MomentumField {
            pgrid: grid.momentum_grid(hbar),
            grid,
            values,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn pgrid(&self) -> &MomentumGrid {
        &self.pgrid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `Σ|f̃|² dp`.
    pub fn norm_sqr(&self) -> f64 {
        crate::sum::pairwise_by(self.values.len(), |k| self.values[k].norm_sqr()) * self.pgrid.dp()
    }
}

/// Precomputed forward/inverse transforms for one grid and one `ħ`.
///
/// Cheap to clone; plans are shared behind `Arc`s and are `Send + Sync`.
#[derive(Clone)]
pub struct SpectralPlan {
    grid: Grid1D,
    pgrid: MomentumGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `dx/√(2πħ) · e^{-i p_k x0/ħ}` per ascending momentum position.
    forward_phase: Vec<Complex64>,
    /// `dp/√(2πħ) · e^{+i p_k x0/ħ}`.
    inverse_phase: Vec<Complex64>,
}

impl fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("grid", &self.grid)
            .field("pgrid", &self.pgrid)
            .finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: Grid1D, hbar: f64) -> Self {
        let n = grid.len();
        let pgrid = grid.momentum_grid(hbar);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let norm = (2.0 * PI * hbar).sqrt();
        let (fwd_scale, inv_scale) = (grid.dx() / norm, pgrid.dp() / norm);
        let mut forward_phase = Vec::with_capacity(n);
        let mut inverse_phase = Vec::with_capacity(n);
        for a in 0..n {
            let theta = pgrid.p(a) * grid.x0() / hbar;
            let phase = Complex64::from_polar(1.0, -theta);
            forward_phase.push(phase * fwd_scale);
            inverse_phase.push(phase.conj() * inv_scale);
        }
        SpectralPlan {
            grid,
            pgrid,
            forward,
            inverse,
            forward_phase,
            inverse_phase,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn pgrid(&self) -> &MomentumGrid {
        &self.pgrid
    }

    pub fn hbar(&self) -> f64 {
        self.pgrid.hbar()
    }

    /// Scratch buffer sized for the in-place transforms.
    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self.grid.len()
            + self
                .forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// In-place position → momentum transform of one row.
    pub fn forward_in_place(&self, row: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.grid.len();
        let (fft_scratch, tmp) = split_scratch(scratch, self.forward.get_inplace_scratch_len(), n);
        self.forward.process_with_scratch(row, fft_scratch);
        // Reorder FFT bins (k mod n) into ascending k.
        let half = n / 2;
        for a in 0..n {
            tmp[a] = row[(a + half) % n] * self.forward_phase[a];
        }
        row.copy_from_slice(&tmp[..n]);
    }

    /// In-place momentum → position transform of one row.
    pub fn inverse_in_place(&self, row: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.grid.len();
        let (fft_scratch, tmp) = split_scratch(scratch, self.inverse.get_inplace_scratch_len(), n);
        let half = n / 2;
        for a in 0..n {
            tmp[(a + half) % n] = row[a] * self.inverse_phase[a];
        }
        row.copy_from_slice(&tmp[..n]);
        self.inverse.process_with_scratch(row, fft_scratch);
    }

    /// Applies `(p̂)^power = (-iħ ∂/∂x)^power` to a position-space row.
    pub fn momentum_power_in_place(
        &self,
        row: &mut [Complex64],
        power: u32,
        scratch: &mut [Complex64],
    ) {
        if power == 0 {
            return;
        }
        self.forward_in_place(row, scratch);
        for (a, z) in row.iter_mut().enumerate() {
            *z *= self.pgrid.p(a).powi(power as i32);
        }
        self.inverse_in_place(row, scratch);
    }

    pub fn to_momentum(&self, f: &ComplexField1D) -> MomentumField {
        let mut values = f.values().to_vec();
        let mut scratch = self.scratch();
        self.forward_in_place(&mut values, &mut scratch);
        MomentumField {
            grid: self.grid,
            pgrid: self.pgrid,
            values,
        }
    }

    pub fn from_momentum(&self, g: &MomentumField) -> ComplexField1D {
        let mut values = g.values().to_vec();
        let mut scratch = self.scratch();
        self.inverse_in_place(&mut values, &mut scratch);
        ComplexField1D {
            grid: self.grid,
            values,
        }
    }
}

/// Scratch layout: `[reorder buffer (n) | FFT scratch]`.
fn split_scratch(
    scratch: &mut [Complex64],
    fft_len: usize,
    n: usize,
) -> (&mut [Complex64], &mut [Complex64]) {
    assert!(scratch.len() >= n + fft_len, "scratch buffer too small");
    let (tmp, rest) = scratch.split_at_mut(n);
    (&mut rest[..fft_len], tmp)
}

/// `ψ̃ = to_momentum(ψ)` with the crate-wide convention.
pub fn to_momentum(f: &ComplexField1D, hbar: f64) -> MomentumField {
    SpectralPlan::new(*f.grid(), hbar).to_momentum(f)
}

pub fn from_momentum(g: &MomentumField) -> ComplexField1D {
    SpectralPlan::new(*g.grid(), g.pgrid().hbar()).from_momentum(g)
}

/// `d^order f / dx^order` computed spectrally: multiply by `(ip/ħ)^order`.
pub fn spectral_derivative(f: &ComplexField1D, order: u32, hbar: f64) -> Result<ComplexField1D> {
    if order == 0 {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "derivative order must be at least 1".into(),
        });
    }
    let plan = SpectralPlan::new(*f.grid(), hbar);
    let mut g = plan.to_momentum(f);
    let i = Complex64::i();
    for (a, z) in g.values.iter_mut().enumerate() {
        *z *= (i * (plan.pgrid().p(a) / hbar)).powu(order);
    }
    Ok(plan.from_momentum(&g))
}
