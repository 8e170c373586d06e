//! The characteristic amplitude `ξ(x, x')` on the internal space.
//!
//! `ξ` is stored densely as an `n × n` row-major field, row index `i` for the
//! real coordinate `x_i` and column index `j` for the internal coordinate
//! `x'_j`. Both axes share one [`Grid1D`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::Grid1D;
use crate::states::{StateSpec, WaveFunction};
use crate::sum::{pairwise_by, pairwise_complex, pairwise_complex_by};

/// How `ξ` is assembled from a wavefunction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `ξ(x, x') = ψ(x) ψ(x')`, symmetric under `x ↔ x'`.
    #[default]
    Plain,
    /// `ξ(x, x') = ψ*(x) ψ(x')`.
    Conjugate,
}

impl Convention {
    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Plain => "plain",
            Convention::Conjugate => "conjugate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicAmplitude {
    grid: Grid1D,
    hbar: f64,
    convention: Convention,
    values: Vec<Complex64>,
}

impl CharacteristicAmplitude {
    pub fn from_values(
        grid: Grid1D,
        hbar: f64,
        convention: Convention,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::GridMismatch(format!(
                "{} samples for an internal space of {n}×{n}",
                values.len()
            )));
        }
        Ok(CharacteristicAmplitude {
            grid,
            hbar,
            convention,
            values,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.len() + j]
    }

    /// `∬|ξ|² dx' dx`.
    pub fn norm_sqr(&self) -> f64 {
        let dx = self.grid.dx();
        pairwise_by(self.values.len(), |k| self.values[k].norm_sqr()) * dx * dx
    }
}

/// `ρ(x_i + δx/2, x_i − δx/2)` sampled along the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityKernel {
    grid: Grid1D,
    delta: f64,
    values: Vec<Complex64>,
}

impl DensityKernel {
    pub(crate) fn new(grid: Grid1D, delta: f64, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        DensityKernel {
            grid,
            delta,
            values,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `Σ_i ρ_i dx`.
    pub fn total(&self) -> Complex64 {
        pairwise_complex(&self.values) * self.grid.dx()
    }

    pub fn max_abs_diff(&self, other: &DensityKernel) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn build_characteristic(psi: &WaveFunction, convention: Convention) -> CharacteristicAmplitude {
    build_characteristic_with(psi, convention, Execution::default())
}

pub fn build_characteristic_with(
    psi: &WaveFunction,
    convention: Convention,
    exec: Execution,
) -> CharacteristicAmplitude {
    let grid = *psi.grid();
    let n = grid.len();
    let v = psi.values();
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    exec.for_each_row_mut(&mut values, n, |i, row| {
        let left = match convention {
            Convention::Plain => v[i],
            Convention::Conjugate => v[i].conj(),
        };
        for (slot, right) in row.iter_mut().zip(v) {
            *slot = left * right;
        }
    });
    CharacteristicAmplitude {
        grid,
        hbar: psi.hbar(),
        convention,
        values,
    }
}

/// `max |ξ(x, x') − ξ(x', x)|`.
pub fn symmetry_residual(xi: &CharacteristicAmplitude) -> f64 {
    let n = xi.grid.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((xi.get(i, j) - xi.get(j, i)).norm());
        }
    }
    worst
}

/// `ρ(x) = ∫ ξ*(x, x') ξ(x, x' + δx) dx'`, the shift realized as a periodic
/// index roll. `delta` must be an integer multiple of `dx`.
pub fn translation_kernel(xi: &CharacteristicAmplitude, delta: f64) -> Result<DensityKernel> {
    translation_kernel_with(xi, delta, Execution::default())
}

pub fn translation_kernel_with(
    xi: &CharacteristicAmplitude,
    delta: f64,
    exec: Execution,
) -> Result<DensityKernel> {
    let grid = xi.grid;
    let n = grid.len();
    let shift = grid.commensurate_shift(delta)?.rem_euclid(n as isize) as usize;
    let dx = grid.dx();
    let values = exec.map_rows(n, |i| {
        let row = xi.row(i);
        pairwise_complex_by(n, |j| row[j].conj() * row[(j + shift) % n]) * dx
    });
    Ok(DensityKernel::new(grid, delta, values))
}

/// Rectangular patch of the `(x, x')` plane with `samples × samples` points,
/// endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patch {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub samples: usize,
}

impl Patch {
    pub fn square(half_width: f64, samples: usize) -> Self {
        Patch {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            samples,
        }
    }
}

/// Cauchy–Riemann residual of `ζ(x, x') = ψ(x) ψ(i x')` regarded as a
/// function of `z = x + i x'`.
///
/// Returns `max |∂ζ/∂x + i ∂ζ/∂x'|` over the patch interior using
/// fourth-order central differences. On an analytic `ζ` the `O(h²)` and
/// `O(h⁴)` stencil errors of the two partials cancel, leaving `O(h⁶)`.
pub fn analyticity_residual(
    spec: &StateSpec,
    grid: &Grid1D,
    hbar: f64,
    patch: &Patch,
) -> Result<f64> {
    if !matches!(spec, StateSpec::PlaneWave { .. } | StateSpec::Gaussian { .. }) {
        return Err(Error::UnsupportedState {
            operation: "analyticity_residual",
            kind: spec.kind(),
        });
    }
    spec.validate()?;
    let m = patch.samples;
    if m < 5 || !(patch.x_max > patch.x_min) || !(patch.y_max > patch.y_min) {
        return Err(Error::InvalidParameter {
            name: "patch",
            reason: "needs at least 5 samples per axis and a non-empty extent".into(),
        });
    }
    let hx = (patch.x_max - patch.x_min) / (m - 1) as f64;
    let hy = (patch.y_max - patch.y_min) / (m - 1) as f64;
    let span = grid.span();
    let psi = |z: Complex64| spec.continuation(z, span, hbar).expect("checked above");
    let i = Complex64::i();
    let along_x: Vec<Complex64> = (0..m)
        .map(|a| psi(Complex64::new(patch.x_min + a as f64 * hx, 0.0)))
        .collect();
    let along_y: Vec<Complex64> = (0..m)
        .map(|b| psi(i * (patch.y_min + b as f64 * hy)))
        .collect();
    let zeta = |a: usize, b: usize| along_x[a] * along_y[b];
    let d4 = |fm2: Complex64, fm1: Complex64, fp1: Complex64, fp2: Complex64, h: f64| {
        (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
    };
    let mut worst = 0.0f64;
    for a in 2..m - 2 {
        for b in 2..m - 2 {
            let dzx = d4(zeta(a - 2, b), zeta(a - 1, b), zeta(a + 1, b), zeta(a + 2, b), hx);
            let dzy = d4(zeta(a, b - 2), zeta(a, b - 1), zeta(a, b + 1), zeta(a, b + 2), hy);
            worst = worst.max((dzx + i * dzy).norm());
        }
    }
    Ok(worst)
}
