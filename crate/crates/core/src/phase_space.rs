//! Phase-space probability amplitude `φ(x, p)`, density `F(x, p)`, marginals,
//! ensemble averages and the momentum-integral form of the Wigner–Moyal
//! infinitesimal transformation.
//!
//! Fields are `n × n` row-major with row `i` for `x_i` and column `a` for the
//! ascending momentum sample `p_a`. All integrals are Riemann sums with
//! weights `dx` and `dp`, reduced pairwise.

use num_complex::Complex64;

use crate::exec::Execution;
use crate::grid::{Grid1D, MomentumGrid, SpectralPlan};
use crate::internal::{CharacteristicAmplitude, Convention, DensityKernel};
use crate::sum::{pairwise, pairwise_by, pairwise_complex_by};

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityAmplitudePS {
    grid: Grid1D,
    pgrid: MomentumGrid,
    convention: Convention,
    values: Vec<Complex64>,
}

impl ProbabilityAmplitudePS {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn pgrid(&self) -> &MomentumGrid {
        &self.pgrid
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize, a: usize) -> Complex64 {
        self.values[i * self.grid.len() + a]
    }

    /// `∬|φ|² dx dp`.
    pub fn norm_sqr(&self) -> f64 {
        pairwise_by(self.values.len(), |k| self.values[k].norm_sqr())
            * self.grid.dx()
            * self.pgrid.dp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceDensity {
    grid: Grid1D,
    pgrid: MomentumGrid,
    values: Vec<f64>,
}

impl PhaseSpaceDensity {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn pgrid(&self) -> &MomentumGrid {
        &self.pgrid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.values[i * self.grid.len() + a]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// `∬F dx dp`.
    pub fn total_mass(&self) -> f64 {
        pairwise(&self.values) * self.grid.dx() * self.pgrid.dp()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Position and momentum densities obtained by integrating `F` over the other
/// variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    X,
    P,
}

/// `φ(x_i, ·) = to_momentum(ξ(x_i, ·))` row by row.
pub fn probability_amplitude(xi: &CharacteristicAmplitude) -> ProbabilityAmplitudePS {
    probability_amplitude_with(xi, Execution::default())
}

pub fn probability_amplitude_with(
    xi: &CharacteristicAmplitude,
    exec: Execution,
) -> ProbabilityAmplitudePS {
    let grid = *xi.grid();
    let plan = SpectralPlan::new(grid, xi.hbar());
    let mut values = xi.values().to_vec();
    exec.for_each_row_mut_with(
        &mut values,
        grid.len(),
        || plan.scratch(),
        |scratch, _, row| plan.forward_in_place(row, scratch),
    );
    ProbabilityAmplitudePS {
        grid,
        pgrid: *plan.pgrid(),
        convention: xi.convention(),
        values,
    }
}

/// Inverse of [`probability_amplitude`].
pub fn reconstruct_characteristic(phi: &ProbabilityAmplitudePS) -> CharacteristicAmplitude {
    reconstruct_characteristic_with(phi, Execution::default())
}

pub fn reconstruct_characteristic_with(
    phi: &ProbabilityAmplitudePS,
    exec: Execution,
) -> CharacteristicAmplitude {
    let plan = SpectralPlan::new(phi.grid, phi.pgrid.hbar());
    let mut values = phi.values.clone();
    exec.for_each_row_mut_with(
        &mut values,
        phi.grid.len(),
        || plan.scratch(),
        |scratch, _, row| plan.inverse_in_place(row, scratch),
    );
    CharacteristicAmplitude::from_values(phi.grid, phi.pgrid.hbar(), phi.convention, values)
        .expect("shape preserved by row transforms")
}

/// `F = φ†φ`.
pub fn density(phi: &ProbabilityAmplitudePS) -> PhaseSpaceDensity {
    PhaseSpaceDensity {
        grid: phi.grid,
        pgrid: phi.pgrid,
        values: phi.values.iter().map(|z| z.norm_sqr()).collect(),
    }
}

pub fn marginals(f: &PhaseSpaceDensity) -> Marginals {
    marginals_with(f, Execution::default())
}

pub fn marginals_with(f: &PhaseSpaceDensity, exec: Execution) -> Marginals {
    let n = f.grid.len();
    let (dx, dp) = (f.grid.dx(), f.pgrid.dp());
    let position = exec.map_rows(n, |i| pairwise(f.row(i)) * dp);
    let momentum = exec.map_rows(n, |a| pairwise_by(n, |i| f.get(i, a)) * dx);
    Marginals { position, momentum }
}

/// `∬ x^n p^m F dx dp`.
pub fn phase_space_moment(f: &PhaseSpaceDensity, n_pow: u32, m_pow: u32) -> f64 {
    phase_space_moment_with(f, n_pow, m_pow, Execution::default())
}

pub fn phase_space_moment_with(
    f: &PhaseSpaceDensity,
    n_pow: u32,
    m_pow: u32,
    exec: Execution,
) -> f64 {
    let n = f.grid.len();
    let p_pow: Vec<f64> = (0..n).map(|a| f.pgrid.p(a).powi(m_pow as i32)).collect();
    let rows = exec.map_rows(n, |i| {
        let row = f.row(i);
        f.grid.x(i).powi(n_pow as i32) * pairwise_by(n, |a| p_pow[a] * row[a])
    });
    pairwise(&rows) * f.grid.dx() * f.pgrid.dp()
}

/// Ensemble averages `⟨x⟩ = ∬ x F` and `⟨p⟩ = ∬ p F`.
pub fn ensemble_average(f: &PhaseSpaceDensity, which: Observable) -> f64 {
    match which {
        Observable::X => phase_space_moment(f, 1, 0),
        Observable::P => phase_space_moment(f, 0, 1),
    }
}

/// `ρ(x) = ∫ F(x, p) e^{i p δx/ħ} dp`, valid for any real `δx`.
pub fn wigner_moyal(f: &PhaseSpaceDensity, delta: f64) -> DensityKernel {
    wigner_moyal_with(f, delta, Execution::default())
}

pub fn wigner_moyal_with(f: &PhaseSpaceDensity, delta: f64, exec: Execution) -> DensityKernel {
    let n = f.grid.len();
    let hbar = f.pgrid.hbar();
    let phase: Vec<Complex64> = (0..n)
        .map(|a| Complex64::from_polar(1.0, f.pgrid.p(a) * delta / hbar))
        .collect();
    let dp = f.pgrid.dp();
    let values = exec.map_rows(n, |i| {
        let row = f.row(i);
        pairwise_complex_by(n, |a| phase[a] * row[a]) * dp
    });
    DensityKernel::new(f.grid, delta, values)
}

/// Convenience: `ξ → φ → F`.
pub fn density_of(xi: &CharacteristicAmplitude) -> PhaseSpaceDensity {
    density(&probability_amplitude(xi))
}
