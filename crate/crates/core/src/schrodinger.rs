//! Time-independent Schrödinger eigenproblem and energy expectations.
//!
//! Eigenstates come from a second-order finite-difference Hamiltonian with
//! Dirichlet walls one spacing outside the grid. Expectation values use the
//! spectral kinetic operator shared with the rest of the pipeline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField1D, Grid1D, SpectralPlan};
use crate::internal::{build_characteristic, Convention};
use crate::moments::moment_p;
use crate::states::{normalize, WaveFunction};
use crate::sum::{pairwise, pairwise_by, pairwise_complex_by};

/// Built-in potentials, sampled onto a grid by [`Potential::sample`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Zero,
    /// `½ m ω² x²`.
    Harmonic { omega: f64 },
    /// `λ x⁴`.
    Quartic { lambda: f64 },
    /// `-depth` for `|x - center| < half_width`, zero outside.
    SquareWell {
        depth: f64,
        half_width: f64,
        #[serde(default)]
        center: f64,
    },
}

impl Potential {
    pub fn sample(&self, grid: &Grid1D, mass: f64) -> Vec<f64> {
        grid.points()
            .into_iter()
            .map(|x| match *self {
                Potential::Zero => 0.0,
                Potential::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
                Potential::Quartic { lambda } => lambda * x.powi(4),
                Potential::SquareWell {
                    depth,
                    half_width,
                    center,
                } => {
                    if (x - center).abs() < half_width {
                        -depth
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub mass: f64,
    pub hbar: f64,
    /// `V(x_i)` on the grid.
    pub potential: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(mass: f64, hbar: f64, potential: Vec<f64>) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mass",
                reason: format!("must be positive and finite, got {mass}"),
            });
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidParameter {
                name: "hbar",
                reason: format!("must be positive and finite, got {hbar}"),
            });
        }
        if let Some(bad) = potential.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "potential",
                reason: format!("non-finite sample at index {bad}"),
            });
        }
        Ok(HamiltonianSpec {
            mass,
            hbar,
            potential,
        })
    }

    pub fn from_potential(potential: &Potential, grid: &Grid1D, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(mass, hbar, potential.sample(grid, mass))
    }
}

/// Real symmetric tridiagonal matrix on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    grid: Grid1D,
    hbar: f64,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(grid: Grid1D, hbar: f64, diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.len() != grid.len() || off.len() + 1 != diag.len() {
            return Err(Error::GridMismatch(format!(
                "tridiagonal sizes diag={} off={} for n={}",
                diag.len(),
                off.len(),
                grid.len()
            )));
        }
        Ok(TridiagonalOperator {
            grid,
            hbar,
            diag,
            off,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `(a, b)` with every eigenvalue inside `[a, b]`.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * self.scale() * 1e-3);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0.. {
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.len() {
                break;
            }
            q = self.diag[i + 1] - x - self.off[i] * self.off[i] / q;
        }
        count
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin_bounds();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Discretizes `p̂²/2m + V` with second-order central differences and
/// Dirichlet boundaries.
pub fn build_hamiltonian(spec: &HamiltonianSpec, grid: &Grid1D) -> Result<TridiagonalOperator> {
    if spec.potential.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "potential has {} samples, grid has {}",
            spec.potential.len(),
            grid.len()
        )));
    }
    let dx = grid.dx();
    let kinetic = spec.hbar * spec.hbar / (spec.mass * dx * dx);
    let diag = spec.potential.iter().map(|v| kinetic + v).collect();
    let off = vec![-0.5 * kinetic; grid.len() - 1];
    TridiagonalOperator::new(*grid, spec.hbar, diag, off)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSolution {
    /// Ascending.
    pub energies: Vec<f64>,
    pub states: Vec<WaveFunction>,
    /// `‖Hψ_k − E_k ψ_k‖ / ‖Hψ_k‖` for each pair.
    pub residuals: Vec<f64>,
}

impl EigenSolution {
    /// `max |⟨ψ_a|ψ_b⟩ − δ_ab|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, sa) in self.states.iter().enumerate() {
            for (b, sb) in self.states.iter().enumerate().skip(a) {
                let dx = sa.grid().dx();
                let overlap = pairwise_complex_by(sa.values().len(), |j| {
                    sa.values()[j].conj() * sb.values()[j]
                }) * dx;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((overlap - target).norm());
            }
        }
        worst
    }
}

const MAX_INVERSE_ITERATIONS: usize = 30;
const RESIDUAL_TARGET: f64 = 1e-8;

/// The `k` lowest eigenpairs by Sturm bisection and inverse iteration.
pub fn solve_eigen(h: &TridiagonalOperator, k: usize) -> Result<EigenSolution> {
    let n = h.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("requested {k} eigenpairs, need 1 <= k <= n = {n}"),
        });
    }
    let energies: Vec<f64> = (0..k).map(|index| bisect_eigenvalue(h, index)).collect();
    let scale = h.scale();
    let cluster_gap = 1e-3 * scale;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (index, &lambda) in energies.iter().enumerate() {
        let cluster_start = (0..index)
            .rev()
            .take_while(|&j| (energies[j + 1] - energies[j]).abs() < cluster_gap)
            .last()
            .unwrap_or(index);
        let (v, residual) = inverse_iteration(h, lambda, index, &vectors[cluster_start..index])?;
        vectors.push(v);
        residuals.push(residual);
    }
    let grid = *h.grid();
    let states = vectors
        .into_iter()
        .map(|v| {
            let raw = ComplexField1D::new(grid, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())?;
            normalize(raw, h.hbar)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenSolution {
        energies,
        states,
        residuals,
    })
}

fn bisect_eigenvalue(h: &TridiagonalOperator, index: usize) -> f64 {
    let (mut lo, mut hi) = h.gershgorin_bounds();
    let pad = f64::EPSILON * h.scale() * 4.0 + f64::MIN_POSITIVE;
    lo -= pad;
    hi += pad;
    // Invariant: count_below(lo) <= index < count_below(hi).
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if h.count_below(mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Deterministic, sign-varying start vector.
fn start_vector(n: usize, index: usize) -> Vec<f64> {
    let phase = 0.618_033_988_749_894_9 * (index as f64 + 1.0);
    (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666_246_692_7 + phase).fract())
        .collect()
}

fn inverse_iteration(
    h: &TridiagonalOperator,
    lambda: f64,
    index: usize,
    cluster: &[Vec<f64>],
) -> Result<(Vec<f64>, f64)> {
    let n = h.len();
    let mut v = start_vector(n, index);
    normalize_real(&mut v);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for iteration in 0..MAX_INVERSE_ITERATIONS {
        let mut y = solve_shifted(h, lambda, &v);
        for u in cluster {
            let proj = pairwise_by(n, |i| u[i] * y[i]);
            y.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
        }
        normalize_real(&mut y);
        let hy = h.apply(&y);
        let r = pairwise_by(n, |i| (hy[i] - lambda * y[i]).powi(2)).sqrt();
        let h_norm = pairwise_by(n, |i| hy[i] * hy[i]).sqrt();
        let rel = r / h_norm.max(f64::MIN_POSITIVE);
        let improved = best.as_ref().map_or(true, |(_, b)| rel < *b);
        if improved {
            best = Some((y.clone(), rel));
        }
        v = y;
        if iteration >= 1 && rel <= RESIDUAL_TARGET * 1e-3 {
            break;
        }
    }
    let (mut v, rel) = best.expect("at least one iteration ran");
    if rel > RESIDUAL_TARGET {
        return Err(Error::NoConvergence {
            index,
            iterations: MAX_INVERSE_ITERATIONS,
            residual: rel,
        });
    }
    fix_sign(&mut v);
    Ok((v, rel))
}

fn normalize_real(v: &mut [f64]) {
    let norm = pairwise_by(v.len(), |i| v[i] * v[i]).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Largest-magnitude component positive.
fn fix_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Solves `(T − λI) y = b` by Gaussian elimination with partial pivoting.
fn solve_shifted(h: &TridiagonalOperator, lambda: f64, b: &[f64]) -> Vec<f64> {
    let n = h.len();
    let tiny = f64::EPSILON * h.scale();
    let mut d: Vec<f64> = h.diag.iter().map(|x| x - lambda).collect();
    let mut dl = h.off.clone();
    let mut du = h.off.clone();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            x[i + 1] -= fact * x[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let xb = x[i];
            x[i] = x[i + 1];
            x[i + 1] = xb - fact * x[i + 1];
        }
        dl[i] = 0.0;
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    x[n - 1] /= d[n - 1];
    if n >= 2 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

/// Kinetic, potential and total energy of a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyExpectation {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub imaginary_residual: f64,
}

/// `⟨E⟩ = ∫ψ* [(−iħ∂/∂x)²/2m + V] ψ dx` with the kinetic term evaluated
/// spectrally.
pub fn energy_expectation(psi: &WaveFunction, spec: &HamiltonianSpec) -> Result<EnergyExpectation> {
    let grid = *psi.grid();
    check_spec_grid(spec, &grid)?;
    let dx = grid.dx();
    let v = psi.values();
    let plan = SpectralPlan::new(grid, spec.hbar);
    let mut p2 = v.to_vec();
    let mut scratch = plan.scratch();
    plan.momentum_power_in_place(&mut p2, 2, &mut scratch);
    let kinetic = pairwise_complex_by(v.len(), |j| v[j].conj() * p2[j]) * dx / (2.0 * spec.mass);
    let potential = potential_term(psi, spec);
    Ok(EnergyExpectation {
        kinetic: kinetic.re,
        potential,
        total: kinetic.re + potential,
        imaginary_residual: kinetic.im.abs(),
    })
}

fn potential_term(psi: &WaveFunction, spec: &HamiltonianSpec) -> f64 {
    let v = psi.values();
    let weighted: Vec<f64> = v
        .iter()
        .zip(&spec.potential)
        .map(|(z, pot)| z.norm_sqr() * pot)
        .collect();
    pairwise(&weighted) * psi.grid().dx()
}

fn check_spec_grid(spec: &HamiltonianSpec, grid: &Grid1D) -> Result<()> {
    if spec.potential.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "potential has {} samples, state grid has {}",
            spec.potential.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// The energy evaluated two ways: kinetic part from the internal-space
/// momentum moment `⟨p²⟩/2m` over `ξ(x, x')` plus the potential integral over
/// `x`, against the direct one-dimensional expectation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub kinetic_internal: f64,
    pub potential: f64,
    pub split_total: f64,
    pub direct_total: f64,
    pub relative_difference: f64,
    pub imaginary_residual: f64,
    pub passed: bool,
}

pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

pub fn derivation_consistency(psi: &WaveFunction, spec: &HamiltonianSpec) -> Result<ConsistencyReport> {
    let direct = energy_expectation(psi, spec)?;
    let xi = build_characteristic(psi, Convention::Plain);
    let p2 = moment_p(&xi, 2);
    let kinetic_internal = p2.value.re / (2.0 * spec.mass);
    let potential = potential_term(psi, spec);
    let split_total = kinetic_internal + potential;
    let relative_difference =
        (split_total - direct.total).abs() / direct.total.abs().max(f64::MIN_POSITIVE);
    Ok(ConsistencyReport {
        kinetic_internal,
        potential,
        split_total,
        direct_total: direct.total,
        relative_difference,
        imaginary_residual: p2.imaginary_residual.max(direct.imaginary_residual),
        passed: relative_difference <= CONSISTENCY_TOLERANCE,
    })
}
