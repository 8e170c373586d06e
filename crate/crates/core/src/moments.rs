//! Moments `⟨x^n p^m⟩` along three independent routes:
//!
//! * `Internal`: double sums over the characteristic amplitude with
//!   `p̂ = -iħ ∂/∂x'` acting along the internal coordinate,
//! * `Separable`: the product of two one-dimensional integrals over `ψ`,
//! * `PhaseSpace`: `∬ x^n p^m F dx dp`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::SpectralPlan;
use crate::internal::CharacteristicAmplitude;
use crate::phase_space::{phase_space_moment_with, PhaseSpaceDensity};
use crate::states::WaveFunction;
use crate::sum::{pairwise_complex, pairwise_complex_by};

pub const MAX_POWER: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentPath {
    Internal,
    Separable,
    PhaseSpace,
}

impl MomentPath {
    pub const ALL: [MomentPath; 3] = [
        MomentPath::Internal,
        MomentPath::Separable,
        MomentPath::PhaseSpace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MomentPath::Internal => "internal",
            MomentPath::Separable => "separable",
            MomentPath::PhaseSpace => "phase_space",
        }
    }
}

/// Operator order inside the internal-space double sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorOrder {
    /// `x^n (p̂^m ξ)`.
    XP,
    /// `p̂^m (x^n ξ)`.
    PX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentRequest {
    pub n: u32,
    pub m: u32,
    pub path: MomentPath,
}

impl MomentRequest {
    pub fn new(n: u32, m: u32, path: MomentPath) -> Result<Self> {
        validate_powers(n, m)?;
        Ok(MomentRequest { n, m, path })
    }
}

pub fn validate_powers(n: u32, m: u32) -> Result<()> {
    if n + m == 0 || n > MAX_POWER || m > MAX_POWER {
        return Err(Error::InvalidParameter {
            name: "moment powers",
            reason: format!("need n + m >= 1 and n, m <= {MAX_POWER}, got n={n}, m={m}"),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentResult {
    pub n: u32,
    pub m: u32,
    pub value: Complex64,
    pub path: MomentPath,
    /// `|Im(value)|`.
    pub imaginary_residual: f64,
    /// `|⟨x^n p^m⟩ − ⟨p^m x^n⟩|` for internal mixed moments, zero otherwise.
    pub ordering_difference: f64,
}

impl MomentResult {
    fn new(n: u32, m: u32, value: Complex64, path: MomentPath) -> Self {
        MomentResult {
            n,
            m,
            value,
            path,
            imaginary_residual: value.im.abs(),
            ordering_difference: 0.0,
        }
    }
}

/// `⟨x^n⟩ = ∬ ξ* x^n ξ dx' dx`.
pub fn moment_x(xi: &CharacteristicAmplitude, n: u32) -> MomentResult {
    let dx = xi.grid().dx();
    let len = xi.grid().len();
    let rows = Execution::default().map_rows(len, |i| {
        let row = xi.row(i);
        let x_pow = xi.grid().x(i).powi(n as i32);
        pairwise_complex_by(len, |j| row[j].conj() * row[j]) * x_pow
    });
    MomentResult::new(n, 0, pairwise_complex(&rows) * dx * dx, MomentPath::Internal)
}

/// `⟨p^m⟩ = ∬ ξ* (-iħ ∂/∂x')^m ξ dx' dx`, derivative taken spectrally.
pub fn moment_p(xi: &CharacteristicAmplitude, m: u32) -> MomentResult {
    internal_sum(xi, 0, m, OperatorOrder::XP, Execution::default()).into_result(0, m)
}

/// `⟨x^n p^m⟩` from the internal-space double sum, with both operator orders
/// evaluated. The returned value uses `order`; the other ordering enters
/// `ordering_difference`.
pub fn moment_xp(
    xi: &CharacteristicAmplitude,
    n: u32,
    m: u32,
    order: OperatorOrder,
) -> MomentResult {
    moment_xp_with(xi, n, m, order, Execution::default())
}

pub fn moment_xp_with(
    xi: &CharacteristicAmplitude,
    n: u32,
    m: u32,
    order: OperatorOrder,
    exec: Execution,
) -> MomentResult {
    let xp = internal_sum(xi, n, m, OperatorOrder::XP, exec);
    let px = internal_sum(xi, n, m, OperatorOrder::PX, exec);
    let diff = (xp.0 - px.0).norm();
    let chosen = match order {
        OperatorOrder::XP => xp,
        OperatorOrder::PX => px,
    };
    let mut r = chosen.into_result(n, m);
    r.ordering_difference = diff;
    r
}

struct InternalSum(Complex64);

impl InternalSum {
    fn into_result(self, n: u32, m: u32) -> MomentResult {
        MomentResult::new(n, m, self.0, MomentPath::Internal)
    }
}

fn internal_sum(
    xi: &CharacteristicAmplitude,
    n: u32,
    m: u32,
    order: OperatorOrder,
    exec: Execution,
) -> InternalSum {
    let grid = *xi.grid();
    let len = grid.len();
    let dx = grid.dx();
    let plan = SpectralPlan::new(grid, xi.hbar());
    let rows = exec.map_rows_with(
        len,
        || (plan.scratch(), vec![Complex64::new(0.0, 0.0); len]),
        |(scratch, work), i| {
            let row = xi.row(i);
            let x_pow = grid.x(i).powi(n as i32);
            work.copy_from_slice(row);
            match order {
                OperatorOrder::XP => {
                    plan.momentum_power_in_place(work, m, scratch);
                    work.iter_mut().for_each(|z| *z *= x_pow);
                }
                OperatorOrder::PX => {
                    work.iter_mut().for_each(|z| *z *= x_pow);
                    plan.momentum_power_in_place(work, m, scratch);
                }
            }
            pairwise_complex_by(len, |j| row[j].conj() * work[j])
        },
    );
    InternalSum(pairwise_complex(&rows) * dx * dx)
}

/// Every internal-space moment with `n <= max_n`, `m <= max_m` and
/// `n + m >= 1`, in `(n, m)` lexicographic order.
///
/// Values match [`moment_xp_with`] with [`OperatorOrder::XP`] bit for bit;
/// each row's forward transform is shared across all `m`, and across all `m`
/// for each `x^n`-scaled row in the `PX` ordering.
pub fn internal_moment_table_with(
    xi: &CharacteristicAmplitude,
    max_n: u32,
    max_m: u32,
    exec: Execution,
) -> Result<Vec<MomentResult>> {
    validate_powers(max_n, max_m)?;
    let grid = *xi.grid();
    let len = grid.len();
    let dx = grid.dx();
    let plan = SpectralPlan::new(grid, xi.hbar());
    let (nn, mm) = (max_n as usize + 1, max_m as usize + 1);
    let slot = |n: usize, m: usize| n * mm + m;
    let zero = Complex64::new(0.0, 0.0);
    let rows = exec.map_rows_with(
        len,
        || (plan.scratch(), vec![zero; len], vec![zero; len]),
        |(scratch, spectrum, work), i| {
            let row = xi.row(i);
            let xi_pos = grid.x(i);
            let mut xp = vec![zero; nn * mm];
            let mut px = vec![zero; nn * mm];
            for (n, acc) in xp.iter_mut().step_by(mm).enumerate() {
                let x_pow = xi_pos.powi(n as i32);
                *acc = pairwise_complex_by(len, |j| row[j].conj() * (row[j] * x_pow));
            }
            spectrum.copy_from_slice(row);
            plan.forward_in_place(spectrum, scratch);
            for m in 1..mm {
                apply_power(&plan, spectrum, work, m as u32, scratch);
                for n in 0..nn {
                    let x_pow = xi_pos.powi(n as i32);
                    xp[slot(n, m)] = pairwise_complex_by(len, |j| row[j].conj() * (work[j] * x_pow));
                }
            }
            for n in 0..nn {
                let x_pow = xi_pos.powi(n as i32);
                px[slot(n, 0)] = pairwise_complex_by(len, |j| row[j].conj() * (row[j] * x_pow));
                spectrum.iter_mut().zip(row).for_each(|(s, r)| *s = r * x_pow);
                plan.forward_in_place(spectrum, scratch);
                for m in 1..mm {
                    apply_power(&plan, spectrum, work, m as u32, scratch);
                    px[slot(n, m)] = pairwise_complex_by(len, |j| row[j].conj() * work[j]);
                }
            }
            xp.extend(px);
            xp
        },
    );
    let total = |k: usize| pairwise_complex_by(len, |i| rows[i][k]) * dx * dx;
    let mut out = Vec::with_capacity(nn * mm - 1);
    for n in 0..nn {
        for m in 0..mm {
            if n + m == 0 {
                continue;
            }
            let xp = total(slot(n, m));
            let px = total(nn * mm + slot(n, m));
            let mut r = MomentResult::new(n as u32, m as u32, xp, MomentPath::Internal);
            r.ordering_difference = (xp - px).norm();
            out.push(r);
        }
    }
    Ok(out)
}

/// `work = inverse(p^m · spectrum)`.
fn apply_power(
    plan: &SpectralPlan,
    spectrum: &[Complex64],
    work: &mut [Complex64],
    m: u32,
    scratch: &mut [Complex64],
) {
    for (a, (w, s)) in work.iter_mut().zip(spectrum).enumerate() {
        *w = s * plan.pgrid().p(a).powi(m as i32);
    }
    plan.inverse_in_place(work, scratch);
}

/// `⟨x^n p^m⟩ = ∫ψ* x^n ψ dx · ∫ψ* (-iħ∂/∂x')^m ψ dx'`.
pub fn separable_moment(psi: &WaveFunction, n: u32, m: u32) -> MomentResult {
    let grid = *psi.grid();
    let len = grid.len();
    let dx = grid.dx();
    let v = psi.values();
    let position = pairwise_complex_by(len, |j| v[j].conj() * grid.x(j).powi(n as i32) * v[j]) * dx;
    let momentum = if m == 0 {
        pairwise_complex_by(len, |j| v[j].conj() * v[j]) * dx
    } else {
        let plan = SpectralPlan::new(grid, psi.hbar());
        let mut work = v.to_vec();
        let mut scratch = plan.scratch();
        plan.momentum_power_in_place(&mut work, m, &mut scratch);
        pairwise_complex_by(len, |j| v[j].conj() * work[j]) * dx
    };
    MomentResult::new(n, m, position * momentum, MomentPath::Separable)
}

/// `∬ x^n p^m F dx dp`.
pub fn phase_space_moment(f: &PhaseSpaceDensity, n: u32, m: u32) -> MomentResult {
    let v = phase_space_moment_with(f, n, m, Execution::default());
    MomentResult::new(n, m, Complex64::new(v, 0.0), MomentPath::PhaseSpace)
}

/// Inputs for evaluating any path on one state.
pub struct MomentInputs<'a> {
    pub psi: &'a WaveFunction,
    pub xi: &'a CharacteristicAmplitude,
    pub density: &'a PhaseSpaceDensity,
}

impl MomentInputs<'_> {
    pub fn evaluate(&self, request: MomentRequest) -> MomentResult {
        match request.path {
            MomentPath::Internal => moment_xp(self.xi, request.n, request.m, OperatorOrder::XP),
            MomentPath::Separable => separable_moment(self.psi, request.n, request.m),
            MomentPath::PhaseSpace => phase_space_moment(self.density, request.n, request.m),
        }
    }
}

/// Agreement test used for path equivalence: relative `rel` unless both
/// values are within `abs` of zero.
pub fn values_agree(a: Complex64, b: Complex64, rel: f64, abs: f64) -> bool {
    let diff = (a - b).norm();
    let scale = a.norm().max(b.norm());
    diff <= abs || diff <= rel * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::internal::{build_characteristic, Convention};
    use crate::phase_space::density_of;
    use crate::states::{build_state, StateSpec};
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(-10.0, 20.0 / 256.0, 256).unwrap()
    }

    fn xi_of(spec: StateSpec) -> (WaveFunction, CharacteristicAmplitude) {
        let psi = build_state(&spec, &grid(), 1.0).unwrap();
        let xi = build_characteristic(&psi, Convention::Plain);
        (psi, xi)
    }

    #[test]
    fn position_moments_of_gaussians() {
        let (_, xi) = xi_of(StateSpec::gaussian(0.0, 0.0, 1.0));
        assert!(moment_x(&xi, 1).value.norm() < 1e-10);
        assert!((moment_x(&xi, 2).value - 0.5).norm() < 1e-8);
        let (_, shifted) = xi_of(StateSpec::gaussian(1.5, 0.0, 1.0));
        assert!((moment_x(&shifted, 1).value - 1.5).norm() < 1e-8);
    }

    #[test]
    fn momentum_moments() {
        let (_, xi) = xi_of(StateSpec::gaussian(0.0, 0.0, 1.0));
        assert!((moment_p(&xi, 2).value - 0.5).norm() < 1e-8);
        assert!(moment_p(&xi, 1).value.norm() < 1e-10);
        let (_, pw) = xi_of(StateSpec::plane_wave(5));
        assert!((moment_p(&pw, 1).value - PI / 2.0).norm() < 1e-10);
        let (_, ho) = xi_of(StateSpec::ho(2));
        assert!(moment_p(&ho, 1).value.norm() < 1e-10);
    }

    #[test]
    fn mixed_moments_factorize() {
        let (_, xi) = xi_of(StateSpec::gaussian(0.0, 0.0, 1.0));
        let r = moment_xp(&xi, 1, 1, OperatorOrder::XP);
        assert!(r.value.norm() < 1e-10);
        assert!(r.ordering_difference < 1e-14);

        let (_, xi) = xi_of(StateSpec::gaussian(1.5, -2.0, 1.0));
        let r = moment_xp(&xi, 1, 1, OperatorOrder::PX);
        assert!((r.value + 3.0).norm() < 1e-8);

        let (_, xi) = xi_of(StateSpec::gaussian(1.0, 1.0, 1.0));
        let r = moment_xp(&xi, 2, 2, OperatorOrder::XP);
        // ⟨x²⟩ = 1 + 1/2, ⟨p²⟩ = 1 + 1/2.
        assert!((r.value - 2.25).norm() < 1e-8);
        let singles = moment_x(&xi, 2).value * moment_p(&xi, 2).value;
        assert!((r.value - singles).norm() < 1e-8);
    }

    #[test]
    fn separable_examples() {
        let (psi, _) = xi_of(StateSpec::gaussian(0.0, 0.0, 1.0));
        assert!((separable_moment(&psi, 0, 2).value - 0.5).norm() < 1e-8);
        assert!((separable_moment(&psi, 0, 0).value - 1.0).norm() < 1e-12);
        let (ho1, _) = xi_of(StateSpec::ho(1));
        assert!((separable_moment(&ho1, 2, 0).value - 1.5).norm() < 1e-8);
    }

    #[test]
    fn three_paths_agree() {
        for spec in [
            StateSpec::gaussian(1.5, -2.0, 1.0),
            StateSpec::ho(3),
            StateSpec::plane_wave(5),
        ] {
            let (psi, xi) = xi_of(spec);
            let f = density_of(&xi);
            let inputs = MomentInputs {
                psi: &psi,
                xi: &xi,
                density: &f,
            };
            for n in 0..=3 {
                for m in 0..=3 {
                    if n + m == 0 {
                        continue;
                    }
                    let vals: Vec<Complex64> = MomentPath::ALL
                        .iter()
                        .map(|&path| inputs.evaluate(MomentRequest::new(n, m, path).unwrap()).value)
                        .collect();
                    assert!(values_agree(vals[0], vals[1], 1e-8, 1e-10), "{n},{m}: {vals:?}");
                    assert!(values_agree(vals[0], vals[2], 1e-8, 1e-10), "{n},{m}: {vals:?}");
                }
            }
        }
    }

    #[test]
    fn conventions_give_identical_moments() {
        let psi = build_state(&StateSpec::gaussian(0.5, 0.7, 1.1), &grid(), 1.0).unwrap();
        let a = build_characteristic(&psi, Convention::Plain);
        let b = build_characteristic(&psi, Convention::Conjugate);
        for (n, m) in [(1, 0), (0, 1), (2, 1), (1, 3)] {
            let va = moment_xp(&a, n, m, OperatorOrder::XP).value;
            let vb = moment_xp(&b, n, m, OperatorOrder::XP).value;
            assert!((va - vb).norm() < 1e-12);
        }
    }

    #[test]
    fn request_validation() {
        assert!(MomentRequest::new(0, 0, MomentPath::Internal).is_err());
        assert!(MomentRequest::new(9, 1, MomentPath::Internal).is_err());
        assert!(MomentRequest::new(8, 8, MomentPath::Separable).is_ok());
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let (_, xi) = xi_of(StateSpec::gaussian(0.2, 0.9, 1.0));
        let a = moment_xp_with(&xi, 2, 3, OperatorOrder::XP, Execution::Sequential);
        let b = moment_xp_with(&xi, 2, 3, OperatorOrder::XP, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn table_matches_individual_moments_exactly() {
        let (_, xi) = xi_of(StateSpec::gaussian(1.5, -2.0, 1.0));
        let table = internal_moment_table_with(&xi, 3, 4, Execution::Sequential).unwrap();
        assert_eq!(table.len(), 4 * 5 - 1);
        for r in &table {
            let single = moment_xp_with(&xi, r.n, r.m, OperatorOrder::XP, Execution::Sequential);
            assert_eq!(r.value, single.value, "n={} m={}", r.n, r.m);
            assert_eq!(r.ordering_difference, single.ordering_difference, "n={} m={}", r.n, r.m);
        }
        assert_eq!(table, internal_moment_table_with(&xi, 3, 4, Execution::Parallel).unwrap());
        assert!(internal_moment_table_with(&xi, 9, 1, Execution::Sequential).is_err());
    }
}
