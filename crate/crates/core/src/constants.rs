//! The universal-constants relation `h/c = 2π² m_e A²/d` linking Planck's
//! constant and the light speed to a string oscillation amplitude `A` and an
//! equilibrium spacing `d`. SI units throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018: `h` and `c` are exact by SI definition.
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const LIGHT_SPEED: f64 = 299_792_458.0;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    pub h: f64,
    pub c: f64,
    pub m_e: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            h: PLANCK,
            c: LIGHT_SPEED,
            m_e: ELECTRON_MASS,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h", self.h), ("c", self.c), ("m_e", self.m_e)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringParams {
    /// Oscillation amplitude `A` (m).
    pub amplitude: f64,
    /// Equilibrium spacing `d` (m).
    pub spacing: f64,
}

/// `A = sqrt(h·d / (2π²·m_e·c))`.
///
/// `h = 0` is accepted here and yields `A = 0`, the classical limit.
pub fn amplitude_from_spacing(d: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: format!("spacing must be positive and finite, got {d}"),
        });
    }
    Ok((consts.h * d / (2.0 * PI * PI * consts.m_e * consts.c)).sqrt())
}

pub fn string_params(d: f64, consts: &PhysicalConstants) -> Result<StringParams> {
    Ok(StringParams {
        amplitude: amplitude_from_spacing(d, consts)?,
        spacing: d,
    })
}

/// `|h/c − 2π² m_e A²/d| / (h/c)`.
pub fn ratio_residual(params: &StringParams, consts: &PhysicalConstants) -> f64 {
    let lhs = consts.h / consts.c;
    let rhs = 2.0 * PI * PI * consts.m_e * params.amplitude * params.amplitude / params.spacing;
    (lhs - rhs).abs() / lhs
}

/// `(h, A(h))` for each `h`, at fixed `d` and the remaining constants.
pub fn planck_limit_scan(h_values: &[f64], d: f64, consts: &PhysicalConstants) -> Result<Vec<(f64, f64)>> {
    h_values
        .iter()
        .map(|&h| {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "h_values",
                    reason: format!("every h must be positive and finite, got {h}"),
                });
            }
            let scaled = PhysicalConstants { h, ..*consts };
            Ok((h, amplitude_from_spacing(d, &scaled)?))
        })
        .collect()
}

/// `(c, A(c))` for each `c`, the light-speed counterpart of
/// [`planck_limit_scan`].
pub fn light_speed_scan(c_values: &[f64], d: f64, consts: &PhysicalConstants) -> Result<Vec<(f64, f64)>> {
    c_values
        .iter()
        .map(|&c| {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "c_values",
                    reason: format!("every c must be positive and finite, got {c}"),
                });
            }
            let scaled = PhysicalConstants { c, ..*consts };
            Ok((c, amplitude_from_spacing(d, &scaled)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angstrom_spacing_amplitude() {
        // sqrt(6.62607015e-34 · 1e-10 / (2π² · 9.1093837015e-31 · 299792458)),
        // evaluated independently in extended precision.
        let a = amplitude_from_spacing(1e-10, &PhysicalConstants::default()).unwrap();
        let expected = 3.505_970_801_838_586e-12;
        assert!(((a - expected) / expected).abs() < 1e-14, "{a:e}");
    }

    #[test]
    fn vanishing_planck_constant_gives_zero_amplitude() {
        let c = PhysicalConstants {
            h: 0.0,
            ..Default::default()
        };
        assert_eq!(amplitude_from_spacing(1e-10, &c).unwrap(), 0.0);
    }

    #[test]
    fn amplitude_scales_as_root_spacing() {
        let c = PhysicalConstants::default();
        let a1 = amplitude_from_spacing(1e-10, &c).unwrap();
        let a4 = amplitude_from_spacing(4e-10, &c).unwrap();
        assert!((a4 / a1 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let c = PhysicalConstants::default();
        let p = string_params(2.5e-11, &c).unwrap();
        assert!(ratio_residual(&p, &c) < 1e-14);
        let doubled = StringParams {
            amplitude: 2.0 * p.amplitude,
            ..p
        };
        assert!((ratio_residual(&doubled, &c) - 3.0).abs() < 1e-13);
        let zero = StringParams {
            amplitude: 0.0,
            ..p
        };
        assert_eq!(ratio_residual(&zero, &c), 1.0);
    }

    #[test]
    fn planck_scan_follows_root_law() {
        let c = PhysicalConstants::default();
        let scan = planck_limit_scan(&[PLANCK, PLANCK / 2.0, PLANCK / 4.0], 1e-10, &c).unwrap();
        let a0 = scan[0].1;
        let ratios = [1.0, 1.0 / 2f64.sqrt(), 0.5];
        for ((_, a), r) in scan.iter().zip(ratios) {
            assert!((a / a0 - r).abs() < 1e-12);
        }
        assert!(scan.windows(2).all(|w| w[1].1 < w[0].1));
        let single = planck_limit_scan(&[PLANCK], 1e-10, &c).unwrap();
        assert_eq!(single.len(), 1);
        assert!(planck_limit_scan(&[PLANCK, 0.0], 1e-10, &c).is_err());
    }

    #[test]
    fn quadrupled_light_speed_halves_amplitude() {
        let c = PhysicalConstants::default();
        let scan = light_speed_scan(&[LIGHT_SPEED, 4.0 * LIGHT_SPEED], 1e-10, &c).unwrap();
        assert!((scan[1].1 / scan[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_spacing() {
        let c = PhysicalConstants::default();
        assert!(amplitude_from_spacing(0.0, &c).is_err());
        assert!(amplitude_from_spacing(-1.0, &c).is_err());
    }
}
