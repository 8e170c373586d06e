//! Plot-ready text data: whitespace-separated matrices for heatmaps and
//! two-column series for line plots, both readable by gnuplot.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::phase_space::PhaseSpaceDensity;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Heatmap,
    Line,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heatmap" => Ok(PlotKind::Heatmap),
            "line" => Ok(PlotKind::Line),
            other => Err(Error::UnknownPlotKind(other.to_string())),
        }
    }
}

/// Data that can be rendered for plotting.
#[derive(Clone, Debug, PartialEq)]
pub enum PlotData<'a> {
    /// `z[i][j]` sampled at `(x[i], y[j])`.
    Surface { x: &'a [f64], y: &'a [f64], z: &'a [f64] },
    Series { x: &'a [f64], y: &'a [f64] },
}

impl<'a> PlotData<'a> {
    pub fn surface(x: &'a [f64], y: &'a [f64], z: &'a [f64]) -> Self {
        PlotData::Surface { x, y, z }
    }

    pub fn series(x: &'a [f64], y: &'a [f64]) -> Self {
        PlotData::Series { x, y }
    }

    fn is_empty(&self) -> bool {
        match self {
            PlotData::Surface { x, y, z } => x.is_empty() || y.is_empty() || z.is_empty(),
            PlotData::Series { x, y } => x.is_empty() || y.is_empty(),
        }
    }
}

/// Renders `data` as `kind`.
///
/// Heatmaps are `x y z` lines with one block per `x` value, blocks separated
/// by a blank line (gnuplot `splot ... with pm3d`). Lines are `x y` pairs.
pub fn emit_plot_data(data: &PlotData<'_>, kind: PlotKind) -> Result<String> {
    if data.is_empty() {
        return Err(Error::EmptyPlot("no samples to plot".into()));
    }
    let mut out = String::new();
    match (data, kind) {
        (PlotData::Surface { x, y, z }, PlotKind::Heatmap) => {
            if z.len() != x.len() * y.len() {
                return Err(Error::GridMismatch(format!(
                    "surface has {} values for a {}x{} grid",
                    z.len(),
                    x.len(),
                    y.len()
                )));
            }
            for (i, xv) in x.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                for (j, yv) in y.iter().enumerate() {
                    let _ = writeln!(out, "{} {} {}", fmt_f64(*xv), fmt_f64(*yv), fmt_f64(z[i * y.len() + j]));
                }
            }
        }
        (PlotData::Series { x, y }, PlotKind::Line) => {
            if x.len() != y.len() {
                return Err(Error::GridMismatch(format!(
                    "series has {} abscissae and {} ordinates",
                    x.len(),
                    y.len()
                )));
            }
            for (xv, yv) in x.iter().zip(y.iter()) {
                let _ = writeln!(out, "{} {}", fmt_f64(*xv), fmt_f64(*yv));
            }
        }
        (PlotData::Surface { .. }, PlotKind::Line) => {
            return Err(Error::UnknownPlotKind("line plot of a surface".into()))
        }
        (PlotData::Series { .. }, PlotKind::Heatmap) => {
            return Err(Error::UnknownPlotKind("heatmap of a series".into()))
        }
    }
    Ok(out)
}

/// Heatmap of `F(x, p)`.
pub fn density_heatmap(f: &PhaseSpaceDensity) -> Result<String> {
    let x = f.grid().points();
    let p = f.pgrid().values();
    emit_plot_data(&PlotData::surface(&x, &p, f.values()), PlotKind::Heatmap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::internal::{build_characteristic, Convention};
    use crate::phase_space::density_of;
    use crate::states::{build_state, StateSpec};

    #[test]
    fn gaussian_density_heatmap_has_row_blocks() {
        let grid = Grid1D::new(-8.0, 0.5, 32).unwrap();
        let psi = build_state(&StateSpec::gaussian(0.0, 0.0, 1.0), &grid, 1.0).unwrap();
        let f = density_of(&build_characteristic(&psi, Convention::Plain));
        let text = density_heatmap(&f).unwrap();
        let blocks: Vec<&str> = text.split("\n\n").collect();
        assert_eq!(blocks.len(), 32);
        for block in blocks {
            assert_eq!(block.trim_end().lines().count(), 32);
            assert!(block.lines().all(|l| l.split_whitespace().count() == 3));
        }
    }

    #[test]
    fn spectrum_is_two_columns() {
        let k = [0.0, 1.0, 2.0];
        let e = [0.5, 1.5, 2.5];
        let text = emit_plot_data(&PlotData::series(&k, &e), PlotKind::Line).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "1.0000000000000000e0 1.5000000000000000e0");
    }

    #[test]
    fn empty_input_is_an_error() {
        let empty: [f64; 0] = [];
        assert!(matches!(
            emit_plot_data(&PlotData::series(&empty, &empty), PlotKind::Line),
            Err(Error::EmptyPlot(_))
        ));
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!(matches!("contour".parse::<PlotKind>(), Err(Error::UnknownPlotKind(_))));
        assert_eq!("heatmap".parse::<PlotKind>().unwrap(), PlotKind::Heatmap);
    }
}
