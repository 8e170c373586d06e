//! Batch commands: compute what a config asks for, write result files, and
//! record every asserted invariant in a manifest.

use std::path::Path;

use serde::Serialize;

use crate::constants::{light_speed_scan, planck_limit_scan, ratio_residual, string_params, PhysicalConstants};
use crate::error::{ConfigError, Error, Result};
use crate::exec::Execution;
use crate::grid::{to_momentum, Grid1D};
use crate::internal::{build_characteristic_with, translation_kernel_with, Patch};
use crate::io::{fmt_f64, CsvTable, ExperimentConfig, OutputRecord, OutputWriter};
use crate::moments::{moment_xp_with, phase_space_moment, separable_moment, MomentPath, OperatorOrder};
use crate::phase_space::{
    density, ensemble_average, marginals_with, probability_amplitude_with, wigner_moyal_with,
    Observable, PhaseSpaceDensity,
};
use crate::plot::{density_heatmap, emit_plot_data, PlotData, PlotKind};
use crate::schrodinger::{build_hamiltonian, solve_eigen, HamiltonianSpec};
use crate::states::{build_state, WaveFunction};
use crate::verify::{
    expected_means, kernel_deltas, reference_grid, reference_states, scaled_error, state_label, Check, Report,
    Tolerances, Verifier,
};
use crate::Complex64;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Moments written when a config requests none.
pub const DEFAULT_MOMENTS: [[u32; 2]; 5] = [[1, 0], [0, 1], [1, 1], [2, 0], [0, 2]];

/// Eigenpairs computed when a config does not fix `outputs.spectrum`.
pub const DEFAULT_SPECTRUM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    State,
    PhaseSpace,
    Moments,
    Eigensolve,
    Kernel,
    Constants,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::State => "state",
            Command::PhaseSpace => "phase-space",
            Command::Moments => "moments",
            Command::Eigensolve => "eigensolve",
            Command::Kernel => "kernel",
            Command::Constants => "constants",
            Command::Verify => "verify",
        }
    }
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVARIANT_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const IO_ERROR: i32 = 3;
}

/// Exit status for an error that aborted a run.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Io { .. } => exit::IO_ERROR,
        _ => exit::CONFIG_ERROR,
    }
}

/// Everything a run produced, written as `manifest.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub passed: bool,
    /// `name [subject]` of every failed check.
    pub failures: Vec<String>,
    pub outputs: Vec<OutputRecord>,
    pub checks: Vec<Check>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            exit::OK
        } else {
            exit::INVARIANT_FAILURE
        }
    }
}

/// Runs `command` and writes its files plus the manifest into `out_dir`.
pub fn run(command: Command, config: &ExperimentConfig, out_dir: &Path, exec: Execution) -> Result<Manifest> {
    let mut writer = OutputWriter::create(out_dir)?;
    let mut report = Report::default();
    let mut ctx = Context::new(config, exec);
    match command {
        Command::State => ctx.write_state(&mut writer)?,
        Command::PhaseSpace => ctx.write_phase_space(&mut writer, &mut report, true)?,
        Command::Moments => ctx.write_moments(&mut writer, &mut report)?,
        Command::Eigensolve => ctx.write_spectrum(&mut writer, &mut report)?,
        Command::Kernel => ctx.write_kernel(&mut writer, &mut report)?,
        Command::Constants => ctx.write_constants(&mut writer, &mut report)?,
        Command::Verify => {
            let out = &config.outputs;
            if out.state {
                ctx.write_state(&mut writer)?;
            }
            if out.density || out.marginals {
                ctx.write_phase_space(&mut writer, &mut report, false)?;
            }
            if !out.moments.is_empty() {
                ctx.write_moments(&mut writer, &mut report)?;
            }
            if !out.kernel.is_empty() {
                ctx.write_kernel(&mut writer, &mut report)?;
            }
            if out.spectrum.is_some() || out.eigenstates {
                ctx.write_spectrum(&mut writer, &mut report)?;
            }
            if out.constants.is_some() {
                ctx.write_constants(&mut writer, &mut report)?;
            }
            for check in verify_suite(config, exec).checks {
                if !report.checks.contains(&check) {
                    report.push(check);
                }
            }
        }
    }
    let manifest = Manifest {
        command,
        passed: report.passed(),
        failures: report
            .failures()
            .iter()
            .map(|c| format!("{} [{}]", c.name, c.subject))
            .collect(),
        outputs: writer.records().to_vec(),
        checks: report.checks,
        config: config.clone(),
    };
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// The full invariant suite for a config.
pub fn verify_suite(config: &ExperimentConfig, exec: Execution) -> Report {
    let grid = config.grid();
    let hbar = config.hbar();
    let v = Verifier::new(Tolerances::new(config.tolerances.clone()), exec);
    let deltas = kernel_deltas(&grid, &config.outputs.kernel);
    let mut r = Report::default();
    r.extend(v.grid_checks(&grid, hbar));

    let ref_grid = reference_grid();
    let ref_deltas = kernel_deltas(&ref_grid, &[]);
    let mut cases = vec![(config.state.clone(), grid, deltas.as_slice(), format!(" on {grid}"))];
    for s in reference_states() {
        cases.push((s, ref_grid, ref_deltas.as_slice(), format!(" on reference grid {ref_grid}")));
    }
    for (spec, g, ds, suffix) in &cases {
        let label = format!("{}{suffix}", state_label(spec));
        match build_state(spec, g, hbar) {
            Ok(psi) => r.extend(v.state_checks(&label, &psi, Some(expected_means(spec, g, hbar)), ds)),
            Err(e) => r.push(Check::skipped("states.normalization", label, e.to_string())),
        }
    }

    let patch = config.outputs.analyticity.unwrap_or(Patch::square(1.0, 128));
    let unit_wave_grid = Grid1D::spanning(0.0, 2.0 * std::f64::consts::PI, 64).expect("fixed grid is valid");
    let mut analytic = vec![
        (crate::states::StateSpec::plane_wave(1), unit_wave_grid),
        (crate::states::StateSpec::gaussian(0.0, 0.0, 1.0), grid),
    ];
    if !analytic.iter().any(|(s, _)| *s == config.state) {
        analytic.push((config.state.clone(), grid));
    }
    r.extend(v.analyticity_checks(&analytic, hbar, &patch));

    let (spacing, hf, cf, consts) = match &config.outputs.constants {
        Some(c) => (c.spacing, c.h_factors.clone(), c.c_factors.clone(), c.constants.unwrap_or_default()),
        None => (1e-10, vec![1.0, 0.5, 0.25], vec![1.0, 2.0, 4.0], PhysicalConstants::default()),
    };
    r.extend(v.constants_checks(spacing, &hf, &cf, &consts));

    if let Some(h) = &config.hamiltonian {
        let k = config.outputs.spectrum.unwrap_or(DEFAULT_SPECTRUM).min(grid.len());
        r.extend(v.hamiltonian_checks(&grid, hbar, h.mass, &h.potential, k));
    }
    r
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    exec: Execution,
    tol: Tolerances,
    grid: Grid1D,
    psi: Option<WaveFunction>,
    density: Option<PhaseSpaceDensity>,
}

fn csv_err(e: ConfigError) -> Error {
    Error::Config(e)
}

impl<'a> Context<'a> {
    fn new(config: &'a ExperimentConfig, exec: Execution) -> Self {
        Context {
            config,
            exec,
            tol: Tolerances::new(config.tolerances.clone()),
            grid: config.grid(),
            psi: None,
            density: None,
        }
    }

    fn subject(&self) -> String {
        state_label(&self.config.state)
    }

    fn psi(&mut self) -> Result<&WaveFunction> {
        if self.psi.is_none() {
            self.psi = Some(build_state(&self.config.state, &self.grid, self.config.hbar())?);
        }
        Ok(self.psi.as_ref().expect("just built"))
    }

    /// Builds `ψ` and `F` once; returns both.
    fn state_and_density(&mut self) -> Result<(&WaveFunction, &PhaseSpaceDensity)> {
        if self.density.is_none() {
            let exec = self.exec;
            let convention = self.config.convention;
            let psi = self.psi()?;
            let xi = build_characteristic_with(psi, convention, exec);
            let f = density(&probability_amplitude_with(&xi, exec));
            self.density = Some(f);
        }
        Ok((
            self.psi.as_ref().expect("built with the density"),
            self.density.as_ref().expect("just built"),
        ))
    }

    fn write_state(&mut self, w: &mut OutputWriter) -> Result<()> {
        let grid = self.grid;
        let psi = self.psi()?;
        let mut t = CsvTable::new(&["x", "re", "im"]);
        for (j, z) in psi.values().iter().enumerate() {
            t.push(vec![fmt_f64(grid.x(j)), fmt_f64(z.re), fmt_f64(z.im)]);
        }
        w.write_csv("state", "state.csv", &t)
    }

    fn write_phase_space(&mut self, w: &mut OutputWriter, r: &mut Report, all: bool) -> Result<()> {
        let exec = self.exec;
        let subject = self.subject();
        let (want_density, want_marginals) = if all {
            (true, true)
        } else {
            (self.config.outputs.density, self.config.outputs.marginals)
        };
        let cfg = self.config;
        let tol = self.tol.clone();
        let (psi, f) = self.state_and_density()?;
        let psi_tilde = to_momentum(psi.field(), cfg.hbar());
        let density_x = psi.density();
        let x = f.grid().points();
        let p = f.pgrid().values();
        let n = x.len();
        let marg = marginals_with(f, exec);

        r.push(Check::at_most(
            "phase_space.positivity",
            &subject,
            (-f.min_value()).max(0.0),
            tol.get("phase_space.positivity"),
        ));
        r.push(Check::at_most(
            "phase_space.normalization",
            &subject,
            (f.total_mass() - 1.0).abs(),
            tol.get("phase_space.normalization"),
        ));
        let density_p: Vec<f64> = psi_tilde.values().iter().map(|z| z.norm_sqr()).collect();
        let factorization = (0..n)
            .flat_map(|i| (0..n).map(move |a| (i, a)))
            .map(|(i, a)| (f.get(i, a) - density_x[i] * density_p[a]).abs())
            .fold(0.0, f64::max);
        r.push(Check::at_most(
            "phase_space.factorization",
            &subject,
            factorization,
            tol.get("phase_space.factorization"),
        ));

        if want_density {
            let mut t = CsvTable::new(&["x", "p", "F"]);
            for i in 0..n {
                for a in 0..n {
                    t.push(vec![fmt_f64(x[i]), fmt_f64(p[a]), fmt_f64(f.get(i, a))]);
                }
            }
            w.write_csv("density", "density.csv", &t)?;
            if cfg.outputs.plot {
                w.write("density_plot", "density.dat", density_heatmap(f)?.as_bytes())?;
            }
        }
        if want_marginals {
            let mut t = CsvTable::new(&["index", "x", "position", "p", "momentum"]);
            for j in 0..n {
                t.push(vec![
                    j.to_string(),
                    fmt_f64(x[j]),
                    fmt_f64(marg.position[j]),
                    fmt_f64(p[j]),
                    fmt_f64(marg.momentum[j]),
                ]);
            }
            w.write_csv("marginals", "marginals.csv", &t)?;
        }
        if all {
            let summary = PhaseSpaceSummary {
                state: subject.clone(),
                convention: cfg.convention.as_str(),
                total_mass: f.total_mass(),
                min_value: f.min_value(),
                mean_x: ensemble_average(f, Observable::X),
                mean_p: ensemble_average(f, Observable::P),
                x,
                position_marginal: marg.position,
                p,
                momentum_marginal: marg.momentum,
            };
            let mut body = serde_json::to_string_pretty(&summary).expect("summary serializes");
            body.push('\n');
            w.write("phase_space_summary", "phase_space.json", body.as_bytes())?;
        }
        Ok(())
    }

    fn write_moments(&mut self, w: &mut OutputWriter, r: &mut Report) -> Result<()> {
        let exec = self.exec;
        let subject = self.subject();
        let convention = self.config.convention;
        let tol = self.tol.clone();
        let pairs: Vec<[u32; 2]> = if self.config.outputs.moments.is_empty() {
            DEFAULT_MOMENTS.to_vec()
        } else {
            self.config.outputs.moments.clone()
        };
        let (psi, f) = self.state_and_density()?;
        let xi = build_characteristic_with(psi, convention, exec);
        let mut t = CsvTable::new(&["n", "m", "path", "re", "im", "residual"]);
        let rel = tol.get("moments.path_equivalence");
        let mut path_err = 0.0f64;
        let mut ordering = 0.0f64;
        for &[n, m] in &pairs {
            let results = [
                moment_xp_with(&xi, n, m, OperatorOrder::XP, exec),
                separable_moment(psi, n, m),
                phase_space_moment(f, n, m),
            ];
            for res in &results {
                t.push(vec![
                    n.to_string(),
                    m.to_string(),
                    res.path.as_str().to_string(),
                    fmt_f64(res.value.re),
                    fmt_f64(res.value.im),
                    fmt_f64(res.imaginary_residual),
                ]);
            }
            debug_assert_eq!(results.map(|r| r.path), MomentPath::ALL);
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                path_err = path_err.max(scaled_error(results[a].value, results[b].value, 1e-2));
            }
            ordering = ordering.max(results[0].ordering_difference);
        }
        w.write_csv("moments", "moments.csv", &t)?;
        r.push(Check::at_most("moments.path_equivalence", &subject, path_err, rel));
        r.push(Check::at_most(
            "moments.ordering",
            &subject,
            ordering,
            tol.get("moments.ordering"),
        ));
        Ok(())
    }

    fn write_kernel(&mut self, w: &mut OutputWriter, r: &mut Report) -> Result<()> {
        let exec = self.exec;
        let subject = self.subject();
        let convention = self.config.convention;
        let tol = self.tol.clone();
        let grid = self.grid;
        let deltas: Vec<f64> = if self.config.outputs.kernel.is_empty() {
            vec![0.0, grid.dx()]
        } else {
            self.config.outputs.kernel.clone()
        };
        let (psi, f) = self.state_and_density()?;
        let xi = build_characteristic_with(psi, convention, exec);
        let mut integral = CsvTable::new(&["delta", "x", "re", "im"]);
        let mut translation = CsvTable::new(&["delta", "x", "re", "im"]);
        let tol = tol.get("phase_space.kernel_equivalence");
        for &delta in &deltas {
            let k6 = wigner_moyal_with(f, delta, exec);
            push_kernel_rows(&mut integral, delta, &grid, k6.values());
            match translation_kernel_with(&xi, delta, exec) {
                Ok(k7) => {
                    push_kernel_rows(&mut translation, delta, &grid, k7.values());
                    r.push(
                        Check::at_most("phase_space.kernel_equivalence", &subject, k6.max_abs_diff(&k7), tol)
                            .with_detail(format!("delta = {delta}")),
                    );
                }
                Err(e) => r.push(Check::skipped(
                    "phase_space.kernel_equivalence",
                    &subject,
                    format!("delta = {delta}: {e}"),
                )),
            }
        }
        w.write_csv("kernel_integral", "kernel_integral.csv", &integral)?;
        w.write_csv("kernel_translation", "kernel_translation.csv", &translation)?;
        Ok(())
    }

    fn write_spectrum(&mut self, w: &mut OutputWriter, r: &mut Report) -> Result<()> {
        let cfg = self.config;
        let h = cfg.hamiltonian.as_ref().ok_or_else(|| {
            csv_err(ConfigError::validation(
                "hamiltonian",
                "eigensolve needs a [hamiltonian] table",
            ))
        })?;
        let grid = self.grid;
        let k = cfg.outputs.spectrum.unwrap_or(DEFAULT_SPECTRUM).min(grid.len());
        let spec = HamiltonianSpec::from_potential(&h.potential, &grid, h.mass, cfg.hbar())?;
        let sol = solve_eigen(&build_hamiltonian(&spec, &grid)?, k)?;
        let subject = format!("{:?}, m = {}", h.potential, h.mass);
        r.push(Check::at_most(
            "schrodinger.orthonormality",
            &subject,
            sol.orthonormality_error(),
            self.tol.get("schrodinger.orthonormality"),
        ));
        r.push(Check::at_most(
            "schrodinger.residual",
            &subject,
            sol.residuals.iter().copied().fold(0.0, f64::max),
            self.tol.get("schrodinger.residual"),
        ));
        let mut t = CsvTable::new(&["k", "energy"]);
        for (i, e) in sol.energies.iter().enumerate() {
            t.push(vec![i.to_string(), fmt_f64(*e)]);
        }
        w.write_csv("spectrum", "spectrum.csv", &t)?;
        if cfg.outputs.plot {
            let ks: Vec<f64> = (0..sol.energies.len()).map(|i| i as f64).collect();
            let text = emit_plot_data(&PlotData::series(&ks, &sol.energies), PlotKind::Line)?;
            w.write("spectrum_plot", "spectrum.dat", text.as_bytes())?;
        }
        if cfg.outputs.eigenstates {
            for (i, psi) in sol.states.iter().enumerate() {
                let mut t = CsvTable::new(&["x", "re", "im"]);
                for (j, z) in psi.values().iter().enumerate() {
                    t.push(vec![fmt_f64(grid.x(j)), fmt_f64(z.re), fmt_f64(z.im)]);
                }
                w.write_csv(&format!("eigenstate_{i}"), &format!("eigenstate_{i}.csv"), &t)?;
            }
        }
        Ok(())
    }

    fn write_constants(&mut self, w: &mut OutputWriter, r: &mut Report) -> Result<()> {
        let (spacing, hf, cf, consts) = match &self.config.outputs.constants {
            Some(c) => (c.spacing, c.h_factors.clone(), c.c_factors.clone(), c.constants.unwrap_or_default()),
            None => (1e-10, vec![1.0, 0.5, 0.25], vec![1.0, 2.0, 4.0], PhysicalConstants::default()),
        };
        let params = string_params(spacing, &consts)?;
        let mut t = CsvTable::new(&["d", "A", "residual"]);
        t.push(vec![
            fmt_f64(spacing),
            fmt_f64(params.amplitude),
            fmt_f64(ratio_residual(&params, &consts)),
        ]);
        w.write_csv("constants", "constants.csv", &t)?;
        let hs: Vec<f64> = hf.iter().map(|f| f * consts.h).collect();
        let mut t = CsvTable::new(&["h", "A"]);
        for (h, a) in planck_limit_scan(&hs, spacing, &consts)? {
            t.push(vec![fmt_f64(h), fmt_f64(a)]);
        }
        w.write_csv("planck_scan", "planck_scan.csv", &t)?;
        let cs: Vec<f64> = cf.iter().map(|f| f * consts.c).collect();
        let mut t = CsvTable::new(&["c", "A"]);
        for (c, a) in light_speed_scan(&cs, spacing, &consts)? {
            t.push(vec![fmt_f64(c), fmt_f64(a)]);
        }
        w.write_csv("light_speed_scan", "light_speed_scan.csv", &t)?;
        let v = Verifier::new(self.tol.clone(), self.exec);
        r.extend(v.constants_checks(spacing, &hf, &cf, &consts));
        Ok(())
    }
}

fn push_kernel_rows(t: &mut CsvTable, delta: f64, grid: &Grid1D, values: &[Complex64]) {
    for (j, z) in values.iter().enumerate() {
        t.push(vec![fmt_f64(delta), fmt_f64(grid.x(j)), fmt_f64(z.re), fmt_f64(z.im)]);
    }
}

#[derive(Serialize)]
struct PhaseSpaceSummary {
    state: String,
    convention: &'static str,
    total_mass: f64,
    min_value: f64,
    mean_x: f64,
    mean_p: f64,
    x: Vec<f64>,
    position_marginal: Vec<f64>,
    p: Vec<f64>,
    momentum_marginal: Vec<f64>,
}
