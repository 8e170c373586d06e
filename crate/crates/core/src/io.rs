//! Experiment configuration and deterministic result files.
//!
//! Configs are TOML with every table strict about unknown keys. Result files
//! are CSV with fixed headers; floating-point values are written with 17
//! significant digits so that re-reading them recovers the exact doubles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::PhysicalConstants;
use crate::error::{ConfigError, Error, Result};
use crate::grid::Grid1D;
use crate::internal::{Convention, Patch};
use crate::moments::MAX_POWER;
use crate::schrodinger::Potential;
use crate::states::{tail_mass, StateSpec, TAIL_MASS_LIMIT};
use crate::verify::tolerance_names;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    #[serde(default = "one")]
    pub mass: f64,
    pub potential: Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    /// Equilibrium spacing `d` in metres.
    pub spacing: f64,
    #[serde(default = "default_factors")]
    pub h_factors: Vec<f64>,
    #[serde(default = "default_c_factors")]
    pub c_factors: Vec<f64>,
    #[serde(default)]
    pub constants: Option<PhysicalConstants>,
}

fn default_factors() -> Vec<f64> {
    vec![1.0, 0.5, 0.25]
}

fn default_c_factors() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub state: bool,
    #[serde(default)]
    pub density: bool,
    #[serde(default)]
    pub marginals: bool,
    /// `(n, m)` pairs; each is evaluated on every path.
    #[serde(default)]
    pub moments: Vec<[u32; 2]>,
    /// Displacements `δx` for the density kernel.
    #[serde(default)]
    pub kernel: Vec<f64>,
    /// Number of eigenpairs to compute.
    #[serde(default)]
    pub spectrum: Option<usize>,
    #[serde(default)]
    pub eigenstates: bool,
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub analyticity: Option<Patch>,
    /// Also emit gnuplot-ready `.dat` files.
    #[serde(default)]
    pub plot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub state: StateSpec,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.grid.x0, self.grid.dx, self.grid.n)
            .expect("validated configs always carry a valid grid")
    }

    pub fn hbar(&self) -> f64 {
        self.grid.hbar
    }

    /// Tolerance for a named invariant, honouring overrides.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.dx > 0.0) || !g.dx.is_finite() {
            return Err(ConfigError::validation("grid.dx", format!("must be positive, got {}", g.dx)));
        }
        if g.n < crate::grid::MIN_POINTS || !g.n.is_power_of_two() {
            return Err(ConfigError::validation(
                "grid.n",
                format!("must be a power of two >= {}, got {}", crate::grid::MIN_POINTS, g.n),
            ));
        }
        if !g.x0.is_finite() {
            return Err(ConfigError::validation("grid.x0", "must be finite"));
        }
        if !(g.hbar > 0.0) || !g.hbar.is_finite() {
            return Err(ConfigError::validation("grid.hbar", format!("must be positive, got {}", g.hbar)));
        }
        let grid = Grid1D::new(g.x0, g.dx, g.n)
            .map_err(|e| ConfigError::validation("grid", e.to_string()))?;

        if let Err(e) = self.state.validate() {
            let key = match &e {
                Error::InvalidParameter { name, .. } => format!("state.{name}"),
                _ => "state".into(),
            };
            return Err(ConfigError::validation(key, e.to_string()));
        }
        let tail = tail_mass(&self.state, &grid, g.hbar);
        if tail >= TAIL_MASS_LIMIT {
            let detail = crate::states::build_state(&self.state, &grid, g.hbar)
                .err()
                .map(|e| e.to_string())
                .unwrap_or_else(|| format!("tail mass {tail:.3e} outside the grid"));
            return Err(ConfigError::validation("state", detail));
        }

        if let Some(h) = &self.hamiltonian {
            if !(h.mass > 0.0) || !h.mass.is_finite() {
                return Err(ConfigError::validation(
                    "hamiltonian.mass",
                    format!("must be positive, got {}", h.mass),
                ));
            }
            let samples = h.potential.sample(&grid, h.mass);
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(ConfigError::validation("hamiltonian.potential", "produces non-finite values"));
            }
        }

        let out = &self.outputs;
        for &[n, m] in &out.moments {
            if n + m == 0 || n > MAX_POWER || m > MAX_POWER {
                return Err(ConfigError::validation(
                    "outputs.moments",
                    format!("need n + m >= 1 and n, m <= {MAX_POWER}, got [{n}, {m}]"),
                ));
            }
        }
        if let Some(d) = out.kernel.iter().find(|d| !d.is_finite()) {
            return Err(ConfigError::validation("outputs.kernel", format!("non-finite displacement {d}")));
        }
        if let Some(k) = out.spectrum {
            if k == 0 || k > g.n {
                return Err(ConfigError::validation(
                    "outputs.spectrum",
                    format!("need 1 <= k <= n = {}, got k = {k}", g.n),
                ));
            }
        }
        if (out.spectrum.is_some() || out.eigenstates) && self.hamiltonian.is_none() {
            return Err(ConfigError::validation(
                "hamiltonian",
                "spectrum and eigenstate outputs need a [hamiltonian] table",
            ));
        }
        if let Some(c) = &out.constants {
            if !(c.spacing > 0.0) || !c.spacing.is_finite() {
                return Err(ConfigError::validation(
                    "outputs.constants.spacing",
                    format!("must be positive, got {}", c.spacing),
                ));
            }
            if c.h_factors.is_empty() || c.h_factors.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
                return Err(ConfigError::validation(
                    "outputs.constants.h_factors",
                    "must be a non-empty list of positive numbers",
                ));
            }
            if c.c_factors.is_empty() || c.c_factors.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
                return Err(ConfigError::validation(
                    "outputs.constants.c_factors",
                    "must be a non-empty list of positive numbers",
                ));
            }
            if let Some(pc) = &c.constants {
                pc.validate()
                    .map_err(|e| ConfigError::validation("outputs.constants.constants", e.to_string()))?;
            }
        }
        if let Some(p) = &out.analyticity {
            if p.samples < 5 || !(p.x_max > p.x_min) || !(p.y_max > p.y_min) {
                return Err(ConfigError::validation(
                    "outputs.analyticity",
                    "needs samples >= 5 and non-empty extents",
                ));
            }
        }
        let known = tolerance_names();
        for (name, value) in &self.tolerances {
            if !known.contains(&name.as_str()) {
                return Err(ConfigError::validation(
                    format!("tolerances.{name}"),
                    format!("unknown invariant; known names: {}", known.join(", ")),
                ));
            }
            if !(*value > 0.0) || !value.is_finite() {
                return Err(ConfigError::validation(
                    format!("tolerances.{name}"),
                    format!("must be positive, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Reads, overrides and validates a config file.
///
/// `overrides` are `dotted.path=value` assignments applied to the parsed tree
/// before validation; values use TOML syntax and fall back to bare strings.
pub fn load_config_with(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ConfigError::Missing(path.to_path_buf()))
        }
        Err(e) => {
            return Err(ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        }
    };
    parse_config(&text, path, overrides)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    load_config_with(path, &[])
}

pub fn parse_config(text: &str, origin: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let parse_err = |message: String| ConfigError::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
    for assignment in overrides {
        apply_override(&mut table, assignment)?;
    }
    let config: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::validation(assignment, "override must look like key.path=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts = key_path(key)?;
    let (last, parents) = parts.split_last().expect("key paths are non-empty");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::validation(key, format!("`{part}` is not a table")))?;
    }
    cursor.insert(last.clone(), value);
    Ok(())
}

/// Segments of a TOML dotted key; quoted segments may contain dots.
fn key_path(key: &str) -> Result<Vec<String>, ConfigError> {
    let parsed = toml::from_str::<toml::Table>(&format!("{key} = 0"))
        .map_err(|_| ConfigError::validation(key, "not a valid dotted key"))?;
    let mut parts = Vec::new();
    let mut level = &parsed;
    loop {
        let (name, value) = level.iter().next().expect("parsed key has one entry");
        parts.push(name.clone());
        match value {
            toml::Value::Table(t) => level = t,
            _ => return Ok(parts),
        }
    }
}

/// 17 significant digits, lossless for doubles.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One written file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub name: String,
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Writes files into one run directory and records their checksums.
#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<OutputRecord> {
        self.records
    }

    /// Writes `body` to `file` and records it under `name`. A name may be
    /// written only once per run.
    pub fn write(&mut self, name: &str, file: &str, body: &[u8]) -> Result<()> {
        assert!(
            self.records.iter().all(|r| r.name != name),
            "output `{name}` written twice"
        );
        let path = self.dir.join(file);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.records.push(OutputRecord {
            name: name.to_string(),
            path: file.to_string(),
            sha256: hex::encode(Sha256::digest(body)),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, file: &str, table: &CsvTable) -> Result<()> {
        self.write(name, file, table.render().as_bytes())
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        CsvTable {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parses a CSV body produced by [`CsvTable::render`] back into its header
/// and numeric cells.
pub fn read_numeric_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().ok()).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    Some((header, rows))
}
