use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasekit::io::load_config_with;
use phasekit::run::{exit, exit_code_for, run, Command};
use phasekit::Execution;

/// Environment variable that overrides the configured output directory.
const OUTPUT_DIR_ENV: &str = "PHASEKIT_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "phasekit", version, about = "Phase-space quantum mechanics batch runner")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set grid.n=2048`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; beats both the config and PHASEKIT_OUTPUT_DIR.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write gnuplot-ready `.dat` files.
    #[arg(long)]
    plot: bool,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Sample the configured state.
    State(Common),
    /// Phase-space density, marginals and summary.
    PhaseSpace(Common),
    /// Moment table over all three evaluation paths.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Position power; requires --m.
        #[arg(long, requires = "m")]
        n: Option<u32>,
        /// Momentum power; requires --n.
        #[arg(long, requires = "n")]
        m: Option<u32>,
    },
    /// Lowest eigenpairs of the configured Hamiltonian.
    Eigensolve {
        #[command(flatten)]
        common: Common,
        /// Number of eigenpairs.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Density kernel by both routes.
    Kernel {
        #[command(flatten)]
        common: Common,
        /// Displacement; repeatable.
        #[arg(long, allow_negative_numbers = true)]
        delta: Vec<f64>,
    },
    /// String-amplitude relation and its scans.
    Constants(Common),
    /// Full invariant suite plus every configured output.
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, mut overrides) = match cli.command {
        Sub::State(c) => (Command::State, c, vec![]),
        Sub::PhaseSpace(c) => (Command::PhaseSpace, c, vec![]),
        Sub::Moments { common, n, m } => {
            let set = match (n, m) {
                (Some(n), Some(m)) => vec![format!("outputs.moments=[[{n}, {m}]]")],
                _ => vec![],
            };
            (Command::Moments, common, set)
        }
        Sub::Eigensolve { common, k } => {
            let set = k.map(|k| vec![format!("outputs.spectrum={k}")]).unwrap_or_default();
            (Command::Eigensolve, common, set)
        }
        Sub::Kernel { common, delta } => {
            let set = if delta.is_empty() {
                vec![]
            } else {
                let list: Vec<String> = delta.iter().map(|d| format!("{d:?}")).collect();
                vec![format!("outputs.kernel=[{}]", list.join(", "))]
            };
            (Command::Kernel, common, set)
        }
        Sub::Constants(c) => (Command::Constants, c, vec![]),
        Sub::Verify(c) => (Command::Verify, c, vec![]),
    };
    let mut all = common.set.clone();
    all.append(&mut overrides);
    if common.plot {
        all.push("outputs.plot=true".into());
    }

    let config = match load_config_with(&common.config, &all) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(exit::CONFIG_ERROR as u8);
        }
    };
    let out_dir = common
        .out
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| config.output_dir.clone());
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };

    match run(command, &config, &out_dir, exec) {
        Ok(manifest) => {
            let report = serde_json::json!({
                "command": command.as_str(),
                "passed": manifest.passed,
                "failures": manifest.failures,
                "outputs": manifest.outputs.len(),
                "checks": manifest.checks.len(),
                "manifest": out_dir.join(phasekit::run::MANIFEST_FILE),
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::from(manifest.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
