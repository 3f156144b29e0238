use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use efl_cli::config::{Format, Lattice, Mode, ScenarioConfig};
use efl_cli::describe::{default_fixture, describe, list_fixtures};
use efl_cli::runner::{self, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(name = "efl", version, about = "Lagrangian and Frenet diagnostics for axisymmetric flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write tables plus report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        ode_tol: Option<f64>,
        /// Seed lattice as `RxZ`, replacing the configured seeds.
        #[arg(long, value_parser = parse_lattice)]
        seed_lattice: Option<(usize, usize)>,
    },
    /// List the built-in fixtures.
    ListFixtures,
    /// Show the formula and parameters of one fixture.
    Describe {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn parse_lattice(s: &str) -> Result<(usize, usize), String> {
    let (r, z) = s.split_once(['x', 'X']).ok_or("expected RxZ")?;
    let r: usize = r.trim().parse().map_err(|e| format!("{e}"))?;
    let z: usize = z.trim().parse().map_err(|e| format!("{e}"))?;
    if r == 0 || z == 0 {
        return Err("lattice counts must be positive".into());
    }
    Ok((r, z))
}

fn load(path: &PathBuf) -> Result<(ScenarioConfig, String), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok((ScenarioConfig::parse(&text)?, text))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EFL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let code = match cli.command {
        Command::ListFixtures => {
            print!("{}", list_fixtures());
            EXIT_OK
        }
        Command::Describe { name, config } => {
            let field = match config {
                Some(path) => match load(&path).and_then(|(c, _)| c.field.build(base_dir(&path).as_path()).map_err(|e| e.to_string())) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_CONFIG as u8);
                    }
                },
                None => default_fixture(&name),
            };
            match describe(&name, field.as_ref()) {
                Some(text) => {
                    print!("{text}");
                    EXIT_OK
                }
                None => {
                    eprintln!("error: unknown fixture {name:?}; see `efl list-fixtures`");
                    EXIT_CONFIG
                }
            }
        }
        Command::Run { config, out_dir, mode, threads, format, ode_tol, seed_lattice } => {
            let (mut cfg, text) = match load(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
            };
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(f) = format {
                cfg.outputs.format = f;
            }
            if let Some(tol) = ode_tol {
                cfg.tolerances.ode_tol = tol;
            }
            if let Some((r_count, z_count)) = seed_lattice {
                cfg.seeds.points.clear();
                cfg.seeds.lattice = Some(Lattice { r_count, z_count, z_start: cfg.spans.z_span[0], theta0: 0.0, r_max: None });
            }
            let base = base_dir(&config);
            let Some(out) = out_dir.or_else(|| cfg.outputs.directory.as_ref().map(|d| base.join(d))) else {
                eprintln!("error: no output directory; pass --out-dir or set outputs.directory");
                return ExitCode::from(EXIT_CONFIG as u8);
            };
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG as u8);
                }
            };
            let report = pool.install(|| runner::run(&cfg, &text, &base, &out));
            if let Some(err) = &report.error {
                eprintln!("error [{}]: {}", err.kind, err.message);
            }
            for s in report.validation.iter().filter(|s| !s.pass) {
                eprintln!("validation failed: {} worst {} > {}", s.suite, s.worst, s.limit);
            }
            report.exit_code
        }
    };
    ExitCode::from(code as u8)
}

fn base_dir(config: &std::path::Path) -> PathBuf {
    config.parent().map(PathBuf::from).unwrap_or_default()
}
