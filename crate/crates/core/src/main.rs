use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use d2d_idnc::conflict_graph::{self, Layer};
use d2d_idnc::harness::{self, ExperimentConfig};
use d2d_idnc::session::{generate_feedback, DEFAULT_ERASURE_PROBABILITY};
use d2d_idnc::topology::{generate, DEFAULT_EDGE_PROBABILITY};
use d2d_idnc::{
    ConnectionMatrix, ErasureSpec, Error, MisSolver, SchedulerKind, SessionState, TopologyKind,
    TopologySpec,
};

const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "d2d-idnc",
    version,
    about = "Joint cellular/D2D IDNC recovery scheduler and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    OptIdnc,
    NetcamWp,
    UncodedBs,
    CellularOnlyIdnc,
}

impl From<SchedulerArg> for SchedulerKind {
    fn from(a: SchedulerArg) -> Self {
        match a {
            SchedulerArg::OptIdnc => SchedulerKind::OptIdnc,
            SchedulerArg::NetcamWp => SchedulerKind::NetcamWp,
            SchedulerArg::UncodedBs => SchedulerKind::UncodedBs,
            SchedulerArg::CellularOnlyIdnc => SchedulerKind::CellularOnlyIdnc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Higher,
    Lower,
    Two,
}

impl From<LayerArg> for Layer {
    fn from(a: LayerArg) -> Self {
        match a {
            LayerArg::Higher => Layer::Higher,
            LayerArg::Lower => Layer::Lower,
            LayerArg::Two => Layer::Two,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a D2D connection matrix.
    #[command(group(ArgGroup::new("shape").args(["full", "edge_prob"])))]
    GenTopology {
        #[arg(long)]
        users: usize,
        /// Connect every pair of users.
        #[arg(long)]
        full: bool,
        /// Independent probability of each pairwise link.
        #[arg(long)]
        edge_prob: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate Has/Wants sets after a lossy broadcast.
    GenSession {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        packets: usize,
        #[arg(long, default_value_t = DEFAULT_ERASURE_PROBABILITY)]
        erasure: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Schedule recovery on one instance and print the completion time.
    Solve {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        session: PathBuf,
        #[arg(long, value_enum)]
        scheduler: SchedulerArg,
        /// Print every slot's plan and recoveries.
        #[arg(long)]
        trace: bool,
        /// Write the full schedule as JSON.
        #[arg(long)]
        trace_json: Option<PathBuf>,
        #[arg(long, default_value_t = d2d_idnc::mis::DEFAULT_VERTEX_CEILING)]
        vertex_ceiling: usize,
    },
    /// Export a conflict graph in DOT format.
    Graph {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        session: PathBuf,
        #[arg(long, value_enum)]
        layer: LayerArg,
        #[arg(long)]
        emit_graph: PathBuf,
    },
    /// Run a Monte Carlo sweep.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capacity { .. } | Error::Infeasible(_) | Error::NoProgress { .. } => {
                EXIT_CAPACITY
            }
            Error::Io(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(io_at(path))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(io_at(path))
}

fn load(topology: &Path, session: &Path) -> Result<(ConnectionMatrix, SessionState), Failure> {
    let c = ConnectionMatrix::from_text(&read(topology)?)?;
    let s = SessionState::from_text(&read(session)?)?;
    if c.n_users() != s.n_users() {
        return Err(Error::DimensionMismatch(format!(
            "topology has {} users, session has {}",
            c.n_users(),
            s.n_users()
        ))
        .into());
    }
    Ok((c, s))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenTopology {
            users,
            full,
            edge_prob,
            seed,
            output,
        } => {
            let kind = if full {
                TopologyKind::FullyConnected
            } else {
                TopologyKind::RandomUniform {
                    edge_probability: edge_prob.unwrap_or(DEFAULT_EDGE_PROBABILITY),
                }
            };
            let c = generate(&TopologySpec {
                n_users: users,
                kind,
                seed,
            })?;
            write(&output, &c.to_text())
        }
        Command::GenSession {
            users,
            packets,
            erasure,
            seed,
            output,
        } => {
            let s = generate_feedback(
                users,
                packets,
                &ErasureSpec {
                    erasure_probability: erasure,
                    seed,
                },
            )?;
            write(&output, &s.to_text())
        }
        Command::Solve {
            topology,
            session,
            scheduler,
            trace,
            trace_json,
            vertex_ceiling,
        } => {
            let (c, s) = load(&topology, &session)?;
            let kind = SchedulerKind::from(scheduler);
            let result = kind.run(&s, &c, &MisSolver::new(vertex_ceiling))?;
            if trace {
                for (i, slot) in result.slots.iter().enumerate() {
                    println!("slot {}: {}", i + 1, slot.plan);
                    for r in &slot.outcome.recoveries {
                        println!("  {r}");
                    }
                }
                println!("final state:");
                print!("{}", result.final_state(&s).to_text());
            }
            if let Some(path) = trace_json {
                let json = serde_json::to_string_pretty(&result)
                    .map_err(|e| Error::Serde(e.to_string()))?;
                write(&path, &json)?;
            }
            println!("T = {}", result.completion_time);
            Ok(())
        }
        Command::Graph {
            topology,
            session,
            layer,
            emit_graph,
        } => {
            let (c, s) = load(&topology, &session)?;
            let g = conflict_graph::build(layer.into(), &s, &c)?;
            write(&emit_graph, &g.to_dot())?;
            println!("{} vertices, {} edges", g.len(), g.edge_count());
            Ok(())
        }
        Command::Bench {
            config,
            out_csv,
            out_svg,
            out_json,
            jobs,
        } => {
            let cfg = ExperimentConfig::from_toml_str(&read(&config)?)?;
            let summary = match jobs {
                Some(j) => harness::run_trials_with_jobs(&cfg, j)?,
                None => harness::run_trials(&cfg)?,
            };
            write(&out_csv, &harness::to_csv_string(&summary)?)?;
            if let Some(p) = out_svg {
                write(&p, &harness::to_svg_string(&summary))?;
            }
            if let Some(p) = out_json {
                write(&p, &harness::to_json_string(&summary)?)?;
            }
            let violations = summary.bound_violations();
            if violations > 0 {
                eprintln!(
                    "warning: {violations} heuristic trials fell outside the completion bounds"
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
