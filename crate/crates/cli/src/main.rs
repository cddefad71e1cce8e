use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use condbel::verify::EmpiricalSample;
use condbel::{
    build_network, compare_empirical, exact_collapsed_joint, generate, network_joint,
    validate_network, Error, Network, TableKind,
};

#[derive(Parser)]
#[command(name = "condbel", version, about = "Sampling from conditional belief function networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check structure and tables of a network file.
    Validate { input: PathBuf },
    /// Rewrite every table as mass (m) or K values.
    Transform {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Kind,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Exact joint mass by conjunctive combination, as CSV.
    Joint {
        input: PathBuf,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Extended conditional probability tables, one CSV per node.
    Cpt {
        input: PathBuf,
        /// Directory receiving `<node>.csv`; stdout when absent.
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Draw collapsed records.
    Sample {
        input: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Draw records and compare them with the exact collapsed distribution.
    Verify {
        input: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        linf: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    M,
    K,
}

/// Exit status and the message printed on stderr.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. } | Error::NotKRepresentable { .. } => 2,
            Error::Cycle(_) | Error::Structure(_) => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { code: 1, message: format!("{}: {e}", path.display()) }
}

fn load(path: &Path) -> Result<Network, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Network::parse(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure { message: format!("{}: {}", path.display(), f.message), ..f }
    })
}

/// Runs `f` against the file at `path`, or stdout.
fn with_output<F>(path: Option<&Path>, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> condbel::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_failure(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().map_err(|e| Failure { code: 1, message: e.to_string() })
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { input } => {
            let net = load(&input)?;
            let report = validate_network(&net);
            eprint!("{report}");
            if !report.is_ok() {
                return Err(Failure { code: 3, message: format!("{}: invalid", input.display()) });
            }
            println!(
                "{}: ok ({} variables, {} edges)",
                input.display(),
                net.len(),
                net.edges().len()
            );
        }
        Command::Transform { input, to, o } => {
            let net = load(&input)?;
            let kind = match to {
                Kind::M => TableKind::Mass,
                Kind::K => TableKind::K,
            };
            let out = net.convert_tables(kind)?;
            with_output(o.as_deref(), |w| Ok(w.write_all(out.to_text().as_bytes())?))?;
        }
        Command::Joint { input, o } => {
            let net = load(&input)?;
            let (joint, neg) = network_joint(&net)?;
            with_output(o.as_deref(), |w| joint.write_csv(w))?;
            eprintln!("empty-intersection mass: {:.9}", joint.empty_mass());
            eprintln!("focal mass total: {:.9}", joint.focal_total());
            if neg.is_proper() {
                eprintln!("all focal masses nonnegative");
            } else {
                let (focal, v) = neg
                    .entries
                    .iter()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("nonempty");
                eprintln!(
                    "{} negative focal masses, minimum {v:.9} at ({})",
                    neg.entries.len(),
                    focal.format(net.frames()).join(",")
                );
            }
        }
        Command::Cpt { input, o } => {
            let net = load(&input)?;
            let cpts = build_network(&net)?;
            match o {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
                    for &j in net.topological_order() {
                        let path = dir.join(format!("{}.csv", net.frame(j).name()));
                        with_output(Some(&path), |w| cpts[j].write_csv(w))?;
                    }
                }
                None => with_output(None, |w| {
                    for &j in net.topological_order() {
                        writeln!(w, "# node {}", net.frame(j).name())?;
                        cpts[j].write_csv(&mut *w)?;
                    }
                    Ok(())
                })?,
            }
        }
        Command::Sample { input, n, seed, o } => {
            let net = load(&input)?;
            let cpts = build_network(&net)?;
            let records = generate(&net, &cpts, n, seed)?;
            with_output(o.as_deref(), |w| condbel::sampler::write_csv(&net, &records, w))?;
        }
        Command::Verify { input, n, seed, linf } => {
            if n == 0 {
                return Err(Failure { code: 1, message: "-n must be positive".into() });
            }
            let net = load(&input)?;
            let cpts = build_network(&net)?;
            let exact = exact_collapsed_joint(&net, &cpts)?;
            let records = generate(&net, &cpts, n, seed)?;
            let sample = EmpiricalSample {
                scope: net.variable_names(),
                rows: records.into_iter().map(|r| r.collapsed).collect(),
            };
            let report = compare_empirical(&sample, &exact, linf)?;
            print!("{}", report.render(net.frames()));
            if !report.pass {
                return Err(Failure {
                    code: 3,
                    message: format!("L-inf {:.9} exceeds {:.9}", report.linf, linf),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
