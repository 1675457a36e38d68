use std::io::Read;
use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use toric_cli::commands::{
    self, StressOutcome, StressParams, EXIT_DISAGREEMENT, EXIT_INPUT, EXIT_OK,
};
use toric_cli::patchfile::{Kind, Patch, PatchFile};
use toric_cli::render::{render_svg, DEFAULT_ISO_LINES};
use toric_core::oracle::DEFAULT_RESOLUTION;

#[derive(Parser)]
#[command(
    name = "toric",
    version,
    about = "Certify and inspect toric Bézier patches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide compatibility; exit 0 compatible, 2 weakly compatible only, 3 not weakly compatible
    Check {
        /// Patch file, `-` for stdin
        file: PathBuf,
        /// Exact rational orientation tests
        #[arg(long)]
        exact: bool,
    },
    /// Print a classical patch file with identity controls
    Make {
        kind: MakeKind,
        m: u32,
        n: Option<u32>,
    },
    /// Evaluate the patch as CSV rows x,y,Fx,Fy[,Fz]
    Eval {
        file: PathBuf,
        /// Domain point; repeatable
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true, conflicts_with = "grid")]
        at: Vec<f64>,
        /// n × n grid over the domain's bounding box, clipped to the domain
        #[arg(long)]
        grid: Option<usize>,
        /// Output path instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw boundary curves, iso-parameter curves and the control net as SVG
    Render {
        file: PathBuf,
        /// Iso-parameter subdivisions per axis
        #[arg(long, default_value_t = DEFAULT_ISO_LINES)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the certificate with the sampling oracle over random weights
    Stress {
        file: PathBuf,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        grid: usize,
        #[arg(long, default_value_t = 100.0)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exact: bool,
    },
    /// Serve the JSON API under /v1
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MakeKind {
    Tensor,
    Triangle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}

fn run(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Check { file, exact } => {
            let report = commands::check(&load(&file)?, exact)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(commands::verdict_exit_code(report.verdict))
        }
        Command::Make { kind, m, n } => {
            let kind = match kind {
                MakeKind::Tensor => Kind::Tensor,
                MakeKind::Triangle => Kind::Triangle,
            };
            println!("{}", PatchFile::classical(kind, m, n)?.to_json());
            Ok(EXIT_OK)
        }
        Command::Eval {
            file,
            at,
            grid,
            out,
        } => {
            let patch = load(&file)?;
            let spec = patch.spec()?;
            let points: Vec<[f64; 2]> = match grid {
                Some(n) => commands::grid_points(spec.polygon(), n)?,
                None if at.is_empty() => bail!("give --at X Y or --grid N"),
                None => at.chunks(2).map(|c| [c[0], c[1]]).collect(),
            };
            let (rows, skipped) = commands::eval_points(&spec, &points)?;
            if skipped > 0 {
                eprintln!("warning: skipped {skipped} point(s) outside the patch domain");
            }
            emit(out.as_ref(), &commands::csv_rows(patch.dim(), &rows))?;
            Ok(EXIT_OK)
        }
        Command::Render { file, grid, out } => {
            let svg = render_svg(&load(&file)?.spec()?, grid)?;
            emit(out.as_ref(), &svg)?;
            Ok(EXIT_OK)
        }
        Command::Stress {
            file,
            trials,
            grid,
            spread,
            seed,
            exact,
        } => {
            let params = StressParams {
                trials,
                grid,
                spread,
                seed,
                exact,
            };
            let outcome = commands::stress(&load(&file)?, params)?;
            println!("{}", serde_json::to_string_pretty(outcome.summary())?);
            Ok(match outcome {
                StressOutcome::Agreed(_) => EXIT_OK,
                StressOutcome::Disagreed(s) => {
                    eprintln!(
                        "certificate and sampling oracle disagree on trials {:?}",
                        s.disagreements
                    );
                    EXIT_DISAGREEMENT
                }
            })
        }
        Command::Serve { port, bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((bind, port))
                    .await
                    .with_context(|| format!("binding {bind}:{port}"))?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                toric_cli::server::serve(listener).await?;
                anyhow::Ok(())
            })?;
            Ok(EXIT_OK)
        }
    }
}

fn load(path: &PathBuf) -> anyhow::Result<Patch> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    Ok(PatchFile::from_json(&text)?.validate()?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
