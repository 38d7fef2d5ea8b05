//! `spmv` command line front end.
//!
//! Exit codes: 0 when the product checks out, 1 on a numerical failure,
//! 2 on usage or data errors. `--ranks` sets the number of simulated ranks
//! inside this one process; nothing is launched.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use spmv_core::io::{
    export_matrix_market, export_vector_market, import_matrix_market, parse_fixture, read_fixture,
    read_vector_market, write_fixture, XSource, ZPolicy,
};
use spmv_core::verify::verify_all;
use spmv_core::{
    check_pass, generate, paper_fixture, residual_sq, run_distributed, spmv_seq, DistOptions,
    ExecMode, Fill, FixtureF64, GenParams, IntRange,
};

const SUCCESS_LINE: &str = "Succeeded in computing y = Ax";

#[derive(Parser)]
#[command(
    name = "spmv",
    version,
    about = "CSR sparse matrix-vector multiplication with a simulated distributed run"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random fixture, or the bundled 32 x 36 reference problem.
    #[command(group(ArgGroup::new("fill").args(["nnz", "row_fill"])))]
    Gen {
        /// Emit the bundled reference problem instead of a random one.
        #[arg(long, conflicts_with_all = ["rows", "cols", "nnz", "row_fill", "seed"])]
        paper: bool,
        #[arg(long, required_unless_present = "paper")]
        rows: Option<usize>,
        #[arg(long, required_unless_present = "paper")]
        cols: Option<usize>,
        /// Exact number of entries.
        #[arg(long)]
        nnz: Option<usize>,
        /// Maximum number of entries per row.
        #[arg(long)]
        row_fill: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Matrix value range, e.g. 1..=11.
        #[arg(long, default_value = "1..=11")]
        values: IntRange,
        /// x value range, e.g. 1..=9.
        #[arg(long, default_value = "1..=9")]
        x_range: IntRange,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiply and compare against the fixture's ground truth.
    Run {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Seq)]
        mode: Mode,
        /// Simulated rank count for --mode dist.
        #[arg(long, default_value_t = 1)]
        ranks: usize,
        /// Print one line per collective participant.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Engine::Parallel)]
        engine: Engine,
    },
    /// Run every sequential and distributed check and print the report.
    Verify {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        ranks_list: Vec<usize>,
        /// Explicit per-rank row counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        row_sizes: Option<Vec<usize>>,
        /// Explicit per-rank column counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        col_sizes: Option<Vec<usize>>,
        /// One JSON record per check instead of text.
        #[arg(long)]
        json: bool,
        #[arg(long, value_enum, default_value_t = Engine::Parallel)]
        engine: Engine,
    },
    /// Convert between the fixture format and Matrix Market.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Companion x vector (Matrix Market array) when reading a matrix.
        #[arg(long)]
        x: Option<PathBuf>,
        /// Seed for a generated x when no companion vector is given.
        #[arg(long, default_value_t = 0)]
        x_seed: u64,
        /// Compute z with the dense oracle when reading a matrix.
        #[arg(long)]
        derive_z: bool,
        /// Where to write x when exporting Matrix Market.
        #[arg(long)]
        x_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Seq,
    Dist,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Parallel,
    Sequential,
}

impl From<Engine> for ExecMode {
    fn from(e: Engine) -> Self {
        match e {
            Engine::Parallel => ExecMode::Parallel,
            Engine::Sequential => ExecMode::Sequential,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Fixture,
    Matrixmarket,
}

type CliResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen {
            paper,
            rows,
            cols,
            nnz,
            row_fill,
            seed,
            values,
            x_range,
            out,
        } => cmd_gen(paper, rows, cols, nnz, row_fill, seed, values, x_range, out),
        Command::Run {
            fixture,
            mode,
            ranks,
            trace,
            engine,
        } => cmd_run(&fixture, mode, ranks, trace, engine),
        Command::Verify {
            fixture,
            ranks_list,
            row_sizes,
            col_sizes,
            json,
            engine,
        } => cmd_verify(&fixture, &ranks_list, row_sizes, col_sizes, json, engine),
        Command::Convert {
            input,
            out,
            format,
            x,
            x_seed,
            derive_z,
            x_out,
        } => cmd_convert(&input, &out, format, x, x_seed, derive_z, x_out),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, String> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Loads a fixture whose structure is sound but whose ground truth may be
/// wrong, so a bad `z` surfaces as a numerical failure rather than a load
/// error.
fn load_for_checking(path: &Path) -> Result<FixtureF64, String> {
    let fixture: FixtureF64 =
        parse_fixture(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    fixture
        .check_structure()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(fixture)
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    paper: bool,
    rows: Option<usize>,
    cols: Option<usize>,
    nnz: Option<usize>,
    row_fill: Option<usize>,
    seed: u64,
    values: IntRange,
    x_range: IntRange,
    out: Option<PathBuf>,
) -> CliResult {
    let fixture: FixtureF64 = if paper {
        paper_fixture()
    } else {
        let (rows, cols) = (rows.unwrap_or(0), cols.unwrap_or(0));
        let fill = match (nnz, row_fill) {
            (Some(k), _) => Fill::Nnz(k),
            (None, Some(k)) => Fill::MaxPerRow(k),
            (None, None) => Fill::Nnz((rows * cols).div_ceil(20)),
        };
        let params = GenParams {
            values,
            x: x_range,
            ..GenParams::new(rows, cols, fill, seed)
        };
        generate(&params).map_err(|e| e.to_string())?
    };
    match out {
        Some(path) => write_fixture(&fixture, create(&path)?).map_err(|e| e.to_string())?,
        None => write_fixture(&fixture, io::stdout().lock()).map_err(|e| e.to_string())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(path: &Path, mode: Mode, ranks: usize, trace: bool, engine: Engine) -> CliResult {
    let fixture = load_for_checking(path)?;
    let norm = match mode {
        Mode::Seq => {
            let y = spmv_seq(&fixture.matrix, &fixture.x_vector()).map_err(|e| e.to_string())?;
            residual_sq(&y, &fixture.z_vector()).map_err(|e| e.to_string())?
        }
        Mode::Dist => {
            let opts = DistOptions::new(ranks).with_mode(engine.into());
            let report = run_distributed(&fixture, &opts).map_err(|e| e.to_string())?;
            if trace {
                print!("{}", report.trace.to_text());
            }
            report.residual_sq
        }
    };
    if check_pass(norm) {
        println!("{SUCCESS_LINE}");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("Error in computing y = Ax, with norm = {norm}");
        Ok(ExitCode::from(1))
    }
}

fn cmd_verify(
    path: &Path,
    ranks_list: &[usize],
    row_sizes: Option<Vec<usize>>,
    col_sizes: Option<Vec<usize>>,
    json: bool,
    engine: Engine,
) -> CliResult {
    if ranks_list.contains(&0) {
        return Err("rank counts must be at least 1".into());
    }
    let fixture = load_for_checking(path)?;
    let template = DistOptions {
        ranks: 1,
        row_sizes,
        col_sizes,
        mode: engine.into(),
    };
    let report = verify_all(&fixture, ranks_list, &template);
    if json {
        print!("{}", report.to_json_lines());
    } else {
        println!("{report}");
    }
    Ok(if report.overall() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn is_matrix_market(path: &Path) -> Result<bool, String> {
    let mut head = [0u8; 14];
    let mut file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let n = file.read(&mut head).map_err(|e| e.to_string())?;
    Ok(head[..n].eq_ignore_ascii_case(b"%%MatrixMarket"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_convert(
    input: &Path,
    out: &Path,
    format: Format,
    x: Option<PathBuf>,
    x_seed: u64,
    derive_z: bool,
    x_out: Option<PathBuf>,
) -> CliResult {
    let fixture: FixtureF64 = if is_matrix_market(input)? {
        if !derive_z {
            return Err("reading a Matrix Market matrix needs --derive-z".into());
        }
        let x_source = match x {
            Some(p) => XSource::Provided(read_vector_market(open(&p)?).map_err(|e| e.to_string())?),
            None => XSource::Generate {
                range: IntRange::new(1, 9),
                seed: x_seed,
            },
        };
        import_matrix_market(open(input)?, x_source, ZPolicy::Derive).map_err(|e| e.to_string())?
    } else {
        read_fixture(open(input)?).map_err(|e| format!("{}: {e}", input.display()))?
    };

    match format {
        Format::Fixture => write_fixture(&fixture, create(out)?).map_err(|e| e.to_string())?,
        Format::Matrixmarket => {
            export_matrix_market(&fixture, create(out)?).map_err(|e| e.to_string())?;
            if let Some(p) = x_out {
                export_vector_market(&fixture.x, create(&p)?).map_err(|e| e.to_string())?;
            }
        }
    }
    io::stdout().flush().ok();
    Ok(ExitCode::SUCCESS)
}
