use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fpprep::bench::{
    self, parse_d_range, ColumnSelector, ReportFormat, RunConfig, VerifyOutcome, DEFAULT_LIMIT,
};
use fpprep::codec;
use fpprep::fp::shared_bits;
use fpprep::gd::{gd_compress, gd_decompress, GdArchive, GD_MAGIC};
use fpprep::transforms::{self, Params, Technique, TransformOptions};

#[derive(Parser)]
#[command(
    name = "fpprep",
    version,
    about = "Lossless f64 preprocessing for shared-bit compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Column name, or zero-based index.
    #[arg(long)]
    column: ColumnSelector,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
}

#[derive(Args)]
struct GridArgs {
    /// One or more of bins, mulshift, evenodd, evenness; all by default.
    #[arg(long, value_delimiter = ',')]
    technique: Vec<Technique>,
    /// Inclusive range `A:B` of D, or a single value.
    #[arg(long, default_value = "1:52", value_parser = parse_d_range)]
    d_range: (u32, u32),
    /// Comma-separated bin counts for the bins technique.
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_BINS_K)]
    bins_k: Vec<usize>,
    /// Check the lossless predicate before every arithmetic step.
    #[arg(long)]
    checked: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Read a column and summarize it.
    IngestCheck {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Sweep techniques and parameters and write a report.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Report path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Fill the wall_ms column.
        #[arg(long)]
        timing: bool,
    },
    /// Round-trip every grid point through the container and report mismatches.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Transform a column and write the container.
    Compress {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        technique: Technique,
        #[arg(long)]
        d: u32,
        /// Bin count, bins only.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        output: PathBuf,
        /// Also write a shared-bit archive of the transformed values.
        #[arg(long)]
        gd_output: Option<PathBuf>,
    },
    /// Restore values from a container or a shared-bit archive.
    Decompress {
        #[arg(long)]
        input: PathBuf,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::IngestCheck { input } => ingest_check(&input),
        Command::Sweep {
            input,
            grid,
            format,
            output,
            timing,
        } => {
            let mut config = config(&input, &grid);
            config.format = format;
            config.output = output;
            config.timing = timing;
            sweep(&config)
        }
        Command::Verify { input, grid } => verify(&config(&input, &grid)),
        Command::Compress {
            input,
            technique,
            d,
            k,
            output,
            gd_output,
        } => compress(&input, technique, d, k, &output, gd_output.as_deref()),
        Command::Decompress { input, output } => decompress(&input, output.as_deref()),
    }
}

fn config(input: &InputArgs, grid: &GridArgs) -> RunConfig {
    let mut c = RunConfig::new(&input.input, input.column.clone());
    c.limit = input.limit;
    if !grid.technique.is_empty() {
        c.techniques = grid.technique.clone();
    }
    c.d_range = grid.d_range;
    c.bins_k = grid.bins_k.clone();
    c.checked = grid.checked;
    c
}

fn read_values(input: &InputArgs) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    if input.limit == 0 {
        return Err("row limit must be at least 1".into());
    }
    Ok(bench::ingest_path(&input.input, &input.column, input.limit)?)
}

fn ingest_check(input: &InputArgs) -> CliResult {
    let values = read_values(input)?;
    let s = shared_bits(&values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("rows: {}", values.len());
    println!("min: {min}");
    println!("max: {max}");
    println!(
        "shared bits: sign {} exponent {} mantissa {} total {}",
        s.s_sign, s.s_e, s.s_m, s.s_tot
    );
    Ok(ExitCode::SUCCESS)
}

fn sweep(config: &RunConfig) -> CliResult {
    let report = bench::sweep(config)?;
    let bytes = report.to_bytes(config.format)?;
    match &config.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(config: &RunConfig) -> CliResult {
    config.validate()?;
    let values = bench::ingest(config)?;
    let opts = TransformOptions {
        checked: config.checked,
        ..Default::default()
    };
    let (mut pass, mut skipped, mut failed) = (0usize, 0usize, 0usize);
    for params in config.grid() {
        match bench::verify(&values, params, &opts) {
            VerifyOutcome::Pass => pass += 1,
            VerifyOutcome::Skipped { .. } => skipped += 1,
            VerifyOutcome::Fail(m) => {
                failed += 1;
                println!("FAIL {} {params}: {m}", params.technique());
            }
        }
    }
    println!("{pass} passed, {skipped} skipped, {failed} failed");
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn compress(
    input: &InputArgs,
    technique: Technique,
    d: u32,
    k: usize,
    output: &Path,
    gd_output: Option<&Path>,
) -> CliResult {
    let params = match technique {
        Technique::Bins => Params::Bins { k, d },
        Technique::MulShift => Params::MulShift { d },
        Technique::EvenOdd => Params::EvenOdd { d },
        Technique::Evenness => Params::Evenness { d },
        Technique::Identity => return Err("identity is not a compress technique".into()),
    };
    let values = read_values(input)?;
    let pd = transforms::forward(&values, params)?;
    std::fs::write(output, codec::encode(&pd))?;
    let meta = codec::metadata_size_bytes(&pd);
    println!(
        "{} {params}: {} values, {} metadata bytes",
        pd.technique(),
        values.len(),
        meta
    );
    if let Some(path) = gd_output {
        let archive = gd_compress(&pd.values)?;
        std::fs::write(path, archive.to_bytes())?;
        println!(
            "archive: {} bytes, deviation width {}",
            archive.encoded_len(),
            archive.deviation_width
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn decompress(input: &Path, output: Option<&Path>) -> CliResult {
    let bytes = std::fs::read(input)?;
    let values = if bytes.starts_with(&GD_MAGIC) {
        gd_decompress(&GdArchive::from_bytes(&bytes)?)?
    } else {
        transforms::inverse(&codec::decode(&bytes)?)?
    };
    let mut text = String::from("value\n");
    for v in &values {
        text.push_str(&format!("{v:?}\n"));
    }
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}
