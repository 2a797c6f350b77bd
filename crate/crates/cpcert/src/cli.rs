//! Command-line front end.
//!
//! Five subcommands: `classify`, `factorize`, `sample`, `verify`, `graph`.
//! Inputs come from `--input` (path or `-` for stdin) in JSON or CSV;
//! outputs are machine-readable JSON on stdout, one line per instance.
//! Batch inputs are JSON Lines: when the input text is not a single JSON
//! value, every non-empty line is one instance, and outputs keep input
//! order regardless of `--jobs`.
//!
//! Exit codes: 0 for definite verdicts (certified, refuted, verified),
//! 3 for honest negatives (unknown CP status, failed factorization,
//! failed verification), 2 for errors, with a single-line JSON error
//! object on stderr.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::choi::from_block_form;
use crate::classify::classify_channel;
use crate::cpfact::{factor_auto, verify_certificate, FactorParams};
use crate::error::{Error, Result};
use crate::graph::{ColoringOutcome, SupportGraph};
use crate::io::{
    factor_outcome_json, read_matrix, ChannelJson, CertificateJson, ErrorJson, MatrixJson,
    ReportJson, TextFormat, VerifyJobJson, VerifyReportJson,
};
use crate::matcore::ToleranceConfig;
use crate::sampler::{
    sample_blockform_channel, sample_cp, sample_dnn, sample_forest_dnn, sample_kraus_channel,
    SampleParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cpcert",
    version,
    about = "Cone membership and completely positive factorization certificates for Choi matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a channel: trace preservation, DNN membership, CP status.
    Classify(ClassifyArgs),
    /// Factor a DNN matrix into a nonnegative rank-one certificate.
    Factorize(CommonArgs),
    /// Generate seeded random instances.
    Sample(SampleArgs),
    /// Verify a certificate against its target matrix.
    Verify(CommonArgs),
    /// Export the support graph of a matrix as DOT text.
    Graph(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for TextFormat {
    fn from(f: Format) -> TextFormat {
        match f {
            Format::Json => TextFormat::Json,
            Format::Csv => TextFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input path, or "-" for stdin.
    #[arg(long, default_value = "-")]
    input: String,

    /// Input format. CSV is supported for plain matrices only.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Max allowed input asymmetry.
    #[arg(long)]
    eps_sym: Option<f64>,

    /// Relative eigenvalue floor for the PSD test.
    #[arg(long)]
    eps_psd: Option<f64>,

    /// Entry floor for nonnegativity tests.
    #[arg(long)]
    eps_nonneg: Option<f64>,

    /// Support/edge threshold.
    #[arg(long)]
    eps_zero: Option<f64>,

    /// Certificate residual bound.
    #[arg(long)]
    eps_residual: Option<f64>,

    /// Seed for the iterative engines (and generators in `sample`).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Iteration cap for the iterative engines.
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,

    /// Restarts of the alternating projection engine.
    #[arg(long, default_value_t = 20)]
    restarts: usize,

    /// Column count for alternating projection (default 2r + |edges|).
    #[arg(long)]
    columns: Option<usize>,

    /// Worker threads for batch inputs. Output order is input order
    /// either way.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Suppress warnings on stderr.
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

impl CommonArgs {
    fn tolerances(&self) -> Result<ToleranceConfig> {
        let mut tol = ToleranceConfig::default();
        if let Some(v) = self.eps_sym {
            tol.eps_sym = v;
        }
        if let Some(v) = self.eps_psd {
            tol.eps_psd = v;
        }
        if let Some(v) = self.eps_nonneg {
            tol.eps_nonneg = v;
        }
        if let Some(v) = self.eps_zero {
            tol.eps_zero = v;
        }
        if let Some(v) = self.eps_residual {
            tol.eps_residual = v;
        }
        tol.validate()?;
        Ok(tol)
    }

    fn factor_params(&self) -> FactorParams {
        FactorParams {
            max_iter: self.max_iter,
            restarts: self.restarts,
            columns: self.columns,
            seed: self.seed,
        }
    }

    fn read_input(&self, stdin: &mut dyn Read) -> Result<String> {
        if self.input == "-" {
            let mut text = String::new();
            stdin.read_to_string(&mut text)?;
            Ok(text)
        } else {
            Ok(fs::read_to_string(&self.input)?)
        }
    }
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Input dimension when reading a bare CSV matrix as a Choi matrix
    /// (m is then inferred as dim / n).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleKind {
    /// Trace-normalized bipartite block-form channel (emitted as a
    /// qubit-output channel).
    Blockform,
    /// Explicit CP Gram sum with its generating certificate.
    Cp,
    /// Random doubly nonnegative matrix.
    Dnn,
    /// DNN matrix with forest support.
    Forest,
    /// Random isometry channel in Kraus form (generally complex).
    Kraus,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,

    #[arg(long, value_enum)]
    kind: SampleKind,

    /// Input dimension (blockform, kraus).
    #[arg(long, default_value_t = 2)]
    n: usize,

    /// Output dimension (kraus).
    #[arg(long, default_value_t = 2)]
    m: usize,

    /// Matrix dimension (cp, dnn, forest).
    #[arg(long, default_value_t = 4)]
    r: usize,

    /// Number of Gram vectors (cp).
    #[arg(long, default_value_t = 6)]
    s: usize,

    /// Number of Kraus operators (kraus).
    #[arg(long, default_value_t = 2)]
    k: usize,

    /// Instances to emit, one JSON line each.
    #[arg(long, default_value_t = 1)]
    count: usize,

    /// Edge/entry density in [0,1].
    #[arg(long, default_value_t = 0.5)]
    density: f64,

    /// Probability of pushing an instance onto the PSD boundary.
    #[arg(long, default_value_t = 0.0)]
    boundary_bias: f64,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(
    args: impl IntoIterator<Item = String>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{err}");
                    EXIT_OK
                }
                _ => {
                    let parse = Error::Parse(err.to_string().replace('\n', " "));
                    let _ = writeln!(stderr, "{}", ErrorJson::from_error(&parse).to_line());
                    EXIT_ERROR
                }
            };
        }
    };
    match dispatch(cli, stdin) {
        Ok((exit, output, warnings)) => {
            let _ = stdout.write_all(output.as_bytes());
            if !warnings.is_empty() {
                let _ = stderr.write_all(warnings.as_bytes());
            }
            exit
        }
        Err(err) => {
            let _ = writeln!(stderr, "{}", ErrorJson::from_error(&err).to_line());
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli, stdin: &mut dyn Read) -> Result<(i32, String, String)> {
    match cli.command {
        Command::Classify(args) => run_classify(args, stdin),
        Command::Factorize(common) => run_factorize(common, stdin),
        Command::Sample(args) => run_sample(args),
        Command::Verify(common) => run_verify(common, stdin),
        Command::Graph(common) => run_graph(common, stdin),
    }
}

/// Splits input text into instances: a single JSON value is one instance,
/// otherwise every non-empty line is one (JSON Lines).
fn batch_lines(text: &str) -> Vec<&str> {
    if serde_json::from_str::<serde_json::Value>(text).is_ok() {
        return vec![text.trim()];
    }
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .collect()
}

/// Runs `work` over the instances on `jobs` threads, preserving input
/// order in the output.
fn parallel_map<T: Send>(
    instances: &[&str],
    jobs: usize,
    work: impl Fn(usize, &str) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let jobs = jobs.max(1).min(instances.len().max(1));
    if jobs == 1 {
        return instances
            .iter()
            .enumerate()
            .map(|(index, line)| work(index, line))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<T>>>> =
        (0..instances.len()).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= instances.len() {
                    break;
                }
                let outcome = work(index, instances[index]);
                *results[index].lock().expect("result slot") = Some(outcome);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().expect("result slot").expect("slot filled"))
        .collect()
}

fn write_output(args: &CommonArgs, text: &str) -> Result<()> {
    if let Some(path) = &args.output {
        fs::write(path, text)?;
    }
    Ok(())
}

fn finish(args: &CommonArgs, exit: i32, body: String, warnings: String) -> Result<(i32, String, String)> {
    if args.output.is_some() {
        write_output(args, &body)?;
        Ok((exit, String::new(), warnings))
    } else {
        Ok((exit, body, warnings))
    }
}

fn parse_channel(
    line: &str,
    format: TextFormat,
    forced_n: Option<usize>,
    tol: &ToleranceConfig,
) -> Result<crate::choi::ChoiMatrix> {
    match format {
        TextFormat::Json => {
            let channel: ChannelJson =
                serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
            channel.to_choi(tol)
        }
        TextFormat::Csv => {
            let matrix = crate::io::matrix_from_csv(line, tol)?;
            let n = forced_n.ok_or_else(|| {
                Error::Parse("CSV channel input requires --n to fix the input dimension".into())
            })?;
            if n == 0 || matrix.dim() % n != 0 {
                return Err(Error::Parse(format!(
                    "matrix dimension {} is not divisible by n = {n}",
                    matrix.dim()
                )));
            }
            crate::choi::ChoiMatrix::new(n, matrix.dim() / n, matrix)
        }
    }
}

fn run_classify(args: ClassifyArgs, stdin: &mut dyn Read) -> Result<(i32, String, String)> {
    let tol = args.common.tolerances()?;
    let params = args.common.factor_params();
    let text = args.common.read_input(stdin)?;
    let instances = batch_lines(&text);
    if instances.is_empty() {
        return Err(Error::Parse("no input instances".into()));
    }
    // CSV batches are ambiguous (a CSV matrix spans several lines), so CSV
    // input is treated as a single instance.
    let instances = if args.common.format == Format::Csv {
        vec![text.as_str()]
    } else {
        instances
    };
    let reports = parallel_map(&instances, args.common.jobs, |_, line| {
        let choi = parse_channel(line, args.common.format.into(), args.n, &tol)?;
        let report = classify_channel(&choi, &tol, &params)?;
        Ok(ReportJson::from_report(&report))
    })?;
    let mut exit = EXIT_OK;
    let mut body = String::new();
    for report in &reports {
        if report.cp_status == "unknown" {
            exit = EXIT_UNKNOWN;
        }
        body.push_str(&serde_json::to_string(report).expect("report serializes"));
        body.push('\n');
    }
    finish(&args.common, exit, body, String::new())
}

fn run_factorize(common: CommonArgs, stdin: &mut dyn Read) -> Result<(i32, String, String)> {
    let tol = common.tolerances()?;
    let params = common.factor_params();
    let text = common.read_input(stdin)?;
    let instances = if common.format == Format::Csv {
        vec![text.as_str()]
    } else {
        batch_lines(&text)
    };
    if instances.is_empty() {
        return Err(Error::Parse("no input instances".into()));
    }
    let outcomes = parallel_map(&instances, common.jobs, |_, line| {
        let matrix = read_matrix(line, common.format.into(), &tol)?;
        factor_auto(&matrix, &tol, &params)
    })?;
    let mut exit = EXIT_OK;
    let mut body = String::new();
    for outcome in &outcomes {
        if !outcome.is_certified() {
            exit = EXIT_UNKNOWN;
        }
        body.push_str(
            &serde_json::to_string(&factor_outcome_json(outcome)).expect("outcome serializes"),
        );
        body.push('\n');
    }
    finish(&common, exit, body, String::new())
}

fn run_verify(common: CommonArgs, stdin: &mut dyn Read) -> Result<(i32, String, String)> {
    if common.format == Format::Csv {
        return Err(Error::Parse(
            "verify requires JSON input ({\"matrix\": …, \"certificate\": …})".into(),
        ));
    }
    let tol = common.tolerances()?;
    let text = common.read_input(stdin)?;
    let instances = batch_lines(&text);
    if instances.is_empty() {
        return Err(Error::Parse("no input instances".into()));
    }
    let reports = parallel_map(&instances, common.jobs, |_, line| {
        let job: VerifyJobJson =
            serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        let matrix = job.matrix.to_matrix(&tol)?;
        let cert = job.certificate.to_certificate()?;
        let (verified, residual) = verify_certificate(&matrix, &cert, &tol)?;
        Ok(VerifyReportJson {
            verified,
            residual,
            eps_residual: tol.eps_residual,
            min_entry: cert.min_entry().min(f64::MAX),
        })
    })?;
    let mut exit = EXIT_OK;
    let mut body = String::new();
    for report in &reports {
        if !report.verified {
            exit = EXIT_UNKNOWN;
        }
        body.push_str(&serde_json::to_string(report).expect("report serializes"));
        body.push('\n');
    }
    finish(&common, exit, body, String::new())
}

fn run_graph(common: CommonArgs, stdin: &mut dyn Read) -> Result<(i32, String, String)> {
    let tol = common.tolerances()?;
    let text = common.read_input(stdin)?;
    let instances = if common.format == Format::Csv {
        vec![text.as_str()]
    } else {
        batch_lines(&text)
    };
    if instances.is_empty() {
        return Err(Error::Parse("no input instances".into()));
    }
    let mut body = String::new();
    let mut warnings = String::new();
    for line in instances {
        let matrix = read_matrix(line, common.format.into(), &tol)?;
        let graph = SupportGraph::from_matrix(&matrix, tol.eps_zero);
        match graph.two_coloring() {
            ColoringOutcome::Colored(coloring) => {
                body.push_str(&graph.to_dot(Some(&coloring)));
            }
            ColoringOutcome::OddCycle(cycle) => {
                if !common.quiet {
                    warnings.push_str(&format!(
                        "support graph is not bipartite (odd cycle {cycle:?}); emitting DOT without ranks\n"
                    ));
                }
                body.push_str(&graph.to_dot(None));
            }
        }
    }
    finish(&common, EXIT_OK, body, warnings)
}

fn run_sample(args: SampleArgs) -> Result<(i32, String, String)> {
    let tol = args.common.tolerances()?;
    if !(0.0..=1.0).contains(&args.density) {
        return Err(Error::Parse("--density must lie in [0,1]".into()));
    }
    if !(0.0..=1.0).contains(&args.boundary_bias) {
        return Err(Error::Parse("--boundary-bias must lie in [0,1]".into()));
    }
    let base = SampleParams {
        seed: args.common.seed,
        density: args.density,
        boundary_bias: args.boundary_bias,
    };
    let mut body = String::new();
    for index in 0..args.count {
        // Independent sub-seed per instance keeps batch output
        // schedule-independent.
        let p = base.with_seed(base.seed.wrapping_add(index as u64));
        let value = match args.kind {
            SampleKind::Blockform => {
                let bf = sample_blockform_channel(args.n, &p);
                let choi = from_block_form(&bf);
                serde_json::to_value(ChannelJson::from_choi(&choi)).expect("serializes")
            }
            SampleKind::Cp => {
                let (matrix, cert) = sample_cp(args.r, args.s, &p);
                let job = VerifyJobJson {
                    matrix: MatrixJson::from_matrix(&matrix),
                    certificate: CertificateJson::from_certificate(&cert, "sampled"),
                };
                serde_json::to_value(job).expect("serializes")
            }
            SampleKind::Dnn => {
                let matrix = sample_dnn(args.r, &p)?;
                serde_json::to_value(MatrixJson::from_matrix(&matrix)).expect("serializes")
            }
            SampleKind::Forest => {
                let (matrix, _) = sample_forest_dnn(args.r, &p);
                serde_json::to_value(MatrixJson::from_matrix(&matrix)).expect("serializes")
            }
            SampleKind::Kraus => {
                let kraus = sample_kraus_channel(args.n, args.m, args.k, &p)?;
                serde_json::to_value(ChannelJson::from_kraus_ops(args.n, args.m, &kraus))
                    .expect("serializes")
            }
        };
        if args.common.format == Format::Csv {
            // CSV output only makes sense for bare matrices.
            match args.kind {
                SampleKind::Dnn | SampleKind::Forest => {
                    let matrix: MatrixJson =
                        serde_json::from_value(value).expect("matrix value parses back");
                    body.push_str(&crate::io::matrix_to_csv(&matrix.to_matrix(&tol)?));
                    body.push('\n');
                }
                _ => {
                    return Err(Error::Parse(
                        "CSV output is only supported for matrix-valued samples (dnn, forest)"
                            .into(),
                    ))
                }
            }
        } else {
            body.push_str(&serde_json::to_string(&value).expect("serializes"));
            body.push('\n');
        }
    }
    finish(&args.common, EXIT_OK, body, String::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str], input: &str) -> (i32, String, String) {
        let mut stdin = std::io::Cursor::new(input.as_bytes().to_vec());
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv: Vec<String> = std::iter::once("cpcert".to_string())
            .chain(args.iter().map(|s| s.to_string()))
            .collect();
        let code = run(argv, &mut stdin, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    const IDENTITY_CHANNEL: &str = r#"{"n":2,"m":2,"choi":{"r":4,"entries":[1,0,0,1,0,0,0,0,0,0,0,0,1,0,0,1]}}"#;

    #[test]
    fn classify_identity_is_certified() {
        let (code, out, _) = run_cli(&["classify"], IDENTITY_CHANNEL);
        assert_eq!(code, EXIT_OK);
        let report: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(report["cp_status"], "certified");
        assert_eq!(report["is_trace_preserving"], true);
    }

    #[test]
    fn classify_negative_entry_choi_is_refuted() {
        // A 2x2 matrix with a negative entry wrapped as an (n=1, m=2) Choi.
        let input = r#"{"n":1,"m":2,"choi":{"r":2,"entries":[1,-0.1,-0.1,1]}}"#;
        let (code, out, _) = run_cli(&["classify"], input);
        assert_eq!(code, EXIT_OK);
        let report: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(report["cp_status"], "refuted");
        assert_eq!(report["refutation"]["reason"], "negative_entry");
    }

    #[test]
    fn malformed_input_exits_2_with_error_object() {
        let (code, _, err) = run_cli(&["classify"], "{not json");
        assert_eq!(code, EXIT_ERROR);
        let error: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(error["error"], "parse");
    }

    #[test]
    fn unknown_flag_is_an_error() {
        let (code, _, err) = run_cli(&["classify", "--does-not-exist"], "");
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("parse"));
    }

    #[test]
    fn factorize_forest_matrix() {
        let input = r#"{"r":3,"entries":[1,0.6,0,0.6,1,0.6,0,0.6,1]}"#;
        let (code, out, _) = run_cli(&["factorize"], input);
        assert_eq!(code, EXIT_OK);
        let cert: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(cert["strategy"], "forest");
        assert_eq!(cert["r"], 3);
    }

    #[test]
    fn factorize_non_dnn_exits_3() {
        let input = r#"{"r":2,"entries":[1,-0.1,-0.1,1]}"#;
        let (code, out, _) = run_cli(&["factorize"], input);
        assert_eq!(code, EXIT_UNKNOWN);
        let failure: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(failure["status"], "failed");
        assert_eq!(failure["note"], "not_dnn");
    }

    #[test]
    fn verify_round_trip() {
        let input = r#"{"matrix":{"r":4,"entries":[1,0,0,1,0,0,0,0,0,0,0,0,1,0,0,1]},"certificate":{"r":4,"vectors":[[1,0,0,1]],"residual":0.0,"strategy":"manual"}}"#;
        let (code, out, _) = run_cli(&["verify"], input);
        assert_eq!(code, EXIT_OK);
        let report: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(report["verified"], true);
        assert_eq!(report["residual"], 0.0);
    }

    #[test]
    fn verify_rejects_corrupted_certificate() {
        let input = r#"{"matrix":{"r":4,"entries":[1,0,0,1,0,0,0,0,0,0,0,0,1,0,0,1]},"certificate":{"r":4,"vectors":[[1,0,0,0]],"residual":0.0,"strategy":"manual"}}"#;
        let (code, out, _) = run_cli(&["verify"], input);
        assert_eq!(code, EXIT_UNKNOWN);
        let report: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(report["verified"], false);
    }

    #[test]
    fn graph_emits_dot_with_ranks() {
        let input = r#"{"r":2,"entries":[1,0.5,0.5,1]}"#;
        let (code, out, _) = run_cli(&["graph"], input);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("1 -- 2"));
        assert!(out.contains("rank=same"));
    }

    #[test]
    fn sample_blockform_then_classify_round_trip() {
        let (code, out, _) = run_cli(
            &[
                "sample",
                "--kind",
                "blockform",
                "--n",
                "3",
                "--count",
                "4",
                "--seed",
                "9",
                "--density",
                "0.7",
            ],
            "",
        );
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 4);

        let (code, out2, _) = run_cli(&["classify"], &out);
        assert_eq!(code, EXIT_OK);
        for line in out2.lines() {
            let report: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(report["cp_status"], "certified");
        }
    }

    #[test]
    fn sample_cp_feeds_verify() {
        let (code, out, _) = run_cli(
            &["sample", "--kind", "cp", "--r", "5", "--s", "7", "--seed", "3"],
            "",
        );
        assert_eq!(code, EXIT_OK);
        let (code, out2, _) = run_cli(&["verify"], &out);
        assert_eq!(code, EXIT_OK);
        let report: serde_json::Value = serde_json::from_str(out2.trim()).unwrap();
        assert_eq!(report["verified"], true);
    }

    #[test]
    fn csv_matrix_input_works() {
        let (code, out, _) = run_cli(&["factorize", "--format", "csv"], "4,0\n0,9\n");
        assert_eq!(code, EXIT_OK);
        let cert: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(cert["strategy"], "forest");
    }

    #[test]
    fn csv_classify_requires_n() {
        let (code, _, err) = run_cli(&["classify", "--format", "csv"], "1,0\n0,1\n");
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("--n"));
    }

    #[test]
    fn batch_jobs_preserve_order() {
        let lines: Vec<String> = (0..6)
            .map(|k| {
                format!(
                    r#"{{"n":1,"m":2,"choi":{{"r":2,"entries":[{},0,0,{}]}}}}"#,
                    0.25 * k as f64 / 8.0,
                    1.0 - 0.25 * k as f64 / 8.0
                )
            })
            .collect();
        let input = lines.join("\n");
        let (code1, sequential, _) = run_cli(&["classify", "--jobs", "1"], &input);
        let (code4, parallel, _) = run_cli(&["classify", "--jobs", "4"], &input);
        assert_eq!(code1, EXIT_OK);
        assert_eq!(code4, EXIT_OK);
        let verdicts = |text: &str| -> Vec<(String, String)> {
            text.lines()
                .map(|line| {
                    let v: serde_json::Value = serde_json::from_str(line).unwrap();
                    (
                        v["cp_status"].as_str().unwrap().to_string(),
                        v["certificate"]["residual"].to_string(),
                    )
                })
                .collect()
        };
        assert_eq!(verdicts(&sequential), verdicts(&parallel));
    }
}
