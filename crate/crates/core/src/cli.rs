//! Command-line front end.
//!
//! [`run`] parses arguments, performs one subcommand and returns the exit
//! status: 0 on success, 1 on input or validation errors, 2 when the
//! requested cluster count cannot be satisfied. Primary output is buffered
//! and only written once the subcommand has succeeded, so a failing run
//! leaves the output stream untouched.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dissimilarity::DissimilarityPolicy;
use crate::error::{Error, Result};
use crate::kmodes::{
    elbow_scan, fit, select_k, ClusterModel, FitConfig, InitStrategy, ModelDocument,
    DEFAULT_EPSILON,
};
use crate::report::{
    emit_report, format_3dp, fuse_profiles, label_clusters, mean_profile_percentages,
    personality_percentages, Emittable, PercentReport, ReportFormat,
};
use crate::survey::{
    generate_synthetic, parse_responses, score_table, uniform_mixture, MissingPolicy,
    ParsedResponses, SurveySchema, PRESETS,
};

#[derive(Debug, Parser)]
#[command(
    name = "ocean-kmodes",
    version,
    about = "K-modes clustering and Big Five trait reports for Likert questionnaires"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster responses and write the model document.
    Fit(FitCmd),
    /// Scan a range of k, print the WCD curve and the selected k.
    Elbow(ElbowCmd),
    /// Score every respondent on the schema's dimensions.
    Score(ScoreCmd),
    /// Cluster, label clusters and emit population trait percentages.
    Report(ReportCmd),
    /// Combine two percentage reports.
    Fuse(FuseCmd),
    /// Generate synthetic responses.
    Gen(GenCmd),
    /// Validate and print a schema, or list the presets.
    Schema(SchemaCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Simple,
    Weighted,
    Mixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Random,
    Density,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MissingArg {
    Drop,
    Impute,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    Share,
    Mean,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Response file; `-` or absent reads standard input.
    pub input: Option<PathBuf>,
    /// Preset name or path to a schema document.
    #[arg(long, default_value = "ocean50")]
    pub schema: String,
    /// Field delimiter: a single character, or `tab`.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    #[arg(long, value_enum, default_value = "drop")]
    pub missing: MissingArg,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    #[arg(long, value_enum, default_value = "simple")]
    pub policy: PolicyArg,
    /// `auto` or a non-negative number; mixed policy only.
    #[arg(long, default_value = "auto")]
    pub gamma: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub init: InitArg,
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Write primary output here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct ElbowCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    #[arg(long)]
    pub k_max: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// `text` or `json`.
    #[arg(long, default_value = "text")]
    pub format: String,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct ScoreCmd {
    #[command(flatten)]
    pub input: InputArgs,
    /// `text` (delimited table) or `json`.
    #[arg(long, default_value = "text")]
    pub format: String,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct ReportCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    /// Cluster count; not needed with `--model`.
    #[arg(long, required_unless_present = "model")]
    pub k: Option<usize>,
    /// Reuse a model document written by `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "share")]
    pub aggregate: AggregateArg,
    /// Emit the per-cluster labeling instead of the percentage report.
    #[arg(long)]
    pub labels: bool,
    #[arg(long, default_value = "json")]
    pub format: String,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct FuseCmd {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Weight of the first report.
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
    #[arg(long, default_value = "json")]
    pub format: String,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct GenCmd {
    #[arg(long, default_value = "ocean50")]
    pub schema: String,
    #[arg(long)]
    pub n: usize,
    /// `uniform` or comma-separated weights in dimension order.
    #[arg(long, default_value = "uniform")]
    pub mixture: String,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct SchemaCmd {
    /// Preset name or schema path; omit to list the presets.
    pub schema: Option<String>,
    #[command(flatten)]
    pub out: OutputArg,
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered
                .lines()
                .next()
                .unwrap_or("error: invalid arguments");
            let _ = writeln!(stderr, "{line}");
            return 1;
        }
    };
    match execute(cli.command, stdin) {
        Ok((bytes, path)) => match deliver(&bytes, path.as_deref(), stdout) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", single_line(&e.to_string()));
            e.exit_code()
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn deliver(bytes: &[u8], path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_context(p, e)),
        None => {
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn io_context(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

type Output = (Vec<u8>, Option<PathBuf>);

fn execute(command: Command, stdin: &mut dyn Read) -> Result<Output> {
    match command {
        Command::Fit(cmd) => {
            let schema = SurveySchema::load(&cmd.input.schema)?;
            let parsed = read_responses(&cmd.input, &schema, stdin)?;
            let config = fit_config(&cmd.fit, cmd.k)?;
            let model = fit(&parsed.dataset, &config)?;
            let doc = ModelDocument::new(&model, &parsed.dataset, Some(&schema.name));
            Ok((to_json(&doc)?, cmd.out.output))
        }
        Command::Elbow(cmd) => {
            let schema = SurveySchema::load(&cmd.input.schema)?;
            let format = text_or_json(&cmd.format)?;
            let parsed = read_responses(&cmd.input, &schema, stdin)?;
            let base = fit_config(&cmd.fit, cmd.k_min)?;
            let curve = elbow_scan(&parsed.dataset, cmd.k_min, cmd.k_max, &base)?;
            let selected = if curve.len() >= 2 {
                select_k(&curve, cmd.epsilon)?
            } else {
                curve[0].0
            };
            Ok((
                render_elbow(&curve, cmd.epsilon, selected, format)?,
                cmd.out.output,
            ))
        }
        Command::Score(cmd) => {
            let schema = SurveySchema::load(&cmd.input.schema)?;
            let format = text_or_json(&cmd.format)?;
            let parsed = read_responses(&cmd.input, &schema, stdin)?;
            let profiles = score_table(&parsed.table, &schema)?;
            let bytes = match format {
                ReportFormat::Json => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        id: &'a str,
                        #[serde(flatten)]
                        profile: &'a crate::survey::TraitProfile,
                    }
                    let rows: Vec<Row> = parsed
                        .table
                        .ids
                        .iter()
                        .zip(&profiles)
                        .map(|(id, profile)| Row { id, profile })
                        .collect();
                    to_json(&rows)?
                }
                _ => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let mut header = vec!["id".to_string()];
                    header.extend(schema.dimensions.iter().cloned());
                    header.extend(schema.dimensions.iter().map(|d| format!("{d}_pct")));
                    w.write_record(&header)?;
                    for (id, p) in parsed.table.ids.iter().zip(&profiles) {
                        let mut rec = vec![id.clone()];
                        rec.extend(p.raw.values().map(|v| v.to_string()));
                        rec.extend(p.percent.values().map(|v| format_3dp(*v)));
                        w.write_record(&rec)?;
                    }
                    w.into_inner().map_err(|e| Error::Io(e.into_error()))?
                }
            };
            Ok((bytes, cmd.out.output))
        }
        Command::Report(cmd) => {
            let schema = SurveySchema::load(&cmd.input.schema)?;
            let format: ReportFormat = cmd.format.parse()?;
            let parsed = read_responses(&cmd.input, &schema, stdin)?;
            let profiles = score_table(&parsed.table, &schema)?;
            let model = match &cmd.model {
                Some(path) => {
                    let doc: ModelDocument = serde_json::from_str(&read_file(path)?)?;
                    doc.to_model(&parsed.dataset)?
                }
                None => {
                    let k = cmd.k.expect("clap enforces --k without --model");
                    fit(&parsed.dataset, &fit_config(&cmd.fit, k)?)?
                }
            };
            let labeling = label_clusters(&model, &profiles, &schema)?;
            if cmd.labels {
                return Ok((emit_report(&labeling, format)?, cmd.out.output));
            }
            let mut report = match cmd.aggregate {
                AggregateArg::Share => personality_percentages(&labeling),
                AggregateArg::Mean => mean_profile_percentages(&profiles, &schema)?,
            };
            annotate(&mut report, &model);
            Ok((
                emit_report(Emittable::Report(&report), format)?,
                cmd.out.output,
            ))
        }
        Command::Fuse(cmd) => {
            let format: ReportFormat = cmd.format.parse()?;
            let a = PercentReport::from_json(&read_file(&cmd.a)?)?;
            let b = PercentReport::from_json(&read_file(&cmd.b)?)?;
            let fused = fuse_profiles(&a, &b, cmd.w)?;
            Ok((emit_report(&fused, format)?, cmd.out.output))
        }
        Command::Gen(cmd) => {
            let schema = SurveySchema::load(&cmd.schema)?;
            let mixture = parse_mixture(&cmd.mixture, &schema)?;
            let delimiter = parse_delimiter(&cmd.delimiter)?;
            let sample = generate_synthetic(cmd.n, &schema, &mixture, cmd.noise, cmd.seed)?;
            let mut bytes = Vec::new();
            sample.table.write_csv(&mut bytes, delimiter)?;
            Ok((bytes, cmd.out.output))
        }
        Command::Schema(cmd) => {
            let bytes = match cmd.schema {
                Some(name) => SurveySchema::load(&name)?.to_json()?.into_bytes(),
                None => {
                    let mut s = String::new();
                    for name in PRESETS {
                        let schema = SurveySchema::preset(name)?;
                        s.push_str(&format!(
                            "{name}\t{} items\t{}\n",
                            schema.items.len(),
                            schema.dimensions.join(",")
                        ));
                    }
                    s.into_bytes()
                }
            };
            Ok((bytes, cmd.out.output))
        }
    }
}

fn annotate(report: &mut PercentReport, model: &ClusterModel) {
    let m = &mut report.metadata;
    m.k = Some(model.k());
    m.seed = Some(model.config.seed);
    m.restarts = Some(model.config.restarts);
    m.policy = Some(model.config.policy.label());
    m.cost = Some(model.cost);
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_context(path, e))
}

fn read_responses(
    args: &InputArgs,
    schema: &SurveySchema,
    stdin: &mut dyn Read,
) -> Result<ParsedResponses> {
    let delimiter = parse_delimiter(&args.delimiter)?;
    let missing = match args.missing {
        MissingArg::Drop => MissingPolicy::DropRow,
        MissingArg::Impute => MissingPolicy::ImputeMode,
    };
    let parsed = match &args.input {
        Some(p) if p.as_os_str() != "-" => {
            let file = fs::File::open(p).map_err(|e| io_context(p, e))?;
            parse_responses(file, schema, delimiter, missing)?
        }
        _ => {
            let mut buf = Vec::new();
            stdin.read_to_end(&mut buf)?;
            parse_responses(buf.as_slice(), schema, delimiter, missing)?
        }
    };
    log::info!(
        "read {} rows, kept {}, dropped {}",
        parsed.report.rows_read,
        parsed.report.rows_kept,
        parsed.report.rows_dropped
    );
    Ok(parsed)
}

fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(Error::InvalidConfig(format!(
            "delimiter must be one ASCII character or `tab`, got `{s}`"
        ))),
    }
}

fn parse_mixture(s: &str, schema: &SurveySchema) -> Result<Vec<f64>> {
    if s == "uniform" {
        return Ok(uniform_mixture(schema));
    }
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidMixture(format!("`{w}` is not a number")))
        })
        .collect()
}

fn fit_config(flags: &FitFlags, k: usize) -> Result<FitConfig> {
    let policy = match flags.policy {
        PolicyArg::Simple => DissimilarityPolicy::simple(),
        PolicyArg::Weighted => DissimilarityPolicy::weighted(),
        PolicyArg::Mixed if flags.gamma == "auto" => DissimilarityPolicy::mixed_auto(),
        PolicyArg::Mixed => {
            let g: f64 = flags.gamma.parse().map_err(|_| {
                Error::InvalidConfig(format!(
                    "--gamma must be `auto` or a number, got `{}`",
                    flags.gamma
                ))
            })?;
            DissimilarityPolicy::mixed_fixed(g)
        }
    };
    policy.validate()?;
    let init = match flags.init {
        InitArg::Random => InitStrategy::RandomRows,
        InitArg::Density => InitStrategy::Density,
    };
    Ok(FitConfig::new(k)
        .with_policy(policy)
        .with_seed(flags.seed)
        .with_restarts(flags.restarts)
        .with_max_epochs(flags.max_epochs)
        .with_init(init))
}

fn text_or_json(s: &str) -> Result<ReportFormat> {
    match s.parse()? {
        ReportFormat::PieData => Err(Error::UnknownFormat(format!(
            "{s} (this subcommand supports text and json)"
        ))),
        f => Ok(f),
    }
}

fn render_elbow(
    curve: &[(usize, f64)],
    epsilon: f64,
    selected: usize,
    format: ReportFormat,
) -> Result<Vec<u8>> {
    if format == ReportFormat::Json {
        #[derive(Serialize)]
        struct Point {
            k: usize,
            wcd: f64,
        }
        #[derive(Serialize)]
        struct Doc {
            curve: Vec<Point>,
            epsilon: f64,
            selected_k: usize,
        }
        return to_json(&Doc {
            curve: curve.iter().map(|&(k, wcd)| Point { k, wcd }).collect(),
            epsilon,
            selected_k: selected,
        });
    }
    let mut s = format!("{:>4}  {:>12}\n", "k", "wcd");
    for (k, w) in curve {
        s.push_str(&format!("{k:>4}  {:>12}\n", format_3dp(*w)));
    }
    s.push_str(&format!("selected k: {selected}\n"));
    Ok(s.into_bytes())
}
