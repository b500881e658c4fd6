//! Command-line front end: `generate`, `render`, `serialize`, `evaluate`, `mask`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{
    read_jsonl, write_atomic, write_jsonl, CountCenterRecord, PredictionRecord, SceneRecord, TargetRecord,
};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_count_center, evaluate_shapes, flatten_csv};
use crate::genset::{builtin_split_specs, generate_splits, GenerationConfig, SplitSpec};
use crate::lossmask::{numeric_weight_mask, NumericTokenSpec};
use crate::render::{encode_png, rasterize};
use crate::scene::{md5_hex, DEFAULT_RELAX_FRACTION};
use crate::textio::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "shapebench",
    version,
    about = "Synthetic shape benchmark: generation, rendering and scoring"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample scene splits and write `<split>.jsonl` plus `manifest.json`.
    Generate(GenerateArgs),
    /// Rasterize scenes to `<out>/<split>/<id>.png`.
    Render(RenderArgs),
    /// Write text targets to `<out>/<split>.<format>.jsonl`.
    Serialize(SerializeArgs),
    /// Score predictions and write `report.json` and `report.csv`.
    Evaluate(EvaluateArgs),
    /// Emit per-token loss weights for tokenized sequences.
    Mask(MaskArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated split names; all built-in splits when omitted.
    #[arg(long, value_delimiter = ',')]
    pub splits: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_RELAX_FRACTION)]
    pub relax: f64,
    /// Override the sample count of every split.
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub max_rejections: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene JSONL written by `generate`.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SerializeArgs {
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Both formats when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Sentence,
    Tuple,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Sentence => OutputFormat::Sentence,
            FormatArg::Tuple => OutputFormat::Tuple,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Shapes,
    #[value(name = "count_center", alias = "count-center")]
    CountCenter,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Scene JSONL (shapes mode) or count/center JSONL.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value = "sentence")]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value = "shapes")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// One sequence per line: a JSON array of strings or whitespace-separated tokens.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
    /// `MIN-MAX` for plain integers or `set:a,b,...` for exact tokens.
    #[arg(long, default_value = "1-1000")]
    pub numeric: NumericTokenSpec,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")
    })
}

fn file_md5(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(md5_hex(&bytes))
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    generation: &'a GenerationConfig,
    splits: Vec<&'a SplitSpec>,
    files: BTreeMap<String, FileEntry>,
}

#[derive(Serialize)]
struct FileEntry {
    md5: String,
    records: usize,
}

/// Selected specs plus every split they need as a hash-exclusion source,
/// in built-in order.
pub fn resolve_splits(selected: &[String], n_override: Option<usize>) -> Result<(Vec<SplitSpec>, Vec<String>)> {
    let all = builtin_split_specs();
    let wanted: Vec<String> = if selected.is_empty() {
        all.iter().map(|s| s.name.clone()).collect()
    } else {
        selected.to_vec()
    };
    for name in &wanted {
        if !all.iter().any(|s| &s.name == name) {
            return Err(Error::InvalidConfig(format!("unknown split `{name}`")));
        }
    }
    let needed = |s: &SplitSpec| {
        wanted.contains(&s.name)
            || all
                .iter()
                .any(|o| wanted.contains(&o.name) && o.forbid_hashes_of.contains(&s.name))
    };
    let specs = all
        .iter()
        .filter(|s| needed(s))
        .map(|s| SplitSpec {
            n_samples: n_override.unwrap_or(s.n_samples),
            ..s.clone()
        })
        .collect();
    Ok((specs, wanted))
}

pub fn run_generate(args: &GenerateArgs) -> Result<()> {
    let gen = GenerationConfig {
        relax_fraction: args.relax,
        max_rejections: args.max_rejections,
        ..GenerationConfig::with_seed(args.seed)
    };
    gen.validate()?;
    let (specs, wanted) = resolve_splits(&args.splits, args.n_samples)?;
    let scenes = pool(args.jobs)?.install(|| generate_splits(&specs, &gen))?;
    create_dir(&args.out)?;
    let mut files = BTreeMap::new();
    for (spec, split) in specs.iter().zip(&scenes) {
        if !wanted.contains(&spec.name) {
            continue;
        }
        let records: Vec<SceneRecord> = split.iter().map(SceneRecord::from_generated).collect();
        let name = format!("{}.jsonl", spec.name);
        let path = args.out.join(&name);
        write_jsonl(&path, &records)?;
        files.insert(
            name,
            FileEntry {
                md5: file_md5(&path)?,
                records: records.len(),
            },
        );
    }
    let manifest = Manifest {
        seed: args.seed,
        generation: &gen,
        splits: specs.iter().filter(|s| wanted.contains(&s.name)).collect(),
        files,
    };
    write_json(&args.out.join("manifest.json"), &manifest)
}

fn split_of(path: &Path, records: &[SceneRecord]) -> String {
    records.first().map(|r| r.split_name.clone()).unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    })
}

pub fn run_render(args: &RenderArgs) -> Result<()> {
    let pool = pool(args.jobs)?;
    for input in &args.input {
        let records: Vec<SceneRecord> = read_jsonl(input)?;
        let dir = args.out.join(split_of(input, &records));
        create_dir(&dir)?;
        // encode in parallel, write in index order from this thread
        for chunk in records.chunks(256) {
            let encoded: Vec<Vec<u8>> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|r| encode_png(&rasterize(&r.to_scene()?)))
                    .collect::<Result<_>>()
            })?;
            for (r, data) in chunk.iter().zip(encoded) {
                write_atomic(&dir.join(format!("{}.png", r.id)), |w| w.write_all(&data))?;
            }
        }
    }
    Ok(())
}

pub fn run_serialize(args: &SerializeArgs) -> Result<()> {
    let formats: Vec<OutputFormat> = match args.format {
        Some(f) => vec![f.into()],
        None => OutputFormat::ALL.to_vec(),
    };
    create_dir(&args.out)?;
    for input in &args.input {
        let records: Vec<SceneRecord> = read_jsonl(input)?;
        let split = split_of(input, &records);
        let scenes = records.iter().map(SceneRecord::to_scene).collect::<Result<Vec<_>>>()?;
        for &fmt in &formats {
            let targets: Vec<TargetRecord> = records
                .iter()
                .zip(&scenes)
                .map(|(r, s)| TargetRecord::new(r, s, fmt))
                .collect();
            write_jsonl(&args.out.join(format!("{split}.{fmt}.jsonl")), &targets)?;
        }
    }
    Ok(())
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let pool = pool(args.jobs)?;
    let report = match args.mode {
        ModeArg::Shapes => {
            let gt: Vec<SceneRecord> = read_jsonl(&args.gt)?;
            let preds: Vec<PredictionRecord> = read_jsonl(&args.predictions)?;
            let split = split_of(&args.gt, &gt);
            let r = pool.install(|| evaluate_shapes(&split, &gt, &preds, args.format.into()))?;
            if !r.parse.unknown_ids.is_empty() {
                eprintln!(
                    "warning: {} prediction ids not in ground truth",
                    r.parse.unknown_ids.len()
                );
            }
            if r.parse.malformed_segments > 0 {
                eprintln!("warning: {} malformed prediction segments", r.parse.malformed_segments);
            }
            serde_json::to_value(&r)
        }
        ModeArg::CountCenter => {
            let gt: Vec<CountCenterRecord> = read_jsonl(&args.gt)?;
            let preds: Vec<CountCenterRecord> = read_jsonl(&args.predictions)?;
            let split = args
                .gt
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let r = evaluate_count_center(&split, &gt, &preds)?;
            if !r.unknown_ids.is_empty() {
                eprintln!("warning: {} prediction ids not in ground truth", r.unknown_ids.len());
            }
            serde_json::to_value(&r)
        }
    }
    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    create_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    let csv = flatten_csv(&report);
    write_atomic(&args.out.join("report.csv"), |w| w.write_all(csv.as_bytes()))
}

fn parse_token_line(path: &Path, n: usize, line: &str) -> Result<Vec<String>> {
    let t = line.trim();
    if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n,
            message: e.to_string(),
        })
    } else {
        Ok(t.split_whitespace().map(str::to_string).collect())
    }
}

pub fn run_mask(args: &MaskArgs) -> Result<()> {
    let file = std::fs::File::open(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let mut masks = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&args.input, e))?;
        let tokens = parse_token_line(&args.input, n + 1, &line)?;
        masks.push(numeric_weight_mask(&tokens, &args.numeric, args.scale)?);
    }
    write_jsonl(&args.out, &masks)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Render(a) => run_render(a),
        Command::Serialize(a) => run_serialize(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Mask(a) => run_mask(a),
    }
}

/// Parses arguments and runs; usage, IO and validation errors exit with 2.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
