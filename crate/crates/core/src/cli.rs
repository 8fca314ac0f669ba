//! Command-line interface. Every stage reads and writes the documents of
//! [`crate::io`], so stages can be run one at a time or all at once.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::evaluate::{evaluate_corpus, parse_metric_groups};
use crate::exec::Execution;
use crate::grounding::{GroundingConfig, SimilarityMethod};
use crate::io::{
    load_coref, load_embeddings, load_prediction, load_predictions, load_stories, load_story,
    prediction_to_json, report_to_string, ReportFormat,
};
use crate::metrics::{agreement_report, dataset_stats};
use crate::pipeline::{
    ground_stage, rank_stage, run_corpus, text_stage, visual_stage, PipelineConfig, StoryInput,
    StoryPrediction,
};
use crate::ranking::Modality;
use crate::textchars::CharacterLexicon;
use crate::visualchars::ClusteringConfig;

pub const SEED_ENV: &str = "CHARGROUND_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "charground",
    version,
    about = "Character detection, grounding and ranking for visual stories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect textual characters and chain them.
    DetectText(DetectTextArgs),
    /// Cluster face embeddings into visual characters.
    Cluster(ClusterArgs),
    /// Align textual and visual chains into multimodal characters.
    Ground(GroundArgs),
    /// Rank characters by importance.
    Rank(RankArgs),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Agreement between two annotations of the same stories.
    Agreement(AgreementArgs),
    /// Corpus statistics of gold annotations.
    Stats(StatsArgs),
    /// Run every stage on a set of stories and score the result.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Character lexicon, one word per line (default: bundled list).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Group words, one per line (default: bundled list).
    #[arg(long)]
    pub group_words: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectTextArgs {
    #[arg(long)]
    pub story: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// `heuristic` or `external:PATH`.
    #[arg(long, default_value = "heuristic")]
    pub coref: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusteringArgs {
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// PRNG seed; falls back to $CHARGROUND_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Story the embeddings belong to; sets the story id of the output.
    #[arg(long)]
    pub story: Option<PathBuf>,
    #[command(flatten)]
    pub clustering: ClusteringArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Dist,
    Embed,
}

#[derive(Debug, Args)]
pub struct GroundingArgs {
    #[arg(long, value_enum, default_value = "dist")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.6)]
    pub plural_threshold: f64,
    /// Keep matched pairs whose similarity is zero.
    #[arg(long)]
    pub keep_zero: bool,
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    #[arg(long)]
    pub story: PathBuf,
    /// Output of `detect-text`.
    #[arg(long)]
    pub text: PathBuf,
    /// Output of `cluster`.
    #[arg(long)]
    pub visual: PathBuf,
    /// Required by `--method embed`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub grounding: GroundingArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModalityArg {
    Text,
    Image,
    Multi,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub story: PathBuf,
    /// Output of `ground` (or of `detect-text`/`cluster` for single modalities).
    #[arg(long)]
    pub chains: PathBuf,
    #[arg(long, value_enum, default_value = "multi")]
    pub modality: ModalityArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction file or directory.
    #[arg(long)]
    pub pred: PathBuf,
    /// Gold story file or directory.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value = "detection,bcubed,exact,grounding,pk,pearson")]
    pub metrics: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Reference annotation (file or directory).
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Gold story file or directory.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Story file or directory.
    #[arg(long)]
    pub stories: PathBuf,
    /// Directory of embedding files named `<story_id>.json`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// `heuristic` or `external:DIR` with files named `<story_id>.json`.
    #[arg(long, default_value = "heuristic")]
    pub coref: String,
    #[command(flatten)]
    pub clustering: ClusteringArgs,
    #[command(flatten)]
    pub grounding: GroundingArgs,
    #[arg(long, default_value = "detection,bcubed,exact,grounding,pk,pearson")]
    pub metrics: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Output directory: `chains/<story_id>.json` and `report.json` (or `.csv`).
    #[arg(long)]
    pub out: PathBuf,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) => 2,
        Error::Data(_) | Error::Schema { .. } | Error::Syntax(_) => 3,
        Error::Io(_) => 1,
    }
}

/// Parses `argv` and runs the command; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("charground: {e}");
            exit_code(&e)
        }
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, contents)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

enum CorefSpec {
    Heuristic,
    External(PathBuf),
}

fn parse_coref(spec: &str) -> Result<CorefSpec> {
    match spec.split_once(':') {
        None if spec == "heuristic" => Ok(CorefSpec::Heuristic),
        Some(("external", path)) if !path.is_empty() => Ok(CorefSpec::External(PathBuf::from(path))),
        _ => Err(Error::parameter(format!(
            "--coref must be `heuristic` or `external:PATH`, got {spec:?}"
        ))),
    }
}

fn lexicon(args: &LexiconArgs) -> Result<CharacterLexicon> {
    CharacterLexicon::load(args.lexicon.as_deref(), args.group_words.as_deref())
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::parameter(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn clustering_config(args: &ClusteringArgs) -> Result<ClusteringConfig> {
    let cfg = ClusteringConfig {
        k_min: args.k_min,
        k_max: args.k_max,
        max_iterations: args.max_iterations,
        seed: resolve_seed(args.seed)?,
        restarts: args.restarts,
        execution: execution(args.sequential),
        ..ClusteringConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn grounding_config(args: &GroundingArgs) -> Result<GroundingConfig> {
    let cfg = GroundingConfig {
        method: match args.method {
            MethodArg::Dist => SimilarityMethod::Distributional,
            MethodArg::Embed => SimilarityMethod::Embedding,
        },
        plural_threshold: args.plural_threshold,
        drop_zero_similarity: !args.keep_zero,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::DetectText(a) => detect_text(a),
        Command::Cluster(a) => cluster(a),
        Command::Ground(a) => ground(a),
        Command::Rank(a) => rank(a),
        Command::Eval(a) => eval(a),
        Command::Agreement(a) => {
            let report = agreement_report(&load_stories(&a.a)?, &load_stories(&a.b)?)?;
            emit(a.out.as_deref(), &to_json(&report))
        }
        Command::Stats(a) => emit(
            a.out.as_deref(),
            &to_json(&dataset_stats(&load_stories(&a.gold)?)),
        ),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn detect_text(a: DetectTextArgs) -> Result<()> {
    let coref = parse_coref(&a.coref)?;
    let lexicon = lexicon(&a.lexicon)?;
    let story = load_story(&a.story)?;
    let external = match coref {
        CorefSpec::Heuristic => None,
        CorefSpec::External(path) => Some(load_coref(&path)?),
    };
    let mut p = StoryPrediction::new(story.story_id.clone());
    p.text_chains = Some(text_stage(&story, &lexicon, external.as_ref())?);
    emit(a.out.as_deref(), &prediction_to_json(&p, Some(&story)))
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let cfg = clustering_config(&a.clustering)?;
    let table = load_embeddings(&a.embeddings)?;
    let story_id = match &a.story {
        Some(path) => {
            let story = load_story(path)?;
            if let Some(id) = table.story_id.as_deref().filter(|id| *id != story.story_id) {
                return Err(Error::data(format!(
                    "embedding file belongs to story {id}, not {}",
                    story.story_id
                )));
            }
            story.story_id
        }
        None => table.story_id.clone().unwrap_or_default(),
    };
    let mut p = StoryPrediction::new(story_id);
    p.visual_chains = Some(visual_stage(Some(&table), &cfg)?);
    emit(a.out.as_deref(), &prediction_to_json(&p, None))
}

fn check_same_story(story: &str, other: &StoryPrediction, path: &Path) -> Result<()> {
    if other.story_id != story {
        return Err(Error::data(format!(
            "{} belongs to story {:?}, not {story}",
            path.display(),
            other.story_id
        )));
    }
    Ok(())
}

fn ground(a: GroundArgs) -> Result<()> {
    let cfg = grounding_config(&a.grounding)?;
    let story = load_story(&a.story)?;
    let text = load_prediction(&a.text, Some(&story))?;
    let visual = load_prediction(&a.visual, Some(&story))?;
    check_same_story(&story.story_id, &text, &a.text)?;
    check_same_story(&story.story_id, &visual, &a.visual)?;
    let embeddings = a.embeddings.as_deref().map(load_embeddings).transpose()?;
    let text_chains = text
        .text_chains
        .ok_or_else(|| Error::data(format!("{} has no text chains", a.text.display())))?;
    let visual_chains = visual
        .visual_chains
        .ok_or_else(|| Error::data(format!("{} has no visual chains", a.visual.display())))?;
    let (alignment, characters) = ground_stage(
        story.len(),
        &text_chains,
        &visual_chains,
        embeddings.as_ref(),
        &cfg,
    )?;
    let p = StoryPrediction {
        story_id: story.story_id.clone(),
        text_chains: Some(text_chains),
        visual_chains: Some(visual_chains),
        alignment: Some(alignment),
        characters: Some(characters),
        ranking: None,
    };
    emit(a.out.as_deref(), &prediction_to_json(&p, Some(&story)))
}

fn rank(a: RankArgs) -> Result<()> {
    let story = load_story(&a.story)?;
    let mut p = load_prediction(&a.chains, Some(&story))?;
    check_same_story(&story.story_id, &p, &a.chains)?;
    let modality = match a.modality {
        ModalityArg::Text => Modality::Text,
        ModalityArg::Image => Modality::Image,
        ModalityArg::Multi => Modality::Multi,
    };
    rank_stage(&mut p, modality)?;
    emit(a.out.as_deref(), &prediction_to_json(&p, Some(&story)))
}

fn eval(a: EvalArgs) -> Result<()> {
    let groups = parse_metric_groups(&a.metrics)?;
    let gold = load_stories(&a.gold)?;
    let predictions = load_predictions(&a.pred, &gold)?;
    let report = evaluate_corpus(&predictions, &gold, &groups)?;
    emit(a.out.as_deref(), &report_to_string(&report, a.format.into()))
}

fn side_input(dir: Option<&Path>, story_id: &str) -> Option<PathBuf> {
    let path = dir?.join(format!("{story_id}.json"));
    path.is_file().then_some(path)
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let groups = parse_metric_groups(&a.metrics)?;
    let coref = parse_coref(&a.coref)?;
    let cfg = PipelineConfig {
        clustering: clustering_config(&a.clustering)?,
        grounding: grounding_config(&a.grounding)?,
        execution: execution(a.clustering.sequential),
    };
    let lexicon = lexicon(&a.lexicon)?;
    let stories = load_stories(&a.stories)?;
    let coref_dir = match &coref {
        CorefSpec::Heuristic => None,
        CorefSpec::External(dir) => Some(dir.as_path()),
    };
    let inputs = stories
        .into_iter()
        .map(|story| {
            let embeddings = side_input(a.embeddings.as_deref(), &story.story_id)
                .map(|p| load_embeddings(&p))
                .transpose()?;
            let coref = match coref_dir {
                None => None,
                Some(dir) => Some(load_coref(&dir.join(format!("{}.json", story.story_id)))?),
            };
            Ok(StoryInput {
                story,
                embeddings,
                coref,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let predictions = run_corpus(&inputs, &lexicon, &cfg)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let chains_dir = a.out.join("chains");
    fs::create_dir_all(&chains_dir)?;
    for (input, p) in inputs.iter().zip(&predictions) {
        emit(
            Some(&chains_dir.join(format!("{}.json", p.story_id))),
            &prediction_to_json(p, Some(&input.story)),
        )?;
    }
    let (gold, scored): (Vec<_>, Vec<_>) = inputs
        .iter()
        .zip(&predictions)
        .filter(|(i, _)| i.story.gold.is_some())
        .map(|(i, p)| (i.story.clone(), p.clone()))
        .unzip();
    let report = evaluate_corpus(&scored, &gold, &groups)?;
    let format: ReportFormat = a.format.into();
    let name = match format {
        ReportFormat::Json => "report.json",
        ReportFormat::Csv => "report.csv",
    };
    emit(Some(&a.out.join(name)), &report_to_string(&report, format))
}
