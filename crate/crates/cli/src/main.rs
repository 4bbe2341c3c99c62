use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use tagchunk::chunking::ChunkGrammar;
use tagchunk::evaluation::render_report_text;
use tagchunk::impact::VerdictKind;
use tagchunk::pipeline::{
    ExtractInput, PipelineError, TaggerChoice, run_chunk, run_eval_relations, run_eval_tags,
    run_extract, run_impact, run_perturb, run_tag, set_parallelism,
};
use tagchunk::tagging::ExternalTaggerConfig;

/// Shallow parsing, subject-verb-object extraction, and tag-error impact
/// analysis for tokenized text.
#[derive(Parser)]
#[command(name = "tagchunk", version)]
struct Cli {
    /// Worker threads for per-sentence work and perturbation trials.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tag a raw corpus (one id<TAB>text record per line).
    Tag(TagArgs),
    /// Chunk a tagged corpus into noun and verb phrases.
    Chunk(ChunkArgs),
    /// Extract entity relations from a raw, tagged, or chunked corpus.
    Extract(ExtractArgs),
    /// Score a predicted tagged corpus against gold tags.
    EvalTags(EvalTagsArgs),
    /// Classify confusion pairs and report functional accuracy.
    Impact(ImpactArgs),
    /// Score predicted relations against a gold relation set.
    EvalRelations(EvalRelationsArgs),
    /// Degrade a gold corpus by resampling tags from a confusion matrix.
    Perturb(PerturbArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaggerKind {
    /// Built-in lexicon tagger with contextual rules.
    Lexicon,
    /// External command; see --command.
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelationMode {
    Directional,
    Nondirectional,
}

impl RelationMode {
    fn directional(self) -> bool {
        self == RelationMode::Directional
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorpusFormat {
    Raw,
    Tagged,
    Chunked,
}

#[derive(Args)]
struct TaggerArgs {
    #[arg(long, value_enum, default_value_t = TaggerKind::Lexicon)]
    tagger: TaggerKind,
    /// External tagger command line. With `{in}`/`{out}` placeholders the
    /// command is run once over temp files; without them it reads
    /// tokenized sentences on stdin and writes word_TAG lines on stdout.
    #[arg(long)]
    command: Option<String>,
}

impl TaggerArgs {
    fn choice(&self) -> Result<TaggerChoice, String> {
        match (self.tagger, &self.command) {
            (TaggerKind::Lexicon, None) => Ok(TaggerChoice::Lexicon),
            (TaggerKind::Lexicon, Some(_)) => {
                Err("--command requires --tagger external".into())
            }
            (TaggerKind::External, None) => Err("--tagger external requires --command".into()),
            (TaggerKind::External, Some(command)) => {
                let config = if command.contains("{in}") || command.contains("{out}") {
                    ExternalTaggerConfig::temp_files(command)
                } else {
                    ExternalTaggerConfig::line_stream(command)
                };
                Ok(TaggerChoice::External(config))
            }
        }
    }
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    tagger: TaggerArgs,
}

#[derive(Args)]
struct ChunkArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Admit participles as noun phrase modifiers after a determiner.
    #[arg(long)]
    np_participle_modifiers: bool,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = CorpusFormat::Raw)]
    input_format: CorpusFormat,
    /// Entity dictionary: one surface form per line.
    #[arg(long)]
    entities: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = RelationMode::Directional)]
    mode: RelationMode,
    #[arg(long)]
    np_participle_modifiers: bool,
    #[command(flatten)]
    tagger: TaggerArgs,
}

#[derive(Args)]
struct EvalTagsArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Where to write the confusion matrix TSV.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Args)]
struct ImpactArgs {
    /// Confusion matrix TSV (gold, assigned, count).
    #[arg(long)]
    confusion: PathBuf,
    /// Where to write the verdict rows.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    theta_group: f64,
    #[arg(long, default_value_t = 0.9)]
    theta_sub: f64,
    /// Fix the examined groups and verdict overrides to the curated
    /// compatibility table instead of pure threshold selection.
    #[arg(long)]
    paper_compat: bool,
    #[arg(long)]
    np_participle_modifiers: bool,
}

#[derive(Args)]
struct EvalRelationsArgs {
    /// Predicted relations TSV (doc, agent, target, verb).
    #[arg(long)]
    pred: PathBuf,
    /// Gold relations TSV (doc, agent, target).
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value_t = RelationMode::Directional)]
    mode: RelationMode,
    /// Where to write the machine-readable report.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Gold tagged corpus to perturb.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    confusion: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the per-trial degradation TSV.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    np_participle_modifiers: bool,
}

fn grammar(np_participle_modifiers: bool) -> ChunkGrammar {
    ChunkGrammar { np_participle_modifiers }
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Tag(args) => {
            let tagger = args.tagger.choice().expect("validated before dispatch");
            let outcome = run_tag(&args.input, &args.output, &tagger)?;
            println!(
                "tagged {} sentences ({} tokens) -> {}",
                outcome.sentences,
                outcome.tokens,
                args.output.display()
            );
        }
        Command::Chunk(args) => {
            let outcome = run_chunk(
                &args.input,
                &args.output,
                grammar(args.np_participle_modifiers),
            )?;
            println!(
                "chunked {} sentences: {} noun phrases, {} verb phrases -> {}",
                outcome.sentences,
                outcome.noun_phrases,
                outcome.verb_phrases,
                args.output.display()
            );
        }
        Command::Extract(args) => {
            let tagger = args.tagger.choice().expect("validated before dispatch");
            let format = match args.input_format {
                CorpusFormat::Raw => ExtractInput::Raw,
                CorpusFormat::Tagged => ExtractInput::Tagged,
                CorpusFormat::Chunked => ExtractInput::Chunked,
            };
            let outcome = run_extract(
                &args.input,
                format,
                &tagger,
                &args.entities,
                &args.output,
                grammar(args.np_participle_modifiers),
                args.mode.directional(),
            )?;
            println!(
                "extracted {} relations from {} triples over {} sentences -> {}",
                outcome.relations,
                outcome.triples,
                outcome.sentences,
                args.output.display()
            );
        }
        Command::EvalTags(args) => {
            let (matrix, accuracy) =
                run_eval_tags(&args.gold, &args.pred, args.confusion.as_deref())?;
            println!(
                "accuracy {:.4} over {} tokens ({} errors)",
                accuracy,
                matrix.total(),
                matrix.error_total()
            );
            if let Some(path) = &args.confusion {
                println!("confusion matrix -> {}", path.display());
            }
        }
        Command::Impact(args) => {
            let outcome = run_impact(
                &args.confusion,
                args.output.as_deref(),
                args.theta_group,
                args.theta_sub,
                args.paper_compat,
                grammar(args.np_participle_modifiers),
            )?;
            let count = |kind: VerdictKind| {
                outcome.rows.iter().filter(|r| r.verdict == kind).count()
            };
            println!(
                "examined {} pairs: {} nullified, {} detrimental, {} context-dependent",
                outcome.rows.len(),
                count(VerdictKind::Nullified),
                count(VerdictKind::Detrimental),
                count(VerdictKind::ContextDependent)
            );
            let report = outcome.report;
            println!(
                "raw accuracy {:.4}, functional accuracy {:.4} ({} of {} error tokens examined, {} nullified)",
                report.raw_accuracy,
                report.functional_accuracy,
                report.examined_errors,
                report.total_tokens - report.correct_tokens,
                report.nullified_errors
            );
            if let Some(path) = &args.output {
                println!("verdicts -> {}", path.display());
            }
        }
        Command::EvalRelations(args) => {
            let report = run_eval_relations(
                &args.pred,
                &args.gold,
                args.mode.directional(),
                args.output.as_deref(),
            )?;
            print!("{}", render_report_text(&report));
        }
        Command::Perturb(args) => {
            let report = run_perturb(
                &args.gold,
                &args.confusion,
                args.trials,
                args.seed,
                grammar(args.np_participle_modifiers),
                args.output.as_deref(),
            )?;
            println!(
                "mean changed sentences {:.4}, mean changed triples {:.4} over {} trials (nullified-only {:.4}, detrimental {:.4})",
                report.mean_changed_sentence_fraction,
                report.mean_changed_triple_fraction,
                report.trials.len(),
                report.mean_nullified_only_fraction,
                report.mean_detrimental_fraction
            );
            if let Some(path) = &args.output {
                println!("degradation report -> {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // Tagger flag combinations are usage errors, checked before dispatch.
    let tagger_check = match &cli.command {
        Command::Tag(args) => args.tagger.choice().err(),
        Command::Extract(args) => args.tagger.choice().err(),
        _ => None,
    };
    if let Some(message) = tagger_check {
        return usage_error(&message);
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return usage_error("--jobs must be at least 1");
        }
        if let Err(e) = set_parallelism(jobs) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
