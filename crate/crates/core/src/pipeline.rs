//! File-level runners behind the command-line interface. Each runner reads
//! the documented formats, performs one stage, writes its outputs
//! atomically (temp file in the target directory, then rename), and
//! returns a small outcome value for the caller to print.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::chunking::{
    ChunkGrammar, ChunkKind, ChunkedSentence, chunk_tagged, parse_chunked_corpus,
    render_chunked_corpus,
};
use crate::evaluation::{
    AlignmentError, ConfusionMatrix, EvalReport, build_confusion, evaluate_relations,
    parse_confusion_tsv, parse_gold_relations, render_confusion_tsv, render_report_tsv,
};
use crate::extraction::{
    EntityDictionary, Relation, SvoTriple, extract_svo, map_to_relations, parse_relations,
    render_relations,
};
use crate::impact::{
    AccuracyReport, DegradationReport, VerdictRow, classify_examined, compat_examined_pairs,
    functional_accuracy, group_errors, perturb_corpus, render_degradation_tsv,
    render_verdict_rows, select_examined,
};
use crate::tagging::{
    DataFileError, ExternalTaggerConfig, Lexicon, TaggedSentence, TaggerError, builtin_rules,
    parse_tagged_corpus, render_tagged_corpus, tag_baseline, tag_via_external,
};
use crate::textprep::{SentenceSplitter, TextprepError, parse_raw_corpus, prepare_document};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Format { path: PathBuf, line: usize, reason: String },
    #[error("corpora are misaligned: {0}")]
    Alignment(#[from] AlignmentError),
    #[error("tagger failed: {0}")]
    Tagger(#[from] TaggerError),
    #[error("{0}")]
    Data(String),
}

impl PipelineError {
    /// Process exit code for this failure: 3 for external tagger trouble,
    /// 2 for anything wrong with the data. (Usage errors exit 1 before any
    /// runner is reached.)
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Tagger(_) => 3,
            _ => 2,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.into(), source })
}

fn format_err(path: &Path) -> impl Fn(DataFileError) -> PipelineError + '_ {
    move |e| PipelineError::Format { path: path.into(), line: e.line, reason: e.reason }
}

fn textprep_err(path: &Path, e: TextprepError) -> PipelineError {
    match e {
        TextprepError::BadRecord { line, reason } => {
            PipelineError::Format { path: path.into(), line, reason }
        }
    }
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// partial file and a failed run leaves any existing output untouched.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), PipelineError> {
    let io_err = |source| PipelineError::Io { path: path.into(), source };
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Caps the worker pool used for per-sentence parallelism and perturbation
/// trials. Call at most once, before any parallel work.
pub fn set_parallelism(jobs: usize) -> Result<(), PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| PipelineError::Data(format!("worker pool already configured: {e}")))
}

#[derive(Debug, Clone)]
pub enum TaggerChoice {
    /// Built-in lexicon tagger with contextual rules.
    Lexicon,
    External(ExternalTaggerConfig),
}

fn tag_sentences(
    documents_sentences: Vec<crate::textprep::TokenizedSentence>,
    tagger: &TaggerChoice,
) -> Result<Vec<TaggedSentence>, PipelineError> {
    match tagger {
        TaggerChoice::Lexicon => {
            let lexicon = Lexicon::builtin();
            let rules = builtin_rules();
            Ok(documents_sentences
                .par_iter()
                .map(|s| tag_baseline(s, lexicon, rules))
                .collect())
        }
        TaggerChoice::External(config) => Ok(tag_via_external(&documents_sentences, config)?),
    }
}

fn prepare_corpus(
    input: &Path,
) -> Result<Vec<crate::textprep::TokenizedSentence>, PipelineError> {
    let text = read_to_string(input)?;
    let documents = parse_raw_corpus(&text).map_err(|e| textprep_err(input, e))?;
    let splitter = SentenceSplitter::default();
    Ok(documents
        .iter()
        .flat_map(|doc| prepare_document(doc, &[], &splitter))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagOutcome {
    pub sentences: usize,
    pub tokens: usize,
}

/// Raw corpus in, tagged corpus out.
pub fn run_tag(
    input: &Path,
    output: &Path,
    tagger: &TaggerChoice,
) -> Result<TagOutcome, PipelineError> {
    let sentences = prepare_corpus(input)?;
    let tagged = tag_sentences(sentences, tagger)?;
    let outcome = TagOutcome {
        sentences: tagged.len(),
        tokens: tagged.iter().map(|s| s.tokens.len()).sum(),
    };
    write_atomic(output, &render_tagged_corpus(&tagged))?;
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkOutcome {
    pub sentences: usize,
    pub noun_phrases: usize,
    pub verb_phrases: usize,
}

fn chunk_sentences(
    tagged: &[TaggedSentence],
    grammar: ChunkGrammar,
) -> Result<Vec<ChunkedSentence>, PipelineError> {
    tagged
        .par_iter()
        .map(|s| chunk_tagged(s, grammar).map_err(|e| PipelineError::Data(e.to_string())))
        .collect()
}

/// Tagged corpus in, chunked corpus out.
pub fn run_chunk(
    input: &Path,
    output: &Path,
    grammar: ChunkGrammar,
) -> Result<ChunkOutcome, PipelineError> {
    let text = read_to_string(input)?;
    let tagged = parse_tagged_corpus(&text).map_err(format_err(input))?;
    let chunked = chunk_sentences(&tagged, grammar)?;
    let count = |kind: ChunkKind| {
        chunked
            .iter()
            .flat_map(|c| &c.spans)
            .filter(|s| s.kind == kind)
            .count()
    };
    let outcome = ChunkOutcome {
        sentences: chunked.len(),
        noun_phrases: count(ChunkKind::NounPhrase),
        verb_phrases: count(ChunkKind::VerbPhrase),
    };
    write_atomic(output, &render_chunked_corpus(&chunked))?;
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractInput {
    Raw,
    Tagged,
    Chunked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOutcome {
    pub sentences: usize,
    pub triples: usize,
    pub relations: usize,
}

/// Corpus in (raw, tagged, or already chunked), relations TSV out.
#[allow(clippy::too_many_arguments)]
pub fn run_extract(
    input: &Path,
    format: ExtractInput,
    tagger: &TaggerChoice,
    entities: &Path,
    output: &Path,
    grammar: ChunkGrammar,
    directional: bool,
) -> Result<ExtractOutcome, PipelineError> {
    let chunked: Vec<ChunkedSentence> = match format {
        ExtractInput::Raw => {
            let sentences = prepare_corpus(input)?;
            let tagged = tag_sentences(sentences, tagger)?;
            chunk_sentences(&tagged, grammar)?
        }
        ExtractInput::Tagged => {
            let text = read_to_string(input)?;
            let tagged = parse_tagged_corpus(&text).map_err(format_err(input))?;
            chunk_sentences(&tagged, grammar)?
        }
        ExtractInput::Chunked => {
            let text = read_to_string(input)?;
            parse_chunked_corpus(&text).map_err(format_err(input))?
        }
    };
    let dict_text = read_to_string(entities)?;
    let dict = EntityDictionary::from_text(&dict_text, false)
        .map_err(|e| PipelineError::Data(format!("{}: {e}", entities.display())))?;
    let triples: Vec<SvoTriple> = chunked.iter().flat_map(extract_svo).collect();
    let relations: Vec<Relation> = map_to_relations(&triples, &dict, directional);
    let outcome = ExtractOutcome {
        sentences: chunked.len(),
        triples: triples.len(),
        relations: relations.len(),
    };
    write_atomic(output, &render_relations(&relations))?;
    Ok(outcome)
}

/// Gold and predicted tagged corpora in; confusion TSV out (optional) plus
/// the matrix and its accuracy.
pub fn run_eval_tags(
    gold: &Path,
    predicted: &Path,
    confusion_out: Option<&Path>,
) -> Result<(ConfusionMatrix, f64), PipelineError> {
    let gold_text = read_to_string(gold)?;
    let gold_corpus = parse_tagged_corpus(&gold_text).map_err(format_err(gold))?;
    let pred_text = read_to_string(predicted)?;
    let pred_corpus = parse_tagged_corpus(&pred_text).map_err(format_err(predicted))?;
    let matrix = build_confusion(&gold_corpus, &pred_corpus)?;
    let accuracy = matrix.accuracy().map_err(|e| PipelineError::Data(e.to_string()))?;
    if let Some(path) = confusion_out {
        write_atomic(path, &render_confusion_tsv(&matrix))?;
    }
    Ok((matrix, accuracy))
}

#[derive(Debug, Clone)]
pub struct ImpactOutcome {
    pub rows: Vec<VerdictRow>,
    pub report: AccuracyReport,
}

/// Confusion TSV in; verdict rows out (optional) plus the accuracy report.
pub fn run_impact(
    confusion: &Path,
    verdicts_out: Option<&Path>,
    theta_group: f64,
    theta_sub: f64,
    paper_compat: bool,
    grammar: ChunkGrammar,
) -> Result<ImpactOutcome, PipelineError> {
    let text = read_to_string(confusion)?;
    let matrix = parse_confusion_tsv(&text).map_err(format_err(confusion))?;
    let groups = group_errors(&matrix);
    let pairs = if paper_compat {
        compat_examined_pairs(&groups, theta_sub)
    } else {
        select_examined(&groups, theta_group, theta_sub)
    };
    let verdicts: BTreeMap<_, _> = classify_examined(&pairs, grammar, paper_compat);
    let report =
        functional_accuracy(&matrix, &verdicts).map_err(|e| PipelineError::Data(e.to_string()))?;
    let rows: Vec<VerdictRow> = pairs
        .iter()
        .map(|&(gold, assigned)| {
            let v = &verdicts[&(gold, assigned)];
            VerdictRow { gold, assigned, verdict: v.verdict, reason: v.reason.clone() }
        })
        .collect();
    if let Some(path) = verdicts_out {
        write_atomic(path, &render_verdict_rows(&rows))?;
    }
    Ok(ImpactOutcome { rows, report })
}

/// Predicted (4-column) and gold (3-column) relation files in; report out.
pub fn run_eval_relations(
    predicted: &Path,
    gold: &Path,
    directional: bool,
    report_out: Option<&Path>,
) -> Result<EvalReport, PipelineError> {
    let pred_text = read_to_string(predicted)?;
    let pred = parse_relations(&pred_text, directional).map_err(format_err(predicted))?;
    let gold_text = read_to_string(gold)?;
    let gold_set = parse_gold_relations(&gold_text, directional).map_err(format_err(gold))?;
    let report = evaluate_relations(&pred, &gold_set, directional);
    if let Some(path) = report_out {
        write_atomic(path, &render_report_tsv(&report))?;
    }
    Ok(report)
}

/// Gold tagged corpus plus confusion TSV in; degradation TSV out
/// (optional) plus the report.
pub fn run_perturb(
    gold: &Path,
    confusion: &Path,
    trials: u64,
    seed: u64,
    grammar: ChunkGrammar,
    output: Option<&Path>,
) -> Result<DegradationReport, PipelineError> {
    let gold_text = read_to_string(gold)?;
    let corpus = parse_tagged_corpus(&gold_text).map_err(format_err(gold))?;
    let matrix_text = read_to_string(confusion)?;
    let matrix = parse_confusion_tsv(&matrix_text).map_err(format_err(confusion))?;
    let report = perturb_corpus(&corpus, &matrix, trials, seed, grammar)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    if let Some(path) = output {
        write_atomic(path, &render_degradation_tsv(&report))?;
    }
    Ok(report)
}
