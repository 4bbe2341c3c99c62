//! Scoring: tagger output against a gold tagged corpus (confusion matrix,
//! accuracy) and extracted relations against a gold relation set
//! (precision, recall, F-score).

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::extraction::Relation;
use crate::tagging::{DataFileError, TaggedSentence};
use crate::tagset::TagId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("gold corpus has {gold} sentences, predicted has {predicted}")]
    SentenceCount { gold: usize, predicted: usize },
    #[error("sentence {sentence}: gold has {gold} tokens, predicted has {predicted}")]
    TokenCount { sentence: usize, gold: usize, predicted: usize },
    #[error("sentence {sentence}, token {token}: gold text {gold:?} != predicted {predicted:?}")]
    TokenText { sentence: usize, token: usize, gold: String, predicted: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("confusion matrix holds no tokens")]
pub struct EmptyMatrix;

/// Counts of (gold tag, assigned tag) pairs over aligned corpora.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: BTreeMap<(TagId, TagId), u64>,
    total: u64,
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    pub fn add(&mut self, gold: TagId, assigned: TagId, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry((gold, assigned)).or_insert(0) += count;
        self.total += count;
    }

    pub fn count(&self, gold: TagId, assigned: TagId) -> u64 {
        self.counts.get(&(gold, assigned)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn diagonal_total(&self) -> u64 {
        self.counts
            .iter()
            .filter(|((g, a), _)| g == a)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Entries in (gold, assigned) order, zero entries omitted.
    pub fn iter(&self) -> impl Iterator<Item = (TagId, TagId, u64)> + '_ {
        self.counts.iter().map(|(&(g, a), &c)| (g, a, c))
    }

    /// Off-diagonal entries only.
    pub fn errors(&self) -> impl Iterator<Item = (TagId, TagId, u64)> + '_ {
        self.iter().filter(|(g, a, _)| g != a)
    }

    pub fn error_total(&self) -> u64 {
        self.total - self.diagonal_total()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (g, a, c) in other.iter() {
            self.add(g, a, c);
        }
    }

    /// Fraction of tokens whose assigned tag equals the gold tag.
    pub fn accuracy(&self) -> Result<f64, EmptyMatrix> {
        if self.total == 0 {
            return Err(EmptyMatrix);
        }
        Ok(self.diagonal_total() as f64 / self.total as f64)
    }
}

/// Builds the confusion matrix for two corpora over the same text. The
/// corpora must align sentence-for-sentence and token-for-token.
pub fn build_confusion(
    gold: &[TaggedSentence],
    predicted: &[TaggedSentence],
) -> Result<ConfusionMatrix, AlignmentError> {
    if gold.len() != predicted.len() {
        return Err(AlignmentError::SentenceCount { gold: gold.len(), predicted: predicted.len() });
    }
    let mut matrix = ConfusionMatrix::new();
    for (si, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.tokens.len() != p.tokens.len() {
            return Err(AlignmentError::TokenCount {
                sentence: si,
                gold: g.tokens.len(),
                predicted: p.tokens.len(),
            });
        }
        for (ti, (gt, pt)) in g.tokens.iter().zip(&p.tokens).enumerate() {
            if gt.text != pt.text {
                return Err(AlignmentError::TokenText {
                    sentence: si,
                    token: ti,
                    gold: gt.text.clone(),
                    predicted: pt.text.clone(),
                });
            }
            matrix.add(gt.tag.id(), pt.tag.id(), 1);
        }
    }
    Ok(matrix)
}

pub const CONFUSION_HEADER: &str = "gold\tassigned\tcount";

/// Renders the matrix as TSV with a header line, rows in (gold, assigned)
/// order.
pub fn render_confusion_tsv(matrix: &ConfusionMatrix) -> String {
    let mut out = String::from(CONFUSION_HEADER);
    out.push('\n');
    for (g, a, c) in matrix.iter() {
        let _ = writeln!(out, "{g}\t{a}\t{c}");
    }
    out
}

/// Parses the TSV format written by [`render_confusion_tsv`]. Repeated
/// (gold, assigned) pairs accumulate.
pub fn parse_confusion_tsv(text: &str) -> Result<ConfusionMatrix, DataFileError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(DataFileError { line: 1, reason: "missing header line".into() });
    };
    if header.trim_end() != CONFUSION_HEADER {
        return Err(DataFileError {
            line: 1,
            reason: format!("expected header {CONFUSION_HEADER:?}, found {header:?}"),
        });
    }
    let mut matrix = ConfusionMatrix::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DataFileError {
                line: idx + 1,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let gold = TagId::from_str_strict(fields[0])
            .map_err(|e| DataFileError { line: idx + 1, reason: e.to_string() })?;
        let assigned = TagId::from_str_strict(fields[1])
            .map_err(|e| DataFileError { line: idx + 1, reason: e.to_string() })?;
        let count: u64 = fields[2].parse().map_err(|_| DataFileError {
            line: idx + 1,
            reason: format!("count {:?} is not a nonnegative integer", fields[2]),
        })?;
        matrix.add(gold, assigned, count);
    }
    Ok(matrix)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl EvalReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> EvalReport {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        EvalReport {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f_score: f_score(precision, recall),
        }
    }
}

fn relation_keys(relations: &[Relation], directional: bool) -> HashSet<(String, String, String)> {
    relations
        .iter()
        .map(|r| {
            let (a, b) = if directional || r.agent <= r.target {
                (r.agent.clone(), r.target.clone())
            } else {
                (r.target.clone(), r.agent.clone())
            };
            (r.doc.clone(), a, b)
        })
        .collect()
}

/// Scores predicted relations against gold. Matching is exact on the
/// (document, agent, target) key; verbs are ignored; the pair is unordered
/// when `directional` is false.
pub fn evaluate_relations(
    predicted: &[Relation],
    gold: &[Relation],
    directional: bool,
) -> EvalReport {
    let predicted = relation_keys(predicted, directional);
    let gold = relation_keys(gold, directional);
    let tp = predicted.intersection(&gold).count() as u64;
    EvalReport::from_counts(tp, predicted.len() as u64 - tp, gold.len() as u64 - tp)
}

/// Parses gold relations: `doc_id<TAB>agent<TAB>target`, no header.
pub fn parse_gold_relations(
    text: &str,
    directional: bool,
) -> Result<Vec<Relation>, DataFileError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DataFileError {
                line: idx + 1,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[1].is_empty() || fields[2].is_empty() {
            return Err(DataFileError {
                line: idx + 1,
                reason: "agent and target must be non-empty".into(),
            });
        }
        out.push(Relation::new(fields[0], fields[1], fields[2], "", directional));
    }
    Ok(out)
}

/// Plain-text report table.
pub fn render_report_text(report: &EvalReport) -> String {
    format!(
        "true positives   {}\nfalse positives  {}\nfalse negatives  {}\nprecision        {:.3}\nrecall           {:.3}\nf-score          {:.3}\n",
        report.true_positives,
        report.false_positives,
        report.false_negatives,
        report.precision,
        report.recall,
        report.f_score,
    )
}

/// Machine-readable report: header plus one row.
pub fn render_report_tsv(report: &EvalReport) -> String {
    format!(
        "tp\tfp\tfn\tprecision\trecall\tf_score\n{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
        report.true_positives,
        report.false_positives,
        report.false_negatives,
        report.precision,
        report.recall,
        report.f_score,
    )
}
