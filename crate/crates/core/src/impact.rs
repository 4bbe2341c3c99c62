//! Tag-error impact analysis: groups confusion-matrix errors by gold tag,
//! classifies each (gold, assigned) confusion against the chunk grammar,
//! verifies verdicts by re-chunking, folds the nullified error mass into a
//! functional accuracy figure, and stress-tests the whole claim with Monte
//! Carlo tag perturbation.
//!
//! Classification is ternary. A confusion is nullified when the two tags
//! fill exactly the same grammar positions (the chunker only ever tests
//! class membership, so such a swap cannot move any boundary), detrimental
//! when they share none or when exactly one side is a protected participle
//! tag, and context-dependent when the overlap is partial. Compat mode
//! projects this onto the binary convention of the curated verdict table,
//! which treats a shared noun-phrase modifier or head position as good
//! enough to call a confusion harmless.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chunking::{ChunkGrammar, ChunkSpan, chunk_tagged};
use crate::evaluation::{ConfusionMatrix, EmptyMatrix};
use crate::extraction::{SvoTriple, extract_svo};
use crate::tagging::{DataFileError, TaggedSentence, TaggedToken};
use crate::tagset::{GrammarPosition, PosTag, TagId};
use crate::textprep::SentenceId;

/// Errors of one gold tag, broken down by what the tagger assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct TagErrorGroup {
    pub gold: TagId,
    pub total: u64,
    /// (assigned, count), descending, ties by tag name.
    pub subgroups: Vec<(TagId, u64)>,
    /// Error mass through this group, as a fraction of all errors.
    pub cumulative_fraction: f64,
}

/// Off-diagonal mass grouped by gold tag, largest group first, ties by tag
/// name. Diagonal entries are ignored; a diagonal-only matrix yields an
/// empty list.
pub fn group_errors(matrix: &ConfusionMatrix) -> Vec<TagErrorGroup> {
    let mut by_gold: BTreeMap<TagId, Vec<(TagId, u64)>> = BTreeMap::new();
    for (gold, assigned, count) in matrix.errors() {
        by_gold.entry(gold).or_default().push((assigned, count));
    }
    let mut groups: Vec<TagErrorGroup> = by_gold
        .into_iter()
        .map(|(gold, mut subgroups)| {
            subgroups.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.as_str().cmp(b.0.as_str())));
            let total = subgroups.iter().map(|&(_, c)| c).sum();
            TagErrorGroup { gold, total, subgroups, cumulative_fraction: 0.0 }
        })
        .collect();
    groups.sort_by(|a, b| b.total.cmp(&a.total).then(a.gold.as_str().cmp(b.gold.as_str())));
    let grand: u64 = groups.iter().map(|g| g.total).sum();
    let mut running = 0;
    for group in &mut groups {
        running += group.total;
        group.cumulative_fraction = running as f64 / grand as f64;
    }
    groups
}

/// Threshold selection of the error pairs to examine. Groups are taken in
/// descending order while the error mass before a group is below
/// `theta_group` (so the group crossing the threshold is included), then
/// the same rule picks subgroups within each selected group against
/// `theta_sub`.
pub fn select_examined(
    groups: &[TagErrorGroup],
    theta_group: f64,
    theta_sub: f64,
) -> Vec<(TagId, TagId)> {
    let grand: u64 = groups.iter().map(|g| g.total).sum();
    if grand == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut before = 0u64;
    for group in groups {
        if (before as f64 / grand as f64) < theta_group {
            select_subgroups(group, theta_sub, &mut out);
        }
        before += group.total;
    }
    out
}

fn select_subgroups(group: &TagErrorGroup, theta_sub: f64, out: &mut Vec<(TagId, TagId)>) {
    let mut before = 0u64;
    for &(assigned, count) in &group.subgroups {
        if (before as f64 / group.total as f64) < theta_sub {
            out.push((group.gold, assigned));
        }
        before += count;
    }
}

/// The six gold tags the compat analysis examines.
pub const COMPAT_EXAMINED_TAGS: [TagId; 6] =
    [TagId::NN, TagId::JJ, TagId::NNS, TagId::SYM, TagId::VBP, TagId::VBD];

/// Compat-mode examined set: subgroup threshold selection restricted to
/// the six fixed groups, united with every pair in the curated verdict
/// table. The group threshold is not applied because the six-group cut is
/// itself the fixture: on the distribution the curated table was built
/// from, a 0.8 group threshold alone stops one group short.
pub fn compat_examined_pairs(groups: &[TagErrorGroup], theta_sub: f64) -> Vec<(TagId, TagId)> {
    let mut out = Vec::new();
    for group in groups.iter().filter(|g| COMPAT_EXAMINED_TAGS.contains(&g.gold)) {
        select_subgroups(group, theta_sub, &mut out);
    }
    for &((gold, assigned), _) in curated_verdicts() {
        if !out.contains(&(gold, assigned)) {
            out.push((gold, assigned));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerdictKind {
    Nullified,
    Detrimental,
    ContextDependent,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Nullified => "Nullified",
            VerdictKind::Detrimental => "Detrimental",
            VerdictKind::ContextDependent => "ContextDependent",
        }
    }

    pub fn from_str_strict(text: &str) -> Option<VerdictKind> {
        match text {
            "Nullified" => Some(VerdictKind::Nullified),
            "Detrimental" => Some(VerdictKind::Detrimental),
            "ContextDependent" => Some(VerdictKind::ContextDependent),
            _ => None,
        }
    }
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactVerdict {
    pub verdict: VerdictKind,
    pub reason: String,
}

impl ImpactVerdict {
    fn new(verdict: VerdictKind, reason: String) -> ImpactVerdict {
        ImpactVerdict { verdict, reason }
    }
}

static CURATED: OnceLock<Vec<((TagId, TagId), ImpactVerdict)>> = OnceLock::new();

/// The shipped verdict table for the most frequent confusions; compat-mode
/// classification reproduces these rows exactly.
pub fn curated_verdicts() -> &'static [((TagId, TagId), ImpactVerdict)] {
    CURATED.get_or_init(|| {
        parse_verdict_rows(include_str!("../data/compat_verdicts.tsv"))
            .expect("bundled verdict table parses")
            .into_iter()
            .map(|row| ((row.gold, row.assigned), ImpactVerdict::new(row.verdict, row.reason)))
            .collect()
    })
}

fn curated_lookup(gold: TagId, assigned: TagId) -> Option<&'static ImpactVerdict> {
    curated_verdicts()
        .iter()
        .find(|((g, a), _)| *g == gold && *a == assigned)
        .map(|(_, v)| v)
}

/// Classifies one confusion against the grammar. Identity pairs are
/// trivially nullified. Protection has precedence: when exactly one of the
/// two tags is a protectable participle, the swap changes what the
/// protection pass hides and the verdict is detrimental regardless of
/// profile overlap. With `paper_compat` the curated table is consulted
/// first and the ternary result is collapsed to its binary convention: a
/// context-dependent pair sharing a noun-phrase modifier or head position
/// counts as nullified.
pub fn classify_pair(
    gold: TagId,
    assigned: TagId,
    grammar: ChunkGrammar,
    paper_compat: bool,
) -> ImpactVerdict {
    if paper_compat {
        if let Some(verdict) = curated_lookup(gold, assigned) {
            return verdict.clone();
        }
    }
    let primary = classify_primary(gold, assigned, grammar);
    if !paper_compat {
        return primary;
    }
    match primary.verdict {
        VerdictKind::ContextDependent => {
            let shared = grammar
                .occurrence_profile(gold)
                .shared_positions(&grammar.occurrence_profile(assigned));
            if shared.contains(&GrammarPosition::NpModifier)
                || shared.contains(&GrammarPosition::NpHead)
            {
                ImpactVerdict::new(
                    VerdictKind::Nullified,
                    format!("{assigned} was an alternative match to {gold} in noun phrase recognition"),
                )
            } else {
                ImpactVerdict::new(VerdictKind::Detrimental, primary.reason)
            }
        }
        _ => primary,
    }
}

fn classify_primary(gold: TagId, assigned: TagId, grammar: ChunkGrammar) -> ImpactVerdict {
    if gold == assigned {
        return ImpactVerdict::new(VerdictKind::Nullified, "identical tags".into());
    }
    if gold.is_protectable() != assigned.is_protectable() {
        return ImpactVerdict::new(
            VerdictKind::Detrimental,
            format!(
                "protected verb tag: exactly one of {gold}, {assigned} is hidden during noun phrase recognition"
            ),
        );
    }
    let gold_profile = grammar.occurrence_profile(gold);
    let assigned_profile = grammar.occurrence_profile(assigned);
    if gold_profile == assigned_profile {
        return ImpactVerdict::new(
            VerdictKind::Nullified,
            format!(
                "{assigned} occupies exactly the grammar positions of {gold}: {:?}",
                gold_profile.positions()
            ),
        );
    }
    let shared = gold_profile.shared_positions(&assigned_profile);
    if shared.is_empty() {
        let reason = if gold_profile.is_unused() {
            format!("{gold} is unused by the grammar but {assigned} matches inside phrases")
        } else if assigned_profile.is_unused() {
            format!("{assigned} is unused by the grammar, so every {gold} position is lost")
        } else {
            format!("{gold} and {assigned} share no grammar position")
        };
        return ImpactVerdict::new(VerdictKind::Detrimental, reason);
    }
    let missing: Vec<GrammarPosition> = gold_profile
        .positions()
        .iter()
        .copied()
        .filter(|p| *p != GrammarPosition::Unused && !assigned_profile.contains(*p))
        .collect();
    let gained: Vec<GrammarPosition> = assigned_profile
        .positions()
        .iter()
        .copied()
        .filter(|p| *p != GrammarPosition::Unused && !gold_profile.contains(*p))
        .collect();
    ImpactVerdict::new(
        VerdictKind::ContextDependent,
        format!("{assigned} preserves {shared:?} of {gold} but misses {missing:?} and adds {gained:?}"),
    )
}

/// Classifies every listed pair.
pub fn classify_examined(
    pairs: &[(TagId, TagId)],
    grammar: ChunkGrammar,
    paper_compat: bool,
) -> BTreeMap<(TagId, TagId), ImpactVerdict> {
    pairs
        .iter()
        .map(|&(g, a)| ((g, a), classify_pair(g, a, grammar, paper_compat)))
        .collect()
}

/// Re-chunks the sentence with one tag substituted and reports whether the
/// span list is unchanged (the substitution is nullified in this context).
pub fn substitution_oracle(
    sentence: &TaggedSentence,
    position: usize,
    assigned: TagId,
    grammar: ChunkGrammar,
) -> bool {
    let original = chunk_tagged(sentence, grammar).expect("oracle input is unprotected");
    let mut altered = sentence.clone();
    altered.tokens[position].tag = PosTag::new(assigned);
    let rechunked = chunk_tagged(&altered, grammar).expect("oracle input is unprotected");
    original.spans == rechunked.spans
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub total_tokens: u64,
    pub correct_tokens: u64,
    pub examined_errors: u64,
    pub nullified_errors: u64,
    pub raw_accuracy: f64,
    pub functional_accuracy: f64,
}

/// Folds nullified error mass into the accuracy figure. Only pairs present
/// in `verdicts` count as examined; unexamined error mass is treated as
/// detrimental, making the functional accuracy a lower bound.
pub fn functional_accuracy(
    matrix: &ConfusionMatrix,
    verdicts: &BTreeMap<(TagId, TagId), ImpactVerdict>,
) -> Result<AccuracyReport, EmptyMatrix> {
    if matrix.total() == 0 {
        return Err(EmptyMatrix);
    }
    let correct = matrix.diagonal_total();
    let mut examined = 0;
    let mut nullified = 0;
    for (gold, assigned, count) in matrix.errors() {
        if let Some(v) = verdicts.get(&(gold, assigned)) {
            examined += count;
            if v.verdict == VerdictKind::Nullified {
                nullified += count;
            }
        }
    }
    let total = matrix.total();
    Ok(AccuracyReport {
        total_tokens: total,
        correct_tokens: correct,
        examined_errors: examined,
        nullified_errors: nullified,
        raw_accuracy: correct as f64 / total as f64,
        functional_accuracy: (correct + nullified) as f64 / total as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub gold: TagId,
    pub assigned: TagId,
    pub verdict: VerdictKind,
    pub reason: String,
}

/// Parses `gold<TAB>assigned<TAB>verdict<TAB>reason` rows; `#` lines are
/// comments.
pub fn parse_verdict_rows(text: &str) -> Result<Vec<VerdictRow>, DataFileError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(DataFileError {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let gold = TagId::from_str_strict(fields[0])
            .map_err(|e| DataFileError { line: line_no, reason: e.to_string() })?;
        let assigned = TagId::from_str_strict(fields[1])
            .map_err(|e| DataFileError { line: line_no, reason: e.to_string() })?;
        let verdict = VerdictKind::from_str_strict(fields[2]).ok_or_else(|| DataFileError {
            line: line_no,
            reason: format!("unknown verdict {:?}", fields[2]),
        })?;
        out.push(VerdictRow { gold, assigned, verdict, reason: fields[3].to_string() });
    }
    Ok(out)
}

/// Renders verdicts in the fixture format, one row per examined pair.
pub fn render_verdict_rows(rows: &[VerdictRow]) -> String {
    let mut out = String::from("# gold\tassigned\tverdict\treason\n");
    for row in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", row.gold, row.assigned, row.verdict, row.reason);
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PerturbError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("tag {0} appears in the corpus but its confusion row is empty")]
    DegenerateMatrix(TagId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDegradation {
    pub trial: u64,
    pub sentences: u64,
    pub changed_sentences: u64,
    pub changed_sentence_fraction: f64,
    /// Jaccard distance between the original and perturbed triple sets.
    pub changed_triple_fraction: f64,
    /// Changed sentences whose substitutions were all classified nullified.
    pub nullified_only_fraction: f64,
    /// Changed sentences containing at least one non-nullified substitution.
    pub detrimental_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationReport {
    pub trials: Vec<TrialDegradation>,
    pub mean_changed_sentence_fraction: f64,
    pub mean_changed_triple_fraction: f64,
    pub mean_nullified_only_fraction: f64,
    pub mean_detrimental_fraction: f64,
}

/// Monte Carlo perturbation: per trial, every token's tag is resampled
/// from its gold tag's row of the confusion matrix (the diagonal carries
/// the keep-it probability), the corpus is re-chunked, and changed
/// sentences and triples are counted. A changed sentence is attributed to
/// nullified substitutions only when every substitution in it is
/// classified nullified; the grammar-consistency property says that bucket
/// stays empty. Trials run in parallel on independent seed streams; equal
/// seeds give equal reports.
pub fn perturb_corpus(
    gold: &[TaggedSentence],
    matrix: &ConfusionMatrix,
    trials: u64,
    seed: u64,
    grammar: ChunkGrammar,
) -> Result<DegradationReport, PerturbError> {
    if trials == 0 {
        return Err(PerturbError::NoTrials);
    }
    let mut rows: HashMap<TagId, (Vec<TagId>, WeightedIndex<u64>)> = HashMap::new();
    for sentence in gold {
        for token in &sentence.tokens {
            let gold_tag = token.tag.id();
            if rows.contains_key(&gold_tag) {
                continue;
            }
            let entries: Vec<(TagId, u64)> = matrix
                .iter()
                .filter(|&(g, _, _)| g == gold_tag)
                .map(|(_, a, c)| (a, c))
                .collect();
            if entries.is_empty() {
                return Err(PerturbError::DegenerateMatrix(gold_tag));
            }
            let tags: Vec<TagId> = entries.iter().map(|&(a, _)| a).collect();
            let weights = WeightedIndex::new(entries.iter().map(|&(_, c)| c))
                .map_err(|_| PerturbError::DegenerateMatrix(gold_tag))?;
            rows.insert(gold_tag, (tags, weights));
        }
    }
    let mut nullified_pair: HashMap<(TagId, TagId), bool> = HashMap::new();
    for (&gold_tag, (tags, _)) in &rows {
        for &assigned in tags {
            nullified_pair.entry((gold_tag, assigned)).or_insert_with(|| {
                classify_pair(gold_tag, assigned, grammar, false).verdict
                    == VerdictKind::Nullified
            });
        }
    }
    let original: Vec<Vec<ChunkSpan>> = gold
        .iter()
        .map(|s| chunk_tagged(s, grammar).expect("gold corpus is unprotected").spans)
        .collect();
    let original_triples: HashSet<SvoTriple> = gold
        .iter()
        .map(|s| chunk_tagged(s, grammar).expect("gold corpus is unprotected"))
        .flat_map(|c| extract_svo(&c))
        .collect();

    let mut per_trial: Vec<TrialDegradation> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut changed = 0u64;
            let mut nullified_only = 0u64;
            let mut detrimental = 0u64;
            let mut perturbed_triples: HashSet<SvoTriple> = HashSet::new();
            for (si, sentence) in gold.iter().enumerate() {
                let mut substitutions: Vec<(TagId, TagId)> = Vec::new();
                let tokens: Vec<TaggedToken> = sentence
                    .tokens
                    .iter()
                    .map(|token| {
                        let gold_tag = token.tag.id();
                        let (tags, weights) = &rows[&gold_tag];
                        let assigned = tags[weights.sample(&mut rng)];
                        if assigned != gold_tag {
                            substitutions.push((gold_tag, assigned));
                        }
                        TaggedToken { text: token.text.clone(), tag: PosTag::new(assigned) }
                    })
                    .collect();
                let perturbed =
                    TaggedSentence { source: sentence.source.clone(), tokens };
                let chunked =
                    chunk_tagged(&perturbed, grammar).expect("perturbed corpus is unprotected");
                perturbed_triples.extend(extract_svo(&chunked));
                if chunked.spans != original[si] {
                    changed += 1;
                    if substitutions.iter().all(|p| nullified_pair[p]) {
                        nullified_only += 1;
                    } else {
                        detrimental += 1;
                    }
                }
            }
            let union = original_triples.union(&perturbed_triples).count();
            let intersection = original_triples.intersection(&perturbed_triples).count();
            let sentences = gold.len() as u64;
            let frac = |n: u64| if sentences == 0 { 0.0 } else { n as f64 / sentences as f64 };
            TrialDegradation {
                trial,
                sentences,
                changed_sentences: changed,
                changed_sentence_fraction: frac(changed),
                changed_triple_fraction: if union == 0 {
                    0.0
                } else {
                    1.0 - intersection as f64 / union as f64
                },
                nullified_only_fraction: frac(nullified_only),
                detrimental_fraction: frac(detrimental),
            }
        })
        .collect();
    per_trial.sort_by_key(|t| t.trial);
    let n = trials as f64;
    let mean = |f: fn(&TrialDegradation) -> f64| per_trial.iter().map(f).sum::<f64>() / n;
    Ok(DegradationReport {
        mean_changed_sentence_fraction: mean(|t| t.changed_sentence_fraction),
        mean_changed_triple_fraction: mean(|t| t.changed_triple_fraction),
        mean_nullified_only_fraction: mean(|t| t.nullified_only_fraction),
        mean_detrimental_fraction: mean(|t| t.detrimental_fraction),
        trials: per_trial,
    })
}

pub const DEGRADATION_HEADER: &str = "trial\tsentences\tchanged_sentences\tchanged_sentence_fraction\tchanged_triple_fraction\tnullified_only_fraction\tdetrimental_fraction";

/// Per-trial rows plus a final mean row.
pub fn render_degradation_tsv(report: &DegradationReport) -> String {
    let mut out = String::from(DEGRADATION_HEADER);
    out.push('\n');
    for t in &report.trials {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            t.trial,
            t.sentences,
            t.changed_sentences,
            t.changed_sentence_fraction,
            t.changed_triple_fraction,
            t.nullified_only_fraction,
            t.detrimental_fraction,
        );
    }
    let sentences = report.trials.first().map_or(0, |t| t.sentences);
    let mean_changed = report.trials.iter().map(|t| t.changed_sentences).sum::<u64>() as f64
        / report.trials.len().max(1) as f64;
    let _ = writeln!(
        out,
        "mean\t{}\t{:.2}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
        sentences,
        mean_changed,
        report.mean_changed_sentence_fraction,
        report.mean_changed_triple_fraction,
        report.mean_nullified_only_fraction,
        report.mean_detrimental_fraction,
    );
    out
}

/// Random tag sequences for grammar stress tests: `sentences` sentences of
/// 1 to 40 tokens, tags uniform over the whole tag set, deterministic in
/// the seed.
pub fn random_tag_corpus(sentences: usize, seed: u64) -> Vec<TaggedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences)
        .map(|index| {
            let len = rng.gen_range(1..=40);
            TaggedSentence {
                source: SentenceId { doc: "stress".into(), index },
                tokens: (0..len)
                    .map(|j| TaggedToken {
                        text: format!("w{j}"),
                        tag: PosTag::new(TagId::ALL[rng.gen_range(0..TagId::ALL.len())]),
                    })
                    .collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::parse_confusion_tsv;
    use crate::tagset::TagId::*;

    fn compat_matrix() -> ConfusionMatrix {
        parse_confusion_tsv(include_str!("../data/compat_confusion.tsv")).unwrap()
    }

    fn sentence(ids: &[TagId]) -> TaggedSentence {
        TaggedSentence {
            source: SentenceId { doc: "t".into(), index: 0 },
            tokens: ids
                .iter()
                .enumerate()
                .map(|(i, &id)| TaggedToken { text: format!("w{i}"), tag: PosTag::new(id) })
                .collect(),
        }
    }

    #[test]
    fn grouping_orders_by_mass_with_name_ties() {
        let mut m = ConfusionMatrix::new();
        m.add(NN, NNP, 2);
        m.add(JJ, NN, 1);
        m.add(DT, IN, 1);
        let groups = group_errors(&m);
        assert_eq!(groups[0].gold, NN);
        assert_eq!(groups[0].total, 2);
        // DT and JJ both have 1 error; DT sorts first by name.
        assert_eq!(groups[1].gold, DT);
        assert_eq!(groups[2].gold, JJ);
        assert!((groups[0].cumulative_fraction - 0.5).abs() < 1e-12);
        assert!((groups[2].cumulative_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_matrix_has_no_groups() {
        let mut m = ConfusionMatrix::new();
        m.add(NN, NN, 10);
        assert!(group_errors(&m).is_empty());
    }

    #[test]
    fn compat_matrix_distribution() {
        let groups = group_errors(&compat_matrix());
        assert_eq!(groups[0].gold, NN);
        let grand: u64 = groups.iter().map(|g| g.total).sum();
        assert_eq!(grand, 30_736);
        assert!((groups[0].total as f64 / grand as f64 - 0.5227).abs() < 1e-3);
        let first_six: Vec<TagId> = groups.iter().take(6).map(|g| g.gold).collect();
        assert_eq!(first_six, COMPAT_EXAMINED_TAGS);
        let six_mass: u64 = groups.iter().take(6).map(|g| g.total).sum();
        assert_eq!(six_mass, 26_630);
        assert!((six_mass as f64 / grand as f64 - 0.866).abs() < 1e-3);
    }

    #[test]
    fn threshold_selection_stops_after_crossing_group() {
        let groups = group_errors(&compat_matrix());
        let pairs = select_examined(&groups, 0.8, 0.9);
        let golds: HashSet<TagId> = pairs.iter().map(|&(g, _)| g).collect();
        // The fifth group crosses 0.8; the sixth is not reached.
        assert_eq!(
            golds,
            HashSet::from([NN, JJ, NNS, SYM, VBP])
        );
        let all = select_examined(&groups, 1.0, 1.0);
        let total_pairs = compat_matrix().errors().count();
        assert_eq!(all.len(), total_pairs);
    }

    #[test]
    fn single_group_is_selected_at_half_threshold() {
        let mut m = ConfusionMatrix::new();
        m.add(NN, NNP, 4);
        let pairs = select_examined(&group_errors(&m), 0.5, 0.5);
        assert_eq!(pairs, vec![(NN, NNP)]);
    }

    #[test]
    fn compat_examined_set() {
        let groups = group_errors(&compat_matrix());
        let pairs = compat_examined_pairs(&groups, 0.9);
        assert!(pairs.contains(&(NN, NNS)));
        assert!(pairs.contains(&(NN, VBG)));
        assert!(pairs.contains(&(VBD, JJ)));
        assert!(!pairs.contains(&(VBP, VBZ)));
        assert!(!pairs.contains(&(VBD, VBG)));
        assert!(!pairs.contains(&(NN, RB)));
        assert!(!pairs.contains(&(JJ, RB)));
        let golds: HashSet<TagId> = pairs.iter().map(|&(g, _)| g).collect();
        assert_eq!(golds, HashSet::from(COMPAT_EXAMINED_TAGS));
    }

    #[test]
    fn classification_examples() {
        let g = ChunkGrammar::default();
        assert_eq!(classify_pair(NN, NNP, g, false).verdict, VerdictKind::Nullified);
        assert_eq!(classify_pair(JJ, VBN, g, false).verdict, VerdictKind::Detrimental);
        assert_eq!(classify_pair(SYM, NN, g, false).verdict, VerdictKind::Detrimental);
        assert_eq!(classify_pair(NN, NN, g, false).verdict, VerdictKind::Nullified);
        assert_eq!(classify_pair(RB, JJ, g, false).verdict, VerdictKind::Detrimental);
        assert_eq!(classify_pair(DT, WDT, g, false).verdict, VerdictKind::ContextDependent);
        assert_eq!(classify_pair(VBD, VBG, g, false).verdict, VerdictKind::Nullified);
        assert_eq!(classify_pair(VBD, VBP, g, false).verdict, VerdictKind::Detrimental);
        assert_eq!(classify_pair(VBN, VBD, g, false).verdict, VerdictKind::ContextDependent);
    }

    #[test]
    fn compat_collapses_context_dependent_pairs() {
        let g = ChunkGrammar::default();
        assert_eq!(classify_pair(NN, JJ, g, false).verdict, VerdictKind::ContextDependent);
        assert_eq!(classify_pair(NN, JJ, g, true).verdict, VerdictKind::Nullified);
        assert_eq!(classify_pair(CD, JJ, g, true).verdict, VerdictKind::Nullified);
        assert_eq!(classify_pair(VBP, VB, g, false).verdict, VerdictKind::ContextDependent);
        assert_eq!(classify_pair(VBP, VB, g, true).verdict, VerdictKind::Detrimental);
    }

    #[test]
    fn compat_reproduces_every_curated_row() {
        let g = ChunkGrammar::default();
        for &((gold, assigned), ref expected) in curated_verdicts() {
            let got = classify_pair(gold, assigned, g, true);
            assert_eq!(got, *expected, "{gold} -> {assigned}");
        }
        assert_eq!(curated_verdicts().len(), 18);
    }

    #[test]
    fn curated_table_overrides_the_profile_rule() {
        let g = ChunkGrammar::default();
        assert_eq!(classify_pair(NNS, VBZ, g, false).verdict, VerdictKind::Detrimental);
        assert_eq!(classify_pair(NNS, VBZ, g, true).verdict, VerdictKind::Nullified);
        assert_eq!(classify_pair(VBP, NN, g, false).verdict, VerdictKind::Detrimental);
        assert_eq!(classify_pair(VBP, NN, g, true).verdict, VerdictKind::Nullified);
    }

    #[test]
    fn oracle_examples() {
        let g = ChunkGrammar::default();
        let s = sentence(&[DT, NN]);
        assert!(substitution_oracle(&s, 1, NN, g));
        assert!(substitution_oracle(&s, 1, NNP, g));
        assert!(!substitution_oracle(&s, 1, VBG, g));
    }

    #[test]
    fn functional_accuracy_on_compat_matrix() {
        let m = compat_matrix();
        let groups = group_errors(&m);
        let pairs = compat_examined_pairs(&groups, 0.9);
        let verdicts = classify_examined(&pairs, ChunkGrammar::default(), true);
        let report = functional_accuracy(&m, &verdicts).unwrap();
        assert_eq!(report.total_tokens, 182_399);
        assert_eq!(report.correct_tokens, 151_663);
        assert_eq!(report.nullified_errors, 20_928);
        assert_eq!(report.examined_errors, 25_986);
        assert!((report.raw_accuracy - 0.8315).abs() < 1e-4);
        assert!((report.functional_accuracy - 0.9462).abs() < 1e-4);
        assert!(report.functional_accuracy >= report.raw_accuracy);
    }

    #[test]
    fn functional_accuracy_edge_cases() {
        let mut diagonal = ConfusionMatrix::new();
        diagonal.add(NN, NN, 5);
        let report = functional_accuracy(&diagonal, &BTreeMap::new()).unwrap();
        assert_eq!(report.raw_accuracy, 1.0);
        assert_eq!(report.functional_accuracy, 1.0);

        let mut m = ConfusionMatrix::new();
        m.add(NN, NN, 5);
        m.add(JJ, VBN, 5);
        let verdicts =
            classify_examined(&[(JJ, VBN)], ChunkGrammar::default(), false);
        let report = functional_accuracy(&m, &verdicts).unwrap();
        assert_eq!(report.functional_accuracy, report.raw_accuracy);
        assert_eq!(report.examined_errors, 5);
        assert_eq!(report.nullified_errors, 0);

        assert_eq!(
            functional_accuracy(&ConfusionMatrix::new(), &BTreeMap::new()).unwrap_err(),
            EmptyMatrix
        );
    }

    #[test]
    fn verdict_rows_round_trip() {
        let rows = vec![VerdictRow {
            gold: NN,
            assigned: NNP,
            verdict: VerdictKind::Nullified,
            reason: "same positions".into(),
        }];
        let text = render_verdict_rows(&rows);
        assert_eq!(parse_verdict_rows(&text).unwrap(), rows);
        assert!(parse_verdict_rows("NN\tNNP\tMaybe\tx\n").is_err());
        assert!(parse_verdict_rows("NN\tNNP\n").is_err());
    }

    #[test]
    fn perturbation_is_deterministic_and_identity_is_silent() {
        let corpus = vec![
            sentence(&[DT, NN, VBZ, DT, NN]),
            sentence(&[NNP, VBZ, NNP, Period]),
        ];
        let mut identity = ConfusionMatrix::new();
        for id in [DT, NN, VBZ, NNP, Period] {
            identity.add(id, id, 1);
        }
        let g = ChunkGrammar::default();
        let a = perturb_corpus(&corpus, &identity, 5, 7, g).unwrap();
        let b = perturb_corpus(&corpus, &identity, 5, 7, g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean_changed_sentence_fraction, 0.0);
        assert_eq!(a.mean_changed_triple_fraction, 0.0);
    }

    #[test]
    fn profile_equal_substitution_never_changes_spans() {
        let corpus = vec![sentence(&[DT, NN, VBZ, DT, NN])];
        let mut m = ConfusionMatrix::new();
        for id in [DT, VBZ] {
            m.add(id, id, 1);
        }
        m.add(NN, NNP, 1);
        let report =
            perturb_corpus(&corpus, &m, 20, 11, ChunkGrammar::default()).unwrap();
        assert_eq!(report.mean_changed_sentence_fraction, 0.0);
        assert_eq!(report.mean_nullified_only_fraction, 0.0);
    }

    #[test]
    fn detrimental_substitution_changes_spans() {
        let corpus = vec![sentence(&[DT, NN, VBZ, DT, NN])];
        let mut m = ConfusionMatrix::new();
        for id in [DT, VBZ] {
            m.add(id, id, 1);
        }
        m.add(NN, VBG, 1);
        let report =
            perturb_corpus(&corpus, &m, 5, 11, ChunkGrammar::default()).unwrap();
        assert!(report.mean_changed_sentence_fraction > 0.0);
        assert_eq!(report.mean_nullified_only_fraction, 0.0);
        assert!(report.mean_detrimental_fraction > 0.0);
    }

    #[test]
    fn perturbation_errors() {
        let corpus = vec![sentence(&[DT, NN])];
        let mut m = ConfusionMatrix::new();
        m.add(DT, DT, 1);
        assert_eq!(
            perturb_corpus(&corpus, &m, 1, 0, ChunkGrammar::default()).unwrap_err(),
            PerturbError::DegenerateMatrix(NN)
        );
        m.add(NN, NN, 1);
        assert_eq!(
            perturb_corpus(&corpus, &m, 0, 0, ChunkGrammar::default()).unwrap_err(),
            PerturbError::NoTrials
        );
    }

    #[test]
    fn degradation_report_renders() {
        let corpus = vec![sentence(&[DT, NN])];
        let mut m = ConfusionMatrix::new();
        m.add(DT, DT, 1);
        m.add(NN, NN, 1);
        let report = perturb_corpus(&corpus, &m, 2, 3, ChunkGrammar::default()).unwrap();
        let text = render_degradation_tsv(&report);
        assert!(text.starts_with(DEGRADATION_HEADER));
        assert_eq!(text.lines().count(), 1 + 2 + 1);
        assert!(text.lines().last().unwrap().starts_with("mean\t"));
    }

    #[test]
    fn stress_corpus_is_deterministic_and_bounded() {
        let a = random_tag_corpus(50, 9);
        let b = random_tag_corpus(50, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|s| (1..=40).contains(&s.tokens.len())));
        assert_ne!(a, random_tag_corpus(50, 10));
    }
}
