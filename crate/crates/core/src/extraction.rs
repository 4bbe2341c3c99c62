//! Subject-verb-object extraction from chunked sentences and mapping of
//! the extracted structures onto entity-level relations.
//!
//! Assembly rules, applied per verb phrase: the subject is the nearest
//! noun phrase wholly before the verb phrase (no subject, no triple); the
//! objects are every noun phrase after it and before the next verb phrase
//! or the end of the sentence (none, no triple). The head of a noun
//! phrase is its last head-class token; the main verb of a verb phrase is
//! its last core-verb token before any infinitive tail. Passive voice is
//! not inverted and pronouns are not resolved.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::chunking::ChunkedSentence;
use crate::tagging::DataFileError;
use crate::tagset::{GrammarPosition, TagId, occurrence_profile};
use crate::textprep::SentenceId;

/// The token content of one noun phrase span.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhraseText {
    pub tokens: Vec<String>,
    pub head: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SvoTriple {
    pub source: SentenceId,
    pub subject: PhraseText,
    pub verb_tokens: Vec<String>,
    /// Main verb surface form.
    pub verb: String,
    /// Never empty.
    pub objects: Vec<PhraseText>,
}

fn is_head_class(id: TagId) -> bool {
    occurrence_profile(id).contains(GrammarPosition::NpHead)
}

fn is_core_verb_class(id: TagId) -> bool {
    occurrence_profile(id).contains(GrammarPosition::VpVerbCore)
}

fn phrase_text(chunked: &ChunkedSentence, start: usize, end: usize) -> PhraseText {
    let tokens: Vec<String> = chunked.sentence.tokens[start..end]
        .iter()
        .map(|t| t.text.clone())
        .collect();
    let head = chunked.sentence.tokens[start..end]
        .iter()
        .rev()
        .find(|t| is_head_class(t.tag.id()))
        .or_else(|| chunked.sentence.tokens[start..end].last())
        .map(|t| t.text.clone())
        .unwrap_or_default();
    PhraseText { tokens, head }
}

fn main_verb(chunked: &ChunkedSentence, start: usize, end: usize) -> String {
    let tokens = &chunked.sentence.tokens[start..end];
    let tail = tokens
        .iter()
        .position(|t| t.tag.id() == TagId::TO)
        .unwrap_or(tokens.len());
    tokens[..tail]
        .iter()
        .rev()
        .find(|t| is_core_verb_class(t.tag.id()))
        .or_else(|| tokens[..tail].last())
        .or_else(|| tokens.last())
        .map(|t| t.text.clone())
        .unwrap_or_default()
}

/// Extracts at most one triple per verb phrase.
pub fn extract_svo(chunked: &ChunkedSentence) -> Vec<SvoTriple> {
    let nps: Vec<(usize, usize)> = chunked.noun_phrases().map(|s| (s.start, s.end)).collect();
    let vps: Vec<(usize, usize)> = chunked.verb_phrases().map(|s| (s.start, s.end)).collect();
    let mut triples = Vec::new();
    for (vi, &(v_start, v_end)) in vps.iter().enumerate() {
        let Some(&(s_start, s_end)) = nps.iter().filter(|&&(_, end)| end <= v_start).last()
        else {
            continue;
        };
        let object_limit = vps.get(vi + 1).map_or(usize::MAX, |&(start, _)| start);
        let objects: Vec<PhraseText> = nps
            .iter()
            .filter(|&&(start, end)| start >= v_end && end <= object_limit)
            .map(|&(start, end)| phrase_text(chunked, start, end))
            .collect();
        if objects.is_empty() {
            continue;
        }
        triples.push(SvoTriple {
            source: chunked.sentence.source.clone(),
            subject: phrase_text(chunked, s_start, s_end),
            verb_tokens: chunked.sentence.tokens[v_start..v_end]
                .iter()
                .map(|t| t.text.clone())
                .collect(),
            verb: main_verb(chunked, v_start, v_end),
            objects,
        });
    }
    triples
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntityDictError {
    #[error("entity dictionary is empty")]
    Empty,
    #[error("line {line}: entity entry is blank")]
    BlankEntry { line: usize },
}

/// A set of entity surface forms matched against noun phrase tokens.
/// Matching is whole-token and, by default, case-insensitive; when several
/// entries match within one phrase the longest wins (tokens, then
/// characters, then the earliest occurrence).
#[derive(Debug, Clone)]
pub struct EntityDictionary {
    surfaces: Vec<String>,
    by_key: HashMap<Vec<String>, usize>,
    max_tokens: usize,
    case_sensitive: bool,
}

impl EntityDictionary {
    pub fn new(
        entries: impl IntoIterator<Item = String>,
        case_sensitive: bool,
    ) -> Result<EntityDictionary, EntityDictError> {
        let mut dict = EntityDictionary {
            surfaces: Vec::new(),
            by_key: HashMap::new(),
            max_tokens: 0,
            case_sensitive,
        };
        for (idx, surface) in entries.into_iter().enumerate() {
            if surface.trim().is_empty() {
                return Err(EntityDictError::BlankEntry { line: idx + 1 });
            }
            let key = dict.fold_tokens(surface.split_whitespace());
            dict.max_tokens = dict.max_tokens.max(key.len());
            let slot = dict.surfaces.len();
            dict.surfaces.push(surface);
            dict.by_key.entry(key).or_insert(slot);
        }
        if dict.surfaces.is_empty() {
            return Err(EntityDictError::Empty);
        }
        Ok(dict)
    }

    /// One entry per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str, case_sensitive: bool) -> Result<EntityDictionary, EntityDictError> {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string);
        EntityDictionary::new(entries, case_sensitive)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    fn fold_tokens<'a>(&self, tokens: impl Iterator<Item = &'a str>) -> Vec<String> {
        tokens
            .map(|t| {
                if self.case_sensitive {
                    t.to_string()
                } else {
                    t.to_lowercase()
                }
            })
            .collect()
    }

    /// The best-matching entry within the token sequence, as the stored
    /// dictionary surface form.
    pub fn find_entity(&self, tokens: &[String]) -> Option<&str> {
        let folded = self.fold_tokens(tokens.iter().map(String::as_str));
        // (token count, char count, reversed start, reversed index): larger wins.
        let mut best: Option<(usize, usize, std::cmp::Reverse<usize>, std::cmp::Reverse<usize>)> =
            None;
        let mut best_idx = None;
        for start in 0..folded.len() {
            let longest = self.max_tokens.min(folded.len() - start);
            for len in (1..=longest).rev() {
                let Some(&idx) = self.by_key.get(&folded[start..start + len]) else {
                    continue;
                };
                let rank = (
                    len,
                    self.surfaces[idx].chars().count(),
                    std::cmp::Reverse(start),
                    std::cmp::Reverse(idx),
                );
                if best.is_none_or(|b| rank > b) {
                    best = Some(rank);
                    best_idx = Some(idx);
                }
            }
        }
        best_idx.map(|idx| self.surfaces[idx].as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pub doc: String,
    pub agent: String,
    pub target: String,
    pub verb: String,
    pub directional: bool,
}

impl Relation {
    /// Builds a relation, storing a nondirectional pair in lexicographic
    /// order.
    pub fn new(
        doc: impl Into<String>,
        agent: impl Into<String>,
        target: impl Into<String>,
        verb: impl Into<String>,
        directional: bool,
    ) -> Relation {
        let mut agent = agent.into();
        let mut target = target.into();
        if !directional && agent > target {
            std::mem::swap(&mut agent, &mut target);
        }
        Relation { doc: doc.into(), agent, target, verb: verb.into(), directional }
    }

    /// The matching key: entity pair within a document, verbs ignored.
    pub fn pair_key(&self) -> (String, String, String) {
        (self.doc.clone(), self.agent.clone(), self.target.clone())
    }

    fn pair_key_with_verb(&self) -> (String, String, String, String) {
        (
            self.doc.clone(),
            self.agent.clone(),
            self.target.clone(),
            self.verb.clone(),
        )
    }
}

/// Maps triples to relations. Each triple contributes one relation per
/// object phrase whose entity resolves, provided the subject entity
/// resolves too; duplicates by (doc, agent, target, verb) are collapsed,
/// keeping first-occurrence order.
pub fn map_to_relations(
    triples: &[SvoTriple],
    dict: &EntityDictionary,
    directional: bool,
) -> Vec<Relation> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for triple in triples {
        let Some(subject) = dict.find_entity(&triple.subject.tokens) else {
            continue;
        };
        for object in &triple.objects {
            let Some(target) = dict.find_entity(&object.tokens) else {
                continue;
            };
            let relation = Relation::new(
                triple.source.doc.clone(),
                subject,
                target,
                triple.verb.clone(),
                directional,
            );
            if seen.insert(relation.pair_key_with_verb()) {
                out.push(relation);
            }
        }
    }
    out
}

/// Renders relations as `doc<TAB>agent<TAB>target<TAB>verb` lines.
pub fn render_relations(relations: &[Relation]) -> String {
    let mut out = String::new();
    for r in relations {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.doc, r.agent, r.target, r.verb);
    }
    out
}

/// Parses the four-column relation format written by [`render_relations`].
pub fn parse_relations(text: &str, directional: bool) -> Result<Vec<Relation>, DataFileError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(DataFileError {
                line: idx + 1,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields[1].is_empty() || fields[2].is_empty() {
            return Err(DataFileError {
                line: idx + 1,
                reason: "agent and target must be non-empty".into(),
            });
        }
        out.push(Relation::new(fields[0], fields[1], fields[2], fields[3], directional));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunking::{ChunkGrammar, chunk_tagged};
    use crate::tagging::{TaggedSentence, TaggedToken};
    use crate::tagset::{PosTag, TagId::*};

    fn chunked(doc: &str, words: &[(&str, TagId)]) -> ChunkedSentence {
        let sentence = TaggedSentence {
            source: SentenceId { doc: doc.into(), index: 0 },
            tokens: words
                .iter()
                .map(|(w, id)| TaggedToken { text: w.to_string(), tag: PosTag::new(*id) })
                .collect(),
        };
        chunk_tagged(&sentence, ChunkGrammar::default()).unwrap()
    }

    fn dict(entries: &[&str]) -> EntityDictionary {
        EntityDictionary::new(entries.iter().map(|s| s.to_string()), false).unwrap()
    }

    #[test]
    fn simple_triple() {
        let c = chunked("d1", &[("GerE", NNP), ("binds", VBZ), ("sigK", NNP)]);
        let triples = extract_svo(&c);
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].subject.head, "GerE");
        assert_eq!(triples[0].verb, "binds");
        assert_eq!(triples[0].objects.len(), 1);
        assert_eq!(triples[0].objects[0].head, "sigK");
    }

    #[test]
    fn missing_subject_yields_no_triple() {
        let c = chunked("d1", &[("binds", VBZ), ("sigK", NNP)]);
        assert_eq!(extract_svo(&c), vec![]);
    }

    #[test]
    fn missing_object_yields_no_triple() {
        let c = chunked("d1", &[("GerE", NNP), ("binds", VBZ)]);
        assert_eq!(extract_svo(&c), vec![]);
    }

    #[test]
    fn multiple_objects_until_sentence_end() {
        let c = chunked(
            "d1",
            &[("A", NNP), ("activates", VBZ), ("B", NNP), (";", Colon), ("C", NNP)],
        );
        let triples = extract_svo(&c);
        assert_eq!(triples.len(), 1);
        let heads: Vec<&str> = triples[0].objects.iter().map(|o| o.head.as_str()).collect();
        assert_eq!(heads, vec!["B", "C"]);
    }

    #[test]
    fn objects_stop_at_next_verb_phrase() {
        let c = chunked(
            "d1",
            &[
                ("A", NNP),
                ("activates", VBZ),
                ("B", NNP),
                ("and", CC),
                ("represses", VBZ),
                ("C", NNP),
            ],
        );
        let triples = extract_svo(&c);
        assert_eq!(triples.len(), 2);
        assert_eq!(triples[0].verb, "activates");
        assert_eq!(triples[0].objects[0].head, "B");
        assert_eq!(triples[1].verb, "represses");
        assert_eq!(triples[1].subject.head, "B");
        assert_eq!(triples[1].objects[0].head, "C");
    }

    #[test]
    fn head_is_last_head_class_token() {
        let c = chunked(
            "d1",
            &[("the", DT), ("sigma", NN), ("factor", NN), ("acts", VBZ), ("here", RB)],
        );
        // No object, so build the phrase directly.
        let np = phrase_text(&c, 0, 3);
        assert_eq!(np.head, "factor");
        assert_eq!(np.tokens, vec!["the", "sigma", "factor"]);
    }

    #[test]
    fn pronoun_head_falls_back_to_last_token() {
        let c = chunked("d1", &[("It", PRP), ("binds", VBZ), ("DNA", NNP)]);
        let triples = extract_svo(&c);
        assert_eq!(triples[0].subject.head, "It");
    }

    #[test]
    fn main_verb_precedes_infinitive_tail() {
        let c = chunked(
            "d1",
            &[
                ("GerE", NNP),
                ("may", MD),
                ("bind", VB),
                ("to", TO),
                ("activate", VB),
                ("cotD", NNP),
            ],
        );
        let triples = extract_svo(&c);
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].verb, "bind");
        assert_eq!(triples[0].verb_tokens, vec!["may", "bind", "to", "activate"]);
    }

    #[test]
    fn relation_mapping_direct_match() {
        let c = chunked("d1", &[("GerE", NNP), ("binds", VBZ), ("sigK", NNP)]);
        let relations = map_to_relations(&extract_svo(&c), &dict(&["GerE", "sigK"]), true);
        assert_eq!(
            relations,
            vec![Relation::new("d1", "GerE", "sigK", "binds", true)]
        );
    }

    #[test]
    fn unmatched_subject_yields_no_relation() {
        let c = chunked(
            "d1",
            &[("the", DT), ("complex", NN), ("binds", VBZ), ("sigK", NNP)],
        );
        let relations = map_to_relations(&extract_svo(&c), &dict(&["GerE", "sigK"]), true);
        assert_eq!(relations, vec![]);
    }

    #[test]
    fn nondirectional_relations_are_canonical() {
        let a = Relation::new("d", "sigK", "GerE", "binds", false);
        let b = Relation::new("d", "GerE", "sigK", "binds", false);
        assert_eq!(a, b);
        assert_eq!(a.agent, "GerE");
        let c = Relation::new("d", "sigK", "GerE", "binds", true);
        assert_eq!(c.agent, "sigK");
    }

    #[test]
    fn longest_entity_match_wins() {
        let d = dict(&["K", "sigma K"]);
        let tokens: Vec<String> =
            ["the", "sigma", "K", "factor"].iter().map(|s| s.to_string()).collect();
        assert_eq!(d.find_entity(&tokens), Some("sigma K"));
    }

    #[test]
    fn entity_match_is_case_insensitive_and_returns_dictionary_surface() {
        let d = dict(&["GerE"]);
        let tokens: Vec<String> = vec!["GERE".into()];
        assert_eq!(d.find_entity(&tokens), Some("GerE"));
        let strict = EntityDictionary::new(vec!["GerE".into()], true).unwrap();
        assert_eq!(strict.find_entity(&tokens), None);
    }

    #[test]
    fn entity_match_is_whole_token() {
        let d = dict(&["sigK"]);
        let tokens: Vec<String> = vec!["sigKlike".into()];
        assert_eq!(d.find_entity(&tokens), None);
    }

    #[test]
    fn duplicate_relations_collapse() {
        let c1 = chunked("d1", &[("GerE", NNP), ("binds", VBZ), ("sigK", NNP)]);
        let mut triples = extract_svo(&c1);
        triples.extend(extract_svo(&c1));
        let relations = map_to_relations(&triples, &dict(&["GerE", "sigK"]), true);
        assert_eq!(relations.len(), 1);
    }

    #[test]
    fn dictionary_rejects_bad_input() {
        assert_eq!(
            EntityDictionary::new(Vec::<String>::new(), false).unwrap_err(),
            EntityDictError::Empty
        );
        assert_eq!(
            EntityDictionary::new(vec!["  ".into()], false).unwrap_err(),
            EntityDictError::BlankEntry { line: 1 }
        );
    }

    #[test]
    fn relations_round_trip() {
        let relations = vec![
            Relation::new("d1", "GerE", "sigK", "binds", true),
            Relation::new("d2", "cotD", "sigE", "activates", true),
        ];
        let text = render_relations(&relations);
        assert_eq!(parse_relations(&text, true).unwrap(), relations);
        assert!(parse_relations("a\tb\n", true).is_err());
        assert!(parse_relations("d\t\tt\tv\n", true).is_err());
    }
}
