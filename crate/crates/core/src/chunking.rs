//! Noun and verb phrase chunking over tag sequences.
//!
//! The grammar, written against tag classes:
//!
//! ```text
//! DETG  := PDT? (DT | PRP$ | WDT | WP$)
//! NMOD  := JJ | JJR | JJS | , | CC | NN | NNS | NNP | NNPS | CD
//! NHEAD := NN | NNS | NNP | NNPS | CD
//! BASE  := DETG? NMOD* NHEAD+
//! NP    := (BASE POS)? BASE  |  EX | PRP | WP | WDT
//! ADVG  := RB | RBR | RBS | WRB
//! VCORE := VB | VBD | VBG | VBN | VBP | VBZ
//! VP    := ADVG* MD? ADVG* VCORE (VCORE | ADVG)* RP? (TO ADVG* (VB | VBN) RP?)?
//! ```
//!
//! Matching is leftmost-longest: the scan moves left to right, takes the
//! longest match at each position, commits it, and never backtracks into a
//! committed span. Noun phrases are recognized first on the protected tag
//! sequence, then protection is lifted and verb phrases are recognized in
//! the gaps the noun phrases left.
//!
//! The infinitive tail accepts the whole adverb group where older pattern
//! write-ups name RB alone. The four adverb tags are alternatives to each
//! other everywhere else in the grammar, and keeping that uniform here is
//! what makes adverb-tag confusions provably span-preserving; an RB-only
//! tail would make RB/RBR swaps inside a tail move chunk boundaries.
//!
//! Participles (VBD, VBG, VBN) are protected while noun phrases are
//! matched. Under the default grammar they can never join a noun phrase;
//! with `np_participle_modifiers` they are admitted as modifiers inside a
//! determiner-led BASE, mirroring chunkers that let "the observed effect"
//! form one noun phrase.

use std::fmt::Write as _;

use thiserror::Error;

use crate::tagset::{GrammarPosition, OccurrenceProfile, PosTag, TagId, occurrence_profile};
use crate::tagging::{DataFileError, TaggedSentence, TaggedToken};
use crate::textprep::SentenceId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("token {position} is already protected")]
    AlreadyProtected { position: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChunkKind {
    NounPhrase,
    VerbPhrase,
}

impl ChunkKind {
    pub fn label(self) -> &'static str {
        match self {
            ChunkKind::NounPhrase => "NP",
            ChunkKind::VerbPhrase => "VP",
        }
    }
}

/// A chunk: token indices `start..end`, end exclusive, never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChunkSpan {
    pub kind: ChunkKind,
    pub start: usize,
    pub end: usize,
}

impl ChunkSpan {
    pub fn np(start: usize, end: usize) -> ChunkSpan {
        ChunkSpan { kind: ChunkKind::NounPhrase, start, end }
    }

    pub fn vp(start: usize, end: usize) -> ChunkSpan {
        ChunkSpan { kind: ChunkKind::VerbPhrase, start, end }
    }

    pub fn len(self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// Grammar configuration. The default excludes participles from noun
/// phrases entirely.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChunkGrammar {
    pub np_participle_modifiers: bool,
}

impl ChunkGrammar {
    pub fn with_participle_modifiers() -> ChunkGrammar {
        ChunkGrammar { np_participle_modifiers: true }
    }

    /// Profile of a tag under this grammar. Differs from the default table
    /// only when participle modifiers are enabled, which adds the noun
    /// phrase modifier position to VBD, VBG and VBN.
    pub fn occurrence_profile(self, tag: TagId) -> OccurrenceProfile {
        let base = occurrence_profile(tag);
        if self.np_participle_modifiers && tag.is_protectable() {
            let mut positions = base.positions().to_vec();
            positions.push(GrammarPosition::NpModifier);
            return OccurrenceProfile::new(positions);
        }
        base
    }
}

fn is_det(id: TagId) -> bool {
    matches!(id, TagId::DT | TagId::PRPDollar | TagId::WDT | TagId::WPDollar)
}

fn is_nmod(id: TagId) -> bool {
    matches!(
        id,
        TagId::JJ
            | TagId::JJR
            | TagId::JJS
            | TagId::Comma
            | TagId::CC
            | TagId::NN
            | TagId::NNS
            | TagId::NNP
            | TagId::NNPS
            | TagId::CD
    )
}

fn is_nhead(id: TagId) -> bool {
    matches!(id, TagId::NN | TagId::NNS | TagId::NNP | TagId::NNPS | TagId::CD)
}

fn is_standalone(id: TagId) -> bool {
    matches!(id, TagId::EX | TagId::PRP | TagId::WP | TagId::WDT)
}

fn is_advg(id: TagId) -> bool {
    matches!(id, TagId::RB | TagId::RBR | TagId::RBS | TagId::WRB)
}

fn is_vcore(id: TagId) -> bool {
    matches!(
        id,
        TagId::VB | TagId::VBD | TagId::VBG | TagId::VBN | TagId::VBP | TagId::VBZ
    )
}

fn is_tail_verb(id: TagId) -> bool {
    matches!(id, TagId::VB | TagId::VBN)
}

/// Marks every VBD, VBG and VBN in the sentence as protected. Fails if any
/// token already carries the mark.
pub fn protect_verb_tags(sentence: &TaggedSentence) -> Result<TaggedSentence, ChunkError> {
    let mut tokens = Vec::with_capacity(sentence.tokens.len());
    for (position, token) in sentence.tokens.iter().enumerate() {
        if token.tag.is_protected() {
            return Err(ChunkError::AlreadyProtected { position });
        }
        let tag = if token.tag.id().is_protectable() {
            token.tag.protect().expect("participles are protectable")
        } else {
            token.tag
        };
        tokens.push(TaggedToken { text: token.text.clone(), tag });
    }
    Ok(TaggedSentence { source: sentence.source.clone(), tokens })
}

/// Clears the protection mark everywhere.
pub fn deprotect_verb_tags(sentence: &TaggedSentence) -> TaggedSentence {
    TaggedSentence {
        source: sentence.source.clone(),
        tokens: sentence
            .tokens
            .iter()
            .map(|t| TaggedToken { text: t.text.clone(), tag: t.tag.deprotect() })
            .collect(),
    }
}

impl ChunkGrammar {
    /// All valid BASE end positions starting at `i` within `tags[..limit]`,
    /// ascending. A BASE is `DETG? NMOD* NHEAD+`; since every head tag is
    /// also a modifier tag, the valid ends are exactly the positions just
    /// past each head inside the modifier run.
    fn base_ends(self, tags: &[PosTag], i: usize, limit: usize) -> Vec<usize> {
        let mut j = i;
        let mut has_det = false;
        if j < limit && tags[j].id() == TagId::PDT && j + 1 < limit && is_det(tags[j + 1].id()) {
            j += 2;
            has_det = true;
        } else if j < limit && is_det(tags[j].id()) {
            j += 1;
            has_det = true;
        }
        let participles_ok = has_det && self.np_participle_modifiers;
        let mut ends = Vec::new();
        while j < limit {
            let id = tags[j].id();
            if is_nmod(id) || (participles_ok && id.is_protectable()) {
                if is_nhead(id) {
                    ends.push(j + 1);
                }
                j += 1;
            } else {
                break;
            }
        }
        ends
    }

    /// Longest noun phrase starting at `i`, as an exclusive end position.
    fn longest_np(self, tags: &[PosTag], i: usize, limit: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut consider = |end: usize| {
            if best.is_none_or(|b| end > b) {
                best = Some(end);
            }
        };
        if is_standalone(tags[i].id()) {
            consider(i + 1);
        }
        let ends = self.base_ends(tags, i, limit);
        if let Some(&plain) = ends.last() {
            consider(plain);
        }
        for &e1 in &ends {
            if e1 < limit && tags[e1].id() == TagId::POS {
                if let Some(&e2) = self.base_ends(tags, e1 + 1, limit).last() {
                    consider(e2);
                }
            }
        }
        best
    }

    /// Longest verb phrase starting at `i`. Protected participles are
    /// invisible here: they match neither the core nor the infinitive verb.
    fn longest_vp(self, tags: &[PosTag], i: usize, limit: usize) -> Option<usize> {
        let visible_vcore = |t: PosTag| is_vcore(t.id()) && !t.is_protected();
        let visible_tail_verb = |t: PosTag| is_tail_verb(t.id()) && !t.is_protected();
        let mut j = i;
        while j < limit && is_advg(tags[j].id()) {
            j += 1;
        }
        if j < limit && tags[j].id() == TagId::MD {
            j += 1;
        }
        while j < limit && is_advg(tags[j].id()) {
            j += 1;
        }
        if j >= limit || !visible_vcore(tags[j]) {
            return None;
        }
        j += 1;
        while j < limit && (visible_vcore(tags[j]) || is_advg(tags[j].id())) {
            j += 1;
        }
        if j < limit && tags[j].id() == TagId::RP {
            j += 1;
        }
        if j < limit && tags[j].id() == TagId::TO {
            let mut k = j + 1;
            while k < limit && is_advg(tags[k].id()) {
                k += 1;
            }
            if k < limit && visible_tail_verb(tags[k]) {
                k += 1;
                if k < limit && tags[k].id() == TagId::RP {
                    k += 1;
                }
                j = k;
            }
        }
        Some(j)
    }
}

fn scan<F>(lo: usize, hi: usize, kind: ChunkKind, mut longest: F, out: &mut Vec<ChunkSpan>)
where
    F: FnMut(usize) -> Option<usize>,
{
    let mut i = lo;
    while i < hi {
        match longest(i) {
            Some(end) => {
                debug_assert!(end > i && end <= hi);
                out.push(ChunkSpan { kind, start: i, end });
                i = end;
            }
            None => i += 1,
        }
    }
}

/// Recognizes noun phrases over the whole tag sequence.
pub fn recognize_noun_phrases(tags: &[PosTag], grammar: ChunkGrammar) -> Vec<ChunkSpan> {
    let mut spans = Vec::new();
    scan(
        0,
        tags.len(),
        ChunkKind::NounPhrase,
        |i| grammar.longest_np(tags, i, tags.len()),
        &mut spans,
    );
    spans
}

/// Recognizes verb phrases in the maximal runs of positions not covered by
/// `blocked` (the noun phrase spans, which must be sorted and disjoint).
pub fn recognize_verb_phrases(
    tags: &[PosTag],
    blocked: &[ChunkSpan],
    grammar: ChunkGrammar,
) -> Vec<ChunkSpan> {
    let mut spans = Vec::new();
    let mut lo = 0;
    for block in blocked.iter().chain(std::iter::once(&ChunkSpan::np(tags.len(), tags.len() + 1)))
    {
        let hi = block.start.min(tags.len());
        if lo < hi {
            scan(
                lo,
                hi,
                ChunkKind::VerbPhrase,
                |i| grammar.longest_vp(tags, i, hi),
                &mut spans,
            );
        }
        lo = block.end.min(tags.len()).max(lo);
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkedSentence {
    pub sentence: TaggedSentence,
    /// All spans, sorted by start, pairwise disjoint.
    pub spans: Vec<ChunkSpan>,
}

impl ChunkedSentence {
    pub fn noun_phrases(&self) -> impl Iterator<Item = &ChunkSpan> {
        self.spans.iter().filter(|s| s.kind == ChunkKind::NounPhrase)
    }

    pub fn verb_phrases(&self) -> impl Iterator<Item = &ChunkSpan> {
        self.spans.iter().filter(|s| s.kind == ChunkKind::VerbPhrase)
    }
}

/// Runs the full chunking pass: protect participles, recognize noun
/// phrases, lift protection, recognize verb phrases in the gaps. The input
/// must be unprotected; the output sentence is unprotected again.
pub fn chunk_tagged(
    sentence: &TaggedSentence,
    grammar: ChunkGrammar,
) -> Result<ChunkedSentence, ChunkError> {
    let protected = protect_verb_tags(sentence)?;
    let protected_tags: Vec<PosTag> = protected.tokens.iter().map(|t| t.tag).collect();
    let np = recognize_noun_phrases(&protected_tags, grammar);
    let restored = deprotect_verb_tags(&protected);
    let plain_tags: Vec<PosTag> = restored.tokens.iter().map(|t| t.tag).collect();
    let vp = recognize_verb_phrases(&plain_tags, &np, grammar);
    let mut spans = np;
    spans.extend(vp);
    spans.sort_by_key(|s| s.start);
    Ok(ChunkedSentence { sentence: restored, spans })
}

/// Convenience for tests and the substitution oracle: chunk a bare tag
/// sequence, returning just the spans.
pub fn chunk_tag_sequence(ids: &[TagId], grammar: ChunkGrammar) -> Vec<ChunkSpan> {
    let sentence = TaggedSentence {
        source: SentenceId { doc: "seq".into(), index: 0 },
        tokens: ids
            .iter()
            .map(|&id| TaggedToken { text: id.as_str().to_string(), tag: PosTag::new(id) })
            .collect(),
    };
    chunk_tagged(&sentence, grammar).expect("unprotected input").spans
}

/// Renders one sentence in the chunk format: spans as
/// `(NP word_TAG …)` / `(VP word_TAG …)`, unchunked tokens bare.
pub fn render_chunked_sentence(chunked: &ChunkedSentence) -> String {
    let tokens = &chunked.sentence.tokens;
    let mut out = String::new();
    let mut i = 0;
    let mut span_iter = chunked.spans.iter().peekable();
    let emit = |out: &mut String, token: &TaggedToken| {
        let _ = write!(out, "{}_{}", token.text, token.tag.id());
    };
    while i < tokens.len() {
        if !out.is_empty() {
            out.push(' ');
        }
        if let Some(span) = span_iter.peek() {
            if span.start == i {
                let span = *span_iter.next().unwrap();
                out.push('(');
                out.push_str(span.kind.label());
                for token in &tokens[span.start..span.end] {
                    out.push(' ');
                    emit(&mut out, token);
                }
                out.push(')');
                i = span.end;
                continue;
            }
        }
        emit(&mut out, &tokens[i]);
        i += 1;
    }
    out
}

/// Renders sentences in the chunked corpus format, with `# doc` comment
/// lines as in the tagged corpus format.
pub fn render_chunked_corpus(sentences: &[ChunkedSentence]) -> String {
    let mut out = String::new();
    let mut current_doc: Option<&str> = None;
    for chunked in sentences {
        let doc = chunked.sentence.source.doc.as_str();
        if current_doc != Some(doc) {
            out.push_str("# ");
            out.push_str(doc);
            out.push('\n');
            current_doc = Some(doc);
        }
        out.push_str(&render_chunked_sentence(chunked));
        out.push('\n');
    }
    out
}

/// Parses the chunked corpus format produced by [`render_chunked_corpus`].
pub fn parse_chunked_corpus(text: &str) -> Result<Vec<ChunkedSentence>, DataFileError> {
    let err = |line: usize, reason: String| DataFileError { line, reason };
    let mut sentences = Vec::new();
    let mut doc = String::from("unnamed");
    let mut next_index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let id = rest.trim();
            if id.is_empty() {
                return Err(err(line_no, "comment line carries no document id".into()));
            }
            doc = id.to_string();
            continue;
        }
        let mut tokens: Vec<TaggedToken> = Vec::new();
        let mut spans: Vec<ChunkSpan> = Vec::new();
        let mut open: Option<(ChunkKind, usize)> = None;
        for piece in line.split_whitespace() {
            let kind = match piece {
                "(NP" => Some(ChunkKind::NounPhrase),
                "(VP" => Some(ChunkKind::VerbPhrase),
                _ => None,
            };
            if let Some(kind) = kind {
                if open.is_some() {
                    return Err(err(line_no, "nested span opener".into()));
                }
                open = Some((kind, tokens.len()));
                continue;
            }
            let (word, closes) = match open {
                Some(_) if piece.ends_with(')') => (&piece[..piece.len() - 1], true),
                _ => (piece, false),
            };
            let (text_part, tag_text) = word
                .rsplit_once('_')
                .ok_or_else(|| err(line_no, format!("token {word:?} has no underscore")))?;
            if text_part.is_empty() {
                return Err(err(line_no, format!("token {word:?} has empty text")));
            }
            let id = TagId::from_str_strict(tag_text).map_err(|e| err(line_no, e.to_string()))?;
            tokens.push(TaggedToken { text: text_part.to_string(), tag: PosTag::new(id) });
            if closes {
                let (kind, start) = open.take().expect("span is open");
                spans.push(ChunkSpan { kind, start, end: tokens.len() });
            }
        }
        if open.is_some() {
            return Err(err(line_no, "unclosed span".into()));
        }
        let index = next_index.entry(doc.clone()).or_insert(0);
        sentences.push(ChunkedSentence {
            sentence: TaggedSentence {
                source: SentenceId { doc: doc.clone(), index: *index },
                tokens,
            },
            spans,
        });
        *index += 1;
    }
    Ok(sentences)
}
