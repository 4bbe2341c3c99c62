//! Document preparation: abbreviation expansion, sentence splitting, and
//! tokenization.
//!
//! Input documents are single-line records. Preparation expands short forms
//! from an abbreviation table, splits the text into sentences, and breaks
//! each sentence into whitespace-free tokens ready for tagging.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
}

/// One input document: an identifier and its text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Where a sentence came from: document id plus zero-based sentence index
/// within that document.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentenceId {
    pub doc: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub source: SentenceId,
    pub tokens: Vec<String>,
}

/// Parses a raw corpus: one `id<TAB>text` record per line. Blank lines are
/// skipped.
pub fn parse_raw_corpus(input: &str) -> Result<Vec<Document>, TextprepError> {
    let mut docs = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line.split_once('\t').ok_or_else(|| TextprepError::BadRecord {
            line: idx + 1,
            reason: "expected id<TAB>text".to_string(),
        })?;
        if id.is_empty() {
            return Err(TextprepError::BadRecord {
                line: idx + 1,
                reason: "empty document id".to_string(),
            });
        }
        docs.push(Document { id: id.to_string(), text: text.to_string() });
    }
    Ok(docs)
}

/// Parses an abbreviation table: one `short<TAB>long` record per line.
pub fn parse_abbreviation_table(input: &str) -> Result<Vec<(String, String)>, TextprepError> {
    let mut table = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (short, long) = line.split_once('\t').ok_or_else(|| TextprepError::BadRecord {
            line: idx + 1,
            reason: "expected short<TAB>long".to_string(),
        })?;
        if short.is_empty() {
            return Err(TextprepError::BadRecord {
                line: idx + 1,
                reason: "empty short form".to_string(),
            });
        }
        table.push((short.to_string(), long.to_string()));
    }
    Ok(table)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Replaces every occurrence of a short form with its long form. A match
/// must be bounded by non-word characters (or the text edges) on both
/// sides. The scan is a single left-to-right pass: replaced text is not
/// rescanned, and when several short forms match at one position the
/// longest wins.
pub fn expand_abbreviations(text: &str, table: &[(String, String)]) -> String {
    if table.is_empty() {
        return text.to_string();
    }
    let mut entries: Vec<(&str, &str)> =
        table.iter().filter(|(s, _)| !s.is_empty()).map(|(s, l)| (s.as_str(), l.as_str())).collect();
    entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(b.0)));

    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        if !text.is_char_boundary(i) {
            i += 1;
            continue;
        }
        let mut replaced = false;
        let left_ok = i == 0 || text[..i].chars().next_back().map_or(true, |c| !is_word_char(c));
        if left_ok {
            for (short, long) in &entries {
                if text[i..].starts_with(short) {
                    let end = i + short.len();
                    let right_ok = text[end..].chars().next().map_or(true, |c| !is_word_char(c));
                    if right_ok {
                        out.push_str(long);
                        i = end;
                        replaced = true;
                        break;
                    }
                }
            }
        }
        if !replaced {
            let c = text[i..].chars().next().unwrap();
            out.push(c);
            i += c.len_utf8();
        }
    }
    out
}

/// Sentence splitter with a fixed exception list for abbreviation-like
/// tokens whose trailing period is not a sentence boundary.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    exceptions: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> SentenceSplitter {
        SentenceSplitter::with_exceptions(
            include_str!("../data/abbreviations.txt")
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }
}

impl SentenceSplitter {
    pub fn with_exceptions<I: IntoIterator<Item = String>>(exceptions: I) -> SentenceSplitter {
        SentenceSplitter { exceptions: exceptions.into_iter().collect() }
    }

    /// Splits text into sentences at `.`, `!` or `?` followed by whitespace
    /// and an uppercase letter, or at end of text. A period does not split
    /// when the token it terminates is a single uppercase letter (an
    /// initial), a listed abbreviation, or a decimal number.
    pub fn split(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '.' || c == '!' || c == '?' {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                let at_end = j == chars.len();
                let boundary = if at_end {
                    true
                } else {
                    j > i + 1 && chars[j].is_uppercase()
                };
                if boundary && (c != '.' || !self.period_is_excepted(&chars, i)) {
                    let sentence: String = chars[start..=i].iter().collect();
                    let sentence = sentence.trim().to_string();
                    if !sentence.is_empty() {
                        sentences.push(sentence);
                    }
                    start = j;
                    i = j;
                    continue;
                }
            }
            i += 1;
        }
        if start < chars.len() {
            let tail: String = chars[start..].iter().collect();
            let tail = tail.trim().to_string();
            if !tail.is_empty() {
                sentences.push(tail);
            }
        }
        sentences
    }

    fn period_is_excepted(&self, chars: &[char], period: usize) -> bool {
        let mut start = period;
        while start > 0 && !chars[start - 1].is_whitespace() {
            start -= 1;
        }
        if start == period {
            return false;
        }
        let token: String = chars[start..period].iter().collect();
        if token.len() == 1 && token.chars().next().unwrap().is_uppercase() {
            return true;
        }
        if self.exceptions.contains(&token) {
            return true;
        }
        is_decimal_number(&token)
    }
}

fn is_decimal_number(token: &str) -> bool {
    let mut seen_dot = false;
    let mut digits_before = 0;
    let mut digits_after = 0;
    for c in token.chars() {
        if c.is_ascii_digit() {
            if seen_dot {
                digits_after += 1;
            } else {
                digits_before += 1;
            }
        } else if c == '.' && !seen_dot {
            seen_dot = true;
        } else {
            return false;
        }
    }
    seen_dot && digits_before > 0 && digits_after > 0
}

const LEADING_DETACH: [char; 5] = ['(', ')', '"', '\'', '`'];
const TRAILING_DETACH: [char; 8] = [',', ':', ';', '(', ')', '"', '\'', '`'];
const FINAL_DETACH: [char; 3] = ['.', '!', '?'];

/// Splits a sentence into tokens. Whitespace separates tokens; leading and
/// trailing parentheses, quotes, commas and colons are detached as their
/// own tokens, as is the sentence-final period. Interior punctuation stays
/// put, so hyphenated forms and tokens with internal digits survive whole.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let raw: Vec<&str> = sentence.split_whitespace().collect();
    let mut tokens = Vec::new();
    for (idx, word) in raw.iter().enumerate() {
        let is_last = idx + 1 == raw.len();
        let mut core: &str = word;
        let mut lead = Vec::new();
        let mut trail = Vec::new();
        loop {
            let mut chars = core.chars();
            match chars.next() {
                Some(c) if LEADING_DETACH.contains(&c) && core.len() > c.len_utf8() => {
                    lead.push(c);
                    core = &core[c.len_utf8()..];
                }
                _ => break,
            }
        }
        loop {
            let Some(c) = core.chars().next_back() else { break };
            let detachable =
                TRAILING_DETACH.contains(&c) || (is_last && FINAL_DETACH.contains(&c));
            if detachable && core.len() > c.len_utf8() {
                trail.push(c);
                core = &core[..core.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        tokens.extend(lead.into_iter().map(String::from));
        if !core.is_empty() {
            tokens.push(core.to_string());
        }
        tokens.extend(trail.into_iter().rev().map(String::from));
    }
    tokens
}

/// Runs the full preparation for one document: abbreviation expansion,
/// sentence splitting, tokenization.
pub fn prepare_document(
    doc: &Document,
    abbreviations: &[(String, String)],
    splitter: &SentenceSplitter,
) -> Vec<TokenizedSentence> {
    let expanded = expand_abbreviations(&doc.text, abbreviations);
    splitter
        .split(&expanded)
        .into_iter()
        .enumerate()
        .filter_map(|(index, sentence)| {
            let tokens = tokenize(&sentence);
            if tokens.is_empty() {
                return None;
            }
            Some(TokenizedSentence {
                source: SentenceId { doc: doc.id.clone(), index },
                tokens,
            })
        })
        .collect()
}
