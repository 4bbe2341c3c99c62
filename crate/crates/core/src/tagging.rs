//! Part-of-speech tagging: a small lexicon-plus-rules baseline tagger and
//! an adapter that drives an external tagger process.
//!
//! The baseline looks each token up in a ranked lexicon, falls back to
//! shape heuristics for unknown words, and then applies contextual rewrite
//! rules in order. Both the lexicon and the rules are data files, so the
//! tagger's behavior can be varied without rebuilding.
//!
//! The external adapter exchanges whole sentence batches with a separately
//! installed tagger, either through a pair of temp files substituted into a
//! command template or line by line over stdin/stdout. Output must come
//! back strictly line for line, one `word_TAG` token per input token.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::tagset::{PosTag, TagError, TagId};
use crate::textprep::{SentenceId, TokenizedSentence};

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("empty input batch")]
    EmptyInput,
    #[error("bad tagger command: {0}")]
    BadCommand(String),
    #[error("tagger process failed: {detail}")]
    ProcessFailure { detail: String },
    #[error("tagger did not finish within {limit_secs} s")]
    Timeout { limit_secs: u64 },
    #[error("tagger returned {actual} sentences for {expected} inputs")]
    SentenceCountMismatch { expected: usize, actual: usize },
    #[error("output line {line}: {actual} tokens for {expected} inputs")]
    TokenCountMismatch { line: usize, expected: usize, actual: usize },
    #[error("output line {line}: token {token:?} has no underscore separator")]
    MissingSeparator { line: usize, token: String },
    #[error(transparent)]
    UnknownTag(#[from] TagError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub text: String,
    pub tag: PosTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub source: SentenceId,
    pub tokens: Vec<TaggedToken>,
}

impl TaggedSentence {
    pub fn tag_ids(&self) -> Vec<TagId> {
        self.tokens.iter().map(|t| t.tag.id()).collect()
    }
}

#[derive(Debug, Error)]
#[error("line {line}: {reason}")]
pub struct DataFileError {
    pub line: usize,
    pub reason: String,
}

fn data_err(line: usize, reason: impl Into<String>) -> DataFileError {
    DataFileError { line, reason: reason.into() }
}

/// Ranked tag lists per token. Lookup tries the exact token first, then
/// its lowercase form, so sentence-initial capitalization does not hide
/// ordinary words.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<TagId>>,
}

impl Lexicon {
    pub fn empty() -> Lexicon {
        Lexicon::default()
    }

    /// Parses `token<TAB>tags` lines, tags space-separated and ranked most
    /// frequent first. `#` lines and blank lines are skipped.
    pub fn from_tsv(text: &str) -> Result<Lexicon, DataFileError> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, tags) = line
                .split_once('\t')
                .ok_or_else(|| data_err(line_no, "expected token<TAB>tags"))?;
            if token.is_empty() {
                return Err(data_err(line_no, "empty token"));
            }
            let mut ranked = Vec::new();
            for part in tags.split_whitespace() {
                let id = TagId::from_str_strict(part)
                    .map_err(|e| data_err(line_no, e.to_string()))?;
                ranked.push(id);
            }
            if ranked.is_empty() {
                return Err(data_err(line_no, "no tags listed"));
            }
            entries.insert(token.to_string(), ranked);
        }
        Ok(Lexicon { entries })
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Lexicon::from_tsv(include_str!("../data/lexicon.tsv"))
                .expect("builtin lexicon parses")
        })
    }

    pub fn insert(&mut self, token: &str, tags: Vec<TagId>) {
        self.entries.insert(token.to_string(), tags);
    }

    pub fn lookup(&self, token: &str) -> Option<&[TagId]> {
        if let Some(tags) = self.entries.get(token) {
            return Some(tags);
        }
        let lower = token.to_lowercase();
        if lower != token {
            if let Some(tags) = self.entries.get(&lower) {
                return Some(tags);
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn looks_numeric(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
        && token.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-' | '+' | '%'))
}

/// Shape fallback for tokens missing from the lexicon. A capitalized token
/// is read as a proper noun when it is not sentence-initial, or when it
/// carries further uppercase letters (acronyms and gene-style names like
/// `GerE`, wherever they stand). Then: numeric shapes become CD, a final
/// `s` suggests a plural, and everything else defaults to NN.
pub fn unknown_word_tag(token: &str, position: usize) -> TagId {
    let mut chars = token.chars();
    let initial_upper = chars.next().is_some_and(|c| c.is_uppercase());
    let internal_upper = chars.any(|c| c.is_uppercase());
    if initial_upper && (position > 0 || internal_upper) {
        return TagId::NNP;
    }
    if looks_numeric(token) {
        return TagId::CD;
    }
    if token.len() > 1 && token.ends_with('s') {
        return TagId::NNS;
    }
    TagId::NN
}

/// Assigns each token its top-ranked lexicon tag, or the unknown-word
/// fallback when the token is absent.
pub fn tag_with_lexicon(sentence: &TokenizedSentence, lexicon: &Lexicon) -> TaggedSentence {
    let tokens = sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let id = match lexicon.lookup(text) {
                Some(ranked) => ranked[0],
                None => match TagId::from_str_strict(text) {
                    // Punctuation tokens tag as themselves.
                    Ok(id) if !text.chars().any(|c| c.is_alphanumeric()) => id,
                    _ => unknown_word_tag(text, i),
                },
            };
            TaggedToken { text: text.clone(), tag: PosTag::new(id) }
        })
        .collect();
    TaggedSentence { source: sentence.source.clone(), tokens }
}

/// One contextual rewrite: change `from` to `to` where every stated
/// condition holds. Context reaches at most two tokens either side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualRule {
    pub from: TagId,
    pub to: TagId,
    pub left1: Option<TagId>,
    pub left2: Option<TagId>,
    pub right1: Option<TagId>,
    pub right2: Option<TagId>,
    pub suffix: Option<String>,
    pub cap: Option<bool>,
}

impl ContextualRule {
    pub fn rewrite(from: TagId, to: TagId) -> ContextualRule {
        ContextualRule {
            from,
            to,
            left1: None,
            left2: None,
            right1: None,
            right2: None,
            suffix: None,
            cap: None,
        }
    }

    pub fn with_left1(mut self, tag: TagId) -> ContextualRule {
        self.left1 = Some(tag);
        self
    }

    pub fn with_right1(mut self, tag: TagId) -> ContextualRule {
        self.right1 = Some(tag);
        self
    }

    fn matches(&self, tokens: &[TaggedToken], i: usize) -> bool {
        if tokens[i].tag.id() != self.from {
            return false;
        }
        let tag_at = |offset: isize| -> Option<TagId> {
            let j = i as isize + offset;
            if j < 0 || j as usize >= tokens.len() {
                None
            } else {
                Some(tokens[j as usize].tag.id())
            }
        };
        for (want, offset) in [
            (self.left1, -1),
            (self.left2, -2),
            (self.right1, 1),
            (self.right2, 2),
        ] {
            if let Some(tag) = want {
                if tag_at(offset) != Some(tag) {
                    return false;
                }
            }
        }
        if let Some(suffix) = &self.suffix {
            if !tokens[i].text.ends_with(suffix.as_str()) {
                return false;
            }
        }
        if let Some(cap) = self.cap {
            let is_cap = tokens[i].text.chars().next().is_some_and(|c| c.is_uppercase());
            if is_cap != cap {
                return false;
            }
        }
        true
    }
}

/// Parses rule lines of the form `from=NNS to=VBZ left1=NNP`.
pub fn parse_rules(text: &str) -> Result<Vec<ContextualRule>, DataFileError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut from = None;
        let mut to = None;
        let mut rule = ContextualRule::rewrite(TagId::NN, TagId::NN);
        for field in line.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| data_err(line_no, format!("bad field {field:?}")))?;
            let tag = || TagId::from_str_strict(value).map_err(|e| data_err(line_no, e.to_string()));
            match key {
                "from" => from = Some(tag()?),
                "to" => to = Some(tag()?),
                "left1" => rule.left1 = Some(tag()?),
                "left2" => rule.left2 = Some(tag()?),
                "right1" => rule.right1 = Some(tag()?),
                "right2" => rule.right2 = Some(tag()?),
                "suffix" => rule.suffix = Some(value.to_string()),
                "cap" => {
                    rule.cap = Some(value.parse().map_err(|_| {
                        data_err(line_no, format!("cap must be true or false, got {value:?}"))
                    })?)
                }
                other => return Err(data_err(line_no, format!("unknown field {other:?}"))),
            }
        }
        rule.from = from.ok_or_else(|| data_err(line_no, "missing from="))?;
        rule.to = to.ok_or_else(|| data_err(line_no, "missing to="))?;
        rules.push(rule);
    }
    Ok(rules)
}

/// The rule list shipped with the crate.
pub fn builtin_rules() -> &'static [ContextualRule] {
    static BUILTIN: OnceLock<Vec<ContextualRule>> = OnceLock::new();
    BUILTIN.get_or_init(|| {
        parse_rules(include_str!("../data/context_rules.tsv")).expect("builtin rules parse")
    })
}

/// Applies rules in list order. Each rule scans left to right and rewrites
/// in place, so a rule sees the effect of its own earlier firings and of
/// every rule before it.
pub fn apply_contextual_rules(sentence: &mut TaggedSentence, rules: &[ContextualRule]) {
    for rule in rules {
        for i in 0..sentence.tokens.len() {
            if rule.matches(&sentence.tokens, i) {
                sentence.tokens[i].tag = PosTag::new(rule.to);
            }
        }
    }
}

/// Lexicon pass followed by the contextual rules.
pub fn tag_baseline(
    sentence: &TokenizedSentence,
    lexicon: &Lexicon,
    rules: &[ContextualRule],
) -> TaggedSentence {
    let mut tagged = tag_with_lexicon(sentence, lexicon);
    apply_contextual_rules(&mut tagged, rules);
    tagged
}

/// How sentence batches reach the external tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoMode {
    /// Substitute `{in}` and `{out}` in the command with temp file paths.
    TempFiles,
    /// Feed sentences on stdin and read tagged lines from stdout.
    LineStream,
}

#[derive(Debug, Clone)]
pub struct ExternalTaggerConfig {
    /// Shell command. In `TempFiles` mode it must contain `{in}` and
    /// `{out}` placeholders.
    pub command: String,
    pub mode: IoMode,
    /// Directory for the exchange files; the system temp dir when unset.
    pub scratch_dir: Option<PathBuf>,
    /// Seconds the process may run; 0 disables the limit.
    pub timeout_secs: u64,
}

impl ExternalTaggerConfig {
    pub fn temp_files(command: &str) -> ExternalTaggerConfig {
        ExternalTaggerConfig {
            command: command.to_string(),
            mode: IoMode::TempFiles,
            scratch_dir: None,
            timeout_secs: 300,
        }
    }

    pub fn line_stream(command: &str) -> ExternalTaggerConfig {
        ExternalTaggerConfig {
            command: command.to_string(),
            mode: IoMode::LineStream,
            scratch_dir: None,
            timeout_secs: 300,
        }
    }
}

/// Tags a batch of sentences through the configured external process. The
/// process must emit exactly one line per input sentence, each line holding
/// one `word_TAG` token per input token; the split is at the last
/// underscore, and the tag part must belong to the closed tag set. Exchange
/// files are created fresh per call and removed whether or not the call
/// succeeds.
pub fn tag_via_external(
    sentences: &[TokenizedSentence],
    config: &ExternalTaggerConfig,
) -> Result<Vec<TaggedSentence>, TaggerError> {
    if sentences.is_empty() {
        return Err(TaggerError::EmptyInput);
    }
    let mut batch = String::new();
    for sentence in sentences {
        batch.push_str(&sentence.tokens.join(" "));
        batch.push('\n');
    }
    let output = match config.mode {
        IoMode::TempFiles => run_temp_files(&batch, config)?,
        IoMode::LineStream => run_line_stream(&batch, config)?,
    };
    parse_tagger_output(sentences, &output)
}

fn shell_quote(path: &std::path::Path) -> String {
    format!("'{}'", path.display())
}

fn run_temp_files(batch: &str, config: &ExternalTaggerConfig) -> Result<String, TaggerError> {
    if !config.command.contains("{in}") || !config.command.contains("{out}") {
        return Err(TaggerError::BadCommand(
            "temp-file mode needs {in} and {out} placeholders".to_string(),
        ));
    }
    let dir = config.scratch_dir.clone().unwrap_or_else(std::env::temp_dir);
    let mut infile = tempfile::Builder::new()
        .prefix("tagchunk-in-")
        .suffix(".txt")
        .tempfile_in(&dir)?;
    infile.write_all(batch.as_bytes())?;
    infile.flush()?;
    let outfile = tempfile::Builder::new()
        .prefix("tagchunk-out-")
        .suffix(".txt")
        .tempfile_in(&dir)?;
    let command = config
        .command
        .replace("{in}", &shell_quote(infile.path()))
        .replace("{out}", &shell_quote(outfile.path()));
    let child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()?;
    wait_checked(child, config.timeout_secs)?;
    Ok(std::fs::read_to_string(outfile.path())?)
}

fn run_line_stream(batch: &str, config: &ExternalTaggerConfig) -> Result<String, TaggerError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&config.command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let input = batch.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let mut stdout = stdout;
        use std::io::Read;
        let _ = stdout.read_to_string(&mut out);
        out
    });
    // On failure the writer and reader are abandoned, not joined: a
    // surviving grandchild can hold the pipes open indefinitely.
    wait_checked(child, config.timeout_secs)?;
    let _ = writer.join();
    let output = reader.join().unwrap_or_default();
    Ok(output)
}

/// Waits for the child, enforcing the timeout and a zero exit status.
/// Collects stderr for the failure message.
fn wait_checked(mut child: Child, timeout_secs: u64) -> Result<(), TaggerError> {
    let stderr_handle = child.stderr.take().map(|mut pipe| {
        std::thread::spawn(move || {
            let mut buf = String::new();
            use std::io::Read;
            let _ = pipe.read_to_string(&mut buf);
            buf
        })
    });
    let deadline =
        (timeout_secs > 0).then(|| Instant::now() + Duration::from_secs(timeout_secs));
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if let Some(deadline) = deadline {
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                // An orphaned grandchild can keep the stderr pipe open past
                // the kill; the collector is abandoned rather than joined.
                drop(stderr_handle);
                return Err(TaggerError::Timeout { limit_secs: timeout_secs });
            }
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stderr = stderr_handle.and_then(|h| h.join().ok()).unwrap_or_default();
    if !status.success() {
        let mut detail = format!("exit status {}", status.code().map_or(-1, |c| c));
        let stderr = stderr.trim();
        if !stderr.is_empty() {
            detail.push_str(": ");
            detail.push_str(stderr);
        }
        return Err(TaggerError::ProcessFailure { detail });
    }
    Ok(())
}

fn parse_tagger_output(
    sentences: &[TokenizedSentence],
    output: &str,
) -> Result<Vec<TaggedSentence>, TaggerError> {
    let lines: Vec<&str> = output.lines().collect();
    if lines.len() != sentences.len() {
        return Err(TaggerError::SentenceCountMismatch {
            expected: sentences.len(),
            actual: lines.len(),
        });
    }
    let mut tagged = Vec::with_capacity(sentences.len());
    for (idx, (sentence, line)) in sentences.iter().zip(&lines).enumerate() {
        let line_no = idx + 1;
        let pieces: Vec<&str> = line.split_whitespace().collect();
        if pieces.len() != sentence.tokens.len() {
            return Err(TaggerError::TokenCountMismatch {
                line: line_no,
                expected: sentence.tokens.len(),
                actual: pieces.len(),
            });
        }
        let mut tokens = Vec::with_capacity(pieces.len());
        for (text, piece) in sentence.tokens.iter().zip(pieces) {
            let (_, tag_text) = piece.rsplit_once('_').ok_or_else(|| {
                TaggerError::MissingSeparator { line: line_no, token: piece.to_string() }
            })?;
            let id = TagId::from_str_strict(tag_text)?;
            tokens.push(TaggedToken { text: text.clone(), tag: PosTag::new(id) });
        }
        tagged.push(TaggedSentence { source: sentence.source.clone(), tokens });
    }
    Ok(tagged)
}

/// Renders sentences in the tagged corpus format: a `# doc` comment line
/// whenever the document changes, then one sentence per line with
/// space-separated `word_TAG` tokens.
pub fn render_tagged_corpus(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    let mut current_doc: Option<&str> = None;
    for sentence in sentences {
        if current_doc != Some(sentence.source.doc.as_str()) {
            out.push_str("# ");
            out.push_str(&sentence.source.doc);
            out.push('\n');
            current_doc = Some(sentence.source.doc.as_str());
        }
        let mut first = true;
        for token in &sentence.tokens {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&token.text);
            out.push('_');
            out.push_str(token.tag.id().as_str());
        }
        out.push('\n');
    }
    out
}

/// Parses the tagged corpus format. Sentence indices restart at zero for
/// each document comment. Tags must be plain members of the closed set;
/// the protection mark never appears in files.
pub fn parse_tagged_corpus(text: &str) -> Result<Vec<TaggedSentence>, DataFileError> {
    let mut sentences = Vec::new();
    let mut doc = String::from("unnamed");
    let mut next_index: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let id = rest.trim();
            if id.is_empty() {
                return Err(data_err(line_no, "comment line carries no document id"));
            }
            doc = id.to_string();
            continue;
        }
        let index = next_index.entry(doc.clone()).or_insert(0);
        let mut tokens = Vec::new();
        for piece in line.split_whitespace() {
            let (text_part, tag_text) = piece
                .rsplit_once('_')
                .ok_or_else(|| data_err(line_no, format!("token {piece:?} has no underscore")))?;
            if text_part.is_empty() {
                return Err(data_err(line_no, format!("token {piece:?} has empty text")));
            }
            let id = TagId::from_str_strict(tag_text)
                .map_err(|e| data_err(line_no, e.to_string()))?;
            tokens.push(TaggedToken { text: text_part.to_string(), tag: PosTag::new(id) });
        }
        sentences.push(TaggedSentence {
            source: SentenceId { doc: doc.clone(), index: *index },
            tokens,
        });
        *index += 1;
    }
    Ok(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagset::TagId::*;

    fn sent(tokens: &[&str]) -> TokenizedSentence {
        TokenizedSentence {
            source: SentenceId { doc: "t".into(), index: 0 },
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn ids(tagged: &TaggedSentence) -> Vec<TagId> {
        tagged.tag_ids()
    }

    #[test]
    fn lexicon_rank_one_wins() {
        let mut lexicon = Lexicon::empty();
        lexicon.insert("that", vec![DT, IN, WDT]);
        let tagged = tag_with_lexicon(&sent(&["that"]), &lexicon);
        assert_eq!(ids(&tagged), vec![DT]);
    }

    #[test]
    fn unknown_word_heuristics() {
        let empty = Lexicon::empty();
        assert_eq!(ids(&tag_with_lexicon(&sent(&["GerE"]), &empty)), vec![NNP]);
        assert_eq!(ids(&tag_with_lexicon(&sent(&["42"]), &empty)), vec![CD]);
        assert_eq!(ids(&tag_with_lexicon(&sent(&["walks"]), &empty)), vec![NNS]);
        assert_eq!(ids(&tag_with_lexicon(&sent(&["walk"]), &empty)), vec![NN]);
        // Sentence-initial plain capitalization is not proper-noun evidence;
        // a second capital anywhere in the word is.
        assert_eq!(unknown_word_tag("Protein", 0), NN);
        assert_eq!(unknown_word_tag("Protein", 3), NNP);
        assert_eq!(unknown_word_tag("GerE", 0), NNP);
    }

    #[test]
    fn punctuation_tags_as_itself() {
        let empty = Lexicon::empty();
        let tagged = tag_with_lexicon(&sent(&["(", "x", ")", ",", "."]), &empty);
        assert_eq!(ids(&tagged), vec![LeftParen, NN, RightParen, Comma, Period]);
    }

    #[test]
    fn lowercase_fallback_reaches_sentence_initial_words() {
        let lexicon = Lexicon::from_tsv("the\tDT\n").unwrap();
        let tagged = tag_with_lexicon(&sent(&["The"]), &lexicon);
        assert_eq!(ids(&tagged), vec![DT]);
    }

    #[test]
    fn contextual_rule_rewrites_after_proper_noun() {
        let mut tagged = tag_with_lexicon(&sent(&["GerE", "binds"]), &Lexicon::empty());
        assert_eq!(ids(&tagged), vec![NNP, NNS]);
        let rules = [ContextualRule::rewrite(NNS, VBZ).with_left1(NNP)];
        apply_contextual_rules(&mut tagged, &rules);
        assert_eq!(ids(&tagged), vec![NNP, VBZ]);
    }

    #[test]
    fn rules_apply_in_order_with_immediate_effect() {
        let mut tagged = tag_with_lexicon(&sent(&["GerE", "binds", "walks"]), &Lexicon::empty());
        assert_eq!(ids(&tagged), vec![NNP, NNS, NNS]);
        // After the first position rewrites to VBZ, the second sees VBZ on
        // its left, so a left1=NNS trigger no longer fires there.
        let rules = [
            ContextualRule::rewrite(NNS, VBZ).with_left1(NNP),
            ContextualRule::rewrite(NNS, NN).with_left1(NNS),
        ];
        apply_contextual_rules(&mut tagged, &rules);
        assert_eq!(ids(&tagged), vec![NNP, VBZ, NNS]);
    }

    #[test]
    fn rule_order_matters() {
        let make = || {
            let mut lexicon = Lexicon::empty();
            lexicon.insert("to", vec![TO]);
            lexicon.insert("walk", vec![NN]);
            tag_with_lexicon(&sent(&["to", "walk"]), &lexicon)
        };
        let forward = [
            ContextualRule::rewrite(NN, VB).with_left1(TO),
            ContextualRule::rewrite(VB, VBP).with_left1(TO),
        ];
        let mut a = make();
        apply_contextual_rules(&mut a, &forward);
        assert_eq!(ids(&a), vec![TO, VBP]);
        let reversed = [
            ContextualRule::rewrite(VB, VBP).with_left1(TO),
            ContextualRule::rewrite(NN, VB).with_left1(TO),
        ];
        let mut b = make();
        apply_contextual_rules(&mut b, &reversed);
        assert_eq!(ids(&b), vec![TO, VB]);
    }

    #[test]
    fn builtin_data_files_load() {
        assert!(Lexicon::builtin().len() > 300);
        assert!(!builtin_rules().is_empty());
        let tagged = tag_baseline(
            &sent(&["The", "GerE", "protein", "binds", "the", "sigK", "promoter", "."]),
            Lexicon::builtin(),
            builtin_rules(),
        );
        assert_eq!(ids(&tagged), vec![DT, NNP, NN, VBZ, DT, NN, NN, Period]);
    }

    #[test]
    fn tagged_corpus_round_trips() {
        let sentences = vec![
            TaggedSentence {
                source: SentenceId { doc: "d1".into(), index: 0 },
                tokens: vec![
                    TaggedToken { text: "GerE".into(), tag: PosTag::new(NNP) },
                    TaggedToken { text: "binds".into(), tag: PosTag::new(VBZ) },
                    TaggedToken { text: ".".into(), tag: PosTag::new(Period) },
                ],
            },
            TaggedSentence {
                source: SentenceId { doc: "d2".into(), index: 0 },
                tokens: vec![TaggedToken { text: "under_score".into(), tag: PosTag::new(NN) }],
            },
        ];
        let text = render_tagged_corpus(&sentences);
        assert_eq!(text, "# d1\nGerE_NNP binds_VBZ ._.\n# d2\nunder_score_NN\n");
        let parsed = parse_tagged_corpus(&text).unwrap();
        assert_eq!(parsed, sentences);
    }

    #[test]
    fn tagged_corpus_rejects_bad_tokens() {
        assert!(parse_tagged_corpus("# d\nword\n").is_err());
        assert!(parse_tagged_corpus("# d\nword_ZZZ\n").is_err());
        assert!(parse_tagged_corpus("# d\nword_VBN/VX\n").is_err());
        assert!(parse_tagged_corpus("#\nword_NN\n").is_err());
    }

    fn batch(tokens: &[&str]) -> Vec<TokenizedSentence> {
        vec![sent(tokens)]
    }

    #[test]
    fn external_temp_files_round_trip() {
        let config = ExternalTaggerConfig::temp_files(
            "cat {in} >/dev/null; printf 'GerE_NNP binds_VBZ sigK_NNP ._.\\n' > {out}",
        );
        let tagged = tag_via_external(&batch(&["GerE", "binds", "sigK", "."]), &config).unwrap();
        assert_eq!(ids(&tagged[0]), vec![NNP, VBZ, NNP, Period]);
        assert_eq!(tagged[0].tokens[0].text, "GerE");
    }

    #[test]
    fn external_generic_stub_tags_every_token() {
        let config = ExternalTaggerConfig::temp_files(
            "while IFS= read -r line; do out=; for w in $line; do out=\"$out ${w}_NN\"; done; \
             printf '%s\\n' \"${out# }\"; done < {in} > {out}",
        );
        let sentences =
            vec![sent(&["alpha", "beta"]), sent(&["gamma", "delta", "epsilon"])];
        let tagged = tag_via_external(&sentences, &config).unwrap();
        assert_eq!(tagged.len(), 2);
        assert_eq!(ids(&tagged[1]), vec![NN, NN, NN]);
    }

    #[test]
    fn external_line_stream_mode() {
        let config = ExternalTaggerConfig::line_stream(
            "while IFS= read -r line; do out=; for w in $line; do out=\"$out ${w}_NN\"; done; \
             printf '%s\\n' \"${out# }\"; done",
        );
        let tagged = tag_via_external(&batch(&["alpha", "beta"]), &config).unwrap();
        assert_eq!(ids(&tagged[0]), vec![NN, NN]);
    }

    #[test]
    fn external_error_cases() {
        let empty: Vec<TokenizedSentence> = Vec::new();
        let config = ExternalTaggerConfig::temp_files("cp {in} {out}");
        assert!(matches!(
            tag_via_external(&empty, &config),
            Err(TaggerError::EmptyInput)
        ));

        let missing = ExternalTaggerConfig::temp_files("no-such-binary-zq {in} {out}");
        assert!(matches!(
            tag_via_external(&batch(&["a"]), &missing),
            Err(TaggerError::ProcessFailure { .. })
        ));

        let failing = ExternalTaggerConfig::temp_files("cat {in} >/dev/null; : > {out}; exit 3");
        assert!(matches!(
            tag_via_external(&batch(&["a"]), &failing),
            Err(TaggerError::ProcessFailure { .. })
        ));

        let short = ExternalTaggerConfig::temp_files(
            "cat {in} >/dev/null; printf 'a_NN\\n' > {out}",
        );
        assert!(matches!(
            tag_via_external(&batch(&["a", "b"]), &short),
            Err(TaggerError::TokenCountMismatch { expected: 2, actual: 1, .. })
        ));

        let unknown = ExternalTaggerConfig::temp_files(
            "cat {in} >/dev/null; printf 'a_ZZZ\\n' > {out}",
        );
        assert!(matches!(
            tag_via_external(&batch(&["a"]), &unknown),
            Err(TaggerError::UnknownTag(_))
        ));

        let silent = ExternalTaggerConfig::temp_files("cat {in} >/dev/null; : > {out}");
        assert!(matches!(
            tag_via_external(&batch(&["a"]), &silent),
            Err(TaggerError::SentenceCountMismatch { expected: 1, actual: 0 })
        ));

        let no_placeholders = ExternalTaggerConfig::temp_files("true");
        assert!(matches!(
            tag_via_external(&batch(&["a"]), &no_placeholders),
            Err(TaggerError::BadCommand(_))
        ));
    }

    #[test]
    fn external_timeout_kills_the_process() {
        let mut config = ExternalTaggerConfig::temp_files("sleep 5; cp {in} {out}");
        config.timeout_secs = 1;
        let started = Instant::now();
        let result = tag_via_external(&batch(&["a"]), &config);
        assert!(matches!(result, Err(TaggerError::Timeout { limit_secs: 1 })));
        assert!(started.elapsed() < Duration::from_secs(4));
    }
}
