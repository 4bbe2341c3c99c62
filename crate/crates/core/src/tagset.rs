//! The closed part-of-speech tag inventory and per-tag grammar profiles.
//!
//! Tags are the Penn Treebank word tags plus the punctuation tags and a
//! `NotAssigned` sentinel for tokens a tagger left untagged. The set is
//! closed: parsing any other string is an error, so downstream stages never
//! see an unexpected tag.

use std::fmt;

use thiserror::Error;

/// Suffix appended to a serialized tag while it is protected from noun
/// phrase matching, e.g. `VBN/VX`.
pub const PROTECTED_SUFFIX: &str = "/VX";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TagError {
    #[error("unknown tag: {0:?}")]
    UnknownTag(String),
    #[error("tag {0} cannot carry the protection mark")]
    NotProtectable(TagId),
}

/// Tag identifier. 36 word tags, 8 punctuation tags, and `NotAssigned`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(clippy::upper_case_acronyms)]
pub enum TagId {
    CC,
    CD,
    DT,
    EX,
    FW,
    IN,
    JJ,
    JJR,
    JJS,
    LS,
    MD,
    NN,
    NNS,
    NNP,
    NNPS,
    PDT,
    POS,
    PRP,
    PRPDollar,
    RB,
    RBR,
    RBS,
    RP,
    SYM,
    TO,
    UH,
    VB,
    VBD,
    VBG,
    VBN,
    VBP,
    VBZ,
    WDT,
    WP,
    WPDollar,
    WRB,
    Period,
    Comma,
    Colon,
    LeftParen,
    RightParen,
    OpenQuote,
    CloseQuote,
    Hyphen,
    NotAssigned,
}

use TagId::*;

impl TagId {
    /// Every member of the closed tag set, in a fixed order.
    pub const ALL: [TagId; 45] = [
        CC, CD, DT, EX, FW, IN, JJ, JJR, JJS, LS, MD, NN, NNS, NNP, NNPS, PDT, POS, PRP, PRPDollar,
        RB, RBR, RBS, RP, SYM, TO, UH, VB, VBD, VBG, VBN, VBP, VBZ, WDT, WP, WPDollar, WRB, Period,
        Comma, Colon, LeftParen, RightParen, OpenQuote, CloseQuote, Hyphen, NotAssigned,
    ];

    /// Text form used in tagged corpora and TSV reports.
    pub fn as_str(self) -> &'static str {
        match self {
            CC => "CC",
            CD => "CD",
            DT => "DT",
            EX => "EX",
            FW => "FW",
            IN => "IN",
            JJ => "JJ",
            JJR => "JJR",
            JJS => "JJS",
            LS => "LS",
            MD => "MD",
            NN => "NN",
            NNS => "NNS",
            NNP => "NNP",
            NNPS => "NNPS",
            PDT => "PDT",
            POS => "POS",
            PRP => "PRP",
            PRPDollar => "PRP$",
            RB => "RB",
            RBR => "RBR",
            RBS => "RBS",
            RP => "RP",
            SYM => "SYM",
            TO => "TO",
            UH => "UH",
            VB => "VB",
            VBD => "VBD",
            VBG => "VBG",
            VBN => "VBN",
            VBP => "VBP",
            VBZ => "VBZ",
            WDT => "WDT",
            WP => "WP",
            WPDollar => "WP$",
            WRB => "WRB",
            Period => ".",
            Comma => ",",
            Colon => ":",
            LeftParen => "(",
            RightParen => ")",
            OpenQuote => "``",
            CloseQuote => "''",
            Hyphen => "-",
            NotAssigned => "NotAssigned",
        }
    }

    pub fn from_str_strict(text: &str) -> Result<TagId, TagError> {
        for id in TagId::ALL {
            if id.as_str() == text {
                return Ok(id);
            }
        }
        Err(TagError::UnknownTag(text.to_string()))
    }

    /// Only the participle/past tags may be protected during chunking.
    pub fn is_protectable(self) -> bool {
        matches!(self, VBD | VBG | VBN)
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tag identifier plus its protection mark. Protection is set by the
/// chunker before noun phrase matching and removed before verb phrase
/// matching; outside the chunker the mark is always clear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosTag {
    id: TagId,
    protected: bool,
}

impl PosTag {
    pub fn new(id: TagId) -> PosTag {
        PosTag { id, protected: false }
    }

    pub fn id(self) -> TagId {
        self.id
    }

    pub fn is_protected(self) -> bool {
        self.protected
    }

    /// Marks the tag as protected. Fails unless the identifier is one of
    /// VBD, VBG, VBN.
    pub fn protect(self) -> Result<PosTag, TagError> {
        if !self.id.is_protectable() {
            return Err(TagError::NotProtectable(self.id));
        }
        Ok(PosTag { id: self.id, protected: true })
    }

    pub fn deprotect(self) -> PosTag {
        PosTag { id: self.id, protected: false }
    }
}

impl From<TagId> for PosTag {
    fn from(id: TagId) -> PosTag {
        PosTag::new(id)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.protected {
            write!(f, "{}{}", self.id, PROTECTED_SUFFIX)
        } else {
            self.id.fmt(f)
        }
    }
}

/// Parses the serialized form produced by [`serialize_tag`], including the
/// `/VX` protection suffix.
pub fn parse_tag(text: &str) -> Result<PosTag, TagError> {
    if let Some(base) = text.strip_suffix(PROTECTED_SUFFIX) {
        let id = TagId::from_str_strict(base)?;
        return PosTag::new(id).protect().map_err(|_| TagError::UnknownTag(text.to_string()));
    }
    Ok(PosTag::new(TagId::from_str_strict(text)?))
}

pub fn serialize_tag(tag: PosTag) -> String {
    tag.to_string()
}

/// A slot in the chunk grammar that a tag can fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GrammarPosition {
    NpPredeterminer,
    NpDeterminer,
    NpModifier,
    NpHead,
    NpStandalone,
    NpPossessiveLink,
    VpAdverb,
    VpModal,
    VpVerbCore,
    VpParticle,
    VpInfinitiveMarker,
    VpInfinitiveVerb,
    Unused,
}

/// The set of grammar positions a tag can occupy. Two tags with equal
/// profiles are interchangeable as far as the chunker is concerned: the
/// patterns only ever test class membership, so swapping one for the other
/// cannot move a chunk boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccurrenceProfile {
    positions: Vec<GrammarPosition>,
}

impl OccurrenceProfile {
    pub fn new(mut positions: Vec<GrammarPosition>) -> OccurrenceProfile {
        positions.sort();
        positions.dedup();
        if positions.is_empty() {
            positions.push(GrammarPosition::Unused);
        }
        OccurrenceProfile { positions }
    }

    pub fn positions(&self) -> &[GrammarPosition] {
        &self.positions
    }

    pub fn contains(&self, position: GrammarPosition) -> bool {
        self.positions.contains(&position)
    }

    pub fn is_unused(&self) -> bool {
        self.positions == [GrammarPosition::Unused]
    }

    /// Positions present in both profiles, `Unused` excluded.
    pub fn shared_positions(&self, other: &OccurrenceProfile) -> Vec<GrammarPosition> {
        self.positions
            .iter()
            .copied()
            .filter(|p| *p != GrammarPosition::Unused && other.contains(*p))
            .collect()
    }
}

/// Profile of a tag under the default chunk grammar (participles excluded
/// from noun phrases). The grammar variant that admits participle modifiers
/// adjusts this through `ChunkGrammar::occurrence_profile`.
pub fn occurrence_profile(tag: TagId) -> OccurrenceProfile {
    use GrammarPosition::*;
    let positions: Vec<GrammarPosition> = match tag {
        PDT => vec![NpPredeterminer],
        DT | PRPDollar | WPDollar => vec![NpDeterminer],
        WDT => vec![NpDeterminer, NpStandalone],
        JJ | JJR | JJS | Comma | CC => vec![NpModifier],
        NN | NNS | NNP | NNPS | CD => vec![NpModifier, NpHead],
        EX | PRP | WP => vec![NpStandalone],
        POS => vec![NpPossessiveLink],
        RB | RBR | RBS | WRB => vec![VpAdverb],
        MD => vec![VpModal],
        VB | VBN => vec![VpVerbCore, VpInfinitiveVerb],
        VBD | VBG | VBP | VBZ => vec![VpVerbCore],
        RP => vec![VpParticle],
        TO => vec![VpInfinitiveMarker],
        IN | FW | LS | SYM | UH | Period | Colon | LeftParen | RightParen | OpenQuote
        | CloseQuote | Hyphen | NotAssigned => vec![Unused],
    };
    OccurrenceProfile::new(positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_word_tags() {
        assert_eq!(parse_tag("NN").unwrap().id(), NN);
        assert_eq!(parse_tag("PRP$").unwrap().id(), PRPDollar);
        assert_eq!(parse_tag("WP$").unwrap().id(), WPDollar);
        assert_eq!(parse_tag("``").unwrap().id(), OpenQuote);
    }

    #[test]
    fn rejects_text_outside_the_set() {
        assert_eq!(parse_tag("XYZ"), Err(TagError::UnknownTag("XYZ".into())));
        assert_eq!(parse_tag("nn"), Err(TagError::UnknownTag("nn".into())));
        assert_eq!(parse_tag(""), Err(TagError::UnknownTag(String::new())));
    }

    #[test]
    fn round_trips_every_tag() {
        for id in TagId::ALL {
            let tag = PosTag::new(id);
            assert_eq!(parse_tag(&serialize_tag(tag)).unwrap(), tag);
        }
    }

    #[test]
    fn protection_round_trips_through_text() {
        let tag = PosTag::new(VBN).protect().unwrap();
        assert_eq!(serialize_tag(tag), "VBN/VX");
        let parsed = parse_tag("VBN/VX").unwrap();
        assert!(parsed.is_protected());
        assert_eq!(parsed.deprotect(), PosTag::new(VBN));
    }

    #[test]
    fn protection_is_limited_to_participles() {
        assert!(PosTag::new(VBD).protect().is_ok());
        assert!(PosTag::new(VBG).protect().is_ok());
        assert!(PosTag::new(VBN).protect().is_ok());
        assert_eq!(PosTag::new(NN).protect(), Err(TagError::NotProtectable(NN)));
        assert!(parse_tag("NN/VX").is_err());
    }

    #[test]
    fn distinct_identifiers_have_distinct_text() {
        for a in TagId::ALL {
            for b in TagId::ALL {
                if a != b {
                    assert_ne!(a.as_str(), b.as_str());
                }
            }
        }
    }

    #[test]
    fn noun_tags_share_one_profile() {
        let reference = occurrence_profile(NN);
        for id in [NNS, NNP, NNPS, CD] {
            assert_eq!(occurrence_profile(id), reference);
        }
        assert!(reference.contains(GrammarPosition::NpModifier));
        assert!(reference.contains(GrammarPosition::NpHead));
    }

    #[test]
    fn profile_examples() {
        assert_eq!(
            occurrence_profile(TO).positions(),
            &[GrammarPosition::VpInfinitiveMarker]
        );
        assert!(occurrence_profile(SYM).is_unused());
        assert!(occurrence_profile(NotAssigned).is_unused());
    }

    #[test]
    fn adverb_tags_share_one_profile() {
        let reference = occurrence_profile(RB);
        for id in [RBR, RBS, WRB] {
            assert_eq!(occurrence_profile(id), reference);
        }
    }

    #[test]
    fn determiner_profiles() {
        assert_eq!(occurrence_profile(DT), occurrence_profile(PRPDollar));
        assert_eq!(occurrence_profile(DT), occurrence_profile(WPDollar));
        // WDT doubles as a standalone pronoun, so it is not interchangeable
        // with the pure determiners.
        assert_ne!(occurrence_profile(WDT), occurrence_profile(DT));
    }
}
