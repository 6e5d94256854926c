//! Pluggable word normalization: stemming and part-of-speech tagging.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Maps a lowercase word to the stem under which fixations are merged.
pub trait Stemmer: Send + Sync {
    fn stem(&self, word: &str) -> String;
}

impl<F> Stemmer for F
where
    F: Fn(&str) -> String + Send + Sync,
{
    fn stem(&self, word: &str) -> String {
        self(word)
    }
}

/// Deterministic plural/suffix stripper.
///
/// Only inflectional endings are removed, so distinct content words rarely
/// collide: `methods -> method`, `classes -> class`, `studies -> study`,
/// `bildungen -> bildung`. Words of three characters or fewer are kept as is.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStemmer;

impl Stemmer for SuffixStemmer {
    fn stem(&self, word: &str) -> String {
        let w = word.to_lowercase();
        let n = w.chars().count();
        if n <= 3 {
            return w;
        }
        if n > 4 && w.ends_with("ies") {
            return format!("{}y", &w[..w.len() - 3]);
        }
        if w.ends_with("sses") || ["xes", "zes", "ches", "shes"].iter().any(|s| w.ends_with(s)) {
            return w[..w.len() - 2].to_string();
        }
        if w.ends_with("ungen") {
            return w[..w.len() - 2].to_string();
        }
        if w.ends_with('s') && !(w.ends_with("ss") || w.ends_with("us") || w.ends_with("is")) {
            return w[..w.len() - 1].to_string();
        }
        w
    }
}

/// Part-of-speech categories used for the lexical feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    NN,
    VB,
    JJ,
    RB,
    DT,
    IN,
    CC,
    PRP,
    CD,
    X,
}

impl PosTag {
    pub const ALL: [PosTag; 10] = [
        PosTag::NN,
        PosTag::VB,
        PosTag::JJ,
        PosTag::RB,
        PosTag::DT,
        PosTag::IN,
        PosTag::CC,
        PosTag::PRP,
        PosTag::CD,
        PosTag::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::NN => "NN",
            PosTag::VB => "VB",
            PosTag::JJ => "JJ",
            PosTag::RB => "RB",
            PosTag::DT => "DT",
            PosTag::IN => "IN",
            PosTag::CC => "CC",
            PosTag::PRP => "PRP",
            PosTag::CD => "CD",
            PosTag::X => "X",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown POS tag `{s}`"))
    }
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, word: &str) -> PosTag;
}

impl<F> PosTagger for F
where
    F: Fn(&str) -> PosTag + Send + Sync,
{
    fn tag(&self, word: &str) -> PosTag {
        self(word)
    }
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "der", "die", "das", "den", "dem", "des",
    "ein", "eine", "einer", "eines", "einem", "einen",
];
const PREPOSITIONS: &[&str] = &[
    "in", "of", "on", "for", "with", "to", "from", "by", "at", "about", "into", "von", "mit", "für",
    "auf", "zu", "bei", "nach", "über", "unter", "aus", "im", "am", "zum", "zur",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "und", "oder", "aber", "sowie"];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "ich", "du", "er", "sie", "es", "wir", "ihr",
];

/// Small lexicon plus suffix rules. Good enough for fixtures and synthetic text.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTagger;

impl PosTagger for RuleTagger {
    fn tag(&self, word: &str) -> PosTag {
        let w = word.to_lowercase();
        if w.is_empty() {
            return PosTag::X;
        }
        if w.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && w.chars().any(|c| c.is_ascii_digit()) {
            return PosTag::CD;
        }
        if !w.chars().any(char::is_alphabetic) {
            return PosTag::X;
        }
        let w = w.as_str();
        if DETERMINERS.contains(&w) {
            return PosTag::DT;
        }
        if PREPOSITIONS.contains(&w) {
            return PosTag::IN;
        }
        if CONJUNCTIONS.contains(&w) {
            return PosTag::CC;
        }
        if PRONOUNS.contains(&w) {
            return PosTag::PRP;
        }
        if w.len() > 4 && w.ends_with("ly") {
            return PosTag::RB;
        }
        if w.len() > 5 && ["ing", "ize", "ise", "ieren"].iter().any(|s| w.ends_with(s)) {
            return PosTag::VB;
        }
        if w.len() > 4 && w.ends_with("ed") {
            return PosTag::VB;
        }
        const ADJ: &[&str] = &["ous", "ive", "ic", "able", "ible", "ful", "less", "lich", "isch", "ig", "al", "bar"];
        if w.len() > 4 && ADJ.iter().any(|s| w.ends_with(s)) {
            return PosTag::JJ;
        }
        PosTag::NN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_plurals() {
        let s = SuffixStemmer;
        assert_eq!(s.stem("methods"), "method");
        assert_eq!(s.stem("method"), "method");
        assert_eq!(s.stem("classes"), "class");
        assert_eq!(s.stem("class"), "class");
        assert_eq!(s.stem("studies"), "study");
        assert_eq!(s.stem("bildungen"), "bildung");
        assert_eq!(s.stem("focus"), "focus");
        assert_eq!(s.stem("gas"), "gas");
        assert_eq!(s.stem("Methods"), "method");
    }

    #[test]
    fn closure_is_a_stemmer() {
        let ident = |w: &str| w.to_string();
        assert_eq!(Stemmer::stem(&ident, "methods"), "methods");
    }

    #[test]
    fn tags() {
        let t = RuleTagger;
        assert_eq!(t.tag("the"), PosTag::DT);
        assert_eq!(t.tag("und"), PosTag::CC);
        assert_eq!(t.tag("2019"), PosTag::CD);
        assert_eq!(t.tag("quickly"), PosTag::RB);
        assert_eq!(t.tag("running"), PosTag::VB);
        assert_eq!(t.tag("political"), PosTag::JJ);
        assert_eq!(t.tag("migration"), PosTag::NN);
        assert_eq!("JJ".parse::<PosTag>().unwrap(), PosTag::JJ);
        assert!("ZZ".parse::<PosTag>().is_err());
    }
}
