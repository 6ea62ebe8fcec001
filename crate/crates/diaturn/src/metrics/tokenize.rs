//! Scoring tokenization: word streams for WER-style metrics, character
//! streams for CER-style metrics.

use serde::{Deserialize, Serialize};

/// Token granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenUnit {
    Word,
    Char,
}

/// How text becomes scoring tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizationMode {
    pub unit: TokenUnit,
    pub lowercase: bool,
    pub strip_punct: bool,
}

impl TokenizationMode {
    /// Word tokens with lowercasing and punctuation stripping.
    pub fn word() -> TokenizationMode {
        TokenizationMode {
            unit: TokenUnit::Word,
            lowercase: true,
            strip_punct: true,
        }
    }

    /// One token per non-whitespace character, no normalization.
    pub fn char_mode() -> TokenizationMode {
        TokenizationMode {
            unit: TokenUnit::Char,
            lowercase: false,
            strip_punct: false,
        }
    }

    pub fn parse_unit(s: &str) -> Option<TokenizationMode> {
        match s {
            "word" => Some(TokenizationMode::word()),
            "char" => Some(TokenizationMode::char_mode()),
            _ => None,
        }
    }
}

const CJK_PUNCT: &str = "，。！？；：、“”‘’（）《》【】…—·";

fn is_stripped_punct(c: char) -> bool {
    c.is_ascii_punctuation() || CJK_PUNCT.contains(c)
}

/// Tokenizes `text` for scoring. Word mode normalizes then splits on
/// whitespace (tokens emptied by stripping vanish); char mode yields one
/// token per non-whitespace character.
pub fn tokenize(text: &str, mode: &TokenizationMode) -> Vec<String> {
    let mut normalized = String::with_capacity(text.len());
    for c in text.chars() {
        if mode.strip_punct && is_stripped_punct(c) {
            continue;
        }
        if mode.lowercase {
            normalized.extend(c.to_lowercase());
        } else {
            normalized.push(c);
        }
    }
    match mode.unit {
        TokenUnit::Word => normalized.split_whitespace().map(str::to_string).collect(),
        TokenUnit::Char => normalized
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}
