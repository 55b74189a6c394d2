//! Codepoint -> script classification.
//!
//! The mapping is a frozen range table shipped with the crate
//! (`data/script_ranges.txt`) rather than a Unicode-library query, so the
//! same build classifies identically regardless of the Unicode tables the
//! toolchain happens to carry. Codepoints outside the table fall back to
//! `Whitespace` (via `char::is_whitespace`) or `Other`.

use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

/// Script class of a single codepoint (total over all of Unicode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScriptClass {
    Latin,
    Devanagari,
    Bengali,
    Gujarati,
    Gurmukhi,
    Kannada,
    Malayalam,
    Odia,
    Tamil,
    Telugu,
    Digit,
    Punctuation,
    Whitespace,
    Other,
}

impl ScriptClass {
    /// True for the classes that represent a writing system (and can
    /// therefore be a word's dominant script vote).
    pub fn is_script(self) -> bool {
        !matches!(
            self,
            ScriptClass::Digit | ScriptClass::Punctuation | ScriptClass::Whitespace
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ScriptClass::Latin => "Latin",
            ScriptClass::Devanagari => "Devanagari",
            ScriptClass::Bengali => "Bengali",
            ScriptClass::Gujarati => "Gujarati",
            ScriptClass::Gurmukhi => "Gurmukhi",
            ScriptClass::Kannada => "Kannada",
            ScriptClass::Malayalam => "Malayalam",
            ScriptClass::Odia => "Odia",
            ScriptClass::Tamil => "Tamil",
            ScriptClass::Telugu => "Telugu",
            ScriptClass::Digit => "Digit",
            ScriptClass::Punctuation => "Punctuation",
            ScriptClass::Whitespace => "Whitespace",
            ScriptClass::Other => "Other",
        }
    }
}

impl fmt::Display for ScriptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScriptClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Latin" => Ok(ScriptClass::Latin),
            "Devanagari" => Ok(ScriptClass::Devanagari),
            "Bengali" => Ok(ScriptClass::Bengali),
            "Gujarati" => Ok(ScriptClass::Gujarati),
            "Gurmukhi" => Ok(ScriptClass::Gurmukhi),
            "Kannada" => Ok(ScriptClass::Kannada),
            "Malayalam" => Ok(ScriptClass::Malayalam),
            "Odia" => Ok(ScriptClass::Odia),
            "Tamil" => Ok(ScriptClass::Tamil),
            "Telugu" => Ok(ScriptClass::Telugu),
            "Digit" => Ok(ScriptClass::Digit),
            "Punctuation" => Ok(ScriptClass::Punctuation),
            "Whitespace" => Ok(ScriptClass::Whitespace),
            "Other" => Ok(ScriptClass::Other),
            other => Err(format!("unknown script class {other:?}")),
        }
    }
}

const RANGE_TABLE_SRC: &str = include_str!("../data/script_ranges.txt");

struct RangeTable {
    // sorted, non-overlapping inclusive ranges
    ranges: Vec<(u32, u32, ScriptClass)>,
}

impl RangeTable {
    fn parse(src: &str) -> Result<Self, String> {
        let mut ranges = Vec::new();
        for (lineno, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| format!("script_ranges.txt line {}: {msg}", lineno + 1);
            let (span, class) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected `START..END CLASS`"))?;
            let (start, end) = span
                .split_once("..")
                .ok_or_else(|| err("expected `START..END` range"))?;
            let start = u32::from_str_radix(start.trim(), 16).map_err(|e| err(&e.to_string()))?;
            let end = u32::from_str_radix(end.trim(), 16).map_err(|e| err(&e.to_string()))?;
            if start > end {
                return Err(err("range start exceeds end"));
            }
            let class: ScriptClass = class.trim().parse().map_err(|e: String| err(&e))?;
            ranges.push((start, end, class));
        }
        ranges.sort_by_key(|r| r.0);
        for pair in ranges.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return Err(format!(
                    "script_ranges.txt: overlapping ranges {:04X}..{:04X} and {:04X}..{:04X}",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                ));
            }
        }
        Ok(RangeTable { ranges })
    }

    fn lookup(&self, cp: u32) -> Option<ScriptClass> {
        let idx = self.ranges.partition_point(|&(start, _, _)| start <= cp);
        if idx == 0 {
            return None;
        }
        let (start, end, class) = self.ranges[idx - 1];
        debug_assert!(start <= cp);
        (cp <= end).then_some(class)
    }
}

static RANGES: Lazy<RangeTable> =
    Lazy::new(|| RangeTable::parse(RANGE_TABLE_SRC).expect("bundled script range table is valid"));

/// Classify one codepoint. Total: every `char` maps to exactly one class.
pub fn classify_codepoint(cp: char) -> ScriptClass {
    if let Some(class) = RANGES.lookup(cp as u32) {
        return class;
    }
    if cp.is_whitespace() {
        ScriptClass::Whitespace
    } else {
        ScriptClass::Other
    }
}
