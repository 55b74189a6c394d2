use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::script::ScriptClass;

/// Language tags supported by the pipeline: ten Indian languages plus English.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Lang {
    #[serde(rename = "bn")]
    Bengali,
    #[serde(rename = "gu")]
    Gujarati,
    #[serde(rename = "hi")]
    Hindi,
    #[serde(rename = "kn")]
    Kannada,
    #[serde(rename = "ml")]
    Malayalam,
    #[serde(rename = "mr")]
    Marathi,
    #[serde(rename = "or")]
    Odia,
    #[serde(rename = "pa")]
    Punjabi,
    #[serde(rename = "ta")]
    Tamil,
    #[serde(rename = "te")]
    Telugu,
    #[serde(rename = "en")]
    English,
}

impl Lang {
    pub const ALL: [Lang; 11] = [
        Lang::Bengali,
        Lang::Gujarati,
        Lang::Hindi,
        Lang::Kannada,
        Lang::Malayalam,
        Lang::Marathi,
        Lang::Odia,
        Lang::Punjabi,
        Lang::Tamil,
        Lang::Telugu,
        Lang::English,
    ];

    /// BCP-47-style two-letter tag.
    pub fn tag(self) -> &'static str {
        match self {
            Lang::Bengali => "bn",
            Lang::Gujarati => "gu",
            Lang::Hindi => "hi",
            Lang::Kannada => "kn",
            Lang::Malayalam => "ml",
            Lang::Marathi => "mr",
            Lang::Odia => "or",
            Lang::Punjabi => "pa",
            Lang::Tamil => "ta",
            Lang::Telugu => "te",
            Lang::English => "en",
        }
    }

    pub fn english_name(self) -> &'static str {
        match self {
            Lang::Bengali => "Bengali",
            Lang::Gujarati => "Gujarati",
            Lang::Hindi => "Hindi",
            Lang::Kannada => "Kannada",
            Lang::Malayalam => "Malayalam",
            Lang::Marathi => "Marathi",
            Lang::Odia => "Odia",
            Lang::Punjabi => "Punjabi",
            Lang::Tamil => "Tamil",
            Lang::Telugu => "Telugu",
            Lang::English => "English",
        }
    }

    /// Script the language is written in.
    pub fn script(self) -> ScriptClass {
        match self {
            Lang::Bengali => ScriptClass::Bengali,
            Lang::Gujarati => ScriptClass::Gujarati,
            Lang::Hindi | Lang::Marathi => ScriptClass::Devanagari,
            Lang::Kannada => ScriptClass::Kannada,
            Lang::Malayalam => ScriptClass::Malayalam,
            Lang::Odia => ScriptClass::Odia,
            Lang::Punjabi => ScriptClass::Gurmukhi,
            Lang::Tamil => ScriptClass::Tamil,
            Lang::Telugu => ScriptClass::Telugu,
            Lang::English => ScriptClass::Latin,
        }
    }

    /// Human-readable script name, handy for prompt `{script}` bindings.
    pub fn script_name(self) -> &'static str {
        match self {
            Lang::Bengali => "Bengali",
            Lang::Gujarati => "Gujarati",
            Lang::Hindi | Lang::Marathi => "Devanagari",
            Lang::Kannada => "Kannada",
            Lang::Malayalam => "Malayalam",
            Lang::Odia => "Odia",
            Lang::Punjabi => "Gurmukhi",
            Lang::Tamil => "Tamil",
            Lang::Telugu => "Telugu",
            Lang::English => "Latin",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lang::ALL
            .iter()
            .copied()
            .find(|l| l.tag() == s)
            .ok_or_else(|| Error::input(format!("unsupported language tag: {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for lang in Lang::ALL {
            assert_eq!(lang.tag().parse::<Lang>().unwrap(), lang);
        }
    }

    #[test]
    fn unknown_tag_rejected() {
        assert!("fr".parse::<Lang>().is_err());
        assert!("".parse::<Lang>().is_err());
    }

    #[test]
    fn serde_uses_tags() {
        let json = serde_json::to_string(&Lang::Odia).unwrap();
        assert_eq!(json, "\"or\"");
        let back: Lang = serde_json::from_str("\"ta\"").unwrap();
        assert_eq!(back, Lang::Tamil);
    }
}
