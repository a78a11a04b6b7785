//! Syntactic-validity oracles. These define what "valid" means for the
//! valid-ratio metrics and gate the deep stage of the bundled targets.

pub mod checksum;
pub mod json;
pub mod script;
pub mod xml;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricsError;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

fn verdict<T, E: fmt::Display>(r: Result<T, E>) -> Validity {
    match r {
        Ok(_) => Validity::Valid,
        Err(e) => Validity::Invalid(e.to_string()),
    }
}

pub fn validate_xml(bytes: &[u8]) -> Validity {
    verdict(xml::parse(bytes))
}

pub fn validate_json(bytes: &[u8]) -> Validity {
    verdict(json::parse(bytes))
}

pub fn validate_script(bytes: &[u8]) -> Validity {
    verdict(script::parse(bytes))
}

pub fn validate_checksum(bytes: &[u8]) -> Validity {
    verdict(checksum::parse(bytes))
}

pub type Validator = fn(&[u8]) -> Validity;

/// Input formats with a bundled grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Xml,
    Json,
    Script,
    Checksum,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Xml, Format::Json, Format::Script, Format::Checksum];

    /// The name substituted into prompts.
    pub fn name(self) -> &'static str {
        match self {
            Format::Xml => "xml",
            Format::Json => "json",
            Format::Script => "script",
            Format::Checksum => "md5 checksum",
        }
    }

    pub fn validator(self) -> Validator {
        match self {
            Format::Xml => validate_xml,
            Format::Json => validate_json,
            Format::Script => validate_script,
            Format::Checksum => validate_checksum,
        }
    }

    pub fn validate(self, bytes: &[u8]) -> Validity {
        (self.validator())(bytes)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Format::ALL
            .into_iter()
            .find(|f| f.name() == s || format!("{f:?}").to_ascii_lowercase() == s)
            .ok_or_else(|| format!("unknown format '{s}'"))
    }
}

/// Fraction of `seeds` accepted by `validator`.
pub fn valid_ratio<S: AsRef<[u8]> + Sync>(seeds: &[S], validator: Validator) -> Result<f64, MetricsError> {
    if seeds.is_empty() {
        return Err(MetricsError::UndefinedRatio);
    }
    let valid = parallel::map(seeds, |s| validator(s.as_ref()).is_valid())
        .into_iter()
        .filter(|&v| v)
        .count();
    Ok(valid as f64 / seeds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ratio_examples() {
        let seeds: Vec<&[u8]> = vec![b"<a/>", b"<a>", b"<b></b>", b"x", b"<c/>", b"", b"<d/>", b"<", b"<e/>", b"</f>"];
        assert_eq!(valid_ratio(&seeds, validate_xml).unwrap(), 0.5);
        assert_eq!(valid_ratio(&[&b"1"[..], b"[]"], validate_json).unwrap(), 1.0);
        assert!(matches!(valid_ratio::<&[u8]>(&[], validate_json), Err(MetricsError::UndefinedRatio)));
    }

    #[test]
    fn format_names_parse() {
        for f in Format::ALL {
            assert_eq!(f.name().parse::<Format>().unwrap(), f);
        }
        assert_eq!("XML".parse::<Format>().unwrap(), Format::Xml);
        assert!("yaml".parse::<Format>().is_err());
    }

    proptest! {
        #[test]
        fn validators_are_total(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
            for f in Format::ALL {
                let _ = f.validate(&bytes);
            }
        }

        #[test]
        fn validators_total_on_markup_soup(
            parts in prop::collection::vec(prop::sample::select(vec![
                "<a>", "</a>", "<b x=\"1\">", "</b>", "<c/>", "text", "{", "}", "[", "]", "\"k\"", ":", ",",
                "let", "x", "=", "1", ";", "(", ")", "if", "<!--", "-->", "<?xml?>", "\\", " ",
            ]), 0..40)
        ) {
            let s = parts.concat();
            for f in Format::ALL {
                let _ = f.validate(s.as_bytes());
            }
        }
    }
}
