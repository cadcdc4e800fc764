//! Failure signatures and the normalizer chain behind the "same error
//! message" relation.
//!
//! A test failure is identified by its error type (the exception or
//! assertion-failure class) and its message. Messages are compared only
//! after running them through a chain of normalizers, because the raw text
//! routinely differs across versions in ways that carry no signal:
//! absolute scratch paths, line numbers, whitespace. The chain is
//! configured per manifest so stricter or looser matching policies can be
//! studied; the default keeps the first message line, collapses
//! whitespace, strips absolute path prefixes and drops trailing
//! line/column coordinates. Stack traces never take part in the
//! comparison.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalized identity of one test failure. Two failures are "the same
/// error" exactly when their signatures are equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FailureSignature {
    pub error_type: String,
    pub message: String,
}

impl fmt::Display for FailureSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.error_type, self.message)
    }
}

/// True iff both the error type and the normalized message are equal.
/// Plain equality, so the relation is trivially reflexive, symmetric and
/// transitive on normalized signatures.
pub fn signatures_match(a: &FailureSignature, b: &FailureSignature) -> bool {
    a == b
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown signature normalizer `{0}`")]
pub struct UnknownNormalizer(pub String);

/// One message-normalization step, selected by name in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalizer {
    /// Keep only the first line of the message.
    FirstLine,
    /// Collapse whitespace runs to single spaces and trim the ends.
    CollapseWhitespace,
    /// Drop the directory part of absolute paths, keeping the file name.
    StripAbsolutePaths,
    /// Drop trailing `:line` or `:line:column` coordinates.
    StripTrailingCoordinates,
}

impl Normalizer {
    pub const fn name(self) -> &'static str {
        match self {
            Normalizer::FirstLine => "first_line",
            Normalizer::CollapseWhitespace => "collapse_whitespace",
            Normalizer::StripAbsolutePaths => "strip_absolute_paths",
            Normalizer::StripTrailingCoordinates => "strip_trailing_coordinates",
        }
    }

    pub fn apply(self, message: &str) -> String {
        match self {
            Normalizer::FirstLine => message
                .split('\n')
                .next()
                .unwrap_or("")
                .trim_end_matches('\r')
                .to_string(),
            Normalizer::CollapseWhitespace => {
                message.split_whitespace().collect::<Vec<_>>().join(" ")
            }
            Normalizer::StripAbsolutePaths => {
                static DIRS: OnceLock<Regex> = OnceLock::new();
                let dirs = DIRS.get_or_init(|| Regex::new(r"/(?:[^/\s:]+/)+").unwrap());
                dirs.replace_all(message, "").into_owned()
            }
            Normalizer::StripTrailingCoordinates => {
                static COORDS: OnceLock<Regex> = OnceLock::new();
                let coords = COORDS.get_or_init(|| Regex::new(r"(?::\d+){1,2}\s*$").unwrap());
                coords.replace(message.trim_end(), "").into_owned()
            }
        }
    }
}

impl FromStr for Normalizer {
    type Err = UnknownNormalizer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first_line" => Ok(Normalizer::FirstLine),
            "collapse_whitespace" => Ok(Normalizer::CollapseWhitespace),
            "strip_absolute_paths" => Ok(Normalizer::StripAbsolutePaths),
            "strip_trailing_coordinates" => Ok(Normalizer::StripTrailingCoordinates),
            other => Err(UnknownNormalizer(other.to_string())),
        }
    }
}

/// Ordered list of normalizers, applied to the message left to right.
/// The error type is only trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizerChain {
    steps: Vec<Normalizer>,
}

impl NormalizerChain {
    /// The chain used when a manifest does not name one.
    pub fn default_chain() -> Self {
        Self {
            steps: vec![
                Normalizer::FirstLine,
                Normalizer::CollapseWhitespace,
                Normalizer::StripAbsolutePaths,
                Normalizer::StripTrailingCoordinates,
            ],
        }
    }

    /// Empty chain: messages are compared verbatim (error types still
    /// trimmed).
    pub fn identity() -> Self {
        Self { steps: Vec::new() }
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, UnknownNormalizer> {
        let steps = names
            .iter()
            .map(|n| n.as_ref().parse())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { steps })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.name()).collect()
    }

    pub fn normalize(&self, error_type: &str, raw_message: &str) -> FailureSignature {
        let mut message = raw_message.to_string();
        for step in &self.steps {
            message = step.apply(&message);
        }
        FailureSignature {
            error_type: error_type.trim().to_string(),
            message,
        }
    }
}

impl Default for NormalizerChain {
    fn default() -> Self {
        Self::default_chain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_signatures_match() {
        let chain = NormalizerChain::default_chain();
        let a = chain.normalize("AssertionFailedError", "expected:<1> but was:<2>");
        assert!(signatures_match(&a, &a.clone()));
    }

    #[test]
    fn absolute_path_prefix_is_stripped() {
        // Hand-applied chain: first line unchanged, whitespace already
        // single, "/work/b17/src/main/Complex.java" -> "Complex.java",
        // no trailing coordinates.
        let chain = NormalizerChain::default_chain();
        let a = chain.normalize(
            "ArithmeticException",
            "overflow in /work/b17/src/main/Complex.java",
        );
        let b = chain.normalize(
            "ArithmeticException",
            "overflow in /tmp/scratch-9/src/main/Complex.java",
        );
        assert_eq!(a.message, "overflow in Complex.java");
        assert!(signatures_match(&a, &b));
    }

    #[test]
    fn differing_error_type_never_matches() {
        let chain = NormalizerChain::default_chain();
        let a = chain.normalize("AssertionFailedError", "boom");
        let b = chain.normalize("NullPointerException", "boom");
        assert!(!signatures_match(&a, &b));
    }

    #[test]
    fn first_line_drops_stack_trace() {
        let chain = NormalizerChain::default_chain();
        let sig = chain.normalize(
            "AssertionFailedError",
            "expected:<INF> but was:<NaN>\n\tat ComplexTest.testReciprocalZero(ComplexTest.java:305)",
        );
        assert_eq!(sig.message, "expected:<INF> but was:<NaN>");
    }

    #[test]
    fn whitespace_runs_collapse() {
        let chain = NormalizerChain::default_chain();
        let a = chain.normalize("E", "a   b\t\tc ");
        assert_eq!(sig_msg(&a), "a b c");
    }

    #[test]
    fn trailing_coordinates_dropped() {
        let chain = NormalizerChain::default_chain();
        assert_eq!(
            sig_msg(&chain.normalize("E", "parse error at Foo.java:31:7")),
            "parse error at Foo.java"
        );
        assert_eq!(
            sig_msg(&chain.normalize("E", "parse error at Foo.java:31")),
            "parse error at Foo.java"
        );
        // A colonless message is left alone.
        assert_eq!(sig_msg(&chain.normalize("E", "plain")), "plain");
    }

    #[test]
    fn chain_order_comes_from_names() {
        let chain = NormalizerChain::from_names(&["collapse_whitespace"]).unwrap();
        assert_eq!(chain.names(), vec!["collapse_whitespace"]);
        // Without first_line the trace line survives (collapsed).
        let sig = chain.normalize("E", "a\nb");
        assert_eq!(sig.message, "a b");
    }

    #[test]
    fn unknown_normalizer_rejected() {
        assert_eq!(
            NormalizerChain::from_names(&["no_such"]).unwrap_err(),
            UnknownNormalizer("no_such".to_string())
        );
    }

    fn sig_msg(s: &FailureSignature) -> &str {
        &s.message
    }
}
