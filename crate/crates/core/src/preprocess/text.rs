//! Normalization, tokenization, sentence splitting and fixed-length encoding.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Sequence length fed to the network.
pub const MAXLEN: usize = 200;

pub const URL_TOKEN: &str = "url";
pub const MENTION_TOKEN: &str = "@username";

// Private-use code points stand in for replaced spans until after the
// punctuation split, so "@username" keeps its '@'.
const URL_MARK: char = '\u{E000}';
const MENTION_MARK: char = '\u{E001}';

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S*").expect("valid regex"));
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("valid regex"));

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && c != '_' && c != URL_MARK && c != MENTION_MARK
}

/// Lowercases, replaces links with `url` and user mentions with `@username`,
/// then splits on whitespace with leading and trailing punctuation detached
/// one character per token. Interior punctuation (`don't`) is kept.
pub fn normalize_and_tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let with_urls = URL_RE.replace_all(&lower, |caps: &regex::Captures<'_>| {
        // Give trailing punctuation back to the text: "see http://x.co!".
        let span = &caps[0];
        let kept = span.trim_end_matches(|c: char| is_punct(c) && c != '/');
        format!(" {URL_MARK} {}", &span[kept.len()..])
    });
    let marked = MENTION_RE.replace_all(&with_urls, format!(" {MENTION_MARK} ").as_str());

    let mut tokens = Vec::new();
    for word in marked.split_whitespace() {
        let start = word.find(|c: char| !is_punct(c)).unwrap_or(word.len());
        let core_end = word
            .rfind(|c: char| !is_punct(c))
            .map(|i| i + word[i..].chars().next().map_or(1, char::len_utf8))
            .unwrap_or(start);
        tokens.extend(word[..start].chars().map(String::from));
        if start < core_end {
            tokens.push(match &word[start..core_end] {
                s if s == URL_MARK.to_string() => URL_TOKEN.to_string(),
                s if s == MENTION_MARK.to_string() => MENTION_TOKEN.to_string(),
                s => s.to_string(),
            });
        }
        tokens.extend(word[core_end.max(start)..].chars().map(String::from));
    }
    tokens
}

/// Splits after each run of `.`, `!` or `?`. Segments are trimmed and empty
/// ones dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        let terminator = matches!(c, '.' | '!' | '?');
        let run_continues = matches!(chars.peek(), Some('.' | '!' | '?'));
        if terminator && !run_continues {
            push_trimmed(&mut out, &current);
            current.clear();
        }
    }
    push_trimmed(&mut out, &current);
    out
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

/// Which end of an overlong sequence survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    #[default]
    KeepFirst,
    KeepLast,
}

/// Fits `ids` to exactly `maxlen`, left-padding with 0.
pub fn pad_ids(ids: &[usize], maxlen: usize, truncation: Truncation) -> Vec<usize> {
    let kept = if ids.len() > maxlen {
        match truncation {
            Truncation::KeepFirst => &ids[..maxlen],
            Truncation::KeepLast => &ids[ids.len() - maxlen..],
        }
    } else {
        ids
    };
    let mut out = vec![0; maxlen - kept.len()];
    out.extend_from_slice(kept);
    out
}
