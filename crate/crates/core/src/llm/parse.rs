use std::sync::LazyLock;

use regex::Regex;

static BRACKETED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]]*)\]").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no bracketed order found")]
    NoBrackets,
    #[error("bracketed value `{0}` is not a non-negative integer")]
    Malformed(String),
}

/// Extracts the order from a completion: the last bracketed token that holds
/// a non-negative integer (surrounding whitespace and leading zeros allowed).
pub fn parse_order(completion: &str) -> Result<u32, ParseError> {
    let mut last_bad: Option<String> = None;
    let mut last_good: Option<u32> = None;
    for cap in BRACKETED.captures_iter(completion) {
        let inner = cap[1].trim();
        let valid = !inner.is_empty() && inner.bytes().all(|b| b.is_ascii_digit());
        match valid.then(|| inner.parse::<u32>()) {
            Some(Ok(v)) => last_good = Some(v),
            _ => last_bad = Some(cap[1].to_string()),
        }
    }
    match (last_good, last_bad) {
        (Some(v), _) => Ok(v),
        (None, Some(bad)) => Err(ParseError::Malformed(bad)),
        (None, None) => Err(ParseError::NoBrackets),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        assert_eq!(parse_order("I will order [7]"), Ok(7));
        assert_eq!(parse_order("first [3] ... final answer [8]"), Ok(8));
        assert_eq!(parse_order("order 5"), Err(ParseError::NoBrackets));
        assert_eq!(parse_order("[ 012 ]"), Ok(12));
        assert_eq!(parse_order("[-3]"), Err(ParseError::Malformed("-3".into())));
        assert_eq!(parse_order("[+3]"), Err(ParseError::Malformed("+3".into())));
        assert_eq!(parse_order("[3.5]"), Err(ParseError::Malformed("3.5".into())));
        assert_eq!(parse_order("[]"), Err(ParseError::Malformed("".into())));
        assert_eq!(parse_order("[99999999999]"), Err(ParseError::Malformed("99999999999".into())));
        // echo of the format example followed by the answer
        assert_eq!(parse_order("format (e.g., [0]) ... so [14]"), Ok(14));
        // a trailing non-integer bracket does not hide an earlier valid one
        assert_eq!(parse_order("order [6] [see note]"), Ok(6));
        assert_eq!(parse_order("nested [[5]]"), Ok(5));
    }
}
