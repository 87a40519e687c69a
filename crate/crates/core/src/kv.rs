//! `key = value` text used by profile, latency and config files.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Keys keep
//! their case. Later duplicates overwrite earlier ones.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, KvError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(KvError { line: i + 1, message: format!("expected `key = value`, found `{line}`") });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(KvError { line: i + 1, message: "empty key".into() });
        }
        out.push((i + 1, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_comments() {
        let pairs = parse_pairs("# header\nname = steane-713\n\nl_code=7 # trailing\n").unwrap();
        assert_eq!(
            pairs,
            vec![(2, "name".into(), "steane-713".into()), (4, "l_code".into(), "7".into())]
        );
    }

    #[test]
    fn missing_equals() {
        assert_eq!(parse_pairs("a = 1\nbogus\n").unwrap_err().line, 2);
    }
}
