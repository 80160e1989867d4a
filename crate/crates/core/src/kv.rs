//! Line-oriented `key = value` text format shared by experiment configs and
//! scenario presets. `#` starts a comment; values may be double-quoted.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: unquote(value.trim()).to_string(),
        });
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let text = "# header\nseed = 7\n\naggregator = \"dos\"  # trailing\ntrain.learning_rate=0.01\n";
        let e = parse(text, Path::new("x.conf")).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!((e[0].line, e[0].key.as_str(), e[0].value.as_str()), (2, "seed", "7"));
        assert_eq!(e[1].value, "dos");
        assert_eq!(e[2].key, "train.learning_rate");
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse("seed = 1\nbogus line\n", Path::new("c.conf")).unwrap_err();
        assert_eq!(err.to_string(), "c.conf:2: expected `key = value`, found `bogus line`");
        assert_eq!(err.exit_code(), 2);
    }
}
