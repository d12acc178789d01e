//! Term files: one `name := term` definition per line, `success w1 w2`
//! declarations, and `#` comments. A declaration switches the file from the
//! conventional success names to the declared ones for every later line.

use std::collections::BTreeSet;

use super::parse::{parse, ParseOptions};
use super::Proc;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct TermFile {
    /// Definitions in file order.
    pub defs: Vec<(String, Proc)>,
    /// Declared success names, if any.
    pub success: Option<BTreeSet<String>>,
}

impl TermFile {
    pub fn get(&self, name: &str) -> Option<&Proc> {
        self.defs.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Options for parsing further terms the way the file's own were parsed.
    pub fn options(&self) -> ParseOptions {
        match &self.success {
            Some(names) => ParseOptions::declared(names.iter().cloned()),
            None => ParseOptions::default(),
        }
    }
}

fn shift(e: Error, line: usize, col: usize) -> Error {
    match e {
        Error::Syntax { line: 1, col: c, msg } => Error::Syntax { line, col: col + c - 1, msg },
        Error::Sort { line: 1, col: c, msg } => Error::Sort { line, col: col + c - 1, msg },
        Error::Syntax { line: l, col: c, msg } => Error::Syntax { line: line + l - 1, col: c, msg },
        Error::Sort { line: l, col: c, msg } => Error::Sort { line: line + l - 1, col: c, msg },
        other => other,
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_term_file(text: &str) -> Result<TermFile> {
    let mut file = TermFile::default();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |col: usize, msg: String| Error::Syntax { line, col, msg };
        if let Some(rest) = trimmed.strip_prefix("success").filter(|r| r.is_empty() || r.starts_with(char::is_whitespace)) {
            let names = file.success.get_or_insert_with(BTreeSet::new);
            for id in rest.split_whitespace() {
                if !is_ident(id) {
                    return Err(err(1, format!("bad success name `{id}`")));
                }
                names.insert(id.to_string());
            }
            continue;
        }
        let Some(at) = body.find(":=") else {
            return Err(err(1, "expected `name := term` or `success ...`".into()));
        };
        let name = body[..at].trim();
        if !is_ident(name) {
            return Err(err(1, format!("bad definition name `{name}`")));
        }
        if file.get(name).is_some() {
            return Err(err(1, format!("`{name}` is defined twice")));
        }
        let term = parse(&body[at + 2..], &file.options()).map_err(|e| shift(e, line, at + 3))?;
        file.defs.push((name.to_string(), term));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitions_comments_and_declarations() {
        let text = "# pairs\np := a(x).a!b.0   # left\n\nsuccess ok\nt := a!c.a(y).ok\n";
        let f = parse_term_file(text).unwrap();
        assert_eq!(f.defs.len(), 2);
        assert!(f.get("p").unwrap().success_names().is_empty());
        assert_eq!(f.get("t").unwrap().success_names().len(), 1);
        assert_eq!(f.success, Some(BTreeSet::from(["ok".to_string()])));
    }

    #[test]
    fn errors_point_into_the_file() {
        let e = parse_term_file("p := 0\nq := a(x.0\n").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 2, col, .. } if col > 5), "{e}");
        assert!(parse_term_file("p := 0\np := 0").is_err());
        assert!(parse_term_file("just words").is_err());
    }
}
