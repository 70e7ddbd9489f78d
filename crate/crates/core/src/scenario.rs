//! Scenario files: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Keys may repeat.

use std::fmt;
use std::str::FromStr;

use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    fn error(&self, line: usize, message: impl Into<String>) -> ScenarioError {
        ScenarioError { line, message: format!("[{}] {}", self.name, message.into()) }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries.iter().filter(|e| e.key == key).map(|e| e.value.as_str()).collect()
    }

    pub fn require(&self, key: &str) -> Result<&str, ScenarioError> {
        self.get(key).ok_or_else(|| self.error(self.line, format!("missing key `{key}`")))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().rev().find(|e| e.key == key).map_or(self.line, |e| e.line)
    }

    /// Parses the value of `key`, or returns `default` when absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ScenarioError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| self.error(self.line_of(key), format!("`{key}`: {e}"))),
        }
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, ScenarioError>
    where
        T::Err: fmt::Display,
    {
        let v = self.require(key)?;
        v.parse().map_err(|e: T::Err| self.error(self.line_of(key), format!("`{key}`: {e}")))
    }

    pub fn rational(&self, key: &str) -> Result<Rational, ScenarioError> {
        parse_rational(self.require(key)?).map_err(|e| self.error(self.line_of(key), format!("`{key}`: {e}")))
    }

    /// A comma- or whitespace-separated list of rationals.
    pub fn rationals(&self, key: &str) -> Result<Vec<Rational>, ScenarioError> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| parse_rational(s).map_err(|e| self.error(self.line_of(key), format!("`{key}`: {e}"))))
                .collect(),
        }
    }

    /// Wraps an error from interpreting the value of `key`.
    pub fn invalid(&self, key: &str, message: impl fmt::Display) -> ScenarioError {
        self.error(self.line_of(key), format!("`{key}`: {message}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    pub sections: Vec<Section>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ScenarioError { line, message: "unterminated section header".into() })?
                    .trim();
                if name.is_empty() {
                    return Err(ScenarioError { line, message: "empty section name".into() });
                }
                sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ScenarioError { line, message: format!("expected `key = value`, got `{content}`") })?;
            let section = sections
                .last_mut()
                .ok_or_else(|| ScenarioError { line, message: "entry before the first section".into() })?;
            section.entries.push(Entry { key: key.trim().to_string(), value: value.trim().to_string(), line });
        }
        if sections.is_empty() {
            return Err(ScenarioError { line: 0, message: "no sections".into() });
        }
        Ok(Scenario { sections })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    const TEXT: &str = "
# operator
[factor-operator]
matrix = 0 1; 0 0
rho = 1
depth = 10000

[invariant-tower]
map = affine(1/2, 0)
points = 0, 1, 1/2 1/4
piece = a
piece = b
";

    #[test]
    fn parses_sections() {
        let s = Scenario::parse(TEXT).unwrap();
        assert_eq!(s.sections.len(), 2);
        let op = &s.sections[0];
        assert_eq!(op.name, "factor-operator");
        assert_eq!(op.get("matrix"), Some("0 1; 0 0"));
        assert_eq!(op.parse::<usize>("depth").unwrap(), 10_000);
        assert_eq!(op.rational("rho").unwrap(), ratio(1, 1));
        assert_eq!(op.parse_or("samples", 7usize).unwrap(), 7);
        let tower = &s.sections[1];
        assert_eq!(tower.rationals("points").unwrap(), vec![ratio(0, 1), ratio(1, 1), ratio(1, 2), ratio(1, 4)]);
        assert_eq!(tower.get_all("piece"), vec!["a", "b"]);
    }

    #[test]
    fn reports_lines() {
        assert_eq!(Scenario::parse("[a]\nx = 1\ny\n").unwrap_err().line, 3);
        assert_eq!(Scenario::parse("x = 1").unwrap_err().line, 1);
        assert_eq!(Scenario::parse("[a").unwrap_err().line, 1);
        let s = Scenario::parse("[a]\nx = 1/0\n").unwrap();
        assert_eq!(s.sections[0].rational("x").unwrap_err().line, 2);
        assert!(s.sections[0].parse::<u32>("y").is_err());
        assert!(Scenario::parse("# nothing\n").is_err());
    }
}
