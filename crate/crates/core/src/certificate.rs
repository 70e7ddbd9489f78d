//! Structured PASS/FAIL reports.

use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// Indented sections.
    #[default]
    Text,
    /// Box-drawing tree.
    Tree,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "tree" => Ok(Format::Tree),
            _ => Err(format!("unknown format `{s}` (expected text or tree)")),
        }
    }
}

/// A section with a status, free-form detail lines, an optional witness and
/// subsections. The status of a section with children is the conjunction
/// of its own and theirs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub title: String,
    pub status: Status,
    pub details: Vec<String>,
    pub witness: Option<String>,
    pub children: Vec<Certificate>,
}

impl Certificate {
    pub fn new(title: impl Into<String>) -> Self {
        Certificate {
            title: title.into(),
            status: Status::Info,
            details: Vec::new(),
            witness: None,
            children: Vec::new(),
        }
    }

    pub fn check(title: impl Into<String>, ok: bool) -> Self {
        let mut c = Self::new(title);
        c.status = if ok { Status::Pass } else { Status::Fail };
        c
    }

    pub fn pass(title: impl Into<String>) -> Self {
        Self::check(title, true)
    }

    pub fn fail(title: impl Into<String>, witness: impl Into<String>) -> Self {
        Self::check(title, false).with_witness(witness)
    }

    /// `PASS`, or `FAIL` carrying the error as witness.
    pub fn from_result<T, E: fmt::Display>(title: impl Into<String>, r: &Result<T, E>) -> Self {
        match r {
            Ok(_) => Self::pass(title),
            Err(e) => Self::fail(title, e.to_string()),
        }
    }

    pub fn detail(mut self, line: impl Into<String>) -> Self {
        self.details.push(line.into());
        self
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn child(mut self, c: Certificate) -> Self {
        self.children.push(c);
        self
    }

    pub fn push(&mut self, c: Certificate) {
        self.children.push(c);
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail && self.children.iter().all(Certificate::passed)
    }

    fn effective(&self) -> Status {
        match (self.status, self.passed()) {
            (_, false) => Status::Fail,
            (Status::Info, true) if !self.children.is_empty() => Status::Pass,
            (s, true) => s,
        }
    }

    /// The path and witness of the first failing section, depth first.
    pub fn first_failure(&self) -> Option<(String, String)> {
        if self.status == Status::Fail {
            return Some((self.title.clone(), self.witness.clone().unwrap_or_else(|| "no witness recorded".into())));
        }
        self.children
            .iter()
            .find_map(Certificate::first_failure)
            .map(|(path, w)| (format!("{} / {path}", self.title), w))
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Text => self.render_text(&mut out, 0),
            Format::Tree => {
                self.render_line(&mut out, "");
                self.render_tree(&mut out, "");
            }
        }
        out
    }

    fn render_line(&self, out: &mut String, prefix: &str) {
        let _ = writeln!(out, "{prefix}[{}] {}", self.effective().label(), self.title);
    }

    fn render_text(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        self.render_line(out, &pad);
        for d in &self.details {
            let _ = writeln!(out, "{pad}    {d}");
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "{pad}    witness: {w}");
        }
        for c in &self.children {
            c.render_text(out, depth + 1);
        }
    }

    fn render_tree(&self, out: &mut String, prefix: &str) {
        let leaves = self.details.len() + usize::from(self.witness.is_some()) + self.children.len();
        let mut n = 0;
        let mut branch = || {
            n += 1;
            if n == leaves {
                ("└─ ", "   ")
            } else {
                ("├─ ", "│  ")
            }
        };
        for d in &self.details {
            let (b, _) = branch();
            let _ = writeln!(out, "{prefix}{b}{d}");
        }
        if let Some(w) = &self.witness {
            let (b, _) = branch();
            let _ = writeln!(out, "{prefix}{b}witness: {w}");
        }
        for c in &self.children {
            let (b, cont) = branch();
            c.render_line(out, &format!("{prefix}{b}"));
            c.render_tree(out, &format!("{prefix}{cont}"));
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Format::Text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Certificate {
        Certificate::new("run seed=7")
            .detail("space: interval")
            .child(Certificate::pass("covers").detail("depth 6"))
            .child(Certificate::new("diagrams").child(Certificate::fail("k=3", "α=0101")))
    }

    #[test]
    fn status_propagates() {
        let c = sample();
        assert!(!c.passed());
        assert_eq!(c.first_failure(), Some(("run seed=7 / diagrams / k=3".into(), "α=0101".into())));
        assert!(Certificate::new("x").child(Certificate::pass("y")).passed());
    }

    #[test]
    fn renderings() {
        let text = sample().render(Format::Text);
        assert!(text.starts_with("[FAIL] run seed=7\n"));
        assert!(text.contains("  [PASS] covers\n      depth 6\n"));
        assert!(text.contains("      witness: α=0101\n"));
        let tree = sample().render(Format::Tree);
        assert!(tree.contains("├─ [PASS] covers\n│  └─ depth 6\n"));
        assert!(tree.contains("└─ [FAIL] diagrams\n   └─ [FAIL] k=3\n      └─ witness: α=0101\n"));
        assert_eq!("tree".parse::<Format>(), Ok(Format::Tree));
        assert!("xml".parse::<Format>().is_err());
    }
}
