//! Runs scenario files through the dynext constructions and renders the
//! resulting certificates.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dynext_core::certificate::{Certificate, Format, Status};
use dynext_core::scenario::{Scenario, ScenarioError, Section};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod constructions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Construction {
    EmbedInjection,
    FactorOperator,
    LiftMap,
    CommonExtension,
    ContractiveExtension,
    GeneralizedExtension,
    InvariantTower,
    VerifyCovers,
}

impl Construction {
    pub const ALL: [Construction; 8] = [
        Construction::EmbedInjection,
        Construction::FactorOperator,
        Construction::LiftMap,
        Construction::CommonExtension,
        Construction::ContractiveExtension,
        Construction::GeneralizedExtension,
        Construction::InvariantTower,
        Construction::VerifyCovers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construction::EmbedInjection => "embed-injection",
            Construction::FactorOperator => "factor-operator",
            Construction::LiftMap => "lift-map",
            Construction::CommonExtension => "common-extension",
            Construction::ContractiveExtension => "contractive-extension",
            Construction::GeneralizedExtension => "generalized-extension",
            Construction::InvariantTower => "invariant-tower",
            Construction::VerifyCovers => "verify-covers",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Command-line overrides; each takes precedence over the scenario value.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub depth: Option<usize>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub space: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("scenario error: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct Report {
    pub certificate: Certificate,
    pub format: Format,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.certificate.passed()
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn rendered(&self) -> String {
        self.certificate.render(self.format)
    }

    /// One line per construction, the overall status, and the first
    /// failing witness if any.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.certificate.title);
        for c in &self.certificate.children {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "  {status}  {}", c.title);
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        if let Some((path, witness)) = self.certificate.first_failure() {
            let _ = writeln!(out, "first failure: {path}: {witness}");
        }
        out
    }

    /// Writes `certificate.txt` and `summary.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let cert = dir.join("certificate.txt");
        let summary = dir.join("summary.txt");
        fs::write(&cert, self.rendered()).map_err(io(&cert))?;
        fs::write(&summary, self.summary()).map_err(io(&summary))?;
        Ok((cert, summary))
    }
}

/// Runs every section of `scenario` (or only those of kind `only`).
pub fn run_scenario(
    scenario: &Scenario,
    only: Option<Construction>,
    opts: &Options,
) -> Result<Certificate, ScenarioError> {
    let mut root = Certificate::new(format!("dynext seed={}", opts.seed));
    root.status = Status::Info;
    let mut ran = 0;
    for (index, section) in scenario.sections.iter().enumerate() {
        let kind = Construction::from_name(&section.name).ok_or_else(|| ScenarioError {
            line: section.line,
            message: format!("unknown construction `{}`", section.name),
        })?;
        if only.is_some_and(|o| o != kind) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(index as u64));
        root.push(constructions::run(kind, section, opts, &mut rng)?);
        ran += 1;
    }
    if ran == 0 {
        let wanted = only.map_or("any construction".to_string(), |o| format!("a `[{}]` section", o.name()));
        return Err(ScenarioError { line: 0, message: format!("scenario has no {wanted}") });
    }
    Ok(root)
}

/// Loads the scenario at `path`, or runs `only` with its defaults when no
/// path is given.
pub fn execute(
    path: Option<&Path>,
    only: Option<Construction>,
    opts: &Options,
    format: Format,
) -> Result<Report, CliError> {
    let scenario = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            Scenario::parse(&text)?
        }
        None => {
            let kind = only.ok_or(ScenarioError { line: 0, message: "`run` needs --scenario".into() })?;
            Scenario { sections: vec![Section { name: kind.name().into(), line: 0, entries: Vec::new() }] }
        }
    };
    let certificate = run_scenario(&scenario, only, opts)?;
    Ok(Report { certificate, format })
}
