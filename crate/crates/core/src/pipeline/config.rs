use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::embed::{MockSpec, ProviderConfig, DEFAULT_BATCH_SIZE};
use crate::numerics::CorrelationMethod;
use crate::report::DEFAULT_NOTABLE_R;

/// A complete run description, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub data: DataSection,
    pub provider: ProviderSection,
    #[serde(default = "default_mock")]
    pub mock: MockSpec,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub languages: Vec<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "default_data_dir")]
    pub dir: PathBuf,
    /// Holds `prompts.<lang>.jsonl` for translated languages.
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            dir: default_data_dir(),
            prompts_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    File,
    Remote,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(ProviderKind::Mock),
            "file" => Ok(ProviderKind::File),
            "remote" => Ok(ProviderKind::Remote),
            other => Err(format!(
                "unknown provider kind {other:?} (expected mock, file or remote)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    pub model_id: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_notable_r")]
    pub notable_r: f64,
    #[serde(default)]
    pub spearman: bool,
    #[serde(default)]
    pub exclude_countries: Vec<String>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            notable_r: DEFAULT_NOTABLE_R,
            spearman: false,
            exclude_countries: Vec::new(),
        }
    }
}

impl AnalysisSection {
    pub fn method(&self) -> CorrelationMethod {
        if self.spearman {
            CorrelationMethod::Spearman
        } else {
            CorrelationMethod::Pearson
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_jobs() -> usize {
    1
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_notable_r() -> f64 {
    DEFAULT_NOTABLE_R
}

/// Planted east/west and high/low structure along one random direction.
pub fn default_mock() -> MockSpec {
    MockSpec {
        seed: 7,
        dim: 64,
        noise: 0.1,
        offsets: [("west", 1.0), ("east", -1.0), ("high", 1.0), ("low", -1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>(),
        axis: None,
    }
}

impl RunConfig {
    /// Parses `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).map_err(|message| PipelineError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.run.output_dir);
        resolve(&mut cfg.data.dir);
        if let Some(p) = cfg.data.prompts_dir.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.provider.path.as_mut() {
            resolve(p);
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), String> {
        if self.run.languages.is_empty() {
            return Err("run.languages must list at least one language".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.run.languages {
            if !seen.insert(l) {
                return Err(format!("language {l} listed twice"));
            }
        }
        if self.run.jobs == 0 {
            return Err("run.jobs must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.analysis.notable_r) {
            return Err(format!(
                "analysis.notable_r must lie in [0, 1], got {}",
                self.analysis.notable_r
            ));
        }
        self.mock.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Restricts the run to one configured language.
    pub fn select_language(&mut self, language: &str) -> Result<(), PipelineError> {
        if !self.run.languages.iter().any(|l| l == language) {
            return Err(PipelineError::UnconfiguredLanguage {
                language: language.to_string(),
                configured: self.run.languages.clone(),
            });
        }
        self.run.languages = vec![language.to_string()];
        Ok(())
    }

    /// Cache identity of the provider. Mock runs include a digest of the
    /// spec so different seeds never share cached vectors.
    pub fn effective_model_id(&self) -> String {
        match self.provider.kind {
            ProviderKind::Mock => format!("{}-{}", self.provider.model_id, self.mock.fingerprint()),
            _ => self.provider.model_id.clone(),
        }
    }

    pub fn provider_config(&self) -> Result<ProviderConfig, PipelineError> {
        let missing = |field: &str| PipelineError::Config {
            path: PathBuf::from("<config>"),
            message: format!(
                "provider.{field} is required for provider kind {:?}",
                self.provider.kind
            ),
        };
        Ok(match self.provider.kind {
            ProviderKind::Mock => ProviderConfig::Mock {
                model_id: self.effective_model_id(),
                spec: self.mock.clone(),
            },
            ProviderKind::File => ProviderConfig::File {
                model_id: self.provider.model_id.clone(),
                path: self.provider.path.clone().ok_or_else(|| missing("path"))?,
            },
            ProviderKind::Remote => ProviderConfig::Remote {
                model_id: self.provider.model_id.clone(),
                endpoint: self
                    .provider
                    .endpoint
                    .clone()
                    .ok_or_else(|| missing("endpoint"))?,
                batch_size: self.provider.batch_size,
                timeout_secs: self.provider.timeout_secs,
            },
        })
    }

    pub fn prompts_dir(&self) -> PathBuf {
        self.run.output_dir.join("prompts")
    }

    pub fn embeddings_dir(&self) -> PathBuf {
        self.run.output_dir.join("embeddings")
    }

    pub fn analysis_dir(&self) -> PathBuf {
        self.run.output_dir.join("analysis")
    }

    pub fn crosslang_dir(&self) -> PathBuf {
        self.run.output_dir.join("crosslang")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.run.output_dir.join("report")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[run]
languages = ["en", "de"]

[provider]
kind = "mock"
model_id = "mock"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let cfg = RunConfig::parse(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(cfg.run.output_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.data.dir, PathBuf::from("/base/data"));
        assert_eq!(cfg.run.jobs, 1);
        assert_eq!(cfg.mock, default_mock());
        assert_eq!(cfg.analysis.notable_r, 0.30);
        assert_eq!(cfg.analysis.method(), CorrelationMethod::Pearson);
    }

    #[test]
    fn full_file_parses() {
        let text = r#"
[run]
languages = ["en"]
output_dir = "/abs/out"
jobs = 4

[data]
dir = "d"
prompts_dir = "p"

[provider]
kind = "remote"
model_id = "distiluse"
endpoint = "http://localhost:8000"
batch_size = 16

[mock]
seed = 3
dim = 8
noise = 0.5
axis = 2
offsets = { west = 2.0, east = -2.0, high = 1.0, low = -1.0 }

[analysis]
notable_r = 0.25
spearman = true
exclude_countries = ["XK", "GB"]
"#;
        let cfg = RunConfig::parse(text, Path::new("/b")).unwrap();
        assert_eq!(cfg.run.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(cfg.data.prompts_dir, Some(PathBuf::from("/b/p")));
        assert_eq!(cfg.mock.axis, Some(2));
        assert_eq!(cfg.analysis.method(), CorrelationMethod::Spearman);
        match cfg.provider_config().unwrap() {
            ProviderConfig::Remote {
                batch_size,
                timeout_secs,
                ..
            } => {
                assert_eq!(batch_size, 16);
                assert_eq!(timeout_secs, 60);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::parse(
            "[run]\nlanguages = []\n[provider]\nkind = \"mock\"\nmodel_id = \"m\"",
            Path::new(".")
        )
        .is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\n[extra]\nx = 1"), Path::new(".")).is_err());
        assert!(RunConfig::parse(
            &MINIMAL.replace("\"mock\"\nmodel", "\"gpu\"\nmodel"),
            Path::new(".")
        )
        .is_err());
        let file = MINIMAL.replace("kind = \"mock\"", "kind = \"file\"");
        let cfg = RunConfig::parse(&file, Path::new(".")).unwrap();
        assert!(cfg.provider_config().is_err());
    }

    #[test]
    fn language_selection() {
        let mut cfg = RunConfig::parse(MINIMAL, Path::new(".")).unwrap();
        match cfg.clone().select_language("xx") {
            Err(PipelineError::UnconfiguredLanguage { language, .. }) => assert_eq!(language, "xx"),
            other => panic!("unexpected {other:?}"),
        }
        cfg.select_language("de").unwrap();
        assert_eq!(cfg.run.languages, vec!["de".to_string()]);
    }

    #[test]
    fn mock_cache_identity_tracks_mock_settings() {
        let a = RunConfig::parse(MINIMAL, Path::new(".")).unwrap();
        let mut b = a.clone();
        assert_eq!(a.effective_model_id(), b.effective_model_id());
        b.mock.seed = 8;
        assert_ne!(a.effective_model_id(), b.effective_model_id());
    }
}
